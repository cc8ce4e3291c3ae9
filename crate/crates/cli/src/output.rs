//! CSV emission: nine significant digits, `.` separator, LF endings, and
//! write-then-rename so a reader never sees a half-written file.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::CliError;

pub fn num(x: f64) -> String {
    format!("{x:.8e}")
}

pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Self {
        Self {
            header: header.iter().map(|s| s.as_ref().to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.join(","));
            s.push('\n');
        }
        s
    }
}

pub struct OutDir {
    root: PathBuf,
}

impl OutDir {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(root).map_err(|e| CliError::io(root, e))?;
        Ok(Self {
            root: root.to_path_buf(),
        })
    }

    pub fn write(&self, name: &str, contents: &str) -> Result<PathBuf, CliError> {
        let dest = self.root.join(name);
        let tmp = self.root.join(format!(".{name}.tmp"));
        let mut f = fs::File::create(&tmp).map_err(|e| CliError::io(&tmp, e))?;
        f.write_all(contents.as_bytes())
            .and_then(|_| f.sync_all())
            .map_err(|e| CliError::io(&tmp, e))?;
        drop(f);
        fs::rename(&tmp, &dest).map_err(|e| CliError::io(&dest, e))?;
        Ok(dest)
    }

    pub fn write_table(&self, name: &str, t: &Table) -> Result<PathBuf, CliError> {
        self.write(name, &t.render())
    }
}

/// Every `stride`-th index of `0..len`, always keeping the last one.
pub fn decimate(len: usize, max_points: usize) -> Vec<usize> {
    if len == 0 {
        return Vec::new();
    }
    let stride = (len - 1).div_ceil(max_points.max(2) - 1).max(1);
    let mut idx: Vec<usize> = (0..len).step_by(stride).collect();
    if *idx.last().unwrap() != len - 1 {
        idx.push(len - 1);
    }
    idx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_format_is_fixed() {
        assert_eq!(num(1.0), "1.00000000e0");
        assert_eq!(num(-0.00123456789), "-1.23456789e-3");
    }

    #[test]
    fn decimation_keeps_ends() {
        let idx = decimate(801, 101);
        assert_eq!(idx.len(), 101);
        assert_eq!(idx[0], 0);
        assert_eq!(*idx.last().unwrap(), 800);
        assert_eq!(decimate(5, 101), vec![0, 1, 2, 3, 4]);
        let odd = decimate(10, 4);
        assert_eq!(*odd.last().unwrap(), 9);
    }
}
