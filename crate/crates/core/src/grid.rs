//! Uniform frequency grids, sampled spectra and trapezoid quadrature.
//!
//! All frequencies are angular frequencies in rad/s. Sums over grid nodes use
//! a fixed pairwise reduction so results do not depend on how callers split
//! the work.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A uniform grid symmetric about `center`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrequencyGrid {
    center: f64,
    halfspan: f64,
    points: usize,
}

impl FrequencyGrid {
    pub fn new(center: f64, halfspan: f64, points: usize) -> Result<Self> {
        if !(halfspan > 0.0) || !halfspan.is_finite() {
            return Err(Error::invalid(format!(
                "grid halfspan must be positive and finite, got {halfspan}"
            )));
        }
        if !center.is_finite() {
            return Err(Error::invalid("grid center must be finite"));
        }
        if points < 3 {
            return Err(Error::invalid(format!(
                "grid needs at least 3 points, got {points}"
            )));
        }
        Ok(Self {
            center,
            halfspan,
            points,
        })
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    pub fn halfspan(&self) -> f64 {
        self.halfspan
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.halfspan / (self.points - 1) as f64
    }

    pub fn start(&self) -> f64 {
        self.center - self.halfspan
    }

    /// Node `i`, computed symmetrically so that mirrored nodes are exact negatives
    /// of each other relative to the center.
    pub fn node(&self, i: usize) -> f64 {
        let offset = (2.0 * i as f64 - (self.points - 1) as f64) / (self.points - 1) as f64;
        self.center + offset * self.halfspan
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.points).map(|i| self.node(i)).collect()
    }

    /// Composite trapezoid weight of node `i` (spacing included).
    pub fn weight(&self, i: usize) -> f64 {
        let h = self.spacing();
        if i == 0 || i + 1 == self.points {
            0.5 * h
        } else {
            h
        }
    }

    /// Same grid shape, shifted to a new center.
    pub fn recentered(&self, center: f64) -> Self {
        Self { center, ..*self }
    }
}

/// Convenience constructor mirroring [`FrequencyGrid::new`].
pub fn make_grid(center: f64, halfspan: f64, points: usize) -> Result<FrequencyGrid> {
    FrequencyGrid::new(center, halfspan, points)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSpectrum {
    grid: FrequencyGrid,
    values: Vec<Complex64>,
}

impl ComplexSpectrum {
    pub fn new(grid: FrequencyGrid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.points() {
            return Err(Error::invalid(format!(
                "spectrum has {} values for a {}-point grid",
                values.len(),
                grid.points()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: FrequencyGrid, f: impl Fn(f64) -> Complex64) -> Self {
        let values = grid.nodes().into_iter().map(f).collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }
}

/// Real-valued samples, used for intensity spectra.
#[derive(Debug, Clone, PartialEq)]
pub struct RealSpectrum {
    grid: FrequencyGrid,
    values: Vec<f64>,
}

impl RealSpectrum {
    pub fn new(grid: FrequencyGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.points() {
            return Err(Error::invalid(format!(
                "spectrum has {} values for a {}-point grid",
                values.len(),
                grid.points()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: FrequencyGrid, f: impl Fn(f64) -> f64) -> Self {
        let values = grid.nodes().into_iter().map(f).collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Row-major samples on `grid1 × grid2`; row index runs over `grid1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexGrid2D {
    grid1: FrequencyGrid,
    grid2: FrequencyGrid,
    values: Vec<Complex64>,
}

impl ComplexGrid2D {
    pub fn new(grid1: FrequencyGrid, grid2: FrequencyGrid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid1.points() * grid2.points() {
            return Err(Error::invalid(format!(
                "matrix has {} values for a {}x{} grid",
                values.len(),
                grid1.points(),
                grid2.points()
            )));
        }
        Ok(Self {
            grid1,
            grid2,
            values,
        })
    }

    pub fn from_fn(
        grid1: FrequencyGrid,
        grid2: FrequencyGrid,
        f: impl Fn(f64, f64) -> Complex64,
    ) -> Self {
        let n2 = grid2.points();
        let mut values = Vec::with_capacity(grid1.points() * n2);
        for i in 0..grid1.points() {
            let w1 = grid1.node(i);
            values.extend((0..n2).map(|j| f(w1, grid2.node(j))));
        }
        Self {
            grid1,
            grid2,
            values,
        }
    }

    pub fn grid1(&self) -> &FrequencyGrid {
        &self.grid1
    }

    pub fn grid2(&self) -> &FrequencyGrid {
        &self.grid2
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.values[i * self.grid2.points() + j]
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        let n2 = self.grid2.points();
        &self.values[i * n2..(i + 1) * n2]
    }
}

const PAIRWISE_BLOCK: usize = 64;

/// Pairwise (cascade) summation with a fixed split order.
pub fn pairwise_sum(xs: &[Complex64]) -> Complex64 {
    if xs.len() <= PAIRWISE_BLOCK {
        return xs.iter().fold(Complex64::new(0.0, 0.0), |acc, &x| acc + x);
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

pub fn pairwise_sum_real(xs: &[f64]) -> f64 {
    if xs.len() <= PAIRWISE_BLOCK {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum_real(&xs[..mid]) + pairwise_sum_real(&xs[mid..])
}

/// Composite trapezoid ∫ f(ω) dω over the grid span.
pub fn integrate_1d(f: &ComplexSpectrum) -> Complex64 {
    let g = f.grid();
    let terms: Vec<Complex64> = f
        .values()
        .iter()
        .enumerate()
        .map(|(i, &v)| v * g.weight(i))
        .collect();
    pairwise_sum(&terms)
}

pub fn integrate_1d_real(f: &RealSpectrum) -> f64 {
    let g = f.grid();
    let terms: Vec<f64> = f
        .values()
        .iter()
        .enumerate()
        .map(|(i, &v)| v * g.weight(i))
        .collect();
    pairwise_sum_real(&terms)
}

/// ∫ a(ω) b*(ω) dω for two spectra on the same grid.
pub fn inner_1d(a: &ComplexSpectrum, b: &ComplexSpectrum) -> Result<Complex64> {
    if a.grid() != b.grid() {
        return Err(Error::invalid("spectra live on different grids"));
    }
    let g = a.grid();
    let terms: Vec<Complex64> = a
        .values()
        .iter()
        .zip(b.values())
        .enumerate()
        .map(|(i, (&x, &y))| x * y.conj() * g.weight(i))
        .collect();
    Ok(pairwise_sum(&terms))
}

/// Iterated trapezoid ∬ f(ω₁, ω₂) dω₁ dω₂.
pub fn integrate_2d(f: &ComplexGrid2D) -> Complex64 {
    reduce_2d(f.grid1(), f.grid2(), |i, j| f.get(i, j))
}

/// ∬ a b* for two matrices on the same grids.
pub fn inner_2d(a: &ComplexGrid2D, b: &ComplexGrid2D) -> Result<Complex64> {
    if a.grid1() != b.grid1() || a.grid2() != b.grid2() {
        return Err(Error::invalid("matrices live on different grids"));
    }
    Ok(reduce_2d(a.grid1(), a.grid2(), |i, j| {
        a.get(i, j) * b.get(i, j).conj()
    }))
}

fn reduce_2d(
    g1: &FrequencyGrid,
    g2: &FrequencyGrid,
    f: impl Fn(usize, usize) -> Complex64 + Sync,
) -> Complex64 {
    let n2 = g2.points();
    // rows reduce independently, so parallel evaluation leaves the bits unchanged
    let rows: Vec<Complex64> = (0..g1.points())
        .into_par_iter()
        .map(|i| {
            let row: Vec<Complex64> = (0..n2).map(|j| f(i, j) * g2.weight(j)).collect();
            pairwise_sum(&row) * g1.weight(i)
        })
        .collect();
    pairwise_sum(&rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn small_grids_have_expected_nodes() {
        let g = make_grid(0.0, 1.0, 3).unwrap();
        assert_eq!(g.nodes(), vec![-1.0, 0.0, 1.0]);
        let g = make_grid(5.0, 2.0, 5).unwrap();
        assert_eq!(g.nodes(), vec![3.0, 4.0, 5.0, 6.0, 7.0]);
        assert_eq!(g.spacing(), 1.0);
    }

    #[test]
    fn odd_grids_hit_center_exactly() {
        let g = make_grid(1.2e15, 3.1e11, 2001).unwrap();
        assert_eq!(g.node(1000), 1.2e15);
        let nodes = g.nodes();
        for i in 0..1000 {
            let l = nodes[i] - g.center();
            let r = nodes[2000 - i] - g.center();
            assert!((l + r).abs() <= 1e-12 * g.halfspan(), "asymmetric at {i}");
        }
    }

    #[test]
    fn invalid_grids_are_rejected() {
        assert!(matches!(make_grid(0.0, 0.0, 5), Err(Error::InvalidArgument(_))));
        assert!(matches!(make_grid(0.0, -1.0, 5), Err(Error::InvalidArgument(_))));
        assert!(matches!(make_grid(0.0, 1.0, 2), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn constant_integrates_to_span() {
        let g = make_grid(0.0, 1.0, 11).unwrap();
        let f = ComplexSpectrum::from_fn(g, |_| c(1.0));
        assert!((integrate_1d(&f) - c(2.0)).norm() < 1e-14);
    }

    #[test]
    fn odd_function_integrates_to_zero() {
        let g = make_grid(0.0, 3.0, 1001).unwrap();
        let f = ComplexSpectrum::from_fn(g, |w| c(w * w * w - 2.0 * w));
        assert!(integrate_1d(&f).norm() < 1e-12);
    }

    #[test]
    fn lorentzian_integral_is_pi() {
        let g = make_grid(0.0, 200.0, 40001).unwrap();
        let f = ComplexSpectrum::from_fn(g, |w| c(1.0 / (w * w + 1.0)));
        let v = integrate_1d(&f).re;
        // quadrature error against the truncated integral, then the 2/200 tail
        let truncated = 2.0 * 200f64.atan();
        assert!((v - truncated).abs() / truncated < 1e-9);
        let rel = (v - std::f64::consts::PI).abs() / std::f64::consts::PI;
        assert!(rel < 3.5e-3, "{rel}");
    }

    #[test]
    fn trapezoid_error_is_second_order() {
        // Periodic-free smooth integrand on a finite span: exact ∫_{-2}^{2} 1/(1+w²) = 2 atan 2.
        let exact = 2.0 * 2.0f64.atan();
        let err = |points| {
            let g = make_grid(0.0, 2.0, points).unwrap();
            let f = ComplexSpectrum::from_fn(g, |w| c(1.0 / (w * w + 1.0)));
            (integrate_1d(&f).re - exact).abs()
        };
        let ratio = err(101) / err(201);
        assert!((ratio - 4.0).abs() < 0.05, "ratio {ratio}");
    }

    #[test]
    fn unit_square_constant() {
        let g = make_grid(0.5, 0.5, 21).unwrap();
        let f = ComplexGrid2D::from_fn(g, g, |_, _| c(1.0));
        assert!((integrate_2d(&f) - c(1.0)).norm() < 1e-14);
    }

    #[test]
    fn separable_matches_product_of_1d() {
        let g1 = make_grid(0.3, 2.0, 201).unwrap();
        let g2 = make_grid(-1.0, 1.5, 151).unwrap();
        let f = |w: f64| Complex64::new((-w * w).exp(), 0.3 * w);
        let g = |w: f64| Complex64::new(1.0 / (1.0 + w * w), -0.1 * w * w);
        let a = integrate_1d(&ComplexSpectrum::from_fn(g1, f));
        let b = integrate_1d(&ComplexSpectrum::from_fn(g2, g));
        let two = integrate_2d(&ComplexGrid2D::from_fn(g1, g2, |x, y| f(x) * g(y)));
        assert!((two - a * b).norm() / (a * b).norm() < 1e-12);
    }

    #[test]
    fn mismatched_sizes_are_rejected() {
        let g = make_grid(0.0, 1.0, 5).unwrap();
        assert!(ComplexSpectrum::new(g, vec![c(0.0); 4]).is_err());
        assert!(ComplexGrid2D::new(g, g, vec![c(0.0); 24]).is_err());
    }
}
