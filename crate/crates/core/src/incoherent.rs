//! Incoherent array rate rebuilt from rings measured one at a time.
//!
//! Ring `j` pumped alone gives `C_j` coincidences per second. Placed in a chain of
//! `N`, its pairs still cross `N − j` drops, which scales its contribution by the
//! pair transmittance `T_jN`. The independent-emitter rate is `Σ_j T_jN C_j`.

use std::collections::BTreeMap;
use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{make_grid, pairwise_sum_real, FrequencyGrid};
use crate::jsa::ArraySpec;
use crate::scaling::{Process, ScalingSeries};
use crate::tcmt::{drop_amplitude, h_transfer, ResonanceBand};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasuredRings {
    counts: Vec<f64>,
    sigmas: Option<Vec<f64>>,
    p1: f64,
    t_d: f64,
}

impl MeasuredRings {
    pub fn new(counts: Vec<f64>, sigmas: Option<Vec<f64>>, p1: f64, t_d: f64) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::invalid("no ring counts given"));
        }
        if counts.iter().any(|c| !(*c >= 0.0) || !c.is_finite()) {
            return Err(Error::invalid("counts must be finite and non-negative"));
        }
        if let Some(s) = &sigmas {
            if s.len() != counts.len() {
                return Err(Error::invalid("one uncertainty per ring is required"));
            }
            if s.iter().any(|x| !(*x >= 0.0)) {
                return Err(Error::invalid("uncertainties must be non-negative"));
            }
        }
        if !(p1 > 0.0) {
            return Err(Error::invalid("input pump power must be positive"));
        }
        if !(t_d > 0.0 && t_d <= 1.0) {
            return Err(Error::invalid(format!(
                "drop transmittance must lie in (0, 1], got {t_d}"
            )));
        }
        Ok(Self {
            counts,
            sigmas,
            p1,
            t_d,
        })
    }

    pub fn counts(&self) -> &[f64] {
        &self.counts
    }

    pub fn sigmas(&self) -> Option<&[f64]> {
        self.sigmas.as_deref()
    }

    pub fn p1(&self) -> f64 {
        self.p1
    }

    pub fn t_d(&self) -> f64 {
        self.t_d
    }
}

/// Grid over the signal frequency used for `T_jN`; matches the CW JSA line grid.
pub fn default_pair_grid(signal: &ResonanceBand, idler: &ResonanceBand) -> Result<FrequencyGrid> {
    let g = crate::jsa::GridSpec::cw_default();
    make_grid(
        signal.omega0,
        g.span * signal.gamma_tot().max(idler.gamma_tot()),
        g.points,
    )
}

/// Fraction of ring `j`'s pairs that survive the `N − j` drops after it, idler pinned at `2ω_p0 − ω₁`.
pub fn pair_transmittance(
    j: usize,
    n: usize,
    signal: &ResonanceBand,
    idler: &ResonanceBand,
    pump_omega0: f64,
    grid: &FrequencyGrid,
) -> Result<f64> {
    if j < 1 || j > n {
        return Err(Error::invalid(format!("ring index {j} outside 1..={n}")));
    }
    let passes = (n - j) as i32;
    if passes == 0 {
        return Ok(1.0);
    }
    let mut num = Vec::with_capacity(grid.points());
    let mut den = Vec::with_capacity(grid.points());
    for k in 0..grid.points() {
        let w1 = grid.node(k);
        let w2 = 2.0 * pump_omega0 - w1;
        let base = (h_transfer(w1, signal) * h_transfer(w2, idler)).norm_sqr() * grid.weight(k);
        let filt = (drop_amplitude(w1, signal) * drop_amplitude(w2, idler)).norm_sqr();
        den.push(base);
        num.push(base * filt.powi(passes));
    }
    Ok(pairwise_sum_real(&num) / pairwise_sum_real(&den))
}

/// Power used for ring `j` when rings are pumped one at a time: `P₁ T^(j−1)`.
pub fn pump_power_schedule(p1: f64, j: usize, t_d: f64) -> Result<f64> {
    if !(p1 > 0.0) {
        return Err(Error::invalid("input pump power must be positive"));
    }
    if j < 1 {
        return Err(Error::invalid("ring index starts at 1"));
    }
    if !(t_d > 0.0 && t_d <= 1.0) {
        return Err(Error::invalid(format!(
            "drop transmittance must lie in (0, 1], got {t_d}"
        )));
    }
    Ok(p1 * t_d.powi(j as i32 - 1))
}

fn weights(arr: &ArraySpec, grid: &FrequencyGrid, n_prime: usize) -> Result<Vec<f64>> {
    let b = arr.bands();
    (1..=n_prime)
        .map(|j| pair_transmittance(j, n_prime, &b.signal, &b.idler, b.pump.omega0, grid))
        .collect()
}

fn check_counts(meas: &MeasuredRings, arr: &ArraySpec) -> Result<()> {
    if meas.counts.len() < arr.n() {
        return Err(Error::invalid(format!(
            "{} ring counts given for a {}-ring array",
            meas.counts.len(),
            arr.n()
        )));
    }
    if !(meas.counts[0] > 0.0) {
        return Err(Error::invalid("first ring count must be positive to normalize"));
    }
    Ok(())
}

/// `R(N′)/R(1)` for `N′ = 1..=arr.n`, with `R(N′) = Σ_j T_jN′ C_j`.
pub fn incoherent_rate(meas: &MeasuredRings, arr: &ArraySpec, grid: &FrequencyGrid) -> Result<ScalingSeries> {
    check_counts(meas, arr)?;
    let c1 = meas.counts[0];
    let values = (1..=arr.n())
        .map(|np| {
            let w = weights(arr, grid, np)?;
            let r: f64 = w.iter().zip(&meas.counts).map(|(t, c)| t * c).sum();
            Ok((np, r / c1))
        })
        .collect::<Result<BTreeMap<_, _>>>()?;
    ScalingSeries::new(Process::Incoherent, meas.t_d, values)
}

/// One-sigma band of [`incoherent_rate`], propagated in quadrature from the per-ring sigmas.
pub fn incoherent_rate_sigma(
    meas: &MeasuredRings,
    arr: &ArraySpec,
    grid: &FrequencyGrid,
) -> Result<Option<BTreeMap<usize, f64>>> {
    check_counts(meas, arr)?;
    let Some(sig) = &meas.sigmas else {
        return Ok(None);
    };
    let c1 = meas.counts[0];
    (1..=arr.n())
        .map(|np| {
            let w = weights(arr, grid, np)?;
            let v: f64 = w.iter().zip(sig).map(|(t, s)| (t * s).powi(2)).sum();
            Ok((np, v.sqrt() / c1))
        })
        .collect::<Result<BTreeMap<_, _>>>()
        .map(Some)
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
struct CountRow {
    ring_index: usize,
    counts_per_s: f64,
    sigma: Option<f64>,
}

/// Parses `ring_index,counts_per_s[,sigma]` (header row required) into counts and optional sigmas.
pub fn read_counts_csv<R: Read>(reader: R) -> Result<(Vec<f64>, Option<Vec<f64>>)> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::parse(1, e.to_string()))?
        .clone();
    if headers.get(0) != Some("ring_index") || headers.get(1) != Some("counts_per_s") {
        return Err(Error::parse(
            1,
            "header must be `ring_index,counts_per_s[,sigma]`",
        ));
    }
    let mut counts = Vec::new();
    let mut sigmas = Vec::new();
    for (k, rec) in rdr.deserialize::<CountRow>().enumerate() {
        let line = k as u64 + 2;
        let row = rec.map_err(|e| Error::parse(line, e.to_string()))?;
        if row.ring_index != k + 1 {
            return Err(Error::parse(
                line,
                format!("expected ring index {}, found {}", k + 1, row.ring_index),
            ));
        }
        if !(row.counts_per_s >= 0.0) {
            return Err(Error::parse(line, "counts must be non-negative"));
        }
        counts.push(row.counts_per_s);
        sigmas.push(row.sigma);
    }
    if counts.is_empty() {
        return Err(Error::parse(2, "no data rows"));
    }
    let sigmas = if sigmas.iter().all(Option::is_some) {
        Some(sigmas.into_iter().flatten().collect())
    } else if sigmas.iter().all(Option::is_none) {
        None
    } else {
        return Err(Error::parse(2, "sigma column must be given for all rows or none"));
    };
    Ok((counts, sigmas))
}
