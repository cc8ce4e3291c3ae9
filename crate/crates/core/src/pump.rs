//! Pump spectral amplitudes.
//!
//! Pulsed modes are normalized so that `∫ |φ_p(ω)|² dω = 1`. A CW pump has no
//! finite spectral density; callers branch on [`PumpSpec::is_cw`] and evaluate
//! the CW case analytically at the pump frequency.

use std::f64::consts::{LN_2, PI};
use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tcmt::ResonanceBand;
use crate::units::wavelength_nm_to_omega;

const MIN_TABULATED_SAMPLES: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum PumpSpec {
    Cw {
        omega_p0: f64,
    },
    /// `fwhm` is the full width at half maximum of `|φ_p|²`.
    Gaussian {
        omega_p0: f64,
        fwhm: f64,
    },
    /// Linear interpolation of normalized amplitudes; zero outside the sample range.
    Tabulated {
        omegas: Vec<f64>,
        amplitudes: Vec<f64>,
    },
}

impl PumpSpec {
    pub fn cw(omega_p0: f64) -> Result<Self> {
        if !(omega_p0 > 0.0) {
            return Err(Error::invalid("pump frequency must be positive"));
        }
        Ok(PumpSpec::Cw { omega_p0 })
    }

    pub fn gaussian(omega_p0: f64, fwhm: f64) -> Result<Self> {
        if !(omega_p0 > 0.0) {
            return Err(Error::invalid("pump frequency must be positive"));
        }
        if !(fwhm > 0.0 && fwhm.is_finite()) {
            return Err(Error::invalid(format!(
                "gaussian pump fwhm must be positive, got {fwhm}"
            )));
        }
        Ok(PumpSpec::Gaussian { omega_p0, fwhm })
    }

    /// Builds a tabulated pump from `(ω, amplitude)` samples and normalizes it.
    ///
    /// Samples may arrive in any order (wavelength-ordered files are descending in ω).
    pub fn tabulated(mut samples: Vec<(f64, f64)>) -> Result<Self> {
        if samples.len() < MIN_TABULATED_SAMPLES {
            return Err(Error::invalid(format!(
                "tabulated pump needs at least {MIN_TABULATED_SAMPLES} samples, got {}",
                samples.len()
            )));
        }
        if samples.iter().any(|&(w, a)| !w.is_finite() || !a.is_finite()) {
            return Err(Error::invalid("tabulated pump samples must be finite"));
        }
        if samples.iter().any(|&(_, a)| a < 0.0) {
            return Err(Error::invalid("tabulated pump amplitudes must be non-negative"));
        }
        samples.sort_by(|a, b| a.0.total_cmp(&b.0));
        if samples.windows(2).any(|p| p[1].0 <= p[0].0) {
            return Err(Error::invalid(
                "tabulated pump frequencies must be strictly increasing",
            ));
        }
        let (omegas, raw): (Vec<f64>, Vec<f64>) = samples.into_iter().unzip();
        let norm = piecewise_linear_square_integral(&omegas, &raw);
        if !(norm > 0.0) {
            return Err(Error::invalid(
                "tabulated pump needs at least one positive amplitude",
            ));
        }
        let scale = norm.sqrt().recip();
        let amplitudes = raw.iter().map(|a| a * scale).collect();
        Ok(PumpSpec::Tabulated { omegas, amplitudes })
    }

    pub fn is_cw(&self) -> bool {
        matches!(self, PumpSpec::Cw { .. })
    }

    /// Nominal center: the CW/Gaussian frequency, or the intensity-weighted mean of a table.
    pub fn center(&self) -> f64 {
        match self {
            PumpSpec::Cw { omega_p0 } | PumpSpec::Gaussian { omega_p0, .. } => *omega_p0,
            PumpSpec::Tabulated { omegas, amplitudes } => {
                let (num, den) = omegas
                    .iter()
                    .zip(amplitudes)
                    .fold((0.0, 0.0), |(n, d), (w, a)| (n + w * a * a, d + a * a));
                num / den
            }
        }
    }

    /// Half-width of the frequency window outside which the amplitude is negligible
    /// (or zero), measured from `reference`.
    pub fn support_halfwidth(&self, reference: f64) -> f64 {
        match self {
            PumpSpec::Cw { omega_p0 } => (omega_p0 - reference).abs(),
            PumpSpec::Gaussian { omega_p0, fwhm } => (omega_p0 - reference).abs() + 3.0 * fwhm,
            PumpSpec::Tabulated { omegas, .. } => {
                let lo = omegas[0];
                let hi = omegas[omegas.len() - 1];
                (reference - lo).abs().max((hi - reference).abs())
            }
        }
    }
}

/// Normalized real pump amplitude `φ_p(ω)`; flat spectral phase.
pub fn pump_amplitude(p: &PumpSpec, omega: f64) -> Result<f64> {
    match p {
        PumpSpec::Cw { .. } => Err(Error::ModeMismatch),
        _ => Ok(pulsed_amplitude(p, omega)),
    }
}

/// Infallible evaluation for pulsed modes; returns 0 for CW.
pub(crate) fn pulsed_amplitude(p: &PumpSpec, omega: f64) -> f64 {
    match p {
        PumpSpec::Cw { .. } => 0.0,
        PumpSpec::Gaussian { omega_p0, fwhm } => {
            let peak_density = 2.0 * (LN_2 / PI).sqrt() / fwhm;
            let x = (omega - omega_p0) / fwhm;
            peak_density.sqrt() * (-2.0 * LN_2 * x * x).exp()
        }
        PumpSpec::Tabulated { omegas, amplitudes } => interpolate(omegas, amplitudes, omega),
    }
}

pub fn is_cw(p: &PumpSpec) -> bool {
    p.is_cw()
}

/// Gaussian whose intensity FWHM is twice the ring's intensity linewidth `2 gamma_tot`.
pub fn default_pulsed_pump(b_pump: &ResonanceBand) -> PumpSpec {
    PumpSpec::Gaussian {
        omega_p0: b_pump.omega0,
        fwhm: 2.0 * b_pump.linewidth(),
    }
}

fn interpolate(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    if x < xs[0] || x > xs[xs.len() - 1] {
        return 0.0;
    }
    let k = xs.partition_point(|&v| v <= x);
    if k == 0 {
        return ys[0];
    }
    if k >= xs.len() {
        return ys[xs.len() - 1];
    }
    let (x0, x1) = (xs[k - 1], xs[k]);
    let s = (x - x0) / (x1 - x0);
    ys[k - 1] + s * (ys[k] - ys[k - 1])
}

/// Exact ∫ y(ω)² dω for the piecewise-linear interpolant through the samples.
fn piecewise_linear_square_integral(xs: &[f64], ys: &[f64]) -> f64 {
    xs.windows(2)
        .zip(ys.windows(2))
        .map(|(x, y)| (x[1] - x[0]) * (y[0] * y[0] + y[0] * y[1] + y[1] * y[1]) / 3.0)
        .sum()
}

/// Reads a two-column `wavelength_nm amplitude` table (whitespace or comma
/// separated, `#` comments). With `power_values`, the second column is a
/// power spectrum and its square root is taken before normalization.
pub fn read_tabulated_pump<R: Read>(mut reader: R, power_values: bool) -> Result<PumpSpec> {
    let mut text = String::new();
    reader
        .read_to_string(&mut text)
        .map_err(|e| Error::parse(0, e.to_string()))?;
    let mut samples = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx as u64 + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|s| !s.is_empty())
            .collect();
        if fields.len() != 2 {
            return Err(Error::parse(line_no, "expected `wavelength_nm amplitude`"));
        }
        let lambda: f64 = fields[0]
            .parse()
            .map_err(|_| Error::parse(line_no, format!("bad wavelength `{}`", fields[0])))?;
        let value: f64 = fields[1]
            .parse()
            .map_err(|_| Error::parse(line_no, format!("bad amplitude `{}`", fields[1])))?;
        if !(lambda > 0.0) {
            return Err(Error::parse(line_no, "wavelength must be positive"));
        }
        if value < 0.0 {
            return Err(Error::parse(line_no, "amplitude must be non-negative"));
        }
        let amp = if power_values { value.sqrt() } else { value };
        samples.push((wavelength_nm_to_omega(lambda), amp));
    }
    PumpSpec::tabulated(samples)
}
