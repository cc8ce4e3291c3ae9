//! Single-ring coupled-mode responses of a symmetric add-drop resonator.
//!
//! A resonance is described by its center `omega0`, the per-coupler extrinsic
//! decay rate `gamma_e` and the intrinsic decay rate `gamma_i`; the energy
//! amplitude decays at `gamma_tot = 2 gamma_e + gamma_i`. Quality factors follow
//! `Q = omega0 / (2 gamma)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{FrequencyGrid, RealSpectrum};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BandLabel {
    Pump,
    Signal,
    Idler,
}

impl std::fmt::Display for BandLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            BandLabel::Pump => "pump",
            BandLabel::Signal => "signal",
            BandLabel::Idler => "idler",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResonanceBand {
    pub label: BandLabel,
    pub omega0: f64,
    pub gamma_e: f64,
    pub gamma_i: f64,
}

impl ResonanceBand {
    pub fn new(label: BandLabel, omega0: f64, gamma_e: f64, gamma_i: f64) -> Result<Self> {
        if !(omega0 > 0.0 && omega0.is_finite()) {
            return Err(Error::invalid(format!("{label}: omega0 must be positive")));
        }
        if !(gamma_e > 0.0 && gamma_e.is_finite()) {
            return Err(Error::invalid(format!("{label}: gamma_e must be positive")));
        }
        if !(gamma_i >= 0.0 && gamma_i.is_finite()) {
            return Err(Error::invalid(format!("{label}: gamma_i must be non-negative")));
        }
        Ok(Self {
            label,
            omega0,
            gamma_e,
            gamma_i,
        })
    }

    pub fn gamma_tot(&self) -> f64 {
        2.0 * self.gamma_e + self.gamma_i
    }

    pub fn is_lossless(&self) -> bool {
        self.gamma_i == 0.0
    }

    /// Intensity FWHM of the single-ring response, `2 gamma_tot`.
    pub fn linewidth(&self) -> f64 {
        2.0 * self.gamma_tot()
    }
}

/// Loaded, extrinsic and intrinsic quality factors at one resonance.
///
/// `q_i` is `f64::INFINITY` for a lossless resonance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QTriple {
    pub q_tot: f64,
    pub q_e: f64,
    pub q_i: f64,
}

impl QTriple {
    /// Derives `q_i` from `1/q_tot = 2/q_e + 1/q_i`.
    pub fn from_tot_e(q_tot: f64, q_e: f64) -> Result<Self> {
        if !(q_tot > 0.0 && q_e > 0.0) {
            return Err(Error::invalid("quality factors must be positive"));
        }
        let inv_i = 1.0 / q_tot - 2.0 / q_e;
        let tol = 1e-12 / q_tot;
        if inv_i < -tol {
            return Err(Error::InconsistentQ(format!(
                "q_tot = {q_tot} and q_e = {q_e} imply a negative intrinsic loss (need q_e >= 2 q_tot)"
            )));
        }
        let q_i = if inv_i <= tol { f64::INFINITY } else { 1.0 / inv_i };
        Ok(Self { q_tot, q_e, q_i })
    }

    pub fn is_lossless(&self) -> bool {
        self.q_i.is_infinite()
    }

    /// Relative residual of `1/q_tot = 2/q_e + 1/q_i`.
    pub fn consistency_residual(&self) -> f64 {
        let rhs = 2.0 / self.q_e + 1.0 / self.q_i;
        ((1.0 / self.q_tot) - rhs).abs() * self.q_tot
    }
}

/// Builds a band from `q_tot` and `q_e`; `q.q_i` is not consulted.
pub fn band_from_q(label: BandLabel, omega0: f64, q: &QTriple) -> Result<ResonanceBand> {
    let checked = QTriple::from_tot_e(q.q_tot, q.q_e)?;
    let gamma_tot = omega0 / (2.0 * checked.q_tot);
    let gamma_e = omega0 / (2.0 * checked.q_e);
    let gamma_i = if checked.is_lossless() {
        0.0
    } else {
        (gamma_tot - 2.0 * gamma_e).max(0.0)
    };
    ResonanceBand::new(label, omega0, gamma_e, gamma_i)
}

pub fn q_from_band(b: &ResonanceBand) -> QTriple {
    let q_i = if b.gamma_i == 0.0 {
        f64::INFINITY
    } else {
        b.omega0 / (2.0 * b.gamma_i)
    };
    QTriple {
        q_tot: b.omega0 / (2.0 * b.gamma_tot()),
        q_e: b.omega0 / (2.0 * b.gamma_e),
        q_i,
    }
}

/// Band with a fixed loaded Q whose intrinsic loss is set by the on-resonance
/// drop transmittance: `sqrt(t_d) = 2 gamma_e / gamma_tot`.
pub fn band_from_qtot_td(label: BandLabel, omega0: f64, q_tot: f64, t_d: f64) -> Result<ResonanceBand> {
    if !(t_d > 0.0 && t_d <= 1.0) {
        return Err(Error::invalid(format!(
            "drop transmittance must lie in (0, 1], got {t_d}"
        )));
    }
    if !(q_tot > 0.0) {
        return Err(Error::invalid("q_tot must be positive"));
    }
    let gamma_tot = omega0 / (2.0 * q_tot);
    let amp = t_d.sqrt();
    let gamma_e = 0.5 * amp * gamma_tot;
    let gamma_i = gamma_tot * (1.0 - amp);
    ResonanceBand::new(label, omega0, gamma_e, gamma_i)
}

/// Intracavity energy amplitude per unit input, `-i sqrt(2 gamma_e) / (i(ω-ω0) + gamma_tot)`.
pub fn h_transfer(omega: f64, b: &ResonanceBand) -> Complex64 {
    let denom = Complex64::new(b.gamma_tot(), omega - b.omega0);
    Complex64::new(0.0, -(2.0 * b.gamma_e).sqrt()) / denom
}

/// Drop-port field transmission, `2 gamma_e / (i(ω-ω0) + gamma_tot)`.
pub fn drop_amplitude(omega: f64, b: &ResonanceBand) -> Complex64 {
    let denom = Complex64::new(b.gamma_tot(), omega - b.omega0);
    Complex64::new(2.0 * b.gamma_e, 0.0) / denom
}

/// Through-port intensity transmission, `|1 - 2 gamma_e / (i(ω-ω0) + gamma_tot)|²`.
pub fn through_transmittance(omega: f64, b: &ResonanceBand) -> f64 {
    (Complex64::new(1.0, 0.0) - drop_amplitude(omega, b)).norm_sqr()
}

/// On-resonance drop transmittance `(2 gamma_e / gamma_tot)²`.
pub fn td_on_resonance(b: &ResonanceBand) -> f64 {
    let r = 2.0 * b.gamma_e / b.gamma_tot();
    r * r
}

/// `Q_i = Q_tot / (1 - sqrt(T_d))`.
pub fn q_intrinsic_from_td(q_tot: f64, t_d: f64) -> Result<f64> {
    if !(q_tot > 0.0) {
        return Err(Error::invalid("q_tot must be positive"));
    }
    if !(t_d > 0.0) {
        return Err(Error::invalid(format!(
            "drop transmittance must be positive, got {t_d}"
        )));
    }
    if t_d >= 1.0 {
        return Err(Error::LosslessDegenerate(t_d));
    }
    Ok(q_tot / (1.0 - t_d.sqrt()))
}

/// On-resonance through-port extinction in dB, `20 log10(1 - 2 gamma_e / gamma_tot)`.
pub fn extinction_ratio_db(b: &ResonanceBand) -> f64 {
    let r = 1.0 - 2.0 * b.gamma_e / b.gamma_tot();
    if r <= 0.0 {
        f64::NEG_INFINITY
    } else {
        20.0 * r.log10()
    }
}

/// Intensity `|t(ω)|^(2n)` after `n` identical cascaded drops.
pub fn cascade_drop_spectrum(b: &ResonanceBand, n: usize, grid: &FrequencyGrid) -> Result<RealSpectrum> {
    if n < 1 {
        return Err(Error::invalid("cascade needs at least one ring"));
    }
    let exp = n as i32;
    Ok(RealSpectrum::from_fn(*grid, |w| {
        drop_amplitude(w, b).norm_sqr().powi(exp)
    }))
}

/// Closed-form FWHM of `|t|^(2n)`: `2 gamma_tot sqrt(2^(1/n) - 1)`.
pub fn cascade_fwhm_closed_form(b: &ResonanceBand, n: usize) -> f64 {
    2.0 * b.gamma_tot() * (2f64.powf(1.0 / n as f64) - 1.0).sqrt()
}

/// Full width at half maximum of a single-peaked intensity spectrum.
///
/// Crossings are located by linear interpolation between bracketing nodes. A
/// flat-topped maximum is treated as one peak.
pub fn fwhm(spec: &RealSpectrum) -> Result<f64> {
    let v = spec.values();
    let g = spec.grid();
    let (imax, vmax) = v
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, x)| if x > acc.1 { (i, x) } else { acc });
    if !(vmax > 0.0) || !vmax.is_finite() {
        return Err(Error::SpanTooNarrow);
    }
    let half = 0.5 * vmax;
    let h = g.spacing();

    // walk out from the peak to the first nodes at or below half maximum
    let mut left = imax;
    while left > 0 && v[left] > half {
        left -= 1;
    }
    if v[left] > half {
        return Err(Error::SpanTooNarrow);
    }
    let mut right = imax;
    while right + 1 < v.len() && v[right] > half {
        right += 1;
    }
    if v[right] > half {
        return Err(Error::SpanTooNarrow);
    }

    if v[..left].iter().chain(&v[right + 1..]).any(|&x| x > half) {
        return Err(Error::AmbiguousPeak);
    }
    // inside the half-max region the profile must rise then fall
    let slack = 1e-12 * vmax;
    let mut falling = false;
    for k in left..right {
        let d = v[k + 1] - v[k];
        if d < -slack {
            falling = true;
        } else if d > slack && falling {
            return Err(Error::AmbiguousPeak);
        }
    }

    let x_left = g.node(left) + h * (half - v[left]) / (v[left + 1] - v[left]);
    let x_right = g.node(right) - h * (half - v[right]) / (v[right - 1] - v[right]);
    Ok(x_right - x_left)
}
