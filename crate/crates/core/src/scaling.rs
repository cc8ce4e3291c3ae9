//! Loss-scaling laws for an N-ring chain.
//!
//! Closed forms for stimulated, filter-free spontaneous and incoherent emission
//! with a per-drop transmittance `T`, the brute-force amplitude sums they come
//! from, and the lossless-filtering asymptotics built on integrals of
//! Lorentzian powers.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Process {
    Stimulated,
    SpontaneousUnfiltered,
    Incoherent,
    SpontaneousFullCw,
    SpontaneousFullPulsed,
    Asymptotic,
}

impl Process {
    pub fn name(&self) -> &'static str {
        match self {
            Process::Stimulated => "stimulated",
            Process::SpontaneousUnfiltered => "spontaneous_unfiltered",
            Process::Incoherent => "incoherent",
            Process::SpontaneousFullCw => "spontaneous_full_cw",
            Process::SpontaneousFullPulsed => "spontaneous_full_pulsed",
            Process::Asymptotic => "asymptotic",
        }
    }
}

impl std::fmt::Display for Process {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Process {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            Process::Stimulated,
            Process::SpontaneousUnfiltered,
            Process::Incoherent,
            Process::SpontaneousFullCw,
            Process::SpontaneousFullPulsed,
            Process::Asymptotic,
        ]
        .into_iter()
        .find(|p| p.name() == s)
        .ok_or_else(|| Error::invalid(format!("unknown process `{s}`")))
    }
}

/// Normalized intensity versus ring count.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingSeries {
    pub process: Process,
    pub t_d: f64,
    pub values: BTreeMap<usize, f64>,
}

impl ScalingSeries {
    /// Wraps externally computed values; `values[1]` must be 1.
    pub fn new(process: Process, t_d: f64, values: BTreeMap<usize, f64>) -> Result<Self> {
        check_td(t_d)?;
        match values.get(&1) {
            Some(v) if (v - 1.0).abs() <= 1e-12 => {}
            _ => return Err(Error::invalid("series must start at N = 1 with value 1")),
        }
        if values.values().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::invalid("series values must be finite and non-negative"));
        }
        Ok(Self {
            process,
            t_d,
            values,
        })
    }

    /// `N = 1..=n_max` from one of the closed forms (or the normalized asymptotic rate).
    pub fn closed_form(process: Process, t_d: f64, n_max: usize) -> Result<Self> {
        if n_max < 1 {
            return Err(Error::invalid("n_max must be at least 1"));
        }
        let f: fn(usize, f64) -> Result<f64> = match process {
            Process::Stimulated => xi_stim,
            Process::SpontaneousUnfiltered => xi_spont_unfiltered,
            Process::Incoherent => xi_incoherent,
            Process::Asymptotic => |n, t| {
                Ok((ln_asymptotic_beta2(n, t)? - ln_asymptotic_beta2(1, t)?).exp())
            },
            _ => {
                return Err(Error::invalid(format!(
                    "{process} has no closed form; it needs the JSA model"
                )))
            }
        };
        let values = (1..=n_max)
            .map(|n| Ok((n, f(n, t_d)?)))
            .collect::<Result<BTreeMap<_, _>>>()?;
        Self::new(process, t_d, values)
    }
}

fn check_td(t_d: f64) -> Result<()> {
    if !(t_d > 0.0 && t_d <= 1.0) {
        return Err(Error::invalid(format!(
            "drop transmittance must lie in (0, 1], got {t_d}"
        )));
    }
    Ok(())
}

fn check_n(n: usize) -> Result<()> {
    if n < 1 {
        return Err(Error::invalid("ring count must be at least 1"));
    }
    Ok(())
}

/// `(1 − T^k)/(1 − T)`, i.e. `Σ_{j<k} T^j`.
fn geometric(t: f64, k: usize) -> f64 {
    if t == 1.0 {
        k as f64
    } else {
        (1.0 - t.powf(k as f64)) / (1.0 - t)
    }
}

/// `T^(N−1) ((1 − T^N)/(1 − T))²`.
pub fn xi_stim(n: usize, t_d: f64) -> Result<f64> {
    check_n(n)?;
    check_td(t_d)?;
    let nf = n as f64;
    if t_d == 1.0 {
        return Ok(nf * nf);
    }
    let g = geometric(t_d, n);
    Ok(((nf - 1.0) * t_d.ln()).exp() * g * g)
}

/// `T^(N−1) N²`: every ring contributes the same amplitude, pair filtering ignored.
pub fn xi_spont_unfiltered(n: usize, t_d: f64) -> Result<f64> {
    check_n(n)?;
    check_td(t_d)?;
    let nf = n as f64;
    if t_d == 1.0 {
        return Ok(nf * nf);
    }
    Ok(((nf - 1.0) * t_d.ln()).exp() * nf * nf)
}

/// `T^(N−1) (1 − T^(2N))/(1 − T²)`: independent emitters.
pub fn xi_incoherent(n: usize, t_d: f64) -> Result<f64> {
    check_n(n)?;
    check_td(t_d)?;
    let nf = n as f64;
    if t_d == 1.0 {
        return Ok(nf);
    }
    Ok(((nf - 1.0) * t_d.ln()).exp() * geometric(t_d * t_d, n))
}

/// Per-ring field amplitudes reaching the last drop port, normalized so a single ring gives 1.
fn ring_amplitudes(n: usize, t_d: f64, process: Process) -> Result<Vec<f64>> {
    let nf = n as f64;
    match process {
        // seed and pump both attenuate on the way in, the generated field on the way out
        Process::Stimulated | Process::Incoherent => Ok((1..=n)
            .map(|j| t_d.powf((nf - 3.0) / 2.0 + j as f64))
            .collect()),
        // pump loss in front of ring j and pair loss behind it always total N − 1 drops
        Process::SpontaneousUnfiltered => Ok(vec![t_d.powf((nf - 1.0) / 2.0); n]),
        other => Err(Error::invalid(format!(
            "no amplitude-sum model for process {other}"
        ))),
    }
}

/// Direct summation: `|Σ A_j|²` (coherent processes) or `Σ |A_j|²` (incoherent).
pub fn amplitude_sum_oracle(n: usize, t_d: f64, process: Process) -> Result<f64> {
    check_n(n)?;
    check_td(t_d)?;
    let a = ring_amplitudes(n, t_d, process)?;
    Ok(match process {
        Process::Incoherent => a.iter().map(|x| x * x).sum(),
        _ => {
            let s: f64 = a.iter().sum();
            s * s
        }
    })
}

/// `∫ L^i dω = √π γ Γ(i − ½)/Γ(i)` for `L = γ²/(ω² + γ²)`.
pub fn lorentzian_power_integral(i: usize, gamma_tot: f64) -> Result<f64> {
    if i < 1 {
        return Err(Error::invalid("Lorentzian power must be at least 1"));
    }
    if !(gamma_tot > 0.0) {
        return Err(Error::invalid("gamma_tot must be positive"));
    }
    let x = i as f64;
    Ok(PI.sqrt() * gamma_tot * (ln_gamma(x - 0.5) - ln_gamma(x)).exp())
}

/// Large-`i` form `γ √(π/i)`.
pub fn lorentzian_power_integral_asymptotic(i: usize, gamma_tot: f64) -> Result<f64> {
    if i < 1 {
        return Err(Error::invalid("Lorentzian power must be at least 1"));
    }
    Ok(gamma_tot * (PI / i as f64).sqrt())
}

/// `Σ_{i=1}^{N} i/√(i+1) + Σ_{i=1}^{N−1} i/√(2N−i+1)`: the filtering factor of `|β_N|²` at `T = 1`.
pub fn asymptotic_filter_sum(n: usize) -> Result<f64> {
    check_n(n)?;
    let first: f64 = (1..=n).map(|i| i as f64 / ((i + 1) as f64).sqrt()).sum();
    let second: f64 = (1..n)
        .map(|i| i as f64 / ((2 * n - i + 1) as f64).sqrt())
        .sum();
    Ok(first + second)
}

/// First partial sum alone, `Σ_{i=1}^{N} i/√(i+1)`.
pub fn asymptotic_first_sum(n: usize) -> Result<f64> {
    check_n(n)?;
    Ok((1..=n).map(|i| i as f64 / ((i + 1) as f64).sqrt()).sum())
}

/// Integral stand-in for the first sum, `(2/3)√(N+1)(N−2) + 4/3`.
pub fn asymptotic_first_sum_integral(n: usize) -> f64 {
    let nf = n as f64;
    2.0 / 3.0 * (nf + 1.0).sqrt() * (nf - 2.0) + 4.0 / 3.0
}

/// `|β_N|² ∝ T^(2N) × asymptotic_filter_sum(N)`.
pub fn asymptotic_beta2(n: usize, t_d: f64) -> Result<f64> {
    Ok(ln_asymptotic_beta2(n, t_d)?.exp())
}

/// Natural log of [`asymptotic_beta2`]; stays finite where `T^(2N)` underflows.
pub fn ln_asymptotic_beta2(n: usize, t_d: f64) -> Result<f64> {
    check_td(t_d)?;
    Ok(2.0 * n as f64 * t_d.ln() + asymptotic_filter_sum(n)?.ln())
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(points: &[(f64, f64)]) -> Result<f64> {
    if points.len() < 3 {
        return Err(Error::invalid(format!(
            "slope fit needs at least 3 points, got {}",
            points.len()
        )));
    }
    if points.iter().any(|&(x, y)| !(x > 0.0) || !(y > 0.0)) {
        return Err(Error::invalid("log-log fit needs positive values"));
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    linear_slope(&logs)
}

pub(crate) fn linear_slope(points: &[(f64, f64)]) -> Result<f64> {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let (sxy, sxx) = points.iter().fold((0.0, 0.0), |(a, b), &(x, y)| {
        (a + (x - mx) * (y - my), b + (x - mx) * (x - mx))
    });
    if !(sxx > 0.0) {
        return Err(Error::invalid("slope fit needs distinct abscissae"));
    }
    Ok(sxy / sxx)
}

/// Exponent `b` in `|β_N|² ∝ T^(2N) N^b`, fitted over `N ∈ [n_min, n_max]`.
///
/// The loss factor is removed in the log domain before fitting.
pub fn asymptotic_exponent(n_min: usize, n_max: usize, t_d: f64) -> Result<f64> {
    if n_min < 10 {
        return Err(Error::invalid("asymptotic fit starts at N >= 10"));
    }
    if n_max < n_min + 2 {
        return Err(Error::invalid("asymptotic fit needs at least 3 points"));
    }
    check_td(t_d)?;
    let logs = (n_min..=n_max)
        .map(|n| {
            let ln_b = ln_asymptotic_beta2(n, t_d)? - 2.0 * n as f64 * t_d.ln();
            Ok(((n as f64).ln(), ln_b))
        })
        .collect::<Result<Vec<_>>>()?;
    linear_slope(&logs)
}

/// `T_d = (1 − 1/(2(1+ξ)))²` with `ξ = Q_i/Q_e`, as quoted alongside the main results.
///
/// The coupled-mode value for the same `ξ` is [`td_from_xi_tcmt`]; the two differ
/// by about 0.1 dB at the device's `ξ`.
pub fn td_from_xi(xi: f64) -> Result<f64> {
    if !(xi > 0.0) {
        return Err(Error::invalid(format!("xi must be positive, got {xi}")));
    }
    let a = 1.0 - 1.0 / (2.0 * (1.0 + xi));
    Ok(a * a)
}

/// `T_d = (2γ_e/γ_tot)² = (2ξ/(2ξ + 1))²`.
pub fn td_from_xi_tcmt(xi: f64) -> Result<f64> {
    if !(xi > 0.0) {
        return Err(Error::invalid(format!("xi must be positive, got {xi}")));
    }
    let a = 2.0 * xi / (2.0 * xi + 1.0);
    Ok(a * a)
}
