//! Parameter recovery: drop transmittance from rate-versus-N curves, resonance
//! parameters from through-port spectra, and power-law slopes.

use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jsa::{rate_curve, ArraySpec, Bands, GridSpec};
use crate::pump::PumpSpec;
use crate::scaling::{log_log_slope, xi_stim};
use crate::tcmt::{band_from_qtot_td, BandLabel, ResonanceBand};
use crate::units::wavelength_nm_to_omega;

const GOLDEN: f64 = 0.618_033_988_749_894_8;

pub const TD_LOWER: f64 = 0.3;
pub const TD_UPPER: f64 = 0.999;
pub const TD_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveProcess {
    Stimulated,
    SpontaneousCw,
    SpontaneousPulsed,
}

impl std::str::FromStr for CurveProcess {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "stimulated" => Ok(CurveProcess::Stimulated),
            "spontaneous_cw" => Ok(CurveProcess::SpontaneousCw),
            "spontaneous_pulsed" => Ok(CurveProcess::SpontaneousPulsed),
            _ => Err(Error::invalid(format!(
                "unknown process `{s}` (expected stimulated, spontaneous_cw or spontaneous_pulsed)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub n: usize,
    pub rate: f64,
    pub sigma: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateCurve {
    process: CurveProcess,
    points: Vec<CurvePoint>,
}

impl RateCurve {
    pub fn new(process: CurveProcess, points: Vec<CurvePoint>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::invalid("rate curve is empty"));
        }
        if points[0].n != 1 {
            return Err(Error::invalid("rate curve must start at N = 1"));
        }
        if points.windows(2).any(|w| w[1].n <= w[0].n) {
            return Err(Error::invalid("N values must be strictly increasing"));
        }
        if points.iter().any(|p| !p.rate.is_finite() || p.rate < 0.0) {
            return Err(Error::invalid("rates must be finite and non-negative"));
        }
        Ok(Self { process, points })
    }

    pub fn process(&self) -> CurveProcess {
        self.process
    }

    pub fn points(&self) -> &[CurvePoint] {
        &self.points
    }

    pub fn n_max(&self) -> usize {
        self.points[self.points.len() - 1].n
    }
}

/// Everything the rate model needs besides `T_d`: centers and loaded Q's of the
/// three resonances, the chain geometry and the pump.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelTemplate {
    pub omega0: [f64; 3],
    pub q_tot: [f64; 3],
    pub spacing_l: f64,
    pub delta_k_bar: f64,
    pub pump: PumpSpec,
    /// Grid used while searching; the reported residual uses `final_grid`.
    pub search_grid: GridSpec,
    pub final_grid: GridSpec,
}

impl ModelTemplate {
    /// Keeps the loaded Q's of `arr` and lets the fit choose the coupling split.
    pub fn from_array(arr: &ArraySpec, pump: PumpSpec) -> Self {
        let b = arr.bands();
        let q = |x: &ResonanceBand| x.omega0 / (2.0 * x.gamma_tot());
        let final_grid = GridSpec::default_for(&pump);
        let search_grid = if pump.is_cw() {
            final_grid
        } else {
            GridSpec {
                points: 401,
                ..final_grid
            }
        };
        Self {
            omega0: [b.pump.omega0, b.signal.omega0, b.idler.omega0],
            q_tot: [q(&b.pump), q(&b.signal), q(&b.idler)],
            spacing_l: arr.spacing_l(),
            delta_k_bar: arr.delta_k_bar(),
            pump,
            search_grid,
            final_grid,
        }
    }

    /// Array of `n` rings whose three bands all drop with transmittance `t_d`.
    pub fn array(&self, n: usize, t_d: f64) -> Result<ArraySpec> {
        let bands = Bands {
            pump: band_from_qtot_td(BandLabel::Pump, self.omega0[0], self.q_tot[0], t_d)?,
            signal: band_from_qtot_td(BandLabel::Signal, self.omega0[1], self.q_tot[1], t_d)?,
            idler: band_from_qtot_td(BandLabel::Idler, self.omega0[2], self.q_tot[2], t_d)?,
        };
        ArraySpec::new(n, self.spacing_l, bands, self.delta_k_bar)
    }

    /// Model curve `N = 1..=n_max` for `process` at drop transmittance `t_d`.
    pub fn model_curve(&self, process: CurveProcess, t_d: f64, n_max: usize, grid: &GridSpec) -> Result<Vec<f64>> {
        match process {
            CurveProcess::Stimulated => (1..=n_max).map(|n| xi_stim(n, t_d)).collect(),
            CurveProcess::SpontaneousCw | CurveProcess::SpontaneousPulsed => {
                let wants_cw = process == CurveProcess::SpontaneousCw;
                if wants_cw != self.pump.is_cw() {
                    return Err(Error::ModeMismatch);
                }
                let arr = self.array(n_max, t_d)?;
                Ok(rate_curve(&arr, &self.pump, grid, n_max)?
                    .into_iter()
                    .map(|p| p.coherent)
                    .collect())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult {
    pub t_d_fit: f64,
    pub residual: f64,
    pub evaluations: usize,
}

/// Bounded golden-section minimization of a 1-D objective.
///
/// Returns `(x, f(x), evaluations)`. The evaluation order depends only on the
/// objective values, so the path is reproducible.
pub fn golden_section<F>(mut f: F, lo: f64, hi: f64, tol: f64) -> Result<(f64, f64, usize)>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(hi > lo) || !(tol > 0.0) {
        return Err(Error::invalid("golden section needs lo < hi and tol > 0"));
    }
    let (mut a, mut b) = (lo, hi);
    let mut c = b - GOLDEN * (b - a);
    let mut d = a + GOLDEN * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    let mut evals = 2;
    // bounded even when `tol` is below the float resolution of the bracket
    let max_iter = ((tol / (hi - lo)).ln() / GOLDEN.ln()).ceil().max(0.0) as usize + 1;
    for _ in 0..max_iter {
        if b - a <= tol {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - GOLDEN * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + GOLDEN * (b - a);
            fd = f(d)?;
        }
        evals += 1;
    }
    Ok(if fc <= fd { (c, fc, evals) } else { (d, fd, evals) })
}

fn sse(model: &[f64], curve: &RateCurve) -> f64 {
    curve
        .points
        .iter()
        .map(|p| (model[p.n - 1] - p.rate).powi(2))
        .sum()
}

/// Least-squares drop transmittance over `(0.3, 0.999)`.
pub fn fit_td(curve: &RateCurve, template: &ModelTemplate) -> Result<FitResult> {
    if curve.points.len() < 3 {
        return Err(Error::Precondition(format!(
            "fit needs at least 3 points, got {}",
            curve.points.len()
        )));
    }
    if (curve.points[0].rate - 1.0).abs() > 1e-6 {
        return Err(Error::Precondition(format!(
            "curve is not normalized: rate at N = 1 is {}",
            curve.points[0].rate
        )));
    }
    let n_max = curve.n_max();
    let objective = |t: f64| -> Result<f64> {
        let m = template.model_curve(curve.process, t, n_max, &template.search_grid)?;
        Ok(sse(&m, curve))
    };
    let (t, mut residual, mut evaluations) = golden_section(objective, TD_LOWER, TD_UPPER, TD_TOLERANCE)?;
    if t - TD_LOWER < TD_TOLERANCE || TD_UPPER - t < TD_TOLERANCE {
        return Err(Error::NoMinimum(format!(
            "best T_d = {t:.5} sits on the search bound"
        )));
    }
    if curve.process != CurveProcess::Stimulated && template.final_grid != template.search_grid {
        let m = template.model_curve(curve.process, t, n_max, &template.final_grid)?;
        residual = sse(&m, curve);
        evaluations += 1;
    }
    Ok(FitResult {
        t_d_fit: t,
        residual,
        evaluations,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectrumFit {
    pub band: ResonanceBand,
    pub residual: f64,
    /// Set when the best fit implied a slightly negative `γ_i`, which was clamped to 0.
    pub clamped: bool,
}

/// `T_H(δ)` for center, loaded rate and coupling fraction `x = 2γ_e/γ_tot`.
fn through_model(omega: f64, w0: f64, gt: f64, x: f64) -> f64 {
    let u = (omega - w0) / gt;
    let re = 1.0 - x / (1.0 + u * u);
    let im = x * u / (1.0 + u * u);
    re * re + im * im
}

const SPECTRUM_MIN_SAMPLES: usize = 10;
const SPECTRUM_MIN_DEPTH: f64 = 0.02;
const SPECTRUM_MAX_PASSES: usize = 200;

/// Least-squares fit of the through-port line shape to `(ω, transmittance)` samples.
///
/// Starts from the deepest sample, a dip depth `1 − (1 − x)²` and a
/// half-depth half-width equal to `γ_tot`, then refines the three parameters by
/// repeated coordinate-wise golden-section passes.
pub fn fit_through_spectrum(data: &[(f64, f64)]) -> Result<SpectrumFit> {
    if data.len() < SPECTRUM_MIN_SAMPLES {
        return Err(Error::invalid(format!(
            "spectrum fit needs at least {SPECTRUM_MIN_SAMPLES} samples"
        )));
    }
    if data.iter().any(|&(w, t)| !w.is_finite() || !t.is_finite()) {
        return Err(Error::invalid("spectrum samples must be finite"));
    }
    let mut pts = data.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));

    let (imin, &(w_min, t_min)) = pts
        .iter()
        .enumerate()
        .min_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
        .expect("non-empty");
    let depth = 1.0 - t_min.max(0.0);
    if depth < SPECTRUM_MIN_DEPTH {
        return Err(Error::NoResonance);
    }
    let level = 1.0 - depth / 2.0;
    let left = (0..imin).rev().find(|&k| pts[k].1 >= level);
    let right = (imin + 1..pts.len()).find(|&k| pts[k].1 >= level);
    let (Some(l), Some(r)) = (left, right) else {
        return Err(Error::NoResonance);
    };
    let cross = |a: (f64, f64), b: (f64, f64)| a.0 + (level - a.1) * (b.0 - a.0) / (b.1 - a.1);
    let w_left = cross(pts[l], pts[l + 1]);
    let w_right = cross(pts[r - 1], pts[r]);
    let mut gt = 0.5 * (w_right - w_left);
    let mut x = 1.0 - t_min.max(0.0).sqrt();
    if !(gt > 0.0) {
        return Err(Error::NoResonance);
    }

    // the center is fitted as an offset from the deepest sample to keep full precision
    let rel: Vec<(f64, f64)> = pts.iter().map(|&(w, t)| (w - w_min, t)).collect();
    let cost = |u: f64, gt: f64, x: f64| -> f64 {
        rel.iter()
            .map(|&(d, t)| (through_model(d, u, gt, x) - t).powi(2))
            .sum()
    };
    let mut u = 0.0;
    let mut best = cost(u, gt, x);
    for _ in 0..SPECTRUM_MAX_PASSES {
        let prev = (u, gt, x);
        let span_u = 0.5 * gt;
        u = golden_section(|v| Ok(cost(v, gt, x)), u - span_u, u + span_u, 1e-12 * span_u)?.0;
        gt = golden_section(|v| Ok(cost(u, v, x)), 0.7 * gt, 1.3 * gt, 1e-12 * gt)?.0;
        x = golden_section(
            |v| Ok(cost(u, gt, v)),
            (x - 0.2).max(0.0),
            (x + 0.2).min(1.05),
            1e-13,
        )?
        .0;
        best = cost(u, gt, x);
        let moved = ((u - prev.0) / gt).abs() + ((gt - prev.1) / gt).abs() + (x - prev.2).abs();
        if moved < 1e-11 {
            break;
        }
    }
    let w0 = w_min + u;

    let clamped = x > 1.0;
    let xc = x.min(1.0);
    let band = ResonanceBand::new(
        BandLabel::Signal,
        w0,
        0.5 * xc * gt,
        (gt * (1.0 - xc)).max(0.0),
    )?;
    Ok(SpectrumFit {
        band,
        residual: best,
        clamped,
    })
}

/// Slope of `ln(rate)` against `ln(power)`.
pub fn power_law_slope(points: &[(f64, f64)]) -> Result<f64> {
    log_log_slope(points)
}

#[derive(Debug, Deserialize)]
struct RateRow {
    #[serde(rename = "N")]
    n: usize,
    rate: f64,
    sigma: Option<f64>,
}

/// Parses `N,rate[,sigma]` with a header row.
pub fn read_rate_curve_csv<R: Read>(reader: R, process: CurveProcess) -> Result<RateCurve> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::parse(1, e.to_string()))?
        .clone();
    if headers.get(0) != Some("N") || headers.get(1) != Some("rate") {
        return Err(Error::parse(1, "header must be `N,rate[,sigma]`"));
    }
    let mut points = Vec::new();
    for (k, rec) in rdr.deserialize::<RateRow>().enumerate() {
        let line = k as u64 + 2;
        let row = rec.map_err(|e| Error::parse(line, e.to_string()))?;
        if row.n < 1 {
            return Err(Error::parse(line, "N must be at least 1"));
        }
        if !row.rate.is_finite() || row.rate < 0.0 {
            return Err(Error::parse(line, "rate must be finite and non-negative"));
        }
        points.push(CurvePoint {
            n: row.n,
            rate: row.rate,
            sigma: row.sigma,
        });
    }
    RateCurve::new(process, points).map_err(|e| Error::parse(0, e.to_string()))
}

#[derive(Debug, Deserialize)]
struct SpectrumRow {
    wavelength_nm: f64,
    transmittance: f64,
}

/// Parses `wavelength_nm,transmittance` (header row) into `(ω, T)` samples.
pub fn read_spectrum_csv<R: Read>(reader: R) -> Result<Vec<(f64, f64)>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut out = Vec::new();
    for (k, rec) in rdr.deserialize::<SpectrumRow>().enumerate() {
        let line = k as u64 + 2;
        let row = rec.map_err(|e| Error::parse(line, e.to_string()))?;
        if !(row.wavelength_nm > 0.0) {
            return Err(Error::parse(line, "wavelength must be positive"));
        }
        out.push((wavelength_nm_to_omega(row.wavelength_nm), row.transmittance));
    }
    Ok(out)
}
