//! Per-source joint spectral amplitudes of an N-ring chain and the rates built from them.
//!
//! Ring `q` is reached by pump light that crossed `q − 1` drop events, and the
//! pair it emits crosses the `N − q` rings after it. Its kernel is therefore
//!
//! ```text
//! j_q = [t_p^(q−1) h_p](ω₃) [t_p^(q−1) h_p](ω₄) [t_s^(N−q) h_s](ω₁) [t_i^(N−q) h_i](ω₂)
//! ```
//!
//! which, with `t = i√(2γ_e) h`, is `(−2√(γ_es γ_ei))^(N−q) (−2γ_ep)^(q−1)
//! h_p^q h_p^q h_s^(N−q+1) h_i^(N−q+1)`. Evaluating it in the factored form keeps
//! every factor bounded, so large `N` neither overflows nor underflows.
//!
//! Pulsed pumps give a 2-D amplitude on a signal × idler grid. A CW pump pins
//! `ω₂ = 2ω_p0 − ω₁`, and the amplitude becomes a 1-D function of `ω₁` along
//! that anti-diagonal; every ratio computed here is unaffected by the dropped
//! delta-function constant.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{
    inner_1d, inner_2d, make_grid, pairwise_sum_real, ComplexGrid2D, ComplexSpectrum,
    FrequencyGrid, RealSpectrum,
};
use crate::pump::{pulsed_amplitude, PumpSpec};
use crate::tcmt::{drop_amplitude, h_transfer, ResonanceBand};

/// Exponents above this are evaluated in log-magnitude/phase form.
const POLAR_POWER_THRESHOLD: u32 = 30;

/// Tolerance on `∫|φ_p|² = 1` measured on the pump quadrature grid.
const PUMP_NORM_TOLERANCE: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bands {
    pub pump: ResonanceBand,
    pub signal: ResonanceBand,
    pub idler: ResonanceBand,
}

impl Bands {
    fn min_gamma_tot(&self) -> f64 {
        self.pump
            .gamma_tot()
            .min(self.signal.gamma_tot())
            .min(self.idler.gamma_tot())
    }

    fn pair_gamma_tot(&self) -> f64 {
        self.signal.gamma_tot().max(self.idler.gamma_tot())
    }
}

/// A chain of `n` identical rings spaced by `spacing_l` metres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ArraySpec {
    n: usize,
    spacing_l: f64,
    bands: Bands,
    delta_k_bar: f64,
}

impl ArraySpec {
    pub fn new(n: usize, spacing_l: f64, bands: Bands, delta_k_bar: f64) -> Result<Self> {
        if n < 1 {
            return Err(Error::invalid("array needs at least one ring"));
        }
        if !(spacing_l > 0.0 && spacing_l.is_finite()) {
            return Err(Error::invalid(format!(
                "ring spacing must be positive, got {spacing_l}"
            )));
        }
        if !delta_k_bar.is_finite() {
            return Err(Error::invalid("delta_k_bar must be finite"));
        }
        let mismatch = 2.0 * bands.pump.omega0 - bands.signal.omega0 - bands.idler.omega0;
        let tol = bands.min_gamma_tot();
        if !(mismatch.abs() < tol) {
            return Err(Error::invalid(format!(
                "resonances are not energy matched: 2ω_p − ω_s − ω_i = {mismatch:.4e} rad/s exceeds γ_tot = {tol:.4e} rad/s"
            )));
        }
        let walk = n as f64 * spacing_l * delta_k_bar.abs();
        if !(walk < std::f64::consts::PI / 10.0) {
            return Err(Error::invalid(format!(
                "N·L·|Δk̄| = {walk:.4} leaves the coherent regime (must stay below π/10)"
            )));
        }
        Ok(Self {
            n,
            spacing_l,
            bands,
            delta_k_bar,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn spacing_l(&self) -> f64 {
        self.spacing_l
    }

    pub fn bands(&self) -> &Bands {
        &self.bands
    }

    pub fn delta_k_bar(&self) -> f64 {
        self.delta_k_bar
    }

    /// The same chain with a different ring count.
    pub fn with_n(&self, n: usize) -> Result<Self> {
        Self::new(n, self.spacing_l, self.bands, self.delta_k_bar)
    }

    fn phase(&self, q: usize) -> Complex64 {
        Complex64::from_polar(1.0, q as f64 * self.delta_k_bar * self.spacing_l)
    }
}

/// Quadrature settings. `span` is the half-width of the pair axes in units of
/// the larger of the signal and idler `γ_tot`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub span: f64,
    pub points: usize,
    pub pump_points: usize,
}

impl GridSpec {
    pub const MIN_SPAN: f64 = 6.0;

    /// The CW line integrand falls off only as `L²`, so it gets a wide window.
    pub fn cw_default() -> Self {
        Self {
            span: 40.0,
            points: 8001,
            pump_points: 2001,
        }
    }

    pub fn pulsed_default() -> Self {
        Self {
            span: 10.0,
            points: 801,
            pump_points: 2001,
        }
    }

    pub fn default_for(pump: &PumpSpec) -> Self {
        if pump.is_cw() {
            Self::cw_default()
        } else {
            Self::pulsed_default()
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.span >= Self::MIN_SPAN && self.span.is_finite()) {
            return Err(Error::invalid(format!(
                "grid span {} is below the minimum of {} half-linewidths",
                self.span,
                Self::MIN_SPAN
            )));
        }
        if self.points < 3 || self.pump_points < 3 {
            return Err(Error::invalid("grids need at least 3 points"));
        }
        Ok(())
    }
}

/// Where a source amplitude lives: the CW anti-diagonal or the full pair plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FieldGrid {
    Line(FrequencyGrid),
    Plane(FrequencyGrid, FrequencyGrid),
}

#[derive(Debug, Clone, PartialEq)]
pub enum SourceField {
    /// `φ(ω₁)` with `ω₂ = 2ω_p0 − ω₁`.
    Line(ComplexSpectrum),
    Plane(ComplexGrid2D),
}

impl SourceField {
    pub fn field_grid(&self) -> FieldGrid {
        match self {
            SourceField::Line(s) => FieldGrid::Line(*s.grid()),
            SourceField::Plane(m) => FieldGrid::Plane(*m.grid1(), *m.grid2()),
        }
    }

    /// `∫ a b*` over the line or the plane.
    pub fn inner(&self, other: &SourceField) -> Result<Complex64> {
        match (self, other) {
            (SourceField::Line(a), SourceField::Line(b)) => inner_1d(a, b),
            (SourceField::Plane(a), SourceField::Plane(b)) => inner_2d(a, b),
            _ => Err(Error::invalid("cannot mix CW and pulsed amplitudes")),
        }
    }

    pub fn brightness(&self) -> f64 {
        self.inner(self).map(|z| z.re).unwrap_or(0.0)
    }

    pub fn values(&self) -> &[Complex64] {
        match self {
            SourceField::Line(s) => s.values(),
            SourceField::Plane(m) => m.values(),
        }
    }

    fn add(&self, other: &SourceField) -> Result<SourceField> {
        if self.field_grid() != other.field_grid() {
            return Err(Error::invalid("amplitudes live on different grids"));
        }
        let values: Vec<Complex64> = self
            .values()
            .iter()
            .zip(other.values())
            .map(|(a, b)| a + b)
            .collect();
        match self {
            SourceField::Line(s) => Ok(SourceField::Line(ComplexSpectrum::new(*s.grid(), values)?)),
            SourceField::Plane(m) => Ok(SourceField::Plane(ComplexGrid2D::new(
                *m.grid1(),
                *m.grid2(),
                values,
            )?)),
        }
    }
}

/// `z^k`, switching to polar form for large `k`.
fn stable_pow(z: Complex64, k: u32) -> Complex64 {
    if k <= POLAR_POWER_THRESHOLD {
        return z.powu(k);
    }
    let r = z.norm();
    if r == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let kf = k as f64;
    Complex64::from_polar((kf * r.ln()).exp(), kf * z.arg())
}

/// Response of a photon created in its ring and then dropped through `passes` more.
fn chain_response(omega: f64, b: &ResonanceBand, passes: usize) -> Complex64 {
    let h = h_transfer(omega, b);
    if passes == 0 {
        h
    } else {
        stable_pow(drop_amplitude(omega, b), passes as u32) * h
    }
}

fn check_index(q: usize, n: usize) -> Result<()> {
    if q < 1 || q > n {
        return Err(Error::invalid(format!("source index {q} outside 1..={n}")));
    }
    Ok(())
}

/// Kernel `j_q^(N)(ω₁, ω₂, ω₃, ω₄)`, with ω₁/ω₂ the signal/idler and ω₃/ω₄ the pump photons.
pub fn source_kernel(q: usize, arr: &ArraySpec, omegas: (f64, f64, f64, f64)) -> Result<Complex64> {
    check_index(q, arr.n)?;
    let (w1, w2, w3, w4) = omegas;
    let b = &arr.bands;
    let after = arr.n - q;
    Ok(chain_response(w3, &b.pump, q - 1)
        * chain_response(w4, &b.pump, q - 1)
        * chain_response(w1, &b.signal, after)
        * chain_response(w2, &b.idler, after))
}

#[derive(Debug, Clone, Copy)]
struct Layout {
    field: FieldGrid,
    /// Pump quadrature grid; `None` for CW.
    pump: Option<FrequencyGrid>,
}

fn layout(arr: &ArraySpec, pump: &PumpSpec, grid: &GridSpec) -> Result<Layout> {
    grid.validate()?;
    let b = &arr.bands;
    let halfspan = grid.span * b.pair_gamma_tot();
    match pump {
        PumpSpec::Cw { omega_p0 } => {
            if (omega_p0 - b.pump.omega0).abs() >= b.pump.gamma_tot() {
                return Err(Error::invalid(
                    "CW pump is detuned from the pump resonance by more than γ_tot",
                ));
            }
            Ok(Layout {
                field: FieldGrid::Line(make_grid(b.signal.omega0, halfspan, grid.points)?),
                pump: None,
            })
        }
        _ => {
            let center = pump.center();
            let pump_half = (grid.span * b.pump.gamma_tot()).max(pump.support_halfwidth(center));
            let pg = make_grid(center, pump_half, grid.pump_points)?;
            Ok(Layout {
                field: FieldGrid::Plane(
                    make_grid(b.signal.omega0, halfspan, grid.points)?,
                    make_grid(b.idler.omega0, halfspan, grid.points)?,
                ),
                pump: Some(pg),
            })
        }
    }
}

fn check_pump_norm(pump: &PumpSpec, pg: &FrequencyGrid) -> Result<()> {
    let terms: Vec<f64> = (0..pg.points())
        .map(|i| {
            let a = pulsed_amplitude(pump, pg.node(i));
            a * a * pg.weight(i)
        })
        .collect();
    let norm = pairwise_sum_real(&terms);
    if (norm - 1.0).abs() > PUMP_NORM_TOLERANCE {
        return Err(Error::Precondition(format!(
            "pump is not normalized on its quadrature grid: ∫|φ_p|² = {norm:.6}"
        )));
    }
    Ok(())
}

/// `∫ φ_p(ω) φ_p(Ω−ω) P(ω) P(Ω−ω) dω` for each pair sum `Ω_k = Ω₀ + kΔ`.
fn pump_envelope(
    pump: &PumpSpec,
    b_pump: &ResonanceBand,
    passes: usize,
    pg: &FrequencyGrid,
    omega_sum0: f64,
    step: f64,
    count: usize,
) -> Vec<Complex64> {
    let nodes: Vec<(f64, f64, Complex64)> = (0..pg.points())
        .map(|l| {
            let w = pg.node(l);
            (
                w,
                pulsed_amplitude(pump, w) * pg.weight(l),
                chain_response(w, b_pump, passes),
            )
        })
        .filter(|&(_, a, _)| a != 0.0)
        .collect();
    (0..count)
        .into_par_iter()
        .map(|k| {
            let big = omega_sum0 + k as f64 * step;
            let mut acc = Complex64::new(0.0, 0.0);
            for &(w, a, p) in &nodes {
                let other = big - w;
                let a2 = pulsed_amplitude(pump, other);
                if a2 != 0.0 {
                    acc += p * chain_response(other, b_pump, passes) * (a * a2);
                }
            }
            acc
        })
        .collect()
}

fn phi_q_on(q: usize, arr: &ArraySpec, pump: &PumpSpec, lay: &Layout) -> Result<SourceField> {
    check_index(q, arr.n)?;
    let b = &arr.bands;
    let after = arr.n - q;
    let phase = arr.phase(q);
    match (pump, lay.field) {
        (PumpSpec::Cw { omega_p0 }, FieldGrid::Line(g)) => {
            let p = chain_response(*omega_p0, &b.pump, q - 1);
            let pre = p * p * phase;
            let values: Vec<Complex64> = (0..g.points())
                .into_par_iter()
                .map(|i| {
                    let w1 = g.node(i);
                    pre * chain_response(w1, &b.signal, after)
                        * chain_response(2.0 * omega_p0 - w1, &b.idler, after)
                })
                .collect();
            Ok(SourceField::Line(ComplexSpectrum::new(g, values)?))
        }
        (_, FieldGrid::Plane(g1, g2)) => {
            let pg = lay.pump.ok_or(Error::ModeMismatch)?;
            let n1 = g1.points();
            let n2 = g2.points();
            let envelope = pump_envelope(
                pump,
                &b.pump,
                q - 1,
                &pg,
                g1.start() + g2.start(),
                g1.spacing(),
                n1 + n2 - 1,
            );
            let sig: Vec<Complex64> = (0..n1)
                .map(|i| chain_response(g1.node(i), &b.signal, after) * phase)
                .collect();
            let idl: Vec<Complex64> = (0..n2)
                .map(|j| chain_response(g2.node(j), &b.idler, after))
                .collect();
            let mut values = vec![Complex64::new(0.0, 0.0); n1 * n2];
            values
                .par_chunks_mut(n2)
                .enumerate()
                .for_each(|(i, row)| {
                    for (j, slot) in row.iter_mut().enumerate() {
                        *slot = sig[i] * idl[j] * envelope[i + j];
                    }
                });
            Ok(SourceField::Plane(ComplexGrid2D::new(g1, g2, values)?))
        }
        _ => Err(Error::ModeMismatch),
    }
}

fn prepared_layout(arr: &ArraySpec, pump: &PumpSpec, grid: &GridSpec) -> Result<Layout> {
    let lay = layout(arr, pump, grid)?;
    if let Some(pg) = lay.pump {
        check_pump_norm(pump, &pg)?;
    }
    Ok(lay)
}

/// Unnormalized amplitude of source `q` (1-based).
pub fn phi_q(q: usize, arr: &ArraySpec, pump: &PumpSpec, grid: &GridSpec) -> Result<SourceField> {
    let lay = prepared_layout(arr, pump, grid)?;
    phi_q_on(q, arr, pump, &lay)
}

#[derive(Debug, Clone)]
pub struct SourceDecomposition {
    pub phi_q: Vec<SourceField>,
    /// `B′_j = ∬|φ_j|²`.
    pub brightness_raw: Vec<f64>,
    /// `I_jk = ∬φ_j φ_k* / √(B′_j B′_k)`, row-major over `j`.
    pub indistinguishability: Vec<Vec<Complex64>>,
}

impl SourceDecomposition {
    pub fn n(&self) -> usize {
        self.phi_q.len()
    }

    pub fn field_grid(&self) -> FieldGrid {
        self.phi_q[0].field_grid()
    }
}

pub fn decompose(arr: &ArraySpec, pump: &PumpSpec, grid: &GridSpec) -> Result<SourceDecomposition> {
    let lay = prepared_layout(arr, pump, grid)?;
    let fields: Vec<SourceField> = (1..=arr.n)
        .into_par_iter()
        .map(|q| phi_q_on(q, arr, pump, &lay))
        .collect::<Result<_>>()?;
    let n = fields.len();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|j| (j..n).map(move |k| (j, k))).collect();
    let overlaps: Vec<Complex64> = pairs
        .par_iter()
        .map(|&(j, k)| fields[j].inner(&fields[k]))
        .collect::<Result<_>>()?;

    let mut raw = vec![vec![Complex64::new(0.0, 0.0); n]; n];
    for (&(j, k), &z) in pairs.iter().zip(&overlaps) {
        raw[j][k] = z;
        raw[k][j] = z.conj();
    }
    let brightness: Vec<f64> = (0..n).map(|j| raw[j][j].re).collect();
    if let Some(j) = brightness.iter().position(|&b| !(b > 0.0) || !b.is_finite()) {
        return Err(Error::DegenerateSource(j + 1));
    }
    let mut ind = vec![vec![Complex64::new(0.0, 0.0); n]; n];
    for j in 0..n {
        for k in 0..n {
            ind[j][k] = if j == k {
                Complex64::new(1.0, 0.0)
            } else {
                raw[j][k] / (brightness[j] * brightness[k]).sqrt()
            };
        }
    }
    Ok(SourceDecomposition {
        phi_q: fields,
        brightness_raw: brightness,
        indistinguishability: ind,
    })
}

/// `B′^(1)` of a lone ring, tied to the grid it was computed on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceBrightness {
    pub value: f64,
    pub grid: FieldGrid,
}

pub fn reference_brightness(arr: &ArraySpec, pump: &PumpSpec, grid: &GridSpec) -> Result<ReferenceBrightness> {
    let single = arr.with_n(1)?;
    let f = phi_q(1, &single, pump, grid)?;
    let value = f.brightness();
    if !(value > 0.0) {
        return Err(Error::DegenerateSource(1));
    }
    Ok(ReferenceBrightness {
        value,
        grid: f.field_grid(),
    })
}

fn check_reference(dec: &SourceDecomposition, r: &ReferenceBrightness) -> Result<()> {
    if !(r.value > 0.0 && r.value.is_finite()) {
        return Err(Error::invalid("single-ring brightness must be positive"));
    }
    if dec.field_grid() != r.grid {
        return Err(Error::invalid(
            "single-ring reference was computed on a different grid",
        ));
    }
    Ok(())
}

/// `B_j^(N) = B′_j / B′^(1)`.
pub fn relative_brightness(dec: &SourceDecomposition, single: &ReferenceBrightness) -> Result<Vec<f64>> {
    check_reference(dec, single)?;
    Ok(dec.brightness_raw.iter().map(|b| b / single.value).collect())
}

/// `Σ_jk √(B_j B_k) Re I_jk`; the Δk̄ phases are already inside `φ_q`.
pub fn coherent_rate(dec: &SourceDecomposition, single: &ReferenceBrightness) -> Result<f64> {
    let b = relative_brightness(dec, single)?;
    let n = b.len();
    let mut terms = Vec::with_capacity(n * n);
    for j in 0..n {
        for k in 0..n {
            terms.push((b[j] * b[k]).sqrt() * dec.indistinguishability[j][k].re);
        }
    }
    Ok(pairwise_sum_real(&terms))
}

/// The array rate normalized to a single ring, `R(N)/R(1)`.
pub fn normalized_rate(arr: &ArraySpec, pump: &PumpSpec, grid: &GridSpec) -> Result<f64> {
    let dec = decompose(arr, pump, grid)?;
    let single = reference_brightness(arr, pump, grid)?;
    coherent_rate(&dec, &single)
}

/// `∬|Σ_j φ_j|² / ∬|φ^(1)|²`, computed without the decomposition.
pub fn direct_rate(arr: &ArraySpec, pump: &PumpSpec, grid: &GridSpec) -> Result<f64> {
    let lay = prepared_layout(arr, pump, grid)?;
    let mut total = phi_q_on(1, arr, pump, &lay)?;
    for q in 2..=arr.n {
        total = total.add(&phi_q_on(q, arr, pump, &lay)?)?;
    }
    let single = reference_brightness(arr, pump, grid)?;
    if total.field_grid() != single.grid {
        return Err(Error::invalid("reference grid mismatch"));
    }
    Ok(total.brightness() / single.value)
}

/// Rate of the same sources emitting independently, `Σ_j B_j`.
pub fn incoherent_reference_rate(dec: &SourceDecomposition, single: &ReferenceBrightness) -> Result<f64> {
    Ok(pairwise_sum_real(&relative_brightness(dec, single)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RatePoint {
    pub n: usize,
    pub coherent: f64,
    pub incoherent: f64,
}

/// Coherent and incoherent rates for chains of `1..=n_max` rings sharing `arr`'s bands.
pub fn rate_curve(arr: &ArraySpec, pump: &PumpSpec, grid: &GridSpec, n_max: usize) -> Result<Vec<RatePoint>> {
    if n_max < 1 {
        return Err(Error::invalid("n_max must be at least 1"));
    }
    let single = reference_brightness(arr, pump, grid)?;
    (1..=n_max)
        .map(|n| {
            let dec = decompose(&arr.with_n(n)?, pump, grid)?;
            Ok(RatePoint {
                n,
                coherent: coherent_rate(&dec, &single)?,
                incoherent: incoherent_reference_rate(&dec, &single)?,
            })
        })
        .collect()
}

/// Pump power spectrum `|t_p|^(2j) |φ_p|²` reaching ring `j + 1`, for `j = 0..n`.
pub fn pump_evolution(arr: &ArraySpec, pump: &PumpSpec, grid: &GridSpec) -> Result<Vec<RealSpectrum>> {
    let lay = prepared_layout(arr, pump, grid)?;
    let pg = lay.pump.ok_or(Error::ModeMismatch)?;
    let base: Vec<f64> = (0..pg.points())
        .map(|i| {
            let a = pulsed_amplitude(pump, pg.node(i));
            a * a
        })
        .collect();
    (0..=arr.n)
        .map(|j| {
            let values = (0..pg.points())
                .map(|i| {
                    let t2 = drop_amplitude(pg.node(i), &arr.bands.pump).norm_sqr();
                    base[i] * t2.powi(j as i32)
                })
                .collect();
            RealSpectrum::new(pg, values)
        })
        .collect()
}
