use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use ringchain::fit::{fit_td, fit_through_spectrum, read_rate_curve_csv, read_spectrum_csv, CurveProcess, ModelTemplate};
use ringchain::grid::make_grid;
use ringchain::jsa::{decompose, pump_evolution, rate_curve, reference_brightness, relative_brightness, SourceField};
use ringchain::pump::PumpSpec;
use ringchain::scaling::{asymptotic_filter_sum, log_log_slope, Process, ScalingSeries};
use ringchain::tcmt::{cascade_drop_spectrum, cascade_fwhm_closed_form, drop_amplitude, fwhm, q_from_band, td_on_resonance};
use ringchain::units::{linear_to_db, omega_to_wavelength_nm, omega_width_to_pm};
use ringchain::Error;
use serde::Serialize;

use crate::config::Scenario;
use crate::error::CliError;
use crate::output::{decimate, num, OutDir, Table};

/// Spectra are sampled over this many loaded half-linewidths either side of the pump resonance.
const SPECTRA_SPAN: f64 = 10.0;
const SPECTRA_POINTS: usize = 2001;
const PLANE_MAX_POINTS: usize = 101;
const LINE_MAX_POINTS: usize = 2001;
const PUMP_MAX_POINTS: usize = 401;
const ASYMPTOTIC_MIN_NMAX: usize = 20;
/// The trailing-decade exponent is reported from here on.
const EXPONENT_MIN_N: usize = 100;

pub fn spectra(sc: &Scenario, out: &OutDir) -> Result<(), CliError> {
    let band = sc.array.bands().pump;
    let g = make_grid(band.omega0, SPECTRA_SPAN * band.gamma_tot(), SPECTRA_POINTS)?;
    let mut widths = Table::new(&["N", "fwhm_rad_s", "fwhm_closed_form_rad_s", "fwhm_pm"]);
    for n in 1..=sc.array.n() {
        let spec = cascade_drop_spectrum(&band, n, &g)?;
        let mut t = Table::new(&["omega_rad_s", "wavelength_nm", "drop_transmittance"]);
        for (i, v) in spec.values().iter().enumerate() {
            let w = g.node(i);
            t.push(vec![num(w), num(omega_to_wavelength_nm(w)), num(*v)]);
        }
        report(out.write_table(&format!("spectra_drop{n}.csv"), &t)?);
        let f = fwhm(&spec)?;
        widths.push(vec![
            n.to_string(),
            num(f),
            num(cascade_fwhm_closed_form(&band, n)),
            num(omega_width_to_pm(f, band.omega0)),
        ]);
    }
    report(out.write_table("fwhm_vs_N.csv", &widths)?);
    Ok(())
}

/// `scaling.csv` columns. The incoherent JSA column comes from the same
/// decomposition as the coherent CW one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScalingColumn {
    Process(Process),
    IncoherentJsaCw,
}

impl ScalingColumn {
    fn name(&self) -> &'static str {
        match self {
            ScalingColumn::Process(p) => p.name(),
            ScalingColumn::IncoherentJsaCw => "incoherent_jsa_cw",
        }
    }
}

pub fn default_scaling_columns() -> Vec<ScalingColumn> {
    vec![
        ScalingColumn::Process(Process::SpontaneousFullCw),
        ScalingColumn::IncoherentJsaCw,
        ScalingColumn::Process(Process::SpontaneousFullPulsed),
        ScalingColumn::Process(Process::Stimulated),
        ScalingColumn::Process(Process::Incoherent),
        ScalingColumn::Process(Process::SpontaneousUnfiltered),
    ]
}

pub fn parse_scaling_columns(names: &[String]) -> Result<Vec<ScalingColumn>, CliError> {
    if names.is_empty() {
        return Ok(default_scaling_columns());
    }
    let mut cols = Vec::new();
    for raw in names {
        let s = raw.trim();
        let c = if s == "incoherent_jsa_cw" {
            ScalingColumn::IncoherentJsaCw
        } else {
            ScalingColumn::Process(
                s.parse::<Process>()
                    .map_err(|e| CliError::Config(format!("--process: {e}")))?,
            )
        };
        if !cols.contains(&c) {
            cols.push(c);
        }
    }
    Ok(cols)
}

pub fn scaling(sc: &Scenario, out: &OutDir, cols: &[ScalingColumn]) -> Result<(), CliError> {
    let n_max = sc.array.n();
    let wants = |c: ScalingColumn| cols.contains(&c);

    let cw = if wants(ScalingColumn::Process(Process::SpontaneousFullCw)) || wants(ScalingColumn::IncoherentJsaCw) {
        let pump = sc.cw_pump()?;
        Some(rate_curve(&sc.array, &pump, &sc.grid_for(&pump), n_max)?)
    } else {
        None
    };
    let pulsed = if wants(ScalingColumn::Process(Process::SpontaneousFullPulsed)) {
        let pump = sc.pulsed_pump();
        Some(rate_curve(&sc.array, &pump, &sc.grid_for(&pump), n_max)?)
    } else {
        None
    };

    let mut columns: Vec<Vec<f64>> = Vec::with_capacity(cols.len());
    for c in cols {
        let v = match c {
            ScalingColumn::Process(Process::SpontaneousFullCw) => {
                cw.as_ref().unwrap().iter().map(|p| p.coherent).collect()
            }
            ScalingColumn::IncoherentJsaCw => cw.as_ref().unwrap().iter().map(|p| p.incoherent).collect(),
            ScalingColumn::Process(Process::SpontaneousFullPulsed) => {
                pulsed.as_ref().unwrap().iter().map(|p| p.coherent).collect()
            }
            ScalingColumn::Process(p) => ScalingSeries::closed_form(*p, sc.t_d, n_max)?
                .values
                .values()
                .copied()
                .collect(),
        };
        columns.push(v);
    }

    let mut header = vec!["N"];
    header.extend(cols.iter().map(|c| c.name()));
    let mut t = Table::new(&header);
    for n in 1..=n_max {
        let mut row = vec![n.to_string()];
        row.extend(columns.iter().map(|c| num(c[n - 1])));
        t.push(row);
    }
    report(out.write_table("scaling.csv", &t)?);
    Ok(())
}

pub fn jsa(sc: &Scenario, out: &OutDir) -> Result<(), CliError> {
    let arr = &sc.array;
    let pump = &sc.pump;
    let grid = sc.grid_for(pump);
    let dec = decompose(arr, pump, &grid)?;
    let single = reference_brightness(arr, pump, &grid)?;
    let n = dec.n();

    let peak = dec
        .phi_q
        .iter()
        .flat_map(|f| f.values().iter().map(|z| z.norm_sqr()))
        .fold(0.0_f64, f64::max);
    let mut t = Table::new(&["q", "omega_1_rad_s", "omega_2_rad_s", "jsi_normalized"]);
    for (q, field) in dec.phi_q.iter().enumerate() {
        match field {
            SourceField::Line(s) => {
                let g = s.grid();
                let wp = pump.center();
                for i in decimate(g.points(), LINE_MAX_POINTS) {
                    let w1 = g.node(i);
                    t.push(vec![
                        (q + 1).to_string(),
                        num(w1),
                        num(2.0 * wp - w1),
                        num(s.values()[i].norm_sqr() / peak),
                    ]);
                }
            }
            SourceField::Plane(m) => {
                let (g1, g2) = (m.grid1(), m.grid2());
                let cols = decimate(g2.points(), PLANE_MAX_POINTS);
                for i in decimate(g1.points(), PLANE_MAX_POINTS) {
                    for &j in &cols {
                        t.push(vec![
                            (q + 1).to_string(),
                            num(g1.node(i)),
                            num(g2.node(j)),
                            num(m.get(i, j).norm_sqr() / peak),
                        ]);
                    }
                }
            }
        }
    }
    report(out.write_table("jsa_source_q.csv", &t)?);

    let b = relative_brightness(&dec, &single)?;
    let mut t = Table::new(&["j", "brightness_relative", "brightness_raw"]);
    for (j, (rel, raw)) in b.iter().zip(&dec.brightness_raw).enumerate() {
        t.push(vec![(j + 1).to_string(), num(*rel), num(*raw)]);
    }
    report(out.write_table("brightness.csv", &t)?);

    // row k = N: overlap of every source with the last one
    let mut t = Table::new(&["j", "re", "im", "abs"]);
    for j in 0..n {
        let z = dec.indistinguishability[j][n - 1];
        t.push(vec![(j + 1).to_string(), num(z.re), num(z.im), num(z.norm())]);
    }
    report(out.write_table("indistinguishability.csv", &t)?);
    let mut t = Table::new(&["j", "k", "re", "im", "abs"]);
    for j in 0..n {
        for k in 0..n {
            let z = dec.indistinguishability[j][k];
            t.push(vec![
                (j + 1).to_string(),
                (k + 1).to_string(),
                num(z.re),
                num(z.im),
                num(z.norm()),
            ]);
        }
    }
    report(out.write_table("indistinguishability_matrix.csv", &t)?);

    report(out.write_table("pump_evolution.csv", &pump_table(sc, &grid)?)?);
    Ok(())
}

/// Pulsed: one column per stage, the spectrum reaching ring `j + 1`.
/// CW: the on-line transmitted pump power after `j` drops.
fn pump_table(sc: &Scenario, grid: &ringchain::jsa::GridSpec) -> Result<Table, CliError> {
    let arr = &sc.array;
    if let PumpSpec::Cw { omega_p0 } = sc.pump {
        let t2 = drop_amplitude(omega_p0, &arr.bands().pump).norm_sqr();
        let mut t = Table::new(&["stage", "transmitted_power"]);
        for j in 0..=arr.n() {
            t.push(vec![j.to_string(), num(t2.powi(j as i32))]);
        }
        return Ok(t);
    }
    let stages = pump_evolution(arr, &sc.pump, grid)?;
    let g = *stages[0].grid();
    let mut header = vec!["omega_rad_s".to_string(), "wavelength_nm".to_string()];
    header.extend((0..stages.len()).map(|j| format!("stage_{j}")));
    let mut t = Table::new(&header);
    for i in decimate(g.points(), PUMP_MAX_POINTS) {
        let w = g.node(i);
        let mut row = vec![num(w), num(omega_to_wavelength_nm(w))];
        row.extend(stages.iter().map(|s| num(s.values()[i])));
        t.push(row);
    }
    Ok(t)
}

#[derive(Debug, Serialize)]
struct ModelPoint {
    n: usize,
    rate: f64,
}

#[derive(Debug, Serialize)]
struct CurveFitReport {
    process: CurveProcess,
    t_d_fit: f64,
    t_d_fit_db: f64,
    residual: f64,
    evaluations: usize,
    model_curve: Vec<ModelPoint>,
}

#[derive(Debug, Serialize)]
struct SpectrumFitReport {
    process: &'static str,
    omega0_rad_s: f64,
    wavelength_nm: f64,
    q_tot: f64,
    q_e: f64,
    q_i: Option<f64>,
    t_d: f64,
    residual: f64,
    clamped: bool,
}

pub fn fit(sc: &Scenario, out: &OutDir, data: &Path, process: &str) -> Result<String, CliError> {
    let file = File::open(data).map_err(|e| CliError::io(data, e))?;
    let reader = BufReader::new(file);
    let json = if process == "through_spectrum" {
        let samples = read_spectrum_csv(reader).map_err(|e| CliError::data_in(data, e))?;
        let f = fit_through_spectrum(&samples)?;
        let q = q_from_band(&f.band);
        let rep = SpectrumFitReport {
            process: "through_spectrum",
            omega0_rad_s: f.band.omega0,
            wavelength_nm: omega_to_wavelength_nm(f.band.omega0),
            q_tot: q.q_tot,
            q_e: q.q_e,
            q_i: q.q_i.is_finite().then_some(q.q_i),
            t_d: td_on_resonance(&f.band),
            residual: f.residual,
            clamped: f.clamped,
        };
        serde_json::to_string_pretty(&rep)
    } else {
        let proc: CurveProcess = process
            .parse()
            .map_err(|e: Error| CliError::Config(format!("--process: {e}")))?;
        let curve = read_rate_curve_csv(reader, proc).map_err(|e| CliError::data_in(data, e))?;
        let pump = match proc {
            CurveProcess::SpontaneousPulsed => sc.pulsed_pump(),
            _ => sc.cw_pump()?,
        };
        let mut template = ModelTemplate::from_array(&sc.array, pump.clone());
        template.final_grid = sc.grid_for(&pump);
        if pump.is_cw() {
            template.search_grid = template.final_grid;
        }
        let r = fit_td(&curve, &template)?;
        let model = template.model_curve(proc, r.t_d_fit, curve.n_max(), &template.final_grid)?;
        let rep = CurveFitReport {
            process: proc,
            t_d_fit: r.t_d_fit,
            t_d_fit_db: linear_to_db(r.t_d_fit)?,
            residual: r.residual,
            evaluations: r.evaluations,
            model_curve: model
                .into_iter()
                .enumerate()
                .map(|(k, rate)| ModelPoint { n: k + 1, rate })
                .collect(),
        };
        serde_json::to_string_pretty(&rep)
    }
    .map_err(|e| CliError::Data(format!("cannot serialize report: {e}")))?;
    let mut text = json;
    text.push('\n');
    report(out.write("fit_report.json", &text)?);
    Ok(text)
}

pub fn asymptotic(sc: &Scenario, out: &OutDir, n_max: usize) -> Result<(), CliError> {
    if n_max < ASYMPTOTIC_MIN_NMAX {
        return Err(Error::Precondition(format!(
            "--nmax must be at least {ASYMPTOTIC_MIN_NMAX}, got {n_max}"
        ))
        .into());
    }
    let t_d = sc.t_d;
    let ln_t = t_d.ln();
    let sums = (1..=n_max)
        .map(asymptotic_filter_sum)
        .collect::<Result<Vec<f64>, _>>()?;
    let ln_beta = |n: usize| 2.0 * n as f64 * ln_t + sums[n - 1].ln();
    let ln_b1 = ln_beta(1);

    let mut t = Table::new(&["N", "filter_sum", "ln_beta2", "ln_normalized", "normalized", "exponent"]);
    for n in 1..=n_max {
        let ln_norm = ln_beta(n) - ln_b1;
        // the loss factor is exact, so the exponent is fitted on the filter sum alone
        let exponent = if n >= EXPONENT_MIN_N {
            let pts: Vec<(f64, f64)> = (n / 10..=n).map(|k| (k as f64, sums[k - 1])).collect();
            num(log_log_slope(&pts)?)
        } else {
            String::new()
        };
        t.push(vec![
            n.to_string(),
            num(sums[n - 1]),
            num(ln_beta(n)),
            num(ln_norm),
            num(ln_norm.exp()),
            exponent,
        ]);
    }
    report(out.write_table("asymptotic.csv", &t)?);
    Ok(())
}

fn report(path: std::path::PathBuf) {
    eprintln!("wrote {}", path.display());
}
