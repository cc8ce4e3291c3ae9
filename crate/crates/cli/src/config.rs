//! Scenario file: one JSON document describing the chain, its three
//! resonances, the pump and optional quadrature overrides.

use std::fs::File;
use std::path::{Path, PathBuf};

use ringchain::jsa::{ArraySpec, Bands, GridSpec};
use ringchain::pump::{default_pulsed_pump, read_tabulated_pump, PumpSpec};
use ringchain::tcmt::{band_from_q, band_from_qtot_td, td_on_resonance, BandLabel, QTriple, ResonanceBand};
use ringchain::units::{pm_width_to_omega, wavelength_nm_to_omega};
use serde::Deserialize;

use crate::error::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub array: ArrayConfig,
    pub bands: BandsConfig,
    /// When present, every band keeps its `q_tot` and takes the coupling split
    /// implied by this on-resonance drop transmittance.
    #[serde(default)]
    pub drop_transmittance: Option<f64>,
    #[serde(default)]
    pub pump: PumpConfig,
    #[serde(default)]
    pub grid: GridOverrides,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArrayConfig {
    pub n: usize,
    pub spacing_um: f64,
    #[serde(default)]
    pub delta_k_bar: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandsConfig {
    pub pump: BandConfig,
    pub signal: BandConfig,
    pub idler: BandConfig,
}

/// Either `{q_tot, q_e}` or `{gamma_e, gamma_i}` (rad/s). The idler wavelength
/// may be left out, in which case it is set by energy conservation.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandConfig {
    pub wavelength_nm: Option<f64>,
    pub q_tot: Option<f64>,
    pub q_e: Option<f64>,
    pub gamma_e: Option<f64>,
    pub gamma_i: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum PumpConfig {
    /// Monochromatic pump, by default at the pump resonance.
    #[default]
    Cw,
    Gaussian {
        fwhm_pm: f64,
        #[serde(default)]
        wavelength_nm: Option<f64>,
    },
    /// Gaussian twice as wide as the pump resonance.
    DefaultPulsed,
    /// Two-column `wavelength_nm amplitude` file, relative to the config file.
    Tabulated {
        file: PathBuf,
        #[serde(default)]
        power: bool,
    },
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridOverrides {
    #[serde(default)]
    pub cw: GridOverride,
    #[serde(default)]
    pub pulsed: GridOverride,
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridOverride {
    pub span: Option<f64>,
    pub points: Option<usize>,
    pub pump_points: Option<usize>,
}

impl GridOverride {
    fn apply(&self, mut g: GridSpec) -> GridSpec {
        if let Some(s) = self.span {
            g.span = s;
        }
        if let Some(p) = self.points {
            g.points = p;
        }
        if let Some(p) = self.pump_points {
            g.pump_points = p;
        }
        g
    }
}

/// A validated scenario, ready for the commands.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub array: ArraySpec,
    pub pump: PumpSpec,
    pub t_d: f64,
    grids: GridOverrides,
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let file = File::open(path).map_err(|e| CliError::io(path, e))?;
        let cfg: ScenarioConfig = serde_json::from_reader(std::io::BufReader::new(file))
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        cfg.validate(base)
    }

    pub fn cw_pump(&self) -> Result<PumpSpec, CliError> {
        if self.pump.is_cw() {
            return Ok(self.pump.clone());
        }
        PumpSpec::cw(self.array.bands().pump.omega0).map_err(CliError::from)
    }

    pub fn pulsed_pump(&self) -> PumpSpec {
        if self.pump.is_cw() {
            default_pulsed_pump(&self.array.bands().pump)
        } else {
            self.pump.clone()
        }
    }

    pub fn grid_for(&self, pump: &PumpSpec) -> GridSpec {
        let base = GridSpec::default_for(pump);
        if pump.is_cw() {
            self.grids.cw.apply(base)
        } else {
            self.grids.pulsed.apply(base)
        }
    }
}

fn field_err(field: &str, e: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{field}: {e}"))
}

fn positive(field: &str, v: f64) -> Result<f64, CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(field_err(field, format!("must be a positive number, got {v}")))
    }
}

impl ScenarioConfig {
    pub fn validate(&self, base_dir: &Path) -> Result<Scenario, CliError> {
        if self.array.n < 1 {
            return Err(field_err("array.n", "must be at least 1"));
        }
        let spacing = positive("array.spacing_um", self.array.spacing_um)? * 1e-6;
        if !self.array.delta_k_bar.is_finite() {
            return Err(field_err("array.delta_k_bar", "must be finite"));
        }
        if let Some(t) = self.drop_transmittance {
            if !(t > 0.0 && t <= 1.0) {
                return Err(field_err("drop_transmittance", format!("must lie in (0, 1], got {t}")));
            }
        }

        let omega = |field: &str, b: &BandConfig| -> Result<f64, CliError> {
            let nm = b
                .wavelength_nm
                .ok_or_else(|| field_err(field, "missing wavelength_nm"))?;
            Ok(wavelength_nm_to_omega(positive(field, nm)?))
        };
        let wp = omega("bands.pump.wavelength_nm", &self.bands.pump)?;
        let ws = omega("bands.signal.wavelength_nm", &self.bands.signal)?;
        let wi = match self.bands.idler.wavelength_nm {
            Some(_) => omega("bands.idler.wavelength_nm", &self.bands.idler)?,
            None => 2.0 * wp - ws,
        };
        if wi <= 0.0 || !wi.is_finite() {
            return Err(field_err("bands.idler.wavelength_nm", "energy-matched idler is not physical"));
        }

        let bands = Bands {
            pump: self.band("bands.pump", BandLabel::Pump, wp, &self.bands.pump)?,
            signal: self.band("bands.signal", BandLabel::Signal, ws, &self.bands.signal)?,
            idler: self.band("bands.idler", BandLabel::Idler, wi, &self.bands.idler)?,
        };
        let array = ArraySpec::new(self.array.n, spacing, bands, self.array.delta_k_bar)
            .map_err(|e| field_err("array", e))?;
        let pump = self.pump_spec(&bands.pump, base_dir)?;
        let t_d = self
            .drop_transmittance
            .unwrap_or_else(|| td_on_resonance(&bands.pump));

        for (name, o) in [("grid.cw", &self.grid.cw), ("grid.pulsed", &self.grid.pulsed)] {
            if let Some(s) = o.span {
                if !(s >= GridSpec::MIN_SPAN && s.is_finite()) {
                    return Err(field_err(
                        &format!("{name}.span"),
                        format!("must be at least {}", GridSpec::MIN_SPAN),
                    ));
                }
            }
            for (k, v) in [("points", o.points), ("pump_points", o.pump_points)] {
                if matches!(v, Some(p) if p < 3) {
                    return Err(field_err(&format!("{name}.{k}"), "must be at least 3"));
                }
            }
        }

        Ok(Scenario {
            array,
            pump,
            t_d,
            grids: self.grid,
        })
    }

    fn band(&self, field: &str, label: BandLabel, omega0: f64, b: &BandConfig) -> Result<ResonanceBand, CliError> {
        let by_q = b.q_tot.is_some() || b.q_e.is_some();
        let by_gamma = b.gamma_e.is_some() || b.gamma_i.is_some();
        if by_q && by_gamma {
            return Err(field_err(field, "give either q_tot/q_e or gamma_e/gamma_i, not both"));
        }
        if by_gamma {
            if self.drop_transmittance.is_some() {
                return Err(field_err(field, "drop_transmittance needs q_tot, not decay rates"));
            }
            let ge = b.gamma_e.ok_or_else(|| field_err(&format!("{field}.gamma_e"), "missing"))?;
            let gi = b.gamma_i.ok_or_else(|| field_err(&format!("{field}.gamma_i"), "missing"))?;
            return ResonanceBand::new(label, omega0, ge, gi).map_err(|e| field_err(field, e));
        }
        let q_tot = b
            .q_tot
            .ok_or_else(|| field_err(&format!("{field}.q_tot"), "missing"))?;
        let q_tot = positive(&format!("{field}.q_tot"), q_tot)?;
        if let Some(t) = self.drop_transmittance {
            return band_from_qtot_td(label, omega0, q_tot, t).map_err(|e| field_err(field, e));
        }
        let q_e = b.q_e.ok_or_else(|| field_err(&format!("{field}.q_e"), "missing"))?;
        let q_e = positive(&format!("{field}.q_e"), q_e)?;
        let q = QTriple::from_tot_e(q_tot, q_e).map_err(|e| field_err(&format!("{field}.q_e"), e))?;
        band_from_q(label, omega0, &q).map_err(|e| field_err(field, e))
    }

    fn pump_spec(&self, pump_band: &ResonanceBand, base_dir: &Path) -> Result<PumpSpec, CliError> {
        match &self.pump {
            PumpConfig::Cw => PumpSpec::cw(pump_band.omega0).map_err(|e| field_err("pump", e)),
            PumpConfig::Gaussian { fwhm_pm, wavelength_nm } => {
                let center = match wavelength_nm {
                    Some(nm) => wavelength_nm_to_omega(positive("pump.wavelength_nm", *nm)?),
                    None => pump_band.omega0,
                };
                let fwhm = pm_width_to_omega(positive("pump.fwhm_pm", *fwhm_pm)?, center);
                PumpSpec::gaussian(center, fwhm).map_err(|e| field_err("pump", e))
            }
            PumpConfig::DefaultPulsed => Ok(default_pulsed_pump(pump_band)),
            PumpConfig::Tabulated { file, power } => {
                let path = base_dir.join(file);
                let f = File::open(&path).map_err(|e| CliError::io(&path, e))?;
                read_tabulated_pump(std::io::BufReader::new(f), *power)
                    .map_err(|e| CliError::data_in(&path, e))
            }
        }
    }
}
