//! Decibel and wavelength conversions.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::invalid(format!(
            "linear ratio must be positive for a dB conversion, got {x}"
        )));
    }
    Ok(10.0 * x.log10())
}

/// ω = 2πc/λ with λ in nanometres.
pub fn wavelength_nm_to_omega(lambda_nm: f64) -> f64 {
    2.0 * PI * SPEED_OF_LIGHT / (lambda_nm * 1e-9)
}

pub fn omega_to_wavelength_nm(omega: f64) -> f64 {
    2.0 * PI * SPEED_OF_LIGHT / omega * 1e9
}

/// Converts a small angular-frequency width at `omega` to a wavelength width in pm.
pub fn omega_width_to_pm(width: f64, omega: f64) -> f64 {
    let lambda_m = 2.0 * PI * SPEED_OF_LIGHT / omega;
    lambda_m * lambda_m * width / (2.0 * PI * SPEED_OF_LIGHT) * 1e12
}

/// Inverse of [`omega_width_to_pm`].
pub fn pm_width_to_omega(width_pm: f64, omega: f64) -> f64 {
    let lambda_m = 2.0 * PI * SPEED_OF_LIGHT / omega;
    width_pm * 1e-12 * 2.0 * PI * SPEED_OF_LIGHT / (lambda_m * lambda_m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_db_is_unity() {
        assert_eq!(db_to_linear(0.0), 1.0);
    }

    #[test]
    fn measured_drop_loss() {
        let lin = db_to_linear(-0.88);
        assert!((lin - 0.816_582_371).abs() < 1e-9);
        assert!((linear_to_db(lin).unwrap() + 0.88).abs() < 1e-12);
    }

    #[test]
    fn fitted_stimulated_transmittance_in_db() {
        let db = linear_to_db(0.75).unwrap();
        assert!((db + 1.2494).abs() < 1e-4);
        assert_eq!(format!("{db:.2}"), "-1.25");
    }

    #[test]
    fn non_positive_linear_is_rejected() {
        assert!(linear_to_db(0.0).is_err());
        assert!(linear_to_db(-1.0).is_err());
    }

    #[test]
    fn wavelength_round_trip() {
        let w = wavelength_nm_to_omega(1561.25);
        assert!((omega_to_wavelength_nm(w) - 1561.25).abs() < 1e-9);
        let dw = pm_width_to_omega(80.0, w);
        assert!((omega_width_to_pm(dw, w) - 80.0).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn db_round_trip(x in -30.0f64..=0.0) {
            let back = linear_to_db(db_to_linear(x)).unwrap();
            prop_assert!((back - x).abs() <= 1e-12 * x.abs().max(1.0));
        }
    }
}
