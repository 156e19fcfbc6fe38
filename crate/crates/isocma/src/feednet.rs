//! Series matching-network arithmetic for the capacitive coupling feeding
//! structure (CCFS): capacitor insertion, parallel-plate estimation,
//! reflection, bandwidth Q, and the Chu/McLean small-antenna Q lower bound.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mom::EPS_0;

/// dB floor reported for a numerically perfect match.
pub const S11_DB_FLOOR: f64 = -80.0;

/// Port impedance state with its reflection coefficient.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PortState {
    pub frequency: f64,
    pub zin: Complex64,
    pub z0: f64,
    pub s11: Complex64,
    pub s11_db: f64,
}

/// CCFS patch/feedline geometry and its equivalent capacitance.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CcfsSpec {
    /// Patch length CL, meters.
    pub patch_length: f64,
    /// Patch width CW, meters.
    pub patch_width: f64,
    /// Feedline length ML, meters.
    pub feedline_length: f64,
    /// Feedline width MW, meters.
    pub feedline_width: f64,
    /// Substrate relative permittivity.
    pub eps_r: f64,
    /// Substrate thickness d, meters.
    pub thickness: f64,
    /// Equivalent series capacitance Ce, farads (estimated or supplied).
    pub ce: f64,
}

impl CcfsSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("patch_length", self.patch_length),
            ("patch_width", self.patch_width),
            ("feedline_length", self.feedline_length),
            ("feedline_width", self.feedline_width),
            ("eps_r", self.eps_r),
            ("thickness", self.thickness),
            ("ce", self.ce),
        ] {
            if !(v > 0.0) {
                return Err(Error::invalid_parameter(name, "must be > 0"));
            }
        }
        Ok(())
    }

    /// First-order patch-only estimate of Ce; under-predicts the field-solved
    /// value because feedline and fringing contributions are ignored.
    pub fn estimate_ce(&self) -> Result<f64> {
        parallel_plate_capacitance(self.eps_r, self.patch_length * self.patch_width, self.thickness)
    }
}

/// Impedance after inserting a series capacitor: Zin + 1/(j omega C).
pub fn series_capacitor(zin: Complex64, c: f64, frequency: f64) -> Result<Complex64> {
    if !(c > 0.0) {
        return Err(Error::invalid_parameter("c", "must be > 0"));
    }
    if !(frequency > 0.0) {
        return Err(Error::invalid_parameter("frequency", "must be > 0"));
    }
    let omega = 2.0 * std::f64::consts::PI * frequency;
    Ok(zin + Complex64::new(0.0, -1.0 / (omega * c)))
}

/// Ideal parallel-plate capacitance eps0 * eps_r * area / separation.
pub fn parallel_plate_capacitance(eps_r: f64, area: f64, separation: f64) -> Result<f64> {
    if !(eps_r > 0.0) {
        return Err(Error::invalid_parameter("eps_r", "must be > 0"));
    }
    if area < 0.0 {
        return Err(Error::invalid_parameter("area", "must be >= 0"));
    }
    if !(separation > 0.0) {
        return Err(Error::invalid_parameter("separation", "must be > 0"));
    }
    Ok(EPS_0 * eps_r * area / separation)
}

/// Bandwidth quality factor Q = f0 / (f_high - f_low).
pub fn quality_factor(f0: f64, f_low: f64, f_high: f64) -> Result<f64> {
    if !(f0 > 0.0) {
        return Err(Error::invalid_parameter("f0", "must be > 0"));
    }
    if !(f_high > f_low && f_low > 0.0) {
        return Err(Error::invalid_parameter(
            "band",
            "requires f_high > f_low > 0",
        ));
    }
    Ok(f0 / (f_high - f_low))
}

/// Chu/McLean lower bound Q_LB = 1/ka + 1/(ka)^3.
pub fn q_lower_bound(k: f64, a: f64) -> Result<f64> {
    let ka = k * a;
    if !(ka > 0.0) {
        return Err(Error::invalid_parameter("ka", "must be > 0"));
    }
    Ok(1.0 / ka + 1.0 / (ka * ka * ka))
}

/// Reflection coefficient of `zin` against a real reference `z0`.
pub fn reflection(zin: Complex64, z0: f64, frequency: f64) -> Result<PortState> {
    if !(z0 > 0.0) {
        return Err(Error::invalid_parameter("z0", "must be > 0"));
    }
    let denom = zin + z0;
    if denom.norm() == 0.0 {
        return Err(Error::invalid_parameter("zin", "Zin = -Z0 is non-physical"));
    }
    let s11 = (zin - z0) / denom;
    let s11_db = if s11.norm() > 0.0 {
        (20.0 * s11.norm().log10()).max(S11_DB_FLOOR)
    } else {
        S11_DB_FLOOR
    };
    Ok(PortState {
        frequency,
        zin,
        z0,
        s11,
        s11_db,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn series_capacitor_hand_value() {
        let z = series_capacitor(Complex64::new(10.0, 100.0), 2.18e-12, 868e6).unwrap();
        assert_relative_eq!(z.re, 10.0, epsilon = 1e-12);
        // 1/(omega C) = 84.1 ohm
        assert_relative_eq!(z.im, 100.0 - 84.1, max_relative = 2e-3);
        assert!(series_capacitor(z, 0.0, 868e6).is_err());
    }

    #[test]
    fn huge_capacitor_is_a_short() {
        let zin = Complex64::new(42.0, -7.0);
        let z = series_capacitor(zin, 1.0, 1e9).unwrap();
        assert!((z - zin).norm() < 1e-9);
    }

    #[test]
    fn ccfs_patch_estimate() {
        // 16.2 mm x 4.8 mm patch over 0.787 mm of eps_r = 2.2 substrate.
        let c = parallel_plate_capacitance(2.2, 16.2e-3 * 4.8e-3, 0.787e-3).unwrap();
        assert_relative_eq!(c, 1.92e-12, max_relative = 5e-3);
        assert_eq!(parallel_plate_capacitance(2.2, 0.0, 1e-3).unwrap(), 0.0);
        let e0 = parallel_plate_capacitance(1.0, 1.0, 1.0).unwrap();
        assert_relative_eq!(e0, 8.854e-12, max_relative = 1e-4);
    }

    #[test]
    fn q_values() {
        assert_relative_eq!(q_lower_bound(1.0, 1.0).unwrap(), 2.0);
        assert_relative_eq!(q_lower_bound(0.5, 1.0).unwrap(), 10.0);
        let q = quality_factor(2.45e9, 2.385e9, 2.570e9).unwrap();
        assert_relative_eq!(q, 13.24, max_relative = 1e-2);
        assert!(quality_factor(1e9, 2e9, 2e9).is_err());
    }

    #[test]
    fn reflection_cases() {
        let m = reflection(Complex64::new(50.0, 0.0), 50.0, 1e9).unwrap();
        assert_eq!(m.s11, Complex64::new(0.0, 0.0));
        assert_eq!(m.s11_db, S11_DB_FLOOR);
        let h = reflection(Complex64::new(150.0, 0.0), 50.0, 1e9).unwrap();
        assert_relative_eq!(h.s11.norm(), 0.5);
        assert_relative_eq!(h.s11_db, -6.0206, max_relative = 1e-4);
        let open = reflection(Complex64::new(1e12, 0.0), 50.0, 1e9).unwrap();
        assert!((open.s11.re - 1.0).abs() < 1e-9);
        assert!(reflection(Complex64::new(-50.0, 0.0), 50.0, 1e9).is_err());
    }

    proptest! {
        #[test]
        fn series_capacitor_preserves_resistance(
            re in 0.1f64..1e3, im in -1e3f64..1e3, c_pf in 0.1f64..100.0, f_ghz in 0.1f64..10.0
        ) {
            let z = series_capacitor(Complex64::new(re, im), c_pf * 1e-12, f_ghz * 1e9).unwrap();
            prop_assert_eq!(z.re, re);
        }

        #[test]
        fn smaller_capacitance_is_more_capacitive(
            re in 0.1f64..1e3, im in -1e3f64..1e3, c_pf in 0.2f64..100.0, f_ghz in 0.1f64..10.0
        ) {
            let zin = Complex64::new(re, im);
            let z1 = series_capacitor(zin, c_pf * 1e-12, f_ghz * 1e9).unwrap();
            let z2 = series_capacitor(zin, 0.5 * c_pf * 1e-12, f_ghz * 1e9).unwrap();
            prop_assert!(z2.im < z1.im);
        }

        #[test]
        fn passive_loads_reflect_at_most_unity(
            re in 0.0f64..1e4, im in -1e4f64..1e4, z0 in 1.0f64..500.0
        ) {
            let m = reflection(Complex64::new(re, im), z0, 1e9).unwrap();
            prop_assert!(m.s11.norm() <= 1.0 + 1e-12);
        }
    }
}
