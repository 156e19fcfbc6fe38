//! Far-field radiation, directivity, and isotropy-deviation metrics.
//!
//! Currents radiate as short filaments at segment centers with linear phase
//! over the sphere; directivity follows from quadrature-weighted Poynting
//! flux. The closed-form U-radiator pattern and its deviation approximation
//! live here as independent oracles.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{SegmentMesh, SPEED_OF_LIGHT};
use crate::mom::{ETA_0, MU_0};

/// Sphere sampling for far-field grids.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GridSpec {
    pub theta_step_deg: f64,
    pub phi_step_deg: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { theta_step_deg: 5.0, phi_step_deg: 5.0 }
    }
}

impl GridSpec {
    pub fn theta_samples(&self) -> Vec<f64> {
        let n = (180.0 / self.theta_step_deg).round() as usize;
        (0..=n).map(|i| i as f64 * self.theta_step_deg).collect()
    }

    pub fn phi_samples(&self) -> Vec<f64> {
        let n = (360.0 / self.phi_step_deg).round() as usize;
        (0..n).map(|i| i as f64 * self.phi_step_deg).collect()
    }
}

/// theta x phi sphere sampling of the far field with derived directivity.
#[derive(Debug, Clone)]
pub struct FarFieldGrid {
    pub frequency: f64,
    pub theta_deg: Vec<f64>,
    pub phi_deg: Vec<f64>,
    /// E-field pattern components (r * E, volts), row-major [theta][phi].
    pub e_theta: Vec<Complex64>,
    pub e_phi: Vec<Complex64>,
    /// Total radiated power in watts.
    pub radiated_power: f64,
    /// Directivity per sample, linear (dimensionless).
    pub directivity: Vec<f64>,
}

impl FarFieldGrid {
    pub fn index(&self, it: usize, ip: usize) -> usize {
        it * self.phi_deg.len() + ip
    }

    /// Solid-angle quadrature weight for theta ring `it` (steradians per
    /// phi sample); pole rings carry half a theta step.
    pub fn ring_weight(&self, it: usize) -> f64 {
        let dt = (self.theta_deg[1] - self.theta_deg[0]).to_radians();
        let dp = (self.phi_deg[1] - self.phi_deg[0]).to_radians();
        let half = it == 0 || it == self.theta_deg.len() - 1;
        let w_t = if half { dt / 2.0 } else { dt };
        self.theta_deg[it].to_radians().sin() * w_t * dp
    }

    /// Directivity in dBi at a sample, floored to keep nulls finite.
    pub fn directivity_dbi(&self, idx: usize) -> f64 {
        10.0 * self.directivity[idx].max(1e-15).log10()
    }

    /// Mean directivity over the sphere (should be 1 within quadrature error).
    pub fn mean_directivity(&self) -> f64 {
        let mut sum = 0.0;
        let mut omega = 0.0;
        for it in 0..self.theta_deg.len() {
            let w = self.ring_weight(it);
            for ip in 0..self.phi_deg.len() {
                sum += self.directivity[self.index(it, ip)] * w;
                omega += w;
            }
        }
        sum / omega
    }

    /// Nearest grid sample to a direction; returns (it, ip, angular error deg).
    pub fn nearest_sample(&self, theta_deg: f64, phi_deg: f64) -> (usize, usize, f64) {
        let phi = phi_deg.rem_euclid(360.0);
        let it = self
            .theta_deg
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - theta_deg).abs().partial_cmp(&(b.1 - theta_deg).abs()).unwrap())
            .map(|(i, _)| i)
            .unwrap();
        let ip = self
            .phi_deg
            .iter()
            .enumerate()
            .min_by(|a, b| {
                let da = wrap_deg(a.1 - phi);
                let db = wrap_deg(b.1 - phi);
                da.partial_cmp(&db).unwrap()
            })
            .map(|(i, _)| i)
            .unwrap();
        let err = ((self.theta_deg[it] - theta_deg).abs()).max(wrap_deg(self.phi_deg[ip] - phi));
        (it, ip, err)
    }
}

fn wrap_deg(d: f64) -> f64 {
    let d = d.rem_euclid(360.0);
    d.min(360.0 - d)
}

/// Max-minus-min isotropy deviation over the sphere.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DeviationReport {
    pub frequency: f64,
    pub d_max_dbi: f64,
    pub d_min_dbi: f64,
    /// d_max - d_min in dB; 0 for an ideal isotropic radiator.
    pub deviation_db: f64,
    pub kind: DeviationKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeviationKind {
    GainDeviation,
    DirectivityDeviation,
}

/// Radiate per-segment currents (signed along each segment's a->b direction)
/// to a far-field sphere.
pub fn radiate(
    mesh: &SegmentMesh,
    segment_currents: &[Complex64],
    frequency: f64,
    grid: GridSpec,
) -> Result<FarFieldGrid> {
    if segment_currents.len() != mesh.segments.len() {
        return Err(Error::LengthMismatch {
            left: segment_currents.len(),
            right: mesh.segments.len(),
        });
    }
    if segment_currents.iter().all(|c| c.norm() == 0.0) {
        return Err(Error::ZeroCurrent);
    }
    let k = 2.0 * std::f64::consts::PI * frequency / SPEED_OF_LIGHT;
    let omega = 2.0 * std::f64::consts::PI * frequency;
    // Moment per segment: I * L * tangent, radiating from the center.
    let moments: Vec<([f64; 3], Complex64, [f64; 3])> = (0..mesh.segments.len())
        .map(|s| {
            (
                mesh.segment_center(s),
                segment_currents[s] * mesh.segment_length(s),
                mesh.segment_tangent(s),
            )
        })
        .collect();

    let theta_deg = grid.theta_samples();
    let phi_deg = grid.phi_samples();
    let n = theta_deg.len() * phi_deg.len();
    let mut e_theta = vec![Complex64::new(0.0, 0.0); n];
    let mut e_phi = vec![Complex64::new(0.0, 0.0); n];
    let scale = omega * MU_0 / (4.0 * std::f64::consts::PI);
    for (it, th) in theta_deg.iter().enumerate() {
        let (st, ct) = th.to_radians().sin_cos();
        for (ip, ph) in phi_deg.iter().enumerate() {
            let (sp, cp) = ph.to_radians().sin_cos();
            let rhat = [st * cp, st * sp, ct];
            let that = [ct * cp, ct * sp, -st];
            let phat = [-sp, cp, 0.0];
            let mut ft = Complex64::new(0.0, 0.0);
            let mut fp = Complex64::new(0.0, 0.0);
            for (c, il, t) in &moments {
                let phase = k * (rhat[0] * c[0] + rhat[1] * c[1] + rhat[2] * c[2]);
                let e = Complex64::new(0.0, phase).exp() * il;
                ft += e * (t[0] * that[0] + t[1] * that[1] + t[2] * that[2]);
                fp += e * (t[0] * phat[0] + t[1] * phat[1] + t[2] * phat[2]);
            }
            let idx = it * phi_deg.len() + ip;
            e_theta[idx] = ft * scale;
            e_phi[idx] = fp * scale;
        }
    }
    let mut grid_out = FarFieldGrid {
        frequency,
        theta_deg,
        phi_deg,
        e_theta,
        e_phi,
        radiated_power: 0.0,
        directivity: vec![0.0; n],
    };
    finalize_directivity(&mut grid_out);
    Ok(grid_out)
}

/// Fill radiated power and directivity from the E-field samples.
fn finalize_directivity(grid: &mut FarFieldGrid) {
    let nt = grid.theta_deg.len();
    let np = grid.phi_deg.len();
    let mut p = 0.0;
    for it in 0..nt {
        let w = grid.ring_weight(it);
        for ip in 0..np {
            let idx = it * np + ip;
            let u = (grid.e_theta[idx].norm_sqr() + grid.e_phi[idx].norm_sqr()) / (2.0 * ETA_0);
            p += u * w;
        }
    }
    grid.radiated_power = p;
    for it in 0..nt {
        for ip in 0..np {
            let idx = it * np + ip;
            let u = (grid.e_theta[idx].norm_sqr() + grid.e_phi[idx].norm_sqr()) / (2.0 * ETA_0);
            grid.directivity[idx] = 4.0 * std::f64::consts::PI * u / p;
        }
    }
}

/// Directivity deviation: max minus min of directivity in dB over the grid.
pub fn directivity_deviation(grid: &FarFieldGrid) -> DeviationReport {
    deviation_of(grid, DeviationKind::DirectivityDeviation, None)
}

/// Gain deviation for a driven solution: directivity rescaled by
/// radiated/accepted power before taking extrema.
pub fn gain_deviation(grid: &FarFieldGrid, accepted_power: f64) -> DeviationReport {
    deviation_of(grid, DeviationKind::GainDeviation, Some(accepted_power))
}

fn deviation_of(grid: &FarFieldGrid, kind: DeviationKind, accepted: Option<f64>) -> DeviationReport {
    let offset = match accepted {
        // Gain = D * (P_rad / P_accepted); lossless models keep these equal.
        Some(p) if p > 0.0 => 10.0 * (grid.radiated_power / p).log10(),
        _ => 0.0,
    };
    let mut d_max = f64::NEG_INFINITY;
    let mut d_min = f64::INFINITY;
    for idx in 0..grid.directivity.len() {
        let d = grid.directivity_dbi(idx) + offset;
        d_max = d_max.max(d);
        d_min = d_min.min(d);
    }
    DeviationReport {
        frequency: grid.frequency,
        d_max_dbi: d_max,
        d_min_dbi: d_min,
        deviation_db: d_max - d_min,
        kind,
    }
}

/// Closed-form U-radiator power pattern sin^2(X h) / X^2 with
/// X = (k/2) sin(theta) cos(phi), evaluated as h^2 at the removable
/// singularity, normalized into a directivity grid.
pub fn analytic_u_pattern(h: f64, frequency: f64, grid: GridSpec) -> Result<FarFieldGrid> {
    if !(h > 0.0) {
        return Err(Error::invalid_parameter("h", "must be > 0"));
    }
    let k = 2.0 * std::f64::consts::PI * frequency / SPEED_OF_LIGHT;
    let theta_deg = grid.theta_samples();
    let phi_deg = grid.phi_samples();
    let n = theta_deg.len() * phi_deg.len();
    let mut e_theta = vec![Complex64::new(0.0, 0.0); n];
    let e_phi = vec![Complex64::new(0.0, 0.0); n];
    for (it, th) in theta_deg.iter().enumerate() {
        let st = th.to_radians().sin();
        for (ip, ph) in phi_deg.iter().enumerate() {
            let s = st * ph.to_radians().cos();
            let x = 0.5 * k * s;
            let val = if x.abs() < 1e-9 {
                h * h
            } else {
                let xs = (x * h).sin();
                xs * xs / (x * x)
            };
            // Store sqrt(2 eta0 U) so the shared power/directivity path applies.
            e_theta[it * phi_deg.len() + ip] = Complex64::new((2.0 * ETA_0 * val).sqrt(), 0.0);
        }
    }
    let mut grid_out = FarFieldGrid {
        frequency,
        theta_deg,
        phi_deg,
        e_theta,
        e_phi,
        radiated_power: 0.0,
        directivity: vec![0.0; n],
    };
    finalize_directivity(&mut grid_out);
    Ok(grid_out)
}

/// Small-h isotropy-deviation approximation 1 - sin^2(pi h/lambda)/(pi h/lambda)^2
/// as a fraction of the peak power.
pub fn analytic_deviation(h_over_lambda: f64) -> Result<f64> {
    if !(h_over_lambda > 0.0 && h_over_lambda < 0.5) {
        return Err(Error::invalid_parameter("h_over_lambda", "must lie in (0, 0.5)"));
    }
    let x = std::f64::consts::PI * h_over_lambda;
    Ok(1.0 - (x.sin() / x).powi(2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_dipole, WirePart};
    use approx::assert_relative_eq;

    #[test]
    fn hertzian_dipole_pattern() {
        // One short segment with uniform current -> sin(theta), D_max = 1.5.
        let f = 1e9;
        let lam = SPEED_OF_LIGHT / f;
        let mut b_nodes = vec![[0.0, 0.0, -0.005 * lam], [0.0, 0.0, 0.005 * lam]];
        let mesh = SegmentMesh {
            nodes: std::mem::take(&mut b_nodes),
            segments: vec![crate::geometry::Segment { a: 0, b: 1, radius: 1e-4, tag: WirePart::Wire }],
            loads: vec![],
            port: None,
        };
        let grid = radiate(&mesh, &[Complex64::new(1.0, 0.0)], f, GridSpec::default()).unwrap();
        let d_max = grid.directivity.iter().cloned().fold(0.0_f64, f64::max);
        assert_relative_eq!(d_max, 1.5, max_relative = 0.02);
        assert_relative_eq!(grid.mean_directivity(), 1.0, max_relative = 0.01);
    }

    #[test]
    fn zero_current_errors() {
        let mesh = build_dipole(0.5, 1e-3, 11).unwrap();
        let zeros = vec![Complex64::new(0.0, 0.0); mesh.segments.len()];
        assert!(matches!(radiate(&mesh, &zeros, 1e9, GridSpec::default()), Err(Error::ZeroCurrent)));
    }

    #[test]
    fn deviation_of_constant_grid_is_zero() {
        let g = analytic_u_pattern(1e-6, 1e9, GridSpec::default()).unwrap();
        let dev = directivity_deviation(&g);
        assert!(dev.deviation_db < 1e-6, "deviation {}", dev.deviation_db);
    }

    #[test]
    fn deviation_hand_value() {
        // Linear powers {1, 2, 4} -> 6.02 dB.
        assert_relative_eq!(10.0 * (4.0f64 / 1.0).log10(), 6.0206, epsilon = 1e-3);
        let f = 1e9;
        let lam = SPEED_OF_LIGHT / f;
        let g = analytic_u_pattern(0.3 * lam, f, GridSpec::default()).unwrap();
        let dev = directivity_deviation(&g);
        let expected = -10.0 * (1.0 - analytic_deviation(0.3).unwrap()).log10();
        assert_relative_eq!(dev.deviation_db, expected, max_relative = 0.02);
    }

    #[test]
    fn analytic_pattern_ratio_hand_value() {
        let f = 1e9;
        let lam = SPEED_OF_LIGHT / f;
        let g = analytic_u_pattern(0.1 * lam, f, GridSpec::default()).unwrap();
        // theta=90, phi=0 vs theta=0: sin^2(0.1 pi)/(0.1 pi)^2 = 0.9675.
        let (it0, ip0, _) = g.nearest_sample(90.0, 0.0);
        let (it1, ip1, _) = g.nearest_sample(0.0, 0.0);
        let ratio = g.directivity[g.index(it0, ip0)] / g.directivity[g.index(it1, ip1)];
        assert_relative_eq!(ratio, 0.9675, max_relative = 1e-3);
    }

    #[test]
    fn analytic_deviation_values_and_monotonicity() {
        assert!(analytic_deviation(0.0).is_err());
        assert!(analytic_deviation(0.5).is_err());
        assert!(analytic_deviation(1e-9).unwrap() < 1e-12);
        assert_relative_eq!(analytic_deviation(0.1).unwrap(), 0.0325, max_relative = 2e-2);
        assert_relative_eq!(analytic_deviation(0.3).unwrap(), 0.2632, max_relative = 2e-3);
        let mut prev = 0.0;
        for i in 1..50 {
            let v = analytic_deviation(i as f64 * 0.01).unwrap();
            assert!(v > prev);
            prev = v;
        }
    }

    #[test]
    fn small_h_analytic_pattern_is_isotropic() {
        let f = 1e9;
        let lam = SPEED_OF_LIGHT / f;
        let g = analytic_u_pattern(1e-4 * lam, f, GridSpec::default()).unwrap();
        assert!(directivity_deviation(&g).deviation_db < 1e-6);
    }
}
