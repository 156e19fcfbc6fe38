//! AWGN link emulation: received SNR from a far-field pattern and a link
//! budget, QPSK/16QAM symbol streams, and error vector magnitude.
//!
//! Noise uses a seeded ChaCha20 stream (rand_chacha) so results are
//! reproducible bit-for-bit across runs and thread counts.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::farfield::FarFieldGrid;
use crate::geometry::SPEED_OF_LIGHT;

/// Symbol alphabets, normalized to unit average power.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Modulation {
    Qpsk,
    Qam16,
}

impl Modulation {
    /// Constellation points with unit mean-square amplitude.
    pub fn alphabet(&self) -> Vec<Complex64> {
        match self {
            Modulation::Qpsk => {
                let a = std::f64::consts::FRAC_1_SQRT_2;
                vec![
                    Complex64::new(a, a),
                    Complex64::new(-a, a),
                    Complex64::new(-a, -a),
                    Complex64::new(a, -a),
                ]
            }
            Modulation::Qam16 => {
                // Levels +-1, +-3 scaled so E|s|^2 = 1 (mean square 10).
                let s = 1.0 / 10.0f64.sqrt();
                let mut pts = Vec::with_capacity(16);
                for i in [-3.0, -1.0, 1.0, 3.0] {
                    for q in [-3.0, -1.0, 1.0, 3.0] {
                        pts.push(Complex64::new(i * s, q * s));
                    }
                }
                pts
            }
        }
    }
}

/// Receiver direction: a cardinal axis or an explicit grid direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RxDirection {
    PlusX,
    MinusX,
    PlusY,
    MinusY,
    PlusZ,
    MinusZ,
    Angles { theta_deg: f64, phi_deg: f64 },
}

impl RxDirection {
    pub fn angles(&self) -> (f64, f64) {
        match self {
            RxDirection::PlusX => (90.0, 0.0),
            RxDirection::MinusX => (90.0, 180.0),
            RxDirection::PlusY => (90.0, 90.0),
            RxDirection::MinusY => (90.0, 270.0),
            RxDirection::PlusZ => (0.0, 0.0),
            RxDirection::MinusZ => (180.0, 0.0),
            RxDirection::Angles { theta_deg, phi_deg } => (*theta_deg, *phi_deg),
        }
    }

    /// The six cardinal directions of the measurement protocol.
    pub fn cardinals() -> [RxDirection; 6] {
        [
            RxDirection::PlusX,
            RxDirection::MinusX,
            RxDirection::PlusY,
            RxDirection::MinusY,
            RxDirection::PlusZ,
            RxDirection::MinusZ,
        ]
    }
}

/// One link-budget and stream configuration.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LinkConfig {
    pub modulation: Modulation,
    pub symbol_count: usize,
    /// Informational symbol rate, baud.
    pub symbol_rate: f64,
    /// Transmit power, dBm.
    pub tx_power_dbm: f64,
    /// Link range for free-space path loss, meters.
    pub range_m: f64,
    pub rx_direction: RxDirection,
    /// Receiver noise floor, dBm; -infinity disables noise.
    pub noise_floor_dbm: f64,
    pub seed: u64,
}

impl Default for LinkConfig {
    fn default() -> Self {
        LinkConfig {
            modulation: Modulation::Qpsk,
            symbol_count: 100_000,
            symbol_rate: 1.0e6,
            tx_power_dbm: 0.0,
            range_m: 1.5,
            rx_direction: RxDirection::PlusX,
            noise_floor_dbm: -90.0,
            seed: 0,
        }
    }
}

/// Simulated link outcome.
#[derive(Debug, Clone)]
pub struct LinkResult {
    pub snr_db: f64,
    pub evm_percent: f64,
    pub reference: Vec<Complex64>,
    pub constellation: Vec<Complex64>,
}

/// Free-space path loss in dB at `range` meters and `frequency` hertz.
pub fn free_space_path_loss_db(range: f64, frequency: f64) -> Result<f64> {
    if !(range > 0.0) {
        return Err(Error::invalid_parameter("range", "must be > 0"));
    }
    if !(frequency > 0.0) {
        return Err(Error::invalid_parameter("frequency", "must be > 0"));
    }
    let lambda = SPEED_OF_LIGHT / frequency;
    Ok(20.0 * (4.0 * std::f64::consts::PI * range / lambda).log10())
}

/// RMS error vector magnitude in percent of the reference RMS.
pub fn evm(received: &[Complex64], reference: &[Complex64]) -> Result<f64> {
    if received.len() != reference.len() {
        return Err(Error::LengthMismatch {
            left: received.len(),
            right: reference.len(),
        });
    }
    if reference.is_empty() {
        return Err(Error::invalid_parameter("reference", "must not be empty"));
    }
    let mut err = 0.0;
    let mut refp = 0.0;
    for (r, s) in received.iter().zip(reference) {
        err += (r - s).norm_sqr();
        refp += s.norm_sqr();
    }
    if refp == 0.0 {
        return Err(Error::invalid_parameter("reference", "has zero power"));
    }
    Ok(100.0 * (err / refp).sqrt())
}

/// Simulate one AWGN link through the antenna pattern.
///
/// SNR_dB = tx_power - FSPL + D(theta, phi) - noise_floor, with the pattern
/// gain read at the nearest grid sample (error if off-grid by > 1e-6 deg).
pub fn simulate_link(pattern: &FarFieldGrid, config: &LinkConfig) -> Result<LinkResult> {
    if config.symbol_count < 1000 {
        return Err(Error::invalid_parameter(
            "symbol_count",
            "needs >= 1000 symbols for EVM statistics",
        ));
    }
    let (theta, phi) = config.rx_direction.angles();
    let (it, ip, err_deg) = pattern.nearest_sample(theta, phi);
    if err_deg > 1e-6 {
        return Err(Error::DirectionOffGrid {
            theta_deg: theta,
            phi_deg: phi,
        });
    }
    let gain_dbi = pattern.directivity_dbi(pattern.index(it, ip));
    let fspl = free_space_path_loss_db(config.range_m, pattern.frequency)?;
    let snr_db = config.tx_power_dbm - fspl + gain_dbi - config.noise_floor_dbm;

    let alphabet = config.modulation.alphabet();
    let mut rng = ChaCha20Rng::seed_from_u64(config.seed);
    let mut reference = Vec::with_capacity(config.symbol_count);
    let mut constellation = Vec::with_capacity(config.symbol_count);
    // Unit-power alphabet: noise variance per complex sample is 10^(-SNR/10).
    let sigma = if snr_db.is_infinite() && snr_db > 0.0 {
        0.0
    } else {
        (10.0f64.powf(-snr_db / 10.0) / 2.0).sqrt()
    };
    for _ in 0..config.symbol_count {
        let s = alphabet[rng.gen_range(0..alphabet.len())];
        let n_re: f64 = rng.sample(StandardNormal);
        let n_im: f64 = rng.sample(StandardNormal);
        reference.push(s);
        constellation.push(s + Complex64::new(sigma * n_re, sigma * n_im));
    }
    let evm_percent = evm(&constellation, &reference)?;
    Ok(LinkResult {
        snr_db,
        evm_percent,
        reference,
        constellation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::farfield::GridSpec;
    use approx::assert_relative_eq;

    fn isotropic_pattern(f: f64) -> FarFieldGrid {
        let spec = GridSpec::default();
        let theta = spec.theta_samples();
        let phi = spec.phi_samples();
        let n = theta.len() * phi.len();
        let mut g = FarFieldGrid {
            frequency: f,
            theta_deg: theta,
            phi_deg: phi,
            e_theta: vec![Complex64::new(1.0, 0.0); n],
            e_phi: vec![Complex64::new(0.0, 0.0); n],
            radiated_power: 1.0,
            directivity: vec![1.0; n],
        };
        g.radiated_power = 1.0;
        g
    }

    #[test]
    fn alphabets_have_unit_power() {
        for m in [Modulation::Qpsk, Modulation::Qam16] {
            let a = m.alphabet();
            let p: f64 = a.iter().map(|s| s.norm_sqr()).sum::<f64>() / a.len() as f64;
            assert_relative_eq!(p, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn evm_hand_values() {
        let r = vec![Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)];
        assert_eq!(evm(&r, &r).unwrap(), 0.0);
        let rx = vec![Complex64::new(1.1, 0.0), Complex64::new(-1.1, 0.0)];
        assert_relative_eq!(evm(&rx, &r).unwrap(), 10.0, max_relative = 1e-12);
        let zeros = vec![Complex64::new(0.0, 0.0); 2];
        assert_relative_eq!(evm(&zeros, &r).unwrap(), 100.0);
        assert!(evm(&r[..1], &r).is_err());
    }

    #[test]
    fn evm_rotation_invariant() {
        let rot = Complex64::from_polar(1.0, 0.7);
        let refs: Vec<Complex64> = Modulation::Qam16.alphabet();
        let recv: Vec<Complex64> = refs.iter().map(|s| s * 1.05).collect();
        let e1 = evm(&recv, &refs).unwrap();
        let recv_r: Vec<Complex64> = recv.iter().map(|s| s * rot).collect();
        let refs_r: Vec<Complex64> = refs.iter().map(|s| s * rot).collect();
        let e2 = evm(&recv_r, &refs_r).unwrap();
        assert_relative_eq!(e1, e2, max_relative = 1e-12);
    }

    #[test]
    fn noiseless_link_has_zero_evm() {
        let p = isotropic_pattern(868e6);
        let cfg = LinkConfig {
            noise_floor_dbm: f64::NEG_INFINITY,
            symbol_count: 1000,
            ..LinkConfig::default()
        };
        let r = simulate_link(&p, &cfg).unwrap();
        assert_eq!(r.evm_percent, 0.0);
    }

    #[test]
    fn evm_follows_awgn_law() {
        let p = isotropic_pattern(868e6);
        let fspl = free_space_path_loss_db(1.5, 868e6).unwrap();
        for snr in [10.0, 20.0, 30.0] {
            let cfg = LinkConfig {
                // tx power arranged so the budget lands exactly on `snr`
                tx_power_dbm: snr + fspl - 90.0,
                noise_floor_dbm: -90.0,
                symbol_count: 100_000,
                seed: 7,
                ..LinkConfig::default()
            };
            let r = simulate_link(&p, &cfg).unwrap();
            assert_relative_eq!(r.snr_db, snr, epsilon = 1e-9);
            let expected = 100.0 * 10.0f64.powf(-snr / 20.0);
            assert_relative_eq!(r.evm_percent, expected, max_relative = 0.03);
        }
    }

    #[test]
    fn isotropic_pattern_gives_identical_evm_across_directions() {
        let p = isotropic_pattern(2.45e9);
        let mut evms = Vec::new();
        for d in RxDirection::cardinals() {
            let cfg = LinkConfig {
                rx_direction: d,
                symbol_count: 2000,
                seed: 11,
                ..LinkConfig::default()
            };
            evms.push(simulate_link(&p, &cfg).unwrap().evm_percent);
        }
        for e in &evms {
            assert_eq!(*e, evms[0]);
        }
    }

    #[test]
    fn off_grid_direction_errors() {
        let p = isotropic_pattern(868e6);
        let cfg = LinkConfig {
            rx_direction: RxDirection::Angles { theta_deg: 12.3, phi_deg: 4.5 },
            symbol_count: 1000,
            ..LinkConfig::default()
        };
        assert!(matches!(
            simulate_link(&p, &cfg),
            Err(Error::DirectionOffGrid { .. })
        ));
    }

    #[test]
    fn fspl_reference_value() {
        // 1 m at 1 GHz: 20 log10(4 pi f / c) = 32.45 dB
        let l = free_space_path_loss_db(1.0, 1e9).unwrap();
        assert_relative_eq!(l, 32.45, max_relative = 1e-3);
    }
}
