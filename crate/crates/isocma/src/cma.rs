//! Characteristic-mode decomposition, tracking, resonances, and modal
//! weighting coefficients.
//!
//! Modes solve the generalized symmetric eigenproblem X J = lambda R J over
//! Z = R + jX, via a clipped inverse square root of R and a standard
//! symmetric eigensolve. Eigencurrents are R-orthonormal and real.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::mom::ImpedanceOperator;

/// One characteristic mode at a single frequency.
#[derive(Debug, Clone)]
pub struct CharacteristicMode {
    pub frequency: f64,
    /// Eigenvalue lambda_n (reactive-to-radiated power ratio).
    pub eigenvalue: f64,
    /// Eigencurrent, power-normalized so <J, R J> = 1; real per TCM.
    pub eigencurrent: DVector<f64>,
    /// Characteristic angle in degrees, 180 at resonance.
    pub characteristic_angle_deg: f64,
    /// Modal significance in (0, 1], 1 at resonance.
    pub modal_significance: f64,
    /// Stable identity across a frequency sweep (assigned by tracking).
    pub track_id: u32,
}

/// Characteristic angle in degrees: 180 - atan(lambda).
pub fn characteristic_angle(lambda: f64) -> f64 {
    180.0 - lambda.atan().to_degrees()
}

/// Modal significance 1/|1 + j lambda|.
pub fn modal_significance(lambda: f64) -> f64 {
    1.0 / (1.0 + lambda * lambda).sqrt()
}

/// Symmetrized real and imaginary parts of an impedance operator.
pub fn split_operator(z: &ImpedanceOperator) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = z.matrix.nrows();
    let mut r = DMatrix::<f64>::zeros(n, n);
    let mut x = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            r[(i, j)] = 0.5 * (z.matrix[(i, j)].re + z.matrix[(j, i)].re);
            x[(i, j)] = 0.5 * (z.matrix[(i, j)].im + z.matrix[(j, i)].im);
        }
    }
    (r, x)
}

/// Relative eigenvalue threshold below which the radiation operator R is
/// treated as numerically rank-deficient. A wire structure only couples to
/// a finite number of radiating harmonics, so R's spectrum decays
/// exponentially into a roundoff-noise cluster; directions below this cut
/// carry no resolvable radiated power and are excluded from the modal basis.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// Decompose Z = R + jX into the `n_modes` characteristic modes of smallest
/// |lambda|, power-normalized against R. Fewer modes are returned when R's
/// numerical rank is below `n_modes`.
pub fn decompose(z: &ImpedanceOperator, n_modes: usize) -> Result<Vec<CharacteristicMode>> {
    let (r, x) = split_operator(z);
    decompose_rx(&r, &x, z.frequency, n_modes)
}

/// Decomposition over explicit R and X matrices (shared with tests/toys).
pub fn decompose_rx(
    r: &DMatrix<f64>,
    x: &DMatrix<f64>,
    frequency: f64,
    n_modes: usize,
) -> Result<Vec<CharacteristicMode>> {
    let n = r.nrows();
    if n_modes == 0 || n_modes > n {
        return Err(Error::invalid_parameter("n_modes", "must be in 1..=N"));
    }
    let eig_r = nalgebra::SymmetricEigen::new(r.clone());
    let max_ev = eig_r.eigenvalues.iter().cloned().fold(f64::MIN, f64::max);
    if max_ev <= 0.0 {
        return Err(Error::IndefiniteOperator { min_eig: max_ev, norm: max_ev.abs() });
    }
    let min_ev = eig_r.eigenvalues.iter().cloned().fold(f64::MAX, f64::min);
    // Tolerate tiny negative eigenvalues as quadrature noise; anything worse
    // means the kernel or mesh is broken.
    if min_ev < -1e-6 * max_ev {
        return Err(Error::IndefiniteOperator { min_eig: min_ev, norm: max_ev });
    }
    // Restrict to R's numerically significant subspace: columns of U scale
    // the kept eigenvectors by ev^{-1/2}, so J = U u maps the reduced
    // problem back with <J, R J> = <u, u> exactly.
    let cut = RANK_TOLERANCE * max_ev;
    let kept: Vec<usize> = (0..n).filter(|&k| eig_r.eigenvalues[k] >= cut).collect();
    let rank = kept.len();
    if rank == 0 {
        return Err(Error::IndefiniteOperator { min_eig: min_ev, norm: max_ev });
    }
    let mut u = DMatrix::<f64>::zeros(n, rank);
    for (c, &k) in kept.iter().enumerate() {
        let s = 1.0 / eig_r.eigenvalues[k].sqrt();
        for i in 0..n {
            u[(i, c)] = eig_r.eigenvectors[(i, k)] * s;
        }
    }
    let mut s_mat = u.transpose() * x * &u;
    // Exact symmetry for the eigensolver.
    for i in 0..rank {
        for j in (i + 1)..rank {
            let v = 0.5 * (s_mat[(i, j)] + s_mat[(j, i)]);
            s_mat[(i, j)] = v;
            s_mat[(j, i)] = v;
        }
    }
    let eig = nalgebra::SymmetricEigen::new(s_mat);
    let mut order: Vec<usize> = (0..rank).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[a]
            .abs()
            .partial_cmp(&eig.eigenvalues[b].abs())
            .unwrap()
    });
    let take = n_modes.min(rank);
    let mut modes = Vec::with_capacity(take);
    for &k in order.iter().take(take) {
        let y = eig.eigenvectors.column(k);
        let mut j = &u * y;
        // <J, R J> = 1 holds by construction; renormalize against the
        // full R to keep the invariant tight.
        let norm = (j.dot(&(r * &j))).abs().sqrt();
        if norm > 0.0 {
            j /= norm;
        }
        // Deterministic global sign: largest-magnitude entry positive.
        let mut imax = 0;
        for i in 0..n {
            if j[i].abs() > j[imax].abs() {
                imax = i;
            }
        }
        if j[imax] < 0.0 {
            j = -j;
        }
        // The reduced eigenvalue carries roundoff amplified by R's dynamic
        // range; the full-space Rayleigh quotient of the back-mapped current
        // is second-order accurate in the eigenvector error and is what
        // downstream consumers (CA, MS, MWC) should see.
        let lambda = j.dot(&(x * &j)) / j.dot(&(r * &j));
        modes.push(CharacteristicMode {
            frequency,
            eigenvalue: lambda,
            eigencurrent: j,
            characteristic_angle_deg: characteristic_angle(lambda),
            modal_significance: modal_significance(lambda),
            track_id: u32::MAX,
        });
    }
    Ok(modes)
}

/// Modal weighting coefficient <J_n, E^i> / (1 + j lambda_n).
pub fn mwc(mode: &CharacteristicMode, excitation: &DVector<Complex64>) -> Complex64 {
    let mut inner = Complex64::new(0.0, 0.0);
    for i in 0..mode.eigencurrent.len() {
        inner += excitation[i] * mode.eigencurrent[i];
    }
    inner / Complex64::new(1.0, mode.eigenvalue)
}

/// Modes tracked across a frequency sweep.
#[derive(Debug, Clone)]
pub struct ModeSweep {
    pub frequencies: Vec<f64>,
    /// Per-frequency mode sets with `track_id` filled in.
    pub modes: Vec<Vec<CharacteristicMode>>,
    /// track_id -> per-frequency mode index (None where the track is absent).
    pub tracks: BTreeMap<u32, Vec<Option<usize>>>,
}

impl ModeSweep {
    /// Characteristic-angle samples (frequency, CA degrees) of one track.
    pub fn track_angles(&self, track_id: u32) -> Result<Vec<(f64, f64)>> {
        let track = self.tracks.get(&track_id).ok_or(Error::TrackNotFound(track_id))?;
        Ok(track
            .iter()
            .enumerate()
            .filter_map(|(fi, &mi)| {
                mi.map(|mi| (self.frequencies[fi], self.modes[fi][mi].characteristic_angle_deg))
            })
            .collect())
    }

    /// The mode of a track at the sweep sample nearest to `frequency`.
    pub fn track_mode_near(&self, track_id: u32, frequency: f64) -> Result<&CharacteristicMode> {
        let track = self.tracks.get(&track_id).ok_or(Error::TrackNotFound(track_id))?;
        let mut best: Option<(f64, &CharacteristicMode)> = None;
        for (fi, &mi) in track.iter().enumerate() {
            if let Some(mi) = mi {
                let d = (self.frequencies[fi] - frequency).abs();
                if best.is_none() || d < best.as_ref().unwrap().0 {
                    best = Some((d, &self.modes[fi][mi]));
                }
            }
        }
        best.map(|(_, m)| m).ok_or(Error::TrackNotFound(track_id))
    }
}

/// Correlation floor below which a mode starts a new track.
pub const TRACK_CORRELATION_FLOOR: f64 = 0.5;

/// Assign stable track ids across a sweep by greedy eigencurrent correlation
/// between adjacent frequencies; R of the later frequency weights the inner
/// product. Ties break by eigenvalue proximity.
pub fn track_modes(
    frequencies: &[f64],
    mut per_freq_modes: Vec<Vec<CharacteristicMode>>,
    r_per_freq: &[DMatrix<f64>],
) -> Result<ModeSweep> {
    if frequencies.len() != per_freq_modes.len() || frequencies.len() != r_per_freq.len() {
        return Err(Error::LengthMismatch {
            left: frequencies.len(),
            right: per_freq_modes.len(),
        });
    }
    if frequencies.is_empty() {
        return Err(Error::invalid_parameter("frequencies", "must not be empty"));
    }
    let mut next_track: u32 = 0;
    for m in per_freq_modes[0].iter_mut() {
        m.track_id = next_track;
        next_track += 1;
    }
    for fi in 1..frequencies.len() {
        let (prev_slice, curr_slice) = per_freq_modes.split_at_mut(fi);
        let prev = &prev_slice[fi - 1];
        let curr = &mut curr_slice[0];
        let r = &r_per_freq[fi];
        // Candidate correlations |<J_prev, R J_curr>| (both near R-normalized).
        let mut cands: Vec<(f64, usize, usize)> = Vec::new();
        for (pi, pm) in prev.iter().enumerate() {
            let rj_all: DVector<f64> = r * &pm.eigencurrent;
            for (ci, cm) in curr.iter().enumerate() {
                let raw = rj_all.dot(&cm.eigencurrent).abs();
                let na = (pm.eigencurrent.dot(&(r * &pm.eigencurrent))).abs().sqrt();
                let nb = (cm.eigencurrent.dot(&(r * &cm.eigencurrent))).abs().sqrt();
                let corr = if na > 0.0 && nb > 0.0 { raw / (na * nb) } else { 0.0 };
                cands.push((corr, pi, ci));
            }
        }
        cands.sort_by(|a, b| {
            b.0.partial_cmp(&a.0).unwrap().then_with(|| {
                let da = (prev[a.1].eigenvalue - curr[a.2].eigenvalue).abs();
                let db = (prev[b.1].eigenvalue - curr[b.2].eigenvalue).abs();
                da.partial_cmp(&db).unwrap()
            })
        });
        let mut prev_used = vec![false; prev.len()];
        let mut curr_assigned = vec![false; curr.len()];
        for (corr, pi, ci) in cands {
            if corr < TRACK_CORRELATION_FLOOR {
                break;
            }
            if prev_used[pi] || curr_assigned[ci] {
                continue;
            }
            curr[ci].track_id = prev[pi].track_id;
            prev_used[pi] = true;
            curr_assigned[ci] = true;
        }
        for (ci, cm) in curr.iter_mut().enumerate() {
            if !curr_assigned[ci] {
                // Mode birth: no ancestor correlates above the floor.
                cm.track_id = next_track;
                next_track += 1;
            }
        }
    }
    let mut tracks: BTreeMap<u32, Vec<Option<usize>>> = BTreeMap::new();
    for (fi, modes) in per_freq_modes.iter().enumerate() {
        for (mi, m) in modes.iter().enumerate() {
            tracks
                .entry(m.track_id)
                .or_insert_with(|| vec![None; frequencies.len()])[fi] = Some(mi);
        }
    }
    Ok(ModeSweep {
        frequencies: frequencies.to_vec(),
        modes: per_freq_modes,
        tracks,
    })
}

/// Linearly interpolated resonance crossings of CA = 180 degrees along a
/// track. Only descending crossings count (lambda passing - to +): by
/// Foster's theorem lambda increases with frequency between anti-resonances,
/// so an ascending 180-degree crossing is the CA wrap at an anti-resonance
/// (lambda jumping +inf to -inf), not a resonance.
pub fn find_resonances(samples: &[(f64, f64)]) -> Vec<f64> {
    let mut out = Vec::new();
    for w in samples.windows(2) {
        let (f0, a0) = w[0];
        let (f1, a1) = w[1];
        let d0 = a0 - 180.0;
        let d1 = a1 - 180.0;
        if d0 == 0.0 {
            out.push(f0);
        } else if d0 > 0.0 && d1 < 0.0 {
            out.push(f0 + d0 / (d0 - d1) * (f1 - f0));
        }
    }
    if let Some(&(f, a)) = samples.last() {
        if a == 180.0 {
            out.push(f);
        }
    }
    out.dedup();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn angle_and_significance_hand_values() {
        assert_relative_eq!(characteristic_angle(0.0), 180.0);
        assert_relative_eq!(modal_significance(0.0), 1.0);
        assert_relative_eq!(characteristic_angle(1.0), 135.0);
        assert_relative_eq!(modal_significance(1.0), 0.70710678, max_relative = 1e-8);
        assert_relative_eq!(characteristic_angle(-1.0), 225.0);
        assert_relative_eq!(modal_significance(-1.0), 0.70710678, max_relative = 1e-8);
    }

    #[test]
    fn diagonal_two_by_two() {
        let r = DMatrix::<f64>::identity(2, 2);
        let x = DMatrix::<f64>::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, -2.0]));
        let modes = decompose_rx(&r, &x, 1e9, 2).unwrap();
        assert_relative_eq!(modes[0].eigenvalue, 1.0, epsilon = 1e-12);
        assert_relative_eq!(modes[1].eigenvalue, -2.0, epsilon = 1e-12);
        assert_relative_eq!(modes[0].eigencurrent[0].abs(), 1.0, epsilon = 1e-12);
        assert_relative_eq!(modes[1].eigencurrent[1].abs(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn offdiagonal_two_by_two() {
        let r = DMatrix::<f64>::identity(2, 2);
        let x = DMatrix::<f64>::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let modes = decompose_rx(&r, &x, 1e9, 2).unwrap();
        let mut evs: Vec<f64> = modes.iter().map(|m| m.eigenvalue).collect();
        evs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_relative_eq!(evs[0], -1.0, epsilon = 1e-12);
        assert_relative_eq!(evs[1], 1.0, epsilon = 1e-12);
        let inv = 1.0 / 2.0f64.sqrt();
        for m in &modes {
            assert_relative_eq!(m.eigencurrent[0].abs(), inv, epsilon = 1e-12);
            assert_relative_eq!(m.eigencurrent[1].abs(), inv, epsilon = 1e-12);
        }
    }

    #[test]
    fn resonance_at_lambda_zero() {
        let m = CharacteristicMode {
            frequency: 1e9,
            eigenvalue: 0.0,
            eigencurrent: DVector::from_vec(vec![1.0]),
            characteristic_angle_deg: characteristic_angle(0.0),
            modal_significance: modal_significance(0.0),
            track_id: 0,
        };
        assert_eq!(m.characteristic_angle_deg, 180.0);
        assert_eq!(m.modal_significance, 1.0);
    }

    #[test]
    fn find_resonances_interpolates() {
        let samples = vec![(1.0e9, 190.0), (1.1e9, 170.0)];
        let r = find_resonances(&samples);
        assert_eq!(r.len(), 1);
        assert_relative_eq!(r[0], 1.05e9, max_relative = 1e-12);
        // Monotone never crossing -> empty.
        assert!(find_resonances(&[(1.0e9, 170.0), (1.1e9, 160.0)]).is_empty());
        // Ascending crossing is an anti-resonance wrap, not a resonance.
        assert!(find_resonances(&[(1.0e9, 95.0), (1.1e9, 265.0)]).is_empty());
    }

    #[test]
    fn mwc_orthogonal_excitation_is_zero() {
        let m = CharacteristicMode {
            frequency: 1e9,
            eigenvalue: 0.5,
            eigencurrent: DVector::from_vec(vec![1.0, 0.0]),
            characteristic_angle_deg: characteristic_angle(0.5),
            modal_significance: modal_significance(0.5),
            track_id: 0,
        };
        let e = DVector::from_vec(vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)]);
        assert_eq!(mwc(&m, &e), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn single_frequency_tracks_are_distinct() {
        let r = DMatrix::<f64>::identity(3, 3);
        let x = DMatrix::<f64>::from_diagonal(&DVector::from_vec(vec![0.1, 0.2, 0.3]));
        let modes = decompose_rx(&r, &x, 1e9, 3).unwrap();
        let sweep = track_modes(&[1e9], vec![modes], &[r]).unwrap();
        assert_eq!(sweep.tracks.len(), 3);
    }

    #[test]
    fn tracking_survives_mode_order_swap() {
        // Three orthogonal eigencurrents; the second frequency returns them
        // permuted, with slightly drifted eigenvalues.
        let r = DMatrix::<f64>::identity(3, 3);
        let mk = |ev: f64, dir: usize, f: f64| CharacteristicMode {
            frequency: f,
            eigenvalue: ev,
            eigencurrent: DVector::from_fn(3, |i, _| if i == dir { 1.0 } else { 0.0 }),
            characteristic_angle_deg: characteristic_angle(ev),
            modal_significance: modal_significance(ev),
            track_id: u32::MAX,
        };
        let f0 = vec![mk(0.1, 0, 1e9), mk(0.2, 1, 1e9), mk(0.3, 2, 1e9)];
        let f1 = vec![mk(0.32, 2, 1.1e9), mk(0.12, 0, 1.1e9), mk(0.22, 1, 1.1e9)];
        let sweep = track_modes(&[1e9, 1.1e9], vec![f0, f1], &[r.clone(), r]).unwrap();
        assert_eq!(sweep.tracks.len(), 3);
        // Track that started on direction 0 must still point at direction 0.
        for (_, track) in &sweep.tracks {
            let m0 = &sweep.modes[0][track[0].unwrap()];
            let m1 = &sweep.modes[1][track[1].unwrap()];
            assert_eq!(
                m0.eigencurrent.iamax(),
                m1.eigencurrent.iamax(),
                "track jumped eigencurrent direction"
            );
        }
    }
}
