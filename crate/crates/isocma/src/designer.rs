//! Resonance-placement design loop: mode classification on U/H radiators,
//! a composite objective (resonance error + isotropy deviation + mode
//! coincidence penalty), bounded Nelder-Mead search, and the inductor
//! placement heuristic.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::cma::{self, CharacteristicMode, ModeSweep};
use crate::error::{Error, Result};
use crate::farfield::{self, GridSpec};
use crate::geometry::{SegmentMesh, WirePart};
use crate::mom::{self, BasisSet};

/// Fractional resonance separation below which two isotropy modes count as
/// coincident (the paper's purification rule; exact safe margin unstated).
pub const COINCIDENCE_THRESHOLD: f64 = 0.05;

// ---------------------------------------------------------------------------
// Mode classification and resonance placement on U/H radiators
// ---------------------------------------------------------------------------

/// Harmonic order of an arm-pair mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeOrder {
    /// One current antinode along the pair (no sign change on an arm).
    Fundamental,
    /// Third-order harmonic (one sign change along an arm).
    ThirdOrder,
}

/// Identity of an isotropy mode: which arm pair it lives on and its order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModeClass {
    pub pair: usize,
    pub order: ModeOrder,
}

/// Classifies characteristic modes of U/H radiators by arm-current shape and
/// locates the resonance of a given class by scan + bisection on lambda.
pub struct ModeClassifier {
    mesh: SegmentMesh,
    basis: BasisSet,
    n_pairs: usize,
    /// Per pair: (segment, outward sign) along the upper arm, root -> tip.
    top_paths: Vec<Vec<(usize, f64)>>,
    /// Same along the lower arm, for U-vs-straight-through symmetry.
    bottom_paths: Vec<Vec<(usize, f64)>>,
    /// Signed segment permutation of the mirror that swaps the two arms of
    /// each pair, when the mesh has that symmetry: entry (s', sign) maps the
    /// current on segment s to sign * current on s'.
    mirror: Option<Vec<(usize, f64)>>,
    n_modes: usize,
}

/// Mirror a point through the plane normal to `axis` (0 = x, 2 = z).
fn mirror_point(p: [f64; 3], axis: usize) -> [f64; 3] {
    let mut q = p;
    q[axis] = -q[axis];
    q
}

/// Signed segment permutation for the arm-swapping mirror, or None when the
/// mesh lacks the symmetry. `axis` is the coordinate negated by the mirror.
fn mirror_segments(mesh: &SegmentMesh, axis: usize) -> Option<Vec<(usize, f64)>> {
    let tol = 1e-9;
    let close = |a: [f64; 3], b: [f64; 3]| {
        (a[0] - b[0]).abs() < tol && (a[1] - b[1]).abs() < tol && (a[2] - b[2]).abs() < tol
    };
    let mut map = Vec::with_capacity(mesh.segments.len());
    for s in 0..mesh.segments.len() {
        let seg = &mesh.segments[s];
        let (pa, pb) = (
            mirror_point(mesh.nodes[seg.a], axis),
            mirror_point(mesh.nodes[seg.b], axis),
        );
        let mut found = None;
        for t in 0..mesh.segments.len() {
            let st = &mesh.segments[t];
            let (qa, qb) = (mesh.nodes[st.a], mesh.nodes[st.b]);
            if close(pa, qa) && close(pb, qb) {
                found = Some((t, 1.0));
                break;
            }
            if close(pa, qb) && close(pb, qa) {
                found = Some((t, -1.0));
                break;
            }
        }
        // Current is a polar vector: the mirrored coefficient keeps its sign
        // when the image endpoints match in order and flips when swapped.
        map.push(found?);
    }
    Some(map)
}

impl ModeClassifier {
    /// Build from a discretized U- or H-radiator mesh. Arms are identified by
    /// their `WirePart::Arm` tags; `pair` indices follow the builder.
    pub fn new(mesh: SegmentMesh) -> Result<Self> {
        let basis = BasisSet::build(&mesh);
        let n_pairs = mesh
            .segments
            .iter()
            .filter_map(|s| match s.tag {
                WirePart::Arm { pair } => Some(pair + 1),
                _ => None,
            })
            .max()
            .ok_or_else(|| Error::InvalidMesh("mesh has no arm segments".into()))?;
        let mut top_paths = vec![Vec::new(); n_pairs];
        let mut bottom_paths = vec![Vec::new(); n_pairs];
        for pair in 0..n_pairs {
            for top in [true, false] {
                // U-radiator arms run along z at x = +-h/2; H-radiator arms
                // run along x at z = +-h/2. Pick the dominant arm axis.
                let mut segs: Vec<(f64, usize, f64)> = Vec::new();
                for (si, s) in mesh.segments.iter().enumerate() {
                    if s.tag != (WirePart::Arm { pair }) {
                        continue;
                    }
                    let c = mesh.segment_center(si);
                    let t = mesh.segment_tangent(si);
                    if t[0].abs() > 0.5 {
                        // horizontal arm (H-radiator): split by z sign
                        if (c[2] > 0.0) != top {
                            continue;
                        }
                        let out = if c[0] < 0.0 { -1.0 } else { 1.0 };
                        segs.push((c[0] * out, si, if t[0] * out > 0.0 { 1.0 } else { -1.0 }));
                    } else {
                        // vertical arm (U-radiator): split by x sign
                        if (c[0] > 0.0) != top {
                            continue;
                        }
                        // outward = +z (away from the bottom element at -AL/2)
                        segs.push((c[2], si, if t[2] > 0.0 { 1.0 } else { -1.0 }));
                    }
                }
                segs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
                let path: Vec<(usize, f64)> = segs.into_iter().map(|(_, si, sg)| (si, sg)).collect();
                if path.is_empty() {
                    return Err(Error::InvalidMesh(format!(
                        "arm pair {pair} has no segments on one side"
                    )));
                }
                if top {
                    top_paths[pair] = path;
                } else {
                    bottom_paths[pair] = path;
                }
            }
        }
        // Mirror axis: the H-radiator's arm pairs sit at +-z, the
        // U-radiator's at +-x. The swap symmetry separates U-type modes
        // (mirror-antisymmetric) from straight-through T-type ones.
        let axis = {
            let (si, _) = top_paths[0][0];
            if mesh.segment_tangent(si)[0].abs() > 0.5 {
                2
            } else {
                0
            }
        };
        let mirror = mirror_segments(&mesh, axis);
        Ok(ModeClassifier {
            mesh,
            basis,
            n_pairs,
            top_paths,
            bottom_paths,
            mirror,
            n_modes: 10,
        })
    }

    /// Arm-swap-antisymmetric part of a segment-current vector, which is the
    /// U-type (isotropy) content of a mode. Returns the input unchanged when
    /// the mesh lacks the mirror symmetry.
    pub fn antisymmetric_part(&self, seg: &[Complex64]) -> Vec<Complex64> {
        match &self.mirror {
            Some(map) => (0..seg.len())
                .map(|s| {
                    let (t, sign) = map[s];
                    0.5 * (seg[s] - sign * seg[t])
                })
                .collect(),
            None => seg.to_vec(),
        }
    }

    /// Whether the mesh carries the arm-swap mirror symmetry used to
    /// separate U-type from straight-through modes.
    pub fn has_mirror(&self) -> bool {
        self.mirror.is_some()
    }

    pub fn mesh(&self) -> &SegmentMesh {
        &self.mesh
    }

    pub fn basis(&self) -> &BasisSet {
        &self.basis
    }

    /// Classify a mode, or None for straight-through ("T") and other
    /// non-U-type modes.
    pub fn classify(&self, mode: &CharacteristicMode) -> Option<ModeClass> {
        let raw = self.segment_currents(mode);
        let seg = self.antisymmetric_part(&raw);
        // Straight-through T modes are mirror-symmetric; reject any mode
        // whose symmetric content dominates. Working with the antisymmetric
        // part below also strips T contamination picked up where a T branch
        // crosses a U branch (degenerate eigenvectors mix arbitrarily).
        if self.mirror.is_some() {
            let (mut anti2, mut raw2) = (0.0f64, 0.0f64);
            for s in 0..raw.len() {
                let w = self.mesh.segment_length(s);
                anti2 += w * seg[s].norm_sqr();
                raw2 += w * raw[s].norm_sqr();
            }
            if anti2 < 0.5 * raw2 {
                return None;
            }
        }
        let mut amp = vec![0.0f64; self.n_pairs];
        for (pair, path) in self.top_paths.iter().enumerate() {
            for &(si, _) in path {
                amp[pair] = amp[pair].max(seg[si].norm());
            }
        }
        let pair = (0..self.n_pairs).max_by(|&a, &b| amp[a].partial_cmp(&amp[b]).unwrap())?;
        // U-type modes concentrate their current on the arm pair. Hybrids of
        // a central-element (rhombus/bottom) dipole with faint arm ripple can
        // still pass the shape tests below, so demand the arms carry at least
        // half the global current peak.
        let global_peak = seg.iter().map(|c| c.norm()).fold(0.0f64, f64::max);
        if amp[pair] < 0.5 * global_peak {
            return None;
        }
        // Without a mirror map, fall back to the direct arm test: U-type
        // modes run tip -> center -> tip, so the currents on the two arms of
        // a pair are anti-parallel along the arm axis, while straight-through
        // modes (the H-radiator's dipole-like T family) are parallel.
        if self.mirror.is_none() {
            let sym: f64 = self.top_paths[pair]
                .iter()
                .zip(&self.bottom_paths[pair])
                .map(|(&(st, gt), &(sb, gb))| (seg[st].re * gt) * (seg[sb].re * gb))
                .sum();
            if sym > 0.0 {
                return None;
            }
        }
        let vals: Vec<f64> = self.top_paths[pair]
            .iter()
            .map(|&(si, sg)| seg[si].re * sg)
            .collect();
        let peak = vals.iter().cloned().fold(0.0f64, |a, b| a.max(b.abs()));
        if peak == 0.0 {
            return None;
        }
        let mut changes = 0usize;
        let mut last = 0.0f64;
        for v in vals {
            // skip near-node samples so discretization noise cannot flip signs
            if v.abs() < 0.12 * peak {
                continue;
            }
            if last != 0.0 && v.signum() != last.signum() {
                changes += 1;
            }
            last = v;
        }
        let order = match changes {
            0 => ModeOrder::Fundamental,
            1 => ModeOrder::ThirdOrder,
            _ => return None,
        };
        Some(ModeClass { pair, order })
    }

    /// Signed per-segment currents of a (real) eigencurrent.
    pub fn segment_currents(&self, mode: &CharacteristicMode) -> Vec<Complex64> {
        let coeffs: Vec<Complex64> = mode
            .eigencurrent
            .iter()
            .map(|&v| Complex64::new(v, 0.0))
            .collect();
        self.basis.segment_currents(self.mesh.segments.len(), &coeffs)
    }

    /// All modes kept for classification at one frequency, by ascending
    /// |lambda|.
    pub fn modes_at(&self, frequency: f64) -> Result<Vec<CharacteristicMode>> {
        let z = mom::assemble(&self.mesh, frequency)?;
        let z = mom::apply_loads(&z, &self.mesh)?;
        let n_modes = self.n_modes.min(self.basis.len());
        cma::decompose(&z, n_modes)
    }

    /// Eigenvalue and mode of `class` at one frequency, if present among the
    /// smallest-|lambda| modes.
    pub fn mode_of_class(&self, frequency: f64, class: ModeClass) -> Result<Option<CharacteristicMode>> {
        let modes = self.modes_at(frequency)?;
        Ok(modes.into_iter().find(|m| self.classify(m) == Some(class)))
    }

    /// Mode with the strongest eigencurrent correlation to `reference`.
    /// Used to follow one modal branch through avoided crossings, where
    /// shape-based classification can momentarily attach to the wrong branch.
    fn best_correlated(
        modes: Vec<CharacteristicMode>,
        reference: &CharacteristicMode,
    ) -> Option<CharacteristicMode> {
        modes.into_iter().max_by(|a, b| {
            let ca = reference.eigencurrent.dot(&a.eigencurrent).abs() / a.eigencurrent.norm();
            let cb = reference.eigencurrent.dot(&b.eigencurrent).abs() / b.eigencurrent.norm();
            ca.partial_cmp(&cb).unwrap()
        })
    }

    /// Resonance (lambda = 0 crossing) of a mode class inside [f0, f1],
    /// located by an `n`-point scan plus bisection to 0.1% resolution.
    pub fn find_class_resonance(
        &self,
        class: ModeClass,
        f0: f64,
        f1: f64,
        n: usize,
    ) -> Result<Option<(f64, CharacteristicMode)>> {
        if !(f1 > f0 && f0 > 0.0) || n < 2 {
            return Err(Error::invalid_parameter("range", "requires f1 > f0 > 0, n >= 2"));
        }
        let mut prev: Option<(f64, CharacteristicMode)> = None;
        for i in 0..n {
            let f = f0 + (f1 - f0) * i as f64 / (n - 1) as f64;
            let Some(m) = self.mode_of_class(f, class)? else {
                continue;
            };
            let lam = m.eigenvalue;
            if let Some((pf, pm)) = prev.take() {
                let plam = pm.eigenvalue;
                // Descending CA crossing with both endpoints away from the
                // anti-resonance wrap.
                if plam < 0.0 && lam >= 0.0 && lam < 50.0 && plam > -50.0 {
                    // Bisect following the eigenvector branch by correlation
                    // with the clean below-resonance mode: near-degenerate
                    // crossings with unrelated modes would otherwise swap the
                    // shape-classified label right where lambda = 0.
                    let (mut a, mut b) = (pf, f);
                    let mut reference = pm;
                    while (b - a) / b > 1e-3 {
                        let mid = 0.5 * (a + b);
                        match Self::best_correlated(self.modes_at(mid)?, &reference) {
                            Some(m) if m.eigenvalue < 0.0 => {
                                a = mid;
                                reference = m;
                            }
                            Some(_) => b = mid,
                            None => break,
                        }
                    }
                    let fr = 0.5 * (a + b);
                    if let Some(m) = Self::best_correlated(self.modes_at(fr)?, &reference) {
                        return Ok(Some((fr, m)));
                    }
                    return Ok(None);
                }
                prev = Some((f, m));
            } else {
                prev = Some((f, m));
            }
        }
        Ok(None)
    }

    /// Directivity deviation of a mode's eigencurrent at `frequency`,
    /// evaluated on the mode's U-type (mirror-antisymmetric) content so that
    /// degenerate T-branch contamination does not leak into the pattern.
    pub fn mode_deviation(&self, frequency: f64, mode: &CharacteristicMode) -> Result<f64> {
        let segc = self.antisymmetric_part(&self.segment_currents(mode));
        let grid = farfield::radiate(&self.mesh, &segc, frequency, GridSpec::default())?;
        Ok(farfield::directivity_deviation(&grid).deviation_db)
    }
}

/// Segment with the largest eigencurrent magnitude of a tracked mode near
/// `frequency`, restricted to arm segments when the mesh has arms (the
/// paper's inductor-placement rule).
pub fn place_inductor(
    mesh: &SegmentMesh,
    sweep: &ModeSweep,
    track_id: u32,
    frequency: f64,
) -> Result<usize> {
    let mode = sweep.track_mode_near(track_id, frequency)?;
    let basis = BasisSet::build(mesh);
    let coeffs: Vec<Complex64> = mode
        .eigencurrent
        .iter()
        .map(|&v| Complex64::new(v, 0.0))
        .collect();
    let seg = basis.segment_currents(mesh.segments.len(), &coeffs);
    let has_arms = mesh
        .segments
        .iter()
        .any(|s| matches!(s.tag, WirePart::Arm { .. }));
    let mut best: Option<(f64, usize)> = None;
    for (si, s) in mesh.segments.iter().enumerate() {
        if has_arms && !matches!(s.tag, WirePart::Arm { .. }) {
            continue;
        }
        let a = seg[si].norm();
        if best.map_or(true, |(b, _)| a > b) {
            best = Some((a, si));
        }
    }
    best.map(|(_, si)| si)
        .ok_or_else(|| Error::InvalidMesh("no candidate segments for inductor".into()))
}

// ---------------------------------------------------------------------------
// Design problem and optimizer
// ---------------------------------------------------------------------------

/// One free parameter with box bounds and a seed value.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParamSpec {
    pub name: String,
    pub min: f64,
    pub max: f64,
    pub seed: f64,
}

/// Objective weights.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Weights {
    /// Weight of the squared fractional resonance error sum.
    pub resonance: f64,
    /// Weight per dB of summed deviation.
    pub deviation: f64,
    /// Weight of the coincidence hinge penalty.
    pub coincidence: f64,
}

impl Default for Weights {
    fn default() -> Self {
        Weights {
            resonance: 1.0,
            deviation: 0.01,
            coincidence: 1.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DesignProblem {
    /// Target resonance frequencies, hertz, ascending.
    pub targets_hz: Vec<f64>,
    pub params: Vec<ParamSpec>,
    pub weights: Weights,
    /// Maximum objective evaluations.
    pub budget: usize,
    /// Fractional separation threshold for the coincidence penalty.
    pub coincidence_threshold: f64,
}

impl DesignProblem {
    pub fn validate(&self) -> Result<()> {
        if self.targets_hz.is_empty() {
            return Err(Error::invalid_parameter("targets_hz", "must not be empty"));
        }
        if self.targets_hz.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid_parameter("targets_hz", "must be ascending"));
        }
        for p in &self.params {
            if !(p.min < p.max) || !(p.seed >= p.min && p.seed <= p.max) {
                return Err(Error::invalid_parameter(
                    "params",
                    format!("parameter {} has degenerate bounds or seed outside", p.name),
                ));
            }
        }
        if self.budget == 0 {
            return Err(Error::invalid_parameter("budget", "must be >= 1"));
        }
        Ok(())
    }
}

/// Physics summary of one trial point.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Evaluation {
    /// Achieved resonance per target; None where the mode was not found.
    pub resonances_hz: Vec<Option<f64>>,
    /// Deviation (dB) at each found resonance.
    pub deviations_db: Vec<Option<f64>>,
}

/// Maps parameter vectors to resonances/deviations. Implementations must be
/// deterministic: identical params must give identical evaluations.
pub trait DesignEvaluator {
    fn evaluate(&self, params: &[f64]) -> Result<Evaluation>;
}

/// Hinge penalty on the minimum pairwise fractional separation: zero when all
/// separations exceed `threshold`, growing quadratically as they close.
pub fn coincidence_penalty(resonances_hz: &[f64], threshold: f64) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..resonances_hz.len() {
        for j in (i + 1)..resonances_hz.len() {
            let sep = (resonances_hz[i] - resonances_hz[j]).abs() / resonances_hz[i].max(resonances_hz[j]);
            if sep < threshold {
                let x = (threshold - sep) / threshold;
                worst = worst.max(x * x);
            }
        }
    }
    worst
}

/// Penalty charged per missing resonance; large but finite so the search
/// continues past broken trial points.
pub const MISSING_RESONANCE_PENALTY: f64 = 1.0e3;

/// Composite objective over one evaluation.
pub fn objective_value(problem: &DesignProblem, eval: &Evaluation) -> f64 {
    let mut total = 0.0;
    let mut found = Vec::new();
    for (i, target) in problem.targets_hz.iter().enumerate() {
        match eval.resonances_hz.get(i).copied().flatten() {
            Some(f) => {
                let e = (f - target) / target;
                total += problem.weights.resonance * e * e;
                found.push(f);
            }
            None => total += MISSING_RESONANCE_PENALTY,
        }
        if let Some(d) = eval.deviations_db.get(i).copied().flatten() {
            total += problem.weights.deviation * d;
        }
    }
    total += problem.weights.coincidence * coincidence_penalty(&found, problem.coincidence_threshold);
    total
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DesignReport {
    pub best_params: Vec<f64>,
    pub best_objective: f64,
    pub evaluation: Evaluation,
    /// Fractional error per target (None where unresolved).
    pub target_errors: Vec<Option<f64>>,
    /// Minimum pairwise fractional separation among found resonances.
    pub min_separation: Option<f64>,
    pub evaluations_used: usize,
    pub budget_exhausted: bool,
    /// (objective, params) per accepted improvement.
    pub log: Vec<(f64, Vec<f64>)>,
}

fn clip(problem: &DesignProblem, x: &mut [f64]) {
    for (v, p) in x.iter_mut().zip(&problem.params) {
        *v = v.clamp(p.min, p.max);
    }
}

/// Bounded Nelder-Mead with a fixed 3-restart schedule; deterministic for a
/// given problem, evaluator, and seed.
pub fn optimize<E: DesignEvaluator>(
    problem: &DesignProblem,
    evaluator: &E,
    rng_seed: u64,
) -> Result<DesignReport> {
    problem.validate()?;
    let dim = problem.params.len();
    if dim == 0 {
        return Err(Error::invalid_parameter("params", "must not be empty"));
    }
    let mut used = 0usize;
    let mut log: Vec<(f64, Vec<f64>)> = Vec::new();
    let mut best_x: Vec<f64> = problem.params.iter().map(|p| p.seed).collect();
    let eval_point = |x: &[f64], used: &mut usize| -> (f64, Option<Evaluation>) {
        *used += 1;
        match evaluator.evaluate(x) {
            Ok(ev) => (objective_value(problem, &ev), Some(ev)),
            // Solver failure at a trial point: large finite penalty, continue.
            Err(_) => (MISSING_RESONANCE_PENALTY * problem.targets_hz.len() as f64 * 2.0, None),
        }
    };
    let (mut best_f, mut best_eval) = eval_point(&best_x, &mut used);
    log.push((best_f, best_x.clone()));
    let mut rng = ChaCha20Rng::seed_from_u64(rng_seed);

    for restart in 0..4 {
        if used >= problem.budget {
            break;
        }
        // Initial simplex around the current best (restarts perturb it).
        let mut start = best_x.clone();
        if restart > 0 {
            for (v, p) in start.iter_mut().zip(&problem.params) {
                let span = p.max - p.min;
                *v += span * 0.2 * (rng.gen::<f64>() - 0.5);
            }
            clip(problem, &mut start);
        }
        let mut simplex: Vec<(f64, Vec<f64>)> = Vec::with_capacity(dim + 1);
        let (f0, e0) = eval_point(&start, &mut used);
        if f0 < best_f {
            best_f = f0;
            best_x = start.clone();
            best_eval = e0;
            log.push((best_f, best_x.clone()));
        }
        simplex.push((f0, start.clone()));
        for d in 0..dim {
            let mut x = start.clone();
            let span = problem.params[d].max - problem.params[d].min;
            x[d] += 0.05 * span * if x[d] + 0.05 * span <= problem.params[d].max { 1.0 } else { -1.0 };
            clip(problem, &mut x);
            let (f, e) = eval_point(&x, &mut used);
            if f < best_f {
                best_f = f;
                best_x = x.clone();
                best_eval = e;
                log.push((best_f, best_x.clone()));
            }
            simplex.push((f, x));
            if used >= problem.budget {
                break;
            }
        }
        while simplex.len() < dim + 1 {
            simplex.push(simplex[0].clone());
        }

        // Standard Nelder-Mead iteration with bound clipping.
        while used < problem.budget {
            simplex.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
            let spread = simplex[dim].0 - simplex[0].0;
            if spread.abs() < 1e-12 * (1.0 + simplex[0].0.abs()) {
                break;
            }
            let centroid: Vec<f64> = (0..dim)
                .map(|d| simplex[..dim].iter().map(|(_, x)| x[d]).sum::<f64>() / dim as f64)
                .collect();
            let worst = simplex[dim].clone();
            let mut refl: Vec<f64> = (0..dim).map(|d| 2.0 * centroid[d] - worst.1[d]).collect();
            clip(problem, &mut refl);
            let (fr, er) = eval_point(&refl, &mut used);
            if fr < best_f {
                best_f = fr;
                best_x = refl.clone();
                best_eval = er;
                log.push((best_f, best_x.clone()));
            }
            if fr < simplex[0].0 {
                // Expand
                let mut exp: Vec<f64> = (0..dim).map(|d| 3.0 * centroid[d] - 2.0 * worst.1[d]).collect();
                clip(problem, &mut exp);
                if used < problem.budget {
                    let (fe, ee) = eval_point(&exp, &mut used);
                    if fe < best_f {
                        best_f = fe;
                        best_x = exp.clone();
                        best_eval = ee;
                        log.push((best_f, best_x.clone()));
                    }
                    simplex[dim] = if fe < fr { (fe, exp) } else { (fr, refl) };
                } else {
                    simplex[dim] = (fr, refl);
                }
            } else if fr < simplex[dim - 1].0 {
                simplex[dim] = (fr, refl);
            } else {
                // Contract toward the centroid
                let mut con: Vec<f64> = (0..dim)
                    .map(|d| 0.5 * (centroid[d] + worst.1[d]))
                    .collect();
                clip(problem, &mut con);
                let (fc, ec) = eval_point(&con, &mut used);
                if fc < best_f {
                    best_f = fc;
                    best_x = con.clone();
                    best_eval = ec;
                    log.push((best_f, best_x.clone()));
                }
                if fc < worst.0 {
                    simplex[dim] = (fc, con);
                } else {
                    // Shrink toward the best vertex
                    let anchor = simplex[0].1.clone();
                    for v in simplex.iter_mut().skip(1) {
                        for d in 0..dim {
                            v.1[d] = 0.5 * (v.1[d] + anchor[d]);
                        }
                        clip(problem, &mut v.1);
                        let (fs, es) = eval_point(&v.1, &mut used);
                        if fs < best_f {
                            best_f = fs;
                            best_x = v.1.clone();
                            best_eval = es;
                            log.push((best_f, best_x.clone()));
                        }
                        v.0 = fs;
                        if used >= problem.budget {
                            break;
                        }
                    }
                }
            }
        }
    }

    // Re-derive report fields from the best evaluation.
    let evaluation = match best_eval {
        Some(ev) => ev,
        None => evaluator.evaluate(&best_x)?,
    };
    let target_errors: Vec<Option<f64>> = problem
        .targets_hz
        .iter()
        .enumerate()
        .map(|(i, t)| {
            evaluation
                .resonances_hz
                .get(i)
                .copied()
                .flatten()
                .map(|f| (f - t) / t)
        })
        .collect();
    let found: Vec<f64> = evaluation.resonances_hz.iter().filter_map(|r| *r).collect();
    let mut min_separation = None;
    for i in 0..found.len() {
        for j in (i + 1)..found.len() {
            let sep = (found[i] - found[j]).abs() / found[i].max(found[j]);
            min_separation = Some(min_separation.map_or(sep, |m: f64| m.min(sep)));
        }
    }
    Ok(DesignReport {
        best_params: best_x,
        best_objective: best_f,
        evaluation,
        target_errors,
        min_separation,
        evaluations_used: used,
        budget_exhausted: used >= problem.budget,
        log,
    })
}

// ---------------------------------------------------------------------------
// Quad-band H-radiator evaluator
// ---------------------------------------------------------------------------

/// Which geometry field a design parameter drives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamTarget {
    ArmLength(usize),
    ArmSpacing(usize),
    Inductance(usize),
    InductorOffset(usize),
    StripWidth,
}

/// Evaluates H-radiator trial designs: resonance and deviation of the four
/// isotropy modes (L1, R1, L2, R2 in target order L1 < R1 < L2 < R2).
pub struct HQuadBandEvaluator {
    pub base_pairs: [crate::geometry::RadiatorParams; 2],
    pub spec: crate::geometry::HRadiatorSpec,
    pub param_map: Vec<ParamTarget>,
    /// Mesh density: discretize at f_max with this many segments/lambda.
    pub f_max: f64,
    pub segments_per_wavelength: usize,
    /// Scan windows per target class, hertz.
    pub windows: Vec<(f64, f64)>,
    pub scan_points: usize,
}

impl HQuadBandEvaluator {
    /// Target order: (pair 0 fundamental, pair 1 fundamental, pair 0 third,
    /// pair 1 third) sorted ascending by window start.
    pub fn classes() -> [ModeClass; 4] {
        [
            ModeClass { pair: 0, order: ModeOrder::Fundamental },
            ModeClass { pair: 1, order: ModeOrder::Fundamental },
            ModeClass { pair: 0, order: ModeOrder::ThirdOrder },
            ModeClass { pair: 1, order: ModeOrder::ThirdOrder },
        ]
    }
}

impl DesignEvaluator for HQuadBandEvaluator {
    fn evaluate(&self, params: &[f64]) -> Result<Evaluation> {
        if params.len() != self.param_map.len() {
            return Err(Error::LengthMismatch {
                left: params.len(),
                right: self.param_map.len(),
            });
        }
        let mut pairs = self.base_pairs;
        let mut spec = self.spec;
        for (&v, t) in params.iter().zip(&self.param_map) {
            match *t {
                ParamTarget::ArmLength(p) => pairs[p].arm_length = v,
                ParamTarget::ArmSpacing(p) => pairs[p].arm_spacing = v,
                ParamTarget::Inductance(p) => pairs[p].inductance = v,
                ParamTarget::InductorOffset(p) => pairs[p].inductor_offset = v,
                ParamTarget::StripWidth => {
                    pairs[0].strip_width = v;
                    pairs[1].strip_width = v;
                    spec.strip_width = v;
                }
            }
        }
        let base = crate::geometry::build_h_radiator(&pairs, &spec)?;
        let mesh = crate::geometry::discretize(&base, self.f_max, self.segments_per_wavelength)?;
        let solver = ModeClassifier::new(mesh)?;
        let mut resonances = Vec::with_capacity(4);
        let mut deviations = Vec::with_capacity(4);
        for (class, window) in Self::classes().iter().zip(&self.windows) {
            match solver.find_class_resonance(*class, window.0, window.1, self.scan_points)? {
                Some((fr, mode)) => {
                    resonances.push(Some(fr));
                    deviations.push(Some(solver.mode_deviation(fr, &mode)?));
                }
                None => {
                    resonances.push(None);
                    deviations.push(None);
                }
            }
        }
        Ok(Evaluation {
            resonances_hz: resonances,
            deviations_db: deviations,
        })
    }
}

// ---------------------------------------------------------------------------
// Canned inductive mode-tuning study
// ---------------------------------------------------------------------------

/// Outcome of the inductive mode-tuning study: U-radiator mode-1/mode-3
/// resonances and mode-3 isotropy deviation before and after tip-region
/// inductive loading.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InductorShiftStudy {
    pub unloaded_mode1_hz: f64,
    pub unloaded_mode3_hz: f64,
    pub loaded_mode1_hz: f64,
    pub loaded_mode3_hz: f64,
    pub unloaded_mode3_deviation_db: f64,
    pub loaded_mode3_deviation_db: f64,
}

impl InductorShiftStudy {
    /// Fractional downshift of the fundamental resonance.
    pub fn mode1_shift_fraction(&self) -> f64 {
        (self.unloaded_mode1_hz - self.loaded_mode1_hz) / self.unloaded_mode1_hz
    }

    /// Fractional downshift of the third-order resonance.
    pub fn mode3_shift_fraction(&self) -> f64 {
        (self.unloaded_mode3_hz - self.loaded_mode3_hz) / self.unloaded_mode3_hz
    }
}

/// U-radiator used by the mode-tuning study: 57.7 mm arms spaced 20 mm,
/// 4.8 mm strips, inductors 11 mm from the arm tips.
pub fn mode_tuning_u_params(inductance: f64) -> crate::geometry::RadiatorParams {
    crate::geometry::RadiatorParams {
        arm_length: 57.7e-3,
        arm_spacing: 23.0e-3,
        strip_width: 4.8e-3,
        rhombus_diagonal: 36.0e-3,
        inductance,
        inductor_offset: 11.0e-3,
        feed_gap: 1.0e-3,
        n_pairs: 1,
    }
}

/// Run the full inductive mode-tuning pipeline: resonances of modes 1 and 3
/// and the mode-3 deviation, with and without two 40 nH arm inductors.
/// Deterministic: identical runs produce identical bits.
pub fn inductor_shift_study() -> Result<InductorShiftStudy> {
    let mode1 = ModeClass { pair: 0, order: ModeOrder::Fundamental };
    let mode3 = ModeClass { pair: 0, order: ModeOrder::ThirdOrder };
    let mut f1s = [0.0f64; 2];
    let mut f3s = [0.0f64; 2];
    let mut devs = [0.0f64; 2];
    for (i, inductance) in [0.0, 40.0e-9].into_iter().enumerate() {
        let base = crate::geometry::build_u_radiator(
            &mode_tuning_u_params(inductance),
            crate::geometry::BottomStyle::RhombusSkeleton,
        )?;
        let mesh = crate::geometry::discretize(&base, 4.0e9, 12)?;
        let solver = ModeClassifier::new(mesh)?;
        let (f1, _) = solver
            .find_class_resonance(mode1, 0.4e9, 1.6e9, 37)?
            .ok_or_else(|| Error::InvalidMesh("mode-1 resonance not found".into()))?;
        let (f3, m3) = solver
            .find_class_resonance(mode3, 1.0e9, 3.8e9, 57)?
            .ok_or_else(|| Error::InvalidMesh("mode-3 resonance not found".into()))?;
        f1s[i] = f1;
        f3s[i] = f3;
        devs[i] = solver.mode_deviation(f3, &m3)?;
    }
    Ok(InductorShiftStudy {
        unloaded_mode1_hz: f1s[0],
        unloaded_mode3_hz: f3s[0],
        loaded_mode1_hz: f1s[1],
        loaded_mode3_hz: f3s[1],
        unloaded_mode3_deviation_db: devs[0],
        loaded_mode3_deviation_db: devs[1],
    })
}

/// Nothing but a quadratic bowl; used to validate the optimizer.
pub struct QuadraticSurrogate {
    pub minimum: Vec<f64>,
    pub target_hz: f64,
}

impl DesignEvaluator for QuadraticSurrogate {
    fn evaluate(&self, params: &[f64]) -> Result<Evaluation> {
        let d2: f64 = params
            .iter()
            .zip(&self.minimum)
            .map(|(x, m)| (x - m) * (x - m))
            .sum();
        // Map distance to a fake resonance offset so the resonance term of the
        // composite objective reproduces the bowl.
        let f = self.target_hz * (1.0 + d2.sqrt());
        Ok(Evaluation {
            resonances_hz: vec![Some(f)],
            deviations_db: vec![None],
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry;
    use approx::assert_relative_eq;

    #[test]
    fn coincidence_penalty_hinge() {
        // 10% apart with 5% threshold: no penalty.
        assert_eq!(coincidence_penalty(&[1.0e9, 1.1e9], 0.05), 0.0);
        // identical: full penalty
        assert_relative_eq!(coincidence_penalty(&[1.0e9, 1.0e9], 0.05), 1.0);
        let p = coincidence_penalty(&[1.0e9, 1.02e9], 0.05);
        assert!(p > 0.0 && p < 1.0);
    }

    #[test]
    fn objective_hand_value() {
        let problem = DesignProblem {
            targets_hz: vec![1.0e9, 2.0e9],
            params: vec![],
            weights: Weights { resonance: 1.0, deviation: 0.0, coincidence: 1.0 },
            budget: 1,
            coincidence_threshold: 0.05,
        };
        // 1% error on the first target, second exact.
        let eval = Evaluation {
            resonances_hz: vec![Some(1.01e9), Some(2.0e9)],
            deviations_db: vec![None, None],
        };
        assert_relative_eq!(objective_value(&problem, &eval), 1.0e-4, max_relative = 1e-9);
    }

    #[test]
    fn missing_resonance_is_penalized_not_fatal() {
        let problem = DesignProblem {
            targets_hz: vec![1.0e9],
            params: vec![],
            weights: Weights::default(),
            budget: 1,
            coincidence_threshold: 0.05,
        };
        let eval = Evaluation { resonances_hz: vec![None], deviations_db: vec![None] };
        assert_eq!(objective_value(&problem, &eval), MISSING_RESONANCE_PENALTY);
    }

    #[test]
    fn optimizer_recovers_quadratic_minimum() {
        let problem = DesignProblem {
            targets_hz: vec![1.0e9],
            params: vec![
                ParamSpec { name: "a".into(), min: -1.0, max: 1.0, seed: 0.8 },
                ParamSpec { name: "b".into(), min: -1.0, max: 1.0, seed: -0.7 },
            ],
            weights: Weights { resonance: 1.0, deviation: 0.0, coincidence: 0.0 },
            budget: 400,
            coincidence_threshold: 0.05,
        };
        let surrogate = QuadraticSurrogate { minimum: vec![0.3, -0.2], target_hz: 1.0e9 };
        let report = optimize(&problem, &surrogate, 0).unwrap();
        assert_relative_eq!(report.best_params[0], 0.3, epsilon = 1e-3);
        assert_relative_eq!(report.best_params[1], -0.2, epsilon = 1e-3);
    }

    #[test]
    fn optimizer_never_worse_than_seed() {
        let problem = DesignProblem {
            targets_hz: vec![1.0e9],
            params: vec![ParamSpec { name: "a".into(), min: 0.0, max: 1.0, seed: 0.5 }],
            weights: Weights { resonance: 1.0, deviation: 0.0, coincidence: 0.0 },
            budget: 3,
            coincidence_threshold: 0.05,
        };
        let surrogate = QuadraticSurrogate { minimum: vec![0.5], target_hz: 1.0e9 };
        let report = optimize(&problem, &surrogate, 1).unwrap();
        assert!(report.best_objective <= 1e-12);
        assert_relative_eq!(report.best_params[0], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn place_inductor_dipole_center() {
        let mesh = geometry::build_dipole(0.15, 0.5e-3, 21).unwrap();
        let f = 1.0e9;
        let z = mom::assemble(&mesh, f).unwrap();
        let modes = cma::decompose(&z, 3).unwrap();
        let (r, _x) = cma::split_operator(&z);
        let sweep = cma::track_modes(&[f], vec![modes], &[r]).unwrap();
        // fundamental = smallest |lambda| = track of the first mode
        let track = sweep.modes[0][0].track_id;
        let si = place_inductor(&mesh, &sweep, track, f).unwrap();
        // center of a 21-segment dipole
        let c = mesh.segment_center(si);
        assert!(c[2].abs() < 0.15 / 21.0);
    }

    #[test]
    fn place_inductor_third_mode_antinode() {
        // 1.5-wavelength dipole: third mode antinodes at the center and at
        // +-L/3 from center.
        let f = 1.0e9;
        let lambda = crate::geometry::SPEED_OF_LIGHT / f;
        let mesh = geometry::build_dipole(1.5 * lambda, 1e-3, 31).unwrap();
        let z = mom::assemble(&mesh, f).unwrap();
        let modes = cma::decompose(&z, 6).unwrap();
        // find the third-order mode: 2 sign changes along z
        let basis = BasisSet::build(&mesh);
        let mut third = None;
        for m in &modes {
            let coeffs: Vec<Complex64> =
                m.eigencurrent.iter().map(|&v| Complex64::new(v, 0.0)).collect();
            let seg = basis.segment_currents(mesh.segments.len(), &coeffs);
            let mut vals: Vec<(f64, f64)> = (0..mesh.segments.len())
                .map(|s| (mesh.segment_center(s)[2], seg[s].re))
                .collect();
            vals.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
            let peak = vals.iter().map(|v| v.1.abs()).fold(0.0f64, f64::max);
            let mut changes = 0;
            let mut last = 0.0;
            for &(_, v) in &vals {
                if v.abs() < 0.15 * peak {
                    continue;
                }
                if last != 0.0 && v.signum() != last {
                    changes += 1;
                }
                last = v.signum();
            }
            if changes == 2 {
                third = Some(m.clone());
                break;
            }
        }
        let third = third.expect("third-order dipole mode present");
        let (r, _) = cma::split_operator(&z);
        let sweep = cma::track_modes(&[f], vec![vec![third]], &[r]).unwrap();
        let tid = sweep.modes[0][0].track_id;
        let si = place_inductor(&mesh, &sweep, tid, f).unwrap();
        let zc = mesh.segment_center(si)[2].abs();
        let l = 1.5 * lambda;
        // antinode at 0 or at l/3 from center
        let near_center = zc < l / 31.0;
        let near_third = (zc - l / 3.0).abs() < 1.5 * l / 31.0;
        assert!(near_center || near_third, "antinode at z = {zc}");
    }
}
