//! Thin-wire EFIE impedance operator and driven solve.
//!
//! Discretization: triangular (rooftop) basis functions on node-centered
//! segment pairs with Galerkin testing over the reduced thin-wire kernel
//! exp(-jkR)/R, R^2 = |r - r'|^2 + a^2. The static 1/R part of the source
//! integral is evaluated in closed form; the remainder by Gauss quadrature.
//! Entries are computed once per segment pair and scattered symmetrically,
//! so Z = Z^T holds exactly.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{vdot, vsub, SegmentMesh, Vec3, SPEED_OF_LIGHT};

/// Vacuum permeability (H/m).
pub const MU_0: f64 = 4.0e-7 * std::f64::consts::PI;
/// Vacuum permittivity (F/m).
pub const EPS_0: f64 = 1.0 / (MU_0 * SPEED_OF_LIGHT * SPEED_OF_LIGHT);
/// Free-space wave impedance (ohms).
pub const ETA_0: f64 = MU_0 * SPEED_OF_LIGHT;

/// One half of a triangular basis function on a single segment.
#[derive(Debug, Clone, Copy)]
pub struct HalfBasis {
    pub segment: usize,
    /// +1 if the basis current flows in the segment's a->b direction.
    pub flow: f64,
    /// True when the basis peak node is the segment's b endpoint.
    pub node_at_b: bool,
    /// Sign of dI/dl along the flow direction (+1 rising toward the peak,
    /// -1 falling away from it), before division by the segment length.
    pub sigma: f64,
}

/// Triangular basis function peaked at `node`, spanning two segments.
#[derive(Debug, Clone, Copy)]
pub struct BasisFn {
    pub node: usize,
    pub halves: [HalfBasis; 2],
}

/// Segment <-> basis-function correspondence for a mesh.
#[derive(Debug, Clone)]
pub struct BasisSet {
    pub functions: Vec<BasisFn>,
    /// Basis indices whose support touches each segment.
    pub segment_to_bases: Vec<Vec<usize>>,
}

impl BasisSet {
    /// Node-centered bases: a node of degree d carries d-1 triangles, each
    /// pairing the lowest-index incident segment with one other. Free ends
    /// carry none (current vanishes there).
    pub fn build(mesh: &SegmentMesh) -> Self {
        let mut incident: Vec<Vec<usize>> = vec![Vec::new(); mesh.nodes.len()];
        for (si, seg) in mesh.segments.iter().enumerate() {
            incident[seg.a].push(si);
            incident[seg.b].push(si);
        }
        let mut functions = Vec::new();
        for (node, inc) in incident.iter().enumerate() {
            if inc.len() < 2 {
                continue;
            }
            for k in 1..inc.len() {
                let half = |si: usize, inbound: bool| {
                    let seg = &mesh.segments[si];
                    let node_at_b = seg.b == node;
                    // Inbound half: current flows toward the peak node.
                    let flow = if inbound {
                        if node_at_b { 1.0 } else { -1.0 }
                    } else if node_at_b {
                        -1.0
                    } else {
                        1.0
                    };
                    HalfBasis {
                        segment: si,
                        flow,
                        node_at_b,
                        sigma: if inbound { 1.0 } else { -1.0 },
                    }
                };
                functions.push(BasisFn {
                    node,
                    halves: [half(inc[0], true), half(inc[k], false)],
                });
            }
        }
        let mut segment_to_bases = vec![Vec::new(); mesh.segments.len()];
        for (bi, f) in functions.iter().enumerate() {
            for h in &f.halves {
                segment_to_bases[h.segment].push(bi);
            }
        }
        BasisSet { functions, segment_to_bases }
    }

    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    /// First basis whose support includes `segment`, by ascending index.
    pub fn basis_on_segment(&self, segment: usize) -> Option<usize> {
        self.segment_to_bases.get(segment).and_then(|v| v.iter().copied().min())
    }

    /// Signed mean current per segment (relative to each segment's a->b
    /// direction) for a basis-space coefficient vector.
    pub fn segment_currents(&self, n_segments: usize, coeffs: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); n_segments];
        for (bi, f) in self.functions.iter().enumerate() {
            for h in &f.halves {
                // Mean of a triangle half is 1/2 of the peak.
                out[h.segment] += coeffs[bi] * 0.5 * h.flow;
            }
        }
        out
    }
}

/// Complex symmetric frequency-domain impedance operator over a basis set.
#[derive(Debug, Clone)]
pub struct ImpedanceOperator {
    pub frequency: f64,
    pub matrix: DMatrix<Complex64>,
    pub basis: BasisSet,
}

// 5-point Gauss-Legendre on [0, 1].
const GAUSS_X: [f64; 5] = [
    0.046_910_077_030_668,
    0.230_765_344_947_158,
    0.5,
    0.769_234_655_052_841,
    0.953_089_922_969_332,
];
const GAUSS_W: [f64; 5] = [
    0.118_463_442_528_095,
    0.239_314_335_249_683,
    0.284_444_444_444_444,
    0.239_314_335_249_683,
    0.118_463_442_528_095,
];

#[derive(Clone, Copy)]
struct SegGeom {
    start: Vec3,
    tangent: Vec3,
    length: f64,
    radius: f64,
}

/// Source integrals over segment `q` seen from observation point `r`:
/// G0 = int g dl', G1 = int (l'/L) g dl', with the 1/R part closed-form.
fn source_integrals(r: Vec3, q: &SegGeom, k: f64) -> (Complex64, Complex64) {
    let d = vsub(r, q.start);
    let u = vdot(d, q.tangent);
    let rho2 = (vdot(d, d) - u * u).max(0.0) + q.radius * q.radius;
    let rho = rho2.sqrt();
    let l = q.length;
    // Static part.
    let f0 = ((l - u) / rho).asinh() + (u / rho).asinh();
    let r_l = ((l - u) * (l - u) + rho2).sqrt();
    let r_0 = (u * u + rho2).sqrt();
    let f1 = (r_l - r_0) + u * f0;
    // Smooth remainder (exp(-jkR) - 1)/R by Gauss quadrature.
    let mut s0 = Complex64::new(0.0, 0.0);
    let mut s1 = Complex64::new(0.0, 0.0);
    for i in 0..GAUSS_X.len() {
        let lp = GAUSS_X[i] * l;
        let dr = lp - u;
        let rr = (dr * dr + rho2).sqrt();
        let ph = -k * rr;
        // exp(-jkR) - 1, stable for small kR.
        let e = Complex64::new(ph.cos() - 1.0, ph.sin());
        let val = e / rr * (GAUSS_W[i] * l);
        s0 += val;
        s1 += val * GAUSS_X[i];
    }
    (s0 + f0, s1 + f1 / l)
}

/// The four double integrals over a segment pair with weights
/// {1, l/Lp} x {1, l'/Lq} against the reduced kernel.
fn pair_integrals(p: &SegGeom, q: &SegGeom, k: f64) -> [[Complex64; 2]; 2] {
    let mut kk = [[Complex64::new(0.0, 0.0); 2]; 2];
    for j in 0..GAUSS_X.len() {
        let lo = GAUSS_X[j] * p.length;
        let r = [
            p.start[0] + p.tangent[0] * lo,
            p.start[1] + p.tangent[1] * lo,
            p.start[2] + p.tangent[2] * lo,
        ];
        let (g0, g1) = source_integrals(r, q, k);
        let w = GAUSS_W[j] * p.length;
        kk[0][0] += g0 * w;
        kk[0][1] += g1 * w;
        kk[1][0] += g0 * (w * GAUSS_X[j]);
        kk[1][1] += g1 * (w * GAUSS_X[j]);
    }
    kk
}

/// Select the double integral of w_m(l) w_n(l') g from the weight table.
fn pick(kk: &[[Complex64; 2]; 2], m_at_b: bool, n_at_b: bool) -> Complex64 {
    let (v0, v1) = if n_at_b {
        (kk[0][1], kk[1][1])
    } else {
        (kk[0][0] - kk[0][1], kk[1][0] - kk[1][1])
    };
    if m_at_b {
        v1
    } else {
        v0 - v1
    }
}

/// Assemble the EFIE impedance operator for a discretized mesh.
pub fn assemble(mesh: &SegmentMesh, frequency: f64) -> Result<ImpedanceOperator> {
    if !(frequency > 0.0) {
        return Err(Error::invalid_parameter("frequency", "must be > 0"));
    }
    mesh.validate()?;
    let basis = BasisSet::build(mesh);
    if basis.is_empty() {
        return Err(Error::InvalidMesh("mesh has no interior basis functions".into()));
    }
    let n = basis.len();
    let k = 2.0 * std::f64::consts::PI * frequency / SPEED_OF_LIGHT;
    let omega = 2.0 * std::f64::consts::PI * frequency;

    let geoms: Vec<SegGeom> = (0..mesh.segments.len())
        .map(|s| SegGeom {
            start: mesh.nodes[mesh.segments[s].a],
            tangent: mesh.segment_tangent(s),
            length: mesh.segment_length(s),
            radius: mesh.segments[s].radius,
        })
        .collect();

    let ns = mesh.segments.len();
    // Kernel integrals for p <= q; (q, p) follows by transposing weights.
    let pair_list: Vec<(usize, usize)> = (0..ns)
        .flat_map(|p| (p..ns).map(move |q| (p, q)))
        .collect();
    let tables: Vec<[[Complex64; 2]; 2]> = pair_list
        .par_iter()
        .map(|&(p, q)| pair_integrals(&geoms[p], &geoms[q], k))
        .collect();

    let idx = |p: usize, q: usize| -> usize {
        // Row-major upper triangle.
        p * ns - p * (p + 1) / 2 + q
    };

    let coef_a = Complex64::new(0.0, omega * MU_0 / (4.0 * std::f64::consts::PI));
    let coef_b = Complex64::new(0.0, -1.0 / (omega * EPS_0 * 4.0 * std::f64::consts::PI));

    let mut matrix = DMatrix::<Complex64>::zeros(n, n);
    for m in 0..n {
        for nn in m..n {
            let mut z = Complex64::new(0.0, 0.0);
            for hm in &basis.functions[m].halves {
                for hn in &basis.functions[nn].halves {
                    let (p, q) = (hm.segment, hn.segment);
                    // For p > q reuse the (q, p) table; swapping the weight
                    // axes is exactly the transposed double integral.
                    let (table, row_at_b, col_at_b) = if p <= q {
                        (&tables[idx(p, q)], hm.node_at_b, hn.node_at_b)
                    } else {
                        (&tables[idx(q, p)], hn.node_at_b, hm.node_at_b)
                    };
                    let w = pick(table, row_at_b, col_at_b);
                    let dot = vdot(geoms[p].tangent, geoms[q].tangent) * hm.flow * hn.flow;
                    let lp = geoms[p].length;
                    let lq = geoms[q].length;
                    let k00 = table[0][0];
                    z += coef_a * w * dot + coef_b * k00 * (hm.sigma / lp) * (hn.sigma / lq);
                }
            }
            matrix[(m, nn)] = z;
            matrix[(nn, m)] = z;
        }
    }
    Ok(ImpedanceOperator { frequency, matrix, basis })
}

impl ImpedanceOperator {
    /// Relative symmetry defect, for the reciprocity invariant.
    pub fn symmetry_defect(&self) -> f64 {
        let mut num = 0.0f64;
        let mut den = 0.0f64;
        let n = self.matrix.nrows();
        for i in 0..n {
            for j in 0..n {
                num += (self.matrix[(i, j)] - self.matrix[(j, i)]).norm_sqr();
                den += self.matrix[(i, j)].norm_sqr();
            }
        }
        (num / den.max(f64::MIN_POSITIVE)).sqrt()
    }
}

/// Add each series lumped load to the diagonal entry of the basis function
/// attached to its segment. Off-diagonal entries are untouched.
pub fn apply_loads(z: &ImpedanceOperator, mesh: &SegmentMesh) -> Result<ImpedanceOperator> {
    let mut out = z.clone();
    for load in &mesh.loads {
        if let Some(port) = &mesh.port {
            if port.segment == load.segment {
                return Err(Error::InvalidMesh(
                    "load attached to the port segment; the port is handled separately".into(),
                ));
            }
        }
        let bi = out.basis.basis_on_segment(load.segment).ok_or_else(|| {
            Error::InvalidMesh(format!("load segment {} carries no basis function", load.segment))
        })?;
        out.matrix[(bi, bi)] += load.kind.impedance(z.frequency);
    }
    Ok(out)
}

/// Port solution of the driven problem.
#[derive(Debug, Clone)]
pub struct DrivenSolution {
    pub frequency: f64,
    /// Basis-space current coefficients (amperes).
    pub current: DVector<Complex64>,
    pub zin: Complex64,
    pub s11: Complex64,
    pub accepted_power: f64,
    /// Rough condition estimate of the solved system.
    pub cond_estimate: f64,
    /// Basis function carrying the delta-gap excitation.
    pub port_basis: usize,
}

/// Delta-gap excitation vector for a port on `port_segment`.
pub fn excitation_vector(
    basis: &BasisSet,
    port_segment: usize,
    gap_voltage: f64,
) -> Result<(DVector<Complex64>, usize)> {
    let pb = basis.basis_on_segment(port_segment).ok_or_else(|| {
        Error::InvalidMesh(format!("port segment {port_segment} carries no basis function"))
    })?;
    let mut v = DVector::<Complex64>::zeros(basis.len());
    v[pb] = Complex64::new(gap_voltage, 0.0);
    Ok((v, pb))
}

/// Solve Z I = V for a delta-gap source and derive port quantities.
pub fn solve_driven(
    z: &ImpedanceOperator,
    port_segment: usize,
    gap_voltage: f64,
    z0: f64,
) -> Result<DrivenSolution> {
    let (v, pb) = excitation_vector(&z.basis, port_segment, gap_voltage)?;
    let lu = z.matrix.clone().lu();
    let u = lu.u();
    let n = u.nrows();
    let mut dmax = 0.0f64;
    let mut dmin = f64::INFINITY;
    for i in 0..n {
        let d = u[(i, i)].norm();
        dmax = dmax.max(d);
        dmin = dmin.min(d);
    }
    let cond_estimate = if dmin > 0.0 { dmax / dmin } else { f64::INFINITY };
    if !cond_estimate.is_finite() || cond_estimate > 1e14 {
        return Err(Error::IllConditioned { cond_estimate });
    }
    let current = lu
        .solve(&v)
        .ok_or(Error::IllConditioned { cond_estimate })?;
    let i_port = current[pb];
    if i_port.norm() == 0.0 {
        return Err(Error::IllConditioned { cond_estimate });
    }
    let zin = Complex64::new(gap_voltage, 0.0) / i_port;
    let s11 = (zin - z0) / (zin + z0);
    let accepted_power = 0.5 * (Complex64::new(gap_voltage, 0.0) * i_port.conj()).re;
    Ok(DrivenSolution {
        frequency: z.frequency,
        current,
        zin,
        s11,
        accepted_power,
        cond_estimate,
        port_basis: pb,
    })
}

impl DrivenSolution {
    /// Signed mean current per mesh segment.
    pub fn segment_currents(&self, basis: &BasisSet, n_segments: usize) -> Vec<Complex64> {
        basis.segment_currents(n_segments, self.current.as_slice())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_dipole;
    use approx::assert_relative_eq;

    #[test]
    fn basis_count_straight_wire() {
        let mesh = build_dipole(1.0, 1e-3, 11).unwrap();
        let basis = BasisSet::build(&mesh);
        // n segments -> n - 1 interior nodes.
        assert_eq!(basis.len(), mesh.segments.len() - 1);
    }

    #[test]
    fn assemble_is_symmetric() {
        let mesh = build_dipole(0.5, 5e-5, 21).unwrap();
        let z = assemble(&mesh, SPEED_OF_LIGHT).unwrap();
        assert!(z.symmetry_defect() <= 1e-9, "defect {}", z.symmetry_defect());
    }

    #[test]
    fn half_wave_dipole_impedance_near_emf_value() {
        // 0.5 lambda at 300 MHz, radius 1e-4 lambda.
        let f = 299.792_458e6;
        let lam = SPEED_OF_LIGHT / f;
        let mesh = build_dipole(0.5 * lam, 1e-4 * lam, 41).unwrap();
        let z = assemble(&mesh, f).unwrap();
        let sol = solve_driven(&z, mesh.port.unwrap().segment, 1.0, 50.0).unwrap();
        assert_relative_eq!(sol.zin.re, 73.1, max_relative = 0.10);
        assert_relative_eq!(sol.zin.im, 42.5, max_relative = 0.10);
        assert!(sol.s11.norm() < 1.0);
    }

    #[test]
    fn short_dipole_radiation_resistance() {
        let f = 299.792_458e6;
        let lam = SPEED_OF_LIGHT / f;
        let mesh = build_dipole(0.1 * lam, 1e-4 * lam, 21).unwrap();
        let z = assemble(&mesh, f).unwrap();
        let sol = solve_driven(&z, mesh.port.unwrap().segment, 1.0, 50.0).unwrap();
        let expected = 20.0 * std::f64::consts::PI.powi(2) * 0.1f64.powi(2);
        assert_relative_eq!(sol.zin.re, expected, max_relative = 0.15);
        assert!(sol.zin.im < 0.0, "short dipole must be capacitive, got {}", sol.zin.im);
    }

    #[test]
    fn inductive_load_adds_diagonal_term() {
        let f = 1e9;
        let mut mesh = build_dipole(0.15, 1e-3, 15).unwrap();
        mesh.loads.push(crate::geometry::Load {
            segment: 3,
            kind: crate::geometry::LoadKind::Inductance(40e-9),
        });
        let z = assemble(&mesh, f).unwrap();
        let zl = apply_loads(&z, &mesh).unwrap();
        let bi = z.basis.basis_on_segment(3).unwrap();
        let delta = zl.matrix[(bi, bi)] - z.matrix[(bi, bi)];
        assert_relative_eq!(delta.im, 2.0 * std::f64::consts::PI * 1e9 * 40e-9, max_relative = 1e-12);
        assert_relative_eq!(delta.re, 0.0, epsilon = 1e-12);
        // Off-diagonals untouched.
        let mut diff = 0.0;
        for i in 0..z.matrix.nrows() {
            for j in 0..z.matrix.ncols() {
                if i != j {
                    diff += (zl.matrix[(i, j)] - z.matrix[(i, j)]).norm();
                }
            }
        }
        assert_eq!(diff, 0.0);
    }

    #[test]
    fn zero_load_leaves_matrix_unchanged() {
        let f = 1e9;
        let mut mesh = build_dipole(0.15, 1e-3, 15).unwrap();
        mesh.loads.push(crate::geometry::Load {
            segment: 3,
            kind: crate::geometry::LoadKind::Inductance(0.0),
        });
        let z = assemble(&mesh, f).unwrap();
        let zl = apply_loads(&z, &mesh).unwrap();
        assert_eq!(z.matrix, zl.matrix);
    }

    #[test]
    fn matched_s11_is_zero() {
        // Synthetic check through the S11 formula with a matched Zin.
        let zin = Complex64::new(50.0, 0.0);
        let s11 = (zin - 50.0) / (zin + 50.0);
        assert_eq!(s11, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn convergence_under_refinement() {
        let f = 299.792_458e6;
        let lam = SPEED_OF_LIGHT / f;
        let coarse = build_dipole(0.5 * lam, 1e-4 * lam, 31).unwrap();
        let fine = build_dipole(0.5 * lam, 1e-4 * lam, 61).unwrap();
        let zc = assemble(&coarse, f).unwrap();
        let zf = assemble(&fine, f).unwrap();
        let sc = solve_driven(&zc, coarse.port.unwrap().segment, 1.0, 50.0).unwrap();
        let sf = solve_driven(&zf, fine.port.unwrap().segment, 1.0, 50.0).unwrap();
        let rel = (sc.zin - sf.zin).norm() / sf.zin.norm();
        assert!(rel < 0.03, "refinement changed Zin by {rel}");
    }
}
