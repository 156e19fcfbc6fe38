//! Parametric U/H-radiator geometry as thin-wire segment meshes.
//!
//! All radiators live in the x-z plane (y = 0). Strips are modeled as
//! equivalent round wires of radius w/4. Lumped loads and the feed port are
//! attached to dedicated short segments so that refinement keeps them at
//! their intended physical location.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Free-space speed of light (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// 3D point or vector in meters.
pub type Vec3 = [f64; 3];

pub(crate) fn vsub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub(crate) fn vadd(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

pub(crate) fn vscale(a: Vec3, s: f64) -> Vec3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

pub(crate) fn vdot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn vnorm(a: Vec3) -> f64 {
    vdot(a, a).sqrt()
}

/// Which part of the radiator a segment belongs to.
///
/// Tags drive inductor placement (restricted to arms) and make dumps legible.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WirePart {
    /// Parallel arm of pair `pair` (0 = lowest-frequency pair).
    Arm { pair: usize },
    /// Bottom strip of a plain U-radiator.
    Bottom,
    /// Central rhombus skeleton.
    Rhombus,
    /// Dedicated feed segment.
    Feed,
    /// Anything else (test fixtures, plain dipoles).
    Wire,
}

/// One straight thin-wire segment between two mesh nodes.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Segment {
    pub a: usize,
    pub b: usize,
    /// Equivalent wire radius in meters.
    pub radius: f64,
    pub tag: WirePart,
}

/// Series lumped element law, frequency -> complex ohms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LoadKind {
    /// Series inductor, value in henries.
    Inductance(f64),
    /// Series capacitor, value in farads.
    Capacitance(f64),
}

impl LoadKind {
    /// Series impedance at frequency `f` in hertz.
    pub fn impedance(&self, f: f64) -> num_complex::Complex64 {
        use num_complex::Complex64;
        let w = 2.0 * std::f64::consts::PI * f;
        match *self {
            LoadKind::Inductance(l) => Complex64::new(0.0, w * l),
            LoadKind::Capacitance(c) => {
                if c == 0.0 {
                    Complex64::new(0.0, 0.0)
                } else {
                    Complex64::new(0.0, -1.0 / (w * c))
                }
            }
        }
    }
}

/// A series lumped load attached to a segment.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Load {
    pub segment: usize,
    pub kind: LoadKind,
}

/// Delta-gap feed port on a segment.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Port {
    pub segment: usize,
    /// Physical gap width in meters (metadata; excitation is a delta gap).
    pub gap: f64,
}

/// Thin-wire discretization of a radiator with lumped-load attachments.
///
/// Immutable once built; all solvers share it read-only.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SegmentMesh {
    pub nodes: Vec<Vec3>,
    pub segments: Vec<Segment>,
    pub loads: Vec<Load>,
    pub port: Option<Port>,
}

impl SegmentMesh {
    pub fn segment_length(&self, s: usize) -> f64 {
        let seg = &self.segments[s];
        vnorm(vsub(self.nodes[seg.b], self.nodes[seg.a]))
    }

    pub fn segment_center(&self, s: usize) -> Vec3 {
        let seg = &self.segments[s];
        vscale(vadd(self.nodes[seg.a], self.nodes[seg.b]), 0.5)
    }

    /// Unit tangent in the a -> b direction.
    pub fn segment_tangent(&self, s: usize) -> Vec3 {
        let seg = &self.segments[s];
        let d = vsub(self.nodes[seg.b], self.nodes[seg.a]);
        vscale(d, 1.0 / vnorm(d))
    }

    /// Number of segments incident to each node.
    pub fn node_degrees(&self) -> Vec<usize> {
        let mut deg = vec![0usize; self.nodes.len()];
        for seg in &self.segments {
            deg[seg.a] += 1;
            deg[seg.b] += 1;
        }
        deg
    }

    /// Structural validity: index bounds, nonzero lengths, thin-wire radius,
    /// connectivity, and load/port attachment.
    pub fn validate(&self) -> Result<()> {
        if self.segments.is_empty() {
            return Err(Error::InvalidMesh("mesh has no segments".into()));
        }
        for (i, seg) in self.segments.iter().enumerate() {
            if seg.a >= self.nodes.len() || seg.b >= self.nodes.len() {
                return Err(Error::InvalidMesh(format!("segment {i} node index out of range")));
            }
            let len = self.segment_length(i);
            if len <= 0.0 {
                return Err(Error::InvalidMesh(format!("segment {i} has zero length")));
            }
            if seg.radius <= 0.0 || seg.radius >= len / 2.0 {
                return Err(Error::InvalidMesh(format!(
                    "segment {i} violates thin-wire validity: radius {:.3e} vs length {:.3e}",
                    seg.radius, len
                )));
            }
        }
        for load in &self.loads {
            if load.segment >= self.segments.len() {
                return Err(Error::InvalidMesh(format!(
                    "load segment index {} out of range",
                    load.segment
                )));
            }
        }
        if let Some(port) = &self.port {
            if port.segment >= self.segments.len() {
                return Err(Error::InvalidMesh(format!(
                    "port segment index {} out of range",
                    port.segment
                )));
            }
        }
        // Connectivity: union of segments must form one connected graph.
        let mut parent: Vec<usize> = (0..self.nodes.len()).collect();
        fn find(parent: &mut Vec<usize>, mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for seg in &self.segments {
            let (ra, rb) = (find(&mut parent, seg.a), find(&mut parent, seg.b));
            parent[ra] = rb;
        }
        let root = find(&mut parent, self.segments[0].a);
        for seg in &self.segments {
            if find(&mut parent, seg.a) != root || find(&mut parent, seg.b) != root {
                return Err(Error::InvalidMesh("mesh is not connected".into()));
            }
        }
        Ok(())
    }

    /// Total wire length in meters.
    pub fn total_length(&self) -> f64 {
        (0..self.segments.len()).map(|s| self.segment_length(s)).sum()
    }

    /// Axis-aligned bounding box (min, max).
    pub fn bounding_box(&self) -> (Vec3, Vec3) {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for n in &self.nodes {
            for d in 0..3 {
                lo[d] = lo[d].min(n[d]);
                hi[d] = hi[d].max(n[d]);
            }
        }
        (lo, hi)
    }
}

/// Bottom-element style for a single U-radiator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BottomStyle {
    /// Straight strip, as in the untransformed U.
    Strip,
    /// Rhombus skeleton spanning the arm spacing (rotated square).
    RhombusSkeleton,
}

/// Parameters of one U-radiator arm pair.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RadiatorParams {
    /// Arm length AL per arm, meters.
    pub arm_length: f64,
    /// Arm spacing h (also the bottom-element span), meters.
    pub arm_spacing: f64,
    /// Strip width w, meters; equivalent wire radius is w/4.
    pub strip_width: f64,
    /// Horizontal diagonal of the central rhombus (H-radiator), meters.
    pub rhombus_diagonal: f64,
    /// Series inductor per arm, henries; 0 disables loading.
    pub inductance: f64,
    /// Inductor offset lL from the arm tip, meters.
    pub inductor_offset: f64,
    /// Feed gap g, meters (used when a port is requested).
    pub feed_gap: f64,
    /// Number of arm pairs this parameter set describes.
    pub n_pairs: usize,
}

impl RadiatorParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.arm_length > 0.0) {
            return Err(Error::invalid_parameter("arm_length", "must be > 0"));
        }
        if !(self.arm_spacing > 0.0) {
            return Err(Error::invalid_parameter("arm_spacing", "must be > 0"));
        }
        if !(self.strip_width > 0.0) {
            return Err(Error::invalid_parameter("strip_width", "must be > 0"));
        }
        if self.inductance < 0.0 {
            return Err(Error::invalid_parameter("inductance", "must be >= 0"));
        }
        if self.inductance > 0.0 && !(self.inductor_offset > 0.0 && self.inductor_offset < self.arm_length) {
            return Err(Error::invalid_parameter(
                "inductor_offset",
                "must lie strictly between 0 and arm_length",
            ));
        }
        if self.n_pairs < 1 {
            return Err(Error::invalid_parameter("n_pairs", "must be >= 1"));
        }
        Ok(())
    }
}

/// Classical flat-strip to round-wire equivalence: radius = width / 4.
pub fn equivalent_radius(strip_width: f64) -> Result<f64> {
    if !(strip_width > 0.0) {
        return Err(Error::invalid_parameter("strip_width", "must be > 0"));
    }
    Ok(strip_width / 4.0)
}

/// Mesh under construction; dedupes nothing, builders keep their own indices.
struct MeshBuilder {
    nodes: Vec<Vec3>,
    segments: Vec<Segment>,
    loads: Vec<Load>,
    port: Option<Port>,
}

impl MeshBuilder {
    fn new() -> Self {
        MeshBuilder {
            nodes: Vec::new(),
            segments: Vec::new(),
            loads: Vec::new(),
            port: None,
        }
    }

    fn node(&mut self, p: Vec3) -> usize {
        // Merge coincident nodes so junctions connect.
        for (i, n) in self.nodes.iter().enumerate() {
            if vnorm(vsub(*n, p)) < 1e-12 {
                return i;
            }
        }
        self.nodes.push(p);
        self.nodes.len() - 1
    }

    fn wire(&mut self, a: Vec3, b: Vec3, radius: f64, tag: WirePart) -> usize {
        let ia = self.node(a);
        let ib = self.node(b);
        self.segments.push(Segment { a: ia, b: ib, radius, tag });
        self.segments.len() - 1
    }

    fn finish(self) -> SegmentMesh {
        SegmentMesh {
            nodes: self.nodes,
            segments: self.segments,
            loads: self.loads,
            port: self.port,
        }
    }
}

/// Interpolate along a straight run from `a` to `b` at arclength `t` in [0, len].
fn along(a: Vec3, b: Vec3, t: f64) -> Vec3 {
    let len = vnorm(vsub(b, a));
    vadd(a, vscale(vsub(b, a), t / len))
}

/// Add an arm as a wire chain from `root` to `tip`, inserting a short
/// dedicated load segment centered at `inductor_offset` from the tip when
/// `inductance > 0`. The load stays at its physical location through
/// refinement because `discretize` remaps by segment center.
fn add_arm(
    b: &mut MeshBuilder,
    root: Vec3,
    tip: Vec3,
    radius: f64,
    tag: WirePart,
    inductance: f64,
    inductor_offset: f64,
) {
    let len = vnorm(vsub(tip, root));
    if inductance > 0.0 {
        let half = (2.0 * radius).min(inductor_offset * 0.5).min((len - inductor_offset) * 0.5);
        let s0 = len - inductor_offset - half; // from root
        let s1 = len - inductor_offset + half;
        let p0 = along(root, tip, s0);
        let p1 = along(root, tip, s1);
        b.wire(root, p0, radius, tag);
        let load_seg = b.wire(p0, p1, radius, tag);
        b.wire(p1, tip, radius, tag);
        b.loads.push(Load {
            segment: load_seg,
            kind: LoadKind::Inductance(inductance),
        });
    } else {
        b.wire(root, tip, radius, tag);
    }
}

/// Build a single U-radiator in the x-z plane, geometric center at the origin.
///
/// Two parallel arms of length AL run along +z at x = +-h/2; the bottom
/// element joins the arm roots at z = -AL/2. Inductors, when enabled, sit at
/// `inductor_offset` from each arm tip.
pub fn build_u_radiator(params: &RadiatorParams, bottom: BottomStyle) -> Result<SegmentMesh> {
    params.validate()?;
    if params.n_pairs != 1 {
        return Err(Error::invalid_parameter(
            "n_pairs",
            "build_u_radiator handles a single pair; use build_h_radiator",
        ));
    }
    let radius = equivalent_radius(params.strip_width)?;
    let h = params.arm_spacing;
    let al = params.arm_length;
    let z0 = -al / 2.0;
    let z1 = al / 2.0;

    let mut b = MeshBuilder::new();
    // Arms, roots at the bottom corners, tips at the top.
    add_arm(
        &mut b,
        [-h / 2.0, 0.0, z0],
        [-h / 2.0, 0.0, z1],
        radius,
        WirePart::Arm { pair: 0 },
        params.inductance,
        params.inductor_offset,
    );
    add_arm(
        &mut b,
        [h / 2.0, 0.0, z0],
        [h / 2.0, 0.0, z1],
        radius,
        WirePart::Arm { pair: 0 },
        params.inductance,
        params.inductor_offset,
    );
    match bottom {
        BottomStyle::Strip => {
            b.wire([-h / 2.0, 0.0, z0], [h / 2.0, 0.0, z0], radius, WirePart::Bottom);
        }
        BottomStyle::RhombusSkeleton => {
            // Rotated square spanning the arm roots: corners at the two arm
            // roots and at z0 +- h/2 on the centerline.
            let left = [-h / 2.0, 0.0, z0];
            let right = [h / 2.0, 0.0, z0];
            let top = [0.0, 0.0, z0 + h / 2.0];
            let bot = [0.0, 0.0, z0 - h / 2.0];
            b.wire(left, top, radius, WirePart::Rhombus);
            b.wire(top, right, radius, WirePart::Rhombus);
            b.wire(left, bot, radius, WirePart::Rhombus);
            b.wire(bot, right, radius, WirePart::Rhombus);
        }
    }
    let mesh = b.finish();
    mesh.validate()?;
    Ok(mesh)
}

/// Shared central-rhombus and feed description for an H-radiator.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct HRadiatorSpec {
    /// Diagonal G of the central rotated-square rhombus, meters.
    pub rhombus_diagonal: f64,
    /// Feed gap g; `Some` splits the rhombus along its horizontal diagonal
    /// and places a delta-gap port at the center.
    pub feed_gap: Option<f64>,
    /// Strip width shared by the rhombus skeleton wires, meters.
    pub strip_width: f64,
}

/// Build an H-shaped radiator: arm pairs attached to a central rhombus.
///
/// Pair 0 extends toward -x, pair 1 toward +x; further pairs alternate and
/// nest inside. Each pair's two arms are horizontal wires at z = +-h/2,
/// rooted on the rhombus edges. With a feed, the rhombus is split along its
/// horizontal diagonal and the port bridges the halves at the center.
pub fn build_h_radiator(pairs: &[RadiatorParams], spec: &HRadiatorSpec) -> Result<SegmentMesh> {
    if pairs.len() < 2 {
        return Err(Error::invalid_parameter(
            "pairs",
            "H-radiator needs at least two arm pairs; use build_u_radiator for one",
        ));
    }
    for (i, p) in pairs.iter().enumerate() {
        p.validate()?;
        if i > 0 {
            if !(p.arm_length < pairs[i - 1].arm_length) {
                return Err(Error::invalid_parameter(
                    "arm_length",
                    format!("nesting violated: AL[{i}] must be < AL[{}]", i - 1),
                ));
            }
            if !(p.arm_spacing < pairs[i - 1].arm_spacing) {
                return Err(Error::invalid_parameter(
                    "arm_spacing",
                    format!("nesting violated: h[{i}] must be < h[{}]", i - 1),
                ));
            }
        }
    }
    let g_diag = spec.rhombus_diagonal;
    if !(g_diag > 0.0) {
        return Err(Error::invalid_parameter("rhombus_diagonal", "must be > 0"));
    }
    for (i, p) in pairs.iter().enumerate() {
        if !(p.arm_spacing < g_diag) {
            return Err(Error::invalid_parameter(
                "arm_spacing",
                format!("h[{i}] must be < rhombus_diagonal so arms root on the rhombus edges"),
            ));
        }
    }
    if let Some(g) = spec.feed_gap {
        if !(g > 0.0) {
            return Err(Error::invalid_parameter("feed_gap", "must be > 0 when a port is requested"));
        }
    }
    let radius = equivalent_radius(spec.strip_width)?;

    let mut b = MeshBuilder::new();
    let half = g_diag / 2.0;

    // Rhombus skeleton. The split offset is the half-length of the feed
    // segment; without a feed the halves meet on the horizontal diagonal.
    let zc = match spec.feed_gap {
        // Keep the feed segment thin-wire valid even for narrow gaps.
        Some(g) => (g / 2.0).max(2.05 * radius),
        None => 0.0,
    };
    let top = [0.0, 0.0, half];
    let bot = [0.0, 0.0, -half];
    if zc > 0.0 {
        let (ulx, urx) = (-(half - zc), half - zc);
        let ul = [ulx, 0.0, zc];
        let ur = [urx, 0.0, zc];
        let ll = [ulx, 0.0, -zc];
        let lr = [urx, 0.0, -zc];
        let ct = [0.0, 0.0, zc];
        let cb = [0.0, 0.0, -zc];
        // Upper half: outer edges, cut edges, center spine.
        b.wire(ul, top, radius, WirePart::Rhombus);
        b.wire(top, ur, radius, WirePart::Rhombus);
        b.wire(ul, ct, radius, WirePart::Rhombus);
        b.wire(ct, ur, radius, WirePart::Rhombus);
        b.wire(top, ct, radius, WirePart::Rhombus);
        // Lower half, mirrored.
        b.wire(ll, bot, radius, WirePart::Rhombus);
        b.wire(bot, lr, radius, WirePart::Rhombus);
        b.wire(ll, cb, radius, WirePart::Rhombus);
        b.wire(cb, lr, radius, WirePart::Rhombus);
        b.wire(bot, cb, radius, WirePart::Rhombus);
        // Feed segment bridging the halves.
        let feed = b.wire(cb, ct, radius, WirePart::Feed);
        b.port = Some(Port {
            segment: feed,
            gap: spec.feed_gap.unwrap(),
        });
    } else {
        let left = [-half, 0.0, 0.0];
        let right = [half, 0.0, 0.0];
        b.wire(left, top, radius, WirePart::Rhombus);
        b.wire(top, right, radius, WirePart::Rhombus);
        b.wire(left, bot, radius, WirePart::Rhombus);
        b.wire(bot, right, radius, WirePart::Rhombus);
        b.wire(top, bot, radius, WirePart::Rhombus);
    }

    // Arm pairs. Pair i roots on the rhombus edge at z = +-h/2 and extends
    // outward; even pairs to -x, odd pairs to +x.
    for (i, p) in pairs.iter().enumerate() {
        let r = equivalent_radius(p.strip_width)?;
        let mut hz = p.arm_spacing / 2.0;
        // On the 45-degree rhombus edge, |x| = half - |z|. If the root would
        // leave a sliver shorter than the thin-wire limit between itself and
        // the top/bottom corner, snap it onto the corner.
        if (half - hz) * std::f64::consts::SQRT_2 < 2.5 * r.max(radius) {
            hz = half;
        }
        let rx = half - hz;
        let sign = if i % 2 == 0 { -1.0 } else { 1.0 };
        for zsign in [1.0, -1.0] {
            let root = [sign * rx, 0.0, zsign * hz];
            let tip = [sign * (rx + p.arm_length), 0.0, zsign * hz];
            // Split the rhombus edge so the arm root is a mesh node.
            add_arm(
                &mut b,
                root,
                tip,
                r,
                WirePart::Arm { pair: i },
                p.inductance,
                p.inductor_offset,
            );
        }
    }

    let mesh = split_edges_at_nodes(b.finish());
    mesh.validate()?;
    Ok(mesh)
}

/// Split segments that pass through other mesh nodes so arm roots join the
/// rhombus edges as real junctions.
fn split_edges_at_nodes(mesh: SegmentMesh) -> SegmentMesh {
    let mut segments: Vec<Segment> = Vec::new();
    // New index of the center-holding piece, per original segment; applied
    // once at the end so old and new indices never mix.
    let mut center_new: Vec<usize> = Vec::with_capacity(mesh.segments.len());
    for seg in mesh.segments.iter() {
        let a = mesh.nodes[seg.a];
        let bp = mesh.nodes[seg.b];
        let len = vnorm(vsub(bp, a));
        let t = vscale(vsub(bp, a), 1.0 / len);
        // Interior nodes on this segment, sorted by arclength.
        let mut cuts: Vec<(f64, usize)> = Vec::new();
        for (ni, n) in mesh.nodes.iter().enumerate() {
            if ni == seg.a || ni == seg.b {
                continue;
            }
            let d = vsub(*n, a);
            let s = vdot(d, t);
            if s > 1e-12 && s < len - 1e-12 {
                let perp = vnorm(vsub(d, vscale(t, s)));
                if perp < 1e-12 {
                    cuts.push((s, ni));
                }
            }
        }
        if cuts.is_empty() {
            center_new.push(segments.len());
            segments.push(*seg);
            continue;
        }
        cuts.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
        let mut prev = seg.a;
        let first_new = segments.len();
        for &(_, ni) in &cuts {
            segments.push(Segment { a: prev, b: ni, radius: seg.radius, tag: seg.tag });
            prev = ni;
        }
        segments.push(Segment { a: prev, b: seg.b, radius: seg.radius, tag: seg.tag });
        // Attachments on a split segment move to the piece holding the center.
        let n_pieces = cuts.len() + 1;
        center_new.push(first_new + n_pieces / 2);
    }
    let (loads, port) = remap_attachments(&mesh.loads, mesh.port, &center_new);
    SegmentMesh { nodes: mesh.nodes, segments, loads, port }
}

/// Apply an old-segment-index -> new-segment-index map to loads and port.
fn remap_attachments(
    loads: &[Load],
    port: Option<Port>,
    center_new: &[usize],
) -> (Vec<Load>, Option<Port>) {
    let loads = loads
        .iter()
        .map(|l| Load { segment: center_new[l.segment], kind: l.kind })
        .collect();
    let port = port.map(|p| Port { segment: center_new[p.segment], gap: p.gap });
    (loads, port)
}

/// Refine a mesh so every segment is at most lambda(f_max)/segments_per_wavelength
/// long. Loads and the port move to the refined segment containing their
/// original segment's center. Idempotent at fixed f_max and density.
pub fn discretize(mesh: &SegmentMesh, f_max: f64, segments_per_wavelength: usize) -> Result<SegmentMesh> {
    if !(f_max > 0.0) {
        return Err(Error::invalid_parameter("f_max", "must be > 0"));
    }
    if segments_per_wavelength < 10 {
        return Err(Error::invalid_parameter(
            "segments_per_wavelength",
            "must be >= 10",
        ));
    }
    let target = SPEED_OF_LIGHT / f_max / segments_per_wavelength as f64;
    let mut nodes = mesh.nodes.clone();
    let mut segments: Vec<Segment> = Vec::new();
    let mut center_new: Vec<usize> = Vec::with_capacity(mesh.segments.len());
    for (si, seg) in mesh.segments.iter().enumerate() {
        let len = mesh.segment_length(si);
        let n = (len / target).ceil().max(1.0) as usize;
        if n == 1 {
            center_new.push(segments.len());
            segments.push(*seg);
            continue;
        }
        let a = mesh.nodes[seg.a];
        let bp = mesh.nodes[seg.b];
        let first_new = segments.len();
        let mut prev = seg.a;
        for k in 1..n {
            let p = vadd(a, vscale(vsub(bp, a), k as f64 / n as f64));
            nodes.push(p);
            let ni = nodes.len() - 1;
            segments.push(Segment { a: prev, b: ni, radius: seg.radius, tag: seg.tag });
            prev = ni;
        }
        segments.push(Segment { a: prev, b: seg.b, radius: seg.radius, tag: seg.tag });
        // Piece containing the original center (midpoint of piece n/2 for odd n,
        // start of piece n/2 for even n).
        center_new.push(first_new + n / 2);
    }
    let (loads, port) = remap_attachments(&mesh.loads, mesh.port, &center_new);
    let refined = SegmentMesh { nodes, segments, loads, port };
    refined.validate()?;
    Ok(refined)
}

/// Geometry document as written to / read from JSON.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeometryDoc {
    pub nodes: Vec<Vec3>,
    pub segments: Vec<Segment>,
    pub loads: Vec<Load>,
    pub port: Option<Port>,
    /// Builder parameters, when the mesh came from a parametric builder.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<serde_json::Value>,
}

impl GeometryDoc {
    pub fn from_mesh(mesh: &SegmentMesh, params: Option<serde_json::Value>) -> Self {
        GeometryDoc {
            nodes: mesh.nodes.clone(),
            segments: mesh.segments.clone(),
            loads: mesh.loads.clone(),
            port: mesh.port,
            params,
        }
    }

    pub fn into_mesh(self) -> SegmentMesh {
        SegmentMesh {
            nodes: self.nodes,
            segments: self.segments,
            loads: self.loads,
            port: self.port,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Straight center-fed dipole along z, used by tests and oracles.
pub fn build_dipole(total_length: f64, radius: f64, n_segments: usize) -> Result<SegmentMesh> {
    if !(total_length > 0.0) {
        return Err(Error::invalid_parameter("total_length", "must be > 0"));
    }
    if n_segments < 3 {
        return Err(Error::invalid_parameter("n_segments", "must be >= 3"));
    }
    // Odd count puts a node exactly at the center for the feed basis.
    let n = if n_segments % 2 == 0 { n_segments + 1 } else { n_segments };
    let dz = total_length / n as f64;
    let mut b = MeshBuilder::new();
    let mut feed_seg = 0;
    for k in 0..n {
        let z0 = -total_length / 2.0 + k as f64 * dz;
        let s = b.wire([0.0, 0.0, z0], [0.0, 0.0, z0 + dz], radius, WirePart::Wire);
        if k == n / 2 {
            feed_seg = s;
        }
    }
    let mut mesh = b.finish();
    mesh.port = Some(Port { segment: feed_seg, gap: dz });
    mesh.validate()?;
    Ok(mesh)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn u_params() -> RadiatorParams {
        RadiatorParams {
            arm_length: 66.7e-3,
            arm_spacing: 27.0e-3,
            strip_width: 4.8e-3,
            rhombus_diagonal: 36.0e-3,
            inductance: 0.0,
            inductor_offset: 13.2e-3,
            feed_gap: 1.0e-3,
            n_pairs: 1,
        }
    }

    #[test]
    fn equivalent_radius_quarter_width() {
        assert_eq!(equivalent_radius(4.8e-3).unwrap(), 1.2e-3);
        assert_eq!(equivalent_radius(1.0e-3).unwrap(), 0.25e-3);
        assert!(equivalent_radius(0.0).is_err());
    }

    #[test]
    fn u_radiator_rejects_zero_arm_length() {
        let mut p = u_params();
        p.arm_length = 0.0;
        let err = build_u_radiator(&p, BottomStyle::Strip).unwrap_err();
        assert!(err.to_string().contains("arm_length"));
    }

    #[test]
    fn u_radiator_current_path_extent() {
        let p = u_params();
        let mesh = build_u_radiator(&p, BottomStyle::Strip).unwrap();
        let total = mesh.total_length();
        assert!((total - (2.0 * p.arm_length + p.arm_spacing)).abs() < 1e-9);
    }

    #[test]
    fn u_radiator_mirror_symmetric_in_x() {
        let mut p = u_params();
        p.inductance = 40e-9;
        let mesh = build_u_radiator(&p, BottomStyle::Strip).unwrap();
        // Every node's x-mirror must also be a node.
        for n in &mesh.nodes {
            let m = [-n[0], n[1], n[2]];
            assert!(
                mesh.nodes.iter().any(|o| vnorm(vsub(*o, m)) < 1e-12),
                "no mirror for {n:?}"
            );
        }
    }

    #[test]
    fn u_radiator_inductors_sit_at_offset_from_tips() {
        let mut p = u_params();
        p.inductance = 40e-9;
        let mesh = build_u_radiator(&p, BottomStyle::Strip).unwrap();
        assert_eq!(mesh.loads.len(), 2);
        let tip_z = p.arm_length / 2.0;
        for load in &mesh.loads {
            let c = mesh.segment_center(load.segment);
            assert!((c[2] - (tip_z - p.inductor_offset)).abs() < 1e-9);
            assert_eq!(load.kind, LoadKind::Inductance(40e-9));
        }
    }

    fn h_pairs() -> (Vec<RadiatorParams>, HRadiatorSpec) {
        let p1 = RadiatorParams {
            arm_length: 66.7e-3,
            arm_spacing: 34.5e-3,
            strip_width: 4.8e-3,
            rhombus_diagonal: 36.0e-3,
            inductance: 36e-9,
            inductor_offset: 13.2e-3,
            feed_gap: 1.0e-3,
            n_pairs: 1,
        };
        let p2 = RadiatorParams {
            arm_length: 47.5e-3,
            arm_spacing: 25.5e-3,
            inductance: 20e-9,
            inductor_offset: 13.1e-3,
            ..p1
        };
        let spec = HRadiatorSpec {
            rhombus_diagonal: 36.0e-3,
            feed_gap: Some(1.0e-3),
            strip_width: 4.8e-3,
        };
        (vec![p1, p2], spec)
    }

    #[test]
    fn h_radiator_fits_paper_footprint() {
        let (pairs, spec) = h_pairs();
        let mesh = build_h_radiator(&pairs, &spec).unwrap();
        let (lo, hi) = mesh.bounding_box();
        assert!(hi[0] - lo[0] <= 150e-3, "x extent {}", hi[0] - lo[0]);
        assert!(hi[2] - lo[2] <= 50e-3, "z extent {}", hi[2] - lo[2]);
        assert!(mesh.port.is_some());
        assert_eq!(mesh.loads.len(), 4);
    }

    #[test]
    fn h_radiator_single_pair_rejected() {
        let (pairs, spec) = h_pairs();
        assert!(build_h_radiator(&pairs[..1], &spec).is_err());
    }

    #[test]
    fn h_radiator_nesting_violation_rejected() {
        let (mut pairs, spec) = h_pairs();
        pairs[1].arm_length = pairs[0].arm_length + 1e-3;
        assert!(build_h_radiator(&pairs, &spec).is_err());
    }

    #[test]
    fn h_radiator_feed_gap_must_be_positive() {
        let (pairs, mut spec) = h_pairs();
        spec.feed_gap = Some(0.0);
        assert!(build_h_radiator(&pairs, &spec).is_err());
    }

    #[test]
    fn h_radiator_counterexample_sweep_builds() {
        let (mut pairs, spec) = h_pairs();
        for k in 0..5 {
            let al2 = 30e-3 + k as f64 * 5e-3;
            pairs[1].arm_length = al2;
            pairs[1].inductor_offset = al2 * 0.25;
            let mesh = build_h_radiator(&pairs, &spec).unwrap();
            mesh.validate().unwrap();
        }
    }

    #[test]
    fn discretize_respects_target_length() {
        // One 150 mm wire at 2.57 GHz, 20 per wavelength.
        let mut b = MeshBuilder::new();
        b.wire([0.0, 0.0, 0.0], [0.15, 0.0, 0.0], 1e-3, WirePart::Wire);
        let mesh = b.finish();
        let fine = discretize(&mesh, 2.57e9, 20).unwrap();
        let target = SPEED_OF_LIGHT / 2.57e9 / 20.0;
        assert!(fine.segments.len() >= 26, "{} segments", fine.segments.len());
        for s in 0..fine.segments.len() {
            assert!(fine.segment_length(s) <= target + 1e-12);
        }
    }

    #[test]
    fn discretize_idempotent() {
        let mesh = build_u_radiator(&u_params(), BottomStyle::Strip).unwrap();
        let once = discretize(&mesh, 3e9, 20).unwrap();
        let twice = discretize(&once, 3e9, 20).unwrap();
        assert_eq!(once.segments.len(), twice.segments.len());
        assert_eq!(once.nodes.len(), twice.nodes.len());
    }

    #[test]
    fn discretize_keeps_load_near_original_location() {
        let mut p = u_params();
        p.inductance = 40e-9;
        let mesh = build_u_radiator(&p, BottomStyle::Strip).unwrap();
        let originals: Vec<Vec3> = mesh.loads.iter().map(|l| mesh.segment_center(l.segment)).collect();
        let fine = discretize(&mesh, 3e9, 20).unwrap();
        for (load, orig) in fine.loads.iter().zip(&originals) {
            let c = fine.segment_center(load.segment);
            let tol = fine.segment_length(load.segment);
            assert!(vnorm(vsub(c, *orig)) <= tol, "load moved by {}", vnorm(vsub(c, *orig)));
        }
        assert!(fine.port.is_none());
    }

    #[test]
    fn geometry_doc_roundtrip() {
        let (pairs, spec) = h_pairs();
        let mesh = build_h_radiator(&pairs, &spec).unwrap();
        let doc = GeometryDoc::from_mesh(&mesh, None);
        let json = doc.to_json().unwrap();
        let back = GeometryDoc::from_json(&json).unwrap().into_mesh();
        assert_eq!(back.nodes.len(), mesh.nodes.len());
        assert_eq!(back.segments.len(), mesh.segments.len());
        assert_eq!(back.loads.len(), mesh.loads.len());
        back.validate().unwrap();
    }
}
