use isocma::designer::{ModeClass, ModeClassifier, ModeOrder};
use isocma::geometry::{self, HRadiatorSpec, RadiatorParams, WirePart};

fn main() {
    let al2 = 40.0e-3;
    let pairs = [
        RadiatorParams { arm_length: 62.0e-3, arm_spacing: 20.0e-3, strip_width: 4.8e-3,
            rhombus_diagonal: 36.0e-3, inductance: 36.0e-9, inductor_offset: 13.2e-3,
            feed_gap: 1.0e-3, n_pairs: 2 },
        RadiatorParams { arm_length: al2, arm_spacing: 14.0e-3, strip_width: 4.8e-3,
            rhombus_diagonal: 36.0e-3, inductance: 48.0e-9, inductor_offset: 0.276 * al2,
            feed_gap: 1.0e-3, n_pairs: 2 },
    ];
    let spec = HRadiatorSpec { rhombus_diagonal: 36.0e-3, feed_gap: Some(1.0e-3), strip_width: 4.8e-3 };
    let base = geometry::build_h_radiator(&pairs, &spec).unwrap();
    let mesh = geometry::discretize(&base, 3.0e9, 12).unwrap();
    let tags: Vec<WirePart> = mesh.segments.iter().map(|s| s.tag).collect();
    let solver = ModeClassifier::new(mesh).unwrap();
    let r1 = ModeClass { pair: 1, order: ModeOrder::Fundamental };
    for f in [0.933672e9, 0.9345e9, 0.930e9] {
        if let Some(m) = solver.mode_of_class(f, r1).unwrap() {
            let seg = solver.segment_currents(&m);
            let mut arm = [0.0f64; 2];
            let mut hub = 0.0f64;
            for (si, j) in seg.iter().enumerate() {
                match tags[si] {
                    WirePart::Arm { pair } => arm[pair] = arm[pair].max(j.norm()),
                    WirePart::Rhombus | WirePart::Feed => hub = hub.max(j.norm()),
                    _ => {}
                }
            }
            println!("f={:.6} GHz lam={:+.4} dev={:.2}  arm0={:.3} arm1={:.3} hub={:.3}",
                f/1e9, m.eigenvalue, solver.mode_deviation(f, &m).unwrap(), arm[0], arm[1], hub);
        }
    }
}
