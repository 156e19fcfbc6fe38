//! Scratch diagnostics (not shipped).

use isocma::designer::{ModeClass, ModeClassifier, ModeOrder};
use isocma::geometry::{self, HRadiatorSpec, RadiatorParams};

const L1: ModeClass = ModeClass { pair: 0, order: ModeOrder::Fundamental };
const R1: ModeClass = ModeClass { pair: 1, order: ModeOrder::Fundamental };
const L2: ModeClass = ModeClass { pair: 0, order: ModeOrder::ThirdOrder };
const R2: ModeClass = ModeClass { pair: 1, order: ModeOrder::ThirdOrder };

fn main() {
    let s = 1.379f64;
    let pairs = [
        RadiatorParams {
            arm_length: s * 66.7e-3,
            arm_spacing: s * 34.0e-3,
            strip_width: s * 4.8e-3,
            rhombus_diagonal: s * 36.0e-3,
            inductance: 36.0e-9,
            inductor_offset: s * 13.2e-3,
            feed_gap: s * 1.0e-3,
            n_pairs: 2,
        },
        RadiatorParams {
            arm_length: s * 47.5e-3,
            arm_spacing: s * 31.0e-3,
            strip_width: s * 4.8e-3,
            rhombus_diagonal: s * 36.0e-3,
            inductance: 20.0e-9,
            inductor_offset: s * 13.1e-3,
            feed_gap: s * 1.0e-3,
            n_pairs: 2,
        },
    ];
    let spec = HRadiatorSpec {
        rhombus_diagonal: s * 36.0e-3,
        feed_gap: None,
        strip_width: s * 4.8e-3,
    };
    let base = geometry::build_h_radiator(&pairs, &spec).unwrap();
    let mesh = geometry::discretize(&base, 2.9e9, 12).unwrap();
    println!("segments: {}", mesh.segments.len());
    let solver = ModeClassifier::new(mesh).unwrap();
    let targets = [868.0e6, 1176.0e6, 1575.0e6, 2450.0e6];
    let windows = [(0.6e9, 1.1e9), (0.9e9, 1.5e9), (1.3e9, 2.0e9), (1.9e9, 2.9e9)];
    for (i, (class, label)) in [(L1, "L1"), (R1, "R1"), (L2, "L2"), (R2, "R2")]
        .into_iter()
        .enumerate()
    {
        match solver
            .find_class_resonance(class, windows[i].0, windows[i].1, 41)
            .unwrap()
        {
            Some((fr, m)) => {
                let dev = solver.mode_deviation(fr, &m).unwrap();
                println!(
                    "{label}: {:.4} GHz (ratio {:.3} vs target), dev {:.2} dB",
                    fr / 1e9,
                    fr / targets[i],
                    dev
                );
            }
            None => println!("{label}: NOT FOUND"),
        }
    }

    // Diagnose L1: pattern of the full antisymmetric current vs the current
    // with the other pair's arms zeroed.
    use isocma::farfield::{self, GridSpec};
    use isocma::geometry::WirePart;
    let (fr, m) = solver.find_class_resonance(L1, 0.6e9, 1.1e9, 41).unwrap().unwrap();
    let full = solver.antisymmetric_part(&solver.segment_currents(&m));
    let mesh = solver.mesh();
    let mut stripped = full.clone();
    let mut p1amp = 0.0f64;
    for (si, s) in mesh.segments.iter().enumerate() {
        if s.tag == (WirePart::Arm { pair: 1 }) {
            p1amp = p1amp.max(stripped[si].norm());
            stripped[si] = num_complex::Complex64::new(0.0, 0.0);
        }
    }
    for (name, cur) in [("full", &full), ("no-p1-arms", &stripped)] {
        let g = farfield::radiate(mesh, cur, fr, GridSpec::default()).unwrap();
        let d = farfield::directivity_deviation(&g);
        println!("L1 {name}: dev {:.2} dB", d.deviation_db);
    }
    println!("p1 arm amp {:.3}", p1amp);
}
