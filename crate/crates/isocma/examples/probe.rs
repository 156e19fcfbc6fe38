//! Scratch diagnostics (not shipped).

use isocma::designer::{ModeClass, ModeClassifier, ModeOrder};
use isocma::farfield::{self, GridSpec};
use isocma::geometry::{
    self, build_dipole, HRadiatorSpec, RadiatorParams, Segment, SegmentMesh, WirePart,
    SPEED_OF_LIGHT,
};
use isocma::mom;
use num_complex::Complex64;

fn driven(mesh: &SegmentMesh, f: f64) -> mom::DrivenSolution {
    let z = mom::assemble(mesh, f).unwrap();
    let z = mom::apply_loads(&z, mesh).unwrap();
    mom::solve_driven(&z, mesh.port.as_ref().unwrap().segment, 1.0, 50.0).unwrap()
}

fn probe_dipole() {
    let f = SPEED_OF_LIGHT / 0.3;
    for n in [21, 41, 81, 121] {
        for r in [0.1e-3, 0.5e-3, 1.0e-3] {
            let mesh = build_dipole(0.15, r, n).unwrap();
            let sol = driven(&mesh, f);
            println!("dipole n={n} r={r:.1e}: Zin = {:.2} {:+.2}j", sol.zin.re, sol.zin.im);
        }
    }
}

fn probe_counterexample() {
    for al2_mm in [30.0, 35.0, 40.0, 45.0, 50.0] {
        let al2 = al2_mm * 1e-3;
        let pairs = [
            RadiatorParams {
                arm_length: 62.0e-3,
                arm_spacing: 20.0e-3,
                strip_width: 4.8e-3,
                rhombus_diagonal: 36.0e-3,
                inductance: 36.0e-9,
                inductor_offset: 13.2e-3,
                feed_gap: 1.0e-3,
                n_pairs: 2,
            },
            RadiatorParams {
                arm_length: al2,
                arm_spacing: 14.0e-3,
                strip_width: 4.8e-3,
                rhombus_diagonal: 36.0e-3,
                inductance: 48.0e-9,
                inductor_offset: 0.276 * al2,
                feed_gap: 1.0e-3,
                n_pairs: 2,
            },
        ];
        let spec = HRadiatorSpec {
            rhombus_diagonal: 36.0e-3,
            feed_gap: Some(1.0e-3),
            strip_width: 4.8e-3,
        };
        let base = geometry::build_h_radiator(&pairs, &spec).unwrap();
        let mesh = geometry::discretize(&base, 3.0e9, 12).unwrap();
        let solver = ModeClassifier::new(mesh).unwrap();
        let l1 = ModeClass { pair: 0, order: ModeOrder::Fundamental };
        let r1 = ModeClass { pair: 1, order: ModeOrder::Fundamental };
        let (fl, ml) = solver.find_class_resonance(l1, 0.4e9, 1.45e9, 41).unwrap().unwrap();
        let (fr, mr) = solver.find_class_resonance(r1, 0.7e9, 1.9e9, 41).unwrap().unwrap();
        let dl = solver.mode_deviation(fl, &ml).unwrap();
        let dr = solver.mode_deviation(fr, &mr).unwrap();
        println!(
            "AL2={al2_mm}: L1 {:.4} GHz (dev {:.2}), R1 {:.4} GHz (dev {:.2}), sep {:.1}%",
            fl / 1e9, dl, fr / 1e9, dr,
            (fl - fr).abs() / fl.max(fr) * 100.0
        );
    }
}

fn imposed_u(h: f64, f: f64, bottom_sign: f64) -> (SegmentMesh, Vec<Complex64>) {
    let lambda = SPEED_OF_LIGHT / f;
    let k = 2.0 * std::f64::consts::PI / lambda;
    let radius = 1e-4 * lambda;
    let mut nodes = Vec::new();
    let mut segments = Vec::new();
    let mut currents = Vec::new();
    let n_arm = 48;
    let n_bot = 24;
    for (x, sign) in [(-h / 2.0, 1.0), (h / 2.0, -1.0)] {
        for s in 0..n_arm {
            let z0 = -lambda / 8.0 + lambda / 4.0 * s as f64 / n_arm as f64;
            let z1 = -lambda / 8.0 + lambda / 4.0 * (s + 1) as f64 / n_arm as f64;
            let a = nodes.len();
            nodes.push([x, 0.0, z0]);
            nodes.push([x, 0.0, z1]);
            segments.push(Segment { a, b: a + 1, radius, tag: WirePart::Wire });
            let zc = 0.5 * (z0 + z1);
            currents.push(Complex64::new(
                sign * (k * zc + std::f64::consts::FRAC_PI_4).cos(),
                0.0,
            ));
        }
    }
    for s in 0..n_bot {
        let x0 = -h / 2.0 + h * s as f64 / n_bot as f64;
        let x1 = -h / 2.0 + h * (s + 1) as f64 / n_bot as f64;
        let a = nodes.len();
        nodes.push([x0, 0.0, -lambda / 8.0]);
        nodes.push([x1, 0.0, -lambda / 8.0]);
        segments.push(Segment { a, b: a + 1, radius, tag: WirePart::Wire });
        currents.push(Complex64::new(bottom_sign, 0.0));
    }
    (SegmentMesh { nodes, segments, loads: vec![], port: None }, currents)
}

fn probe_analytic() {
    let f = 1.0e9;
    let lambda = SPEED_OF_LIGHT / f;
    for bottom_sign in [1.0, -1.0] {
        for h_over in [0.02f64, 0.05, 0.15] {
            let h = h_over * lambda;
            let (mesh, cur) = imposed_u(h, f, bottom_sign);
            let num = farfield::radiate(&mesh, &cur, f, GridSpec::default()).unwrap();
            let ana = farfield::analytic_u_pattern(h, f, GridSpec::default()).unwrap();
            let mut worst = 0.0f64;
            let mut wang = (0.0, 0.0);
            for (it, &th) in num.theta_deg.iter().enumerate() {
                for (ip, &ph) in num.phi_deg.iter().enumerate() {
                    let idx = num.index(it, ip);
                    let d = (num.directivity_dbi(idx) - ana.directivity_dbi(idx)).abs();
                    if d > worst {
                        worst = d;
                        wang = (th, ph);
                    }
                }
            }
            let nd = farfield::directivity_deviation(&num).deviation_db;
            let ad = farfield::directivity_deviation(&ana).deviation_db;
            println!(
                "bs={bottom_sign} h/l={h_over}: worst {:.3} dB at {:?}, dev num {:.3} ana {:.3}",
                worst, wang, nd, ad
            );
        }
    }
    // cut along theta at phi=0 for h=0.02, both signs
    let h = 0.02 * lambda;
    for bottom_sign in [1.0, -1.0] {
        let (mesh, cur) = imposed_u(h, f, bottom_sign);
        let num = farfield::radiate(&mesh, &cur, f, GridSpec::default()).unwrap();
        let ana = farfield::analytic_u_pattern(h, f, GridSpec::default()).unwrap();
        print!("bs={bottom_sign} phi=0 cut: ");
        for it in (0..num.theta_deg.len()).step_by(3) {
            let idx = num.index(it, 0);
            print!(
                "{:.0}:{:+.2} ",
                num.theta_deg[it],
                num.directivity_dbi(idx) - ana.directivity_dbi(idx)
            );
        }
        println!();
    }
}

fn main() {
    let which = std::env::args().nth(1).unwrap_or_default();
    match which.as_str() {
        "dipole" => probe_dipole(),
        "counter" => probe_counterexample(),
        "analytic" => probe_analytic(),
        _ => {
            probe_dipole();
            probe_counterexample();
            probe_analytic();
        }
    }
}
