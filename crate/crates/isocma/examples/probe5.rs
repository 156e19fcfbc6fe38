//! Scratch diagnostics (not shipped).

use isocma::farfield::{self, GridSpec};
use isocma::feednet;
use isocma::geometry::{self, HRadiatorSpec, RadiatorParams};
use isocma::mom;

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
        feed_gap: Some(s * 1.0e-3),
        strip_width: s * 4.8e-3,
    };
    let base = geometry::build_h_radiator(&pairs, &spec).unwrap();
    let mesh = geometry::discretize(&base, 2.9e9, 12).unwrap();
    let cap = 2.18e-12;
    let mut dips: Vec<(f64, f64)> = Vec::new();
    let mut prev: Option<(f64, f64)> = None;
    let mut prev2: Option<(f64, f64)> = None;
    for k in 0..141 {
        let f = 0.4e9 + (2.9e9 - 0.4e9) * k as f64 / 140.0;
        let z = mom::assemble(&mesh, f).unwrap();
        let z = mom::apply_loads(&z, &mesh).unwrap();
        let sol = mom::solve_driven(&z, mesh.port.as_ref().unwrap().segment, 1.0, 50.0).unwrap();
        let post = feednet::series_capacitor(sol.zin, cap, f).unwrap();
        let s11 = feednet::reflection(post, 50.0, f).unwrap().s11_db;
        if let (Some((fp, sp)), Some((_, sp2))) = (prev, prev2) {
            if sp < sp2 && sp < s11 && sp < -3.0 {
                dips.push((fp, sp));
            }
        }
        prev2 = prev;
        prev = Some((f, s11));
    }
    for f in [0.893e9f64, 1.107e9, 1.623e9, 2.277e9] {
        let z = mom::assemble(&mesh, f).unwrap();
        let z = mom::apply_loads(&z, &mesh).unwrap();
        let sol = mom::solve_driven(&z, mesh.port.as_ref().unwrap().segment, 1.0, 50.0).unwrap();
        let xc = 1.0 / (2.0 * std::f64::consts::PI * f * cap);
        println!(
            "crossing {:.3} GHz: Zin = {:.1} {:+.1}j (cap needs +{:.1}j)",
            f / 1e9,
            sol.zin.re,
            sol.zin.im,
            xc
        );
    }
    for t in [868.0e6f64, 1176.0e6, 1575.0e6, 2450.0e6] {
        let mut best = (0.0f64, f64::INFINITY);
        for k in 0..61 {
            let f = 0.9 * t + 0.2 * t * k as f64 / 60.0;
            let z = mom::assemble(&mesh, f).unwrap();
            let z = mom::apply_loads(&z, &mesh).unwrap();
            let sol = mom::solve_driven(&z, mesh.port.as_ref().unwrap().segment, 1.0, 50.0).unwrap();
            let post = feednet::series_capacitor(sol.zin, cap, f).unwrap();
            let s11 = feednet::reflection(post, 50.0, f).unwrap().s11_db;
            if s11 < best.1 {
                best = (f, s11);
            }
        }
        println!("band {:.0} MHz: best S11 {:.2} dB at {:.4} GHz", t / 1e6, best.1, best.0 / 1e9);
    }
    println!("S11 dips (<-3 dB local minima):");
    for (f, sv) in &dips {
        let z = mom::assemble(&mesh, *f).unwrap();
        let z = mom::apply_loads(&z, &mesh).unwrap();
        let sol = mom::solve_driven(&z, mesh.port.as_ref().unwrap().segment, 1.0, 50.0).unwrap();
        let cur = sol.segment_currents(&z.basis, mesh.segments.len());
        let grid = farfield::radiate(&mesh, &cur, *f, GridSpec::default()).unwrap();
        let dev = farfield::directivity_deviation(&grid).deviation_db;
        println!("  f = {:.4} GHz, S11 = {:.2} dB, driven deviation {:.2} dB", f / 1e9, sv, dev);
    }
}
