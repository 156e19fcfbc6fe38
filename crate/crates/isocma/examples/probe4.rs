//! Scratch diagnostics (not shipped).

use isocma::designer::{mode_tuning_u_params, ModeClass, ModeClassifier, ModeOrder};
use isocma::farfield::{self, GridSpec};
use isocma::geometry::{self, BottomStyle};

fn main() {
    let m1 = ModeClass { pair: 0, order: ModeOrder::Fundamental };
    for (label, ind) in [("unloaded", 0.0), ("loaded", 40.0e-9)] {
        let params = mode_tuning_u_params(ind);
        let base = geometry::build_u_radiator(&params, BottomStyle::RhombusSkeleton).unwrap();
        let mesh = geometry::discretize(&base, 4.0e9, 12).unwrap();
        let solver = ModeClassifier::new(mesh).unwrap();
        println!("{label}: has_mirror={}", solver.has_mirror());
        if let Some((f1, mm)) = solver.find_class_resonance(m1, 0.4e9, 1.6e9, 37).unwrap() {
            let dev = solver.mode_deviation(f1, &mm).unwrap();
            println!("  mode1 {:.4} GHz dev {:.2} dB", f1 / 1e9, dev);
            // pattern extremes
            let cur = solver.antisymmetric_part(&solver.segment_currents(&mm));
            let g = farfield::radiate(solver.mesh(), &cur, f1, GridSpec::default()).unwrap();
            let d = farfield::directivity_deviation(&g);
            println!("  d_max {:.2} dBi, d_min {:.2} dBi", d.d_max_dbi, d.d_min_dbi);
        } else {
            println!("  mode1 NOT FOUND");
        }
    }
}
