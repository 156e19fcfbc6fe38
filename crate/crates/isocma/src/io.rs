//! Artifact writers: Touchstone one-port files, plot-ready CSVs, and the
//! atomic `.partial`-then-rename write discipline used by the CLI.
//!
//! All writers are deterministic: a fixed input produces byte-identical
//! output, so downstream diffing and reproducibility checks are exact.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use num_complex::Complex64;

use crate::cma::ModeSweep;
use crate::error::{Error, Result};
use crate::farfield::FarFieldGrid;
use crate::feednet::PortState;
use crate::geometry::SegmentMesh;

/// Canonical float formatting for all CSV cells: round-trippable and
/// platform-independent.
fn cell(v: f64) -> String {
    format!("{v:.9e}")
}

/// Write `content` atomically: the bytes land at `path` only via a rename
/// from `path.partial`, so a crash never leaves a truncated artifact under
/// the final name.
pub fn write_atomic(path: &Path, content: &str) -> Result<()> {
    let mut partial = path.as_os_str().to_owned();
    partial.push(".partial");
    let partial = std::path::PathBuf::from(partial);
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    fs::write(&partial, content)?;
    fs::rename(&partial, path)?;
    Ok(())
}

/// Touchstone v1 one-port file (Hz, S-parameters, real/imaginary, 50-ohm
/// reference) from a driven S11 sweep.
pub fn touchstone_s1p(points: &[(f64, Complex64)], z0: f64) -> Result<String> {
    if points.is_empty() {
        return Err(Error::invalid_parameter("points", "must not be empty"));
    }
    if points.windows(2).any(|w| w[0].0 >= w[1].0) {
        return Err(Error::invalid_parameter(
            "points",
            "frequencies must be strictly ascending",
        ));
    }
    let mut out = String::new();
    writeln!(out, "! one-port reflection data").unwrap();
    writeln!(out, "# Hz S RI R {z0}").unwrap();
    for &(f, s) in points {
        writeln!(out, "{} {} {}", cell(f), cell(s.re), cell(s.im)).unwrap();
    }
    Ok(out)
}

/// Characteristic-angle sweep CSV: `f_Hz` then one `CA_track<k>_deg` column
/// per track, blank where a track is absent at that frequency.
pub fn ca_sweep_csv(sweep: &ModeSweep) -> String {
    let track_ids: Vec<u32> = sweep.tracks.keys().copied().collect();
    let mut out = String::from("f_Hz");
    for id in &track_ids {
        write!(out, ",CA_track{id}_deg").unwrap();
    }
    out.push('\n');
    for (fi, &f) in sweep.frequencies.iter().enumerate() {
        out.push_str(&cell(f));
        for id in &track_ids {
            out.push(',');
            if let Some(mi) = sweep.tracks[id][fi] {
                out.push_str(&cell(sweep.modes[fi][mi].characteristic_angle_deg));
            }
        }
        out.push('\n');
    }
    out
}

/// Eigencurrent dump keyed by segment center: `x_m,y_m,z_m,ReJ_A,ImJ_A`.
pub fn eigencurrent_csv(mesh: &SegmentMesh, currents: &[Complex64]) -> Result<String> {
    if currents.len() != mesh.segments.len() {
        return Err(Error::LengthMismatch {
            left: currents.len(),
            right: mesh.segments.len(),
        });
    }
    let mut out = String::from("x_m,y_m,z_m,ReJ_A,ImJ_A\n");
    for (si, j) in currents.iter().enumerate() {
        let c = mesh.segment_center(si);
        writeln!(
            out,
            "{},{},{},{},{}",
            cell(c[0]),
            cell(c[1]),
            cell(c[2]),
            cell(j.re),
            cell(j.im)
        )
        .unwrap();
    }
    Ok(out)
}

/// Far-field pattern CSV: `theta_deg,phi_deg,D_dBi,ReEtheta_V,ImEtheta_V,ReEphi_V,ImEphi_V`.
pub fn pattern_csv(grid: &FarFieldGrid) -> String {
    let mut out = String::from("theta_deg,phi_deg,D_dBi,ReEtheta_V,ImEtheta_V,ReEphi_V,ImEphi_V\n");
    for (it, &th) in grid.theta_deg.iter().enumerate() {
        for (ip, &ph) in grid.phi_deg.iter().enumerate() {
            let idx = grid.index(it, ip);
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                cell(th),
                cell(ph),
                cell(grid.directivity_dbi(idx)),
                cell(grid.e_theta[idx].re),
                cell(grid.e_theta[idx].im),
                cell(grid.e_phi[idx].re),
                cell(grid.e_phi[idx].im)
            )
            .unwrap();
        }
    }
    out
}

/// Deviation-vs-frequency plot data: `f_Hz,deviation_dB`.
pub fn deviation_csv(points: &[(f64, f64)]) -> String {
    let mut out = String::from("f_Hz,deviation_dB\n");
    for &(f, d) in points {
        writeln!(out, "{},{}", cell(f), cell(d)).unwrap();
    }
    out
}

/// Driven-sweep CSV: `f_Hz,ReZin_ohm,ImZin_ohm,S11_dB`.
pub fn drive_csv(states: &[PortState]) -> String {
    let mut out = String::from("f_Hz,ReZin_ohm,ImZin_ohm,S11_dB\n");
    for s in states {
        writeln!(
            out,
            "{},{},{},{}",
            cell(s.frequency),
            cell(s.zin.re),
            cell(s.zin.im),
            cell(s.s11_db)
        )
        .unwrap();
    }
    out
}

/// Matching-network sweep CSV with pre- and post-capacitor impedances:
/// `f_Hz,ReZin_ohm,ImZin_ohm,ReZin_post_ohm,ImZin_post_ohm,S11_dB`.
/// `S11_dB` is against the post-capacitor impedance.
pub fn matching_csv(rows: &[(f64, Complex64, Complex64, f64)]) -> String {
    let mut out = String::from("f_Hz,ReZin_ohm,ImZin_ohm,ReZin_post_ohm,ImZin_post_ohm,S11_dB\n");
    for &(f, pre, post, s11_db) in rows {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            cell(f),
            cell(pre.re),
            cell(pre.im),
            cell(post.re),
            cell(post.im),
            cell(s11_db)
        )
        .unwrap();
    }
    out
}

/// Constellation dump: `ReSym,ImSym` per received symbol.
pub fn constellation_csv(symbols: &[Complex64]) -> String {
    let mut out = String::from("ReSym,ImSym\n");
    for s in symbols {
        writeln!(out, "{},{}", cell(s.re), cell(s.im)).unwrap();
    }
    out
}

/// Link summary: `direction,SNR_dB,EVM_pct`.
pub fn link_summary_csv(rows: &[(String, f64, f64)]) -> String {
    let mut out = String::from("direction,SNR_dB,EVM_pct\n");
    for (dir, snr, evm) in rows {
        writeln!(out, "{dir},{},{}", cell(*snr), cell(*evm)).unwrap();
    }
    out
}

/// Optimizer evaluation-log CSV: `objective,<param names...>`.
pub fn design_log_csv(param_names: &[String], log: &[(f64, Vec<f64>)]) -> String {
    let mut out = String::from("objective");
    for n in param_names {
        write!(out, ",{n}").unwrap();
    }
    out.push('\n');
    for (obj, params) in log {
        out.push_str(&cell(*obj));
        for p in params {
            out.push(',');
            out.push_str(&cell(*p));
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry;

    #[test]
    fn touchstone_format() {
        let pts = vec![
            (1.0e9, Complex64::new(-0.5, 0.25)),
            (2.0e9, Complex64::new(0.1, -0.1)),
        ];
        let s = touchstone_s1p(&pts, 50.0).unwrap();
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[1], "# Hz S RI R 50");
        assert!(lines[2].starts_with("1.000000000e9 -5.000000000e-1 2.500000000e-1"));
        assert_eq!(lines.len(), 4);
        // unsorted input rejected
        let bad = vec![pts[1], pts[0]];
        assert!(touchstone_s1p(&bad, 50.0).is_err());
        assert!(touchstone_s1p(&[], 50.0).is_err());
    }

    #[test]
    fn csv_headers_and_shapes() {
        let mesh = geometry::build_dipole(0.1, 1e-3, 5).unwrap();
        let currents = vec![Complex64::new(1.0, 0.0); 5];
        let ec = eigencurrent_csv(&mesh, &currents).unwrap();
        assert!(ec.starts_with("x_m,y_m,z_m,ReJ_A,ImJ_A\n"));
        assert_eq!(ec.lines().count(), 6);
        assert!(eigencurrent_csv(&mesh, &currents[..3]).is_err());

        let dev = deviation_csv(&[(1e9, 3.0)]);
        assert_eq!(dev, "f_Hz,deviation_dB\n1.000000000e9,3.000000000e0\n");

        let cons = constellation_csv(&[Complex64::new(0.5, -0.5)]);
        assert_eq!(cons, "ReSym,ImSym\n5.000000000e-1,-5.000000000e-1\n");

        let sum = link_summary_csv(&[("+x".into(), 20.0, 10.0)]);
        assert!(sum.starts_with("direction,SNR_dB,EVM_pct\n+x,"));

        let log = design_log_csv(&["h1_m".into()], &[(0.5, vec![0.02])]);
        assert_eq!(log.lines().next().unwrap(), "objective,h1_m");
    }

    #[test]
    fn atomic_write_leaves_no_partial() {
        let dir = std::env::temp_dir().join("isocma-io-test");
        let path = dir.join("artifact.csv");
        write_atomic(&path, "a,b\n1,2\n").unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "a,b\n1,2\n");
        assert!(!dir.join("artifact.csv.partial").exists());
        // overwrite is atomic too
        write_atomic(&path, "a,b\n3,4\n").unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "a,b\n3,4\n");
        fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn writers_are_deterministic() {
        let rows = vec![(1e9, Complex64::new(40.0, 30.0), Complex64::new(40.0, -10.0), -7.5)];
        assert_eq!(matching_csv(&rows), matching_csv(&rows));
        let states = vec![crate::feednet::reflection(Complex64::new(75.0, 0.0), 50.0, 1e9).unwrap()];
        let d = drive_csv(&states);
        assert!(d.starts_with("f_Hz,ReZin_ohm,ImZin_ohm,S11_dB\n"));
        assert_eq!(d, drive_csv(&states));
    }
}
