//! Trace directories: one geometry file per snapshot plus `diagnostics.csv`.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use super::FlowTrace;
use crate::geometry::io::{read_geometry, write_geometry};
use crate::geometry::Geometry;
use crate::Result;

fn opt(x: Option<f64>) -> String {
    x.map_or(String::new(), |x| format!("{x:e}"))
}

/// Diagnostics table, one row per snapshot.
pub fn write_diagnostics<W: Write>(w: &mut W, trace: &FlowTrace) -> Result<()> {
    let mut header =
        vec!["t".to_string(), "steps".into(), "sup_a".into(), "sqrt_t_sup_a".into(), "expander_residual".into()];
    header.extend(trace.gaussian_labels.iter().cloned());
    header.extend((0..trace.barriers.len()).map(|k| format!("barrier_clearance_{k}")));
    writeln!(w, "{}", header.join(","))?;
    for s in &trace.snapshots {
        let mut row = vec![
            format!("{:e}", s.t),
            s.steps.to_string(),
            format!("{:e}", s.sup_a),
            format!("{:e}", s.scaled_sup_a),
            opt(s.expander_residual),
        ];
        row.extend(s.gaussian.iter().map(|g| opt(*g)));
        row.extend(s.barrier_clearance.iter().map(|c| opt(*c)));
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

/// Write `trace` into `dir` (created if missing).
pub fn write_trace_dir(trace: &FlowTrace, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    for (k, s) in trace.snapshots.iter().enumerate() {
        let mut w = BufWriter::new(File::create(dir.join(format!("snapshot_{k:05}.txt")))?);
        write_geometry(&mut w, &s.geometry, Some(s.t))?;
        w.flush()?;
    }
    let mut w = BufWriter::new(File::create(dir.join("diagnostics.csv"))?);
    write_diagnostics(&mut w, trace)?;
    if let Some(reason) = &trace.failure {
        fs::write(dir.join("failure.txt"), format!("{reason}\n"))?;
    }
    w.flush()?;
    Ok(())
}

/// Snapshots of a trace directory in time order.
pub fn read_trace_snapshots(dir: &Path) -> Result<Vec<(f64, Geometry)>> {
    let mut names: Vec<_> = fs::read_dir(dir)?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.starts_with("snapshot_")))
        .collect();
    names.sort();
    let mut out = Vec::with_capacity(names.len());
    for p in names {
        let (g, t) = read_geometry(BufReader::new(File::open(&p)?))?;
        out.push((t.unwrap_or(f64::NAN), g));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::{run_mcf, FlowConfig, GaussianObserver, Observers, SnapshotSchedule};
    use crate::geometry::{PolylineCurve, Vec2};

    #[test]
    fn trace_directory_round_trip() {
        let c = Geometry::Polyline(PolylineCurve::circle(Vec2::zeros(), 1.0, 64).unwrap());
        let cfg = FlowConfig::new(0.0, 0.1).with_snapshots(SnapshotSchedule::Times(vec![0.05, 0.1]));
        let obs = Observers::none().with_gaussian(GaussianObserver::Backward { center: Vec2::zeros(), t0: 0.5 });
        let tr = run_mcf(&c, &cfg, &obs).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_trace_dir(&tr, dir.path()).unwrap();
        let back = read_trace_snapshots(dir.path()).unwrap();
        assert_eq!(back.len(), 3);
        for ((t, g), s) in back.iter().zip(&tr.snapshots) {
            assert_eq!(*t, s.t);
            assert_eq!(g.points(), s.geometry.points());
        }
        let csv = fs::read_to_string(dir.path().join("diagnostics.csv")).unwrap();
        assert_eq!(csv.lines().count(), 4);
        assert!(csv.lines().next().unwrap().contains("F[0,0;t0=0.5]"));
    }
}
