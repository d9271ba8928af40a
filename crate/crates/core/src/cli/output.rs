//! Files written by the command-line front end.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::diagnostics::{DiagnosticsRecord, PositivityReport, DEFAULT_H_INDICES};
use crate::error::Result;
use crate::timestepper::{Detection, RunStatus, Snapshot};

/// `git describe` of the build tree, or the package version outside a checkout.
pub const VERSION: &str = env!("SHEARWAVE_VERSION");

pub const SNAPSHOT_HEADER: &str = "x,u,rho,m";
pub const DIAGNOSTICS_HEADER: &str = "t,energy_a2,mean_u,casimir,min_rho,max_ux,h0,h1,h2,lemma61_dev";

/// Writes through a sibling temporary file and renames it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    let result = (|| {
        let mut file = fs::File::create(&tmp)?;
        file.write_all(contents)?;
        file.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    Ok(result?)
}

pub fn snapshot_file_name(t: f64) -> String {
    format!("snap_{t:.6}.csv")
}

pub fn snapshot_csv(snapshot: &Snapshot) -> String {
    let state = &snapshot.state;
    let u = state.velocity();
    let mut out = String::with_capacity(80 * u.values().len());
    out.push_str(SNAPSHOT_HEADER);
    out.push('\n');
    let nodes = state.m.grid().nodes();
    for j in 0..nodes.len() {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            fmt_f64(nodes[j]),
            fmt_f64(u.values()[j]),
            fmt_f64(state.rho.values()[j]),
            fmt_f64(state.m.values()[j])
        );
    }
    out
}

/// Shortest round-trip text, in exponent form outside `[1e-4, 1e15)`.
pub fn fmt_f64(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || !v.is_finite() || (1e-4..1e15).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

fn num(v: Option<f64>) -> String {
    v.map_or_else(|| "NaN".into(), fmt_f64)
}

pub fn diagnostics_csv(records: &[DiagnosticsRecord]) -> String {
    let mut out = String::from(DIAGNOSTICS_HEADER);
    out.push('\n');
    for r in records {
        let h: Vec<String> = DEFAULT_H_INDICES.iter().map(|k| num(r.h_norms.get(k).copied())).collect();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            fmt_f64(r.t),
            fmt_f64(r.energy_a2),
            fmt_f64(r.mean_u),
            num(r.casimir),
            fmt_f64(r.min_rho),
            fmt_f64(r.max_ux),
            h.join(","),
            num(r.lemma61_deviation)
        );
    }
    out
}

/// Contents of `run.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub version: String,
    pub status: RunStatus,
    /// Human-readable verdict; detection reports a criterion, not a proof.
    pub summary: String,
    pub t_final: f64,
    pub wall_time_s: f64,
    pub detection: Option<Detection>,
    pub steps_accepted: usize,
    pub steps_rejected: usize,
    pub positivity: PositivityReport,
    pub config: BTreeMap<String, String>,
}

fn short_time(t: f64) -> String {
    let s = format!("{t:.6}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

pub fn status_summary(status: RunStatus, t_final: f64, detection: Option<&Detection>) -> String {
    let t_final = short_time(t_final);
    match (status, detection) {
        (RunStatus::Completed, _) => format!("completed at t = {t_final}"),
        (RunStatus::MeshDegenerate, _) => format!("flow map degenerate at t = {t_final}"),
        (RunStatus::BlowupDetected, Some(d)) => {
            let why = match d {
                Detection::GradientThreshold { max_ux } => format!("max |u_x| = {max_ux:.3e} above threshold"),
                Detection::StepCollapse { dt } => format!("step size {dt:.3e} below dt_min"),
                Detection::ResolutionLoss { tail_fraction } => {
                    format!("u_x spectral tail {tail_fraction:.3e} above tolerance")
                }
                Detection::NonFinite => "non-finite velocity gradient".into(),
                Detection::MeshDegenerate { min_jacobian } => format!("min phi_x = {min_jacobian:.3e}"),
            };
            format!("blow-up criterion exceeded at t = {t_final}: {why}")
        }
        (RunStatus::BlowupDetected, None) => format!("blow-up criterion exceeded at t = {t_final}"),
    }
}

/// Writes snapshots and the diagnostics table; returns the snapshot paths.
pub fn write_trajectory(dir: &Path, trajectory: &[Snapshot], records: &[DiagnosticsRecord]) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut paths = Vec::with_capacity(trajectory.len());
    for snap in trajectory {
        let path = dir.join(snapshot_file_name(snap.t));
        write_atomic(&path, snapshot_csv(snap).as_bytes())?;
        paths.push(path);
    }
    write_atomic(&dir.join("diagnostics.csv"), diagnostics_csv(records).as_bytes())?;
    Ok(paths)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

pub fn read_metadata(path: &Path) -> Result<RunMetadata> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eulerian::EulerianState;
    use crate::spectral::{Field, SpectralGrid};

    #[test]
    fn atomic_write_replaces_contents() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.txt");
        write_atomic(&path, b"one").unwrap();
        write_atomic(&path, b"two").unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "two");
        let names: Vec<_> = fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
        assert_eq!(names.len(), 1);
    }

    #[test]
    fn snapshot_schema() {
        let g = SpectralGrid::new(8).unwrap();
        let state = EulerianState::from_velocity(&Field::from_fn(&g, f64::cos), Field::constant(&g, 1.0), 0.0).unwrap();
        let csv = snapshot_csv(&Snapshot { t: 0.25, state });
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some(SNAPSHOT_HEADER));
        assert_eq!(lines.clone().count(), 8);
        assert!(lines.all(|l| l.split(',').count() == 4));
        assert_eq!(snapshot_file_name(0.25), "snap_0.250000.csv");
    }

    #[test]
    fn undefined_diagnostics_are_nan() {
        let g = SpectralGrid::new(8).unwrap();
        let state = EulerianState::from_velocity(&Field::zeros(&g), Field::zeros(&g), 0.0).unwrap();
        let rec = DiagnosticsRecord::evaluate(0.0, &state, 2.0, 1.0, None);
        let csv = diagnostics_csv(&[rec]);
        let row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
        assert_eq!(row.len(), 10);
        assert_eq!(row[3], "NaN");
        assert_eq!(row[9], "NaN");
    }

    #[test]
    fn number_format_round_trips() {
        for v in [0.0, 1.0, -2.5e-17, std::f64::consts::TAU, 1e300, 3e-4] {
            assert_eq!(fmt_f64(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(fmt_f64(4.5e-17), "4.5e-17");
    }
}
