//! `run`, `coefficients`, `compare` and `convergence`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use super::output::{self, RunMetadata};
use super::plot::{line_plot, Series};
use crate::diagnostics::positivity_report;
use crate::error::Result;
use crate::eulerian::EulerianState;
use crate::model::{derive_coefficients, m1p_variants, Branch, ConstraintResiduals, DerivedCoefficients, ModelParams, QuadraticConstraintResiduals};
use crate::spectral::{Field, SpectralGrid};
use crate::timestepper::{FormulationKind, RunOutcome, RunStatus, Scheme, Simulation};

pub fn initial_state(config: &RunConfig, grid: &Arc<SpectralGrid>) -> Result<EulerianState> {
    let u = config.initial_u.build(grid)?;
    let rho = config.initial_rho.build(grid)?;
    EulerianState::from_velocity(&u, rho, config.params.alpha)
}

pub fn simulation(config: &RunConfig) -> Simulation {
    Simulation {
        params: config.params,
        formulation: config.formulation,
        form: config.rhs_form,
        track_flowmap: config.track_flowmap,
    }
}

/// Runs the configured simulation without writing anything.
pub fn execute(config: &RunConfig) -> Result<RunOutcome> {
    let grid = SpectralGrid::new(config.grid_n)?;
    let initial = initial_state(config, &grid)?;
    simulation(config).run(&initial, config.t_final, &config.control, config.snapshot_every)
}

#[derive(Debug)]
pub struct RunReport {
    pub outcome: RunOutcome,
    pub metadata: RunMetadata,
    pub dir: PathBuf,
}

pub fn cmd_run(config: &RunConfig, plot: bool) -> Result<RunReport> {
    let started = Instant::now();
    let outcome = execute(config)?;
    let wall = started.elapsed().as_secs_f64();
    let dir = config.output_dir.clone();

    output::write_trajectory(&dir, &outcome.trajectory, &outcome.diagnostics)?;
    let positivity = positivity_report(outcome.trajectory.iter().map(|s| (s.t, &s.state.rho)));
    let metadata = RunMetadata {
        version: output::VERSION.to_string(),
        status: outcome.status,
        summary: output::status_summary(outcome.status, outcome.t_final, outcome.detection.as_ref()),
        t_final: outcome.t_final,
        wall_time_s: wall,
        detection: outcome.detection,
        steps_accepted: outcome.steps_accepted,
        steps_rejected: outcome.steps_rejected,
        positivity,
        config: config.echo(),
    };
    output::write_json(&dir.join("run.json"), &metadata)?;
    if plot {
        write_run_plots(&dir, &outcome)?;
    }
    Ok(RunReport { outcome, metadata, dir })
}

const MAX_WATERFALL_LINES: usize = 40;

fn write_run_plots(dir: &Path, outcome: &RunOutcome) -> Result<()> {
    let traj = &outcome.trajectory;
    let stride = traj.len().div_ceil(MAX_WATERFALL_LINES).max(1);
    let picked: Vec<_> = traj.iter().step_by(stride).collect();
    let velocities: Vec<Field> = picked.iter().map(|s| s.state.velocity()).collect();
    let spread = velocities.iter().map(|u| u.max() - u.min()).fold(0.0, f64::max).max(1e-12);
    let nodes = traj[0].state.m.grid().nodes();
    let series: Vec<Series> = picked
        .iter()
        .zip(&velocities)
        .enumerate()
        .map(|(i, (snap, u))| Series {
            label: format!("t = {:.3}", snap.t),
            x: nodes,
            y: u.values().iter().map(|v| v + 0.25 * spread * i as f64).collect(),
        })
        .collect();
    output::write_atomic(
        &dir.join("waterfall.svg"),
        line_plot("u(x, t), offset by snapshot", "x", &series, false).as_bytes(),
    )?;

    let t: Vec<f64> = outcome.diagnostics.iter().map(|d| d.t).collect();
    let normalise = |f: &dyn Fn(&crate::diagnostics::DiagnosticsRecord) -> f64| {
        let first = f(&outcome.diagnostics[0]);
        let scale = if first.abs() > 0.0 { first.abs() } else { 1.0 };
        outcome.diagnostics.iter().map(|d| f(d) / scale).collect::<Vec<_>>()
    };
    let series = vec![
        Series { label: "max |u_x|".into(), x: &t, y: normalise(&|d| d.max_ux) },
        Series { label: "min rho".into(), x: &t, y: normalise(&|d| d.min_rho) },
        Series { label: "energy (a=2)".into(), x: &t, y: normalise(&|d| d.energy_a2) },
        Series { label: "H1 pair".into(), x: &t, y: normalise(&|d| d.h_norms.get(&1).copied().unwrap_or(f64::NAN)) },
    ];
    output::write_atomic(
        &dir.join("diagnostics.svg"),
        line_plot("diagnostics relative to t = 0", "t", &series, false).as_bytes(),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientReport {
    pub params: ModelParams,
    pub branch: Branch,
    pub coefficients: DerivedCoefficients,
    pub residuals: ConstraintResiduals,
    /// Both printed forms of the quadratic condition; reported, not asserted.
    pub quadratic: QuadraticConstraintResiduals,
}

pub fn coefficient_report(params: &ModelParams, branch: Branch) -> Result<CoefficientReport> {
    let coefficients = derive_coefficients(params, branch)?;
    Ok(CoefficientReport {
        params: *params,
        branch,
        coefficients,
        residuals: coefficients.residuals(params),
        quadratic: m1p_variants(&coefficients, params),
    })
}

pub const SWEEP_A: [f64; 4] = [1.5, 2.0, 2.5, 3.0];
pub const SWEEP_ALPHA: [f64; 2] = [0.0, 1.0];

pub fn format_coefficient_table(reports: &[CoefficientReport]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:>6} {:>6} {:>6} {:>10} {:>10} {:>10} {:>10} {:>10} {:>10} {:>9} {:>9} {:>9}",
        "a", "alpha", "branch", "c", "k1", "k2", "k3", "k0", "beta0^2", "max_res", "quad_2x", "quad_1x"
    );
    for r in reports {
        let c = &r.coefficients;
        let _ = writeln!(
            out,
            "{:>6} {:>6} {:>6} {:>10.6} {:>10.6} {:>10.6} {:>10.6} {:>10.6} {:>10.6} {:>9.1e} {:>9.1e} {:>9.1e}",
            r.params.a,
            r.params.alpha,
            r.branch.to_string(),
            c.c,
            c.k1,
            c.k2,
            c.k3,
            c.k0,
            c.beta0_sq,
            r.residuals.max(),
            r.quadratic.doubled.abs(),
            r.quadratic.single.abs()
        );
    }
    out
}

pub fn format_residuals(r: &CoefficientReport) -> String {
    let res = &r.residuals;
    let rows = [
        ("burns", res.burns),
        ("dispersion", res.dispersion),
        ("rho_closure", res.rho_closure),
        ("m_dispersion", res.m_dispersion),
        ("beta0", res.beta0),
        ("beta0_dual", res.beta0_dual),
        ("quadratic (2(a-2)k1 form)", r.quadratic.doubled),
        ("quadratic ((a-2)k1 form)", r.quadratic.single),
    ];
    rows.iter().map(|(name, v)| format!("  {name:<28} {v:.3e}\n")).collect()
}

/// Table for the requested parameters, optionally followed by the sweep.
pub fn cmd_coefficients(
    params: &ModelParams,
    branch: Branch,
    sweep: bool,
    out_dir: Option<&Path>,
) -> Result<(String, Vec<CoefficientReport>)> {
    let main = coefficient_report(params, branch)?;
    let mut text = format_coefficient_table(std::slice::from_ref(&main));
    text.push_str("residuals:\n");
    text.push_str(&format_residuals(&main));
    let mut reports = vec![main];
    if sweep {
        let swept: Vec<CoefficientReport> = SWEEP_A
            .iter()
            .flat_map(|&a| SWEEP_ALPHA.iter().map(move |&alpha| (a, alpha)))
            .map(|(a, alpha)| coefficient_report(&ModelParams::new(a, alpha, params.kappa)?, branch))
            .collect::<Result<_>>()?;
        text.push_str("\nsweep:\n");
        text.push_str(&format_coefficient_table(&swept));
        reports.extend(swept);
    }
    if let Some(dir) = out_dir {
        output::write_json(&dir.join("coefficients.json"), &reports)?;
    }
    Ok((text, reports))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    /// One of the runs stopped before the final time.
    Incomplete,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub verdict: Verdict,
    pub threshold: f64,
    pub max_diff: f64,
    pub final_diff: f64,
    pub eulerian_status: RunStatus,
    pub lagrangian_status: RunStatus,
    /// `(t, ‖u_euler − u_lagr‖_∞)` at the common snapshots.
    pub trace: Vec<(f64, f64)>,
}

/// Runs both formulations from the same data and compares velocities.
pub fn compare_runs(config: &RunConfig) -> Result<CompareReport> {
    let mut eul_cfg = config.clone();
    eul_cfg.formulation = FormulationKind::Eulerian;
    let mut lag_cfg = config.clone();
    lag_cfg.formulation = FormulationKind::Lagrangian;
    let (e, l) = rayon::join(|| execute(&eul_cfg), || execute(&lag_cfg));
    let (e, l) = (e?, l?);
    let trace: Vec<(f64, f64)> = e
        .trajectory
        .iter()
        .zip(&l.trajectory)
        .take_while(|(a, b)| a.t == b.t)
        .map(|(a, b)| (a.t, a.state.velocity().max_abs_diff(&b.state.velocity())))
        .collect();
    let max_diff = trace.iter().map(|p| p.1).fold(0.0, f64::max);
    let final_diff = trace.last().map_or(f64::NAN, |p| p.1);
    let verdict = if e.status != RunStatus::Completed || l.status != RunStatus::Completed {
        Verdict::Incomplete
    } else if max_diff <= config.compare_threshold {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(CompareReport {
        verdict,
        threshold: config.compare_threshold,
        max_diff,
        final_diff,
        eulerian_status: e.status,
        lagrangian_status: l.status,
        trace,
    })
}

pub fn cmd_compare(config: &RunConfig, plot: bool) -> Result<CompareReport> {
    let report = compare_runs(config)?;
    let dir = &config.output_dir;
    let mut csv = String::from("t,diff_u_inf\n");
    for (t, d) in &report.trace {
        let _ = writeln!(csv, "{},{}", output::fmt_f64(*t), output::fmt_f64(*d));
    }
    output::write_atomic(&dir.join("compare.csv"), csv.as_bytes())?;
    output::write_json(
        &dir.join("compare.json"),
        &serde_json::json!({
            "version": output::VERSION,
            "report": &report,
            "config": config.echo(),
        }),
    )?;
    if plot {
        let t: Vec<f64> = report.trace.iter().map(|p| p.0).collect();
        let series = [Series { label: "|u_E - u_L|".into(), x: &t, y: report.trace.iter().map(|p| p.1).collect() }];
        output::write_atomic(
            &dir.join("compare.svg"),
            line_plot("Eulerian vs Lagrangian velocity", "t", &series, true).as_bytes(),
        )?;
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ladder {
    Spatial,
    Temporal,
}

pub const SPATIAL_LADDER: [usize; 4] = [64, 128, 256, 512];
pub const SPATIAL_REFERENCE: usize = 1024;
pub const TEMPORAL_LADDER: [f64; 4] = [4e-3, 2e-3, 1e-3, 5e-4];
pub const TEMPORAL_REFERENCE: f64 = 1e-4;
pub const TEMPORAL_T: f64 = 0.1;
/// Errors below `ROUNDOFF_FLOOR · max(1, ‖u_ref‖_∞)` count as converged.
pub const ROUNDOFF_FLOOR: f64 = 1e-13;
pub const SPATIAL_MIN_RATIO: f64 = 10.0;
pub const TEMPORAL_SLOPE_TOL: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    /// `n` for the spatial ladder, `dt` for the temporal one.
    pub level: f64,
    pub error: f64,
    /// Error of the previous rung over this one.
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub ladder: Ladder,
    pub rows: Vec<ConvergenceRow>,
    pub floor: f64,
    /// Least-squares slope of `log error` against `log dt` above the floor.
    pub slope: Option<f64>,
    pub passed: bool,
}

fn final_velocity(config: &RunConfig) -> Result<Field> {
    let outcome = execute(config)?;
    if outcome.status != RunStatus::Completed {
        return Err(crate::error::Error::InvalidParameter(format!(
            "convergence run with n = {}, dt = {} stopped early: {}",
            config.grid_n,
            config.control.dt,
            output::status_summary(outcome.status, outcome.t_final, outcome.detection.as_ref())
        )));
    }
    Ok(outcome.final_snapshot().state.velocity())
}

fn with_ratios(levels: &[f64], errors: &[f64]) -> Vec<ConvergenceRow> {
    levels
        .iter()
        .zip(errors)
        .enumerate()
        .map(|(i, (&level, &error))| ConvergenceRow {
            level,
            error,
            ratio: (i > 0).then(|| errors[i - 1] / error),
        })
        .collect()
}

pub fn least_squares_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() < 2 {
        return None;
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

pub fn convergence_study(config: &RunConfig, ladder: Ladder) -> Result<ConvergenceReport> {
    let mut base = config.clone();
    base.control.resolution_tol = None;
    match ladder {
        Ladder::Spatial => {
            base.snapshot_every = base.t_final;
            let runs: Vec<Result<Field>> = SPATIAL_LADDER
                .iter()
                .chain(std::iter::once(&SPATIAL_REFERENCE))
                .collect::<Vec<_>>()
                .par_iter()
                .map(|&&n| {
                    let mut c = base.clone();
                    c.grid_n = n;
                    final_velocity(&c)
                })
                .collect();
            let mut runs = runs.into_iter().collect::<Result<Vec<_>>>()?;
            let reference = runs.pop().expect("reference run");
            let floor = ROUNDOFF_FLOOR * reference.max_abs().max(1.0);
            let errors: Vec<f64> = runs
                .iter()
                .map(|u| {
                    let stride = SPATIAL_REFERENCE / u.grid().n();
                    u.values()
                        .iter()
                        .enumerate()
                        .map(|(j, v)| (v - reference.values()[j * stride]).abs())
                        .fold(0.0, f64::max)
                })
                .collect();
            let passed = errors
                .windows(2)
                .all(|w| w[0] <= floor || w[1] <= (w[0] / SPATIAL_MIN_RATIO).max(floor));
            let levels: Vec<f64> = SPATIAL_LADDER.iter().map(|&n| n as f64).collect();
            Ok(ConvergenceReport { ladder, rows: with_ratios(&levels, &errors), floor, slope: None, passed })
        }
        Ladder::Temporal => {
            base.t_final = TEMPORAL_T;
            base.snapshot_every = TEMPORAL_T;
            base.control.scheme = Scheme::Rk4;
            base.control.dt_min = base.control.dt_min.min(TEMPORAL_REFERENCE);
            let runs: Vec<Result<Field>> = TEMPORAL_LADDER
                .iter()
                .chain(std::iter::once(&TEMPORAL_REFERENCE))
                .collect::<Vec<_>>()
                .par_iter()
                .map(|&&dt| {
                    let mut c = base.clone();
                    c.control.dt = dt;
                    final_velocity(&c)
                })
                .collect();
            let mut runs = runs.into_iter().collect::<Result<Vec<_>>>()?;
            let reference = runs.pop().expect("reference run");
            let floor = ROUNDOFF_FLOOR * reference.max_abs().max(1.0);
            let errors: Vec<f64> = runs.iter().map(|u| u.max_abs_diff(&reference)).collect();
            let (xs, ys): (Vec<f64>, Vec<f64>) = TEMPORAL_LADDER
                .iter()
                .zip(&errors)
                .filter(|(_, &e)| e > floor)
                .map(|(dt, e)| (dt.ln(), e.ln()))
                .unzip();
            let slope = least_squares_slope(&xs, &ys);
            let passed = slope.is_some_and(|s| (s - 4.0).abs() <= TEMPORAL_SLOPE_TOL);
            Ok(ConvergenceReport {
                ladder,
                rows: with_ratios(&TEMPORAL_LADDER, &errors),
                floor,
                slope,
                passed,
            })
        }
    }
}

pub fn format_convergence(report: &ConvergenceReport) -> String {
    let mut out = String::new();
    let label = match report.ladder {
        Ladder::Spatial => "n",
        Ladder::Temporal => "dt",
    };
    let _ = writeln!(out, "{label:>8} {:>12} {:>10}", "error", "ratio");
    for r in &report.rows {
        let ratio = r.ratio.map_or("-".to_string(), |q| format!("{q:.2}"));
        let _ = writeln!(out, "{:>8} {:>12.3e} {ratio:>10}", r.level, r.error);
    }
    if let Some(s) = report.slope {
        let _ = writeln!(out, "slope {s:.3}");
    }
    let _ = writeln!(out, "floor {:.1e}, {}", report.floor, if report.passed { "pass" } else { "fail" });
    out
}

pub fn cmd_convergence(config: &RunConfig, ladder: Ladder) -> Result<ConvergenceReport> {
    let report = convergence_study(config, ladder)?;
    let name = match ladder {
        Ladder::Spatial => "spatial",
        Ladder::Temporal => "temporal",
    };
    let mut csv = String::from("level,error,ratio\n");
    for r in &report.rows {
        let ratio = r.ratio.map_or("NaN".into(), output::fmt_f64);
        let _ = writeln!(csv, "{},{},{ratio}", r.level, output::fmt_f64(r.error));
    }
    let dir = &config.output_dir;
    output::write_atomic(&dir.join(format!("convergence_{name}.csv")), csv.as_bytes())?;
    output::write_json(
        &dir.join(format!("convergence_{name}.json")),
        &serde_json::json!({ "version": output::VERSION, "report": &report, "config": config.echo() }),
    )?;
    Ok(report)
}
