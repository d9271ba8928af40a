//! Randomised runs with a positive initial density; ρ never touches zero.

use shearwave::diagnostics::positivity_report;
use shearwave::model::InitialCondition;
use shearwave::timestepper::{RunStatus, StepControl};
use shearwave::{EulerianState, FormulationKind, ModelParams, SpectralGrid, Simulation};

fn main() -> shearwave::Result<()> {
    let grid = SpectralGrid::new(128)?;
    for seed in 0..8u64 {
        let a = 1.5 + 0.25 * seed as f64;
        let u = InitialCondition::RandomModes { max_mode: 6, amplitude: 0.3, seed }.build(&grid)?;
        let bump = InitialCondition::RandomModes { max_mode: 4, amplitude: 0.3, seed: seed + 100 }.build(&grid)?;
        let rho = bump.map(|v| 1.0 + v);
        let initial = EulerianState::from_velocity(&u, rho, 0.5)?;
        let params = ModelParams::new(a, 0.5, 1.0)?;
        let out = Simulation::new(params, FormulationKind::Eulerian).run(&initial, 1.0, &StepControl::default(), 0.1)?;
        let report = positivity_report(out.trajectory.iter().map(|s| (s.t, &s.state.rho)));
        let low = out.diagnostics.iter().map(|d| d.min_rho).fold(f64::INFINITY, f64::min);
        let done = if out.status == RunStatus::Completed { "completed" } else { "stopped" };
        println!("a = {a:.2}: {done}, preserved = {}, lowest min rho {low:.4}", report.preserved);
    }
    Ok(())
}
