//! Camassa–Holm data that steepens until the monitor stops the run, next to a
//! small-amplitude copy that does not.

use shearwave::cli::output::status_summary;
use shearwave::timestepper::StepControl;
use shearwave::{EulerianState, Field, FormulationKind, ModelParams, SpectralGrid, Simulation};

fn main() -> shearwave::Result<()> {
    let grid = SpectralGrid::new(256)?;
    let sim = Simulation::new(ModelParams::camassa_holm(), FormulationKind::Eulerian);
    for amplitude in [1.0, 1e-3] {
        let u = Field::from_fn(&grid, |x| -amplitude * x.sin());
        let initial = EulerianState::from_velocity(&u, Field::zeros(&grid), 0.0)?;
        let outcome = sim.run(&initial, 5.0, &StepControl::default(), 0.05)?;
        println!("amplitude {amplitude}: {}", status_summary(outcome.status, outcome.t_final, outcome.detection.as_ref()));
        for d in outcome.diagnostics.iter().rev().take(5).rev() {
            println!("  t = {:.3}  max |u_x| = {:.4}", d.t, d.max_ux);
        }
    }
    Ok(())
}
