//! A single Eulerian run with adaptive steps, printing the diagnostics table.

use shearwave::timestepper::{Scheme, Simulation, StepControl};
use shearwave::{EulerianState, Field, FormulationKind, ModelParams, SpectralGrid};

fn main() -> shearwave::Result<()> {
    let grid = SpectralGrid::new(256)?;
    let params = ModelParams::new(3.0, 0.5, 1.0)?;
    let u = Field::from_fn(&grid, |x| 0.4 * x.cos() + 0.1 * (2.0 * x).sin());
    let rho = Field::from_fn(&grid, |x| 1.0 + 0.2 * x.cos());
    let initial = EulerianState::from_velocity(&u, rho, params.alpha)?;

    let control = StepControl { scheme: Scheme::Adaptive, dt: 1e-2, ..StepControl::default() };
    let outcome = Simulation::new(params, FormulationKind::Eulerian).run(&initial, 2.0, &control, 0.25)?;

    println!("{:?} at t = {} after {} steps ({} rejected)", outcome.status, outcome.t_final, outcome.steps_accepted, outcome.steps_rejected);
    println!("{:>6} {:>14} {:>14} {:>10} {:>10}", "t", "mean u", "casimir", "min rho", "max u_x");
    for d in &outcome.diagnostics {
        println!(
            "{:>6.2} {:>14.6e} {:>14.10} {:>10.6} {:>10.6}",
            d.t,
            d.mean_u,
            d.casimir.unwrap_or(f64::NAN),
            d.min_rho,
            d.max_ux
        );
    }
    Ok(())
}
