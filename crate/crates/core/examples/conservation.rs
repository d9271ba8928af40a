//! Drift of the conserved quantities over t ∈ [0, 1] for a few values of a.

use shearwave::timestepper::StepControl;
use shearwave::{EulerianState, Field, FormulationKind, ModelParams, SpectralGrid, Simulation};

fn drift(values: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = values.collect();
    v.iter().map(|x| (x - v[0]).abs()).fold(0.0, f64::max) / v[0].abs().max(1e-300)
}

fn main() -> shearwave::Result<()> {
    let grid = SpectralGrid::new(256)?;
    let u = Field::from_fn(&grid, |x| 0.5 * x.cos() + 0.2 * (2.0 * x).sin());
    let rho = Field::from_fn(&grid, |x| 1.0 + 0.3 * x.cos());
    println!("{:>4} {:>12} {:>12} {:>12}", "a", "energy", "mean u", "casimir");
    for a in [1.5, 2.0, 3.0] {
        let params = ModelParams::new(a, 0.0, 1.0)?;
        let initial = EulerianState::from_velocity(&u, rho.clone(), 0.0)?;
        let out = Simulation::new(params, FormulationKind::Eulerian).run(&initial, 1.0, &StepControl::default(), 0.1)?;
        let d = &out.diagnostics;
        let mean = d.iter().map(|r| (r.mean_u - d[0].mean_u).abs()).fold(0.0, f64::max);
        // Energy is only conserved at a = 2.
        let energy = if a == 2.0 { format!("{:.2e}", drift(d.iter().map(|r| r.energy_a2))) } else { "-".into() };
        println!("{a:>4} {energy:>12} {mean:>12.2e} {:>12.2e}", drift(d.iter().filter_map(|r| r.casimir)));
    }
    Ok(())
}
