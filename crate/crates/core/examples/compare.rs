//! Eulerian and Lagrangian solvers from the same data, on a fine and a coarse grid.

use std::path::Path;

use shearwave::cli::commands::compare_runs;
use shearwave::cli::config::{ConfigMap, RunConfig};

fn main() -> anyhow::Result<()> {
    for (n, guard) in [("256", "1e-4"), ("32", "off")] {
        let mut map = ConfigMap::parse(
            "model.a = 3\nmodel.alpha = 1\ntime.t_final = 0.5\n\
             initial.u = cosine(1, 0.5) + gaussian(3, 0.4, 0.3)\ninitial.rho = constant(1) + sine(1, 0.2)\n",
        )?;
        map.set("grid.n", n)?;
        map.set("control.resolution_tol", guard)?;
        let report = compare_runs(&RunConfig::from_map(&map, Path::new("."))?)?;
        println!("n = {n:>3}: {:?}, max |u_E - u_L| = {:.2e}", report.verdict, report.max_diff);
    }
    Ok(())
}
