//! Temporal and spatial refinement ladders.

use std::path::Path;

use shearwave::cli::commands::{convergence_study, format_convergence, Ladder};
use shearwave::cli::config::{ConfigMap, RunConfig};

fn main() -> anyhow::Result<()> {
    let map = ConfigMap::parse(include_str!("configs/gaussian.cfg"))?;
    let config = RunConfig::from_map(&map, Path::new("."))?;
    for ladder in [Ladder::Temporal, Ladder::Spatial] {
        println!("{ladder:?}");
        print!("{}", format_convergence(&convergence_study(&config, ladder)?));
    }
    Ok(())
}
