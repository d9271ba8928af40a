//! Command-line front end.
//!
//! Every subcommand takes `--config <path>` plus any number of
//! `--section.key=value` overrides, see [`config`].

pub mod commands;
pub mod config;
pub mod output;
pub mod plot;

use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};

use crate::model::{Branch, ModelParams};
use commands::Ladder;
use config::{extract_overrides, ConfigMap, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "shearwave", version = output::VERSION, about = "Two-component shallow-water solver with constant vorticity")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate one configuration and write snapshots, diagnostics and run.json.
    Run {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Also emit SVG plots.
        #[arg(long)]
        plot: bool,
    },
    /// Print the derived coefficients with every constraint residual.
    Coefficients {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, allow_negative_numbers = true)]
        a: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        alpha: Option<f64>,
        #[arg(long)]
        branch: Option<Branch>,
        /// Append the a ∈ {1.5, 2, 2.5, 3} × α ∈ {0, 1} table.
        #[arg(long)]
        sweep: bool,
        /// Directory for coefficients.json.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run both formulations from identical data and compare velocities.
    Compare {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        plot: bool,
    },
    /// Spatial or temporal refinement study.
    Convergence {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = LadderArg::Temporal)]
        ladder: LadderArg,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum LadderArg {
    Spatial,
    Temporal,
    Both,
}

pub fn load_config(path: Option<&Path>, overrides: &[(String, String)]) -> crate::Result<RunConfig> {
    match path {
        Some(p) => RunConfig::load(p, overrides),
        None => {
            let mut map = ConfigMap::default();
            map.apply_overrides(overrides)?;
            RunConfig::from_map(&map, Path::new("."))
        }
    }
}

/// Entry point shared by the binary and the tests; returns the text printed on stdout.
pub fn run_cli(args: Vec<String>) -> anyhow::Result<String> {
    let (args, overrides) = extract_overrides(args);
    let cli = Cli::try_parse_from(args)?;
    let load = |p: &Option<PathBuf>| {
        load_config(p.as_deref(), &overrides).with_context(|| match p {
            Some(p) => format!("reading {}", p.display()),
            None => "building the default configuration".into(),
        })
    };
    match cli.command {
        Command::Run { config, plot } => {
            let cfg = load(&config)?;
            let report = commands::cmd_run(&cfg, plot)?;
            Ok(format!("{}\noutput: {}\n", report.metadata.summary, report.dir.display()))
        }
        Command::Coefficients { config, a, alpha, branch, sweep, out } => {
            let cfg = if config.is_some() || !overrides.is_empty() { Some(load(&config)?) } else { None };
            let base = cfg.as_ref().map_or(ModelParams::camassa_holm(), |c| c.params);
            let params = ModelParams::new(a.unwrap_or(base.a), alpha.unwrap_or(base.alpha), base.kappa)?;
            let branch = branch.or(cfg.as_ref().map(|c| c.branch)).unwrap_or_default();
            let (text, _) = commands::cmd_coefficients(&params, branch, sweep, out.as_deref())?;
            Ok(text)
        }
        Command::Compare { config, plot } => {
            let cfg = load(&config)?;
            let r = commands::cmd_compare(&cfg, plot)?;
            Ok(format!(
                "verdict: {:?}\nmax |u_E - u_L| = {:.3e} (threshold {:.1e})\neulerian: {:?}, lagrangian: {:?}\n",
                r.verdict, r.max_diff, r.threshold, r.eulerian_status, r.lagrangian_status
            ))
        }
        Command::Convergence { config, ladder } => {
            let cfg = load(&config)?;
            let ladders: &[Ladder] = match ladder {
                LadderArg::Spatial => &[Ladder::Spatial],
                LadderArg::Temporal => &[Ladder::Temporal],
                LadderArg::Both => &[Ladder::Spatial, Ladder::Temporal],
            };
            let mut text = String::new();
            for &l in ladders {
                let report = commands::cmd_convergence(&cfg, l)?;
                text.push_str(&format!("{l:?} ladder\n"));
                text.push_str(&commands::format_convergence(&report));
            }
            Ok(text)
        }
    }
}
