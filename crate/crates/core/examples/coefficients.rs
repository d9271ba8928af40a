//! Derived coefficients and constraint residuals across a small parameter sweep.

use shearwave::cli::commands::{coefficient_report, format_coefficient_table, format_residuals, SWEEP_A, SWEEP_ALPHA};
use shearwave::model::{Branch, ModelParams};

fn main() -> shearwave::Result<()> {
    let mut reports = Vec::new();
    for a in SWEEP_A {
        for alpha in SWEEP_ALPHA {
            reports.push(coefficient_report(&ModelParams::new(a, alpha, 1.0)?, Branch::Right)?);
        }
    }
    print!("{}", format_coefficient_table(&reports));

    // Left branch of the dispersion relation at a = 3, α = 1.
    let left = coefficient_report(&ModelParams::new(3.0, 1.0, 1.0)?, Branch::Left)?;
    print!("\n{}", format_residuals(&left));
    Ok(())
}
