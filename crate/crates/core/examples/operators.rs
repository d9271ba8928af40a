//! Fourier multipliers, dealiased products and composition with a diffeomorphism.

use shearwave::spectral::{
    ainv_d, ainv_d_factorized, compose, dealias, derivative, helmholtz_apply, helmholtz_invert, invert_diffeo,
    multiply_dealiased, DiffeoMap, Field, SpectralGrid,
};

fn main() -> shearwave::Result<()> {
    let grid = SpectralGrid::new(128)?;
    let u = Field::from_fn(&grid, |x| (x.sin()).exp());

    let m = helmholtz_apply(&u);
    println!("|A^-1 A u - u|          = {:.2e}", helmholtz_invert(&m).max_abs_diff(&u));
    println!("|A^-1 D u - factorised| = {:.2e}", ainv_d(&u).max_abs_diff(&ainv_d_factorized(&u)));

    let exact = Field::from_fn(&grid, |x| x.cos() * x.sin().exp());
    println!("|D u - exact|           = {:.2e}", derivative(&u).max_abs_diff(&exact));

    let sq = multiply_dealiased(&u, &u)?;
    println!("|P(u u) - P(u^2)|       = {:.2e}", sq.max_abs_diff(&dealias(&u.mul(&u))));

    let phi = DiffeoMap::from_displacement(Field::from_fn(&grid, |x| 0.3 * x.sin()));
    let phi_inv = invert_diffeo(&phi)?;
    let back = compose(&compose(&u, &phi)?, &phi_inv)?;
    println!("|u o phi o phi^-1 - u|  = {:.2e}", back.max_abs_diff(&u));
    println!("min phi_x               = {:.3}", phi.jacobian().min());
    Ok(())
}
