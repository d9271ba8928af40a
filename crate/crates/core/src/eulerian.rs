//! Eulerian right-hand sides.
//!
//! Two algebraically equivalent routes are kept:
//!
//! ```text
//! m-form:  m_t = α u_x − a u_x m − u m_x − κ ρ ρ_x
//! u-form:  u_t = −u u_x + ½ A⁻¹D (2α u − κ ρ² + (a − 3) u_x² − a u²)
//! both:    ρ_t = −u ρ_x − (a − 1) u_x ρ
//! ```
//!
//! They agree because `[A, u] u_x = −3 u_x u_xx`. Every quadratic product is
//! dealiased on its own.

use crate::error::Result;
use crate::model::ModelParams;
use crate::spectral::{
    ainv_d, derivative, helmholtz_apply, helmholtz_invert, multiply_dealiased, Field,
};

/// Momentum `m = Au`, the density-like component `ρ`, and the constant vorticity.
#[derive(Debug, Clone)]
pub struct EulerianState {
    pub m: Field,
    pub rho: Field,
    pub alpha: f64,
}

impl EulerianState {
    pub fn new(m: Field, rho: Field, alpha: f64) -> Result<Self> {
        m.same_grid(&rho)?;
        Ok(Self { m, rho, alpha })
    }

    pub fn from_velocity(u: &Field, rho: Field, alpha: f64) -> Result<Self> {
        Self::new(helmholtz_apply(u), rho, alpha)
    }

    /// `u = A⁻¹ m`.
    pub fn velocity(&self) -> Field {
        helmholtz_invert(&self.m)
    }
}

/// Time derivative of an [`EulerianState`]; `α` has none.
#[derive(Debug, Clone)]
pub struct EulerianRate {
    pub dm: Field,
    pub drho: Field,
}

/// Which of the two equivalent right-hand sides drives the integration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RhsForm {
    MForm,
    #[default]
    UForm,
}

fn density_rate(u: &Field, ux: &Field, rho: &Field, a: f64) -> Result<Field> {
    let rhox = derivative(rho);
    let transport = multiply_dealiased(u, &rhox)?;
    let stretch = multiply_dealiased(ux, rho)?;
    Ok(transport.zip_map(&stretch, |t, s| -t - (a - 1.0) * s))
}

pub fn rhs_m_form(state: &EulerianState, params: &ModelParams) -> Result<EulerianRate> {
    let ModelParams { a, kappa, .. } = *params;
    let alpha = state.alpha;
    let u = state.velocity();
    let ux = derivative(&u);
    let mx = derivative(&state.m);
    let rhox = derivative(&state.rho);

    let ux_m = multiply_dealiased(&ux, &state.m)?;
    let u_mx = multiply_dealiased(&u, &mx)?;
    let rho_rhox = multiply_dealiased(&state.rho, &rhox)?;
    let dm = ux.scale(alpha).lincomb(&[(-a, &ux_m), (-1.0, &u_mx), (-kappa, &rho_rhox)]);
    let drho = density_rate(&u, &ux, &state.rho, a)?;
    Ok(EulerianRate { dm, drho })
}

/// `(u_t, ρ_t)` from the nonlocal velocity form.
pub fn rhs_u_form(u: &Field, rho: &Field, alpha: f64, params: &ModelParams) -> Result<(Field, Field)> {
    u.same_grid(rho)?;
    let ModelParams { a, kappa, .. } = *params;
    let ux = derivative(u);
    let rho_sq = multiply_dealiased(rho, rho)?;
    let ux_sq = multiply_dealiased(&ux, &ux)?;
    let u_sq = multiply_dealiased(u, u)?;
    // u u_x as ½ (u²)_x keeps the mean of u_t exactly zero
    let transport = derivative(&u_sq);
    let pressure = u
        .scale(2.0 * alpha)
        .lincomb(&[(-kappa, &rho_sq), (a - 3.0, &ux_sq), (-a, &u_sq)]);
    let du = ainv_d(&pressure).scale(0.5).lincomb(&[(-0.5, &transport)]);
    let drho = density_rate(u, &ux, rho, a)?;
    Ok((du, drho))
}

/// Evaluates the selected right-hand side in `(m, ρ)` variables.
pub fn rhs(state: &EulerianState, params: &ModelParams, form: RhsForm) -> Result<EulerianRate> {
    match form {
        RhsForm::MForm => rhs_m_form(state, params),
        RhsForm::UForm => {
            let (du, drho) = rhs_u_form(&state.velocity(), &state.rho, state.alpha, params)?;
            Ok(EulerianRate {
                dm: helmholtz_apply(&du),
                drho,
            })
        }
    }
}

/// `‖A(u_t) − m_t‖_∞ / (1 + ‖m_t‖_∞)` between the two routes.
pub fn forms_equivalent(u: &Field, rho: &Field, alpha: f64, params: &ModelParams) -> Result<f64> {
    let state = EulerianState::from_velocity(u, rho.clone(), alpha)?;
    let m_rate = rhs_m_form(&state, params)?;
    let (du, _) = rhs_u_form(u, rho, alpha, params)?;
    let dm_from_u = helmholtz_apply(&du);
    Ok(dm_from_u.max_abs_diff(&m_rate.dm) / (1.0 + m_rate.dm.max_abs()))
}
