//! Flow-map formulation: geodesic spray on `(Diff(S¹) ⋉ C^∞(S¹)) × ℝ`.
//!
//! The configuration is `(φ, f, s)` and the Lagrangian velocity is
//! `(v, σ, α) = (φ_t, f_t, s_t)`. The Eulerian fields are recovered as
//! `u = v ∘ φ⁻¹` and `ρ = σ ∘ φ⁻¹`.

use crate::error::Result;
use crate::eulerian::EulerianState;
use crate::model::ModelParams;
use crate::spectral::{
    ainv_d, compose, derivative, helmholtz_apply, helmholtz_invert, invert_diffeo, DiffeoMap,
    Field,
};

#[derive(Debug, Clone)]
pub struct LagrangianState {
    pub phi: DiffeoMap,
    pub f: Field,
    pub s: f64,
    pub v: Field,
    pub sigma: Field,
    pub alpha: f64,
}

/// Time derivative of a [`LagrangianState`]. `dphi` is the rate of the
/// displacement `φ − id`.
#[derive(Debug, Clone)]
pub struct LagrangianRate {
    pub dphi: Field,
    pub df: Field,
    pub ds: f64,
    pub dv: Field,
    pub dsigma: Field,
    pub dalpha: f64,
}

/// `(A⁻¹D)_φ w = [A⁻¹D (w ∘ φ⁻¹)] ∘ φ`, given `φ` and its inverse.
pub fn conjugated_ainv_d(phi: &DiffeoMap, phi_inv: &DiffeoMap, w: &Field) -> Result<Field> {
    let pulled = compose(w, phi_inv)?;
    compose(&ainv_d(&pulled), phi)
}

/// Right-hand side of the geodesic equations.
///
/// ```text
/// ∂_t (φ, f, s) = (v, σ, α)
/// v_t = ½ (A⁻¹D)_φ (2α v − κ σ² + (a − 3) v_x² / φ_x² − a v²)
/// σ_t = (1 − a) σ v_x / φ_x
/// α_t = 0
/// ```
///
/// Products are plain collocation products; `φ⁻¹` is recomputed on every call.
pub fn spray_rhs(state: &LagrangianState, params: &ModelParams) -> Result<LagrangianRate> {
    let ModelParams { a, kappa, .. } = *params;
    let alpha = state.alpha;
    let jac = state.phi.jacobian();
    state.phi.check_orientation()?;
    let vx = derivative(&state.v);

    let strain = vx.zip_map(&jac, |vx, j| vx / j);
    let w = state
        .v
        .zip_map(&state.sigma, |v, s| 2.0 * alpha * v - kappa * s * s - a * v * v)
        .zip_map(&strain, |w, e| w + (a - 3.0) * e * e);

    let phi_inv = invert_diffeo(&state.phi)?;
    let dv = conjugated_ainv_d(&state.phi, &phi_inv, &w)?.scale(0.5);
    let dsigma = state.sigma.zip_map(&strain, |s, e| (1.0 - a) * s * e);

    Ok(LagrangianRate {
        dphi: state.v.clone(),
        df: state.sigma.clone(),
        ds: alpha,
        dv,
        dsigma,
        dalpha: 0.0,
    })
}

/// `u = v ∘ φ⁻¹`, `ρ = σ ∘ φ⁻¹`, `m = Au`.
pub fn to_eulerian(state: &LagrangianState) -> Result<EulerianState> {
    let phi_inv = invert_diffeo(&state.phi)?;
    let u = compose(&state.v, &phi_inv)?;
    let rho = compose(&state.sigma, &phi_inv)?;
    EulerianState::new(helmholtz_apply(&u), rho, state.alpha)
}

/// Starts a flow map at the identity with the given Eulerian velocity.
pub fn from_eulerian(e: &EulerianState) -> LagrangianState {
    let grid = e.m.grid();
    LagrangianState {
        phi: DiffeoMap::identity(grid),
        f: Field::zeros(grid),
        s: 0.0,
        v: helmholtz_invert(&e.m),
        sigma: e.rho.clone(),
        alpha: e.alpha,
    }
}
