//! Time integration over either formulation, with the blow-up monitor.
//!
//! Global existence holds as long as `‖u_x‖_∞` stays bounded on bounded time
//! intervals; the monitor watches that quantity after every accepted step and
//! stops the run when it exceeds the configured threshold, when the adaptive
//! step collapses, or when the velocity gradient is no longer resolved by the
//! grid. A stop means the criterion was exceeded, not that a singularity has
//! been proven.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::diagnostics::{flowmap_invariant, lemma61_invariant, DiagnosticsRecord};
use crate::error::{Error, Result};
use crate::eulerian::{self, EulerianRate, EulerianState, RhsForm};
use crate::lagrangian::{self, LagrangianRate, LagrangianState};
use crate::model::ModelParams;
use crate::spectral::{compose, dealias, derivative, helmholtz_apply, DiffeoMap, Field, SpectralGrid};

/// Runs stop as mesh-degenerate once `min φ_x` falls below this.
pub const MESH_DEGENERACY_THRESHOLD: f64 = 1e-3;

/// Vector-space structure needed by the Runge–Kutta schemes.
pub trait OdeState: Clone + Send + Sync {
    type Rate: Send + Sync;

    /// `self + Σ cᵢ kᵢ`. Constant components are copied unchanged.
    fn advance(&self, terms: &[(f64, &Self::Rate)]) -> Self;

    /// Error-control norm of `Σ cᵢ kᵢ`.
    fn rate_norm(&self, terms: &[(f64, &Self::Rate)]) -> f64;

    /// Error-control norm of the state itself.
    fn state_norm(&self) -> f64;
}

/// `‖m‖_{L²} + ‖ρ‖_{H¹}`.
fn momentum_density_norm(m: &Field, rho: &Field) -> f64 {
    m.sobolev_norm_sq(0.0).sqrt() + rho.sobolev_norm_sq(1.0).sqrt()
}

fn combine<'a>(base: &Field, terms: impl Iterator<Item = (f64, &'a Field)>) -> Field {
    let terms: Vec<(f64, &Field)> = terms.collect();
    base.lincomb(&terms)
}

fn sum_rates<'a>(grid: &Arc<SpectralGrid>, terms: impl Iterator<Item = (f64, &'a Field)>) -> Field {
    combine(&Field::zeros(grid), terms)
}

impl OdeState for EulerianState {
    type Rate = EulerianRate;

    fn advance(&self, terms: &[(f64, &EulerianRate)]) -> Self {
        Self {
            m: combine(&self.m, terms.iter().map(|(c, k)| (*c, &k.dm))),
            rho: combine(&self.rho, terms.iter().map(|(c, k)| (*c, &k.drho))),
            alpha: self.alpha,
        }
    }

    fn rate_norm(&self, terms: &[(f64, &EulerianRate)]) -> f64 {
        let grid = self.m.grid();
        let dm = sum_rates(grid, terms.iter().map(|(c, k)| (*c, &k.dm)));
        let drho = sum_rates(grid, terms.iter().map(|(c, k)| (*c, &k.drho)));
        momentum_density_norm(&dm, &drho)
    }

    fn state_norm(&self) -> f64 {
        momentum_density_norm(&self.m, &self.rho)
    }
}

impl OdeState for LagrangianState {
    type Rate = LagrangianRate;

    fn advance(&self, terms: &[(f64, &LagrangianRate)]) -> Self {
        let displacement = combine(self.phi.displacement(), terms.iter().map(|(c, k)| (*c, &k.dphi)));
        Self {
            phi: DiffeoMap::from_displacement(displacement),
            f: combine(&self.f, terms.iter().map(|(c, k)| (*c, &k.df))),
            s: terms.iter().fold(self.s, |s, (c, k)| s + c * k.ds),
            v: combine(&self.v, terms.iter().map(|(c, k)| (*c, &k.dv))),
            sigma: combine(&self.sigma, terms.iter().map(|(c, k)| (*c, &k.dsigma))),
            alpha: self.alpha,
        }
    }

    /// `‖A δv‖_{L²} + ‖δσ‖_{H¹} + ‖δφ‖_{H¹}`.
    fn rate_norm(&self, terms: &[(f64, &LagrangianRate)]) -> f64 {
        let grid = self.v.grid();
        let dv = sum_rates(grid, terms.iter().map(|(c, k)| (*c, &k.dv)));
        let dsigma = sum_rates(grid, terms.iter().map(|(c, k)| (*c, &k.dsigma)));
        let dphi = sum_rates(grid, terms.iter().map(|(c, k)| (*c, &k.dphi)));
        momentum_density_norm(&helmholtz_apply(&dv), &dsigma) + dphi.sobolev_norm_sq(1.0).sqrt()
    }

    fn state_norm(&self) -> f64 {
        momentum_density_norm(&helmholtz_apply(&self.v), &self.sigma)
            + self.phi.displacement().sobolev_norm_sq(1.0).sqrt()
    }
}

/// Eulerian state co-integrated with the flow map `φ_t = u ∘ φ`.
#[derive(Debug, Clone)]
pub struct TrackedState {
    pub eulerian: EulerianState,
    pub phi: DiffeoMap,
}

#[derive(Debug, Clone)]
pub struct TrackedRate {
    pub eulerian: EulerianRate,
    pub dphi: Field,
}

impl OdeState for TrackedState {
    type Rate = TrackedRate;

    fn advance(&self, terms: &[(f64, &TrackedRate)]) -> Self {
        let inner: Vec<(f64, &EulerianRate)> = terms.iter().map(|(c, k)| (*c, &k.eulerian)).collect();
        Self {
            eulerian: self.eulerian.advance(&inner),
            phi: DiffeoMap::from_displacement(combine(
                self.phi.displacement(),
                terms.iter().map(|(c, k)| (*c, &k.dphi)),
            )),
        }
    }

    fn rate_norm(&self, terms: &[(f64, &TrackedRate)]) -> f64 {
        let inner: Vec<(f64, &EulerianRate)> = terms.iter().map(|(c, k)| (*c, &k.eulerian)).collect();
        let dphi = sum_rates(self.phi.grid(), terms.iter().map(|(c, k)| (*c, &k.dphi)));
        self.eulerian.rate_norm(&inner) + dphi.sobolev_norm_sq(1.0).sqrt()
    }

    fn state_norm(&self) -> f64 {
        self.eulerian.state_norm() + self.phi.displacement().sobolev_norm_sq(1.0).sqrt()
    }
}

/// A concrete evolution law together with its Eulerian read-out.
pub trait Formulation: Sync {
    type State: OdeState;

    fn params(&self) -> &ModelParams;

    fn rhs(&self, state: &Self::State) -> Result<<Self::State as OdeState>::Rate>;

    fn eulerian(&self, state: &Self::State) -> Result<EulerianState>;

    /// `min φ_x` for formulations that carry a flow map.
    fn min_jacobian(&self, _state: &Self::State) -> Option<f64> {
        None
    }

    /// `(ρ ∘ φ) φ_x^{a−1}` for formulations that carry a flow map.
    fn flowmap_invariant(&self, _state: &Self::State) -> Result<Option<Field>> {
        Ok(None)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct EulerianFlow {
    pub params: ModelParams,
    pub form: RhsForm,
}

impl Formulation for EulerianFlow {
    type State = EulerianState;

    fn params(&self) -> &ModelParams {
        &self.params
    }

    fn rhs(&self, state: &EulerianState) -> Result<EulerianRate> {
        eulerian::rhs(state, &self.params, self.form)
    }

    fn eulerian(&self, state: &EulerianState) -> Result<EulerianState> {
        Ok(state.clone())
    }
}

/// Eulerian dynamics plus an auxiliary flow map, so the pointwise invariant
/// can be monitored outside the Lagrangian formulation.
#[derive(Debug, Clone, Copy)]
pub struct TrackedEulerianFlow {
    pub params: ModelParams,
    pub form: RhsForm,
}

impl Formulation for TrackedEulerianFlow {
    type State = TrackedState;

    fn params(&self) -> &ModelParams {
        &self.params
    }

    fn rhs(&self, state: &TrackedState) -> Result<TrackedRate> {
        let rate = eulerian::rhs(&state.eulerian, &self.params, self.form)?;
        let dphi = compose(&state.eulerian.velocity(), &state.phi)?;
        Ok(TrackedRate { eulerian: rate, dphi })
    }

    fn eulerian(&self, state: &TrackedState) -> Result<EulerianState> {
        Ok(state.eulerian.clone())
    }

    fn min_jacobian(&self, state: &TrackedState) -> Option<f64> {
        Some(state.phi.jacobian().min())
    }

    fn flowmap_invariant(&self, state: &TrackedState) -> Result<Option<Field>> {
        let rho_along = compose(&state.eulerian.rho, &state.phi)?;
        Ok(Some(flowmap_invariant(&rho_along, &state.phi.jacobian(), self.params.a)))
    }
}

#[derive(Debug, Clone, Copy)]
pub struct LagrangianFlow {
    pub params: ModelParams,
}

impl Formulation for LagrangianFlow {
    type State = LagrangianState;

    fn params(&self) -> &ModelParams {
        &self.params
    }

    fn rhs(&self, state: &LagrangianState) -> Result<LagrangianRate> {
        lagrangian::spray_rhs(state, &self.params)
    }

    fn eulerian(&self, state: &LagrangianState) -> Result<EulerianState> {
        lagrangian::to_eulerian(state)
    }

    fn min_jacobian(&self, state: &LagrangianState) -> Option<f64> {
        Some(state.phi.jacobian().min())
    }

    fn flowmap_invariant(&self, state: &LagrangianState) -> Result<Option<Field>> {
        Ok(Some(lemma61_invariant(state, self.params.a)))
    }
}

/// Classical four-stage Runge–Kutta step.
pub fn rk4_step<F: Formulation>(flow: &F, state: &F::State, dt: f64) -> Result<F::State> {
    let k1 = flow.rhs(state)?;
    let k2 = flow.rhs(&state.advance(&[(0.5 * dt, &k1)]))?;
    let k3 = flow.rhs(&state.advance(&[(0.5 * dt, &k2)]))?;
    let k4 = flow.rhs(&state.advance(&[(dt, &k3)]))?;
    Ok(state.advance(&[
        (dt / 6.0, &k1),
        (dt / 3.0, &k2),
        (dt / 3.0, &k3),
        (dt / 6.0, &k4),
    ]))
}

// Dormand–Prince 5(4)
const DP_A: [&[f64]; 6] = [
    &[1.0 / 5.0],
    &[3.0 / 40.0, 9.0 / 40.0],
    &[44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0],
    &[19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0],
    &[9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0],
    &[35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
/// Fifth-order weights minus embedded fourth-order weights.
const DP_E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];
const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 5.0;

#[derive(Debug, Clone)]
pub struct AdaptiveStep<S> {
    /// New state when accepted, the input state otherwise.
    pub state: S,
    pub dt_used: f64,
    pub new_dt: f64,
    pub accepted: bool,
    /// Error estimate divided by the tolerance.
    pub error_ratio: f64,
}

/// One attempt of the embedded 5(4) pair with step `dt`.
pub fn adaptive_step<F: Formulation>(
    flow: &F,
    state: &F::State,
    control: &StepControl,
    dt: f64,
) -> Result<AdaptiveStep<F::State>> {
    let mut stages: Vec<<F::State as OdeState>::Rate> = Vec::with_capacity(7);
    stages.push(flow.rhs(state)?);
    let mut proposal = state.clone();
    for row in DP_A {
        let terms: Vec<(f64, &<F::State as OdeState>::Rate)> = row
            .iter()
            .zip(&stages)
            .map(|(&a, k)| (dt * a, k))
            .collect();
        proposal = state.advance(&terms);
        stages.push(flow.rhs(&proposal)?);
    }
    let err_terms: Vec<(f64, &<F::State as OdeState>::Rate)> =
        DP_E.iter().zip(&stages).map(|(&e, k)| (dt * e, k)).collect();
    let error = state.rate_norm(&err_terms);
    let scale = control.abs_tol + control.rel_tol * state.state_norm().max(proposal.state_norm());
    let error_ratio = error / scale;
    let accepted = error_ratio <= 1.0;
    let factor = if error_ratio == 0.0 {
        MAX_FACTOR
    } else {
        (SAFETY * error_ratio.powf(-0.2)).clamp(MIN_FACTOR, MAX_FACTOR)
    };
    let factor = if accepted { factor } else { factor.min(1.0) };
    Ok(AdaptiveStep {
        state: if accepted { proposal } else { state.clone() },
        dt_used: dt,
        new_dt: dt * factor,
        accepted,
        error_ratio,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    #[default]
    Rk4,
    Adaptive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepControl {
    pub scheme: Scheme,
    /// Fixed step for RK4, initial step for the adaptive pair.
    pub dt: f64,
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub dt_min: f64,
    /// Threshold on `‖u_x‖_∞`.
    pub max_ux: f64,
    /// Threshold on the share of `‖u_x‖` carried by the top quarter of the
    /// retained spectrum; `None` disables the resolution check.
    pub resolution_tol: Option<f64>,
}

impl Default for StepControl {
    fn default() -> Self {
        Self {
            scheme: Scheme::Rk4,
            dt: 1e-3,
            abs_tol: 1e-8,
            rel_tol: 1e-8,
            dt_min: 1e-12,
            max_ux: 1e6,
            resolution_tol: Some(1e-4),
        }
    }
}

impl StepControl {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("dt", self.dt),
            ("abs_tol", self.abs_tol),
            ("rel_tol", self.rel_tol),
            ("dt_min", self.dt_min),
            ("max_ux", self.max_ux),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        if self.dt < self.dt_min {
            return Err(Error::InvalidParameter("dt must not be below dt_min".into()));
        }
        if let Some(tol) = self.resolution_tol {
            if !(tol > 0.0) {
                return Err(Error::InvalidParameter("resolution_tol must be positive".into()));
            }
        }
        Ok(())
    }
}

/// Share of `‖u_x‖_{L²}` carried by wavenumbers `n/4 < |k| ≤ n/3`.
pub fn spectral_tail_fraction(u: &Field) -> f64 {
    let n = u.grid().n() as i64;
    let (mut tail, mut total) = (0.0, 0.0);
    for (c, &k) in u.coeffs().iter().zip(u.grid().wavenumbers()) {
        let e = (k * k) as f64 * c.norm_sqr();
        total += e;
        if 4 * k.abs() > n && 3 * k.abs() <= n {
            tail += e;
        }
    }
    if total == 0.0 {
        0.0
    } else {
        (tail / total).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Completed,
    BlowupDetected,
    MeshDegenerate,
}

/// What stopped a run early.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Detection {
    GradientThreshold { max_ux: f64 },
    StepCollapse { dt: f64 },
    ResolutionLoss { tail_fraction: f64 },
    NonFinite,
    MeshDegenerate { min_jacobian: f64 },
}

#[derive(Debug, Clone)]
pub struct Snapshot {
    pub t: f64,
    pub state: EulerianState,
}

/// Per accepted step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonitorSample {
    pub t: f64,
    pub dt: f64,
    pub max_ux: f64,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub status: RunStatus,
    pub t_final: f64,
    pub trajectory: Vec<Snapshot>,
    pub diagnostics: Vec<DiagnosticsRecord>,
    pub detection: Option<Detection>,
    pub monitor: Vec<MonitorSample>,
    pub steps_accepted: usize,
    pub steps_rejected: usize,
}

impl RunOutcome {
    pub fn final_snapshot(&self) -> &Snapshot {
        self.trajectory.last().expect("a run always records its initial snapshot")
    }
}

struct Recorder<'a, F: Formulation> {
    flow: &'a F,
    invariant0: Option<Field>,
    trajectory: Vec<Snapshot>,
    diagnostics: Vec<DiagnosticsRecord>,
}

impl<F: Formulation> Recorder<'_, F> {
    fn record(&mut self, t: f64, state: &F::State, eulerian: EulerianState) -> Result<()> {
        let deviation = match (&self.invariant0, self.flow.flowmap_invariant(state)?) {
            (Some(f0), Some(f)) => Some(f.max_abs_diff(f0)),
            _ => None,
        };
        let p = self.flow.params();
        self.diagnostics
            .push(DiagnosticsRecord::evaluate(t, &eulerian, p.a, p.kappa, deviation));
        self.trajectory.push(Snapshot { t, state: eulerian });
        Ok(())
    }
}

/// Integrates to `t_end` or until the monitor stops the run.
pub fn run<F: Formulation>(
    flow: &F,
    initial: F::State,
    t_end: f64,
    control: &StepControl,
    snapshot_every: f64,
) -> Result<RunOutcome> {
    run_with_state(flow, initial, t_end, control, snapshot_every).map(|(outcome, _)| outcome)
}

/// [`run`], also returning the last accepted state.
pub fn run_with_state<F: Formulation>(
    flow: &F,
    initial: F::State,
    t_end: f64,
    control: &StepControl,
    snapshot_every: f64,
) -> Result<(RunOutcome, F::State)> {
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::InvalidParameter(format!("final time must be positive, got {t_end}")));
    }
    if !(snapshot_every > 0.0) {
        return Err(Error::InvalidParameter("snapshot interval must be positive".into()));
    }
    control.validate()?;

    let mut recorder = Recorder {
        flow,
        invariant0: flow.flowmap_invariant(&initial)?,
        trajectory: Vec::new(),
        diagnostics: Vec::new(),
    };
    recorder.record(0.0, &initial, flow.eulerian(&initial)?)?;

    let mut state = initial;
    let mut t = 0.0;
    let mut dt = control.dt;
    let mut next_snapshot = 1usize;
    let mut monitor = Vec::new();
    let (mut accepted_steps, mut rejected_steps) = (0, 0);
    let mut detection = None;
    let mut status = RunStatus::Completed;

    while t < t_end {
        let target = (next_snapshot as f64 * snapshot_every).min(t_end);
        let remaining = target - t;
        let (h, hits_target) = if remaining <= dt * (1.0 + 1e-9) {
            (remaining, true)
        } else {
            (dt, false)
        };

        let attempt = match control.scheme {
            Scheme::Rk4 => rk4_step(flow, &state, h).map(Some),
            Scheme::Adaptive => adaptive_step(flow, &state, control, h).map(|step| {
                if step.accepted {
                    // a step shortened to hit a snapshot does not shrink dt
                    if !hits_target || step.new_dt < h || h >= dt {
                        dt = step.new_dt;
                    }
                    Some(step.state)
                } else {
                    dt = step.new_dt;
                    None
                }
            }),
        };
        let next = match attempt {
            Ok(next) => next,
            Err(Error::NonDiffeomorphism { .. }) => {
                status = RunStatus::MeshDegenerate;
                detection = Some(Detection::MeshDegenerate {
                    min_jacobian: flow.min_jacobian(&state).unwrap_or(f64::NAN),
                });
                break;
            }
            Err(e) => return Err(e),
        };
        let Some(next) = next else {
            rejected_steps += 1;
            if dt < control.dt_min {
                status = RunStatus::BlowupDetected;
                detection = Some(Detection::StepCollapse { dt });
                break;
            }
            continue;
        };

        state = next;
        t = if hits_target { target } else { t + h };
        accepted_steps += 1;

        if let Some(min_jac) = flow.min_jacobian(&state) {
            if !(min_jac >= MESH_DEGENERACY_THRESHOLD) {
                status = RunStatus::MeshDegenerate;
                detection = Some(Detection::MeshDegenerate { min_jacobian: min_jac });
                let eul = flow.eulerian(&state)?;
                recorder.record(t, &state, eul)?;
                break;
            }
        }

        let eul = flow.eulerian(&state)?;
        let u = eul.velocity();
        let max_ux = derivative(&u).max_abs();
        monitor.push(MonitorSample { t, dt: h, max_ux });

        let stop = if !max_ux.is_finite() {
            Some(Detection::NonFinite)
        } else if max_ux > control.max_ux {
            Some(Detection::GradientThreshold { max_ux })
        } else if control.scheme == Scheme::Adaptive && dt < control.dt_min {
            Some(Detection::StepCollapse { dt })
        } else {
            control.resolution_tol.and_then(|tol| {
                let tail = spectral_tail_fraction(&u);
                (tail > tol).then_some(Detection::ResolutionLoss { tail_fraction: tail })
            })
        };

        if let Some(d) = stop {
            status = RunStatus::BlowupDetected;
            detection = Some(d);
            recorder.record(t, &state, eul)?;
            break;
        }
        if hits_target {
            recorder.record(t, &state, eul)?;
            next_snapshot += 1;
        }
    }

    let outcome = RunOutcome {
        status,
        t_final: t,
        trajectory: recorder.trajectory,
        diagnostics: recorder.diagnostics,
        detection,
        monitor,
        steps_accepted: accepted_steps,
        steps_rejected: rejected_steps,
    };
    Ok((outcome, state))
}

/// Which description of the motion drives a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FormulationKind {
    #[default]
    Eulerian,
    Lagrangian,
}

/// Everything needed to run either formulation from Eulerian initial data.
#[derive(Debug, Clone, Copy)]
pub struct Simulation {
    pub params: ModelParams,
    pub formulation: FormulationKind,
    pub form: RhsForm,
    /// Co-integrate a flow map alongside an Eulerian run.
    pub track_flowmap: bool,
}

impl Simulation {
    pub fn new(params: ModelParams, formulation: FormulationKind) -> Self {
        Self {
            params,
            formulation,
            form: RhsForm::default(),
            track_flowmap: false,
        }
    }

    /// Projects the initial data onto the retained band and integrates.
    pub fn run(
        &self,
        initial: &EulerianState,
        t_end: f64,
        control: &StepControl,
        snapshot_every: f64,
    ) -> Result<RunOutcome> {
        let initial = EulerianState::new(dealias(&initial.m), dealias(&initial.rho), initial.alpha)?;
        match (self.formulation, self.track_flowmap) {
            (FormulationKind::Lagrangian, _) => run(
                &LagrangianFlow { params: self.params },
                lagrangian::from_eulerian(&initial),
                t_end,
                control,
                snapshot_every,
            ),
            (FormulationKind::Eulerian, false) => run(
                &EulerianFlow { params: self.params, form: self.form },
                initial,
                t_end,
                control,
                snapshot_every,
            ),
            (FormulationKind::Eulerian, true) => {
                let phi = DiffeoMap::identity(initial.m.grid());
                run(
                    &TrackedEulerianFlow { params: self.params, form: self.form },
                    TrackedState { eulerian: initial, phi },
                    t_end,
                    control,
                    snapshot_every,
                )
            }
        }
    }
}
