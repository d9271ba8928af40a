use std::sync::Arc;

use proptest::prelude::*;
use shearwave::eulerian::{forms_equivalent, rhs, rhs_u_form, EulerianState, RhsForm};
use shearwave::lagrangian::{spray_rhs, LagrangianState};
use shearwave::model::{burns_speed, derive_coefficients, Branch, ModelParams};
use shearwave::spectral::{
    ainv_d, ainv_d_factorized, compose, derivative, helmholtz_apply, helmholtz_invert, invert_diffeo, DiffeoMap,
    Field, SpectralGrid,
};
use shearwave::timestepper::{run, run_with_state, EulerianFlow, LagrangianFlow, StepControl};
use shearwave::lagrangian::from_eulerian;

fn cfg(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        failure_persistence: None,
        rng_seed: proptest::test_runner::RngSeed::Fixed(0x5eed),
        ..ProptestConfig::default()
    }
}

fn grid(n: usize) -> Arc<SpectralGrid> {
    SpectralGrid::new(n).unwrap()
}

/// Trigonometric polynomial with the given `(cos, sin)` amplitudes for k = 1, 2, ...
fn trig(g: &Arc<SpectralGrid>, mean: f64, modes: &[(f64, f64)]) -> Field {
    Field::from_fn(g, |x| {
        mean + modes
            .iter()
            .enumerate()
            .map(|(i, (a, b))| {
                let k = (i + 1) as f64;
                a * (k * x).cos() + b * (k * x).sin()
            })
            .sum::<f64>()
    })
}

fn modes(max_mode: usize, amp: f64) -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-amp..amp, -amp..amp), 1..=max_mode)
}

/// Displacement with `|d'| ≤ 0.4`, so `φ_x ≥ 0.6`.
fn diffeo(g: &Arc<SpectralGrid>, shift: f64, raw: &[(f64, f64)]) -> DiffeoMap {
    let d = trig(g, shift, raw);
    let slope = derivative(&d).max_abs();
    let d = if slope > 0.4 {
        let mean = shift;
        d.map(|v| mean + (v - mean) * 0.4 / slope)
    } else {
        d
    };
    DiffeoMap::from_displacement(d)
}

fn params_strategy() -> impl Strategy<Value = ModelParams> {
    (prop_oneof![-3.0..0.9f64, 1.1..4.0f64], -2.0..2.0f64, 0.2..3.0f64)
        .prop_filter("a = -1 excluded", |(a, _, _)| (a + 1.0).abs() > 1e-3)
        .prop_map(|(a, alpha, kappa)| ModelParams::new(a, alpha, kappa).unwrap())
}

proptest! {
    #![proptest_config(cfg(100))]

    #[test]
    fn helmholtz_round_trip(m in modes(80, 1.0), mean in -2.0..2.0f64) {
        let g = grid(256);
        let f = trig(&g, mean, &m);
        let back = helmholtz_invert(&helmholtz_apply(&f));
        prop_assert!(back.max_abs_diff(&f) <= 1e-12 * f.max_abs().max(1.0));
    }

    #[test]
    fn ainv_d_factorisation(m in modes(80, 1.0), mean in -2.0..2.0f64) {
        let g = grid(256);
        let f = trig(&g, mean, &m);
        prop_assert!(ainv_d(&f).max_abs_diff(&ainv_d_factorized(&f)) <= 1e-12 * f.max_abs().max(1.0));
    }

    #[test]
    fn derivative_has_zero_mean(m in modes(40, 1.0), c in -5.0..5.0f64) {
        let g = grid(128);
        let f = trig(&g, c, &m);
        prop_assert!(derivative(&f).integral().abs() < 1e-12);
        prop_assert!(derivative(&Field::constant(&g, c)).max_abs() < 1e-12);
    }

    #[test]
    fn compose_is_linear(
        f in modes(10, 1.0), h in modes(10, 1.0), d in modes(4, 0.3),
        a in -2.0..2.0f64, b in -2.0..2.0f64, shift in -1.0..1.0f64,
    ) {
        let g = grid(64);
        let (f, h) = (trig(&g, 0.1, &f), trig(&g, -0.3, &h));
        let phi = diffeo(&g, shift, &d);
        let lhs = compose(&f.scale(a).lincomb(&[(b, &h)]), &phi).unwrap();
        let rhs = compose(&f, &phi).unwrap().scale(a).lincomb(&[(b, &compose(&h, &phi).unwrap())]);
        prop_assert!(lhs.max_abs_diff(&rhs) < 1e-12 * (1.0 + lhs.max_abs()));
    }

    #[test]
    fn inversion_is_an_involution(d in modes(4, 0.3), shift in -2.0..2.0f64) {
        let g = grid(256);
        let phi = diffeo(&g, shift, &d);
        let back = invert_diffeo(&invert_diffeo(&phi).unwrap()).unwrap();
        let err = back.displacement().max_abs_diff(phi.displacement());
        prop_assert!(err < 1e-8, "{err:e}");
    }

    #[test]
    fn burns_root_symmetry(alpha in -5.0..5.0f64) {
        let r = burns_speed(-alpha, Branch::Right);
        let l = burns_speed(alpha, Branch::Left);
        prop_assert!((r + l).abs() <= 1e-14 * r.abs().max(1.0));
    }

    #[test]
    fn rhs_is_quadratic(u in modes(20, 0.5), r in modes(20, 0.5), alpha in -1.0..1.0f64, lambda in -3.0..3.0f64, p in params_strategy()) {
        let g = grid(128);
        let (u, rho) = (trig(&g, 0.2, &u), trig(&g, 1.0, &r));
        for form in [RhsForm::MForm, RhsForm::UForm] {
            let s = EulerianState::from_velocity(&u, rho.clone(), alpha).unwrap();
            let scaled = EulerianState::from_velocity(&u.scale(lambda), rho.scale(lambda), lambda * alpha).unwrap();
            let r1 = rhs(&s, &p, form).unwrap();
            let r2 = rhs(&scaled, &p, form).unwrap();
            let l2 = lambda * lambda;
            let tol = 1e-11 * (1.0 + l2) * (1.0 + r1.dm.max_abs());
            prop_assert!(r2.dm.max_abs_diff(&r1.dm.scale(l2)) < tol);
            prop_assert!(r2.drho.max_abs_diff(&r1.drho.scale(l2)) < tol);
        }
    }

    #[test]
    fn mean_velocity_rate_vanishes(u in modes(30, 1.0), r in modes(30, 1.0), alpha in -1.0..1.0f64, p in params_strategy()) {
        let g = grid(128);
        let (du, _) = rhs_u_form(&trig(&g, 0.3, &u), &trig(&g, 0.5, &r), alpha, &p).unwrap();
        // round-off in the quadrature grows with the size of the rate
        prop_assert!(du.integral().abs() < 1e-12 * du.max_abs().max(1.0), "{:e}", du.integral());
    }

    #[test]
    fn spray_is_right_equivariant(
        v in modes(6, 0.5), s in modes(6, 0.5), d in modes(3, 0.3), shift in -1.0..1.0f64,
        alpha in -1.0..1.0f64, p in params_strategy(),
    ) {
        let g = grid(256);
        let phi = diffeo(&g, shift, &d);
        let (v, sigma) = (trig(&g, 0.1, &v), trig(&g, 1.0, &s));
        let at_phi = LagrangianState {
            phi: phi.clone(),
            f: Field::zeros(&g),
            s: 0.0,
            v: v.clone(),
            sigma: sigma.clone(),
            alpha,
        };
        let rate = spray_rhs(&at_phi, &p).unwrap();
        let inv = invert_diffeo(&phi).unwrap();
        let at_id = LagrangianState {
            phi: DiffeoMap::identity(&g),
            v: compose(&v, &inv).unwrap(),
            sigma: compose(&sigma, &inv).unwrap(),
            ..at_phi
        };
        let rate_id = spray_rhs(&at_id, &p).unwrap();
        let dv = compose(&rate_id.dv, &phi).unwrap();
        let dsigma = compose(&rate_id.dsigma, &phi).unwrap();
        prop_assert!(rate.dv.max_abs_diff(&dv) < 1e-8, "{:e}", rate.dv.max_abs_diff(&dv));
        prop_assert!(rate.dsigma.max_abs_diff(&dsigma) < 1e-8, "{:e}", rate.dsigma.max_abs_diff(&dsigma));
        prop_assert_eq!(rate.dalpha, 0.0);
    }
}

proptest! {
    #![proptest_config(cfg(200))]

    #[test]
    fn coefficients_satisfy_constraints(p in params_strategy(), left in any::<bool>()) {
        let branch = if left { Branch::Left } else { Branch::Right };
        let c = derive_coefficients(&p, branch).unwrap();
        prop_assert!(c.residuals(&p).max() < 1e-10);
    }
}

proptest! {
    #![proptest_config(cfg(100))]

    #[test]
    fn forms_agree_on_band_limited_states(u in modes(32, 1.0), r in modes(32, 1.0), alpha in -1.0..1.0f64, p in params_strategy()) {
        let g = grid(256);
        let res = forms_equivalent(&trig(&g, 0.2, &u), &trig(&g, 1.0, &r), alpha, &p).unwrap();
        prop_assert!(res < 1e-10);
    }
}

fn smooth_state(g: &Arc<SpectralGrid>, alpha: f64) -> EulerianState {
    let u = Field::from_fn(g, |x| 0.5 * x.cos() + 0.2 * (2.0 * x).sin());
    let rho = Field::from_fn(g, |x| 1.0 + 0.3 * (x + 0.4).sin());
    EulerianState::from_velocity(&u, rho, alpha).unwrap()
}

#[test]
fn runs_are_deterministic() {
    let g = grid(64);
    let flow = EulerianFlow { params: ModelParams::new(2.5, 0.7, 1.0).unwrap(), form: RhsForm::UForm };
    let control = StepControl { scheme: shearwave::timestepper::Scheme::Adaptive, ..StepControl::default() };
    let a = run(&flow, smooth_state(&g, 0.7), 0.5, &control, 0.1).unwrap();
    let b = run(&flow, smooth_state(&g, 0.7), 0.5, &control, 0.1).unwrap();
    assert_eq!(a.trajectory.len(), b.trajectory.len());
    for (x, y) in a.trajectory.iter().zip(&b.trajectory) {
        assert_eq!(x.t.to_bits(), y.t.to_bits());
        assert!(x.state.m.values().iter().zip(y.state.m.values()).all(|(p, q)| p.to_bits() == q.to_bits()));
        assert!(x.state.rho.values().iter().zip(y.state.rho.values()).all(|(p, q)| p.to_bits() == q.to_bits()));
    }
    assert_eq!(a.diagnostics, b.diagnostics);
    assert_eq!(a.monitor, b.monitor);
}

#[test]
fn alpha_is_bit_identical() {
    let g = grid(32);
    let alpha = 0.1 + 0.2;
    let p = ModelParams::new(3.0, alpha, 1.0).unwrap();
    let e = run(&EulerianFlow { params: p, form: RhsForm::MForm }, smooth_state(&g, alpha), 0.3, &StepControl::default(), 0.05).unwrap();
    assert!(e.trajectory.iter().all(|s| s.state.alpha.to_bits() == alpha.to_bits()));
    let (l, last) = run_with_state(&LagrangianFlow { params: p }, from_eulerian(&smooth_state(&g, alpha)), 0.3, &StepControl::default(), 0.05).unwrap();
    assert!(l.trajectory.iter().all(|s| s.state.alpha.to_bits() == alpha.to_bits()));
    assert_eq!(last.alpha.to_bits(), alpha.to_bits());
}

/// Forward to T, flip (u, ρ, α) → (−u, −ρ, −α), forward again, flip back.
#[test]
fn time_reversal_returns_to_initial_data() {
    let g = grid(128);
    let alpha = 0.6;
    let p = ModelParams::new(2.0, alpha, 1.0).unwrap();
    let flow = EulerianFlow { params: p, form: RhsForm::UForm };
    let s0 = smooth_state(&g, alpha);
    let t = 0.5;
    let forward = |s: EulerianState, dt: f64| {
        let c = StepControl { dt, resolution_tol: None, ..StepControl::default() };
        run(&flow, s, t, &c, t).unwrap().final_snapshot().state.clone()
    };
    let coarse = forward(s0.clone(), 1e-2);
    let fine = forward(s0.clone(), 5e-3);
    let forward_error = coarse.m.max_abs_diff(&fine.m) * 16.0 / 15.0;

    let flip = |s: &EulerianState| EulerianState::new(s.m.scale(-1.0), s.rho.scale(-1.0), -s.alpha).unwrap();
    let reversed = forward(flip(&coarse), 1e-2);
    let back = flip(&reversed);
    let return_error = back.m.max_abs_diff(&s0.m).max(back.rho.max_abs_diff(&s0.rho));
    assert_eq!(back.alpha, alpha);
    assert!(return_error <= 10.0 * forward_error.max(1e-14), "{return_error:e} vs {forward_error:e}");
}

#[test]
fn momentum_variable_round_trip() {
    let g = grid(64);
    let s = smooth_state(&g, 0.0);
    let again = EulerianState::from_velocity(&s.velocity(), s.rho.clone(), 0.0).unwrap();
    assert!(again.m.max_abs_diff(&s.m) < 1e-13);
    assert!(helmholtz_apply(&s.velocity()).max_abs_diff(&s.m) < 1e-13);
}
