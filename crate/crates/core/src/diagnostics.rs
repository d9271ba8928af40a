//! Conserved quantities, Sobolev-norm tracking and positivity checks.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::eulerian::EulerianState;
use crate::lagrangian::LagrangianState;
use crate::spectral::{derivative, Field};

/// Sobolev indices tracked by default in [`DiagnosticsRecord::h_norms`].
pub const DEFAULT_H_INDICES: [u32; 3] = [0, 1, 2];

/// Squared norm of the right-invariant metric available when `a = 2`:
/// `∫u_x² + ∫(u − α/2)² + α²/2 + κ∫ρ²`.
pub fn energy_a2(u: &Field, rho: &Field, alpha: f64, kappa: f64) -> f64 {
    let ux = derivative(u);
    let shifted = u.map(|v| (v - 0.5 * alpha).powi(2));
    ux.map(|v| v * v).integral()
        + shifted.integral()
        + 0.5 * alpha * alpha
        + kappa * rho.map(|r| r * r).integral()
}

/// `∫ρ^{1/(a−1)} dx`; `None` unless `ρ > 0` at every node.
pub fn casimir(rho: &Field, a: f64) -> Option<f64> {
    if a == 1.0 || !rho.values().iter().all(|&r| r > 0.0) {
        return None;
    }
    let p = 1.0 / (a - 1.0);
    Some(rho.map(|r| (p * r.ln()).exp()).integral())
}

/// `σ · φ_x^{a−1}` at the nodes, constant in time along the flow.
pub fn lemma61_invariant(state: &LagrangianState, a: f64) -> Field {
    flowmap_invariant(&state.sigma, &state.phi.jacobian(), a)
}

/// `(ρ ∘ φ) · φ_x^{a−1}` from already composed density samples.
pub fn flowmap_invariant(rho_along_flow: &Field, jacobian: &Field, a: f64) -> Field {
    rho_along_flow.zip_map(jacobian, |r, j| r * j.powf(a - 1.0))
}

/// `‖m‖²_{H^k} + ‖ρ‖²_{H^{k+1}}`.
pub fn sobolev_norm_pair(m: &Field, rho: &Field, k: u32) -> f64 {
    m.sobolev_norm_sq(k as f64) + rho.sobolev_norm_sq(k as f64 + 1.0)
}

/// Outcome of scanning a density trajectory for sign changes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PositivityReport {
    /// `ρ₀` is not identically zero, so a verdict is meaningful.
    pub applicable: bool,
    pub preserved: bool,
    pub first_violation_t: Option<f64>,
}

/// Scans `(t, ρ(t))` snapshots, starting with the initial density.
pub fn positivity_report<'a>(trajectory: impl IntoIterator<Item = (f64, &'a Field)>) -> PositivityReport {
    let mut iter = trajectory.into_iter().peekable();
    let applicable = iter
        .peek()
        .map(|(_, rho)| rho.values().iter().any(|&r| r != 0.0))
        .unwrap_or(false);
    if !applicable {
        return PositivityReport {
            applicable: false,
            preserved: false,
            first_violation_t: None,
        };
    }
    let first_violation_t = iter.find(|(_, rho)| !(rho.min() > 0.0)).map(|(t, _)| t);
    PositivityReport {
        applicable: true,
        preserved: first_violation_t.is_none(),
        first_violation_t,
    }
}

/// Diagnostics evaluated at one snapshot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub energy_a2: f64,
    pub mean_u: f64,
    pub casimir: Option<f64>,
    pub min_rho: f64,
    pub max_ux: f64,
    pub h_norms: BTreeMap<u32, f64>,
    pub lemma61_deviation: Option<f64>,
}

impl DiagnosticsRecord {
    pub fn evaluate(
        t: f64,
        state: &EulerianState,
        a: f64,
        kappa: f64,
        lemma61_deviation: Option<f64>,
    ) -> Self {
        let u = state.velocity();
        let h_norms = DEFAULT_H_INDICES
            .iter()
            .map(|&k| (k, sobolev_norm_pair(&state.m, &state.rho, k)))
            .collect();
        Self {
            t,
            energy_a2: energy_a2(&u, &state.rho, state.alpha, kappa),
            mean_u: u.integral(),
            casimir: casimir(&state.rho, a),
            min_rho: state.rho.min(),
            max_ux: derivative(&u).max_abs(),
            h_norms,
            lemma61_deviation,
        }
    }

    pub fn is_finite(&self) -> bool {
        [self.t, self.energy_a2, self.mean_u, self.min_rho, self.max_ux]
            .iter()
            .chain(self.h_norms.values())
            .chain(self.casimir.iter())
            .chain(self.lemma61_deviation.iter())
            .all(|v| v.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{DiffeoMap, SpectralGrid};
    use std::f64::consts::PI;

    #[test]
    fn energy_examples() {
        let g = SpectralGrid::new(32).unwrap();
        let zero = Field::zeros(&g);
        assert_eq!(energy_a2(&zero, &zero, 0.0, 1.0), 0.0);
        let cos = Field::from_fn(&g, f64::cos);
        assert!((energy_a2(&cos, &zero, 0.0, 1.0) - 2.0 * PI).abs() < 1e-12);
        let one = Field::constant(&g, 1.0);
        assert!((energy_a2(&zero, &one, 2.0, 1.0) - (4.0 * PI + 2.0)).abs() < 1e-12);
    }

    #[test]
    fn casimir_examples() {
        let g = SpectralGrid::new(32).unwrap();
        assert!((casimir(&Field::constant(&g, 1.0), 2.0).unwrap() - 2.0 * PI).abs() < 1e-12);
        assert!((casimir(&Field::constant(&g, 4.0), 3.0).unwrap() - 4.0 * PI).abs() < 1e-12);
        let touching = Field::from_fn(&g, |x| 1.0 + x.cos());
        assert_eq!(casimir(&touching, 2.0), None);
    }

    #[test]
    fn sobolev_examples() {
        let g = SpectralGrid::new(32).unwrap();
        let zero = Field::zeros(&g);
        assert_eq!(sobolev_norm_pair(&zero, &zero, 2), 0.0);
        let cos = Field::from_fn(&g, f64::cos);
        assert!((sobolev_norm_pair(&cos, &zero, 0) - PI).abs() < 1e-12);
        let f = Field::from_fn(&g, |x| x.sin() + 0.3 * (4.0 * x).cos());
        let rho = Field::from_fn(&g, |x| 1.0 + 0.2 * (2.0 * x).sin());
        let norms: Vec<f64> = (0..4).map(|k| sobolev_norm_pair(&f, &rho, k)).collect();
        assert!(norms.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn lemma61_at_identity_is_density() {
        let g = SpectralGrid::new(32).unwrap();
        let rho = Field::from_fn(&g, |x| 1.0 + 0.5 * x.sin());
        let state = LagrangianState {
            phi: DiffeoMap::identity(&g),
            f: Field::zeros(&g),
            s: 0.0,
            v: Field::zeros(&g),
            sigma: rho.clone(),
            alpha: 0.0,
        };
        assert_eq!(lemma61_invariant(&state, 2.5).values(), rho.values());
    }

    #[test]
    fn positivity_cases() {
        let g = SpectralGrid::new(16).unwrap();
        let pos = Field::from_fn(&g, |x| 1.0 + 0.5 * x.sin());
        let r = positivity_report([(0.0, &pos), (1.0, &pos)]);
        assert!(r.applicable && r.preserved && r.first_violation_t.is_none());

        let touching = Field::from_fn(&g, |x| 1.0 + x.cos());
        let r = positivity_report([(0.0, &touching), (1.0, &pos)]);
        assert!(r.applicable && !r.preserved);
        assert_eq!(r.first_violation_t, Some(0.0));

        let zero = Field::zeros(&g);
        let r = positivity_report([(0.0, &zero)]);
        assert!(!r.applicable);
    }
}
