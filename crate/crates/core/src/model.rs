//! Model parameters, the linear wave speed over a constant shear current, the
//! closed-form coefficients of the two-component reduction, and initial data.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{Field, SpectralGrid};

/// Tolerance used when [`derive_coefficients`] checks its own output.
pub const COEFFICIENT_TOL: f64 = 1e-12;

/// `(a, α, κ)` of the system. `a ≠ 1`, `κ > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub a: f64,
    pub alpha: f64,
    pub kappa: f64,
}

impl ModelParams {
    pub fn new(a: f64, alpha: f64, kappa: f64) -> Result<Self> {
        if !(a.is_finite() && alpha.is_finite() && kappa.is_finite()) {
            return Err(Error::InvalidParameter("parameters must be finite".into()));
        }
        if a == 1.0 {
            return Err(Error::InvalidParameter("a = 1 excluded".into()));
        }
        if kappa <= 0.0 {
            return Err(Error::InvalidParameter(format!("kappa must be positive, got {kappa}")));
        }
        Ok(Self { a, alpha, kappa })
    }

    /// Two-component Camassa–Holm: `a = 2, α = 0, κ = 1`.
    pub fn camassa_holm() -> Self {
        Self { a: 2.0, alpha: 0.0, kappa: 1.0 }
    }
}

/// Root of the dispersion relation `c² − αc − 1 = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    /// `c > 0`, waves moving with the current.
    #[default]
    Right,
    Left,
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Branch::Right => "right",
            Branch::Left => "left",
        })
    }
}

impl FromStr for Branch {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim() {
            "right" => Ok(Branch::Right),
            "left" => Ok(Branch::Left),
            other => Err(format!("unknown branch `{other}` (expected right or left)")),
        }
    }
}

/// Linear wave speed `c = (α ± √(α² + 4)) / 2`.
///
/// Evaluated without cancellation: the two roots multiply to −1, so the root
/// that would subtract nearly equal numbers is taken as the reciprocal of the
/// other one.
pub fn burns_speed(alpha: f64, branch: Branch) -> f64 {
    let s = (alpha * alpha + 4.0).sqrt();
    match branch {
        Branch::Right if alpha >= 0.0 => 0.5 * (alpha + s),
        Branch::Right => 2.0 / (s - alpha),
        Branch::Left if alpha <= 0.0 => 0.5 * (alpha - s),
        Branch::Left => -2.0 / (alpha + s),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedCoefficients {
    pub c: f64,
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub k0: f64,
    pub beta0_sq: f64,
}

/// Scaled residuals `|lhs − rhs| / max(1, |terms|)` of each constraint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstraintResiduals {
    /// `c² − αc − 1 = 0`
    pub burns: f64,
    /// `k₃/k₁ = 1/(6(c − α))`
    pub dispersion: f64,
    /// `k₁ = 1 + αc/2 + k₂/k₁`
    pub rho_closure: f64,
    /// `k₃/k₁ − α/6 + k₀(c − α) = 0`
    pub m_dispersion: f64,
    /// `β₀² = k₀ + ½ = 1/(3c²(c − α)²)`
    pub beta0: f64,
    /// `(αc − α² − 1)/(6(c − α)²) + ½ = 1/(3c²(c − α)²)`
    pub beta0_dual: f64,
}

impl ConstraintResiduals {
    pub fn max(&self) -> f64 {
        [
            self.burns,
            self.dispersion,
            self.rho_closure,
            self.m_dispersion,
            self.beta0,
            self.beta0_dual,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

fn scaled_residual(lhs: f64, rhs: f64, terms: &[f64]) -> f64 {
    let scale = terms
        .iter()
        .chain([lhs, rhs].iter())
        .fold(1.0_f64, |m, t| m.max(t.abs()));
    (lhs - rhs).abs() / scale
}

impl DerivedCoefficients {
    pub fn residuals(&self, params: &ModelParams) -> ConstraintResiduals {
        let Self { c, k1, k2, k3, k0, beta0_sq } = *self;
        let alpha = params.alpha;
        let shear = c - alpha;
        let closed_beta = 1.0 / (3.0 * c * c * shear * shear);
        let dual_beta = (alpha * c - alpha * alpha - 1.0) / (6.0 * shear * shear) + 0.5;
        ConstraintResiduals {
            burns: scaled_residual(c * c - alpha * c, 1.0, &[c * c, alpha * c]),
            dispersion: scaled_residual(k3 / k1, 1.0 / (6.0 * shear), &[]),
            rho_closure: scaled_residual(k1, 1.0 + 0.5 * alpha * c + k2 / k1, &[alpha * c, k2 / k1]),
            m_dispersion: scaled_residual(
                k3 / k1 + k0 * shear,
                alpha / 6.0,
                &[k3 / k1, k0 * shear],
            ),
            beta0: scaled_residual(beta0_sq, k0 + 0.5, &[closed_beta]).max(scaled_residual(
                beta0_sq,
                closed_beta,
                &[],
            )),
            beta0_dual: scaled_residual(dual_beta, closed_beta, &[]),
        }
    }
}

/// Evaluates `k₁, k₂, k₃, k₀, β₀²` for the given parameters and checks every
/// constraint they are built to satisfy.
pub fn derive_coefficients(params: &ModelParams, branch: Branch) -> Result<DerivedCoefficients> {
    let a = params.a;
    if a == 1.0 {
        return Err(Error::InvalidParameter("a = 1 excluded".into()));
    }
    if a == -1.0 {
        return Err(Error::InvalidParameter(
            "a = -1 excluded: the coefficients have a divisor a + 1".into(),
        ));
    }
    let alpha = params.alpha;
    let c = burns_speed(alpha, branch);
    let shear = c - alpha;
    if shear == 0.0 || c == 0.0 {
        return Err(Error::Degenerate(format!("c = {c}, c - alpha = {shear}")));
    }
    let c2 = c * c;
    let k1 = 1.0 / ((1.0 + c2) * (a + 1.0)) + c2 / (a + 1.0);
    let k2 = (1.0 / ((a + 1.0) * (1.0 + c2)) + c2 * (1.0 - a) / (2.0 * (a + 1.0)) - 0.5) * k1;
    let k3 = k1 / (6.0 * shear);
    let beta0_sq = 1.0 / (3.0 * c2 * shear * shear);
    let k0 = beta0_sq - 0.5;

    let coeffs = DerivedCoefficients { c, k1, k2, k3, k0, beta0_sq };
    let residuals = coeffs.residuals(params);
    if !(residuals.max() <= COEFFICIENT_TOL) {
        return Err(Error::Degenerate(format!(
            "constraint residuals exceed {COEFFICIENT_TOL:e}: {residuals:?}"
        )));
    }
    Ok(coeffs)
}

/// The two printed forms of the quadratic-coefficient condition, which differ
/// in the factor in front of `(a − 2)k₁`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadraticConstraintResiduals {
    /// `k₁(1 + a) − [1 − c²((k₁² + 2k₂)/k₁ + 2(a − 2)k₁)]`
    pub doubled: f64,
    /// `k₁(1 + a) − [1 − c²((k₁² + 2k₂)/k₁ + (a − 2)k₁)]`
    pub single: f64,
}

/// Residual of the quadratic-coefficient condition in its `2(a − 2)k₁` form.
/// Reported only; the closed-form coefficients are not required to satisfy it.
pub fn check_m1p_constraint(coeffs: &DerivedCoefficients, params: &ModelParams) -> f64 {
    m1p_variants(coeffs, params).doubled
}

pub fn m1p_variants(coeffs: &DerivedCoefficients, params: &ModelParams) -> QuadraticConstraintResiduals {
    let DerivedCoefficients { c, k1, k2, .. } = *coeffs;
    let a = params.a;
    let lhs = k1 * (1.0 + a);
    let base = (k1 * k1 + 2.0 * k2) / k1;
    QuadraticConstraintResiduals {
        doubled: lhs - (1.0 - c * c * (base + 2.0 * (a - 2.0) * k1)),
        single: lhs - (1.0 - c * c * (base + (a - 2.0) * k1)),
    }
}

/// Number of wrapped images summed on each side of a periodised gaussian.
const GAUSSIAN_IMAGES: i32 = 3;

/// Descriptor of an initial profile on the circle.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialCondition {
    Constant(f64),
    Cosine { mode: usize, amplitude: f64 },
    Sine { mode: usize, amplitude: f64 },
    /// `amplitude · Σ_j exp(−(x − center + 2πj)² / (2 width²))` over 7 images.
    GaussianBump { center: f64, width: f64, amplitude: f64 },
    /// `amplitude · Σ_{k=1}^{max_mode} (a_k cos kx + b_k sin kx) / k²` with
    /// `a_k, b_k` uniform in [−1, 1] from a seeded generator.
    RandomModes { max_mode: usize, amplitude: f64, seed: u64 },
    Samples { source: String, values: Vec<f64> },
    Sum(Vec<InitialCondition>),
}

impl InitialCondition {
    pub fn build(&self, grid: &Arc<SpectralGrid>) -> Result<Field> {
        let check_mode = |mode: usize| {
            if !grid.keeps_mode(mode as i64) {
                Err(Error::InitialCondition(format!(
                    "mode {mode} exceeds the dealiasing cutoff {} for n = {}",
                    grid.dealias_cutoff(),
                    grid.n()
                )))
            } else {
                Ok(())
            }
        };
        match self {
            Self::Constant(v) => Ok(Field::constant(grid, *v)),
            Self::Cosine { mode, amplitude } => {
                check_mode(*mode)?;
                let k = *mode as f64;
                Ok(Field::from_fn(grid, |x| amplitude * (k * x).cos()))
            }
            Self::Sine { mode, amplitude } => {
                check_mode(*mode)?;
                let k = *mode as f64;
                Ok(Field::from_fn(grid, |x| amplitude * (k * x).sin()))
            }
            Self::GaussianBump { center, width, amplitude } => {
                if !(*width > 0.0) {
                    return Err(Error::InitialCondition(format!(
                        "gaussian width must be positive, got {width}"
                    )));
                }
                Ok(Field::from_fn(grid, |x| {
                    amplitude
                        * (-GAUSSIAN_IMAGES..=GAUSSIAN_IMAGES)
                            .map(|j| {
                                let d = x - center + 2.0 * PI * j as f64;
                                (-d * d / (2.0 * width * width)).exp()
                            })
                            .sum::<f64>()
                }))
            }
            Self::RandomModes { max_mode, amplitude, seed } => {
                check_mode(*max_mode)?;
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let modes: Vec<(f64, f64)> = (1..=*max_mode)
                    .map(|_| (rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0)))
                    .collect();
                Ok(Field::from_fn(grid, |x| {
                    amplitude
                        * modes
                            .iter()
                            .enumerate()
                            .map(|(i, (a, b))| {
                                let k = (i + 1) as f64;
                                (a * (k * x).cos() + b * (k * x).sin()) / (k * k)
                            })
                            .sum::<f64>()
                }))
            }
            Self::Samples { values, .. } => Field::from_values(grid, values.clone()),
            Self::Sum(terms) => {
                let mut total = Field::zeros(grid);
                for term in terms {
                    total = total.add(&term.build(grid)?);
                }
                Ok(total)
            }
        }
    }

    /// Parses `name(args)` terms joined by `+`, e.g. `constant(1) + sine(1, 0.5)`.
    ///
    /// `samples(path)` terms are resolved through `load_samples`; a
    /// `random(max_mode, amplitude)` term without a seed uses `default_seed`.
    pub fn parse_with(
        text: &str,
        default_seed: u64,
        load_samples: &dyn Fn(&str) -> std::result::Result<Vec<f64>, String>,
    ) -> std::result::Result<Self, String> {
        let mut terms = Vec::new();
        for raw in split_terms(text)? {
            terms.push(parse_term(raw.trim(), default_seed, load_samples)?);
        }
        match terms.len() {
            0 => Err("empty initial condition".into()),
            1 => Ok(terms.pop().unwrap()),
            _ => Ok(Self::Sum(terms)),
        }
    }
}

fn split_terms(text: &str) -> std::result::Result<Vec<&str>, String> {
    let mut depth = 0i32;
    let mut start = 0;
    let mut out = Vec::new();
    for (i, ch) in text.char_indices() {
        match ch {
            '(' => depth += 1,
            ')' => {
                depth -= 1;
                if depth < 0 {
                    return Err(format!("unbalanced `)` in `{text}`"));
                }
            }
            '+' if depth == 0 => {
                out.push(&text[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    if depth != 0 {
        return Err(format!("unbalanced `(` in `{text}`"));
    }
    out.push(&text[start..]);
    Ok(out)
}

fn parse_term(
    term: &str,
    default_seed: u64,
    load_samples: &dyn Fn(&str) -> std::result::Result<Vec<f64>, String>,
) -> std::result::Result<InitialCondition, String> {
    let open = term
        .find('(')
        .ok_or_else(|| format!("expected `name(args)`, got `{term}`"))?;
    if !term.ends_with(')') {
        return Err(format!("expected `)` at the end of `{term}`"));
    }
    let name = term[..open].trim();
    let inner = &term[open + 1..term.len() - 1];
    if name == "samples" {
        let source = inner.trim().to_string();
        let values = load_samples(&source)?;
        return Ok(InitialCondition::Samples { source, values });
    }
    let args: Vec<&str> = inner.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
    let num = |i: usize| -> std::result::Result<f64, String> {
        args.get(i)
            .ok_or_else(|| format!("`{name}` expects more arguments"))?
            .parse::<f64>()
            .map_err(|e| format!("bad number in `{term}`: {e}"))
    };
    let int = |i: usize| -> std::result::Result<u64, String> {
        args.get(i)
            .ok_or_else(|| format!("`{name}` expects more arguments"))?
            .parse::<u64>()
            .map_err(|e| format!("bad integer in `{term}`: {e}"))
    };
    let arity = |k: usize| {
        if args.len() == k {
            Ok(())
        } else {
            Err(format!("`{name}` takes {k} arguments, got {}", args.len()))
        }
    };
    match name {
        "constant" => {
            arity(1)?;
            Ok(InitialCondition::Constant(num(0)?))
        }
        "cosine" => {
            arity(2)?;
            Ok(InitialCondition::Cosine { mode: int(0)? as usize, amplitude: num(1)? })
        }
        "sine" => {
            arity(2)?;
            Ok(InitialCondition::Sine { mode: int(0)? as usize, amplitude: num(1)? })
        }
        "gaussian" => {
            arity(3)?;
            Ok(InitialCondition::GaussianBump { center: num(0)?, width: num(1)?, amplitude: num(2)? })
        }
        "random" => {
            if args.len() != 2 {
                arity(3)?;
            }
            Ok(InitialCondition::RandomModes {
                max_mode: int(0)? as usize,
                amplitude: num(1)?,
                seed: if args.len() == 3 { int(2)? } else { default_seed },
            })
        }
        other => Err(format!("unknown initial condition `{other}`")),
    }
}

impl FromStr for InitialCondition {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Self::parse_with(s, 0, &|path| {
            let text = std::fs::read_to_string(path).map_err(|e| format!("{path}: {e}"))?;
            text.split_whitespace()
                .map(|t| t.parse::<f64>().map_err(|e| format!("{path}: {e}")))
                .collect()
        })
    }
}

impl fmt::Display for InitialCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Constant(v) => write!(f, "constant({v:?})"),
            Self::Cosine { mode, amplitude } => write!(f, "cosine({mode}, {amplitude:?})"),
            Self::Sine { mode, amplitude } => write!(f, "sine({mode}, {amplitude:?})"),
            Self::GaussianBump { center, width, amplitude } => {
                write!(f, "gaussian({center:?}, {width:?}, {amplitude:?})")
            }
            Self::RandomModes { max_mode, amplitude, seed } => {
                write!(f, "random({max_mode}, {amplitude:?}, {seed})")
            }
            Self::Samples { source, .. } => write!(f, "samples({source})"),
            Self::Sum(terms) => {
                for (i, t) in terms.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" + ")?;
                    }
                    write!(f, "{t}")?;
                }
                Ok(())
            }
        }
    }
}

/// Builds the initial profile on `grid`.
pub fn initial_condition(kind: &InitialCondition, grid: &Arc<SpectralGrid>) -> Result<Field> {
    kind.build(grid)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn burns_examples() {
        assert_eq!(burns_speed(0.0, Branch::Right), 1.0);
        assert_eq!(burns_speed(0.0, Branch::Left), -1.0);
        let c = burns_speed(1.5, Branch::Right);
        assert!((c - 2.0).abs() < 1e-15);
        assert!((c * c - 1.5 * c - 1.0).abs() < 1e-12);
        for alpha in [-30.0, -2.0, -0.1, 0.3, 4.0, 50.0] {
            for b in [Branch::Right, Branch::Left] {
                let c = burns_speed(alpha, b);
                assert!((c * c - alpha * c - 1.0).abs() < 1e-12 * (1.0 + c * c));
            }
            assert_eq!(burns_speed(-alpha, Branch::Right), -burns_speed(alpha, Branch::Left));
        }
    }

    #[test]
    fn coefficients_at_camassa_holm_point() {
        let p = ModelParams::new(2.0, 0.0, 1.0).unwrap();
        let k = derive_coefficients(&p, Branch::Right).unwrap();
        assert!((k.c - 1.0).abs() < 1e-15);
        assert!((k.k1 - 0.5).abs() < 1e-15);
        assert!((k.k3 - 1.0 / 12.0).abs() < 1e-15);
        assert!((k.beta0_sq - 1.0 / 3.0).abs() < 1e-15);
        // k1 = 1 + 0 + k2/k1
        assert!((1.0 + k.k2 / k.k1 - k.k1).abs() < 1e-15);
    }

    #[test]
    fn coefficients_golden_ratio_speed() {
        let p = ModelParams::new(3.0, 1.0, 1.0).unwrap();
        let k = derive_coefficients(&p, Branch::Right).unwrap();
        assert!((k.c - (1.0 + 5f64.sqrt()) / 2.0).abs() < 1e-15);
        assert!(k.residuals(&p).max() < 1e-12);
    }

    #[test]
    fn excluded_parameters() {
        assert!(ModelParams::new(1.0, 0.0, 1.0).is_err());
        assert!(ModelParams::new(2.0, 0.0, 0.0).is_err());
        let p = ModelParams::new(-1.0, 0.0, 1.0).unwrap();
        assert!(matches!(
            derive_coefficients(&p, Branch::Right),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn quadratic_constraint_variants_coincide_at_a_two() {
        let p = ModelParams::new(2.0, 0.0, 1.0).unwrap();
        let k = derive_coefficients(&p, Branch::Right).unwrap();
        let r = m1p_variants(&k, &p);
        assert_eq!(r.doubled, r.single);
        assert_eq!(check_m1p_constraint(&k, &p), r.doubled);
        // k1 = 1/2, k2 = -1/4 at c = 1, a = 2: both sides equal 3/2
        assert!(r.doubled.abs() < 1e-15);
    }

    #[test]
    fn initial_profiles() {
        let g = SpectralGrid::new(64).unwrap();
        assert_eq!(
            initial_condition(&InitialCondition::Constant(0.0), &g).unwrap().max_abs(),
            0.0
        );
        let c = initial_condition(&InitialCondition::Cosine { mode: 1, amplitude: 1.0 }, &g).unwrap();
        assert!(c.max_abs_diff(&Field::from_fn(&g, f64::cos)) < 1e-15);

        let bump = InitialCondition::GaussianBump { center: PI, width: 0.5, amplitude: 1.0 };
        let f = initial_condition(&bump, &g).unwrap();
        assert!(f.min() > 0.0);
        let argmax = f
            .values()
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0;
        assert_eq!(argmax, 32);
        // direct summation over many more images agrees
        let direct = Field::from_fn(&g, |x| {
            (-40..=40)
                .map(|j: i32| {
                    let d = x - PI + 2.0 * PI * j as f64;
                    (-d * d / 0.5).exp()
                })
                .sum()
        });
        assert!(f.max_abs_diff(&direct) < 1e-15);
        // periodic: the interpolant is spectrally resolved
        let top = f.coeffs()[20..44].iter().map(|c| c.norm()).fold(0.0, f64::max);
        assert!(top < 1e-15);
    }

    #[test]
    fn mode_beyond_cutoff_rejected() {
        let g = SpectralGrid::new(32).unwrap();
        let bad = InitialCondition::Cosine { mode: 11, amplitude: 1.0 };
        assert!(matches!(bad.build(&g), Err(Error::InitialCondition(_))));
        assert!(InitialCondition::Cosine { mode: 10, amplitude: 1.0 }.build(&g).is_ok());
    }

    #[test]
    fn parse_and_display() {
        let ic: InitialCondition = "constant(1) + sine(1, -0.5) + gaussian(3.14, 0.3, 1e-3)".parse().unwrap();
        let again: InitialCondition = ic.to_string().parse().unwrap();
        assert_eq!(ic, again);
        assert!("cosine(1)".parse::<InitialCondition>().is_err());
        assert!("wave(1, 2)".parse::<InitialCondition>().is_err());
        assert!("sine(1, 2".parse::<InitialCondition>().is_err());
    }
}
