//! Fourier collocation on the periodic interval [0, 2π).
//!
//! A [`Field`] stores nodal samples on a [`SpectralGrid`] and synchronises its
//! Fourier coefficients lazily. All operators here are diagonal in Fourier space
//! except the pointwise products and the composition with a circle
//! diffeomorphism, which goes through exact trigonometric interpolation.

use std::f64::consts::PI;
use std::fmt;
use std::sync::{Arc, OnceLock};

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Tolerance on |φ(y) − x| when inverting a circle map.
pub const INVERSION_TOL: f64 = 1e-12;
/// Newton iteration cap for [`invert_diffeo`].
pub const INVERSION_MAX_ITER: usize = 50;

/// Uniform periodic grid with `n` nodes `x_j = 2πj/n`.
pub struct SpectralGrid {
    n: usize,
    nodes: Vec<f64>,
    wavenumbers: Vec<i64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for SpectralGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpectralGrid").field("n", &self.n).finish()
    }
}

impl SpectralGrid {
    pub fn new(n: usize) -> Result<Arc<Self>> {
        if n < 8 || n % 2 != 0 {
            return Err(Error::InvalidGrid(format!(
                "node count must be even and at least 8, got {n}"
            )));
        }
        let h = 2.0 * PI / n as f64;
        let nodes = (0..n).map(|j| j as f64 * h).collect();
        // FFT ordering: 0, 1, ..., n/2, -n/2+1, ..., -1
        let wavenumbers = (0..n)
            .map(|j| if j <= n / 2 { j as i64 } else { j as i64 - n as i64 })
            .collect();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        Ok(Arc::new(Self {
            n,
            nodes,
            wavenumbers,
            forward,
            inverse,
        }))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Wavenumbers in FFT storage order.
    pub fn wavenumbers(&self) -> &[i64] {
        &self.wavenumbers
    }

    pub fn spacing(&self) -> f64 {
        2.0 * PI / self.n as f64
    }

    pub fn nyquist(&self) -> i64 {
        (self.n / 2) as i64
    }

    /// Largest wavenumber kept by the 2/3 rule.
    pub fn dealias_cutoff(&self) -> i64 {
        (self.n / 3) as i64
    }

    pub fn keeps_mode(&self, k: i64) -> bool {
        3 * k.unsigned_abs() as usize <= self.n
    }

    fn forward(&self, values: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward.process(&mut buf);
        let scale = 1.0 / self.n as f64;
        buf.iter_mut().for_each(|c| *c *= scale);
        buf
    }

    fn inverse(&self, mut coeffs: Vec<Complex64>) -> Vec<f64> {
        self.inverse.process(&mut coeffs);
        coeffs.into_iter().map(|c| c.re).collect()
    }
}

/// Real periodic function sampled on a grid.
#[derive(Clone)]
pub struct Field {
    grid: Arc<SpectralGrid>,
    values: Vec<f64>,
    coeffs: OnceLock<Arc<[Complex64]>>,
}

impl fmt::Debug for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Field")
            .field("n", &self.grid.n)
            .field("values", &self.values)
            .finish()
    }
}

impl Field {
    pub fn from_values(grid: &Arc<SpectralGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n {
            return Err(Error::GridMismatch {
                left: grid.n,
                right: values.len(),
            });
        }
        Ok(Self::new_unchecked(grid, values))
    }

    fn new_unchecked(grid: &Arc<SpectralGrid>, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.n);
        Self {
            grid: Arc::clone(grid),
            values,
            coeffs: OnceLock::new(),
        }
    }

    pub fn from_fn(grid: &Arc<SpectralGrid>, mut f: impl FnMut(f64) -> f64) -> Self {
        let values = grid.nodes.iter().map(|&x| f(x)).collect();
        Self::new_unchecked(grid, values)
    }

    pub fn zeros(grid: &Arc<SpectralGrid>) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: &Arc<SpectralGrid>, value: f64) -> Self {
        Self::new_unchecked(grid, vec![value; grid.n])
    }

    /// Builds a field from coefficients in FFT order; the imaginary part of the
    /// synthesised samples is discarded.
    pub fn from_coeffs(grid: &Arc<SpectralGrid>, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.n {
            return Err(Error::GridMismatch {
                left: grid.n,
                right: coeffs.len(),
            });
        }
        Ok(Self::new_unchecked(grid, grid.inverse(coeffs)))
    }

    pub fn grid(&self) -> &Arc<SpectralGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Normalised coefficients `ĉ_k = (1/n) Σ_j f_j e^{-ik x_j}` in FFT order.
    pub fn coeffs(&self) -> &[Complex64] {
        self.coeffs
            .get_or_init(|| self.grid.forward(&self.values).into())
    }

    pub fn same_grid(&self, other: &Field) -> Result<()> {
        if self.grid.n != other.grid.n {
            return Err(Error::GridMismatch {
                left: self.grid.n,
                right: other.grid.n,
            });
        }
        Ok(())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Self::new_unchecked(&self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    /// Pointwise combination of two fields on the same grid.
    pub fn zip_map(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Field {
        assert_eq!(self.grid.n, other.grid.n, "fields live on different grids");
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Self::new_unchecked(&self.grid, values)
    }

    pub fn scale(&self, s: f64) -> Field {
        self.map(|v| s * v)
    }

    /// `self + Σ c_i f_i`, evaluated nodewise in a fixed order.
    pub fn lincomb(&self, terms: &[(f64, &Field)]) -> Field {
        let mut out = self.values.clone();
        for &(c, f) in terms {
            assert_eq!(f.grid.n, self.grid.n, "fields live on different grids");
            if c == 0.0 {
                continue;
            }
            out.iter_mut().zip(&f.values).for_each(|(o, &v)| *o += c * v);
        }
        Self::new_unchecked(&self.grid, out)
    }

    /// Unprojected collocation product.
    pub fn mul(&self, other: &Field) -> Field {
        self.zip_map(other, |a, b| a * b)
    }

    pub fn add(&self, other: &Field) -> Field {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Field) -> Field {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Field) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Trapezoidal quadrature of ∫₀^{2π} f dx.
    pub fn integral(&self) -> f64 {
        self.grid.spacing() * self.values.iter().sum::<f64>()
    }

    /// `‖f‖²_{H^s} = 2π Σ_k (1 + k²)^s |ĉ_k|²`.
    pub fn sobolev_norm_sq(&self, s: f64) -> f64 {
        let total: f64 = self
            .coeffs()
            .iter()
            .zip(self.grid.wavenumbers())
            .map(|(c, &k)| (1.0 + (k * k) as f64).powf(s) * c.norm_sqr())
            .sum();
        2.0 * PI * total
    }

    pub fn apply_multiplier(&self, symbol: impl Fn(i64) -> Complex64) -> Field {
        let coeffs: Vec<Complex64> = self
            .coeffs()
            .iter()
            .zip(self.grid.wavenumbers())
            .map(|(&c, &k)| c * symbol(k))
            .collect();
        Self::new_unchecked(&self.grid, self.grid.inverse(coeffs))
    }

    /// Exact trigonometric interpolant of this field.
    pub fn interpolant(&self) -> Interpolant {
        let half = self.grid.n / 2;
        Interpolant {
            coeffs: self.coeffs()[..=half].to_vec(),
        }
    }
}

/// Direct Fourier-series evaluation of a band-limited periodic function.
#[derive(Debug, Clone)]
pub struct Interpolant {
    /// ĉ_0 ..= ĉ_{n/2}
    coeffs: Vec<Complex64>,
}

impl Interpolant {
    // e^{ikx} is built by recurrence and re-seeded this often to bound drift
    const RESEED: usize = 32;

    pub fn eval(&self, x: f64) -> f64 {
        self.eval_with_derivative(x).0
    }

    /// Value and x-derivative of the interpolant at `x`.
    pub fn eval_with_derivative(&self, x: f64) -> (f64, f64) {
        let half = self.coeffs.len() - 1;
        let (s1, c1) = x.sin_cos();
        let step = Complex64::new(c1, s1);
        let mut w = Complex64::new(1.0, 0.0);
        let mut value = self.coeffs[0].re;
        let mut slope = 0.0;
        for k in 1..half {
            if k % Self::RESEED == 0 {
                let (s, c) = (k as f64 * x).sin_cos();
                w = Complex64::new(c, s);
            } else {
                w *= step;
            }
            let cw = self.coeffs[k] * w;
            value += 2.0 * cw.re;
            slope -= 2.0 * k as f64 * cw.im;
        }
        // Nyquist term contributes ĉ_{n/2} cos(n x / 2)
        let (s, c) = (half as f64 * x).sin_cos();
        let nyq = self.coeffs[half].re;
        value += nyq * c;
        slope -= half as f64 * nyq * s;
        (value, slope)
    }
}

fn i_times(k: f64) -> Complex64 {
    Complex64::new(0.0, k)
}

/// Spectral derivative; the Nyquist mode is dropped.
pub fn derivative(f: &Field) -> Field {
    let nyq = f.grid.nyquist();
    f.apply_multiplier(|k| if k == nyq { Complex64::default() } else { i_times(k as f64) })
}

/// `A u = u − u_xx`.
pub fn helmholtz_apply(u: &Field) -> Field {
    u.apply_multiplier(|k| Complex64::new(1.0 + (k * k) as f64, 0.0))
}

/// `A⁻¹ m`.
pub fn helmholtz_invert(m: &Field) -> Field {
    m.apply_multiplier(|k| Complex64::new(1.0 / (1.0 + (k * k) as f64), 0.0))
}

/// `A⁻¹D w` through its symbol `ik / (1 + k²)`.
pub fn ainv_d(w: &Field) -> Field {
    let nyq = w.grid.nyquist();
    w.apply_multiplier(|k| {
        if k == nyq {
            Complex64::default()
        } else {
            i_times(k as f64 / (1.0 + (k * k) as f64))
        }
    })
}

/// `(1 − D)⁻¹ w`, with the same Nyquist convention as [`derivative`].
pub fn solve_one_minus_d(w: &Field) -> Field {
    let nyq = w.grid.nyquist();
    w.apply_multiplier(|k| {
        let d = if k == nyq { 0.0 } else { k as f64 };
        Complex64::new(1.0, -d).inv()
    })
}

/// `(1 + D)⁻¹ w`.
pub fn solve_one_plus_d(w: &Field) -> Field {
    let nyq = w.grid.nyquist();
    w.apply_multiplier(|k| {
        let d = if k == nyq { 0.0 } else { k as f64 };
        Complex64::new(1.0, d).inv()
    })
}

/// `A⁻¹D w = ½[(1 − D)⁻¹ − (1 + D)⁻¹] w`, from `A = (1 − D)(1 + D)`.
pub fn ainv_d_factorized(w: &Field) -> Field {
    let minus = solve_one_minus_d(w);
    let plus = solve_one_plus_d(w);
    minus.zip_map(&plus, |a, b| 0.5 * (a - b))
}

/// Zeroes every mode with `|k| > n/3`.
pub fn dealias(f: &Field) -> Field {
    let grid = Arc::clone(&f.grid);
    f.apply_multiplier(|k| {
        if grid.keeps_mode(k) {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::default()
        }
    })
}

/// Collocation product followed by 2/3-rule truncation.
pub fn multiply_dealiased(f: &Field, g: &Field) -> Result<Field> {
    f.same_grid(g)?;
    Ok(dealias(&f.mul(g)))
}

/// Evaluates the trigonometric interpolant of `f` at arbitrary points.
pub fn evaluate_at(f: &Field, points: &[f64]) -> Vec<f64> {
    let interp = f.interpolant();
    points.par_iter().map(|&x| interp.eval(x)).collect()
}

/// Orientation-preserving circle map `φ(x) = x + d(x)` with periodic `d`.
#[derive(Debug, Clone)]
pub struct DiffeoMap {
    displacement: Field,
}

impl DiffeoMap {
    pub fn identity(grid: &Arc<SpectralGrid>) -> Self {
        Self {
            displacement: Field::zeros(grid),
        }
    }

    pub fn translation(grid: &Arc<SpectralGrid>, shift: f64) -> Self {
        Self {
            displacement: Field::constant(grid, shift),
        }
    }

    pub fn from_displacement(displacement: Field) -> Self {
        Self { displacement }
    }

    pub fn displacement(&self) -> &Field {
        &self.displacement
    }

    pub fn grid(&self) -> &Arc<SpectralGrid> {
        self.displacement.grid()
    }

    pub fn is_identity(&self) -> bool {
        self.displacement.values().iter().all(|&d| d == 0.0)
    }

    /// `φ(x_j)` (lifted, not reduced mod 2π).
    pub fn node_images(&self) -> Vec<f64> {
        self.grid()
            .nodes()
            .iter()
            .zip(self.displacement.values())
            .map(|(x, d)| x + d)
            .collect()
    }

    /// `φ_x = 1 + d_x` at the nodes.
    pub fn jacobian(&self) -> Field {
        derivative(&self.displacement).map(|v| 1.0 + v)
    }

    pub fn check_orientation(&self) -> Result<()> {
        check_jacobian(&self.jacobian())
    }
}

fn check_jacobian(jac: &Field) -> Result<()> {
    match jac.values().iter().position(|&j| !(j > 0.0)) {
        Some(node) => Err(Error::NonDiffeomorphism {
            node,
            detail: format!("phi_x = {:e}", jac.values()[node]),
        }),
        None => Ok(()),
    }
}

/// `f ∘ φ` sampled at the nodes.
pub fn compose(f: &Field, phi: &DiffeoMap) -> Result<Field> {
    f.same_grid(phi.displacement())?;
    if phi.is_identity() {
        return Ok(f.clone());
    }
    phi.check_orientation()?;
    let values = evaluate_at(f, &phi.node_images());
    Ok(Field::new_unchecked(f.grid(), values))
}

/// Inverts a circle map node by node with safeguarded Newton iteration.
///
/// For each node `x_j` the preimage is bracketed between two consecutive grid
/// nodes using the monotone lifted samples of `φ`, and Newton steps that leave
/// the bracket (or meet a non-positive slope) are replaced by bisection.
pub fn invert_diffeo(phi: &DiffeoMap) -> Result<DiffeoMap> {
    let grid = Arc::clone(phi.grid());
    if phi.is_identity() {
        return Ok(DiffeoMap::identity(&grid));
    }
    check_jacobian(&phi.jacobian())?;

    let n = grid.n();
    let images = phi.node_images();
    for i in 0..n {
        let next = if i + 1 < n { images[i + 1] } else { images[0] + 2.0 * PI };
        if !(next > images[i]) {
            return Err(Error::NonDiffeomorphism {
                node: i,
                detail: "lifted samples are not strictly increasing".into(),
            });
        }
    }

    let interp = phi.displacement().interpolant();
    let h = grid.spacing();
    let displacement = grid
        .nodes()
        .par_iter()
        .enumerate()
        .map(|(j, &target)| {
            let wraps = ((target - images[0]) / (2.0 * PI)).floor();
            let t = target - 2.0 * PI * wraps;
            // images[i] <= t < images[i + 1], with images[n] = images[0] + 2π
            let i = images.partition_point(|&p| p <= t).saturating_sub(1);
            let upper = if i + 1 < n { images[i + 1] } else { images[0] + 2.0 * PI };
            let lo = i as f64 * h;
            let y = solve_monotone(&interp, t, lo, lo + h, images[i], upper)
                .ok_or(Error::Convergence {
                    node: j,
                    iterations: INVERSION_MAX_ITER,
                })?;
            Ok(y + 2.0 * PI * wraps - target)
        })
        .collect::<Result<Vec<f64>>>()?;

    Ok(DiffeoMap::from_displacement(Field::new_unchecked(
        &grid,
        displacement,
    )))
}

/// Solves `y + d(y) = t` for `y` in `[lo, hi]` where `φ(lo) = p_lo <= t < p_hi = φ(hi)`.
fn solve_monotone(interp: &Interpolant, t: f64, mut lo: f64, mut hi: f64, p_lo: f64, p_hi: f64) -> Option<f64> {
    let mut y = lo + (t - p_lo) / (p_hi - p_lo) * (hi - lo);
    for _ in 0..INVERSION_MAX_ITER {
        let (d, dd) = interp.eval_with_derivative(y);
        let g = y + d - t;
        if g.abs() <= INVERSION_TOL {
            return Some(y);
        }
        if g < 0.0 {
            lo = y;
        } else {
            hi = y;
        }
        if hi - lo <= 4.0 * f64::EPSILON * hi.abs().max(1.0) {
            return Some(0.5 * (lo + hi));
        }
        let slope = 1.0 + dd;
        let newton = y - g / slope;
        y = if slope > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid(n: usize) -> Arc<SpectralGrid> {
        SpectralGrid::new(n).unwrap()
    }

    fn random_field(grid: &Arc<SpectralGrid>, kmax: usize, rng: &mut ChaCha8Rng) -> Field {
        let modes: Vec<(f64, f64)> = (0..=kmax)
            .map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        Field::from_fn(grid, |x| {
            modes
                .iter()
                .enumerate()
                .map(|(k, (a, b))| {
                    let kf = k as f64;
                    (a * (kf * x).cos() + b * (kf * x).sin()) / (1.0 + kf)
                })
                .sum()
        })
    }

    #[test]
    fn grid_rejects_bad_sizes() {
        assert!(SpectralGrid::new(6).is_err());
        assert!(SpectralGrid::new(31).is_err());
        let g = grid(16);
        assert_eq!(g.wavenumbers()[8], 8);
        assert_eq!(g.wavenumbers()[9], -7);
        assert!((g.nodes()[1] - 2.0 * PI / 16.0).abs() < 1e-15);
    }

    #[test]
    fn round_trip_and_conjugate_symmetry() {
        let g = grid(64);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let f = random_field(&g, 20, &mut rng);
        let back = Field::from_coeffs(&g, f.coeffs().to_vec()).unwrap();
        assert!(back.max_abs_diff(&f) <= 1e-12 * f.max_abs());
        let c = f.coeffs();
        for j in 1..64 {
            assert!((c[j] - c[64 - j].conj()).norm() < 1e-15);
        }
    }

    #[test]
    fn derivative_examples() {
        let g = grid(32);
        let d = derivative(&Field::from_fn(&g, f64::sin));
        assert!(d.max_abs_diff(&Field::from_fn(&g, f64::cos)) < 1e-12);
        assert!(derivative(&Field::constant(&g, 1.0)).max_abs() < 1e-14);
        let f = Field::from_fn(&g, |x| (3.0 * x).sin() + (5.0 * x).cos());
        let exact = Field::from_fn(&g, |x| 3.0 * (3.0 * x).cos() - 5.0 * (5.0 * x).sin());
        assert!(derivative(&f).max_abs_diff(&exact) < 1e-12);
    }

    #[test]
    fn derivative_zeroes_nyquist() {
        let g = grid(16);
        let f = Field::from_fn(&g, |x| (8.0 * x).cos());
        assert!(derivative(&f).max_abs() < 1e-13);
    }

    #[test]
    fn helmholtz_examples() {
        let g = grid(32);
        let cos = Field::from_fn(&g, f64::cos);
        assert!(helmholtz_apply(&cos).max_abs_diff(&cos.scale(2.0)) < 1e-12);
        let c0 = Field::constant(&g, 0.7);
        assert!(helmholtz_apply(&c0).max_abs_diff(&c0) < 1e-14);
        let s2 = Field::from_fn(&g, |x| (2.0 * x).sin());
        assert!(helmholtz_apply(&s2).max_abs_diff(&s2.scale(5.0)) < 1e-12);

        assert!(helmholtz_invert(&cos.scale(2.0)).max_abs_diff(&cos) < 1e-12);
        assert!(helmholtz_invert(&c0).max_abs_diff(&c0) < 1e-14);
        assert!(helmholtz_invert(&s2.scale(5.0)).max_abs_diff(&s2) < 1e-12);
    }

    #[test]
    fn ainv_d_examples() {
        let g = grid(32);
        assert!(ainv_d(&Field::constant(&g, 3.0)).max_abs() < 1e-14);
        let r = ainv_d(&Field::from_fn(&g, f64::sin));
        assert!(r.max_abs_diff(&Field::from_fn(&g, |x| 0.5 * x.cos())) < 1e-12);

        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10 {
            let w = Field::from_fn(&g, |x| rng.gen_range(-1.0..1.0) + x.sin());
            let a = ainv_d(&w);
            let b = ainv_d_factorized(&w);
            assert!(a.max_abs_diff(&b) < 1e-12 * (1.0 + w.max_abs()));
        }
    }

    #[test]
    fn dealiased_products() {
        let g = grid(32);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let f = random_field(&g, 10, &mut rng);
        let one = Field::constant(&g, 1.0);
        assert!(multiply_dealiased(&f, &one).unwrap().max_abs_diff(&f) < 1e-13);

        let s = Field::from_fn(&g, f64::sin);
        let sq = multiply_dealiased(&s, &s).unwrap();
        assert!(sq.max_abs_diff(&Field::from_fn(&g, |x| 0.5 - 0.5 * (2.0 * x).cos())) < 1e-13);

        // 2k = 12 > 32/3: the cos 12x part is removed, the mean survives
        let s6 = Field::from_fn(&g, |x| (6.0 * x).sin());
        let sq6 = multiply_dealiased(&s6, &s6).unwrap();
        assert!(sq6.max_abs_diff(&Field::constant(&g, 0.5)) < 1e-13);

        let other = Field::zeros(&grid(16));
        assert!(matches!(
            multiply_dealiased(&f, &other),
            Err(Error::GridMismatch { .. })
        ));
    }

    #[test]
    fn evaluation_off_grid() {
        let g = grid(32);
        let s = Field::from_fn(&g, f64::sin);
        let v = evaluate_at(&s, &[PI / 7.0]);
        assert!((v[0] - (PI / 7.0).sin()).abs() < 1e-12);

        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let f = random_field(&g, 15, &mut rng);
        let at_nodes = evaluate_at(&f, g.nodes());
        for (a, b) in at_nodes.iter().zip(f.values()) {
            assert!((a - b).abs() < 1e-12);
        }

        // shift theorem: f(x + h) has coefficients ĉ_k e^{ikh}
        let shift = 0.123;
        let shifted: Vec<f64> = g.nodes().iter().map(|x| x + shift).collect();
        let direct = evaluate_at(&f, &shifted);
        let nyq = g.nyquist();
        let via_fourier = f.apply_multiplier(|k| {
            if k == nyq {
                Complex64::new((k as f64 * shift).cos(), 0.0)
            } else {
                Complex64::from_polar(1.0, k as f64 * shift)
            }
        });
        for (a, b) in direct.iter().zip(via_fourier.values()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn composition_examples() {
        let g = grid(64);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let f = random_field(&g, 12, &mut rng);
        assert_eq!(compose(&f, &DiffeoMap::identity(&g)).unwrap().values(), f.values());

        let c0 = 0.4;
        let shifted = compose(&Field::from_fn(&g, f64::sin), &DiffeoMap::translation(&g, c0)).unwrap();
        assert!(shifted.max_abs_diff(&Field::from_fn(&g, |x| (x + c0).sin())) < 1e-12);

        let phi = DiffeoMap::from_displacement(Field::from_fn(&g, |x| 0.3 * x.sin()));
        let psi = invert_diffeo(&phi).unwrap();
        let back = compose(&compose(&f, &phi).unwrap(), &psi).unwrap();
        assert!(back.max_abs_diff(&f) < 1e-8);
    }

    #[test]
    fn compose_rejects_folded_map() {
        let g = grid(32);
        let phi = DiffeoMap::from_displacement(Field::from_fn(&g, |x| 1.5 * x.sin()));
        let f = Field::from_fn(&g, f64::cos);
        assert!(matches!(compose(&f, &phi), Err(Error::NonDiffeomorphism { .. })));
        assert!(matches!(invert_diffeo(&phi), Err(Error::NonDiffeomorphism { .. })));
    }

    #[test]
    fn inversion_examples() {
        let g = grid(64);
        let id = invert_diffeo(&DiffeoMap::identity(&g)).unwrap();
        assert!(id.displacement().max_abs() == 0.0);

        let c0 = 0.9;
        let inv = invert_diffeo(&DiffeoMap::translation(&g, c0)).unwrap();
        assert!(inv.displacement().max_abs_diff(&Field::constant(&g, -c0)) < 1e-12);

        let phi = DiffeoMap::from_displacement(Field::from_fn(&g, |x| 0.3 * x.sin()));
        let psi = invert_diffeo(&phi).unwrap();
        for (&x, &y) in g.nodes().iter().zip(&psi.node_images()) {
            assert!((y + 0.3 * y.sin() - x).abs() < 1e-10);
        }
    }

    #[test]
    fn inversion_handles_large_translation() {
        let g = grid(32);
        let phi = DiffeoMap::from_displacement(Field::from_fn(&g, |x| 7.0 + 0.2 * (2.0 * x).cos()));
        let psi = invert_diffeo(&phi).unwrap();
        for (&x, &y) in g.nodes().iter().zip(&psi.node_images()) {
            assert!((y + 7.0 + 0.2 * (2.0 * y).cos() - x).abs() < 1e-10);
        }
    }
}
