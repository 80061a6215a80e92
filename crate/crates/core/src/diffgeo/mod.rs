//! Obstacle boundaries `x₁ = F(x̄)` and their derivatives.

mod polynomial;
mod symmetric;

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use polynomial::Polynomial;
pub use symmetric::{HProfile, SymmetricH};

use crate::error::{Error, Result};
use crate::linalg::min_sym_eigenpair;

/// Largest Taylor order answered by [`Obstacle::directional_taylor`].
pub const J_MAX: usize = 16;

/// Default polar grid for [`Obstacle::check_strict_concavity`]: angles × radii.
pub const DEFAULT_CONCAVITY_GRID: (usize, usize) = (64, 32);

/// A polynomial boundary function, normalized so that `F(0) = 1` and `∇F(0) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialSurface {
    poly: Polynomial,
    /// `F - 1`, kept separately so small depths are evaluated without cancellation.
    depth: Polynomial,
    grad: Vec<Polynomial>,
    hess: Vec<Vec<Polynomial>>,
}

impl PolynomialSurface {
    /// Validates uniqueness of multi-indices and the normalization; never rewrites the input.
    pub fn new(dim: usize, terms: Vec<(Vec<u32>, f64)>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidSurface("at least one tangential variable is required".into()));
        }
        let mut seen = std::collections::BTreeSet::new();
        for (e, _) in &terms {
            if !seen.insert(e.clone()) {
                return Err(Error::InvalidSurface(format!("repeated multi-index {e:?}")));
            }
        }
        let poly = Polynomial::new(dim, terms)?;
        let c0 = poly.coefficient(&vec![0; dim]);
        if c0 != 1.0 {
            return Err(Error::InvalidSurface(format!("constant term must be 1, found {c0}")));
        }
        if !poly.homogeneous_part(1).is_zero() {
            return Err(Error::InvalidSurface("gradient at the origin must vanish (linear terms present)".into()));
        }
        Ok(Self::from_poly(poly))
    }

    fn from_poly(poly: Polynomial) -> Self {
        let grad = poly.gradient_polys();
        let hess = grad.iter().map(|g| g.gradient_polys()).collect();
        let depth = poly.add(&Polynomial::constant(poly.nvars(), -poly.coefficient(&vec![0; poly.nvars()])));
        Self { poly, depth, grad, hess }
    }

    /// Builds `F = 1 - G`.
    pub fn one_minus(g: &Polynomial) -> Result<Self> {
        let f = Polynomial::constant(g.nvars(), 1.0).add(&g.scale(-1.0));
        Self::new(g.nvars(), f.terms().to_vec())
    }

    pub fn polynomial(&self) -> &Polynomial {
        &self.poly
    }

    pub fn dim(&self) -> usize {
        self.poly.nvars()
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        self.poly.eval(x.as_slice())
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(self.dim(), |i, _| self.grad[i].eval(x.as_slice()))
    }

    fn hessian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let n = self.dim();
        let mut h = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = self.hess[i][j].eval(x.as_slice());
                h[(i, j)] = v;
                h[(j, i)] = v;
            }
        }
        h
    }
}

type ScalarField = dyn Fn(&DVector<f64>) -> f64 + Send + Sync;

/// A boundary function known only through point evaluations; derivatives are central differences
/// with step `ε^{1/(k+2)}` for the `k`-th derivative.
#[derive(Clone)]
pub struct GenericSmooth {
    dim: usize,
    name: String,
    f: Arc<ScalarField>,
}

impl fmt::Debug for GenericSmooth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GenericSmooth").field("dim", &self.dim).field("name", &self.name).finish()
    }
}

impl GenericSmooth {
    pub fn new(dim: usize, name: impl Into<String>, f: Arc<ScalarField>) -> Self {
        Self { dim, name: name.into(), f }
    }

    /// `F = 1 - exp(-1/|x̄|⁴)`, flat to infinite order at the origin.
    pub fn exp_flat(dim: usize) -> Self {
        Self::new(
            dim,
            "exp-flat",
            Arc::new(|x: &DVector<f64>| {
                let s = x.norm_squared();
                if s == 0.0 {
                    1.0
                } else {
                    1.0 - (-1.0 / (s * s)).exp()
                }
            }),
        )
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    fn step(k: u32) -> f64 {
        f64::EPSILON.powf(1.0 / f64::from(k + 2))
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        (self.f)(x)
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        let h = Self::step(1);
        let mut xp = x.clone();
        DVector::from_fn(self.dim, |i, _| {
            xp[i] = x[i] + h;
            let fp = (self.f)(&xp);
            xp[i] = x[i] - h;
            let fm = (self.f)(&xp);
            xp[i] = x[i];
            (fp - fm) / (2.0 * h)
        })
    }

    fn hessian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let h = Self::step(2);
        let n = self.dim;
        let mut m = DMatrix::zeros(n, n);
        let mut y = x.clone();
        let mut eval = |di: f64, dj: f64, i: usize, j: usize| {
            y.copy_from(x);
            y[i] += di;
            y[j] += dj;
            (self.f)(&y)
        };
        for i in 0..n {
            for j in i..n {
                let v = (eval(h, h, i, j) - eval(h, -h, i, j) - eval(-h, h, i, j) + eval(-h, -h, i, j))
                    / (4.0 * h * h);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        m
    }

    fn directional_coefficients(&self, d: &DVector<f64>, order: usize) -> Vec<f64> {
        (1..=order)
            .map(|j| {
                let h = Self::step(j as u32);
                let mut sum = 0.0;
                let mut binom = 1.0;
                for i in 0..=j {
                    let t = (j as f64 / 2.0 - i as f64) * h;
                    let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                    sum += sign * binom * (self.f)(&(d * t));
                    binom *= (j - i) as f64 / (i + 1) as f64;
                }
                let fact: f64 = (1..=j).map(|k| k as f64).product();
                sum / h.powi(j as i32) / fact
            })
            .collect()
    }
}

/// The three supported boundary representations.
#[derive(Debug, Clone)]
pub enum Surface {
    Polynomial(PolynomialSurface),
    Symmetric(SymmetricH),
    Generic(GenericSmooth),
}

impl Surface {
    pub fn dim(&self) -> usize {
        match self {
            Surface::Polynomial(p) => p.dim(),
            Surface::Symmetric(s) => s.dim(),
            Surface::Generic(g) => g.dim,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ConcavityVerdict {
    StrictlyConcaveOnGrid,
    DegenerateAt(Vec<DVector<f64>>),
    Fails(Vec<DVector<f64>>),
}

/// Sampling certificate for `∇²F < 0` away from the origin.
///
/// A grid point whose smallest eigenvalue of `-∇²F` is within tolerance of zero is degenerate.
/// Each degenerate point is probed one half radial spacing along its null direction; if every
/// probe is degenerate too the surface is flat along a segment there and the point fails.
#[derive(Debug, Clone, PartialEq)]
pub struct ConcavityReport {
    pub grid: Vec<DVector<f64>>,
    pub min_negated_hessian_eigenvalue: Vec<f64>,
    /// Smallest probe eigenvalue for degenerate points, `None` elsewhere.
    pub probe_eigenvalue: Vec<Option<f64>>,
    pub tolerance: f64,
    pub verdict: ConcavityVerdict,
}

impl ConcavityReport {
    pub fn passes(&self) -> bool {
        !matches!(self.verdict, ConcavityVerdict::Fails(_))
    }
}

/// A convex obstacle `x₁ < F(x̄)` restricted to the patch `|x̄| ≤ R`.
#[derive(Debug, Clone)]
pub struct Obstacle {
    surface: Surface,
    radius: f64,
    certificate: Option<ConcavityReport>,
}

impl Obstacle {
    pub fn new(surface: Surface, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidSurface(format!("domain radius must be positive, got {radius}")));
        }
        Ok(Self { surface, radius, certificate: None })
    }

    /// Polynomial obstacle `F = 1 - G`.
    pub fn one_minus(g: &Polynomial, radius: f64) -> Result<Self> {
        Self::new(Surface::Polynomial(PolynomialSurface::one_minus(g)?), radius)
    }

    /// Polynomial obstacle from explicit terms of `F`.
    pub fn polynomial(dim: usize, terms: Vec<(Vec<u32>, f64)>, radius: f64) -> Result<Self> {
        Self::new(Surface::Polynomial(PolynomialSurface::new(dim, terms)?), radius)
    }

    pub fn symmetric(profile: HProfile, lambda: DMatrix<f64>, radius: f64) -> Result<Self> {
        Self::new(Surface::Symmetric(SymmetricH::new(profile, lambda, radius)?), radius)
    }

    /// Attaches a concavity certificate over the whole patch.
    pub fn with_certificate(mut self, grid: (usize, usize)) -> Self {
        let report = self.check_strict_concavity(self.radius, grid);
        self.certificate = Some(report);
        self
    }

    pub fn certificate(&self) -> Option<&ConcavityReport> {
        self.certificate.as_ref()
    }

    pub fn surface(&self) -> &Surface {
        &self.surface
    }

    /// Number of tangential variables, `n - 1`.
    pub fn dim(&self) -> usize {
        self.surface.dim()
    }

    /// Ambient spatial dimension `n`.
    pub fn ambient_dim(&self) -> usize {
        self.dim() + 1
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    fn check(&self, x: &DVector<f64>) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: x.len() });
        }
        let norm = x.norm();
        if !(norm <= self.radius * (1.0 + 1e-12)) {
            return Err(Error::DomainExceeded { norm, radius: self.radius });
        }
        Ok(())
    }

    pub fn eval(&self, x: &DVector<f64>) -> Result<f64> {
        self.check(x)?;
        self.value_raw(x)
    }

    pub fn grad(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.check(x)?;
        self.grad_raw(x)
    }

    pub fn hess(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        self.check(x)?;
        self.hess_raw(x)
    }

    /// Evaluation without the patch check, for difference stencils straddling the rim.
    pub(crate) fn value_raw(&self, x: &DVector<f64>) -> Result<f64> {
        match &self.surface {
            Surface::Polynomial(p) => Ok(p.value(x)),
            Surface::Symmetric(s) => s.value(x),
            Surface::Generic(g) => Ok(g.value(x)),
        }
    }

    /// `F(x̄) - 1`, accurate to relative precision even where `F` is close to 1.
    pub fn eval_depth(&self, x: &DVector<f64>) -> Result<f64> {
        self.check(x)?;
        match &self.surface {
            Surface::Polynomial(p) => Ok(p.depth.eval(x.as_slice())),
            Surface::Symmetric(s) => Ok(-s.profile().derivatives(s.s_of(x))?.0),
            Surface::Generic(g) => Ok(g.value(x) - 1.0),
        }
    }

    pub(crate) fn grad_raw(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        match &self.surface {
            Surface::Polynomial(p) => Ok(p.gradient(x)),
            Surface::Symmetric(s) => s.gradient(x),
            Surface::Generic(g) => Ok(g.gradient(x)),
        }
    }

    pub(crate) fn hess_raw(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        match &self.surface {
            Surface::Polynomial(p) => Ok(p.hessian(x)),
            Surface::Symmetric(s) => s.hessian(x),
            Surface::Generic(g) => Ok(g.hessian(x)),
        }
    }

    /// Coefficients `c_1..c_J` of `F(s d) = 1 + Σ c_j s^j` along a unit direction.
    pub fn directional_taylor(&self, direction: &DVector<f64>, order: usize) -> Result<Vec<f64>> {
        if order > J_MAX {
            return Err(Error::OrderTooHigh { requested: order, max: J_MAX });
        }
        if direction.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: direction.len() });
        }
        let norm = direction.norm();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::NotUnit(norm));
        }
        Ok(match &self.surface {
            Surface::Polynomial(p) => p.poly.directional_coefficients(direction.as_slice(), order),
            Surface::Symmetric(s) => s.directional_coefficients(direction, order),
            Surface::Generic(g) => g.directional_coefficients(direction, order),
        })
    }

    /// Samples `-∇²F` on a polar grid of `grid.0` angles by `grid.1` radii (origin excluded).
    /// One tangential variable uses `±r`; three or more use seeded random directions.
    pub fn check_strict_concavity(&self, radius: f64, grid: (usize, usize)) -> ConcavityReport {
        let radius = radius.min(self.radius);
        let (n_dirs, n_radii) = (grid.0.max(1), grid.1.max(1));
        let dirs = self.grid_directions(n_dirs);
        let mut points = Vec::with_capacity(dirs.len() * n_radii);
        for d in &dirs {
            for k in 1..=n_radii {
                points.push(d * (radius * k as f64 / n_radii as f64));
            }
        }
        let pairs: Vec<(f64, DVector<f64>)> = points
            .iter()
            .map(|p| match self.hess_raw(p) {
                Ok(h) => min_sym_eigenpair(&(-h)),
                Err(_) => (f64::NAN, DVector::zeros(self.dim())),
            })
            .collect();
        let scale = pairs.iter().map(|(e, _)| e.abs()).filter(|e| e.is_finite()).fold(1.0_f64, f64::max);
        let tol = 1e-10 * scale;
        let delta = 0.5 * radius / n_radii as f64;
        let mut probes = vec![None; points.len()];
        let mut failing = Vec::new();
        let mut degenerate = Vec::new();
        for (i, (p, (eig, v))) in points.iter().zip(&pairs).enumerate() {
            if eig.is_nan() || *eig < -tol {
                failing.push(p.clone());
                continue;
            }
            if *eig > tol {
                continue;
            }
            let mut probe_min = f64::INFINITY;
            for sign in [1.0, -1.0] {
                let q = p + v * (sign * delta);
                if q.norm() > self.radius {
                    continue;
                }
                if let Ok(h) = self.hess_raw(&q) {
                    probe_min = probe_min.min(min_sym_eigenpair(&(-h)).0);
                }
            }
            probes[i] = Some(probe_min);
            if probe_min <= tol {
                failing.push(p.clone());
            } else {
                degenerate.push(p.clone());
            }
        }
        let verdict = if !failing.is_empty() {
            ConcavityVerdict::Fails(failing)
        } else if !degenerate.is_empty() {
            ConcavityVerdict::DegenerateAt(degenerate)
        } else {
            ConcavityVerdict::StrictlyConcaveOnGrid
        };
        ConcavityReport {
            grid: points,
            min_negated_hessian_eigenvalue: pairs.into_iter().map(|(e, _)| e).collect(),
            probe_eigenvalue: probes,
            tolerance: tol,
            verdict,
        }
    }

    fn grid_directions(&self, count: usize) -> Vec<DVector<f64>> {
        match self.dim() {
            1 => vec![DVector::from_element(1, 1.0), DVector::from_element(1, -1.0)],
            2 => (0..count)
                .map(|a| {
                    let th = 2.0 * PI * a as f64 / count as f64;
                    DVector::from_vec(vec![th.cos(), th.sin()])
                })
                .collect(),
            n => {
                let mut rng = ChaCha8Rng::seed_from_u64(0);
                (0..count)
                    .map(|_| loop {
                        let v = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
                        let norm = v.norm();
                        if norm > 1e-3 && norm <= 1.0 {
                            break v / norm;
                        }
                    })
                    .collect()
            }
        }
    }

    /// Re-expresses the obstacle in coordinates `y = Q x̄` with `Q b̄ = (-|b̄|, 0, ..)`.
    pub fn rotate_coordinates(&self, b: &DVector<f64>) -> Result<(Obstacle, DMatrix<f64>)> {
        if b.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: b.len() });
        }
        let q = rotation_to_negative_axis(b)?;
        let qt = q.transpose();
        let surface = match &self.surface {
            Surface::Polynomial(p) => Surface::Polynomial(PolynomialSurface::from_poly(p.poly.compose_linear(&qt))),
            Surface::Symmetric(s) => Surface::Symmetric(s.rotated(&q)),
            Surface::Generic(g) => {
                let inner = g.f.clone();
                let qt = qt.clone();
                Surface::Generic(GenericSmooth::new(
                    g.dim,
                    format!("{} (rotated)", g.name),
                    Arc::new(move |y: &DVector<f64>| inner(&(&qt * y))),
                ))
            }
        };
        Ok((Obstacle { surface, radius: self.radius, certificate: None }, q))
    }
}

/// Orthogonal `Q` with `Q b = -|b| e₁`: a rotation in the plane, a reflection in higher dimension.
pub fn rotation_to_negative_axis(b: &DVector<f64>) -> Result<DMatrix<f64>> {
    let norm = b.norm();
    if norm == 0.0 || !norm.is_finite() {
        return Err(Error::ZeroVector);
    }
    let u = b / norm;
    let n = b.len();
    Ok(match n {
        1 => DMatrix::from_element(1, 1, -u[0].signum()),
        2 => DMatrix::from_row_slice(2, 2, &[-u[0], -u[1], u[1], -u[0]]),
        _ => {
            let mut v = u.clone();
            v[0] += 1.0;
            let vn = v.norm_squared();
            if vn < 1e-24 {
                DMatrix::identity(n, n)
            } else {
                DMatrix::identity(n, n) - (&v * v.transpose()) * (2.0 / vn)
            }
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dvector;

    fn g(terms: &[(&[u32], f64)]) -> Polynomial {
        Polynomial::new(2, terms.iter().map(|(e, c)| (e.to_vec(), *c))).unwrap()
    }

    fn cusp() -> Obstacle {
        Obstacle::one_minus(&g(&[(&[4, 0], 1.0), (&[0, 2], 1.0)]), 0.5).unwrap()
    }

    #[test]
    fn evaluation_examples() {
        let o = cusp();
        assert_eq!(o.eval(&dvector![0.0, 0.0]).unwrap(), 1.0);
        assert!((o.eval(&dvector![-0.1, 0.06]).unwrap() - 0.9963).abs() < 1e-15);
        let s = Obstacle::symmetric(HProfile::Taylor(vec![1.0]), DMatrix::identity(2, 2), 0.5).unwrap();
        assert!((s.eval(&dvector![0.2, 0.0]).unwrap() - 0.96).abs() < 1e-15);
    }

    #[test]
    fn gradient_examples() {
        let o = cusp();
        assert_eq!(o.grad(&dvector![0.0, 0.0]).unwrap(), dvector![0.0, 0.0]);
        let gr = o.grad(&dvector![-0.1, 0.06]).unwrap();
        assert!((gr[0] - 0.004).abs() < 1e-15 && (gr[1] + 0.12).abs() < 1e-15);
        let s = Obstacle::symmetric(HProfile::Taylor(vec![0.0, 1.0]), DMatrix::identity(2, 2), 1.0).unwrap();
        let gs = s.grad(&dvector![0.5, 0.0]).unwrap();
        assert!((gs[0] + 0.5).abs() < 1e-15 && gs[1] == 0.0);
    }

    #[test]
    fn hessian_examples() {
        let p = Obstacle::one_minus(&g(&[(&[2, 0], 1.0), (&[0, 2], 1.0)]), 1.0).unwrap();
        assert_eq!(p.hess(&dvector![0.3, -0.2]).unwrap(), DMatrix::identity(2, 2) * -2.0);
        let q = Obstacle::one_minus(&g(&[(&[4, 0], 1.0), (&[0, 4], 1.0)]), 1.0).unwrap();
        assert_eq!(q.hess(&dvector![1.0, 0.0]).unwrap(), DMatrix::from_row_slice(2, 2, &[-12.0, 0.0, 0.0, 0.0]));
        let flat = Obstacle::new(Surface::Generic(GenericSmooth::exp_flat(2)), 0.5).unwrap();
        let h = flat.hess(&dvector![0.0, 0.0]).unwrap();
        assert!(h.iter().all(|v| v.abs() < 1e-6));
    }

    #[test]
    fn domain_is_enforced() {
        assert!(matches!(cusp().eval(&dvector![0.6, 0.0]), Err(Error::DomainExceeded { .. })));
        assert!(matches!(cusp().grad(&dvector![0.0, 0.0, 0.0]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn normalization_is_validated() {
        assert!(Obstacle::polynomial(2, vec![(vec![0, 0], 2.0)], 1.0).is_err());
        assert!(Obstacle::polynomial(2, vec![(vec![0, 0], 1.0), (vec![1, 0], 0.1)], 1.0).is_err());
        assert!(Obstacle::polynomial(2, vec![(vec![0, 0], 1.0), (vec![0, 2], -1.0), (vec![0, 2], 0.5)], 1.0).is_err());
    }

    #[test]
    fn taylor_examples() {
        let o = cusp();
        assert_eq!(o.directional_taylor(&dvector![1.0, 0.0], 4).unwrap(), vec![0.0, 0.0, 0.0, -1.0]);
        assert_eq!(o.directional_taylor(&dvector![0.0, 1.0], 2).unwrap(), vec![0.0, -1.0]);
        let p = Obstacle::one_minus(&g(&[(&[2, 0], 1.0), (&[0, 2], 1.0)]), 1.0).unwrap();
        let d = dvector![0.6, 0.8];
        let c = p.directional_taylor(&d, 2).unwrap();
        assert_eq!(c[0], 0.0);
        assert!((c[1] + 1.0).abs() < 1e-15);
        assert!(matches!(o.directional_taylor(&d, 17), Err(Error::OrderTooHigh { .. })));
        assert!(matches!(o.directional_taylor(&dvector![2.0, 0.0], 2), Err(Error::NotUnit(_))));
    }

    #[test]
    fn exp_flat_taylor_vanishes() {
        let s = Obstacle::symmetric(HProfile::ExpFlat, DMatrix::identity(2, 2), 0.5).unwrap();
        let c = s.directional_taylor(&dvector![1.0, 0.0], J_MAX).unwrap();
        assert!(c.iter().all(|v| *v == 0.0));
        let gen = Obstacle::new(Surface::Generic(GenericSmooth::exp_flat(2)), 0.5).unwrap();
        let c = gen.directional_taylor(&dvector![1.0, 0.0], 8).unwrap();
        assert!(c.iter().all(|v| v.abs() < 1e-6), "{c:?}");
    }

    #[test]
    fn sphere_profile_matches_closed_form() {
        let s = Obstacle::symmetric(HProfile::Sphere { radius: 2.0 }, DMatrix::identity(2, 2), 0.5).unwrap();
        let x: DVector<f64> = dvector![0.3, -0.2];
        let f: f64 = -1.0 + (4.0 - x.norm_squared()).sqrt();
        assert!((s.eval(&x).unwrap() - f).abs() < 1e-15);
        let c = s.directional_taylor(&dvector![1.0, 0.0], 4).unwrap();
        assert!((c[1] + 0.25).abs() < 1e-15 && (c[3] + 1.0 / 64.0).abs() < 1e-15);
    }

    #[test]
    fn concavity_verdicts() {
        let good = Obstacle::one_minus(&g(&[(&[4, 0], 1.0), (&[2, 2], 1.0), (&[0, 4], 1.0)]), 0.5).unwrap();
        assert_eq!(good.check_strict_concavity(0.5, DEFAULT_CONCAVITY_GRID).verdict, ConcavityVerdict::StrictlyConcaveOnGrid);

        let axes = Obstacle::one_minus(&g(&[(&[4, 0], 1.0), (&[0, 4], 1.0)]), 0.5).unwrap();
        match axes.check_strict_concavity(0.5, DEFAULT_CONCAVITY_GRID).verdict {
            ConcavityVerdict::DegenerateAt(pts) => {
                assert_eq!(pts.len(), 4 * 32);
                assert!(pts.iter().all(|p| p[0].abs() < 1e-12 || p[1].abs() < 1e-12));
            }
            v => panic!("unexpected {v:?}"),
        }

        let cyl = Obstacle::one_minus(&g(&[(&[0, 2], 1.0)]), 0.5).unwrap();
        match cyl.check_strict_concavity(0.5, DEFAULT_CONCAVITY_GRID).verdict {
            ConcavityVerdict::Fails(pts) => {
                assert!(pts.iter().any(|p| p[1].abs() < 1e-12 && p[0] > 0.0));
                assert!(pts.iter().any(|p| p[1].abs() < 1e-12 && p[0] < 0.0));
            }
            v => panic!("unexpected {v:?}"),
        }

        let saddle = Obstacle::polynomial(2, vec![(vec![0, 0], 1.0), (vec![2, 0], 1.0), (vec![0, 2], -1.0)], 0.5).unwrap();
        assert!(!saddle.check_strict_concavity(0.5, (16, 8)).passes());
    }

    #[test]
    fn rotation_examples() {
        let o = cusp();
        let (_, q) = o.rotate_coordinates(&dvector![-1.0, 0.0]).unwrap();
        assert_eq!(q, DMatrix::identity(2, 2));

        let (r, q) = o.rotate_coordinates(&dvector![0.0, -1.0]).unwrap();
        let Surface::Polynomial(p) = r.surface() else { panic!() };
        assert_eq!(p.polynomial().coefficient(&[0, 4]), -1.0);
        assert_eq!(p.polynomial().coefficient(&[2, 0]), -1.0);
        assert!((&q * dvector![0.0, -1.0] - dvector![-1.0, 0.0]).norm() < 1e-15);

        let (_, q) = o.rotate_coordinates(&dvector![3.0, 4.0]).unwrap();
        let rb = &q * dvector![3.0, 4.0];
        assert!((rb - dvector![-5.0, 0.0]).norm() < 1e-14);
        assert!(matches!(o.rotate_coordinates(&dvector![0.0, 0.0]), Err(Error::ZeroVector)));
    }

    #[test]
    fn rotation_in_three_variables_hits_negative_axis() {
        let b = dvector![0.3, -1.2, 0.4];
        let q = rotation_to_negative_axis(&b).unwrap();
        let rb = &q * &b;
        assert!((rb - dvector![-b.norm(), 0.0, 0.0]).norm() < 1e-14);
        assert!((q.transpose() * &q - DMatrix::identity(3, 3)).norm() < 1e-14);
    }
}
