//! Grazing sets near the apex: defining functions, tangency order, curve tracing,
//! regularity estimates, slice counts and the shadow-boundary flowout.
//!
//! Every grazing function here is negative exactly where the boundary is illuminated,
//! so sign changes locate the grazing set regardless of kind.

mod flowout;
mod regularity;
mod report;
mod slice;
mod trace;

use std::f64::consts::PI;
use std::fmt;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::diffgeo::{Obstacle, Polynomial, Surface, SymmetricH, J_MAX};
use crate::error::{Error, Result};
use crate::linalg::min_sym_eigenpair;
use crate::phases::{xi_incoming, IncomingPhase};

pub use flowout::{flowout_ray, shadow_boundary_flowout, FlowoutRay, FLOWOUT_GRAZING_TOL};
pub use regularity::{estimate_regularity, RegularityEstimate, RegularityVerdict, DEFAULT_FIT_WINDOW};
pub use report::{gs_assumption_report, GsOptions, GsReport, GsVerdict};
pub use slice::{sign_changes_1d, slice_grazing_count, SliceCount};
pub use trace::{trace_grazing_curve, Branch, GrazingCurve, Termination, TraceOptions};

/// A Taylor coefficient counts as zero below `ORDER_TOL · max(1, max |c_j|)`.
pub const ORDER_TOL: f64 = 1e-9;

/// Positive-definiteness threshold of [`check_u1ww`], relative to the largest coefficient.
pub const PD_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub enum GrazingFunction {
    /// `𝓗 = F - b₁ - ∇F·(x̄ - b̄)` for a point source `b = (b₁, b̄)`; equals `-ρμ`.
    SphericalH { b1: f64, bbar: DVector<f64> },
    /// `θ₁ - ∇F·θ̄`, the negated margin of a plane wave.
    PlanarG { theta1: f64, theta_bar: DVector<f64> },
    /// `ζ = -h/h'(|Λx̄|²) + 2|Λx̄|² - 2Λx̄·Λb̄` for `F = 1 - h(|Λx̄|²)` and a source at `(1, b̄)`.
    /// `𝓗 = h'ζ`, so the zero sets agree.
    SymmetricZeta { bbar: DVector<f64> },
}

impl GrazingFunction {
    /// The natural defining function of a plane or spherical phase.
    pub fn for_phase(phase: &IncomingPhase) -> Result<Self> {
        match phase {
            IncomingPhase::Plane { theta } => Ok(GrazingFunction::PlanarG {
                theta1: theta[0],
                theta_bar: theta.rows(1, theta.len() - 1).into_owned(),
            }),
            IncomingPhase::Spherical { source } => Ok(GrazingFunction::SphericalH {
                b1: source[0],
                bbar: source.rows(1, source.len() - 1).into_owned(),
            }),
            IncomingPhase::GeneralConvex(p) => {
                Err(Error::Unsupported(format!("no closed-form grazing function for phase {}", p.name())))
            }
        }
    }

    /// Like [`GrazingFunction::for_phase`], but switches to `ζ` for a symmetric obstacle lit from
    /// `(1, b̄)`: `ζ` keeps a nonzero gradient where `𝓗 = h'ζ` is flattened by `h'`.
    pub fn preferred(obstacle: &Obstacle, phase: &IncomingPhase) -> Result<Self> {
        let gf = Self::for_phase(phase)?;
        match (&gf, obstacle.surface()) {
            (GrazingFunction::SphericalH { b1, bbar }, Surface::Symmetric(_)) if (b1 - 1.0).abs() <= 1e-12 => {
                Ok(GrazingFunction::SymmetricZeta { bbar: bbar.clone() })
            }
            _ => Ok(gf),
        }
    }

    /// Unit tangential direction of the ray through the apex, `ξ̄ⁱ(0)/|ξ̄ⁱ(0)|`.
    pub fn apex_direction(&self) -> Result<DVector<f64>> {
        let d = match self {
            GrazingFunction::SphericalH { bbar, .. } | GrazingFunction::SymmetricZeta { bbar } => -bbar,
            GrazingFunction::PlanarG { theta_bar, .. } => theta_bar.clone(),
        };
        let norm = d.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::ZeroVector);
        }
        Ok(d / norm)
    }

    pub fn dim(&self) -> usize {
        match self {
            GrazingFunction::SphericalH { bbar, .. } | GrazingFunction::SymmetricZeta { bbar } => bbar.len(),
            GrazingFunction::PlanarG { theta_bar, .. } => theta_bar.len(),
        }
    }

    fn check(&self, obstacle: &Obstacle) -> Result<()> {
        if self.dim() != obstacle.dim() {
            return Err(Error::DimensionMismatch { expected: obstacle.dim(), got: self.dim() });
        }
        Ok(())
    }

    pub fn value(&self, obstacle: &Obstacle, x: &DVector<f64>) -> Result<f64> {
        self.check(obstacle)?;
        match self {
            GrazingFunction::SphericalH { b1, bbar } => {
                let depth = obstacle.eval_depth(x)?;
                let g = obstacle.grad(x)?;
                Ok(depth + (1.0 - b1) - g.dot(&(x - bbar)))
            }
            GrazingFunction::PlanarG { theta1, theta_bar } => Ok(theta1 - obstacle.grad(x)?.dot(theta_bar)),
            GrazingFunction::SymmetricZeta { bbar } => {
                obstacle.eval(x)?;
                symmetric_zeta_raw(symmetric_surface(obstacle)?, bbar, x)
            }
        }
    }

    pub fn gradient(&self, obstacle: &Obstacle, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.check(obstacle)?;
        match self {
            GrazingFunction::SphericalH { bbar, .. } => Ok(-(obstacle.hess(x)? * (x - bbar))),
            GrazingFunction::PlanarG { theta_bar, .. } => Ok(-(obstacle.hess(x)? * theta_bar)),
            GrazingFunction::SymmetricZeta { bbar } => {
                obstacle.eval(x)?;
                let s = symmetric_surface(obstacle)?;
                let sv = s.s_of(x);
                let rp = s.profile().ratio_derivative(sv)?;
                let gram = s.gram();
                Ok(gram * x * (2.0 * (2.0 - rp)) - gram * bbar * 2.0)
            }
        }
    }

    /// Value and gradient together.
    pub fn value_gradient(&self, obstacle: &Obstacle, x: &DVector<f64>) -> Result<(f64, DVector<f64>)> {
        Ok((self.value(obstacle, x)?, self.gradient(obstacle, x)?))
    }
}

fn symmetric_surface(obstacle: &Obstacle) -> Result<&SymmetricH> {
    match obstacle.surface() {
        Surface::Symmetric(s) => Ok(s),
        _ => Err(Error::Unsupported("zeta needs an obstacle of the form 1 - h(|Λx̄|²)".into())),
    }
}

fn symmetric_zeta_raw(s: &SymmetricH, bbar: &DVector<f64>, x: &DVector<f64>) -> Result<f64> {
    if x.iter().all(|v| *v == 0.0) {
        return Ok(0.0);
    }
    let lx = s.lambda() * x;
    let sv = lx.norm_squared();
    let r = s.profile().ratio(sv)?;
    Ok(-r + 2.0 * sv - 2.0 * lx.dot(&(s.lambda() * bbar)))
}

/// Evaluates the grazing function at `x̄`.
pub fn grazing_residual(gf: &GrazingFunction, obstacle: &Obstacle, x: &DVector<f64>) -> Result<f64> {
    gf.value(obstacle, x)
}

/// `ζ(x̄)` for a symmetric obstacle and a source at `(1, b̄)`.
pub fn symmetric_zeta(obstacle: &Obstacle, bbar: &DVector<f64>, x: &DVector<f64>) -> Result<f64> {
    GrazingFunction::SymmetricZeta { bbar: bbar.clone() }.value(obstacle, x)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GrazingOrder {
    /// First nonzero coefficient at even index; diffractive when it is negative.
    Even { order: usize, diffractive: bool },
    /// Inflection: first nonzero coefficient at an odd index.
    Odd(usize),
    /// Every coefficient up to the cutoff vanishes.
    AtLeast(usize),
}

impl fmt::Display for GrazingOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GrazingOrder::Even { order, diffractive: true } => write!(f, "{order} diffractive"),
            GrazingOrder::Even { order, diffractive: false } => write!(f, "{order} gliding"),
            GrazingOrder::Odd(l) => write!(f, "{l} inflection"),
            GrazingOrder::AtLeast(j) => write!(f, ">={j}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderClassification {
    pub order: GrazingOrder,
    /// `c_1..c_J` along `direction`.
    pub taylor: Vec<f64>,
    /// Unit vector `ξ̄ⁱ(0)/|ξ̄ⁱ(0)|`.
    pub direction: DVector<f64>,
}

/// Order of contact of the ray through the apex, from the Taylor coefficients of `F`
/// along `ξ̄ⁱ(0)`.
pub fn classify_order(obstacle: &Obstacle, phase: &IncomingPhase) -> Result<OrderClassification> {
    let zero = DVector::zeros(obstacle.dim());
    let xi = xi_incoming(phase, obstacle, &zero)?;
    if xi.xi1.abs() > 1e-12 {
        return Err(Error::NotNormalized(xi.xi1));
    }
    let norm = xi.xibar.norm();
    if norm == 0.0 {
        return Err(Error::ZeroVector);
    }
    let direction = &xi.xibar / norm;
    let taylor = obstacle.directional_taylor(&direction, J_MAX)?;
    Ok(OrderClassification { order: order_from_taylor(&taylor), taylor, direction })
}

/// Applies the relative zero threshold to `c_2, c_3, ..`.
pub fn order_from_taylor(taylor: &[f64]) -> GrazingOrder {
    let scale = taylor.iter().fold(1.0_f64, |a, c| a.max(c.abs()));
    for (i, c) in taylor.iter().enumerate().skip(1) {
        if c.abs() > ORDER_TOL * scale {
            let j = i + 1;
            return if j % 2 == 0 {
                GrazingOrder::Even { order: j, diffractive: *c < 0.0 }
            } else {
                GrazingOrder::Odd(j)
            };
        }
    }
    GrazingOrder::AtLeast(taylor.len())
}

#[derive(Debug, Clone, PartialEq)]
pub struct U1wwVerdict {
    pub passes: bool,
    /// Smallest Hessian eigenvalue over the sampled unit directions.
    pub min_eigenvalue: f64,
    pub argmin: DVector<f64>,
    pub tolerance: f64,
    pub samples: usize,
}

/// Checks `∇²G > 0` off the origin for a homogeneous `G` of even degree. By homogeneity the
/// unit sphere suffices: a uniform angle grid in two variables (starting at `(1, 0)`), seeded
/// random directions in three or more.
pub fn check_u1ww(g: &Polynomial, angle_samples: usize) -> Result<U1wwVerdict> {
    match (g.degree(), g.min_degree()) {
        (Some(d), Some(m)) if d == m && d >= 2 && d % 2 == 0 => {}
        _ => return Err(Error::NotHomogeneous),
    }
    let n = g.nvars();
    let samples = angle_samples.max(1);
    let dirs: Vec<DVector<f64>> = match n {
        1 => vec![DVector::from_element(1, 1.0)],
        2 => (0..samples)
            .map(|k| {
                let t = 2.0 * PI * k as f64 / samples as f64;
                DVector::from_vec(vec![t.cos(), t.sin()])
            })
            .collect(),
        _ => {
            let mut rng = ChaCha8Rng::seed_from_u64(42);
            (0..samples)
                .map(|_| loop {
                    let v = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
                    let norm = v.norm();
                    if norm > 1e-3 && norm <= 1.0 {
                        break v / norm;
                    }
                })
                .collect()
        }
    };
    let scale = g.terms().iter().fold(1.0_f64, |a, (_, c)| a.max(c.abs()));
    let tolerance = PD_TOL * scale;
    let mut best = (f64::INFINITY, dirs[0].clone());
    for d in &dirs {
        let h: DMatrix<f64> = g.hessian(d.as_slice());
        let (lam, _) = min_sym_eigenpair(&h);
        if lam < best.0 {
            best = (lam, d.clone());
        }
    }
    Ok(U1wwVerdict { passes: best.0 > tolerance, min_eigenvalue: best.0, argmin: best.1, tolerance, samples: dirs.len() })
}
