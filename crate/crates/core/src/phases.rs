//! Incoming phases `φᵢ = -t + ψᵢ(x)` and their covector field on the boundary.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::diffgeo::Obstacle;
use crate::error::{Error, Result};
use crate::linalg::central_jacobian;

/// Step used to difference gradients of general phases.
pub const PHASE_FD_STEP: f64 = 1e-5;

/// A user-supplied spatial phase `ψ` with its gradient. Implementations must be safe to call
/// from several threads at once.
pub trait PhaseProvider: Send + Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: &DVector<f64>) -> f64;
    fn gradient(&self, x: &DVector<f64>) -> DVector<f64>;
    /// Exact Hessian when available; otherwise the gradient is differenced.
    fn hessian(&self, _x: &DVector<f64>) -> Option<DMatrix<f64>> {
        None
    }
    fn name(&self) -> &str;
}

/// Distance to a ball: `ψ(x) = |x - c| - R`, convex and eikonal outside the ball.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexDistance {
    pub center: DVector<f64>,
    pub radius: f64,
}

impl PhaseProvider for ConvexDistance {
    fn dim(&self) -> usize {
        self.center.len()
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        (x - &self.center).norm() - self.radius
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        let d = x - &self.center;
        let r = d.norm();
        d / r
    }

    fn hessian(&self, x: &DVector<f64>) -> Option<DMatrix<f64>> {
        let d = x - &self.center;
        let r = d.norm();
        let u = &d / r;
        let n = d.len();
        Some((DMatrix::identity(n, n) - &u * u.transpose()) / r)
    }

    fn name(&self) -> &str {
        "convex-distance"
    }
}

/// `ψ(x) = -|x - c|`: a wave converging on `c`. Eikonal but concave, so its rays focus.
#[derive(Debug, Clone, PartialEq)]
pub struct Converging {
    pub center: DVector<f64>,
}

impl PhaseProvider for Converging {
    fn dim(&self) -> usize {
        self.center.len()
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        -(x - &self.center).norm()
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        let d = x - &self.center;
        -(&d / d.norm())
    }

    fn name(&self) -> &str {
        "converging"
    }
}

#[derive(Clone)]
pub enum IncomingPhase {
    /// `ψ = θ·x` with `|θ| = 1`.
    Plane { theta: DVector<f64> },
    /// `ψ = |x - b|`, a point source at `b` outside the obstacle.
    Spherical { source: DVector<f64> },
    GeneralConvex(Arc<dyn PhaseProvider>),
}

impl fmt::Debug for IncomingPhase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IncomingPhase::Plane { theta } => f.debug_struct("Plane").field("theta", &theta.as_slice()).finish(),
            IncomingPhase::Spherical { source } => {
                f.debug_struct("Spherical").field("source", &source.as_slice()).finish()
            }
            IncomingPhase::GeneralConvex(p) => f.debug_tuple("GeneralConvex").field(&p.name()).finish(),
        }
    }
}

impl IncomingPhase {
    pub fn plane(theta: DVector<f64>) -> Result<Self> {
        let norm = theta.norm();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidPhase(format!("plane direction must be a unit vector, norm {norm}")));
        }
        Ok(IncomingPhase::Plane { theta })
    }

    pub fn spherical(source: DVector<f64>) -> Self {
        IncomingPhase::Spherical { source }
    }

    pub fn convex_distance(center: DVector<f64>, radius: f64) -> Self {
        IncomingPhase::GeneralConvex(Arc::new(ConvexDistance { center, radius }))
    }

    /// Ambient spatial dimension `n`.
    pub fn dim(&self) -> usize {
        match self {
            IncomingPhase::Plane { theta } => theta.len(),
            IncomingPhase::Spherical { source } => source.len(),
            IncomingPhase::GeneralConvex(p) => p.dim(),
        }
    }

    pub fn psi(&self, x: &DVector<f64>) -> Result<f64> {
        Ok(match self {
            IncomingPhase::Plane { theta } => theta.dot(x),
            IncomingPhase::Spherical { source } => (x - source).norm(),
            IncomingPhase::GeneralConvex(p) => p.value(x),
        })
    }

    pub fn grad_psi(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        match self {
            IncomingPhase::Plane { theta } => Ok(theta.clone()),
            IncomingPhase::Spherical { source } => {
                let d = x - source;
                let r = d.norm();
                if r == 0.0 {
                    return Err(Error::SourceOnBoundary);
                }
                Ok(d / r)
            }
            IncomingPhase::GeneralConvex(p) => {
                let g = p.gradient(x);
                if g.iter().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidPhase(format!("{} gradient is not finite", p.name())));
                }
                Ok(g)
            }
        }
    }

    pub fn hess_psi(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        let n = x.len();
        match self {
            IncomingPhase::Plane { .. } => Ok(DMatrix::zeros(n, n)),
            IncomingPhase::Spherical { source } => {
                let d = x - source;
                let r = d.norm();
                if r == 0.0 {
                    return Err(Error::SourceOnBoundary);
                }
                let u = &d / r;
                Ok((DMatrix::identity(n, n) - &u * u.transpose()) / r)
            }
            IncomingPhase::GeneralConvex(p) => Ok(match p.hessian(x) {
                Some(h) => h,
                None => {
                    let h = central_jacobian(x, PHASE_FD_STEP, |y| p.gradient(y));
                    (&h + h.transpose()) * 0.5
                }
            }),
        }
    }
}

/// A covector `(ξ₁, ξ̄)` attached to the boundary point over `x̄`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryCovector {
    pub xbar: DVector<f64>,
    pub xi1: f64,
    pub xibar: DVector<f64>,
}

impl BoundaryCovector {
    /// `(ξ₁, ξ̄)` as one vector in `Rⁿ`.
    pub fn full(&self) -> DVector<f64> {
        let mut v = DVector::zeros(self.xibar.len() + 1);
        v[0] = self.xi1;
        v.rows_mut(1, self.xibar.len()).copy_from(&self.xibar);
        v
    }

    pub fn norm(&self) -> f64 {
        (self.xi1 * self.xi1 + self.xibar.norm_squared()).sqrt()
    }
}

/// The boundary point `(F(x̄), x̄)`.
pub fn boundary_point(obstacle: &Obstacle, x: &DVector<f64>) -> Result<DVector<f64>> {
    let f = obstacle.eval(x)?;
    Ok(lift(f, x))
}

pub(crate) fn lift(x1: f64, xbar: &DVector<f64>) -> DVector<f64> {
    let mut p = DVector::zeros(xbar.len() + 1);
    p[0] = x1;
    p.rows_mut(1, xbar.len()).copy_from(xbar);
    p
}

fn check_dims(phase: &IncomingPhase, obstacle: &Obstacle) -> Result<()> {
    if phase.dim() != obstacle.ambient_dim() {
        return Err(Error::DimensionMismatch { expected: obstacle.ambient_dim(), got: phase.dim() });
    }
    Ok(())
}

/// `ξⁱ(x̄) = ∇ψᵢ(F(x̄), x̄)`.
pub fn xi_incoming(phase: &IncomingPhase, obstacle: &Obstacle, x: &DVector<f64>) -> Result<BoundaryCovector> {
    check_dims(phase, obstacle)?;
    let p = boundary_point(obstacle, x)?;
    covector_at(phase, &p, x)
}

fn covector_at(phase: &IncomingPhase, p: &DVector<f64>, x: &DVector<f64>) -> Result<BoundaryCovector> {
    let g = phase.grad_psi(p)?;
    Ok(BoundaryCovector { xbar: x.clone(), xi1: g[0], xibar: g.rows(1, x.len()).into_owned() })
}

/// Derivatives of `x̄ ↦ ξⁱ(x̄)` along the boundary: `(∇ξ₁ⁱ, ∂ξ̄ⁱ/∂x̄)` with
/// `(∂ξ̄ⁱ/∂x̄)_{ij} = ∂_j ξ̄ⁱ_i`.
///
/// Closed form for plane and spherical phases; for general phases the ambient Hessian of `ψ`
/// (the provider's, or differences of its gradient with step [`PHASE_FD_STEP`]) is pulled back
/// through `x̄ ↦ (F(x̄), x̄)`.
pub fn xi_incoming_jacobian(
    phase: &IncomingPhase,
    obstacle: &Obstacle,
    x: &DVector<f64>,
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    check_dims(phase, obstacle)?;
    let m = x.len();
    match phase {
        IncomingPhase::Plane { .. } => Ok((DVector::zeros(m), DMatrix::zeros(m, m))),
        IncomingPhase::Spherical { .. } => {
            let xi = xi_incoming(phase, obstacle, x)?;
            let grad = obstacle.grad(x)?;
            let rho = spherical_rho(phase, obstacle, x)?;
            let w = &grad * xi.xi1 + &xi.xibar;
            let d1 = (&grad - &w * xi.xi1) / rho;
            let dbar = (DMatrix::identity(m, m) - &xi.xibar * w.transpose()) / rho;
            Ok((d1, dbar))
        }
        IncomingPhase::GeneralConvex(_) => {
            // Chain rule through the lift: ∂ξⁱ/∂x̄ = ∇²ψ [∇F; I].
            let p = boundary_point(obstacle, x)?;
            let h = phase.hess_psi(&p)?;
            let mut e = DMatrix::zeros(m + 1, m);
            e.row_mut(0).copy_from(&obstacle.grad(x)?.transpose());
            e.rows_mut(1, m).fill_with_identity();
            let jac = h * e;
            let d1 = jac.row(0).transpose();
            let dbar = jac.rows(1, m).into_owned();
            Ok((d1, dbar))
        }
    }
}

/// `ρ(x̄) = |(F(x̄), x̄) - b|` for a spherical phase.
pub fn spherical_rho(phase: &IncomingPhase, obstacle: &Obstacle, x: &DVector<f64>) -> Result<f64> {
    match phase {
        IncomingPhase::Spherical { source } => {
            let rho = (boundary_point(obstacle, x)? - source).norm();
            if rho == 0.0 {
                return Err(Error::SourceOnBoundary);
            }
            Ok(rho)
        }
        _ => Err(Error::Unsupported("rho is defined for spherical phases only".into())),
    }
}

/// `Ψ(x̄) = ψᵢ(F(x̄), x̄)`.
pub fn boundary_trace(phase: &IncomingPhase, obstacle: &Obstacle, x: &DVector<f64>) -> Result<f64> {
    check_dims(phase, obstacle)?;
    let p = boundary_point(obstacle, x)?;
    if let IncomingPhase::Spherical { source } = phase {
        if (&p - source).norm() == 0.0 {
            return Err(Error::SourceOnBoundary);
        }
    }
    phase.psi(&p)
}

/// `∇Ψ = ξ₁ⁱ ∇F + ξ̄ⁱ`.
pub fn boundary_trace_gradient(phase: &IncomingPhase, obstacle: &Obstacle, x: &DVector<f64>) -> Result<DVector<f64>> {
    let xi = xi_incoming(phase, obstacle, x)?;
    Ok(obstacle.grad(x)? * xi.xi1 + xi.xibar)
}

/// `∇²Ψ = [∇F; I]ᵀ ∇²ψ [∇F; I] + ∂₁ψ ∇²F`, built from the ambient Hessian of `ψ`.
pub fn boundary_trace_hessian(phase: &IncomingPhase, obstacle: &Obstacle, x: &DVector<f64>) -> Result<DMatrix<f64>> {
    check_dims(phase, obstacle)?;
    let m = x.len();
    let p = boundary_point(obstacle, x)?;
    let h = phase.hess_psi(&p)?;
    let g = phase.grad_psi(&p)?;
    let grad = obstacle.grad(x)?;
    let mut e = DMatrix::zeros(m + 1, m);
    e.row_mut(0).copy_from(&grad.transpose());
    e.rows_mut(1, m).fill_with_identity();
    Ok(e.transpose() * h * &e + obstacle.hess(x)? * g[0])
}

/// `max |(∂₁ψ)² + |∇̄ψ|² - 1|` over the points.
pub fn eikonal_residual(phase: &IncomingPhase, points: &[DVector<f64>]) -> f64 {
    points
        .iter()
        .map(|p| match phase.grad_psi(p) {
            Ok(g) => (g.norm_squared() - 1.0).abs(),
            Err(_) => f64::INFINITY,
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvexityVerdict {
    pub passes: bool,
    /// Smallest `ψ(z₂) - ψ(z₁) - ⟨∇ψ(z₁), z₂ - z₁⟩` seen.
    pub worst_margin: f64,
    pub worst_pair: Option<usize>,
}

/// Checks the supporting-hyperplane inequality on each pair, in both orders.
pub fn convexity_check(phase: &IncomingPhase, pairs: &[(DVector<f64>, DVector<f64>)]) -> ConvexityVerdict {
    let mut worst = f64::INFINITY;
    let mut worst_pair = None;
    let mut scale = 1.0_f64;
    for (i, (a, b)) in pairs.iter().enumerate() {
        for (z1, z2) in [(a, b), (b, a)] {
            let margin = match (phase.psi(z1), phase.psi(z2), phase.grad_psi(z1)) {
                (Ok(f1), Ok(f2), Ok(g1)) => {
                    scale = scale.max(f1.abs()).max(f2.abs());
                    f2 - f1 - g1.dot(&(z2 - z1))
                }
                _ => f64::NEG_INFINITY,
            };
            if margin < worst {
                worst = margin;
                worst_pair = Some(i);
            }
        }
    }
    if pairs.is_empty() {
        worst = 0.0;
    }
    ConvexityVerdict { passes: worst >= -1e-12 * scale, worst_margin: worst, worst_pair }
}
