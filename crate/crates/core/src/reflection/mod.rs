//! Reflected covectors, the reflected flow map `Z_r` and its Jacobian.

mod inverse;
mod jacobian;
mod verify;

use nalgebra::DVector;

pub use inverse::{invert_flow, reflected_phase_at, FlowPreimage, ReflectedPhase, NEAR_GRAZING_MARGIN};
pub use jacobian::{
    general_btk_identity, jacobian_analytic, jacobian_fd, spherical_btk_closed_form, JacobianReport,
    JACOBIAN_FD_STEP,
};
pub use verify::{verify_rfm, RfmOffender, RfmOptions, RfmSample, RfmVerdict};

use crate::diffgeo::Obstacle;
use crate::error::{Error, Result};
use crate::phases::{lift, xi_incoming, BoundaryCovector, IncomingPhase};

/// Default tolerance on the margin `μ` separating grazing from lit and shadowed points.
pub const GRAZING_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryLabel {
    Illuminated,
    Grazing,
    Shadow,
}

impl BoundaryLabel {
    pub fn from_margin(margin: f64, tol: f64) -> Self {
        if margin > tol {
            BoundaryLabel::Illuminated
        } else if margin >= -tol {
            BoundaryLabel::Grazing
        } else {
            BoundaryLabel::Shadow
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryClassification {
    pub xbar: DVector<f64>,
    /// `μ = ⟨∇F, ξ̄ⁱ⟩ - ξ₁ⁱ`.
    pub margin: f64,
    pub label: BoundaryLabel,
}

/// `μ = ⟨∇F, ξ̄⟩ - ξ₁`.
pub fn margin(grad: &DVector<f64>, xi: &BoundaryCovector) -> f64 {
    grad.dot(&xi.xibar) - xi.xi1
}

/// Specular reflection of `ξ` in the boundary with slope `∇F`.
pub fn reflect_with_gradient(grad: &DVector<f64>, xi: &BoundaryCovector) -> BoundaryCovector {
    let m = xi.xi1 - grad.dot(&xi.xibar);
    let k = 2.0 * m / (1.0 + grad.norm_squared());
    BoundaryCovector { xbar: xi.xbar.clone(), xi1: xi.xi1 - k, xibar: &xi.xibar + grad * k }
}

/// `ξʳ` at `x̄` for the incoming covector `ξⁱ`.
pub fn reflect_direction(obstacle: &Obstacle, x: &DVector<f64>, xi: &BoundaryCovector) -> Result<BoundaryCovector> {
    let grad = obstacle.grad(x)?;
    let mut r = reflect_with_gradient(&grad, xi);
    r.xbar = x.clone();
    Ok(r)
}

pub fn classify_boundary_point(
    obstacle: &Obstacle,
    phase: &IncomingPhase,
    x: &DVector<f64>,
    tol: f64,
) -> Result<BoundaryClassification> {
    let xi = xi_incoming(phase, obstacle, x)?;
    let mu = margin(&obstacle.grad(x)?, &xi);
    Ok(BoundaryClassification { xbar: x.clone(), margin: mu, label: BoundaryLabel::from_margin(mu, tol) })
}

/// One evaluation of `Z_r(s, x̄, t) = (F + 2sξ₁ʳ, x̄ + 2sξ̄ʳ, t + 2s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowSample {
    pub s: f64,
    pub xbar: DVector<f64>,
    pub t: f64,
    /// `(y₁, ȳ, t')`.
    pub y: DVector<f64>,
}

pub fn flow_map(obstacle: &Obstacle, phase: &IncomingPhase, s: f64, x: &DVector<f64>, t: f64) -> Result<FlowSample> {
    let c = classify_boundary_point(obstacle, phase, x, GRAZING_TOL)?;
    if c.label == BoundaryLabel::Shadow {
        return Err(Error::ShadowPoint { x: x.as_slice().to_vec(), margin: c.margin });
    }
    let y = flow_point_raw(obstacle, phase, s, x, t)?;
    Ok(FlowSample { s, xbar: x.clone(), t, y })
}

/// Reflected covector without the patch check, for difference stencils.
pub(crate) fn reflected_raw(obstacle: &Obstacle, phase: &IncomingPhase, x: &DVector<f64>) -> Result<(f64, BoundaryCovector)> {
    let f = obstacle.value_raw(x)?;
    let g = phase.grad_psi(&lift(f, x))?;
    let xi = BoundaryCovector { xbar: x.clone(), xi1: g[0], xibar: g.rows(1, x.len()).into_owned() };
    let grad = obstacle.grad_raw(x)?;
    Ok((f, reflect_with_gradient(&grad, &xi)))
}

/// `Z_r` without classification or patch checks.
pub(crate) fn flow_point_raw(
    obstacle: &Obstacle,
    phase: &IncomingPhase,
    s: f64,
    x: &DVector<f64>,
    t: f64,
) -> Result<DVector<f64>> {
    let (f, r) = reflected_raw(obstacle, phase, x)?;
    let m = x.len();
    let mut y = DVector::zeros(m + 2);
    y[0] = f + 2.0 * s * r.xi1;
    for i in 0..m {
        y[i + 1] = x[i] + 2.0 * s * r.xibar[i];
    }
    y[m + 1] = t + 2.0 * s;
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffgeo::Polynomial;
    use nalgebra::dvector;

    fn sphere() -> Obstacle {
        let g = Polynomial::new(2, [(vec![2, 0], 1.0), (vec![0, 2], 1.0)]).unwrap();
        Obstacle::one_minus(&g, 0.5).unwrap()
    }

    fn cov(v: DVector<f64>) -> BoundaryCovector {
        let m = v.len() - 1;
        BoundaryCovector { xbar: DVector::zeros(m), xi1: v[0], xibar: v.rows(1, m).into_owned() }
    }

    /// `v - 2⟨v, ν⟩ν` with the unit normal `ν ∝ (1, -∇F)`.
    fn specular(grad: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        let nu = lift(1.0, &(-grad)).normalize();
        v - &nu * (2.0 * v.dot(&nu))
    }

    #[test]
    fn reflection_examples() {
        let xi = cov(dvector![0.0, 0.6, 0.8]);
        assert_eq!(reflect_with_gradient(&dvector![0.0, 0.0], &xi), xi);
        let r = reflect_with_gradient(&dvector![0.0, 0.0], &cov(dvector![-1.0, 0.0, 0.0]));
        assert_eq!(r.full(), dvector![1.0, 0.0, 0.0]);
        let grad = dvector![1.0, 0.0];
        let r = reflect_with_gradient(&grad, &cov(dvector![-1.0, 0.0, 0.0]));
        let oracle = specular(&grad, &dvector![-1.0, 0.0, 0.0]);
        assert!((r.full() - &oracle).norm() < 1e-15);
        assert!((oracle - dvector![0.0, -1.0, 0.0]).norm() < 1e-15);
    }

    #[test]
    fn classification_examples() {
        let o = sphere();
        let b = IncomingPhase::spherical(dvector![1.0, -1.0, 0.0]);
        let apex = classify_boundary_point(&o, &b, &dvector![0.0, 0.0], GRAZING_TOL).unwrap();
        assert_eq!((apex.margin, apex.label), (0.0, BoundaryLabel::Grazing));
        let lit = classify_boundary_point(&o, &b, &dvector![-0.3, 0.0], GRAZING_TOL).unwrap();
        assert_eq!(lit.label, BoundaryLabel::Illuminated);
        let rho = (0.09_f64 * 0.09 + 0.49).sqrt();
        assert!((lit.margin - (0.6 * 0.7 + 0.09) / rho).abs() < 1e-15);
        let dark = classify_boundary_point(&o, &b, &dvector![0.3, 0.0], GRAZING_TOL).unwrap();
        assert_eq!(dark.label, BoundaryLabel::Shadow);
    }

    #[test]
    fn flow_map_examples() {
        let o = sphere();
        let b = IncomingPhase::spherical(dvector![1.0, -1.0, 0.0]);
        let x = dvector![-0.3, 0.0];
        let z = flow_map(&o, &b, 0.0, &x, 2.0).unwrap();
        assert_eq!(z.y, dvector![0.91, -0.3, 0.0, 2.0]);

        let z = flow_map(&o, &b, 0.7, &dvector![0.0, 0.0], 1.0).unwrap();
        assert!((z.y.clone() - dvector![1.0, 1.4, 0.0, 2.4]).norm() < 1e-15);

        let z = flow_map(&o, &b, 0.25, &x, 0.0).unwrap();
        let p = dvector![0.91, -0.3, 0.0];
        let incoming = (&p - dvector![1.0, -1.0, 0.0]).normalize();
        let out = specular(&o.grad(&x).unwrap(), &incoming);
        let expect = &p + out * 0.5;
        assert!((z.y.rows(0, 3) - expect).norm() < 1e-15);
        assert_eq!(z.y[3], 0.5);

        assert!(matches!(flow_map(&o, &b, 0.1, &dvector![0.3, 0.0], 0.0), Err(Error::ShadowPoint { .. })));
    }
}
