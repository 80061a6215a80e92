//! `j = det D Z_r` through the factorization `j = 2ξ₁ʳ det(B + 2sC(K + L))`.
//!
//! `B` and `C` carry `1/ξ₁ʳ`, so the product loses digits when the reflected ray is nearly
//! parallel to `x₁ = const`. The reported value is the same determinant taken in bordered form,
//!
//! `j = det [[2ξ₁ʳ, (∇F + 2s∇ξ₁ʳ)ᵀ], [2ξ̄ʳ, I + 2s(K + L)]]`,
//!
//! whose Schur complement on the corner is `2ξ₁ʳ A`. Here `∇ξ₁ʳ` comes from
//! `ξ₁ʳ(1 + |∇F|²) = 2⟨∇F, ξ̄ⁱ⟩ + ξ₁ⁱ(|∇F|² - 1)`, with no division by `ξ₁ʳ`.

use nalgebra::{DMatrix, DVector};

use super::{classify_boundary_point, flow_point_raw, reflected_raw, BoundaryLabel, GRAZING_TOL};
use crate::diffgeo::Obstacle;
use crate::error::{Error, Result};
use crate::linalg::{central_jacobian, max_abs, outer, rank_one_inverse};
use crate::phases::{boundary_trace_hessian, spherical_rho, xi_incoming, xi_incoming_jacobian, IncomingPhase};

/// Default step for difference Jacobians.
pub const JACOBIAN_FD_STEP: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq)]
pub struct JacobianReport {
    pub j_analytic: f64,
    /// `2μ det(I + 2sB⁻¹C(K + L))`, equal to `j_analytic` up to the conditioning of `B`.
    pub j_factored: f64,
    pub j_fd: f64,
    /// `2μ`.
    pub lower_bound: f64,
    pub margin: f64,
    pub xi1_r: f64,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub k: DMatrix<f64>,
    pub l: DMatrix<f64>,
    pub btk: DMatrix<f64>,
    /// `max |BᵀL - (ξ₁ⁱ - ξ₁ʳ)∇²F|`.
    pub btl_residual: f64,
    /// `max |∂ξ̄ʳ/∂x̄ - (K + L)|` with the left side differenced.
    pub a_consistency: f64,
}

/// Analytic Jacobian at an illuminated point; the report also carries the difference value.
pub fn jacobian_analytic(obstacle: &Obstacle, phase: &IncomingPhase, s: f64, x: &DVector<f64>) -> Result<JacobianReport> {
    let cls = classify_boundary_point(obstacle, phase, x, GRAZING_TOL)?;
    match cls.label {
        BoundaryLabel::Shadow => return Err(Error::ShadowPoint { x: x.as_slice().to_vec(), margin: cls.margin }),
        BoundaryLabel::Grazing => return Err(Error::GrazingSingular { x: x.as_slice().to_vec(), margin: cls.margin }),
        BoundaryLabel::Illuminated => {}
    }
    let mu = cls.margin;
    let m = x.len();
    let id = DMatrix::<f64>::identity(m, m);
    let grad = obstacle.grad(x)?;
    let hess = obstacle.hess(x)?;
    let xi = xi_incoming(phase, obstacle, x)?;
    let (_, xr) = reflected_raw(obstacle, phase, x)?;
    if xr.xi1.abs() < 1e-14 {
        return Err(Error::ReflectedTangential(xr.xi1));
    }
    let g2 = grad.norm_squared();
    let b = &id - outer(&xr.xibar, &grad) / xr.xi1;
    let c = &id + outer(&xr.xibar, &xr.xibar) / (xr.xi1 * xr.xi1);
    let (d1, dbar) = xi_incoming_jacobian(phase, obstacle, x)?;
    let k = (&id - outer(&grad, &grad) * (2.0 / (1.0 + g2))) * &dbar + outer(&grad, &d1) * (2.0 / (1.0 + g2));
    let l = (&id * (xi.xi1 - xr.xi1) - outer(&grad, &xr.xibar) * (2.0 / (1.0 + g2))) * &hess;
    let btk = b.transpose() * &k;
    let btl_residual = max_abs(&(b.transpose() * &l - &hess * (xi.xi1 - xr.xi1)));

    let binv = rank_one_inverse(&(-&xr.xibar / xr.xi1), &grad).ok_or(Error::GrazingSingular {
        x: x.as_slice().to_vec(),
        margin: mu,
    })?;
    let d = &k + &l;
    let inner = &id + &binv * &c * &d * (2.0 * s);
    let j_factored = 2.0 * mu * inner.lu().determinant();

    let denom = 1.0 + g2;
    let dxi1 = ((&hess * &xi.xibar + dbar.transpose() * &grad) * 2.0
        + &d1 * (g2 - 1.0)
        + &hess * &grad * (2.0 * xi.xi1)
        - &hess * &grad * (2.0 * xr.xi1))
        / denom;
    let mut bordered = DMatrix::zeros(m + 1, m + 1);
    bordered[(0, 0)] = 2.0 * xr.xi1;
    for j in 0..m {
        bordered[(0, j + 1)] = grad[j] + 2.0 * s * dxi1[j];
        bordered[(j + 1, 0)] = 2.0 * xr.xibar[j];
    }
    bordered.view_mut((1, 1), (m, m)).copy_from(&(&id + &d * (2.0 * s)));
    let j_analytic = bordered.lu().determinant();

    let mut fd_err = None;
    let dr = central_jacobian(x, JACOBIAN_FD_STEP, |y| match reflected_raw(obstacle, phase, y) {
        Ok((_, r)) => r.xibar,
        Err(e) => {
            fd_err = Some(e);
            DVector::zeros(m)
        }
    });
    if let Some(e) = fd_err {
        return Err(e);
    }
    let a_consistency = max_abs(&(dr - &d));
    let j_fd = fd_determinant(obstacle, phase, s, x, 0.0, JACOBIAN_FD_STEP)?;
    Ok(JacobianReport {
        j_analytic,
        j_factored,
        j_fd,
        lower_bound: 2.0 * mu,
        margin: mu,
        xi1_r: xr.xi1,
        b,
        c,
        k,
        l,
        btk,
        btl_residual,
        a_consistency,
    })
}

/// Determinant of the central-difference Jacobian of `(s, x̄, t) ↦ Z_r`.
pub fn jacobian_fd(obstacle: &Obstacle, phase: &IncomingPhase, s: f64, x: &DVector<f64>, t: f64, step: f64) -> Result<f64> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::StepInvalid(step));
    }
    super::flow_map(obstacle, phase, s, x, t)?;
    fd_determinant(obstacle, phase, s, x, t, step)
}

fn fd_determinant(obstacle: &Obstacle, phase: &IncomingPhase, s: f64, x: &DVector<f64>, t: f64, step: f64) -> Result<f64> {
    let m = x.len();
    let mut z = DVector::zeros(m + 2);
    z[0] = s;
    z.rows_mut(1, m).copy_from(x);
    z[m + 1] = t;
    let mut err = None;
    let jac = central_jacobian(&z, step, |v| {
        let xb = v.rows(1, m).into_owned();
        match flow_point_raw(obstacle, phase, v[0], &xb, v[m + 1]) {
            Ok(y) => y,
            Err(e) => {
                err = Some(e);
                DVector::zeros(m + 2)
            }
        }
    });
    if let Some(e) = err {
        return Err(e);
    }
    Ok(jac.lu().determinant())
}

/// `(I + ∇F⊗∇F - w⊗w)/ρ` with `w = α₁∇F + ᾱ`, the closed form of `BᵀK` for a point source.
pub fn spherical_btk_closed_form(obstacle: &Obstacle, phase: &IncomingPhase, x: &DVector<f64>) -> Result<DMatrix<f64>> {
    let rho = spherical_rho(phase, obstacle, x)?;
    let xi = xi_incoming(phase, obstacle, x)?;
    let grad = obstacle.grad(x)?;
    let w = &grad * xi.xi1 + &xi.xibar;
    let m = x.len();
    Ok((DMatrix::identity(m, m) + outer(&grad, &grad) - outer(&w, &w)) / rho)
}

/// `∇²Ψ - ξ₁ⁱ ∇²F`, which equals `BᵀK` for any eikonal phase.
pub fn general_btk_identity(obstacle: &Obstacle, phase: &IncomingPhase, x: &DVector<f64>) -> Result<DMatrix<f64>> {
    let hpsi = boundary_trace_hessian(phase, obstacle, x)?;
    let xi = xi_incoming(phase, obstacle, x)?;
    Ok(hpsi - obstacle.hess(x)? * xi.xi1)
}
