//! Newton inversion of `Z_r` and the reflected phase built from it.

use nalgebra::{DVector, DMatrix};

use super::{classify_boundary_point, flow_point_raw, reflected_raw, BoundaryLabel, GRAZING_TOL};
use crate::diffgeo::Obstacle;
use crate::error::{Error, Result};
use crate::linalg::central_jacobian;
use crate::phases::{boundary_trace, lift, IncomingPhase};

const MAX_ITERATIONS: usize = 50;
const RESIDUAL_TOL: f64 = 1e-10;
/// Seeds closer to grazing than this are refused: the inverse is only continuous there.
pub const NEAR_GRAZING_MARGIN: f64 = 1e-4;
const SEED_GRID: usize = 41;

#[derive(Debug, Clone, PartialEq)]
pub struct FlowPreimage {
    pub s: f64,
    pub xbar: DVector<f64>,
    pub t: f64,
    pub iterations: usize,
    pub residual: f64,
}

/// Solves `Z_r(s, x̄, t) = y` by damped Newton on the spatial part; `t = t' - 2s` follows.
/// Without a seed `(s, x̄)` a grid over the patch picks the foot whose reflected ray passes
/// closest to `y`.
pub fn invert_flow(
    obstacle: &Obstacle,
    phase: &IncomingPhase,
    y: &DVector<f64>,
    seed: Option<(f64, DVector<f64>)>,
) -> Result<FlowPreimage> {
    let m = obstacle.dim();
    if y.len() != m + 2 {
        return Err(Error::DimensionMismatch { expected: m + 2, got: y.len() });
    }
    let target = y.rows(0, m + 1).into_owned();
    let ybar = y.rows(1, m).into_owned();
    if ybar.norm() <= obstacle.radius() && y[0] < obstacle.value_raw(&ybar)? - RESIDUAL_TOL {
        return Err(Error::OutsideRange);
    }
    let (s0, x0) = match seed {
        Some(seed) => seed,
        None => grid_seed(obstacle, phase, &target)?,
    };
    let c = classify_boundary_point(obstacle, phase, &x0, GRAZING_TOL)?;
    if c.margin < NEAR_GRAZING_MARGIN {
        return Err(Error::GrazingSingular { x: x0.as_slice().to_vec(), margin: c.margin });
    }

    let spatial = |z: &DVector<f64>| -> Result<DVector<f64>> {
        let x = z.rows(1, m).into_owned();
        let full = flow_point_raw(obstacle, phase, z[0], &x, 0.0)?;
        Ok(full.rows(0, m + 1).into_owned())
    };
    let mut z = lift(s0, &x0);
    let mut r = spatial(&z)? - &target;
    let mut res = r.norm();
    let mut iterations = 0;
    let mut polish = 0;
    while iterations < MAX_ITERATIONS {
        if res <= RESIDUAL_TOL {
            polish += 1;
            if polish > 2 || res == 0.0 {
                break;
            }
        }
        iterations += 1;
        let jac: DMatrix<f64> = central_jacobian(&z, 1e-7, |v| spatial(v).unwrap_or_else(|_| DVector::from_element(m + 1, f64::NAN)));
        let Some(dz) = jac.lu().solve(&(-&r)) else {
            return Err(Error::NoConvergence { iterations, residual: res });
        };
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let cand = &z + &dz * lambda;
            if let Ok(v) = spatial(&cand) {
                let rc = v - &target;
                let rn = rc.norm();
                if rn.is_finite() && (rn < res || (res <= RESIDUAL_TOL && rn <= res * 2.0)) {
                    z = cand;
                    r = rc;
                    res = rn;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if res > RESIDUAL_TOL {
        return Err(Error::NoConvergence { iterations, residual: res });
    }
    let x = z.rows(1, m).into_owned();
    let s = z[0];
    if s < -RESIDUAL_TOL || x.norm() > obstacle.radius() {
        return Err(Error::OutsideRange);
    }
    if classify_boundary_point(obstacle, phase, &x, GRAZING_TOL)?.label == BoundaryLabel::Shadow {
        return Err(Error::OutsideRange);
    }
    Ok(FlowPreimage { s, xbar: x, t: y[m + 1] - 2.0 * s, iterations, residual: res })
}

fn grid_seed(obstacle: &Obstacle, phase: &IncomingPhase, target: &DVector<f64>) -> Result<(f64, DVector<f64>)> {
    let m = obstacle.dim();
    let r = obstacle.radius();
    let mut best: Option<(f64, f64, DVector<f64>)> = None;
    let mut idx = vec![0usize; m];
    let total = SEED_GRID.pow(m as u32);
    for _ in 0..total {
        let x = DVector::from_fn(m, |i, _| -r + 2.0 * r * idx[i] as f64 / (SEED_GRID - 1) as f64);
        for i in 0..m {
            idx[i] += 1;
            if idx[i] < SEED_GRID {
                break;
            }
            idx[i] = 0;
        }
        if x.norm() > r {
            continue;
        }
        let Ok(c) = classify_boundary_point(obstacle, phase, &x, GRAZING_TOL) else { continue };
        if c.margin < NEAR_GRAZING_MARGIN {
            continue;
        }
        let Ok((f, xr)) = reflected_raw(obstacle, phase, &x) else { continue };
        let d = target - lift(f, &x);
        let s = (0.5 * d.dot(&xr.full())).max(0.0);
        let miss = (d - xr.full() * (2.0 * s)).norm();
        if best.as_ref().is_none_or(|b| miss < b.0) {
            best = Some((miss, s, x));
        }
    }
    best.map(|(_, s, x)| (s, x)).ok_or(Error::OutsideRange)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReflectedPhase {
    pub value: f64,
    /// `(ξʳ, -1)` in `(x, t)` coordinates.
    pub gradient: DVector<f64>,
    pub preimage: FlowPreimage,
}

/// `φ_r(y) = -t + Ψ(x̄)` and `dφ_r = (ξʳ(x̄), -1)` where `(s, x̄, t) = Z_r⁻¹(y)`.
pub fn reflected_phase_at(
    obstacle: &Obstacle,
    phase: &IncomingPhase,
    y: &DVector<f64>,
    seed: Option<(f64, DVector<f64>)>,
) -> Result<ReflectedPhase> {
    let pre = invert_flow(obstacle, phase, y, seed)?;
    let value = -pre.t + boundary_trace(phase, obstacle, &pre.xbar)?;
    let (_, xr) = reflected_raw(obstacle, phase, &pre.xbar)?;
    let m = pre.xbar.len();
    let mut gradient = DVector::zeros(m + 2);
    gradient.rows_mut(0, m + 1).copy_from(&xr.full());
    gradient[m + 1] = -1.0;
    Ok(ReflectedPhase { value, gradient, preimage: pre })
}
