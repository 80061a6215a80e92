//! The shadow boundary: incoming rays through grazing points, continued past the obstacle.

use nalgebra::DVector;

use super::trace::GrazingCurve;
use crate::diffgeo::Obstacle;
use crate::error::{Error, Result};
use crate::phases::{boundary_point, xi_incoming, IncomingPhase};
use crate::reflection::margin;

/// Largest `|μ|` accepted at a flowout foot point.
pub const FLOWOUT_GRAZING_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct FlowoutRay {
    pub foot: DVector<f64>,
    /// Space-time points `((F, x̄) + 2sξⁱ, t + 2s)`, one per parameter.
    pub points: Vec<DVector<f64>>,
    pub params: Vec<f64>,
}

/// The incoming ray through a grazing boundary point at boundary time `t`.
pub fn flowout_ray(
    obstacle: &Obstacle,
    phase: &IncomingPhase,
    xbar: &DVector<f64>,
    t: f64,
    params: &[f64],
) -> Result<FlowoutRay> {
    let xi = xi_incoming(phase, obstacle, xbar)?;
    let mu = margin(&obstacle.grad(xbar)?, &xi);
    if mu.abs() > FLOWOUT_GRAZING_TOL {
        return Err(Error::NotAGrazingPoint(format!("margin {mu:e} at {:?}", xbar.as_slice())));
    }
    let base = boundary_point(obstacle, xbar)?;
    let dir = xi.full();
    let n = base.len();
    let points = params
        .iter()
        .map(|s| {
            let mut y = DVector::zeros(n + 1);
            y.rows_mut(0, n).copy_from(&(&base + &dir * (2.0 * s)));
            y[n] = t + 2.0 * s;
            y
        })
        .collect();
    Ok(FlowoutRay { foot: xbar.clone(), points, params: params.to_vec() })
}

/// One ray per curve vertex with `samples` parameters spread evenly over `s_range`, at
/// boundary time 0.
pub fn shadow_boundary_flowout(
    obstacle: &Obstacle,
    phase: &IncomingPhase,
    curve: &GrazingCurve,
    s_range: (f64, f64),
    samples: usize,
) -> Result<Vec<FlowoutRay>> {
    let samples = samples.max(2);
    let params: Vec<f64> = (0..samples)
        .map(|k| s_range.0 + (s_range.1 - s_range.0) * k as f64 / (samples - 1) as f64)
        .collect();
    curve
        .branches
        .iter()
        .flat_map(|b| b.points.iter())
        .map(|x| flowout_ray(obstacle, phase, x, 0.0, &params))
        .collect()
}
