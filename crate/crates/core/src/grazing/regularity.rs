//! Power-law fits of a traced grazing curve near the apex.

use std::fmt;

use nalgebra::{DMatrix, DVector};

use super::trace::GrazingCurve;
use crate::error::{Error, Result};

pub const DEFAULT_FIT_WINDOW: (f64, f64) = (1e-4, 1e-2);

/// Vertices each branch must contribute inside the fit window.
pub const MIN_FIT_POINTS: usize = 20;

/// Exponent bins around 2/3 and 4/3.
pub const CUSP_BIN: (f64, f64) = (0.60, 0.73);
pub const C1_BIN: (f64, f64) = (1.26, 1.41);

/// Relative residual below which a low-degree polynomial graph counts as smooth.
pub const SMOOTH_FIT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegularityVerdict {
    Cusp,
    C1NotC2,
    Smooth,
    Inconclusive,
}

impl fmt::Display for RegularityVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RegularityVerdict::Cusp => "cusp",
            RegularityVerdict::C1NotC2 => "C1-not-C2",
            RegularityVerdict::Smooth => "smooth",
            RegularityVerdict::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegularityEstimate {
    /// Slope of `log|dep|` against `log|trans|`; infinite when the curve is the transverse axis.
    pub exponent: f64,
    /// `dep ≈ coefficient · |trans|^exponent`.
    pub coefficient: f64,
    pub verdict: RegularityVerdict,
    /// Unit vector of the transverse variable.
    pub transverse: DVector<f64>,
    /// Unit vector of the dependent variable.
    pub dependent: DVector<f64>,
    pub points_used: usize,
    /// Relative residual of the polynomial graph fit, when it was consulted.
    pub polynomial_residual: Option<f64>,
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Picks the coordinate axis on which the two branches lie on opposite sides; falls back to
/// the tracing frame when no axis separates them.
fn orientation(curve: &GrazingCurve) -> (DVector<f64>, DVector<f64>) {
    let dim = curve.along.len();
    let mut best: Option<(usize, f64)> = None;
    if curve.branches.len() == 2 && curve.branches.iter().all(|b| !b.points.is_empty()) {
        for i in 0..dim {
            let m: Vec<f64> =
                curve.branches.iter().map(|b| median(b.points.iter().map(|x| x[i]).collect())).collect();
            if m[0] * m[1] < 0.0 {
                let score = m[0].abs().min(m[1].abs());
                if best.is_none_or(|(_, s)| score > s) {
                    best = Some((i, score));
                }
            }
        }
    }
    match best {
        Some((i, _)) if dim == 2 => {
            let mut t = DVector::zeros(2);
            let mut d = DVector::zeros(2);
            t[i] = 1.0;
            d[1 - i] = 1.0;
            (t, d)
        }
        _ => (curve.across.clone(), curve.along.clone()),
    }
}

/// Fits `log|dep|` against `log|trans|` over `fit_window.0 ≤ |trans| ≤ fit_window.1`.
/// Exponents in the cusp or C¹ bins decide directly; otherwise a polynomial graph of degree
/// at most four through the origin must fit to [`SMOOTH_FIT_TOL`] for a smooth verdict.
pub fn estimate_regularity(curve: &GrazingCurve, fit_window: (f64, f64)) -> Result<RegularityEstimate> {
    let (transverse, dependent) = orientation(curve);
    let (lo, hi) = fit_window;
    let mut pts: Vec<(f64, f64)> = Vec::new();
    for b in &curve.branches {
        let inside: Vec<(f64, f64)> = b
            .points
            .iter()
            .map(|x| (x.dot(&transverse), x.dot(&dependent)))
            .filter(|(t, _)| t.abs() >= lo && t.abs() <= hi)
            .collect();
        if inside.len() < MIN_FIT_POINTS {
            return Err(Error::InsufficientPoints { needed: MIN_FIT_POINTS, found: inside.len() });
        }
        pts.extend(inside);
    }
    if curve.branches.is_empty() {
        return Err(Error::InsufficientPoints { needed: MIN_FIT_POINTS, found: 0 });
    }
    let points_used = pts.len();

    if pts.iter().all(|(t, d)| d.abs() <= 1e-13 * t.abs()) {
        return Ok(RegularityEstimate {
            exponent: f64::INFINITY,
            coefficient: 0.0,
            verdict: RegularityVerdict::Smooth,
            transverse,
            dependent,
            points_used,
            polynomial_residual: Some(0.0),
        });
    }

    let logs: Vec<(f64, f64)> =
        pts.iter().filter(|(_, d)| *d != 0.0).map(|(t, d)| (t.abs().ln(), d.abs().ln())).collect();
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = logs.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = logs.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    let exponent = sxy / sxx;
    let intercept = my - exponent * mx;
    let coefficient = median(pts.iter().map(|p| p.1).collect()).signum() * intercept.exp();

    let in_bin = |(a, b): (f64, f64)| exponent >= a && exponent <= b;
    let (verdict, polynomial_residual) = if in_bin(CUSP_BIN) {
        (RegularityVerdict::Cusp, None)
    } else if in_bin(C1_BIN) {
        (RegularityVerdict::C1NotC2, None)
    } else {
        let r = polynomial_graph_residual(&pts, hi);
        let v = if r < SMOOTH_FIT_TOL { RegularityVerdict::Smooth } else { RegularityVerdict::Inconclusive };
        (v, Some(r))
    };
    Ok(RegularityEstimate { exponent, coefficient, verdict, transverse, dependent, points_used, polynomial_residual })
}

/// `‖A c - d‖ / ‖d‖` for the least-squares fit `d ≈ Σ_{k=1}^{4} c_k (t/scale)^k`.
fn polynomial_graph_residual(pts: &[(f64, f64)], scale: f64) -> f64 {
    let a = DMatrix::from_fn(pts.len(), 4, |i, k| (pts[i].0 / scale).powi(k as i32 + 1));
    let d = DVector::from_iterator(pts.len(), pts.iter().map(|p| p.1));
    let svd = a.clone().svd(true, true);
    match svd.solve(&d, 1e-14) {
        Ok(c) => (a * c - &d).norm() / d.norm(),
        Err(_) => f64::INFINITY,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffgeo::{Obstacle, Polynomial};
    use crate::grazing::trace::{trace_grazing_curve, TraceOptions};
    use crate::grazing::GrazingFunction;
    use nalgebra::dvector;

    fn curve(terms: &[(&[u32], f64)], gf: GrazingFunction) -> GrazingCurve {
        let g = Polynomial::new(2, terms.iter().map(|(e, c)| (e.to_vec(), *c))).unwrap();
        let o = Obstacle::one_minus(&g, 1.0).unwrap();
        trace_grazing_curve(&gf, &o, 0.3, &TraceOptions::default()).unwrap()
    }

    fn source(bbar: DVector<f64>) -> GrazingFunction {
        GrazingFunction::SphericalH { b1: 1.0, bbar }
    }

    #[test]
    fn cusp_two_thirds() {
        let c = curve(&[(&[4, 0], 1.0), (&[0, 2], 1.0)], source(dvector![-1.0, 0.0]));
        let r = estimate_regularity(&c, DEFAULT_FIT_WINDOW).unwrap();
        assert_eq!(r.verdict, RegularityVerdict::Cusp);
        assert!(r.exponent > 0.63 && r.exponent < 0.70, "{}", r.exponent);
        assert!((r.coefficient + 4f64.powf(-1.0 / 3.0)).abs() < 0.05 * 4f64.powf(-1.0 / 3.0));
        assert_eq!(r.transverse, dvector![0.0, 1.0]);
    }

    #[test]
    fn four_thirds_spherical() {
        let c = curve(&[(&[4, 0], 1.0), (&[0, 4], 1.0)], source(dvector![-1.0, 0.0]));
        let r = estimate_regularity(&c, DEFAULT_FIT_WINDOW).unwrap();
        assert_eq!(r.verdict, RegularityVerdict::C1NotC2);
        let expect = -(0.75f64).powf(1.0 / 3.0);
        assert!((r.coefficient - expect).abs() < 0.05 * expect.abs(), "{}", r.coefficient);
    }

    #[test]
    fn relocated_source_is_smooth() {
        let c = curve(&[(&[4, 0], 1.0), (&[0, 2], 1.0)], source(dvector![0.0, 1.0]));
        let r = estimate_regularity(&c, DEFAULT_FIT_WINDOW).unwrap();
        assert_eq!(r.verdict, RegularityVerdict::Smooth);
        assert!((r.exponent - 4.0).abs() < 0.05);
        assert_eq!(r.transverse, dvector![1.0, 0.0]);
    }

    #[test]
    fn paraboloid_is_smooth() {
        let c = curve(&[(&[2, 0], 1.0), (&[0, 2], 1.0)], source(dvector![-1.0, 0.0]));
        let r = estimate_regularity(&c, DEFAULT_FIT_WINDOW).unwrap();
        assert_eq!(r.verdict, RegularityVerdict::Smooth);
        assert!((r.exponent - 2.0).abs() < 0.01);
        assert!((r.coefficient + 0.5).abs() < 0.01);
    }

    #[test]
    fn narrow_fit_window_is_rejected() {
        let c = curve(&[(&[4, 0], 1.0), (&[0, 2], 1.0)], source(dvector![-1.0, 0.0]));
        assert!(matches!(
            estimate_regularity(&c, (2e-3, 2.1e-3)),
            Err(Error::InsufficientPoints { needed: 20, .. })
        ));
    }
}
