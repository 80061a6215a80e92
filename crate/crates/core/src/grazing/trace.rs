//! Continuation of the grazing curve of a two-variable obstacle.
//!
//! Points are written `x̄ = p·e + q·n` with `e` the apex ray direction and `n` its normal.
//! When the apex has even order the zero lines of the leading part are `p = αq` with finite
//! `α`, so near the apex the curve is a graph over `q`: seeds sit on `q = ±v_seed`, the
//! stretch toward the apex is solved one `q` at a time, and the outer part is followed by
//! pseudo-arclength continuation where the gradient no longer vanishes.

use nalgebra::DVector;

use super::GrazingFunction;
use crate::diffgeo::Obstacle;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct TraceOptions {
    /// Largest accepted `|g|` at a vertex.
    pub trace_tol: f64,
    /// Transverse offset of the two seeds.
    pub v_seed: f64,
    /// Smallest transverse offset reached toward the apex.
    pub v_min: f64,
    /// Ratio between consecutive transverse offsets toward the apex.
    pub shrink: f64,
    pub h_init: f64,
    pub h_min: f64,
    pub h_max: f64,
    /// Grid size of the seed scan along `q = ±v_seed`.
    pub scan_points: usize,
    pub max_steps: usize,
}

impl Default for TraceOptions {
    fn default() -> Self {
        TraceOptions {
            trace_tol: 1e-10,
            v_seed: 1e-3,
            v_min: 1e-5,
            shrink: 0.9,
            h_init: 1e-4,
            h_min: 1e-6,
            h_max: 1e-2,
            scan_points: 4001,
            max_steps: 100_000,
        }
    }
}

/// Why a branch stopped growing outward.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Window,
    DomainExceeded,
    MaxSteps,
    Empty,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    /// `+1` or `-1`: the side of `q` the branch lives on.
    pub side: i8,
    /// Ordered from the apex outward.
    pub points: Vec<DVector<f64>>,
    pub residuals: Vec<f64>,
    /// Cumulative polyline length from the innermost vertex.
    pub arc: Vec<f64>,
    pub termination: Termination,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GrazingCurve {
    pub branches: Vec<Branch>,
    pub window: f64,
    /// Apex ray direction `e`.
    pub along: DVector<f64>,
    /// Transverse direction `n`.
    pub across: DVector<f64>,
    pub trace_tol: f64,
}

impl GrazingCurve {
    pub fn vertex_count(&self) -> usize {
        self.branches.iter().map(|b| b.points.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.vertex_count() == 0
    }

    pub fn max_residual(&self) -> f64 {
        self.branches.iter().flat_map(|b| b.residuals.iter()).fold(0.0, |a, r| a.max(*r))
    }
}

struct Field<'a> {
    gf: &'a GrazingFunction,
    obstacle: &'a Obstacle,
    along: DVector<f64>,
    across: DVector<f64>,
}

impl Field<'_> {
    fn point(&self, p: f64, q: f64) -> DVector<f64> {
        &self.along * p + &self.across * q
    }

    fn at(&self, p: f64, q: f64) -> Result<f64> {
        self.gf.value(self.obstacle, &self.point(p, q))
    }

    /// Root of `p ↦ g(p, q)` in a sign-changing bracket, to adjacent floats.
    fn bisect(&self, q: f64, mut a: f64, mut b: f64, mut ga: f64) -> Result<f64> {
        let mut gb = self.at(b, q)?;
        for _ in 0..2200 {
            let m = 0.5 * (a + b);
            if m == a || m == b {
                break;
            }
            let gm = self.at(m, q)?;
            if gm == 0.0 {
                return Ok(m);
            }
            if (gm < 0.0) == (ga < 0.0) {
                a = m;
                ga = gm;
            } else {
                b = m;
                gb = gm;
            }
        }
        Ok(if ga.abs() <= gb.abs() { a } else { b })
    }

    /// Sign change nearest to `center` among the scan cells on `[lo, hi]`.
    fn scan_root(&self, q: f64, lo: f64, hi: f64, n: usize, center: f64) -> Result<Option<f64>> {
        let n = n.max(3);
        let mut prev: Option<(f64, f64)> = None;
        let mut best: Option<(f64, f64, f64)> = None;
        let consider = |a: f64, b: f64, ga: f64, best: &mut Option<(f64, f64, f64)>| {
            let mid = 0.5 * (a + b);
            if best.is_none_or(|(ba, bb, _)| (mid - center).abs() < (0.5 * (ba + bb) - center).abs()) {
                *best = Some((a, b, ga));
            }
        };
        for k in 0..n {
            let p = lo + (hi - lo) * k as f64 / (n - 1) as f64;
            let g = match self.at(p, q) {
                Ok(g) => g,
                Err(Error::DomainExceeded { .. }) => {
                    prev = None;
                    continue;
                }
                Err(e) => return Err(e),
            };
            if g == 0.0 {
                consider(p, p, 0.0, &mut best);
            } else if let Some((pp, gp)) = prev {
                if gp != 0.0 && (gp < 0.0) != (g < 0.0) {
                    consider(pp, p, gp, &mut best);
                }
            }
            prev = Some((p, g));
        }
        match best {
            None => Ok(None),
            Some((a, b, ga)) if a == b || ga == 0.0 => Ok(Some(a)),
            Some((a, b, ga)) => self.bisect(q, a, b, ga).map(Some),
        }
    }

    /// Nearest sign change to a predicted `p`, found by an expanding search.
    fn root_near(&self, q: f64, pred: f64) -> Result<f64> {
        let g0 = self.at(pred, q)?;
        if g0 == 0.0 {
            return Ok(pred);
        }
        let mut delta = 0.01 * (pred.abs() + q.abs()).max(1e-300);
        for _ in 0..80 {
            for cand in [pred - delta, pred + delta] {
                let g = match self.at(cand, q) {
                    Ok(g) => g,
                    Err(Error::DomainExceeded { .. }) => continue,
                    Err(e) => return Err(e),
                };
                if g == 0.0 {
                    return Ok(cand);
                }
                if (g < 0.0) != (g0 < 0.0) {
                    let (a, b) = if cand < pred { (cand, pred) } else { (pred, cand) };
                    let ga = if cand < pred { g } else { g0 };
                    return self.bisect(q, a, b, ga);
                }
            }
            delta *= 2.0;
        }
        Err(Error::SeedNotFound(q))
    }
}

fn perp(v: &DVector<f64>) -> DVector<f64> {
    DVector::from_vec(vec![-v[1], v[0]])
}

/// Traces both branches of the grazing curve through the apex inside `|x̄| ≤ window`.
/// A window smaller than the seed offset yields empty branches.
pub fn trace_grazing_curve(
    gf: &GrazingFunction,
    obstacle: &Obstacle,
    window: f64,
    opts: &TraceOptions,
) -> Result<GrazingCurve> {
    if obstacle.dim() != 2 {
        return Err(Error::Unsupported(format!(
            "curve tracing needs two tangential variables, got {}",
            obstacle.dim()
        )));
    }
    let along = gf.apex_direction()?;
    let across = perp(&along);
    let field = Field { gf, obstacle, along: along.clone(), across: across.clone() };
    let mut branches = Vec::with_capacity(2);
    for side in [1i8, -1] {
        if !(window >= opts.v_seed) {
            branches.push(Branch { side, points: vec![], residuals: vec![], arc: vec![], termination: Termination::Empty });
            continue;
        }
        branches.push(trace_branch(&field, side, window, opts)?);
    }
    Ok(GrazingCurve { branches, window: window.max(0.0), along, across, trace_tol: opts.trace_tol })
}

fn trace_branch(field: &Field, side: i8, window: f64, opts: &TraceOptions) -> Result<Branch> {
    let sigma = side as f64;
    let r = field.obstacle.radius();
    let q0 = sigma * opts.v_seed;
    let reach = (window.min(r) * 0.99).powi(2) - q0 * q0;
    if reach <= 0.0 {
        return Err(Error::SeedNotFound(q0));
    }
    let pmax = reach.sqrt();
    let p0 = field.scan_root(q0, -pmax, pmax, opts.scan_points, 0.0)?.ok_or(Error::SeedNotFound(q0))?;

    // Toward the apex: one root per transverse offset, predicted by log-log extrapolation.
    let mut inner: Vec<(f64, f64)> = vec![(p0, q0)];
    let mut q = q0;
    loop {
        q *= opts.shrink;
        if q.abs() < opts.v_min * (1.0 - 1e-12) {
            break;
        }
        let n = inner.len();
        let (p1, q1) = inner[n - 1];
        let pred = if n >= 2 {
            let (pa, qa) = inner[n - 2];
            if pa != 0.0 && p1 != 0.0 && (pa < 0.0) == (p1 < 0.0) {
                let slope = (p1 / pa).ln() / (q1 / qa).ln();
                p1 * (q / q1).powf(slope)
            } else {
                p1 * q / q1
            }
        } else {
            p1 * q / q1
        };
        let p = field.root_near(q, pred)?;
        inner.push((p, q));
    }

    let mut points: Vec<DVector<f64>> = inner.iter().rev().map(|(p, q)| field.point(*p, *q)).collect();

    // Away from the apex: pseudo-arclength predictor with minimum-norm Newton correction.
    let mut z = field.point(p0, q0);
    let g0 = field.gf.gradient(field.obstacle, &z)?;
    let mut tau = perp(&g0);
    let tn = tau.norm();
    if tn == 0.0 {
        return Err(Error::StepCollapse(z.as_slice().to_vec()));
    }
    tau /= tn;
    if tau.dot(&field.across) * sigma < 0.0 {
        tau = -tau;
    }
    let mut h = opts.h_init;
    let mut termination = Termination::MaxSteps;
    for _ in 0..opts.max_steps {
        let h_cap = opts.h_max.min(opts.h_min.max(0.1 * z.norm()));
        h = h.min(h_cap);
        match correct(field, &(&z + &tau * h), h, opts) {
            Ok(Some(w)) => {
                let gw = field.gf.gradient(field.obstacle, &w)?;
                let mut tw = perp(&gw);
                let twn = tw.norm();
                if twn > 0.0 && (&w - &z).norm() <= 2.0 * h {
                    tw /= twn;
                    if tw.dot(&tau) < 0.0 {
                        tw = -tw;
                    }
                    if tw.dot(&tau) > 0.9 {
                        if w.norm() > window {
                            termination = Termination::Window;
                            break;
                        }
                        points.push(w.clone());
                        z = w;
                        tau = tw;
                        h = (1.5 * h).min(h_cap);
                        continue;
                    }
                }
            }
            Ok(None) => {}
            Err(Error::DomainExceeded { .. }) => {
                termination = Termination::DomainExceeded;
                break;
            }
            Err(e) => return Err(e),
        }
        h *= 0.5;
        if h < opts.h_min {
            return Err(Error::StepCollapse(z.as_slice().to_vec()));
        }
    }

    points.retain(|x| x.norm() <= window);
    let mut residuals = Vec::with_capacity(points.len());
    for x in &points {
        residuals.push(field.gf.value(field.obstacle, x)?.abs());
    }
    let mut arc = Vec::with_capacity(points.len());
    let mut acc = 0.0;
    for (i, x) in points.iter().enumerate() {
        if i > 0 {
            acc += (x - &points[i - 1]).norm();
        }
        arc.push(acc);
    }
    if points.is_empty() {
        termination = Termination::Empty;
    }
    Ok(Branch { side, points, residuals, arc, termination })
}

/// Newton iterations `w ← w - g ∇g/|∇g|²` from the predictor; `None` when they stall.
fn correct(field: &Field, start: &DVector<f64>, h: f64, opts: &TraceOptions) -> Result<Option<DVector<f64>>> {
    let mut w = start.clone();
    let mut prev = f64::INFINITY;
    for _ in 0..40 {
        let (g, dg) = field.gf.value_gradient(field.obstacle, &w)?;
        if g == 0.0 {
            return Ok(Some(w));
        }
        let n2 = dg.norm_squared();
        if n2 == 0.0 || !n2.is_finite() {
            return Ok(None);
        }
        let dw = &dg * (g / n2);
        w -= &dw;
        let step = dw.norm();
        if step > 4.0 * h {
            return Ok(None);
        }
        // Converged once the update is negligible or has stalled at rounding level.
        if step <= 1e-13 * h || (step <= 1e-8 * h && step >= 0.5 * prev) {
            let g = field.gf.value(field.obstacle, &w)?;
            return Ok((g.abs() <= opts.trace_tol).then_some(w));
        }
        prev = step;
    }
    Ok(None)
}
