//! Sampling evidence that `Z_r` is a diffeomorphism off the grazing face.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{classify_boundary_point, flow_point_raw, jacobian_analytic, BoundaryLabel, GRAZING_TOL};
use crate::diffgeo::Obstacle;
use crate::error::{Error, Result};
use crate::phases::IncomingPhase;

#[derive(Debug, Clone, PartialEq)]
pub struct RfmOptions {
    pub seed: u64,
    /// Random pairs tested for image separation.
    pub pairs: usize,
    /// Domain offset for the near-pair stretch test.
    pub near_offset: f64,
    pub min_stretch: f64,
    pub bound_slack: f64,
    pub fd_rel_tol: f64,
    pub fd_abs_tol: f64,
}

impl Default for RfmOptions {
    fn default() -> Self {
        Self {
            seed: 42,
            pairs: 10_000,
            near_offset: 1e-3,
            min_stretch: 1e-6,
            bound_slack: 1e-9,
            fd_rel_tol: 1e-6,
            fd_abs_tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RfmSample {
    pub s: f64,
    pub xbar: DVector<f64>,
    pub t: f64,
    pub mu: f64,
    /// `NaN` on grazing samples.
    pub j_analytic: f64,
    pub j_fd: f64,
    pub bound: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RfmOffender {
    BoundViolated { sample: usize, j_analytic: f64, bound: f64 },
    FdMismatch { sample: usize, j_analytic: f64, j_fd: f64 },
    Collapse { a: usize, b: usize, domain: f64, image: f64 },
    NearStretch { sample: usize, ratio: f64 },
    Error { sample: usize, message: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RfmVerdict {
    pub passes: bool,
    pub samples: Vec<RfmSample>,
    pub offenders: Vec<RfmOffender>,
    /// Smallest `j_analytic - 2μ` over lit samples.
    pub worst_bound_gap: f64,
    pub worst_fd_rel: f64,
    pub min_near_stretch: f64,
    pub pairs_checked: usize,
}

const MAX_OFFENDERS: usize = 20;

/// Samples `budget` points of `[0, s₀] × (G ∪ I₋) × [0, 1]` with `|x̄| ≤ radius` and checks the
/// lower bound `j ≥ 2μ`, analytic against difference Jacobians, and injectivity on random and
/// nearby pairs.
pub fn verify_rfm(
    obstacle: &Obstacle,
    phase: &IncomingPhase,
    s0: f64,
    radius: f64,
    budget: usize,
    opts: &RfmOptions,
) -> Result<RfmVerdict> {
    if budget == 0 {
        return Err(Error::InvalidBudget);
    }
    let m = obstacle.dim();
    let radius = radius.min(obstacle.radius());
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut samples = Vec::with_capacity(budget);
    let mut images = Vec::with_capacity(budget);
    let mut offenders = Vec::new();
    let record = |offenders: &mut Vec<RfmOffender>, o: RfmOffender| {
        if offenders.len() < MAX_OFFENDERS {
            offenders.push(o);
        }
    };
    let mut failures = 0usize;
    let mut worst_bound_gap = f64::INFINITY;
    let mut worst_fd_rel = 0.0_f64;
    let max_attempts = budget.saturating_mul(1000);
    let mut attempts = 0;
    while samples.len() < budget && attempts < max_attempts {
        attempts += 1;
        let x = random_in_ball(&mut rng, m, radius);
        let s = rng.random_range(0.0..=s0);
        let t = rng.random_range(0.0..1.0);
        let Ok(c) = classify_boundary_point(obstacle, phase, &x, GRAZING_TOL) else { continue };
        if c.label == BoundaryLabel::Shadow {
            continue;
        }
        let idx = samples.len();
        let mut sample = RfmSample {
            s,
            xbar: x.clone(),
            t,
            mu: c.margin,
            j_analytic: f64::NAN,
            j_fd: f64::NAN,
            bound: 2.0 * c.margin,
            pass: true,
        };
        if c.label == BoundaryLabel::Illuminated {
            match jacobian_analytic(obstacle, phase, s, &x) {
                Ok(r) => {
                    sample.j_analytic = r.j_analytic;
                    sample.j_fd = r.j_fd;
                    let gap = r.j_analytic - r.lower_bound;
                    worst_bound_gap = worst_bound_gap.min(gap);
                    if !(gap >= -opts.bound_slack) {
                        sample.pass = false;
                        record(&mut offenders, RfmOffender::BoundViolated { sample: idx, j_analytic: r.j_analytic, bound: r.lower_bound });
                    }
                    let diff = (r.j_analytic - r.j_fd).abs();
                    worst_fd_rel = worst_fd_rel.max(diff / r.j_analytic.abs().max(f64::MIN_POSITIVE));
                    if !(diff <= opts.fd_rel_tol * r.j_analytic.abs() + opts.fd_abs_tol) {
                        sample.pass = false;
                        record(&mut offenders, RfmOffender::FdMismatch { sample: idx, j_analytic: r.j_analytic, j_fd: r.j_fd });
                    }
                }
                Err(e) => {
                    sample.pass = false;
                    record(&mut offenders, RfmOffender::Error { sample: idx, message: e.to_string() });
                }
            }
        }
        if !sample.pass {
            failures += 1;
        }
        images.push(flow_point_raw(obstacle, phase, s, &x, t)?);
        samples.push(sample);
    }

    let domain = |i: usize| {
        let smp = &samples[i];
        let mut v = DVector::zeros(m + 2);
        v[0] = smp.s;
        v.rows_mut(1, m).copy_from(&smp.xbar);
        v[m + 1] = smp.t;
        v
    };
    let n = samples.len();
    let mut pairs_checked = 0;
    if n >= 2 {
        for _ in 0..opts.pairs {
            let a = rng.random_range(0..n);
            let b = rng.random_range(0..n);
            if a == b {
                continue;
            }
            pairs_checked += 1;
            let dd = (domain(a) - domain(b)).norm();
            let di = (&images[a] - &images[b]).norm();
            if di < 1e-9 && dd > 1e-6 {
                failures += 1;
                record(&mut offenders, RfmOffender::Collapse { a, b, domain: dd, image: di });
            }
        }
    }

    let mut min_near_stretch = f64::INFINITY;
    for i in 0..n.min(1000) {
        let base = domain(i);
        let dir = loop {
            let v = DVector::from_fn(m + 2, |_, _| rng.random_range(-1.0..1.0));
            let norm = v.norm();
            if norm > 1e-3 {
                break v / norm;
            }
        };
        let mut other: DVector<f64> = &base + dir * opts.near_offset;
        other[0] = other[0].clamp(0.0, s0);
        let x = other.rows(1, m).into_owned();
        if x.norm() > radius {
            continue;
        }
        let Ok(c) = classify_boundary_point(obstacle, phase, &x, GRAZING_TOL) else { continue };
        if c.label == BoundaryLabel::Shadow {
            continue;
        }
        let img = flow_point_raw(obstacle, phase, other[0], &x, other[m + 1])?;
        let dd = (&other - &base).norm();
        if dd == 0.0 {
            continue;
        }
        let ratio = (img - &images[i]).norm() / dd;
        min_near_stretch = min_near_stretch.min(ratio);
        if ratio < opts.min_stretch {
            failures += 1;
            record(&mut offenders, RfmOffender::NearStretch { sample: i, ratio });
        }
    }

    Ok(RfmVerdict {
        passes: failures == 0 && n > 0,
        samples,
        offenders,
        worst_bound_gap,
        worst_fd_rel,
        min_near_stretch,
        pairs_checked,
    })
}

fn random_in_ball(rng: &mut ChaCha8Rng, m: usize, radius: f64) -> DVector<f64> {
    loop {
        let v = DVector::from_fn(m, |_, _| rng.random_range(-1.0..1.0));
        if v.norm() <= 1.0 {
            return v * radius;
        }
    }
}
