//! Grazing points on a planar slice of the boundary, and the one-variable sign scan.
//!
//! With a source at `(1, a, 0)`, `a = -|b̄|`, and a point `A* = (x₂*, 0)` with `a < x₂* < 0`,
//! the plane through the source containing the ray to `(F(A*), A*)` and the `x₃` direction
//! meets the boundary where
//!
//! `K(x̄) = (F(x̄) - 1)(x₂* - a) + (x₂ - a)(1 - F(A*)) = 0`.
//!
//! For concave `F` the set `K ≥ 0` is convex and bounded by a closed curve through `A*` and
//! a second axis point `B*`, so it can be parametrized by angle from the midpoint of `A*B*`.

use std::f64::consts::PI;

use nalgebra::DVector;

use super::GrazingFunction;
use crate::diffgeo::Obstacle;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SliceCount {
    /// Grazing points with `x₃ > 0` in the rotated frame.
    pub positive: usize,
    pub negative: usize,
    /// Grazing points in the original coordinates.
    pub points: Vec<DVector<f64>>,
    /// The second axis point of the slice curve, rotated frame.
    pub b_star: f64,
}

struct Slice<'a> {
    obstacle: &'a Obstacle,
    a: f64,
    x2_star: f64,
    f_star: f64,
}

impl Slice<'_> {
    fn k(&self, y: &DVector<f64>) -> Result<f64> {
        let f = self.obstacle.eval(y)?;
        Ok((f - 1.0) * (self.x2_star - self.a) + (y[0] - self.a) * (1.0 - self.f_star))
    }

    /// Bisects `K` along `center + r·dir` between `r = 0` (inside) and `r_max` (outside).
    fn boundary_along(&self, center: &DVector<f64>, dir: &DVector<f64>, r_max: f64) -> Result<DVector<f64>> {
        let outer = center + dir * r_max;
        if self.k(&outer)? >= 0.0 {
            return Err(Error::SliceMiss);
        }
        let (mut lo, mut hi) = (0.0, r_max);
        for _ in 0..200 {
            let m = 0.5 * (lo + hi);
            if m == lo || m == hi {
                break;
            }
            if self.k(&(center + dir * m))? >= 0.0 {
                lo = m;
            } else {
                hi = m;
            }
        }
        Ok(center + dir * (0.5 * (lo + hi)))
    }
}

/// Counts sign changes of `𝓗` around the slice curve through `(x₂*, 0)` for a source at
/// `(1, b̄)`, split by the side of the `x₃ = 0` line (after rotating `b̄` onto the negative
/// first axis). `samples` angles are used; each crossing is refined by bisection in angle.
pub fn slice_grazing_count(
    obstacle: &Obstacle,
    bbar: &DVector<f64>,
    x2_star: f64,
    samples: usize,
) -> Result<SliceCount> {
    if obstacle.dim() != 2 {
        return Err(Error::Unsupported(format!("slice counts need two tangential variables, got {}", obstacle.dim())));
    }
    let (rot, q) = obstacle.rotate_coordinates(bbar)?;
    let a = -bbar.norm();
    if !(x2_star < 0.0 && x2_star > a) {
        return Err(Error::SliceMiss);
    }
    let r_dom = 0.999 * rot.radius();
    let f_star = match rot.eval(&DVector::from_vec(vec![x2_star, 0.0])) {
        Ok(f) => f,
        Err(Error::DomainExceeded { .. }) => return Err(Error::SliceMiss),
        Err(e) => return Err(e),
    };
    if f_star >= 1.0 {
        return Err(Error::SliceMiss);
    }
    let slice = Slice { obstacle: &rot, a, x2_star, f_star };

    let origin = DVector::zeros(2);
    let b_star = slice.boundary_along(&origin, &DVector::from_vec(vec![1.0, 0.0]), r_dom)?[0];
    let center = DVector::from_vec(vec![0.5 * (x2_star + b_star), 0.0]);
    if slice.k(&center)? <= 0.0 {
        return Err(Error::SliceMiss);
    }

    let h = GrazingFunction::SphericalH { b1: 1.0, bbar: DVector::from_vec(vec![a, 0.0]) };
    let samples = samples.max(8);
    let point_at = |phi: f64| -> Result<DVector<f64>> {
        let dir = DVector::from_vec(vec![phi.cos(), phi.sin()]);
        // Largest r keeping |center + r dir| ≤ r_dom.
        let cd = center.dot(&dir);
        let r_max = -cd + (cd * cd - center.norm_squared() + r_dom * r_dom).sqrt();
        slice.boundary_along(&center, &dir, r_max)
    };
    let mut values = Vec::with_capacity(samples);
    for k in 0..samples {
        let phi = 2.0 * PI * k as f64 / samples as f64;
        let y = point_at(phi)?;
        values.push((phi, h.value(&rot, &y)?));
    }
    let nonzero: Vec<(f64, f64)> = values.into_iter().filter(|(_, v)| *v != 0.0).collect();
    let mut count = SliceCount { positive: 0, negative: 0, points: vec![], b_star };
    let m = nonzero.len();
    for i in 0..m {
        let (p0, v0) = nonzero[i];
        let (mut p1, v1) = nonzero[(i + 1) % m];
        if (v0 < 0.0) == (v1 < 0.0) {
            continue;
        }
        if p1 <= p0 {
            p1 += 2.0 * PI;
        }
        let (mut lo, mut hi) = (p0, p1);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            let vm = h.value(&rot, &point_at(mid)?)?;
            if vm == 0.0 {
                lo = mid;
                hi = mid;
                break;
            }
            if (vm < 0.0) == (v0 < 0.0) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let y = point_at(0.5 * (lo + hi))?;
        if y[1] > 0.0 {
            count.positive += 1;
        } else if y[1] < 0.0 {
            count.negative += 1;
        }
        count.points.push(q.transpose() * y);
    }
    Ok(count)
}

/// Locations of the strict sign changes of a one-variable grazing function on a uniform grid
/// over `[-half_width, half_width]`; exact zeros on the grid are skipped, and each change is
/// refined by bisection.
pub fn sign_changes_1d(
    gf: &GrazingFunction,
    obstacle: &Obstacle,
    half_width: f64,
    samples: usize,
) -> Result<Vec<f64>> {
    if obstacle.dim() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, got: obstacle.dim() });
    }
    let eval = |x: f64| gf.value(obstacle, &DVector::from_element(1, x));
    let samples = samples.max(2);
    let mut last: Option<(f64, f64)> = None;
    let mut roots = Vec::new();
    for k in 0..samples {
        let x = -half_width + 2.0 * half_width * k as f64 / (samples - 1) as f64;
        let v = eval(x)?;
        if v == 0.0 {
            continue;
        }
        if let Some((xl, vl)) = last {
            if (vl < 0.0) != (v < 0.0) {
                let (mut lo, mut hi) = (xl, x);
                for _ in 0..200 {
                    let m = 0.5 * (lo + hi);
                    if m == lo || m == hi {
                        break;
                    }
                    let vm = eval(m)?;
                    if vm == 0.0 {
                        lo = m;
                        hi = m;
                        break;
                    }
                    if (vm < 0.0) == (vl < 0.0) {
                        lo = m;
                    } else {
                        hi = m;
                    }
                }
                roots.push(0.5 * (lo + hi));
            }
        }
        last = Some((x, v));
    }
    Ok(roots)
}
