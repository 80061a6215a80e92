//! Obstacles of the form `F(x̄) = 1 - h(|Λx̄|²)`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Below this `s` the flat profile `exp(-1/s²)` underflows to zero along with its derivatives.
const EXP_FLAT_CUTOFF: f64 = 0.0366;

/// The radial profile `h` with `h(0) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub enum HProfile {
    /// `h(s) = Σ_k a_k s^k`, `a_1` first.
    Taylor(Vec<f64>),
    /// `h(s) = exp(-1/s²)`: every derivative vanishes at 0.
    ExpFlat,
    /// `h(s) = ρ - sqrt(ρ² - s)`, the cap of a ball of radius ρ.
    Sphere { radius: f64 },
}

impl HProfile {
    /// Returns `(h, h', h'')` at `s ≥ 0`.
    pub fn derivatives(&self, s: f64) -> Result<(f64, f64, f64)> {
        if s < 0.0 || !s.is_finite() {
            return Err(Error::HDomainExceeded(s));
        }
        match self {
            HProfile::Taylor(a) => {
                let (mut h, mut h1, mut h2) = (0.0, 0.0, 0.0);
                for (i, &c) in a.iter().enumerate() {
                    let k = i as i32 + 1;
                    let kf = f64::from(k);
                    h += c * s.powi(k);
                    h1 += c * kf * s.powi(k - 1);
                    if k >= 2 {
                        h2 += c * kf * (kf - 1.0) * s.powi(k - 2);
                    }
                }
                Ok((h, h1, h2))
            }
            HProfile::ExpFlat => {
                if s < EXP_FLAT_CUTOFF {
                    return Ok((0.0, 0.0, 0.0));
                }
                let e = (-1.0 / (s * s)).exp();
                let h1 = 2.0 * e / s.powi(3);
                let h2 = (4.0 / s.powi(6) - 6.0 / s.powi(4)) * e;
                Ok((e, h1, h2))
            }
            HProfile::Sphere { radius } => {
                let r2 = radius * radius;
                if s >= r2 {
                    return Err(Error::HDomainExceeded(s));
                }
                let w = (r2 - s).sqrt();
                Ok((s / (radius + w), 0.5 / w, 0.25 / (w * w * w)))
            }
        }
    }

    /// `h(s)/h'(s)`, continuous at `s = 0` where it is 0.
    pub fn ratio(&self, s: f64) -> Result<f64> {
        if s == 0.0 {
            return Ok(0.0);
        }
        match self {
            HProfile::ExpFlat if s > 0.0 => Ok(0.5 * s * s * s),
            HProfile::Sphere { radius } => {
                let (h, _, _) = self.derivatives(s)?;
                let w = (radius * radius - s).sqrt();
                Ok(2.0 * w * h)
            }
            _ => {
                let (h, h1, _) = self.derivatives(s)?;
                if h1 == 0.0 {
                    return Err(Error::HDomainExceeded(s));
                }
                Ok(h / h1)
            }
        }
    }

    /// `d/ds (h/h')(s) = 1 - h h''/h'²`; at `s = 0` the limit `1/m` for a first nonzero
    /// coefficient `a_m`.
    pub fn ratio_derivative(&self, s: f64) -> Result<f64> {
        match self {
            HProfile::ExpFlat => Ok(1.5 * s * s),
            HProfile::Sphere { radius } => {
                self.derivatives(s)?;
                let w = (radius * radius - s).sqrt();
                Ok((2.0 * w - radius) / w)
            }
            HProfile::Taylor(a) => {
                if s == 0.0 {
                    let m = a.iter().position(|c| *c != 0.0).map_or(1, |i| i + 1);
                    return Ok(1.0 / m as f64);
                }
                let (h, h1, h2) = self.derivatives(s)?;
                if h1 == 0.0 {
                    return Err(Error::HDomainExceeded(s));
                }
                Ok(1.0 - h * h2 / (h1 * h1))
            }
        }
    }

    /// Taylor coefficients `a_1..a_K` of `h` at 0.
    pub fn taylor(&self, k: usize) -> Vec<f64> {
        match self {
            HProfile::Taylor(a) => (0..k).map(|i| a.get(i).copied().unwrap_or(0.0)).collect(),
            HProfile::ExpFlat => vec![0.0; k],
            HProfile::Sphere { radius } => {
                // h = -ρ Σ_{k≥1} C(1/2, k) (-s/ρ²)^k
                let mut out = Vec::with_capacity(k);
                let mut binom = 1.0;
                let mut pow = 1.0;
                for j in 1..=k {
                    binom *= (0.5 - (j as f64 - 1.0)) / j as f64;
                    pow *= -1.0 / (radius * radius);
                    out.push(-radius * binom * pow);
                }
                out
            }
        }
    }

    /// Largest admissible `s`, if bounded.
    pub fn s_max(&self) -> Option<f64> {
        match self {
            HProfile::Sphere { radius } => Some(radius * radius),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricH {
    profile: HProfile,
    lambda: DMatrix<f64>,
    gram: DMatrix<f64>,
}

impl SymmetricH {
    /// Validates the profile on `(0, s_max]`, where `s_max = (‖Λ‖ R)²`.
    pub fn new(profile: HProfile, lambda: DMatrix<f64>, radius: f64) -> Result<Self> {
        let n = lambda.nrows();
        if n == 0 || lambda.ncols() != n {
            return Err(Error::InvalidSurface("lambda must be square and nonempty".into()));
        }
        let scale = lambda.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        let det = lambda.clone().lu().determinant();
        if !det.is_finite() || det.abs() <= 1e-12 * scale.powi(n as i32).max(f64::MIN_POSITIVE) {
            return Err(Error::InvalidSurface("lambda is singular".into()));
        }
        match &profile {
            HProfile::Taylor(a) => {
                match a.iter().find(|c| **c != 0.0) {
                    None => return Err(Error::InvalidSurface("h vanishes identically".into())),
                    Some(c) if *c < 0.0 => {
                        return Err(Error::InvalidSurface(
                            "first nonzero coefficient of h must be positive".into(),
                        ))
                    }
                    _ => {}
                }
            }
            HProfile::Sphere { radius } if !(*radius > 0.0 && radius.is_finite()) => {
                return Err(Error::InvalidSurface("sphere radius must be positive".into()));
            }
            _ => {}
        }
        let norm = lambda.clone().singular_values().max();
        let mut s_max = (norm * radius).powi(2);
        if let Some(cap) = profile.s_max() {
            if s_max >= cap {
                return Err(Error::InvalidSurface(format!(
                    "domain radius {radius} reaches the edge of the profile domain"
                )));
            }
            s_max = s_max.min(cap);
        }
        const SAMPLES: usize = 256;
        for i in 1..=SAMPLES {
            let s = s_max * i as f64 / SAMPLES as f64;
            let (_, h1, _) = profile.derivatives(s)?;
            let flat_underflow = matches!(profile, HProfile::ExpFlat) && s < EXP_FLAT_CUTOFF;
            if !(h1 > 0.0 || flat_underflow) {
                return Err(Error::InvalidSurface(format!("h' is not positive at s = {s}")));
            }
        }
        let gram = lambda.transpose() * &lambda;
        Ok(Self { profile, lambda, gram })
    }

    pub fn profile(&self) -> &HProfile {
        &self.profile
    }

    pub fn lambda(&self) -> &DMatrix<f64> {
        &self.lambda
    }

    /// `ΛᵀΛ`.
    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    pub fn dim(&self) -> usize {
        self.lambda.nrows()
    }

    /// `|Λx̄|²`.
    pub fn s_of(&self, x: &DVector<f64>) -> f64 {
        (&self.lambda * x).norm_squared()
    }

    pub fn value(&self, x: &DVector<f64>) -> Result<f64> {
        let (h, _, _) = self.profile.derivatives(self.s_of(x))?;
        Ok(1.0 - h)
    }

    /// `∇F = -2h' ΛᵀΛx̄`.
    pub fn gradient(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        let (_, h1, _) = self.profile.derivatives(self.s_of(x))?;
        Ok(&self.gram * x * (-2.0 * h1))
    }

    /// `∇²F = -2h' ΛᵀΛ - 4h'' (ΛᵀΛx̄) ⊗ (ΛᵀΛx̄)`.
    pub fn hessian(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        let (_, h1, h2) = self.profile.derivatives(self.s_of(x))?;
        let y = &self.gram * x;
        let mut m = &self.gram * (-2.0 * h1) - (&y * y.transpose()) * (4.0 * h2);
        let mt = m.transpose();
        m = (m + mt) * 0.5;
        Ok(m)
    }

    /// `c_j` of `F(s d) = 1 + Σ c_j s^j`: only even `j` are nonzero, `c_{2k} = -a_k |Λd|^{2k}`.
    pub fn directional_coefficients(&self, d: &DVector<f64>, order: usize) -> Vec<f64> {
        let q = (&self.lambda * d).norm_squared();
        let a = self.profile.taylor(order / 2);
        let mut c = vec![0.0; order];
        for (k, ak) in a.iter().enumerate() {
            let j = 2 * (k + 1);
            c[j - 1] = -ak * q.powi(k as i32 + 1);
        }
        c
    }

    /// Same surface seen through `x̄ = Qᵀ y`.
    pub fn rotated(&self, q: &DMatrix<f64>) -> Self {
        let lambda = &self.lambda * q.transpose();
        let gram = lambda.transpose() * &lambda;
        Self { profile: self.profile.clone(), lambda, gram }
    }
}
