//! Sparse multivariate polynomials over multi-indices.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// A polynomial `Σ c_α x^α` stored as sorted, merged, nonzero terms.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    nvars: usize,
    terms: Vec<(Vec<u32>, f64)>,
}

impl Polynomial {
    /// Builds a polynomial, merging repeated multi-indices and dropping zero terms.
    pub fn new<I>(nvars: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<u32>, f64)>,
    {
        let mut map: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
        for (exps, c) in terms {
            if exps.len() != nvars {
                return Err(Error::DimensionMismatch { expected: nvars, got: exps.len() });
            }
            if !c.is_finite() {
                return Err(Error::InvalidSurface(format!("non-finite coefficient {c}")));
            }
            *map.entry(exps).or_insert(0.0) += c;
        }
        Ok(Self::from_map(nvars, map))
    }

    fn from_map(nvars: usize, map: BTreeMap<Vec<u32>, f64>) -> Self {
        let terms = map.into_iter().filter(|(_, c)| *c != 0.0).collect();
        Self { nvars, terms }
    }

    pub fn zero(nvars: usize) -> Self {
        Self { nvars, terms: Vec::new() }
    }

    pub fn constant(nvars: usize, c: f64) -> Self {
        Self::from_map(nvars, BTreeMap::from([(vec![0; nvars], c)]))
    }

    /// The single variable `x_i`.
    pub fn variable(nvars: usize, i: usize) -> Self {
        let mut e = vec![0; nvars];
        e[i] = 1;
        Self { nvars, terms: vec![(e, 1.0)] }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn terms(&self) -> &[(Vec<u32>, f64)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> Option<u32> {
        self.terms.iter().map(|(e, _)| e.iter().sum()).max()
    }

    pub fn min_degree(&self) -> Option<u32> {
        self.terms.iter().map(|(e, _)| e.iter().sum()).min()
    }

    pub fn coefficient(&self, exps: &[u32]) -> f64 {
        self.terms
            .iter()
            .find(|(e, _)| e.as_slice() == exps)
            .map_or(0.0, |(_, c)| *c)
    }

    /// The homogeneous part of total degree `deg`.
    pub fn homogeneous_part(&self, deg: u32) -> Self {
        let terms = self
            .terms
            .iter()
            .filter(|(e, _)| e.iter().sum::<u32>() == deg)
            .cloned()
            .collect();
        Self { nvars: self.nvars, terms }
    }

    pub fn is_homogeneous(&self) -> bool {
        self.degree() == self.min_degree()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|(e, c)| c * monomial(e, x)).sum()
    }

    /// Partial derivative with respect to `x_var`.
    pub fn derivative(&self, var: usize) -> Self {
        let terms = self
            .terms
            .iter()
            .filter(|(e, _)| e[var] > 0)
            .map(|(e, c)| {
                let mut e2 = e.clone();
                e2[var] -= 1;
                (e2, c * f64::from(e[var]))
            })
            .collect();
        Self { nvars: self.nvars, terms }
    }

    pub fn scale(&self, k: f64) -> Self {
        if k == 0.0 {
            return Self::zero(self.nvars);
        }
        let terms = self.terms.iter().map(|(e, c)| (e.clone(), c * k)).collect();
        Self { nvars: self.nvars, terms }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut map: BTreeMap<Vec<u32>, f64> = self.terms.iter().cloned().collect();
        for (e, c) in &other.terms {
            *map.entry(e.clone()).or_insert(0.0) += c;
        }
        Self::from_map(self.nvars, map)
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut map: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let e: Vec<u32> = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                *map.entry(e).or_insert(0.0) += ca * cb;
            }
        }
        Self::from_map(self.nvars, map)
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut acc = Self::constant(self.nvars, 1.0);
        for _ in 0..k {
            acc = acc.mul(self);
        }
        acc
    }

    /// `q(y) = p(M y)`, expanded exactly into monomials of `y`.
    pub fn compose_linear(&self, m: &DMatrix<f64>) -> Self {
        let n = self.nvars;
        let forms: Vec<Self> = (0..n)
            .map(|i| {
                let terms = (0..m.ncols()).map(|j| {
                    let mut e = vec![0; m.ncols()];
                    e[j] = 1;
                    (e, m[(i, j)])
                });
                let mut map = BTreeMap::new();
                for (e, c) in terms {
                    map.insert(e, c);
                }
                Self::from_map(m.ncols(), map)
            })
            .collect();
        let mut out = Self::zero(m.ncols());
        for (e, c) in &self.terms {
            let mut prod = Self::constant(m.ncols(), *c);
            for (i, &k) in e.iter().enumerate() {
                if k > 0 {
                    prod = prod.mul(&forms[i].pow(k));
                }
            }
            out = out.add(&prod);
        }
        out
    }

    pub fn gradient_polys(&self) -> Vec<Self> {
        (0..self.nvars).map(|i| self.derivative(i)).collect()
    }

    pub fn gradient(&self, x: &[f64]) -> DVector<f64> {
        DVector::from_fn(self.nvars, |i, _| self.derivative(i).eval(x))
    }

    pub fn hessian(&self, x: &[f64]) -> DMatrix<f64> {
        let n = self.nvars;
        let mut h = DMatrix::zeros(n, n);
        for i in 0..n {
            let di = self.derivative(i);
            for j in i..n {
                let v = di.derivative(j).eval(x);
                h[(i, j)] = v;
                h[(j, i)] = v;
            }
        }
        h
    }

    /// Coefficients `c_1..c_J` of `p(s d) = p(0) + Σ c_j s^j`, i.e. `c_j = p_j(d)`.
    pub fn directional_coefficients(&self, d: &[f64], order: usize) -> Vec<f64> {
        let mut c = vec![0.0; order];
        for (e, coef) in &self.terms {
            let deg = e.iter().sum::<u32>() as usize;
            if (1..=order).contains(&deg) {
                c[deg - 1] += coef * monomial(e, d);
            }
        }
        c
    }
}

fn monomial(e: &[u32], x: &[f64]) -> f64 {
    e.iter()
        .zip(x)
        .filter(|(k, _)| **k > 0)
        .map(|(k, v)| v.powi(*k as i32))
        .product()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quartic() -> Polynomial {
        Polynomial::new(2, [(vec![4, 0], 1.0), (vec![2, 2], 1.0), (vec![0, 4], 1.0)]).unwrap()
    }

    #[test]
    fn merges_repeated_terms_and_drops_zeros() {
        let p = Polynomial::new(2, [(vec![1, 0], 2.0), (vec![1, 0], -2.0), (vec![0, 2], 3.0)]).unwrap();
        assert_eq!(p.terms(), &[(vec![0, 2], 3.0)]);
    }

    #[test]
    fn rejects_wrong_arity() {
        assert!(Polynomial::new(2, [(vec![1], 1.0)]).is_err());
    }

    #[test]
    fn derivatives_are_exact() {
        let p = quartic();
        let g = p.gradient(&[1.0, 0.0]);
        assert_eq!(g.as_slice(), &[4.0, 0.0]);
        let h = p.hessian(&[1.0, 0.0]);
        assert_eq!(h, DMatrix::from_row_slice(2, 2, &[12.0, 0.0, 0.0, 2.0]));
    }

    #[test]
    fn compose_with_swap_permutes_exponents() {
        let p = Polynomial::new(2, [(vec![4, 0], 1.0), (vec![0, 2], 1.0)]).unwrap();
        let swap = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let q = p.compose_linear(&swap);
        assert_eq!(q.coefficient(&[0, 4]), 1.0);
        assert_eq!(q.coefficient(&[2, 0]), 1.0);
        assert_eq!(q.terms().len(), 2);
    }

    #[test]
    fn compose_matches_pointwise_evaluation() {
        let p = quartic().add(&Polynomial::new(2, [(vec![3, 0], 4.0), (vec![1, 2], -1.5)]).unwrap());
        let m = DMatrix::from_row_slice(2, 2, &[0.6, -0.8, 0.8, 0.6]);
        let q = p.compose_linear(&m);
        for &(a, b) in &[(0.1, 0.2), (-0.3, 0.05), (0.7, -0.4)] {
            let y = DVector::from_vec(vec![a, b]);
            let x = &m * &y;
            assert!((q.eval(y.as_slice()) - p.eval(x.as_slice())).abs() < 1e-14);
        }
    }

    #[test]
    fn directional_coefficients_pick_homogeneous_parts() {
        let p = Polynomial::new(2, [(vec![0, 0], 1.0), (vec![4, 0], -1.0), (vec![0, 2], -1.0)]).unwrap();
        assert_eq!(p.directional_coefficients(&[1.0, 0.0], 4), vec![0.0, 0.0, 0.0, -1.0]);
        assert_eq!(p.directional_coefficients(&[0.0, 1.0], 2), vec![0.0, -1.0]);
    }

    #[test]
    fn homogeneous_part_and_degrees() {
        let p = quartic().add(&Polynomial::new(2, [(vec![2, 0], 1.0)]).unwrap());
        assert_eq!(p.degree(), Some(4));
        assert_eq!(p.min_degree(), Some(2));
        assert!(!p.is_homogeneous());
        assert!(p.homogeneous_part(4).is_homogeneous());
        assert_eq!(p.homogeneous_part(4), quartic());
    }
}
