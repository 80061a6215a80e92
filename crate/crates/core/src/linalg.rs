//! Small dense helpers shared by the geometry modules.

use nalgebra::{DMatrix, DVector};

/// `a ⊗ b` with entries `a_i b_j`.
pub fn outer(a: &DVector<f64>, b: &DVector<f64>) -> DMatrix<f64> {
    a * b.transpose()
}

/// `det(I + a ⊗ b) = 1 + <a, b>`.
pub fn rank_one_det(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    1.0 + a.dot(b)
}

/// `(I + a ⊗ b)^{-1} = I - a ⊗ b / (1 + <a, b>)`, `None` when `1 + <a, b>` vanishes.
pub fn rank_one_inverse(a: &DVector<f64>, b: &DVector<f64>) -> Option<DMatrix<f64>> {
    let denom = 1.0 + a.dot(b);
    if denom == 0.0 || !denom.is_finite() {
        return None;
    }
    let n = a.len();
    Some(DMatrix::identity(n, n) - outer(a, b) / denom)
}

/// Smallest eigenvalue of a symmetric matrix (symmetrized first).
pub fn min_sym_eigenvalue(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return f64::INFINITY;
    }
    if m.nrows() == 1 {
        return m[(0, 0)];
    }
    let sym = (m + m.transpose()) * 0.5;
    sym.symmetric_eigenvalues().min()
}

/// Symmetric eigen-decomposition returning (min eigenvalue, its unit eigenvector).
pub fn min_sym_eigenpair(m: &DMatrix<f64>) -> (f64, DVector<f64>) {
    let sym = (m + m.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let (idx, val) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, &v)| if v < acc.1 { (i, v) } else { acc });
    (val, eig.eigenvectors.column(idx).into_owned())
}

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

pub fn asymmetry(m: &DMatrix<f64>) -> f64 {
    max_abs(&(m - m.transpose()))
}

/// Central-difference Jacobian of `f: R^n -> R^m`, columns indexed by input.
pub fn central_jacobian<F>(x: &DVector<f64>, step: f64, mut f: F) -> DMatrix<f64>
where
    F: FnMut(&DVector<f64>) -> DVector<f64>,
{
    let n = x.len();
    let mut cols = Vec::with_capacity(n);
    let mut xp = x.clone();
    for j in 0..n {
        xp[j] = x[j] + step;
        let fp = f(&xp);
        xp[j] = x[j] - step;
        let fm = f(&xp);
        xp[j] = x[j];
        cols.push((fp - fm) / (2.0 * step));
    }
    let m = cols.first().map_or(0, |c| c.len());
    DMatrix::from_fn(m, n, |i, j| cols[j][i])
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
        DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn rank_one_lemma_matches_lu() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in 1..6 {
            for _ in 0..200 {
                let a = random_vec(&mut rng, n);
                let b = random_vec(&mut rng, n);
                let m = DMatrix::identity(n, n) + outer(&a, &b);
                let det_lu = m.clone().lu().determinant();
                assert!((rank_one_det(&a, &b) - det_lu).abs() <= 1e-12 * (1.0 + det_lu.abs()));
                if det_lu.abs() < 1e-3 {
                    continue;
                }
                let inv = rank_one_inverse(&a, &b).unwrap();
                let prod = &m * &inv;
                assert!(max_abs(&(prod - DMatrix::identity(n, n))) < 1e-12 / det_lu.abs().min(1.0));
            }
        }
    }

    #[test]
    fn singular_rank_one_has_no_inverse() {
        let a = DVector::from_vec(vec![1.0, 0.0]);
        let b = DVector::from_vec(vec![-1.0, 3.0]);
        assert_eq!(rank_one_det(&a, &b), 0.0);
        assert!(rank_one_inverse(&a, &b).is_none());
    }

    #[test]
    fn central_jacobian_of_linear_map_is_exact() {
        let a = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, -1.0, 0.5, 4.0]);
        let x = DVector::from_vec(vec![0.3, -0.2, 0.1]);
        let j = central_jacobian(&x, 1e-3, |v| &a * v);
        assert!(max_abs(&(j - a)) < 1e-12);
    }
}
