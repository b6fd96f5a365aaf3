//! Lowest eigenpair of a real symmetric tridiagonal matrix.
//!
//! Sturm-sequence bisection pins the smallest eigenvalue, then inverse
//! iteration at a shift just below it recovers the eigenvector. The shifted
//! matrix is positive (semi)definite there, so the LDLᵀ pivots stay positive
//! and no pivoting is needed.

use crate::error::{Error, Result};

/// Symmetric tridiagonal matrix: `diag[0..n]`, `off[0..n-1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SymTridiagonal {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct Eigenpair {
    pub value: f64,
    pub vector: Vec<f64>,
    /// ‖(T − λ)v‖₂ with ‖v‖ = 1.
    pub residual: f64,
}

impl SymTridiagonal {
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Self {
        assert!(
            off.len() + 1 == diag.len() || (diag.is_empty() && off.is_empty()),
            "off-diagonal length must be n-1"
        );
        SymTridiagonal { diag, off }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// ‖T‖∞.
    pub fn norm_inf(&self) -> f64 {
        let n = self.len();
        (0..n)
            .map(|i| {
                let l = if i > 0 { self.off[i - 1].abs() } else { 0.0 };
                let r = if i + 1 < n { self.off[i].abs() } else { 0.0 };
                self.diag[i].abs() + l + r
            })
            .fold(0.0, f64::max)
    }

    pub fn apply(&self, v: &[f64], out: &mut [f64]) {
        let n = self.len();
        for i in 0..n {
            let mut acc = self.diag[i] * v[i];
            if i > 0 {
                acc += self.off[i - 1] * v[i - 1];
            }
            if i + 1 < n {
                acc += self.off[i] * v[i + 1];
            }
            out[i] = acc;
        }
    }

    fn gershgorin(&self) -> (f64, f64) {
        let n = self.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let l = if i > 0 { self.off[i - 1].abs() } else { 0.0 };
            let r = if i + 1 < n { self.off[i].abs() } else { 0.0 };
            lo = lo.min(self.diag[i] - l - r);
            hi = hi.max(self.diag[i] + l + r);
        }
        (lo, hi)
    }

    /// Number of eigenvalues strictly below `lambda`.
    pub fn sturm_count(&self, lambda: f64) -> usize {
        let pivmin = f64::MIN_POSITIVE.max(f64::EPSILON * self.norm_inf() * 1e-3);
        let mut count = 0;
        let mut q = 1.0;
        for i in 0..self.len() {
            let e2 = if i > 0 {
                self.off[i - 1] * self.off[i - 1]
            } else {
                0.0
            };
            q = self.diag[i] - lambda - if i > 0 { e2 / q } else { 0.0 };
            if q.abs() < pivmin {
                q = -pivmin;
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// Bracket `[lo, hi]` around the smallest eigenvalue, width at rounding level.
    pub fn lowest_eigenvalue_bracket(&self) -> (f64, f64) {
        let (mut lo, hi0) = self.gershgorin();
        let pad = f64::EPSILON * self.norm_inf().max(1.0) * 4.0;
        lo -= pad;
        let mut hi = hi0 + pad;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.sturm_count(mid) >= 1 {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo <= 2.0 * f64::EPSILON * lo.abs().max(hi.abs()).max(f64::MIN_POSITIVE) {
                break;
            }
        }
        (lo, hi)
    }

    /// Solves (T − σ)y = b by LDLᵀ. Returns `None` if a pivot is not positive,
    /// i.e. T − σ is not positive definite.
    pub fn solve_shifted_positive(&self, sigma: f64, b: &[f64]) -> Option<Vec<f64>> {
        let n = self.len();
        let mut d = vec![0.0; n];
        let mut l = vec![0.0; n.saturating_sub(1)];
        for i in 0..n {
            let mut di = self.diag[i] - sigma;
            if i > 0 {
                di -= l[i - 1] * l[i - 1] * d[i - 1];
            }
            if di <= 0.0 || !di.is_finite() {
                return None;
            }
            d[i] = di;
            if i + 1 < n {
                l[i] = self.off[i] / di;
            }
        }
        let mut y = b.to_vec();
        for i in 1..n {
            y[i] -= l[i - 1] * y[i - 1];
        }
        for i in 0..n {
            y[i] /= d[i];
        }
        for i in (0..n.saturating_sub(1)).rev() {
            y[i] -= l[i] * y[i + 1];
        }
        Some(y)
    }

    /// Like [`solve_shifted_positive`] but tolerates a (near-)zero final
    /// pivot by flooring it; used for inverse iteration at the eigenvalue.
    fn inverse_iteration_step(&self, sigma: f64, b: &[f64], floor: f64) -> Vec<f64> {
        let n = self.len();
        let mut d = vec![0.0; n];
        let mut l = vec![0.0; n.saturating_sub(1)];
        for i in 0..n {
            let mut di = self.diag[i] - sigma;
            if i > 0 {
                di -= l[i - 1] * l[i - 1] * d[i - 1];
            }
            if di.abs() < floor {
                di = if di < 0.0 { -floor } else { floor };
            }
            d[i] = di;
            if i + 1 < n {
                l[i] = self.off[i] / di;
            }
        }
        let mut y = b.to_vec();
        for i in 1..n {
            y[i] -= l[i - 1] * y[i - 1];
        }
        for i in 0..n {
            y[i] /= d[i];
        }
        for i in (0..n.saturating_sub(1)).rev() {
            y[i] -= l[i] * y[i + 1];
        }
        y
    }

    /// Smallest eigenvalue and its unit eigenvector (sign fixed so the
    /// largest-magnitude component is positive).
    pub fn lowest_eigenpair(&self) -> Result<Eigenpair> {
        let n = self.len();
        if n == 0 {
            return Err(Error::InvalidInput("empty tridiagonal matrix".into()));
        }
        if n == 1 {
            return Ok(Eigenpair {
                value: self.diag[0],
                vector: vec![1.0],
                residual: 0.0,
            });
        }
        let (lo, _) = self.lowest_eigenvalue_bracket();
        let scale = self.norm_inf().max(1.0);
        let floor = f64::EPSILON * scale;
        let sigma = lo;
        // deterministic start vector with no structural zeros
        let mut v: Vec<f64> = (0..n).map(|i| 1.0 + 0.1 * ((i % 7) as f64)).collect();
        normalize(&mut v);
        let mut best: Option<Eigenpair> = None;
        let mut tmp = vec![0.0; n];
        for _ in 0..8 {
            let mut y = self.inverse_iteration_step(sigma, &v, floor);
            if !normalize(&mut y) {
                break;
            }
            v = y;
            self.apply(&v, &mut tmp);
            let rq: f64 = v.iter().zip(&tmp).map(|(a, b)| a * b).sum();
            let res: f64 = tmp
                .iter()
                .zip(&v)
                .map(|(t, x)| (t - rq * x).powi(2))
                .sum::<f64>()
                .sqrt();
            let better = best.as_ref().is_none_or(|b| res < b.residual);
            if better {
                best = Some(Eigenpair {
                    value: rq,
                    vector: v.clone(),
                    residual: res,
                });
            }
            if res <= 1e-3 * crate::tolerances::EIGEN_RESIDUAL * scale {
                break;
            }
        }
        let mut pair = best.ok_or_else(|| Error::NumericalFailure {
            context: "tridiagonal inverse iteration".into(),
            residual: f64::NAN,
        })?;
        if pair.residual > crate::tolerances::EIGEN_RESIDUAL * scale {
            return Err(Error::NumericalFailure {
                context: "tridiagonal lowest eigenpair".into(),
                residual: pair.residual,
            });
        }
        let pivot = pair
            .vector
            .iter()
            .copied()
            .max_by(|a, b| a.abs().total_cmp(&b.abs()))
            .unwrap_or(1.0);
        if pivot < 0.0 {
            pair.vector.iter_mut().for_each(|x| *x = -*x);
        }
        Ok(pair)
    }
}

fn normalize(v: &mut [f64]) -> bool {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !(n.is_finite() && n > 0.0) {
        return false;
    }
    v.iter_mut().for_each(|x| *x /= n);
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, SymmetricEigen};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dense(t: &SymTridiagonal) -> DMatrix<f64> {
        let n = t.len();
        DMatrix::from_fn(n, n, |r, c| {
            if r == c {
                t.diag[r]
            } else if r + 1 == c {
                t.off[r]
            } else if c + 1 == r {
                t.off[c]
            } else {
                0.0
            }
        })
    }

    #[test]
    fn matches_dense_solver_on_random_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in [2usize, 3, 5, 17, 64, 200] {
            let t = SymTridiagonal::new(
                (0..n).map(|_| rng.random_range(-5.0..5.0)).collect(),
                (0..n - 1).map(|_| rng.random_range(-2.0..2.0)).collect(),
            );
            let pair = t.lowest_eigenpair().unwrap();
            let eig = SymmetricEigen::new(dense(&t));
            let min = eig
                .eigenvalues
                .iter()
                .copied()
                .fold(f64::INFINITY, f64::min);
            assert!(
                (pair.value - min).abs() < 1e-12 * t.norm_inf().max(1.0),
                "n={n}"
            );
            assert!(pair.residual < 1e-12 * t.norm_inf().max(1.0));
            assert_eq!(t.sturm_count(min - 1e-9), 0);
            assert_eq!(t.sturm_count(min + 1e-9), 1);
        }
    }

    #[test]
    fn degenerate_diagonal() {
        let t = SymTridiagonal::new(vec![2.0, 1.0, 3.0], vec![0.0, 0.0]);
        let p = t.lowest_eigenpair().unwrap();
        assert!((p.value - 1.0).abs() < 1e-15);
        assert!((p.vector[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ldlt_solve() {
        let t = SymTridiagonal::new(vec![4.0, 5.0, 6.0], vec![1.0, 2.0]);
        let b = [1.0, 2.0, 3.0];
        let y = t.solve_shifted_positive(0.5, &b).unwrap();
        let mut r = [0.0; 3];
        t.apply(&y, &mut r);
        for i in 0..3 {
            assert!((r[i] - 0.5 * y[i] - b[i]).abs() < 1e-14);
        }
        assert!(t.solve_shifted_positive(10.0, &b).is_none());
    }
}
