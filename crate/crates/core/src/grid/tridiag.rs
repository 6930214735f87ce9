use crate::{Error, Result};

/// A tridiagonal matrix stored by its three bands.
///
/// `lower[i]` couples row `i+1` to column `i`, `upper[i]` couples row `i` to
/// column `i+1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Tridiagonal {
    /// Constant-band matrix `tridiag(off, diag, off)` of size `n`.
    pub fn symmetric_constant(n: usize, diag: f64, off: f64) -> Self {
        Self { lower: vec![off; n.saturating_sub(1)], diag: vec![diag; n], upper: vec![off; n.saturating_sub(1)] }
    }

    /// `−Δʰ`: the positive definite Dirichlet stencil `(−1, 2, −1)/h²`.
    pub fn neg_laplacian(n: usize, h: f64) -> Self {
        let s = 1.0 / (h * h);
        Self::symmetric_constant(n, 2.0 * s, -s)
    }

    /// `I − c·Δʰ`, the semi-implicit heat operator with `c = dt·ν`.
    pub fn implicit_heat(n: usize, h: f64, c: f64) -> Self {
        let r = c / (h * h);
        Self::symmetric_constant(n, 1.0 + 2.0 * r, -r)
    }

    pub fn n(&self) -> usize {
        self.diag.len()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n();
        (0..n)
            .map(|i| {
                let mut v = self.diag[i] * x[i];
                if i > 0 {
                    v += self.lower[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    v += self.upper[i] * x[i + 1];
                }
                v
            })
            .collect()
    }

    /// Thomas factorization without pivoting; fails on a vanishing pivot.
    pub fn factor(&self) -> Result<TridiagonalLu> {
        let n = self.n();
        let mut c_prime = vec![0.0; n.saturating_sub(1)];
        let mut inv_denom = vec![0.0; n];
        let mut denom = self.diag[0];
        for i in 0..n {
            if i > 0 {
                denom = self.diag[i] - self.lower[i - 1] * c_prime[i - 1];
            }
            if denom.abs() < f64::MIN_POSITIVE || !denom.is_finite() {
                return Err(Error::invalid("tridiagonal", format!("zero pivot at row {i}")));
            }
            inv_denom[i] = 1.0 / denom;
            if i + 1 < n {
                c_prime[i] = self.upper[i] * inv_denom[i];
            }
        }
        Ok(TridiagonalLu { lower: self.lower.clone(), c_prime, inv_denom })
    }
}

/// Precomputed Thomas factors; each solve is `O(n)` and allocation-free.
#[derive(Debug, Clone)]
pub struct TridiagonalLu {
    lower: Vec<f64>,
    c_prime: Vec<f64>,
    inv_denom: Vec<f64>,
}

impl TridiagonalLu {
    /// Overwrites `rhs` with the solution.
    pub fn solve_in_place(&self, rhs: &mut [f64]) {
        let n = self.inv_denom.len();
        debug_assert_eq!(rhs.len(), n);
        rhs[0] *= self.inv_denom[0];
        for i in 1..n {
            rhs[i] = (rhs[i] - self.lower[i - 1] * rhs[i - 1]) * self.inv_denom[i];
        }
        for i in (0..n - 1).rev() {
            rhs[i] -= self.c_prime[i] * rhs[i + 1];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solve_recovers_known_vector() {
        let m = Tridiagonal {
            lower: vec![1.0, -2.0, 0.5, 3.0],
            diag: vec![4.0, 5.0, 6.0, 7.0, 8.0],
            upper: vec![-1.0, 2.0, 1.5, -0.5],
        };
        let x = vec![1.0, -2.0, 3.0, 0.25, -1.5];
        let mut b = m.apply(&x);
        m.factor().unwrap().solve_in_place(&mut b);
        for (a, e) in b.iter().zip(&x) {
            assert!((a - e).abs() < 1e-12);
        }
    }

    #[test]
    fn singular_matrix_rejected() {
        let m = Tridiagonal::symmetric_constant(3, 0.0, 1.0);
        assert!(m.factor().is_err());
    }
}
