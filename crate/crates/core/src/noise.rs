//! Wiener random field increments with a prescribed spatial covariance.
//!
//! The covariance matrix `Qᵢⱼ = q(xᵢ, xⱼ)` is factorized once by a
//! rank-revealing Cholesky (`F·Fᵀ = Q + jitter·I`); an increment over `dt` is
//! `√dt·F·z` with `z` standard normal. Each path draws from its own ChaCha
//! stream keyed by `(base_seed, path_index)`.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::grid::{Domain1D, Field};
use crate::{Error, Result};

/// Spatial covariance kernel `q(x, y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Kernel {
    /// `q ≡ q0`: one Brownian motion shared by every node.
    Constant { q0: f64 },
    /// `q(x, y) = s2·exp(−|x − y|/ell)`.
    Exponential { s2: f64, ell: f64 },
    /// Grid white noise, `Q = (q0/h)·I`. Does not converge as `h → 0`.
    Diagonal { q0: f64 },
}

impl Kernel {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &'static str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::invalid(name, format!("must be positive, got {v}")))
            }
        };
        match *self {
            Kernel::Constant { q0 } | Kernel::Diagonal { q0 } => positive("kernel.q0", q0),
            Kernel::Exponential { s2, ell } => {
                positive("kernel.s2", s2)?;
                positive("kernel.ell", ell)
            }
        }
    }

    fn entry(&self, x: f64, y: f64, i: usize, j: usize, h: f64) -> f64 {
        match *self {
            Kernel::Constant { q0 } => q0,
            Kernel::Exponential { s2, ell } => s2 * (-(x - y).abs() / ell).exp(),
            Kernel::Diagonal { q0 } => {
                if i == j {
                    q0 / h
                } else {
                    0.0
                }
            }
        }
    }
}

/// One nonzero column of the lower-triangular factor, stored from its
/// diagonal row down to its last nonzero row.
#[derive(Debug, Clone)]
struct FactorColumn {
    start: usize,
    values: Vec<f64>,
}

/// Dense covariance matrix plus its factor and the bounds `q₀ = max diag`,
/// `q₁ = min over all entries`.
#[derive(Debug, Clone)]
pub struct CovarianceOperator {
    domain: Domain1D,
    q: Vec<f64>,
    columns: Vec<FactorColumn>,
    jitter: f64,
    q_sup: f64,
    q_inf: f64,
}

const JITTER_LADDER: [f64; 4] = [0.0, 1e-12, 1e-10, 1e-8];

impl CovarianceOperator {
    /// Fills `Q` from the kernel and factorizes it, escalating the diagonal
    /// jitter through `(0, 1e−12, 1e−10, 1e−8)·trace/n` until it succeeds.
    pub fn assemble(kernel: Kernel, domain: Domain1D) -> Result<Self> {
        kernel.validate()?;
        let n = domain.n();
        let h = domain.h();
        let mut q = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                q[i * n + j] = kernel.entry(domain.node(i), domain.node(j), i, j, h);
            }
        }
        let q_sup = (0..n).map(|i| q[i * n + i]).fold(f64::NEG_INFINITY, f64::max);
        let q_inf = q.iter().copied().fold(f64::INFINITY, f64::min);
        let mean_diag = (0..n).map(|i| q[i * n + i]).sum::<f64>() / n as f64;
        let mut last = 0.0;
        for rung in JITTER_LADDER {
            let jitter = rung * mean_diag;
            last = jitter;
            if let Some(columns) = semidefinite_cholesky(&q, n, jitter) {
                return Ok(Self { domain, q, columns, jitter, q_sup, q_inf });
            }
        }
        Err(Error::IndefiniteKernel { jitter: last })
    }

    pub fn domain(&self) -> &Domain1D {
        &self.domain
    }

    /// `Qᵢⱼ`.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.q[i * self.domain.n() + j]
    }

    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// `q₀`: the largest diagonal entry.
    pub fn q_sup(&self) -> f64 {
        self.q_sup
    }

    /// `q₁`: the smallest entry of `Q` (`inf_{x,y} q(x, y)` on the grid).
    pub fn q_inf(&self) -> f64 {
        self.q_inf
    }

    /// Number of nonzero factor columns.
    pub fn rank(&self) -> usize {
        self.columns.len()
    }

    /// Dense `F·Fᵀ` for verification.
    pub fn reconstruct(&self) -> Vec<f64> {
        let n = self.domain.n();
        let mut out = vec![0.0; n * n];
        for col in &self.columns {
            for (a, &va) in col.values.iter().enumerate() {
                for (b, &vb) in col.values.iter().enumerate() {
                    out[(col.start + a) * n + col.start + b] += va * vb;
                }
            }
        }
        out
    }

    /// `√dt·F·z` with `z` i.i.d. standard normal.
    pub fn sample_increment<R: Rng + ?Sized>(&self, dt: f64, rng: &mut R) -> Field {
        let mut out = Field::zeros(self.domain);
        self.sample_into(dt, rng, out.values_mut());
        out
    }

    /// Allocation-free form of [`sample_increment`](Self::sample_increment).
    pub fn sample_into<R: Rng + ?Sized>(&self, dt: f64, rng: &mut R, out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        let scale = dt.max(0.0).sqrt();
        for col in &self.columns {
            let z: f64 = rng.sample(StandardNormal);
            let w = scale * z;
            for (o, &f) in out[col.start..col.start + col.values.len()].iter_mut().zip(&col.values) {
                *o += f * w;
            }
        }
    }
}

/// Cholesky that tolerates exactly singular PSD matrices: a pivot that is
/// zero to rounding, with a vanishing Schur column, yields a zero column
/// (dropped from the factor). Returns `None` if `Q + jitter·I` is indefinite.
fn semidefinite_cholesky(q: &[f64], n: usize, jitter: f64) -> Option<Vec<FactorColumn>> {
    let scale = (0..n).map(|i| q[i * n + i].abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let zero_tol = 1e-13 * scale * n as f64;
    // Dense lower-triangular workspace, row-major.
    let mut l = vec![0.0; n * n];
    let mut kept = vec![false; n];
    for j in 0..n {
        let mut d = q[j * n + j] + jitter;
        for k in 0..j {
            d -= l[j * n + k] * l[j * n + k];
        }
        if d > zero_tol {
            let root = d.sqrt();
            l[j * n + j] = root;
            kept[j] = true;
            for i in j + 1..n {
                let mut s = q[i * n + j];
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                // Rows equal to the pivot row share its root bitwise, so a
                // constant kernel yields exactly constant increments.
                l[i * n + j] = if s == d { root } else { s / root };
            }
        } else if d >= -zero_tol {
            for i in j + 1..n {
                let mut s = q[i * n + j];
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                if s.abs() > zero_tol {
                    return None;
                }
            }
        } else {
            return None;
        }
    }
    let columns = (0..n)
        .filter(|&j| kept[j])
        .map(|j| {
            let last = (j..n).rev().find(|&i| l[i * n + j] != 0.0).unwrap_or(j);
            FactorColumn { start: j, values: (j..=last).map(|i| l[i * n + j]).collect() }
        })
        .collect();
    Some(columns)
}

/// Independent, reproducible stream for path `index` under `base_seed`.
pub fn path_rng(base_seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(base_seed);
    rng.set_stream(index);
    rng
}
