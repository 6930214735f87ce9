//! Smooth regularizations of the negative-part functionals.
//!
//! `k_ε` is the piecewise polynomial `C²` approximation of `(r⁻)²`.
//! `β_ε`/`ρ_ε` are built from the one-dimensional bump mollifier
//! `J(x) = C·exp(1/(x²−1))` on `|x| < 1`, with `C` fixed so that `∫J = 1`:
//!
//! ```text
//! ρ_ε(r) = ∫_{r+ε}^∞ J_ε(s) ds,      β_ε(r) = ∫_r^∞ ρ_ε(s) ds.
//! ```
//!
//! Both scale exactly: `ρ_ε(r) = ρ₁(r/ε)` and `β_ε(r) = ε·β₁(r/ε)`, so a
//! single lookup table for `ε = 1` on `[−2, 0]` serves every `ε`.

use std::sync::OnceLock;

use crate::quadrature::{gk15, integrate};
use crate::{Error, Result};

/// Regularization scale `ε > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MollifierParams {
    epsilon: f64,
}

impl MollifierParams {
    pub fn new(epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::invalid("epsilon", format!("must be positive, got {epsilon}")));
        }
        Ok(Self { epsilon })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
}

/// `k_ε(r)`: `r² − ε²/6` for `r < −ε`, `−(r³/ε)(r/(2ε) + 4/3)` on `[−ε, 0)`,
/// and `0` for `r ≥ 0`.
pub fn k_eps(r: f64, p: MollifierParams) -> f64 {
    let e = p.epsilon;
    if r < -e {
        r * r - e * e / 6.0
    } else if r < 0.0 {
        -(r * r * r / e) * (r / (2.0 * e) + 4.0 / 3.0)
    } else {
        0.0
    }
}

pub fn k_eps_d1(r: f64, p: MollifierParams) -> f64 {
    let e = p.epsilon;
    if r < -e {
        2.0 * r
    } else if r < 0.0 {
        -2.0 * r * r * r / (e * e) - 4.0 * r * r / e
    } else {
        0.0
    }
}

pub fn k_eps_d2(r: f64, p: MollifierParams) -> f64 {
    let e = p.epsilon;
    if r < -e {
        2.0
    } else if r < 0.0 {
        -6.0 * r * r / (e * e) - 8.0 * r / e
    } else {
        0.0
    }
}

fn bump(x: f64) -> f64 {
    let d = x * x - 1.0;
    if d >= 0.0 {
        0.0
    } else {
        (1.0 / d).exp()
    }
}

/// Normalizing constant of the mollifier: `1/∫_{−1}^{1} exp(1/(x²−1)) dx`.
fn mollifier_constant() -> f64 {
    static C: OnceLock<f64> = OnceLock::new();
    *C.get_or_init(|| {
        let mass = integrate(bump, -1.0, 1.0, 1e-15, 1e-12).expect("bump integral converges").value;
        1.0 / mass
    })
}

/// The normalized mollifier `J(x)`.
fn mollifier(x: f64) -> f64 {
    mollifier_constant() * bump(x)
}

const TABLE_LEN: usize = 1024;
const T_LO: f64 = -2.0;

struct Table {
    step: f64,
    rho: Vec<f64>,
    beta: Vec<f64>,
}

/// Tabulates `ρ₁` and `β₁` on 1024 uniform nodes of `[−2, 0]`, accumulating
/// fixed-order Gauss–Kronrod panels from the right end where both vanish.
fn table() -> &'static Table {
    static TABLE: OnceLock<Table> = OnceLock::new();
    TABLE.get_or_init(|| {
        let step = -T_LO / (TABLE_LEN - 1) as f64;
        let node = |k: usize| T_LO + k as f64 * step;
        let mut rho = vec![0.0; TABLE_LEN];
        let mut beta = vec![0.0; TABLE_LEN];
        for k in (0..TABLE_LEN - 1).rev() {
            let (t0, t1) = (node(k), node(k + 1));
            rho[k] = rho[k + 1] + gk15(&mollifier, t0 + 1.0, t1 + 1.0).value;
            let rho_right = rho[k + 1];
            let rho_inside = |s: f64| rho_right + gk15(&mollifier, s + 1.0, t1 + 1.0).value;
            beta[k] = beta[k + 1] + gk15(&rho_inside, t0, t1).value;
        }
        Table { step, rho, beta }
    })
}

/// Cubic Hermite interpolation on the uniform table.
fn hermite(values: &[f64], slope: impl Fn(f64) -> f64, step: f64, t: f64) -> f64 {
    let pos = ((t - T_LO) / step).clamp(0.0, (TABLE_LEN - 1) as f64);
    let k = (pos.floor() as usize).min(TABLE_LEN - 2);
    let s = pos - k as f64;
    let (t0, t1) = (T_LO + k as f64 * step, T_LO + (k + 1) as f64 * step);
    let (s2, s3) = (s * s, s * s * s);
    let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    let h10 = s3 - 2.0 * s2 + s;
    let h01 = -2.0 * s3 + 3.0 * s2;
    let h11 = s3 - s2;
    h00 * values[k] + h10 * step * slope(t0) + h01 * values[k + 1] + h11 * step * slope(t1)
}

fn rho_unit(t: f64) -> f64 {
    if t >= 0.0 {
        0.0
    } else if t <= -2.0 {
        1.0
    } else {
        let tab = table();
        hermite(&tab.rho, |s| -mollifier(s + 1.0), tab.step, t)
    }
}

fn beta_unit(t: f64) -> f64 {
    if t >= 0.0 {
        0.0
    } else if t <= -2.0 {
        -2.0 - t + c_hat()
    } else {
        let tab = table();
        hermite(&tab.beta, |s| -rho_table_node(tab, s), tab.step, t)
    }
}

// ρ₁ at a table node, read back without re-interpolating.
fn rho_table_node(tab: &Table, s: f64) -> f64 {
    let k = ((s - T_LO) / tab.step).round() as usize;
    tab.rho[k.min(TABLE_LEN - 1)]
}

/// `ρ_ε(r)`: 1 for `r ≤ −2ε`, 0 for `r ≥ 0`, smooth and non-increasing between.
pub fn rho_eps(r: f64, p: MollifierParams) -> f64 {
    rho_unit(r / p.epsilon)
}

/// `β_ε(r)`: 0 for `r ≥ 0`, `−2ε − r + ε·Ĉ` for `r ≤ −2ε`, convex.
pub fn beta_eps(r: f64, p: MollifierParams) -> f64 {
    p.epsilon * beta_unit(r / p.epsilon)
}

/// `β'_ε = −ρ_ε`.
pub fn beta_eps_d1(r: f64, p: MollifierParams) -> f64 {
    -rho_eps(r, p)
}

/// `Ĉ = ∫_{−2}^{0} ∫_{t+1}^{1} J(s) ds dt`.
pub fn c_hat() -> f64 {
    table().beta[0]
}
