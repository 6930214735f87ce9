use serde::{Deserialize, Serialize};

use super::GrowthFunction;
use crate::quadrature::integrate;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundMethod {
    Quadrature,
    ClosedForm,
}

/// Upper bound `t* = ∫_{x0}^∞ dr/g(r)` on the blow-up time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundResult {
    pub t_star: f64,
    pub abs_error_estimate: f64,
    pub method: BoundMethod,
}

const ABS_TOL: f64 = 1e-10;
const ACCEPTED_ERROR: f64 = 1e-8;
const SCAN_POINTS: usize = 4096;

/// `∫_{x0}^∞ dr/g(r)`, in closed form for `g = a·r² − c·r` and by adaptive
/// quadrature otherwise.
///
/// Fails with [`Error::DivergentIntegral`] unless the leading term has a
/// positive coefficient and an exponent above 1, and with
/// [`Error::NoFiniteBound`] when `g` has a root at or beyond `x0`.
pub fn blowup_time_bound(g: &GrowthFunction, x0: f64) -> Result<BoundResult> {
    admissible(g, x0)?;
    if g.quadratic_linear().is_some() {
        blowup_time_closed_form(g, x0)
    } else {
        blowup_time_quadrature(g, x0)
    }
}

/// `(1/c)·ln(a·x0/(a·x0 − c))`, or `1/(a·x0)` when `c = 0`.
pub fn blowup_time_closed_form(g: &GrowthFunction, x0: f64) -> Result<BoundResult> {
    admissible(g, x0)?;
    let (a, c) = g.quadratic_linear().ok_or_else(|| Error::invalid("g", "closed form needs the shape a·r² − c·r"))?;
    let t_star = if c == 0.0 { 1.0 / (a * x0) } else { (a * x0 / (a * x0 - c)).ln() / c };
    Ok(BoundResult { t_star, abs_error_estimate: 4.0 * f64::EPSILON * t_star, method: BoundMethod::ClosedForm })
}

/// Adaptive Gauss–Kronrod on `s = 1/r ∈ (0, 1/x0]`, further substituting
/// `s = w^k` when the leading exponent `p < 2` so the integrand stays bounded.
pub fn blowup_time_quadrature(g: &GrowthFunction, x0: f64) -> Result<BoundResult> {
    admissible(g, x0)?;
    let p = g.leading().expect("admissible g has a leading term").exponent;
    let k = if p >= 2.0 { 1 } else { (1.0 / (p - 1.0)).ceil() as i32 };
    let terms = g.terms().to_vec();
    let integrand = move |w: f64| {
        let s = w.powi(k);
        let denom: f64 = terms.iter().map(|t| t.coefficient * s.powf(2.0 - t.exponent)).sum();
        f64::from(k) * w.powi(k - 1) / denom
    };
    let upper = x0.recip().powf(1.0 / f64::from(k));
    let est = integrate(integrand, 0.0, upper, ABS_TOL, 0.0)?;
    if !(est.abs_error <= ACCEPTED_ERROR) || !est.value.is_finite() {
        return Err(Error::QuadratureTolerance { estimate: est.abs_error });
    }
    Ok(BoundResult { t_star: est.value, abs_error_estimate: est.abs_error, method: BoundMethod::Quadrature })
}

fn admissible(g: &GrowthFunction, x0: f64) -> Result<()> {
    if !(x0 > 0.0 && x0.is_finite()) {
        return Err(Error::invalid("x0", format!("must be positive, got {x0}")));
    }
    match g.leading() {
        Some(lead) if lead.exponent > 1.0 && lead.coefficient > 0.0 => {}
        _ => {
            return Err(Error::DivergentIntegral(
                "the leading term needs a positive coefficient and an exponent above 1".into(),
            ))
        }
    }
    match largest_root_from(g, x0) {
        Some(root) => Err(Error::NoFiniteBound { root, x0 }),
        None => Ok(()),
    }
}

/// Locates the largest `r ≥ x0` with `g(r) ≤ 0`, if any.
///
/// Beyond `R₀ = max(1, (S/c)^{1/(p − p₂)})`, with `S` the sum of the
/// non-leading coefficient magnitudes, the leading term dominates; `[x0, R₀]`
/// is scanned on a grid and the last sign change refined by bisection.
/// Tangential roots falling strictly between grid points can be missed.
fn largest_root_from(g: &GrowthFunction, x0: f64) -> Option<f64> {
    let terms = g.terms();
    let lead = terms[0];
    let reach = if terms.len() == 1 {
        x0
    } else {
        let others: f64 = terms[1..].iter().map(|t| t.coefficient.abs()).sum();
        (others / lead.coefficient).powf(1.0 / (lead.exponent - terms[1].exponent)).max(1.0)
    };
    let sign = |r: f64| g.relative_to_leading(r);
    if reach <= x0 {
        return (sign(x0) <= 0.0).then_some(x0);
    }
    let geometric = reach / x0 > 10.0;
    let node = |i: usize| {
        let f = i as f64 / (SCAN_POINTS - 1) as f64;
        if geometric {
            x0 * (reach / x0).powf(f)
        } else {
            x0 + f * (reach - x0)
        }
    };
    let last_bad = (0..SCAN_POINTS).rev().find(|&i| sign(node(i)) <= 0.0)?;
    if last_bad == SCAN_POINTS - 1 {
        return Some(reach);
    }
    let (mut lo, mut hi) = (node(last_bad), node(last_bad + 1));
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if sign(mid) <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(lo)
}
