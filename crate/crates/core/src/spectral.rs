//! Principal Dirichlet eigenpair `(λ₁, φ)` of `−Δ` on `(0, L)`, normalized so
//! that `φ ≥ 0` and `∫φ = 1`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::grid::{dot, laplacian_into, Domain1D, Field, Tridiagonal};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EigenSource {
    Analytic,
    Discrete,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub lambda1: f64,
    pub phi: Field,
    pub source: EigenSource,
}

impl EigenPair {
    /// `|h·Σφᵢ − 1|`.
    pub fn normalization_residual(&self) -> f64 {
        let h = self.phi.domain().h();
        (h * self.phi.values().iter().sum::<f64>() - 1.0).abs()
    }
}

/// `λ₁ = (π/L)²`, `φ(x) = (π/(2L))·sin(πx/L)` sampled at the nodes.
pub fn analytic_eigenpair(domain: Domain1D) -> EigenPair {
    let l = domain.length();
    let phi = Field::from_fn(domain, |x| PI / (2.0 * l) * (PI * x / l).sin());
    EigenPair { lambda1: (PI / l).powi(2), phi, source: EigenSource::Analytic }
}

/// Closed form of the smallest eigenvalue of the three-point stencil,
/// `2(1 − cos(πh/L))/h²`.
pub fn discrete_lambda1_closed_form(domain: Domain1D) -> f64 {
    let h = domain.h();
    2.0 * (1.0 - (PI * h / domain.length()).cos()) / (h * h)
}

const MAX_ITERATIONS: usize = 10_000;

/// Inverse power iteration (shift 0) on the stencil of `−Δʰ`.
///
/// Stops once the Rayleigh quotient changes by less than `tol` and the
/// residual `‖−Δʰφ − λφ‖` of the normalized iterate is at most `10·tol`.
pub fn discrete_eigenpair(domain: Domain1D, tol: f64) -> Result<EigenPair> {
    if !(tol > 0.0) {
        return Err(Error::invalid("tol", format!("must be positive, got {tol}")));
    }
    let n = domain.n();
    let h = domain.h();
    let lu = Tridiagonal::neg_laplacian(n, h).factor()?;
    let mut v: Vec<f64> = domain.nodes().map(|x| x * (domain.length() - x) + 0.1).collect();
    normalize_l2(&mut v, h);
    let mut lap = vec![0.0; n];
    let mut rayleigh = rayleigh_quotient(&v, h, &mut lap);
    for _ in 0..MAX_ITERATIONS {
        lu.solve_in_place(&mut v);
        normalize_l2(&mut v, h);
        let next = rayleigh_quotient(&v, h, &mut lap);
        let change = (next - rayleigh).abs();
        rayleigh = next;
        if change < tol {
            let phi = sign_fix_and_normalize(domain, v.clone());
            if residual(&phi, rayleigh) <= 10.0 * tol {
                return Ok(EigenPair { lambda1: rayleigh, phi, source: EigenSource::Discrete });
            }
        }
    }
    Err(Error::NoConvergence { iterations: MAX_ITERATIONS })
}

fn normalize_l2(v: &mut [f64], h: f64) {
    let norm = dot(v, v, h).sqrt();
    v.iter_mut().for_each(|x| *x /= norm);
}

fn rayleigh_quotient(v: &[f64], h: f64, scratch: &mut [f64]) -> f64 {
    laplacian_into(v, h, scratch);
    -dot(v, scratch, h) / dot(v, v, h)
}

fn sign_fix_and_normalize(domain: Domain1D, mut v: Vec<f64>) -> Field {
    let h = domain.h();
    let mass = h * v.iter().sum::<f64>();
    v.iter_mut().for_each(|x| *x /= mass);
    Field::from_values(domain, v).expect("length matches domain")
}

/// `‖−Δʰφ − λφ‖_{L²}`.
pub fn residual(phi: &Field, lambda: f64) -> f64 {
    let h = phi.domain().h();
    let mut lap = vec![0.0; phi.len()];
    laplacian_into(phi.values(), h, &mut lap);
    let r: Vec<f64> = lap.iter().zip(phi.values()).map(|(l, p)| -l - lambda * p).collect();
    dot(&r, &r, h).sqrt()
}
