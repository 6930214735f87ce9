//! Spatial discretization of the Dirichlet problem on `(0, L)`.
//!
//! A [`Domain1D`] holds `n` interior nodes `xᵢ = i·h`, `h = L/(n+1)`. A
//! [`Field`] stores the interior values only; the boundary values are
//! identically zero. All quadratures are midpoint sums `h·Σ`, under which the
//! three-point Laplacian is self-adjoint.

mod mollifier;
mod tridiag;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use mollifier::{beta_eps, beta_eps_d1, c_hat, k_eps, k_eps_d1, k_eps_d2, rho_eps, MollifierParams};
pub use tridiag::{Tridiagonal, TridiagonalLu};

/// The interval `(0, length)` with `n` interior nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Domain1D {
    length: f64,
    n: usize,
}

impl Domain1D {
    pub fn new(length: f64, n: usize) -> Result<Self> {
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::invalid("domain.length", format!("must be positive and finite, got {length}")));
        }
        if n < 3 {
            return Err(Error::invalid("domain.n", format!("need at least 3 interior nodes, got {n}")));
        }
        Ok(Self { length, n })
    }

    /// The unit interval with `n` interior nodes.
    pub fn unit(n: usize) -> Result<Self> {
        Self::new(1.0, n)
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Mesh width `L/(n+1)`.
    pub fn h(&self) -> f64 {
        self.length / (self.n + 1) as f64
    }

    /// Position of interior node `i` (0-based), i.e. `(i+1)·h`.
    pub fn node(&self, i: usize) -> f64 {
        (i + 1) as f64 * self.h()
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(|i| self.node(i))
    }

    fn describe(&self) -> String {
        format!("L={}, n={}", self.length, self.n)
    }
}

/// A real function on the interior nodes of a [`Domain1D`].
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    domain: Domain1D,
    values: Vec<f64>,
}

impl Field {
    pub fn zeros(domain: Domain1D) -> Self {
        Self { domain, values: vec![0.0; domain.n()] }
    }

    pub fn constant(domain: Domain1D, c: f64) -> Self {
        Self { domain, values: vec![c; domain.n()] }
    }

    pub fn from_fn(domain: Domain1D, f: impl Fn(f64) -> f64) -> Self {
        Self { domain, values: domain.nodes().map(f).collect() }
    }

    pub fn from_values(domain: Domain1D, values: Vec<f64>) -> Result<Self> {
        if values.len() != domain.n() {
            return Err(Error::invalid(
                "values",
                format!("expected {} interior values, got {}", domain.n(), values.len()),
            ));
        }
        Ok(Self { domain, values })
    }

    /// Unit vector at interior node `j`.
    pub fn unit_vector(domain: Domain1D, j: usize) -> Self {
        let mut f = Self::zeros(domain);
        f.values[j] = 1.0;
        f
    }

    pub fn domain(&self) -> &Domain1D {
        &self.domain
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self { domain: self.domain, values: self.values.iter().map(|v| v * factor).collect() }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { domain: self.domain, values: self.values.iter().map(|&v| f(v)).collect() }
    }
}

fn check_same_domain(a: &Field, b: &Field) -> Result<()> {
    if a.domain != b.domain {
        return Err(Error::DomainMismatch { left: a.domain.describe(), right: b.domain.describe() });
    }
    Ok(())
}

/// Three-point Dirichlet Laplacian `(u_{i-1} − 2uᵢ + u_{i+1})/h²` with zero
/// ghost values.
pub fn laplacian_apply(u: &Field) -> Field {
    let mut out = Field::zeros(u.domain);
    laplacian_into(u.values(), u.domain.h(), out.values_mut());
    out
}

pub(crate) fn laplacian_into(u: &[f64], h: f64, out: &mut [f64]) {
    let n = u.len();
    let inv_h2 = 1.0 / (h * h);
    for i in 0..n {
        let left = if i == 0 { 0.0 } else { u[i - 1] };
        let right = if i + 1 == n { 0.0 } else { u[i + 1] };
        out[i] = (left - 2.0 * u[i] + right) * inv_h2;
    }
}

/// Face-centred discretization of `div(|∇u|^{p−2}∇u)`.
///
/// At `p = 2` this delegates to [`laplacian_apply`] so both agree bitwise.
pub fn p_laplacian_apply(u: &Field, p: f64) -> Result<Field> {
    if !(p >= 2.0) {
        return Err(Error::invalid("operator.p", format!("p-Laplacian needs p ≥ 2, got {p}")));
    }
    let mut out = Field::zeros(u.domain);
    p_laplacian_into(u.values(), u.domain.h(), p, out.values_mut());
    Ok(out)
}

pub(crate) fn p_laplacian_into(u: &[f64], h: f64, p: f64, out: &mut [f64]) {
    if p == 2.0 {
        laplacian_into(u, h, out);
        return;
    }
    let n = u.len();
    let flux = |left: f64, right: f64| {
        let g = (right - left) / h;
        g.abs().powf(p - 2.0) * g
    };
    let mut west = flux(0.0, u[0]);
    for i in 0..n {
        let right = if i + 1 == n { 0.0 } else { u[i + 1] };
        let east = flux(u[i], right);
        out[i] = (east - west) / h;
        west = east;
    }
}

/// Midpoint-rule inner product `h·Σ uᵢvᵢ`.
pub fn inner_product(u: &Field, v: &Field) -> Result<f64> {
    check_same_domain(u, v)?;
    Ok(dot(u.values(), v.values(), u.domain.h()))
}

pub(crate) fn dot(u: &[f64], v: &[f64], h: f64) -> f64 {
    h * u.iter().zip(v).map(|(a, b)| a * b).sum::<f64>()
}

/// Discrete `L^p` norm `(h·Σ|uᵢ|^p)^{1/p}`; panics if `p < 1`.
pub fn lp_norm(u: &Field, p: f64) -> f64 {
    assert!(p >= 1.0, "lp_norm needs p ≥ 1, got {p}");
    let h = u.domain.h();
    if p == 2.0 {
        return dot(u.values(), u.values(), h).sqrt();
    }
    (h * u.values.iter().map(|v| v.abs().powf(p)).sum::<f64>()).powf(1.0 / p)
}

pub fn sup_norm(u: &Field) -> f64 {
    sup_abs(u.values())
}

pub(crate) fn sup_abs(u: &[f64]) -> f64 {
    u.iter().fold(0.0_f64, |acc, v| if v.abs() > acc || v.is_nan() { v.abs() } else { acc })
}

/// Squared `L²` mass and `L¹` mass of the negative part `u⁻ = max(−u, 0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NegativePart {
    pub l2sq: f64,
    pub l1: f64,
}

pub fn negative_part_mass(u: &Field) -> NegativePart {
    negative_part_of(u.values(), u.domain.h())
}

pub(crate) fn negative_part_of(u: &[f64], h: f64) -> NegativePart {
    let (mut l2, mut l1) = (0.0, 0.0);
    for &v in u {
        let neg = (-v).max(0.0);
        l2 += neg * neg;
        l1 += neg;
    }
    NegativePart { l2sq: h * l2, l1: h * l1 }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn sine(n: usize) -> Field {
        Field::from_fn(Domain1D::unit(n).unwrap(), |x| (PI * x).sin())
    }

    #[test]
    fn domain_validation() {
        assert!(Domain1D::new(0.0, 10).is_err());
        assert!(Domain1D::new(1.0, 2).is_err());
        let d = Domain1D::new(2.0, 9).unwrap();
        assert_eq!(d.h(), 0.2);
        assert!((d.h() * 10.0 - 2.0).abs() < 1e-15);
        assert_relative_eq!(d.node(0), 0.2);
        assert_relative_eq!(d.node(8), 1.8, epsilon = 1e-15);
    }

    #[test]
    fn laplacian_of_zero_is_zero() {
        let z = Field::zeros(Domain1D::unit(17).unwrap());
        assert!(laplacian_apply(&z).values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn laplacian_of_sine_matches_taylor_bound() {
        let u = sine(200);
        let h = u.domain().h();
        let lap = laplacian_apply(&u);
        let err = lap.values().iter().zip(u.values()).map(|(l, s)| (l + PI * PI * s).abs()).fold(0.0, f64::max);
        let bound = PI.powi(4) * h * h / 12.0 * 1.1;
        assert!(err <= bound, "err {err} > bound {bound}");
    }

    #[test]
    fn laplacian_of_spike_is_stencil_row() {
        let d = Domain1D::unit(9).unwrap();
        let h2 = d.h() * d.h();
        let lap = laplacian_apply(&Field::unit_vector(d, 4));
        for (i, &v) in lap.values().iter().enumerate() {
            let expected = match i {
                3 | 5 => 1.0 / h2,
                4 => -2.0 / h2,
                _ => 0.0,
            };
            assert_relative_eq!(v, expected, max_relative = 1e-14);
        }
    }

    #[test]
    fn p_laplacian_at_two_is_laplacian() {
        let u = Field::from_fn(Domain1D::unit(31).unwrap(), |x| x * (1.0 - x) * (3.0 * x).cos());
        assert_eq!(p_laplacian_apply(&u, 2.0).unwrap(), laplacian_apply(&u));
        assert!(p_laplacian_apply(&u, 1.5).is_err());
    }

    #[test]
    fn p_laplacian_zero_and_constant_flux() {
        let d = Domain1D::unit(20).unwrap();
        assert!(p_laplacian_apply(&Field::zeros(d), 3.0).unwrap().values().iter().all(|&v| v == 0.0));
        // linear in i: every interior face away from the boundary carries the same flux
        let u = Field::from_fn(d, |x| 2.0 * x);
        let out = p_laplacian_apply(&u, 4.0).unwrap();
        for &v in &out.values()[..d.n() - 1] {
            assert!(v.abs() < 1e-8, "{v}");
        }
        // last node sees the jump to the boundary zero
        assert!(out.values()[d.n() - 1] < 0.0);
    }

    #[test]
    fn inner_products_and_norms() {
        let u = sine(400);
        let d = *u.domain();
        let h2 = d.h() * d.h();
        assert!((inner_product(&u, &u).unwrap() - 0.5).abs() < 10.0 * h2);
        assert_eq!(inner_product(&u, &Field::zeros(d)).unwrap(), 0.0);
        assert!((lp_norm(&u, 4.0).powi(4) - 0.375).abs() < 10.0 * h2);
        let other = Field::zeros(Domain1D::unit(10).unwrap());
        assert!(matches!(inner_product(&u, &other), Err(Error::DomainMismatch { .. })));

        let c = Field::constant(d, 3.0);
        let expected = 3.0 * (d.n() as f64 * d.h()).powf(1.0 / 3.0);
        assert_relative_eq!(lp_norm(&c, 3.0), expected, max_relative = 1e-12);
        assert!((lp_norm(&c, 3.0) - 3.0).abs() < 0.01);

        let spike = Field::unit_vector(d, 7).scaled(-2.0);
        assert_eq!(sup_norm(&spike), 2.0);
    }

    #[test]
    fn negative_part() {
        let d = Domain1D::unit(400).unwrap();
        assert_eq!(negative_part_mass(&sine(400)), NegativePart { l2sq: 0.0, l1: 0.0 });
        let m = negative_part_mass(&Field::constant(d, -1.0));
        assert!((m.l2sq - 1.0).abs() < 0.01 && (m.l1 - 1.0).abs() < 0.01);
        let m = negative_part_mass(&sine(400).scaled(-1.0));
        assert!((m.l2sq - 0.5).abs() < 1e-4);
    }

    fn field_strategy() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        (3usize..40)
            .prop_flat_map(|n| (prop::collection::vec(-10.0f64..10.0, n), prop::collection::vec(-10.0f64..10.0, n)))
    }

    proptest! {
        #[test]
        fn laplacian_is_symmetric_and_nonpositive((a, b) in field_strategy()) {
            let d = Domain1D::new(1.7, a.len()).unwrap();
            let u = Field::from_values(d, a).unwrap();
            let v = Field::from_values(d, b).unwrap();
            let luv = inner_product(&laplacian_apply(&u), &v).unwrap();
            let ulv = inner_product(&u, &laplacian_apply(&v)).unwrap();
            let scale = luv.abs().max(ulv.abs()).max(1e-300);
            prop_assert!((luv - ulv).abs() <= 1e-12 * scale.max(1.0));
            prop_assert!(inner_product(&laplacian_apply(&u), &u).unwrap() <= 1e-9);
        }

        #[test]
        fn negative_mass_vanishes_iff_nonnegative((a, _b) in field_strategy()) {
            let d = Domain1D::unit(a.len()).unwrap();
            let u = Field::from_values(d, a).unwrap();
            let m = negative_part_mass(&u);
            prop_assert_eq!(m.l2sq == 0.0 && m.l1 == 0.0, u.min() >= 0.0);
        }
    }
}
