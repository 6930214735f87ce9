//! Scalar comparison dynamics `dζ/dt = g(ζ)` for the moments of the SPDE,
//! blow-up time bounds `∫_{x0}^∞ dr/g(r)`, and the criterion checkers.

mod bound;
mod criteria;
mod ode;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use bound::{blowup_time_bound, blowup_time_closed_form, blowup_time_quadrature, BoundMethod, BoundResult};
pub use criteria::{
    check_aux_ranges, check_fujita, check_ns_power, check_positivity_22, check_thm31, check_thm32, check_thm33,
    lyapunov_growth_rate, AuxRange, CriterionReport, NsFamily,
};
pub use ode::{comparison_solution_at, integrate_comparison_ode, ComparisonTrajectory, ODE_BLOWUP_LEVEL};

/// One term `c·r^p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub coefficient: f64,
    pub exponent: f64,
}

/// `g(r) = Σ cᵢ r^{pᵢ}` with every `pᵢ ≥ 1`.
///
/// Terms sharing an exponent are merged and zero coefficients dropped, so
/// the stored terms are sorted by strictly decreasing exponent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthFunction {
    terms: Vec<Term>,
}

impl GrowthFunction {
    pub fn new(terms: impl IntoIterator<Item = (f64, f64)>) -> Result<Self> {
        let mut merged: Vec<Term> = Vec::new();
        for (coefficient, exponent) in terms {
            if !coefficient.is_finite() {
                return Err(Error::invalid("coefficient", format!("must be finite, got {coefficient}")));
            }
            if !(exponent >= 1.0 && exponent.is_finite()) {
                return Err(Error::invalid("exponent", format!("must be ≥ 1, got {exponent}")));
            }
            match merged.iter_mut().find(|t| t.exponent == exponent) {
                Some(t) => t.coefficient += coefficient,
                None => merged.push(Term { coefficient, exponent }),
            }
        }
        merged.retain(|t| t.coefficient != 0.0);
        merged.sort_by(|a, b| b.exponent.total_cmp(&a.exponent));
        Ok(Self { terms: merged })
    }

    /// `a₁r^β − (λ₁ − a₂)r`, the right side for the first moment `(φ, u)`.
    pub fn first_moment(a1: f64, a2: f64, beta: f64, lambda1: f64) -> Result<Self> {
        Self::new([(a1, beta), (a2 - lambda1, 1.0)])
    }

    /// `−2λ₁r + 2r^{1+α/2} + q₁b²r^m`, for `E(φ, u)²` under Fujita drift and power noise.
    pub fn fujita_second_moment(alpha: f64, q1: f64, b: f64, m: f64, lambda1: f64) -> Result<Self> {
        Self::new([(-2.0 * lambda1, 1.0), (2.0, 1.0 + alpha / 2.0), (q1 * b * b, m)])
    }

    /// `−2λ₁r + q₁b²r^m`, for `E(φ, u)²` driven by noise alone.
    pub fn noise_second_moment(q1: f64, b: f64, m: f64, lambda1: f64) -> Result<Self> {
        Self::new([(-2.0 * lambda1, 1.0), (q1 * b * b, m)])
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    /// The term of highest exponent.
    pub fn leading(&self) -> Option<Term> {
        self.terms.first().copied()
    }

    pub fn eval(&self, r: f64) -> f64 {
        self.terms.iter().map(|t| t.coefficient * signed_powf(r, t.exponent)).sum()
    }

    /// `g(r)/(c_lead·r^{p_lead})`, evaluated without forming `r^{p_lead}`.
    pub(crate) fn relative_to_leading(&self, r: f64) -> f64 {
        let lead = self.terms[0];
        self.terms.iter().map(|t| t.coefficient / lead.coefficient * r.powf(t.exponent - lead.exponent)).sum()
    }

    /// `Some((a, c))` when `g(r) = a·r² − c·r` with `a > 0` (`c` may be 0).
    pub fn quadratic_linear(&self) -> Option<(f64, f64)> {
        match self.terms.as_slice() {
            [lead] if lead.exponent == 2.0 && lead.coefficient > 0.0 => Some((lead.coefficient, 0.0)),
            [lead, lin] if lead.exponent == 2.0 && lead.coefficient > 0.0 && lin.exponent == 1.0 => {
                Some((lead.coefficient, -lin.coefficient))
            }
            _ => None,
        }
    }

    /// Returns `g` with every coefficient multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.terms.iter().map(|t| (factor * t.coefficient, t.exponent)))
    }
}

fn signed_powf(r: f64, p: f64) -> f64 {
    if r >= 0.0 {
        r.powf(p)
    } else {
        -(-r).powf(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merging_and_ordering() {
        let g = GrowthFunction::new([(1.0, 1.0), (2.0, 3.0), (-1.0, 1.0), (1.0, 2.0)]).unwrap();
        assert_eq!(g.terms().len(), 2);
        assert_eq!(g.leading().unwrap().exponent, 3.0);
        assert!((g.eval(2.0) - 20.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_small_exponents() {
        assert!(GrowthFunction::new([(1.0, 0.5)]).is_err());
        assert!(GrowthFunction::new([(f64::NAN, 2.0)]).is_err());
    }

    #[test]
    fn quadratic_linear_shape() {
        let g = GrowthFunction::noise_second_moment(1.0, 6.0, 2.0, 9.0).unwrap();
        assert_eq!(g.quadratic_linear(), Some((36.0, 18.0)));
        assert_eq!(GrowthFunction::new([(3.0, 2.0)]).unwrap().quadratic_linear(), Some((3.0, 0.0)));
        assert_eq!(GrowthFunction::new([(3.0, 2.5), (-1.0, 1.0)]).unwrap().quadratic_linear(), None);
    }
}
