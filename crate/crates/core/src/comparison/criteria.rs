use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::grid::{inner_product, Field};
use crate::spectral::EigenPair;
use crate::{Error, Result};

/// Verdict of one sufficient condition. `margin > 0` exactly when satisfied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionReport {
    pub name: String,
    pub satisfied: bool,
    /// Signed distance to the threshold in the criterion's natural units.
    pub margin: f64,
    pub inputs: BTreeMap<String, f64>,
    pub notes: Vec<String>,
}

fn report(name: &str, margin: f64, inputs: &[(&str, f64)], notes: Vec<String>) -> CriterionReport {
    CriterionReport {
        name: name.to_owned(),
        satisfied: margin > 0.0,
        margin,
        inputs: inputs.iter().map(|(k, v)| ((*k).to_owned(), *v)).collect(),
        notes,
    }
}

fn pairing(u0: &Field, eig: &EigenPair) -> Result<f64> {
    inner_product(u0, &eig.phi)
}

fn signed_powf(r: f64, p: f64) -> f64 {
    r.signum() * r.abs().powf(p)
}

/// Sign of `(−1)^x` when it is real: `x` is read as a fraction `p/q` with
/// odd `q ≤ 99`, giving `(−1)^p`. `None` when no such fraction matches.
fn real_power_parity(x: f64) -> Option<i8> {
    (1..=99).step_by(2).find_map(|q| {
        let p = x * f64::from(q);
        let rounded = p.round();
        ((p - rounded).abs() <= 1e-9 * p.abs().max(1.0)).then(|| if rounded % 2.0 == 0.0 { 1 } else { -1 })
    })
}

/// Supercritical Fujita data: `(u₀, φ) > λ₁^{1/α}`.
pub fn check_fujita(u0: &Field, alpha: f64, eig: &EigenPair) -> Result<CriterionReport> {
    if !(alpha > 0.0) {
        return Err(Error::invalid("alpha", format!("must be positive, got {alpha}")));
    }
    let xi0 = pairing(u0, eig)?;
    let threshold = eig.lambda1.powf(1.0 / alpha);
    Ok(report(
        "fujita",
        xi0 - threshold,
        &[("alpha", alpha), ("lambda1", eig.lambda1), ("xi0", xi0), ("threshold", threshold)],
        Vec::new(),
    ))
}

/// Blow-up of the first moment under `f ≥ a₁u^β + a₂u`.
///
/// For `λ₁ ≥ a₂` the test is `g(ξ₀) > 0` with `g(r) = a₁r^β − (λ₁ − a₂)r`,
/// i.e. `ξ₀` beyond the positive root `((λ₁ − a₂)/a₁)^{1/(β−1)}`; the stated
/// threshold with exponent `1/β` is evaluated alongside and noted. For
/// `λ₁ < a₂` it asks for `u₀ ≥ 0`, `u₀ ≢ 0`.
pub fn check_thm31(u0: &Field, a1: f64, a2: f64, beta: f64, eig: &EigenPair) -> Result<CriterionReport> {
    if !(a1 > 0.0) {
        return Err(Error::invalid("a1", format!("must be positive, got {a1}")));
    }
    if !(beta > 1.0) {
        return Err(Error::invalid("beta", format!("must exceed 1, got {beta}")));
    }
    let lambda1 = eig.lambda1;
    let xi0 = pairing(u0, eig)?;
    if lambda1 < a2 {
        let (lo, hi) = (u0.min(), u0.max());
        let margin = if lo >= 0.0 { hi } else { lo };
        let note = "λ₁ < a₂: requires u₀ ≥ 0 and u₀ ≢ 0".to_owned();
        return Ok(report(
            "thm31",
            margin,
            &[("a1", a1), ("a2", a2), ("beta", beta), ("lambda1", lambda1), ("xi0", xi0), ("u0_min", lo)],
            vec![note],
        ));
    }
    let c = lambda1 - a2;
    let root = (c / a1).powf(1.0 / (beta - 1.0));
    let g_xi0 = a1 * signed_powf(xi0, beta) - c * xi0;
    let stated = (c / a1).powf(1.0 / beta);
    let stated_ok = xi0 > stated;
    let mut notes = vec![format!(
        "stated threshold ((λ₁−a₂)/a₁)^(1/β) = {stated:.6e}: {}",
        if stated_ok { "satisfied" } else { "not satisfied" }
    )];
    let margin = xi0 - root;
    if stated_ok != (margin > 0.0) {
        notes.push("stated and operative verdicts disagree".to_owned());
    }
    Ok(report(
        "thm31",
        margin,
        &[("a1", a1), ("a2", a2), ("beta", beta), ("lambda1", lambda1), ("xi0", xi0), ("root", root), ("g_xi0", g_xi0)],
        notes,
    ))
}

/// `r^{1+α/2} + (b²q₁/2)r^m − λ₁r > 0` at `r = (u₀, φ)²`.
pub fn check_thm32(u0: &Field, alpha: f64, m: f64, b: f64, q1: f64, eig: &EigenPair) -> Result<CriterionReport> {
    if !(alpha > 0.0) {
        return Err(Error::invalid("alpha", format!("must be positive, got {alpha}")));
    }
    if !(m >= 1.0 && m < 1.0 + alpha / 2.0) {
        return Err(Error::invalid("m", format!("must lie in [1, 1 + α/2), got {m}")));
    }
    let xi0 = pairing(u0, eig)?;
    let r = xi0 * xi0;
    let margin = r.powf(1.0 + alpha / 2.0) + 0.5 * b * b * q1 * r.powf(m) - eig.lambda1 * r;
    Ok(report(
        "thm32",
        margin,
        &[("alpha", alpha), ("m", m), ("b", b), ("q1", q1), ("lambda1", eig.lambda1), ("r", r)],
        Vec::new(),
    ))
}

/// Noise-induced blow-up of `E(φ, u)²`: `(b²q₁/2)η₀^m − λ₁η₀ > 0` with
/// `η₀ = (u₀, φ)²`. The stated form `(u₀, φ)^{2(m−1)} ≥ λ₁/(q₁b²)` lacks the
/// factor 2 and is reported in the notes.
pub fn check_thm33(u0: &Field, m: f64, b: f64, q1: f64, eig: &EigenPair) -> Result<CriterionReport> {
    if !(m > 1.0) {
        return Err(Error::invalid("m", format!("must exceed 1, got {m}")));
    }
    if b == 0.0 || !b.is_finite() {
        return Err(Error::invalid("b", format!("must be nonzero, got {b}")));
    }
    if !(q1 > 0.0) {
        return Err(Error::invalid("q1", format!("must be positive, got {q1}")));
    }
    let xi0 = pairing(u0, eig)?;
    let eta0 = xi0 * xi0;
    let margin = 0.5 * b * b * q1 * eta0.powf(m) - eig.lambda1 * eta0;
    let stated_ok = xi0.abs().powf(2.0 * (m - 1.0)) >= eig.lambda1 / (q1 * b * b);
    let mut notes = vec![format!(
        "stated form (u₀,φ)^(2(m−1)) ≥ λ₁/(q₁b²): {}",
        if stated_ok { "satisfied" } else { "not satisfied" }
    )];
    if stated_ok != (margin > 0.0) {
        notes.push("stated and operative verdicts disagree (factor 2 in the noise term)".to_owned());
    }
    Ok(report("thm33", margin, &[("m", m), ("b", b), ("q1", q1), ("lambda1", eig.lambda1), ("eta0", eta0)], notes))
}

/// Positivity hypotheses for `f ≥ a₁u^β + a₂u` and `σ = b·u^m`:
/// `1 ≤ m < (1 + β)/2`, `(−1)^β` real, and `(−1)^β·a₁ = |a₁|` with `a₁ ≠ 0`.
/// The noise bound then holds with `b₁ = q₀b²/2`, `b₂ = 0`.
pub fn check_positivity_22(a1: f64, a2: f64, beta: f64, b: f64, m: f64, q0: f64) -> CriterionReport {
    let mut notes = Vec::new();
    let mut margin = (1.0 + beta) / 2.0 - m;
    if m < 1.0 {
        margin = margin.min(m - 1.0);
        notes.push("m < 1".to_owned());
    }
    match real_power_parity(beta) {
        Some(parity) => {
            let signed = f64::from(parity) * a1;
            if signed <= 0.0 {
                notes.push(format!("sign of a₁ does not match (−1)^β = {parity}"));
            }
            margin = margin.min(signed);
        }
        None => {
            notes.push("(−1)^β is not real".to_owned());
            margin = margin.min(-1.0);
        }
    }
    if beta.fract() != 0.0 && a1 < 0.0 {
        notes.push("non-integer β with a₁ < 0: the drift uses sgn(u)|u|^β".to_owned());
    }
    let b1 = 0.5 * q0 * b * b;
    report(
        "positivity_22",
        margin,
        &[("a1", a1), ("a2", a2), ("beta", beta), ("b", b), ("m", m), ("q0", q0), ("b1", b1), ("b2", 0.0)],
        notes,
    )
}

/// Parameter ranges of the positivity and global-existence results.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AuxRange {
    /// p-Laplacian positivity: `p > max(2m, n)`.
    Thm22 { p: f64, m: f64, n: f64 },
    /// `2m > n` with `(−1)^{2m−n}` real.
    Thm23 { m: f64, n: f64 },
    /// Stochastic Allen–Cahn: `1 < m < 2`.
    Thm41 { m: f64 },
    /// Power decay: `γ > 1`, `1 < m < (γ + 1)/2`, `(−1)^γ = −1`.
    Cor41 { m: f64, gamma: f64 },
    /// Gradient noise: `2ν − q₀ > 0`.
    Thm42 { nu: f64, q0: f64 },
}

impl AuxRange {
    pub fn from_params(kind: &str, params: &BTreeMap<String, f64>) -> Result<Self> {
        let get = |key: &'static str| {
            params.get(key).copied().ok_or_else(|| Error::invalid(key, format!("required by range kind {kind}")))
        };
        Ok(match kind {
            "thm22" => AuxRange::Thm22 { p: get("p")?, m: get("m")?, n: get("n")? },
            "thm23" => AuxRange::Thm23 { m: get("m")?, n: get("n")? },
            "thm41" => AuxRange::Thm41 { m: get("m")? },
            "cor41" => AuxRange::Cor41 { m: get("m")?, gamma: get("gamma")? },
            "thm42" => AuxRange::Thm42 { nu: get("nu")?, q0: get("q0")? },
            other => return Err(Error::UnknownCriterion(other.to_owned())),
        })
    }

    pub fn kind(&self) -> &'static str {
        match self {
            AuxRange::Thm22 { .. } => "thm22",
            AuxRange::Thm23 { .. } => "thm23",
            AuxRange::Thm41 { .. } => "thm41",
            AuxRange::Cor41 { .. } => "cor41",
            AuxRange::Thm42 { .. } => "thm42",
        }
    }
}

/// Margin is the distance to the nearest bound, negative once one is violated.
pub fn check_aux_ranges(range: AuxRange) -> CriterionReport {
    let name = format!("aux_{}", range.kind());
    let mut notes = Vec::new();
    let (margin, inputs): (f64, Vec<(&str, f64)>) = match range {
        AuxRange::Thm22 { p, m, n } => (p - (2.0 * m).max(n), vec![("p", p), ("m", m), ("n", n)]),
        AuxRange::Thm23 { m, n } => {
            let mut margin = 2.0 * m - n;
            if real_power_parity(2.0 * m - n).is_none() {
                notes.push("(−1)^(2m−n) is not real".to_owned());
                margin = margin.min(-1.0);
            }
            (margin, vec![("m", m), ("n", n)])
        }
        AuxRange::Thm41 { m } => ((m - 1.0).min(2.0 - m), vec![("m", m)]),
        AuxRange::Cor41 { m, gamma } => {
            let mut margin = (gamma - 1.0).min(m - 1.0).min((gamma + 1.0) / 2.0 - m);
            if real_power_parity(gamma) != Some(-1) {
                notes.push("(−1)^γ ≠ −1".to_owned());
                margin = margin.min(-1.0);
            }
            (margin, vec![("m", m), ("gamma", gamma)])
        }
        AuxRange::Thm42 { nu, q0 } => (2.0 * nu - q0, vec![("nu", nu), ("q0", q0)]),
    };
    report(&name, margin, &inputs, notes)
}

/// Power specializations of the two general blow-up hypotheses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family")]
pub enum NsFamily {
    /// Reaction-driven, `F(r) = a₁r^β`.
    N { a1: f64, beta: f64 },
    /// Noise-driven, `G(r) = (b²/2)r^m` with kernel lower bound `q₁`.
    S { b: f64, m: f64, q1: f64 },
}

pub fn check_ns_power(family: NsFamily, u0: &Field, eig: &EigenPair) -> Result<CriterionReport> {
    const SLACK: f64 = 1.0 + 1e-9;
    let xi0 = pairing(u0, eig)?;
    let lambda1 = eig.lambda1;
    Ok(match family {
        NsFamily::N { a1, beta } => {
            let inputs = [("a1", a1), ("beta", beta), ("lambda1", lambda1), ("xi0", xi0)];
            if !(beta > 1.0) {
                report("ns_N", beta - 1.0, &inputs, vec!["β ≤ 1: ∫dr/F(r) diverges".to_owned()])
            } else if !(a1 > 0.0) {
                report("ns_N", a1, &inputs, vec!["a₁ ≤ 0: F never exceeds λ₁r".to_owned()])
            } else {
                let m1 = (lambda1 / a1).powf(1.0 / (beta - 1.0)) * SLACK;
                let mut r = report("ns_N", xi0 - m1, &inputs, Vec::new());
                r.inputs.insert("M1".to_owned(), m1);
                r
            }
        }
        NsFamily::S { b, m, q1 } => {
            let inputs = [("b", b), ("m", m), ("q1", q1), ("lambda1", lambda1), ("xi0", xi0)];
            if !(q1 > 0.0) {
                report("ns_S", q1.min(0.0), &inputs, vec!["q₁ = 0: the kernel is not positive".to_owned()])
            } else if !(m > 1.0) {
                report("ns_S", m - 1.0, &inputs, vec!["m ≤ 1: ∫dr/G(r) diverges".to_owned()])
            } else if b == 0.0 {
                report("ns_S", -1.0, &inputs, vec!["b = 0: no noise term".to_owned()])
            } else {
                let m2 = (2.0 * lambda1 / (q1 * b * b)).powf(1.0 / (m - 1.0)) * SLACK;
                let mut r = report("ns_S", xi0 - m2.sqrt(), &inputs, Vec::new());
                r.inputs.insert("M2".to_owned(), m2);
                r
            }
        }
    })
}

/// Growth rate `C` of the Lyapunov bound `L‖v‖² ≤ C‖v‖²` for
/// `du = (Δu + a·u(1 − u²))dt + b·u^m dW` with `1 < m < 2` and `q ≤ q₀`.
///
/// Hölder with `θ = (2 − m)/m` and Young with exponents
/// `P = 1/(m − 1)`, `Q = 1/(2 − m)` give
/// `q₀b²‖v‖_{2m}^{2m} ≤ ε‖v‖₄⁴ + C(ε)(q₀b²)^Q‖v‖²` with
/// `C(ε) = (εP)^{−Q/P}/Q`, so `C = 2a + C(ε)(q₀b²)^Q` whenever `ε ≤ 2a`.
pub fn lyapunov_growth_rate(a: f64, q0: f64, b: f64, m: f64, eps: f64) -> Result<f64> {
    if !(m > 1.0 && m < 2.0) {
        return Err(Error::invalid("m", format!("must lie in (1, 2), got {m}")));
    }
    if !(a > 0.0) {
        return Err(Error::invalid("a", format!("must be positive, got {a}")));
    }
    if !(eps > 0.0 && eps <= 2.0 * a) {
        return Err(Error::invalid("eps", format!("must lie in (0, 2a], got {eps}")));
    }
    if !(q0 >= 0.0) {
        return Err(Error::invalid("q0", format!("must be non-negative, got {q0}")));
    }
    let p = 1.0 / (m - 1.0);
    let q = 1.0 / (2.0 - m);
    let c_eps = (eps * p).powf(-q / p) / q;
    Ok(2.0 * a + c_eps * (q0 * b * b).powf(q))
}
