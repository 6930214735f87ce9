//! One function per subcommand. Each returns the JSON summary and, for the
//! simulation commands, the CSV series; writing them is left to the caller.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;
use serde_json::{json, Value};
use spde_lab::comparison::{
    blowup_time_bound, check_aux_ranges, check_fujita, check_ns_power, check_positivity_22, check_thm31, check_thm32,
    check_thm33, AuxRange, CriterionReport, GrowthFunction, NsFamily,
};
use spde_lab::dynamics::{simulate_path, DiffusionSpec, DriftSpec, Observable, OperatorSpec, ProblemSpec};
use spde_lab::grid::inner_product;
use spde_lab::montecarlo::{moment_domination_report, run_ensemble, EnsembleStats};
use spde_lab::noise::CovarianceOperator;
use spde_lab::spectral::{analytic_eigenpair, discrete_eigenpair, discrete_lambda1_closed_form, EigenPair};
use spde_lab::Error;

use crate::config::RunConfig;
use crate::error::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub summary: Value,
    pub series: Option<String>,
    /// Diagnostics for stderr.
    pub notes: Vec<String>,
}

fn to_value<T: Serialize + ?Sized>(value: &T) -> Value {
    serde_json::to_value(value).expect("plain data serializes")
}

fn echo(config: &RunConfig) -> Value {
    to_value(config)
}

fn csv_row(out: &mut String, t: f64, values: impl IntoIterator<Item = f64>, tail: Option<usize>) {
    write!(out, "{t:.16e}").expect("write to String");
    for v in values {
        write!(out, ",{v:.16e}").expect("write to String");
    }
    if let Some(n) = tail {
        write!(out, ",{n}").expect("write to String");
    }
    out.push('\n');
}

/// Analytic and discrete principal eigenvalues of `−Δ` on the configured grid.
pub fn eig(config: &RunConfig) -> Result<Outcome, CliError> {
    let domain = config.domain()?;
    let analytic = analytic_eigenpair(domain);
    let h = domain.h();
    // The residual floor of the stencil grows like ε/h².
    let tol = (1e-14 / (h * h)).max(1e-10);
    let discrete = discrete_eigenpair(domain, tol)?;
    let summary = json!({
        "length": domain.length(),
        "n": domain.n(),
        "lambda1_analytic": analytic.lambda1,
        "lambda1_discrete": discrete.lambda1,
        "lambda1_discrete_closed_form": discrete_lambda1_closed_form(domain),
        "difference": discrete.lambda1 - analytic.lambda1,
        "normalization_residual": discrete.normalization_residual(),
        "normalization_residual_analytic": analytic.normalization_residual(),
    });
    Ok(Outcome { summary, series: None, notes: Vec::new() })
}

/// The eigenpair seen by the moment equations: pairing `νΔu` with `φ` gives
/// `−νλ₁(u, φ)`, so `λ₁` is scaled by `ν`.
fn moment_eigenpair(problem: &ProblemSpec) -> Option<EigenPair> {
    match problem.operator {
        OperatorSpec::Laplacian { nu } => {
            let mut eig = analytic_eigenpair(problem.domain);
            eig.lambda1 *= nu;
            Some(eig)
        }
        OperatorSpec::PLaplacian { .. } => None,
    }
}

struct Reports {
    reports: Vec<CriterionReport>,
    skipped: Vec<String>,
}

impl Reports {
    fn push(&mut self, name: &str, result: Result<CriterionReport, Error>) {
        match result {
            Ok(r) => self.reports.push(r),
            Err(e) => self.skipped.push(format!("skipped {name}: {e}")),
        }
    }
}

fn all_reports(config: &RunConfig) -> Result<Reports, CliError> {
    let problem = config.problem()?;
    let u0 = problem.initial_field();
    let cov = CovarianceOperator::assemble(problem.kernel, problem.domain)?;
    let (q_sup, q_inf) = (cov.q_sup(), cov.q_inf());
    let mut out = Reports { reports: Vec::new(), skipped: Vec::new() };
    let power_noise = match problem.diffusion {
        DiffusionSpec::Power { b, m } => Some((b, m)),
        _ => None,
    };
    if let Some(eig) = moment_eigenpair(&problem) {
        match problem.drift {
            DriftSpec::Fujita { alpha } => {
                out.push("fujita", check_fujita(&u0, alpha, &eig));
                if let Some((b, m)) = power_noise {
                    out.push("thm32", check_thm32(&u0, alpha, m, b, q_inf, &eig));
                }
            }
            DriftSpec::Power { a1, a2, beta } => {
                out.push("thm31", check_thm31(&u0, a1, a2, beta, &eig));
                out.push("ns_N", check_ns_power(NsFamily::N { a1, beta }, &u0, &eig));
            }
            _ => {}
        }
        if let Some((b, m)) = power_noise {
            out.push("thm33", check_thm33(&u0, m, b, q_inf, &eig));
            out.push("ns_S", check_ns_power(NsFamily::S { b, m, q1: q_inf }, &u0, &eig));
        }
    }
    if let Some((b, m)) = power_noise {
        if let DriftSpec::Power { a1, a2, beta } = problem.drift {
            out.reports.push(check_positivity_22(a1, a2, beta, b, m, q_sup));
        }
        if let OperatorSpec::PLaplacian { p } = problem.operator {
            out.reports.push(check_aux_ranges(AuxRange::Thm22 { p, m, n: 1.0 }));
        }
        out.reports.push(check_aux_ranges(AuxRange::Thm23 { m, n: 1.0 }));
        match problem.drift {
            DriftSpec::AllenCahn { .. } => out.reports.push(check_aux_ranges(AuxRange::Thm41 { m })),
            DriftSpec::PowerDecay { gamma } => out.reports.push(check_aux_ranges(AuxRange::Cor41 { m, gamma })),
            _ => {}
        }
    }
    if let (DiffusionSpec::Gradient { k }, OperatorSpec::Laplacian { nu }) = (problem.diffusion, problem.operator) {
        // The Itô correction of k·∂u dW is k²·q(x, x)·|∂u|².
        out.reports.push(check_aux_ranges(AuxRange::Thm42 { nu, q0: k * k * q_sup }));
    }
    Ok(out)
}

/// Every criterion applicable to the configured problem, as a JSON array.
/// Checks whose hypotheses the parameters do not meet are left out.
pub fn check(config: &RunConfig) -> Result<Outcome, CliError> {
    let reports = all_reports(config)?;
    Ok(Outcome { summary: to_value(&reports.reports), series: None, notes: reports.skipped })
}

/// The scalar comparison problem attached to a configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub observable: Observable,
    pub g: GrowthFunction,
    pub x0: f64,
}

/// Power drift compares the first moment `(φ, u)`; Fujita drift and pure
/// power noise compare the second moment `E(φ, u)²`.
pub fn comparison(config: &RunConfig) -> Result<Option<Comparison>, CliError> {
    let problem = config.problem()?;
    let Some(eig) = moment_eigenpair(&problem) else { return Ok(None) };
    let xi0 = inner_product(&problem.initial_field(), &eig.phi)?;
    let q1 = || CovarianceOperator::assemble(problem.kernel, problem.domain).map(|c| c.q_inf());
    let lambda1 = eig.lambda1;
    let found = match (problem.drift, problem.diffusion) {
        (DriftSpec::Power { a1, a2, beta }, _) => {
            Some((Observable::PhiPairing, GrowthFunction::first_moment(a1, a2, beta, lambda1)?, xi0))
        }
        (DriftSpec::Fujita { alpha }, DiffusionSpec::Power { b, m }) => Some((
            Observable::PhiPairingSq,
            GrowthFunction::fujita_second_moment(alpha, q1()?, b, m, lambda1)?,
            xi0 * xi0,
        )),
        (DriftSpec::Fujita { alpha }, DiffusionSpec::Zero) => Some((
            Observable::PhiPairingSq,
            GrowthFunction::fujita_second_moment(alpha, 0.0, 0.0, 1.0, lambda1)?,
            xi0 * xi0,
        )),
        (DriftSpec::Zero, DiffusionSpec::Power { b, m }) => {
            Some((Observable::PhiPairingSq, GrowthFunction::noise_second_moment(q1()?, b, m, lambda1)?, xi0 * xi0))
        }
        _ => None,
    };
    Ok(found.map(|(observable, g, x0)| Comparison { observable, g, x0 }))
}

fn bound_value(found: &Option<Comparison>) -> Result<Value, CliError> {
    let Some(c) = found else {
        return Ok(json!({
            "observable": null, "x0": null, "g": null, "t_star": null,
            "abs_error_estimate": null, "method": null,
            "note": "no comparison function for this drift and noise",
        }));
    };
    let base = |t_star: Value, err: Value, method: Value, note: Value| {
        json!({
            "observable": c.observable.name(), "x0": c.x0, "g": to_value(c.g.terms()),
            "t_star": t_star, "abs_error_estimate": err, "method": method, "note": note,
        })
    };
    match blowup_time_bound(&c.g, c.x0) {
        Ok(r) => Ok(base(json!(r.t_star), json!(r.abs_error_estimate), to_value(&r.method), Value::Null)),
        Err(e @ (Error::NoFiniteBound { .. } | Error::DivergentIntegral(_))) => {
            Ok(base(Value::Null, Value::Null, Value::Null, json!(e.to_string())))
        }
        Err(e) => Err(e.into()),
    }
}

/// Upper bound on the blow-up time of the comparison moment, `null` when
/// the comparison function admits none.
pub fn bound(config: &RunConfig) -> Result<Outcome, CliError> {
    Ok(Outcome { summary: bound_value(&comparison(config)?)?, series: None, notes: Vec::new() })
}

fn observable_header() -> String {
    let mut header = String::from("t");
    for obs in Observable::ALL {
        header.push(',');
        header.push_str(obs.name());
    }
    header
}

/// One path on stream 0 of `mc.seed`.
pub fn simulate(config: &RunConfig) -> Result<Outcome, CliError> {
    let path = simulate_path(&config.problem()?, &config.solver()?, config.mc.seed)?;
    let mut csv = observable_header();
    csv.push('\n');
    for (t, s) in path.times.iter().zip(&path.samples) {
        csv_row(&mut csv, *t, s.0, None);
    }
    let summary = json!({
        "blow_up_time": path.blow_up_time,
        "exploded": path.exploded,
        "n_records": path.times.len(),
        "config_echo": echo(config),
    });
    Ok(Outcome { summary, series: Some(csv), notes: Vec::new() })
}

fn ensemble_csv(stats: &EnsembleStats) -> String {
    let mut csv = String::from("t");
    for obs in Observable::ALL {
        let name = obs.name();
        write!(csv, ",{name}_mean,{name}_var,{name}_ci").expect("write to String");
    }
    csv.push_str(",n_alive\n");
    for (k, t) in stats.times.iter().enumerate() {
        let values = Observable::ALL.into_iter().flat_map(|obs| {
            let s = stats.series(obs);
            [s.mean[k], s.var[k], s.ci[k]]
        });
        csv_row(&mut csv, *t, values, Some(stats.n_alive[k]));
    }
    csv
}

fn ensemble_summary(stats: &EnsembleStats) -> Value {
    json!({
        "n_paths": stats.n_paths,
        "n_exploded": stats.n_exploded,
        "blow_up_fraction": stats.blow_up_fraction,
        "blow_up_time_quantiles": stats.blow_up_time_quantiles.map(|[q10, q50, q90]| {
            json!({ "q10": q10, "q50": q50, "q90": q90 })
        }),
    })
}

fn ensemble(config: &RunConfig, workers: usize) -> Result<EnsembleStats, CliError> {
    Ok(run_ensemble(&config.problem()?, &config.solver()?, &config.ensemble(workers))?)
}

/// `mc.paths` paths; censored per-time moments and blow-up statistics.
pub fn mc(config: &RunConfig, workers: usize) -> Result<Outcome, CliError> {
    let stats = ensemble(config, workers)?;
    let mut summary = ensemble_summary(&stats);
    summary["config_echo"] = echo(config);
    Ok(Outcome { summary, series: Some(ensemble_csv(&stats)), notes: Vec::new() })
}

/// [`mc`] followed by the check that the ensemble moment dominates the
/// comparison solution.
pub fn compare(config: &RunConfig, workers: usize) -> Result<Outcome, CliError> {
    let found = comparison(config)?.ok_or_else(|| CliError::Config {
        key: "drift.family".to_owned(),
        message: "no comparison function for this drift and noise".to_owned(),
    })?;
    let bound = bound_value(&Some(found.clone()))?;
    let stats = ensemble(config, workers)?;
    let report = moment_domination_report(&stats, &found.g, found.x0, found.observable)?;
    let summary = json!({
        "passed": report.passed,
        "ensemble": ensemble_summary(&stats),
        "bound": bound,
        "domination": to_value(&report),
        "config_echo": echo(config),
    });
    Ok(Outcome { summary, series: Some(ensemble_csv(&stats)), notes: Vec::new() })
}

/// The `satisfied` flag of each report in a `check` array, keyed by name.
pub fn verdicts(reports: &Value) -> BTreeMap<String, bool> {
    reports
        .as_array()
        .into_iter()
        .flatten()
        .filter_map(|r| Some((r.get("name")?.as_str()?.to_owned(), r.get("satisfied")?.as_bool()?)))
        .collect()
}
