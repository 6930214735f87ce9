//! Path ensembles: censored moment estimates with confidence intervals,
//! blow-up statistics, and domination checks against comparison solutions.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::comparison::{comparison_solution_at, GrowthFunction};
use crate::dynamics::{Observable, PathResult, ProblemSpec, Simulator, SolverConfig};
use crate::noise::path_rng;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub n_paths: usize,
    pub base_seed: u64,
    /// Maximum parallel workers; 0 uses every available core. Results do
    /// not depend on this value.
    #[serde(default)]
    pub workers: usize,
}

impl EnsembleConfig {
    pub fn new(n_paths: usize, base_seed: u64) -> Self {
        Self { n_paths, base_seed, workers: 0 }
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }
}

/// Running count, mean and sum of squared deviations.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    count: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    /// Pairwise combination of two disjoint samples.
    pub fn merge(&mut self, other: &Moments) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let n = self.count + other.count;
        let delta = other.mean - self.mean;
        let (na, nb) = (self.count as f64, other.count as f64);
        self.mean += delta * nb / n as f64;
        self.m2 += other.m2 + delta * delta * na * nb / n as f64;
        self.count = n;
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    /// NaN when empty.
    pub fn mean(&self) -> f64 {
        if self.count == 0 {
            f64::NAN
        } else {
            self.mean
        }
    }

    /// Sample variance (`n − 1` denominator); 0 for a single sample.
    pub fn variance(&self) -> f64 {
        match self.count {
            0 => f64::NAN,
            1 => 0.0,
            n => self.m2 / (n - 1) as f64,
        }
    }
}

/// Per-time accumulators for every observable plus the blow-up times seen.
#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    moments: Vec<[Moments; 7]>,
    blow_up_times: Vec<f64>,
    n_paths: usize,
}

impl Aggregate {
    pub fn new(n_times: usize) -> Self {
        Self { moments: vec![[Moments::default(); 7]; n_times], blow_up_times: Vec::new(), n_paths: 0 }
    }

    pub fn push(&mut self, path: &PathResult) {
        self.n_paths += 1;
        for (slot, sample) in self.moments.iter_mut().zip(&path.samples) {
            for (m, &v) in slot.iter_mut().zip(&sample.0) {
                m.push(v);
            }
        }
        if let Some(t) = path.blow_up_time {
            self.blow_up_times.push(t);
        }
    }

    pub fn merge(&mut self, other: &Aggregate) {
        for (a, b) in self.moments.iter_mut().zip(&other.moments) {
            for (x, y) in a.iter_mut().zip(b) {
                x.merge(y);
            }
        }
        self.blow_up_times.extend_from_slice(&other.blow_up_times);
        self.n_paths += other.n_paths;
    }

    pub fn finish(&self, times: Vec<f64>) -> EnsembleStats {
        let n_alive: Vec<usize> = self.moments.iter().map(|slot| slot[0].count() as usize).collect();
        let series = Observable::ALL
            .iter()
            .map(|&obs| {
                let column = self.moments.iter().map(|slot| slot[obs.index()]);
                let mean = column.clone().map(|m| m.mean()).collect();
                let var: Vec<f64> = column.clone().map(|m| m.variance()).collect();
                let ci = column.zip(&var).map(|(m, v)| 3.0 * (v / m.count() as f64).sqrt()).collect();
                ObservableSeries { observable: obs, mean, var, ci }
            })
            .collect();
        let mut sorted = self.blow_up_times.clone();
        sorted.sort_by(f64::total_cmp);
        let blow_up_time_quantiles =
            (!sorted.is_empty()).then(|| [quantile(&sorted, 0.1), quantile(&sorted, 0.5), quantile(&sorted, 0.9)]);
        EnsembleStats {
            times,
            series,
            n_alive,
            n_paths: self.n_paths,
            n_exploded: sorted.len(),
            blow_up_fraction: sorted.len() as f64 / self.n_paths.max(1) as f64,
            blow_up_time_quantiles,
        }
    }
}

/// Linear interpolation between order statistics of a sorted sample.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservableSeries {
    pub observable: Observable,
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
    /// Half-width `3·√(var/n_alive)`.
    pub ci: Vec<f64>,
}

/// Censored per-time statistics: paths stop contributing once they explode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleStats {
    pub times: Vec<f64>,
    pub series: Vec<ObservableSeries>,
    pub n_alive: Vec<usize>,
    pub n_paths: usize,
    pub n_exploded: usize,
    pub blow_up_fraction: f64,
    /// 10%, 50% and 90% quantiles over the exploded paths.
    pub blow_up_time_quantiles: Option<[f64; 3]>,
}

impl EnsembleStats {
    pub fn series(&self, obs: Observable) -> &ObservableSeries {
        &self.series[obs.index()]
    }

    /// Index of the recorded time closest to `t`.
    pub fn time_index(&self, t: f64) -> usize {
        self.times
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - t).abs().total_cmp(&(b.1 - t).abs()))
            .map(|(i, _)| i)
            .unwrap_or(0)
    }
}

const CHUNK: usize = 16;

/// Runs `n_paths` independent paths, path `i` on stream `i` of `base_seed`.
/// Paths are grouped in fixed chunks of 16, accumulated in index order and
/// merged chunk by chunk in index order, so the result is bit-identical for
/// any worker count.
pub fn run_ensemble(problem: &ProblemSpec, solver: &SolverConfig, ensemble: &EnsembleConfig) -> Result<EnsembleStats> {
    if ensemble.n_paths == 0 {
        return Err(Error::invalid("mc.paths", "must be at least 1"));
    }
    let sim = Simulator::new(problem, solver)?;
    let stride = solver.record_stride;
    let n_times = solver.n_steps() / stride + 1;
    let times: Vec<f64> = (0..n_times).map(|k| (k * stride) as f64 * solver.dt).collect();
    let chunk_starts: Vec<usize> = (0..ensemble.n_paths).step_by(CHUNK).collect();
    let work = || -> Vec<Aggregate> {
        chunk_starts
            .par_iter()
            .map(|&start| {
                let mut agg = Aggregate::new(n_times);
                for index in start..(start + CHUNK).min(ensemble.n_paths) {
                    let path = sim.run(&mut path_rng(ensemble.base_seed, index as u64));
                    agg.push(&path);
                }
                agg
            })
            .collect()
    };
    let chunks = if ensemble.workers == 0 {
        work()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(ensemble.workers)
            .build()
            .map_err(|e| Error::invalid("workers", e.to_string()))?
            .install(work)
    };
    let mut total = Aggregate::new(n_times);
    for chunk in &chunks {
        total.merge(chunk);
    }
    Ok(total.finish(times))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominationPoint {
    pub t: f64,
    pub mean: f64,
    pub ci: f64,
    pub zeta: f64,
    pub disc_tol: f64,
    pub n_alive: usize,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominationReport {
    pub observable: Observable,
    pub x0: f64,
    /// Sample times before the comparison solution blows up.
    pub points: Vec<DominationPoint>,
    /// First recorded time at or after which `ζ` has blown up.
    pub zeta_blow_up_after: Option<f64>,
    pub first_failure: Option<f64>,
    pub passed: bool,
}

impl DominationReport {
    /// The point recorded closest to `t`.
    pub fn at(&self, t: f64) -> Option<&DominationPoint> {
        self.points.iter().min_by(|a, b| (a.t - t).abs().total_cmp(&(b.t - t).abs()))
    }
}

/// Relative discretization allowance added to the moment before comparing.
pub const DISC_TOL: f64 = 0.05;

/// Checks `mean(t) + CI(t) + 0.05·ζ(t) ≥ ζ(t)` at every sample time before
/// `ζ` blows up, where `ζ` solves `dζ/dt = g(ζ)`, `ζ(0) = x0`. A time with
/// every path already exploded passes.
pub fn moment_domination_report(
    stats: &EnsembleStats,
    g: &GrowthFunction,
    x0: f64,
    observable: Observable,
) -> Result<DominationReport> {
    if !matches!(observable, Observable::PhiPairing | Observable::PhiPairingSq) {
        return Err(Error::MissingObservable(format!(
            "{} has no comparison dynamics; use phi_pairing or phi_pairing_sq",
            observable.name()
        )));
    }
    let series = stats.series(observable);
    let start = series.mean.first().copied().ok_or_else(|| Error::MissingObservable("empty ensemble".into()))?;
    if (start - x0).abs() > 1e-9 * x0.abs().max(1.0) {
        return Err(Error::invalid("x0", format!("must equal the initial {} = {start}, got {x0}", observable.name())));
    }
    let zeta = comparison_solution_at(g, x0, &stats.times)?;
    let mut points = Vec::new();
    let mut zeta_blow_up_after = None;
    for (k, z) in zeta.iter().enumerate() {
        let Some(z) = *z else {
            zeta_blow_up_after = Some(stats.times[k]);
            break;
        };
        let disc_tol = DISC_TOL * z.abs();
        let (mean, ci, n_alive) = (series.mean[k], series.ci[k], stats.n_alive[k]);
        let pass = n_alive == 0 || mean + ci + disc_tol >= z;
        points.push(DominationPoint { t: stats.times[k], mean, ci, zeta: z, disc_tol, n_alive, pass });
    }
    let first_failure = points.iter().find(|p| !p.pass).map(|p| p.t);
    Ok(DominationReport { observable, x0, points, zeta_blow_up_after, first_failure, passed: first_failure.is_none() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{simulate_path, DiffusionSpec, DriftSpec, InitialProfile, OperatorSpec, Scheme};
    use crate::grid::Domain1D;
    use crate::noise::Kernel;
    use proptest::prelude::*;

    fn problem(b: f64) -> ProblemSpec {
        ProblemSpec {
            domain: Domain1D::unit(32).unwrap(),
            operator: OperatorSpec::Laplacian { nu: 1.0 },
            drift: DriftSpec::Zero,
            diffusion: DiffusionSpec::Power { b, m: 1.0 },
            kernel: Kernel::Constant { q0: 1.0 },
            initial: InitialProfile::Sine { amplitude: 1.0 },
        }
    }

    fn solver() -> SolverConfig {
        SolverConfig::new(1e-3, 0.1, Scheme::SemiImplicit).with_stride(10)
    }

    #[test]
    fn deterministic_ensemble_has_zero_variance() {
        let stats = run_ensemble(&problem(0.0), &solver(), &EnsembleConfig::new(20, 3)).unwrap();
        let single = simulate_path(&problem(0.0), &solver(), 99).unwrap();
        for obs in Observable::ALL {
            let s = stats.series(obs);
            assert!(s.var.iter().all(|&v| v.abs() < 1e-24), "{obs:?}");
            for (m, v) in s.mean.iter().zip(single.series(obs)) {
                assert!((m - v).abs() <= 1e-12 * v.abs().max(1e-300));
            }
        }
        assert_eq!(stats.blow_up_fraction, 0.0);
        assert!(stats.blow_up_time_quantiles.is_none());
    }

    #[test]
    fn single_path_ensemble_matches_path_zero() {
        let p = problem(1.0);
        let stats = run_ensemble(&p, &solver(), &EnsembleConfig::new(1, 7)).unwrap();
        let path = simulate_path(&p, &solver(), 7).unwrap();
        for obs in Observable::ALL {
            assert_eq!(stats.series(obs).mean, path.series(obs));
            assert!(stats.series(obs).var.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let p = problem(1.5);
        let base = run_ensemble(&p, &solver(), &EnsembleConfig::new(50, 11).with_workers(1)).unwrap();
        for workers in [2, 3, 0] {
            let other = run_ensemble(&p, &solver(), &EnsembleConfig::new(50, 11).with_workers(workers)).unwrap();
            assert_eq!(base, other);
        }
    }

    #[test]
    fn quantiles_interpolate() {
        let v = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(quantile(&v, 0.5), 3.0);
        assert!((quantile(&v, 0.1) - 1.4).abs() < 1e-15);
        assert_eq!(quantile(&[2.0], 0.9), 2.0);
    }

    #[test]
    fn deterministic_decay_dominates_pure_decay_ode() {
        let p = problem(0.0);
        let stats = run_ensemble(&p, &solver(), &EnsembleConfig::new(2, 0)).unwrap();
        let x0 = stats.series(Observable::PhiPairing).mean[0];
        let lambda1 = std::f64::consts::PI.powi(2);
        let g = GrowthFunction::new([(-lambda1, 1.0)]).unwrap();
        let report = moment_domination_report(&stats, &g, x0, Observable::PhiPairing).unwrap();
        assert!(report.passed);
        for pt in &report.points {
            assert!((pt.mean / pt.zeta - 1.0).abs() < 0.01);
        }
        let wrong = g.scaled(10.0).unwrap();
        assert!(moment_domination_report(&stats, &wrong, x0, Observable::PhiPairing).unwrap().passed);
        let grow = GrowthFunction::new([(10.0 * lambda1, 1.0)]).unwrap();
        let report = moment_domination_report(&stats, &grow, x0, Observable::PhiPairing).unwrap();
        assert!(report.first_failure.unwrap() <= 0.02);
        assert!(moment_domination_report(&stats, &g, x0 + 1.0, Observable::PhiPairing).is_err());
        assert!(moment_domination_report(&stats, &g, x0, Observable::Sup).is_err());
    }

    #[test]
    fn linear_noise_second_moment_matches_oracle() {
        // With a constant kernel every increment is spatially flat and the
        // sine is an eigenvector of the stencil, so each step multiplies u by
        // (1 + b·ΔB)/(1 + dt·λʰ) and E‖u_k‖² = ((1 + b²dt)/(1 + dt·λʰ)²)^k ‖u₀‖².
        let b = 2.0;
        let p = problem(b);
        let config = SolverConfig::new(1e-3, 0.2, Scheme::SemiImplicit).with_stride(50);
        let stats = run_ensemble(&p, &config, &EnsembleConfig::new(4000, 17)).unwrap();
        let h = p.domain.h();
        let lambda_h = 2.0 * (1.0 - (std::f64::consts::PI * h).cos()) / (h * h);
        let factor = (1.0 + b * b * config.dt) / (1.0 + config.dt * lambda_h).powi(2);
        let s = stats.series(Observable::L2sq);
        for (k, (m, ci)) in s.mean.iter().zip(&s.ci).enumerate() {
            let expected = 0.5 * factor.powi((k * config.record_stride) as i32);
            assert!((m - expected).abs() <= ci.max(1e-12 * expected), "k={k}: {m} vs {expected} ± {ci}");
        }
        // the continuum rate −2λ₁ + q₀b² is matched to first order in dt
        let t = stats.times.last().unwrap();
        let continuum = 0.5 * ((-2.0 * std::f64::consts::PI.powi(2) + b * b) * t).exp();
        assert!((s.mean.last().unwrap() / continuum - 1.0).abs() < 0.05);
    }

    #[test]
    fn rejects_empty_ensemble() {
        assert!(run_ensemble(&problem(0.0), &solver(), &EnsembleConfig::new(0, 0)).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn chan_merge_matches_sequential(values in prop::collection::vec(-1e3f64..1e3, 2..200), split in 0usize..200) {
            let split = split.min(values.len());
            let mut whole = Moments::default();
            values.iter().for_each(|&v| whole.push(v));
            let (mut left, mut right) = (Moments::default(), Moments::default());
            values[..split].iter().for_each(|&v| left.push(v));
            values[split..].iter().for_each(|&v| right.push(v));
            left.merge(&right);
            prop_assert_eq!(left.count(), whole.count());
            let scale = values.iter().map(|v| v.abs()).fold(1.0, f64::max);
            prop_assert!((left.mean() - whole.mean()).abs() <= 1e-12 * scale);
            prop_assert!((left.variance() - whole.variance()).abs() <= 1e-10 * scale * scale);
        }
    }
}
