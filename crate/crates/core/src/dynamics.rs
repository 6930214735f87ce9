//! Time integration of `du = (ν Δu + f(u)) dt + σ(u) dW` and its p-Laplacian
//! variant, with blow-up detection and observable recording.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::grid::{
    dot, laplacian_into, negative_part_of, p_laplacian_into, sup_abs, Domain1D, Field, Tridiagonal, TridiagonalLu,
};
use crate::noise::{path_rng, CovarianceOperator, Kernel};
use crate::spectral::analytic_eigenpair;
use crate::{Error, Result};

/// Reaction term `f(u)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum DriftSpec {
    /// `a1·u^β + a2·u`; integer `β` uses the true power, otherwise `sgn(u)|u|^β`.
    Power {
        a1: f64,
        a2: f64,
        beta: f64,
    },
    /// `|u|^{1+α}`.
    Fujita {
        alpha: f64,
    },
    /// `a·u(1 − u²)`.
    AllenCahn {
        a: f64,
    },
    /// `−sgn(u)|u|^γ`.
    PowerDecay {
        gamma: f64,
    },
    Zero,
}

/// Noise coefficient `σ(u)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum DiffusionSpec {
    /// `b·sgn(u)|u|^m`.
    Power {
        b: f64,
        m: f64,
    },
    /// `k·∂u/∂x` (centred difference).
    Gradient {
        k: f64,
    },
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum OperatorSpec {
    Laplacian { nu: f64 },
    PLaplacian { p: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "profile", rename_all = "snake_case")]
pub enum InitialProfile {
    /// `A·sin(πx/L)`.
    Sine {
        amplitude: f64,
    },
    /// A multiple of `sin(πx/L)` scaled so that `(u₀, φ) = mass` on the grid.
    ScaledPhi {
        mass: f64,
    },
    /// Smooth compactly supported bump `height·exp(1 − 1/(1 − s²))`, `s = (x − center)/width`.
    Bump {
        center: f64,
        width: f64,
        height: f64,
    },
    Constant {
        c: f64,
    },
}

impl InitialProfile {
    pub fn field(&self, domain: Domain1D) -> Field {
        let l = domain.length();
        match *self {
            InitialProfile::Sine { amplitude } => Field::from_fn(domain, |x| amplitude * (PI * x / l).sin()),
            InitialProfile::ScaledPhi { mass } => {
                let shape = Field::from_fn(domain, |x| (PI * x / l).sin());
                let phi = analytic_eigenpair(domain).phi;
                let pairing = dot(shape.values(), phi.values(), domain.h());
                shape.scaled(mass / pairing)
            }
            InitialProfile::Bump { center, width, height } => Field::from_fn(domain, |x| {
                let s = (x - center) / width;
                if s.abs() < 1.0 {
                    height * (1.0 - 1.0 / (1.0 - s * s)).exp()
                } else {
                    0.0
                }
            }),
            InitialProfile::Constant { c } => Field::constant(domain, c),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub domain: Domain1D,
    pub operator: OperatorSpec,
    pub drift: DriftSpec,
    pub diffusion: DiffusionSpec,
    pub kernel: Kernel,
    pub initial: InitialProfile,
}

impl ProblemSpec {
    pub fn validate(&self) -> Result<()> {
        match self.operator {
            OperatorSpec::Laplacian { nu } if !(nu > 0.0) => {
                return Err(Error::invalid("operator.nu", format!("must be positive, got {nu}")))
            }
            OperatorSpec::PLaplacian { p } if !(p >= 2.0) => {
                return Err(Error::invalid("operator.p", format!("must be ≥ 2, got {p}")))
            }
            _ => {}
        }
        match self.drift {
            DriftSpec::Power { beta, .. } if !(beta >= 1.0) => {
                return Err(Error::invalid("drift.beta", format!("must be ≥ 1, got {beta}")))
            }
            DriftSpec::Fujita { alpha } if !(alpha > 0.0) => {
                return Err(Error::invalid("drift.alpha", format!("must be positive, got {alpha}")))
            }
            DriftSpec::PowerDecay { gamma } if !(gamma > 1.0) => {
                return Err(Error::invalid("drift.gamma", format!("must be > 1, got {gamma}")))
            }
            _ => {}
        }
        if let DiffusionSpec::Power { m, .. } = self.diffusion {
            if !(m >= 1.0) {
                return Err(Error::invalid("noise.m", format!("must be ≥ 1, got {m}")));
            }
        }
        if let InitialProfile::Bump { width, .. } = self.initial {
            if !(width > 0.0) {
                return Err(Error::invalid("initial.width", format!("must be positive, got {width}")));
            }
        }
        self.kernel.validate()
    }

    pub fn initial_field(&self) -> Field {
        self.initial.field(self.domain)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    SemiImplicit,
    TamedExplicit,
}

impl Scheme {
    /// Semi-implicit for the Laplacian, tamed explicit for the p-Laplacian.
    pub fn default_for(operator: &OperatorSpec) -> Self {
        match operator {
            OperatorSpec::Laplacian { .. } => Scheme::SemiImplicit,
            OperatorSpec::PLaplacian { .. } => Scheme::TamedExplicit,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub dt: f64,
    pub t_max: f64,
    pub blowup_threshold: f64,
    pub scheme: Scheme,
    pub record_stride: usize,
}

pub const DEFAULT_DT: f64 = 1e-4;
pub const DEFAULT_BLOWUP_THRESHOLD: f64 = 1e6;

impl SolverConfig {
    pub fn new(dt: f64, t_max: f64, scheme: Scheme) -> Self {
        Self { dt, t_max, blowup_threshold: DEFAULT_BLOWUP_THRESHOLD, scheme, record_stride: 1 }
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.record_stride = stride;
        self
    }

    pub fn with_threshold(mut self, threshold: f64) -> Self {
        self.blowup_threshold = threshold;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) {
            return Err(Error::invalid("time.dt", format!("must be positive, got {}", self.dt)));
        }
        if !(self.t_max > 0.0 && self.dt < self.t_max) {
            return Err(Error::invalid("time.t_max", format!("must exceed dt = {}, got {}", self.dt, self.t_max)));
        }
        if self.record_stride == 0 {
            return Err(Error::invalid("time.record_stride", "must be at least 1"));
        }
        Ok(())
    }

    pub fn n_steps(&self) -> usize {
        (self.t_max / self.dt).round() as usize
    }
}

/// The tracked scalar functionals of a solution snapshot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observable {
    /// `(φ, u_t)`.
    PhiPairing,
    /// `(φ, u_t)²`.
    PhiPairingSq,
    /// `‖u_t‖²_{L²}`.
    L2sq,
    /// `‖u_t‖⁴_{L⁴}`.
    L4_4,
    /// `‖u_t‖_∞`.
    Sup,
    /// `‖u_t⁻‖²_{L²}`.
    NegL2sq,
    /// `‖u_t⁻‖_{L¹}`.
    NegL1,
}

impl Observable {
    pub const ALL: [Observable; 7] = [
        Observable::PhiPairing,
        Observable::PhiPairingSq,
        Observable::L2sq,
        Observable::L4_4,
        Observable::Sup,
        Observable::NegL2sq,
        Observable::NegL1,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Observable::PhiPairing => "phi_pairing",
            Observable::PhiPairingSq => "phi_pairing_sq",
            Observable::L2sq => "l2sq",
            Observable::L4_4 => "l4_4",
            Observable::Sup => "sup",
            Observable::NegL2sq => "neg_l2sq",
            Observable::NegL1 => "neg_l1",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|o| o.name() == name)
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

/// One snapshot of every [`Observable`], indexed by [`Observable::index`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Snapshot(pub [f64; 7]);

impl Snapshot {
    pub fn get(&self, obs: Observable) -> f64 {
        self.0[obs.index()]
    }

    fn measure(u: &[f64], phi: &[f64], h: f64) -> Self {
        let pairing = dot(u, phi, h);
        let l2sq = dot(u, u, h);
        let l4_4 = h * u.iter().map(|v| (v * v) * (v * v)).sum::<f64>();
        let neg = negative_part_of(u, h);
        Snapshot([pairing, pairing * pairing, l2sq, l4_4, sup_abs(u), neg.l2sq, neg.l1])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathResult {
    pub times: Vec<f64>,
    pub samples: Vec<Snapshot>,
    pub blow_up_time: Option<f64>,
    pub exploded: bool,
}

impl PathResult {
    pub fn series(&self, obs: Observable) -> Vec<f64> {
        self.samples.iter().map(|s| s.get(obs)).collect()
    }
}

/// `x^p` with the sign convention of the drift: true power for integer `p`,
/// `sgn(x)|x|^p` otherwise.
fn drift_pow(x: f64, p: f64) -> f64 {
    if p.fract() == 0.0 && p.abs() <= 64.0 {
        x.powi(p as i32)
    } else {
        signed_pow(x, p)
    }
}

fn signed_pow(x: f64, p: f64) -> f64 {
    x.signum() * x.abs().powf(p) * if x == 0.0 { 0.0 } else { 1.0 }
}

impl DriftSpec {
    fn eval(&self, u: f64) -> f64 {
        match *self {
            DriftSpec::Power { a1, a2, beta } => a1 * drift_pow(u, beta) + a2 * u,
            DriftSpec::Fujita { alpha } => u.abs().powf(1.0 + alpha),
            DriftSpec::AllenCahn { a } => a * u * (1.0 - u * u),
            DriftSpec::PowerDecay { gamma } => -signed_pow(u, gamma),
            DriftSpec::Zero => 0.0,
        }
    }

    /// True when `f(0) = 0`, so the zero field is invariant.
    pub fn vanishes_at_zero(&self) -> bool {
        self.eval(0.0) == 0.0
    }
}

/// Pointwise `f(u)`.
pub fn drift_eval(spec: &DriftSpec, u: &Field) -> Field {
    u.map(|v| spec.eval(v))
}

/// `σ(u)∘dW`.
pub fn diffusion_apply(spec: &DiffusionSpec, u: &Field, dw: &Field) -> Result<Field> {
    if u.domain() != dw.domain() {
        return Err(Error::DomainMismatch { left: format!("{:?}", u.domain()), right: format!("{:?}", dw.domain()) });
    }
    let mut out = Field::zeros(*u.domain());
    diffusion_into(spec, u.values(), dw.values(), u.domain().h(), out.values_mut());
    Ok(out)
}

fn diffusion_into(spec: &DiffusionSpec, u: &[f64], dw: &[f64], h: f64, out: &mut [f64]) {
    match *spec {
        DiffusionSpec::Power { b, m } => {
            for ((o, &v), &w) in out.iter_mut().zip(u).zip(dw) {
                *o = b * signed_pow(v, m) * w;
            }
        }
        DiffusionSpec::Gradient { k } => {
            let n = u.len();
            for i in 0..n {
                let left = if i == 0 { 0.0 } else { u[i - 1] };
                let right = if i + 1 == n { 0.0 } else { u[i + 1] };
                out[i] = k * (right - left) / (2.0 * h) * dw[i];
            }
        }
        DiffusionSpec::Zero => out.iter_mut().for_each(|o| *o = 0.0),
    }
}

/// Per-path scratch buffers.
struct Workspace {
    rhs: Vec<f64>,
    drift: Vec<f64>,
    dw: Vec<f64>,
    noise: Vec<f64>,
}

impl Workspace {
    fn new(n: usize) -> Self {
        Self { rhs: vec![0.0; n], drift: vec![0.0; n], dw: vec![0.0; n], noise: vec![0.0; n] }
    }
}

/// Precomputed state shared read-only by every path of one problem: the
/// covariance factor, the sampled eigenfunction, the implicit solver and
/// the initial field.
#[derive(Debug, Clone)]
pub struct Simulator {
    problem: ProblemSpec,
    config: SolverConfig,
    covariance: CovarianceOperator,
    phi: Field,
    implicit: Option<TridiagonalLu>,
    initial: Field,
}

impl Simulator {
    pub fn new(problem: &ProblemSpec, config: &SolverConfig) -> Result<Self> {
        problem.validate()?;
        config.validate()?;
        let domain = problem.domain;
        let implicit = match (config.scheme, problem.operator) {
            (Scheme::SemiImplicit, OperatorSpec::Laplacian { nu }) => {
                Some(Tridiagonal::implicit_heat(domain.n(), domain.h(), config.dt * nu).factor()?)
            }
            (Scheme::SemiImplicit, OperatorSpec::PLaplacian { .. }) => {
                return Err(Error::invalid("time.scheme", "the p-Laplacian requires scheme tamed_explicit"))
            }
            (Scheme::TamedExplicit, _) => None,
        };
        let initial = problem.initial_field();
        if !initial.is_finite() {
            return Err(Error::invalid("initial", "initial profile is not finite"));
        }
        let sup0 = sup_abs(initial.values());
        if !(config.blowup_threshold > sup0) {
            return Err(Error::invalid(
                "time.blowup_threshold",
                format!("must exceed the initial sup-norm {sup0}, got {}", config.blowup_threshold),
            ));
        }
        let covariance = CovarianceOperator::assemble(problem.kernel, domain)?;
        let phi = analytic_eigenpair(domain).phi;
        Ok(Self { problem: *problem, config: *config, covariance, phi, implicit, initial })
    }

    pub fn problem(&self) -> &ProblemSpec {
        &self.problem
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    pub fn covariance(&self) -> &CovarianceOperator {
        &self.covariance
    }

    pub fn initial(&self) -> &Field {
        &self.initial
    }

    pub fn snapshot(&self, u: &Field) -> Snapshot {
        Snapshot::measure(u.values(), self.phi.values(), u.domain().h())
    }

    /// One time step from `u`.
    pub fn step<R: Rng + ?Sized>(&self, u: &Field, rng: &mut R) -> Field {
        let mut next = u.clone();
        let mut ws = Workspace::new(u.len());
        self.advance(next.values_mut(), &mut ws, rng);
        next
    }

    fn advance<R: Rng + ?Sized>(&self, u: &mut [f64], ws: &mut Workspace, rng: &mut R) {
        let dt = self.config.dt;
        let h = self.problem.domain.h();
        if !matches!(self.problem.diffusion, DiffusionSpec::Zero) {
            self.covariance.sample_into(dt, rng, &mut ws.dw);
        }
        diffusion_into(&self.problem.diffusion, u, &ws.dw, h, &mut ws.noise);
        match &self.implicit {
            Some(lu) => {
                for ((r, &v), &w) in ws.rhs.iter_mut().zip(u.iter()).zip(&ws.noise) {
                    *r = v + dt * self.problem.drift.eval(v) + w;
                }
                lu.solve_in_place(&mut ws.rhs);
                u.copy_from_slice(&ws.rhs);
            }
            None => {
                match self.problem.operator {
                    OperatorSpec::Laplacian { nu } => {
                        laplacian_into(u, h, &mut ws.drift);
                        ws.drift.iter_mut().for_each(|v| *v *= nu);
                    }
                    OperatorSpec::PLaplacian { p } => p_laplacian_into(u, h, p, &mut ws.drift),
                }
                for (d, &v) in ws.drift.iter_mut().zip(u.iter()) {
                    *d += self.problem.drift.eval(v);
                }
                let tame = 1.0 + dt * sup_abs(&ws.drift);
                for ((v, &f), &w) in u.iter_mut().zip(&ws.drift).zip(&ws.noise) {
                    *v += dt * f / tame + w;
                }
            }
        }
    }

    /// Runs one path, recording every `record_stride` steps, until `t_max`
    /// or until the sup-norm exceeds the threshold (or turns non-finite).
    pub fn run<R: Rng + ?Sized>(&self, rng: &mut R) -> PathResult {
        let n_steps = self.config.n_steps();
        let stride = self.config.record_stride;
        let h = self.problem.domain.h();
        let mut u = self.initial.values().to_vec();
        let mut ws = Workspace::new(u.len());
        let mut times = Vec::with_capacity(n_steps / stride + 1);
        let mut samples = Vec::with_capacity(n_steps / stride + 1);
        times.push(0.0);
        samples.push(Snapshot::measure(&u, self.phi.values(), h));
        for k in 1..=n_steps {
            self.advance(&mut u, &mut ws, rng);
            let t = k as f64 * self.config.dt;
            let sup = sup_abs(&u);
            if !(sup <= self.config.blowup_threshold) {
                return PathResult { times, samples, blow_up_time: Some(t), exploded: true };
            }
            if k % stride == 0 {
                times.push(t);
                samples.push(Snapshot::measure(&u, self.phi.values(), h));
            }
        }
        PathResult { times, samples, blow_up_time: None, exploded: false }
    }
}

/// One step of the configured scheme. Builds the solver state on every call;
/// use [`Simulator`] for repeated stepping.
pub fn step<R: Rng + ?Sized>(u: &Field, problem: &ProblemSpec, config: &SolverConfig, rng: &mut R) -> Result<Field> {
    if u.domain() != &problem.domain {
        return Err(Error::DomainMismatch {
            left: format!("{:?}", u.domain()),
            right: format!("{:?}", problem.domain),
        });
    }
    Ok(Simulator::new(problem, config)?.step(u, rng))
}

/// Simulates one path on stream 0 of `seed`.
pub fn simulate_path(problem: &ProblemSpec, config: &SolverConfig, seed: u64) -> Result<PathResult> {
    Ok(Simulator::new(problem, config)?.run(&mut path_rng(seed, 0)))
}
