use serde::{Deserialize, Serialize};

use super::GrowthFunction;
use crate::{Error, Result};

/// `ζ` above this level counts as blown up.
pub const ODE_BLOWUP_LEVEL: f64 = 1e12;

// Largest relative change of ζ allowed in one RK4 substep.
const MAX_RELATIVE_CHANGE: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTrajectory {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub blow_up_time: Option<f64>,
}

enum Advance {
    Reached(f64),
    BlewUp(f64),
}

fn rk4(g: &GrowthFunction, z: f64, h: f64) -> f64 {
    let k1 = g.eval(z);
    let k2 = g.eval(z + 0.5 * h * k1);
    let k3 = g.eval(z + 0.5 * h * k2);
    let k4 = g.eval(z + h * k3);
    z + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
}

/// Integrates over a time span of length `span`, subdividing each step so
/// that `ζ` changes by at most 1% per substep.
fn advance(g: &GrowthFunction, mut z: f64, span: f64, max_dt: f64) -> Advance {
    let mut t = 0.0;
    while span - t > span * 1e-14 {
        let rate = g.eval(z).abs() / z.abs().max(f64::MIN_POSITIVE);
        let mut h = max_dt.min(span - t);
        if rate > 0.0 {
            h = h.min(MAX_RELATIVE_CHANGE / rate);
        }
        z = rk4(g, z, h);
        t += h;
        if !z.is_finite() || z > ODE_BLOWUP_LEVEL {
            return Advance::BlewUp(t);
        }
    }
    Advance::Reached(z)
}

/// Classical RK4 for `dζ/dt = g(ζ)`, `ζ(0) = x0`, recorded at multiples of
/// `dt` up to `t_max`. Steps are subdivided near blow-up; integration halts
/// once `ζ > 1e12` or turns non-finite, and that instant is the reported
/// blow-up time.
pub fn integrate_comparison_ode(g: &GrowthFunction, x0: f64, dt: f64, t_max: f64) -> Result<ComparisonTrajectory> {
    if !(dt > 0.0) {
        return Err(Error::invalid("dt", format!("must be positive, got {dt}")));
    }
    if !(t_max > 0.0) {
        return Err(Error::invalid("t_max", format!("must be positive, got {t_max}")));
    }
    let n = (t_max / dt).round().max(1.0) as usize;
    let mut times = vec![0.0];
    let mut values = vec![x0];
    let mut z = x0;
    for k in 1..=n {
        match advance(g, z, dt, dt) {
            Advance::Reached(next) => {
                z = next;
                times.push(k as f64 * dt);
                values.push(z);
            }
            Advance::BlewUp(elapsed) => {
                let blow_up_time = Some((k - 1) as f64 * dt + elapsed);
                return Ok(ComparisonTrajectory { times, values, blow_up_time });
            }
        }
    }
    Ok(ComparisonTrajectory { times, values, blow_up_time: None })
}

/// `ζ(t)` at each requested instant (non-decreasing, `≥ 0`); `None` from the
/// blow-up time on.
pub fn comparison_solution_at(g: &GrowthFunction, x0: f64, times: &[f64]) -> Result<Vec<Option<f64>>> {
    const MAX_DT: f64 = 1e-3;
    if times.iter().any(|t| !(*t >= 0.0)) || times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::invalid("times", "must be non-negative and non-decreasing"));
    }
    let mut out = Vec::with_capacity(times.len());
    let (mut t, mut z) = (0.0, Some(x0));
    for &target in times {
        z = match z {
            Some(v) if target > t => match advance(g, v, target - t, MAX_DT) {
                Advance::Reached(next) => Some(next),
                Advance::BlewUp(_) => None,
            },
            other => other,
        };
        t = target;
        out.push(z);
    }
    Ok(out)
}
