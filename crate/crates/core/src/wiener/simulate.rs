//! Path simulation and first-passage sampling.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::cdf::{lower_cdf, lower_probability};
use super::density::fpt_log_density_grad;
use super::{choice_probability, Boundary, DdmParams};
use crate::error::{Error, Result};
use crate::exec::{stream_rng, Exec};

/// Absolute time (seconds) after which simulated paths are censored.
pub const DEFAULT_CENSOR_HORIZON: f64 = 60.0;

/// Euler–Maruyama discretization settings.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EulerSettings {
    pub dt: f64,
    /// Absolute censoring time; must exceed `t0`.
    pub max_t: f64,
}

impl Default for EulerSettings {
    fn default() -> Self {
        EulerSettings {
            dt: 1e-3,
            max_t: DEFAULT_CENSOR_HORIZON,
        }
    }
}

impl EulerSettings {
    fn check(&self, params: &DdmParams) -> Result<usize> {
        params.validate()?;
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Parameter(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.max_t > params.t0) {
            return Err(Error::Parameter(format!(
                "horizon {} must exceed non-decision time {}",
                self.max_t, params.t0
            )));
        }
        Ok(((self.max_t - params.t0) / self.dt).floor() as usize)
    }
}

/// One simulated accumulator path.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    /// Absolute times, starting at `t0`.
    pub times: Vec<f64>,
    pub states: Vec<f64>,
    /// `None` when the path was censored at the horizon.
    pub outcome: Option<Boundary>,
    pub rt: Option<f64>,
}

/// Runs the Euler–Maruyama recursion, calling `visit(step, state)` after each
/// step. Returns the crossing step and boundary, or `None` when censored.
fn euler_walk<R: Rng + ?Sized>(
    params: &DdmParams,
    dt: f64,
    max_steps: usize,
    rng: &mut R,
    mut visit: impl FnMut(usize, f64),
) -> Option<(usize, Boundary)> {
    let drift = params.v * dt;
    let sd = dt.sqrt();
    let mut x = params.start();
    for step in 1..=max_steps {
        let xi: f64 = rng.sample(StandardNormal);
        x += drift + sd * xi;
        visit(step, x);
        if x <= 0.0 {
            return Some((step, Boundary::Lower));
        }
        if x >= params.a {
            return Some((step, Boundary::Upper));
        }
    }
    None
}

/// Simulates a full accumulator path with unit diffusion.
pub fn simulate_path(params: &DdmParams, dt: f64, max_t: f64, seed: u64) -> Result<Trajectory> {
    simulate_path_with(params, &EulerSettings { dt, max_t }, &mut stream_rng(seed, 0))
}

/// [`simulate_path`] driven by a caller-supplied generator.
pub fn simulate_path_with<R: Rng + ?Sized>(
    params: &DdmParams,
    settings: &EulerSettings,
    rng: &mut R,
) -> Result<Trajectory> {
    let max_steps = settings.check(params)?;
    let dt = settings.dt;
    let mut times = vec![params.t0];
    let mut states = vec![params.start()];
    let hit = euler_walk(params, dt, max_steps, rng, |step, x| {
        times.push(params.t0 + step as f64 * dt);
        states.push(x);
    });
    Ok(Trajectory {
        rt: hit.map(|(step, _)| params.t0 + step as f64 * dt),
        outcome: hit.map(|(_, b)| b),
        times,
        states,
    })
}

/// First passage of a single Euler–Maruyama path without storing it.
pub fn euler_first_passage<R: Rng + ?Sized>(
    params: &DdmParams,
    settings: &EulerSettings,
    rng: &mut R,
) -> Result<Option<(Boundary, f64)>> {
    let max_steps = settings.check(params)?;
    Ok(euler_walk(params, settings.dt, max_steps, rng, |_, _| {})
        .map(|(step, b)| (b, params.t0 + step as f64 * settings.dt)))
}

/// Exact draw of (choice, response time) by inversion of the defective
/// distribution function.
pub fn sample_first_passage(params: &DdmParams, seed: u64) -> Result<(Boundary, f64)> {
    params.validate()?;
    Ok(draw_first_passage(params, &mut stream_rng(seed, 0)))
}

/// `n` independent exact draws; draw `i` uses random stream `i` of `seed`.
pub fn sample_first_passages(
    params: &DdmParams,
    n: usize,
    seed: u64,
    exec: Exec,
) -> Result<Vec<(Boundary, f64)>> {
    params.validate()?;
    Ok(exec.map_range(n, |i| draw_first_passage(params, &mut stream_rng(seed, i as u64))))
}

/// Inversion sampler for already validated parameters.
pub(crate) fn draw_first_passage<R: Rng + ?Sized>(params: &DdmParams, rng: &mut R) -> (Boundary, f64) {
    let boundary = if rng.random::<f64>() < choice_probability(params) {
        Boundary::Upper
    } else {
        Boundary::Lower
    };
    // work in lower-boundary coordinates
    let q = match boundary {
        Boundary::Lower => *params,
        Boundary::Upper => params.reflect(),
    };
    let u = loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            break u;
        }
    };
    let tau = invert_lower_cdf(&q, u);
    (boundary, params.t0 + tau)
}

/// Decision time `tau` with `F_lower(tau) / P_lower = u`.
fn invert_lower_cdf(q: &DdmParams, u: f64) -> f64 {
    let total = lower_probability(q.v, q.a, q.z);
    let conditional = |tau: f64| lower_cdf(q.v, q.a, q.z, tau) / total - u;
    let density = |tau: f64| {
        let p = DdmParams { t0: 0.0, ..*q };
        fpt_log_density_grad(&p, tau, Boundary::Lower).log_density.exp() / total
    };

    let mut lo = 0.0;
    let mut hi = 0.25 * q.a * q.a;
    for _ in 0..200 {
        if conditional(hi) >= 0.0 {
            break;
        }
        lo = hi;
        hi *= 2.0;
    }

    let mut tau = 0.5 * (lo + hi);
    for _ in 0..100 {
        let g = conditional(tau);
        if g < 0.0 {
            lo = tau;
        } else {
            hi = tau;
        }
        let d = density(tau);
        let newton = tau - g / d;
        let next = if d > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        let converged = (next - tau).abs() <= 1e-13 * (1.0 + tau) || hi - lo <= 1e-13 * (1.0 + tau);
        tau = next;
        if converged {
            break;
        }
    }
    // a draw at exactly t0 would have zero likelihood
    tau.max(f64::MIN_POSITIVE)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_shape_and_determinism() {
        let p = DdmParams::new(0.5, 2.0, 0.5, 0.3).unwrap();
        let a = simulate_path(&p, 1e-3, 60.0, 11).unwrap();
        let b = simulate_path(&p, 1e-3, 60.0, 11).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.states[0], 1.0);
        assert_eq!(a.times[0], 0.3);
        assert_eq!(a.times.len(), a.states.len());
        assert!(a.times.windows(2).all(|w| w[1] > w[0]));
        let rt = a.rt.unwrap();
        assert!(rt > 0.3);
        let last = *a.states.last().unwrap();
        let step_sd = 1e-3f64.sqrt();
        match a.outcome.unwrap() {
            Boundary::Lower => assert!(last <= 0.0 && last > -6.0 * step_sd),
            Boundary::Upper => assert!(last >= 2.0 && last < 2.0 + 6.0 * step_sd),
        }
    }

    #[test]
    fn censoring() {
        let p = DdmParams::new(0.0, 50.0, 0.5, 0.0).unwrap();
        let tr = simulate_path(&p, 0.01, 1.0, 3).unwrap();
        assert_eq!(tr.outcome, None);
        assert_eq!(tr.rt, None);
        assert!((tr.times.last().unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn bad_settings() {
        let p = DdmParams::new(0.0, 2.0, 0.5, 1.0).unwrap();
        assert!(simulate_path(&p, 0.0, 10.0, 0).is_err());
        assert!(simulate_path(&p, -1e-3, 10.0, 0).is_err());
        assert!(simulate_path(&p, 1e-3, 1.0, 0).is_err());
    }

    #[test]
    fn inversion_lands_on_requested_quantile() {
        let q = DdmParams::new(-1.26, 2.94, 0.52, 0.0).unwrap();
        let total = lower_probability(q.v, q.a, q.z);
        for &u in &[1e-9, 0.01, 0.3, 0.5, 0.9, 0.999999] {
            let tau = invert_lower_cdf(&q, u);
            let back = lower_cdf(q.v, q.a, q.z, tau) / total;
            assert!((back - u).abs() < 1e-9, "u={u} tau={tau} back={back}");
        }
    }

    #[test]
    fn exact_draws_exceed_t0() {
        let p = DdmParams::new(-1.26, 2.94, 0.52, 2.4).unwrap();
        let draws = sample_first_passages(&p, 2000, 5, Exec::Sequential).unwrap();
        assert!(draws.iter().all(|&(_, rt)| rt > 2.4));
        assert_eq!(draws, sample_first_passages(&p, 2000, 5, Exec::Parallel).unwrap());
    }
}
