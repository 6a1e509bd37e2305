//! Gradient-based MCMC over an unconstrained log density: NUTS with
//! warmup adaptation of the step size and a diagonal (or optionally dense)
//! metric, several independent chains, and a plain HMC fallback.

mod adapt;
mod metric;
mod nuts;

pub use adapt::{DualAveraging, Welford, WelfordCov, WindowSchedule};
pub use metric::{Metric, MetricKind};
pub use nuts::{
    hmc_transition, leapfrog, initial_step_size, nuts_transition, PhasePoint, TransitionStats,
    MAX_ENERGY_ERROR,
};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{stream_rng, Exec};

/// Unnormalized log density with gradient on an unconstrained space.
pub trait LogDensity: Sync {
    fn dim(&self) -> usize;

    /// Writes the gradient into `grad` and returns the log density;
    /// `-inf` outside the support.
    fn log_density_grad(&self, x: &[f64], grad: &mut [f64]) -> f64;

    fn param_names(&self) -> Vec<String> {
        (0..self.dim()).map(|i| format!("x[{i}]")).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Nuts,
    /// Fixed-length HMC; `hmc_steps` leapfrog steps per iteration.
    Hmc,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerConfig {
    pub chains: usize,
    #[serde(rename = "warmup_draws")]
    pub warmup: usize,
    /// Post-warmup draws per chain.
    #[serde(rename = "post_warmup_draws")]
    pub draws: usize,
    #[serde(rename = "target_acceptance")]
    pub target_accept: f64,
    pub max_tree_depth: usize,
    pub metric: MetricKind,
    pub algorithm: Algorithm,
    pub hmc_steps: usize,
    /// Half-width of the uniform initialization box.
    pub init_radius: f64,
    /// Set from the run's master seed, not read from configuration files.
    #[serde(skip)]
    pub seed: u64,
    #[serde(skip)]
    pub exec: Exec,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            chains: 4,
            warmup: 1000,
            draws: 5000,
            target_accept: 0.8,
            max_tree_depth: 10,
            metric: MetricKind::Diag,
            algorithm: Algorithm::Nuts,
            hmc_steps: 32,
            init_radius: 2.0,
            seed: 20240521,
            exec: Exec::default(),
        }
    }
}

const MAX_INIT_ATTEMPTS: usize = 100;

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.chains == 0 {
            return Err(Error::Config("at least one chain is required".into()));
        }
        if self.draws == 0 {
            return Err(Error::Config("draws must be positive".into()));
        }
        if !(self.target_accept > 0.0 && self.target_accept < 1.0) {
            return Err(Error::Config(format!(
                "target_accept must be in (0, 1), got {}",
                self.target_accept
            )));
        }
        if self.max_tree_depth == 0 || self.max_tree_depth > 20 {
            return Err(Error::Config("max_tree_depth must be in 1..=20".into()));
        }
        if self.algorithm == Algorithm::Hmc && self.hmc_steps == 0 {
            return Err(Error::Config("hmc_steps must be positive".into()));
        }
        if !(self.init_radius > 0.0 && self.init_radius.is_finite()) {
            return Err(Error::Config("init_radius must be positive".into()));
        }
        Ok(())
    }
}

/// Post-warmup output of one chain.
#[derive(Clone, Debug, PartialEq)]
pub struct Chain {
    /// `draws[iteration][parameter]`.
    pub draws: Vec<Vec<f64>>,
    pub stats: Vec<TransitionStats>,
    pub step_size: f64,
    pub inv_metric: Vec<f64>,
    pub warmup_divergences: usize,
}

impl Chain {
    pub fn divergences(&self) -> usize {
        self.stats.iter().filter(|s| s.divergent).count()
    }
}

/// Posterior draws from all chains with named parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct DrawsTable {
    pub names: Vec<String>,
    pub chains: Vec<Chain>,
}

impl DrawsTable {
    pub fn n_chains(&self) -> usize {
        self.chains.len()
    }

    pub fn n_draws(&self) -> usize {
        self.chains.first().map_or(0, |c| c.draws.len())
    }

    pub fn n_params(&self) -> usize {
        self.names.len()
    }

    pub fn index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Draws of parameter `p`, one vector per chain.
    pub fn column(&self, p: usize) -> Vec<Vec<f64>> {
        self.chains
            .iter()
            .map(|c| c.draws.iter().map(|d| d[p]).collect())
            .collect()
    }

    pub fn named(&self, name: &str) -> Option<Vec<Vec<f64>>> {
        self.index(name).map(|p| self.column(p))
    }

    /// All draws of parameter `p` pooled across chains.
    pub fn pooled(&self, p: usize) -> Vec<f64> {
        self.column(p).into_iter().flatten().collect()
    }

    /// Every draw as a full parameter vector, chain-major.
    pub fn iter_draws(&self) -> impl Iterator<Item = &[f64]> {
        self.chains.iter().flat_map(|c| c.draws.iter().map(|d| d.as_slice()))
    }

    pub fn divergences(&self) -> usize {
        self.chains.iter().map(Chain::divergences).sum()
    }

    /// Appends derived columns computed from each draw.
    pub fn with_derived<F>(mut self, names: Vec<String>, f: F) -> Self
    where
        F: Fn(&[f64]) -> Vec<f64>,
    {
        for chain in &mut self.chains {
            for d in &mut chain.draws {
                let extra = f(d);
                assert_eq!(extra.len(), names.len());
                d.extend(extra);
            }
        }
        self.names.extend(names);
        self
    }
}

fn initialize<T: LogDensity + ?Sized, R: Rng + ?Sized>(
    target: &T,
    radius: f64,
    rng: &mut R,
) -> Result<PhasePoint> {
    let dim = target.dim();
    for _ in 0..MAX_INIT_ATTEMPTS {
        let q: Vec<f64> = (0..dim).map(|_| rng.random_range(-radius..radius)).collect();
        let z = PhasePoint::new(target, q);
        if z.log_density.is_finite() && z.grad.iter().all(|g| g.is_finite()) {
            return Ok(z);
        }
    }
    Err(Error::Initialization(format!(
        "no finite log density after {MAX_INIT_ATTEMPTS} random initializations"
    )))
}

/// Outcome of warmup for one chain.
#[derive(Clone, Debug, PartialEq)]
pub struct Adapted {
    pub step_size: f64,
    pub metric: Metric,
    /// Position at the end of warmup.
    pub state: Vec<f64>,
    /// Mean acceptance statistic since the last metric update.
    pub final_window_accept: f64,
    pub divergences: usize,
}

const MIN_STEP_SIZE: f64 = 1e-10;

fn transition<T: LogDensity + ?Sized, R: Rng + ?Sized>(
    target: &T,
    config: &SamplerConfig,
    z: &PhasePoint,
    metric: &Metric,
    eps: f64,
    rng: &mut R,
) -> (PhasePoint, TransitionStats) {
    match config.algorithm {
        Algorithm::Nuts => nuts_transition(target, z, metric, eps, config.max_tree_depth, rng),
        Algorithm::Hmc => hmc_transition(target, z, metric, eps, config.hmc_steps, rng),
    }
}

fn warmup_chain<T: LogDensity + ?Sized, R: Rng + ?Sized>(
    target: &T,
    config: &SamplerConfig,
    rng: &mut R,
) -> Result<(Adapted, PhasePoint)> {
    let dim = target.dim();
    let mut z = initialize(target, config.init_radius, rng)?;
    let mut metric = Metric::unit(dim, config.metric);
    let mut eps = initial_step_size(target, &z, &metric, 1.0, rng);
    let mut averager = DualAveraging::new(config.target_accept);
    averager.restart(eps);
    let mut windows = WindowSchedule::with_kind(dim, config.warmup, config.metric);

    let mut divergences = 0;
    let (mut accept_sum, mut accept_n) = (0.0, 0usize);
    for _ in 0..config.warmup {
        let (next, stats) = transition(target, config, &z, &metric, eps, rng);
        z = next;
        divergences += stats.divergent as usize;
        accept_sum += stats.accept_stat;
        accept_n += 1;
        eps = averager.learn(stats.accept_stat);
        if eps < MIN_STEP_SIZE || !eps.is_finite() {
            return Err(Error::Adaptation(format!(
                "step size collapsed to {eps:e} during warmup"
            )));
        }
        if let Some(m) = windows.observe(&z.q) {
            metric = m;
            eps = initial_step_size(target, &z, &metric, eps, rng);
            averager.restart(eps);
            accept_sum = 0.0;
            accept_n = 0;
        }
    }
    if config.warmup > 0 {
        eps = averager.final_step_size();
    }
    if !(eps.is_finite() && eps >= MIN_STEP_SIZE) {
        return Err(Error::Adaptation(format!("step size adapted to {eps:e}")));
    }
    let adapted = Adapted {
        step_size: eps,
        metric,
        state: z.q.clone(),
        final_window_accept: if accept_n > 0 { accept_sum / accept_n as f64 } else { f64::NAN },
        divergences,
    };
    Ok((adapted, z))
}

/// Warmup only, for every chain: adapted step sizes, metrics and positions.
pub fn warmup_adapt<T: LogDensity + ?Sized>(
    target: &T,
    config: &SamplerConfig,
) -> Result<Vec<Adapted>> {
    config.validate()?;
    config
        .exec
        .map_range(config.chains, |c| {
            let mut rng = stream_rng(config.seed, c as u64);
            warmup_chain(target, config, &mut rng).map(|(a, _)| a)
        })
        .into_iter()
        .collect()
}

/// Runs one chain: warmup with adaptation, then `config.draws` transitions.
pub fn run_chain<T: LogDensity + ?Sized>(
    target: &T,
    config: &SamplerConfig,
    chain_id: usize,
) -> Result<Chain> {
    config.validate()?;
    let mut rng = stream_rng(config.seed, chain_id as u64);
    let (adapted, mut z) = warmup_chain(target, config, &mut rng)?;
    let eps = adapted.step_size;
    log::debug!(
        "chain {chain_id}: step size {eps:.4}, {} warmup divergences",
        adapted.divergences
    );

    let mut draws = Vec::with_capacity(config.draws);
    let mut stats_out = Vec::with_capacity(config.draws);
    for _ in 0..config.draws {
        let (next, stats) = transition(target, config, &z, &adapted.metric, eps, &mut rng);
        z = next;
        draws.push(z.q.clone());
        stats_out.push(stats);
    }
    Ok(Chain {
        draws,
        stats: stats_out,
        step_size: eps,
        inv_metric: adapted.metric.inverse_diagonal(),
        warmup_divergences: adapted.divergences,
    })
}

/// Runs `config.chains` independent chains, each with its own random
/// stream. Output is identical whether chains run in parallel or not.
pub fn run_chains<T: LogDensity + ?Sized>(target: &T, config: &SamplerConfig) -> Result<DrawsTable> {
    config.validate()?;
    let chains = config
        .exec
        .map_range(config.chains, |c| run_chain(target, config, c))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let table = DrawsTable {
        names: target.param_names(),
        chains,
    };
    let div = table.divergences();
    if div > 0 {
        log::warn!("{div} divergent transitions after warmup");
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Gauss(usize);

    impl LogDensity for Gauss {
        fn dim(&self) -> usize {
            self.0
        }
        fn log_density_grad(&self, x: &[f64], grad: &mut [f64]) -> f64 {
            for (g, xi) in grad.iter_mut().zip(x) {
                *g = -xi;
            }
            -0.5 * x.iter().map(|v| v * v).sum::<f64>()
        }
    }

    struct Nowhere;

    impl LogDensity for Nowhere {
        fn dim(&self) -> usize {
            2
        }
        fn log_density_grad(&self, _: &[f64], _: &mut [f64]) -> f64 {
            f64::NEG_INFINITY
        }
    }

    fn small() -> SamplerConfig {
        SamplerConfig {
            chains: 2,
            warmup: 300,
            draws: 400,
            ..Default::default()
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let a = run_chains(&Gauss(3), &small()).unwrap();
        let b = run_chains(&Gauss(3), &small()).unwrap();
        assert_eq!(a, b);
        let c = run_chains(
            &Gauss(3),
            &SamplerConfig {
                exec: Exec::Sequential,
                ..small()
            },
        )
        .unwrap();
        assert_eq!(a, c);
    }

    #[test]
    fn dense_metric_learns_correlation() {
        struct Corr;
        impl LogDensity for Corr {
            fn dim(&self) -> usize {
                2
            }
            // unit variances, correlation 0.9
            fn log_density_grad(&self, x: &[f64], g: &mut [f64]) -> f64 {
                let k = 1.0 / (1.0 - 0.81);
                g[0] = -k * (x[0] - 0.9 * x[1]);
                g[1] = -k * (x[1] - 0.9 * x[0]);
                -0.5 * k * (x[0] * x[0] - 1.8 * x[0] * x[1] + x[1] * x[1])
            }
        }
        let cfg = SamplerConfig {
            chains: 1,
            warmup: 1000,
            draws: 10,
            metric: MetricKind::Dense,
            ..Default::default()
        };
        let a = &warmup_adapt(&Corr, &cfg).unwrap()[0];
        let Metric::Dense { inv, .. } = &a.metric else {
            panic!("expected a dense metric");
        };
        let r = inv[(0, 1)] / (inv[(0, 0)] * inv[(1, 1)]).sqrt();
        assert!((r - 0.9).abs() < 0.05, "{r}");
    }

    #[test]
    fn chains_differ() {
        let t = run_chains(&Gauss(2), &small()).unwrap();
        assert_ne!(t.chains[0].draws, t.chains[1].draws);
    }

    #[test]
    fn initialization_failure_is_reported() {
        let err = run_chains(&Nowhere, &small()).unwrap_err();
        assert!(matches!(err, Error::Initialization(_)));
    }

    #[test]
    fn hmc_fallback_samples() {
        let cfg = SamplerConfig {
            algorithm: Algorithm::Hmc,
            hmc_steps: 10,
            chains: 1,
            warmup: 500,
            draws: 2000,
            ..Default::default()
        };
        let t = run_chains(&Gauss(2), &cfg).unwrap();
        let xs = t.pooled(0);
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / xs.len() as f64;
        assert!(mean.abs() < 0.2, "{mean}");
        assert!((var - 1.0).abs() < 0.25, "{var}");
    }

    #[test]
    fn derived_columns_append() {
        let t = run_chains(&Gauss(2), &small())
            .unwrap()
            .with_derived(vec!["sum".into()], |d| vec![d[0] + d[1]]);
        let s = t.index("sum").unwrap();
        let d = &t.chains[0].draws[7];
        assert_eq!(d[s], d[0] + d[1]);
    }
}
