//! Command pipeline behind the CLI: each command reads its inputs, writes
//! artifacts atomically into the output directory and records them in a
//! manifest with content digests.

use std::path::PathBuf;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::analysis::{
    condition_posterior_means, correlation_report, scenario_drifts,
    simulate_condition_trajectories, CorrelationConfig, ScenarioLabeling,
};
use crate::config::RunConfig;
use crate::data::{Condition, TrialSet};
use crate::diagnostics::{
    forest_csv, max_rhat, posterior_predictive_check, psis_loo, summarize, summary_csv,
    summary_json, SummaryRow,
};
use crate::error::{Error, Result};
use crate::io::{
    draws_csv, ensure_writable, load_draws, load_trials, trials_csv, write_atomic, Manifest,
    MANIFEST_FILE,
};
use crate::model::HierarchicalModel;
use crate::sampler::{run_chains, DrawsTable, LogDensity};
use crate::synth::{simulate_cohort, SyntheticTruth};
use crate::wiener::EulerSettings;

/// R-hat at or above this marks a run as not converged.
pub const RHAT_LIMIT: f64 = 1.01;
pub const RECOVERY_V_TOLERANCE: f64 = 0.15;
pub const RECOVERY_A_RELATIVE_TOLERANCE: f64 = 0.10;
pub const RECOVERY_Z_TOLERANCE: f64 = 0.03;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Simulate,
    Fit,
    Diagnose,
    Ppc,
    Correlate,
    Trajectories,
    Recover,
}

impl Command {
    pub fn as_str(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Fit => "fit",
            Command::Diagnose => "diagnose",
            Command::Ppc => "ppc",
            Command::Correlate => "correlate",
            Command::Trajectories => "trajectories",
            Command::Recover => "recover",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Ok,
    /// Artifacts were written but convergence or recovery checks failed.
    Warning,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub status: Status,
    pub files: Vec<PathBuf>,
    pub messages: Vec<String>,
}

struct Run<'a> {
    config: &'a RunConfig,
    dir: PathBuf,
    manifest: Manifest,
    files: Vec<PathBuf>,
    messages: Vec<String>,
    warning: bool,
    started: Instant,
}

impl<'a> Run<'a> {
    fn start(command: Command, config: &'a RunConfig) -> Result<Self> {
        config.validate()?;
        let dir = config.paths.out.clone();
        ensure_writable(&dir)?;
        let echo = serde_json::to_value(config)?;
        Ok(Run {
            manifest: Manifest::new(command.as_str(), config.master_seed()?, echo),
            config,
            dir,
            files: Vec::new(),
            messages: Vec::new(),
            warning: false,
            started: Instant::now(),
        })
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        write_atomic(&path, bytes)?;
        self.manifest.record(name, bytes);
        self.files.push(path);
        Ok(())
    }

    fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.write(name, &bytes)
    }

    fn note(&mut self, msg: String) {
        log::info!("{msg}");
        self.messages.push(msg);
    }

    fn warn(&mut self, msg: String) {
        log::warn!("{msg}");
        self.messages.push(msg);
        self.warning = true;
    }

    fn stream(&mut self, s: &str) {
        self.manifest.streams.push(s.to_string());
    }

    fn finish(mut self) -> Result<Outcome> {
        self.manifest.wall_time_seconds = self.started.elapsed().as_secs_f64();
        let bytes = self.manifest.to_json()?;
        let path = self.dir.join(MANIFEST_FILE);
        write_atomic(&path, &bytes)?;
        self.files.push(path);
        Ok(Outcome {
            status: if self.warning { Status::Warning } else { Status::Ok },
            files: self.files,
            messages: self.messages,
        })
    }

    fn trials(&mut self) -> Result<TrialSet> {
        let path = self.config.paths.trials.as_deref().ok_or_else(|| {
            Error::Config("missing trial data (set paths.trials or pass --trials)".into())
        })?;
        let loaded = load_trials(path)?;
        if !loaded.report.rejected.is_empty() {
            self.note(format!(
                "{}: {} of {} rows rejected",
                path.display(),
                loaded.report.rejected.len(),
                loaded.report.total_rows
            ));
        }
        Ok(loaded.trials)
    }

    fn draws(&self) -> Result<DrawsTable> {
        let path = self.config.paths.draws.as_deref().ok_or_else(|| {
            Error::Config("missing posterior draws (set paths.draws or pass --draws)".into())
        })?;
        if !path.exists() {
            return Err(Error::Config(format!("missing posterior draws: {} not found", path.display())));
        }
        load_draws(path)
    }

    fn model(&self, trials: &TrialSet) -> Result<HierarchicalModel> {
        Ok(HierarchicalModel::from_trial_set(trials, self.config.priors.clone())?
            .with_exec(self.config.exec))
    }

    fn check_rhat(&mut self, rows: &[SummaryRow]) {
        let worst = max_rhat(rows);
        if !(worst < RHAT_LIMIT) {
            self.warn(format!("convergence warning: max R-hat {worst:.4} >= {RHAT_LIMIT}"));
        }
    }

    /// Samples the model and appends natural-scale columns.
    fn fit(&mut self, trials: &TrialSet) -> Result<(HierarchicalModel, DrawsTable)> {
        let model = self.model(trials)?;
        let sampler = self.config.sampler_config()?;
        self.stream(&format!("sampler: chains 0..{}", sampler.chains));
        let draws = run_chains(&model, &sampler)?;
        let dim = model.dim();
        let draws = draws.with_derived(model.derived_names(), |d| model.derived(&d[..dim]));
        let divergences = draws.divergences();
        self.manifest.divergences = Some(divergences);
        if divergences > 0 {
            self.note(format!("{divergences} divergent transitions after warmup"));
        }
        Ok((model, draws))
    }
}

pub fn run_pipeline(command: Command, config: &RunConfig) -> Result<Outcome> {
    let mut run = Run::start(command, config)?;
    match command {
        Command::Simulate => simulate(&mut run).map(drop)?,
        Command::Fit => fit(&mut run)?,
        Command::Diagnose => diagnose(&mut run)?,
        Command::Ppc => ppc(&mut run)?,
        Command::Correlate => correlate(&mut run)?,
        Command::Trajectories => trajectories(&mut run)?,
        Command::Recover => recover(&mut run)?,
    }
    run.finish()
}

fn simulate(run: &mut Run) -> Result<SyntheticTruth> {
    let cfg = run.config;
    let labels = cfg.labels()?;
    let data = simulate_cohort(&cfg.simulate, &labels, cfg.seed_for("simulate")?, cfg.exec)?;
    run.stream(&format!("simulate: effects 0, subjects 1..={}", cfg.simulate.n_subjects));
    run.write("trials.csv", &trials_csv(&data.records)?)?;
    run.write_json("truth.json", &data.truth)?;
    Ok(data.truth)
}

fn fit(run: &mut Run) -> Result<()> {
    let trials = run.trials()?;
    let (_, draws) = run.fit(&trials)?;
    let rows = summarize(&draws, run.config.analysis.hdi_mass, run.config.exec)?;
    run.check_rhat(&rows);
    run.write("draws.csv", &draws_csv(&draws)?)?;
    run.write("summary.json", &summary_json(&rows)?)?;
    Ok(())
}

fn diagnose(run: &mut Run) -> Result<()> {
    let draws = run.draws()?;
    let rows = summarize(&draws, run.config.analysis.hdi_mass, run.config.exec)?;
    run.check_rhat(&rows);
    run.write("summary.csv", &summary_csv(&rows)?)?;
    run.write("summary.json", &summary_json(&rows)?)?;
    run.write("forest.csv", &forest_csv(&rows)?)?;
    if run.config.paths.trials.is_some() {
        let trials = run.trials()?;
        let model = run.model(&trials)?;
        let names = model.param_names();
        if draws.n_params() < names.len() || draws.names[..names.len()] != names[..] {
            return Err(Error::Config("draws do not match the model for these trials".into()));
        }
        let dim = model.dim();
        let log_lik = draws
            .iter_draws()
            .map(|d| model.pointwise_log_likelihood(&d[..dim]))
            .collect::<Result<Vec<_>>>()?;
        let loo = psis_loo(&log_lik, run.config.exec)?;
        if !loo.flagged.is_empty() {
            run.note(format!("{} observations with Pareto k > 0.7", loo.flagged.len()));
        }
        run.write_json("loo.json", &loo)?;
    }
    Ok(())
}

fn ppc(run: &mut Run) -> Result<()> {
    let draws = run.draws()?;
    let trials = run.trials()?;
    let model = run.model(&trials)?;
    let n_rep = run.config.analysis.ppc_replicates;
    let seed = run.config.seed_for("ppc")?;
    run.stream(&format!("ppc: replicates 0..{n_rep}"));
    let report = posterior_predictive_check(&draws, &model, n_rep, seed, run.config.exec)?;
    run.write_json("ppc.json", &report)?;
    Ok(())
}

fn correlate(run: &mut Run) -> Result<()> {
    let draws = run.draws()?;
    let trials = run.trials()?;
    let a = &run.config.analysis;
    let cfg = CorrelationConfig {
        min_trials: a.min_trials,
        resamples: a.resamples,
        within_subject_resamples: a.within_subject_resamples,
        seed: run.config.seed_for("correlate")?,
    };
    let drifts = scenario_drifts(&draws)?;
    let report = correlation_report(&trials.records, &drifts, &cfg, run.config.exec)?;
    run.stream(&format!(
        "correlate: subject resamples 0..{}, per-subject {}..",
        cfg.resamples, cfg.resamples
    ));
    for e in &report.excluded {
        run.note(format!("excluded {}: {}", e.subject_id, e.reason.as_str()));
    }
    run.write_json("correlation.json", &report)?;
    Ok(())
}

fn trajectories(run: &mut Run) -> Result<()> {
    let draws = run.draws()?;
    let labels = run.config.labels()?;
    let means = condition_posterior_means(&draws, &labels)?;
    run.write_json("condition_means.json", &means)?;
    let t = run.config.analysis.trajectories.clone();
    let conditions: Vec<Condition> = match t.condition {
        Some(c) => vec![c],
        None => means.keys().copied().collect(),
    };
    let settings = EulerSettings {
        dt: t.dt,
        max_t: t.max_t,
    };
    for c in conditions {
        let seed = run.config.seed_for(&format!("trajectories/{c}"))?;
        let bundle = simulate_condition_trajectories(
            &draws, &labels, c, t.n, t.mode, &settings, seed, run.config.exec,
        )?;
        let mode = serde_json::to_value(t.mode)?;
        let mode = mode.as_str().unwrap_or("mode");
        run.stream(&format!("trajectories/{c}: paths 0..{}", t.n));
        run.write(&format!("trajectories_{c}_{mode}.csv"), &bundle.to_csv()?)?;
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecoveryCheck {
    pub quantity: String,
    pub truth: f64,
    pub estimate: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecoveryReport {
    pub checks: Vec<RecoveryCheck>,
    pub max_rhat: f64,
    pub divergences: usize,
    pub verdict: String,
}

/// Compares posterior condition means and start point with the generating
/// values.
pub fn recovery_report(
    draws: &DrawsTable,
    truth: &SyntheticTruth,
    labels: &ScenarioLabeling,
    rows: &[SummaryRow],
) -> Result<RecoveryReport> {
    let means = condition_posterior_means(draws, labels)?;
    let mut checks = Vec::new();
    let mut check = |quantity: String, truth: f64, estimate: f64, tolerance: f64| {
        checks.push(RecoveryCheck {
            pass: (estimate - truth).abs() <= tolerance,
            quantity,
            truth,
            estimate,
            tolerance,
        });
    };
    for (c, m) in &means {
        let tv = *truth.condition_v.get(c).ok_or_else(|| Error::Analysis(format!("no truth for {c}")))?;
        let ta = truth.condition_a[c];
        check(format!("v_{c}"), tv, m.v, RECOVERY_V_TOLERANCE);
        check(format!("a_{c}"), ta, m.a, RECOVERY_A_RELATIVE_TOLERANCE * ta);
    }
    let z = crate::analysis::pooled_column(draws, "z_intercept")?;
    check(
        "z".into(),
        truth.z,
        z.iter().sum::<f64>() / z.len() as f64,
        RECOVERY_Z_TOLERANCE,
    );
    let worst = max_rhat(rows);
    let pass = checks.iter().all(|c| c.pass) && worst < RHAT_LIMIT;
    Ok(RecoveryReport {
        checks,
        max_rhat: worst,
        divergences: draws.divergences(),
        verdict: if pass { "PASS" } else { "FAIL" }.into(),
    })
}

fn recover(run: &mut Run) -> Result<()> {
    let truth = simulate(run)?;
    let trials_path = run.dir.join("trials.csv");
    let trials = load_trials(&trials_path)?.trials;
    let (_, draws) = run.fit(&trials)?;
    let rows = summarize(&draws, run.config.analysis.hdi_mass, run.config.exec)?;
    run.write("draws.csv", &draws_csv(&draws)?)?;
    run.write("summary.json", &summary_json(&rows)?)?;
    let labels = run.config.labels()?;
    let report = recovery_report(&draws, &truth, &labels, &rows)?;
    for c in report.checks.iter().filter(|c| !c.pass) {
        run.warn(format!(
            "recovery: {} estimate {:.4} vs truth {:.4} (tolerance {:.4})",
            c.quantity, c.estimate, c.truth, c.tolerance
        ));
    }
    if !(report.max_rhat < RHAT_LIMIT) {
        run.warn(format!("recovery: max R-hat {:.4}", report.max_rhat));
    }
    run.note(format!("recovery verdict: {}", report.verdict));
    run.write_json("recovery.json", &report)?;
    Ok(())
}
