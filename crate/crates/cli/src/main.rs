//! `ddm`: simulate, fit and analyse hierarchical drift-diffusion models of
//! AI-versus-human delegation choices.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ddm_core::config::RunConfig;
use ddm_core::pipeline::{run_pipeline, Command, Status};

const CONFIG_HELP: &str = "\
Configuration file (TOML). Every key is optional except the seed, which may
come from --seed instead. Defaults:

  seed = <required>
  exec = \"parallel\"                  # or \"sequential\"
  [sampler]   chains = 4, warmup_draws = 1000, post_warmup_draws = 5000,
              target_acceptance = 0.8, max_tree_depth = 10,
              algorithm = \"nuts\" (or \"hmc\"), hmc_steps = 32, init_radius = 2.0,
              metric = \"diag\" (or \"dense\")
  [priors]    v_mean = 0, v_sd = 1, a_loc = 1, a_scale = 2, t_scale = 1,
              z_alpha = 2, z_beta = 2, group_sd_scale = 0.5
  [analysis]  hdi_mass = 0.95, resamples = 2000, within_subject_resamples = 1000,
              min_trials = 30, ppc_replicates = 200
  [analysis.trajectories]  n = 1000, dt = 0.01, max_t = 60,
              mode = \"stochastic\" (or \"deterministic\"), condition = both
  [paths]     trials, draws, scenarios (bundled file), out = \"out\"
  [simulate]  n_subjects = 30, drift_epistemic = -1.26, drift_social = 0.70,
              boundary_epistemic = 2.94, boundary_social = 3.37,
              start_point = 0.52, non_decision_time = 2.4,
              sd_v_scenario = 0.3, sd_v_subject = 0.3, sd_a_scenario = 0.15,
              sd_a_subject = 0.15, slider_gain = 0.8, slider_noise = 0.3,
              pinned_drift = [] (entries {scenario = 24, drift = -2.471})

Exit status: 0 success, 1 convergence or recovery warning (artifacts written),
2 usage, input or runtime error.";

#[derive(Parser, Debug)]
#[command(name = "ddm", version, about, after_help = CONFIG_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,

    /// TOML run configuration.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Master seed; overrides the configuration file.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,

    /// Output directory [default: out].
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Trials CSV (subject_id,scenario_id,condition,choice,rt_ms,slider).
    #[arg(long, global = true, value_name = "PATH")]
    trials: Option<PathBuf>,

    /// Posterior draws CSV written by `fit`.
    #[arg(long, global = true, value_name = "PATH")]
    draws: Option<PathBuf>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Cmd {
    /// Generate a synthetic cohort (trials.csv, truth.json).
    Simulate,
    /// Sample the hierarchical posterior (draws.csv, summary.json).
    Fit,
    /// Convergence summary, HDIs and, given trials, PSIS-LOO.
    Diagnose,
    /// Posterior predictive check against the observed trials.
    Ppc,
    /// Per-subject drift versus signed-confidence correlations.
    Correlate,
    /// Condition means and accumulator trajectory bundles.
    Trajectories,
    /// Simulate, fit and compare with the generating values.
    Recover,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Simulate => Command::Simulate,
            Cmd::Fit => Command::Fit,
            Cmd::Diagnose => Command::Diagnose,
            Cmd::Ppc => Command::Ppc,
            Cmd::Correlate => Command::Correlate,
            Cmd::Trajectories => Command::Trajectories,
            Cmd::Recover => Command::Recover,
        }
    }
}

fn build_config(cli: &Cli) -> ddm_core::Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if cli.seed.is_some() {
        cfg.seed = cli.seed;
    }
    if let Some(p) = &cli.out {
        cfg.paths.out = p.clone();
    }
    if cli.trials.is_some() {
        cfg.paths.trials = cli.trials.clone();
    }
    if cli.draws.is_some() {
        cfg.paths.draws = cli.draws.clone();
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = build_config(&cli).and_then(|cfg| run_pipeline(cli.command.into(), &cfg));
    match result {
        Ok(outcome) => {
            for f in &outcome.files {
                println!("{}", f.display());
            }
            match outcome.status {
                Status::Ok => ExitCode::SUCCESS,
                Status::Warning => ExitCode::from(1),
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
