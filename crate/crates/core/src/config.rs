//! Run configuration read from TOML, with a required master seed from which
//! every random stream of a run is derived.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::{ScenarioLabeling, TrajectoryMode};
use crate::data::Condition;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::model::PriorConfig;
use crate::sampler::SamplerConfig;
use crate::synth::SimulationConfig;

/// Scenario file shipped with the crate.
pub const DEFAULT_SCENARIOS: &str = include_str!("../../../data/scenarios.json");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    pub hdi_mass: f64,
    /// Subject-level bootstrap resamples.
    pub resamples: usize,
    /// Trial-level resamples per subject; 0 skips per-subject intervals.
    pub within_subject_resamples: usize,
    pub min_trials: usize,
    pub ppc_replicates: usize,
    pub trajectories: TrajectoryConfig,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            hdi_mass: 0.95,
            resamples: 2000,
            within_subject_resamples: 1000,
            min_trials: 30,
            ppc_replicates: 200,
            trajectories: TrajectoryConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrajectoryConfig {
    pub n: usize,
    pub dt: f64,
    pub max_t: f64,
    pub mode: TrajectoryMode,
    /// Both conditions when absent.
    pub condition: Option<Condition>,
}

impl Default for TrajectoryConfig {
    fn default() -> Self {
        TrajectoryConfig {
            n: 1000,
            dt: 0.01,
            max_t: 60.0,
            mode: TrajectoryMode::Stochastic,
            condition: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathConfig {
    pub trials: Option<PathBuf>,
    pub draws: Option<PathBuf>,
    /// Scenario file; the bundled one when absent.
    pub scenarios: Option<PathBuf>,
    pub out: PathBuf,
}

impl Default for PathConfig {
    fn default() -> Self {
        PathConfig {
            trials: None,
            draws: None,
            scenarios: None,
            out: PathBuf::from("out"),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub exec: Exec,
    pub priors: PriorConfig,
    pub sampler: SamplerConfig,
    pub analysis: AnalysisConfig,
    pub paths: PathConfig,
    pub simulate: SimulationConfig,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn master_seed(&self) -> Result<u64> {
        self.seed
            .ok_or_else(|| Error::Config("a seed is required (set `seed` or pass --seed)".into()))
    }

    pub fn validate(&self) -> Result<()> {
        self.master_seed()?;
        self.priors.validate()?;
        self.sampler_config()?.validate()?;
        let a = &self.analysis;
        if !(a.hdi_mass > 0.0 && a.hdi_mass < 1.0) {
            return Err(Error::Config(format!("hdi_mass must lie in (0, 1), got {}", a.hdi_mass)));
        }
        let t = &a.trajectories;
        if !(t.dt > 0.0 && t.max_t > t.dt) {
            return Err(Error::Config("trajectory dt and max_t must be positive with max_t > dt".into()));
        }
        self.simulate.validate()
    }

    /// Sampler settings with seed and execution mode taken from the run.
    pub fn sampler_config(&self) -> Result<SamplerConfig> {
        Ok(SamplerConfig {
            seed: derive_seed(self.master_seed()?, "sampler"),
            exec: self.exec,
            ..self.sampler.clone()
        })
    }

    pub fn seed_for(&self, purpose: &str) -> Result<u64> {
        Ok(derive_seed(self.master_seed()?, purpose))
    }

    pub fn labels(&self) -> Result<ScenarioLabeling> {
        match &self.paths.scenarios {
            Some(p) => ScenarioLabeling::load(p),
            None => ScenarioLabeling::from_json(DEFAULT_SCENARIOS),
        }
    }
}

/// Independent seed for one named purpose of a run (SplitMix64 finalizer
/// over the master seed and an FNV-1a hash of the purpose).
pub fn derive_seed(master: u64, purpose: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in purpose.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    let mut z = master ^ h;
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
