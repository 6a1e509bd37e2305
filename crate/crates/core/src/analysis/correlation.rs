//! Within-subject association between scenario drift and signed slider
//! confidence, aggregated across subjects with Fisher's z.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::TrialRecord;
use crate::error::{Error, Result};
use crate::exec::{stream_rng, Exec};

pub const DEFAULT_MIN_TRIALS: usize = 30;
pub const DEFAULT_RESAMPLES: usize = 2000;
pub const MIN_RESAMPLES: usize = 100;
const R_CLAMP: f64 = 1.0 - 1e-12;

/// Slider position rescaled to `[-1, 1]`: negative leans AI, positive leans
/// Human.
pub fn signed_confidence(slider: u32) -> Result<f64> {
    if slider > 100 {
        return Err(Error::Data(format!("slider out of range: {slider}")));
    }
    Ok((slider as f64 - 50.0) / 50.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExclusionReason {
    InsufficientTrials,
    ZeroVariance,
}

impl ExclusionReason {
    pub fn as_str(self) -> &'static str {
        match self {
            ExclusionReason::InsufficientTrials => "insufficient trials",
            ExclusionReason::ZeroVariance => "zero variance",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Exclusion {
    pub subject_id: String,
    pub reason: ExclusionReason,
    pub n_trials: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubjectCorrelation {
    pub subject_id: String,
    pub r: f64,
    pub n_trials: usize,
    /// Percentile interval from resampling this subject's trials, when
    /// requested.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ci: Option<(f64, f64)>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CorrelationSet {
    pub included: Vec<SubjectCorrelation>,
    pub excluded: Vec<Exclusion>,
}

fn is_constant(v: &[f64]) -> bool {
    v.iter().all(|&a| a == v[0])
}

/// Pearson correlation; `None` when either variable is constant.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.is_empty() || is_constant(x) || is_constant(y) {
        return None;
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Distinct (scenario) trials per subject, first occurrence kept, as
/// `(drift, signed confidence)` pairs.
fn subject_pairs(
    trials: &[TrialRecord],
    drifts: &BTreeMap<u32, f64>,
) -> Result<BTreeMap<String, Vec<(f64, f64)>>> {
    let mut seen = BTreeSet::new();
    let mut out: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    for t in trials {
        if !seen.insert((t.subject_id.as_str(), t.scenario_id)) {
            continue;
        }
        let v = *drifts.get(&t.scenario_id).ok_or_else(|| {
            Error::Analysis(format!("no drift estimate for scenario {}", t.scenario_id))
        })?;
        let c = signed_confidence(t.slider as u32)?;
        out.entry(t.subject_id.clone()).or_default().push((v, c));
    }
    Ok(out)
}

/// Per-subject Pearson r between scenario drift and signed confidence,
/// with exclusions for too few distinct trials or zero variance.
pub fn subject_correlation_set(
    trials: &[TrialRecord],
    drifts: &BTreeMap<u32, f64>,
    min_trials: usize,
) -> Result<CorrelationSet> {
    let mut set = CorrelationSet::default();
    for (subject_id, pairs) in subject_pairs(trials, drifts)? {
        let n_trials = pairs.len();
        if n_trials < min_trials {
            set.excluded.push(Exclusion {
                subject_id,
                reason: ExclusionReason::InsufficientTrials,
                n_trials,
            });
            continue;
        }
        let (x, y): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        match pearson(&x, &y) {
            Some(r) => set.included.push(SubjectCorrelation {
                subject_id,
                r,
                n_trials,
                ci: None,
            }),
            None => set.excluded.push(Exclusion {
                subject_id,
                reason: ExclusionReason::ZeroVariance,
                n_trials,
            }),
        }
    }
    if set.included.is_empty() {
        return Err(Error::Analysis("no subjects survive exclusion".into()));
    }
    Ok(set)
}

/// `tanh(mean(atanh(r)))`, with `|r| = 1` pulled just inside the interval.
pub fn fisher_mean_correlation(rs: &[f64]) -> Result<f64> {
    if rs.is_empty() {
        return Err(Error::Analysis("no correlations to average".into()));
    }
    let mut clamped = false;
    let mut sum = 0.0;
    for &r in rs {
        if !(-1.0..=1.0).contains(&r) {
            return Err(Error::Analysis(format!("correlation {r} outside [-1, 1]")));
        }
        let c = r.clamp(-R_CLAMP, R_CLAMP);
        clamped |= c != r;
        sum += c.atanh();
    }
    if clamped {
        log::warn!("correlations of magnitude 1 clamped to 1 - 1e-12 before Fisher z");
    }
    let mean = (sum / rs.len() as f64).tanh();
    // undo the clamp when every input sat on the boundary
    Ok(if mean.abs() >= R_CLAMP { mean.signum() } else { mean })
}

/// Linear-interpolation percentile of unsorted data, `p` in `[0, 1]`.
pub fn percentile(values: &[f64], p: f64) -> f64 {
    let mut s = values.to_vec();
    s.sort_by(f64::total_cmp);
    let h = (s.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(s.len() - 1);
    s[lo] + (h - lo as f64) * (s[hi] - s[lo])
}

/// Percentile bootstrap of the Fisher-mean correlation, resampling
/// subjects with replacement. Resample `b` uses random stream `b`.
pub fn bootstrap_subject_ci(rs: &[f64], resamples: usize, seed: u64, exec: Exec) -> Result<(f64, f64)> {
    if resamples < MIN_RESAMPLES {
        return Err(Error::Analysis(format!(
            "bootstrap needs at least {MIN_RESAMPLES} resamples, got {resamples}"
        )));
    }
    if rs.len() < 2 {
        return Err(Error::Analysis("bootstrap needs at least 2 subjects".into()));
    }
    let n = rs.len();
    let stats = exec
        .map_range(resamples, |b| {
            let mut rng = stream_rng(seed, b as u64);
            let sample: Vec<f64> = (0..n).map(|_| rs[rng.random_range(0..n)]).collect();
            fisher_mean_correlation(&sample)
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    Ok((percentile(&stats, 0.025), percentile(&stats, 0.975)))
}

/// Percentile interval for one subject's r, resampling their trials.
/// Degenerate resamples (zero variance) are skipped.
pub fn bootstrap_within_subject_ci(
    pairs: &[(f64, f64)],
    resamples: usize,
    seed: u64,
    stream: u64,
) -> Option<(f64, f64)> {
    let n = pairs.len();
    let mut rng = stream_rng(seed, stream);
    let mut rs = Vec::with_capacity(resamples);
    let (mut x, mut y) = (vec![0.0; n], vec![0.0; n]);
    for _ in 0..resamples {
        for i in 0..n {
            let (a, b) = pairs[rng.random_range(0..n)];
            x[i] = a;
            y[i] = b;
        }
        if let Some(r) = pearson(&x, &y) {
            rs.push(r);
        }
    }
    (!rs.is_empty()).then(|| (percentile(&rs, 0.025), percentile(&rs, 0.975)))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationConfig {
    pub min_trials: usize,
    /// Subject-level resamples for the group interval.
    pub resamples: usize,
    /// Trial-level resamples per subject; 0 disables per-subject intervals.
    pub within_subject_resamples: usize,
    pub seed: u64,
}

impl Default for CorrelationConfig {
    fn default() -> Self {
        CorrelationConfig {
            min_trials: DEFAULT_MIN_TRIALS,
            resamples: DEFAULT_RESAMPLES,
            within_subject_resamples: 0,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub subjects: Vec<SubjectCorrelation>,
    pub included: usize,
    pub excluded: Vec<Exclusion>,
    pub total_subjects: usize,
    pub fisher_mean_r: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub median_r: f64,
    pub fraction_positive: f64,
    pub resamples: usize,
}

/// Full pipeline: per-subject correlations, exclusions, Fisher mean,
/// subject-level bootstrap interval and descriptive summaries.
pub fn correlation_report(
    trials: &[TrialRecord],
    drifts: &BTreeMap<u32, f64>,
    config: &CorrelationConfig,
    exec: Exec,
) -> Result<CorrelationReport> {
    let mut set = subject_correlation_set(trials, drifts, config.min_trials)?;
    if config.within_subject_resamples > 0 {
        let pairs = subject_pairs(trials, drifts)?;
        let cis = exec.map_range(set.included.len(), |i| {
            let s = &set.included[i];
            // streams past those used by the subject-level resamples
            let stream = (config.resamples + i) as u64;
            bootstrap_within_subject_ci(
                &pairs[&s.subject_id],
                config.within_subject_resamples,
                config.seed,
                stream,
            )
        });
        for (s, ci) in set.included.iter_mut().zip(cis) {
            s.ci = ci;
        }
    }
    let rs: Vec<f64> = set.included.iter().map(|s| s.r).collect();
    let fisher_mean_r = fisher_mean_correlation(&rs)?;
    let (ci_low, ci_high) = if rs.len() >= 2 {
        bootstrap_subject_ci(&rs, config.resamples, config.seed, exec)?
    } else {
        (f64::NAN, f64::NAN)
    };
    let positive = rs.iter().filter(|&&r| r > 0.0).count();
    Ok(CorrelationReport {
        included: rs.len(),
        total_subjects: rs.len() + set.excluded.len(),
        excluded: set.excluded,
        fisher_mean_r,
        ci_low,
        ci_high,
        median_r: percentile(&rs, 0.5),
        fraction_positive: positive as f64 / rs.len() as f64,
        resamples: config.resamples,
        subjects: set.included,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn confidence_endpoints() {
        assert_eq!(signed_confidence(50).unwrap(), 0.0);
        assert_eq!(signed_confidence(0).unwrap(), -1.0);
        assert_eq!(signed_confidence(100).unwrap(), 1.0);
        assert!(matches!(signed_confidence(101), Err(Error::Data(_))));
    }

    #[test]
    fn constant_input_has_no_correlation() {
        let x: Vec<f64> = (0..30).map(|i| i as f64).collect();
        assert_eq!(pearson(&x, &[0.4; 30]), None);
        assert_eq!(pearson(&[], &[]), None);
    }

    #[test]
    fn fisher_mean_simple_cases() {
        assert!((fisher_mean_correlation(&[0.5, 0.5]).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(fisher_mean_correlation(&[0.0]).unwrap(), 0.0);
        let r: f64 = 0.736;
        assert!((r.atanh() - 0.942).abs() < 5e-4);
        assert!((fisher_mean_correlation(&[r]).unwrap() - r).abs() < 1e-15);
        assert_eq!(fisher_mean_correlation(&[1.0, 1.0]).unwrap(), 1.0);
        assert!(fisher_mean_correlation(&[]).is_err());
    }

    #[test]
    fn bootstrap_refuses_few_resamples() {
        assert!(bootstrap_subject_ci(&[0.1, 0.2], 99, 1, Exec::Sequential).is_err());
        assert!(bootstrap_subject_ci(&[0.1], 1000, 1, Exec::Sequential).is_err());
    }

    #[test]
    fn bootstrap_of_constants_is_degenerate() {
        let (lo, hi) = bootstrap_subject_ci(&[0.7; 20], 500, 3, Exec::Sequential).unwrap();
        assert!((lo - 0.7).abs() < 1e-12 && (hi - 0.7).abs() < 1e-12);
    }
}
