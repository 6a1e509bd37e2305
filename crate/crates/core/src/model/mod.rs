//! Hierarchical regression structure mapping an unconstrained parameter
//! vector to trial-level diffusion parameters.
//!
//! For a trial of subject `j` on scenario `k`:
//!
//! ```text
//! v  = beta0_v + u_v[j] + w_v[k]
//! a  = softplus(beta0_a + u_a[j] + w_a[k])
//! z  = logistic(beta0_z)
//! t0 = softplus(beta0_t)
//! ```
//!
//! with non-centered random effects `u = sigma_subject * u_raw`,
//! `w = sigma_situation * w_raw` and standard-normal raw offsets. Trial-level
//! parameters are deterministic functions of the linear predictors; the
//! condition label never enters the likelihood.

mod params;
mod priors;

pub use params::{GroupSd, ParameterLayout, ParameterVector};
pub use priors::PriorConfig;

use crate::data::{TrialIndex, TrialRecord, TrialSet};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::math::{logistic, softplus};
use crate::sampler::LogDensity;
use crate::wiener::{fpt_log_density_grad, Boundary, DdmParams};

/// Trials per parallel work item in the likelihood.
const LIKELIHOOD_CHUNK: usize = 64;

/// One observation in model coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelTrial {
    pub subject: usize,
    pub scenario: usize,
    pub choice: Boundary,
    /// Seconds.
    pub rt: f64,
}

/// Trial-level parameters implied by `theta` for one trial.
pub fn assemble_trial_params(theta: &ParameterVector, idx: &TrialIndex) -> DdmParams {
    let eta_v = theta.beta0_v() + theta.u_v(idx.subject) + theta.w_v(idx.scenario);
    let eta_a = theta.beta0_a() + theta.u_a(idx.subject) + theta.w_a(idx.scenario);
    DdmParams {
        v: eta_v,
        a: softplus(eta_a),
        z: logistic(theta.beta0_z()),
        t0: softplus(theta.beta0_t()),
    }
}

/// Joint log posterior with gradient, flagged when the point is outside the
/// support (some response faster than the implied non-decision time).
#[derive(Clone, Debug, PartialEq)]
pub struct PosteriorGradient {
    pub log_posterior: f64,
    pub gradient: Vec<f64>,
    pub rejected: bool,
}

#[derive(Clone, Copy, Default)]
struct TrialTerm {
    log_lik: f64,
    d_eta_v: f64,
    d_eta_a: f64,
    d_z: f64,
    d_t0: f64,
}

#[derive(Clone, Debug)]
pub struct HierarchicalModel {
    layout: ParameterLayout,
    trials: Vec<ModelTrial>,
    priors: PriorConfig,
    subjects: Vec<String>,
    scenarios: Vec<String>,
    exec: Exec,
}

impl HierarchicalModel {
    /// Model over an explicit trial list. Fails on an empty dataset or
    /// out-of-range indices.
    pub fn new(
        layout: ParameterLayout,
        trials: Vec<ModelTrial>,
        priors: PriorConfig,
    ) -> Result<Self> {
        if trials.is_empty() {
            return Err(Error::Config("cannot fit a model to an empty dataset".into()));
        }
        let mut model = Self::prior_only(layout, priors)?;
        for (i, t) in trials.iter().enumerate() {
            if t.subject >= layout.n_subjects || t.scenario >= layout.n_scenarios {
                return Err(Error::Config(format!("trial {i} has out-of-range indices")));
            }
            if !(t.rt > 0.0 && t.rt.is_finite()) {
                return Err(Error::Data(format!("trial {i} has non-positive response time")));
            }
        }
        model.trials = trials;
        Ok(model)
    }

    /// Model with no observations; its log posterior is the log prior.
    pub fn prior_only(layout: ParameterLayout, priors: PriorConfig) -> Result<Self> {
        priors.validate()?;
        Ok(HierarchicalModel {
            layout,
            trials: Vec::new(),
            priors,
            subjects: (1..=layout.n_subjects).map(|j| j.to_string()).collect(),
            scenarios: (1..=layout.n_scenarios).map(|k| k.to_string()).collect(),
            exec: Exec::default(),
        })
    }

    /// Model over ingested trials, labelled by subject and scenario ids.
    pub fn from_trial_set(set: &TrialSet, priors: PriorConfig) -> Result<Self> {
        let layout = ParameterLayout::new(set.subjects.len(), set.scenarios.len());
        let trials = set
            .indexed()
            .iter()
            .map(|(r, idx)| Self::model_trial(r, idx))
            .collect();
        let mut model = Self::new(layout, trials, priors)?;
        model.subjects = set.subjects.clone();
        model.scenarios = set.scenarios.iter().map(|k| k.to_string()).collect();
        Ok(model)
    }

    pub fn model_trial(record: &TrialRecord, idx: &TrialIndex) -> ModelTrial {
        ModelTrial {
            subject: idx.subject,
            scenario: idx.scenario,
            choice: record.choice.boundary(),
            rt: record.rt_seconds(),
        }
    }

    pub fn with_exec(mut self, exec: Exec) -> Self {
        self.exec = exec;
        self
    }

    pub fn with_labels(mut self, subjects: Vec<String>, scenarios: Vec<String>) -> Self {
        assert_eq!(subjects.len(), self.layout.n_subjects);
        assert_eq!(scenarios.len(), self.layout.n_scenarios);
        self.subjects = subjects;
        self.scenarios = scenarios;
        self
    }

    pub fn layout(&self) -> ParameterLayout {
        self.layout
    }

    pub fn trials(&self) -> &[ModelTrial] {
        &self.trials
    }

    pub fn priors(&self) -> &PriorConfig {
        &self.priors
    }

    pub fn subjects(&self) -> &[String] {
        &self.subjects
    }

    pub fn scenarios(&self) -> &[String] {
        &self.scenarios
    }

    fn check_len(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.layout.dim() {
            return Err(Error::Config(format!(
                "parameter vector has length {}, model expects {}",
                theta.len(),
                self.layout.dim()
            )));
        }
        Ok(())
    }

    pub fn log_posterior(&self, theta: &[f64]) -> Result<f64> {
        self.check_len(theta)?;
        let mut grad = vec![0.0; theta.len()];
        Ok(self.evaluate(theta, &mut grad))
    }

    pub fn grad_log_posterior(&self, theta: &[f64]) -> Result<PosteriorGradient> {
        self.check_len(theta)?;
        let mut gradient = vec![0.0; theta.len()];
        let log_posterior = self.evaluate(theta, &mut gradient);
        let rejected = !log_posterior.is_finite();
        if rejected {
            gradient.iter_mut().for_each(|g| *g = 0.0);
        }
        Ok(PosteriorGradient {
            log_posterior,
            gradient,
            rejected,
        })
    }

    /// Sum of trial log likelihoods only.
    pub fn log_likelihood(&self, theta: &[f64]) -> Result<f64> {
        Ok(self.pointwise_log_likelihood(theta)?.iter().sum())
    }

    /// Per-trial log likelihood, in trial order.
    pub fn pointwise_log_likelihood(&self, theta: &[f64]) -> Result<Vec<f64>> {
        self.check_len(theta)?;
        Ok(self.trial_terms(theta).iter().map(|t| t.log_lik).collect())
    }

    pub fn trial_params(&self, theta: &[f64], trial: &ModelTrial) -> DdmParams {
        let l = &self.layout;
        let sig = |g| theta[l.log_sigma(g)].exp();
        let eta_v = theta[ParameterLayout::BETA0_V]
            + sig(GroupSd::DriftSubject) * theta[l.u_v(trial.subject)]
            + sig(GroupSd::DriftSituation) * theta[l.w_v(trial.scenario)];
        let eta_a = theta[ParameterLayout::BETA0_A]
            + sig(GroupSd::BoundarySubject) * theta[l.u_a(trial.subject)]
            + sig(GroupSd::BoundarySituation) * theta[l.w_a(trial.scenario)];
        DdmParams {
            v: eta_v,
            a: softplus(eta_a),
            z: logistic(theta[ParameterLayout::BETA0_Z]),
            t0: softplus(theta[ParameterLayout::BETA0_T]),
        }
    }

    fn trial_terms(&self, theta: &[f64]) -> Vec<TrialTerm> {
        let l = self.layout;
        let eval = |chunk: &[ModelTrial]| -> Vec<TrialTerm> {
            chunk
                .iter()
                .map(|trial| {
                    let eta_a = theta[ParameterLayout::BETA0_A]
                        + theta[l.log_sigma(GroupSd::BoundarySubject)].exp() * theta[l.u_a(trial.subject)]
                        + theta[l.log_sigma(GroupSd::BoundarySituation)].exp()
                            * theta[l.w_a(trial.scenario)];
                    let params = self.trial_params(theta, trial);
                    let g = fpt_log_density_grad(&params, trial.rt, trial.choice);
                    TrialTerm {
                        log_lik: g.log_density,
                        d_eta_v: g.d_v,
                        d_eta_a: g.d_a * logistic(eta_a),
                        d_z: g.d_z,
                        d_t0: g.d_t0,
                    }
                })
                .collect()
        };
        self.exec
            .map_chunks(&self.trials, LIKELIHOOD_CHUNK, eval)
            .into_iter()
            .flatten()
            .collect()
    }

    /// Log posterior with its gradient written into `grad` (overwritten).
    fn evaluate(&self, theta: &[f64], grad: &mut [f64]) -> f64 {
        use ParameterLayout as L;
        grad.iter_mut().for_each(|g| *g = 0.0);
        let l = self.layout;
        let mut lp = self.priors.log_density_grad(&l, theta, grad);
        if !lp.is_finite() {
            return f64::NEG_INFINITY;
        }

        let s_vs = theta[l.log_sigma(GroupSd::DriftSubject)].exp();
        let s_vk = theta[l.log_sigma(GroupSd::DriftSituation)].exp();
        let s_as = theta[l.log_sigma(GroupSd::BoundarySubject)].exp();
        let s_ak = theta[l.log_sigma(GroupSd::BoundarySituation)].exp();

        let mut d_z = 0.0;
        let mut d_t0 = 0.0;
        // sequential reduction in trial order
        for (trial, term) in self.trials.iter().zip(self.trial_terms(theta)) {
            if !term.log_lik.is_finite() {
                return f64::NEG_INFINITY;
            }
            lp += term.log_lik;
            let (j, k) = (trial.subject, trial.scenario);

            grad[L::BETA0_V] += term.d_eta_v;
            grad[l.u_v(j)] += term.d_eta_v * s_vs;
            grad[l.w_v(k)] += term.d_eta_v * s_vk;
            grad[l.log_sigma(GroupSd::DriftSubject)] += term.d_eta_v * s_vs * theta[l.u_v(j)];
            grad[l.log_sigma(GroupSd::DriftSituation)] += term.d_eta_v * s_vk * theta[l.w_v(k)];

            grad[L::BETA0_A] += term.d_eta_a;
            grad[l.u_a(j)] += term.d_eta_a * s_as;
            grad[l.w_a(k)] += term.d_eta_a * s_ak;
            grad[l.log_sigma(GroupSd::BoundarySubject)] += term.d_eta_a * s_as * theta[l.u_a(j)];
            grad[l.log_sigma(GroupSd::BoundarySituation)] +=
                term.d_eta_a * s_ak * theta[l.w_a(k)];

            d_z += term.d_z;
            d_t0 += term.d_t0;
        }
        let bz = theta[L::BETA0_Z];
        let z = logistic(bz);
        grad[L::BETA0_Z] += d_z * z * (1.0 - z);
        grad[L::BETA0_T] += d_t0 * logistic(theta[L::BETA0_T]);
        lp
    }

    /// Names of the natural-scale quantities produced by [`Self::derived`].
    pub fn derived_names(&self) -> Vec<String> {
        let mut out: Vec<String> = ["v_intercept", "a_intercept", "t_intercept", "z_intercept"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        out.extend(GroupSd::ALL.iter().map(|g| g.name().to_string()));
        out.extend(self.subjects.iter().map(|s| format!("u_v[{s}]")));
        out.extend(self.subjects.iter().map(|s| format!("u_a[{s}]")));
        out.extend(self.scenarios.iter().map(|k| format!("w_v[{k}]")));
        out.extend(self.scenarios.iter().map(|k| format!("w_a[{k}]")));
        out
    }

    /// Natural-scale population parameters, group standard deviations and
    /// random offsets implied by `theta`.
    pub fn derived(&self, theta: &[f64]) -> Vec<f64> {
        let p = ParameterVector::from_values(self.layout, theta.to_vec())
            .expect("theta length checked by caller");
        let l = self.layout;
        let mut out = vec![
            p.beta0_v(),
            softplus(p.beta0_a()),
            softplus(p.beta0_t()),
            logistic(p.beta0_z()),
        ];
        out.extend(GroupSd::ALL.iter().map(|&g| p.sigma(g)));
        out.extend((0..l.n_subjects).map(|j| p.u_v(j)));
        out.extend((0..l.n_subjects).map(|j| p.u_a(j)));
        out.extend((0..l.n_scenarios).map(|k| p.w_v(k)));
        out.extend((0..l.n_scenarios).map(|k| p.w_a(k)));
        out
    }
}

impl LogDensity for HierarchicalModel {
    fn dim(&self) -> usize {
        self.layout.dim()
    }

    fn log_density_grad(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        let lp = self.evaluate(x, grad);
        if lp.is_finite() {
            lp
        } else {
            f64::NEG_INFINITY
        }
    }

    fn param_names(&self) -> Vec<String> {
        self.layout.names(&self.subjects, &self.scenarios)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Condition;

    fn idx(subject: usize, scenario: usize) -> TrialIndex {
        TrialIndex {
            subject,
            scenario,
            condition: Condition::Epistemic,
        }
    }

    #[test]
    fn zero_vector_links() {
        let theta = ParameterVector::zeros(ParameterLayout::new(3, 4));
        let p = assemble_trial_params(&theta, &idx(1, 2));
        assert_eq!(p.v, 0.0);
        assert_eq!(p.z, 0.5);
        assert!((p.a - 2f64.ln()).abs() < 1e-15);
        assert!((p.t0 - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn additive_drift_predictor() {
        // subject 3 and scenario 24 (1-based) of a 30 x 30 design
        let mut theta = ParameterVector::zeros(ParameterLayout::new(30, 30));
        theta.set_sigma(GroupSd::DriftSubject, 0.7);
        theta.set_sigma(GroupSd::DriftSituation, 1.3);
        theta.values[ParameterLayout::BETA0_V] = 0.1;
        theta.set_u_v(2, -0.9);
        theta.set_w_v(23, -1.6);
        let p = assemble_trial_params(&theta, &idx(2, 23));
        assert!((p.v - -2.4).abs() < 1e-12);
        theta.values[ParameterLayout::BETA0_Z] = 0.0;
        assert_eq!(assemble_trial_params(&theta, &idx(2, 23)).z, 0.5);
    }

    #[test]
    fn empty_dataset_is_a_config_error() {
        let l = ParameterLayout::new(2, 2);
        let err = HierarchicalModel::new(l, vec![], PriorConfig::default()).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn layout_length() {
        let l = ParameterLayout::new(7, 5);
        assert_eq!(l.dim(), 4 + 14 + 10 + 4);
        let subjects: Vec<String> = (0..7).map(|j| format!("s{j}")).collect();
        let scen: Vec<String> = (1..=5).map(|k| k.to_string()).collect();
        let names = l.names(&subjects, &scen);
        assert_eq!(names.len(), l.dim());
        let mut dedup = names.clone();
        dedup.sort();
        dedup.dedup();
        assert_eq!(dedup.len(), names.len());
    }

    #[test]
    fn out_of_support_is_rejected_not_an_error() {
        let l = ParameterLayout::new(1, 1);
        let trials = vec![ModelTrial {
            subject: 0,
            scenario: 0,
            choice: Boundary::Lower,
            rt: 0.5,
        }];
        let m = HierarchicalModel::new(l, trials, PriorConfig::default()).unwrap();
        let mut theta = vec![0.0; l.dim()];
        theta[ParameterLayout::BETA0_T] = 3.0; // t0 ~ 3.05 s > rt
        let g = m.grad_log_posterior(&theta).unwrap();
        assert!(g.rejected);
        assert_eq!(g.log_posterior, f64::NEG_INFINITY);
        assert!(g.gradient.iter().all(|&x| x == 0.0));
    }
}
