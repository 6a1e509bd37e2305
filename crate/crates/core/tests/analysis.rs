mod common;

use common::*;
use ddm_core::analysis::{
    bootstrap_subject_ci, condition_posterior_means, correlation_report, deterministic_path,
    effective_scenario_drift, fisher_mean_correlation, signed_confidence,
    simulate_condition_trajectories, subject_correlation_set, CorrelationConfig, ExclusionReason,
    ScenarioLabeling, TrajectoryMode,
};
use ddm_core::data::Condition;
use ddm_core::exec::{stream_rng, Exec};
use ddm_core::wiener::{Boundary, DdmParams, EulerSettings};
use proptest::prelude::*;
use rand::Rng;

fn labels(epistemic: &[u32]) -> ScenarioLabeling {
    ScenarioLabeling::from_conditions((1..=4).map(|k| {
        let c = if epistemic.contains(&k) { Condition::Epistemic } else { Condition::Social };
        (k, c)
    }))
    .unwrap()
}

const NAMES: [&str; 12] = [
    "beta0_v", "beta0_a", "beta0_t", "beta0_z", "w_v[1]", "w_v[2]", "w_v[3]", "w_v[4]",
    "w_a[1]", "w_a[2]", "w_a[3]", "w_a[4]",
];

/// Two chains of random draws over [`NAMES`].
fn random_table(seed: u64) -> ddm_core::sampler::DrawsTable {
    let chains = (0..2)
        .map(|c| {
            let mut rng = stream_rng(seed, c);
            (0..300)
                .map(|_| {
                    let mut d: Vec<f64> = (0..12).map(|_| rng.random_range(-1.0..1.0)).collect();
                    d[1] += 3.0;
                    d
                })
                .collect()
        })
        .collect();
    table(&NAMES, chains)
}

#[test]
fn signed_confidence_endpoints() {
    assert_eq!(signed_confidence(50).unwrap(), 0.0);
    assert_eq!(signed_confidence(0).unwrap(), -1.0);
    assert_eq!(signed_confidence(100).unwrap(), 1.0);
    assert!(signed_confidence(101).is_err());
}

#[test]
fn pipeline_matches_direct_fisher_mean() {
    let trials = correlation_cohort(40, 0.2, 0.12, 3);
    let drifts = scenario_drifts();
    let cfg = CorrelationConfig { resamples: 500, seed: 1, ..Default::default() };
    let report = correlation_report(&trials, &drifts, &cfg, Exec::Parallel).unwrap();
    let oracle = direct_fisher_mean(&trials, &drifts);
    assert!((report.fisher_mean_r - oracle).abs() < 1e-12);
    assert_eq!(report.included, 40);
    assert!(report.ci_low < report.fisher_mean_r && report.fisher_mean_r < report.ci_high);
}

#[test]
fn noiseless_sliders_give_unit_correlations() {
    let trials = correlation_cohort(5, 0.4, 0.0, 0);
    let set = subject_correlation_set(&trials, &scenario_drifts(), 30).unwrap();
    assert_eq!(set.included.len(), 5);
    for s in &set.included {
        assert!((s.r - 1.0).abs() < 1e-3, "{}", s.r);
    }
}

#[test]
fn exact_affine_sliders_give_r_of_one() {
    // slider = 50 + 3 (k - 15) is exactly affine in drift 0.1 (k - 15)
    let drifts = (1..=30).map(|k| (k, 0.1 * (k as f64 - 15.0))).collect();
    let trials: Vec<_> = (0..3)
        .flat_map(|j| (1..=30u32).map(move |k| record(&format!("Q{j}"), k, (50 + 3 * k - 45) as u8)))
        .collect();
    let cfg = CorrelationConfig { resamples: 200, seed: 2, ..Default::default() };
    let report = correlation_report(&trials, &drifts, &cfg, Exec::Sequential).unwrap();
    assert!(report.subjects.iter().all(|s| (s.r - 1.0).abs() < 1e-12));
    assert_eq!(report.fisher_mean_r, 1.0);
    assert_eq!(report.fraction_positive, 1.0);
}

#[test]
fn short_and_constant_subjects_are_excluded() {
    let mut trials = correlation_cohort(3, 0.2, 0.1, 4);
    trials.retain(|t| !(t.subject_id == "P000" && t.scenario_id == 30));
    for t in trials.iter_mut().filter(|t| t.subject_id == "P001") {
        t.slider = 70;
    }
    let set = subject_correlation_set(&trials, &scenario_drifts(), 30).unwrap();
    assert_eq!(set.included.len(), 1);
    let reasons: Vec<_> = set.excluded.iter().map(|e| (e.subject_id.as_str(), e.reason, e.n_trials)).collect();
    assert!(reasons.contains(&("P000", ExclusionReason::InsufficientTrials, 29)));
    assert!(reasons.contains(&("P001", ExclusionReason::ZeroVariance, 30)));
}

#[test]
fn nobody_left_is_an_error() {
    let trials = correlation_cohort(2, 0.2, 0.1, 5);
    assert!(subject_correlation_set(&trials, &scenario_drifts(), 31).is_err());
}

#[test]
fn bootstrap_is_reproducible_across_modes() {
    let rs = [0.2, 0.5, 0.41, 0.66, 0.3, 0.58, -0.1, 0.45];
    let a = bootstrap_subject_ci(&rs, 2000, 9, Exec::Sequential).unwrap();
    let b = bootstrap_subject_ci(&rs, 2000, 9, Exec::Parallel).unwrap();
    assert_eq!(a, b);
    let m = fisher_mean_correlation(&rs).unwrap();
    assert!(a.0 < m && m < a.1);
    assert_ne!(a, bootstrap_subject_ci(&rs, 2000, 10, Exec::Sequential).unwrap());
}

proptest! {
    #[test]
    fn report_invariants(seed in 0u64..1000, noise in 0.05f64..0.6, subjects in 2usize..12) {
        let trials = correlation_cohort(subjects, 0.2, noise, seed);
        let cfg = CorrelationConfig { resamples: 100, seed, ..Default::default() };
        let r = correlation_report(&trials, &scenario_drifts(), &cfg, Exec::Sequential).unwrap();
        prop_assert!(r.subjects.iter().all(|s| (-1.0..=1.0).contains(&s.r)));
        prop_assert_eq!(r.included + r.excluded.len(), r.total_subjects);
        prop_assert_eq!(r.total_subjects, subjects);
        prop_assert!(r.ci_low < r.ci_high);
    }

    #[test]
    fn fisher_mean_is_bounded(rs in prop::collection::vec(-1.0f64..=1.0, 1..40)) {
        let m = fisher_mean_correlation(&rs).unwrap();
        let lo = rs.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = rs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(m >= lo - 1e-12 && m <= hi + 1e-12);
    }
}

#[test]
fn single_condition_mean_is_the_grand_mean() {
    let draws = random_table(1);
    let means = condition_posterior_means(&draws, &labels(&[])).unwrap();
    assert_eq!(means.len(), 1);
    let social = &means[&Condition::Social];
    let grand: f64 = (1..=4)
        .map(|k| effective_scenario_drift(&draws, k, 0.95).unwrap().mean)
        .sum::<f64>()
        / 4.0;
    assert!((social.v - grand).abs() < 1e-12);
}

#[test]
fn permuting_labels_within_a_condition_changes_nothing() {
    let draws = random_table(2);
    let a = condition_posterior_means(&draws, &labels(&[1, 3])).unwrap();
    let relabelled = ScenarioLabeling::from_conditions([
        (3, Condition::Epistemic),
        (4, Condition::Social),
        (1, Condition::Epistemic),
        (2, Condition::Social),
    ])
    .unwrap();
    let b = condition_posterior_means(&draws, &relabelled).unwrap();
    assert_eq!(a, b);
}

#[test]
fn unlabelled_scenario_is_an_error() {
    let draws = random_table(3);
    let partial = ScenarioLabeling::from_conditions([(1, Condition::Epistemic)]).unwrap();
    assert!(condition_posterior_means(&draws, &partial).is_err());
}

#[test]
fn effective_drift_is_linear_in_its_terms() {
    let draws = random_table(4);
    let mean = |name: &str| {
        let x = draws.pooled(draws.index(name).unwrap());
        x.iter().sum::<f64>() / x.len() as f64
    };
    for k in 1..=4 {
        let d = effective_scenario_drift(&draws, k, 0.95).unwrap();
        assert!((d.mean - mean("beta0_v") - mean(&format!("w_v[{k}]"))).abs() < 1e-12);
        assert!(d.hdi_low < d.mean && d.mean < d.hdi_high);
    }
    assert!(effective_scenario_drift(&draws, 9, 0.95).is_err());
}

#[test]
fn zero_offsets_give_the_intercept() {
    let mut draws = random_table(5);
    for c in &mut draws.chains {
        for d in &mut c.draws {
            d[4..8].iter_mut().for_each(|w| *w = 0.0);
        }
    }
    let b = draws.pooled(0);
    let m = b.iter().sum::<f64>() / b.len() as f64;
    assert!((effective_scenario_drift(&draws, 2, 0.95).unwrap().mean - m).abs() < 1e-12);
}

#[test]
fn deterministic_path_hits_the_predicted_boundary() {
    let p = DdmParams::new(-1.26, 2.94, 0.52, 2.4).unwrap();
    let path = deterministic_path(&p, 0.01, 60.0);
    assert_eq!(path.outcome, Some(Boundary::Lower));
    let end = *path.times.last().unwrap();
    assert!((end - (2.4 + 0.52 * 2.94 / 1.26)).abs() < 1e-12);
    assert_eq!(*path.states.last().unwrap(), 0.0);
    assert_eq!(path.states[0], 0.52 * 2.94);
}

#[test]
fn stochastic_bundles_follow_the_condition_drift() {
    let draws = random_table(6);
    let mut shifted = draws.clone();
    for c in &mut shifted.chains {
        for d in &mut c.draws {
            d[0] = if d[0] > 0.0 { 1.5 } else { 1.0 };
            d[2] = -3.0;
        }
    }
    let settings = EulerSettings { dt: 0.01, max_t: 60.0 };
    let run = |exec| {
        simulate_condition_trajectories(
            &shifted,
            &labels(&[1, 2]),
            Condition::Social,
            300,
            TrajectoryMode::Stochastic,
            &settings,
            8,
            exec,
        )
        .unwrap()
    };
    let a = run(Exec::Sequential);
    assert_eq!(a, run(Exec::Parallel));
    assert_eq!(a.paths.len(), 300);
    assert!(a.fraction(Boundary::Upper) > 0.6);
    for p in &a.paths {
        assert_eq!(p.times.len(), p.states.len());
        let inner = &p.states[..p.states.len() - 1];
        assert!(inner.iter().all(|&x| (0.0..=p.params.a).contains(&x)));
    }
}
