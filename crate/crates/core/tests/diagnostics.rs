use ddm_core::diagnostics::{ess_bulk, hdi, psis_loo, split_rhat, PARETO_K_THRESHOLD};
use ddm_core::exec::{stream_rng, Exec};
use rand::Rng;
use rand_distr::{Exp1, StandardNormal};

// Frozen from arviz 0.23.4 on the fixture files.
const ARVIZ_RHAT: f64 = 1.0098976508897355;
const ARVIZ_ESS_BULK: f64 = 186.13295673151688;
const ARVIZ_PARETO_K: [f64; 8] = [
    0.2725132572209878,
    0.43755236560841126,
    0.4342604274690507,
    0.2640799023747582,
    0.32065003525478325,
    0.5686095220765495,
    0.42543756241980774,
    0.8736468159406122,
];
const ARVIZ_POINTWISE: [f64; 8] = [
    -1.257270933493798,
    -1.0873709612745053,
    -1.283653813959127,
    -1.007392477431532,
    -2.0865288774950788,
    -0.9949473584862911,
    -1.1412818508291958,
    -10.760864893839782,
];
const ARVIZ_HDI: (f64, f64) = (-3.3607324174763775, 4.596575401846126);

fn fixture_chains() -> Vec<Vec<f64>> {
    let mut chains = vec![Vec::new(); 4];
    for line in include_str!("fixtures/chains.csv").lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        chains[f[0].parse::<usize>().unwrap()].push(f[2].parse().unwrap());
    }
    chains
}

fn fixture_log_lik() -> Vec<Vec<f64>> {
    include_str!("fixtures/loglik.csv")
        .lines()
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect()
}

fn ar1(chains: usize, n: usize, phi: f64, seed: u64) -> Vec<Vec<f64>> {
    (0..chains)
        .map(|c| {
            let mut rng = stream_rng(seed, c as u64);
            let scale = (1.0 - phi * phi).sqrt();
            let mut x: f64 = rng.sample(StandardNormal);
            (0..n)
                .map(|_| {
                    x = phi * x + scale * rng.sample::<f64, _>(StandardNormal);
                    x
                })
                .collect()
        })
        .collect()
}

#[test]
fn rhat_and_ess_match_arviz() {
    let chains = fixture_chains();
    let r = split_rhat(&chains).unwrap();
    let e = ess_bulk(&chains).unwrap();
    assert!((r.value - ARVIZ_RHAT).abs() < 1e-10, "{}", r.value);
    assert!((e.value - ARVIZ_ESS_BULK).abs() < 1e-8, "{}", e.value);
}

#[test]
fn hdi_matches_arviz() {
    let x: Vec<f64> = include_str!("fixtures/hdi.csv")
        .lines()
        .map(|l| l.parse().unwrap())
        .collect();
    let (lo, hi) = hdi(&x, 0.95).unwrap();
    assert_eq!((lo, hi), ARVIZ_HDI);
}

#[test]
fn psis_matches_arviz() {
    let report = psis_loo(&fixture_log_lik(), Exec::Sequential).unwrap();
    for i in 0..8 {
        assert!((report.pareto_k[i] - ARVIZ_PARETO_K[i]).abs() < 1e-8, "k[{i}]");
        assert!((report.pointwise[i] - ARVIZ_POINTWISE[i]).abs() < 1e-8, "elpd[{i}]");
    }
    assert!((report.elpd_loo - ARVIZ_POINTWISE.iter().sum::<f64>()).abs() < 1e-8);
    // the outlier is the only unreliable observation
    assert_eq!(report.flagged, vec![7]);
    assert!(ARVIZ_PARETO_K[7] > PARETO_K_THRESHOLD);
}

#[test]
fn ess_of_ar1_matches_theory() {
    let phi = 0.5;
    let chains = ar1(4, 5000, phi, 3);
    let expected = 20_000.0 * (1.0 - phi) / (1.0 + phi);
    let e = ess_bulk(&chains).unwrap().value;
    assert!((e / expected - 1.0).abs() < 0.1, "ess {e} vs {expected}");
    assert!(split_rhat(&chains).unwrap().value < 1.01);
}

#[test]
fn independent_draws_have_full_ess() {
    let chains = ar1(4, 2500, 0.0, 5);
    let e = ess_bulk(&chains).unwrap().value;
    assert!((e / 10_000.0 - 1.0).abs() < 0.1, "ess {e}");
}

#[test]
fn separated_chains_have_large_rhat() {
    let mut chains = ar1(4, 1000, 0.3, 7);
    for x in chains[3].iter_mut() {
        *x += 2.0;
    }
    assert!(split_rhat(&chains).unwrap().value > 1.1);
}

#[test]
fn trending_chain_is_caught_by_splitting() {
    let mut chains = ar1(4, 1000, 0.3, 9);
    for (t, x) in chains[0].iter_mut().enumerate() {
        *x += 3.0 * t as f64 / 1000.0;
    }
    assert!(split_rhat(&chains).unwrap().value > 1.05);
}

#[test]
fn hdi_of_a_normal_is_central() {
    let mut rng = stream_rng(11, 0);
    let x: Vec<f64> = (0..200_000).map(|_| rng.sample(StandardNormal)).collect();
    let (lo, hi) = hdi(&x, 0.95).unwrap();
    assert!((lo + 1.959964).abs() < 0.03 && (hi - 1.959964).abs() < 0.03);
}

#[test]
fn hdi_of_a_skewed_draw_hugs_the_mode() {
    let mut rng = stream_rng(13, 0);
    let mut x: Vec<f64> = (0..100_000).map(|_| rng.sample(Exp1)).collect();
    let (lo, hi) = hdi(&x, 0.9).unwrap();
    // exponential HDI is [0, -ln 0.1]
    assert!(lo < 0.01);
    assert!((hi - 10f64.ln()).abs() < 0.05);
    x.sort_by(|a, b| a.total_cmp(b));
    let equal_tailed = x[(0.95 * x.len() as f64) as usize] - x[(0.05 * x.len() as f64) as usize];
    assert!(hi - lo < equal_tailed);
}

#[test]
fn psis_is_invariant_to_duplicated_observations() {
    let ll = fixture_log_lik();
    let doubled: Vec<Vec<f64>> = ll
        .iter()
        .map(|r| r.iter().chain(r.iter()).copied().collect())
        .collect();
    let a = psis_loo(&ll, Exec::Sequential).unwrap();
    let b = psis_loo(&doubled, Exec::Parallel).unwrap();
    assert_eq!(&b.pointwise[..8], &a.pointwise[..]);
    assert_eq!(&b.pointwise[8..], &a.pointwise[..]);
    assert!((b.elpd_loo - 2.0 * a.elpd_loo).abs() < 1e-10);
}

#[test]
fn psis_of_a_constant_likelihood_is_that_constant() {
    let ll = vec![vec![-1.5, -0.25]; 100];
    let r = psis_loo(&ll, Exec::Sequential).unwrap();
    assert!((r.pointwise[0] + 1.5).abs() < 1e-12);
    assert!((r.pointwise[1] + 0.25).abs() < 1e-12);
    assert!(r.flagged.is_empty());
}

#[test]
fn psis_rejects_bad_input() {
    assert!(psis_loo(&vec![vec![0.0]; 10], Exec::Sequential).is_err());
    let mut ll = vec![vec![0.0, 1.0]; 100];
    ll[4][1] = f64::NEG_INFINITY;
    assert!(psis_loo(&ll, Exec::Sequential).is_err());
}
