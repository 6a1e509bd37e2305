//! Pareto-smoothed importance sampling leave-one-out cross-validation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::math::log_sum_exp;

pub const MIN_LOO_DRAWS: usize = 50;
/// Pareto shape above which an observation's importance ratios are
/// unreliable.
pub const PARETO_K_THRESHOLD: f64 = 0.7;
/// Fraction of the largest ratios replaced by the generalized Pareto fit.
pub const TAIL_FRACTION: f64 = 0.2;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LooReport {
    pub elpd_loo: f64,
    pub se: f64,
    pub pointwise: Vec<f64>,
    pub pareto_k: Vec<f64>,
    /// Indices of observations with `k > 0.7`.
    pub flagged: Vec<usize>,
}

/// Empirical-Bayes fit of a generalized Pareto distribution to
/// nonnegative ascending exceedances, with the shape shrunk toward 0.5 by
/// a weak prior. Returns `(k, sigma)`.
pub fn fit_generalized_pareto(x: &[f64]) -> (f64, f64) {
    const PRIOR_BS: f64 = 3.0;
    const PRIOR_K: f64 = 10.0;
    let n = x.len();
    let nf = n as f64;
    let m = 30 + (nf.sqrt() as usize);
    let quartile = x[((nf / 4.0 + 0.5) as usize).saturating_sub(1)];
    let xmax = x[n - 1];

    let mean_log1p = |b: f64| x.iter().map(|&xi| (-b * xi).ln_1p()).sum::<f64>() / nf;
    let bs: Vec<f64> = (1..=m)
        .map(|j| {
            let raw = 1.0 - (m as f64 / (j as f64 - 0.5)).sqrt();
            raw / (PRIOR_BS * quartile) + 1.0 / xmax
        })
        .collect();
    let profile: Vec<f64> = bs
        .iter()
        .map(|&b| {
            let k = mean_log1p(b);
            nf * ((-b / k).ln() - k - 1.0)
        })
        .collect();
    let mut weights: Vec<f64> = profile
        .iter()
        .map(|li| 1.0 / profile.iter().map(|lj| (lj - li).exp()).sum::<f64>())
        .collect();
    let keep: Vec<bool> = weights.iter().map(|&w| w >= 10.0 * f64::EPSILON).collect();
    let mut total = 0.0;
    for (w, &k) in weights.iter_mut().zip(&keep) {
        if !k {
            *w = 0.0;
        }
        total += *w;
    }
    let b_post: f64 = bs.iter().zip(&weights).map(|(b, w)| b * w / total).sum();
    let k_hat = mean_log1p(b_post);
    let sigma = -k_hat / b_post;
    let k = (nf * k_hat + PRIOR_K * 0.5) / (nf + PRIOR_K);
    (k, sigma)
}

fn gpd_quantile(p: f64, k: f64, sigma: f64) -> f64 {
    if k.abs() < f64::EPSILON {
        -sigma * (-p).ln_1p()
    } else {
        sigma * (-k * (-p).ln_1p()).exp_m1() / k
    }
}

/// Smoothed, normalized log weights for one observation, and the fitted
/// Pareto shape.
pub fn psis_smooth(log_ratios: &[f64]) -> (Vec<f64>, f64) {
    let n = log_ratios.len();
    let max = log_ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut x: Vec<f64> = log_ratios.iter().map(|v| v - max).collect();

    let tail_len = ((TAIL_FRACTION * n as f64).ceil() as usize).min(n - 1);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| x[i].total_cmp(&x[j]));
    let cutoff = x[order[n - tail_len - 1]].max(f64::MIN_POSITIVE.ln());
    let exp_cutoff = cutoff.exp();
    let tail: Vec<usize> = order.iter().copied().filter(|&i| x[i] > cutoff).collect();

    let k = if tail.len() <= 4 {
        // tail tied with the cutoff: nothing heavy to smooth
        0.0
    } else {
        let exceed: Vec<f64> = tail.iter().map(|&i| x[i].exp() - exp_cutoff).collect();
        let (k, sigma) = fit_generalized_pareto(&exceed);
        if k.is_finite() && sigma > 0.0 {
            let m = tail.len() as f64;
            for (r, &i) in tail.iter().enumerate() {
                let p = (r as f64 + 0.5) / m;
                x[i] = (gpd_quantile(p, k, sigma) + exp_cutoff).ln();
            }
        }
        k
    };
    for v in &mut x {
        if *v > 0.0 {
            *v = 0.0;
        }
    }
    let norm = log_sum_exp(&x);
    x.iter_mut().for_each(|v| *v -= norm);
    (x, k)
}

/// PSIS-LOO from a pointwise log-likelihood matrix `log_lik[draw][obs]`.
pub fn psis_loo(log_lik: &[Vec<f64>], exec: Exec) -> Result<LooReport> {
    let s = log_lik.len();
    if s < MIN_LOO_DRAWS {
        return Err(Error::Analysis(format!(
            "PSIS-LOO needs at least {MIN_LOO_DRAWS} posterior draws, got {s}; run longer chains"
        )));
    }
    let n_obs = log_lik[0].len();
    if n_obs == 0 || log_lik.iter().any(|r| r.len() != n_obs) {
        return Err(Error::Analysis("log-likelihood matrix is empty or ragged".into()));
    }
    if log_lik.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Analysis(
            "log-likelihood matrix has non-finite entries; drop rejected draws first".into(),
        ));
    }
    let per_obs = exec.map_range(n_obs, |i| {
        let column: Vec<f64> = log_lik.iter().map(|row| row[i]).collect();
        let neg: Vec<f64> = column.iter().map(|v| -v).collect();
        let (lw, k) = psis_smooth(&neg);
        let terms: Vec<f64> = lw.iter().zip(&column).map(|(w, l)| w + l).collect();
        (log_sum_exp(&terms), k)
    });
    let pointwise: Vec<f64> = per_obs.iter().map(|p| p.0).collect();
    let pareto_k: Vec<f64> = per_obs.iter().map(|p| p.1).collect();
    let nf = n_obs as f64;
    let elpd_loo: f64 = pointwise.iter().sum();
    let mean = elpd_loo / nf;
    let var = pointwise.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / nf;
    let flagged = pareto_k
        .iter()
        .enumerate()
        .filter(|(_, &k)| k > PARETO_K_THRESHOLD)
        .map(|(i, _)| i)
        .collect::<Vec<_>>();
    if !flagged.is_empty() {
        log::warn!("{} observations with Pareto k > {PARETO_K_THRESHOLD}", flagged.len());
    }
    Ok(LooReport {
        elpd_loo,
        se: (nf * var).sqrt(),
        pointwise,
        pareto_k,
        flagged,
    })
}
