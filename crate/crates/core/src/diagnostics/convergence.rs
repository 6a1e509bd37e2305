//! Rank-normalized split R-hat and bulk effective sample size.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// A diagnostic value, flagged when the draws had (numerically) zero
/// variance and the value is a convention rather than an estimate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub degenerate: bool,
}

fn check_shape(chains: &[Vec<f64>], min_chains: usize) -> Result<usize> {
    if chains.len() < min_chains {
        return Err(Error::Analysis(format!(
            "need at least {min_chains} chains, got {}",
            chains.len()
        )));
    }
    let n = chains[0].len();
    if chains.iter().any(|c| c.len() != n) {
        return Err(Error::Analysis("chains have unequal lengths".into()));
    }
    if n < 4 {
        return Err(Error::Analysis(format!("need at least 4 draws per chain, got {n}")));
    }
    if chains.iter().flatten().any(|x| !x.is_finite()) {
        return Err(Error::Analysis("draws contain non-finite values".into()));
    }
    Ok(n)
}

fn is_constant(chains: &[Vec<f64>]) -> bool {
    let (lo, hi) = chains
        .iter()
        .flatten()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    hi - lo < 1e-15 * hi.abs().max(1.0)
}

/// Each chain split into its first and last halves (the middle draw of an
/// odd-length chain is dropped).
pub fn split_chains(chains: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(2 * chains.len());
    let mut tails = Vec::with_capacity(chains.len());
    for c in chains {
        let half = c.len() / 2;
        out.push(c[..half].to_vec());
        tails.push(c[c.len() - half..].to_vec());
    }
    out.extend(tails);
    out
}

/// Average ranks (1-based, ties averaged) over all draws, mapped through the
/// normal quantile function with Blom's offset.
pub fn rank_normalize(chains: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let flat: Vec<f64> = chains.iter().flatten().copied().collect();
    let s = flat.len();
    let mut order: Vec<usize> = (0..s).collect();
    order.sort_by(|&i, &j| flat[i].total_cmp(&flat[j]));
    let mut ranks = vec![0.0; s];
    let mut i = 0;
    while i < s {
        let mut j = i;
        while j + 1 < s && flat[order[j + 1]] == flat[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    let std = Normal::standard();
    let z: Vec<f64> = ranks
        .iter()
        .map(|r| std.inverse_cdf((r - 0.375) / (s as f64 + 0.25)))
        .collect();
    let mut out = Vec::with_capacity(chains.len());
    let mut start = 0;
    for c in chains {
        out.push(z[start..start + c.len()].to_vec());
        start += c.len();
    }
    out
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

fn var(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (x.len() - 1) as f64
}

fn median(x: &[f64]) -> f64 {
    let mut s = x.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

/// Classic potential scale reduction on equal-length chains.
pub fn basic_rhat(chains: &[Vec<f64>]) -> f64 {
    let n = chains[0].len() as f64;
    let means: Vec<f64> = chains.iter().map(|c| mean(c)).collect();
    let b = n * var(&means);
    let w = mean(&chains.iter().map(|c| var(c)).collect::<Vec<_>>());
    ((b / w + n - 1.0) / n).sqrt()
}

/// Rank-normalized split R-hat: the larger of the bulk and folded
/// (tail) versions.
pub fn split_rhat(chains: &[Vec<f64>]) -> Result<Estimate> {
    check_shape(chains, 2)?;
    if is_constant(chains) {
        return Ok(Estimate {
            value: 1.0,
            degenerate: true,
        });
    }
    let split = split_chains(chains);
    let bulk = basic_rhat(&rank_normalize(&split));
    let med = median(&split.iter().flatten().copied().collect::<Vec<_>>());
    let folded: Vec<Vec<f64>> = split
        .iter()
        .map(|c| c.iter().map(|x| (x - med).abs()).collect())
        .collect();
    let tail = if is_constant(&folded) {
        1.0
    } else {
        basic_rhat(&rank_normalize(&folded))
    };
    Ok(Estimate {
        value: bulk.max(tail),
        degenerate: false,
    })
}

/// Biased autocovariance at every lag, by FFT with zero padding.
pub fn autocovariance(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let m = mean(x);
    let len = (2 * n).next_power_of_two();
    let mut buf: Vec<Complex<f64>> = x
        .iter()
        .map(|v| Complex::new(v - m, 0.0))
        .chain(std::iter::repeat(Complex::new(0.0, 0.0)))
        .take(len)
        .collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(len).process(&mut buf);
    for c in &mut buf {
        *c = Complex::new(c.norm_sqr(), 0.0);
    }
    planner.plan_fft_inverse(len).process(&mut buf);
    // inverse is unnormalized: divide by len, then by n for the biased estimate
    buf[..n].iter().map(|c| c.re / (len as f64 * n as f64)).collect()
}

/// Multi-chain effective sample size with Geyer's initial positive and
/// monotone sequence truncation, on the raw draws.
pub fn ess_raw(chains: &[Vec<f64>]) -> f64 {
    let m = chains.len();
    let n = chains[0].len();
    let acov: Vec<Vec<f64>> = chains.iter().map(|c| autocovariance(c)).collect();
    let mean_acov = |t: usize| acov.iter().map(|a| a[t]).sum::<f64>() / m as f64;
    let nf = n as f64;
    let mean_var = mean_acov(0) * nf / (nf - 1.0);
    let mut var_plus = mean_var * (nf - 1.0) / nf;
    if m > 1 {
        let means: Vec<f64> = chains.iter().map(|c| mean(c)).collect();
        var_plus += var(&means);
    }

    let rho = |t: usize| 1.0 - (mean_var - mean_acov(t)) / var_plus;
    let mut rho_hat = vec![0.0; n];
    let mut rho_even = 1.0;
    let mut rho_odd = rho(1);
    rho_hat[0] = rho_even;
    rho_hat[1] = rho_odd;

    let mut t = 1;
    while t + 3 < n && rho_even + rho_odd > 0.0 {
        rho_even = rho(t + 1);
        rho_odd = rho(t + 2);
        if rho_even + rho_odd >= 0.0 {
            rho_hat[t + 1] = rho_even;
            rho_hat[t + 2] = rho_odd;
        }
        t += 2;
    }
    // may be -1 when the positive-sequence loop never ran
    let max_t = t as isize - 2;
    let next = (max_t + 1) as usize;
    if rho_even > 0.0 && next < n {
        rho_hat[next] = rho_even;
    }

    let mut t = 1;
    while (t as isize) <= max_t - 2 {
        if rho_hat[t + 1] + rho_hat[t + 2] > rho_hat[t - 1] + rho_hat[t] {
            rho_hat[t + 1] = (rho_hat[t - 1] + rho_hat[t]) / 2.0;
            rho_hat[t + 2] = rho_hat[t + 1];
        }
        t += 2;
    }

    let total = (m * n) as f64;
    let mut tau = -1.0 + 2.0 * rho_hat[..next].iter().sum::<f64>();
    if next < n {
        tau += rho_hat[next];
    }
    let tau = tau.max(1.0 / total.log10());
    total / tau
}

/// Bulk effective sample size: [`ess_raw`] on rank-normalized split chains.
pub fn ess_bulk(chains: &[Vec<f64>]) -> Result<Estimate> {
    check_shape(chains, 1)?;
    let total = chains.iter().map(Vec::len).sum::<usize>() as f64;
    if is_constant(chains) {
        return Ok(Estimate {
            value: total,
            degenerate: true,
        });
    }
    let z = rank_normalize(&split_chains(chains));
    Ok(Estimate {
        value: ess_raw(&z),
        degenerate: false,
    })
}
