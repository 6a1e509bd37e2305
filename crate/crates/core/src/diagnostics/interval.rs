use crate::error::{Error, Result};

pub const MIN_HDI_DRAWS: usize = 100;

/// Highest density interval: the narrowest window of `ceil(mass * N)`
/// consecutive sorted draws. Assumes a unimodal marginal.
pub fn hdi(draws: &[f64], mass: f64) -> Result<(f64, f64)> {
    if !(mass > 0.0 && mass < 1.0) {
        return Err(Error::Parameter(format!("HDI mass must be in (0, 1), got {mass}")));
    }
    if draws.len() < MIN_HDI_DRAWS {
        return Err(Error::Analysis(format!(
            "HDI needs at least {MIN_HDI_DRAWS} draws, got {}",
            draws.len()
        )));
    }
    if draws.iter().any(|x| x.is_nan()) {
        return Err(Error::Analysis("draws contain NaN".into()));
    }
    let mut sorted = draws.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let window = ((mass * n as f64).ceil() as usize).clamp(1, n);
    let span = window - 1;
    let (mut best, mut best_width) = (0, f64::INFINITY);
    for i in 0..n - span {
        let w = sorted[i + span] - sorted[i];
        if w < best_width {
            best_width = w;
            best = i;
        }
    }
    Ok((sorted[best], sorted[best + span]))
}
