//! Absorption probabilities and defective first-passage distribution
//! functions.

use std::f64::consts::PI;

use super::{Boundary, DdmParams};
use crate::error::{Error, Result};
use crate::math::{ln_normal_cdf, log_add_exp};

/// Below this standardized time (`tau / a^2`) the image expansion is used;
/// above it the Fourier expansion. Both need fewer than ten terms at the
/// switch.
const CDF_SWITCH: f64 = 0.6;
const MAX_TERMS: usize = 400;

/// Probability of absorption at the upper (Human) boundary.
pub fn choice_probability(params: &DdmParams) -> f64 {
    upper_probability(params.v, params.a, params.z)
}

fn upper_probability(v: f64, a: f64, z: f64) -> f64 {
    let x = 2.0 * v * a;
    if x.abs() < 1e-12 {
        return z;
    }
    if v > 0.0 {
        (-x * z).exp_m1() / (-x).exp_m1()
    } else {
        // multiply through by exp(2va) to keep every exponent non-positive
        let y = -x;
        (-y * (1.0 - z)).exp() * (-y * z).exp_m1() / (-y).exp_m1()
    }
}

pub(super) fn lower_probability(v: f64, a: f64, w: f64) -> f64 {
    upper_probability(-v, a, 1.0 - w)
}

/// Defective distribution function `P(T + t0 <= t, boundary)`.
///
/// Tends to [`choice_probability`] (or its complement) as `t -> inf`.
pub fn fpt_cdf(params: &DdmParams, t: f64, boundary: Boundary) -> Result<f64> {
    params.validate()?;
    if t.is_nan() {
        return Err(Error::Parameter("time must not be NaN".into()));
    }
    let tau = t - params.t0;
    if tau <= 0.0 {
        return Ok(0.0);
    }
    Ok(match boundary {
        Boundary::Lower => lower_cdf(params.v, params.a, params.z, tau),
        Boundary::Upper => lower_cdf(-params.v, params.a, 1.0 - params.z, tau),
    })
}

/// Lower-boundary defective CDF at decision time `tau`.
pub(super) fn lower_cdf(v: f64, a: f64, w: f64, tau: f64) -> f64 {
    if tau <= 0.0 {
        return 0.0;
    }
    if tau == f64::INFINITY {
        return lower_probability(v, a, w);
    }
    let total = lower_probability(v, a, w);
    let f = if tau / (a * a) < CDF_SWITCH {
        small_time_cdf(v, a, w, tau)
    } else {
        total - large_time_cdf_tail(v, a, w, tau)
    };
    f.clamp(0.0, total)
}

/// Method of images: each image at signed distance `c` contributes the
/// (defective) inverse-Gaussian distribution function of a crossing at
/// `|c|`, reweighted by the drift's change of measure.
fn small_time_cdf(v: f64, a: f64, w: f64, tau: f64) -> f64 {
    let x0 = w * a;
    let sqrt_tau = tau.sqrt();
    let image = |k: f64| -> f64 {
        let c = x0 + 2.0 * k * a;
        let sign = c.signum();
        let m = c.abs();
        let mu = -v * sign;
        let first = ln_normal_cdf((mu * tau - m) / sqrt_tau);
        let second = 2.0 * mu * m + ln_normal_cdf((-mu * tau - m) / sqrt_tau);
        sign * (2.0 * v * k * a + log_add_exp(first, second)).exp()
    };
    let mut sum = image(0.0);
    for n in 1..MAX_TERMS {
        let k = n as f64;
        let group = image(k) + image(-k);
        sum += group;
        if n >= 2 && group.abs() <= 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

/// Survival mass `P(T > tau, lower)` from the Fourier expansion.
fn large_time_cdf_tail(v: f64, a: f64, w: f64, tau: f64) -> f64 {
    let x0 = w * a;
    let mut sum = 0.0;
    for k in 1..=MAX_TERMS {
        let kf = k as f64;
        let lambda = v * v / 2.0 + kf * kf * PI * PI / (2.0 * a * a);
        let e = (-v * x0 - lambda * tau).exp();
        let term = kf * (kf * PI * w).sin() * e / lambda;
        sum += term;
        if k >= 2 && e * kf / lambda <= 1e-17 * sum.abs().max(1e-300) {
            break;
        }
    }
    PI / (a * a) * sum
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn driftless_limit() {
        for a in [0.5, 1.0, 3.0, 10.0] {
            let p = DdmParams::new(0.0, a, 0.3, 0.0).unwrap();
            assert_eq!(choice_probability(&p), 0.3);
        }
        // continuity through v = 0
        let near = DdmParams::new(1e-9, 2.0, 0.3, 0.0).unwrap();
        assert!((choice_probability(&near) - 0.3).abs() < 1e-8);
    }

    #[test]
    fn condition_mean_choice_probabilities() {
        // closed form evaluated by hand:
        // (1 - e^{-2vza}) / (1 - e^{-2va})
        let epi = DdmParams::new(-1.26, 2.94, 0.52, 2.4).unwrap();
        let x: f64 = 2.0 * 1.26 * 2.94;
        let expected = ((x * 0.52).exp() - 1.0) / (x.exp() - 1.0);
        assert!((choice_probability(&epi) - expected).abs() < 1e-14);
        assert!((choice_probability(&epi) - 0.028).abs() < 0.001);

        let soc = DdmParams::new(0.70, 3.37, 0.52, 2.4).unwrap();
        assert!((choice_probability(&soc) - 0.922).abs() < 0.001);
    }

    #[test]
    fn extreme_drifts_do_not_overflow() {
        let p = DdmParams::new(-400.0, 5.0, 0.5, 0.0).unwrap();
        let q = choice_probability(&p);
        assert!(q >= 0.0 && q < 1e-300);
        let p = DdmParams::new(400.0, 5.0, 0.5, 0.0).unwrap();
        assert_eq!(choice_probability(&p), 1.0);
    }

    #[test]
    fn cdf_limits_and_monotonicity() {
        let p = DdmParams::new(0.7, 3.37, 0.52, 2.4).unwrap();
        let up = choice_probability(&p);
        assert_eq!(fpt_cdf(&p, 2.4, Boundary::Upper).unwrap(), 0.0);
        let far = fpt_cdf(&p, 500.0, Boundary::Upper).unwrap();
        assert!((far - up).abs() < 1e-12);
        let mut prev = 0.0;
        for i in 1..400 {
            let t = 2.4 + i as f64 * 0.05;
            let f = fpt_cdf(&p, t, Boundary::Upper).unwrap();
            assert!(f >= prev - 1e-15);
            prev = f;
        }
    }

    #[test]
    fn cdf_branches_meet_at_switch() {
        for &(v, a, w) in &[(-1.26, 2.94, 0.52), (0.7, 3.37, 0.52), (2.5, 1.0, 0.3), (-2.5, 5.0, 0.7)] {
            let tau = CDF_SWITCH * a * a;
            let s = small_time_cdf(v, a, w, tau);
            let l = lower_probability(v, a, w) - large_time_cdf_tail(v, a, w, tau);
            assert!((s - l).abs() < 1e-10, "{v} {a} {w}: {s} vs {l}");
        }
    }

    #[test]
    fn matches_quadrature_of_density() {
        // 30-digit quadrature of the image-series density over [0, 0.6 a^2]
        let (v, a, w) = (-1.26, 2.94, 0.52);
        let oracle = 0.970_503_197_075_793_6;
        let tau = CDF_SWITCH * a * a;
        assert!((small_time_cdf(v, a, w, tau) - oracle).abs() < 1e-10);
        let large = lower_probability(v, a, w) - large_time_cdf_tail(v, a, w, tau);
        assert!((large - oracle).abs() < 1e-13);
    }
}
