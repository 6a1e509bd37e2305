//! First-passage time densities.
//!
//! The lower-boundary density factors as
//!
//! ```text
//! f(t | v, a, w) = a^-2 * exp(-v a w - v^2 tau / 2) * g(tau / a^2, w),   tau = t - t0
//! ```
//!
//! where `g` is the density of the standardized process (no drift, unit
//! separation). `g` has two convergent series: an image expansion that needs
//! few terms at small times and a Fourier expansion that needs few terms at
//! large times. The regime is picked by comparing the term counts each series
//! needs to reach an absolute error of `1e-7` on `f`; the chosen series is
//! then summed until further terms fall below double precision, so the log
//! density and its gradient are smooth enough for Hamiltonian dynamics.
//! Upper-boundary quantities follow by reflection (`v -> -v`, `w -> 1 - w`).

use std::f64::consts::PI;

use super::{Boundary, DdmParams};
use crate::error::{Error, Result};

const DENSITY_TOLERANCE: f64 = 1e-7;
const MAX_TERMS: usize = 400;
const TAIL_TOLERANCE: f64 = 1e-17;

/// Which series expansion evaluates the standardized density.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SeriesRegime {
    /// Pick by the term-count rule.
    Auto,
    SmallTime,
    LargeTime,
}

/// Log first-passage density at one boundary and its partial derivatives
/// with respect to the natural-scale parameters.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LogDensityGrad {
    pub log_density: f64,
    pub d_v: f64,
    pub d_a: f64,
    pub d_z: f64,
    pub d_t0: f64,
}

impl LogDensityGrad {
    fn rejected() -> Self {
        LogDensityGrad {
            log_density: f64::NEG_INFINITY,
            ..Default::default()
        }
    }

    pub fn is_finite(&self) -> bool {
        self.log_density.is_finite()
    }
}

/// `ln g(u, w)` with partials in `u` and `w`.
struct StandardLog {
    ln_g: f64,
    d_u: f64,
    d_w: f64,
}

/// Number of terms (small, large) each series needs for absolute error
/// `exp(ln_eps)` on the standardized density.
fn term_counts(u: f64, ln_eps: f64) -> (f64, f64) {
    let ln_small_arg = (2.0 * (2.0 * PI * u).sqrt()).ln() + ln_eps;
    let small = if ln_small_arg < 0.0 {
        (2.0 + (-2.0 * u * ln_small_arg).sqrt()).max(u.sqrt() + 1.0)
    } else {
        2.0
    };

    let large_floor = 1.0 / (PI * u.sqrt());
    let ln_large_arg = (PI * u).ln() + ln_eps;
    let large = if ln_large_arg < 0.0 {
        (-2.0 * ln_large_arg / (PI * PI * u)).sqrt().max(large_floor)
    } else {
        large_floor
    };
    (small, large)
}

/// Image expansion, normalized by its leading `exp(-w^2 / 2u)` factor.
fn small_time(u: f64, w: f64, min_pairs: usize) -> Option<StandardLog> {
    let mut s0 = w;
    let mut s1 = w * w * w;
    let mut s2 = 1.0 - w * w / u;
    let scale = 1.0 + 1.0 / (u * u);
    for n in 1..MAX_TERMS {
        let two_n = 2.0 * n as f64;
        let mut bound = 0.0_f64;
        for r in [w + two_n, w - two_n] {
            let e = (-(r * r - w * w) / (2.0 * u)).exp();
            s0 += r * e;
            s1 += r * r * r * e;
            s2 += (1.0 - r * r / u) * e;
            bound = bound.max(e * (1.0 + r.abs().powi(3)) * scale);
        }
        if n >= min_pairs && bound <= TAIL_TOLERANCE * s0.abs() {
            break;
        }
    }
    if !(s0 > 0.0) {
        return None;
    }
    Some(StandardLog {
        ln_g: -0.5 * (2.0 * PI).ln() - 1.5 * u.ln() - w * w / (2.0 * u) + s0.ln(),
        d_u: -1.5 / u + s1 / (2.0 * u * u * s0),
        d_w: s2 / s0,
    })
}

/// Fourier expansion, normalized by its leading `exp(-pi^2 u / 2)` factor.
fn large_time(u: f64, w: f64, min_terms: usize) -> Option<StandardLog> {
    let mut s0 = 0.0;
    let mut s1 = 0.0;
    let mut s2 = 0.0;
    for k in 1..=MAX_TERMS {
        let kf = k as f64;
        let e = (-(kf * kf - 1.0) * PI * PI * u / 2.0).exp();
        let (sin, cos) = (kf * PI * w).sin_cos();
        s0 += kf * e * sin;
        s1 -= kf * kf * kf * PI * PI / 2.0 * e * sin;
        s2 += kf * kf * PI * e * cos;
        if k >= min_terms && e * kf * kf * kf * PI * PI <= TAIL_TOLERANCE * s0.abs() {
            break;
        }
    }
    if !(s0 > 0.0) {
        return None;
    }
    Some(StandardLog {
        ln_g: PI.ln() - PI * PI * u / 2.0 + s0.ln(),
        d_u: s1 / s0,
        d_w: s2 / s0,
    })
}

/// Lower-boundary log density at decision time `tau > 0`. The returned
/// `d_z` is the partial in `w` and `d_t0` the partial in `t0`.
fn lower_log_density(v: f64, a: f64, w: f64, tau: f64, regime: SeriesRegime) -> LogDensityGrad {
    let u = tau / (a * a);
    let log_prefactor = -2.0 * a.ln() - v * a * w - v * v * tau / 2.0;
    let standard = match regime {
        SeriesRegime::SmallTime => small_time(u, w, 1),
        SeriesRegime::LargeTime => large_time(u, w, 1),
        SeriesRegime::Auto => {
            // absolute tolerance on f, transferred to g
            let ln_eps = DENSITY_TOLERANCE.ln() + (-log_prefactor).min(0.0);
            let (small, large) = term_counts(u, ln_eps);
            if small < large {
                small_time(u, w, ((small - 1.0) / 2.0).ceil().max(1.0) as usize)
            } else {
                large_time(u, w, large.ceil().max(1.0) as usize)
            }
        }
    };
    let Some(g) = standard else {
        return LogDensityGrad::rejected();
    };
    let log_density = log_prefactor + g.ln_g;
    if !log_density.is_finite() {
        return LogDensityGrad::rejected();
    }
    let d_tau = -v * v / 2.0 + g.d_u / (a * a);
    LogDensityGrad {
        log_density,
        d_v: -a * w - v * tau,
        d_a: -2.0 / a - v * w - 2.0 * u * g.d_u / a,
        d_z: -v * a + g.d_w,
        d_t0: -d_tau,
    }
}

fn log_density_grad_in(
    params: &DdmParams,
    t: f64,
    boundary: Boundary,
    regime: SeriesRegime,
) -> LogDensityGrad {
    let tau = t - params.t0;
    if !(tau > 0.0) {
        return LogDensityGrad::rejected();
    }
    match boundary {
        Boundary::Lower => lower_log_density(params.v, params.a, params.z, tau, regime),
        Boundary::Upper => {
            let g = lower_log_density(-params.v, params.a, 1.0 - params.z, tau, regime);
            LogDensityGrad {
                d_v: -g.d_v,
                d_z: -g.d_z,
                ..g
            }
        }
    }
}

/// Log density and gradient without parameter validation; the hot path of
/// the hierarchical likelihood. Returns `-inf` with a zero gradient when
/// `t <= t0`.
pub fn fpt_log_density_grad(params: &DdmParams, t: f64, boundary: Boundary) -> LogDensityGrad {
    log_density_grad_in(params, t, boundary, SeriesRegime::Auto)
}

/// Defective first-passage density at `boundary`, zero for `t <= t0`.
pub fn fpt_density(params: &DdmParams, t: f64, boundary: Boundary) -> Result<f64> {
    fpt_density_in(params, t, boundary, SeriesRegime::Auto)
}

/// [`fpt_density`] with an explicit series choice.
pub fn fpt_density_in(
    params: &DdmParams,
    t: f64,
    boundary: Boundary,
    regime: SeriesRegime,
) -> Result<f64> {
    params.validate()?;
    if !t.is_finite() {
        return Err(Error::Parameter(format!("time must be finite, got {t}")));
    }
    Ok(log_density_grad_in(params, t, boundary, regime)
        .log_density
        .exp())
}

/// Log likelihood of one response. A response faster than `t0` has zero
/// likelihood (`-inf`); a non-positive response time is a data error.
pub fn trial_log_likelihood(params: &DdmParams, choice: Boundary, rt: f64) -> Result<f64> {
    if !(rt > 0.0 && rt.is_finite()) {
        return Err(Error::Data(format!("response time must be positive, got {rt}")));
    }
    params.validate()?;
    Ok(fpt_log_density_grad(params, rt, choice).log_density)
}
