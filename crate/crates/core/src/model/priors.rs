use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use statrs::function::beta::ln_beta;

use super::params::{GroupSd, ParameterLayout};
use crate::error::{Error, Result};
use crate::math::{ln_normal_cdf, logistic, softplus};

/// Weakly informative priors on the natural scale of each population
/// parameter. Half-normal priors are normals truncated at zero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PriorConfig {
    /// Normal prior on the drift intercept.
    pub v_mean: f64,
    pub v_sd: f64,
    /// Truncated normal on the boundary intercept (natural scale).
    pub a_loc: f64,
    pub a_scale: f64,
    /// Half-normal on the non-decision time intercept (seconds).
    pub t_scale: f64,
    /// Beta prior on the relative starting point.
    pub z_alpha: f64,
    pub z_beta: f64,
    /// Half-normal on every group standard deviation.
    pub group_sd_scale: f64,
}

impl Default for PriorConfig {
    fn default() -> Self {
        PriorConfig {
            v_mean: 0.0,
            v_sd: 1.0,
            a_loc: 1.0,
            a_scale: 2.0,
            t_scale: 1.0,
            z_alpha: 2.0,
            z_beta: 2.0,
            group_sd_scale: 0.5,
        }
    }
}

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

fn ln_normal(x: f64, mean: f64, sd: f64) -> f64 {
    let r = (x - mean) / sd;
    -0.5 * r * r - sd.ln() - LN_SQRT_2PI
}

/// Log density of a normal truncated to the positive half-line.
fn ln_positive_normal(x: f64, loc: f64, scale: f64) -> f64 {
    ln_normal(x, loc, scale) - ln_normal_cdf(loc / scale)
}

impl PriorConfig {
    pub fn validate(&self) -> Result<()> {
        let scales = [
            ("v_sd", self.v_sd),
            ("a_scale", self.a_scale),
            ("t_scale", self.t_scale),
            ("z_alpha", self.z_alpha),
            ("z_beta", self.z_beta),
            ("group_sd_scale", self.group_sd_scale),
        ];
        for (name, s) in scales {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::Config(format!("prior {name} must be positive, got {s}")));
            }
        }
        if !self.v_mean.is_finite() || !self.a_loc.is_finite() {
            return Err(Error::Config("prior locations must be finite".into()));
        }
        Ok(())
    }

    /// Log prior density of the unconstrained vector, including the Jacobians
    /// of the link functions, accumulating its gradient into `grad`.
    pub fn log_density_grad(&self, layout: &ParameterLayout, x: &[f64], grad: &mut [f64]) -> f64 {
        use ParameterLayout as L;
        let mut lp = 0.0;

        let bv = x[L::BETA0_V];
        lp += ln_normal(bv, self.v_mean, self.v_sd);
        grad[L::BETA0_V] -= (bv - self.v_mean) / (self.v_sd * self.v_sd);

        // positive intercepts: prior on softplus(beta) plus log-logistic Jacobian
        for (idx, loc, scale) in [
            (L::BETA0_A, self.a_loc, self.a_scale),
            (L::BETA0_T, 0.0, self.t_scale),
        ] {
            let b = x[idx];
            let natural = softplus(b);
            let slope = logistic(b);
            lp += ln_positive_normal(natural, loc, scale) - softplus(-b);
            grad[idx] += -(natural - loc) / (scale * scale) * slope + (1.0 - slope);
        }

        let bz = x[L::BETA0_Z];
        let z = logistic(bz);
        // Beta(alpha, beta) on z plus ln z(1-z) Jacobian
        lp += self.z_alpha * -softplus(-bz) + self.z_beta * -softplus(bz)
            - ln_beta(self.z_alpha, self.z_beta);
        grad[L::BETA0_Z] += self.z_alpha * (1.0 - z) - self.z_beta * z;

        let std_start = 4;
        let std_end = layout.log_sigma(GroupSd::DriftSubject);
        for i in std_start..std_end {
            lp += -0.5 * x[i] * x[i] - LN_SQRT_2PI;
            grad[i] -= x[i];
        }

        let c = self.group_sd_scale;
        for g in GroupSd::ALL {
            let i = layout.log_sigma(g);
            let sigma = x[i].exp();
            // half-normal(c) on sigma, log-scale Jacobian
            lp += -0.5 * (sigma / c).powi(2) - c.ln() + 0.5 * (2.0 / PI).ln() + x[i];
            grad[i] += -(sigma * sigma) / (c * c) + 1.0;
        }
        lp
    }
}
