//! Euclidean metrics for the kinetic energy: diagonal or dense inverse
//! mass matrix.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricKind {
    #[default]
    Diag,
    Dense,
}

/// Inverse mass matrix. Kinetic energy is `p' M^-1 p / 2`.
#[derive(Clone, Debug, PartialEq)]
pub enum Metric {
    Diagonal(Vec<f64>),
    Dense {
        inv: DMatrix<f64>,
        /// Lower Cholesky factor of `inv`.
        chol: DMatrix<f64>,
    },
}

impl Metric {
    pub fn unit(dim: usize, kind: MetricKind) -> Self {
        match kind {
            MetricKind::Diag => Metric::Diagonal(vec![1.0; dim]),
            MetricKind::Dense => Metric::Dense {
                inv: DMatrix::identity(dim, dim),
                chol: DMatrix::identity(dim, dim),
            },
        }
    }

    /// Dense metric from a covariance estimate; falls back to its diagonal
    /// when the matrix is not positive definite.
    pub fn dense(inv: DMatrix<f64>) -> Self {
        match inv.clone().cholesky() {
            Some(c) => Metric::Dense { chol: c.l(), inv },
            None => Metric::Diagonal(inv.diagonal().iter().copied().collect()),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Metric::Diagonal(d) => d.len(),
            Metric::Dense { inv, .. } => inv.nrows(),
        }
    }

    /// Diagonal of the inverse metric.
    pub fn inverse_diagonal(&self) -> Vec<f64> {
        match self {
            Metric::Diagonal(d) => d.clone(),
            Metric::Dense { inv, .. } => inv.diagonal().iter().copied().collect(),
        }
    }

    /// `M^-1 p`.
    pub fn velocity(&self, p: &[f64]) -> Vec<f64> {
        match self {
            Metric::Diagonal(d) => p.iter().zip(d).map(|(p, m)| p * m).collect(),
            Metric::Dense { inv, .. } => (inv * DVector::from_column_slice(p)).as_slice().to_vec(),
        }
    }

    pub fn kinetic(&self, p: &[f64]) -> f64 {
        match self {
            Metric::Diagonal(d) => 0.5 * p.iter().zip(d).map(|(p, m)| p * p * m).sum::<f64>(),
            Metric::Dense { .. } => {
                0.5 * p.iter().zip(self.velocity(p)).map(|(a, b)| a * b).sum::<f64>()
            }
        }
    }

    /// Draws `p ~ N(0, M)` into `p`.
    pub fn sample_momentum<R: Rng + ?Sized>(&self, p: &mut [f64], rng: &mut R) {
        for x in p.iter_mut() {
            *x = rng.sample(StandardNormal);
        }
        match self {
            Metric::Diagonal(d) => {
                for (x, m) in p.iter_mut().zip(d) {
                    *x /= m.sqrt();
                }
            }
            Metric::Dense { chol, .. } => {
                // M = L^-T L^-1, so L^-T z has covariance M
                let z = DVector::from_column_slice(p);
                let x = chol
                    .tr_solve_lower_triangular(&z)
                    .expect("Cholesky factor has a positive diagonal");
                p.copy_from_slice(x.as_slice());
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::stream_rng;

    #[test]
    fn dense_momentum_has_metric_covariance() {
        let inv = DMatrix::from_row_slice(2, 2, &[2.0, 0.9, 0.9, 1.0]);
        let m = Metric::dense(inv.clone());
        let target = inv.try_inverse().unwrap();
        let mut rng = stream_rng(4, 0);
        let n = 200_000;
        let mut acc = [0.0; 3];
        let mut p = [0.0; 2];
        for _ in 0..n {
            m.sample_momentum(&mut p, &mut rng);
            acc[0] += p[0] * p[0];
            acc[1] += p[0] * p[1];
            acc[2] += p[1] * p[1];
        }
        let est = [acc[0] / n as f64, acc[1] / n as f64, acc[2] / n as f64];
        assert!((est[0] - target[(0, 0)]).abs() < 0.03);
        assert!((est[1] - target[(0, 1)]).abs() < 0.03);
        assert!((est[2] - target[(1, 1)]).abs() < 0.03);
    }

    #[test]
    fn dense_identity_matches_diagonal() {
        let p = [0.3, -1.0, 2.0];
        let a = Metric::unit(3, MetricKind::Diag);
        let b = Metric::unit(3, MetricKind::Dense);
        assert!((a.kinetic(&p) - b.kinetic(&p)).abs() < 1e-15);
        assert_eq!(a.velocity(&p), b.velocity(&p));
    }

    #[test]
    fn indefinite_falls_back_to_diagonal() {
        let inv = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert_eq!(Metric::dense(inv), Metric::Diagonal(vec![1.0, 1.0]));
    }
}
