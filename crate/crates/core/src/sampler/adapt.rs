//! Warmup adaptation: dual averaging of the step size and windowed
//! estimation of a diagonal or dense inverse metric.

use nalgebra::{DMatrix, DVector};

use super::metric::{Metric, MetricKind};

/// Nesterov dual averaging on the log step size.
#[derive(Clone, Debug)]
pub struct DualAveraging {
    pub delta: f64,
    pub gamma: f64,
    pub t0: f64,
    pub kappa: f64,
    mu: f64,
    counter: f64,
    s_bar: f64,
    x_bar: f64,
}

impl DualAveraging {
    pub fn new(delta: f64) -> Self {
        DualAveraging {
            delta,
            gamma: 0.05,
            t0: 10.0,
            kappa: 0.75,
            mu: 0.0,
            counter: 0.0,
            s_bar: 0.0,
            x_bar: 0.0,
        }
    }

    /// Starts a new averaging run anchored at ten times `step_size`.
    pub fn restart(&mut self, step_size: f64) {
        self.mu = (10.0 * step_size).ln();
        self.counter = 0.0;
        self.s_bar = 0.0;
        self.x_bar = 0.0;
    }

    /// Feeds one acceptance statistic; returns the next step size.
    pub fn learn(&mut self, accept_stat: f64) -> f64 {
        let stat = if accept_stat.is_nan() { 0.0 } else { accept_stat.min(1.0) };
        self.counter += 1.0;
        let eta = 1.0 / (self.counter + self.t0);
        self.s_bar = (1.0 - eta) * self.s_bar + eta * (self.delta - stat);
        let x = self.mu - self.s_bar * self.counter.sqrt() / self.gamma;
        let x_eta = self.counter.powf(-self.kappa);
        self.x_bar = (1.0 - x_eta) * self.x_bar + x_eta * x;
        x.exp()
    }

    /// Averaged step size to use after warmup.
    pub fn final_step_size(&self) -> f64 {
        self.x_bar.exp()
    }
}

/// Running mean and variance.
#[derive(Clone, Debug)]
pub struct Welford {
    n: usize,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl Welford {
    pub fn new(dim: usize) -> Self {
        Welford {
            n: 0,
            mean: vec![0.0; dim],
            m2: vec![0.0; dim],
        }
    }

    pub fn add(&mut self, x: &[f64]) {
        self.n += 1;
        let n = self.n as f64;
        for ((m, s), &xi) in self.mean.iter_mut().zip(&mut self.m2).zip(x) {
            let d = xi - *m;
            *m += d / n;
            *s += d * (xi - *m);
        }
    }

    pub fn count(&self) -> usize {
        self.n
    }

    pub fn variance(&self) -> Vec<f64> {
        let denom = (self.n.max(2) - 1) as f64;
        self.m2.iter().map(|s| s / denom).collect()
    }

    pub fn reset(&mut self) {
        self.n = 0;
        self.mean.iter_mut().for_each(|m| *m = 0.0);
        self.m2.iter_mut().for_each(|m| *m = 0.0);
    }
}

/// Running mean and covariance.
#[derive(Clone, Debug)]
pub struct WelfordCov {
    n: usize,
    mean: DVector<f64>,
    m2: DMatrix<f64>,
}

impl WelfordCov {
    pub fn new(dim: usize) -> Self {
        WelfordCov {
            n: 0,
            mean: DVector::zeros(dim),
            m2: DMatrix::zeros(dim, dim),
        }
    }

    pub fn add(&mut self, x: &[f64]) {
        self.n += 1;
        let x = DVector::from_column_slice(x);
        let d = &x - &self.mean;
        self.mean += &d / self.n as f64;
        let d2 = x - &self.mean;
        self.m2.ger(1.0, &d, &d2, 1.0);
    }

    pub fn count(&self) -> usize {
        self.n
    }

    pub fn covariance(&self) -> DMatrix<f64> {
        &self.m2 / (self.n.max(2) - 1) as f64
    }

    pub fn reset(&mut self) {
        self.n = 0;
        self.mean.fill(0.0);
        self.m2.fill(0.0);
    }
}

#[derive(Clone, Debug)]
enum Estimator {
    Diag(Welford),
    Dense(WelfordCov),
}

/// Slow-phase metric windows: a fast initial buffer, doubling variance
/// windows, and a terminal step-size-only buffer.
#[derive(Clone, Debug)]
pub struct WindowSchedule {
    warmup: usize,
    init_buffer: usize,
    term_buffer: usize,
    window: usize,
    next_end: usize,
    counter: usize,
    estimator: Estimator,
}

impl WindowSchedule {
    pub fn new(dim: usize, warmup: usize) -> Self {
        Self::with_kind(dim, warmup, MetricKind::Diag)
    }

    pub fn with_kind(dim: usize, warmup: usize, kind: MetricKind) -> Self {
        let (mut init_buffer, mut term_buffer, mut window) = (75, 50, 25);
        if warmup < 20 {
            // too short for metric estimation; step size only
            init_buffer = warmup;
            term_buffer = 0;
            window = 0;
        } else if init_buffer + term_buffer + window > warmup {
            init_buffer = (0.15 * warmup as f64) as usize;
            term_buffer = (0.1 * warmup as f64) as usize;
            window = warmup - init_buffer - term_buffer;
        }
        WindowSchedule {
            warmup,
            init_buffer,
            term_buffer,
            window,
            next_end: (init_buffer + window).saturating_sub(1),
            counter: 0,
            estimator: match kind {
                MetricKind::Diag => Estimator::Diag(Welford::new(dim)),
                MetricKind::Dense => Estimator::Dense(WelfordCov::new(dim)),
            },
        }
    }

    fn in_window(&self) -> bool {
        self.window > 0
            && self.counter >= self.init_buffer
            && self.counter < self.warmup - self.term_buffer
            && self.counter != self.warmup
    }

    fn at_window_end(&self) -> bool {
        self.window > 0 && self.counter == self.next_end && self.counter != self.warmup
    }

    fn advance_window(&mut self) {
        let last = self.warmup - self.term_buffer - 1;
        if self.next_end == last {
            return;
        }
        self.window *= 2;
        self.next_end = self.counter + self.window;
        if self.next_end != last {
            let boundary = self.next_end + 2 * self.window;
            if boundary >= self.warmup - self.term_buffer {
                self.next_end = last;
            }
        }
    }

    /// Records a warmup position. Returns the regularized estimate,
    /// shrunk toward `1e-3 I`, when a window closes. A dense estimate from
    /// no more draws than dimensions is reduced to its diagonal.
    pub fn observe(&mut self, q: &[f64]) -> Option<Metric> {
        if self.in_window() {
            match &mut self.estimator {
                Estimator::Diag(w) => w.add(q),
                Estimator::Dense(w) => w.add(q),
            }
        }
        let out = if self.at_window_end() {
            self.advance_window();
            Some(match &mut self.estimator {
                Estimator::Diag(w) => {
                    let n = w.count() as f64;
                    let var = w
                        .variance()
                        .into_iter()
                        .map(|v| (n / (n + 5.0)) * v + 1e-3 * (5.0 / (n + 5.0)))
                        .collect();
                    w.reset();
                    Metric::Diagonal(var)
                }
                Estimator::Dense(w) => {
                    let n = w.count() as f64;
                    let mut cov = w.covariance() * (n / (n + 5.0));
                    for i in 0..cov.nrows() {
                        cov[(i, i)] += 1e-3 * (5.0 / (n + 5.0));
                    }
                    w.reset();
                    if n as usize > cov.nrows() {
                        Metric::dense(cov)
                    } else {
                        // too few draws for a full-rank estimate
                        Metric::Diagonal(cov.diagonal().iter().copied().collect())
                    }
                }
            })
        } else {
            None
        };
        self.counter += 1;
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn welford_matches_two_pass() {
        let xs = [1.0, 4.0, -2.0, 7.5, 3.25];
        let mut w = Welford::new(1);
        for x in xs {
            w.add(&[x]);
        }
        let mean = xs.iter().sum::<f64>() / 5.0;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 4.0;
        assert!((w.variance()[0] - var).abs() < 1e-12);
    }

    #[test]
    fn covariance_matches_two_pass() {
        let xs = [[1.0, 2.0], [4.0, -1.0], [-2.0, 0.5], [7.5, 3.0]];
        let mut w = WelfordCov::new(2);
        for x in &xs {
            w.add(x);
        }
        let m: Vec<f64> = (0..2).map(|j| xs.iter().map(|x| x[j]).sum::<f64>() / 4.0).collect();
        let c01 = xs.iter().map(|x| (x[0] - m[0]) * (x[1] - m[1])).sum::<f64>() / 3.0;
        assert!((w.covariance()[(0, 1)] - c01).abs() < 1e-12);
        assert!((w.covariance()[(1, 0)] - c01).abs() < 1e-12);
    }

    #[test]
    fn short_dense_windows_fall_back_to_diagonal() {
        let mut w = WindowSchedule::with_kind(40, 1000, MetricKind::Dense);
        use rand::Rng;
        let mut rng = crate::exec::stream_rng(2, 0);
        let mut kinds = Vec::new();
        for _ in 0..1000 {
            let q: Vec<f64> = (0..40).map(|_| rng.sample(rand_distr::StandardNormal)).collect();
            if let Some(m) = w.observe(&q) {
                kinds.push(matches!(m, Metric::Dense { .. }));
            }
        }
        // windows of 25 draws stay diagonal, 50 and up are dense
        assert_eq!(kinds, [false, true, true, true, true]);
    }

    #[test]
    fn windows_cover_default_warmup() {
        let mut s = WindowSchedule::new(1, 1000);
        let ends: Vec<usize> = (0..1000)
            .filter_map(|i| s.observe(&[i as f64]).map(|_| i))
            .collect();
        assert_eq!(ends, vec![99, 149, 249, 449, 949]);
    }

    #[test]
    fn dual_averaging_moves_toward_target() {
        let mut da = DualAveraging::new(0.8);
        da.restart(1.0);
        // always accepting: step size should grow
        let mut eps = 1.0;
        for _ in 0..50 {
            eps = da.learn(1.0);
        }
        assert!(eps > 1.0);
        da.restart(1.0);
        for _ in 0..50 {
            eps = da.learn(0.0);
        }
        assert!(eps < 1.0);
    }
}
