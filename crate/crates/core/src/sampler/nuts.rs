//! Leapfrog integration, the No-U-Turn transition (multinomial sampling
//! from the trajectory, generalized U-turn criterion checked across
//! subtrees) and a fixed-length HMC transition.

use rand::Rng;

use super::metric::Metric;
use super::LogDensity;
use crate::math::log_add_exp;

/// Energy error beyond which a trajectory is declared divergent.
pub const MAX_ENERGY_ERROR: f64 = 1000.0;

#[derive(Clone, Debug)]
pub struct PhasePoint {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
    pub grad: Vec<f64>,
    pub log_density: f64,
}

impl PhasePoint {
    pub fn new<T: LogDensity + ?Sized>(target: &T, q: Vec<f64>) -> Self {
        let mut grad = vec![0.0; q.len()];
        let log_density = target.log_density_grad(&q, &mut grad);
        let p = vec![0.0; q.len()];
        PhasePoint {
            q,
            p,
            grad,
            log_density,
        }
    }

    pub fn kinetic(&self, metric: &Metric) -> f64 {
        metric.kinetic(&self.p)
    }

    /// `-log p(q) + kinetic`, infinite outside the support.
    pub fn hamiltonian(&self, metric: &Metric) -> f64 {
        let h = -self.log_density + self.kinetic(metric);
        if h.is_nan() {
            f64::INFINITY
        } else {
            h
        }
    }

    pub fn velocity(&self, metric: &Metric) -> Vec<f64> {
        metric.velocity(&self.p)
    }

    pub fn refresh_momentum<R: Rng + ?Sized>(&mut self, metric: &Metric, rng: &mut R) {
        metric.sample_momentum(&mut self.p, rng);
    }

    pub fn leapfrog<T: LogDensity + ?Sized>(&mut self, target: &T, metric: &Metric, eps: f64) {
        let half = 0.5 * eps;
        for (p, g) in self.p.iter_mut().zip(&self.grad) {
            *p += half * g;
        }
        for (q, v) in self.q.iter_mut().zip(metric.velocity(&self.p)) {
            *q += eps * v;
        }
        self.log_density = target.log_density_grad(&self.q, &mut self.grad);
        if !self.log_density.is_finite() {
            self.log_density = f64::NEG_INFINITY;
            return;
        }
        for (p, g) in self.p.iter_mut().zip(&self.grad) {
            *p += half * g;
        }
    }
}

/// `n_steps` leapfrog steps from `state` (momentum taken as given).
pub fn leapfrog<T: LogDensity + ?Sized>(
    target: &T,
    state: &PhasePoint,
    eps: f64,
    metric: &Metric,
    n_steps: usize,
) -> PhasePoint {
    let mut z = state.clone();
    for _ in 0..n_steps {
        z.leapfrog(target, metric, eps);
    }
    z
}

/// Per-iteration statistics.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct TransitionStats {
    pub log_density: f64,
    pub accept_stat: f64,
    pub step_size: f64,
    pub tree_depth: usize,
    pub n_leapfrog: usize,
    pub divergent: bool,
    pub energy: f64,
}

struct Trajectory<'a, T: ?Sized, R: ?Sized> {
    target: &'a T,
    metric: &'a Metric,
    eps: f64,
    h0: f64,
    rng: &'a mut R,
    n_leapfrog: usize,
    sum_metro_prob: f64,
    divergent: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

fn no_u_turn(p_sharp_minus: &[f64], p_sharp_plus: &[f64], rho: &[f64]) -> bool {
    dot(p_sharp_plus, rho) > 0.0 && dot(p_sharp_minus, rho) > 0.0
}

/// Edge quantities of a (sub)trajectory in the direction of integration.
struct Edge {
    p_sharp_beg: Vec<f64>,
    p_sharp_end: Vec<f64>,
    p_beg: Vec<f64>,
    p_end: Vec<f64>,
    rho: Vec<f64>,
    log_sum_weight: f64,
}

impl<T: LogDensity + ?Sized, R: Rng + ?Sized> Trajectory<'_, T, R> {
    /// Extends `z` by `2^depth` leapfrog steps. Returns `None` on divergence
    /// or an internal U-turn, else the subtree edges and its proposal.
    fn build(&mut self, z: &mut PhasePoint, depth: usize, sign: f64) -> Option<(Edge, PhasePoint)> {
        if depth == 0 {
            z.leapfrog(self.target, self.metric, sign * self.eps);
            self.n_leapfrog += 1;
            let h = z.hamiltonian(self.metric);
            if h - self.h0 > MAX_ENERGY_ERROR {
                self.divergent = true;
            }
            let log_w = self.h0 - h;
            self.sum_metro_prob += if log_w > 0.0 { 1.0 } else { log_w.exp() };
            if self.divergent {
                return None;
            }
            let p_sharp = z.velocity(self.metric);
            let edge = Edge {
                p_sharp_beg: p_sharp.clone(),
                p_sharp_end: p_sharp,
                p_beg: z.p.clone(),
                p_end: z.p.clone(),
                rho: z.p.clone(),
                log_sum_weight: log_w,
            };
            return Some((edge, z.clone()));
        }

        let (init, mut propose) = self.build(z, depth - 1, sign)?;
        let (last, propose_final) = self.build(z, depth - 1, sign)?;

        let log_sum_weight = log_add_exp(init.log_sum_weight, last.log_sum_weight);
        let accept = if last.log_sum_weight > log_sum_weight {
            true
        } else {
            self.rng.random::<f64>() < (last.log_sum_weight - log_sum_weight).exp()
        };
        if accept {
            propose = propose_final;
        }

        let rho = add(&init.rho, &last.rho);
        let mut persist = no_u_turn(&init.p_sharp_beg, &last.p_sharp_end, &rho);
        persist &= no_u_turn(&init.p_sharp_beg, &last.p_sharp_beg, &add(&init.rho, &last.p_beg));
        persist &= no_u_turn(&init.p_sharp_end, &last.p_sharp_end, &add(&last.rho, &init.p_end));
        if !persist {
            return None;
        }
        Some((
            Edge {
                p_sharp_beg: init.p_sharp_beg,
                p_sharp_end: last.p_sharp_end,
                p_beg: init.p_beg,
                p_end: last.p_end,
                rho,
                log_sum_weight,
            },
            propose,
        ))
    }
}

/// One NUTS transition from `current` (whose momentum is resampled).
pub fn nuts_transition<T, R>(
    target: &T,
    current: &PhasePoint,
    metric: &Metric,
    eps: f64,
    max_depth: usize,
    rng: &mut R,
) -> (PhasePoint, TransitionStats)
where
    T: LogDensity + ?Sized,
    R: Rng + ?Sized,
{
    let mut z0 = current.clone();
    z0.refresh_momentum(metric, rng);
    let h0 = z0.hamiltonian(metric);

    let mut fwd = z0.clone();
    let mut bck = z0.clone();
    let v0 = z0.velocity(metric);
    // edges of the whole trajectory: (sharp, plain) momentum at each end
    let (mut ps_fwd, mut p_fwd) = (v0.clone(), z0.p.clone());
    let (mut ps_bck, mut p_bck) = (v0, z0.p.clone());
    let mut rho = z0.p.clone();
    let mut log_sum_weight = 0.0;
    let mut sample = z0.clone();
    let mut depth = 0;

    let mut traj = Trajectory {
        target,
        metric,
        eps,
        h0,
        rng,
        n_leapfrog: 0,
        sum_metro_prob: 0.0,
        divergent: false,
    };

    while depth < max_depth {
        let forward = traj.rng.random::<f64>() > 0.5;
        let result = if forward {
            traj.build(&mut fwd, depth, 1.0)
        } else {
            traj.build(&mut bck, depth, -1.0)
        };
        let Some((edge, propose)) = result else {
            break;
        };
        depth += 1;

        if edge.log_sum_weight > log_sum_weight
            || traj.rng.random::<f64>() < (edge.log_sum_weight - log_sum_weight).exp()
        {
            sample = propose;
        }
        log_sum_weight = log_add_exp(log_sum_weight, edge.log_sum_weight);

        // the subtree extends the trajectory on one side; its "beginning"
        // touches the old edge, its "end" becomes the new edge
        let (rho_bck, rho_fwd, ps_bck_inner, p_bck_inner, ps_fwd_inner, p_fwd_inner);
        if forward {
            rho_bck = rho.clone();
            rho_fwd = edge.rho;
            ps_bck_inner = ps_fwd.clone();
            p_bck_inner = p_fwd.clone();
            ps_fwd_inner = edge.p_sharp_beg;
            p_fwd_inner = edge.p_beg;
            ps_fwd = edge.p_sharp_end;
            p_fwd = edge.p_end;
        } else {
            rho_fwd = rho.clone();
            rho_bck = edge.rho;
            ps_fwd_inner = ps_bck.clone();
            p_fwd_inner = p_bck.clone();
            ps_bck_inner = edge.p_sharp_beg;
            p_bck_inner = edge.p_beg;
            ps_bck = edge.p_sharp_end;
            p_bck = edge.p_end;
        }
        rho = add(&rho_bck, &rho_fwd);
        let mut persist = no_u_turn(&ps_bck, &ps_fwd, &rho);
        persist &= no_u_turn(&ps_bck, &ps_fwd_inner, &add(&rho_bck, &p_fwd_inner));
        persist &= no_u_turn(&ps_bck_inner, &ps_fwd, &add(&rho_fwd, &p_bck_inner));
        if !persist {
            break;
        }
    }

    let n = traj.n_leapfrog.max(1);
    let stats = TransitionStats {
        log_density: sample.log_density,
        accept_stat: traj.sum_metro_prob / n as f64,
        step_size: eps,
        tree_depth: depth,
        n_leapfrog: traj.n_leapfrog,
        divergent: traj.divergent,
        energy: sample.hamiltonian(metric),
    };
    (sample, stats)
}

/// Metropolis-corrected leapfrog trajectory of fixed length.
pub fn hmc_transition<T, R>(
    target: &T,
    current: &PhasePoint,
    metric: &Metric,
    eps: f64,
    steps: usize,
    rng: &mut R,
) -> (PhasePoint, TransitionStats)
where
    T: LogDensity + ?Sized,
    R: Rng + ?Sized,
{
    let mut z = current.clone();
    z.refresh_momentum(metric, rng);
    let h0 = z.hamiltonian(metric);
    let mut divergent = false;
    let mut n = 0;
    for _ in 0..steps.max(1) {
        z.leapfrog(target, metric, eps);
        n += 1;
        if z.hamiltonian(metric) - h0 > MAX_ENERGY_ERROR {
            divergent = true;
            break;
        }
    }
    let h = z.hamiltonian(metric);
    let accept_stat = if divergent { 0.0 } else { (h0 - h).exp().min(1.0) };
    let accepted = !divergent && rng.random::<f64>() < accept_stat;
    let next = if accepted { z } else { current.clone() };
    let stats = TransitionStats {
        log_density: next.log_density,
        accept_stat,
        step_size: eps,
        tree_depth: 0,
        n_leapfrog: n,
        divergent,
        energy: if accepted { h } else { h0 },
    };
    (next, stats)
}

/// Doubling/halving search for a step size whose single leapfrog step has
/// an acceptance probability near 0.8.
pub fn initial_step_size<T, R>(
    target: &T,
    at: &PhasePoint,
    metric: &Metric,
    start: f64,
    rng: &mut R,
) -> f64
where
    T: LogDensity + ?Sized,
    R: Rng + ?Sized,
{
    let mut eps = start;
    let mut direction = 0.0;
    for _ in 0..100 {
        let mut z = at.clone();
        z.refresh_momentum(metric, rng);
        let h0 = z.hamiltonian(metric);
        z.leapfrog(target, metric, eps);
        let h = z.hamiltonian(metric);
        let delta = h0 - h;
        let d = if delta > 0.8f64.ln() { 1.0 } else { -1.0 };
        if direction == 0.0 {
            direction = d;
        } else if d != direction {
            break;
        }
        eps = if direction > 0.0 { 2.0 * eps } else { 0.5 * eps };
        if !(1e-8..=1e7).contains(&eps) {
            break;
        }
    }
    eps.clamp(1e-8, 1e7)
}
