//! Monte Carlo estimates of extreme hitting probabilities, by inversion
//! sampling from a tabulation and by direct path simulation.
//!
//! Every trial draws from its own ChaCha stream indexed by the trial number,
//! so estimates do not depend on how trials are spread over threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::scenario::ScenarioSpec;
use crate::tabulation::TabulatedDistribution;

/// A reproducible random stream: the same `(seed, stream_id)` always yields
/// the same sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }
}

/// Frequency estimate with a 95% Wilson interval. `k = None` stands for
/// "no searcher ever hits".
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub samples: u64,
    pub n: u64,
    pub k: Option<usize>,
}

const Z95: f64 = 1.959963984540054;

impl McEstimate {
    pub fn wilson(hits: u64, samples: u64, n: u64, k: Option<usize>) -> Self {
        let m = samples as f64;
        let p = hits as f64 / m;
        let z2 = Z95 * Z95;
        let centre = (p + z2 / (2.0 * m)) / (1.0 + z2 / m);
        let half = Z95 / (1.0 + z2 / m) * (p * (1.0 - p) / m + z2 / (4.0 * m * m)).sqrt();
        Self {
            p_hat: p,
            ci_low: (centre - half).clamp(0.0, p),
            ci_high: (centre + half).clamp(p, 1.0),
            samples,
            n,
            k,
        }
    }

    pub fn contains(&self, p: f64) -> bool {
        self.ci_low <= p && p <= self.ci_high
    }
}

/// Inverts the total CDF at `u`: the cell index `i` with
/// `F(t_i) < u <= F(t_{i+1})`, or `len - 1` when `u` lies beyond the grid.
fn locate(tab: &TabulatedDistribution, u: f64) -> usize {
    tab.total().partition_point(|&f| f < u).max(1) - 1
}

/// Draws a target for a searcher whose total CDF value is `u`, from the
/// per-target increments of the cell that contains it.
fn draw_target<R: Rng>(tab: &TabulatedDistribution, cell: usize, rng: &mut R) -> Option<usize> {
    let m = tab.target_count();
    let len = tab.times().len();
    let incr = |k: usize| -> f64 {
        let col = tab.target(k);
        if cell + 1 < len {
            (col[cell + 1] - col[cell]).max(0.0)
        } else {
            (tab.tail_mass()[k] - col[len - 1]).max(0.0)
        }
    };
    let weights: Vec<f64> = (0..m).map(incr).collect();
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        // Degenerate cell: fall back to the cumulative split.
        let fallback: Vec<f64> = (0..m).map(|k| tab.tail_mass()[k]).collect();
        return pick(&fallback, rng);
    }
    pick(&weights, rng)
}

fn pick<R: Rng>(weights: &[f64], rng: &mut R) -> Option<usize> {
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return None;
    }
    let mut v = rng.gen::<f64>() * total;
    for (k, w) in weights.iter().enumerate() {
        if v < *w {
            return Some(k);
        }
        v -= w;
    }
    weights.iter().rposition(|w| *w > 0.0)
}

/// Time at which the total CDF reaches `u` inside `cell`: `ln F` is
/// interpolated linearly in `ln t`, which is monotone and exact for power
/// laws. Beyond the grid the survival is continued exponentially with the
/// last cell's hazard.
fn invert_time(tab: &TabulatedDistribution, cell: usize, u: f64) -> f64 {
    let t = tab.times();
    let lf = tab.log_total();
    let len = t.len();
    if cell + 1 >= len {
        let (s0, s1) = (tab.log_survival(len - 2), tab.log_survival(len - 1));
        let rate = (s0 - s1) / (t[len - 1] - t[len - 2]);
        let drop = s1 - (1.0 - u).ln();
        return if rate > 0.0 { t[len - 1] + drop.max(0.0) / rate } else { t[len - 1] };
    }
    if cell == 0 {
        // First cell [0, t_1]: continue the slope of the next cell.
        let slope = (lf[2] - lf[1]) / (t[2] / t[1]).ln();
        return if slope > 0.0 { t[1] * ((u.ln() - lf[1]) / slope).exp() } else { t[1] * u / lf[1].exp() };
    }
    let (a, b) = (lf[cell], lf[cell + 1]);
    let frac = if b > a { ((u.ln() - a) / (b - a)).clamp(0.0, 1.0) } else { 1.0 };
    (t[cell].ln() + frac * (t[cell + 1] / t[cell]).ln()).exp()
}

/// One draw of `(tau, kappa)` from a tabulation. Escapes give
/// `(inf, None)`.
pub fn sample_tau_kappa(tab: &TabulatedDistribution, stream: RngStream) -> (f64, Option<usize>) {
    let mut rng = stream.rng();
    draw(tab, &mut rng)
}

fn draw<R: Rng>(tab: &TabulatedDistribution, rng: &mut R) -> (f64, Option<usize>) {
    let u: f64 = rng.gen();
    if u >= tab.total_mass() {
        return (f64::INFINITY, None);
    }
    let cell = locate(tab, u);
    let k = draw_target(tab, cell, rng);
    (invert_time(tab, cell, u), k)
}

/// Counts of each outcome: `counts[k]` for target `k`, last entry for escape.
fn tally(outcomes: impl ParallelIterator<Item = Option<usize>>, targets: usize) -> Vec<u64> {
    outcomes
        .fold(
            || vec![0u64; targets + 1],
            |mut acc, k| {
                acc[k.unwrap_or(targets)] += 1;
                acc
            },
        )
        .reduce(
            || vec![0u64; targets + 1],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        )
}

fn estimates(counts: &[u64], trials: u64, n: u64) -> Vec<McEstimate> {
    let targets = counts.len() - 1;
    counts
        .iter()
        .enumerate()
        .map(|(k, &c)| McEstimate::wilson(c, trials, n, (k < targets).then_some(k)))
        .collect()
}

/// Searcher counts above this draw the smallest uniform directly instead of
/// drawing all `n` of them.
pub const NAIVE_LIMIT: u64 = 10_000;

/// Estimates `P(K_N = k)` for every target (and escape, last) from `trials`
/// independent groups of `n` searchers.
///
/// Inversion maps uniforms to times monotonically, so the fastest searcher
/// of a trial is the one holding the smallest uniform; only that searcher's
/// target is drawn.
pub fn estimate_extreme(tab: &TabulatedDistribution, n: u64, trials: u64, seed: u64) -> Result<Vec<McEstimate>> {
    if n == 0 {
        return Err(invalid("N", "need at least one searcher"));
    }
    if trials < 100 {
        return Err(invalid("trials", format!("need at least 100, got {trials}")));
    }
    let f_inf = tab.total_mass();
    let outcomes = (0..trials).into_par_iter().map(|trial| {
        let mut rng = RngStream::new(seed, trial).rng();
        let u_min = if n <= NAIVE_LIMIT {
            (0..n).map(|_| rng.gen::<f64>()).fold(f64::INFINITY, f64::min)
        } else {
            // The minimum of n uniforms has CDF 1 - (1 - v)^n.
            -((-rng.gen::<f64>()).ln_1p() / n as f64).exp_m1()
        };
        if u_min >= f_inf {
            None
        } else {
            draw_target(tab, locate(tab, u_min), &mut rng)
        }
    });
    let counts = tally(outcomes, tab.target_count());
    Ok(estimates(&counts, trials, n))
}

/// Controls of the direct path simulation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathConfig {
    pub dt: f64,
    /// Paths still running at this time count as escapes.
    pub t_max: f64,
}

enum Walker {
    Interval {
        length: f64,
        d: f64,
        mu: f64,
        x: f64,
        rates: [f64; 2],
    },
    Shell {
        inner: f64,
        outer: f64,
        d: f64,
        pos: [f64; 3],
    },
}

fn walker(spec: &ScenarioSpec, dt: f64) -> Result<Walker> {
    spec.validate()?;
    let (walker, char_time) = match *spec {
        ScenarioSpec::IntervalPure {
            length,
            diffusivity,
            start,
        } => (
            Walker::Interval {
                length,
                d: diffusivity,
                mu: 0.0,
                x: start,
                rates: [f64::INFINITY; 2],
            },
            length * length / diffusivity,
        ),
        ScenarioSpec::IntervalDrift {
            length,
            diffusivity,
            drift,
            start,
        } => (
            Walker::Interval {
                length,
                d: diffusivity,
                mu: drift,
                x: start,
                rates: [f64::INFINITY; 2],
            },
            length * length / diffusivity,
        ),
        ScenarioSpec::IntervalRobin {
            length,
            diffusivity,
            start,
            gamma_left,
            gamma_right,
        } => (
            Walker::Interval {
                length,
                d: diffusivity,
                mu: 0.0,
                x: start,
                rates: [gamma_left, gamma_right],
            },
            length * length / diffusivity,
        ),
        ScenarioSpec::Concentric {
            inner,
            outer,
            start,
            diffusivity,
        } => {
            let near = (start - inner).min(outer - start);
            (
                Walker::Shell {
                    inner,
                    outer,
                    d: diffusivity,
                    pos: [start, 0.0, 0.0],
                },
                near * near / diffusivity,
            )
        }
        _ => {
            return Err(Error::Unsupported(format!("no path simulation for {}", spec.kind())));
        }
    };
    if !(dt > 0.0) || dt > 1e-4 * char_time {
        return Err(invalid(
            "dt",
            format!("must lie in (0, {:.3e}] (1e-4 of the characteristic time)", 1e-4 * char_time),
        ));
    }
    Ok(walker)
}

/// Whether a step that ends at distances `d_from` and `d_to` inside the
/// domain touched the boundary in between (Brownian bridge).
fn bridge_touch<R: Rng>(d_from: f64, d_to: f64, d: f64, dt: f64, rng: &mut R) -> bool {
    rng.gen::<f64>() < (-d_from * d_to / (d * dt)).exp()
}

/// Absorption probability of a contact with a boundary of trapping rate
/// `gamma`.
fn absorb_prob(gamma: f64, d: f64, dt: f64) -> f64 {
    if gamma.is_infinite() {
        1.0
    } else {
        (gamma * (std::f64::consts::PI * dt / d).sqrt()).min(1.0)
    }
}

/// Euler–Maruyama simulation of one path until absorption. Absorbing ends
/// use a Brownian-bridge crossing test; at partially absorbing ends a step
/// that crosses the boundary is absorbed with probability
/// `gamma sqrt(pi dt / D)` and reflected otherwise.
/// Returns `(inf, None)` for paths still running at `cfg.t_max`.
pub fn simulate_path(spec: &ScenarioSpec, cfg: &PathConfig, stream: RngStream) -> Result<(f64, Option<usize>)> {
    let w = walker(spec, cfg.dt)?;
    let mut rng = stream.rng();
    Ok(run_walker(w, cfg, &mut rng))
}

fn run_walker<R: Rng>(mut w: Walker, cfg: &PathConfig, rng: &mut R) -> (f64, Option<usize>) {
    let dt = cfg.dt;
    let steps = (cfg.t_max / dt).ceil() as u64;
    for step in 1..=steps {
        let t = step as f64 * dt;
        match &mut w {
            Walker::Interval {
                length,
                d,
                mu,
                x,
                rates,
            } => {
                let sigma = (2.0 * *d * dt).sqrt();
                let xi: f64 = rng.sample(StandardNormal);
                let mut next = *x + *mu * dt + sigma * xi;
                let contact = if next <= 0.0 {
                    Some(0)
                } else if next >= *length {
                    Some(1)
                } else if rates[0].is_infinite() && bridge_touch(*x, next, *d, dt, rng) {
                    Some(0)
                } else if rates[1].is_infinite() && bridge_touch(*length - *x, *length - next, *d, dt, rng) {
                    Some(1)
                } else {
                    None
                };
                if let Some(k) = contact {
                    if rng.gen::<f64>() < absorb_prob(rates[k], *d, dt) {
                        return (t, Some(k));
                    }
                    if next <= 0.0 {
                        next = -next;
                    } else if next >= *length {
                        next = 2.0 * *length - next;
                    }
                }
                *x = next.clamp(0.0, *length);
            }
            Walker::Shell { inner, outer, d, pos } => {
                let sigma = (2.0 * *d * dt).sqrt();
                let r0 = norm(pos);
                for c in pos.iter_mut() {
                    *c += sigma * rng.sample::<f64, _>(StandardNormal);
                }
                let r1 = norm(pos);
                if r1 <= *inner || bridge_touch(r0 - *inner, r1 - *inner, *d, dt, rng) {
                    return (t, Some(0));
                }
                if r1 >= *outer || bridge_touch(*outer - r0, *outer - r1, *d, dt, rng) {
                    return (t, Some(1));
                }
            }
        }
    }
    (f64::INFINITY, None)
}

fn norm(p: &[f64; 3]) -> f64 {
    (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt()
}

/// Simulates `paths` independent paths, path `i` on stream `i`.
pub fn simulate_paths(spec: &ScenarioSpec, cfg: &PathConfig, paths: u64, seed: u64) -> Result<Vec<(f64, Option<usize>)>> {
    walker(spec, cfg.dt)?;
    Ok((0..paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = RngStream::new(seed, i).rng();
            run_walker(walker(spec, cfg.dt).expect("validated above"), cfg, &mut rng)
        })
        .collect())
}

/// Splitting estimates `P(kappa = k)` (escape last) from path simulation.
pub fn path_splitting(spec: &ScenarioSpec, cfg: &PathConfig, paths: u64, seed: u64) -> Result<Vec<McEstimate>> {
    let hits = simulate_paths(spec, cfg, paths, seed)?;
    let targets = spec.distances()?.len();
    let counts = tally(hits.into_par_iter().map(|(_, k)| k), targets);
    Ok(estimates(&counts, paths, 1))
}

/// Estimates `P(K_N = k)` with `n` simulated paths per trial. Slow; meant
/// for small `n`.
pub fn estimate_extreme_paths(
    spec: &ScenarioSpec,
    cfg: &PathConfig,
    n: u64,
    trials: u64,
    seed: u64,
) -> Result<Vec<McEstimate>> {
    if n == 0 || trials < 100 {
        return Err(invalid("trials", "need N >= 1 and at least 100 trials"));
    }
    walker(spec, cfg.dt)?;
    let targets = spec.distances()?.len();
    let outcomes = (0..trials).into_par_iter().map(|trial| {
        let mut rng = RngStream::new(seed, trial).rng();
        let mut best = (f64::INFINITY, None);
        for _ in 0..n {
            let hit = run_walker(walker(spec, cfg.dt).expect("validated above"), cfg, &mut rng);
            if hit.0 < best.0 {
                best = hit;
            }
        }
        best.1
    });
    let counts = tally(outcomes, targets);
    Ok(estimates(&counts, trials, n))
}
