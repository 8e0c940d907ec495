//! Hitting-time distributions for diffusion on `(0, l)` with absorbing ends.
//!
//! Everything is expressed through a dimensionless kernel in the scaled time
//! `s = D t / l^2` and the scaled distance `w` from the start to the target
//! (`w = x0 / l` for the left end, `w = 1 - x0 / l` for the right end).
//! Each kernel has two exact representations: an image sum that converges
//! fast for small `s` and an eigenfunction sum that converges fast for large
//! `s`. The switch point and truncation are set by [`SeriesConfig`].
//!
//! Target `0` is the left end `x = 0` and target `1` the right end `x = l`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{domain, invalid, Result};
use crate::quad;
use crate::special::{erfc, ln_1m_exp, log_erfc};
use crate::tabulation::{TabulatedDistribution, TimeGrid};

/// Diffusion on `(0, l)` with constant drift, absorbing at both ends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalScenario {
    /// Interval length `l`.
    pub length: f64,
    /// Diffusivity `D` (length^2 / time).
    pub diffusivity: f64,
    /// Drift `mu` (length / time).
    #[serde(default)]
    pub drift: f64,
    /// Start position `x0`.
    pub start: f64,
}

impl IntervalScenario {
    pub fn new(length: f64, diffusivity: f64, drift: f64, start: f64) -> Result<Self> {
        let s = Self {
            length,
            diffusivity,
            drift,
            start,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.length > 0.0 && self.length.is_finite()) {
            return Err(invalid("l", format!("length must be positive, got {}", self.length)));
        }
        if !(self.diffusivity > 0.0 && self.diffusivity.is_finite()) {
            return Err(invalid("D", format!("diffusivity must be positive, got {}", self.diffusivity)));
        }
        if !self.drift.is_finite() {
            return Err(invalid("mu", "drift must be finite"));
        }
        if !(self.start > 0.0 && self.start < self.length) {
            return Err(invalid("x0", format!("start {} not inside (0, {})", self.start, self.length)));
        }
        Ok(())
    }

    /// Distances `[L_0, L_1] = [x0, l - x0]` from the start to each end.
    pub fn distances(&self) -> [f64; 2] {
        [self.start, self.length - self.start]
    }

    /// Scaled time `D t / l^2`.
    pub fn scaled_time(&self, t: f64) -> f64 {
        self.diffusivity * t / (self.length * self.length)
    }

    /// Dimensionless drift strength `b = l^2 mu^2 / (4 D^2)`.
    pub fn drift_strength(&self) -> f64 {
        let r = self.length * self.drift / (2.0 * self.diffusivity);
        r * r
    }

    /// `P(kappa = k)` for a single searcher.
    pub fn splitting(&self) -> [f64; 2] {
        let (l, d, mu, x0) = (self.length, self.diffusivity, self.drift, self.start);
        if mu == 0.0 {
            return [1.0 - x0 / l, x0 / l];
        }
        // Written with expm1 so both signs of mu and small |mu| are stable.
        let right = (-mu * x0 / d).exp_m1() / (-mu * l / d).exp_m1();
        let left = (mu * (l - x0) / d).exp_m1() / (mu * l / d).exp_m1();
        [left, right]
    }

    /// Log prefactors `[-mu x0 / 2D, mu (l - x0) / 2D]` multiplying the
    /// drifted kernel for each end.
    fn log_drift_factors(&self) -> [f64; 2] {
        let c = self.drift / (2.0 * self.diffusivity);
        [-c * self.start, c * (self.length - self.start)]
    }
}

/// Truncation and switching controls for the series kernels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SeriesConfig {
    /// Maximum number of terms in each series.
    pub terms: usize,
    /// Scaled time at or below which the short-time representation is used.
    pub switch: f64,
    /// Most subintervals the adaptive rule may use for the drifted short-time kernel.
    pub drift_intervals: usize,
}

impl Default for SeriesConfig {
    fn default() -> Self {
        Self {
            terms: 1000,
            switch: 1.0,
            drift_intervals: 200,
        }
    }
}

fn check_args(func: &'static str, s: f64, w: f64, strict_s: bool) -> Result<()> {
    let s_ok = if strict_s { s > 0.0 } else { s >= 0.0 };
    if !s_ok || !s.is_finite() {
        return Err(domain(func, format!("scaled time s = {s} out of range")));
    }
    if !(w > 0.0 && w < 1.0) {
        return Err(domain(func, format!("scaled distance w = {w} not in (0, 1)")));
    }
    Ok(())
}

/// Image-sum form of the hitting density, accurate for small `s`.
pub fn density_short(s: f64, w: f64, terms: usize) -> f64 {
    let norm = 1.0 / (4.0 * PI * s * s * s).sqrt();
    let mut sum = w * (-w * w / (4.0 * s)).exp();
    for k in 1..=terms {
        let a = w + 2.0 * k as f64;
        let b = w - 2.0 * k as f64;
        let ta = a * (-a * a / (4.0 * s)).exp();
        let tb = b * (-b * b / (4.0 * s)).exp();
        sum += ta + tb;
        if ta == 0.0 && tb == 0.0 {
            break;
        }
    }
    (norm * sum).max(0.0)
}

/// Eigenfunction form of the hitting density, accurate for large `s`.
pub fn density_large(s: f64, w: f64, terms: usize) -> f64 {
    let mut sum = 0.0;
    for k in 1..=terms {
        let kp = k as f64 * PI;
        let decay = (-kp * kp * s).exp();
        if decay == 0.0 {
            break;
        }
        sum += decay * 2.0 * kp * (kp * w).sin();
    }
    sum.max(0.0)
}

/// Dimensionless density of the hitting time of a target at scaled
/// distance `w`, before the other end is reached.
pub fn hitting_density(s: f64, w: f64, cfg: &SeriesConfig) -> Result<f64> {
    check_args("hitting_density", s, w, true)?;
    Ok(if s <= cfg.switch {
        density_short(s, w, cfg.terms)
    } else {
        density_large(s, w, cfg.terms)
    })
}

/// `ln` of the image-sum cumulative kernel; stays finite where the kernel
/// itself underflows.
pub fn log_cdf_short(s: f64, w: f64, terms: usize) -> f64 {
    let scale = 1.0 / (4.0 * s).sqrt();
    let lead = log_erfc(w * scale);
    let mut rel = 0.0;
    for k in 1..=terms {
        let a = w + 2.0 * k as f64;
        let b = 2.0 * k as f64 - w;
        let ta = (log_erfc(a * scale) - lead).exp();
        let tb = (log_erfc(b * scale) - lead).exp();
        rel += ta - tb;
        if tb < 1e-18 {
            break;
        }
    }
    lead + rel.ln_1p()
}

/// Image-sum form of the cumulative kernel.
pub fn cdf_short(s: f64, w: f64, terms: usize) -> f64 {
    if s == 0.0 {
        return 0.0;
    }
    let scale = 1.0 / (4.0 * s).sqrt();
    let mut sum = erfc(w * scale);
    for k in 1..=terms {
        let ta = erfc((w + 2.0 * k as f64) * scale);
        let tb = erfc((2.0 * k as f64 - w) * scale);
        sum += ta - tb;
        if tb == 0.0 {
            break;
        }
    }
    sum
}

/// Eigenfunction form of the cumulative kernel. The constant part of the
/// series is summed in closed form (`1 - w`).
pub fn cdf_large(s: f64, w: f64, terms: usize) -> f64 {
    (1.0 - w) - survival_large(s, w, 0.0, terms)
}

/// `sum_k exp(-(b + k^2 pi^2) s) 2 k pi sin(k pi w) / (b + k^2 pi^2)`.
fn survival_large(s: f64, w: f64, b: f64, terms: usize) -> f64 {
    let mut sum = 0.0;
    for k in 1..=terms {
        let kp = k as f64 * PI;
        let rate = b + kp * kp;
        let decay = (-rate * s).exp();
        if decay == 0.0 {
            break;
        }
        let term = decay * 2.0 * kp * (kp * w).sin() / rate;
        sum += term;
        if decay < 1e-18 * sum.abs() {
            break;
        }
    }
    sum
}

/// Cumulative kernel: probability of reaching the target at scaled
/// distance `w` by scaled time `s`, before the other end.
pub fn hitting_cdf(s: f64, w: f64, cfg: &SeriesConfig) -> Result<f64> {
    check_args("hitting_cdf", s, w, false)?;
    Ok(if s <= cfg.switch {
        cdf_short(s, w, cfg.terms)
    } else {
        cdf_large(s, w, cfg.terms)
    })
}

/// `ln` of [`hitting_cdf`].
pub fn log_hitting_cdf(s: f64, w: f64, cfg: &SeriesConfig) -> Result<f64> {
    check_args("log_hitting_cdf", s, w, false)?;
    if s == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(if s <= cfg.switch {
        log_cdf_short(s, w, cfg.terms)
    } else {
        cdf_large(s, w, cfg.terms).ln()
    })
}

/// `sinh(a (1 - w)) / sinh(a)` without overflow; the `a -> 0` limit is `1 - w`.
fn sinh_ratio(a: f64, w: f64) -> f64 {
    if a < 1e-8 {
        return 1.0 - w;
    }
    let x = a * (1.0 - w);
    (x - a).exp() * (-(-2.0 * x).exp_m1()) / (-(-2.0 * a).exp_m1())
}

/// Drifted cumulative kernel `int_0^s exp(-b s') phi(s', w) ds'`.
///
/// For `s` above the switch the eigenfunction series is used. Below it the
/// short-time kernel is integrated numerically: after integrating by parts,
/// `e^{-bs} Phi(s) + b int_0^s e^{-bs'} Phi(s') ds'`, with the remaining
/// integral done by adaptive Gauss–Kronrod quadrature in `ln s'`.
pub fn hitting_cdf_drift(s: f64, w: f64, b: f64, cfg: &SeriesConfig) -> Result<f64> {
    Ok(log_hitting_cdf_drift(s, w, b, cfg)?.exp())
}

/// `ln` of [`hitting_cdf_drift`].
pub fn log_hitting_cdf_drift(s: f64, w: f64, b: f64, cfg: &SeriesConfig) -> Result<f64> {
    check_args("log_hitting_cdf_drift", s, w, false)?;
    if !(b >= 0.0) || !b.is_finite() {
        return Err(domain("log_hitting_cdf_drift", format!("drift strength b = {b} < 0")));
    }
    if b == 0.0 {
        return log_hitting_cdf(s, w, cfg);
    }
    if s == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    if s > cfg.switch {
        let v = sinh_ratio(b.sqrt(), w) - survival_large(s, w, b, cfg.terms);
        return Ok(v.ln());
    }
    let log_at_s = log_cdf_short(s, w, cfg.terms);
    // Below s_lo the kernel is below e^{-40} of its value at s.
    let s_lo = 1.0 / (1.0 / s + 160.0 / (w * w));
    let (v_lo, v_hi) = (s_lo.ln(), s.ln());
    let g = |v: f64| {
        let sp = v.exp();
        (v - b * (sp - s) + log_cdf_short(sp, w, cfg.terms) - log_at_s).exp()
    };
    let ratio = b * quad::integrate(g, v_lo, v_hi, 0.0, 1e-13, cfg.drift_intervals.max(1)).value;
    Ok(log_at_s - b * s + ratio.ln_1p())
}

/// Tabulates `F_0`, `F_1` and `F` for an interval scenario.
pub fn interval_distribution(
    scn: &IntervalScenario,
    grid: &TimeGrid,
    cfg: &SeriesConfig,
) -> Result<TabulatedDistribution> {
    scn.validate()?;
    let w = [scn.start / scn.length, 1.0 - scn.start / scn.length];
    let b = scn.drift_strength();
    let pref = scn.log_drift_factors();
    let mut cols = vec![Vec::with_capacity(grid.len()), Vec::with_capacity(grid.len())];
    for &t in grid.times() {
        let s = scn.scaled_time(t);
        for k in 0..2 {
            let v = if scn.drift == 0.0 {
                log_hitting_cdf(s, w[k], cfg)?
            } else {
                pref[k] + log_hitting_cdf_drift(s, w[k], b, cfg)?
            };
            cols[k].push(v);
        }
    }
    TabulatedDistribution::from_log_columns(grid, cols, scn.splitting().to_vec())
}

/// Single-point `ln F_k(t)` for an interval scenario.
pub fn log_target_cdf(scn: &IntervalScenario, k: usize, t: f64, cfg: &SeriesConfig) -> Result<f64> {
    let w = if k == 0 {
        scn.start / scn.length
    } else {
        1.0 - scn.start / scn.length
    };
    let s = scn.scaled_time(t);
    if scn.drift == 0.0 {
        log_hitting_cdf(s, w, cfg)
    } else {
        Ok(scn.log_drift_factors()[k] + log_hitting_cdf_drift(s, w, scn.drift_strength(), cfg)?)
    }
}

/// Default tabulation grid: `points` log-spaced times from
/// `C_0 / (ln n_max + 40)` up to the time at which `1 - F <= 1e-4`.
pub fn default_grid(scn: &IntervalScenario, n_max: f64, points: usize, cfg: &SeriesConfig) -> Result<TimeGrid> {
    scn.validate()?;
    let near = scn.distances()[0].min(scn.distances()[1]);
    let c0 = near * near / (4.0 * scn.diffusivity);
    let t_min = c0 / (n_max.max(1.0).ln() + 40.0);
    let mut t_end = 0.1 * scn.length * scn.length / scn.diffusivity;
    for _ in 0..200 {
        let log_f = crate::special::log_add_exp(
            log_target_cdf(scn, 0, t_end, cfg)?,
            log_target_cdf(scn, 1, t_end, cfg)?,
        );
        if ln_1m_exp(log_f.min(0.0)) <= (1e-4f64).ln() {
            break;
        }
        t_end *= 1.5;
    }
    TimeGrid::geometric(t_min, t_end.max(2.0 * t_min), points)
}
