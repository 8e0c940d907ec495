//! Time grids and tabulated hitting-time distributions.
//!
//! A [`TabulatedDistribution`] stores, on a strictly increasing time grid
//! that starts at `t = 0`, the per-target cumulative probabilities
//! `F_k(t) = P(tau <= t, kappa = k)` together with their natural logs. The
//! total `F(t)` is always the pointwise sum of the per-target columns.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::special::{log_sum_exp, ln_1m_exp};

/// Strictly increasing, strictly positive sample times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct TimeGrid(Vec<f64>);

impl TimeGrid {
    pub fn new(times: Vec<f64>) -> Result<Self> {
        if times.is_empty() {
            return Err(invalid("grid", "time grid is empty"));
        }
        if !(times[0] > 0.0) || !times[0].is_finite() {
            return Err(invalid("grid", format!("first time {} must be positive", times[0])));
        }
        for i in 1..times.len() {
            if !(times[i] > times[i - 1]) || !times[i].is_finite() {
                return Err(Error::GridNotIncreasing { index: i });
            }
        }
        Ok(Self(times))
    }

    /// `points` log-spaced times from `t_min` to `t_max` inclusive.
    pub fn geometric(t_min: f64, t_max: f64, points: usize) -> Result<Self> {
        if !(t_min > 0.0) || !(t_max > t_min) || points < 2 {
            return Err(invalid(
                "grid",
                format!("need 0 < t_min < t_max and >= 2 points (got {t_min}, {t_max}, {points})"),
            ));
        }
        let (lo, hi) = (t_min.ln(), t_max.ln());
        let step = (hi - lo) / (points - 1) as f64;
        let mut v: Vec<f64> = (0..points).map(|i| (lo + step * i as f64).exp()).collect();
        v[0] = t_min;
        v[points - 1] = t_max;
        Self::new(v)
    }

    pub fn times(&self) -> &[f64] {
        &self.0
    }

    pub fn t_min(&self) -> f64 {
        self.0[0]
    }

    pub fn t_max(&self) -> f64 {
        self.0[self.0.len() - 1]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Same span and density, with the lower end moved to `t_min`.
    pub fn with_t_min(&self, t_min: f64) -> Result<Self> {
        let decades = (self.t_max() / self.t_min()).ln();
        let per_log = (self.len() - 1) as f64 / decades;
        let points = ((self.t_max() / t_min).ln() * per_log).ceil() as usize + 1;
        Self::geometric(t_min, self.t_max(), points.max(self.len()))
    }
}

impl TryFrom<Vec<f64>> for TimeGrid {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<TimeGrid> for Vec<f64> {
    fn from(g: TimeGrid) -> Self {
        g.0
    }
}

/// Bookkeeping about repairs applied while building a tabulation.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TabulationDiagnostics {
    /// Values that came out below zero and were clamped.
    pub clamped_negative: usize,
    /// Largest magnitude among the clamped values.
    pub max_negative: f64,
    /// Points raised to restore monotonicity in `t`.
    pub monotone_repairs: usize,
}

/// `F_k(t)` for every target on a grid starting at `t = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabulatedDistribution {
    times: Vec<f64>,
    per_target: Vec<Vec<f64>>,
    log_per_target: Vec<Vec<f64>>,
    total: Vec<f64>,
    log_total: Vec<f64>,
    tail_mass: Vec<f64>,
    escape_mass: f64,
    diagnostics: TabulationDiagnostics,
}

impl TabulatedDistribution {
    /// Builds a tabulation from log-domain per-target columns sampled at the
    /// grid times. `F_k(0) = 0` is prepended.
    ///
    /// `tail_mass[k]` is `F_k(inf)`; the escape mass is `1 - sum(tail_mass)`.
    pub fn from_log_columns(
        grid: &TimeGrid,
        log_columns: Vec<Vec<f64>>,
        tail_mass: Vec<f64>,
    ) -> Result<Self> {
        let m = log_columns.len();
        if m == 0 || tail_mass.len() != m {
            return Err(invalid("tail_mass", "need one column and one tail mass per target"));
        }
        let n = grid.len();
        let mut diagnostics = TabulationDiagnostics::default();
        let mut times = Vec::with_capacity(n + 1);
        times.push(0.0);
        times.extend_from_slice(grid.times());

        let mut log_per_target = Vec::with_capacity(m);
        for mut col in log_columns {
            if col.len() != n {
                return Err(invalid("columns", "column length differs from grid length"));
            }
            let mut running = f64::NEG_INFINITY;
            for v in &mut col {
                if v.is_nan() {
                    return Err(invalid("columns", "NaN in tabulated column"));
                }
                if *v < running {
                    diagnostics.monotone_repairs += 1;
                    *v = running;
                }
                running = *v;
            }
            col.insert(0, f64::NEG_INFINITY);
            log_per_target.push(col);
        }
        let per_target: Vec<Vec<f64>> = log_per_target
            .iter()
            .map(|c| c.iter().map(|v| v.exp()).collect())
            .collect();
        let mut log_total = Vec::with_capacity(n + 1);
        let mut buf = vec![0.0; m];
        for i in 0..=n {
            for (k, c) in log_per_target.iter().enumerate() {
                buf[k] = c[i];
            }
            log_total.push(log_sum_exp(&buf).min(0.0));
        }
        let total = log_total.iter().map(|v| v.exp()).collect();
        let escape_mass = (1.0 - tail_mass.iter().sum::<f64>()).max(0.0);
        Ok(Self {
            times,
            per_target,
            log_per_target,
            total,
            log_total,
            tail_mass,
            escape_mass,
            diagnostics,
        })
    }

    /// Builds a tabulation from linear per-target columns (for example the
    /// output of a PDE solve). Negative values are clamped to zero and
    /// counted in the diagnostics.
    pub fn from_columns(grid: &TimeGrid, columns: Vec<Vec<f64>>, tail_mass: Vec<f64>) -> Result<Self> {
        let mut clamped = 0;
        let mut max_negative: f64 = 0.0;
        let logs = columns
            .into_iter()
            .map(|c| {
                c.into_iter()
                    .map(|v| {
                        if v < 0.0 {
                            clamped += 1;
                            max_negative = max_negative.max(-v);
                            f64::NEG_INFINITY
                        } else {
                            v.ln()
                        }
                    })
                    .collect()
            })
            .collect();
        let mut tab = Self::from_log_columns(grid, logs, tail_mass)?;
        tab.diagnostics.clamped_negative = clamped;
        tab.diagnostics.max_negative = max_negative;
        Ok(tab)
    }

    /// Sample times, beginning with `0`.
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn target_count(&self) -> usize {
        self.per_target.len()
    }

    /// `F(t)` at the sample times.
    pub fn total(&self) -> &[f64] {
        &self.total
    }

    /// `ln F(t)` at the sample times.
    pub fn log_total(&self) -> &[f64] {
        &self.log_total
    }

    /// `F_k(t)` at the sample times.
    pub fn target(&self, k: usize) -> &[f64] {
        &self.per_target[k]
    }

    /// `ln F_k(t)` at the sample times.
    pub fn log_target(&self, k: usize) -> &[f64] {
        &self.log_per_target[k]
    }

    /// `ln(1 - F(t))` at sample `i`.
    pub fn log_survival(&self, i: usize) -> f64 {
        ln_1m_exp(self.log_total[i])
    }

    /// `F_k(inf)`, the single-searcher splitting probability of each target.
    pub fn tail_mass(&self) -> &[f64] {
        &self.tail_mass
    }

    /// `P(tau = inf)`.
    pub fn escape_mass(&self) -> f64 {
        self.escape_mass
    }

    /// `F(inf) = 1 - P(tau = inf)`.
    pub fn total_mass(&self) -> f64 {
        self.tail_mass.iter().sum::<f64>().min(1.0)
    }

    pub fn diagnostics(&self) -> &TabulationDiagnostics {
        &self.diagnostics
    }

    /// Smallest positive sample time.
    pub fn t_min(&self) -> f64 {
        self.times[1]
    }

    pub fn t_max(&self) -> f64 {
        self.times[self.times.len() - 1]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_validation() {
        assert!(TimeGrid::new(vec![]).is_err());
        assert!(TimeGrid::new(vec![0.0, 1.0]).is_err());
        assert_eq!(
            TimeGrid::new(vec![1.0, 2.0, 2.0]),
            Err(Error::GridNotIncreasing { index: 2 })
        );
        let g = TimeGrid::geometric(1e-3, 10.0, 5).unwrap();
        assert_eq!(g.len(), 5);
        assert!((g.times()[2] - 0.1).abs() < 1e-15);
        let ext = g.with_t_min(1e-4).unwrap();
        assert_eq!(ext.t_min(), 1e-4);
        assert_eq!(ext.t_max(), 10.0);
        assert!(ext.len() >= 6);
    }

    #[test]
    fn columns_sum_and_repairs() {
        let g = TimeGrid::new(vec![1.0, 2.0, 3.0]).unwrap();
        let tab = TabulatedDistribution::from_columns(
            &g,
            vec![vec![0.1, 0.3, 0.29], vec![-1e-14, 0.2, 0.4]],
            vec![0.3, 0.7],
        )
        .unwrap();
        assert_eq!(tab.times(), &[0.0, 1.0, 2.0, 3.0]);
        assert_eq!(tab.diagnostics().clamped_negative, 1);
        assert_eq!(tab.diagnostics().monotone_repairs, 1);
        assert_eq!(tab.target(0)[3], tab.target(0)[2]);
        for i in 0..4 {
            assert!((tab.total()[i] - tab.target(0)[i] - tab.target(1)[i]).abs() < 1e-15);
        }
        assert_eq!(tab.total()[0], 0.0);
        assert!(tab.escape_mass().abs() < 1e-15);
    }
}
