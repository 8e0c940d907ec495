//! Short-time laws `F_k(t) ~ A t^p exp(-C/t)`: the closed-form catalog for
//! each scenario kind and a least-squares fitter for tabulated data.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};
use crate::regress::least_squares;
use crate::scenario::{GridControl, ScenarioSpec};
use crate::tabulation::{TabulatedDistribution, TimeGrid};

/// Leading-order short-time behaviour `A t^p exp(-C/t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShortTimeParams {
    pub amplitude: f64,
    pub power: f64,
    pub scale: f64,
}

impl ShortTimeParams {
    pub fn new(amplitude: f64, power: f64, scale: f64) -> Result<Self> {
        let s = Self {
            amplitude,
            power,
            scale,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.amplitude > 0.0 && self.amplitude.is_finite()) {
            return Err(invalid("amplitude", format!("must be positive and finite, got {}", self.amplitude)));
        }
        if !self.power.is_finite() {
            return Err(invalid("power", "must be finite"));
        }
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(invalid("scale", format!("must be positive and finite, got {}", self.scale)));
        }
        Ok(())
    }

    pub fn log_eval(&self, t: f64) -> f64 {
        self.amplitude.ln() + self.power * t.ln() - self.scale / t
    }

    /// Same law with time measured in units `lambda` times larger.
    pub fn rescale_time(&self, lambda: f64) -> Self {
        Self {
            amplitude: self.amplitude * lambda.powf(self.power),
            power: self.power,
            scale: self.scale / lambda,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Proven,
    Conjectured,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CatalogEntry {
    pub target: usize,
    /// `None` for a target that is never hit (zero trapping rate).
    pub params: Option<ShortTimeParams>,
    pub provenance: Provenance,
}

fn free_space(distance: f64, diffusivity: f64) -> ShortTimeParams {
    ShortTimeParams {
        amplitude: (4.0 * diffusivity / (PI * distance * distance)).sqrt(),
        power: 0.5,
        scale: distance * distance / (4.0 * diffusivity),
    }
}

fn robin_end(distance: f64, diffusivity: f64, gamma: f64) -> Option<ShortTimeParams> {
    let base = free_space(distance, diffusivity);
    if gamma == 0.0 {
        None
    } else if gamma.is_infinite() {
        Some(base)
    } else {
        Some(ShortTimeParams {
            amplitude: 2.0 * gamma / distance * base.amplitude,
            power: 1.5,
            ..base
        })
    }
}

/// Closed-form short-time parameters of each target's hitting distribution.
pub fn catalog(spec: &ScenarioSpec) -> Result<Vec<CatalogEntry>> {
    spec.validate()?;
    let d = spec.diffusivity();
    let dist = spec.distances()?;
    let entry = |target, params, provenance| CatalogEntry {
        target,
        params,
        provenance,
    };
    match spec {
        ScenarioSpec::IntervalPure { .. } => Ok((0..2)
            .map(|k| entry(k, Some(free_space(dist[k], d)), Provenance::Proven))
            .collect()),
        ScenarioSpec::IntervalDrift { drift, .. } => {
            let sign = [-1.0, 1.0];
            Ok((0..2)
                .map(|k| {
                    let mut p = free_space(dist[k], d);
                    p.amplitude *= (sign[k] * drift * dist[k] / (2.0 * d)).exp();
                    entry(k, Some(p), Provenance::Proven)
                })
                .collect())
        }
        ScenarioSpec::IntervalRobin {
            gamma_left,
            gamma_right,
            ..
        } => Ok(vec![
            entry(0, robin_end(dist[0], d, *gamma_left), Provenance::Conjectured),
            entry(1, robin_end(dist[1], d, *gamma_right), Provenance::Conjectured),
        ]),
        ScenarioSpec::Concentric {
            inner, outer, start, ..
        } => {
            let radii = [*inner, *outer];
            Ok((0..2)
                .map(|k| {
                    let mut p = free_space(dist[k], d);
                    p.amplitude *= radii[k] / start;
                    entry(k, Some(p), Provenance::Conjectured)
                })
                .collect())
        }
        ScenarioSpec::NarrowCapture {
            start,
            epsilon,
            targets,
            ..
        } => Ok(targets
            .iter()
            .enumerate()
            .map(|(k, t)| {
                let centre_dist = start
                    .iter()
                    .zip(&t.center)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                let mut p = free_space(dist[k], d);
                p.amplitude *= epsilon * t.radius / centre_dist;
                entry(k, Some(p), Provenance::Conjectured)
            })
            .collect()),
        ScenarioSpec::GeodesicScene { .. } => Err(Error::Unsupported(
            "geodesic scenes have no short-time catalog; use the distance bound".into(),
        )),
    }
}

/// Grid for short-time fitting: from `C_0 / 250`, deep enough that the
/// closest target's CDF falls to about `1e-108`, up to the end of the
/// scenario's default grid.
pub fn fit_grid(spec: &ScenarioSpec, ctl: &GridControl) -> Result<TimeGrid> {
    let near = spec.distances()?.into_iter().fold(f64::INFINITY, f64::min);
    let c0 = near * near / (4.0 * spec.diffusivity());
    let t_max = spec.default_grid(ctl)?.t_max();
    TimeGrid::geometric(c0 / 250.0, t_max, ctl.points)
}

/// Result of a short-time fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShortTimeFit {
    pub params: ShortTimeParams,
    /// Root-mean-square residual of `ln F_k` over the window.
    pub residual: f64,
    /// Coefficient `a` of the first relative correction `1 + a t`.
    pub correction: f64,
    pub t_lo: f64,
    pub t_hi: f64,
    pub points: usize,
}

const LOG_FLOOR: f64 = -575.6462732485114; // ln 1e-250
const LOG_CEIL: f64 = -6.907755278982137; // ln 1e-3
const MIN_DECADES: f64 = 1.5;
const WINDOW_SPREAD: f64 = 0.2;

/// Fits `ln F_k = ln A + p ln t - C/t + a t` on the short-time part of a
/// tabulation. The `a t` term absorbs the first relative correction to the
/// leading-order law; without it the fitted amplitude is biased by 10% or
/// more over any window the floor `1e-250` allows.
///
/// Grid points with `F_k` in `[1e-250, 1e-3]` are candidates. Between
/// neighbours the local scale `c = -d ln F_k / d(1/t)` is computed; it tends
/// to `C` as `t -> 0` and drifts away once the bulk takes over, and it goes
/// erratic where the tabulation has lost resolution. The window is the
/// longest run of neighbours whose `c` is within 20% of the median.
pub fn fit_shorttime(tab: &TabulatedDistribution, k: usize) -> Result<ShortTimeFit> {
    if k >= tab.target_count() {
        return Err(invalid("target", format!("index {k} out of range")));
    }
    let times = tab.times();
    let logs = tab.log_target(k);
    let idx: Vec<usize> = (1..times.len())
        .filter(|&i| logs[i].is_finite() && logs[i] >= LOG_FLOOR && logs[i] <= LOG_CEIL)
        .collect();
    let insufficient = |what: String| Error::Insufficient(format!("short-time fit for target {k}: {what}"));
    if idx.len() < 6 {
        return Err(insufficient(format!("{} grid points in the fit range", idx.len())));
    }
    let local: Vec<f64> = idx
        .windows(2)
        .map(|w| (logs[w[1]] - logs[w[0]]) / (1.0 / times[w[0]] - 1.0 / times[w[1]]))
        .collect();
    let mut sorted: Vec<f64> = local.iter().copied().filter(|c| c.is_finite()).collect();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let median = sorted[sorted.len() / 2];
    if !(median > 0.0) {
        return Err(insufficient("tabulation is not increasing at short times".into()));
    }
    let (mut best, mut run_start) = ((0, 0), None);
    for (j, c) in local.iter().enumerate() {
        let ok = ((c / median) - 1.0).abs() <= WINDOW_SPREAD && idx[j + 1] == idx[j] + 1;
        match (ok, run_start) {
            (true, None) => run_start = Some(j),
            (false, Some(s)) => {
                if j - s > best.1 - best.0 {
                    best = (s, j);
                }
                run_start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = run_start {
        if local.len() - s > best.1 - best.0 {
            best = (s, local.len());
        }
    }
    // A run of intervals j in [s, e) covers points idx[s..=e].
    let pts = &idx[best.0..=best.1.min(idx.len() - 1)];
    let (t_lo, t_hi) = (times[pts[0]], times[*pts.last().unwrap()]);
    let decades = (t_hi / t_lo).log10();
    if best.1 == best.0 || decades < MIN_DECADES {
        return Err(insufficient(format!(
            "window [{t_lo:.3e}, {t_hi:.3e}] spans {decades:.2} decades, need {MIN_DECADES}"
        )));
    }
    let rows: Vec<Vec<f64>> = pts.iter().map(|&i| vec![1.0, times[i].ln(), -1.0 / times[i], times[i]]).collect();
    let y: Vec<f64> = pts.iter().map(|&i| logs[i]).collect();
    let fit = least_squares(&rows, &y).ok_or_else(|| insufficient("degenerate fit".into()))?;
    let params = ShortTimeParams {
        amplitude: fit.coef[0].exp(),
        power: fit.coef[1],
        scale: fit.coef[2],
    };
    params
        .validate()
        .map_err(|e| insufficient(format!("fitted parameters out of range: {e}")))?;
    Ok(ShortTimeFit {
        params,
        residual: (fit.rss / pts.len() as f64).sqrt(),
        correction: fit.coef[3],
        t_lo,
        t_hi,
        points: pts.len(),
    })
}
