//! Probabilities that the fastest of `N` searchers hits a given target:
//! quadrature over a tabulated single-searcher law, closed-form large-`N`
//! laws, and exponent regression.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::quad::integrate;
use crate::regress::least_squares;
use crate::scenario::{GridControl, ScenarioSpec};
use crate::shorttime::{catalog, ShortTimeParams};
use crate::special::{ln_1m_exp, log_gamma, log_sub_exp, log_sum_exp};
use crate::tabulation::{TabulatedDistribution, TimeGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Quadrature,
    Asymptotic,
    MonteCarlo,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Quadrature => "quadrature",
            Method::Asymptotic => "asymptotic",
            Method::MonteCarlo => "monte_carlo",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ExtremeDiagnostics {
    /// Time of the cell carrying the most integrand mass.
    pub peak_time: f64,
    /// Fraction of the integrand mass that lies inside the grid.
    pub coverage: f64,
    /// The asymptotic value exceeded 1 and was clamped.
    pub clamped: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtremeResult {
    pub n: u64,
    pub k: usize,
    pub p: f64,
    pub log_p: f64,
    pub method: Method,
    pub diagnostics: ExtremeDiagnostics,
}

/// Largest admissible mass below the first grid time.
const LOWER_LEAK: f64 = 1e-6;

struct Cell {
    /// Right end of the cell (`t_max` for the cell beyond the grid).
    time: f64,
    /// `ln[S_i^N - S_{i+1}^N]`.
    log_mass: f64,
    /// `ln(dF_k / dF)` for each target.
    log_share: Vec<f64>,
}

fn cells(tab: &TabulatedDistribution, n: u64) -> Vec<Cell> {
    let m = tab.target_count();
    let times = tab.times();
    let len = times.len();
    let nf = n as f64;
    let mut cells = Vec::with_capacity(len);
    let mut dk = vec![0.0; m];
    let push = |cells: &mut Vec<Cell>, time: f64, log_s_lo: f64, log_s_hi: f64, dk: &[f64]| {
        let log_df = log_sum_exp(dk);
        if log_df == f64::NEG_INFINITY {
            return;
        }
        let drop = nf * (log_s_hi - log_s_lo);
        cells.push(Cell {
            time,
            log_mass: nf * log_s_lo + ln_1m_exp(drop.min(0.0)),
            log_share: dk.iter().map(|v| v - log_df).collect(),
        });
    };
    for i in 0..len - 1 {
        for (k, d) in dk.iter_mut().enumerate() {
            let col = tab.log_target(k);
            *d = log_sub_exp(col[i + 1], col[i].min(col[i + 1]));
        }
        push(&mut cells, times[i + 1], tab.log_survival(i), tab.log_survival(i + 1), &dk);
    }
    // Beyond the grid: the remaining mass of each target up to its tail.
    for (k, d) in dk.iter_mut().enumerate() {
        let last = tab.log_target(k)[len - 1];
        let tail = tab.tail_mass()[k];
        *d = if tail > 0.0 && tail.ln() > last {
            log_sub_exp(tail.ln(), last)
        } else {
            f64::NEG_INFINITY
        };
    }
    let escape = tab.escape_mass();
    let log_escape = if escape > 0.0 { escape.ln() } else { f64::NEG_INFINITY };
    push(&mut cells, times[len - 1], tab.log_survival(len - 1), log_escape, &dk);
    cells
}

/// `P(K_N = k)` by Stieltjes quadrature of `N int (1 - F)^(N-1) dF_k`.
///
/// Inside each grid cell `F_k` is taken linear in `F`, which integrates the
/// `(1 - F)^(N-1)` weight exactly: a cell contributes
/// `(dF_k / dF) [(1 - F_i)^N - (1 - F_{i+1})^N]`. A final cell carries the
/// mass between the last grid time and infinity.
pub fn hitting_prob_quadrature(tab: &TabulatedDistribution, n: u64, k: usize) -> Result<ExtremeResult> {
    if n == 0 {
        return Err(invalid("N", "need at least one searcher"));
    }
    if k >= tab.target_count() {
        return Err(invalid("k", format!("target {k} out of range")));
    }
    let nf = n as f64;
    // Mass of the first cell [0, t_min] = 1 - (1 - F(t_min))^N.
    let log_s1 = tab.log_survival(1);
    let weight = ((nf - 1.0) * log_s1).exp();
    let lower = -(nf * log_s1).exp_m1();
    let cells = cells(tab, n);
    let peak_time = cells
        .iter()
        .fold((f64::NEG_INFINITY, f64::NAN), |acc, c| if c.log_mass > acc.0 { (c.log_mass, c.time) } else { acc })
        .1;
    if lower > LOWER_LEAK {
        return Err(Error::GridCoverage {
            t_min: tab.t_min(),
            peak: peak_time,
            weight,
        });
    }
    let terms: Vec<f64> = cells.iter().map(|c| c.log_mass + c.log_share[k]).collect();
    let log_p = log_sum_exp(&terms).min(0.0);
    let total = 1.0 - tab.escape_mass().powf(nf);
    Ok(ExtremeResult {
        n,
        k,
        p: log_p.exp(),
        log_p,
        method: Method::Quadrature,
        diagnostics: ExtremeDiagnostics {
            peak_time,
            coverage: if total > 0.0 { (1.0 - lower / total).clamp(0.0, 1.0) } else { 1.0 },
            clamped: false,
        },
    })
}

/// `P(K_N = inf) = P(tau = inf)^N`.
pub fn escape_prob(tab: &TabulatedDistribution, n: u64) -> f64 {
    tab.escape_mass().powf(n as f64)
}

/// Quadrature on a scenario over a ladder of searcher counts, tabulating
/// once on a grid sized for the largest `N`. When the grid misses integrand
/// mass below its first time, `t_min` is halved and the scenario retabulated,
/// down to `1e-8 C_0`.
pub fn quadrature_ladder(spec: &ScenarioSpec, ctl: &GridControl, ns: &[u64], k: usize) -> Result<Vec<ExtremeResult>> {
    let n_max = ns.iter().copied().max().ok_or_else(|| invalid("N", "empty ladder"))?;
    let ctl = GridControl {
        n_max: ctl.n_max.max(n_max as f64),
        ..ctl.clone()
    };
    let grid = spec.default_grid(&ctl)?;
    let (tab, _) = tabulate_covering(spec, &ctl, grid, n_max)?;
    ns.par_iter().map(|&n| hitting_prob_quadrature(&tab, n, k)).collect()
}

/// Tabulates `spec` on `grid`, extending the grid downward until quadrature
/// at `n` covers the integrand. Returns the tabulation and the grid used.
pub fn tabulate_covering(
    spec: &ScenarioSpec,
    ctl: &GridControl,
    mut grid: TimeGrid,
    n: u64,
) -> Result<(TabulatedDistribution, TimeGrid)> {
    let near = spec.distances()?.into_iter().fold(f64::INFINITY, f64::min);
    let floor = 1e-8 * near * near / (4.0 * spec.diffusivity());
    loop {
        let tab = spec.tabulate(&grid, ctl)?;
        match hitting_prob_quadrature(&tab, n, 0) {
            Err(Error::GridCoverage { .. }) if grid.t_min() / 2.0 >= floor => {
                grid = grid.with_t_min(grid.t_min() / 2.0)?;
            }
            Err(e) => return Err(e),
            Ok(_) => return Ok((tab, grid)),
        }
    }
}

/// `P(K_N = k) ~ eta (ln N)^rho N^(1 - beta)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticLaw {
    pub beta: f64,
    pub rho: f64,
    pub eta: f64,
    pub log_eta: f64,
}

/// Large-`N` law of a far target from the short-time laws of the overall
/// hitting time (`near`) and of the far target (`far`).
pub fn asymptotic_law(near: &ShortTimeParams, far: &ShortTimeParams) -> Result<AsymptoticLaw> {
    near.validate()?;
    far.validate()?;
    if !(far.scale > near.scale) {
        return Err(Error::Ordering(format!(
            "far target scale {} must exceed the closest scale {}",
            far.scale, near.scale
        )));
    }
    let beta = far.scale / near.scale;
    let rho = near.power * beta - far.power;
    let log_eta = far.amplitude.ln() + (far.power - near.power * beta) * near.scale.ln() - beta * near.amplitude.ln()
        + beta.ln()
        + log_gamma(beta)?;
    Ok(AsymptoticLaw {
        beta,
        rho,
        eta: log_eta.exp(),
        log_eta,
    })
}

/// Smallest accepted ratio of a far target's distance to the closest one.
pub const MIN_DISTANCE_RATIO: f64 = 1.02;

/// Asymptotic laws of every target of `spec` other than the closest.
/// Target 0 must be the unique closest; targets nearer than
/// `MIN_DISTANCE_RATIO` times its distance are rejected unless
/// `allow_close` is set. Unreachable targets get `None`, as does target 0.
pub fn scenario_laws(spec: &ScenarioSpec, allow_close: bool) -> Result<Vec<Option<AsymptoticLaw>>> {
    let cat = catalog(spec)?;
    let near = cat
        .first()
        .and_then(|e| e.params)
        .ok_or_else(|| Error::Ordering("target 0 must be reachable".into()))?;
    let mut laws = vec![None];
    for e in &cat[1..] {
        let Some(far) = e.params else {
            laws.push(None);
            continue;
        };
        let ratio = (far.scale / near.scale).sqrt();
        if ratio <= 1.0 {
            return Err(Error::Ordering(format!(
                "target {} is not farther than target 0 (distance ratio {ratio:.4})",
                e.target
            )));
        }
        if ratio < MIN_DISTANCE_RATIO && !allow_close {
            return Err(Error::Ordering(format!(
                "target {} is within {MIN_DISTANCE_RATIO} of the closest distance (ratio {ratio:.4}); \
                 the large-N law needs a unique closest target",
                e.target
            )));
        }
        laws.push(Some(asymptotic_law(&near, &far)?));
    }
    Ok(laws)
}

/// `eta (ln N)^rho N^(1 - beta)` evaluated in logs and clamped to 1.
pub fn asymptotic_eval(law: &AsymptoticLaw, n: u64, k: usize) -> Result<ExtremeResult> {
    if n < 2 {
        return Err(invalid("N", "the asymptotic law needs N >= 2"));
    }
    let ln_n = (n as f64).ln();
    let raw = law.log_eta + law.rho * ln_n.ln() + (1.0 - law.beta) * ln_n;
    let clamped = raw > 0.0;
    let log_p = raw.min(0.0);
    Ok(ExtremeResult {
        n,
        k,
        p: log_p.exp(),
        log_p,
        method: Method::Asymptotic,
        diagnostics: ExtremeDiagnostics {
            peak_time: f64::NAN,
            coverage: f64::NAN,
            clamped,
        },
    })
}

/// Parameters of the model integral
/// `I(N) = int_0^delta t^(q-2) exp(-C_plus/t) (1 - A t^p exp(-C/t))^(N-1) dt`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelIntegral {
    pub amplitude: f64,
    pub power: f64,
    pub outer_power: f64,
    pub scale: f64,
    pub outer_scale: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelRow {
    pub n: u64,
    pub integral: f64,
    pub log_integral: f64,
    pub asymptote: f64,
    pub log_asymptote: f64,
    pub ratio: f64,
}

impl ModelIntegral {
    pub fn validate(&self) -> Result<()> {
        if !(self.amplitude > 0.0) {
            return Err(invalid("A", "must be positive"));
        }
        if !(self.scale > 0.0) {
            return Err(invalid("C", "must be positive"));
        }
        if !(self.outer_scale > self.scale) {
            return Err(invalid("C_plus", "must exceed C"));
        }
        if !(self.delta > 0.0) {
            return Err(invalid("delta", "must be positive"));
        }
        if !self.power.is_finite() || !self.outer_power.is_finite() {
            return Err(invalid("p", "powers must be finite"));
        }
        // A t^p e^{-C/t} must stay below 1 on (0, delta].
        let steps = 2000;
        for i in 1..=steps {
            let t = self.delta * i as f64 / steps as f64;
            if self.log_inner(t) >= 0.0 {
                return Err(invalid(
                    "delta",
                    format!("A t^p exp(-C/t) reaches 1 at t = {t:.4e} <= delta"),
                ));
            }
        }
        Ok(())
    }

    fn log_inner(&self, t: f64) -> f64 {
        self.amplitude.ln() + self.power * t.ln() - self.scale / t
    }

    /// `ln I(N)` by adaptive Gauss–Kronrod in `ln t`, scaled by the integrand
    /// maximum so that the result never underflows.
    pub fn log_integral(&self, n: u64) -> Result<f64> {
        self.validate()?;
        let nm1 = n.saturating_sub(1) as f64;
        let log_f = |x: f64| {
            let t = x.exp();
            (self.outer_power - 1.0) * x - self.outer_scale / t + nm1 * ln_1m_exp(self.log_inner(t))
        };
        let hi = self.delta.ln();
        // Locate the peak on a coarse grid reaching far below the natural
        // time scale C / ln N.
        let lo = hi.min((self.scale / ((nm1 + 2.0).ln() * 1e4)).ln()) - 5.0;
        let samples = 4000;
        let mut best = (f64::NEG_INFINITY, hi);
        for i in 0..=samples {
            let x = lo + (hi - lo) * i as f64 / samples as f64;
            let v = log_f(x);
            if v > best.0 {
                best = (v, x);
            }
        }
        let (peak, x_peak) = best;
        if !peak.is_finite() {
            return Err(Error::Domain {
                func: "log_integral",
                msg: "integrand vanishes on the sampled range".into(),
            });
        }
        // Integrate exp(log_f - peak) dx, split at the peak.
        let g = |x: f64| (log_f(x) - peak).exp();
        let left = integrate(&g, lo, x_peak, 0.0, 1e-12, 4000);
        let right = integrate(&g, x_peak, hi, 0.0, 1e-12, 4000);
        Ok(peak + (left.value + right.value).ln())
    }

    /// `C^(q-1) (A C^p)^(-beta) Gamma(beta) (ln N)^(p beta - q) N^(-beta)`
    /// with `beta = C_plus / C`, in logs.
    pub fn log_asymptote(&self, n: u64) -> Result<f64> {
        let beta = self.outer_scale / self.scale;
        let ln_n = (n as f64).ln();
        Ok((self.outer_power - 1.0) * self.scale.ln()
            - beta * (self.amplitude.ln() + self.power * self.scale.ln())
            + log_gamma(beta)?
            + (self.power * beta - self.outer_power) * ln_n.ln()
            - beta * ln_n)
    }
}

/// Integral, asymptote and ratio for each `N`.
pub fn verify_prop_p1(model: &ModelIntegral, ns: &[u64]) -> Result<Vec<ModelRow>> {
    model.validate()?;
    if ns.iter().any(|&n| n < 2) {
        return Err(invalid("N", "need N >= 2 for the asymptote"));
    }
    ns.par_iter()
        .map(|&n| {
            let li = model.log_integral(n)?;
            let la = model.log_asymptote(n)?;
            Ok(ModelRow {
                n,
                integral: li.exp(),
                log_integral: li,
                asymptote: la.exp(),
                log_asymptote: la,
                ratio: (li - la).exp(),
            })
        })
        .collect()
}

/// Least-squares slope of `ln y` against `ln N` (no correction terms).
pub fn log_log_slope(ns: &[u64], log_y: &[f64]) -> Result<(f64, f64)> {
    let rows: Vec<Vec<f64>> = ns.iter().map(|&n| vec![1.0, (n as f64).ln()]).collect();
    let fit = least_squares(&rows, log_y).ok_or_else(|| Error::Insufficient("degenerate regression".into()))?;
    Ok((fit.coef[1], fit.stderr[1]))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    pub slope: f64,
    pub stderr: f64,
    /// Coefficient of the `ln ln N` regressor.
    pub log_log_coef: f64,
}

/// Slope of `ln P(K_N = k)` against `ln N`, fitted together with a
/// `ln ln N` term that absorbs the logarithmic factor of the law.
pub fn empirical_exponent(results: &[ExtremeResult]) -> Result<ExponentFit> {
    if results.len() < 4 {
        return Err(Error::Insufficient(format!("{} ladder points, need at least 4", results.len())));
    }
    let lo = results.iter().map(|r| r.n).min().unwrap() as f64;
    let hi = results.iter().map(|r| r.n).max().unwrap() as f64;
    if (hi / lo).log10() < 4.0 - 1e-9 || lo < 3.0 {
        return Err(Error::Insufficient(format!(
            "ladder spans {:.2} decades from N = {lo}, need 4 decades with N >= 3",
            (hi / lo).log10()
        )));
    }
    if let Some(r) = results.iter().find(|r| !(r.log_p > (1e-250f64).ln())) {
        return Err(Error::Insufficient(format!("p = {:e} at N = {} is below 1e-250", r.p, r.n)));
    }
    let rows: Vec<Vec<f64>> = results
        .iter()
        .map(|r| {
            let ln_n = (r.n as f64).ln();
            vec![1.0, ln_n, ln_n.ln()]
        })
        .collect();
    let y: Vec<f64> = results.iter().map(|r| r.log_p).collect();
    let fit = least_squares(&rows, &y).ok_or_else(|| Error::Insufficient("degenerate regression".into()))?;
    Ok(ExponentFit {
        slope: fit.coef[1],
        stderr: fit.stderr[1],
        log_log_coef: fit.coef[2],
    })
}

/// Geometric ladder `10^lo, 10^(lo+1), ..., 10^hi`.
pub fn decade_ladder(lo: u32, hi: u32) -> Vec<u64> {
    (lo..=hi).map(|e| 10u64.pow(e)).collect()
}
