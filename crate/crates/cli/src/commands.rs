use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};

use xfpt_core::extreme::{
    asymptotic_eval, hitting_prob_quadrature, scenario_laws, tabulate_covering, verify_prop_p1, ExtremeResult,
};
use xfpt_core::geo::bound_exponent;
use xfpt_core::mc::{estimate_extreme, estimate_extreme_paths, McEstimate, PathConfig};
use xfpt_core::shorttime::{catalog, fit_grid, fit_shorttime};
use xfpt_core::{Error, GridControl, ScenarioSpec, TabulatedDistribution};

use crate::config::{Config, McEngine};
use crate::output::{num, Table};

pub struct Run<'a> {
    pub cfg: &'a Config,
    pub out: &'a Path,
    pub provenance: String,
}

fn remediate(e: Error) -> anyhow::Error {
    match e {
        Error::GridCoverage { t_min, peak, weight } => anyhow!(
            "the time grid starts at {t_min:e} but the integrand peaks near {peak:e} (weight {weight:e}); \
             raise grid.n_max or grid.points so the grid reaches further toward t = 0"
        ),
        other => other.into(),
    }
}

impl Run<'_> {
    fn table(&self, name: &str, header: &[&str]) -> Result<Table> {
        Table::create(self.out, name, &self.provenance, header)
    }

    fn ladder(&self) -> &[u64] {
        &self.cfg.n_ladder
    }

    fn n_max(&self) -> u64 {
        self.ladder().iter().copied().max().unwrap_or(1)
    }

    /// Tabulation on the default grid, extended until quadrature at the
    /// largest ladder entry is covered.
    fn tabulation(&self, spec: &ScenarioSpec) -> Result<TabulatedDistribution> {
        let ctl = GridControl {
            n_max: self.cfg.grid.n_max.max(self.n_max() as f64),
            ..self.cfg.grid.clone()
        };
        let grid = spec.default_grid(&ctl).map_err(remediate)?;
        Ok(tabulate_covering(spec, &ctl, grid, self.n_max()).map_err(remediate)?.0)
    }

    pub fn dist(&self) -> Result<Vec<PathBuf>> {
        let spec = self.cfg.scenario()?;
        let tab = spec
            .tabulate(&spec.default_grid(&self.cfg.grid)?, &self.cfg.grid)
            .map_err(remediate)?;
        let m = tab.target_count();
        let mut header = vec!["t".to_string(), "F".into(), "log_F".into()];
        for k in 0..m {
            header.push(format!("F_{k}"));
            header.push(format!("log_F_{k}"));
        }
        let header: Vec<&str> = header.iter().map(String::as_str).collect();
        let mut t = self.table("dist.csv", &header)?;
        for (i, time) in tab.times().iter().enumerate() {
            let mut row = vec![num(*time), num(tab.total()[i]), num(tab.log_total()[i])];
            for k in 0..m {
                row.push(num(tab.target(k)[i]));
                row.push(num(tab.log_target(k)[i]));
            }
            t.row(&row)?;
        }
        let mut tails = self.table("tails.csv", &["k", "tail_mass"])?;
        for (k, v) in tab.tail_mass().iter().enumerate() {
            tails.row([k.to_string(), num(*v)])?;
        }
        tails.row(["inf".to_string(), num(tab.escape_mass())])?;
        Ok(vec![t.finish()?, tails.finish()?])
    }

    pub fn extreme(&self) -> Result<Vec<PathBuf>> {
        let spec = self.cfg.scenario()?;
        let tab = self.tabulation(spec)?;
        let mut t = self.table("extreme.csv", &["kind", "k", "N", "p", "log_p", "method"])?;
        for k in 0..tab.target_count() {
            for &n in self.ladder() {
                let r = hitting_prob_quadrature(&tab, n, k).map_err(remediate)?;
                write_result(&mut t, spec.kind(), &r)?;
            }
        }
        Ok(vec![t.finish()?])
    }

    pub fn asymptotic(&self, allow_close: bool) -> Result<Vec<PathBuf>> {
        let spec = self.cfg.scenario()?;
        let laws = scenario_laws(spec, allow_close)?;
        let mut t = self.table(
            "asymptotic.csv",
            &["k", "N", "beta", "rho", "eta", "log_eta", "p", "log_p", "clamped"],
        )?;
        for (k, law) in laws.iter().enumerate() {
            let Some(law) = law else { continue };
            for &n in self.ladder().iter().filter(|&&n| n >= 2) {
                let r = asymptotic_eval(law, n, k)?;
                t.row([
                    k.to_string(),
                    n.to_string(),
                    num(law.beta),
                    num(law.rho),
                    num(law.eta),
                    num(law.log_eta),
                    num(r.p),
                    num(r.log_p),
                    r.diagnostics.clamped.to_string(),
                ])?;
            }
        }
        Ok(vec![t.finish()?])
    }

    pub fn mc(&self) -> Result<Vec<PathBuf>> {
        let spec = self.cfg.scenario()?;
        let mc = &self.cfg.mc;
        let mut t = self.table(
            "mc.csv",
            &["kind", "k", "N", "p", "log_p", "ci_low", "ci_high", "samples", "method"],
        )?;
        let run: Box<dyn Fn(u64) -> Result<Vec<McEstimate>>> = match mc.engine {
            McEngine::Inversion => {
                let tab = self.tabulation(spec)?;
                Box::new(move |n| Ok(estimate_extreme(&tab, n, mc.trials, self.cfg.seed)?))
            }
            McEngine::Paths => {
                let dt = match mc.dt {
                    Some(dt) => dt,
                    None => default_step(spec)?,
                };
                let cfg = PathConfig { dt, t_max: mc.t_max };
                Box::new(move |n| Ok(estimate_extreme_paths(spec, &cfg, n, mc.trials, self.cfg.seed)?))
            }
        };
        let method = match mc.engine {
            McEngine::Inversion => "monte_carlo",
            McEngine::Paths => "monte_carlo_paths",
        };
        for &n in self.ladder() {
            for e in run(n)? {
                t.row([
                    spec.kind().to_string(),
                    e.k.map_or("inf".into(), |k| k.to_string()),
                    n.to_string(),
                    num(e.p_hat),
                    num(e.p_hat.ln()),
                    num(e.ci_low),
                    num(e.ci_high),
                    e.samples.to_string(),
                    method.to_string(),
                ])?;
            }
        }
        Ok(vec![t.finish()?])
    }

    pub fn bound(&self) -> Result<Vec<PathBuf>> {
        let spec = self.cfg.scenario()?;
        let lengths = spec.distances()?;
        let d = spec.diffusivity();
        let (closest, near) = lengths
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (k, l)| if l < acc.1 { (k, l) } else { acc });
        let mut t = self.table("bound.csv", &["k", "L_k", "C_k", "exponent"])?;
        for (k, &l) in lengths.iter().enumerate() {
            let (scale, exponent) = if k == closest {
                (near * near / (4.0 * d), 0.0)
            } else {
                let b = bound_exponent(near, l, d).with_context(|| format!("target {k}"))?;
                (b.far_scale, b.exponent)
            };
            t.row([k.to_string(), num(l), num(scale), num(exponent)])?;
        }
        Ok(vec![t.finish()?])
    }

    pub fn verify_p1(&self) -> Result<Vec<PathBuf>> {
        let ns: Vec<u64> = self.ladder().iter().copied().filter(|&n| n >= 2).collect();
        if ns.is_empty() {
            bail!("n_ladder: verify-p1 needs searcher counts >= 2");
        }
        let rows = verify_prop_p1(&self.cfg.model, &ns)?;
        let mut t = self.table(
            "verify_p1.csv",
            &["N", "integral", "log_integral", "asymptote", "log_asymptote", "ratio"],
        )?;
        for r in rows {
            t.row([
                r.n.to_string(),
                num(r.integral),
                num(r.log_integral),
                num(r.asymptote),
                num(r.log_asymptote),
                num(r.ratio),
            ])?;
        }
        Ok(vec![t.finish()?])
    }

    pub fn fit(&self) -> Result<Vec<PathBuf>> {
        let spec = self.cfg.scenario()?;
        let grid = fit_grid(spec, &self.cfg.grid)?;
        let tab = spec.tabulate(&grid, &self.cfg.grid)?;
        let cat = catalog(spec)?;
        let mut t = self.table(
            "fit.csv",
            &["target", "A_fit", "p_fit", "C_fit", "A_cat", "p_cat", "C_cat", "residual"],
        )?;
        for entry in &cat {
            let k = entry.target;
            let (a, p, c, res) = match fit_shorttime(&tab, k) {
                Ok(f) => (f.params.amplitude, f.params.power, f.params.scale, f.residual),
                Err(e) => {
                    eprintln!("target {k}: no fit ({e})");
                    (f64::NAN, f64::NAN, f64::NAN, f64::NAN)
                }
            };
            let (ac, pc, cc) = entry
                .params
                .map_or((f64::NAN, f64::NAN, f64::NAN), |q| (q.amplitude, q.power, q.scale));
            t.row([k.to_string(), num(a), num(p), num(c), num(ac), num(pc), num(cc), num(res)])?;
        }
        Ok(vec![t.finish()?])
    }

    pub fn figure(&self, target: usize) -> Result<Vec<PathBuf>> {
        let spec = self.cfg.scenario()?;
        let laws = scenario_laws(spec, false)?;
        let law = laws
            .get(target)
            .copied()
            .flatten()
            .with_context(|| format!("target {target} has no large-N law (closest or unreachable)"))?;
        let tab = self.tabulation(spec)?;
        let mut t = self.table(
            "figure.csv",
            &["N", "p_quad", "p_asym", "rel_err", "log_p_quad", "log_p_asym"],
        )?;
        for &n in self.ladder().iter().filter(|&&n| n >= 2) {
            let q = hitting_prob_quadrature(&tab, n, target).map_err(remediate)?;
            let a = asymptotic_eval(&law, n, target)?;
            // |p_quad - p_asym| / p_quad, formed from logs so it survives underflow.
            let rel = (a.log_p - q.log_p).exp_m1().abs();
            t.row([
                n.to_string(),
                num(q.p),
                num(a.p),
                num(rel),
                num(q.log_p),
                num(a.log_p),
            ])?;
        }
        Ok(vec![t.finish()?])
    }
}

fn write_result(t: &mut Table, kind: &str, r: &ExtremeResult) -> Result<()> {
    t.row([
        kind.to_string(),
        r.k.to_string(),
        r.n.to_string(),
        num(r.p),
        num(r.log_p),
        r.method.as_str().to_string(),
    ])
}

/// 1e-4 of the characteristic time, the largest step path simulation accepts.
fn default_step(spec: &ScenarioSpec) -> Result<f64> {
    let d = spec.diffusivity();
    let scale = match spec {
        ScenarioSpec::Concentric { .. } => spec.distances()?.into_iter().fold(f64::INFINITY, f64::min),
        _ => spec.distances()?.iter().sum(),
    };
    Ok(1e-4 * scale * scale / d)
}
