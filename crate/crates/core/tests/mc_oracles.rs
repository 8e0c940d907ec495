use xfpt_core::extreme::hitting_prob_quadrature;
use xfpt_core::mc::{
    estimate_extreme, path_splitting, sample_tau_kappa, simulate_paths, McEstimate, PathConfig, RngStream,
};
use xfpt_core::pdesolve::PdeConfig;
use xfpt_core::special::erfc;
use xfpt_core::{GridControl, ScenarioSpec, TabulatedDistribution, TimeGrid};

fn pure(start: f64) -> ScenarioSpec {
    ScenarioSpec::IntervalPure {
        length: 1.0,
        diffusivity: 1.0,
        start,
    }
}

fn tabulate(spec: &ScenarioSpec, n_max: f64) -> TabulatedDistribution {
    let ctl = GridControl {
        n_max,
        ..Default::default()
    };
    spec.tabulate(&spec.default_grid(&ctl).unwrap(), &ctl).unwrap()
}

/// Linear interpolation of the tabulated total CDF.
fn tab_cdf(tab: &TabulatedDistribution, t: f64) -> f64 {
    let times = tab.times();
    let f = tab.total();
    match times.partition_point(|&s| s < t) {
        0 => 0.0,
        i if i >= times.len() => tab.total_mass(),
        i => f[i - 1] + (f[i] - f[i - 1]) * (t - times[i - 1]) / (times[i] - times[i - 1]),
    }
}

#[test]
fn sampled_times_match_tabulated_cdf() {
    let tab = tabulate(&pure(0.45), 1e3);
    let m = 1_000_000u64;
    let mut taus: Vec<f64> = (0..m).map(|i| sample_tau_kappa(&tab, RngStream::new(11, i)).0).collect();
    taus.sort_by(|a, b| a.total_cmp(b));
    let ks = taus
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let f = tab_cdf(&tab, t);
            (f - i as f64 / m as f64).abs().max((f - (i + 1) as f64 / m as f64).abs())
        })
        .fold(0.0, f64::max);
    assert!(ks < 0.002, "KS distance {ks}");
}

#[test]
fn sampled_targets_match_splitting() {
    let tab = tabulate(&pure(0.3), 1e3);
    let m = 200_000u64;
    let hits = (0..m)
        .filter(|&i| sample_tau_kappa(&tab, RngStream::new(5, i)).1 == Some(1))
        .count() as u64;
    let est = McEstimate::wilson(hits, m, 1, Some(1));
    assert!(est.contains(tab.tail_mass()[1]), "{est:?}");
}

#[test]
fn escape_draws_follow_escape_mass() {
    // Exterior of a sphere of radius 1 from r = 2: F(t) = (1/2) erfc(1 / sqrt(4t)).
    let grid = TimeGrid::geometric(1e-3, 1e6, 2000).unwrap();
    let col: Vec<f64> = grid.times().iter().map(|t| 0.5 * erfc(0.5 / t.sqrt())).collect();
    let tab = TabulatedDistribution::from_columns(&grid, vec![col], vec![0.5]).unwrap();
    let m = 100_000u64;
    let escapes = (0..m)
        .filter(|&i| sample_tau_kappa(&tab, RngStream::new(3, i)).1.is_none())
        .count() as u64;
    assert!(McEstimate::wilson(escapes, m, 1, None).contains(0.5));
    let est = estimate_extreme(&tab, 2, 100_000, 9).unwrap();
    // Three standard errors: a 95% interval misses 1 time in 20.
    let e = est[1];
    assert!((e.p_hat - 0.25).abs() < 1.5 * (e.ci_high - e.ci_low), "{est:?}");
}

#[test]
fn symmetric_extreme_is_half() {
    let tab = tabulate(&pure(0.5), 1e3);
    let est = estimate_extreme(&tab, 100, 200_000, 1).unwrap();
    assert!(est[1].contains(0.5), "{est:?}");
    assert_eq!(est[0].p_hat + est[1].p_hat + est[2].p_hat, 1.0);
}

#[test]
fn single_searcher_estimate_contains_splitting() {
    let tab = tabulate(&pure(0.45), 1e3);
    let est = estimate_extreme(&tab, 1, 200_000, 2).unwrap();
    for k in 0..2 {
        assert!(est[k].contains(tab.tail_mass()[k]), "{est:?}");
    }
}

#[test]
fn extreme_estimate_contains_quadrature() {
    let tab = tabulate(&pure(0.45), 1e4);
    let est = estimate_extreme(&tab, 1000, 1_000_000, 3).unwrap();
    let quad = hitting_prob_quadrature(&tab, 1000, 1).unwrap().p;
    assert!(est[1].contains(quad), "{:?} vs {quad}", est[1]);
}

#[test]
fn estimates_do_not_depend_on_thread_count() {
    let tab = tabulate(&pure(0.45), 1e3);
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| estimate_extreme(&tab, 10, 20_000, 42).unwrap())
    };
    assert_eq!(run(1), run(3));
    let spec = pure(0.45);
    let cfg = PathConfig { dt: 1e-4, t_max: 5.0 };
    let paths = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| simulate_paths(&spec, &cfg, 200, 8).unwrap())
    };
    assert_eq!(paths(1), paths(4));
}

#[test]
fn path_splitting_pure_and_drift() {
    let cfg = PathConfig { dt: 1e-4, t_max: 10.0 };
    let est = path_splitting(&pure(0.45), &cfg, 100_000, 17).unwrap();
    assert!(est[1].contains(0.45), "{est:?}");
    let drift = ScenarioSpec::IntervalDrift {
        length: 1.0,
        diffusivity: 1.0,
        drift: 1.0,
        start: 0.45,
    };
    let want = (1.0 - (-0.45f64).exp()) / (1.0 - (-1.0f64).exp());
    let est = path_splitting(&drift, &cfg, 50_000, 18).unwrap();
    assert!(est[1].contains(want), "{est:?} vs {want}");
}

#[test]
fn robin_paths_track_pde_checkpoints() {
    let spec = ScenarioSpec::IntervalRobin {
        length: 1.0,
        diffusivity: 1.0,
        start: 0.45,
        gamma_left: 1.0,
        gamma_right: f64::INFINITY,
    };
    let checkpoints = [0.05, 0.1, 0.3];
    let grid = TimeGrid::new(checkpoints.to_vec()).unwrap();
    let ctl = GridControl {
        pde: PdeConfig {
            space_nodes: 4000,
            ..Default::default()
        },
        ..Default::default()
    };
    let tab = spec.tabulate(&grid, &ctl).unwrap();
    let m = 20_000u64;
    let errors = |dt: f64| -> Vec<(f64, f64)> {
        let hits = simulate_paths(&spec, &PathConfig { dt, t_max: 0.31 }, m, 23).unwrap();
        checkpoints
            .iter()
            .enumerate()
            .map(|(i, &t)| {
                let c = hits.iter().filter(|h| h.0 <= t).count() as u64;
                let est = McEstimate::wilson(c, m, 1, None);
                let want = tab.total()[i + 1];
                ((est.p_hat - want).abs(), est.ci_high - est.ci_low)
            })
            .collect()
    };
    for (err, width) in errors(1e-4) {
        assert!(err <= 1.5 * width, "error {err}, CI width {width}");
    }
}

#[test]
fn oversized_step_is_rejected() {
    let cfg = PathConfig { dt: 1e-3, t_max: 1.0 };
    assert!(simulate_paths(&pure(0.45), &cfg, 10, 0).is_err());
    let conc = ScenarioSpec::Concentric {
        inner: 0.25,
        outer: 1.0,
        start: 0.5,
        diffusivity: 1.0,
    };
    assert!(simulate_paths(&conc, &PathConfig { dt: 1e-5, t_max: 1.0 }, 10, 0).is_err());
}

#[test]
fn concentric_paths_split_like_harmonic_measure() {
    let conc = ScenarioSpec::Concentric {
        inner: 0.25,
        outer: 1.0,
        start: 0.5,
        diffusivity: 1.0,
    };
    // P(outer first) = (1/R0 - 1/r0) / (1/R0 - 1/R1) = 2/3.
    let est = path_splitting(&conc, &PathConfig { dt: 5e-6, t_max: 5.0 }, 4000, 31).unwrap();
    let ci = est[1];
    assert!((ci.p_hat - 2.0 / 3.0).abs() < 2.0 * (ci.ci_high - ci.ci_low), "{ci:?}");
}


#[test]
fn large_searcher_counts_sample_the_minimum_directly() {
    let tab = tabulate(&pure(0.45), 1e6);
    let n = 100_000;
    let est = estimate_extreme(&tab, n, 200_000, 4).unwrap();
    let quad = hitting_prob_quadrature(&tab, n, 1).unwrap().p;
    let e = est[1];
    assert!((e.p_hat - quad).abs() < 1.5 * (e.ci_high - e.ci_low), "{e:?} vs {quad}");
}
