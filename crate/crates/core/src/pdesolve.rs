//! Finite-difference solver for the backward equation of hitting
//! probabilities on an interval with Robin ends and between concentric
//! absorbing spheres.
//!
//! For each target `k`, `u_k(x, t) = P_x(tau <= t, kappa = k)` solves the
//! diffusion equation in the start variable with `u_k = 0` at `t = 0` and
//! boundary data equal to `1` on target `k` and `0` on the others. Robin ends
//! use `D du/dn = gamma (v - u)` with `n` the outward normal and `v` the
//! boundary datum.
//!
//! Both targets are solved separately, so `F = F_0 + F_1` without the
//! cancellation that `F - F_1` would suffer where `F_0` is tiny. Tail masses
//! come from the discrete steady state of the same operator. Time stepping
//! is a fourth-order rational (Padé) scheme after a short backward Euler
//! start, so the deep short-time tails keep their relative accuracy.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::tabulation::{TabulatedDistribution, TimeGrid};

/// Partially absorbing ends on `(0, l)`; `f64::INFINITY` means absorbing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobinIntervalProblem {
    pub length: f64,
    pub diffusivity: f64,
    pub start: f64,
    /// Trapping rate of the end at `x = 0` (target 0).
    pub gamma_left: f64,
    /// Trapping rate of the end at `x = l` (target 1).
    pub gamma_right: f64,
}

impl RobinIntervalProblem {
    pub fn validate(&self) -> Result<()> {
        if !(self.length > 0.0 && self.length.is_finite()) {
            return Err(invalid("l", format!("length must be positive, got {}", self.length)));
        }
        if !(self.diffusivity > 0.0 && self.diffusivity.is_finite()) {
            return Err(invalid("D", format!("diffusivity must be positive, got {}", self.diffusivity)));
        }
        if !(self.start > 0.0 && self.start < self.length) {
            return Err(invalid("x0", format!("start {} not inside (0, {})", self.start, self.length)));
        }
        for (field, g) in [("gamma0", self.gamma_left), ("gamma1", self.gamma_right)] {
            if !(g >= 0.0) {
                return Err(invalid(field, format!("trapping rate must be >= 0 or inf, got {g}")));
            }
        }
        if self.gamma_left == 0.0 && self.gamma_right == 0.0 {
            return Err(invalid("gamma0", "at least one trapping rate must be positive"));
        }
        Ok(())
    }

    pub fn distances(&self) -> [f64; 2] {
        [self.start, self.length - self.start]
    }

    /// Time after which the unabsorbed mass is negligible:
    /// `50 l^2 / D * max(1, D / (gamma_min l))`.
    pub fn relaxation_time(&self) -> f64 {
        // A reflecting end (gamma = 0) does not limit the absorption rate.
        let g_min = [self.gamma_left, self.gamma_right]
            .into_iter()
            .filter(|&g| g > 0.0)
            .fold(f64::INFINITY, f64::min);
        let l = self.length;
        let d = self.diffusivity;
        50.0 * l * l / d * (d / (g_min * l)).max(1.0)
    }
}

/// Absorbing spheres of radii `inner < outer` (targets 0 and 1), start at
/// radius `start` between them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConcentricProblem {
    pub inner: f64,
    pub outer: f64,
    pub start: f64,
    pub diffusivity: f64,
}

impl ConcentricProblem {
    pub fn validate(&self) -> Result<()> {
        if !(self.inner > 0.0 && self.inner < self.start && self.start < self.outer && self.outer.is_finite()) {
            return Err(invalid(
                "r0",
                format!("need 0 < R0 < r0 < R1, got {} {} {}", self.inner, self.start, self.outer),
            ));
        }
        if !(self.diffusivity > 0.0 && self.diffusivity.is_finite()) {
            return Err(invalid("D", format!("diffusivity must be positive, got {}", self.diffusivity)));
        }
        Ok(())
    }

    pub fn distances(&self) -> [f64; 2] {
        [self.start - self.inner, self.outer - self.start]
    }

    /// Twenty e-folds of the slowest mode `pi^2 D / (R1 - R0)^2`.
    pub fn relaxation_time(&self) -> f64 {
        let w = self.outer - self.inner;
        20.0 * w * w / (std::f64::consts::PI.powi(2) * self.diffusivity)
    }
}

/// Discretisation controls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PdeConfig {
    /// Number of spatial nodes, boundaries included.
    pub space_nodes: usize,
    /// Time step as a fraction of the current time.
    pub step_fraction: f64,
    /// Backward Euler steps used to damp the initial boundary discontinuity.
    pub startup_steps: usize,
}

impl Default for PdeConfig {
    fn default() -> Self {
        Self {
            space_nodes: 2000,
            step_fraction: 1e-3,
            startup_steps: 100,
        }
    }
}

impl PdeConfig {
    fn validate(&self) -> Result<()> {
        if self.space_nodes < 200 {
            return Err(invalid("space_nodes", format!("need >= 200, got {}", self.space_nodes)));
        }
        if !(self.step_fraction > 0.0 && self.step_fraction <= 0.1) {
            return Err(invalid("step_fraction", format!("need (0, 0.1], got {}", self.step_fraction)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
enum Boundary {
    Dirichlet(f64),
    Robin { gamma: f64, value: f64 },
}

impl Boundary {
    fn new(gamma: f64, value: f64) -> Self {
        if gamma.is_infinite() {
            Boundary::Dirichlet(value)
        } else {
            Boundary::Robin { gamma, value }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Geometry {
    Slab,
    /// Radial coordinate `r = origin + x`.
    Radial { origin: f64 },
}

/// `du/dt = L u + s` on a uniform mesh, as three diagonals and a source.
struct Operator {
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
    source: Vec<f64>,
    /// Rows pinned to a boundary value.
    pinned: Vec<Option<f64>>,
}

impl Operator {
    fn build(nodes: usize, h: f64, d: f64, geometry: Geometry, left: Boundary, right: Boundary) -> Self {
        let n = nodes;
        let mut op = Operator {
            lower: vec![0.0; n],
            diag: vec![0.0; n],
            upper: vec![0.0; n],
            source: vec![0.0; n],
            pinned: vec![None; n],
        };
        let k = d / (h * h);
        for i in 1..n - 1 {
            let (wl, wr) = match geometry {
                Geometry::Slab => (1.0, 1.0),
                Geometry::Radial { origin } => {
                    let r = origin + h * i as f64;
                    let rl = r - 0.5 * h;
                    let rr = r + 0.5 * h;
                    (rl * rl / (r * r), rr * rr / (r * r))
                }
            };
            op.lower[i] = k * wl;
            op.diag[i] = -k * (wl + wr);
            op.upper[i] = k * wr;
        }
        // Ghost-node Robin rows (slab only; the radial problems are absorbing).
        for (i, bc, inward) in [(0, left, 1usize), (n - 1, right, n - 2)] {
            match bc {
                Boundary::Dirichlet(v) => op.pinned[i] = Some(v),
                Boundary::Robin { gamma, value } => {
                    op.diag[i] = -2.0 * k - 2.0 * gamma / h;
                    op.source[i] = 2.0 * gamma * value / h;
                    if inward > i {
                        op.upper[i] = 2.0 * k;
                    } else {
                        op.lower[i] = 2.0 * k;
                    }
                }
            }
        }
        op
    }

    /// `out = dt * (L u + s)`. Pinned rows have no coefficients and so
    /// never move.
    fn increment(&self, u: &[f64], dt: f64, out: &mut [f64]) {
        let n = u.len();
        out[0] = dt * (self.diag[0] * u[0] + self.upper[0] * u[1] + self.source[0]);
        for i in 1..n - 1 {
            out[i] = dt * (self.lower[i] * u[i - 1] + self.diag[i] * u[i] + self.upper[i] * u[i + 1] + self.source[i]);
        }
        out[n - 1] = dt * (self.lower[n - 1] * u[n - 2] + self.diag[n - 1] * u[n - 1] + self.source[n - 1]);
    }

    /// Thomas factorisation of `I - scale L`.
    fn factor(&self, scale: f64) -> Result<Factored> {
        let n = self.diag.len();
        let mut f = Factored {
            lower: vec![0.0; n],
            upper: vec![0.0; n],
            inv_pivot: vec![0.0; n],
        };
        let mut prev = 0.0;
        for i in 0..n {
            let a = -scale * self.lower[i];
            let b = 1.0 - scale * self.diag[i];
            let c = -scale * self.upper[i];
            let m = b - a * prev;
            if !(m.abs() > 0.0) || !m.is_finite() {
                return Err(Error::Solver(format!("zero pivot in row {i}")));
            }
            f.lower[i] = a;
            f.inv_pivot[i] = 1.0 / m;
            prev = c / m;
            f.upper[i] = prev;
        }
        Ok(f)
    }

    /// Backward Euler step `(I - dt L) u' = u + dt s`.
    fn implicit_step(&self, dt: f64, u: &mut Vec<f64>, rhs: &mut Vec<f64>) -> Result<()> {
        for i in 0..u.len() {
            rhs[i] = u[i] + dt * self.source[i];
        }
        self.factor(dt)?.solve(rhs)?;
        std::mem::swap(u, rhs);
        Ok(())
    }

    /// Discrete steady state `L u + s = 0`.
    fn steady(&self) -> Result<Vec<f64>> {
        let n = self.diag.len();
        let mut rhs: Vec<f64> = (0..n)
            .map(|i| match self.pinned[i] {
                Some(v) => v,
                None => self.source[i],
            })
            .collect();
        // Solve -L u = s for free rows; pinned rows are identity rows.
        let mut work = vec![0.0; n];
        let row = |i: usize| -> (f64, f64, f64) {
            if self.pinned[i].is_some() {
                (0.0, 1.0, 0.0)
            } else {
                (-self.lower[i], -self.diag[i], -self.upper[i])
            }
        };
        let (_, b0, c0) = row(0);
        work[0] = c0 / b0;
        rhs[0] /= b0;
        for i in 1..n {
            let (a, b, c) = row(i);
            let m = b - a * work[i - 1];
            if !(m.abs() > 1e-300) {
                return Err(Error::Solver(format!("singular steady-state system at row {i}")));
            }
            work[i] = c / m;
            rhs[i] = (rhs[i] - a * rhs[i - 1]) / m;
        }
        for i in (0..n - 1).rev() {
            rhs[i] -= work[i] * rhs[i + 1];
        }
        Ok(rhs)
    }
}

struct Factored {
    lower: Vec<f64>,
    upper: Vec<f64>,
    inv_pivot: Vec<f64>,
}

impl Factored {
    fn solve(&self, rhs: &mut [f64]) -> Result<()> {
        let n = rhs.len();
        rhs[0] *= self.inv_pivot[0];
        for i in 1..n {
            rhs[i] = (rhs[i] - self.lower[i] * rhs[i - 1]) * self.inv_pivot[i];
        }
        for i in (0..n - 1).rev() {
            rhs[i] -= self.upper[i] * rhs[i + 1];
        }
        if !rhs[0].is_finite() || !rhs[n / 2].is_finite() {
            return Err(Error::Solver("non-finite solution".into()));
        }
        Ok(())
    }
}

/// Fourth-order rational step: the (2,2) Padé approximant of `exp(dt L)`,
/// applied to the affine system as
/// `u' = u + 2 Re[g (I - a dt L)^{-1} dt (L u + s)]` with
/// `a = (3 - i sqrt 3) / 12` and `g = (1 + i sqrt 3) / 2`. Working on the
/// increment keeps relative accuracy where `u` is tiny.
struct PadeStep {
    dt: f64,
    lower: Vec<Complex64>,
    upper: Vec<Complex64>,
    inv_pivot: Vec<Complex64>,
}

impl PadeStep {
    fn new(op: &Operator, dt: f64) -> Result<Self> {
        let n = op.diag.len();
        let a = Complex64::new(3.0, -(3.0f64).sqrt()) / 12.0 * dt;
        let mut s = PadeStep {
            dt,
            lower: vec![Complex64::default(); n],
            upper: vec![Complex64::default(); n],
            inv_pivot: vec![Complex64::default(); n],
        };
        let mut prev = Complex64::default();
        for i in 0..n {
            let lo = -a * op.lower[i];
            let m = (Complex64::new(1.0, 0.0) - a * op.diag[i]) - lo * prev;
            if !(m.norm() > 0.0) || !m.is_finite() {
                return Err(Error::Solver(format!("zero pivot in row {i}")));
            }
            s.lower[i] = lo;
            s.inv_pivot[i] = m.inv();
            prev = -a * op.upper[i] * s.inv_pivot[i];
            s.upper[i] = prev;
        }
        Ok(s)
    }

    fn advance(&self, op: &Operator, u: &mut [f64], incr: &mut [f64], y: &mut [Complex64]) -> Result<()> {
        let n = u.len();
        op.increment(u, self.dt, incr);
        y[0] = incr[0] * self.inv_pivot[0];
        for i in 1..n {
            y[i] = (incr[i] - self.lower[i] * y[i - 1]) * self.inv_pivot[i];
        }
        for i in (0..n - 1).rev() {
            let next = y[i + 1];
            y[i] -= self.upper[i] * next;
        }
        let root3 = (3.0f64).sqrt();
        for i in 0..n {
            let v = u[i] + y[i].re - root3 * y[i].im;
            // Far-field values below 1e-300 carry nothing the probe can see
            // and would otherwise decay into slow subnormal arithmetic.
            u[i] = if v.abs() < 1e-300 { 0.0 } else { v };
        }
        if !u[n / 2].is_finite() {
            return Err(Error::Solver("non-finite solution".into()));
        }
        Ok(())
    }
}

/// Four-point Lagrange interpolation at `x` from nodes `x_j = j h`. Small
/// positive values are interpolated on logs so they keep their relative
/// accuracy; values of order one are interpolated directly.
struct Probe {
    first: usize,
    weights: [f64; 4],
}

impl Probe {
    fn new(nodes: usize, h: f64, x: f64) -> Self {
        let j = ((x / h).floor() as isize).clamp(1, nodes as isize - 3) as usize;
        let first = j - 1;
        let mut weights = [0.0; 4];
        for (a, w) in weights.iter_mut().enumerate() {
            let xa = (first + a) as f64 * h;
            let mut p = 1.0;
            for b in 0..4 {
                if b != a {
                    let xb = (first + b) as f64 * h;
                    p *= (x - xb) / (xa - xb);
                }
            }
            *w = p;
        }
        Probe { first, weights }
    }

    fn eval(&self, u: &[f64]) -> f64 {
        let v = &u[self.first..self.first + 4];
        if v.iter().all(|&y| y > 0.0 && y < 1e-3) {
            self.weights.iter().zip(v).map(|(w, y)| w * y.ln()).sum::<f64>().exp()
        } else {
            self.weights.iter().zip(v).map(|(w, y)| w * y).sum()
        }
    }
}

struct Solve {
    columns: Vec<Vec<f64>>,
    tail: Vec<f64>,
}

fn run(
    geometry: Geometry,
    span: f64,
    start: f64,
    d: f64,
    boundaries: &[(Boundary, Boundary)],
    grid: &TimeGrid,
    cfg: &PdeConfig,
) -> Result<Solve> {
    cfg.validate()?;
    let n = cfg.space_nodes;
    let h = span / (n - 1) as f64;
    let probe = Probe::new(n, h, start);
    let mut columns = Vec::with_capacity(boundaries.len());
    let mut tail = Vec::with_capacity(boundaries.len());
    for &(left, right) in boundaries {
        let op = Operator::build(n, h, d, geometry, left, right);
        tail.push(probe.eval(&op.steady()?).clamp(0.0, 1.0));
        columns.push(march(&op, n, &probe, grid, cfg)?);
    }
    Ok(Solve { columns, tail })
}

/// Marches from zero through the grid times with steps of about
/// `frac * t`, after a few backward Euler steps that damp the jump between
/// the boundary value and the initial state.
fn march(
    op: &Operator,
    n: usize,
    probe: &Probe,
    grid: &TimeGrid,
    cfg: &PdeConfig,
) -> Result<Vec<f64>> {
    let mut u: Vec<f64> = (0..n).map(|i| op.pinned[i].unwrap_or(0.0)).collect();
    let mut rhs = vec![0.0; n];
    let frac = cfg.step_fraction;

    // Backward Euler start over [0, frac * t_1].
    let t0 = frac * grid.t_min();
    let be_steps = cfg.startup_steps.max(1);
    for _ in 0..be_steps {
        op.implicit_step(t0 / be_steps as f64, &mut u, &mut rhs)?;
    }

    // The step is held fixed while it stays within 25% of the desired step
    // so that one factorisation serves many steps.
    let mut incr = vec![0.0; n];
    let mut y = vec![Complex64::default(); n];
    let mut t = t0;
    let mut block: Option<PadeStep> = None;
    let mut out = Vec::with_capacity(grid.len());
    for &target in grid.times() {
        while t < target {
            let remaining = target - t;
            if block.as_ref().map_or(true, |b| b.dt < frac * t / 1.25) {
                block = Some(PadeStep::new(op, frac * t)?);
            }
            let step = block.as_ref().unwrap();
            if remaining < 1.25 * step.dt {
                PadeStep::new(op, remaining)?.advance(op, &mut u, &mut incr, &mut y)?;
                t = target;
            } else {
                step.advance(op, &mut u, &mut incr, &mut y)?;
                t += step.dt;
            }
        }
        out.push(probe.eval(&u));
    }
    Ok(out)
}

/// Tabulates `F_0` (left end) and `F_1` (right end) at the start point.
pub fn solve_robin_interval(
    prob: &RobinIntervalProblem,
    grid: &TimeGrid,
    cfg: &PdeConfig,
) -> Result<TabulatedDistribution> {
    prob.validate()?;
    let (g0, g1) = (prob.gamma_left, prob.gamma_right);
    let boundaries = [
        (Boundary::new(g0, 1.0), Boundary::new(g1, 0.0)),
        (Boundary::new(g0, 0.0), Boundary::new(g1, 1.0)),
    ];
    let s = run(Geometry::Slab, prob.length, prob.start, prob.diffusivity, &boundaries, grid, cfg)?;
    TabulatedDistribution::from_columns(grid, s.columns, s.tail)
}

/// Tabulates `F_0` (inner sphere) and `F_1` (outer sphere) at the start radius.
pub fn solve_concentric(prob: &ConcentricProblem, grid: &TimeGrid, cfg: &PdeConfig) -> Result<TabulatedDistribution> {
    prob.validate()?;
    let boundaries = [
        (Boundary::Dirichlet(1.0), Boundary::Dirichlet(0.0)),
        (Boundary::Dirichlet(0.0), Boundary::Dirichlet(1.0)),
    ];
    let s = run(
        Geometry::Radial { origin: prob.inner },
        prob.outer - prob.inner,
        prob.start - prob.inner,
        prob.diffusivity,
        &boundaries,
        grid,
        cfg,
    )?;
    TabulatedDistribution::from_columns(grid, s.columns, s.tail)
}

/// Geometric grid from `C_0 / (ln n_max + 40)` to `relaxation`, where
/// `near` is the distance to the closest target.
pub fn default_grid(near: f64, diffusivity: f64, relaxation: f64, n_max: f64, points: usize) -> Result<TimeGrid> {
    let c0 = near * near / (4.0 * diffusivity);
    let t_min = c0 / (n_max.max(1.0).ln() + 40.0);
    TimeGrid::geometric(t_min, relaxation.max(2.0 * t_min), points)
}
