//! Closed-form hitting probabilities used as tail masses and as reference
//! solutions for the finite-difference solver.

use crate::special::{erfc, erfcx};

/// `P(kappa = right end)` for diffusion on `(0, l)` with trapping rates
/// `gamma_left`, `gamma_right` (either may be `inf`, at least one positive).
///
/// Solves `u'' = 0` with `D u' = gamma_left u` at `0` and
/// `D u' = gamma_right (1 - u)` at `l`.
pub fn robin_splitting(length: f64, diffusivity: f64, start: f64, gamma_left: f64, gamma_right: f64) -> f64 {
    if gamma_left == 0.0 {
        return 1.0;
    }
    if gamma_right == 0.0 {
        return 0.0;
    }
    // D / gamma is the extrapolation length of each Robin end; zero for an absorbing end.
    let ext_left = diffusivity / gamma_left;
    let ext_right = diffusivity / gamma_right;
    (ext_left + start) / (ext_left + length + ext_right)
}

/// `P(kappa = outer)` between absorbing spheres of radii `inner < outer`,
/// started at radius `start`.
pub fn concentric_splitting(inner: f64, outer: f64, start: f64) -> f64 {
    outer / (outer - inner) * (start - inner) / start
}

/// `P(tau <= t)` on the half-line `x > 0` with a Robin target at `0`:
/// `erfc(x / sqrt(4Dt)) - exp(gamma (gamma t + x) / D) erfc((2 gamma t + x) / sqrt(4Dt))`.
///
/// `gamma = inf` gives the absorbing result `erfc(x / sqrt(4Dt))`.
pub fn half_line_robin_cdf(x: f64, t: f64, diffusivity: f64, gamma: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let root = (4.0 * diffusivity * t).sqrt();
    let absorbing = erfc(x / root);
    if gamma.is_infinite() {
        return absorbing;
    }
    // exp(gamma (gamma t + x)/D) erfc(z) = exp(-x^2 / 4Dt) erfcx(z).
    let z = (2.0 * gamma * t + x) / root;
    (absorbing - (-x * x / (4.0 * diffusivity * t)).exp() * erfcx(z)).max(0.0)
}

/// `P(tau <= t)` for an absorbing sphere of radius `radius` in free space,
/// started at distance `r > radius` from its centre.
pub fn exterior_sphere_cdf(r: f64, t: f64, diffusivity: f64, radius: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    radius / r * erfc((r - radius) / (4.0 * diffusivity * t).sqrt())
}
