//! Special functions used throughout the crate.
//!
//! Everything here is pure and allocation-free. The log-domain variants
//! (`log_erfc`, [`ln_1m_exp`], [`log_add_exp`]) exist because short-time
//! hitting probabilities behave like `exp(-C/t)` and underflow long before
//! the quadrature stops caring about them.

use std::f64::consts::E;

use crate::error::{domain, Result};

const FRAC_1_SQRT_PI: f64 = 0.564_189_583_547_756_3;
const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Below this argument erf is summed as a power series, above it erfc is
/// evaluated by continued fraction.
const ERF_SERIES_CUTOFF: f64 = 1.5;

/// `erf(z)` for `0 <= z < ERF_SERIES_CUTOFF`, all terms positive.
fn erf_series(z: f64) -> f64 {
    if z == 0.0 {
        return 0.0;
    }
    let z2 = z * z;
    let mut term = z;
    let mut sum = z;
    let mut n = 0.0;
    loop {
        n += 1.0;
        term *= 2.0 * z2 / (2.0 * n + 1.0);
        sum += term;
        if term < 1e-17 * sum {
            break;
        }
    }
    2.0 * FRAC_1_SQRT_PI * (-z2).exp() * sum
}

/// Scaled complementary error function `exp(z^2) erfc(z)` for `z >= ERF_SERIES_CUTOFF`,
/// via the Laplace continued fraction evaluated with the modified Lentz method.
fn erfcx_cf(z: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut f = z;
    let mut c = f;
    let mut d = 0.0;
    for n in 1..2000 {
        let a = 0.5 * n as f64;
        d = z + a * d;
        if d.abs() < TINY {
            d = TINY;
        }
        d = 1.0 / d;
        c = z + a / c;
        if c.abs() < TINY {
            c = TINY;
        }
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    FRAC_1_SQRT_PI / f
}

/// Error function.
#[must_use]
pub fn erf(z: f64) -> f64 {
    if z.is_nan() {
        return f64::NAN;
    }
    let a = z.abs();
    let v = if a < ERF_SERIES_CUTOFF {
        erf_series(a)
    } else {
        1.0 - erfc(a)
    };
    v.copysign(z)
}

/// Complementary error function `1 - erf(z)`.
///
/// Relative error is at the level of a few ulps on `|z| <= 25`; the result
/// underflows smoothly to zero beyond `z ~ 27`.
#[must_use]
pub fn erfc(z: f64) -> f64 {
    if z.is_nan() {
        return f64::NAN;
    }
    if z < 0.0 {
        return 2.0 - erfc(-z);
    }
    if z < ERF_SERIES_CUTOFF {
        1.0 - erf_series(z)
    } else if z > 27.3 {
        0.0
    } else {
        (-z * z).exp() * erfcx_cf(z)
    }
}

/// Scaled complementary error function `exp(z^2) erfc(z)`.
///
/// Finite for every `z >= 0`; for negative `z` it grows like `2 exp(z^2)`
/// and overflows once `z^2 > ~709`.
#[must_use]
pub fn erfcx(z: f64) -> f64 {
    if z.is_nan() {
        return f64::NAN;
    }
    if z < ERF_SERIES_CUTOFF {
        (z * z).exp() * erfc(z)
    } else if z > 1e8 {
        FRAC_1_SQRT_PI / z
    } else {
        erfcx_cf(z)
    }
}

/// Natural log of `erfc(z)`, accurate where `erfc` itself underflows.
#[must_use]
pub fn log_erfc(z: f64) -> f64 {
    if z < ERF_SERIES_CUTOFF {
        erfc(z).ln()
    } else {
        -z * z + erfcx(z).ln()
    }
}

/// `ln Γ(x)` for `x > 0` (Lanczos, g = 7, nine terms).
pub fn log_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(domain("log_gamma", format!("x = {x} is not in (0, inf)")));
    }
    Ok(log_gamma_pos(x))
}

const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

fn log_gamma_pos(x: f64) -> f64 {
    if x == 1.0 || x == 2.0 {
        return 0.0;
    }
    if x < 0.5 {
        return log_gamma_pos(x + 1.0) - x.ln();
    }
    let z = x - 1.0;
    let mut a = LANCZOS[0];
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        a += c / (z + i as f64);
    }
    let t = z + 7.5;
    LN_SQRT_2PI + (z + 0.5) * t.ln() - t + a.ln()
}

/// Which real branch of the Lambert W function to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WBranch {
    /// `W_0`, defined on `[-1/e, inf)`, values in `[-1, inf)`.
    Principal,
    /// `W_{-1}`, defined on `[-1/e, 0)`, values in `(-inf, -1]`.
    Lower,
}

/// Real Lambert W: the `w` on the requested branch with `w e^w = x`.
pub fn lambert_w(branch: WBranch, x: f64) -> Result<f64> {
    const BRANCH_PT: f64 = -1.0 / E;
    if x.is_nan() || x < BRANCH_PT - 1e-15 {
        return Err(domain("lambert_w", format!("x = {x} < -1/e")));
    }
    if branch == WBranch::Lower && x >= 0.0 {
        return Err(domain("lambert_w", format!("lower branch needs x < 0, got {x}")));
    }
    if x <= BRANCH_PT {
        return Ok(-1.0);
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x.is_infinite() {
        return Ok(f64::INFINITY);
    }

    // Series about the branch point in p = sqrt(2(ex + 1)).
    let p = (2.0 * (E * x + 1.0)).sqrt();
    let mut w = match branch {
        WBranch::Principal => {
            if x < -0.25 {
                -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p
            } else if x < 3.0 {
                // ln(1 + x) is a serviceable seed on this range.
                x.ln_1p().max(-0.5)
            } else {
                let l1 = x.ln();
                let l2 = l1.ln();
                l1 - l2 + l2 / l1
            }
        }
        WBranch::Lower => {
            if x < -0.25 {
                -1.0 - p - p * p / 3.0 - 11.0 / 72.0 * p * p * p
            } else {
                let l1 = (-x).ln();
                let l2 = (-l1).ln();
                l1 - l2 + l2 / l1
            }
        }
    };

    // Halley iteration.
    for _ in 0..64 {
        let ew = w.exp();
        let f = w * ew - x;
        let wp1 = w + 1.0;
        if wp1.abs() < 1e-300 {
            break;
        }
        let denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
        let step = f / denom;
        let next = w - step;
        if !next.is_finite() {
            break;
        }
        w = match branch {
            WBranch::Principal => next.max(-1.0),
            WBranch::Lower => next.min(-1.0),
        };
        if step.abs() <= 1e-15 * (1.0 + w.abs()) {
            break;
        }
    }
    Ok(w)
}

/// `ln(1 - e^x)` for `x <= 0`, without cancellation at either end.
#[must_use]
pub fn ln_1m_exp(x: f64) -> f64 {
    if x > 0.0 {
        f64::NAN
    } else if x == 0.0 {
        f64::NEG_INFINITY
    } else if x > -std::f64::consts::LN_2 {
        (-x.exp_m1()).ln()
    } else {
        (-x.exp()).ln_1p()
    }
}

/// `ln(e^a + e^b)`.
#[must_use]
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// `ln(e^a - e^b)` for `a >= b`; `-inf` when equal.
#[must_use]
pub fn log_sub_exp(a: f64, b: f64) -> f64 {
    if b == f64::NEG_INFINITY {
        return a;
    }
    a + ln_1m_exp(b - a)
}

/// Log of a sum given the logs of its terms.
#[must_use]
pub fn log_sum_exp(terms: &[f64]) -> f64 {
    let hi = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi == f64::NEG_INFINITY || hi.is_nan() {
        return hi;
    }
    hi + terms.iter().map(|&v| (v - hi).exp()).sum::<f64>().ln()
}
