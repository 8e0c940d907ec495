//! Independent reference computations shared by the integration tests.
//! Nothing in here calls into the code paths it is used to check.

#![allow(dead_code)]

use std::cmp::Reverse;
use std::collections::BinaryHeap;

/// Recursive adaptive Simpson quadrature.
pub fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn rec<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 50)
}

/// Bisection root of a continuous `f` with a sign change on `[lo, hi]`.
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> f64 {
    let flo = f(lo);
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if (f(mid) > 0.0) == (flo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Complementary error function by quadrature of its defining integral,
/// `erfc(z) = (2/sqrt(pi)) int_z^inf exp(-u^2) du`, for `z >= 0`.
pub fn erfc_by_quadrature(z: f64) -> f64 {
    let g = |u: f64| (-u * u).exp();
    let upper = z + 40.0f64.sqrt() + 2.0;
    2.0 / std::f64::consts::PI.sqrt() * simpson(&g, z, upper, 1e-18)
}

/// Drifted hitting-time cdf of a single image term in closed form:
/// `int_0^s exp(-b s') a / sqrt(4 pi s'^3) exp(-a^2 / 4s') ds'` for `a > 0`.
pub fn drifted_image_cdf(s: f64, a: f64, b: f64) -> f64 {
    let rb = b.sqrt();
    let u = a / (4.0 * s).sqrt();
    let v = (b * s).sqrt();
    0.5 * ((-a * rb).exp() * erfc_series(u - v) + (a * rb).exp() * erfc_series(u + v))
}

/// Standalone erfc for the oracles: Taylor series for small arguments,
/// continued fraction otherwise, reflection for negative arguments.
pub fn erfc_series(z: f64) -> f64 {
    if z < 0.0 {
        return 2.0 - erfc_series(-z);
    }
    if z < 2.0 {
        // erf via alternating Maclaurin series, long-double-free but fine to ~1e-15 here.
        let mut sum = 0.0;
        let mut term = z;
        let mut n = 0.0;
        while term.abs() > 1e-20 {
            sum += term / (2.0 * n + 1.0);
            n += 1.0;
            term *= -z * z / n;
        }
        return 1.0 - 2.0 / std::f64::consts::PI.sqrt() * sum;
    }
    // Backward recurrence of the continued fraction.
    let mut f = 0.0;
    for n in (1..200).rev() {
        f = (n as f64 / 2.0) / (z + f);
    }
    (-z * z).exp() / std::f64::consts::PI.sqrt() / (z + f)
}

/// Ordinary least squares for `y ~ sum_j beta_j x_j`, via normal equations.
pub fn least_squares(rows: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
    let p = rows[0].len();
    let mut a = vec![vec![0.0; p + 1]; p];
    for (r, &yi) in rows.iter().zip(y) {
        for i in 0..p {
            for j in 0..p {
                a[i][j] += r[i] * r[j];
            }
            a[i][p] += r[i] * yi;
        }
    }
    for c in 0..p {
        let piv = (c..p).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
        a.swap(c, piv);
        for r in 0..p {
            if r != c {
                let f = a[r][c] / a[c][c];
                for k in c..=p {
                    a[r][k] -= f * a[c][k];
                }
            }
        }
    }
    (0..p).map(|i| a[i][p] / a[i][i]).collect()
}
/// Does segment pq properly cross segment ab?
fn crosses(p: [f64; 2], q: [f64; 2], a: [f64; 2], b: [f64; 2]) -> bool {
    let c = |o: [f64; 2], u: [f64; 2], v: [f64; 2]| (u[0] - o[0]) * (v[1] - o[1]) - (u[1] - o[1]) * (v[0] - o[0]);
    c(p, q, a) * c(p, q, b) < 0.0 && c(a, b, p) * c(a, b, q) < 0.0
}

/// Grid Dijkstra with every primitive move up to 4 cells in each direction,
/// which keeps the angular metric error below 0.2%. Walls block moves that
/// cross them and remove nodes lying on them; the target is the set of nodes
/// inside a disc.
pub fn stencil_oracle(
    start: [f64; 2],
    walls: &[([f64; 2], [f64; 2])],
    target: ([f64; 2], f64),
    lo: [f64; 2],
    hi: [f64; 2],
    h: f64,
) -> f64 {
    let nx = ((hi[0] - lo[0]) / h).round() as i64 + 1;
    let ny = ((hi[1] - lo[1]) / h).round() as i64 + 1;
    let pos = |i: i64, j: i64| [lo[0] + i as f64 * h, lo[1] + j as f64 * h];
    let gcd = |mut a: i64, mut b: i64| {
        while b != 0 {
            (a, b) = (b, a % b);
        }
        a.abs()
    };
    let mut moves = Vec::new();
    for di in -4i64..=4 {
        for dj in -4i64..=4 {
            if (di, dj) != (0, 0) && gcd(di, dj) == 1 {
                moves.push((di, dj, h * ((di * di + dj * dj) as f64).sqrt()));
            }
        }
    }
    let on_wall = |p: [f64; 2]| {
        walls.iter().any(|&(a, b)| {
            let ab = [b[0] - a[0], b[1] - a[1]];
            let t = ((p[0] - a[0]) * ab[0] + (p[1] - a[1]) * ab[1]) / (ab[0] * ab[0] + ab[1] * ab[1]);
            let c = [a[0] + t * ab[0], a[1] + t * ab[1]];
            t > 1e-9 && t < 1.0 - 1e-9 && ((p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2)).sqrt() < 1e-9
        })
    };
    let si = ((start[0] - lo[0]) / h).round() as i64;
    let sj = ((start[1] - lo[1]) / h).round() as i64;
    let mut best = vec![f64::INFINITY; (nx * ny) as usize];
    let mut heap = BinaryHeap::new();
    best[(sj * nx + si) as usize] = 0.0;
    heap.push((Reverse(0u64), si, sj));
    while let Some((Reverse(bits), i, j)) = heap.pop() {
        let d = f64::from_bits(bits);
        if d > best[(j * nx + i) as usize] {
            continue;
        }
        let p = pos(i, j);
        let dc = ((p[0] - target.0[0]).powi(2) + (p[1] - target.0[1]).powi(2)).sqrt();
        if dc <= target.1 {
            return d;
        }
        for &(di, dj, len) in &moves {
            let (a, b) = (i + di, j + dj);
            if a < 0 || b < 0 || a >= nx || b >= ny {
                continue;
            }
            let q = pos(a, b);
            if on_wall(q) || walls.iter().any(|w| crosses(p, q, w.0, w.1)) {
                continue;
            }
            let c = d + len;
            let idx = (b * nx + a) as usize;
            if c < best[idx] {
                best[idx] = c;
                heap.push((Reverse(c.to_bits()), a, b));
            }
        }
    }
    f64::INFINITY
}
