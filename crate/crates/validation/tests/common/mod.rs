use std::cmp::Reverse;
use std::collections::BinaryHeap;

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
