//! Shortest distances from a start set to each target.
//!
//! Three modes, chosen from the scene contents:
//!
//! * no obstacles and no diffusivity field: straight-line distances in any
//!   dimension, exact for balls, ball complements and convex polygons;
//! * 2D reflecting polygonal obstacles: Dijkstra on the visibility graph of
//!   the start points and obstacle vertices, with the last leg ending either
//!   at the nearest point of the target or at one of its boundary samples;
//! * a scalar diffusivity field on a 2D grid: 8-connected Dijkstra in the
//!   metric `ds / sqrt(a)`.
//!
//! Other targets never block a path, because each distance concerns the
//! hitting time of that target alone.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

pub type Point2 = [f64; 2];

/// A target region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum Target {
    /// Closed ball (disc in 2D, sphere in 3D).
    Ball { center: Vec<f64>, radius: f64 },
    /// Everything outside the open ball; the start lies inside it.
    Exterior { center: Vec<f64>, radius: f64 },
    /// Convex polygon, vertices in order.
    Polygon { vertices: Vec<Point2> },
}

/// Isotropic relative diffusivity `a > 0` on a uniform 2D grid; `None`
/// marks a node removed from the domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffusivityGrid {
    pub origin: Point2,
    pub spacing: f64,
    pub nx: usize,
    pub ny: usize,
    /// Row-major values, index `j * nx + i` at `origin + (i, j) * spacing`.
    pub values: Vec<Option<f64>>,
}

fn default_samples() -> usize {
    256
}

fn default_diffusivity() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeodesicScene {
    /// Start points; distances are minimised over them.
    pub start: Vec<Vec<f64>>,
    pub targets: Vec<Target>,
    /// Simple polygons (2D). A two-vertex polygon is a wall segment.
    #[serde(default)]
    pub obstacles: Vec<Vec<Point2>>,
    #[serde(default)]
    pub field: Option<DiffusivityGrid>,
    /// Reference diffusivity `D` used to turn lengths into time scales.
    #[serde(default = "default_diffusivity")]
    pub diffusivity: f64,
    /// Boundary samples per target in the obstacle mode.
    #[serde(default = "default_samples")]
    pub boundary_samples: usize,
}

impl GeodesicScene {
    pub fn euclidean(start: Vec<Vec<f64>>, targets: Vec<Target>) -> Self {
        Self {
            start,
            targets,
            obstacles: Vec::new(),
            field: None,
            diffusivity: 1.0,
            boundary_samples: default_samples(),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.start.is_empty() {
            return Err(invalid("start", "start set is empty"));
        }
        if self.targets.is_empty() {
            return Err(invalid("targets", "no targets"));
        }
        let dim = self.start[0].len();
        if !(dim == 2 || dim == 3) || self.start.iter().any(|p| p.len() != dim) {
            return Err(invalid("start", "start points must all be 2D or all 3D"));
        }
        for t in &self.targets {
            match t {
                Target::Ball { center, radius } | Target::Exterior { center, radius } => {
                    if center.len() != dim || !(*radius > 0.0) {
                        return Err(invalid("targets", "ball needs a centre of the scene dimension and radius > 0"));
                    }
                }
                Target::Polygon { vertices } => {
                    if dim != 2 || vertices.len() < 3 {
                        return Err(invalid("targets", "polygon targets need a 2D scene and >= 3 vertices"));
                    }
                }
            }
        }
        if (!self.obstacles.is_empty() || self.field.is_some()) && dim != 2 {
            return Err(invalid("obstacles", "obstacles and diffusivity fields are 2D only"));
        }
        if self.obstacles.iter().any(|o| o.len() < 2) {
            return Err(invalid("obstacles", "obstacle needs at least 2 vertices"));
        }
        if !(self.diffusivity > 0.0) {
            return Err(invalid("diffusivity", "reference diffusivity must be positive"));
        }
        Ok(())
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn sub2(a: Point2, b: Point2) -> Point2 {
    [a[0] - b[0], a[1] - b[1]]
}

fn cross(a: Point2, b: Point2) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

fn dot2(a: Point2, b: Point2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn closest_on_segment(p: Point2, a: Point2, b: Point2) -> Point2 {
    let ab = sub2(b, a);
    let len2 = dot2(ab, ab);
    if len2 == 0.0 {
        return a;
    }
    let s = (dot2(sub2(p, a), ab) / len2).clamp(0.0, 1.0);
    [a[0] + s * ab[0], a[1] + s * ab[1]]
}

/// Even-odd test; points on the boundary count as outside.
fn strictly_inside(p: Point2, poly: &[Point2]) -> bool {
    if poly.len() < 3 {
        return false;
    }
    let scale = poly.iter().fold(0.0f64, |m, v| m.max(v[0].abs()).max(v[1].abs())).max(1.0);
    let n = poly.len();
    let mut inside = false;
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        if dist(&p, &closest_on_segment(p, a, b)) <= 1e-12 * scale {
            return false;
        }
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x = a[0] + (p[1] - a[1]) / (b[1] - a[1]) * (b[0] - a[0]);
            if p[0] < x {
                inside = !inside;
            }
        }
    }
    inside
}

fn inside_or_on(p: Point2, poly: &[Point2]) -> bool {
    if strictly_inside(p, poly) {
        return true;
    }
    let n = poly.len();
    (0..n).any(|i| dist(&p, &closest_on_segment(p, poly[i], poly[(i + 1) % n])) <= 1e-12)
}

impl Target {
    /// Straight-line distance from `p` to the target (negative or zero when
    /// `p` is inside) and the nearest target point.
    fn nearest(&self, p: &[f64]) -> (f64, Vec<f64>) {
        match self {
            Target::Ball { center, radius } => {
                let d = dist(p, center);
                let point = if d > 0.0 {
                    center.iter().zip(p).map(|(c, x)| c + (x - c) * radius / d).collect()
                } else {
                    p.to_vec()
                };
                (d - radius, point)
            }
            Target::Exterior { center, radius } => {
                let d = dist(p, center);
                let point = if d > 0.0 {
                    center.iter().zip(p).map(|(c, x)| c + (x - c) * radius / d).collect()
                } else {
                    let mut q = center.clone();
                    q[0] += radius;
                    q
                };
                (radius - d, point)
            }
            Target::Polygon { vertices } => {
                let q = [p[0], p[1]];
                let n = vertices.len();
                let mut best = (f64::INFINITY, q);
                for i in 0..n {
                    let c = closest_on_segment(q, vertices[i], vertices[(i + 1) % n]);
                    let d = dist(&q, &c);
                    if d < best.0 {
                        best = (d, c);
                    }
                }
                let signed = if strictly_inside(q, vertices) { -best.0 } else { best.0 };
                (signed, best.1.to_vec())
            }
        }
    }

    fn contains2(&self, p: Point2) -> bool {
        match self {
            Target::Ball { center, radius } => dist(&p, center) <= *radius,
            Target::Exterior { center, radius } => dist(&p, center) >= *radius,
            Target::Polygon { vertices } => inside_or_on(p, vertices),
        }
    }

    /// `n` points spread along the boundary (2D).
    fn boundary_samples(&self, n: usize) -> Vec<Point2> {
        match self {
            Target::Ball { center, radius } | Target::Exterior { center, radius } => (0..n)
                .map(|i| {
                    let th = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
                    [center[0] + radius * th.cos(), center[1] + radius * th.sin()]
                })
                .collect(),
            Target::Polygon { vertices } => {
                let m = vertices.len();
                let lens: Vec<f64> = (0..m).map(|i| dist(&vertices[i], &vertices[(i + 1) % m])).collect();
                let perimeter: f64 = lens.iter().sum();
                let mut out = Vec::with_capacity(n);
                for i in 0..n {
                    let mut s = perimeter * i as f64 / n as f64;
                    let mut e = 0;
                    while e + 1 < m && s > lens[e] {
                        s -= lens[e];
                        e += 1;
                    }
                    let (a, b) = (vertices[e], vertices[(e + 1) % m]);
                    let f = if lens[e] > 0.0 { (s / lens[e]).min(1.0) } else { 0.0 };
                    out.push([a[0] + f * (b[0] - a[0]), a[1] + f * (b[1] - a[1])]);
                }
                out
            }
        }
    }
}

/// Straight-line distances `L_k`, minimised over the start set.
pub fn geodesic_euclidean(scene: &GeodesicScene) -> Result<Vec<f64>> {
    scene.validate()?;
    scene
        .targets
        .iter()
        .enumerate()
        .map(|(k, t)| {
            let mut best = f64::INFINITY;
            for p in &scene.start {
                let (d, _) = t.nearest(p);
                if d <= 0.0 {
                    return Err(invalid("start", format!("start point {p:?} lies inside target {k}")));
                }
                best = best.min(d);
            }
            Ok(best)
        })
        .collect()
}

/// Parameters in `[0, 1]` where segment `p + s (q - p)` meets segment `ab`.
fn crossings(p: Point2, q: Point2, a: Point2, b: Point2, out: &mut Vec<f64>) {
    let r = sub2(q, p);
    let e = sub2(b, a);
    let denom = cross(r, e);
    let ap = sub2(a, p);
    if denom.abs() > 1e-300 {
        let s = cross(ap, e) / denom;
        let u = cross(ap, r) / denom;
        if (-1e-12..=1.0 + 1e-12).contains(&s) && (-1e-12..=1.0 + 1e-12).contains(&u) {
            out.push(s.clamp(0.0, 1.0));
        }
    } else if cross(ap, r).abs() <= 1e-12 * (norm(&r) * norm(&ap)).max(1e-300) {
        // Collinear overlap: both edge endpoints become split points.
        let rr = dot2(r, r);
        if rr > 0.0 {
            for v in [a, b] {
                let s = dot2(sub2(v, p), r) / rr;
                if (0.0..=1.0).contains(&s) {
                    out.push(s);
                }
            }
        }
    }
}

/// True if the open segment `pq` passes through the interior of an obstacle.
fn blocked(p: Point2, q: Point2, obstacles: &[Vec<Point2>]) -> bool {
    let mut cuts = Vec::new();
    for poly in obstacles {
        if poly.len() == 2 {
            // Wall: only a proper crossing blocks.
            let (a, b) = (poly[0], poly[1]);
            let d1 = cross(sub2(q, p), sub2(a, p));
            let d2 = cross(sub2(q, p), sub2(b, p));
            let d3 = cross(sub2(b, a), sub2(p, a));
            let d4 = cross(sub2(b, a), sub2(q, a));
            if d1 * d2 < 0.0 && d3 * d4 < 0.0 {
                return true;
            }
            continue;
        }
        cuts.clear();
        cuts.push(0.0);
        cuts.push(1.0);
        let n = poly.len();
        for i in 0..n {
            crossings(p, q, poly[i], poly[(i + 1) % n], &mut cuts);
        }
        cuts.sort_by(f64::total_cmp);
        for w in cuts.windows(2) {
            if w[1] - w[0] <= 1e-12 {
                continue;
            }
            let s = 0.5 * (w[0] + w[1]);
            let m = [p[0] + s * (q[0] - p[0]), p[1] + s * (q[1] - p[1])];
            if strictly_inside(m, poly) {
                return true;
            }
        }
    }
    false
}

#[derive(PartialEq)]
struct State {
    cost: f64,
    node: usize,
}
impl Eq for State {}
impl Ord for State {
    fn cmp(&self, other: &Self) -> Ordering {
        other.cost.total_cmp(&self.cost)
    }
}
impl PartialOrd for State {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Dijkstra from several sources over an adjacency callback.
fn dijkstra<F: FnMut(usize, &mut Vec<(usize, f64)>)>(n: usize, sources: &[(usize, f64)], mut edges: F) -> Vec<f64> {
    let mut best = vec![f64::INFINITY; n];
    let mut heap = BinaryHeap::new();
    for &(s, c) in sources {
        if c < best[s] {
            best[s] = c;
            heap.push(State { cost: c, node: s });
        }
    }
    let mut buf = Vec::new();
    while let Some(State { cost, node }) = heap.pop() {
        if cost > best[node] {
            continue;
        }
        buf.clear();
        edges(node, &mut buf);
        for &(next, w) in &buf {
            let c = cost + w;
            if c < best[next] {
                best[next] = c;
                heap.push(State { cost: c, node: next });
            }
        }
    }
    best
}

/// Shortest paths around reflecting polygonal obstacles (2D).
pub fn geodesic_polygonal(scene: &GeodesicScene) -> Result<Vec<f64>> {
    scene.validate()?;
    if scene.start[0].len() != 2 {
        return Err(invalid("start", "obstacle scenes are 2D"));
    }
    let starts: Vec<Point2> = scene.start.iter().map(|p| [p[0], p[1]]).collect();
    for (i, p) in starts.iter().enumerate() {
        if scene.obstacles.iter().any(|o| strictly_inside(*p, o)) {
            return Err(invalid("start", format!("start point {i} lies inside an obstacle")));
        }
    }
    // Check the start set is outside every target.
    geodesic_euclidean(&GeodesicScene {
        obstacles: Vec::new(),
        field: None,
        ..scene.clone()
    })?;

    let mut nodes = starts.clone();
    for poly in &scene.obstacles {
        nodes.extend_from_slice(poly);
    }
    let n = nodes.len();
    let obstacles = &scene.obstacles;
    let sources: Vec<(usize, f64)> = (0..starts.len()).map(|i| (i, 0.0)).collect();
    let graph = dijkstra(n, &sources, |u, out| {
        for v in 0..n {
            if v != u && !blocked(nodes[u], nodes[v], obstacles) {
                out.push((v, dist(&nodes[u], &nodes[v])));
            }
        }
    });

    let samples = scene.boundary_samples.max(8);
    scene
        .targets
        .iter()
        .enumerate()
        .map(|(k, target)| {
            let boundary = target.boundary_samples(samples);
            let mut best = f64::INFINITY;
            for (u, &node) in nodes.iter().enumerate() {
                if !graph[u].is_finite() || graph[u] >= best {
                    continue;
                }
                let (d, near) = target.nearest(&node);
                if d > 0.0 && !blocked(node, [near[0], near[1]], obstacles) {
                    best = best.min(graph[u] + d);
                    continue;
                }
                for s in &boundary {
                    let c = graph[u] + dist(&node, s);
                    if c < best && !blocked(node, *s, obstacles) {
                        best = c;
                    }
                }
            }
            if best.is_finite() {
                Ok(best)
            } else {
                Err(Error::Unreachable(k))
            }
        })
        .collect()
}

/// Lengths in the metric `ds / sqrt(a)` by 8-connected Dijkstra on the
/// diffusivity grid. Nodes inside obstacles are removed.
pub fn geodesic_grid(scene: &GeodesicScene) -> Result<Vec<f64>> {
    scene.validate()?;
    let g = scene
        .field
        .as_ref()
        .ok_or_else(|| invalid("field", "grid mode needs a diffusivity field"))?;
    if g.values.len() != g.nx * g.ny || g.nx < 2 || g.ny < 2 || !(g.spacing > 0.0) {
        return Err(invalid("field", "values must have nx * ny entries and spacing > 0"));
    }
    let pos = |i: usize, j: usize| -> Point2 { [g.origin[0] + i as f64 * g.spacing, g.origin[1] + j as f64 * g.spacing] };
    let mut slowness = vec![f64::NAN; g.nx * g.ny];
    for j in 0..g.ny {
        for i in 0..g.nx {
            let idx = j * g.nx + i;
            if let Some(a) = g.values[idx] {
                if !(a > 0.0) || !a.is_finite() {
                    return Err(invalid("field", format!("diffusivity at node ({i}, {j}) must be positive")));
                }
                if !scene.obstacles.iter().any(|o| strictly_inside(pos(i, j), o)) {
                    slowness[idx] = 1.0 / a.sqrt();
                }
            }
        }
    }
    let active = |i: isize, j: isize| -> Option<usize> {
        if i < 0 || j < 0 || i >= g.nx as isize || j >= g.ny as isize {
            return None;
        }
        let idx = j as usize * g.nx + i as usize;
        slowness[idx].is_finite().then_some(idx)
    };

    let mut sources = Vec::new();
    for p in &scene.start {
        let mut best: Option<(usize, f64)> = None;
        for j in 0..g.ny {
            for i in 0..g.nx {
                let idx = j * g.nx + i;
                if slowness[idx].is_finite() {
                    let d = dist(p, &pos(i, j));
                    if best.map_or(true, |(_, b)| d < b) {
                        best = Some((idx, d));
                    }
                }
            }
        }
        let (idx, d) = best.ok_or_else(|| invalid("field", "grid has no active nodes"))?;
        sources.push((idx, d * slowness[idx]));
    }

    let h = g.spacing;
    let nx = g.nx;
    let lengths = dijkstra(g.nx * g.ny, &sources, |u, out| {
        let (i, j) = ((u % nx) as isize, (u / nx) as isize);
        for di in -1..=1isize {
            for dj in -1..=1isize {
                if di == 0 && dj == 0 {
                    continue;
                }
                let Some(v) = active(i + di, j + dj) else { continue };
                // No corner cutting past a removed node.
                if di != 0 && dj != 0 && (active(i + di, j).is_none() || active(i, j + dj).is_none()) {
                    continue;
                }
                let len = if di != 0 && dj != 0 { h * std::f64::consts::SQRT_2 } else { h };
                out.push((v, len * 0.5 * (slowness[u] + slowness[v])));
            }
        }
    });

    scene
        .targets
        .iter()
        .enumerate()
        .map(|(k, t)| {
            let mut best = f64::INFINITY;
            let mut any = false;
            for j in 0..g.ny {
                for i in 0..g.nx {
                    let idx = j * g.nx + i;
                    if slowness[idx].is_finite() && t.contains2(pos(i, j)) {
                        any = true;
                        best = best.min(lengths[idx]);
                    }
                }
            }
            if !any {
                return Err(invalid("targets", format!("target {k} covers no grid node")));
            }
            if best.is_finite() {
                Ok(best)
            } else {
                Err(Error::Unreachable(k))
            }
        })
        .collect()
}

/// Dispatches on the scene contents: field, obstacles, or plain Euclidean.
pub fn geodesic_lengths(scene: &GeodesicScene) -> Result<Vec<f64>> {
    if scene.field.is_some() {
        geodesic_grid(scene)
    } else if !scene.obstacles.is_empty() {
        geodesic_polygonal(scene)
    } else {
        geodesic_euclidean(scene)
    }
}

/// Decay exponent `1 - (L_k / L_0)^2` and the time scales `L^2 / 4D`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundExponent {
    pub exponent: f64,
    pub near_scale: f64,
    pub far_scale: f64,
}

pub fn bound_exponent(near: f64, far: f64, diffusivity: f64) -> Result<BoundExponent> {
    if !(near > 0.0) || !(diffusivity > 0.0) {
        return Err(invalid("L0", format!("need L0 > 0 and D > 0, got {near}, {diffusivity}")));
    }
    if !(far > near) {
        return Err(Error::Ordering(format!(
            "target distance {far} does not exceed the closest distance {near}"
        )));
    }
    let r = far / near;
    Ok(BoundExponent {
        exponent: 1.0 - r * r,
        near_scale: near * near / (4.0 * diffusivity),
        far_scale: far * far / (4.0 * diffusivity),
    })
}
