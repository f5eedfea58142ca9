//! Boundary packings and pruned chord graphs on the unit circle.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{invalid, Result};
use crate::grid::Point;

/// Maximal `delta`-packing of the unit circle by equally spaced points.
///
/// The point count is the largest `n` with chord `2 sin(pi / n) > delta`;
/// with that spacing no further point fits, so the set also covers the circle
/// to within `delta`.
pub fn boundary_packing(delta: f64) -> Result<Vec<Point>> {
    if !(delta > 0.0 && delta < 2.0) {
        return Err(invalid(format!("packing distance must lie in (0, 2), got {delta}")));
    }
    let mut n = (PI / (delta / 2.0).asin()).floor() as usize + 1;
    while n > 2 && 2.0 * (PI / n as f64).sin() <= delta {
        n -= 1;
    }
    Ok(circle_points(n, 0.0))
}

/// `n` equally spaced points on the unit circle starting at angle `offset`.
pub fn circle_points(n: usize, offset: f64) -> Vec<Point> {
    (0..n)
        .map(|j| {
            let a = offset + 2.0 * PI * j as f64 / n as f64;
            [a.cos(), a.sin()]
        })
        .collect()
}

fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn norm(a: Point) -> f64 {
    dot(a, a).sqrt()
}

/// Euclidean distance from `p` to the segment `[a, b]`.
pub fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let d = sub(b, a);
    let len2 = dot(d, d);
    let t = if len2 > 0.0 { (dot(sub(p, a), d) / len2).clamp(0.0, 1.0) } else { 0.0 };
    norm(sub(p, [a[0] + t * d[0], a[1] + t * d[1]]))
}

/// Parameters `t` in `[0, 1]` where `a + t (b - a)` lies within `theta` of the
/// segment `[c, d]`. The tube is convex so the set is one interval.
fn tube_interval(a: Point, b: Point, c: Point, d: Point, theta: f64) -> Option<(f64, f64)> {
    let e = sub(b, a);
    let f = sub(d, c);
    let lf = norm(f);
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut merge = |iv: Option<(f64, f64)>| {
        if let Some((s, t)) = iv {
            if s <= t {
                lo = lo.min(s);
                hi = hi.max(t);
            }
        }
    };
    // Disks around the tube ends.
    for q in [c, d] {
        let w = sub(a, q);
        let qa = dot(e, e);
        let qb = 2.0 * dot(w, e);
        let qc = dot(w, w) - theta * theta;
        let disc = qb * qb - 4.0 * qa * qc;
        if disc > 0.0 {
            let s = disc.sqrt();
            merge(Some(((-qb - s) / (2.0 * qa), (-qb + s) / (2.0 * qa))));
        }
    }
    // Slab around the segment body.
    if lf > 0.0 {
        let u = [f[0] / lf, f[1] / lf];
        let nrm = [-u[1], u[0]];
        let mut iv = (f64::NEG_INFINITY, f64::INFINITY);
        let mut clip = |off: f64, slope: f64, lo_b: f64, hi_b: f64| {
            // lo_b < off + slope t < hi_b
            if slope.abs() < 1e-300 {
                if !(off > lo_b && off < hi_b) {
                    iv = (1.0, 0.0);
                }
            } else {
                let (mut s, mut t) = ((lo_b - off) / slope, (hi_b - off) / slope);
                if s > t {
                    std::mem::swap(&mut s, &mut t);
                }
                iv = (iv.0.max(s), iv.1.min(t));
            }
        };
        let w = sub(a, c);
        clip(dot(w, nrm), dot(e, nrm), -theta, theta);
        clip(dot(w, u), dot(e, u), 0.0, lf);
        merge(Some(iv));
    }
    let (s, t) = (lo.max(0.0), hi.min(1.0));
    (s < t).then_some((s, t))
}

/// One chord of the complete graph with its surviving parameter intervals.
#[derive(Clone, Debug, Serialize)]
pub struct Chord {
    pub a: usize,
    pub b: usize,
    pub length: f64,
    /// Surviving sub-segments as parameter intervals along `y_a -> y_b`.
    pub segments: Vec<(f64, f64)>,
    /// Total length removed by tubes of other chords.
    pub removed: f64,
}

impl Chord {
    pub fn contains_parameter(&self, t: f64) -> bool {
        self.segments.iter().any(|&(s, e)| t >= s && t <= e)
    }
}

/// Complete chord graph on boundary vertices with `theta`-tube crossings removed.
#[derive(Clone, Debug, Serialize)]
pub struct SkeletonGraph {
    pub vertices: Vec<Point>,
    pub theta: f64,
    pub chords: Vec<Chord>,
}

impl SkeletonGraph {
    pub fn point(&self, chord: usize, t: f64) -> Point {
        let c = &self.chords[chord];
        let (p, q) = (self.vertices[c.a], self.vertices[c.b]);
        [p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]
    }

    /// Distance from `p` to the surviving skeleton.
    pub fn distance(&self, p: Point) -> f64 {
        // Chord lines bound segment distances from below, so visit them in order.
        let mut order: Vec<(f64, usize)> = self
            .chords
            .iter()
            .enumerate()
            .map(|(ci, c)| (point_segment_distance(p, self.vertices[c.a], self.vertices[c.b]), ci))
            .collect();
        order.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut best = f64::INFINITY;
        for (lower, ci) in order {
            if lower >= best {
                break;
            }
            for &(s, t) in &self.chords[ci].segments {
                best = best.min(point_segment_distance(p, self.point(ci, s), self.point(ci, t)));
            }
        }
        best
    }

    /// Largest removed length over all chords.
    pub fn max_removed(&self) -> f64 {
        self.chords.iter().map(|c| c.removed).fold(0.0, f64::max)
    }
}

/// Builds the `theta`-skeleton of the complete graph on `vertices`.
pub fn build_skeleton(vertices: &[Point], theta: f64) -> Result<SkeletonGraph> {
    if vertices.len() < 2 {
        return Err(invalid("skeleton needs at least two vertices"));
    }
    if !(theta >= 0.0) {
        return Err(invalid(format!("tube radius must be nonnegative, got {theta}")));
    }
    let mut edges = Vec::new();
    for a in 0..vertices.len() {
        for b in a + 1..vertices.len() {
            edges.push((a, b));
        }
    }
    let chords = edges
        .iter()
        .enumerate()
        .map(|(ei, &(a, b))| {
            let (pa, pb) = (vertices[a], vertices[b]);
            let length = norm(sub(pb, pa));
            let mut cuts: Vec<(f64, f64)> = if theta > 0.0 {
                edges
                    .iter()
                    .enumerate()
                    .filter(|&(ej, _)| ej != ei)
                    .filter_map(|(_, &(c, d))| tube_interval(pa, pb, vertices[c], vertices[d], theta))
                    .collect()
            } else {
                Vec::new()
            };
            cuts.sort_by(|x, y| x.0.total_cmp(&y.0));
            let mut segments = Vec::new();
            let mut cursor = 0.0;
            let mut removed = 0.0;
            let mut run: Option<(f64, f64)> = None;
            for (s, t) in cuts {
                match run {
                    Some((rs, rt)) if s <= rt => run = Some((rs, rt.max(t))),
                    _ => {
                        if let Some((rs, rt)) = run {
                            if rs > cursor {
                                segments.push((cursor, rs));
                            }
                            removed += rt - rs;
                            cursor = rt;
                        }
                        run = Some((s, t));
                    }
                }
            }
            if let Some((rs, rt)) = run {
                if rs > cursor {
                    segments.push((cursor, rs));
                }
                removed += rt - rs;
                cursor = rt;
            }
            if cursor < 1.0 {
                segments.push((cursor, 1.0));
            }
            Chord { a, b, length, segments, removed: removed * length }
        })
        .collect();
    Ok(SkeletonGraph { vertices: vertices.to_vec(), theta, chords })
}

#[derive(Clone, Debug, Serialize)]
pub struct CoveringReport {
    pub samples: usize,
    pub bound: f64,
    /// Largest distance from a sample in the disk to the skeleton.
    pub max_distance: f64,
    /// Same, restricted to samples at distance at least `r` from the boundary.
    pub max_distance_interior: f64,
    pub interior_samples: usize,
    pub pass: bool,
}

/// Monte-Carlo check that the skeleton is a `2 delta`-covering of the unit disk.
pub fn covering_check(graph: &SkeletonGraph, delta: f64, r: f64, samples: usize, seed: u64) -> CoveringReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_distance: f64 = 0.0;
    let mut max_interior: f64 = 0.0;
    let mut interior = 0;
    for _ in 0..samples {
        // Uniform in area by rejection from the square.
        let p = loop {
            let p = [rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0)];
            if dot(p, p) <= 1.0 {
                break p;
            }
        };
        let d = graph.distance(p);
        max_distance = max_distance.max(d);
        if 1.0 - norm(p) >= r {
            interior += 1;
            max_interior = max_interior.max(d);
        }
    }
    let bound = 2.0 * delta;
    CoveringReport {
        samples,
        bound,
        max_distance,
        max_distance_interior: max_interior,
        interior_samples: interior,
        pass: max_distance <= bound,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn packing_count_for_half() {
        let v = boundary_packing(0.5).unwrap();
        assert_eq!(v.len(), 12);
    }

    #[test]
    fn single_edge_is_untouched() {
        let g = build_skeleton(&circle_points(2, 0.3), 0.01).unwrap();
        assert_eq!(g.chords[0].segments, vec![(0.0, 1.0)]);
        assert_eq!(g.chords[0].removed, 0.0);
    }

    #[test]
    fn square_diagonals_lose_crossing_window() {
        let theta = 0.01;
        let g = build_skeleton(&circle_points(4, 0.0), theta).unwrap();
        // Diagonals are the chords 0-2 and 1-3, crossing at right angles.
        let diag = g.chords.iter().find(|c| c.a == 0 && c.b == 2).unwrap();
        let mid = diag.segments.iter().find(|s| s.0 > 0.25).unwrap();
        let prev = diag.segments.iter().rev().find(|s| s.1 < 0.75).unwrap();
        assert_abs_diff_eq!((mid.0 - prev.1) * diag.length, 2.0 * theta, epsilon = 1e-12);
    }

    #[test]
    fn distance_zero_on_skeleton() {
        let g = build_skeleton(&boundary_packing(0.6).unwrap(), 1e-3).unwrap();
        let c = &g.chords[3];
        let (s, t) = c.segments[0];
        assert!(g.distance(g.point(3, 0.5 * (s + t))) < 1e-12);
    }
}
