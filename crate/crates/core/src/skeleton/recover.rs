//! Ratio-formula recovery of `sigma_{x,tf}` on the skeleton.

use rayon::prelude::*;
use serde::Serialize;

use super::geometry::SkeletonGraph;
use super::spots::{bfactor, LocalizedSource};
use crate::error::{invalid, Result};
use crate::grid::Point;

/// Where recovered points and reference points may sit, measured as distance
/// to the boundary of the unit disk.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct RecoveryZones {
    /// Recovered points satisfy `dist >= interior`.
    pub interior: f64,
    /// Reference points satisfy `reference.0 <= dist < reference.1`.
    pub reference: (f64, f64),
}

impl RecoveryZones {
    /// Zones for an unknown supported in `Ω_r` and packing distance `delta`:
    /// recovery in `Ω_{r - 2 delta}`, references in `Ω_{r - 4 delta} \ Ω_{r - 2 delta}`.
    pub fn from_support(r: f64, delta: f64) -> Self {
        Self { interior: r - 2.0 * delta, reference: ((r - 4.0 * delta).max(0.0), r - 2.0 * delta) }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct RecoveryOptions {
    /// Spacing of sample points along each chord.
    pub step: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SkeletonSample {
    pub point: Point,
    pub chord: usize,
    pub recovered: f64,
    pub reference_point: Point,
    pub reference_value: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SkippedSample {
    pub chord: usize,
    pub point: Point,
    pub reason: String,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct SkeletonRecovery {
    pub samples: Vec<SkeletonSample>,
    pub skipped: Vec<SkippedSample>,
}

fn boundary_distance(p: Point) -> f64 {
    1.0 - (p[0] * p[0] + p[1] * p[1]).sqrt()
}

/// Recovers `sigma_{x,tf}` at skeleton points from the internal datum `h_data`
/// of the spot illumination `source`, whose centers must be the skeleton
/// vertices. `known` gives `sigma_{x,tf}` in the reference zone.
pub fn recover_sigma_skeleton(
    h_data: &(dyn Fn(Point) -> f64 + Sync),
    graph: &SkeletonGraph,
    source: &LocalizedSource,
    known: &(dyn Fn(Point) -> f64 + Sync),
    zones: RecoveryZones,
    opts: RecoveryOptions,
) -> Result<SkeletonRecovery> {
    if source.centers.len() != graph.vertices.len() {
        return Err(invalid("spot centers and skeleton vertices differ"));
    }
    if !(opts.step > 0.0) || !(zones.reference.0 < zones.reference.1) || zones.interior < zones.reference.1 {
        return Err(invalid("need a positive step and reference zone outside the recovery zone"));
    }
    let per_chord: Vec<SkeletonRecovery> = (0..graph.chords.len())
        .into_par_iter()
        .map(|ci| recover_chord(h_data, graph, source, known, zones, opts, ci))
        .collect();
    let mut out = SkeletonRecovery::default();
    for r in per_chord {
        out.samples.extend(r.samples);
        out.skipped.extend(r.skipped);
    }
    Ok(out)
}

fn recover_chord(
    h_data: &(dyn Fn(Point) -> f64 + Sync),
    graph: &SkeletonGraph,
    source: &LocalizedSource,
    known: &(dyn Fn(Point) -> f64 + Sync),
    zones: RecoveryZones,
    opts: RecoveryOptions,
    ci: usize,
) -> SkeletonRecovery {
    let chord = &graph.chords[ci];
    let mut out = SkeletonRecovery::default();
    let dt = opts.step / chord.length;
    let mut targets = Vec::new();
    let mut references = Vec::new();
    for &(s, e) in &chord.segments {
        let count = ((e - s) / dt).floor() as usize;
        for j in 0..=count {
            let t = s + (e - s) * (j as f64 + 0.5) / (count as f64 + 1.0);
            let p = graph.point(ci, t);
            let d = boundary_distance(p);
            if d >= zones.interior {
                targets.push(p);
            } else if d >= zones.reference.0 && d < zones.reference.1 {
                references.push(p);
            }
        }
    }
    if targets.is_empty() {
        return out;
    }
    let skip = |p: Point, reason: String| SkippedSample { chord: ci, point: p, reason };
    let mut ref_cache: Vec<Option<(f64, f64)>> = vec![None; references.len()];
    for z in targets {
        let mut order: Vec<usize> = (0..references.len()).collect();
        let dist = |p: Point| ((p[0] - z[0]).powi(2) + (p[1] - z[1]).powi(2)).sqrt();
        order.sort_by(|&a, &b| dist(references[b]).total_cmp(&dist(references[a])));
        let bz = match bfactor(source, z, chord.a, chord.b) {
            Ok(b) => b,
            Err(e) => {
                out.skipped.push(skip(z, e.to_string()));
                continue;
            }
        };
        let mut done = false;
        for ri in order {
            let zp = references[ri];
            let cached = match ref_cache[ri] {
                Some(c) => Some(c),
                None => bfactor(source, zp, chord.a, chord.b).ok().map(|b| (b, h_data(zp))),
            };
            ref_cache[ri] = cached;
            let Some((bp, hp)) = cached else { continue };
            if hp == 0.0 {
                continue;
            }
            let sp = known(zp);
            let recovered = sp * (h_data(z) / hp) * (bp / bz);
            out.samples.push(SkeletonSample {
                point: z,
                chord: ci,
                recovered,
                reference_point: zp,
                reference_value: sp,
            });
            done = true;
            break;
        }
        if !done {
            out.skipped.push(skip(z, "no usable reference point on the chord".into()));
        }
    }
    out
}
