//! Localized boundary illumination on the unit disk and the ballistic
//! quantities that the skeleton recovery is built from.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::functionals::ForwardModel;
use crate::grid::{DomainKind, NodeKind, Point, SpatialGrid};
use crate::transport::{hg_density, PhaseSpaceField, SolveReport};

/// Normalization of the chord-to-angle Jacobian in two dimensions.
pub const NU_1: f64 = 2.0;

/// `g_h = h^{-1/2} sum_j chi_{D_j}` with `D_j = B(y_j, h) ∩ ∂Ω` on the unit circle.
#[derive(Clone, Debug, Serialize)]
pub struct LocalizedSource {
    pub centers: Vec<Point>,
    pub h: f64,
    angles: Vec<f64>,
    half_arc: f64,
}

fn wrap(a: f64) -> f64 {
    let t = (a + PI).rem_euclid(2.0 * PI);
    t - PI
}

impl LocalizedSource {
    pub fn new(centers: &[Point], h: f64) -> Result<Self> {
        if !(h > 0.0 && h < 1.0) {
            return Err(invalid(format!("spot radius must lie in (0, 1), got {h}")));
        }
        let angles: Vec<f64> = centers.iter().map(|c| c[1].atan2(c[0])).collect();
        let centers: Vec<Point> = angles.iter().map(|a| [a.cos(), a.sin()]).collect();
        for i in 0..centers.len() {
            for j in i + 1..centers.len() {
                let d = ((centers[i][0] - centers[j][0]).powi(2) + (centers[i][1] - centers[j][1]).powi(2)).sqrt();
                if d <= 2.0 * h {
                    return Err(Error::Geometry(format!("spots {i} and {j} overlap at radius {h}")));
                }
            }
        }
        Ok(Self { centers, h, angles, half_arc: 2.0 * (h / 2.0).asin() })
    }

    pub fn amplitude(&self) -> f64 {
        self.h.powf(-0.5)
    }

    /// Half the angular width of each spot arc.
    pub fn half_arc(&self) -> f64 {
        self.half_arc
    }

    /// Index of the spot containing the boundary point at polar angle `phi`.
    pub fn spot_at_angle(&self, phi: f64) -> Option<usize> {
        self.angles.iter().position(|&a| wrap(phi - a).abs() < self.half_arc)
    }

    /// Boundary value at `p`, using the polar angle of `p`.
    pub fn value(&self, p: Point) -> f64 {
        match self.spot_at_angle(p[1].atan2(p[0])) {
            Some(_) => self.amplitude(),
            None => 0.0,
        }
    }

    /// Midpoint samples `(phi, dphi)` of spot `j`.
    pub fn arc_samples(&self, j: usize, count: usize) -> impl Iterator<Item = (f64, f64)> + '_ {
        let dphi = 2.0 * self.half_arc / count as f64;
        let start = self.angles[j] - self.half_arc;
        (0..count).map(move |m| (start + (m as f64 + 0.5) * dphi, dphi))
    }
}

/// `exp(-|b - a| int_0^1 sigma(a + s (b - a)) ds)` by the composite trapezoid
/// rule at the grid spacing.
pub fn chord_attenuation(grid: &SpatialGrid, sigma: &[f64], a: Point, b: Point) -> f64 {
    (-line_integral(grid, sigma, a, b)).exp()
}

fn line_integral(grid: &SpatialGrid, sigma: &[f64], a: Point, b: Point) -> f64 {
    let d = [b[0] - a[0], b[1] - a[1]];
    let len = (d[0] * d[0] + d[1] * d[1]).sqrt();
    if len == 0.0 {
        return 0.0;
    }
    let n = (len / grid.spacing()).ceil().max(1.0) as usize;
    let ds = len / n as f64;
    let mut acc = 0.5 * (grid.interpolate(sigma, a) + grid.interpolate(sigma, b));
    for j in 1..n {
        let t = j as f64 / n as f64;
        acc += grid.interpolate(sigma, [a[0] + t * d[0], a[1] + t * d[1]]);
    }
    acc * ds
}

/// Other end of the line from boundary point `y` through interior point `z`.
fn far_end(y: Point, z: Point) -> Option<Point> {
    let d = [z[0] - y[0], z[1] - y[1]];
    let l2 = d[0] * d[0] + d[1] * d[1];
    if l2 == 0.0 {
        return None;
    }
    // |y + t d| = 1 with |y| = 1 gives t = -2 y.d / |d|^2.
    let t = -2.0 * (y[0] * d[0] + y[1] * d[1]) / l2;
    Some([y[0] + t * d[0], y[1] + t * d[1]])
}

/// Polar angles `(lo, hi)` of the boundary points of spot `k` whose line
/// through `z` leaves the disk inside spot `l`.
pub(crate) fn visible_arc(source: &LocalizedSource, z: Point, k: usize, l: usize) -> Option<(f64, f64)> {
    let (ak, al, half) = (source.angles[k], source.angles[l], source.half_arc);
    let image = |phi: f64| far_end([phi.cos(), phi.sin()], z).map(|e| wrap(e[1].atan2(e[0]) - ak));
    let (a, b) = (image(al - half)?, image(al + half)?);
    let (lo, hi) = (a.min(b).max(-half), a.max(b).min(half));
    // An image arc straddling the cut at pi lies far from spot k.
    if (a - b).abs() > PI || lo >= hi {
        return None;
    }
    Some((ak + lo, ak + hi))
}

/// Geometric factor `B_h(z, y_k, y_l)` for spots `k`, `l` of `source`.
pub fn bfactor(source: &LocalizedSource, z: Point, k: usize, l: usize) -> Result<f64> {
    let (yk, yl) = (source.centers[k], source.centers[l]);
    let chord = ((yk[0] - yl[0]).powi(2) + (yk[1] - yl[1]).powi(2)).sqrt();
    let part = |from: usize, to: usize, y0: Point| -> f64 {
        let measure = visible_arc(source, z, from, to).map(|(lo, hi)| hi - lo).unwrap_or(0.0);
        measure / ((z[0] - y0[0]).powi(2) + (z[1] - y0[1]).powi(2)).sqrt()
    };
    let (pk, pl) = (part(k, l, yk), part(l, k, yl));
    if pk == 0.0 || pl == 0.0 {
        return Err(Error::Geometry(format!("point ({}, {}) does not see both spots {k} and {l}", z[0], z[1])));
    }
    Ok(chord / (2.0 * NU_1) / source.h * (pk + pl))
}

/// Excitation field for spot illumination, split into the ballistic part
/// (evaluated on dense angular samples through each spot) and the collided
/// remainder (solved on the discrete-ordinates grid).
pub struct SpotField<'a> {
    model: &'a ForwardModel,
    source: &'a LocalizedSource,
    sigma_tf: Vec<f64>,
    collided: PhaseSpaceField,
    pub report: SolveReport,
    arc_samples: usize,
}

/// Ballistic rays reaching one point.
struct Cone {
    /// Propagation direction `(x - y) / |x - y|` per arc sample.
    dirs: Vec<Point>,
    /// `g_h(y) E(y, x)` per sample.
    incoming: Vec<f64>,
    /// Angular measure per sample.
    weights: Vec<f64>,
}

/// Pointwise correlators at one point.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct SpotCorrelators {
    /// `int u(x, v) u(x, -v) dv`
    pub psi: f64,
    /// `int K u(x, v) u(x, -v) dv`
    pub chi: f64,
    /// Internal datum `-sigma_tf psi + sigma_s chi`.
    pub h: f64,
    /// Ballistic-ballistic part of `psi`.
    pub psi_ballistic: f64,
}

impl<'a> SpotField<'a> {
    /// Solves for the collided field. `arc_samples` sets the dense angular
    /// resolution per spot when evaluating correlators.
    pub fn solve(model: &'a ForwardModel, source: &'a LocalizedSource, arc_samples: usize) -> Result<Self> {
        let grid = model.space.grid();
        if grid.kind() != DomainKind::UnitDisk {
            return Err(Error::Geometry("spot illumination is defined on the unit disk".into()));
        }
        if arc_samples == 0 {
            return Err(invalid("need at least one sample per spot"));
        }
        let sigma_tf = model.coeffs.sigma_xtf();
        let system = model.excitation()?;
        let ang = model.space.angular();
        let g = model.phase.anisotropy();
        let n = grid.num_nodes();
        let m = ang.len();
        let node_samples = (arc_samples / 4).max(8);
        let mut probe = Self {
            model,
            source,
            sigma_tf,
            collided: PhaseSpaceField::zeros(&model.space),
            report: SolveReport { iterations: 0, residual: 0.0, history: Vec::new() },
            arc_samples: node_samples,
        };
        // First-collision source sigma_s K (B g_h) at every node.
        let rows: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|i| {
                let x = probe.interior_point(grid, i);
                let cone = probe.cone(x);
                (0..m)
                    .map(|k| {
                        let v = ang.direction(k);
                        let ks: f64 = cone
                            .dirs
                            .iter()
                            .zip(&cone.incoming)
                            .zip(&cone.weights)
                            .map(|((d, b), w)| hg_density(g, v[0] * d[0] + v[1] * d[1]) * b * w)
                            .sum();
                        model.coeffs.sigma_xs[i] * ks
                    })
                    .collect()
            })
            .collect();
        let q = PhaseSpaceField::from_fn(&model.space, |i, k| rows[i][k]);
        let (collided, report) = system.solve_forward(None, Some(&q), &model.solver)?;
        probe.collided = collided;
        probe.report = report;
        probe.arc_samples = arc_samples;
        Ok(probe)
    }

    fn interior_point(&self, grid: &SpatialGrid, i: usize) -> Point {
        let p = if grid.node_kind(i) == NodeKind::Ghost { grid.ray_origin(i) } else { grid.position(i) };
        let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
        let cap = 1.0 - 1e-9;
        if r > cap {
            [p[0] * cap / r, p[1] * cap / r]
        } else {
            p
        }
    }

    fn cone(&self, x: Point) -> Cone {
        let grid = self.model.space.grid();
        let amp = self.source.amplitude();
        let total = self.source.centers.len() * self.arc_samples;
        let mut cone = Cone {
            dirs: Vec::with_capacity(total),
            incoming: Vec::with_capacity(total),
            weights: Vec::with_capacity(total),
        };
        for j in 0..self.source.centers.len() {
            for (phi, dphi) in self.source.arc_samples(j, self.arc_samples) {
                let y = [phi.cos(), phi.sin()];
                let d = [x[0] - y[0], x[1] - y[1]];
                let r = (d[0] * d[0] + d[1] * d[1]).sqrt();
                if r < 1e-12 {
                    continue;
                }
                let v = [d[0] / r, d[1] / r];
                let jac = (y[0] * v[0] + y[1] * v[1]).abs() / r;
                cone.dirs.push(v);
                cone.incoming.push(amp * chord_attenuation(grid, &self.sigma_tf, y, x));
                cone.weights.push(jac * dphi);
            }
        }
        cone
    }

    /// `int B g_h(x, v) B g_h(x, -v) dv`, integrating over the exact arcs of
    /// each spot that see another spot through `x`.
    fn ballistic_pairs(&self, x: Point) -> f64 {
        let grid = self.model.space.grid();
        let amp = self.source.amplitude();
        let count = self.source.centers.len();
        let mut acc = 0.0;
        for k in 0..count {
            for l in 0..count {
                if k == l {
                    continue;
                }
                let Some((lo, hi)) = visible_arc(self.source, x, k, l) else { continue };
                let dphi = (hi - lo) / self.arc_samples as f64;
                for j in 0..self.arc_samples {
                    let phi = lo + (j as f64 + 0.5) * dphi;
                    let y = [phi.cos(), phi.sin()];
                    let Some(e) = far_end(y, x) else { continue };
                    let d = [x[0] - y[0], x[1] - y[1]];
                    let r = (d[0] * d[0] + d[1] * d[1]).sqrt();
                    let jac = (y[0] * d[0] + y[1] * d[1]).abs() / (r * r);
                    acc += amp * amp * chord_attenuation(grid, &self.sigma_tf, y, e) * jac * dphi;
                }
            }
        }
        acc
    }

    /// Correlators at an interior point `x`.
    pub fn correlators(&self, x: Point) -> SpotCorrelators {
        let grid = self.model.space.grid();
        let ang = self.model.space.angular();
        let g = self.model.phase.anisotropy();
        let m = ang.len();
        let wq = ang.weight();
        let x = {
            let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
            let cap = 1.0 - 1e-9;
            if r > cap {
                [x[0] * cap / r, x[1] * cap / r]
            } else {
                x
            }
        };
        let uc: Vec<f64> = (0..m).map(|k| grid.interpolate(self.collided.direction(k), x)).collect();
        let uc_at = |v: Point| -> f64 {
            let t = v[1].atan2(v[0]).rem_euclid(2.0 * PI) / wq;
            let k0 = (t as usize).min(m - 1);
            let f = t - k0 as f64;
            (1.0 - f) * uc[k0] + f * uc[(k0 + 1) % m]
        };
        let cone = self.cone(x);
        let kb = |v: Point| -> f64 {
            cone.dirs
                .iter()
                .zip(&cone.incoming)
                .zip(&cone.weights)
                .map(|((d, b), w)| hg_density(g, v[0] * d[0] + v[1] * d[1]) * b * w)
                .sum()
        };
        let kc = |v: Point| -> f64 {
            (0..m)
                .map(|k| {
                    let d = ang.direction(k);
                    hg_density(g, v[0] * d[0] + v[1] * d[1]) * uc[k]
                })
                .sum::<f64>()
                * wq
        };
        let ku = |v: Point| kb(v) + kc(v);

        let psi_bb = self.ballistic_pairs(x);
        let mut psi_bc = 0.0;
        let mut chi_b = 0.0;
        for ((d, b), w) in cone.dirs.iter().zip(&cone.incoming).zip(&cone.weights) {
            let back = [-d[0], -d[1]];
            psi_bc += b * uc_at(back) * w;
            chi_b += ku(back) * b * w;
        }
        let mut psi_cc = 0.0;
        let mut chi_c = 0.0;
        for k in 0..m {
            let km = ang.antipode(k);
            psi_cc += uc[k] * uc[km];
            chi_c += ku(ang.direction(k)) * uc[km];
        }
        let psi = psi_bb + 2.0 * psi_bc + psi_cc * wq;
        let chi = chi_b + chi_c * wq;
        let c = &self.model.coeffs;
        let sigma_s = grid.interpolate(&c.sigma_xs, x);
        let sigma_tf = grid.interpolate(&self.sigma_tf, x);
        SpotCorrelators { psi, chi, h: -sigma_tf * psi + sigma_s * chi, psi_ballistic: psi_bb }
    }

    /// Collided part of the excitation field.
    pub fn collided(&self) -> &PhaseSpaceField {
        &self.collided
    }

    /// Correlators at every physical node; ghost nodes repeat their projection.
    pub fn nodal_correlators(&self) -> Vec<SpotCorrelators> {
        let grid = self.model.space.grid();
        (0..grid.num_nodes()).into_par_iter().map(|i| self.correlators(self.interior_point(grid, i))).collect()
    }
}
