//! Phase-space discretization: spatial lattices on the unit square or unit
//! disk, uniformly spaced discrete ordinates on the circle, and the ray
//! geometry (exit times, boundary traces, along-ray quadrature) that the
//! long-characteristics transport sweep is built on.
//!
//! Off-node values are obtained by bilinear interpolation on the lattice.
//! On the unit disk the lattice is padded with a ring of ghost nodes so that
//! every cell touching the disk has four stored corners; a ghost node carries
//! the field value at its radial projection onto the circle.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};

pub type Point = [f64; 2];

/// Points farther than this outside the domain are rejected; closer ones are
/// projected onto the boundary.
pub const OUTSIDE_TOL: f64 = 1e-10;

const NO_SLOT: u32 = u32::MAX;
/// Relative slack used when splitting a ray into whole steps and a tail.
const SNAP: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DomainKind {
    UnitSquare,
    UnitDisk,
}

impl DomainKind {
    pub fn diameter(self) -> f64 {
        match self {
            DomainKind::UnitSquare => std::f64::consts::SQRT_2,
            DomainKind::UnitDisk => 2.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            DomainKind::UnitSquare => "unit-square",
            DomainKind::UnitDisk => "unit-disk",
        }
    }
}

impl std::str::FromStr for DomainKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unit-square" => Ok(DomainKind::UnitSquare),
            "unit-disk" => Ok(DomainKind::UnitDisk),
            other => Err(Error::Parse(format!("unknown domain kind `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NodeKind {
    /// Lattice node strictly inside the domain (on the square this includes
    /// nothing on the edges).
    Interior,
    /// Node on the boundary; carries an outward unit normal.
    Boundary,
    /// Lattice node outside the disk kept only as an interpolation corner.
    Ghost,
}

/// Bilinear interpolation stencil: four storage slots and their weights.
#[derive(Clone, Copy, Debug)]
pub struct Stencil {
    pub slots: [u32; 4],
    pub weights: [f64; 4],
}

impl Stencil {
    #[inline]
    pub fn apply(&self, field: &[f64]) -> f64 {
        let s = &self.slots;
        let w = &self.weights;
        w[0] * field[s[0] as usize]
            + w[1] * field[s[1] as usize]
            + w[2] * field[s[2] as usize]
            + w[3] * field[s[3] as usize]
    }

    #[inline]
    pub fn scatter(&self, value: f64, field: &mut [f64]) {
        for c in 0..4 {
            field[self.slots[c] as usize] += self.weights[c] * value;
        }
    }
}

/// Spatial discretization of the unit square or unit disk.
#[derive(Clone, Debug)]
pub struct SpatialGrid {
    kind: DomainKind,
    nx: usize,
    ny: usize,
    hx: f64,
    hy: f64,
    inv_hx: f64,
    inv_hy: f64,
    lattice_origin: Point,
    positions: Vec<Point>,
    ray_origins: Vec<Point>,
    kinds: Vec<NodeKind>,
    lattice_of: Vec<Option<(usize, usize)>>,
    lattice_slot: Vec<u32>,
    normals: Vec<Option<Point>>,
    volume_weights: Vec<f64>,
    boundary_nodes: Vec<usize>,
    boundary_weights: Vec<f64>,
}

impl SpatialGrid {
    pub fn new(kind: DomainKind, nx: usize, ny: usize) -> Result<Self> {
        match kind {
            DomainKind::UnitSquare => Self::unit_square(nx, ny),
            DomainKind::UnitDisk => {
                if nx != ny {
                    return Err(invalid("unit-disk lattice must be square (nx == ny)"));
                }
                Self::unit_disk(nx)
            }
        }
    }

    /// Uniform `nx` x `ny` node lattice tiling [0,1]^2, edges included.
    pub fn unit_square(nx: usize, ny: usize) -> Result<Self> {
        if nx < 3 || ny < 3 {
            return Err(invalid(format!("unit-square grid needs at least 3x3 nodes, got {nx}x{ny}")));
        }
        let hx = 1.0 / (nx - 1) as f64;
        let hy = 1.0 / (ny - 1) as f64;
        let n = nx * ny;
        let mut positions = Vec::with_capacity(n);
        let mut kinds = Vec::with_capacity(n);
        let mut lattice_of = Vec::with_capacity(n);
        let mut normals = Vec::with_capacity(n);
        let mut volume_weights = Vec::with_capacity(n);
        let mut boundary_nodes = Vec::new();
        let mut boundary_weights = Vec::new();
        for iy in 0..ny {
            for ix in 0..nx {
                let x = if ix == nx - 1 { 1.0 } else { ix as f64 * hx };
                let y = if iy == ny - 1 { 1.0 } else { iy as f64 * hy };
                positions.push([x, y]);
                lattice_of.push(Some((ix, iy)));
                let left = ix == 0;
                let right = ix == nx - 1;
                let bottom = iy == 0;
                let top = iy == ny - 1;
                let tx = if left || right { 0.5 } else { 1.0 };
                let ty = if bottom || top { 0.5 } else { 1.0 };
                volume_weights.push(hx * hy * tx * ty);
                if left || right || bottom || top {
                    let nxv = if left {
                        -1.0
                    } else if right {
                        1.0
                    } else {
                        0.0
                    };
                    let nyv = if bottom {
                        -1.0
                    } else if top {
                        1.0
                    } else {
                        0.0
                    };
                    let len = ((nxv * nxv + nyv * nyv) as f64).sqrt();
                    normals.push(Some([nxv / len, nyv / len]));
                    kinds.push(NodeKind::Boundary);
                    // Half of each incident boundary edge.
                    let mut w = 0.0;
                    if bottom || top {
                        w += if left || right { 0.5 * hx } else { hx };
                    }
                    if left || right {
                        w += if bottom || top { 0.5 * hy } else { hy };
                    }
                    boundary_nodes.push(iy * nx + ix);
                    boundary_weights.push(w);
                } else {
                    normals.push(None);
                    kinds.push(NodeKind::Interior);
                }
            }
        }
        let lattice_slot = (0..n as u32).collect();
        Ok(Self {
            kind: DomainKind::UnitSquare,
            nx,
            ny,
            hx,
            hy,
            inv_hx: 1.0 / hx,
            inv_hy: 1.0 / hy,
            lattice_origin: [0.0, 0.0],
            ray_origins: positions.clone(),
            positions,
            kinds,
            lattice_of,
            lattice_slot,
            normals,
            volume_weights,
            boundary_nodes,
            boundary_weights,
        })
    }

    /// Unit disk discretized by an `n` x `n` lattice over [-1,1]^2 (interior
    /// and ghost nodes) plus `round(2 pi / h)` boundary nodes at uniform angle.
    pub fn unit_disk(n: usize) -> Result<Self> {
        if n < 5 {
            return Err(invalid(format!("unit-disk lattice needs at least 5 nodes per side, got {n}")));
        }
        let h = 2.0 / (n - 1) as f64;
        let coord = |i: usize| if i == n - 1 { 1.0 } else { -1.0 + i as f64 * h };

        // Corners of every cell that touches the closed disk must be stored.
        let mut needed = vec![false; n * n];
        for cy in 0..n - 1 {
            for cx in 0..n - 1 {
                let (x0, x1) = (coord(cx), coord(cx + 1));
                let (y0, y1) = (coord(cy), coord(cy + 1));
                let dx = if x0 > 0.0 {
                    x0
                } else if x1 < 0.0 {
                    -x1
                } else {
                    0.0
                };
                let dy = if y0 > 0.0 {
                    y0
                } else if y1 < 0.0 {
                    -y1
                } else {
                    0.0
                };
                if (dx * dx + dy * dy).sqrt() <= 1.0 + 1e-9 {
                    for (a, b) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
                        needed[(cy + b) * n + cx + a] = true;
                    }
                }
            }
        }

        let mut positions = Vec::new();
        let mut ray_origins = Vec::new();
        let mut kinds = Vec::new();
        let mut lattice_of = Vec::new();
        let mut normals = Vec::new();
        let mut volume_weights = Vec::new();
        let mut lattice_slot = vec![NO_SLOT; n * n];
        for iy in 0..n {
            for ix in 0..n {
                let p = [coord(ix), coord(iy)];
                let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
                let interior = r < 1.0 - 1e-12;
                if !(interior || needed[iy * n + ix]) {
                    continue;
                }
                lattice_slot[iy * n + ix] = positions.len() as u32;
                positions.push(p);
                lattice_of.push(Some((ix, iy)));
                normals.push(None);
                if interior {
                    ray_origins.push(p);
                    kinds.push(NodeKind::Interior);
                    volume_weights.push(h * h);
                } else {
                    ray_origins.push([p[0] / r, p[1] / r]);
                    kinds.push(NodeKind::Ghost);
                    volume_weights.push(0.0);
                }
            }
        }
        let nb = ((2.0 * PI / h).round() as usize).max(8);
        let mut boundary_nodes = Vec::with_capacity(nb);
        let mut boundary_weights = Vec::with_capacity(nb);
        for j in 0..nb {
            let a = 2.0 * PI * j as f64 / nb as f64;
            let p = [a.cos(), a.sin()];
            boundary_nodes.push(positions.len());
            boundary_weights.push(2.0 * PI / nb as f64);
            positions.push(p);
            ray_origins.push(p);
            kinds.push(NodeKind::Boundary);
            lattice_of.push(None);
            normals.push(Some(p));
            volume_weights.push(0.0);
        }
        Ok(Self {
            kind: DomainKind::UnitDisk,
            nx: n,
            ny: n,
            hx: h,
            hy: h,
            inv_hx: 1.0 / h,
            inv_hy: 1.0 / h,
            lattice_origin: [-1.0, -1.0],
            positions,
            ray_origins,
            kinds,
            lattice_of,
            lattice_slot,
            normals,
            volume_weights,
            boundary_nodes,
            boundary_weights,
        })
    }

    pub fn kind(&self) -> DomainKind {
        self.kind
    }

    /// Lattice node counts per axis.
    pub fn lattice_dims(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    /// Lattice spacing along x (the default ray step).
    pub fn spacing(&self) -> f64 {
        self.hx
    }

    pub fn spacing_xy(&self) -> (f64, f64) {
        (self.hx, self.hy)
    }

    pub fn num_nodes(&self) -> usize {
        self.positions.len()
    }

    pub fn position(&self, i: usize) -> Point {
        self.positions[i]
    }

    pub fn positions(&self) -> &[Point] {
        &self.positions
    }

    /// Point from which the node's rays are traced (the node itself, or for
    /// ghost nodes its radial projection onto the circle).
    pub fn ray_origin(&self, i: usize) -> Point {
        self.ray_origins[i]
    }

    pub fn node_kind(&self, i: usize) -> NodeKind {
        self.kinds[i]
    }

    pub fn lattice_index(&self, i: usize) -> Option<(usize, usize)> {
        self.lattice_of[i]
    }

    /// Storage slot of lattice node `(ix, iy)`, if that node is stored.
    pub fn slot(&self, ix: usize, iy: usize) -> Option<usize> {
        let s = self.lattice_slot[iy * self.nx + ix];
        (s != NO_SLOT).then_some(s as usize)
    }

    pub fn normal(&self, i: usize) -> Option<Point> {
        self.normals[i]
    }

    /// Nodal quadrature weights for integrals over the domain.
    pub fn volume_weights(&self) -> &[f64] {
        &self.volume_weights
    }

    pub fn boundary_nodes(&self) -> &[usize] {
        &self.boundary_nodes
    }

    /// Arc-length weights matching [`boundary_nodes`](Self::boundary_nodes).
    pub fn boundary_weights(&self) -> &[f64] {
        &self.boundary_weights
    }

    /// Nodes that represent points of the physical domain (ghosts excluded).
    pub fn is_physical(&self, i: usize) -> bool {
        self.kinds[i] != NodeKind::Ghost
    }

    pub fn diameter(&self) -> f64 {
        self.kind.diameter()
    }

    /// Signed distance-like excess of `p` outside the domain (<= 0 inside).
    pub fn outside_excess(&self, p: Point) -> f64 {
        match self.kind {
            DomainKind::UnitSquare => {
                let ex = (-p[0]).max(p[0] - 1.0);
                let ey = (-p[1]).max(p[1] - 1.0);
                ex.max(ey)
            }
            DomainKind::UnitDisk => (p[0] * p[0] + p[1] * p[1]).sqrt() - 1.0,
        }
    }

    pub fn contains(&self, p: Point, tol: f64) -> bool {
        self.outside_excess(p) <= tol
    }

    /// Distance from `p` to the boundary (0 outside).
    pub fn distance_to_boundary(&self, p: Point) -> f64 {
        (-self.outside_excess(p)).max(0.0)
    }

    /// Clamp a point that is at most [`OUTSIDE_TOL`] outside back onto the domain.
    pub fn project(&self, p: Point) -> Result<Point> {
        let excess = self.outside_excess(p);
        if excess > OUTSIDE_TOL {
            return Err(Error::OutsideDomain { x: p[0], y: p[1] });
        }
        if excess <= 0.0 {
            return Ok(p);
        }
        Ok(match self.kind {
            DomainKind::UnitSquare => [p[0].clamp(0.0, 1.0), p[1].clamp(0.0, 1.0)],
            DomainKind::UnitDisk => {
                let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
                [p[0] / r, p[1] / r]
            }
        })
    }

    /// Backward and forward exit distances `(tau_minus, tau_plus)` such that
    /// `x - tau_minus v` and `x + tau_plus v` lie on the boundary.
    pub fn exit_times(&self, x: Point, v: Point) -> Result<(f64, f64)> {
        let x = self.project(x)?;
        Ok(self.exit_times_unchecked(x, v))
    }

    #[inline]
    pub(crate) fn exit_times_unchecked(&self, x: Point, v: Point) -> (f64, f64) {
        match self.kind {
            DomainKind::UnitSquare => {
                let back = |xc: f64, vc: f64| {
                    if vc > 0.0 {
                        xc / vc
                    } else if vc < 0.0 {
                        (xc - 1.0) / vc
                    } else {
                        f64::INFINITY
                    }
                };
                let tm = back(x[0], v[0]).min(back(x[1], v[1])).max(0.0);
                let tp = back(x[0], -v[0]).min(back(x[1], -v[1])).max(0.0);
                (tm, tp)
            }
            DomainKind::UnitDisk => {
                let xv = x[0] * v[0] + x[1] * v[1];
                let c = (1.0 - (x[0] * x[0] + x[1] * x[1])).max(0.0);
                let disc = (xv * xv + c).sqrt();
                ((xv + disc).max(0.0), (disc - xv).max(0.0))
            }
        }
    }

    /// Boundary point `x - tau v`, snapped exactly onto the boundary.
    pub(crate) fn boundary_point(&self, x: Point, v: Point, tau: f64) -> Point {
        let p = [x[0] - tau * v[0], x[1] - tau * v[1]];
        match self.kind {
            DomainKind::UnitSquare => {
                let mut q = [p[0].clamp(0.0, 1.0), p[1].clamp(0.0, 1.0)];
                // Snap the coordinate closest to an edge.
                let dx = q[0].min(1.0 - q[0]);
                let dy = q[1].min(1.0 - q[1]);
                if dx <= dy {
                    q[0] = if q[0] < 0.5 { 0.0 } else { 1.0 };
                } else {
                    q[1] = if q[1] < 0.5 { 0.0 } else { 1.0 };
                }
                q
            }
            DomainKind::UnitDisk => {
                let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
                if r > 0.0 {
                    [p[0] / r, p[1] / r]
                } else {
                    [1.0, 0.0]
                }
            }
        }
    }

    /// Outward unit normal at a boundary point.
    pub fn boundary_normal_at(&self, p: Point) -> Point {
        match self.kind {
            DomainKind::UnitDisk => {
                let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
                [p[0] / r, p[1] / r]
            }
            DomainKind::UnitSquare => {
                let tol = 1e-9;
                let nx = if p[0] <= tol {
                    -1.0
                } else if p[0] >= 1.0 - tol {
                    1.0
                } else {
                    0.0
                };
                let ny = if p[1] <= tol {
                    -1.0
                } else if p[1] >= 1.0 - tol {
                    1.0
                } else {
                    0.0
                };
                let len = ((nx * nx + ny * ny) as f64).sqrt().max(1e-300);
                [nx / len, ny / len]
            }
        }
    }

    /// Bilinear stencil at `p`. Points slightly outside the lattice are
    /// clamped onto it.
    #[inline]
    pub fn stencil(&self, p: Point) -> Stencil {
        let fx = (p[0] - self.lattice_origin[0]) * self.inv_hx;
        let fy = (p[1] - self.lattice_origin[1]) * self.inv_hy;
        // Truncation agrees with floor after clamping at zero.
        let ix = (fx as isize).clamp(0, self.nx as isize - 2) as usize;
        let iy = (fy as isize).clamp(0, self.ny as isize - 2) as usize;
        let tx = (fx - ix as f64).clamp(0.0, 1.0);
        let ty = (fy - iy as f64).clamp(0.0, 1.0);
        let base = iy * self.nx + ix;
        let slots = [
            self.lattice_slot[base],
            self.lattice_slot[base + 1],
            self.lattice_slot[base + self.nx],
            self.lattice_slot[base + self.nx + 1],
        ];
        let weights = [(1.0 - tx) * (1.0 - ty), tx * (1.0 - ty), (1.0 - tx) * ty, tx * ty];
        if slots.iter().all(|&s| s != NO_SLOT) {
            return Stencil { slots, weights };
        }
        self.repair_stencil(slots, weights)
    }

    #[cold]
    fn repair_stencil(&self, mut slots: [u32; 4], mut weights: [f64; 4]) -> Stencil {
        let present = slots.iter().find(|&&s| s != NO_SLOT).copied().unwrap_or(0);
        let mut total = 0.0;
        for c in 0..4 {
            if slots[c] == NO_SLOT {
                slots[c] = present;
                weights[c] = 0.0;
            }
            total += weights[c];
        }
        if total > 0.0 {
            for w in &mut weights {
                *w /= total;
            }
        } else {
            weights = [1.0, 0.0, 0.0, 0.0];
        }
        Stencil { slots, weights }
    }

    /// Bilinear interpolation of a nodal field at `p`.
    pub fn interpolate(&self, field: &[f64], p: Point) -> f64 {
        self.stencil(p).apply(field)
    }

    /// Nodal field rendered on the full lattice, `NaN` where the lattice node
    /// is not a physical interior/boundary node.
    pub fn to_lattice(&self, field: &[f64]) -> Vec<f64> {
        let mut out = vec![f64::NAN; self.nx * self.ny];
        for (i, li) in self.lattice_of.iter().enumerate() {
            if let Some((ix, iy)) = li {
                if self.kinds[i] != NodeKind::Ghost {
                    out[iy * self.nx + ix] = field[i];
                }
            }
        }
        out
    }

    /// Samples a function of position at every node. Ghost nodes take the
    /// value at their projection onto the boundary.
    pub fn sample<F: Fn(Point) -> f64>(&self, f: F) -> Vec<f64> {
        (0..self.num_nodes())
            .map(|i| f(if self.kinds[i] == NodeKind::Ghost { self.ray_origins[i] } else { self.positions[i] }))
            .collect()
    }

    /// Discrete L2 inner product over the domain.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        f.iter().zip(&self.volume_weights).map(|(a, w)| a * w).sum()
    }

    pub fn l2_norm(&self, f: &[f64]) -> f64 {
        f.iter().zip(&self.volume_weights).map(|(a, w)| a * a * w).sum::<f64>().sqrt()
    }
}

/// Uniformly spaced discrete ordinates on the unit circle with equal weights
/// `2 pi / M`.
#[derive(Clone, Debug)]
pub struct AngularGrid {
    dirs: Vec<Point>,
    weight: f64,
}

impl AngularGrid {
    /// `m` must be even and at least 4. When `m` is a multiple of four the
    /// quarter-turn rotation maps directions onto each other exactly.
    pub fn new(m: usize) -> Result<Self> {
        if m < 4 || m % 2 != 0 {
            return Err(invalid(format!("direction count must be even and >= 4, got {m}")));
        }
        let mut dirs = vec![[0.0; 2]; m];
        let base = if m % 4 == 0 { m / 4 } else { m / 2 };
        for (k, d) in dirs.iter_mut().enumerate().take(base) {
            let a = 2.0 * PI * k as f64 / m as f64;
            *d = [a.cos(), a.sin()];
        }
        if m % 4 == 0 {
            for k in base..m {
                let [x, y] = dirs[k - base];
                dirs[k] = [-y, x];
            }
        } else {
            for k in base..m {
                let [x, y] = dirs[k - base];
                dirs[k] = [-x, -y];
            }
        }
        Ok(Self { dirs, weight: 2.0 * PI / m as f64 })
    }

    pub fn len(&self) -> usize {
        self.dirs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dirs.is_empty()
    }

    #[inline]
    pub fn direction(&self, k: usize) -> Point {
        self.dirs[k]
    }

    pub fn directions(&self) -> &[Point] {
        &self.dirs
    }

    /// Quadrature weight shared by every direction.
    #[inline]
    pub fn weight(&self) -> f64 {
        self.weight
    }

    /// Index of the direction opposite to `k`.
    #[inline]
    pub fn antipode(&self, k: usize) -> usize {
        let m = self.dirs.len();
        (k + m / 2) % m
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuadratureRule {
    Trapezoid,
    Simpson,
}

/// Quadrature on `[0, tau]` for a backward ray; `nodes[j]` is the distance
/// from the ray origin.
#[derive(Clone, Debug, PartialEq)]
pub struct RayQuadrature {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Node layout of a backward ray of length `tau` sampled at `step`:
/// nodes sit at `j * step` and the last node is always at `tau`. Returns the
/// node count and whether the final interval is a short tail.
#[inline]
pub(crate) fn ray_layout(tau: f64, step: f64) -> (usize, bool) {
    if tau <= 0.0 {
        return (1, false);
    }
    let q = tau / step;
    let mut m = q.floor();
    let mut r = tau - m * step;
    if r > step * (1.0 - SNAP) {
        m += 1.0;
        r = 0.0;
    }
    let m = m as usize;
    if r < step * SNAP {
        if m == 0 {
            (1, false)
        } else {
            (m + 1, false)
        }
    } else {
        (m + 2, true)
    }
}

/// Distance of node `j` from the ray origin for a ray with `n` nodes.
#[inline]
pub(crate) fn ray_node(j: usize, n: usize, tau: f64, step: f64) -> f64 {
    if j + 1 == n {
        tau
    } else {
        j as f64 * step
    }
}

/// Fills `out[..n]` with quadrature weights for the layout returned by
/// [`ray_layout`]. Simpson covers an even number of whole steps; any left
/// over whole step and the tail use the trapezoid rule.
pub(crate) fn fill_weights(n: usize, tail: bool, tau: f64, step: f64, rule: QuadratureRule, out: &mut [f64]) {
    for w in out[..n].iter_mut() {
        *w = 0.0;
    }
    if n < 2 {
        return;
    }
    let s = |j: usize| ray_node(j, n, tau, step);
    let intervals = n - 1;
    let uniform = if tail { intervals - 1 } else { intervals };
    let simpson_pairs = match rule {
        QuadratureRule::Simpson => uniform / 2,
        QuadratureRule::Trapezoid => 0,
    };
    for p in 0..simpson_pairs {
        let a = 2 * p;
        let h1 = s(a + 1) - s(a);
        let h2 = s(a + 2) - s(a + 1);
        let hs = h1 + h2;
        out[a] += hs / 6.0 * (2.0 - h2 / h1);
        out[a + 1] += hs * hs * hs / (6.0 * h1 * h2);
        out[a + 2] += hs / 6.0 * (2.0 - h1 / h2);
    }
    for j in 2 * simpson_pairs..intervals {
        let d = s(j + 1) - s(j);
        out[j] += 0.5 * d;
        out[j + 1] += 0.5 * d;
    }
}

/// Along-ray quadrature on `[x - tau_minus v, x]`.
pub fn ray_quadrature(
    grid: &SpatialGrid,
    x: Point,
    v: Point,
    rule: QuadratureRule,
    step: f64,
) -> Result<RayQuadrature> {
    if !(step > 0.0) {
        return Err(invalid("ray step must be positive"));
    }
    let (tau, _) = grid.exit_times(x, v)?;
    if tau <= 0.0 {
        return Err(Error::Geometry("ray has zero length".into()));
    }
    if tau < 0.5 * step {
        return Ok(RayQuadrature { nodes: vec![0.0, tau], weights: vec![0.5 * tau, 0.5 * tau] });
    }
    let (n, tail) = ray_layout(tau, step);
    let n = n.max(2);
    let nodes = (0..n).map(|j| ray_node(j, n, tau, step)).collect();
    let mut weights = vec![0.0; n];
    fill_weights(n, tail, tau, step, rule, &mut weights);
    Ok(RayQuadrature { nodes, weights })
}

/// Geometry of a single ray through `origin`.
#[derive(Clone, Debug)]
pub struct RayTrace {
    pub origin: Point,
    pub direction: Point,
    pub tau_minus: f64,
    pub tau_plus: f64,
    /// `origin - tau_minus * direction`, on the boundary.
    pub entry: Point,
    /// `origin + tau_plus * direction`, on the boundary.
    pub exit: Point,
    /// Trapezoid nodes (distance back from `origin`) on `[entry, origin]`.
    pub quadrature: RayQuadrature,
}

impl RayTrace {
    pub fn new(grid: &SpatialGrid, origin: Point, direction: Point, step: f64) -> Result<Self> {
        let norm = (direction[0] * direction[0] + direction[1] * direction[1]).sqrt();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(invalid("ray direction must be a unit vector"));
        }
        let origin = grid.project(origin)?;
        let (tau_minus, tau_plus) = grid.exit_times_unchecked(origin, direction);
        let entry = grid.boundary_point(origin, direction, tau_minus);
        let exit = grid.boundary_point(origin, [-direction[0], -direction[1]], tau_plus);
        let quadrature = if tau_minus > 0.0 {
            ray_quadrature(grid, origin, direction, QuadratureRule::Trapezoid, step)?
        } else {
            RayQuadrature { nodes: vec![0.0], weights: vec![0.0] }
        };
        Ok(Self { origin, direction, tau_minus, tau_plus, entry, exit, quadrature })
    }

    /// Point at distance `s` behind the origin.
    pub fn point_at(&self, s: f64) -> Point {
        [self.origin[0] - s * self.direction[0], self.origin[1] - s * self.direction[1]]
    }
}
