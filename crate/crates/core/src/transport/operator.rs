//! Long-characteristics sweeps for a fixed total attenuation field.
//!
//! For ray `(x_i, v_k)` with backward length `tau` the samples `y_j = x_i - s_j v_k`
//! carry Simpson weights `W_j` and cumulative trapezoid optical depths `A_j`.
//! The transport operator is `(T f)(x_i, v_k) = sum_j W_j exp(-A_j) f(y_j, v_k)`
//! and the ballistic operator is `(B g)(x_i, v_k) = g(x_i - tau v_k) exp(-A_end)`.

use rayon::prelude::*;

use super::{PhaseSpace, PhaseSpaceField};
use crate::error::{Error, Result};
use crate::grid::{fill_weights, ray_layout, ray_node, Point, QuadratureRule, Stencil};

/// Upper bound on cached per-sample transport coefficients.
const COEF_CACHE_LIMIT: usize = 96_000_000;
/// Upper bound on cached per-sample interpolation stencils.
const STENCIL_CACHE_LIMIT: usize = 12_000_000;

#[derive(Default)]
pub(crate) struct Scratch {
    stencils: Vec<Stencil>,
    coef: Vec<f64>,
    simpson: Vec<f64>,
    depth: Vec<f64>,
    sigma: Vec<f64>,
}

impl Scratch {
    fn reserve(&mut self, n: usize) {
        if self.stencils.len() < n {
            let blank = Stencil { slots: [0; 4], weights: [0.0; 4] };
            self.stencils.resize(n, blank);
            self.coef.resize(n, 0.0);
            self.simpson.resize(n, 0.0);
            self.depth.resize(n, 0.0);
            self.sigma.resize(n, 0.0);
        }
    }
}

/// Samples of one ray: interpolation stencils and transport coefficients
/// `W_j exp(-A_j)`.
struct RayView<'a> {
    tau: f64,
    stencils: &'a [Stencil],
    coef: &'a [f64],
}

/// Splits `data` into consecutive mutable chunks at the given boundaries.
fn split_by<'a, T>(mut data: &'a mut [T], bounds: impl Iterator<Item = usize>) -> Vec<&'a mut [T]> {
    let mut out = Vec::new();
    for len in bounds {
        let (head, tail) = data.split_at_mut(len);
        out.push(head);
        data = tail;
    }
    out
}

/// Precomputed ray data for one attenuation field.
#[derive(Clone, Debug)]
pub struct TransportOperator {
    space: PhaseSpace,
    sigma: Vec<f64>,
    tau: Vec<f64>,
    ballistic: Vec<f64>,
    offsets: Option<Vec<usize>>,
    coef: Vec<f64>,
    stencils: Vec<Stencil>,
}

impl TransportOperator {
    /// Builds the operator for the nodal total attenuation `sigma_total`.
    pub fn new(space: &PhaseSpace, sigma_total: &[f64]) -> Result<Self> {
        Self::with_cache_limits(space, sigma_total, COEF_CACHE_LIMIT, STENCIL_CACHE_LIMIT)
    }

    /// As [`new`](Self::new) with explicit sample-count limits for the
    /// coefficient and stencil caches.
    pub fn with_cache_limits(
        space: &PhaseSpace,
        sigma_total: &[f64],
        coef_limit: usize,
        stencil_limit: usize,
    ) -> Result<Self> {
        let n = space.num_nodes();
        if sigma_total.len() != n {
            return Err(Error::ShapeMismatch(format!(
                "attenuation has {} values, grid has {n} nodes",
                sigma_total.len()
            )));
        }
        if sigma_total.iter().any(|s| !s.is_finite() || *s < 0.0) {
            return Err(Error::InvalidParameter("attenuation must be finite and nonnegative".into()));
        }
        let m = space.num_dirs();
        let grid = space.grid();
        let angular = space.angular();
        let step = space.step();
        let mut tau = vec![0.0; n * m];
        tau.par_chunks_mut(n).enumerate().for_each(|(k, row)| {
            let v = angular.direction(k);
            for (i, t) in row.iter_mut().enumerate() {
                *t = grid.exit_times_unchecked(grid.ray_origin(i), v).0;
            }
        });
        let total: usize = tau.iter().map(|&t| ray_layout(t, step).0).sum();
        let cache_coef = total <= coef_limit;
        let cache_stencils = cache_coef && total <= stencil_limit;
        let mut op = Self {
            space: space.clone(),
            sigma: sigma_total.to_vec(),
            tau,
            ballistic: Vec::new(),
            offsets: None,
            coef: Vec::new(),
            stencils: Vec::new(),
        };
        let mut ballistic = vec![0.0; n * m];
        if !cache_coef {
            ballistic.par_chunks_mut(n).enumerate().for_each_init(Scratch::default, |sc, (k, brow)| {
                for (i, b) in brow.iter_mut().enumerate() {
                    let len = op.compute_ray(k, i, sc);
                    *b = (-sc.depth[len - 1]).exp();
                }
            });
            op.ballistic = ballistic;
            return Ok(op);
        }
        let mut offsets = Vec::with_capacity(n * m + 1);
        offsets.push(0);
        for &t in &op.tau {
            offsets.push(offsets.last().unwrap() + ray_layout(t, step).0);
        }
        let per_dir = |k: usize| offsets[(k + 1) * n] - offsets[k * n];
        let mut coef = vec![0.0; total];
        let blank = Stencil { slots: [0; 4], weights: [0.0; 4] };
        let mut stencils = vec![blank; if cache_stencils { total } else { 0 }];
        let coef_chunks = split_by(&mut coef, (0..m).map(per_dir));
        let st_chunks: Vec<Option<&mut [Stencil]>> = if cache_stencils {
            split_by(&mut stencils, (0..m).map(per_dir)).into_iter().map(Some).collect()
        } else {
            (0..m).map(|_| None).collect()
        };
        let op_ref = &op;
        let offsets_ref = &offsets;
        ballistic
            .par_chunks_mut(n)
            .zip(coef_chunks.into_par_iter().zip(st_chunks.into_par_iter()))
            .enumerate()
            .for_each_init(Scratch::default, |sc, (k, (brow, (crow, mut srow)))| {
                let base = offsets_ref[k * n];
                for (i, b) in brow.iter_mut().enumerate() {
                    let len = op_ref.compute_ray(k, i, sc);
                    let start = offsets_ref[k * n + i] - base;
                    crow[start..start + len].copy_from_slice(&sc.coef[..len]);
                    if let Some(srow) = srow.as_deref_mut() {
                        srow[start..start + len].copy_from_slice(&sc.stencils[..len]);
                    }
                    *b = (-sc.depth[len - 1]).exp();
                }
            });
        op.ballistic = ballistic;
        op.coef = coef;
        op.stencils = stencils;
        op.offsets = Some(offsets);
        Ok(op)
    }

    pub fn space(&self) -> &PhaseSpace {
        &self.space
    }

    pub fn sigma_total(&self) -> &[f64] {
        &self.sigma
    }

    /// Backward exit distance of ray `(k, i)`.
    pub fn tau(&self, k: usize, i: usize) -> f64 {
        self.tau[k * self.space.num_nodes() + i]
    }

    /// `exp(-int_0^tau sigma)` along ray `(k, i)`.
    pub fn ballistic_factor(&self, k: usize, i: usize) -> f64 {
        self.ballistic[k * self.space.num_nodes() + i]
    }

    pub fn is_cached(&self) -> bool {
        self.offsets.is_some()
    }

    #[inline]
    fn ray_start(&self, k: usize, i: usize) -> (Point, Point, f64) {
        let grid = self.space.grid();
        let x = grid.ray_origin(i);
        let v = self.space.angular().direction(k);
        (x, v, self.tau[k * self.space.num_nodes() + i])
    }

    /// Fills stencils, Simpson weights, nodal attenuation samples, optical
    /// depths and transport coefficients for ray `(k, i)`; returns the sample count.
    fn compute_ray(&self, k: usize, i: usize, sc: &mut Scratch) -> usize {
        let step = self.space.step();
        let (x, v, tau) = self.ray_start(k, i);
        let (len, tail) = ray_layout(tau, step);
        sc.reserve(len);
        let grid = self.space.grid();
        for j in 0..len {
            let s = ray_node(j, len, tau, step);
            let st = grid.stencil([x[0] - s * v[0], x[1] - s * v[1]]);
            sc.sigma[j] = st.apply(&self.sigma);
            sc.stencils[j] = st;
        }
        fill_weights(len, tail, tau, step, QuadratureRule::Simpson, &mut sc.simpson);
        sc.depth[0] = 0.0;
        for j in 1..len {
            let d = ray_node(j, len, tau, step) - ray_node(j - 1, len, tau, step);
            sc.depth[j] = sc.depth[j - 1] + 0.5 * d * (sc.sigma[j - 1] + sc.sigma[j]);
        }
        for j in 0..len {
            sc.coef[j] = sc.simpson[j] * (-sc.depth[j]).exp();
        }
        len
    }

    /// Samples of ray `(k, i)`, taken from the cache where possible.
    #[inline]
    fn ray<'a>(&'a self, k: usize, i: usize, sc: &'a mut Scratch) -> RayView<'a> {
        let idx = k * self.space.num_nodes() + i;
        let tau = self.tau[idx];
        match &self.offsets {
            Some(off) => {
                let (a, b) = (off[idx], off[idx + 1]);
                let stencils = if self.stencils.is_empty() {
                    let len = b - a;
                    sc.reserve(len);
                    let step = self.space.step();
                    let (x, v, _) = self.ray_start(k, i);
                    let grid = self.space.grid();
                    for j in 0..len {
                        let s = ray_node(j, len, tau, step);
                        sc.stencils[j] = grid.stencil([x[0] - s * v[0], x[1] - s * v[1]]);
                    }
                    &sc.stencils[..len]
                } else {
                    &self.stencils[a..b]
                };
                RayView { tau, stencils, coef: &self.coef[a..b] }
            }
            None => {
                let len = self.compute_ray(k, i, sc);
                RayView { tau, stencils: &sc.stencils[..len], coef: &sc.coef[..len] }
            }
        }
    }

    /// `out = T f`.
    pub fn apply(&self, f: &[f64], out: &mut [f64]) {
        let n = self.space.num_nodes();
        out.par_chunks_mut(n).enumerate().for_each_init(Scratch::default, |sc, (k, row)| {
            let src = &f[k * n..(k + 1) * n];
            for (i, o) in row.iter_mut().enumerate() {
                let r = self.ray(k, i, sc);
                *o = r.stencils.iter().zip(r.coef).map(|(st, c)| c * st.apply(src)).sum();
            }
        });
    }

    /// `out = T^T f`.
    pub fn apply_transpose(&self, f: &[f64], out: &mut [f64]) {
        let n = self.space.num_nodes();
        out.par_chunks_mut(n).enumerate().for_each_init(Scratch::default, |sc, (k, row)| {
            row.iter_mut().for_each(|o| *o = 0.0);
            let src = &f[k * n..(k + 1) * n];
            for (i, &lam) in src.iter().enumerate() {
                if lam == 0.0 {
                    continue;
                }
                let r = self.ray(k, i, sc);
                for (st, c) in r.stencils.iter().zip(r.coef) {
                    st.scatter(c * lam, row);
                }
            }
        });
    }

    /// Boundary value of every ray entry point, `g(x_i - tau v_k)`, or its
    /// mean over the angular cell of `v_k` when the phase space asks for
    /// several entry samples.
    pub fn entry_values<G: Fn(Point) -> f64 + Sync + ?Sized>(&self, g: &G) -> Vec<f64> {
        let n = self.space.num_nodes();
        let grid = self.space.grid();
        let sub = self.space.entry_samples();
        let cell = std::f64::consts::TAU / self.space.num_dirs() as f64;
        let turns: Vec<(f64, f64)> = (0..sub)
            .map(|j| {
                let a = ((j as f64 + 0.5) / sub as f64 - 0.5) * cell;
                (a.cos(), a.sin())
            })
            .collect();
        let mut out = vec![0.0; n * self.space.num_dirs()];
        out.par_chunks_mut(n).enumerate().for_each(|(k, row)| {
            let v = self.space.angular().direction(k);
            for (i, o) in row.iter_mut().enumerate() {
                let (x, _, tau) = self.ray_start(k, i);
                if sub == 1 || tau <= 0.0 {
                    *o = g(grid.boundary_point(x, v, tau));
                    continue;
                }
                let mut acc = 0.0;
                for &(c, s) in &turns {
                    let w = [c * v[0] - s * v[1], s * v[0] + c * v[1]];
                    let (t, _) = grid.exit_times_unchecked(x, w);
                    acc += g(grid.boundary_point(x, w, t));
                }
                *o = acc / sub as f64;
            }
        });
        out
    }

    /// Within-cell covariance of the boundary data at the two ends of every
    /// chord, `mean g(a_j) g(b_j) - mean g(a_j) mean g(b_j)` over the entry
    /// samples of `v_k`, with `a_j` and `b_j` the entry points of the sample
    /// direction and its reverse. Symmetric under `k -> -k`; zero with one sample.
    pub fn entry_covariance<G: Fn(Point) -> f64 + Sync + ?Sized>(&self, g: &G) -> Vec<f64> {
        let n = self.space.num_nodes();
        let grid = self.space.grid();
        let sub = self.space.entry_samples();
        let mut out = vec![0.0; n * self.space.num_dirs()];
        if sub == 1 {
            return out;
        }
        let cell = std::f64::consts::TAU / self.space.num_dirs() as f64;
        let turns: Vec<(f64, f64)> = (0..sub)
            .map(|j| {
                let a = ((j as f64 + 0.5) / sub as f64 - 0.5) * cell;
                (a.cos(), a.sin())
            })
            .collect();
        out.par_chunks_mut(n).enumerate().for_each(|(k, row)| {
            let v = self.space.angular().direction(k);
            for (i, o) in row.iter_mut().enumerate() {
                let x = grid.ray_origin(i);
                let (mut ga, mut gb, mut gab) = (0.0, 0.0, 0.0);
                for &(c, s) in &turns {
                    let w = [c * v[0] - s * v[1], s * v[0] + c * v[1]];
                    let (tb, tf) = grid.exit_times_unchecked(x, w);
                    let a = g(grid.boundary_point(x, w, tb.max(0.0)));
                    let b = g(grid.boundary_point(x, [-w[0], -w[1]], tf.max(0.0)));
                    ga += a;
                    gb += b;
                    gab += a * b;
                }
                let m = sub as f64;
                *o = gab / m - (ga / m) * (gb / m);
            }
        });
        out
    }

    /// `exp(-int_0^tau sigma)` for every ray, direction-major.
    pub fn ballistic_factors(&self) -> &[f64] {
        &self.ballistic
    }

    /// `out = B g`.
    pub fn ballistic<G: Fn(Point) -> f64 + Sync + ?Sized>(&self, g: &G) -> PhaseSpaceField {
        let mut vals = self.entry_values(g);
        for (o, b) in vals.iter_mut().zip(&self.ballistic) {
            *o *= b;
        }
        PhaseSpaceField::from_vec(&self.space, vals).expect("shape is consistent")
    }

    /// Derivative of `sum lambda (B g + T F)` with respect to the nodal
    /// attenuation, with `F` and the entry values `g_entry` held fixed.
    pub fn sensitivity(&self, lambda: &[f64], source: &[f64], g_entry: Option<&[f64]>) -> Vec<f64> {
        let n = self.space.num_nodes();
        let m = self.space.num_dirs();
        let step = self.space.step();
        let parts: Vec<Vec<f64>> = (0..m)
            .into_par_iter()
            .map_init(
                || (Scratch::default(), Vec::new()),
                |(sc, suffix), k| {
                    let mut grad = vec![0.0; n];
                    let src = &source[k * n..(k + 1) * n];
                    for i in 0..n {
                        let lam = lambda[k * n + i];
                        if lam == 0.0 {
                            continue;
                        }
                        let ball = self.ballistic[k * n + i];
                        let r = self.ray(k, i, sc);
                        let len = r.coef.len();
                        suffix.clear();
                        suffix.extend(r.stencils.iter().zip(r.coef).map(|(st, c)| lam * c * st.apply(src)));
                        if let Some(ge) = g_entry {
                            suffix[len - 1] += lam * ge[k * n + i] * ball;
                        }
                        for j in (0..len.saturating_sub(1)).rev() {
                            suffix[j] += suffix[j + 1];
                        }
                        for l in 0..len {
                            let mut c = 0.0;
                            if l >= 1 {
                                let d = ray_node(l, len, r.tau, step) - ray_node(l - 1, len, r.tau, step);
                                c += 0.5 * d * suffix[l];
                            }
                            if l + 1 < len {
                                let d = ray_node(l + 1, len, r.tau, step) - ray_node(l, len, r.tau, step);
                                c += 0.5 * d * suffix[l + 1];
                            }
                            if c != 0.0 {
                                r.stencils[l].scatter(-c, &mut grad);
                            }
                        }
                    }
                    grad
                },
            )
            .collect();
        let mut total = vec![0.0; n];
        for p in &parts {
            for (t, v) in total.iter_mut().zip(p) {
                *t += v;
            }
        }
        total
    }

    /// Directional derivative of `B g + T F` along the attenuation
    /// perturbation `dsigma`, with `F` and `g_entry` held fixed.
    pub fn tangent(&self, dsigma: &[f64], source: &[f64], g_entry: Option<&[f64]>, out: &mut [f64]) {
        let n = self.space.num_nodes();
        let step = self.space.step();
        out.par_chunks_mut(n).enumerate().for_each_init(Scratch::default, |sc, (k, row)| {
            let src = &source[k * n..(k + 1) * n];
            for (i, o) in row.iter_mut().enumerate() {
                let ball = self.ballistic[k * n + i];
                let r = self.ray(k, i, sc);
                let len = r.coef.len();
                let mut dprev = r.stencils[0].apply(dsigma);
                let mut da = 0.0;
                let mut acc = 0.0;
                for j in 1..len {
                    let dj = r.stencils[j].apply(dsigma);
                    let d = ray_node(j, len, r.tau, step) - ray_node(j - 1, len, r.tau, step);
                    da += 0.5 * d * (dprev + dj);
                    dprev = dj;
                    acc -= r.coef[j] * r.stencils[j].apply(src) * da;
                }
                if let Some(ge) = g_entry {
                    acc -= ge[k * n + i] * ball * da;
                }
                *o = acc;
            }
        });
    }
}
