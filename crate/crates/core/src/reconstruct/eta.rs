//! Recovery of the quantum efficiency `eta` from the emission datum `S`.
//!
//! For fixed `sigma_{x,f}` the map `eta -> S(eta)` is linear:
//! `S = D_m w(eta) + eta sigma_{x,f} (I u)(I W) + D_x phi(eta)` where
//! `w` and `phi` solve transport problems with sources proportional to `eta`
//! and `D_m`, `D_x` are weighted angular sums against fixed fields.

use serde::{Deserialize, Serialize};

use super::sigma::SourceFn;
use crate::error::{Error, Result};
use crate::functionals::ForwardModel;
use crate::transport::{PhaseSpaceField, RteSystem};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CgOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for CgOptions {
    fn default() -> Self {
        Self { tol: 1e-8, max_iter: 200 }
    }
}

/// Linear forward map `eta -> S` for a fixed excitation field.
pub struct EtaProblem {
    model: ForwardModel,
    excitation: RteSystem,
    emission: RteSystem,
    /// `sigma_f I u`
    a: Vec<f64>,
    /// `sigma_f I W`
    b: Vec<f64>,
    /// `sigma_f (I u)(I W)`
    local: Vec<f64>,
    /// `w_q (-sigma_mt W + sigma_ms K W)`
    p_m: PhaseSpaceField,
    /// `w_q (-sigma_tf u + sigma_s K u)`
    p_x: PhaseSpaceField,
    weights: Vec<f64>,
}

fn weighted_field(wq: f64, f: &PhaseSpaceField, kf: &PhaseSpaceField, att: &[f64], scat: &[f64]) -> PhaseSpaceField {
    let n = f.num_nodes();
    let mut out = f.clone();
    for (idx, v) in out.as_mut_slice().iter_mut().enumerate() {
        let i = idx % n;
        *v = wq * (-att[i] * f.as_slice()[idx] + scat[i] * kf.as_slice()[idx]);
    }
    out
}

/// `sum_k p(x, v_k) f(x, v_k)`.
fn contract(p: &PhaseSpaceField, f: &PhaseSpaceField) -> Vec<f64> {
    let n = p.num_nodes();
    let mut out = vec![0.0; n];
    for k in 0..p.num_dirs() {
        for ((o, a), b) in out.iter_mut().zip(p.direction(k)).zip(f.direction(k)) {
            *o += a * b;
        }
    }
    out
}

/// `p(x, v) s(x)` as a phase-space field.
fn expand(p: &PhaseSpaceField, s: &[f64]) -> PhaseSpaceField {
    let n = p.num_nodes();
    let mut out = p.clone();
    for (idx, v) in out.as_mut_slice().iter_mut().enumerate() {
        *v *= s[idx % n];
    }
    out
}

fn angular_sum(f: &PhaseSpaceField) -> Vec<f64> {
    f.angular_integral(1.0)
}

impl EtaProblem {
    /// Solves for `u` (illumination `g`) and the auxiliary field (boundary data `h`).
    pub fn new(model: ForwardModel, g: SourceFn, h: SourceFn) -> Result<Self> {
        let excitation = model.excitation()?;
        let emission = model.emission()?;
        let (u, _) = model.solve_u(&excitation, &*g)?;
        let (aux, _) = model.solve_aux(&emission, &*h)?;
        let sp = &model.space;
        let wq = sp.angular().weight();
        let c = &model.coeffs;
        let iu = u.angular_integral(wq);
        let ia = aux.angular_integral(wq);
        let n = sp.num_nodes();
        let a: Vec<f64> = (0..n).map(|i| c.sigma_xf[i] * iu[i]).collect();
        let b: Vec<f64> = (0..n).map(|i| c.sigma_xf[i] * ia[i]).collect();
        let local: Vec<f64> = (0..n).map(|i| c.sigma_xf[i] * iu[i] * ia[i]).collect();
        let p_m = weighted_field(wq, &aux, &emission.scatter(&aux), &c.sigma_mt(), &c.sigma_ms);
        let p_x = weighted_field(wq, &u, &excitation.scatter(&u), &c.sigma_xtf(), &c.sigma_xs);
        let weights = sp.grid().volume_weights().to_vec();
        Ok(Self { model, excitation, emission, a, b, local, p_m, p_x, weights })
    }

    pub fn model(&self) -> &ForwardModel {
        &self.model
    }

    /// `S(eta)`.
    pub fn apply(&self, eta: &[f64]) -> Result<Vec<f64>> {
        let sp = &self.model.space;
        let n = sp.num_nodes();
        if eta.len() != n {
            return Err(Error::ShapeMismatch("eta length differs from node count".into()));
        }
        let qm: Vec<f64> = (0..n).map(|i| eta[i] * self.a[i]).collect();
        let qx: Vec<f64> = (0..n).map(|i| eta[i] * self.b[i]).collect();
        let (w, _) =
            self.emission.solve_forward(None, Some(&PhaseSpaceField::isotropic(sp, &qm)?), &self.model.solver)?;
        let (phi, _) =
            self.excitation.solve_reversed(None, Some(&PhaseSpaceField::isotropic(sp, &qx)?), &self.model.solver)?;
        let s1 = contract(&self.p_m, &w);
        let s3 = contract(&self.p_x, &phi);
        Ok((0..n).map(|i| s1[i] + eta[i] * self.local[i] + s3[i]).collect())
    }

    /// `S^T s`, the exact transpose of [`apply`](Self::apply).
    pub fn apply_transpose(&self, s: &[f64]) -> Result<Vec<f64>> {
        let n = self.model.space.num_nodes();
        if s.len() != n {
            return Err(Error::ShapeMismatch("datum length differs from node count".into()));
        }
        let opts = &self.model.solver;
        let (lm, _) = self.emission.solve_transpose(&expand(&self.p_m, s), opts)?;
        let ym = angular_sum(&self.emission.transport_transpose(&lm));
        let (lx, _) = self.excitation.solve_transpose(&expand(&self.p_x, s).reversed(), opts)?;
        let yx = angular_sum(&self.excitation.transport_transpose(&lx));
        Ok((0..n).map(|i| self.a[i] * ym[i] + s[i] * self.local[i] + self.b[i] * yx[i]).collect())
    }
}

/// Outcome of [`reconstruct_eta`].
#[derive(Clone, Debug, Serialize)]
pub struct EtaReconstruction {
    pub eta: Vec<f64>,
    pub unclamped: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub residual_history: Vec<f64>,
}

/// Minimizes `1/2 int |S(eta) - S*|^2 + beta/2 int eta^2` by conjugate
/// gradients on the normal equations, then clamps into `[lo, hi]`.
pub fn reconstruct_eta(
    problem: &EtaProblem,
    s_star: &[f64],
    beta: f64,
    lo: f64,
    hi: f64,
    opts: &CgOptions,
) -> Result<EtaReconstruction> {
    let n = problem.model.space.num_nodes();
    if s_star.len() != n {
        return Err(Error::ShapeMismatch("target datum length differs from node count".into()));
    }
    if !(beta >= 0.0) || !(lo <= hi) {
        return Err(Error::InvalidParameter("need beta >= 0 and lo <= hi".into()));
    }
    let mu = &problem.weights;
    let weighted: Vec<f64> = (0..n).map(|i| mu[i] * s_star[i]).collect();
    let rhs = problem.apply_transpose(&weighted)?;
    let normal = |x: &[f64]| -> Result<Vec<f64>> {
        let ax = problem.apply(x)?;
        let max: Vec<f64> = (0..n).map(|i| mu[i] * ax[i]).collect();
        let mut out = problem.apply_transpose(&max)?;
        for i in 0..n {
            out[i] += beta * mu[i] * x[i];
        }
        Ok(out)
    };
    let (x, iterations, converged, residual_history) = conjugate_gradient(normal, &rhs, opts)?;
    let eta = x.iter().map(|v| v.clamp(lo, hi)).collect();
    Ok(EtaReconstruction { eta, unclamped: x, iterations, converged, residual_history })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Conjugate gradients from a zero start. Returns the iterate, the iteration
/// count, whether the tolerance was met, and the relative residual history.
pub fn conjugate_gradient<F: FnMut(&[f64]) -> Result<Vec<f64>>>(
    mut apply: F,
    rhs: &[f64],
    opts: &CgOptions,
) -> Result<(Vec<f64>, usize, bool, Vec<f64>)> {
    let n = rhs.len();
    let mut x = vec![0.0; n];
    let bnorm = dot(rhs, rhs).sqrt();
    let mut history = vec![1.0];
    if bnorm == 0.0 {
        return Ok((x, 0, true, vec![0.0]));
    }
    let mut r = rhs.to_vec();
    let mut p = r.clone();
    let mut rr = dot(&r, &r);
    for it in 1..=opts.max_iter {
        let ap = apply(&p)?;
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::Stagnation { iterations: it, residual: rr.sqrt() / bnorm, history });
        }
        let alpha = rr / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rr_new = dot(&r, &r);
        let rel = rr_new.sqrt() / bnorm;
        history.push(rel);
        if !rel.is_finite() {
            return Err(Error::Stagnation { iterations: it, residual: rel, history });
        }
        if rel <= opts.tol {
            return Ok((x, it, true, history));
        }
        let beta = rr_new / rr;
        rr = rr_new;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
    }
    Ok((x, opts.max_iter, false, history))
}
