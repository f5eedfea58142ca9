use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{PhaseFunction, PhaseSpace, PhaseSpaceField, TransportOperator};
use crate::error::{Error, Result};
use crate::grid::Point;

/// Boundary illumination as a function of the boundary point.
pub type Boundary<'a> = &'a (dyn Fn(Point) -> f64 + Sync);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveMethod {
    /// Fixed-point iteration `u <- b + T sigma_s K u`.
    SourceIteration,
    /// Restarted GMRES on `(I - T sigma_s K) u = b`.
    Gmres,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub method: SolveMethod,
    pub restart: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { tol: 1e-8, max_iter: 5000, method: SolveMethod::SourceIteration, restart: 30 }
    }
}

impl SolverOptions {
    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_method(mut self, method: SolveMethod) -> Self {
        self.method = method;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) || self.max_iter == 0 || self.restart == 0 {
            return Err(Error::InvalidParameter("solver needs tol > 0, max_iter > 0, restart > 0".into()));
        }
        Ok(())
    }
}

/// Convergence record of one linear solve.
#[derive(Clone, Debug, Default, Serialize)]
pub struct SolveReport {
    pub iterations: usize,
    /// Final relative update (source iteration) or relative residual (GMRES).
    pub residual: f64,
    /// Sup-norm of successive updates for source iteration, relative
    /// residual per inner step for GMRES.
    pub history: Vec<f64>,
}

/// Transport problem `u = B g + T(sigma_s K u + q)` for fixed coefficients.
#[derive(Clone, Debug)]
pub struct RteSystem {
    op: TransportOperator,
    sigma_s: Vec<f64>,
    phase: PhaseFunction,
    scattering: bool,
}

impl RteSystem {
    pub fn new(space: &PhaseSpace, sigma_total: &[f64], sigma_scat: &[f64], phase: PhaseFunction) -> Result<Self> {
        if sigma_scat.len() != space.num_nodes() {
            return Err(Error::ShapeMismatch("scattering coefficient length differs from node count".into()));
        }
        if phase.num_directions() != space.num_dirs() {
            return Err(Error::ShapeMismatch("phase function and angular grid disagree".into()));
        }
        if sigma_scat.iter().any(|s| !s.is_finite() || *s < 0.0) {
            return Err(Error::InvalidParameter("scattering coefficient must be finite and nonnegative".into()));
        }
        let op = TransportOperator::new(space, sigma_total)?;
        let scattering = sigma_scat.iter().any(|&s| s != 0.0);
        Ok(Self { op, sigma_s: sigma_scat.to_vec(), phase, scattering })
    }

    pub fn space(&self) -> &PhaseSpace {
        self.op.space()
    }

    pub fn operator(&self) -> &TransportOperator {
        &self.op
    }

    pub fn phase(&self) -> &PhaseFunction {
        &self.phase
    }

    pub fn sigma_scat(&self) -> &[f64] {
        &self.sigma_s
    }

    pub fn sigma_total(&self) -> &[f64] {
        self.op.sigma_total()
    }

    /// `K f`.
    pub fn scatter(&self, f: &PhaseSpaceField) -> PhaseSpaceField {
        let mut out = PhaseSpaceField::zeros(self.space());
        self.phase.scatter_into(f.as_slice(), self.space().num_nodes(), out.as_mut_slice());
        out
    }

    /// `out = sigma_s K f`.
    fn scattering_source(&self, f: &[f64], out: &mut [f64]) {
        let n = self.space().num_nodes();
        self.phase.scatter_into(f, n, out);
        out.par_chunks_mut(n).for_each(|row| {
            for (o, s) in row.iter_mut().zip(&self.sigma_s) {
                *o *= s;
            }
        });
    }

    /// `out = T sigma_s K f`.
    fn apply_m(&self, f: &[f64], out: &mut [f64], tmp: &mut [f64]) {
        self.scattering_source(f, tmp);
        self.op.apply(tmp, out);
    }

    /// `out = K sigma_s T^T f` (the transpose of [`apply_m`](Self::apply_m)).
    fn apply_mt(&self, f: &[f64], out: &mut [f64], tmp: &mut [f64]) {
        self.op.apply_transpose(f, tmp);
        let n = self.space().num_nodes();
        tmp.par_chunks_mut(n).for_each(|row| {
            for (o, s) in row.iter_mut().zip(&self.sigma_s) {
                *o *= s;
            }
        });
        self.phase.scatter_into(tmp, n, out);
    }

    pub fn ballistic(&self, g: Boundary) -> PhaseSpaceField {
        self.op.ballistic(g)
    }

    /// `T q`.
    pub fn transport(&self, q: &PhaseSpaceField) -> PhaseSpaceField {
        let mut out = PhaseSpaceField::zeros(self.space());
        self.op.apply(q.as_slice(), out.as_mut_slice());
        out
    }

    /// `T^T q`.
    pub fn transport_transpose(&self, q: &PhaseSpaceField) -> PhaseSpaceField {
        let mut out = PhaseSpaceField::zeros(self.space());
        self.op.apply_transpose(q.as_slice(), out.as_mut_slice());
        out
    }

    /// `T sigma_s K f`.
    pub fn scattered_transport(&self, f: &PhaseSpaceField) -> PhaseSpaceField {
        let mut out = PhaseSpaceField::zeros(self.space());
        let mut tmp = vec![0.0; self.space().len()];
        self.apply_m(f.as_slice(), out.as_mut_slice(), &mut tmp);
        out
    }

    /// Right-hand side `B g + T q` of the fixed-point equation.
    pub fn source_term(&self, g: Option<Boundary>, q: Option<&PhaseSpaceField>) -> PhaseSpaceField {
        let mut b = match g {
            Some(g) => self.ballistic(g),
            None => PhaseSpaceField::zeros(self.space()),
        };
        if let Some(q) = q {
            b.axpy(1.0, &self.transport(q));
        }
        b
    }

    /// Solves `u = B g + T(sigma_s K u + q)`.
    pub fn solve_forward(
        &self,
        g: Option<Boundary>,
        q: Option<&PhaseSpaceField>,
        opts: &SolverOptions,
    ) -> Result<(PhaseSpaceField, SolveReport)> {
        let b = self.source_term(g, q);
        self.solve_linear(&b, opts)
    }

    /// Same problem with every direction reversed: inflow `g` on the outgoing
    /// boundary and volumetric source `q`; returns `u(x, v)` of
    /// `-v . grad u + sigma_t u = sigma_s K u + q`.
    pub fn solve_reversed(
        &self,
        g: Option<Boundary>,
        q: Option<&PhaseSpaceField>,
        opts: &SolverOptions,
    ) -> Result<(PhaseSpaceField, SolveReport)> {
        let qr = q.map(PhaseSpaceField::reversed);
        let (u, rep) = self.solve_forward(g, qr.as_ref(), opts)?;
        Ok((u.reversed(), rep))
    }

    /// Solves `(I - T sigma_s K) u = b`.
    pub fn solve_linear(&self, b: &PhaseSpaceField, opts: &SolverOptions) -> Result<(PhaseSpaceField, SolveReport)> {
        opts.validate()?;
        let len = self.space().len();
        let mut tmp = vec![0.0; len];
        self.iterate(b, opts, |x, out| self.apply_m(x, out, &mut tmp))
    }

    /// Solves the exact discrete transpose `(I - K sigma_s T^T) x = b`.
    pub fn solve_transpose(&self, b: &PhaseSpaceField, opts: &SolverOptions) -> Result<(PhaseSpaceField, SolveReport)> {
        opts.validate()?;
        let len = self.space().len();
        let mut tmp = vec![0.0; len];
        self.iterate(b, opts, |x, out| self.apply_mt(x, out, &mut tmp))
    }

    /// Sup-norm of `u - b - T sigma_s K u`.
    pub fn fixed_point_residual(&self, u: &PhaseSpaceField, b: &PhaseSpaceField) -> f64 {
        let mu = self.scattered_transport(u);
        u.as_slice().iter().zip(b.as_slice()).zip(mu.as_slice()).fold(0.0f64, |a, ((u, b), m)| a.max((u - b - m).abs()))
    }

    fn iterate<F: FnMut(&[f64], &mut [f64])>(
        &self,
        b: &PhaseSpaceField,
        opts: &SolverOptions,
        apply: F,
    ) -> Result<(PhaseSpaceField, SolveReport)> {
        if b.as_slice().len() != self.space().len() {
            return Err(Error::ShapeMismatch("right-hand side does not match the phase space".into()));
        }
        let bnorm = b.sup_norm();
        if !bnorm.is_finite() {
            return Err(Error::InvalidParameter("right-hand side is not finite".into()));
        }
        if bnorm == 0.0 || !self.scattering {
            let rep = SolveReport { iterations: 1, residual: 0.0, history: vec![0.0] };
            return Ok((b.clone(), rep));
        }
        let (x, rep) = match opts.method {
            SolveMethod::SourceIteration => source_iteration(b.as_slice(), opts, apply)?,
            SolveMethod::Gmres => gmres(b.as_slice(), opts, apply)?,
        };
        Ok((PhaseSpaceField::from_vec(self.space(), x)?, rep))
    }
}

fn source_iteration<F: FnMut(&[f64], &mut [f64])>(
    b: &[f64],
    opts: &SolverOptions,
    mut apply: F,
) -> Result<(Vec<f64>, SolveReport)> {
    let mut x = b.to_vec();
    let mut y = vec![0.0; b.len()];
    let mut history = Vec::new();
    for it in 1..=opts.max_iter {
        apply(&x, &mut y);
        let mut upd = 0.0f64;
        let mut norm = 0.0f64;
        for ((yv, bv), xv) in y.iter_mut().zip(b).zip(&x) {
            *yv += bv;
            upd = upd.max((*yv - xv).abs());
            norm = norm.max(yv.abs());
        }
        std::mem::swap(&mut x, &mut y);
        history.push(upd);
        let rel = if norm > 0.0 { upd / norm } else { 0.0 };
        if !rel.is_finite() {
            return Err(Error::NotConverged { iterations: it, residual: rel });
        }
        if rel <= opts.tol {
            return Ok((x, SolveReport { iterations: it, residual: rel, history }));
        }
        if it == opts.max_iter {
            return Err(Error::NotConverged { iterations: it, residual: rel });
        }
    }
    unreachable!("loop returns on its final iteration")
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn gmres<F: FnMut(&[f64], &mut [f64])>(
    b: &[f64],
    opts: &SolverOptions,
    mut apply: F,
) -> Result<(Vec<f64>, SolveReport)> {
    let n = b.len();
    let m = opts.restart;
    let bnorm = dot(b, b).sqrt();
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut w = vec![0.0; n];
    let mut history = Vec::new();
    let mut total = 0;
    while total < opts.max_iter {
        // r = b - (I - M) x
        if total > 0 {
            apply(&x, &mut w);
            for i in 0..n {
                r[i] = b[i] - x[i] + w[i];
            }
        }
        let beta = dot(&r, &r).sqrt();
        if beta / bnorm <= opts.tol {
            break;
        }
        let mut basis: Vec<Vec<f64>> = vec![r.iter().map(|v| v / beta).collect()];
        let mut hess = vec![vec![0.0; m]; m + 1];
        let mut cs = vec![0.0; m];
        let mut sn = vec![0.0; m];
        let mut gvec = vec![0.0; m + 1];
        gvec[0] = beta;
        let mut used = 0;
        for j in 0..m {
            apply(&basis[j], &mut w);
            for i in 0..n {
                w[i] = basis[j][i] - w[i];
            }
            for (l, vl) in basis.iter().enumerate() {
                let h = dot(&w, vl);
                hess[l][j] = h;
                for i in 0..n {
                    w[i] -= h * vl[i];
                }
            }
            let hn = dot(&w, &w).sqrt();
            hess[j + 1][j] = hn;
            for l in 0..j {
                let t = cs[l] * hess[l][j] + sn[l] * hess[l + 1][j];
                hess[l + 1][j] = -sn[l] * hess[l][j] + cs[l] * hess[l + 1][j];
                hess[l][j] = t;
            }
            let denom = hess[j][j].hypot(hess[j + 1][j]);
            cs[j] = hess[j][j] / denom;
            sn[j] = hess[j + 1][j] / denom;
            hess[j][j] = denom;
            hess[j + 1][j] = 0.0;
            gvec[j + 1] = -sn[j] * gvec[j];
            gvec[j] *= cs[j];
            used = j + 1;
            total += 1;
            let rel = gvec[j + 1].abs() / bnorm;
            history.push(rel);
            if rel <= opts.tol || hn == 0.0 || total >= opts.max_iter {
                break;
            }
            basis.push(w.iter().map(|v| v / hn).collect());
        }
        // Back substitution.
        let mut y = vec![0.0; used];
        for l in (0..used).rev() {
            let mut s = gvec[l];
            for c in l + 1..used {
                s -= hess[l][c] * y[c];
            }
            y[l] = s / hess[l][l];
        }
        for (l, yl) in y.iter().enumerate() {
            for i in 0..n {
                x[i] += yl * basis[l][i];
            }
        }
    }
    apply(&x, &mut w);
    let rr: f64 = (0..n).map(|i| (b[i] - x[i] + w[i]).powi(2)).sum();
    let rel = rr.sqrt() / bnorm;
    if rel <= opts.tol {
        return Ok((x, SolveReport { iterations: total, residual: rel, history }));
    }
    Err(Error::NotConverged { iterations: total, residual: rel })
}
