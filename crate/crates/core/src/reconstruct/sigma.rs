//! Recovery of `sigma_{x,f}` from the excitation datum `H`.

use std::sync::Arc;

use serde::Serialize;

use super::lbfgs::{lbfgs_minimize, LbfgsOptions, LbfgsResult};
use super::regularize::GradientPenalty;
use crate::error::{Error, Result};
use crate::functionals::{
    antipodal_correlator, ballistic_psi_correction, correlator_psi, internal_h_with_psi, ForwardModel,
};
use crate::grid::Point;
use crate::transport::{PhaseSpaceField, RteSystem, SolveReport};

pub type SourceFn = Arc<dyn Fn(Point) -> f64 + Send + Sync>;

/// Forward quantities at one `sigma_{x,f}`.
pub struct ExcitationState {
    pub system: RteSystem,
    pub u: PhaseSpaceField,
    pub ku: PhaseSpaceField,
    pub h: Vec<f64>,
    pub psi: Vec<f64>,
    pub report: SolveReport,
}

/// Objective value, its parts and gradient at one iterate.
#[derive(Clone, Debug, Serialize)]
pub struct SigmaObjectiveState {
    pub sigma_xf: Vec<f64>,
    pub objective: f64,
    pub misfit: f64,
    pub regularization: f64,
    pub gradient: Vec<f64>,
    pub h: Vec<f64>,
    pub psi: Vec<f64>,
}

/// `J(s) = 1/2 int |H(s) - H*|^2 + beta/2 int |grad s|^2` on the model's grid.
pub struct SigmaProblem {
    model: ForwardModel,
    source: SourceFn,
    h_star: Vec<f64>,
    beta: f64,
    weights: Vec<f64>,
    penalty: GradientPenalty,
    covariance: Option<Vec<f64>>,
}

impl SigmaProblem {
    pub fn new(model: ForwardModel, source: SourceFn, h_star: Vec<f64>, beta: f64) -> Result<Self> {
        if h_star.len() != model.space.num_nodes() {
            return Err(Error::ShapeMismatch("target data length differs from node count".into()));
        }
        if !(beta >= 0.0) {
            return Err(Error::InvalidParameter("regularization weight must be nonnegative".into()));
        }
        let weights = model.space.grid().volume_weights().to_vec();
        let penalty = GradientPenalty::new(model.space.grid());
        let covariance = match model.space.entry_samples() {
            1 => None,
            _ => Some(model.excitation()?.operator().entry_covariance(&*source)),
        };
        Ok(Self { model, source, h_star, beta, weights, penalty, covariance })
    }

    pub fn model(&self) -> &ForwardModel {
        &self.model
    }

    pub fn target(&self) -> &[f64] {
        &self.h_star
    }

    /// Solves the excitation problem for `sigma_xf`.
    pub fn forward(&self, sigma_xf: &[f64]) -> Result<ExcitationState> {
        let coeffs = self.model.coeffs.with_sigma_xf(sigma_xf.to_vec())?;
        let system =
            RteSystem::new(&self.model.space, &coeffs.sigma_xtf(), &coeffs.sigma_xs, self.model.phase.clone())?;
        let g = &*self.source;
        let (u, report) = system.solve_forward(Some(g), None, &self.model.solver)?;
        let ku = system.scatter(&u);
        let ang = self.model.space.angular();
        let mut psi = correlator_psi(&u, ang);
        if let Some(cov) = &self.covariance {
            for (p, c) in psi.iter_mut().zip(ballistic_psi_correction(system.operator(), cov)) {
                *p += c;
            }
        }
        let h = internal_h_with_psi(&psi, &u, &ku, &coeffs, ang);
        Ok(ExcitationState { system, u, ku, h, psi, report })
    }

    fn parts(&self, sigma_xf: &[f64], h: &[f64]) -> (f64, f64) {
        let misfit =
            0.5 * h.iter().zip(&self.h_star).zip(&self.weights).map(|((a, b), w)| w * (a - b).powi(2)).sum::<f64>();
        let reg = 0.5 * self.beta * self.penalty.energy(sigma_xf);
        (misfit, reg)
    }

    pub fn objective(&self, sigma_xf: &[f64]) -> Result<f64> {
        let st = self.forward(sigma_xf)?;
        let (m, r) = self.parts(sigma_xf, &st.h);
        Ok(m + r)
    }

    /// Objective and exact gradient of the discrete objective.
    pub fn evaluate(&self, sigma_xf: &[f64]) -> Result<SigmaObjectiveState> {
        let st = self.forward(sigma_xf)?;
        let (misfit, regularization) = self.parts(sigma_xf, &st.h);
        let sp = &self.model.space;
        let ang = sp.angular();
        let n = sp.num_nodes();
        let stf: Vec<f64> = st.system.sigma_total().to_vec();
        let ss = st.system.sigma_scat();
        let resid: Vec<f64> = (0..n).map(|i| self.weights[i] * (st.h[i] - self.h_star[i])).collect();

        // dJ/du = mu r w [-2 sigma_tf u(-v) + 2 sigma_s (K u)(-v)].
        let w = ang.weight();
        let mut rhs = PhaseSpaceField::zeros(sp);
        for k in 0..sp.num_dirs() {
            let km = ang.antipode(k);
            let (um, kum) = (st.u.direction(km), st.ku.direction(km));
            for i in 0..n {
                rhs.set(i, k, resid[i] * w * 2.0 * (-stf[i] * um[i] + ss[i] * kum[i]));
            }
        }
        let (lambda, _) = st.system.solve_transpose(&rhs, &self.model.solver)?;
        let mut scat = st.ku.clone();
        for k in 0..sp.num_dirs() {
            let row = &mut scat.as_mut_slice()[k * n..(k + 1) * n];
            for (v, s) in row.iter_mut().zip(ss) {
                *v *= s;
            }
        }
        let g = &*self.source;
        let entry = st.system.operator().entry_values(g);
        let mut sens = st.system.operator().sensitivity(lambda.as_slice(), scat.as_slice(), Some(&entry));
        if let Some(cov) = &self.covariance {
            // psi correction depends on the attenuation through A_k A_{-k}.
            let a = st.system.operator().ballistic_factors();
            let mut lam = vec![0.0; n * sp.num_dirs()];
            for k in 0..sp.num_dirs() {
                let km = ang.antipode(k);
                for i in 0..n {
                    lam[k * n + i] = -2.0 * resid[i] * stf[i] * w * cov[k * n + i] * a[km * n + i];
                }
            }
            let zero = vec![0.0; lam.len()];
            let ones = vec![1.0; lam.len()];
            for (s, d) in sens.iter_mut().zip(st.system.operator().sensitivity(&lam, &zero, Some(&ones))) {
                *s += d;
            }
        }
        let lap = self.penalty.laplacian(sigma_xf);
        let gradient: Vec<f64> = (0..n).map(|i| -resid[i] * st.psi[i] + sens[i] + self.beta * lap[i]).collect();
        Ok(SigmaObjectiveState {
            sigma_xf: sigma_xf.to_vec(),
            objective: misfit + regularization,
            misfit,
            regularization,
            gradient,
            h: st.h,
            psi: st.psi,
        })
    }
}

/// Linearized excitation datum `H'[sigma_xf] dsigma` of the discrete model.
pub fn frechet_h(problem: &SigmaProblem, sigma_xf: &[f64], dsigma: &[f64]) -> Result<Vec<f64>> {
    let st = problem.forward(sigma_xf)?;
    frechet_h_at(problem, &st, dsigma)
}

/// As [`frechet_h`] reusing a solved state.
pub fn frechet_h_at(problem: &SigmaProblem, st: &ExcitationState, dsigma: &[f64]) -> Result<Vec<f64>> {
    let sp = &problem.model.space;
    let n = sp.num_nodes();
    if dsigma.len() != n {
        return Err(Error::ShapeMismatch("perturbation length differs from node count".into()));
    }
    let ang = sp.angular();
    let ss = st.system.sigma_scat();
    let mut scat = st.ku.clone();
    for k in 0..sp.num_dirs() {
        let row = &mut scat.as_mut_slice()[k * n..(k + 1) * n];
        for (v, s) in row.iter_mut().zip(ss) {
            *v *= s;
        }
    }
    let g = &*problem.source;
    let entry = st.system.operator().entry_values(g);
    let mut b = PhaseSpaceField::zeros(sp);
    st.system.operator().tangent(dsigma, scat.as_slice(), Some(&entry), b.as_mut_slice());
    let (du, _) = st.system.solve_linear(&b, &problem.model.solver)?;
    let stf = st.system.sigma_total();
    let c1 = antipodal_correlator(&du, &st.u, ang);
    let c2 = antipodal_correlator(&du, &st.ku, ang);
    let mut dpsi = vec![0.0; n];
    if let Some(cov) = &problem.covariance {
        let m = sp.num_dirs();
        let mut da = vec![0.0; n * m];
        st.system.operator().tangent(dsigma, &vec![0.0; n * m], Some(&vec![1.0; n * m]), &mut da);
        let a = st.system.operator().ballistic_factors();
        for k in 0..m {
            let km = ang.antipode(k);
            for i in 0..n {
                dpsi[i] += 2.0 * ang.weight() * cov[k * n + i] * a[km * n + i] * da[k * n + i];
            }
        }
    }
    Ok((0..n).map(|i| -dsigma[i] * st.psi[i] - stf[i] * (2.0 * c1[i] + dpsi[i]) + 2.0 * ss[i] * c2[i]).collect())
}

/// Outcome of [`reconstruct_sigma`].
#[derive(Clone, Debug, Serialize)]
pub struct SigmaReconstruction {
    pub sigma_xf: Vec<f64>,
    pub optimizer: LbfgsResult,
}

/// Minimizes the objective over the box `[lo, hi]` from `x0`.
pub fn reconstruct_sigma(
    problem: &SigmaProblem,
    x0: &[f64],
    lo: f64,
    hi: f64,
    opts: &LbfgsOptions,
) -> Result<SigmaReconstruction> {
    let n = x0.len();
    let mut f = |x: &[f64]| -> Result<(f64, Vec<f64>)> {
        let s = problem.evaluate(x)?;
        Ok((s.objective, s.gradient))
    };
    let result = lbfgs_minimize(&mut f, x0, &vec![lo; n], &vec![hi; n], opts)?;
    Ok(SigmaReconstruction { sigma_xf: result.x.clone(), optimizer: result })
}
