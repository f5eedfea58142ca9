//! Two-stage inversion: `sigma_{x,f}` from `H` by projected L-BFGS with an
//! adjoint gradient, then `eta` from `S` by regularized least squares.

mod conditions;
mod eta;
mod lbfgs;
mod regularize;
mod sigma;

pub use conditions::{check_linearized_conditions, ConditionCheck, ConditionReport};
pub use eta::{conjugate_gradient, reconstruct_eta, CgOptions, EtaProblem, EtaReconstruction};
pub use lbfgs::{lbfgs_minimize, LbfgsOptions, LbfgsResult, Objective, Termination, TraceRecord};
pub use regularize::GradientPenalty;
pub use sigma::{
    frechet_h, frechet_h_at, reconstruct_sigma, ExcitationState, SigmaObjectiveState, SigmaProblem,
    SigmaReconstruction, SourceFn,
};

#[cfg(test)]
mod tests;
