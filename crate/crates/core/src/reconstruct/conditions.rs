//! Sufficient conditions for uniqueness of the linearized problem.

use serde::Serialize;

use crate::coefficients::CoefficientSet;
use crate::error::{Error, Result};
use crate::grid::SpatialGrid;

#[derive(Clone, Debug, Serialize)]
pub struct ConditionCheck {
    pub name: &'static str,
    pub pass: bool,
    /// Positive when satisfied; distance to the threshold.
    pub margin: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConditionReport {
    /// Domain diameter.
    pub ell: f64,
    /// Smallest `gamma` with `exp(ell sup sigma_{x,tf}) <= 1 + gamma`.
    pub gamma: f64,
    /// `sup sigma_{x,s} / sigma_{x,tf}`.
    pub scattering_ratio: f64,
    /// `sup g / inf g` over the boundary.
    pub mu: f64,
    /// Largest admissible `delta` given `gamma` and `mu` (capped at 1).
    pub delta_max: f64,
    /// `(1 + delta)(1 + 2 mu^2 (1 + gamma)^2)` at `delta = scattering_ratio`.
    pub coupling_lhs: f64,
    /// `(1 + 2 gamma) / gamma`.
    pub coupling_rhs: f64,
    pub checks: Vec<ConditionCheck>,
    pub pass: bool,
}

/// Evaluates the optical-thinness, weak-scattering and coupling conditions for
/// coefficients on `grid` and boundary illumination values `g_boundary`.
pub fn check_linearized_conditions(
    coeffs: &CoefficientSet,
    g_boundary: &[f64],
    grid: &SpatialGrid,
) -> Result<ConditionReport> {
    coeffs.check_shape(grid.num_nodes())?;
    if g_boundary.is_empty() || g_boundary.iter().any(|g| !(*g > 0.0) || !g.is_finite()) {
        return Err(Error::InvalidParameter("boundary source must be positive and bounded".into()));
    }
    let stf = coeffs.sigma_xtf();
    let nodes: Vec<usize> = (0..grid.num_nodes()).filter(|&i| grid.is_physical(i)).collect();
    let sup_tf = nodes.iter().map(|&i| stf[i]).fold(f64::NEG_INFINITY, f64::max);
    let ratio = nodes.iter().map(|&i| coeffs.sigma_xs[i] / stf[i]).fold(f64::NEG_INFINITY, f64::max);
    let gmax = g_boundary.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let gmin = g_boundary.iter().copied().fold(f64::INFINITY, f64::min);
    let mu = gmax / gmin;
    let ell = grid.diameter();
    let gamma = (ell * sup_tf).exp_m1();
    let factor = 1.0 + 2.0 * mu * mu * (1.0 + gamma).powi(2);
    let coupling_rhs = (1.0 + 2.0 * gamma) / gamma;
    let delta_max = (coupling_rhs / factor - 1.0).min(1.0);
    let coupling_lhs = (1.0 + ratio) * factor;
    let checks = vec![
        ConditionCheck { name: "optically-thin", pass: gamma < 1.0, margin: 1.0 - gamma },
        ConditionCheck { name: "weak-scattering", pass: ratio < delta_max, margin: delta_max - ratio },
        ConditionCheck { name: "coupling", pass: coupling_lhs < coupling_rhs, margin: coupling_rhs - coupling_lhs },
    ];
    let pass = checks.iter().all(|c| c.pass);
    Ok(ConditionReport { ell, gamma, scattering_ratio: ratio, mu, delta_max, coupling_lhs, coupling_rhs, checks, pass })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn thin_medium_passes() {
        let grid = SpatialGrid::unit_square(9, 9).unwrap();
        let n = grid.num_nodes();
        // sigma_tf = 0.04 with sigma_s / sigma_tf = 0.01.
        let c = CoefficientSet::uniform(n, 0.0196, 0.0004, 0.02, 0.4, 2.0, 0.3);
        let r = check_linearized_conditions(&c, &[1.0; 8], &grid).unwrap();
        assert_abs_diff_eq!(r.gamma, 0.0582, epsilon = 5e-5);
        assert_abs_diff_eq!(r.coupling_lhs, 3.273, epsilon = 2e-3);
        assert_abs_diff_eq!(r.coupling_rhs, 19.18, epsilon = 2e-2);
        assert!(r.pass);
    }

    #[test]
    fn large_contrast_source_fails() {
        let grid = SpatialGrid::unit_square(9, 9).unwrap();
        let c = CoefficientSet::uniform(grid.num_nodes(), 0.0196, 0.0004, 0.02, 0.4, 2.0, 0.3);
        let r = check_linearized_conditions(&c, &[1.0, 5.0], &grid).unwrap();
        assert!(!r.pass);
        assert!(r.checks[2].margin < 0.0);
    }
}
