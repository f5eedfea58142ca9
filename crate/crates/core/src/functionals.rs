//! Internal functionals of the transport solutions: the angular correlator
//! `psi`, the excitation datum `H`, the emission datum `S`, boundary
//! currents, and the auxiliary solutions entering `S`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::coefficients::CoefficientSet;
use crate::error::{Error, Result};
use crate::grid::{AngularGrid, SpatialGrid};
use crate::transport::{
    Boundary, PhaseFunction, PhaseSpace, PhaseSpaceField, RteSystem, SolveReport, SolverOptions, TransportOperator,
};

/// `sum_k a(x, v_k) b(x, -v_k) w`.
pub fn antipodal_correlator(a: &PhaseSpaceField, b: &PhaseSpaceField, angular: &AngularGrid) -> Vec<f64> {
    let mut out = vec![0.0; a.num_nodes()];
    for k in 0..angular.len() {
        let km = angular.antipode(k);
        for ((o, x), y) in out.iter_mut().zip(a.direction(k)).zip(b.direction(km)) {
            *o += x * y;
        }
    }
    out.iter_mut().for_each(|o| *o *= angular.weight());
    out
}

/// `sum_k a(x, v_k) b(x, v_k) w`.
pub fn aligned_correlator(a: &PhaseSpaceField, b: &PhaseSpaceField, angular: &AngularGrid) -> Vec<f64> {
    let mut out = vec![0.0; a.num_nodes()];
    for k in 0..angular.len() {
        for ((o, x), y) in out.iter_mut().zip(a.direction(k)).zip(b.direction(k)) {
            *o += x * y;
        }
    }
    out.iter_mut().for_each(|o| *o *= angular.weight());
    out
}

/// `psi(x) = int u(x, v) u(x, -v) dv`.
pub fn correlator_psi(u: &PhaseSpaceField, angular: &AngularGrid) -> Vec<f64> {
    antipodal_correlator(u, u, angular)
}

/// Part of `psi` that the ballistic field varies within one angular cell,
/// `w sum_k C_k A_k A_{-k}` for the entry covariance `C` and ballistic factors `A`.
pub fn ballistic_psi_correction(op: &TransportOperator, covariance: &[f64]) -> Vec<f64> {
    let space = op.space();
    let ang = space.angular();
    let n = space.num_nodes();
    let a = op.ballistic_factors();
    let mut out = vec![0.0; n];
    for k in 0..space.num_dirs() {
        let km = ang.antipode(k);
        for (i, o) in out.iter_mut().enumerate() {
            *o += covariance[k * n + i] * a[k * n + i] * a[km * n + i];
        }
    }
    out.iter_mut().for_each(|o| *o *= ang.weight());
    out
}

/// `H = -sigma_{x,tf} psi + sigma_{x,s} int (K u)(x, v) u(x, -v) dv`, given `ku = K u`.
pub fn internal_h(
    u: &PhaseSpaceField,
    ku: &PhaseSpaceField,
    coeffs: &CoefficientSet,
    angular: &AngularGrid,
) -> Vec<f64> {
    internal_h_with_psi(&correlator_psi(u, angular), u, ku, coeffs, angular)
}

/// As [`internal_h`] with `psi` supplied.
pub fn internal_h_with_psi(
    psi: &[f64],
    u: &PhaseSpaceField,
    ku: &PhaseSpaceField,
    coeffs: &CoefficientSet,
    angular: &AngularGrid,
) -> Vec<f64> {
    let kcorr = antipodal_correlator(ku, u, angular);
    let stf = coeffs.sigma_xtf();
    (0..psi.len()).map(|i| -stf[i] * psi[i] + coeffs.sigma_xs[i] * kcorr[i]).collect()
}

/// Fields entering the emission datum `S`.
pub struct EmissionFields<'a> {
    pub u: &'a PhaseSpaceField,
    pub ku: &'a PhaseSpaceField,
    pub w: &'a PhaseSpaceField,
    pub kw: &'a PhaseSpaceField,
    pub aux: &'a PhaseSpaceField,
    pub phi: &'a PhaseSpaceField,
}

/// Five-term emission datum
/// `S = -(sigma_{m,a}+sigma_{m,s}) int w W + sigma_{m,s} int (K w) W
///      + eta sigma_{x,f} (I u)(I W) - sigma_{x,tf} int u phi + sigma_{x,s} int (K u) phi`.
pub fn internal_s(f: &EmissionFields, coeffs: &CoefficientSet, angular: &AngularGrid) -> Vec<f64> {
    let wa = aligned_correlator(f.w, f.aux, angular);
    let kwa = aligned_correlator(f.kw, f.aux, angular);
    let uphi = aligned_correlator(f.u, f.phi, angular);
    let kuphi = aligned_correlator(f.ku, f.phi, angular);
    let iu = f.u.angular_integral(angular.weight());
    let ia = f.aux.angular_integral(angular.weight());
    let stf = coeffs.sigma_xtf();
    (0..wa.len())
        .map(|i| {
            -(coeffs.sigma_ma[i] + coeffs.sigma_ms[i]) * wa[i]
                + coeffs.sigma_ms[i] * kwa[i]
                + coeffs.eta[i] * coeffs.sigma_xf[i] * iu[i] * ia[i]
                - stf[i] * uphi[i]
                + coeffs.sigma_xs[i] * kuphi[i]
        })
        .collect()
}

/// Outgoing current `int f(x, v) v . n(x) dv` at every boundary node, in the
/// order of [`SpatialGrid::boundary_nodes`].
pub fn boundary_current(f: &PhaseSpaceField, grid: &SpatialGrid, angular: &AngularGrid) -> Vec<f64> {
    grid.boundary_nodes()
        .iter()
        .map(|&b| {
            let n = grid.normal(b).expect("boundary nodes carry normals");
            (0..angular.len())
                .map(|k| {
                    let v = angular.direction(k);
                    f.get(b, k) * (v[0] * n[0] + v[1] * n[1])
                })
                .sum::<f64>()
                * angular.weight()
        })
        .collect()
}

/// Multiplicative uniform noise `f (1 + level xi)`, `xi ~ U[-1, 1]` i.i.d.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub level: f64,
    pub seed: u64,
}

pub fn add_noise(field: &[f64], spec: &NoiseSpec) -> Result<Vec<f64>> {
    if !(0.0..1.0).contains(&spec.level) {
        return Err(Error::InvalidParameter(format!("noise level must lie in [0, 1), got {}", spec.level)));
    }
    if spec.level == 0.0 {
        return Ok(field.to_vec());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    Ok(field.iter().map(|v| v * (1.0 + spec.level * rng.gen_range(-1.0..=1.0))).collect())
}

/// Nodal internal data and boundary currents.
#[derive(Clone, Debug, Serialize)]
pub struct InternalData {
    pub h: Vec<f64>,
    pub s: Vec<f64>,
    pub psi: Vec<f64>,
    pub current_u: Vec<f64>,
    pub current_w: Vec<f64>,
}

/// Every phase-space solution behind one set of internal data.
#[derive(Clone, Debug)]
pub struct ForwardSolution {
    pub u: PhaseSpaceField,
    pub w: PhaseSpaceField,
    pub aux: PhaseSpaceField,
    pub phi: PhaseSpaceField,
    pub data: InternalData,
    pub reports: Vec<(&'static str, SolveReport)>,
}

/// Coefficients, kernel and solver settings on one phase space.
#[derive(Clone, Debug)]
pub struct ForwardModel {
    pub space: PhaseSpace,
    pub coeffs: CoefficientSet,
    pub phase: PhaseFunction,
    pub solver: SolverOptions,
}

impl ForwardModel {
    pub fn new(space: PhaseSpace, coeffs: CoefficientSet, phase: PhaseFunction, solver: SolverOptions) -> Result<Self> {
        coeffs.check_shape(space.num_nodes())?;
        if phase.num_directions() != space.num_dirs() {
            return Err(Error::ShapeMismatch("phase function and angular grid disagree".into()));
        }
        Ok(Self { space, coeffs, phase, solver })
    }

    /// Excitation problem: attenuation `sigma_{x,tf}`, scattering `sigma_{x,s}`.
    pub fn excitation(&self) -> Result<RteSystem> {
        RteSystem::new(&self.space, &self.coeffs.sigma_xtf(), &self.coeffs.sigma_xs, self.phase.clone())
    }

    /// Emission problem: attenuation `sigma_{m,a} + sigma_{m,s}`, scattering `sigma_{m,s}`.
    pub fn emission(&self) -> Result<RteSystem> {
        RteSystem::new(&self.space, &self.coeffs.sigma_mt(), &self.coeffs.sigma_ms, self.phase.clone())
    }

    /// Excitation field `u` for boundary illumination `g`.
    pub fn solve_u(&self, excitation: &RteSystem, g: Boundary) -> Result<(PhaseSpaceField, SolveReport)> {
        excitation.solve_forward(Some(g), None, &self.solver)
    }

    /// Emission field `w` with zero inflow and source `eta sigma_{x,f} I u`.
    pub fn solve_w(&self, emission: &RteSystem, u: &PhaseSpaceField) -> Result<(PhaseSpaceField, SolveReport)> {
        let q = self.fluorescence_source(u)?;
        emission.solve_forward(None, Some(&q), &self.solver)
    }

    /// Auxiliary emission-wavelength field with data `h` on the outgoing boundary.
    pub fn solve_aux(&self, emission: &RteSystem, h: Boundary) -> Result<(PhaseSpaceField, SolveReport)> {
        let grid = self.space.grid();
        if let Some(&b) = grid.boundary_nodes().iter().find(|&&b| !(h(grid.position(b)) > 0.0)) {
            let p = grid.position(b);
            return Err(Error::InvalidParameter(format!(
                "auxiliary boundary data must be strictly positive, got {} at ({}, {})",
                h(p),
                p[0],
                p[1]
            )));
        }
        emission.solve_reversed(Some(h), None, &self.solver)
    }

    /// Reversed-direction excitation field with source `eta sigma_{x,f} I W`.
    pub fn solve_phi(&self, excitation: &RteSystem, aux: &PhaseSpaceField) -> Result<(PhaseSpaceField, SolveReport)> {
        let q = self.fluorescence_source(aux)?;
        excitation.solve_reversed(None, Some(&q), &self.solver)
    }

    /// Isotropic source `eta sigma_{x,f} int f dv`.
    pub fn fluorescence_source(&self, f: &PhaseSpaceField) -> Result<PhaseSpaceField> {
        let i = f.angular_integral(self.space.angular().weight());
        let nodal: Vec<f64> = (0..i.len()).map(|n| self.coeffs.eta[n] * self.coeffs.sigma_xf[n] * i[n]).collect();
        PhaseSpaceField::isotropic(&self.space, &nodal)
    }

    /// Solves every problem and assembles `H`, `S`, `psi` and the currents.
    pub fn internal_data(&self, g: Boundary, h: Boundary) -> Result<ForwardSolution> {
        let ex = self.excitation()?;
        let em = self.emission()?;
        let (u, ru) = self.solve_u(&ex, g)?;
        let (w, rw) = self.solve_w(&em, &u)?;
        let (aux, ra) = self.solve_aux(&em, h)?;
        let (phi, rp) = self.solve_phi(&ex, &aux)?;
        let ang = self.space.angular();
        let ku = ex.scatter(&u);
        let kw = em.scatter(&w);
        let mut psi = correlator_psi(&u, ang);
        if self.space.entry_samples() > 1 {
            let cov = ex.operator().entry_covariance(g);
            for (p, c) in psi.iter_mut().zip(ballistic_psi_correction(ex.operator(), &cov)) {
                *p += c;
            }
        }
        let hdat = internal_h_with_psi(&psi, &u, &ku, &self.coeffs, ang);
        let fields = EmissionFields { u: &u, ku: &ku, w: &w, kw: &kw, aux: &aux, phi: &phi };
        let s = internal_s(&fields, &self.coeffs, ang);
        let data = InternalData {
            h: hdat,
            s,
            psi,
            current_u: boundary_current(&u, self.space.grid(), ang),
            current_w: boundary_current(&w, self.space.grid(), ang),
        };
        Ok(ForwardSolution { u, w, aux, phi, data, reports: vec![("u", ru), ("w", rw), ("aux", ra), ("phi", rp)] })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{AngularGrid, DomainKind, SpatialGrid};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn space(n: usize, m: usize) -> PhaseSpace {
        PhaseSpace::new(SpatialGrid::new(DomainKind::UnitSquare, n, n).unwrap(), AngularGrid::new(m).unwrap())
    }

    #[test]
    fn psi_of_constant_field() {
        let sp = space(5, 8);
        let u = PhaseSpaceField::from_fn(&sp, |_, _| 3.0);
        for v in correlator_psi(&u, sp.angular()) {
            assert_abs_diff_eq!(v, 2.0 * PI * 9.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn psi_vanishes_without_antipodal_mass() {
        let sp = space(5, 8);
        let u = PhaseSpaceField::from_fn(&sp, |_, k| if k == 2 { 1.0 } else { 0.0 });
        assert!(correlator_psi(&u, sp.angular()).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn constant_field_h_cancels_scattering() {
        let sp = space(5, 8);
        let n = sp.num_nodes();
        let c = CoefficientSet::uniform(n, 0.2, 0.7, 0.5, 0.4, 2.0, 0.3);
        let phase = PhaseFunction::henyey_greenstein(0.5, sp.angular()).unwrap();
        let sys = RteSystem::new(&sp, &c.sigma_xtf(), &c.sigma_xs, phase).unwrap();
        let u = PhaseSpaceField::from_fn(&sp, |_, _| 2.0);
        let h = internal_h(&u, &sys.scatter(&u), &c, sp.angular());
        for v in h {
            assert_abs_diff_eq!(v, -(0.2 + 0.5) * 2.0 * PI * 4.0, epsilon = 1e-11);
        }
    }

    #[test]
    fn isotropic_current_vanishes() {
        let sp = space(7, 16);
        let f = PhaseSpaceField::from_fn(&sp, |i, _| 1.0 + i as f64);
        for c in boundary_current(&f, sp.grid(), sp.angular()) {
            assert_abs_diff_eq!(c, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn noise_is_seeded_and_bounded() {
        let data: Vec<f64> = (1..=1000).map(|i| i as f64).collect();
        let spec = NoiseSpec { level: 0.05, seed: 42 };
        let a = add_noise(&data, &spec).unwrap();
        let b = add_noise(&data, &spec).unwrap();
        assert_eq!(a, b);
        for (x, y) in data.iter().zip(&a) {
            assert!((y / x - 1.0).abs() <= 0.05 + 1e-15);
        }
        assert_eq!(add_noise(&data, &NoiseSpec { level: 0.0, seed: 1 }).unwrap(), data);
        assert!(add_noise(&data, &NoiseSpec { level: 1.0, seed: 1 }).is_err());
    }
}
