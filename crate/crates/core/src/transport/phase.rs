use std::f64::consts::PI;

use crate::error::{invalid, Result};
use crate::grid::AngularGrid;

/// Henyey-Greenstein density on the circle, normalized to integrate to one.
pub fn hg_density(g: f64, cos_theta: f64) -> f64 {
    (1.0 - g * g) / (2.0 * PI * (1.0 + g * g - 2.0 * g * cos_theta))
}

/// Discrete scattering kernel `p_{kk'}` on a uniform angular grid.
///
/// The kernel depends only on the index difference, so it is circulant and
/// symmetric; rows are rescaled so that `sum_k' p_{kk'} w = 1` holds exactly
/// up to rounding.
#[derive(Clone, Debug)]
pub struct PhaseFunction {
    g: f64,
    m: usize,
    weight: f64,
    /// `p(k - k' mod M)`.
    profile: Vec<f64>,
    /// Dense row-major `M x M` matrix of `p_{kk'} w`.
    weighted: Vec<f64>,
    isotropic: bool,
}

impl PhaseFunction {
    pub fn henyey_greenstein(g: f64, angular: &AngularGrid) -> Result<Self> {
        if !(g.abs() < 1.0) {
            return Err(invalid(format!("anisotropy must satisfy |g| < 1, got {g}")));
        }
        let m = angular.len();
        let w = angular.weight();
        let mut profile: Vec<f64> = (0..m)
            .map(|d| {
                let d = d.min(m - d);
                hg_density(g, (2.0 * PI * d as f64 / m as f64).cos())
            })
            .collect();
        let total: f64 = profile.iter().sum::<f64>() * w;
        for p in &mut profile {
            *p /= total;
        }
        let mut weighted = vec![0.0; m * m];
        for k in 0..m {
            for kp in 0..m {
                let d = (k + m - kp) % m;
                weighted[k * m + kp] = profile[d] * w;
            }
        }
        Ok(Self { g, m, weight: w, profile, weighted, isotropic: g == 0.0 })
    }

    pub fn isotropic(angular: &AngularGrid) -> Self {
        Self::henyey_greenstein(0.0, angular).expect("g = 0 is always valid")
    }

    pub fn anisotropy(&self) -> f64 {
        self.g
    }

    pub fn num_directions(&self) -> usize {
        self.m
    }

    /// Kernel value `p_{kk'}` (without the quadrature weight).
    pub fn value(&self, k: usize, kp: usize) -> f64 {
        self.profile[(k + self.m - kp) % self.m]
    }

    /// Kernel as a function of the index offset `k - k' mod M`.
    pub fn profile(&self) -> &[f64] {
        &self.profile
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    /// Applies `K` to a direction-major field with `n` nodes per direction.
    pub fn scatter_into(&self, input: &[f64], n: usize, out: &mut [f64]) {
        use rayon::prelude::*;
        let m = self.m;
        debug_assert_eq!(input.len(), n * m);
        if self.isotropic {
            let mean = self.angular_sum(input, n);
            let c = self.profile[0] * self.weight;
            out.par_chunks_mut(n).for_each(|row| {
                for (o, s) in row.iter_mut().zip(&mean) {
                    *o = c * s;
                }
            });
            return;
        }
        out.par_chunks_mut(n).enumerate().for_each(|(k, row)| {
            row.iter_mut().for_each(|o| *o = 0.0);
            let coeffs = &self.weighted[k * m..(k + 1) * m];
            for (kp, &c) in coeffs.iter().enumerate() {
                let src = &input[kp * n..(kp + 1) * n];
                for (o, s) in row.iter_mut().zip(src) {
                    *o += c * s;
                }
            }
        });
    }

    /// `sum_k f(., v_k)` with the direction index ascending.
    fn angular_sum(&self, input: &[f64], n: usize) -> Vec<f64> {
        let mut acc = vec![0.0; n];
        for k in 0..self.m {
            for (a, s) in acc.iter_mut().zip(&input[k * n..(k + 1) * n]) {
                *a += s;
            }
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn isotropic_kernel_is_flat() {
        let a = AngularGrid::new(16).unwrap();
        let p = PhaseFunction::isotropic(&a);
        for k in 0..16 {
            for kp in 0..16 {
                assert_abs_diff_eq!(p.value(k, kp), 1.0 / (2.0 * PI), epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn rows_are_normalized_and_symmetric() {
        for g in [-0.9, -0.3, 0.5, 0.95] {
            let a = AngularGrid::new(24).unwrap();
            let p = PhaseFunction::henyey_greenstein(g, &a).unwrap();
            for k in 0..24 {
                let s: f64 = (0..24).map(|kp| p.value(k, kp) * a.weight()).sum();
                assert_abs_diff_eq!(s, 1.0, epsilon = 1e-12);
                for kp in 0..24 {
                    assert_eq!(p.value(k, kp), p.value(kp, k));
                    assert!(p.value(k, kp) > 0.0);
                }
            }
        }
    }

    #[test]
    fn forward_peak_matches_continuum() {
        let a = AngularGrid::new(64).unwrap();
        let p = PhaseFunction::henyey_greenstein(0.5, &a).unwrap();
        assert_abs_diff_eq!(p.value(3, 3), 3.0 / (2.0 * PI), epsilon = 1e-9);
    }

    #[test]
    fn rejects_out_of_range_anisotropy() {
        let a = AngularGrid::new(8).unwrap();
        assert!(PhaseFunction::henyey_greenstein(1.0, &a).is_err());
        assert!(PhaseFunction::henyey_greenstein(-1.2, &a).is_err());
        assert!(PhaseFunction::henyey_greenstein(f64::NAN, &a).is_err());
    }
}
