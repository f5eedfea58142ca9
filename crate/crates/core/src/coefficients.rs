//! Nodal optical coefficients at the excitation (`x`) and emission (`m`)
//! wavelengths together with their admissibility box.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Point, SpatialGrid};

/// Bounds defining the admissible coefficient set:
/// `c1 <= sigma_{x,a}, sigma_{x,s}, sigma_{m,a}, sigma_{m,s} <= c2`,
/// `c3 <= sigma_{x,f} <= c4` and `c5 <= eta <= c6 < 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdmissibleBounds {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub c5: f64,
    pub c6: f64,
}

impl Default for AdmissibleBounds {
    fn default() -> Self {
        Self { c1: 1e-6, c2: 1e3, c3: 1e-6, c4: 10.0, c5: 0.0, c6: 0.999 }
    }
}

/// Per-node coefficient fields.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientSet {
    pub sigma_xa: Vec<f64>,
    pub sigma_xs: Vec<f64>,
    pub sigma_xf: Vec<f64>,
    pub sigma_ma: Vec<f64>,
    pub sigma_ms: Vec<f64>,
    pub eta: Vec<f64>,
}

fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

impl CoefficientSet {
    /// Spatially constant coefficients.
    pub fn uniform(n: usize, xa: f64, xs: f64, xf: f64, ma: f64, ms: f64, eta: f64) -> Self {
        Self {
            sigma_xa: vec![xa; n],
            sigma_xs: vec![xs; n],
            sigma_xf: vec![xf; n],
            sigma_ma: vec![ma; n],
            sigma_ms: vec![ms; n],
            eta: vec![eta; n],
        }
    }

    /// Samples six coefficient functions on the grid.
    pub fn from_fns(grid: &SpatialGrid, f: [&dyn Fn(Point) -> f64; 6]) -> Self {
        Self {
            sigma_xa: grid.sample(f[0]),
            sigma_xs: grid.sample(f[1]),
            sigma_xf: grid.sample(f[2]),
            sigma_ma: grid.sample(f[3]),
            sigma_ms: grid.sample(f[4]),
            eta: grid.sample(f[5]),
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.sigma_xa.len()
    }

    /// `sigma_{x,t} = sigma_{x,a} + sigma_{x,s}`.
    pub fn sigma_xt(&self) -> Vec<f64> {
        add(&self.sigma_xa, &self.sigma_xs)
    }

    /// `sigma_{x,tf} = sigma_{x,t} + sigma_{x,f}`.
    pub fn sigma_xtf(&self) -> Vec<f64> {
        self.sigma_xa.iter().zip(&self.sigma_xs).zip(&self.sigma_xf).map(|((a, s), f)| a + s + f).collect()
    }

    /// Total attenuation at the emission wavelength, `sigma_{m,a} + sigma_{m,s}`.
    pub fn sigma_mt(&self) -> Vec<f64> {
        add(&self.sigma_ma, &self.sigma_ms)
    }

    pub fn with_sigma_xf(&self, sigma_xf: Vec<f64>) -> Result<Self> {
        if sigma_xf.len() != self.num_nodes() {
            return Err(Error::ShapeMismatch("sigma_xf length differs from node count".into()));
        }
        Ok(Self { sigma_xf, ..self.clone() })
    }

    pub fn with_eta(&self, eta: Vec<f64>) -> Result<Self> {
        if eta.len() != self.num_nodes() {
            return Err(Error::ShapeMismatch("eta length differs from node count".into()));
        }
        Ok(Self { eta, ..self.clone() })
    }

    fn channels(&self) -> [(&'static str, &Vec<f64>); 6] {
        [
            ("sigma_xa", &self.sigma_xa),
            ("sigma_xs", &self.sigma_xs),
            ("sigma_xf", &self.sigma_xf),
            ("sigma_ma", &self.sigma_ma),
            ("sigma_ms", &self.sigma_ms),
            ("eta", &self.eta),
        ]
    }

    /// Checks lengths and finiteness.
    pub fn check_shape(&self, n: usize) -> Result<()> {
        for (name, c) in self.channels() {
            if c.len() != n {
                return Err(Error::ShapeMismatch(format!("{name} has {} values, expected {n}", c.len())));
            }
            if c.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} contains non-finite values")));
            }
        }
        Ok(())
    }

    /// Checks membership in the admissible set.
    pub fn validate(&self, b: &AdmissibleBounds) -> Result<()> {
        self.check_shape(self.num_nodes())?;
        let check = |name: &str, v: &[f64], lo: f64, hi: f64| -> Result<()> {
            match v.iter().find(|x| !(**x >= lo && **x <= hi)) {
                Some(x) => {
                    Err(Error::InvalidParameter(format!("{name} value {x} outside admissible range [{lo}, {hi}]")))
                }
                None => Ok(()),
            }
        };
        for (name, v) in [
            ("sigma_xa", &self.sigma_xa),
            ("sigma_xs", &self.sigma_xs),
            ("sigma_ma", &self.sigma_ma),
            ("sigma_ms", &self.sigma_ms),
        ] {
            check(name, v, b.c1, b.c2)?;
        }
        check("sigma_xf", &self.sigma_xf, b.c3, b.c4)?;
        check("eta", &self.eta, b.c5, b.c6)?;
        if b.c6 >= 1.0 {
            return Err(Error::InvalidParameter("quantum efficiency bound c6 must be below 1".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::SpatialGrid;

    #[test]
    fn totals_add_up() {
        let c = CoefficientSet::uniform(4, 0.2, 0.3, 0.5, 0.4, 2.0, 0.1);
        assert!(c.sigma_xtf().iter().all(|v| (v - 1.0).abs() < 1e-15));
        assert!(c.sigma_xt().iter().all(|v| (v - 0.5).abs() < 1e-15));
        assert!(c.sigma_mt().iter().all(|v| (v - 2.4).abs() < 1e-15));
    }

    #[test]
    fn admissibility_is_enforced() {
        let g = SpatialGrid::unit_square(5, 5).unwrap();
        let c = CoefficientSet::from_fns(
            &g,
            [&|p| 0.2 + 0.2 * p[1], &|p| 0.2 + 0.2 * p[0], &|_| 0.5, &|_| 0.4, &|_| 2.0, &|_| 0.3],
        );
        assert!(c.validate(&AdmissibleBounds::default()).is_ok());
        let bad = c.with_eta(vec![1.0; 25]).unwrap();
        assert!(bad.validate(&AdmissibleBounds::default()).is_err());
        let zero = CoefficientSet::uniform(25, 0.0, 0.2, 0.5, 0.4, 2.0, 0.3);
        assert!(zero.validate(&AdmissibleBounds::default()).is_err());
    }
}
