//! Experiment configuration in TOML with built-in `desk` and `full` presets.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::coefficients::CoefficientSet;
use crate::error::{invalid, Error, Result};
use crate::grid::{AngularGrid, DomainKind, SpatialGrid};
use crate::phantom::Phantom;
use crate::reconstruct::{CgOptions, LbfgsOptions, SourceFn};
use crate::skeleton::{circle_points, LocalizedSource};
use crate::transport::{SolveMethod, SolverOptions};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    Desk,
    Full,
}

impl FromStr for Preset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "desk" => Ok(Preset::Desk),
            "full" => Ok(Preset::Full),
            other => Err(Error::Config(format!("unknown preset '{other}' (expected desk or full)"))),
        }
    }
}

/// Spatial lattice size and direction count.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub domain: DomainKind,
    /// Cells per side; the lattice has `n + 1` nodes per side.
    pub n: usize,
    pub directions: usize,
    /// Directions averaged over each angular cell when sampling boundary data.
    #[serde(default = "one")]
    pub entry_samples: usize,
}

fn one() -> usize {
    1
}

impl GridConfig {
    pub fn spatial(&self) -> Result<SpatialGrid> {
        SpatialGrid::new(self.domain, self.n + 1, self.n + 1)
    }

    pub fn angular(&self) -> Result<AngularGrid> {
        AngularGrid::new(self.directions)
    }

    pub fn new(domain: DomainKind, n: usize, directions: usize) -> Self {
        Self { domain, n, directions, entry_samples: 1 }
    }

    pub fn with_entry_samples(mut self, samples: usize) -> Self {
        self.entry_samples = samples;
        self
    }

    /// Phase-space unknowns, counting lattice nodes times directions.
    pub fn unknowns(&self) -> usize {
        (self.n + 1) * (self.n + 1) * self.directions
    }
}

/// One phantom per optical channel.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientConfig {
    pub sigma_xa: Phantom,
    pub sigma_xs: Phantom,
    pub sigma_xf: Phantom,
    pub sigma_ma: Phantom,
    pub sigma_ms: Phantom,
    pub eta: Phantom,
}

impl CoefficientConfig {
    pub fn sample(&self, grid: &SpatialGrid) -> CoefficientSet {
        CoefficientSet {
            sigma_xa: self.sigma_xa.sample(grid),
            sigma_xs: self.sigma_xs.sample(grid),
            sigma_xf: self.sigma_xf.sample(grid),
            sigma_ma: self.sigma_ma.sample(grid),
            sigma_ms: self.sigma_ms.sample(grid),
            eta: self.eta.sample(grid),
        }
    }
}

/// Boundary illumination.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SourceSpec {
    Constant {
        value: f64,
    },
    /// `A sin^2(f pi x) + A sin^2(f pi y)`
    Sinusoidal {
        amplitude: f64,
        frequency: f64,
    },
    /// Equally spaced spots of radius `h` on the unit circle.
    Spots {
        count: usize,
        h: f64,
        #[serde(default)]
        offset: f64,
    },
}

impl SourceSpec {
    pub fn function(&self) -> Result<SourceFn> {
        Ok(match *self {
            SourceSpec::Constant { value } => Arc::new(move |_| value),
            SourceSpec::Sinusoidal { amplitude, frequency } => Arc::new(move |p| {
                amplitude * ((frequency * PI * p[0]).sin().powi(2) + (frequency * PI * p[1]).sin().powi(2))
            }),
            SourceSpec::Spots { .. } => {
                let s = self.spots()?;
                Arc::new(move |p| s.value(p))
            }
        })
    }

    pub fn spots(&self) -> Result<LocalizedSource> {
        match *self {
            SourceSpec::Spots { count, h, offset } => LocalizedSource::new(&circle_points(count, offset), h),
            _ => Err(Error::Config("source is not a spot illumination".into())),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    /// Multiplicative noise levels; each runs the inversion once.
    pub levels: Vec<f64>,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialGuess {
    Zero,
    Constant {
        value: f64,
    },
    /// Independent uniform values in `[lo, hi]` per node.
    Random {
        lo: f64,
        hi: f64,
        seed: u64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SigmaStageConfig {
    pub beta: f64,
    pub initial: InitialGuess,
    pub lower: f64,
    pub upper: f64,
    pub lbfgs: LbfgsOptions,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EtaStageConfig {
    pub beta: f64,
    pub lower: f64,
    pub upper: f64,
    pub cg: CgOptions,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SkeletonConfig {
    pub vertices: usize,
    pub offset: f64,
    /// Spot radii of the refinement study.
    pub refinement: Vec<f64>,
    /// Tube radius of the pruned graph.
    pub theta: f64,
    /// Recovered points lie at least this far from the boundary.
    pub interior: f64,
    /// Reference points lie in `[reference_lo, reference_hi)` from the boundary.
    pub reference_lo: f64,
    pub reference_hi: f64,
    /// Spacing of recovery samples along each chord.
    pub step: f64,
    /// Dense samples per spot arc.
    pub arc_samples: usize,
    /// Packing distance and sample count for the covering check.
    pub covering_delta: f64,
    pub covering_samples: usize,
}

/// Complete description of one experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    /// Inversion grid.
    pub grid: GridConfig,
    /// Grid for synthetic data; must be strictly finer than `grid`.
    pub data_grid: GridConfig,
    pub anisotropy: f64,
    pub coefficients: CoefficientConfig,
    pub source: SourceSpec,
    /// Boundary data `h` of the auxiliary emission problem.
    pub emission_source: SourceSpec,
    pub noise: NoiseConfig,
    pub solver: SolverOptions,
    pub sigma: SigmaStageConfig,
    pub eta: EtaStageConfig,
    pub skeleton: SkeletonConfig,
    pub output: PathBuf,
}

fn affine(a: f64, b: f64, c: f64) -> Phantom {
    Phantom::affine(a, b, c)
}

fn skeleton_defaults() -> SkeletonConfig {
    SkeletonConfig {
        vertices: 6,
        offset: 0.1,
        refinement: vec![1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0],
        theta: 0.125,
        interior: 0.3,
        reference_lo: 0.1,
        reference_hi: 0.3,
        step: 0.05,
        arc_samples: 64,
        covering_delta: 0.2,
        covering_samples: 10_000,
    }
}

impl ExperimentConfig {
    /// Coefficients, source and settings of the fluorescence reconstruction
    /// example with Shepp-Logan `sigma_xf` and Derenzo `eta`.
    pub fn example2(preset: Preset) -> Self {
        let (grid, data_grid) = preset_grids(preset, DomainKind::UnitSquare);
        Self {
            name: "example2".into(),
            grid,
            data_grid,
            anisotropy: 0.5,
            coefficients: CoefficientConfig {
                sigma_xa: affine(0.2, 0.0, 0.2),
                sigma_xs: affine(0.2, 0.2, 0.0),
                sigma_xf: Phantom::SheppLoganModified { lo: 0.1, hi: 0.5 },
                sigma_ma: affine(0.4, 0.0, 0.2),
                sigma_ms: affine(2.0, 0.2, 0.0),
                eta: Phantom::Derenzo { background: 0.2, insert: 0.6, radii: None },
            },
            source: SourceSpec::Sinusoidal { amplitude: 5.0, frequency: 4.0 },
            emission_source: SourceSpec::Constant { value: 1.0 },
            noise: NoiseConfig { levels: vec![0.01, 0.05], seed: 20_200_101 },
            solver: SolverOptions { tol: 1e-8, max_iter: 500, method: SolveMethod::Gmres, restart: 30 },
            sigma: SigmaStageConfig {
                beta: 1e-3,
                initial: InitialGuess::Random { lo: 0.1, hi: 0.5, seed: 7 },
                lower: 1e-6,
                upper: 10.0,
                lbfgs: LbfgsOptions { max_iter: 150, grad_tol: 1e-10, ..LbfgsOptions::default() },
            },
            eta: EtaStageConfig { beta: 1e-8, lower: 0.0, upper: 0.999, cg: CgOptions { tol: 1e-6, max_iter: 60 } },
            skeleton: skeleton_defaults(),
            output: PathBuf::from("out/example2"),
        }
    }

    /// Strong-scattering medium where `H` does not determine `sigma_xf`.
    pub fn example1(preset: Preset) -> Self {
        let mut c = Self::example2(preset);
        let (grid, data_grid) = match preset {
            Preset::Desk => (
                GridConfig::new(DomainKind::UnitSquare, 32, 16).with_entry_samples(16),
                GridConfig::new(DomainKind::UnitSquare, 64, 32).with_entry_samples(16),
            ),
            Preset::Full => preset_grids(preset, DomainKind::UnitSquare),
        };
        c.name = "example1".into();
        c.grid = grid;
        c.data_grid = data_grid;
        c.coefficients.sigma_xs = affine(10.0, 0.2, 0.0);
        c.coefficients.sigma_xa = affine(0.2, 0.0, 0.2);
        c.coefficients.sigma_xf = affine(0.5, 0.5, 0.0);
        c.source = SourceSpec::Constant { value: 1.0 };
        c.noise.levels = vec![0.0];
        c.sigma.beta = 0.0;
        c.sigma.initial = InitialGuess::Zero;
        c.sigma.lbfgs = LbfgsOptions { max_iter: 100, grad_tol: 1e-9, f_tol: 1e-10, ..LbfgsOptions::default() };
        c.output = PathBuf::from("out/example1");
        c
    }

    /// Homogeneous disk with six boundary spots.
    pub fn skeleton_demo(preset: Preset) -> Self {
        let mut c = Self::example2(preset);
        let n = match preset {
            Preset::Desk => 64,
            Preset::Full => 128,
        };
        c.name = "skeleton-demo".into();
        c.grid = GridConfig::new(DomainKind::UnitDisk, n, 32).with_entry_samples(16);
        c.data_grid = GridConfig::new(DomainKind::UnitDisk, 2 * n, 64).with_entry_samples(16);
        c.anisotropy = 0.0;
        c.coefficients.sigma_xa = Phantom::Constant { value: 0.2 };
        c.coefficients.sigma_xs = Phantom::Constant { value: 0.2 };
        c.coefficients.sigma_xf = Phantom::Constant { value: 0.5 };
        c.source = SourceSpec::Spots { count: 6, h: 1.0 / 32.0, offset: 0.1 };
        c.solver = SolverOptions::default();
        c.output = PathBuf::from("out/skeleton-demo");
        c
    }

    pub fn for_experiment(name: &str, preset: Preset) -> Result<Self> {
        match name {
            "example1" => Ok(Self::example1(preset)),
            "example2" => Ok(Self::example2(preset)),
            "skeleton-demo" => Ok(Self::skeleton_demo(preset)),
            other => Err(Error::Config(format!("unknown experiment '{other}'"))),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Overlays the keys present in `text` onto `self`.
    pub fn merged(&self, text: &str) -> Result<Self> {
        let overlay: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        let mut base = toml::Table::try_from(self).map_err(|e| Error::Config(e.to_string()))?;
        merge(&mut base, overlay);
        let cfg: Self = base.try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn merged_file(&self, path: &Path) -> Result<Self> {
        self.merged(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        for g in [&self.grid, &self.data_grid] {
            g.spatial()?;
            g.angular()?;
            if g.entry_samples == 0 {
                return Err(invalid("grid entry_samples must be at least 1"));
            }
        }
        if self.data_grid.domain != self.grid.domain {
            return Err(Error::Config("data and inversion grids must share the domain".into()));
        }
        let finer = self.data_grid.n > self.grid.n && self.data_grid.directions >= self.grid.directions;
        if !finer {
            return Err(Error::Config(format!(
                "data grid {}x{}x{} (cells x directions) must be strictly finer than inversion grid {}x{}x{}",
                self.data_grid.n,
                self.data_grid.n,
                self.data_grid.directions,
                self.grid.n,
                self.grid.n,
                self.grid.directions
            )));
        }
        if !(self.anisotropy.abs() < 1.0) {
            return Err(invalid(format!("anisotropy must satisfy |g| < 1, got {}", self.anisotropy)));
        }
        if self.noise.levels.iter().any(|t| !(*t >= 0.0 && *t < 1.0)) {
            return Err(invalid("noise levels must lie in [0, 1)"));
        }
        if !(self.sigma.beta >= 0.0 && self.eta.beta >= 0.0) {
            return Err(invalid("regularization weights must be nonnegative"));
        }
        if !(self.sigma.lower <= self.sigma.upper && self.eta.lower <= self.eta.upper) {
            return Err(invalid("bounds must satisfy lower <= upper"));
        }
        Ok(())
    }
}

fn preset_grids(preset: Preset, domain: DomainKind) -> (GridConfig, GridConfig) {
    match preset {
        Preset::Desk => (
            GridConfig::new(domain, 64, 32).with_entry_samples(16),
            GridConfig::new(domain, 128, 64).with_entry_samples(16),
        ),
        Preset::Full => (
            GridConfig::new(domain, 128, 36).with_entry_samples(16),
            GridConfig::new(domain, 256, 72).with_entry_samples(16),
        ),
    }
}

fn merge(base: &mut toml::Table, overlay: toml::Table) {
    for (k, v) in overlay {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) if !o.contains_key("kind") => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate_and_roundtrip() {
        for p in [Preset::Desk, Preset::Full] {
            for name in ["example1", "example2", "skeleton-demo"] {
                let c = ExperimentConfig::for_experiment(name, p).unwrap();
                c.validate().unwrap();
                let back = ExperimentConfig::from_toml(&c.to_toml().unwrap()).unwrap();
                assert_eq!(back, c);
            }
        }
        assert_eq!(ExperimentConfig::example2(Preset::Full).grid.unknowns(), 129 * 129 * 36);
    }

    #[test]
    fn overlay_replaces_nested_keys() {
        let c = ExperimentConfig::example2(Preset::Desk)
            .merged("anisotropy = 0.3\n[grid]\nn = 40\n[source]\nkind = \"constant\"\nvalue = 2.0\n")
            .unwrap();
        assert_eq!(c.grid.n, 40);
        assert_eq!(c.grid.directions, 32);
        assert_eq!(c.anisotropy, 0.3);
        assert_eq!(c.source, SourceSpec::Constant { value: 2.0 });
    }

    #[test]
    fn inverse_crime_is_rejected() {
        let e = ExperimentConfig::example2(Preset::Desk).merged("[data_grid]\nn = 64\n").unwrap_err();
        assert_eq!(e.kind(), "config");
        assert!(ExperimentConfig::example2(Preset::Desk).merged("bogus = 1\n").is_err());
    }
}
