//! Experiment drivers: synthetic data on a fine grid, inversion on a coarse
//! one, and the spot-illumination skeleton demonstration.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{ExperimentConfig, GridConfig, InitialGuess};
use crate::error::{Error, Result};
use crate::functionals::{add_noise, ForwardModel, ForwardSolution, NoiseSpec};
use crate::grid::{NodeKind, Point, SpatialGrid};
use crate::io::{write_field, write_json, FieldFile, Manifest};
use crate::reconstruct::{
    check_linearized_conditions, reconstruct_eta, reconstruct_sigma, ConditionReport, EtaProblem, SigmaProblem,
    Termination,
};
use crate::skeleton::{
    boundary_packing, build_skeleton, covering_check, point_segment_distance, recover_sigma_skeleton, CoveringReport,
    LocalizedSource, RecoveryOptions, RecoveryZones, SkeletonGraph, SkeletonRecovery, SpotField,
};
use crate::transport::{PhaseFunction, PhaseSpace, SolveReport};

/// Forward model with the configured coefficients on `grid`.
pub fn build_model(cfg: &ExperimentConfig, grid: &GridConfig) -> Result<ForwardModel> {
    let angular = grid.angular()?;
    let phase = PhaseFunction::henyey_greenstein(cfg.anisotropy, &angular)?;
    let space = PhaseSpace::new(grid.spatial()?, angular).with_entry_samples(grid.entry_samples)?;
    let coeffs = cfg.coefficients.sample(space.grid());
    ForwardModel::new(space, coeffs, phase, cfg.solver)
}

/// Bilinear transfer of a nodal field from `fine` to the nodes of `coarse`.
pub fn transfer(fine: &SpatialGrid, coarse: &SpatialGrid, f: &[f64]) -> Vec<f64> {
    (0..coarse.num_nodes())
        .map(|i| {
            let p = if coarse.node_kind(i) == NodeKind::Ghost { coarse.ray_origin(i) } else { coarse.position(i) };
            fine.interpolate(f, p)
        })
        .collect()
}

/// Relative `L^2` distance `|a - b| / |b|` over the physical domain.
pub fn relative_l2(grid: &SpatialGrid, a: &[f64], b: &[f64]) -> f64 {
    let diff: Vec<f64> = (0..grid.num_nodes()).map(|i| if grid.is_physical(i) { a[i] - b[i] } else { 0.0 }).collect();
    let base: Vec<f64> = (0..grid.num_nodes()).map(|i| if grid.is_physical(i) { b[i] } else { 0.0 }).collect();
    grid.l2_norm(&diff) / grid.l2_norm(&base)
}

#[derive(Clone, Debug, Serialize)]
pub struct SolveSummary {
    pub field: &'static str,
    pub iterations: usize,
    pub residual: f64,
}

fn summaries(reports: &[(&'static str, SolveReport)]) -> Vec<SolveSummary> {
    reports.iter().map(|(f, r)| SolveSummary { field: f, iterations: r.iterations, residual: r.residual }).collect()
}

/// Noise-free internal data from the fine grid, moved to the inversion grid.
pub struct SyntheticData {
    pub model: ForwardModel,
    pub h: Vec<f64>,
    pub s: Vec<f64>,
    pub solves: Vec<SolveSummary>,
}

/// Generates data on `cfg.data_grid` and returns it on `cfg.grid` together
/// with the inversion-grid model.
pub fn synthesize(cfg: &ExperimentConfig) -> Result<SyntheticData> {
    cfg.validate()?;
    let g = cfg.source.function()?;
    let hsrc = cfg.emission_source.function()?;
    let fine = build_model(cfg, &cfg.data_grid)?;
    let model = build_model(cfg, &cfg.grid)?;
    if fine.space.shares_grid_with(&model.space) || fine.space.len() <= model.space.len() {
        return Err(Error::Config("synthetic data must come from a separate, finer grid".into()));
    }
    let sol = fine.internal_data(&*g, &*hsrc)?;
    let (fg, cg) = (fine.space.grid(), model.space.grid());
    Ok(SyntheticData {
        h: transfer(fg, cg, &sol.data.h),
        s: transfer(fg, cg, &sol.data.s),
        solves: summaries(&sol.reports),
        model,
    })
}

fn initial_guess(init: &InitialGuess, n: usize) -> Vec<f64> {
    match *init {
        InitialGuess::Zero => vec![0.0; n],
        InitialGuess::Constant { value } => vec![value; n],
        InitialGuess::Random { lo, hi, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..n).map(|_| rng.gen_range(lo..=hi)).collect()
        }
    }
}

fn noise_seed(base: u64, channel: u64, index: usize) -> u64 {
    base.wrapping_mul(1_000_003).wrapping_add(channel * 7919 + index as u64)
}

/// Output sink; does nothing without a directory.
pub struct Output {
    dir: Option<PathBuf>,
    files: Vec<String>,
}

impl Output {
    pub fn new(dir: Option<&Path>) -> Self {
        Self { dir: dir.map(Path::to_path_buf), files: Vec::new() }
    }

    pub fn field(&mut self, grid: &SpatialGrid, channel: &str, f: &[f64]) -> Result<()> {
        if let Some(d) = &self.dir {
            for p in write_field(d, grid, channel, f)? {
                self.files.push(p.display().to_string());
            }
        }
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        if let Some(d) = &self.dir {
            let p = d.join(name);
            write_json(&p, value)?;
            self.files.push(p.display().to_string());
        }
        Ok(())
    }

    pub fn text(&mut self, name: &str, text: &str) -> Result<()> {
        if let Some(d) = &self.dir {
            std::fs::create_dir_all(d)?;
            let p = d.join(name);
            std::fs::write(&p, text)?;
            self.files.push(p.display().to_string());
        }
        Ok(())
    }

    /// Writes `manifest.json` listing every file written so far.
    pub fn finish(mut self, command: &str, cfg: &ExperimentConfig, seeds: Vec<u64>) -> Result<()> {
        if self.dir.is_some() {
            let mut m = Manifest::new(command, cfg, seeds)?;
            self.text("config.toml", &cfg.to_toml()?)?;
            m.files = self.files.clone();
            self.json("manifest.json", &m)?;
        }
        Ok(())
    }
}

fn all_seeds(cfg: &ExperimentConfig) -> Vec<u64> {
    let mut seeds = vec![cfg.noise.seed];
    if let InitialGuess::Random { seed, .. } = cfg.sigma.initial {
        seeds.push(seed);
    }
    seeds
}

#[derive(Clone, Debug, Serialize)]
pub struct ForwardReport {
    pub grid: GridConfig,
    pub solves: Vec<SolveSummary>,
    pub h_range: (f64, f64),
    pub s_range: (f64, f64),
    pub current_u: Vec<f64>,
    pub current_w: Vec<f64>,
}

fn range(f: &[f64]) -> (f64, f64) {
    f.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)))
}

/// Solves every transport problem on the inversion grid and writes `H`, `S`, `psi`.
pub fn run_forward(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<(ForwardReport, ForwardSolution)> {
    cfg.validate()?;
    let model = build_model(cfg, &cfg.grid)?;
    let g = cfg.source.function()?;
    let h = cfg.emission_source.function()?;
    let sol = model.internal_data(&*g, &*h)?;
    let grid = model.space.grid();
    let mut o = Output::new(out);
    o.field(grid, "h", &sol.data.h)?;
    o.field(grid, "s", &sol.data.s)?;
    o.field(grid, "psi", &sol.data.psi)?;
    let report = ForwardReport {
        grid: cfg.grid,
        solves: summaries(&sol.reports),
        h_range: range(&sol.data.h),
        s_range: range(&sol.data.s),
        current_u: sol.data.current_u.clone(),
        current_w: sol.data.current_w.clone(),
    };
    o.json("report.json", &report)?;
    o.finish("forward", cfg, all_seeds(cfg))?;
    Ok((report, sol))
}

#[derive(Clone, Debug, Serialize)]
pub struct InternalDataReport {
    pub data_grid: GridConfig,
    pub grid: GridConfig,
    pub noise: f64,
    pub solves: Vec<SolveSummary>,
}

/// Fine-grid synthetic data on the inversion grid with the first noise level.
pub fn run_internal_data(
    cfg: &ExperimentConfig,
    out: Option<&Path>,
) -> Result<(InternalDataReport, Vec<f64>, Vec<f64>)> {
    let data = synthesize(cfg)?;
    let tau = cfg.noise.levels.first().copied().unwrap_or(0.0);
    let h = add_noise(&data.h, &NoiseSpec { level: tau, seed: noise_seed(cfg.noise.seed, 0, 0) })?;
    let s = add_noise(&data.s, &NoiseSpec { level: tau, seed: noise_seed(cfg.noise.seed, 1, 0) })?;
    let grid = data.model.space.grid();
    let mut o = Output::new(out);
    o.field(grid, "h_star", &h)?;
    o.field(grid, "s_star", &s)?;
    let report = InternalDataReport { data_grid: cfg.data_grid, grid: cfg.grid, noise: tau, solves: data.solves };
    o.json("report.json", &report)?;
    o.finish("internal-data", cfg, all_seeds(cfg))?;
    Ok((report, h, s))
}

#[derive(Clone, Debug, Serialize)]
pub struct SigmaStageReport {
    pub noise: f64,
    pub relative_error: f64,
    pub relative_data_misfit: f64,
    pub objective: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub termination: Termination,
}

#[derive(Clone, Debug, Serialize)]
pub struct EtaStageReport {
    pub noise: f64,
    pub relative_error: f64,
    pub cg_iterations: usize,
    pub converged: bool,
}

struct SigmaOutcome {
    report: SigmaStageReport,
    sigma: Vec<f64>,
}

fn sigma_stage(
    cfg: &ExperimentConfig,
    model: &ForwardModel,
    h_star: &[f64],
    h_clean: &[f64],
    tau: f64,
) -> Result<SigmaOutcome> {
    let g = cfg.source.function()?;
    let truth = model.coeffs.sigma_xf.clone();
    let problem = SigmaProblem::new(model.clone(), g, h_star.to_vec(), cfg.sigma.beta)?;
    let x0 = initial_guess(&cfg.sigma.initial, truth.len());
    let rec = reconstruct_sigma(&problem, &x0, cfg.sigma.lower, cfg.sigma.upper, &cfg.sigma.lbfgs)?;
    let grid = model.space.grid();
    let h_fit = problem.forward(&rec.sigma_xf)?.h;
    let opt = &rec.optimizer;
    Ok(SigmaOutcome {
        report: SigmaStageReport {
            noise: tau,
            relative_error: relative_l2(grid, &rec.sigma_xf, &truth),
            relative_data_misfit: relative_l2(grid, &h_fit, h_clean),
            objective: opt.objective,
            iterations: opt.trace.len().saturating_sub(1),
            evaluations: opt.evaluations,
            termination: opt.termination,
        },
        sigma: rec.sigma_xf,
    })
}

fn eta_stage(
    cfg: &ExperimentConfig,
    model: &ForwardModel,
    sigma: &[f64],
    s_star: &[f64],
    tau: f64,
) -> Result<(EtaStageReport, Vec<f64>)> {
    let truth = model.coeffs.eta.clone();
    let mut m = model.clone();
    m.coeffs = m.coeffs.with_sigma_xf(sigma.to_vec())?;
    let problem = EtaProblem::new(m, cfg.source.function()?, cfg.emission_source.function()?)?;
    let rec = reconstruct_eta(&problem, s_star, cfg.eta.beta, cfg.eta.lower, cfg.eta.upper, &cfg.eta.cg)?;
    let report = EtaStageReport {
        noise: tau,
        relative_error: relative_l2(model.space.grid(), &rec.eta, &truth),
        cg_iterations: rec.iterations,
        converged: rec.converged,
    };
    Ok((report, rec.eta))
}

#[derive(Clone, Debug, Serialize)]
pub struct Example1Report {
    pub sigma: SigmaStageReport,
    pub conditions: ConditionReport,
    pub solves: Vec<SolveSummary>,
}

/// Strong scattering: the fitted coefficient matches the data but not the truth.
pub fn run_example1(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<Example1Report> {
    let data = synthesize(cfg)?;
    let model = &data.model;
    let grid = model.space.grid();
    let conditions = conditions_for(cfg, model)?;
    let outcome = sigma_stage(cfg, model, &data.h, &data.h, 0.0)?;
    let mut o = Output::new(out);
    o.field(grid, "sigma_xf_reconstructed", &outcome.sigma)?;
    o.field(grid, "sigma_xf_true", &model.coeffs.sigma_xf)?;
    let problem = SigmaProblem::new(model.clone(), cfg.source.function()?, data.h.clone(), 0.0)?;
    let h_fit = problem.forward(&outcome.sigma)?.h;
    let log_diff: Vec<f64> = h_fit.iter().zip(&data.h).map(|(a, b)| ((a - b).abs() + 1e-300).log10()).collect();
    o.field(grid, "h_difference_log10", &log_diff)?;
    let report = Example1Report { sigma: outcome.report, conditions, solves: data.solves };
    o.json("report.json", &report)?;
    o.finish("example1", cfg, all_seeds(cfg))?;
    Ok(report)
}

#[derive(Clone, Debug, Serialize)]
pub struct Example2Report {
    pub sigma: Vec<SigmaStageReport>,
    pub eta: Vec<EtaStageReport>,
    pub solves: Vec<SolveSummary>,
}

/// Two-stage reconstruction at every configured noise level.
pub fn run_example2(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<Example2Report> {
    let data = synthesize(cfg)?;
    let model = &data.model;
    let grid = model.space.grid();
    let mut o = Output::new(out);
    o.field(grid, "sigma_xf_true", &model.coeffs.sigma_xf)?;
    o.field(grid, "eta_true", &model.coeffs.eta)?;
    let mut report = Example2Report { sigma: Vec::new(), eta: Vec::new(), solves: data.solves.clone() };
    for (li, &tau) in cfg.noise.levels.iter().enumerate() {
        let h = add_noise(&data.h, &NoiseSpec { level: tau, seed: noise_seed(cfg.noise.seed, 0, li) })?;
        let s = add_noise(&data.s, &NoiseSpec { level: tau, seed: noise_seed(cfg.noise.seed, 1, li) })?;
        let sig = sigma_stage(cfg, model, &h, &data.h, tau)?;
        let (eta_rep, eta) = eta_stage(cfg, model, &sig.sigma, &s, tau)?;
        let tag = format!("{:.0}pct", tau * 100.0);
        let sig_err: Vec<f64> = sig.sigma.iter().zip(&model.coeffs.sigma_xf).map(|(a, b)| a - b).collect();
        let eta_err: Vec<f64> = eta.iter().zip(&model.coeffs.eta).map(|(a, b)| a - b).collect();
        o.field(grid, &format!("sigma_xf_{tag}"), &sig.sigma)?;
        o.field(grid, &format!("sigma_xf_error_{tag}"), &sig_err)?;
        o.field(grid, &format!("eta_{tag}"), &eta)?;
        o.field(grid, &format!("eta_error_{tag}"), &eta_err)?;
        report.sigma.push(sig.report);
        report.eta.push(eta_rep);
    }
    o.json("report.json", &report)?;
    o.finish("example2", cfg, all_seeds(cfg))?;
    Ok(report)
}

/// `sigma_xf` recovery alone, at the first noise level.
pub fn run_reconstruct_sigma(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<SigmaStageReport> {
    let data = synthesize(cfg)?;
    let tau = cfg.noise.levels.first().copied().unwrap_or(0.0);
    let h = add_noise(&data.h, &NoiseSpec { level: tau, seed: noise_seed(cfg.noise.seed, 0, 0) })?;
    let outcome = sigma_stage(cfg, &data.model, &h, &data.h, tau)?;
    let mut o = Output::new(out);
    o.field(data.model.space.grid(), "sigma_xf", &outcome.sigma)?;
    o.json("report.json", &outcome.report)?;
    o.finish("reconstruct-sigma", cfg, all_seeds(cfg))?;
    Ok(outcome.report)
}

/// Nodal field restored from a lattice CSV on `grid`.
pub fn nodal_from_file(grid: &SpatialGrid, file: &FieldFile) -> Result<Vec<f64>> {
    let (nx, ny) = grid.lattice_dims();
    if file.nx != nx || file.ny != ny || file.domain != grid.kind() {
        return Err(Error::ShapeMismatch(format!(
            "field file is {}x{} on {}, grid is {nx}x{ny} on {}",
            file.nx,
            file.ny,
            file.domain.as_str(),
            grid.kind().as_str()
        )));
    }
    (0..grid.num_nodes())
        .map(|i| match grid.lattice_index(i) {
            Some((ix, iy)) if file.values[iy * nx + ix].is_finite() => Ok(file.values[iy * nx + ix]),
            _ => Err(Error::ShapeMismatch(format!("node {i} has no value in the field file"))),
        })
        .collect()
}

/// `eta` recovery alone. Uses `sigma` when given, the true `sigma_xf` otherwise.
pub fn run_reconstruct_eta(
    cfg: &ExperimentConfig,
    sigma: Option<Vec<f64>>,
    out: Option<&Path>,
) -> Result<EtaStageReport> {
    let data = synthesize(cfg)?;
    let tau = cfg.noise.levels.first().copied().unwrap_or(0.0);
    let s = add_noise(&data.s, &NoiseSpec { level: tau, seed: noise_seed(cfg.noise.seed, 1, 0) })?;
    let sigma = sigma.unwrap_or_else(|| data.model.coeffs.sigma_xf.clone());
    let (report, eta) = eta_stage(cfg, &data.model, &sigma, &s, tau)?;
    let mut o = Output::new(out);
    o.field(data.model.space.grid(), "eta", &eta)?;
    o.json("report.json", &report)?;
    o.finish("reconstruct-eta", cfg, all_seeds(cfg))?;
    Ok(report)
}

fn conditions_for(cfg: &ExperimentConfig, model: &ForwardModel) -> Result<ConditionReport> {
    let g = cfg.source.function()?;
    let grid = model.space.grid();
    let gb: Vec<f64> = grid.boundary_nodes().iter().map(|&b| g(grid.position(b))).collect();
    check_linearized_conditions(&model.coeffs, &gb, grid)
}

/// Uniqueness conditions of the linearized problem on the inversion grid.
pub fn run_check_conditions(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<ConditionReport> {
    cfg.validate()?;
    let model = build_model(cfg, &cfg.grid)?;
    let report = conditions_for(cfg, &model)?;
    let mut o = Output::new(out);
    o.json("report.json", &report)?;
    o.finish("check-conditions", cfg, all_seeds(cfg))?;
    Ok(report)
}

#[derive(Clone, Debug, Serialize)]
pub struct SkeletonRun {
    pub h: f64,
    pub samples: usize,
    pub skipped: usize,
    pub max_relative_error: f64,
    pub mean_relative_error: f64,
    pub collided_iterations: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct SkeletonReport {
    pub truth: f64,
    pub vertices: usize,
    pub theta: f64,
    /// Median `psi` on chords over median `psi` away from every chord.
    pub ridge_ratio: f64,
    pub headline: SkeletonRun,
    pub refinement: Vec<SkeletonRun>,
    pub covering: CoveringReport,
    pub covering_vertices: usize,
    pub covering_theta: f64,
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

fn skeleton_run(
    model: &ForwardModel,
    graph: &SkeletonGraph,
    source: &LocalizedSource,
    cfg: &ExperimentConfig,
) -> Result<(SkeletonRun, SkeletonRecovery)> {
    let sk = &cfg.skeleton;
    let field = SpotField::solve(model, source, sk.arc_samples)?;
    let grid = model.space.grid();
    let truth = model.coeffs.sigma_xtf();
    let h_data = |p| field.correlators(p).h;
    let known = |p| grid.interpolate(&truth, p);
    let zones = RecoveryZones { interior: sk.interior, reference: (sk.reference_lo, sk.reference_hi) };
    let rec = recover_sigma_skeleton(&h_data, graph, source, &known, zones, RecoveryOptions { step: sk.step })?;
    let errs: Vec<f64> = rec
        .samples
        .iter()
        .map(|s| {
            let t = grid.interpolate(&truth, s.point);
            (s.recovered - t).abs() / t
        })
        .collect();
    let run = SkeletonRun {
        h: source.h,
        samples: rec.samples.len(),
        skipped: rec.skipped.len(),
        max_relative_error: errs.iter().copied().fold(0.0, f64::max),
        mean_relative_error: errs.iter().sum::<f64>() / errs.len().max(1) as f64,
        collided_iterations: field.report.iterations,
    };
    Ok((run, rec))
}

/// Median `psi` at chord midpoints against the median at nodes farther than
/// `margin` from every chord of the complete graph.
fn ridge_ratio(field: &SpotField, grid: &SpatialGrid, verts: &[Point], margin: f64) -> f64 {
    let mut on = Vec::new();
    for a in 0..verts.len() {
        for b in a + 1..verts.len() {
            let (p, q) = (verts[a], verts[b]);
            for t in [0.3, 0.4, 0.5, 0.6, 0.7] {
                on.push(field.correlators([p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]).psi);
            }
        }
    }
    let off: Vec<f64> = (0..grid.num_nodes())
        .filter(|&i| grid.is_physical(i))
        .map(|i| grid.position(i))
        .filter(|&x| {
            grid.distance_to_boundary(x) > margin
                && (0..verts.len())
                    .all(|a| (a + 1..verts.len()).all(|b| point_segment_distance(x, verts[a], verts[b]) > margin))
        })
        .map(|x| field.correlators(x).psi)
        .collect();
    median(on) / median(off)
}

/// Spot illumination on the disk: correlator fields, recovery of
/// `sigma_tf` on the skeleton over the configured spot radii, and the
/// covering check.
pub fn run_skeleton_demo(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<SkeletonReport> {
    cfg.validate()?;
    let sk = &cfg.skeleton;
    let model = build_model(cfg, &cfg.grid)?;
    let grid = model.space.grid();
    let source = cfg.source.spots()?;
    let verts = source.centers.clone();
    let graph = build_skeleton(&verts, sk.theta)?;
    let truth = model.coeffs.sigma_xtf();
    let truth_mean = grid.integrate(&truth) / grid.integrate(&vec![1.0; truth.len()]);

    let mut o = Output::new(out);
    let field = SpotField::solve(&model, &source, sk.arc_samples)?;
    let nodal = field.nodal_correlators();
    o.field(grid, "psi", &nodal.iter().map(|c| c.psi).collect::<Vec<_>>())?;
    o.field(grid, "chi", &nodal.iter().map(|c| c.chi).collect::<Vec<_>>())?;
    o.field(grid, "h", &nodal.iter().map(|c| c.h).collect::<Vec<_>>())?;
    let ridge = ridge_ratio(&field, grid, &verts, 0.1);
    drop(field);

    let (headline, rec) = skeleton_run(&model, &graph, &source, cfg)?;
    o.json("skeleton.json", &graph)?;
    o.json("recovery.json", &rec)?;
    let mut refinement = Vec::new();
    for &h in &sk.refinement {
        let src = LocalizedSource::new(&verts, h)?;
        refinement.push(skeleton_run(&model, &graph, &src, cfg)?.0);
    }

    let packing = boundary_packing(sk.covering_delta)?;
    let n = packing.len() as f64;
    let covering_theta = sk.covering_delta.powi(2) / (4.0 * n * n);
    let cover_graph = build_skeleton(&packing, covering_theta)?;
    let covering = covering_check(&cover_graph, sk.covering_delta, sk.interior, sk.covering_samples, cfg.noise.seed);

    let report = SkeletonReport {
        truth: truth_mean,
        vertices: verts.len(),
        theta: sk.theta,
        ridge_ratio: ridge,
        headline,
        refinement,
        covering,
        covering_vertices: packing.len(),
        covering_theta,
    };
    o.json("report.json", &report)?;
    o.finish("skeleton-demo", cfg, vec![cfg.noise.seed])?;
    Ok(report)
}

/// Dispatches a named experiment and returns its report as JSON.
pub fn run_named(name: &str, cfg: &ExperimentConfig, out: Option<&Path>) -> Result<serde_json::Value> {
    let v = match name {
        "example1" => serde_json::to_value(run_example1(cfg, out)?),
        "example2" => serde_json::to_value(run_example2(cfg, out)?),
        "skeleton-demo" => serde_json::to_value(run_skeleton_demo(cfg, out)?),
        "check-conditions" => serde_json::to_value(run_check_conditions(cfg, out)?),
        other => return Err(Error::Config(format!("unknown experiment `{other}`"))),
    };
    v.map_err(|e| Error::Parse(e.to_string()))
}
