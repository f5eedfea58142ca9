use std::sync::Arc;

use approx::assert_abs_diff_eq;

use super::*;
use crate::coefficients::CoefficientSet;
use crate::functionals::ForwardModel;
use crate::grid::{AngularGrid, DomainKind, SpatialGrid};
use crate::transport::{PhaseFunction, PhaseSpace, SolverOptions};

fn model(kind: DomainKind, n: usize, m: usize, g: f64) -> ForwardModel {
    sampled_model(kind, n, m, g, 1)
}

fn sampled_model(kind: DomainKind, n: usize, m: usize, g: f64, samples: usize) -> ForwardModel {
    let grid = SpatialGrid::new(kind, n, n).unwrap();
    let ang = AngularGrid::new(m).unwrap();
    let phase = PhaseFunction::henyey_greenstein(g, &ang).unwrap();
    let space = PhaseSpace::new(grid, ang).with_entry_samples(samples).unwrap();
    let grid = space.grid().clone();
    let coeffs = CoefficientSet::from_fns(
        &grid,
        [
            &|p| 0.2 + 0.1 * p[0],
            &|p| 1.0 + 0.5 * p[1],
            &|p| 0.3 + 0.2 * (3.0 * p[0]).sin() * p[1],
            &|_| 0.2,
            &|p| 0.8 + 0.2 * p[0] * p[1],
            &|p| 0.4 + 0.1 * p[0],
        ],
    );
    ForwardModel::new(space, coeffs, phase, SolverOptions::default().with_tol(1e-13)).unwrap()
}

fn source() -> SourceFn {
    Arc::new(|p: crate::grid::Point| 1.0 + 0.5 * p[0] + 0.25 * p[1] * p[1])
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn wavy() -> SourceFn {
    Arc::new(|p: crate::grid::Point| 2.0 + (9.0 * p[0]).sin() * (7.0 * p[1]).cos())
}

fn sigma_problem(kind: DomainKind) -> (SigmaProblem, Vec<f64>) {
    sigma_problem_with(kind, 1, source())
}

fn sigma_problem_with(kind: DomainKind, samples: usize, src: SourceFn) -> (SigmaProblem, Vec<f64>) {
    let m = sampled_model(kind, 9, 8, 0.5, samples);
    let truth = m.coeffs.sigma_xf.clone();
    let probe = SigmaProblem::new(m.clone(), src.clone(), vec![0.0; truth.len()], 0.0).unwrap();
    let h_star = probe.forward(&truth).unwrap().h;
    let start: Vec<f64> = truth.iter().enumerate().map(|(i, s)| s + 0.05 * ((i as f64) * 0.7).cos()).collect();
    (SigmaProblem::new(m, src, h_star, 1e-3).unwrap(), start)
}

fn setups() -> Vec<(SigmaProblem, Vec<f64>)> {
    vec![
        sigma_problem(DomainKind::UnitSquare),
        sigma_problem(DomainKind::UnitDisk),
        sigma_problem_with(DomainKind::UnitSquare, 5, wavy()),
        sigma_problem_with(DomainKind::UnitDisk, 5, wavy()),
    ]
}

#[test]
fn gradient_matches_finite_differences() {
    for (case, (p, x)) in setups().into_iter().enumerate() {
        let st = p.evaluate(&x).unwrap();
        let d: Vec<f64> = (0..x.len()).map(|i| ((i * 37 % 11) as f64 / 11.0) - 0.4).collect();
        let eps = 1e-5;
        let plus: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + eps * b).collect();
        let minus: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a - eps * b).collect();
        let fd = (p.objective(&plus).unwrap() - p.objective(&minus).unwrap()) / (2.0 * eps);
        let an = dot(&st.gradient, &d);
        assert!((fd - an).abs() <= 1e-6 * an.abs().max(1e-8), "case {case}: fd {fd} analytic {an}");
    }
}

#[test]
fn frechet_remainder_is_quadratic() {
    for (p, x) in setups() {
        frechet_slope(&p, &x);
    }
}

fn frechet_slope(p: &SigmaProblem, x: &[f64]) {
    let n = x.len();
    let d: Vec<f64> = (0..n).map(|i| (i as f64 * 0.3).sin()).collect();
    let st = p.forward(&x).unwrap();
    let lin = frechet_h_at(p, &st, &d).unwrap();
    let rem = |e: f64| {
        let xe: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + e * b).collect();
        let he = p.forward(&xe).unwrap().h;
        (0..n).map(|i| (he[i] - st.h[i] - e * lin[i]).abs()).fold(0.0, f64::max)
    };
    let (r1, r2) = (rem(1e-2), rem(5e-3));
    let slope = (r1 / r2).log2();
    assert!((slope - 2.0).abs() < 0.2, "slope {slope}");
}

fn eta_problem() -> EtaProblem {
    let m = model(DomainKind::UnitSquare, 9, 8, 0.3);
    EtaProblem::new(m, source(), Arc::new(|p: crate::grid::Point| 1.0 + 0.3 * p[1])).unwrap()
}

#[test]
fn eta_map_reproduces_forward_datum() {
    let p = eta_problem();
    let m = p.model();
    let g = source();
    let h = |q: crate::grid::Point| 1.0 + 0.3 * q[1];
    let sol = m.internal_data(&*g, &h).unwrap();
    let s = p.apply(&m.coeffs.eta).unwrap();
    for (a, b) in s.iter().zip(&sol.data.s) {
        assert_abs_diff_eq!(a, b, epsilon = 1e-10 * b.abs().max(1.0));
    }
}

#[test]
fn eta_map_is_linear_and_transpose_is_exact() {
    let p = eta_problem();
    let n = p.model().space.num_nodes();
    let a: Vec<f64> = (0..n).map(|i| (i as f64 * 0.9).cos()).collect();
    let b: Vec<f64> = (0..n).map(|i| (i as f64 * 0.4).sin()).collect();
    let sa = p.apply(&a).unwrap();
    let sb = p.apply(&b).unwrap();
    let mix: Vec<f64> = a.iter().zip(&b).map(|(x, y)| 2.0 * x - 3.0 * y).collect();
    let smix = p.apply(&mix).unwrap();
    for i in 0..n {
        assert_abs_diff_eq!(smix[i], 2.0 * sa[i] - 3.0 * sb[i], epsilon = 1e-10);
    }
    let tb = p.apply_transpose(&b).unwrap();
    let lhs = dot(&sa, &b);
    let rhs = dot(&a, &tb);
    assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs().max(1.0), "{lhs} vs {rhs}");
}

#[test]
fn eta_recovered_from_clean_datum() {
    let p = eta_problem();
    let truth = p.model().coeffs.eta.clone();
    let s = p.apply(&truth).unwrap();
    let opts = CgOptions { tol: 1e-12, max_iter: 400 };
    let r = reconstruct_eta(&p, &s, 0.0, 0.0, 1.0, &opts).unwrap();
    let grid = p.model().space.grid();
    let err: f64 =
        (0..truth.len()).filter(|&i| grid.is_physical(i)).map(|i| (r.eta[i] - truth[i]).abs()).fold(0.0, f64::max);
    assert!(err < 1e-4, "max error {err}");
}

#[test]
fn sigma_descent_reduces_objective() {
    let (p, x) = sigma_problem(DomainKind::UnitSquare);
    let j0 = p.objective(&x).unwrap();
    let opts = LbfgsOptions { max_iter: 15, ..LbfgsOptions::default() };
    let r = reconstruct_sigma(&p, &x, 1e-6, 10.0, &opts).unwrap();
    assert!(r.optimizer.objective < 0.1 * j0);
}

#[test]
fn psi_correction_vanishes_for_constant_illumination() {
    let src: SourceFn = Arc::new(|_| 1.5);
    let (a, x) = sigma_problem_with(DomainKind::UnitSquare, 1, src.clone());
    let (b, _) = sigma_problem_with(DomainKind::UnitSquare, 6, src);
    let (ha, hb) = (a.forward(&x).unwrap().h, b.forward(&x).unwrap().h);
    for (p, q) in ha.iter().zip(&hb) {
        assert_abs_diff_eq!(p, q, epsilon = 1e-12);
    }
}
