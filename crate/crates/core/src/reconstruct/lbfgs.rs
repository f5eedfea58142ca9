//! Projected limited-memory BFGS for box-constrained minimization.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Objective with gradient.
pub trait Objective {
    fn evaluate(&mut self, x: &[f64]) -> Result<(f64, Vec<f64>)>;
}

impl<F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>> Objective for F {
    fn evaluate(&mut self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        self(x)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LbfgsOptions {
    pub memory: usize,
    pub max_iter: usize,
    /// Stop when the sup-norm of the projected gradient falls below this.
    pub grad_tol: f64,
    /// Stop when an accepted step lowers the objective by less than
    /// `f_tol * |f|`; zero disables the test.
    pub f_tol: f64,
    /// Armijo sufficient-decrease constant.
    pub armijo: f64,
    pub max_backtracks: usize,
    /// Length (sup-norm) of the very first step before any curvature pair exists.
    pub first_step: f64,
}

impl Default for LbfgsOptions {
    fn default() -> Self {
        Self {
            memory: 10,
            max_iter: 200,
            grad_tol: 1e-8,
            f_tol: 0.0,
            armijo: 1e-4,
            max_backtracks: 40,
            first_step: 1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    GradientTolerance,
    ObjectiveStagnation,
    MaxIterations,
    LineSearchFailure,
}

/// One accepted iteration.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct TraceRecord {
    pub iteration: usize,
    pub objective: f64,
    pub grad_norm: f64,
    pub step: f64,
    pub evaluations: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct LbfgsResult {
    pub x: Vec<f64>,
    pub objective: f64,
    pub termination: Termination,
    pub trace: Vec<TraceRecord>,
    pub evaluations: usize,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn projected_gradient_norm(x: &[f64], g: &[f64], lo: &[f64], hi: &[f64]) -> f64 {
    x.iter()
        .zip(g)
        .zip(lo.iter().zip(hi))
        .map(|((xi, gi), (l, h))| ((xi - gi).clamp(*l, *h) - xi).abs())
        .fold(0.0, f64::max)
}

/// Minimizes `f` over the box `[lo, hi]` starting from `x0` (clamped into the box).
pub fn lbfgs_minimize<O: Objective>(
    f: &mut O,
    x0: &[f64],
    lo: &[f64],
    hi: &[f64],
    opts: &LbfgsOptions,
) -> Result<LbfgsResult> {
    let n = x0.len();
    if lo.len() != n || hi.len() != n {
        return Err(invalid("box bounds must match the unknown count"));
    }
    if lo.iter().zip(hi).any(|(l, h)| !(l <= h)) {
        return Err(invalid("box lower bound exceeds upper bound"));
    }
    if opts.memory == 0 {
        return Err(invalid("L-BFGS memory must be positive"));
    }
    let project = |x: &mut [f64]| {
        for ((xi, l), h) in x.iter_mut().zip(lo).zip(hi) {
            *xi = xi.clamp(*l, *h);
        }
    };
    let mut x = x0.to_vec();
    project(&mut x);
    let (mut fx, mut g) = f.evaluate(&x)?;
    let mut evaluations = 1;
    let mut trace = vec![TraceRecord {
        iteration: 0,
        objective: fx,
        grad_norm: projected_gradient_norm(&x, &g, lo, hi),
        step: 0.0,
        evaluations,
    }];
    let mut mem: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let mut termination = Termination::MaxIterations;

    for iter in 1..=opts.max_iter {
        if trace.last().unwrap().grad_norm <= opts.grad_tol {
            termination = Termination::GradientTolerance;
            break;
        }
        // Variables held at a bound by the gradient stay fixed this iteration.
        let free: Vec<bool> =
            (0..n).map(|i| !((x[i] <= lo[i] && g[i] > 0.0) || (x[i] >= hi[i] && g[i] < 0.0))).collect();
        let mut d: Vec<f64> = g.iter().zip(&free).map(|(gi, &fr)| if fr { -gi } else { 0.0 }).collect();
        if mem.is_empty() {
            let gmax = d.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            if gmax > 0.0 {
                d.iter_mut().for_each(|v| *v *= opts.first_step / gmax);
            }
        } else {
            let mut alpha = Vec::with_capacity(mem.len());
            for (s, y, rho) in mem.iter().rev() {
                let a = rho * dot(s, &d);
                for (di, yi) in d.iter_mut().zip(y) {
                    *di -= a * yi;
                }
                alpha.push(a);
            }
            let (s, y, _) = mem.back().unwrap();
            let gamma = dot(s, y) / dot(y, y);
            d.iter_mut().for_each(|v| *v *= gamma);
            for ((s, y, rho), a) in mem.iter().zip(alpha.iter().rev()) {
                let b = rho * dot(y, &d);
                for (di, si) in d.iter_mut().zip(s) {
                    *di += (a - b) * si;
                }
            }
            for (di, &fr) in d.iter_mut().zip(&free) {
                if !fr {
                    *di = 0.0;
                }
            }
            if dot(&d, &g) >= 0.0 {
                mem.clear();
                let gmax = g.iter().zip(&free).fold(0.0f64, |a, (v, &fr)| if fr { a.max(v.abs()) } else { a });
                d = g.iter().zip(&free).map(|(gi, &fr)| if fr { -gi * opts.first_step / gmax } else { 0.0 }).collect();
            }
        }

        // Backtracking Armijo search along the projected path.
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..=opts.max_backtracks {
            let mut xn: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi + step * di).collect();
            project(&mut xn);
            let dx: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
            let decrease = dot(&g, &dx);
            if decrease >= 0.0 {
                step *= 0.5;
                continue;
            }
            let (fn_, gn) = f.evaluate(&xn)?;
            evaluations += 1;
            if fn_.is_finite() && fn_ <= fx + opts.armijo * decrease {
                accepted = Some((xn, fn_, gn, dx));
                break;
            }
            step *= 0.5;
        }
        let Some((xn, fn_, gn, s)) = accepted else {
            termination = Termination::LineSearchFailure;
            break;
        };
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() && sy > 0.0 {
            if mem.len() == opts.memory {
                mem.pop_front();
            }
            mem.push_back((s, y, 1.0 / sy));
        }
        let drop = fx - fn_;
        x = xn;
        fx = fn_;
        g = gn;
        trace.push(TraceRecord {
            iteration: iter,
            objective: fx,
            grad_norm: projected_gradient_norm(&x, &g, lo, hi),
            step,
            evaluations,
        });
        if opts.f_tol > 0.0 && drop <= opts.f_tol * fx.abs().max(f64::MIN_POSITIVE) {
            termination = Termination::ObjectiveStagnation;
            break;
        }
        if iter == opts.max_iter && trace.last().unwrap().grad_norm <= opts.grad_tol {
            termination = Termination::GradientTolerance;
        }
    }
    Ok(LbfgsResult { x, objective: fx, termination, trace, evaluations })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_bowl() {
        let target = [0.3, -0.7, 1.2, 0.05];
        let mut f = |x: &[f64]| -> Result<(f64, Vec<f64>)> {
            let g: Vec<f64> = x.iter().zip(&target).map(|(a, b)| a - b).collect();
            Ok((0.5 * dot(&g, &g), g))
        };
        let lo = [-5.0; 4];
        let hi = [5.0; 4];
        let r = lbfgs_minimize(&mut f, &[0.0; 4], &lo, &hi, &LbfgsOptions::default()).unwrap();
        assert!(r.trace.len() <= 26);
        for (a, b) in r.x.iter().zip(&target) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn rosenbrock() {
        let mut f = |x: &[f64]| -> Result<(f64, Vec<f64>)> {
            let (a, b) = (x[0], x[1]);
            let v = (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2);
            let g = vec![-2.0 * (1.0 - a) - 400.0 * a * (b - a * a), 200.0 * (b - a * a)];
            Ok((v, g))
        };
        let opts = LbfgsOptions { max_iter: 500, grad_tol: 1e-10, ..Default::default() };
        let r = lbfgs_minimize(&mut f, &[-1.2, 1.0], &[-10.0; 2], &[10.0; 2], &opts).unwrap();
        assert!((r.x[0] - 1.0).abs() < 1e-6 && (r.x[1] - 1.0).abs() < 1e-6, "{:?}", r.x);
        for w in r.trace.windows(2) {
            assert!(w[1].objective <= w[0].objective);
        }
    }

    #[test]
    fn minimizer_outside_box_lands_on_face() {
        let mut f = |x: &[f64]| -> Result<(f64, Vec<f64>)> {
            let g = vec![x[0] - 3.0, x[1] - 0.5];
            Ok((0.5 * dot(&g, &g), g))
        };
        let r = lbfgs_minimize(&mut f, &[0.0, 0.0], &[-1.0, -1.0], &[1.0, 1.0], &LbfgsOptions::default()).unwrap();
        assert!((r.x[0] - 1.0).abs() < 1e-12);
        assert!((r.x[1] - 0.5).abs() < 1e-8);
        assert_eq!(r.termination, Termination::GradientTolerance);
    }
}
