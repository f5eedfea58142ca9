use super::*;
use crate::grid::{DomainKind, Point, SpatialGrid};
use approx::assert_abs_diff_eq;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn space(kind: DomainKind, n: usize, m: usize) -> PhaseSpace {
    PhaseSpace::new(SpatialGrid::new(kind, n, n).unwrap(), AngularGrid::new(m).unwrap())
}

fn random_nodal(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(lo..hi)).collect()
}

fn random_field(rng: &mut ChaCha8Rng, sp: &PhaseSpace) -> PhaseSpaceField {
    PhaseSpaceField::from_fn(sp, |_, _| rng.gen_range(-1.0..1.0))
}

#[test]
fn vacuum_ballistic_is_one() {
    let sp = space(DomainKind::UnitSquare, 9, 8);
    let op = TransportOperator::new(&sp, &vec![0.0; sp.num_nodes()]).unwrap();
    let b = op.ballistic(&|_| 1.0);
    assert!(b.as_slice().iter().all(|&v| v == 1.0));
}

#[test]
fn entry_averaging_keeps_constants_and_smooths_oscillations() {
    for kind in [DomainKind::UnitSquare, DomainKind::UnitDisk] {
        let sp = space(kind, 9, 8).with_entry_samples(8).unwrap();
        let op = TransportOperator::new(&sp, &vec![0.0; sp.num_nodes()]).unwrap();
        assert!(op.entry_values(&|_| 2.5).iter().all(|&v| (v - 2.5).abs() <= 1e-14));
        let wiggle = |p: Point| (40.0 * p[0]).sin() * (40.0 * p[1]).sin();
        let coarse = space(kind, 9, 8);
        let plain = TransportOperator::new(&coarse, &vec![0.0; coarse.num_nodes()]).unwrap();
        let rms = |v: &[f64]| (v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64).sqrt();
        assert!(rms(&op.entry_values(&wiggle)) < rms(&plain.entry_values(&wiggle)));
    }
    assert!(space(DomainKind::UnitSquare, 5, 4).with_entry_samples(0).is_err());
}

#[test]
fn constant_attenuation_ballistic_is_exponential() {
    for kind in [DomainKind::UnitSquare, DomainKind::UnitDisk] {
        let sp = space(kind, 11, 12);
        let op = TransportOperator::new(&sp, &vec![0.7; sp.num_nodes()]).unwrap();
        let b = op.ballistic(&|p| 1.0 + p[0]);
        for k in 0..sp.num_dirs() {
            for i in 0..sp.num_nodes() {
                let x = sp.grid().ray_origin(i);
                let v = sp.angular().direction(k);
                let t = op.tau(k, i);
                let e = [x[0] - t * v[0], x[1] - t * v[1]];
                assert_abs_diff_eq!(b.get(i, k), (1.0 + e[0]) * (-0.7 * t).exp(), epsilon = 1e-9);
            }
        }
    }
}

#[test]
fn transpose_sweep_is_exact_adjoint() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for kind in [DomainKind::UnitSquare, DomainKind::UnitDisk] {
        let sp = space(kind, 9, 8);
        let sig = random_nodal(&mut rng, sp.num_nodes(), 0.2, 2.0);
        let op = TransportOperator::new(&sp, &sig).unwrap();
        let f = random_field(&mut rng, &sp);
        let g = random_field(&mut rng, &sp);
        let mut tf = vec![0.0; sp.len()];
        let mut ttg = vec![0.0; sp.len()];
        op.apply(f.as_slice(), &mut tf);
        op.apply_transpose(g.as_slice(), &mut ttg);
        let lhs: f64 = tf.iter().zip(g.as_slice()).map(|(a, b)| a * b).sum();
        let rhs: f64 = ttg.iter().zip(f.as_slice()).map(|(a, b)| a * b).sum();
        assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-12 * lhs.abs().max(1.0));
    }
}

#[test]
fn no_scattering_returns_ballistic_in_one_iteration() {
    let sp = space(DomainKind::UnitSquare, 9, 8);
    let n = sp.num_nodes();
    let sys = RteSystem::new(&sp, &vec![1.0; n], &vec![0.0; n], PhaseFunction::isotropic(sp.angular())).unwrap();
    let (u, rep) = sys.solve_forward(Some(&|_| 1.0), None, &SolverOptions::default()).unwrap();
    assert_eq!(rep.iterations, 1);
    assert_eq!(u, sys.ballistic(&|_| 1.0));
}

#[test]
fn gmres_agrees_with_source_iteration() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let sp = space(DomainKind::UnitDisk, 11, 8);
    let n = sp.num_nodes();
    let ss = random_nodal(&mut rng, n, 1.0, 3.0);
    let st: Vec<f64> = ss.iter().map(|s| s + 0.3).collect();
    let phase = PhaseFunction::henyey_greenstein(0.5, sp.angular()).unwrap();
    let sys = RteSystem::new(&sp, &st, &ss, phase).unwrap();
    let tight = SolverOptions::default().with_tol(1e-13);
    let (a, _) = sys.solve_forward(Some(&|p| 1.0 + p[1] * p[1]), None, &tight).unwrap();
    let (b, rep) =
        sys.solve_forward(Some(&|p| 1.0 + p[1] * p[1]), None, &tight.with_method(SolveMethod::Gmres)).unwrap();
    assert!(rep.iterations < 60);
    let mut d = a.clone();
    d.axpy(-1.0, &b);
    assert!(d.sup_norm() < 1e-10 * a.sup_norm());
}

#[test]
fn transpose_solve_satisfies_inner_product_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let sp = space(DomainKind::UnitSquare, 9, 8);
    let n = sp.num_nodes();
    let ss = random_nodal(&mut rng, n, 0.1, 1.0);
    let st: Vec<f64> = ss.iter().map(|s| s + 0.5).collect();
    let sys = RteSystem::new(&sp, &st, &ss, PhaseFunction::henyey_greenstein(0.3, sp.angular()).unwrap()).unwrap();
    let opts = SolverOptions::default().with_tol(1e-14);
    let b = random_field(&mut rng, &sp);
    let c = random_field(&mut rng, &sp);
    let (x, _) = sys.solve_linear(&b, &opts).unwrap();
    let (y, _) = sys.solve_transpose(&c, &opts).unwrap();
    assert_abs_diff_eq!(x.dot(&c), b.dot(&y), epsilon = 1e-10);
}

#[test]
fn sensitivity_and_tangent_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for kind in [DomainKind::UnitSquare, DomainKind::UnitDisk] {
        let sp = space(kind, 9, 8);
        let n = sp.num_nodes();
        let sig = random_nodal(&mut rng, n, 0.5, 1.5);
        let dsig = random_nodal(&mut rng, n, -1.0, 1.0);
        let f = random_field(&mut rng, &sp);
        let lam = random_field(&mut rng, &sp);
        let g = |p: Point| 1.0 + 0.5 * p[0];
        let eval = |s: &[f64]| {
            let op = TransportOperator::new(&sp, s).unwrap();
            let mut out = op.ballistic(&g).into_vec();
            let mut tf = vec![0.0; sp.len()];
            op.apply(f.as_slice(), &mut tf);
            for (o, t) in out.iter_mut().zip(&tf) {
                *o += t;
            }
            out
        };
        let eps = 1e-6;
        let plus: Vec<f64> = sig.iter().zip(&dsig).map(|(s, d)| s + eps * d).collect();
        let minus: Vec<f64> = sig.iter().zip(&dsig).map(|(s, d)| s - eps * d).collect();
        let (fp, fm) = (eval(&plus), eval(&minus));
        let fd: Vec<f64> = fp.iter().zip(&fm).map(|(a, b)| (a - b) / (2.0 * eps)).collect();

        let op = TransportOperator::new(&sp, &sig).unwrap();
        let ge = op.entry_values(&g);
        let mut tan = vec![0.0; sp.len()];
        op.tangent(&dsig, f.as_slice(), Some(&ge), &mut tan);
        for (a, b) in tan.iter().zip(&fd) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-7);
        }
        let sens = op.sensitivity(lam.as_slice(), f.as_slice(), Some(&ge));
        let lhs: f64 = sens.iter().zip(&dsig).map(|(a, b)| a * b).sum();
        let rhs: f64 = fd.iter().zip(lam.as_slice()).map(|(a, b)| a * b).sum();
        assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-7 * rhs.abs().max(1.0));
    }
}

#[test]
fn reversed_field_is_involution() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let sp = space(DomainKind::UnitSquare, 5, 6);
    let f = random_field(&mut rng, &sp);
    assert_eq!(f.reversed().reversed(), f);
}

#[test]
fn scatter_preserves_constants() {
    let sp = space(DomainKind::UnitSquare, 5, 12);
    let phase = PhaseFunction::henyey_greenstein(0.7, sp.angular()).unwrap();
    let n = sp.num_nodes();
    let sys = RteSystem::new(&sp, &vec![1.0; n], &vec![0.5; n], phase).unwrap();
    let c = PhaseSpaceField::from_fn(&sp, |_, _| 2.5);
    let kc = sys.scatter(&c);
    for v in kc.as_slice() {
        assert_abs_diff_eq!(*v, 2.5, epsilon = 1e-13);
    }
}

#[test]
fn cache_levels_give_identical_results() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let sp = space(DomainKind::UnitDisk, 13, 8);
    let n = sp.num_nodes();
    let sig = random_nodal(&mut rng, n, 0.2, 2.0);
    let f = random_field(&mut rng, &sp);
    let ops = [
        TransportOperator::new(&sp, &sig).unwrap(),
        TransportOperator::with_cache_limits(&sp, &sig, usize::MAX, 0).unwrap(),
        TransportOperator::with_cache_limits(&sp, &sig, 0, 0).unwrap(),
    ];
    let outs: Vec<(Vec<f64>, Vec<f64>, Vec<f64>)> = ops
        .iter()
        .map(|op| {
            let mut a = vec![0.0; sp.len()];
            let mut b = vec![0.0; sp.len()];
            op.apply(f.as_slice(), &mut a);
            op.apply_transpose(f.as_slice(), &mut b);
            let s = op.sensitivity(f.as_slice(), f.as_slice(), None);
            (a, b, s)
        })
        .collect();
    assert!(!ops[2].is_cached());
    for o in &outs[1..] {
        assert_eq!(o, &outs[0]);
    }
}
