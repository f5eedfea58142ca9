use fumot_core::functionals::{boundary_current, correlator_psi, internal_h};
use fumot_core::grid::{ray_quadrature, QuadratureRule};
use fumot_core::reconstruct::{lbfgs_minimize, LbfgsOptions};
use fumot_core::skeleton::{boundary_packing, build_skeleton};
use fumot_core::{
    AngularGrid, CoefficientSet, DomainKind, PhaseFunction, PhaseSpace, PhaseSpaceField, RteSystem, SolverOptions,
    SpatialGrid,
};
use proptest::prelude::*;

fn domain() -> impl Strategy<Value = DomainKind> {
    prop_oneof![Just(DomainKind::UnitSquare), Just(DomainKind::UnitDisk)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn exit_times_swap_under_reversal(kind in domain(), n in 5usize..20, m in 2usize..24) {
        let grid = SpatialGrid::new(kind, n, n).unwrap();
        let ang = AngularGrid::new(2 * m).unwrap();
        for i in 0..grid.num_nodes() {
            let x = grid.ray_origin(i);
            for k in 0..ang.len() {
                let v = ang.direction(k);
                let (tm, tp) = grid.exit_times(x, v).unwrap();
                let (rm, rp) = grid.exit_times(x, [-v[0], -v[1]]).unwrap();
                prop_assert!((tm - rp).abs() <= 1e-10 && (tp - rm).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn ray_weights_are_nonnegative_and_sum_to_length(
        kind in domain(),
        px in -0.7f64..0.7,
        py in -0.7f64..0.7,
        a in 0.0f64..std::f64::consts::TAU,
        step in 0.005f64..0.3,
        simpson in any::<bool>(),
    ) {
        let grid = SpatialGrid::new(kind, 16, 16).unwrap();
        let x = match kind {
            DomainKind::UnitSquare => [0.5 + 0.5 * px, 0.5 + 0.5 * py],
            DomainKind::UnitDisk => [px, py],
        };
        let v = [a.cos(), a.sin()];
        let rule = if simpson { QuadratureRule::Simpson } else { QuadratureRule::Trapezoid };
        let q = ray_quadrature(&grid, x, v, rule, step).unwrap();
        let (tau, _) = grid.exit_times(x, v).unwrap();
        prop_assert!(q.weights.iter().all(|&w| w >= 0.0));
        prop_assert!((q.weights.iter().sum::<f64>() - tau).abs() <= 1e-12 * tau.max(1.0));
    }

    #[test]
    fn antipode_is_involution(m in 2usize..64) {
        let ang = AngularGrid::new(2 * m).unwrap();
        for k in 0..ang.len() {
            prop_assert_eq!(ang.antipode(ang.antipode(k)), k);
        }
    }

    #[test]
    fn nonnegative_data_give_nonnegative_solution(
        kind in domain(),
        seed in any::<u64>(),
        g0 in 0.0f64..2.0,
        q0 in 0.0f64..2.0,
        aniso in -0.8f64..0.8,
    ) {
        let grid = SpatialGrid::new(kind, 10, 10).unwrap();
        let ang = AngularGrid::new(12).unwrap();
        let phase = PhaseFunction::henyey_greenstein(aniso, &ang).unwrap();
        let space = PhaseSpace::new(grid, ang);
        let n = space.num_nodes();
        let wobble = |i: usize, s: u64| (((i as u64).wrapping_mul(2654435761) ^ s) % 1000) as f64 / 1000.0;
        let st: Vec<f64> = (0..n).map(|i| 0.3 + 2.0 * wobble(i, seed)).collect();
        let ss: Vec<f64> = st.iter().enumerate().map(|(i, t)| t * 0.9 * wobble(i, seed >> 7)).collect();
        let sys = RteSystem::new(&space, &st, &ss, phase).unwrap();
        let q = PhaseSpaceField::from_fn(&space, |i, k| q0 * wobble(i * 31 + k, seed >> 13));
        let g = move |p: [f64; 2]| g0 * (1.0 + (5.0 * p[0]).sin()) * 0.5;
        let (u, _) = sys.solve_forward(Some(&g), Some(&q), &SolverOptions::default().with_tol(1e-12)).unwrap();
        prop_assert!(u.min() >= -1e-12);
    }

    #[test]
    fn psi_ignores_direction_reversal(seed in any::<u64>()) {
        let space = PhaseSpace::new(SpatialGrid::unit_disk(8).unwrap(), AngularGrid::new(10).unwrap());
        let u = PhaseSpaceField::from_fn(&space, |i, k| ((i * 13 + k * 7) as u64 ^ seed) as f64 % 17.0);
        let a = correlator_psi(&u, space.angular());
        let b = correlator_psi(&u.reversed(), space.angular());
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0));
        }
    }

    #[test]
    fn even_fields_carry_no_current(kind in domain(), seed in any::<u64>()) {
        let space = PhaseSpace::new(SpatialGrid::new(kind, 9, 9).unwrap(), AngularGrid::new(16).unwrap());
        let ang = space.angular().clone();
        let f = PhaseSpaceField::from_fn(&space, |i, k| {
            let kk = k.min(ang.antipode(k));
            ((i * 5 + kk * 11) as u64 ^ seed) as f64 % 13.0
        });
        let j = boundary_current(&f, space.grid(), &ang);
        prop_assert!(j.iter().all(|v| v.abs() <= 1e-12 * 13.0 * 16.0));
    }

    #[test]
    fn lbfgs_objective_never_increases(
        diag in proptest::collection::vec(0.1f64..50.0, 6),
        target in proptest::collection::vec(-3.0f64..3.0, 6),
        x0 in proptest::collection::vec(-1.0f64..1.0, 6),
    ) {
        let mut f = |x: &[f64]| -> fumot_core::Result<(f64, Vec<f64>)> {
            let v = (0..6).map(|i| 0.5 * diag[i] * (x[i] - target[i]).powi(2)).sum::<f64>();
            Ok((v, (0..6).map(|i| diag[i] * (x[i] - target[i])).collect()))
        };
        let r = lbfgs_minimize(&mut f, &x0, &[-2.0; 6], &[2.0; 6], &LbfgsOptions::default()).unwrap();
        for w in r.trace.windows(2) {
            prop_assert!(w[1].objective <= w[0].objective);
        }
        for i in 0..6 {
            prop_assert!((r.x[i] - target[i].clamp(-2.0, 2.0)).abs() <= 1e-6);
        }
    }

    #[test]
    fn packing_separates_and_covers(delta in 0.05f64..1.5) {
        let pts = boundary_packing(delta).unwrap();
        let n = pts.len();
        for a in 0..n {
            for b in a + 1..n {
                let d = ((pts[a][0] - pts[b][0]).powi(2) + (pts[a][1] - pts[b][1]).powi(2)).sqrt();
                prop_assert!(d > delta);
            }
        }
        for s in 0..2000 {
            let t = std::f64::consts::TAU * s as f64 / 2000.0;
            let p = [t.cos(), t.sin()];
            let near = pts.iter().map(|q| ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt()).fold(f64::INFINITY, f64::min);
            prop_assert!(near <= delta);
        }
    }

    #[test]
    fn pruned_length_obeys_bound(
        angles in proptest::collection::vec(0.0f64..std::f64::consts::TAU, 3..10),
        theta in 1e-4f64..1e-2,
    ) {
        let mut a = angles.clone();
        a.sort_by(f64::total_cmp);
        let verts: Vec<[f64; 2]> = a.iter().map(|t| [t.cos(), t.sin()]).collect();
        let n = verts.len();
        let mut delta = f64::INFINITY;
        for i in 0..n {
            for j in i + 1..n {
                delta = delta.min(((verts[i][0] - verts[j][0]).powi(2) + (verts[i][1] - verts[j][1]).powi(2)).sqrt());
            }
        }
        prop_assume!(delta > 1e-3);
        let g = build_skeleton(&verts, theta).unwrap();
        let bound = (n * n) as f64 * 4.0 * theta / delta;
        for c in &g.chords {
            prop_assert!(c.removed <= bound * (1.0 + 1e-12), "removed {} bound {}", c.removed, bound);
        }
    }
}

#[test]
fn zero_scattering_h_is_attenuated_psi() {
    let space = PhaseSpace::new(SpatialGrid::unit_square(10, 10).unwrap(), AngularGrid::new(12).unwrap());
    let grid = space.grid().clone();
    let coeffs =
        CoefficientSet::from_fns(&grid, [&|p| 0.3 + p[0], &|_| 0.0, &|p| 0.2 + p[1], &|_| 0.1, &|_| 0.1, &|_| 0.5]);
    let phase = PhaseFunction::henyey_greenstein(0.3, space.angular()).unwrap();
    let sys = RteSystem::new(&space, &coeffs.sigma_xtf(), &coeffs.sigma_xs, phase.clone()).unwrap();
    let (u, _) = sys.solve_forward(Some(&|p: [f64; 2]| 1.0 + p[0] * p[1]), None, &SolverOptions::default()).unwrap();
    let mut ku = PhaseSpaceField::zeros(&space);
    phase.scatter_into(u.as_slice(), space.num_nodes(), ku.as_mut_slice());
    let h = internal_h(&u, &ku, &coeffs, space.angular());
    let psi = correlator_psi(&u, space.angular());
    let st = coeffs.sigma_xtf();
    for i in 0..h.len() {
        assert_eq!(h[i], -st[i] * psi[i]);
    }
}

#[test]
fn quarter_turn_of_directions_rotates_solution() {
    let n = 11;
    let m = 16;
    let grid = SpatialGrid::unit_square(n, n).unwrap();
    let space = PhaseSpace::new(grid, AngularGrid::new(m).unwrap());
    let nn = space.num_nodes();
    let phase = PhaseFunction::henyey_greenstein(0.4, space.angular()).unwrap();
    let sys = RteSystem::new(&space, &vec![1.5; nn], &vec![0.9; nn], phase).unwrap();
    let (u, _) = sys.solve_forward(Some(&|_| 1.0), None, &SolverOptions::default().with_tol(1e-14)).unwrap();
    let g = space.grid();
    let mut worst: f64 = 0.0;
    for i in 0..nn {
        let Some((ix, iy)) = g.lattice_index(i) else { continue };
        let Some(j) = g.slot(n - 1 - iy, ix) else { continue };
        for k in 0..m {
            worst = worst.max((u.get(i, k) - u.get(j, (k + m / 4) % m)).abs());
        }
    }
    assert!(worst <= 1e-12, "rotation mismatch {worst:e}");
}
