use fumot_core::skeleton::{
    bfactor, boundary_packing, build_skeleton, circle_points, covering_check, recover_sigma_skeleton, LocalizedSource,
    RecoveryOptions, RecoveryZones, SpotField,
};
use fumot_core::{AngularGrid, CoefficientSet, ForwardModel, PhaseFunction, PhaseSpace, SolverOptions, SpatialGrid};

fn disk_model(n: usize, m: usize, sigma_s: f64) -> ForwardModel {
    let space = PhaseSpace::new(SpatialGrid::unit_disk(n).unwrap(), AngularGrid::new(m).unwrap());
    let phase = PhaseFunction::isotropic(space.angular());
    let coeffs = CoefficientSet::uniform(space.num_nodes(), 0.4 - sigma_s, sigma_s, 0.5, 0.2, 0.2, 0.3);
    ForwardModel::new(space, coeffs, phase, SolverOptions::default()).unwrap()
}

#[test]
fn recovery_is_exact_without_scattering() {
    let model = disk_model(32, 16, 0.0);
    let verts = circle_points(6, 0.1);
    let src = LocalizedSource::new(&verts, 1.0 / 32.0).unwrap();
    let field = SpotField::solve(&model, &src, 64).unwrap();
    let graph = build_skeleton(&verts, 0.125).unwrap();
    let h = |p| field.correlators(p).h;
    let zones = RecoveryZones { interior: 0.3, reference: (0.1, 0.3) };
    let rec = recover_sigma_skeleton(&h, &graph, &src, &|_| 0.9, zones, RecoveryOptions { step: 0.05 }).unwrap();
    assert!(!rec.samples.is_empty());
    for s in &rec.samples {
        assert!((s.recovered - 0.9).abs() / 0.9 < 1e-3, "{:?}", s);
    }
}

#[test]
fn psi_peaks_on_chords() {
    let model = disk_model(32, 16, 0.2);
    let verts = circle_points(6, 0.1);
    let src = LocalizedSource::new(&verts, 1.0 / 32.0).unwrap();
    let field = SpotField::solve(&model, &src, 64).unwrap();
    let (a, b) = (verts[0], verts[3]);
    let on = field.correlators([0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]).psi;
    let (c, d) = (verts[0], verts[1]);
    let off_point = [0.35 * (c[0] + d[0]), 0.35 * (c[1] + d[1])];
    let off = field.correlators(off_point).psi;
    assert!(on > 2.0 * off, "on {on} off {off}");
}

#[test]
fn bfactor_is_symmetric_and_rejects_empty_arcs() {
    let verts = circle_points(4, 0.0);
    let src = LocalizedSource::new(&verts, 0.05).unwrap();
    let mid = [0.0, 0.0];
    let (b02, b20) = (bfactor(&src, mid, 0, 2).unwrap(), bfactor(&src, mid, 2, 0).unwrap());
    assert!((b02 - b20).abs() <= 1e-12 * b02);
    assert!(b02 > 0.0);
    assert!(bfactor(&src, [0.5, 0.5], 0, 2).is_err());
}

#[test]
fn oversized_tubes_can_break_covering() {
    let delta = 0.2;
    let verts = boundary_packing(delta).unwrap();
    let good = build_skeleton(&verts, delta * delta / (4.0 * (verts.len() * verts.len()) as f64)).unwrap();
    assert!(covering_check(&good, delta, 0.3, 2000, 3).pass);
    let coarse = build_skeleton(&verts, delta).unwrap();
    assert!(coarse.max_removed() > good.max_removed());
}
