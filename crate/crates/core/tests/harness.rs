use fumot_core::config::{ExperimentConfig, GridConfig, Preset};
use fumot_core::experiments::{nodal_from_file, run_forward, run_internal_data, synthesize};
use fumot_core::io::read_field;
use fumot_core::phantom::Phantom;
use fumot_core::{DomainKind, SpatialGrid};

fn tiny() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::example2(Preset::Desk);
    cfg.grid = GridConfig::new(DomainKind::UnitSquare, 8, 8);
    cfg.data_grid = GridConfig::new(DomainKind::UnitSquare, 16, 16).with_entry_samples(4);
    cfg
}

#[test]
fn shared_grid_is_rejected() {
    let mut cfg = tiny();
    cfg.data_grid = cfg.grid;
    assert!(synthesize(&cfg).is_err());
}

#[test]
fn manifest_echoes_config_and_seeds() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny();
    run_internal_data(&cfg, Some(dir.path())).unwrap();
    let text = std::fs::read_to_string(dir.path().join("manifest.json")).unwrap();
    let m: serde_json::Value = serde_json::from_str(&text).unwrap();
    let echoed: ExperimentConfig = serde_json::from_value(m["config"].clone()).unwrap();
    assert_eq!(echoed, cfg);
    assert_eq!(m["seeds"][0], cfg.noise.seed);
    assert_eq!(m["command"], "internal-data");
    let toml = std::fs::read_to_string(dir.path().join("config.toml")).unwrap();
    assert_eq!(ExperimentConfig::from_toml(&toml).unwrap(), cfg);
}

#[test]
fn forward_fields_round_trip_through_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny();
    let (_, sol) = run_forward(&cfg, Some(dir.path())).unwrap();
    let grid = cfg.grid.spatial().unwrap();
    let file = read_field(&dir.path().join("h.csv")).unwrap();
    assert_eq!(nodal_from_file(&grid, &file).unwrap(), sol.data.h);
    let pgm = std::fs::read(dir.path().join("h.pgm")).unwrap();
    assert!(pgm.starts_with(b"P5"));
    assert!(pgm.len() > 9 * 9);
}

#[test]
fn internal_data_is_deterministic_per_seed() {
    let cfg = tiny();
    let (_, h1, s1) = run_internal_data(&cfg, None).unwrap();
    let (_, h2, s2) = run_internal_data(&cfg, None).unwrap();
    assert_eq!(h1, h2);
    assert_eq!(s1, s2);
    let mut other = cfg.clone();
    other.noise.seed += 1;
    let (_, h3, _) = run_internal_data(&other, None).unwrap();
    assert_ne!(h1, h3);
}

#[test]
fn phantom_is_resolution_consistent() {
    let p = Phantom::SheppLoganModified { lo: 0.1, hi: 0.5 };
    let coarse = SpatialGrid::unit_square(9, 9).unwrap();
    let fine = SpatialGrid::unit_square(17, 17).unwrap();
    let (c, f) = (p.sample(&coarse), p.sample(&fine));
    for i in 0..coarse.num_nodes() {
        let (ix, iy) = coarse.lattice_index(i).unwrap();
        assert_eq!(c[i], f[fine.slot(2 * ix, 2 * iy).unwrap()]);
    }
}

#[test]
fn derenzo_has_two_levels() {
    let p = Phantom::Derenzo { background: 0.2, insert: 0.6, radii: None };
    let grid = SpatialGrid::unit_square(96, 96).unwrap();
    let mut levels = p.sample(&grid);
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    assert_eq!(levels, vec![0.2, 0.6]);
}

#[test]
fn config_overlay_keeps_unspecified_keys() {
    let base = ExperimentConfig::example2(Preset::Desk);
    let cfg = base.merged("[sigma]\nbeta = 0.01\n[noise]\nlevels = [0.02]\n").unwrap();
    assert_eq!(cfg.sigma.beta, 0.01);
    assert_eq!(cfg.noise.levels, vec![0.02]);
    assert_eq!(cfg.eta, base.eta);
    assert!(base.merged("[grid]\nn = 200\n").is_err());
}
