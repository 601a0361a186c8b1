use lidar_gsa::defense::{emit_adv_training_set, srs_filter, Manifest, SampleKind, SrsConfig, MANIFEST_FILE};
use lidar_gsa::gsa::{run_attack, AttackConfig};
use lidar_gsa::pointcloud::{load_kitti_bin, Point3, PointCloud};
use lidar_gsa::synthetic::{benchmark_scenes, builtin_detector};

fn line(n: usize) -> PointCloud {
    (0..n).map(|i| Point3::with_intensity(i as f64, 0.0, 0.0, 0.0)).collect()
}

#[test]
fn kitti_scale_fraction_removes_1989_of_117000() {
    let cfg = SrsConfig::fraction(0.017, 4);
    assert_eq!(cfg.removed(117_000).unwrap(), 1989);
    assert_eq!(srs_filter(&line(117_000), &cfg).unwrap().len(), 115_011);
}

#[test]
fn survivors_keep_their_order_and_are_distinct() {
    let kept = srs_filter(&line(500), &SrsConfig::count(123, 8)).unwrap();
    assert_eq!(kept.len(), 377);
    assert!(kept.points.windows(2).all(|w| w[0].x < w[1].x));
}

#[test]
fn removal_is_seeded() {
    let c = line(300);
    let a = srs_filter(&c, &SrsConfig::count(30, 1)).unwrap();
    assert_eq!(a, srs_filter(&c, &SrsConfig::count(30, 1)).unwrap());
    assert_ne!(a, srs_filter(&c, &SrsConfig::count(30, 2)).unwrap());
}

#[test]
fn removing_everything_is_rejected() {
    assert!(srs_filter(&line(10), &SrsConfig::count(10, 0)).is_err());
    assert!(srs_filter(&line(10), &SrsConfig::fraction(1.5, 0)).is_err());
    assert!(srs_filter(&PointCloud::default(), &SrsConfig::count(0, 0)).unwrap().is_empty());
}

#[test]
fn emitted_dataset_matches_its_manifest() {
    let scenes: Vec<_> = benchmark_scenes().unwrap().into_iter().take(3).collect();
    let det = builtin_detector("voxel0.2").unwrap();
    let cfg = AttackConfig {
        population: 6,
        generations: 5,
        ..AttackConfig::default()
    };
    let results: Vec<_> = scenes.iter().map(|s| run_attack(s, &det, &cfg).unwrap()).collect();
    let dir = tempfile::tempdir().unwrap();
    let manifest = emit_adv_training_set(&scenes, &results, 0.5, dir.path()).unwrap();
    // 3 clean + ceil(1.5) = 2 adversarial
    assert_eq!(manifest.entries.len(), 5);
    assert_eq!(manifest.entries.iter().filter(|e| e.kind == SampleKind::Adversarial).count(), 2);
    let loaded = Manifest::load(dir.path().join(MANIFEST_FILE)).unwrap();
    assert_eq!(loaded, manifest);
    for e in &loaded.entries {
        let c = load_kitti_bin(dir.path().join(&e.file)).unwrap();
        assert_eq!(c.len(), e.points, "{}", e.file);
    }
    assert!(emit_adv_training_set(&scenes, &results[..2], 0.5, dir.path()).is_err());
}
