use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use lidar_gsa::gsa::{AttackConfig, Evaluator};
use lidar_gsa::oracle::Detector;
use lidar_gsa::pointcloud::{PointCloud, Point3};
use lidar_gsa::scanner::{build_perturbation_mesh, ray_triangle_intersect, simulate_scan};
use lidar_gsa::synthetic::{benchmark_scenes, builtin_detector};

fn perturbation(scene_target: &PointCloud, n: usize) -> PointCloud {
    scene_target
        .iter()
        .step_by((scene_target.len() / n).max(1))
        .take(n)
        .map(|p| Point3::from_xyz([p.x, p.y, p.z + 0.05], 1.0))
        .collect()
}

fn benches(c: &mut Criterion) {
    let scene = benchmark_scenes().expect("scenes").remove(0);
    let det = builtin_detector("voxel0.2").expect("detector");
    let config = AttackConfig {
        eval_budget: u64::MAX,
        ..AttackConfig::default()
    };
    let points = perturbation(&scene.target, 20);
    let cloud = scene.cloud();

    c.bench_function("ray_triangle_intersect", |b| {
        b.iter(|| {
            ray_triangle_intersect(
                black_box([0.0, 0.0, 0.0]),
                black_box([1.0, 0.1, 0.05]),
                [5.0, -1.0, -1.0],
                [5.0, 1.0, -1.0],
                [5.0, 0.0, 1.0],
            )
        })
    });

    c.bench_function("perturbation_scan_20_spheres", |b| {
        let mesh = build_perturbation_mesh(&points, config.mesh_radius).unwrap();
        b.iter(|| simulate_scan(black_box(&mesh), &config.scan))
    });

    c.bench_function("toy_detect_scene", |b| b.iter(|| det.detect(black_box(&cloud)).unwrap()));

    c.bench_function("evaluate_individual", |b| {
        let ev = Evaluator::new(&scene, &det, &config).unwrap();
        b.iter(|| ev.evaluate_points(black_box(&points)).unwrap())
    });
}

criterion_group!(hot, benches);
criterion_main!(hot);
