//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any criterion fails.

use std::fs;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use lidar_gsa::defense::{srs_filter, SrsConfig};
use lidar_gsa::gsa::{
    acceptance_probability, adaptive_pc, adaptive_pm, decode, encode, roulette_select, run_attack, AttackConfig,
    AttackResult, Schedule,
};
use lidar_gsa::harness::{judge, rotated_case, run_benchmark, shifted_case, sweep_angle, sweep_distance, sweep_srs, SweepCase};
use lidar_gsa::oracle::{classify_verdict, Detector};
use lidar_gsa::pointcloud::{Point3, PointCloud};
use lidar_gsa::scanner::ray_triangle_intersect;
use lidar_gsa::scene::Scene;
use lidar_gsa::synthetic::{benchmark_scenes, builtin_detector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion<'a> = (&'static str, Box<dyn FnOnce() -> Outcome + 'a>);

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn main() -> ExitCode {
    // The benchmark runs are shared by several criteria.
    let scenes = benchmark_scenes().expect("benchmark scenes");
    let det = builtin_detector("voxel0.2").expect("toy detector");
    let config = AttackConfig::default();
    let bench_start = Instant::now();
    let bench = run_benchmark(&scenes, &det, &config, |_, _| {}).map(|(r, _)| r);
    let bench_time = bench_start.elapsed();

    let criteria: Vec<Criterion<'_>> = vec![
        ("encode/decode roundtrip", Box::new(roundtrip)),
        ("ray-triangle correctness", Box::new(ray_triangle)),
        ("elitism and absorbing success", Box::new(|| elitism(&scenes, &det))),
        ("shell constraint", Box::new(|| shell(&scenes, &bench, &config))),
        ("attack effectiveness", Box::new(|| effectiveness(&bench, bench_time))),
        ("adaptive operator bounds", Box::new(adaptive_bounds)),
        ("roulette fidelity", Box::new(roulette)),
        ("annealing schedule", Box::new(schedule)),
        ("sweep regression anchors", Box::new(|| anchors(&scenes, &bench, &det, &config))),
        ("random-sampling statistics", Box::new(srs_stats)),
        ("attack determinism", Box::new(determinism)),
    ];

    let mut failed = 0;
    for (name, f) in criteria {
        let t = Instant::now();
        match f() {
            Ok(detail) => println!("PASS  {name}: {detail} [{:.1}s]", t.elapsed().as_secs_f64()),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name}: {detail} [{:.1}s]", t.elapsed().as_secs_f64());
            }
        }
    }
    if failed == 0 {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} criteria failed");
        ExitCode::FAILURE
    }
}

fn roundtrip() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut raw = Vec::with_capacity(100_000);
    while raw.len() < 100_000 {
        let t: [f32; 3] = std::array::from_fn(|_| f32::from_bits(rng.random()));
        if t.iter().all(|v| v.is_finite()) {
            raw.push(t);
        }
    }
    let cloud: PointCloud = raw
        .iter()
        .map(|t| Point3::with_intensity(t[0] as f64, t[1] as f64, t[2] as f64, 1.0))
        .collect();
    let start = Instant::now();
    let chrom = encode(&cloud).map_err(|e| e.to_string())?;
    let back = decode(&chrom, raw.len()).map_err(|e| e.to_string())?;
    let took = start.elapsed();
    check(back.cloud.len() == raw.len(), "length changed")?;
    for (t, p) in raw.iter().zip(back.cloud.iter()) {
        let got = [p.x as f32, p.y as f32, p.z as f32];
        if (0..3).any(|k| got[k].to_bits() != t[k].to_bits()) {
            return Err(format!("{t:?} decoded as {got:?}"));
        }
    }
    check(took < Duration::from_secs(1), format!("took {took:?}"))?;
    Ok(format!("1e5 triples bit-exact in {:.1} ms", took.as_secs_f64() * 1e3))
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn norm(a: [f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

/// Reference answer built from the plane hit and signed sub-triangle areas,
/// with the hit location confirmed against a dense barycentric grid.
/// Returns `None` for rays too close to an edge or to parallel.
fn ray_reference(o: [f64; 3], d: [f64; 3], tri: [[f64; 3]; 3]) -> Option<Option<[f64; 3]>> {
    let n = cross(sub(tri[1], tri[0]), sub(tri[2], tri[0]));
    let area = norm(n);
    let nhat = n.map(|c| c / area);
    let denom = dot(nhat, d);
    if denom.abs() < 1e-3 {
        return None;
    }
    let t = dot(nhat, sub(tri[0], o)) / denom;
    let p = [o[0] + t * d[0], o[1] + t * d[1], o[2] + t * d[2]];
    let bary: Vec<f64> = (0..3)
        .map(|i| dot(cross(sub(tri[(i + 1) % 3], p), sub(tri[(i + 2) % 3], p)), nhat) / area)
        .collect();
    if bary.iter().any(|b| b.abs() < 1e-5) || t.abs() < 1e-5 {
        return None;
    }
    let inside = bary.iter().all(|&b| b > 0.0) && t > 0.0;
    if !inside {
        return Some(None);
    }
    // Dense sampling: the nearest grid sample must sit within one cell of p.
    const N: usize = 256;
    let mut best = f64::INFINITY;
    for i in 0..=N {
        for j in 0..=N - i {
            let (u, v) = (i as f64 / N as f64, j as f64 / N as f64);
            let s: [f64; 3] = std::array::from_fn(|k| tri[0][k] + u * (tri[1][k] - tri[0][k]) + v * (tri[2][k] - tri[0][k]));
            best = best.min(norm(sub(s, p)));
        }
    }
    let cell = norm(sub(tri[1], tri[0])).max(norm(sub(tri[2], tri[0]))) / N as f64;
    assert!(best <= cell, "sampling disagrees with the area solution");
    Some(Some(p))
}

fn ray_triangle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let start = Instant::now();
    let (mut tested, mut hits) = (0usize, 0usize);
    while tested < 1000 {
        let tri: [[f64; 3]; 3] = std::array::from_fn(|_| std::array::from_fn(|_| rng.random_range(-3.0..3.0)));
        if norm(cross(sub(tri[1], tri[0]), sub(tri[2], tri[0]))) < 0.5 {
            continue;
        }
        let o: [f64; 3] = std::array::from_fn(|_| rng.random_range(-6.0..6.0));
        // Aim most rays near the triangle so that hits and misses both occur.
        let aim = if rng.random_bool(0.8) {
            let (u, v) = (rng.random_range(-0.3..1.3), rng.random_range(-0.3..1.3));
            std::array::from_fn(|k| tri[0][k] + u * (tri[1][k] - tri[0][k]) + v * (tri[2][k] - tri[0][k]))
        } else {
            std::array::from_fn(|_| rng.random_range(-6.0..6.0))
        };
        let dir = sub(aim, o);
        let len = norm(dir);
        if len < 1e-3 {
            continue;
        }
        let d = dir.map(|c| c / len);
        let Some(expected) = ray_reference(o, d, tri) else {
            continue;
        };
        tested += 1;
        let got = ray_triangle_intersect(o, d, tri[0], tri[1], tri[2]);
        match (expected, got) {
            (None, None) => {}
            (Some(p), Some(h)) => {
                hits += 1;
                let n = cross(sub(tri[1], tri[0]), sub(tri[2], tri[0]));
                let off_plane = dot(n, sub(h.point, tri[0])).abs() / norm(n);
                check(off_plane <= 1e-6, format!("hit {:e} off the plane", off_plane))?;
                check(norm(sub(h.point, p)) <= 1e-6, "hit point disagrees with the reference")?;
            }
            (e, g) => return Err(format!("ray {o:?}->{d:?}: reference hit={} got hit={}", e.is_some(), g.is_some())),
        }
    }
    let took = start.elapsed();
    check(took < Duration::from_secs(10), format!("took {took:?}"))?;
    Ok(format!("{tested} pairs agree ({hits} hits)"))
}

/// Best-so-far must never get worse: a success stays a success, and within
/// the same success status fitness never drops.
fn trace_monotone(r: &AttackResult) -> Result<(), String> {
    for w in r.trace.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        if a.best_success && !b.best_success {
            return Err(format!("generation {}: success lost", b.generation));
        }
        if a.best_success == b.best_success && b.best_fitness < a.best_fitness {
            return Err(format!(
                "generation {}: best fitness fell {} -> {}",
                b.generation, a.best_fitness, b.best_fitness
            ));
        }
    }
    Ok(())
}

fn elitism(scenes: &[Scene], det: &dyn Detector) -> Outcome {
    let cfg = AttackConfig {
        patience: usize::MAX,
        eval_budget: u64::MAX,
        ..AttackConfig::default()
    };
    let mut slowest = Duration::ZERO;
    for (i, scene) in scenes.iter().take(5).enumerate() {
        let cfg = AttackConfig {
            seed: 100 + i as u64,
            ..cfg.clone()
        };
        let t = Instant::now();
        let r = run_attack(scene, det, &cfg).map_err(|e| e.to_string())?;
        let took = t.elapsed();
        slowest = slowest.max(took);
        check(r.generations_run == cfg.generations, format!("scene {i}: ran {} generations", r.generations_run))?;
        trace_monotone(&r).map_err(|e| format!("scene {i}: {e}"))?;
        check(took < Duration::from_secs(300), format!("scene {i}: {took:?}"))?;
    }
    Ok(format!("5 full 1000-generation runs monotone, slowest {:.1}s", slowest.as_secs_f64()))
}

fn shell(scenes: &[Scene], bench: &lidar_gsa::Result<Vec<AttackResult>>, cfg: &AttackConfig) -> Outcome {
    let results = bench.as_ref().map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for (scene, r) in scenes.iter().zip(results) {
        for p in r.best_points.iter() {
            let d = scene
                .target
                .iter()
                .map(|q| ((p.x - q.x).powi(2) + (p.y - q.y).powi(2) + (p.z - q.z).powi(2)).sqrt())
                .fold(f64::INFINITY, f64::min);
            worst = worst.max(d);
            count += 1;
        }
    }
    check(
        worst <= cfg.shell_distance * (1.0 + f64::EPSILON),
        format!("a point lies {worst} m from the target"),
    )?;
    Ok(format!("{count} points, farthest {worst:.6} m <= {}", cfg.shell_distance))
}

fn effectiveness(bench: &lidar_gsa::Result<Vec<AttackResult>>, took: Duration) -> Outcome {
    let results = bench.as_ref().map_err(|e| e.to_string())?;
    let wins = results.iter().filter(|r| r.success).count();
    let asr = wins as f64 / results.len() as f64;
    check(results.len() == 20, format!("{} scenes", results.len()))?;
    check(asr >= 0.8, format!("ASR {asr:.2} ({wins}/20)"))?;
    Ok(format!("ASR {asr:.2} ({wins}/{}) in {:.1}s", results.len(), took.as_secs_f64()))
}

fn adaptive_bounds() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (k_c, k_m) = (1.0, 0.5);
    for _ in 0..10_000 {
        let f_max: f64 = rng.random_range(0.0..10.0);
        let f_avg = rng.random_range(0.0..=f_max);
        let f = rng.random_range(0.0..=f_max);
        let pc = adaptive_pc(f, f_max, f_avg, k_c);
        let pm = adaptive_pm(f, f_max, f_avg, k_m);
        check((0.0..=k_c).contains(&pc), format!("pc {pc} for f={f} max={f_max} avg={f_avg}"))?;
        check((0.0..=k_m).contains(&pm), format!("pm {pm} for f={f} max={f_max} avg={f_avg}"))?;
        if f_max - f_avg > 1e-6 {
            check(adaptive_pc(f_avg, f_max, f_avg, k_c) == k_c, "pc at f_avg")?;
            check(adaptive_pm(f_avg, f_max, f_avg, k_m) == k_m, "pm at f_avg")?;
            check(adaptive_pc(f_max, f_max, f_avg, k_c) == 0.0, "pc at f_max")?;
            check(adaptive_pm(f_max, f_max, f_avg, k_m) == 0.0, "pm at f_max")?;
        }
    }
    Ok("1e4 triples in range, branch values exact".into())
}

fn roulette() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut counts = [0usize; 3];
    for _ in 0..100_000 {
        counts[roulette_select(&[1.0, 1.0, 2.0], &mut rng).map_err(|e| e.to_string())?] += 1;
    }
    let freq = counts.map(|c| c as f64 / 1e5);
    for (f, want) in freq.iter().zip([0.25, 0.25, 0.5]) {
        check((f - want).abs() <= 0.01, format!("frequencies {freq:?}"))?;
    }
    Ok(format!("frequencies {:.4} {:.4} {:.4}", freq[0], freq[1], freq[2]))
}

fn schedule() -> Outcome {
    let mut s = Schedule::new(300.0, 0.98, 1.4);
    for k in 0..400 {
        let want = 300.0 * 0.98f64.powi(k);
        check(s.temperature() == want, format!("step {k}: {} != {want}", s.temperature()))?;
        s.cool();
    }
    let floor = Schedule::new(300.0, 0.98, 1.4).steps_to_floor();
    check(floor == 266, format!("floor crossed at step {floor}"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for temp in [1e-9, 1.4, 300.0] {
        check(acceptance_probability(0.0, temp) == 1.0, "P(0) != 1")?;
        for _ in 0..1000 {
            check(lidar_gsa::gsa::metropolis_accept(0.0, temp, &mut rng), "rejected a zero-delta proposal")?;
        }
    }
    Ok("Temp0*lambda^k exact, floor at step 266, zero-delta always accepted".into())
}

fn anchors(
    scenes: &[Scene],
    bench: &lidar_gsa::Result<Vec<AttackResult>>,
    det: &dyn Detector,
    cfg: &AttackConfig,
) -> Outcome {
    let results = bench.as_ref().map_err(|e| e.to_string())?;
    let origin = cfg.scan.origin;
    let err = |e: lidar_gsa::Error| e.to_string();
    let mut cases = Vec::new();
    for (i, (scene, r)) in scenes.iter().zip(results).take(5).enumerate() {
        let base = &r.verdict;
        let (s, p) = shifted_case(scene, &r.best_points, 0.0, origin);
        check(&judge(&s, &p, det, cfg).map_err(err)? == base, format!("scene {i}: zero offset"))?;
        let (s, p) = rotated_case(scene, &r.best_points, 0.0);
        check(&judge(&s, &p, det, cfg).map_err(err)? == base, format!("scene {i}: zero angle"))?;
        let merged = r.adversarial_cloud(scene);
        let kept = srs_filter(&merged, &SrsConfig::count(0, 9)).map_err(err)?;
        let v = classify_verdict(&det.detect(&kept).map_err(err)?, &scene.label, &scene.gt_box, det.info(), cfg.iou_gate);
        check(&v == base, format!("scene {i}: zero removal"))?;
        cases.push(SweepCase {
            scene,
            points: &r.best_points,
        });
    }
    let wins = results.iter().take(5).filter(|r| r.success).count();
    for (name, report) in [
        ("distance", sweep_distance(&cases, det, cfg, &[0.0]).map_err(err)?),
        ("angle", sweep_angle(&cases, det, cfg, &[0.0]).map_err(err)?),
        ("srs", sweep_srs(&cases, det, cfg, &[0], 3).map_err(err)?),
    ] {
        let row = &report.rows[0];
        let trials = if name == "srs" { 3 } else { 1 };
        check(row.successes == wins * trials, format!("{name} zero row: {} successes", row.successes))?;
    }
    Ok(format!("zero rows reproduce all 5 baseline verdicts ({wins} successes)"))
}

fn srs_stats() -> Outcome {
    let mut worst: f64 = 0.0;
    for (n, k) in [(1000usize, 17usize), (60, 3)] {
        let cloud: PointCloud = (0..n).map(|i| Point3::with_intensity(i as f64, 0.0, 0.0, 0.0)).collect();
        let mut survived = vec![0u32; n];
        for seed in 0..10_000u64 {
            let kept = srs_filter(&cloud, &SrsConfig::count(k, seed)).map_err(|e| e.to_string())?;
            check(kept.len() == n - k, format!("n={n} k={k} seed={seed}: kept {}", kept.len()))?;
            for p in kept.iter() {
                survived[p.x as usize] += 1;
            }
        }
        let want = (n - k) as f64 / n as f64;
        for (i, &c) in survived.iter().enumerate() {
            let dev = (c as f64 / 1e4 - want).abs();
            worst = worst.max(dev);
            check(dev <= 0.01, format!("n={n} k={k}: point {i} survived {c}/10000, want {want:.4}"))?;
        }
    }
    Ok(format!("sizes exact, largest survival deviation {worst:.4}"))
}

fn determinism() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_lidar-gsa");
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let root = tmp.path();
    let run = |args: &[&str]| -> Result<i32, String> {
        let o = Command::new(bin).args(args).output().map_err(|e| e.to_string())?;
        o.status.code().ok_or_else(|| "killed".to_string())
    };
    let sdir = root.join("scenes");
    let code = run(&["scenes", "--out", sdir.to_str().unwrap(), "--count", "1"])?;
    check(code == 0, format!("scenes exited {code}"))?;
    let scene = sdir.join("scene_00.json");
    for out in ["a", "b"] {
        let code = run(&[
            "attack", "--scene", scene.to_str().unwrap(), "--out", root.join(out).to_str().unwrap(), "--seed", "42",
        ])?;
        check(code == 0 || code == 3, format!("attack exited {code}"))?;
    }
    for f in ["result.json", "adv.bin", "perturbation.stl"] {
        let a = fs::read(root.join("a").join(f)).map_err(|e| e.to_string())?;
        let b = fs::read(root.join("b").join(f)).map_err(|e| e.to_string())?;
        check(!a.is_empty() && a == b, format!("{f} differs"))?;
    }
    Ok("result.json, adv.bin, perturbation.stl byte-identical".into())
}
