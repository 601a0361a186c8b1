//! `lidar-gsa`: perturbation-point attacks on LiDAR detectors.

mod exit;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lidar_gsa::defense::{emit_adv_training_set, srs_filter, SrsConfig};
use lidar_gsa::gsa::{run_attack, AttackConfig, AttackResult, StopReason};
use lidar_gsa::harness::{run_benchmark, run_sweep, SweepCase, SweepKind, SweepSpec};
use lidar_gsa::oracle::wire::{parse_transcript, GOLDEN_STUB_TRANSCRIPT};
use lidar_gsa::oracle::{check_conformance, open_oracle, Detector, OracleSpec, DEFAULT_TIMEOUT};
use lidar_gsa::pointcloud::{load_kitti_bin, save_kitti_bin, PointCloud};
use lidar_gsa::scanner::{build_perturbation_mesh, export_stl, load_stl, simulate_scan, ScanConfig};
use lidar_gsa::scene::Scene;
use lidar_gsa::synthetic::synthetic_scenes;
use lidar_gsa::synthetic::{BENCHMARK_SCENES, BENCHMARK_SEED};

use exit::{input, output, Failure, CONFIG, OK};

const EXIT_CODES: &str = "\
Exit codes:
  0   success (attack found an adversarial example, or command completed)
  3   attack completed without success
  10  configuration, argument or input file error
  11  oracle transport or protocol error
  12  oracle evaluation budget exhausted without success
  13  output could not be written";

#[derive(Parser)]
#[command(name = "lidar-gsa", version, about = "Black-box perturbation-point attacks on LiDAR detectors", after_help = EXIT_CODES)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Search for adversarial perturbation points for one scene.
    Attack {
        #[arg(long)]
        scene: PathBuf,
        /// Attack settings (TOML or JSON); defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "builtin:voxel0.2")]
        oracle: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Simulate a LiDAR scan of an STL mesh.
    Scan {
        #[arg(long)]
        mesh: PathBuf,
        /// Scanner description (JSON); the 64-beam default applies when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output KITTI .bin file.
        #[arg(long)]
        out: PathBuf,
    },
    /// Re-test a finished attack under distance, angle or random-sampling changes.
    Sweep {
        /// distance (meters), angle (degrees) or srs (removed points).
        #[arg(long)]
        kind: String,
        #[arg(long)]
        scene: PathBuf,
        /// result.json of a previous attack; the attack is run first when omitted.
        #[arg(long)]
        result: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "builtin:voxel0.2")]
        oracle: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required = true)]
        values: Vec<f64>,
        #[arg(long, default_value_t = 1)]
        trials: usize,
        #[arg(long)]
        out: PathBuf,
        /// Also write x/y series for plotting to this file.
        #[arg(long)]
        plot_data: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Apply the random-sampling defense to a point cloud.
    Defend {
        /// Input KITTI .bin file.
        #[arg(long)]
        input: PathBuf,
        #[arg(long, conflicts_with = "fraction", required_unless_present = "fraction")]
        count: Option<usize>,
        #[arg(long)]
        fraction: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write clean and adversarial clouds plus a manifest for training.
    EmitDataset {
        /// Scene files, paired by position with --result.
        #[arg(long, required = true)]
        scene: Vec<PathBuf>,
        #[arg(long, required = true)]
        result: Vec<PathBuf>,
        /// Fraction of scenes that also get an adversarial copy.
        #[arg(long)]
        mix: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Replay the golden protocol transcript against an external oracle.
    OracleCheck {
        /// exec:<command> or tcp:<host>:<port>.
        #[arg(long)]
        oracle: String,
        /// Transcript to replay instead of the built-in one.
        #[arg(long)]
        transcript: Option<PathBuf>,
    },
    /// Write the synthetic benchmark scenes as scene files.
    Scenes {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = BENCHMARK_SCENES)]
        count: usize,
        #[arg(long, default_value_t = BENCHMARK_SEED)]
        seed: u64,
    },
    /// Attack every synthetic benchmark scene and report the success rate.
    Benchmark {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "builtin:voxel0.2")]
        oracle: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = BENCHMARK_SCENES)]
        count: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match run(cli.command) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("lidar-gsa: {}", f.message);
            f.code
        }
    };
    ExitCode::from(code)
}

fn run(cmd: Command) -> Result<u8, Failure> {
    match cmd {
        Command::Attack {
            scene,
            config,
            oracle,
            out,
            seed,
        } => cmd_attack(&scene, config.as_deref(), &oracle, &out, seed),
        Command::Scan { mesh, config, out } => cmd_scan(&mesh, config.as_deref(), &out),
        Command::Sweep {
            kind,
            scene,
            result,
            config,
            oracle,
            values,
            trials,
            out,
            plot_data,
            seed,
        } => {
            let spec = SweepSpec {
                kind: kind.parse::<SweepKind>().map_err(input)?,
                values,
                trials_per_value: trials,
            };
            cmd_sweep(&spec, &scene, result.as_deref(), config.as_deref(), &oracle, &out, plot_data.as_deref(), seed)
        }
        Command::Defend {
            input: path,
            count,
            fraction,
            seed,
            out,
        } => {
            let cfg = match (count, fraction) {
                (Some(k), _) => SrsConfig::count(k, seed),
                (None, Some(f)) => SrsConfig::fraction(f, seed),
                (None, None) => unreachable!("clap requires one of them"),
            };
            let cloud = load_kitti_bin(&path).map_err(input)?;
            let kept = srs_filter(&cloud, &cfg).map_err(input)?;
            save_kitti_bin(&kept, &out).map_err(output)?;
            println!("kept {} of {} points (seed={seed})", kept.len(), cloud.len());
            Ok(OK)
        }
        Command::EmitDataset {
            scene,
            result,
            mix,
            out,
        } => {
            if scene.len() != result.len() {
                return Err(Failure::new(CONFIG, "--scene and --result must be given the same number of times"));
            }
            let scenes = scene.iter().map(|p| Scene::load(p).map_err(input)).collect::<Result<Vec<_>, _>>()?;
            let results = result.iter().map(|p| load_result(p)).collect::<Result<Vec<_>, _>>()?;
            let manifest = emit_adv_training_set(&scenes, &results, mix, &out).map_err(output)?;
            println!("wrote {} entries to {}", manifest.entries.len(), out.display());
            Ok(OK)
        }
        Command::OracleCheck { oracle, transcript } => cmd_oracle_check(&oracle, transcript.as_deref()),
        Command::Scenes { out, count, seed } => {
            let scenes = synthetic_scenes(count, seed).map_err(input)?;
            for (i, s) in scenes.iter().enumerate() {
                s.save(&out, &format!("scene_{i:02}")).map_err(output)?;
            }
            println!("wrote {count} scenes to {} (seed={seed})", out.display());
            Ok(OK)
        }
        Command::Benchmark {
            config,
            oracle,
            out,
            seed,
            count,
        } => cmd_benchmark(config.as_deref(), &oracle, &out, seed, count),
    }
}

fn load_config(path: Option<&Path>, seed: Option<u64>) -> Result<AttackConfig, Failure> {
    let mut cfg = match path {
        Some(p) => AttackConfig::load(p).map_err(input)?,
        None => AttackConfig::default(),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    cfg.validate().map_err(input)?;
    Ok(cfg)
}

fn open(spec: &str) -> Result<Box<dyn Detector>, Failure> {
    let spec: OracleSpec = spec.parse().map_err(input)?;
    open_oracle(&spec).map_err(input)
}

fn load_result(path: &Path) -> Result<AttackResult, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::new(CONFIG, format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::new(CONFIG, format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, bytes: impl AsRef<[u8]>) -> Result<(), Failure> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Failure::new(exit::OUTPUT, format!("{}: {e}", dir.display())))?;
    }
    fs::write(path, bytes).map_err(|e| Failure::new(exit::OUTPUT, format!("{}: {e}", path.display())))
}

/// Writes result.json, adv.bin and perturbation.stl.
fn write_attack_outputs(dir: &Path, scene: &Scene, cfg: &AttackConfig, r: &AttackResult) -> Result<(), Failure> {
    let json = serde_json::to_string_pretty(r).expect("result serializes");
    write_file(&dir.join("result.json"), json + "\n")?;
    save_kitti_bin(&r.adversarial_cloud(scene), dir.join("adv.bin")).map_err(output)?;
    let mesh = build_perturbation_mesh(&r.best_points, cfg.mesh_radius).map_err(input)?;
    export_stl(&mesh, dir.join("perturbation.stl")).map_err(output)
}

fn cmd_attack(scene: &Path, config: Option<&Path>, oracle: &str, out: &Path, seed: Option<u64>) -> Result<u8, Failure> {
    let scene = Scene::load(scene).map_err(input)?;
    let cfg = load_config(config, seed)?;
    let det = open(oracle)?;
    let r = run_attack(&scene, det.as_ref(), &cfg).map_err(input)?;
    write_attack_outputs(out, &scene, &cfg, &r)?;
    println!(
        "seed={} success={} verdict={:?} fitness={:.4} oracle_calls={} generations={} stop={:?}",
        r.seed, r.success, r.verdict.case, r.fitness, r.oracle_calls, r.generations_run, r.stop_reason
    );
    Ok(exit::for_attack(&r))
}

fn cmd_scan(mesh: &Path, config: Option<&Path>, out: &Path) -> Result<u8, Failure> {
    let mesh = load_stl(mesh).map_err(input)?;
    let cfg = match config {
        Some(p) => ScanConfig::load(p).map_err(input)?,
        None => ScanConfig::default(),
    };
    let cloud = simulate_scan(&mesh, &cfg);
    save_kitti_bin(&cloud, out).map_err(output)?;
    println!("{} points", cloud.len());
    Ok(OK)
}

#[allow(clippy::too_many_arguments)]
fn cmd_sweep(
    spec: &SweepSpec,
    scene_path: &Path,
    result: Option<&Path>,
    config: Option<&Path>,
    oracle: &str,
    out: &Path,
    plot_data: Option<&Path>,
    seed: Option<u64>,
) -> Result<u8, Failure> {
    let scene = Scene::load(scene_path).map_err(input)?;
    let cfg = load_config(config, seed)?;
    let det = open(oracle)?;
    let points: PointCloud = match result {
        Some(p) => load_result(p)?.best_points,
        None => {
            let r = run_attack(&scene, det.as_ref(), &cfg).map_err(input)?;
            if let StopReason::OracleError { message } = &r.stop_reason {
                return Err(Failure::new(exit::ORACLE, message.clone()));
            }
            r.best_points
        }
    };
    let case = SweepCase {
        scene: &scene,
        points: &points,
    };
    let report = run_sweep(spec, &[case], det.as_ref(), &cfg).map_err(input)?;
    report.write(out, spec.kind.name()).map_err(output)?;
    if let Some(p) = plot_data {
        write_file(p, serde_json::to_string_pretty(&report.plot_data()).expect("plot data serializes") + "\n")?;
    }
    print!("{}", report.to_csv());
    Ok(OK)
}

fn cmd_oracle_check(oracle: &str, transcript: Option<&Path>) -> Result<u8, Failure> {
    let spec: OracleSpec = oracle.parse().map_err(input)?;
    let OracleSpec::External(endpoint) = spec else {
        return Err(Failure::new(CONFIG, "oracle-check needs an exec: or tcp: oracle"));
    };
    let text = match transcript {
        Some(p) => fs::read_to_string(p).map_err(|e| Failure::new(CONFIG, format!("{}: {e}", p.display())))?,
        None => GOLDEN_STUB_TRANSCRIPT.to_string(),
    };
    let steps = parse_transcript(&text).map_err(|m| Failure::new(CONFIG, m))?;
    let n = check_conformance(&endpoint, &steps, DEFAULT_TIMEOUT).map_err(input)?;
    println!("conformant: {n} responses matched");
    Ok(OK)
}

fn cmd_benchmark(config: Option<&Path>, oracle: &str, out: &Path, seed: Option<u64>, count: usize) -> Result<u8, Failure> {
    let cfg = load_config(config, seed)?;
    let det = open(oracle)?;
    let scenes = synthetic_scenes(count, BENCHMARK_SEED).map_err(input)?;
    let (results, report) = run_benchmark(&scenes, det.as_ref(), &cfg, |i, r| {
        eprintln!(
            "scene {i:02}: success={} calls={} generations={}",
            r.success, r.oracle_calls, r.generations_run
        );
    })
    .map_err(input)?;
    for (i, (s, r)) in scenes.iter().zip(&results).enumerate() {
        let dir = out.join(format!("scene_{i:02}"));
        s.save(&dir, "scene").map_err(output)?;
        let scene_cfg = AttackConfig {
            seed: r.seed,
            ..cfg.clone()
        };
        write_attack_outputs(&dir, s, &scene_cfg, r)?;
    }
    report.write(out, "benchmark").map_err(output)?;
    print!("{}", report.to_csv());
    Ok(OK)
}
