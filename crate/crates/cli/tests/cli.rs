use std::fs;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

const BIN: &str = env!("CARGO_BIN_EXE_lidar-gsa");
const STUB: &str = env!("CARGO_BIN_EXE_oracle-stub");

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("spawn lidar-gsa")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Writes two benchmark scenes into `dir` and returns the first scene file.
fn scenes(dir: &Path) -> PathBuf {
    let o = run(&["scenes", "--out", s(dir), "--count", "2"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    dir.join("scene_00.json")
}

#[test]
fn attack_outputs_are_byte_identical_for_a_fixed_seed() {
    let tmp = tempfile::tempdir().unwrap();
    let scene = scenes(tmp.path());
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    for out in [&a, &b] {
        let o = run(&["attack", "--scene", s(&scene), "--out", s(out), "--seed", "11"]);
        assert!(matches!(code(&o), 0 | 3), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for f in ["result.json", "adv.bin", "perturbation.stl"] {
        let x = fs::read(a.join(f)).unwrap();
        assert!(!x.is_empty(), "{f} is empty");
        assert_eq!(x, fs::read(b.join(f)).unwrap(), "{f} differs");
    }
    let r: serde_json::Value = serde_json::from_slice(&fs::read(a.join("result.json")).unwrap()).unwrap();
    assert_eq!(r["seed"], 11);
}

#[test]
fn missing_scene_exits_10_and_names_the_path() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("no_such_scene.json");
    let o = run(&["attack", "--scene", s(&missing), "--out", s(&tmp.path().join("o"))]);
    assert_eq!(code(&o), 10);
    assert!(String::from_utf8_lossy(&o.stderr).contains("no_such_scene.json"));
}

#[test]
fn malformed_config_exits_10() {
    let tmp = tempfile::tempdir().unwrap();
    let scene = scenes(tmp.path());
    let cfg = tmp.path().join("bad.toml");
    fs::write(&cfg, "population = \"many\"\n").unwrap();
    let o = run(&["attack", "--scene", s(&scene), "--config", s(&cfg), "--out", s(tmp.path())]);
    assert_eq!(code(&o), 10);
}

#[test]
fn tiny_budget_without_success_exits_12() {
    let tmp = tempfile::tempdir().unwrap();
    let scene = scenes(tmp.path());
    let cfg = tmp.path().join("tiny.toml");
    fs::write(&cfg, "eval_budget = 25\n").unwrap();
    let o = run(&["attack", "--scene", s(&scene), "--config", s(&cfg), "--out", s(&tmp.path().join("o"))]);
    let r: serde_json::Value = serde_json::from_slice(&fs::read(tmp.path().join("o/result.json")).unwrap()).unwrap();
    if r["success"] == true {
        assert_eq!(code(&o), 0);
    } else {
        assert_eq!(code(&o), 12);
        assert_eq!(r["stop_reason"]["kind"], "budget_exhausted");
    }
}

#[test]
fn oracle_check_passes_against_the_stub() {
    let o = run(&["oracle-check", "--oracle", &format!("exec:{STUB}")]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn oracle_check_fails_with_11_on_mismatched_ids() {
    let o = run(&["oracle-check", "--oracle", &format!("exec:{STUB} --corrupt-ids")]);
    assert_eq!(code(&o), 11);
}

#[test]
fn oracle_check_over_tcp() {
    let mut child = Command::new(STUB)
        .args(["--tcp", "127.0.0.1:0"])
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    let mut line = String::new();
    BufReader::new(child.stdout.take().unwrap()).read_line(&mut line).unwrap();
    let o = run(&["oracle-check", "--oracle", &format!("tcp:{}", line.trim())]);
    let _ = child.kill();
    let _ = child.wait();
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn unreachable_tcp_oracle_exits_11() {
    let port = std::net::TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let o = run(&["oracle-check", "--oracle", &format!("tcp:127.0.0.1:{port}")]);
    assert_eq!(code(&o), 11);
}

#[test]
fn scan_is_deterministic_and_rejects_bad_meshes() {
    let tmp = tempfile::tempdir().unwrap();
    let scene = scenes(tmp.path());
    let a = tmp.path().join("a");
    run(&["attack", "--scene", s(&scene), "--out", s(&a), "--seed", "3"]);
    let stl = a.join("perturbation.stl");
    let (x, y) = (tmp.path().join("x.bin"), tmp.path().join("y.bin"));
    for out in [&x, &y] {
        assert_eq!(code(&run(&["scan", "--mesh", s(&stl), "--out", s(out)])), 0);
    }
    assert_eq!(fs::read(&x).unwrap(), fs::read(&y).unwrap());
    assert_eq!(fs::read(&x).unwrap().len() % 16, 0);

    let bad = tmp.path().join("bad.stl");
    fs::write(&bad, b"solid nothing").unwrap();
    assert_eq!(code(&run(&["scan", "--mesh", s(&bad), "--out", s(&x)])), 10);
}

#[test]
fn defend_with_zero_fraction_is_identity() {
    let tmp = tempfile::tempdir().unwrap();
    scenes(tmp.path());
    let input = tmp.path().join("scene_00_background.bin");
    let out = tmp.path().join("kept.bin");
    let o = run(&["defend", "--input", s(&input), "--fraction", "0", "--out", s(&out)]);
    assert_eq!(code(&o), 0);
    assert_eq!(fs::read(&input).unwrap(), fs::read(&out).unwrap());

    let o = run(&["defend", "--input", s(&input), "--count", "10", "--seed", "1", "--out", s(&out)]);
    assert_eq!(code(&o), 0);
    assert_eq!(fs::read(&out).unwrap().len() + 160, fs::read(&input).unwrap().len());
}

#[test]
fn unwritable_output_exits_13() {
    let tmp = tempfile::tempdir().unwrap();
    scenes(tmp.path());
    let input = tmp.path().join("scene_00_background.bin");
    let blocker = tmp.path().join("file");
    fs::write(&blocker, b"x").unwrap();
    let out = blocker.join("kept.bin");
    let o = run(&["defend", "--input", s(&input), "--fraction", "0", "--out", s(&out)]);
    assert_eq!(code(&o), 13);
}

#[test]
fn sweep_and_emit_dataset() {
    let tmp = tempfile::tempdir().unwrap();
    let scene = scenes(tmp.path());
    let a = tmp.path().join("a");
    run(&["attack", "--scene", s(&scene), "--out", s(&a), "--seed", "5"]);
    let result = a.join("result.json");
    let sw = tmp.path().join("sweep");
    let plot = sw.join("plot.json");
    let o = run(&[
        "sweep", "--kind", "distance", "--scene", s(&scene), "--result", s(&result),
        "--values=-1,0,1", "--out", s(&sw), "--plot-data", s(&plot),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(sw.join("distance.csv")).unwrap();
    assert_eq!(csv.lines().filter(|l| l.starts_with("distance=")).count(), 3);
    // the zero-offset row reproduces the attack outcome from the saved result
    let r: serde_json::Value = serde_json::from_slice(&fs::read(&result).unwrap()).unwrap();
    let zero = csv.lines().find(|l| l.starts_with("distance=0,")).unwrap();
    let wins: u32 = zero.split(',').nth(2).unwrap().parse().unwrap();
    assert_eq!(wins == 1, r["success"] == true);
    let p: serde_json::Value = serde_json::from_slice(&fs::read(&plot).unwrap()).unwrap();
    assert_eq!(p["x"].as_array().unwrap().len(), 3);

    let o = run(&["sweep", "--kind", "sideways", "--scene", s(&scene), "--values", "1", "--out", s(&sw)]);
    assert_eq!(code(&o), 10);

    let ds = tmp.path().join("ds");
    let o = run(&["emit-dataset", "--scene", s(&scene), "--result", s(&result), "--mix", "1", "--out", s(&ds)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let m: serde_json::Value = serde_json::from_slice(&fs::read(ds.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["entries"].as_array().unwrap().len(), 2);
}
