use std::path::{Path, PathBuf};
use std::process::Command;

use holodof::harness::config::{Config, KernelKind};
use holodof::harness::experiments::{run_edof, run_spectrum};
use holodof::harness::output::{sha256_hex, Metadata};

fn config_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn small() -> Config {
    Config::load(&config_path("small.toml")).unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("holodof-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

fn cli(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_holodof")).args(args).output().unwrap()
}

#[test]
fn shipped_configs_parse_and_round_trip() {
    for name in ["paraxial.toml", "nonparaxial.toml", "strip.toml", "sweep.toml", "small.toml"] {
        let cfg = Config::load(&config_path(name)).unwrap();
        let again = Config::from_toml(&cfg.canonical()).unwrap();
        assert_eq!(cfg, again, "{name}");
        cfg.deployment().unwrap();
    }
}

#[test]
fn paraxial_config_is_the_reference_pose() {
    let cfg = Config::load(&config_path("paraxial.toml")).unwrap();
    let dep = cfg.deployment().unwrap();
    let r = holodof::closedform::edof_paraxial(&dep);
    assert!((r.value - 8.0).abs() < 1e-9);
    let cfg = Config::load(&config_path("nonparaxial.toml")).unwrap();
    assert_eq!(cfg.partition(&cfg.deployment().unwrap()).unwrap().len(), 64);
    assert_eq!(cfg.experiment.kernel, KernelKind::Approx);
}

#[test]
fn config_errors_name_the_field() {
    let err = |text: &str| {
        Config::from_toml(text)
            .and_then(|c| c.deployment().map(|_| ()))
            .unwrap_err()
            .to_string()
    };
    let e = err("[deployment]\ncenter = [0, 1, 0]\ndistance = 3.0\n");
    assert!(e.contains("deployment.center"), "{e}");
    let e = err("[deployment]\ntx_sides = [1, 1]\n");
    assert!(e.contains("tx_sides"), "{e}");
    let e = err("[deployment]\ndistance = \"12 parsecs\"\n");
    assert!(e.contains("distance"), "{e}");
}

#[test]
fn csv_is_identical_across_runs() {
    let cfg = small();
    let (a, _) = run_edof(&cfg).unwrap();
    let (b, _) = run_edof(&cfg).unwrap();
    assert_eq!(a.to_csv().unwrap(), b.to_csv().unwrap());
    let (a, _) = run_spectrum(&cfg).unwrap();
    let (b, _) = run_spectrum(&cfg).unwrap();
    assert_eq!(a.to_csv().unwrap(), b.to_csv().unwrap());
}

#[test]
fn metadata_hashes_the_config() {
    let cfg = small();
    let text = cfg.canonical();
    let (t, summary) = run_edof(&cfg).unwrap();
    let m = Metadata::new("edof", &text, 0, &t, summary);
    assert_eq!(m.config_sha256, sha256_hex(&text));
    assert_eq!(m.config_sha256.len(), 64);
    assert_eq!(m.rows, t.rows.len());
}

#[test]
fn cli_writes_csv_and_json_for_each_command() {
    let out = scratch("cli");
    let cfg = config_path("small.toml");
    let cfg = cfg.to_str().unwrap();
    let dir = out.to_str().unwrap();
    for cmd in [
        vec!["edof"],
        vec!["spectrum"],
        vec!["waveforms"],
        vec!["coupling"],
        vec!["polarization", "--r", "1,2"],
        vec!["sweep", "--param", "distance", "--from", "0.5", "--to", "1.0", "--steps", "3", "--closed-only"],
    ] {
        let mut args = vec!["--quiet", "--config", cfg, "--out", dir];
        args.extend(&cmd);
        let o = cli(&args);
        assert!(o.status.success(), "{cmd:?}: {}", String::from_utf8_lossy(&o.stderr));
        let csv = std::fs::read_to_string(out.join(format!("{}.csv", cmd[0]))).unwrap();
        assert!(csv.lines().count() >= 2, "{cmd:?}");
        let json: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(out.join(format!("{}.json", cmd[0]))).unwrap()).unwrap();
        assert_eq!(json["command"], cmd[0]);
        assert_eq!(json["config_sha256"].as_str().unwrap().len(), 64);
    }
    let first = std::fs::read(out.join("edof.csv")).unwrap();
    assert!(cli(&["--quiet", "--config", cfg, "--out", dir, "edof"]).status.success());
    assert_eq!(first, std::fs::read(out.join("edof.csv")).unwrap());
    let _ = std::fs::remove_dir_all(&out);
}

#[test]
fn cli_overrides_change_the_hash() {
    let out = scratch("hash");
    let cfg = config_path("small.toml");
    let (cfg, dir) = (cfg.to_str().unwrap(), out.to_str().unwrap());
    let hash = |extra: &[&str]| {
        let mut args = vec!["--quiet", "--config", cfg, "--out", dir];
        args.extend(extra);
        args.push("edof");
        assert!(cli(&args).status.success());
        let j: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(out.join("edof.json")).unwrap()).unwrap();
        j["config_sha256"].as_str().unwrap().to_string()
    };
    let a = hash(&[]);
    assert_eq!(a, hash(&[]));
    assert_ne!(a, hash(&["--grid-density", "1"]));
    let _ = std::fs::remove_dir_all(&out);
}

#[test]
fn cli_validate_runs_a_single_criterion() {
    let out = scratch("validate");
    let o = cli(&["--out", out.to_str().unwrap(), "validate", "--criterion", "8"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("[PASS] criterion 8"), "{stdout}");
    assert!(out.join("validate.csv").exists());
    let _ = std::fs::remove_dir_all(&out);
}

#[test]
fn cli_reports_bad_input_with_exit_code_two() {
    let bad = scratch("bad");
    std::fs::create_dir_all(&bad).unwrap();
    let p = bad.join("bad.toml");
    std::fs::write(&p, "[deployment]\nalpha = \"sideways\"\n").unwrap();
    let o = cli(&["--config", p.to_str().unwrap(), "--out", bad.to_str().unwrap(), "edof"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("alpha"));
    let o = cli(&["--grid-density", "-1", "--out", bad.to_str().unwrap(), "edof"]);
    assert_eq!(o.status.code(), Some(2));
    let o = cli(&["sweep", "--out", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let _ = std::fs::remove_dir_all(&bad);
}
