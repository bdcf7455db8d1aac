use couette::xrun::{ExperimentKind, RunConfig};
use std::path::Path;
use std::process::{Command, Output};

fn couette(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_couette")).args(args).output().unwrap()
}

fn write_cfg(dir: &Path, name: &str, cfg: &RunConfig) -> String {
    let p = dir.join(name);
    std::fs::write(&p, cfg.to_toml().unwrap()).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn linear_prints_csv() {
    let o = couette(&["linear", "--mode", "1,5,-1", "--tmax", "10"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.starts_with("t,u1,u2,u3,q1,q2,q3,q2_closed,divergence_defect"));
    assert!(text.lines().count() > 50);
    assert_eq!(couette(&["linear", "--mode", "0,0,0"]).status.code(), Some(2));
}

#[test]
fn toy_and_multiplier_dump() {
    let o = couette(&["toy", "--k", "2", "--eta", "100", "--eps", "0"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = couette(&["multiplier-dump", "--eta", "200", "--kp", "3", "--kp", "5"]);
    assert!(o.status.success());
    let head = String::from_utf8(o.stdout).unwrap().lines().next().unwrap().to_string();
    assert_eq!(head, "t,log_wbar,log_w,log_w3_3,log_w3_5");
}

#[test]
fn lemma_check_reports() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("lemmas.toml");
    let o = couette(&["lemma-check", "--id", "TriTriv", "--n-random", "500", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(std::fs::read_to_string(out).unwrap().contains("TriTriv"));
    assert_eq!(couette(&["lemma-check", "--id", "noSuchLemma"]).status.code(), Some(2));
}

#[test]
fn streak_then_coords() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = RunConfig::new(ExperimentKind::Streak);
    (cfg.numerics.ny, cfg.numerics.nz, cfg.numerics.tmax) = (16, 16, 5.0);
    let c = write_cfg(dir.path(), "streak.toml", &cfg);
    let sd = dir.path().join("streak");
    let o = couette(&["streak", "--config", &c, "--out", sd.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["config.toml", "series.csv", "report.toml"] {
        assert!(sd.join(f).is_file());
    }
    let cd = dir.path().join("coords");
    let o = couette(&["coords", "--streak-dir", sd.to_str().unwrap(), "--out", cd.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(std::fs::read_to_string(cd.join("report.toml")).unwrap().contains("g_constant"));
}

#[test]
fn dns_resume_matches_uninterrupted() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = RunConfig::new(ExperimentKind::Dns);
    cfg.physics.eps = 0.05;
    cfg.physics.nu = 1e-2;
    (cfg.numerics.nx, cfg.numerics.ny, cfg.numerics.nz) = (8, 16, 8);
    (cfg.numerics.dt, cfg.numerics.tmax) = (0.1, 2.0);
    cfg.cadence = 1;
    let c = write_cfg(dir.path(), "full.toml", &cfg);
    let full = dir.path().join("full");
    let o = couette(&["dns", "--config", &c, "--out", full.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(full.join("events.log").is_file());

    cfg.numerics.tmax = 1.0;
    let c1 = write_cfg(dir.path(), "part.toml", &cfg);
    let part = dir.path().join("part");
    assert!(couette(&["dns", "--config", &c1, "--out", part.to_str().unwrap()]).status.success());
    let o = couette(&["dns", "--config", &c, "--out", part.to_str().unwrap(), "--resume"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let read = |d: &Path| std::fs::read_to_string(d.join("series.csv")).unwrap();
    assert_eq!(read(&full), read(&part));

    // a different config cannot resume this run
    cfg.seed = 9;
    let c2 = write_cfg(dir.path(), "other.toml", &cfg);
    assert_eq!(couette(&["dns", "--config", &c2, "--out", part.to_str().unwrap(), "--resume"]).status.code(), Some(2));
}

#[test]
fn sweep_and_rate_study() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = RunConfig::new(ExperimentKind::Sweep);
    (cfg.numerics.nx, cfg.numerics.ny, cfg.numerics.nz) = (8, 16, 8);
    (cfg.numerics.dt, cfg.numerics.tmax) = (0.1, 1.0);
    let c = write_cfg(dir.path(), "sweep.toml", &cfg);
    let out = dir.path().join("sweep");
    let o = couette(&["sweep", "--config", &c, "--nu", "1e-2", "--eps", "1e-4", "1e-3", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8(o.stdout).unwrap().contains("gamma undetermined"));
    assert_eq!(std::fs::read_to_string(out.join("series.csv")).unwrap().lines().count(), 3);

    let mut r = RunConfig::new(ExperimentKind::RateStudy);
    (r.numerics.ny, r.numerics.nz, r.numerics.ly) = (16, 16, std::f64::consts::TAU);
    r.physics.nu = 1e-4;
    let c = write_cfg(dir.path(), "rate.toml", &r);
    let o = couette(&["rate-study", "--kind", "lift-up", "--config", &c]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8(o.stdout).unwrap().contains("pass = true"));
}
