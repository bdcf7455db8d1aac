use clap::{Parser, Subcommand, ValueEnum};
use couette::coords::{g_decay_constant, psi_decay_constant, run_streak_fed, CoordLaplacian};
use couette::dns::{run_dns, DnsRecord, DnsSolver, DnsState};
use couette::grid::{Snapshot, VectorField};
use couette::linear::{evolve_mode, q2_factor, ModeState};
use couette::multiplier::lemmas::{verify_lemma, LemmaBox, REGISTERED};
use couette::multiplier::{standard_t_grid, MultiplierProfile, NormParams};
use couette::streak::{run_streak, StreakSolver};
use couette::toymodel::{self, check_supersolution, envelope_data, integrate_toy, ToyParams, Variant, NAMES};
use couette::xrun::{self, Classification, RateKind, RunConfig};
use couette::{Error, Result};
use num_complex::Complex64;
use serde::Serialize;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "couette", version, about = "Perturbations of 3D Couette flow: linear modes, streaks, toy model, DNS")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Evolve one linear mode and compare with the closed forms.
    Linear {
        /// Wavenumber `k,eta,l`.
        #[arg(long, value_delimiter = ',', default_values_t = [1.0, 10.0, 1.0], allow_negative_numbers = true)]
        mode: Vec<f64>,
        #[arg(long, default_value_t = 1e-3)]
        nu: f64,
        #[arg(long, default_value_t = 100.0)]
        tmax: f64,
        #[arg(long)]
        dt: Option<f64>,
        /// Initial velocity (real parts), projected to be solenoidal.
        #[arg(long, value_delimiter = ',', default_values_t = [1.0, 0.0, -1.0], allow_negative_numbers = true)]
        u: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// x-independent run from the configured vortex of amplitude eps.
    Streak {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Six-amplitude model on one critical interval.
    Toy {
        #[arg(long, default_value_t = 2)]
        k: i64,
        /// Defaults to `k - 1` (or `k + 1` when that is zero).
        #[arg(long)]
        kp: Option<i64>,
        #[arg(long, default_value_t = 100.0)]
        eta: f64,
        #[arg(long, default_value_t = 1e-3)]
        nu: f64,
        #[arg(long, default_value_t = 1e-4)]
        eps: f64,
        #[arg(long, default_value_t = 0.0)]
        c0: f64,
        #[arg(long, default_value_t = 10.0)]
        alpha: f64,
        #[arg(long, default_value_t = 8.0)]
        kappa: f64,
        /// Use `kp` in the `Q2_kp` dissipation.
        #[arg(long)]
        kp_dissipation: bool,
        #[arg(long, value_enum, default_value_t = VariantArg::Balanced)]
        variant: VariantArg,
        #[arg(long, default_value_t = 1e-9)]
        rtol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Streak-fed coordinate system. The feed is the streak run in
    /// `streak_dir`, regenerated from its config.
    Coords {
        #[arg(long)]
        streak_dir: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        full: bool,
    },
    /// Full nonlinear run in the shear frame.
    Dns {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Snapshot interval in time units.
        #[arg(long)]
        snapshot_every: Option<f64>,
        /// Continue from the latest snapshot in `out`.
        #[arg(long)]
        resume: bool,
    },
    /// Threshold sweep over (nu, eps).
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, num_args = 1.., required = true)]
        nu: Vec<f64>,
        #[arg(long, num_args = 1.., required = true)]
        eps: Vec<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit one linear-theory rate.
    RateStudy {
        #[arg(long, value_enum)]
        kind: RateArg,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Empirical constants of the registered inequalities.
    LemmaCheck {
        /// Inequality ids; all when omitted.
        #[arg(long)]
        id: Vec<String>,
        #[arg(long, default_value_t = 20000)]
        n_random: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also run on the doubled box and require growth below 2x.
        #[arg(long)]
        double: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tabulate the multiplier weights for one eta.
    MultiplierDump {
        #[arg(long)]
        eta: f64,
        #[arg(long, default_value_t = 8.0)]
        kappa: f64,
        #[arg(long, num_args = 0..)]
        kp: Vec<i64>,
        #[arg(long, default_value_t = 400)]
        n_uniform: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    Balanced,
    Unbalanced,
}

#[derive(Clone, Copy, ValueEnum)]
enum RateArg {
    LiftUp,
    InviscidDamping,
    EnhancedDissipation,
}

fn main() -> ExitCode {
    match run(Cli::parse().cmd) {
        Ok(v) if v.is_empty() => ExitCode::SUCCESS,
        Ok(v) => {
            for m in v {
                eprintln!("violation: {m}");
            }
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn toml_of<T: Serialize>(v: &T) -> Result<String> {
    toml::to_string(v).map_err(|e| Error::Config(e.to_string()))
}

fn emit_csv<R: Serialize>(out: Option<&Path>, rows: &[R]) -> Result<()> {
    match out {
        Some(p) => xrun::write_csv(p, rows),
        None => {
            let mut w = csv::Writer::from_writer(std::io::stdout());
            for r in rows {
                w.serialize(r).map_err(|e| Error::Format(e.to_string()))?;
            }
            w.flush()?;
            Ok(())
        }
    }
}

/// Returns the list of invariant violations.
fn run(cmd: Cmd) -> Result<Vec<String>> {
    match cmd {
        Cmd::Linear { mode, nu, tmax, dt, u, out } => linear(&mode, nu, tmax, dt, &u, out.as_deref()),
        Cmd::Streak { config, out } => streak(&RunConfig::load(&config)?, &out),
        Cmd::Toy { k, kp, eta, nu, eps, c0, alpha, kappa, kp_dissipation, variant, rtol, out } => {
            let v = match variant {
                VariantArg::Balanced => Variant::Balanced,
                VariantArg::Unbalanced => Variant::Unbalanced,
            };
            let mut p = ToyParams::new(k, eta, eps, nu);
            p.kp = kp.unwrap_or(p.kp);
            p.c0 = c0;
            p.alpha = alpha;
            p.kp_dissipation = kp_dissipation;
            toy(p, kappa, v, rtol, out.as_deref())
        }
        Cmd::Coords { streak_dir, out, full } => {
            coords(&RunConfig::load(&streak_dir.join("config.toml"))?, &out, if full { CoordLaplacian::Full } else { CoordLaplacian::Tilde })
        }
        Cmd::Dns { config, out, snapshot_every, resume } => dns(&RunConfig::load(&config)?, &out, snapshot_every, resume),
        Cmd::Sweep { config, nu, eps, out } => {
            let cfg = RunConfig::load(&config)?;
            let rep = xrun::threshold_sweep(&nu, &eps, &cfg)?;
            xrun::write_run_dir(&out, &cfg, &rep.cells, &rep)?;
            for b in &rep.boundaries {
                println!("nu {:e}: eps_crit {:.4e} in [{:e}, {:e}]", b.nu, b.eps_crit(), b.eps_stable, b.eps_unstable);
            }
            match (rep.gamma, rep.gamma_band) {
                (Some(g), Some((lo, hi))) => println!("gamma {g:.4} band [{lo:.4}, {hi:.4}]"),
                _ => println!("gamma undetermined"),
            }
            Ok(rep.violations)
        }
        Cmd::RateStudy { kind, config, out } => {
            let cfg = RunConfig::load(&config)?;
            let kind = match kind {
                RateArg::LiftUp => RateKind::LiftUp,
                RateArg::InviscidDamping => RateKind::InviscidDamping,
                RateArg::EnhancedDissipation => RateKind::EnhancedDissipation,
            };
            let rep = xrun::rate_study(kind, &cfg)?;
            let text = toml_of(&rep)?;
            match out {
                Some(p) => std::fs::write(p, &text)?,
                None => print!("{text}"),
            }
            Ok(if rep.pass { vec![] } else { vec![format!("{:?}: fitted {} vs target {}", rep.kind, rep.fitted, rep.target)] })
        }
        Cmd::LemmaCheck { id, n_random, seed, double, out } => lemma_check(&id, n_random, seed, double, out.as_deref()),
        Cmd::MultiplierDump { eta, kappa, kp, n_uniform, out } => multiplier_dump(eta, kappa, &kp, n_uniform, out.as_deref()),
    }
}

#[derive(Serialize)]
struct LinearRow {
    t: f64,
    u1: f64,
    u2: f64,
    u3: f64,
    q1: f64,
    q2: f64,
    q3: f64,
    q2_closed: f64,
    divergence_defect: f64,
}

fn linear(mode: &[f64], nu: f64, tmax: f64, dt: Option<f64>, u: &[f64], out: Option<&Path>) -> Result<Vec<String>> {
    let &[k, eta, l] = mode else {
        return Err(Error::Config("--mode takes k,eta,l".into()));
    };
    if u.len() != 3 {
        return Err(Error::Config("--u takes three components".into()));
    }
    // solenoidal part of the given vector
    let n2 = k * k + eta * eta + l * l;
    if n2 == 0.0 {
        return Err(Error::Domain("the zero mode has no linear dynamics".into()));
    }
    let d = (k * u[0] + eta * u[1] + l * u[2]) / n2;
    let v = [u[0] - d * k, u[1] - d * eta, u[2] - d * l].map(|x| Complex64::new(x, 0.0));
    let s0 = ModeState::from_velocity(k, eta, l, v, 0.0)?;
    let dt = dt.unwrap_or_else(|| couette::linear::default_dt(k, eta, l, 0.0, tmax));
    let traj = evolve_mode(&s0, nu, tmax, dt, ((0.1 / dt).round() as usize).max(1));
    let mut bad = Vec::new();
    let rows: Vec<LinearRow> = traj
        .iter()
        .map(|s| {
            let vel = s.velocity().map(|c| c.norm());
            let ratio = if s0.q[1].norm() > 0.0 { s.q[1].norm() / s0.q[1].norm() } else { 0.0 };
            let closed = q2_factor(k, eta, l, nu, 0.0, s.t);
            if s0.q[1].norm() > 0.0 && (ratio - closed).abs() > 1e-8 * closed.max(f64::MIN_POSITIVE) && bad.is_empty() {
                bad.push(format!("q2 ratio {ratio} differs from {closed} at t = {}", s.t));
            }
            LinearRow {
                t: s.t,
                u1: vel[0],
                u2: vel[1],
                u3: vel[2],
                q1: s.q[0].norm(),
                q2: s.q[1].norm(),
                q3: s.q[2].norm(),
                q2_closed: closed * s0.q[1].norm(),
                divergence_defect: s.divergence_defect(),
            }
        })
        .collect();
    emit_csv(out, &rows)?;
    Ok(bad)
}

fn streak(cfg: &RunConfig, out: &Path) -> Result<Vec<String>> {
    let s0 = xrun::streak_initial(cfg)?;
    let solver = StreakSolver::new(s0.grid(), cfg.physics.nu)?;
    let (_, rec) = run_streak(&solver, &s0, cfg.numerics.dt, cfg.numerics.tmax, cfg.cadence)?;
    let bad: Vec<String> = rec
        .windows(2)
        .filter(|w| w[1].u23_norm > w[0].u23_norm * (1.0 + 1e-12))
        .map(|w| format!("2D energy increased at t = {}", w[1].t))
        .take(1)
        .collect();
    #[derive(Serialize)]
    struct Report {
        config_hash: String,
        code_version: &'static str,
        u1_final: f64,
    }
    let rep = Report { config_hash: cfg.hash()?, code_version: xrun::CODE_VERSION, u1_final: rec.last().map_or(0.0, |r| r.u1_norm) };
    xrun::write_run_dir(out, cfg, &rec, &rep)?;
    Ok(bad)
}

#[derive(Serialize)]
struct ToyRow {
    t: f64,
    q2_k: f64,
    q2_kp: f64,
    q3_kp: f64,
    q3_k: f64,
    q2_0: f64,
    q3_0: f64,
}

fn toy(p: ToyParams, kappa: f64, variant: Variant, rtol: f64, out: Option<&Path>) -> Result<Vec<String>> {
    p.validate()?;
    let s0 = envelope_data(variant, &p, kappa)?;
    let (_, t1) = p.interval()?;
    let traj = integrate_toy(&p, &s0, t1, rtol, toymodel::DEFAULT_BLOWUP_FACTOR)?;
    let rep = check_supersolution(&traj, variant, &p, kappa, 1.0);
    let rows: Vec<ToyRow> = traj
        .states
        .iter()
        .map(|s| {
            let a = s.q.map(|c| c.norm());
            ToyRow { t: s.t, q2_k: a[0], q2_kp: a[1], q3_kp: a[2], q3_k: a[3], q2_0: a[4], q3_0: a[5] }
        })
        .collect();
    emit_csv(out, &rows)?;
    eprintln!("amplitudes: {}", NAMES.join(", "));
    eprintln!("{}", toml_of(&rep)?.trim_end());
    // only a violation inside the regime the envelope is built for
    let hyp = match variant {
        Variant::Balanced => p.eps * t1 * t1 <= 1.0,
        Variant::Unbalanced => p.eps <= p.nu.powf(2.0 / 3.0) && p.eps * t1 <= 1.0,
    };
    Ok(if hyp && !rep.dominates { vec![format!("envelope violated at t = {:?}", rep.t_violation)] } else { vec![] })
}

fn coords(cfg: &RunConfig, out: &Path, lap: CoordLaplacian) -> Result<Vec<String>> {
    let s0 = xrun::streak_initial(cfg)?;
    let solver = StreakSolver::new(s0.grid(), cfg.physics.nu)?;
    let (_, rec) = run_streak_fed(&solver, &s0, cfg.numerics.dt, cfg.numerics.tmax, cfg.cadence, lap)?;
    #[derive(Serialize)]
    struct Report {
        config_hash: String,
        code_version: &'static str,
        g_constant: f64,
        psi_constant: f64,
        max_jacobian_residual: f64,
        det_min: f64,
    }
    let rep = Report {
        config_hash: cfg.hash()?,
        code_version: xrun::CODE_VERSION,
        g_constant: g_decay_constant(&rec, cfg.physics.eps),
        psi_constant: psi_decay_constant(&rec, cfg.physics.eps),
        max_jacobian_residual: rec.iter().map(|r| r.jac_residual).fold(0.0, f64::max),
        det_min: rec.iter().map(|r| r.det_min).fold(f64::INFINITY, f64::min),
    };
    xrun::write_run_dir(out, cfg, &rec, &rep)?;
    let mut bad = Vec::new();
    if rep.max_jacobian_residual > 1e-10 {
        bad.push(format!("Jacobian residual {}", rep.max_jacobian_residual));
    }
    if rep.det_min <= 0.0 {
        bad.push("coordinate map folded".into());
    }
    Ok(bad)
}

fn latest_snapshot(dir: &Path) -> Result<Option<PathBuf>> {
    let d = dir.join("snapshots");
    if !d.is_dir() {
        return Ok(None);
    }
    let mut v: Vec<PathBuf> = std::fs::read_dir(&d)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "c3df"))
        .collect();
    v.sort();
    Ok(v.pop())
}

fn dns(cfg: &RunConfig, out: &Path, snapshot_every: Option<f64>, resume: bool) -> Result<Vec<String>> {
    let clock = std::time::Instant::now();
    let g = cfg.numerics.grid()?;
    let mut solver = DnsSolver::new(g, cfg.physics.nu);
    solver.remap_every = cfg.numerics.remap_every.max(1);
    let mut records: Vec<DnsRecord> = Vec::new();
    let mut state = xrun::initial_state(cfg)?;
    if resume {
        // the horizon may be extended on resume
        let mut old = RunConfig::load(&out.join("config.toml"))?;
        old.numerics.tmax = cfg.numerics.tmax;
        if old.hash()? != cfg.hash()? {
            return Err(Error::Config("config hash differs from the run being resumed".into()));
        }
        if let Some(p) = latest_snapshot(out)? {
            let snap = Snapshot::read(&mut std::fs::File::open(&p)?)?;
            let t = snap.t;
            let f = snap.into_fields(g)?;
            let mut u = VectorField { c: [f[0].clone(), f[1].clone(), f[2].clone()] };
            u.set_t_remap(f[0].t_remap);
            state = DnsState { u, t, nu: cfg.physics.nu };
            let mut rd = csv::Reader::from_path(out.join("series.csv")).map_err(|e| Error::Format(e.to_string()))?;
            for r in rd.deserialize() {
                let r: DnsRecord = r.map_err(|e| Error::Format(e.to_string()))?;
                if r.t <= t + 1e-12 {
                    records.push(r);
                }
            }
        }
    }
    let tend = cfg.numerics.tmax;
    let chunk = snapshot_every.unwrap_or(tend).max(cfg.numerics.dt);
    let mut blowup = None;
    let mut events = Vec::new();
    std::fs::create_dir_all(out)?;
    std::fs::write(out.join("config.toml"), cfg.to_toml()?)?;
    while state.t < tend - 1e-12 && blowup.is_none() {
        let stop = (state.t + chunk).min(tend);
        let offset = records.last().map_or(0.0, |r| r.dropped);
        let run = run_dns(&solver, &state, cfg.numerics.dt, stop, cfg.cadence)?;
        let skip = usize::from(!records.is_empty());
        records.extend(run.records.iter().skip(skip).map(|r| DnsRecord { dropped: r.dropped + offset, ..*r }));
        state = run.state;
        blowup = run.blowup;
        xrun::write_snapshot(out, &state)?;
        events.push(format!("t = {:.6}: snapshot", state.t));
    }
    if let Some(t) = blowup {
        events.push(format!("t = {t:.6}: blow-up event"));
    }
    let class = xrun::classify_run(&records, blowup, &cfg.thresholds, tend)?;
    events.push(format!("classification: {class:?}"));
    let max_div = records.iter().map(|r| r.divergence).fold(0.0, f64::max);
    let rep = xrun::DnsReport {
        config_hash: cfg.hash()?,
        code_version: xrun::CODE_VERSION.into(),
        wall_time: clock.elapsed().as_secs_f64(),
        classification: class,
        blowup,
        t_end: state.t,
        dropped_energy: records.last().map_or(0.0, |r| r.dropped),
        max_divergence: max_div,
    };
    xrun::write_run_dir(out, cfg, &records, &rep)?;
    std::fs::write(out.join("events.log"), events.join("\n") + "\n")?;
    println!("{:?}", class);
    let mut bad = Vec::new();
    if max_div > 1e-10 {
        bad.push(format!("divergence residual {max_div}"));
    }
    if class == Classification::BlowUpEvent {
        bad.push("blow-up event".into());
    }
    Ok(bad)
}

fn lemma_check(ids: &[String], n_random: usize, seed: u64, double: bool, out: Option<&Path>) -> Result<Vec<String>> {
    let ids: Vec<String> = if ids.is_empty() { REGISTERED.iter().map(|s| s.to_string()).collect() } else { ids.to_vec() };
    let p = NormParams::default();
    let bx = LemmaBox::default();
    let mut text = String::new();
    let mut bad = Vec::new();
    for id in &ids {
        let r = verify_lemma(id, &bx, n_random, seed, &p)?;
        text += &format!("[[report]]\n{}\n", r.to_record());
        if !r.is_finite() {
            bad.push(format!("{id}: infinite constant"));
        }
        if double {
            let r2 = verify_lemma(id, &bx.doubled(), n_random, seed, &p)?;
            text += &format!("[[report]]\n{}\n", r2.to_record());
            let growth = (r2.log_max_ratio - r.log_max_ratio).exp();
            println!("{id}: max_ratio {:.4e} -> {:.4e} (x{growth:.3})", r.max_ratio, r2.max_ratio);
            if !(growth < 2.0) {
                bad.push(format!("{id}: constant grows x{growth:.3} under box doubling"));
            }
        } else {
            println!("{id}: max_ratio {:.4e} over {} tuples", r.max_ratio, r.evaluated);
        }
    }
    if let Some(p) = out {
        std::fs::write(p, text)?;
    }
    Ok(bad)
}

fn multiplier_dump(eta: f64, kappa: f64, kp: &[i64], n_uniform: usize, out: Option<&Path>) -> Result<Vec<String>> {
    let grid = standard_t_grid(eta, n_uniform);
    let prof = MultiplierProfile::build(eta, kappa, &grid, kp)?;
    let mut head = vec!["t".to_string(), "log_wbar".into(), "log_w".into()];
    head.extend(prof.log_w3.keys().map(|k| format!("log_w3_{k}")));
    let sink: Box<dyn std::io::Write> = match out {
        Some(p) => Box::new(std::fs::File::create(p)?),
        None => Box::new(std::io::stdout()),
    };
    let mut w = csv::Writer::from_writer(sink);
    let ferr = |e: csv::Error| Error::Format(e.to_string());
    w.write_record(&head).map_err(ferr)?;
    for (i, t) in prof.t_grid.iter().enumerate() {
        let mut row = vec![t.to_string(), prof.log_wbar[i].to_string(), prof.log_w[i].to_string()];
        row.extend(prof.log_w3.values().map(|v| v[i].to_string()));
        w.write_record(&row).map_err(ferr)?;
    }
    w.flush()?;
    let r = prof.jump_residual();
    Ok(if r > 1e-10 { vec![format!("jump residual {r}")] } else { vec![] })
}
