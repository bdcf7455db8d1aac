//! Run configuration, classification of DNS runs, threshold sweeps and
//! rate studies, plus the per-run output directory.

use crate::coords::vortex_pair;
use crate::dns::{gevrey_initial, mode_pair, run_dns, DnsRecord, DnsSolver, DnsState};
use crate::grid::{Frame, GridSpec, Snapshot, SpectralField};
use crate::linear::{fit_rates, least_squares, RateModel};
use crate::streak::{run_streak, single_mode, StreakSolver, StreakState};
use crate::{Error, Result};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::Path;
use std::time::Instant;

pub const CODE_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Linear,
    Streak,
    Toy,
    Coords,
    Dns,
    Sweep,
    RateStudy,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Physics {
    pub nu: f64,
    pub eps: f64,
    pub kappa: f64,
    pub alpha: f64,
    pub s: f64,
    pub lambda0: f64,
    pub lambda_prime: f64,
    pub delta1: f64,
    pub c0: f64,
}

impl Default for Physics {
    fn default() -> Self {
        Physics {
            nu: 1e-3,
            eps: 1e-3,
            kappa: 8.0,
            alpha: 10.0,
            s: 0.5,
            lambda0: 1.0,
            lambda_prime: 0.5,
            delta1: 0.01,
            c0: 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Numerics {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    pub lx: f64,
    pub ly: f64,
    pub lz: f64,
    pub dealias: f64,
    pub dt: f64,
    pub tmax: f64,
    pub remap_every: u32,
}

impl Default for Numerics {
    fn default() -> Self {
        let tau = std::f64::consts::TAU;
        Numerics {
            nx: 64,
            ny: 128,
            nz: 64,
            lx: tau,
            ly: 2.0 * tau,
            lz: tau,
            dealias: 2.0 / 3.0,
            dt: 0.05,
            tmax: 50.0,
            remap_every: 1,
        }
    }
}

impl Numerics {
    pub fn grid(&self) -> Result<GridSpec> {
        GridSpec::with_lengths(self.nx, self.ny, self.nz, self.lx, self.ly, self.lz)?.with_dealias(self.dealias)
    }

    pub fn planar_grid(&self) -> Result<GridSpec> {
        GridSpec::planar(self.ny, self.nz, self.ly, self.lz)?.with_dealias(self.dealias)
    }
}

/// Planar vorticity used by the streak and coordinate runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Vortex {
    /// `2 eps cos(y + z)`
    Single,
    /// [`vortex_pair`]
    Pair,
}

/// Envelope `exp(-lambda |k|^s)` of the random initial data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitSpec {
    pub lambda: f64,
    pub s: f64,
    pub vortex: Vortex,
}

impl Default for InitSpec {
    fn default() -> Self {
        InitSpec { lambda: 1.0, s: 1.0, vortex: Vortex::Single }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    /// `E_ne(end) / E_ne(peak)` below this counts as streak-dominated.
    pub streak_ratio: f64,
    /// Required growth of `||u1_0||`.
    pub u1_growth: f64,
    /// Rebound factor of `E_ne` over its post-peak minimum.
    pub rebound: f64,
    /// Total energy fraction below which a run relaminarizes.
    pub relam: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds { streak_ratio: 1e-4, u1_growth: 3.0, rebound: 10.0, relam: 1e-2 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub kind: ExperimentKind,
    #[serde(default)]
    pub physics: Physics,
    #[serde(default)]
    pub numerics: Numerics,
    #[serde(default)]
    pub init: InitSpec,
    #[serde(default)]
    pub thresholds: Thresholds,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub out_dir: Option<String>,
    /// Record every this many steps.
    #[serde(default = "default_cadence")]
    pub cadence: usize,
}

fn default_cadence() -> usize {
    10
}

impl RunConfig {
    pub fn new(kind: ExperimentKind) -> Self {
        RunConfig {
            kind,
            physics: Physics::default(),
            numerics: Numerics::default(),
            init: InitSpec::default(),
            thresholds: Thresholds::default(),
            seed: 0,
            out_dir: None,
            cadence: default_cadence(),
        }
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_toml(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    /// First 16 hex digits of the SHA-256 of the canonical TOML form.
    pub fn hash(&self) -> Result<String> {
        let d = Sha256::digest(self.to_toml()?.as_bytes());
        Ok(hex::encode(&d[..8]))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    Relaminarizing,
    StreakDominated,
    NonlinearEscape,
    BlowUpEvent,
}

impl Classification {
    pub fn unstable(self) -> bool {
        matches!(self, Classification::NonlinearEscape | Classification::BlowUpEvent)
    }
}

/// Classify one run from its series. Fails on a truncated series unless
/// the run blew up.
pub fn classify_run(
    series: &[DnsRecord],
    blowup: Option<f64>,
    th: &Thresholds,
    t_required: f64,
) -> Result<Classification> {
    if blowup.is_some() {
        return Ok(Classification::BlowUpEvent);
    }
    let last = series.last().ok_or_else(|| Error::Degenerate("empty series".into()))?;
    if last.t < t_required - 1e-9 * t_required.abs().max(1.0) {
        return Err(Error::Degenerate(format!("series ends at {} before {t_required}", last.t)));
    }
    let first = &series[0];
    if first.energy == 0.0 {
        return Ok(Classification::Relaminarizing);
    }
    let (ipk, peak) = series
        .iter()
        .enumerate()
        .map(|(i, r)| (i, r.energy_nonzero))
        .fold((0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
    let mut low = f64::INFINITY;
    for r in &series[ipk..] {
        low = low.min(r.energy_nonzero);
        if low > 0.0 && r.energy_nonzero > th.rebound * low {
            return Ok(Classification::NonlinearEscape);
        }
    }
    let grew = first.u1_zero > 0.0 && last.u1_zero >= th.u1_growth * first.u1_zero
        || first.u1_zero == 0.0 && last.u1_zero > 0.0;
    if peak > 0.0 && last.energy_nonzero / peak < th.streak_ratio && grew {
        return Ok(Classification::StreakDominated);
    }
    if last.energy < th.relam * first.energy {
        return Ok(Classification::Relaminarizing);
    }
    // neither rule fired: sustained x-dependent energy means escape
    if last.energy_nonzero > first.energy_nonzero {
        Ok(Classification::NonlinearEscape)
    } else if last.u1_zero > first.u1_zero {
        Ok(Classification::StreakDominated)
    } else {
        Ok(Classification::Relaminarizing)
    }
}

/// Initial data for a DNS configuration.
pub fn initial_state(cfg: &RunConfig) -> Result<DnsState> {
    let g = cfg.numerics.grid()?;
    let u = gevrey_initial(g, cfg.physics.eps, cfg.init.lambda, cfg.init.s, cfg.seed)?;
    DnsState::new(u, 0.0, cfg.physics.nu)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DnsReport {
    pub config_hash: String,
    pub code_version: String,
    pub wall_time: f64,
    pub classification: Classification,
    pub blowup: Option<f64>,
    pub t_end: f64,
    pub dropped_energy: f64,
    pub max_divergence: f64,
}

pub struct DnsOutcome {
    pub report: DnsReport,
    pub records: Vec<DnsRecord>,
    pub state: DnsState,
}

/// Integrate a DNS configuration to `min(c0 / eps, tmax)` and classify.
pub fn run_dns_config(cfg: &RunConfig) -> Result<DnsOutcome> {
    let clock = Instant::now();
    let s0 = initial_state(cfg)?;
    let mut solver = DnsSolver::new(s0.grid(), cfg.physics.nu);
    solver.remap_every = cfg.numerics.remap_every.max(1);
    let tend = horizon(cfg);
    let run = run_dns(&solver, &s0, cfg.numerics.dt, tend, cfg.cadence)?;
    let classification = classify_run(&run.records, run.blowup, &cfg.thresholds, tend)?;
    let last = run.records.last().expect("series has the initial record");
    let report = DnsReport {
        config_hash: cfg.hash()?,
        code_version: CODE_VERSION.into(),
        wall_time: clock.elapsed().as_secs_f64(),
        classification,
        blowup: run.blowup,
        t_end: run.state.t,
        dropped_energy: last.dropped,
        max_divergence: run.records.iter().map(|r| r.divergence).fold(0.0, f64::max),
    };
    Ok(DnsOutcome { report, records: run.records, state: run.state })
}

fn horizon(cfg: &RunConfig) -> f64 {
    let p = &cfg.physics;
    if p.c0 > 0.0 && p.eps > 0.0 {
        (p.c0 / p.eps).min(cfg.numerics.tmax)
    } else {
        cfg.numerics.tmax
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepCell {
    pub nu: f64,
    pub eps: f64,
    pub classification: Classification,
    pub blowup: Option<f64>,
    pub wall_time: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Boundary {
    pub nu: f64,
    /// Largest stable amplitude below the first unstable one.
    pub eps_stable: f64,
    pub eps_unstable: f64,
}

impl Boundary {
    pub fn eps_crit(&self) -> f64 {
        (self.eps_stable * self.eps_unstable).sqrt()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepReport {
    pub config_hash: String,
    pub code_version: String,
    pub wall_time: f64,
    pub cells: Vec<SweepCell>,
    pub boundaries: Vec<Boundary>,
    pub gamma: Option<f64>,
    /// Extremes of `gamma` over the bracket corners.
    pub gamma_band: Option<(f64, f64)>,
    /// Columns where an unstable cell sits below a stable one.
    pub violations: Vec<String>,
}

/// Run every `(nu, eps)` cell, classify, and fit `eps_crit ~ nu^gamma`.
pub fn threshold_sweep(nus: &[f64], eps_grid: &[f64], base: &RunConfig) -> Result<SweepReport> {
    let clock = Instant::now();
    let jobs: Vec<(f64, f64)> = nus.iter().flat_map(|&n| eps_grid.iter().map(move |&e| (n, e))).collect();
    let cells: Vec<Result<SweepCell>> = jobs
        .par_iter()
        .map(|&(nu, eps)| {
            let mut cfg = base.clone();
            cfg.physics.nu = nu;
            cfg.physics.eps = eps;
            let out = run_dns_config(&cfg)?;
            Ok(SweepCell {
                nu,
                eps,
                classification: out.report.classification,
                blowup: out.report.blowup,
                wall_time: out.report.wall_time,
            })
        })
        .collect();
    let cells: Vec<SweepCell> = cells.into_iter().collect::<Result<_>>()?;
    let (boundaries, violations) = boundaries_of(&cells, nus);
    let (gamma, gamma_band) = fit_gamma(&boundaries);
    Ok(SweepReport {
        config_hash: base.hash()?,
        code_version: CODE_VERSION.into(),
        wall_time: clock.elapsed().as_secs_f64(),
        cells,
        boundaries,
        gamma,
        gamma_band,
        violations,
    })
}

/// Stability boundary per `nu` column and monotonicity violations.
pub fn boundaries_of(cells: &[SweepCell], nus: &[f64]) -> (Vec<Boundary>, Vec<String>) {
    let mut bs = Vec::new();
    let mut bad = Vec::new();
    for &nu in nus {
        let mut col: Vec<&SweepCell> = cells.iter().filter(|c| c.nu == nu).collect();
        col.sort_by(|a, b| a.eps.total_cmp(&b.eps));
        if let Some(iu) = col.iter().position(|c| c.classification.unstable()) {
            if let Some(c) = col[iu..].iter().find(|c| !c.classification.unstable()) {
                bad.push(format!("nu = {nu}: stable cell at eps = {} above the first unstable one", c.eps));
            }
            if iu > 0 {
                bs.push(Boundary { nu, eps_stable: col[iu - 1].eps, eps_unstable: col[iu].eps });
            }
        }
    }
    (bs, bad)
}

/// Least-squares `gamma` from the bracket midpoints, with the range over
/// all bracket corners.
pub fn fit_gamma(bs: &[Boundary]) -> (Option<f64>, Option<(f64, f64)>) {
    if bs.len() < 2 || bs.len() > 16 {
        return (None, None);
    }
    let fit = |eps: &[f64]| -> Option<f64> {
        let rows: Vec<[f64; 2]> = bs.iter().map(|b| [b.nu.ln(), 1.0]).collect();
        let ys: Vec<f64> = eps.iter().map(|e| e.ln()).collect();
        least_squares(&rows, &ys).ok().map(|b| b[0])
    };
    let mid: Vec<f64> = bs.iter().map(Boundary::eps_crit).collect();
    let gamma = fit(&mid);
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for mask in 0..(1u32 << bs.len()) {
        let e: Vec<f64> = bs
            .iter()
            .enumerate()
            .map(|(i, b)| if mask >> i & 1 == 1 { b.eps_unstable } else { b.eps_stable })
            .collect();
        if let Some(g) = fit(&e) {
            lo = lo.min(g);
            hi = hi.max(g);
        }
    }
    (gamma, gamma.map(|_| (lo, hi)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateKind {
    LiftUp,
    InviscidDamping,
    EnhancedDissipation,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RateReport {
    pub kind: RateKind,
    pub fitted: f64,
    pub target: f64,
    pub pass: bool,
    pub detail: String,
    pub config_hash: String,
    pub wall_time: f64,
}

/// Norm of component `c` over the modes with x-index `mx` and z-index `mz`.
pub fn slice_norm(s: &DnsState, c: usize, mx: i64, mz: i64) -> f64 {
    let g = s.grid();
    let (Some(ix), Some(iz)) = (GridSpec::slot(mx, g.nx), GridSpec::slot(mz, g.nz)) else {
        return 0.0;
    };
    (0..g.ny).map(|iy| s.u.c[c].at(ix, iy, iz).norm_sqr()).sum::<f64>().sqrt()
}

/// First time the series falls below `e0 / factor`, linearly interpolated
/// in `log E`.
pub fn decay_time(series: &[(f64, f64)], factor: f64) -> Option<f64> {
    let target = series.first()?.1 / factor;
    series.windows(2).find(|w| w[1].1 <= target).map(|w| {
        let (a, b) = (w[0].1.ln(), w[1].1.ln());
        if a == b {
            w[1].0
        } else {
            w[0].0 + (w[1].0 - w[0].0) * (a - target.ln()) / (a - b)
        }
    })
}

/// Streak initial data: the configured vortex with `u1 = 0` at `t = 0`.
pub fn streak_initial(cfg: &RunConfig) -> Result<StreakState> {
    let g = cfg.numerics.planar_grid()?;
    let eps = cfg.physics.eps;
    let omega = match cfg.init.vortex {
        Vortex::Single => single_mode(g, 1, 1, 2.0 * eps, false)?,
        Vortex::Pair => vortex_pair(g, eps)?,
    };
    StreakState::new(omega, SpectralField::zeros(g, Frame::Lab), 0.0, cfg.physics.nu)
}

fn lift_up(cfg: &RunConfig) -> Result<(f64, String)> {
    let s0 = streak_initial(cfg)?;
    let solver = StreakSolver::new(s0.grid(), cfg.physics.nu)?;
    let u2_in = s0.velocity().0.norm();
    let (_, rec) = run_streak(&solver, &s0, cfg.numerics.dt, cfg.numerics.tmax.max(10.0), 1)?;
    let pts: Vec<(f64, f64)> =
        rec.iter().filter(|r| r.t >= 1.0 - 1e-9 && r.t <= 10.0 + 1e-9).map(|r| (r.t, r.u1_norm)).collect();
    let f = fit_rates(&pts, RateModel::Linear)?;
    Ok((f.coefficient / u2_in, format!("slope {:.6e}, ||u2_in|| {:.6e}", f.coefficient, u2_in)))
}

fn inviscid_damping(cfg: &RunConfig) -> Result<(f64, String)> {
    let g = cfg.numerics.grid()?;
    let nu = cfg.physics.nu;
    let u = mode_pair(g, (1, 0, 0), [Complex64::new(0.0, 0.0), Complex64::new(cfg.physics.eps, 0.0), Complex64::new(0.0, 0.0)])?;
    let mut s = DnsState::new(u, 0.0, nu)?;
    let mut solver = DnsSolver::new(g, nu);
    solver.remap_every = cfg.numerics.remap_every.max(1);
    // before the viscous cutoff and before the mode leaves the kept band
    let k1 = std::f64::consts::TAU / g.lx;
    let band = g.dealias * (g.ny / 2) as f64 * std::f64::consts::TAU / g.ly / k1;
    let t1 = cfg.numerics.tmax.min(0.5 * nu.powf(-1.0 / 3.0)).min(0.9 * band);
    let t0 = 0.2 * t1;
    let mut pts = Vec::new();
    while s.t < t1 - 1e-12 {
        s = solver.step(&s, cfg.numerics.dt.min(t1 - s.t))?.0;
        if s.t >= t0 {
            pts.push((s.t, slice_norm(&s, 1, 1, 0)));
        }
    }
    let f = fit_rates(&pts, RateModel::PowerLaw)?;
    Ok((f.coefficient, format!("window [{t0:.3}, {t1:.3}], {} samples", pts.len())))
}

/// `tau_100` of `E_ne` for one viscosity.
pub fn tau100(cfg: &RunConfig, nu: f64) -> Result<f64> {
    let mut c = cfg.clone();
    c.physics.nu = nu;
    let s0 = initial_state(&c)?;
    let mut solver = DnsSolver::new(s0.grid(), nu);
    solver.remap_every = c.numerics.remap_every.max(1);
    let run = run_dns(&solver, &s0, c.numerics.dt, c.numerics.tmax, 1)?;
    let pts: Vec<(f64, f64)> = run.records.iter().map(|r| (r.t, r.energy_nonzero)).collect();
    decay_time(&pts, 100.0).ok_or_else(|| Error::Degenerate(format!("E_ne did not decay 100x by t = {}", c.numerics.tmax)))
}

fn enhanced_dissipation(cfg: &RunConfig) -> Result<(f64, String)> {
    let nu = cfg.physics.nu;
    let (a, b) = (tau100(cfg, nu)?, tau100(cfg, 10.0 * nu)?);
    Ok((a / b, format!("tau100({nu:e}) = {a:.4}, tau100({:e}) = {b:.4}", 10.0 * nu)))
}

/// Fit one linear-theory rate and compare with its target.
pub fn rate_study(kind: RateKind, cfg: &RunConfig) -> Result<RateReport> {
    let clock = Instant::now();
    let (fitted, detail) = match kind {
        RateKind::LiftUp => lift_up(cfg)?,
        RateKind::InviscidDamping => inviscid_damping(cfg)?,
        RateKind::EnhancedDissipation => enhanced_dissipation(cfg)?,
    };
    let (target, pass) = match kind {
        RateKind::LiftUp => (1.0, (fitted - 1.0).abs() <= 0.02),
        RateKind::InviscidDamping => (-2.0, fitted <= -1.8),
        RateKind::EnhancedDissipation => {
            let r = 10f64.powf(1.0 / 3.0);
            (r, fitted >= r / 1.3 && fitted <= r * 1.3)
        }
    };
    Ok(RateReport { kind, fitted, target, pass, detail, config_hash: cfg.hash()?, wall_time: clock.elapsed().as_secs_f64() })
}

/// Write `config.toml`, `series.csv` and `report.toml` into `dir`.
pub fn write_run_dir<R: Serialize, P: Serialize>(dir: &Path, cfg: &RunConfig, series: &[R], report: &P) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("config.toml"), cfg.to_toml()?)?;
    write_csv(&dir.join("series.csv"), series)?;
    let rep = toml::to_string(report).map_err(|e| Error::Config(e.to_string()))?;
    std::fs::write(dir.join("report.toml"), rep)?;
    Ok(())
}

pub fn write_csv<R: Serialize>(path: &Path, rows: &[R]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::Format(e.to_string()))?;
    for r in rows {
        w.serialize(r).map_err(|e| Error::Format(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// Final-state snapshot under `dir/snapshots/`.
pub fn write_snapshot(dir: &Path, s: &DnsState) -> Result<()> {
    let d = dir.join("snapshots");
    std::fs::create_dir_all(&d)?;
    let snap = Snapshot::from_fields(&[&s.u.c[0], &s.u.c[1], &s.u.c[2]], s.t);
    let mut f = std::io::BufWriter::new(std::fs::File::create(d.join(format!("t{:010.4}.c3df", s.t)))?);
    snap.write(&mut f)
}
