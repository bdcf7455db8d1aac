//! Six-amplitude model of the `Q2`/`Q3` interaction near one critical
//! time, its two envelope families, and the Gevrey-2 loss of `w`.

use crate::multiplier::{critical_time, log_w};
use crate::ode::{dp45, Dp45Options, Stop};
use crate::{jap, Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Amplitude order inside [`ToyState::q`].
pub const NAMES: [&str; 6] = ["Q2_k", "Q2_kp", "Q3_kp", "Q3_k", "Q2_0", "Q3_0"];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToyParams {
    pub k: i64,
    pub kp: i64,
    pub eta: f64,
    pub l: f64,
    pub eps: f64,
    pub nu: f64,
    pub c0: f64,
    pub alpha: f64,
    /// Use `kp` instead of `k` in the `Q2_kp` dissipation.
    pub kp_dissipation: bool,
}

impl ToyParams {
    /// Resonant pair `(k, eta)` with the neighbouring `kp`: `k - 1`, or
    /// `k + 1` when that would be zero.
    pub fn new(k: i64, eta: f64, eps: f64, nu: f64) -> Self {
        let kp = if k.abs() >= 2 { k - k.signum() } else { k + k.signum() };
        ToyParams { k, kp, eta, l: 0.0, eps, nu, c0: 0.0, alpha: 10.0, kp_dissipation: false }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.k == self.kp {
            return Err(Error::Domain("need k != 0 and kp != k".into()));
        }
        if self.eps < 0.0 || self.nu < 0.0 || self.c0 < 0.0 {
            return Err(Error::Domain("eps, nu, c0 must be nonnegative".into()));
        }
        Ok(())
    }

    /// The interval `[t_{k,eta}, t_{k-1,eta}]`.
    pub fn interval(&self) -> Result<(f64, f64)> {
        let m = self.k.unsigned_abs();
        if (self.k as f64) * self.eta <= 0.0 {
            return Err(Error::Domain("k and eta must share a sign".into()));
        }
        Ok((critical_time(m, self.eta)?, critical_time(m - 1, self.eta)?))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToyState {
    pub q: [Complex64; 6],
    pub t: f64,
}

/// Right-hand side of the six amplitude equations.
pub fn toy_rhs(p: &ToyParams, t: f64, q: &[Complex64; 6]) -> [Complex64; 6] {
    let k = p.k as f64;
    let kp = p.kp as f64;
    let e = p.eta - k * t;
    let res = k.abs() / (k.abs() + e.abs());
    let big = (p.eps * t).max(p.c0);
    let diss = p.nu * (k * k + e * e);
    let diss_kp = if p.kp_dissipation {
        let ep = p.eta - kp * t;
        p.nu * (kp * kp + ep * ep)
    } else {
        diss
    };
    let damp = jap(p.nu * t * t * t).powf(-p.alpha);
    let den = k * k + e * e;
    let [q2k, q2kp, q3kp, q3k, q20, q30] = *q;
    let jkt = (1.0 + kp * kp + t * t).sqrt();
    let d0 = p.nu * p.eta * p.eta;
    [
        q3k * (big * res) - q2k * diss,
        q3kp * (big * kp.abs() / jkt) - q2kp * diss_kp,
        q2k * (p.eps * t.powi(3) * damp / den) - q3kp * diss,
        (q3k + q2k) * res - q3k * diss,
        q30 * p.eps + q2k * (p.eps * t * t * damp / den) - q20 * d0,
        q30 * p.eps + q2k * (p.eps * t.powi(3) * damp / den) - q30 * d0,
    ]
}

fn pack(q: &[Complex64; 6]) -> [f64; 12] {
    let mut y = [0.0; 12];
    for i in 0..6 {
        y[2 * i] = q[i].re;
        y[2 * i + 1] = q[i].im;
    }
    y
}

fn unpack(y: &[f64]) -> [Complex64; 6] {
    std::array::from_fn(|i| Complex64::new(y[2 * i], y[2 * i + 1]))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToyTrajectory {
    pub states: Vec<ToyState>,
    /// Time at which some amplitude exceeded `blowup_factor` times the
    /// initial maximum.
    pub blowup: Option<f64>,
}

/// Adaptive integration from `state0` to `t_end`.
pub fn integrate_toy(
    p: &ToyParams,
    state0: &ToyState,
    t_end: f64,
    rtol: f64,
    blowup_factor: f64,
) -> Result<ToyTrajectory> {
    p.validate()?;
    let scale = state0.q.iter().map(|c| c.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let opts = Dp45Options { rtol, atol: rtol * 1e-6 * scale, h0: 1e-3, ..Default::default() };
    let limit = blowup_factor * scale;
    let mut states = Vec::new();
    let f = |t: f64, y: &[f64], dy: &mut [f64]| {
        let d = toy_rhs(p, t, &unpack(y));
        dy.copy_from_slice(&pack(&d));
    };
    let stop = |_t: f64, y: &[f64]| unpack(y).iter().any(|c| !(c.norm() <= limit));
    let (_, _, why) = dp45(
        f,
        state0.t,
        &pack(&state0.q),
        t_end,
        &opts,
        |t, y| states.push(ToyState { q: unpack(y), t }),
        stop,
    )?;
    let blowup = match why {
        Stop::Event(t) => Some(t),
        Stop::Completed => None,
    };
    Ok(ToyTrajectory { states, blowup })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Every `Q2` like `w`, every `Q3` like `t w`.
    Balanced,
    /// Resonant amplitudes like `w`; non-resonant `Q3` carry the extra
    /// factor `t / (|k| + |eta - k t|)`.
    Unbalanced,
}

/// Envelope of each amplitude at `t`, built from the multiplier `w` with
/// parameter `kappa`.
pub fn envelope(variant: Variant, p: &ToyParams, kappa: f64, t: f64) -> [f64; 6] {
    let w = log_w(t, p.eta, kappa).exp();
    match variant {
        Variant::Balanced => [w, w, t * w, t * w, w, t * w],
        Variant::Unbalanced => {
            let k = p.k as f64;
            let g = t / (k.abs() + (p.eta - k * t).abs());
            [w, w, g * w, w, w, g * w]
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuperReport {
    pub dominates: bool,
    /// `min log(margin_tol * C env / |Q|)` over the trajectory.
    pub min_margin: f64,
    /// Smallest constant that makes the envelope dominate.
    pub c_needed: f64,
    pub t_violation: Option<f64>,
}

/// Compare `|Q_i(t)| <= margin_tol * C * env_i(t)`, where `C` normalises
/// the envelope to the initial data.
pub fn check_supersolution(
    traj: &ToyTrajectory,
    variant: Variant,
    p: &ToyParams,
    kappa: f64,
    margin_tol: f64,
) -> SuperReport {
    let first = &traj.states[0];
    let e0 = envelope(variant, p, kappa, first.t);
    let c = (0..6)
        .filter(|&i| e0[i] > 0.0)
        .map(|i| first.q[i].norm() / e0[i])
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let mut min_margin = f64::INFINITY;
    let mut c_needed: f64 = 0.0;
    let mut t_violation = None;
    for s in &traj.states {
        let env = envelope(variant, p, kappa, s.t);
        for i in 0..6 {
            let a = s.q[i].norm();
            if a == 0.0 {
                continue;
            }
            let m = (margin_tol * c * env[i] / a).ln();
            c_needed = c_needed.max(a / (c * env[i]));
            if m < min_margin {
                min_margin = m;
            }
            if m < 0.0 && t_violation.is_none() {
                t_violation = Some(s.t);
            }
        }
    }
    SuperReport { dominates: min_margin >= 0.0, min_margin, c_needed, t_violation }
}

/// Initial data proportional to the envelope at the interval entry, scaled
/// to unit maximum.
pub fn envelope_data(variant: Variant, p: &ToyParams, kappa: f64) -> Result<ToyState> {
    let (t0, _) = p.interval()?;
    let e = envelope(variant, p, kappa, t0);
    let m = e.iter().cloned().fold(0.0, f64::max);
    Ok(ToyState { q: std::array::from_fn(|i| Complex64::new(e[i] / m, 0.0)), t: t0 })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossFit {
    /// Exponent `c` in `log(w(2 eta) / w(sqrt eta)) = 2 c sqrt(eta) + ...`.
    pub c: f64,
    pub log_coeff: f64,
    pub intercept: f64,
    pub r2: f64,
    pub residual: f64,
}

/// Fit the regularity loss of `w` against `sqrt(eta)` with a `log(eta)`
/// correction.
pub fn gevrey_loss_scan(etas: &[f64], kappa: f64) -> Result<LossFit> {
    if etas.len() < 4 {
        return Err(Error::Degenerate("need at least 4 eta values".into()));
    }
    let ys: Vec<f64> = etas
        .iter()
        .map(|&e| log_w(2.0 * e, e, kappa) - log_w(e.sqrt(), e, kappa))
        .collect();
    let rows: Vec<[f64; 3]> = etas.iter().map(|&e| [e.sqrt(), e.ln(), 1.0]).collect();
    let b = crate::linear::least_squares(&rows, &ys)?;
    let mean = ys.iter().sum::<f64>() / ys.len() as f64;
    let (mut rss, mut tss) = (0.0, 0.0);
    for (r, y) in rows.iter().zip(&ys) {
        rss += (y - b[0] * r[0] - b[1] * r[1] - b[2]).powi(2);
        tss += (y - mean).powi(2);
    }
    Ok(LossFit {
        c: 0.5 * b[0],
        log_coeff: b[1],
        intercept: b[2],
        r2: 1.0 - rss / tss,
        residual: (rss / ys.len() as f64).sqrt(),
    })
}

/// Log-spaced `eta` values over `[lo, hi]`.
pub fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64)).collect()
}

/// Growth factor over the initial maximum treated as a blow-up event.
pub const DEFAULT_BLOWUP_FACTOR: f64 = 1e5;

/// Unit data at `t_{k,eta}` integrated to `2 eta`; returns the blow-up time
/// if any.
pub fn blowup_probe(p: &ToyParams, factor: f64) -> Result<Option<f64>> {
    let (t0, _) = p.interval()?;
    let s0 = ToyState { q: [Complex64::new(1.0, 0.0); 6], t: t0 };
    Ok(integrate_toy(p, &s0, 2.0 * p.eta, 1e-9, factor)?.blowup)
}
