//! Fourier multipliers: critical times, the resonance weights `wbar`, `w`,
//! `w3`, the pressure weight `w_L`, the dissipation weight `D`, and the
//! assembled high and dissipation norms.
//!
//! All weights are evaluated in log space. For a given `eta` only `|eta|`
//! matters, except for `w3`, where the resonant x-frequency carries the sign
//! of `eta`.

pub mod lemmas;

use crate::{jap, Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Integer part `E(sqrt|eta|)`, the number of critical intervals.
#[inline]
pub fn n_intervals(eta: f64) -> u64 {
    let a = eta.abs();
    if a <= 1.0 {
        0
    } else {
        a.sqrt().floor() as u64
    }
}

/// `t_{k,eta}`; `t_{0,eta} = 2|eta|`.
pub fn critical_time(k: u64, eta: f64) -> Result<f64> {
    let a = eta.abs();
    if k == 0 {
        return Ok(2.0 * a);
    }
    if k > n_intervals(eta) {
        return Err(Error::Domain(format!("k = {k} exceeds E(sqrt|eta|) for eta = {eta}")));
    }
    let kf = k as f64;
    Ok(a / kf - a / (2.0 * kf * (kf + 1.0)))
}

#[inline]
fn tk(k: u64, a: f64) -> f64 {
    if k == 0 {
        2.0 * a
    } else {
        let kf = k as f64;
        a / kf - a / (2.0 * kf * (kf + 1.0))
    }
}

/// `(b_{k,eta}, a_{k,eta})`.
pub fn resonance_coeffs(k: u64, eta: f64) -> Result<(f64, f64)> {
    if k == 0 || k > n_intervals(eta) {
        return Err(Error::Domain(format!("no critical interval k = {k} for eta = {eta}")));
    }
    Ok(coeffs(k, eta.abs()))
}

#[inline]
fn coeffs(k: u64, a: f64) -> (f64, f64) {
    let kf = k as f64;
    let r = 1.0 - kf * kf / a;
    let b = if k == 1 { 1.0 - 1.0 / a } else { 2.0 * (kf - 1.0) / kf * r };
    (b, 2.0 * (kf + 1.0) / kf * r)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalEntry {
    pub k: u64,
    pub t_left: f64,
    pub t_right: f64,
    pub resonant: bool,
}

/// Critical intervals of one `eta` (entries for `k` of the sign of `eta`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalIndex {
    pub eta: f64,
    pub entries: Vec<CriticalEntry>,
}

impl CriticalIndex {
    pub fn new(eta: f64) -> Self {
        let a = eta.abs();
        let entries = (1..=n_intervals(eta))
            .map(|k| {
                let t_left = tk(k, a);
                CriticalEntry { k, t_left, t_right: tk(k - 1, a), resonant: 2.0 * a.sqrt() <= t_left }
            })
            .collect();
        CriticalIndex { eta, entries }
    }

    /// Entries for the x-frequency `k`, which must share the sign of `eta`.
    pub fn entry(&self, k: i64) -> Option<&CriticalEntry> {
        if k == 0 || (k as f64) * self.eta <= 0.0 {
            return None;
        }
        self.entries.get(k.unsigned_abs() as usize - 1)
    }
}

/// Whether `t` lies in the critical interval `I_{k,eta}` (signed `k`).
pub fn in_interval(t: f64, k: i64, eta: f64) -> bool {
    let a = eta.abs();
    if k == 0 || (k as f64) * eta <= 0.0 || k.unsigned_abs() > n_intervals(eta) {
        return false;
    }
    let m = k.unsigned_abs();
    t >= tk(m, a) && t <= tk(m - 1, a)
}

/// Whether `t` lies in the resonant interval (the bold `I_{k,eta}`).
pub fn in_resonant_interval(t: f64, k: i64, eta: f64) -> bool {
    in_interval(t, k, eta) && 2.0 * eta.abs().sqrt() <= tk(k.unsigned_abs(), eta.abs())
}

/// Which half of a critical interval a time falls in.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    /// `[t_{k,eta}, eta/k]`
    Left,
    /// `[eta/k, t_{k-1,eta}]`
    Right,
}

/// Unsigned interval index containing `t`, with the half. At a shared
/// endpoint the interval with the smaller index wins.
pub fn locate(t: f64, eta: f64) -> Option<(u64, Side)> {
    let a = eta.abs();
    let n = n_intervals(eta);
    if n == 0 || t > 2.0 * a || t < tk(n, a) {
        return None;
    }
    let guess = (a / t.max(1e-300)).round().clamp(1.0, n as f64) as u64;
    let lo = guess.saturating_sub(2).max(1);
    let hi = (guess + 2).min(n);
    for k in lo..=hi {
        if t >= tk(k, a) && t <= tk(k - 1, a) {
            let side = if t >= a / k as f64 { Side::Right } else { Side::Left };
            return Some((k, side));
        }
    }
    // contiguity makes this unreachable; scan as a fallback
    (1..=n).find(|&k| t >= tk(k, a) && t <= tk(k - 1, a)).map(|k| {
        let side = if t >= a / k as f64 { Side::Right } else { Side::Left };
        (k, side)
    })
}

/// `log wbar(t_{k,eta})` for `k = 0..=N`.
fn interval_logs(a: f64, kappa: f64) -> Vec<f64> {
    let n = if a <= 1.0 { 0 } else { a.sqrt().floor() as u64 };
    let mut out = Vec::with_capacity(n as usize + 1);
    out.push(0.0);
    let mut acc = 0.0;
    for k in 1..=n {
        let kf = k as f64;
        acc += (1.0 + 2.0 * kappa) * (kf * kf / a).ln();
        out.push(acc);
    }
    out
}

fn log_wbar_with(t: f64, a: f64, kappa: f64, logs: &[f64]) -> f64 {
    if a <= 1.0 || t >= 2.0 * a {
        return 0.0;
    }
    let n = logs.len() as u64 - 1;
    match locate(t, a) {
        None => logs[n as usize],
        Some((k, side)) => {
            let kf = k as f64;
            let c = a / kf;
            let prev = logs[k as usize - 1];
            let (b, av) = coeffs(k, a);
            match side {
                Side::Right => kappa * ((kf * kf / a) * (1.0 + b * (t - c))).ln() + prev,
                Side::Left => {
                    prev + kappa * (kf * kf / a).ln() - (1.0 + kappa) * (1.0 + av * (c - t)).ln()
                }
            }
        }
    }
}

/// `log wbar(t, eta)`.
pub fn log_wbar(t: f64, eta: f64, kappa: f64) -> f64 {
    let a = eta.abs();
    if a <= 1.0 {
        return 0.0;
    }
    log_wbar_with(t, a, kappa, &interval_logs(a, kappa))
}

/// `log(w / wbar)`: the two extra loss integrals in closed form.
pub fn log_extra_loss(t: f64, eta: f64, kappa: f64) -> f64 {
    let a = eta.abs();
    if a <= 1.0 || t >= 2.0 * a {
        return 0.0;
    }
    let r = a.sqrt();
    let first = (2.0 * r - t).max(0.0);
    let second = a * (1.0 / t.max(r) - 1.0 / (2.0 * a));
    -kappa * (first + second.max(0.0))
}

/// `log w(t, eta)`.
pub fn log_w(t: f64, eta: f64, kappa: f64) -> f64 {
    log_wbar(t, eta, kappa) + log_extra_loss(t, eta, kappa)
}

/// `log(w3_{kp} / w)`, nonzero only on a critical interval whose resonant
/// frequency differs from `kp`.
pub fn log_w3_over_w(t: f64, kp: i64, eta: f64) -> f64 {
    let a = eta.abs();
    if a <= 1.0 {
        return 0.0;
    }
    match locate(t, a) {
        None => 0.0,
        Some((k, side)) => {
            let resonant = if eta > 0.0 { k as i64 } else { -(k as i64) };
            if kp == resonant {
                return 0.0;
            }
            let kf = k as f64;
            let c = a / kf;
            let (b, av) = coeffs(k, a);
            let den = match side {
                Side::Right => 1.0 + b * (t - c),
                Side::Left => 1.0 + av * (c - t),
            };
            (a / (kf * kf * den)).ln()
        }
    }
}

/// `log w3_{kp}(t, eta)`.
pub fn log_w3(t: f64, kp: i64, eta: f64, kappa: f64) -> f64 {
    log_w(t, eta, kappa) + log_w3_over_w(t, kp, eta)
}

/// Analytic `d/dt log w(t, eta)` (right derivative at breakpoints).
pub fn dlog_w(t: f64, eta: f64, kappa: f64) -> f64 {
    let a = eta.abs();
    if a <= 1.0 || t >= 2.0 * a {
        return 0.0;
    }
    let mut d = 0.0;
    if let Some((k, side)) = locate(t, a) {
        let c = a / k as f64;
        let (b, av) = coeffs(k, a);
        d += match side {
            Side::Right => kappa * b / (1.0 + b * (t - c)),
            Side::Left => (1.0 + kappa) * av / (1.0 + av * (c - t)),
        };
    }
    let r = a.sqrt();
    if t < 2.0 * r {
        d += kappa;
    }
    if t >= r {
        d += kappa * a / (t * t);
    }
    d
}

/// Pressure weight `w_L(t, k, eta, l)`, equal to 1 at `t = 1`.
pub fn log_w_l(t: f64, k: f64, eta: f64, l: f64, kappa: f64) -> f64 {
    if k == 0.0 {
        return 0.0;
    }
    let r = (k * k + l * l).sqrt();
    kappa * jap(l) / r * k.signum() * (((k * t - eta) / r).atan() - ((k - eta) / r).atan())
}

pub fn w_l(t: f64, k: f64, eta: f64, l: f64, kappa: f64) -> f64 {
    log_w_l(t, k, eta, l, kappa).exp()
}

/// Enhanced dissipation weight `D(t, eta)`.
pub fn dissipation_d(t: f64, eta: f64, nu: f64, alpha: f64) -> f64 {
    let e3 = eta.abs().powi(3);
    nu * e3 / (3.0 * alpha) + nu * (t.powi(3) - 8.0 * e3).max(0.0) / (24.0 * alpha)
}

/// Tabulated weights of one `eta`.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiplierProfile {
    pub eta: f64,
    pub kappa: f64,
    pub t_grid: Vec<f64>,
    pub log_wbar: Vec<f64>,
    pub log_w: Vec<f64>,
    pub log_w3: BTreeMap<i64, Vec<f64>>,
    pub index: CriticalIndex,
}

/// Union of a uniform lattice on `[0, 2|eta|]` and every breakpoint.
pub fn standard_t_grid(eta: f64, n_uniform: usize) -> Vec<f64> {
    let a = eta.abs();
    let top = (2.0 * a).max(2.0);
    let mut pts: Vec<f64> = (0..=n_uniform).map(|i| top * i as f64 / n_uniform as f64).collect();
    for k in 1..=n_intervals(eta) {
        pts.push(tk(k, a));
        pts.push(a / k as f64);
    }
    if a > 1.0 {
        pts.push(a.sqrt());
        pts.push(2.0 * a.sqrt());
    }
    pts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    pts.dedup_by(|x, y| (*x - *y).abs() <= 1e-12 * top);
    pts
}

impl MultiplierProfile {
    /// Tabulate `wbar`, `w` and `w3_{kp}` for each requested `kp`.
    pub fn build(eta: f64, kappa: f64, t_grid: &[f64], kprimes: &[i64]) -> Result<Self> {
        if kappa <= 1.0 {
            return Err(Error::Domain(format!("kappa must exceed 1, got {kappa}")));
        }
        let a = eta.abs();
        if t_grid.windows(2).any(|p| !(p[0] < p[1])) {
            return Err(Error::Precondition("t_grid must be strictly ascending".into()));
        }
        if a > 1.0 {
            let tol = 1e-12 * a;
            let (first, last) = (t_grid[0], *t_grid.last().unwrap());
            if first > tol || last < 2.0 * a - tol {
                return Err(Error::Precondition("t_grid must cover [0, 2|eta|]".into()));
            }
            for k in 1..=n_intervals(eta) {
                for p in [tk(k, a), a / k as f64] {
                    if !t_grid.iter().any(|&t| (t - p).abs() <= tol) {
                        return Err(Error::Precondition(format!("t_grid misses breakpoint {p}")));
                    }
                }
            }
        }
        let logs = interval_logs(a, kappa);
        let log_wbar: Vec<f64> = t_grid.iter().map(|&t| log_wbar_with(t, a, kappa, &logs)).collect();
        let log_w: Vec<f64> =
            t_grid.iter().zip(&log_wbar).map(|(&t, lb)| lb + log_extra_loss(t, a, kappa)).collect();
        let log_w3 = kprimes
            .iter()
            .map(|&kp| {
                let v = t_grid.iter().zip(&log_w).map(|(&t, lw)| lw + log_w3_over_w(t, kp, eta)).collect();
                (kp, v)
            })
            .collect();
        Ok(MultiplierProfile {
            eta,
            kappa,
            t_grid: t_grid.to_vec(),
            log_wbar,
            log_w,
            log_w3,
            index: CriticalIndex::new(eta),
        })
    }

    pub fn wbar(&self) -> Vec<f64> {
        self.log_wbar.iter().map(|v| v.exp()).collect()
    }

    pub fn w(&self) -> Vec<f64> {
        self.log_w.iter().map(|v| v.exp()).collect()
    }

    pub fn w3(&self, kp: i64) -> Option<Vec<f64>> {
        self.log_w3.get(&kp).map(|v| v.iter().map(|x| x.exp()).collect())
    }

    /// Largest relative residual of the two jump identities over all
    /// intervals, evaluated at the tabulated endpoints.
    pub fn jump_residual(&self) -> f64 {
        let a = self.eta.abs();
        let at = |p: f64| -> f64 {
            let i = self
                .t_grid
                .iter()
                .enumerate()
                .min_by(|x, y| (x.1 - p).abs().partial_cmp(&(y.1 - p).abs()).unwrap())
                .unwrap()
                .0;
            self.log_wbar[i]
        };
        let mut worst: f64 = 0.0;
        for e in &self.index.entries {
            let kf = e.k as f64;
            let r = (kf * kf / a).ln();
            let base = at(e.t_right);
            let whole = at(e.t_left) - base;
            let mid = at(a / kf) - base;
            let want_whole = (1.0 + 2.0 * self.kappa) * r;
            let want_mid = self.kappa * r;
            // relative error of the ratio itself
            let ratio = |got: f64, want: f64| ((got - want).exp() - 1.0).abs();
            worst = worst.max(ratio(whole, want_whole)).max(ratio(mid, want_mid));
        }
        worst
    }
}

/// Which component of the norm.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Component {
    Q,
    One,
    Two,
    Three,
    /// The `<eta,l>^2 A^Q_0` norm for the coordinate unknowns.
    Coord,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormParams {
    pub lambda0: f64,
    pub lambda_prime: f64,
    pub delta_lambda: f64,
    pub s: f64,
    pub alpha: f64,
    pub delta1: f64,
    pub beta: f64,
    pub gamma: f64,
    pub sigma: f64,
    pub mu: f64,
    pub kappa: f64,
    pub nu: f64,
}

impl Default for NormParams {
    fn default() -> Self {
        let alpha = 10.0;
        let beta = 3.0 * alpha + 8.0;
        let gamma = beta + 3.0 * alpha + 13.0;
        let kappa = 8.0;
        NormParams {
            lambda0: 1.0,
            lambda_prime: 0.5,
            delta_lambda: 0.01,
            s: 0.6,
            alpha,
            delta1: 0.01,
            beta,
            gamma,
            sigma: gamma + 7.0,
            mu: measure_mu(kappa).mu,
            kappa,
            nu: 1e-3,
        }
    }
}

impl NormParams {
    pub fn validate(&self) -> Result<()> {
        let a = self.alpha;
        if !(self.s > 0.5 && self.s < 1.0) {
            return Err(Error::Domain(format!("s = {} not in (1/2, 1)", self.s)));
        }
        if a < 10.0 || a.fract() != 0.0 {
            return Err(Error::Domain(format!("alpha = {a} must be an integer >= 10")));
        }
        if !(self.beta > 3.0 * a + 7.0 && self.gamma > self.beta + 3.0 * a + 12.0 && self.sigma > self.gamma + 6.0) {
            return Err(Error::Domain("regularity exponents violate their ordering".into()));
        }
        if !(self.kappa > 1.0 && self.mu > 0.0 && self.nu > 0.0 && self.delta1 > 0.0 && self.lambda0 > 0.0) {
            return Err(Error::Domain("kappa, mu, nu, delta1, lambda0 must be positive".into()));
        }
        Ok(())
    }

    /// Gevrey radius `lambda(t)`.
    pub fn lambda(&self, t: f64) -> f64 {
        let p = (2.0 * self.s).min(1.5);
        let l1 = 0.75 * self.lambda0 + 0.25 * self.lambda_prime;
        l1 - self.delta_lambda * jap_power_integral(1.0, t, p)
    }
}

/// `int_a^b <tau>^{-p} d tau` by Gauss-Legendre on geometrically growing
/// panels.
pub fn jap_power_integral(a: f64, b: f64, p: f64) -> f64 {
    if b < a {
        return -jap_power_integral(b, a, p);
    }
    if p == 1.5 {
        let f = |x: f64| x / jap(x);
        return f(b) - f(a);
    }
    const X: [f64; 5] = [-0.906_179_845_938_664, -0.538_469_310_105_683, 0.0, 0.538_469_310_105_683, 0.906_179_845_938_664];
    const W: [f64; 5] = [0.236_926_885_056_189, 0.478_628_670_499_366, 0.568_888_888_888_889, 0.478_628_670_499_366, 0.236_926_885_056_189];
    let mut sum = 0.0;
    let mut lo = a;
    while lo < b {
        let hi = (lo + 0.25 * (1.0 + lo.abs())).min(b);
        let (m, h) = (0.5 * (lo + hi), 0.5 * (hi - lo));
        for (x, w) in X.iter().zip(&W) {
            sum += w * h * (1.0 + (m + h * x).powi(2)).powf(-0.5 * p);
        }
        lo = hi;
    }
    sum
}

#[inline]
fn l1(k: f64, eta: f64, l: f64) -> f64 {
    k.abs() + eta.abs() + l.abs()
}

#[inline]
fn logaddexp(x: f64, y: f64) -> f64 {
    let m = x.max(y);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + ((x - m).exp() + (y - m).exp()).ln()
}

/// `log` of the `min(1, ...)` / indicator prefactor of a component.
fn log_prefactor(c: Component, k: i64, eta: f64, l: f64, t: f64, delta1: f64) -> f64 {
    let jel = jap(eta.abs() + l.abs());
    let lmin = |x: f64| x.ln().min(0.0);
    match c {
        Component::Q | Component::Coord => 0.0,
        Component::One => {
            let m = if k != 0 { (1.0 + delta1) * lmin(jel / jap(t)) } else { 0.0 };
            m - jap(t).ln()
        }
        Component::Two => {
            if k != 0 && t > 0.0 {
                lmin(jel / t)
            } else {
                0.0
            }
        }
        Component::Three => {
            if k != 0 && t > 0.0 {
                2.0 * lmin(jel / t)
            } else {
                0.0
            }
        }
    }
}

fn log_common(k: i64, eta: f64, l: f64, t: f64, p: &NormParams) -> f64 {
    let n = l1(k as f64, eta, l);
    p.lambda(t) * n.powf(p.s) + p.sigma * jap(n).ln() - log_w_l(t, k as f64, eta, l, p.kappa)
}

/// `log A^i_k(t, eta, l)`.
pub fn log_norm_a(c: Component, k: i64, eta: f64, l: f64, t: f64, p: &NormParams) -> f64 {
    let (k, pre) = match c {
        Component::Coord => (0, 2.0 * jap(eta.abs() + l.abs()).ln()),
        _ => (k, log_prefactor(c, k, eta, l, t, p.delta1)),
    };
    let lw = match c {
        Component::Three => log_w3(t, k, eta, p.kappa),
        _ => log_w(t, eta, p.kappa),
    };
    let bracket = logaddexp(p.mu * eta.abs().sqrt() - lw, p.mu * l.abs().sqrt());
    pre + log_common(k, eta, l, t, p) + bracket
}

/// `log Atilde^i_k(t, eta, l)`.
pub fn log_norm_a_tilde(c: Component, k: i64, eta: f64, l: f64, t: f64, p: &NormParams) -> f64 {
    let (k, pre) = match c {
        Component::Coord => (0, 2.0 * jap(eta.abs() + l.abs()).ln()),
        _ => (k, log_prefactor(c, k, eta, l, t, p.delta1)),
    };
    let lw = log_w(t, eta, p.kappa);
    let mut v = pre + log_common(k, eta, l, t, p) + p.mu * eta.abs().sqrt() - lw;
    if c == Component::Three {
        v -= log_w3_over_w(t, k, eta);
    }
    v
}

/// `log A^{nu;i}_k(t, eta, l)`; `-inf` at `k = 0`.
pub fn log_norm_a_nu(c: Component, k: i64, eta: f64, l: f64, t: f64, p: &NormParams) -> f64 {
    if k == 0 {
        return f64::NEG_INFINITY;
    }
    let n = l1(k as f64, eta, l);
    let jel = jap(eta.abs() + l.abs());
    let tt = t.max(f64::MIN_POSITIVE);
    let lmin = |x: f64| x.ln().min(0.0);
    let pre = match c {
        Component::Q | Component::Coord => 0.0,
        Component::One => -jap(t).ln() + (1.0 + p.delta1) * lmin(jel / tt),
        Component::Two => lmin(jel / tt),
        Component::Three => 2.0 * lmin(jel / tt),
    };
    pre + p.lambda(t) * n.powf(p.s) + p.beta * jap(n).ln()
        + p.alpha * jap(dissipation_d(t, eta, p.nu, p.alpha)).ln()
        - log_w_l(t, k as f64, eta, l, p.kappa)
}

pub fn norm_a(c: Component, k: i64, eta: f64, l: f64, t: f64, p: &NormParams) -> f64 {
    log_norm_a(c, k, eta, l, t, p).exp()
}

pub fn norm_a_tilde(c: Component, k: i64, eta: f64, l: f64, t: f64, p: &NormParams) -> f64 {
    log_norm_a_tilde(c, k, eta, l, t, p).exp()
}

pub fn norm_a_nu(c: Component, k: i64, eta: f64, l: f64, t: f64, p: &NormParams) -> f64 {
    log_norm_a_nu(c, k, eta, l, t, p).exp()
}

/// Fit of `log(1/w(1, eta)) = (mu/2) sqrt(eta) - p log(eta) + c`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MuFit {
    pub mu: f64,
    pub p: f64,
    pub intercept: f64,
    /// `(log(1/w) + p log eta - c) / sqrt(eta)` at each sample.
    pub corrected_ratios: Vec<f64>,
    /// `log(1/w) / sqrt(eta)` at each sample.
    pub raw_ratios: Vec<f64>,
    pub etas: Vec<f64>,
}

/// Measure the Gevrey-2 loss radius of `1/w(1, .)` over `eta` in
/// `[1e2, 1e6]`.
pub fn measure_mu(kappa: f64) -> MuFit {
    let etas: Vec<f64> = (0..=40).map(|i| 10f64.powf(2.0 + 4.0 * i as f64 / 40.0)).collect();
    measure_mu_on(kappa, &etas)
}

pub fn measure_mu_on(kappa: f64, etas: &[f64]) -> MuFit {
    let ys: Vec<f64> = etas.iter().map(|&e| -log_w(1.0, e, kappa)).collect();
    let rows: Vec<[f64; 3]> = etas.iter().map(|&e| [e.sqrt(), e.ln(), 1.0]).collect();
    let beta = crate::linear::least_squares(&rows, &ys).expect("well-conditioned design");
    let corrected = etas
        .iter()
        .zip(&ys)
        .map(|(&e, &y)| (y - beta[1] * e.ln() - beta[2]) / e.sqrt())
        .collect();
    let raw = etas.iter().zip(&ys).map(|(&e, &y)| y / e.sqrt()).collect();
    MuFit { mu: 2.0 * beta[0], p: -beta[1], intercept: beta[2], corrected_ratios: corrected, raw_ratios: raw, etas: etas.to_vec() }
}
