//! Empirical constants of frequency-ratio inequalities.
//!
//! Each registered inequality `lhs <~ rhs` is evaluated as `log(lhs/rhs)`
//! over a finite sample of frequency/time tuples. The maximum is the
//! implied constant on that box. Tuples outside an inequality's
//! hypotheses are skipped.

use super::*;
use crate::{jap, Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Registered inequalities.
pub const REGISTERED: &[&str] = &[
    "ABasic12",
    "dtwBasicBrack",
    "basicNR",
    "TriTriv",
    "ratlongtime",
    "dtw",
    "wRat",
    "Jswap",
    "JswapBasic",
    "JswapNRGain",
];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LemmaBox {
    pub kmax: i64,
    pub etamax: f64,
    pub lmax: f64,
    pub tmin: f64,
    pub tmax: f64,
}

impl Default for LemmaBox {
    fn default() -> Self {
        LemmaBox { kmax: 8, etamax: 256.0, lmax: 8.0, tmin: 1.0, tmax: 512.0 }
    }
}

impl LemmaBox {
    /// Every upper bound doubled.
    pub fn doubled(&self) -> Self {
        LemmaBox { kmax: 2 * self.kmax, etamax: 2.0 * self.etamax, lmax: 2.0 * self.lmax, tmax: 2.0 * self.tmax, ..*self }
    }
}

/// One evaluation point: output frequency `(k, eta, l)`, input frequency
/// `(kp, xi, lp)` and time.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub k: i64,
    pub kp: i64,
    pub eta: f64,
    pub xi: f64,
    pub l: f64,
    pub lp: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LemmaReport {
    pub lemma_id: String,
    pub r#box: LemmaBox,
    pub evaluated: usize,
    pub log_max_ratio: f64,
    /// `exp(log_max_ratio)`; infinite when it exceeds `f64::MAX`.
    pub max_ratio: f64,
    pub argmax: Option<Sample>,
}

impl LemmaReport {
    /// Judged on the logarithm: `max_ratio` overflows long before the
    /// constant stops being finite.
    pub fn is_finite(&self) -> bool {
        self.log_max_ratio.is_finite()
    }

    pub fn to_record(&self) -> String {
        toml::to_string(self).unwrap_or_default()
    }
}

/// Constants left free by the inequalities.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HarnessConstants {
    /// Frequency localisation `theta < 1/2`.
    pub theta: f64,
    /// Fraction `c < 1` of the Gevrey radius on the difference frequency.
    pub c: f64,
    /// Exponent constant in the `w` ratio inequality.
    pub k_wrat: f64,
    /// Exponent constant (times `mu`) in the `w3` swap inequalities.
    pub k_swap: f64,
}

impl HarnessConstants {
    pub fn for_params(p: &NormParams) -> Self {
        HarnessConstants { theta: 0.45, c: 0.99, k_wrat: p.mu, k_swap: 1.0 }
    }
}

fn sgn_class(k: i64) -> bool {
    k != 0
}

/// `log Gamma(i, j, a, b)`; `a`, `b` true for nonzero x-frequency.
pub fn log_gamma(i: u8, j: u8, a: bool, b: bool, t: f64, xi: f64, lp: f64, delta1: f64) -> f64 {
    if (i, a) == (j, b) {
        return 0.0;
    }
    let r = jap(t / jap(xi.abs() + lp.abs())).ln();
    let lt = jap(t).ln();
    let d = delta1;
    let direct = |i: u8, j: u8, a: bool, b: bool| -> Option<f64> {
        Some(match (i, j, a, b) {
            (1, 2, false, false) | (1, 3, false, false) => -lt,
            (1, 2, true, true) => -lt - d * r,
            (1, 2, false, true) => -lt + r,
            (1, 2, true, false) => -lt - (1.0 + d) * r,
            (1, 3, true, true) => -lt + (1.0 - d) * r,
            (1, 3, false, true) => -lt + 2.0 * r,
            (1, 3, true, false) => -lt - (1.0 + d) * r,
            (2, 3, true, true) => r,
            (2, 3, false, true) => 2.0 * r,
            (2, 3, true, false) => -r,
            (2, 3, false, false) => 0.0,
            (1, 1, false, true) => (1.0 + d) * r,
            (2, 2, false, true) => r,
            (3, 3, false, true) => 2.0 * r,
            _ => return None,
        })
    };
    direct(i, j, a, b).or_else(|| direct(j, i, b, a).map(|v| -v)).unwrap_or(0.0)
}

fn comp(i: u8) -> Component {
    match i {
        1 => Component::One,
        2 => Component::Two,
        _ => Component::Three,
    }
}

fn l1_3(k: f64, e: f64, l: f64) -> f64 {
    k.abs() + e.abs() + l.abs()
}

fn chi_nr(t: f64, k: i64, eta: f64, xi: f64, l: f64, lp: f64) -> bool {
    let res = in_resonant_interval(t, k, eta) && in_resonant_interval(t, k, xi);
    !(res && l.abs() < eta.abs() / 5.0 && lp.abs() < xi.abs() / 5.0)
}

/// Log ratios of one inequality at one sample; several values when the
/// inequality is a family (e.g. over component pairs).
pub fn eval_lemma(id: &str, s: &Sample, p: &NormParams, hc: &HarnessConstants) -> Result<Vec<f64>> {
    let Sample { t, k, kp, eta, xi, l, lp } = *s;
    let kap = p.kappa;
    let mut out = Vec::new();
    match id {
        "ABasic12" => {
            let dk = (k - kp) as f64;
            let dn = l1_3(dk, eta - xi, l - lp);
            if dn > hc.theta * l1_3(k as f64, eta, l) {
                return Ok(out);
            }
            let ex = hc.c * p.lambda(t) * dn.powf(p.s);
            for i in 1..=2u8 {
                for j in 1..=2u8 {
                    let lhs = log_norm_a(comp(i), k, eta, l, t, p);
                    let g = log_gamma(i, j, sgn_class(k), sgn_class(kp), t, xi, lp, p.delta1);
                    let rhs = g + log_norm_a(comp(j), kp, xi, lp, t, p) + ex;
                    out.push(lhs - rhs);
                }
            }
        }
        "dtwBasicBrack" => {
            if t < 1.0 {
                return Ok(out);
            }
            let lhs = dlog_w(t, eta, kap).sqrt() + l1_3(k as f64, eta, l).powf(p.s / 2.0) / jap(t).powf(p.s);
            let base = dlog_w(t, xi, kap).sqrt() + jap(l1_3(kp as f64, xi, lp)).powf(p.s / 2.0) / jap(t).powf(p.s);
            let rhs = base * jap(l1_3((k - kp) as f64, eta - xi, l - lp)).powi(2);
            out.push(lhs.ln() - rhs.ln());
        }
        "basicNR" => {
            if k == 0 {
                return Ok(out);
            }
            if !chi_nr(t, k, eta, xi, l, lp) {
                return Ok(out);
            }
            let kf = k as f64;
            let lhs = 1.0 / l1_3(kf, eta - kf * t, l) + 1.0 / l1_3(kf, xi - kf * t, lp);
            let rhs = jap(l1_3(kf, t, lp)).recip() * jap((eta - xi).abs() + (l - lp).abs());
            out.push(lhs.ln() - rhs.ln());
        }
        "TriTriv" => {
            if k == 0 {
                return Ok(out);
            }
            let kf = k as f64;
            let lhs = (eta - kf * t).abs();
            if lhs == 0.0 {
                out.push(f64::NEG_INFINITY);
                return Ok(out);
            }
            let rhs = jap(eta - xi) * (kf.abs() + (xi - kf * t).abs());
            out.push(lhs.ln() - rhs.ln());
        }
        "ratlongtime" => {
            if k == 0 {
                return Ok(out);
            }
            let kf = k as f64;
            let lhs = jap(t / jap(xi.abs() + lp.abs())) / l1_3(kf, eta - kf * t, l);
            let rhs = jap((eta - xi).abs() + (l - lp).abs());
            out.push(lhs.ln() - rhs.ln());
        }
        "dtw" => {
            let a = eta.abs();
            if a <= 1.0 || t >= 2.0 * a {
                return Ok(out);
            }
            let d = dlog_w(t, eta, kap);
            if t <= 2.0 * a.sqrt() {
                let r = d / kap;
                out.push(r.ln().abs());
            }
            // the resonant frequency of the interval containing t
            if let Some((r, _)) = locate(t, a) {
                let rs = if eta > 0.0 { r as i64 } else { -(r as i64) };
                if in_resonant_interval(t, rs, eta) {
                    let model = kap / (1.0 + (a / r as f64 - t).abs()) + kap * r as f64 / t;
                    out.push((d / model).ln().abs());
                    // the same statement for w3, whose log derivative is
                    // compared through finite differences
                    let h = 1e-6 * t;
                    let d3 = (log_w3(t + h, kp, eta, kap) - log_w3(t - h, kp, eta, kap)) / (2.0 * h);
                    if locate(t - h, a).map(|x| x.0) == Some(r) && locate(t + h, a).map(|x| x.0) == Some(r) && d3 > 0.0 {
                        out.push((d3 / model).ln().abs());
                    }
                }
            }
        }
        "wRat" => {
            let lhs = log_w(t, eta, kap) - log_w(t, xi, kap);
            out.push(lhs - hc.k_wrat * (eta - xi).abs().sqrt());
        }
        "Jswap" | "JswapBasic" | "JswapNRGain" => {
            let lhs = log_w3(t, kp, eta, kap) - log_w3(t, k, xi, kap);
            let ex = hc.k_swap * p.mu * l1_3((k - kp) as f64, eta - xi, 0.0).sqrt();
            let kf = k as f64;
            match id {
                "Jswap" => {
                    if k != 0 {
                        let f = (t / (kf.abs() + (eta - kf * t).abs())).ln();
                        out.push(lhs - f - ex);
                    }
                }
                "JswapBasic" => {
                    let cond = !in_resonant_interval(t, k, eta)
                        || k == kp
                        || (in_resonant_interval(t, k, eta) && !in_resonant_interval(t, k, xi));
                    if cond {
                        out.push(lhs - ex);
                    }
                }
                _ => {
                    if k != kp && in_resonant_interval(t, kp, xi) {
                        let f = ((kp as f64).abs() + (xi - kp as f64 * t).abs()).ln() - t.ln();
                        out.push(lhs - f - ex);
                    }
                }
            }
        }
        other => return Err(Error::UnknownLemma(other.to_string())),
    }
    Ok(out)
}

/// Deterministic sample set: random tuples plus structured ones that sit
/// on resonances, equal frequencies and interval endpoints.
pub fn samples(bx: &LemmaBox, n_random: usize, seed: u64) -> Vec<Sample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n_random * 2);
    let em = bx.etamax;
    let lt = (bx.tmin.ln(), bx.tmax.ln());
    let int = |rng: &mut ChaCha8Rng, m: f64| rng.gen_range(-m..=m).round();
    for _ in 0..n_random {
        let k = rng.gen_range(-bx.kmax..=bx.kmax);
        let kp = rng.gen_range(-bx.kmax..=bx.kmax);
        let eta = int(&mut rng, em);
        // nearby input frequencies dominate the interesting cases
        let xi = if rng.gen_bool(0.5) {
            (eta + rng.gen_range(-8.0f64..=8.0).round()).clamp(-em, em)
        } else {
            int(&mut rng, em)
        };
        let l = int(&mut rng, bx.lmax);
        let lp = if rng.gen_bool(0.5) { l } else { int(&mut rng, bx.lmax) };
        let t = rng.gen_range(lt.0..=lt.1).exp();
        out.push(Sample { t, k, kp, eta, xi, l, lp });
    }
    // structured: resonant times of (k, eta) with xi near eta
    let step = (em / 32.0).max(1.0);
    let mut e = 2.0;
    while e <= em {
        for sgn in [1.0, -1.0] {
            let eta = sgn * e;
            let n = n_intervals(eta);
            for r in 1..=n.min(bx.kmax as u64) {
                let rk = if sgn > 0.0 { r as i64 } else { -(r as i64) };
                let ts = [tk(r, e), e / r as f64, tk(r - 1, e), 0.5 * (tk(r, e) + e / r as f64)];
                for &t in &ts {
                    if t < bx.tmin || t > bx.tmax {
                        continue;
                    }
                    for dxi in [0.0, 1.0, -1.0, 4.0] {
                        for kp in [rk, rk - 1, rk + 1, 0] {
                            for (l, lp) in [(0.0, 0.0), (1.0, 0.0), (0.0, bx.lmax)] {
                                out.push(Sample { t, k: rk, kp, eta, xi: eta + dxi, l, lp });
                                out.push(Sample { t, k: kp, kp: rk, eta: eta + dxi, xi: eta, l, lp });
                            }
                        }
                    }
                }
            }
            for t in [bx.tmin, e.sqrt(), 2.0 * e.sqrt(), e, 2.0 * e] {
                if t >= bx.tmin && t <= bx.tmax {
                    out.push(Sample { t, k: 1, kp: 1, eta, xi: eta, l: 0.0, lp: 0.0 });
                    out.push(Sample { t, k: 0, kp: 1, eta, xi: eta, l: 1.0, lp: 1.0 });
                }
            }
        }
        e += step;
    }
    out
}

/// Empirical constant of one inequality over a box.
pub fn verify_lemma(id: &str, bx: &LemmaBox, n_random: usize, seed: u64, p: &NormParams) -> Result<LemmaReport> {
    if !REGISTERED.contains(&id) {
        return Err(Error::UnknownLemma(id.to_string()));
    }
    let hc = HarnessConstants::for_params(p);
    let pts = samples(bx, n_random, seed);
    let vals: Vec<(usize, f64, usize)> = pts
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            let v = eval_lemma(id, s, p, &hc).unwrap_or_default();
            let n = v.len();
            (i, v.into_iter().fold(f64::NEG_INFINITY, f64::max), n)
        })
        .collect();
    let mut best = f64::NEG_INFINITY;
    let mut arg = None;
    let mut evaluated = 0;
    for (i, v, n) in vals {
        evaluated += n;
        if v > best {
            best = v;
            arg = Some(pts[i]);
        }
    }
    Ok(LemmaReport {
        lemma_id: id.to_string(),
        r#box: *bx,
        evaluated,
        log_max_ratio: best,
        max_ratio: best.exp(),
        argmax: arg,
    })
}
