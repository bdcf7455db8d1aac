//! Linearized dynamics around Couette flow, one shear-frame Fourier mode at
//! a time, evolved on `q = Delta u`, plus least-squares rate fits.

use crate::grid::{laplacian_l_symbol, symbol_integral, GridSpec, VectorField};
use crate::{Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeState {
    pub k: f64,
    pub eta: f64,
    pub l: f64,
    pub q: [Complex64; 3],
    pub t: f64,
}

impl ModeState {
    /// State with velocity coefficients `u` at time `t`.
    pub fn from_velocity(k: f64, eta: f64, l: f64, u: [Complex64; 3], t: f64) -> Result<Self> {
        let s = laplacian_l_symbol(k, eta, l, t);
        if s == 0.0 {
            return Err(Error::Domain("the zero mode has no q representation".into()));
        }
        Ok(ModeState { k, eta, l, q: [u[0] * s, u[1] * s, u[2] * s], t })
    }

    pub fn velocity(&self) -> [Complex64; 3] {
        let s = laplacian_l_symbol(self.k, self.eta, self.l, self.t);
        [self.q[0] / s, self.q[1] / s, self.q[2] / s]
    }

    /// `|k u1 + (eta - k t) u2 + l u3| / (|k~| |u|)`.
    pub fn divergence_defect(&self) -> f64 {
        let u = self.velocity();
        let e = self.eta - self.k * self.t;
        let d = u[0] * self.k + u[1] * e + u[2] * self.l;
        let n = (self.k * self.k + e * e + self.l * self.l).sqrt()
            * (u[0].norm_sqr() + u[1].norm_sqr() + u[2].norm_sqr()).sqrt();
        if n == 0.0 {
            0.0
        } else {
            d.norm() / n
        }
    }
}

/// Inviscid part of the `q` equations.
fn forcing(k: f64, eta: f64, l: f64, t: f64, q: &[Complex64; 3]) -> [Complex64; 3] {
    let s = laplacian_l_symbol(k, eta, l, t);
    let u = [q[0] / s, q[1] / s, q[2] / s];
    let e = eta - k * t;
    [
        u[0] * (2.0 * k * e) - q[1] - u[1] * (2.0 * k * k),
        Complex64::new(0.0, 0.0),
        u[2] * (2.0 * k * e) - u[1] * (2.0 * k * l),
    ]
}

fn scale3(a: &[Complex64; 3], f: f64) -> [Complex64; 3] {
    [a[0] * f, a[1] * f, a[2] * f]
}

fn add3(a: &[Complex64; 3], b: &[Complex64; 3], h: f64) -> [Complex64; 3] {
    [a[0] + b[0] * h, a[1] + b[1] * h, a[2] + b[2] * h]
}

/// One integrating-factor RK4 step of length `dt`. The viscous factor is
/// exact; the result is made solenoidal along `(k, 0, l)` so that `q2`
/// keeps its exact decoupled evolution.
pub fn linear_mode_step(state: &ModeState, nu: f64, dt: f64) -> ModeState {
    let ModeState { k, eta, l, q, t } = *state;
    let h = dt;
    let tm = t + 0.5 * h;
    let phi = |a: f64, b: f64| (-nu * symbol_integral(k, eta, l, a, b)).exp();
    let (pa, pb, pf) = (phi(t, tm), phi(tm, t + h), phi(t, t + h));
    let fa = forcing(k, eta, l, t, &q);
    let ua = scale3(&add3(&q, &fa, 0.5 * h), pa);
    let fb = forcing(k, eta, l, tm, &ua);
    let ub = add3(&scale3(&q, pa), &fb, 0.5 * h);
    let fc = forcing(k, eta, l, tm, &ub);
    let uc = add3(&scale3(&q, pf), &scale3(&fc, pb), h);
    let fd = forcing(k, eta, l, t + h, &uc);
    let mut out = [Complex64::new(0.0, 0.0); 3];
    for i in 0..3 {
        out[i] = q[i] * pf + (fa[i] * pf + (fb[i] + fc[i]) * (2.0 * pb) + fd[i]) * (h / 6.0);
    }
    let mut s = ModeState { k, eta, l, q: out, t: t + h };
    let kl = k * k + l * l;
    if kl > 0.0 {
        let u = s.velocity();
        let e = eta - k * s.t;
        let d = (u[0] * k + u[1] * e + u[2] * l) / kl;
        let sym = laplacian_l_symbol(k, eta, l, s.t);
        s.q[0] -= d * k * sym;
        s.q[2] -= d * l * sym;
    }
    s
}

/// `min(0.01, 0.1 / max |k~|)` over `[t0, t1]`.
pub fn default_dt(k: f64, eta: f64, l: f64, t0: f64, t1: f64) -> f64 {
    let e = (eta - k * t0).abs().max((eta - k * t1).abs());
    let kmax = (k * k + e * e + l * l).sqrt();
    if kmax == 0.0 {
        0.01
    } else {
        0.01f64.min(0.1 / kmax)
    }
}

/// Trajectory sampled every `every` steps (and at the end).
pub fn evolve_mode(state: &ModeState, nu: f64, tmax: f64, dt: f64, every: usize) -> Vec<ModeState> {
    let mut s = *state;
    let mut out = vec![s];
    let n = ((tmax - s.t) / dt).ceil().max(0.0) as usize;
    let every = every.max(1);
    for i in 0..n {
        let h = dt.min(tmax - s.t);
        if h <= 0.0 {
            break;
        }
        s = linear_mode_step(&s, nu, h);
        if (i + 1) % every == 0 || i + 1 == n {
            out.push(s);
        }
    }
    out
}

/// Closed-form `q2(t) / q2(t0)`.
pub fn q2_factor(k: f64, eta: f64, l: f64, nu: f64, t0: f64, t: f64) -> f64 {
    (-nu * symbol_integral(k, eta, l, t0, t)).exp()
}

/// Exact lift-up and heat-semigroup evolution of the `k = 0` modes.
pub fn zero_mode_evolution(u: &VectorField, nu: f64, t: f64) -> Result<VectorField> {
    let g: GridSpec = u.grid();
    for i in 0..g.len() {
        let (ix, _, _) = g.unidx(i);
        if GridSpec::mode(ix, g.nx) != 0 && u.c.iter().any(|c| c.coeffs[i].norm_sqr() > 0.0) {
            return Err(Error::Precondition("input has nonzero x-frequency content".into()));
        }
    }
    let mut out = VectorField::zeros(g, u.frame());
    out.set_t_remap(u.t_remap());
    for i in 0..g.len() {
        let (_, e, l) = g.wavenumber(i);
        let f = (-nu * t * (e * e + l * l)).exp();
        let (u1, u2, u3) = (u.c[0].coeffs[i], u.c[1].coeffs[i], u.c[2].coeffs[i]);
        out.c[0].coeffs[i] = (u1 - u2 * t) * f;
        out.c[1].coeffs[i] = u2 * f;
        out.c[2].coeffs[i] = u3 * f;
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateModel {
    /// `log v = p log t + c`
    PowerLaw,
    /// `log v = r t^3 + c`
    CubicExp,
    /// `v = a t + c`
    Linear,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub coefficient: f64,
    pub intercept: f64,
    /// RMS residual in the fitted variable.
    pub residual: f64,
}

pub fn fit_rates(series: &[(f64, f64)], model: RateModel) -> Result<RateFit> {
    if series.len() < 8 {
        return Err(Error::Degenerate(format!("need at least 8 samples, got {}", series.len())));
    }
    let mut rows = Vec::with_capacity(series.len());
    let mut ys = Vec::with_capacity(series.len());
    for &(t, v) in series {
        let (x, y) = match model {
            RateModel::PowerLaw => {
                if t <= 0.0 || v <= 0.0 {
                    return Err(Error::Degenerate("power-law fit needs positive t and values".into()));
                }
                (t.ln(), v.ln())
            }
            RateModel::CubicExp => {
                if v <= 0.0 {
                    return Err(Error::Degenerate("exponential fit needs positive values".into()));
                }
                (t * t * t, v.ln())
            }
            RateModel::Linear => (t, v),
        };
        if !(x.is_finite() && y.is_finite()) {
            return Err(Error::Degenerate("non-finite sample".into()));
        }
        rows.push([x, 1.0]);
        ys.push(y);
    }
    let beta = least_squares(&rows, &ys)?;
    let rss: f64 = rows.iter().zip(&ys).map(|(r, y)| (y - beta[0] * r[0] - beta[1]).powi(2)).sum();
    Ok(RateFit { coefficient: beta[0], intercept: beta[1], residual: (rss / ys.len() as f64).sqrt() })
}

/// Least squares by Householder QR. Fails on rank deficiency.
pub fn least_squares<const P: usize>(rows: &[[f64; P]], ys: &[f64]) -> Result<[f64; P]> {
    let m = rows.len();
    if m < P {
        return Err(Error::Degenerate("fewer samples than unknowns".into()));
    }
    // column scaling keeps the conditioning independent of units
    let mut scale = [0.0; P];
    for j in 0..P {
        scale[j] = rows.iter().map(|r| r[j] * r[j]).sum::<f64>().sqrt();
        if scale[j] == 0.0 {
            return Err(Error::Degenerate("zero regressor column".into()));
        }
    }
    let mut a: Vec<[f64; P]> = rows.iter().map(|r| std::array::from_fn(|j| r[j] / scale[j])).collect();
    let mut b = ys.to_vec();
    for j in 0..P {
        let norm = (j..m).map(|i| a[i][j] * a[i][j]).sum::<f64>().sqrt();
        if norm < 1e-12 {
            return Err(Error::Degenerate("regressors are collinear".into()));
        }
        let alpha = if a[j][j] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = (j..m).map(|i| a[i][j]).collect();
        v[0] -= alpha;
        let vn: f64 = v.iter().map(|x| x * x).sum();
        if vn == 0.0 {
            continue;
        }
        for c in j..P {
            let d: f64 = (j..m).map(|i| v[i - j] * a[i][c]).sum::<f64>() * 2.0 / vn;
            for i in j..m {
                a[i][c] -= d * v[i - j];
            }
        }
        let d: f64 = (j..m).map(|i| v[i - j] * b[i]).sum::<f64>() * 2.0 / vn;
        for i in j..m {
            b[i] -= d * v[i - j];
        }
    }
    let mut x = [0.0; P];
    for j in (0..P).rev() {
        let mut s = b[j];
        for c in j + 1..P {
            s -= a[j][c] * x[c];
        }
        x[j] = s / a[j][j];
    }
    for j in 0..P {
        x[j] /= scale[j];
    }
    Ok(x)
}
