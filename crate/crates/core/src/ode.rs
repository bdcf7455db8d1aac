//! Time integrators: a generic integrating-factor RK4 for the spectral
//! solvers and an adaptive Dormand-Prince 5(4) for small real systems.

use crate::{Error, Result};

/// A semi-linear system `du/dt = E u + F(t, u)` whose linear part has a
/// known propagator.
pub trait IfSystem {
    type State: Clone;

    fn rhs(&self, t: f64, u: &Self::State) -> Result<Self::State>;

    /// Apply the linear propagator from `a` to `b` in place.
    fn propagate(&self, u: &mut Self::State, a: f64, b: f64);

    /// `y += h x`.
    fn axpy(&self, y: &mut Self::State, h: f64, x: &Self::State);
}

/// One Lawson RK4 step of length `h`.
pub fn lawson_rk4<S: IfSystem>(sys: &S, t: f64, u: &S::State, h: f64) -> Result<S::State> {
    let tm = t + 0.5 * h;
    let te = t + h;
    let a = sys.rhs(t, u)?;

    let mut ua = u.clone();
    sys.axpy(&mut ua, 0.5 * h, &a);
    sys.propagate(&mut ua, t, tm);
    let b = sys.rhs(tm, &ua)?;

    let mut ub = u.clone();
    sys.propagate(&mut ub, t, tm);
    sys.axpy(&mut ub, 0.5 * h, &b);
    let c = sys.rhs(tm, &ub)?;

    let mut cc = c.clone();
    sys.propagate(&mut cc, tm, te);
    let mut uc = u.clone();
    sys.propagate(&mut uc, t, te);
    sys.axpy(&mut uc, h, &cc);
    let d = sys.rhs(te, &uc)?;

    // u' = E u + h/6 (E a + 2 E_m (b + c) + d)
    let mut bc = b;
    sys.axpy(&mut bc, 1.0, &c);
    sys.propagate(&mut bc, tm, te);
    let mut acc = u.clone();
    sys.axpy(&mut acc, h / 6.0, &a);
    sys.propagate(&mut acc, t, te);
    sys.axpy(&mut acc, h / 3.0, &bc);
    sys.axpy(&mut acc, h / 6.0, &d);
    Ok(acc)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dp45Options {
    pub rtol: f64,
    pub atol: f64,
    pub h0: f64,
    pub hmin: f64,
    pub max_steps: usize,
}

impl Default for Dp45Options {
    fn default() -> Self {
        Dp45Options { rtol: 1e-9, atol: 1e-12, h0: 1e-3, hmin: 1e-12, max_steps: 5_000_000 }
    }
}

/// Why an adaptive integration stopped before its end time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Stop {
    Completed,
    /// The supplied predicate fired at this time.
    Event(f64),
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Integrate `y' = f(t, y)` from `t0` to `t1`, calling `observe` after
/// every accepted step. `stop` is checked on accepted states.
pub fn dp45<F, O, P>(
    f: F,
    t0: f64,
    y0: &[f64],
    t1: f64,
    opts: &Dp45Options,
    mut observe: O,
    stop: P,
) -> Result<(Vec<f64>, f64, Stop)>
where
    F: Fn(f64, &[f64], &mut [f64]),
    O: FnMut(f64, &[f64]),
    P: Fn(f64, &[f64]) -> bool,
{
    let n = y0.len();
    let mut y = y0.to_vec();
    let mut t = t0;
    let mut h = opts.h0.min(t1 - t0);
    let mut k = vec![vec![0.0; n]; 7];
    let mut tmp = vec![0.0; n];
    let mut y5 = vec![0.0; n];
    observe(t, &y);
    if stop(t, &y) {
        return Ok((y, t, Stop::Event(t)));
    }
    f(t, &y, &mut k[0]);
    let mut steps = 0;
    while t < t1 {
        if steps >= opts.max_steps {
            return Err(Error::Convergence(format!("dp45 exceeded {} steps at t = {t}", opts.max_steps)));
        }
        steps += 1;
        h = h.min(t1 - t);
        for s in 1..7 {
            for i in 0..n {
                let mut acc = y[i];
                for j in 0..s {
                    acc += h * A[s][j] * k[j][i];
                }
                tmp[i] = acc;
            }
            f(t + C[s] * h, &tmp, &mut k[s]);
            if s == 6 {
                y5.copy_from_slice(&tmp);
            }
        }
        let mut err: f64 = 0.0;
        for i in 0..n {
            let mut e = 0.0;
            for s in 0..7 {
                e += (B5[s] - B4[s]) * k[s][i];
            }
            let sc = opts.atol + opts.rtol * y[i].abs().max(y5[i].abs());
            err = err.max((h * e / sc).abs());
        }
        if !err.is_finite() {
            if h <= opts.hmin {
                return Err(Error::Convergence(format!("non-finite state at t = {t}")));
            }
            h *= 0.25;
            continue;
        }
        if err <= 1.0 {
            t += h;
            y.copy_from_slice(&y5);
            k.swap(0, 6);
            observe(t, &y);
            if stop(t, &y) {
                return Ok((y, t, Stop::Event(t)));
            }
        } else if h <= opts.hmin {
            return Err(Error::Convergence(format!("step size underflow at t = {t}")));
        }
        let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h = (h * fac).max(opts.hmin);
    }
    Ok((y, t, Stop::Completed))
}
