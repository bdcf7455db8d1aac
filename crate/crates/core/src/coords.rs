//! Streak-following coordinates `Y = y + psi`, `Z = z + phi` on the
//! x-averaged plane. The unknowns are `C1 = psi`, `C2 = phi` and
//! `g = (U1_0 - C1) / t`, all functions of `(Y, Z)`.

use crate::grid::{Fft3, Frame, GridSpec, SpectralField};
use crate::ode::{lawson_rk4, IfSystem};
use crate::streak::{single_mode, StreakSolver, StreakState};
use crate::{jap, Error, Result};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Largest admissible `|grad C|` at any point.
pub const GRAD_LIMIT: f64 = 0.5;
pub const INVERSE_TOL: f64 = 1e-12;
pub const INVERSE_MAX_ITER: usize = 50;

#[derive(Clone, Debug, PartialEq)]
pub struct CoordState {
    pub c1: SpectralField,
    pub c2: SpectralField,
    pub g: SpectralField,
    pub t: f64,
    pub nu: f64,
}

impl CoordState {
    /// Identity map at time `t >= 1` with `g = u1_0 / t`.
    pub fn initial(u1: &SpectralField, t: f64, nu: f64) -> Result<Self> {
        if t < 1.0 {
            return Err(Error::Domain("coordinate evolution starts at t >= 1".into()));
        }
        if u1.grid.nx != 1 {
            return Err(Error::Precondition("coordinates live on a planar grid".into()));
        }
        let z = SpectralField::zeros(u1.grid, Frame::Lab);
        let mut g = u1.clone();
        g.frame = Frame::Lab;
        g.scale(1.0 / t);
        Ok(CoordState { c1: z.clone(), c2: z, g, t, nu })
    }

    pub fn grid(&self) -> GridSpec {
        self.c1.grid
    }
}

/// Jacobian factors on the physical `(Y, Z)` grid, row-major like the
/// transform.
#[derive(Clone, Debug, PartialEq)]
pub struct JacobianSet {
    pub psi_y: Vec<f64>,
    pub psi_z: Vec<f64>,
    pub phi_y: Vec<f64>,
    pub phi_z: Vec<f64>,
    /// `(C1_Y, C1_Z, C2_Y, C2_Z)` used to build the factors.
    pub grad_c: [Vec<f64>; 4],
}

impl JacobianSet {
    pub fn g_yy(&self) -> Vec<f64> {
        (0..self.psi_y.len()).map(|i| (1.0 + self.psi_y[i]).powi(2) + self.psi_z[i].powi(2) - 1.0).collect()
    }

    pub fn g_yz(&self) -> Vec<f64> {
        (0..self.psi_y.len())
            .map(|i| 2.0 * self.phi_y[i] * (1.0 + self.psi_y[i]) + 2.0 * self.psi_z[i] * (1.0 + self.phi_z[i]))
            .collect()
    }

    pub fn g_zz(&self) -> Vec<f64> {
        (0..self.psi_y.len()).map(|i| (1.0 + self.phi_z[i]).powi(2) + self.phi_y[i].powi(2) - 1.0).collect()
    }

    /// Max residual of the four chain-rule identities.
    pub fn residual(&self) -> f64 {
        let [a, b, c, d] = &self.grad_c;
        let mut worst: f64 = 0.0;
        for i in 0..a.len() {
            let (py, pz, fy, fz) = (self.psi_y[i], self.psi_z[i], self.phi_y[i], self.phi_z[i]);
            let r = [
                py - (1.0 + py) * a[i] - fy * b[i],
                pz - (1.0 + fz) * b[i] - pz * a[i],
                fy - (1.0 + py) * c[i] - fy * d[i],
                fz - (1.0 + fz) * d[i] - pz * c[i],
            ];
            worst = r.iter().fold(worst, |w, x| w.max(x.abs()));
        }
        worst
    }

    /// Smallest determinant of `d(y, z) / d(Y, Z)`.
    pub fn det_min(&self) -> f64 {
        let [a, b, c, d] = &self.grad_c;
        (0..a.len()).map(|i| (1.0 - a[i]) * (1.0 - d[i]) - b[i] * c[i]).fold(f64::INFINITY, f64::min)
    }

    /// Spectral representation of one factor.
    pub fn field(values: &[f64], grid: GridSpec, fft: &Fft3) -> SpectralField {
        SpectralField::from_real(grid, Frame::Lab, values, fft)
    }
}

// Gaussian elimination with partial pivoting on a 4x4 system.
fn solve4(mut a: [[f64; 4]; 4], mut b: [f64; 4]) -> Option<[f64; 4]> {
    for col in 0..4 {
        let p = (col..4).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[p][col].abs() < 1e-14 {
            return None;
        }
        a.swap(col, p);
        b.swap(col, p);
        for r in col + 1..4 {
            let f = a[r][col] / a[col][col];
            for c in col..4 {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = [0.0; 4];
    for r in (0..4).rev() {
        let mut s = b[r];
        for c in r + 1..4 {
            s -= a[r][c] * x[c];
        }
        x[r] = s / a[r][r];
    }
    Some(x)
}

/// Pointwise solve for `(psi_y, psi_z, phi_y, phi_z)` from the gradients of
/// `C1`, `C2`.
pub fn jacobian_from_c(c1: &SpectralField, c2: &SpectralField, fft: &Fft3) -> Result<JacobianSet> {
    let grads = [c1.deriv(1), c1.deriv(2), c2.deriv(1), c2.deriv(2)].map(|f| f.to_real(fft));
    let n = grads[0].len();
    let worst = grads.iter().flatten().fold(0.0f64, |w, x| w.max(x.abs()));
    if !(worst < GRAD_LIMIT) {
        return Err(Error::Singular { t: f64::NAN, msg: format!("|grad C| = {worst:.3e} exceeds {GRAD_LIMIT}") });
    }
    let mut out = [vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    for i in 0..n {
        let (a, b, c, d) = (grads[0][i], grads[1][i], grads[2][i], grads[3][i]);
        let m = [
            [1.0 - a, 0.0, -b, 0.0],
            [0.0, 1.0 - a, 0.0, -b],
            [-c, 0.0, 1.0 - d, 0.0],
            [0.0, -c, 0.0, 1.0 - d],
        ];
        let x = solve4(m, [a, b, c, d])
            .ok_or_else(|| Error::Singular { t: f64::NAN, msg: "singular Jacobian system".into() })?;
        for j in 0..4 {
            out[j][i] = x[j];
        }
    }
    let [psi_y, psi_z, phi_y, phi_z] = out;
    Ok(JacobianSet { psi_y, psi_z, phi_y, phi_z, grad_c: grads })
}

fn forward_masked(values: Vec<f64>, grid: GridSpec, fft: &Fft3) -> SpectralField {
    let mut f = SpectralField::from_real(grid, Frame::Lab, &values, fft);
    f.apply_mask();
    f
}

/// `(d^t_Y f, d^t_Z f)` on the physical grid.
pub fn nabla_t(f: &SpectralField, jac: &JacobianSet, fft: &Fft3) -> (Vec<f64>, Vec<f64>) {
    let fy = f.deriv(1).to_real(fft);
    let fz = f.deriv(2).to_real(fft);
    let ay = (0..fy.len()).map(|i| (1.0 + jac.psi_y[i]) * fy[i] + jac.phi_y[i] * fz[i]).collect();
    let az = (0..fy.len()).map(|i| (1.0 + jac.phi_z[i]) * fz[i] + jac.psi_z[i] * fy[i]).collect();
    (ay, az)
}

/// `Delta_t f = d^t_Y d^t_Y f + d^t_Z d^t_Z f`, composed directly.
pub fn delta_t(f: &SpectralField, jac: &JacobianSet, fft: &Fft3) -> SpectralField {
    let g = f.grid;
    let (ay, az) = nabla_t(f, jac, fft);
    let (yy, _) = nabla_t(&forward_masked(ay, g, fft), jac, fft);
    let (_, zz) = nabla_t(&forward_masked(az, g, fft), jac, fft);
    forward_masked(yy.iter().zip(&zz).map(|(a, b)| a + b).collect(), g, fft)
}

/// `Delta_t f` with the first-order terms removed: `Delta f + G_yy f_YY +
/// G_yz f_YZ + G_zz f_ZZ`.
pub fn delta_t_tilde(f: &SpectralField, jac: &JacobianSet, fft: &Fft3) -> SpectralField {
    let g = f.grid;
    let fy = f.deriv(1);
    let (fyy, fyz, fzz) = (fy.deriv(1).to_real(fft), fy.deriv(2).to_real(fft), f.deriv(2).deriv(2).to_real(fft));
    let (gyy, gyz, gzz) = (jac.g_yy(), jac.g_yz(), jac.g_zz());
    let v = (0..fyy.len())
        .map(|i| (1.0 + gyy[i]) * fyy[i] + gyz[i] * fyz[i] + (1.0 + gzz[i]) * fzz[i])
        .collect();
    forward_masked(v, g, fft)
}

/// Which Laplacian drives the viscous terms.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CoordLaplacian {
    #[default]
    Tilde,
    Full,
}

/// Evaluation of a planar field at arbitrary `(y, z)` by direct summation.
pub struct PlanarEval<'a> {
    f: &'a SpectralField,
}

impl<'a> PlanarEval<'a> {
    pub fn new(f: &'a SpectralField) -> Self {
        PlanarEval { f }
    }

    pub fn eval(&self, y: f64, z: f64) -> f64 {
        let g = self.f.grid;
        let ez: Vec<Complex64> = (0..g.nz).map(|iz| Complex64::from_polar(1.0, g.kz(iz) * z)).collect();
        let mut acc = Complex64::new(0.0, 0.0);
        for iy in 0..g.ny {
            let row = &self.f.coeffs[g.idx(0, iy, 0)..g.idx(0, iy, 0) + g.nz];
            let s: Complex64 = row.iter().zip(&ez).map(|(c, e)| c * e).sum();
            acc += s * Complex64::from_polar(1.0, g.ky(iy) * y);
        }
        acc.re
    }
}

/// Lab-coordinate field `u(y, z)` expressed at the grid points of `(Y, Z)`:
/// `U(Y, Z) = u(Y - C1, Z - C2)`.
pub fn compose_to_new(u: &SpectralField, c1: &[f64], c2: &[f64], fft: &Fft3) -> SpectralField {
    let g = u.grid;
    let ev = PlanarEval::new(u);
    let v: Vec<f64> = (0..g.len())
        .into_par_iter()
        .map(|i| {
            let (_, y, z) = g.point(i);
            ev.eval(y - c1[i], z - c2[i])
        })
        .collect();
    forward_masked(v, g, fft)
}

/// Solve `Y = y + C1(Y, Z)`, `Z = z + C2(Y, Z)` at every lab grid point.
/// Returns `(psi, phi)` on the lab grid and the largest iteration count.
pub fn inverse_map(state: &CoordState) -> Result<(Vec<f64>, Vec<f64>, usize)> {
    let g = state.grid();
    let (e1, e2) = (PlanarEval::new(&state.c1), PlanarEval::new(&state.c2));
    let res: Vec<Result<(f64, f64, usize)>> = (0..g.len())
        .into_par_iter()
        .map(|i| {
            let (_, y, z) = g.point(i);
            let (mut yy, mut zz) = (y, z);
            for it in 1..=INVERSE_MAX_ITER {
                let (ny, nz) = (y + e1.eval(yy, zz), z + e2.eval(yy, zz));
                let d = (ny - yy).abs().max((nz - zz).abs());
                yy = ny;
                zz = nz;
                if d <= INVERSE_TOL {
                    return Ok((yy - y, zz - z, it));
                }
            }
            Err(Error::Convergence(format!("inverse map did not converge at point {i}")))
        })
        .collect();
    let mut psi = Vec::with_capacity(g.len());
    let mut phi = Vec::with_capacity(g.len());
    let mut worst = 0;
    for r in res {
        let (a, b, it) = r?;
        psi.push(a);
        phi.push(b);
        worst = worst.max(it);
    }
    Ok((psi, phi, worst))
}

/// `H^s` norm, mean-square normalised.
pub fn sobolev_norm(f: &SpectralField, s: f64) -> f64 {
    let g = f.grid;
    (0..g.len())
        .map(|i| {
            let (k, e, l) = g.wavenumber(i);
            (1.0 + k * k + e * e + l * l).powf(s) * f.coeffs[i].norm_sqr()
        })
        .sum::<f64>()
        .sqrt()
}

/// `||psi - u1_0||_{H^s}` with `psi` read off the lab grid through the
/// inverse map.
pub fn psi_vs_u1(state: &CoordState, u1: &SpectralField, s: f64, fft: &Fft3) -> Result<f64> {
    if u1.grid != state.grid() {
        return Err(Error::Precondition("grids differ".into()));
    }
    let (psi, _, _) = inverse_map(state)?;
    let mut d = SpectralField::from_real(u1.grid, Frame::Lab, &psi, fft);
    d.axpy(Complex64::new(-1.0, 0.0), u1);
    Ok(sobolev_norm(&d, s))
}

/// Zero-mode lab velocity and optional x-average forcing of `g` at a time.
pub trait CoordFeed {
    /// `(u1_0, u2_0, u3_0)` in lab coordinates.
    fn velocity(&self, t: f64) -> Result<[SpectralField; 3]>;

    /// `(U_ne . grad U1_ne)_0` in the new coordinates, if streamed.
    fn g_forcing(&self, _t: f64) -> Option<SpectralField> {
        None
    }
}

/// Feed from a closure.
pub struct FnFeed<F>(pub F);

impl<F: Fn(f64) -> [SpectralField; 3]> CoordFeed for FnFeed<F> {
    fn velocity(&self, t: f64) -> Result<[SpectralField; 3]> {
        Ok((self.0)(t))
    }
}

/// Streak velocities at the three stage times of one step.
pub struct StageFeed {
    stages: Vec<(f64, [SpectralField; 3])>,
}

impl StageFeed {
    /// Advance the streak over `[s.t, s.t + h]` in two half steps, keeping
    /// the stage velocities. Returns the feed and the advanced streak.
    pub fn advance(solver: &StreakSolver, s: &StreakState, h: f64) -> Result<(Self, StreakState)> {
        let mid = solver.step(s, 0.5 * h)?;
        let end = solver.step(&mid, 0.5 * h)?;
        let vel = |x: &StreakState| {
            let (u2, u3) = x.velocity();
            [x.u1.clone(), u2, u3]
        };
        let stages = vec![(s.t, vel(s)), (mid.t, vel(&mid)), (end.t, vel(&end))];
        Ok((StageFeed { stages }, end))
    }
}

impl CoordFeed for StageFeed {
    fn velocity(&self, t: f64) -> Result<[SpectralField; 3]> {
        self.stages
            .iter()
            .find(|(s, _)| (s - t).abs() <= 1e-9 * (1.0 + t.abs()))
            .map(|(_, v)| v.clone())
            .ok_or_else(|| Error::Precondition(format!("no streak stage at t = {t}")))
    }
}

#[derive(Clone, Debug)]
struct CoordFields {
    c1: SpectralField,
    c2: SpectralField,
    g: SpectralField,
}

struct CoordSystem<'a, F: CoordFeed + ?Sized> {
    fft: &'a Fft3,
    feed: &'a F,
    nu: f64,
    lap: CoordLaplacian,
}

impl<F: CoordFeed + ?Sized> CoordSystem<'_, F> {
    // nu (L - Delta) f, the part of the viscous term not in the propagator
    fn visc_extra(&self, f: &SpectralField, jac: &JacobianSet, dc: Option<&(SpectralField, SpectralField)>) -> SpectralField {
        let mut out = delta_t_tilde(f, jac, self.fft);
        if let (CoordLaplacian::Full, Some((d1, d2))) = (self.lap, dc) {
            let fy = f.deriv(1).to_real(self.fft);
            let fz = f.deriv(2).to_real(self.fft);
            let (p1, p2) = (d1.to_real(self.fft), d2.to_real(self.fft));
            let v = (0..fy.len()).map(|i| p1[i] * fy[i] + p2[i] * fz[i]).collect();
            out.axpy(Complex64::new(1.0, 0.0), &forward_masked(v, f.grid, self.fft));
        }
        let g = f.grid;
        for i in 0..g.len() {
            let (_, e, l) = g.wavenumber(i);
            out.coeffs[i] += (e * e + l * l) * f.coeffs[i];
        }
        out.scale(self.nu);
        out
    }
}

impl<F: CoordFeed + ?Sized> IfSystem for CoordSystem<'_, F> {
    type State = CoordFields;

    fn rhs(&self, t: f64, u: &CoordFields) -> Result<CoordFields> {
        let fft = self.fft;
        let grid = u.c1.grid;
        let jac = jacobian_from_c(&u.c1, &u.c2, fft).map_err(|e| match e {
            Error::Singular { msg, .. } => Error::Singular { t, msg },
            other => other,
        })?;
        let (p1, p2) = (u.c1.to_real(fft), u.c2.to_real(fft));
        let [_, u2, u3] = self.feed.velocity(t)?;
        let big_u2 = compose_to_new(&u2, &p1, &p2, fft);
        let big_u3 = compose_to_new(&u3, &p1, &p2, fft);
        let pg = u.g.to_real(fft);
        let transport = |f: &SpectralField| {
            let fy = f.deriv(1).to_real(fft);
            forward_masked(pg.iter().zip(&fy).map(|(a, b)| -a * b).collect(), grid, fft)
        };
        let dc = match self.lap {
            CoordLaplacian::Full => Some((delta_t(&u.c1, &jac, fft), delta_t(&u.c2, &jac, fft))),
            CoordLaplacian::Tilde => None,
        };
        let one = Complex64::new(1.0, 0.0);

        let mut d1 = transport(&u.c1);
        d1.axpy(one, &u.g);
        d1.axpy(-one, &big_u2);
        d1.axpy(one, &self.visc_extra(&u.c1, &jac, dc.as_ref()));

        let mut d2 = transport(&u.c2);
        d2.axpy(-one, &big_u3);
        d2.axpy(one, &self.visc_extra(&u.c2, &jac, dc.as_ref()));

        let mut dg = transport(&u.g);
        dg.axpy(Complex64::new(-2.0 / t, 0.0), &u.g);
        if let Some(f) = self.feed.g_forcing(t) {
            dg.axpy(Complex64::new(-1.0 / t, 0.0), &f);
        }
        dg.axpy(one, &self.visc_extra(&u.g, &jac, dc.as_ref()));

        let bad = [&d1, &d2, &dg].iter().any(|f| f.coeffs.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()));
        if bad {
            return Err(Error::Singular { t, msg: "non-finite coordinate tendency".into() });
        }
        Ok(CoordFields { c1: d1, c2: d2, g: dg })
    }

    fn propagate(&self, u: &mut CoordFields, a: f64, b: f64) {
        let g = u.c1.grid;
        for i in 0..g.len() {
            let (_, e, l) = g.wavenumber(i);
            let f = (-self.nu * (e * e + l * l) * (b - a)).exp();
            u.c1.coeffs[i] *= f;
            u.c2.coeffs[i] *= f;
            u.g.coeffs[i] *= f;
        }
    }

    fn axpy(&self, y: &mut CoordFields, h: f64, x: &CoordFields) {
        let h = Complex64::new(h, 0.0);
        y.c1.axpy(h, &x.c1);
        y.c2.axpy(h, &x.c2);
        y.g.axpy(h, &x.g);
    }
}

/// One step of length `dt` for `(C1, C2, g)`.
pub fn evolve_coord<F: CoordFeed + ?Sized>(
    state: &CoordState,
    feed: &F,
    dt: f64,
    lap: CoordLaplacian,
    fft: &Fft3,
) -> Result<CoordState> {
    if state.t < 1.0 {
        return Err(Error::Domain("coordinate evolution needs t >= 1".into()));
    }
    let sys = CoordSystem { fft, feed, nu: state.nu, lap };
    let u = CoordFields { c1: state.c1.clone(), c2: state.c2.clone(), g: state.g.clone() };
    let out = lawson_rk4(&sys, state.t, &u, dt)?;
    Ok(CoordState { c1: out.c1, c2: out.c2, g: out.g, t: state.t + dt, nu: state.nu })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoordRecord {
    pub t: f64,
    pub g_norm: f64,
    pub c_norm: f64,
    pub psi_minus_u1: f64,
    pub det_min: f64,
    pub jac_residual: f64,
}

impl CoordRecord {
    pub fn of(state: &CoordState, u1: &SpectralField, fft: &Fft3) -> Result<Self> {
        let jac = jacobian_from_c(&state.c1, &state.c2, fft)?;
        Ok(CoordRecord {
            t: state.t,
            g_norm: state.g.norm(),
            c_norm: (state.c1.energy() + state.c2.energy()).sqrt(),
            psi_minus_u1: psi_vs_u1(state, u1, 0.0, fft)?,
            det_min: jac.det_min(),
            jac_residual: jac.residual(),
        })
    }
}

/// Run the streak from its current state to `t = 1`, then co-integrate the
/// coordinates to `tmax`. Records every `every` steps.
pub fn run_streak_fed(
    solver: &StreakSolver,
    streak0: &StreakState,
    dt: f64,
    tmax: f64,
    every: usize,
    lap: CoordLaplacian,
) -> Result<(CoordState, Vec<CoordRecord>)> {
    let fft = solver.fft();
    let mut s = streak0.clone();
    while s.t < 1.0 - 1e-12 {
        let h = dt.min(1.0 - s.t);
        s = solver.step(&s, h)?;
    }
    let mut c = CoordState::initial(&s.u1, s.t, solver.nu())?;
    let mut out = vec![CoordRecord::of(&c, &s.u1, fft)?];
    let n = ((tmax - c.t) / dt - 1e-9).ceil().max(0.0) as usize;
    for i in 0..n {
        let h = dt.min(tmax - c.t);
        let (feed, next) = StageFeed::advance(solver, &s, h)?;
        c = evolve_coord(&c, &feed, h, lap, fft)?;
        s = next;
        if (i + 1) % every.max(1) == 0 || i + 1 == n {
            out.push(CoordRecord::of(&c, &s.u1, fft)?);
        }
    }
    Ok((c, out))
}

/// `||g|| <t>^2 / eps` over a record series.
pub fn g_decay_constant(records: &[CoordRecord], eps: f64) -> f64 {
    records.iter().map(|r| r.g_norm * jap(r.t).powi(2) / eps).fold(0.0, f64::max)
}

/// `||psi - u1_0|| <t> / eps` over a record series.
pub fn psi_decay_constant(records: &[CoordRecord], eps: f64) -> f64 {
    records.iter().map(|r| r.psi_minus_u1 * jap(r.t) / eps).fold(0.0, f64::max)
}

/// Vorticity `2 eps cos(y + z) + 2 eps sin(2y - z)`.
pub fn vortex_pair(g: GridSpec, eps: f64) -> Result<SpectralField> {
    let mut w = single_mode(g, 1, 1, 2.0 * eps, false)?;
    w.axpy(Complex64::new(1.0, 0.0), &single_mode(g, 2, -1, 2.0 * eps, true)?);
    Ok(w)
}
