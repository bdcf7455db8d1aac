//! x-independent dynamics: 2D Navier-Stokes for `(u2, u3)` in
//! vorticity-streamfunction form and the lifted-up streak `u1`.
//!
//! Conventions: `omega = d_y u3 - d_z u2`, `u2 = d_z psi`, `u3 = -d_y psi`,
//! hence `Delta psi = -omega`.

use crate::grid::{Fft3, Frame, GridSpec, SpectralField};
use crate::ode::{lawson_rk4, IfSystem};
use crate::{Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Clone, Debug, PartialEq)]
pub struct StreakState {
    pub omega: SpectralField,
    pub u1: SpectralField,
    pub t: f64,
    pub nu: f64,
}

impl StreakState {
    pub fn new(omega: SpectralField, u1: SpectralField, t: f64, nu: f64) -> Result<Self> {
        if omega.grid != u1.grid || omega.grid.nx != 1 {
            return Err(Error::Precondition("streak fields must share one planar grid".into()));
        }
        Ok(StreakState { omega, u1, t, nu })
    }

    /// State from velocity components; the divergent part of `(u2, u3)`
    /// is discarded.
    pub fn from_velocity(u1: SpectralField, u2: &SpectralField, u3: &SpectralField, t: f64, nu: f64) -> Result<Self> {
        let g = u1.grid;
        let mut omega = SpectralField::zeros(g, u1.frame);
        for i in 0..g.len() {
            let (_, e, l) = g.wavenumber(i);
            omega.coeffs[i] = I * e * u3.coeffs[i] - I * l * u2.coeffs[i];
        }
        Self::new(omega, u1, t, nu)
    }

    pub fn grid(&self) -> GridSpec {
        self.omega.grid
    }

    pub fn streamfunction(&self) -> SpectralField {
        let g = self.grid();
        let mut psi = SpectralField::zeros(g, self.omega.frame);
        for i in 0..g.len() {
            let (_, e, l) = g.wavenumber(i);
            let k2 = e * e + l * l;
            if k2 > 0.0 {
                psi.coeffs[i] = self.omega.coeffs[i] / k2;
            }
        }
        psi
    }

    /// `(u2, u3)`.
    pub fn velocity(&self) -> (SpectralField, SpectralField) {
        let g = self.grid();
        let psi = self.streamfunction();
        let mut u2 = SpectralField::zeros(g, self.omega.frame);
        let mut u3 = u2.clone();
        for i in 0..g.len() {
            let (_, e, l) = g.wavenumber(i);
            u2.coeffs[i] = I * l * psi.coeffs[i];
            u3.coeffs[i] = -I * e * psi.coeffs[i];
        }
        (u2, u3)
    }

    /// `||u2||^2 + ||u3||^2` as a mean square.
    pub fn energy(&self) -> f64 {
        let (u2, u3) = self.velocity();
        u2.energy() + u3.energy()
    }

    pub fn enstrophy(&self) -> f64 {
        self.omega.energy()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StreakFields {
    pub omega: SpectralField,
    pub u1: SpectralField,
}

pub struct StreakSolver {
    grid: GridSpec,
    fft: Fft3,
    nu: f64,
}

impl StreakSolver {
    pub fn new(grid: GridSpec, nu: f64) -> Result<Self> {
        if grid.nx != 1 {
            return Err(Error::Precondition("streak solver needs a planar grid".into()));
        }
        Ok(StreakSolver { grid, fft: Fft3::new(grid), nu })
    }

    /// Time derivative `(d omega, d u1)` including the viscous terms.
    pub fn rhs(&self, state: &StreakState) -> Result<(SpectralField, SpectralField)> {
        let f = StreakFields { omega: state.omega.clone(), u1: state.u1.clone() };
        let mut n = self.nonlinear(&f)?;
        let g = self.grid;
        for i in 0..g.len() {
            let (_, e, l) = g.wavenumber(i);
            let k2 = e * e + l * l;
            n.omega.coeffs[i] -= state.nu * k2 * state.omega.coeffs[i];
            n.u1.coeffs[i] -= state.nu * k2 * state.u1.coeffs[i];
        }
        Ok((n.omega, n.u1))
    }

    /// Advection and lift-up forcing, without viscosity.
    pub fn nonlinear(&self, f: &StreakFields) -> Result<StreakFields> {
        let st = StreakState { omega: f.omega.clone(), u1: f.u1.clone(), t: 0.0, nu: 0.0 };
        let (u2, u3) = st.velocity();
        let p = |x: &SpectralField| x.to_physical(&self.fft);
        let (pu2, pu3) = (p(&u2), p(&u3));
        let (wy, wz) = (p(&f.omega.deriv(1)), p(&f.omega.deriv(2)));
        let (vy, vz) = (p(&f.u1.deriv(1)), p(&f.u1.deriv(2)));
        let mut aw: Vec<Complex64> = (0..pu2.len()).map(|i| -(pu2[i] * wy[i] + pu3[i] * wz[i])).collect();
        let mut av: Vec<Complex64> = (0..pu2.len()).map(|i| -(pu2[i] * vy[i] + pu3[i] * vz[i])).collect();
        self.fft.forward(&mut aw);
        self.fft.forward(&mut av);
        let mut dw = SpectralField { coeffs: aw, ..f.omega.clone() };
        let mut du = SpectralField { coeffs: av, ..f.u1.clone() };
        dw.apply_mask();
        du.apply_mask();
        du.axpy(Complex64::new(-1.0, 0.0), &u2);
        if dw.coeffs.iter().chain(du.coeffs.iter()).any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::Singular { t: f64::NAN, msg: "non-finite streak tendency".into() });
        }
        Ok(StreakFields { omega: dw, u1: du })
    }

    pub fn step(&self, state: &StreakState, dt: f64) -> Result<StreakState> {
        let sys = StreakSystem { solver: self };
        let f = StreakFields { omega: state.omega.clone(), u1: state.u1.clone() };
        let out = lawson_rk4(&sys, state.t, &f, dt).map_err(|e| match e {
            Error::Singular { msg, .. } => Error::Singular { t: state.t, msg },
            other => other,
        })?;
        Ok(StreakState { omega: out.omega, u1: out.u1, t: state.t + dt, nu: state.nu })
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn fft(&self) -> &Fft3 {
        &self.fft
    }
}

struct StreakSystem<'a> {
    solver: &'a StreakSolver,
}

impl IfSystem for StreakSystem<'_> {
    type State = StreakFields;

    fn rhs(&self, _t: f64, u: &StreakFields) -> Result<StreakFields> {
        self.solver.nonlinear(u)
    }

    fn propagate(&self, u: &mut StreakFields, a: f64, b: f64) {
        let g = self.solver.grid;
        let nu = self.solver.nu;
        for i in 0..g.len() {
            let (_, e, l) = g.wavenumber(i);
            let f = (-nu * (e * e + l * l) * (b - a)).exp();
            u.omega.coeffs[i] *= f;
            u.u1.coeffs[i] *= f;
        }
    }

    fn axpy(&self, y: &mut StreakFields, h: f64, x: &StreakFields) {
        y.omega.axpy(Complex64::new(h, 0.0), &x.omega);
        y.u1.axpy(Complex64::new(h, 0.0), &x.u1);
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StreakRecord {
    pub t: f64,
    pub u1_norm: f64,
    pub u23_norm: f64,
    pub enstrophy: f64,
}

impl StreakRecord {
    pub fn of(s: &StreakState) -> Self {
        StreakRecord { t: s.t, u1_norm: s.u1.norm(), u23_norm: s.energy().sqrt(), enstrophy: s.enstrophy() }
    }
}

/// March to `tmax` with step `dt`, recording every `every` steps. Returns
/// the final state and the series.
pub fn run_streak(
    solver: &StreakSolver,
    state: &StreakState,
    dt: f64,
    tmax: f64,
    every: usize,
) -> Result<(StreakState, Vec<StreakRecord>)> {
    let mut s = state.clone();
    let mut out = vec![StreakRecord::of(&s)];
    let n = ((tmax - s.t) / dt - 1e-9).ceil().max(0.0) as usize;
    for i in 0..n {
        let h = dt.min(tmax - s.t);
        s = solver.step(&s, h)?;
        if (i + 1) % every.max(1) == 0 || i + 1 == n {
            out.push(StreakRecord::of(&s));
        }
    }
    Ok((s, out))
}

/// Planar field with a single real Fourier pair `a cos(eta y + l z)` or
/// `a sin(...)`.
pub fn single_mode(grid: GridSpec, my: i64, mz: i64, amp: f64, sine: bool) -> Result<SpectralField> {
    let mut f = SpectralField::zeros(grid, Frame::Lab);
    let a = GridSpec::slot(my, grid.ny).zip(GridSpec::slot(mz, grid.nz));
    let b = GridSpec::slot(-my, grid.ny).zip(GridSpec::slot(-mz, grid.nz));
    let ((iy, iz), (jy, jz)) = a.zip(b).ok_or_else(|| Error::Domain("mode outside the grid".into()))?;
    let c = if sine { Complex64::new(0.0, -0.5 * amp) } else { Complex64::new(0.5 * amp, 0.0) };
    f.coeffs[grid.idx(0, iy, iz)] += c;
    f.coeffs[grid.idx(0, jy, jz)] += c.conj();
    Ok(f)
}
