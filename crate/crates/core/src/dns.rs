//! Pseudo-spectral solver for perturbations of plane Couette flow in the
//! sheared frame, with periodic remapping.

use crate::grid::{
    laplacian_l_symbol, remap, shear_wavenumber, symbol_integral, Fft3, Frame, GridSpec, SpectralField, VectorField,
};
use crate::multiplier::{log_norm_a, log_norm_a_nu, Component, NormParams};
use crate::ode::{lawson_rk4, IfSystem};
use crate::{Error, Result};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

const I: Complex64 = Complex64::new(0.0, 1.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Clone, Debug, PartialEq)]
pub struct DnsState {
    pub u: VectorField,
    pub t: f64,
    pub nu: f64,
}

impl DnsState {
    pub fn new(mut u: VectorField, t: f64, nu: f64) -> Result<Self> {
        if u.frame() != Frame::Shear {
            if u.t_remap() != 0.0 || t != 0.0 {
                return Err(Error::Precondition("lab data can only seed a run at t = 0".into()));
            }
            for c in &mut u.c {
                c.frame = Frame::Shear;
            }
        }
        Ok(DnsState { u, t, nu })
    }

    pub fn grid(&self) -> GridSpec {
        self.u.grid()
    }

    pub fn age(&self) -> f64 {
        self.t - self.u.t_remap()
    }

    /// Energy of the `k != 0` modes.
    pub fn energy_nonzero(&self) -> f64 {
        let g = self.grid();
        let mut e = 0.0;
        for i in 0..g.len() {
            let (ix, _, _) = g.unidx(i);
            if ix != 0 {
                e += self.u.c.iter().map(|c| c.coeffs[i].norm_sqr()).sum::<f64>();
            }
        }
        e
    }

    pub fn energy(&self) -> f64 {
        self.u.energy()
    }

    /// Energy of the `k = 0` part of `u1`.
    pub fn u1_zero_norm(&self) -> f64 {
        let g = self.grid();
        let mut e = 0.0;
        for iy in 0..g.ny {
            for iz in 0..g.nz {
                e += self.u.c[0].at(0, iy, iz).norm_sqr();
            }
        }
        e.sqrt()
    }

    /// The `k = 0` slice of component `c` on the planar sub-grid.
    pub fn zero_slice(&self, c: usize) -> SpectralField {
        let g = self.grid();
        let p = g.planar_part();
        let mut f = SpectralField::zeros(p, Frame::Lab);
        for iy in 0..g.ny {
            for iz in 0..g.nz {
                f.coeffs[p.idx(0, iy, iz)] = self.u.c[c].at(0, iy, iz);
            }
        }
        f
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepInfo {
    pub dt: f64,
    pub halvings: u32,
    pub remapped: bool,
    /// Energy discarded by the last remap.
    pub dropped: f64,
}

pub struct DnsSolver {
    grid: GridSpec,
    fft: Fft3,
    nu: f64,
    /// Remap every this many alignment periods.
    pub remap_every: u32,
    pub cfl: f64,
    pub max_halvings: u32,
}

impl DnsSolver {
    pub fn new(grid: GridSpec, nu: f64) -> Self {
        DnsSolver { grid, fft: Fft3::new(grid), nu, remap_every: 1, cfl: 0.5, max_halvings: 10 }
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn fft(&self) -> &Fft3 {
        &self.fft
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    /// Tendency without the viscous term: lift-up, both pressures and
    /// the dealiased nonlinearity.
    pub fn rhs(&self, u: &VectorField, t: f64) -> Result<VectorField> {
        let g = self.grid;
        let age = u.age(t);
        let phys: Vec<Vec<Complex64>> = u.c.iter().map(|c| c.to_physical(&self.fft)).collect();
        // products u_i u_j, i <= j
        let mut prod = Vec::with_capacity(6);
        for i in 0..3 {
            for j in i..3 {
                let mut p: Vec<Complex64> = phys[i].iter().zip(&phys[j]).map(|(a, b)| Complex64::new(a.re * b.re, 0.0)).collect();
                self.fft.forward(&mut p);
                prod.push(p);
            }
        }
        let pid = |i: usize, j: usize| {
            let (a, b) = if i <= j { (i, j) } else { (j, i) };
            [0, 1, 2, 1, 3, 4, 2, 4, 5][3 * a + b]
        };
        let mask = g.mask();
        let mut out = VectorField::zeros(g, Frame::Shear);
        out.set_t_remap(u.t_remap());
        for m in 0..g.len() {
            let (k, e, l) = g.wavenumber(m);
            let kt = shear_wavenumber(k, e, l, age);
            let kv = [kt.0, kt.1, kt.2];
            let k2 = kv[0] * kv[0] + kv[1] * kv[1] + kv[2] * kv[2];
            let u2 = u.c[1].coeffs[m];
            let mut s = [-u2, ZERO, ZERO];
            if mask[m] {
                for (i, si) in s.iter_mut().enumerate() {
                    let mut n = ZERO;
                    for j in 0..3 {
                        n += I * kv[j] * prod[pid(i, j)][m];
                    }
                    *si -= n;
                }
            }
            if k2 > 0.0 {
                let d = (s[0] * kv[0] + s[1] * kv[1] + s[2] * kv[2]) / k2;
                // the sheared wavenumber moves, so keeping k~ . u = 0 needs
                // k~ . du/dt = k u2
                let drift = u2 * (k / k2);
                for i in 0..3 {
                    s[i] += (drift - d) * kv[i];
                }
            }
            for i in 0..3 {
                out.c[i].coeffs[m] = s[i];
            }
        }
        for c in &out.c {
            if c.coeffs.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(Error::Singular { t, msg: "non-finite DNS tendency".into() });
            }
        }
        Ok(out)
    }

    /// Largest `|u|` on the physical grid.
    pub fn max_speed(&self, u: &VectorField) -> f64 {
        let phys: Vec<Vec<f64>> = u.c.iter().map(|c| c.to_real(&self.fft)).collect();
        (0..self.grid.len())
            .map(|i| (phys[0][i].powi(2) + phys[1][i].powi(2) + phys[2][i].powi(2)).sqrt())
            .fold(0.0, f64::max)
    }

    /// CFL limit `cfl * min spacing / max |u|`.
    pub fn cfl_limit(&self, u: &VectorField) -> f64 {
        let (dx, dy, dz) = self.grid.spacing();
        let h = dx.min(dy).min(dz);
        let s = self.max_speed(u);
        if s == 0.0 {
            f64::INFINITY
        } else {
            self.cfl * h / s
        }
    }

    /// Next aligned time after which a remap is due.
    pub fn next_remap(&self, state: &DnsState) -> f64 {
        state.u.t_remap() + self.remap_every as f64 * self.grid.remap_period()
    }

    /// One step of at most `dt`. The step is halved while it violates the
    /// CFL bound and shortened to land on the next remap time.
    pub fn step(&self, state: &DnsState, dt: f64) -> Result<(DnsState, StepInfo)> {
        let lim = self.cfl_limit(&state.u);
        let mut h = dt;
        let mut halvings = 0;
        while h > lim {
            if halvings == self.max_halvings {
                return Err(Error::Singular {
                    t: state.t,
                    msg: format!("CFL bound {lim:.3e} not met after {halvings} halvings"),
                });
            }
            h *= 0.5;
            halvings += 1;
        }
        let tr = self.next_remap(state);
        let mut hit = false;
        if state.t + h >= tr - 1e-12 * tr.abs().max(1.0) {
            h = tr - state.t;
            hit = true;
        }
        let sys = DnsSystem { solver: self };
        let mut u = lawson_rk4(&sys, state.t, &state.u, h)?;
        let t = if hit { tr } else { state.t + h };
        let mut dropped = 0.0;
        if hit {
            let (v, d) = remap(&u, t)?;
            u = v;
            let before = u.energy();
            u.apply_mask();
            dropped = d + (before - u.energy());
        }
        if u.c.iter().any(|c| c.coeffs.iter().any(|z| !z.re.is_finite() || !z.im.is_finite())) {
            return Err(Error::Singular { t, msg: "non-finite DNS state".into() });
        }
        Ok((
            DnsState { u, t, nu: state.nu },
            StepInfo { dt: h, halvings, remapped: hit, dropped },
        ))
    }
}

/// `dns_rhs` for a state.
pub fn dns_rhs(solver: &DnsSolver, state: &DnsState) -> Result<VectorField> {
    solver.rhs(&state.u, state.t)
}

struct DnsSystem<'a> {
    solver: &'a DnsSolver,
}

impl IfSystem for DnsSystem<'_> {
    type State = VectorField;

    fn rhs(&self, t: f64, u: &VectorField) -> Result<VectorField> {
        self.solver.rhs(u, t)
    }

    fn propagate(&self, u: &mut VectorField, a: f64, b: f64) {
        let g = self.solver.grid;
        let nu = self.solver.nu;
        if nu == 0.0 {
            return;
        }
        let tr = u.t_remap();
        for i in 0..g.len() {
            let (k, e, l) = g.wavenumber(i);
            let f = (-nu * symbol_integral(k, e, l, a - tr, b - tr)).exp();
            for c in &mut u.c {
                c.coeffs[i] *= f;
            }
        }
    }

    fn axpy(&self, y: &mut VectorField, h: f64, x: &VectorField) {
        y.axpy(Complex64::new(h, 0.0), x);
    }
}

/// `Q^i = Delta_L u^i`.
pub fn q_fields(state: &DnsState) -> VectorField {
    let g = state.grid();
    let age = state.age();
    let mut q = state.u.clone();
    for i in 0..g.len() {
        let (k, e, l) = g.wavenumber(i);
        let s = laplacian_l_symbol(k, e, l, age);
        for c in &mut q.c {
            c.coeffs[i] *= s;
        }
    }
    q
}

/// Inverse of [`q_fields`]; the zero mode is set to zero.
pub fn u_from_q(q: &VectorField, t: f64) -> VectorField {
    let g = q.grid();
    let age = q.age(t);
    let mut u = q.clone();
    for i in 0..g.len() {
        let (k, e, l) = g.wavenumber(i);
        let s = laplacian_l_symbol(k, e, l, age);
        for c in &mut u.c {
            c.coeffs[i] = if s == 0.0 { ZERO } else { c.coeffs[i] / s };
        }
    }
    u
}

fn nonzero_part(u: &VectorField) -> VectorField {
    let g = u.grid();
    let mut v = u.clone();
    for i in 0..g.len() {
        if g.unidx(i).0 == 0 {
            for c in &mut v.c {
                c.coeffs[i] = ZERO;
            }
        }
    }
    v
}

// k = 0 slice of a 3D spectral array as a planar field
fn slice0(grid: GridSpec, data: &[Complex64]) -> SpectralField {
    let p = grid.planar_part();
    let mut f = SpectralField::zeros(p, Frame::Lab);
    for iy in 0..grid.ny {
        for iz in 0..grid.nz {
            f.coeffs[p.idx(0, iy, iz)] = data[grid.idx(0, iy, iz)];
        }
    }
    f
}

/// Zero-frequency forcing of `Delta u^alpha_0` by the `k != 0` modes, in
/// divergence form: `-d_i d_i d_j (U^j U^alpha)_0 + d_alpha d_j d_i (U^i
/// U^j)_0`. `alpha` is 0, 1 or 2.
pub fn forcing_functional(solver: &DnsSolver, state: &DnsState, alpha: usize) -> SpectralField {
    let g = state.grid();
    let fft = solver.fft();
    let v = nonzero_part(&state.u);
    let phys: Vec<Vec<Complex64>> = v.c.iter().map(|c| c.to_physical(fft)).collect();
    let avg = |i: usize, j: usize| {
        let mut p: Vec<Complex64> = phys[i].iter().zip(&phys[j]).map(|(a, b)| Complex64::new(a.re * b.re, 0.0)).collect();
        fft.forward(&mut p);
        slice0(g, &p)
    };
    let p = g.planar_part();
    // only y and z derivatives survive the x average
    let pj: Vec<SpectralField> = (1..3).map(|j| avg(j, alpha)).collect();
    let pij: Vec<SpectralField> = [(1, 1), (1, 2), (2, 2)].iter().map(|&(i, j)| avg(i, j)).collect();
    let mut out = SpectralField::zeros(p, Frame::Lab);
    let mask = p.mask();
    for m in 0..p.len() {
        if !mask[m] {
            continue;
        }
        let (_, e, l) = p.wavenumber(m);
        let lap = -(e * e + l * l);
        let dj = I * e * pj[0].coeffs[m] + I * l * pj[1].coeffs[m];
        let dij = -(e * e * pij[0].coeffs[m] + 2.0 * e * l * pij[1].coeffs[m] + l * l * pij[2].coeffs[m]);
        let da = [0.0, e, l][alpha];
        out.coeffs[m] = -lap * dj + I * da * dij;
    }
    out
}

/// The same functional from its transport form, `-Delta (U^j d_j
/// U^alpha)_0 + d_alpha (d_i U^j d_j U^i)_0`, with the products taken in
/// physical space.
pub fn forcing_transport_form(solver: &DnsSolver, state: &DnsState, alpha: usize) -> SpectralField {
    let g = state.grid();
    let fft = solver.fft();
    let v = nonzero_part(&state.u);
    let age = state.age();
    let grad = |f: &SpectralField, axis: usize| {
        let mut d = f.clone();
        for (m, c) in d.coeffs.iter_mut().enumerate() {
            let (k, e, l) = g.wavenumber(m);
            let kt = shear_wavenumber(k, e, l, age);
            *c *= I * [kt.0, kt.1, kt.2][axis];
        }
        d.to_real(fft)
    };
    let uj: Vec<Vec<f64>> = v.c.iter().map(|c| c.to_real(fft)).collect();
    let du: Vec<Vec<Vec<f64>>> = v.c.iter().map(|c| (0..3).map(|a| grad(c, a)).collect()).collect();
    let n = g.len();
    let mut adv = vec![Complex64::new(0.0, 0.0); n];
    let mut str_ = vec![Complex64::new(0.0, 0.0); n];
    for x in 0..n {
        let mut a = 0.0;
        let mut s = 0.0;
        for j in 0..3 {
            a += uj[j][x] * du[alpha][j][x];
            for i in 0..3 {
                s += du[j][i][x] * du[i][j][x];
            }
        }
        adv[x] = Complex64::new(a, 0.0);
        str_[x] = Complex64::new(s, 0.0);
    }
    fft.forward(&mut adv);
    fft.forward(&mut str_);
    let (a0, s0) = (slice0(g, &adv), slice0(g, &str_));
    let p = g.planar_part();
    let mask = p.mask();
    let mut out = SpectralField::zeros(p, Frame::Lab);
    for m in 0..p.len() {
        if !mask[m] {
            continue;
        }
        let (_, e, l) = p.wavenumber(m);
        let da = [0.0, e, l][alpha];
        out.coeffs[m] = (e * e + l * l) * a0.coeffs[m] + I * da * s0.coeffs[m];
    }
    out
}

/// `-d_y (u2 u^alpha)_0 - d_z (u3 u^alpha)_0` over the `k != 0` modes.
pub fn forcing_velocity_form(solver: &DnsSolver, state: &DnsState, alpha: usize) -> SpectralField {
    let g = state.grid();
    let fft = solver.fft();
    let v = nonzero_part(&state.u);
    let phys: Vec<Vec<f64>> = v.c.iter().map(|c| c.to_real(fft)).collect();
    let p = g.planar_part();
    let mut out = SpectralField::zeros(p, Frame::Lab);
    for (j, wave) in [(1usize, 1usize), (2, 2)] {
        let mut d: Vec<Complex64> = (0..g.len()).map(|x| Complex64::new(phys[j][x] * phys[alpha][x], 0.0)).collect();
        fft.forward(&mut d);
        let s = slice0(g, &d);
        for m in 0..p.len() {
            let (_, e, l) = p.wavenumber(m);
            out.coeffs[m] -= I * [0.0, e, l][wave] * s.coeffs[m];
        }
    }
    out.apply_mask();
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormRecord {
    pub t: f64,
    /// `||A^i Q^i||` for `i = 1, 2, 3`.
    pub a_q: [f64; 3],
    /// `||A^{nu;i} Q^i||`.
    pub a_nu_q: [f64; 3],
    /// Energy per `|k|` shell, `k = 0 .. nx/2`.
    pub mode_energy: Vec<f64>,
    pub u_nonzero: f64,
    pub u_zero: f64,
}

/// Weighted norms of `Q^i` with the fixed shear-frame frequency
/// `eta + k t_remap` and the running time.
pub fn norm_series(state: &DnsState, params: &NormParams) -> Result<NormRecord> {
    params.validate()?;
    let g = state.grid();
    let q = q_fields(state);
    let tr = state.u.t_remap();
    let t = state.t;
    let comps = [Component::One, Component::Two, Component::Three];
    let mut a_q = [0.0; 3];
    let mut a_nu_q = [0.0; 3];
    let mut shells = vec![0.0; g.nx / 2 + 1];
    let (mut ez, mut en) = (0.0, 0.0);
    for m in 0..g.len() {
        let (k, e, l) = g.wavenumber(m);
        let mk = GridSpec::mode(g.unidx(m).0, g.nx);
        let eta = e + k * tr;
        let eu: f64 = state.u.c.iter().map(|c| c.coeffs[m].norm_sqr()).sum();
        if mk == 0 {
            ez += eu;
        } else {
            en += eu;
        }
        if let Some(s) = shells.get_mut(mk.unsigned_abs() as usize) {
            *s += eu;
        }
        for (i, &c) in comps.iter().enumerate() {
            let a = q.c[i].coeffs[m].norm();
            if a == 0.0 {
                continue;
            }
            let la = log_norm_a(c, mk, eta, l, t, params) + a.ln();
            let ln = log_norm_a_nu(c, mk, eta, l, t, params) + a.ln();
            if la > 700.0 || ln > 700.0 {
                return Err(Error::Range(format!("weight overflow at mode ({mk}, {eta}, {l})")));
            }
            a_q[i] += (2.0 * la).exp();
            if ln.is_finite() {
                a_nu_q[i] += (2.0 * ln).exp();
            }
        }
    }
    Ok(NormRecord {
        t,
        a_q: a_q.map(f64::sqrt),
        a_nu_q: a_nu_q.map(f64::sqrt),
        mode_energy: shells,
        u_nonzero: en.sqrt(),
        u_zero: ez.sqrt(),
    })
}

/// Random solenoidal field with spectral envelope `exp(-lambda |k|^s)` and
/// `sqrt(energy) = eps`.
pub fn gevrey_initial(grid: GridSpec, eps: f64, lambda: f64, s: f64, seed: u64) -> Result<VectorField> {
    let fft = Fft3::new(grid);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut u = VectorField::zeros(grid, Frame::Shear);
    for c in &mut u.c {
        let noise: Vec<f64> = (0..grid.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        *c = SpectralField::from_real(grid, Frame::Shear, &noise, &fft);
        for (m, z) in c.coeffs.iter_mut().enumerate() {
            let (k, e, l) = grid.wavenumber(m);
            let r = (k * k + e * e + l * l).sqrt();
            *z *= if r == 0.0 { 0.0 } else { (-lambda * r.powf(s)).exp() };
        }
    }
    u.apply_mask();
    crate::grid::project_in_place(&mut u, 0.0);
    let e = u.energy();
    if e == 0.0 {
        return Err(Error::Degenerate("envelope removed every mode".into()));
    }
    for c in &mut u.c {
        c.scale(eps / e.sqrt());
    }
    Ok(u)
}

/// Real field made of one Fourier pair `a e^{i m . x} + c.c.`; `a` must be
/// orthogonal to the wavenumber.
pub fn mode_pair(grid: GridSpec, m: (i64, i64, i64), a: [Complex64; 3]) -> Result<VectorField> {
    let slot = |m: (i64, i64, i64)| {
        Some(grid.idx(GridSpec::slot(m.0, grid.nx)?, GridSpec::slot(m.1, grid.ny)?, GridSpec::slot(m.2, grid.nz)?))
    };
    let (i, j) = slot(m)
        .zip(slot((-m.0, -m.1, -m.2)))
        .ok_or_else(|| Error::Domain("mode outside the grid".into()))?;
    let mut u = VectorField::zeros(grid, Frame::Shear);
    for c in 0..3 {
        u.c[c].coeffs[i] += a[c];
        u.c[c].coeffs[j] += a[c].conj();
    }
    Ok(u)
}

/// Series row written by DNS runs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DnsRecord {
    pub t: f64,
    pub energy: f64,
    pub energy_nonzero: f64,
    pub u1_zero: f64,
    pub divergence: f64,
    pub dropped: f64,
}

impl DnsRecord {
    pub fn of(s: &DnsState, dropped: f64) -> Self {
        DnsRecord {
            t: s.t,
            energy: s.energy(),
            energy_nonzero: s.energy_nonzero(),
            u1_zero: s.u1_zero_norm(),
            divergence: s.u.divergence_residual(s.t),
            dropped,
        }
    }
}

/// Outcome of [`run_dns`].
#[derive(Clone, Debug)]
pub struct DnsRun {
    pub state: DnsState,
    pub records: Vec<DnsRecord>,
    /// Time of a non-finite or CFL failure, if the run stopped early.
    pub blowup: Option<f64>,
}

/// March to `tmax`, recording every `every` steps. A blow-up ends the run
/// without an error.
pub fn run_dns(solver: &DnsSolver, state: &DnsState, dt: f64, tmax: f64, every: usize) -> Result<DnsRun> {
    let mut s = state.clone();
    let mut records = vec![DnsRecord::of(&s, 0.0)];
    let mut dropped = 0.0;
    let mut n = 0usize;
    while s.t < tmax - 1e-12 {
        let h = dt.min(tmax - s.t);
        match solver.step(&s, h) {
            Ok((next, info)) => {
                s = next;
                dropped += info.dropped;
            }
            Err(Error::Singular { t, .. }) => {
                return Ok(DnsRun { state: s, records, blowup: Some(t) });
            }
            Err(e) => return Err(e),
        }
        n += 1;
        if n % every.max(1) == 0 || s.t >= tmax - 1e-12 {
            records.push(DnsRecord::of(&s, dropped));
        }
    }
    Ok(DnsRun { state: s, records, blowup: None })
}
