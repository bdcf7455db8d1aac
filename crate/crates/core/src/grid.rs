//! Periodic spectral grids, fields tagged with their frame, transforms,
//! dealiased products, the sheared Laplacian symbol and Gevrey norms.
//!
//! Coefficients are stored in FFT order along each axis: index `i` holds
//! the signed mode `i` for `i < n/2` and `i - n` otherwise. A field is
//! `f(x) = sum_m c_m exp(i k_m . x)`, so `c` are plain Fourier coefficients
//! and `sum |c|^2` is the volume average of `|f|^2`.

use crate::{jap, Error, Result};
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::io::{Read, Write};
use std::sync::Arc;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    pub lx: f64,
    pub ly: f64,
    pub lz: f64,
    pub dealias: f64,
}

impl GridSpec {
    /// Default box `(2pi, 4pi, 2pi)` with 2/3 dealiasing.
    pub fn new(nx: usize, ny: usize, nz: usize) -> Result<Self> {
        Self::with_lengths(nx, ny, nz, 2.0 * PI, 4.0 * PI, 2.0 * PI)
    }

    pub fn with_lengths(nx: usize, ny: usize, nz: usize, lx: f64, ly: f64, lz: f64) -> Result<Self> {
        let g = GridSpec { nx, ny, nz, lx, ly, lz, dealias: 2.0 / 3.0 };
        g.validate()?;
        Ok(g)
    }

    /// An x-independent grid (`nx = 1`) for the two-dimensional solvers.
    pub fn planar(ny: usize, nz: usize, ly: f64, lz: f64) -> Result<Self> {
        let g = GridSpec { nx: 1, ny, nz, lx: 2.0 * PI, ly, lz, dealias: 2.0 / 3.0 };
        g.validate()?;
        Ok(g)
    }

    pub fn with_dealias(mut self, fraction: f64) -> Result<Self> {
        self.dealias = fraction;
        self.validate()?;
        Ok(self)
    }

    /// The `(y, z)` sub-grid of a three-dimensional grid.
    pub fn planar_part(&self) -> GridSpec {
        GridSpec { nx: 1, ..*self }
    }

    pub fn validate(&self) -> Result<()> {
        let even = |n: usize| n >= 2 && n % 2 == 0;
        if !(self.nx == 1 || even(self.nx)) || !even(self.ny) || !even(self.nz) {
            return Err(Error::Domain(format!(
                "mode counts must be positive and even, got {}x{}x{}",
                self.nx, self.ny, self.nz
            )));
        }
        for (name, l) in [("lx", self.lx), ("ly", self.ly), ("lz", self.lz)] {
            if !(l.is_finite() && l > 0.0) {
                return Err(Error::Domain(format!("{name} must be positive, got {l}")));
            }
        }
        let r = self.lx / self.ly;
        if !(1..=1024u32).any(|q| {
            let p = r * q as f64;
            (p - p.round()).abs() <= 1e-9 * q as f64
        }) {
            return Err(Error::Domain(format!("lx / ly = {r} is not a ratio of small integers")));
        }
        if !(self.dealias > 0.0 && self.dealias <= 1.0) {
            return Err(Error::Domain(format!("dealias fraction {} not in (0,1]", self.dealias)));
        }
        Ok(())
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.nx * self.ny * self.nz
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn idx(&self, ix: usize, iy: usize, iz: usize) -> usize {
        (ix * self.ny + iy) * self.nz + iz
    }

    /// Inverse of [`GridSpec::idx`].
    #[inline]
    pub fn unidx(&self, i: usize) -> (usize, usize, usize) {
        let iz = i % self.nz;
        let r = i / self.nz;
        (r / self.ny, r % self.ny, iz)
    }

    /// Signed mode number held at FFT index `i` of an axis of length `n`.
    #[inline]
    pub fn mode(i: usize, n: usize) -> i64 {
        if n == 1 {
            0
        } else if i < n / 2 {
            i as i64
        } else {
            i as i64 - n as i64
        }
    }

    /// FFT index of signed mode `m`, if it lies in `[-n/2, n/2)`.
    #[inline]
    pub fn slot(m: i64, n: usize) -> Option<usize> {
        let h = (n / 2) as i64;
        if n == 1 {
            return (m == 0).then_some(0);
        }
        if m >= -h && m < h {
            Some(if m >= 0 { m as usize } else { (m + n as i64) as usize })
        } else {
            None
        }
    }

    #[inline]
    pub fn kx(&self, ix: usize) -> f64 {
        2.0 * PI / self.lx * Self::mode(ix, self.nx) as f64
    }
    #[inline]
    pub fn ky(&self, iy: usize) -> f64 {
        2.0 * PI / self.ly * Self::mode(iy, self.ny) as f64
    }
    #[inline]
    pub fn kz(&self, iz: usize) -> f64 {
        2.0 * PI / self.lz * Self::mode(iz, self.nz) as f64
    }

    /// Wavenumbers `(k, eta, l)` of flat index `i`.
    #[inline]
    pub fn wavenumber(&self, i: usize) -> (f64, f64, f64) {
        let (ix, iy, iz) = self.unidx(i);
        (self.kx(ix), self.ky(iy), self.kz(iz))
    }

    /// One-dimensional dealias rule. The Nyquist mode has no conjugate
    /// partner and is always removed.
    #[inline]
    pub fn keep_1d(m: i64, n: usize, fraction: f64) -> bool {
        if n == 1 {
            return m == 0;
        }
        m != -((n / 2) as i64) && (m.unsigned_abs() as f64) <= fraction * (n / 2) as f64 + 1e-12
    }

    #[inline]
    pub fn kept(&self, ix: usize, iy: usize, iz: usize) -> bool {
        Self::keep_1d(Self::mode(ix, self.nx), self.nx, self.dealias)
            && Self::keep_1d(Self::mode(iy, self.ny), self.ny, self.dealias)
            && Self::keep_1d(Self::mode(iz, self.nz), self.nz, self.dealias)
    }

    /// Mask as a flat boolean table.
    pub fn mask(&self) -> Vec<bool> {
        (0..self.len())
            .map(|i| {
                let (ix, iy, iz) = self.unidx(i);
                self.kept(ix, iy, iz)
            })
            .collect()
    }

    /// Shear age after which the sheared lattice realigns with itself.
    pub fn remap_period(&self) -> f64 {
        self.lx / self.ly
    }

    pub fn spacing(&self) -> (f64, f64, f64) {
        (self.lx / self.nx as f64, self.ly / self.ny as f64, self.lz / self.nz as f64)
    }

    /// Physical sample point of flat index `i`.
    pub fn point(&self, i: usize) -> (f64, f64, f64) {
        let (ix, iy, iz) = self.unidx(i);
        let (dx, dy, dz) = self.spacing();
        (ix as f64 * dx, iy as f64 * dy, iz as f64 * dz)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Frame {
    Lab,
    Shear,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField {
    pub grid: GridSpec,
    pub frame: Frame,
    pub t_remap: f64,
    pub coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn zeros(grid: GridSpec, frame: Frame) -> Self {
        SpectralField { grid, frame, t_remap: 0.0, coeffs: vec![Complex64::new(0.0, 0.0); grid.len()] }
    }

    /// Field whose coefficient at wavenumber `(k, eta, l)` is `f(k, eta, l)`.
    pub fn from_fn(grid: GridSpec, frame: Frame, f: impl Fn(f64, f64, f64) -> Complex64) -> Self {
        let coeffs = (0..grid.len())
            .map(|i| {
                let (k, e, l) = grid.wavenumber(i);
                f(k, e, l)
            })
            .collect();
        SpectralField { grid, frame, t_remap: 0.0, coeffs }
    }

    /// Forward transform of real physical samples.
    pub fn from_real(grid: GridSpec, frame: Frame, values: &[f64], fft: &Fft3) -> Self {
        let mut data: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        fft.forward(&mut data);
        SpectralField { grid, frame, t_remap: 0.0, coeffs: data }
    }

    pub fn to_physical(&self, fft: &Fft3) -> Vec<Complex64> {
        let mut data = self.coeffs.clone();
        fft.inverse(&mut data);
        data
    }

    pub fn to_real(&self, fft: &Fft3) -> Vec<f64> {
        self.to_physical(fft).into_iter().map(|c| c.re).collect()
    }

    #[inline]
    pub fn at(&self, ix: usize, iy: usize, iz: usize) -> Complex64 {
        self.coeffs[self.grid.idx(ix, iy, iz)]
    }

    /// Mean square `sum |c|^2`.
    pub fn energy(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.energy().sqrt()
    }

    pub fn apply_mask(&mut self) {
        let g = self.grid;
        for (i, c) in self.coeffs.iter_mut().enumerate() {
            let (ix, iy, iz) = g.unidx(i);
            if !g.kept(ix, iy, iz) {
                *c = Complex64::new(0.0, 0.0);
            }
        }
    }

    pub fn scale(&mut self, a: f64) {
        for c in &mut self.coeffs {
            *c *= a;
        }
    }

    /// `self += a * other`.
    pub fn axpy(&mut self, a: Complex64, other: &SpectralField) {
        for (c, o) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *c += a * o;
        }
    }

    pub fn max_abs_diff(&self, other: &SpectralField) -> f64 {
        self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    /// Spectral derivative along axis 0, 1 or 2 (shear-frame wavenumbers at
    /// zero age).
    pub fn deriv(&self, axis: usize) -> SpectralField {
        let g = self.grid;
        let mut out = self.clone();
        for (i, c) in out.coeffs.iter_mut().enumerate() {
            let (k, e, l) = g.wavenumber(i);
            *c *= Complex64::new(0.0, [k, e, l][axis]);
        }
        out
    }

    /// Largest deviation from `c(-m) = conj(c(m))` over the grid.
    pub fn hermitian_defect(&self) -> f64 {
        let g = self.grid;
        let mut worst: f64 = 0.0;
        for i in 0..g.len() {
            let (ix, iy, iz) = g.unidx(i);
            let mx = GridSpec::mode(ix, g.nx);
            let my = GridSpec::mode(iy, g.ny);
            let mz = GridSpec::mode(iz, g.nz);
            if let (Some(jx), Some(jy), Some(jz)) =
                (GridSpec::slot(-mx, g.nx), GridSpec::slot(-my, g.ny), GridSpec::slot(-mz, g.nz))
            {
                let d = (self.coeffs[i] - self.coeffs[g.idx(jx, jy, jz)].conj()).norm();
                worst = worst.max(d);
            } else {
                worst = worst.max(self.coeffs[i].norm());
            }
        }
        worst
    }

    /// Lab-frame value at a physical point, by direct summation.
    pub fn eval_lab(&self, t: f64, x: f64, y: f64, z: f64) -> Complex64 {
        let age = match self.frame {
            Frame::Lab => 0.0,
            Frame::Shear => t - self.t_remap,
        };
        let mut acc = Complex64::new(0.0, 0.0);
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.norm_sqr() == 0.0 {
                continue;
            }
            let (k, e, l) = self.grid.wavenumber(i);
            let ph = k * x + (e - k * age) * y + l * z;
            acc += c * Complex64::from_polar(1.0, ph);
        }
        acc
    }

    fn check_compatible(&self, other: &SpectralField) -> Result<()> {
        if self.grid != other.grid || self.frame != other.frame || self.t_remap != other.t_remap {
            return Err(Error::Precondition("fields live on different grids or frames".into()));
        }
        Ok(())
    }
}

/// Effective wavenumber of mode `(k, eta, l)` at shear age `t`.
#[inline]
pub fn shear_wavenumber(k: f64, eta: f64, l: f64, t: f64) -> (f64, f64, f64) {
    (k, eta - t * k, l)
}

/// Symbol of `Delta_L = d_XX + (d_Y - t d_X)^2 + d_ZZ`.
#[inline]
pub fn laplacian_l_symbol(k: f64, eta: f64, l: f64, t: f64) -> f64 {
    let e = eta - k * t;
    -(k * k + e * e + l * l)
}

/// `int_a^b (k^2 + (eta - k tau)^2 + l^2) d tau`, the exponent of the
/// viscous integrating factor over `[a, b]`.
#[inline]
pub fn symbol_integral(k: f64, eta: f64, l: f64, a: f64, b: f64) -> f64 {
    let h = b - a;
    let cubic = if k == 0.0 {
        eta * eta * h
    } else {
        // sum of squares over [a,b] of a linear function, written stably
        let ea = eta - k * a;
        let eb = eta - k * b;
        h * (ea * ea + ea * eb + eb * eb) / 3.0
    };
    (k * k + l * l) * h + cubic
}

/// Gevrey norm with the l1 frequency norm and Sobolev correction. The `eta`
/// integral is realised as `(2pi/Ly) sum`.
pub fn gevrey_norm(f: &SpectralField, lambda: f64, sigma: f64, s: f64) -> Result<f64> {
    let g = f.grid;
    let weight = |k: f64, e: f64, l: f64| {
        let n1 = k.abs() + e.abs() + l.abs();
        lambda * n1.powf(s) + sigma * jap(n1).ln()
    };
    let kmax = PI * (g.nx as f64 / g.lx).max(0.0);
    let emax = PI * g.ny as f64 / g.ly;
    let lmax = PI * g.nz as f64 / g.lz;
    let wmax = weight(if g.nx == 1 { 0.0 } else { kmax }, emax, lmax);
    if !wmax.is_finite() || wmax > 700.0 {
        return Err(Error::Range(format!("Gevrey weight e^{wmax:.1} overflows at the largest mode")));
    }
    let mut terms = Vec::with_capacity(g.len());
    for (i, c) in f.coeffs.iter().enumerate() {
        let a = c.norm_sqr();
        if a == 0.0 {
            continue;
        }
        let (k, e, l) = g.wavenumber(i);
        terms.push(a.ln() + 2.0 * weight(k, e, l));
    }
    if terms.is_empty() {
        return Ok(0.0);
    }
    let m = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = terms.iter().map(|t| (t - m).exp()).sum();
    let log_sq = m + sum.ln() + (2.0 * PI / g.ly).ln();
    let out = (0.5 * log_sq).exp();
    if !out.is_finite() {
        return Err(Error::Range("Gevrey norm overflows f64".into()));
    }
    Ok(out)
}

/// Three-axis complex FFT with the normalisation described in the module
/// docs. Lines are transformed in parallel; every line is independent, so
/// results do not depend on the thread count.
pub struct Fft3 {
    grid: GridSpec,
    fwd: [Arc<dyn Fft<f64>>; 3],
    inv: [Arc<dyn Fft<f64>>; 3],
}

impl Fft3 {
    pub fn new(grid: GridSpec) -> Self {
        let mut p = FftPlanner::new();
        let fwd = [p.plan_fft_forward(grid.nx), p.plan_fft_forward(grid.ny), p.plan_fft_forward(grid.nz)];
        let inv = [p.plan_fft_inverse(grid.nx), p.plan_fft_inverse(grid.ny), p.plan_fft_inverse(grid.nz)];
        Fft3 { grid, fwd, inv }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// Physical samples to Fourier coefficients.
    pub fn forward(&self, data: &mut [Complex64]) {
        self.run(data, &self.fwd);
        let s = 1.0 / self.grid.len() as f64;
        data.par_iter_mut().for_each(|c| *c *= s);
    }

    /// Fourier coefficients to physical samples.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.run(data, &self.inv);
    }

    fn run(&self, data: &mut [Complex64], plans: &[Arc<dyn Fft<f64>>; 3]) {
        let g = self.grid;
        assert_eq!(data.len(), g.len());
        let (nx, ny, nz) = (g.nx, g.ny, g.nz);
        if nz > 1 {
            let f = &plans[2];
            data.par_chunks_mut(nz).for_each_init(
                || vec![Complex64::new(0.0, 0.0); f.get_inplace_scratch_len()],
                |scratch, line| f.process_with_scratch(line, scratch),
            );
        }
        if ny > 1 {
            let f = &plans[1];
            data.par_chunks_mut(ny * nz).for_each(|plane| {
                let mut buf = vec![Complex64::new(0.0, 0.0); ny];
                let mut scratch = vec![Complex64::new(0.0, 0.0); f.get_inplace_scratch_len()];
                for iz in 0..nz {
                    for iy in 0..ny {
                        buf[iy] = plane[iy * nz + iz];
                    }
                    f.process_with_scratch(&mut buf, &mut scratch);
                    for iy in 0..ny {
                        plane[iy * nz + iz] = buf[iy];
                    }
                }
            });
        }
        if nx > 1 {
            let f = &plans[0];
            let stride = ny * nz;
            let src: &[Complex64] = data;
            let lines: Vec<Vec<Complex64>> = (0..stride)
                .into_par_iter()
                .map(|j| {
                    let mut buf: Vec<Complex64> = (0..nx).map(|ix| src[ix * stride + j]).collect();
                    f.process(&mut buf);
                    buf
                })
                .collect();
            for (j, line) in lines.into_iter().enumerate() {
                for (ix, v) in line.into_iter().enumerate() {
                    data[ix * stride + j] = v;
                }
            }
        }
    }
}

/// Dealiased pseudo-spectral product `P_mask(a b)`.
pub fn product(a: &SpectralField, b: &SpectralField, fft: &Fft3) -> Result<SpectralField> {
    a.check_compatible(b)?;
    let pa = a.to_physical(fft);
    let pb = b.to_physical(fft);
    let mut out: Vec<Complex64> = pa.iter().zip(&pb).map(|(x, y)| x * y).collect();
    fft.forward(&mut out);
    let mut f = SpectralField { grid: a.grid, frame: a.frame, t_remap: a.t_remap, coeffs: out };
    f.apply_mask();
    Ok(f)
}

#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    pub c: [SpectralField; 3],
}

impl VectorField {
    pub fn zeros(grid: GridSpec, frame: Frame) -> Self {
        let z = SpectralField::zeros(grid, frame);
        VectorField { c: [z.clone(), z.clone(), z] }
    }

    pub fn grid(&self) -> GridSpec {
        self.c[0].grid
    }

    pub fn frame(&self) -> Frame {
        self.c[0].frame
    }

    pub fn t_remap(&self) -> f64 {
        self.c[0].t_remap
    }

    pub fn set_t_remap(&mut self, t: f64) {
        for c in &mut self.c {
            c.t_remap = t;
        }
    }

    pub fn energy(&self) -> f64 {
        self.c.iter().map(|c| c.energy()).sum()
    }

    pub fn apply_mask(&mut self) {
        for c in &mut self.c {
            c.apply_mask();
        }
    }

    pub fn axpy(&mut self, a: Complex64, other: &VectorField) {
        for (c, o) in self.c.iter_mut().zip(&other.c) {
            c.axpy(a, o);
        }
    }

    pub fn max_abs_diff(&self, other: &VectorField) -> f64 {
        self.c.iter().zip(&other.c).map(|(a, b)| a.max_abs_diff(b)).fold(0.0, f64::max)
    }

    /// Relative divergence `||k~ . u|| / || |k~| |u| ||` at time `t`.
    pub fn divergence_residual(&self, t: f64) -> f64 {
        let g = self.grid();
        let age = self.age(t);
        let (mut num, mut den) = (0.0, 0.0);
        for i in 0..g.len() {
            let (k, e, l) = g.wavenumber(i);
            let (a, b, c) = shear_wavenumber(k, e, l, age);
            let u = [self.c[0].coeffs[i], self.c[1].coeffs[i], self.c[2].coeffs[i]];
            let d = u[0] * a + u[1] * b + u[2] * c;
            num += d.norm_sqr();
            den += (a * a + b * b + c * c) * (u[0].norm_sqr() + u[1].norm_sqr() + u[2].norm_sqr());
        }
        if den == 0.0 {
            0.0
        } else {
            (num / den).sqrt()
        }
    }

    /// Shear age `t - t_remap` (zero in the lab frame).
    pub fn age(&self, t: f64) -> f64 {
        match self.frame() {
            Frame::Lab => 0.0,
            Frame::Shear => t - self.t_remap(),
        }
    }
}

/// Leray projection with the sheared wavenumber at age `t - t_remap`.
pub fn project_divergence_free(u: &VectorField, t: f64) -> VectorField {
    let mut out = u.clone();
    project_in_place(&mut out, t);
    out
}

pub fn project_in_place(u: &mut VectorField, t: f64) {
    let g = u.grid();
    let age = u.age(t);
    let [c0, c1, c2] = &mut u.c;
    for i in 0..g.len() {
        let (k, e, l) = g.wavenumber(i);
        let (a, b, c) = shear_wavenumber(k, e, l, age);
        let k2 = a * a + b * b + c * c;
        if k2 == 0.0 {
            continue;
        }
        let d = (c0.coeffs[i] * a + c1.coeffs[i] * b + c2.coeffs[i] * c) / k2;
        c0.coeffs[i] -= d * a;
        c1.coeffs[i] -= d * b;
        c2.coeffs[i] -= d * c;
    }
}

/// Re-index a sheared field at an aligned time so that its tilt is absorbed
/// into the `eta` index. Returns the new field and the discarded energy.
pub fn remap(u: &VectorField, t: f64) -> Result<(VectorField, f64)> {
    let g = u.grid();
    if u.frame() != Frame::Shear {
        return Err(Error::Precondition("remap needs a shear-frame field".into()));
    }
    let age = t - u.t_remap();
    let units = age * g.ly / g.lx;
    let shift = units.round();
    if (units - shift).abs() > 1e-9 * units.abs().max(1.0) {
        return Err(Error::Precondition(format!(
            "t - t_remap = {age} is not a multiple of Lx/Ly = {}",
            g.remap_period()
        )));
    }
    let shift = shift as i64;
    let mut out = VectorField::zeros(g, Frame::Shear);
    out.set_t_remap(t);
    if shift == 0 {
        for (o, c) in out.c.iter_mut().zip(&u.c) {
            o.coeffs.clone_from(&c.coeffs);
        }
        return Ok((out, 0.0));
    }
    let hy = (g.ny / 2) as i64;
    let mut dropped = 0.0;
    for i in 0..g.len() {
        let (ix, iy, iz) = g.unidx(i);
        let m = GridSpec::mode(ix, g.nx);
        let n = GridSpec::mode(iy, g.ny);
        let n2 = n - m * shift;
        let e: f64 = u.c.iter().map(|c| c.coeffs[i].norm_sqr()).sum();
        if n2.abs() < hy {
            let j = g.idx(ix, GridSpec::slot(n2, g.ny).unwrap(), iz);
            for (o, c) in out.c.iter_mut().zip(&u.c) {
                o.coeffs[j] = c.coeffs[i];
            }
        } else {
            dropped += e;
        }
    }
    Ok((out, dropped))
}

const MAGIC: &[u8; 4] = b"C3DF";
const VERSION: u32 = 1;

/// Decoded snapshot. `components` holds one coefficient block per scalar.
#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    pub frame: Frame,
    pub t: f64,
    pub t_remap: f64,
    pub components: Vec<Vec<Complex64>>,
}

impl Snapshot {
    pub fn from_fields(fields: &[&SpectralField], t: f64) -> Self {
        let g = fields[0].grid;
        Snapshot {
            nx: g.nx,
            ny: g.ny,
            nz: g.nz,
            frame: fields[0].frame,
            t,
            t_remap: fields[0].t_remap,
            components: fields.iter().map(|f| f.coeffs.clone()).collect(),
        }
    }

    /// Rebuild fields on `grid`, whose mode counts must match the header.
    pub fn into_fields(self, grid: GridSpec) -> Result<Vec<SpectralField>> {
        if (grid.nx, grid.ny, grid.nz) != (self.nx, self.ny, self.nz) {
            return Err(Error::Format("snapshot dimensions do not match the grid".into()));
        }
        let (frame, t_remap) = (self.frame, self.t_remap);
        Ok(self
            .components
            .into_iter()
            .map(|coeffs| SpectralField { grid, frame, t_remap, coeffs })
            .collect())
    }

    pub fn write(&self, w: &mut impl Write) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        for n in [self.nx, self.ny, self.nz] {
            w.write_all(&(n as u32).to_le_bytes())?;
        }
        w.write_all(&[match self.frame {
            Frame::Lab => 0u8,
            Frame::Shear => 1u8,
        }])?;
        w.write_all(&self.t.to_le_bytes())?;
        w.write_all(&self.t_remap.to_le_bytes())?;
        for comp in &self.components {
            for c in comp {
                w.write_all(&c.re.to_le_bytes())?;
                w.write_all(&c.im.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read(r: &mut impl Read) -> Result<Self> {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        if bytes.len() < 37 || &bytes[..4] != MAGIC {
            return Err(Error::Format("missing C3DF header".into()));
        }
        let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
        let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
        let version = u32_at(4);
        if version != VERSION {
            return Err(Error::Format(format!("unsupported snapshot version {version}")));
        }
        let (nx, ny, nz) = (u32_at(8) as usize, u32_at(12) as usize, u32_at(16) as usize);
        let frame = match bytes[20] {
            0 => Frame::Lab,
            1 => Frame::Shear,
            b => return Err(Error::Format(format!("bad frame tag {b}"))),
        };
        let t = f64_at(21);
        let t_remap = f64_at(29);
        let n = nx * ny * nz;
        let body = &bytes[37..];
        if n == 0 || body.len() % (16 * n) != 0 {
            return Err(Error::Format("coefficient block has the wrong length".into()));
        }
        let components = body
            .chunks(16 * n)
            .map(|blk| {
                blk.chunks(16)
                    .map(|p| {
                        Complex64::new(
                            f64::from_le_bytes(p[..8].try_into().unwrap()),
                            f64::from_le_bytes(p[8..].try_into().unwrap()),
                        )
                    })
                    .collect()
            })
            .collect();
        Ok(Snapshot { nx, ny, nz, frame, t, t_remap, components })
    }
}
