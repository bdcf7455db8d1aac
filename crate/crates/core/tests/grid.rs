use approx::assert_relative_eq;
use couette::grid::*;
use num_complex::Complex64 as C;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

fn random_real(g: GridSpec, seed: u64) -> Vec<f64> {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    (0..g.len()).map(|_| r.gen_range(-1.0..1.0)).collect()
}

/// Random band-limited real field.
fn random_masked(g: GridSpec, seed: u64, fft: &Fft3) -> SpectralField {
    let mut f = SpectralField::from_real(g, Frame::Lab, &random_real(g, seed), fft);
    f.apply_mask();
    f
}

fn random_vector(g: GridSpec, seed: u64, fft: &Fft3) -> VectorField {
    let mut u = VectorField::zeros(g, Frame::Shear);
    for c in 0..3 {
        u.c[c] = random_masked(g, seed + c as u64, fft);
        u.c[c].frame = Frame::Shear;
    }
    u
}

#[test]
fn shear_wavenumber_examples() {
    assert_eq!(shear_wavenumber(1.0, 3.0, 0.0, 3.0), (1.0, 0.0, 0.0));
    assert_eq!(shear_wavenumber(0.0, 2.5, 1.0, 17.0), (0.0, 2.5, 1.0));
    let t = 125.0 / 3.0;
    let (k, e, l) = shear_wavenumber(2.0, 100.0, 1.0, t);
    assert_eq!((k, l), (2.0, 1.0));
    assert_relative_eq!(e, 100.0 - 2.0 * t, epsilon = 1e-12);
    assert_relative_eq!(e, 16.6667, epsilon = 1e-4);
}

#[test]
fn laplacian_symbol_examples() {
    assert_eq!(laplacian_l_symbol(1.0, 0.0, 0.0, 0.0), -1.0);
    for t in [0.0, 0.3, 7.0, 1e3] {
        assert_eq!(laplacian_l_symbol(1.0, t, 0.0, t), -1.0);
    }
    let t = 125.0 / 3.0;
    let e = 100.0 - 2.0 * t;
    let s = laplacian_l_symbol(2.0, 100.0, 1.0, t);
    assert_relative_eq!(s, -(4.0 + e * e + 1.0), epsilon = 1e-10);
    assert_relative_eq!(s, -282.78, epsilon = 1e-2);
}

#[test]
fn symbol_integral_matches_quadrature() {
    let (k, e, l) = (2.0, 3.5, -1.0);
    let (a, b) = (0.7, 4.2);
    let n = 20000;
    let h = (b - a) / n as f64;
    // Simpson
    let f = |t: f64| -laplacian_l_symbol(k, e, l, t);
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    assert_relative_eq!(symbol_integral(k, e, l, a, b), s * h / 3.0, max_relative = 1e-12);
}

#[test]
fn gevrey_norm_single_mode() {
    let g = GridSpec::new(8, 16, 8).unwrap();
    let mut f = SpectralField::zeros(g, Frame::Lab);
    let (ix, iy, iz) = (1, 3, 7);
    let a = C::new(0.3, -0.4);
    f.coeffs[g.idx(ix, iy, iz)] = a;
    let (k, e, l) = (g.kx(ix), g.ky(iy), g.kz(iz));
    let (lam, sig, s) = (0.7, 2.0, 0.5);
    let n1 = k.abs() + e.abs() + l.abs();
    let expect = a.norm() * (lam * n1.powf(s)).exp() * (1.0 + n1 * n1).sqrt().powf(sig) * (2.0 * PI / g.ly).sqrt();
    assert_relative_eq!(gevrey_norm(&f, lam, sig, s).unwrap(), expect, max_relative = 1e-12);
}

#[test]
fn gevrey_norm_plain_and_parseval() {
    let g = GridSpec::new(8, 16, 8).unwrap();
    let mut f = SpectralField::zeros(g, Frame::Lab);
    f.coeffs[g.idx(1, 0, 0)] = C::new(3.0, 0.0);
    let l2 = gevrey_norm(&f, 0.0, 0.0, 1.0).unwrap();
    assert_relative_eq!(l2, 3.0 * (2.0 * PI / g.ly).sqrt(), max_relative = 1e-14);
    let one = gevrey_norm(&f, 0.4, 1.0, 0.5).unwrap();
    let mut h = SpectralField::zeros(g, Frame::Lab);
    h.coeffs[g.idx(0, 2, 1)] = C::new(0.0, 2.0);
    let two = gevrey_norm(&h, 0.4, 1.0, 0.5).unwrap();
    f.coeffs[g.idx(0, 2, 1)] = C::new(0.0, 2.0);
    assert_relative_eq!(gevrey_norm(&f, 0.4, 1.0, 0.5).unwrap(), (one * one + two * two).sqrt(), max_relative = 1e-12);
}

#[test]
fn gevrey_norm_overflow_is_an_error() {
    let g = GridSpec::new(64, 128, 64).unwrap();
    let f = SpectralField::zeros(g, Frame::Lab);
    assert!(matches!(gevrey_norm(&f, 50.0, 0.0, 1.0), Err(couette::Error::Range(_))));
}

#[test]
fn projection_examples() {
    let g = GridSpec::new(8, 16, 8).unwrap();
    let fft = Fft3::new(g);
    // k~ parallel to u
    let mut u = VectorField::zeros(g, Frame::Shear);
    u.c[0].coeffs[g.idx(1, 0, 0)] = C::new(1.0, 0.0);
    let p = project_divergence_free(&u, 0.0);
    assert!(p.c.iter().all(|c| c.coeffs.iter().all(|z| z.norm() == 0.0)));
    // gradient field at shear age 0.3
    let t = 0.3;
    let phi = random_masked(g, 1, &fft);
    let mut grad = VectorField::zeros(g, Frame::Shear);
    for i in 0..g.len() {
        let (k, e, l) = g.wavenumber(i);
        let (a, b, c) = shear_wavenumber(k, e, l, t);
        let z = C::new(0.0, 1.0) * phi.coeffs[i];
        grad.c[0].coeffs[i] = z * a;
        grad.c[1].coeffs[i] = z * b;
        grad.c[2].coeffs[i] = z * c;
    }
    let p = project_divergence_free(&grad, t);
    assert!(p.max_abs_diff(&VectorField::zeros(g, Frame::Shear)) < 1e-15);
    // idempotent
    let v = project_divergence_free(&random_vector(g, 5, &fft), t);
    assert!(project_divergence_free(&v, t).max_abs_diff(&v) < 1e-14);
    assert!(v.divergence_residual(t) < 1e-12);
}

#[test]
fn remap_examples() {
    let g = GridSpec::with_lengths(8, 16, 8, 2.0 * PI, 2.0 * PI, 2.0 * PI).unwrap();
    let mut u = VectorField::zeros(g, Frame::Shear);
    u.c[1].coeffs[g.idx(1, 2, 0)] = C::new(1.0, 0.0);
    let (same, d) = remap(&u, 0.0).unwrap();
    assert_eq!(same, u);
    assert_eq!(d, 0.0);
    let (r, d) = remap(&u, 1.0).unwrap();
    assert_eq!(d, 0.0);
    assert_eq!(r.c[1].coeffs[g.idx(1, 1, 0)], C::new(1.0, 0.0));
    assert_eq!(r.t_remap(), 1.0);
    assert!(matches!(remap(&u, 0.5), Err(couette::Error::Precondition(_))));
}

#[test]
fn remap_preserves_physical_field() {
    let g = GridSpec::new(8, 16, 8).unwrap();
    let fft = Fft3::new(g);
    let mut u = random_vector(g, 11, &fft);
    // keep clear of the eta edge so nothing is dropped
    for c in u.c.iter_mut() {
        for i in 0..g.len() {
            let (ix, iy, _) = g.unidx(i);
            if GridSpec::mode(iy, g.ny).abs() > 3 || GridSpec::mode(ix, g.nx).abs() > 1 {
                c.coeffs[i] = C::new(0.0, 0.0);
            }
        }
    }
    let t = g.remap_period() * 2.0;
    let (r, dropped) = remap(&u, t).unwrap();
    assert_eq!(dropped, 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..20 {
        let (x, y, z) = (rng.gen_range(0.0..g.lx), rng.gen_range(0.0..g.ly), rng.gen_range(0.0..g.lz));
        for c in 0..3 {
            let a = u.c[c].eval_lab(t, x, y, z);
            let b = r.c[c].eval_lab(t, x, y, z);
            assert!((a - b).norm() < 1e-12, "{a} vs {b}");
        }
    }
}

#[test]
fn remap_reports_dropped_energy() {
    let g = GridSpec::new(8, 16, 8).unwrap();
    let mut u = VectorField::zeros(g, Frame::Shear);
    u.c[2].coeffs[g.idx(1, GridSpec::slot(-7, 16).unwrap(), 0)] = C::new(0.5, 0.0);
    let (r, d) = remap(&u, g.remap_period()).unwrap();
    assert_relative_eq!(d, 0.25);
    assert_eq!(r.energy(), 0.0);
}

#[test]
fn snapshot_layout_and_round_trip() {
    let g = GridSpec::new(4, 8, 2).unwrap();
    let fft = Fft3::new(g);
    let mut a = random_masked(g, 3, &fft);
    a.frame = Frame::Shear;
    a.t_remap = 1.5;
    let snap = Snapshot::from_fields(&[&a], 2.25);
    let mut bytes = Vec::new();
    snap.write(&mut bytes).unwrap();
    assert_eq!(&bytes[..4], b"C3DF");
    assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 1);
    assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 4);
    assert_eq!(u32::from_le_bytes(bytes[12..16].try_into().unwrap()), 8);
    assert_eq!(u32::from_le_bytes(bytes[16..20].try_into().unwrap()), 2);
    assert_eq!(bytes[20], 1);
    assert_eq!(f64::from_le_bytes(bytes[21..29].try_into().unwrap()), 2.25);
    assert_eq!(f64::from_le_bytes(bytes[29..37].try_into().unwrap()), 1.5);
    assert_eq!(bytes.len(), 37 + 16 * g.len());
    // coefficient (ix, iy, iz) sits at flat position (ix * ny + iy) * nz + iz
    let j = g.idx(1, 2, 1);
    let o = 37 + 16 * j;
    assert_eq!(f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap()), a.at(1, 2, 1).re);
    let back = Snapshot::read(&mut bytes.as_slice()).unwrap();
    assert_eq!(back, snap);
    let f = back.into_fields(g).unwrap();
    assert_eq!(f[0], a);
    assert!(Snapshot::read(&mut &b"XXXX"[..]).is_err());
    assert!(snap.into_fields(GridSpec::new(4, 8, 4).unwrap()).is_err());
}

#[test]
fn grid_validation() {
    assert!(GridSpec::new(7, 8, 8).is_err());
    assert!(GridSpec::new(8, 8, 8).unwrap().with_dealias(0.0).is_err());
    assert!(GridSpec::new(8, 8, 8).unwrap().with_dealias(1.0).is_ok());
    // Lx / Ly irrational
    assert!(GridSpec::with_lengths(8, 8, 8, 2.0 * PI, 2.0_f64.sqrt() * PI, 2.0 * PI).is_err());
}

#[test]
fn mask_drops_outer_shell_and_nyquist() {
    let g = GridSpec::new(16, 16, 16).unwrap();
    assert!(g.kept(5, 0, 0));
    assert!(!g.kept(6, 0, 0));
    assert!(!g.kept(8, 0, 0));
    assert!(g.kept(GridSpec::slot(-5, 16).unwrap(), 0, 0));
    let full = g.with_dealias(1.0).unwrap();
    assert!(full.kept(7, 0, 0));
    assert!(!full.kept(8, 0, 0));
}

/// Direct convolution restricted to the mask.
fn brute_product(a: &SpectralField, b: &SpectralField) -> SpectralField {
    let g = a.grid;
    let mut out = SpectralField::zeros(g, a.frame);
    for i in 0..g.len() {
        if a.coeffs[i].norm_sqr() == 0.0 {
            continue;
        }
        let (ax, ay, az) = g.unidx(i);
        for j in 0..g.len() {
            if b.coeffs[j].norm_sqr() == 0.0 {
                continue;
            }
            let (bx, by, bz) = g.unidx(j);
            let m = |p: usize, q: usize, n: usize| GridSpec::mode(p, n) + GridSpec::mode(q, n);
            let (mx, my, mz) = (m(ax, bx, g.nx), m(ay, by, g.ny), m(az, bz, g.nz));
            if let (Some(x), Some(y), Some(z)) = (GridSpec::slot(mx, g.nx), GridSpec::slot(my, g.ny), GridSpec::slot(mz, g.nz)) {
                if g.kept(x, y, z) {
                    out.coeffs[g.idx(x, y, z)] += a.coeffs[i] * b.coeffs[j];
                }
            }
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn transform_round_trip(seed in any::<u64>(), dims in prop::sample::select(vec![(8usize, 8usize, 8usize), (4, 16, 8), (1, 16, 16), (16, 8, 2)])) {
        let g = GridSpec::new(dims.0, dims.1, dims.2).unwrap();
        let fft = Fft3::new(g);
        let v = random_real(g, seed);
        let f = SpectralField::from_real(g, Frame::Lab, &v, &fft);
        let mut m = f.clone();
        m.apply_mask();
        prop_assert!(m.hermitian_defect() < 1e-15);
        let back = f.to_real(&fft);
        let scale = v.iter().map(|x| x.abs()).fold(0.0, f64::max);
        for (a, b) in v.iter().zip(&back) {
            prop_assert!((a - b).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn dealiased_product_is_masked_convolution(seed in any::<u64>(), dims in prop::sample::select(vec![(8usize, 8usize, 8usize), (4, 16, 4), (1, 16, 16)])) {
        let g = GridSpec::new(dims.0, dims.1, dims.2).unwrap();
        let fft = Fft3::new(g);
        let a = random_masked(g, seed, &fft);
        let b = random_masked(g, seed ^ 0x9e37, &fft);
        let p = product(&a, &b, &fft).unwrap();
        let q = brute_product(&a, &b);
        prop_assert!(p.max_abs_diff(&q) < 1e-12, "{}", p.max_abs_diff(&q));
    }

    #[test]
    fn gevrey_norm_monotone(seed in any::<u64>(), l1 in 0.0..1.0f64, dl in 0.0..1.0f64, s1 in 0.0..3.0f64, ds in 0.0..3.0f64, s in 0.1..1.0f64) {
        let g = GridSpec::new(8, 16, 8).unwrap();
        let fft = Fft3::new(g);
        let f = random_masked(g, seed, &fft);
        let base = gevrey_norm(&f, l1, s1, s).unwrap();
        prop_assert!(gevrey_norm(&f, l1 + dl, s1, s).unwrap() >= base * (1.0 - 1e-14));
        prop_assert!(gevrey_norm(&f, l1, s1 + ds, s).unwrap() >= base * (1.0 - 1e-14));
    }

    #[test]
    fn symbol_shift_identity(k in -20.0..20.0f64, e in -200.0..200.0f64, l in -20.0..20.0f64, t in -50.0..50.0f64) {
        let a = laplacian_l_symbol(k, e, l, t);
        let b = laplacian_l_symbol(k, e - k * t, l, 0.0);
        prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
    }

    #[test]
    fn projection_is_solenoidal(seed in any::<u64>(), t in 0.0..0.5f64) {
        let g = GridSpec::new(8, 16, 8).unwrap();
        let fft = Fft3::new(g);
        let v = project_divergence_free(&random_vector(g, seed, &fft), t);
        prop_assert!(v.divergence_residual(t) < 1e-12);
        prop_assert!(v.c.iter().all(|c| c.hermitian_defect() < 1e-14));
    }

    #[test]
    fn remap_shift_is_integer(m in -3i64..=3, n in -7i64..7, periods in 0u32..4) {
        let g = GridSpec::new(8, 16, 8).unwrap();
        let mut u = VectorField::zeros(g, Frame::Shear);
        let (Some(ix), Some(iy)) = (GridSpec::slot(m, g.nx), GridSpec::slot(n, g.ny)) else { return Ok(()); };
        u.c[0].coeffs[g.idx(ix, iy, 0)] = C::new(1.0, 0.0);
        let t = periods as f64 * g.remap_period();
        let (r, dropped) = remap(&u, t).unwrap();
        let n2 = n - m * (t * g.ly / g.lx).round() as i64;
        if n2.abs() < 8 {
            prop_assert_eq!(r.c[0].coeffs[g.idx(ix, GridSpec::slot(n2, 16).unwrap(), 0)], C::new(1.0, 0.0));
            prop_assert_eq!(dropped, 0.0);
        } else {
            prop_assert_eq!(dropped, 1.0);
        }
    }
}
