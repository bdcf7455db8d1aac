use couette::multiplier::critical_time;
use couette::toymodel::*;
use num_complex::Complex64;
use proptest::prelude::*;

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

#[test]
fn rhs_without_eps_and_nu() {
    let p = ToyParams::new(2, 60.0, 0.0, 0.0);
    let q = [c(1.0), c(-0.5), c(0.3), c(2.0), c(0.7), c(-1.1)];
    for t in [20.0, 27.5, 30.0, 33.0] {
        let d = toy_rhs(&p, t, &q);
        for i in [0, 1, 2, 4, 5] {
            assert_eq!(d[i], c(0.0), "{} not constant", NAMES[i]);
        }
        let res = 2.0 / (2.0 + (60.0 - 2.0 * t).abs());
        assert!((d[3] - (q[3] + q[0]) * res).norm() < 1e-15);
    }
    // exact resonance
    let d = toy_rhs(&p, 30.0, &[c(0.0), c(0.0), c(0.0), c(1.0), c(0.0), c(0.0)]);
    assert_eq!(d[3], c(1.0));
}

#[test]
fn decoupled_pair_against_closed_form() {
    let eta = 20.0;
    let p = ToyParams::new(1, eta, 0.0, 0.0);
    let (t0, t1) = p.interval().unwrap();
    assert_eq!((t0, t1), (15.0, 40.0));
    let s0 = ToyState { q: [c(1.0), c(0.0), c(0.0), c(0.0), c(0.0), c(0.0)], t: t0 };
    let tr = integrate_toy(&p, &s0, t1, 1e-10, f64::INFINITY).unwrap();
    // Q3 + Q2 = exp(int 1/(1+|eta - s|) ds)
    let a = |t: f64| {
        let left = (1.0 + eta - t0).ln();
        if t <= eta {
            left - (1.0 + eta - t).ln()
        } else {
            left + (1.0 + t - eta).ln()
        }
    };
    for s in &tr.states {
        let want = a(s.t).exp() - 1.0;
        assert!((s.q[3].re - want).abs() <= 1e-8 * want.max(1.0), "t {} got {} want {}", s.t, s.q[3].re, want);
        assert_eq!(s.q[0], c(1.0));
    }
    assert!((tr.states.last().unwrap().t - t1).abs() < 1e-12);
}

#[test]
fn large_viscosity_decays_monotonically() {
    // unit data at the critical time eta/k
    let p = ToyParams::new(2, 100.0, 1e-3, 1.0);
    let s0 = ToyState { q: [c(1.0); 6], t: 50.0 };
    let tr = integrate_toy(&p, &s0, 2.0 * 100.0, 1e-9, DEFAULT_BLOWUP_FACTOR).unwrap();
    let tc = 50.0;
    let mut checked = 0;
    for w in tr.states.windows(2).filter(|w| w[0].t >= tc) {
        // amplitudes already at the integrator's absolute floor only carry noise
        for i in (0..6).filter(|&i| w[0].q[i].norm() > 1e-10) {
            assert!(w[1].q[i].norm() <= w[0].q[i].norm() * (1.0 + 1e-9), "{} grew at t {}", NAMES[i], w[1].t);
            checked += 1;
        }
    }
    assert!(checked > 100, "only {checked} comparisons");
}

#[test]
fn balanced_dominates_in_regime() {
    for nu in [1e-2f64, 1e-3] {
        for (k, eta) in [(1, 50.0), (2, 200.0), (4, 400.0)] {
            let mut p = ToyParams::new(k, eta, 0.0, nu);
            let (_, t1) = p.interval().unwrap();
            p.eps = (0.5 * nu.powf(2.0 / 3.0)).min(1.0 / (t1 * t1));
            let s0 = envelope_data(Variant::Balanced, &p, 8.0).unwrap();
            let tr = integrate_toy(&p, &s0, t1, 1e-9, DEFAULT_BLOWUP_FACTOR).unwrap();
            let r = check_supersolution(&tr, Variant::Balanced, &p, 8.0, 10.0);
            assert!(r.dominates && r.c_needed <= 10.0, "nu {nu} k {k} eta {eta}: {r:?}");
        }
    }
}

#[test]
fn unbalanced_dominates_in_regime() {
    for nu in [1e-2f64, 1e-3] {
        for (k, eta) in [(1, 100.0), (3, 50.0), (2, 400.0)] {
            let mut p = ToyParams::new(k, eta, 0.0, nu);
            let (_, t1) = p.interval().unwrap();
            p.eps = nu.powf(2.0 / 3.0).min(1.0 / t1);
            let s0 = envelope_data(Variant::Unbalanced, &p, 8.0).unwrap();
            let tr = integrate_toy(&p, &s0, t1, 1e-9, DEFAULT_BLOWUP_FACTOR).unwrap();
            let r = check_supersolution(&tr, Variant::Unbalanced, &p, 8.0, 10.0);
            assert!(r.dominates && r.c_needed <= 10.0, "nu {nu} k {k} eta {eta}: {r:?}");
        }
    }
}

#[test]
fn zero_eps_dominates() {
    let p = ToyParams::new(3, 150.0, 0.0, 1e-3);
    let s0 = envelope_data(Variant::Balanced, &p, 8.0).unwrap();
    let tr = integrate_toy(&p, &s0, p.interval().unwrap().1, 1e-9, DEFAULT_BLOWUP_FACTOR).unwrap();
    assert!(check_supersolution(&tr, Variant::Balanced, &p, 8.0, 1.0).dominates);
}

#[test]
fn unbalanced_envelope_shape() {
    let p = ToyParams::new(2, 100.0, 0.0, 1e-3);
    let (t0, t1) = p.interval().unwrap();
    for i in 0..=20 {
        let t = t0 + (t1 - t0) * i as f64 / 20.0;
        let e = envelope(Variant::Unbalanced, &p, 8.0, t);
        let w = e[0];
        assert!(e.iter().all(|&v| v > 0.0));
        assert_eq!(e[3], w);
        assert!((e[2] / w - t / (2.0 + (100.0 - 2.0 * t).abs())).abs() < 1e-12);
    }
}

#[test]
fn blowup_bracketing_sample() {
    for nu in [1e-2f64, 1e-3] {
        let m = nu.powf(2.0 / 3.0);
        let sample = [(1, 50.0), (1, 100.0), (2, 100.0), (2, 200.0)];
        let hit = sample.iter().any(|&(k, eta)| blowup_probe(&ToyParams::new(k, eta, 10.0 * m, nu), DEFAULT_BLOWUP_FACTOR).unwrap().is_some());
        assert!(hit, "no blow-up at 10 nu^(2/3), nu {nu}");
        for &(k, eta) in &sample {
            let t = blowup_probe(&ToyParams::new(k, eta, 0.1 * m, nu), DEFAULT_BLOWUP_FACTOR).unwrap();
            assert!(t.is_none(), "blow-up at 0.1 nu^(2/3), nu {nu} k {k} eta {eta}");
        }
    }
}

#[test]
fn blowup_event_has_time_stamp() {
    let p = ToyParams::new(1, 30.0, 1.0, 0.0);
    let (t0, _) = p.interval().unwrap();
    let s0 = ToyState { q: [c(1.0); 6], t: t0 };
    let tr = integrate_toy(&p, &s0, 60.0, 1e-9, 1e3).unwrap();
    let t = tr.blowup.expect("eps t^2 >> 1 should blow up");
    assert!(t > t0 && t <= 60.0);
}

#[test]
fn kp_dissipation_switch() {
    let mut p = ToyParams::new(3, 90.0, 0.0, 0.1);
    let q = [c(0.0), c(1.0), c(0.0), c(0.0), c(0.0), c(0.0)];
    let t = 25.0;
    let printed = toy_rhs(&p, t, &q)[1];
    assert!((printed.re + 0.1 * (9.0 + (90.0 - 75.0f64).powi(2))).abs() < 1e-12);
    p.kp_dissipation = true;
    let alt = toy_rhs(&p, t, &q)[1];
    assert!((alt.re + 0.1 * (4.0 + (90.0 - 50.0f64).powi(2))).abs() < 1e-12);
}

#[test]
fn params_validation() {
    assert_eq!(ToyParams::new(3, 90.0, 0.0, 0.0).kp, 2);
    assert_eq!(ToyParams::new(1, 90.0, 0.0, 0.0).kp, 2);
    assert!(ToyParams::new(2, -90.0, 0.0, 0.0).interval().is_err());
    let mut p = ToyParams::new(2, 90.0, 0.0, 0.0);
    p.kp = 2;
    assert!(p.validate().is_err());
    assert_eq!(p.interval().unwrap().0, critical_time(2, 90.0).unwrap());
}

#[test]
fn loss_scan_fit() {
    let etas = log_spaced(1e2, 1e6, 30);
    let f8 = gevrey_loss_scan(&etas, 8.0).unwrap();
    assert!(f8.r2 > 0.999);
    let per: Vec<f64> = [4.0, 8.0, 16.0].iter().map(|&k| gevrey_loss_scan(&etas, k).unwrap().c / k).collect();
    let mid = per[1];
    assert!(per.iter().all(|v| (v / mid - 1.0).abs() < 0.1), "{per:?}");
    let wide = gevrey_loss_scan(&log_spaced(1e2, 2e6, 30), 8.0).unwrap();
    assert!((wide.c / f8.c - 1.0).abs() < 0.02);
    assert!(gevrey_loss_scan(&etas[..3], 8.0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 16, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn constants_of_motion(k in 1i64..5, eta in 30.0f64..300.0, re in proptest::collection::vec(-1.0f64..1.0, 6)) {
        let p = ToyParams::new(k, eta, 0.0, 0.0);
        let (t0, t1) = p.interval().unwrap();
        let s0 = ToyState { q: std::array::from_fn(|i| c(re[i] + 2.0)), t: t0 };
        let tr = integrate_toy(&p, &s0, t1, 1e-9, f64::INFINITY).unwrap();
        let end = tr.states.last().unwrap();
        for i in [0, 1, 2, 4, 5] {
            prop_assert_eq!(end.q[i], s0.q[i]);
        }
    }

    #[test]
    fn domination_monotone_in_eps(k in 1i64..4, eta in 50.0f64..300.0, scale in 0.1f64..1.0) {
        let nu = 1e-3;
        let mut p = ToyParams::new(k, eta, 0.0, nu);
        let (_, t1) = p.interval().unwrap();
        let e = scale / (t1 * t1);
        let dom = |eps: f64, p: &mut ToyParams| {
            p.eps = eps;
            let s0 = envelope_data(Variant::Balanced, p, 8.0).unwrap();
            let tr = integrate_toy(p, &s0, t1, 1e-9, DEFAULT_BLOWUP_FACTOR).unwrap();
            check_supersolution(&tr, Variant::Balanced, p, 8.0, 1.0).dominates
        };
        if dom(e, &mut p) {
            prop_assert!(dom(0.5 * e, &mut p));
        }
    }
}
