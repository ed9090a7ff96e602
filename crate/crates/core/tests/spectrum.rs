mod common;

use std::f64::consts::{PI, SQRT_2};

use common::{factorial, max_abs, rel_err};
use heatflat::simulator::{simulate, SolverConfig};
use heatflat::spectrum::{cosine_coeffs, flat_coeffs, InitialProfile, SampledProfile, SpectralState};
use heatflat::{build_plan, Error, PlanConfig};
use proptest::prelude::*;

fn step_closed_form(n: usize) -> f64 {
    if n % 2 == 0 {
        0.0
    } else {
        let p = (n - 1) / 2;
        let sign = if p % 2 == 0 { -1.0 } else { 1.0 };
        sign / n as f64 * 2.0 * SQRT_2 / PI
    }
}

fn sampled(points: usize, f: impl Fn(f64) -> f64) -> InitialProfile {
    let x: Vec<f64> = (0..points).map(|i| i as f64 / (points - 1) as f64).collect();
    let theta = x.iter().map(|&v| f(v)).collect();
    InitialProfile::Sampled(SampledProfile::new(x, theta).unwrap())
}

fn step_value(x: f64) -> f64 {
    InitialProfile::Step.value_at(x)
}

#[test]
fn step_preset_coefficients() {
    let state = cosine_coeffs(&InitialProfile::Step, 40).unwrap();
    for (n, &c) in state.coeffs().iter().enumerate() {
        assert!((c - step_closed_form(n)).abs() < 1e-15, "n = {n}");
    }
    assert!((state.coeffs()[1] + 2.0 * SQRT_2 / PI).abs() < 1e-15);
}

#[test]
fn constant_preset_coefficients() {
    let state = cosine_coeffs(&InitialProfile::Constant { value: 3.0 }, 10).unwrap();
    assert!((state.coeffs()[0] - 3.0 / SQRT_2).abs() < 1e-15);
    assert!(state.coeffs()[1..].iter().all(|&c| c == 0.0));
}

#[test]
fn sampled_step_matches_closed_form() {
    // 4096 intervals so the jump sits on a node
    let state = cosine_coeffs(&sampled(4097, step_value), 50).unwrap();
    for n in 0..=50 {
        let err = (state.coeffs()[n] - step_closed_form(n)).abs();
        assert!(err <= 1e-6, "n = {n}: error {err:e}");
    }
}

#[test]
fn sampled_profile_rejects_bad_grids() {
    assert!(matches!(SampledProfile::new(vec![0.0], vec![1.0]), Err(Error::Input(_))));
    assert!(SampledProfile::new(vec![0.0, 0.5, 0.5], vec![1.0, 1.0, 1.0]).is_err());
    assert!(SampledProfile::new(vec![0.0, 1.5], vec![1.0, 1.0]).is_err());
    assert!(SampledProfile::new(vec![0.0, 1.0], vec![1.0, f64::NAN]).is_err());
}

#[test]
fn sampled_profile_reads_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("profile.csv");
    std::fs::write(&path, "x,theta0\n0,1\n0.5,2\n1,3\n").unwrap();
    let p = SampledProfile::from_csv_path(&path).unwrap();
    assert_eq!(p.x(), &[0.0, 0.5, 1.0]);
    assert!((p.value_at(0.25) - 1.5).abs() < 1e-15);
    std::fs::write(&path, "x,theta0\n0,1\n").unwrap();
    assert!(SampledProfile::from_csv_path(&path).is_err());
}

#[test]
fn parseval_is_monotone_and_bounded() {
    let f = |x: f64| (3.0 * x).sin() + x * x - 0.4;
    let profile = sampled(2049, f);
    let h = 1.0 / 2048.0;
    // independent fine-grid trapezoid of theta0^2
    let energy: f64 = (0..=2048)
        .map(|i| {
            let w = if i == 0 || i == 2048 { 0.5 } else { 1.0 };
            w * f(i as f64 * h).powi(2) * h
        })
        .sum();
    let mut last = 0.0;
    for n in [0, 1, 2, 4, 8, 16, 32, 64] {
        let norm = cosine_coeffs(&profile, n).unwrap().norm_sq();
        assert!(norm >= last - 1e-14);
        assert!(norm <= energy + 1e-6);
        last = norm;
    }
    assert!((energy - last).abs() < 1e-4);
}

#[test]
fn free_state_examples() {
    let constant = cosine_coeffs(&InitialProfile::Constant { value: 2.5 }, 8).unwrap();
    for &(t, x) in &[(0.0, 0.0), (0.4, 0.3), (3.0, 1.0)] {
        assert!((constant.free_state(t, x).unwrap() - 2.5).abs() < 1e-14);
    }
    let mode = cosine_coeffs(&InitialProfile::mode(1), 8).unwrap();
    let want = SQRT_2 * (-PI * PI * 0.1).exp();
    assert!((mode.free_state(0.1, 0.0).unwrap() - want).abs() < 1e-15);
    assert!(matches!(mode.free_state(-0.1, 0.0), Err(Error::Domain(_))));
    assert!(mode.free_state(0.1, 1.2).is_err());
}

#[test]
fn free_state_matches_crank_nicolson() {
    let cfg = PlanConfig::default();
    let plan = build_plan(&InitialProfile::Step, cfg).unwrap();
    let solver = SolverConfig::new(1000, 2.5e-5).with_stride(400);
    let traj = simulate(&InitialProfile::Step, &plan, &solver).unwrap();
    let idx = traj
        .times()
        .iter()
        .position(|&t| (t - 0.3).abs() < 1e-12)
        .expect("snapshot at t = 0.3");
    let j = traj.x().iter().position(|&x| (x - 0.25).abs() < 1e-12).unwrap();
    let got = plan.spectrum().free_state(0.3, 0.25).unwrap();
    let err = (traj.fields()[idx][j] - got).abs();
    assert!(err <= 1e-6, "gap {err:e}");
}

#[test]
fn flat_coefficient_examples() {
    let constant = cosine_coeffs(&InitialProfile::Constant { value: 1.7 }, 10).unwrap();
    let y = flat_coeffs::<f64>(&constant, 0.3, 12).unwrap();
    assert!((y.y()[0] - 1.7).abs() < 1e-15);
    assert!(y.y()[1..].iter().all(|&v| v == 0.0));

    let mode = cosine_coeffs(&InitialProfile::mode(1), 10).unwrap();
    let y = flat_coeffs::<f64>(&mode, 0.3, 20).unwrap();
    let base = SQRT_2 * (-PI * PI * 0.3).exp();
    for (k, &v) in y.y().iter().enumerate() {
        let want = base * (-PI * PI).powi(k as i32);
        assert!(rel_err(v, want) < 1e-13, "k = {k}");
        // alternating sign
        assert_eq!(v < 0.0, k % 2 == 1);
    }

    assert!(matches!(flat_coeffs::<f64>(&mode, 0.0, 4), Err(Error::Domain(_))));
    assert!(flat_coeffs::<f64>(&mode, -1.0, 4).is_err());
}

#[test]
fn step_flat_coefficients_obey_factorial_growth() {
    let tau = 0.3;
    let state = cosine_coeffs(&InitialProfile::Step, 30).unwrap();
    let y = flat_coeffs::<f64>(&state, tau, 60).unwrap();
    let bound = 10.0 * (1.0 + 1.0 / tau.sqrt());
    for (k, &v) in y.y().iter().enumerate() {
        let scaled = v.abs() * tau.powi(k as i32) / factorial(k);
        assert!(scaled <= bound, "k = {k}: {scaled}");
    }
    let c = y.growth_constant();
    let longer = flat_coeffs::<f64>(&state, tau, 90).unwrap().growth_constant();
    assert!(c.is_finite() && c > 0.0);
    assert!(longer <= 10.0 * c);
}

#[test]
fn flat_coefficients_settle_in_mode_count() {
    let y20 = flat_coeffs::<f64>(&cosine_coeffs(&InitialProfile::Step, 20).unwrap(), 0.3, 60).unwrap();
    let y30 = flat_coeffs::<f64>(&cosine_coeffs(&InitialProfile::Step, 30).unwrap(), 0.3, 60).unwrap();
    let worst = y20
        .y()
        .iter()
        .zip(y30.y())
        .map(|(a, b)| rel_err(*a, *b))
        .fold(0.0, f64::max);
    assert!(worst <= 1e-10, "{worst:e}");
}

#[test]
fn flat_coefficients_reject_overflow() {
    let state = SpectralState::new(vec![0.0, 1e300, 1e300]).unwrap();
    match flat_coeffs::<f64>(&state, 1e-6, 200) {
        Err(Error::Overflow(msg)) => assert!(msg.contains("n =") || msg.contains("k =")),
        other => panic!("expected overflow, got {other:?}"),
    }
}

fn coeff_vec() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-2.0..2.0_f64, 12)
}

proptest! {
    #[test]
    fn flat_coefficients_are_linear(a in coeff_vec(), b in coeff_vec(), alpha in -3.0..3.0_f64, beta in -3.0..3.0_f64) {
        let sa = SpectralState::new(a).unwrap();
        let sb = SpectralState::new(b).unwrap();
        let combined = SpectralState::combine(alpha, &sa, beta, &sb);
        let ya = flat_coeffs::<f64>(&sa, 0.3, 40).unwrap();
        let yb = flat_coeffs::<f64>(&sb, 0.3, 40).unwrap();
        let yc = flat_coeffs::<f64>(&combined, 0.3, 40).unwrap();
        for k in 0..=40 {
            let want = alpha * ya.y()[k] + beta * yb.y()[k];
            let scale = max_abs([alpha * ya.y()[k], beta * yb.y()[k], want]).max(f64::MIN_POSITIVE);
            prop_assert!((yc.y()[k] - want).abs() <= 1e-12 * scale, "k = {}", k);
        }
    }
}
