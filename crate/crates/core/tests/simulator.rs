use std::f64::consts::{PI, SQRT_2};

use heatflat::simulator::{
    compare, compare_window, discrete_l2, simulate, trapezoid, Scheme, SimulationSummary,
    SolverConfig, Trajectory,
};
use heatflat::{build_plan, ControlPlan, Error, InitialProfile, PlanConfig};

fn zero_control_plan(horizon: f64) -> ControlPlan {
    let cfg = PlanConfig {
        horizon,
        ..PlanConfig::default()
    };
    build_plan(&InitialProfile::zero(), cfg).unwrap()
}

/// Max error of a single-mode zero-control run against `sqrt 2 e^{-pi^2 t} cos(pi x)`.
fn single_mode_error(nx: usize, dt: f64, t_end: f64) -> f64 {
    let plan = zero_control_plan(0.5);
    let traj = simulate(&InitialProfile::mode(1), &plan, &SolverConfig::new(nx, dt).with_stride(1)).unwrap();
    let i = traj
        .times()
        .iter()
        .position(|&t| (t - t_end).abs() < 1e-9)
        .unwrap();
    let decay = (-PI * PI * t_end).exp();
    traj.x()
        .iter()
        .zip(&traj.fields()[i])
        .map(|(&x, &v)| (v - SQRT_2 * decay * (PI * x).cos()).abs())
        .fold(0.0, f64::max)
}

#[test]
fn constant_profile_stays_constant_without_control() {
    let plan = zero_control_plan(0.5);
    let profile = InitialProfile::Constant { value: -0.35 };
    let traj = simulate(&profile, &plan, &SolverConfig::new(64, 1e-3)).unwrap();
    for field in traj.fields() {
        assert!(field.iter().all(|v| (v + 0.35).abs() <= 1e-12));
    }
}

#[test]
fn single_mode_decay_is_accurate() {
    let err = single_mode_error(200, 1e-4, 0.3);
    assert!(err <= 1e-5, "{err:e}");
}

#[test]
fn solver_is_second_order() {
    let coarse = single_mode_error(50, 4e-4, 0.3);
    let mid = single_mode_error(100, 2e-4, 0.3);
    let fine = single_mode_error(200, 1e-4, 0.3);
    for ratio in [coarse / mid, mid / fine] {
        assert!((3.0..=5.0).contains(&ratio), "ratio {ratio}");
    }
}

#[test]
fn energy_never_grows_without_control() {
    let plan = zero_control_plan(0.5);
    let solver = SolverConfig::new(100, 1e-3).with_stride(1);
    let traj = simulate(&InitialProfile::Step, &plan, &solver).unwrap();
    let energy: Vec<f64> = traj.fields().iter().map(|f| discrete_l2(f)).collect();
    assert_eq!(energy.len(), 501);
    for w in energy.windows(2) {
        assert!(w[1] <= w[0] * (1.0 + 1e-14), "{} -> {}", w[0], w[1]);
    }
}

#[test]
fn mean_follows_boundary_flux() {
    let plan = build_plan(&InitialProfile::Step, PlanConfig::default()).unwrap();
    let solver = SolverConfig::new(200, 1e-4).with_stride(1);
    let traj = simulate(&InitialProfile::Step, &plan, &solver).unwrap();
    let control = traj.applied_control();
    assert_eq!(control.len(), traj.fields().len() - 1);
    let times = traj.times();
    for (i, w) in traj.fields().windows(2).enumerate() {
        let dt = times[i + 1] - times[i];
        let change = trapezoid(&w[1]) - trapezoid(&w[0]);
        assert!((change - dt * control[i].1).abs() <= 1e-4, "step {i}");
        assert!((control[i].0 - (times[i] + 0.5 * dt)).abs() < 1e-12);
    }
}

#[test]
fn step_experiment_is_steered_to_rest() {
    let plan = build_plan(&InitialProfile::Step, PlanConfig::default()).unwrap();
    let solver = SolverConfig::new(200, 1e-4);
    let traj = simulate(&InitialProfile::Step, &plan, &solver).unwrap();
    assert_eq!(traj.final_time(), 0.5);
    let c = compare(&traj, &plan).unwrap();
    assert!(c.linf_final <= 1e-3, "{c:?}");
    assert!(c.max_gap <= 5e-3, "{c:?}");
    assert!(c.l2_final <= c.linf_final);
}

#[test]
fn simulator_and_series_agree_better_on_finer_grids() {
    let plan = build_plan(&InitialProfile::Step, PlanConfig::default()).unwrap();
    let mut solver = SolverConfig::new(100, 2e-4);
    let mut gaps = Vec::new();
    for _ in 0..3 {
        let traj = simulate(&InitialProfile::Step, &plan, &solver).unwrap();
        gaps.push(compare(&traj, &plan).unwrap().max_gap);
        solver = solver.refined();
    }
    assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
}

#[test]
fn zero_profile_compares_to_zero() {
    let plan = build_plan(&InitialProfile::zero(), PlanConfig::default()).unwrap();
    let traj = simulate(&InitialProfile::zero(), &plan, &SolverConfig::new(32, 1e-3)).unwrap();
    let c = compare(&traj, &plan).unwrap();
    assert_eq!((c.linf_final, c.l2_final, c.max_gap), (0.0, 0.0, 0.0));
}

#[test]
fn single_mode_gap_before_control_is_discretisation_error() {
    let plan = build_plan(&InitialProfile::mode(1), PlanConfig::default()).unwrap();
    let traj = simulate(&InitialProfile::mode(1), &plan, &SolverConfig::new(200, 1e-4)).unwrap();
    let c = compare_window(&traj, &plan, 0.0, 0.3).unwrap();
    // the gap peaks at early times where the mode is largest
    assert!(c.max_gap <= 2e-5, "{c:?}");
    assert!(c.linf_final <= 1e-6, "{c:?}");
}

#[test]
fn spectral_splice_matches_full_run() {
    let plan = build_plan(&InitialProfile::Step, PlanConfig::default()).unwrap();
    let full = simulate(&InitialProfile::Step, &plan, &SolverConfig::new(200, 1e-4)).unwrap();
    let spliced = simulate(
        &InitialProfile::Step,
        &plan,
        &SolverConfig::new(200, 1e-4).with_scheme(Scheme::SpectralSplice),
    )
    .unwrap();
    assert_eq!(spliced.times()[0], 0.3);
    let gap = full
        .final_field()
        .iter()
        .zip(spliced.final_field())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(gap <= 1e-4, "{gap:e}");
}

#[test]
fn solver_config_is_validated() {
    let plan = zero_control_plan(0.5);
    let run = |s: SolverConfig| simulate(&InitialProfile::Step, &plan, &s);
    assert!(matches!(run(SolverConfig::new(4, 1e-3)), Err(Error::Validation(_))));
    assert!(matches!(run(SolverConfig::new(16, -1.0)), Err(Error::Validation(_))));
    assert!(matches!(run(SolverConfig::new(16, 0.6)), Err(Error::Validation(_))));
}

#[test]
fn short_final_step_lands_on_horizon() {
    let plan = zero_control_plan(0.5);
    let traj = simulate(&InitialProfile::mode(2), &plan, &SolverConfig::new(32, 0.03)).unwrap();
    assert_eq!(traj.final_time(), 0.5);
    assert!(traj.times().windows(2).all(|w| w[1] > w[0]));
    assert!(traj.fields().iter().all(|f| f.len() == 33));
}

fn small_trajectory() -> (ControlPlan, Trajectory) {
    let plan = build_plan(&InitialProfile::Step, PlanConfig::default()).unwrap();
    let traj = simulate(&InitialProfile::Step, &plan, &SolverConfig::new(16, 0.05).with_stride(2)).unwrap();
    (plan, traj)
}

#[test]
fn trajectory_csv_export() {
    let (_, traj) = small_trajectory();
    let mut buf = Vec::new();
    traj.write_csv(&mut buf, 2).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,x,theta"));
    // snapshots at t = 0, 0.1, ..., 0.5 saved; every second one kept plus the last
    let times: std::collections::BTreeSet<String> =
        lines.map(|l| l.split(',').next().unwrap().to_string()).collect();
    assert!(times.contains("0.0") && times.contains("0.5"));
    for t in &times {
        let v: f64 = t.parse().unwrap();
        assert_eq!(&format!("{v:?}"), t);
    }
}

#[test]
fn summary_json_echoes_config() {
    let (plan, traj) = small_trajectory();
    let summary = SimulationSummary {
        plan: *plan.config(),
        solver: SolverConfig::new(16, 0.05).with_stride(2),
        final_time: traj.final_time(),
        comparison: compare(&traj, &plan).unwrap(),
    };
    let json: serde_json::Value = serde_json::to_value(&summary).unwrap();
    assert_eq!(json["plan"]["s"], 1.6);
    assert_eq!(json["solver"]["nx"], 16);
    assert_eq!(json["solver"]["scheme"], "crank_nicolson");
    assert!(json["max_gap"].is_number() && json["linf_final"].is_number());
}
