//! Crank–Nicolson solve of the controlled heat equation, used to check the synthesized
//! control independently of the series that produced it.
//!
//! Second-order central differences on `x_j = j / nx` with ghost points
//! `theta_{-1} = theta_1` (insulated end) and `theta_{nx+1} = theta_{nx-1} + 2 h u`
//! (flux end). The control enters at the half-step time.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format::num;
use crate::planner::{ControlPlan, PlanConfig};
use crate::spectrum::InitialProfile;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Integrate from `t = 0` numerically.
    #[default]
    CrankNicolson,
    /// Start at `tau` from the spectral free state, then integrate.
    SpectralSplice,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub nx: usize,
    pub dt: f64,
    pub scheme: Scheme,
    /// Keep a snapshot every `stride` steps (the last step is always kept).
    pub stride: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            nx: 200,
            dt: 1e-4,
            scheme: Scheme::CrankNicolson,
            stride: 100,
        }
    }
}

impl SolverConfig {
    pub fn new(nx: usize, dt: f64) -> Self {
        Self {
            nx,
            dt,
            ..Self::default()
        }
    }

    pub fn with_scheme(mut self, scheme: Scheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.stride = stride;
        self
    }

    /// Halves both the spatial and the temporal step.
    pub fn refined(self) -> Self {
        Self {
            nx: self.nx * 2,
            dt: self.dt / 2.0,
            stride: self.stride * 2,
            ..self
        }
    }

    pub fn validate(&self, horizon: f64) -> Result<()> {
        if self.nx < 8 {
            return Err(Error::Validation(format!("nx >= 8 violated (nx = {})", self.nx)));
        }
        if !(self.dt > 0.0 && self.dt <= horizon) {
            return Err(Error::Validation(format!(
                "0 < dt <= horizon violated (dt = {}, horizon = {horizon})",
                self.dt
            )));
        }
        if self.stride == 0 {
            return Err(Error::Validation("stride >= 1 violated".into()));
        }
        Ok(())
    }
}

/// Saved snapshots of a simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    x: Vec<f64>,
    times: Vec<f64>,
    fields: Vec<Vec<f64>>,
    /// `(t + dt/2, u)` for every step taken.
    applied_control: Vec<(f64, f64)>,
}

impl Trajectory {
    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn fields(&self) -> &[Vec<f64>] {
        &self.fields
    }

    pub fn applied_control(&self) -> &[(f64, f64)] {
        &self.applied_control
    }

    pub fn final_field(&self) -> &[f64] {
        self.fields.last().expect("trajectory has at least one snapshot")
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("trajectory has at least one snapshot")
    }

    /// Writes `t,x,theta` rows for every `stride`-th saved snapshot and the last one.
    pub fn write_csv<W: Write>(&self, out: W, stride: usize) -> Result<()> {
        let stride = stride.max(1);
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "x", "theta"])?;
        let last = self.times.len() - 1;
        for (i, (t, field)) in self.times.iter().zip(&self.fields).enumerate() {
            if i % stride != 0 && i != last {
                continue;
            }
            for (x, v) in self.x.iter().zip(field) {
                w.write_record([num(*t), num(*x), num(*v)])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Trapezoid-weighted discrete L2 norm on a uniform grid of `[0, 1]`.
pub fn discrete_l2(field: &[f64]) -> f64 {
    trapezoid(&field.iter().map(|v| v * v).collect::<Vec<_>>()).sqrt()
}

/// Trapezoid-weighted integral over `[0, 1]`.
pub fn trapezoid(field: &[f64]) -> f64 {
    let n = field.len() - 1;
    let h = 1.0 / n as f64;
    let inner = crate::real::compensated_sum(field[1..n].iter().copied());
    h * (0.5 * (field[0] + field[n]) + inner)
}

/// Factorised `I - (dt/2) L` for the ghost-point Neumann Laplacian.
struct CnStep {
    r: f64,
    /// Forward-elimination multipliers and pivots of the Thomas algorithm.
    upper: Vec<f64>,
    pivot: Vec<f64>,
}

impl CnStep {
    fn new(nx: usize, dt: f64) -> Self {
        let h = 1.0 / nx as f64;
        let r = 0.5 * dt / (h * h);
        let n = nx + 1;
        let diag = 1.0 + 2.0 * r;
        let sub = |i: usize| if i == nx { -2.0 * r } else { -r };
        let sup = |i: usize| if i == 0 { -2.0 * r } else { -r };
        let mut upper = vec![0.0; n];
        let mut pivot = vec![0.0; n];
        pivot[0] = diag;
        upper[0] = sup(0) / pivot[0];
        for i in 1..n {
            pivot[i] = diag - sub(i) * upper[i - 1];
            if i + 1 < n {
                upper[i] = sup(i) / pivot[i];
            }
        }
        Self { r, upper, pivot }
    }

    /// Advances `theta` by one step with boundary flux `u` at the half step.
    fn advance(&self, theta: &mut [f64], scratch: &mut [f64], u: f64, dt: f64) {
        let n = theta.len();
        let nx = n - 1;
        let h = 1.0 / nx as f64;
        let r = self.r;
        // right-hand side (I + dt/2 L) theta + dt * 2u/h e_nx
        scratch[0] = (1.0 - 2.0 * r) * theta[0] + 2.0 * r * theta[1];
        for j in 1..nx {
            scratch[j] = r * theta[j - 1] + (1.0 - 2.0 * r) * theta[j] + r * theta[j + 1];
        }
        scratch[nx] = 2.0 * r * theta[nx - 1] + (1.0 - 2.0 * r) * theta[nx] + dt * 2.0 * u / h;
        let sub = |i: usize| if i == nx { -2.0 * r } else { -r };
        scratch[0] /= self.pivot[0];
        for i in 1..n {
            scratch[i] = (scratch[i] - sub(i) * scratch[i - 1]) / self.pivot[i];
        }
        theta[nx] = scratch[nx];
        for i in (0..nx).rev() {
            theta[i] = scratch[i] - self.upper[i] * theta[i + 1];
        }
    }
}

/// Runs the solver over `[0, T]` (or `[tau, T]` for [`Scheme::SpectralSplice`]) under the
/// plan's truncated control.
pub fn simulate(
    profile: &InitialProfile,
    plan: &ControlPlan,
    solver: &SolverConfig,
) -> Result<Trajectory> {
    let cfg: &PlanConfig = plan.config();
    let horizon = cfg.horizon;
    solver.validate(horizon)?;
    let nx = solver.nx;
    let x: Vec<f64> = (0..=nx).map(|j| j as f64 / nx as f64).collect();
    let (t0, mut theta): (f64, Vec<f64>) = match solver.scheme {
        Scheme::CrankNicolson => (0.0, x.iter().map(|&xj| profile.value_at(xj)).collect()),
        Scheme::SpectralSplice => (
            cfg.tau,
            x.iter()
                .map(|&xj| plan.spectrum().free_state(cfg.tau, xj))
                .collect::<Result<_>>()?,
        ),
    };
    let span = horizon - t0;
    let steps = ((span / solver.dt) - 1e-9).ceil().max(1.0) as usize;
    let full = CnStep::new(nx, solver.dt);
    let mut scratch = vec![0.0; nx + 1];
    let mut times = vec![t0];
    let mut fields = vec![theta.clone()];
    let mut applied = Vec::with_capacity(steps);
    let mut t = t0;
    for step in 0..steps {
        let last = step + 1 == steps;
        let dt = if last { horizon - t } else { solver.dt };
        let t_half = (t + 0.5 * dt).min(horizon);
        let u = plan.control_at(t_half)?;
        if last && (dt - solver.dt).abs() > 1e-15 * solver.dt {
            CnStep::new(nx, dt).advance(&mut theta, &mut scratch, u, dt);
        } else {
            full.advance(&mut theta, &mut scratch, u, dt);
        }
        t = if last { horizon } else { t0 + (step + 1) as f64 * solver.dt };
        applied.push((t_half, u));
        if theta.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence { step: step + 1 });
        }
        if (step + 1) % solver.stride == 0 || last {
            times.push(t);
            fields.push(theta.clone());
        }
    }
    Ok(Trajectory {
        x,
        times,
        fields,
        applied_control: applied,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    /// `max_x |theta_hat(T, x)|`.
    pub linf_final: f64,
    /// Discrete L2 norm of `theta_hat(T, .)`.
    pub l2_final: f64,
    /// Largest pointwise gap between the simulation and the truncated series.
    pub max_gap: f64,
}

/// Terminal norms and the simulator/series gap over every saved time `t > 0`.
pub fn compare(trajectory: &Trajectory, plan: &ControlPlan) -> Result<Comparison> {
    compare_window(trajectory, plan, f64::MIN_POSITIVE, f64::INFINITY)
}

/// As [`compare`], with the gap restricted to saved times in `[from, to]`.
pub fn compare_window(
    trajectory: &Trajectory,
    plan: &ControlPlan,
    from: f64,
    to: f64,
) -> Result<Comparison> {
    let final_field = trajectory.final_field();
    let linf_final = final_field.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let l2_final = discrete_l2(final_field);
    let mut max_gap: f64 = 0.0;
    for (&t, field) in trajectory.times.iter().zip(&trajectory.fields) {
        if t < from || t > to {
            continue;
        }
        for (&x, &v) in trajectory.x.iter().zip(field) {
            max_gap = max_gap.max((v - plan.state_at(t, x)?).abs());
        }
    }
    Ok(Comparison {
        linf_final,
        l2_final,
        max_gap,
    })
}

/// Machine-readable record of a simulation run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimulationSummary {
    pub plan: PlanConfig,
    pub solver: SolverConfig,
    pub final_time: f64,
    #[serde(flatten)]
    pub comparison: Comparison,
}
