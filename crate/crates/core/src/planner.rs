//! Flat output, truncated control and truncated state.
//!
//! On `[tau, tau + R']` the flat output is
//! `y(t) = phi_s((t - tau) / R') * sum_{k <= K} y_k (t - tau)^k / k!`
//! and the control and temperature follow by differentiation:
//! `u(t) = sum_{1 <= i <= I} y^(i)(t) / (2i-1)!`,
//! `theta(t, x) = sum_{0 <= i <= I} y^(i)(t) x^{2i} / (2i)!`.
//! The control is zero before `tau` and after `tau + R'`.

use std::collections::HashMap;
use std::io::Write;
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::dd::DoubleDouble;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::format::num;
use crate::gevrey::{phi_jet_in, GevreyParams};
use crate::jet::Jet;
use crate::quad::simpson_uniform;
use crate::real::Real;
use crate::spectrum::{cosine_coeffs, flat_coeffs, FlatCoefficients, InitialProfile, SpectralState};
use crate::Precision;

/// Uniform grid size used for the control norms by default.
pub const DEFAULT_NORM_POINTS: usize = 4001;

/// Relative slack for `tau + R' <= T` so that sums like `0.3 + 0.2` count as equal.
const HORIZON_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanConfig {
    /// Gevrey order of the step function.
    pub s: f64,
    /// Zero-control regularisation time.
    pub tau: f64,
    /// Duration of the active control.
    pub r_prime: f64,
    /// Final time `T`.
    pub horizon: f64,
    pub i_max: usize,
    pub k_max: usize,
    pub n_max: usize,
    #[serde(default)]
    pub precision: Precision,
}

impl Default for PlanConfig {
    fn default() -> Self {
        Self {
            s: 1.6,
            tau: 0.3,
            r_prime: 0.2,
            horizon: 0.5,
            i_max: 40,
            k_max: 60,
            n_max: 30,
            precision: Precision::Standard,
        }
    }
}

impl PlanConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Validation(msg));
        if !(self.s > 1.0 && self.s < 2.0) {
            return fail(format!("1 < s < 2 violated (s = {})", self.s));
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return fail(format!("tau > 0 violated (tau = {})", self.tau));
        }
        if !(self.r_prime > 0.0) {
            return fail(format!("r_prime > 0 violated (r_prime = {})", self.r_prime));
        }
        if self.r_prime > self.tau {
            return fail(format!(
                "r_prime <= tau violated (r_prime = {}, tau = {})",
                self.r_prime, self.tau
            ));
        }
        if !(self.horizon.is_finite())
            || self.tau + self.r_prime > self.horizon * (1.0 + HORIZON_SLACK)
        {
            return fail(format!(
                "tau + r_prime <= horizon violated ({} + {} > {})",
                self.tau, self.r_prime, self.horizon
            ));
        }
        for (name, v) in [
            ("i_max", self.i_max),
            ("k_max", self.k_max),
            ("n_max", self.n_max),
        ] {
            if v < 1 {
                return fail(format!("{name} >= 1 violated ({name} = {v})"));
            }
        }
        Ok(())
    }

    /// End of the active-control window, `tau + R'`.
    pub fn control_end(&self) -> f64 {
        self.tau + self.r_prime
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlNorms {
    pub l2: f64,
    pub linf: f64,
}

type CacheKey = (u64, usize, Precision);

/// An evaluable control and state over `[0, T]`. Immutable once built.
pub struct ControlPlan {
    config: PlanConfig,
    gevrey: GevreyParams,
    spectrum: SpectralState,
    flat: FlatCoefficients<f64>,
    flat_ext: FlatCoefficients<DoubleDouble>,
    cache: Option<Mutex<HashMap<CacheKey, Arc<Vec<f64>>>>>,
    norms: OnceLock<ControlNorms>,
}

impl Clone for ControlPlan {
    fn clone(&self) -> Self {
        Self {
            config: self.config,
            gevrey: self.gevrey,
            spectrum: self.spectrum.clone(),
            flat: self.flat.clone(),
            flat_ext: self.flat_ext.clone(),
            cache: self.cache.as_ref().map(|_| Mutex::new(HashMap::new())),
            norms: self.norms.clone(),
        }
    }
}

impl std::fmt::Debug for ControlPlan {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ControlPlan")
            .field("config", &self.config)
            .field("flat", &self.flat)
            .field("cached", &self.cache.is_some())
            .finish()
    }
}

pub fn build_plan(profile: &InitialProfile, config: PlanConfig) -> Result<ControlPlan> {
    config.validate()?;
    let state = cosine_coeffs(profile, config.n_max)?;
    ControlPlan::from_state(state, config)
}

impl ControlPlan {
    /// Builds from known cosine coefficients, truncated or zero-padded to `n_max`.
    pub fn from_state(state: SpectralState, config: PlanConfig) -> Result<Self> {
        config.validate()?;
        let mut c = state.coeffs().to_vec();
        c.resize(config.n_max + 1, 0.0);
        let spectrum = SpectralState::new(c)?;
        let gevrey = GevreyParams::new(config.s)?;
        if config.i_max + 1 > gevrey.max_order() {
            return Err(Error::Capability(format!(
                "i_max = {} needs jets of order {} (maximum {})",
                config.i_max,
                config.i_max + 1,
                gevrey.max_order()
            )));
        }
        let flat = flat_coeffs::<f64>(&spectrum, config.tau, config.k_max)?;
        let flat_ext = flat_coeffs::<DoubleDouble>(&spectrum, config.tau, config.k_max)?;
        Ok(Self {
            config,
            gevrey,
            spectrum,
            flat,
            flat_ext,
            cache: None,
            norms: OnceLock::new(),
        })
    }

    /// Turns on memoisation of flat-output derivative stacks. Results are unchanged.
    pub fn with_cache(mut self) -> Self {
        self.cache = Some(Mutex::new(HashMap::new()));
        self
    }

    /// Same plan evaluated in another precision.
    pub fn with_precision(&self, precision: Precision) -> Self {
        let mut p = self.clone();
        p.config.precision = precision;
        p.norms = OnceLock::new();
        p
    }

    pub fn config(&self) -> &PlanConfig {
        &self.config
    }

    pub fn gevrey(&self) -> &GevreyParams {
        &self.gevrey
    }

    pub fn spectrum(&self) -> &SpectralState {
        &self.spectrum
    }

    pub fn flat(&self) -> &FlatCoefficients<f64> {
        &self.flat
    }

    pub fn flat_extended(&self) -> &FlatCoefficients<DoubleDouble> {
        &self.flat_ext
    }

    fn check_window(&self, t: f64) -> Result<()> {
        let c = &self.config;
        if !(t >= c.tau && t <= c.control_end()) {
            return Err(Error::Domain(format!(
                "flat output is defined on [{}, {}], got t = {t}",
                c.tau,
                c.control_end()
            )));
        }
        Ok(())
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if !(t >= 0.0 && t <= self.config.horizon) {
            return Err(Error::Domain(format!(
                "t = {t} lies outside [0, {}]",
                self.config.horizon
            )));
        }
        Ok(())
    }

    fn flat_jet_in<T: Real>(
        &self,
        flat: &FlatCoefficients<T>,
        t: f64,
        order: usize,
    ) -> Result<Jet<T>> {
        let c = &self.config;
        let tt = T::from_f64(t);
        let z0 = tt - T::from_f64(c.tau);
        let rp = T::from_f64(c.r_prime);
        let phi = phi_jet_in(&self.gevrey, z0 / rp, order)?.reparametrize(t, T::one() / rp);
        if phi.is_zero() {
            return Ok(phi);
        }
        // Taylor shift of sum_k y_k z^k / k! to z0:
        // coefficient j = (1/j!) sum_{k >= j} y_k z0^{k-j} / (k-j)!
        let y = flat.y();
        let k_max = y.len() - 1;
        let mut w = Vec::with_capacity(k_max + 1);
        let mut wm = T::one();
        for m in 0..=k_max {
            if m > 0 {
                wm = wm * z0 / T::from_usize(m);
            }
            w.push(wm);
        }
        let mut inv_fact = T::one();
        let mut poly = Vec::with_capacity(order + 1);
        for j in 0..=order {
            if j > 0 {
                inv_fact /= T::from_usize(j);
            }
            if j > k_max {
                poly.push(T::zero());
            } else {
                poly.push(inv_fact * T::sum((j..=k_max).map(|k| y[k] * w[k - j])));
            }
        }
        phi.mul(&Jet::from_vec(t, poly))
    }

    /// Normalised Taylor coefficients of the flat output at `t`, in the plan's precision.
    fn flat_coeffs_at(&self, t: f64, order: usize) -> Result<Arc<Vec<f64>>> {
        let precision = self.config.precision;
        let key = (t.to_bits(), order, precision);
        if let Some(cache) = &self.cache {
            if let Some(hit) = cache.lock().expect("cache poisoned").get(&key) {
                return Ok(hit.clone());
            }
        }
        let coeffs = match precision {
            Precision::Standard => self.flat_jet_in(&self.flat, t, order)?.coeffs().to_vec(),
            Precision::Extended => self
                .flat_jet_in(&self.flat_ext, t, order)?
                .to_f64()
                .coeffs()
                .to_vec(),
        };
        let coeffs = Arc::new(coeffs);
        if let Some(cache) = &self.cache {
            cache
                .lock()
                .expect("cache poisoned")
                .insert(key, coeffs.clone());
        }
        Ok(coeffs)
    }

    /// Jet of the truncated flat output at `t` in `[tau, tau + R']`.
    pub fn flat_output_jet(&self, t: f64, order: usize) -> Result<Jet<f64>> {
        self.check_window(t)?;
        match self.config.precision {
            Precision::Standard => self.flat_jet_in(&self.flat, t, order),
            Precision::Extended => Ok(self.flat_jet_in(&self.flat_ext, t, order)?.to_f64()),
        }
    }

    /// Double-double jet of the flat output, independent of the plan's precision setting.
    pub fn flat_output_jet_extended(&self, t: f64, order: usize) -> Result<Jet<DoubleDouble>> {
        self.check_window(t)?;
        self.flat_jet_in(&self.flat_ext, t, order)
    }

    /// Derivatives `y^(i)(t)`, `i = 0..=order`.
    pub fn flat_derivatives(&self, t: f64, order: usize) -> Result<Vec<f64>> {
        Ok(self.flat_output_jet(t, order)?.derivatives())
    }

    fn in_active_window(&self, t: f64) -> bool {
        t > self.config.tau && t < self.config.control_end()
    }

    pub fn control_at(&self, t: f64) -> Result<f64> {
        self.check_time(t)?;
        self.control_unchecked(t)
    }

    fn control_unchecked(&self, t: f64) -> Result<f64> {
        if !self.in_active_window(t) {
            return Ok(0.0);
        }
        let a = self.flat_coeffs_at(t, self.config.i_max)?;
        Ok(control_series(&a, self.config.i_max))
    }

    /// Truncated temperature: free evolution up to `tau`, flatness series on
    /// `(tau, tau + R']`, zero afterwards.
    pub fn state_at(&self, t: f64, x: f64) -> Result<f64> {
        self.check_time(t)?;
        check_x(x)?;
        let c = &self.config;
        if t <= c.tau {
            Ok(self.spectrum.free_state_unchecked(t, x))
        } else if t <= c.control_end() {
            self.series_state_at(t, x)
        } else {
            Ok(0.0)
        }
    }

    /// The flatness series for the temperature, valid on the closed window
    /// `[tau, tau + R']` (at `tau` it is the Taylor form of the free state).
    pub fn series_state_at(&self, t: f64, x: f64) -> Result<f64> {
        self.check_window(t)?;
        check_x(x)?;
        let a = self.flat_coeffs_at(t, self.config.i_max)?;
        Ok(state_series(&a, self.config.i_max, x))
    }

    /// `d theta / dx` of the flatness series on `[tau, tau + R']`.
    pub fn series_state_dx(&self, t: f64, x: f64) -> Result<f64> {
        self.check_window(t)?;
        check_x(x)?;
        let a = self.flat_coeffs_at(t, self.config.i_max)?;
        Ok(state_dx_series(&a, self.config.i_max, x))
    }

    /// Exact defect `theta_t - theta_xx = y^(I+1)(t) x^{2I} / (2I)!` of the truncated series.
    pub fn truncation_residual(&self, t: f64, x: f64) -> Result<f64> {
        self.check_window(t)?;
        check_x(x)?;
        let i_max = self.config.i_max;
        let a = self.flat_coeffs_at(t, i_max + 1)?;
        // (I+1)! / (2I)! built as (I+1) * I!/(2I)!
        let mut v = 1.0;
        for i in 0..i_max {
            v *= (i + 1) as f64 / ((2 * i + 1) * (2 * i + 2)) as f64;
        }
        Ok(a[i_max + 1] * (i_max + 1) as f64 * v * x.powi(2 * i_max as i32))
    }

    pub fn control_norms(&self, grid_points: usize) -> Result<ControlNorms> {
        self.control_norms_with(grid_points, Execution::default())
    }

    /// L-infinity norm over a uniform grid of `[tau, tau + R']` and the L2 norm by
    /// composite Simpson on the same grid (the control vanishes elsewhere).
    pub fn control_norms_with(&self, grid_points: usize, exec: Execution) -> Result<ControlNorms> {
        if grid_points < 2 {
            return Err(Error::Input(format!(
                "control norms need at least 2 grid points, got {grid_points}"
            )));
        }
        let grid = self.active_grid(grid_points);
        let values = exec
            .map(&grid, |&t| self.control_unchecked(t))
            .into_iter()
            .collect::<Result<Vec<f64>>>()?;
        let linf = values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let sq: Vec<f64> = values.iter().map(|v| v * v).collect();
        let h = self.config.r_prime / (grid_points - 1) as f64;
        Ok(ControlNorms {
            l2: simpson_uniform(&sq, h).sqrt(),
            linf,
        })
    }

    /// Norms on the default grid, computed once per plan.
    pub fn norms(&self) -> Result<ControlNorms> {
        if let Some(n) = self.norms.get() {
            return Ok(*n);
        }
        let n = self.control_norms(DEFAULT_NORM_POINTS)?;
        Ok(*self.norms.get_or_init(|| n))
    }

    /// `grid_points` uniform times covering `[tau, tau + R']`, endpoints exact.
    pub fn active_grid(&self, grid_points: usize) -> Vec<f64> {
        let c = &self.config;
        let h = c.r_prime / (grid_points - 1) as f64;
        (0..grid_points)
            .map(|i| {
                if i + 1 == grid_points {
                    c.control_end()
                } else {
                    c.tau + i as f64 * h
                }
            })
            .collect()
    }

    /// Largest mismatch over `k <= k_orders` and a uniform `x` grid between the series
    /// `sum_i y_{i+k} x^{2i} / (2i)!` and the spectral `d^k/dt^k` of the free state at `tau`.
    pub fn splice_consistency(&self, k_orders: usize, x_grid: usize) -> Result<f64> {
        if k_orders > 3 {
            return Err(Error::Contract(format!(
                "splice check supports k <= 3, got {k_orders}"
            )));
        }
        if x_grid < 2 {
            return Err(Error::Input("splice check needs at least 2 x points".into()));
        }
        let y = self.flat.y();
        let k_max = y.len() - 1;
        let i_max = self.config.i_max;
        let mut worst: f64 = 0.0;
        for k in 0..=k_orders.min(k_max) {
            for j in 0..x_grid {
                let x = j as f64 / (x_grid - 1) as f64;
                let x2 = x * x;
                let mut v = 1.0;
                let mut p = 1.0;
                let mut terms = Vec::new();
                for i in 0..=i_max.min(k_max - k) {
                    if i > 0 {
                        v /= ((2 * i - 1) * (2 * i)) as f64;
                        p *= x2;
                    }
                    terms.push(y[i + k] * v * p);
                }
                let lhs = crate::real::compensated_sum(terms);
                let rhs = self
                    .spectrum
                    .free_time_derivative(k as u32, self.config.tau, x);
                worst = worst.max((lhs - rhs).abs());
            }
        }
        Ok(worst)
    }

    /// Writes `t,u` rows on a uniform grid of `[0, T]`.
    pub fn write_control_csv<W: Write>(&self, out: W, points: usize) -> Result<()> {
        let points = points.max(2);
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "u"])?;
        let h = self.config.horizon / (points - 1) as f64;
        for i in 0..points {
            let t = (i as f64 * h).min(self.config.horizon);
            w.write_record([num(t), num(self.control_unchecked(t)?)])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Writes `t,x,theta` rows (long format) on a uniform `nt x nx` grid of `[0,T] x [0,1]`.
    pub fn write_state_csv<W: Write>(&self, out: W, nt: usize, nx: usize) -> Result<()> {
        let (nt, nx) = (nt.max(2), nx.max(2));
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "x", "theta"])?;
        for i in 0..nt {
            let t = (i as f64 * self.config.horizon / (nt - 1) as f64).min(self.config.horizon);
            for j in 0..nx {
                let x = j as f64 / (nx - 1) as f64;
                w.write_record([num(t), num(x), num(self.state_at(t, x)?)])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

fn check_x(x: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("x = {x} lies outside [0, 1]")));
    }
    Ok(())
}

/// `sum_{i=1..I} a_i i! / (2i-1)!` with `a_i = y^(i)/i!`.
fn control_series(a: &[f64], i_max: usize) -> f64 {
    let mut w = 1.0;
    let mut terms = Vec::with_capacity(i_max);
    for i in 1..=i_max {
        if i > 1 {
            let m = (i - 1) as f64;
            w *= (m + 1.0) / ((2.0 * m) * (2.0 * m + 1.0));
        }
        terms.push(a[i] * w);
    }
    crate::real::compensated_sum(terms)
}

fn state_series(a: &[f64], i_max: usize, x: f64) -> f64 {
    let x2 = x * x;
    let mut v = 1.0;
    let mut terms = Vec::with_capacity(i_max + 1);
    for i in 0..=i_max {
        if i > 0 {
            let m = (i - 1) as f64;
            v *= (m + 1.0) / ((2.0 * m + 1.0) * (2.0 * m + 2.0)) * x2;
        }
        terms.push(a[i] * v);
    }
    crate::real::compensated_sum(terms)
}

fn state_dx_series(a: &[f64], i_max: usize, x: f64) -> f64 {
    let x2 = x * x;
    let mut w = 1.0;
    let mut p = x;
    let mut terms = Vec::with_capacity(i_max);
    for i in 1..=i_max {
        if i > 1 {
            let m = (i - 1) as f64;
            w *= (m + 1.0) / ((2.0 * m) * (2.0 * m + 1.0));
            p *= x2;
        }
        terms.push(a[i] * w * p);
    }
    crate::real::compensated_sum(terms)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plan(profile: InitialProfile) -> ControlPlan {
        build_plan(&profile, PlanConfig::default()).unwrap()
    }

    #[test]
    fn validation_names_the_inequality() {
        let bad = |f: fn(&mut PlanConfig)| {
            let mut c = PlanConfig::default();
            f(&mut c);
            match c.validate() {
                Err(Error::Validation(m)) => m,
                other => panic!("expected validation error, got {other:?}"),
            }
        };
        assert!(bad(|c| c.s = 2.0).contains("1 < s < 2"));
        assert!(bad(|c| c.r_prime = 0.31).contains("r_prime <= tau"));
        assert!(bad(|c| c.horizon = 0.45).contains("horizon"));
        assert!(bad(|c| c.k_max = 0).contains("k_max"));
        assert!(bad(|c| c.tau = -1.0).contains("tau > 0"));
        assert!(PlanConfig::default().validate().is_ok());
    }

    #[test]
    fn zero_profile_gives_zero_control() {
        let p = plan(InitialProfile::zero());
        for i in 0..=50 {
            assert_eq!(p.control_at(i as f64 * 0.01).unwrap(), 0.0);
        }
        let n = p.control_norms(101).unwrap();
        assert_eq!((n.l2, n.linf), (0.0, 0.0));
    }

    #[test]
    fn constant_profile_series_at_tau_is_constant() {
        let p = plan(InitialProfile::Constant { value: 1.0 });
        for j in 0..=10 {
            let x = j as f64 / 10.0;
            assert!((p.series_state_at(0.3, x).unwrap() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn control_vanishes_outside_active_window() {
        let mut cfg = PlanConfig::default();
        cfg.horizon = 0.6;
        let p = build_plan(&InitialProfile::Step, cfg).unwrap();
        assert_eq!(p.control_at(0.0).unwrap(), 0.0);
        assert_eq!(p.control_at(0.3).unwrap(), 0.0);
        assert_eq!(p.control_at(0.55).unwrap(), 0.0);
        assert!(p.control_at(0.4).unwrap() != 0.0);
        assert!(matches!(p.control_at(0.61), Err(Error::Domain(_))));
        assert!(matches!(p.control_at(-0.01), Err(Error::Domain(_))));
    }

    #[test]
    fn state_is_zero_at_horizon() {
        let p = plan(InitialProfile::Step);
        for j in 0..=10 {
            assert_eq!(p.state_at(0.5, j as f64 / 10.0).unwrap(), 0.0);
        }
        assert!(matches!(p.state_at(0.4, 1.2), Err(Error::Domain(_))));
    }

    #[test]
    fn flat_jet_window_is_enforced() {
        let p = plan(InitialProfile::Step);
        assert!(matches!(p.flat_output_jet(0.29, 3), Err(Error::Domain(_))));
        assert!(matches!(p.flat_output_jet(0.51, 3), Err(Error::Domain(_))));
        assert!(p.flat_output_jet(0.5, 3).unwrap().is_zero());
    }

    #[test]
    fn state_at_x0_is_flat_output() {
        let p = plan(InitialProfile::Step);
        for &t in &[0.31, 0.37, 0.45, 0.49] {
            let y = p.flat_output_jet(t, 2).unwrap().value();
            assert_eq!(p.state_at(t, 0.0).unwrap(), y);
        }
    }

    #[test]
    fn splice_rejects_high_orders() {
        let p = plan(InitialProfile::Step);
        assert!(matches!(p.splice_consistency(4, 11), Err(Error::Contract(_))));
    }

    #[test]
    fn splice_is_exact_for_constant_profile_derivatives() {
        let p = plan(InitialProfile::Constant { value: 2.0 });
        assert_eq!(p.with_precision(Precision::Standard).splice_consistency(0, 11).unwrap() < 1e-15, true);
        let mut cfg = PlanConfig::default();
        cfg.i_max = 5;
        let q = build_plan(&InitialProfile::Constant { value: 2.0 }, cfg).unwrap();
        // k >= 1 contributions vanish on both sides
        assert!(q.splice_consistency(3, 11).unwrap() < 1e-15);
    }

    #[test]
    fn cache_is_bit_identical() {
        let p = plan(InitialProfile::Step);
        let c = p.clone().with_cache();
        for &t in &[0.31, 0.4, 0.4, 0.47] {
            assert_eq!(
                p.control_at(t).unwrap().to_bits(),
                c.control_at(t).unwrap().to_bits()
            );
            assert_eq!(
                p.state_at(t, 0.3).unwrap().to_bits(),
                c.state_at(t, 0.3).unwrap().to_bits()
            );
        }
    }

    #[test]
    fn norms_need_two_points() {
        let p = plan(InitialProfile::Step);
        assert!(matches!(p.control_norms(1), Err(Error::Input(_))));
    }
}
