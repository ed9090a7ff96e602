//! Cosine-series description of the initial temperature, its free evolution, and the
//! flat-output seed coefficients at the splice time.
//!
//! Profiles expand as `theta0(x) = sum_n c_n sqrt(2) cos(n pi x)`, so a constant `a`
//! has `c_0 = a / sqrt(2)` and `||theta0||^2 = 2 c_0^2 + sum_{n>=1} c_n^2`.

use std::f64::consts::{PI, SQRT_2};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::simpson;
use crate::real::{compensated_sum, Real};

/// Piecewise-linear profile given by samples on `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledProfile {
    x: Vec<f64>,
    theta: Vec<f64>,
}

impl SampledProfile {
    pub fn new(x: Vec<f64>, theta: Vec<f64>) -> Result<Self> {
        if x.len() != theta.len() {
            return Err(Error::Input(format!(
                "{} abscissae but {} temperatures",
                x.len(),
                theta.len()
            )));
        }
        if x.len() < 2 {
            return Err(Error::Input("a sampled profile needs at least 2 points".into()));
        }
        if x.iter().chain(&theta).any(|v| !v.is_finite()) {
            return Err(Error::Input("sampled profile contains non-finite values".into()));
        }
        if x[0] < 0.0 || x[x.len() - 1] > 1.0 {
            return Err(Error::Input("abscissae must lie in [0, 1]".into()));
        }
        if let Some(i) = x.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::Input(format!(
                "abscissae must be strictly increasing (index {})",
                i + 1
            )));
        }
        Ok(Self { x, theta })
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    /// Linear interpolation, constant beyond the first and last samples.
    pub fn value_at(&self, x: f64) -> f64 {
        let n = self.x.len();
        if x <= self.x[0] {
            return self.theta[0];
        }
        if x >= self.x[n - 1] {
            return self.theta[n - 1];
        }
        let j = self.x.partition_point(|&v| v <= x);
        let (x0, x1) = (self.x[j - 1], self.x[j]);
        let w = (x - x0) / (x1 - x0);
        self.theta[j - 1] * (1.0 - w) + self.theta[j] * w
    }

    /// Samples padded with constant extensions so the grid spans `[0, 1]`.
    fn covering_grid(&self) -> (Vec<f64>, Vec<f64>) {
        let mut x = self.x.clone();
        let mut y = self.theta.clone();
        if x[0] > 0.0 {
            x.insert(0, 0.0);
            y.insert(0, y[0]);
        }
        if x[x.len() - 1] < 1.0 {
            x.push(1.0);
            y.push(y[y.len() - 1]);
        }
        (x, y)
    }

    /// Reads a two-column `x,theta0` CSV with a header row.
    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        let rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_path(path)?;
        Self::from_csv_reader(rdr)
    }

    pub fn from_csv_reader<R: std::io::Read>(mut rdr: csv::Reader<R>) -> Result<Self> {
        let mut x = Vec::new();
        let mut theta = Vec::new();
        for (line, record) in rdr.records().enumerate() {
            let record = record?;
            if record.len() < 2 {
                return Err(Error::Input(format!("row {} has fewer than 2 columns", line + 1)));
            }
            let parse = |s: &str| {
                s.parse::<f64>()
                    .map_err(|e| Error::Input(format!("row {}: `{s}`: {e}", line + 1)))
            };
            x.push(parse(&record[0])?);
            theta.push(parse(&record[1])?);
        }
        Self::new(x, theta)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialProfile {
    /// `-1` on `[0, 1/2)`, `+1` on `(1/2, 1]`.
    Step,
    Constant { value: f64 },
    /// `amplitude * sqrt(2) cos(mode pi x)`.
    SingleMode { mode: usize, amplitude: f64 },
    Sampled(SampledProfile),
    /// Explicit cosine coefficients `c_0, c_1, ...`.
    Coefficients { coeffs: Vec<f64> },
}

impl InitialProfile {
    pub fn zero() -> Self {
        InitialProfile::Constant { value: 0.0 }
    }

    pub fn mode(mode: usize) -> Self {
        InitialProfile::SingleMode {
            mode,
            amplitude: 1.0,
        }
    }

    /// Pointwise value; the step takes its mean value `0` at the jump.
    pub fn value_at(&self, x: f64) -> f64 {
        match self {
            InitialProfile::Step => {
                if x < 0.5 {
                    -1.0
                } else if x > 0.5 {
                    1.0
                } else {
                    0.0
                }
            }
            InitialProfile::Constant { value } => *value,
            InitialProfile::SingleMode { mode, amplitude } => {
                amplitude * SQRT_2 * (*mode as f64 * PI * x).cos()
            }
            InitialProfile::Sampled(s) => s.value_at(x),
            InitialProfile::Coefficients { coeffs } => compensated_sum(
                coeffs
                    .iter()
                    .enumerate()
                    .map(|(n, c)| c * SQRT_2 * (n as f64 * PI * x).cos()),
            ),
        }
    }
}

/// Cosine coefficients `c_0..=c_nmax` of a profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralState {
    coeffs: Vec<f64>,
}

impl SpectralState {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::Input("spectral state needs at least c_0".into()));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::Input("non-finite cosine coefficient".into()));
        }
        Ok(Self { coeffs })
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn n_max(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// `2 c_0^2 + sum_{n>=1} c_n^2`, the squared L2 norm of the represented profile.
    pub fn norm_sq(&self) -> f64 {
        2.0 * self.coeffs[0] * self.coeffs[0]
            + compensated_sum(self.coeffs[1..].iter().map(|c| c * c))
    }

    /// `alpha * a + beta * b`, padding the shorter state with zeros.
    pub fn combine(alpha: f64, a: &Self, beta: f64, b: &Self) -> Self {
        let n = a.coeffs.len().max(b.coeffs.len());
        let get = |s: &Self, i: usize| s.coeffs.get(i).copied().unwrap_or(0.0);
        Self {
            coeffs: (0..n)
                .map(|i| alpha * get(a, i) + beta * get(b, i))
                .collect(),
        }
    }

    /// Zero-control solution `sum_n c_n e^{-n^2 pi^2 t} sqrt(2) cos(n pi x)`.
    pub fn free_state(&self, t: f64, x: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(Error::Domain(format!("free evolution needs t >= 0, got {t}")));
        }
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::Domain(format!("x = {x} lies outside [0, 1]")));
        }
        Ok(self.free_state_unchecked(t, x))
    }

    pub(crate) fn free_state_unchecked(&self, t: f64, x: f64) -> f64 {
        let pi2 = PI * PI;
        SQRT_2
            * compensated_sum(self.coeffs.iter().enumerate().rev().map(|(n, &c)| {
                let nf = n as f64;
                c * (-nf * nf * pi2 * t).exp() * (nf * PI * x).cos()
            }))
    }

    /// `k`-th time derivative of the free evolution at `(t, x)`.
    pub fn free_time_derivative(&self, k: u32, t: f64, x: f64) -> f64 {
        let pi2 = PI * PI;
        SQRT_2
            * compensated_sum(self.coeffs.iter().enumerate().rev().map(|(n, &c)| {
                let lambda = (n * n) as f64 * pi2;
                c * (-lambda).powi(k as i32) * (-lambda * t).exp() * (n as f64 * PI * x).cos()
            }))
    }

    pub fn flat_coeffs<T: Real>(&self, tau: f64, k_max: usize) -> Result<FlatCoefficients<T>> {
        flat_coeffs(self, tau, k_max)
    }
}

/// Cosine coefficients of `profile` up to `n_max`. Presets use closed forms; sampled
/// profiles use composite Simpson on their own grid.
pub fn cosine_coeffs(profile: &InitialProfile, n_max: usize) -> Result<SpectralState> {
    let mut c = vec![0.0; n_max + 1];
    match profile {
        InitialProfile::Step => {
            for (n, cn) in c.iter_mut().enumerate().skip(1).step_by(2) {
                let p = (n - 1) / 2;
                let sign = if p % 2 == 0 { -1.0 } else { 1.0 };
                *cn = sign / n as f64 * (2.0 * SQRT_2 / PI);
            }
        }
        InitialProfile::Constant { value } => c[0] = value / SQRT_2,
        InitialProfile::SingleMode { mode, amplitude } => {
            if *mode <= n_max {
                c[*mode] = *amplitude;
            }
        }
        InitialProfile::Coefficients { coeffs } => {
            for (dst, src) in c.iter_mut().zip(coeffs) {
                *dst = *src;
            }
        }
        InitialProfile::Sampled(s) => {
            let (x, y) = s.covering_grid();
            c[0] = simpson(&x, &y) / SQRT_2;
            for (n, cn) in c.iter_mut().enumerate().skip(1) {
                let w: Vec<f64> = x
                    .iter()
                    .zip(&y)
                    .map(|(&xi, &yi)| yi * SQRT_2 * (n as f64 * PI * xi).cos())
                    .collect();
                *cn = simpson(&x, &w);
            }
        }
    }
    SpectralState::new(c)
}

/// Flat-output coefficients at the splice time `tau`:
/// `y_k = sqrt(2) (sum_n c_n e^{-n^2 pi^2 tau} n^{2k}) (-pi^2)^k`, with `0^0 = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct FlatCoefficients<T = f64> {
    y: Vec<T>,
    tau: f64,
    n_max: usize,
}

impl<T: Real> FlatCoefficients<T> {
    pub fn y(&self) -> &[T] {
        &self.y
    }

    pub fn k_max(&self) -> usize {
        self.y.len() - 1
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// `max_k |y_k| tau^k / (k! (1 + 1/sqrt(tau)))`: the empirical constant of the
    /// factorial growth bound.
    pub fn growth_constant(&self) -> f64 {
        let tau = self.tau;
        let mut ln_fact = 0.0;
        let mut best: f64 = 0.0;
        for (k, y) in self.y.iter().enumerate() {
            if k >= 2 {
                ln_fact += (k as f64).ln();
            }
            let y = y.to_f64().abs();
            if y > 0.0 {
                let v = (y.ln() + k as f64 * tau.ln() - ln_fact).exp();
                best = best.max(v);
            }
        }
        best / (1.0 + 1.0 / tau.sqrt())
    }

    pub fn to_f64(&self) -> FlatCoefficients<f64> {
        FlatCoefficients {
            y: self.y.iter().map(|v| v.to_f64()).collect(),
            tau: self.tau,
            n_max: self.n_max,
        }
    }
}

pub fn flat_coeffs<T: Real>(
    state: &SpectralState,
    tau: f64,
    k_max: usize,
) -> Result<FlatCoefficients<T>> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::Domain(format!("splice time must be positive, got {tau}")));
    }
    let pi = T::pi();
    let pi2 = pi * pi;
    let tau_t = T::from_f64(tau);
    let sqrt2 = T::from_f64(2.0).sqrt();
    let coeffs = state.coeffs();
    let modes: Vec<(usize, T, T, T)> = coeffs
        .iter()
        .enumerate()
        .skip(1)
        .filter(|(_, &c)| c != 0.0)
        .map(|(n, &c)| {
            let nt = T::from_usize(n);
            (n, T::from_f64(c), nt.ln(), nt * nt * pi2 * tau_t)
        })
        .collect();
    let mut y = Vec::with_capacity(k_max + 1);
    let mut power = T::one();
    for k in 0..=k_max {
        let two_k = T::from_usize(2 * k);
        let mut terms = Vec::with_capacity(modes.len() + 1);
        for &(n, c, ln_n, decay) in modes.iter().rev() {
            let term = c * (two_k * ln_n - decay).exp();
            if !term.is_finite() {
                return Err(Error::Overflow(format!(
                    "flat coefficient term (n = {n}, k = {k}) is not finite"
                )));
            }
            terms.push(term);
        }
        if k == 0 {
            terms.push(T::from_f64(coeffs[0]));
        }
        let yk = sqrt2 * T::sum(terms) * power;
        if !yk.is_finite() {
            return Err(Error::Overflow(format!(
                "flat coefficient y_{k} is not finite (n = {}, k = {k})",
                state.n_max()
            )));
        }
        y.push(yk);
        power *= -pi2;
    }
    Ok(FlatCoefficients {
        y,
        tau,
        n_max: state.n_max(),
    })
}
