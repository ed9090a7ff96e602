//! The Gevrey step function `phi_s`: equal to 1 for `t <= 0`, 0 for `t >= 1`, and
//! `exp(-(1-t)^-k) / (exp(-(1-t)^-k) + exp(-t^-k))` in between, with `k = 1/(s-1)`.
//! Every derivative vanishes at both endpoints.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jet::Jet;
use crate::real::{Real, EXP_UNDERFLOW};

pub const DEFAULT_MAX_ORDER: usize = 96;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GevreyParams {
    s: f64,
    k: f64,
    max_order: usize,
}

impl GevreyParams {
    /// Accepts any finite `s > 1`; the planner narrows this to `1 < s < 2`.
    pub fn new(s: f64) -> Result<Self> {
        if !(s.is_finite() && s > 1.0) {
            return Err(Error::Validation(format!(
                "Gevrey order must satisfy s > 1, got {s}"
            )));
        }
        Ok(Self {
            s,
            k: 1.0 / (s - 1.0),
            max_order: DEFAULT_MAX_ORDER,
        })
    }

    pub fn with_max_order(mut self, max_order: usize) -> Self {
        self.max_order = max_order;
        self
    }

    #[inline]
    pub fn s(&self) -> f64 {
        self.s
    }

    /// Exponent `k = 1/(s-1)`.
    #[inline]
    pub fn k(&self) -> f64 {
        self.k
    }

    #[inline]
    pub fn max_order(&self) -> usize {
        self.max_order
    }
}

/// Logistic form `phi = 1 / (1 + e^g)` with `g(t) = (1-t)^-k - t^-k`, evaluated on the
/// branch where the exponential cannot overflow.
fn phi_interior<T: Real>(k: T, t: T) -> T {
    let g = (T::one() - t).powf(-k) - t.powf(-k);
    if g <= T::zero() {
        T::one() / (T::one() + g.exp())
    } else {
        let e = (-g).exp();
        e / (T::one() + e)
    }
}

pub fn phi(params: &GevreyParams, t: f64) -> f64 {
    phi_in::<f64>(params, t)
}

/// Scalar step function in the working precision `T`.
pub fn phi_in<T: Real>(params: &GevreyParams, t: T) -> T {
    if t <= T::zero() {
        T::one()
    } else if t >= T::one() {
        T::zero()
    } else {
        phi_interior(T::from_f64(params.k), t)
    }
}

pub fn phi_jet(params: &GevreyParams, t: f64, order: usize) -> Result<Jet<f64>> {
    phi_jet_in::<f64>(params, t, order)
}

/// Jet of `phi_s` at `t` in precision `T`, built from power, exponential, sum and
/// reciprocal compositions.
pub fn phi_jet_in<T: Real>(params: &GevreyParams, t: T, order: usize) -> Result<Jet<T>> {
    if order > params.max_order {
        return Err(Error::Capability(format!(
            "jet order {order} exceeds the configured maximum {}",
            params.max_order
        )));
    }
    let center = t.to_f64();
    if !center.is_finite() {
        return Err(Error::Domain(format!("phi evaluated at non-finite t = {center}")));
    }
    if t <= T::zero() {
        return Ok(Jet::constant(center, T::one(), order));
    }
    if t >= T::one() {
        return Ok(Jet::zero(center, order));
    }
    let k = T::from_f64(params.k);
    let one = T::one();
    let g0 = (one - t).powf(-k) - t.powf(-k);
    // Whole exponential underflows: phi is flat to working precision.
    if g0.to_f64() < EXP_UNDERFLOW {
        return Ok(Jet::constant(center, one, order));
    }
    if g0.to_f64() > -EXP_UNDERFLOW {
        return Ok(Jet::zero(center, order));
    }
    let u = Jet::<T>::from_vec(center, variable_coeffs(t, order));
    let v = u.neg().add_constant(one);
    let g = v.pow(-k)?.sub(&u.pow(-k)?)?;
    if g0 <= T::zero() {
        g.exp()?.add_constant(one).recip()
    } else {
        let e = g.neg().exp()?;
        e.mul(&e.add_constant(one).recip()?)
    }
}

fn variable_coeffs<T: Real>(t: T, order: usize) -> Vec<T> {
    let mut c = vec![T::zero(); order + 1];
    c[0] = t;
    if order >= 1 {
        c[1] = T::one();
    }
    c
}
