//! Truncated Taylor jets.
//!
//! A [`Jet`] of order `n` at `t0` stores the normalised Taylor coefficients
//! `f^(j)(t0) / j!` for `j = 0..=n`. Composition rules are the classical power-series
//! recurrences, each `O(n^2)` in the order.

use crate::error::{Error, Result};
use crate::real::{Real, EXP_OVERFLOW, EXP_UNDERFLOW};

/// Relative threshold below which a constant term is treated as zero by [`Jet::recip`].
pub const RECIP_SINGULAR_THRESHOLD: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq)]
pub struct Jet<T = f64> {
    center: f64,
    coeffs: Vec<T>,
}

impl<T: Real> Jet<T> {
    /// Builds a jet from normalised Taylor coefficients; rejects empty or non-finite input.
    pub fn new(center: f64, coeffs: Vec<T>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::Input("a jet needs at least one coefficient".into()));
        }
        if !center.is_finite() {
            return Err(Error::Input(format!("jet centre {center} is not finite")));
        }
        if let Some(j) = coeffs.iter().position(|c| !c.is_finite()) {
            return Err(Error::Input(format!("jet coefficient {j} is not finite")));
        }
        Ok(Self { center, coeffs })
    }

    pub(crate) fn from_vec(center: f64, coeffs: Vec<T>) -> Self {
        debug_assert!(!coeffs.is_empty());
        Self { center, coeffs }
    }

    pub fn constant(center: f64, value: T, order: usize) -> Self {
        let mut coeffs = vec![T::zero(); order + 1];
        coeffs[0] = value;
        Self { center, coeffs }
    }

    pub fn zero(center: f64, order: usize) -> Self {
        Self::constant(center, T::zero(), order)
    }

    /// Jet of the identity function `f(t) = t` at `center`.
    pub fn variable(center: f64, order: usize) -> Self {
        let mut jet = Self::constant(center, T::from_f64(center), order);
        if order >= 1 {
            jet.coeffs[1] = T::one();
        }
        jet
    }

    #[inline]
    pub fn center(&self) -> f64 {
        self.center
    }

    #[inline]
    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    #[inline]
    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    #[inline]
    pub fn value(&self) -> T {
        self.coeffs[0]
    }

    /// `f^(j)(t0)`, i.e. `j!` times coefficient `j`.
    pub fn derivative(&self, j: usize) -> T {
        let mut scale = T::one();
        for m in 2..=j {
            scale *= T::from_usize(m);
        }
        self.coeffs[j] * scale
    }

    pub fn derivatives(&self) -> Vec<T> {
        let mut fact = T::one();
        self.coeffs
            .iter()
            .enumerate()
            .map(|(j, &c)| {
                if j >= 2 {
                    fact *= T::from_usize(j);
                }
                c * fact
            })
            .collect()
    }

    /// True when every coefficient is exactly zero.
    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == T::zero())
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_finite())
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.center != other.center {
            return Err(Error::Contract(format!(
                "jet centres differ: {} vs {}",
                self.center, other.center
            )));
        }
        if self.order() != other.order() {
            return Err(Error::Contract(format!(
                "jet orders differ: {} vs {}",
                self.order(),
                other.order()
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(&a, &b)| a + b)
            .collect();
        Ok(Self::from_vec(self.center, coeffs))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(&a, &b)| a - b)
            .collect();
        Ok(Self::from_vec(self.center, coeffs))
    }

    pub fn neg(&self) -> Self {
        Self::from_vec(self.center, self.coeffs.iter().map(|&c| -c).collect())
    }

    pub fn scale(&self, factor: T) -> Self {
        Self::from_vec(
            self.center,
            self.coeffs.iter().map(|&c| c * factor).collect(),
        )
    }

    pub fn add_constant(&self, c: T) -> Self {
        let mut out = self.clone();
        out.coeffs[0] += c;
        out
    }

    /// Cauchy product (Leibniz rule), accumulated with [`Real::sum`].
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let a = &self.coeffs;
        let b = &other.coeffs;
        let coeffs = (0..a.len())
            .map(|j| T::sum((0..=j).map(|m| a[m] * b[j - m])))
            .collect();
        Ok(Self::from_vec(self.center, coeffs))
    }

    /// `exp(f)`. A constant term below the binary64 underflow threshold yields the exact
    /// zero jet.
    pub fn exp(&self) -> Result<Self> {
        let a0 = self.coeffs[0].to_f64();
        if !a0.is_finite() {
            return Err(Error::Input("exp of a non-finite jet".into()));
        }
        if a0 > EXP_OVERFLOW {
            return Err(Error::Overflow(format!("exp({a0:e}) exceeds the binary64 range")));
        }
        if a0 < EXP_UNDERFLOW {
            return Ok(Self::zero(self.center, self.order()));
        }
        let a = &self.coeffs;
        let mut r = Vec::with_capacity(a.len());
        r.push(a[0].exp());
        for j in 1..a.len() {
            let s = T::sum((1..=j).map(|m| T::from_usize(m) * a[m] * r[j - m]));
            r.push(s / T::from_usize(j));
        }
        Ok(Self::from_vec(self.center, r))
    }

    /// `ln(f)`; requires a positive constant term.
    pub fn ln(&self) -> Result<Self> {
        let a = &self.coeffs;
        if !(a[0] > T::zero()) {
            return Err(Error::Domain(format!(
                "ln needs a positive constant term, got {:?}",
                a[0]
            )));
        }
        let mut r = Vec::with_capacity(a.len());
        r.push(a[0].ln());
        for j in 1..a.len() {
            let s = T::sum((1..j).map(|m| T::from_usize(m) * r[m] * a[j - m]));
            r.push((a[j] - s / T::from_usize(j)) / a[0]);
        }
        Ok(Self::from_vec(self.center, r))
    }

    /// `f^p` for real `p`; requires a positive constant term (branch point otherwise).
    pub fn pow(&self, p: T) -> Result<Self> {
        let a = &self.coeffs;
        if !(a[0] > T::zero()) {
            return Err(Error::Domain(format!(
                "power of a jet with non-positive constant term {:?}",
                a[0]
            )));
        }
        let mut r = Vec::with_capacity(a.len());
        r.push(a[0].powf(p));
        for j in 1..a.len() {
            let jj = T::from_usize(j);
            let s = T::sum(
                (1..=j).map(|m| (T::from_usize(m) * (p + T::one()) - jj) * a[m] * r[j - m]),
            );
            r.push(s / (jj * a[0]));
        }
        Ok(Self::from_vec(self.center, r))
    }

    /// `1 / f`.
    pub fn recip(&self) -> Result<Self> {
        let a = &self.coeffs;
        let scale = a
            .iter()
            .map(|c| c.to_f64().abs())
            .fold(1.0_f64, f64::max);
        if a[0].to_f64().abs() < RECIP_SINGULAR_THRESHOLD * scale {
            return Err(Error::Singular(format!(
                "reciprocal of a jet with constant term {:e}",
                a[0].to_f64()
            )));
        }
        let inv = T::one() / a[0];
        let mut r = Vec::with_capacity(a.len());
        r.push(inv);
        for j in 1..a.len() {
            let s = T::sum((1..=j).map(|m| a[m] * r[j - m]));
            r.push(-s * inv);
        }
        Ok(Self::from_vec(self.center, r))
    }

    /// Jet of `t -> f(c + factor * (t - new_center))` where `c` is this jet's centre:
    /// coefficient `j` is multiplied by `factor^j`.
    pub fn reparametrize(&self, new_center: f64, factor: T) -> Self {
        let mut w = T::one();
        let coeffs = self
            .coeffs
            .iter()
            .map(|&c| {
                let v = c * w;
                w *= factor;
                v
            })
            .collect();
        Self::from_vec(new_center, coeffs)
    }

    /// Evaluates the truncated Taylor polynomial at `t0 + dt`.
    pub fn eval(&self, dt: T) -> T {
        self.coeffs
            .iter()
            .rev()
            .fold(T::zero(), |acc, &c| acc * dt + c)
    }

    pub fn to_f64(&self) -> Jet<f64> {
        Jet::from_vec(
            self.center,
            self.coeffs.iter().map(|c| c.to_f64()).collect(),
        )
    }
}
