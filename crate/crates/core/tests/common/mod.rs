#![allow(dead_code)]

use heatflat::DoubleDouble;

pub fn dd(v: f64) -> DoubleDouble {
    DoubleDouble::from(v)
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, j| acc * (n - j) as f64 / (j + 1) as f64)
}

/// Central difference of order `m` with step `h`, evaluated in double-double so that
/// cancellation stays below the truncation error for `m <= 6`.
fn central_difference<F>(f: &F, x: f64, m: usize, h: f64) -> DoubleDouble
where
    F: Fn(DoubleDouble) -> DoubleDouble,
{
    let x = dd(x);
    let h_dd = dd(h);
    let mut acc = DoubleDouble::ZERO;
    for j in 0..=m {
        let offset = dd(m as f64 / 2.0 - j as f64) * h_dd;
        let w = binomial(m, j) * if j % 2 == 0 { 1.0 } else { -1.0 };
        acc += dd(w) * f(x + offset);
    }
    acc / h_dd.powf(dd(m as f64))
}

/// m-th derivative by central differences with two Richardson steps (`O(h^6)`).
pub fn fd_derivative<F>(f: F, x: f64, m: usize, h: f64) -> f64
where
    F: Fn(DoubleDouble) -> DoubleDouble,
{
    if m == 0 {
        return f(dd(x)).to_f64();
    }
    let d1 = central_difference(&f, x, m, h);
    let d2 = central_difference(&f, x, m, h / 2.0);
    let d3 = central_difference(&f, x, m, h / 4.0);
    let r1 = (dd(4.0) * d2 - d1) / dd(3.0);
    let r2 = (dd(4.0) * d3 - d2) / dd(3.0);
    ((dd(16.0) * r2 - r1) / dd(15.0)).to_f64()
}

/// Truncated product of two coefficient lists by summing every pair `a_i b_j`.
pub fn brute_force_product(a: &[f64], b: &[f64], order: usize) -> Vec<f64> {
    let mut pairs: Vec<Vec<DoubleDouble>> = vec![Vec::new(); order + 1];
    for (i, &ai) in a.iter().enumerate() {
        for (j, &bj) in b.iter().enumerate() {
            if i + j <= order {
                pairs[i + j].push(dd(ai) * dd(bj));
            }
        }
    }
    pairs
        .into_iter()
        .map(|terms| terms.into_iter().fold(DoubleDouble::ZERO, |s, t| s + t).to_f64())
        .collect()
}

/// `phi_s` straight from its defining quotient, in double-double.
pub fn phi_oracle(k: f64, t: DoubleDouble) -> DoubleDouble {
    let one = DoubleDouble::ONE;
    if t <= DoubleDouble::ZERO {
        return one;
    }
    if t >= one {
        return DoubleDouble::ZERO;
    }
    let num = (-(one - t).powf(dd(-k))).exp();
    let den = num + (-t.powf(dd(-k))).exp();
    num / den
}

pub fn factorial(n: usize) -> f64 {
    (1..=n).map(|v| v as f64).product()
}

pub fn rel_err(got: f64, want: f64) -> f64 {
    if want == 0.0 {
        got.abs()
    } else {
        ((got - want) / want).abs()
    }
}

pub fn max_abs(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(0.0, |m, v| m.max(v.abs()))
}
