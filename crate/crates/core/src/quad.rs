//! Composite Simpson quadrature on uniform and non-uniform grids.

use crate::real::Compensated;

/// Simpson's rule for samples `y` at uniformly spaced abscissae with step `h`.
/// An odd number of intervals closes with a one-interval quadratic correction.
pub fn simpson_uniform(y: &[f64], h: f64) -> f64 {
    let x: Vec<f64> = (0..y.len()).map(|i| i as f64 * h).collect();
    simpson(&x, y)
}

/// Composite Simpson over arbitrary strictly increasing `x`.
pub fn simpson(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len(), "abscissae and ordinates differ in length");
    let n = x.len();
    match n {
        0 | 1 => return 0.0,
        2 => return 0.5 * (x[1] - x[0]) * (y[0] + y[1]),
        _ => {}
    }
    let intervals = n - 1;
    let paired = intervals - intervals % 2;
    let mut acc = Compensated::new();
    let mut i = 0;
    while i < paired {
        let h0 = x[i + 1] - x[i];
        let h1 = x[i + 2] - x[i + 1];
        let hs = h0 + h1;
        acc.add(
            hs / 6.0
                * ((2.0 - h1 / h0) * y[i]
                    + hs * hs / (h0 * h1) * y[i + 1]
                    + (2.0 - h0 / h1) * y[i + 2]),
        );
        i += 2;
    }
    if intervals % 2 == 1 {
        let h0 = x[n - 2] - x[n - 3];
        let h1 = x[n - 1] - x[n - 2];
        let (f0, f1, f2) = (y[n - 3], y[n - 2], y[n - 1]);
        acc.add(
            f2 * (2.0 * h1 * h1 + 3.0 * h0 * h1) / (6.0 * (h0 + h1))
                + f1 * (h1 * h1 + 3.0 * h0 * h1) / (6.0 * h0)
                - f0 * h1 * h1 * h1 / (6.0 * h0 * (h0 + h1)),
        );
    }
    acc.value()
}

/// Running Simpson integral: element `i` approximates the integral from `0` to `i*h`.
/// Even indices are plain composite Simpson; odd indices close with one corrected
/// interval, so the last entry equals [`simpson_uniform`] on the whole array.
pub fn cumulative_simpson_uniform(y: &[f64], h: f64) -> Vec<f64> {
    let n = y.len();
    let mut out = vec![0.0; n];
    if n < 2 {
        return out;
    }
    out[1] = if n >= 3 {
        h * (5.0 * y[0] + 8.0 * y[1] - y[2]) / 12.0
    } else {
        0.5 * h * (y[0] + y[1])
    };
    let mut even = Compensated::new();
    for i in (2..n).step_by(2) {
        even.add(h / 3.0 * (y[i - 2] + 4.0 * y[i - 1] + y[i]));
        out[i] = even.value();
        if i + 1 < n {
            // quadratic through (i-1, i, i+1) integrated over the last interval
            let last = h * (-y[i - 1] + 8.0 * y[i] + 5.0 * y[i + 1]) / 12.0;
            out[i + 1] = even.value() + last;
        }
    }
    out
}
