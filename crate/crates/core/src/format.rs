//! Numeric text output. Every value is written in the shortest decimal form that parses
//! back to the identical binary64.

/// Shortest round-trip representation (`0.1`, `6.41`, `1e-20`, `-3.5e20`).
pub fn num(v: f64) -> String {
    format!("{v:?}")
}
