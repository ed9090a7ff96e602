//! Explicit null-control synthesis for the 1-D heat equation
//! `theta_t = theta_xx` on `(0, 1)` with `theta_x(t, 0) = 0` and the boundary flux
//! `theta_x(t, 1) = u(t)` as control.
//!
//! The control is zero on `[0, tau]` while the heat semigroup smooths the initial data,
//! then follows the flatness parameterisation `u = sum_i y^(i) / (2i-1)!` of a flat output
//! `y` (the temperature at `x = 0`) that is spliced onto the free evolution at `tau` and
//! driven to rest by a Gevrey step function over `[tau, tau + R']`.
//!
//! * [`jet`] and [`gevrey`]: truncated Taylor arithmetic and the step function.
//! * [`spectrum`]: cosine coefficients, free evolution, flat-output seed coefficients.
//! * [`planner`]: the truncated control and state series.
//! * [`simulator`]: an independent Crank–Nicolson solve driven by the synthesized control.
//! * [`bench`]: truncation sweeps, decay fits, control-effort tables and figure traces.

pub mod bench;
pub mod dd;
pub mod error;
pub mod exec;
pub mod format;
pub mod gevrey;
pub mod jet;
pub mod planner;
pub mod quad;
pub mod real;
pub mod simulator;
pub mod spectrum;

use serde::{Deserialize, Serialize};

pub use dd::DoubleDouble;
pub use error::{Error, Result};
pub use exec::Execution;
pub use gevrey::{phi, phi_jet, GevreyParams};
pub use jet::Jet;
pub use planner::{build_plan, ControlNorms, ControlPlan, PlanConfig};
pub use simulator::{compare, simulate, Comparison, Scheme, SolverConfig, Trajectory};
pub use spectrum::{
    cosine_coeffs, flat_coeffs, FlatCoefficients, InitialProfile, SampledProfile, SpectralState,
};

/// Arithmetic used when evaluating the flat output and its derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Precision {
    /// binary64 with compensated summation.
    #[default]
    Standard,
    /// double-double (about 31 significant digits).
    Extended,
}

impl std::str::FromStr for Precision {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "standard" | "f64" => Ok(Precision::Standard),
            "extended" | "dd" | "double-double" => Ok(Precision::Extended),
            other => Err(Error::Input(format!("unknown precision `{other}`"))),
        }
    }
}
