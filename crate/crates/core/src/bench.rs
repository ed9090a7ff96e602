//! Experiment drivers: truncation sweeps with decay-rate fits, control-effort tables
//! over `(s, R')`, and the data behind the temperature-surface and control figures.
//!
//! Every experiment splits into independent jobs (sweep points, table cells, grid
//! times) that run through [`Execution`]; results are assembled in input order.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::format::num;
use crate::planner::{ControlPlan, PlanConfig, DEFAULT_NORM_POINTS};
use crate::quad::cumulative_simpson_uniform;
use crate::spectrum::{cosine_coeffs, InitialProfile};
use crate::Precision;

/// Errors below this are indistinguishable from round-off and are left out of fits.
pub const ROUND_OFF_FLOOR: f64 = 1e-13;

/// Gevrey orders of the reference control-effort tables (rows).
pub const TABLE_S: [f64; 5] = [1.5, 1.6, 1.7, 1.8, 1.9];
/// Control durations of the reference tables (columns), all with `tau = 0.3`.
pub const TABLE_R: [f64; 4] = [0.15, 0.20, 0.25, 0.30];
/// Target `||u||_L2` values, row-major over [`TABLE_S`] x [`TABLE_R`].
pub const REPORTED_L2: [[f64; 4]; 5] = [
    [693.0, 63.3, 12.7, 3.82],
    [35.3, 6.41, 1.95, 0.78],
    [7.49, 1.95, 0.74, 0.34],
    [5.53, 1.24, 0.48, 0.23],
    [5.71, 1.29, 0.47, 0.22],
];
/// Target `||u||_Linf` values, row-major over [`TABLE_S`] x [`TABLE_R`].
pub const REPORTED_LINF: [[f64; 4]; 5] = [
    [3666.0, 330.0, 55.2, 18.1],
    [118.0, 23.6, 7.17, 2.76],
    [18.6, 4.78, 1.73, 0.76],
    [36.4, 4.59, 1.44, 0.65],
    [47.8, 9.66, 2.13, 0.82],
];

/// Which truncation order a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Truncation {
    IMax,
    KMax,
    NMax,
}

impl Truncation {
    pub fn get(self, cfg: &PlanConfig) -> usize {
        match self {
            Truncation::IMax => cfg.i_max,
            Truncation::KMax => cfg.k_max,
            Truncation::NMax => cfg.n_max,
        }
    }

    pub fn set(self, cfg: &mut PlanConfig, v: usize) {
        match self {
            Truncation::IMax => cfg.i_max = v,
            Truncation::KMax => cfg.k_max = v,
            Truncation::NMax => cfg.n_max = v,
        }
    }

    /// Regressor of the expected decay: `I ln I`, `K`, or `N^2`.
    pub fn abscissa(self, v: usize) -> f64 {
        let v = v as f64;
        match self {
            Truncation::IMax => {
                if v > 0.0 {
                    v * v.ln()
                } else {
                    0.0
                }
            }
            Truncation::KMax => v,
            Truncation::NMax => v * v,
        }
    }
}

impl std::str::FromStr for Truncation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "i" | "i_max" | "i-max" => Ok(Truncation::IMax),
            "k" | "k_max" | "k-max" => Ok(Truncation::KMax),
            "n" | "n_max" | "n-max" => Ok(Truncation::NMax),
            other => Err(Error::Input(format!("unknown truncation `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reference {
    /// The swept order doubled beyond the largest swept value.
    #[default]
    RichestTruncation,
    /// As above, evaluated in double-double.
    ExtendedPrecision,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub vary: Truncation,
    pub values: Vec<usize>,
    pub base: PlanConfig,
    pub profile: InitialProfile,
    #[serde(default)]
    pub reference: Reference,
    /// Uniform times on `[tau, tau + R']` for the sup-norm error.
    #[serde(default = "default_sweep_nt")]
    pub nt: usize,
    /// Uniform points on `[0, 1]` for the sup-norm error.
    #[serde(default = "default_sweep_nx")]
    pub nx: usize,
}

fn default_sweep_nt() -> usize {
    41
}

fn default_sweep_nx() -> usize {
    21
}

impl SweepSpec {
    pub fn new(vary: Truncation, values: Vec<usize>, base: PlanConfig, profile: InitialProfile) -> Self {
        Self {
            vary,
            values,
            base,
            profile,
            reference: Reference::default(),
            nt: default_sweep_nt(),
            nx: default_sweep_nx(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        if self.values.len() < 4 {
            return Err(Error::Validation(format!(
                "a sweep needs at least 4 values, got {}",
                self.values.len()
            )));
        }
        if self.values.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Validation("sweep values must be strictly increasing".into()));
        }
        if self.values[0] == 0 {
            return Err(Error::Validation("truncation orders must be >= 1".into()));
        }
        if self.nt < 2 || self.nx < 2 {
            return Err(Error::Validation("sweep grids need at least 2 points".into()));
        }
        Ok(())
    }

    pub fn reference_config(&self) -> PlanConfig {
        let mut cfg = self.base;
        let top = *self.values.last().expect("validated non-empty");
        self.vary.set(&mut cfg, 2 * top);
        if self.reference == Reference::ExtendedPrecision {
            cfg.precision = Precision::Extended;
        }
        cfg
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub value: usize,
    /// Sup-norm gap to the reference truncation.
    pub error: f64,
    /// Whether the point entered the fit.
    pub used: bool,
}

/// Least-squares fit of `ln error = intercept - rate * abscissa(value)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub vary: Truncation,
    pub rate: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: Vec<SweepPoint>,
}

/// Truncated temperature on the sweep grid over `[tau, tau + R'] x [0, 1]`.
fn series_grid(plan: &ControlPlan, nt: usize, nx: usize, exec: Execution) -> Result<Vec<f64>> {
    let times = plan.active_grid(nt);
    let rows = exec.map(&times, |&t| {
        (0..nx)
            .map(|j| plan.series_state_at(t, j as f64 / (nx - 1) as f64))
            .collect::<Result<Vec<f64>>>()
    });
    let mut out = Vec::with_capacity(nt * nx);
    for r in rows {
        out.extend(r?);
    }
    Ok(out)
}

fn plan_for(profile: &InitialProfile, cfg: PlanConfig) -> Result<ControlPlan> {
    let state = cosine_coeffs(profile, cfg.n_max)?;
    ControlPlan::from_state(state, cfg)
}

pub fn sweep(spec: &SweepSpec) -> Result<DecayFit> {
    sweep_with(spec, Execution::default())
}

/// Runs the sweep and fits the decay rate. Points below [`ROUND_OFF_FLOOR`] are
/// reported but excluded from the fit; fewer than three usable points is an error.
pub fn sweep_with(spec: &SweepSpec, exec: Execution) -> Result<DecayFit> {
    let points = sweep_points(spec, exec)?;
    fit_decay(spec.vary, points)
}

/// Sup-norm errors for each swept value, without fitting.
pub fn sweep_points(spec: &SweepSpec, exec: Execution) -> Result<Vec<SweepPoint>> {
    spec.validate()?;
    let reference = plan_for(&spec.profile, spec.reference_config())?;
    let ref_grid = series_grid(&reference, spec.nt, spec.nx, exec)?;
    let errors = exec.map(&spec.values, |&v| -> Result<f64> {
        let mut cfg = spec.base;
        spec.vary.set(&mut cfg, v);
        let plan = plan_for(&spec.profile, cfg)?;
        let grid = series_grid(&plan, spec.nt, spec.nx, Execution::Sequential)?;
        Ok(grid
            .iter()
            .zip(&ref_grid)
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs())))
    });
    spec.values
        .iter()
        .zip(errors)
        .map(|(&value, e)| {
            let error = e?;
            Ok(SweepPoint {
                value,
                error,
                used: error.is_finite() && error >= ROUND_OFF_FLOOR,
            })
        })
        .collect()
}

pub fn fit_decay(vary: Truncation, points: Vec<SweepPoint>) -> Result<DecayFit> {
    let usable: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| p.used)
        .map(|p| (vary.abscissa(p.value), p.error.ln()))
        .collect();
    if usable.len() < 3 {
        return Err(Error::FitDegenerate(format!(
            "{} of {} sweep points lie above the round-off floor {ROUND_OFF_FLOOR:e}",
            usable.len(),
            points.len()
        )));
    }
    let n = usable.len() as f64;
    let mx = usable.iter().map(|p| p.0).sum::<f64>() / n;
    let my = usable.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = usable.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = usable.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = usable.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::FitDegenerate("all usable abscissae coincide".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        let ss_res: f64 = usable
            .iter()
            .map(|p| (p.1 - intercept - slope * p.0).powi(2))
            .sum();
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    };
    Ok(DecayFit {
        vary,
        rate: -slope,
        intercept,
        r_squared,
        points,
    })
}

impl DecayFit {
    pub fn write_points_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["value", "abscissa", "error", "used"])?;
        for p in &self.points {
            w.write_record([
                p.value.to_string(),
                num(self.vary.abscissa(p.value)),
                num(p.error),
                p.used.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableCell {
    pub s: f64,
    pub r_prime: f64,
    pub l2: Option<f64>,
    pub linf: Option<f64>,
    /// Failure message when the cell could not be computed.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormTable {
    pub s_values: Vec<f64>,
    pub r_values: Vec<f64>,
    /// Row-major: `s` ascending, then `R'` ascending.
    pub cells: Vec<TableCell>,
}

pub fn reproduce_tables(s_values: &[f64], r_values: &[f64], base: &PlanConfig) -> NormTable {
    reproduce_tables_with(s_values, r_values, base, &InitialProfile::Step, Execution::default())
}

/// Control norms on every `(s, R')` cell with `T = tau + R'`. Failures are recorded in
/// the cell and do not stop the run.
pub fn reproduce_tables_with(
    s_values: &[f64],
    r_values: &[f64],
    base: &PlanConfig,
    profile: &InitialProfile,
    exec: Execution,
) -> NormTable {
    let mut s_sorted = s_values.to_vec();
    s_sorted.sort_by(f64::total_cmp);
    let mut r_sorted = r_values.to_vec();
    r_sorted.sort_by(f64::total_cmp);
    let jobs: Vec<(f64, f64)> = s_sorted
        .iter()
        .flat_map(|&s| r_sorted.iter().map(move |&r| (s, r)))
        .collect();
    let state = cosine_coeffs(profile, base.n_max);
    let cells = exec.map(&jobs, |&(s, r_prime)| {
        let result = state.as_ref().map_err(|e| e.to_string()).and_then(|state| {
            let cfg = PlanConfig {
                s,
                r_prime,
                horizon: base.tau + r_prime,
                ..*base
            };
            ControlPlan::from_state(state.clone(), cfg)
                .and_then(|p| p.control_norms_with(DEFAULT_NORM_POINTS, Execution::Sequential))
                .map_err(|e| e.to_string())
        });
        match result {
            Ok(n) => TableCell {
                s,
                r_prime,
                l2: Some(n.l2),
                linf: Some(n.linf),
                error: None,
            },
            Err(e) => TableCell {
                s,
                r_prime,
                l2: None,
                linf: None,
                error: Some(e),
            },
        }
    });
    NormTable {
        s_values: s_sorted,
        r_values: r_sorted,
        cells,
    }
}

impl NormTable {
    pub fn cell(&self, s: f64, r_prime: f64) -> Option<&TableCell> {
        self.cells
            .iter()
            .find(|c| (c.s - s).abs() < 1e-12 && (c.r_prime - r_prime).abs() < 1e-12)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["s", "r_prime", "l2", "linf", "error"])?;
        let opt = |v: Option<f64>| v.map(num).unwrap_or_default();
        for c in &self.cells {
            w.write_record([
                num(c.s),
                num(c.r_prime),
                opt(c.l2),
                opt(c.linf),
                c.error.clone().unwrap_or_default(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Two aligned grids (L2 then L-infinity), rows `s`, columns `R'`.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        for (title, pick) in [
            ("||u||_L2", (|c: &TableCell| c.l2) as fn(&TableCell) -> Option<f64>),
            ("||u||_Linf", |c: &TableCell| c.linf),
        ] {
            let mut rows: Vec<Vec<String>> = vec![std::iter::once("s \\ R'".to_string())
                .chain(self.r_values.iter().map(|&r| num(r)))
                .collect()];
            for (i, &s) in self.s_values.iter().enumerate() {
                let mut row = vec![num(s)];
                for j in 0..self.r_values.len() {
                    let c = &self.cells[i * self.r_values.len() + j];
                    row.push(pick(c).map(num).unwrap_or_else(|| "failed".into()));
                }
                rows.push(row);
            }
            let width = rows.iter().flatten().map(String::len).max().unwrap_or(0);
            out.push_str(title);
            out.push('\n');
            for row in rows {
                let line: Vec<String> = row.iter().map(|v| format!("{v:>width$}")).collect();
                out.push_str(line.join(" ").trim_end());
                out.push('\n');
            }
            out.push('\n');
        }
        out
    }
}

/// Grid sizes for [`figure_traces`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FigureSpec {
    pub surface_nt: usize,
    pub surface_nx: usize,
    pub control_points: usize,
}

impl Default for FigureSpec {
    fn default() -> Self {
        Self {
            surface_nt: 101,
            surface_nx: 51,
            control_points: DEFAULT_NORM_POINTS,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FigureTraces {
    /// `(t, x, theta_bar)` rows.
    pub surface: Vec<[f64; 3]>,
    /// `(t, u_bar, ||u_bar||_L2(0,t))` rows.
    pub control: Vec<[f64; 3]>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FigureFiles {
    pub surface: PathBuf,
    pub control: PathBuf,
}

/// Temperature surface over `[0, T] x [0, 1]` and the control with its running L2 norm.
pub fn figure_traces(
    config: &PlanConfig,
    profile: &InitialProfile,
    spec: &FigureSpec,
) -> Result<FigureTraces> {
    let plan = plan_for(profile, *config)?;
    let exec = Execution::default();
    let (nt, nx) = (spec.surface_nt.max(2), spec.surface_nx.max(2));
    let horizon = config.horizon;
    let surface_rows = exec.map_range(nt, |i| -> Result<Vec<[f64; 3]>> {
        let t = (i as f64 * horizon / (nt - 1) as f64).min(horizon);
        (0..nx)
            .map(|j| {
                let x = j as f64 / (nx - 1) as f64;
                Ok([t, x, plan.state_at(t, x)?])
            })
            .collect()
    });
    let mut surface = Vec::with_capacity(nt * nx);
    for r in surface_rows {
        surface.extend(r?);
    }

    let points = spec.control_points.max(3);
    let active = plan.active_grid(points);
    let u = exec
        .map(&active, |&t| plan.control_at(t))
        .into_iter()
        .collect::<Result<Vec<f64>>>()?;
    let sq: Vec<f64> = u.iter().map(|v| v * v).collect();
    let h = config.r_prime / (points - 1) as f64;
    let cumulative = cumulative_simpson_uniform(&sq, h);

    let mut control = Vec::new();
    let lead = 60;
    for i in 0..lead {
        control.push([i as f64 * config.tau / lead as f64, 0.0, 0.0]);
    }
    for ((&t, &v), &c) in active.iter().zip(&u).zip(&cumulative) {
        control.push([t, v, c.max(0.0).sqrt()]);
    }
    let end = config.control_end();
    if horizon > end {
        let total = cumulative.last().copied().unwrap_or(0.0).max(0.0).sqrt();
        let tail = 20;
        for i in 1..=tail {
            let t = end + (horizon - end) * i as f64 / tail as f64;
            control.push([t.min(horizon), 0.0, total]);
        }
    }
    Ok(FigureTraces { surface, control })
}

impl FigureTraces {
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<FigureFiles> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        let files = FigureFiles {
            surface: dir.join("surface.csv"),
            control: dir.join("control_trace.csv"),
        };
        write_rows(&files.surface, ["t", "x", "theta"], &self.surface)?;
        write_rows(&files.control, ["t", "u", "l2_cumulative"], &self.control)?;
        Ok(files)
    }
}

fn write_rows(path: &Path, header: [&str; 3], rows: &[[f64; 3]]) -> Result<()> {
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    w.write_record(header)?;
    for r in rows {
        w.write_record(r.map(num))?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_spec_validation() {
        let base = PlanConfig::default();
        let ok = SweepSpec::new(Truncation::KMax, vec![5, 10, 15, 20], base, InitialProfile::Step);
        assert!(ok.validate().is_ok());
        let short = SweepSpec::new(Truncation::KMax, vec![5, 10, 15], base, InitialProfile::Step);
        assert!(short.validate().is_err());
        let unsorted =
            SweepSpec::new(Truncation::KMax, vec![5, 10, 10, 20], base, InitialProfile::Step);
        assert!(unsorted.validate().is_err());
        assert_eq!(ok.reference_config().k_max, 40);
    }

    #[test]
    fn fit_recovers_synthetic_rate() {
        let points = (1..=6)
            .map(|v| SweepPoint {
                value: v,
                error: 3.0 * (-0.7 * (v * v) as f64).exp(),
                used: true,
            })
            .collect();
        let fit = fit_decay(Truncation::NMax, points).unwrap();
        assert!((fit.rate - 0.7).abs() < 1e-12);
        assert!((fit.intercept - 3f64.ln()).abs() < 1e-10);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fit_needs_three_usable_points() {
        let points = vec![
            SweepPoint { value: 1, error: 1e-3, used: true },
            SweepPoint { value: 2, error: 1e-6, used: true },
            SweepPoint { value: 3, error: 1e-15, used: false },
            SweepPoint { value: 4, error: 0.0, used: false },
        ];
        assert!(matches!(
            fit_decay(Truncation::KMax, points),
            Err(Error::FitDegenerate(_))
        ));
    }

    #[test]
    fn table_records_cell_failures() {
        let base = PlanConfig {
            k_max: 20,
            i_max: 20,
            ..PlanConfig::default()
        };
        // R' = 0.4 > tau fails validation; the other cell still runs
        let t = reproduce_tables(&[1.6], &[0.4, 0.2], &base);
        assert_eq!(t.r_values, vec![0.2, 0.4]);
        assert!(t.cells[0].l2.is_some());
        assert!(t.cells[1].error.as_deref().unwrap().contains("r_prime <= tau"));
        assert!(t.render_text().contains("failed"));
    }

    #[test]
    fn text_rendering_round_trips() {
        let t = NormTable {
            s_values: vec![1.6],
            r_values: vec![0.2],
            cells: vec![TableCell { s: 1.6, r_prime: 0.2, l2: Some(0.1 + 0.2), linf: Some(6.41), error: None }],
        };
        let text = t.render_text();
        assert!(text.contains("0.30000000000000004") && text.contains("6.41"));
    }
}
