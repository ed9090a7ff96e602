use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use heatflat::bench::{
    figure_traces, reproduce_tables_with, sweep_with, FigureSpec, Reference, SweepSpec,
    Truncation, TABLE_R, TABLE_S,
};
use heatflat::planner::DEFAULT_NORM_POINTS;
use heatflat::simulator::SimulationSummary;
use heatflat::spectrum::SampledProfile;
use heatflat::{
    build_plan, compare, simulate, Error, Execution, InitialProfile, PlanConfig, Precision,
    Scheme, SolverConfig,
};
use serde_json::json;

#[derive(Parser)]
#[command(name = "heatflat", version, about = "Flatness-based null control of the 1-D heat equation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a control plan; writes the control CSV and prints a JSON summary.
    Plan {
        #[command(flatten)]
        plan: PlanArgs,
        /// Samples of the control over `[0, T]`.
        #[arg(long, default_value_t = DEFAULT_NORM_POINTS)]
        points: usize,
        #[arg(long, default_value = "control.csv")]
        out: PathBuf,
    },
    /// Run the plan through the finite-difference solver.
    Simulate {
        #[command(flatten)]
        plan: PlanArgs,
        #[arg(long, default_value_t = 200)]
        nx: usize,
        #[arg(long, default_value_t = 1e-4)]
        dt: f64,
        #[arg(long, value_enum, default_value_t = SchemeArg::CrankNicolson)]
        scheme: SchemeArg,
        /// Keep every `stride`-th time step in the trajectory.
        #[arg(long, default_value_t = 100)]
        stride: usize,
        #[arg(long, default_value = "trajectory.csv")]
        out: PathBuf,
    },
    /// Sweep one truncation order and fit its error decay.
    Sweep {
        #[command(flatten)]
        plan: PlanArgs,
        /// `i`, `k` or `n`.
        #[arg(long)]
        vary: Truncation,
        /// Comma-separated, strictly increasing.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<usize>,
        #[arg(long, value_enum, default_value_t = ReferenceArg::Richest)]
        reference: ReferenceArg,
        #[arg(long, default_value_t = 41)]
        nt: usize,
        #[arg(long, default_value_t = 21)]
        grid_nx: usize,
        #[arg(long, default_value = "sweep_points.csv")]
        out: PathBuf,
        #[arg(long)]
        sequential: bool,
    },
    /// Control-effort tables over `(s, R')` with `T = tau + R'`.
    Tables {
        #[command(flatten)]
        plan: PlanArgs,
        #[arg(long, value_delimiter = ',', default_values_t = TABLE_S)]
        s_list: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_values_t = TABLE_R)]
        r_list: Vec<f64>,
        #[arg(long, default_value = "tables.csv")]
        out: PathBuf,
        #[arg(long)]
        sequential: bool,
    },
    /// Temperature surface and control trace data.
    Figures {
        #[command(flatten)]
        plan: PlanArgs,
        #[arg(long, default_value_t = 101)]
        surface_nt: usize,
        #[arg(long, default_value_t = 51)]
        surface_nx: usize,
        #[arg(long, default_value_t = DEFAULT_NORM_POINTS)]
        control_points: usize,
        #[arg(long, default_value = "figures")]
        out_dir: PathBuf,
    },
}

#[derive(Args)]
struct PlanArgs {
    /// `step`, `zero`, `constant:<v>`, `mode:<n>[:<amplitude>]`, or a CSV path with `x,theta0` columns.
    #[arg(long, default_value = "step")]
    profile: String,
    #[arg(long, default_value_t = 1.6)]
    s: f64,
    #[arg(long, default_value_t = 0.3)]
    tau: f64,
    #[arg(long, default_value_t = 0.2)]
    rprime: f64,
    /// Defaults to `tau + rprime`.
    #[arg(long)]
    horizon: Option<f64>,
    #[arg(long, default_value_t = 40)]
    i_max: usize,
    #[arg(long, default_value_t = 60)]
    k_max: usize,
    #[arg(long, default_value_t = 30)]
    n_max: usize,
    /// `standard` or `extended`.
    #[arg(long, default_value = "standard")]
    precision: Precision,
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemeArg {
    CrankNicolson,
    SpectralSplice,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReferenceArg {
    Richest,
    Extended,
}

impl PlanArgs {
    fn config(&self) -> PlanConfig {
        PlanConfig {
            s: self.s,
            tau: self.tau,
            r_prime: self.rprime,
            horizon: self.horizon.unwrap_or(self.tau + self.rprime),
            i_max: self.i_max,
            k_max: self.k_max,
            n_max: self.n_max,
            precision: self.precision,
        }
    }

    fn profile(&self) -> Result<InitialProfile, Error> {
        parse_profile(&self.profile)
    }
}

fn parse_profile(spec: &str) -> Result<InitialProfile, Error> {
    let number = |v: &str| {
        v.parse::<f64>()
            .map_err(|_| Error::Input(format!("bad number `{v}` in profile `{spec}`")))
    };
    let parts: Vec<&str> = spec.split(':').collect();
    match parts.as_slice() {
        ["step"] => Ok(InitialProfile::Step),
        ["zero"] => Ok(InitialProfile::zero()),
        ["constant", v] => Ok(InitialProfile::Constant { value: number(v)? }),
        ["mode", n, rest @ ..] if rest.len() <= 1 => {
            let mode = n
                .parse()
                .map_err(|_| Error::Input(format!("bad mode index in profile `{spec}`")))?;
            let amplitude = rest.first().map(|a| number(a)).transpose()?.unwrap_or(1.0);
            Ok(InitialProfile::SingleMode { mode, amplitude })
        }
        _ if Path::new(spec).is_file() => Ok(InitialProfile::Sampled(SampledProfile::from_csv_path(spec)?)),
        _ => Err(Error::Input(format!("unknown profile `{spec}` (no preset or file of that name)"))),
    }
}

fn execution(sequential: bool) -> Execution {
    if sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, Error> {
    Ok(BufWriter::new(File::create(path)?))
}

fn print_json(value: &serde_json::Value) -> Result<(), Error> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn run(command: Command) -> Result<(), Error> {
    match command {
        Command::Plan { plan, points, out } => {
            let cfg = plan.config();
            let p = build_plan(&plan.profile()?, cfg)?;
            let norms = p.norms()?;
            p.write_control_csv(create(&out)?, points)?;
            print_json(&json!({
                "config": cfg,
                "l2": norms.l2,
                "linf": norms.linf,
                "growth_constant": p.flat().growth_constant(),
                "control_csv": out,
            }))
        }
        Command::Simulate { plan, nx, dt, scheme, stride, out } => {
            let cfg = plan.config();
            let profile = plan.profile()?;
            let p = build_plan(&profile, cfg)?;
            let solver = SolverConfig {
                nx,
                dt,
                scheme: match scheme {
                    SchemeArg::CrankNicolson => Scheme::CrankNicolson,
                    SchemeArg::SpectralSplice => Scheme::SpectralSplice,
                },
                stride,
            };
            let traj = simulate(&profile, &p, &solver)?;
            let comparison = compare(&traj, &p)?;
            traj.write_csv(create(&out)?, 1)?;
            let summary = SimulationSummary {
                plan: cfg,
                solver,
                final_time: traj.final_time(),
                comparison,
            };
            let mut value = serde_json::to_value(&summary)?;
            value["trajectory_csv"] = json!(out);
            print_json(&value)
        }
        Command::Sweep { plan, vary, values, reference, nt, grid_nx, out, sequential } => {
            let mut spec = SweepSpec::new(vary, values, plan.config(), plan.profile()?);
            spec.reference = match reference {
                ReferenceArg::Richest => Reference::RichestTruncation,
                ReferenceArg::Extended => Reference::ExtendedPrecision,
            };
            spec.nt = nt;
            spec.nx = grid_nx;
            let fit = sweep_with(&spec, execution(sequential))?;
            fit.write_points_csv(create(&out)?)?;
            let mut value = serde_json::to_value(&fit)?;
            value["points_csv"] = json!(out);
            print_json(&value)
        }
        Command::Tables { plan, s_list, r_list, out, sequential } => {
            let table = reproduce_tables_with(
                &s_list,
                &r_list,
                &plan.config(),
                &plan.profile()?,
                execution(sequential),
            );
            table.write_csv(create(&out)?)?;
            print!("{}", table.render_text());
            Ok(())
        }
        Command::Figures { plan, surface_nt, surface_nx, control_points, out_dir } => {
            let spec = FigureSpec {
                surface_nt,
                surface_nx,
                control_points,
            };
            let traces = figure_traces(&plan.config(), &plan.profile()?, &spec)?;
            let files = traces.write(&out_dir)?;
            print_json(&json!({
                "surface_csv": files.surface,
                "control_csv": files.control,
            }))
        }
    }
}

fn fail(kind: &str, message: &str, code: u8) -> ExitCode {
    let body = json!({ "error": { "kind": kind, "message": message } });
    eprintln!("{body}");
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail("usage", e.render().to_string().trim(), 2),
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(e.kind(), &e.to_string(), 1),
    }
}
