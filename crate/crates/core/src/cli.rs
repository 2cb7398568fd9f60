//! Command-line front end.
//!
//! Tabular output is CSV (LF line endings, header always present) with every
//! number in lower-case scientific notation, ten digits after the point.
//! Exit codes: 0 success, 1 invalid configuration or arguments, 2 singular
//! model, 3 numeric failure.

use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::calibration::{feasibility, min_orientations_for, RotationAxis};
use crate::config::{AverageSpec, GridSpec, Model, RunConfig, SweepSpec};
use crate::error::Error;
use crate::fisher::crb_matrix;
use crate::model::{GyroParams, Param};
use crate::optimize::{
    self, averaged_lambda_opt, default_phase_grid, marginalize, objective_value, optimal_lambda,
    phase_table, AverageSettings, SweepSettings,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_SINGULAR: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

/// Quantum Cramér-Rao bounds for calibrating two misaligned Sagnac gyroscopes.
///
/// Angles and phases (phi_y, phi_z, theta, delta, lambda grids on angle axes)
/// are in radians. n_var is the dimensionless photon-number-difference
/// variance of each interferometer; lambda is the correlation coefficient
/// between the two interferometers of one orientation, in (-1, 1).
#[derive(Debug, Parser)]
#[command(name = "gyrocal", version)]
pub struct Cli {
    /// Write the table here instead of standard output.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Variance bounds for the four parameters.
    Crb(ConfigArgs),
    /// Optimal correlation coefficient for the selected objective.
    Optimize(ConfigArgs),
    /// Bounds along a one-dimensional grid.
    Sweep {
        #[command(flatten)]
        config: ConfigArgs,
        #[command(flatten)]
        sweep: SweepArgs,
    },
    /// Optimal correlation averaged over the phases, per (theta, delta).
    Average {
        #[command(flatten)]
        config: ConfigArgs,
        #[command(flatten)]
        average: AverageArgs,
    },
    /// Phase-sum variances with and without the optimal correlation for the
    /// eight reference phase pairs (theta = 0.02, delta = 0.013, n_var = 10, N = 1).
    Table1 {
        /// `aligned` (default) evaluates the small-misalignment limit,
        /// `full` keeps theta and delta.
        #[arg(long, default_value = "aligned")]
        model: String,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Parameter counting for the three-axis calibration.
    Feasibility {
        /// Number of orientations K; omit to print the minimum.
        #[arg(long)]
        orientations: Option<u32>,
        /// Also tie the triad to an external reference frame.
        #[arg(long)]
        frame: bool,
        /// Reposition about arbitrary axes (three unknown angles each).
        #[arg(long)]
        arbitrary_axis: bool,
    },
}

#[derive(Debug, Args, Default)]
pub struct ConfigArgs {
    /// JSON configuration file; flags override its keys.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, allow_hyphen_values = true)]
    pub phi_y: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub phi_z: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub theta: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub delta: Option<f64>,
    /// Photon-number-difference variance (Delta n)^2.
    #[arg(long, allow_hyphen_values = true)]
    pub n_var: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub n_measurements: Option<u32>,
    /// sum_phase_var, full_trace, var_phi_y, var_phi_z, var_theta, var_delta
    /// or weighted:a,b,c,d
    #[arg(long)]
    pub objective: Option<String>,
    #[arg(long)]
    pub tol: Option<f64>,
    /// full or aligned
    #[arg(long)]
    pub model: Option<String>,
}

#[derive(Debug, Args, Default)]
pub struct SweepArgs {
    /// phi_y, phi_z, theta, delta, var or lambda
    #[arg(long)]
    pub axis: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub start: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub stop: Option<f64>,
    #[arg(long)]
    pub count: Option<usize>,
    /// Explicit grid, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub values: Option<Vec<f64>>,
    /// Geometric spacing between start and stop.
    #[arg(long)]
    pub log: bool,
    /// Add the optimal lambda of every grid point.
    #[arg(long)]
    pub with_lambda_opt: bool,
}

#[derive(Debug, Args, Default)]
pub struct AverageArgs {
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub thetas: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub deltas: Option<Vec<f64>>,
    /// Phase grid points per axis.
    #[arg(long)]
    pub phase_count: Option<usize>,
    /// mean_of_optima or optimum_of_mean
    #[arg(long)]
    pub mode: Option<String>,
    /// theta or delta: average over the other nuisance parameter.
    #[arg(long)]
    pub marginal: Option<String>,
}

/// Error carrying its exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::SingularModel { .. } => EXIT_SINGULAR,
            Error::SingularMatrix { .. } => EXIT_NUMERIC,
            _ => EXIT_INVALID,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

impl CliError {
    fn invalid(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_INVALID,
            message: message.into(),
        }
    }
}

pub fn fmt_num(x: f64) -> String {
    format!("{x:.10e}")
}

impl ConfigArgs {
    fn load(&self) -> Result<RunConfig, CliError> {
        let file = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| {
                    CliError::invalid(format!("cannot read {}: {e}", path.display()))
                })?;
                RunConfig::from_json(&text)?
            }
            None => RunConfig::default(),
        };
        let flags = RunConfig {
            phi_y: self.phi_y,
            phi_z: self.phi_z,
            theta: self.theta,
            delta: self.delta,
            n_var: self.n_var,
            lambda: self.lambda,
            n_measurements: self.n_measurements,
            objective: self.objective.clone(),
            tol: self.tol,
            model: self.model.clone(),
            sweep: None,
            average: None,
        };
        Ok(file.merge(flags))
    }
}

pub fn cmd_crb(cfg: &RunConfig) -> Result<String, CliError> {
    let stats = cfg.probe_stats()?;
    let n = cfg.n_measurements()?;
    let bound = crb_matrix(cfg.params()?, stats, n)?;
    let mut out = String::from("param,variance_bound\n");
    for p in Param::ALL {
        writeln!(out, "{},{}", p.name(), fmt_num(bound.variance(p))).unwrap();
    }
    Ok(out)
}

pub fn cmd_optimize(cfg: &RunConfig) -> Result<String, CliError> {
    let p = cfg.params()?;
    let (var, n, obj, tol) = (
        cfg.n_var()?,
        cfg.n_measurements()?,
        cfg.objective()?,
        cfg.tol()?,
    );
    let r = optimal_lambda(p, var, obj, tol, n)?;
    let at0 = objective_value(p, var, 0.0, obj, n)?;
    let mut out = String::from("objective,lambda_opt,objective_value,objective_at_zero,evaluations,bracket_lo,bracket_hi\n");
    writeln!(
        out,
        "{obj},{},{},{},{},{},{}",
        fmt_num(r.lambda_opt),
        fmt_num(r.objective_value),
        fmt_num(at0),
        r.evaluations,
        fmt_num(r.bracket.0),
        fmt_num(r.bracket.1)
    )
    .unwrap();
    Ok(out)
}

pub fn cmd_sweep(cfg: &RunConfig) -> Result<String, CliError> {
    let (axis, grid, with_opt) = cfg.sweep_axis_and_grid()?;
    let model = cfg.model()?;
    let settings = SweepSettings {
        objective: cfg.objective()?,
        n: cfg.n_measurements()?,
        lambda_opt_tol: if with_opt { Some(cfg.tol()?) } else { None },
    };
    // The swept coordinate may be one of the phases, so only the others are required.
    let base = GyroParams::new(
        cfg.phi_y.unwrap_or(0.0),
        cfg.phi_z.unwrap_or(0.0),
        cfg.theta.unwrap_or(0.0),
        cfg.delta.unwrap_or(0.0),
    )?;
    let swept = match axis {
        optimize::SweepAxis::Param(p) => Some(p),
        _ => None,
    };
    for p in Param::ALL {
        let given = match p {
            Param::PhiY => cfg.phi_y,
            Param::PhiZ => cfg.phi_z,
            Param::Theta => cfg.theta,
            Param::Delta => cfg.delta,
        };
        if given.is_none() && swept != Some(p) {
            return Err(CliError::invalid(format!(
                "missing required key `{}`",
                p.name()
            )));
        }
    }
    let var = match axis {
        optimize::SweepAxis::Var => cfg.n_var.unwrap_or(1.0),
        _ => cfg.n_var()?,
    };
    let lambda = match axis {
        optimize::SweepAxis::Lambda => 0.0,
        _ => cfg.lambda()?,
    };

    let mut rows = optimize::sweep(base, var, lambda, axis, &grid, settings)?;
    if model == Model::Aligned {
        // Re-evaluate at theta = delta = 0; an explicit theta/delta axis has
        // nothing to vary in this limit.
        if matches!(
            axis,
            optimize::SweepAxis::Param(Param::Theta | Param::Delta)
        ) {
            return Err(CliError::invalid(
                "cannot sweep theta or delta with model `aligned`",
            ));
        }
        rows = optimize::sweep(base.aligned(), var, lambda, axis, &grid, settings)?;
    }

    let mut out = String::new();
    out.push_str(
        "phi_y,phi_z,theta,delta,var,lambda,var_phi_y,var_phi_z,var_theta,var_delta,objective",
    );
    if with_opt {
        out.push_str(",lambda_opt");
    }
    out.push_str(",singular\n");
    for r in &rows {
        let p = r.params;
        write!(
            out,
            "{},{},{},{},{},{}",
            fmt_num(p.phi_y),
            fmt_num(p.phi_z),
            fmt_num(p.theta),
            fmt_num(p.delta),
            fmt_num(r.var),
            fmt_num(r.lambda)
        )
        .unwrap();
        match r.bounds {
            Some(d) => {
                for v in d {
                    write!(out, ",{}", fmt_num(v)).unwrap();
                }
                write!(out, ",{}", fmt_num(r.objective.unwrap_or(f64::NAN))).unwrap();
            }
            None => out.push_str(",,,,,"),
        }
        if with_opt {
            out.push(',');
            if let Some(l) = r.lambda_opt {
                out.push_str(&fmt_num(l));
            }
        }
        writeln!(out, ",{}", u8::from(r.is_singular())).unwrap();
    }
    Ok(out)
}

pub fn cmd_average(cfg: &RunConfig) -> Result<String, CliError> {
    let (thetas, deltas) = cfg.average_grids()?;
    let settings = AverageSettings {
        phase_grid: default_phase_grid(cfg.phase_count()?),
        var: cfg.n_var()?,
        objective: cfg.objective()?,
        tol: cfg.tol()?,
        n: cfg.n_measurements()?,
        mode: cfg.averaging_mode()?,
    };
    let rows = averaged_lambda_opt(&thetas, &deltas, &settings)?;
    let mut out = String::new();
    match cfg.marginal()? {
        Some(by_theta) => {
            writeln!(
                out,
                "{},mean_lambda_opt",
                if by_theta { "theta" } else { "delta" }
            )
            .unwrap();
            for (k, v) in marginalize(&rows, by_theta) {
                writeln!(out, "{},{}", fmt_num(k), fmt_num(v)).unwrap();
            }
        }
        None => {
            out.push_str("theta,delta,mean_lambda_opt,points_used\n");
            for r in &rows {
                writeln!(
                    out,
                    "{},{},{},{}",
                    fmt_num(r.theta),
                    fmt_num(r.delta),
                    fmt_num(r.mean_lambda_opt),
                    r.points_used
                )
                .unwrap();
            }
        }
    }
    Ok(out)
}

pub fn cmd_table1(model: Model, tol: f64) -> Result<String, CliError> {
    let points: Vec<GyroParams> = optimize::REFERENCE_TABLE_PHASES
        .iter()
        .map(|&(y, z)| {
            GyroParams::new(y, z, optimize::REFERENCE_THETA, optimize::REFERENCE_DELTA)
                .map(|p| model.apply(p))
        })
        .collect::<Result<_, _>>()?;
    let rows = phase_table(&points, optimize::REFERENCE_VAR, 1, tol)?;
    let mut out = String::from("phi_y,phi_z,sum_lambda0,sum_lambda_opt,lambda_opt\n");
    for r in &rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            fmt_num(r.params.phi_y),
            fmt_num(r.params.phi_z),
            fmt_num(r.sum_lambda0),
            fmt_num(r.sum_lambda_opt),
            fmt_num(r.lambda_opt)
        )
        .unwrap();
    }
    Ok(out)
}

pub fn cmd_feasibility(
    orientations: Option<u32>,
    frame: bool,
    arbitrary: bool,
) -> Result<String, CliError> {
    let axis = if arbitrary {
        RotationAxis::Arbitrary
    } else {
        RotationAxis::Common
    };
    match orientations {
        Some(0) => Err(CliError::invalid("orientations must be at least 1")),
        Some(k) => Ok(format!("{}\n", feasibility(k, frame, axis))),
        None => Ok(match min_orientations_for(frame, axis) {
            Some(k) => format!("min_orientations={k}\n"),
            None => "min_orientations=none\n".to_string(),
        }),
    }
}

fn dispatch(command: Command) -> Result<String, CliError> {
    match command {
        Command::Crb(args) => cmd_crb(&args.load()?),
        Command::Optimize(args) => cmd_optimize(&args.load()?),
        Command::Sweep { config, sweep } => {
            let mut cfg = config.load()?;
            let flags = SweepSpec {
                axis: sweep.axis,
                start: sweep.start,
                stop: sweep.stop,
                count: sweep.count,
                values: sweep.values,
                log: sweep.log.then_some(true),
                with_lambda_opt: sweep.with_lambda_opt.then_some(true),
            };
            cfg = cfg.merge(RunConfig {
                sweep: Some(flags),
                ..Default::default()
            });
            cmd_sweep(&cfg)
        }
        Command::Average { config, average } => {
            let mut cfg = config.load()?;
            let list = |v: Option<Vec<f64>>| {
                v.map(|values| GridSpec {
                    values: Some(values),
                    ..Default::default()
                })
            };
            let flags = AverageSpec {
                theta: list(average.thetas),
                delta: list(average.deltas),
                phase_count: average.phase_count,
                mode: average.mode,
                marginal: average.marginal,
            };
            cfg = cfg.merge(RunConfig {
                average: Some(flags),
                ..Default::default()
            });
            cmd_average(&cfg)
        }
        Command::Table1 { model, tol } => {
            let cfg = RunConfig {
                model: Some(model),
                tol,
                ..Default::default()
            };
            cmd_table1(cfg.model()?, cfg.tol()?)
        }
        Command::Feasibility {
            orientations,
            frame,
            arbitrary_axis,
        } => cmd_feasibility(orientations, frame, arbitrary_axis),
    }
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code. Tables go to `stdout` or `--output`, diagnostics to
/// `stderr`.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                EXIT_INVALID
            } else {
                EXIT_OK
            };
            let rendered = e.render().to_string();
            if code == EXIT_OK {
                let _ = stdout.write_all(rendered.as_bytes());
            } else {
                let _ = stderr.write_all(rendered.as_bytes());
            }
            return code;
        }
    };

    let output = cli.output.clone();
    match dispatch(cli.command) {
        Ok(text) => {
            let written = match output {
                Some(path) => std::fs::write(&path, text.as_bytes())
                    .map_err(|e| format!("cannot write {}: {e}", path.display())),
                None => stdout.write_all(text.as_bytes()).map_err(|e| e.to_string()),
            };
            match written {
                Ok(()) => EXIT_OK,
                Err(msg) => {
                    let _ = writeln!(stderr, "error: {msg}");
                    EXIT_INVALID
                }
            }
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {}", e.message);
            e.code
        }
    }
}
