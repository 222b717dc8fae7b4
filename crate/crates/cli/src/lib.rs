//! Argument parsing and dispatch for the `semiconj` binary.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use semiconj_core::{
    figdata, flow, make_builtin, run_suite, ConjugacyMap, FlowStatus, IntegratorConfig, Params,
    SamplerConfig, State, Suite, SuiteOptions, SystemSpec,
};
use serde::{Deserialize, Serialize};
use serde_json::json;

pub const SEED_ENV: &str = "SEMICONJ_SEED";
const DEFAULT_GRID_POINTS: usize = 101;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum UsageError {
    /// Help or version text requested; not a failure.
    #[error("{0}")]
    Display(String),
    #[error("{0}")]
    Invalid(String),
}

fn invalid(msg: impl Into<String>) -> UsageError {
    UsageError::Invalid(msg.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    Simulate {
        x0: State,
        /// Times to report, all of the same sign.
        times: Vec<f64>,
    },
    Conjugate {
        epsilon: f64,
        r: f64,
        c: Option<f64>,
        point: State,
    },
    Verify {
        suite: Suite,
        tolerance: Option<f64>,
    },
    Figdata {
        figure: u32,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub system: Option<SystemSpec>,
    pub integrator: IntegratorConfig,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub format: OutputFormat,
}

#[derive(Parser, Debug)]
#[command(name = "semiconj", version, about = "Simulate semiflows and verify their global linearization")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand, Debug)]
enum Sub {
    /// Integrate a built-in system and write (t, x1..xn, V) rows as CSV.
    Simulate {
        #[command(flatten)]
        system: SystemArgs,
        #[arg(long, value_name = "CSV")]
        x0: String,
        #[arg(long, value_name = "T")]
        t: Option<f64>,
        #[arg(long)]
        backward: bool,
        /// Output times (nonnegative, increasing) instead of an even grid on [0, t].
        #[arg(long, value_name = "CSV")]
        grid: Option<String>,
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
    /// Evaluate the linearizing map at a point and print diagnostics as JSON.
    Conjugate {
        #[command(flatten)]
        system: SystemArgs,
        #[arg(long)]
        epsilon: f64,
        #[arg(long)]
        r: f64,
        /// Outer level for bounded domains.
        #[arg(long = "C", value_name = "C")]
        c: Option<f64>,
        #[arg(long, value_name = "CSV")]
        point: String,
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
    /// Run a residual suite and write its JSON report.
    Verify {
        #[arg(long, value_parser = parse_suite)]
        suite: Suite,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
    /// Write the data behind a figure as CSV.
    Figdata {
        #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(["1", "3", "4", "5"]))]
        figure: String,
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct SystemArgs {
    /// Built-in system name.
    #[arg(long)]
    system: Option<String>,
    /// JSON file with keys name, dimension, params and optionally integrator.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    #[arg(long)]
    dimension: Option<usize>,
    /// System parameter, repeatable.
    #[arg(long = "param", value_name = "KEY=VALUE")]
    params: Vec<String>,
    #[arg(long)]
    rel_tol: Option<f64>,
    #[arg(long)]
    abs_tol: Option<f64>,
    #[arg(long)]
    snap_radius: Option<f64>,
    #[arg(long)]
    t_max: Option<f64>,
    #[arg(long)]
    event_tol: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    name: Option<String>,
    dimension: Option<usize>,
    #[serde(default)]
    params: Params,
    #[serde(default)]
    integrator: IntegratorOverrides,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct IntegratorOverrides {
    rel_tol: Option<f64>,
    abs_tol: Option<f64>,
    snap_radius: Option<f64>,
    t_max: Option<f64>,
    event_tol: Option<f64>,
}

impl IntegratorOverrides {
    fn apply(&self, cfg: &mut IntegratorConfig) {
        let fields = [
            (&mut cfg.rel_tol, self.rel_tol),
            (&mut cfg.abs_tol, self.abs_tol),
            (&mut cfg.snap_radius, self.snap_radius),
            (&mut cfg.t_max, self.t_max),
            (&mut cfg.event_tol, self.event_tol),
        ];
        for (slot, value) in fields {
            if let Some(v) = value {
                *slot = v;
            }
        }
    }
}

fn parse_suite(s: &str) -> Result<Suite, String> {
    s.parse().map_err(|_| {
        let names: Vec<&str> = Suite::ALL.iter().map(|s| s.as_str()).collect();
        format!("unknown suite '{s}'; valid suites: {}", names.join(", "))
    })
}

fn parse_csv_vector(flag: &str, s: &str) -> Result<Vec<f64>, UsageError> {
    let values: Result<Vec<f64>, _> = s.split(',').map(|p| p.trim().parse::<f64>()).collect();
    match values {
        Ok(v) if !v.is_empty() && v.iter().all(|x| x.is_finite()) => Ok(v),
        _ => Err(invalid(format!("--{flag}: malformed vector '{s}'"))),
    }
}

fn parse_param(s: &str) -> Result<(String, f64), UsageError> {
    let (key, value) = s
        .split_once('=')
        .ok_or_else(|| invalid(format!("--param: expected KEY=VALUE, got '{s}'")))?;
    let value = value
        .trim()
        .parse::<f64>()
        .map_err(|_| invalid(format!("--param: '{value}' is not a number")))?;
    Ok((key.trim().to_string(), value))
}

fn read_seed() -> Result<u64, UsageError> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| invalid(format!("{SEED_ENV}: '{v}' is not an unsigned integer"))),
        Err(_) => Ok(0),
    }
}

/// Resolves the system, with flags taking precedence over the config file.
fn resolve_system(
    args: &SystemArgs,
    point_dim: usize,
) -> Result<(SystemSpec, IntegratorConfig), UsageError> {
    let file = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| invalid(format!("--config: cannot read {}: {e}", path.display())))?;
            serde_json::from_str::<ConfigFile>(&text)
                .map_err(|e| invalid(format!("--config: {}: {e}", path.display())))?
        }
        None => ConfigFile::default(),
    };
    let name = args
        .system
        .clone()
        .or(file.name.clone())
        .ok_or_else(|| invalid("missing --system (or a config file with a name)"))?;
    let dimension = args.dimension.or(file.dimension).unwrap_or(point_dim);
    if dimension != point_dim {
        return Err(invalid(format!(
            "--dimension {dimension} does not match the {point_dim}-component point"
        )));
    }
    let mut params = file.params.clone();
    for p in &args.params {
        let (k, v) = parse_param(p)?;
        params.insert(k, v);
    }
    let system = make_builtin(&name, dimension, &params).map_err(|e| invalid(e.to_string()))?;
    let mut integrator = IntegratorConfig::for_system(&system);
    file.integrator.apply(&mut integrator);
    IntegratorOverrides {
        rel_tol: args.rel_tol,
        abs_tol: args.abs_tol,
        snap_radius: args.snap_radius,
        t_max: args.t_max,
        event_tol: args.event_tol,
    }
    .apply(&mut integrator);
    integrator.validate().map_err(|e| invalid(e.to_string()))?;
    Ok((system, integrator))
}

fn simulate_times(
    t: Option<f64>,
    grid: Option<&str>,
    backward: bool,
) -> Result<Vec<f64>, UsageError> {
    let mut times = match (grid, t) {
        (Some(g), _) => {
            let g = parse_csv_vector("grid", g)?;
            if g.iter().any(|v| *v < 0.0) || g.windows(2).any(|w| w[1] <= w[0]) {
                return Err(invalid("--grid: times must be nonnegative and increasing"));
            }
            if let Some(t) = t {
                if g.last() != Some(&t) {
                    return Err(invalid("--grid: last time must equal --t"));
                }
            }
            g
        }
        (None, Some(t)) => {
            if !(t >= 0.0 && t.is_finite()) {
                return Err(invalid("--t: must be nonnegative and finite"));
            }
            (0..DEFAULT_GRID_POINTS)
                .map(|k| t * k as f64 / (DEFAULT_GRID_POINTS - 1) as f64)
                .collect()
        }
        (None, None) => return Err(invalid("simulate needs --t or --grid")),
    };
    if backward {
        times.iter_mut().for_each(|t| *t = -*t);
    }
    Ok(times)
}

fn positive(flag: &str, v: f64) -> Result<f64, UsageError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(invalid(format!("--{flag}: must be positive and finite")))
    }
}

pub fn parse_args<I, S>(argv: I) -> Result<RunConfig, UsageError>
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let argv = std::iter::once(std::ffi::OsString::from("semiconj"))
        .chain(argv.into_iter().map(Into::into));
    let cli = Cli::try_parse_from(argv).map_err(|e| match e.kind() {
        clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
            UsageError::Display(e.to_string())
        }
        _ => invalid(e.to_string().trim_end().to_string()),
    })?;
    let seed = read_seed()?;
    let config = match cli.command {
        Sub::Simulate {
            system,
            x0,
            t,
            backward,
            grid,
            out,
        } => {
            let x0 = parse_csv_vector("x0", &x0)?;
            let (spec, integrator) = resolve_system(&system, x0.len())?;
            RunConfig {
                command: Command::Simulate {
                    x0: State::from_vec(x0),
                    times: simulate_times(t, grid.as_deref(), backward)?,
                },
                system: Some(spec),
                integrator,
                seed,
                out,
                format: OutputFormat::Csv,
            }
        }
        Sub::Conjugate {
            system,
            epsilon,
            r,
            c,
            point,
            out,
        } => {
            let point = parse_csv_vector("point", &point)?;
            let (spec, integrator) = resolve_system(&system, point.len())?;
            RunConfig {
                command: Command::Conjugate {
                    epsilon: positive("epsilon", epsilon)?,
                    r: positive("r", r)?,
                    c: c.map(|c| positive("C", c)).transpose()?,
                    point: State::from_vec(point),
                },
                system: Some(spec),
                integrator,
                seed,
                out,
                format: OutputFormat::Json,
            }
        }
        Sub::Verify { suite, tol, out } => RunConfig {
            command: Command::Verify {
                suite,
                tolerance: tol.map(|t| positive("tol", t)).transpose()?,
            },
            system: None,
            integrator: IntegratorConfig::default(),
            seed,
            out,
            format: OutputFormat::Json,
        },
        Sub::Figdata { figure, out } => RunConfig {
            command: Command::Figdata {
                figure: figure.parse().expect("restricted by the parser"),
            },
            system: None,
            integrator: IntegratorConfig::default(),
            seed,
            out,
            format: OutputFormat::Csv,
        },
    };
    Ok(config)
}

/// Failure with the exit code it maps to.
#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

fn validation(e: impl std::fmt::Display) -> Failure {
    Failure {
        code: 2,
        message: e.to_string(),
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => fs::write(path, text)
            .map_err(|e| validation(format!("cannot write {}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| validation(format!("cannot write to stdout: {e}")))
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

fn vec_json(x: &State) -> Vec<f64> {
    x.iter().copied().collect()
}

fn run_simulate(
    sys: &SystemSpec,
    cfg: &IntegratorConfig,
    x0: &State,
    times: &[f64],
    out: Option<&Path>,
) -> Result<(), Failure> {
    let mut text = String::from("t");
    for i in 1..=sys.dimension() {
        text.push_str(&format!(",x{i}"));
    }
    text.push_str(",V\n");
    for &t in times {
        let res = flow(sys, x0, t, cfg).map_err(validation)?;
        match res.status {
            FlowStatus::LeftDomain { exit_time } => {
                return Err(validation(format!(
                    "orbit leaves the domain at t = {exit_time} before t = {t}"
                )))
            }
            FlowStatus::Capped => {
                return Err(validation(format!(
                    "t = {t} exceeds the horizon cap t_max = {}",
                    cfg.t_max
                )))
            }
            _ => {}
        }
        let v = sys.eval_lyapunov(&res.state).map_err(validation)?;
        let cells: Vec<String> = std::iter::once(t)
            .chain(res.state.iter().copied())
            .chain(std::iter::once(v))
            .map(|c| format!("{c:.16e}"))
            .collect();
        text.push_str(&cells.join(","));
        text.push('\n');
    }
    emit(out, &text)
}

#[allow(clippy::too_many_arguments)]
fn run_conjugate(
    sys: &SystemSpec,
    cfg: &IntegratorConfig,
    seed: u64,
    epsilon: f64,
    r: f64,
    c: Option<f64>,
    point: &State,
    out: Option<&Path>,
) -> Result<(), Failure> {
    let sampler = SamplerConfig {
        seed,
        ..SamplerConfig::default()
    };
    let map = ConjugacyMap::build(sys.clone(), epsilon, r, *cfg, sampler).map_err(validation)?;
    let h = map.h_map(point).map_err(validation)?;
    let back = map.h_inverse(&h).map_err(validation)?;
    let at_equilibrium = point == sys.equilibrium();
    let (tau_prime, rho_prime) = if at_equilibrium {
        (None, None)
    } else {
        let ctx = map.context();
        (
            Some(ctx.tau_prime(point).map_err(validation)?),
            Some(vec_json(&ctx.rho_prime(point).map_err(validation)?)),
        )
    };
    let h_norm = h.norm();
    let gamma = if h_norm >= r {
        let s = h_norm - r;
        json!({ "s": s, "gamma_r": map.gamma_r(s).map_err(validation)? })
    } else {
        serde_json::Value::Null
    };
    let case2 = match c {
        Some(c) => {
            let tau_c = if at_equilibrium {
                None
            } else {
                Some(map.tau_case2(c, point).map_err(validation)?)
            };
            json!({
                "C": c,
                "tau_C": tau_c,
                "outer_radius_R": map.outer_radius(c).map_err(validation)?,
            })
        }
        None => serde_json::Value::Null,
    };
    let doc = json!({
        "system": sys.name(),
        "dimension": sys.dimension(),
        "epsilon": epsilon,
        "r": r,
        "point": vec_json(point),
        "h": vec_json(&h),
        "h_inverse_of_h": vec_json(&back),
        "roundtrip_error": (&back - point).norm(),
        "tau_prime": tau_prime,
        "rho_prime": rho_prime,
        "gamma": gamma,
        "case2": case2,
        "integrator": cfg,
        "sampler": sampler,
    });
    emit(out, &to_json(&doc))
}

fn run_verify(
    suite: Suite,
    tolerance: Option<f64>,
    seed: u64,
    out: Option<&Path>,
) -> Result<(), Failure> {
    let opts = SuiteOptions { tolerance, seed };
    let report = run_suite(suite, &opts).map_err(validation)?;
    let doc = json!({
        "report": report,
        "options": opts,
        "default_tolerance": suite.default_tolerance(),
        "integrator": {
            "closed_form": IntegratorConfig::closed_form(),
            "numeric": IntegratorConfig::numeric(),
        },
        "sampler": SamplerConfig::default(),
    });
    emit(out, &to_json(&doc))?;
    let verdict = if report.passed() { "pass" } else { "fail" };
    eprintln!(
        "{suite}: {verdict} ({} cases, max residual {:e}, tolerance {:e})",
        report.cases_run, report.max_residual, report.tolerance
    );
    if report.passed() {
        Ok(())
    } else {
        Err(Failure {
            code: 1,
            message: format!("suite {suite} failed: worst case {}", report.worst_case),
        })
    }
}

fn dispatch(config: &RunConfig) -> Result<(), Failure> {
    let out = config.out.as_deref();
    let system = || {
        config
            .system
            .as_ref()
            .ok_or_else(|| validation("command needs a system"))
    };
    match &config.command {
        Command::Simulate { x0, times } => {
            run_simulate(system()?, &config.integrator, x0, times, out)
        }
        Command::Conjugate {
            epsilon,
            r,
            c,
            point,
        } => run_conjugate(
            system()?,
            &config.integrator,
            config.seed,
            *epsilon,
            *r,
            *c,
            point,
            out,
        ),
        Command::Verify { suite, tolerance } => run_verify(*suite, *tolerance, config.seed, out),
        Command::Figdata { figure } => {
            let table = figdata(*figure).map_err(validation)?;
            emit(out, &table.to_csv())
        }
    }
}

/// Runs a parsed configuration: 0 on success, 1 on a failed suite, 2 on
/// validation errors. Diagnostics go to stderr as single lines.
pub fn run(config: &RunConfig) -> i32 {
    match dispatch(config) {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("semiconj: {}", f.message.replace('\n', " "));
            f.code
        }
    }
}
