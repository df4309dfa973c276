use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use mcbl::config::{resolve_f64, resolve_usize, ConfigFile};
use mcbl::verify;
use mcbl_core::classifier::{classification_record, classify};
use mcbl_core::error::Error;
use mcbl_core::shooting::{find_c_star, find_c_upper, sweep, CriticalValue};
use mcbl_core::{integrate, IntegratorControls, ProblemParams, TargetLimit};

const EXIT_FLAGS: u8 = 2;
const EXIT_INTEGRATOR: u8 = 3;
const EXIT_CRITICAL: u8 = 4;
const EXIT_VERIFY: u8 = 5;

/// Shooting solver for the mixed convection boundary-layer similarity
/// equation f''' + f f'' + beta f'(f' - 1) = 0.
#[derive(Parser)]
#[command(name = "mcbl", version, about)]
struct Cli {
    /// Optional `key = value` config file; flags override its entries.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one shot and write its trajectory CSV.
    Integrate(IntegrateArgs),
    /// Integrate one shot and print its classification record as JSON.
    Classify(ShotArgs),
    /// Locate a critical shooting constant by bisection.
    Critical(CriticalArgs),
    /// Integrate and classify a grid of shooting values.
    Sweep(SweepArgs),
    /// Run a theorem-verification suite.
    Verify(VerifyArgs),
}

#[derive(Args, Clone)]
struct ShotArgs {
    /// Mixed-convection parameter (beta > 0). Default 1.
    #[arg(long)]
    beta: Option<f64>,
    /// Wall value f(0) = a >= 0. Default 0.
    #[arg(long)]
    a: Option<f64>,
    /// Wall slope f'(0) = b >= 0. Default 2.
    #[arg(long)]
    b: Option<f64>,
    /// Shooting value f''(0) = c. Default 0.
    #[arg(long, allow_negative_numbers = true)]
    c: Option<f64>,
    /// Integration horizon. Default 50.
    #[arg(long = "t-max")]
    t_max: Option<f64>,
    /// Relative tolerance. Default 1e-10.
    #[arg(long)]
    rtol: Option<f64>,
    /// Absolute tolerance. Default 1e-12.
    #[arg(long)]
    atol: Option<f64>,
}

#[derive(Args)]
struct IntegrateArgs {
    #[command(flatten)]
    shot: ShotArgs,
    /// Trajectory CSV path. Default trajectory.csv.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Append monitor columns H,L,K to the CSV.
    #[arg(long)]
    monitors: bool,
}

#[derive(Args)]
struct CriticalArgs {
    #[command(flatten)]
    shot: ShotArgs,
    /// Which critical constant to locate.
    #[arg(long, value_enum)]
    which: Which,
    /// Bisection tolerance on c. Default 1e-10.
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Which {
    Cstar,
    Cupper,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    shot: ShotArgs,
    /// Lower end of the c grid. Default -2.
    #[arg(long = "c-min", allow_negative_numbers = true)]
    c_min: Option<f64>,
    /// Upper end of the c grid. Default 2.
    #[arg(long = "c-max", allow_negative_numbers = true)]
    c_max: Option<f64>,
    /// Number of grid points. Default 9.
    #[arg(long)]
    n: Option<usize>,
    /// Output format.
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads. Default: number of processors.
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    shot: ShotArgs,
    /// Suite name: theorem4, theorem5 or beta-gt-1.
    #[arg(long)]
    suite: String,
    /// Bisection tolerance on c. Default 1e-10.
    #[arg(long)]
    tol: Option<f64>,
    /// Worker threads. Default: number of processors.
    #[arg(long)]
    jobs: Option<usize>,
}

struct Resolved {
    params: ProblemParams,
    c: f64,
    controls: IntegratorControls,
}

fn resolve_shot(args: &ShotArgs, cfg: &ConfigFile, lambda: TargetLimit) -> Result<Resolved, String> {
    let beta = resolve_f64(args.beta, cfg, "beta", 1.0)?;
    let a = resolve_f64(args.a, cfg, "a", 0.0)?;
    let b = resolve_f64(args.b, cfg, "b", 2.0)?;
    let c = resolve_f64(args.c, cfg, "c", 0.0)?;
    let params = ProblemParams::new(beta, a, b, lambda).map_err(|e| e.to_string())?;
    let controls = IntegratorControls {
        t_max: resolve_f64(args.t_max, cfg, "t_max", 50.0)?,
        rtol: resolve_f64(args.rtol, cfg, "rtol", 1e-10)?,
        atol: resolve_f64(args.atol, cfg, "atol", 1e-12)?,
        ..Default::default()
    };
    Ok(Resolved { params, c, controls })
}

fn load_config(path: &Option<PathBuf>) -> Result<ConfigFile, String> {
    match path {
        Some(p) => ConfigFile::load(p),
        None => Ok(ConfigFile::default()),
    }
}

fn flag_error(msg: &str) -> ExitCode {
    eprintln!("mcbl: {msg}");
    ExitCode::from(EXIT_FLAGS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match load_config(&cli.config) {
        Ok(cfg) => cfg,
        Err(e) => return flag_error(&e),
    };

    match cli.command {
        Command::Integrate(args) => cmd_integrate(args, &cfg),
        Command::Classify(args) => cmd_classify(args, &cfg),
        Command::Critical(args) => cmd_critical(args, &cfg),
        Command::Sweep(args) => cmd_sweep(args, &cfg),
        Command::Verify(args) => cmd_verify(args, &cfg),
    }
}

fn cmd_integrate(args: IntegrateArgs, cfg: &ConfigFile) -> ExitCode {
    let shot = match resolve_shot(&args.shot, cfg, TargetLimit::One) {
        Ok(s) => s,
        Err(e) => return flag_error(&e),
    };
    let traj = match integrate(&shot.params, shot.c, &shot.controls) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("mcbl: {e}");
            return ExitCode::from(EXIT_INTEGRATOR);
        }
    };
    let out = args
        .out
        .or_else(|| cfg.get_str("out").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("trajectory.csv"));
    let monitors = args.monitors || cfg.get_str("monitors") == Some("true");
    let file = std::fs::File::create(&out);
    let written = file.and_then(|f| {
        let mut w = std::io::BufWriter::new(f);
        traj.write_csv(&mut w, monitors)?;
        w.flush()
    });
    if let Err(e) = written {
        eprintln!("mcbl: cannot write {}: {e}", out.display());
        return ExitCode::from(EXIT_INTEGRATOR);
    }
    let fin = traj.final_state();
    let summary = json!({
        "termination": traj.termination,
        "events_count": traj.events.len(),
        "final_state": { "t": fin.t, "f": fin.f, "fp": fin.fp, "fpp": fin.fpp },
    });
    println!("{summary}");
    ExitCode::SUCCESS
}

fn cmd_classify(args: ShotArgs, cfg: &ConfigFile) -> ExitCode {
    let shot = match resolve_shot(&args, cfg, TargetLimit::One) {
        Ok(s) => s,
        Err(e) => return flag_error(&e),
    };
    let record = integrate(&shot.params, shot.c, &shot.controls)
        .and_then(|traj| classify(&traj).map(|label| classification_record(&traj, &label)));
    match record {
        Ok(rec) => {
            println!("{}", serde_json::to_string(&rec).expect("record serializes"));
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("mcbl: {e}");
            ExitCode::from(EXIT_INTEGRATOR)
        }
    }
}

fn cmd_critical(args: CriticalArgs, cfg: &ConfigFile) -> ExitCode {
    let lambda = match args.which {
        Which::Cstar => TargetLimit::Zero,
        Which::Cupper => TargetLimit::One,
    };
    let shot = match resolve_shot(&args.shot, cfg, lambda) {
        Ok(s) => s,
        Err(e) => return flag_error(&e),
    };
    let tol = match resolve_f64(args.tol, cfg, "tol", 1e-10) {
        Ok(t) => t,
        Err(e) => return flag_error(&e),
    };
    let found: Result<CriticalValue, Error> = match args.which {
        Which::Cstar => find_c_star(&shot.params, &shot.controls, tol),
        Which::Cupper => find_c_upper(&shot.params, &shot.controls, tol),
    };
    match found {
        Ok(cv) => {
            println!("{}", serde_json::to_string(&cv.record()).expect("record serializes"));
            ExitCode::SUCCESS
        }
        Err(e @ (Error::BracketFailure { .. } | Error::Precondition(_))) => {
            eprintln!("mcbl: {e}");
            ExitCode::from(EXIT_CRITICAL)
        }
        Err(e) => {
            eprintln!("mcbl: {e}");
            ExitCode::from(EXIT_INTEGRATOR)
        }
    }
}

fn cmd_sweep(args: SweepArgs, cfg: &ConfigFile) -> ExitCode {
    let shot = match resolve_shot(&args.shot, cfg, TargetLimit::One) {
        Ok(s) => s,
        Err(e) => return flag_error(&e),
    };
    if args.shot.c.is_some() {
        return flag_error("sweep takes --c-min/--c-max/--n, not --c");
    }
    let (c_min, c_max, n, jobs) = match (|| -> Result<_, String> {
        Ok((
            resolve_f64(args.c_min, cfg, "c_min", -2.0)?,
            resolve_f64(args.c_max, cfg, "c_max", 2.0)?,
            resolve_usize(args.n, cfg, "n", 9)?,
            resolve_usize(args.jobs, cfg, "jobs", num_threads_default())?,
        ))
    })() {
        Ok(v) => v,
        Err(e) => return flag_error(&e),
    };
    if c_min.is_nan() || c_max.is_nan() || c_min > c_max || n == 0 {
        return flag_error("need c-min <= c-max and n >= 1");
    }
    let format = args
        .format
        .or_else(|| match cfg.get_str("format") {
            Some("csv") => Some(Format::Csv),
            Some("json") => Some(Format::Json),
            _ => None,
        })
        .unwrap_or(Format::Json);

    let grid: Vec<f64> = if n == 1 {
        vec![c_min]
    } else {
        (0..n).map(|k| c_min + (c_max - c_min) * k as f64 / (n - 1) as f64).collect()
    };

    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs).build();
    let results = match pool {
        Ok(pool) => pool.install(|| sweep(&shot.params, &grid, &shot.controls)),
        Err(e) => return flag_error(&format!("cannot build worker pool: {e}")),
    };

    let mut text = String::new();
    match format {
        Format::Json => {
            let entries: Vec<serde_json::Value> = results
                .iter()
                .map(|(c, label)| match label {
                    Ok(l) => json!({ "c": c, "family": l.family, "shape": l.shape, "limit": l.limit }),
                    Err(e) => json!({ "c": c, "error": e.to_string() }),
                })
                .collect();
            text = serde_json::to_string(&entries).expect("entries serialize");
            text.push('\n');
        }
        Format::Csv => {
            text.push_str("c,family,shape,limit\n");
            for (c, label) in &results {
                match label {
                    Ok(l) => text.push_str(&format!(
                        "{:.16e},{},{},{}\n",
                        c,
                        serde_plain(&l.family),
                        serde_plain(&l.shape),
                        serde_plain(&l.limit)
                    )),
                    Err(e) => text.push_str(&format!("{c:.16e},ERROR,{e},\n")),
                }
            }
        }
    }
    match args.out.or_else(|| cfg.get_str("out").map(PathBuf::from)) {
        Some(path) => {
            if let Err(e) = std::fs::write(&path, text) {
                eprintln!("mcbl: cannot write {}: {e}", path.display());
                return ExitCode::from(EXIT_INTEGRATOR);
            }
        }
        None => print!("{text}"),
    }
    ExitCode::SUCCESS
}

/// Serialize an enum with serde renames to its bare string form.
fn serde_plain<T: serde::Serialize>(v: &T) -> String {
    match serde_json::to_value(v).expect("labels serialize") {
        serde_json::Value::String(s) => s,
        other => other.to_string(),
    }
}

fn num_threads_default() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

fn cmd_verify(args: VerifyArgs, cfg: &ConfigFile) -> ExitCode {
    let shot = match resolve_shot(&args.shot, cfg, TargetLimit::One) {
        Ok(s) => s,
        Err(e) => return flag_error(&e),
    };
    let (tol, jobs) = match (|| -> Result<_, String> {
        Ok((
            resolve_f64(args.tol, cfg, "tol", 1e-10)?,
            resolve_usize(args.jobs, cfg, "jobs", num_threads_default())?,
        ))
    })() {
        Ok(v) => v,
        Err(e) => return flag_error(&e),
    };

    let pool = match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
        Ok(p) => p,
        Err(e) => return flag_error(&format!("cannot build worker pool: {e}")),
    };
    let report =
        pool.install(|| verify::run_suite(&args.suite, &shot.params, &shot.controls, tol));
    match report {
        Ok(report) => {
            println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
            if report.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_VERIFY)
            }
        }
        Err(e) => flag_error(&e),
    }
}
