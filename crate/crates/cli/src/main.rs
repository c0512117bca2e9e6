//! `stefanlab` command line front end.
//!
//! Every subcommand runs the tasks of its kind from the config and writes
//! `<kind>_<index>.json` (and CSV where applicable) into the output
//! directory. The directory is `--out`, else `$STEFANLAB_OUT`, else
//! `output.dir` from the config, else `out`.
//!
//! CSV columns:
//! * `equilibria_<i>.csv`: `u,R,phi` over the admissible set.
//! * `spectrum_<i>.csv`: `lambda,mode,D` with D the scaled mode determinant.
//! * `spectrum_<i>_discs.csv`: `lambda,min_eigenvalue,negative_count` of B_λ.
//! * `simulate_<i>.csv`: `t,s,u_interface,E,Phi,production,clearance`.
//! * `ripening_<i>.csv`: `t,R_1..R_m,u_interface,E,Phi,production,clearance`.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rayon::prelude::*;
use serde_json::{json, Value};

use stefanlab_core::check::run_check_suite;
use stefanlab_core::config::{parse_config, RunConfig, TaskSpec};
use stefanlab_core::report::{to_csv, to_json, write_atomic};
use stefanlab_core::simulate::{fit_exponential, run_ripening, samples_csv, RadialStefan, RunOutput};
use stefanlab_core::spectral::{b_lambda_scan, count_positive_eigenvalues};
use stefanlab_core::Error;

const PHI_SAMPLES: usize = 400;

#[derive(Parser, Debug)]
#[command(name = "stefanlab", version, about = "Two-phase Stefan problem with surface tension: equilibria, spectra, evolution")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML run configuration.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR", env = "STEFANLAB_OUT")]
    out: Option<PathBuf>,
    /// Worker threads for task sweeps and parallel scans.
    #[arg(long, global = true, value_name = "N")]
    jobs: Option<usize>,
    /// Overrides the seed of the config.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Spherical equilibria and their stability index.
    Equilibria,
    /// Eigenvalue counts of the linearization.
    Spectrum,
    /// Radially symmetric evolution.
    Simulate,
    /// Lumped multi-sphere ripening model.
    Ripening,
    /// Invariant checks; exit code 0 iff all pass.
    Check,
}

impl Command {
    fn kind(self) -> &'static str {
        match self {
            Command::Equilibria => "equilibria",
            Command::Spectrum => "spectrum",
            Command::Simulate => "simulate",
            Command::Ripening => "ripening",
            Command::Check => "check",
        }
    }
}

/// A failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure { code: e.exit_code() as u8, message: e.to_string() }
    }
}

fn config_failure(message: String) -> Failure {
    Failure { code: 2, message }
}

fn load(cli: &Cli) -> Result<RunConfig, Failure> {
    let path = cli.config.as_ref().ok_or_else(|| config_failure("--config PATH is required".into()))?;
    let text = std::fs::read_to_string(path).map_err(|e| config_failure(format!("cannot read {}: {e}", path.display())))?;
    let mut cfg = parse_config(&text).map_err(|e| Failure::from(Error::from(e)))?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn out_dir(cli: &Cli, cfg: &RunConfig) -> PathBuf {
    cli.out
        .clone()
        .or_else(|| cfg.output.as_ref().map(|o| PathBuf::from(&o.dir)))
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<(), Failure> {
    write_atomic(&dir.join(name), contents).map_err(Failure::from)
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("serializable report")
}

fn equilibria(cfg: &RunConfig, index: usize, task: &stefanlab_core::config::EquilibriaTask, dir: &Path) -> Result<(), Failure> {
    let problem = cfg.equilibrium_problem(task);
    let points = problem.find_equilibria().map_err(Error::from)?;
    let intervals = problem.admissible_intervals().map_err(Error::from)?;
    let mut rows = Vec::new();
    for &(a, b) in &intervals {
        let (la, lb) = (a.ln(), b.ln());
        for k in 0..PHI_SAMPLES {
            let u = (la + (lb - la) * k as f64 / (PHI_SAMPLES - 1) as f64).exp().clamp(a, b);
            if let (Ok(r), Ok(phi)) = (problem.radius_of_temperature(u), problem.phi(u)) {
                rows.push(vec![u, r, phi]);
            }
        }
    }
    let report = json!({
        "task": index,
        "spheres": task.spheres,
        "energy": task.energy,
        "admissible_intervals": intervals,
        "equilibria": to_value(&points),
    });
    write(dir, &format!("equilibria_{index}.json"), &to_json(&report))?;
    write(dir, &format!("equilibria_{index}.csv"), &to_csv(&["u", "R", "phi"], &rows))
}

fn spectrum(cfg: &RunConfig, index: usize, task: &stefanlab_core::config::SpectrumTask, dir: &Path) -> Result<(), Failure> {
    let sc = cfg.spectral_config(task).map_err(Error::from)?;
    let result = count_positive_eigenvalues(&sc).map_err(Error::from)?;
    let mut report = json!({
        "task": index,
        "config": to_value(&sc),
        "concentric": to_value(&result),
    });
    write(dir, &format!("spectrum_{index}.csv"), &result.samples_csv())?;
    if let Some(discs) = &task.discs {
        let mc = cfg.multi_disc_config(task, discs).map_err(Error::from)?;
        let scan = b_lambda_scan(&mc, discs.lambda_min, discs.per_decade).map_err(Error::from)?;
        report["discs"] = json!({
            "zeta": mc.zeta(),
            "discs": mc.centers.len(),
            "crossings": scan.crossings,
            "lambda_max": scan.lambda_max,
        });
        let rows: Vec<Vec<f64>> = scan.samples.iter().map(|&(l, e, n)| vec![l, e, n as f64]).collect();
        write(dir, &format!("spectrum_{index}_discs.csv"), &to_csv(&["lambda", "min_eigenvalue", "negative_count"], &rows))?;
    }
    write(dir, &format!("spectrum_{index}.json"), &to_json(&report))
}

/// Exponential fit of |s − s_final| over the samples after the first tenth
/// of the run, ignoring deviations at rounding level.
fn convergence_fit(out: &RunOutput) -> Value {
    let s_end = out.final_state.s;
    let t_end = out.final_state.t;
    let (t, y): (Vec<f64>, Vec<f64>) = out
        .samples
        .iter()
        .map(|s| (s.t, s.fronts[0] - s_end))
        .filter(|&(t, y)| t >= 0.1 * t_end && y.abs() > 1e-10 * s_end)
        .unzip();
    if t.len() < 3 {
        return Value::Null;
    }
    to_value(&fit_exponential(&t, &y))
}

fn simulate(cfg: &RunConfig, index: usize, task: &stefanlab_core::config::SimulateTask, dir: &Path) -> Result<(), Failure> {
    let sim = RadialStefan::new(cfg.radial_config_at(task, index)).map_err(Error::from)?;
    let out = sim.run().map_err(Error::from)?;
    let report = json!({
        "task": index,
        "s0": sim.config.s0,
        "summary": to_value(&out),
        "convergence_fit": convergence_fit(&out),
    });
    write(dir, &format!("simulate_{index}.csv"), &samples_csv(&out.samples))?;
    write(dir, &format!("simulate_{index}.json"), &to_json(&report))?;
    if let stefanlab_core::simulate::StopReason::Event(reason) = &out.stop {
        return Err(Failure { code: 4, message: format!("simulate task {index} stopped: {reason}") });
    }
    Ok(())
}

fn ripening(cfg: &RunConfig, index: usize, task: &stefanlab_core::config::RipeningTask, dir: &Path) -> Result<(), Failure> {
    let rc = cfg.ripening_config_at(task, index);
    let out = run_ripening(&rc).map_err(Error::from)?;
    let report = json!({
        "task": index,
        "radii": rc.radii,
        "summary": to_value(&out),
    });
    write(dir, &format!("ripening_{index}.csv"), &samples_csv(&out.samples))?;
    write(dir, &format!("ripening_{index}.json"), &to_json(&report))
}

fn check(cfg: &RunConfig, dir: &Path) -> Result<(), Failure> {
    let report = run_check_suite(cfg);
    write(dir, "check.json", &to_json(&report))?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    for c in &report.checks {
        println!("{} {} (measured {:e}, tolerance {:e})", if c.passed { "PASS" } else { "FAIL" }, c.name, c.measured, c.tolerance);
    }
    match (report.passed, report.invalid_model) {
        (true, _) => Ok(()),
        (false, true) => Err(config_failure("material failed validation".into())),
        (false, false) => Err(Failure { code: 3, message: "invariant checks failed".into() }),
    }
}

fn run_task(cfg: &RunConfig, index: usize, task: &TaskSpec, dir: &Path) -> Result<(), Failure> {
    match task {
        TaskSpec::Equilibria(t) => equilibria(cfg, index, t, dir),
        TaskSpec::Spectrum(t) => spectrum(cfg, index, t, dir),
        TaskSpec::Simulate(t) => simulate(cfg, index, t, dir),
        TaskSpec::Ripening(t) => ripening(cfg, index, t, dir),
        TaskSpec::Check => Ok(()),
    }
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let cfg = load(cli)?;
    let dir = out_dir(cli, &cfg);
    std::fs::create_dir_all(&dir).map_err(|e| Failure { code: 1, message: format!("cannot create {}: {e}", dir.display()) })?;
    if cli.command == Command::Check {
        return check(&cfg, &dir);
    }
    let kind = cli.command.kind();
    let selected: Vec<(usize, &TaskSpec)> = cfg.tasks.iter().enumerate().filter(|(_, t)| t.kind() == kind).collect();
    if selected.is_empty() {
        eprintln!("warning: no {kind} tasks in the config");
        return Ok(());
    }
    let results: Vec<Result<(), Failure>> = selected.par_iter().map(|&(i, t)| run_task(&cfg, i, t, &dir)).collect();
    let mut worst: Option<Failure> = None;
    for (r, (i, _)) in results.into_iter().zip(&selected) {
        match r {
            Ok(()) => println!("{kind} task {i}: done"),
            Err(f) => {
                eprintln!("{kind} task {i}: {}", f.message);
                if worst.as_ref().map_or(true, |w| f.code > w.code) {
                    worst = Some(f);
                }
            }
        }
    }
    worst.map_or(Ok(()), Err)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            eprintln!("error: --jobs must be at least 1");
            return ExitCode::from(2);
        }
        rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global().expect("thread pool configured once");
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
