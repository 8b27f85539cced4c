//! Command-line front end for `gskor`: configuration parsing, path and
//! constraint I/O, and CSV/JSON output.

pub mod config;
pub mod error;

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use gskor_core::gexp::{family_sensitivity, scenario_family, sublinear_expectation, GBMPath};
use gskor_core::gsde::{ensemble_solve, solve_reflected, EnsembleSpec, Obstacles};
use gskor_core::io::{read_path_file, write_columns};
use gskor_core::verify::{PropertyReport, Suite};
use gskor_core::solve;
use serde::Serialize;
use serde_json::{json, Value};

pub use config::{parse_config, RunConfig};
pub use error::{CliError, Issue};

#[derive(Debug, Parser)]
#[command(name = "gskor", version, about = "Two-sided Skorokhod reflection and reflected G-SDEs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Reflect a sampled input path between two constraints.
    Skorokhod {
        /// `t,value` CSV on a uniform grid starting at 0.
        #[arg(long)]
        input: PathBuf,
        /// Constraint JSON, e.g. `{"kind": "band", "alpha": -1, "beta": 1}`.
        #[arg(long)]
        constraints: PathBuf,
        /// Output CSV (t,s,x,k,k_r,k_l); stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve the reflected SDE on every scenario and path of a configuration.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Directory for the per-path CSV files and `summary.json`.
        #[arg(long)]
        out: PathBuf,
    },
    /// Estimate the sublinear expectation of a built-in functional.
    Expect {
        #[arg(long, value_enum)]
        functional: Functional,
        #[arg(long)]
        config: PathBuf,
        /// Also report the estimate for constant families of these sizes.
        #[arg(long, value_delimiter = ',')]
        sensitivity: Vec<usize>,
        /// Output JSON; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run randomized property suites; exits with 1 if any assertion fails.
    Verify {
        /// `all` or a suite name.
        #[arg(long, default_value = "all")]
        suite: String,
        /// Trials per suite (paths per scenario for `g-moments`).
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output JSON; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Functional {
    /// `B_T`
    Bt,
    /// `B_T²`
    BtSquared,
    /// `(B_T)⁺`
    BtPositive,
    /// `sup_t |B_t|`
    SupAbsB,
    /// `⟨B⟩_T`
    QvTerminal,
    /// `X_T²` for the configured reflected SDE
    ReflectedTerminalSquared,
    /// `sup_t |X_t|` for the configured reflected SDE
    ReflectedSupAbs,
}

/// Outcome of a successful command.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    AssertionsFailed,
}

/// Caps rayon's pool at `GSKOR_THREADS` when set.
pub fn configure_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("GSKOR_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Input(format!("GSKOR_THREADS must be a positive integer, got `{v}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Input(format!("cannot size the thread pool: {e}")))
}

pub fn run(command: Command) -> Result<Status, CliError> {
    match command {
        Command::Skorokhod {
            input,
            constraints,
            out,
        } => skorokhod(&input, &constraints, out.as_deref()),
        Command::Simulate { config, out } => simulate(&config, &out),
        Command::Expect {
            functional,
            config,
            sensitivity,
            out,
        } => expect(functional, &config, &sensitivity, out.as_deref()),
        Command::Verify {
            suite,
            trials,
            seed,
            out,
        } => verify(&suite, trials, seed, out.as_deref()),
    }
}

fn base_dir(file: &Path) -> &Path {
    file.parent().unwrap_or(Path::new("."))
}

fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    parse_config(&read_text(path)?)
}

fn with_output(out: Option<&Path>, f: impl FnOnce(&mut dyn Write) -> Result<(), CliError>) -> Result<(), CliError> {
    match out {
        Some(p) => {
            let mut w = BufWriter::new(File::create(p)?);
            f(&mut w)?;
            w.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            f(&mut w)?;
            w.flush()?;
        }
    }
    Ok(())
}

fn write_json(out: Option<&Path>, value: &impl Serialize) -> Result<(), CliError> {
    with_output(out, |w| {
        serde_json::to_writer_pretty(&mut *w, value)?;
        writeln!(w)?;
        Ok(())
    })
}

fn skorokhod(input: &Path, constraints: &Path, out: Option<&Path>) -> Result<Status, CliError> {
    let s = read_path_file(input)?;
    let spec: config::ConstraintSpec = config::parse_json(&read_text(constraints)?)?;
    let pair = spec.build(s.grid(), base_dir(constraints))?;
    let sol = solve(&s, &pair)?;
    with_output(out, |w| {
        write_columns(
            w,
            s.grid(),
            &[
                ("s", s.values()),
                ("x", sol.x.values()),
                ("k", sol.k.values()),
                ("k_r", sol.k_r.values()),
                ("k_l", sol.k_l.values()),
            ],
        )?;
        Ok(())
    })?;
    Ok(Status::Ok)
}

fn simulate(config_path: &Path, out: &Path) -> Result<Status, CliError> {
    let cfg = load_config(config_path)?;
    let grid = cfg.grid()?;
    let bounds = cfg.bounds()?;
    let family = scenario_family(&bounds, cfg.family, &grid)?;
    let coeffs = cfg.coefficients.build(cfg.horizon)?;
    let pair = cfg.constraints.build(&grid, base_dir(config_path))?;
    let ensemble = ensemble_solve(&EnsembleSpec {
        x0: cfg.x0,
        coeffs: &coeffs,
        obstacles: Obstacles::Fixed(&pair),
        family: &family,
        grid: &grid,
        paths_per_scenario: cfg.paths,
        base_seed: cfg.seed,
        picard: cfg.picard,
        p: cfg.p,
    })?;
    fs::create_dir_all(out)?;
    let mut runs = Vec::with_capacity(ensemble.runs.len());
    for run in &ensemble.runs {
        let name = format!("scenario{:03}_path{:05}.csv", run.scenario, run.path);
        let sol = &run.solution;
        let mut w = BufWriter::new(File::create(out.join(&name))?);
        write_columns(
            &mut w,
            &grid,
            &[
                ("B", run.driver.b.values()),
                ("QV", run.driver.qv.values()),
                ("X", sol.x.values()),
                ("A", sol.a.values()),
                ("A_r", sol.a_r.values()),
                ("A_l", sol.a_l.values()),
            ],
        )?;
        w.flush()?;
        runs.push(json!({
            "scenario": run.scenario,
            "path": run.path,
            "file": name,
            "iterations": sol.iterations,
            "picard_residual": sol.picard_residual,
            "equation_residual": sol.equation_residual,
        }));
    }
    let summary = json!({"config": cfg, "summary": ensemble.summary, "runs": runs});
    write_json(Some(&out.join("summary.json")), &summary)?;
    Ok(Status::Ok)
}

fn expect(
    functional: Functional,
    config_path: &Path,
    sensitivity: &[usize],
    out: Option<&Path>,
) -> Result<Status, CliError> {
    let cfg = load_config(config_path)?;
    let grid = cfg.grid()?;
    let bounds = cfg.bounds()?;
    let family = scenario_family(&bounds, cfg.family, &grid)?;
    let reflected = matches!(
        functional,
        Functional::ReflectedTerminalSquared | Functional::ReflectedSupAbs
    );
    let (coeffs, pair) = if reflected {
        (
            Some(cfg.coefficients.build(cfg.horizon)?),
            Some(cfg.constraints.build(&grid, base_dir(config_path))?),
        )
    } else {
        (None, None)
    };
    let eval = |p: &GBMPath| -> gskor_core::Result<f64> {
        let b = &p.b;
        Ok(match functional {
            Functional::Bt => b.last(),
            Functional::BtSquared => b.last().powi(2),
            Functional::BtPositive => b.last().max(0.0),
            Functional::SupAbsB => b.max_abs(),
            Functional::QvTerminal => p.qv.last(),
            Functional::ReflectedTerminalSquared | Functional::ReflectedSupAbs => {
                let (c, pr) = (coeffs.as_ref().expect("built"), pair.as_ref().expect("built"));
                let sol = solve_reflected(cfg.x0, c, pr, p, &cfg.picard)?;
                if functional == Functional::ReflectedSupAbs {
                    sol.x.max_abs()
                } else {
                    sol.x.last().powi(2)
                }
            }
        })
    };
    let est = sublinear_expectation(eval, &family, &grid, cfg.paths, cfg.seed)?;
    let mut report = json!({
        "functional": functional,
        "value": est.value,
        "stderr": est.value_stderr(),
        "lower_value": est.lower_value,
        "lower_stderr": est.lower_stderr(),
        "estimate": est,
        "config": cfg,
    });
    if !sensitivity.is_empty() {
        let sens = family_sensitivity(eval, &bounds, sensitivity, &grid, cfg.paths, cfg.seed)?;
        report["sensitivity"] = sens.into_iter().map(|(m, v)| json!({"m": m, "value": v})).collect::<Value>();
    }
    write_json(out, &report)?;
    Ok(Status::Ok)
}

/// Reports for `suite` (`all` or one name), in a fixed order.
pub fn verify_reports(suite: &str, trials: Option<usize>, seed: u64) -> Result<Vec<PropertyReport>, CliError> {
    let suites: Vec<Suite> = if suite == "all" {
        Suite::ALL.to_vec()
    } else {
        vec![suite.parse()?]
    };
    if trials == Some(0) {
        return Err(CliError::Input("--trials must be positive".into()));
    }
    Ok(suites.into_iter().map(|s| s.run(trials, seed)).collect())
}

fn verify(suite: &str, trials: Option<usize>, seed: u64, out: Option<&Path>) -> Result<Status, CliError> {
    let reports = verify_reports(suite, trials, seed)?;
    let failed: Vec<&str> = reports
        .iter()
        .filter(|r| !r.passed())
        .map(|r| r.property_id.as_str())
        .collect();
    let doc = json!({
        "seed": seed,
        "passed": failed.is_empty(),
        "failed": failed,
        "reports": reports,
    });
    write_json(out, &doc)?;
    Ok(if failed.is_empty() {
        Status::Ok
    } else {
        Status::AssertionsFailed
    })
}
