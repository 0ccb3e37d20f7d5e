//! Command-line front end. Exit codes: 0 when every assertion holds, 1 when
//! a stage or claim fails, 2 for unreadable input or invalid problems.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use rayon::prelude::*;

use crate::error::Error;
use crate::lp::write_lp_dump;
use crate::measures::{convex_order_check, DiscreteMeasure, DEFAULT_ORDER_TOL};
use crate::mmot::build_lp;
use crate::reproduce::{example_problem, reproduce, Example};
use crate::scenario::{run_scenario, Scenario, ScenarioReport};
use crate::structure::{irreducibility_check, irreducible_components};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "mmot", version, about = "Discrete multi-martingale optimal transport")]
struct Cli {
    /// Certification tolerance (default 1e-8; convex-order tolerance for `decompose`).
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Output directory for reports.
    #[arg(long, global = true, default_value = "mmot-out")]
    out: PathBuf,
    /// Write the assembled LP in plain-text form to this path.
    #[arg(long, global = true)]
    dump_lp: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a scenario file, or a bare problem file with the pipeline `solve, dual`.
    Solve { file: PathBuf },
    /// Rebuild a worked instance and check its claims.
    Reproduce {
        /// One of ex2_4, ex2_5, ex2_7, ex2_8.
        example: String,
        /// Grid parameter (cells of each initial marginal).
        #[arg(long)]
        n: Option<usize>,
    },
    /// Run every `*.json` scenario in a directory concurrently.
    Batch { dir: PathBuf },
    /// Split a convex-ordered pair of one-dimensional measures into irreducible components.
    Decompose { mu: PathBuf, nu: PathBuf },
}

/// Classifies an error as bad input (2) or a failed computation (1).
pub fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::Parse(_)
        | Error::Io(_)
        | Error::Json(_)
        | Error::EmptyMeasure
        | Error::InvalidWeight { .. }
        | Error::InvalidInterval { .. }
        | Error::InvalidDensity(_)
        | Error::NotInConvexOrder(_)
        | Error::InvalidPlan(_)
        | Error::InvalidLp(_)
        | Error::InvalidProblem(_) => EXIT_INPUT,
        _ => EXIT_FAILED,
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    if let Some(t) = cli.tol {
        if !(t.is_finite() && t > 0.0) {
            eprintln!("error: --tol must be a positive number");
            return EXIT_INPUT;
        }
    }
    let result = match &cli.command {
        Command::Solve { file } => solve(file, &cli),
        Command::Reproduce { example, n } => reproduce_cmd(example, *n, &cli),
        Command::Batch { dir } => batch(dir, &cli),
        Command::Decompose { mu, nu } => decompose(mu, nu, &cli),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        exit_code_for(&e)
    })
}

fn print_report(report: &ScenarioReport, dir: &Path) {
    let status = if report.passed { "PASS" } else { "FAIL" };
    let value = report.value.map_or_else(|| "-".to_string(), |v| format!("{v:.12}"));
    println!("{status} {} value={value} report={}", report.name, dir.join("report.json").display());
    for f in report.failures() {
        println!("  failed {f}");
    }
}

fn solve(file: &Path, cli: &Cli) -> crate::Result<i32> {
    let scenario = Scenario::from_path(file)?;
    let report = run_scenario(&scenario, cli.tol, cli.dump_lp.as_deref())?;
    let dir = cli.out.join(&report.name);
    report.write_to(&dir)?;
    print_report(&report, &dir);
    Ok(if report.passed { EXIT_OK } else { EXIT_FAILED })
}

fn reproduce_cmd(example: &str, n: Option<usize>, cli: &Cli) -> crate::Result<i32> {
    let example: Example = example.parse()?;
    if let Some(path) = &cli.dump_lp {
        std::fs::write(path, write_lp_dump(&build_lp(&example_problem(example, n)?)))?;
    }
    let r = reproduce(example, n, cli.tol)?;
    let dir = cli.out.join(example.to_string());
    std::fs::create_dir_all(&dir)?;
    let mut json = serde_json::to_string_pretty(&r)?;
    json.push('\n');
    std::fs::write(dir.join("report.json"), json)?;
    for c in &r.claims {
        println!("{c}");
    }
    let status = if r.passed { "PASS" } else { "FAIL" };
    println!("{status} {example} n={} value={:.12}", r.n, r.value);
    Ok(if r.passed { EXIT_OK } else { EXIT_FAILED })
}

fn batch(dir: &Path, cli: &Cli) -> crate::Result<i32> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Error::Parse(format!("no scenario files in {}", dir.display())));
    }
    let outcomes: Vec<(PathBuf, crate::Result<ScenarioReport>)> = files
        .into_par_iter()
        .map(|f| {
            let r = Scenario::from_path(&f).and_then(|s| run_scenario(&s, cli.tol, None));
            (f, r)
        })
        .collect();
    let mut names = std::collections::BTreeSet::new();
    let mut code = EXIT_OK;
    for (file, outcome) in outcomes {
        match outcome {
            Ok(report) => {
                if !names.insert(report.name.clone()) {
                    eprintln!("error: {}: duplicate scenario name {:?}", file.display(), report.name);
                    code = code.max(EXIT_INPUT);
                    continue;
                }
                let out = cli.out.join(&report.name);
                report.write_to(&out)?;
                print_report(&report, &out);
                if !report.passed {
                    code = code.max(EXIT_FAILED);
                }
            }
            Err(e) => {
                eprintln!("error: {}: {e}", file.display());
                code = code.max(exit_code_for(&e));
            }
        }
    }
    Ok(code)
}

fn read_measure(path: &Path) -> crate::Result<DiscreteMeasure> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text)
        .map_err(|e| Error::Parse(format!("{}: line {} column {}: {e}", path.display(), e.line(), e.column())))
}

fn decompose(mu_path: &Path, nu_path: &Path, cli: &Cli) -> crate::Result<i32> {
    let mu = read_measure(mu_path)?;
    let nu = read_measure(nu_path)?;
    let order = convex_order_check(&mu, &nu, cli.tol.unwrap_or(DEFAULT_ORDER_TOL))?;
    if !order.ordered {
        println!("FAIL not in convex order: {}", serde_json::to_string(&order.witness)?);
        return Ok(EXIT_FAILED);
    }
    let d = irreducible_components(&mu, &nu)?;
    let mut ok = d.reconstruct_mu().max_atom_diff(&mu) <= 1e-9 && d.reconstruct_nu().max_atom_diff(&nu) <= 1e-9;
    for c in &d.components {
        ok &= irreducibility_check(&c.mu, &c.nu)?;
    }
    std::fs::create_dir_all(&cli.out)?;
    let mut json = serde_json::to_string_pretty(&d)?;
    json.push('\n');
    std::fs::write(cli.out.join("decomposition.json"), &json)?;
    print!("{json}");
    Ok(if ok { EXIT_OK } else { EXIT_FAILED })
}
