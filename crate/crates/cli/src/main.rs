//! `llfba`: solve, verify and benchmark loopless FBA from the command line.

use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use llfba::bench::{self, BenchGrid, Method, MethodSpec};
use llfba::enzyme::{build_enzyme_model, generate_enzyme_data, EnzymeData, EnzymeDataParams};
use llfba::io::{load_solution, save_model, save_solution};
use llfba::report::{read_rows, write_rows};
use llfba::solver::backend_from_env;
use llfba::verifier::{verify_loopless, verify_via_nullspace, Verification, ZERO_FLUX_TOL};
use llfba::{Execution, FluxSystem, SolveSettings, SolveStatus};

#[derive(Parser)]
#[command(name = "llfba", version, about = "Loopless flux balance analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one model with one method. Exits 4 unless the status is Optimal.
    Solve(SolveArgs),
    /// Check a saved solution for internal loops. Exits 1 when a loop is found.
    Verify(VerifyArgs),
    /// Run a method × instance grid and write a CSV report.
    Bench {
        grid: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Summarize a CSV report.
    Aggregate {
        report: PathBuf,
        /// Unsolved runs count at this time in the all-instance geomean.
        #[arg(long)]
        time_limit: Option<f64>,
    },
    /// Performance-profile points `(time, solved)` per method, as CSV.
    Profile {
        report: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Generate random enzyme data for a model.
    EnzymeData {
        model: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Write a model (file, `builtin:*` or `random:<seed>`) as JSON.
    Export {
        model: String,
        #[arg(short, long)]
        output: PathBuf,
    },
}

#[derive(Args)]
struct SolveArgs {
    /// Model file, `builtin:example`, `builtin:two-cycle` or `random:<seed>`.
    model: String,
    /// TOML file with method settings; flags given on the command line win.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(short, long)]
    method: Option<Method>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    big_m: Option<f64>,
    /// Benders: MIS per iteration as a percentage of the reactions.
    #[arg(long)]
    pct: Option<f64>,
    /// Benders cut filter: all, distinct, k-smallest:K or density:D.
    #[arg(long)]
    strategy: Option<String>,
    /// Benders master: bigm, indicator or both.
    #[arg(long)]
    master: Option<String>,
    /// Benders with no-good cuts only.
    #[arg(long)]
    no_good: bool,
    #[arg(long)]
    time_limit: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Solve the enzyme-constrained model built from this data file.
    #[arg(long, conflicts_with = "enzyme_seed")]
    enzyme: Option<PathBuf>,
    /// Solve the enzyme-constrained model with data generated from this seed.
    #[arg(long)]
    enzyme_seed: Option<u64>,
    #[arg(long, default_value = "parallel")]
    execution: Execution,
    /// Write the solution as JSON.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    model: String,
    solution: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    epsilon: f64,
    #[arg(long, default_value_t = ZERO_FLUX_TOL)]
    tol: f64,
}

fn method_spec(args: &SolveArgs) -> Result<MethodSpec> {
    let mut spec = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        None => MethodSpec::new(args.method.unwrap_or(Method::Benders)),
    };
    if let Some(m) = args.method {
        spec.method = m;
    }
    if let Some(e) = args.epsilon {
        spec.epsilon = e;
    }
    if args.big_m.is_some() {
        spec.big_m = args.big_m;
    }
    if let Some(p) = args.pct {
        spec.pct = p;
    }
    if let Some(s) = &args.strategy {
        spec.strategy = s.clone();
    }
    if let Some(m) = &args.master {
        spec.master = m.clone();
    }
    spec.no_good_only |= args.no_good;
    if args.time_limit.is_some() {
        spec.time_limit_s = args.time_limit;
    }
    Ok(spec)
}

fn solve(args: SolveArgs) -> Result<ExitCode> {
    let spec = method_spec(&args)?;
    let model = bench::load_instance(&args.model, None)?;
    let enzyme_data = match (&args.enzyme, args.enzyme_seed) {
        (Some(path), _) => Some(EnzymeData::load(path)?),
        (None, Some(seed)) => Some(generate_enzyme_data(&model, seed, &EnzymeDataParams::default())),
        (None, None) => None,
    };
    let system: Box<dyn FluxSystem> = match enzyme_data {
        Some(data) => Box::new(build_enzyme_model(&model, &data)?),
        None => Box::new(model),
    };
    let settings = SolveSettings {
        time_limit_s: spec.time_limit_s.unwrap_or(f64::INFINITY),
        seed: args.seed,
        ..SolveSettings::default()
    };
    let backend = backend_from_env()?;
    let (sol, report) = bench::solve_with(&spec, system.as_ref(), &settings, backend.as_ref(), args.execution)?;
    println!("status      {}", sol.status);
    if sol.status == SolveStatus::Optimal {
        println!("objective   {:.9}", sol.objective_value);
    }
    println!("method      {}", bench::method_label(&report.to_row()));
    println!("iterations  {}", report.iterations);
    println!("cuts        {}", report.cuts);
    println!("time        {:.3}s", report.wall_time_s);
    if let Some(path) = &args.output {
        save_solution(system.network(), &sol, path)?;
    }
    Ok(if sol.status == SolveStatus::Optimal {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(4)
    })
}

fn verify(args: VerifyArgs) -> Result<ExitCode> {
    let model = bench::load_instance(&args.model, None)?;
    let sol = load_solution(&model, &args.solution)?;
    if sol.status != SolveStatus::Optimal {
        bail!("solution status is {}, nothing to verify", sol.status);
    }
    let backend = backend_from_env()?;
    let verdict = verify_loopless(&model, &sol.v, args.epsilon, args.tol, backend.as_ref())?;
    let nullspace = verify_via_nullspace(&model, &sol.v, args.tol, backend.as_ref())?;
    match verdict {
        Verification::Certified { .. } if nullspace => {
            println!("certified: no internal loop");
            Ok(ExitCode::SUCCESS)
        }
        Verification::Certified { .. } => {
            bail!("verifiers disagree: potentials exist but the nullspace search found a loop")
        }
        Verification::CycleFound(reactions) => {
            let ids: Vec<&str> = reactions.iter().map(|&j| model.reaction_ids()[j].as_str()).collect();
            println!("loop through {}", ids.join(", "));
            Ok(ExitCode::from(1))
        }
    }
}

fn writer(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(File::create(p).with_context(|| format!("creating {}", p.display()))?),
        None => Box::new(io::stdout().lock()),
    })
}

fn read_report(path: &Path) -> Result<Vec<llfba::report::ReportRow>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(read_rows(file, &path.display().to_string())?)
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Solve(args) => solve(args),
        Command::Verify(args) => verify(args),
        Command::Bench { grid, output } => {
            let grid = BenchGrid::load(&grid)?;
            let backend = backend_from_env()?;
            let rows = bench::run_benchmark(&grid, backend.as_ref())?;
            write_rows(writer(output.as_deref())?, &rows)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Aggregate { report, time_limit } => {
            let rows = read_report(&report)?;
            print!("{}", bench::aggregate(&rows, time_limit).render());
            Ok(ExitCode::SUCCESS)
        }
        Command::Profile { report, output } => {
            let rows = read_report(&report)?;
            bench::write_profile(writer(output.as_deref())?, &bench::make_performance_profile(&rows))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::EnzymeData { model, seed, output } => {
            let model = bench::load_instance(&model, None)?;
            generate_enzyme_data(&model, seed, &EnzymeDataParams::default()).save(&output)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Export { model, output } => {
            save_model(&bench::load_instance(&model, None)?, &output)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(3)
        }
    }
}
