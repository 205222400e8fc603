use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use rbpdn::bench::{self, BenchPlan, Method, ProblemKind, CARDINALITY_THRESHOLD};
use rbpdn::data;
use rbpdn::{generate_dataset, LogisticProblem, ScaleMode, SolverConfig};

#[derive(Parser)]
#[command(
    name = "rbpdn",
    version,
    about = "Randomized block proximal damped Newton solver"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic logistic regression dataset.
    Gen {
        #[arg(long, default_value_t = 1000)]
        m: usize,
        #[arg(long)]
        dim: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output path; a `.csv` extension selects CSV, anything else binary.
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve one problem instance.
    Solve {
        #[arg(long, default_value = "rlr")]
        problem: ProblemKind,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 1e-5)]
        mu: f64,
        #[arg(long, default_value_t = 1e-4)]
        gamma: f64,
        #[arg(long, default_value_t = 10)]
        blocks: usize,
        #[arg(long, default_value = "rbpdn")]
        method: Method,
        #[arg(long, default_value_t = 0.25)]
        eta: f64,
        #[arg(long, default_value_t = 1e-3)]
        tol: f64,
        #[arg(long, default_value_t = 10)]
        gap_interval: usize,
        #[arg(long, default_value_t = 100_000)]
        max_iter: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the iteration trace CSV here.
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long, default_value = "none")]
        sc_scale: ScaleMode,
    },
    /// Run several methods over several sizes and data copies.
    Bench {
        #[arg(long, default_value = "rlr")]
        problem: ProblemKind,
        #[arg(long, value_delimiter = ',', default_value = "3000")]
        dims: Vec<usize>,
        #[arg(long, default_value_t = 10)]
        copies: usize,
        #[arg(long, default_value_t = 1000)]
        m: usize,
        #[arg(long, default_value_t = 1e-5)]
        mu: f64,
        #[arg(long, default_value_t = 1e-4)]
        gamma: f64,
        #[arg(long, default_value_t = 1e-3)]
        tol: f64,
        #[arg(long, default_value_t = 10)]
        blocks: usize,
        #[arg(long, default_value_t = 0.25)]
        eta: f64,
        #[arg(long, value_delimiter = ',', default_value = "rbpdn,rbapg")]
        methods: Vec<Method>,
        #[arg(long, default_value_t = 0)]
        seed_base: u64,
        #[arg(long, default_value_t = 10)]
        gap_interval: usize,
        #[arg(long, default_value_t = 100_000)]
        max_iter: usize,
        #[arg(long, default_value = "none")]
        sc_scale: ScaleMode,
        /// Summary CSV (per-dim averages).
        #[arg(long)]
        out: PathBuf,
        /// Per-run CSV; defaults to the summary path with a `.runs.csv` suffix.
        #[arg(long)]
        runs: Option<PathBuf>,
        /// Write zero timing columns so repeated runs are byte-identical.
        #[arg(long)]
        no_timing: bool,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> rbpdn::Result<()> {
    match cli.command {
        Command::Gen { m, dim, seed, out } => {
            let dataset = generate_dataset(m, dim, seed)?;
            if out
                .extension()
                .is_some_and(|e| e.eq_ignore_ascii_case("csv"))
            {
                data::save_csv(&dataset, &out)?;
            } else {
                data::save_binary(&dataset, &out)?;
            }
            eprintln!("wrote {m}x{dim} dataset to {}", out.display());
        }
        Command::Solve {
            problem,
            data: path,
            mu,
            gamma,
            blocks,
            method,
            eta,
            tol,
            gap_interval,
            max_iter,
            seed,
            trace,
            sc_scale,
        } => {
            let dataset = data::load_dataset(&path)?;
            let gamma = match problem {
                ProblemKind::Rlr => 0.0,
                ProblemKind::Srlr => gamma,
            };
            let instance =
                LogisticProblem::new(dataset, mu, gamma, blocks)?.with_scale_mode(sc_scale);
            let config = SolverConfig {
                eta,
                tol,
                gap_check_interval: gap_interval,
                max_iter,
                seed,
                ..SolverConfig::default()
            };
            let result = method.solve(&instance, &config)?;
            if let Some(path) = trace {
                data::write_trace(&result.trace, BufWriter::new(File::create(path)?))?;
            }
            println!("method      {method}");
            println!("status      {}", result.status.label());
            if let rbpdn::SolveStatus::SubsolverFailure { iteration, reason } = &result.status {
                println!("failure     iteration {iteration}: {reason}");
            }
            println!("iterations  {}", result.iterations);
            println!("objective   {:.10}", result.final_objective);
            println!("gap         {:.3e}", result.final_gap);
            println!("cardinality {}", result.cardinality(CARDINALITY_THRESHOLD));
            println!("seconds     {:.3}", result.elapsed_seconds);
        }
        Command::Bench {
            problem,
            dims,
            copies,
            m,
            mu,
            gamma,
            tol,
            blocks,
            eta,
            methods,
            seed_base,
            gap_interval,
            max_iter,
            sc_scale,
            out,
            runs,
            no_timing,
        } => {
            let plan = BenchPlan {
                dims,
                copies,
                m,
                methods,
                problem,
                mu,
                gamma,
                tol,
                blocks,
                eta,
                seed_base,
                gap_interval,
                max_iter,
                scale_mode: sc_scale,
                record_timing: !no_timing,
            };
            let report = bench::run_bench_with(&plan, |row| {
                eprintln!(
                    "dim={} copy={} {}: {} iters, F={:.6}, card={}, {}",
                    row.dim,
                    row.copy,
                    row.method,
                    row.iterations,
                    row.objective,
                    row.cardinality,
                    row.status
                );
            })?;
            let runs_path = runs.unwrap_or_else(|| {
                let mut p = out.clone().into_os_string();
                p.push(".runs.csv");
                PathBuf::from(p)
            });
            bench::write_summary(&report.summary, BufWriter::new(File::create(&out)?))?;
            bench::write_runs(&report.runs, BufWriter::new(File::create(&runs_path)?))?;
            eprintln!("wrote {} and {}", out.display(), runs_path.display());
        }
    }
    Ok(())
}
