//! Multi-copy benchmark harness: generate datasets, run each method from
//! `x⁰ = 0`, and tabulate iterations, time, objective and cardinality.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::problems::{generate_dataset, LogisticProblem, ScaleMode};
use crate::rbapg::rbapg_solve;
use crate::solver::{pdn_solve, rbpdn_solve, SolveResult, SolverConfig};

/// Entries with `|xⱼ|` at or below this count as zero.
pub const CARDINALITY_THRESHOLD: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Rbpdn,
    Rbapg,
    Pdn,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Rbpdn => "rbpdn",
            Method::Rbapg => "rbapg",
            Method::Pdn => "pdn",
        }
    }

    pub fn solve(self, problem: &LogisticProblem, config: &SolverConfig) -> Result<SolveResult> {
        match self {
            Method::Rbpdn => rbpdn_solve(problem, None, config),
            Method::Rbapg => rbapg_solve(problem, None, config),
            Method::Pdn => pdn_solve(problem, None, config),
        }
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "rbpdn" => Ok(Method::Rbpdn),
            "rbapg" => Ok(Method::Rbapg),
            "pdn" => Ok(Method::Pdn),
            other => Err(Error::InvalidConfig(format!("unknown method {other:?}"))),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemKind {
    /// Ridge-regularized logistic regression.
    Rlr,
    /// Ridge plus ℓ1.
    Srlr,
}

impl ProblemKind {
    pub fn name(self) -> &'static str {
        match self {
            ProblemKind::Rlr => "rlr",
            ProblemKind::Srlr => "srlr",
        }
    }
}

impl FromStr for ProblemKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rlr" => Ok(ProblemKind::Rlr),
            "srlr" => Ok(ProblemKind::Srlr),
            other => Err(Error::InvalidConfig(format!("unknown problem {other:?}"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BenchPlan {
    pub dims: Vec<usize>,
    pub copies: usize,
    pub m: usize,
    pub methods: Vec<Method>,
    pub problem: ProblemKind,
    pub mu: f64,
    /// Ignored for [`ProblemKind::Rlr`].
    pub gamma: f64,
    pub tol: f64,
    pub blocks: usize,
    pub eta: f64,
    pub seed_base: u64,
    pub gap_interval: usize,
    pub max_iter: usize,
    pub scale_mode: ScaleMode,
    /// When false, timing columns are written as zero so repeated runs
    /// produce byte-identical files.
    pub record_timing: bool,
}

impl Default for BenchPlan {
    fn default() -> Self {
        BenchPlan {
            dims: vec![3000],
            copies: 10,
            m: 1000,
            methods: vec![Method::Rbpdn, Method::Rbapg],
            problem: ProblemKind::Rlr,
            mu: 1e-5,
            gamma: 1e-4,
            tol: 1e-3,
            blocks: 10,
            eta: 0.25,
            seed_base: 0,
            gap_interval: 10,
            max_iter: 100_000,
            scale_mode: ScaleMode::None,
            record_timing: true,
        }
    }
}

impl BenchPlan {
    pub fn validate(&self) -> Result<()> {
        if self.copies == 0 {
            return Err(Error::InvalidConfig("copies must be at least 1".into()));
        }
        if self.dims.is_empty() {
            return Err(Error::InvalidConfig("dims must be non-empty".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::InvalidConfig("methods must be non-empty".into()));
        }
        if !(self.mu > 0.0) {
            return Err(Error::InvalidConfig("mu must be positive".into()));
        }
        if !(self.gamma >= 0.0) {
            return Err(Error::InvalidConfig("gamma must be nonnegative".into()));
        }
        Ok(())
    }

    fn gamma_for_problem(&self) -> f64 {
        match self.problem {
            ProblemKind::Rlr => 0.0,
            ProblemKind::Srlr => self.gamma,
        }
    }
}

/// One (dim, copy, method) run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRow {
    pub dim: usize,
    pub copy: usize,
    pub seed: u64,
    pub method: Method,
    pub problem: ProblemKind,
    pub iterations: usize,
    pub cpu_s: f64,
    pub objective: f64,
    pub cardinality: usize,
    pub gap_final: f64,
    pub status: String,
}

/// Per-(dim, method) averages over copies.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub dim: usize,
    pub method: Method,
    pub problem: ProblemKind,
    pub copies: usize,
    /// Mean iteration count rounded to the nearest integer.
    pub iters_avg: u64,
    pub cpu_avg_s: f64,
    pub obj_avg: f64,
    pub card_avg: f64,
    pub gap_final_avg: f64,
    pub status: String,
}

#[derive(Debug, Clone, Default)]
pub struct BenchReport {
    pub runs: Vec<RunRow>,
    pub summary: Vec<SummaryRow>,
}

/// Runs the plan in (dim, copy, method) order. A failed run is recorded with
/// its status and never aborts the plan.
pub fn run_bench(plan: &BenchPlan) -> Result<BenchReport> {
    run_bench_with(plan, |_| {})
}

/// As [`run_bench`], calling `progress` after each run.
pub fn run_bench_with(plan: &BenchPlan, mut progress: impl FnMut(&RunRow)) -> Result<BenchReport> {
    plan.validate()?;
    let gamma = plan.gamma_for_problem();
    let mut runs = Vec::new();
    for &dim in &plan.dims {
        for copy in 0..plan.copies {
            let seed = plan.seed_base + copy as u64;
            let problem = generate_dataset(plan.m, dim, seed).and_then(|data| {
                Ok(LogisticProblem::new(data, plan.mu, gamma, plan.blocks)?
                    .with_scale_mode(plan.scale_mode))
            });
            let config = SolverConfig {
                eta: plan.eta,
                tol: plan.tol,
                gap_check_interval: plan.gap_interval,
                max_iter: plan.max_iter,
                seed,
                ..SolverConfig::default()
            };
            for &method in &plan.methods {
                let outcome = problem
                    .as_ref()
                    .map_err(|e| Error::InvalidConfig(e.to_string()))
                    .and_then(|p| method.solve(p, &config));
                let row = match outcome {
                    Ok(result) => RunRow {
                        dim,
                        copy,
                        seed,
                        method,
                        problem: plan.problem,
                        iterations: result.iterations,
                        cpu_s: if plan.record_timing {
                            result.elapsed_seconds
                        } else {
                            0.0
                        },
                        objective: result.final_objective,
                        cardinality: result.cardinality(CARDINALITY_THRESHOLD),
                        gap_final: result.final_gap,
                        status: result.status.label().to_string(),
                    },
                    Err(e) => RunRow {
                        dim,
                        copy,
                        seed,
                        method,
                        problem: plan.problem,
                        iterations: 0,
                        cpu_s: 0.0,
                        objective: f64::NAN,
                        cardinality: 0,
                        gap_final: f64::NAN,
                        status: format!("error: {e}"),
                    },
                };
                progress(&row);
                runs.push(row);
            }
        }
    }
    let summary = summarize(plan, &runs);
    Ok(BenchReport { runs, summary })
}

fn summarize(plan: &BenchPlan, runs: &[RunRow]) -> Vec<SummaryRow> {
    let mut out = Vec::new();
    for &dim in &plan.dims {
        for &method in &plan.methods {
            let rows: Vec<&RunRow> = runs
                .iter()
                .filter(|r| r.dim == dim && r.method == method)
                .collect();
            let count = rows.len() as f64;
            let mean = |f: &dyn Fn(&RunRow) -> f64| rows.iter().map(|r| f(r)).sum::<f64>() / count;
            let converged = rows.iter().filter(|r| r.status == "converged").count();
            out.push(SummaryRow {
                dim,
                method,
                problem: plan.problem,
                copies: rows.len(),
                iters_avg: mean(&|r| r.iterations as f64).round() as u64,
                cpu_avg_s: mean(&|r| r.cpu_s),
                obj_avg: mean(&|r| r.objective),
                card_avg: mean(&|r| r.cardinality as f64),
                gap_final_avg: mean(&|r| r.gap_final),
                status: if converged == rows.len() {
                    "converged".to_string()
                } else {
                    format!("{converged}/{} converged", rows.len())
                },
            });
        }
    }
    out
}

pub const SUMMARY_HEADER: [&str; 10] = [
    "dim",
    "method",
    "problem",
    "copies",
    "iters_avg",
    "cpu_avg_s",
    "obj_avg",
    "card_avg",
    "gap_final_avg",
    "status",
];

pub const RUNS_HEADER: [&str; 11] = [
    "dim",
    "copy",
    "seed",
    "method",
    "problem",
    "iters",
    "cpu_s",
    "obj",
    "card",
    "gap_final",
    "status",
];

pub fn write_summary<W: Write>(rows: &[SummaryRow], out: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(SUMMARY_HEADER)?;
    for r in rows {
        writer.write_record([
            r.dim.to_string(),
            r.method.to_string(),
            r.problem.name().to_string(),
            r.copies.to_string(),
            r.iters_avg.to_string(),
            format!("{:.4}", r.cpu_avg_s),
            format!("{:.10}", r.obj_avg),
            format!("{:.2}", r.card_avg),
            format!("{:.6e}", r.gap_final_avg),
            r.status.clone(),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

pub fn write_runs<W: Write>(rows: &[RunRow], out: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(RUNS_HEADER)?;
    for r in rows {
        writer.write_record([
            r.dim.to_string(),
            r.copy.to_string(),
            r.seed.to_string(),
            r.method.to_string(),
            r.problem.name().to_string(),
            r.iterations.to_string(),
            format!("{:.4}", r.cpu_s),
            format!("{:.10}", r.objective),
            r.cardinality.to_string(),
            format!("{:.6e}", r.gap_final),
            r.status.clone(),
        ])?;
    }
    writer.flush()?;
    Ok(())
}
