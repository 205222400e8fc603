use std::path::Path;
use std::process::{Command, Output};

/// Runs the binary with a whitespace-separated argument line and requires
/// success.
fn rbpdn(line: &str) -> Output {
    let out = Command::new(env!("CARGO_BIN_EXE_rbpdn"))
        .args(line.split_whitespace())
        .output()
        .expect("binary runs");
    assert!(
        out.status.success(),
        "rbpdn {line} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn gen_then_solve_both_formats() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["data.bin", "data.csv"] {
        let data = dir.path().join(name);
        rbpdn(&format!("gen --m 60 --dim 30 --seed 4 --out {}", p(&data)));
        let trace = dir.path().join(format!("{name}.trace.csv"));
        let out = rbpdn(&format!(
            "solve --problem srlr --data {} --mu 1e-3 --blocks 3 --trace {}",
            p(&data),
            p(&trace)
        ));
        let stdout = String::from_utf8(out.stdout).unwrap();
        assert!(stdout.contains("status      converged"), "{stdout}");
        let trace = std::fs::read_to_string(trace).unwrap();
        let mut lines = trace.lines();
        assert_eq!(
            lines.next(),
            Some("iter,block,lambda,F,gap,elapsed_seconds")
        );
        assert!(lines.count() >= 10);
    }
}

#[test]
fn csv_and_binary_datasets_solve_identically() {
    let dir = tempfile::tempdir().unwrap();
    let bin = dir.path().join("d.bin");
    let csv = dir.path().join("d.csv");
    rbpdn(&format!("gen --m 40 --dim 20 --seed 1 --out {}", p(&bin)));
    rbpdn(&format!("gen --m 40 --dim 20 --seed 1 --out {}", p(&csv)));
    let solve = |path: &Path| {
        let out = rbpdn(&format!("solve --data {} --mu 1e-3 --blocks 2", p(path)));
        String::from_utf8(out.stdout)
            .unwrap()
            .lines()
            .filter(|l| !l.starts_with("seconds"))
            .collect::<Vec<_>>()
            .join("\n")
    };
    assert_eq!(solve(&bin), solve(&csv));
}

#[test]
fn bench_without_timing_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let run = |tag: &str| {
        let out = dir.path().join(format!("{tag}.csv"));
        rbpdn(&format!(
            "bench --problem srlr --dims 20,30 --copies 2 --m 40 --mu 1e-3 --blocks 2 \
             --methods rbpdn,rbapg,pdn --no-timing --out {}",
            p(&out)
        ));
        let runs = dir.path().join(format!("{tag}.csv.runs.csv"));
        (std::fs::read(out).unwrap(), std::fs::read(runs).unwrap())
    };
    let a = run("a");
    let b = run("b");
    assert_eq!(a, b);
    let summary = String::from_utf8(a.0).unwrap();
    assert!(summary.starts_with(
        "dim,method,problem,copies,iters_avg,cpu_avg_s,obj_avg,card_avg,gap_final_avg,status"
    ));
    assert_eq!(summary.lines().count(), 1 + 2 * 3);
}

#[test]
fn invalid_arguments_fail_cleanly() {
    let out = Command::new(env!("CARGO_BIN_EXE_rbpdn"))
        .args(["solve", "--data", "/nonexistent/file.bin"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));

    let out = Command::new(env!("CARGO_BIN_EXE_rbpdn"))
        .args(["bench", "--methods", "newton", "--out", "x.csv"])
        .output()
        .unwrap();
    assert!(!out.status.success());
}
