//! `rhi`: generate weights, analyze their reverse Hölder constants, run the
//! verification suites and export decomposition traces and ratio curves.
//!
//! Exit codes: 0 success, 1 a checked inequality failed, 2 usage or input
//! error.

mod report;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dyadic_rhi::exponents::rearranged_constant;
use dyadic_rhi::rearrange::{curve_to_csv, format_real};
use dyadic_rhi::verify::{run_suite, Suite, SuiteConfig};
use dyadic_rhi::{
    improvement_range, rearrangement, trace_theorem1, DyadicWeight, LogUniform, TreeSpace,
};
use serde::Serialize;

use report::{real, Analysis, Echo, MuckenhouptSection, P0Report};

#[derive(Debug, Parser)]
#[command(
    name = "rhi",
    version,
    about = "Reverse Hölder constants on k-homogeneous trees"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a weight file.
    Gen(GenArgs),
    /// Dyadic and rearranged constants of a weight.
    Analyze(AnalyzeArgs),
    /// Run a property suite on seeded random weights.
    Verify(VerifyArgs),
    /// Run the stopping-time decomposition for one t.
    Trace(TraceArgs),
    /// Self-improvement exponent for the rearranged constant k·c − k + 1.
    P0(P0Args),
    /// Export the prefix reverse Hölder ratio of φ* as CSV.
    Curve(CurveArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Kind {
    Constant,
    TwoValue,
    Random,
    Power,
}

#[derive(Debug, Args, Serialize)]
struct GenArgs {
    kind: Kind,
    #[arg(long, default_value_t = 2)]
    k: usize,
    #[arg(long, default_value_t = 4)]
    depth: u32,
    /// Constant value, or the high value of a two-value weight.
    #[arg(long, default_value_t = 1.0)]
    value: f64,
    /// Low value of a two-value weight.
    #[arg(long, default_value_t = 1.0)]
    low_value: f64,
    /// Fraction of leaves (leftmost first) carrying the high value.
    #[arg(long, default_value_t = 0.5)]
    fraction: f64,
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 1e-3)]
    low: f64,
    #[arg(long, default_value_t = 1e3)]
    high: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct AnalyzeArgs {
    weight: PathBuf,
    #[arg(long, default_value_t = 2.0)]
    p: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum SuiteName {
    Theorem1,
    Muckenhoupt,
    Lemma,
    Weaktype,
    Decomposition,
}

#[derive(Debug, Args, Serialize)]
struct VerifyArgs {
    suite: SuiteName,
    #[arg(long, default_value_t = 100)]
    count: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long = "k", value_delimiter = ',', default_values_t = [2usize, 4, 8])]
    ks: Vec<usize>,
    /// Largest depth; depths are drawn from 1..=depth.
    #[arg(long, default_value_t = 4)]
    depth: u32,
    #[arg(long = "p", value_delimiter = ',', default_values_t = [1.5, 2.0, 3.0])]
    ps: Vec<f64>,
    #[arg(long, default_value_t = 1e-3)]
    low: f64,
    #[arg(long, default_value_t = 1e3)]
    high: f64,
    /// Where to write the counterexample on failure (stdout otherwise).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct TraceArgs {
    weight: PathBuf,
    #[arg(long, default_value_t = 2.0)]
    p: f64,
    #[arg(long)]
    t: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct P0Args {
    #[arg(long)]
    p: f64,
    #[arg(long)]
    c: f64,
    #[arg(long, default_value_t = 2)]
    k: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct CurveArgs {
    weight: PathBuf,
    #[arg(long, default_value_t = 2.0)]
    p: f64,
    #[arg(long, default_value_t = 200)]
    samples: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Failure classes mapped onto exit codes.
enum Failure {
    Usage(String),
    Check(String),
}

impl From<dyadic_rhi::Error> for Failure {
    fn from(e: dyadic_rhi::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Gen(a) => gen(a),
        Command::Analyze(a) => analyze(a),
        Command::Verify(a) => verify(a),
        Command::Trace(a) => trace(a),
        Command::P0(a) => p0(a),
        Command::Curve(a) => curve(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check(msg)) => {
            eprintln!("check failed: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn write_or_print(out: Option<&Path>, text: &str) -> CmdResult {
    match out {
        Some(path) => fs::write(path, text)?,
        None => println!("{text}"),
    }
    Ok(())
}

fn read_weight(path: &Path) -> Result<DyadicWeight, Failure> {
    let text =
        fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    DyadicWeight::from_json(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn check_p(p: f64) -> CmdResult {
    if p > 1.0 && p.is_finite() {
        Ok(())
    } else {
        Err(Failure::Usage(format!("p must exceed 1, got {p}")))
    }
}

fn gen(a: &GenArgs) -> CmdResult {
    let space = TreeSpace::new(a.k, a.depth)?;
    let w = match a.kind {
        Kind::Constant => DyadicWeight::constant(space, a.value)?,
        Kind::TwoValue => {
            if !(0.0..=1.0).contains(&a.fraction) {
                return Err(Failure::Usage(format!(
                    "fraction {} not in [0, 1]",
                    a.fraction
                )));
            }
            let n = space.n_leaves();
            let high = (a.fraction * n as f64).round() as usize;
            let values = (0..n)
                .map(|i| if i < high { a.value } else { a.low_value })
                .collect();
            DyadicWeight::new(space, values)?
        }
        Kind::Random => DyadicWeight::gen_random(space, a.seed, LogUniform::new(a.low, a.high)?)?,
        Kind::Power => DyadicWeight::gen_power(space, a.alpha)?,
    };
    let text = w.to_json();
    match &a.out {
        Some(path) => {
            fs::write(path, &text)?;
            println!(
                "wrote {} leaves (k = {}, depth = {}, integral {}) to {}",
                w.leaves().len(),
                a.k,
                a.depth,
                format_real(w.total_integral()),
                path.display()
            );
        }
        None => println!("{text}"),
    }
    Ok(())
}

fn analyze(a: &AnalyzeArgs) -> CmdResult {
    check_p(a.p)?;
    let w = read_weight(&a.weight)?;
    let k = w.space().k();
    let dyadic = w.dyadic_rhi_constant(a.p)?;
    let h = rearrangement(&w);
    let prefix = h.prefix_rhi_constant(a.p)?;
    let bound = rearranged_constant(dyadic.constant, k);
    let p0_dyadic = dyadic_rhi::p0_solve(a.p, dyadic.constant.max(1.0))?;
    let p0_bound = improvement_range(a.p, dyadic.constant.max(1.0), k)?;
    let muckenhoupt = if w.is_strictly_positive() {
        let d = w.dyadic_muckenhoupt_constant(a.p)?;
        let pr = h.prefix_muckenhoupt_constant(a.p)?;
        Some(MuckenhouptSection::new(
            d,
            pr,
            rearranged_constant(d.constant, k),
        ))
    } else {
        None
    };
    let report = Analysis::new(
        Echo::new("analyze", a),
        &w,
        dyadic,
        prefix,
        bound,
        &p0_dyadic,
        &p0_bound,
        muckenhoupt,
    );

    println!("k = {}, depth = {}, p = {}", k, w.space().depth(), a.p);
    println!(
        "dyadic constant c     = {} at node {}",
        format_real(dyadic.constant),
        dyadic.witness
    );
    println!(
        "prefix constant of φ* = {} at t = {}",
        format_real(prefix.constant),
        prefix.witness_t
    );
    println!("bound k·c − k + 1     = {}", format_real(bound));
    println!(
        "margin                = {}",
        format_real(bound - prefix.constant)
    );
    println!("p0(c)                 = {}", real(p0_dyadic.p0));
    println!("p0(k·c − k + 1)       = {}", real(p0_bound.p0));
    if let Some(m) = &report.muckenhoupt {
        println!(
            "Muckenhoupt: dyadic {} prefix {} bound {}",
            real(m.dyadic_constant),
            real(m.prefix_constant),
            real(m.bound)
        );
    }
    if let Some(path) = &a.out {
        fs::write(
            path,
            serde_json::to_string_pretty(&report).expect("report serializes"),
        )?;
    }
    if prefix.constant > bound * (1.0 + dyadic_rhi::verify::BOUND_TOL) {
        return Err(Failure::Check("prefix constant exceeds k·c − k + 1".into()));
    }
    Ok(())
}

fn verify(a: &VerifyArgs) -> CmdResult {
    let suite = match a.suite {
        SuiteName::Theorem1 => Suite::Theorem1,
        SuiteName::Muckenhoupt => Suite::Muckenhoupt,
        SuiteName::Lemma => Suite::Lemma,
        SuiteName::Weaktype => Suite::WeakType,
        SuiteName::Decomposition => Suite::Decomposition,
    };
    let config = SuiteConfig {
        count: a.count,
        seed: a.seed,
        ks: a.ks.clone(),
        max_depth: a.depth,
        ps: a.ps.clone(),
        range: LogUniform::new(a.low, a.high)?,
    };
    let outcome = run_suite(suite, &config)?;
    println!(
        "{:?}: {} weights, {} checks, {}",
        suite,
        outcome.weights,
        outcome.checks,
        if outcome.passed() {
            "all pass"
        } else {
            "FAILED"
        }
    );
    match &outcome.counterexample {
        None => Ok(()),
        Some(cx) => {
            let doc = serde_json::json!({ "config": Echo::new("verify", a), "counterexample": cx });
            write_or_print(
                a.out.as_deref(),
                &serde_json::to_string_pretty(&doc).unwrap(),
            )?;
            Err(Failure::Check(format!(
                "counterexample at weight {}",
                cx.index
            )))
        }
    }
}

fn trace(a: &TraceArgs) -> CmdResult {
    check_p(a.p)?;
    if !(a.t > 0.0 && a.t <= 1.0) {
        return Err(Failure::Usage(format!("t must lie in (0, 1], got {}", a.t)));
    }
    let w = read_weight(&a.weight)?;
    let tr = trace_theorem1(&w, a.p, a.t)?;
    println!(
        "A_t = {}, |S'| = {}, |L'| = {}, mu(Gamma) = {}{}",
        format_real(tr.a_t),
        tr.s_prime.len(),
        tr.l_prime.len(),
        format_real(tr.gamma_measure),
        if tr.degenerate { " (E_t empty)" } else { "" }
    );
    for f in tr.failures() {
        println!("FAILED {}: {} {:?} {}", f.name, f.lhs, f.relation, f.rhs);
    }
    println!(
        "{} of {} assertions hold",
        tr.assertions.len() - tr.failures().count(),
        tr.assertions.len()
    );
    if let Some(path) = &a.out {
        let doc = serde_json::json!({ "config": Echo::new("trace", a), "trace": tr });
        fs::write(path, serde_json::to_string_pretty(&doc).unwrap())?;
    }
    if tr.all_hold() {
        Ok(())
    } else {
        Err(Failure::Check("trace assertion failed".into()))
    }
}

fn p0(a: &P0Args) -> CmdResult {
    let r = improvement_range(a.p, a.c, a.k)?;
    println!("{}", real(r.p0));
    for w in &r.warnings {
        eprintln!("warning: {w}");
    }
    if let Some(path) = &a.out {
        let report = P0Report::new(Echo::new("p0", a), &r);
        fs::write(
            path,
            serde_json::to_string_pretty(&report).expect("report serializes"),
        )?;
    }
    Ok(())
}

fn curve(a: &CurveArgs) -> CmdResult {
    check_p(a.p)?;
    let w = read_weight(&a.weight)?;
    let points = rearrangement(&w).ratio_curve(a.p, a.samples)?;
    let csv = curve_to_csv(&points);
    match &a.out {
        Some(path) => {
            fs::write(path, csv)?;
            println!("wrote {} samples to {}", points.len(), path.display());
        }
        None => print!("{csv}"),
    }
    Ok(())
}
