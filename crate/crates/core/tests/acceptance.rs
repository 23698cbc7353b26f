//! Acceptance suite. Runs every criterion and prints one line per criterion;
//! exits non-zero when any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use dyadic_rhi::exponents::{equation_residual, rearranged_constant};
use dyadic_rhi::rearrange::rearrangement;
use dyadic_rhi::trace::{lemma21_check, trace_theorem1, FractionalSet};
use dyadic_rhi::verify::{lambda_grid, SuiteConfig, T_GRID};
use dyadic_rhi::{
    improvement_range, p0_solve, power_weight_constant, DyadicWeight, LogUniform, NodeId, TreeSpace,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn theorem_corpus() -> SuiteConfig {
    SuiteConfig {
        count: 500,
        seed: 20_240_501,
        ks: vec![2, 4, 8],
        max_depth: 6,
        ps: vec![1.5, 2.0, 3.0],
        range: LogUniform::new(1e-3, 1e3).unwrap(),
    }
}

/// Prefix reverse Hölder constant of φ* against k·c − k + 1.
fn criterion_1() -> Outcome {
    let cfg = theorem_corpus();
    let mut worst: f64 = 0.0;
    let mut checks = 0;
    for (i, w) in cfg.corpus().enumerate() {
        let h = rearrangement(&w);
        for &p in &cfg.ps {
            let c = w.dyadic_rhi_constant(p).map_err(|e| e.to_string())?;
            let prefix = h.prefix_rhi_constant(p).map_err(|e| e.to_string())?;
            let bound = rearranged_constant(c.constant, w.space().k());
            worst = worst.max(prefix.constant / bound);
            checks += 1;
            ensure(prefix.constant <= bound * (1.0 + 1e-9), || {
                format!(
                    "weight {i}, p={p}: prefix {} > bound {bound}",
                    prefix.constant
                )
            })?;
        }
    }
    Ok(format!("{checks} checks, max prefix/bound = {worst:.6}"))
}

fn criterion_2() -> Outcome {
    let cfg = theorem_corpus();
    let mut worst: f64 = 0.0;
    let mut checks = 0;
    for (i, w) in cfg
        .corpus()
        .enumerate()
        .filter(|(_, w)| w.is_strictly_positive())
    {
        let h = rearrangement(&w);
        for &p in &cfg.ps {
            let c = w
                .dyadic_muckenhoupt_constant(p)
                .map_err(|e| e.to_string())?;
            let prefix = h
                .prefix_muckenhoupt_constant(p)
                .map_err(|e| e.to_string())?;
            let bound = rearranged_constant(c.constant, w.space().k());
            worst = worst.max(prefix.constant / bound);
            checks += 1;
            ensure(prefix.constant <= bound * (1.0 + 1e-9), || {
                format!(
                    "weight {i}, p={p}: prefix {} > bound {bound}",
                    prefix.constant
                )
            })?;
        }
    }
    Ok(format!("{checks} checks, max prefix/bound = {worst:.6}"))
}

/// Root ratio of the depth-20 power weight u^(−1/4), p = 2, computed
/// independently in 30-digit arithmetic.
const POWER_DEPTH20_RHI: f64 = 1.124_876_146_606_215;

fn criterion_3() -> Outcome {
    for p in [2.0, 3.0] {
        for alpha in [0.1, 0.2, 0.25] {
            if alpha * p >= 1.0 {
                continue;
            }
            let c = power_weight_constant(alpha, p).map_err(|e| e.to_string())?;
            let r = p0_solve(p, c).map_err(|e| e.to_string())?;
            ensure((r.p0 - 1.0 / alpha).abs() <= 1e-6, || {
                format!("p={p}, alpha={alpha}: p0 = {} != {}", r.p0, 1.0 / alpha)
            })?;
        }
    }
    let mut prev = 0.0;
    let mut last = None;
    for depth in 1..=20 {
        let w = DyadicWeight::gen_power(TreeSpace::new(2, depth).unwrap(), 0.25)
            .map_err(|e| e.to_string())?;
        let c = w.dyadic_rhi_constant(2.0).map_err(|e| e.to_string())?;
        ensure(c.constant >= prev, || {
            format!("depth {depth}: {} < {prev}", c.constant)
        })?;
        prev = c.constant;
        last = Some(c);
    }
    let c = last.unwrap();
    ensure(c.witness == NodeId::ROOT, || {
        format!("depth-20 witness {}", c.witness)
    })?;
    ensure(
        (c.constant - POWER_DEPTH20_RHI).abs() <= 1e-9 * POWER_DEPTH20_RHI,
        || {
            format!(
                "depth-20 constant {} != pinned {POWER_DEPTH20_RHI}",
                c.constant
            )
        },
    )?;
    ensure((c.constant - 1.125).abs() <= 0.02 * 1.125, || {
        format!("depth-20 constant {} not within 2% of 1.125", c.constant)
    })?;
    Ok(format!(
        "identity grid ok; depth-20 constant {:.12}",
        c.constant
    ))
}

fn criterion_4() -> Outcome {
    let r = p0_solve(2.0, 2.0).map_err(|e| e.to_string())?;
    let expected = 1.0 + 2f64.sqrt();
    ensure(
        (r.p0 - expected).abs() <= 1e-10 && r.residual <= 1e-12,
        || format!("{r:?}"),
    )?;
    ensure(equation_residual(r.p0, 2.0, 2.0).abs() <= 1e-12, || {
        "residual".into()
    })?;
    let r = improvement_range(2.0, 1.125, 2).map_err(|e| e.to_string())?;
    let expected = 1.0 + 5f64.sqrt();
    ensure(
        (r.p0 - expected).abs() <= 1e-10 && r.residual <= 1e-12,
        || format!("{r:?}"),
    )?;
    let r = p0_solve(2.0, 1.0).map_err(|e| e.to_string())?;
    ensure(r.p0 == f64::INFINITY, || format!("C = 1 gave {}", r.p0))?;
    Ok("1+√2, 1+√5, +∞".into())
}

fn trace_corpus(count: usize, seed: u64) -> SuiteConfig {
    SuiteConfig {
        count,
        seed,
        ks: vec![2, 3, 4, 8],
        max_depth: 4,
        ps: vec![1.5, 2.0, 3.0],
        range: LogUniform::default(),
    }
}

fn criterion_5() -> Outcome {
    let cfg = trace_corpus(200, 77);
    let mut traces = 0;
    let mut degenerate = 0;
    for (i, w) in cfg.corpus().enumerate() {
        for &p in &cfg.ps {
            for t in T_GRID {
                let tr = trace_theorem1(&w, p, t).map_err(|e| e.to_string())?;
                traces += 1;
                degenerate += tr.degenerate as usize;
                ensure(tr.all_hold(), || {
                    format!(
                        "weight {i}, p={p}, t={t}: {:?}",
                        tr.failures().collect::<Vec<_>>()
                    )
                })?;
            }
        }
    }
    let crafted = DyadicWeight::from_leaves(2, 2, vec![8.0, 2.0, 1.0, 1.0]).unwrap();
    let tr = trace_theorem1(&crafted, 2.0, 0.25).map_err(|e| e.to_string())?;
    ensure(tr.degenerate && tr.all_hold(), || {
        "crafted degenerate case".into()
    })?;
    let flat = DyadicWeight::constant(TreeSpace::new(4, 2).unwrap(), 3.0).unwrap();
    let tr = trace_theorem1(&flat, 3.0, 0.5).map_err(|e| e.to_string())?;
    ensure(tr.degenerate && tr.all_hold(), || {
        "constant degenerate case".into()
    })?;
    Ok(format!(
        "{traces} traces ({degenerate} degenerate) + 2 crafted degenerate"
    ))
}

fn criterion_6() -> Outcome {
    let x = DyadicWeight::from_leaves(2, 2, vec![4.0, 2.0, 1.0, 1.0]).unwrap();
    let e = FractionalSet::from_portions([(0, 1.0), (1, 1.0)]).unwrap();
    let e_hat = FractionalSet::from_portions([(0, 1.0), (2, 0.5)]).unwrap();
    let hand = lemma21_check(&x, &e, &e_hat, 2.0, 1e-12).map_err(|e| e.to_string())?;
    ensure(
        hand.hypotheses_hold && hand.lhs == 10.0 && hand.rhs == 11.0,
        || format!("{hand:?}"),
    )?;

    let mut instances = 0;
    let mut skipped = 0;
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let cfg = trace_corpus(5000, 606);
    for (i, w) in cfg.corpus().enumerate() {
        if instances >= 1000 {
            break;
        }
        let p = cfg.ps[i % cfg.ps.len()];
        let t = 1.0 - rng.gen::<f64>();
        let tr = trace_theorem1(&w, p, t).map_err(|e| e.to_string())?;
        if tr.degenerate {
            continue;
        }
        let r = lemma21_check(&w, &tr.top_set, &tr.gamma, p, 1e-12).map_err(|e| e.to_string())?;
        if !r.hypotheses_hold {
            skipped += 1;
            continue;
        }
        instances += 1;
        ensure(r.conclusion_holds, || {
            format!("weight {i}, p={p}, t={t}: {r:?}")
        })?;
    }
    ensure(instances >= 1000, || {
        format!("only {instances} instances satisfied the hypotheses")
    })?;
    Ok(format!(
        "hand example 10 <= 11; {instances} generated instances ({skipped} failed the hypotheses)"
    ))
}

fn criterion_7() -> Outcome {
    let cfg = SuiteConfig {
        count: 200,
        seed: 7,
        max_depth: 5,
        ..SuiteConfig::default()
    };
    let mut checks = 0;
    for (i, w) in cfg.corpus().enumerate() {
        for lambda in lambda_grid(&w, 20) {
            let r = w.weak_type_check(lambda).map_err(|e| e.to_string())?;
            checks += 1;
            ensure(r.lhs <= r.rhs + 1e-12 * r.rhs.max(r.lhs), || {
                format!("weight {i}: {r:?}")
            })?;
        }
    }
    Ok(format!("{checks} (weight, lambda) pairs"))
}

/// Direct enumeration of every node from the raw leaf slice.
fn brute_force_rhi(w: &DyadicWeight, p: f64) -> (f64, NodeId) {
    let s = w.space();
    let mut best = (f64::NEG_INFINITY, NodeId::ROOT);
    let mut all = Vec::new();
    for level in 0..=s.depth() {
        let len = s.k().pow(s.depth() - level);
        for index in 0..s.k().pow(level) {
            let cell = &w.leaves()[index * len..(index + 1) * len];
            let a1 = cell.iter().sum::<f64>() / len as f64;
            if a1 == 0.0 {
                continue;
            }
            let ap = cell.iter().map(|v| v.powf(p)).sum::<f64>() / len as f64;
            let r = ap / a1.powf(p);
            all.push((r, NodeId::new(level, index)));
            if r > best.0 {
                best = (r, NodeId::new(level, index));
            }
        }
    }
    // first node within 1e-12 of the maximum
    let cut = best.0 * (1.0 - 1e-12);
    let witness = all.iter().find(|(r, _)| *r >= cut).unwrap().1;
    (best.0, witness)
}

fn criterion_8() -> Outcome {
    let cfg = SuiteConfig {
        count: 200,
        seed: 8,
        ks: vec![2, 3, 4],
        max_depth: 4,
        ..SuiteConfig::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(88);
    let mut brute = 0;
    for (i, w) in cfg.corpus().enumerate() {
        let h = rearrangement(&w);
        let n = w.leaves().len();
        let mut lambdas: Vec<f64> = (0..95)
            .map(|_| LogUniform::default().sample(&mut rng))
            .collect();
        lambdas.extend(w.leaves().iter().take(5));
        for lambda in lambdas {
            let count = w.leaves().iter().filter(|&&v| v > lambda).count();
            let level_set = count as f64 / n as f64;
            let star = h
                .values()
                .iter()
                .rposition(|&v| v > lambda)
                .map_or(0.0, |j| h.breakpoints()[j]);
            ensure(level_set == star, || {
                format!("weight {i}, lambda {lambda}: {level_set} vs {star}")
            })?;
        }
        for q in [1.0, 2.0, 3.0] {
            let direct = w.leaves().iter().map(|v| v.powf(q)).sum::<f64>() / n as f64;
            let rearranged = h.integral(q);
            ensure((direct - rearranged).abs() <= 1e-12 * direct, || {
                format!("weight {i}, q={q}: {direct} vs {rearranged}")
            })?;
        }
        if w.space().depth() <= 3 {
            for p in [1.5, 2.0, 3.0] {
                let report = w.dyadic_rhi_constant(p).map_err(|e| e.to_string())?;
                let (c, witness) = brute_force_rhi(&w, p);
                brute += 1;
                ensure(report.witness == witness, || {
                    format!("weight {i}, p={p}: witness {} vs {witness}", report.witness)
                })?;
                ensure((report.constant - c).abs() <= 1e-14 * c, || {
                    format!("weight {i}, p={p}: {} vs {c}", report.constant)
                })?;
            }
        }
    }
    Ok(format!(
        "200 weights x 100 lambdas, {brute} brute-force enumerations"
    ))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("1 rearranged reverse Hölder bound k·c−k+1", criterion_1),
        ("2 rearranged Muckenhoupt bound k·c−k+1", criterion_2),
        ("3 power-weight sharpness chain", criterion_3),
        ("4 p0 closed forms", criterion_4),
        ("5 decomposition trace assertions", criterion_5),
        ("6 two-set power-average lemma", criterion_6),
        ("7 weak-type (1,1)", criterion_7),
        ("8 rearrangement and brute-force oracles", criterion_8),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(msg) => println!("PASS  criterion {name}: {msg} ({secs:.1}s)"),
            Err(msg) => {
                failed += 1;
                println!("FAIL  criterion {name}: {msg} ({secs:.1}s)");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
