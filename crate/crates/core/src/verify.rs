//! Seeded property suites over random weights.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{check_range, Result};
use crate::exponents::rearranged_constant;
use crate::rearrange::rearrangement;
use crate::trace::{lemma21_check, trace_theorem1};
use crate::tree::TreeSpace;
use crate::weight::{DyadicWeight, LogUniform, WeightFile};

/// Relative slack of the rearrangement bounds.
pub const BOUND_TOL: f64 = 1e-9;

/// Relative slack of the lemma conclusion and the weak-type inequality.
pub const EXACT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Theorem1,
    Muckenhoupt,
    Lemma,
    WeakType,
    Decomposition,
}

#[derive(Debug, Clone)]
pub struct SuiteConfig {
    pub count: usize,
    pub seed: u64,
    pub ks: Vec<usize>,
    /// Depths are drawn uniformly from 1..=max_depth.
    pub max_depth: u32,
    pub ps: Vec<f64>,
    pub range: LogUniform,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            count: 100,
            seed: 1,
            ks: vec![2, 4, 8],
            max_depth: 4,
            ps: vec![1.5, 2.0, 3.0],
            range: LogUniform::default(),
        }
    }
}

impl SuiteConfig {
    pub fn validate(&self) -> Result<()> {
        check_range("count", self.count as f64, self.count > 0, "count > 0")?;
        check_range("k", 0.0, !self.ks.is_empty(), "at least one k")?;
        for &k in &self.ks {
            check_range("k", k as f64, k >= 2, "k >= 2")?;
        }
        check_range("p", 0.0, !self.ps.is_empty(), "at least one p")?;
        for &p in &self.ps {
            check_range("p", p, p > 1.0 && p.is_finite(), "p > 1")?;
        }
        check_range(
            "depth",
            self.max_depth as f64,
            self.max_depth >= 1,
            "depth >= 1",
        )?;
        for &k in &self.ks {
            TreeSpace::new(k, self.max_depth)?;
        }
        Ok(())
    }

    /// The seeded weights of the run, in index order.
    pub fn corpus(&self) -> impl Iterator<Item = DyadicWeight> + '_ {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        (0..self.count).map(move |_| {
            let k = self.ks[rng.gen_range(0..self.ks.len())];
            let depth = rng.gen_range(1..=self.max_depth);
            let space = TreeSpace::new(k, depth).expect("validated shape");
            DyadicWeight::gen_random_with(space, &mut rng, self.range).expect("valid range")
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Counterexample {
    pub index: usize,
    pub weight: WeightFile,
    pub detail: serde_json::Value,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteOutcome {
    pub suite: Suite,
    pub weights: usize,
    pub checks: usize,
    pub counterexample: Option<Counterexample>,
}

impl SuiteOutcome {
    pub fn passed(&self) -> bool {
        self.counterexample.is_none()
    }
}

/// λ values log-spaced across the value range of `w`.
pub fn lambda_grid(w: &DyadicWeight, n: usize) -> Vec<f64> {
    let lo = w
        .leaves()
        .iter()
        .copied()
        .filter(|&v| v > 0.0)
        .fold(f64::INFINITY, f64::min);
    let hi = w.leaves().iter().copied().fold(0.0, f64::max);
    if !lo.is_finite() {
        return vec![1.0];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|j| (a + (b - a) * (j as f64 + 0.5) / n as f64).exp())
        .collect()
}

pub const T_GRID: [f64; 9] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];

/// Runs `suite`, stopping at the first counterexample.
pub fn run_suite(suite: Suite, config: &SuiteConfig) -> Result<SuiteOutcome> {
    config.validate()?;
    let mut checks = 0;
    let mut weights = 0;
    let mut pick_t = ChaCha8Rng::seed_from_u64(config.seed ^ 0x5eed);
    for (index, w) in config.corpus().enumerate() {
        weights += 1;
        let failure = match suite {
            Suite::Theorem1 => check_theorem1(&w, &config.ps, &mut checks)?,
            Suite::Muckenhoupt => check_muckenhoupt(&w, &config.ps, &mut checks)?,
            Suite::WeakType => check_weak_type(&w, &mut checks)?,
            Suite::Decomposition => check_decomposition(&w, &config.ps, &mut checks)?,
            Suite::Lemma => {
                let ts: Vec<f64> = (0..4).map(|_| 1.0 - pick_t.gen::<f64>()).collect();
                check_lemma(&w, &config.ps, &ts, &mut checks)?
            }
        };
        if let Some(detail) = failure {
            return Ok(SuiteOutcome {
                suite,
                weights,
                checks,
                counterexample: Some(Counterexample {
                    index,
                    weight: w.to_file(),
                    detail,
                }),
            });
        }
    }
    Ok(SuiteOutcome {
        suite,
        weights,
        checks,
        counterexample: None,
    })
}

type Check = Result<Option<serde_json::Value>>;

pub fn check_theorem1(w: &DyadicWeight, ps: &[f64], checks: &mut usize) -> Check {
    let h = rearrangement(w);
    for &p in ps {
        let c = w.dyadic_rhi_constant(p)?;
        let prefix = h.prefix_rhi_constant(p)?;
        let bound = rearranged_constant(c.constant, w.space().k());
        *checks += 1;
        if prefix.constant > bound * (1.0 + BOUND_TOL) {
            return Ok(Some(
                serde_json::json!({ "p": p, "dyadic": c, "prefix": prefix, "bound": bound }),
            ));
        }
    }
    Ok(None)
}

pub fn check_muckenhoupt(w: &DyadicWeight, ps: &[f64], checks: &mut usize) -> Check {
    if !w.is_strictly_positive() {
        return Ok(None);
    }
    let h = rearrangement(w);
    for &p in ps {
        let c = w.dyadic_muckenhoupt_constant(p)?;
        let prefix = h.prefix_muckenhoupt_constant(p)?;
        let bound = rearranged_constant(c.constant, w.space().k());
        *checks += 1;
        if prefix.constant > bound * (1.0 + BOUND_TOL) {
            return Ok(Some(
                serde_json::json!({ "p": p, "dyadic": c, "prefix": prefix, "bound": bound }),
            ));
        }
    }
    Ok(None)
}

pub fn check_weak_type(w: &DyadicWeight, checks: &mut usize) -> Check {
    for lambda in lambda_grid(w, 20) {
        let r = w.weak_type_check(lambda)?;
        *checks += 1;
        if !r.holds {
            return Ok(Some(serde_json::to_value(r).expect("serializable")));
        }
    }
    Ok(None)
}

pub fn check_decomposition(w: &DyadicWeight, ps: &[f64], checks: &mut usize) -> Check {
    for &p in ps {
        for t in T_GRID.into_iter().chain([1.0]) {
            let tr = trace_theorem1(w, p, t)?;
            *checks += 1;
            if !tr.all_hold() {
                let failed: Vec<_> = tr.failures().cloned().collect();
                return Ok(Some(
                    serde_json::json!({ "p": p, "t": t, "failed": failed }),
                ));
            }
        }
    }
    Ok(None)
}

/// Lemma instances pairing the top set E with the padded set Γ of a trace.
pub fn check_lemma(w: &DyadicWeight, ps: &[f64], ts: &[f64], checks: &mut usize) -> Check {
    for &p in ps {
        for &t in ts {
            let tr = trace_theorem1(w, p, t)?;
            if tr.degenerate {
                continue;
            }
            let r = lemma21_check(w, &tr.top_set, &tr.gamma, p, EXACT_TOL)?;
            if !r.hypotheses_hold {
                continue;
            }
            *checks += 1;
            if !r.conclusion_holds {
                return Ok(Some(serde_json::json!({ "p": p, "t": t, "lemma": r })));
            }
        }
    }
    Ok(None)
}
