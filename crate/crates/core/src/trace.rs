//! Stopping-time decomposition behind the rearrangement bound, executed on a
//! concrete weight with every intermediate inequality recorded.
//!
//! For a fixed t the construction takes A = (1/t)∫₀ᵗ φ*, the maximal nodes
//! S′ whose average exceeds A, their maximal fathers L′, and inside every
//! father F the union K of the S′ nodes hanging below it. K is padded with
//! low-valued parts of F until the average drops to exactly A; the padded
//! sets Γ_s and the top set E of measure t then feed the rearrangement lemma
//! check and the chain ending in avg(φ^p, Γ) ≤ [k(c−1)+1]·A^p.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{check_range, Error, Result};
use crate::rearrange::rearrangement;
use crate::tree::{NodeId, TreeSpace};
use crate::weight::DyadicWeight;

/// Relative slack of every recorded inequality.
pub const ASSERT_TOL: f64 = 1e-9;

/// Relative slack of the Γ-average equalities.
pub const GAMMA_TOL: f64 = 1e-10;

/// A measurable set made of leaf portions. A portion θ of a leaf is the
/// initial θ-fraction of the leaf cell, so two portions of the same leaf
/// intersect in min(θ₁, θ₂).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FractionalSet {
    portions: BTreeMap<usize, f64>,
}

impl FractionalSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_portions(portions: impl IntoIterator<Item = (usize, f64)>) -> Result<Self> {
        let mut set = Self::new();
        for (leaf, fraction) in portions {
            set.insert(leaf, fraction)?;
        }
        Ok(set)
    }

    pub fn from_node(space: &TreeSpace, node: NodeId) -> Result<Self> {
        let (start, len) = space.leaf_range(node)?;
        Ok(FractionalSet {
            portions: (start..start + len).map(|l| (l, 1.0)).collect(),
        })
    }

    /// Adds a portion of `leaf`; portions already present are replaced.
    pub fn insert(&mut self, leaf: usize, fraction: f64) -> Result<()> {
        check_range(
            "fraction",
            fraction,
            fraction > 0.0 && fraction <= 1.0,
            "0 < fraction <= 1",
        )?;
        self.portions.insert(leaf, fraction);
        Ok(())
    }

    /// Union of sets with disjoint leaf supports.
    pub fn extend(&mut self, other: &FractionalSet) {
        for (&leaf, &f) in &other.portions {
            let slot = self.portions.entry(leaf).or_insert(0.0);
            *slot = (*slot + f).min(1.0);
        }
    }

    pub fn fraction(&self, leaf: usize) -> f64 {
        self.portions.get(&leaf).copied().unwrap_or(0.0)
    }

    pub fn portions(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.portions.iter().map(|(&l, &f)| (l, f))
    }

    pub fn is_empty(&self) -> bool {
        self.portions.is_empty()
    }

    pub fn measure(&self, w: &DyadicWeight) -> f64 {
        self.portions.values().sum::<f64>() * w.space().leaf_measure() + 0.0
    }

    /// ∫_set φ^q dμ.
    pub fn integral(&self, w: &DyadicWeight, q: f64) -> f64 {
        let m = w.space().leaf_measure();
        self.portions
            .iter()
            .map(|(&l, &f)| f * m * w.leaves()[l].powf(q))
            .sum::<f64>()
            + 0.0
    }

    pub fn average(&self, w: &DyadicWeight, q: f64) -> Result<f64> {
        if self.is_empty() {
            return Err(Error::EmptySet);
        }
        Ok(self.integral(w, q) / self.measure(w))
    }
}

/// One recorded inequality or equality.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assertion {
    pub name: String,
    pub relation: Relation,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = "==")]
    Eq,
}

impl Assertion {
    fn new(name: impl Into<String>, relation: Relation, lhs: f64, rhs: f64, tol: f64) -> Self {
        let slack = tol * lhs.abs().max(rhs.abs());
        let holds = match relation {
            Relation::Le => lhs <= rhs + slack,
            Relation::Lt => lhs < rhs + slack,
            Relation::Gt => lhs > rhs - slack,
            Relation::Eq => (lhs - rhs).abs() <= slack,
        };
        Assertion {
            name: name.into(),
            relation,
            lhs,
            rhs,
            holds,
        }
    }
}

/// Maximal nodes whose average exceeds `threshold`, in leaf order.
///
/// They are pairwise disjoint and cover {Mφ > threshold}.
pub fn stopping_decomposition(w: &DyadicWeight, threshold: f64) -> Result<Vec<NodeId>> {
    check_range(
        "A",
        threshold,
        threshold > 0.0 && threshold.is_finite(),
        "A > 0",
    )?;
    let space = w.space();
    if w.node_average(NodeId::ROOT, 1.0)? > threshold {
        return Err(Error::RootAboveThreshold { threshold });
    }
    let mut out = Vec::new();
    let mut stack = vec![NodeId::ROOT];
    while let Some(node) = stack.pop() {
        if w.node_average(node, 1.0)? > threshold {
            out.push(node);
        } else if node.level < space.depth() {
            stack.extend(space.children(node)?.into_iter().rev());
        }
    }
    Ok(out)
}

/// Fathers of `s_prime`, reduced to the maximal ones, in leaf order.
pub fn select_fathers(space: &TreeSpace, s_prime: &[NodeId]) -> Result<Vec<NodeId>> {
    if s_prime.is_empty() {
        return Err(Error::EmptySet);
    }
    let fathers: HashSet<NodeId> = s_prime
        .iter()
        .map(|&n| space.father(n))
        .collect::<Result<_>>()?;
    let mut maximal: Vec<NodeId> = fathers
        .iter()
        .copied()
        .filter(|&f| {
            (0..f.level).all(|l| !fathers.contains(&space.ancestor(f, l).expect("valid level")))
        })
        .collect();
    maximal.sort_by_key(|&n| space.leaf_range(n).expect("valid node").0);
    Ok(maximal)
}

/// Γ_s = K_s ∪ B_s and Δ_s = father ∖ Γ_s.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaSplit {
    pub b: FractionalSet,
    pub gamma: FractionalSet,
    pub delta: FractionalSet,
}

/// Pads `k_set` inside `father` with the lowest-valued leaves (the last one
/// fractionally) until the average is exactly `threshold`.
pub fn build_gamma(
    w: &DyadicWeight,
    father: NodeId,
    k_set: &FractionalSet,
    threshold: f64,
) -> Result<GammaSplit> {
    let space = w.space();
    let (start, len) = space.leaf_range(father)?;
    if k_set.is_empty() {
        return Err(Error::EmptySet);
    }
    if k_set.portions().any(|(l, _)| l < start || l >= start + len) {
        return Err(Error::Precondition(format!(
            "K is not contained in {father}"
        )));
    }
    let k_avg = k_set.average(w, 1.0)?;
    let f_avg = w.node_average(father, 1.0)?;
    let slack = GAMMA_TOL * threshold;
    if k_avg < threshold - slack || f_avg > threshold + slack {
        return Err(Error::Precondition(format!(
            "need avg(K) = {k_avg} >= A = {threshold} >= avg(father) = {f_avg}"
        )));
    }

    let m = space.leaf_measure();
    let mut rest: Vec<(usize, f64)> = (start..start + len)
        .map(|l| (l, 1.0 - k_set.fraction(l)))
        .filter(|&(_, f)| f > 0.0)
        .collect();
    rest.sort_by(|a, b| {
        w.leaves()[a.0]
            .total_cmp(&w.leaves()[b.0])
            .then(a.0.cmp(&b.0))
    });

    // excess of ∫φ over A·μ on the growing set
    let mut excess = k_set.integral(w, 1.0) - threshold * k_set.measure(w);
    let mut b = FractionalSet::new();
    for &(leaf, avail) in &rest {
        if excess <= 0.0 {
            break;
        }
        let v = w.leaves()[leaf];
        let change = (v - threshold) * avail * m;
        if excess + change > 0.0 {
            b.insert(leaf, avail)?;
            excess += change;
        } else {
            let take = (excess / ((threshold - v) * m)).min(avail);
            if take > 0.0 {
                b.insert(leaf, take)?;
            }
            excess = 0.0;
        }
    }

    let mut gamma = k_set.clone();
    gamma.extend(&b);
    let delta = FractionalSet::from_portions(
        (start..start + len)
            .map(|l| (l, 1.0 - gamma.fraction(l)))
            .filter(|&(_, f)| f > 0.0),
    )?;
    Ok(GammaSplit { b, gamma, delta })
}

/// A set of measure t carrying the largest values of φ, filled greedily with
/// at most one fractional leaf.
pub fn build_top_set(w: &DyadicWeight, t: f64) -> Result<FractionalSet> {
    check_range("t", t, t > 0.0 && t <= 1.0, "0 < t <= 1")?;
    let n = w.leaves().len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| w.leaves()[j].total_cmp(&w.leaves()[i]).then(i.cmp(&j)));
    let mut cells = t * n as f64;
    if (cells - cells.round()).abs() <= 1e-12 * cells.max(1.0) {
        cells = cells.round();
    }
    let full = (cells.floor() as usize).min(n);
    let mut set = FractionalSet::new();
    for &leaf in &order[..full] {
        set.insert(leaf, 1.0)?;
    }
    let part = cells - full as f64;
    if part > 0.0 && full < n {
        set.insert(order[full], part)?;
    }
    Ok(set)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaCheck {
    pub average_e: f64,
    pub average_e_hat: f64,
    /// Largest value carried outside E ∩ Ê.
    pub max_outside_intersection: f64,
    /// Largest value carried by Ê ∖ E (−∞ when empty).
    pub max_e_hat_minus_e: f64,
    /// Smallest value carried by E.
    pub min_e: f64,
    pub equal_averages: bool,
    pub bounded_outside: bool,
    pub ordered: bool,
    pub hypotheses_hold: bool,
    /// avg(φ^p, E).
    pub lhs: f64,
    /// avg(φ^p, Ê).
    pub rhs: f64,
    pub conclusion_holds: bool,
}

/// Checks the hypotheses of the two-set power-average comparison for E, Ê
/// and evaluates its conclusion avg(φ^p, E) ≤ avg(φ^p, Ê).
pub fn lemma21_check(
    w: &DyadicWeight,
    e: &FractionalSet,
    e_hat: &FractionalSet,
    p: f64,
    tol: f64,
) -> Result<LemmaCheck> {
    check_range("p", p, p > 1.0 && p.is_finite(), "p > 1")?;
    let average_e = e.average(w, 1.0)?;
    let average_e_hat = e_hat.average(w, 1.0)?;
    let a = average_e;
    let leaves = w.leaves();

    let max_outside_intersection = (0..leaves.len())
        .filter(|&l| e.fraction(l).min(e_hat.fraction(l)) < 1.0)
        .map(|l| leaves[l])
        .fold(f64::NEG_INFINITY, f64::max);
    let max_e_hat_minus_e = e_hat
        .portions()
        .filter(|&(l, f)| f > e.fraction(l))
        .map(|(l, _)| leaves[l])
        .fold(f64::NEG_INFINITY, f64::max);
    let min_e = e
        .portions()
        .map(|(l, _)| leaves[l])
        .fold(f64::INFINITY, f64::min);

    let equal_averages = (average_e - average_e_hat).abs() <= tol * average_e.max(average_e_hat);
    let bounded_outside = max_outside_intersection <= a * (1.0 + tol);
    let ordered = max_e_hat_minus_e <= min_e * (1.0 + tol);
    let hypotheses_hold = equal_averages && bounded_outside && ordered;

    let lhs = e.average(w, p)?;
    let rhs = e_hat.average(w, p)?;
    Ok(LemmaCheck {
        average_e,
        average_e_hat,
        max_outside_intersection,
        max_e_hat_minus_e,
        min_e,
        equal_averages,
        bounded_outside,
        ordered,
        hypotheses_hold,
        lhs,
        rhs,
        conclusion_holds: lhs <= rhs * (1.0 + tol),
    })
}

/// The decomposition below one selected father.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FatherBlock {
    pub father: NodeId,
    pub father_measure: f64,
    pub father_average: f64,
    /// S′ nodes whose father lies inside `father`.
    pub k_nodes: Vec<NodeId>,
    pub k_measure: f64,
    pub k_average: f64,
    pub b: FractionalSet,
    pub gamma: FractionalSet,
    pub gamma_measure: f64,
    pub gamma_average: f64,
    pub delta: FractionalSet,
    pub delta_measure: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionTrace {
    pub k: usize,
    pub depth: u32,
    pub p: f64,
    pub t: f64,
    /// Dyadic reverse Hölder constant of the weight at exponent p.
    pub c: f64,
    /// k(c − 1) + 1.
    pub bound_factor: f64,
    /// (1/t) ∫₀ᵗ φ*.
    pub a_t: f64,
    /// (1/t) ∫₀ᵗ (φ*)^p.
    pub prefix_p_average: f64,
    /// E_t is empty and the direct argument applies.
    pub degenerate: bool,
    /// Leaves of {Mφ > A_t}.
    pub e_t: Vec<usize>,
    pub e_t_measure: f64,
    pub s_prime: Vec<NodeId>,
    pub l_prime: Vec<NodeId>,
    pub blocks: Vec<FatherBlock>,
    pub gamma: FractionalSet,
    pub gamma_measure: f64,
    pub gamma_p_average: f64,
    pub e_star_measure: f64,
    pub top_set: FractionalSet,
    /// Points where φ exceeds Mφ; always empty on a finite tree.
    pub omega: Vec<usize>,
    pub lemma: Option<LemmaCheck>,
    pub assertions: Vec<Assertion>,
}

impl DecompositionTrace {
    pub fn all_hold(&self) -> bool {
        self.assertions.iter().all(|a| a.holds)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Assertion> {
        self.assertions.iter().filter(|a| !a.holds)
    }

    pub fn assertion(&self, name: &str) -> Option<&Assertion> {
        self.assertions.iter().find(|a| a.name == name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("trace serializes")
    }
}

/// Runs the full decomposition for one (weight, p, t).
pub fn trace_theorem1(w: &DyadicWeight, p: f64, t: f64) -> Result<DecompositionTrace> {
    check_range("t", t, t > 0.0 && t <= 1.0, "0 < t <= 1")?;
    let c = w.dyadic_rhi_constant(p)?.constant;
    let space = *w.space();
    let k = space.k();
    let bound_factor = k as f64 * (c - 1.0) + 1.0;

    let h = rearrangement(w);
    let mut a_t = h.prefix_average(t, 1.0)?;
    let prefix_p_average = h.prefix_average(t, p)?;
    // at t = 1 both sides are the total integral; absorb summation-order noise
    let root_avg = w.node_average(NodeId::ROOT, 1.0)?;
    if root_avg > a_t && root_avg - a_t <= 1e-12 * a_t {
        a_t = root_avg;
    }
    let bound = bound_factor * a_t.powf(p);
    let top_set = build_top_set(w, t)?;
    let m = space.leaf_measure();

    let mut asserts = vec![Assertion::new(
        "top set average = A_t",
        Relation::Eq,
        top_set.average(w, 1.0)?,
        a_t,
        GAMMA_TOL,
    )];

    let maximal = w.maximal_function();
    let e_t: Vec<usize> = (0..maximal.len()).filter(|&l| maximal[l] > a_t).collect();
    let e_t_measure = e_t.len() as f64 * m;
    let s_prime = stopping_decomposition(w, a_t)?;
    let covered: usize = s_prime.iter().map(|&n| space.block_len(n.level)).sum();
    asserts.push(Assertion::new(
        "S' covers E_t",
        Relation::Eq,
        covered as f64 * m,
        e_t_measure,
        0.0,
    ));

    let mut trace = DecompositionTrace {
        k,
        depth: space.depth(),
        p,
        t,
        c,
        bound_factor,
        a_t,
        prefix_p_average,
        degenerate: e_t.is_empty(),
        e_t,
        e_t_measure,
        s_prime,
        l_prime: Vec::new(),
        blocks: Vec::new(),
        gamma: FractionalSet::new(),
        gamma_measure: 0.0,
        gamma_p_average: 0.0,
        e_star_measure: 0.0,
        top_set,
        omega: Vec::new(),
        lemma: None,
        assertions: Vec::new(),
    };

    if trace.degenerate {
        // Mφ ≤ A_t everywhere, so φ* ≤ A_t and the prefix p-average is at most A_t^p
        let max_value = w.leaves().iter().copied().fold(0.0, f64::max);
        asserts.push(Assertion::new(
            "max φ <= A_t",
            Relation::Le,
            max_value,
            a_t,
            ASSERT_TOL,
        ));
        asserts.push(Assertion::new(
            "prefix p-average <= [k(c-1)+1] A_t^p",
            Relation::Le,
            prefix_p_average,
            bound,
            ASSERT_TOL,
        ));
        trace.assertions = asserts;
        return Ok(trace);
    }

    trace.l_prime = select_fathers(&space, &trace.s_prime)?;
    let owner: BTreeMap<NodeId, usize> = trace
        .l_prime
        .iter()
        .enumerate()
        .map(|(s, &f)| (f, s))
        .collect();
    let mut k_nodes: Vec<Vec<NodeId>> = vec![Vec::new(); trace.l_prime.len()];
    for &node in &trace.s_prime {
        let father = space.father(node)?;
        let s = (0..=father.level)
            .find_map(|l| owner.get(&space.ancestor(father, l).expect("valid level")))
            .ok_or_else(|| Error::Precondition(format!("no selected father above {node}")))?;
        k_nodes[*s].push(node);
    }

    let a_p = a_t.powf(p);
    let mut gamma = FractionalSet::new();
    for (s, (&father, nodes)) in trace.l_prime.iter().zip(k_nodes).enumerate() {
        let mut k_set = FractionalSet::new();
        for &n in &nodes {
            k_set.extend(&FractionalSet::from_node(&space, n)?);
        }
        let father_measure = space.node_measure(father)?;
        let father_average = w.node_average(father, 1.0)?;
        let k_measure = k_set.measure(w);
        let k_average = k_set.average(w, 1.0)?;
        let tag = |name: &str| format!("{name} [s={s}]");
        asserts.push(Assertion::new(
            tag("(3.5) avg(father) <= A_t"),
            Relation::Le,
            father_average,
            a_t,
            ASSERT_TOL,
        ));
        asserts.push(Assertion::new(
            tag("(3.6) avg(K) > A_t"),
            Relation::Gt,
            k_average,
            a_t,
            ASSERT_TOL,
        ));
        asserts.push(Assertion::new(
            tag("(3.7) mu(father)/k <= mu(K)"),
            Relation::Le,
            father_measure / k as f64,
            k_measure,
            ASSERT_TOL,
        ));
        asserts.push(Assertion::new(
            tag("(3.7) mu(K) < mu(father)"),
            Relation::Lt,
            k_measure,
            father_measure,
            0.0,
        ));

        let split = build_gamma(w, father, &k_set, a_t)?;
        let gamma_measure = split.gamma.measure(w);
        let gamma_average = split.gamma.average(w, 1.0)?;
        asserts.push(Assertion::new(
            tag("avg(Gamma_s) = A_t"),
            Relation::Eq,
            gamma_average,
            a_t,
            GAMMA_TOL,
        ));

        // lower bound for ∫_Δ φ^p and the resulting bound on p_s
        let father_int = father_average * father_measure;
        let father_p_int = w.node_average(father, p)? * father_measure;
        let delta_p_int = split.delta.integral(w, p);
        let father_term = father_int.powf(p) / father_measure.powf(p - 1.0);
        asserts.push(Assertion::new(
            tag("(3.13) int_Delta φ^p lower bound"),
            Relation::Le,
            father_term - gamma_measure * a_p,
            delta_p_int,
            ASSERT_TOL,
        ));
        asserts.push(Assertion::new(
            tag("(3.15) p_s upper bound"),
            Relation::Le,
            father_p_int - delta_p_int,
            (c - 1.0) * father_term + gamma_measure * a_p,
            ASSERT_TOL,
        ));

        gamma.extend(&split.gamma);
        trace.blocks.push(FatherBlock {
            father,
            father_measure,
            father_average,
            k_nodes: nodes,
            k_measure,
            k_average,
            delta_measure: split.delta.measure(w),
            b: split.b,
            gamma: split.gamma,
            gamma_measure,
            gamma_average,
            delta: split.delta,
        });
    }

    let gamma_measure = gamma.measure(w);
    let gamma_p_average = gamma.average(w, p)?;
    let e_star_measure: f64 = trace.blocks.iter().map(|b| b.father_measure).sum();
    asserts.push(Assertion::new(
        "avg(Gamma) = A_t",
        Relation::Eq,
        gamma.average(w, 1.0)?,
        a_t,
        GAMMA_TOL,
    ));
    asserts.push(Assertion::new(
        "mu(Gamma) <= t",
        Relation::Le,
        gamma_measure,
        t,
        ASSERT_TOL,
    ));
    asserts.push(Assertion::new(
        "mu(E_t) <= mu(Gamma)",
        Relation::Le,
        e_t_measure,
        gamma_measure,
        ASSERT_TOL,
    ));

    let lemma = lemma21_check(w, &trace.top_set, &gamma, p, ASSERT_TOL)?;
    asserts.push(Assertion::new(
        "(2.2) avg(E) = avg(Gamma)",
        Relation::Eq,
        lemma.average_e,
        lemma.average_e_hat,
        ASSERT_TOL,
    ));
    asserts.push(Assertion::new(
        "(2.3) φ <= A_t off E ∩ Gamma",
        Relation::Le,
        lemma.max_outside_intersection,
        lemma.average_e,
        ASSERT_TOL,
    ));
    asserts.push(Assertion::new(
        "(2.4) φ on Gamma\\E <= φ on E",
        Relation::Le,
        lemma.max_e_hat_minus_e,
        lemma.min_e,
        ASSERT_TOL,
    ));
    asserts.push(Assertion::new(
        "(3.9) prefix p-average <= avg(φ^p, Gamma)",
        Relation::Le,
        prefix_p_average,
        gamma_p_average,
        ASSERT_TOL,
    ));
    asserts.push(Assertion::new(
        "(3.17) avg(φ^p, Gamma) <= [(c-1) mu(E*)/mu(Gamma) + 1] A_t^p",
        Relation::Le,
        gamma_p_average,
        ((c - 1.0) * e_star_measure / gamma_measure + 1.0) * a_p,
        ASSERT_TOL,
    ));
    asserts.push(Assertion::new(
        "mu(E*) <= k mu(E_t)",
        Relation::Le,
        e_star_measure,
        k as f64 * e_t_measure,
        ASSERT_TOL,
    ));
    asserts.push(Assertion::new(
        "mu(E*) <= k mu(Gamma)",
        Relation::Le,
        e_star_measure,
        k as f64 * gamma_measure,
        ASSERT_TOL,
    ));
    asserts.push(Assertion::new(
        "avg(φ^p, Gamma) <= [k(c-1)+1] A_t^p",
        Relation::Le,
        gamma_p_average,
        bound,
        ASSERT_TOL,
    ));
    asserts.push(Assertion::new(
        "prefix p-average <= [k(c-1)+1] A_t^p",
        Relation::Le,
        prefix_p_average,
        bound,
        ASSERT_TOL,
    ));

    trace.gamma = gamma;
    trace.gamma_measure = gamma_measure;
    trace.gamma_p_average = gamma_p_average;
    trace.e_star_measure = e_star_measure;
    trace.lemma = Some(lemma);
    trace.assertions = asserts;
    Ok(trace)
}
