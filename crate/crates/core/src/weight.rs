//! Weights on a [`TreeSpace`], their node averages, and the tree-indexed
//! reverse Hölder, Muckenhoupt and maximal-function quantities.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_range, Error, Result};
use crate::tree::{NodeId, TreeSpace};

/// Relative tolerance used for ties and equality comparisons.
pub const REL_TOL: f64 = 1e-12;

/// A non-negative function, constant on every leaf cell of a tree.
#[derive(Debug, Clone, PartialEq)]
pub struct DyadicWeight {
    space: TreeSpace,
    leaves: Vec<f64>,
    // sums[level][index] = sum of the leaf values below the node
    sums: Vec<Vec<f64>>,
}

/// Supremum of a node ratio together with the node attaining it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RhiReport {
    pub exponent: f64,
    pub constant: f64,
    pub witness: NodeId,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeakTypeCheck {
    pub lambda: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// On-disk representation of a weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightFile {
    pub k: usize,
    pub depth: u32,
    pub leaves: Vec<f64>,
}

/// Range of a log-uniform value distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogUniform {
    pub low: f64,
    pub high: f64,
}

impl Default for LogUniform {
    fn default() -> Self {
        LogUniform {
            low: 1e-3,
            high: 1e3,
        }
    }
}

impl LogUniform {
    pub fn new(low: f64, high: f64) -> Result<Self> {
        if !(low.is_finite() && high.is_finite() && low > 0.0 && low <= high) {
            return Err(Error::OutOfRange {
                name: "range",
                value: low,
                expected: "0 < low <= high < inf",
            });
        }
        Ok(LogUniform { low, high })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.low == self.high {
            return self.low;
        }
        let v = rng.gen_range(self.low.ln()..self.high.ln()).exp();
        v.clamp(self.low, self.high)
    }
}

/// Bottom-up sums of `values`, one vector per level (root first).
fn pyramid(space: &TreeSpace, values: Vec<f64>) -> Vec<Vec<f64>> {
    let k = space.k();
    let mut levels = vec![values];
    for _ in 0..space.depth() {
        let below = levels.last().unwrap();
        let up = below.chunks_exact(k).map(|c| c.iter().sum()).collect();
        levels.push(up);
    }
    levels.reverse();
    levels
}

/// Maximum of `ratio` over all nodes; witness is the first node (lowest level,
/// then lowest index) within relative [`REL_TOL`] of the maximum.
fn sup_over_nodes(space: &TreeSpace, ratio: impl Fn(u32, usize) -> Option<f64>) -> (f64, NodeId) {
    let mut best = f64::NEG_INFINITY;
    for l in 0..=space.depth() {
        for i in 0..space.level_width(l) {
            if let Some(r) = ratio(l, i) {
                best = best.max(r);
            }
        }
    }
    let cut = best - REL_TOL * best.abs();
    for l in 0..=space.depth() {
        for i in 0..space.level_width(l) {
            if ratio(l, i).is_some_and(|r| r >= cut) {
                return (best, NodeId::new(l, i));
            }
        }
    }
    unreachable!("maximum is attained")
}

impl DyadicWeight {
    pub fn new(space: TreeSpace, values: Vec<f64>) -> Result<Self> {
        if values.len() != space.n_leaves() {
            return Err(Error::LengthMismatch {
                expected: space.n_leaves(),
                got: values.len(),
            });
        }
        if let Some((index, &value)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v >= 0.0))
        {
            return Err(Error::InvalidLeafValue { index, value });
        }
        let sums = pyramid(&space, values.clone());
        Ok(DyadicWeight {
            space,
            leaves: values,
            sums,
        })
    }

    pub fn from_leaves(k: usize, depth: u32, values: Vec<f64>) -> Result<Self> {
        Self::new(TreeSpace::new(k, depth)?, values)
    }

    pub fn space(&self) -> &TreeSpace {
        &self.space
    }

    pub fn leaves(&self) -> &[f64] {
        &self.leaves
    }

    pub fn total_integral(&self) -> f64 {
        self.sums[0][0] * self.space.leaf_measure()
    }

    /// ∫_I φ dμ.
    pub fn node_integral(&self, node: NodeId) -> Result<f64> {
        let m = self.space.node_measure(node)?;
        Ok(self.average_unchecked(node.level, node.index) * m)
    }

    fn average_unchecked(&self, level: u32, index: usize) -> f64 {
        self.sums[level as usize][index] / self.space.block_len(level) as f64
    }

    /// (1/μ(I)) ∫_I φ^q dμ.
    pub fn node_average(&self, node: NodeId, exponent: f64) -> Result<f64> {
        let (start, len) = self.space.leaf_range(node)?;
        if exponent == 1.0 {
            return Ok(self.average_unchecked(node.level, node.index));
        }
        let cell = &self.leaves[start..start + len];
        if exponent < 0.0 && cell.contains(&0.0) {
            return Err(Error::ZeroWithNegativeExponent { exponent });
        }
        Ok(cell.iter().map(|v| v.powf(exponent)).sum::<f64>() / len as f64)
    }

    pub fn is_strictly_positive(&self) -> bool {
        self.leaves.iter().all(|&v| v > 0.0)
    }

    /// sup over tree nodes of avg(φ^p)/avg(φ)^p.
    ///
    /// Nodes where φ vanishes identically are skipped.
    pub fn dyadic_rhi_constant(&self, p: f64) -> Result<RhiReport> {
        check_range("p", p, p > 1.0 && p.is_finite(), "p > 1")?;
        if self.sums[0][0] == 0.0 {
            return Err(Error::ZeroWeight);
        }
        let powered = pyramid(&self.space, self.leaves.iter().map(|v| v.powf(p)).collect());
        let (constant, witness) = sup_over_nodes(&self.space, |l, i| {
            let s1 = self.sums[l as usize][i];
            if s1 == 0.0 {
                return None;
            }
            let n = self.space.block_len(l) as f64;
            Some((powered[l as usize][i] / n) / (s1 / n).powf(p))
        });
        Ok(RhiReport {
            exponent: p,
            constant,
            witness,
        })
    }

    /// sup over tree nodes of avg(φ)·avg(φ^(−1/(p−1)))^(p−1).
    pub fn dyadic_muckenhoupt_constant(&self, p: f64) -> Result<RhiReport> {
        check_range("p", p, p > 1.0 && p.is_finite(), "p > 1")?;
        let dual = -1.0 / (p - 1.0);
        if !self.is_strictly_positive() {
            return Err(Error::ZeroWithNegativeExponent { exponent: dual });
        }
        let powered = pyramid(
            &self.space,
            self.leaves.iter().map(|v| v.powf(dual)).collect(),
        );
        let (constant, witness) = sup_over_nodes(&self.space, |l, i| {
            let n = self.space.block_len(l) as f64;
            Some((self.sums[l as usize][i] / n) * (powered[l as usize][i] / n).powf(p - 1.0))
        });
        Ok(RhiReport {
            exponent: p,
            constant,
            witness,
        })
    }

    /// Dyadic maximal function, one value per leaf.
    pub fn maximal_function(&self) -> Vec<f64> {
        let k = self.space.k();
        let mut current = vec![self.average_unchecked(0, 0)];
        for l in 1..=self.space.depth() {
            current = (0..self.space.level_width(l))
                .map(|i| current[i / k].max(self.average_unchecked(l, i)))
                .collect();
        }
        current
    }

    /// Weak-type (1,1) inequality μ({Mφ > λ}) ≤ (1/λ) ∫_{Mφ>λ} φ dμ.
    pub fn weak_type_check(&self, lambda: f64) -> Result<WeakTypeCheck> {
        check_range(
            "lambda",
            lambda,
            lambda > 0.0 && lambda.is_finite(),
            "lambda > 0",
        )?;
        let m = self.space.leaf_measure();
        let (count, mass) = self
            .maximal_function()
            .iter()
            .zip(&self.leaves)
            .filter(|(mf, _)| **mf > lambda)
            .fold((0usize, 0.0), |(c, s), (_, v)| (c + 1, s + v));
        let lhs = count as f64 * m;
        let rhs = mass * m / lambda;
        let holds = lhs <= rhs + REL_TOL * lhs.max(rhs);
        Ok(WeakTypeCheck {
            lambda,
            lhs,
            rhs,
            holds,
        })
    }

    /// Leaf-cell averages of u^(−α) on (0,1], leaves in natural order.
    pub fn gen_power(space: TreeSpace, alpha: f64) -> Result<Self> {
        check_range("alpha", alpha, alpha > 0.0 && alpha < 1.0, "0 < alpha < 1")?;
        let beta = 1.0 - alpha;
        let n = space.n_leaves() as f64;
        let scale = n.powf(alpha);
        let values = (0..space.n_leaves())
            .map(|j| {
                if j == 0 {
                    return scale / beta;
                }
                // (j+1)^β − j^β without cancellation
                let j = j as f64;
                let diff = j.powf(beta) * (beta * (1.0 / j).ln_1p()).exp_m1();
                scale * diff / beta
            })
            .collect();
        Self::new(space, values)
    }

    pub fn gen_random(space: TreeSpace, seed: u64, range: LogUniform) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::gen_random_with(space, &mut rng, range)
    }

    pub fn gen_random_with<R: Rng + ?Sized>(
        space: TreeSpace,
        rng: &mut R,
        range: LogUniform,
    ) -> Result<Self> {
        let values = (0..space.n_leaves()).map(|_| range.sample(rng)).collect();
        Self::new(space, values)
    }

    pub fn constant(space: TreeSpace, value: f64) -> Result<Self> {
        Self::new(space, vec![value; space.n_leaves()])
    }

    pub fn to_file(&self) -> WeightFile {
        WeightFile {
            k: self.space.k(),
            depth: self.space.depth(),
            leaves: self.leaves.clone(),
        }
    }

    pub fn from_file(file: WeightFile) -> Result<Self> {
        Self::from_leaves(file.k, file.depth, file.leaves)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_file()).expect("weight serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: WeightFile =
            serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
        Self::from_file(file)
    }
}
