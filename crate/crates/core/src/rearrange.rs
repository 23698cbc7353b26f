//! Non-increasing rearrangements as exact step functions, and reverse Hölder
//! and Muckenhoupt constants over the prefix intervals (0, t].

use serde::{Deserialize, Serialize};

use crate::error::{check_range, Error, Result};
use crate::weight::{DyadicWeight, REL_TOL};

/// Absolute t-resolution of the interior search inside a step.
pub const T_TOL: f64 = 1e-10;

/// A non-increasing, left-continuous step function on (0, 1].
///
/// Step `i` carries `values[i]` on `(ends[i-1], ends[i]]`, with `ends[-1] = 0`
/// and the last end equal to 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepFunction {
    ends: Vec<f64>,
    values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrefixReport {
    pub exponent: f64,
    pub constant: f64,
    pub witness_t: f64,
}

impl StepFunction {
    pub fn new(ends: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if ends.is_empty() || ends.len() != values.len() {
            return Err(Error::InvalidStepFunction("need one value per step"));
        }
        let mut prev = 0.0;
        for &e in &ends {
            if e.is_nan() || e <= prev {
                return Err(Error::InvalidStepFunction(
                    "breakpoints must increase strictly",
                ));
            }
            prev = e;
        }
        if (prev - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidStepFunction("last breakpoint must be 1"));
        }
        if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidStepFunction(
                "values must be finite and non-negative",
            ));
        }
        if values.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::InvalidStepFunction("values must be non-increasing"));
        }
        let mut ends = ends;
        *ends.last_mut().unwrap() = 1.0;
        Ok(StepFunction { ends, values })
    }

    pub fn constant(value: f64) -> Result<Self> {
        Self::new(vec![1.0], vec![value])
    }

    /// Right ends of the steps.
    pub fn breakpoints(&self) -> &[f64] {
        &self.ends
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn start(&self, i: usize) -> f64 {
        if i == 0 {
            0.0
        } else {
            self.ends[i - 1]
        }
    }

    /// Value at `t` (left-continuous).
    pub fn eval(&self, t: f64) -> f64 {
        let i = self.ends.partition_point(|&e| e < t).min(self.len() - 1);
        self.values[i]
    }

    /// Expands the function back into `n` equal cells.
    pub fn to_leaf_values(&self, n: usize) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(n);
        for (i, &v) in self.values.iter().enumerate() {
            let upto = self.ends[i] * n as f64;
            if (upto - upto.round()).abs() > 1e-9 {
                return Err(Error::InvalidStepFunction(
                    "breakpoints are not multiples of 1/n",
                ));
            }
            out.resize(upto.round() as usize, v);
        }
        Ok(out)
    }

    /// ∫₀¹ h^q.
    pub fn integral(&self, q: f64) -> f64 {
        self.values
            .iter()
            .enumerate()
            .map(|(i, v)| v.powf(q) * (self.ends[i] - self.start(i)))
            .sum()
    }

    fn check_negative_exponent(&self, q: f64) -> Result<()> {
        if q < 0.0 && self.values.contains(&0.0) {
            return Err(Error::ZeroWithNegativeExponent { exponent: q });
        }
        Ok(())
    }

    /// (1/t) ∫₀ᵗ h^q(u) du, integrated exactly.
    ///
    /// Evaluated as v^q + (1/t) ∫₀^a (h^q − v^q) for the step (a, b] holding
    /// t, so the result is exactly v^q on the first step and never below it.
    pub fn prefix_average(&self, t: f64, q: f64) -> Result<f64> {
        check_range("t", t, t > 0.0 && t <= 1.0, "0 < t <= 1")?;
        self.check_negative_exponent(q)?;
        let i = self.ends.partition_point(|&e| e < t).min(self.len() - 1);
        let vq = self.values[i].powf(q);
        let excess: f64 = (0..i)
            .map(|j| (self.values[j].powf(q) - vq) * (self.ends[j] - self.start(j)))
            .sum();
        Ok(vq + excess / t)
    }

    /// sup over t of (1/t ∫₀ᵗ h^q) / (1/t ∫₀ᵗ h)^q.
    pub fn prefix_rhi_constant(&self, q: f64) -> Result<PrefixReport> {
        check_range("q", q, q > 1.0 && q.is_finite(), "q > 1")?;
        if self.values[0] == 0.0 {
            return Err(Error::ZeroWeight);
        }
        let (constant, witness_t) = self.sup_prefix(PrefixRatio::reverse_holder(q));
        Ok(PrefixReport {
            exponent: q,
            constant,
            witness_t,
        })
    }

    /// sup over t of avg(h)·avg(h^(−1/(p−1)))^(p−1) on (0, t].
    pub fn prefix_muckenhoupt_constant(&self, p: f64) -> Result<PrefixReport> {
        check_range("p", p, p > 1.0 && p.is_finite(), "p > 1")?;
        let ratio = PrefixRatio::muckenhoupt(p);
        self.check_negative_exponent(ratio.q)?;
        let (constant, witness_t) = self.sup_prefix(ratio);
        Ok(PrefixReport {
            exponent: p,
            constant,
            witness_t,
        })
    }

    /// Samples of the reverse Hölder ratio on a grid holding every breakpoint
    /// and the uniform points j/n, j = 1..=n.
    pub fn ratio_curve(&self, q: f64, n_samples: usize) -> Result<Vec<(f64, f64)>> {
        if n_samples < 2 {
            return Err(Error::OutOfRange {
                name: "samples",
                value: n_samples as f64,
                expected: "at least 2",
            });
        }
        if self.values[0] == 0.0 {
            return Err(Error::ZeroWeight);
        }
        let mut grid: Vec<f64> = (1..=n_samples)
            .map(|j| j as f64 / n_samples as f64)
            .collect();
        grid.extend_from_slice(&self.ends);
        grid.sort_by(f64::total_cmp);
        grid.dedup_by(|b, a| (*b - *a).abs() <= 1e-14);
        let ratio = PrefixRatio::reverse_holder(q);
        Ok(grid
            .into_iter()
            .map(|t| (t, self.ratio_at(ratio, t)))
            .collect())
    }

    fn ratio_at(&self, ratio: PrefixRatio, t: f64) -> f64 {
        let i = self.ends.partition_point(|&e| e < t).min(self.len() - 1);
        let (d, n) = self.prefix_integrals(ratio.q).nth(i).unwrap();
        let a = self.start(i);
        let v = self.values[i];
        ratio.eval(t, d + v * (t - a), n + v.powf(ratio.q) * (t - a))
    }

    /// (∫₀^a h, ∫₀^a h^q) at the left end a of every step.
    fn prefix_integrals(&self, q: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let mut d = 0.0;
        let mut n = 0.0;
        self.values.iter().enumerate().map(move |(i, &v)| {
            let out = (d, n);
            let width = self.ends[i] - self.start(i);
            d += v * width;
            n += v.powf(q) * width;
            out
        })
    }

    /// Maximum of `ratio` over (0, 1]: exact values at every breakpoint plus
    /// the interior maximum of every step. Ties go to the largest t.
    fn sup_prefix(&self, ratio: PrefixRatio) -> (f64, f64) {
        let mut candidates = Vec::with_capacity(self.len() + 8);
        for (i, (d_a, n_a)) in self.prefix_integrals(ratio.q).enumerate() {
            let a = self.start(i);
            let b = self.ends[i];
            let v = self.values[i];
            let w = v.powf(ratio.q);
            let at = |t: f64| ratio.eval(t, d_a + v * (t - a), n_a + w * (t - a));
            let slope = |t: f64| ratio.log_slope(t, v, w, d_a + v * (t - a), n_a + w * (t - a));

            // on the first step the ratio is identically 1
            if i > 0 && slope(a) > 0.0 && slope(b) < 0.0 {
                // log R has a single critical point per step; bracket it
                let (mut lo, mut hi) = (a, b);
                while hi - lo > T_TOL {
                    let mid = 0.5 * (lo + hi);
                    if slope(mid) > 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                let mid = 0.5 * (lo + hi);
                candidates.push((mid, at(mid)));
                if let Some(t) = ratio.critical_point(a, v, w, d_a, n_a) {
                    if t > a && t < b {
                        candidates.push((t, at(t)));
                    }
                }
            }
            candidates.push((b, at(b)));
        }
        let best = candidates
            .iter()
            .map(|c| c.1)
            .fold(f64::NEG_INFINITY, f64::max);
        let cut = best - REL_TOL * best.abs();
        let witness = candidates
            .iter()
            .filter(|c| c.1 >= cut)
            .map(|c| c.0)
            .fold(f64::NEG_INFINITY, f64::max);
        (best, witness)
    }
}

/// R(t) = t^α · D(t)^β · N(t)^γ with D = ∫₀ᵗ h and N = ∫₀ᵗ h^q.
///
/// Both prefix ratios are homogeneous of degree zero in t (α + β + γ = 0),
/// which makes d log R/dt = 0 a linear equation on every step.
#[derive(Debug, Clone, Copy)]
struct PrefixRatio {
    alpha: f64,
    beta: f64,
    gamma: f64,
    q: f64,
}

impl PrefixRatio {
    fn reverse_holder(q: f64) -> Self {
        PrefixRatio {
            alpha: q - 1.0,
            beta: -q,
            gamma: 1.0,
            q,
        }
    }

    fn muckenhoupt(p: f64) -> Self {
        PrefixRatio {
            alpha: -p,
            beta: 1.0,
            gamma: p - 1.0,
            q: -1.0 / (p - 1.0),
        }
    }

    fn eval(&self, t: f64, d: f64, n: f64) -> f64 {
        t.powf(self.alpha) * d.powf(self.beta) * n.powf(self.gamma)
    }

    fn log_slope(&self, t: f64, v: f64, w: f64, d: f64, n: f64) -> f64 {
        self.alpha / t + self.beta * v / d + self.gamma * w / n
    }

    /// Root of the linear stationarity equation on a step starting at `a`.
    fn critical_point(&self, a: f64, v: f64, w: f64, d_a: f64, n_a: f64) -> Option<f64> {
        let d0 = d_a - v * a;
        let n0 = n_a - w * a;
        let denom = self.alpha * (d0 * w + v * n0) + self.beta * v * n0 + self.gamma * w * d0;
        let t = -self.alpha * d0 * n0 / denom;
        t.is_finite().then_some(t)
    }
}

/// Non-increasing rearrangement of a weight: leaf values sorted descending
/// (ties by leaf index), equal neighbours merged.
pub fn rearrangement(w: &DyadicWeight) -> StepFunction {
    let n = w.leaves().len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| w.leaves()[j].total_cmp(&w.leaves()[i]).then(i.cmp(&j)));
    let mut ends = Vec::new();
    let mut values: Vec<f64> = Vec::new();
    for (pos, &leaf) in order.iter().enumerate() {
        let v = w.leaves()[leaf];
        let end = (pos + 1) as f64 / n as f64;
        if values.last() == Some(&v) {
            *ends.last_mut().unwrap() = end;
        } else {
            values.push(v);
            ends.push(end);
        }
    }
    StepFunction { ends, values }
}

/// Real formatted with 17 significant digits.
pub fn format_real(x: f64) -> String {
    format!("{x:.16e}")
}

/// Curve samples as CSV with header `t,ratio`.
pub fn curve_to_csv(points: &[(f64, f64)]) -> String {
    let mut out = String::from("t,ratio\n");
    for &(t, r) in points {
        out.push_str(&format_real(t));
        out.push(',');
        out.push_str(&format_real(r));
        out.push('\n');
    }
    out
}
