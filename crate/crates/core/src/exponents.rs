//! The self-improvement exponent p₀: the root q > p of
//!
//! ```text
//! ((q − p)/q) · (q/(q − 1))^p · C = 1
//! ```
//!
//! found by bracket expansion and bisection.

use serde::{Deserialize, Serialize};

use crate::error::{check_range, Result};

/// Residual target for finite roots.
pub const RESIDUAL_TOL: f64 = 1e-12;

/// Brackets growing past this value classify the root as infinite.
pub const ROOT_CAP: f64 = 1e9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentResult {
    pub p: f64,
    pub constant: f64,
    /// `f64::INFINITY` when no finite root exists.
    pub p0: f64,
    pub residual: f64,
    pub warnings: Vec<String>,
}

impl ExponentResult {
    pub fn is_infinite(&self) -> bool {
        self.p0.is_infinite()
    }

    /// The integrability range [p, p₀).
    pub fn range(&self) -> (f64, f64) {
        (self.p, self.p0)
    }
}

/// ln f(q), written with ln_1p so nothing overflows or cancels near q = 1 or
/// for very large q.
fn log_f(q: f64, p: f64, constant: f64) -> f64 {
    (-p / q).ln_1p() - p * (-1.0 / q).ln_1p() + constant.ln()
}

/// f(q) − 1.
pub fn equation_residual(q: f64, p: f64, constant: f64) -> f64 {
    log_f(q, p, constant).exp_m1()
}

pub fn p0_solve(p: f64, constant: f64) -> Result<ExponentResult> {
    check_range("p", p, p > 1.0 && p.is_finite(), "p > 1")?;
    check_range(
        "C",
        constant,
        constant >= 1.0 && constant.is_finite(),
        "C >= 1",
    )?;
    let warnings = monotonicity_warnings(p, constant);
    if constant == 1.0 {
        return Ok(ExponentResult {
            p,
            constant,
            p0: f64::INFINITY,
            residual: 0.0,
            warnings,
        });
    }

    let g = |q: f64| log_f(q, p, constant);
    let mut lo = p;
    let mut hi = (2.0 * p).max(4.0);
    while g(hi) <= 0.0 {
        lo = hi;
        hi *= 2.0;
        if hi > ROOT_CAP {
            return Ok(ExponentResult {
                p,
                constant,
                p0: f64::INFINITY,
                residual: 0.0,
                warnings,
            });
        }
    }
    // g(lo) ≤ 0 < g(hi); shrink from the left so the smallest root is kept
    let mut mid = 0.5 * (lo + hi);
    while hi - lo > 4.0 * f64::EPSILON * hi {
        mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let residual = equation_residual(mid, p, constant).abs();
    Ok(ExponentResult {
        p,
        constant,
        p0: mid,
        residual,
        warnings,
    })
}

/// Samples f on a geometric grid over (p, 1e6] and reports any decrease.
fn monotonicity_warnings(p: f64, constant: f64) -> Vec<String> {
    let mut out = Vec::new();
    let mut prev = f64::NEG_INFINITY;
    let mut q = p * (1.0 + 1e-6);
    while q < 1e6 {
        let v = log_f(q, p, constant);
        if v < prev - 1e-14 {
            out.push(format!("equation decreases near q = {q}"));
            break;
        }
        prev = v;
        q *= 1.05;
    }
    out
}

/// p₀ for the rearranged constant k·c − k + 1; the range is [p, p₀).
pub fn improvement_range(p: f64, c: f64, k: usize) -> Result<ExponentResult> {
    check_range("c", c, c >= 1.0 && c.is_finite(), "c >= 1")?;
    check_range("k", k as f64, k >= 2, "k >= 2")?;
    p0_solve(p, rearranged_constant(c, k))
}

/// k·c − k + 1.
pub fn rearranged_constant(c: f64, k: usize) -> f64 {
    let k = k as f64;
    k * (c - 1.0) + 1.0
}

/// Prefix reverse Hölder constant (1−α)^p/(1−αp) of u^(−α) on (0, 1].
pub fn power_weight_constant(alpha: f64, p: f64) -> Result<f64> {
    check_range("p", p, p > 1.0 && p.is_finite(), "p > 1")?;
    check_range(
        "alpha",
        alpha,
        alpha > 0.0 && alpha * p < 1.0,
        "0 < alpha < 1/p",
    )?;
    Ok((1.0 - alpha).powf(p) / (1.0 - alpha * p))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_roots() {
        // 2q(q−2) = (q−1)²  ⇒  q² − 2q − 1 = 0
        let r = p0_solve(2.0, 2.0).unwrap();
        assert!((r.p0 - (1.0 + 2f64.sqrt())).abs() < 1e-10);
        assert!(r.residual <= RESIDUAL_TOL);
        // 1.25·q(q−2) = (q−1)²  ⇒  q² − 2q − 4 = 0
        let r = p0_solve(2.0, 1.25).unwrap();
        assert!((r.p0 - (1.0 + 5f64.sqrt())).abs() < 1e-10);
        assert!(r.residual <= RESIDUAL_TOL);
        let r = p0_solve(2.0, 1.0).unwrap();
        assert!(r.is_infinite());
        assert!(r.warnings.is_empty());
    }

    #[test]
    fn improvement_ranges() {
        let r = improvement_range(2.0, 1.125, 2).unwrap();
        assert_eq!(r.constant, 1.25);
        assert!((r.p0 - (1.0 + 5f64.sqrt())).abs() < 1e-10);
        assert_eq!(r.range().0, 2.0);
        for k in [2, 4, 8] {
            assert!(improvement_range(2.0, 1.0, k).unwrap().is_infinite());
        }
        // C = 3: 3q(q−2) = (q−1)²  ⇒  2q² − 4q − 1 = 0  ⇒  q = 1 + √6/2
        let r = improvement_range(2.0, 2.0, 2).unwrap();
        assert_eq!(r.constant, 3.0);
        assert!((r.p0 - (1.0 + 6f64.sqrt() / 2.0)).abs() < 1e-10);
        assert!(r.residual <= RESIDUAL_TOL);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(p0_solve(1.0, 2.0).is_err());
        assert!(p0_solve(2.0, 0.5).is_err());
        assert!(improvement_range(2.0, 2.0, 1).is_err());
        assert!(power_weight_constant(0.5, 2.0).is_err());
        assert!(power_weight_constant(0.0, 2.0).is_err());
    }

    #[test]
    fn power_weight_identity() {
        assert!((power_weight_constant(0.25, 2.0).unwrap() - 1.125).abs() < 1e-15);
        assert!((power_weight_constant(1e-12, 2.0).unwrap() - 1.0).abs() < 1e-10);
        for p in [2.0, 3.0] {
            for alpha in [0.1, 0.2, 0.25] {
                if alpha * p >= 1.0 {
                    continue;
                }
                let c = power_weight_constant(alpha, p).unwrap();
                // f(1/α) = 1 exactly
                assert!(equation_residual(1.0 / alpha, p, c).abs() < 1e-13);
                let r = p0_solve(p, c).unwrap();
                assert!(
                    (r.p0 - 1.0 / alpha).abs() < 1e-6,
                    "p={p} alpha={alpha}: {}",
                    r.p0
                );
            }
        }
    }

    #[test]
    fn p0_decreases_in_constant() {
        for p in [1.5, 2.0, 3.0] {
            let mut prev = f64::INFINITY;
            for i in 1..60 {
                let c = 1.0 + 0.05 * i as f64 * i as f64;
                let r = p0_solve(p, c).unwrap();
                assert!(r.p0 > p);
                assert!(r.p0 < prev, "p={p} c={c}");
                assert!(r.residual <= RESIDUAL_TOL);
                assert!(r.warnings.is_empty());
                prev = r.p0;
            }
        }
    }

    #[test]
    fn constants_near_one_give_large_roots() {
        // f ≈ C(1 − p(p−1)/(2q²)) for large q
        let r = p0_solve(2.0, 1.0 + 1e-10).unwrap();
        let approx = (1.0f64 / (1e-10 * (1.0 + 1e-10))).sqrt();
        assert!(r.p0.is_finite());
        assert!((r.p0 / approx - 1.0).abs() < 1e-3, "{r:?} vs {approx}");
    }
}
