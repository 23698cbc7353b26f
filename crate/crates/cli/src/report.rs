//! Machine-readable report documents.

use dyadic_rhi::rearrange::format_real;
use dyadic_rhi::{DyadicWeight, ExponentResult, NodeId, PrefixReport, RhiReport};
use serde::{Serialize, Serializer};

/// Display form of a real: 17 significant digits, or `infinity`.
pub fn real(x: f64) -> String {
    if x == f64::INFINITY {
        "infinity".into()
    } else {
        format_real(x)
    }
}

/// JSON numbers cannot hold ∞; non-finite reals become strings.
fn extended<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    if x.is_finite() {
        s.serialize_f64(*x)
    } else if *x == f64::INFINITY {
        s.serialize_str("infinity")
    } else {
        s.serialize_str(&x.to_string())
    }
}

/// The command and its arguments, echoed into every document.
#[derive(Debug, Serialize)]
pub struct Echo<'a, A: Serialize> {
    pub command: &'static str,
    pub args: &'a A,
}

impl<'a, A: Serialize> Echo<'a, A> {
    pub fn new(command: &'static str, args: &'a A) -> Self {
        Echo { command, args }
    }
}

#[derive(Debug, Serialize)]
pub struct DyadicSection {
    pub constant: f64,
    pub witness: NodeId,
}

#[derive(Debug, Serialize)]
pub struct PrefixSection {
    pub constant: f64,
    pub witness_t: f64,
}

#[derive(Debug, Serialize)]
pub struct ExponentSection {
    pub constant: f64,
    #[serde(serialize_with = "extended")]
    pub p0: f64,
    pub residual: f64,
    pub warnings: Vec<String>,
}

impl From<&ExponentResult> for ExponentSection {
    fn from(r: &ExponentResult) -> Self {
        ExponentSection {
            constant: r.constant,
            p0: r.p0,
            residual: r.residual,
            warnings: r.warnings.clone(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct MuckenhouptSection {
    pub dyadic_constant: f64,
    pub dyadic_witness: NodeId,
    pub prefix_constant: f64,
    pub prefix_witness_t: f64,
    pub bound: f64,
    pub margin: f64,
}

impl MuckenhouptSection {
    pub fn new(dyadic: RhiReport, prefix: PrefixReport, bound: f64) -> Self {
        MuckenhouptSection {
            dyadic_constant: dyadic.constant,
            dyadic_witness: dyadic.witness,
            prefix_constant: prefix.constant,
            prefix_witness_t: prefix.witness_t,
            bound,
            margin: bound - prefix.constant,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Analysis<'a, A: Serialize> {
    pub config: Echo<'a, A>,
    pub k: usize,
    pub depth: u32,
    pub p: f64,
    pub integral: f64,
    pub dyadic: DyadicSection,
    pub prefix: PrefixSection,
    pub bound: f64,
    pub margin: f64,
    pub p0_dyadic: ExponentSection,
    pub p0_bound: ExponentSection,
    pub muckenhoupt: Option<MuckenhouptSection>,
}

impl<'a, A: Serialize> Analysis<'a, A> {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        config: Echo<'a, A>,
        w: &DyadicWeight,
        dyadic: RhiReport,
        prefix: PrefixReport,
        bound: f64,
        p0_dyadic: &ExponentResult,
        p0_bound: &ExponentResult,
        muckenhoupt: Option<MuckenhouptSection>,
    ) -> Self {
        Analysis {
            config,
            k: w.space().k(),
            depth: w.space().depth(),
            p: dyadic.exponent,
            integral: w.total_integral(),
            dyadic: DyadicSection {
                constant: dyadic.constant,
                witness: dyadic.witness,
            },
            prefix: PrefixSection {
                constant: prefix.constant,
                witness_t: prefix.witness_t,
            },
            bound,
            margin: bound - prefix.constant,
            p0_dyadic: p0_dyadic.into(),
            p0_bound: p0_bound.into(),
            muckenhoupt,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct P0Report<'a, A: Serialize> {
    pub config: Echo<'a, A>,
    pub p: f64,
    #[serde(flatten)]
    pub result: ExponentSection,
}

impl<'a, A: Serialize> P0Report<'a, A> {
    pub fn new(config: Echo<'a, A>, r: &ExponentResult) -> Self {
        P0Report {
            config,
            p: r.p,
            result: r.into(),
        }
    }
}
