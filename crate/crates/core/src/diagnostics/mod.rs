//! Geometric diagnostics: MST statistics and the k-dimensional
//! subprojection study.

pub mod mst;
pub mod stats;
mod subproj;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::criteria::{evaluate, CriterionSpec};
use crate::design::DesignMatrix;
use crate::error::{Error, Result};

pub use mst::{mst_compare, mst_kruskal, mst_prim, mst_summary, MstEdge, MstOrder, MstSummary};
pub use stats::{five_number, quantiles, FiveNumber};
pub use subproj::{
    k_subsets, subprojection_report, subprojection_report_with, DesignSubprojections,
    SubprojectionOptions, SubprojectionReport, SubsetMode,
};

/// A scalar measured on a design: a criterion, or one of the two MST
/// statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Metric {
    Criterion(CriterionSpec),
    MstMean,
    MstSigma,
}

impl Metric {
    pub fn evaluate(&self, design: &DesignMatrix) -> Result<f64> {
        match self {
            Metric::Criterion(spec) => Ok(evaluate(design, *spec)?.value),
            Metric::MstMean => Ok(mst_summary(design)?.m),
            Metric::MstSigma => Ok(mst_summary(design)?.sigma),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Metric::Criterion(spec) => spec.label(),
            Metric::MstMean => "mst-m".into(),
            Metric::MstSigma => "mst-sigma".into(),
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mst-m" => Ok(Metric::MstMean),
            "mst-sigma" => Ok(Metric::MstSigma),
            other => Ok(Metric::Criterion(other.parse()?)),
        }
    }
}

impl TryFrom<String> for Metric {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Metric> for String {
    fn from(m: Metric) -> String {
        m.label()
    }
}

impl From<CriterionSpec> for Metric {
    fn from(spec: CriterionSpec) -> Self {
        Metric::Criterion(spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn metric_names() {
        for s in ["c2", "w2", "l2star", "mindist", "phip", "phip10", "mst-m", "mst-sigma"] {
            assert_eq!(s.parse::<Metric>().unwrap().label(), s);
        }
        assert!("mst".parse::<Metric>().is_err());
        let json = serde_json::to_string(&Metric::MstSigma).unwrap();
        assert_eq!(json, "\"mst-sigma\"");
    }
}
