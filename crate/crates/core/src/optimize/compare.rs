use std::fmt::Write as _;

use serde::Serialize;

use super::{optimize, OptimizationResult, OptimizerConfig};
use crate::criteria::CriterionSpec;
use crate::design::{generate_centered_lhs, generate_random_lhs, LhsVariant};
use crate::diagnostics::stats::{mean, quantiles};
use crate::diagnostics::Metric;
use crate::error::{Error, Result};
use crate::io::format_f64;
use crate::par::{map_range, Execution};
use crate::rng::Seed;

pub const COMPARE_QUANTILES: [f64; 5] = [0.05, 0.25, 0.5, 0.75, 0.95];

/// One optimizer setting in a comparison.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Variant {
    pub label: String,
    pub spec: CriterionSpec,
    pub config: OptimizerConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareScenario {
    pub n_points: usize,
    pub n_dims: usize,
    pub lhs: LhsVariant,
    pub variants: Vec<Variant>,
    pub replicates: usize,
    pub seed: Seed,
    /// Give every variant the same seed (and initial design) per replicate.
    pub paired: bool,
    /// Quantities summarized at each checkpoint, each measured on the best
    /// design; empty tracks each variant's own best criterion value.
    pub summaries: Vec<Metric>,
    /// Number of checkpoint intervals per variant budget.
    pub checkpoints: u64,
    #[serde(skip)]
    pub exec: Execution,
}

impl CompareScenario {
    pub fn new(n_points: usize, n_dims: usize, variants: Vec<Variant>, replicates: usize, seed: Seed) -> Self {
        Self {
            n_points,
            n_dims,
            lhs: LhsVariant::RandomInCell,
            variants,
            replicates,
            seed,
            paired: true,
            summaries: Vec::new(),
            checkpoints: 100,
            exec: Execution::default(),
        }
    }

    /// Seed of replicate `r` of variant `v`.
    pub fn replicate_seed(&self, v: usize, r: usize) -> Seed {
        if self.paired {
            self.seed.offset(r as u64)
        } else {
            self.seed.offset((v * self.replicates + r) as u64)
        }
    }

    fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::invalid("comparison needs at least one replicate"));
        }
        if self.variants.is_empty() {
            return Err(Error::invalid("comparison needs at least one variant"));
        }
        if self.checkpoints == 0 {
            return Err(Error::invalid("comparison needs at least one checkpoint"));
        }
        for v in &self.variants {
            v.config.validate()?;
            v.spec.validate()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareRow {
    pub checkpoint: u64,
    pub variant: String,
    /// Quantiles at [`COMPARE_QUANTILES`].
    pub quantiles: [f64; 5],
    pub mean: f64,
}

/// Checkpoint summaries of one quantity.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareTable {
    /// Metric label, or `best` for the optimized criterion itself.
    pub quantity: String,
    pub rows: Vec<CompareRow>,
    /// Final value of every replicate, per variant label.
    pub finals: Vec<(String, Vec<f64>)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareReport {
    pub replicates: usize,
    /// True when all variants shared seeds and initial designs.
    pub paired: bool,
    pub tables: Vec<CompareTable>,
}

impl CompareReport {
    pub fn table(&self, quantity: &str) -> Option<&CompareTable> {
        self.tables.iter().find(|t| t.quantity == quantity)
    }

    /// The first table.
    pub fn primary(&self) -> &CompareTable {
        &self.tables[0]
    }
}

impl CompareTable {
    /// `checkpoint,variant,q05,q25,q50,q75,q95,mean`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("checkpoint,variant,q05,q25,q50,q75,q95,mean\n");
        for r in &self.rows {
            let _ = write!(out, "{},{}", r.checkpoint, r.variant);
            for q in r.quantiles.iter().chain([&r.mean]) {
                out.push(',');
                out.push_str(&format_f64(*q));
            }
            out.push('\n');
        }
        out
    }

    pub fn finals_of(&self, label: &str) -> Option<&[f64]> {
        self.finals
            .iter()
            .find(|(l, _)| l == label)
            .map(|(_, v)| v.as_slice())
    }
}

/// Runs every variant `replicates` times and summarizes the traces at
/// common checkpoints. Replicates run in parallel; results are gathered in
/// replicate order, so the report does not depend on the execution mode.
pub fn compare_optimizers(scenario: &CompareScenario) -> Result<CompareReport> {
    scenario.validate()?;
    let n_var = scenario.variants.len();
    let r_count = scenario.replicates;
    let variants: Vec<Variant> = scenario
        .variants
        .iter()
        .map(|v| {
            let mut v = v.clone();
            for m in &scenario.summaries {
                if !v.config.monitors.contains(m) {
                    v.config.monitors.push(*m);
                }
            }
            v
        })
        .collect();

    let results: Vec<Result<OptimizationResult>> =
        map_range(scenario.exec, n_var * r_count, |job| {
            let (v, r) = (job / r_count, job % r_count);
            let seed = scenario.replicate_seed(v, r);
            let initial = match scenario.lhs {
                LhsVariant::RandomInCell => {
                    generate_random_lhs(scenario.n_points, scenario.n_dims, seed)?
                }
                LhsVariant::Centered => generate_centered_lhs(scenario.n_points, scenario.n_dims, seed)?,
            };
            let mut config = variants[v].config.clone();
            config.seed = seed;
            optimize(&initial, variants[v].spec, &config)
        });
    let results = results.into_iter().collect::<Result<Vec<_>>>()?;

    let quantities: Vec<Option<Metric>> = if scenario.summaries.is_empty() {
        vec![None]
    } else {
        scenario.summaries.iter().copied().map(Some).collect()
    };
    let mut tables = Vec::with_capacity(quantities.len());
    for quantity in quantities {
        let mut rows = Vec::new();
        let mut finals = Vec::with_capacity(n_var);
        for (v, variant) in variants.iter().enumerate() {
            let runs = &results[v * r_count..(v + 1) * r_count];
            let monitor_idx = quantity
                .map(|m| variant.config.monitors.iter().position(|x| *x == m).expect("monitor added"));
            let read = |res: &OptimizationResult, at: u64| {
                let rec = res.trace.record_at(at);
                match monitor_idx {
                    Some(i) => rec.monitors[i],
                    None => rec.best,
                }
            };
            let budget = variant.config.budget;
            let step = (budget / scenario.checkpoints).max(1);
            let mut grid: Vec<u64> = (0..=budget / step).map(|k| k * step).collect();
            if grid.last() != Some(&budget) {
                grid.push(budget);
            }
            for &at in &grid {
                let values: Vec<f64> = runs.iter().map(|res| read(res, at)).collect();
                let q = quantiles(&values, &COMPARE_QUANTILES)?;
                rows.push(CompareRow {
                    checkpoint: at,
                    variant: variant.label.clone(),
                    quantiles: [q[0], q[1], q[2], q[3], q[4]],
                    mean: mean(&values),
                });
            }
            finals.push((
                variant.label.clone(),
                runs.iter().map(|res| read(res, u64::MAX)).collect(),
            ));
        }
        tables.push(CompareTable {
            quantity: quantity.map_or_else(|| "best".to_string(), |m| m.label()),
            rows,
            finals,
        });
    }
    Ok(CompareReport {
        replicates: r_count,
        paired: scenario.paired || n_var == 1,
        tables,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scenario(replicates: usize) -> CompareScenario {
        let variants = vec![
            Variant {
                label: "phip".into(),
                spec: CriterionSpec::phi_p(50),
                config: OptimizerConfig::ese(10, 10, 2000, Seed(0)),
            },
            Variant {
                label: "mindist".into(),
                spec: CriterionSpec::mindist(),
                config: OptimizerConfig::ese(10, 10, 2000, Seed(0)),
            },
        ];
        let mut s = CompareScenario::new(20, 3, variants, replicates, Seed(11));
        s.summaries = vec![Metric::Criterion(CriterionSpec::mindist())];
        s.checkpoints = 10;
        s
    }

    #[test]
    fn zero_replicates_rejected() {
        assert!(compare_optimizers(&scenario(0)).is_err());
    }

    #[test]
    fn report_shape_and_pairing() {
        let s = scenario(4);
        let rep = compare_optimizers(&s).unwrap();
        assert!(rep.paired);
        let rep_all = rep.clone();
        let rep = rep_all.primary();
        assert_eq!(rep.quantity, "mindist");
        assert_eq!(rep.rows.len(), 2 * 11);
        assert_eq!(rep.finals_of("phip").unwrap().len(), 4);
        let csv = rep.to_csv();
        assert!(csv.starts_with("checkpoint,variant,q05,q25,q50,q75,q95,mean\n"));
        assert_eq!(csv.lines().count(), 1 + 22);
        for r in &rep.rows {
            assert!(r.quantiles.windows(2).all(|w| w[0] <= w[1]));
        }
        // checkpoint 0 is the shared initial design
        let zero: Vec<&CompareRow> = rep.rows.iter().filter(|r| r.checkpoint == 0).collect();
        assert_eq!(zero[0].quantiles, zero[1].quantiles);

        let mut unpaired = s.clone();
        unpaired.paired = false;
        unpaired.summaries.push(Metric::MstSigma);
        let rep2 = compare_optimizers(&unpaired).unwrap();
        assert_eq!(rep2.tables.len(), 2);
        assert!(rep2.table("mst-sigma").is_some());
        assert!(!rep2.paired);
        assert_eq!(unpaired.replicate_seed(1, 0), Seed(15));
        assert_eq!(s.replicate_seed(1, 0), Seed(11));
    }

    #[test]
    fn execution_mode_does_not_matter() {
        let mut s = scenario(3);
        let par = compare_optimizers(&s).unwrap();
        s.exec = Execution::Sequential;
        let seq = compare_optimizers(&s).unwrap();
        assert_eq!(par, seq);
    }
}
