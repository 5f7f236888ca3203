use std::collections::BTreeSet;

use rand::seq::index::sample;
use serde::Serialize;

use super::stats::{five_number, FiveNumber};
use super::Metric;
use crate::design::DesignMatrix;
use crate::error::{Error, Result};
use crate::io::format_f64;
use crate::par::{map_indexed, Execution};
use crate::rng::Seed;

/// Which k-column subsets to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SubsetMode {
    /// All C(d, k) subsets in lexicographic order.
    #[default]
    Exhaustive,
    /// `count` distinct random subsets (all of them if `count >= C(d, k)`).
    Sampled { count: usize, seed: Seed },
}

#[derive(Debug, Clone, Default)]
pub struct SubprojectionOptions {
    pub mode: SubsetMode,
    pub exec: Execution,
    /// Design identifiers; defaults to `design-1`, `design-2`, ...
    pub ids: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DesignSubprojections {
    pub id: String,
    /// 0-based column indices of each subset.
    pub tuples: Vec<Vec<usize>>,
    pub values: Vec<f64>,
    pub summary: FiveNumber,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubprojectionReport {
    pub k: usize,
    pub metric: Metric,
    pub per_design: Vec<DesignSubprojections>,
    pub pooled_summary: FiveNumber,
}

/// Every k-subset of `0..d` in lexicographic order.
pub fn k_subsets(d: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k == 0 || k > d {
        return out;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        let Some(pos) = (0..k).rev().find(|&i| idx[i] != i + d - k) else {
            return out;
        };
        idx[pos] += 1;
        for i in pos + 1..k {
            idx[i] = idx[i - 1] + 1;
        }
    }
}

fn binomial(n: usize, k: usize) -> u128 {
    (0..k as u128).fold(1u128, |acc, i| acc * (n as u128 - i) / (i + 1))
}

fn sampled_subsets(d: usize, k: usize, count: usize, seed: Seed) -> Vec<Vec<usize>> {
    if binomial(d, k) <= count as u128 {
        return k_subsets(d, k);
    }
    let mut rng = seed.rng();
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let mut t: Vec<usize> = sample(&mut rng, d, k).into_iter().collect();
        t.sort_unstable();
        if seen.insert(t.clone()) {
            out.push(t);
        }
    }
    out
}

/// Evaluates `metric` on every k-column subprojection of every design and
/// pools the values.
pub fn subprojection_report(
    designs: &[DesignMatrix],
    k: usize,
    metric: Metric,
) -> Result<SubprojectionReport> {
    subprojection_report_with(designs, k, metric, &SubprojectionOptions::default())
}

pub fn subprojection_report_with(
    designs: &[DesignMatrix],
    k: usize,
    metric: Metric,
    opts: &SubprojectionOptions,
) -> Result<SubprojectionReport> {
    let Some(first) = designs.first() else {
        return Err(Error::invalid("subprojection report needs at least one design"));
    };
    let (n, d) = (first.n_points(), first.n_dims());
    if let Some(pos) = designs
        .iter()
        .position(|m| m.n_points() != n || m.n_dims() != d)
    {
        return Err(Error::invalid(format!(
            "design {} is {}x{}, expected {n}x{d}",
            pos + 1,
            designs[pos].n_points(),
            designs[pos].n_dims()
        )));
    }
    // k == d is the identity projection
    if k == 0 || k > d {
        return Err(Error::invalid(format!(
            "subspace dimension k={k} must satisfy 1 <= k <= d={d}"
        )));
    }
    let ids: Vec<String> = match &opts.ids {
        Some(ids) if ids.len() == designs.len() => ids.clone(),
        Some(ids) => {
            return Err(Error::invalid(format!(
                "{} ids given for {} designs",
                ids.len(),
                designs.len()
            )))
        }
        None => (1..=designs.len()).map(|i| format!("design-{i}")).collect(),
    };
    let tuples = match opts.mode {
        SubsetMode::Exhaustive => k_subsets(d, k),
        SubsetMode::Sampled { count, seed } => sampled_subsets(d, k, count.max(1), seed),
    };
    let jobs: Vec<(usize, usize)> = (0..designs.len())
        .flat_map(|di| (0..tuples.len()).map(move |ti| (di, ti)))
        .collect();
    let values = map_indexed(opts.exec, &jobs, |_, &(di, ti)| {
        let sub = designs[di].extract_subprojection(&tuples[ti])?;
        metric.evaluate(&sub)
    })
    .into_iter()
    .collect::<Result<Vec<f64>>>()?;

    let per_design = values
        .chunks(tuples.len())
        .zip(ids)
        .map(|(vals, id)| {
            Ok(DesignSubprojections {
                id,
                tuples: tuples.clone(),
                values: vals.to_vec(),
                summary: five_number(vals)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SubprojectionReport {
        k,
        metric,
        per_design,
        pooled_summary: five_number(&values)?,
    })
}

impl SubprojectionReport {
    pub fn pooled_values(&self) -> Vec<f64> {
        self.per_design
            .iter()
            .flat_map(|d| d.values.iter().copied())
            .collect()
    }

    /// JSON document with 1-based column indices.
    pub fn to_json(&self) -> serde_json::Value {
        let per_design: Vec<serde_json::Value> = self
            .per_design
            .iter()
            .map(|d| {
                serde_json::json!({
                    "id": d.id,
                    "tuples": d.tuples.iter().map(|t| t.iter().map(|c| c + 1).collect::<Vec<_>>()).collect::<Vec<_>>(),
                    "values": d.values,
                    "summary": d.summary,
                })
            })
            .collect();
        serde_json::json!({
            "k": self.k,
            "metric": self.metric,
            "per_design": per_design,
            "pooled_summary": self.pooled_summary,
        })
    }

    /// Flat `design_id,cols,value` CSV; `cols` joins 1-based indices with
    /// `-`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("design_id,cols,value\n");
        for d in &self.per_design {
            for (t, v) in d.tuples.iter().zip(&d.values) {
                let cols: Vec<String> = t.iter().map(|c| (c + 1).to_string()).collect();
                out.push_str(&format!("{},{},{}\n", d.id, cols.join("-"), format_f64(*v)));
            }
        }
        out
    }
}
