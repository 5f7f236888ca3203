//! Figure datasets.
//!
//! Each figure id maps to a fixed scenario; `--scale` picks the parameter
//! column below. Desk scale is what the test suite runs.
//!
//! | figure | scenario | desk | full |
//! |---|---|---|---|
//! | fig4 | ESE (M=100, J=50), N=100, d=10, phi_p vs mindist driver, best-design mindist | 10 runs, 50 000 perturbations | 30 runs, 100 000 |
//! | fig5 | MM SA case1 (T0=0.1, I_max=100, c=0.9) and case2 (I_max=300), N=50, d=5, phi_p | 10 runs, 200 000 | 30 runs, 200 000 |
//! | fig6 | ESE (M=100, J=50), N=50, d=5, phi_p | 10 runs, 30 000 | 30 runs, 100 000 |
//! | fig7 | ESE (M=300, J=50) and MM SA (T0=0.01, I_max=1000, c=0.98), N=50, d=5 | 10 runs, 350 000 | 30 runs, 350 000 |
//! | fig8 | geometric SA on C2 and W2, N=100, d=10, MST m and sigma | 5 runs, 200 000 | 5 runs, 1 000 000 |
//! | fig9 | 2D C2 of random and C2-optimized LHS | grid A, 200 000 | grid B, 1 000 000 |
//! | fig10 | 2D L2-star and C2 of L2-star-optimized LHS | grid A | grid B |
//! | fig11 | 2D C2 of scrambled Sobol' points | grid A | grid B |
//! | fig12 | 2D L2-star and C2 of maximin (phi_p) LHS | grid A | grid B |
//! | fig13 | 2D MST m and sigma of maximin LHS | grid A | grid B |
//! | fig14 | 2D MST m and sigma of C2-optimized LHS | grid A | grid B |
//!
//! Grid A is d in {2, 5, 10, 20}; grid B is d in {2, 3, 4, 5, 6, 8, 10, 12,
//! 15, 20, 25, 30, 40, 54}. Figures 9 to 14 use N=100 and five designs per
//! dimension (design `i` at dimension `d` is seeded with
//! `seed + 5 d + i`), optimized by geometric SA with `T0 = 0.005 |f0|` and `c` set
//! so that the temperature falls by a factor 1000 over the budget.
//!
//! Trace figures write `<fig>.csv` as `checkpoint,variant,q05,q25,q50,q75,q95,mean`
//! (fig8 writes `fig8-m.csv` and `fig8-sigma.csv`). Subprojection figures
//! write `<fig>.csv` as `panel,metric,d,design,cols,value` and
//! `<fig>-summary.csv` as `panel,metric,d,min,q25,median,q75,max`.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use anyhow::{bail, Result};
use clap::ValueEnum;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;
use sfd_core::design::generate_random_lhs;
use sfd_core::diagnostics::{subprojection_report, Metric};
use sfd_core::io::format_f64;
use sfd_core::optimize::{compare_optimizers, optimize, CompareScenario, OptimizerConfig, Variant};
use sfd_core::sobol::{generate_sobol, SobolConfig};
use sfd_core::{CriterionSpec, DesignMatrix, Seed};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Figure {
    Fig4,
    Fig5,
    Fig6,
    Fig7,
    Fig8,
    Fig9,
    Fig10,
    Fig11,
    Fig12,
    Fig13,
    Fig14,
}

impl Figure {
    pub const ALL: [Figure; 11] = [
        Figure::Fig4,
        Figure::Fig5,
        Figure::Fig6,
        Figure::Fig7,
        Figure::Fig8,
        Figure::Fig9,
        Figure::Fig10,
        Figure::Fig11,
        Figure::Fig12,
        Figure::Fig13,
        Figure::Fig14,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Figure::Fig4 => "fig4",
            Figure::Fig5 => "fig5",
            Figure::Fig6 => "fig6",
            Figure::Fig7 => "fig7",
            Figure::Fig8 => "fig8",
            Figure::Fig9 => "fig9",
            Figure::Fig10 => "fig10",
            Figure::Fig11 => "fig11",
            Figure::Fig12 => "fig12",
            Figure::Fig13 => "fig13",
            Figure::Fig14 => "fig14",
        }
    }
}

impl fmt::Display for Figure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Figure {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Figure::ALL
            .into_iter()
            .find(|f| f.id() == s)
            .ok_or_else(|| format!("unknown figure `{s}` (expected fig4 to fig14)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    Desk,
    Full,
}

/// Files produced by a figure run, in write order.
pub struct BenchOutput {
    pub files: Vec<(String, String)>,
    pub config: serde_json::Value,
}

pub fn run_figure(figure: Figure, scale: Scale, seed: Seed) -> Result<BenchOutput> {
    match figure {
        Figure::Fig4 | Figure::Fig5 | Figure::Fig6 | Figure::Fig7 | Figure::Fig8 => {
            trace_figure(figure, scale, seed)
        }
        _ => subprojection_figure(figure, scale, seed),
    }
}

fn pick<T>(scale: Scale, desk: T, full: T) -> T {
    match scale {
        Scale::Desk => desk,
        Scale::Full => full,
    }
}

fn mindist() -> Metric {
    Metric::Criterion(CriterionSpec::mindist())
}

/// `c` such that `T` falls by `factor` over `budget` perturbations.
pub fn cooling_ratio(budget: u64, factor: f64) -> f64 {
    (-(factor.ln()) / budget as f64).exp()
}

fn desk_sa(budget: u64, seed: Seed) -> OptimizerConfig {
    OptimizerConfig {
        t0: None,
        ..OptimizerConfig::geometric_sa(1.0, cooling_ratio(budget, 1e3), budget, seed)
    }
}

fn trace_figure(figure: Figure, scale: Scale, seed: Seed) -> Result<BenchOutput> {
    let phip = CriterionSpec::phi_p(50);
    let variant = |label: &str, spec: CriterionSpec, config: OptimizerConfig| Variant {
        label: label.to_string(),
        spec,
        config,
    };
    let (n, d, replicates, variants, summaries) = match figure {
        Figure::Fig4 => {
            let budget = pick(scale, 50_000, 100_000);
            let cfg = OptimizerConfig::ese(100, 50, budget, seed);
            (
                100,
                10,
                pick(scale, 10, 30),
                vec![
                    variant("phip", phip, cfg.clone()),
                    variant("mindist", CriterionSpec::mindist(), cfg),
                ],
                vec![mindist()],
            )
        }
        Figure::Fig5 => {
            let budget = 200_000;
            (
                50,
                5,
                pick(scale, 10, 30),
                vec![
                    variant("case1", phip, OptimizerConfig::mm_sa(0.1, 100, 0.9, budget, seed)),
                    variant("case2", phip, OptimizerConfig::mm_sa(0.1, 300, 0.9, budget, seed)),
                ],
                vec![mindist()],
            )
        }
        Figure::Fig6 => {
            let budget = pick(scale, 30_000, 100_000);
            (
                50,
                5,
                pick(scale, 10, 30),
                vec![variant("ese", phip, OptimizerConfig::ese(100, 50, budget, seed))],
                vec![mindist()],
            )
        }
        Figure::Fig7 => {
            let budget = 350_000;
            (
                50,
                5,
                pick(scale, 10, 30),
                vec![
                    variant("ese", phip, OptimizerConfig::ese(300, 50, budget, seed)),
                    variant("mm-sa", phip, OptimizerConfig::mm_sa(0.01, 1000, 0.98, budget, seed)),
                ],
                vec![mindist()],
            )
        }
        Figure::Fig8 => {
            let budget = pick(scale, 200_000, 1_000_000);
            (
                100,
                10,
                5,
                vec![
                    variant("c2", CriterionSpec::centered_l2(), desk_sa(budget, seed)),
                    variant("w2", CriterionSpec::wraparound_l2(), desk_sa(budget, seed)),
                ],
                vec![Metric::MstMean, Metric::MstSigma],
            )
        }
        _ => unreachable!("not a trace figure"),
    };
    let mut scenario = CompareScenario::new(n, d, variants, replicates, seed);
    scenario.summaries = summaries;
    let report = compare_optimizers(&scenario)?;
    let files = if figure == Figure::Fig8 {
        vec![
            ("fig8-m.csv".to_string(), report.tables[0].to_csv()),
            ("fig8-sigma.csv".to_string(), report.tables[1].to_csv()),
        ]
    } else {
        vec![(format!("{figure}.csv"), report.primary().to_csv())]
    };
    Ok(BenchOutput {
        files,
        config: json!({ "figure": figure, "scale": scale, "scenario": scenario }),
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
#[serde(rename_all = "kebab-case")]
enum DesignSet {
    Random,
    Optimized(CriterionSpec),
    Sobol,
}

#[derive(Debug, Clone, Serialize)]
struct Panel {
    name: &'static str,
    set: DesignSet,
    metrics: Vec<Metric>,
}

fn panels(figure: Figure) -> Vec<Panel> {
    let c2: Metric = CriterionSpec::centered_l2().into();
    let l2s: Metric = CriterionSpec::star_l2().into();
    let c2_opt = DesignSet::Optimized(CriterionSpec::centered_l2());
    let maximin = DesignSet::Optimized(CriterionSpec::phi_p(50));
    let mst = vec![Metric::MstMean, Metric::MstSigma];
    let panel = |name, set, metrics| Panel { name, set, metrics };
    match figure {
        Figure::Fig9 => vec![
            panel("random", DesignSet::Random, vec![c2]),
            panel("c2-optimized", c2_opt, vec![c2]),
        ],
        Figure::Fig10 => vec![panel(
            "l2star-optimized",
            DesignSet::Optimized(CriterionSpec::star_l2()),
            vec![l2s, c2],
        )],
        Figure::Fig11 => vec![panel("sobol", DesignSet::Sobol, vec![c2])],
        Figure::Fig12 => vec![panel("maximin", maximin, vec![l2s, c2])],
        Figure::Fig13 => vec![panel("maximin", maximin, mst)],
        Figure::Fig14 => vec![panel("c2-optimized", c2_opt, mst)],
        _ => unreachable!("not a subprojection figure"),
    }
}

pub const N_POINTS: usize = 100;
pub const DESIGNS_PER_CELL: usize = 5;

pub fn dimension_grid(scale: Scale) -> Vec<usize> {
    pick(
        scale,
        vec![2, 5, 10, 20],
        vec![2, 3, 4, 5, 6, 8, 10, 12, 15, 20, 25, 30, 40, 54],
    )
}

pub fn subprojection_budget(scale: Scale) -> u64 {
    pick(scale, 200_000, 1_000_000)
}

/// Seed of design `i` (0-based) at dimension `d`. Independent of the scale
/// and the figure, so a panel shared by two figures holds the same designs.
pub fn design_seed(seed: Seed, d: usize, i: usize) -> Seed {
    seed.offset((d * DESIGNS_PER_CELL + i) as u64)
}

fn build_design(set: DesignSet, d: usize, i: usize, budget: u64, seed: Seed) -> Result<DesignMatrix> {
    let s = design_seed(seed, d, i);
    Ok(match set {
        DesignSet::Random => generate_random_lhs(N_POINTS, d, s)?.into_matrix(),
        DesignSet::Sobol => generate_sobol(N_POINTS, &SobolConfig::scrambled(d, s))?,
        DesignSet::Optimized(spec) => {
            let initial = generate_random_lhs(N_POINTS, d, s)?;
            optimize(&initial, spec, &desk_sa(budget, s))?.best_design.into_matrix()
        }
    })
}

fn subprojection_figure(figure: Figure, scale: Scale, seed: Seed) -> Result<BenchOutput> {
    let grid = dimension_grid(scale);
    let budget = subprojection_budget(scale);
    let panels = panels(figure);
    let mut long = String::from("panel,metric,d,design,cols,value\n");
    let mut summary = String::from("panel,metric,d,min,q25,median,q75,max\n");
    for panel in &panels {
        let jobs: Vec<(usize, usize)> = grid
            .iter()
            .flat_map(|&d| (0..DESIGNS_PER_CELL).map(move |i| (d, i)))
            .collect();
        let designs = jobs
            .par_iter()
            .map(|&(d, i)| build_design(panel.set, d, i, budget, seed))
            .collect::<Result<Vec<_>>>()?;
        for (cell, &d) in designs.chunks(DESIGNS_PER_CELL).zip(&grid) {
            for &metric in &panel.metrics {
                let report = subprojection_report(cell, 2, metric)?;
                for (k, per) in report.per_design.iter().enumerate() {
                    for (t, v) in per.tuples.iter().zip(&per.values) {
                        let _ = writeln!(
                            long,
                            "{},{},{},{},{}-{},{}",
                            panel.name,
                            metric,
                            d,
                            k + 1,
                            t[0] + 1,
                            t[1] + 1,
                            format_f64(*v)
                        );
                    }
                }
                let s = report.pooled_summary;
                let _ = writeln!(
                    summary,
                    "{},{},{},{},{},{},{},{}",
                    panel.name,
                    metric,
                    d,
                    format_f64(s.min),
                    format_f64(s.q25),
                    format_f64(s.median),
                    format_f64(s.q75),
                    format_f64(s.max)
                );
            }
        }
    }
    if long.lines().count() <= 1 {
        bail!("{figure} produced no rows");
    }
    Ok(BenchOutput {
        files: vec![
            (format!("{figure}.csv"), long),
            (format!("{figure}-summary.csv"), summary),
        ],
        config: json!({
            "figure": figure,
            "scale": scale,
            "n_points": N_POINTS,
            "dimensions": grid,
            "designs_per_dimension": DESIGNS_PER_CELL,
            "budget": budget,
            "optimizer": desk_sa(budget, seed),
            "panels": panels,
        }),
    })
}

/// One row of a `-summary.csv` file.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub panel: String,
    pub metric: String,
    pub d: usize,
    pub min: f64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub max: f64,
}

pub fn parse_summary(csv: &str) -> Result<Vec<SummaryRow>> {
    let mut rows = Vec::new();
    for (i, line) in csv.lines().enumerate().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 8 {
            bail!("summary line {} has {} fields", i + 1, f.len());
        }
        let num = |k: usize| -> Result<f64> { Ok(f[k].parse()?) };
        rows.push(SummaryRow {
            panel: f[0].to_string(),
            metric: f[1].to_string(),
            d: f[2].parse()?,
            min: num(3)?,
            q25: num(4)?,
            median: num(5)?,
            q75: num(6)?,
            max: num(7)?,
        });
    }
    Ok(rows)
}
