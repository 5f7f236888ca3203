//! Stochastic optimization of LHS designs by elementary swaps.
//!
//! Three schedules share one Metropolis acceptance rule on the minimized
//! objective (the criterion value, negated for mindist):
//!
//! * [`optimize_geometric_sa`]: `T = c^i T0` at the i-th perturbation.
//! * [`optimize_mm_sa`]: `T` shrinks by `c` after `I_max` proposals without
//!   a new best; the run stalls once `I_max` proposals in a row are
//!   rejected.
//! * [`optimize_ese`]: best of `J` swaps in one column, `M` such steps per
//!   inner loop, temperature adapted to the inner loop's acceptance ratio.
//!
//! Criterion values come from a [`SwapState`], so a proposal costs O(N d)
//! (or O(N) for distance criteria) instead of a full re-evaluation.

mod compare;
mod ese;
mod sa;

use std::fmt::Write as _;
use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::criteria::{CriterionSpec, CriterionValue, SwapState};
use crate::design::LhsDesign;
use crate::diagnostics::Metric;
use crate::error::{Error, Result};
use crate::io::format_f64;
use crate::rng::{Seed, SfdRng};

pub use compare::{
    compare_optimizers, CompareReport, CompareRow, CompareScenario, CompareTable, Variant,
    COMPARE_QUANTILES,
};
pub use ese::optimize_ese;
pub use sa::{geometric_temperature, optimize_geometric_sa, optimize_mm_sa};

/// Stream of the configured seed used by the optimizers. Stream 0 is left
/// to initial-design generation so the two never share draws.
const OPTIMIZER_STREAM: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    GeometricSa,
    MmSa,
    Ese,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::GeometricSa => "geometric-sa",
            Algorithm::MmSa => "mm-sa",
            Algorithm::Ese => "ese",
        }
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "geometric-sa" | "sa" => Ok(Algorithm::GeometricSa),
            "mm-sa" => Ok(Algorithm::MmSa),
            "ese" => Ok(Algorithm::Ese),
            other => Err(Error::invalid(format!(
                "unknown algorithm `{other}` (expected geometric-sa, mm-sa or ese)"
            ))),
        }
    }
}

/// Temperature-update constants of ESE. After each inner loop with
/// acceptance ratio `a`:
///
/// * best improved: `a > improve_threshold` gives `T *= improve_factor`,
///   otherwise `T /= improve_factor`;
/// * no improvement: `a < explore_low` gives `T /= explore_raise`,
///   `a > explore_high` gives `T *= explore_lower`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EseConstants {
    pub improve_threshold: f64,
    pub improve_factor: f64,
    pub explore_low: f64,
    pub explore_high: f64,
    pub explore_raise: f64,
    pub explore_lower: f64,
    /// Default `T0` is this fraction of the initial objective magnitude.
    pub t0_fraction: f64,
}

impl Default for EseConstants {
    fn default() -> Self {
        Self {
            improve_threshold: 0.1,
            improve_factor: 0.8,
            explore_low: 0.1,
            explore_high: 0.8,
            explore_raise: 0.7,
            explore_lower: 0.9,
            t0_fraction: 0.005,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerConfig {
    pub algorithm: Algorithm,
    /// Initial temperature; `None` uses `ese.t0_fraction * |f(initial)|`.
    pub t0: Option<f64>,
    pub c: f64,
    pub i_max: usize,
    pub m_inner: usize,
    pub j_candidates: usize,
    /// ESE outer iterations; `None` derives `max(1, budget / (J M))`.
    pub q_outer: Option<usize>,
    /// Maximum number of elementary perturbations.
    pub budget: u64,
    pub seed: Seed,
    pub ese: EseConstants,
    /// Metrics measured on the best design at every trace record.
    pub monitors: Vec<Metric>,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::Ese,
            t0: None,
            c: 0.95,
            i_max: 100,
            m_inner: 100,
            j_candidates: 50,
            q_outer: None,
            budget: 10_000,
            seed: Seed(0),
            ese: EseConstants::default(),
            monitors: Vec::new(),
        }
    }
}

impl OptimizerConfig {
    pub fn geometric_sa(t0: f64, c: f64, budget: u64, seed: Seed) -> Self {
        Self {
            algorithm: Algorithm::GeometricSa,
            t0: Some(t0),
            c,
            budget,
            seed,
            ..Self::default()
        }
    }

    pub fn mm_sa(t0: f64, i_max: usize, c: f64, budget: u64, seed: Seed) -> Self {
        Self {
            algorithm: Algorithm::MmSa,
            t0: Some(t0),
            c,
            i_max,
            budget,
            seed,
            ..Self::default()
        }
    }

    pub fn ese(m_inner: usize, j_candidates: usize, budget: u64, seed: Seed) -> Self {
        Self {
            algorithm: Algorithm::Ese,
            m_inner,
            j_candidates,
            budget,
            seed,
            ..Self::default()
        }
    }

    pub fn with_monitors(mut self, monitors: Vec<Metric>) -> Self {
        self.monitors = monitors;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.budget == 0 {
            return Err(Error::invalid("budget must be at least one perturbation"));
        }
        if let Some(t0) = self.t0 {
            if !(t0.is_finite() && t0 > 0.0) {
                return Err(Error::invalid(format!("t0 must be positive, got {t0}")));
            }
        }
        match self.algorithm {
            Algorithm::GeometricSa | Algorithm::MmSa => {
                if !(self.c > 0.0 && self.c < 1.0) {
                    return Err(Error::invalid(format!("c must lie in (0, 1), got {}", self.c)));
                }
                if self.algorithm == Algorithm::MmSa && self.i_max == 0 {
                    return Err(Error::invalid("i_max must be at least 1"));
                }
            }
            Algorithm::Ese => {
                if self.m_inner == 0 || self.j_candidates == 0 || self.q_outer == Some(0) {
                    return Err(Error::invalid("ESE parameters M, J and Q must be at least 1"));
                }
                let e = &self.ese;
                let factors = [e.improve_factor, e.explore_raise, e.explore_lower];
                if factors.iter().any(|f| !(*f > 0.0 && *f < 1.0)) || e.t0_fraction <= 0.0 {
                    return Err(Error::invalid("ESE factors must lie in (0, 1)"));
                }
            }
        }
        Ok(())
    }

    fn initial_temperature(&self, f0: f64) -> f64 {
        self.t0.unwrap_or_else(|| {
            let t = self.ese.t0_fraction * f0.abs();
            if t.is_finite() && t > 0.0 {
                t
            } else {
                f64::MIN_POSITIVE
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub perturbations: u64,
    /// Criterion value of the current design.
    pub current: f64,
    /// Best criterion value so far.
    pub best: f64,
    pub temperature: f64,
    /// Monitor values of the best design, in `monitors` order.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub monitors: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceMetadata {
    pub algorithm: Algorithm,
    pub config: OptimizerConfig,
    pub seed: Seed,
    pub spec: CriterionSpec,
    pub n_points: usize,
    pub n_dims: usize,
    /// Hex fingerprints of the initial and best designs.
    pub initial_hash: String,
    pub final_hash: String,
    pub wall_time_secs: f64,
    pub monitors: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationTrace {
    pub records: Vec<TraceRecord>,
    pub metadata: TraceMetadata,
}

impl OptimizationTrace {
    /// The last record at or before `perturbations`.
    pub fn record_at(&self, perturbations: u64) -> &TraceRecord {
        let idx = self
            .records
            .partition_point(|r| r.perturbations <= perturbations);
        &self.records[idx.saturating_sub(1)]
    }

    pub fn last(&self) -> &TraceRecord {
        self.records.last().expect("a trace holds the initial record")
    }

    /// `perturbations,current,best,temperature` followed by one column per
    /// monitor.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("perturbations,current,best,temperature");
        for m in &self.metadata.monitors {
            out.push(',');
            out.push_str(m);
        }
        out.push('\n');
        for r in &self.records {
            let _ = write!(
                out,
                "{},{},{},{}",
                r.perturbations,
                format_f64(r.current),
                format_f64(r.best),
                format_f64(r.temperature)
            );
            for v in &r.monitors {
                out.push(',');
                out.push_str(&format_f64(*v));
            }
            out.push('\n');
        }
        out
    }

    /// Metadata as pretty JSON, for the sidecar file.
    pub fn metadata_json(&self) -> String {
        serde_json::to_string_pretty(&self.metadata).expect("metadata serializes")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    BudgetExhausted,
    Stalled,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OptimizationStats {
    pub perturbations: u64,
    pub accepted: u64,
    /// Accepted moves that made the objective strictly worse.
    pub accepted_worse: u64,
    pub new_bests: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationResult {
    pub best_design: LhsDesign,
    pub best_value: CriterionValue,
    pub trace: OptimizationTrace,
    pub termination: Termination,
    pub stats: OptimizationStats,
    pub warnings: Vec<String>,
}

/// Runs the algorithm selected in `config`.
pub fn optimize(
    initial: &LhsDesign,
    spec: CriterionSpec,
    config: &OptimizerConfig,
) -> Result<OptimizationResult> {
    match config.algorithm {
        Algorithm::GeometricSa => optimize_geometric_sa(initial, spec, config),
        Algorithm::MmSa => optimize_mm_sa(initial, spec, config),
        Algorithm::Ese => optimize_ese(initial, spec, config),
    }
}

/// State shared by all schedules: incremental evaluator, best design,
/// trace bookkeeping.
struct Run<'a> {
    spec: CriterionSpec,
    config: &'a OptimizerConfig,
    state: SwapState,
    rng: SfdRng,
    best_value: f64,
    best_design: LhsDesign,
    best_monitors: Vec<f64>,
    interval: u64,
    records: Vec<TraceRecord>,
    stats: OptimizationStats,
    initial_hash: u64,
    started: Instant,
    warnings: Vec<String>,
}

impl<'a> Run<'a> {
    fn start(initial: &LhsDesign, spec: CriterionSpec, config: &'a OptimizerConfig) -> Result<Self> {
        config.validate()?;
        let state = SwapState::new(initial.clone(), spec)?;
        let mut warnings = Vec::new();
        if config.algorithm != Algorithm::Ese && config.c < 0.95 && initial.n_dims() > 20 {
            let msg = format!(
                "c = {} with d = {}: high-dimensional designs usually need c close to 1",
                config.c,
                initial.n_dims()
            );
            log::warn!("{msg}");
            warnings.push(msg);
        }
        let best_value = state.raw_value();
        let mut run = Self {
            spec,
            config,
            rng: config.seed.stream(OPTIMIZER_STREAM),
            best_value,
            best_design: initial.clone(),
            best_monitors: Vec::new(),
            interval: (config.budget / 1000).max(1),
            records: Vec::new(),
            stats: OptimizationStats::default(),
            initial_hash: initial.matrix().fingerprint(),
            started: Instant::now(),
            warnings,
            state,
        };
        run.best_monitors = run.measure_best()?;
        Ok(run)
    }

    fn measure_best(&self) -> Result<Vec<f64>> {
        self.config
            .monitors
            .iter()
            .map(|m| m.evaluate(self.best_design.matrix()))
            .collect()
    }

    #[inline]
    fn objective(&self, value: f64) -> f64 {
        self.spec.objective(value)
    }

    fn current(&self) -> f64 {
        self.state.raw_value()
    }

    fn push_record(&mut self, temperature: f64) {
        let perturbations = self.stats.perturbations;
        if self
            .records
            .last()
            .is_some_and(|r| r.perturbations == perturbations)
        {
            self.records.pop();
        }
        self.records.push(TraceRecord {
            perturbations,
            current: self.current(),
            best: self.best_value,
            temperature,
            monitors: self.best_monitors.clone(),
        });
    }

    /// Uniform random pair of distinct rows.
    fn random_pair(&mut self) -> (usize, usize) {
        let n = self.state.design().n_points();
        let a = self.rng.random_range(0..n);
        let mut b = self.rng.random_range(0..n - 1);
        if b >= a {
            b += 1;
        }
        (a, b)
    }

    /// Metropolis test of a move changing the objective by `delta`.
    fn metropolis(&mut self, delta: f64, temperature: f64) -> bool {
        if delta <= 0.0 {
            return true;
        }
        if temperature.is_nan() || temperature <= 0.0 || delta.is_nan() {
            return false;
        }
        let u: f64 = self.rng.random();
        u < (-delta / temperature).exp()
    }

    /// Commits the staged swap when accepted and counts it.
    fn settle(&mut self, accept: bool, delta: f64) -> Result<()> {
        if accept {
            self.state.commit()?;
            self.stats.accepted += 1;
            if delta > 0.0 {
                self.stats.accepted_worse += 1;
            }
        }
        Ok(())
    }

    /// Updates the best design after `count` more perturbations and writes
    /// a record on a new best or when a checkpoint was crossed.
    fn observe(&mut self, count: u64, temperature: f64) -> Result<bool> {
        let before = self.stats.perturbations;
        self.stats.perturbations += count;
        let current = self.current();
        let improved = self.objective(current) < self.objective(self.best_value);
        if improved {
            self.best_value = current;
            self.best_design = self.state.design().clone();
            self.best_monitors = self.measure_best()?;
            self.stats.new_bests += 1;
        }
        if improved || self.stats.perturbations / self.interval > before / self.interval {
            self.push_record(temperature);
        }
        Ok(improved)
    }

    fn finish(mut self, termination: Termination, temperature: f64) -> Result<OptimizationResult> {
        self.push_record(temperature);
        let best_value = crate::criteria::evaluate(self.best_design.matrix(), self.spec)?;
        let tolerance = 1e-9 * best_value.value.abs().max(f64::MIN_POSITIVE);
        if (best_value.value - self.best_value).abs() > tolerance {
            log::warn!(
                "incremental best {} differs from recomputed {}",
                self.best_value,
                best_value.value
            );
        }
        let metadata = TraceMetadata {
            algorithm: self.config.algorithm,
            config: self.config.clone(),
            seed: self.config.seed,
            spec: self.spec,
            n_points: self.best_design.n_points(),
            n_dims: self.best_design.n_dims(),
            initial_hash: format!("{:016x}", self.initial_hash),
            final_hash: format!("{:016x}", self.best_design.matrix().fingerprint()),
            wall_time_secs: self.started.elapsed().as_secs_f64(),
            monitors: self.config.monitors.iter().map(Metric::label).collect(),
        };
        Ok(OptimizationResult {
            best_design: self.best_design,
            best_value,
            trace: OptimizationTrace {
                records: self.records,
                metadata,
            },
            termination,
            stats: self.stats,
            warnings: self.warnings,
        })
    }
}
