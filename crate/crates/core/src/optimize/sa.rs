use super::{Algorithm, OptimizationResult, OptimizerConfig, Run, Termination};
use crate::criteria::CriterionSpec;
use crate::design::LhsDesign;
use crate::error::{Error, Result};

/// `T0 c^i`.
pub fn geometric_temperature(t0: f64, c: f64, i: u64) -> f64 {
    t0 * c.powf(i as f64)
}

fn check_algorithm(config: &OptimizerConfig, expected: Algorithm) -> Result<()> {
    if config.algorithm != expected {
        return Err(Error::invalid(format!(
            "configuration is for {}, not {}",
            config.algorithm.name(),
            expected.name()
        )));
    }
    Ok(())
}

/// One random swap in a random column; returns the objective change.
fn propose(run: &mut Run<'_>) -> Result<f64> {
    let d = run.state.design().n_dims();
    let column = rand::Rng::random_range(&mut run.rng, 0..d);
    let (a, b) = run.random_pair();
    let before = run.objective(run.current());
    let value = run.state.evaluate_swap(column, a, b)?;
    Ok(run.objective(value) - before)
}

/// Simulated annealing with a geometric temperature profile: the i-th
/// perturbation (counted from 1) runs at `T0 c^i`. Stops at the budget.
pub fn optimize_geometric_sa(
    initial: &LhsDesign,
    spec: CriterionSpec,
    config: &OptimizerConfig,
) -> Result<OptimizationResult> {
    check_algorithm(config, Algorithm::GeometricSa)?;
    let mut run = Run::start(initial, spec, config)?;
    let t0 = config.initial_temperature(run.objective(run.current()));
    run.push_record(t0);
    let mut temperature = t0;
    for i in 1..=config.budget {
        temperature = geometric_temperature(t0, config.c, i);
        let delta = propose(&mut run)?;
        let accept = run.metropolis(delta, temperature);
        run.settle(accept, delta)?;
        run.observe(1, temperature)?;
    }
    run.finish(Termination::BudgetExhausted, temperature)
}

/// Temperature control of the Morris–Mitchell schedule.
#[derive(Debug, Clone)]
pub(crate) struct MmSchedule {
    pub temperature: f64,
    c: f64,
    i_max: usize,
    without_best: usize,
    without_accept: usize,
}

impl MmSchedule {
    pub fn new(t0: f64, c: f64, i_max: usize) -> Self {
        Self {
            temperature: t0,
            c,
            i_max,
            without_best: 0,
            without_accept: 0,
        }
    }

    /// Records one proposal; returns true once `i_max` proposals in a row
    /// have been rejected.
    pub fn step(&mut self, accepted: bool, new_best: bool) -> bool {
        if new_best {
            self.without_best = 0;
        } else {
            self.without_best += 1;
            if self.without_best >= self.i_max {
                self.temperature *= self.c;
                self.without_best = 0;
            }
        }
        if accepted {
            self.without_accept = 0;
        } else {
            self.without_accept += 1;
        }
        self.without_accept >= self.i_max
    }
}

/// Morris–Mitchell annealing: `T` is multiplied by `c` after `I_max`
/// proposals without a new best. Stops at the budget, or earlier when the
/// last `I_max` proposals were all rejected.
pub fn optimize_mm_sa(
    initial: &LhsDesign,
    spec: CriterionSpec,
    config: &OptimizerConfig,
) -> Result<OptimizationResult> {
    check_algorithm(config, Algorithm::MmSa)?;
    let mut run = Run::start(initial, spec, config)?;
    let t0 = config.initial_temperature(run.objective(run.current()));
    run.push_record(t0);
    let mut schedule = MmSchedule::new(t0, config.c, config.i_max);
    for _ in 0..config.budget {
        let temperature = schedule.temperature;
        let delta = propose(&mut run)?;
        let accept = run.metropolis(delta, temperature);
        run.settle(accept, delta)?;
        let new_best = run.observe(1, temperature)?;
        if schedule.step(accept, new_best) {
            return run.finish(Termination::Stalled, schedule.temperature);
        }
    }
    run.finish(Termination::BudgetExhausted, schedule.temperature)
}
