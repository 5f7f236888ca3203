use super::{Algorithm, EseConstants, OptimizationResult, OptimizerConfig, Run, Termination};
use crate::criteria::CriterionSpec;
use crate::design::LhsDesign;
use crate::error::{Error, Result};

const REDRAW_ATTEMPTS: usize = 10;

/// Temperature after an inner loop with acceptance ratio `ratio`.
pub(crate) fn ese_update(t: f64, ratio: f64, improved: bool, k: &EseConstants) -> f64 {
    if improved {
        if ratio > k.improve_threshold {
            t * k.improve_factor
        } else {
            t / k.improve_factor
        }
    } else if ratio < k.explore_low {
        t / k.explore_raise
    } else if ratio > k.explore_high {
        t * k.explore_lower
    } else {
        t
    }
}

/// Draws `j` row pairs, distinct when possible.
fn candidate_pairs(run: &mut Run<'_>, j: usize) -> Vec<(usize, usize)> {
    let mut pairs: Vec<(usize, usize)> = Vec::with_capacity(j);
    for _ in 0..j {
        let mut pair = run.random_pair();
        for _ in 0..REDRAW_ATTEMPTS {
            let key = (pair.0.min(pair.1), pair.0.max(pair.1));
            if !pairs.contains(&key) {
                break;
            }
            pair = run.random_pair();
        }
        pairs.push((pair.0.min(pair.1), pair.0.max(pair.1)));
    }
    pairs
}

/// Enhanced stochastic evolutionary search.
///
/// `Q` outer loops of `M` inner iterations. Each inner iteration evaluates
/// `J` swaps in one column (columns taken in turn), keeps the best, and
/// accepts it by the Metropolis rule. After each inner loop the temperature
/// follows [`EseConstants`]. Every candidate counts as one perturbation;
/// the run stops before an iteration would exceed the budget.
pub fn optimize_ese(
    initial: &LhsDesign,
    spec: CriterionSpec,
    config: &OptimizerConfig,
) -> Result<OptimizationResult> {
    if config.algorithm != Algorithm::Ese {
        return Err(Error::invalid(format!(
            "configuration is for {}, not ese",
            config.algorithm.name()
        )));
    }
    let mut run = Run::start(initial, spec, config)?;
    let (m, j) = (config.m_inner, config.j_candidates);
    let per_loop = (m as u64).saturating_mul(j as u64);
    let q = config
        .q_outer
        .map_or_else(|| (config.budget / per_loop).max(1), |q| q as u64);
    let d = initial.n_dims();
    let mut temperature = config.initial_temperature(run.objective(run.current()));
    run.push_record(temperature);
    let mut column = 0usize;

    'outer: for _ in 0..q {
        let mut accepted = 0usize;
        let mut improved = false;
        let mut done = 0usize;
        for _ in 0..m {
            if run.stats.perturbations + j as u64 > config.budget {
                break 'outer;
            }
            let pairs = candidate_pairs(&mut run, j);
            let mut best: Option<(f64, (usize, usize))> = None;
            for &(a, b) in &pairs {
                let value = run.state.evaluate_swap(column, a, b)?;
                let f = run.objective(value);
                if best.is_none_or(|(bf, _)| f < bf) {
                    best = Some((f, (a, b)));
                }
            }
            let (f, (a, b)) = best.expect("J >= 1");
            // restage the winner unless it was the last one evaluated
            if pairs.last() != Some(&(a, b)) {
                run.state.evaluate_swap(column, a, b)?;
            }
            let delta = f - run.objective(run.current());
            let accept = run.metropolis(delta, temperature);
            run.settle(accept, delta)?;
            accepted += accept as usize;
            improved |= run.observe(j as u64, temperature)?;
            column = (column + 1) % d;
            done += 1;
        }
        let ratio = accepted as f64 / done.max(1) as f64;
        temperature = ese_update(temperature, ratio, improved, &config.ese);
    }
    run.finish(Termination::BudgetExhausted, temperature)
}
