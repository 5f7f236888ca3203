//! Monte Carlo estimate of the squared star L²-discrepancy, straight from
//! its integral definition. It shares no code with the closed form and is
//! meant for validating it.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::design::DesignMatrix;
use crate::error::{Error, Result};
use crate::par::{map_range, Execution};
use crate::rng::Seed;

const CHUNK: usize = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub standard_error: f64,
    pub n_samples: usize,
}

#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    count: f64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.count += 1.0;
        let delta = x - self.mean;
        self.mean += delta / self.count;
        self.m2 += delta * (x - self.mean);
    }

    fn merge(self, other: Moments) -> Moments {
        if self.count == 0.0 {
            return other;
        }
        let count = self.count + other.count;
        let delta = other.mean - self.mean;
        Moments {
            count,
            mean: self.mean + delta * other.count / count,
            m2: self.m2 + other.m2 + delta * delta * self.count * other.count / count,
        }
    }
}

/// `∫_[0,1]^d (#{x_i ≤ y}/N − Π y_k)² dy` estimated with `n_samples`
/// uniform draws of `y`.
pub fn mc_discrepancy_oracle(
    design: &DesignMatrix,
    n_samples: usize,
    seed: Seed,
) -> Result<McEstimate> {
    mc_discrepancy_oracle_with(design, n_samples, seed, Execution::default())
}

/// As [`mc_discrepancy_oracle`], with an explicit execution mode. Samples
/// are drawn in fixed chunks from independent streams, so the result does
/// not depend on `exec`.
pub fn mc_discrepancy_oracle_with(
    design: &DesignMatrix,
    n_samples: usize,
    seed: Seed,
    exec: Execution,
) -> Result<McEstimate> {
    if n_samples < 2 {
        return Err(Error::invalid("Monte Carlo oracle needs at least two samples"));
    }
    let n = design.n_points();
    let d = design.n_dims();
    let n_chunks = n_samples.div_ceil(CHUNK);
    let parts = map_range(exec, n_chunks, |c| {
        let len = CHUNK.min(n_samples - c * CHUNK);
        let mut rng = seed.stream(c as u64);
        let mut y = vec![0.0; d];
        let mut acc = Moments::default();
        for _ in 0..len {
            let mut volume = 1.0;
            for v in y.iter_mut() {
                *v = rng.random::<f64>();
                volume *= *v;
            }
            let inside = design
                .rows()
                .filter(|x| x.iter().zip(&y).all(|(xi, yi)| xi <= yi))
                .count();
            let gap = inside as f64 / n as f64 - volume;
            acc.push(gap * gap);
        }
        acc
    });
    let total = parts.into_iter().fold(Moments::default(), Moments::merge);
    let variance = total.m2 / (total.count - 1.0);
    Ok(McEstimate {
        estimate: total.mean,
        standard_error: (variance / total.count).sqrt(),
        n_samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_point_matches_closed_form() {
        let m = DesignMatrix::from_rows(&[[0.5]]).unwrap();
        let est = mc_discrepancy_oracle(&m, 1_000_000, Seed(1)).unwrap();
        assert!((est.estimate - 1.0 / 12.0).abs() <= 3.0 * est.standard_error);
        assert!(est.estimate >= -3.0 * est.standard_error);
    }

    #[test]
    fn execution_mode_does_not_change_result() {
        let m = DesignMatrix::from_rows(&[[0.2, 0.7], [0.6, 0.1], [0.9, 0.5]]).unwrap();
        let a = mc_discrepancy_oracle_with(&m, 200_000, Seed(3), Execution::Sequential).unwrap();
        let b = mc_discrepancy_oracle_with(&m, 200_000, Seed(3), Execution::Parallel).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_tiny_sample() {
        let m = DesignMatrix::from_rows(&[[0.5]]).unwrap();
        assert!(mc_discrepancy_oracle(&m, 1, Seed(0)).is_err());
    }
}
