//! Sample quantiles.
//!
//! All quantiles use the linear interpolation of the sorted sample known as
//! "type 7" (the default of R and NumPy): for probability `p` over `n`
//! sorted values, `h = (n - 1) p` and the result interpolates between the
//! values at `floor(h)` and `floor(h) + 1`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiveNumber {
    pub min: f64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub max: f64,
}

/// Type-7 quantile of an already sorted, non-empty slice.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn sorted_copy(values: &[f64]) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(Error::invalid("quantiles of an empty sample"));
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::invalid("quantiles of a sample containing NaN"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(sorted)
}

/// Type-7 quantiles of `values` at each probability in `probs`.
pub fn quantiles(values: &[f64], probs: &[f64]) -> Result<Vec<f64>> {
    let sorted = sorted_copy(values)?;
    Ok(probs.iter().map(|&p| quantile_sorted(&sorted, p)).collect())
}

pub fn five_number(values: &[f64]) -> Result<FiveNumber> {
    let s = sorted_copy(values)?;
    Ok(FiveNumber {
        min: s[0],
        q25: quantile_sorted(&s, 0.25),
        median: quantile_sorted(&s, 0.5),
        q75: quantile_sorted(&s, 0.75),
        max: s[s.len() - 1],
    })
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        let f = five_number(&[5.0, 3.0, 1.0, 4.0, 2.0]).unwrap();
        assert_eq!(f, FiveNumber { min: 1.0, q25: 2.0, median: 3.0, q75: 4.0, max: 5.0 });
        let f = five_number(&[0.7]).unwrap();
        assert!([f.min, f.q25, f.median, f.q75, f.max].iter().all(|&v| v == 0.7));
        assert_eq!(five_number(&[1.0, 0.0]).unwrap().median, 0.5);
    }

    #[test]
    fn matches_numpy_linear() {
        // numpy.quantile([1, 2, 4, 8], [0.05, 0.95]) == [1.15, 7.4]
        let q = quantiles(&[8.0, 1.0, 4.0, 2.0], &[0.05, 0.95]).unwrap();
        assert!((q[0] - 1.15).abs() < 1e-12);
        assert!((q[1] - 7.4).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_samples() {
        assert!(five_number(&[]).is_err());
        assert!(five_number(&[1.0, f64::NAN]).is_err());
    }
}
