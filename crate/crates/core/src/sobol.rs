//! Sobol' sequence with optional nested uniform (Owen) scrambling.
//!
//! Direction numbers for dimensions 2..=54 come from the Joe–Kuo
//! `new-joe-kuo-6.21201` table (S. Joe and F. Y. Kuo, "Constructing Sobol
//! sequences with better two-dimensional projections", SIAM J. Sci. Comput.
//! 30, 2008), embedded as `data/new-joe-kuo-6.54.txt`. Dimension 1 is the
//! van der Corput sequence. Points are produced in Gray-code order.
//!
//! Scrambling flips bit `l` of a coordinate according to a hash of the
//! seed, the coordinate index, `l`, and the `l - 1` leading bits. Every
//! dyadic interval is mapped onto a dyadic interval of the same level, so
//! the net structure of the sequence survives.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::design::DesignMatrix;
use crate::error::{Error, Result};
use crate::rng::{mix64, Seed};

const TABLE: &str = include_str!("../data/new-joe-kuo-6.54.txt");

pub const MAX_DIMS: usize = 54;
pub const MAX_BITS: u32 = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scramble {
    None,
    OwenNested,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SobolConfig {
    pub dims: usize,
    /// Points dropped from the start of the sequence; 1 drops the origin.
    pub skip: u64,
    pub scramble: Scramble,
    pub seed: Seed,
    pub bit_depth: u32,
}

impl SobolConfig {
    pub fn new(dims: usize) -> Self {
        Self {
            dims,
            skip: 1,
            scramble: Scramble::None,
            seed: Seed(0),
            bit_depth: MAX_BITS,
        }
    }

    pub fn scrambled(dims: usize, seed: Seed) -> Self {
        Self {
            scramble: Scramble::OwenNested,
            seed,
            ..Self::new(dims)
        }
    }

    fn validate(&self, n: usize) -> Result<()> {
        if self.dims == 0 || n == 0 {
            return Err(Error::invalid("Sobol' sequence needs n >= 1 and d >= 1"));
        }
        if self.dims > MAX_DIMS {
            return Err(Error::DimensionUnsupported {
                requested: self.dims,
                max: MAX_DIMS,
            });
        }
        if self.bit_depth == 0 || self.bit_depth > MAX_BITS {
            return Err(Error::invalid(format!(
                "bit depth must be in 1..={MAX_BITS}, got {}",
                self.bit_depth
            )));
        }
        let last = self.skip.checked_add(n as u64);
        if last.is_none_or(|l| l > 1u64 << self.bit_depth) {
            return Err(Error::invalid(format!(
                "{n} points after skipping {} exceed the 2^{} available",
                self.skip, self.bit_depth
            )));
        }
        Ok(())
    }
}

/// Direction integers `V_k = m_k << (MAX_BITS - k)` for `k = 1..=MAX_BITS`.
fn direction_table() -> &'static [[u32; MAX_BITS as usize]] {
    static CELL: OnceLock<Vec<[u32; MAX_BITS as usize]>> = OnceLock::new();
    CELL.get_or_init(|| {
        let bits = MAX_BITS as usize;
        let mut out = Vec::with_capacity(MAX_DIMS);
        let mut first = [0u32; MAX_BITS as usize];
        for (k, v) in first.iter_mut().enumerate() {
            *v = 1 << (bits - 1 - k);
        }
        out.push(first);
        for line in TABLE.lines().skip(1) {
            let nums: Vec<u32> = line
                .split_whitespace()
                .map(|t| t.parse().expect("direction table holds integers"))
                .collect();
            let (s, a) = (nums[1] as usize, nums[2]);
            let mut m = vec![0u32; bits];
            m[..s].copy_from_slice(&nums[3..3 + s]);
            for k in s..bits {
                let mut v = m[k - s] ^ (m[k - s] << s);
                for i in 1..s {
                    if (a >> (s - 1 - i)) & 1 == 1 {
                        v ^= m[k - i] << i;
                    }
                }
                m[k] = v;
            }
            let mut dir = [0u32; MAX_BITS as usize];
            for k in 0..bits {
                dir[k] = m[k] << (bits - 1 - k);
            }
            out.push(dir);
        }
        assert_eq!(out.len(), MAX_DIMS, "direction table is truncated");
        out
    })
}

/// Nested uniform scrambling of the top `bits` bits of `x`.
fn owen_scramble(x: u32, bits: u32, seed: u64, dim: usize) -> u32 {
    let key = mix64(seed ^ mix64(dim as u64 + 1));
    let mut out = 0u32;
    for l in 0..bits {
        let shift = bits - 1 - l;
        let prefix = if l == 0 { 0 } else { (x >> (shift + 1)) as u64 };
        let flip = mix64(key ^ mix64(((l as u64) << 32) ^ prefix)) & 1;
        let bit = ((x >> shift) & 1) ^ flip as u32;
        out |= bit << shift;
    }
    out
}

/// The first `n` points (after `config.skip`) of the Sobol' sequence.
pub fn generate_sobol(n: usize, config: &SobolConfig) -> Result<DesignMatrix> {
    config.validate(n)?;
    let d = config.dims;
    let bits = config.bit_depth;
    let table = direction_table();
    let drop = MAX_BITS - bits;
    let denom = (1u64 << bits) as f64;
    let mut state = vec![0u32; d];
    let mut values = Vec::with_capacity(n * d);
    let total = config.skip + n as u64;
    for index in 0..total {
        if index > 0 {
            // Gray code: flip the direction of the lowest zero bit of index - 1
            let c = (index - 1).trailing_ones() as usize;
            for (j, s) in state.iter_mut().enumerate() {
                *s ^= table[j][c];
            }
        }
        if index < config.skip {
            continue;
        }
        for (j, &s) in state.iter().enumerate() {
            let x = s >> drop;
            let y = match config.scramble {
                Scramble::None => x,
                Scramble::OwenNested => owen_scramble(x, bits, config.seed.0, j),
            };
            values.push(y as f64 / denom);
        }
    }
    DesignMatrix::new(n, d, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_points() {
        let m = generate_sobol(3, &SobolConfig::new(2)).unwrap();
        let rows: Vec<Vec<f64>> = m.rows().map(<[f64]>::to_vec).collect();
        assert_eq!(rows, vec![vec![0.5, 0.5], vec![0.75, 0.25], vec![0.25, 0.75]]);
    }

    #[test]
    fn origin_only_without_skip() {
        let cfg = SobolConfig {
            skip: 0,
            ..SobolConfig::new(3)
        };
        let m = generate_sobol(2, &cfg).unwrap();
        assert_eq!(m.row(0), &[0.0, 0.0, 0.0]);
        assert_eq!(m.row(1), &[0.5, 0.5, 0.5]);
    }

    #[test]
    fn matches_reference_implementation() {
        // integer coordinates (x 2^30) from an independent Joe–Kuo implementation
        let cfg = SobolConfig {
            skip: 0,
            ..SobolConfig::new(54)
        };
        let m = generate_sobol(2049, &cfg).unwrap();
        let cols = [0, 3, 10, 25, 40, 53];
        let expected: [(usize, [u64; 6]); 3] = [
            (100, [444596224, 780140544, 494927872, 8388608, 763363328, 897581056]),
            (1000, [235929600, 726663168, 91226112, 974127104, 980418560, 470810624]),
            (2048, [786432, 801898496, 1000079360, 912523264, 1047789568, 512491520]),
        ];
        let scale = (1u64 << 30) as f64;
        for (i, row) in expected {
            let got: Vec<u64> = cols.iter().map(|&j| (m.get(i, j) * scale) as u64).collect();
            assert_eq!(got, row, "point {i}");
        }
        let total: u64 = m.values().iter().map(|v| (v * scale) as u64).sum();
        assert_eq!(total, 59379605831680);
    }

    #[test]
    fn dimension_limit() {
        assert!(generate_sobol(4, &SobolConfig::new(54)).is_ok());
        assert!(matches!(
            generate_sobol(4, &SobolConfig::new(55)),
            Err(Error::DimensionUnsupported { requested: 55, max: 54 })
        ));
        assert!(generate_sobol(0, &SobolConfig::new(2)).is_err());
    }

    #[test]
    fn unscrambled_points_are_dyadic() {
        let m = generate_sobol(200, &SobolConfig::new(10)).unwrap();
        let scale = (1u64 << MAX_BITS) as f64;
        assert!(m.values().iter().all(|&v| (v * scale).fract() == 0.0));
    }

    #[test]
    fn scrambling_is_deterministic_and_seeded() {
        let a = generate_sobol(64, &SobolConfig::scrambled(5, Seed(1))).unwrap();
        let b = generate_sobol(64, &SobolConfig::scrambled(5, Seed(1))).unwrap();
        let c = generate_sobol(64, &SobolConfig::scrambled(5, Seed(2))).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn scrambling_keeps_one_dimensional_stratification() {
        // 2^m points starting at index 0 form a (0, m, 1)-net per coordinate
        for m in [3u32, 6, 8] {
            let n = 1usize << m;
            let cfg = SobolConfig {
                skip: 0,
                ..SobolConfig::scrambled(12, Seed(m as u64))
            };
            let design = generate_sobol(n, &cfg).unwrap();
            for j in 0..12 {
                let mut hits = vec![0u32; n];
                for x in design.column(j) {
                    hits[((x * n as f64) as usize).min(n - 1)] += 1;
                }
                assert!(hits.iter().all(|&h| h == 1), "m={m} column {j}");
            }
        }
    }
}
