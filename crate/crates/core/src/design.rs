//! Design matrices and Latin Hypercube samples.
//!
//! A [`DesignMatrix`] stores N points of `[0,1]^d` row-major. An
//! [`LhsDesign`] adds, for every column, the permutation assigning each row
//! to one of the N equiprobable strata `[k/N, (k+1)/N]`.

use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{mix64, Seed};

#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    n_points: usize,
    n_dims: usize,
    values: Vec<f64>,
}

impl DesignMatrix {
    /// Builds a matrix from row-major `values`. Every entry must be finite
    /// and lie in `[0, 1]`.
    pub fn new(n_points: usize, n_dims: usize, values: Vec<f64>) -> Result<Self> {
        if n_points == 0 || n_dims == 0 {
            return Err(Error::invalid(format!(
                "design needs at least one point and one dimension (got {n_points}x{n_dims})"
            )));
        }
        if values.len() != n_points * n_dims {
            return Err(Error::invalid(format!(
                "expected {} values for a {n_points}x{n_dims} design, got {}",
                n_points * n_dims,
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::invalid(format!(
                "entry ({}, {}) = {} lies outside [0, 1]",
                pos / n_dims + 1,
                pos % n_dims + 1,
                values[pos]
            )));
        }
        Ok(Self {
            n_points,
            n_dims,
            values,
        })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let n_dims = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut values = Vec::with_capacity(rows.len() * n_dims);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != n_dims {
                return Err(Error::invalid(format!(
                    "row {} has {} values, expected {n_dims}",
                    i + 1,
                    row.len()
                )));
            }
            values.extend_from_slice(row);
        }
        Self::new(rows.len(), n_dims, values)
    }

    #[inline]
    pub fn n_points(&self) -> usize {
        self.n_points
    }

    #[inline]
    pub fn n_dims(&self) -> usize {
        self.n_dims
    }

    /// Row-major storage.
    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n_dims..(i + 1) * self.n_dims]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n_dims + j]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.values.chunks_exact(self.n_dims)
    }

    pub fn column(&self, j: usize) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().skip(j).step_by(self.n_dims).copied()
    }

    /// Order-sensitive hash of every entry's bit pattern.
    ///
    /// It is the XOR of one hash per `(row, column, value)` cell, so a swap
    /// can be folded in with four XORs (see [`swap_fingerprint`]).
    pub fn fingerprint(&self) -> u64 {
        let mut h = 0u64;
        for (pos, &v) in self.values.iter().enumerate() {
            h ^= cell_hash(pos / self.n_dims, pos % self.n_dims, v);
        }
        h
    }

    #[inline]
    pub(crate) fn swap_entries(&mut self, column: usize, row_a: usize, row_b: usize) {
        self.values
            .swap(row_a * self.n_dims + column, row_b * self.n_dims + column);
    }

    /// The N×k matrix made of `columns`, in the given order.
    pub fn extract_subprojection(&self, columns: &[usize]) -> Result<DesignMatrix> {
        if columns.is_empty() {
            return Err(Error::invalid("subprojection needs at least one column"));
        }
        for (pos, &c) in columns.iter().enumerate() {
            if c >= self.n_dims {
                return Err(Error::IndexOutOfRange {
                    what: "column",
                    index: c,
                    size: self.n_dims,
                });
            }
            if columns[..pos].contains(&c) {
                return Err(Error::invalid(format!(
                    "column {} listed twice in subprojection",
                    c + 1
                )));
            }
        }
        let k = columns.len();
        let mut values = Vec::with_capacity(self.n_points * k);
        for row in self.rows() {
            values.extend(columns.iter().map(|&c| row[c]));
        }
        Ok(DesignMatrix {
            n_points: self.n_points,
            n_dims: k,
            values,
        })
    }
}

#[inline]
fn cell_hash(row: usize, col: usize, value: f64) -> u64 {
    let key = mix64((row as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ (col as u64) << 40);
    mix64(key ^ value.to_bits())
}

/// Fingerprint after exchanging `(row_a, column)` and `(row_b, column)`,
/// given the two values before the exchange.
#[inline]
pub(crate) fn swap_fingerprint(
    fp: u64,
    column: usize,
    row_a: usize,
    row_b: usize,
    value_a: f64,
    value_b: f64,
) -> u64 {
    fp ^ cell_hash(row_a, column, value_a)
        ^ cell_hash(row_b, column, value_b)
        ^ cell_hash(row_a, column, value_b)
        ^ cell_hash(row_b, column, value_a)
}

/// How points are placed inside their cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LhsVariant {
    /// Uniformly at random inside the cell.
    RandomInCell,
    /// At the cell midpoint `(k + 0.5) / N`.
    Centered,
}

/// A Latin Hypercube sample together with its stratum permutations.
///
/// `permutations[j][i]` is the 0-based stratum of row `i` in column `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct LhsDesign {
    matrix: DesignMatrix,
    permutations: Vec<Vec<u32>>,
    variant: LhsVariant,
}

/// Lower and upper bound of stratum `k` out of `n`.
#[inline]
pub fn stratum_bounds(k: usize, n: usize) -> (f64, f64) {
    (k as f64 / n as f64, (k + 1) as f64 / n as f64)
}

#[inline]
pub fn stratum_midpoint(k: usize, n: usize) -> f64 {
    (k as f64 + 0.5) / n as f64
}

/// Stratum containing `x`: half-open cells `[k/N, (k+1)/N)`, the last one
/// closed at 1.
#[inline]
pub fn stratum_of(x: f64, n: usize) -> usize {
    ((x * n as f64).floor() as usize).min(n - 1)
}

fn check_sizes(n: usize, d: usize) -> Result<()> {
    if n == 0 || d == 0 {
        return Err(Error::invalid(format!(
            "sample size and dimension must be positive (got n={n}, d={d})"
        )));
    }
    if n > u32::MAX as usize {
        return Err(Error::invalid(format!("sample size {n} too large")));
    }
    Ok(())
}

/// Random LHS: one uniform permutation per column, uniform position in
/// each cell.
pub fn generate_random_lhs(n: usize, d: usize, seed: Seed) -> Result<LhsDesign> {
    check_sizes(n, d)?;
    let mut rng = seed.rng();
    let mut permutations = Vec::with_capacity(d);
    let mut values = vec![0.0; n * d];
    for j in 0..d {
        let mut perm: Vec<u32> = (0..n as u32).collect();
        perm.shuffle(&mut rng);
        for (i, &k) in perm.iter().enumerate() {
            let (lo, hi) = stratum_bounds(k as usize, n);
            let u: f64 = rng.random();
            values[i * d + j] = ((k as f64 + u) / n as f64).clamp(lo, hi);
        }
        permutations.push(perm);
    }
    Ok(LhsDesign {
        matrix: DesignMatrix {
            n_points: n,
            n_dims: d,
            values,
        },
        permutations,
        variant: LhsVariant::RandomInCell,
    })
}

/// Centered LHS: random permutations, points at cell midpoints.
pub fn generate_centered_lhs(n: usize, d: usize, seed: Seed) -> Result<LhsDesign> {
    check_sizes(n, d)?;
    let mut rng = seed.rng();
    let permutations = (0..d)
        .map(|_| {
            let mut perm: Vec<u32> = (0..n as u32).collect();
            perm.shuffle(&mut rng);
            perm
        })
        .collect();
    LhsDesign::centered_from_permutations(permutations)
}

/// Simple random sample: i.i.d. uniform entries.
pub fn generate_srs(n: usize, d: usize, seed: Seed) -> Result<DesignMatrix> {
    check_sizes(n, d)?;
    let mut rng = seed.rng();
    let values = (0..n * d).map(|_| rng.random::<f64>()).collect();
    Ok(DesignMatrix {
        n_points: n,
        n_dims: d,
        values,
    })
}

impl LhsDesign {
    /// Builds a design without checking the Latin invariants. Use
    /// [`validate_lhs`] to inspect the result.
    pub fn from_parts(
        matrix: DesignMatrix,
        permutations: Vec<Vec<u32>>,
        variant: LhsVariant,
    ) -> Self {
        Self {
            matrix,
            permutations,
            variant,
        }
    }

    /// Centered design for explicit 0-based permutations (one per column).
    pub fn centered_from_permutations(permutations: Vec<Vec<u32>>) -> Result<Self> {
        let d = permutations.len();
        let n = permutations.first().map_or(0, Vec::len);
        check_sizes(n, d)?;
        let mut values = vec![0.0; n * d];
        for (j, perm) in permutations.iter().enumerate() {
            if perm.len() != n {
                return Err(Error::invalid(format!(
                    "permutation {} has length {}, expected {n}",
                    j + 1,
                    perm.len()
                )));
            }
            for (i, &k) in perm.iter().enumerate() {
                if k as usize >= n {
                    return Err(Error::IndexOutOfRange {
                        what: "stratum",
                        index: k as usize,
                        size: n,
                    });
                }
                values[i * d + j] = stratum_midpoint(k as usize, n);
            }
        }
        let design = Self {
            matrix: DesignMatrix {
                n_points: n,
                n_dims: d,
                values,
            },
            permutations,
            variant: LhsVariant::Centered,
        };
        let report = validate_lhs(&design);
        if let Some(v) = report.violations.first() {
            return Err(Error::invalid(format!("not a Latin hypercube: {v}")));
        }
        Ok(design)
    }

    /// Recovers the permutations of a matrix that is already Latin, e.g.
    /// one read back from disk. The variant is `Centered` when every entry
    /// sits exactly on its cell midpoint.
    pub fn from_matrix(matrix: DesignMatrix) -> Result<Self> {
        let (n, d) = (matrix.n_points, matrix.n_dims);
        let permutations: Vec<Vec<u32>> = (0..d)
            .map(|j| {
                matrix
                    .column(j)
                    .map(|x| {
                        // x * N may round up across a cell boundary
                        let k = stratum_of(x, n);
                        if k > 0 && x < stratum_bounds(k, n).0 {
                            k as u32 - 1
                        } else {
                            k as u32
                        }
                    })
                    .collect()
            })
            .collect();
        let centered = permutations.iter().enumerate().all(|(j, perm)| {
            perm.iter()
                .enumerate()
                .all(|(i, &k)| matrix.get(i, j) == stratum_midpoint(k as usize, n))
        });
        let design = Self {
            matrix,
            permutations,
            variant: if centered {
                LhsVariant::Centered
            } else {
                LhsVariant::RandomInCell
            },
        };
        let report = validate_lhs(&design);
        if let Some(v) = report.violations.first() {
            return Err(Error::invalid(format!("not a Latin hypercube: {v}")));
        }
        Ok(design)
    }

    #[inline]
    pub fn matrix(&self) -> &DesignMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> DesignMatrix {
        self.matrix
    }

    #[inline]
    pub fn permutations(&self) -> &[Vec<u32>] {
        &self.permutations
    }

    #[inline]
    pub fn variant(&self) -> LhsVariant {
        self.variant
    }

    #[inline]
    pub fn n_points(&self) -> usize {
        self.matrix.n_points
    }

    #[inline]
    pub fn n_dims(&self) -> usize {
        self.matrix.n_dims
    }

    pub(crate) fn check_swap(&self, column: usize, row_a: usize, row_b: usize) -> Result<()> {
        if column >= self.n_dims() {
            return Err(Error::IndexOutOfRange {
                what: "column",
                index: column,
                size: self.n_dims(),
            });
        }
        for row in [row_a, row_b] {
            if row >= self.n_points() {
                return Err(Error::IndexOutOfRange {
                    what: "row",
                    index: row,
                    size: self.n_points(),
                });
            }
        }
        if row_a == row_b {
            return Err(Error::IdenticalRows(row_a));
        }
        Ok(())
    }

    /// Exchanges the values and strata of rows `row_a` and `row_b` in
    /// `column`.
    pub fn swap_in_place(&mut self, column: usize, row_a: usize, row_b: usize) -> Result<()> {
        self.check_swap(column, row_a, row_b)?;
        self.swap_unchecked(column, row_a, row_b);
        Ok(())
    }

    #[inline]
    pub(crate) fn swap_unchecked(&mut self, column: usize, row_a: usize, row_b: usize) {
        self.matrix.swap_entries(column, row_a, row_b);
        self.permutations[column].swap(row_a, row_b);
    }

    /// Elementary change: a copy of the design with one column swap applied.
    pub fn elementary_swap(&self, column: usize, row_a: usize, row_b: usize) -> Result<Self> {
        let mut out = self.clone();
        out.swap_in_place(column, row_a, row_b)?;
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ViolationKind {
    /// A permutation has the wrong length or an entry out of range.
    MalformedPermutation,
    /// The same stratum is assigned to two rows of one column.
    DuplicateStratum { stratum: usize },
    /// The value lies outside its recorded stratum.
    OutsideStratum,
    /// Centered variant, but the value is not the cell midpoint.
    NotCentered,
}

/// One failed invariant. Indices are 0-based; `Display` prints them 1-based.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub row: Option<usize>,
    pub column: usize,
    pub kind: ViolationKind,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.row {
            Some(i) => write!(f, "row {}, column {}: ", i + 1, self.column + 1)?,
            None => write!(f, "column {}: ", self.column + 1)?,
        }
        match &self.kind {
            ViolationKind::MalformedPermutation => write!(f, "malformed permutation"),
            ViolationKind::DuplicateStratum { stratum } => {
                write!(f, "stratum {} used more than once", stratum + 1)
            }
            ViolationKind::OutsideStratum => write!(f, "value outside its stratum"),
            ViolationKind::NotCentered => write!(f, "value is not the stratum midpoint"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LhsValidation {
    pub violations: Vec<Violation>,
}

impl LhsValidation {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks that every permutation is a bijection and every value lies in
/// its stratum (exactly on the midpoint for centered designs).
pub fn validate_lhs(design: &LhsDesign) -> LhsValidation {
    let n = design.n_points();
    let d = design.n_dims();
    let mut violations = Vec::new();
    if design.permutations.len() != d {
        for column in design.permutations.len().min(d)..d.max(design.permutations.len()) {
            violations.push(Violation {
                row: None,
                column,
                kind: ViolationKind::MalformedPermutation,
            });
        }
    }
    let mut seen = vec![false; n];
    for (j, perm) in design.permutations.iter().enumerate().take(d) {
        if perm.len() != n || perm.iter().any(|&k| k as usize >= n) {
            violations.push(Violation {
                row: None,
                column: j,
                kind: ViolationKind::MalformedPermutation,
            });
            continue;
        }
        seen.iter_mut().for_each(|s| *s = false);
        for &k in perm {
            let k = k as usize;
            if seen[k] {
                violations.push(Violation {
                    row: None,
                    column: j,
                    kind: ViolationKind::DuplicateStratum { stratum: k },
                });
            }
            seen[k] = true;
        }
        for (i, &k) in perm.iter().enumerate() {
            let x = design.matrix.get(i, j);
            let (lo, hi) = stratum_bounds(k as usize, n);
            if !(lo..=hi).contains(&x) {
                violations.push(Violation {
                    row: Some(i),
                    column: j,
                    kind: ViolationKind::OutsideStratum,
                });
            } else if design.variant == LhsVariant::Centered
                && x != stratum_midpoint(k as usize, n)
            {
                violations.push(Violation {
                    row: Some(i),
                    column: j,
                    kind: ViolationKind::NotCentered,
                });
            }
        }
    }
    LhsValidation { violations }
}
