//! O(N) re-evaluation of a criterion after an elementary swap.
//!
//! An elementary swap exchanges the entries of rows `a` and `b` in one
//! column `k`. Only pair terms involving `a` or `b` change, and each of
//! them changes in a single coordinate factor:
//!
//! - L² discrepancies keep the N×N matrix of pair products
//!   `Π_m f(x_im, x_jm)` and the N single-point products. A changed
//!   product is rescaled by `f_new / f_old` in the swapped column; the
//!   `(a, b)` product itself is unchanged because `f` is symmetric.
//! - Distance criteria keep the N×N squared distances, updated by
//!   replacing one squared coordinate difference. phi_p also keeps the
//!   scaled terms `(s / d_ij)^p` and their row sums; mindist keeps the row
//!   minima.
//!
//! Running sums are re-summed from the cached matrices every N commits and
//! the caches are rebuilt from the design every `REBUILD_PERIOD * N`
//! commits, which bounds round-off drift over long optimizations.

use crate::design::{swap_fingerprint, DesignMatrix, LhsDesign};
use crate::error::{Error, Result};

use super::{
    evaluate, squared_distance, CriterionKind, CriterionSpec, CriterionValue, L2Kernel,
};

const REBUILD_PERIOD: usize = 32;

/// Below this a coordinate factor is not used as a divisor; the product is
/// recomputed from scratch instead.
const TINY_FACTOR: f64 = 1e-6;

/// Incremental evaluator owning a copy of the design it tracks.
#[derive(Debug, Clone)]
pub struct SwapState {
    spec: CriterionSpec,
    design: LhsDesign,
    fingerprint: u64,
    value: f64,
    cache: Cache,
    staged: Option<Staged>,
    commits: usize,
}

#[derive(Debug, Clone, Copy)]
struct Staged {
    column: usize,
    row_a: usize,
    row_b: usize,
    value: f64,
}

#[derive(Debug, Clone)]
enum Cache {
    L2(L2Cache),
    Distance(DistanceCache),
}

impl SwapState {
    pub fn new(design: LhsDesign, spec: CriterionSpec) -> Result<Self> {
        spec.validate()?;
        if design.n_points() < 2 {
            return Err(Error::invalid(
                "elementary swaps need a design with at least two points",
            ));
        }
        let cache = match L2Kernel::for_kind(spec.kind) {
            Some(kernel) => Cache::L2(L2Cache::build(design.matrix(), kernel)),
            None => Cache::Distance(DistanceCache::build(design.matrix(), spec)),
        };
        let mut state = Self {
            spec,
            fingerprint: design.matrix().fingerprint(),
            design,
            value: 0.0,
            cache,
            staged: None,
            commits: 0,
        };
        state.value = state.current_from_cache();
        Ok(state)
    }

    pub fn spec(&self) -> CriterionSpec {
        self.spec
    }

    pub fn design(&self) -> &LhsDesign {
        &self.design
    }

    pub fn into_design(self) -> LhsDesign {
        self.design
    }

    /// Fingerprint of the tracked design (see [`DesignMatrix::fingerprint`]).
    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    pub fn value(&self) -> CriterionValue {
        CriterionValue::new(self.spec, self.value)
    }

    #[inline]
    pub fn raw_value(&self) -> f64 {
        self.value
    }

    /// Fails with [`Error::StaleState`] unless `design` is the tracked one.
    pub fn ensure_matches(&self, design: &DesignMatrix) -> Result<()> {
        let found = design.fingerprint();
        if found != self.fingerprint
            || design.n_points() != self.design.n_points()
            || design.n_dims() != self.design.n_dims()
        {
            return Err(Error::StaleState {
                expected: self.fingerprint,
                found,
            });
        }
        Ok(())
    }

    /// Criterion value the design would have after swapping rows `row_a`
    /// and `row_b` in `column`. The swap is staged; [`SwapState::commit`]
    /// applies it. Staging another swap discards the previous one.
    pub fn evaluate_swap(&mut self, column: usize, row_a: usize, row_b: usize) -> Result<f64> {
        self.design.check_swap(column, row_a, row_b)?;
        let m = self.design.matrix();
        let value = match &mut self.cache {
            Cache::L2(c) => c.stage(m, column, row_a, row_b),
            Cache::Distance(c) => c.stage(m, column, row_a, row_b),
        };
        let value = match value {
            Some(v) => v,
            // out of the cache's numeric range; evaluate the swapped design directly
            None => {
                let swapped = self.design.elementary_swap(column, row_a, row_b)?;
                evaluate(swapped.matrix(), self.spec)?.value
            }
        };
        self.staged = Some(Staged {
            column,
            row_a,
            row_b,
            value,
        });
        Ok(value)
    }

    /// Applies the staged swap.
    pub fn commit(&mut self) -> Result<CriterionValue> {
        let Some(st) = self.staged.take() else {
            return Err(Error::invalid("no staged swap to commit"));
        };
        let (va, vb) = (
            self.design.matrix().get(st.row_a, st.column),
            self.design.matrix().get(st.row_b, st.column),
        );
        match &mut self.cache {
            Cache::L2(c) => c.commit(st.row_a, st.row_b),
            Cache::Distance(c) => c.commit(st.row_a, st.row_b),
        }
        self.design.swap_unchecked(st.column, st.row_a, st.row_b);
        self.fingerprint =
            swap_fingerprint(self.fingerprint, st.column, st.row_a, st.row_b, va, vb);
        self.value = st.value;
        self.commits += 1;

        let n = self.design.n_points();
        let needs_rebuild = match &self.cache {
            Cache::Distance(c) => c.out_of_range(),
            Cache::L2(_) => false,
        };
        if needs_rebuild || self.commits.is_multiple_of(REBUILD_PERIOD * n) {
            self.rebuild();
        } else if self.commits.is_multiple_of(n) {
            match &mut self.cache {
                Cache::L2(c) => c.resum(),
                Cache::Distance(c) => c.resum(),
            }
            self.value = self.current_from_cache();
        }
        Ok(self.value())
    }

    /// Stages and commits in one step.
    pub fn apply_swap(&mut self, column: usize, row_a: usize, row_b: usize) -> Result<CriterionValue> {
        self.evaluate_swap(column, row_a, row_b)?;
        self.commit()
    }

    /// Rebuilds every cache from the tracked design.
    pub fn rebuild(&mut self) {
        let m = self.design.matrix();
        self.cache = match &self.cache {
            Cache::L2(c) => Cache::L2(L2Cache::build(m, c.kernel)),
            Cache::Distance(_) => Cache::Distance(DistanceCache::build(m, self.spec)),
        };
        self.staged = None;
        self.value = self.current_from_cache();
    }

    fn current_from_cache(&self) -> f64 {
        match &self.cache {
            Cache::L2(c) => c.value(),
            Cache::Distance(c) => match c.value() {
                Some(v) => v,
                None => evaluate(self.design.matrix(), self.spec)
                    .map(|v| v.value)
                    .unwrap_or(f64::INFINITY),
            },
        }
    }
}

/// Builds a [`SwapState`] tracking a copy of `design`.
pub fn init_swap_state(design: &LhsDesign, spec: CriterionSpec) -> Result<SwapState> {
    SwapState::new(design.clone(), spec)
}

/// Applies one elementary swap to `design` through `state`.
///
/// `design` must be the design the state tracks; otherwise
/// [`Error::StaleState`] is returned and nothing changes. Returns the new
/// value and the swapped design.
pub fn apply_swap_delta(
    state: &mut SwapState,
    design: &LhsDesign,
    column: usize,
    row_a: usize,
    row_b: usize,
) -> Result<(CriterionValue, LhsDesign)> {
    state.ensure_matches(design.matrix())?;
    let value = state.apply_swap(column, row_a, row_b)?;
    Ok((value, state.design().clone()))
}

/// Product of kernel factors between rows `a` and `b`, with column `k`
/// replaced by `(xa, xb)`.
#[inline]
fn product_with(kernel: L2Kernel, a: &[f64], b: &[f64], k: usize, xa: f64, xb: f64) -> f64 {
    let mut prod = 1.0;
    for m in 0..a.len() {
        prod *= if m == k {
            kernel.pair(xa, xb)
        } else {
            kernel.pair(a[m], b[m])
        };
    }
    prod
}

#[inline]
fn single_with(kernel: L2Kernel, a: &[f64], k: usize, xa: f64) -> f64 {
    let mut prod = 1.0;
    for (m, &x) in a.iter().enumerate() {
        prod *= kernel.single(if m == k { xa } else { x });
    }
    prod
}

#[derive(Debug, Clone)]
struct L2Cache {
    kernel: L2Kernel,
    n: usize,
    d: usize,
    pair: Vec<f64>,
    single: Vec<f64>,
    pair_sum: f64,
    single_sum: f64,
    new_a: Vec<f64>,
    new_b: Vec<f64>,
    new_single_a: f64,
    new_single_b: f64,
    new_pair_sum: f64,
    new_single_sum: f64,
}

impl L2Cache {
    fn build(m: &DesignMatrix, kernel: L2Kernel) -> Self {
        let n = m.n_points();
        let mut pair = vec![0.0; n * n];
        for i in 0..n {
            let ri = m.row(i);
            for j in i..n {
                let p = kernel.pair_product(ri, m.row(j));
                pair[i * n + j] = p;
                pair[j * n + i] = p;
            }
        }
        let single = if kernel.has_single() {
            m.rows().map(|r| kernel.single_product(r)).collect()
        } else {
            vec![0.0; n]
        };
        let mut c = Self {
            kernel,
            n,
            d: m.n_dims(),
            pair,
            single,
            pair_sum: 0.0,
            single_sum: 0.0,
            new_a: vec![0.0; n],
            new_b: vec![0.0; n],
            new_single_a: 0.0,
            new_single_b: 0.0,
            new_pair_sum: 0.0,
            new_single_sum: 0.0,
        };
        c.resum();
        c
    }

    fn resum(&mut self) {
        self.pair_sum = self.pair.iter().sum();
        self.single_sum = self.single.iter().sum();
    }

    fn value(&self) -> f64 {
        self.kernel
            .assemble(self.n, self.d, self.single_sum, self.pair_sum)
    }

    fn stage(&mut self, m: &DesignMatrix, k: usize, a: usize, b: usize) -> Option<f64> {
        let (n, kernel) = (self.n, self.kernel);
        let (row_a, row_b) = (m.row(a), m.row(b));
        let (xa, xb) = (row_a[k], row_b[k]);
        let mut delta = 0.0;
        for j in 0..n {
            if j == a || j == b {
                continue;
            }
            let row_j = m.row(j);
            let xj = row_j[k];
            let old_a = self.pair[a * n + j];
            let old_b = self.pair[b * n + j];
            let fa = kernel.pair(xa, xj);
            let fb = kernel.pair(xb, xj);
            // row a moves from xa to xb in column k, row b the other way
            let na = if fa.abs() > TINY_FACTOR {
                old_a / fa * fb
            } else {
                product_with(kernel, row_a, row_j, k, xb, xj)
            };
            let nb = if fb.abs() > TINY_FACTOR {
                old_b / fb * fa
            } else {
                product_with(kernel, row_b, row_j, k, xa, xj)
            };
            self.new_a[j] = na;
            self.new_b[j] = nb;
            delta += (na - old_a) + (nb - old_b);
        }
        let ab = self.pair[a * n + b];
        self.new_a[b] = ab;
        self.new_b[a] = ab;

        let (faa, fbb) = (kernel.pair(xa, xa), kernel.pair(xb, xb));
        let old_aa = self.pair[a * n + a];
        let old_bb = self.pair[b * n + b];
        let naa = if faa.abs() > TINY_FACTOR {
            old_aa / faa * fbb
        } else {
            product_with(kernel, row_a, row_a, k, xb, xb)
        };
        let nbb = if fbb.abs() > TINY_FACTOR {
            old_bb / fbb * faa
        } else {
            product_with(kernel, row_b, row_b, k, xa, xa)
        };
        self.new_a[a] = naa;
        self.new_b[b] = nbb;
        self.new_pair_sum = self.pair_sum + 2.0 * delta + (naa - old_aa) + (nbb - old_bb);

        if kernel.has_single() {
            let (ga, gb) = (kernel.single(xa), kernel.single(xb));
            let (sa, sb) = (self.single[a], self.single[b]);
            self.new_single_a = if ga.abs() > TINY_FACTOR {
                sa / ga * gb
            } else {
                single_with(kernel, row_a, k, xb)
            };
            self.new_single_b = if gb.abs() > TINY_FACTOR {
                sb / gb * ga
            } else {
                single_with(kernel, row_b, k, xa)
            };
            self.new_single_sum =
                self.single_sum + (self.new_single_a - sa) + (self.new_single_b - sb);
        } else {
            self.new_single_sum = 0.0;
        }
        Some(
            kernel.assemble(n, self.d, self.new_single_sum, self.new_pair_sum),
        )
    }

    fn commit(&mut self, a: usize, b: usize) {
        let n = self.n;
        for j in 0..n {
            let (na, nb) = (self.new_a[j], self.new_b[j]);
            self.pair[a * n + j] = na;
            self.pair[j * n + a] = na;
            self.pair[b * n + j] = nb;
            self.pair[j * n + b] = nb;
        }
        self.pair_sum = self.new_pair_sum;
        if self.kernel.has_single() {
            self.single[a] = self.new_single_a;
            self.single[b] = self.new_single_b;
            self.single_sum = self.new_single_sum;
        }
    }
}

#[derive(Debug, Clone)]
struct DistanceCache {
    kind: CriterionKind,
    p: i32,
    n: usize,
    d2: Vec<f64>,
    // phi_p: terms (scale / d_ij)^p and their row sums
    scale: f64,
    terms: Vec<f64>,
    row_sums: Vec<f64>,
    // mindist: smallest squared distance per row
    row_min: Vec<f64>,
    new_d2_a: Vec<f64>,
    new_d2_b: Vec<f64>,
    new_terms_a: Vec<f64>,
    new_terms_b: Vec<f64>,
    new_rows: Vec<f64>,
}

/// Scaled phi_p sums outside this range trigger a rescale.
const SUM_RANGE: std::ops::RangeInclusive<f64> = 1e-200..=1e200;

impl DistanceCache {
    fn build(m: &DesignMatrix, spec: CriterionSpec) -> Self {
        let n = m.n_points();
        let mut d2 = vec![0.0; n * n];
        let mut min_d2 = f64::INFINITY;
        for i in 0..n {
            let ri = m.row(i);
            for j in i + 1..n {
                let v = squared_distance(ri, m.row(j));
                d2[i * n + j] = v;
                d2[j * n + i] = v;
                min_d2 = min_d2.min(v);
            }
        }
        let is_phi = spec.kind == CriterionKind::PhiP;
        let scale = if min_d2 > 0.0 && min_d2.is_finite() {
            min_d2.sqrt()
        } else {
            1.0
        };
        let mut c = Self {
            kind: spec.kind,
            p: spec.p as i32,
            n,
            d2,
            scale,
            terms: if is_phi { vec![0.0; n * n] } else { Vec::new() },
            row_sums: vec![0.0; n],
            row_min: vec![0.0; n],
            new_d2_a: vec![0.0; n],
            new_d2_b: vec![0.0; n],
            new_terms_a: vec![0.0; n],
            new_terms_b: vec![0.0; n],
            new_rows: vec![0.0; n],
        };
        if is_phi {
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        c.terms[i * n + j] = c.term(c.d2[i * n + j]);
                    }
                }
            }
        }
        c.resum();
        c
    }

    #[inline]
    fn term(&self, d2: f64) -> f64 {
        if d2 <= 0.0 {
            f64::INFINITY
        } else {
            (self.scale / d2.sqrt()).powi(self.p)
        }
    }

    fn resum(&mut self) {
        let n = self.n;
        for i in 0..n {
            let row = i * n..(i + 1) * n;
            match self.kind {
                CriterionKind::PhiP => self.row_sums[i] = self.terms[row].iter().sum(),
                _ => {
                    self.row_min[i] = self.d2[row]
                        .iter()
                        .enumerate()
                        .filter(|&(j, _)| j != i)
                        .map(|(_, &v)| v)
                        .fold(f64::INFINITY, f64::min)
                }
            }
        }
    }

    fn phi_from_sum(&self, sum: f64) -> Option<f64> {
        if sum.is_finite() && sum > 0.0 && SUM_RANGE.contains(&sum) {
            Some(sum.powf(1.0 / self.p as f64) / self.scale)
        } else {
            None
        }
    }

    fn value(&self) -> Option<f64> {
        match self.kind {
            CriterionKind::PhiP => {
                let sum: f64 = self.row_sums.iter().sum::<f64>() / 2.0;
                self.phi_from_sum(sum)
            }
            _ => Some(self.row_min.iter().copied().fold(f64::INFINITY, f64::min).sqrt()),
        }
    }

    fn out_of_range(&self) -> bool {
        self.kind == CriterionKind::PhiP
            && !SUM_RANGE.contains(&(self.row_sums.iter().sum::<f64>() / 2.0))
    }

    fn stage(&mut self, m: &DesignMatrix, k: usize, a: usize, b: usize) -> Option<f64> {
        let n = self.n;
        let (row_a, row_b) = (m.row(a), m.row(b));
        let (xa, xb) = (row_a[k], row_b[k]);
        for j in 0..n {
            if j == a || j == b {
                continue;
            }
            let row_j = m.row(j);
            let xj = row_j[k];
            let (da, db) = ((xa - xj) * (xa - xj), (xb - xj) * (xb - xj));
            let (old_a, old_b) = (self.d2[a * n + j], self.d2[b * n + j]);
            let mut na = old_a - da + db;
            let mut nb = old_b - db + da;
            // cancellation guard: recompute small results exactly
            if na < 1e-2 * old_a.max(db) {
                na = squared_distance_with(row_a, row_j, k, xb);
            }
            if nb < 1e-2 * old_b.max(da) {
                nb = squared_distance_with(row_b, row_j, k, xa);
            }
            self.new_d2_a[j] = na;
            self.new_d2_b[j] = nb;
        }
        let ab = self.d2[a * n + b];
        self.new_d2_a[b] = ab;
        self.new_d2_b[a] = ab;
        self.new_d2_a[a] = 0.0;
        self.new_d2_b[b] = 0.0;

        match self.kind {
            CriterionKind::PhiP => self.stage_phi(a, b),
            _ => Some(self.stage_mindist(a, b)),
        }
    }

    fn stage_phi(&mut self, a: usize, b: usize) -> Option<f64> {
        let n = self.n;
        for j in 0..n {
            if j == a || j == b {
                continue;
            }
            self.new_terms_a[j] = self.term(self.new_d2_a[j]);
            self.new_terms_b[j] = self.term(self.new_d2_b[j]);
        }
        let tab = self.terms[a * n + b];
        self.new_terms_a[b] = tab;
        self.new_terms_b[a] = tab;
        self.new_terms_a[a] = 0.0;
        self.new_terms_b[b] = 0.0;

        let mut total = 0.0;
        for i in 0..n {
            let r = if i == a {
                self.new_terms_a.iter().sum()
            } else if i == b {
                self.new_terms_b.iter().sum()
            } else {
                let old = self.terms[i * n + a] + self.terms[i * n + b];
                let new = self.new_terms_a[i] + self.new_terms_b[i];
                if old > 0.5 * self.row_sums[i] || !old.is_finite() {
                    // the removed terms dominate the row; subtracting them
                    // would cancel catastrophically
                    let mut s = 0.0;
                    for j in 0..n {
                        s += if j == a {
                            self.new_terms_a[i]
                        } else if j == b {
                            self.new_terms_b[i]
                        } else {
                            self.terms[i * n + j]
                        };
                    }
                    s
                } else {
                    self.row_sums[i] - old + new
                }
            };
            self.new_rows[i] = r;
            total += r;
        }
        self.phi_from_sum(total / 2.0)
    }

    fn stage_mindist(&mut self, a: usize, b: usize) -> f64 {
        let n = self.n;
        let mut global = f64::INFINITY;
        for i in 0..n {
            let r = if i == a || i == b {
                let row = if i == a { &self.new_d2_a } else { &self.new_d2_b };
                row.iter()
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .map(|(_, &v)| v)
                    .fold(f64::INFINITY, f64::min)
            } else {
                let cur = self.row_min[i];
                let (oa, ob) = (self.d2[i * n + a], self.d2[i * n + b]);
                let (na, nb) = (self.new_d2_a[i], self.new_d2_b[i]);
                if (oa == cur && na > cur) || (ob == cur && nb > cur) {
                    // the row minimum came from a or b and has grown
                    let mut best = na.min(nb);
                    for j in 0..n {
                        if j != i && j != a && j != b {
                            best = best.min(self.d2[i * n + j]);
                        }
                    }
                    best
                } else {
                    cur.min(na).min(nb)
                }
            };
            self.new_rows[i] = r;
            global = global.min(r);
        }
        global.sqrt()
    }

    fn commit(&mut self, a: usize, b: usize) {
        let n = self.n;
        for j in 0..n {
            let (na, nb) = (self.new_d2_a[j], self.new_d2_b[j]);
            self.d2[a * n + j] = na;
            self.d2[j * n + a] = na;
            self.d2[b * n + j] = nb;
            self.d2[j * n + b] = nb;
        }
        match self.kind {
            CriterionKind::PhiP => {
                for j in 0..n {
                    let (ta, tb) = (self.new_terms_a[j], self.new_terms_b[j]);
                    self.terms[a * n + j] = ta;
                    self.terms[j * n + a] = ta;
                    self.terms[b * n + j] = tb;
                    self.terms[j * n + b] = tb;
                }
                self.row_sums.copy_from_slice(&self.new_rows);
            }
            _ => self.row_min.copy_from_slice(&self.new_rows),
        }
    }
}

#[inline]
fn squared_distance_with(a: &[f64], b: &[f64], k: usize, xa: f64) -> f64 {
    let mut s = 0.0;
    for m in 0..a.len() {
        let x = if m == k { xa } else { a[m] };
        s += (x - b[m]) * (x - b[m]);
    }
    s
}
