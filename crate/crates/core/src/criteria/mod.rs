//! Space-filling criteria.
//!
//! Three L²-discrepancies with closed forms and two point-distance
//! criteria:
//!
//! | kind            | reported value                         | direction |
//! |-----------------|----------------------------------------|-----------|
//! | `CenteredL2`    | squared centered discrepancy C²        | minimize  |
//! | `WrapAroundL2`  | squared wrap-around discrepancy W²     | minimize  |
//! | `StarL2`        | star L²-discrepancy (square root)      | minimize  |
//! | `Mindist`       | smallest pairwise Euclidean distance   | maximize  |
//! | `PhiP`          | `[Σ_{i<j} d_ij^-p]^(1/p)`              | minimize  |
//!
//! C² and W² are reported in squared form, star-L² as the root. Values of
//! different kinds are never compared with each other.
//!
//! [`SwapState`] keeps the pairwise terms of a design so that the value
//! after an elementary column swap costs O(N) instead of O(N²d).

mod incremental;
mod oracle;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::design::DesignMatrix;
use crate::error::{Error, Result};

pub use incremental::{apply_swap_delta, init_swap_state, SwapState};
pub use oracle::{mc_discrepancy_oracle, mc_discrepancy_oracle_with, McEstimate};

pub const DEFAULT_P: u32 = 50;

/// Squared discrepancies with magnitude below this are round-off.
const NEGATIVE_ROUNDOFF: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CriterionKind {
    #[serde(rename = "c2")]
    CenteredL2,
    #[serde(rename = "w2")]
    WrapAroundL2,
    #[serde(rename = "l2star")]
    StarL2,
    #[serde(rename = "mindist")]
    Mindist,
    #[serde(rename = "phip")]
    PhiP,
}

impl CriterionKind {
    pub const ALL: [CriterionKind; 5] = [
        CriterionKind::CenteredL2,
        CriterionKind::WrapAroundL2,
        CriterionKind::StarL2,
        CriterionKind::Mindist,
        CriterionKind::PhiP,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CriterionKind::CenteredL2 => "c2",
            CriterionKind::WrapAroundL2 => "w2",
            CriterionKind::StarL2 => "l2star",
            CriterionKind::Mindist => "mindist",
            CriterionKind::PhiP => "phip",
        }
    }

    pub fn direction(self) -> Direction {
        match self {
            CriterionKind::Mindist => Direction::Maximize,
            _ => Direction::Minimize,
        }
    }

    pub fn is_discrepancy(self) -> bool {
        matches!(
            self,
            CriterionKind::CenteredL2 | CriterionKind::WrapAroundL2 | CriterionKind::StarL2
        )
    }
}

impl fmt::Display for CriterionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CriterionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CriterionKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                Error::invalid(format!(
                    "unknown criterion `{s}` (expected one of c2, w2, l2star, mindist, phip)"
                ))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Minimize,
    Maximize,
}

/// Which criterion to evaluate. `p` only matters for [`CriterionKind::PhiP`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CriterionSpec {
    #[serde(rename = "criterion")]
    pub kind: CriterionKind,
    pub p: u32,
}

impl CriterionSpec {
    pub const fn new(kind: CriterionKind) -> Self {
        Self { kind, p: DEFAULT_P }
    }

    pub const fn centered_l2() -> Self {
        Self::new(CriterionKind::CenteredL2)
    }

    pub const fn wraparound_l2() -> Self {
        Self::new(CriterionKind::WrapAroundL2)
    }

    pub const fn star_l2() -> Self {
        Self::new(CriterionKind::StarL2)
    }

    pub const fn mindist() -> Self {
        Self::new(CriterionKind::Mindist)
    }

    pub const fn phi_p(p: u32) -> Self {
        Self {
            kind: CriterionKind::PhiP,
            p,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.p == 0 {
            return Err(Error::invalid("phi_p exponent p must be at least 1"));
        }
        Ok(())
    }

    pub fn direction(&self) -> Direction {
        self.kind.direction()
    }

    /// Maps a criterion value to the quantity every optimizer minimizes.
    #[inline]
    pub fn objective(&self, value: f64) -> f64 {
        match self.direction() {
            Direction::Minimize => value,
            Direction::Maximize => -value,
        }
    }

    /// True if `a` is strictly better than `b`.
    #[inline]
    pub fn is_better(&self, a: f64, b: f64) -> bool {
        self.objective(a) < self.objective(b)
    }

    /// Short label, e.g. `c2` or `phip50`.
    pub fn label(&self) -> String {
        match self.kind {
            CriterionKind::PhiP if self.p != DEFAULT_P => format!("phip{}", self.p),
            k => k.name().to_string(),
        }
    }
}

impl fmt::Display for CriterionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl FromStr for CriterionSpec {
    type Err = Error;

    /// Accepts the kind names plus `phipN` for an explicit exponent.
    fn from_str(s: &str) -> Result<Self> {
        if let Some(p) = s.strip_prefix("phip").filter(|r| !r.is_empty()) {
            let p: u32 = p
                .parse()
                .map_err(|_| Error::invalid(format!("bad phi_p exponent in `{s}`")))?;
            let spec = CriterionSpec::phi_p(p);
            spec.validate()?;
            return Ok(spec);
        }
        Ok(CriterionSpec::new(s.parse()?))
    }
}

/// An evaluated criterion.
///
/// `degenerate` is set when the design has coincident points: mindist is
/// then 0 and phi_p is `+inf`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriterionValue {
    #[serde(flatten)]
    pub spec: CriterionSpec,
    pub value: f64,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub degenerate: bool,
}

impl CriterionValue {
    pub(crate) fn new(spec: CriterionSpec, value: f64) -> Self {
        let degenerate = match spec.kind {
            CriterionKind::Mindist => value == 0.0,
            CriterionKind::PhiP => value.is_infinite(),
            _ => false,
        };
        Self {
            spec,
            value,
            degenerate,
        }
    }

    pub fn kind(&self) -> CriterionKind {
        self.spec.kind
    }
}

/// Per-coordinate factors of the L² closed forms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum L2Kernel {
    Centered,
    WrapAround,
    Star,
}

impl L2Kernel {
    pub(crate) fn for_kind(kind: CriterionKind) -> Option<Self> {
        match kind {
            CriterionKind::CenteredL2 => Some(L2Kernel::Centered),
            CriterionKind::WrapAroundL2 => Some(L2Kernel::WrapAround),
            CriterionKind::StarL2 => Some(L2Kernel::Star),
            _ => None,
        }
    }

    #[inline]
    pub(crate) fn pair(self, x: f64, y: f64) -> f64 {
        match self {
            L2Kernel::Centered => {
                1.0 + 0.5 * (x - 0.5).abs() + 0.5 * (y - 0.5).abs() - 0.5 * (x - y).abs()
            }
            L2Kernel::WrapAround => {
                let t = (x - y).abs();
                1.5 - t * (1.0 - t)
            }
            L2Kernel::Star => 1.0 - x.max(y),
        }
    }

    #[inline]
    pub(crate) fn single(self, x: f64) -> f64 {
        match self {
            L2Kernel::Centered => {
                let a = (x - 0.5).abs();
                1.0 + 0.5 * a - 0.5 * a * a
            }
            L2Kernel::WrapAround => 0.0,
            L2Kernel::Star => 0.5 * (1.0 - x * x),
        }
    }

    #[inline]
    pub(crate) fn has_single(self) -> bool {
        self != L2Kernel::WrapAround
    }

    #[inline]
    pub(crate) fn pair_product(self, a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(&x, &y)| self.pair(x, y)).product()
    }

    #[inline]
    pub(crate) fn single_product(self, a: &[f64]) -> f64 {
        a.iter().map(|&x| self.single(x)).product()
    }

    /// Combines the row-product sums into the reported value.
    ///
    /// `single_sum = Σ_i Π_k g(x_ik)`, `pair_sum = Σ_i Σ_j Π_k f(x_ik, x_jk)`.
    pub(crate) fn assemble(self, n: usize, d: usize, single_sum: f64, pair_sum: f64) -> f64 {
        let nf = n as f64;
        let d = d as i32;
        let sq = match self {
            L2Kernel::Centered => {
                (13.0f64 / 12.0).powi(d) - 2.0 / nf * single_sum + pair_sum / (nf * nf)
            }
            // minus sign: see the crate docs on the wrap-around closed form
            L2Kernel::WrapAround => -(4.0f64 / 3.0).powi(d) + pair_sum / (nf * nf),
            L2Kernel::Star => {
                (1.0f64 / 3.0).powi(d) - 2.0 / nf * single_sum + pair_sum / (nf * nf)
            }
        };
        let sq = clamp_roundoff(sq);
        match self {
            L2Kernel::Star => sq.sqrt(),
            _ => sq,
        }
    }
}

fn clamp_roundoff(sq: f64) -> f64 {
    if sq < 0.0 {
        if sq < -NEGATIVE_ROUNDOFF {
            log::warn!("squared discrepancy {sq:e} is negative beyond round-off; clamped to 0");
        }
        0.0
    } else {
        sq
    }
}

fn l2_full(design: &DesignMatrix, kernel: L2Kernel) -> f64 {
    let n = design.n_points();
    let mut single_sum = 0.0;
    let mut diag = 0.0;
    let mut off = 0.0;
    for i in 0..n {
        let ri = design.row(i);
        if kernel.has_single() {
            single_sum += kernel.single_product(ri);
        }
        diag += kernel.pair_product(ri, ri);
        for j in i + 1..n {
            off += kernel.pair_product(ri, design.row(j));
        }
    }
    kernel.assemble(n, design.n_dims(), single_sum, diag + 2.0 * off)
}

/// Squared centered L²-discrepancy C².
pub fn centered_l2(design: &DesignMatrix) -> CriterionValue {
    CriterionValue::new(
        CriterionSpec::centered_l2(),
        l2_full(design, L2Kernel::Centered),
    )
}

/// Squared wrap-around L²-discrepancy W², with the constant term
/// `-(4/3)^d` so that the value vanishes for perfectly uniform sets.
pub fn wraparound_l2(design: &DesignMatrix) -> CriterionValue {
    CriterionValue::new(
        CriterionSpec::wraparound_l2(),
        l2_full(design, L2Kernel::WrapAround),
    )
}

/// Star L²-discrepancy D₂* (Warnock's closed form, then the square root).
pub fn star_l2(design: &DesignMatrix) -> CriterionValue {
    CriterionValue::new(CriterionSpec::star_l2(), l2_full(design, L2Kernel::Star))
}

#[inline]
pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn require_pairs(design: &DesignMatrix) -> Result<()> {
    if design.n_points() < 2 {
        return Err(Error::invalid(
            "distance criteria need at least two points",
        ));
    }
    Ok(())
}

fn min_squared_distance(design: &DesignMatrix) -> f64 {
    let n = design.n_points();
    let mut best = f64::INFINITY;
    for i in 0..n {
        let ri = design.row(i);
        for j in i + 1..n {
            best = best.min(squared_distance(ri, design.row(j)));
        }
    }
    best
}

/// Smallest pairwise Euclidean distance. Coincident points give 0 and set
/// the `degenerate` flag.
pub fn mindist(design: &DesignMatrix) -> Result<CriterionValue> {
    require_pairs(design)?;
    Ok(CriterionValue::new(
        CriterionSpec::mindist(),
        min_squared_distance(design).sqrt(),
    ))
}

/// `[Σ_{i<j} d_ij^-p]^(1/p)`, computed as
/// `(1/d_min) [Σ (d_min/d_ij)^p]^(1/p)` so that large `p` cannot overflow.
/// Coincident points give `+inf` and set the `degenerate` flag.
pub fn phi_p(design: &DesignMatrix, p: u32) -> Result<CriterionValue> {
    require_pairs(design)?;
    let spec = CriterionSpec::phi_p(p);
    spec.validate()?;
    let dmin = min_squared_distance(design).sqrt();
    if dmin == 0.0 {
        return Ok(CriterionValue::new(spec, f64::INFINITY));
    }
    let n = design.n_points();
    let p = p as i32;
    let mut sum = 0.0;
    for i in 0..n {
        let ri = design.row(i);
        for j in i + 1..n {
            sum += (dmin / squared_distance(ri, design.row(j)).sqrt()).powi(p);
        }
    }
    Ok(CriterionValue::new(spec, sum.powf(1.0 / p as f64) / dmin))
}

/// Evaluates `spec` on `design`.
pub fn evaluate(design: &DesignMatrix, spec: CriterionSpec) -> Result<CriterionValue> {
    spec.validate()?;
    match spec.kind {
        CriterionKind::CenteredL2 => Ok(centered_l2(design)),
        CriterionKind::WrapAroundL2 => Ok(wraparound_l2(design)),
        CriterionKind::StarL2 => Ok(star_l2(design)),
        CriterionKind::Mindist => mindist(design),
        CriterionKind::PhiP => phi_p(design, spec.p),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::{generate_random_lhs, generate_srs};
    use crate::rng::Seed;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn one(point: &[f64]) -> DesignMatrix {
        DesignMatrix::from_rows(&[point]).unwrap()
    }

    #[test]
    fn centered_single_point() {
        let v = centered_l2(&one(&[0.5, 0.5])).value;
        assert_relative_eq!(v, 25.0 / 144.0, epsilon = 1e-12);
        let v = centered_l2(&one(&[0.0])).value;
        assert_relative_eq!(v, 1.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn wraparound_single_point() {
        for x in [0.0, 0.3, 1.0] {
            assert_relative_eq!(wraparound_l2(&one(&[x])).value, 1.0 / 6.0, epsilon = 1e-12);
            assert_relative_eq!(
                wraparound_l2(&one(&[x, 0.7])).value,
                9.0 / 4.0 - 16.0 / 9.0,
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn star_single_point() {
        let v = star_l2(&one(&[0.5])).value;
        assert_relative_eq!(v, (1.0f64 / 12.0).sqrt(), epsilon = 1e-12);
        // x^2 - x + 1/3 is minimal at x = 0.5
        let best = (0..=100)
            .map(|k| k as f64 / 100.0)
            .min_by(|a, b| star_l2(&one(&[*a])).value.total_cmp(&star_l2(&one(&[*b])).value))
            .unwrap();
        assert_eq!(best, 0.5);
    }

    #[test]
    fn distance_examples() {
        let m = DesignMatrix::from_rows(&[[0.0, 0.0], [1.0, 1.0]]).unwrap();
        assert_relative_eq!(mindist(&m).unwrap().value, 2f64.sqrt());
        let m = DesignMatrix::from_rows(&[[0.0, 0.0], [0.0, 1.0], [1.0, 0.0]]).unwrap();
        assert_relative_eq!(mindist(&m).unwrap().value, 1.0);

        let m = DesignMatrix::from_rows(&[[0.0, 0.0], [0.0, 1.0]]).unwrap();
        for p in [1, 2, 50, 200] {
            assert_relative_eq!(phi_p(&m, p).unwrap().value, 1.0, epsilon = 1e-15);
        }
        let h = 3f64.sqrt() / 2.0;
        let tri = DesignMatrix::from_rows(&[[0.0, 0.0], [1.0, 0.0], [0.5, h]]).unwrap();
        assert_relative_eq!(
            phi_p(&tri, 50).unwrap().value,
            3f64.powf(1.0 / 50.0),
            epsilon = 1e-12
        );
    }

    #[test]
    fn coincident_points() {
        let m = DesignMatrix::from_rows(&[[0.2, 0.2], [0.2, 0.2], [0.9, 0.1]]).unwrap();
        let md = mindist(&m).unwrap();
        assert_eq!(md.value, 0.0);
        assert!(md.degenerate);
        let pp = phi_p(&m, 50).unwrap();
        assert!(pp.value.is_infinite() && pp.degenerate);
    }

    #[test]
    fn distance_criteria_need_two_points() {
        let m = one(&[0.3, 0.3]);
        assert!(mindist(&m).is_err());
        assert!(phi_p(&m, 50).is_err());
        assert!(evaluate(&m, CriterionSpec::phi_p(0)).is_err());
    }

    #[test]
    fn phi_p_does_not_overflow_for_close_points() {
        let m = DesignMatrix::from_rows(&[[0.0], [1e-9], [0.5]]).unwrap();
        let v = phi_p(&m, 50).unwrap().value;
        assert!(v.is_finite());
        assert_relative_eq!(v, 1e9, max_relative = 1e-6);
    }

    #[test]
    fn evaluate_dispatches() {
        let lhs = generate_random_lhs(12, 3, Seed(3)).unwrap();
        let m = lhs.matrix();
        assert_eq!(
            evaluate(m, CriterionSpec::centered_l2()).unwrap(),
            centered_l2(m)
        );
        assert_eq!(
            evaluate(m, CriterionSpec::mindist()).unwrap(),
            mindist(m).unwrap()
        );
        assert_eq!(
            evaluate(m, CriterionSpec::phi_p(10)).unwrap(),
            phi_p(m, 10).unwrap()
        );
    }

    #[test]
    fn json_shape() {
        let v = CriterionValue::new(CriterionSpec::phi_p(50), 1.5);
        let json = serde_json::to_value(v).unwrap();
        assert_eq!(
            json,
            serde_json::json!({"criterion": "phip", "p": 50, "value": 1.5})
        );
        let back: CriterionValue = serde_json::from_value(json).unwrap();
        assert_eq!(back, v);
        let v = CriterionValue::new(CriterionSpec::centered_l2(), 0.25);
        assert_eq!(
            serde_json::to_string(&v).unwrap(),
            r#"{"criterion":"c2","p":50,"value":0.25}"#
        );
    }

    #[test]
    fn names_round_trip() {
        for k in CriterionKind::ALL {
            assert_eq!(k.name().parse::<CriterionKind>().unwrap(), k);
        }
        assert_eq!(
            "phip20".parse::<CriterionSpec>().unwrap(),
            CriterionSpec::phi_p(20)
        );
        assert!("maxpro".parse::<CriterionSpec>().is_err());
        assert!("phip0".parse::<CriterionSpec>().is_err());
    }

    fn permute_columns(m: &DesignMatrix, order: &[usize]) -> DesignMatrix {
        m.extract_subprojection(order).unwrap()
    }

    fn all_values(m: &DesignMatrix) -> Vec<f64> {
        [
            CriterionSpec::centered_l2(),
            CriterionSpec::wraparound_l2(),
            CriterionSpec::star_l2(),
            CriterionSpec::mindist(),
            CriterionSpec::phi_p(50),
        ]
        .into_iter()
        .map(|s| evaluate(m, s).unwrap().value)
        .collect()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn invariant_under_row_and_column_permutations(n in 2usize..15, d in 1usize..5, seed: u64, rot in 0usize..5, shift in 1usize..15) {
            let m = generate_srs(n, d, Seed(seed)).unwrap();
            let order: Vec<usize> = (0..d).map(|j| (j + rot) % d).collect();
            let rows: Vec<Vec<f64>> = (0..n).map(|i| m.row((i + shift) % n).to_vec()).collect();
            let by_rows = DesignMatrix::from_rows(&rows).unwrap();
            let base = all_values(&m);
            for other in [all_values(&permute_columns(&m, &order)), all_values(&by_rows)] {
                for (a, b) in base.iter().zip(&other) {
                    prop_assert!((a - b).abs() <= 1e-10 * a.abs().max(1e-300), "{a} vs {b}");
                }
            }
        }

        #[test]
        fn centered_is_reflection_invariant(n in 1usize..15, d in 1usize..5, seed: u64, col in 0usize..5) {
            let m = generate_srs(n, d, Seed(seed)).unwrap();
            let col = col % d;
            let mut v = m.values().to_vec();
            for i in 0..n { v[i * d + col] = 1.0 - v[i * d + col]; }
            let r = DesignMatrix::new(n, d, v).unwrap();
            let (a, b) = (centered_l2(&m).value, centered_l2(&r).value);
            prop_assert!((a - b).abs() <= 1e-10 * a.max(1e-12));
        }

        #[test]
        fn wraparound_is_shift_invariant(n in 1usize..15, d in 1usize..5, seed: u64, col in 0usize..5, t in 0.0f64..1.0) {
            let m = generate_srs(n, d, Seed(seed)).unwrap();
            let col = col % d;
            let mut v = m.values().to_vec();
            for i in 0..n { v[i * d + col] = (v[i * d + col] + t).fract(); }
            let s = DesignMatrix::new(n, d, v).unwrap();
            let (a, b) = (wraparound_l2(&m).value, wraparound_l2(&s).value);
            prop_assert!((a - b).abs() <= 1e-10 * a.max(1e-12));
        }

        #[test]
        fn discrepancies_are_nonnegative(n in 1usize..20, d in 1usize..6, seed: u64) {
            let m = generate_srs(n, d, Seed(seed)).unwrap();
            prop_assert!(centered_l2(&m).value >= 0.0);
            prop_assert!(wraparound_l2(&m).value >= 0.0);
            prop_assert!(star_l2(&m).value >= 0.0);
        }
    }
}
