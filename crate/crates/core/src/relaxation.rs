//! The triangle relaxation over reduced variables.
//!
//! Only `x_ij` with `i < j` are columns; `x_ji` is written as `1 - x_ij`
//! wherever it appears, so the pair-complement equalities never show up as
//! rows.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::Permutation;
use crate::numerics::rational::{to_coprime_integers, JsonInt, Rational};
use crate::numerics::{dot, int};

/// Bijection between unordered pairs `i < j` and columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VarIndex {
    n: usize,
}

impl VarIndex {
    pub fn new(n: usize) -> Self {
        VarIndex { n }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.n * (self.n - 1) / 2
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Column of `x_ij`, `i < j`.
    pub fn column(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < j && j < self.n);
        i * (2 * self.n - i - 1) / 2 + (j - i - 1)
    }

    pub fn pair(&self, col: usize) -> (usize, usize) {
        let mut i = 0;
        let mut start = 0;
        loop {
            let width = self.n - i - 1;
            if col < start + width {
                return (i, i + 1 + (col - start));
            }
            start += width;
            i += 1;
        }
    }

    /// `x_ij` for any ordered pair as `(column, coefficient, constant)`, so
    /// that `x_ij = coefficient * x[column] + constant`.
    pub fn term(&self, i: usize, j: usize) -> (usize, i64, i64) {
        debug_assert_ne!(i, j);
        if i < j {
            (self.column(i, j), 1, 0)
        } else {
            (self.column(j, i), -1, 1)
        }
    }

    /// Value of `x_ij` for any ordered pair.
    pub fn value(&self, x: &[Rational], i: usize, j: usize) -> Rational {
        let (c, s, k) = self.term(i, j);
        if s == 1 {
            x[c].clone()
        } else {
            int(k) - &x[c]
        }
    }
}

/// Linear expression over ordered-pair variables, kept in reduced form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AffineExpr {
    pub coeffs: Vec<Rational>,
    pub constant: Rational,
}

impl AffineExpr {
    pub fn zero(vars: &VarIndex) -> Self {
        AffineExpr {
            coeffs: vec![Rational::zero(); vars.len()],
            constant: Rational::zero(),
        }
    }

    /// Adds `weight * x_ij`.
    pub fn add_pair(&mut self, vars: &VarIndex, i: usize, j: usize, weight: &Rational) {
        let (c, s, k) = vars.term(i, j);
        self.coeffs[c] += weight * int(s);
        self.constant += weight * int(k);
    }

    pub fn evaluate(&self, x: &[Rational]) -> Rational {
        dot(&self.coeffs, x) + &self.constant
    }

    /// `lower <= expr <= upper` as a row over the columns.
    pub fn bounded(
        &self,
        lower: Option<Rational>,
        upper: Option<Rational>,
        origin: RowOrigin,
    ) -> Result<LinearInequality> {
        LinearInequality::new(
            self.coeffs.clone(),
            lower.map(|l| l - &self.constant),
            upper.map(|u| u - &self.constant),
            origin,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowOrigin {
    Triangle,
    Bound,
    Fence,
    HullCut,
    Aux,
}

/// `lower <= coeffs . x <= upper`; a missing bound is infinite.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearInequality {
    pub coeffs: Vec<Rational>,
    pub lower: Option<Rational>,
    pub upper: Option<Rational>,
    pub origin: RowOrigin,
}

impl LinearInequality {
    pub fn new(
        coeffs: Vec<Rational>,
        lower: Option<Rational>,
        upper: Option<Rational>,
        origin: RowOrigin,
    ) -> Result<Self> {
        match (&lower, &upper) {
            (None, None) => return Err(Error::Domain("row has no finite bound".into())),
            (Some(l), Some(u)) if l > u => {
                return Err(Error::Domain(format!("lower bound {l} exceeds upper bound {u}")))
            }
            _ => {}
        }
        Ok(LinearInequality {
            coeffs,
            lower,
            upper,
            origin,
        })
    }

    pub fn dim(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_degenerate(&self) -> bool {
        self.coeffs.iter().all(Zero::is_zero)
    }

    pub fn is_satisfied(&self, lhs: &Rational) -> bool {
        self.lower.as_ref().map_or(true, |l| lhs >= l) && self.upper.as_ref().map_or(true, |u| lhs <= u)
    }

    pub fn is_tight(&self, lhs: &Rational) -> bool {
        self.lower.as_ref() == Some(lhs) || self.upper.as_ref() == Some(lhs)
    }

    /// Positive rescaling to coprime integer coefficients.
    pub fn normalized(&self) -> Self {
        let (ints, factor) = to_coprime_integers(&self.coeffs);
        LinearInequality {
            coeffs: ints.into_iter().map(Rational::from_integer).collect(),
            lower: self.lower.as_ref().map(|l| l * &factor),
            upper: self.upper.as_ref().map(|u| u * &factor),
            origin: self.origin,
        }
    }

    /// Canonical form used for duplicate detection: normalized, then negated
    /// if the leading nonzero coefficient is negative.
    pub fn canonical_key(&self) -> (Vec<Rational>, Option<Rational>, Option<Rational>) {
        let n = self.normalized();
        let flip = n
            .coeffs
            .iter()
            .find(|c| !c.is_zero())
            .is_some_and(|c| c.is_negative());
        if flip {
            (
                n.coeffs.iter().map(|c| -c).collect(),
                n.upper.map(|u| -u),
                n.lower.map(|l| -l),
            )
        } else {
            (n.coeffs, n.lower, n.upper)
        }
    }

    pub fn integer_coeffs(&self) -> Option<Vec<i64>> {
        self.coeffs
            .iter()
            .map(|c| if c.denom().is_one() { c.numer().to_i64() } else { None })
            .collect()
    }
}

pub fn evaluate(ineq: &LinearInequality, x: &[Rational]) -> Result<Rational> {
    if ineq.dim() != x.len() {
        return Err(Error::DimensionMismatch {
            expected: ineq.dim(),
            got: x.len(),
        });
    }
    Ok(dot(&ineq.coeffs, x))
}

/// 0/1 characteristic vector over the reduced columns.
pub fn embed_permutation(p: &Permutation, n: usize) -> Result<Vec<Rational>> {
    Ok(embed_bits(p, n)?.into_iter().map(|b| int(b as i64)).collect())
}

pub(crate) fn embed_bits(p: &Permutation, n: usize) -> Result<Vec<u8>> {
    if p.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: p.len(),
        });
    }
    let pos = p.positions();
    let vars = VarIndex::new(n);
    let mut out = vec![0u8; vars.len()];
    for i in 0..n {
        for j in i + 1..n {
            out[vars.column(i, j)] = (pos[i] < pos[j]) as u8;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstraintSystem {
    pub n: usize,
    pub columns: VarIndex,
    /// Triangle rows (lexicographic triples) followed by box rows.
    pub rows: Vec<LinearInequality>,
    pub cut_pool: Vec<LinearInequality>,
}

pub fn build_bn(n: usize) -> Result<ConstraintSystem> {
    if n < 2 {
        return Err(Error::Domain(format!("n >= 2 required, got {n}")));
    }
    let vars = VarIndex::new(n);
    let mut rows = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                let mut coeffs = vec![Rational::zero(); vars.len()];
                coeffs[vars.column(i, j)] = int(1);
                coeffs[vars.column(j, k)] = int(1);
                coeffs[vars.column(i, k)] = int(-1);
                rows.push(LinearInequality::new(coeffs, Some(int(0)), Some(int(1)), RowOrigin::Triangle)?);
            }
        }
    }
    for c in 0..vars.len() {
        let mut coeffs = vec![Rational::zero(); vars.len()];
        coeffs[c] = int(1);
        rows.push(LinearInequality::new(coeffs, Some(int(0)), Some(int(1)), RowOrigin::Bound)?);
    }
    Ok(ConstraintSystem {
        n,
        columns: vars,
        rows,
        cut_pool: Vec::new(),
    })
}

impl ConstraintSystem {
    pub fn dim(&self) -> usize {
        self.columns.len()
    }

    pub fn triangle_count(&self) -> usize {
        let n = self.n;
        n * (n - 1) * (n.saturating_sub(2)) / 6
    }

    pub fn row_count(&self) -> usize {
        self.rows.len() + self.cut_pool.len()
    }

    /// Base rows followed by the cut pool; this is the row numbering used by
    /// tight sets and basis certificates.
    pub fn all_rows(&self) -> impl Iterator<Item = &LinearInequality> {
        self.rows.iter().chain(self.cut_pool.iter())
    }

    pub fn row(&self, idx: usize) -> &LinearInequality {
        if idx < self.rows.len() {
            &self.rows[idx]
        } else {
            &self.cut_pool[idx - self.rows.len()]
        }
    }

    /// Triple `(i, j, k)`, `i < j < k`, behind a triangle row.
    pub fn triangle_triple(&self, row: usize) -> Option<(usize, usize, usize)> {
        if row >= self.triangle_count() {
            return None;
        }
        let n = self.n;
        let mut t = 0;
        for i in 0..n {
            for j in i + 1..n {
                for k in j + 1..n {
                    if t == row {
                        return Some((i, j, k));
                    }
                    t += 1;
                }
            }
        }
        None
    }

    /// Returns the system without its cut pool.
    pub fn base(&self) -> ConstraintSystem {
        ConstraintSystem {
            cut_pool: Vec::new(),
            ..self.clone()
        }
    }

    pub fn add_cut(&self, cut: LinearInequality) -> Result<ConstraintSystem> {
        let mut next = self.clone();
        next.push_cut(cut)?;
        Ok(next)
    }

    /// Appends `cut` unless an equivalent row is already pooled. Returns
    /// whether the pool grew.
    pub fn push_cut(&mut self, cut: LinearInequality) -> Result<bool> {
        if cut.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: cut.dim(),
            });
        }
        if cut.is_degenerate() {
            return Err(Error::Degenerate("cut has no nonzero coefficient".into()));
        }
        let key = cut.canonical_key();
        if self.cut_pool.iter().any(|c| c.canonical_key() == key) {
            return Ok(false);
        }
        self.cut_pool.push(cut.normalized());
        Ok(true)
    }

    pub fn is_feasible(&self, x: &[Rational]) -> bool {
        x.len() == self.dim() && self.all_rows().all(|r| r.is_satisfied(&dot(&r.coeffs, x)))
    }

    /// Indices of rows satisfied with equality at `x`.
    pub fn tight_rows(&self, x: &[Rational]) -> Vec<usize> {
        self.all_rows()
            .enumerate()
            .filter(|(_, r)| r.is_tight(&dot(&r.coeffs, x)))
            .map(|(i, _)| i)
            .collect()
    }

    pub fn integer_rows(&self) -> Option<IntegerRows> {
        IntegerRows::new(self)
    }
}

/// Row `lower <= coeffs . x <= upper` with `i64` coefficients, used for fast
/// scans over 0/1 points.
#[derive(Debug, Clone)]
pub struct IntegerRow {
    pub coeffs: Vec<i64>,
    support: Vec<(usize, i64)>,
    lower: Option<i64>,
    upper: Option<i64>,
}

impl IntegerRow {
    pub fn lhs_bits(&self, bits: &[u8]) -> i64 {
        self.support.iter().map(|&(c, a)| a * bits[c] as i64).sum()
    }

    pub fn tight_at_bits(&self, bits: &[u8]) -> bool {
        let v = self.lhs_bits(bits);
        self.lower == Some(v) || self.upper == Some(v)
    }
}

#[derive(Debug, Clone)]
pub struct IntegerRows {
    pub rows: Vec<IntegerRow>,
}

impl IntegerRows {
    fn new(sys: &ConstraintSystem) -> Option<Self> {
        let mut rows = Vec::with_capacity(sys.row_count());
        for r in sys.all_rows() {
            let n = r.normalized();
            let coeffs = n.integer_coeffs()?;
            // A non-integral bound is never attained by an integer point.
            let as_int = |b: &Option<Rational>| -> Option<i64> {
                b.as_ref()
                    .filter(|v| v.denom().is_one())
                    .and_then(|v| v.numer().to_i64())
            };
            let support = coeffs
                .iter()
                .enumerate()
                .filter(|(_, &a)| a != 0)
                .map(|(c, &a)| (c, a))
                .collect();
            rows.push(IntegerRow {
                lower: as_int(&n.lower),
                upper: as_int(&n.upper),
                coeffs,
                support,
            });
        }
        Some(IntegerRows { rows })
    }

    pub fn tight_at_bits(&self, bits: &[u8]) -> Vec<usize> {
        self.rows
            .iter()
            .enumerate()
            .filter(|(_, r)| r.tight_at_bits(bits))
            .map(|(i, _)| i)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InequalityJson {
    pub n: usize,
    pub coeffs: Vec<JsonInt>,
    /// Nonzero terms as `[i, j, coefficient]` with one-based `i < j`.
    pub terms: Vec<(usize, usize, JsonInt)>,
    pub lower: Option<String>,
    pub rhs: Option<String>,
    pub origin: RowOrigin,
}

impl InequalityJson {
    pub fn from_inequality(ineq: &LinearInequality, n: usize) -> Self {
        let norm = ineq.normalized();
        let vars = VarIndex::new(n);
        let ints: Vec<BigInt> = norm.coeffs.iter().map(|c| c.to_integer()).collect();
        let terms = ints
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(col, c)| {
                let (i, j) = vars.pair(col);
                (i + 1, j + 1, JsonInt::from_bigint(c))
            })
            .collect();
        InequalityJson {
            n,
            coeffs: ints.iter().map(JsonInt::from_bigint).collect(),
            terms,
            lower: norm.lower.as_ref().map(crate::numerics::format_rational),
            rhs: norm.upper.as_ref().map(crate::numerics::format_rational),
            origin: ineq.origin,
        }
    }

    pub fn to_inequality(&self) -> Result<LinearInequality> {
        let vars = VarIndex::new(self.n);
        if self.coeffs.len() != vars.len() {
            return Err(Error::DimensionMismatch {
                expected: vars.len(),
                got: self.coeffs.len(),
            });
        }
        let coeffs = self
            .coeffs
            .iter()
            .map(|c| c.to_bigint().map(Rational::from_integer))
            .collect::<Result<Vec<_>>>()?;
        let parse = |s: &Option<String>| s.as_deref().map(crate::numerics::parse_rational).transpose();
        LinearInequality::new(coeffs, parse(&self.lower)?, parse(&self.rhs)?, self.origin)
    }
}

/// Pairs `(i, j)` with a fractional value at `x`, `i < j`.
pub fn fractional_pairs(vars: &VarIndex, x: &[Rational]) -> BTreeSet<(usize, usize)> {
    (0..vars.len())
        .filter(|&c| !x[c].denom().is_one())
        .map(|c| vars.pair(c))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{frac, half};
    use crate::vertex::fence_point;

    #[test]
    fn var_index_is_bijective() {
        for n in 2..9 {
            let v = VarIndex::new(n);
            let mut seen = BTreeSet::new();
            for i in 0..n {
                for j in i + 1..n {
                    let c = v.column(i, j);
                    assert!(c < v.len());
                    assert_eq!(v.pair(c), (i, j));
                    seen.insert(c);
                }
            }
            assert_eq!(seen.len(), v.len());
        }
    }

    #[test]
    fn counts_match_closed_forms() {
        for n in 2..=10 {
            let sys = build_bn(n).unwrap();
            let cols = n * (n - 1) / 2;
            let tri = n * (n - 1) * (n - 2) / 6;
            assert_eq!(sys.dim(), cols);
            assert_eq!(sys.triangle_count(), tri);
            assert_eq!(sys.rows.len(), tri + cols);
            assert_eq!(sys.rows.iter().filter(|r| r.origin == RowOrigin::Triangle).count(), tri);
        }
        assert!(build_bn(1).is_err());
    }

    #[test]
    fn n3_triangle_row() {
        let sys = build_bn(3).unwrap();
        assert_eq!(sys.dim(), 3);
        assert_eq!(sys.triangle_count(), 1);
        let t = &sys.rows[0];
        // columns: x12, x13, x23
        assert_eq!(t.coeffs, vec![int(1), int(-1), int(1)]);
        assert_eq!((t.lower.clone(), t.upper.clone()), (Some(int(0)), Some(int(1))));
        assert_eq!(sys.triangle_triple(0), Some((0, 1, 2)));
    }

    #[test]
    fn embed_examples() {
        let id = Permutation::identity(4);
        assert!(embed_permutation(&id, 4).unwrap().iter().all(|v| v == &int(1)));
        assert!(embed_permutation(&id.reversed(), 4).unwrap().iter().all(Zero::is_zero));
        let p = Permutation::from_one_based(&[2, 1, 3]).unwrap();
        assert_eq!(embed_permutation(&p, 3).unwrap(), vec![int(0), int(1), int(1)]);
        assert!(embed_permutation(&p, 4).is_err());
    }

    #[test]
    fn triangle_rows_hold_on_permutations() {
        for n in 2..=6 {
            let sys = build_bn(n).unwrap();
            for p in crate::oracle::Permutations::new(n) {
                let x = embed_permutation(&p, n).unwrap();
                for r in &sys.rows {
                    let v = evaluate(r, &x).unwrap();
                    assert!(v == int(0) || v == int(1));
                }
            }
        }
    }

    #[test]
    fn reduced_triangles_match_both_orientations() {
        // x_ij + x_jk - x_ik over every ordered triple equals either the
        // stored row or one minus it.
        let n = 5;
        let sys = build_bn(n).unwrap();
        let vars = sys.columns;
        let x: Vec<Rational> = (0..vars.len()).map(|c| frac((c % 3) as i64, 3)).collect();
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    if i == j || j == k || i == k {
                        continue;
                    }
                    let direct = vars.value(&x, i, j) + vars.value(&x, j, k) - vars.value(&x, i, k);
                    let mut s = [i, j, k];
                    s.sort();
                    let row = (0..sys.triangle_count())
                        .find(|&r| sys.triangle_triple(r) == Some((s[0], s[1], s[2])))
                        .unwrap();
                    let stored = evaluate(&sys.rows[row], &x).unwrap();
                    assert!(direct == stored || direct == int(1) - &stored);
                }
            }
        }
    }

    #[test]
    fn cut_pool_dedups_and_rejects_vacuous() {
        let sys = build_bn(6).unwrap();
        let cut = crate::facets::fence_inequality(&[0, 1, 2], &[3, 4, 5], 6).unwrap();
        let s1 = sys.add_cut(cut.clone()).unwrap();
        let s2 = s1.add_cut(cut.clone()).unwrap();
        assert_eq!(s2.cut_pool.len(), 1);
        let mut scaled = cut.clone();
        scaled.coeffs.iter_mut().for_each(|c| *c *= int(2));
        scaled.upper = scaled.upper.map(|u| u * int(2));
        assert_eq!(s2.add_cut(scaled).unwrap().cut_pool.len(), 1);

        let zero = LinearInequality::new(vec![int(0); 15], Some(int(0)), Some(int(0)), RowOrigin::Aux).unwrap();
        assert!(matches!(sys.add_cut(zero), Err(Error::Degenerate(_))));

        let (x, _) = fence_point(3);
        assert!(sys.is_feasible(&x));
        assert!(!s1.is_feasible(&x));
        assert_eq!(evaluate(&cut, &x).unwrap() - int(1), half());
    }

    #[test]
    fn inequality_json_round_trip() {
        let cut = crate::facets::fence_inequality(&[0, 1, 2], &[3, 4, 5], 6).unwrap();
        let j = InequalityJson::from_inequality(&cut, 6);
        assert_eq!(j.terms.len(), 9);
        assert_eq!(j.rhs.as_deref(), Some("1"));
        let back = j.to_inequality().unwrap();
        assert_eq!(back.canonical_key(), cut.canonical_key());
    }

    #[test]
    fn bounds_must_be_ordered() {
        assert!(LinearInequality::new(vec![int(1)], Some(int(2)), Some(int(1)), RowOrigin::Aux).is_err());
        assert!(LinearInequality::new(vec![int(1)], None, None, RowOrigin::Aux).is_err());
    }
}
