use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::rational::{int, to_coprime_integers, JsonInt, Rational};
use crate::error::{Error, Result};

/// Square matrices at or above this order use Bareiss elimination for the
/// determinant.
pub const BAREISS_THRESHOLD: usize = 12;

#[derive(Clone, PartialEq, Eq)]
pub struct RationalMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<Rational>,
}

impl RationalMatrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<Rational>) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::Shape(format!(
                "{} entries for a {rows}x{cols} matrix",
                entries.len()
            )));
        }
        Ok(RationalMatrix {
            rows,
            cols,
            entries,
        })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        RationalMatrix {
            rows,
            cols,
            entries: vec![Rational::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Rational::one();
        }
        m
    }

    pub fn from_rows(rows: &[Vec<Rational>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Shape("ragged rows".into()));
        }
        Ok(RationalMatrix {
            rows: rows.len(),
            cols,
            entries: rows.iter().flatten().cloned().collect(),
        })
    }

    pub fn from_int_rows<R: AsRef<[i64]>>(rows: &[R]) -> Result<Self> {
        let rows: Vec<Vec<Rational>> = rows
            .iter()
            .map(|r| r.as_ref().iter().map(|&v| int(v)).collect())
            .collect();
        Self::from_rows(&rows)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[Rational] {
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<Rational>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)].clone();
            }
        }
        t
    }

    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> Self {
        let mut s = Self::zeros(rows.len(), cols.len());
        for (a, &i) in rows.iter().enumerate() {
            for (b, &j) in cols.iter().enumerate() {
                s[(a, b)] = self[(i, j)].clone();
            }
        }
        s
    }

    pub fn mul_vec(&self, v: &[Rational]) -> Result<Vec<Rational>> {
        if v.len() != self.cols {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                got: v.len(),
            });
        }
        Ok((0..self.rows).map(|i| dot(self.row(i), v)).collect())
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }
}

impl std::ops::Index<(usize, usize)> for RationalMatrix {
    type Output = Rational;
    fn index(&self, (i, j): (usize, usize)) -> &Rational {
        &self.entries[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for RationalMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Rational {
        &mut self.entries[i * self.cols + j]
    }
}

impl fmt::Debug for RationalMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "RationalMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            let row: Vec<String> = self.row(i).iter().map(|v| v.to_string()).collect();
            writeln!(f, "  {}", row.join(" "))?;
        }
        write!(f, "]")
    }
}

pub fn dot(a: &[Rational], b: &[Rational]) -> Rational {
    a.iter()
        .zip(b)
        .filter(|(x, y)| !x.is_zero() && !y.is_zero())
        .fold(Rational::zero(), |acc, (x, y)| acc + x * y)
}

/// Reduced row echelon form in place. Returns pivot columns.
fn rref(rows: &mut Vec<Vec<Rational>>, cols: usize) -> Vec<usize> {
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows.len() {
            break;
        }
        let Some(p) = (r..rows.len()).find(|&i| !rows[i][c].is_zero()) else {
            continue;
        };
        rows.swap(r, p);
        let inv = rows[r][c].recip();
        for v in rows[r].iter_mut() {
            if !v.is_zero() {
                *v *= &inv;
            }
        }
        let pivot_row = rows[r].clone();
        for (i, row) in rows.iter_mut().enumerate() {
            if i == r || row[c].is_zero() {
                continue;
            }
            let factor = row[c].clone();
            for (x, p) in row.iter_mut().zip(&pivot_row) {
                if !p.is_zero() {
                    *x -= &factor * p;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    rows.truncate(r);
    pivots
}

pub fn rank(m: &RationalMatrix) -> usize {
    let mut rows = m.to_rows();
    rref(&mut rows, m.cols).len()
}

pub fn determinant(m: &RationalMatrix) -> Result<Rational> {
    if !m.is_square() {
        return Err(Error::Shape(format!(
            "determinant of a {}x{} matrix",
            m.rows, m.cols
        )));
    }
    if m.rows >= BAREISS_THRESHOLD {
        Ok(determinant_bareiss(m))
    } else {
        Ok(determinant_gauss(m))
    }
}

fn determinant_gauss(m: &RationalMatrix) -> Rational {
    let n = m.rows;
    let mut a = m.to_rows();
    let mut det = Rational::one();
    for c in 0..n {
        let Some(p) = (c..n).find(|&i| !a[i][c].is_zero()) else {
            return Rational::zero();
        };
        if p != c {
            a.swap(p, c);
            det = -det;
        }
        det *= &a[c][c];
        let pivot = a[c].clone();
        for row in a.iter_mut().skip(c + 1) {
            if row[c].is_zero() {
                continue;
            }
            let factor = &row[c] / &pivot[c];
            for j in c..n {
                if !pivot[j].is_zero() {
                    row[j] -= &factor * &pivot[j];
                }
            }
        }
    }
    det
}

/// Fraction-free elimination on the row-scaled integer matrix.
fn determinant_bareiss(m: &RationalMatrix) -> Rational {
    let n = m.rows;
    let mut scale = Rational::one();
    let mut a: Vec<Vec<BigInt>> = Vec::with_capacity(n);
    for i in 0..n {
        let (ints, factor) = to_coprime_integers(m.row(i));
        if ints.iter().all(Zero::is_zero) {
            return Rational::zero();
        }
        scale *= factor;
        a.push(ints);
    }
    let mut sign = BigInt::one();
    let mut prev = BigInt::one();
    for k in 0..n {
        let Some(p) = (k..n).find(|&i| !a[i][k].is_zero()) else {
            return Rational::zero();
        };
        if p != k {
            a.swap(p, k);
            sign = -sign;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = (&a[i][j] * &a[k][k] - &a[i][k] * &a[k][j]) / &prev;
                a[i][j] = v;
            }
            a[i][k] = BigInt::zero();
        }
        prev = a[k][k].clone();
    }
    Rational::from_integer(sign * &a[n - 1][n - 1]) / scale
}

pub fn solve_linear(m: &RationalMatrix, rhs: &[Rational]) -> Result<Vec<Rational>> {
    if !m.is_square() {
        return Err(Error::Shape(format!("solve with a {}x{} matrix", m.rows, m.cols)));
    }
    if rhs.len() != m.rows {
        return Err(Error::DimensionMismatch {
            expected: m.rows,
            got: rhs.len(),
        });
    }
    let n = m.rows;
    let mut aug: Vec<Vec<Rational>> = (0..n)
        .map(|i| {
            let mut r = m.row(i).to_vec();
            r.push(rhs[i].clone());
            r
        })
        .collect();
    let pivots = rref(&mut aug, n);
    if pivots.len() < n {
        return Err(Error::Singular);
    }
    Ok(aug.into_iter().map(|mut r| r.pop().unwrap()).collect())
}

/// Basis of `{v : m v = 0}`, one vector per free column, read off the RREF.
pub fn null_space(m: &RationalMatrix) -> Vec<Vec<Rational>> {
    let mut rows = m.to_rows();
    let pivots = rref(&mut rows, m.cols);
    null_space_from_rref(&rows, &pivots, m.cols)
}

fn null_space_from_rref(rows: &[Vec<Rational>], pivots: &[usize], cols: usize) -> Vec<Vec<Rational>> {
    let mut is_pivot = vec![false; cols];
    for &p in pivots {
        is_pivot[p] = true;
    }
    (0..cols)
        .filter(|&c| !is_pivot[c])
        .map(|free| {
            let mut v = vec![Rational::zero(); cols];
            v[free] = Rational::one();
            for (row, &p) in rows.iter().zip(pivots) {
                v[p] = -row[free].clone();
            }
            v
        })
        .collect()
}

/// Incrementally maintained echelon basis of a row space.
#[derive(Debug, Clone)]
pub struct RowEchelon {
    dim: usize,
    rows: Vec<Vec<Rational>>,
    pivots: Vec<usize>,
}

impl RowEchelon {
    pub fn new(dim: usize) -> Self {
        RowEchelon {
            dim,
            rows: Vec::new(),
            pivots: Vec::new(),
        }
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn is_full(&self) -> bool {
        self.rows.len() == self.dim
    }

    fn reduce(&self, v: &mut [Rational]) {
        for (row, &p) in self.rows.iter().zip(&self.pivots) {
            if v[p].is_zero() {
                continue;
            }
            let f = v[p].clone();
            for (x, r) in v.iter_mut().zip(row) {
                if !r.is_zero() {
                    *x -= &f * r;
                }
            }
        }
    }

    /// True iff `v` is already in the span.
    pub fn contains(&self, v: &[Rational]) -> bool {
        let mut w = v.to_vec();
        self.reduce(&mut w);
        w.iter().all(Zero::is_zero)
    }

    /// Adds `v`; returns true iff it increased the rank.
    pub fn insert(&mut self, v: &[Rational]) -> bool {
        debug_assert_eq!(v.len(), self.dim);
        let mut w = v.to_vec();
        self.reduce(&mut w);
        let Some(p) = w.iter().position(|x| !x.is_zero()) else {
            return false;
        };
        let inv = w[p].recip();
        for x in w.iter_mut() {
            if !x.is_zero() {
                *x *= &inv;
            }
        }
        self.rows.push(w);
        self.pivots.push(p);
        true
    }

    pub fn basis(&self) -> &[Vec<Rational>] {
        &self.rows
    }
}

/// Affine equality `coeffs · x = rhs` with coprime integer coefficients and
/// positive leading nonzero coefficient.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LinearEquality {
    pub coeffs: Vec<BigInt>,
    pub rhs: BigInt,
}

impl LinearEquality {
    /// Normalizes `coeffs · x = rhs`. Returns `None` when all coefficients
    /// are zero.
    pub fn normalized(coeffs: &[Rational], rhs: &Rational) -> Option<Self> {
        let mut all: Vec<Rational> = coeffs.to_vec();
        all.push(rhs.clone());
        let (mut ints, _) = to_coprime_integers(&all);
        let lead = ints[..coeffs.len()].iter().find(|v| !v.is_zero())?;
        if lead.is_negative() {
            for v in ints.iter_mut() {
                *v = -v.clone();
            }
        }
        let rhs = ints.pop().unwrap();
        Some(LinearEquality { coeffs: ints, rhs })
    }

    pub fn evaluate(&self, x: &[Rational]) -> Rational {
        self.coeffs
            .iter()
            .zip(x)
            .filter(|(c, _)| !c.is_zero())
            .fold(Rational::zero(), |acc, (c, v)| acc + Rational::from_integer(c.clone()) * v)
    }

    pub fn holds_at(&self, x: &[Rational]) -> bool {
        self.evaluate(x) == Rational::from_integer(self.rhs.clone())
    }

    pub fn coeffs_rational(&self) -> Vec<Rational> {
        self.coeffs.iter().cloned().map(Rational::from_integer).collect()
    }

    pub fn rhs_rational(&self) -> Rational {
        Rational::from_integer(self.rhs.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinearEqualityJson {
    pub coeffs: Vec<JsonInt>,
    pub rhs: JsonInt,
}

impl From<&LinearEquality> for LinearEqualityJson {
    fn from(e: &LinearEquality) -> Self {
        LinearEqualityJson {
            coeffs: e.coeffs.iter().map(JsonInt::from_bigint).collect(),
            rhs: JsonInt::from_bigint(&e.rhs),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AffineHull {
    pub dimension: usize,
    pub equalities: Vec<LinearEquality>,
}

/// Dimension of the affine hull of `points` together with a basis of the
/// affine equalities every point satisfies.
pub fn affine_hull(points: &[Vec<Rational>], dim: usize) -> Result<AffineHull> {
    let Some(base) = points.first() else {
        return Err(Error::Shape("affine hull of an empty point set".into()));
    };
    if let Some(p) = points.iter().find(|p| p.len() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: p.len(),
        });
    }
    let mut span = RowEchelon::new(dim);
    for p in &points[1..] {
        if span.is_full() {
            break;
        }
        let diff: Vec<Rational> = p.iter().zip(base).map(|(a, b)| a - b).collect();
        span.insert(&diff);
    }
    let dimension = span.rank();
    let mut rows = span.basis().to_vec();
    let pivots = rref(&mut rows, dim);
    let equalities = null_space_from_rref(&rows, &pivots, dim)
        .into_iter()
        .filter_map(|a| {
            let b = dot(&a, base);
            LinearEquality::normalized(&a, &b)
        })
        .collect();
    Ok(AffineHull {
        dimension,
        equalities,
    })
}

/// Exact rank of a small-integer matrix by fraction-free elimination in
/// `i128`, falling back to rational elimination on overflow.
pub fn integer_rank<R: AsRef<[i64]>>(rows: &[R]) -> usize {
    match integer_rank_i128(rows) {
        Some(r) => r,
        None => RationalMatrix::from_int_rows(rows).map_or(0, |m| rank(&m)),
    }
}

fn integer_rank_i128<R: AsRef<[i64]>>(rows: &[R]) -> Option<usize> {
    let mut a: Vec<Vec<i128>> = rows
        .iter()
        .map(|r| r.as_ref().iter().map(|&v| v as i128).collect())
        .collect();
    let cols = a.first().map_or(0, Vec::len);
    let mut rank = 0;
    let mut prev: i128 = 1;
    for c in 0..cols {
        if rank == a.len() {
            break;
        }
        let Some(p) = (rank..a.len()).find(|&i| a[i][c] != 0) else {
            continue;
        };
        a.swap(rank, p);
        let pivot = a[rank][c];
        let (top, rest) = a.split_at_mut(rank + 1);
        let prow = &top[rank];
        for row in rest.iter_mut() {
            let f = row[c];
            for j in c..cols {
                let v = row[j]
                    .checked_mul(pivot)?
                    .checked_sub(f.checked_mul(prow[j])?)?;
                row[j] = v / prev;
            }
        }
        prev = pivot;
        rank += 1;
    }
    Some(rank)
}

/// Converts a rational matrix with integral entries into `i64` rows.
pub fn to_i64_rows(m: &RationalMatrix) -> Option<Vec<Vec<i64>>> {
    (0..m.rows())
        .map(|i| {
            m.row(i)
                .iter()
                .map(|v| if v.denom().is_one() { v.numer().to_i64() } else { None })
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::rational::frac;

    fn standard3() -> RationalMatrix {
        RationalMatrix::from_int_rows(&[[1, -1, 0], [1, 0, -1], [0, 1, 1]]).unwrap()
    }

    #[test]
    fn rank_examples() {
        assert_eq!(rank(&RationalMatrix::identity(3)), 3);
        assert_eq!(rank(&RationalMatrix::zeros(2, 4)), 0);
        assert_eq!(rank(&standard3()), 3);
    }

    #[test]
    fn determinant_examples() {
        assert_eq!(determinant(&standard3()).unwrap(), int(2));
        assert_eq!(determinant(&RationalMatrix::identity(5)).unwrap(), int(1));
        let rep = RationalMatrix::from_int_rows(&[[1, 2, 3], [4, 5, 6], [1, 2, 3]]).unwrap();
        assert_eq!(determinant(&rep).unwrap(), int(0));
        assert!(matches!(
            determinant(&RationalMatrix::zeros(2, 3)),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn bareiss_agrees_with_gauss() {
        let mut m = RationalMatrix::zeros(13, 13);
        for i in 0..13 {
            for j in 0..13 {
                m[(i, j)] = frac(((i * 7 + j * 3) % 5) as i64 - 2, (1 + (i + j) % 3) as i64);
            }
            m[(i, i)] += int(3);
        }
        assert_eq!(determinant_bareiss(&m), determinant_gauss(&m));
        assert_eq!(determinant(&RationalMatrix::identity(14)).unwrap(), int(1));
    }

    #[test]
    fn solve_examples() {
        let x = solve_linear(&RationalMatrix::identity(2), &[frac(1, 2), frac(1, 3)]).unwrap();
        assert_eq!(x, vec![frac(1, 2), frac(1, 3)]);
        let one = RationalMatrix::new(1, 1, vec![int(2)]).unwrap();
        assert_eq!(solve_linear(&one, &[int(1)]).unwrap(), vec![frac(1, 2)]);
        let x = solve_linear(&standard3(), &[int(0), int(0), int(1)]).unwrap();
        assert_eq!(x, vec![frac(1, 2), frac(1, 2), frac(1, 2)]);
        let sing = RationalMatrix::from_int_rows(&[[1, 1], [2, 2]]).unwrap();
        assert_eq!(solve_linear(&sing, &[int(1), int(2)]), Err(Error::Singular));
    }

    #[test]
    fn affine_hull_small() {
        let h = affine_hull(&[vec![int(1), int(0)], vec![int(0), int(1)]], 2).unwrap();
        assert_eq!(h.dimension, 1);
        assert_eq!(
            h.equalities,
            vec![LinearEquality {
                coeffs: vec![BigInt::from(1), BigInt::from(1)],
                rhs: BigInt::from(1)
            }]
        );
        let h = affine_hull(&[vec![frac(1, 2), int(3), int(0)]], 3).unwrap();
        assert_eq!(h.dimension, 0);
        assert_eq!(h.equalities.len(), 3);
        assert!(affine_hull(&[], 2).is_err());
    }

    #[test]
    fn equality_normalization_is_canonical() {
        let a = LinearEquality::normalized(&[frac(-1, 2), int(1)], &frac(3, 2)).unwrap();
        let b = LinearEquality::normalized(&[int(2), int(-4)], &int(-6)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.coeffs, vec![BigInt::from(1), BigInt::from(-2)]);
        assert_eq!(a.rhs, BigInt::from(-3));
        assert!(LinearEquality::normalized(&[int(0)], &int(1)).is_none());
    }

    #[test]
    fn integer_rank_matches_rational() {
        let rows = vec![vec![1, -1, 0, 2], vec![2, -2, 0, 4], vec![0, 1, 1, 0], vec![1, 0, 1, 2]];
        let m = RationalMatrix::from_int_rows(&rows).unwrap();
        assert_eq!(integer_rank(&rows), rank(&m));
        assert_eq!(integer_rank(&rows), 2);
    }
}
