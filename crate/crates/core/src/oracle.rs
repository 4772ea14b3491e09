//! Brute-force ground truth over all orderings.

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::instance::{order_value, LopInstance, Permutation};
use crate::numerics::rational::to_coprime_integers;
use crate::numerics::{Rational, RowEchelon};
use crate::relaxation::{embed_bits, LinearInequality, VarIndex};

pub const MAX_OPT_N: usize = 10;
pub const MAX_EXHAUSTIVE_N: usize = 8;
pub const SAMPLED_PERMUTATIONS: usize = 100_000;
const SAMPLE_SEED: u64 = 0x5eed_0f_1a7;

/// Lexicographic permutations of `0..n` by iterative successor.
#[derive(Debug, Clone)]
pub struct Permutations {
    next: Option<Vec<usize>>,
}

impl Permutations {
    pub fn new(n: usize) -> Self {
        Permutations {
            next: Some((0..n).collect()),
        }
    }
}

/// Advances `a` to its lexicographic successor, restricted to indices
/// `from..`. Returns false at the last ordering.
fn successor(a: &mut [usize], from: usize) -> bool {
    let s = &mut a[from..];
    if s.len() < 2 {
        return false;
    }
    let mut i = s.len() - 1;
    while i > 0 && s[i - 1] >= s[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = s.len() - 1;
    while s[j] <= s[i - 1] {
        j -= 1;
    }
    s.swap(i - 1, j);
    s[i..].reverse();
    true
}

impl Iterator for Permutations {
    type Item = Permutation;

    fn next(&mut self) -> Option<Permutation> {
        let cur = self.next.take()?;
        let mut succ = cur.clone();
        if successor(&mut succ, 0) {
            self.next = Some(succ);
        }
        Some(Permutation::new(cur).expect("successor preserves bijection"))
    }
}

/// Runs `f` once per leading element; each call sees that block's orderings
/// in lexicographic order. Results come back indexed by leading element.
pub fn par_blocks<R, F>(n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(&mut dyn Iterator<Item = Vec<usize>>) -> R + Sync,
{
    (0..n)
        .into_par_iter()
        .map(|first| {
            let mut it = BlockIter::new(n, first);
            f(&mut it)
        })
        .collect()
}

struct BlockIter {
    next: Option<Vec<usize>>,
}

impl BlockIter {
    fn new(n: usize, first: usize) -> Self {
        let mut start = vec![first];
        start.extend((0..n).filter(|&v| v != first));
        BlockIter { next: Some(start) }
    }
}

impl Iterator for BlockIter {
    type Item = Vec<usize>;
    fn next(&mut self) -> Option<Vec<usize>> {
        let cur = self.next.take()?;
        let mut succ = cur.clone();
        if successor(&mut succ, 1) {
            self.next = Some(succ);
        }
        Some(cur)
    }
}

/// Every ordering of `0..n` in lexicographic order.
pub fn all_orders(n: usize) -> Vec<Vec<usize>> {
    par_blocks(n, |it| it.collect::<Vec<_>>()).into_iter().flatten().collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleResult {
    pub best_value: i64,
    pub best_permutation: Permutation,
    pub tight_count: Option<usize>,
}

/// Exact optimum over all `n!` orderings; ties go to the lexicographically
/// smallest ordering.
pub fn brute_force_opt(inst: &LopInstance) -> Result<OracleResult> {
    if inst.n > MAX_OPT_N {
        return Err(Error::Scale(format!(
            "brute force limited to n <= {MAX_OPT_N}, got {}",
            inst.n
        )));
    }
    let blocks = par_blocks(inst.n, |it| {
        let mut best: Option<(i64, Vec<usize>, usize)> = None;
        for order in it {
            let v = order_value(&inst.costs, &order);
            match &mut best {
                Some((bv, bo, count)) => {
                    if v > *bv {
                        *bv = v;
                        *bo = order;
                        *count = 1;
                    } else if v == *bv {
                        *count += 1;
                    }
                }
                None => best = Some((v, order, 1)),
            }
        }
        best
    });
    let mut best: Option<(i64, Vec<usize>, usize)> = None;
    for b in blocks.into_iter().flatten() {
        best = match best {
            None => Some(b),
            Some(cur) if b.0 > cur.0 => Some(b),
            Some(mut cur) => {
                if b.0 == cur.0 {
                    cur.2 += b.2;
                }
                Some(cur)
            }
        };
    }
    let (best_value, order, ties) = best.ok_or_else(|| Error::Internal("no permutations".into()))?;
    Ok(OracleResult {
        best_value,
        best_permutation: Permutation::new(order)?,
        tight_count: Some(ties),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScanMode {
    Exhaustive,
    Sampled(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Validation {
    pub valid: bool,
    pub max_lhs: Rational,
    pub min_lhs: Rational,
    /// Orderings attaining the upper bound (or the lower bound for `>=` rows).
    pub tight_count: usize,
    pub mode: ScanMode,
}

/// Integer form of a row for scans: `lhs = sum a * [i before j]`.
struct ScanRow {
    terms: Vec<(usize, usize, i64)>,
    factor: Rational,
}

impl ScanRow {
    fn new(ineq: &LinearInequality, n: usize) -> Result<Self> {
        let vars = VarIndex::new(n);
        if ineq.dim() != vars.len() {
            return Err(Error::DimensionMismatch {
                expected: vars.len(),
                got: ineq.dim(),
            });
        }
        let (ints, factor) = to_coprime_integers(&ineq.coeffs);
        let terms = ints
            .iter()
            .enumerate()
            .filter(|(_, a)| !a.is_zero())
            .map(|(c, a)| {
                let (i, j) = vars.pair(c);
                a.to_i64()
                    .map(|a| (i, j, a))
                    .ok_or_else(|| Error::Scale("coefficient exceeds 64 bits".into()))
            })
            .collect::<Result<_>>()?;
        Ok(ScanRow { terms, factor })
    }

    fn lhs(&self, pos: &[usize]) -> i64 {
        self.terms
            .iter()
            .filter(|(i, j, _)| pos[*i] < pos[*j])
            .map(|(_, _, a)| a)
            .sum()
    }

    fn unscale(&self, v: i64) -> Rational {
        Rational::from_integer(BigInt::from(v)) / &self.factor
    }
}

fn positions(order: &[usize]) -> Vec<usize> {
    let mut pos = vec![0; order.len()];
    for (k, &v) in order.iter().enumerate() {
        pos[v] = k;
    }
    pos
}

fn sampled_orders(n: usize) -> Vec<Vec<usize>> {
    let mut rng = ChaCha8Rng::seed_from_u64(SAMPLE_SEED ^ n as u64);
    (0..SAMPLED_PERMUTATIONS)
        .map(|_| {
            let mut o: Vec<usize> = (0..n).collect();
            o.shuffle(&mut rng);
            o
        })
        .collect()
}

/// Scans orderings and reports the range of the row's left-hand side.
/// Exhaustive up to `n = 8`, seeded sampling beyond.
pub fn validate_inequality(ineq: &LinearInequality, n: usize) -> Result<Validation> {
    let row = ScanRow::new(ineq, n)?;
    let (orders, mode) = if n <= MAX_EXHAUSTIVE_N {
        (all_orders(n), ScanMode::Exhaustive)
    } else {
        (sampled_orders(n), ScanMode::Sampled(SAMPLED_PERMUTATIONS))
    };
    let values: Vec<i64> = orders.par_iter().map(|o| row.lhs(&positions(o))).collect();
    let max = *values.iter().max().expect("n >= 2");
    let min = *values.iter().min().expect("n >= 2");
    let max_lhs = row.unscale(max);
    let min_lhs = row.unscale(min);
    let valid = ineq.upper.as_ref().map_or(true, |u| &max_lhs <= u)
        && ineq.lower.as_ref().map_or(true, |l| &min_lhs >= l);
    let target = match (&ineq.upper, &ineq.lower) {
        (Some(u), _) => u.clone(),
        (None, Some(l)) => l.clone(),
        (None, None) => unreachable!("rows carry a finite bound"),
    };
    let tight_count = values.iter().filter(|&&v| row.unscale(v) == target).count();
    Ok(Validation {
        valid,
        max_lhs,
        min_lhs,
        tight_count,
        mode,
    })
}

/// Orderings whose embedding satisfies the row's upper bound (lower bound
/// for `>=` rows) with equality.
pub fn tight_permutations(ineq: &LinearInequality, n: usize) -> Result<Vec<Permutation>> {
    let row = ScanRow::new(ineq, n)?;
    let target = ineq
        .upper
        .clone()
        .or_else(|| ineq.lower.clone())
        .ok_or_else(|| Error::Domain("row has no finite bound".into()))?;
    all_orders(n)
        .into_par_iter()
        .filter(|o| row.unscale(row.lhs(&positions(o))) == target)
        .map(Permutation::new)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FacetDimension {
    pub dimension: usize,
    pub is_facet: bool,
    /// The row is an identity on every ordering (e.g. `0 . x <= 0`).
    pub degenerate: bool,
}

/// Affine dimension of the orderings tight at the row.
pub fn facet_dimension(ineq: &LinearInequality, n: usize) -> Result<FacetDimension> {
    if n > MAX_EXHAUSTIVE_N {
        return Err(Error::Scale(format!(
            "facet dimension limited to n <= {MAX_EXHAUSTIVE_N}, got {n}"
        )));
    }
    let tight = tight_permutations(ineq, n)?;
    let dim = VarIndex::new(n).len();
    let degenerate = ineq.is_degenerate();
    let Some(first) = tight.first() else {
        return Err(Error::Domain("no ordering attains the bound".into()));
    };
    let base = embed_bits(first, n)?;
    // the hyperplane caps a nondegenerate row at dim - 1
    let cap = if degenerate { dim } else { dim - 1 };
    let mut span = RowEchelon::new(dim);
    for p in &tight[1..] {
        if span.rank() >= cap {
            break;
        }
        let bits = embed_bits(p, n)?;
        let diff: Vec<Rational> = bits
            .iter()
            .zip(&base)
            .map(|(&a, &b)| Rational::from_integer(BigInt::from(a as i64 - b as i64)))
            .collect();
        span.insert(&diff);
    }
    let dimension = span.rank();
    Ok(FacetDimension {
        dimension,
        is_facet: !degenerate && dimension + 1 == dim,
        degenerate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::facets::fence_inequality;
    use crate::instance::{parse_instance, random_instance};
    use crate::numerics::int;
    use crate::relaxation::{build_bn, RowOrigin};

    #[test]
    fn enumerates_lexicographically() {
        let all: Vec<Vec<usize>> = Permutations::new(3).map(|p| p.order().to_vec()).collect();
        assert_eq!(
            all,
            vec![
                vec![0, 1, 2],
                vec![0, 2, 1],
                vec![1, 0, 2],
                vec![1, 2, 0],
                vec![2, 0, 1],
                vec![2, 1, 0]
            ]
        );
        assert_eq!(Permutations::new(6).count(), 720);
        let blocks = all_orders(5);
        assert_eq!(blocks.len(), 120);
        let serial: Vec<Vec<usize>> = Permutations::new(5).map(|p| p.order().to_vec()).collect();
        assert_eq!(blocks, serial);
    }

    #[test]
    fn optimum_of_tiny_instance() {
        let inst = parse_instance("3\n0 5 1\n0 0 4\n2 0 0\n").unwrap();
        let r = brute_force_opt(&inst).unwrap();
        assert_eq!(r.best_value, 10);
        assert_eq!(r.best_permutation.to_one_based(), vec![1, 2, 3]);
    }

    #[test]
    fn ties_break_lexicographically() {
        let inst = parse_instance("2\n0 3\n3 0\n").unwrap();
        let r = brute_force_opt(&inst).unwrap();
        assert_eq!(r.best_value, 3);
        assert_eq!(r.best_permutation.to_one_based(), vec![1, 2]);
        assert_eq!(r.tight_count, Some(2));
    }

    #[test]
    fn brute_force_matches_serial_scan() {
        for seed in 0..5 {
            let inst = random_instance(6, seed, 0..=20).unwrap();
            let r = brute_force_opt(&inst).unwrap();
            let mut best = (i64::MIN, Permutation::identity(6));
            for p in Permutations::new(6) {
                let v = crate::instance::permutation_value(&inst, &p);
                if v > best.0 {
                    best = (v, p);
                }
            }
            assert_eq!(r.best_value, best.0);
            assert_eq!(r.best_permutation, best.1);
        }
        let big = random_instance(11, 0, 0..=1).unwrap();
        assert!(matches!(brute_force_opt(&big), Err(Error::Scale(_))));
    }

    #[test]
    fn fence_cut_validation() {
        let cut = fence_inequality(&[0, 1, 2], &[3, 4, 5], 6).unwrap();
        let v = validate_inequality(&cut, 6).unwrap();
        assert!(v.valid);
        assert_eq!(v.max_lhs, int(1));
        assert_eq!(v.min_lhs, int(-4));
        assert_eq!(v.tight_count, 18);
        assert_eq!(v.mode, ScanMode::Exhaustive);

        let mut wrong = cut.clone();
        wrong.upper = Some(int(0));
        let v = validate_inequality(&wrong, 6).unwrap();
        assert!(!v.valid);
        assert_eq!(v.max_lhs, int(1));
    }

    #[test]
    fn triangle_row_is_valid() {
        let sys = build_bn(4).unwrap();
        let v = validate_inequality(&sys.rows[0], 4).unwrap();
        assert!(v.valid);
        assert!(v.tight_count > 0);
    }

    #[test]
    fn facet_dimensions() {
        let cut = fence_inequality(&[0, 1, 2], &[3, 4, 5], 6).unwrap();
        let d = facet_dimension(&cut, 6).unwrap();
        assert_eq!(d.dimension, 14);
        assert!(d.is_facet);

        let x12 = LinearInequality::new(vec![int(1), int(0), int(0)], None, Some(int(1)), RowOrigin::Aux).unwrap();
        let d = facet_dimension(&x12, 3).unwrap();
        assert_eq!(d.dimension, 2);
        assert!(d.is_facet);

        let zero = LinearInequality::new(vec![int(0); 3], None, Some(int(0)), RowOrigin::Aux).unwrap();
        let d = facet_dimension(&zero, 3).unwrap();
        assert_eq!(d.dimension, 3);
        assert!(d.degenerate);
        assert!(!d.is_facet);

        let never = LinearInequality::new(vec![int(1), int(0), int(0)], None, Some(int(5)), RowOrigin::Aux).unwrap();
        assert!(facet_dimension(&never, 3).is_err());
    }

    #[test]
    fn sampled_mode_beyond_eight() {
        let cut = fence_inequality(&[0, 1, 2], &[3, 4, 5], 9).unwrap();
        let v = validate_inequality(&cut, 9).unwrap();
        assert!(v.valid);
        assert_eq!(v.mode, ScanMode::Sampled(SAMPLED_PERMUTATIONS));
    }
}
