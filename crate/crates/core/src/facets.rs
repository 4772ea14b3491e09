//! Cut generation for fractional vertices.
//!
//! Fences get their closed-form inequality. Any other half-integral
//! component is cut by the hyperplane(s) through its adjacent integer
//! vertices, found by exact affine-hull computation. Vertices with larger
//! denominators are first walked along edges towards smaller ones.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::Permutation;
use crate::lp::{adjacent_vertex_test, common_tight_rows, greedy_basis, is_vertex, tight_rank};
use crate::numerics::matrix::integer_rank;
use crate::numerics::rational::{denominator_u64, RationalJson};
use crate::numerics::{affine_hull, determinant, dot, int, null_space, LinearEquality, Rational, RationalMatrix, RowEchelon};
use crate::oracle::{all_orders, facet_dimension, validate_inequality, ScanMode, MAX_EXHAUSTIVE_N};
use crate::relaxation::{
    build_bn, embed_bits, embed_permutation, AffineExpr, ConstraintSystem, InequalityJson, LinearInequality, RowOrigin,
    VarIndex,
};
use crate::vertex::{classify_vertex, restrict, VertexProfile};

/// `x_ij + x_jk - x_ik` for an ordered triple of distinct nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TripleExpression {
    pub i: usize,
    pub j: usize,
    pub k: usize,
}

impl TripleExpression {
    pub fn new(i: usize, j: usize, k: usize) -> Result<Self> {
        if i == j || j == k || i == k {
            return Err(Error::Domain(format!("triple ({i}, {j}, {k}) repeats a node")));
        }
        Ok(TripleExpression { i, j, k })
    }

    pub fn expr(&self, vars: &VarIndex) -> AffineExpr {
        let mut e = AffineExpr::zero(vars);
        e.add_pair(vars, self.i, self.j, &int(1));
        e.add_pair(vars, self.j, self.k, &int(1));
        e.add_pair(vars, self.i, self.k, &int(-1));
        e
    }

    pub fn evaluate(&self, vars: &VarIndex, x: &[Rational]) -> Rational {
        self.expr(vars).evaluate(x)
    }
}

/// `2 sum_l x_{i_l j_l} - sum_{l,q} x_{i_l j_q} <= 1`.
pub fn fence_inequality(i_list: &[usize], j_list: &[usize], n: usize) -> Result<LinearInequality> {
    let m = i_list.len();
    if j_list.len() != m {
        return Err(Error::Domain("fence sides differ in length".into()));
    }
    if m < 3 {
        return Err(Error::Domain(format!("fence needs m >= 3, got {m}")));
    }
    let nodes: BTreeSet<usize> = i_list.iter().chain(j_list).copied().collect();
    if nodes.len() != 2 * m || nodes.iter().any(|&v| v >= n) {
        return Err(Error::Domain("fence nodes must be distinct and below n".into()));
    }
    let vars = VarIndex::new(n);
    let mut e = AffineExpr::zero(&vars);
    for (l, &i) in i_list.iter().enumerate() {
        for (q, &j) in j_list.iter().enumerate() {
            let w = if l == q { int(1) } else { int(-1) };
            e.add_pair(&vars, i, j, &w);
        }
    }
    e.bounded(None, Some(int(1)), RowOrigin::Fence)
}

/// Rows tight at a vertex, in integer form, with the value they take there.
struct TightProfile {
    rows: Vec<(crate::relaxation::IntegerRow, i64)>,
}

impl TightProfile {
    fn new(sys: &ConstraintSystem, x: &[Rational]) -> Result<Self> {
        let all = sys
            .integer_rows()
            .ok_or_else(|| Error::Scale("row coefficients exceed 64 bits".into()))?;
        let mut rows = Vec::new();
        for r in sys.tight_rows(x) {
            let row = &all.rows[r];
            let at: Rational = row.coeffs.iter().zip(x).map(|(&a, v)| int(a) * v).sum();
            // a bound with a fractional value is never met by a 0/1 point
            if at.is_integer() {
                if let Some(v) = at.to_integer().to_i64() {
                    rows.push((row.clone(), v));
                }
            }
        }
        Ok(TightProfile { rows })
    }

    /// Rank of the rows that take the same value at the vertex and at the
    /// 0/1 point.
    fn common_rank(&self, bits: &[u8], needed: usize) -> Option<usize> {
        let common: Vec<&[i64]> = self
            .rows
            .iter()
            .filter(|(r, v)| r.lhs_bits(bits) == *v)
            .map(|(r, _)| r.coeffs.as_slice())
            .collect();
        if common.len() < needed {
            return None;
        }
        Some(integer_rank(&common))
    }
}

/// Orderings whose embeddings are adjacent to the fractional vertex `x`.
pub fn adjacent_integer_vertices(sys: &ConstraintSystem, x: &[Rational]) -> Result<Vec<Permutation>> {
    if sys.n > MAX_EXHAUSTIVE_N {
        return Err(Error::Scale(format!(
            "adjacent-vertex enumeration limited to n <= {MAX_EXHAUSTIVE_N}, got {}",
            sys.n
        )));
    }
    if !is_vertex(sys, x)? {
        return Err(Error::Precondition("point is not a vertex".into()));
    }
    if x.iter().all(|v| v.denom() == &BigInt::from(1)) {
        return Err(Error::Precondition("vertex is integral".into()));
    }
    let tp = TightProfile::new(sys, x)?;
    let n = sys.n;
    let needed = sys.dim() - 1;
    let adjacent: Vec<Vec<usize>> = all_orders(n)
        .into_par_iter()
        .filter(|o| {
            let p = Permutation::new(o.clone()).expect("orders are permutations");
            let bits = embed_bits(&p, n).expect("length matches");
            tp.common_rank(&bits, needed) == Some(needed)
        })
        .collect();
    adjacent.into_iter().map(Permutation::new).collect()
}

/// Hyperplane(s) containing `points`.
///
/// With a hull of dimension `dim - 1` the answer is that hull. With a
/// full-dimensional hull the points are split greedily into hyperplane
/// clusters, each holding more than `dim` points. A lower-dimensional hull
/// yields its equality basis.
pub fn hyperplanes_through(points: &[Vec<Rational>], dim: usize) -> Result<Vec<LinearEquality>> {
    clustered_hyperplanes(points, dim, None)
}

/// Like [`hyperplanes_through`], but cluster hyperplanes passing through
/// `avoid` are rejected, so each one can separate that point.
pub fn separating_hyperplanes(points: &[Vec<Rational>], dim: usize, avoid: &[Rational]) -> Result<Vec<LinearEquality>> {
    let planes = clustered_hyperplanes(points, dim, Some(avoid))?;
    Ok(planes.into_iter().filter(|p| !p.holds_at(avoid)).collect())
}

fn clustered_hyperplanes(points: &[Vec<Rational>], dim: usize, avoid: Option<&[Rational]>) -> Result<Vec<LinearEquality>> {
    let hull = affine_hull(points, dim)?;
    if hull.dimension < dim {
        return Ok(hull.equalities);
    }
    let mut covered = vec![false; points.len()];
    let mut planes: Vec<LinearEquality> = Vec::new();
    while let Some(start) = covered.iter().position(|c| !c) {
        let Some(plane) = best_cluster(points, dim, start, &covered, avoid) else {
            // a separating search may leave points that only lie on faces through `avoid`
            if avoid.is_none() {
                return Err(Error::NoHyperplane);
            }
            covered[start] = true;
            continue;
        };
        for (p, c) in points.iter().zip(covered.iter_mut()) {
            if plane.holds_at(p) {
                *c = true;
            }
        }
        planes.push(plane);
    }
    if planes.is_empty() {
        return Err(Error::NoHyperplane);
    }
    planes.sort();
    planes.dedup();
    Ok(planes)
}

const MAX_SEEDINGS: usize = 64;

/// Hyperplane through `points[start]` holding the most points (at least
/// `dim + 1`) among a deterministic family of greedy seedings.
fn best_cluster(
    points: &[Vec<Rational>],
    dim: usize,
    start: usize,
    covered: &[bool],
    avoid: Option<&[Rational]>,
) -> Option<LinearEquality> {
    let order: Vec<usize> = (0..points.len())
        .filter(|&i| i != start && !covered[i])
        .chain((0..points.len()).filter(|&i| i != start && covered[i]))
        .collect();
    if order.is_empty() {
        return None;
    }
    let base = &points[start];
    let mut best: Option<(usize, LinearEquality)> = None;
    for offset in 0..order.len().min(MAX_SEEDINGS) {
        let mut span = RowEchelon::new(dim);
        for k in 0..order.len() {
            if span.rank() + 1 == dim {
                break;
            }
            let p = &points[order[(offset + k) % order.len()]];
            let diff: Vec<Rational> = p.iter().zip(base).map(|(a, b)| a - b).collect();
            span.insert(&diff);
        }
        if span.rank() + 1 != dim {
            continue;
        }
        let basis = RationalMatrix::from_rows(span.basis()).ok()?;
        let normal = null_space(&basis).into_iter().next()?;
        let rhs = dot(&normal, base);
        let plane = LinearEquality::normalized(&normal, &rhs)?;
        if let Some(a) = avoid {
            // every point on one side, `a` strictly on the other
            let side = plane.evaluate(a) - plane.rhs_rational();
            let wrong = points.iter().any(|p| {
                let d = plane.evaluate(p) - plane.rhs_rational();
                d.is_zero() == false && d.is_positive() == side.is_positive()
            });
            if side.is_zero() || wrong {
                continue;
            }
        }
        let count = points.iter().filter(|p| plane.holds_at(p)).count();
        if count > dim && best.as_ref().map_or(true, |(c, _)| count > *c) {
            best = Some((count, plane));
        }
    }
    best.map(|(_, p)| p)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Fence,
    AffineHull,
    Reduced,
    Auxiliary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValidityMode {
    Exhaustive,
    Sampled,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerifiedCut {
    pub cut: LinearInequality,
    pub provenance: Provenance,
    pub max_lhs: Rational,
    pub min_lhs: Rational,
    pub tight_count: usize,
    pub validity_mode: ValidityMode,
    pub facet_dim: Option<usize>,
    /// `lhs(x) - rhs` at the source vertex; positive for separating cuts.
    pub violation: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiscardedCut {
    pub cut: LinearInequality,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CutBundle {
    pub cuts: Vec<VerifiedCut>,
    pub provenance: Provenance,
    pub source_vertex: Vec<Rational>,
    pub verified_valid: bool,
    pub verified_facet_dim: Option<usize>,
    pub discarded: Vec<DiscardedCut>,
}

impl CutBundle {
    pub fn inequalities(&self) -> Vec<LinearInequality> {
        self.cuts.iter().map(|c| c.cut.clone()).collect()
    }
}

/// Nodes touched by nonzero coefficients.
fn support_nodes(cut: &LinearInequality, n: usize) -> Vec<usize> {
    let vars = VarIndex::new(n);
    let mut nodes = BTreeSet::new();
    for (c, a) in cut.coeffs.iter().enumerate() {
        if !a.is_zero() {
            let (i, j) = vars.pair(c);
            nodes.insert(i);
            nodes.insert(j);
        }
    }
    nodes.into_iter().collect()
}

/// Restriction of a row to the columns among `nodes` (dropping nothing but
/// zero coefficients when `nodes` covers the support).
fn restrict_cut(cut: &LinearInequality, n: usize, nodes: &[usize]) -> LinearInequality {
    let vars = VarIndex::new(n);
    let sub = VarIndex::new(nodes.len());
    let mut coeffs = vec![Rational::zero(); sub.len()];
    for a in 0..nodes.len() {
        for b in a + 1..nodes.len() {
            let (i, j) = (nodes[a], nodes[b]);
            // nodes are sorted, so i < j
            coeffs[sub.column(a, b)] = cut.coeffs[vars.column(i, j)].clone();
        }
    }
    LinearInequality {
        coeffs,
        lower: cut.lower.clone(),
        upper: cut.upper.clone(),
        origin: cut.origin,
    }
}

/// Zero-lifting of a row on `nodes` (sorted) into `B_n`.
fn lift_cut(cut: &LinearInequality, nodes: &[usize], n: usize) -> LinearInequality {
    let vars = VarIndex::new(n);
    let sub = VarIndex::new(nodes.len());
    let mut coeffs = vec![Rational::zero(); vars.len()];
    for c in 0..sub.len() {
        let (a, b) = sub.pair(c);
        coeffs[vars.column(nodes[a], nodes[b])] = cut.coeffs[c].clone();
    }
    LinearInequality {
        coeffs,
        lower: cut.lower.clone(),
        upper: cut.upper.clone(),
        origin: cut.origin,
    }
}

fn factorial(k: usize) -> usize {
    (1..=k).product()
}

/// Oracle verification of a cut over `B_n`. The left-hand side depends
/// only on the relative order of the support nodes, so the exhaustive scan
/// runs over those whenever that fits in `budget`.
pub fn verify_cut(
    cut: &LinearInequality,
    n: usize,
    x: &[Rational],
    provenance: Provenance,
    budget: usize,
) -> std::result::Result<VerifiedCut, DiscardedCut> {
    let discard = |reason: String| DiscardedCut {
        cut: cut.clone(),
        reason,
    };
    let rhs = cut.upper.clone().ok_or_else(|| discard("cut has no upper bound".into()))?;
    let lhs_x = dot(&cut.coeffs, x);
    let violation = &lhs_x - &rhs;
    if !violation.is_positive() {
        return Err(discard(format!("does not separate: lhs {lhs_x} <= rhs {rhs}")));
    }
    let support = support_nodes(cut, n);
    let (validation, mode) = if factorial(support.len()) <= budget && support.len() <= MAX_EXHAUSTIVE_N {
        let sub = restrict_cut(cut, n, &support);
        (validate_inequality(&sub, support.len()), ValidityMode::Exhaustive)
    } else {
        let v = validate_inequality(cut, n);
        let mode = match &v {
            Ok(v) if v.mode == ScanMode::Exhaustive => ValidityMode::Exhaustive,
            _ => ValidityMode::Sampled,
        };
        (v, mode)
    };
    let validation = validation.map_err(|e| discard(format!("validation failed: {e}")))?;
    if !validation.valid {
        return Err(discard(format!(
            "invalid: max lhs {} exceeds rhs {rhs}",
            validation.max_lhs
        )));
    }
    let facet_dim = if n <= MAX_EXHAUSTIVE_N && factorial(n) <= budget {
        facet_dimension(cut, n).ok().map(|d| d.dimension)
    } else {
        None
    };
    Ok(VerifiedCut {
        cut: cut.clone(),
        provenance,
        max_lhs: validation.max_lhs,
        min_lhs: validation.min_lhs,
        tight_count: validation.tight_count,
        validity_mode: mode,
        facet_dim,
        violation,
    })
}

pub const DEFAULT_ORACLE_BUDGET: usize = 40_320;

/// Turns hyperplanes into `<=` rows, oriented towards the first ordering
/// that lies off the hyperplane.
pub fn orient_hyperplanes(planes: &[LinearEquality], n: usize) -> Vec<LinearInequality> {
    let orders = all_orders(n);
    planes
        .iter()
        .filter_map(|plane| {
            let off = orders.iter().find_map(|o| {
                let p = Permutation::new(o.clone()).ok()?;
                let x = embed_permutation(&p, n).ok()?;
                let v = plane.evaluate(&x);
                (v != plane.rhs_rational()).then_some(v)
            })?;
            let (coeffs, rhs) = if off < plane.rhs_rational() {
                (plane.coeffs_rational(), plane.rhs_rational())
            } else {
                (
                    plane.coeffs_rational().into_iter().map(|c| -c).collect(),
                    -plane.rhs_rational(),
                )
            };
            LinearInequality::new(coeffs, None, Some(rhs), RowOrigin::HullCut).ok()
        })
        .collect()
}

/// Candidate hyperplane cuts for a vertex of a (sub)system.
fn hull_candidates(sys: &ConstraintSystem, x: &[Rational]) -> Result<Vec<LinearInequality>> {
    let adj = adjacent_integer_vertices(sys, x)?;
    if adj.is_empty() {
        return Err(Error::NotSeparated);
    }
    let points: Vec<Vec<Rational>> = adj
        .iter()
        .map(|p| embed_permutation(p, sys.n))
        .collect::<Result<_>>()?;
    let planes = separating_hyperplanes(&points, sys.dim(), x)?;
    Ok(orient_hyperplanes(&planes, sys.n))
}

/// Facet cuts for a half-integral fractional vertex, one family per
/// fractional component.
pub fn facet_cuts_for_vertex(sys: &ConstraintSystem, x: &[Rational], oracle_budget: usize) -> Result<CutBundle> {
    let profile = classify_vertex(sys, x)?;
    if profile.is_integral() {
        return Err(Error::Precondition("vertex is integral".into()));
    }
    if profile.denominators.iter().any(|&d| d != 2) {
        return Err(Error::Precondition(format!(
            "denominators {:?} must be reduced to 2 first",
            profile.denominators
        )));
    }
    let n = sys.n;
    let mut candidates: Vec<(LinearInequality, Provenance)> = Vec::new();
    let mut discarded = Vec::new();
    for component in &profile.components {
        let fences: Vec<_> = profile
            .fences
            .iter()
            .filter(|f| f.nodes().iter().all(|v| component.contains(v)))
            .collect();
        if !fences.is_empty() {
            for f in fences {
                candidates.push((fence_inequality(&f.i_list, &f.j_list, n)?, Provenance::Fence));
            }
            continue;
        }
        match component_hull_cuts(sys, x, &profile, component) {
            Ok(cuts) => candidates.extend(cuts.into_iter().map(|c| (c, Provenance::AffineHull))),
            Err(e) => discarded.push(DiscardedCut {
                cut: LinearInequality {
                    coeffs: vec![Rational::zero(); sys.dim()],
                    lower: None,
                    upper: Some(int(0)),
                    origin: RowOrigin::HullCut,
                },
                reason: format!("component {component:?}: {e}"),
            }),
        }
    }
    let mut cuts = Vec::new();
    let mut seen = BTreeSet::new();
    for (cut, prov) in candidates {
        if !seen.insert(format!("{:?}", cut.canonical_key())) {
            continue;
        }
        match verify_cut(&cut, n, x, prov, oracle_budget) {
            Ok(v) => cuts.push(v),
            Err(d) => discarded.push(d),
        }
    }
    if cuts.is_empty() {
        return Err(Error::NotSeparated);
    }
    let provenance = if cuts.iter().all(|c| c.provenance == Provenance::Fence) {
        Provenance::Fence
    } else {
        Provenance::AffineHull
    };
    let dims: BTreeSet<Option<usize>> = cuts.iter().map(|c| c.facet_dim).collect();
    let verified_facet_dim = if dims.len() == 1 { *dims.iter().next().unwrap() } else { None };
    Ok(CutBundle {
        verified_valid: true,
        verified_facet_dim,
        provenance,
        source_vertex: x.to_vec(),
        cuts,
        discarded,
    })
}

fn component_hull_cuts(
    sys: &ConstraintSystem,
    x: &[Rational],
    profile: &VertexProfile,
    component: &[usize],
) -> Result<Vec<LinearInequality>> {
    let n = sys.n;
    if profile.simple {
        return hull_candidates(sys, x);
    }
    let sub_sys = build_bn(component.len())?;
    let sub_x = restrict(n, x, component);
    if component.len() <= MAX_EXHAUSTIVE_N && is_vertex(&sub_sys, &sub_x)? {
        let cuts = hull_candidates(&sub_sys, &sub_x)?;
        return Ok(cuts.iter().map(|c| lift_cut(c, component, n)).collect());
    }
    if n <= MAX_EXHAUSTIVE_N {
        return hull_candidates(sys, x);
    }
    Err(Error::Scale(format!(
        "component of {} nodes is not a vertex of its own relaxation and n = {n} is too large",
        component.len()
    )))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StandardPattern {
    /// The 3x3 block with determinant 2.
    Minimal,
    /// The known 5x5 combination of two minimal blocks.
    Combined5,
    /// Several minimal blocks sharing rows.
    Chained(usize),
    /// Minimal block left over after eliminating unit pivots; rows and
    /// columns are the basis indices that survive the elimination.
    EliminationCore,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StandardMatrixWitness {
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
    pub pattern: StandardPattern,
}

pub fn minimal_standard_matrix() -> RationalMatrix {
    RationalMatrix::from_int_rows(&[[1, -1, 0], [1, 0, -1], [0, 1, 1]]).expect("3x3")
}

pub fn combined_standard_matrix() -> RationalMatrix {
    RationalMatrix::from_int_rows(&[
        [1, -1, 0, -1, 0],
        [1, 0, -1, 0, 0],
        [0, 1, 1, 0, 0],
        [1, 0, 0, 0, -1],
        [0, 0, 0, 1, 1],
    ])
    .expect("5x5")
}

fn sign_of(v: &Rational) -> i8 {
    if v.is_zero() {
        0
    } else if v.is_positive() {
        1
    } else {
        -1
    }
}

/// 3x3 block equal to the minimal standard matrix up to row/column
/// permutation and sign: entries in {-1, 0, 1}, two nonzeros per row and
/// column, determinant of magnitude 2.
fn is_minimal_block(m: &RationalMatrix) -> bool {
    for i in 0..3 {
        for j in 0..3 {
            let v = &m[(i, j)];
            if !(v.is_zero() || v.abs() == int(1)) {
                return false;
            }
        }
    }
    let row_ok = (0..3).all(|i| (0..3).filter(|&j| !m[(i, j)].is_zero()).count() == 2);
    let col_ok = (0..3).all(|j| (0..3).filter(|&i| !m[(i, j)].is_zero()).count() == 2);
    row_ok && col_ok && determinant(m).map(|d| d.abs() == int(2)).unwrap_or(false)
}

/// True iff `m` equals `pattern` after permuting rows and columns and
/// flipping the signs of whole rows and columns.
pub fn equivalent_up_to_signed_permutation(m: &RationalMatrix, pattern: &RationalMatrix) -> bool {
    let k = pattern.rows();
    if m.rows() != k || m.cols() != k || pattern.cols() != k {
        return false;
    }
    let perms: Vec<Vec<usize>> = all_orders(k);
    for rp in &perms {
        for cp in &perms {
            let ok_support = (0..k).all(|i| (0..k).all(|j| m[(rp[i], cp[j])].is_zero() == pattern[(i, j)].is_zero()));
            if !ok_support {
                continue;
            }
            // find row signs r and column signs c with r_i c_j m = pattern
            let mut rs: Vec<Option<i8>> = vec![None; k];
            let mut cs: Vec<Option<i8>> = vec![None; k];
            let mut consistent = true;
            for start in 0..k {
                if rs[start].is_some() {
                    continue;
                }
                rs[start] = Some(1);
                let mut stack = vec![(true, start)];
                while let Some((is_row, idx)) = stack.pop() {
                    for other in 0..k {
                        let (i, j) = if is_row { (idx, other) } else { (other, idx) };
                        let a = sign_of(&m[(rp[i], cp[j])]);
                        if a == 0 {
                            continue;
                        }
                        let b = sign_of(&pattern[(i, j)]);
                        let (known, unknown) = if is_row { (rs[i], &mut cs[j]) } else { (cs[j], &mut rs[i]) };
                        let need = known.expect("visited") * a * b;
                        match unknown {
                            Some(s) if *s != need => consistent = false,
                            Some(_) => {}
                            None => {
                                *unknown = Some(need);
                                stack.push((!is_row, other));
                            }
                        }
                    }
                }
            }
            let magnitudes = (0..k).all(|i| (0..k).all(|j| m[(rp[i], cp[j])].abs() == pattern[(i, j)].abs()));
            if consistent && magnitudes {
                return true;
            }
        }
    }
    false
}

/// Minimal standard blocks inside a basis, plus groups of blocks that share
/// rows.
pub fn find_standard_matrices(basis: &RationalMatrix) -> Result<Vec<StandardMatrixWitness>> {
    if !basis.is_square() {
        return Err(Error::Shape("basis must be square".into()));
    }
    let k = basis.rows();
    let nz: Vec<Vec<bool>> = (0..k)
        .map(|i| (0..k).map(|j| !basis[(i, j)].is_zero()).collect())
        .collect();
    let mut minimal = Vec::new();
    for a in 0..k {
        for b in a + 1..k {
            for c in b + 1..k {
                let rows = [a, b, c];
                let cols: Vec<usize> = (0..k)
                    .filter(|&j| rows.iter().filter(|&&r| nz[r][j]).count() == 2)
                    .collect();
                for x in 0..cols.len() {
                    for y in x + 1..cols.len() {
                        for z in y + 1..cols.len() {
                            let cs = [cols[x], cols[y], cols[z]];
                            let block = basis.submatrix(&rows, &cs);
                            if is_minimal_block(&block) {
                                minimal.push(StandardMatrixWitness {
                                    rows: rows.to_vec(),
                                    cols: cs.to_vec(),
                                    pattern: StandardPattern::Minimal,
                                });
                            }
                        }
                    }
                }
            }
        }
    }
    // group blocks that share a row
    let mut group: Vec<usize> = (0..minimal.len()).collect();
    fn root(g: &mut [usize], v: usize) -> usize {
        let mut r = v;
        while g[r] != r {
            r = g[r];
        }
        g[v] = r;
        r
    }
    for s in 0..minimal.len() {
        for t in s + 1..minimal.len() {
            if minimal[s].rows.iter().any(|r| minimal[t].rows.contains(r)) {
                let (rs, rt) = (root(&mut group, s), root(&mut group, t));
                if rs != rt {
                    group[rs.max(rt)] = rs.min(rt);
                }
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for s in 0..minimal.len() {
        let r = root(&mut group, s);
        groups.entry(r).or_default().push(s);
    }
    let mut out = minimal.clone();
    let combined = combined_standard_matrix();
    for members in groups.values().filter(|m| m.len() >= 2) {
        let rows: BTreeSet<usize> = members.iter().flat_map(|&s| minimal[s].rows.clone()).collect();
        let cols: BTreeSet<usize> = members.iter().flat_map(|&s| minimal[s].cols.clone()).collect();
        let rows: Vec<usize> = rows.into_iter().collect();
        let cols: Vec<usize> = cols.into_iter().collect();
        let pattern = if rows.len() == 5
            && cols.len() == 5
            && equivalent_up_to_signed_permutation(&basis.submatrix(&rows, &cols), &combined)
        {
            StandardPattern::Combined5
        } else {
            StandardPattern::Chained(members.len())
        };
        out.push(StandardMatrixWitness { rows, cols, pattern });
    }
    if let Some(core) = elimination_core(basis) {
        if !out.iter().any(|w| w.rows == core.rows && w.cols == core.cols) {
            out.push(core);
        }
    }
    Ok(out)
}

fn unit_entries(m: &RationalMatrix) -> bool {
    (0..m.rows()).all(|i| (0..m.cols()).all(|j| m[(i, j)].is_zero() || m[(i, j)].abs() == int(1)))
}

/// Pivots on `+-1` entries (first in row-major order whose Schur complement
/// keeps all entries in {-1, 0, 1}) down to a 3x3 core. Each pivot keeps
/// the determinant up to sign.
fn elimination_core(basis: &RationalMatrix) -> Option<StandardMatrixWitness> {
    if basis.rows() < 3 || !unit_entries(basis) {
        return None;
    }
    let mut a = basis.clone();
    let mut rows: Vec<usize> = (0..basis.rows()).collect();
    let mut cols: Vec<usize> = (0..basis.cols()).collect();
    while a.rows() > 3 {
        let k = a.rows();
        let mut next = None;
        'search: for pi in 0..k {
            for pj in 0..k {
                if a[(pi, pj)].abs() != int(1) {
                    continue;
                }
                let keep_r: Vec<usize> = (0..k).filter(|&i| i != pi).collect();
                let keep_c: Vec<usize> = (0..k).filter(|&j| j != pj).collect();
                let mut t = a.submatrix(&keep_r, &keep_c);
                for (ti, &i) in keep_r.iter().enumerate() {
                    if a[(i, pj)].is_zero() {
                        continue;
                    }
                    let f = &a[(i, pj)] / &a[(pi, pj)];
                    for (tj, &j) in keep_c.iter().enumerate() {
                        let v = &t[(ti, tj)] - &f * &a[(pi, j)];
                        t[(ti, tj)] = v;
                    }
                }
                if unit_entries(&t) {
                    next = Some((pi, pj, t));
                    break 'search;
                }
            }
        }
        let (pi, pj, t) = next?;
        rows.remove(pi);
        cols.remove(pj);
        a = t;
    }
    is_minimal_block(&a).then_some(StandardMatrixWitness {
        rows,
        cols,
        pattern: StandardPattern::EliminationCore,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeWalk {
    /// Basis row (system numbering) that was dropped.
    pub dropped_row: usize,
    /// Other endpoint of the edge; `None` when the step is degenerate.
    pub endpoint: Option<Vec<Rational>>,
}

/// Walks every edge obtained by dropping one row of the vertex's basis
/// certificate.
pub fn walk_edges(sys: &ConstraintSystem, x: &[Rational]) -> Result<Vec<EdgeWalk>> {
    if !is_vertex(sys, x)? {
        return Err(Error::Precondition("edge walk needs a vertex".into()));
    }
    let tight = sys.tight_rows(x);
    let basis = greedy_basis(sys, &tight);
    let mut walks = Vec::with_capacity(basis.len());
    for (pos, &dropped) in basis.iter().enumerate() {
        let rest: Vec<Vec<Rational>> = basis
            .iter()
            .enumerate()
            .filter(|&(p, _)| p != pos)
            .map(|(_, &r)| sys.row(r).coeffs.clone())
            .collect();
        let m = RationalMatrix::from_rows(&rest)?;
        let Some(mut dir) = null_space(&m).into_iter().next() else {
            walks.push(EdgeWalk {
                dropped_row: dropped,
                endpoint: None,
            });
            continue;
        };
        let row = sys.row(dropped);
        let at = dot(&row.coeffs, x);
        let rate = dot(&row.coeffs, &dir);
        // move the dropped row off the bound it sits at
        let flip = if row.lower.as_ref() == Some(&at) && row.upper.as_ref() != Some(&at) {
            rate.is_negative()
        } else if row.upper.as_ref() == Some(&at) && row.lower.as_ref() != Some(&at) {
            rate.is_positive()
        } else {
            walks.push(EdgeWalk {
                dropped_row: dropped,
                endpoint: None,
            });
            continue;
        };
        if flip {
            dir.iter_mut().for_each(|v| *v = -v.clone());
        }
        let mut step: Option<Rational> = None;
        for r in sys.all_rows() {
            let rate = dot(&r.coeffs, &dir);
            if rate.is_zero() {
                continue;
            }
            let v = dot(&r.coeffs, x);
            let limit = if rate.is_positive() {
                r.upper.as_ref().map(|u| (u - &v) / &rate)
            } else {
                r.lower.as_ref().map(|l| (&v - l) / -&rate)
            };
            if let Some(t) = limit {
                if step.as_ref().map_or(true, |s| &t < s) {
                    step = Some(t);
                }
            }
        }
        let endpoint = match step {
            Some(t) if t.is_positive() => Some(x.iter().zip(&dir).map(|(a, d)| a + &t * d).collect()),
            Some(_) => None,
            None => return Err(Error::Unbounded),
        };
        walks.push(EdgeWalk {
            dropped_row: dropped,
            endpoint,
        });
    }
    Ok(walks)
}

fn max_denominator(x: &[Rational]) -> u64 {
    x.iter().map(denominator_u64).max().unwrap_or(1)
}

/// Adjacent vertex with a strictly smaller maximum denominator, found by a
/// single basis exchange.
pub fn reduce_denominator(sys: &ConstraintSystem, x: &[Rational]) -> Result<Vec<Rational>> {
    let current = max_denominator(x);
    if current < 3 {
        return Err(Error::Precondition(format!(
            "reduction needs a denominator >= 3, max is {current}"
        )));
    }
    let walks = walk_edges(sys, x)?;
    let mut census: BTreeMap<u64, usize> = BTreeMap::new();
    let mut best: Option<(u64, Vec<Rational>)> = None;
    for w in walks {
        let Some(y) = w.endpoint else { continue };
        let d = max_denominator(&y);
        *census.entry(d).or_default() += 1;
        if d < current && best.as_ref().map_or(true, |(bd, _)| d < *bd) && adjacent_vertex_test(sys, x, &y)? {
            best = Some((d, y));
        }
    }
    best.map(|(_, y)| y).ok_or(Error::ReductionStuck {
        census: census.into_iter().collect(),
    })
}

/// Rank of the rows tight at both points at the same bound.
pub fn common_tight_rank(sys: &ConstraintSystem, u: &[Rational], v: &[Rational]) -> usize {
    tight_rank(sys, &common_tight_rows(sys, u, v))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerifiedCutJson {
    pub inequality: InequalityJson,
    pub provenance: Provenance,
    pub valid: bool,
    pub validity_mode: ValidityMode,
    pub max_lhs: RationalJson,
    pub min_lhs: RationalJson,
    pub tight_count: usize,
    pub facet_dim: Option<usize>,
    pub violation: RationalJson,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CutBundleJson {
    pub n: usize,
    pub provenance: Provenance,
    pub source_vertex: Vec<RationalJson>,
    pub verified_valid: bool,
    pub verified_facet_dim: Option<usize>,
    pub cuts: Vec<VerifiedCutJson>,
    pub discarded: Vec<DiscardedJson>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiscardedJson {
    pub reason: String,
}

impl CutBundleJson {
    pub fn new(bundle: &CutBundle, n: usize) -> Self {
        CutBundleJson {
            n,
            provenance: bundle.provenance,
            source_vertex: bundle.source_vertex.iter().map(RationalJson::from).collect(),
            verified_valid: bundle.verified_valid,
            verified_facet_dim: bundle.verified_facet_dim,
            cuts: bundle
                .cuts
                .iter()
                .map(|c| VerifiedCutJson {
                    inequality: InequalityJson::from_inequality(&c.cut, n),
                    provenance: c.provenance,
                    valid: true,
                    validity_mode: c.validity_mode,
                    max_lhs: (&c.max_lhs).into(),
                    min_lhs: (&c.min_lhs).into(),
                    tight_count: c.tight_count,
                    facet_dim: c.facet_dim,
                    violation: (&c.violation).into(),
                })
                .collect(),
            discarded: bundle
                .discarded
                .iter()
                .map(|d| DiscardedJson { reason: d.reason.clone() })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{frac, half};
    use crate::relaxation::evaluate;
    use crate::vertex::{fence_point, pair_point};

    fn m3() -> (ConstraintSystem, Vec<Rational>, LinearInequality) {
        let (x, _) = fence_point(3);
        (build_bn(6).unwrap(), x, fence_inequality(&[0, 1, 2], &[3, 4, 5], 6).unwrap())
    }

    #[test]
    fn fence_inequality_shape() {
        let (_, x, cut) = m3();
        assert_eq!(cut.upper, Some(int(1)));
        assert_eq!(cut.lower, None);
        assert_eq!(cut.coeffs.iter().filter(|c| !c.is_zero()).count(), 9);
        assert_eq!(evaluate(&cut, &x).unwrap(), frac(3, 2));
        let adj = embed_permutation(&Permutation::from_one_based(&[5, 6, 1, 4, 2, 3]).unwrap(), 6).unwrap();
        assert_eq!(evaluate(&cut, &adj).unwrap(), int(1));
        assert!(fence_inequality(&[0, 1], &[2, 3], 4).is_err());
        assert!(fence_inequality(&[0, 1, 2], &[2, 3, 4], 6).is_err());
        assert!(fence_inequality(&[0, 1, 2], &[3, 4, 9], 6).is_err());
    }

    #[test]
    fn fence_with_unsorted_labels_stays_valid() {
        let cut = fence_inequality(&[5, 3, 1], &[0, 4, 2], 6).unwrap();
        let v = validate_inequality(&cut, 6).unwrap();
        assert!(v.valid);
        assert_eq!(Some(v.max_lhs), cut.upper);
        assert_eq!(v.tight_count, 18);
    }

    #[test]
    fn m3_adjacent_integer_vertices() {
        let (sys, x, cut) = m3();
        let adj = adjacent_integer_vertices(&sys, &x).unwrap();
        assert_eq!(adj.len(), 18);
        for p in &adj {
            let y = embed_permutation(p, 6).unwrap();
            assert_eq!(evaluate(&cut, &y).unwrap(), int(1));
        }
        assert!(adj.contains(&Permutation::from_one_based(&[5, 6, 1, 4, 2, 3]).unwrap()));
        let id = embed_permutation(&Permutation::identity(6), 6).unwrap();
        assert!(matches!(adjacent_integer_vertices(&sys, &id), Err(Error::Precondition(_))));
    }

    #[test]
    fn hull_of_m3_adjacent_vertices_is_the_fence() {
        let (sys, x, cut) = m3();
        let pts: Vec<Vec<Rational>> = adjacent_integer_vertices(&sys, &x)
            .unwrap()
            .iter()
            .map(|p| embed_permutation(p, 6).unwrap())
            .collect();
        let planes = hyperplanes_through(&pts, 15).unwrap();
        assert_eq!(planes.len(), 1);
        let fence_eq = LinearEquality::normalized(&cut.coeffs, cut.upper.as_ref().unwrap()).unwrap();
        assert_eq!(planes[0], fence_eq);
    }

    #[test]
    fn unit_square_has_no_hyperplane() {
        let sq = vec![
            vec![int(0), int(0)],
            vec![int(0), int(1)],
            vec![int(1), int(0)],
            vec![int(1), int(1)],
        ];
        assert_eq!(hyperplanes_through(&sq, 2), Err(Error::NoHyperplane));
    }

    #[test]
    fn two_planted_clusters() {
        let mut pts = Vec::new();
        for side in [0, 1] {
            for (a, b) in [(0, 0), (1, 0), (0, 1), (1, 1), (2, 3)] {
                pts.push(vec![int(side), int(a), int(b)]);
            }
        }
        let planes = hyperplanes_through(&pts, 3).unwrap();
        assert_eq!(planes.len(), 2);
        for p in &planes {
            assert_eq!(p.coeffs, vec![BigInt::from(1), BigInt::from(0), BigInt::from(0)]);
        }
    }

    #[test]
    fn m3_bundle() {
        let (sys, x, cut) = m3();
        let b = facet_cuts_for_vertex(&sys, &x, DEFAULT_ORACLE_BUDGET).unwrap();
        assert_eq!(b.cuts.len(), 1);
        assert!(b.verified_valid);
        assert_eq!(b.verified_facet_dim, Some(14));
        assert_eq!(b.cuts[0].cut.canonical_key(), cut.canonical_key());
        assert_eq!(b.provenance, Provenance::Fence);
    }

    #[test]
    fn hull_route_reproduces_fence() {
        // force the hyperplane route on the fence vertex
        let (sys, x, cut) = m3();
        let cands = hull_candidates(&sys, &x).unwrap();
        assert_eq!(cands.len(), 1);
        assert_eq!(cands[0].canonical_key(), cut.canonical_key());
    }

    #[test]
    fn standard_matrix_search() {
        let mut basis = RationalMatrix::identity(5);
        let p = minimal_standard_matrix();
        for i in 0..3 {
            for j in 0..3 {
                basis[(i, j)] = p[(i, j)].clone();
            }
        }
        let w = find_standard_matrices(&basis).unwrap();
        assert_eq!(w.len(), 1);
        assert_eq!(w[0].rows, vec![0, 1, 2]);
        assert_eq!(w[0].cols, vec![0, 1, 2]);
        assert!(find_standard_matrices(&RationalMatrix::identity(6)).unwrap().is_empty());
        assert_eq!(determinant(&p).unwrap(), int(2));
    }

    #[test]
    fn combined_matrix_recognized() {
        let c = combined_standard_matrix();
        assert!(equivalent_up_to_signed_permutation(&c, &c));
        let mut shuffled = c.submatrix(&[4, 2, 0, 3, 1], &[1, 3, 0, 4, 2]);
        for j in 0..5 {
            shuffled[(2, j)] = -shuffled[(2, j)].clone();
        }
        assert!(equivalent_up_to_signed_permutation(&shuffled, &c));
        assert!(!equivalent_up_to_signed_permutation(&RationalMatrix::identity(5), &c));
        let w = find_standard_matrices(&c).unwrap();
        assert!(w.iter().any(|w| w.pattern == StandardPattern::Minimal));
        assert!(w
            .iter()
            .any(|w| matches!(w.pattern, StandardPattern::Combined5 | StandardPattern::Chained(_))));
    }

    #[test]
    fn fence_basis_has_a_minimal_block() {
        let (sys, x, _) = m3();
        let sol = crate::lp::lp_solve(&sys, &fence_inequality(&[0, 1, 2], &[3, 4, 5], 6).unwrap().coeffs, crate::lp::Direction::Max).unwrap();
        assert_eq!(sol.x, x);
        let w = find_standard_matrices(&sol.certificate_matrix(&sys)).unwrap();
        assert!(!w.is_empty());
        assert!(w.iter().any(|w| w.pattern == StandardPattern::EliminationCore));
    }

    #[test]
    fn edge_walks_from_fence_vertex_stay_feasible() {
        let (sys, x, _) = m3();
        let adj: BTreeSet<Permutation> = adjacent_integer_vertices(&sys, &x).unwrap().into_iter().collect();
        let walks = walk_edges(&sys, &x).unwrap();
        assert_eq!(walks.len(), 15);
        for w in walks {
            if let Some(y) = w.endpoint {
                assert!(sys.is_feasible(&y));
                assert!(is_vertex(&sys, &y).unwrap());
                if y.iter().all(|v| v.denom() == &BigInt::from(1)) {
                    let p = crate::solver::decode_integer_vertex(&y, 6).unwrap();
                    assert!(adj.contains(&p));
                }
            }
        }
    }

    #[test]
    fn reduce_rejects_half_integral() {
        let (sys, x, _) = m3();
        assert!(matches!(reduce_denominator(&sys, &x), Err(Error::Precondition(_))));
    }

    #[test]
    fn triple_expression() {
        let vars = VarIndex::new(4);
        let t = TripleExpression::new(2, 0, 3).unwrap();
        let x = pair_point(4, |i, j| if (i, j) == (0, 2) { int(0) } else { half() });
        // x_20 + x_03 - x_23 = 1 + 1/2 - 1/2
        assert_eq!(t.evaluate(&vars, &x), int(1));
        assert!(TripleExpression::new(1, 1, 2).is_err());
    }
}
