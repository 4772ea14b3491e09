//! Cutting-plane loop over `B_n` with the auxiliary-problem fallback.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::facets::{
    facet_cuts_for_vertex, hyperplanes_through, orient_hyperplanes, reduce_denominator, verify_cut, Provenance,
    TripleExpression, DEFAULT_ORACLE_BUDGET,
};
use crate::instance::{LopInstance, Permutation};
use crate::lp::{lp_solve, BasicSolution, Direction};
use crate::numerics::rational::{denominator_u64, RationalJson};
use crate::numerics::{dot, int, Rational};
use crate::oracle::{all_orders, validate_inequality, MAX_EXHAUSTIVE_N};
use crate::relaxation::{build_bn, embed_bits, embed_permutation, ConstraintSystem, InequalityJson, LinearInequality, VarIndex};

/// Reduced-space objective: `value(x) = c . x + constant`.
pub fn objective_vector(inst: &LopInstance) -> (Vec<Rational>, Rational) {
    let vars = VarIndex::new(inst.n);
    let mut c = vec![Rational::zero(); vars.len()];
    let mut constant = Rational::zero();
    for i in 0..inst.n {
        for j in i + 1..inst.n {
            c[vars.column(i, j)] = int(inst.cost(i, j) - inst.cost(j, i));
            constant += int(inst.cost(j, i));
        }
    }
    (c, constant)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolverConfig {
    pub max_iterations: usize,
    /// `None` turns exhaustive verification on for `n <= 8`.
    pub oracle_verification: Option<bool>,
    pub reduction_enabled: bool,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            max_iterations: 50,
            oracle_verification: None,
            reduction_enabled: true,
            seed: 0,
        }
    }
}

impl SolverConfig {
    fn oracle_budget(&self, n: usize) -> usize {
        let on = self.oracle_verification.unwrap_or(n <= MAX_EXHAUSTIVE_N);
        if on {
            DEFAULT_ORACLE_BUDGET
        } else {
            0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Optimal,
    CutsExhausted,
    IterationLimit,
    ReductionStuck,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VertexKind {
    Integer,
    Fractional,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IterationRecord {
    pub lp_value: Rational,
    pub vertex: VertexKind,
    pub denominators: Vec<u64>,
    pub cuts_added: usize,
    pub provenance: Vec<Provenance>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolveReport {
    pub n: usize,
    pub status: SolveStatus,
    pub best_bound: Rational,
    pub incumbent: Option<(Permutation, i64)>,
    pub iterations: Vec<IterationRecord>,
    pub cut_pool_final: Vec<LinearInequality>,
}

/// Loose upper bound used only when the very first LP fails.
fn trivial_bound(inst: &LopInstance) -> Rational {
    let mut total = 0i64;
    for i in 0..inst.n {
        for j in i + 1..inst.n {
            total += inst.cost(i, j).max(inst.cost(j, i));
        }
    }
    int(total)
}

fn is_integral_point(x: &[Rational]) -> bool {
    x.iter().all(|v| v.is_integer())
}

pub fn solve(inst: &LopInstance, cfg: &SolverConfig) -> SolveReport {
    let n = inst.n;
    let mut sys = build_bn(n).expect("instances have n >= 2");
    let (c, constant) = objective_vector(inst);
    let budget = cfg.oracle_budget(n);
    let mut iterations = Vec::new();
    let mut best_bound: Option<Rational> = None;
    let mut incumbent = None;
    let mut status = SolveStatus::IterationLimit;

    for _ in 0..cfg.max_iterations.max(1) {
        let sol = match lp_solve(&sys, &c, Direction::Max) {
            Ok(s) => s,
            Err(_) => {
                status = SolveStatus::CutsExhausted;
                break;
            }
        };
        let value = &sol.objective + &constant;
        if best_bound.as_ref().map_or(true, |b| &value < b) {
            best_bound = Some(value.clone());
        }
        let x = sol.x;
        if is_integral_point(&x) {
            iterations.push(IterationRecord {
                lp_value: value.clone(),
                vertex: VertexKind::Integer,
                denominators: vec![],
                cuts_added: 0,
                provenance: vec![],
            });
            match decode_integer_vertex(&x, n) {
                Ok(p) => {
                    let v = value.to_integer();
                    incumbent = Some((p, i64::try_from(v).unwrap_or(i64::MAX)));
                    status = SolveStatus::Optimal;
                }
                Err(_) => status = SolveStatus::CutsExhausted,
            }
            break;
        }
        let denominators: BTreeSet<u64> = x.iter().map(denominator_u64).filter(|&d| d > 1).collect();
        let mut record = IterationRecord {
            lp_value: value,
            vertex: VertexKind::Fractional,
            denominators: denominators.iter().copied().collect(),
            cuts_added: 0,
            provenance: vec![],
        };

        let (target, reduced, stuck) = reduce_to_half(&sys, &x, cfg.reduction_enabled);
        let mut added = Vec::new();
        if let Some(t) = target.as_ref().filter(|t| !is_integral_point(t)) {
            if let Ok(bundle) = facet_cuts_for_vertex(&sys, t, budget) {
                for cut in bundle.cuts {
                    let prov = if reduced { Provenance::Reduced } else { cut.provenance };
                    if sys.push_cut(cut.cut).unwrap_or(false) {
                        added.push(prov);
                    }
                }
            }
        }
        if added.is_empty() {
            let t = target.as_deref().unwrap_or(&x);
            for cut in auxiliary_cuts(&sys, t, n, budget) {
                if sys.push_cut(cut).unwrap_or(false) {
                    added.push(Provenance::Auxiliary);
                }
            }
        }
        record.cuts_added = added.len();
        record.provenance = added;
        let done = record.cuts_added == 0;
        iterations.push(record);
        if done {
            status = if stuck {
                SolveStatus::ReductionStuck
            } else {
                SolveStatus::CutsExhausted
            };
            break;
        }
    }

    SolveReport {
        n,
        status,
        best_bound: best_bound.unwrap_or_else(|| trivial_bound(inst)),
        incumbent,
        iterations,
        cut_pool_final: sys.cut_pool.clone(),
    }
}

const MAX_REDUCTION_STEPS: usize = 32;

/// Walks towards a half-integral vertex. Returns the vertex to cut, whether
/// a reduction happened, and whether reduction got stuck.
fn reduce_to_half(sys: &ConstraintSystem, x: &[Rational], enabled: bool) -> (Option<Vec<Rational>>, bool, bool) {
    let max_den = |y: &[Rational]| y.iter().map(denominator_u64).max().unwrap_or(1);
    if max_den(x) <= 2 {
        return (Some(x.to_vec()), false, false);
    }
    if !enabled {
        return (None, false, false);
    }
    let mut y = x.to_vec();
    for _ in 0..MAX_REDUCTION_STEPS {
        match reduce_denominator(sys, &y) {
            Ok(next) => {
                y = next;
                if max_den(&y) <= 2 {
                    return (Some(y), true, false);
                }
            }
            Err(_) => return (None, false, true),
        }
    }
    (None, false, true)
}

/// Oracle minimum of a cut's left-hand side when the scan is exact, else
/// the sum of its negative coefficients.
fn cut_lower_bound(cut: &LinearInequality, n: usize) -> Rational {
    if n <= MAX_EXHAUSTIVE_N {
        if let Ok(v) = validate_inequality(cut, n) {
            return v.min_lhs;
        }
    }
    cut.coeffs.iter().filter(|a| a.is_negative()).cloned().sum()
}

/// Rows of the current system that are extreme at `x`: triangle rows as
/// triples equal to 1, and tight pool cuts with their two bounds.
pub fn tight_lists(
    sys: &ConstraintSystem,
    x: &[Rational],
) -> (Vec<TripleExpression>, Vec<(LinearInequality, Rational, Rational)>) {
    let vars = VarIndex::new(sys.n);
    let mut triples = Vec::new();
    for r in 0..sys.triangle_count() {
        let (i, j, k) = sys.triangle_triple(r).expect("triangle row");
        let t = TripleExpression { i, j, k };
        let v = t.evaluate(&vars, x);
        if v.is_one() {
            triples.push(t);
        } else if v.is_zero() {
            triples.push(TripleExpression { i: k, j, k: i });
        }
    }
    let mut cuts = Vec::new();
    for cut in &sys.cut_pool {
        let lhs = dot(&cut.coeffs, x);
        if let Some(u) = &cut.upper {
            if &lhs == u {
                let lower = cut_lower_bound(cut, sys.n);
                if &lower < u {
                    cuts.push((cut.clone(), lower, u.clone()));
                }
            }
        }
    }
    (triples, cuts)
}

/// Objective `sum_s t_s(x) + sum_s (f_s(x) - f1_s) / (f2_s - f1_s)` as a
/// reduced vector plus constant.
fn auxiliary_objective(
    n: usize,
    triples: &[TripleExpression],
    cuts: &[(LinearInequality, Rational, Rational)],
) -> Result<(Vec<Rational>, Rational)> {
    let vars = VarIndex::new(n);
    let mut c = vec![Rational::zero(); vars.len()];
    let mut constant = Rational::zero();
    for t in triples {
        let e = t.expr(&vars);
        for (a, b) in c.iter_mut().zip(&e.coeffs) {
            *a += b;
        }
        constant += &e.constant;
    }
    for (cut, f1, f2) in cuts {
        if cut.dim() != vars.len() {
            return Err(Error::DimensionMismatch {
                expected: vars.len(),
                got: cut.dim(),
            });
        }
        let span = f2 - f1;
        if !span.is_positive() {
            return Err(Error::Degenerate("cut bounds f1 >= f2".into()));
        }
        for (a, b) in c.iter_mut().zip(&cut.coeffs) {
            *a += b / &span;
        }
        constant -= f1 / &span;
    }
    Ok((c, constant))
}

/// LP over plain `B_n` of the auxiliary objective. The returned objective
/// includes the constant term.
pub fn auxiliary_problem(
    sys: &ConstraintSystem,
    tight_triples: &[TripleExpression],
    tight_cuts: &[(LinearInequality, Rational, Rational)],
) -> Result<BasicSolution> {
    if tight_triples.is_empty() && tight_cuts.is_empty() {
        return Err(Error::Degenerate("auxiliary problem needs at least one row".into()));
    }
    let (c, constant) = auxiliary_objective(sys.n, tight_triples, tight_cuts)?;
    let base = sys.base();
    let mut sol = lp_solve(&base, &c, Direction::Max)?;
    sol.objective += constant;
    Ok(sol)
}

/// Cuts built from the integer vertices of the auxiliary optimum face.
fn auxiliary_cuts(sys: &ConstraintSystem, x: &[Rational], n: usize, budget: usize) -> Vec<LinearInequality> {
    if n > MAX_EXHAUSTIVE_N {
        return vec![];
    }
    let (triples, cuts) = tight_lists(sys, x);
    let Ok(sol) = auxiliary_problem(sys, &triples, &cuts) else {
        return vec![];
    };
    let Ok((c, constant)) = auxiliary_objective(n, &triples, &cuts) else {
        return vec![];
    };
    let face: Vec<Vec<Rational>> = all_orders(n)
        .into_iter()
        .filter_map(|o| {
            let p = Permutation::new(o).ok()?;
            let y = embed_permutation(&p, n).ok()?;
            (dot(&c, &y) + &constant == sol.objective).then_some(y)
        })
        .collect();
    if face.is_empty() {
        return vec![];
    }
    let Ok(planes) = hyperplanes_through(&face, sys.dim()) else {
        return vec![];
    };
    orient_hyperplanes(&planes, n)
        .into_iter()
        .filter_map(|cut| verify_cut(&cut, n, x, Provenance::Auxiliary, budget).ok())
        .map(|v| v.cut)
        .collect()
}

/// Ordering whose embedding is the 0/1 point `x`.
pub fn decode_integer_vertex(x: &[Rational], n: usize) -> Result<Permutation> {
    let vars = VarIndex::new(n);
    if x.len() != vars.len() {
        return Err(Error::DimensionMismatch {
            expected: vars.len(),
            got: x.len(),
        });
    }
    if !x.iter().all(|v| v.is_zero() || v.is_one()) {
        return Err(Error::Precondition("point is not 0/1".into()));
    }
    let one = BigInt::from(1);
    let mut out_degree: Vec<(usize, usize)> = (0..n)
        .map(|i| {
            let d = (0..n)
                .filter(|&j| j != i && vars.value(x, i, j).numer() == &one)
                .count();
            (d, i)
        })
        .collect();
    out_degree.sort_by(|a, b| b.cmp(a));
    let p = Permutation::new(out_degree.into_iter().map(|(_, i)| i).collect())?;
    let bits = embed_bits(&p, n)?;
    if bits.iter().zip(x).any(|(&b, v)| int(b as i64) != *v) {
        return Err(Error::Internal("0/1 point is not transitive".into()));
    }
    Ok(p)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IncumbentJson {
    pub order: Vec<usize>,
    pub value: i64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IterationJson {
    pub lp_value: RationalJson,
    pub vertex: VertexKind,
    pub denominators: Vec<u64>,
    pub cuts_added: usize,
    pub provenance: Vec<Provenance>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveReportJson {
    pub status: SolveStatus,
    pub best_bound: RationalJson,
    pub incumbent: Option<IncumbentJson>,
    pub iterations: Vec<IterationJson>,
    pub cuts: Vec<InequalityJson>,
}

impl From<&SolveReport> for SolveReportJson {
    fn from(r: &SolveReport) -> Self {
        SolveReportJson {
            status: r.status,
            best_bound: (&r.best_bound).into(),
            incumbent: r.incumbent.as_ref().map(|(p, v)| IncumbentJson {
                order: p.to_one_based(),
                value: *v,
            }),
            iterations: r
                .iterations
                .iter()
                .map(|it| IterationJson {
                    lp_value: (&it.lp_value).into(),
                    vertex: it.vertex,
                    denominators: it.denominators.clone(),
                    cuts_added: it.cuts_added,
                    provenance: it.provenance.clone(),
                })
                .collect(),
            cuts: r
                .cut_pool_final
                .iter()
                .map(|c| InequalityJson::from_inequality(c, r.n))
                .collect(),
        }
    }
}

impl SolveReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&SolveReportJson::from(self)).expect("report serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::facets::fence_inequality;
    use crate::instance::{permutation_value, random_instance};
    use crate::numerics::frac;
    use crate::oracle::brute_force_opt;

    fn n3() -> LopInstance {
        LopInstance::new(vec![vec![0, 5, 1], vec![0, 0, 4], vec![2, 0, 0]], "n3").unwrap()
    }

    fn fence_instance() -> LopInstance {
        let mut c = vec![vec![0i64; 6]; 6];
        for l in 0..3 {
            for q in 0..3 {
                c[l][3 + q] = if l == q { 1 } else { -1 };
            }
        }
        LopInstance::new(c, "fence3").unwrap()
    }

    #[test]
    fn objective_matches_permutation_value() {
        let inst = random_instance(5, 3, 0..=99).unwrap();
        let (c, k) = objective_vector(&inst);
        for o in all_orders(5).into_iter().step_by(7) {
            let p = Permutation::new(o).unwrap();
            let x = embed_permutation(&p, 5).unwrap();
            assert_eq!(dot(&c, &x) + &k, int(permutation_value(&inst, &p)));
        }
    }

    #[test]
    fn decode_examples() {
        let ones = vec![int(1); 3];
        assert_eq!(decode_integer_vertex(&ones, 3).unwrap().to_one_based(), vec![1, 2, 3]);
        let zeros = vec![int(0); 3];
        assert_eq!(decode_integer_vertex(&zeros, 3).unwrap().to_one_based(), vec![3, 2, 1]);
        let x = vec![int(0), int(1), int(1)];
        assert_eq!(decode_integer_vertex(&x, 3).unwrap().to_one_based(), vec![2, 1, 3]);
        let cyc = vec![int(1), int(0), int(1)];
        assert!(matches!(decode_integer_vertex(&cyc, 3), Err(Error::Internal(_))));
    }

    #[test]
    fn n3_is_integral_at_once() {
        let r = solve(&n3(), &SolverConfig::default());
        assert_eq!(r.status, SolveStatus::Optimal);
        assert_eq!(r.best_bound, int(10));
        assert_eq!(r.incumbent.as_ref().unwrap().1, 10);
        assert_eq!(r.iterations.len(), 1);
        assert!(r.cut_pool_final.is_empty());
    }

    #[test]
    fn fence_instance_takes_one_cut() {
        let r = solve(&fence_instance(), &SolverConfig::default());
        assert_eq!(r.iterations[0].lp_value, frac(3, 2));
        assert_eq!(r.iterations[0].vertex, VertexKind::Fractional);
        assert_eq!(r.iterations[0].provenance, vec![Provenance::Fence]);
        assert_eq!(r.iterations.len(), 2);
        assert_eq!(r.status, SolveStatus::Optimal);
        assert_eq!(r.best_bound, int(1));
        assert_eq!(brute_force_opt(&fence_instance()).unwrap().best_value, 1);
    }

    #[test]
    fn auxiliary_examples() {
        let sys = build_bn(6).unwrap();
        let one = [TripleExpression { i: 0, j: 1, k: 2 }];
        assert_eq!(auxiliary_problem(&sys, &one, &[]).unwrap().objective, int(1));
        let cut = fence_inequality(&[0, 1, 2], &[3, 4, 5], 6).unwrap();
        assert_eq!(cut_lower_bound(&cut, 6), int(-4));
        // over plain B_6 the cut functional still reaches 3/2 at the fence point
        let sol = auxiliary_problem(&sys, &[], &[(cut, int(-4), int(1))]).unwrap();
        assert_eq!(sol.objective, frac(11, 10));
        assert!(matches!(auxiliary_problem(&sys, &[], &[]), Err(Error::Degenerate(_))));
    }

    #[test]
    fn auxiliary_on_full_tight_set_reaches_p_plus_q() {
        let (x, _) = crate::vertex::fence_point(3);
        let sys = build_bn(6)
            .unwrap()
            .add_cut(fence_inequality(&[0, 1, 2], &[3, 4, 5], 6).unwrap())
            .unwrap();
        // the fence cut is violated at x, so only triangle rows are listed
        let (triples, cuts) = tight_lists(&sys, &x);
        assert!(cuts.is_empty());
        let sol = auxiliary_problem(&sys, &triples, &cuts).unwrap();
        assert_eq!(sol.objective, int(triples.len() as i64));
    }

    #[test]
    fn random_instances_are_sound() {
        for seed in 0..12 {
            let inst = random_instance(6, seed, 0..=99).unwrap();
            let r = solve(&inst, &SolverConfig::default());
            let opt = brute_force_opt(&inst).unwrap();
            assert!(r.best_bound >= int(opt.best_value));
            if r.status == SolveStatus::Optimal {
                assert_eq!(r.best_bound, int(opt.best_value));
            }
            let best = embed_permutation(&opt.best_permutation, 6).unwrap();
            for cut in &r.cut_pool_final {
                assert!(cut.is_satisfied(&dot(&cut.coeffs, &best)));
            }
            for w in r.iterations.windows(2) {
                assert!(w[1].lp_value <= w[0].lp_value);
            }
        }
    }

    #[test]
    fn report_json_is_stable() {
        let inst = random_instance(5, 9, 0..=99).unwrap();
        let a = solve(&inst, &SolverConfig::default()).to_json();
        let b = solve(&inst, &SolverConfig::default()).to_json();
        assert_eq!(a, b);
        let v: serde_json::Value = serde_json::from_str(&a).unwrap();
        for key in ["status", "best_bound", "incumbent", "iterations", "cuts"] {
            assert!(v.get(key).is_some(), "{key}");
        }
    }
}
