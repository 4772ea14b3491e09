//! Exact bounded-variable primal simplex.
//!
//! Structural columns carry their box bounds directly; every other row
//! `lower <= a . x <= upper` gets a bounded slack `s = a . x`. The dictionary
//! expresses basic variables as linear forms in the nonbasic ones, which sit
//! at a finite bound. Entering and leaving variables follow Bland's rule
//! (smallest index), so the method terminates on degenerate vertices.

use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::numerics::matrix::integer_rank;
use crate::numerics::{dot, int, Rational, RationalMatrix};
use crate::relaxation::{ConstraintSystem, RowOrigin};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Max,
    Min,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BasicSolution {
    pub x: Vec<Rational>,
    pub objective: Rational,
    /// Every row (system numbering) satisfied with equality.
    pub tight_rows: Vec<usize>,
    /// Greedy lowest-index independent subset of `tight_rows`, of size `dim`.
    pub basis_certificate: Vec<usize>,
    pub pivots: usize,
}

impl BasicSolution {
    pub fn certificate_matrix(&self, sys: &ConstraintSystem) -> RationalMatrix {
        let rows: Vec<Vec<Rational>> = self
            .basis_certificate
            .iter()
            .map(|&r| sys.row(r).coeffs.clone())
            .collect();
        RationalMatrix::from_rows(&rows).expect("rows share the column count")
    }
}

const PIVOT_LIMIT: usize = 1_000_000;

struct Dictionary {
    /// `dict[i][k]`: coefficient of nonbasic `k` in basic row `i`.
    dict: Vec<Vec<Rational>>,
    reduced: Vec<Rational>,
    basic: Vec<usize>,
    nonbasic: Vec<usize>,
    basic_value: Vec<Rational>,
    nonbasic_value: Vec<Rational>,
    lower: Vec<Option<Rational>>,
    upper: Vec<Option<Rational>>,
}

impl Dictionary {
    fn entering(&self) -> Option<(usize, bool)> {
        let mut best: Option<(usize, usize, bool)> = None;
        for (k, d) in self.reduced.iter().enumerate() {
            if d.is_zero() {
                continue;
            }
            let var = self.nonbasic[k];
            let v = &self.nonbasic_value[k];
            let can_up = self.upper[var].as_ref().map_or(true, |u| v < u);
            let can_down = self.lower[var].as_ref().map_or(true, |l| v > l);
            let increase = d.is_positive();
            if (increase && can_up) || (!increase && can_down) {
                if best.map_or(true, |(bv, _, _)| var < bv) {
                    best = Some((var, k, increase));
                }
            }
        }
        best.map(|(_, k, inc)| (k, inc))
    }

    fn pivot(&mut self, r: usize, k: usize) {
        let piv = self.dict[r][k].clone();
        let inv = piv.recip();
        let mut new_row: Vec<Rational> = self.dict[r].iter().map(|a| -(a * &inv)).collect();
        new_row[k] = inv;
        for (i, row) in self.dict.iter_mut().enumerate() {
            if i == r || row[k].is_zero() {
                continue;
            }
            let f = std::mem::take(&mut row[k]);
            for (kk, (a, b)) in row.iter_mut().zip(&new_row).enumerate() {
                if b.is_zero() {
                    continue;
                }
                if kk == k {
                    *a = &f * b;
                } else {
                    *a += &f * b;
                }
            }
        }
        if !self.reduced[k].is_zero() {
            let f = std::mem::take(&mut self.reduced[k]);
            for (kk, (a, b)) in self.reduced.iter_mut().zip(&new_row).enumerate() {
                if b.is_zero() {
                    continue;
                }
                if kk == k {
                    *a = &f * b;
                } else {
                    *a += &f * b;
                }
            }
        }
        self.dict[r] = new_row;
    }
}

/// Optimal basic feasible solution of `objective . x` over the system.
pub fn lp_solve(sys: &ConstraintSystem, objective: &[Rational], direction: Direction) -> Result<BasicSolution> {
    let d = sys.dim();
    if objective.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: objective.len(),
        });
    }
    let lp_rows: Vec<usize> = (0..sys.row_count())
        .filter(|&r| sys.row(r).origin != RowOrigin::Bound)
        .collect();
    let m = lp_rows.len();
    let total = d + m;
    let mut lower: Vec<Option<Rational>> = vec![Some(int(0)); d];
    let mut upper: Vec<Option<Rational>> = vec![Some(int(1)); d];
    for &r in &lp_rows {
        let row = sys.row(r);
        lower.push(row.lower.clone());
        upper.push(row.upper.clone());
    }
    // start at x = 0, the reversed identity ordering
    for (i, &r) in lp_rows.iter().enumerate() {
        let zero = Rational::zero();
        if !sys.row(r).is_satisfied(&zero) {
            return Err(Error::InfeasibleStart(format!(
                "row {r} excludes the origin (slack {})",
                d + i
            )));
        }
    }
    let sign = match direction {
        Direction::Max => int(1),
        Direction::Min => int(-1),
    };
    let mut dx = Dictionary {
        dict: lp_rows.iter().map(|&r| sys.row(r).coeffs.clone()).collect(),
        reduced: objective.iter().map(|c| c * &sign).collect(),
        basic: (d..total).collect(),
        nonbasic: (0..d).collect(),
        basic_value: vec![Rational::zero(); m],
        nonbasic_value: vec![Rational::zero(); d],
        lower,
        upper,
    };

    let mut pivots = 0;
    while let Some((k, increase)) = dx.entering() {
        pivots += 1;
        if pivots > PIVOT_LIMIT {
            return Err(Error::Internal("simplex pivot limit exceeded".into()));
        }
        let var = dx.nonbasic[k];
        // (step, leaving variable index, row or None for a bound flip, hits upper)
        let mut best: Option<(Rational, usize, Option<usize>, bool)> = None;
        let mut consider = |step: Rational, idx: usize, row: Option<usize>, at_upper: bool| {
            let better = match &best {
                None => true,
                Some((s, bi, _, _)) => step < *s || (step == *s && idx < *bi),
            };
            if better {
                best = Some((step, idx, row, at_upper));
            }
        };
        if let (Some(l), Some(u)) = (&dx.lower[var], &dx.upper[var]) {
            consider(u - l, var, None, increase);
        }
        for i in 0..m {
            let a = &dx.dict[i][k];
            if a.is_zero() {
                continue;
            }
            let rate = if increase { a.clone() } else { -a };
            let b = dx.basic[i];
            let v = &dx.basic_value[i];
            if rate.is_positive() {
                if let Some(u) = &dx.upper[b] {
                    consider((u - v) / &rate, b, Some(i), true);
                }
            } else if let Some(l) = &dx.lower[b] {
                consider((v - l) / -&rate, b, Some(i), false);
            }
        }
        let Some((step, _, row, at_upper)) = best else {
            return Err(Error::Unbounded);
        };
        let delta = if increase { step.clone() } else { -step.clone() };
        if !delta.is_zero() {
            for i in 0..m {
                if !dx.dict[i][k].is_zero() {
                    let change = &dx.dict[i][k] * &delta;
                    dx.basic_value[i] += change;
                }
            }
        }
        let entering_value = &dx.nonbasic_value[k] + &delta;
        match row {
            None => dx.nonbasic_value[k] = entering_value,
            Some(r) => {
                let leaving = dx.basic[r];
                let bound = if at_upper {
                    dx.upper[leaving].clone()
                } else {
                    dx.lower[leaving].clone()
                }
                .expect("ratio test only uses finite bounds");
                dx.pivot(r, k);
                dx.basic[r] = var;
                dx.basic_value[r] = entering_value;
                dx.nonbasic[k] = leaving;
                dx.nonbasic_value[k] = bound;
            }
        }
    }

    let mut x = vec![Rational::zero(); d];
    for (k, &var) in dx.nonbasic.iter().enumerate() {
        if var < d {
            x[var] = dx.nonbasic_value[k].clone();
        }
    }
    for (i, &var) in dx.basic.iter().enumerate() {
        if var < d {
            x[var] = dx.basic_value[i].clone();
        }
    }
    let objective_value = dot(objective, &x);
    let tight_rows = sys.tight_rows(&x);
    let basis_certificate = greedy_basis(sys, &tight_rows);
    if basis_certificate.len() != d {
        return Err(Error::Internal(format!(
            "simplex ended at a point of tight rank {} < {d}",
            basis_certificate.len()
        )));
    }
    Ok(BasicSolution {
        x,
        objective: objective_value,
        tight_rows,
        basis_certificate,
        pivots,
    })
}

fn int_rows(sys: &ConstraintSystem, rows: &[usize]) -> Vec<Vec<i64>> {
    rows.iter()
        .map(|&r| {
            sys.row(r)
                .normalized()
                .integer_coeffs()
                .expect("normalized rows have integer coefficients")
        })
        .collect()
}

/// Lowest-index maximal independent subset of `rows`.
pub fn greedy_basis(sys: &ConstraintSystem, rows: &[usize]) -> Vec<usize> {
    let ints = int_rows(sys, rows);
    let mut chosen: Vec<usize> = Vec::new();
    let mut chosen_rows: Vec<Vec<i64>> = Vec::new();
    for (idx, r) in rows.iter().enumerate() {
        if chosen.len() == sys.dim() {
            break;
        }
        chosen_rows.push(ints[idx].clone());
        if integer_rank(&chosen_rows) == chosen_rows.len() {
            chosen.push(*r);
        } else {
            chosen_rows.pop();
        }
    }
    chosen
}

pub fn tight_rank(sys: &ConstraintSystem, rows: &[usize]) -> usize {
    integer_rank(&int_rows(sys, rows))
}

fn require_feasible(sys: &ConstraintSystem, x: &[Rational]) -> Result<()> {
    if x.len() != sys.dim() {
        return Err(Error::DimensionMismatch {
            expected: sys.dim(),
            got: x.len(),
        });
    }
    if !sys.is_feasible(x) {
        return Err(Error::Precondition("point is infeasible".into()));
    }
    Ok(())
}

/// True iff the rows tight at `x` have full rank.
pub fn is_vertex(sys: &ConstraintSystem, x: &[Rational]) -> Result<bool> {
    require_feasible(sys, x)?;
    Ok(tight_rank(sys, &sys.tight_rows(x)) == sys.dim())
}

/// Rows tight at `u` that sit at the same bound at `v`. A two-sided row
/// tight at opposite bounds does not contain the segment between them.
pub fn common_tight_rows(sys: &ConstraintSystem, u: &[Rational], v: &[Rational]) -> Vec<usize> {
    sys.tight_rows(u)
        .into_iter()
        .filter(|&r| {
            let row = sys.row(r);
            dot(&row.coeffs, u) == dot(&row.coeffs, v)
        })
        .collect()
}

/// True iff `u` and `v` are distinct vertices joined by an edge.
pub fn adjacent_vertex_test(sys: &ConstraintSystem, u: &[Rational], v: &[Rational]) -> Result<bool> {
    for p in [u, v] {
        if !is_vertex(sys, p)? {
            return Err(Error::Precondition("adjacency test needs two vertices".into()));
        }
    }
    if u == v {
        return Ok(false);
    }
    Ok(tight_rank(sys, &common_tight_rows(sys, u, v)) + 1 == sys.dim())
}
