//! Problem instances, permutations and the plain-text matrix format.
//!
//! ```text
//! # name: tiny
//! 3
//! 0 5 1
//! 0 0 4
//! 2 0 0
//! ```
//!
//! Lines starting with `#` are comments. The first remaining line holds `n`,
//! followed by exactly `n` rows of `n` whitespace-separated integers.

use std::fmt::Write as _;
use std::ops::RangeInclusive;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LopInstance {
    pub n: usize,
    /// Row-major `n x n`; `costs[i][j]` is earned when `i` precedes `j`.
    pub costs: Vec<Vec<i64>>,
    pub name: String,
}

impl LopInstance {
    pub fn new(costs: Vec<Vec<i64>>, name: impl Into<String>) -> Result<Self> {
        let n = costs.len();
        if n < 2 {
            return Err(Error::Domain(format!("n >= 2 required, got {n}")));
        }
        if let Some(r) = costs.iter().position(|row| row.len() != n) {
            return Err(Error::Shape(format!("cost row {r} has wrong length")));
        }
        let mut costs = costs;
        for (i, row) in costs.iter_mut().enumerate() {
            row[i] = 0;
        }
        Ok(LopInstance {
            n,
            costs,
            name: name.into(),
        })
    }

    pub fn cost(&self, i: usize, j: usize) -> i64 {
        self.costs[i][j]
    }

    /// `sum_{i<j} (c_ij + c_ji)`: the value of any ordering plus its reversal.
    pub fn pair_total(&self) -> i64 {
        let mut t = 0;
        for i in 0..self.n {
            for j in i + 1..self.n {
                t += self.costs[i][j] + self.costs[j][i];
            }
        }
        t
    }
}

/// An ordering of `0..n`, stored zero-based. External text and JSON forms are
/// one-based.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Permutation {
    order: Vec<usize>,
}

impl Permutation {
    pub fn new(order: Vec<usize>) -> Result<Self> {
        let n = order.len();
        let mut seen = vec![false; n];
        for &v in &order {
            if v >= n || seen[v] {
                return Err(Error::Domain(format!("not a permutation: {order:?}")));
            }
            seen[v] = true;
        }
        Ok(Permutation { order })
    }

    pub fn from_one_based(order: &[usize]) -> Result<Self> {
        if order.contains(&0) {
            return Err(Error::Domain("one-based order contains 0".into()));
        }
        Self::new(order.iter().map(|v| v - 1).collect())
    }

    pub fn identity(n: usize) -> Self {
        Permutation {
            order: (0..n).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn to_one_based(&self) -> Vec<usize> {
        self.order.iter().map(|v| v + 1).collect()
    }

    pub fn reversed(&self) -> Self {
        Permutation {
            order: self.order.iter().rev().copied().collect(),
        }
    }

    /// `position[v]` is the index of element `v` in the ordering.
    pub fn positions(&self) -> Vec<usize> {
        let mut pos = vec![0; self.order.len()];
        for (k, &v) in self.order.iter().enumerate() {
            pos[v] = k;
        }
        pos
    }

    pub fn precedes(&self, a: usize, b: usize) -> bool {
        let pos = self.positions();
        pos[a] < pos[b]
    }
}

pub fn permutation_value(inst: &LopInstance, p: &Permutation) -> i64 {
    order_value(&inst.costs, p.order())
}

pub(crate) fn order_value(costs: &[Vec<i64>], order: &[usize]) -> i64 {
    let mut v = 0;
    for (a, &i) in order.iter().enumerate() {
        let row = &costs[i];
        for &j in &order[a + 1..] {
            v += row[j];
        }
    }
    v
}

pub fn parse_instance(text: &str) -> Result<LopInstance> {
    let mut name = String::from("instance");
    let mut header: Option<usize> = None;
    let mut rows: Vec<Vec<i64>> = Vec::new();
    let mut last_line = 0;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        last_line = line_no;
        let line = raw.trim();
        if let Some(comment) = line.strip_prefix('#') {
            if let Some(label) = comment.trim().strip_prefix("name:") {
                name = label.trim().to_string();
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        match header {
            None => {
                let n: usize = line.parse().map_err(|_| Error::Parse {
                    line: line_no,
                    msg: format!("expected element count, found {line:?}"),
                })?;
                if n < 2 {
                    return Err(Error::Parse {
                        line: line_no,
                        msg: format!("n >= 2 required, got {n}"),
                    });
                }
                header = Some(n);
            }
            Some(n) => {
                if rows.len() == n {
                    return Err(Error::Parse {
                        line: line_no,
                        msg: "unexpected content after the last row".into(),
                    });
                }
                let row: Vec<i64> = line
                    .split_ascii_whitespace()
                    .map(|tok| {
                        tok.parse::<i64>().map_err(|_| Error::Parse {
                            line: line_no,
                            msg: format!("non-numeric entry {tok:?}"),
                        })
                    })
                    .collect::<Result<_>>()?;
                if row.len() != n {
                    return Err(Error::Parse {
                        line: line_no,
                        msg: format!("row has {} entries, expected {n}", row.len()),
                    });
                }
                rows.push(row);
            }
        }
    }
    let Some(n) = header else {
        return Err(Error::Parse {
            line: last_line,
            msg: "missing header".into(),
        });
    };
    if rows.len() != n {
        return Err(Error::Parse {
            line: last_line,
            msg: format!("expected {n} rows, found {}", rows.len()),
        });
    }
    LopInstance::new(rows, name)
}

pub fn serialize_instance(inst: &LopInstance) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# name: {}", inst.name);
    let _ = writeln!(out, "{}", inst.n);
    for row in &inst.costs {
        let cells: Vec<String> = row.iter().map(i64::to_string).collect();
        let _ = writeln!(out, "{}", cells.join(" "));
    }
    out
}

/// Off-diagonal costs drawn uniformly from `weights`, row-major, from a
/// ChaCha8 stream seeded with `seed`.
pub fn random_instance(n: usize, seed: u64, weights: RangeInclusive<i64>) -> Result<LopInstance> {
    if n < 2 {
        return Err(Error::Domain(format!("n >= 2 required, got {n}")));
    }
    if weights.is_empty() {
        return Err(Error::Domain("empty weight range".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut costs = vec![vec![0i64; n]; n];
    for (i, row) in costs.iter_mut().enumerate() {
        for (j, c) in row.iter_mut().enumerate() {
            if i != j {
                *c = rng.gen_range(weights.clone());
            }
        }
    }
    LopInstance::new(costs, format!("random-n{n}-s{seed}"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    pub(crate) fn tiny() -> LopInstance {
        parse_instance("3\n0 5 1\n0 0 4\n2 0 0\n").unwrap()
    }

    #[test]
    fn parses_three_element_example() {
        let inst = tiny();
        assert_eq!(inst.n, 3);
        assert_eq!(inst.cost(0, 1), 5);
        assert_eq!(inst.cost(0, 2), 1);
        assert_eq!(inst.cost(1, 2), 4);
        assert_eq!(inst.cost(2, 0), 2);
    }

    #[test]
    fn two_element_values() {
        let inst = parse_instance("# pair\n2\n0 7\n3 0\n").unwrap();
        let fwd = Permutation::from_one_based(&[1, 2]).unwrap();
        assert_eq!(permutation_value(&inst, &fwd), 7);
        assert_eq!(permutation_value(&inst, &fwd.reversed()), 3);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        assert!(matches!(parse_instance("1\n0\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(
            parse_instance("# c\n2\n0 x\n1 0\n"),
            Err(Error::Parse { line: 3, .. })
        ));
        assert!(matches!(
            parse_instance("2\n0 1 2\n1 0\n"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(parse_instance("two\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_instance("2\n0 1\n"), Err(Error::Parse { .. })));
        assert!(matches!(parse_instance(""), Err(Error::Parse { .. })));
    }

    #[test]
    fn diagonal_is_zeroed() {
        let inst = parse_instance("2\n9 1\n2 9\n").unwrap();
        assert_eq!(inst.costs, vec![vec![0, 1], vec![2, 0]]);
    }

    #[test]
    fn values_of_tiny_orderings() {
        let inst = tiny();
        let id = Permutation::from_one_based(&[1, 2, 3]).unwrap();
        let rev = Permutation::from_one_based(&[3, 2, 1]).unwrap();
        assert_eq!(permutation_value(&inst, &id), 10);
        assert_eq!(permutation_value(&inst, &rev), 2);
        // exhaustive: (1,2,3) is the unique maximum
        let all = [[1, 2, 3], [1, 3, 2], [2, 1, 3], [2, 3, 1], [3, 1, 2], [3, 2, 1]];
        let best = all
            .iter()
            .map(|o| permutation_value(&inst, &Permutation::from_one_based(o).unwrap()))
            .max()
            .unwrap();
        assert_eq!(best, 10);
    }

    #[test]
    fn random_is_deterministic() {
        let a = random_instance(5, 42, 0..=10).unwrap();
        let b = random_instance(5, 42, 0..=10).unwrap();
        assert_eq!(a, b);
        assert!(a.costs.iter().flatten().all(|&c| (0..=10).contains(&c)));
        let c = random_instance(2, 77, 3..=3).unwrap();
        assert_eq!(c.costs, vec![vec![0, 3], vec![3, 0]]);
        assert!(random_instance(1, 0, 0..=1).is_err());
        #[allow(clippy::reversed_empty_ranges)]
        let empty = random_instance(3, 0, 5..=4);
        assert!(empty.is_err());
    }

    #[test]
    fn rejects_non_permutations() {
        assert!(Permutation::new(vec![0, 0, 1]).is_err());
        assert!(Permutation::new(vec![0, 3, 1]).is_err());
        assert!(Permutation::from_one_based(&[0, 1]).is_err());
    }

    fn arb_perm(n: usize) -> impl Strategy<Value = Permutation> {
        Just((0..n).collect::<Vec<_>>())
            .prop_shuffle()
            .prop_map(|o| Permutation::new(o).unwrap())
    }

    proptest! {
        #[test]
        fn serialize_round_trip(n in 2usize..9, seed in any::<u64>()) {
            let inst = random_instance(n, seed, -50..=50).unwrap();
            prop_assert_eq!(parse_instance(&serialize_instance(&inst)).unwrap(), inst);
        }

        #[test]
        fn reversal_complements(seed in any::<u64>(), p in arb_perm(6)) {
            let inst = random_instance(6, seed, 0..=99).unwrap();
            prop_assert_eq!(
                permutation_value(&inst, &p) + permutation_value(&inst, &p.reversed()),
                inst.pair_total()
            );
        }
    }
}
