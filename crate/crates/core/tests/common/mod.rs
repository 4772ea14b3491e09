#![allow(dead_code)]

use lopcut::facets::walk_edges;
use lopcut::numerics::{int, Rational};
use lopcut::vertex::{fence_point_in, FenceStructure};
use lopcut::ConstraintSystem;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn run_cli(args: &[&str]) -> (i32, String, String) {
    let argv: Vec<String> = std::iter::once("lopcut").chain(args.iter().copied()).map(String::from).collect();
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = lopcut::cli::run(&argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

/// The m=3 fence on nodes 0..6 with node 6.. placed after everything.
pub fn embedded_fence(n: usize) -> Vec<Rational> {
    let fence = FenceStructure {
        m: 3,
        i_list: vec![0, 1, 2],
        j_list: vec![3, 4, 5],
    };
    fence_point_in(n, &fence, |a, b| int((a < b) as i64))
}

/// Seeded random walk along polytope edges, preferring fractional endpoints.
/// Every visited vertex is handed to `visit`; the walk stops when it returns true.
pub fn edge_walk(
    sys: &ConstraintSystem,
    start: Vec<Rational>,
    seed: u64,
    steps: usize,
    mut visit: impl FnMut(&[Rational]) -> bool,
) -> Option<Vec<Rational>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = start;
    for _ in 0..steps {
        let ends: Vec<Vec<Rational>> = walk_edges(sys, &x)
            .unwrap()
            .into_iter()
            .filter_map(|w| w.endpoint)
            .collect();
        let fractional: Vec<&Vec<Rational>> = ends.iter().filter(|y| y.iter().any(|v| !v.is_integer())).collect();
        let next = if fractional.is_empty() {
            ends.choose(&mut rng)
        } else {
            fractional.choose(&mut rng).copied()
        };
        let Some(next) = next else { return None };
        x = next.clone();
        if visit(&x) {
            return Some(x);
        }
    }
    None
}
