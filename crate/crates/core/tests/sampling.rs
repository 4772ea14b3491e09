mod common;

use common::{edge_walk, embedded_fence};
use lopcut::facets::{facet_cuts_for_vertex, reduce_denominator, separating_hyperplanes, DEFAULT_ORACLE_BUDGET};
use lopcut::numerics::rational::denominator_u64;
use lopcut::numerics::Rational;
use lopcut::oracle::validate_inequality;
use lopcut::relaxation::evaluate;
use lopcut::{adjacent_integer_vertices, build_bn, classify_vertex, embed_permutation, is_vertex};

fn max_den(x: &[Rational]) -> u64 {
    x.iter().map(|v| denominator_u64(v)).max().unwrap_or(1)
}

#[test]
fn walk_visits_only_vertices() {
    let sys = build_bn(7).unwrap();
    let mut seen = 0;
    edge_walk(&sys, embedded_fence(7), 1, 15, |y| {
        assert!(is_vertex(&sys, y).unwrap());
        seen += 1;
        false
    });
    assert!(seen > 0);
}

#[test]
fn dependent_chain_vertex_has_at_most_two_to_tau_planes() {
    let n = 7;
    let sys = build_bn(n).unwrap();
    let hit = edge_walk(&sys, embedded_fence(n), 7, 400, |y| {
        max_den(y) == 2 && classify_vertex(&sys, y).map_or(false, |p| p.tau >= 1)
    });
    let Some(x) = hit else {
        eprintln!("notice: no vertex with a dependent 3-chain reached at n=7, skipping");
        return;
    };
    let tau = classify_vertex(&sys, &x).unwrap().tau;
    let adj = adjacent_integer_vertices(&sys, &x).unwrap();
    let pts: Vec<Vec<Rational>> = adj.iter().map(|p| embed_permutation(p, n).unwrap()).collect();
    let planes = separating_hyperplanes(&pts, sys.dim(), &x).unwrap();
    assert!(!planes.is_empty());
    assert!(planes.len() <= 1 << tau, "{} planes for tau {tau}", planes.len());

    let bundle = facet_cuts_for_vertex(&sys, &x, DEFAULT_ORACLE_BUDGET).unwrap();
    for c in &bundle.cuts {
        assert!(validate_inequality(&c.cut, n).unwrap().valid);
        assert!(!c.cut.is_satisfied(&evaluate(&c.cut, &x).unwrap()));
    }
}

#[test]
fn denominator_three_vertex_reduces_to_halves() {
    for n in [7usize, 8] {
        let sys = build_bn(n).unwrap();
        let hit = edge_walk(&sys, embedded_fence(n), 3 + n as u64, 300, |y| max_den(y) >= 3);
        let Some(mut x) = hit else {
            eprintln!("notice: no vertex with denominator >= 3 reached at n={n}, skipping");
            continue;
        };
        for _ in 0..32 {
            if max_den(&x) <= 2 {
                break;
            }
            x = reduce_denominator(&sys, &x).unwrap();
        }
        assert!(max_den(&x) <= 2);
    }
}
