//! Graph reading of LP vertices: integer pairs become arcs, fractional pairs
//! form the components, and the half-integral fence pattern is recognized.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::Permutation;
use crate::lp::is_vertex;
use crate::numerics::rational::{denominator_u64, RationalJson};
use crate::numerics::{half, int, Rational};
use crate::relaxation::{build_bn, ConstraintSystem, VarIndex};

/// Arc `i -> j` whenever `x_ij = 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArcGraph {
    pub n: usize,
    pub arcs: BTreeSet<(usize, usize)>,
    out: Vec<Vec<usize>>,
    inc: Vec<Vec<usize>>,
}

impl ArcGraph {
    pub fn new(n: usize, arcs: BTreeSet<(usize, usize)>) -> Self {
        let mut out = vec![Vec::new(); n];
        let mut inc = vec![Vec::new(); n];
        for &(a, b) in &arcs {
            out[a].push(b);
            inc[b].push(a);
        }
        ArcGraph { n, arcs, out, inc }
    }

    pub fn from_point(n: usize, x: &[Rational]) -> Self {
        let vars = VarIndex::new(n);
        let mut arcs = BTreeSet::new();
        for c in 0..vars.len() {
            let (i, j) = vars.pair(c);
            if x[c].is_one() {
                arcs.insert((i, j));
            } else if x[c].is_zero() {
                arcs.insert((j, i));
            }
        }
        Self::new(n, arcs)
    }

    pub fn successors(&self, v: usize) -> &[usize] {
        &self.out[v]
    }

    pub fn predecessors(&self, v: usize) -> &[usize] {
        &self.inc[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.out[v].len() + self.inc[v].len()
    }

    pub fn has_arc(&self, a: usize, b: usize) -> bool {
        self.arcs.contains(&(a, b))
    }
}

/// Nodes `i_1..i_m`, `j_1..j_m` with `x_{i_l j_q} = 0` for `l != q` and every
/// other pair among them at `1/2`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FenceStructure {
    pub m: usize,
    pub i_list: Vec<usize>,
    pub j_list: Vec<usize>,
}

impl FenceStructure {
    pub fn nodes(&self) -> BTreeSet<usize> {
        self.i_list.iter().chain(&self.j_list).copied().collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrientedChain {
    pub nodes: Vec<usize>,
    pub dependent: bool,
}

impl OrientedChain {
    pub fn length(&self) -> usize {
        self.nodes.len() - 1
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VertexProfile {
    pub n: usize,
    pub x: Vec<Rational>,
    pub arc_graph: ArcGraph,
    /// Fractional pairs `i < j` with their value `x_ij`.
    pub fractional_pairs: BTreeMap<(usize, usize), Rational>,
    pub denominators: BTreeSet<u64>,
    pub components: Vec<Vec<usize>>,
    pub fences: Vec<FenceStructure>,
    pub chains3: Vec<OrientedChain>,
    /// Number of dependent chains of length 3.
    pub tau: usize,
    pub simple: bool,
}

impl VertexProfile {
    pub fn is_integral(&self) -> bool {
        self.fractional_pairs.is_empty()
    }

    pub fn max_denominator(&self) -> u64 {
        self.denominators.iter().copied().max().unwrap_or(1)
    }

    pub fn value(&self, i: usize, j: usize) -> Rational {
        VarIndex::new(self.n).value(&self.x, i, j)
    }
}

/// Builds a profile without checking that `x` is a vertex.
pub fn profile_point(n: usize, x: &[Rational]) -> Result<VertexProfile> {
    let vars = VarIndex::new(n);
    if x.len() != vars.len() {
        return Err(Error::DimensionMismatch {
            expected: vars.len(),
            got: x.len(),
        });
    }
    let arc_graph = ArcGraph::from_point(n, x);
    let mut fractional_pairs = BTreeMap::new();
    let mut denominators = BTreeSet::new();
    for c in 0..vars.len() {
        if !x[c].denom().is_one() {
            fractional_pairs.insert(vars.pair(c), x[c].clone());
            denominators.insert(denominator_u64(&x[c]));
        }
    }
    let components = fractional_components(n, fractional_pairs.keys().copied());
    let mut profile = VertexProfile {
        n,
        x: x.to_vec(),
        arc_graph,
        fractional_pairs,
        denominators,
        simple: components.len() <= 1,
        components,
        fences: Vec::new(),
        chains3: Vec::new(),
        tau: 0,
    };
    profile.fences = detect_fences(&profile);
    profile.chains3 = find_chains(&profile, 3)?;
    profile.tau = profile.chains3.iter().filter(|c| c.dependent).count();
    Ok(profile)
}

pub fn classify_vertex(sys: &ConstraintSystem, x: &[Rational]) -> Result<VertexProfile> {
    if !is_vertex(sys, x)? {
        return Err(Error::Precondition("classification needs a vertex".into()));
    }
    profile_point(sys.n, x)
}

fn fractional_components(n: usize, edges: impl Iterator<Item = (usize, usize)>) -> Vec<Vec<usize>> {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], v: usize) -> usize {
        let mut r = v;
        while p[r] != r {
            r = p[r];
        }
        let mut v = v;
        while p[v] != r {
            let next = p[v];
            p[v] = r;
            v = next;
        }
        r
    }
    let mut touched = vec![false; n];
    for (a, b) in edges {
        touched[a] = true;
        touched[b] = true;
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent[ra.max(rb)] = ra.min(rb);
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for v in 0..n {
        if touched[v] {
            let r = find(&mut parent, v);
            groups.entry(r).or_default().push(v);
        }
    }
    groups.into_values().collect()
}

/// Every maximal fence with `m >= 3` in the half-integral part of `x`.
pub fn detect_fences(profile: &VertexProfile) -> Vec<FenceStructure> {
    let n = profile.n;
    let h = half();
    let zero = Rational::zero();
    let val = |a: usize, b: usize| profile.value(a, b);
    let candidates: Vec<(usize, usize)> = profile
        .fractional_pairs
        .iter()
        .filter(|(_, v)| **v == h)
        .flat_map(|(&(a, b), _)| [(a, b), (b, a)])
        .filter(|&(a, b)| {
            // a matched pair needs at least two crossed partners
            (0..n).filter(|&d| d != a && d != b && val(a, d) == zero).count() >= 2
        })
        .collect();
    let k = candidates.len();
    let compatible = |p: (usize, usize), q: (usize, usize)| {
        let (a, b) = p;
        let (c, d) = q;
        let distinct = a != c && a != d && b != c && b != d;
        distinct && val(a, d) == zero && val(c, b) == zero && val(a, c) == h && val(b, d) == h
    };
    let adj: Vec<Vec<bool>> = (0..k)
        .map(|s| (0..k).map(|t| s != t && compatible(candidates[s], candidates[t])).collect())
        .collect();

    let mut cliques: Vec<Vec<usize>> = Vec::new();
    bron_kerbosch(&adj, Vec::new(), (0..k).collect(), Vec::new(), &mut cliques);
    let mut found: BTreeSet<FenceStructure> = BTreeSet::new();
    for clique in cliques.into_iter().filter(|c| c.len() >= 3) {
        let mut pairs: Vec<(usize, usize)> = clique.iter().map(|&s| candidates[s]).collect();
        pairs.sort();
        found.insert(FenceStructure {
            m: pairs.len(),
            i_list: pairs.iter().map(|p| p.0).collect(),
            j_list: pairs.iter().map(|p| p.1).collect(),
        });
    }
    found.into_iter().collect()
}

fn bron_kerbosch(adj: &[Vec<bool>], r: Vec<usize>, mut p: Vec<usize>, mut x: Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if p.is_empty() && x.is_empty() {
        out.push(r);
        return;
    }
    let pivot = p.iter().chain(&x).copied().max_by_key(|&u| p.iter().filter(|&&v| adj[u][v]).count());
    let candidates: Vec<usize> = match pivot {
        Some(u) => p.iter().copied().filter(|&v| !adj[u][v]).collect(),
        None => p.clone(),
    };
    for v in candidates {
        let mut r2 = r.clone();
        r2.push(v);
        let p2 = p.iter().copied().filter(|&w| adj[v][w]).collect();
        let x2 = x.iter().copied().filter(|&w| adj[v][w]).collect();
        bron_kerbosch(adj, r2, p2, x2, out);
        p.retain(|&w| w != v);
        x.push(v);
    }
}

/// All directed paths with `length` arcs and distinct nodes, each flagged
/// dependent or independent.
///
/// A chain is independent iff every interior node touches no arcs besides
/// the chain's own two, and no chain node belongs to a fence's matched pair.
pub fn find_chains(profile: &VertexProfile, length: usize) -> Result<Vec<OrientedChain>> {
    if !(2..=4).contains(&length) {
        return Err(Error::Precondition(format!("chain length must be 2, 3 or 4, got {length}")));
    }
    let g = &profile.arc_graph;
    let fence_nodes: BTreeSet<usize> = profile.fences.iter().flat_map(|f| f.nodes()).collect();
    let mut chains = Vec::new();
    let mut path = Vec::with_capacity(length + 1);
    for start in 0..profile.n {
        path.clear();
        path.push(start);
        extend_paths(g, &mut path, length, &mut |nodes: &[usize]| {
            let interior_clean = nodes[1..nodes.len() - 1].iter().all(|&v| g.degree(v) == 2);
            let touches_fence = nodes.iter().any(|v| fence_nodes.contains(v));
            chains.push(OrientedChain {
                nodes: nodes.to_vec(),
                dependent: !(interior_clean && !touches_fence),
            });
        });
    }
    Ok(chains)
}

fn extend_paths(g: &ArcGraph, path: &mut Vec<usize>, length: usize, emit: &mut dyn FnMut(&[usize])) {
    if path.len() == length + 1 {
        emit(path);
        return;
    }
    let last = *path.last().unwrap();
    for &next in g.successors(last) {
        if path.contains(&next) {
            continue;
        }
        path.push(next);
        extend_paths(g, path, length, emit);
        path.pop();
    }
}

pub fn check_no_dependent_chain4(profile: &VertexProfile) -> bool {
    find_chains(profile, 4).map_or(false, |chains| chains.iter().all(|c| !c.dependent))
}

/// Point over `B_n` with `x_ij = value(i, j)` for `i < j`.
pub fn pair_point(n: usize, value: impl Fn(usize, usize) -> Rational) -> Vec<Rational> {
    let vars = VarIndex::new(n);
    (0..vars.len())
        .map(|c| {
            let (i, j) = vars.pair(c);
            value(i, j)
        })
        .collect()
}

/// The half-integral fence point on `2m` nodes with `i_l = l` and
/// `j_l = m + l`.
pub fn fence_point(m: usize) -> (Vec<Rational>, FenceStructure) {
    let fence = FenceStructure {
        m,
        i_list: (0..m).collect(),
        j_list: (m..2 * m).collect(),
    };
    (fence_point_in(2 * m, &fence, |_, _| half()), fence)
}

/// Embeds a fence into `n` nodes; pairs not inside the fence take `outside`.
pub fn fence_point_in(n: usize, fence: &FenceStructure, outside: impl Fn(usize, usize) -> Rational) -> Vec<Rational> {
    let mut role: BTreeMap<usize, (bool, usize)> = BTreeMap::new();
    for (l, &i) in fence.i_list.iter().enumerate() {
        role.insert(i, (true, l));
    }
    for (l, &j) in fence.j_list.iter().enumerate() {
        role.insert(j, (false, l));
    }
    pair_point(n, |a, b| match (role.get(&a), role.get(&b)) {
        (Some(&(true, l)), Some(&(false, q))) if l != q => int(0),
        (Some(&(false, q)), Some(&(true, l))) if l != q => int(1),
        (Some(_), Some(_)) => half(),
        _ => outside(a, b),
    })
}

/// Restriction of `x` to the induced subproblem on `nodes` (kept in the
/// given order).
pub fn restrict(n: usize, x: &[Rational], nodes: &[usize]) -> Vec<Rational> {
    let vars = VarIndex::new(n);
    pair_point(nodes.len(), |a, b| vars.value(x, nodes[a], nodes[b]))
}

/// Replicates `node` `copies` times. `copy_order` ranks the original
/// (element 0) and its copies (elements `1..=copies`, which become nodes
/// `n..n + copies`).
pub fn lift_duplicate(
    sys: &ConstraintSystem,
    x: &[Rational],
    node: usize,
    copies: usize,
    copy_order: &Permutation,
) -> Result<Vec<Rational>> {
    let n = sys.n;
    if node >= n {
        return Err(Error::Structural(format!("node {node} out of range")));
    }
    if !is_vertex(sys, x)? {
        return Err(Error::Structural("lift needs a vertex".into()));
    }
    if copy_order.len() != copies + 1 {
        return Err(Error::Structural(format!(
            "copy order must rank {} elements, got {}",
            copies + 1,
            copy_order.len()
        )));
    }
    let g = ArcGraph::from_point(n, x);
    let source = g.predecessors(node).is_empty();
    let sink = g.successors(node).is_empty();
    if !source && !sink {
        return Err(Error::Structural(format!(
            "node {node} is neither a source nor a sink of all its arcs"
        )));
    }
    if copies == 0 {
        return Ok(x.to_vec());
    }
    let vars = VarIndex::new(n);
    let rank = copy_order.positions();
    let n2 = n + copies;
    // original index behind each lifted node, and its rank among the copies
    let origin = |v: usize| if v < n { v } else { node };
    let copy_rank = |v: usize| {
        if v == node {
            Some(rank[0])
        } else if v >= n {
            Some(rank[v - n + 1])
        } else {
            None
        }
    };
    let lifted = pair_point(n2, |a, b| match (copy_rank(a), copy_rank(b)) {
        (Some(ra), Some(rb)) => int((ra < rb) as i64),
        _ => vars.value(x, origin(a), origin(b)),
    });
    let big = build_bn(n2)?;
    if !is_vertex(&big, &lifted)? {
        return Err(Error::Invariant(format!(
            "duplicating node {node} {copies} time(s) does not give a vertex of B_{n2}"
        )));
    }
    Ok(lifted)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProfileJson {
    pub n: usize,
    pub nodes: Vec<usize>,
    /// The point itself in column order `x_12, x_13, ..., x_(n-1)n`.
    pub x: Vec<RationalJson>,
    pub arcs: Vec<(usize, usize)>,
    pub fractional_pairs: Vec<FractionalPairJson>,
    pub denominators: Vec<u64>,
    pub components: Vec<Vec<usize>>,
    pub simple: bool,
    pub fences: Vec<FenceJson>,
    pub chains: Vec<ChainJson>,
    pub tau: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FractionalPairJson {
    pub i: usize,
    pub j: usize,
    pub value: RationalJson,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FenceJson {
    pub m: usize,
    pub i: Vec<usize>,
    pub j: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChainJson {
    pub nodes: Vec<usize>,
    pub length: usize,
    pub dependent: bool,
}

/// One-based JSON view of a profile.
impl From<&VertexProfile> for ProfileJson {
    fn from(p: &VertexProfile) -> Self {
        let one = |v: &[usize]| v.iter().map(|x| x + 1).collect::<Vec<_>>();
        ProfileJson {
            n: p.n,
            nodes: (1..=p.n).collect(),
            x: p.x.iter().map(RationalJson::from).collect(),
            arcs: p.arc_graph.arcs.iter().map(|&(a, b)| (a + 1, b + 1)).collect(),
            fractional_pairs: p
                .fractional_pairs
                .iter()
                .map(|(&(i, j), v)| FractionalPairJson {
                    i: i + 1,
                    j: j + 1,
                    value: v.into(),
                })
                .collect(),
            denominators: p.denominators.iter().copied().collect(),
            components: p.components.iter().map(|c| one(c)).collect(),
            simple: p.simple,
            fences: p
                .fences
                .iter()
                .map(|f| FenceJson {
                    m: f.m,
                    i: one(&f.i_list),
                    j: one(&f.j_list),
                })
                .collect(),
            chains: p
                .chains3
                .iter()
                .map(|c| ChainJson {
                    nodes: one(&c.nodes),
                    length: c.length(),
                    dependent: c.dependent,
                })
                .collect(),
            tau: p.tau,
        }
    }
}
