//! Exact-arithmetic cutting planes for the linear ordering problem.
//!
//! Orderings of `n` items are 0/1 points `x_ij` (`i < j`, 1 when `i`
//! precedes `j`). Their convex hull is relaxed by the triangle system
//! `B_n`, whose fractional vertices are analysed and cut off with exactly
//! verified inequalities.

pub mod cli;
pub mod error;
pub mod facets;
pub mod instance;
pub mod lp;
pub mod numerics;
pub mod oracle;
pub mod relaxation;
pub mod solver;
pub mod vertex;

pub use error::{Error, Result};
pub use facets::{
    adjacent_integer_vertices, facet_cuts_for_vertex, fence_inequality, find_standard_matrices, hyperplanes_through,
    reduce_denominator, CutBundle, Provenance, StandardMatrixWitness, TripleExpression,
};
pub use instance::{parse_instance, permutation_value, random_instance, serialize_instance, LopInstance, Permutation};
pub use lp::{adjacent_vertex_test, is_vertex, lp_solve, BasicSolution, Direction};
pub use numerics::{Rational, RationalMatrix};
pub use oracle::{brute_force_opt, facet_dimension, validate_inequality, OracleResult, Validation};
pub use relaxation::{build_bn, embed_permutation, ConstraintSystem, LinearInequality, VarIndex};
pub use solver::{decode_integer_vertex, solve, SolveReport, SolveStatus, SolverConfig};
pub use vertex::{check_no_dependent_chain4, classify_vertex, fence_point, find_chains, VertexProfile};
