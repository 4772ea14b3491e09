//! Exact rational arithmetic and the linear-algebra kernels built on it.

pub mod matrix;
pub mod rational;

pub use matrix::{
    affine_hull, determinant, dot, integer_rank, null_space, rank, solve_linear, AffineHull,
    LinearEquality, RationalMatrix, RowEchelon,
};
pub use rational::{format_rational, frac, half, int, parse_rational, Rational};
