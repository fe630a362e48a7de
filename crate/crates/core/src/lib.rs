//! Linear-programming and smooth-minimization solvers with a harness for
//! measuring empirical convergence rates.
//!
//! LP: [`simplex`], [`ipm`], [`pdhg`] on [`lp::LpInstance`] (standard form),
//! with [`mps`] for file I/O. Smooth: [`first_order`] and [`second_order`] on
//! [`smooth::SmoothOracle`]. Every iterative solver returns a
//! [`trace::SolveTrace`]; [`bench`] runs grids of them and fits rates.

// `!(x > 0.0)` is used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop, clippy::type_complexity)]

pub mod bench;
pub mod cli;
pub mod first_order;
pub mod ipm;
pub mod linalg;
pub mod linesearch;
pub mod lp;
pub mod mps;
pub mod pdhg;
pub mod second_order;
pub mod simplex;
pub mod smooth;
pub mod trace;
