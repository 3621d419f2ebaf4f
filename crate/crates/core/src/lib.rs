//! Principal half-eigenvalues, spectral curves and Dirichlet solvers for
//! fully nonlinear Lane-Emden systems
//!
//! ```text
//! F1(x, u, Du, D^2 u) + lambda tau1(x) |v|^(q-1) v = f1   in Omega
//! F2(x, v, Dv, D^2 v) + mu     tau2(x) |u|^(p-1) u = f2   in Omega
//! u = v = 0                                               on the boundary
//! ```
//!
//! on intervals and rectangles, with `F1`, `F2` drawn from Pucci extremal
//! operators, Bellman (max/min) and Isaacs (inf-sup) families of linear
//! operators, plus gradient and zero-order terms.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop, clippy::large_enum_variant)]

pub mod error;
pub mod geometry;
pub mod cli;
pub mod curves;
pub mod dirichlet;
pub mod eigen;
pub mod linalg;
pub mod ode;
pub mod operators;
pub mod profile;
pub mod solve;

pub use error::{Error, Result};
