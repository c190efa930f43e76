//! Numerical toolkit for semilinear elliptic problems with generalized
//! Wentzell boundary conditions
//!
//! ```text
//! -Δu + α₁(u) = f                                 in Ω
//! b ∂u/∂n + c u - q b Δ_Γ u + α₂(u) = g           on Γ
//! ```
//!
//! posed in the product space `L²(Ω, dx) ⊕ L²(Γ, dS/b)`. The crate meshes
//! intervals and axis-aligned rectangles, assembles the symmetric bilinear
//! form of the linear Wentzell Laplacian, computes its ground state, decides
//! solvability of the nonlinear problem through range-of-α certificates and
//! finds weak solutions by minimizing the associated convex energy.
//!
//! Module map:
//!
//! - [`geometry`]: meshes, product vectors, the weighted inner product.
//! - [`nonlinearity`]: monotone nonlinearities, primitives, Young functions.
//! - [`operator`]: stiffness/mass assembly and weak residuals.
//! - [`spectral`]: smallest generalized eigenpairs and Fredholm projection.
//! - [`solvability`]: the aggregate-load and ground-state certificates.
//! - [`solver`]: damped Newton / gradient minimization of the energy.
//! - [`halfspace`]: constant-coefficient half-space symbol and ODE solves.
//! - [`config`], [`expr`], [`cli`]: JSON configs, the coefficient
//!   expression language and the batch front-end.

// `!(x > 0.0)` style guards also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod error;
pub mod expr;
pub mod geometry;
pub mod halfspace;
pub mod nonlinearity;
pub mod operator;
pub mod solvability;
pub mod solver;
pub mod sparse;
pub mod spectral;

pub use error::{Error, Result};
pub use geometry::{build_interval_mesh, build_rectangle_mesh, BoundaryPoint, Measure, Mesh, ProductVector};
pub use nonlinearity::{Family, Nonlinearity, RangeInterval};
pub use operator::{assemble, OperatorMatrices, WentzellProblem};
pub use solvability::{SolvabilityReport, Verdict};
pub use solver::{SolveOptions, SolveOutcome, SolveStatus};
pub use spectral::EigenResult;
