//! Numerical laboratory for the obstacle problem driven by order-one nonlocal
//! operators with critical drift,
//!
//! ```text
//! min{ (-L + b.grad) u , u - phi } = 0   in R^n,      u -> 0 at infinity,
//! ```
//!
//! where `L` is an integro-differential operator of order one,
//!
//! ```text
//! L u(x) = int ( (u(x+y)+u(x-y))/2 - u(x) ) mu(y/|y|) / |y|^{n+1} dy,
//! ```
//!
//! with an even angular density `0 < lambda <= mu <= Lambda` (the half-Laplacian
//! is `mu = c_{n,1/2}`). Because `L` and `b.grad` have the same order, the growth
//! of `u - phi` at a free boundary point depends on the direction of the normal:
//! it follows the exponent `1 + gamma(b.nu / chi(nu))` with
//! `gamma(t) = 1/2 + arctan(t)/pi` and `chi(e) = (pi/2) int |theta.e| mu`.
//!
//! The crate provides
//!
//! * closed-form exponent and kernel-functional computations ([`kernel`]),
//! * the one-dimensional power-profile identities with an independent
//!   principal-value quadrature oracle ([`profile`], [`quad`]),
//! * monotone finite-difference discretizations of `-L + b.grad` on uniform
//!   grids ([`grid`], [`operator`]),
//! * a projected-SOR complementarity solver with a-priori bound checks
//!   ([`obstacle`], [`solver`]),
//! * free-boundary extraction and growth-exponent fitting ([`free_boundary`]),
//! * barrier sign checks on model domains ([`barrier`]),
//! * config-driven experiment scenarios behind the `driftfb` CLI ([`config`],
//!   [`report`], [`scenario`]).

pub mod barrier;
pub mod config;
pub mod error;
pub mod free_boundary;
pub mod grid;
pub mod kernel;
pub mod obstacle;
pub mod operator;
pub mod profile;
pub mod quad;
pub mod report;
pub mod scenario;
pub mod solver;
mod svg;
pub mod util;

pub use error::{Error, Result};
pub use kernel::{AngularDensity, ExponentPrediction, KernelSpec};
