//! Dual variational solver for nonlinear Helmholtz equations
//! `-Lap u - u = Q_lambda(x) |u|^{p-2} u` with sign-changing weights `Q`.
//!
//! The pipeline works on the integral form `u = R(Q_lambda |u|^{p-2} u)`:
//! it builds the real Helmholtz resolvent `R` as an FFT convolution, forms
//! the weighted Birman-Schwinger operator `K`, computes the method constants
//! `alpha`, `beta` and the threshold `lambda_0 = (2 beta / alpha)^p`,
//! eliminates the defocusing dual variable by an inner concave maximization,
//! locates mountain-pass critical points of the reduced functional, and
//! reconstructs and verifies the primal solution `u`.
//!
//! See the `examples/` directory for one runnable walk-through per stage and
//! the `nlhsolve` binary for the end-to-end pipeline.

mod dd;
mod rng;
mod fft;
mod quadrature;

pub mod birman_schwinger;
pub mod functional;
pub mod error;
pub mod grid;
pub mod resolvent;
pub mod special;

pub use birman_schwinger::{
    check_negative_positivity, compute_alpha, compute_beta, compute_constants, lambda0,
    MethodConstants, PositivityReport, SearchReport, WeightedOperator,
};
pub use error::{Error, Result};
pub use functional::{eval_j, eval_reduced, grad_phi, grad_psi, grad_reduced, solve_z, DualPair, InnerSolveReport};
pub use grid::{masks_from_weight, Grid, ScalarField, SupportMask};
pub use resolvent::ResolventOperator;
pub use special::{bessel_y, first_positive_zero_y, psi_kernel, BesselOrder};
