//! Hermite-type sampling Kantorovich operators on `R x R^d`.
//!
//! The operator `K_{n,w}^{phi,psi}` reconstructs a differentiable function
//! from local cell averages of its Taylor payload of order `n`, weighted by
//! translated kernels at sampling rate `w`. This crate provides:
//!
//! - cardinal B-spline kernels with exact piecewise-polynomial derivatives
//!   ([`kernel`]) and their discrete algebraic/absolute moments ([`moments`]);
//! - a tiny expression language with symbolic differentiation supplying
//!   target fields and their exact partials ([`expr`], [`field`]);
//! - pointwise and grid evaluation of the operator ([`operator`]) and of its
//!   mixed derivatives via the binomial kernel-derivative expansion
//!   ([`simultaneous`]);
//! - sup-norm error measurement, modulus-of-continuity estimates,
//!   closed-form error bounds, Voronovskaja asymptotic constants, and
//!   convergence-rate sweeps ([`analysis`]).
//!
//! Everything is a pure function of immutable inputs; grid sweeps run nodes
//! in parallel with schedule-independent, bitwise-deterministic results.

// Guards like `if z == 0.0` are the supported form of float matching, and
// the index loops mirror the multi-index ranges of the formulas they
// implement.
#![allow(clippy::redundant_guards, clippy::needless_range_loop)]

pub mod analysis;
pub mod expr;
pub mod field;
pub mod grid;
pub mod kernel;
pub mod moments;
pub mod operator;
pub mod quadrature;
pub mod simultaneous;
mod util;

pub use analysis::{
    bound_thm2ii, bound_thm2iii, convergence_sweep, derivative_sup_norm, fit_log_slope,
    modulus_of_continuity, sup_error_surfaces, sup_error_vs_field, voronovskaja_constant,
    voronovskaja_constant_derivative, AnalysisError, ErrorReport, ModulusSettings, SweepMode,
    SweepOptions, SweepOutcome,
};
pub use expr::{parse, Expr, ParseError};
pub use field::{Field, FieldError, Program};
pub use grid::{AxisSpec, GridError, GridSpec, Surface};
pub use kernel::{
    bspline_derivative, bspline_eval, verify_kernel_conditions, Kernel, KernelConditionReport,
    KernelError,
};
pub use moments::{absolute_moment, algebraic_moment, AlgebraicMomentStats, MomentTable};
pub use operator::{
    active_indices, cell_integral, evaluate_on_grid, evaluate_operator, Cell, OperatorError,
    OperatorParams,
};
pub use quadrature::QuadratureRule;
pub use simultaneous::{
    evaluate_derivative_on_grid, evaluate_derivative_operator, evaluate_reduced_derivative_on_grid,
    evaluate_reduced_derivative_operator, finite_difference_operator_derivative, DerivativeRequest,
};
