//! Derivatives of the sampling operator.
//!
//! The mixed derivative of the operator expands into a binomial sum of
//! lower-order operators with differentiated kernels:
//!
//! ```text
//! d^{p+q} K_{n,w} f = sum_{a<=p} sum_{b<=q} C(p,a) C(q,b) w^{a+|b|}
//!                     K_{n-(p+|q|-a-|b|), w}^{phi^(a), psi^(b)} d^{p+q-a-b} f
//! ```
//!
//! [`evaluate_derivative_operator`] computes the full sum in one fused cell
//! sweep; it agrees with central finite differences of the plain operator.
//! [`evaluate_reduced_derivative_operator`] keeps only the leading
//! `(a, b) = 0` term, i.e. the order `n - (p+|q|)` operator applied to
//! `d^{p+q} f` (equivalently, differentiating the Taylor payload while
//! leaving the kernels alone). For symmetric B-spline kernels the remaining
//! terms cancel the leading error order, so the full expansion converges
//! strictly faster; the reduced form is the natural object when only the
//! Taylor payload is differentiated, and it is what the bundled error-table
//! recipes measure.

use crate::field::Field;
use crate::grid::{GridSpec, Surface};
use crate::operator::{
    evaluate_grid_with_request, evaluate_operator, evaluate_with_request, Expansion, OperatorError,
    OperatorParams,
};

/// A mixed-derivative request `(p, q_1..q_d)` with `p + |q| <= n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DerivativeRequest {
    pub time_order: usize,
    pub space_orders: Vec<usize>,
}

impl DerivativeRequest {
    pub fn new(time_order: usize, space_orders: Vec<usize>) -> DerivativeRequest {
        DerivativeRequest {
            time_order,
            space_orders,
        }
    }

    pub fn total(&self) -> usize {
        self.time_order + self.space_orders.iter().sum::<usize>()
    }

    pub fn is_identity(&self) -> bool {
        self.total() == 0
    }
}

/// `d^{p+q} K_{n,w} f` at a point via the full expansion.
pub fn evaluate_derivative_operator(
    params: &OperatorParams,
    field: &Field,
    request: &DerivativeRequest,
    point: &[f64],
) -> Result<f64, OperatorError> {
    evaluate_with_request(
        params,
        field,
        request.time_order,
        &request.space_orders,
        Expansion::Full,
        point,
    )
}

/// The leading-term (reduced) form `K_{n-(p+|q|),w}^{phi,psi} d^{p+q} f`.
pub fn evaluate_reduced_derivative_operator(
    params: &OperatorParams,
    field: &Field,
    request: &DerivativeRequest,
    point: &[f64],
) -> Result<f64, OperatorError> {
    evaluate_with_request(
        params,
        field,
        request.time_order,
        &request.space_orders,
        Expansion::Leading,
        point,
    )
}

/// Full-expansion derivative surface over a grid.
pub fn evaluate_derivative_on_grid(
    params: &OperatorParams,
    field: &Field,
    request: &DerivativeRequest,
    grid: &GridSpec,
) -> Result<Surface, OperatorError> {
    evaluate_grid_with_request(
        params,
        field,
        request.time_order,
        &request.space_orders,
        Expansion::Full,
        grid,
    )
}

/// Reduced-form derivative surface over a grid.
pub fn evaluate_reduced_derivative_on_grid(
    params: &OperatorParams,
    field: &Field,
    request: &DerivativeRequest,
    grid: &GridSpec,
) -> Result<Surface, OperatorError> {
    evaluate_grid_with_request(
        params,
        field,
        request.time_order,
        &request.space_orders,
        Expansion::Leading,
        grid,
    )
}

/// Central finite differences of [`evaluate_operator`], iterated per axis;
/// the independent oracle for the expansion above.
pub fn finite_difference_operator_derivative(
    params: &OperatorParams,
    field: &Field,
    request: &DerivativeRequest,
    point: &[f64],
    step: f64,
) -> Result<f64, OperatorError> {
    if step.is_nan() || step <= 0.0 {
        return Err(OperatorError::Invalid(format!(
            "finite-difference step must be positive, got {step}"
        )));
    }
    if request.space_orders.len() != params.dim() {
        return Err(OperatorError::DimensionMismatch {
            expected: params.dim(),
            got: request.space_orders.len(),
        });
    }
    let mut orders = Vec::with_capacity(params.dim() + 1);
    orders.push(request.time_order);
    orders.extend_from_slice(&request.space_orders);
    fd_recurse(params, field, &orders, &mut point.to_vec(), 0, step)
}

fn fd_recurse(
    params: &OperatorParams,
    field: &Field,
    orders: &[usize],
    point: &mut Vec<f64>,
    axis: usize,
    step: f64,
) -> Result<f64, OperatorError> {
    if axis == orders.len() {
        return evaluate_operator(params, field, point);
    }
    if orders[axis] == 0 {
        return fd_recurse(params, field, orders, point, axis + 1, step);
    }
    // Apply one central first-difference on this axis, recursing on an
    // order-reduced request.
    let mut reduced = orders.to_vec();
    reduced[axis] -= 1;
    let original = point[axis];
    point[axis] = original + step;
    let hi = fd_recurse(params, field, &reduced, point, axis, step)?;
    point[axis] = original - step;
    let lo = fd_recurse(params, field, &reduced, point, axis, step)?;
    point[axis] = original;
    Ok((hi - lo) / (2.0 * step))
}
