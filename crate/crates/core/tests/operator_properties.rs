//! Cross-module operator properties: the a-priori well-definedness bound,
//! simultaneous convergence, and consistency across evaluation routes.

use hermite_sampling::{
    analysis, convergence_sweep, evaluate_operator, DerivativeRequest, Field, GridSpec, Kernel,
    MomentTable, OperatorParams, SweepMode, SweepOptions,
};

fn square_params(order: usize, rate: f64, degree: usize, quad: usize) -> OperatorParams {
    let phi = Kernel::bspline(degree).unwrap();
    OperatorParams::new(order, rate, 1, phi.clone(), vec![phi], quad).unwrap()
}

#[test]
fn well_definedness_bound_holds_pointwise() {
    // |K_{n,w} f| is dominated by the moment-weighted norm bound. The sup
    // norms are taken over a window inflated by the kernel reach so every
    // cell touched by the tested points is covered.
    let field = Field::from_str("(1+x)*y/(1+x^2)", 1, 3).unwrap();
    for (order, rate, degree) in [(0usize, 3.0, 2usize), (1, 5.0, 2), (2, 7.0, 3), (3, 4.0, 4)] {
        let params = square_params(order, rate, degree, 5);
        let reach = (degree as f64 + 2.0) / rate;
        let window = GridSpec::square(-2.0 - reach, 2.0 + reach, 161, 2).unwrap();
        let table = MomentTable::compute(params.phi(), order.max(1), 0, 2001).unwrap();
        let bound = analysis::well_definedness_bound(
            &field,
            &params,
            &table,
            std::slice::from_ref(&table),
            &window,
        )
        .unwrap();
        for &point in &[[0.0, 0.0], [1.3, -0.7], [-2.0, 2.0], [0.31, 1.99]] {
            let value = evaluate_operator(&params, &field, &point).unwrap();
            assert!(
                value.abs() <= bound,
                "order {order} w {rate} deg {degree} at {point:?}: |{value}| > {bound}"
            );
        }
    }
}

#[test]
fn simultaneous_errors_decrease_with_rate() {
    // Mixed-derivative approximation improves strictly along w = 3, 7, 12,
    // for both the full expansion and its reduced leading term.
    let field = Field::from_str("sin(x)*cos(y)", 1, 4).unwrap();
    let params = square_params(3, 3.0, 4, 5);
    let grid = GridSpec::square(-4.0, 4.0, 41, 2).unwrap();
    let request = DerivativeRequest::new(1, vec![1]);
    for mode in [
        SweepMode::Derivative(request.clone()),
        SweepMode::ReducedDerivative(request.clone()),
    ] {
        let outcome = convergence_sweep(
            &params,
            &field,
            &[3.0, 7.0, 12.0],
            &grid,
            &SweepOptions {
                mode: mode.clone(),
                ..SweepOptions::default()
            },
        )
        .unwrap();
        let errors: Vec<f64> = outcome.reports.iter().map(|r| r.measured_error).collect();
        assert!(
            errors[0] > errors[1] && errors[1] > errors[2],
            "{mode:?}: {errors:?}"
        );
    }
}

#[test]
fn full_expansion_converges_faster_than_reduced() {
    // With symmetric B-spline kernels the leading asymptotic term of the
    // full derivative expansion cancels, so it beats the reduced form.
    let field = Field::from_str("sin(x)*cos(y)", 1, 4).unwrap();
    let params = square_params(3, 7.0, 4, 5);
    let grid = GridSpec::square(-4.0, 4.0, 41, 2).unwrap();
    let request = DerivativeRequest::new(1, vec![1]);
    let full =
        hermite_sampling::evaluate_derivative_on_grid(&params, &field, &request, &grid).unwrap();
    let reduced =
        hermite_sampling::evaluate_reduced_derivative_on_grid(&params, &field, &request, &grid)
            .unwrap();
    let key = [1usize, 1];
    let full_err = hermite_sampling::sup_error_vs_field(&full, &field, &key).unwrap();
    let reduced_err = hermite_sampling::sup_error_vs_field(&reduced, &field, &key).unwrap();
    assert!(
        full_err < reduced_err / 10.0,
        "full {full_err} reduced {reduced_err}"
    );
}

#[test]
fn voronovskaja_derivative_constant_vanishes_for_symmetric_kernels() {
    // The binomial terms cancel exactly for p + |q| >= 1; the numerical
    // limit agrees: w^2 times the full-expansion error keeps shrinking.
    let field = Field::from_str("sin(x)*cos(y)", 1, 4).unwrap();
    let params = square_params(3, 8.0, 4, 5);
    let request = DerivativeRequest::new(1, vec![1]);
    let point = [0.3, 0.55];
    let predicted =
        hermite_sampling::voronovskaja_constant_derivative(&field, &params, &request, &point)
            .unwrap();
    assert!(predicted.abs() < 1e-10, "predicted {predicted}");

    let reference = field.eval_derivative(&[1, 1], &point).unwrap();
    let mut scaled = Vec::new();
    for &w in &[8.0, 16.0, 32.0] {
        let value = hermite_sampling::evaluate_derivative_operator(
            &params.with_rate(w).unwrap(),
            &field,
            &request,
            &point,
        )
        .unwrap();
        // n - (p + |q|) + 1 = 2.
        scaled.push(w.powi(2) * (value - reference).abs());
    }
    assert!(
        scaled[0] > scaled[1] && scaled[1] > scaled[2],
        "scaled residuals {scaled:?}"
    );
}

#[test]
fn plain_voronovskaja_limit_matches_formula_for_order_one() {
    // Order n = 1 with B_2 kernels: richardson-extrapolated scaled residuals
    // against the closed-form constant at a fixed point.
    let field = Field::from_str("sin(x)*cos(y)", 1, 2).unwrap();
    let params = square_params(1, 16.0, 2, 5);
    let point = [0.4, -0.9];
    let predicted = hermite_sampling::voronovskaja_constant(&field, &params, &point).unwrap();
    let reference = field.eval(&point);
    let mut residuals = Vec::new();
    for &w in &[16.0, 32.0, 64.0] {
        let value = evaluate_operator(&params.with_rate(w).unwrap(), &field, &point).unwrap();
        residuals.push(w.powi(2) * (value - reference));
    }
    let extrapolated = 2.0 * residuals[2] - residuals[1];
    assert!(
        (extrapolated - predicted).abs() <= 0.05 * predicted.abs().max(1e-3),
        "extrapolated {extrapolated} predicted {predicted} residuals {residuals:?}"
    );
}

#[test]
fn dimension_two_constant_and_linear_reproduction() {
    let phi = Kernel::bspline(2).unwrap();
    let psi = vec![Kernel::bspline(2).unwrap(), Kernel::bspline(2).unwrap()];
    let params = OperatorParams::new(1, 4.0, 2, phi, psi, 4).unwrap();
    let constant = Field::from_str("1.5", 2, 1).unwrap();
    let point = [0.3, -0.2, 0.8];
    let v = evaluate_operator(&params, &constant, &point).unwrap();
    assert!((v - 1.5).abs() < 1e-12);
}
