//! Centered cardinal B-spline kernels.
//!
//! `B_0` is the indicator of `[-1/2, 1/2)` and `B_n` is the n-fold
//! self-convolution, supported on `[-(n+1)/2, (n+1)/2]`. Each kernel is
//! stored as exact per-interval polynomials (derived once through the
//! convolution recurrence in rational arithmetic), so evaluation is a piece
//! lookup plus Horner. Derivative levels are the exact piecewise derivatives;
//! values at knots are the right-hand limits.

use num_rational::Ratio;
use num_traits::ToPrimitive;
use thiserror::Error;

/// Largest supported B-spline degree. The rational coefficient construction
/// stays far away from i128 overflow up to this degree.
pub const MAX_DEGREE: usize = 10;

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum KernelError {
    #[error(
        "derivative order {requested} exceeds the smoothness limit of B_{degree} (max {degree})"
    )]
    DerivativeUnavailable { degree: usize, requested: usize },

    #[error("B-spline degree {0} exceeds the supported maximum {MAX_DEGREE}")]
    DegreeTooLarge(usize),
}

type Rat = Ratio<i128>;

/// A centered cardinal B-spline of a given degree, with all derivative
/// levels up to the degree available.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    degree: usize,
    /// `levels[q][piece]` holds ascending coefficients of the local
    /// polynomial in `t = x - (knot0 + piece)`, valid on `t ∈ [0, 1)`.
    levels: Vec<Vec<Vec<f64>>>,
    knot0: f64,
}

fn rational_pieces(degree: usize) -> Vec<Vec<Rat>> {
    // B_0: the single piece `1` on [-1/2, 1/2).
    let mut pieces: Vec<Vec<Rat>> = vec![vec![Rat::from_integer(1)]];
    for _ in 1..=degree {
        // Antiderivative of the current pieces, continuous, zero at the left
        // end of the support.
        let mut anti: Vec<Vec<Rat>> = Vec::with_capacity(pieces.len());
        let mut running = Rat::from_integer(0);
        for piece in &pieces {
            let mut p = vec![running];
            for (r, c) in piece.iter().enumerate() {
                p.push(c / Rat::from_integer(r as i128 + 1));
            }
            running = p.iter().sum();
            anti.push(p);
        }
        let total = running;
        // B_{v}(x) = P(x + 1/2) - P(x - 1/2); in the local coordinate of
        // piece s both shifts land on pieces s and s-1 of P with the same t.
        let n_pieces = pieces.len() + 1;
        let mut next: Vec<Vec<Rat>> = Vec::with_capacity(n_pieces);
        for s in 0..n_pieces {
            let hi = if s < anti.len() {
                anti[s].clone()
            } else {
                vec![total]
            };
            let lo = if s == 0 { vec![] } else { anti[s - 1].clone() };
            let len = hi.len().max(lo.len());
            let mut diff = vec![Rat::from_integer(0); len];
            for (r, c) in hi.into_iter().enumerate() {
                diff[r] += c;
            }
            for (r, c) in lo.into_iter().enumerate() {
                diff[r] -= c;
            }
            next.push(diff);
        }
        pieces = next;
    }
    pieces
}

fn differentiate_pieces(pieces: &[Vec<Rat>]) -> Vec<Vec<Rat>> {
    pieces
        .iter()
        .map(|p| {
            if p.len() <= 1 {
                vec![Rat::from_integer(0)]
            } else {
                p.iter()
                    .enumerate()
                    .skip(1)
                    .map(|(r, c)| c * Rat::from_integer(r as i128))
                    .collect()
            }
        })
        .collect()
}

fn to_f64(pieces: &[Vec<Rat>]) -> Vec<Vec<f64>> {
    pieces
        .iter()
        .map(|p| {
            p.iter()
                .map(|c| c.to_f64().expect("coefficient fits f64"))
                .collect()
        })
        .collect()
}

impl Kernel {
    /// Builds the cardinal B-spline of the given degree.
    pub fn bspline(degree: usize) -> Result<Self, KernelError> {
        if degree > MAX_DEGREE {
            return Err(KernelError::DegreeTooLarge(degree));
        }
        let mut rational = rational_pieces(degree);
        let mut levels = Vec::with_capacity(degree + 1);
        levels.push(to_f64(&rational));
        for _ in 1..=degree {
            rational = differentiate_pieces(&rational);
            levels.push(to_f64(&rational));
        }
        Ok(Kernel {
            degree,
            levels,
            knot0: -((degree as f64 + 1.0) / 2.0),
        })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Highest classical derivative order this kernel can supply.
    pub fn max_derivative(&self) -> usize {
        self.degree
    }

    /// Half-width of the support interval, `(degree + 1) / 2`.
    pub fn support_radius(&self) -> f64 {
        (self.degree as f64 + 1.0) / 2.0
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.eval_level(0, x)
    }

    /// Value of the q-th derivative at `x` (right-hand limit at knots).
    pub fn eval_derivative(&self, q: usize, x: f64) -> Result<f64, KernelError> {
        if q > self.degree {
            return Err(KernelError::DerivativeUnavailable {
                degree: self.degree,
                requested: q,
            });
        }
        Ok(self.eval_level(q, x))
    }

    /// Fast path used by the operator loops; `q` must already be validated.
    pub(crate) fn eval_level(&self, q: usize, x: f64) -> f64 {
        let offset = x - self.knot0;
        if offset < 0.0 || offset >= (self.degree + 1) as f64 {
            return 0.0;
        }
        let piece = offset.floor() as usize;
        if piece > self.degree {
            return 0.0;
        }
        let t = x - (self.knot0 + piece as f64);
        let coeffs = &self.levels[q][piece];
        let mut acc = *coeffs.last().unwrap();
        for &c in coeffs.iter().rev().skip(1) {
            acc = acc * t + c;
        }
        // The kernel itself is nonnegative; clamp the sub-ulp Horner noise
        // that can turn up negative right at the support edge.
        if q == 0 && acc < 0.0 {
            return 0.0;
        }
        acc
    }
}

/// Value of the centered cardinal B-spline of the given degree at `x`.
pub fn bspline_eval(degree: usize, x: f64) -> Result<f64, KernelError> {
    Ok(Kernel::bspline(degree)?.eval(x))
}

/// Value of the q-th derivative of `B_degree` at `x`.
pub fn bspline_derivative(degree: usize, q: usize, x: f64) -> Result<f64, KernelError> {
    Kernel::bspline(degree)?.eval_derivative(q, x)
}

/// Outcome of checking the two kernel conditions at a given order.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelConditionReport {
    /// Worst deviation of `sum_k chi(u - k)` from 1 over the u-grid.
    pub max_partition_deviation: f64,
    /// Whether every absolute moment up to the requested order came out finite.
    pub moments_finite: bool,
    pub order: usize,
    pub grid_points: usize,
    pub passed: bool,
}

pub const DEFAULT_CONDITION_GRID: usize = 10_001;

/// Checks condition (i) (partition of unity) on a dense `[0, 1]` grid and
/// condition (ii) by confirming the absolute moments through `order` are
/// finite. Compact support makes the sup over `[0, 1]` exhaustive: the
/// summand is 1-periodic in `u`.
pub fn verify_kernel_conditions(
    kernel: &Kernel,
    order: usize,
    tolerance: f64,
) -> KernelConditionReport {
    let grid_points = DEFAULT_CONDITION_GRID;
    let mut max_dev: f64 = 0.0;
    let mut moments_finite = true;
    let radius = kernel.support_radius();
    let k_min = (-radius).floor() as i64 - 1;
    let k_max = (1.0 + radius).ceil() as i64 + 1;
    for i in 0..grid_points {
        let u = i as f64 / (grid_points - 1) as f64;
        let mut sum = 0.0;
        for k in k_min..=k_max {
            sum += kernel.eval(u - k as f64);
        }
        max_dev = max_dev.max((sum - 1.0).abs());
        for alpha in 0..=order {
            let mut m = 0.0;
            for k in k_min..=k_max {
                m += (u - k as f64).abs().powi(alpha as i32) * kernel.eval(u - k as f64).abs();
            }
            if !m.is_finite() {
                moments_finite = false;
            }
        }
    }
    KernelConditionReport {
        max_partition_deviation: max_dev,
        moments_finite,
        order,
        grid_points,
        passed: max_dev < tolerance && moments_finite,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Independent oracle: truncated-power form
    /// `B_n(x) = (1/n!) sum_i (-1)^i C(n+1, i) (x + (n+1)/2 - i)_+^n`.
    fn truncated_power_oracle(degree: usize, x: f64) -> f64 {
        if degree == 0 {
            return if (-0.5..0.5).contains(&x) { 1.0 } else { 0.0 };
        }
        let mut sum = 0.0;
        let mut binom = 1.0f64;
        for i in 0..=(degree + 1) {
            let arg = x + (degree as f64 + 1.0) / 2.0 - i as f64;
            if arg > 0.0 {
                let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                sum += sign * binom * arg.powi(degree as i32);
            }
            binom = binom * (degree + 1 - i) as f64 / (i + 1) as f64;
        }
        let fact: f64 = (1..=degree).map(|k| k as f64).product();
        sum / fact
    }

    #[test]
    fn frozen_values() {
        assert_eq!(bspline_eval(0, 0.0).unwrap(), 1.0);
        assert_eq!(bspline_eval(1, 0.0).unwrap(), 1.0);
        assert_eq!(bspline_eval(2, 0.0).unwrap(), 0.75);
        assert_eq!(bspline_eval(2, 1.5).unwrap(), 0.0);
        assert_eq!(bspline_eval(2, -1.5).unwrap(), 0.0);
        // B_1 is the hat function.
        assert_eq!(bspline_eval(1, 0.5).unwrap(), 0.5);
        assert_eq!(bspline_eval(1, -0.25).unwrap(), 0.75);
        // B_2 off-center pieces.
        assert_eq!(bspline_eval(2, 0.5).unwrap(), 0.5);
        assert_eq!(bspline_eval(2, 1.0).unwrap(), 0.125);
    }

    #[test]
    fn matches_truncated_power_oracle() {
        for degree in 0..=6 {
            let kernel = Kernel::bspline(degree).unwrap();
            for i in 0..400 {
                // Irrational-step sweep avoids landing on knots.
                let x = -4.0 + i as f64 * 0.02003117;
                let expected = truncated_power_oracle(degree, x);
                let got = kernel.eval(x);
                assert!(
                    (got - expected).abs() < 1e-12,
                    "degree {degree} at {x}: {got} vs oracle {expected}"
                );
            }
        }
    }

    #[test]
    fn derivative_of_even_function_at_zero() {
        assert_eq!(bspline_derivative(2, 1, 0.0).unwrap(), 0.0);
        assert_eq!(bspline_derivative(4, 1, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn first_derivative_frozen_by_finite_difference_oracle() {
        // Central difference of bspline_eval with step 1e-6 at x = 0.5 gives
        // -0.999999...; the exact value is B_1(1) - B_1(0) = -1.
        let h = 1e-6;
        let fd =
            (bspline_eval(2, 0.5 + h).unwrap() - bspline_eval(2, 0.5 - h).unwrap()) / (2.0 * h);
        assert!((fd + 1.0).abs() < 1e-5, "fd oracle {fd}");
        assert_eq!(bspline_derivative(2, 1, 0.5).unwrap(), -1.0);
    }

    #[test]
    fn second_derivative_matches_central_difference() {
        let h = 1e-4;
        let kernel = Kernel::bspline(4).unwrap();
        let fd = (kernel.eval(h) - 2.0 * kernel.eval(0.0) + kernel.eval(-h)) / (h * h);
        let exact = kernel.eval_derivative(2, 0.0).unwrap();
        assert!(
            (fd - exact).abs() < 1e-6,
            "B_4'' at 0: exact {exact} fd {fd}"
        );
    }

    #[test]
    fn derivative_recurrence_identity() {
        // B_n'(x) = B_{n-1}(x + 1/2) - B_{n-1}(x - 1/2), including at knots
        // because both sides take right-hand limits.
        for degree in 1..=6usize {
            let hi = Kernel::bspline(degree).unwrap();
            let lo = Kernel::bspline(degree - 1).unwrap();
            for i in 0..=160 {
                let x = -4.0 + i as f64 * 0.05;
                let lhs = hi.eval_derivative(1, x).unwrap();
                let rhs = lo.eval(x + 0.5) - lo.eval(x - 0.5);
                assert!(
                    (lhs - rhs).abs() < 1e-13,
                    "degree {degree} at {x}: {lhs} vs {rhs}"
                );
            }
        }
    }

    #[test]
    fn derivative_levels_above_degree_are_rejected() {
        let err = bspline_derivative(2, 3, 0.0).unwrap_err();
        assert_eq!(
            err,
            KernelError::DerivativeUnavailable {
                degree: 2,
                requested: 3
            }
        );
        assert!(Kernel::bspline(MAX_DEGREE + 1).is_err());
    }

    #[test]
    fn partition_of_unity_on_dense_grid() {
        // Spec tolerance: < 1e-12 over a 10,001-point grid for degrees 0-6.
        for degree in 0..=6usize {
            let report = verify_kernel_conditions(&Kernel::bspline(degree).unwrap(), degree, 1e-12);
            assert!(
                report.passed,
                "degree {degree}: deviation {:e}",
                report.max_partition_deviation
            );
        }
    }

    #[test]
    fn condition_report_for_b0_and_b4() {
        let r0 = verify_kernel_conditions(&Kernel::bspline(0).unwrap(), 0, 1e-12);
        assert!(r0.passed && r0.moments_finite);
        let r4 = verify_kernel_conditions(&Kernel::bspline(4).unwrap(), 4, 1e-12);
        assert!(r4.passed && r4.moments_finite);
    }

    #[test]
    fn support_is_exact() {
        for degree in 0..=6usize {
            let kernel = Kernel::bspline(degree).unwrap();
            let r = kernel.support_radius();
            assert_eq!(kernel.eval(r + 1e-12), 0.0);
            assert_eq!(kernel.eval(-r - 1e-12), 0.0);
            assert_eq!(kernel.eval(r + 5.0), 0.0);
            if degree >= 1 {
                // Continuous kernels vanish at the boundary itself. Strict
                // positivity is checked a little away from the edge, where
                // the true value clears the evaluation noise floor.
                assert_eq!(kernel.eval(r), 0.0);
                assert!(kernel.eval(r - 0.05) > 0.0);
            }
        }
    }

    proptest! {
        #[test]
        fn symmetry(degree in 0usize..=6, frac in 0.0f64..1.0) {
            let kernel = Kernel::bspline(degree).unwrap();
            let r = kernel.support_radius();
            let x = (2.0 * frac - 1.0) * r;
            prop_assert!((kernel.eval(x) - kernel.eval(-x)).abs() < 1e-14);
        }

        #[test]
        fn nonnegative_inside_support(degree in 0usize..=6, frac in 0.0f64..1.0) {
            let kernel = Kernel::bspline(degree).unwrap();
            let x = (2.0 * frac - 1.0) * kernel.support_radius();
            prop_assert!(kernel.eval(x) >= 0.0);
        }

        #[test]
        fn derivative_consistency_with_finite_differences(
            degree in 2usize..=6,
            q in 1usize..=2,
            frac in 0.001f64..0.999,
        ) {
            // Compare level q against central differences of level q-1 at
            // points bounded away from knots.
            let kernel = Kernel::bspline(degree).unwrap();
            let r = kernel.support_radius();
            let x = -r + frac * 2.0 * r;
            let nearest_knot = (x - (-r)).round() + (-r);
            prop_assume!((x - nearest_knot).abs() > 1e-3);
            let h = 1e-6;
            let fd = (kernel.eval_derivative(q - 1, x + h).unwrap()
                - kernel.eval_derivative(q - 1, x - h).unwrap())
                / (2.0 * h);
            let exact = kernel.eval_derivative(q, x).unwrap();
            let scale = exact.abs().max(1.0);
            prop_assert!(
                (fd - exact).abs() <= 1e-5 * scale,
                "degree {} q {} x {}: exact {} fd {}",
                degree, q, x, exact, fd
            );
        }
    }
}
