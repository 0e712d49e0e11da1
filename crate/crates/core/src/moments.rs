//! Discrete algebraic and absolute kernel moments.
//!
//! The algebraic moment is `m_r(chi, u) = sum_k (k - u)^r chi(u - k)` and the
//! absolute moment is `M_a(chi) = sup_u sum_k |u - k|^a |chi(u - k)|`. Both
//! summands are 1-periodic in `u`, so suprema and constancy checks run over a
//! dense grid on `[0, 1]`.

use std::collections::BTreeMap;

use crate::kernel::{Kernel, KernelError};

/// Default `u`-grid resolution for moment suprema and constancy scans.
pub const DEFAULT_MOMENT_GRID: usize = 10_001;

/// Algebraic moment `m_r(chi^{(q)}, u)` as a finite sum over the support.
pub fn algebraic_moment(
    kernel: &Kernel,
    level: usize,
    order: usize,
    u: f64,
) -> Result<f64, KernelError> {
    if level > kernel.max_derivative() {
        return Err(KernelError::DerivativeUnavailable {
            degree: kernel.degree(),
            requested: level,
        });
    }
    let radius = kernel.support_radius();
    let k_min = (u - radius).floor() as i64;
    let k_max = (u + radius).ceil() as i64;
    let mut sum = 0.0;
    for k in k_min..=k_max {
        let weight = kernel.eval_level(level, u - k as f64);
        if weight != 0.0 {
            sum += (k as f64 - u).powi(order as i32) * weight;
        }
    }
    Ok(sum)
}

/// Absolute moment `M_a(chi^{(q)})` as a grid supremum over `u ∈ [0, 1]`.
pub fn absolute_moment(
    kernel: &Kernel,
    level: usize,
    order: usize,
    grid_points: usize,
) -> Result<f64, KernelError> {
    if level > kernel.max_derivative() {
        return Err(KernelError::DerivativeUnavailable {
            degree: kernel.degree(),
            requested: level,
        });
    }
    let radius = kernel.support_radius();
    let k_min = (-radius).floor() as i64 - 1;
    let k_max = (1.0 + radius).ceil() as i64 + 1;
    let mut sup: f64 = 0.0;
    for i in 0..grid_points {
        let u = i as f64 / (grid_points - 1) as f64;
        let mut sum = 0.0;
        for k in k_min..=k_max {
            let weight = kernel.eval_level(level, u - k as f64).abs();
            if weight != 0.0 {
                sum += (u - k as f64).abs().powi(order as i32) * weight;
            }
        }
        sup = sup.max(sum);
    }
    Ok(sup)
}

/// Mean and worst deviation of an algebraic moment over the `u`-grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlgebraicMomentStats {
    pub mean: f64,
    pub max_deviation: f64,
}

/// Algebraic moment statistics for one `(order, level)` pair.
pub fn algebraic_moment_stats(
    kernel: &Kernel,
    level: usize,
    order: usize,
    grid_points: usize,
) -> Result<AlgebraicMomentStats, KernelError> {
    let mut values = Vec::with_capacity(grid_points);
    for i in 0..grid_points {
        let u = i as f64 / (grid_points - 1) as f64;
        values.push(algebraic_moment(kernel, level, order, u)?);
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let max_deviation = values
        .iter()
        .map(|v| (v - mean).abs())
        .fold(0.0f64, f64::max);
    Ok(AlgebraicMomentStats {
        mean,
        max_deviation,
    })
}

/// Tabulated algebraic and absolute moments of one kernel, keyed by
/// `(order, derivative level)`.
#[derive(Debug, Clone)]
pub struct MomentTable {
    algebraic: BTreeMap<(usize, usize), AlgebraicMomentStats>,
    absolute: BTreeMap<(usize, usize), f64>,
    pub sample_count: usize,
}

impl MomentTable {
    pub fn compute(
        kernel: &Kernel,
        max_order: usize,
        max_level: usize,
        sample_count: usize,
    ) -> Result<Self, KernelError> {
        let mut algebraic = BTreeMap::new();
        let mut absolute = BTreeMap::new();
        for level in 0..=max_level {
            for order in 0..=max_order {
                algebraic.insert(
                    (order, level),
                    algebraic_moment_stats(kernel, level, order, sample_count)?,
                );
                absolute.insert(
                    (order, level),
                    absolute_moment(kernel, level, order, sample_count)?,
                );
            }
        }
        Ok(MomentTable {
            algebraic,
            absolute,
            sample_count,
        })
    }

    pub fn algebraic(&self, order: usize, level: usize) -> Option<AlgebraicMomentStats> {
        self.algebraic.get(&(order, level)).copied()
    }

    pub fn absolute(&self, order: usize, level: usize) -> Option<f64> {
        self.absolute.get(&(order, level)).copied()
    }

    pub fn max_order(&self) -> usize {
        self.algebraic.keys().map(|&(r, _)| r).max().unwrap_or(0)
    }

    pub fn max_level(&self) -> usize {
        self.algebraic.keys().map(|&(_, q)| q).max().unwrap_or(0)
    }

    /// Entries in deterministic `(order, level)` order, as
    /// `(order, level, algebraic stats, absolute)`.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, AlgebraicMomentStats, f64)> + '_ {
        self.algebraic
            .iter()
            .map(|(&(order, level), &stats)| (order, level, stats, self.absolute[&(order, level)]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kernel(degree: usize) -> Kernel {
        Kernel::bspline(degree).unwrap()
    }

    #[test]
    fn partition_of_unity_moment() {
        // Condition (i): m_0 is identically 1.
        assert!((algebraic_moment(&kernel(2), 0, 0, 0.37).unwrap() - 1.0).abs() < 1e-14);
        assert!((algebraic_moment(&kernel(4), 0, 0, 0.91).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn first_moment_vanishes() {
        assert!(algebraic_moment(&kernel(2), 0, 1, 0.0).unwrap().abs() < 1e-15);
        // Brute-force sum over the support at a generic u: degree >= 1
        // B-splines reproduce linears, so m_1 vanishes everywhere.
        assert!(algebraic_moment(&kernel(2), 0, 1, 0.37).unwrap().abs() < 1e-14);
        for degree in 1..=6 {
            let stats = algebraic_moment_stats(&kernel(degree), 0, 1, 101).unwrap();
            assert!(stats.mean.abs() < 1e-13 && stats.max_deviation < 1e-13);
        }
    }

    #[test]
    fn absolute_moment_of_hat_kernel() {
        // On u in [0,1] the sum is 2u(1-u), maximized at u = 1/2.
        let m = absolute_moment(&kernel(1), 0, 1, DEFAULT_MOMENT_GRID).unwrap();
        assert!((m - 0.5).abs() < 1e-12, "{m}");
    }

    #[test]
    fn absolute_moment_order_zero_is_one() {
        for degree in 0..=6 {
            let m = absolute_moment(&kernel(degree), 0, 0, 1001).unwrap();
            assert!((m - 1.0).abs() < 1e-12, "degree {degree}: {m}");
        }
    }

    #[test]
    fn second_absolute_moment_against_fine_grid_oracle() {
        // Reference value from a 100,001-point brute-force grid sup.
        let coarse = absolute_moment(&kernel(2), 0, 2, DEFAULT_MOMENT_GRID).unwrap();
        let fine = absolute_moment(&kernel(2), 0, 2, 100_001).unwrap();
        assert!((coarse - fine).abs() < 1e-6, "coarse {coarse} fine {fine}");
        // The sup sits at half-integer u where the sum equals 1/4.
        assert!((fine - 0.25).abs() < 1e-9, "{fine}");
    }

    #[test]
    fn moment_constancy_matches_spline_degree() {
        // m_r(B_v, u) is constant in u exactly for r <= v. The known constant
        // values: m_2(B_2) = 1/4, m_2(B_4) = 5/12, m_4(B_4) = 23/48.
        let s = algebraic_moment_stats(&kernel(2), 0, 2, 1001).unwrap();
        assert!(s.max_deviation < 1e-13 && (s.mean - 0.25).abs() < 1e-12);
        let s = algebraic_moment_stats(&kernel(4), 0, 2, 1001).unwrap();
        assert!(s.max_deviation < 1e-13 && (s.mean - 5.0 / 12.0).abs() < 1e-12);
        let s = algebraic_moment_stats(&kernel(4), 0, 4, 1001).unwrap();
        assert!(s.max_deviation < 1e-12 && (s.mean - 23.0 / 48.0).abs() < 1e-12);
        // One order past the degree the constancy breaks decisively.
        let s = algebraic_moment_stats(&kernel(1), 0, 2, 1001).unwrap();
        assert!(s.max_deviation > 1e-2);
        let s = algebraic_moment_stats(&kernel(2), 0, 3, 1001).unwrap();
        assert!(s.max_deviation > 1e-2);
    }

    #[test]
    fn derivative_kernel_zero_sum() {
        // sum_k chi^{(q)}(u - k) = 0 for q >= 1.
        for degree in 1..=6usize {
            for q in 1..=degree.min(3) {
                let stats = algebraic_moment_stats(&kernel(degree), q, 0, 1001).unwrap();
                assert!(
                    stats.mean.abs() < 1e-11 && stats.max_deviation < 1e-10,
                    "degree {degree} q {q}: {stats:?}"
                );
            }
        }
    }

    #[test]
    fn derivative_kernel_moment_identity() {
        // m_r(chi^{(q)}) = r!/(r-q)! m_{r-q}(chi) for constant-moment orders.
        let k4 = kernel(4);
        let m1_d1 = algebraic_moment_stats(&k4, 1, 1, 1001).unwrap();
        assert!((m1_d1.mean - 1.0).abs() < 1e-12 && m1_d1.max_deviation < 1e-11);
        let m3_d1 = algebraic_moment_stats(&k4, 1, 3, 1001).unwrap();
        assert!((m3_d1.mean - 3.0 * 5.0 / 12.0).abs() < 1e-11, "{:?}", m3_d1);
    }

    #[test]
    fn all_lower_moments_finite() {
        // Remark 1 operationally: whenever M_alpha is finite all lower
        // absolute moments are finite too (no overflow or NaN).
        let table = MomentTable::compute(&kernel(4), 5, 2, 501).unwrap();
        for (order, level, stats, absolute) in table.entries() {
            assert!(
                stats.mean.is_finite() && absolute.is_finite(),
                "({order},{level})"
            );
        }
        assert_eq!(table.sample_count, 501);
        assert_eq!(table.max_order(), 5);
        assert_eq!(table.max_level(), 2);
    }

    #[test]
    fn rejects_levels_above_degree() {
        assert!(algebraic_moment(&kernel(2), 3, 0, 0.0).is_err());
        assert!(absolute_moment(&kernel(2), 3, 0, 11).is_err());
    }
}
