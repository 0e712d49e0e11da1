//! Error measurement and theory-side quantities: sup-norm errors, the
//! empirical modulus of continuity, the closed-form error bounds, the
//! Voronovskaja asymptotic constants, and convergence sweeps.
//!
//! Sup norms of fields are taken over the user's evaluation window on a grid
//! (the fields in the reproduction experiments are unbounded globally), and
//! the modulus estimator is a seeded probe search; both are lower bounds of
//! the true suprema with the resolution under the caller's control.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::field::Field;
use crate::grid::{GridError, GridSpec, Surface};
use crate::kernel::{Kernel, KernelError};
use crate::moments::{algebraic_moment_stats, MomentTable};
use crate::operator::{evaluate_on_grid, OperatorError, OperatorParams};
use crate::simultaneous::{
    evaluate_derivative_on_grid, evaluate_reduced_derivative_on_grid, DerivativeRequest,
};
use crate::util::{binomial, factorial, multi_indices_exact};

#[derive(Error, Debug, Clone, PartialEq)]
pub enum AnalysisError {
    #[error(transparent)]
    Grid(#[from] GridError),

    #[error(transparent)]
    Operator(#[from] OperatorError),

    #[error(transparent)]
    Kernel(#[from] KernelError),

    #[error("surfaces are sampled on different grids")]
    GridMismatch,

    #[error("field lacks derivative {key:?}")]
    MissingDerivative { key: Vec<usize> },

    #[error("moment table lacks order {order} at derivative level {level}")]
    MissingMoment { order: usize, level: usize },

    #[error("algebraic moment of order {order} at level {level} deviates by {deviation:e} over u (tolerance {tolerance:e}); the asymptotic formulas need constant moments")]
    NonConstantMoments {
        order: usize,
        level: usize,
        deviation: f64,
        tolerance: f64,
    },

    #[error("rate list must be non-empty and strictly increasing")]
    InvalidRateList,
}

/// Deviation gate for the constant-moment hypothesis of the asymptotic
/// formulas.
pub const MOMENT_CONSTANCY_TOLERANCE: f64 = 1e-10;

/// `u`-grid used by the constancy gate.
const GATE_GRID: usize = 1001;

/// Errors below this are treated as floating-point floor values and excluded
/// from slope fits.
pub const SLOPE_FLOOR: f64 = 1e-12;

// ---------------------------------------------------------------------------
// Sup errors
// ---------------------------------------------------------------------------

/// Max absolute pointwise difference of two surfaces on the same grid.
pub fn sup_error_surfaces(a: &Surface, b: &Surface) -> Result<f64, AnalysisError> {
    if a.grid != b.grid {
        return Err(AnalysisError::GridMismatch);
    }
    Ok(a.values
        .iter()
        .zip(&b.values)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0f64, f64::max))
}

/// Max absolute difference between a surface and a field derivative sampled
/// on the surface's grid (`key` all zero for the field itself).
pub fn sup_error_vs_field(
    surface: &Surface,
    field: &Field,
    key: &[usize],
) -> Result<f64, AnalysisError> {
    if !field.has_derivative(key) {
        return Err(AnalysisError::MissingDerivative { key: key.to_vec() });
    }
    let mut coords = vec![0.0; surface.grid.num_axes()];
    let mut worst = 0.0f64;
    for (flat, value) in surface.values.iter().enumerate() {
        surface.grid.write_node(flat, &mut coords);
        let reference = field.eval_derivative(key, &coords).unwrap();
        worst = worst.max((value - reference).abs());
    }
    Ok(worst)
}

/// Grid sup of `|d^key f|` over the window.
pub fn derivative_sup_norm(
    field: &Field,
    key: &[usize],
    window: &GridSpec,
) -> Result<f64, AnalysisError> {
    if !field.has_derivative(key) {
        return Err(AnalysisError::MissingDerivative { key: key.to_vec() });
    }
    let mut coords = vec![0.0; window.num_axes()];
    let mut sup = 0.0f64;
    for flat in 0..window.len() {
        window.write_node(flat, &mut coords);
        sup = sup.max(field.eval_derivative(key, &coords).unwrap().abs());
    }
    Ok(sup)
}

// ---------------------------------------------------------------------------
// Modulus of continuity
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModulusSettings {
    /// Offset candidates drawn per grid anchor.
    pub probes: usize,
    pub seed: u64,
}

impl Default for ModulusSettings {
    fn default() -> Self {
        ModulusSettings {
            probes: 64,
            seed: 42,
        }
    }
}

/// Empirical `omega(d^key f, delta, gamma_1..gamma_d)`: sup of |f(t) - f(s)|
/// over seeded probe pairs with `|t_0 - s_0| < delta`, `|t_i - s_i| < gamma_i`.
///
/// Anchors are the window grid nodes. The candidate pool is drawn once from
/// the seed, independent of `(delta, gammas)`; enlarging the neighborhood
/// only admits more candidates, so the estimate is nondecreasing in `delta`
/// and each `gamma_i` for a fixed pool. Offset magnitudes are log-uniform so
/// small neighborhoods still receive probes. A lower bound of the true
/// modulus; resolution is `window` x `probes`.
pub fn modulus_of_continuity(
    field: &Field,
    key: &[usize],
    delta: f64,
    gammas: &[f64],
    window: &GridSpec,
    settings: &ModulusSettings,
) -> Result<f64, AnalysisError> {
    let axes = window.num_axes();
    if !field.has_derivative(key) {
        return Err(AnalysisError::MissingDerivative { key: key.to_vec() });
    }
    assert_eq!(gammas.len() + 1, axes, "one gamma per space axis");
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    let spans: Vec<f64> = window.axes().iter().map(|a| a.hi - a.lo).collect();
    const MIN_OFFSET: f64 = 1e-6;

    let mut anchor = vec![0.0; axes];
    let mut other = vec![0.0; axes];
    let mut sup = 0.0f64;
    for flat in 0..window.len() {
        window.write_node(flat, &mut anchor);
        let base = field.eval_derivative(key, &anchor).unwrap();
        for _ in 0..settings.probes {
            let mut ok = true;
            for axis in 0..axes {
                // Log-uniform magnitude in [MIN_OFFSET, span], random sign.
                let u: f64 = rng.gen();
                let magnitude = MIN_OFFSET * (spans[axis] / MIN_OFFSET).powf(u);
                let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
                let offset = sign * magnitude;
                let limit = if axis == 0 { delta } else { gammas[axis - 1] };
                let target = anchor[axis] + offset;
                if offset.abs() >= limit
                    || target < window.axes()[axis].lo
                    || target > window.axes()[axis].hi
                {
                    ok = false;
                }
                other[axis] = target;
            }
            if ok {
                let value = field.eval_derivative(key, &other).unwrap();
                sup = sup.max((base - value).abs());
            }
        }
    }
    Ok(sup)
}

// ---------------------------------------------------------------------------
// Closed-form bounds
// ---------------------------------------------------------------------------

fn absolute(table: &MomentTable, order: usize, level: usize) -> Result<f64, AnalysisError> {
    table
        .absolute(order, level)
        .ok_or(AnalysisError::MissingMoment { order, level })
}

fn derivative_key(dim: usize, l: usize, j: &[usize]) -> Vec<usize> {
    let mut key = Vec::with_capacity(dim + 1);
    key.push(l);
    key.extend_from_slice(j);
    key
}

/// The a-priori bound that makes the operator well-defined:
/// `sum_{l+|j|<=n} 2^{l+|j|-(d+1)} / (l! j! w^{l+|j|}) ||d^{l+j}f||
///  (M_l(phi)+M_0(phi)) prod_i (M_{j_i}(psi_i)+M_0(psi_i))`.
pub fn well_definedness_bound(
    field: &Field,
    params: &OperatorParams,
    phi_moments: &MomentTable,
    psi_moments: &[MomentTable],
    window: &GridSpec,
) -> Result<f64, AnalysisError> {
    let dim = params.dim();
    let n = params.order();
    let w = params.rate();
    let mut total = 0.0;
    for idx in crate::util::multi_indices(dim + 1, n) {
        let (l, j) = (idx[0], &idx[1..]);
        let total_order: usize = idx.iter().sum();
        let mut inv_fact = 1.0 / factorial(l);
        for &ji in j {
            inv_fact /= factorial(ji);
        }
        let sup = derivative_sup_norm(field, &derivative_key(dim, l, j), window)?;
        let mut product = absolute(phi_moments, l, 0)? + absolute(phi_moments, 0, 0)?;
        for (i, &ji) in j.iter().enumerate() {
            product *= absolute(&psi_moments[i], ji, 0)? + absolute(&psi_moments[i], 0, 0)?;
        }
        total += inv_fact * 2.0f64.powi(total_order as i32 - (dim as i32 + 1))
            / w.powi(total_order as i32)
            * sup
            * product;
    }
    Ok(total)
}

/// The rate-independent factor of the order `n+1` bound; the bound itself is
/// this coefficient divided by `w^{n+1}`.
pub fn bound_order_coefficient(
    field: &Field,
    order: usize,
    dim: usize,
    phi_moments: &MomentTable,
    psi_moments: &[MomentTable],
    window: &GridSpec,
) -> Result<f64, AnalysisError> {
    let mut sum = 0.0;
    for idx in multi_indices_exact(dim + 1, order + 1) {
        let (l, j) = (idx[0], &idx[1..]);
        let mut inv_fact = 1.0 / factorial(l);
        for &ji in j {
            inv_fact /= factorial(ji);
        }
        let sup = derivative_sup_norm(field, &derivative_key(dim, l, j), window)?;
        let mut product = absolute(phi_moments, l, 0)? + absolute(phi_moments, 0, 0)?;
        for (i, &ji) in j.iter().enumerate() {
            product *= absolute(&psi_moments[i], ji, 0)? + absolute(&psi_moments[i], 0, 0)?;
        }
        sum += inv_fact * sup * product;
    }
    Ok(2.0f64.powi(order as i32 - dim as i32) * sum)
}

/// `T_n(w)`: the C^{n+1} sup-norm bound
/// `2^{n-d} w^{-(n+1)} sum_{l+|j|=n+1} ||d^{l+j}f|| (M_l+M_0)(prod M_{j_i}+M_0) / (l! j!)`.
pub fn bound_thm2iii(
    field: &Field,
    params: &OperatorParams,
    phi_moments: &MomentTable,
    psi_moments: &[MomentTable],
    window: &GridSpec,
) -> Result<f64, AnalysisError> {
    let coefficient = bound_order_coefficient(
        field,
        params.order(),
        params.dim(),
        phi_moments,
        psi_moments,
        window,
    )?;
    Ok(coefficient / params.rate().powi(params.order() as i32 + 1))
}

fn modulus_moment_factor(
    table: &MomentTable,
    order: usize,
    level: usize,
) -> Result<f64, AnalysisError> {
    Ok(absolute(table, order + 1, level)?
        + 2.0 * absolute(table, order, level)?
        + absolute(table, 1, level)?
        + 2.0 * absolute(table, 0, level)?)
}

/// The modulus-of-continuity bound at order `n`:
/// `2^{n-(d+1)} w^{-n} sum_{l+|j|=n} omega(d^{l+j}f, 1/w, ..) / (l! j!)
///  (M_{l+1}+2M_l+M_1+2M_0)(phi) prod_i (M_{j_i+1}+2M_{j_i}+M_1+2M_0)(psi_i)`.
pub fn bound_thm2ii(
    field: &Field,
    params: &OperatorParams,
    phi_moments: &MomentTable,
    psi_moments: &[MomentTable],
    window: &GridSpec,
    modulus: &ModulusSettings,
) -> Result<f64, AnalysisError> {
    let dim = params.dim();
    let n = params.order();
    let w = params.rate();
    let inv_w = vec![1.0 / w; dim];
    let mut sum = 0.0;
    for idx in multi_indices_exact(dim + 1, n) {
        let (l, j) = (idx[0], &idx[1..]);
        let mut inv_fact = 1.0 / factorial(l);
        for &ji in j {
            inv_fact /= factorial(ji);
        }
        let omega = modulus_of_continuity(
            field,
            &derivative_key(dim, l, j),
            1.0 / w,
            &inv_w,
            window,
            modulus,
        )?;
        let mut product = modulus_moment_factor(phi_moments, l, 0)?;
        for (i, &ji) in j.iter().enumerate() {
            product *= modulus_moment_factor(&psi_moments[i], ji, 0)?;
        }
        sum += inv_fact * omega * product;
    }
    Ok(2.0f64.powi(n as i32 - (dim as i32 + 1)) / w.powi(n as i32) * sum)
}

/// The simultaneous-approximation bound: a binomial sum over kernel
/// derivative levels `(a, b)` of modulus-weighted moment products scaled by
/// `w^{-(n - (p+|q|))}`.
pub fn bound_thm5(
    field: &Field,
    params: &OperatorParams,
    request: &DerivativeRequest,
    phi_moments: &MomentTable,
    psi_moments: &[MomentTable],
    window: &GridSpec,
    modulus: &ModulusSettings,
) -> Result<f64, AnalysisError> {
    let dim = params.dim();
    let n = params.order();
    let w = params.rate();
    let p = request.time_order;
    let q = &request.space_orders;
    let total_request = request.total();
    let inv_w = vec![1.0 / w; dim];

    let mut outer = 0.0;
    for a in 0..=p {
        for b in crate::util::multi_indices(dim, q.iter().sum::<usize>()) {
            if b.iter().zip(q).any(|(bi, qi)| bi > qi) {
                continue;
            }
            let ab_total = a + b.iter().sum::<usize>();
            let inner_order = n - total_request + ab_total;
            let mut weight = binomial(p, a);
            for (i, &bi) in b.iter().enumerate() {
                weight *= binomial(q[i], bi);
            }
            let mut sum = 0.0;
            for idx in multi_indices_exact(dim + 1, inner_order) {
                let (l, j) = (idx[0], &idx[1..]);
                let mut inv_fact = 1.0 / factorial(l);
                for &ji in j {
                    inv_fact /= factorial(ji);
                }
                let mut key = Vec::with_capacity(dim + 1);
                key.push(l + p - a);
                for i in 0..dim {
                    key.push(j[i] + q[i] - b[i]);
                }
                let omega = modulus_of_continuity(field, &key, 1.0 / w, &inv_w, window, modulus)?;
                let mut product = modulus_moment_factor(phi_moments, l, a)?;
                for (i, &ji) in j.iter().enumerate() {
                    product *= modulus_moment_factor(&psi_moments[i], ji, b[i])?;
                }
                sum += inv_fact * omega * product;
            }
            outer += weight * 2.0f64.powi(inner_order as i32 - (dim as i32 + 1)) * sum;
        }
    }
    Ok(outer / w.powi((n - total_request) as i32))
}

// ---------------------------------------------------------------------------
// Voronovskaja constants
// ---------------------------------------------------------------------------

/// Mean algebraic moments after the constancy gate, per derivative level.
fn gated_moment_means(
    kernel: &Kernel,
    max_order: usize,
    level: usize,
) -> Result<Vec<f64>, AnalysisError> {
    let mut means = Vec::with_capacity(max_order + 1);
    for order in 0..=max_order {
        let stats = algebraic_moment_stats(kernel, level, order, GATE_GRID)?;
        if stats.max_deviation >= MOMENT_CONSTANCY_TOLERANCE {
            return Err(AnalysisError::NonConstantMoments {
                order,
                level,
                deviation: stats.max_deviation,
                tolerance: MOMENT_CONSTANCY_TOLERANCE,
            });
        }
        means.push(stats.mean);
    }
    Ok(means)
}

/// The order `n+1` asymptotic constant:
/// `lim w^{n+1} (K_{n,w} f - f)(x, y)`, a moment-weighted combination of the
/// order `n+1` derivatives of `f` at the point.
pub fn voronovskaja_constant(
    field: &Field,
    params: &OperatorParams,
    point: &[f64],
) -> Result<f64, AnalysisError> {
    voronovskaja_constant_derivative(
        field,
        params,
        &DerivativeRequest::new(0, vec![0; params.dim()]),
        point,
    )
}

/// The simultaneous asymptotic constant:
/// `lim w^{n-(p+|q|)+1} (d^{p+q} K_{n,w} f - d^{p+q} f)(x, y)`.
///
/// For `p + |q| = 0` this is the plain Voronovskaja constant. For symmetric
/// B-spline kernels and `p + |q| >= 1` the binomial terms cancel exactly and
/// the constant vanishes: the full derivative expansion converges at a
/// strictly faster rate than its leading term.
pub fn voronovskaja_constant_derivative(
    field: &Field,
    params: &OperatorParams,
    request: &DerivativeRequest,
    point: &[f64],
) -> Result<f64, AnalysisError> {
    let dim = params.dim();
    let n = params.order();
    let p = request.time_order;
    let q = &request.space_orders;
    let total_request = request.total();
    assert!(total_request <= n, "request must satisfy p + |q| <= n");

    // Constancy gate plus mean values for every kernel level the expansion
    // touches.
    let mut phi_means = Vec::with_capacity(p + 1);
    for a in 0..=p {
        phi_means.push(gated_moment_means(params.phi(), n + 1, a)?);
    }
    let mut psi_means = Vec::with_capacity(dim);
    for i in 0..dim {
        let mut per_level = Vec::with_capacity(q[i] + 1);
        for b in 0..=q[i] {
            per_level.push(gated_moment_means(&params.psi()[i], n + 1, b)?);
        }
        psi_means.push(per_level);
    }

    let mut total = 0.0;
    for a in 0..=p {
        for b in crate::util::multi_indices(dim, q.iter().sum::<usize>()) {
            if b.iter().zip(q).any(|(bi, qi)| bi > qi) {
                continue;
            }
            let ab_total = a + b.iter().sum::<usize>();
            let inner_order = n - total_request + ab_total;
            let sign = if inner_order.is_multiple_of(2) {
                1.0
            } else {
                -1.0
            };
            let mut weight = binomial(p, a);
            for (i, &bi) in b.iter().enumerate() {
                weight *= binomial(q[i], bi);
            }
            for idx in multi_indices_exact(dim + 1, inner_order + 1) {
                let (l, j) = (idx[0], &idx[1..]);
                let mut inv_fact = 1.0 / factorial(l);
                for &ji in j {
                    inv_fact /= factorial(ji);
                }
                // Inner binomial sums over (c, d) collapse to per-axis
                // factors since the moment means multiply independently.
                let mut c_factor = 0.0;
                for c in 0..=l {
                    c_factor += binomial(l, c) * phi_means[a][c] / (l - c + 1) as f64;
                }
                let mut d_factor = 1.0;
                for (i, &ji) in j.iter().enumerate() {
                    let mut axis_sum = 0.0;
                    for d in 0..=ji {
                        axis_sum += binomial(ji, d) * psi_means[i][b[i]][d] / (ji - d + 1) as f64;
                    }
                    d_factor *= axis_sum;
                }
                let mut key = Vec::with_capacity(dim + 1);
                key.push(l + p - a);
                for i in 0..dim {
                    key.push(j[i] + q[i] - b[i]);
                }
                let df = field
                    .eval_derivative(&key, point)
                    .ok_or(AnalysisError::MissingDerivative { key: key.clone() })?;
                total += sign * weight * inv_fact * c_factor * d_factor * df;
            }
        }
    }
    Ok(total)
}

// ---------------------------------------------------------------------------
// Convergence sweeps
// ---------------------------------------------------------------------------

/// Which operator object a sweep measures against which reference.
#[derive(Debug, Clone, PartialEq)]
pub enum SweepMode {
    /// `K_{n,w} f` against `f`.
    Plain,
    /// Full `d^{p+q} K_{n,w} f` against `d^{p+q} f`.
    Derivative(DerivativeRequest),
    /// Reduced `K_{n-(p+|q|),w} d^{p+q} f` against `d^{p+q} f`: the
    /// leading expansion term, the object the error-table recipes measure.
    ReducedDerivative(DerivativeRequest),
}

#[derive(Debug, Clone)]
pub struct SweepOptions {
    pub mode: SweepMode,
    pub with_bound_thm2iii: bool,
    pub with_bound_thm2ii: bool,
    pub with_bound_thm5: bool,
    pub modulus: ModulusSettings,
    /// Resolution of the kernel moment tables backing the bounds.
    pub moment_grid: usize,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            mode: SweepMode::Plain,
            with_bound_thm2iii: false,
            with_bound_thm2ii: false,
            with_bound_thm5: false,
            modulus: ModulusSettings::default(),
            moment_grid: crate::moments::DEFAULT_MOMENT_GRID,
        }
    }
}

/// Measured error and bounds at one sampling rate.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub rate: f64,
    pub measured_error: f64,
    pub bound_thm2iii: Option<f64>,
    pub bound_thm2ii: Option<f64>,
    pub bound_thm5: Option<f64>,
    pub grid: GridSpec,
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub reports: Vec<ErrorReport>,
    /// Least-squares slope of `log E` against `log w`, when at least two
    /// errors sit above the floating-point floor.
    pub slope: Option<f64>,
}

/// Ordinary least squares on `(log w, log E)` excluding floor values.
pub fn fit_log_slope(rates: &[f64], errors: &[f64]) -> Option<f64> {
    let points: Vec<(f64, f64)> = rates
        .iter()
        .zip(errors)
        .filter(|&(&w, &e)| w > 0.0 && e >= SLOPE_FLOOR)
        .map(|(&w, &e)| (w.ln(), e.ln()))
        .collect();
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var = 0.0;
    for (x, y) in points {
        cov += (x - mean_x) * (y - mean_y);
        var += (x - mean_x) * (x - mean_x);
    }
    (var > 0.0).then(|| cov / var)
}

/// Runs the operator over `w_list` on `grid`, measuring sup errors and the
/// requested bounds, and fits the convergence slope.
pub fn convergence_sweep(
    params_template: &OperatorParams,
    field: &Field,
    w_list: &[f64],
    grid: &GridSpec,
    options: &SweepOptions,
) -> Result<SweepOutcome, AnalysisError> {
    if w_list.is_empty() || w_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(AnalysisError::InvalidRateList);
    }
    let dim = params_template.dim();
    let needs_moments =
        options.with_bound_thm2iii || options.with_bound_thm2ii || options.with_bound_thm5;
    let (phi_moments, psi_moments) = if needs_moments {
        let max_level = match &options.mode {
            SweepMode::Plain => 0,
            SweepMode::Derivative(req) | SweepMode::ReducedDerivative(req) => req
                .time_order
                .max(req.space_orders.iter().copied().max().unwrap_or(0)),
        };
        let phi = MomentTable::compute(
            params_template.phi(),
            params_template.order() + 2,
            max_level.min(params_template.phi().max_derivative()),
            options.moment_grid,
        )?;
        let mut psi = Vec::with_capacity(dim);
        for kernel in params_template.psi() {
            psi.push(MomentTable::compute(
                kernel,
                params_template.order() + 2,
                max_level.min(kernel.max_derivative()),
                options.moment_grid,
            )?);
        }
        (Some(phi), Some(psi))
    } else {
        (None, None)
    };

    let reference_key = match &options.mode {
        SweepMode::Plain => vec![0; dim + 1],
        SweepMode::Derivative(req) | SweepMode::ReducedDerivative(req) => {
            let mut key = Vec::with_capacity(dim + 1);
            key.push(req.time_order);
            key.extend_from_slice(&req.space_orders);
            key
        }
    };

    let mut reports = Vec::with_capacity(w_list.len());
    for &w in w_list {
        let params = params_template.with_rate(w)?;
        let surface = match &options.mode {
            SweepMode::Plain => evaluate_on_grid(&params, field, grid)?,
            SweepMode::Derivative(req) => evaluate_derivative_on_grid(&params, field, req, grid)?,
            SweepMode::ReducedDerivative(req) => {
                evaluate_reduced_derivative_on_grid(&params, field, req, grid)?
            }
        };
        let measured_error = sup_error_vs_field(&surface, field, &reference_key)?;

        let mut report = ErrorReport {
            rate: w,
            measured_error,
            bound_thm2iii: None,
            bound_thm2ii: None,
            bound_thm5: None,
            grid: grid.clone(),
        };
        if let (Some(phi_m), Some(psi_m)) = (&phi_moments, &psi_moments) {
            match &options.mode {
                SweepMode::Plain => {
                    if options.with_bound_thm2iii {
                        report.bound_thm2iii =
                            Some(bound_thm2iii(field, &params, phi_m, psi_m, grid)?);
                    }
                    if options.with_bound_thm2ii {
                        report.bound_thm2ii = Some(bound_thm2ii(
                            field,
                            &params,
                            phi_m,
                            psi_m,
                            grid,
                            &options.modulus,
                        )?);
                    }
                }
                SweepMode::Derivative(req) | SweepMode::ReducedDerivative(req) => {
                    if options.with_bound_thm5 {
                        report.bound_thm5 = Some(bound_thm5(
                            field,
                            &params,
                            req,
                            phi_m,
                            psi_m,
                            grid,
                            &options.modulus,
                        )?);
                    }
                }
            }
        }
        reports.push(report);
    }

    let slope = fit_log_slope(
        w_list,
        &reports.iter().map(|r| r.measured_error).collect::<Vec<_>>(),
    );
    Ok(SweepOutcome { reports, slope })
}
