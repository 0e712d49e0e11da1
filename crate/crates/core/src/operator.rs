//! The Hermite-type sampling Kantorovich operator.
//!
//! For a field `f` on `R x R^d`, order `n` and rate `w` the operator value at
//! `(x, y)` is a double sum over time/space cells `[k/w,(k+1)/w] x I_m^w`:
//! kernel weights `phi(wx-k) prod_i psi_i(wy_i - m_i)` times the cell
//! averages of the Taylor payload `sum_{l+|j|<=n} (x-u)^l (y-v)^j
//! d^{l+j}f(u,v) / (l! j!)`. Compact kernel supports truncate the sums to the
//! active indices exactly, and every cell integral is a tensorized
//! Gauss-Legendre sum.
//!
//! The same cell sweep also serves the kernel-derivative expansion of the
//! operator's mixed derivatives: one pass accumulates every `(a, b, l, j)`
//! term, with kernel derivative levels `(a, b)` and binomial weights applied
//! per cell.
//!
//! Two classical relatives are not implemented: replacing the cell averages
//! with point samples `f(k/w)` gives the generalized (n = 0) and
//! Hermite-type (n > 0) sampling series; this crate covers only the
//! Kantorovich (cell-average) family.

use std::ops::RangeInclusive;

use rayon::prelude::*;
use thiserror::Error;

use crate::field::Field;
use crate::grid::{GridError, GridSpec, Surface};
use crate::kernel::{verify_kernel_conditions, Kernel, KernelError};
use crate::quadrature::QuadratureRule;
use crate::util::{binomial, factorial, multi_indices};

#[derive(Error, Debug, Clone, PartialEq)]
pub enum OperatorError {
    #[error("invalid operator parameters: {0}")]
    Invalid(String),

    #[error("kernel for axis {axis} fails the order-{order} conditions (partition deviation {deviation:e})")]
    KernelCondition {
        axis: usize,
        order: usize,
        deviation: f64,
    },

    #[error(transparent)]
    Kernel(#[from] KernelError),

    #[error("field provides derivatives to order {max_order} but the operator needs {key:?}")]
    MissingFieldDerivative { key: Vec<usize>, max_order: usize },

    #[error("expected {expected} axes, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error(transparent)]
    Grid(#[from] GridError),
}

/// Tolerance for the partition-of-unity check run at parameter construction.
pub const KERNEL_CONDITION_TOLERANCE: f64 = 1e-10;

/// Parameter bundle `(n, w, d, phi, psi_1..psi_d, quadrature order)` defining
/// one operator instance. Construction verifies the kernel conditions at
/// order `n`.
#[derive(Debug, Clone)]
pub struct OperatorParams {
    order: usize,
    rate: f64,
    dim: usize,
    phi: Kernel,
    psi: Vec<Kernel>,
    quad: QuadratureRule,
    quad_nodes: usize,
    /// Optional Neumaier-compensated cell accumulation.
    pub compensated: bool,
}

impl OperatorParams {
    pub fn new(
        order: usize,
        rate: f64,
        dim: usize,
        phi: Kernel,
        psi: Vec<Kernel>,
        quad_nodes: usize,
    ) -> Result<Self, OperatorError> {
        if rate <= 0.0 || !rate.is_finite() {
            return Err(OperatorError::Invalid(format!(
                "rate w must be positive, got {rate}"
            )));
        }
        if dim == 0 {
            return Err(OperatorError::Invalid(
                "spatial dimension must be at least 1".into(),
            ));
        }
        if psi.len() != dim {
            return Err(OperatorError::Invalid(format!(
                "expected {dim} spatial kernels, got {}",
                psi.len()
            )));
        }
        if quad_nodes == 0 {
            return Err(OperatorError::Invalid(
                "quad_nodes must be at least 1".into(),
            ));
        }
        for (axis, kernel) in std::iter::once(&phi).chain(psi.iter()).enumerate() {
            let report = verify_kernel_conditions(kernel, order, KERNEL_CONDITION_TOLERANCE);
            if !report.passed {
                return Err(OperatorError::KernelCondition {
                    axis,
                    order,
                    deviation: report.max_partition_deviation,
                });
            }
        }
        Ok(OperatorParams {
            order,
            rate,
            dim,
            phi,
            psi,
            quad: QuadratureRule::gauss_legendre(quad_nodes),
            quad_nodes,
            compensated: false,
        })
    }

    /// Same configuration at a different sampling rate; kernels are already
    /// verified so no re-check is needed.
    pub fn with_rate(&self, rate: f64) -> Result<Self, OperatorError> {
        if rate <= 0.0 || !rate.is_finite() {
            return Err(OperatorError::Invalid(format!(
                "rate w must be positive, got {rate}"
            )));
        }
        let mut params = self.clone();
        params.rate = rate;
        Ok(params)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn phi(&self) -> &Kernel {
        &self.phi
    }

    pub fn psi(&self) -> &[Kernel] {
        &self.psi
    }

    pub fn quad_nodes(&self) -> usize {
        self.quad_nodes
    }

    fn kernel_for_axis(&self, axis: usize) -> &Kernel {
        if axis == 0 {
            &self.phi
        } else {
            &self.psi[axis - 1]
        }
    }
}

/// One sample cell `I_k^w x I_m^w`; every box side has length `1/w`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cell {
    pub time_index: i64,
    pub space_indices: Vec<i64>,
}

/// Exactly the integers `k` with `w*coord - k` inside the kernel support
/// (endpoints included; boundary indices carry zero kernel weight).
pub fn active_indices(kernel: &Kernel, rate: f64, coord: f64) -> RangeInclusive<i64> {
    let center = rate * coord;
    let radius = kernel.support_radius();
    let lo = (center - radius).ceil() as i64;
    let hi = (center + radius).floor() as i64;
    lo..=hi
}

/// `w^{d+1}` times the Gauss-Legendre approximation of
/// `int_cell d^{(l,j)}f(u,v) (x-u)^l (y-v)^j du dv`. With nodes mapped to the
/// unit cell and weights summing to one, the `w^{d+1}` volume factor cancels
/// and the value is the plain weighted node sum.
pub fn cell_integral(
    field: &Field,
    l: usize,
    j: &[usize],
    cell: &Cell,
    point: &[f64],
    params: &OperatorParams,
) -> Result<f64, OperatorError> {
    let axes = params.dim + 1;
    if j.len() != params.dim || point.len() != axes || cell.space_indices.len() != params.dim {
        return Err(OperatorError::DimensionMismatch {
            expected: axes,
            got: point.len(),
        });
    }
    let mut key = Vec::with_capacity(axes);
    key.push(l);
    key.extend_from_slice(j);
    let slot = field
        .slot(&key)
        .ok_or_else(|| OperatorError::MissingFieldDerivative {
            key: key.clone(),
            max_order: field.max_order(),
        })?;

    let nodes = params.quad.nodes();
    let weights = params.quad.weights();
    let w = params.rate;
    let mut stack = Vec::with_capacity(field.max_stack());
    let mut node_idx = vec![0usize; axes];
    let mut coords = vec![0.0; axes];
    let mut sum = 0.0;
    'nodes: loop {
        let mut weight = 1.0;
        let mut payload = 1.0;
        for axis in 0..axes {
            let base = if axis == 0 {
                cell.time_index
            } else {
                cell.space_indices[axis - 1]
            };
            let u = (base as f64 + nodes[node_idx[axis]]) / w;
            coords[axis] = u;
            weight *= weights[node_idx[axis]];
            let power = if axis == 0 { l } else { j[axis - 1] };
            payload *= (point[axis] - u).powi(power as i32);
        }
        sum += weight * payload * field.eval_slot(slot, &coords, &mut stack);
        for axis in (0..axes).rev() {
            node_idx[axis] += 1;
            if node_idx[axis] < nodes.len() {
                continue 'nodes;
            }
            node_idx[axis] = 0;
        }
        break;
    }
    Ok(sum)
}

// ---------------------------------------------------------------------------
// Fused evaluation plan
// ---------------------------------------------------------------------------

/// Whether the derivative expansion keeps every `(a, b)` term or only the
/// leading `(0, 0)` one (the reduced form: the order `n - (p+|q|)` operator
/// applied to the derivative field, equivalently differentiating the Taylor
/// payload but not the kernels).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Expansion {
    Full,
    Leading,
}

#[derive(Debug, Clone)]
struct Combo {
    /// Index into the distinct derivative bank.
    bank_slot: usize,
    /// Monomial powers per axis: `l` on the time axis, `j_i` on space axes.
    powers: Vec<usize>,
    /// `1 / (l! j!)`.
    inv_fact: f64,
}

#[derive(Debug, Clone)]
struct AbTerm {
    /// `binom(p, a) * prod_i binom(q_i, b_i) * w^{a+|b|}`.
    weight: f64,
    /// Kernel derivative level per axis: `a` then `b_1..b_d`.
    levels: Vec<usize>,
    combos: std::ops::Range<usize>,
}

#[derive(Debug, Clone)]
pub(crate) struct EvalPlan {
    ab_terms: Vec<AbTerm>,
    combos: Vec<Combo>,
    /// Field program slots for the distinct derivatives the combos touch.
    bank_slots: Vec<usize>,
    /// Highest monomial power needed per axis.
    max_powers: Vec<usize>,
}

impl EvalPlan {
    pub(crate) fn build(
        params: &OperatorParams,
        field: &Field,
        p: usize,
        q: &[usize],
        expansion: Expansion,
    ) -> Result<EvalPlan, OperatorError> {
        let dim = params.dim;
        let axes = dim + 1;
        if q.len() != dim {
            return Err(OperatorError::DimensionMismatch {
                expected: dim,
                got: q.len(),
            });
        }
        if field.dim() != dim {
            return Err(OperatorError::DimensionMismatch {
                expected: dim,
                got: field.dim(),
            });
        }
        let total_request = p + q.iter().sum::<usize>();
        if total_request > params.order {
            return Err(OperatorError::Invalid(format!(
                "derivative request p+|q| = {total_request} exceeds operator order {}",
                params.order
            )));
        }
        if p > params.phi.max_derivative() {
            return Err(KernelError::DerivativeUnavailable {
                degree: params.phi.degree(),
                requested: p,
            }
            .into());
        }
        for (i, &qi) in q.iter().enumerate() {
            if qi > params.psi[i].max_derivative() {
                return Err(KernelError::DerivativeUnavailable {
                    degree: params.psi[i].degree(),
                    requested: qi,
                }
                .into());
            }
        }

        // (a, b) terms of the expansion.
        let mut ab_levels: Vec<Vec<usize>> = Vec::new();
        match expansion {
            Expansion::Leading => ab_levels.push(vec![0; axes]),
            Expansion::Full => {
                let mut bounds = Vec::with_capacity(axes);
                bounds.push(p);
                bounds.extend_from_slice(q);
                let mut current = vec![0usize; axes];
                loop {
                    ab_levels.push(current.clone());
                    let mut axis = axes;
                    loop {
                        if axis == 0 {
                            break;
                        }
                        axis -= 1;
                        current[axis] += 1;
                        if current[axis] <= bounds[axis] {
                            break;
                        }
                        current[axis] = 0;
                        if axis == 0 {
                            axis = usize::MAX;
                            break;
                        }
                    }
                    if axis == usize::MAX {
                        break;
                    }
                }
            }
        }

        let w = params.rate;
        let mut ab_terms = Vec::with_capacity(ab_levels.len());
        let mut combos = Vec::new();
        let mut bank_slots: Vec<usize> = Vec::new();
        let mut max_powers = vec![0usize; axes];

        for levels in ab_levels {
            let ab_total: usize = levels.iter().sum();
            let inner_order = params.order - total_request + ab_total;
            let mut weight = binomial(p, levels[0]);
            for i in 0..dim {
                weight *= binomial(q[i], levels[i + 1]);
            }
            weight *= w.powi(ab_total as i32);

            let start = combos.len();
            for indices in multi_indices(axes, inner_order) {
                // Field derivative: payload index plus the request offset.
                let mut key = Vec::with_capacity(axes);
                key.push(indices[0] + p - levels[0]);
                for i in 0..dim {
                    key.push(indices[i + 1] + q[i] - levels[i + 1]);
                }
                let slot =
                    field
                        .slot(&key)
                        .ok_or_else(|| OperatorError::MissingFieldDerivative {
                            key: key.clone(),
                            max_order: field.max_order(),
                        })?;
                let bank_slot = match bank_slots.iter().position(|&s| s == slot) {
                    Some(idx) => idx,
                    None => {
                        bank_slots.push(slot);
                        bank_slots.len() - 1
                    }
                };
                let mut inv_fact = 1.0 / factorial(indices[0]);
                for i in 0..dim {
                    inv_fact /= factorial(indices[i + 1]);
                }
                for axis in 0..axes {
                    max_powers[axis] = max_powers[axis].max(indices[axis]);
                }
                combos.push(Combo {
                    bank_slot,
                    powers: indices,
                    inv_fact,
                });
            }
            ab_terms.push(AbTerm {
                weight,
                levels,
                combos: start..combos.len(),
            });
        }

        Ok(EvalPlan {
            ab_terms,
            combos,
            bank_slots,
            max_powers,
        })
    }
}

/// Reusable per-thread buffers for the cell sweep.
pub(crate) struct Scratch {
    stack: Vec<f64>,
    bank: Vec<f64>,
    quad_acc: Vec<f64>,
    powers: Vec<Vec<f64>>,
    kernel_levels: Vec<Vec<f64>>,
    coords: Vec<f64>,
    cell: Vec<i64>,
    node_idx: Vec<usize>,
    ranges: Vec<RangeInclusive<i64>>,
    point: Vec<f64>,
}

impl Scratch {
    pub(crate) fn new(params: &OperatorParams, field: &Field, plan: &EvalPlan) -> Scratch {
        let axes = params.dim + 1;
        Scratch {
            stack: Vec::with_capacity(field.max_stack()),
            bank: vec![0.0; plan.bank_slots.len()],
            quad_acc: vec![0.0; plan.combos.len()],
            powers: plan.max_powers.iter().map(|&p| vec![1.0; p + 1]).collect(),
            kernel_levels: (0..axes).map(|_| Vec::new()).collect(),
            coords: vec![0.0; axes],
            cell: vec![0; axes],
            node_idx: vec![0; axes],
            ranges: Vec::with_capacity(axes),
            point: vec![0.0; axes],
        }
    }
}

#[derive(Clone, Copy)]
struct Accumulator {
    sum: f64,
    comp: f64,
    compensated: bool,
}

impl Accumulator {
    fn new(compensated: bool) -> Self {
        Accumulator {
            sum: 0.0,
            comp: 0.0,
            compensated,
        }
    }

    #[inline]
    fn add(&mut self, value: f64) {
        if self.compensated {
            // Neumaier update.
            let t = self.sum + value;
            if self.sum.abs() >= value.abs() {
                self.comp += (self.sum - t) + value;
            } else {
                self.comp += (value - t) + self.sum;
            }
            self.sum = t;
        } else {
            self.sum += value;
        }
    }

    fn value(&self) -> f64 {
        if self.compensated {
            self.sum + self.comp
        } else {
            self.sum
        }
    }
}

/// The fused cell sweep. `margin` widens every active index range (used by
/// the truncation-soundness tests; widening adds only zero-weight cells).
pub(crate) fn evaluate_plan_at(
    params: &OperatorParams,
    field: &Field,
    plan: &EvalPlan,
    point: &[f64],
    margin: i64,
    scratch: &mut Scratch,
) -> f64 {
    let axes = params.dim + 1;
    debug_assert_eq!(point.len(), axes);
    let w = params.rate;
    let nodes = params.quad.nodes();
    let weights = params.quad.weights();

    scratch.point.copy_from_slice(point);
    scratch.ranges.clear();
    for axis in 0..axes {
        let range = active_indices(params.kernel_for_axis(axis), w, point[axis]);
        scratch
            .ranges
            .push(range.start() - margin..=range.end() + margin);
    }
    for axis in 0..axes {
        scratch.cell[axis] = *scratch.ranges[axis].start();
    }

    let mut total = Accumulator::new(params.compensated);
    'cells: loop {
        // Kernel factors for every derivative level used by the expansion.
        let mut any_nonzero = false;
        for axis in 0..axes {
            let kernel = params.kernel_for_axis(axis);
            let arg = w * point[axis] - scratch.cell[axis] as f64;
            let max_level = plan
                .ab_terms
                .iter()
                .map(|t| t.levels[axis])
                .max()
                .unwrap_or(0);
            let levels = &mut scratch.kernel_levels[axis];
            levels.clear();
            for level in 0..=max_level {
                let v = kernel.eval_level(level, arg);
                if v != 0.0 {
                    any_nonzero = true;
                }
                levels.push(v);
            }
        }

        if any_nonzero {
            // One quadrature pass accumulating every combo.
            scratch.quad_acc.iter_mut().for_each(|v| *v = 0.0);
            scratch.node_idx.iter_mut().for_each(|v| *v = 0);
            'nodes: loop {
                let mut node_weight = 1.0;
                for axis in 0..axes {
                    let t = nodes[scratch.node_idx[axis]];
                    let u = (scratch.cell[axis] as f64 + t) / w;
                    scratch.coords[axis] = u;
                    node_weight *= weights[scratch.node_idx[axis]];
                    let diff = point[axis] - u;
                    let powers = &mut scratch.powers[axis];
                    for r in 1..powers.len() {
                        powers[r] = powers[r - 1] * diff;
                    }
                }
                for (slot, &field_slot) in plan.bank_slots.iter().enumerate() {
                    scratch.bank[slot] =
                        field.eval_slot(field_slot, &scratch.coords, &mut scratch.stack);
                }
                for (combo, acc) in plan.combos.iter().zip(scratch.quad_acc.iter_mut()) {
                    let mut term = node_weight * scratch.bank[combo.bank_slot];
                    for axis in 0..axes {
                        term *= scratch.powers[axis][combo.powers[axis]];
                    }
                    *acc += term;
                }
                for axis in (0..axes).rev() {
                    scratch.node_idx[axis] += 1;
                    if scratch.node_idx[axis] < nodes.len() {
                        continue 'nodes;
                    }
                    scratch.node_idx[axis] = 0;
                }
                break;
            }

            // Combine per (a, b) term with its kernel factor.
            for ab in &plan.ab_terms {
                let mut kernel_factor = 1.0;
                for axis in 0..axes {
                    kernel_factor *= scratch.kernel_levels[axis][ab.levels[axis]];
                }
                if kernel_factor == 0.0 {
                    continue;
                }
                let mut inner = 0.0;
                for combo_idx in ab.combos.clone() {
                    inner += plan.combos[combo_idx].inv_fact * scratch.quad_acc[combo_idx];
                }
                total.add(ab.weight * kernel_factor * inner);
            }
        }

        // Lexicographic cell odometer.
        for axis in (0..axes).rev() {
            scratch.cell[axis] += 1;
            if scratch.cell[axis] <= *scratch.ranges[axis].end() {
                continue 'cells;
            }
            scratch.cell[axis] = *scratch.ranges[axis].start();
            if axis == 0 {
                break 'cells;
            }
        }
    }
    total.value()
}

pub(crate) fn evaluate_with_request(
    params: &OperatorParams,
    field: &Field,
    p: usize,
    q: &[usize],
    expansion: Expansion,
    point: &[f64],
) -> Result<f64, OperatorError> {
    let axes = params.dim + 1;
    if point.len() != axes {
        return Err(OperatorError::DimensionMismatch {
            expected: axes,
            got: point.len(),
        });
    }
    let plan = EvalPlan::build(params, field, p, q, expansion)?;
    let mut scratch = Scratch::new(params, field, &plan);
    Ok(evaluate_plan_at(
        params,
        field,
        &plan,
        point,
        0,
        &mut scratch,
    ))
}

/// `K_{n,w}^{phi,psi} f` at one point.
pub fn evaluate_operator(
    params: &OperatorParams,
    field: &Field,
    point: &[f64],
) -> Result<f64, OperatorError> {
    evaluate_with_request(
        params,
        field,
        0,
        &vec![0; params.dim],
        Expansion::Full,
        point,
    )
}

pub(crate) fn evaluate_grid_with_request(
    params: &OperatorParams,
    field: &Field,
    p: usize,
    q: &[usize],
    expansion: Expansion,
    grid: &GridSpec,
) -> Result<Surface, OperatorError> {
    let axes = params.dim + 1;
    if grid.num_axes() != axes {
        return Err(OperatorError::DimensionMismatch {
            expected: axes,
            got: grid.num_axes(),
        });
    }
    let plan = EvalPlan::build(params, field, p, q, expansion)?;
    let values: Vec<f64> = (0..grid.len())
        .into_par_iter()
        .map_init(
            || (Scratch::new(params, field, &plan), vec![0.0; axes]),
            |(scratch, coords), flat| {
                grid.write_node(flat, coords);
                evaluate_plan_at(params, field, &plan, coords, 0, scratch)
            },
        )
        .collect();
    Ok(Surface::new(grid.clone(), values)?)
}

/// Operator values at every grid node. Nodes are evaluated independently
/// (possibly in parallel); the result does not depend on the schedule.
pub fn evaluate_on_grid(
    params: &OperatorParams,
    field: &Field,
    grid: &GridSpec,
) -> Result<Surface, OperatorError> {
    evaluate_grid_with_request(
        params,
        field,
        0,
        &vec![0; params.dim],
        Expansion::Full,
        grid,
    )
}
