//! Small combinatorial helpers shared by the operator and analysis modules.

pub(crate) fn binomial(n: usize, k: usize) -> f64 {
    let mut value = 1.0f64;
    for i in 0..k {
        value = value * (n - i) as f64 / (i + 1) as f64;
    }
    value
}

pub(crate) fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// All multi-indices over `axes` axes with total order at most `max_total`,
/// in lexicographic order.
pub(crate) fn multi_indices(axes: usize, max_total: usize) -> Vec<Vec<usize>> {
    fn rec(axis: usize, remaining: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if axis == current.len() {
            out.push(current.clone());
            return;
        }
        for v in 0..=remaining {
            current[axis] = v;
            rec(axis + 1, remaining - v, current, out);
        }
        current[axis] = 0;
    }
    let mut out = Vec::new();
    let mut current = vec![0usize; axes];
    rec(0, max_total, &mut current, &mut out);
    out
}

/// Multi-indices with total order exactly `total`.
pub(crate) fn multi_indices_exact(axes: usize, total: usize) -> Vec<Vec<usize>> {
    multi_indices(axes, total)
        .into_iter()
        .filter(|idx| idx.iter().sum::<usize>() == total)
        .collect()
}
