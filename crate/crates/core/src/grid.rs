//! Evaluation grids and sampled surfaces.

use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum GridError {
    #[error("axis {axis}: lo {lo} must be below hi {hi}")]
    InvalidRange { axis: usize, lo: f64, hi: f64 },

    #[error("axis {axis}: needs at least one point")]
    NoPoints { axis: usize },

    #[error("grids do not match: {0}")]
    Mismatch(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisSpec {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl AxisSpec {
    pub fn coord(&self, i: usize) -> f64 {
        if self.points == 1 {
            self.lo
        } else {
            self.lo + (self.hi - self.lo) * i as f64 / (self.points - 1) as f64
        }
    }
}

/// A rectangular grid over `d + 1` axes (time axis first).
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    axes: Vec<AxisSpec>,
}

impl GridSpec {
    pub fn new(axes: Vec<AxisSpec>) -> Result<GridSpec, GridError> {
        for (i, axis) in axes.iter().enumerate() {
            if axis.points == 0 {
                return Err(GridError::NoPoints { axis: i });
            }
            let degenerate = axis.lo.is_nan() || axis.hi.is_nan() || axis.lo >= axis.hi;
            if degenerate && axis.points > 1 {
                return Err(GridError::InvalidRange {
                    axis: i,
                    lo: axis.lo,
                    hi: axis.hi,
                });
            }
        }
        Ok(GridSpec { axes })
    }

    /// Same `[lo, hi]` and resolution on every axis.
    pub fn square(lo: f64, hi: f64, points: usize, axes: usize) -> Result<GridSpec, GridError> {
        GridSpec::new(vec![AxisSpec { lo, hi, points }; axes])
    }

    pub fn axes(&self) -> &[AxisSpec] {
        &self.axes
    }

    pub fn num_axes(&self) -> usize {
        self.axes.len()
    }

    /// Total number of nodes.
    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.points).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Node coordinates for a flat row-major index (first axis outermost).
    pub fn node(&self, flat: usize) -> Vec<f64> {
        let mut coords = vec![0.0; self.axes.len()];
        self.write_node(flat, &mut coords);
        coords
    }

    /// Writes the node coordinates for a flat index into `coords`.
    pub fn write_node(&self, flat: usize, coords: &mut [f64]) {
        let mut rem = flat;
        for (axis, spec) in self.axes.iter().enumerate().rev() {
            let i = rem % spec.points;
            rem /= spec.points;
            coords[axis] = spec.coord(i);
        }
    }
}

/// Grid values in row-major order over the first axis.
#[derive(Debug, Clone, PartialEq)]
pub struct Surface {
    pub grid: GridSpec,
    pub values: Vec<f64>,
}

impl Surface {
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Surface, GridError> {
        if grid.len() != values.len() {
            return Err(GridError::Mismatch(format!(
                "grid has {} nodes but {} values were provided",
                grid.len(),
                values.len()
            )));
        }
        Ok(Surface { grid, values })
    }

    /// Number of non-finite entries; callers surface a warning when nonzero.
    pub fn non_finite_count(&self) -> usize {
        self.values.iter().filter(|v| !v.is_finite()).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn row_major_node_order() {
        let grid = GridSpec::new(vec![
            AxisSpec {
                lo: 0.0,
                hi: 1.0,
                points: 2,
            },
            AxisSpec {
                lo: 0.0,
                hi: 10.0,
                points: 3,
            },
        ])
        .unwrap();
        assert_eq!(grid.len(), 6);
        assert_eq!(grid.node(0), vec![0.0, 0.0]);
        assert_eq!(grid.node(1), vec![0.0, 5.0]);
        assert_eq!(grid.node(2), vec![0.0, 10.0]);
        assert_eq!(grid.node(3), vec![1.0, 0.0]);
        assert_eq!(grid.node(5), vec![1.0, 10.0]);
    }

    #[test]
    fn single_point_axis_sits_at_lo() {
        let grid = GridSpec::new(vec![AxisSpec {
            lo: 0.25,
            hi: 0.25,
            points: 1,
        }])
        .unwrap();
        assert_eq!(grid.node(0), vec![0.25]);
    }

    #[test]
    fn validation() {
        assert!(GridSpec::new(vec![AxisSpec {
            lo: 1.0,
            hi: 0.0,
            points: 5
        }])
        .is_err());
        assert!(GridSpec::new(vec![AxisSpec {
            lo: 0.0,
            hi: 1.0,
            points: 0
        }])
        .is_err());
        let grid = GridSpec::square(-2.0, 2.0, 3, 2).unwrap();
        assert!(Surface::new(grid, vec![0.0; 8]).is_err());
    }
}
