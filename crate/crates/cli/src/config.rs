//! Experiment configuration: a TOML file, command-line flags, or both
//! (flags override file values).

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use hermite_sampling::{AxisSpec, GridSpec};

use crate::error::AppError;

/// Bundled example fields usable anywhere an expression is accepted.
pub const BUILTIN_EX1: &str = "(1+x)*y/(1+x^2)";
pub const BUILTIN_EX2: &str = "sin(x)*cos(y)";

/// Maps builtin field names to their expressions; anything else is returned
/// unchanged and parsed as an expression.
pub fn resolve_field(text: &str) -> &str {
    match text {
        "paper-ex1" => BUILTIN_EX1,
        "paper-ex2" => BUILTIN_EX2,
        other => other,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Moments,
    Approximate,
    Sweep,
    Voronovskaja,
    Simultaneous,
}

impl std::fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            ExperimentKind::Moments => "moments",
            ExperimentKind::Approximate => "approximate",
            ExperimentKind::Sweep => "sweep",
            ExperimentKind::Voronovskaja => "voronovskaja",
            ExperimentKind::Simultaneous => "simultaneous",
        };
        write!(f, "{name}")
    }
}

fn default_dim() -> usize {
    1
}

fn default_grid_points() -> usize {
    201
}

fn default_quad_nodes() -> usize {
    5
}

fn default_seed() -> u64 {
    42
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,

    /// Expression over `x, y_1..y_d`, or a builtin name.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<String>,

    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,

    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w: Option<f64>,

    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w_list: Option<Vec<f64>>,

    #[serde(default = "default_dim")]
    pub d: usize,

    /// Kernel degree for the `moments` experiment.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub degree: Option<usize>,

    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub degree_phi: Option<usize>,

    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub degree_psi: Option<Vec<usize>>,

    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<usize>,

    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<Vec<usize>>,

    /// Highest moment order for the `moments` experiment.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_order: Option<usize>,

    /// Highest kernel derivative level for the `moments` experiment.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_level: Option<usize>,

    /// Per-axis `[lo, hi]`; one pair replicates across all `d + 1` axes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<Vec<[f64; 2]>>,

    #[serde(default = "default_grid_points")]
    pub grid_points: usize,

    #[serde(default = "default_quad_nodes")]
    pub quad_nodes: usize,

    #[serde(default = "default_seed")]
    pub seed: u64,

    /// Modulus-of-continuity probes per anchor (bound computations).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probes: Option<usize>,

    /// Compute the closed-form error bounds during sweeps.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<bool>,

    /// Evaluation point for the `voronovskaja` experiment.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub point: Option<Vec<f64>>,

    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(experiment: ExperimentKind) -> Self {
        ExperimentConfig {
            experiment,
            field: None,
            n: None,
            w: None,
            w_list: None,
            d: default_dim(),
            degree: None,
            degree_phi: None,
            degree_psi: None,
            p: None,
            q: None,
            max_order: None,
            max_level: None,
            window: None,
            grid_points: default_grid_points(),
            quad_nodes: default_quad_nodes(),
            seed: default_seed(),
            probes: None,
            bounds: None,
            point: None,
            out: None,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, AppError> {
        toml::from_str(text).map_err(|err| AppError::Config(err.to_string()))
    }

    pub fn to_toml(&self) -> Result<String, AppError> {
        toml::to_string(self).map_err(|err| AppError::Config(err.to_string()))
    }

    /// Basic range validation shared by every experiment.
    pub fn validate(&self) -> Result<(), AppError> {
        if self.d == 0 || self.d > 9 {
            return Err(AppError::Validation(format!(
                "spatial dimension d must be in 1..=9, got {}",
                self.d
            )));
        }
        if let Some(w) = self.w {
            if w.is_nan() || w <= 0.0 {
                return Err(AppError::Validation(format!("w must be positive, got {w}")));
            }
        }
        if let Some(list) = &self.w_list {
            if list.is_empty() || list.iter().any(|&w| w.is_nan() || w <= 0.0) {
                return Err(AppError::Validation(
                    "w-list must be non-empty with positive entries".into(),
                ));
            }
        }
        if self.grid_points < 2 {
            return Err(AppError::Validation(format!(
                "grid points per axis must be at least 2, got {}",
                self.grid_points
            )));
        }
        if self.quad_nodes == 0 {
            return Err(AppError::Validation("quad_nodes must be at least 1".into()));
        }
        if let Some(window) = &self.window {
            if window.len() != 1 && window.len() != self.d + 1 {
                return Err(AppError::Validation(format!(
                    "window needs 1 or {} [lo, hi] pairs, got {}",
                    self.d + 1,
                    window.len()
                )));
            }
            for pair in window {
                if pair[0].is_nan() || pair[1].is_nan() || pair[0] >= pair[1] {
                    return Err(AppError::Validation(format!(
                        "window pair [{}, {}] must be increasing",
                        pair[0], pair[1]
                    )));
                }
            }
        }
        Ok(())
    }

    /// The evaluation window as a grid over `d + 1` axes; defaults to
    /// `[-2, 2]` per axis.
    pub fn window_grid(&self) -> Result<GridSpec, AppError> {
        let axes = self.d + 1;
        let pairs: Vec<[f64; 2]> = match &self.window {
            None => vec![[-2.0, 2.0]; axes],
            Some(list) if list.len() == 1 => vec![list[0]; axes],
            Some(list) => list.clone(),
        };
        let specs = pairs
            .into_iter()
            .map(|[lo, hi]| AxisSpec {
                lo,
                hi,
                points: self.grid_points,
            })
            .collect();
        Ok(GridSpec::new(specs)?)
    }

    pub fn require_field(&self) -> Result<&str, AppError> {
        self.field
            .as_deref()
            .ok_or_else(|| AppError::Validation("missing `field`".into()))
    }

    pub fn require_n(&self) -> Result<usize, AppError> {
        self.n
            .ok_or_else(|| AppError::Validation("missing `n` (operator order)".into()))
    }

    /// Sampling rates for sweep-style experiments: `w_list`, or a single `w`.
    pub fn rates(&self) -> Result<Vec<f64>, AppError> {
        if let Some(list) = &self.w_list {
            Ok(list.clone())
        } else if let Some(w) = self.w {
            Ok(vec![w])
        } else {
            Err(AppError::Validation("missing `w` or `w_list`".into()))
        }
    }

    pub fn kernel_degrees(&self) -> (usize, Vec<usize>) {
        let phi = self.degree_phi.unwrap_or(2);
        let psi = self.degree_psi.clone().unwrap_or_else(|| vec![phi; self.d]);
        (phi, psi)
    }
}
