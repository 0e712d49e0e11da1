//! Experiment runner for Hermite-type sampling Kantorovich operators.
//!
//! Configuration comes from a TOML file (`--config`), command-line flags, or
//! both; flags override file values. Each run writes CSV artifacts and one
//! summary line per result to stdout. Exit codes: 0 success, 2 config or
//! expression parse error, 3 validation error, 4 numerical gate failure,
//! 5 I/O error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use hermite_sampling_cli::config::{ExperimentConfig, ExperimentKind};
use hermite_sampling_cli::error::AppError;
use hermite_sampling_cli::experiments;

#[derive(Parser, Debug)]
#[command(
    name = "hermite-sampling",
    version,
    about = "Sampling Kantorovich operator experiments"
)]
struct Cli {
    /// TOML config file; command-line flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Args, Debug, Default, Clone)]
struct CommonArgs {
    /// Target field: an expression over x, y (e.g. "sin(x)*cos(y)") or a
    /// builtin name (paper-ex1, paper-ex2).
    #[arg(long)]
    field: Option<String>,

    /// Operator order n.
    #[arg(long)]
    n: Option<usize>,

    /// Sampling rate w.
    #[arg(long)]
    w: Option<f64>,

    /// Comma-separated sampling rates, e.g. "3,7,12".
    #[arg(long = "w-list", value_delimiter = ',')]
    w_list: Option<Vec<f64>>,

    /// Spatial dimension d.
    #[arg(long)]
    d: Option<usize>,

    /// B-spline degree of the time kernel phi.
    #[arg(long = "degree-phi")]
    degree_phi: Option<usize>,

    /// Comma-separated B-spline degrees of the space kernels psi_i.
    #[arg(long = "degree-psi", value_delimiter = ',')]
    degree_psi: Option<Vec<usize>>,

    /// Evaluation window "lo,hi" (all axes) or "lo,hi,lo,hi,..." per axis.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    window: Option<Vec<f64>>,

    /// Grid points per axis.
    #[arg(long)]
    grid: Option<usize>,

    /// Gauss-Legendre nodes per axis.
    #[arg(long = "quad-nodes")]
    quad_nodes: Option<usize>,

    /// Seed for the modulus-of-continuity probes.
    #[arg(long)]
    seed: Option<u64>,

    /// Output CSV path.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Tabulate algebraic and absolute moments of a B-spline kernel.
    Moments {
        /// B-spline degree.
        #[arg(long)]
        degree: Option<usize>,
        /// Highest moment order.
        #[arg(long = "max-order")]
        max_order: Option<usize>,
        /// Highest kernel derivative level.
        #[arg(long = "max-level")]
        max_level: Option<usize>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Evaluate the operator on a grid and report the sup error.
    Approximate {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Measure errors (optionally with bounds) over a list of rates.
    Sweep {
        /// Also compute the closed-form error bounds.
        #[arg(long)]
        bounds: bool,
        /// Modulus-of-continuity probes per anchor.
        #[arg(long)]
        probes: Option<usize>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Scaled residuals against the asymptotic constant at a point.
    Voronovskaja {
        /// Evaluation point "x,y".
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        point: Option<Vec<f64>>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Derivatives of the operator: surfaces and error tables.
    Simultaneous {
        /// Time-derivative order p.
        #[arg(long)]
        p: Option<usize>,
        /// Comma-separated space-derivative orders q_1..q_d.
        #[arg(long, value_delimiter = ',')]
        q: Option<Vec<usize>>,
        /// Also compute the simultaneous modulus bound.
        #[arg(long)]
        bounds: bool,
        /// Modulus-of-continuity probes per anchor.
        #[arg(long)]
        probes: Option<usize>,
        #[command(flatten)]
        common: CommonArgs,
    },
}

impl Command {
    fn kind(&self) -> ExperimentKind {
        match self {
            Command::Moments { .. } => ExperimentKind::Moments,
            Command::Approximate { .. } => ExperimentKind::Approximate,
            Command::Sweep { .. } => ExperimentKind::Sweep,
            Command::Voronovskaja { .. } => ExperimentKind::Voronovskaja,
            Command::Simultaneous { .. } => ExperimentKind::Simultaneous,
        }
    }

    fn common(&self) -> &CommonArgs {
        match self {
            Command::Moments { common, .. }
            | Command::Approximate { common }
            | Command::Sweep { common, .. }
            | Command::Voronovskaja { common, .. }
            | Command::Simultaneous { common, .. } => common,
        }
    }
}

fn window_pairs(flat: &[f64]) -> Result<Vec<[f64; 2]>, AppError> {
    if !flat.len().is_multiple_of(2) || flat.is_empty() {
        return Err(AppError::Validation(
            "window needs an even number of values: lo,hi[,lo,hi...]".into(),
        ));
    }
    Ok(flat.chunks(2).map(|c| [c[0], c[1]]).collect())
}

fn assemble(cli: &Cli) -> Result<ExperimentConfig, AppError> {
    let mut config = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|err| AppError::Io(format!("{}: {err}", path.display())))?;
            ExperimentConfig::from_toml(&text)?
        }
        None => {
            let command = cli
                .command
                .as_ref()
                .ok_or_else(|| AppError::Validation("provide a subcommand or --config".into()))?;
            ExperimentConfig::new(command.kind())
        }
    };

    if let Some(command) = &cli.command {
        config.experiment = command.kind();
        let common = command.common();
        if let Some(v) = &common.field {
            config.field = Some(v.clone());
        }
        if let Some(v) = common.n {
            config.n = Some(v);
        }
        if let Some(v) = common.w {
            config.w = Some(v);
        }
        if let Some(v) = &common.w_list {
            config.w_list = Some(v.clone());
        }
        if let Some(v) = common.d {
            config.d = v;
        }
        if let Some(v) = common.degree_phi {
            config.degree_phi = Some(v);
        }
        if let Some(v) = &common.degree_psi {
            config.degree_psi = Some(v.clone());
        }
        if let Some(v) = &common.window {
            config.window = Some(window_pairs(v)?);
        }
        if let Some(v) = common.grid {
            config.grid_points = v;
        }
        if let Some(v) = common.quad_nodes {
            config.quad_nodes = v;
        }
        if let Some(v) = common.seed {
            config.seed = v;
        }
        if let Some(v) = &common.out {
            config.out = Some(v.clone());
        }
        match command {
            Command::Moments {
                degree,
                max_order,
                max_level,
                ..
            } => {
                if let Some(v) = degree {
                    config.degree = Some(*v);
                }
                if let Some(v) = max_order {
                    config.max_order = Some(*v);
                }
                if let Some(v) = max_level {
                    config.max_level = Some(*v);
                }
            }
            Command::Sweep { bounds, probes, .. } => {
                if *bounds {
                    config.bounds = Some(true);
                }
                if let Some(v) = probes {
                    config.probes = Some(*v);
                }
            }
            Command::Voronovskaja { point, .. } => {
                if let Some(v) = point {
                    config.point = Some(v.clone());
                }
            }
            Command::Simultaneous {
                p,
                q,
                bounds,
                probes,
                ..
            } => {
                if let Some(v) = p {
                    config.p = Some(*v);
                }
                if let Some(v) = q {
                    config.q = Some(v.clone());
                }
                if *bounds {
                    config.bounds = Some(true);
                }
                if let Some(v) = probes {
                    config.probes = Some(*v);
                }
            }
            Command::Approximate { .. } => {}
        }
    }
    Ok(config)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = assemble(&cli).and_then(|config| experiments::run(&config));
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
