//! Experiment dispatch: builds library objects from an [`ExperimentConfig`],
//! runs the computation, writes CSVs, and prints one summary line per result.

use std::path::PathBuf;

use hermite_sampling::{
    convergence_sweep, evaluate_on_grid, evaluate_operator, sup_error_vs_field,
    voronovskaja_constant, DerivativeRequest, Field, Kernel, ModulusSettings, MomentTable,
    OperatorParams, SweepMode, SweepOptions,
};

use crate::config::{resolve_field, ExperimentConfig, ExperimentKind};
use crate::csv::{format_value, write_surface_csv, write_table_csv};
use crate::error::AppError;

pub fn run(config: &ExperimentConfig) -> Result<(), AppError> {
    config.validate()?;
    match config.experiment {
        ExperimentKind::Moments => run_moments(config),
        ExperimentKind::Approximate => run_approximate(config),
        ExperimentKind::Sweep => run_sweep(config),
        ExperimentKind::Voronovskaja => run_voronovskaja(config),
        ExperimentKind::Simultaneous => run_simultaneous(config),
    }
}

fn build_field(config: &ExperimentConfig, max_order: usize) -> Result<Field, AppError> {
    let text = resolve_field(config.require_field()?);
    Ok(Field::from_str(text, config.d, max_order)?)
}

fn build_params(
    config: &ExperimentConfig,
    order: usize,
    rate: f64,
) -> Result<OperatorParams, AppError> {
    let (phi_degree, psi_degrees) = config.kernel_degrees();
    let phi = Kernel::bspline(phi_degree).map_err(|e| AppError::Validation(e.to_string()))?;
    let mut psi = Vec::with_capacity(psi_degrees.len());
    if psi_degrees.len() != config.d {
        return Err(AppError::Validation(format!(
            "degree_psi needs {} entries, got {}",
            config.d,
            psi_degrees.len()
        )));
    }
    for &degree in &psi_degrees {
        psi.push(Kernel::bspline(degree).map_err(|e| AppError::Validation(e.to_string()))?);
    }
    Ok(OperatorParams::new(
        order,
        rate,
        config.d,
        phi,
        psi,
        config.quad_nodes,
    )?)
}

fn out_path(config: &ExperimentConfig, default: &str) -> PathBuf {
    config.out.clone().unwrap_or_else(|| PathBuf::from(default))
}

fn warn_non_finite(label: &str, count: usize) {
    if count > 0 {
        eprintln!("warning: {label} contains {count} non-finite values");
    }
}

fn run_moments(config: &ExperimentConfig) -> Result<(), AppError> {
    let degree = config
        .degree
        .or(config.degree_phi)
        .ok_or_else(|| AppError::Validation("missing `degree`".into()))?;
    let max_order = config.max_order.unwrap_or(degree + 2);
    let kernel = Kernel::bspline(degree).map_err(|e| AppError::Validation(e.to_string()))?;
    let max_level = config.max_level.unwrap_or(0).min(kernel.max_derivative());
    let table = MomentTable::compute(
        &kernel,
        max_order,
        max_level,
        hermite_sampling::moments::DEFAULT_MOMENT_GRID,
    )
    .map_err(|e| AppError::Validation(e.to_string()))?;

    let mut rows = Vec::new();
    for (order, level, stats, absolute) in table.entries() {
        println!(
            "moments degree={degree} order={order} level={level} mean={:.6e} deviation={:.3e} absolute={:.6e}",
            stats.mean, stats.max_deviation, absolute
        );
        rows.push(vec![
            order.to_string(),
            level.to_string(),
            format_value(stats.mean),
            format_value(stats.max_deviation),
            format_value(absolute),
        ]);
    }
    if let Some(path) = &config.out {
        write_table_csv(
            &[
                "order",
                "level",
                "algebraic_mean",
                "algebraic_deviation",
                "absolute",
            ],
            &rows,
            path,
        )?;
        println!(
            "moments degree={degree} grid={} -> {}",
            table.sample_count,
            path.display()
        );
    }
    Ok(())
}

fn run_approximate(config: &ExperimentConfig) -> Result<(), AppError> {
    let n = config.require_n()?;
    let w = config
        .w
        .ok_or_else(|| AppError::Validation("missing `w`".into()))?;
    let field = build_field(config, n.max(1))?;
    let params = build_params(config, n, w)?;
    let grid = config.window_grid()?;
    let surface = evaluate_on_grid(&params, &field, &grid)?;
    warn_non_finite("operator surface", surface.non_finite_count());
    let error = sup_error_vs_field(&surface, &field, &vec![0; config.d + 1])?;
    let path = out_path(config, "surface.csv");
    write_surface_csv(&surface, &path)?;
    println!(
        "approximate n={n} w={w} grid={} E={:.4e} -> {}",
        grid_label(&grid),
        error,
        path.display()
    );
    Ok(())
}

fn grid_label(grid: &hermite_sampling::GridSpec) -> String {
    grid.axes()
        .iter()
        .map(|a| a.points.to_string())
        .collect::<Vec<_>>()
        .join("x")
}

fn run_sweep(config: &ExperimentConfig) -> Result<(), AppError> {
    let n = config.require_n()?;
    let rates = config.rates()?;
    let field = build_field(config, n + 1)?;
    let params = build_params(config, n, rates[0])?;
    let grid = config.window_grid()?;
    let with_bounds = config.bounds.unwrap_or(false);
    let options = SweepOptions {
        mode: SweepMode::Plain,
        with_bound_thm2iii: with_bounds,
        with_bound_thm2ii: with_bounds,
        with_bound_thm5: false,
        modulus: ModulusSettings {
            probes: config.probes.unwrap_or(64),
            seed: config.seed,
        },
        ..SweepOptions::default()
    };
    let outcome = convergence_sweep(&params, &field, &rates, &grid, &options)?;

    let mut rows = Vec::new();
    for (i, report) in outcome.reports.iter().enumerate() {
        let partial = hermite_sampling::fit_log_slope(
            &rates[..=i],
            &outcome.reports[..=i]
                .iter()
                .map(|r| r.measured_error)
                .collect::<Vec<_>>(),
        );
        let mut line = format!(
            "sweep n={n} w={} E={:.4e}",
            report.rate, report.measured_error
        );
        if let Some(bound) = report.bound_thm2iii {
            line.push_str(&format!(" T_thm2iii={bound:.4e}"));
        }
        if let Some(bound) = report.bound_thm2ii {
            line.push_str(&format!(" B_thm2ii={bound:.4e}"));
        }
        println!("{line}");
        rows.push(vec![
            format_value(report.rate),
            format_value(report.measured_error),
            report.bound_thm2iii.map(format_value).unwrap_or_default(),
            report.bound_thm2ii.map(format_value).unwrap_or_default(),
            partial.map(format_value).unwrap_or_else(|| "nan".into()),
        ]);
    }
    if let Some(slope) = outcome.slope {
        println!("sweep n={n} fitted slope={slope:.4}");
    } else {
        println!("sweep n={n} fitted slope=undefined (errors at floating-point floor)");
    }
    let path = out_path(config, "sweep.csv");
    write_table_csv(
        &["w", "E", "T_thm2iii", "B_thm2ii", "slope_partial"],
        &rows,
        &path,
    )?;
    println!("sweep n={n} table -> {}", path.display());
    Ok(())
}

fn run_voronovskaja(config: &ExperimentConfig) -> Result<(), AppError> {
    let n = config.require_n()?;
    let rates = config.rates()?;
    let field = build_field(config, n + 1)?;
    let params = build_params(config, n, rates[0])?;
    let point = config
        .point
        .clone()
        .unwrap_or_else(|| vec![0.0; config.d + 1]);
    if point.len() != config.d + 1 {
        return Err(AppError::Validation(format!(
            "point needs {} coordinates, got {}",
            config.d + 1,
            point.len()
        )));
    }
    let constant = voronovskaja_constant(&field, &params, &point)?;

    let reference = field.eval(&point);
    let mut rows = Vec::new();
    for &w in &rates {
        let value = evaluate_operator(&params.with_rate(w)?, &field, &point)?;
        let scaled = w.powi(n as i32 + 1) * (value - reference);
        println!(
            "voronovskaja n={n} w={w} scaled_residual={scaled:.6e} predicted_constant={constant:.6e}"
        );
        rows.push(vec![
            format_value(w),
            format_value(scaled),
            format_value(constant),
        ]);
    }
    let path = out_path(config, "voronovskaja.csv");
    write_table_csv(
        &["w", "scaled_residual", "predicted_constant"],
        &rows,
        &path,
    )?;
    println!("voronovskaja n={n} table -> {}", path.display());
    Ok(())
}

fn run_simultaneous(config: &ExperimentConfig) -> Result<(), AppError> {
    let n = config.require_n()?;
    let p = config.p.unwrap_or(0);
    let q = config.q.clone().unwrap_or_else(|| vec![0; config.d]);
    if q.len() != config.d {
        return Err(AppError::Validation(format!(
            "q needs {} entries, got {}",
            config.d,
            q.len()
        )));
    }
    let request = DerivativeRequest::new(p, q.clone());
    if request.total() > n {
        return Err(AppError::Validation(format!(
            "p + |q| = {} exceeds n = {n}",
            request.total()
        )));
    }
    let rates = config.rates()?;
    let field = build_field(config, n + 1)?;
    let params = build_params(config, n, rates[0])?;
    let grid = config.window_grid()?;

    let mut reference_key = vec![p];
    reference_key.extend_from_slice(&q);

    if rates.len() == 1 {
        // Single rate: emit the full-derivative surface (figure data) and
        // report both error flavors.
        let w = rates[0];
        let params = params.with_rate(w)?;
        let surface =
            hermite_sampling::evaluate_derivative_on_grid(&params, &field, &request, &grid)?;
        warn_non_finite("derivative surface", surface.non_finite_count());
        let full_error = sup_error_vs_field(&surface, &field, &reference_key)?;
        let reduced = hermite_sampling::evaluate_reduced_derivative_on_grid(
            &params, &field, &request, &grid,
        )?;
        let reduced_error = sup_error_vs_field(&reduced, &field, &reference_key)?;
        let path = out_path(config, "simultaneous.csv");
        write_surface_csv(&surface, &path)?;
        println!(
            "simultaneous n={n} p={p} q={} w={w} E_full={full_error:.4e} E_reduced={reduced_error:.4e} -> {}",
            q_label(&q),
            path.display()
        );
        return Ok(());
    }

    // Rate sweep: measure both the full expansion and the reduced form.
    let full = convergence_sweep(
        &params,
        &field,
        &rates,
        &grid,
        &SweepOptions {
            mode: SweepMode::Derivative(request.clone()),
            ..SweepOptions::default()
        },
    )?;
    let with_bounds = config.bounds.unwrap_or(false);
    let reduced = convergence_sweep(
        &params,
        &field,
        &rates,
        &grid,
        &SweepOptions {
            mode: SweepMode::ReducedDerivative(request.clone()),
            with_bound_thm5: with_bounds,
            modulus: ModulusSettings {
                probes: config.probes.unwrap_or(64),
                seed: config.seed,
            },
            ..SweepOptions::default()
        },
    )?;

    let mut rows = Vec::new();
    for (full_report, reduced_report) in full.reports.iter().zip(&reduced.reports) {
        let mut line = format!(
            "simultaneous n={n} p={p} q={} w={} E_full={:.4e} E_reduced={:.4e}",
            q_label(&q),
            full_report.rate,
            full_report.measured_error,
            reduced_report.measured_error
        );
        if let Some(bound) = reduced_report.bound_thm5 {
            line.push_str(&format!(" B_thm5={bound:.4e}"));
        }
        println!("{line}");
        rows.push(vec![
            format_value(full_report.rate),
            format_value(full_report.measured_error),
            format_value(reduced_report.measured_error),
            reduced_report
                .bound_thm5
                .map(format_value)
                .unwrap_or_default(),
        ]);
    }
    let path = out_path(config, "simultaneous.csv");
    write_table_csv(&["w", "E_full", "E_reduced", "B_thm5"], &rows, &path)?;
    println!("simultaneous n={n} table -> {}", path.display());
    Ok(())
}

fn q_label(q: &[usize]) -> String {
    q.iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(",")
}
