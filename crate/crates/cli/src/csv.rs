//! CSV emission and re-reading. Values print with 17 significant digits so
//! files round-trip bit-exactly; all output is locale-independent.

use std::fs;
use std::path::Path;

use hermite_sampling::{AxisSpec, GridSpec, Surface};

use crate::error::AppError;

/// 17 significant digits: enough for an exact f64 round trip.
pub fn format_value(v: f64) -> String {
    format!("{v:.16e}")
}

fn axis_names(axes: usize) -> Vec<String> {
    let mut names = vec!["x".to_string()];
    if axes == 2 {
        names.push("y".to_string());
    } else {
        for i in 1..axes {
            names.push(format!("y{i}"));
        }
    }
    names
}

/// Header row then one row per grid node, row-major over the first axis.
pub fn surface_to_csv(surface: &Surface) -> String {
    let axes = surface.grid.num_axes();
    let mut out = String::new();
    out.push_str(&axis_names(axes).join(","));
    out.push_str(",value\n");
    let mut coords = vec![0.0; axes];
    for (flat, value) in surface.values.iter().enumerate() {
        surface.grid.write_node(flat, &mut coords);
        for c in &coords {
            out.push_str(&format_value(*c));
            out.push(',');
        }
        out.push_str(&format_value(*value));
        out.push('\n');
    }
    out
}

pub fn write_surface_csv(surface: &Surface, path: &Path) -> Result<(), AppError> {
    fs::write(path, surface_to_csv(surface)).map_err(AppError::from)
}

/// Rebuilds a surface from its CSV form. Axis specs are recovered from the
/// coordinate columns (first/last distinct values and their count), so
/// re-emitting a read surface reproduces the file byte for byte.
pub fn read_surface_csv(path: &Path) -> Result<Surface, AppError> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| AppError::Validation("empty CSV".into()))?;
    let axes = header.split(',').count() - 1;
    if axes == 0 {
        return Err(AppError::Validation(
            "surface CSV needs coordinate columns".into(),
        ));
    }
    let mut coords: Vec<Vec<f64>> = vec![Vec::new(); axes];
    let mut values = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != axes + 1 {
            return Err(AppError::Validation(format!(
                "line {}: expected {} fields, got {}",
                lineno + 2,
                axes + 1,
                fields.len()
            )));
        }
        for (axis, field) in fields[..axes].iter().enumerate() {
            coords[axis].push(parse_value(field, lineno)?);
        }
        values.push(parse_value(fields[axes], lineno)?);
    }
    // Distinct coordinates per axis, in first-seen order.
    let mut specs = Vec::with_capacity(axes);
    for axis_coords in &coords {
        let mut distinct: Vec<f64> = Vec::new();
        for &c in axis_coords {
            if !distinct.contains(&c) {
                distinct.push(c);
            }
        }
        let lo = *distinct.first().unwrap();
        let hi = *distinct.last().unwrap();
        specs.push(AxisSpec {
            lo,
            hi: if distinct.len() == 1 { lo } else { hi },
            points: distinct.len(),
        });
    }
    let grid = GridSpec::new(specs)?;
    Ok(Surface::new(grid, values)?)
}

fn parse_value(text: &str, lineno: usize) -> Result<f64, AppError> {
    text.parse::<f64>()
        .map_err(|_| AppError::Validation(format!("line {}: invalid number `{text}`", lineno + 2)))
}

/// Generic small-table writer: a header and rows of preformatted cells.
pub fn write_table_csv(header: &[&str], rows: &[Vec<String>], path: &Path) -> Result<(), AppError> {
    let mut out = String::new();
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    fs::write(path, out).map_err(AppError::from)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tiny_surface_has_header_plus_one_row_per_node() {
        let grid = GridSpec::square(0.0, 1.0, 2, 2).unwrap();
        let surface = Surface::new(grid, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let text = surface_to_csv(&surface);
        assert_eq!(text.lines().count(), 5);
        assert!(text.starts_with("x,y,value\n"));
    }

    #[test]
    fn formatted_values_round_trip() {
        for &v in &[0.1, -2.323e-1, 1.0 / 3.0, 5.5e-18, 123456.789] {
            let parsed: f64 = format_value(v).parse().unwrap();
            assert_eq!(parsed, v);
        }
    }

    #[test]
    fn read_then_reemit_is_byte_identical() {
        let grid = GridSpec::square(-1.0, 1.0, 5, 2).unwrap();
        let values: Vec<f64> = (0..25).map(|i| (i as f64 * 0.731).sin()).collect();
        let surface = Surface::new(grid, values).unwrap();
        let dir = std::env::temp_dir().join("hermite-sampling-csv-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("roundtrip.csv");
        write_surface_csv(&surface, &path).unwrap();
        let original = fs::read(&path).unwrap();
        let read_back = read_surface_csv(&path).unwrap();
        assert_eq!(read_back, surface);
        assert_eq!(surface_to_csv(&read_back).into_bytes(), original);
    }
}
