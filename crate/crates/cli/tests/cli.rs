//! End-to-end checks of the binary: exit codes, config handling, artifacts.

use std::fs;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hermite-sampling"))
        .args(args)
        .output()
        .expect("binary runs")
}

#[test]
fn malformed_expression_exits_2_with_offset() {
    let out = run(&[
        "approximate",
        "--field",
        "x +",
        "--n",
        "0",
        "--w",
        "3",
        "--grid",
        "5",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("byte 3"), "stderr: {stderr}");
}

#[test]
fn invalid_window_exits_3() {
    let out = run(&[
        "approximate",
        "--field",
        "paper-ex1",
        "--n",
        "0",
        "--w",
        "3",
        "--window",
        "2,-2",
        "--grid",
        "5",
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn missing_required_keys_exit_3() {
    let out = run(&["approximate", "--field", "paper-ex1", "--w", "3"]);
    assert_eq!(out.status.code(), Some(3));
    let out = run(&["sweep", "--field", "paper-ex1", "--n", "1"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn nonconstant_moment_gate_exits_4() {
    // B_1 kernels at order n = 1: the gate needs constant m_2, which fails.
    let out = run(&[
        "voronovskaja",
        "--field",
        "paper-ex2",
        "--n",
        "1",
        "--w-list",
        "4,8",
        "--degree-phi",
        "1",
        "--point",
        "0.3,0.4",
        "--grid",
        "5",
    ]);
    assert_eq!(out.status.code(), Some(4));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("constant moments"), "stderr: {stderr}");
}

#[test]
fn unwritable_output_exits_5() {
    let out = run(&[
        "approximate",
        "--field",
        "paper-ex1",
        "--n",
        "0",
        "--w",
        "3",
        "--grid",
        "5",
        "--out",
        "/nonexistent-dir/surface.csv",
    ]);
    assert_eq!(out.status.code(), Some(5));
}

#[test]
fn config_file_runs_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("run.toml");
    let out_path = dir.path().join("surface.csv");
    fs::write(
        &config_path,
        format!(
            "experiment = \"approximate\"\nfield = \"paper-ex1\"\nn = 0\nw = 3.0\n\
             grid_points = 5\nwindow = [[-1.0, 1.0]]\nout = \"{}\"\n",
            out_path.display()
        ),
    )
    .unwrap();

    let out = run(&["--config", config_path.to_str().unwrap()]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("approximate n=0 w=3"), "stdout: {stdout}");
    assert!(out_path.exists());
    let csv = fs::read_to_string(&out_path).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "x,y,value");
    assert_eq!(csv.lines().count(), 26);

    // A flag overrides the file value.
    let out = run(&[
        "--config",
        config_path.to_str().unwrap(),
        "approximate",
        "--w",
        "5",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("approximate n=0 w=5"), "stdout: {stdout}");
}

#[test]
fn moments_subcommand_prints_table() {
    let out = run(&["moments", "--degree", "2", "--max-order", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("moments degree=2 order=0 level=0 mean=1.000000e0"));
    assert!(stdout.contains("order=2"));
}

#[test]
fn sweep_writes_table_with_bounds() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("sweep.csv");
    let out = run(&[
        "sweep",
        "--field",
        "paper-ex1",
        "--n",
        "1",
        "--w-list",
        "4,8,16",
        "--grid",
        "31",
        "--bounds",
        "--probes",
        "16",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = fs::read_to_string(&out_path).unwrap();
    assert_eq!(
        csv.lines().next().unwrap(),
        "w,E,T_thm2iii,B_thm2ii,slope_partial"
    );
    assert_eq!(csv.lines().count(), 4);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("fitted slope=-1.9"), "stdout: {stdout}");
}

#[test]
fn simultaneous_single_rate_emits_surface() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("deriv.csv");
    let out = run(&[
        "simultaneous",
        "--field",
        "paper-ex2",
        "--n",
        "2",
        "--p",
        "1",
        "--q",
        "1",
        "--w",
        "4",
        "--degree-phi",
        "3",
        "--grid",
        "9",
        "--window",
        "-1,1",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("E_full="), "stdout: {stdout}");
    assert!(stdout.contains("E_reduced="), "stdout: {stdout}");
    let csv = fs::read_to_string(&out_path).unwrap();
    assert_eq!(csv.lines().count(), 82);
}

#[test]
fn no_subcommand_and_no_config_errors() {
    let out = run(&[]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn all_recipes_parse_and_validate() {
    let recipes = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../recipes");
    let mut seen = 0;
    for entry in fs::read_dir(recipes).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().and_then(|e| e.to_str()) != Some("toml") {
            continue;
        }
        let text = fs::read_to_string(&path).unwrap();
        let config = hermite_sampling_cli::config::ExperimentConfig::from_toml(&text)
            .unwrap_or_else(|err| panic!("{}: {err}", path.display()));
        config
            .validate()
            .unwrap_or_else(|err| panic!("{}: {err}", path.display()));
        seen += 1;
    }
    assert!(seen >= 10, "expected the checked-in recipes, found {seen}");
}
