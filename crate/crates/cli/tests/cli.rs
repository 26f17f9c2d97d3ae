use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use proptest::prelude::*;
use serde_json::Value;
use symreal_cli::{parse_bivector_file, render_bivector_file};
use symreal_core::examples::build_r_flux;
use symreal_core::testing::random_quasi_poisson;

fn manifest_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

fn fixture(name: &str) -> String {
    manifest_dir()
        .join("tests/fixtures")
        .join(name)
        .display()
        .to_string()
}

fn symreal(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_symreal"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

/// Compares against `tests/golden/<name>`; `UPDATE_GOLDEN=1` rewrites it.
fn assert_golden(name: &str, actual: &str) {
    let path = manifest_dir().join("tests/golden").join(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        fs::write(&path, actual).unwrap();
        return;
    }
    let expected = fs::read_to_string(&path)
        .unwrap_or_else(|e| panic!("missing golden {}: {e}", path.display()));
    assert_eq!(actual, expected, "output differs from {}", path.display());
}

fn golden_path(name: &str) -> String {
    manifest_dir()
        .join("tests/golden")
        .join(name)
        .display()
        .to_string()
}

#[test]
fn r_flux_json_golden() {
    let o = symreal(&[
        "realize",
        "--example",
        "r-flux",
        "--order",
        "3",
        "--format",
        "json",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_golden("r_flux_order3.json", &stdout(&o));
}

#[test]
fn su2_text_golden() {
    let o = symreal(&["realize", "--example", "su2", "--order", "3"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_golden("su2_order3.txt", &stdout(&o));
}

#[test]
fn file_input_golden() {
    let input = fixture("quasi.txt");
    let o = symreal(&[
        "realize", "--input", &input, "--order", "2", "--format", "json",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_golden("quasi_order2.json", &stdout(&o));
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let args = [
        "realize",
        "--example",
        "octonion",
        "--order",
        "3",
        "--format",
        "json",
    ];
    let a = symreal(&args);
    let b = symreal(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn r_flux_has_a_single_nonzero_gamma_order() {
    let o = symreal(&[
        "realize",
        "--example",
        "r-flux",
        "--order",
        "3",
        "--format",
        "json",
    ]);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["dim"], 6);
    assert_eq!(v["order"], 3);
    let gamma = v["gamma"].as_array().unwrap();
    assert_eq!(gamma.len(), 3);
    let nonzero: Vec<u64> = gamma
        .iter()
        .filter(|g| !g["entries"].as_array().unwrap().is_empty())
        .map(|g| g["order"].as_u64().unwrap())
        .collect();
    assert_eq!(nonzero, vec![1]);
    let first = &gamma[0]["entries"][0];
    assert_eq!(first["lead"], serde_json::json!([1]));
    assert_eq!(first["tail"], serde_json::json!([2]));
}

#[test]
fn octonion_verifies_at_order_four() {
    let o = symreal(&["verify", "--example", "octonion", "--order", "4"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).ends_with("verified\n"));
}

#[test]
fn coupled_su2_file_verifies() {
    let input = fixture("su2_coupled.txt");
    let o = symreal(&[
        "verify", "--input", &input, "--order", "3", "--format", "json",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["passed"], true);
}

#[test]
fn order_zero_is_an_input_error() {
    let o = symreal(&["realize", "--example", "su2", "--order", "0"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("order must be at least 1"));
}

#[test]
fn input_errors_exit_with_two() {
    let o = symreal(&[
        "realize",
        "--input",
        &fixture("bad_syntax.txt"),
        "--order",
        "1",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 2, column 16"), "{}", stderr(&o));

    let o = symreal(&[
        "realize",
        "--input",
        &fixture("undeclared.txt"),
        "--order",
        "1",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("undeclared identifier `Q`"));

    let o = symreal(&["realize", "--example", "nope", "--order", "1"]);
    assert_eq!(o.status.code(), Some(2));

    let o = symreal(&["realize", "--input", "/nonexistent/file", "--order", "1"]);
    assert_eq!(o.status.code(), Some(2));

    let o = symreal(&["realize", "--order", "1"]);
    assert_eq!(o.status.code(), Some(2));

    let o = symreal(&[
        "realize",
        "--example",
        "su2",
        "--input",
        &fixture("quasi.txt"),
        "--order",
        "1",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn output_flag_writes_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let p = path.display().to_string();
    let o = symreal(&[
        "realize",
        "--example",
        "r-flux",
        "--order",
        "3",
        "--format",
        "json",
        "--output",
        &p,
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let golden = fs::read_to_string(golden_path("r_flux_order3.json")).unwrap();
    assert_eq!(fs::read_to_string(&path).unwrap(), golden);
}

#[test]
fn verify_against_the_stored_report() {
    let o = symreal(&[
        "verify",
        "--example",
        "r-flux",
        "--order",
        "3",
        "--against",
        &golden_path("r_flux_order3.json"),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
}

fn corrupted_copy(dir: &Path, edit: impl FnOnce(&mut Value)) -> String {
    let mut v: Value =
        serde_json::from_str(&fs::read_to_string(golden_path("r_flux_order3.json")).unwrap())
            .unwrap();
    edit(&mut v);
    let path = dir.join("corrupt.json");
    fs::write(&path, serde_json::to_string_pretty(&v).unwrap()).unwrap();
    path.display().to_string()
}

type Edit = Box<dyn FnOnce(&mut Value)>;

#[test]
fn corrupted_reports_fail_verification() {
    let dir = tempfile::tempdir().unwrap();
    let cases: Vec<(&str, Edit)> = vec![
        (
            "gamma[0].entries[0].poly",
            Box::new(|v| v["gamma"][0]["entries"][0]["poly"] = "-1/3*r*y6".into()),
        ),
        (
            "theta_corrections[0].entries[0].poly",
            Box::new(|v| v["theta_corrections"][0]["entries"][0]["poly"] = "r".into()),
        ),
        (
            "jacobiator[0].poly",
            Box::new(|v| v["jacobiator"][0]["poly"] = "2*r".into()),
        ),
        (
            "gamma[1].entries",
            Box::new(|v| {
                v["gamma"][1]["entries"] =
                    serde_json::json!([{"lead": [1], "tail": [1, 2], "poly": "r"}])
            }),
        ),
        (
            "diagnostics.contract_holds",
            Box::new(|v| v["diagnostics"]["contract_holds"] = false.into()),
        ),
    ];
    for (location, edit) in cases {
        let path = corrupted_copy(dir.path(), edit);
        let o = symreal(&[
            "verify",
            "--example",
            "r-flux",
            "--order",
            "3",
            "--against",
            &path,
        ]);
        assert_eq!(
            o.status.code(),
            Some(1),
            "corruption at {location} was not caught"
        );
        assert!(
            stdout(&o).contains(&format!("differs at {location}")),
            "{}",
            stdout(&o)
        );
    }
}

#[test]
fn examples_lists_the_catalog() {
    let o = symreal(&["examples", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    let names: Vec<&str> = v
        .as_array()
        .unwrap()
        .iter()
        .map(|e| e["name"].as_str().unwrap())
        .collect();
    assert_eq!(names, ["r-flux", "su2", "octonion", "mtheory"]);
}

#[test]
fn parameters_survive_the_round_trip() {
    let t = build_r_flux();
    assert_eq!(parse_bivector_file(&render_bivector_file(&t)).unwrap(), t);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn parse_inverts_render(seed in any::<u64>(), dim in 2usize..=5, degree in 0u32..=3) {
        let t = random_quasi_poisson(seed, dim, degree);
        let text = render_bivector_file(&t);
        prop_assert_eq!(parse_bivector_file(&text).unwrap(), t);
    }
}
