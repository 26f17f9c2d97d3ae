//! Command-line surface of the realization engine: bivector files, reports
//! and the `realize`, `verify` and `examples` commands.

pub mod parse;
pub mod report;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::Value;
use symreal_core::error::Error as CoreError;
use symreal_core::examples::{build_example, catalog};
use symreal_core::{realize, Bivector, Realization};

pub use parse::{parse_bivector_file, render_bivector_file, ParseError};
pub use report::{build_report, Report};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFICATION: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "symreal",
    version,
    about = "Symplectic realizations of quasi-Poisson bivectors"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compute the realization to a given order and print the report.
    Realize(RunArgs),
    /// Compute the realization and check every defect and the bracket contract.
    Verify {
        #[command(flatten)]
        run: RunArgs,
        /// Compare against a stored JSON report; any difference is a failure.
        #[arg(long, value_name = "REPORT")]
        against: Option<PathBuf>,
    },
    /// List the built-in examples.
    Examples {
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false, id = "source")]
struct Source {
    /// Bivector file (`dim`, `param` and `theta` directives).
    #[arg(long, value_name = "FILE")]
    input: Option<PathBuf>,
    /// Built-in example name.
    #[arg(long, value_name = "NAME")]
    example: Option<String>,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[command(flatten)]
    source: Source,
    #[arg(long, value_name = "K")]
    order: usize,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Write the output here instead of standard output.
    #[arg(long, value_name = "PATH")]
    output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
}

/// A failure carrying its exit code.
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_INPUT,
            message: message.into(),
        }
    }
}

impl From<CoreError> for Failure {
    fn from(e: CoreError) -> Self {
        let code = match e {
            CoreError::Consistency { .. } => EXIT_VERIFICATION,
            _ => EXIT_INPUT,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn load(source: &Source) -> Result<Bivector, Failure> {
    match (&source.input, &source.example) {
        (Some(path), None) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Failure::input(format!("cannot read {}: {e}", path.display())))?;
            parse_bivector_file(&text)
                .map_err(|e| Failure::input(format!("{}: {e}", path.display())))
        }
        (None, Some(name)) => Ok(build_example(name)?),
        _ => unreachable!("clap enforces exactly one source"),
    }
}

fn run_realization(args: &RunArgs) -> Result<Realization, Failure> {
    if args.order == 0 {
        return Err(Failure::input("order must be at least 1"));
    }
    let theta = load(&args.source)?;
    Ok(realize(&theta, args.order)?)
}

fn emit(args: &RunArgs, text: &str, out: &mut dyn Write) -> Result<(), Failure> {
    match &args.output {
        Some(path) => fs::write(path, text)
            .map_err(|e| Failure::input(format!("cannot write {}: {e}", path.display()))),
        None => out
            .write_all(text.as_bytes())
            .map_err(|e| Failure::input(format!("cannot write output: {e}"))),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

fn check(name: impl Into<String>, passed: bool) -> Check {
    Check {
        name: name.into(),
        passed,
        detail: None,
    }
}

/// The invariant suite for a completed realization.
pub fn verification_checks(real: &Realization) -> Vec<Check> {
    let d = real.diagnostics();
    let mut checks = vec![check("fundamental identity", d.fundamental_identity_zero)];
    for o in &d.orders {
        checks.push(check(
            format!("cyclicity of G, order {}", o.order),
            o.cyclicity_defect_zero,
        ));
        if let Some(z) = o.four_term_defect_zero {
            checks.push(check(
                format!("four-term relation of F, order {}", o.order),
                z,
            ));
        }
        checks.push(check(
            format!("Gamma totally symmetric part, order {}", o.order),
            o.gamma_symmetric_part_zero,
        ));
        if let Some(z) = o.theta_partial_symmetric_part_zero {
            checks.push(check(
                format!("correction symmetric part, order {}", o.order),
                z,
            ));
        }
    }
    checks.push(check(
        format!("{{x^i, x^j}} = alpha omega mod alpha^{}", real.order() + 1),
        d.contract_holds,
    ));
    checks
}

/// First location where two JSON documents differ, as a path like
/// `gamma[1].entries[3].poly`.
fn first_difference(expected: &Value, actual: &Value, path: &str) -> Option<String> {
    match (expected, actual) {
        (Value::Object(a), Value::Object(b)) => {
            for key in a.keys().chain(b.keys()) {
                let sub = if path.is_empty() {
                    key.clone()
                } else {
                    format!("{path}.{key}")
                };
                match (a.get(key), b.get(key)) {
                    (Some(x), Some(y)) => {
                        if let Some(d) = first_difference(x, y, &sub) {
                            return Some(d);
                        }
                    }
                    _ => return Some(sub),
                }
            }
            None
        }
        (Value::Array(a), Value::Array(b)) => {
            for (k, (x, y)) in a.iter().zip(b).enumerate() {
                if let Some(d) = first_difference(x, y, &format!("{path}[{k}]")) {
                    return Some(d);
                }
            }
            (a.len() != b.len()).then(|| format!("{path} (length {} vs {})", a.len(), b.len()))
        }
        _ => (expected != actual).then(|| path.to_string()),
    }
}

fn against_check(path: &PathBuf, report: &Report) -> Result<Check, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::input(format!("cannot read {}: {e}", path.display())))?;
    let stored: Value = serde_json::from_str(&text)
        .map_err(|e| Failure::input(format!("{} is not a JSON report: {e}", path.display())))?;
    let fresh = serde_json::to_value(report).expect("report serializes");
    let diff = first_difference(&stored, &fresh, "");
    Ok(Check {
        name: format!("matches {}", path.display()),
        passed: diff.is_none(),
        detail: diff.map(|d| format!("differs at {d}")),
    })
}

#[derive(Serialize)]
struct VerifyOutput<'a> {
    passed: bool,
    checks: &'a [Check],
}

fn render_checks(checks: &[Check], format: Format) -> String {
    let passed = checks.iter().all(|c| c.passed);
    match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&VerifyOutput { passed, checks })
                .expect("checks serialize");
            s.push('\n');
            s
        }
        Format::Text => {
            let mut s = String::new();
            for c in checks {
                let status = if c.passed { "ok  " } else { "FAIL" };
                s.push_str(&format!("{status} {}", c.name));
                if let Some(d) = &c.detail {
                    s.push_str(&format!(": {d}"));
                }
                s.push('\n');
            }
            s.push_str(if passed {
                "verified\n"
            } else {
                "verification failed\n"
            });
            s
        }
    }
}

fn cmd_realize(args: &RunArgs, out: &mut dyn Write) -> Result<i32, Failure> {
    let real = run_realization(args)?;
    let rep = build_report(&real);
    let text = match args.format {
        Format::Json => report::to_json(&rep),
        Format::Text => report::to_text(&rep),
    };
    emit(args, &text, out)?;
    Ok(EXIT_OK)
}

fn cmd_verify(
    args: &RunArgs,
    against: Option<&PathBuf>,
    out: &mut dyn Write,
) -> Result<i32, Failure> {
    let checks = match run_realization(args) {
        Ok(real) => {
            let mut checks = verification_checks(&real);
            if let Some(path) = against {
                checks.push(against_check(path, &build_report(&real))?);
            }
            checks
        }
        Err(f) if f.code == EXIT_VERIFICATION => vec![Check {
            name: "realization".into(),
            passed: false,
            detail: Some(f.message),
        }],
        Err(f) => return Err(f),
    };
    emit(args, &render_checks(&checks, args.format), out)?;
    Ok(if checks.iter().all(|c| c.passed) {
        EXIT_OK
    } else {
        EXIT_VERIFICATION
    })
}

#[derive(Serialize)]
struct ExampleRow {
    name: &'static str,
    dim: usize,
    params: Vec<&'static str>,
    description: &'static str,
}

fn cmd_examples(format: Format, out: &mut dyn Write) -> Result<i32, Failure> {
    let rows: Vec<ExampleRow> = catalog()
        .into_iter()
        .map(|s| ExampleRow {
            name: s.name,
            dim: s.dimension,
            params: s.params,
            description: s.description,
        })
        .collect();
    let text = match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&rows).expect("catalog serializes");
            s.push('\n');
            s
        }
        Format::Text => rows
            .iter()
            .map(|r| format!("{:<10} dim {}  {}\n", r.name, r.dim, r.description))
            .collect(),
    };
    out.write_all(text.as_bytes())
        .map_err(|e| Failure::input(format!("cannot write output: {e}")))?;
    Ok(EXIT_OK)
}

/// Runs the command line `args` (program name first) and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let rendered = e.render().to_string();
            let _ = if e.use_stderr() {
                err.write_all(rendered.as_bytes())
            } else {
                out.write_all(rendered.as_bytes())
            };
            return code;
        }
    };
    let result = match &cli.command {
        Command::Realize(args) => cmd_realize(args, out),
        Command::Verify { run, against } => cmd_verify(run, against.as_ref(), out),
        Command::Examples { format } => cmd_examples(*format, out),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}
