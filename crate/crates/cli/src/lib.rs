//! Command dispatch for the `rnm` binary. `run` is a pure function from argv and
//! the filesystem to a `CommandResult`, which keeps every command testable and
//! byte-reproducible.

use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use rnm_core::convexity::{ModulusQuery, ModulusVariant, SearchConfig};
use rnm_core::json::{self, JsonValue};
use rnm_core::{grand_stratum, Error, LocalFunction};

/// Exit codes: 0 success, 1 failed verification, 2 precondition violation,
/// 3 expression/parse error, 4 schema/IO error, 5 convergence failure.
pub struct CommandResult {
    pub exit_code: i32,
    pub payload: String,
    pub diagnostics: Vec<String>,
}

impl CommandResult {
    fn ok(payload: String, diagnostics: Vec<String>) -> Self {
        CommandResult {
            exit_code: 0,
            payload,
            diagnostics,
        }
    }

    fn fail(exit_code: i32, message: String) -> Self {
        CommandResult {
            exit_code,
            payload: String::new(),
            diagnostics: vec![message],
        }
    }
}

fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::Precondition(_) => 2,
        Error::Parse { .. } | Error::Domain { .. } => 3,
        Error::Schema(_) => 4,
        Error::Convergence(_) => 5,
        Error::Sampling(_) => 5,
    }
}

#[derive(Parser)]
#[command(
    name = "rnm",
    version,
    about = "Random normed modules over finite atomic probability spaces",
    disable_help_subcommand = true
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Inspect space and module spec files
    Space {
        #[command(subcommand)]
        cmd: SpaceCmd,
    },
    /// Random norm of an element, atom by atom
    Norm {
        #[arg(long)]
        space: PathBuf,
        #[arg(long)]
        element: PathBuf,
    },
    /// Modulus-of-random-convexity estimates on a stratum
    Modulus {
        #[arg(long)]
        space: PathBuf,
        /// Comma-separated atom ids forming the stratum
        #[arg(long)]
        set: String,
        /// Constant gap target (exclusive with --eps-file)
        #[arg(long)]
        eps: Option<f64>,
        /// Per-atom gap targets as an L0 JSON file
        #[arg(long)]
        eps_file: Option<PathBuf>,
        /// def | eq | ball | ball-eq
        #[arg(long, default_value = "def")]
        variant: String,
        #[arg(long, default_value_t = 2048)]
        grid: usize,
        #[arg(long)]
        seed: u64,
        /// Also write atom_id,eps,variant,estimate rows
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Solve f(eta) = xi with Y1 <= eta <= Y2, atom by atom
    Ivt {
        #[arg(long)]
        space: PathBuf,
        /// Expression in the variable x, e.g. "x^3 - c"
        #[arg(long)]
        f: String,
        /// Constant bindings NAME=FILE (L0 JSON), repeatable
        #[arg(long)]
        bind: Vec<String>,
        #[arg(long)]
        y1: PathBuf,
        #[arg(long)]
        y2: PathBuf,
        #[arg(long)]
        xi: PathBuf,
        #[arg(long)]
        tol: f64,
    },
    /// Run a verification suite
    Verify {
        /// thm12 | lem31 | lem32 | lem33 | prop31 | prop32 | cor21 | hb | axioms
        #[arg(long)]
        suite: String,
        #[arg(long)]
        seed: u64,
    },
    /// Modulus estimate for the derived Lp space
    #[command(name = "lp-modulus")]
    LpModulus {
        #[arg(long)]
        space: PathBuf,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        samples: usize,
        #[arg(long)]
        seed: u64,
    },
}

#[derive(Subcommand)]
enum SpaceCmd {
    /// Validate a space or module spec file
    Validate { file: PathBuf },
}

pub fn run(argv: &[String]) -> CommandResult {
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    CommandResult::ok(e.to_string(), Vec::new())
                }
                _ => CommandResult::fail(2, e.to_string()),
            }
        }
    };
    let outcome = match cli.cmd {
        Cmd::Space { cmd } => match cmd {
            SpaceCmd::Validate { file } => cmd_space_validate(&file),
        },
        Cmd::Norm { space, element } => cmd_norm(&space, &element),
        Cmd::Modulus {
            space,
            set,
            eps,
            eps_file,
            variant,
            grid,
            seed,
            csv,
        } => cmd_modulus(
            &space,
            &set,
            eps,
            eps_file.as_deref(),
            &variant,
            grid,
            seed,
            csv.as_deref(),
        ),
        Cmd::Ivt {
            space,
            f,
            bind,
            y1,
            y2,
            xi,
            tol,
        } => cmd_ivt(&space, &f, &bind, &y1, &y2, &xi, tol),
        Cmd::Verify { suite, seed } => cmd_verify(&suite, seed),
        Cmd::LpModulus {
            space,
            p,
            eps,
            samples,
            seed,
        } => cmd_lp_modulus(&space, p, eps, samples, seed),
    };
    match outcome {
        Ok(result) => result,
        Err(err) => CommandResult::fail(exit_code_for(&err), err.to_string()),
    }
}

fn read_file(path: &Path) -> Result<String, Error> {
    std::fs::read_to_string(path)
        .map_err(|e| Error::schema(format!("cannot read '{}': {e}", path.display())))
}

fn id_list(event_ids: Vec<&str>) -> JsonValue {
    JsonValue::Arr(
        event_ids
            .into_iter()
            .map(|s| JsonValue::Str(s.to_string()))
            .collect(),
    )
}

fn cmd_space_validate(file: &Path) -> Result<CommandResult, Error> {
    let text = read_file(file)?;
    let mut fields = Vec::new();
    if json::json_has_dims(&text)? {
        let spec = json::spec_from_json(&text)?;
        let support = spec.support();
        let grand = grand_stratum(&spec);
        fields.push(("ok".into(), JsonValue::Bool(true)));
        fields.push(("kind".into(), JsonValue::Str("module-spec".into())));
        fields.push(("atoms".into(), JsonValue::Int(spec.space().len() as i64)));
        fields.push(("support".into(), id_list(support.ids())));
        fields.push(("grand_stratum".into(), id_list(grand.ids())));
    } else {
        let space = json::space_from_json(&text)?;
        fields.push(("ok".into(), JsonValue::Bool(true)));
        fields.push(("kind".into(), JsonValue::Str("space".into())));
        fields.push(("atoms".into(), JsonValue::Int(space.len() as i64)));
    }
    Ok(CommandResult::ok(
        JsonValue::Obj(fields).render(),
        Vec::new(),
    ))
}

fn cmd_norm(space: &Path, element: &Path) -> Result<CommandResult, Error> {
    let spec = json::spec_from_json(&read_file(space)?)?;
    let x = json::element_from_json(&read_file(element)?, &spec)?;
    Ok(CommandResult::ok(
        json::l0_to_json(&x.random_norm()),
        Vec::new(),
    ))
}

#[allow(clippy::too_many_arguments)]
fn cmd_modulus(
    space: &Path,
    set: &str,
    eps: Option<f64>,
    eps_file: Option<&Path>,
    variant: &str,
    grid: usize,
    seed: u64,
    csv: Option<&Path>,
) -> Result<CommandResult, Error> {
    let spec = json::spec_from_json(&read_file(space)?)?;
    let ids: Vec<&str> = set
        .split(',')
        .map(|s| s.trim())
        .filter(|s| !s.is_empty())
        .collect();
    let domain = spec.space().event(&ids)?;
    let eps_values = match (eps, eps_file) {
        (Some(v), None) => spec.space().constant(v),
        (None, Some(path)) => json::l0_from_json(&read_file(path)?, spec.space())?,
        _ => {
            return Err(Error::precondition(
                "exactly one of --eps and --eps-file is required",
            ))
        }
    };
    let variant = ModulusVariant::from_token(variant).ok_or_else(|| {
        Error::precondition(format!(
            "unknown variant '{variant}' (expected def, eq, ball, ball-eq)"
        ))
    })?;
    let query = ModulusQuery {
        domain: domain.clone(),
        eps: eps_values.clone(),
        variant,
    };
    let cfg = SearchConfig {
        grid_points: grid,
        seed,
        ..SearchConfig::default()
    };
    let report = rnm_core::modulus_estimate_report(&spec, &query, &cfg)?;

    let mut eps_fields = Vec::new();
    let mut est_fields = Vec::new();
    for i in domain.indices() {
        let id = spec.space().id(i).to_string();
        eps_fields.push((id.clone(), JsonValue::Num(eps_values.get(i))));
        est_fields.push((id, JsonValue::Num(report.estimate.get(i))));
    }
    let payload = JsonValue::Obj(vec![
        ("variant".into(), JsonValue::Str(variant.token().into())),
        ("seed".into(), JsonValue::Int(seed as i64)),
        ("eps".into(), JsonValue::Obj(eps_fields)),
        ("estimates".into(), JsonValue::Obj(est_fields)),
        (
            "empty_feasible".into(),
            JsonValue::Arr(
                report
                    .empty_feasible
                    .iter()
                    .map(|s| JsonValue::Str(s.clone()))
                    .collect(),
            ),
        ),
    ])
    .render();

    let mut diagnostics = Vec::new();
    for id in &report.empty_feasible {
        diagnostics.push(format!(
            "atom '{id}': empty feasible set, value 1 by the empty-infimum convention"
        ));
    }
    if let Some(path) = csv {
        let mut rows = String::from("atom_id,eps,variant,estimate\n");
        for i in domain.indices() {
            rows.push_str(&format!(
                "{},{},{},{}\n",
                spec.space().id(i),
                json::fmt_f64(eps_values.get(i)),
                variant.token(),
                json::fmt_f64(report.estimate.get(i)),
            ));
        }
        std::fs::write(path, rows)
            .map_err(|e| Error::schema(format!("cannot write '{}': {e}", path.display())))?;
        diagnostics.push(format!("csv written to {}", path.display()));
    }
    Ok(CommandResult {
        exit_code: 0,
        payload,
        diagnostics,
    })
}

fn cmd_ivt(
    space: &Path,
    f_text: &str,
    bind: &[String],
    y1: &Path,
    y2: &Path,
    xi: &Path,
    tol: f64,
) -> Result<CommandResult, Error> {
    let space = json::space_from_json(&read_file(space)?)?;
    let ast = rnm_core::parse_expr(f_text)?;
    let mut bindings = Vec::new();
    for entry in bind {
        let (name, path) = entry
            .split_once('=')
            .ok_or_else(|| Error::precondition(format!("binding '{entry}' is not NAME=FILE")))?;
        let value = json::l0_from_json(&read_file(Path::new(path))?, &space)?;
        bindings.push((name.to_string(), value));
    }
    let y1 = json::l0_from_json(&read_file(y1)?, &space)?;
    let y2 = json::l0_from_json(&read_file(y2)?, &space)?;
    let xi = json::l0_from_json(&read_file(xi)?, &space)?;
    let f = LocalFunction::from_expr(space.clone(), ast, bindings)?;
    let eta = rnm_core::solve_ivt(&f, &y1, &y2, &xi, tol)?;
    let residual = (f.eval(&eta)? - xi).max_abs();
    Ok(CommandResult {
        exit_code: 0,
        payload: json::l0_to_json(&eta),
        diagnostics: vec![format!("max residual {}", json::fmt_f64(residual))],
    })
}

fn cmd_verify(suite: &str, seed: u64) -> Result<CommandResult, Error> {
    let report = rnm_core::run_suite(suite, seed)?;
    let mut fields = vec![
        ("suite".into(), JsonValue::Str(report.suite.clone())),
        ("header".into(), JsonValue::Str(report.header.clone())),
        ("seed".into(), JsonValue::Int(seed as i64)),
        ("passed".into(), JsonValue::Bool(report.passed)),
        (
            "checks".into(),
            JsonValue::Arr(
                report
                    .checks
                    .iter()
                    .map(|c| {
                        JsonValue::Obj(vec![
                            ("name".into(), JsonValue::Str(c.name.clone())),
                            ("pass".into(), JsonValue::Bool(c.pass)),
                            ("detail".into(), JsonValue::Str(c.detail.clone())),
                        ])
                    })
                    .collect(),
            ),
        ),
    ];
    if let Some(raw) = &report.reports_json {
        fields.push(("reports".into(), JsonValue::Raw(raw.clone())));
    }
    let mut diagnostics = vec![format!("suite {}: {}", report.suite, report.header)];
    for c in &report.checks {
        diagnostics.push(format!(
            "[{}] {} - {}",
            if c.pass { "pass" } else { "FAIL" },
            c.name,
            c.detail
        ));
    }
    Ok(CommandResult {
        exit_code: if report.passed { 0 } else { 1 },
        payload: JsonValue::Obj(fields).render(),
        diagnostics,
    })
}

fn cmd_lp_modulus(
    space: &Path,
    p: f64,
    eps: f64,
    samples: usize,
    seed: u64,
) -> Result<CommandResult, Error> {
    let spec = json::spec_from_json(&read_file(space)?)?;
    let cfg = SearchConfig {
        random_restarts: samples,
        seed,
        ..SearchConfig::default()
    };
    let report = rnm_core::lp_modulus_estimate(&spec, p, eps, &cfg)?;
    let payload = JsonValue::Obj(vec![
        ("p".into(), JsonValue::Num(report.p)),
        ("eps".into(), JsonValue::Num(report.eps)),
        ("estimate".into(), JsonValue::Num(report.estimate)),
        (
            "doubled_estimate".into(),
            JsonValue::Num(report.doubled_estimate),
        ),
        ("budget_delta".into(), JsonValue::Num(report.budget_delta)),
        ("samples".into(), JsonValue::Int(samples as i64)),
        ("seed".into(), JsonValue::Int(seed as i64)),
    ])
    .render();
    Ok(CommandResult::ok(payload, Vec::new()))
}
