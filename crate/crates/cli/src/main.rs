//! `scattered-mrd`: construct scattered subspaces and the rank-metric codes
//! they induce, verify them, and move them between files.
//!
//! Exit codes: 0 success, 1 negative verdict, 2 invalid parameters or
//! malformed input, 3 exhaustive budget exceeded, 4 internal failure.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use scattered_mrd::constructions::{
    build_monomial_family, build_pseudoregulus, build_scattered_plane, build_w_example, replay, Construction,
    MonomialVariant, Params,
};
use scattered_mrd::rankcodes::{
    code_from_subspace, codes_equal, explicit_fv_code, gabidulin, graph_polynomial, restriction_code, sheekey_code,
    FvSource, RankCode, ScanMode, DEFAULT_BUDGET,
};
use scattered_mrd::serial::{self, CodeRecord, ConstructionRecord, SubspaceRecord};
use scattered_mrd::{Error, FieldTower, SubspaceQ};

const REPORT_FORMAT: &str = "scattered-mrd/report/v1";
const WORKERS_VAR: &str = "SCATTERED_MRD_WORKERS";

#[derive(Parser, Serialize)]
#[command(name = "scattered-mrd", version, about = "Scattered linear sets and MRD codes, verified exactly")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Command {
    /// Build a scattered subspace and write {params, subspace, trace}.
    Construct(ConstructArgs),
    /// Check a subspace or a code and write a JSON report.
    #[command(subcommand)]
    Verify(VerifyCommand),
    /// Build a rank-metric code.
    BuildCode(BuildCodeArgs),
    /// Write a code as plain-text matrices.
    Export(ExportArgs),
    /// Read plain-text matrices back into a code file.
    Import(ImportArgs),
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Kind {
    Plane,
    MonomialEx1,
    MonomialEx2,
    Pseudoregulus,
    WExample,
}

#[derive(Args, Serialize)]
struct ConstructArgs {
    kind: Kind,
    #[arg(long, default_value_t = 2)]
    p: u32,
    #[arg(long, default_value_t = 1)]
    h: u32,
    #[arg(long, default_value_t = 2)]
    t: u32,
    #[arg(long, default_value_t = 3)]
    r: u32,
    #[arg(long, default_value_t = 5)]
    n: u32,
    #[arg(long)]
    i: Option<u32>,
    #[arg(long, default_value_t = 1)]
    s: u32,
    #[arg(long, default_value_t = 2)]
    h_exp: u32,
    /// Re-run against a construction file and require identical output.
    #[arg(long)]
    replay: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the search trace on its own.
    #[arg(long)]
    trace_out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Mode {
    Exhaustive,
    Sample,
}

#[derive(Args, Serialize)]
struct ScanArgs {
    #[arg(long, value_enum, default_value_t = Mode::Exhaustive)]
    mode: Mode,
    /// Largest number of codewords an exhaustive scan may visit.
    #[arg(long, default_value_t = DEFAULT_BUDGET as u64)]
    budget: u64,
    #[arg(long, default_value_t = 10_000)]
    samples: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
enum VerifyCommand {
    /// Weights and scatteredness of a subspace or construction file.
    Scattered {
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Minimum distance and the Singleton bound of a code file.
    Mrd {
        input: PathBuf,
        #[command(flatten)]
        scan: ScanArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Equality of two code files as F_q-spans.
    Equal {
        left: PathBuf,
        right: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Serialize)]
struct BuildCodeArgs {
    /// Subspace, construction or code file to build from.
    #[arg(long, required_unless_present = "gabidulin")]
    from: Option<PathBuf>,
    /// S_f for the graph U_f = {(x, f(x))} in the input.
    #[arg(long, requires = "from")]
    sheekey: bool,
    /// Restrict every codeword of the input code to F_{q^N}.
    #[arg(long, value_name = "N", requires = "from")]
    restriction: Option<u32>,
    /// The closed-form F_v code of a plane or monomial construction.
    #[arg(long, requires = "from")]
    explicit_fv: bool,
    #[arg(long, num_args = 3, value_names = ["N", "K", "S"], conflicts_with = "from")]
    gabidulin: Option<Vec<u32>>,
    #[arg(long, default_value_t = 2)]
    p: u32,
    #[arg(long, default_value_t = 1)]
    h: u32,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct ExportArgs {
    input: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct ImportArgs {
    input: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// A failed job: exit code plus a machine-readable reason.
struct Failure {
    code: u8,
    kind: &'static str,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let (code, kind) = match &e {
            Error::BudgetExceeded { .. } => (3, "budget-exceeded"),
            Error::Internal(_) => (4, "internal"),
            Error::Malformed(_) => (2, "malformed"),
            _ => (2, "invalid-parameters"),
        };
        Failure { code, kind, message: e.to_string() }
    }
}

fn malformed(path: &Path, why: impl std::fmt::Display) -> Failure {
    Failure { code: 2, kind: "malformed", message: format!("{}: {why}", path.display()) }
}

type Outcome = Result<u8, Failure>;

fn read_json(path: &Path) -> Result<Value, Failure> {
    let text = fs::read_to_string(path).map_err(|e| malformed(path, e))?;
    serde_json::from_str(&text).map_err(|e| malformed(path, e))
}

fn parse<T: serde::de::DeserializeOwned>(path: &Path, v: Value) -> Result<T, Failure> {
    serde_json::from_value(v).map_err(|e| malformed(path, e))
}

fn format_of(v: &Value) -> &str {
    v.get("format").and_then(Value::as_str).unwrap_or("")
}

enum Input {
    Subspace(SubspaceQ),
    Construction(Construction),
    Code(RankCode),
}

fn load(path: &Path) -> Result<Input, Failure> {
    let v = read_json(path)?;
    match format_of(&v) {
        serial::SUBSPACE_FORMAT => {
            let r: SubspaceRecord = parse(path, v)?;
            Ok(Input::Subspace(serial::subspace_from_record(&r)?))
        }
        serial::CONSTRUCTION_FORMAT => {
            let r: ConstructionRecord = parse(path, v)?;
            Ok(Input::Construction(serial::construction_from_record(&r)?))
        }
        serial::CODE_FORMAT => {
            let r: CodeRecord = parse(path, v)?;
            Ok(Input::Code(serial::code_from_record(&r)?))
        }
        other => Err(malformed(path, format!("unknown format {other:?}"))),
    }
}

fn load_subspace(path: &Path) -> Result<SubspaceQ, Failure> {
    match load(path)? {
        Input::Subspace(u) => Ok(u),
        Input::Construction(c) => Ok(c.subspace),
        Input::Code(_) => Err(malformed(path, "expected a subspace or construction file, found a code")),
    }
}

fn load_code(path: &Path) -> Result<RankCode, Failure> {
    match load(path)? {
        Input::Code(c) => Ok(c),
        _ => Err(malformed(path, "expected a code file")),
    }
}

/// Writes via a sibling temporary file and a rename, or to stdout.
fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    let io = |e: std::io::Error| Failure { code: 4, kind: "io", message: e.to_string() };
    match out {
        None => std::io::stdout().write_all(text.as_bytes()).map_err(io),
        Some(path) => {
            let mut tmp = path.as_os_str().to_owned();
            tmp.push(".tmp");
            fs::write(&tmp, text).map_err(io)?;
            fs::rename(&tmp, path).map_err(io)
        }
    }
}

/// Pretty JSON, except that arrays of scalars stay on one line.
fn render(v: &Value, indent: usize, out: &mut String) {
    let pad = |k: usize| "  ".repeat(k);
    let scalar = |x: &Value| !x.is_array() && !x.is_object();
    match v {
        Value::Array(items) if items.is_empty() || items.iter().all(scalar) => {
            out.push_str(&serde_json::to_string(v).expect("scalars serialize"));
        }
        Value::Array(items) => {
            out.push_str("[\n");
            for (k, x) in items.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                render(x, indent + 1, out);
                out.push_str(if k + 1 < items.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(indent));
            out.push(']');
        }
        Value::Object(map) if !map.is_empty() => {
            out.push_str("{\n");
            for (k, (key, x)) in map.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                out.push_str(&serde_json::to_string(key).expect("keys serialize"));
                out.push_str(": ");
                render(x, indent + 1, out);
                out.push_str(if k + 1 < map.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(indent));
            out.push('}');
        }
        _ => out.push_str(&serde_json::to_string(v).expect("scalars serialize")),
    }
}

fn emit_json(out: Option<&Path>, v: &impl Serialize) -> Result<(), Failure> {
    let mut text = String::new();
    render(&serde_json::to_value(v).expect("records serialize"), 0, &mut text);
    text.push('\n');
    emit(out, &text)
}

fn build(a: &ConstructArgs) -> scattered_mrd::Result<Construction> {
    match a.kind {
        Kind::Plane => build_scattered_plane(a.p, a.h, a.t, a.i),
        Kind::MonomialEx1 => build_monomial_family(a.p, a.h, a.t, a.r, a.i, MonomialVariant::Ex1),
        Kind::MonomialEx2 => build_monomial_family(a.p, a.h, a.t, a.r, a.i, MonomialVariant::Ex2),
        Kind::Pseudoregulus => build_pseudoregulus(a.p, a.h, a.n, a.t, a.s),
        Kind::WExample => build_w_example(a.p, a.h, a.n, a.h_exp),
    }
}

fn cmd_construct(a: &ConstructArgs) -> Outcome {
    let (c, record) = match &a.replay {
        None => {
            let c = build(a)?;
            let record = serial::construction_record(&c);
            (c, record)
        }
        Some(path) => {
            let recorded: ConstructionRecord = parse(path, read_json(path)?)?;
            let c = replay(|| build(a), &recorded.trace)?;
            let record = serial::construction_record(&c);
            if record != recorded {
                return Err(Failure {
                    code: 4,
                    kind: "replay-diverged",
                    message: "rebuilt construction differs from the recorded one".into(),
                });
            }
            (c, record)
        }
    };
    if let Some(path) = &a.trace_out {
        emit_json(Some(path), &c.trace)?;
    }
    emit_json(a.out.as_deref(), &record)?;
    Ok(0)
}

fn report(kind: &str, job: &impl Serialize, started: Instant, body: Value) -> Value {
    let mut v = json!({
        "format": REPORT_FORMAT,
        "kind": kind,
        "job": job,
    });
    let obj = v.as_object_mut().expect("object literal");
    if let Value::Object(extra) = body {
        obj.extend(extra);
    }
    obj.insert("wall_time_s".into(), json!(started.elapsed().as_secs_f64()));
    v
}

fn witness_rows(code: &RankCode, digits: &[u8]) -> Value {
    let m = code.matrix(digits);
    let rows: Vec<Vec<u64>> = (0..m.rows()).map(|i| (0..m.cols()).map(|j| m.get(i, j).index()).collect()).collect();
    json!(rows)
}

fn cmd_verify(v: &VerifyCommand) -> Outcome {
    let started = Instant::now();
    match v {
        VerifyCommand::Scattered { input, out } => {
            let u = load_subspace(input)?;
            let w = u.linear_set_points()?;
            let rec = serial::weight_record(u.tower(), &w);
            let scattered = w.is_scattered();
            let body = json!({
                "verdict": scattered,
                "scattered": scattered,
                "points": w.points,
                "max_weight": w.max_weight,
                "rank": w.rank,
                "scattered_bound": u.ambient().scattered_bound(),
                "weights": rec,
                "verified": { "scattered": scattered, "method": "exhaustive" },
            });
            emit_json(out.as_deref(), &report("scattered", v, started, body))?;
            Ok(if scattered { 0 } else { 1 })
        }
        VerifyCommand::Mrd { input, scan, out } => {
            let mut code = load_code(input)?;
            let mode = match scan.mode {
                Mode::Exhaustive => ScanMode::Exhaustive { budget: scan.budget as u128 },
                Mode::Sample => ScanMode::Sample { count: scan.samples, seed: scan.seed },
            };
            let r = code.min_rank_distance(mode)?;
            let dim = code.dim();
            let cited = code.cited_distance().map(|d| {
                json!({ "d": d, "mrd": code.singleton_exponent(d) == dim, "singleton_exponent": code.singleton_exponent(d) })
            });
            let (body, verdict) = if r.exact {
                let mrd = code.is_mrd()?;
                let body = json!({
                    "d": r.d,
                    "mrd": mrd,
                    "verified": {
                        "d": r.d,
                        "mrd": mrd,
                        "dim": dim,
                        "singleton_exponent": code.singleton_exponent(r.d),
                        "method": "exhaustive",
                    },
                });
                (body, Some(mrd))
            } else {
                let contradicts = code.cited_distance().is_some_and(|d| r.d < d);
                let body = json!({
                    "verified": { "d_upper_bound": r.d, "dim": dim, "method": "sample", "seed": scan.seed },
                });
                (body, contradicts.then_some(false))
            };
            let mut rep = report("mrd", v, started, body);
            let obj = rep.as_object_mut().expect("object");
            obj.insert("verdict".into(), json!(verdict));
            obj.insert("theorem_cited".into(), cited.unwrap_or(Value::Null));
            obj.insert("params".into(), json!(code.params()));
            obj.insert("stats".into(), json!({
                "examined": r.examined.to_string(),
                "workers": rayon::current_num_threads(),
            }));
            obj.insert("witness".into(), json!({
                "rank": r.d,
                "index": r.witness_index.map(|i| i.to_string()),
                "matrix": witness_rows(&code, &r.witness),
            }));
            emit_json(out.as_deref(), &rep)?;
            Ok(if verdict == Some(false) { 1 } else { 0 })
        }
        VerifyCommand::Equal { left, right, out } => {
            let (a, b) = (load_code(left)?, load_code(right)?);
            let equal = codes_equal(&a, &b)?;
            let body = json!({ "verdict": equal, "equal": equal, "verified": { "equal": equal, "method": "canonical-echelon" } });
            emit_json(out.as_deref(), &report("equal", v, started, body))?;
            Ok(if equal { 0 } else { 1 })
        }
    }
}

fn cmd_build_code(a: &BuildCodeArgs) -> Outcome {
    let code = if let Some(g) = &a.gabidulin {
        let (n, k, s) = (g[0], g[1], g[2]);
        let tower = std::sync::Arc::new(FieldTower::over(a.p, a.h, n, &[1, n])?);
        gabidulin(&tower, n, k, s)?
    } else {
        let path = a.from.as_deref().expect("clap requires --from");
        let input = load(path)?;
        let picks = [a.sheekey, a.restriction.is_some(), a.explicit_fv].iter().filter(|&&x| x).count();
        if picks > 1 {
            return Err(Failure {
                code: 2,
                kind: "invalid-parameters",
                message: "choose at most one of --sheekey, --restriction, --explicit-fv".into(),
            });
        }
        match (input, a.restriction) {
            (Input::Code(c), Some(n)) => restriction_code(&c, n)?,
            (_, Some(_)) => return Err(malformed(path, "--restriction needs a code file")),
            (Input::Code(_), None) => return Err(malformed(path, "expected a subspace or construction file")),
            (Input::Construction(c), None) if a.explicit_fv => match &c.params {
                Params::Plane(p) => explicit_fv_code(&c.tower, FvSource::Plane(p))?,
                Params::Monomial(p) => explicit_fv_code(&c.tower, FvSource::Monomial(p))?,
                _ => return Err(malformed(path, "--explicit-fv needs a plane or monomial construction")),
            },
            (Input::Subspace(_), None) if a.explicit_fv => {
                return Err(malformed(path, "--explicit-fv needs a construction file"))
            }
            (input, None) => {
                let u = match input {
                    Input::Subspace(u) => u,
                    Input::Construction(c) => c.subspace,
                    Input::Code(_) => unreachable!("handled above"),
                };
                if a.sheekey {
                    sheekey_code(&graph_polynomial(&u)?, u.ambient().n())?
                } else {
                    code_from_subspace(&u)?
                }
            }
        }
    };
    emit_json(a.out.as_deref(), &serial::code_record(&code))?;
    Ok(0)
}

fn cmd_export(a: &ExportArgs) -> Outcome {
    let code = load_code(&a.input)?;
    emit(a.out.as_deref(), &serial::export_matrices(&code))?;
    Ok(0)
}

fn cmd_import(a: &ImportArgs) -> Outcome {
    let text = fs::read_to_string(&a.input).map_err(|e| malformed(&a.input, e))?;
    let code = serial::import_matrices(&text)?;
    emit_json(a.out.as_deref(), &serial::code_record(&code))?;
    Ok(0)
}

fn configure_workers() -> Result<(), Failure> {
    let Ok(v) = std::env::var(WORKERS_VAR) else {
        return Ok(());
    };
    let n: usize = v.parse().ok().filter(|&n| n > 0).ok_or_else(|| Failure {
        code: 2,
        kind: "invalid-parameters",
        message: format!("{WORKERS_VAR} must be a positive integer, got {v:?}"),
    })?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| Failure {
        code: 4,
        kind: "internal",
        message: e.to_string(),
    })
}

fn run(cli: &Cli) -> Outcome {
    configure_workers()?;
    match &cli.command {
        Command::Construct(a) => cmd_construct(a),
        Command::Verify(v) => cmd_verify(v),
        Command::BuildCode(a) => cmd_build_code(a),
        Command::Export(a) => cmd_export(a),
        Command::Import(a) => cmd_import(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(2);
        }
    };
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("{}", json!({ "error": f.kind, "message": f.message }));
            ExitCode::from(f.code)
        }
    }
}
