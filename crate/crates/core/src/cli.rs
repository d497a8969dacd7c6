//! Command-line front end. `run` is the whole program minus process exit,
//! so tests drive it with in-memory writers.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::casimir::{
    energy_curve, energy_per_length, fit_edge_coefficients, BoundaryCondition, CasimirConfig, EnergyCurve,
    FitOptions,
};
use crate::characteristic::char_value;
use crate::coefficients::fourier_coeffs;
use crate::diagnostics::{run_suite, Suite, SuiteReport};
use crate::error::Error;
use crate::mathieu::{evaluate, Family};
use crate::parse::{parse_complex, parse_orders};
use crate::Parity;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(name = "mathieu", version, about = "Mathieu functions and strip-plane Casimir energies")]
pub struct Cli {
    /// Output format; each command has its own default.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Worker threads for Casimir integrals.
    #[arg(long, global = true, value_parser = clap::value_parser!(u16).range(1..))]
    pub threads: Option<u16>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate one function, or a characteristic value with `--function charval`.
    Eval(EvalArgs),
    /// Print Fourier coefficient tables.
    Table(TableArgs),
    /// Run a self-check suite; exits nonzero on failure.
    Check(CheckArgs),
    /// Casimir energy per unit length at one height.
    Casimir(CasimirArgs),
    /// Casimir energies over a range of heights, as CSV.
    Curve(CurveArgs),
    /// Fit edge coefficients to a curve CSV.
    Fit(FitArgs),
}

fn complex_arg(s: &str) -> Result<Complex64, String> {
    parse_complex(s).map_err(|e| e.to_string())
}

/// A whole order list in one flag value.
#[derive(Debug, Clone)]
pub struct Orders(pub Vec<u32>);

fn orders_arg(s: &str) -> Result<Orders, String> {
    parse_orders(s).map(Orders).map_err(|e| e.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ParityArg {
    Even,
    Odd,
}

impl From<ParityArg> for Parity {
    fn from(p: ParityArg) -> Parity {
        match p {
            ParityArg::Even => Parity::Even,
            ParityArg::Odd => Parity::Odd,
        }
    }
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// ce, se, fe, fo, je, jo, ye, yo, he, ho, ie, io, ke, ko, or charval.
    #[arg(long)]
    pub function: String,
    #[arg(long)]
    pub order: u32,
    #[arg(long, value_parser = complex_arg, allow_hyphen_values = true)]
    pub q: Complex64,
    #[arg(long, value_parser = complex_arg, allow_hyphen_values = true)]
    pub arg: Option<Complex64>,
    /// Also print the derivative.
    #[arg(long)]
    pub derivative: bool,
    /// Family of a characteristic value: even gives a_r, odd gives b_r.
    #[arg(long, value_enum)]
    pub parity: Option<ParityArg>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TableWhat {
    Coeffs,
}

#[derive(Debug, Args)]
pub struct TableArgs {
    #[arg(long, value_enum)]
    pub what: TableWhat,
    /// ce or se.
    #[arg(long, default_value = "ce")]
    pub function: String,
    #[arg(long)]
    pub order: u32,
    #[arg(long, value_parser = complex_arg, allow_hyphen_values = true)]
    pub q: Complex64,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    /// wronskian, normalization, ode, bessel, symmetry, modified or limits.
    #[arg(long)]
    pub suite: String,
    /// Orders as `a..b` (inclusive), `a,b,c` or a single order.
    #[arg(long, value_parser = orders_arg)]
    pub orders: Option<Orders>,
    /// Parameter values (Bessel arguments for the bessel suite); repeatable.
    #[arg(long, value_parser = complex_arg, allow_hyphen_values = true)]
    pub q: Vec<Complex64>,
}

#[derive(Debug, Args)]
pub struct PhysicsArgs {
    /// Half-width of the strip (focal distance of the ellipse).
    #[arg(long, default_value_t = 1.0)]
    pub d: f64,
    /// dirichlet, neumann or em.
    #[arg(long, default_value = "em")]
    pub bc: String,
    #[arg(long, default_value_t = 0.0)]
    pub mu0: f64,
    /// Fixed channel cutoff; grown adaptively when omitted.
    #[arg(long)]
    pub rmax: Option<u32>,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
}

impl PhysicsArgs {
    fn config(&self, h: f64) -> Result<CasimirConfig, Error> {
        let mut cfg = CasimirConfig::new(self.d, h, self.bc.parse::<BoundaryCondition>()?);
        cfg.mu0 = self.mu0;
        cfg.r_max = self.rmax;
        cfg.tol = self.tol;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
pub struct CasimirArgs {
    /// Distance from the strip axis to the plane.
    #[arg(long = "H")]
    pub h: f64,
    #[command(flatten)]
    pub physics: PhysicsArgs,
}

#[derive(Debug, Args)]
pub struct CurveArgs {
    #[arg(long = "H-min")]
    pub h_min: f64,
    #[arg(long = "H-max")]
    pub h_max: f64,
    #[arg(long, default_value_t = 12)]
    pub points: usize,
    /// Write the CSV here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub physics: PhysicsArgs,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Half-width used to form `2d/H`; the CSV does not record it.
    #[arg(long, default_value_t = 1.0)]
    pub d: f64,
    /// Largest H in the fit window (default 2d/2).
    #[arg(long = "H-max-fit")]
    pub h_max_fit: Option<f64>,
    /// Smallest H in the fit window (default 2d/10).
    #[arg(long = "H-min-fit")]
    pub h_min_fit: Option<f64>,
    /// Pin the PFA intercept to exactly 1.
    #[arg(long)]
    pub fix_intercept: bool,
}

/// Envelope of every JSON output.
#[derive(Debug, Serialize)]
pub struct OutputRecord {
    pub schema_version: u32,
    pub command: String,
    pub inputs: Value,
    pub payload: Value,
    pub diagnostics: Value,
}

enum Failure {
    Usage(String),
    Domain(Error),
    /// A check suite ran and failed; its report is already printed.
    Check(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Failure {
        Failure::Domain(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Failure {
        Failure::Domain(e.into())
    }
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::Domain(_) => "domain",
        Error::InvalidFunction(_) => "invalid_function",
        Error::Overflow { .. } => "overflow",
        Error::ContinuationFailure { .. } => "continuation_failure",
        Error::NonConvergent { .. } => "non_convergent",
        Error::Quadrature { .. } => "quadrature",
        Error::NonPositiveDeterminant { .. } => "non_positive_determinant",
        Error::IllConditioned(_) => "ill_conditioned",
        Error::Parse(_) => "parse",
        Error::Io(_) => "io",
    }
}

/// Runs the program: 0 on success, 1 on a domain error or failed check,
/// 2 on a usage error.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = out.write_all(text.as_bytes());
                    0
                }
                _ => {
                    let _ = err.write_all(text.as_bytes());
                    2
                }
            };
        }
    };
    // Output is buffered so the pool closure owns nothing non-Send.
    let mut buf = Vec::new();
    let result = match cli.threads {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n as usize).build() {
            Ok(pool) => pool.install(|| execute(&cli, &mut buf)),
            Err(e) => Err(Failure::Usage(format!("cannot start {n} threads: {e}"))),
        },
        None => execute(&cli, &mut buf),
    };
    let _ = out.write_all(&buf);
    let _ = out.flush();
    match result {
        Ok(()) => 0,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            2
        }
        Err(Failure::Domain(e)) => {
            let line = json!({"error": error_kind(&e), "message": e.to_string()});
            let _ = writeln!(err, "{line}");
            1
        }
        Err(Failure::Check(msg)) => {
            let line = json!({"error": "check_failed", "message": msg});
            let _ = writeln!(err, "{line}");
            1
        }
    }
}

/// Parses argv only; the fuzzing entry point for the command grammar.
pub fn parse_args<I, T>(args: I) -> Result<Cli, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    Cli::try_parse_from(args)
}

fn cx(z: Complex64) -> Value {
    json!({"re": z.re, "im": z.im})
}

/// Shortest round-trip text for a float, exponent form for extreme magnitudes.
fn num(v: f64) -> String {
    format!("{v:?}")
}

fn execute(cli: &Cli, out: &mut dyn Write) -> Result<(), Failure> {
    match &cli.command {
        Command::Eval(a) => eval(a, cli.format.unwrap_or(Format::Text), out),
        Command::Table(a) => table(a, cli.format.unwrap_or(Format::Text), out),
        Command::Check(a) => check(a, cli.format.unwrap_or(Format::Text), out),
        Command::Casimir(a) => casimir(a, cli.format.unwrap_or(Format::Json), out),
        Command::Curve(a) => curve(a, cli.format.unwrap_or(Format::Csv), out),
        Command::Fit(a) => fit(a, cli.format.unwrap_or(Format::Json), out),
    }
}

fn emit_json(out: &mut dyn Write, command: &str, inputs: Value, payload: Value, diagnostics: Value) -> Result<(), Failure> {
    let rec = OutputRecord {
        schema_version: SCHEMA_VERSION,
        command: command.into(),
        inputs,
        payload,
        diagnostics,
    };
    let text = serde_json::to_string(&rec).map_err(|e| Error::Io(e.to_string()))?;
    writeln!(out, "{text}")?;
    Ok(())
}

/// Flattens the scalar fields of an object into `key value` lines.
fn emit_text_map(out: &mut dyn Write, v: &Value) -> Result<(), Failure> {
    let mut flat = Vec::new();
    flatten("", v, &mut flat);
    for (k, v) in flat {
        writeln!(out, "{k} {v}")?;
    }
    Ok(())
}

fn emit_csv_map(out: &mut dyn Write, v: &Value) -> Result<(), Failure> {
    let mut flat = Vec::new();
    flatten("", v, &mut flat);
    let mut w = csv::Writer::from_writer(out);
    let err = |e: csv::Error| Failure::Domain(Error::Io(e.to_string()));
    w.write_record(flat.iter().map(|(k, _)| k.as_str())).map_err(err)?;
    w.write_record(flat.iter().map(|(_, v)| v.as_str())).map_err(err)?;
    w.flush()?;
    Ok(())
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    let key = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
    match v {
        Value::Object(m) => {
            for (k, x) in m {
                flatten(&key(k), x, out);
            }
        }
        Value::Array(a) => {
            for (i, x) in a.iter().enumerate() {
                flatten(&key(&i.to_string()), x, out);
            }
        }
        Value::Null => out.push((prefix.to_string(), String::new())),
        Value::String(s) => out.push((prefix.to_string(), s.clone())),
        Value::Number(n) => out.push((
            prefix.to_string(),
            n.as_f64().map(num).unwrap_or_else(|| n.to_string()),
        )),
        Value::Bool(b) => out.push((prefix.to_string(), b.to_string())),
    }
}

fn eval(a: &EvalArgs, format: Format, out: &mut dyn Write) -> Result<(), Failure> {
    let inputs = json!({
        "function": a.function, "order": a.order, "q": cx(a.q),
        "arg": a.arg.map(cx), "derivative": a.derivative,
        "parity": a.parity.map(|p| Parity::from(p).to_string()),
    });
    if a.function.eq_ignore_ascii_case("charval") {
        let parity = a.parity.map(Parity::from).unwrap_or(Parity::Even);
        let cv = char_value(parity, a.order, a.q)?;
        let diagnostics = json!({"matrix_dim": cv.matrix_dim, "continuation_steps": cv.continuation_steps});
        return match format {
            Format::Json => emit_json(out, "eval", inputs, json!({"value": cx(cv.alpha)}), diagnostics),
            Format::Csv => {
                writeln!(out, "re,im")?;
                writeln!(out, "{},{}", num(cv.alpha.re), num(cv.alpha.im))?;
                Ok(())
            }
            Format::Text => {
                writeln!(out, "{} {}", num(cv.alpha.re), num(cv.alpha.im))?;
                Ok(())
            }
        };
    }
    let family: Family = a.function.parse()?;
    let Some(arg) = a.arg else {
        return Err(Failure::Usage(format!("--arg is required for --function {}", a.function)));
    };
    let id = family.id(a.order);
    let v = evaluate(id, a.q, arg)?;
    let q_table = if id.modified { -a.q } else { a.q };
    let mut diagnostics = Map::new();
    if q_table.norm() > 0.0 {
        if let Ok(t) = fourier_coeffs(id.parity, id.r, q_table) {
            diagnostics.insert("alpha".into(), cx(t.alpha));
            diagnostics.insert("fourier_terms".into(), json!(t.coeffs.len()));
        }
    }
    let mut rows = vec![v.value];
    if a.derivative {
        rows.push(v.derivative);
    }
    match format {
        Format::Json => {
            let mut payload = json!({"value": cx(v.value)});
            if a.derivative {
                payload["derivative"] = cx(v.derivative);
            }
            emit_json(out, "eval", inputs, payload, Value::Object(diagnostics))
        }
        Format::Csv => {
            writeln!(out, "re,im")?;
            for z in rows {
                writeln!(out, "{},{}", num(z.re), num(z.im))?;
            }
            Ok(())
        }
        Format::Text => {
            for z in rows {
                writeln!(out, "{} {}", num(z.re), num(z.im))?;
            }
            Ok(())
        }
    }
}

fn table(a: &TableArgs, format: Format, out: &mut dyn Write) -> Result<(), Failure> {
    let parity = match a.function.to_ascii_lowercase().as_str() {
        "ce" => Parity::Even,
        "se" => Parity::Odd,
        other => return Err(Failure::Usage(format!("coefficient tables exist for ce and se, not '{other}'"))),
    };
    let TableWhat::Coeffs = a.what;
    let t = fourier_coeffs(parity, a.order, a.q)?;
    let rows: Vec<(usize, u32, Complex64)> = t
        .coeffs
        .iter()
        .enumerate()
        .map(|(m, &c)| (m, t.harmonic(m), c))
        .collect();
    let inputs = json!({"what": "coeffs", "function": a.function, "order": a.order, "q": cx(a.q)});
    match format {
        Format::Json => {
            let coeffs: Vec<Value> = rows
                .iter()
                .map(|&(m, k, c)| json!({"m": m, "harmonic": k, "re": c.re, "im": c.im}))
                .collect();
            emit_json(
                out,
                "table",
                inputs,
                json!({"alpha": cx(t.alpha), "coefficients": coeffs}),
                json!({"terms": t.coeffs.len(), "meet_index": t.meet_index}),
            )
        }
        Format::Csv => {
            writeln!(out, "m,harmonic,re,im")?;
            for (m, k, c) in rows {
                writeln!(out, "{m},{k},{},{}", num(c.re), num(c.im))?;
            }
            Ok(())
        }
        Format::Text => {
            for (_, k, c) in rows {
                writeln!(out, "{k} {} {}", num(c.re), num(c.im))?;
            }
            Ok(())
        }
    }
}

fn check(a: &CheckArgs, format: Format, out: &mut dyn Write) -> Result<(), Failure> {
    let suite: Suite = a.suite.parse().map_err(|e: Error| Failure::Usage(e.to_string()))?;
    let orders = a.orders.clone().map(|o| o.0).unwrap_or_else(|| suite.default_orders());
    let qs = if a.q.is_empty() { suite.default_qs() } else { a.q.clone() };
    let rep: SuiteReport = run_suite(suite, &orders, &qs);
    let inputs = json!({"suite": suite.name(), "orders": orders, "q": qs.iter().map(|&z| cx(z)).collect::<Vec<_>>()});
    let payload = json!({
        "pass": rep.pass, "max_deviation": rep.max_deviation, "tolerance": rep.tolerance,
        "samples": rep.samples, "worst": rep.worst,
    });
    match format {
        Format::Json => emit_json(out, "check", inputs, payload, json!({"errors": rep.errors}))?,
        Format::Csv => emit_csv_map(out, &payload)?,
        Format::Text => {
            writeln!(
                out,
                "{} {} samples={} max_deviation={} tolerance={} worst={}",
                if rep.pass { "PASS" } else { "FAIL" },
                suite.name(),
                rep.samples,
                num(rep.max_deviation),
                num(rep.tolerance),
                rep.worst
            )?;
            for e in &rep.errors {
                writeln!(out, "error {e}")?;
            }
        }
    }
    if rep.pass {
        Ok(())
    } else {
        Err(Failure::Check(format!("{} suite failed", suite.name())))
    }
}

fn physics_inputs(p: &PhysicsArgs) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("d".into(), json!(p.d));
    m.insert("bc".into(), json!(p.bc));
    m.insert("mu0".into(), json!(p.mu0));
    m.insert("rmax".into(), json!(p.rmax));
    m.insert("tol".into(), json!(p.tol));
    m
}

fn casimir(a: &CasimirArgs, format: Format, out: &mut dyn Write) -> Result<(), Failure> {
    let cfg = a.physics.config(a.h)?;
    let e = energy_per_length(&cfg)?;
    let mut inputs = physics_inputs(&a.physics);
    inputs.insert("H".into(), json!(a.h));
    let payload = json!({
        "energy_per_length": e.energy, "dirichlet": e.dirichlet, "neumann": e.neumann,
        "pfa_energy": e.pfa_energy, "ratio_pfa": e.ratio_pfa,
    });
    let diagnostics = json!({
        "est_error": e.est_error, "r_max_used": e.r_max_used, "p_nodes": e.p_nodes,
        "error_budget": e.error_budget, "warnings": cfg.warnings(),
    });
    match format {
        Format::Json => emit_json(out, "casimir", Value::Object(inputs), payload, diagnostics),
        Format::Csv => emit_csv_map(out, &json!({"payload": payload, "diagnostics": diagnostics})),
        Format::Text => emit_text_map(out, &json!({"payload": payload, "diagnostics": diagnostics})),
    }
}

fn curve(a: &CurveArgs, format: Format, out: &mut dyn Write) -> Result<(), Failure> {
    let cfg = a.physics.config(a.h_max.max(f64::MIN_POSITIVE))?;
    let c = energy_curve(&cfg, a.h_min, a.h_max, a.points)?;
    let mut inputs = physics_inputs(&a.physics);
    inputs.insert("H_min".into(), json!(a.h_min));
    inputs.insert("H_max".into(), json!(a.h_max));
    inputs.insert("points".into(), json!(a.points));
    if let Some(path) = &a.out {
        let file = std::fs::File::create(path)?;
        c.write_csv(std::io::BufWriter::new(file))?;
    }
    let max_err = c.records.iter().map(|r| r.est_error).fold(0.0, f64::max);
    let max_r = c.records.iter().map(|r| r.r_max_used).max().unwrap_or(0);
    match (format, &a.out) {
        (Format::Json, _) => emit_json(
            out,
            "curve",
            Value::Object(inputs),
            serde_json::to_value(&c.records).map_err(|e| Error::Io(e.to_string()))?,
            json!({"max_est_error": max_err, "max_r_used": max_r, "out": a.out}),
        ),
        (_, Some(path)) => {
            writeln!(out, "wrote {} records to {}", c.records.len(), path.display())?;
            Ok(())
        }
        (_, None) => {
            c.write_csv(&mut *out)?;
            Ok(())
        }
    }
}

fn fit(a: &FitArgs, format: Format, out: &mut dyn Write) -> Result<(), Failure> {
    let file = std::fs::File::open(&a.input)
        .map_err(|e| Error::Io(format!("cannot open {}: {e}", a.input.display())))?;
    let c = EnergyCurve::read_csv(std::io::BufReader::new(file))?;
    let mut opts = FitOptions {
        d: a.d,
        fix_intercept: a.fix_intercept,
        ..FitOptions::default()
    };
    if let Some(h) = a.h_max_fit {
        opts.aspect_min = 2.0 * a.d / h;
    }
    if let Some(h) = a.h_min_fit {
        opts.aspect_max = 2.0 * a.d / h;
    }
    let rep = fit_edge_coefficients(&c, &opts)?;
    let inputs = json!({
        "in": a.input, "d": a.d, "H_max_fit": a.h_max_fit, "H_min_fit": a.h_min_fit,
        "fix_intercept": a.fix_intercept,
    });
    let payload = json!({
        "beta": rep.beta, "gamma": rep.gamma, "sigma_beta": rep.sigma_beta,
        "sigma_gamma": rep.sigma_gamma, "intercept": rep.intercept,
    });
    let diagnostics = json!({
        "n_points": rep.n_points, "residual_rms": rep.residual_rms,
        "condition_number": rep.condition_number, "sigma_intercept": rep.sigma_intercept,
        "aspect_window": [opts.aspect_min, opts.aspect_max],
    });
    match format {
        Format::Json => emit_json(out, "fit", inputs, payload, diagnostics),
        Format::Csv => emit_csv_map(out, &payload),
        Format::Text => emit_text_map(out, &payload),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_str(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let argv = std::iter::once("mathieu").chain(args.iter().copied());
        let code = run(argv, &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn ce0_at_zero_q() {
        let (code, out, _) = run_str(&["eval", "--function", "ce", "--order", "0", "--q", "0", "--arg", "1.0"]);
        assert_eq!(code, 0);
        assert_eq!(out.split_whitespace().next(), Some("0.7071067811865476"));
    }

    #[test]
    fn exit_codes() {
        assert_eq!(run_str(&["eval", "--bogus"]).0, 2);
        let (code, _, err) = run_str(&["eval", "--function", "ce", "--order", "0", "--q", "1+i", "--arg", "0"]);
        assert_eq!(code, 2, "{err}");
        let (code, _, err) = run_str(&["eval", "--function", "se", "--order", "0", "--q", "1", "--arg", "0"]);
        assert_eq!(code, 1);
        assert_eq!(err.lines().count(), 1);
        let v: Value = serde_json::from_str(err.trim()).unwrap();
        assert_eq!(v["error"], "invalid_function");
        let (code, _, _) = run_str(&["casimir", "--H", "0.5", "--mu0", "1.0"]);
        assert_eq!(code, 1);
        assert_eq!(run_str(&["--help"]).0, 0);
    }

    #[test]
    fn json_envelope_and_determinism() {
        let args = ["--format", "json", "eval", "--function", "je", "--order", "2", "--q", "1.5-0.5i", "--arg", "0.7", "--derivative"];
        let (c1, o1, _) = run_str(&args);
        let (c2, o2, _) = run_str(&args);
        assert_eq!((c1, c2), (0, 0));
        assert_eq!(o1, o2);
        let v: Value = serde_json::from_str(o1.trim()).unwrap();
        assert_eq!(v["schema_version"], 1);
        assert_eq!(v["command"], "eval");
        assert!(v["payload"]["value"]["re"].is_f64());
        assert!(v["payload"]["derivative"]["im"].is_f64());
    }

    #[test]
    fn charval_and_table() {
        let (code, out, _) = run_str(&["eval", "--function", "charval", "--order", "1", "--q", "1", "--parity", "odd"]);
        assert_eq!(code, 0);
        let re: f64 = out.split_whitespace().next().unwrap().parse().unwrap();
        assert!((re + 0.1102488169920956).abs() < 1e-12);
        let (code, out, _) = run_str(&["--format", "csv", "table", "--what", "coeffs", "--order", "2", "--q", "3"]);
        assert_eq!(code, 0);
        assert!(out.starts_with("m,harmonic,re,im\n"));
    }

    #[test]
    fn check_suite_reports() {
        let (code, out, _) = run_str(&["check", "--suite", "wronskian", "--orders", "0..6", "--q", "1.0"]);
        assert_eq!(code, 0, "{out}");
        assert!(out.starts_with("PASS wronskian"));
        let (code, out, _) = run_str(&["check", "--suite", "wronskian", "--orders", "1", "--q", "0"]);
        assert_eq!(code, 1);
        assert!(out.starts_with("FAIL"));
        assert_eq!(run_str(&["check", "--suite", "nonsense"]).0, 2);
    }

    #[test]
    fn fit_round_trips_synthetic_curve() {
        use crate::casimir::{expansion_ratio, pfa_energy, CurveRecord};
        let records = (0..10)
            .map(|i| {
                let h = 0.2 + 0.8 * i as f64 / 9.0;
                let ratio = expansion_ratio(0.001, -0.004, h, 1.0);
                CurveRecord {
                    h,
                    energy_per_length: ratio * pfa_energy(1.0, h),
                    ratio_pfa: ratio,
                    est_error: 0.0,
                    r_max_used: 12,
                }
            })
            .collect();
        let dir = std::env::temp_dir().join(format!("mathieu-cli-fit-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("curve.csv");
        EnergyCurve { records }
            .write_csv(std::fs::File::create(&path).unwrap())
            .unwrap();
        let (code, out, err) = run_str(&["fit", "--in", path.to_str().unwrap()]);
        assert_eq!(code, 0, "{err}");
        let v: Value = serde_json::from_str(out.trim()).unwrap();
        assert!((v["payload"]["beta"].as_f64().unwrap() - 0.001).abs() < 1e-10);
        assert!((v["payload"]["gamma"].as_f64().unwrap() + 0.004).abs() < 1e-10);
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
