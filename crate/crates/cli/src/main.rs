//! `l1disc`: point sets, discrepancy norms, auxiliary-function checks and
//! L1 lower-bound certificates from the command line.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use l1disc::auxiliary::{build_all_trees, build_tree, lemma_suite, LemmaOptions, MaxLevel, TreeSummary};
use l1disc::certified::bits_for_digits;
use l1disc::combinatorics::{a1_row, full_table};
use l1disc::discrepancy::{d_n_from_l1, l1_norm_exact, l2_norm_sq, linf_norm, monte_carlo_norm, NormKind};
use l1disc::report::rational_string;
use l1disc::testfn::{
    asymptotic_dn_table, certificate, constants_table, extremal_search, halasz_g_values, lin_limit, lin_n,
    lin_series_crosscheck, CertificateOptions, CertificateReport, ErrorFactor, ExtremalOptions,
    FourierAtomFunction, GammaReading, Goal,
};
use l1disc::{Error, PointSet};

const MAX_RANDOM_POINTS: usize = 1 << 24;

#[derive(Parser, Debug)]
#[command(name = "l1disc", version, about = "Discrepancy norms and certified L1 lower bounds")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Global {
    /// Emit JSON instead of `key = value` lines.
    #[arg(long, global = true)]
    json: bool,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Significant decimal digits in certified output.
    #[arg(long, global = true, default_value_t = 20, value_parser = clap::value_parser!(u32).range(1..=1000))]
    precision: u32,
    /// Deepest auxiliary level, or `auto`.
    #[arg(long, global = true, default_value = "auto")]
    max_level: String,
    /// Monte-Carlo and sampling budget.
    #[arg(long, global = true, default_value_t = 100_000)]
    samples: u64,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a point set and write it as CSV.
    Gen(GenArgs),
    /// L1, L2, L-infinity norms and d_N for a point set.
    Norms(NormsArgs),
    /// Auxiliary rectangle families and their inner products with D.
    Aux(AuxArgs),
    /// Run the structural and integral checks on the auxiliary functions.
    Lemmas(LemmasArgs),
    /// Coefficients of (Σ z_i)^k in elementary symmetric polynomials.
    Comb(CombArgs),
    /// The linear-part functional of a test function.
    Lin(LinArgs),
    /// Certified lower bound for the L1 norm of D.
    Certificate(CertificateArgs),
    /// Numerical constants of the asymptotic bounds.
    Constants(ConstantsArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Kind {
    Vdc,
    Random,
    Symmetrize,
}

#[derive(Args, Debug)]
struct GenArgs {
    #[arg(long, value_enum)]
    kind: Kind,
    /// log2 of the van der Corput size.
    #[arg(long)]
    m: Option<u32>,
    /// Number of random points.
    #[arg(long)]
    n: Option<usize>,
    /// Input set for `symmetrize`.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Which {
    L1,
    L2,
    Linf,
    Dn,
    All,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Method {
    Exact,
    Mc,
}

#[derive(Args, Debug)]
struct NormsArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value = "all")]
    which: Which,
    #[arg(long, value_enum, default_value = "exact")]
    method: Method,
}

#[derive(Args, Debug)]
struct AuxArgs {
    #[arg(long)]
    input: PathBuf,
    /// Only this direction.
    #[arg(long)]
    i: Option<u32>,
}

#[derive(Args, Debug)]
struct LemmasArgs {
    #[arg(long)]
    input: PathBuf,
    /// Level for the product integral check.
    #[arg(long)]
    product_level: Option<u32>,
    /// Largest index tuple in the product check.
    #[arg(long, default_value_t = 3)]
    max_tuple: usize,
    #[arg(long, hide = true)]
    corrupt_tree: bool,
}

#[derive(Args, Debug)]
struct CombArgs {
    #[arg(long)]
    n: u32,
    /// Odd power.
    #[arg(long)]
    k: u32,
    /// Solve for every coefficient and verify at all sign vectors.
    #[arg(long)]
    table: bool,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Function {
    Sin,
    RandomOdd,
}

#[derive(Args, Debug)]
struct LinArgs {
    #[arg(long, default_value_t = 100)]
    n: u32,
    /// Highest odd order of the series route.
    #[arg(long, default_value_t = 41)]
    order: u32,
    #[arg(long, value_enum, default_value = "sin")]
    function: Function,
    /// Also evaluate the Riesz-type product on this point set.
    #[arg(long)]
    halasz_input: Option<PathBuf>,
    #[arg(long, default_value_t = 0.01)]
    gamma: f64,
    #[arg(long)]
    imaginary_gamma: bool,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum FactorArg {
    Exact,
    Factorial,
}

#[derive(Args, Debug)]
struct CertificateArgs {
    #[arg(long)]
    input: PathBuf,
    /// Multiplier on the higher-order error terms.
    #[arg(long, value_enum, default_value = "exact")]
    error_factor: FactorArg,
    /// Also compute the exact L1 norm and compare.
    #[arg(long)]
    check: bool,
}

#[derive(Args, Debug)]
struct ConstantsArgs {
    #[arg(long, default_value_t = 2)]
    from: u32,
    #[arg(long, default_value_t = 64)]
    to: u32,
}

enum Failure {
    Usage(String),
    Resource(String),
    Internal(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::ResourceLimit(_) => Failure::Resource(e.to_string()),
            Error::Internal(_) => Failure::Internal(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

/// A finished command: its result object and whether every check passed.
struct Outcome {
    result: Value,
    passed: bool,
    /// Written verbatim instead of the report, for `gen` to standard output.
    raw: Option<String>,
}

impl Outcome {
    fn ok(result: Value) -> Self {
        Self {
            result,
            passed: true,
            raw: None,
        }
    }
}

fn max_level(value: &str) -> Result<MaxLevel, Failure> {
    if value == "auto" {
        return Ok(MaxLevel::Auto);
    }
    value.parse()
        .map(MaxLevel::Fixed)
        .map_err(|_| Failure::Usage(format!("--max-level must be `auto` or an integer, got `{value}`")))
}

/// Working precision: the displayed digits plus four, and never below 64.
fn prec(g: &Global) -> u32 {
    bits_for_digits((g.precision + 4).max(64))
}

fn read(path: &PathBuf) -> Result<PointSet, Failure> {
    Ok(PointSet::read_csv(path)?)
}

fn config(g: &Global, command: &str, extra: Value) -> Value {
    let mut c = json!({
        "command": command,
        "seed": g.seed,
        "precision": g.precision,
        "max_level": g.max_level,
        "samples": g.samples,
    });
    if let (Value::Object(m), Value::Object(e)) = (&mut c, extra) {
        m.extend(e);
    }
    c
}

fn path_str(p: &Option<PathBuf>) -> Value {
    p.as_ref().map_or(Value::Null, |p| Value::String(p.display().to_string()))
}

fn cmd_gen(g: &Global, a: &GenArgs) -> Result<Outcome, Failure> {
    let set = match a.kind {
        Kind::Vdc => {
            let m = a.m.ok_or_else(|| Failure::Usage("--kind vdc needs --m".into()))?;
            PointSet::van_der_corput(m)?
        }
        Kind::Random => {
            let n = a.n.ok_or_else(|| Failure::Usage("--kind random needs --n".into()))?;
            if n > MAX_RANDOM_POINTS {
                return Err(Failure::Resource(format!("{n} points exceeds the limit {MAX_RANDOM_POINTS}")));
            }
            PointSet::random_uniform(n, g.seed)?
        }
        Kind::Symmetrize => {
            let input = a.input.as_ref().ok_or_else(|| Failure::Usage("--kind symmetrize needs --input".into()))?;
            read(input)?.symmetrize()
        }
    };
    let result = json!({"label": set.label, "points": set.len(), "out": path_str(&a.out)});
    match &a.out {
        Some(path) => {
            set.write_csv(path)?;
            Ok(Outcome::ok(result))
        }
        None => Ok(Outcome {
            result,
            passed: true,
            raw: Some(set.to_csv()),
        }),
    }
}

fn cmd_norms(g: &Global, a: &NormsArgs) -> Result<Outcome, Failure> {
    let set = read(&a.input)?;
    let p = prec(g);
    let wants = |w: Which| a.which == w || a.which == Which::All;
    let mut out = Map::new();
    out.insert("label".into(), json!(set.label));
    out.insert("N".into(), json!(set.len()));
    match a.method {
        Method::Exact => {
            let l1 = if wants(Which::L1) || wants(Which::Dn) {
                Some(l1_norm_exact(&set, p)?)
            } else {
                None
            };
            if let (true, Some(l1)) = (wants(Which::L1), &l1) {
                out.insert(
                    "l1".into(),
                    json!({
                        "value": l1.value.decimal(g.precision),
                        "lower": l1.value.lower_decimal(g.precision),
                        "upper": l1.value.upper_decimal(g.precision),
                        "exact": l1.exact.as_ref().map(rational_string),
                        "log_terms": l1.log_terms,
                    }),
                );
            }
            if wants(Which::L2) {
                let l2 = l2_norm_sq(&set)?;
                out.insert("l2_squared".into(), json!(rational_string(&l2)));
            }
            if wants(Which::Linf) {
                out.insert("linf".into(), json!(rational_string(&linf_norm(&set)?)));
            }
            if let (true, Some(l1)) = (wants(Which::Dn), &l1) {
                let dn = if set.len() >= 2 {
                    let d = d_n_from_l1(&l1.value, set.len() as u64)?;
                    json!({"value": d.decimal(g.precision), "lower": d.lower_decimal(g.precision), "upper": d.upper_decimal(g.precision)})
                } else {
                    Value::Null
                };
                out.insert("d_n".into(), dn);
            }
        }
        Method::Mc => {
            if wants(Which::Linf) || wants(Which::Dn) {
                if a.which != Which::All {
                    return Err(Failure::Usage("the Monte-Carlo method covers l1 and l2 only".into()));
                }
            }
            if wants(Which::L1) {
                let e = monte_carlo_norm(&set, NormKind::L1, g.samples, g.seed)?;
                out.insert("l1".into(), json!(e));
            }
            if wants(Which::L2) {
                let e = monte_carlo_norm(&set, NormKind::L2Squared, g.samples, g.seed)?;
                out.insert("l2_squared".into(), json!(e));
            }
        }
    }
    Ok(Outcome::ok(Value::Object(out)))
}

fn cmd_aux(g: &Global, a: &AuxArgs) -> Result<Outcome, Failure> {
    let set = read(&a.input)?;
    let level = max_level(&g.max_level)?;
    let trees = match a.i {
        Some(i) => vec![build_tree(&set, i, level)?],
        None => build_all_trees(&set, level)?,
    };
    let summaries: Vec<TreeSummary> = trees.iter().map(TreeSummary::new).collect();
    Ok(Outcome::ok(json!({"label": set.label, "N": set.len(), "trees": summaries})))
}

fn cmd_lemmas(g: &Global, a: &LemmasArgs) -> Result<Outcome, Failure> {
    let set = read(&a.input)?;
    let options = LemmaOptions {
        max_level: max_level(&g.max_level)?,
        product_level: a.product_level,
        max_tuple: a.max_tuple,
        samples: g.samples,
        seed: g.seed,
        corrupt_tree: a.corrupt_tree,
        ..LemmaOptions::default()
    };
    let report = lemma_suite(&set, &options)?;
    let passed = report.all_passed;
    Ok(Outcome {
        result: json!({"label": set.label, "report": report}),
        passed,
        raw: None,
    })
}

fn cmd_comb(a: &CombArgs) -> Result<Outcome, Failure> {
    let row = a1_row(a.n, a.k)?;
    let mut passed = row.agree;
    let mut result = json!({"a1": row});
    if a.table {
        let table = full_table(a.n, a.k)?;
        passed &= table.all_integers;
        result["table"] = json!(table);
    }
    Ok(Outcome {
        result,
        passed,
        raw: None,
    })
}

fn complex_json(re: f64, im: f64) -> Value {
    json!({"re": re, "im": im})
}

fn cmd_lin(g: &Global, a: &LinArgs) -> Result<Outcome, Failure> {
    let t = match a.function {
        Function::Sin => FourierAtomFunction::sin(),
        Function::RandomOdd => FourierAtomFunction::random_odd(3, 3, g.seed),
    };
    let p = prec(g);
    let direct = lin_n(&t, a.n)?;
    let series = lin_series_crosscheck(&t, a.n, a.order)?;
    let limit = lin_limit(&t, p)?;
    let scaled = direct * f64::from(a.n).sqrt();
    let agree = (direct - series).norm() <= 1e-10;
    let max = extremal_search(&ExtremalOptions::default())?;
    let min = extremal_search(&ExtremalOptions {
        lo: -10.0,
        goal: Goal::Minimize,
        ..ExtremalOptions::default()
    })?;
    let atoms: Vec<Value> = t
        .atoms
        .iter()
        .map(|at| json!({"c": [rational_string(&at.c.re), rational_string(&at.c.im)], "omega": rational_string(&at.omega)}))
        .collect();
    let mut result = json!({
        "function": atoms,
        "odd": t.is_odd(),
        "lin_n": complex_json(direct.re, direct.im),
        "sqrt_n_lin_n": complex_json(scaled.re, scaled.im),
        "series": complex_json(series.re, series.im),
        "series_agrees": agree,
        "lin_limit": {"re": limit.re.plus_minus(g.precision), "im": limit.im.plus_minus(g.precision)},
        "sup_norm": t.sup_norm_via_coefficients(),
        "extremal_max": max,
        "extremal_min": min,
    });
    if let Some(path) = &a.halasz_input {
        let set = read(path)?;
        let reading = if a.imaginary_gamma {
            GammaReading::ImaginaryUnit
        } else {
            GammaReading::IndexTimesGamma
        };
        result["halasz"] = json!(halasz_g_values(&set, a.gamma, reading, g.samples, g.seed)?);
    }
    Ok(Outcome {
        result,
        passed: agree,
        raw: None,
    })
}

fn cmd_certificate(g: &Global, a: &CertificateArgs) -> Result<Outcome, Failure> {
    let set = read(&a.input)?;
    let p = prec(g);
    let opts = CertificateOptions {
        prec: p,
        max_level: max_level(&g.max_level)?,
        error_factor: match a.error_factor {
            FactorArg::Exact => ErrorFactor::Exact,
            FactorArg::Factorial => ErrorFactor::Factorial,
        },
    };
    let c = certificate(&set, &opts)?;
    let mut result = serde_json::to_value(CertificateReport::new(&c, g.precision)).map_err(|e| Failure::Internal(e.to_string()))?;
    let table = constants_table(p)?;
    let constants: Map<String, Value> = table
        .entries
        .iter()
        .filter(|e| !e.external)
        .map(|e| (e.name.to_string(), json!(e.value)))
        .collect();
    result["constants"] = Value::Object(constants);
    let mut passed = true;
    if a.check {
        let l1 = l1_norm_exact(&set, p)?;
        let sound = c.l1_lower_bound.upper() <= l1.value.upper();
        result["l1_exact"] = json!(l1.value.decimal(g.precision));
        result["sound"] = json!(sound);
        passed = sound;
    }
    Ok(Outcome {
        result,
        passed,
        raw: None,
    })
}

fn cmd_constants(g: &Global, a: &ConstantsArgs) -> Result<Outcome, Failure> {
    let p = prec(g);
    let table = constants_table(p)?;
    let asymptotic = asymptotic_dn_table(a.from, a.to, p)?;
    let passed = table.all_match;
    Ok(Outcome {
        result: json!({"constants": table, "asymptotic_dn": asymptotic}),
        passed,
        raw: None,
    })
}

fn run(cli: &Cli) -> Result<(Value, Outcome), Failure> {
    let g = &cli.global;
    let (name, extra, outcome) = match &cli.command {
        Command::Gen(a) => (
            "gen",
            json!({"kind": format!("{:?}", a.kind).to_lowercase(), "m": a.m, "n": a.n, "input": path_str(&a.input)}),
            cmd_gen(g, a)?,
        ),
        Command::Norms(a) => (
            "norms",
            json!({"input": a.input.display().to_string(), "which": format!("{:?}", a.which).to_lowercase(), "method": format!("{:?}", a.method).to_lowercase()}),
            cmd_norms(g, a)?,
        ),
        Command::Aux(a) => ("aux", json!({"input": a.input.display().to_string(), "i": a.i}), cmd_aux(g, a)?),
        Command::Lemmas(a) => (
            "lemmas",
            json!({"input": a.input.display().to_string(), "product_level": a.product_level, "max_tuple": a.max_tuple, "corrupt_tree": a.corrupt_tree}),
            cmd_lemmas(g, a)?,
        ),
        Command::Comb(a) => ("comb", json!({"n": a.n, "k": a.k, "table": a.table}), cmd_comb(a)?),
        Command::Lin(a) => (
            "lin",
            json!({"n": a.n, "order": a.order, "function": format!("{:?}", a.function).to_lowercase(), "gamma": a.gamma, "imaginary_gamma": a.imaginary_gamma}),
            cmd_lin(g, a)?,
        ),
        Command::Certificate(a) => (
            "certificate",
            json!({"input": a.input.display().to_string(), "error_factor": format!("{:?}", a.error_factor).to_lowercase(), "check": a.check}),
            cmd_certificate(g, a)?,
        ),
        Command::Constants(a) => ("constants", json!({"from": a.from, "to": a.to}), cmd_constants(g, a)?),
    };
    Ok((config(g, name, extra), outcome))
}

/// `key = value` lines, nested keys joined with dots.
fn flatten(prefix: &str, v: &Value, out: &mut Vec<String>) {
    match v {
        Value::Object(m) => {
            for (k, x) in m {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, x, out);
            }
        }
        Value::Array(items) => {
            for (k, x) in items.iter().enumerate() {
                flatten(&format!("{prefix}[{k}]"), x, out);
            }
        }
        Value::String(s) => out.push(format!("{prefix} = {s}")),
        other => out.push(format!("{prefix} = {other}")),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok((config, outcome)) => {
            let status = if outcome.passed { "ok" } else { "check_failed" };
            let text = match &outcome.raw {
                Some(raw) => raw.clone(),
                None => {
                    let report = json!({"config": config, "status": status, "result": outcome.result});
                    if cli.global.json {
                        serde_json::to_string_pretty(&report).expect("values serialize") + "\n"
                    } else {
                        let mut lines = Vec::new();
                        flatten("", &report, &mut lines);
                        lines.join("\n") + "\n"
                    }
                }
            };
            let _ = std::io::stdout().lock().write_all(text.as_bytes());
            if outcome.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(failure) => {
            let (code, message) = match failure {
                Failure::Usage(m) => (2, m),
                Failure::Internal(m) => (1, m),
                Failure::Resource(m) => (3, m),
            };
            eprintln!("error: {message}");
            ExitCode::from(code)
        }
    }
}
