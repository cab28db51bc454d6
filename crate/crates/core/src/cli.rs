//! Command-line front end and the `verify` manifest runner.
//!
//! Manifest lines (blank lines and `#` comments are skipped):
//!
//! ```text
//! CHECK <factor> | <factor> | .. == <scalar expression or `engine`> @ N=2,c=1/2 @ blocks=1,2,c=1
//! IDENTITY <series> @ N=2,trials=20 => zero
//! ```
//!
//! Configurations are separated by ` @ ` with surrounding spaces, since
//! `@` without spaces marks slot colors.
//!
//! `CHECK` compares the claimed expectation of the product of the factors
//! (or the engine's own value for `engine`) with the oracle under every
//! listed configuration. `IDENTITY` reads each generator of the series as a
//! product of traces of powers of one matrix (labels ignored) and samples
//! random matrices.

use std::collections::BTreeMap;
use std::io::Write;

use clap::{Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::algebra::{expectation, Algebra, AlgebraError, GraphRecord};
use crate::coeff::{fmt_rational, Coefficient, Rational};
use crate::observables::Series;
use crate::oracle::{oracle_check, sample_matrix_identity, OracleConfig, OracleError, TraceExpr, DEFAULT_SEED};
use crate::scaling::{
    free_normalization_exponent, interacting_normalization_exponent, thooft_coupling_exponent, FieldDescriptor,
};
use crate::serial::{to_json, SerialError};
use crate::syntax::{labels, parse_coefficient, parse_series, parse_series_with, ParseError, ParseOptions};
use crate::transport::{transport, TransportKernel};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("parse error in {what}: {source}")]
    Parse { what: String, source: ParseError },
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Serial(#[from] SerialError),
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("manifest line {line}: {message}")]
    Manifest { line: usize, message: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Matrix,
    Kernel,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Switch {
    On,
    Off,
}

/// Exact 1/N expansion of Gaussian multi-trace observables.
#[derive(Parser, Debug)]
#[command(name = "largen", version)]
struct Cli {
    /// Contraction weights: one scalar `g` or ordered kernels `K(x,y)`.
    #[arg(long, value_enum, default_value = "matrix", global = true)]
    mode: ModeArg,
    /// Number of projector colors (colored algebra).
    #[arg(long, global = true)]
    colors: Option<u8>,
    /// Drop terms above this eps-degree (the result is flagged truncated).
    #[arg(long = "max-eps", global = true, allow_hyphen_values = true)]
    max_eps: Option<i32>,
    /// Track hbar, one power per contraction line.
    #[arg(long, value_enum, default_value = "on", global = true)]
    hbar: Switch,
    /// Emit JSON instead of text.
    #[arg(long, global = true)]
    json: bool,
    /// Seed for randomized identity checks.
    #[arg(long, default_value_t = DEFAULT_SEED, global = true)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Algebra product A.B
    Product { a: String, b: String },
    /// Expectation of the product of generators
    Moment {
        #[arg(required = true)]
        factors: Vec<String>,
    },
    /// Connected product of the factors
    Connected {
        #[arg(required = true)]
        factors: Vec<String>,
    },
    /// A.B - B.A
    Commutator { a: String, b: String },
    /// Change of normal-ordering kernel by F = target - source
    Transport {
        series: String,
        /// Name of the kernel-difference symbol.
        #[arg(long = "f-symbol", default_value = "F")]
        f_symbol: String,
        /// Tag naming the target basis, echoed in diagnostics.
        #[arg(long)]
        target: Option<String>,
    },
    /// 't Hooft exponents of each generator
    Scaling { series: String },
    /// Product terms grouped by eps-degree with the graph census
    GenusTable { a: String, b: String },
    /// Run a manifest of oracle checks
    Verify { manifest: String },
}

struct Context {
    algebra: Algebra,
    parse: ParseOptions,
    json: bool,
    seed: u64,
}

impl Context {
    fn new(cli: &Cli) -> Self {
        let mut algebra = match cli.mode {
            ModeArg::Matrix => Algebra::matrix(),
            ModeArg::Kernel => Algebra::kernel(),
        }
        .with_cap(cli.max_eps)
        .with_hbar(cli.hbar == Switch::On);
        if let Some(k) = cli.colors {
            algebra = algebra.with_colors(k);
        }
        Context {
            algebra,
            parse: ParseOptions {
                max_color: Some(cli.colors.unwrap_or(0)),
            },
            json: cli.json,
            seed: cli.seed,
        }
    }

    fn series(&self, arg: &str, what: &str) -> Result<Series, CliError> {
        let text = read_arg(arg)?;
        parse_series_with(&text, self.parse).map_err(|source| CliError::Parse {
            what: what.into(),
            source,
        })
    }

    /// Parses operands and checks their slot labels are disjoint.
    fn operands(&self, args: &[String]) -> Result<Vec<Series>, CliError> {
        let mut seen: BTreeMap<String, usize> = BTreeMap::new();
        let mut out = Vec::new();
        for (i, a) in args.iter().enumerate() {
            let s = self.series(a, &format!("operand {}", i + 1))?;
            for l in labels(&s) {
                if let Some(j) = seen.insert(l.clone(), i) {
                    return Err(CliError::Usage(format!(
                        "slot label `{l}` appears in operands {} and {}; labels must be unique",
                        j + 1,
                        i + 1
                    )));
                }
            }
            out.push(s);
        }
        Ok(out)
    }

    fn emit(&self, s: &Series, out: &mut dyn Write) -> Result<(), CliError> {
        let text = if self.json {
            to_json(s, self.algebra.mode, self.algebra.colors)?
        } else {
            s.to_string()
        };
        writeln!(out, "{text}").map_err(io_err)
    }
}

fn io_err(e: std::io::Error) -> CliError {
    CliError::Io {
        path: "<output>".into(),
        message: e.to_string(),
    }
}

/// `@path` reads an expression from a file; anything else is literal.
fn read_arg(arg: &str) -> Result<String, CliError> {
    match arg.strip_prefix('@') {
        Some(path) => std::fs::read_to_string(path).map_err(|e| CliError::Io {
            path: path.into(),
            message: e.to_string(),
        }),
        None => Ok(arg.to_string()),
    }
}

/// Runs the command line `args` (including the program name); returns the
/// exit status.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{text}");
                2
            } else {
                let _ = write!(out, "{text}");
                0
            };
        }
    };
    match dispatch(&cli, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            match e {
                CliError::Usage(_) | CliError::Parse { .. } => 2,
                _ => 1,
            }
        }
    }
}

fn dispatch(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, CliError> {
    let ctx = Context::new(cli);
    let alg = &ctx.algebra;
    match &cli.command {
        Command::Product { a, b } => {
            let ops = ctx.operands(&[a.clone(), b.clone()])?;
            ctx.emit(&alg.product(&ops[0], &ops[1])?, out)?;
        }
        Command::Commutator { a, b } => {
            let ops = ctx.operands(&[a.clone(), b.clone()])?;
            ctx.emit(&alg.commutator(&ops[0], &ops[1])?, out)?;
        }
        Command::Moment { factors } => {
            let ops = ctx.operands(factors)?;
            let value = expectation(&alg.product_all(&ops)?);
            ctx.emit(&Series::scalar(value), out)?;
        }
        Command::Connected { factors } => {
            let ops = ctx.operands(factors)?;
            ctx.emit(&alg.connected_product(&ops)?, out)?;
        }
        Command::Transport {
            series,
            f_symbol,
            target,
        } => {
            let s = ctx.series(series, "series")?;
            alg.check(&s)?;
            let outcome = transport(&s, &TransportKernel::new(f_symbol, alg.mode), alg.track_hbar);
            if let Some(tag) = target {
                writeln!(err, "note: result expressed in basis `{tag}`").map_err(io_err)?;
            }
            for w in &outcome.warnings {
                writeln!(err, "warning: {w}").map_err(io_err)?;
            }
            ctx.emit(&outcome.series, out)?;
        }
        Command::Scaling { series } => {
            let s = ctx.series(series, "series")?;
            writeln!(out, "generator\tT\tn\tfree\tinteracting\tcoupling").map_err(io_err)?;
            for (g, _) in s.terms() {
                let d = FieldDescriptor::of(g);
                writeln!(
                    out,
                    "{g}\t{}\t{}\t{}\t{}\t{}",
                    d.traces,
                    d.fields,
                    free_normalization_exponent(d),
                    interacting_normalization_exponent(d),
                    thooft_coupling_exponent(d)
                )
                .map_err(io_err)?;
            }
        }
        Command::GenusTable { a, b } => {
            let ops = ctx.operands(&[a.clone(), b.clone()])?;
            genus_table(alg, &ops[0], &ops[1], out)?;
        }
        Command::Verify { manifest } => {
            let text = std::fs::read_to_string(manifest).map_err(|e| CliError::Io {
                path: manifest.clone(),
                message: e.to_string(),
            })?;
            let failures = verify_manifest(&text, ctx.seed, out)?;
            writeln!(out, "{} failure(s)", failures).map_err(io_err)?;
            return Ok(if failures == 0 { 0 } else { 1 });
        }
    }
    Ok(0)
}

fn genus_table(alg: &Algebra, a: &Series, b: &Series, out: &mut dyn Write) -> Result<(), CliError> {
    // (eps exponent, handles) -> graph count
    let census = std::sync::Mutex::new(BTreeMap::<(i32, u32), usize>::new());
    let inspect = |r: &GraphRecord<'_>| {
        if r.weight.is_some() {
            let key = (r.report.exponent(), r.report.total_handles().unwrap_or(u32::MAX));
            *census.lock().expect("census lock").entry(key).or_default() += 1;
        }
    };
    let p = alg.product_inspected(a, b, Some(&inspect))?;
    let census = census.into_inner().expect("census lock");
    writeln!(out, "graph census (exponent of the graph, handles, graphs):").map_err(io_err)?;
    for ((e, h), n) in &census {
        writeln!(out, "  eps^{e}\tH={h}\t{n}").map_err(io_err)?;
    }
    let mut by_degree: BTreeMap<i32, Series> = BTreeMap::new();
    for (g, c) in p.terms() {
        for (m, r) in c.terms() {
            by_degree
                .entry(m.eps_degree())
                .or_default()
                .add_term(Coefficient::term(r.clone(), m.clone()), g.clone());
        }
    }
    writeln!(out, "terms by eps-degree:").map_err(io_err)?;
    for (d, s) in &by_degree {
        writeln!(out, "  [{d}] {s}").map_err(io_err)?;
    }
    if p.truncated {
        writeln!(out, "(truncated by --max-eps)").map_err(io_err)?;
    }
    Ok(())
}

/// Parses `N=2,blocks=1,1,c=1/2,hbar=1` into a config and extra keys.
fn parse_config(text: &str) -> Result<(OracleConfig, BTreeMap<String, String>), String> {
    let mut fields: Vec<(String, Vec<String>)> = Vec::new();
    for item in text.split(',').map(str::trim) {
        match item.split_once('=') {
            Some((k, v)) => fields.push((k.trim().to_string(), vec![v.trim().to_string()])),
            None => match fields.last_mut() {
                Some((_, vs)) if !item.is_empty() => vs.push(item.to_string()),
                _ => return Err(format!("malformed configuration `{text}`")),
            },
        }
    }
    let mut n = None;
    let mut blocks = None;
    let mut c = Rational::from_integer(1.into());
    let mut hbar = Rational::from_integer(1.into());
    let mut extra = BTreeMap::new();
    let rational = |v: &str| -> Result<Rational, String> {
        parse_coefficient(v)
            .ok()
            .and_then(|c| c.as_constant())
            .ok_or_else(|| format!("expected a rational, found `{v}`"))
    };
    let natural = |v: &str| v.parse::<usize>().map_err(|_| format!("expected a natural number, found `{v}`"));
    for (k, vs) in fields {
        match k.as_str() {
            "N" => n = Some(natural(&vs[0])?),
            "blocks" => blocks = Some(vs.iter().map(|v| natural(v)).collect::<Result<Vec<_>, _>>()?),
            "c" => c = rational(&vs.join(","))?,
            "hbar" => hbar = rational(&vs.join(","))?,
            _ => {
                extra.insert(k, vs.join(","));
            }
        }
    }
    let cfg = match (n, blocks) {
        (Some(n), None) => OracleConfig::new(n, c),
        (n, Some(b)) => {
            let cfg = OracleConfig::with_blocks(b, c);
            if n.is_some_and(|n| n != cfg.n) {
                return Err("blocks do not sum to N".into());
            }
            cfg
        }
        (None, None) => return Err("configuration needs N or blocks".into()),
    };
    cfg.validate().map_err(|e| e.to_string())?;
    Ok((cfg.with_hbar(hbar), extra))
}

fn trace_expr(s: &Series) -> Result<TraceExpr, String> {
    s.terms()
        .map(|(g, c)| {
            let r = c
                .as_constant()
                .ok_or_else(|| format!("coefficient `{c}` is not a constant"))?;
            Ok((r, g.multi_index()))
        })
        .collect()
}

/// Runs every manifest line, printing one result line per check; returns
/// the number of failures.
pub fn verify_manifest(text: &str, seed: u64, out: &mut dyn Write) -> Result<usize, CliError> {
    let mut failures = 0;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fail = |message: String| CliError::Manifest {
            line: line_no,
            message,
        };
        if let Some(rest) = line.strip_prefix("CHECK ") {
            let mut parts = rest.split(" @ ");
            let claim_part = parts.next().unwrap_or_default();
            let (lhs, rhs) = claim_part
                .split_once("==")
                .ok_or_else(|| fail("expected `==`".into()))?;
            let factors = lhs
                .split('|')
                .map(|f| parse_series(f.trim()).map_err(|e| fail(e.to_string())))
                .collect::<Result<Vec<_>, _>>()?;
            let k = factors.iter().map(Series::max_color).max().unwrap_or(0);
            let claim = if rhs.trim() == "engine" {
                let mut alg = Algebra::matrix();
                if k > 0 {
                    alg = alg.with_colors(k);
                }
                let p = alg.product_all(&factors).map_err(|e| fail(e.to_string()))?;
                expectation(&p)
            } else {
                parse_coefficient(rhs.trim()).map_err(|e| fail(e.to_string()))?
            };
            let cfgs = parts
                .map(|c| parse_config(c.trim()).map(|(cfg, _)| cfg.with_max_legs(16)))
                .collect::<Result<Vec<_>, _>>()
                .map_err(fail)?;
            if cfgs.is_empty() {
                return Err(fail("no configuration after `@`".into()));
            }
            let report = oracle_check(&factors, &claim, &cfgs).map_err(|e| fail(e.to_string()))?;
            for l in &report.lines {
                let status = if l.matches() { "ok" } else { "MISMATCH" };
                if !l.matches() {
                    failures += 1;
                }
                writeln!(
                    out,
                    "{status} line {line_no} [{}] claimed={} oracle={}",
                    l.config,
                    fmt_rational(&l.claimed),
                    fmt_rational(&l.oracle)
                )
                .map_err(io_err)?;
            }
        } else if let Some(rest) = line.strip_prefix("IDENTITY ") {
            let (body, expect) = rest
                .rsplit_once("=>")
                .ok_or_else(|| fail("expected `=> zero` or `=> nonzero`".into()))?;
            let (expr, cfg) = body
                .split_once(" @ ")
                .ok_or_else(|| fail("expected ` @ N=..`".into()))?;
            let s = parse_series(expr.trim()).map_err(|e| fail(e.to_string()))?;
            let expr = trace_expr(&s).map_err(fail)?;
            let (cfg, extra) = parse_config(cfg.trim()).map_err(fail)?;
            let trials = match extra.get("trials") {
                Some(t) => t.parse().map_err(|_| fail(format!("bad trial count `{t}`")))?,
                None => 20,
            };
            let want_zero = match expect.trim() {
                "zero" => true,
                "nonzero" => false,
                other => return Err(fail(format!("unknown expectation `{other}`"))),
            };
            let zero = sample_matrix_identity(&expr, cfg.n, trials, seed);
            let ok = zero == want_zero;
            if !ok {
                failures += 1;
            }
            writeln!(
                out,
                "{} line {line_no} [N={},trials={trials},seed={seed}] {}",
                if ok { "ok" } else { "MISMATCH" },
                cfg.n,
                if zero { "vanishes" } else { "does not vanish" }
            )
            .map_err(io_err)?;
        } else {
            return Err(fail(format!("unknown directive `{line}`")));
        }
    }
    Ok(failures)
}
