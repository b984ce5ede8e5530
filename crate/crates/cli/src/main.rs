//! `grushin`: verify weighted Hardy-type identities on Baouendi–Grushin spaces.
//!
//! Exit status: 0 when every requested check passes, 1 when a check fails,
//! 2 on usage or configuration errors.

mod campaign;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use grushin_core::verifier::{round12, write_csv, DEFAULT_TOLERANCE};
use grushin_core::weights::{log_grid, reference_config};
use grushin_core::{
    bessel_residual, catalog_get, derive_weight, extremal_constants, hpw_alpha, hpw_deficit, parse, verify_identity,
    CompiledField, Error, GrushinSpace, IdentitySpec, Params, QuadratureSettings, VerificationReport,
};
use serde_json::{json, Value};

/// Tolerance used when comparing derived and closed-form weights, and for
/// Bessel residuals.
const WEIGHT_TOLERANCE: f64 = 1e-6;

#[derive(Parser)]
#[command(name = "grushin", version, about = "Sharp Hardy-type identities on Baouendi-Grushin spaces")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check one identity term by term and report its residual.
    Verify(VerifyArgs),
    /// Evaluate the weight produced by a (v, phi) pair at a point.
    DeriveWeight(DeriveArgs),
    /// Extremal constants of the C_p ratio.
    Constants {
        #[arg(long)]
        p: f64,
    },
    /// Heisenberg-Pauli-Weyl deficit identity at the optimal parameter.
    Hpw(HpwArgs),
    /// Residual of the radial p-Bessel equation for a catalog entry.
    Bessel(BesselArgs),
    /// Run every verification listed in a JSON config.
    Campaign(CampaignArgs),
}

#[derive(Args)]
struct EntryArgs {
    /// Catalog key.
    #[arg(long)]
    catalog: String,
    /// Comma-separated `name=value` pairs, merged over the reference parameters.
    #[arg(long, default_value = "")]
    params: String,
    /// `m,k,gamma`; defaults to the entry's reference space.
    #[arg(long)]
    space: Option<String>,
    /// Exponent; defaults to the entry's reference exponent.
    #[arg(long)]
    p: Option<f64>,
}

#[derive(Args)]
struct QuadArgs {
    #[arg(long)]
    nodes: Option<usize>,
    #[arg(long)]
    panels: Option<usize>,
    /// Per-axis bounds `lo:hi,lo:hi,...`; derived from the test function when absent.
    #[arg(long = "box")]
    bx: Option<String>,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    entry: EntryArgs,
    /// Test function; defaults to the entry's reference bump.
    #[arg(long)]
    f: Option<String>,
    #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
    tolerance: f64,
    #[command(flatten)]
    quad: QuadArgs,
    /// Also write the report to a `.json` or `.csv` file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DeriveArgs {
    #[arg(long)]
    space: String,
    #[arg(long)]
    p: f64,
    #[arg(long)]
    v: Option<String>,
    #[arg(long)]
    phi: Option<String>,
    /// Comma-separated coordinates `x1,...,xm,y1,...,yk`.
    #[arg(long)]
    at: String,
    /// Compare against this entry's closed form (and take v, phi from it if not given).
    #[arg(long)]
    catalog: Option<String>,
    #[arg(long, default_value = "")]
    params: String,
}

#[derive(Args)]
struct HpwArgs {
    #[arg(long)]
    space: String,
    #[arg(long)]
    p: f64,
    #[arg(long)]
    f: String,
    #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
    tolerance: f64,
    #[command(flatten)]
    quad: QuadArgs,
}

#[derive(Args)]
struct BesselArgs {
    #[command(flatten)]
    entry: EntryArgs,
    /// Log-spaced radii `r0:r1:n`.
    #[arg(long, default_value = "0.1:2.5:512")]
    grid: String,
}

#[derive(Args)]
struct CampaignArgs {
    #[arg(long)]
    config: PathBuf,
    /// Maximum number of runs executed concurrently.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// CSV output; defaults to `<config>.csv` beside the config.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// JSON array output; defaults to `<config>.report.json` beside the config.
    #[arg(long)]
    json: Option<PathBuf>,
}

/// Failure categories mapped to exit codes.
enum Failure {
    Usage(String),
    Check,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn check(pass: bool) -> Outcome {
    if pass {
        Ok(())
    } else {
        Err(Failure::Check)
    }
}

pub(crate) fn parse_space(text: &str) -> Result<GrushinSpace, Failure> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    let bad = || usage(format!("--space: expected `m,k,gamma`, got `{text}`"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let m = parts[0].parse().map_err(|_| bad())?;
    let k = parts[1].parse().map_err(|_| bad())?;
    let g = parts[2].parse().map_err(|_| bad())?;
    Ok(GrushinSpace::new(m, k, g)?)
}

fn parse_expr(flag: &str, text: &str) -> Result<grushin_core::FieldExpr, Failure> {
    parse(text).map_err(|d| {
        let caret = format!("{}^", " ".repeat(d.offset));
        usage(format!("{flag}: {d}\n  {text}\n  {caret}"))
    })
}

fn parse_params(text: &str) -> Result<Params, Failure> {
    Params::parse(text).map_err(|e| usage(format!("--params: {e}")))
}

/// The catalog triple selected by `--catalog/--params/--space/--p`.
fn resolve_entry(e: &EntryArgs) -> Result<grushin_core::WeightTriple, Failure> {
    let reference = reference_config(&e.catalog)?;
    let params = reference.params.merged(&parse_params(&e.params)?);
    let space = match &e.space {
        Some(s) => parse_space(s)?,
        None => reference.space,
    };
    let p = e.p.unwrap_or(reference.p);
    Ok(catalog_get(&e.catalog, &space, p, &params)?)
}

fn quad_settings(q: &QuadArgs) -> Result<QuadratureSettings, Failure> {
    let mut s = QuadratureSettings::default();
    if let Some(n) = q.nodes {
        s.nodes_per_axis = n;
    }
    if let Some(n) = q.panels {
        s.panels_per_axis = n;
    }
    if let Some(b) = &q.bx {
        let bad = || usage(format!("--box: expected `lo:hi,lo:hi,...`, got `{b}`"));
        let axes = b
            .split(',')
            .map(|ax| {
                let (lo, hi) = ax.split_once(':').ok_or_else(bad)?;
                Ok([lo.trim().parse().map_err(|_| bad())?, hi.trim().parse().map_err(|_| bad())?])
            })
            .collect::<Result<Vec<[f64; 2]>, Failure>>()?;
        s.truncation_box = Some(axes);
    }
    s.validate()?;
    Ok(s)
}

fn print_json(v: &impl serde::Serialize) {
    println!("{}", serde_json::to_string_pretty(v).expect("output serializes"));
}

fn write_report(path: &Path, report: &VerificationReport) -> Outcome {
    let io = |e: std::io::Error| usage(format!("--out {}: {e}", path.display()));
    match path.extension().and_then(|e| e.to_str()) {
        Some("json") => fs::write(path, report.to_json() + "\n").map_err(io),
        Some("csv") => {
            let file = fs::File::create(path).map_err(io)?;
            Ok(write_csv(file, &[("1".to_string(), report.clone())])?)
        }
        _ => Err(usage(format!("--out: expected a .json or .csv path, got `{}`", path.display()))),
    }
}

fn cmd_verify(a: &VerifyArgs) -> Outcome {
    let triple = resolve_entry(&a.entry)?;
    let f = match &a.f {
        Some(text) => parse_expr("--f", text)?,
        None => triple.reference_test_function(false),
    };
    let mut spec = IdentitySpec::new(triple, f);
    spec.settings = quad_settings(&a.quad)?;
    spec.tolerance = a.tolerance;
    let report = verify_identity(&spec)?;
    println!("{}", report.to_json());
    if let Some(path) = &a.out {
        write_report(path, &report)?;
    }
    check(report.pass)
}

fn parse_point(text: &str, dim: usize) -> Result<Vec<f64>, Failure> {
    let coords = text
        .split(',')
        .map(|c| c.trim().parse::<f64>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|_| usage(format!("--at: expected comma-separated numbers, got `{text}`")))?;
    if coords.len() != dim {
        return Err(usage(format!("--at: expected {dim} coordinates, got {}", coords.len())));
    }
    Ok(coords)
}

fn cmd_derive(a: &DeriveArgs) -> Outcome {
    let space = parse_space(&a.space)?;
    let coords = parse_point(&a.at, space.dim())?;
    let point = space.point_from_coords(&coords)?;
    let triple = match &a.catalog {
        Some(key) => {
            let params = reference_config(key)?.params.merged(&parse_params(&a.params)?);
            Some(catalog_get(key, &space, a.p, &params)?)
        }
        None => None,
    };
    let pick = |flag: &str, given: &Option<String>, from: Option<&grushin_core::FieldExpr>| match (given, from) {
        (Some(text), _) => parse_expr(flag, text),
        (None, Some(e)) => Ok(e.clone()),
        (None, None) => Err(usage(format!("{flag} is required without --catalog"))),
    };
    let v = pick("--v", &a.v, triple.as_ref().map(|t| &t.v))?;
    let phi = pick("--phi", &a.phi, triple.as_ref().map(|t| &t.phi))?;
    let w = derive_weight(&space, a.p, &v, &phi, &point)?;
    let mut out = json!({ "w": round12(w) });
    let mut pass = true;
    if let Some(t) = &triple {
        let closed = CompiledField::new(&t.total_weight(), &space)?.value(&coords)?.re;
        let rel = (w - closed).abs() / closed.abs().max(1.0);
        pass = rel <= WEIGHT_TOLERANCE;
        out["closed_form"] = json!(round12(closed));
        out["rel_diff"] = json!(round12(rel));
        out["match"] = Value::Bool(pass);
    }
    print_json(&out);
    check(pass)
}

fn cmd_constants(p: f64) -> Outcome {
    let c = extremal_constants(p)?;
    let r = |v: Option<f64>| v.map(round12);
    print_json(&json!({
        "p": round12(p),
        "c1": r(c.c1),
        "c1_bracket": r(c.c1_bracket),
        "c2_inf": r(c.c2_inf),
        "c2_inf_bracket": r(c.c2_inf_bracket),
        "c3_sup": r(c.c3_sup),
        "c3_sup_bracket": r(c.c3_sup_bracket),
    }));
    Ok(())
}

fn cmd_hpw(a: &HpwArgs) -> Outcome {
    let space = parse_space(&a.space)?;
    let f = parse_expr("--f", &a.f)?;
    let settings = quad_settings(&a.quad)?;
    let alpha = hpw_alpha(&space, a.p, &f, &settings)?;
    let mut report = hpw_deficit(&space, a.p, &f, &settings)?;
    report.spec.tolerance = a.tolerance;
    report.pass = report.residual_rel <= a.tolerance;
    let mut out = serde_json::to_value(&report).expect("reports serialize");
    out["alpha"] = json!(round12(alpha));
    print_json(&out);
    check(report.pass)
}

fn cmd_bessel(a: &BesselArgs) -> Outcome {
    let t = resolve_entry(&a.entry)?;
    let bad = || usage(format!("--grid: expected `r0:r1:n`, got `{}`", a.grid));
    let parts: Vec<&str> = a.grid.split(':').collect();
    if parts.len() != 3 {
        return Err(bad());
    }
    let r0: f64 = parts[0].parse().map_err(|_| bad())?;
    let r1: f64 = parts[1].parse().map_err(|_| bad())?;
    let n: usize = parts[2].parse().map_err(|_| bad())?;
    if !(r0 > 0.0 && r1 > r0 && n >= 2) {
        return Err(bad());
    }
    let rp = t
        .radial
        .as_ref()
        .ok_or_else(|| usage(format!("`{}` is not radial in this configuration", t.name)))?;
    let residual = bessel_residual(&t.space, t.p, &rp.v, &rp.w, &rp.phi, &log_grid(r0, r1, n))?;
    let pass = residual <= WEIGHT_TOLERANCE;
    print_json(&json!({
        "key": t.name,
        "params": t.params,
        "p": round12(t.p),
        "residual": round12(residual),
        "pass": pass,
    }));
    check(pass)
}

fn run(cli: Cli) -> Outcome {
    match cli.command {
        Cmd::Verify(a) => cmd_verify(&a),
        Cmd::DeriveWeight(a) => cmd_derive(&a),
        Cmd::Constants { p } => cmd_constants(p),
        Cmd::Hpw(a) => cmd_hpw(&a),
        Cmd::Bessel(a) => cmd_bessel(&a),
        Cmd::Campaign(a) => campaign::run(&a.config, a.jobs, a.csv.as_deref(), a.json.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
