//! JSON-configured batches of identity verifications.

use std::fs;
use std::path::{Path, PathBuf};

use grushin_core::verifier::{write_csv, DEFAULT_TOLERANCE};
use grushin_core::weights::reference_config;
use grushin_core::{catalog_get, verify_identity, IdentitySpec, Params, QuadratureSettings, VerificationReport};
use rayon::prelude::*;
use serde::Deserialize;

use crate::{check, parse_expr, parse_space, usage, Failure, Outcome};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignConfig {
    pub runs: Vec<RunConfig>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Label for the CSV `run` column; defaults to the 1-based index.
    pub name: Option<String>,
    pub catalog: String,
    #[serde(default)]
    pub params: Params,
    /// `"m,k,gamma"`; defaults to the entry's reference space.
    pub space: Option<String>,
    pub p: Option<f64>,
    /// Test function; defaults to the entry's reference bump.
    pub f: Option<String>,
    #[serde(default)]
    pub quadrature: QuadratureSettings,
    pub tolerance: Option<f64>,
}

fn prepare(i: usize, run: &RunConfig) -> Result<(String, IdentitySpec), Failure> {
    let ctx = |f: Failure| match f {
        Failure::Usage(m) => usage(format!("run {}: {m}", i + 1)),
        other => other,
    };
    let inner = || -> Result<(String, IdentitySpec), Failure> {
        let reference = reference_config(&run.catalog)?;
        let space = match &run.space {
            Some(s) => parse_space(s)?,
            None => reference.space,
        };
        let p = run.p.unwrap_or(reference.p);
        let triple = catalog_get(&run.catalog, &space, p, &reference.params.merged(&run.params))?;
        let f = match &run.f {
            Some(text) => parse_expr("f", text)?,
            None => triple.reference_test_function(false),
        };
        run.quadrature.validate()?;
        let mut spec = IdentitySpec::new(triple, f);
        spec.settings = run.quadrature.clone();
        spec.tolerance = run.tolerance.unwrap_or(DEFAULT_TOLERANCE);
        let name = run.name.clone().unwrap_or_else(|| (i + 1).to_string());
        Ok((name, spec))
    };
    inner().map_err(ctx)
}

fn beside(config: &Path, suffix: &str) -> PathBuf {
    let stem = config.file_stem().and_then(|s| s.to_str()).unwrap_or("campaign");
    config.with_file_name(format!("{stem}{suffix}"))
}

pub fn run(config: &Path, jobs: usize, csv: Option<&Path>, json: Option<&Path>) -> Outcome {
    if jobs == 0 {
        return Err(usage("--jobs must be at least 1"));
    }
    let text = fs::read_to_string(config).map_err(|e| usage(format!("--config {}: {e}", config.display())))?;
    let cfg: CampaignConfig =
        serde_json::from_str(&text).map_err(|e| usage(format!("--config {}: {e}", config.display())))?;
    let specs = cfg
        .runs
        .iter()
        .enumerate()
        .map(|(i, r)| prepare(i, r))
        .collect::<Result<Vec<_>, _>>()?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| usage(format!("--jobs: {e}")))?;
    let results: Vec<Result<VerificationReport, String>> = pool.install(|| {
        specs
            .par_iter()
            .map(|(name, spec)| verify_identity(spec).map_err(|e| format!("run {name}: {e}")))
            .collect()
    });
    let mut rows = Vec::with_capacity(results.len());
    for ((name, _), r) in specs.iter().zip(results) {
        rows.push((name.clone(), r.map_err(usage)?));
    }

    let csv_path = csv.map(Path::to_path_buf).unwrap_or_else(|| beside(config, ".csv"));
    let json_path = json.map(Path::to_path_buf).unwrap_or_else(|| beside(config, ".report.json"));
    let file = fs::File::create(&csv_path).map_err(|e| usage(format!("{}: {e}", csv_path.display())))?;
    write_csv(file, &rows)?;
    let reports: Vec<&VerificationReport> = rows.iter().map(|(_, r)| r).collect();
    let body = serde_json::to_string_pretty(&reports).expect("reports serialize") + "\n";
    fs::write(&json_path, body).map_err(|e| usage(format!("{}: {e}", json_path.display())))?;

    let passed = rows.iter().filter(|(_, r)| r.pass).count();
    println!("{passed}/{} runs passed", rows.len());
    check(passed == rows.len())
}
