//! Drivers behind the `srtool` binary: configuration files, sampling
//! pipelines, CSV output and text reports.

pub mod config;
pub mod report;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use sr_core::batch::{self, Execution};
use sr_core::classify::Classifier;
use sr_core::skewlin::{skew_normal_form, skew_spectrum, SkewSpectrum};
use sr_core::structure::FlagReport;
use sr_core::typemap::TypeMap;
use sr_core::Tolerances;
use thiserror::Error;

use config::{ConfigError, RunConfig};
use report::Row;

/// Largest flag level computed by `analyze` and the default for `flag`.
pub const DEFAULT_MAX_STEP: usize = 4;

/// Inputs whose skew part exceeds this are rejected by `normal-form`.
pub const SKEW_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Validation(e.to_string())
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|e| CliError::Validation(format!("cannot write {}: {}", path.display(), e)))
}

fn preamble(config: &RunConfig, samples: usize) -> String {
    format!(
        "structure: dimension {}, coordinates {}\nsampling: {}, {} points\n",
        config.dim,
        config.coords.join(", "),
        config.sampling.mode,
        samples
    )
}

/// Result of the `analyze` pipeline before anything is written.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub rows: Vec<Row>,
    /// Samples skipped because an expression left its domain, with the reason.
    pub skipped: Vec<(Vec<f64>, String)>,
    pub summary: String,
}

pub fn analyze(config: &RunConfig, exec: Execution) -> Result<Analysis, CliError> {
    let s = config.structure()?;
    let samples = config.samples()?;
    let map = TypeMap::new(&s, config.tolerances);
    let results = batch::map_points(exec, &samples, |x| map.point_data(x));
    let mut rows = Vec::new();
    let mut kept = Vec::new();
    let mut skipped = Vec::new();
    for (x, r) in samples.iter().zip(results) {
        match r {
            Ok(d) => {
                rows.push(Row::new(x, &d));
                kept.push(x.clone());
            }
            Err(e) if e.is_domain() => {
                log::warn!("skipping {:?}: {}", x, e);
                skipped.push((x.clone(), e.to_string()));
            }
            Err(e) => return Err(CliError::Numeric(e.to_string())),
        }
    }
    let flag = FlagReport::compute(&s, &kept, DEFAULT_MAX_STEP, &config.tolerances, exec)
        .map_err(|e| CliError::Numeric(e.to_string()))?;
    let mut summary = preamble(config, samples.len());
    let _ = writeln!(summary, "skipped (outside an expression domain): {}", skipped.len());
    summary.push_str(&report::flag_summary(config.dim, &kept, &flag));
    summary.push_str(&report::type_summary(&rows));
    Ok(Analysis { rows, skipped, summary })
}

/// `analyze <config> --out <csv>`: writes the CSV and returns the summary.
pub fn run_analyze(config_path: &Path, out: &Path, exec: Execution) -> Result<String, CliError> {
    let config = RunConfig::load(config_path)?;
    let a = analyze(&config, exec)?;
    let mut buf = Vec::new();
    report::write_rows(&mut buf, config.dim, (config.dim - 1) / 2, &a.rows)
        .map_err(|e| CliError::Validation(e.to_string()))?;
    write_file(out, &buf)?;
    Ok(a.summary)
}

pub fn classify(config: &RunConfig, exec: Execution) -> Result<String, CliError> {
    let s = config.structure()?;
    let samples = config.samples()?;
    let map = TypeMap::new(&s, config.tolerances).with_domain(config.sample_box());
    let report = Classifier::new(map).with_execution(exec).classify(&samples);
    Ok(preamble(config, samples.len()) + &report.render())
}

/// `classify <config>`: the classification report.
pub fn run_classify(config_path: &Path, exec: Execution) -> Result<String, CliError> {
    classify(&RunConfig::load(config_path)?, exec)
}

pub fn flag(config: &RunConfig, max_step: usize, exec: Execution) -> Result<String, CliError> {
    let s = config.structure()?;
    let samples = config.samples()?;
    let report = FlagReport::compute(&s, &samples, max_step, &config.tolerances, exec)
        .map_err(|e| CliError::Numeric(e.to_string()))?;
    Ok(preamble(config, samples.len()) + &report::flag_summary(config.dim, &samples, &report))
}

/// `flag <config> --max-step <k>`.
pub fn run_flag(config_path: &Path, max_step: usize, exec: Execution) -> Result<String, CliError> {
    if max_step == 0 {
        return Err(CliError::Validation("--max-step must be at least 1".into()));
    }
    flag(&RunConfig::load(config_path)?, max_step, exec)
}

/// Parse a headerless CSV of decimals into a square matrix.
pub fn parse_matrix(text: &str) -> Result<DMatrix<f64>, CliError> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| CliError::Validation(e.to_string()))?;
        let row = rec
            .iter()
            .map(|v| {
                v.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| CliError::Validation(format!("line {}: invalid entry `{}`", i + 1, v)))
            })
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    let n = rows.len();
    if n == 0 {
        return Err(CliError::Validation("matrix is empty".into()));
    }
    if let Some(i) = rows.iter().position(|r| r.len() != n) {
        return Err(CliError::Validation(format!(
            "matrix is not square: {} rows but row {} has {} entries",
            n,
            i + 1,
            rows[i].len()
        )));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

pub fn format_matrix(m: &DMatrix<f64>) -> String {
    let mut out = String::new();
    for i in 0..m.nrows() {
        let row: Vec<String> = m.row(i).iter().map(|v| v.to_string()).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn format_spectrum(s: &SkewSpectrum) -> String {
    let pairs: Vec<String> = s.pairs.iter().map(|(a, m)| format!("({}, {})", a, m)).collect();
    format!("m0={} pairs=[{}] stratum_gap={}", s.m0, pairs.join(", "), s.stratum_gap)
}

/// Normal form `(O, J~)` with `J = O^T J~ O`, and the spectrum.
pub fn normal_form(j: &DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>, SkewSpectrum), CliError> {
    let asym = (j + j.transpose()).amax();
    if asym > SKEW_TOLERANCE {
        return Err(CliError::Validation(format!(
            "matrix is not skew-symmetric: max |J + J^T| = {:e}",
            asym
        )));
    }
    let tol = Tolerances::default().cluster;
    let numeric = |e: sr_core::skewlin::SkewError| CliError::Numeric(e.to_string());
    let spectrum = skew_spectrum(j, tol).map_err(numeric)?;
    let (o, jt) = skew_normal_form(j, tol).map_err(numeric)?;
    Ok((o, jt, spectrum))
}

pub fn output_paths(prefix: &Path) -> (PathBuf, PathBuf) {
    let with = |suffix: &str| {
        let mut s = prefix.as_os_str().to_owned();
        s.push(suffix);
        PathBuf::from(s)
    };
    (with("_O.csv"), with("_Jtilde.csv"))
}

/// `normal-form <matrix.csv> --out-prefix <p>`: writes `<p>_O.csv` and
/// `<p>_Jtilde.csv` and returns the spectrum line.
pub fn run_normal_form(matrix: &Path, prefix: &Path) -> Result<String, CliError> {
    let text = fs::read_to_string(matrix)
        .map_err(|e| CliError::Validation(format!("cannot read {}: {}", matrix.display(), e)))?;
    let j = parse_matrix(&text)?;
    let (o, jt, spectrum) = normal_form(&j)?;
    let (po, pj) = output_paths(prefix);
    write_file(&po, format_matrix(&o).as_bytes())?;
    write_file(&pj, format_matrix(&jt).as_bytes())?;
    Ok(format!(
        "spectrum: {}\nwrote {} and {}\n",
        format_spectrum(&spectrum),
        po.display(),
        pj.display()
    ))
}
