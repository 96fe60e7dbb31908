//! Per-sample CSV rows and the text summaries printed by the commands.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io;

use sr_core::structure::{step_two_label, FlagReport, Verdict};
use sr_core::typemap::PointData;

/// One CSV row of `analyze`.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub point: Vec<f64>,
    pub alpha: Vec<f64>,
    pub m0: usize,
    pub mults: Vec<usize>,
    pub isotropy: String,
    pub contact: bool,
    pub quasicontact: bool,
    pub stratum_gap: f64,
}

impl Row {
    pub fn new(point: &[f64], data: &PointData) -> Row {
        Row {
            point: point.to_vec(),
            alpha: data.type_value.simplex.clone(),
            m0: data.stratum.m0,
            mults: data.stratum.mults.clone(),
            isotropy: data.isotropy.to_string(),
            contact: data.contact,
            quasicontact: data.quasicontact,
            stratum_gap: data.stratum_gap,
        }
    }

    fn record(&self) -> Vec<String> {
        let mults: Vec<String> = self.mults.iter().map(|m| m.to_string()).collect();
        let mut r: Vec<String> = self.point.iter().chain(&self.alpha).map(|v| v.to_string()).collect();
        r.push(self.m0.to_string());
        r.push(mults.join(";"));
        r.push(self.isotropy.clone());
        r.push(self.contact.to_string());
        r.push(self.quasicontact.to_string());
        r.push(self.stratum_gap.to_string());
        r
    }
}

pub fn header(dim: usize, n_alpha: usize) -> Vec<String> {
    let mut h: Vec<String> = (1..=dim).map(|i| format!("x_{}", i)).collect();
    h.extend((1..=n_alpha).map(|i| format!("alpha_{}", i)));
    h.extend(["m0", "mults", "isotropy", "contact", "quasicontact", "stratum_gap"].map(String::from));
    h
}

/// Write rows with the shortest decimal representation that parses back to
/// the same `f64`.
pub fn write_rows<W: io::Write>(out: W, dim: usize, n_alpha: usize, rows: &[Row]) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header(dim, n_alpha))?;
    for row in rows {
        w.write_record(row.record())?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, thiserror::Error)]
pub enum ReadError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("line {line}: {message}")]
    Field { line: usize, message: String },
}

/// Read back a CSV produced by [`write_rows`].
pub fn read_rows<R: io::Read>(input: R) -> Result<Vec<Row>, ReadError> {
    let mut r = csv::Reader::from_reader(input);
    let h = r.headers()?.clone();
    let dim = h.iter().filter(|c| c.starts_with("x_")).count();
    let n_alpha = h.iter().filter(|c| c.starts_with("alpha_")).count();
    if h.len() != dim + n_alpha + 6 {
        return Err(ReadError::Field {
            line: 1,
            message: format!("unexpected header with {} columns", h.len()),
        });
    }
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let bad = |what: &str, v: &str| ReadError::Field {
            line,
            message: format!("invalid {} `{}`", what, v),
        };
        let num = |v: &str| v.parse::<f64>().map_err(|_| bad("number", v));
        let flag = |v: &str| v.parse::<bool>().map_err(|_| bad("boolean", v));
        let f: Vec<&str> = rec.iter().collect();
        let point = f[..dim].iter().map(|v| num(v)).collect::<Result<_, _>>()?;
        let alpha = f[dim..dim + n_alpha].iter().map(|v| num(v)).collect::<Result<_, _>>()?;
        let rest = &f[dim + n_alpha..];
        let mults = if rest[1].is_empty() {
            Vec::new()
        } else {
            rest[1]
                .split(';')
                .map(|m| m.parse().map_err(|_| bad("multiplicity", m)))
                .collect::<Result<_, _>>()?
        };
        rows.push(Row {
            point,
            alpha,
            m0: rest[0].parse().map_err(|_| bad("m0", rest[0]))?,
            mults,
            isotropy: rest[2].to_string(),
            contact: flag(rest[3])?,
            quasicontact: flag(rest[4])?,
            stratum_gap: num(rest[5])?,
        });
    }
    Ok(rows)
}

fn plural(n: usize) -> &'static str {
    if n == 1 {
        "sample"
    } else {
        "samples"
    }
}

fn fmt_point(p: &[f64]) -> String {
    let parts: Vec<String> = p.iter().map(|v| v.to_string()).collect();
    format!("({})", parts.join(", "))
}

/// Type-image summary. Depends only on the rows, so recomputing it from a
/// re-read CSV gives the same text.
pub fn type_summary(rows: &[Row]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "evaluated: {} {}", rows.len(), plural(rows.len()));
    let Some(first) = rows.first() else {
        return out;
    };
    let _ = writeln!(out, "type image bounding box in the simplex:");
    for j in 0..first.alpha.len() {
        let lo = rows.iter().map(|r| r.alpha[j]).fold(f64::INFINITY, f64::min);
        let hi = rows.iter().map(|r| r.alpha[j]).fold(f64::NEG_INFINITY, f64::max);
        let _ = writeln!(out, "  alpha_{}: [{}, {}]", j + 1, lo, hi);
    }
    let mut strata: BTreeMap<(usize, Vec<usize>), (usize, &str)> = BTreeMap::new();
    for r in rows {
        strata.entry((r.m0, r.mults.clone())).or_insert((0, &r.isotropy)).0 += 1;
    }
    let _ = writeln!(out, "strata:");
    for ((m0, mults), (n, iso)) in &strata {
        let m: Vec<String> = mults.iter().map(|m| m.to_string()).collect();
        let _ = writeln!(
            out,
            "  m0={} mults=({}) isotropy {}: {} {}",
            m0,
            m.join(","),
            iso,
            n,
            plural(*n)
        );
    }
    let contact = rows.iter().filter(|r| r.contact).count();
    let quasi = rows.iter().filter(|r| r.quasicontact).count();
    let _ = writeln!(
        out,
        "contact at {} of {}, quasi-contact at {} of {}",
        contact,
        rows.len(),
        quasi,
        rows.len()
    );
    let gap = rows.iter().map(|r| r.stratum_gap).fold(f64::INFINITY, f64::min);
    let _ = writeln!(out, "smallest stratum gap: {}", gap);
    out
}

/// Flag ranks, step, equiregularity and the osculating algebras.
pub fn flag_summary(dim: usize, samples: &[Vec<f64>], report: &FlagReport) -> String {
    let mut out = String::new();
    let mut patterns: Vec<(&[usize], bool, usize)> = Vec::new();
    for r in &report.ranks {
        match patterns.iter_mut().find(|p| p.0 == r.ranks.as_slice()) {
            Some(p) => p.2 += 1,
            None => patterns.push((&r.ranks, r.full, 1)),
        }
    }
    let _ = writeln!(out, "flag ranks:");
    for (ranks, full, n) in &patterns {
        let r: Vec<String> = ranks.iter().map(|v| v.to_string()).collect();
        let tail = if *full { "" } else { ", not full" };
        let _ = writeln!(out, "  ({}){}: {} {}", r.join(","), tail, n, plural(*n));
    }
    match report.step {
        Some(step) => {
            let _ = writeln!(out, "step: {} (bracket generating at every sample)", step);
        }
        None => {
            let bad: Vec<usize> = (0..report.ranks.len()).filter(|&i| !report.ranks[i].full).collect();
            let _ = writeln!(
                out,
                "step: undetermined (not bracket generating within the maximal step at {})",
                list(samples, &bad)
            );
        }
    }
    if report.equiregular {
        let _ = writeln!(out, "equiregularity: equiregular");
    } else {
        let _ = writeln!(
            out,
            "equiregularity: NOT equiregular (witnesses {})",
            list(samples, &report.irregular_witnesses)
        );
    }
    let mut algebras: Vec<(usize, usize)> = Vec::new();
    for k in report.levi_kernel_dims.iter().flatten() {
        match algebras.iter_mut().find(|a| a.0 == *k) {
            Some(a) => a.1 += 1,
            None => algebras.push((*k, 1)),
        }
    }
    if !algebras.is_empty() {
        let _ = writeln!(out, "osculating algebra (step 2 samples):");
        for (k, n) in &algebras {
            let _ = writeln!(
                out,
                "  Levi kernel dimension {}, {}: {} {}",
                k,
                step_two_label(dim - k, *k),
                n,
                plural(*n)
            );
        }
    }
    let verdict = match report.equinilpotent_step2 {
        Verdict::Yes => "yes",
        Verdict::No => "no",
        Verdict::Undetermined => "undetermined",
    };
    let _ = writeln!(out, "equinilpotent: {}", verdict);
    out
}

const MAX_LISTED: usize = 5;

fn list(samples: &[Vec<f64>], idx: &[usize]) -> String {
    let mut parts: Vec<String> = idx
        .iter()
        .take(MAX_LISTED)
        .map(|&i| format!("#{} {}", i, fmt_point(&samples[i])))
        .collect();
    if idx.len() > MAX_LISTED {
        parts.push(format!("and {} more", idx.len() - MAX_LISTED));
    }
    parts.join(", ")
}
