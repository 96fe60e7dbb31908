//! Sample-based verification of the regularity hypotheses on `alpha` and
//! `beta`, and the resulting case decision for the symmetry groupoid of a
//! five-dimensional structure.
//!
//! Sampling cannot prove openness or smoothness. The report states what was
//! checked on the samples and quotes the conclusion that applies when the
//! checks pass.

use std::collections::HashMap;
use std::fmt::{self, Write as _};
use std::hash::Hash;

use crate::batch::{self, Execution};
use crate::fmt_point;
use crate::typemap::{transversal, BetaStratum, BetaValue, PointData, SplitData, TypeError, TypeMap};

pub const SINGLE_STRATUM_ALPHA: &str = "single-stratum(α)";
pub const CONSTANT_RANK_ALPHA: &str = "constant-rank(dα)";
pub const SINGLE_STRATUM_BETA: &str = "single-stratum(β)";
pub const CONSTANT_RANK_ALPHA_BETA: &str = "constant-rank(d(α,β))";

const MAX_LISTED: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Case {
    Transitive,
    DiscreteIsotropy,
    GprimeEqualsG,
    GprimeProperSubgroupoid,
    Undetermined,
}

impl fmt::Display for Case {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Case::Transitive => "TRANSITIVE",
            Case::DiscreteIsotropy => "DISCRETE_ISOTROPY",
            Case::GprimeEqualsG => "GPRIME_EQUALS_G",
            Case::GprimeProperSubgroupoid => "GPRIME_PROPER_SUBGROUPOID",
            Case::Undetermined => "UNDETERMINED",
        })
    }
}

impl Case {
    /// Justification attached to each verdict.
    pub fn citation(&self) -> &'static str {
        match self {
            Case::Transitive => {
                "constant type: G is transitive and equal to G', it is proper, so G admits a structure of Cartan groupoid (5D classification, transitive outcome)"
            }
            Case::DiscreteIsotropy => {
                "alpha and beta in open strata: the isotropy Z2×Z2 is discrete; quoted, not verified: in the étale outcome G admits a structure of Cartan groupoid with the zero form (5D classification, étale outcome)"
            }
            Case::GprimeEqualsG => {
                "constant secondary type: G' = G, and G' admits a structure of Cartan groupoid (5D classification, non-transitive outcome)"
            }
            Case::GprimeProperSubgroupoid => {
                "non-constant secondary type: G' is a proper subgroupoid of G; G' admits a structure of Cartan groupoid when the representation condition holds (5D classification, non-transitive outcome)"
            }
            Case::Undetermined => "hypotheses not verified on the samples: no conclusion is drawn",
        }
    }
}

/// One assumption check with the samples that violate it.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub offending: Vec<usize>,
}

/// Everything evaluated at one sample.
#[derive(Debug, Clone)]
struct SampleEval {
    data: Result<PointData, TypeError>,
    dalpha_rank: Result<usize, TypeError>,
    transversal: Option<bool>,
    beta: Option<Result<BetaValue, TypeError>>,
    dab_rank: Option<Result<usize, TypeError>>,
}

#[derive(Debug, Clone)]
pub struct AssumptionReport {
    pub checks: Vec<Check>,
    /// Rank of `d alpha` when it is the same at every sample.
    pub alpha_rank: Option<usize>,
    /// `d alpha` vanishes and the type is the same at every sample.
    pub alpha_constant: bool,
    /// Every sampled type lies in the interior of the simplex.
    pub alpha_interior: bool,
    /// Samples where `ker d alpha` is not transversal to `D`, or where the
    /// check could not run.
    pub transversality_failures: Vec<usize>,
}

impl AssumptionReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failed(&self) -> Vec<&'static str> {
        self.checks.iter().filter(|c| !c.passed).map(|c| c.name).collect()
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GprimeResult {
    pub holds: bool,
    /// Samples with the smallest and largest `psi` when `holds` is false.
    pub witnesses: Option<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RepresentationResult {
    pub holds: bool,
    /// Which sufficient condition was met: 1 for constant `alpha` or `beta`,
    /// 2 for the eigenplane splitting of `ker d(alpha, beta) ∩ D`.
    pub clause: Option<u8>,
    pub note: String,
}

#[derive(Debug, Clone)]
pub struct ClassificationReport {
    pub dim: usize,
    pub samples: Vec<Vec<f64>>,
    pub assumptions: AssumptionReport,
    /// `None` outside dimension five.
    pub case: Option<Case>,
    pub gprime_equals_g: Option<GprimeResult>,
    pub representation: Option<RepresentationResult>,
    pub psi_range: Option<(f64, f64)>,
    pub beta_stratum: Option<BetaStratum>,
    pub stabilizer: Option<String>,
    pub properness_note: String,
}

/// Most common key and the indices that differ from it. Ties go to the key
/// seen first.
fn majority<K: Eq + Hash + Clone>(keys: &[K]) -> (Option<K>, Vec<usize>) {
    let mut counts: HashMap<&K, usize> = HashMap::new();
    for k in keys {
        *counts.entry(k).or_default() += 1;
    }
    let mut best: Option<&K> = None;
    for k in keys {
        if best.is_none_or(|b| counts[k] > counts[b]) {
            best = Some(k);
        }
    }
    let offending = keys
        .iter()
        .enumerate()
        .filter(|(_, k)| Some(*k) != best)
        .map(|(i, _)| i)
        .collect();
    (best.cloned(), offending)
}

fn list_samples(samples: &[Vec<f64>], idx: &[usize]) -> String {
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

/// First failing sample of a per-sample result list, if any.
fn first_error<T>(items: &[Result<T, TypeError>]) -> Option<(usize, &TypeError)> {
    items
        .iter()
        .enumerate()
        .find_map(|(i, r)| r.as_ref().err().map(|e| (i, e)))
}

/// Check that a per-sample quantity is defined everywhere and takes a
/// single value.
fn uniform_check<K, F>(name: &'static str, samples: &[Vec<f64>], values: &[Result<K, TypeError>], describe: F) -> Check
where
    K: Eq + Hash + Clone,
    F: Fn(&K) -> String,
{
    if samples.is_empty() {
        return Check {
            name,
            passed: false,
            detail: "no samples".into(),
            offending: Vec::new(),
        };
    }
    if let Some((i, e)) = first_error(values) {
        let offending: Vec<usize> = (0..values.len()).filter(|&j| values[j].is_err()).collect();
        return Check {
            name,
            passed: false,
            detail: format!(
                "evaluation failed at {} sample(s), first #{}: {}",
                offending.len(),
                i,
                e
            ),
            offending,
        };
    }
    let keys: Vec<K> = values.iter().map(|r| r.as_ref().expect("checked").clone()).collect();
    let (reference, offending) = majority(&keys);
    let reference = reference.expect("nonempty");
    if offending.is_empty() {
        Check {
            name,
            passed: true,
            detail: format!("{} at all {} samples", describe(&reference), samples.len()),
            offending,
        }
    } else {
        let distinct: Vec<String> = {
            let mut seen: Vec<&K> = Vec::new();
            for k in &keys {
                if !seen.contains(&k) {
                    seen.push(k);
                }
            }
            seen.into_iter().map(&describe).collect()
        };
        Check {
            name,
            passed: false,
            detail: format!(
                "values {} differ; majority {}, other samples: {}",
                distinct.join(" | "),
                describe(&reference),
                list_samples(samples, &offending)
            ),
            offending,
        }
    }
}

/// Runs the sample-wide checks and the case decision.
pub struct Classifier<'a> {
    map: TypeMap<'a>,
    exec: Execution,
}

impl<'a> Classifier<'a> {
    pub fn new(map: TypeMap<'a>) -> Self {
        Classifier {
            map,
            exec: Execution::default(),
        }
    }

    pub fn with_execution(mut self, exec: Execution) -> Self {
        self.exec = exec;
        self
    }

    fn is_5d(&self) -> bool {
        self.map.structure().dim() == 5
    }

    fn evaluate(&self, samples: &[Vec<f64>]) -> Vec<SampleEval> {
        let five = self.is_5d();
        batch::map_points(self.exec, samples, |x| {
            let data = self.map.point_data(x);
            let da = self.map.dalpha(x);
            let transversal = match (&da, self.map.structure().frame_at(x)) {
                (Ok(da), Ok(frame)) => Some(transversal(&da.kernel, &frame, self.map.tolerances().rank)),
                _ => None,
            };
            let (beta, dab_rank) = if five {
                (
                    Some(self.map.secondary_type_at(x)),
                    Some(self.map.d_alpha_beta(x).map(|d| d.rank)),
                )
            } else {
                (None, None)
            };
            SampleEval {
                data,
                dalpha_rank: da.map(|d| d.rank),
                transversal,
                beta,
                dab_rank,
            }
        })
    }

    fn assumptions_from(&self, samples: &[Vec<f64>], evals: &[SampleEval]) -> AssumptionReport {
        let tol = self.map.tolerances();
        let signatures: Vec<_> = evals
            .iter()
            .map(|e| e.data.as_ref().map(|d| d.stratum.clone()).map_err(Clone::clone))
            .collect();
        let ranks: Vec<_> = evals.iter().map(|e| e.dalpha_rank.clone()).collect();
        let mut checks = vec![
            uniform_check(SINGLE_STRATUM_ALPHA, samples, &signatures, |s| {
                format!("signature {}", s)
            }),
            uniform_check(CONSTANT_RANK_ALPHA, samples, &ranks, |r| format!("rank {}", r)),
        ];
        if self.is_5d() {
            let strata: Vec<_> = evals
                .iter()
                .map(|e| e.beta.clone().expect("evaluated in 5D").map(|b| b.stratum))
                .collect();
            let dab: Vec<_> = evals
                .iter()
                .map(|e| e.dab_rank.clone().expect("evaluated in 5D"))
                .collect();
            checks.push(uniform_check(SINGLE_STRATUM_BETA, samples, &strata, |s| {
                format!("stratum {}", s)
            }));
            checks.push(uniform_check(CONSTANT_RANK_ALPHA_BETA, samples, &dab, |r| {
                format!("rank {}", r)
            }));
        }
        let alpha_rank = match checks[1].passed {
            true => evals.first().and_then(|e| e.dalpha_rank.clone().ok()),
            false => None,
        };
        let types: Option<Vec<&PointData>> = evals.iter().map(|e| e.data.as_ref().ok()).collect();
        let alpha_constant = !samples.is_empty()
            && alpha_rank == Some(0)
            && types.as_ref().is_some_and(|t| {
                t.iter()
                    .all(|d| d.type_value.max_deviation(&t[0].type_value) <= tol.cluster)
            });
        let alpha_interior = types
            .as_ref()
            .is_some_and(|t| !t.is_empty() && t.iter().all(|d| d.type_value.is_interior()));
        let transversality_failures = evals
            .iter()
            .enumerate()
            .filter(|(_, e)| e.transversal != Some(true))
            .map(|(i, _)| i)
            .collect();
        AssumptionReport {
            checks,
            alpha_rank,
            alpha_constant,
            alpha_interior,
            transversality_failures,
        }
    }

    pub fn verify_assumptions(&self, samples: &[Vec<f64>]) -> AssumptionReport {
        let evals = self.evaluate(samples);
        self.assumptions_from(samples, &evals)
    }

    fn psi_values(evals: &[SampleEval]) -> Vec<Option<f64>> {
        evals
            .iter()
            .map(|e| e.beta.as_ref().and_then(|b| b.as_ref().ok()).and_then(|b| b.psi))
            .collect()
    }

    fn gprime_from(&self, assumptions: &AssumptionReport, evals: &[SampleEval]) -> GprimeResult {
        if assumptions.alpha_constant {
            return GprimeResult {
                holds: true,
                witnesses: None,
            };
        }
        let psi = Self::psi_values(evals);
        if psi.iter().all(Option::is_none) {
            // beta undefined everywhere is constant by convention
            let undefined = evals
                .iter()
                .all(|e| matches!(&e.beta, Some(Ok(b)) if b.stratum == BetaStratum::Undefined));
            return GprimeResult {
                holds: undefined,
                witnesses: None,
            };
        }
        let mut lo = (f64::INFINITY, 0);
        let mut hi = (f64::NEG_INFINITY, 0);
        for (i, p) in psi.iter().enumerate() {
            let Some(p) = *p else {
                // defined at some samples only: not constant
                return GprimeResult {
                    holds: false,
                    witnesses: Some((i, psi.iter().position(Option::is_some).expect("some psi"))),
                };
            };
            if p < lo.0 {
                lo = (p, i);
            }
            if p > hi.0 {
                hi = (p, i);
            }
        }
        if hi.0 - lo.0 <= self.map.tolerances().beta_const {
            GprimeResult {
                holds: true,
                witnesses: None,
            }
        } else {
            GprimeResult {
                holds: false,
                witnesses: Some((lo.1, hi.1)),
            }
        }
    }

    /// Whether `beta` is constant on the samples (or `alpha` is).
    pub fn gprime_equals_g(&self, samples: &[Vec<f64>]) -> GprimeResult {
        let evals = self.evaluate(samples);
        let a = self.assumptions_from(samples, &evals);
        self.gprime_from(&a, &evals)
    }

    fn representation_from(
        &self,
        samples: &[Vec<f64>],
        assumptions: &AssumptionReport,
        gprime: &GprimeResult,
    ) -> RepresentationResult {
        if assumptions.alpha_constant || gprime.holds {
            return RepresentationResult {
                holds: true,
                clause: Some(1),
                note: "alpha or beta is constant on the samples".into(),
            };
        }
        let splits: Vec<Result<SplitData, TypeError>> =
            batch::map_points(self.exec, samples, |x| self.map.representation_split(x));
        if let Some((i, e)) = first_error(&splits) {
            return RepresentationResult {
                holds: false,
                clause: None,
                note: format!("evaluation failed at sample #{}: {}", i, e),
            };
        }
        let splits: Vec<SplitData> = splits.into_iter().map(|s| s.expect("checked")).collect();
        if let Some(i) = splits.iter().position(|s| s.w_dim != 2) {
            return RepresentationResult {
                holds: false,
                clause: None,
                note: format!(
                    "dimension mismatch: ker d(α,β) ∩ D has dimension {} at sample #{} {}, expected 2",
                    splits[i].w_dim,
                    i,
                    fmt_point(&samples[i])
                ),
            };
        }
        match splits.iter().position(|s| !s.splits()) {
            None => RepresentationResult {
                holds: true,
                clause: Some(2),
                note: "ker d(α,β) ∩ D splits as a line in each eigenplane at every sample".into(),
            },
            Some(i) => RepresentationResult {
                holds: false,
                clause: None,
                note: format!(
                    "ker d(α,β) ∩ D does not split along the eigenplanes at sample #{} {} (intersections {} and {})",
                    i,
                    fmt_point(&samples[i]),
                    splits[i].in_v1,
                    splits[i].in_v2
                ),
            },
        }
    }

    /// Sufficient conditions under which the action on `TM` restricts to
    /// `G'`: constant `alpha` or `beta`, or an eigenplane splitting of
    /// `ker d(alpha, beta) ∩ D` at every sample.
    pub fn representation_condition(&self, samples: &[Vec<f64>]) -> RepresentationResult {
        let evals = self.evaluate(samples);
        let a = self.assumptions_from(samples, &evals);
        let g = self.gprime_from(&a, &evals);
        self.representation_from(samples, &a, &g)
    }

    pub fn classify(&self, samples: &[Vec<f64>]) -> ClassificationReport {
        let evals = self.evaluate(samples);
        let assumptions = self.assumptions_from(samples, &evals);
        let dim = self.map.structure().dim();
        let properness_note = properness_note(&evals);
        let mut report = ClassificationReport {
            dim,
            samples: samples.to_vec(),
            case: None,
            gprime_equals_g: None,
            representation: None,
            psi_range: None,
            beta_stratum: None,
            stabilizer: None,
            properness_note,
            assumptions,
        };
        if dim != 5 {
            return report;
        }
        let psi: Vec<f64> = Self::psi_values(&evals).into_iter().flatten().collect();
        if !psi.is_empty() {
            let lo = psi.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = psi.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            report.psi_range = Some((lo, hi));
        }
        if report.assumptions.passed() {
            if let Some(Some(Ok(b))) = evals.first().map(|e| e.beta.as_ref()) {
                report.beta_stratum = Some(b.stratum);
                report.stabilizer = Some(b.stabilizer_label());
            }
        }
        if !report.assumptions.passed() {
            report.case = Some(Case::Undetermined);
            return report;
        }
        let gprime = self.gprime_from(&report.assumptions, &evals);
        let representation = self.representation_from(samples, &report.assumptions, &gprime);
        report.case = Some(if report.assumptions.alpha_constant {
            Case::Transitive
        } else if report.beta_stratum == Some(BetaStratum::Generic) {
            Case::DiscreteIsotropy
        } else if gprime.holds {
            Case::GprimeEqualsG
        } else {
            Case::GprimeProperSubgroupoid
        });
        report.gprime_equals_g = Some(gprime);
        report.representation = Some(representation);
        report
    }
}

fn properness_note(evals: &[SampleEval]) -> String {
    let descriptors: Option<Vec<String>> = evals
        .iter()
        .map(|e| e.data.as_ref().ok().map(|d| d.isotropy.to_string()))
        .collect();
    match descriptors {
        Some(d) if !d.is_empty() => {
            let mut distinct: Vec<String> = Vec::new();
            for s in d {
                if !distinct.contains(&s) {
                    distinct.push(s);
                }
            }
            format!(
                "isotropy {} is a product of orthogonal and unitary groups, hence compact, at every sample; the symmetry groupoid is proper",
                distinct.join(", ")
            )
        }
        _ => "isotropy is not available at every sample; no properness statement".into(),
    }
}

impl ClassificationReport {
    /// Plain-text report. The output depends only on the inputs.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let a = &self.assumptions;
        let _ = writeln!(out, "dimension: {}", self.dim);
        let _ = writeln!(out, "samples: {}", self.samples.len());
        let _ = writeln!(out, "assumptions:");
        for c in &a.checks {
            let _ = writeln!(
                out,
                "  [{}] {}: {}",
                if c.passed { "pass" } else { "FAIL" },
                c.name,
                c.detail
            );
        }
        if a.transversality_failures.is_empty() {
            let _ = writeln!(out, "transversality: true at all samples");
        } else {
            let _ = writeln!(
                out,
                "transversality: false at {}",
                list_samples(&self.samples, &a.transversality_failures)
            );
        }
        let rank = a.alpha_rank.map_or("not constant".to_string(), |r| r.to_string());
        let _ = writeln!(
            out,
            "alpha: rank {}, constant {}, interior of simplex {}",
            rank, a.alpha_constant, a.alpha_interior
        );
        if let Some(stratum) = self.beta_stratum {
            let range = self
                .psi_range
                .map_or("undefined".to_string(), |(lo, hi)| format!("[{}, {}]", lo, hi));
            let _ = writeln!(
                out,
                "beta: stratum {}, psi {}, stabilizer {}",
                stratum,
                range,
                self.stabilizer.as_deref().unwrap_or("n/a")
            );
        }
        match &self.gprime_equals_g {
            Some(g) => {
                let _ = write!(out, "gprime_equals_g: {}", g.holds);
                if let Some((i, j)) = g.witnesses {
                    let _ = write!(
                        out,
                        " (witnesses #{} {} and #{} {})",
                        i,
                        fmt_point(&self.samples[i]),
                        j,
                        fmt_point(&self.samples[j])
                    );
                }
                let _ = writeln!(out);
            }
            None if self.dim == 5 => {
                let _ = writeln!(out, "gprime_equals_g: not evaluated");
            }
            None => {}
        }
        match &self.representation {
            Some(r) => {
                let clause = r.clause.map_or(String::new(), |c| format!(" via clause {}", c));
                let _ = writeln!(out, "representation_condition: {}{} ({})", r.holds, clause, r.note);
            }
            None if self.dim == 5 => {
                let _ = writeln!(out, "representation_condition: not evaluated");
            }
            None => {}
        }
        match self.case {
            Some(Case::Undetermined) => {
                let _ = writeln!(out, "case: UNDETERMINED, failed: {}", a.failed().join(", "));
                let _ = writeln!(out, "citation: {}", Case::Undetermined.citation());
            }
            Some(case) => {
                let _ = writeln!(out, "case: {}", case);
                let _ = writeln!(out, "citation: {}", case.citation());
            }
            None => {
                let _ = writeln!(
                    out,
                    "case: n/a (groupoid classification needs dimension 5; analysis only)"
                );
            }
        }
        let _ = writeln!(out, "properness: {}", self.properness_note);
        out
    }
}
