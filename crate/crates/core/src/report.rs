//! Running scenarios and rendering their reports.
//!
//! The machine-readable report is pretty-printed JSON with a fixed key order,
//! so identical inputs produce byte-identical output.

use std::fmt::Write as _;

use serde::Serialize;

use crate::bayes::{self, Assignment, AuditOptions, AuditReport, ContextWeights, Source};
use crate::decoherence::{self, classify, ConsistencyMode, ConsistencyVerdict};
use crate::entropy::{self, EntropyContext, EntropyReport};
use crate::error::Error;
use crate::hpo::{self, HistoryProposition};
use crate::lp::{self, LpReport};
use crate::scenario::{
    Analysis, Scenario, ScenarioError, ScenarioFile, SearchKind, SetKeyword, SetSpec,
};
use crate::search::{search_violations, SearchWitness, DEFAULT_BUDGET};

/// Command-line overrides of the file's settings.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RunOptions {
    pub tolerance: Option<f64>,
    pub mode: Option<ConsistencyMode>,
    pub seed: Option<u64>,
    pub budget: Option<usize>,
    pub assignment: Option<Assignment>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HistorySummary {
    pub name: String,
    pub probability: f64,
    pub lp: [f64; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "analysis", rename_all = "snake_case")]
pub enum AnalysisReport {
    Classify {
        set: Vec<String>,
        verdict: ConsistencyVerdict,
        flagged: bool,
    },
    Audit {
        set: Vec<String>,
        report: Box<AuditReport>,
        flagged: bool,
    },
    Lp {
        set: Vec<String>,
        report: LpReport,
        flagged: bool,
    },
    Entropy {
        a: Vec<String>,
        b: Vec<String>,
        context: EntropyContext,
        report: EntropyReport,
        flagged: bool,
    },
    Search {
        kind: SearchKind,
        budget: usize,
        seed: u64,
        witness: Option<Box<SearchWitness>>,
        reproduction: Option<Box<ScenarioFile>>,
        flagged: bool,
    },
    /// The analysis is undefined for its input, e.g. entropy of sets that
    /// are not exclusive.
    Refused {
        index: usize,
        reason: String,
        flagged: bool,
    },
}

impl AnalysisReport {
    pub fn flagged(&self) -> bool {
        match self {
            AnalysisReport::Classify { flagged, .. }
            | AnalysisReport::Audit { flagged, .. }
            | AnalysisReport::Lp { flagged, .. }
            | AnalysisReport::Entropy { flagged, .. }
            | AnalysisReport::Search { flagged, .. }
            | AnalysisReport::Refused { flagged, .. } => *flagged,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub name: Option<String>,
    pub notes: Vec<String>,
    pub dimension: usize,
    pub t0: f64,
    pub times: Vec<f64>,
    pub tolerance: f64,
    pub mode: ConsistencyMode,
    pub seed: u64,
    pub assignment: Assignment,
    pub histories: Vec<HistorySummary>,
    pub analyses: Vec<AnalysisReport>,
    pub flagged: bool,
}

impl Report {
    pub fn exit_code(&self) -> i32 {
        i32::from(self.flagged)
    }

    pub fn to_machine(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

fn resolve(
    scenario: &Scenario,
    spec: &SetSpec,
    field: &str,
) -> Result<(Vec<String>, Vec<HistoryProposition>), ScenarioError> {
    let set = scenario.resolve_set(spec, field)?;
    let labels = match spec {
        SetSpec::Named(names) => names.clone(),
        SetSpec::Keyword(SetKeyword::ExclusiveFamily) => hpo::family_index_tuples(&scenario.model)
            .iter()
            .map(|idx| {
                let parts: Vec<String> = idx.iter().map(|i| i.to_string()).collect();
                format!("({})", parts.join(","))
            })
            .collect(),
    };
    Ok((labels, set))
}

fn refusable(e: &Error) -> bool {
    matches!(
        e,
        Error::NotCoExclusive(_)
            | Error::DegenerateConditioning(_)
            | Error::NonCommuting(_)
            | Error::Inconsistent(_)
            | Error::NotNormalized(_)
            | Error::Invalid { .. }
    )
}

fn run_analysis(
    scenario: &Scenario,
    file: &ScenarioFile,
    index: usize,
    analysis: &Analysis,
    options: &RunOptions,
) -> Result<AnalysisReport, ScenarioError> {
    let model = &scenario.model;
    let tol = model.tol();
    let field = format!("analyses[{index}]");
    let outcome: Result<AnalysisReport, Error> = match analysis {
        Analysis::Classify { set } => {
            let (names, set) = resolve(scenario, set, &format!("{field}.set"))?;
            classify(model, &set, file.mode).map(|verdict| {
                let flagged = !verdict.is_consistent
                    || !verdict.is_quasi_realisable()
                    || !verdict.order_violations.is_empty();
                AnalysisReport::Classify {
                    set: names,
                    verdict,
                    flagged,
                }
            })
        }
        Analysis::Audit {
            set,
            weights,
            context_weights,
        } => {
            let (names, set) = resolve(scenario, set, &format!("{field}.set"))?;
            let opts = AuditOptions {
                mode: file.mode,
                assignment: file.assignment,
                weights: weights.clone(),
                context_weights: context_weights
                    .clone()
                    .map_or(ContextWeights::Equal, ContextWeights::Custom),
            };
            bayes::audit(model, &set, &opts).map(|r| {
                let flagged = r.summary.flagged;
                AnalysisReport::Audit {
                    set: names,
                    report: Box::new(r),
                    flagged,
                }
            })
        }
        Analysis::Lp { set } => {
            let (names, set) = resolve(scenario, set, &format!("{field}.set"))?;
            lp::is_lp_set(model, &set).map(|report| {
                let flagged = !report.is_lp || !report.order_violations.is_empty();
                AnalysisReport::Lp {
                    set: names,
                    report,
                    flagged,
                }
            })
        }
        Analysis::Entropy { a, b, source } => {
            let (names_a, set_a) = resolve(scenario, a, &format!("{field}.a"))?;
            let (names_b, set_b) = resolve(scenario, b, &format!("{field}.b"))?;
            let source = match source {
                Some(s) => Ok(*s),
                None => file.assignment.resolve(model, &set_a),
            };
            source.and_then(|source| {
                let context = EntropyContext {
                    source,
                    mode: file.mode,
                };
                entropy::entropy_identities(model, &set_a, &set_b, context).map(|report| {
                    let flagged = report.additivity_residual_ab > tol
                        || report.additivity_residual_ba > tol
                        || report.concavity_margin_a < -tol
                        || report.concavity_margin_b < -tol;
                    AnalysisReport::Entropy {
                        a: names_a,
                        b: names_b,
                        context,
                        report,
                        flagged,
                    }
                })
            })
        }
        Analysis::Search { kind, budget } => {
            let budget = options.budget.or(*budget).unwrap_or(DEFAULT_BUDGET);
            search_violations(*kind, budget, file.seed).map(|w| {
                let reproduction = w.as_ref().map(|w| {
                    let mut f = w.scenario.clone();
                    f.tolerance = tol;
                    f.mode = file.mode;
                    Box::new(f)
                });
                AnalysisReport::Search {
                    kind: *kind,
                    budget,
                    seed: file.seed,
                    flagged: w.is_some(),
                    witness: w.map(Box::new),
                    reproduction,
                }
            })
        }
    };
    match outcome {
        Ok(r) => Ok(r),
        Err(e) if refusable(&e) => Ok(AnalysisReport::Refused {
            index,
            reason: e.to_string(),
            flagged: true,
        }),
        Err(e) => Err(ScenarioError::Validation {
            field,
            message: e.to_string(),
        }),
    }
}

/// Applies `options` to `file`, validates it and runs every analysis in
/// declared order.
pub fn run_scenario(file: &ScenarioFile, options: &RunOptions) -> Result<Report, ScenarioError> {
    let mut file = file.clone();
    if let Some(t) = options.tolerance {
        file.tolerance = t;
    }
    if let Some(m) = options.mode {
        file.mode = m;
    }
    if let Some(s) = options.seed {
        file.seed = s;
    }
    if let Some(a) = options.assignment {
        file.assignment = a;
    }
    let scenario = file.build()?;
    let model = &scenario.model;
    let histories = scenario
        .histories
        .iter()
        .map(|(name, h)| {
            let p = decoherence::dfunc(model, h, h)?.re;
            let v = lp::lp_value(model, h)?;
            Ok(HistorySummary {
                name: name.clone(),
                probability: p,
                lp: [v.re, v.im],
            })
        })
        .collect::<Result<Vec<_>, Error>>()
        .map_err(|e| ScenarioError::Validation {
            field: "histories".into(),
            message: e.to_string(),
        })?;
    let analyses = file
        .analyses
        .iter()
        .enumerate()
        .map(|(i, a)| run_analysis(&scenario, &file, i, a, options))
        .collect::<Result<Vec<_>, _>>()?;
    let flagged = analyses.iter().any(AnalysisReport::flagged);
    Ok(Report {
        name: file.name.clone(),
        notes: file.notes.clone(),
        dimension: file.dimension,
        t0: file.t0,
        times: file.times.clone(),
        tolerance: file.tolerance,
        mode: file.mode,
        seed: file.seed,
        assignment: file.assignment,
        histories,
        analyses,
        flagged,
    })
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

/// Fixed-point with twelve decimals; values that round to zero print as 0.
fn num(x: f64) -> String {
    if x.abs() < 5e-13 {
        format!("{:.12}", 0.0)
    } else {
        format!("{x:.12}")
    }
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "none".to_string(), num)
}

fn source_name(s: Source) -> &'static str {
    match s {
        Source::Decoherence => "decoherence",
        Source::LinearPositive => "linear positive",
    }
}

fn verdict_text(out: &mut String, names: &[String], v: &ConsistencyVerdict) {
    let _ = writeln!(
        out,
        "  d-consistent ({:?}): {} (max off-diagonal {:.3e})",
        v.mode,
        yes_no(v.is_consistent),
        v.max_offdiag
    );
    let _ = writeln!(out, "  complete: {}", yes_no(v.is_complete));
    for (i, name) in names.iter().enumerate() {
        let _ = writeln!(
            out,
            "  {name}: d = {}, d + d(not) = {}",
            num(v.probabilities[i]),
            num(v.realisability[i])
        );
    }
    let _ = writeln!(
        out,
        "  quasi-realisable constant K: {}",
        opt(v.quasi_constant_k)
    );
    let _ = writeln!(out, "  order violations: {}", v.order_violations.len());
}

pub fn render_text(report: &Report) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "scenario: {}",
        report.name.as_deref().unwrap_or("(unnamed)")
    );
    for n in &report.notes {
        let _ = writeln!(out, "note: {n}");
    }
    let _ = writeln!(
        out,
        "dimension {}, t0 {}, times {:?}, tolerance {:e}, mode {:?}, seed {}",
        report.dimension, report.t0, report.times, report.tolerance, report.mode, report.seed
    );
    if !report.histories.is_empty() {
        let _ = writeln!(out, "histories:");
        for h in &report.histories {
            let _ = writeln!(
                out,
                "  {}: d(a,a) = {}, lp = {} {}{}i",
                h.name,
                num(h.probability),
                num(h.lp[0]),
                if h.lp[1] < -5e-13 { "-" } else { "+" },
                num(h.lp[1].abs())
            );
        }
    }
    for (i, a) in report.analyses.iter().enumerate() {
        let flag = if a.flagged() { "FLAGGED" } else { "clean" };
        match a {
            AnalysisReport::Classify { set, verdict, .. } => {
                let _ = writeln!(out, "[{i}] classify {set:?}: {flag}");
                verdict_text(&mut out, set, verdict);
            }
            AnalysisReport::Audit { set, report: r, .. } => {
                let _ = writeln!(out, "[{i}] audit {set:?}: {flag}");
                let _ = writeln!(out, "  probability source: {}", source_name(r.source));
                verdict_text(&mut out, set, &r.verdict);
                let s = &r.summary;
                let _ = writeln!(
                    out,
                    "  d-realisable: {}, quasi-realisable: {}, conditionals bounded: {}, LP: {}, Bayes-consistent: {}",
                    yes_no(s.d_realisable),
                    yes_no(s.quasi_realisable),
                    yes_no(s.conditionals_bounded),
                    yes_no(s.linear_positive),
                    yes_no(s.bayes_consistent)
                );
                for c in &r.conditionals {
                    let _ = writeln!(
                        out,
                        "  p({} | not {}) = {}{}",
                        set[c.i],
                        set[c.j],
                        opt(c.value),
                        if c.bounded { "" } else { "  (unbounded)" }
                    );
                }
                for m in &r.mixture {
                    let _ = writeln!(
                        out,
                        "  p({} | M) = {} (direct {})",
                        set[m.i],
                        num(m.mixture),
                        num(m.direct)
                    );
                }
                let _ = writeln!(out, "  mixture weights: {:?}", r.mixture_weights);
                let _ = writeln!(
                    out,
                    "  max decomposition residual: {:.3e}",
                    r.max_decomposition_residual
                );
                let _ = writeln!(
                    out,
                    "  max posterior residual: {:.3e}",
                    r.max_posterior_residual
                );
                let _ = writeln!(out, "  max ratio residual: {:.3e}", r.max_ratio_residual);
                let _ = writeln!(
                    out,
                    "  K = {}, L = {}, L' = {}: {}",
                    opt(r.constants.k),
                    opt(r.constants.l),
                    opt(r.constants.l_prime),
                    r.constants.note
                );
                let _ = writeln!(
                    out,
                    "  disjunction mismatches: {}, unbounded: {}",
                    r.disjunction_mismatches, r.disjunction_unbounded
                );
                let _ = writeln!(
                    out,
                    "  cox: associativity {:.3e}, commutativity {:.3e}, product rule {:.3e}",
                    r.cox.associativity_residual,
                    r.cox.commutativity_residual,
                    r.cox.product_rule_residual
                );
            }
            AnalysisReport::Lp { set, report: r, .. } => {
                let _ = writeln!(out, "[{i}] lp {set:?}: {flag}");
                for (k, e) in r.entries.iter().enumerate() {
                    let name = set.get(k).map_or("(remainder)", String::as_str);
                    let _ = writeln!(
                        out,
                        "  {name}: Re lp = {}{}",
                        num(e.probability),
                        if e.positive { "" } else { "  (negative)" }
                    );
                }
                let _ = writeln!(
                    out,
                    "  linearly positive: {}, partition sum {}",
                    yes_no(r.is_lp),
                    num(r.partition_sum)
                );
            }
            AnalysisReport::Entropy {
                a,
                b,
                context,
                report: r,
                ..
            } => {
                let _ = writeln!(
                    out,
                    "[{i}] entropy {a:?} / {b:?} ({}): {flag}",
                    source_name(context.source)
                );
                let _ = writeln!(
                    out,
                    "  H(A) = {}, H(B) = {}, H(A and B) = {}",
                    num(r.h_a),
                    num(r.h_b),
                    num(r.h_joint)
                );
                let _ = writeln!(
                    out,
                    "  H(B|A) = {}, H(A|B) = {}",
                    num(r.h_b_given_a),
                    num(r.h_a_given_b)
                );
                let _ = writeln!(
                    out,
                    "  additivity residuals {:.3e}, {:.3e}; concavity margins {:.3e}, {:.3e}",
                    r.additivity_residual_ab,
                    r.additivity_residual_ba,
                    r.concavity_margin_b,
                    r.concavity_margin_a
                );
            }
            AnalysisReport::Search {
                kind,
                budget,
                seed,
                witness,
                ..
            } => {
                let _ = writeln!(
                    out,
                    "[{i}] search {kind} (budget {budget}, seed {seed}): {flag}"
                );
                match witness {
                    Some(w) => {
                        let _ = writeln!(
                            out,
                            "  witness at dimension {}, {} times, trial {} (instance seed {}): histories {:?}, measure {:.6e}",
                            w.dimension, w.times, w.trial, w.instance_seed, w.histories, w.measure
                        );
                    }
                    None => {
                        let _ = writeln!(out, "  no witness within budget");
                    }
                }
            }
            AnalysisReport::Refused { reason, .. } => {
                let _ = writeln!(out, "[{i}] refused: {reason}");
            }
        }
    }
    let _ = writeln!(
        out,
        "overall: {}",
        if report.flagged { "FLAGGED" } else { "clean" }
    );
    out
}
