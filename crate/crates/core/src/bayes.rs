//! Bayesian consistency audit of history sets.
//!
//! Probabilities are conditioned on explicit contexts: the a-priori context
//! `C`, the null-counterfactual contexts `1^k = a_k ∨ ¬a_k`, a mixture `M`
//! of null-counterfactuals, and a-posteriori contexts `a_k I`. Contexts are
//! labels only; they never carry numbers of their own.
//!
//! Conditionals between members of an exclusive family follow Bayes' rule
//! through the HPO conjunction, `p(x | y I) = p(x ∧ y | I) / p(y | I)`,
//! which reproduces the assignments `p(¬a_j | a_i I) = 1` and
//! `p(a_i | a_j I) = 0` for distinct disjoint members.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::decoherence::{self, classify, ConsistencyMode, ConsistencyVerdict};
use crate::error::{Error, Result};
use crate::hpo::{self, HistoryProposition};
use crate::lp;
use crate::quantum::SystemModel;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Assignment {
    /// Decoherence values on d-realisable sets, LP values otherwise.
    #[default]
    Auto,
    Decoherence,
    LinearPositive,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Decoherence,
    LinearPositive,
}

impl Assignment {
    pub fn resolve(self, model: &SystemModel, set: &[HistoryProposition]) -> Result<Source> {
        Ok(match self {
            Assignment::Decoherence => Source::Decoherence,
            Assignment::LinearPositive => Source::LinearPositive,
            Assignment::Auto => {
                let v = classify(model, set, ConsistencyMode::Strong)?;
                if v.is_realisable(model.tol()) {
                    Source::Decoherence
                } else {
                    Source::LinearPositive
                }
            }
        })
    }
}

impl Source {
    pub fn probability(self, model: &SystemModel, h: &HistoryProposition) -> Result<f64> {
        match self {
            Source::Decoherence => decoherence::probability(model, h),
            Source::LinearPositive => lp::lp_probability(model, h),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ContextLabel {
    APriori,
    NullCounterfactual(usize),
    Mixture,
    PosteriorOn(usize),
}

impl fmt::Display for ContextLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ContextLabel::APriori => write!(f, "C"),
            ContextLabel::NullCounterfactual(k) => write!(f, "1^{k} C"),
            ContextLabel::Mixture => write!(f, "M"),
            ContextLabel::PosteriorOn(k) => write!(f, "a{k} I"),
        }
    }
}

impl Serialize for ContextLabel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// Weights `p(1^k | C)` of the null-counterfactual contexts.
#[derive(Clone, Debug, PartialEq, Default)]
pub enum ContextWeights {
    /// `1 / N` for each of the `N` contexts.
    #[default]
    Equal,
    Custom(Vec<f64>),
}

impl ContextWeights {
    fn weight(&self, k: usize, n: usize) -> f64 {
        match self {
            ContextWeights::Equal => 1.0 / n as f64,
            ContextWeights::Custom(w) => w[k],
        }
    }

    fn validate(&self, n: usize) -> Result<()> {
        if let ContextWeights::Custom(w) = self {
            if w.len() != n {
                return Err(Error::invalid(
                    "context weights",
                    format!("{} weights for {n} contexts", w.len()),
                ));
            }
            if w.iter().any(|x| !x.is_finite() || *x < 0.0) {
                return Err(Error::invalid(
                    "context weights",
                    "weights must be non-negative",
                ));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Conditional {
    pub value: f64,
    pub bounded: bool,
}

fn bounded_ratio(num: f64, den: f64, tol: f64) -> Conditional {
    Conditional {
        value: num / den,
        bounded: num >= -tol && num <= den + tol,
    }
}

/// `p(a | ¬b, I) = p(a | I) / p(¬b | I)`, flagged when it leaves `[0, 1]`.
pub fn conditional(
    model: &SystemModel,
    a: &HistoryProposition,
    b: &HistoryProposition,
    source: Source,
) -> Result<Conditional> {
    let tol = model.tol();
    let pa = source.probability(model, a)?;
    let pnb = source.probability(model, &hpo::negate(b))?;
    if pnb <= tol {
        return Err(Error::DegenerateConditioning(pnb));
    }
    Ok(bounded_ratio(pa, pnb, tol))
}

/// The two candidate values of `p(¬a ∧ ¬b | I)`:
/// `(p(¬b) - p(a), p(¬a) - p(b))`.
pub fn negneg_decompositions(
    model: &SystemModel,
    a: &HistoryProposition,
    b: &HistoryProposition,
    source: Source,
) -> Result<(f64, f64)> {
    let tol = model.tol();
    let pa = source.probability(model, a)?;
    let pb = source.probability(model, b)?;
    let pna = source.probability(model, &hpo::negate(a))?;
    let pnb = source.probability(model, &hpo::negate(b))?;
    for v in [pna, pnb] {
        if v <= tol {
            return Err(Error::DegenerateConditioning(v));
        }
    }
    Ok((pnb - pa, pna - pb))
}

/// A weighted mixture of the null-counterfactuals `{a_i, ¬a_i}` of a set of
/// d-realisable histories.
#[derive(Clone, Debug)]
pub struct MixtureModel {
    set: Vec<HistoryProposition>,
    weights: Vec<f64>,
}

fn validate_weights(weights: &[f64], n: usize, tol: f64) -> Result<()> {
    if weights.len() != n {
        return Err(Error::invalid(
            "mixture weights",
            format!("{} weights for {n} histories", weights.len()),
        ));
    }
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(Error::invalid(
            "mixture weights",
            "weights must be non-negative",
        ));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > tol {
        return Err(Error::invalid(
            "mixture weights",
            format!("weights sum to {total}"),
        ));
    }
    Ok(())
}

impl MixtureModel {
    pub fn new(
        model: &SystemModel,
        set: Vec<HistoryProposition>,
        weights: Vec<f64>,
    ) -> Result<Self> {
        if set.is_empty() {
            return Err(Error::EmptySet);
        }
        let tol = model.tol();
        validate_weights(&weights, set.len(), tol)?;
        let verdict = classify(model, &set, ConsistencyMode::Strong)?;
        if let Some(i) = verdict
            .realisability
            .iter()
            .position(|s| (s - 1.0).abs() > tol)
        {
            return Err(Error::invalid(
                "mixture",
                format!(
                    "member {i} is not d-realisable (sum {})",
                    verdict.realisability[i]
                ),
            ));
        }
        Ok(MixtureModel { set, weights })
    }

    pub fn equal(model: &SystemModel, set: Vec<HistoryProposition>) -> Result<Self> {
        let n = set.len().max(1);
        MixtureModel::new(model, set, vec![1.0 / n as f64; n])
    }

    pub fn set(&self) -> &[HistoryProposition] {
        &self.set
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// `w_i p(a_i) + sum_{j != i} w_j [p(a_i ∧ a_j) + p(a_i ∧ ¬a_j)]` with
/// decoherence probabilities, for any weights.
pub(crate) fn mixture_formula(
    model: &SystemModel,
    set: &[HistoryProposition],
    weights: &[f64],
    i: usize,
) -> Result<f64> {
    let tol = model.tol();
    let a = set
        .get(i)
        .ok_or_else(|| Error::invalid("mixture", format!("no member {i}")))?;
    let mut total = weights[i] * decoherence::probability(model, a)?;
    for (j, b) in set.iter().enumerate() {
        if j == i {
            continue;
        }
        let both = hpo::conj(a, b, tol)?;
        let and_not = hpo::conj(a, &hpo::negate(b), tol)?;
        total += weights[j]
            * (decoherence::probability(model, &both)?
                + decoherence::probability(model, &and_not)?);
    }
    Ok(total)
}

pub fn mixture_probability(model: &SystemModel, m: &MixtureModel, i: usize) -> Result<f64> {
    mixture_formula(model, &m.set, &m.weights, i)
}

fn check_index(set: &[HistoryProposition], i: usize) -> Result<&HistoryProposition> {
    set.get(i).ok_or_else(|| {
        Error::invalid(
            "index",
            format!("{i} is out of range for {} members", set.len()),
        )
    })
}

/// A-priori probability `p(x | C)` of a proposition asserted inside context
/// `1^k`: `p(x | 1^k C) p(1^k | C)` with `p(1^k | x C) = 1`.
fn a_priori(weight: f64, posterior: f64) -> f64 {
    weight * posterior
}

/// `p(a_i | 1^k C)` through the inverse rule
/// `[p(a_i ∧ a_k | C) + p(a_i ∧ ¬a_k | C)] / p(1^k | C)`.
pub fn posterior_rule(
    model: &SystemModel,
    set: &[HistoryProposition],
    i: usize,
    k: usize,
    source: Source,
    weights: &ContextWeights,
) -> Result<f64> {
    let tol = model.tol();
    let a = check_index(set, i)?;
    let ctx = check_index(set, k)?;
    weights.validate(set.len())?;
    let l_prime = weights.weight(k, set.len());
    if l_prime <= tol {
        return Err(Error::DegenerateConditioning(l_prime));
    }
    let with = source.probability(model, &hpo::conj(a, ctx, tol)?)?;
    let without = source.probability(model, &hpo::conj(a, &hpo::negate(ctx), tol)?)?;
    Ok((a_priori(l_prime, with) + a_priori(l_prime, without)) / l_prime)
}

/// `p(a_i | (∨_k 1^k) C)`: the contexts are treated as distinct labels whose
/// weights add.
pub fn exhaustive_context_probability(
    model: &SystemModel,
    set: &[HistoryProposition],
    i: usize,
    source: Source,
    weights: &ContextWeights,
) -> Result<f64> {
    weights.validate(set.len())?;
    let n = set.len();
    let mut num = 0.0;
    let mut den = 0.0;
    for k in 0..n {
        let w = weights.weight(k, n);
        if w <= 0.0 {
            continue;
        }
        num += w * posterior_rule(model, set, i, k, source, weights)?;
        den += w;
    }
    if den <= model.tol() {
        return Err(Error::DegenerateConditioning(den));
    }
    Ok(num / den)
}

/// `|p(a_i|C) / p(¬a_k|C) - p(a_i|1^k C) / p(¬a_k|1^k C)|`.
pub fn ratio_identity_residual(
    model: &SystemModel,
    set: &[HistoryProposition],
    i: usize,
    k: usize,
    source: Source,
    weights: &ContextWeights,
) -> Result<f64> {
    let tol = model.tol();
    let a = check_index(set, i)?;
    let ctx = check_index(set, k)?;
    weights.validate(set.len())?;
    let w = weights.weight(k, set.len());
    let post_a = posterior_rule(model, set, i, k, source, weights)?;
    // ¬a_k inside its own context: ¬a_k ∧ a_k = 0 and ¬a_k ∧ ¬a_k = ¬a_k.
    let not_k = hpo::negate(ctx);
    let post_not_k = (a_priori(w, source.probability(model, &hpo::conj(&not_k, ctx, tol)?)?)
        + a_priori(w, source.probability(model, &not_k)?))
        / w;
    if post_not_k <= tol {
        return Err(Error::DegenerateConditioning(post_not_k));
    }
    let prior_a = a_priori(w, source.probability(model, a)?);
    let prior_not_k = a_priori(w, source.probability(model, &not_k)?);
    Ok((prior_a / prior_not_k - post_a / post_not_k).abs())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoxReport {
    pub associativity_residual: f64,
    pub commutativity_residual: f64,
    pub product_rule_residual: f64,
    pub triples_checked: usize,
    pub pairs_checked: usize,
    pub non_commuting_pairs: usize,
}

/// Elements drawn into associativity triples, members first then negations.
const COX_TRIPLE_POOL: usize = 12;

/// Associativity and commutativity of ∧ on the operator level, and the
/// product rule `p(x ∧ y) = p(x | y) p(y)` for the member-pair conditionals.
pub fn cox_consistency(
    model: &SystemModel,
    set: &[HistoryProposition],
    source: Source,
) -> Result<CoxReport> {
    if set.is_empty() {
        return Err(Error::EmptySet);
    }
    let tol = model.tol();
    let negs: Vec<HistoryProposition> = set.iter().map(hpo::negate).collect();
    let pool: Vec<&HistoryProposition> = set.iter().chain(negs.iter()).collect();

    let mut commutativity: f64 = 0.0;
    let mut pairs = 0;
    let mut non_commuting = 0;
    for (i, x) in pool.iter().enumerate() {
        for y in pool.iter().skip(i + 1) {
            match (hpo::conj(x, y, tol), hpo::conj(y, x, tol)) {
                (Ok(xy), Ok(yx)) => {
                    commutativity =
                        commutativity.max(crate::linalg::dist(xy.matrix(), yx.matrix()));
                    pairs += 1;
                }
                _ => non_commuting += 1,
            }
        }
    }

    let half = COX_TRIPLE_POOL / 2;
    let triple_pool: Vec<&HistoryProposition> = set
        .iter()
        .take(half)
        .chain(negs.iter().take(half))
        .collect();
    let mut associativity: f64 = 0.0;
    let mut triples = 0;
    for x in &triple_pool {
        for y in &triple_pool {
            for z in &triple_pool {
                let left = hpo::conj(y, z, tol).and_then(|yz| hpo::conj(x, &yz, tol));
                let right = hpo::conj(x, y, tol).and_then(|xy| hpo::conj(&xy, z, tol));
                if let (Ok(l), Ok(r)) = (left, right) {
                    associativity = associativity.max(crate::linalg::dist(l.matrix(), r.matrix()));
                    triples += 1;
                }
            }
        }
    }

    let probs: Vec<f64> = set
        .iter()
        .map(|h| source.probability(model, h))
        .collect::<Result<_>>()?;
    let neg_probs: Vec<f64> = negs
        .iter()
        .map(|h| source.probability(model, h))
        .collect::<Result<_>>()?;
    let mut product: f64 = 0.0;
    for i in 0..set.len() {
        for j in 0..set.len() {
            if i == j {
                continue;
            }
            let (Ok(a_not_b), Ok(a_b), Ok(nots)) = (
                hpo::conj(&set[i], &negs[j], tol),
                hpo::conj(&set[i], &set[j], tol),
                hpo::conj(&negs[i], &negs[j], tol),
            ) else {
                continue;
            };
            // p(¬a_j | a_i) = 1
            product = product.max((source.probability(model, &a_not_b)? - probs[i]).abs());
            // p(a_i | a_j) = 0
            product = product.max(source.probability(model, &a_b)?.abs());
            // p(¬a_j | ¬a_i) = 1 - p(a_j) / p(¬a_i)
            if neg_probs[i] > tol {
                let cond = 1.0 - probs[j] / neg_probs[i];
                product =
                    product.max((source.probability(model, &nots)? - cond * neg_probs[i]).abs());
            }
        }
    }
    Ok(CoxReport {
        associativity_residual: associativity,
        commutativity_residual: commutativity,
        product_rule_residual: product,
        triples_checked: triples,
        pairs_checked: pairs,
        non_commuting_pairs: non_commuting,
    })
}

#[derive(Clone, Debug, Default)]
pub struct AuditOptions {
    pub mode: ConsistencyMode,
    pub assignment: Assignment,
    /// Mixture weights; equal weights when absent.
    pub weights: Option<Vec<f64>>,
    pub context_weights: ContextWeights,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConditionalEntry {
    pub i: usize,
    pub j: usize,
    /// `p(a_i | ¬a_j, I)`; absent when `p(¬a_j)` vanishes.
    pub value: Option<f64>,
    pub bounded: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecompositionEntry {
    pub i: usize,
    pub j: usize,
    pub first: f64,
    pub second: f64,
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MixtureEntry {
    pub i: usize,
    pub context: ContextLabel,
    pub mixture: f64,
    pub direct: f64,
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PosteriorEntry {
    pub i: usize,
    pub k: usize,
    pub context: ContextLabel,
    pub value: f64,
    pub residual: f64,
    pub ratio_residual: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DisjunctionEntry {
    pub i: usize,
    pub j: usize,
    pub k: usize,
    /// `p(a_i ∨ a_j | a_k I)`; absent when `p(a_k)` vanishes.
    pub given_member: Option<f64>,
    /// Case analysis: `[k = i] + [k = j] - [i = j = k]`.
    pub expected: f64,
    /// `p(a_i ∨ a_j | ¬a_k I)`; absent when `p(¬a_k)` vanishes.
    pub given_negation: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RealisabilityConstants {
    /// `K`: common value of `d(a_i, a_i) + d(¬a_i, ¬a_i)`, if any.
    pub k: Option<f64>,
    /// `L = p(a_i|C) + p(¬a_i|C)` under the context weights, if common.
    pub l: Option<f64>,
    /// `L' = p(1^k|C)`, if common.
    pub l_prime: Option<f64>,
    pub note: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AuditSummary {
    pub d_consistent: bool,
    pub complete: bool,
    pub d_realisable: bool,
    pub quasi_realisable: bool,
    pub order_preserving: bool,
    pub conditionals_bounded: bool,
    pub disjunctions_match: bool,
    pub linear_positive: bool,
    /// Quasi-realisable with bounded conditionals and agreeing decompositions.
    pub bayes_consistent: bool,
    pub flagged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AuditReport {
    pub source: Source,
    pub verdict: ConsistencyVerdict,
    pub conditionals: Vec<ConditionalEntry>,
    pub boundedness_failures: Vec<(usize, usize)>,
    /// Decompositions of `p(¬a_i ∧ ¬a_j)` with decoherence probabilities.
    pub decompositions: Vec<DecompositionEntry>,
    pub max_decomposition_residual: f64,
    /// The same decompositions under the audit's probability source.
    pub max_decomposition_residual_assigned: f64,
    pub mixture_weights: Vec<f64>,
    pub mixture_members_realisable: bool,
    pub mixture: Vec<MixtureEntry>,
    pub max_mixture_residual: f64,
    pub posteriors: Vec<PosteriorEntry>,
    pub exhaustive_context: Vec<f64>,
    pub max_posterior_residual: f64,
    pub max_ratio_residual: f64,
    pub constants: RealisabilityConstants,
    pub disjunctions: Vec<DisjunctionEntry>,
    pub disjunction_mismatches: usize,
    pub disjunction_unbounded: usize,
    pub lp: lp::LpReport,
    pub cox: CoxReport,
    pub summary: AuditSummary,
}

fn common(values: &[f64], tol: f64) -> Option<f64> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (values.is_empty() || hi - lo > tol).then_some(()).map_or(
        Some(values.iter().sum::<f64>() / values.len() as f64),
        |_| None,
    )
}

/// Bayes conditional through the HPO conjunction; `None` if the
/// conditioning proposition has vanishing probability or ∧ is undefined.
fn bayes(
    model: &SystemModel,
    source: Source,
    x: &HistoryProposition,
    y: &HistoryProposition,
    py: f64,
) -> Result<Option<f64>> {
    if py <= model.tol() {
        return Ok(None);
    }
    match hpo::conj(x, y, model.tol()) {
        Ok(xy) => Ok(Some(source.probability(model, &xy)? / py)),
        Err(Error::NonCommuting(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

fn disjunction_given(
    model: &SystemModel,
    source: Source,
    a: &HistoryProposition,
    b: &HistoryProposition,
    given: &HistoryProposition,
    p_given: f64,
) -> Result<Option<f64>> {
    let tol = model.tol();
    let both = match hpo::conj(a, b, tol) {
        Ok(x) => x,
        Err(Error::NonCommuting(_)) => return Ok(None),
        Err(e) => return Err(e),
    };
    let (Some(pa), Some(pb), Some(pab)) = (
        bayes(model, source, a, given, p_given)?,
        bayes(model, source, b, given, p_given)?,
        bayes(model, source, &both, given, p_given)?,
    ) else {
        return Ok(None);
    };
    Ok(Some(pa + pb - pab))
}

/// Disjunction tables are listed for sets up to this size.
pub const DISJUNCTION_TABLE_LIMIT: usize = 12;

#[allow(clippy::needless_range_loop)]
pub fn audit(
    model: &SystemModel,
    set: &[HistoryProposition],
    options: &AuditOptions,
) -> Result<AuditReport> {
    if set.is_empty() {
        return Err(Error::EmptySet);
    }
    let tol = model.tol();
    let n = set.len();
    let verdict = classify(model, set, options.mode)?;
    let source = options.assignment.resolve(model, set)?;
    let negs: Vec<HistoryProposition> = set.iter().map(hpo::negate).collect();
    let probs: Vec<f64> = set
        .iter()
        .map(|h| source.probability(model, h))
        .collect::<Result<_>>()?;
    let neg_probs: Vec<f64> = negs
        .iter()
        .map(|h| source.probability(model, h))
        .collect::<Result<_>>()?;

    // p(a_i | ¬a_j I)
    let mut conditionals = Vec::new();
    let mut boundedness_failures = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let entry = if neg_probs[j] > tol {
                let c = bounded_ratio(probs[i], neg_probs[j], tol);
                if !c.bounded {
                    boundedness_failures.push((i, j));
                }
                ConditionalEntry {
                    i,
                    j,
                    value: Some(c.value),
                    bounded: c.bounded,
                }
            } else {
                ConditionalEntry {
                    i,
                    j,
                    value: None,
                    bounded: true,
                }
            };
            conditionals.push(entry);
        }
    }

    let mut decompositions = Vec::new();
    let mut max_dec: f64 = 0.0;
    let mut max_dec_assigned: f64 = 0.0;
    let d_probs = &verdict.probabilities;
    let d_neg: Vec<f64> = verdict
        .realisability
        .iter()
        .zip(d_probs)
        .map(|(s, p)| s - p)
        .collect();
    for i in 0..n {
        for j in (i + 1)..n {
            let first = d_neg[j] - d_probs[i];
            let second = d_neg[i] - d_probs[j];
            let residual = (first - second).abs();
            max_dec = max_dec.max(residual);
            decompositions.push(DecompositionEntry {
                i,
                j,
                first,
                second,
                residual,
            });
            let assigned = ((neg_probs[j] - probs[i]) - (neg_probs[i] - probs[j])).abs();
            max_dec_assigned = max_dec_assigned.max(assigned);
        }
    }

    let mixture_weights = match &options.weights {
        Some(w) => {
            validate_weights(w, n, tol)?;
            w.clone()
        }
        None => vec![1.0 / n as f64; n],
    };
    let mixture_members_realisable = verdict.is_realisable(tol);
    let mut mixture = Vec::with_capacity(n);
    let mut max_mix: f64 = 0.0;
    for i in 0..n {
        let value = mixture_formula(model, set, &mixture_weights, i)?;
        let direct = d_probs[i];
        let residual = (value - direct).abs();
        max_mix = max_mix.max(residual);
        mixture.push(MixtureEntry {
            i,
            context: ContextLabel::Mixture,
            mixture: value,
            direct,
            residual,
        });
    }

    let cw = &options.context_weights;
    cw.validate(n)?;
    let mut posteriors = Vec::with_capacity(n * n);
    let mut max_post: f64 = 0.0;
    let mut max_ratio: f64 = 0.0;
    for i in 0..n {
        for k in 0..n {
            let value = posterior_rule(model, set, i, k, source, cw)?;
            let residual = (value - probs[i]).abs();
            max_post = max_post.max(residual);
            let ratio = if neg_probs[k] > tol {
                let r = ratio_identity_residual(model, set, i, k, source, cw)?;
                max_ratio = max_ratio.max(r);
                Some(r)
            } else {
                None
            };
            posteriors.push(PosteriorEntry {
                i,
                k,
                context: ContextLabel::NullCounterfactual(k),
                value,
                residual,
                ratio_residual: ratio,
            });
        }
    }
    let exhaustive_context = (0..n)
        .map(|i| exhaustive_context_probability(model, set, i, source, cw))
        .collect::<Result<Vec<_>>>()?;
    for (i, v) in exhaustive_context.iter().enumerate() {
        max_post = max_post.max((v - probs[i]).abs());
    }

    let weights_k: Vec<f64> = (0..n).map(|k| cw.weight(k, n)).collect();
    let k_const = common(&verdict.realisability, tol);
    let l_prime = common(&weights_k, tol);
    let l = l_prime.and_then(|lp| k_const.map(|k| k * lp));
    let note = match (k_const, l_prime) {
        (Some(k), Some(_)) if (k - 1.0).abs() <= tol => {
            "K = L/L' = 1: realisable; contexts are equally weighted null-counterfactuals"
                .to_string()
        }
        (Some(k), Some(_)) => format!("K = L/L' = {k}: quasi-realisable only"),
        (None, _) => "no common K: decompositions of p(¬a_i ∧ ¬a_j) disagree".to_string(),
        (Some(_), None) => "unequal context weights: L' is not common".to_string(),
    };
    let constants = RealisabilityConstants {
        k: k_const,
        l,
        l_prime,
        note,
    };

    let mut disjunctions = Vec::new();
    let mut mismatches = 0;
    let mut unbounded = 0;
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let expected = [k == i, k == j, i == j && j == k]
                    .iter()
                    .zip([1.0, 1.0, -1.0])
                    .filter(|(c, _)| **c)
                    .map(|(_, s)| s)
                    .sum::<f64>();
                let given_member =
                    disjunction_given(model, source, &set[i], &set[j], &set[k], probs[k])?;
                let given_negation =
                    disjunction_given(model, source, &set[i], &set[j], &negs[k], neg_probs[k])?;
                if let Some(v) = given_member {
                    if (v - expected).abs() > tol {
                        mismatches += 1;
                    }
                }
                if let Some(v) = given_negation {
                    if v < -tol || v > 1.0 + tol {
                        unbounded += 1;
                    }
                }
                if n <= DISJUNCTION_TABLE_LIMIT {
                    disjunctions.push(DisjunctionEntry {
                        i,
                        j,
                        k,
                        given_member,
                        expected,
                        given_negation,
                    });
                }
            }
        }
    }

    let lp_report = lp::is_lp_set(model, set)?;
    let cox = cox_consistency(model, set, source)?;

    let quasi = verdict.is_quasi_realisable();
    let conditionals_bounded = boundedness_failures.is_empty();
    let bayes_consistent = quasi && conditionals_bounded && max_dec_assigned <= tol;
    let summary = AuditSummary {
        d_consistent: verdict.is_consistent,
        complete: verdict.is_complete,
        d_realisable: verdict.is_realisable(tol),
        quasi_realisable: quasi,
        order_preserving: verdict.order_violations.is_empty(),
        conditionals_bounded,
        disjunctions_match: mismatches == 0,
        linear_positive: lp_report.is_lp,
        bayes_consistent,
        flagged: !(verdict.is_consistent
            && verdict.is_realisable(tol)
            && verdict.order_violations.is_empty()
            && conditionals_bounded
            && mismatches == 0
            && unbounded == 0
            && lp_report.is_lp
            && max_mix <= tol
            && max_post <= tol),
    };

    Ok(AuditReport {
        source,
        verdict,
        conditionals,
        boundedness_failures,
        decompositions,
        max_decomposition_residual: max_dec,
        max_decomposition_residual_assigned: max_dec_assigned,
        mixture_weights,
        mixture_members_realisable,
        mixture,
        max_mixture_residual: max_mix,
        posteriors,
        exhaustive_context,
        max_posterior_residual: max_post,
        max_ratio_residual: max_ratio,
        constants,
        disjunctions,
        disjunction_mismatches: mismatches,
        disjunction_unbounded: unbounded,
        lp: lp_report,
        cox,
        summary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hpo::exclusive_family_set;
    use crate::random::random_instance;

    #[test]
    fn single_time_family_audits_clean() {
        let m = random_instance(3, 1, 2).unwrap();
        let set = exclusive_family_set(&m).unwrap();
        let r = audit(&m, &set, &AuditOptions::default()).unwrap();
        assert_eq!(r.source, Source::Decoherence);
        assert!(!r.summary.flagged, "{:?}", r.summary);
        assert!((r.constants.k.unwrap() - 1.0).abs() < 1e-10);
        assert!(r.max_decomposition_residual < 1e-10);
        assert!(r.max_ratio_residual < 1e-10);
        assert!(r.cox.product_rule_residual < 1e-10);
        assert_eq!(r.disjunction_mismatches, 0);
    }

    #[test]
    fn disjunction_case_analysis() {
        let m = random_instance(2, 2, 5).unwrap();
        let set = exclusive_family_set(&m).unwrap();
        let r = audit(&m, &set, &AuditOptions::default()).unwrap();
        for e in &r.disjunctions {
            if let Some(v) = e.given_member {
                assert!((v - e.expected).abs() < 1e-12);
            }
            if e.k == e.i && e.i != e.j {
                assert_eq!(e.expected, 1.0);
            }
            if e.k != e.i && e.k != e.j {
                assert_eq!(e.expected, 0.0);
            }
        }
    }

    #[test]
    fn conditional_of_member_with_itself() {
        let m = random_instance(2, 2, 8).unwrap();
        let set = exclusive_family_set(&m).unwrap();
        let a = &set[0];
        let c = conditional(&m, a, a, Source::Decoherence).unwrap();
        let pa = decoherence::probability(&m, a).unwrap();
        let pna = decoherence::probability(&m, &hpo::negate(a)).unwrap();
        assert!((c.value - pa / pna).abs() < 1e-12);
        assert_eq!(c.bounded, pa <= pna + m.tol());
    }

    #[test]
    fn degenerate_conditioning() {
        let m = random_instance(2, 1, 8).unwrap();
        let unit = HistoryProposition::unit(m.support().clone(), 2);
        let a = exclusive_family_set(&m).unwrap().remove(0);
        assert!(matches!(
            conditional(&m, &a, &unit, Source::Decoherence),
            Err(Error::DegenerateConditioning(_))
        ));
    }

    #[test]
    fn decompositions_of_identical_pair() {
        let m = random_instance(2, 3, 4).unwrap();
        let set = exclusive_family_set(&m).unwrap();
        let (x, y) = negneg_decompositions(&m, &set[2], &set[2], Source::Decoherence).unwrap();
        assert_eq!(x, y);
    }

    #[test]
    fn mixture_requires_realisable_members() {
        let m = random_instance(2, 3, 0).unwrap();
        let set = exclusive_family_set(&m).unwrap();
        assert!(MixtureModel::equal(&m, set).is_err());
        let single = random_instance(2, 1, 0).unwrap();
        let set = exclusive_family_set(&single).unwrap();
        assert!(MixtureModel::new(&single, set.clone(), vec![0.5, 0.6]).is_err());
        assert!(MixtureModel::new(&single, set.clone(), vec![1.0]).is_err());
        let mm = MixtureModel::new(&single, set.clone(), vec![0.9, 0.1]).unwrap();
        let p = decoherence::probability(&single, &set[1]).unwrap();
        assert!((mixture_probability(&single, &mm, 1).unwrap() - p).abs() < 1e-12);
    }

    #[test]
    fn single_member_mixture() {
        let m = random_instance(2, 1, 3).unwrap();
        let unit = HistoryProposition::unit(m.support().clone(), 2);
        let mm = MixtureModel::new(&m, vec![unit.clone()], vec![1.0]).unwrap();
        assert!((mixture_probability(&m, &mm, 0).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn posterior_in_own_context() {
        let m = random_instance(3, 2, 1).unwrap();
        let set = exclusive_family_set(&m).unwrap();
        for src in [Source::Decoherence, Source::LinearPositive] {
            for i in [0, 4, 8] {
                let v = posterior_rule(&m, &set, i, i, src, &ContextWeights::Equal).unwrap();
                assert!((v - src.probability(&m, &set[i]).unwrap()).abs() < 1e-12);
                let r =
                    ratio_identity_residual(&m, &set, i, i, src, &ContextWeights::Equal).unwrap();
                assert!(r < 1e-10);
            }
        }
    }

    #[test]
    fn zero_context_weight_is_degenerate() {
        let m = random_instance(2, 1, 1).unwrap();
        let set = exclusive_family_set(&m).unwrap();
        let w = ContextWeights::Custom(vec![0.0, 1.0]);
        assert!(matches!(
            posterior_rule(&m, &set, 1, 0, Source::Decoherence, &w),
            Err(Error::DegenerateConditioning(_))
        ));
    }

    #[test]
    fn cox_residuals_on_exclusive_family() {
        let m = random_instance(2, 2, 13).unwrap();
        let set = exclusive_family_set(&m).unwrap();
        let r = cox_consistency(&m, &set, Source::LinearPositive).unwrap();
        assert!(r.associativity_residual <= 1e-12);
        assert!(r.commutativity_residual <= 1e-12);
        assert!(r.product_rule_residual <= 1e-10);
        assert!(r.triples_checked > 0 && r.pairs_checked > 0);
    }

    #[test]
    fn context_labels_render() {
        assert_eq!(ContextLabel::APriori.to_string(), "C");
        assert_eq!(ContextLabel::NullCounterfactual(3).to_string(), "1^3 C");
        assert_eq!(ContextLabel::Mixture.to_string(), "M");
        assert_eq!(ContextLabel::PosteriorOn(1).to_string(), "a1 I");
    }
}
