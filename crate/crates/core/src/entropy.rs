//! Shannon and conditional entropies of exclusive, exhaustive history sets.
//!
//! Natural logarithm, unit prefactor, `0 ln 0 = 0`. Entropies are only
//! defined for sets that are exclusive and exhaustive in the named context;
//! anything else is an error rather than a number.

use serde::Serialize;

use crate::bayes::Source;
use crate::decoherence::{self, classify, ConsistencyMode};
use crate::error::{Error, Result};
use crate::hpo::{self, HistoryProposition};
use crate::quantum::SystemModel;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Distribution {
    labels: Vec<usize>,
    p: Vec<f64>,
}

impl Distribution {
    /// Entries within `tol` below zero are clamped to zero.
    pub fn new(labels: Vec<usize>, p: Vec<f64>, tol: f64) -> Result<Self> {
        if labels.len() != p.len() {
            return Err(Error::invalid(
                "distribution",
                format!("{} labels for {} values", labels.len(), p.len()),
            ));
        }
        if p.is_empty() {
            return Err(Error::EmptySet);
        }
        if let Some(bad) = p.iter().find(|x| !x.is_finite() || **x < -tol) {
            return Err(Error::invalid(
                "distribution",
                format!("entry {bad} is negative"),
            ));
        }
        let total: f64 = p.iter().sum();
        if (total - 1.0).abs() > tol {
            return Err(Error::NotNormalized(total));
        }
        let p = p.into_iter().map(|x| x.max(0.0)).collect();
        Ok(Distribution { labels, p })
    }

    /// Labels `0..p.len()`.
    pub fn indexed(p: Vec<f64>, tol: f64) -> Result<Self> {
        Distribution::new((0..p.len()).collect(), p, tol)
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn p(&self) -> &[f64] {
        &self.p
    }
}

fn plogp_sum(p: &[f64]) -> f64 {
    -p.iter()
        .filter(|x| **x > 0.0)
        .map(|x| x * x.ln())
        .sum::<f64>()
}

pub fn shannon(dist: &Distribution) -> f64 {
    plogp_sum(&dist.p)
}

/// The context in which both sets must be exclusive and exhaustive.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct EntropyContext {
    pub source: Source,
    pub mode: ConsistencyMode,
}

impl Default for EntropyContext {
    fn default() -> Self {
        EntropyContext {
            source: Source::Decoherence,
            mode: ConsistencyMode::Strong,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EntropyReport {
    pub h_a: f64,
    pub h_b: f64,
    pub h_joint: f64,
    pub h_b_given_a: f64,
    pub h_a_given_b: f64,
    /// `|H(A ∧ B) - H(A) - H(B|A)|`.
    pub additivity_residual_ab: f64,
    /// `|H(A ∧ B) - H(B) - H(A|B)|`.
    pub additivity_residual_ba: f64,
    /// `H(B) - H(B|A)`.
    pub concavity_margin_b: f64,
    /// `H(A) - H(A|B)`.
    pub concavity_margin_a: f64,
}

fn check_exclusive(
    model: &SystemModel,
    set: &[HistoryProposition],
    ctx: EntropyContext,
    name: &str,
) -> Result<()> {
    let tol = model.tol();
    if set.is_empty() {
        return Err(Error::EmptySet);
    }
    if !decoherence::is_complete(set, tol) {
        return Err(Error::NotCoExclusive(format!("{name} is not exhaustive")));
    }
    for (i, a) in set.iter().enumerate() {
        for b in &set[i + 1..] {
            if !hpo::disjoint(a, b, tol)? {
                return Err(Error::NotCoExclusive(format!(
                    "{name} has overlapping members"
                )));
            }
        }
    }
    if ctx.source == Source::Decoherence && !classify(model, set, ctx.mode)?.is_consistent {
        return Err(Error::NotCoExclusive(format!(
            "{name} is not probabilistically exclusive (interference terms)"
        )));
    }
    Ok(())
}

/// Joint table `p(a_i ∧ b_j)` after validating both sets and the joint set.
fn joint_table(
    model: &SystemModel,
    set_a: &[HistoryProposition],
    set_b: &[HistoryProposition],
    ctx: EntropyContext,
) -> Result<Vec<Vec<f64>>> {
    let tol = model.tol();
    check_exclusive(model, set_a, ctx, "first set")?;
    check_exclusive(model, set_b, ctx, "second set")?;
    let mut joint_set = Vec::with_capacity(set_a.len() * set_b.len());
    for a in set_a {
        for b in set_b {
            let ab = hpo::conj(a, b, tol).map_err(|e| match e {
                Error::NonCommuting(c) => Error::NotCoExclusive(format!(
                    "members do not commute (commutator norm {c:.3e})"
                )),
                other => other,
            })?;
            joint_set.push(ab);
        }
    }
    if ctx.source == Source::Decoherence && !classify(model, &joint_set, ctx.mode)?.is_consistent {
        return Err(Error::NotCoExclusive(
            "joint set is not probabilistically exclusive".into(),
        ));
    }
    let flat = joint_set
        .iter()
        .map(|h| ctx.source.probability(model, h))
        .collect::<Result<Vec<f64>>>()?;
    Distribution::indexed(flat.clone(), tol * flat.len() as f64)?;
    Ok(flat
        .chunks(set_b.len())
        .map(|row| row.iter().map(|x| x.max(0.0)).collect())
        .collect())
}

fn conditional_from_joint(rows: &[Vec<f64>]) -> f64 {
    rows.iter()
        .map(|row| {
            let pa: f64 = row.iter().sum();
            if pa <= 0.0 {
                return 0.0;
            }
            -pa * row
                .iter()
                .filter(|x| **x > 0.0)
                .map(|x| (x / pa) * (x / pa).ln())
                .sum::<f64>()
        })
        .sum()
}

fn transpose(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let m = rows.first().map_or(0, |r| r.len());
    (0..m)
        .map(|j| rows.iter().map(|r| r[j]).collect())
        .collect()
}

/// `H(B | A) = -sum_i p(a_i) sum_j p(b_j|a_i) ln p(b_j|a_i)`.
pub fn conditional_entropy(
    model: &SystemModel,
    set_a: &[HistoryProposition],
    set_b: &[HistoryProposition],
    context: EntropyContext,
) -> Result<f64> {
    Ok(conditional_from_joint(&joint_table(
        model, set_a, set_b, context,
    )?))
}

pub fn entropy_identities(
    model: &SystemModel,
    set_a: &[HistoryProposition],
    set_b: &[HistoryProposition],
    context: EntropyContext,
) -> Result<EntropyReport> {
    let rows = joint_table(model, set_a, set_b, context)?;
    let cols = transpose(&rows);
    let pa: Vec<f64> = rows.iter().map(|r| r.iter().sum()).collect();
    let pb: Vec<f64> = cols.iter().map(|c| c.iter().sum()).collect();
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    let h_a = plogp_sum(&pa);
    let h_b = plogp_sum(&pb);
    let h_joint = plogp_sum(&flat);
    let h_b_given_a = conditional_from_joint(&rows);
    let h_a_given_b = conditional_from_joint(&cols);
    Ok(EntropyReport {
        h_a,
        h_b,
        h_joint,
        h_b_given_a,
        h_a_given_b,
        additivity_residual_ab: (h_joint - h_a - h_b_given_a).abs(),
        additivity_residual_ba: (h_joint - h_b - h_a_given_b).abs(),
        concavity_margin_b: h_b - h_b_given_a,
        concavity_margin_a: h_a - h_a_given_b,
    })
}

/// Entropy of an exclusive, exhaustive set in the given context.
pub fn set_entropy(
    model: &SystemModel,
    set: &[HistoryProposition],
    context: EntropyContext,
) -> Result<f64> {
    check_exclusive(model, set, context, "set")?;
    let p = set
        .iter()
        .map(|h| context.source.probability(model, h))
        .collect::<Result<Vec<_>>>()?;
    let n = p.len() as f64;
    Ok(shannon(&Distribution::indexed(p, model.tol() * n)?))
}
