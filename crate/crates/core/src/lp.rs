//! Linear-positive candidate probabilities `Re tr(C_a rho)`.

use num_complex::Complex64;
use serde::Serialize;

use crate::decoherence::{self, dfunc_class};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::hpo::{self, HistoryProposition, HomogeneousHistory};
use crate::linalg::{self, CMatrix};
use crate::quantum::SystemModel;
use crate::random::{mix_seed, random_instance_with, RandomOptions};

pub fn lp_class(rho: &CMatrix, c: &CMatrix) -> Complex64 {
    linalg::trace_of_product(c, rho)
}

pub fn lp_value(model: &SystemModel, a: &HistoryProposition) -> Result<Complex64> {
    let c = hpo::class_operator(model, a)?;
    Ok(lp_class(model.rho().matrix(), c.matrix()))
}

/// Real part of the LP value. Never clamped: a negative value is the signal
/// that the history is not LP.
pub fn lp_probability(model: &SystemModel, a: &HistoryProposition) -> Result<f64> {
    Ok(lp_value(model, a)?.re)
}

/// `|Re d(a, not a) - (Re d_LP(a) - d(a, a))|`.
pub fn bridge_identity_residual(model: &SystemModel, a: &HistoryProposition) -> Result<f64> {
    let c = hpo::class_operator(model, a)?;
    let not_c = hpo::class_operator(model, &hpo::negate(a))?;
    let rho = model.rho().matrix();
    let cross = dfunc_class(rho, c.matrix(), not_c.matrix()).re;
    let lp = lp_class(rho, c.matrix()).re;
    let diag =
        decoherence::clamp_probability(dfunc_class(rho, c.matrix(), c.matrix()).re, model.tol())?;
    Ok((cross - (lp - diag)).abs())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LpEntry {
    /// `tr(C rho)` as `[re, im]`.
    pub value: [f64; 2],
    pub probability: f64,
    pub negation_probability: f64,
    /// `Re lp(a) + Re lp(not a)`; 1 up to rounding.
    pub realisability_sum: f64,
    pub positive: bool,
    /// The member was added to complete the partition of unity.
    pub remainder: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LpReport {
    pub entries: Vec<LpEntry>,
    pub is_lp: bool,
    pub partition_sum: f64,
    /// Pairs `(i, j)` with `a_i <= not a_j` but `Re lp(a_i) > Re lp(not a_j)`.
    pub order_violations: Vec<(usize, usize)>,
}

impl LpReport {
    pub fn probabilities(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.probability).collect()
    }
}

/// The remainder `not (a_1 ∨ ... ∨ a_n)`, or `None` if the set is already
/// complete.
pub fn remainder(set: &[HistoryProposition], tol: f64) -> Result<Option<HistoryProposition>> {
    if decoherence::is_complete(set, tol) {
        return Ok(None);
    }
    let first = set.first().ok_or(Error::EmptySet)?;
    let mut join = HistoryProposition::null(first.support().clone(), first.dim());
    for h in set {
        join = hpo::disj(&join, h, tol)?;
    }
    let rest = hpo::negate(&join);
    Ok(if rest.is_null() { None } else { Some(rest) })
}

pub fn is_lp_set(model: &SystemModel, set: &[HistoryProposition]) -> Result<LpReport> {
    if set.is_empty() {
        return Err(Error::EmptySet);
    }
    for h in set {
        hpo::check_model_support(model, h)?;
    }
    let tol = model.tol();
    let mut members: Vec<HistoryProposition> = set.to_vec();
    let extra = remainder(set, tol)?;
    let n_given = members.len();
    if let Some(r) = extra {
        members.push(r);
    }
    let rho = model.rho().matrix();
    let mut entries = Vec::with_capacity(members.len());
    let mut negations = Vec::with_capacity(members.len());
    for (i, h) in members.iter().enumerate() {
        let not_h = hpo::negate(h);
        let v = lp_class(rho, hpo::class_operator(model, h)?.matrix());
        let nv = lp_class(rho, hpo::class_operator(model, &not_h)?.matrix());
        entries.push(LpEntry {
            value: [v.re, v.im],
            probability: v.re,
            negation_probability: nv.re,
            realisability_sum: v.re + nv.re,
            positive: v.re >= -tol && nv.re >= -tol,
            remainder: i >= n_given,
        });
        negations.push(not_h);
    }
    let is_lp = entries.iter().all(|e| e.positive);
    let partition_sum = entries.iter().map(|e| e.probability).sum();
    let mut order_violations = Vec::new();
    for i in 0..members.len() {
        for j in 0..members.len() {
            if i == j {
                continue;
            }
            if hpo::leq(&members[i], &negations[j], tol)?
                && entries[i].probability > entries[j].negation_probability + tol
            {
                order_violations.push((i, j));
            }
        }
    }
    Ok(LpReport {
        entries,
        is_lp,
        partition_sum,
        order_violations,
    })
}

/// Random model family used by the searches.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ModelGenerator {
    pub dim: usize,
    pub n_times: usize,
    pub options: RandomOptions,
}

impl ModelGenerator {
    pub fn generic(dim: usize, n_times: usize) -> Self {
        ModelGenerator {
            dim,
            n_times,
            options: RandomOptions::default(),
        }
    }

    pub fn classical(dim: usize, n_times: usize) -> Self {
        ModelGenerator {
            dim,
            n_times,
            options: RandomOptions::classical(),
        }
    }

    /// Model for trial `trial` of a search seeded with `seed`.
    pub fn trial_seed(&self, seed: u64, trial: usize) -> u64 {
        mix_seed(seed, &[self.dim as u64, self.n_times as u64, trial as u64])
    }

    pub fn generate(&self, instance_seed: u64) -> Result<SystemModel> {
        random_instance_with(self.dim, self.n_times, instance_seed, self.options)
    }
}

#[derive(Clone, Debug)]
pub struct NonLpWitness {
    pub trial: usize,
    pub instance_seed: u64,
    pub model: SystemModel,
    /// Family member index at each time.
    pub history: Vec<usize>,
    pub lp_value: Complex64,
}

/// Searches `trials` random models for a homogeneous history with
/// `Re lp < -10 tol`. The first witness by trial index is returned.
pub fn find_non_lp(
    generator: &ModelGenerator,
    trials: usize,
    seed: u64,
) -> Result<Option<NonLpWitness>> {
    find_non_lp_with(generator, trials, seed, Execution::default())
}

pub fn find_non_lp_with(
    generator: &ModelGenerator,
    trials: usize,
    seed: u64,
    exec: Execution,
) -> Result<Option<NonLpWitness>> {
    if trials == 0 {
        return Err(Error::invalid("search", "at least one trial is required"));
    }
    Ok(exec.find_first(trials, |trial| {
        let instance_seed = generator.trial_seed(seed, trial);
        let model = generator.generate(instance_seed).ok()?;
        let threshold = -10.0 * model.tol();
        let rho = model.rho().matrix();
        for idx in hpo::family_index_tuples(&model) {
            let h = HomogeneousHistory::from_indices(&model, &idx).ok()?;
            let c = hpo::homogeneous_class_operator(&model, &h).ok()?;
            let v = lp_class(rho, c.matrix());
            if v.re < threshold {
                return Some(NonLpWitness {
                    trial,
                    instance_seed,
                    model,
                    history: idx,
                    lp_value: v,
                });
            }
        }
        None
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decoherence::probability;
    use crate::hpo::{embed_indices, exclusive_family_set, negate};
    use crate::random::random_instance;

    #[test]
    fn unit_and_null() {
        let m = random_instance(2, 2, 0).unwrap();
        let unit = HistoryProposition::unit(m.support().clone(), 2);
        let null = HistoryProposition::null(m.support().clone(), 2);
        assert!((lp_value(&m, &unit).unwrap() - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        assert_eq!(lp_value(&m, &null).unwrap(), Complex64::new(0.0, 0.0));
        assert!(bridge_identity_residual(&m, &unit).unwrap() < 1e-12);
    }

    #[test]
    fn negation_complements_and_partitions_sum_to_one() {
        for seed in 0..5 {
            let m = random_instance(2, 3, seed).unwrap();
            let set = exclusive_family_set(&m).unwrap();
            let total: f64 = set.iter().map(|h| lp_probability(&m, h).unwrap()).sum();
            assert!((total - 1.0).abs() < 1e-12);
            for h in &set {
                let a = lp_probability(&m, h).unwrap();
                let b = lp_probability(&m, &negate(h)).unwrap();
                assert!((a + b - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn bridge_identity_on_random_histories() {
        let mut worst: f64 = 0.0;
        for seed in 0..20 {
            let m = random_instance(2, 3, 7 + seed).unwrap();
            for h in exclusive_family_set(&m).unwrap() {
                worst = worst.max(bridge_identity_residual(&m, &h).unwrap());
            }
        }
        assert!(worst <= 1e-10, "{worst}");
    }

    #[test]
    fn single_time_family_is_lp_and_matches_born() {
        let m = random_instance(3, 1, 12).unwrap();
        let set = exclusive_family_set(&m).unwrap();
        let report = is_lp_set(&m, &set).unwrap();
        assert!(report.is_lp);
        assert!(report.order_violations.is_empty());
        assert_eq!(report.entries.len(), 3);
        for (h, e) in set.iter().zip(&report.entries) {
            assert!((probability(&m, h).unwrap() - e.probability).abs() < 1e-12);
        }
    }

    #[test]
    fn incomplete_set_is_completed_with_remainder() {
        let m = random_instance(2, 1, 3).unwrap();
        let set = exclusive_family_set(&m).unwrap();
        let report = is_lp_set(&m, &set[..1]).unwrap();
        assert_eq!(report.entries.len(), 2);
        assert!(report.entries[1].remainder);
        assert!((report.partition_sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn classical_generator_has_no_witness() {
        let g = ModelGenerator::classical(2, 3);
        assert!(find_non_lp(&g, 200, 1).unwrap().is_none());
    }

    #[test]
    fn zero_trials_rejected() {
        let g = ModelGenerator::generic(2, 3);
        assert!(find_non_lp(&g, 0, 1).is_err());
    }

    #[test]
    fn generic_generator_finds_negative_history() {
        let g = ModelGenerator::generic(2, 3);
        let w = find_non_lp(&g, 10_000, 0).unwrap().expect("witness");
        assert!(w.lp_value.re < -1e-9);
        let h = embed_indices(&w.model, &w.history).unwrap();
        assert!((lp_probability(&w.model, &h).unwrap() - w.lp_value.re).abs() < 1e-12);
        let report = is_lp_set(&w.model, &exclusive_family_set(&w.model).unwrap()).unwrap();
        assert!(!report.is_lp);
        let seq = find_non_lp_with(&g, 10_000, 0, Execution::Sequential)
            .unwrap()
            .unwrap();
        assert_eq!(seq.trial, w.trial);
        assert_eq!(seq.history, w.history);
    }
}
