//! Seeded random searches for consistency violations.
//!
//! Models are drawn per trial from independent derived seeds, so a search is
//! deterministic in its seed and independent of the degree of parallelism.
//! Sizes escalate from two dimensions and two times up to the configured
//! maxima, smallest tensor space first; the trial budget is shared evenly.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::hpo::{self, HomogeneousHistory};
use crate::linalg;
use crate::lp::ModelGenerator;
use crate::random::RandomOptions;
use crate::scenario::{
    model_to_file, Analysis, HistorySpec, ScenarioFile, SearchKind, SetSpec, Slot,
};

pub const DEFAULT_BUDGET: usize = 10_000;
/// Minimum spread of realisability sums reported as a non-quasi witness.
pub const NON_QUASI_SPREAD: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SearchConfig {
    pub kind: SearchKind,
    pub budget: usize,
    pub seed: u64,
    pub options: RandomOptions,
    pub max_dim: usize,
    pub max_times: usize,
}

impl SearchConfig {
    pub fn new(kind: SearchKind, budget: usize, seed: u64) -> Self {
        SearchConfig {
            kind,
            budget,
            seed,
            options: RandomOptions::default(),
            max_dim: 4,
            max_times: 4,
        }
    }
}

/// `(dimension, times)` pairs from `(2, 2)` up, ordered by tensor-space size.
pub fn stages(max_dim: usize, max_times: usize) -> Vec<(usize, usize)> {
    let mut out: Vec<(usize, usize)> = (2..=max_dim)
        .flat_map(|d| (2..=max_times).map(move |n| (d, n)))
        .collect();
    out.sort_by_key(|&(d, n)| (d.pow(n as u32), n));
    out
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SearchWitness {
    pub kind: SearchKind,
    pub dimension: usize,
    pub times: usize,
    pub trial: usize,
    pub instance_seed: u64,
    pub trials_spent: usize,
    /// Family member indices of each witness history.
    pub histories: Vec<Vec<usize>>,
    /// LP value, realisability spread, or order-violation gap.
    pub measure: f64,
    #[serde(skip)]
    pub scenario: ScenarioFile,
}

/// Machine-readable search result with its reproduction file.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SearchOutcome {
    pub kind: SearchKind,
    pub budget: usize,
    pub seed: u64,
    pub witness: Option<SearchWitness>,
    pub reproduction: Option<ScenarioFile>,
}

impl SearchOutcome {
    pub fn new(kind: SearchKind, budget: usize, seed: u64, witness: Option<SearchWitness>) -> Self {
        let reproduction = witness.as_ref().map(|w| w.scenario.clone());
        SearchOutcome {
            kind,
            budget,
            seed,
            witness,
            reproduction,
        }
    }

    pub fn to_machine(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("search outcome serializes");
        s.push('\n');
        s
    }
}

struct Hit {
    histories: Vec<Vec<usize>>,
    measure: f64,
}

/// Scan of one model through homogeneous class operators.
fn scan(kind: SearchKind, model: &crate::quantum::SystemModel) -> Option<Hit> {
    let tol = model.tol();
    let rho = model.rho().matrix();
    let tuples = hpo::family_index_tuples(model);
    let mut lp = Vec::with_capacity(tuples.len());
    let mut diag = Vec::with_capacity(tuples.len());
    for idx in &tuples {
        let h = HomogeneousHistory::from_indices(model, idx).ok()?;
        let c = hpo::homogeneous_class_operator(model, &h).ok()?;
        let v: Complex64 = linalg::trace_of_product(c.matrix(), rho);
        if kind == SearchKind::NonLp && v.re < -10.0 * tol {
            return Some(Hit {
                histories: vec![idx.clone()],
                measure: v.re,
            });
        }
        lp.push(v.re);
        diag.push(crate::decoherence::dfunc_class(rho, c.matrix(), c.matrix()).re);
    }
    let sums: Vec<f64> = lp
        .iter()
        .zip(&diag)
        .map(|(l, d)| 1.0 + 2.0 * (d - l))
        .collect();
    match kind {
        SearchKind::NonLp => None,
        SearchKind::NonQuasi => {
            let (lo, hi) = sums.iter().enumerate().fold((0, 0), |(lo, hi), (i, s)| {
                (
                    if *s < sums[lo] { i } else { lo },
                    if *s > sums[hi] { i } else { hi },
                )
            });
            let spread = sums[hi] - sums[lo];
            (spread > NON_QUASI_SPREAD).then(|| {
                let (a, b) = (lo.min(hi), lo.max(hi));
                Hit {
                    histories: vec![tuples[a].clone(), tuples[b].clone()],
                    measure: spread,
                }
            })
        }
        SearchKind::OrderViolation => {
            for i in 0..tuples.len() {
                for j in 0..tuples.len() {
                    // distinct family histories are disjoint, so a_i <= not a_j
                    let gap = diag[i] - (sums[j] - diag[j]);
                    if i != j && gap > 10.0 * tol {
                        return Some(Hit {
                            histories: vec![tuples[i].clone(), tuples[j].clone()],
                            measure: gap,
                        });
                    }
                }
            }
            None
        }
    }
}

pub fn search_violations(
    kind: SearchKind,
    budget: usize,
    seed: u64,
) -> Result<Option<SearchWitness>> {
    search_violations_with(&SearchConfig::new(kind, budget, seed), Execution::default())
}

pub fn search_violations_with(
    config: &SearchConfig,
    exec: Execution,
) -> Result<Option<SearchWitness>> {
    if config.budget == 0 {
        return Err(Error::invalid("search", "budget must be at least 1"));
    }
    let plan = stages(config.max_dim, config.max_times);
    if plan.is_empty() {
        return Err(Error::invalid(
            "search",
            "maximum dimension and times must be at least 2",
        ));
    }
    let share = config.budget / plan.len();
    let extra = config.budget % plan.len();
    let mut spent = 0;
    for (s, &(dim, n)) in plan.iter().enumerate() {
        let trials = share + usize::from(s < extra);
        if trials == 0 {
            continue;
        }
        let generator = ModelGenerator {
            dim,
            n_times: n,
            options: config.options,
        };
        let found = exec.find_first(trials, |trial| {
            let instance_seed = generator.trial_seed(config.seed, trial);
            let model = generator.generate(instance_seed).ok()?;
            scan(config.kind, &model).map(|hit| (trial, instance_seed, model, hit))
        });
        if let Some((trial, instance_seed, model, hit)) = found {
            let scenario = reproduction(config, &model, &hit, trial, instance_seed);
            return Ok(Some(SearchWitness {
                kind: config.kind,
                dimension: dim,
                times: n,
                trial,
                instance_seed,
                trials_spent: spent + trial + 1,
                histories: hit.histories,
                measure: hit.measure,
                scenario,
            }));
        }
        spent += trials;
    }
    Ok(None)
}

fn reproduction(
    config: &SearchConfig,
    model: &crate::quantum::SystemModel,
    hit: &Hit,
    trial: usize,
    instance_seed: u64,
) -> ScenarioFile {
    let mut file = model_to_file(model);
    let names: Vec<String> = (0..hit.histories.len()).map(|i| format!("h{i}")).collect();
    file.name = Some(format!("{}-witness", config.kind));
    file.notes = vec![format!(
        "{} witness from search seed {}, trial {trial}, instance seed {instance_seed}, dimension {}, {} times",
        config.kind,
        config.seed,
        model.dim(),
        model.n_times()
    )];
    file.seed = config.seed;
    file.histories = names
        .iter()
        .zip(&hit.histories)
        .map(|(name, idx)| HistorySpec {
            name: name.clone(),
            slots: Some(idx.iter().map(|&i| Slot::Member(i)).collect()),
            matrix: None,
        })
        .collect();
    let set = SetSpec::Named(names);
    file.analyses = vec![match config.kind {
        SearchKind::NonLp => Analysis::Lp { set },
        SearchKind::NonQuasi | SearchKind::OrderViolation => Analysis::Classify { set },
    }];
    file
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decoherence::{classify, ConsistencyMode};
    use crate::lp::is_lp_set;

    #[test]
    fn stage_order() {
        assert_eq!(stages(3, 3), vec![(2, 2), (2, 3), (3, 2), (3, 3)]);
        assert_eq!(stages(4, 4).len(), 9);
        assert_eq!(*stages(4, 4).last().unwrap(), (4, 4));
    }

    #[test]
    fn zero_budget_rejected() {
        assert!(search_violations(SearchKind::NonLp, 0, 0).is_err());
    }

    #[test]
    fn classical_models_preserve_order() {
        let mut cfg = SearchConfig::new(SearchKind::OrderViolation, 90, 3);
        cfg.options = RandomOptions::classical();
        assert!(search_violations_with(&cfg, Execution::default())
            .unwrap()
            .is_none());
        cfg.kind = SearchKind::NonQuasi;
        assert!(search_violations_with(&cfg, Execution::default())
            .unwrap()
            .is_none());
        cfg.kind = SearchKind::NonLp;
        assert!(search_violations_with(&cfg, Execution::default())
            .unwrap()
            .is_none());
    }

    #[test]
    fn non_quasi_witness_reproduces() {
        let w = search_violations(SearchKind::NonQuasi, 2000, 0)
            .unwrap()
            .expect("witness");
        assert!(w.measure > NON_QUASI_SPREAD);
        let s = ScenarioFile::from_json(&w.scenario.to_json())
            .unwrap()
            .build()
            .unwrap();
        let set: Vec<_> = s.histories.iter().map(|(_, h)| h.clone()).collect();
        let v = classify(&s.model, &set, ConsistencyMode::Strong).unwrap();
        assert!(v.quasi_constant_k.is_none());
        assert!((v.realisability_spread - w.measure).abs() < 1e-12);
    }

    #[test]
    fn non_lp_witness_reproduces() {
        let w = search_violations(SearchKind::NonLp, 2000, 1)
            .unwrap()
            .expect("witness");
        let s = ScenarioFile::from_json(&w.scenario.to_json())
            .unwrap()
            .build()
            .unwrap();
        let r = is_lp_set(&s.model, &[s.histories[0].1.clone()]).unwrap();
        assert!(!r.is_lp);
        assert!((r.entries[0].probability - w.measure).abs() < 1e-12);
    }

    #[test]
    fn sequential_and_parallel_agree() {
        let cfg = SearchConfig::new(SearchKind::OrderViolation, 900, 5);
        let a = search_violations_with(&cfg, Execution::Sequential).unwrap();
        let b = search_violations_with(&cfg, Execution::Parallel).unwrap();
        assert_eq!(a, b);
    }
}
