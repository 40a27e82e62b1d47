//! Decoherence functional and the consistency hierarchy.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::hpo::{self, HistoryProposition};
use crate::linalg::{self, CMatrix};
use crate::quantum::SystemModel;

/// `tr(C_a rho C_b^dag)` on class operators.
pub fn dfunc_class(rho: &CMatrix, ca: &CMatrix, cb: &CMatrix) -> Complex64 {
    linalg::trace_of_product(&(ca * rho), &cb.adjoint())
}

pub fn dfunc(
    model: &SystemModel,
    a: &HistoryProposition,
    b: &HistoryProposition,
) -> Result<Complex64> {
    let ca = hpo::class_operator(model, a)?;
    let cb = hpo::class_operator(model, b)?;
    Ok(dfunc_class(model.rho().matrix(), ca.matrix(), cb.matrix()))
}

/// Diagonal value with tiny negatives clamped; a larger negative value
/// cannot come from a positive state and is reported as an error.
pub(crate) fn clamp_probability(value: f64, tol: f64) -> Result<f64> {
    if value < -tol {
        return Err(Error::Inconsistent(format!(
            "diagonal decoherence value {value:.3e} is negative"
        )));
    }
    Ok(value.max(0.0))
}

pub fn probability(model: &SystemModel, a: &HistoryProposition) -> Result<f64> {
    let d = dfunc(model, a, a)?;
    clamp_probability(d.re, model.tol())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConsistencyMode {
    /// Off-diagonal entries vanish.
    #[default]
    Strong,
    /// Only the real parts of off-diagonal entries vanish.
    Medium,
}

#[derive(Clone, Debug)]
pub struct DecoherenceMatrix {
    entries: CMatrix,
}

impl DecoherenceMatrix {
    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.nrows() == 0
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.entries[(i, j)]
    }

    pub fn hermiticity_residual(&self) -> f64 {
        let n = self.len();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                worst = worst.max((self.entries[(i, j)] - self.entries[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn min_eigenvalue(&self) -> f64 {
        linalg::min_eigenvalue(&self.entries)
    }

    pub fn total(&self) -> Complex64 {
        self.entries.iter().sum()
    }

    pub fn max_offdiag(&self, mode: ConsistencyMode) -> f64 {
        let n = self.len();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let z = self.entries[(i, j)];
                let v = match mode {
                    ConsistencyMode::Strong => z.norm(),
                    ConsistencyMode::Medium => z.re.abs(),
                };
                worst = worst.max(v);
            }
        }
        worst
    }
}

fn check_uniform(model: &SystemModel, set: &[HistoryProposition]) -> Result<()> {
    if set.is_empty() {
        return Err(Error::EmptySet);
    }
    for h in set {
        hpo::check_model_support(model, h)?;
    }
    Ok(())
}

pub(crate) fn class_operators(
    model: &SystemModel,
    set: &[HistoryProposition],
) -> Result<Vec<CMatrix>> {
    set.iter()
        .map(|h| hpo::class_operator(model, h).map(|c| c.into_matrix()))
        .collect()
}

pub fn decoherence_matrix(
    model: &SystemModel,
    set: &[HistoryProposition],
) -> Result<DecoherenceMatrix> {
    decoherence_matrix_with(model, set, Execution::default())
}

pub fn decoherence_matrix_with(
    model: &SystemModel,
    set: &[HistoryProposition],
    exec: Execution,
) -> Result<DecoherenceMatrix> {
    check_uniform(model, set)?;
    let cs = class_operators(model, set)?;
    let rho = model.rho().matrix();
    let n = cs.len();
    let left: Vec<CMatrix> = cs.iter().map(|c| c * rho).collect();
    let rows = exec.map_range(n, |i| {
        (0..n)
            .map(|j| linalg::trace_of_product(&left[i], &cs[j].adjoint()))
            .collect::<Vec<_>>()
    });
    let entries = CMatrix::from_fn(n, n, |i, j| rows[i][j]);
    Ok(DecoherenceMatrix { entries })
}

/// Whether the propositions sum to the tensor identity.
pub fn is_complete(set: &[HistoryProposition], tol: f64) -> bool {
    let Some(first) = set.first() else {
        return false;
    };
    let big = first.matrix().nrows();
    let mut sum = linalg::zeros(big);
    for h in set {
        if h.matrix().nrows() != big {
            return false;
        }
        sum += h.matrix();
    }
    linalg::dist(&sum, &linalg::identity(big)) <= tol
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConsistencyVerdict {
    pub mode: ConsistencyMode,
    pub is_consistent: bool,
    pub max_offdiag: f64,
    pub is_complete: bool,
    /// `d(a, a)` per member.
    pub probabilities: Vec<f64>,
    /// `d(a, a) + d(not a, not a)` per member.
    pub realisability: Vec<f64>,
    pub realisability_spread: f64,
    /// Common value of the realisability sums, when they agree.
    pub quasi_constant_k: Option<f64>,
    /// Pairs `(i, j)` with `a_i <= not a_j` but `d(a_i) > d(not a_j)`.
    pub order_violations: Vec<(usize, usize)>,
}

impl ConsistencyVerdict {
    pub fn is_realisable(&self, tol: f64) -> bool {
        self.realisability.iter().all(|s| (s - 1.0).abs() <= tol)
    }

    pub fn is_quasi_realisable(&self) -> bool {
        self.quasi_constant_k.is_some()
    }
}

/// Realisability sums and negation probabilities for each member.
pub(crate) fn realisability_data(
    model: &SystemModel,
    set: &[HistoryProposition],
) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut probs = Vec::with_capacity(set.len());
    let mut neg_probs = Vec::with_capacity(set.len());
    for h in set {
        probs.push(probability(model, h)?);
        neg_probs.push(probability(model, &hpo::negate(h))?);
    }
    Ok((probs, neg_probs))
}

pub fn classify(
    model: &SystemModel,
    set: &[HistoryProposition],
    mode: ConsistencyMode,
) -> Result<ConsistencyVerdict> {
    check_uniform(model, set)?;
    let tol = model.tol();
    let dm = decoherence_matrix(model, set)?;
    let max_offdiag = dm.max_offdiag(mode);
    let (probs, neg_probs) = realisability_data(model, set)?;
    let sums: Vec<f64> = probs.iter().zip(&neg_probs).map(|(p, q)| p + q).collect();
    let lo = sums.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = sums.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let spread = hi - lo;
    let quasi_constant_k = if spread <= tol && lo > tol {
        Some(sums.iter().sum::<f64>() / sums.len() as f64)
    } else {
        None
    };
    let mut order_violations = Vec::new();
    for i in 0..set.len() {
        for j in 0..set.len() {
            if i == j {
                continue;
            }
            let not_j = hpo::negate(&set[j]);
            if hpo::leq(&set[i], &not_j, tol)? && probs[i] > neg_probs[j] + tol {
                order_violations.push((i, j));
            }
        }
    }
    Ok(ConsistencyVerdict {
        mode,
        is_consistent: max_offdiag <= tol,
        max_offdiag,
        is_complete: is_complete(set, tol),
        probabilities: probs,
        realisability: sums,
        realisability_spread: spread,
        quasi_constant_k,
        order_violations,
    })
}

fn position(set: &[HistoryProposition], h: &HistoryProposition, tol: f64) -> Option<usize> {
    set.iter().position(|x| x.approx_eq(h, tol))
}

/// Closure of `generators` (plus 0 and 1) under negation, conjunction and
/// disjunction. Fails if two elements do not commute or the closure exceeds
/// `limit` elements.
pub fn boolean_closure(
    generators: &[HistoryProposition],
    tol: f64,
    limit: usize,
) -> Result<Vec<HistoryProposition>> {
    let first = generators.first().ok_or(Error::EmptySet)?;
    let support = first.support().clone();
    let dim = first.dim();
    let mut out = vec![
        HistoryProposition::null(support.clone(), dim),
        HistoryProposition::unit(support, dim),
    ];
    let push = |out: &mut Vec<HistoryProposition>, h: HistoryProposition| -> Result<bool> {
        if position(out, &h, tol).is_some() {
            return Ok(false);
        }
        if out.len() >= limit {
            return Err(Error::NotBooleanClosed(format!(
                "closure exceeds {limit} elements"
            )));
        }
        out.push(h);
        Ok(true)
    };
    for g in generators {
        push(&mut out, g.clone())?;
    }
    loop {
        let mut grew = false;
        let snapshot = out.clone();
        for a in &snapshot {
            grew |= push(&mut out, hpo::negate(a))?;
            for b in &snapshot {
                let ab = hpo::conj(a, b, tol)
                    .map_err(|_| Error::NotBooleanClosed("generators do not commute".into()))?;
                grew |= push(&mut out, ab)?;
                grew |= push(&mut out, hpo::disj(a, b, tol)?)?;
            }
        }
        if !grew {
            return Ok(out);
        }
    }
}

/// `d(a ∧ b, a ∧ b) = d(a, b)` for every pair of a conjunction-closed,
/// commuting set.
pub fn boolean_consistent(model: &SystemModel, w: &[HistoryProposition]) -> Result<bool> {
    check_uniform(model, w)?;
    let tol = model.tol();
    let cs = class_operators(model, w)?;
    let rho = model.rho().matrix();
    for (i, a) in w.iter().enumerate() {
        for (j, b) in w.iter().enumerate().skip(i) {
            let ab = hpo::conj(a, b, tol).map_err(|e| match e {
                Error::NonCommuting(c) => Error::NotBooleanClosed(format!(
                    "members {i} and {j} do not commute (commutator {c:.3e})"
                )),
                other => other,
            })?;
            if position(w, &ab, tol.max(1e-9)).is_none() {
                return Err(Error::NotBooleanClosed(format!(
                    "conjunction of members {i} and {j} is not in the set"
                )));
            }
            let lhs = dfunc(model, &ab, &ab)?;
            let rhs = dfunc_class(rho, &cs[i], &cs[j]);
            if (lhs - rhs).norm() > tol {
                return Ok(false);
            }
        }
    }
    Ok(true)
}
