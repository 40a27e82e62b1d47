//! History propositions as projectors on the n-fold tensor space.
//!
//! Tensor factors are stored earliest time first: for digits
//! `(i_1, ..., i_n)` the flat index is `sum_k i_k d^(n-k)`. The class
//! operator map reverses the order so products read latest time leftmost.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::quantum::{Projector, SystemModel, TemporalSupport};

/// One Schrödinger-picture projector per support time.
#[derive(Clone, Debug, PartialEq)]
pub struct HomogeneousHistory {
    support: TemporalSupport,
    slots: Vec<Projector>,
}

impl HomogeneousHistory {
    pub fn new(support: TemporalSupport, slots: Vec<Projector>) -> Result<Self> {
        if slots.len() != support.len() {
            return Err(Error::SupportMismatch(format!(
                "{} slots for {} times",
                slots.len(),
                support.len()
            )));
        }
        if let Some(first) = slots.first() {
            let d = first.dim();
            if let Some(bad) = slots.iter().find(|p| p.dim() != d) {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: bad.dim(),
                });
            }
        }
        Ok(HomogeneousHistory { support, slots })
    }

    /// Slot `k` is member `indices[k]` of the model's family at time `k`.
    pub fn from_indices(model: &SystemModel, indices: &[usize]) -> Result<Self> {
        if indices.len() != model.n_times() {
            return Err(Error::SupportMismatch(format!(
                "{} indices for {} times",
                indices.len(),
                model.n_times()
            )));
        }
        let slots = indices
            .iter()
            .zip(model.families())
            .enumerate()
            .map(|(k, (&i, fam))| {
                fam.members().get(i).cloned().ok_or_else(|| {
                    Error::invalid(
                        "history",
                        format!("family at time index {k} has no member {i}"),
                    )
                })
            })
            .collect::<Result<Vec<_>>>()?;
        HomogeneousHistory::new(model.support().clone(), slots)
    }

    /// History over a sub-support, padded with the identity at every other
    /// time of the model's support.
    pub fn padded(model: &SystemModel, assertions: &[(f64, Projector)]) -> Result<Self> {
        let times = model.support().times();
        let mut slots = vec![Projector::identity(model.dim()); times.len()];
        for (t, p) in assertions {
            let k = times
                .iter()
                .position(|s| (s - t).abs() <= 1e-12 * s.abs().max(1.0))
                .ok_or(Error::NonGridTime(*t))?;
            slots[k] = p.clone();
        }
        HomogeneousHistory::new(model.support().clone(), slots)
    }

    pub fn support(&self) -> &TemporalSupport {
        &self.support
    }

    pub fn slots(&self) -> &[Projector] {
        &self.slots
    }
}

/// A projector on the tensor space, Heisenberg picture slots.
#[derive(Clone, Debug, PartialEq)]
pub struct HistoryProposition {
    support: TemporalSupport,
    dim: usize,
    op: CMatrix,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClassOperator(CMatrix);

impl ClassOperator {
    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }
}

fn tensor_dim(dim: usize, n: usize) -> usize {
    dim.pow(n as u32)
}

fn canonicalize(mut op: CMatrix, tol: f64) -> CMatrix {
    if linalg::norm(&op) <= tol {
        op.fill(Complex64::new(0.0, 0.0));
    }
    op
}

impl HistoryProposition {
    /// Wraps a tensor-space operator after checking it is a projector.
    pub fn from_matrix(
        support: TemporalSupport,
        dim: usize,
        op: CMatrix,
        tol: f64,
    ) -> Result<Self> {
        let n = support.len();
        let big = tensor_dim(dim, n);
        if op.nrows() != big || op.ncols() != big {
            return Err(Error::DimensionMismatch {
                expected: big,
                found: op.nrows(),
            });
        }
        Projector::new(op.clone(), tol)?;
        Ok(HistoryProposition {
            support,
            dim,
            op: canonicalize(op, tol),
        })
    }

    pub fn unit(support: TemporalSupport, dim: usize) -> Self {
        let big = tensor_dim(dim, support.len());
        HistoryProposition {
            support,
            dim,
            op: linalg::identity(big),
        }
    }

    pub fn null(support: TemporalSupport, dim: usize) -> Self {
        let big = tensor_dim(dim, support.len());
        HistoryProposition {
            support,
            dim,
            op: linalg::zeros(big),
        }
    }

    pub fn support(&self) -> &TemporalSupport {
        &self.support
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_times(&self) -> usize {
        self.support.len()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.op
    }

    pub fn is_null(&self) -> bool {
        self.op.iter().all(|z| *z == Complex64::new(0.0, 0.0))
    }

    pub fn approx_eq(&self, other: &HistoryProposition, tol: f64) -> bool {
        self.support.matches(&other.support)
            && self.op.shape() == other.op.shape()
            && linalg::dist(&self.op, &other.op) <= tol
    }

    fn check_same(&self, other: &HistoryProposition) -> Result<()> {
        if !self.support.matches(&other.support) {
            return Err(Error::SupportMismatch(
                "propositions are defined on different temporal supports".into(),
            ));
        }
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        Ok(())
    }
}

pub(crate) fn check_model_support(model: &SystemModel, h: &HistoryProposition) -> Result<()> {
    if !model.support().matches(h.support()) {
        return Err(Error::SupportMismatch(
            "proposition support differs from the model's".into(),
        ));
    }
    if model.dim() != h.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            found: h.dim(),
        });
    }
    Ok(())
}

/// Tensor product of the Heisenberg-picture slots, earliest time first.
pub fn embed(model: &SystemModel, h: &HomogeneousHistory) -> Result<HistoryProposition> {
    if !model.support().matches(h.support()) {
        return Err(Error::SupportMismatch(
            "history support differs from the model's".into(),
        ));
    }
    if let Some(p) = h.slots().first() {
        if p.dim() != model.dim() {
            return Err(Error::DimensionMismatch {
                expected: model.dim(),
                found: p.dim(),
            });
        }
    }
    let mut op = CMatrix::identity(1, 1);
    for (k, slot) in h.slots().iter().enumerate() {
        let factor = model.heisenberg_at(k, slot);
        op = linalg::kron(&op, factor.matrix());
    }
    Ok(HistoryProposition {
        support: model.support().clone(),
        dim: model.dim(),
        op: canonicalize(op, model.tol()),
    })
}

/// Embeds the history whose slot `k` is family member `indices[k]`.
pub fn embed_indices(model: &SystemModel, indices: &[usize]) -> Result<HistoryProposition> {
    embed(model, &HomogeneousHistory::from_indices(model, indices)?)
}

/// Every homogeneous history built from the model's families, in
/// lexicographic order of family indices (earliest time most significant).
pub fn exclusive_family_set(model: &SystemModel) -> Result<Vec<HistoryProposition>> {
    family_index_tuples(model)
        .iter()
        .map(|idx| embed_indices(model, idx))
        .collect()
}

pub fn family_index_tuples(model: &SystemModel) -> Vec<Vec<usize>> {
    let sizes: Vec<usize> = model.families().iter().map(|f| f.len()).collect();
    let mut out = vec![Vec::new()];
    for s in sizes {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (0..s).map(move |i| {
                    let mut p = prefix.clone();
                    p.push(i);
                    p
                })
            })
            .collect();
    }
    out
}

pub fn negate(h: &HistoryProposition) -> HistoryProposition {
    let big = h.op.nrows();
    HistoryProposition {
        support: h.support.clone(),
        dim: h.dim,
        op: linalg::identity(big) - &h.op,
    }
}

fn require_commuting(a: &HistoryProposition, b: &HistoryProposition, tol: f64) -> Result<()> {
    a.check_same(b)?;
    let c = linalg::commutator_norm(&a.op, &b.op);
    if c > tol {
        return Err(Error::NonCommuting(c));
    }
    Ok(())
}

fn hermitian_part(m: CMatrix) -> CMatrix {
    let adj = m.adjoint();
    (m + adj) * Complex64::new(0.5, 0.0)
}

/// Conjunction of commuting propositions.
pub fn conj(
    a: &HistoryProposition,
    b: &HistoryProposition,
    tol: f64,
) -> Result<HistoryProposition> {
    require_commuting(a, b, tol)?;
    let op = hermitian_part(&a.op * &b.op);
    Ok(HistoryProposition {
        support: a.support.clone(),
        dim: a.dim,
        op: canonicalize(op, tol),
    })
}

/// Disjunction of commuting propositions.
pub fn disj(
    a: &HistoryProposition,
    b: &HistoryProposition,
    tol: f64,
) -> Result<HistoryProposition> {
    require_commuting(a, b, tol)?;
    let prod = hermitian_part(&a.op * &b.op);
    let op = &a.op + &b.op - prod;
    Ok(HistoryProposition {
        support: a.support.clone(),
        dim: a.dim,
        op: canonicalize(op, tol),
    })
}

pub fn disjoint(a: &HistoryProposition, b: &HistoryProposition, tol: f64) -> Result<bool> {
    a.check_same(b)?;
    Ok(linalg::norm(&(&a.op * &b.op)) <= tol)
}

/// Projector partial order `a <= b`.
pub fn leq(a: &HistoryProposition, b: &HistoryProposition, tol: f64) -> Result<bool> {
    a.check_same(b)?;
    Ok(linalg::dist(&(&a.op * &b.op), &a.op) <= tol)
}

/// Linear map sending `A_1 ⊗ ... ⊗ A_n` to `A_n ··· A_1`, applied to any
/// tensor-space operator.
pub fn class_map(op: &CMatrix, dim: usize, n: usize) -> CMatrix {
    // With I the base-d number formed by the middle digits,
    // L(M)[a, b] = sum_I M[I*d + a, b*d^(n-1) + I].
    let inner = tensor_dim(dim, n - 1);
    CMatrix::from_fn(dim, dim, |a, b| {
        (0..inner).map(|i| op[(i * dim + a, b * inner + i)]).sum()
    })
}

pub fn class_operator(model: &SystemModel, h: &HistoryProposition) -> Result<ClassOperator> {
    check_model_support(model, h)?;
    Ok(ClassOperator(class_map(&h.op, h.dim, h.n_times())))
}

/// Class operator of a homogeneous history as the direct time-ordered
/// product of Heisenberg slots.
pub fn homogeneous_class_operator(
    model: &SystemModel,
    h: &HomogeneousHistory,
) -> Result<ClassOperator> {
    if !model.support().matches(h.support()) {
        return Err(Error::SupportMismatch(
            "history support differs from the model's".into(),
        ));
    }
    let mut c = linalg::identity(model.dim());
    for (k, slot) in h.slots().iter().enumerate() {
        c = model.heisenberg_matrix_at(k, slot.matrix()) * c;
    }
    Ok(ClassOperator(c))
}
