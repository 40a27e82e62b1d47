//! States, projectors, dynamics and the validated system model.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};

/// Absolute tolerance applied to operator residuals unless overridden.
pub const DEFAULT_TOLERANCE: f64 = 1e-10;

/// Two grid times closer than this (relative) are the same grid point.
const TIME_MATCH: f64 = 1e-12;

fn check_square(m: &CMatrix, what: &'static str) -> Result<()> {
    if m.nrows() != m.ncols() || m.nrows() == 0 {
        return Err(Error::invalid(
            what,
            format!(
                "expected a non-empty square matrix, got {}x{}",
                m.nrows(),
                m.ncols()
            ),
        ));
    }
    if !linalg::is_finite(m) {
        return Err(Error::invalid(what, "entries must be finite"));
    }
    Ok(())
}

fn check_dim(m: &CMatrix, dim: usize) -> Result<()> {
    if m.nrows() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: m.nrows(),
        });
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix(CMatrix);

impl DensityMatrix {
    pub fn new(m: CMatrix, tol: f64) -> Result<Self> {
        check_square(&m, "density matrix")?;
        let herm = linalg::hermiticity_residual(&m);
        if herm > tol {
            return Err(Error::invalid(
                "density matrix",
                format!("not Hermitian (residual {herm:.3e})"),
            ));
        }
        let tr = linalg::trace(&m);
        if (tr - Complex64::new(1.0, 0.0)).norm() > tol {
            return Err(Error::invalid(
                "density matrix",
                format!("trace is {} rather than 1", tr.re),
            ));
        }
        let min = linalg::min_eigenvalue(&m);
        if min < -tol {
            return Err(Error::invalid(
                "density matrix",
                format!("negative eigenvalue {min:.3e}"),
            ));
        }
        Ok(DensityMatrix(m))
    }

    /// Pure state `|psi><psi|`; the vector is normalized first.
    pub fn pure(psi: &[Complex64]) -> Result<Self> {
        let n2: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        if psi.is_empty() || !n2.is_finite() || n2 <= 0.0 {
            return Err(Error::invalid(
                "pure state",
                "vector must be non-zero and finite",
            ));
        }
        let scale = 1.0 / n2.sqrt();
        let v: Vec<Complex64> = psi.iter().map(|z| z * scale).collect();
        Ok(DensityMatrix(linalg::outer(&v)))
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Projector(CMatrix);

impl Projector {
    pub fn new(m: CMatrix, tol: f64) -> Result<Self> {
        check_square(&m, "projector")?;
        let herm = linalg::hermiticity_residual(&m);
        if herm > tol {
            return Err(Error::invalid(
                "projector",
                format!("not Hermitian (residual {herm:.3e})"),
            ));
        }
        let idem = linalg::dist(&(&m * &m), &m);
        if idem > tol {
            return Err(Error::invalid(
                "projector",
                format!("not idempotent (residual {idem:.3e})"),
            ));
        }
        Ok(Projector(m))
    }

    pub fn identity(dim: usize) -> Self {
        Projector(linalg::identity(dim))
    }

    pub fn zero(dim: usize) -> Self {
        Projector(linalg::zeros(dim))
    }

    /// `|k><k|` in the computational basis.
    pub fn basis(dim: usize, k: usize) -> Self {
        Projector(linalg::basis_projector(dim, k))
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn rank(&self, tol: f64) -> usize {
        linalg::hermitian_rank(&self.0, tol.max(1e-8))
    }

    pub(crate) fn from_matrix_unchecked(m: CMatrix) -> Self {
        Projector(m)
    }
}

/// Orthogonal resolution of the identity at one time.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjectorFamily(Vec<Projector>);

impl ProjectorFamily {
    pub fn new(members: Vec<Projector>, tol: f64) -> Result<Self> {
        let first = members.first().ok_or(Error::EmptySet)?;
        let dim = first.dim();
        for p in &members {
            check_dim(p.matrix(), dim)?;
        }
        for (i, a) in members.iter().enumerate() {
            for b in members.iter().skip(i + 1) {
                let overlap = linalg::norm(&(a.matrix() * b.matrix()));
                if overlap > tol {
                    return Err(Error::invalid(
                        "projector family",
                        format!("members are not orthogonal (overlap {overlap:.3e})"),
                    ));
                }
            }
        }
        let mut sum = linalg::zeros(dim);
        for p in &members {
            sum += p.matrix();
        }
        let completeness = linalg::dist(&sum, &linalg::identity(dim));
        if completeness > tol {
            return Err(Error::invalid(
                "projector family",
                format!("members do not sum to the identity (residual {completeness:.3e})"),
            ));
        }
        Ok(ProjectorFamily(members))
    }

    /// The rank-1 computational basis family.
    pub fn computational(dim: usize) -> Self {
        ProjectorFamily((0..dim).map(|k| Projector::basis(dim, k)).collect())
    }

    pub fn members(&self) -> &[Projector] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.0[0].dim()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum EvolutionLaw {
    /// Time-independent Hamiltonian, units with hbar = 1.
    Hamiltonian(CMatrix),
    /// One unitary per interval: fiducial time to the first time, then
    /// between consecutive times.
    Segments(Vec<CMatrix>),
}

impl EvolutionLaw {
    pub fn identity(dim: usize, n_times: usize) -> Self {
        EvolutionLaw::Segments(vec![linalg::identity(dim); n_times])
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TemporalSupport {
    t0: f64,
    times: Vec<f64>,
}

impl TemporalSupport {
    pub fn new(t0: f64, times: Vec<f64>) -> Result<Self> {
        if times.is_empty() {
            return Err(Error::invalid(
                "temporal support",
                "at least one time is required",
            ));
        }
        if !t0.is_finite() || times.iter().any(|t| !t.is_finite()) {
            return Err(Error::invalid("temporal support", "times must be finite"));
        }
        if times[0] < t0 {
            return Err(Error::invalid(
                "temporal support",
                "the first time precedes the fiducial time",
            ));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid(
                "temporal support",
                "times must be strictly increasing",
            ));
        }
        Ok(TemporalSupport { t0, times })
    }

    /// `t0 = 0` and times `1, 2, ..., n`.
    pub fn unit_grid(n: usize) -> Self {
        TemporalSupport {
            t0: 0.0,
            times: (1..=n).map(|k| k as f64).collect(),
        }
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    fn same_time(a: f64, b: f64) -> bool {
        (a - b).abs() <= TIME_MATCH * a.abs().max(b.abs()).max(1.0)
    }

    /// Grid position of `t`: 0 is the fiducial time, `k + 1` is `times[k]`.
    /// When the first time coincides with `t0`, `earliest` picks which of the
    /// two positions is returned.
    fn grid_index(&self, t: f64, earliest: bool) -> Result<usize> {
        let grid = std::iter::once(self.t0).chain(self.times.iter().copied());
        let hits: Vec<usize> = grid
            .enumerate()
            .filter(|(_, g)| Self::same_time(*g, t))
            .map(|(i, _)| i)
            .collect();
        match (hits.first(), hits.last()) {
            (Some(first), Some(last)) => Ok(if earliest { *first } else { *last }),
            _ => Err(Error::NonGridTime(t)),
        }
    }

    fn grid_time(&self, index: usize) -> f64 {
        if index == 0 {
            self.t0
        } else {
            self.times[index - 1]
        }
    }

    pub fn matches(&self, other: &TemporalSupport) -> bool {
        self.times.len() == other.times.len()
            && Self::same_time(self.t0, other.t0)
            && self
                .times
                .iter()
                .zip(&other.times)
                .all(|(a, b)| Self::same_time(*a, *b))
    }
}

/// Hilbert space, grid, dynamics, initial state and one projector family per
/// time. Immutable once built.
#[derive(Clone, Debug)]
pub struct SystemModel {
    dim: usize,
    support: TemporalSupport,
    evolution: EvolutionLaw,
    rho: DensityMatrix,
    families: Vec<ProjectorFamily>,
    tol: f64,
    /// `U(t_k - t0)` for every support time.
    fiducial_propagators: Vec<CMatrix>,
}

impl SystemModel {
    pub fn new(
        support: TemporalSupport,
        evolution: EvolutionLaw,
        rho: DensityMatrix,
        families: Vec<ProjectorFamily>,
        tol: f64,
    ) -> Result<Self> {
        if !(tol.is_finite() && tol > 0.0) {
            return Err(Error::invalid(
                "tolerance",
                format!("{tol} is not a positive number"),
            ));
        }
        let dim = rho.dim();
        if families.len() != support.len() {
            return Err(Error::invalid(
                "families",
                format!(
                    "{} families for {} support times",
                    families.len(),
                    support.len()
                ),
            ));
        }
        for f in &families {
            if f.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: f.dim(),
                });
            }
        }
        match &evolution {
            EvolutionLaw::Hamiltonian(h) => {
                check_square(h, "hamiltonian")?;
                check_dim(h, dim)?;
                let r = linalg::hermiticity_residual(h);
                if r > tol {
                    return Err(Error::invalid(
                        "hamiltonian",
                        format!("not Hermitian (residual {r:.3e})"),
                    ));
                }
            }
            EvolutionLaw::Segments(segments) => {
                if segments.len() != support.len() {
                    return Err(Error::invalid(
                        "evolution",
                        format!(
                            "{} segments for {} support times",
                            segments.len(),
                            support.len()
                        ),
                    ));
                }
                if support.times[0] <= support.t0 {
                    return Err(Error::invalid(
                        "evolution",
                        "segment evolution needs the first time strictly after the fiducial time",
                    ));
                }
                for (k, u) in segments.iter().enumerate() {
                    check_square(u, "unitary")?;
                    check_dim(u, dim)?;
                    let r = linalg::unitarity_residual(u);
                    if r > tol {
                        return Err(Error::invalid(
                            "unitary",
                            format!("segment {k} is not unitary (residual {r:.3e})"),
                        ));
                    }
                }
            }
        }
        let mut model = SystemModel {
            dim,
            support,
            evolution,
            rho,
            families,
            tol,
            fiducial_propagators: Vec::new(),
        };
        model.fiducial_propagators = (1..=model.support.len())
            .map(|k| model.propagate_indices(0, k))
            .collect();
        Ok(model)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_times(&self) -> usize {
        self.support.len()
    }

    pub fn support(&self) -> &TemporalSupport {
        &self.support
    }

    pub fn evolution(&self) -> &EvolutionLaw {
        &self.evolution
    }

    pub fn rho(&self) -> &DensityMatrix {
        &self.rho
    }

    pub fn families(&self) -> &[ProjectorFamily] {
        &self.families
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    /// Same model with a different tolerance.
    pub fn with_tolerance(&self, tol: f64) -> Result<Self> {
        SystemModel::new(
            self.support.clone(),
            self.evolution.clone(),
            self.rho.clone(),
            self.families.clone(),
            tol,
        )
    }

    fn propagate_indices(&self, from: usize, to: usize) -> CMatrix {
        if from == to {
            return linalg::identity(self.dim);
        }
        match &self.evolution {
            EvolutionLaw::Hamiltonian(h) => {
                let dt = self.support.grid_time(to) - self.support.grid_time(from);
                linalg::unitary_from_hamiltonian(h, dt)
            }
            EvolutionLaw::Segments(segments) => segments[from..to]
                .iter()
                .fold(linalg::identity(self.dim), |acc, s| s * acc),
        }
    }

    /// Unitary evolving the system from grid time `from` to grid time `to`.
    pub fn propagator(&self, from: f64, to: f64) -> Result<CMatrix> {
        let i = self.support.grid_index(from, true)?;
        let j = self.support.grid_index(to, false)?;
        if from > to && !TemporalSupport::same_time(from, to) {
            return Err(Error::ReversedInterval { from, to });
        }
        if TemporalSupport::same_time(from, to) {
            return Ok(linalg::identity(self.dim));
        }
        Ok(self.propagate_indices(i, j))
    }

    /// Heisenberg-picture projector `U^dag(t - t0) p U(t - t0)`.
    pub fn heisenberg(&self, p: &Projector, t: f64) -> Result<Projector> {
        check_dim(p.matrix(), self.dim)?;
        let j = self.support.grid_index(t, false)?;
        if j == 0 {
            return Ok(p.clone());
        }
        Ok(self.heisenberg_at(j - 1, p))
    }

    /// Heisenberg picture at support index `k` (0-based over `times`).
    pub(crate) fn heisenberg_at(&self, k: usize, p: &Projector) -> Projector {
        let u = &self.fiducial_propagators[k];
        Projector::from_matrix_unchecked(u.adjoint() * p.matrix() * u)
    }

    pub(crate) fn heisenberg_matrix_at(&self, k: usize, m: &CMatrix) -> CMatrix {
        let u = &self.fiducial_propagators[k];
        u.adjoint() * m * u
    }
}
