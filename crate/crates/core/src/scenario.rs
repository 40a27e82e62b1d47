//! Declarative scenario files.
//!
//! A scenario is a JSON document describing a system model, named
//! histories and an ordered list of analyses. Complex numbers are `[re, im]`
//! pairs (a bare number is read as a real value), matrices are row-major
//! nested arrays, and `"version": 1` is mandatory.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bayes::{Assignment, Source};
use crate::decoherence::ConsistencyMode;
use crate::error::Error;
use crate::hpo::{self, HistoryProposition, HomogeneousHistory};
use crate::linalg::CMatrix;
use crate::quantum::{
    DensityMatrix, EvolutionLaw, Projector, ProjectorFamily, SystemModel, TemporalSupport,
    DEFAULT_TOLERANCE,
};

pub const SCENARIO_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Complex(pub Complex64);

impl Serialize for Complex {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        [self.0.re, self.0.im].serialize(s)
    }
}

impl<'de> Deserialize<'de> for Complex {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Pair([f64; 2]),
            Real(f64),
        }
        match Raw::deserialize(d).map_err(|_| {
            serde::de::Error::custom("expected a complex number as [re, im] or a real number")
        })? {
            Raw::Pair([re, im]) => Ok(Complex(Complex64::new(re, im))),
            Raw::Real(re) => Ok(Complex(Complex64::new(re, 0.0))),
        }
    }
}

/// Row-major complex matrix.
pub type Matrix = Vec<Vec<Complex>>;

pub fn to_matrix(m: &CMatrix) -> Matrix {
    (0..m.nrows())
        .map(|r| (0..m.ncols()).map(|c| Complex(m[(r, c)])).collect())
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum EvolutionSpec {
    /// Time-independent Hamiltonian, `hbar = 1`.
    Hamiltonian(Matrix),
    /// One unitary per interval, starting with `t0 -> times[0]`.
    Unitaries(Vec<Matrix>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum StateSpec {
    Density(Matrix),
    /// State vector; normalized on load.
    Pure(Vec<Complex>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKeyword {
    /// Rank-1 projectors onto the computational basis.
    Computational,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FamilySpec {
    Keyword(FamilyKeyword),
    Projectors(Vec<Matrix>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum IdentitySlot {
    I,
}

/// One time slot of a homogeneous history.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Slot {
    /// Family member index.
    Member(usize),
    /// Sum of family members.
    Members(Vec<usize>),
    /// No assertion at this time.
    Identity(IdentitySlot),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HistorySpec {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slots: Option<Vec<Slot>>,
    /// Tensor-space projector, earliest time first, Heisenberg picture.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Matrix>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SetKeyword {
    /// Every homogeneous history built from the families.
    ExclusiveFamily,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SetSpec {
    Keyword(SetKeyword),
    Named(Vec<String>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchKind {
    NonLp,
    NonQuasi,
    OrderViolation,
}

impl fmt::Display for SearchKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SearchKind::NonLp => "non_lp",
            SearchKind::NonQuasi => "non_quasi",
            SearchKind::OrderViolation => "order_violation",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Analysis {
    Classify {
        set: SetSpec,
    },
    Audit {
        set: SetSpec,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        weights: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        context_weights: Option<Vec<f64>>,
    },
    Lp {
        set: SetSpec,
    },
    Entropy {
        a: SetSpec,
        b: SetSpec,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        source: Option<Source>,
    },
    Search {
        kind: SearchKind,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        budget: Option<usize>,
    },
}

fn default_tolerance() -> f64 {
    DEFAULT_TOLERANCE
}

fn default_t0() -> f64 {
    0.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    pub dimension: usize,
    #[serde(default = "default_t0")]
    pub t0: f64,
    pub times: Vec<f64>,
    pub evolution: EvolutionSpec,
    pub initial_state: StateSpec,
    /// Keyed by time index.
    pub families: BTreeMap<usize, FamilySpec>,
    #[serde(default)]
    pub histories: Vec<HistorySpec>,
    #[serde(default)]
    pub analyses: Vec<Analysis>,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default)]
    pub mode: ConsistencyMode,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub assignment: Assignment,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ScenarioError {
    Parse {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },
    Validation {
        field: String,
        message: String,
    },
}

impl fmt::Display for ScenarioError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScenarioError::Parse {
                path,
                line,
                column,
                message,
            } => write!(
                f,
                "parse error at {path} (line {line}, column {column}): {message}"
            ),
            ScenarioError::Validation { field, message } => {
                write!(f, "invalid scenario at {field}: {message}")
            }
        }
    }
}

impl std::error::Error for ScenarioError {}

fn invalid(field: impl Into<String>, message: impl fmt::Display) -> ScenarioError {
    ScenarioError::Validation {
        field: field.into(),
        message: message.to_string(),
    }
}

fn at(field: impl Into<String>) -> impl FnOnce(Error) -> ScenarioError {
    let field = field.into();
    move |e| invalid(field, e)
}

fn build_matrix(m: &Matrix, field: &str, expected: usize) -> Result<CMatrix, ScenarioError> {
    if m.len() != expected {
        return Err(invalid(
            field,
            format!("expected {expected} rows, found {}", m.len()),
        ));
    }
    let mut out = CMatrix::zeros(expected, expected);
    for (r, row) in m.iter().enumerate() {
        if row.len() != expected {
            return Err(invalid(
                format!("{field}[{r}]"),
                format!("expected {expected} columns, found {}", row.len()),
            ));
        }
        for (c, z) in row.iter().enumerate() {
            if !z.0.re.is_finite() || !z.0.im.is_finite() {
                return Err(invalid(format!("{field}[{r}][{c}]"), "entry is not finite"));
            }
            out[(r, c)] = z.0;
        }
    }
    Ok(out)
}

/// A validated scenario: the model and its named histories.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub model: SystemModel,
    pub histories: Vec<(String, HistoryProposition)>,
}

impl Scenario {
    pub fn history(&self, name: &str) -> Option<&HistoryProposition> {
        self.histories
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, h)| h)
    }

    pub fn resolve_set(
        &self,
        spec: &SetSpec,
        field: &str,
    ) -> Result<Vec<HistoryProposition>, ScenarioError> {
        match spec {
            SetSpec::Keyword(SetKeyword::ExclusiveFamily) => {
                hpo::exclusive_family_set(&self.model).map_err(at(field))
            }
            SetSpec::Named(names) => {
                if names.is_empty() {
                    return Err(invalid(field, "set is empty"));
                }
                names
                    .iter()
                    .enumerate()
                    .map(|(i, n)| {
                        self.history(n).cloned().ok_or_else(|| {
                            invalid(format!("{field}[{i}]"), format!("unknown history {n:?}"))
                        })
                    })
                    .collect()
            }
        }
    }
}

impl ScenarioFile {
    pub fn from_json(text: &str) -> Result<ScenarioFile, ScenarioError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let file: ScenarioFile = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            ScenarioError::Parse {
                path,
                line: inner.line(),
                column: inner.column(),
                message: inner.to_string(),
            }
        })?;
        if file.version != SCENARIO_VERSION {
            return Err(invalid(
                "version",
                format!(
                    "unsupported version {} (expected {SCENARIO_VERSION})",
                    file.version
                ),
            ));
        }
        Ok(file)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("scenario serializes");
        s.push('\n');
        s
    }

    pub fn build(&self) -> Result<Scenario, ScenarioError> {
        let d = self.dimension;
        if d == 0 {
            return Err(invalid("dimension", "must be positive"));
        }
        if !(self.tolerance.is_finite() && self.tolerance > 0.0) {
            return Err(invalid("tolerance", "must be positive and finite"));
        }
        let tol = self.tolerance;
        let support = TemporalSupport::new(self.t0, self.times.clone()).map_err(at("times"))?;
        let evolution = match &self.evolution {
            EvolutionSpec::Hamiltonian(h) => {
                EvolutionLaw::Hamiltonian(build_matrix(h, "evolution.hamiltonian", d)?)
            }
            EvolutionSpec::Unitaries(us) => EvolutionLaw::Segments(
                us.iter()
                    .enumerate()
                    .map(|(k, u)| build_matrix(u, &format!("evolution.unitaries[{k}]"), d))
                    .collect::<Result<_, _>>()?,
            ),
        };
        let rho = match &self.initial_state {
            StateSpec::Density(m) => {
                DensityMatrix::new(build_matrix(m, "initial_state.density", d)?, tol)
                    .map_err(at("initial_state.density"))?
            }
            StateSpec::Pure(v) => {
                if v.len() != d {
                    return Err(invalid(
                        "initial_state.pure",
                        format!("expected {d} amplitudes, found {}", v.len()),
                    ));
                }
                let psi: Vec<Complex64> = v.iter().map(|z| z.0).collect();
                DensityMatrix::pure(&psi).map_err(at("initial_state.pure"))?
            }
        };
        let n = self.times.len();
        if let Some(k) = self.families.keys().find(|k| **k >= n) {
            return Err(invalid(
                format!("families.{k}"),
                format!("no time with index {k}"),
            ));
        }
        let mut families = Vec::with_capacity(n);
        for k in 0..n {
            let field = format!("families.{k}");
            let spec = self
                .families
                .get(&k)
                .ok_or_else(|| invalid(&field, "missing family for this time"))?;
            let fam = match spec {
                FamilySpec::Keyword(FamilyKeyword::Computational) => {
                    ProjectorFamily::computational(d)
                }
                FamilySpec::Projectors(ms) => ProjectorFamily::new(
                    ms.iter()
                        .enumerate()
                        .map(|(j, m)| {
                            let f = format!("{field}[{j}]");
                            Projector::new(build_matrix(m, &f, d)?, tol).map_err(at(f))
                        })
                        .collect::<Result<Vec<_>, _>>()?,
                    tol,
                )
                .map_err(at(&field))?,
            };
            families.push(fam);
        }
        let model =
            SystemModel::new(support, evolution, rho, families, tol).map_err(at("evolution"))?;

        let mut histories: Vec<(String, HistoryProposition)> =
            Vec::with_capacity(self.histories.len());
        for (i, spec) in self.histories.iter().enumerate() {
            let field = format!("histories[{i}]");
            if histories.iter().any(|(n, _)| *n == spec.name) {
                return Err(invalid(
                    format!("{field}.name"),
                    format!("duplicate name {:?}", spec.name),
                ));
            }
            let h = match (&spec.slots, &spec.matrix) {
                (Some(slots), None) => build_slots(&model, slots, &format!("{field}.slots"))?,
                (None, Some(m)) => {
                    let f = format!("{field}.matrix");
                    let big = d.pow(n as u32);
                    HistoryProposition::from_matrix(
                        model.support().clone(),
                        d,
                        build_matrix(m, &f, big)?,
                        tol,
                    )
                    .map_err(at(f))?
                }
                _ => {
                    return Err(invalid(
                        field,
                        "exactly one of \"slots\" and \"matrix\" is required",
                    ))
                }
            };
            histories.push((spec.name.clone(), h));
        }
        let scenario = Scenario { model, histories };
        for (i, a) in self.analyses.iter().enumerate() {
            let field = format!("analyses[{i}]");
            match a {
                Analysis::Classify { set } | Analysis::Lp { set } => {
                    scenario.resolve_set(set, &format!("{field}.set"))?;
                }
                Analysis::Audit { set, .. } => {
                    scenario.resolve_set(set, &format!("{field}.set"))?;
                }
                Analysis::Entropy { a, b, .. } => {
                    scenario.resolve_set(a, &format!("{field}.a"))?;
                    scenario.resolve_set(b, &format!("{field}.b"))?;
                }
                Analysis::Search { budget, .. } => {
                    if *budget == Some(0) {
                        return Err(invalid(format!("{field}.budget"), "must be at least 1"));
                    }
                }
            }
        }
        Ok(scenario)
    }
}

fn build_slots(
    model: &SystemModel,
    slots: &[Slot],
    field: &str,
) -> Result<HistoryProposition, ScenarioError> {
    if slots.len() != model.n_times() {
        return Err(invalid(
            field,
            format!("{} slots for {} times", slots.len(), model.n_times()),
        ));
    }
    let d = model.dim();
    let mut projectors = Vec::with_capacity(slots.len());
    for (k, (slot, fam)) in slots.iter().zip(model.families()).enumerate() {
        let f = format!("{field}[{k}]");
        let member = |i: usize| {
            fam.members()
                .get(i)
                .map(|p| p.matrix().clone())
                .ok_or_else(|| invalid(&f, format!("family has no member {i}")))
        };
        let p = match slot {
            Slot::Identity(IdentitySlot::I) => Projector::identity(d),
            Slot::Member(i) => Projector::new(member(*i)?, model.tol()).map_err(at(&f))?,
            Slot::Members(is) => {
                let mut sorted = is.clone();
                sorted.sort_unstable();
                sorted.dedup();
                if sorted.len() != is.len() {
                    return Err(invalid(&f, "repeated member index"));
                }
                let mut sum = CMatrix::zeros(d, d);
                for i in is {
                    sum += member(*i)?;
                }
                Projector::new(sum, model.tol()).map_err(at(&f))?
            }
        };
        projectors.push(p);
    }
    let h = HomogeneousHistory::new(model.support().clone(), projectors).map_err(at(field))?;
    hpo::embed(model, &h).map_err(at(field))
}

/// Scenario file describing `model` exactly, with explicit unitaries or
/// Hamiltonian, density matrix and projector families.
pub fn model_to_file(model: &SystemModel) -> ScenarioFile {
    let evolution = match model.evolution() {
        EvolutionLaw::Hamiltonian(h) => EvolutionSpec::Hamiltonian(to_matrix(h)),
        EvolutionLaw::Segments(us) => EvolutionSpec::Unitaries(us.iter().map(to_matrix).collect()),
    };
    let families = model
        .families()
        .iter()
        .enumerate()
        .map(|(k, f)| {
            (
                k,
                FamilySpec::Projectors(f.members().iter().map(|p| to_matrix(p.matrix())).collect()),
            )
        })
        .collect();
    ScenarioFile {
        version: SCENARIO_VERSION,
        name: None,
        notes: Vec::new(),
        dimension: model.dim(),
        t0: model.support().t0(),
        times: model.support().times().to_vec(),
        evolution,
        initial_state: StateSpec::Density(to_matrix(model.rho().matrix())),
        families,
        histories: Vec::new(),
        analyses: Vec::new(),
        tolerance: model.tol(),
        mode: ConsistencyMode::Strong,
        seed: 0,
        assignment: Assignment::Auto,
    }
}
