//! Mach-Zehnder interferometer.
//!
//! Path space `{|u>, |d>}` (indices 0 and 1), source mode `|u>` at `t0 = 0`,
//! path projectors at `t = 1`, output-port projectors at `t = 2`. Both
//! beam splitters are `(1/√2)[[1, i], [i, 1]]`; the second is preceded by
//! the phase `diag(e^{iφ}, 1)` on the upper arm. Detector `e` is the output
//! port that receives all the light at `φ = 0`.
//!
//! With path detection a marker qubit records the path between the two
//! beam splitters (CNOT from the path), which removes the interference.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hpo::{self, HistoryProposition, HomogeneousHistory};
use crate::linalg::{self, c64, CMatrix};
use crate::quantum::{
    DensityMatrix, EvolutionLaw, Projector, ProjectorFamily, SystemModel, TemporalSupport,
    DEFAULT_TOLERANCE,
};
use crate::scenario::{
    model_to_file, Analysis, HistorySpec, IdentitySlot, ScenarioFile, SetSpec, Slot,
};

#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MziConfig {
    pub phase: f64,
    #[serde(default)]
    pub path_detection: bool,
}

#[derive(Clone, Debug)]
pub struct Mzi {
    pub config: MziConfig,
    pub model: SystemModel,
    /// Path `u` at `t = 1`, detector `e` at `t = 2`.
    pub u: HistoryProposition,
    /// Path `d` at `t = 1`, detector `e` at `t = 2`.
    pub d: HistoryProposition,
    /// Detector `e` at `t = 2`, no path assertion.
    pub e: HistoryProposition,
    /// Output-port index of detector `e`.
    pub bright_port: usize,
}

pub fn beam_splitter() -> CMatrix {
    let s = FRAC_1_SQRT_2;
    CMatrix::from_row_slice(2, 2, &[c64(s, 0.0), c64(0.0, s), c64(0.0, s), c64(s, 0.0)])
}

pub fn phase_shift(phase: f64) -> CMatrix {
    linalg::diag(&[Complex64::from_polar(1.0, phase), c64(1.0, 0.0)])
}

/// Output port carrying all the intensity at zero phase.
pub fn bright_port() -> usize {
    let out = beam_splitter()
        * beam_splitter()
        * CMatrix::from_column_slice(2, 1, &[c64(1.0, 0.0), c64(0.0, 0.0)]);
    if out[(0, 0)].norm_sqr() > out[(1, 0)].norm_sqr() {
        0
    } else {
        1
    }
}

fn cnot_from_path() -> CMatrix {
    // path is the first tensor factor, marker the second; flip marker on |u>
    let mut m = linalg::zeros(4);
    m[(1, 0)] = c64(1.0, 0.0);
    m[(0, 1)] = c64(1.0, 0.0);
    m[(2, 2)] = c64(1.0, 0.0);
    m[(3, 3)] = c64(1.0, 0.0);
    m
}

pub fn build_mzi(config: MziConfig) -> Result<Mzi> {
    if !config.phase.is_finite() {
        return Err(Error::invalid("interferometer", "phase must be finite"));
    }
    let port = bright_port();
    let second = beam_splitter() * phase_shift(config.phase);
    let (dim, u1, u2, lift) = if config.path_detection {
        let i2 = linalg::identity(2);
        (
            4,
            cnot_from_path() * linalg::kron(&beam_splitter(), &i2),
            linalg::kron(&second, &i2),
            Some(i2),
        )
    } else {
        (2, beam_splitter(), second, None)
    };
    let lifted = |p: CMatrix| match &lift {
        Some(i2) => linalg::kron(&p, i2),
        None => p,
    };
    let tol = DEFAULT_TOLERANCE;
    let family = |k_bright: Option<usize>| -> Result<ProjectorFamily> {
        let order: Vec<usize> = match k_bright {
            Some(b) => vec![b, 1 - b],
            None => vec![0, 1],
        };
        ProjectorFamily::new(
            order
                .into_iter()
                .map(|k| Projector::new(lifted(linalg::basis_projector(2, k)), tol))
                .collect::<Result<Vec<_>>>()?,
            tol,
        )
    };
    let mut psi = vec![c64(0.0, 0.0); dim];
    psi[0] = c64(1.0, 0.0);
    let model = SystemModel::new(
        TemporalSupport::new(0.0, vec![1.0, 2.0])?,
        EvolutionLaw::Segments(vec![u1, u2]),
        DensityMatrix::pure(&psi)?,
        // t1: {u, d}; t2: {e, other port}
        vec![family(None)?, family(Some(port))?],
        tol,
    )?;
    let path = |k: usize| Projector::new(lifted(linalg::basis_projector(2, k)), tol);
    let e_proj = Projector::new(lifted(linalg::basis_projector(2, port)), tol)?;
    let history = |slots: Vec<Projector>| -> Result<HistoryProposition> {
        hpo::embed(
            &model,
            &HomogeneousHistory::new(model.support().clone(), slots)?,
        )
    };
    let u = history(vec![path(0)?, e_proj.clone()])?;
    let d = history(vec![path(1)?, e_proj.clone()])?;
    let e = hpo::embed(
        &model,
        &HomogeneousHistory::padded(&model, &[(2.0, e_proj)])?,
    )?;
    Ok(Mzi {
        config,
        model,
        u,
        d,
        e,
        bright_port: port,
    })
}

/// Scenario file for the interferometer with classify, LP and audit
/// analyses of the two path histories.
pub fn mzi_scenario(config: MziConfig) -> Result<ScenarioFile> {
    let mzi = build_mzi(config)?;
    let mut file = model_to_file(&mzi.model);
    file.name = Some(format!(
        "mach-zehnder phase {}{}",
        config.phase,
        if config.path_detection {
            " with path detection"
        } else {
            ""
        }
    ));
    file.notes = vec![
        "beam splitters (1/sqrt 2)[[1, i], [i, 1]]; phase diag(e^{i phase}, 1) before the second"
            .into(),
        "source in path u at t0 = 0; paths {u, d} at t = 1; output ports at t = 2".into(),
        format!(
            "detector e is the port that receives all the light at zero phase (basis index {})",
            mzi.bright_port
        ),
        "second-time family lists detector e first".into(),
    ];
    if config.path_detection {
        file.notes.push(
            "a marker qubit (second tensor factor) records the path before the second splitter"
                .into(),
        );
    }
    let e = Slot::Member(0);
    file.histories = vec![
        HistorySpec {
            name: "u".into(),
            slots: Some(vec![Slot::Member(0), e.clone()]),
            matrix: None,
        },
        HistorySpec {
            name: "d".into(),
            slots: Some(vec![Slot::Member(1), e.clone()]),
            matrix: None,
        },
        HistorySpec {
            name: "e".into(),
            slots: Some(vec![Slot::Identity(IdentitySlot::I), e]),
            matrix: None,
        },
    ];
    let paths = || SetSpec::Named(vec!["u".into(), "d".into()]);
    file.analyses = vec![
        Analysis::Classify { set: paths() },
        Analysis::Lp { set: paths() },
        Analysis::Audit {
            set: paths(),
            weights: None,
            context_weights: None,
        },
    ];
    Ok(file)
}
