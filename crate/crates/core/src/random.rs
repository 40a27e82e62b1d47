//! Seeded random system models.
//!
//! The distribution is a choice of this crate: states are normalized Gram
//! matrices of complex Gaussian matrices, unitaries come from the QR
//! decomposition of a complex Gaussian matrix with the phase of `R`'s
//! diagonal removed.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::quantum::{
    DensityMatrix, EvolutionLaw, Projector, ProjectorFamily, SystemModel, TemporalSupport,
    DEFAULT_TOLERANCE,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Dynamics {
    #[default]
    Random,
    Identity,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum FamilyChoice {
    /// Independent random basis at each time.
    #[default]
    PerTime,
    /// One random basis shared by every time.
    Shared,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct RandomOptions {
    pub pure_state: bool,
    pub dynamics: Dynamics,
    pub families: FamilyChoice,
}

impl RandomOptions {
    /// Identity dynamics with one shared family: every history is a product of
    /// commuting projectors.
    pub fn classical() -> Self {
        RandomOptions {
            pure_state: false,
            dynamics: Dynamics::Identity,
            families: FamilyChoice::Shared,
        }
    }
}

/// SplitMix64 finalizer, used to derive independent per-trial seeds.
pub fn mix_seed(base: u64, parts: &[u64]) -> u64 {
    let mut z = base;
    for p in parts {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15).wrapping_add(*p);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^= z >> 31;
    }
    z
}

fn gaussian(rng: &mut ChaCha8Rng) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im)
}

pub fn ginibre(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    let mut m = CMatrix::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            m[(i, j)] = gaussian(rng);
        }
    }
    m
}

pub fn haar_unitary(dim: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    let g = ginibre(dim, dim, rng);
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..dim {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        for i in 0..dim {
            q[(i, j)] *= phase;
        }
    }
    q
}

pub fn random_density(dim: usize, pure: bool, rng: &mut ChaCha8Rng) -> CMatrix {
    let cols = if pure { 1 } else { dim };
    let g = ginibre(dim, cols, rng);
    let gram = &g * g.adjoint();
    let tr = linalg::trace(&gram).re;
    let mut rho = gram / Complex64::new(tr, 0.0);
    // exact Hermitian symmetry
    rho = (&rho + rho.adjoint()) * Complex64::new(0.5, 0.0);
    rho
}

/// Rank-1 family `{V|k><k|V^dag}` for a Haar-like `V`.
pub fn random_family(dim: usize, rng: &mut ChaCha8Rng) -> Vec<CMatrix> {
    let v = haar_unitary(dim, rng);
    (0..dim)
        .map(|k| {
            let col: Vec<Complex64> = v.column(k).iter().copied().collect();
            linalg::outer(&col)
        })
        .collect()
}

pub fn random_instance(dim: usize, n_times: usize, seed: u64) -> Result<SystemModel> {
    random_instance_with(dim, n_times, seed, RandomOptions::default())
}

pub fn random_instance_with(
    dim: usize,
    n_times: usize,
    seed: u64,
    options: RandomOptions,
) -> Result<SystemModel> {
    if dim < 2 {
        return Err(Error::invalid(
            "random instance",
            "dimension must be at least 2",
        ));
    }
    if n_times < 1 {
        return Err(Error::invalid(
            "random instance",
            "at least one time is required",
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rho = random_density(dim, options.pure_state, &mut rng);
    let shared = match options.families {
        FamilyChoice::Shared => Some(random_family(dim, &mut rng)),
        FamilyChoice::PerTime => None,
    };
    let mut families = Vec::with_capacity(n_times);
    for _ in 0..n_times {
        let members = match &shared {
            Some(f) => f.clone(),
            None => random_family(dim, &mut rng),
        };
        let members = members
            .into_iter()
            .map(|m| Projector::new(m, DEFAULT_TOLERANCE))
            .collect::<Result<Vec<_>>>()?;
        families.push(ProjectorFamily::new(members, DEFAULT_TOLERANCE)?);
    }
    let evolution = match options.dynamics {
        Dynamics::Random => {
            EvolutionLaw::Segments((0..n_times).map(|_| haar_unitary(dim, &mut rng)).collect())
        }
        Dynamics::Identity => EvolutionLaw::identity(dim, n_times),
    };
    SystemModel::new(
        TemporalSupport::unit_grid(n_times),
        evolution,
        DensityMatrix::new(rho, DEFAULT_TOLERANCE)?,
        families,
        DEFAULT_TOLERANCE,
    )
}
