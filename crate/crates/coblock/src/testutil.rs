//! Shared generators for unit tests.

use rand::Rng;

use crate::matrix::BipartiteAdjacency;
use crate::model::{ModelKind, PriorConfig};

pub(crate) fn random_cell(model: ModelKind, rng: &mut impl Rng) -> f64 {
    match model {
        ModelKind::Bernoulli => f64::from(rng.random_bool(0.5)),
        ModelKind::Categorical { categories } => rng.random_range(0..categories) as f64,
        ModelKind::Poisson => rng.random_range(0..6) as f64,
        ModelKind::Gaussian => rng.random_range(-2.0..2.0),
    }
}

pub(crate) fn random_unit_prior(rng: &mut impl Rng) -> PriorConfig {
    PriorConfig {
        alpha0: 1.0,
        beta0: 1.0,
        eta: rng.random_range(1.0..2.0),
        zeta: rng.random_range(1.0..2.0),
        delta: rng.random_range(1.0..2.0),
        gamma: rng.random_range(1.0..2.0),
        xi: rng.random_range(-1.0..1.0),
        kappa: rng.random_range(1.0..2.0),
    }
}

/// Prior with varied label weights as well, for invariance tests.
pub(crate) fn random_prior(rng: &mut impl Rng) -> PriorConfig {
    PriorConfig {
        alpha0: rng.random_range(0.5..2.0),
        beta0: rng.random_range(0.5..2.0),
        ..random_unit_prior(rng)
    }
}

pub(crate) fn random_adjacency(
    n: usize,
    m: usize,
    model: ModelKind,
    rng: &mut impl Rng,
) -> BipartiteAdjacency {
    let values: Vec<f64> = (0..n * m).map(|_| random_cell(model, rng)).collect();
    BipartiteAdjacency::from_dense(n, m, values, model).unwrap()
}

pub(crate) const ALL_MODELS: [ModelKind; 4] = [
    ModelKind::Bernoulli,
    ModelKind::Categorical { categories: 3 },
    ModelKind::Poisson,
    ModelKind::Gaussian,
];
