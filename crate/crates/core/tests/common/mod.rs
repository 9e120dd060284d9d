#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use specbayes::{
    render_observations, EstimationProblem, GaussianBelief, NoiseModel, Observations, Role,
    SpectrumSet, WavelengthGrid,
};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn grid(n: usize) -> WavelengthGrid {
    WavelengthGrid::new(400.0, 300.0 / (n as f64 - 1.0).max(1.0), n).unwrap()
}

pub fn random_set(
    rng: &mut ChaCha8Rng,
    grid: &WavelengthGrid,
    role: Role,
    count: usize,
) -> SpectrumSet {
    let rows = (0..count)
        .map(|_| {
            (0..grid.count())
                .map(|_| rng.random_range(0.05..1.0))
                .collect()
        })
        .collect();
    SpectrumSet::from_rows(*grid, role, rows).unwrap()
}

/// `A Aᵀ / n + I`: symmetric with smallest eigenvalue at least 1.
pub fn random_spd(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    let mut m = &a * a.transpose() / n as f64 + DMatrix::identity(n, n);
    let t = m.transpose();
    m = (&m + t) * 0.5;
    m
}

pub fn random_prior(rng: &mut ChaCha8Rng, n: usize) -> GaussianBelief {
    let mean = DVector::from_fn(n, |_, _| rng.random_range(0.0..1.0));
    GaussianBelief::new(mean, random_spd(rng, n)).unwrap()
}

pub struct Instance {
    pub sets: [SpectrumSet; 3],
    pub observations: Observations,
    pub problem: EstimationProblem,
    pub prior: GaussianBelief,
}

/// Random scene with small member counts, noisy observations and a random
/// SPD prior for the chosen target.
pub fn random_instance(rng: &mut ChaCha8Rng, target: Role, n: usize) -> Instance {
    let g = grid(n);
    let sets: [SpectrumSet; 3] = Role::ALL.map(|role| {
        let count = if role == target {
            rng.random_range(1..=3)
        } else {
            rng.random_range(1..=6)
        };
        random_set(rng, &g, role, count)
    });
    let noise = NoiseModel::gaussian(0.01, rng.random()).unwrap();
    let observations = render_observations(&sets[0], &sets[1], &sets[2], &noise).unwrap();
    let index = rng.random_range(0..sets[target.axis()].len());
    let beta = rng.random_range(0.5..5.0);
    let [a, b] = target.others();
    let problem = EstimationProblem::new(
        target,
        index,
        sets[a.axis()].clone(),
        sets[b.axis()].clone(),
        observations.clone(),
        beta,
    )
    .unwrap();
    let prior = random_prior(rng, n);
    Instance {
        sets,
        observations,
        problem,
        prior,
    }
}

/// Sub-tensor keeping only the listed members along `role`'s axis.
pub fn select_observations(obs: &Observations, role: Role, keep: &[usize]) -> Observations {
    let mut extents = obs.extents();
    extents[role.axis()] = keep.len();
    let mut values = Vec::with_capacity(extents.iter().product());
    for i in 0..extents[0] {
        for j in 0..extents[1] {
            for k in 0..extents[2] {
                let mut idx = [i, j, k];
                idx[role.axis()] = keep[idx[role.axis()]];
                values.push(obs.get(idx[0], idx[1], idx[2]));
            }
        }
    }
    Observations::new(extents, values).unwrap()
}

pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    m.clone().symmetric_eigen().eigenvalues.min()
}
