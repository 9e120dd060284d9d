//! The discrete imaging pipeline and simulation noise.
//!
//! A pixel value is the wavelength sum of illumination × reflectance ×
//! sensitivity. Simulated noise is derived per observation from
//! `(seed, i, j, k)` so rendering order never changes the draws.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{Observations, Role, Spectrum, SpectrumSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    None,
    AdditiveGaussian,
}

/// Pixel noise used by the simulator. Noisy values are never clipped.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    kind: NoiseKind,
    sigma: f64,
    seed: u64,
}

impl NoiseModel {
    pub fn none() -> Self {
        Self {
            kind: NoiseKind::None,
            sigma: 0.0,
            seed: 0,
        }
    }

    pub fn gaussian(sigma: f64, seed: u64) -> Result<Self> {
        if !(sigma.is_finite() && sigma >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "noise sigma must be finite and non-negative, got {sigma}"
            )));
        }
        Ok(Self {
            kind: NoiseKind::AdditiveGaussian,
            sigma,
            seed,
        })
    }

    /// `None` for sigma 0, Gaussian otherwise.
    pub fn from_sigma(sigma: f64, seed: u64) -> Result<Self> {
        if sigma == 0.0 {
            Ok(Self {
                seed,
                ..Self::none()
            })
        } else {
            Self::gaussian(sigma, seed)
        }
    }

    pub fn kind(&self) -> NoiseKind {
        self.kind
    }

    pub fn sigma(&self) -> f64 {
        match self.kind {
            NoiseKind::None => 0.0,
            NoiseKind::AdditiveGaussian => self.sigma,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Likelihood precision implied by this noise model, if any.
    pub fn precision(&self) -> Option<f64> {
        let sigma = self.sigma();
        (sigma > 0.0).then(|| 1.0 / (sigma * sigma))
    }

    /// The noise term for observation `(i, j, k)`.
    pub fn sample(&self, i: usize, j: usize, k: usize) -> f64 {
        match self.kind {
            NoiseKind::None => 0.0,
            NoiseKind::AdditiveGaussian => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                rng.set_stream(stream_id(i, j, k));
                let z: f64 = rng.sample(StandardNormal);
                self.sigma * z
            }
        }
    }
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self::none()
    }
}

fn stream_id(i: usize, j: usize, k: usize) -> u64 {
    debug_assert!(i < 1 << 21 && j < 1 << 21 && k < 1 << 21);
    ((i as u64) << 42) | ((j as u64) << 21) | k as u64
}

pub fn render_pixel(e: &Spectrum, r: &Spectrum, c: &Spectrum) -> Result<f64> {
    for s in [r, c] {
        if s.grid() != e.grid() {
            return Err(Error::GridMismatch {
                left: *e.grid(),
                right: *s.grid(),
            });
        }
    }
    Ok(e.values()
        .iter()
        .zip(r.values())
        .zip(c.values())
        .map(|((a, b), c)| a * b * c)
        .sum())
}

/// Renders the full `I × J × K` tensor. The three families may be passed
/// in any order but must cover each role exactly once.
pub fn render_observations(
    a: &SpectrumSet,
    b: &SpectrumSet,
    c: &SpectrumSet,
    noise: &NoiseModel,
) -> Result<Observations> {
    let [e, r, s] = by_role([a, b, c])?;
    let extents = [e.len(), r.len(), s.len()];
    let mut values = Vec::with_capacity(extents.iter().product());
    for (i, ei) in e.members().iter().enumerate() {
        for (j, rj) in r.members().iter().enumerate() {
            for (k, ck) in s.members().iter().enumerate() {
                values.push(render_pixel(ei, rj, ck)? + noise.sample(i, j, k));
            }
        }
    }
    Observations::new(extents, values)
}

fn by_role(sets: [&SpectrumSet; 3]) -> Result<[&SpectrumSet; 3]> {
    let mut slots: [Option<&SpectrumSet>; 3] = [None; 3];
    for set in sets {
        let slot = &mut slots[set.role().axis()];
        if slot.is_some() {
            return Err(Error::RoleConflict(format!(
                "role {} supplied twice; need one each of illumination, reflectance, sensitivity",
                set.role()
            )));
        }
        *slot = Some(set);
    }
    match slots {
        [Some(e), Some(r), Some(c)] => {
            if e.grid() != r.grid() || e.grid() != c.grid() {
                let other = if e.grid() != r.grid() { r } else { c };
                return Err(Error::GridMismatch {
                    left: *e.grid(),
                    right: *other.grid(),
                });
            }
            Ok([e, r, c])
        }
        _ => Err(Error::RoleConflict(format!(
            "missing role {}",
            Role::ALL
                .iter()
                .zip(slots.iter())
                .find(|(_, s)| s.is_none())
                .map(|(r, _)| r.as_str())
                .unwrap_or("?")
        ))),
    }
}
