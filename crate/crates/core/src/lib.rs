//! Bayesian estimation of illumination, surface reflectance or camera
//! sensitivity spectra from RGB pixel values.
//!
//! A pixel is modelled as `x_ijk = Σ_n e_i(λ_n) r_j(λ_n) c_k(λ_n)`. Fixing two
//! of the three spectrum families makes the third a linear regression
//! target; [`estimators`] solves it by least squares or with a Gaussian
//! prior, [`jiang`] adds a basis-constrained baseline, and [`oracle`] holds
//! slow reference solvers for testing.

pub mod benchmark;
pub mod cli;
pub mod dataio;
pub mod error;
pub mod estimators;
pub mod forward;
pub mod jiang;
pub mod linalg;
pub mod metrics;
pub mod oracle;
pub mod plot;
pub mod priors;
pub mod spectral;

pub use error::{Error, Result};
pub use estimators::{
    bayes_estimate, bayes_posterior, confidence, least_squares_estimate, sequential_update,
    Estimate, EstimationProblem, Method,
};
pub use forward::{render_observations, render_pixel, NoiseModel};
pub use priors::{PrecisionSpec, PriorLibrary};
pub use spectral::{
    build_design_matrix, DesignMatrix, GaussianBelief, Observations, Role, Spectrum, SpectrumSet,
    WavelengthGrid,
};
