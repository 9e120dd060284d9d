//! Estimating one unknown spectrum from pixel values and the two known
//! spectrum families.
//!
//! Every role (illumination, reflectance, sensitivity) goes through the same
//! code: the known families form a design matrix `M` whose rows are their
//! elementwise products, and the observations with the target axis fixed form
//! the vector `x`, so that `x ≈ M v` for the unknown spectrum `v`.
//!
//! The Bayesian path conditions a Gaussian prior `N(μ, Λ⁻¹)` on the
//! likelihood `x ~ N(M v, β⁻¹ I)`:
//!
//! ```text
//! Λ̂ = Λ + β Mᵀ M
//! μ̂ = Λ̂⁻¹ (Λ μ + β Mᵀ x)
//! ```
//!
//! obtained by completing the square in the log posterior. The solve goes
//! through a Cholesky factorization of `Λ̂`; the inverse is never formed.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{cholesky_with_jitter, symmetrize};
use crate::spectral::{
    build_design_matrix, DesignMatrix, GaussianBelief, Observations, Role, Spectrum, SpectrumSet,
    WavelengthGrid,
};

/// Likelihood precision used when the noise level is unknown.
pub const DEFAULT_NOISE_PRECISION: f64 = 1e4;

/// Singular values below this fraction of the largest are treated as zero
/// by the least-squares pseudo-inverse.
pub const LSQ_RANK_CUTOFF: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    LeastSquares,
    Bayes,
    JiangBasis,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::LeastSquares => "least-squares",
            Method::Bayes => "bayes",
            Method::JiangBasis => "jiang",
        }
    }
}

/// One unknown spectrum (`target_role`, `target_index`) together with the
/// known families and the observations that constrain it.
#[derive(Debug, Clone)]
pub struct EstimationProblem {
    target_role: Role,
    target_index: usize,
    known: [SpectrumSet; 2],
    observations: Observations,
    noise_precision: f64,
}

impl EstimationProblem {
    pub fn new(
        target_role: Role,
        target_index: usize,
        known_a: SpectrumSet,
        known_b: SpectrumSet,
        observations: Observations,
        noise_precision: f64,
    ) -> Result<Self> {
        let mut known = [known_a, known_b];
        known.sort_by_key(|s| s.role().axis());
        let roles = [known[0].role(), known[1].role()];
        if roles != target_role.others() {
            return Err(Error::RoleConflict(format!(
                "estimating {target_role} needs known {} and {}, got {} and {}",
                target_role.others()[0],
                target_role.others()[1],
                roles[0],
                roles[1]
            )));
        }
        if known[0].grid() != known[1].grid() {
            return Err(Error::GridMismatch {
                left: *known[0].grid(),
                right: *known[1].grid(),
            });
        }
        let extents = observations.extents();
        for set in &known {
            let axis = set.role().axis();
            if extents[axis] != set.len() {
                return Err(Error::InvalidArgument(format!(
                    "observations have {} {} entries but {} known spectra were given",
                    extents[axis],
                    set.role(),
                    set.len()
                )));
            }
        }
        let extent = extents[target_role.axis()];
        if target_index >= extent {
            return Err(Error::IndexOutOfRange {
                index: target_index,
                extent,
            });
        }
        if !(noise_precision.is_finite() && noise_precision > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "noise precision must be positive, got {noise_precision}"
            )));
        }
        Ok(Self {
            target_role,
            target_index,
            known,
            observations,
            noise_precision,
        })
    }

    pub fn target_role(&self) -> Role {
        self.target_role
    }

    pub fn target_index(&self) -> usize {
        self.target_index
    }

    /// The two known families in axis order.
    pub fn known(&self) -> &[SpectrumSet; 2] {
        &self.known
    }

    pub fn observations(&self) -> &Observations {
        &self.observations
    }

    pub fn noise_precision(&self) -> f64 {
        self.noise_precision
    }

    pub fn grid(&self) -> &WavelengthGrid {
        self.known[0].grid()
    }

    pub fn with_noise_precision(&self, noise_precision: f64) -> Result<Self> {
        let [a, b] = self.known.clone();
        Self::new(
            self.target_role,
            self.target_index,
            a,
            b,
            self.observations.clone(),
            noise_precision,
        )
    }

    pub fn design(&self) -> Result<DesignMatrix> {
        build_design_matrix(&self.known[0], &self.known[1])
    }

    /// Observations matching the design rows one to one.
    pub fn observation_vector(&self) -> Result<Vec<f64>> {
        self.observations.slice(self.target_role, self.target_index)
    }
}

/// A max-normalized estimate, plus the posterior when it came from the
/// Bayesian path.
#[derive(Debug, Clone)]
pub struct Estimate {
    normalized: Spectrum,
    raw: Vec<f64>,
    posterior: Option<GaussianBelief>,
    method: Method,
}

impl Estimate {
    pub(crate) fn from_raw(
        grid: WavelengthGrid,
        role: Role,
        raw: Vec<f64>,
        posterior: Option<GaussianBelief>,
        method: Method,
    ) -> Result<Self> {
        let normalized = Spectrum::unbounded(grid, normalize(&raw)?, role)?;
        Ok(Self {
            normalized,
            raw,
            posterior,
            method,
        })
    }

    pub fn normalized(&self) -> &Spectrum {
        &self.normalized
    }

    /// The solution before normalization (posterior mean for Bayes).
    pub fn raw(&self) -> &[f64] {
        &self.raw
    }

    pub fn posterior(&self) -> Option<&GaussianBelief> {
        self.posterior.as_ref()
    }

    pub fn method(&self) -> Method {
        self.method
    }
}

/// Divides by the largest element. Negative entries are kept.
pub fn normalize(values: &[f64]) -> Result<Vec<f64>> {
    let peak = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(peak.is_finite() && peak > 0.0) {
        return Err(Error::DegenerateMean);
    }
    Ok(values.iter().map(|v| v / peak).collect())
}

/// Minimum-norm least-squares solution through the SVD pseudo-inverse.
pub fn least_squares_solution(problem: &EstimationProblem) -> Result<DVector<f64>> {
    let design = problem.design()?;
    let x = DVector::from_vec(problem.observation_vector()?);
    pseudo_inverse_solve(design.matrix(), &x)
}

pub(crate) fn pseudo_inverse_solve(m: &DMatrix<f64>, x: &DVector<f64>) -> Result<DVector<f64>> {
    if m.nrows() == 0 || m.iter().all(|&v| v == 0.0) {
        return Err(Error::DegenerateDesign("design matrix is all zeros".into()));
    }
    let svd = m.clone().svd(true, true);
    let (u, v_t) = match (&svd.u, &svd.v_t) {
        (Some(u), Some(v_t)) => (u, v_t),
        _ => {
            return Err(Error::DegenerateDesign(
                "SVD did not produce factors".into(),
            ))
        }
    };
    let sigma_max = svd.singular_values.max();
    let cutoff = LSQ_RANK_CUTOFF * sigma_max;
    let mut solution = DVector::zeros(m.ncols());
    for (idx, &sigma) in svd.singular_values.iter().enumerate() {
        if sigma > cutoff {
            let coeff = u.column(idx).dot(x) / sigma;
            solution += v_t.row(idx).transpose() * coeff;
        }
    }
    Ok(solution)
}

pub fn least_squares_estimate(problem: &EstimationProblem) -> Result<Estimate> {
    let solution = least_squares_solution(problem)?;
    Estimate::from_raw(
        *problem.grid(),
        problem.target_role(),
        solution.as_slice().to_vec(),
        None,
        Method::LeastSquares,
    )
}

/// Conditions `prior` on the problem's observations.
pub fn bayes_posterior(
    problem: &EstimationProblem,
    prior: &GaussianBelief,
) -> Result<GaussianBelief> {
    let design = problem.design()?;
    let x = problem.observation_vector()?;
    bayes_posterior_from_design(prior, design.matrix(), &x, problem.noise_precision())
}

/// Same as [`bayes_posterior`] on an explicit design matrix. Zero rows
/// returns the prior unchanged.
pub fn bayes_posterior_from_design(
    prior: &GaussianBelief,
    design: &DMatrix<f64>,
    observations: &[f64],
    noise_precision: f64,
) -> Result<GaussianBelief> {
    let n = prior.dim();
    if design.ncols() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            actual: design.ncols(),
        });
    }
    if design.nrows() != observations.len() {
        return Err(Error::LengthMismatch {
            expected: design.nrows(),
            actual: observations.len(),
        });
    }
    if !(noise_precision.is_finite() && noise_precision > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "noise precision must be positive, got {noise_precision}"
        )));
    }
    if design.nrows() == 0 {
        return Ok(prior.clone());
    }

    let x = DVector::from_column_slice(observations);
    let mut precision = prior.precision() + design.tr_mul(design) * noise_precision;
    symmetrize(&mut precision);
    let rhs = prior.precision() * prior.mean() + design.tr_mul(&x) * noise_precision;

    let (chol, precision) = cholesky_with_jitter(&precision).ok_or(Error::NonPositivePosterior)?;
    let mean = chol.solve(&rhs);
    if mean.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonPositivePosterior);
    }
    Ok(GaussianBelief::from_factorized(mean, precision))
}

pub fn bayes_estimate(problem: &EstimationProblem, prior: &GaussianBelief) -> Result<Estimate> {
    check_prior_dim(problem, prior)?;
    let posterior = bayes_posterior(problem, prior)?;
    Estimate::from_raw(
        *problem.grid(),
        problem.target_role(),
        posterior.mean().as_slice().to_vec(),
        Some(posterior),
        Method::Bayes,
    )
}

fn check_prior_dim(problem: &EstimationProblem, prior: &GaussianBelief) -> Result<()> {
    let n = problem.grid().count();
    if prior.dim() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            actual: prior.dim(),
        });
    }
    Ok(())
}

/// Folds [`bayes_posterior`] over `problems`, each posterior becoming the
/// prior of the next. All problems must target the same spectrum.
pub fn sequential_update(
    prior: &GaussianBelief,
    problems: &[EstimationProblem],
) -> Result<GaussianBelief> {
    if let Some(first) = problems.first() {
        for p in problems {
            if p.grid() != first.grid()
                || p.target_role() != first.target_role()
                || p.target_index() != first.target_index()
            {
                return Err(Error::InvalidArgument(
                    "sequential updates must share grid and target".into(),
                ));
            }
        }
    }
    problems.iter().try_fold(prior.clone(), |belief, problem| {
        check_prior_dim(problem, &belief)?;
        bayes_posterior(problem, &belief)
    })
}

/// Posterior precision of a Bayesian estimate, i.e. the confidence in the
/// unnormalized mean.
pub fn confidence(estimate: &Estimate) -> Result<&DMatrix<f64>> {
    match (estimate.method(), estimate.posterior()) {
        (Method::Bayes, Some(posterior)) => Ok(posterior.precision()),
        _ => Err(Error::NoConfidenceAvailable),
    }
}
