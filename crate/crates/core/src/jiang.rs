//! Jiang-style basis-constrained baseline for camera sensitivity.
//!
//! The unknown sensitivity is restricted to `mean + basis · w` for a small
//! principal-component basis, and `w` is fit by least squares through the
//! normal equations of the reduced system. This is an idealized version;
//! the original method carries extra constraints not reproduced here.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::estimators::{Estimate, EstimationProblem, Method};
use crate::spectral::{Role, Spectrum};

/// Returns the coefficients `w` and the unnormalized fitted spectrum.
pub fn jiang_solution(
    problem: &EstimationProblem,
    mean: &Spectrum,
    basis: &DMatrix<f64>,
) -> Result<(DVector<f64>, DVector<f64>)> {
    if problem.target_role() != Role::Sensitivity {
        return Err(Error::MethodScope(format!(
            "the basis-constrained baseline only estimates camera sensitivity, not {}",
            problem.target_role()
        )));
    }
    let n = problem.grid().count();
    if mean.grid() != problem.grid() {
        return Err(Error::GridMismatch {
            left: *problem.grid(),
            right: *mean.grid(),
        });
    }
    if basis.nrows() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            actual: basis.nrows(),
        });
    }
    if basis.ncols() == 0 {
        return Err(Error::InvalidArgument(
            "basis needs at least one column".into(),
        ));
    }

    let design = problem.design()?;
    let m = design.matrix();
    let mean_vec = DVector::from_column_slice(mean.values());
    let x = DVector::from_vec(problem.observation_vector()?);
    let reduced = m * basis;
    let residual = x - m * &mean_vec;

    let gram = reduced.tr_mul(&reduced);
    let rhs = reduced.tr_mul(&residual);
    let scale = gram.diagonal().max();
    let chol = if scale > 0.0 { gram.cholesky() } else { None };
    let chol =
        chol.ok_or_else(|| Error::DegenerateDesign("reduced system is rank deficient".into()))?;
    let smallest = chol
        .l()
        .diagonal()
        .iter()
        .fold(f64::INFINITY, |a, &v| a.min(v));
    if smallest * smallest <= 1e-14 * scale {
        return Err(Error::DegenerateDesign(
            "reduced system is numerically rank deficient".into(),
        ));
    }
    let weights = chol.solve(&rhs);
    let fitted = mean_vec + basis * &weights;
    Ok((weights, fitted))
}

pub fn jiang_estimate(
    problem: &EstimationProblem,
    mean: &Spectrum,
    basis: &DMatrix<f64>,
) -> Result<Estimate> {
    let (_, fitted) = jiang_solution(problem, mean, basis)?;
    Estimate::from_raw(
        *problem.grid(),
        Role::Sensitivity,
        fitted.as_slice().to_vec(),
        None,
        Method::JiangBasis,
    )
}
