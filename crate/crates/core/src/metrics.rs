use crate::error::{Error, Result};
use crate::estimators::normalize;

pub fn rmse(estimate: &[f64], truth: &[f64]) -> Result<f64> {
    if estimate.len() != truth.len() {
        return Err(Error::LengthMismatch {
            expected: truth.len(),
            actual: estimate.len(),
        });
    }
    if truth.is_empty() {
        return Err(Error::InvalidArgument("RMSE of empty spectra".into()));
    }
    let sum: f64 = estimate
        .iter()
        .zip(truth)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok((sum / truth.len() as f64).sqrt())
}

/// RMSE after max-normalizing both spectra.
pub fn normalized_rmse(estimate: &[f64], truth: &[f64]) -> Result<f64> {
    rmse(&normalize(estimate)?, &normalize(truth)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rmse_basics() {
        assert_eq!(rmse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert!((rmse(&[0.0, 0.0], &[3.0, 4.0]).unwrap() - 12.5f64.sqrt()).abs() < 1e-15);
        assert!(rmse(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn normalized_rmse_ignores_scale() {
        assert_eq!(normalized_rmse(&[2.0, 4.0], &[0.5, 1.0]).unwrap(), 0.0);
    }
}
