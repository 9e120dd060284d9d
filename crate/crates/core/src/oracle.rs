//! Slow, independent reference solvers for cross-checking the estimators.
//!
//! Nothing here calls into `estimators`, `linalg` or nalgebra: the design
//! rows are rebuilt from the raw spectra, the posterior mode is found by
//! gradient descent on the negative log posterior, and least squares goes
//! through a hand-written one-sided Jacobi SVD.

use crate::error::{Error, Result};
use crate::estimators::EstimationProblem;
use crate::spectral::{DesignMatrix, GaussianBelief};

pub const MAX_DIMENSION: usize = 64;
pub const GRADIENT_TOLERANCE: f64 = 1e-10;
pub const ACCEPTABLE_GRADIENT: f64 = 1e-6;
pub const MAX_ITERATIONS: usize = 1_000_000;

const ARMIJO: f64 = 1e-4;
const RANK_CUTOFF: f64 = 1e-12;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn rows_of(problem: &EstimationProblem) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    let [a, b] = problem.known();
    let mut rows = Vec::with_capacity(a.len() * b.len());
    for sa in a.members() {
        for sb in b.members() {
            rows.push(
                sa.values()
                    .iter()
                    .zip(sb.values())
                    .map(|(p, q)| p * q)
                    .collect(),
            );
        }
    }
    let x = problem
        .observations()
        .slice(problem.target_role(), problem.target_index())?;
    Ok((rows, x))
}

struct Objective<'a> {
    precision: Vec<Vec<f64>>,
    mean: &'a [f64],
    rows: &'a [Vec<f64>],
    x: &'a [f64],
    beta: f64,
}

impl Objective<'_> {
    /// Gradient of ½(v-μ)ᵀΛ(v-μ) + β/2 Σ (x_r - m_r·v)².
    fn gradient(&self, v: &[f64]) -> Vec<f64> {
        let diff: Vec<f64> = v.iter().zip(self.mean).map(|(a, b)| a - b).collect();
        let mut g: Vec<f64> = self.precision.iter().map(|row| dot(row, &diff)).collect();
        for (row, &xr) in self.rows.iter().zip(self.x) {
            let residual = xr - dot(row, v);
            for (gi, mi) in g.iter_mut().zip(row) {
                *gi -= self.beta * residual * mi;
            }
        }
        g
    }

    /// Curvature gᵀHg along direction `g`.
    fn curvature(&self, g: &[f64]) -> f64 {
        let prior: f64 = self
            .precision
            .iter()
            .zip(g)
            .map(|(row, gi)| gi * dot(row, g))
            .sum();
        let data: f64 = self.rows.iter().map(|row| dot(row, g).powi(2)).sum();
        prior + self.beta * data
    }
}

/// Minimizes the negative log posterior by steepest descent with a
/// backtracking (Armijo) line search, starting from the prior mean.
pub fn minimize_neg_log_posterior(
    problem: &EstimationProblem,
    prior: &GaussianBelief,
) -> Result<Vec<f64>> {
    let n = problem.grid().count();
    if n > MAX_DIMENSION {
        return Err(Error::InvalidArgument(format!(
            "oracle limited to N <= {MAX_DIMENSION}, got {n}"
        )));
    }
    if prior.dim() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            actual: prior.dim(),
        });
    }
    let (rows, x) = rows_of(problem)?;
    minimize_quadratic(prior, &rows, &x, problem.noise_precision())
}

/// Same as [`minimize_neg_log_posterior`] on explicit design rows.
pub fn minimize_quadratic(
    prior: &GaussianBelief,
    rows: &[Vec<f64>],
    x: &[f64],
    beta: f64,
) -> Result<Vec<f64>> {
    let n = prior.dim();
    let p = prior.precision();
    let objective = Objective {
        precision: (0..n)
            .map(|r| (0..n).map(|c| p[(r, c)]).collect())
            .collect(),
        mean: prior.mean().as_slice(),
        rows,
        x,
        beta,
    };

    let mut v = objective.mean.to_vec();
    let mut step = 1.0;
    let mut g = objective.gradient(&v);
    let mut norm = g.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    let mut iterations = 0;
    while norm >= GRADIENT_TOLERANCE && iterations < MAX_ITERATIONS {
        let gg = dot(&g, &g);
        let curvature = objective.curvature(&g);
        // f(v - t g) - f(v) = -t gᵀg + t²/2 gᵀHg, evaluated in closed form
        // so the sufficient-decrease test is not swamped by rounding.
        step *= 2.0;
        while -step * gg + 0.5 * step * step * curvature > -ARMIJO * step * gg {
            step *= 0.5;
            if step < f64::MIN_POSITIVE {
                break;
            }
        }
        for (vi, gi) in v.iter_mut().zip(&g) {
            *vi -= step * gi;
        }
        g = objective.gradient(&v);
        norm = g.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        iterations += 1;
    }
    if norm > ACCEPTABLE_GRADIENT {
        return Err(Error::NonConverged {
            iterations,
            gradient: norm,
        });
    }
    Ok(v)
}

/// Applies a Givens rotation to columns `p < q`.
fn rotate(cols: &mut [Vec<f64>], p: usize, q: usize, c: f64, s: f64) {
    let (left, right) = cols.split_at_mut(q);
    for (x, y) in left[p].iter_mut().zip(right[0].iter_mut()) {
        let (xp, xq) = (*x, *y);
        *x = c * xp - s * xq;
        *y = s * xp + c * xq;
    }
}

/// Thin SVD by one-sided Jacobi rotations: returns `(U columns, σ, V columns)`.
#[allow(clippy::type_complexity)]
pub fn jacobi_svd(rows: &[Vec<f64>], ncols: usize) -> (Vec<Vec<f64>>, Vec<f64>, Vec<Vec<f64>>) {
    let mut a: Vec<Vec<f64>> = (0..ncols)
        .map(|c| rows.iter().map(|r| r[c]).collect())
        .collect();
    let mut v: Vec<Vec<f64>> = (0..ncols)
        .map(|c| (0..ncols).map(|r| if r == c { 1.0 } else { 0.0 }).collect())
        .collect();

    for _sweep in 0..200 {
        let mut rotated = false;
        for p in 0..ncols {
            for q in (p + 1)..ncols {
                let alpha = dot(&a[p], &a[p]);
                let beta = dot(&a[q], &a[q]);
                let gamma = dot(&a[p], &a[q]);
                if gamma == 0.0 || gamma.abs() <= 1e-15 * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut a, p, q, c, s);
                rotate(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            break;
        }
    }

    let sigma: Vec<f64> = a.iter().map(|col| dot(col, col).sqrt()).collect();
    let u = a
        .into_iter()
        .zip(&sigma)
        .map(|(col, &s)| {
            if s > 0.0 {
                col.into_iter().map(|x| x / s).collect()
            } else {
                col
            }
        })
        .collect();
    (u, sigma, v)
}

/// Minimum-norm least-squares solution through an explicitly formed SVD.
pub fn dense_least_squares(design: &DesignMatrix, x: &[f64]) -> Result<Vec<f64>> {
    let m = design.matrix();
    let rows: Vec<Vec<f64>> = (0..m.nrows())
        .map(|r| (0..m.ncols()).map(|c| m[(r, c)]).collect())
        .collect();
    least_squares_rows(&rows, m.ncols(), x)
}

pub fn least_squares_rows(rows: &[Vec<f64>], ncols: usize, x: &[f64]) -> Result<Vec<f64>> {
    if rows.len() != x.len() {
        return Err(Error::LengthMismatch {
            expected: rows.len(),
            actual: x.len(),
        });
    }
    if rows.iter().flatten().all(|&v| v == 0.0) {
        return Err(Error::DegenerateDesign("design matrix is all zeros".into()));
    }
    let (u, sigma, v) = jacobi_svd(rows, ncols);
    let cutoff = RANK_CUTOFF * sigma.iter().copied().fold(0.0, f64::max);
    let mut solution = vec![0.0; ncols];
    for ((ui, &si), vi) in u.iter().zip(&sigma).zip(&v) {
        if si > cutoff {
            let coeff = dot(ui, x) / si;
            for (s, vv) in solution.iter_mut().zip(vi) {
                *s += coeff * vv;
            }
        }
    }
    Ok(solution)
}

/// Least squares for a whole problem.
pub fn problem_least_squares(problem: &EstimationProblem) -> Result<Vec<f64>> {
    let (rows, x) = rows_of(problem)?;
    least_squares_rows(&rows, problem.grid().count(), &x)
}
