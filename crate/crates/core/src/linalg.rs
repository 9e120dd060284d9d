use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

/// First jitter level, relative to `trace / n`.
pub const JITTER_START: f64 = 1e-12;
/// Last jitter level tried before giving up.
pub const JITTER_LIMIT: f64 = 1e-6;

/// Cholesky-factorizes a symmetric matrix, adding a diagonal jitter of
/// `1e-12 · trace/n`, escalating ×10 up to `1e-6 · trace/n`, when the plain
/// factorization fails. Returns the factor and the matrix actually factored.
pub fn cholesky_with_jitter(matrix: &DMatrix<f64>) -> Option<(Cholesky<f64, Dyn>, DMatrix<f64>)> {
    if let Some(chol) = matrix.clone().cholesky() {
        return Some((chol, matrix.clone()));
    }
    let n = matrix.nrows();
    let scale = matrix.trace() / n as f64;
    if !(scale.is_finite() && scale > 0.0) {
        return None;
    }
    let mut level = JITTER_START;
    while level <= JITTER_LIMIT * (1.0 + 1e-9) {
        let mut jittered = matrix.clone();
        for d in 0..n {
            jittered[(d, d)] += level * scale;
        }
        if let Some(chol) = jittered.clone().cholesky() {
            return Some((chol, jittered));
        }
        level *= 10.0;
    }
    None
}

pub(crate) fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for r in 0..n {
        for c in (r + 1)..n {
            let avg = 0.5 * (m[(r, c)] + m[(c, r)]);
            m[(r, c)] = avg;
            m[(c, r)] = avg;
        }
    }
}

pub fn spd_solve(matrix: &DMatrix<f64>, rhs: &DVector<f64>) -> Option<DVector<f64>> {
    cholesky_with_jitter(matrix).map(|(chol, _)| chol.solve(rhs))
}
