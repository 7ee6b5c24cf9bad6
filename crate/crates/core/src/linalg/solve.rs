use super::{norm, LinalgError};

#[derive(Debug, Clone, Default)]
pub struct FixedPointReport {
    pub iterations: usize,
    /// `||x_{k+1} - x_k||` for every iteration.
    pub steps: Vec<f64>,
}

impl FixedPointReport {
    /// Largest ratio of successive step norms (the observed contraction).
    pub fn contraction(&self) -> f64 {
        self.steps
            .windows(2)
            .filter(|w| w[0] > 0.0)
            .map(|w| w[1] / w[0])
            .fold(0.0, f64::max)
    }
}

/// Solves `(I - K) x = rhs` by the iteration `x <- rhs + K x` from
/// `x = rhs`, stopping once `||x_{k+1} - x_k|| <= tol ||rhs||`.
///
/// `apply_k(x, y)` must overwrite `y` with `K x`.
pub fn fixed_point_solve<F>(
    mut apply_k: F,
    rhs: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, FixedPointReport), LinalgError>
where
    F: FnMut(&[f64], &mut [f64]),
{
    let bound = tol * norm(rhs);
    let mut x = rhs.to_vec();
    let mut kx = vec![0.0; rhs.len()];
    let mut report = FixedPointReport::default();
    for it in 1..=max_iter {
        apply_k(&x, &mut kx);
        let mut step2 = 0.0;
        for ((xi, &bi), &ki) in x.iter_mut().zip(rhs).zip(&kx) {
            let next = bi + ki;
            step2 += (next - *xi).powi(2);
            *xi = next;
        }
        let step = step2.sqrt();
        report.iterations = it;
        report.steps.push(step);
        if step <= bound {
            return Ok((x, report));
        }
    }
    let rel = report.steps.last().copied().unwrap_or(0.0) / norm(rhs).max(f64::MIN_POSITIVE);
    Err(LinalgError::NotConverged {
        iterations: max_iter,
        residual: rel,
    })
}

/// Thomas algorithm for a tridiagonal system. `lower` and `upper` hold the
/// sub- and superdiagonals (length n - 1).
pub fn tridiag_solve(
    lower: &[f64],
    diag: &[f64],
    upper: &[f64],
    rhs: &[f64],
) -> Result<Vec<f64>, LinalgError> {
    let n = diag.len();
    for len in [rhs.len(), lower.len() + 1, upper.len() + 1] {
        if len != n {
            return Err(LinalgError::DimensionMismatch {
                expected: n,
                found: len,
            });
        }
    }
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut pivot = diag[0];
    if pivot == 0.0 {
        return Err(LinalgError::ZeroPivot { row: 0 });
    }
    d[0] = rhs[0] / pivot;
    for i in 1..n {
        c[i - 1] = upper[i - 1] / pivot;
        pivot = diag[i] - lower[i - 1] * c[i - 1];
        if pivot == 0.0 {
            return Err(LinalgError::ZeroPivot { row: i });
        }
        d[i] = (rhs[i] - lower[i - 1] * d[i - 1]) / pivot;
    }
    for i in (0..n - 1).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    Ok(d)
}
