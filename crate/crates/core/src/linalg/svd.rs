//! Truncated SVD of sparse blocks by Golub-Kahan-Lanczos bidiagonalization
//! with full reorthogonalization.
//!
//! The start vector is supported on the nonzero columns of the block, so
//! the computed singular vectors vanish exactly on empty rows and columns and
//! the factors stay as sparse as the block itself.

use nalgebra::DMatrix;
use rand_chacha::rand_core::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{check_len, dot, norm, DenseBlock, LinalgError, LinearOperator, SparseCsr};

/// Relative residual `||A^T u_i - sigma_i v_i|| / sigma_1` accepted per triplet.
const RESIDUAL_TOL: f64 = 1e-6;
/// Matrix applications allowed per requested triplet.
const APPLICATIONS_PER_TRIPLET: usize = 50;

/// Rank-q factorization `U diag(sigma) V^T` with sparse factors.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedSvd {
    u: SparseCsr,
    sigma: Vec<f32>,
    v: SparseCsr,
}

impl TruncatedSvd {
    pub fn new(u: SparseCsr, sigma: Vec<f32>, v: SparseCsr) -> Result<Self, LinalgError> {
        check_len(sigma.len(), u.ncols())?;
        check_len(sigma.len(), v.ncols())?;
        Ok(Self { u, sigma, v })
    }

    pub fn rank(&self) -> usize {
        self.sigma.len()
    }

    pub fn nrows(&self) -> usize {
        self.u.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.v.nrows()
    }

    pub fn u(&self) -> &SparseCsr {
        &self.u
    }

    pub fn v(&self) -> &SparseCsr {
        &self.v
    }

    pub fn sigma(&self) -> &[f32] {
        &self.sigma
    }

    pub fn nbytes(&self) -> u64 {
        self.u.nbytes() + 4 * self.sigma.len() as u64 + self.v.nbytes()
    }

    /// `y += U (Sigma (V^T x))`.
    pub fn matvec_acc(&self, x: &[f64], y: &mut [f64]) {
        let mut t = vec![0.0; self.rank()];
        self.v.matvec_t_acc(x, &mut t);
        for (ti, &s) in t.iter_mut().zip(&self.sigma) {
            *ti *= s as f64;
        }
        self.u.matvec_acc(&t, y);
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>, LinalgError> {
        check_len(self.ncols(), x.len())?;
        let mut y = vec![0.0; self.nrows()];
        self.matvec_acc(x, &mut y);
        Ok(y)
    }

    pub fn to_dense(&self) -> DenseBlock {
        let (m, n) = (self.nrows(), self.ncols());
        let ud = self.u.to_dense();
        let vd = self.v.to_dense();
        let mut out = vec![0f32; m * n];
        for r in 0..m {
            for c in 0..n {
                let s: f64 = (0..self.rank())
                    .map(|l| ud.get(r, l) as f64 * self.sigma[l] as f64 * vd.get(c, l) as f64)
                    .sum();
                out[r * n + c] = s as f32;
            }
        }
        DenseBlock::from_values(m, n, out).expect("sizes agree")
    }
}

impl LinearOperator for TruncatedSvd {
    fn nrows(&self) -> usize {
        self.u.nrows()
    }

    fn ncols(&self) -> usize {
        self.v.nrows()
    }

    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        y.fill(0.0);
        self.matvec_acc(x, y);
    }
}

/// Leading singular triplets in double precision.
#[derive(Debug, Clone)]
pub struct LanczosSvd {
    pub sigma: Vec<f64>,
    pub u: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
    /// The Krylov space became invariant: every nonzero singular value of
    /// the block is among `sigma`.
    pub exhausted: bool,
    /// Matrix applications (products with A or A^T) spent.
    pub applications: usize,
}

impl LanczosSvd {
    /// Computes up to `k` leading triplets of `a`, `1 <= k < min(m, n)`.
    /// Fewer are returned only when the block's rank is below `k`.
    pub fn compute(a: &SparseCsr, k: usize, seed: u64) -> Result<Self, LinalgError> {
        let (m, n) = (a.nrows(), a.ncols());
        let limit = m.min(n);
        if k == 0 || k >= limit {
            return Err(LinalgError::RankOutOfRange { k, limit });
        }
        let mut out = Self {
            sigma: Vec::new(),
            u: Vec::new(),
            v: Vec::new(),
            exhausted: true,
            applications: 0,
        };
        if a.nnz() == 0 {
            return Ok(out);
        }
        let at = a.transpose();
        let col_mask = a.nonzero_columns();
        let row_mask = at.nonzero_columns();
        let anorm = a
            .values()
            .iter()
            .map(|&v| (v as f64).powi(2))
            .sum::<f64>()
            .sqrt();
        let tiny = 1e-12 * anorm;
        let max_apps = APPLICATIONS_PER_TRIPLET * k;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);

        let mut us: Vec<Vec<f64>> = Vec::new();
        let mut vs: Vec<Vec<f64>> = Vec::new();
        let mut alphas: Vec<f64> = Vec::new();
        let mut betas: Vec<f64> = Vec::new();

        let first = random_unit(&mut rng, &col_mask, &[]).expect("block has a nonzero column");
        vs.push(first);
        let mut next_check = (2 * k).max(k + 8);
        loop {
            let j = us.len();
            // u_j
            let mut p = vec![0.0; m];
            a.apply_into(&vs[j], &mut p);
            out.applications += 1;
            if j > 0 {
                axpy(-betas[j - 1], &us[j - 1], &mut p);
            }
            orthogonalize(&mut p, &us);
            let mut alpha = norm(&p);
            if alpha <= tiny {
                alpha = 0.0;
                match random_unit(&mut rng, &row_mask, &us) {
                    Some(r) => p = r,
                    None => break,
                }
            } else {
                scale(&mut p, 1.0 / alpha);
            }
            us.push(p);
            alphas.push(alpha);

            // v_{j+1}
            let mut r = vec![0.0; n];
            at.apply_into(&us[j], &mut r);
            out.applications += 1;
            axpy(-alpha, &vs[j], &mut r);
            orthogonalize(&mut r, &vs);
            let mut beta = norm(&r);
            if beta <= tiny {
                beta = 0.0;
                match random_unit(&mut rng, &col_mask, &vs) {
                    Some(w) => r = w,
                    None => {
                        betas.push(0.0);
                        break;
                    }
                }
            } else {
                scale(&mut r, 1.0 / beta);
            }
            betas.push(beta);
            vs.push(r);

            let steps = us.len();
            if steps >= next_check || out.applications + 2 > max_apps {
                let (sigma, p, q) = bidiagonal_svd(&alphas, &betas, steps, steps);
                let converged = sigma.len() >= k.min(steps)
                    && (0..k.min(sigma.len()))
                        .all(|i| (beta * p[(steps - 1, i)]).abs() <= RESIDUAL_TOL * sigma[0]);
                if converged && steps >= k {
                    vs.pop();
                    out.exhausted = false;
                    out.assemble(&us, &vs, sigma, &p, &q, k);
                    return Ok(out);
                }
                if out.applications + 2 > max_apps {
                    return Err(LinalgError::NonConvergence {
                        applications: out.applications,
                    });
                }
                next_check = steps + k.max(8);
            }
        }
        // Invariant Krylov space: the bidiagonal factorization is exact.
        let lu = us.len();
        let lv = vs.len().min(lu + 1);
        vs.truncate(lv);
        let (sigma, p, q) = bidiagonal_svd(&alphas, &betas, lu, lv);
        let nonzero = sigma
            .iter()
            .take_while(|&&s| s > 1e-10 * sigma[0].max(f64::MIN_POSITIVE))
            .count();
        // Singular values beyond the k returned ones are not reported.
        out.exhausted = nonzero <= k;
        out.assemble(&us, &vs, sigma, &p, &q, nonzero.min(k));
        Ok(out)
    }

    fn assemble(
        &mut self,
        us: &[Vec<f64>],
        vs: &[Vec<f64>],
        sigma: Vec<f64>,
        p: &DMatrix<f64>,
        q: &DMatrix<f64>,
        count: usize,
    ) {
        let combine = |basis: &[Vec<f64>], coef: &DMatrix<f64>, i: usize| {
            let mut out = vec![0.0; basis[0].len()];
            for (l, b) in basis.iter().enumerate() {
                axpy(coef[(l, i)], b, &mut out);
            }
            out
        };
        let count = count.min(sigma.len());
        self.u = (0..count).map(|i| combine(us, p, i)).collect();
        self.v = (0..count).map(|i| combine(vs, q, i)).collect();
        self.sigma = sigma[..count].to_vec();
    }

    /// Single-precision sparse factors of the leading `q` triplets.
    pub fn to_truncated(&self, q: usize) -> TruncatedSvd {
        let q = q.min(self.sigma.len());
        let factor = |vecs: &[Vec<f64>], len: usize| {
            let rows = (0..len)
                .map(|r| {
                    (0..q)
                        .filter_map(|c| {
                            let x = vecs[c][r] as f32;
                            (x != 0.0).then_some((c as u32, x))
                        })
                        .collect()
                })
                .collect();
            SparseCsr::from_rows(q, rows)
        };
        let m = self.u.first().map_or(0, |u| u.len());
        let n = self.v.first().map_or(0, |v| v.len());
        TruncatedSvd {
            u: factor(&self.u, m),
            sigma: self.sigma[..q].iter().map(|&s| s as f32).collect(),
            v: factor(&self.v, n),
        }
    }
}

/// Leading `k` singular triplets of `a` (fewer if its rank is below `k`),
/// from a deterministic start vector derived from `seed`.
pub fn truncated_svd(a: &SparseCsr, k: usize, seed: u64) -> Result<TruncatedSvd, LinalgError> {
    Ok(LanczosSvd::compute(a, k, seed)?.to_truncated(k))
}

/// SVD of the `lu x lv` upper bidiagonal matrix with diagonal `alphas` and
/// superdiagonal `betas`, singular values sorted in descending order.
/// Returns `(sigma, P, Q)` with `B = P diag(sigma) Q^T`.
fn bidiagonal_svd(
    alphas: &[f64],
    betas: &[f64],
    lu: usize,
    lv: usize,
) -> (Vec<f64>, DMatrix<f64>, DMatrix<f64>) {
    let mut b = DMatrix::zeros(lu, lv);
    for j in 0..lu {
        if j < lv {
            b[(j, j)] = alphas[j];
        }
        if j + 1 < lv {
            b[(j, j + 1)] = betas[j];
        }
    }
    let svd = b.svd(true, true);
    let u = svd.u.expect("requested");
    let vt = svd.v_t.expect("requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&x, &y| svd.singular_values[y].total_cmp(&svd.singular_values[x]));
    let sigma = order.iter().map(|&i| svd.singular_values[i]).collect();
    let p = DMatrix::from_fn(lu, order.len(), |r, c| u[(r, order[c])]);
    let q = DMatrix::from_fn(lv, order.len(), |r, c| vt[(order[c], r)]);
    (sigma, p, q)
}

fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

fn scale(x: &mut [f64], s: f64) {
    x.iter_mut().for_each(|v| *v *= s);
}

/// Two passes of classical Gram-Schmidt against `basis`.
fn orthogonalize(x: &mut [f64], basis: &[Vec<f64>]) {
    for _ in 0..2 {
        for b in basis {
            let c = dot(x, b);
            axpy(-c, b, x);
        }
    }
}

/// Random unit vector supported on `mask`, orthogonal to `basis`; `None`
/// when `basis` already spans the masked subspace.
fn random_unit(rng: &mut ChaCha8Rng, mask: &[bool], basis: &[Vec<f64>]) -> Option<Vec<f64>> {
    let mut x: Vec<f64> = mask
        .iter()
        .map(|&on| {
            let r = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
            if on {
                2.0 * r - 1.0
            } else {
                0.0
            }
        })
        .collect();
    let before = norm(&x);
    if before == 0.0 {
        return None;
    }
    orthogonalize(&mut x, basis);
    let after = norm(&x);
    if after <= 1e-8 * before {
        return None;
    }
    scale(&mut x, 1.0 / after);
    Some(x)
}
