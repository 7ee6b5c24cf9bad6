mod common;

use hvf::linalg::{fixed_point_solve, tridiag_solve, LanczosSvd};
use hvf::{LinearOperator, SparseCsr};
use nalgebra::DMatrix;
use proptest::prelude::*;

/// A 200 x 300 sparse matrix with a decaying spectrum: a sum of separable
/// smooth kernels plus sparse noise.
fn test_matrix() -> SparseCsr {
    let (m, n) = (200, 300);
    let mut rng = common::rng(7);
    let mut data = vec![0.0f32; m * n];
    for r in 0..m {
        for c in 0..n {
            let (x, y) = (r as f64 / m as f64, c as f64 / n as f64);
            let mut v = 0.0;
            for k in 0..12 {
                v += 0.5f64.powi(k) * ((k as f64 + 1.0) * x).cos() * ((k as f64 + 1.0) * y + 0.3).sin();
            }
            if common::uniform(&mut rng) < 0.05 {
                v += 1e-4 * common::uniform(&mut rng);
            }
            if (r + 2 * c) % 3 != 0 {
                data[r * n + c] = v as f32;
            }
        }
    }
    SparseCsr::from_dense(m, n, &data)
}

fn dense(a: &SparseCsr) -> DMatrix<f64> {
    let d = a.to_dense();
    DMatrix::from_fn(a.nrows(), a.ncols(), |r, c| d.get(r, c) as f64)
}

#[test]
fn lanczos_matches_dense_svd() {
    let a = test_matrix();
    let oracle = dense(&a).svd(true, true);
    let mut exact = oracle.singular_values.as_slice().to_vec();
    exact.sort_by(|x, y| y.total_cmp(x));
    let k = 10;
    let svd = LanczosSvd::compute(&a, k, 3).unwrap();
    assert_eq!(svd.sigma.len(), k);
    for i in 0..k {
        assert!(
            (svd.sigma[i] - exact[i]).abs() <= 1e-6 * exact[0],
            "sigma_{i}: {} vs {}",
            svd.sigma[i],
            exact[i]
        );
    }
    // A v_i = s_i u_i and A^T u_i = s_i v_i.
    for i in 0..k {
        let av = a.matvec(&svd.v[i]).unwrap();
        let mut atu = vec![0.0; a.ncols()];
        a.matvec_t_acc(&svd.u[i], &mut atu);
        let r1: Vec<f64> = av.iter().zip(&svd.u[i]).map(|(x, u)| x - svd.sigma[i] * u).collect();
        let r2: Vec<f64> = atu.iter().zip(&svd.v[i]).map(|(x, v)| x - svd.sigma[i] * v).collect();
        assert!(common::norm(&r1) <= 1e-5 * svd.sigma[0]);
        assert!(common::norm(&r2) <= 1e-5 * svd.sigma[0]);
    }
    // Orthonormal factors.
    for i in 0..k {
        for j in 0..k {
            let uu: f64 = svd.u[i].iter().zip(&svd.u[j]).map(|(x, y)| x * y).sum();
            let vv: f64 = svd.v[i].iter().zip(&svd.v[j]).map(|(x, y)| x * y).sum();
            let e = if i == j { 1.0 } else { 0.0 };
            assert!((uu - e).abs() < 1e-8 && (vv - e).abs() < 1e-8);
        }
    }
}

#[test]
fn truncation_error_is_the_next_singular_value() {
    let a = test_matrix();
    let mut exact = dense(&a).singular_values().as_slice().to_vec();
    exact.sort_by(|x, y| y.total_cmp(x));
    let q = 6;
    let t = LanczosSvd::compute(&a, 12, 0).unwrap().to_truncated(q);
    let td = t.to_dense();
    let diff = dense(&a) - DMatrix::from_fn(a.nrows(), a.ncols(), |r, c| td.get(r, c) as f64);
    let spectral = diff.singular_values().max();
    assert!((spectral - exact[q]).abs() <= 1e-3 * exact[0] + 1e-3 * exact[q], "{spectral} vs {}", exact[q]);
    // The product agrees with the densified factors.
    let x = common::random_vec(&mut common::rng(1), a.ncols());
    let y = t.apply(&x).unwrap();
    let yd: Vec<f64> = (0..a.nrows())
        .map(|r| (0..a.ncols()).map(|c| td.get(r, c) as f64 * x[c]).sum())
        .collect();
    assert!(common::rel_diff(&y, &yd) < 1e-5);
}

/// Gaussian elimination with partial pivoting on the dense matrix.
fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs())).unwrap();
        a.swap(k, p);
        b.swap(k, p);
        for i in k + 1..n {
            let f = a[i][k] / a[k][k];
            for j in k..n {
                a[i][j] -= f * a[k][j];
            }
            b[i] -= f * b[k];
        }
    }
    let mut x = vec![0.0; n];
    for k in (0..n).rev() {
        let s: f64 = (k + 1..n).map(|j| a[k][j] * x[j]).sum();
        x[k] = (b[k] - s) / a[k][k];
    }
    x
}

proptest! {
    #[test]
    fn thomas_matches_gaussian_elimination(
        rows in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64, -5.0..5.0f64), 2..60),
    ) {
        let n = rows.len();
        let lower: Vec<f64> = rows[1..].iter().map(|r| r.0).collect();
        let upper: Vec<f64> = rows[..n - 1].iter().map(|r| r.1).collect();
        // Diagonally dominant, as in every conduction system.
        let diag: Vec<f64> = rows.iter().map(|r| 2.5 + r.2.abs()).collect();
        let rhs: Vec<f64> = rows.iter().map(|r| r.2).collect();
        let x = tridiag_solve(&lower, &diag, &upper, &rhs).unwrap();
        let mut a = vec![vec![0.0; n]; n];
        for i in 0..n {
            a[i][i] = diag[i];
            if i > 0 {
                a[i][i - 1] = lower[i - 1];
            }
            if i + 1 < n {
                a[i][i + 1] = upper[i];
            }
        }
        let y = dense_solve(a, rhs);
        for (p, q) in x.iter().zip(&y) {
            prop_assert!((p - q).abs() <= 1e-10 * (1.0 + q.abs()));
        }
    }

    #[test]
    fn csr_product_matches_dense(
        entries in prop::collection::vec((0usize..40, 0usize..30, 0.0..1.0f32), 0..300),
        x in prop::collection::vec(-1.0..1.0f64, 30),
    ) {
        let mut data = vec![0.0f32; 40 * 30];
        for &(r, c, v) in &entries {
            data[r * 30 + c] = v;
        }
        let a = SparseCsr::from_dense(40, 30, &data);
        prop_assert_eq!(a.nbytes(), 8 * 41 + 8 * a.nnz() as u64);
        let y = a.matvec(&x).unwrap();
        for r in 0..40 {
            let e: f64 = (0..30).map(|c| data[r * 30 + c] as f64 * x[c]).sum();
            prop_assert!((y[r] - e).abs() < 1e-9);
        }
    }
}

#[test]
fn fixed_point_matches_direct_solve() {
    // K = 0.4 * (random row-stochastic matrix).
    let n = 50;
    let mut rng = common::rng(11);
    let mut k = vec![vec![0.0; n]; n];
    for row in &mut k {
        let w = common::random_vec(&mut rng, n);
        let s: f64 = w.iter().sum();
        for (e, wi) in row.iter_mut().zip(w) {
            *e = 0.4 * wi / s;
        }
    }
    let b = common::random_vec(&mut rng, n);
    let (x, report) = fixed_point_solve(
        |x, y| {
            for (yi, row) in y.iter_mut().zip(&k) {
                *yi = row.iter().zip(x).map(|(a, b)| a * b).sum();
            }
        },
        &b,
        1e-12,
        100,
    )
    .unwrap();
    assert!(report.iterations <= 40);
    let a: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 } - k[i][j]).collect())
        .collect();
    let exact = dense_solve(a, b);
    assert!(common::rel_diff(&x, &exact) < 1e-11);
}
