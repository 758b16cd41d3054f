//! Sparse kernels against dense brute force on small random systems.

#![allow(clippy::needless_range_loop)]

use ensemble_heat::sparse::{cg_solve, factorize_spd, relative_residual, CsrMatrix, Ordering, SpdFactorization};
use proptest::prelude::*;

type Dense = Vec<Vec<f64>>;

fn dense_from_triplets(n: usize, m: usize, t: &[(usize, usize, f64)]) -> Dense {
    let mut d = vec![vec![0.0; m]; n];
    for &(i, j, v) in t {
        d[i][j] += v;
    }
    d
}

fn dense_matvec(a: &Dense, x: &[f64]) -> Vec<f64> {
    a.iter().map(|row| row.iter().zip(x).map(|(a, x)| a * x).sum()).collect()
}

/// Gaussian elimination with partial pivoting.
fn dense_solve(a: &Dense, b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut m: Dense = a.iter().zip(b).map(|(r, &bi)| r.iter().copied().chain([bi]).collect()).collect();
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| m[i][k].abs().total_cmp(&m[j][k].abs())).unwrap();
        m.swap(k, p);
        for i in k + 1..n {
            let f = m[i][k] / m[k][k];
            for j in k..=n {
                m[i][j] -= f * m[k][j];
            }
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|j| m[i][j] * x[j]).sum();
        x[i] = (m[i][n] - s) / m[i][i];
    }
    x
}

/// `G G^T + n I` from a random sparse-ish `G`.
fn spd_from(n: usize, g: &[f64]) -> Dense {
    let mut a = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            let mut s = 0.0;
            for k in 0..n {
                s += g[i * n + k] * g[j * n + k];
            }
            a[i][j] = s;
        }
        a[i][i] += n as f64;
    }
    a
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

fn triplets(max_n: usize) -> impl Strategy<Value = (usize, usize, Vec<(usize, usize, f64)>)> {
    (1..=max_n, 1..=max_n).prop_flat_map(|(n, m)| {
        let t = prop::collection::vec((0..n, 0..m, -10.0..10.0f64), 0..3 * n * m);
        (Just(n), Just(m), t)
    })
}

fn spd_system(max_n: usize) -> impl Strategy<Value = (usize, Vec<f64>, Vec<f64>)> {
    (1..=max_n).prop_flat_map(|n| {
        let sparse_entry = prop_oneof![2 => Just(0.0), 1 => -1.0..1.0f64];
        (Just(n), prop::collection::vec(sparse_entry, n * n), prop::collection::vec(-5.0..5.0f64, n))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn csr_assembly_and_matvec_match_dense((n, m, t) in triplets(12), x in prop::collection::vec(-3.0..3.0f64, 12)) {
        let a = CsrMatrix::from_triplets_rect(n, m, &t).unwrap();
        let d = dense_from_triplets(n, m, &t);
        for i in 0..n {
            prop_assert!(max_diff(&a.to_dense()[i], &d[i]) <= 1e-12);
        }
        let x = &x[..m];
        prop_assert!(max_diff(&a.matvec(x).unwrap(), &dense_matvec(&d, x)) <= 1e-9);
    }

    #[test]
    fn add_scaled_matches_dense((n, _, t) in triplets(12), (_, _, s) in triplets(12), alpha in -2.0..2.0f64, beta in -2.0..2.0f64) {
        let t: Vec<_> = t.into_iter().map(|(i, j, v)| (i % n, j % n, v)).collect();
        let s: Vec<_> = s.into_iter().map(|(i, j, v)| (i % n, j % n, v)).collect();
        let a = CsrMatrix::from_triplets(n, &t).unwrap();
        let b = CsrMatrix::from_triplets(n, &s).unwrap();
        let c = a.add_scaled(alpha, &b, beta).unwrap().to_dense();
        let (da, db) = (dense_from_triplets(n, n, &t), dense_from_triplets(n, n, &s));
        for i in 0..n {
            for j in 0..n {
                prop_assert!((c[i][j] - (alpha * da[i][j] + beta * db[i][j])).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn cholesky_solves_match_dense((n, g, b) in spd_system(12)) {
        let d = spd_from(n, &g);
        let a = CsrMatrix::from_dense(&d).pruned(0.0);
        let want = dense_solve(&d, &b);
        for ordering in [Ordering::Natural, Ordering::ReverseCuthillMcKee] {
            let f = SpdFactorization::new(&a, ordering).unwrap();
            let x = f.solve(&b).unwrap();
            prop_assert!(max_diff(&x, &want) <= 1e-9, "{ordering:?}");
        }
    }

    #[test]
    fn factor_reproduces_matrix((n, g, _) in spd_system(12)) {
        let d = spd_from(n, &g);
        let f = SpdFactorization::new(&CsrMatrix::from_dense(&d), Ordering::Natural).unwrap();
        let l = f.lower_dense();
        for i in 0..n {
            for j in 0..n {
                let llt: f64 = (0..n).map(|k| l[i][k] * l[j][k]).sum();
                prop_assert!((llt - d[i][j]).abs() <= 1e-9 * (1.0 + d[i][j].abs()));
            }
        }
    }

    #[test]
    fn multi_rhs_matches_dense_and_single_solves((n, g, b) in spd_system(12), cols in 1usize..6) {
        let d = spd_from(n, &g);
        let f = factorize_spd(&CsrMatrix::from_dense(&d)).unwrap();
        let rhs: Vec<Vec<f64>> = (0..cols).map(|c| b.iter().map(|v| v * (c as f64 + 1.0) - c as f64).collect()).collect();
        let many = f.solve_many(&rhs).unwrap();
        let mut par = rhs.clone();
        f.solve_many_par(&mut par).unwrap();
        for (k, r) in rhs.iter().enumerate() {
            let single = f.solve(r).unwrap();
            prop_assert!(max_diff(&many[k], &dense_solve(&d, r)) <= 1e-9);
            prop_assert_eq!(&many[k], &single);
            prop_assert_eq!(&par[k], &single);
        }
    }

    #[test]
    fn cg_agrees_with_cholesky((n, g, b) in spd_system(12)) {
        let a = CsrMatrix::from_dense(&spd_from(n, &g));
        let direct = factorize_spd(&a).unwrap().solve(&b).unwrap();
        let cg = cg_solve(&a, &b, 1e-12, 1000).unwrap();
        prop_assert!(cg.converged);
        prop_assert!(max_diff(&cg.x, &direct) <= 1e-9);
        prop_assert!(relative_residual(&a, &direct, &b).unwrap() <= 1e-10);
    }
}

#[test]
fn identical_columns_give_bit_equal_solutions() {
    let d = spd_from(6, &(0..36).map(|k| ((k * 7) % 5) as f64 - 2.0).collect::<Vec<_>>());
    let f = factorize_spd(&CsrMatrix::from_dense(&d)).unwrap();
    let b: Vec<f64> = (0..6).map(|k| k as f64 - 2.5).collect();
    let mut cols = vec![b.clone(); 5];
    f.solve_many_par(&mut cols).unwrap();
    assert!(cols.windows(2).all(|w| w[0] == w[1]));
    assert_eq!(f.solve(&b).unwrap(), f.solve(&b).unwrap());
}
