//! Sparse assembly and Cholesky solver checks against dense oracles.

use lattice_skin_core::sparse::{assemble_csc, matvec, mean_diagonal, merge_entries, SpdSolver};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn dense_of(entries: &[(usize, usize, f64)], n: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    for &(r, c, v) in entries {
        m[(r, c)] += v;
    }
    m
}

#[test]
fn merge_sums_duplicates_in_order() {
    let entries = vec![(0, 0, 1.0), (1, 1, 2.0), (0, 0, 3.0), (1, 0, -1.0)];
    let mat = merge_entries(2, 2, entries.clone()).unwrap();
    let dense = dense_of(&entries, 2);
    for r in 0..2 {
        for c in 0..2 {
            let mut basis = vec![0.0; 2];
            basis[c] = 1.0;
            assert_eq!(matvec(&mat, &basis)[r], dense[(r, c)]);
        }
    }
}

#[test]
fn entry_out_of_bounds_is_rejected() {
    assert!(merge_entries(2, 2, vec![(2, 0, 1.0)]).is_err());
}

#[test]
fn solver_matches_dense_cholesky() {
    // SPD matrix: A = M^T M + I with a fixed M.
    let n = 8;
    let m = DMatrix::from_fn(n, n, |i, j| ((3 * i + 5 * j) % 7) as f64 / 7.0 - 0.4);
    let a = m.transpose() * &m + DMatrix::identity(n, n);
    let mut entries = Vec::new();
    for i in 0..n {
        for j in 0..n {
            entries.push((i, j, a[(i, j)]));
        }
    }
    let sp = merge_entries(n, n, entries).unwrap();
    let rhs: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
    let x = SpdSolver::new(&sp).unwrap().solve(&rhs);
    let x_ref = a.clone().cholesky().unwrap().solve(&DVector::from_column_slice(&rhs));
    for i in 0..n {
        assert!((x[i] - x_ref[i]).abs() < 1e-12, "component {i}: {} vs {}", x[i], x_ref[i]);
    }
    let diag_mean: f64 = (0..n).map(|i| a[(i, i)]).sum::<f64>() / n as f64;
    assert!((mean_diagonal(&sp) - diag_mean).abs() < 1e-14);
}

#[test]
fn indefinite_matrix_reports_singular() {
    let entries = vec![(0, 0, 1.0), (1, 1, -1.0)];
    let sp = merge_entries(2, 2, entries).unwrap();
    assert!(SpdSolver::new(&sp).is_err());
}

#[test]
fn assembly_is_deterministic_and_matches_sequential_merge() {
    let n = 40;
    let n_elems = 100;
    let elem = |e: usize| -> Vec<(usize, usize, f64)> {
        let i = (e * 7) % n;
        let j = (e * 13) % n;
        vec![(i, i, 1.0 + e as f64), (j, j, 2.0), (i.min(j), i.max(j), 0.5), (i.max(j), i.min(j), 0.5)]
    };
    let a = assemble_csc(n, n, n_elems, elem).unwrap();
    let b = assemble_csc(n, n, n_elems, elem).unwrap();
    assert_eq!(a.col_ptr(), b.col_ptr());
    assert_eq!(a.row_idx(), b.row_idx());
    assert_eq!(a.val(), b.val());

    let mut entries = Vec::new();
    for e in 0..n_elems {
        entries.extend(elem(e));
    }
    let dense = dense_of(&entries, n);
    for c in 0..n {
        let mut basis = vec![0.0; n];
        basis[c] = 1.0;
        let col = matvec(&a, &basis);
        for r in 0..n {
            assert!((col[r] - dense[(r, c)]).abs() < 1e-13);
        }
    }
}

#[cfg(feature = "parallel")]
#[test]
fn assembly_is_identical_across_thread_counts() {
    let n = 60;
    let elem = |e: usize| -> Vec<(usize, usize, f64)> {
        let i = (e * 11) % n;
        let j = (e * 17) % n;
        vec![(i, j, (e as f64).cos()), (j, i, (e as f64).cos()), (i, i, 1.0)]
    };
    let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let many = rayon::ThreadPoolBuilder::new().num_threads(8).build().unwrap();
    let a = single.install(|| assemble_csc(n, n, 500, elem).unwrap());
    let b = many.install(|| assemble_csc(n, n, 500, elem).unwrap());
    assert_eq!(a.val(), b.val());
    assert_eq!(a.row_idx(), b.row_idx());
}

proptest! {
    #[test]
    fn random_assembly_matches_dense(
        raw in proptest::collection::vec((0usize..12, 0usize..12, -5.0f64..5.0), 1..80)
    ) {
        let n = 12;
        let mat = merge_entries(n, n, raw.clone()).unwrap();
        let dense = dense_of(&raw, n);
        let x: Vec<f64> = (0..n).map(|i| 1.0 + i as f64).collect();
        let y = matvec(&mat, &x);
        let y_ref = dense * DVector::from_column_slice(&x);
        for i in 0..n {
            prop_assert!((y[i] - y_ref[i]).abs() < 1e-10);
        }
    }
}
