mod common;

use std::time::Instant;

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;
use sparse_nmf::init::*;
use sparse_nmf::matrix::{centroid_decomposition, cosine_dispersion, truncated_svd, DenseMatrix, SparseMatrix};
use sparse_nmf::NmfError;

fn unit(v: &[f64]) -> Vec<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter().map(|x| x / n).collect()
}

/// Columns scattered around `centers` with small nonnegative noise.
fn clustered(seed: u64, dim: usize, per_center: &[usize], spread: f64) -> (SparseMatrix, Vec<usize>) {
    let mut r = common::rng(seed);
    let centers: Vec<Vec<f64>> = per_center
        .iter()
        .enumerate()
        .map(|(c, _)| (0..dim).map(|i| if i % per_center.len() == c { 1.0 + r.random::<f64>() } else { 0.05 * r.random::<f64>() }).collect())
        .collect();
    let mut cols = Vec::new();
    let mut labels = Vec::new();
    for (c, &count) in per_center.iter().enumerate() {
        for _ in 0..count {
            cols.push(centers[c].iter().map(|x| x + spread * r.random::<f64>()).collect::<Vec<_>>());
            labels.push(c);
        }
    }
    let d = DenseMatrix::from_columns(dim, &cols);
    (common::dense_to_sparse(&d), labels)
}

/// Σ over clusters of ‖Σ unit columns‖, the best spherical objective for a
/// fixed partition.
fn spherical_objective(units: &[Vec<f64>], labels: &[usize], k: usize) -> f64 {
    let dim = units[0].len();
    let mut sums = vec![vec![0.0; dim]; k];
    for (u, &l) in units.iter().zip(labels) {
        for (s, x) in sums[l].iter_mut().zip(u) {
            *s += x;
        }
    }
    sums.iter().map(|s| s.iter().map(|x| x * x).sum::<f64>().sqrt()).sum()
}

#[test]
fn random_init_range_and_mean() {
    let w = init_random(1000, 100, 5);
    assert!(w.as_slice().iter().all(|&x| x > 0.0 && x < 1.0));
    assert_eq!(w.density(), 1.0);
    let mean = w.as_slice().iter().sum::<f64>() / 1e5;
    assert!((mean - 0.5).abs() <= 0.01, "{mean}");
    assert_eq!(init_random(10, 3, 2), init_random(10, 3, 2));
}

#[test]
fn acol_single_column_copies() {
    let a = common::random_sparse(1, 15, 12, 0.3);
    let w = init_random_acol(&a, 4, 1, 8).unwrap();
    for j in 0..4 {
        let col = w.column(j);
        assert!((0..12).any(|d| a.column_dense(d) == col));
    }
}

#[test]
fn acol_identical_columns() {
    let col: Vec<f64> = vec![0.0, 2.0, 1.0, 0.0, 5.0];
    let d = DenseMatrix::from_columns(5, &vec![col.clone(); 9]);
    let a = common::dense_to_sparse(&d);
    for p in [1, 4, 9] {
        let w = init_random_acol(&a, 3, p, p as u64).unwrap();
        for j in 0..3 {
            for (x, y) in w.column(j).iter().zip(&col) {
                assert!((x - y).abs() <= 1e-12);
            }
        }
    }
}

#[test]
fn acol_full_average_is_mean_column() {
    let a = common::random_sparse(2, 10, 7, 0.5);
    let d = a.to_dense();
    let w = init_random_acol(&a, 3, 7, 0).unwrap();
    for i in 0..10 {
        let mean = d.row(i).iter().sum::<f64>() / 7.0;
        for j in 0..3 {
            assert!((w[(i, j)] - mean).abs() <= 1e-12);
        }
    }
    assert!(matches!(init_random_acol(&a, 3, 8, 0), Err(NmfError::PTooLarge { p: 8, available: 7 })));
}

#[test]
fn acol_sparser_than_random_on_sparse_data() {
    let a = common::random_sparse(3, 400, 300, 0.02);
    let w = init_random_acol(&a, 10, DEFAULT_P, 1).unwrap();
    assert!(w.density() < 1.0);
    assert_eq!(init_random(400, 10, 1).density(), 1.0);
}

/// Projected-gradient nonnegative least squares residual of `b` against the
/// columns of `m`.
fn nnls_residual(m: &DenseMatrix, b: &[f64]) -> f64 {
    let n = m.cols();
    let mt = m.transpose();
    let g = mt.matmul(m).unwrap();
    let step = 1.0 / (0..n).map(|i| g.row(i).iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max);
    let bm: Vec<f64> = (0..n).map(|j| (0..m.rows()).map(|i| m[(i, j)] * b[i]).sum()).collect();
    let mut x = vec![0.0; n];
    for _ in 0..20000 {
        for j in 0..n {
            let grad: f64 = g.row(j).iter().zip(&x).map(|(a, b)| a * b).sum::<f64>() - bm[j];
            x[j] = (x[j] - step * grad).max(0.0);
        }
    }
    (0..m.rows())
        .map(|i| {
            let r = b[i] - m.row(i).iter().zip(&x).map(|(a, b)| a * b).sum::<f64>();
            r * r
        })
        .sum::<f64>()
        .sqrt()
}

#[test]
fn acol_columns_lie_in_cone_of_data() {
    let a = common::random_sparse(4, 12, 8, 0.6);
    let w = init_random_acol(&a, 3, 3, 6).unwrap();
    let d = a.to_dense();
    for j in 0..3 {
        let col = w.column(j);
        let norm = col.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!(nnls_residual(&d, &col) <= 1e-6 * norm.max(1.0));
    }
}

#[test]
fn random_c_singleton_pool() {
    let mut t = vec![(0, 3, 100.0)];
    for j in 0..10 {
        if j != 3 {
            t.push((j % 4, j, 0.5));
        }
    }
    let a = SparseMatrix::from_triplets(4, 10, &t).unwrap();
    assert_eq!(longest_columns(&a, 0.05), vec![3]);
    let w = init_random_c(&a, 3, 1, 0, 0.05).unwrap();
    for j in 0..3 {
        assert_eq!(w.column(j), a.column_dense(3));
    }
    assert!(matches!(init_random_c(&a, 3, 2, 0, 0.05), Err(NmfError::PTooLarge { .. })));
}

#[test]
fn random_c_ties_prefer_lower_index() {
    let d = DenseMatrix::from_columns(2, &[vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0], vec![0.6, 0.8]]);
    let a = common::dense_to_sparse(&d);
    assert_eq!(longest_columns(&a, 0.5), vec![0, 1]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pool_matches_full_sort(m in 1usize..10, n in 1usize..40, frac in 0.01f64..1.0, seed in any::<u64>()) {
        // integer-valued entries make norm ties common
        let mut r = common::rng(seed);
        let d = DenseMatrix::from_fn(m, n, |_, _| if r.random::<f64>() < 0.4 { r.random_range(1..3) as f64 } else { 0.0 });
        let a = common::dense_to_sparse(&d);
        let norms: Vec<f64> = (0..n).map(|j| d.column(j).iter().map(|x| x * x).sum::<f64>()).collect();
        let mut oracle: Vec<usize> = (0..n).collect();
        oracle.sort_by(|&x, &y| norms[y].partial_cmp(&norms[x]).unwrap().then(x.cmp(&y)));
        let size = ((frac * n as f64).ceil() as usize).max(1);
        oracle.truncate(size);
        prop_assert_eq!(longest_columns(&a, frac), oracle);
    }

    #[test]
    fn initializers_nonnegative_finite_deterministic(name_idx in 0usize..6, seed in any::<u64>()) {
        let a = common::random_sparse(seed, 25, 20, 0.3);
        let strategy = InitStrategy::from_name(InitStrategy::NAMES[name_idx], 3, 0.5).unwrap();
        let init = Initializer::new(strategy, seed);
        match init.build(&a, 3) {
            Ok(w) => {
                prop_assert_eq!(w.shape(), (25, 3));
                prop_assert!(w.is_finite() && w.min_value() >= 0.0);
                prop_assert_eq!(init.build(&a, 3).unwrap(), w);
            }
            Err(NmfError::DegenerateInput(_)) => {}
            Err(e) => prop_assert!(false, "{}", e),
        }
    }
}

#[test]
fn centroid_matches_brute_force_partition() {
    let (a, _) = clustered(5, 6, &[11, 9], 0.4);
    let units: Vec<Vec<f64>> = (0..20).map(|j| unit(&a.column_dense(j))).collect();
    let mut best = 0.0f64;
    let mut labels = vec![0usize; 20];
    for mask in 0u32..(1 << 19) {
        for (j, l) in labels.iter_mut().enumerate().skip(1) {
            *l = ((mask >> (j - 1)) & 1) as usize;
        }
        best = best.max(spherical_objective(&units, &labels, 2));
    }
    let dec = centroid_decomposition(&a, 2, 3).unwrap();
    let ours: Vec<usize> = dec.assignments.iter().map(|x| x.unwrap()).collect();
    assert!((spherical_objective(&units, &ours, 2) - best).abs() <= 1e-6);
    assert!((dec.objective - best).abs() <= 1e-6, "{} vs {best}", dec.objective);
}

#[test]
fn centroid_beats_random_partitions() {
    let (a, _) = clustered(6, 9, &[20, 15, 15], 0.6);
    let dec = centroid_decomposition(&a, 3, 1).unwrap();
    let ours = cosine_dispersion(&a, &dec.assignments, 3);
    let mut r = common::rng(99);
    for _ in 0..100 {
        let mut labels: Vec<usize> = (0..50).map(|j| j % 3).collect();
        labels.shuffle(&mut r);
        let random: Vec<Option<usize>> = labels.into_iter().map(Some).collect();
        assert!(ours <= cosine_dispersion(&a, &random, 3));
    }
}

#[test]
fn centroid_block_supports() {
    let mut t = Vec::new();
    for j in 0..6 {
        for i in 0..3 {
            let row = if j < 3 { i } else { 3 + i };
            t.push((row, j, 1.0 + ((i + j) % 3) as f64));
        }
    }
    let a = SparseMatrix::from_triplets(6, 6, &t).unwrap();
    let w = init_centroid(&a, 2, 4).unwrap();
    for c in 0..2 {
        let col = w.column(c);
        let top = col[..3].iter().any(|&x| x > 0.0);
        let bottom = col[3..].iter().any(|&x| x > 0.0);
        assert!(top != bottom, "{col:?}");
    }
}

#[test]
fn centroid_singletons_are_normalized_columns() {
    let a = common::random_sparse(7, 8, 5, 0.7);
    let w = init_centroid(&a, 5, 2).unwrap();
    for j in 0..5 {
        let target = unit(&a.column_dense(j));
        assert!((0..5).any(|c| w.column(c).iter().zip(&target).all(|(x, y)| (x - y).abs() <= 1e-12)));
    }
}

#[test]
fn svd_centroid_identity_v() {
    let a = common::random_sparse(8, 9, 4, 0.8);
    let w = init_svd_centroid(&a, &DenseMatrix::identity(4), 4, 0).unwrap();
    for j in 0..4 {
        let target = unit(&a.column_dense(j));
        assert!((0..4).any(|c| w.column(c).iter().zip(&target).all(|(x, y)| (x - y).abs() <= 1e-12)));
    }
    assert!(matches!(init_svd_centroid(&a, &DenseMatrix::identity(3), 3, 0), Err(NmfError::DimensionMismatch(_))));
}

#[test]
fn svd_centroid_groups_duplicate_documents() {
    let (a, _) = clustered(9, 8, &[6, 6], 0.3);
    let d = a.to_dense();
    let mut cols: Vec<Vec<f64>> = (0..12).map(|j| d.column(j)).collect();
    cols.push(cols[4].clone());
    let a = common::dense_to_sparse(&DenseMatrix::from_columns(8, &cols));
    let svd = truncated_svd(&a, 2, 1).unwrap();
    let dec = centroid_decomposition(&svd.v.transpose(), 2, 5).unwrap();
    assert_eq!(dec.assignments[4], dec.assignments[12]);
}

#[test]
fn svd_centroid_much_faster_than_centroid() {
    let mut r = common::rng(2000);
    let (m, n, k) = (600, 2000, 10);
    let mut t = Vec::new();
    for j in 0..n {
        let topic = j % k;
        for i in 0..m {
            let p = if i % k == topic { 0.6 } else { 0.1 };
            if r.random::<f64>() < p {
                t.push((i, j, r.random_range(1..5) as f64));
            }
        }
    }
    let a = SparseMatrix::from_triplets(m, n, &t).unwrap();
    let v = truncated_svd(&a, k, 0).unwrap().v;

    // interleaved so both sides see the same machine load
    let time = |f: &dyn Fn()| {
        let s = Instant::now();
        f();
        s.elapsed().as_secs_f64()
    };
    let (mut slow, mut fast) = (f64::INFINITY, f64::INFINITY);
    for _ in 0..15 {
        slow = slow.min(time(&|| {
            init_centroid(&a, k, 1).unwrap();
        }));
        fast = fast.min(time(&|| {
            init_svd_centroid(&a, &v, k, 1).unwrap();
        }));
    }
    assert!(slow >= 10.0 * fast, "centroid {slow:.4}s vs svd-centroid {fast:.4}s");
}

#[test]
fn cooccurrence_identity() {
    let a = SparseMatrix::identity(4);
    let c = a.mul_self_transpose();
    assert_eq!(c, SparseMatrix::identity(4));
    let w = init_cooccurrence(&a, 4, 0).unwrap();
    let mut cols: Vec<Vec<f64>> = (0..4).map(|j| w.column(j)).collect();
    cols.sort_by(|x, y| y.partial_cmp(x).unwrap());
    assert_eq!(DenseMatrix::from_columns(4, &cols), DenseMatrix::identity(4));
}

#[test]
fn cooccurrence_matches_brute_force() {
    let a = common::random_sparse(10, 10, 8, 0.4);
    let d = a.to_dense();
    let c = a.mul_self_transpose().to_dense();
    for t1 in 0..10 {
        for t2 in 0..10 {
            let brute: f64 = (0..8).map(|doc| d[(t1, doc)] * d[(t2, doc)]).sum();
            assert!((c[(t1, t2)] - brute).abs() <= 1e-12);
            assert_eq!(c[(t1, t2)], c[(t2, t1)]);
        }
    }
}

#[test]
fn cooccurrence_refuses_huge_products() {
    let t: Vec<_> = (0..25_000).map(|i| (i, 0, 1.0)).chain([(0, 1, 1.0)]).collect();
    let a = SparseMatrix::from_triplets(25_000, 2, &t).unwrap();
    assert!(matches!(init_cooccurrence(&a, 2, 0), Err(NmfError::ResourceLimit(_))));
}
