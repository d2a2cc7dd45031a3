//! Gram matrix of a snapshot set over a worker pool.

use hrom_core::fom::SnapshotSet;
use hrom_core::linalg::DenseMatrix;
use hrom_core::rom::pod::{gram_rows, symmetric_fill};
use rayon::prelude::*;

/// Rows per work item. Fixed, so the result does not depend on the number of
/// workers.
const CHUNK: usize = 32;

/// `X^T X` computed in row chunks on `threads` workers.
pub fn gram_matrix(snapshots: &SnapshotSet, threads: usize) -> DenseMatrix {
    let ns = snapshots.len();
    let cols = snapshots.columns();
    let chunks: Vec<(usize, usize)> = (0..ns).step_by(CHUNK).map(|i| (i, (i + CHUNK).min(ns))).collect();
    let compute = || -> Vec<Vec<f64>> { chunks.par_iter().map(|&(i0, i1)| gram_rows(cols, i0, i1)).collect() };
    let parts = match rayon::ThreadPoolBuilder::new().num_threads(threads.max(1)).build() {
        Ok(pool) => pool.install(compute),
        Err(_) => compute(),
    };
    let upper: Vec<f64> = parts.concat();
    DenseMatrix::from_row_major(ns, ns, symmetric_fill(ns, 0, &upper)).expect("square Gram matrix")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn independent_of_thread_count_and_matches_dots() {
        let mut s = SnapshotSet::new("X", 37);
        for j in 0..70 {
            s.push(j as f64, (0..37).map(|i| ((i * 13 + j * 7) % 17) as f64 - 8.0).collect()).unwrap();
        }
        let g1 = gram_matrix(&s, 1);
        let g3 = gram_matrix(&s, 3);
        assert_eq!(g1, g3);
        for (i, j) in [(0, 0), (5, 64), (69, 33)] {
            let d: f64 = s.column(i).iter().zip(s.column(j)).map(|(a, b)| a * b).sum();
            assert_eq!(g1.get(i, j), d);
        }
    }
}
