//! Compressed sparse row storage.

use alloc::vec;
use alloc::vec::Vec;

use super::dense::DenseMatrix;
use crate::error::{Error, Result};

/// Real matrix in compressed sparse row form.
///
/// Column indices are strictly increasing inside each row and duplicates are
/// never stored. Rows are cheap to slice, which is the only access pattern the
/// hyper-reduced assembly needs.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n_rows: usize,
    n_cols: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Builds a matrix from `(row, col, value)` triplets, summing duplicates.
    ///
    /// Entries are sorted by (row, column) with a stable sort, so duplicates are
    /// summed in their input order and the result is deterministic.
    pub fn from_triplets(
        n_rows: usize,
        n_cols: usize,
        entries: &[(usize, usize, f64)],
    ) -> Result<Self> {
        for &(row, col, _) in entries {
            if row >= n_rows || col >= n_cols {
                return Err(Error::IndexOutOfRange {
                    row,
                    col,
                    n_rows,
                    n_cols,
                });
            }
        }
        let mut sorted: Vec<(usize, usize, f64)> = entries.to_vec();
        sorted.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));

        let mut row_offsets = vec![0usize; n_rows + 1];
        let mut col_indices = Vec::with_capacity(sorted.len());
        let mut values: Vec<f64> = Vec::with_capacity(sorted.len());
        let mut last: Option<(usize, usize)> = None;
        for (row, col, value) in sorted {
            if last == Some((row, col)) {
                *values.last_mut().expect("duplicate follows an entry") += value;
            } else {
                col_indices.push(col);
                values.push(value);
                row_offsets[row + 1] += 1;
                last = Some((row, col));
            }
        }
        for r in 0..n_rows {
            row_offsets[r + 1] += row_offsets[r];
        }
        Ok(Self {
            n_rows,
            n_cols,
            row_offsets,
            col_indices,
            values,
        })
    }

    /// Assembles a matrix from per-row entry lists that are already sorted by
    /// column and free of duplicates.
    pub(crate) fn from_sorted_rows(n_cols: usize, rows: Vec<Vec<(usize, f64)>>) -> Self {
        let n_rows = rows.len();
        let nnz = rows.iter().map(Vec::len).sum();
        let mut row_offsets = Vec::with_capacity(n_rows + 1);
        let mut col_indices = Vec::with_capacity(nnz);
        let mut values = Vec::with_capacity(nnz);
        row_offsets.push(0);
        for row in rows {
            for (c, v) in row {
                debug_assert!(c < n_cols);
                col_indices.push(c);
                values.push(v);
            }
            row_offsets.push(col_indices.len());
        }
        Self {
            n_rows,
            n_cols,
            row_offsets,
            col_indices,
            values,
        }
    }

    /// Wraps raw CSR arrays after checking every structural invariant.
    pub fn from_raw_parts(
        n_rows: usize,
        n_cols: usize,
        row_offsets: Vec<usize>,
        col_indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if row_offsets.len() != n_rows + 1 {
            return Err(Error::MalformedSparse("row_offsets length must be n_rows + 1"));
        }
        if row_offsets[0] != 0 || row_offsets[n_rows] != values.len() {
            return Err(Error::MalformedSparse("row_offsets must span 0..nnz"));
        }
        if col_indices.len() != values.len() {
            return Err(Error::MalformedSparse("col_indices and values differ in length"));
        }
        for r in 0..n_rows {
            let (start, end) = (row_offsets[r], row_offsets[r + 1]);
            if start > end || end > values.len() {
                return Err(Error::MalformedSparse("row_offsets must be non-decreasing"));
            }
            let cols = &col_indices[start..end];
            if cols.iter().any(|&c| c >= n_cols) {
                return Err(Error::MalformedSparse("column index out of range"));
            }
            if cols.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::MalformedSparse(
                    "column indices must be strictly increasing within a row",
                ));
            }
        }
        Ok(Self {
            n_rows,
            n_cols,
            row_offsets,
            col_indices,
            values,
        })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            n_rows: n,
            n_cols: n,
            row_offsets: (0..=n).collect(),
            col_indices: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Self {
            n_rows,
            n_cols,
            row_offsets: vec![0; n_rows + 1],
            col_indices: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Mutable values; the sparsity pattern stays fixed.
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Column indices and values of row `i`.
    #[inline]
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (start, end) = (self.row_offsets[i], self.row_offsets[i + 1]);
        (&self.col_indices[start..end], &self.values[start..end])
    }

    pub fn row_nnz(&self, i: usize) -> usize {
        self.row_offsets[i + 1] - self.row_offsets[i]
    }

    /// Stored value at `(i, j)`, zero when absent.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(k) => vals[k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n_rows.min(self.n_cols))
            .map(|i| self.get(i, i))
            .collect()
    }

    /// `y = A x`.
    pub fn spmv(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut y = vec![0.0; self.n_rows];
        self.spmv_into(x, &mut y)?;
        Ok(y)
    }

    pub fn spmv_into(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        if x.len() != self.n_cols {
            return Err(Error::DimensionMismatch {
                context: "spmv input",
                expected: self.n_cols,
                found: x.len(),
            });
        }
        if y.len() != self.n_rows {
            return Err(Error::DimensionMismatch {
                context: "spmv output",
                expected: self.n_rows,
                found: y.len(),
            });
        }
        for (i, yi) in y.iter_mut().enumerate() {
            let (cols, vals) = self.row(i);
            *yi = cols.iter().zip(vals).map(|(&j, &a)| a * x[j]).sum();
        }
        Ok(())
    }

    /// `z_k = sum_j A_ij * phi[j, k]` over the stored entries of row `i`.
    pub fn row_dot_basis(&self, i: usize, phi: &DenseMatrix) -> Result<Vec<f64>> {
        let mut z = vec![0.0; phi.n_cols()];
        self.row_dot_basis_into(i, phi, &mut z)?;
        Ok(z)
    }

    /// In-place variant of [`row_dot_basis`](Self::row_dot_basis). Returns the
    /// number of multiply-adds performed, which is `nnz(row i) * phi.n_cols()`.
    pub fn row_dot_basis_into(&self, i: usize, phi: &DenseMatrix, z: &mut [f64]) -> Result<u64> {
        if phi.n_rows() != self.n_cols {
            return Err(Error::DimensionMismatch {
                context: "row_dot_basis basis rows",
                expected: self.n_cols,
                found: phi.n_rows(),
            });
        }
        if z.len() != phi.n_cols() {
            return Err(Error::DimensionMismatch {
                context: "row_dot_basis output",
                expected: phi.n_cols(),
                found: z.len(),
            });
        }
        if i >= self.n_rows {
            return Err(Error::IndexOutOfRange {
                row: i,
                col: 0,
                n_rows: self.n_rows,
                n_cols: self.n_cols,
            });
        }
        z.iter_mut().for_each(|v| *v = 0.0);
        let (cols, vals) = self.row(i);
        for (&j, &a) in cols.iter().zip(vals) {
            for (zk, &p) in z.iter_mut().zip(phi.row(j)) {
                *zk += a * p;
            }
        }
        Ok((cols.len() * phi.n_cols()) as u64)
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut d = DenseMatrix::zeros(self.n_rows, self.n_cols);
        for i in 0..self.n_rows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                d.set(i, j, v);
            }
        }
        d
    }

    /// Row-subset copy keeping the global column space.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Self> {
        let mut out = Vec::with_capacity(rows.len());
        for &r in rows {
            if r >= self.n_rows {
                return Err(Error::IndexOutOfRange {
                    row: r,
                    col: 0,
                    n_rows: self.n_rows,
                    n_cols: self.n_cols,
                });
            }
            let (cols, vals) = self.row(r);
            out.push(cols.iter().copied().zip(vals.iter().copied()).collect());
        }
        Ok(Self::from_sorted_rows(self.n_cols, out))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_triplets(rng: &mut ChaCha8Rng, n: usize, per_row: usize) -> Vec<(usize, usize, f64)> {
        let mut t = Vec::new();
        for i in 0..n {
            for _ in 0..per_row {
                t.push((i, rng.random_range(0..n), rng.random_range(-1.0..1.0)));
            }
        }
        t
    }

    fn dense_accumulate(n: usize, t: &[(usize, usize, f64)]) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; n]; n];
        for &(i, j, v) in t {
            d[i][j] += v;
        }
        d
    }

    #[test]
    fn identity_from_triplets() {
        let a = SparseMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (1, 1, 1.0)]).unwrap();
        assert_eq!(a, SparseMatrix::identity(2));
    }

    #[test]
    fn duplicates_are_summed() {
        let a = SparseMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (0, 0, 2.0)]).unwrap();
        assert_eq!(a.nnz(), 1);
        assert_eq!(a.get(0, 0), 3.0);
    }

    #[test]
    fn out_of_range_triplet_rejected() {
        let err = SparseMatrix::from_triplets(2, 2, &[(2, 0, 1.0)]).unwrap_err();
        assert!(matches!(err, Error::IndexOutOfRange { row: 2, .. }));
    }

    #[test]
    fn random_matches_dense_accumulation() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let t = random_triplets(&mut rng, 20, 5);
        let a = SparseMatrix::from_triplets(20, 20, &t).unwrap();
        let d = dense_accumulate(20, &t);
        let ad = a.to_dense();
        for i in 0..20 {
            for j in 0..20 {
                assert_eq!(ad.get(i, j), d[i][j]);
            }
            let (cols, _) = a.row(i);
            assert!(cols.windows(2).all(|w| w[0] < w[1]));
        }
        assert_eq!(a.row_offsets()[20], a.nnz());
    }

    #[test]
    fn spmv_identity_zero_and_dense() {
        let x: Vec<f64> = (0..5).map(|i| i as f64 - 1.5).collect();
        assert_eq!(SparseMatrix::identity(5).spmv(&x).unwrap(), x);
        assert_eq!(SparseMatrix::zeros(5, 5).spmv(&x).unwrap(), vec![0.0; 5]);

        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let t = random_triplets(&mut rng, 20, 5);
        let a = SparseMatrix::from_triplets(20, 20, &t).unwrap();
        let d = dense_accumulate(20, &t);
        let x: Vec<f64> = (0..20).map(|_| rng.random_range(-1.0..1.0)).collect();
        let y = a.spmv(&x).unwrap();
        let oracle: Vec<f64> = d
            .iter()
            .map(|row| row.iter().zip(&x).map(|(a, b)| a * b).sum())
            .collect();
        let num: f64 = y.iter().zip(&oracle).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let den: f64 = oracle.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(num / den <= 1e-14, "relative error {}", num / den);
    }

    #[test]
    fn spmv_dimension_mismatch() {
        assert!(matches!(
            SparseMatrix::identity(3).spmv(&[1.0, 2.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn row_dot_basis_cases() {
        let phi = DenseMatrix::from_fn(5, 2, |i, k| (i * 2 + k) as f64 + 0.5);
        let z = SparseMatrix::identity(5).row_dot_basis(3, &phi).unwrap();
        assert_eq!(z, phi.row(3));

        let a = SparseMatrix::from_triplets(1, 4, &[(0, 2, 2.0)]).unwrap();
        let phi4 = DenseMatrix::from_fn(4, 2, |i, k| (i + 10 * k) as f64);
        let z = a.row_dot_basis(0, &phi4).unwrap();
        assert_eq!(z, vec![2.0 * phi4.get(2, 0), 2.0 * phi4.get(2, 1)]);

        let bad = DenseMatrix::zeros(3, 2);
        assert!(SparseMatrix::identity(5).row_dot_basis(0, &bad).is_err());
    }

    #[test]
    fn row_dot_basis_matches_dense_product_and_counts() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let t = random_triplets(&mut rng, 20, 5);
        let a = SparseMatrix::from_triplets(20, 20, &t).unwrap();
        let d = dense_accumulate(20, &t);
        let phi = DenseMatrix::from_fn(20, 3, |_, _| rng.random_range(-1.0..1.0));
        for i in 0..20 {
            let mut z = vec![0.0; 3];
            let madds = a.row_dot_basis_into(i, &phi, &mut z).unwrap();
            assert_eq!(madds, (a.row_nnz(i) * 3) as u64);
            for k in 0..3 {
                let oracle: f64 = (0..20).map(|j| d[i][j] * phi.get(j, k)).sum();
                let scale = oracle.abs().max(1e-300);
                assert!((z[k] - oracle).abs() / scale <= 1e-14 || (z[k] - oracle).abs() <= 1e-15);
            }
        }
    }

    #[test]
    fn raw_parts_validation() {
        assert!(SparseMatrix::from_raw_parts(1, 3, vec![0, 2], vec![2, 1], vec![1.0, 1.0]).is_err());
        assert!(SparseMatrix::from_raw_parts(1, 3, vec![0, 2], vec![1, 2], vec![1.0, 1.0]).is_ok());
        assert!(SparseMatrix::from_raw_parts(1, 3, vec![0, 1], vec![3], vec![1.0]).is_err());
    }

    proptest::proptest! {
        #[test]
        fn triplet_ingestion_matches_dense(
            entries in proptest::collection::vec((0usize..8, 0usize..6, -10.0f64..10.0), 0..40)
        ) {
            let a = SparseMatrix::from_triplets(8, 6, &entries).unwrap();
            let mut d = vec![vec![0.0; 6]; 8];
            let mut touched = vec![vec![false; 6]; 8];
            for &(i, j, v) in &entries { d[i][j] += v; touched[i][j] = true; }
            let nnz = touched.iter().flatten().filter(|&&t| t).count();
            proptest::prop_assert_eq!(a.nnz(), nnz);
            for i in 0..8 { for j in 0..6 {
                proptest::prop_assert!((a.get(i, j) - d[i][j]).abs() <= 1e-12);
            }}
        }
    }
}
