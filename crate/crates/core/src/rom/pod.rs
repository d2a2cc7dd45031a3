//! Proper orthogonal decomposition by the method of snapshots.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::fom::SnapshotSet;
use crate::linalg::{dot, norm2, symmetric_eigen, DenseMatrix};

/// Singular-value ratio below which modes are dropped.
pub const TRUNCATION_RATIO: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq)]
pub struct PodBasis {
    phi: DenseMatrix,
    singular_values: Vec<f64>,
    field: String,
    components: usize,
    requested_rank: usize,
}

impl PodBasis {
    /// Wraps an existing basis, checking orthonormality.
    pub fn from_parts(
        field: impl Into<String>,
        components: usize,
        phi: DenseMatrix,
        singular_values: Vec<f64>,
    ) -> Result<Self> {
        let basis = Self {
            requested_rank: phi.n_cols(),
            phi,
            singular_values,
            field: field.into(),
            components,
        };
        let err = basis.orthonormality_error();
        if !(err <= 1e-8) {
            return Err(Error::InvalidArgument(alloc::format!(
                "basis columns are not orthonormal (error {err:e})"
            )));
        }
        if components == 0 || basis.phi.n_rows() % components != 0 {
            return Err(Error::DimensionMismatch {
                context: "basis rows per component",
                expected: components,
                found: basis.phi.n_rows(),
            });
        }
        Ok(basis)
    }

    /// `N_h x N_r` mode matrix.
    pub fn phi(&self) -> &DenseMatrix {
        &self.phi
    }

    /// The full singular-value spectrum of the snapshot matrix, descending.
    pub fn singular_values(&self) -> &[f64] {
        &self.singular_values
    }

    pub fn field(&self) -> &str {
        &self.field
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn rank(&self) -> usize {
        self.phi.n_cols()
    }

    pub fn n_dofs(&self) -> usize {
        self.phi.n_rows()
    }

    pub fn n_cells(&self) -> usize {
        self.phi.n_rows() / self.components
    }

    /// True when fewer modes than requested were kept.
    pub fn truncated(&self) -> bool {
        self.rank() < self.requested_rank
    }

    pub fn requested_rank(&self) -> usize {
        self.requested_rank
    }

    /// `max |Phi^T Phi - I|`.
    pub fn orthonormality_error(&self) -> f64 {
        let r = self.rank();
        let cols: Vec<Vec<f64>> = (0..r).map(|j| self.phi.column(j)).collect();
        let mut worst = 0.0f64;
        for i in 0..r {
            for j in i..r {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot(&cols[i], &cols[j]) - target).abs());
            }
        }
        worst
    }

    /// Coefficients `Phi^T x`.
    pub fn project(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.phi.transpose_matvec(x)
    }

    /// Full reconstruction `Phi a`.
    pub fn expand(&self, a: &[f64]) -> Result<Vec<f64>> {
        self.phi.matvec(a)
    }
}

/// `X^T X` of the snapshot columns.
pub fn gram_matrix(snapshots: &SnapshotSet) -> DenseMatrix {
    let ns = snapshots.len();
    let rows = gram_rows(snapshots.columns(), 0, ns);
    DenseMatrix::from_row_major(ns, ns, symmetric_fill(ns, 0, &rows)).expect("square Gram matrix")
}

/// Upper-triangular Gram entries for rows `i0..i1`: row `i` holds
/// `<x_i, x_j>` for `j` in `i..ns`, rows concatenated. Disjoint row ranges
/// can be computed independently.
pub fn gram_rows(columns: &[Vec<f64>], i0: usize, i1: usize) -> Vec<f64> {
    let ns = columns.len();
    let nh = columns.first().map_or(0, Vec::len);
    let starts: Vec<usize> = (i0..=i1)
        .scan(0, |acc, i| {
            let s = *acc;
            *acc += ns.saturating_sub(i);
            Some(s)
        })
        .collect();
    let mut out = vec![0.0; starts[i1 - i0]];
    let mut add = |i: usize, j: usize, v: f64| out[starts[i - i0] + j - i] += v;
    // j panels of PANEL columns, k slabs of SLAB rows, 4 x 4 micro blocks
    let mut jp = i0;
    while jp < ns {
        let jp_end = (jp + PANEL).min(ns);
        let mut k0 = 0;
        while k0 < nh.max(1) {
            let k1 = (k0 + SLAB).min(nh);
            let mut i = i0;
            while i < i1.min(jp_end) {
                let bi = (i1.min(jp_end) - i).min(BLOCK);
                let mut j = jp;
                while j < jp_end {
                    let bj = (jp_end - j).min(BLOCK);
                    if j + bj <= i {
                        j += bj;
                        continue;
                    }
                    if bi == BLOCK && bj == BLOCK {
                        let a: [&[f64]; BLOCK] = core::array::from_fn(|r| &columns[i + r][k0..k1]);
                        let b: [&[f64]; BLOCK] = core::array::from_fn(|c| &columns[j + c][k0..k1]);
                        let d = block_dots(a, b);
                        for r in 0..BLOCK {
                            for c in 0..BLOCK {
                                if j + c >= i + r {
                                    add(i + r, j + c, d[r][c]);
                                }
                            }
                        }
                    } else {
                        for r in 0..bi {
                            for c in 0..bj {
                                if j + c >= i + r {
                                    add(i + r, j + c, dot(&columns[i + r][k0..k1], &columns[j + c][k0..k1]));
                                }
                            }
                        }
                    }
                    j += bj;
                }
                i += bi;
            }
            if nh == 0 {
                break;
            }
            k0 = k1;
        }
        jp = jp_end;
    }
    out
}

const PANEL: usize = 64;
const SLAB: usize = 512;

/// Expands rows produced by [`gram_rows`] (starting at row `i0`) into a full
/// symmetric row-major matrix of size `ns`.
pub fn symmetric_fill(ns: usize, i0: usize, upper: &[f64]) -> Vec<f64> {
    let mut g = vec![0.0; ns * ns];
    let mut pos = 0;
    let mut i = i0;
    while pos < upper.len() {
        for j in i..ns {
            let v = upper[pos + j - i];
            g[i * ns + j] = v;
            g[j * ns + i] = v;
        }
        pos += ns - i;
        i += 1;
    }
    g
}

const BLOCK: usize = 4;
const LANES: usize = 4;

/// All `BLOCK x BLOCK` dot products of `a[r]` and `b[c]`, with lane-wise
/// accumulators so the inner loop vectorizes.
fn block_dots(a: [&[f64]; BLOCK], b: [&[f64]; BLOCK]) -> [[f64; BLOCK]; BLOCK] {
    let n = a[0].len();
    let chunks = n / LANES;
    let mut acc = [[[0.0f64; LANES]; BLOCK]; BLOCK];
    for k in 0..chunks {
        let o = k * LANES;
        let av: [[f64; LANES]; BLOCK] = core::array::from_fn(|r| a[r][o..o + LANES].try_into().unwrap());
        let bv: [[f64; LANES]; BLOCK] = core::array::from_fn(|c| b[c][o..o + LANES].try_into().unwrap());
        for r in 0..BLOCK {
            for c in 0..BLOCK {
                for l in 0..LANES {
                    acc[r][c][l] += av[r][l] * bv[c][l];
                }
            }
        }
    }
    let mut out = [[0.0; BLOCK]; BLOCK];
    for r in 0..BLOCK {
        for c in 0..BLOCK {
            let mut s: f64 = acc[r][c].iter().sum();
            for k in chunks * LANES..n {
                s += a[r][k] * b[c][k];
            }
            out[r][c] = s;
        }
    }
    out
}

/// POD basis of rank `rank` from the snapshots, via their Gram matrix.
pub fn pod(snapshots: &SnapshotSet, rank: usize, components: usize) -> Result<PodBasis> {
    let gram = gram_matrix(snapshots);
    pod_from_gram(snapshots, &gram, rank, components)
}

/// Same as [`pod`] with a precomputed Gram matrix (which may come from a
/// parallel accumulation).
pub fn pod_from_gram(snapshots: &SnapshotSet, gram: &DenseMatrix, rank: usize, components: usize) -> Result<PodBasis> {
    let ns = snapshots.len();
    let nh = snapshots.n_dofs();
    if rank == 0 || rank > ns.min(nh) {
        return Err(Error::RankTooLarge {
            requested: rank,
            available: ns.min(nh),
        });
    }
    if gram.n_rows() != ns || gram.n_cols() != ns {
        return Err(Error::DimensionMismatch {
            context: "Gram matrix size",
            expected: ns,
            found: gram.n_rows(),
        });
    }
    let eig = symmetric_eigen(gram, rank)?;
    let singular_values: Vec<f64> = eig.values.iter().map(|&l| libm::sqrt(l.max(0.0))).collect();
    let sigma1 = singular_values[0];
    let cols = snapshots.columns();
    let mut modes: Vec<Vec<f64>> = Vec::with_capacity(rank);
    for k in 0..rank {
        let sigma = singular_values[k];
        if sigma1 == 0.0 || sigma / sigma1 < TRUNCATION_RATIO {
            break;
        }
        let v = &eig.vectors[k];
        let mut phi = vec![0.0; nh];
        for (j, col) in cols.iter().enumerate() {
            let w = v[j] / sigma;
            if w != 0.0 {
                for (p, x) in phi.iter_mut().zip(col) {
                    *p += w * x;
                }
            }
        }
        // two passes of modified Gram-Schmidt against the kept modes
        for _ in 0..2 {
            for m in &modes {
                let c = dot(m, &phi);
                for (p, q) in phi.iter_mut().zip(m) {
                    *p -= c * q;
                }
            }
        }
        let norm = norm2(&phi);
        if !(norm > 0.5) {
            // numerically dependent direction
            break;
        }
        for p in &mut phi {
            *p /= norm;
        }
        modes.push(phi);
    }
    if modes.is_empty() {
        return Err(Error::RankDeficient { rank: 0, required: rank });
    }
    Ok(PodBasis {
        phi: DenseMatrix::from_columns(nh, &modes)?,
        singular_values,
        field: String::from(snapshots.field()),
        components,
        requested_rank: rank,
    })
}

/// `||X - Phi Phi^T X||_F` for the leading `rank` modes.
pub fn projection_error(basis: &PodBasis, snapshots: &SnapshotSet, rank: usize) -> Result<f64> {
    let phi = basis.phi().leading_columns(rank);
    let mut total = 0.0;
    for col in snapshots.columns() {
        let a = phi.transpose_matvec(col)?;
        let rec = phi.matvec(&a)?;
        total += col.iter().zip(&rec).map(|(x, r)| (x - r) * (x - r)).sum::<f64>();
    }
    Ok(libm::sqrt(total))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_set(rows: usize, cols: usize, seed: u64) -> SnapshotSet {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut s = SnapshotSet::new("X", rows);
        for j in 0..cols {
            s.push(j as f64, (0..rows).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
        }
        s
    }

    #[test]
    fn repeated_snapshot_is_rank_one() {
        let x = vec![3.0, 4.0, 0.0, 12.0];
        let mut s = SnapshotSet::new("X", 4);
        for j in 0..5 {
            s.push(j as f64, x.clone()).unwrap();
        }
        let b = pod(&s, 1, 1).unwrap();
        let n = 13.0;
        let sign = b.phi().get(0, 0).signum();
        for i in 0..4 {
            assert!((b.phi().get(i, 0) - sign * x[i] / n).abs() < 1e-14);
        }
        assert!((b.singular_values()[0] - n * 5f64.sqrt()).abs() < 1e-12);
        // only one non-zero mode exists
        let b3 = pod(&s, 3, 1).unwrap();
        assert_eq!(b3.rank(), 1);
        assert!(b3.truncated());
    }

    #[test]
    fn subspace_matches_svd() {
        let s = random_set(30, 6, 5);
        let b = pod(&s, 3, 1).unwrap();
        assert!(b.orthonormality_error() <= 1e-10);
        let x = DMatrix::from_fn(30, 6, |i, j| s.column(j)[i]);
        let svd = x.svd(true, false);
        let mut order: Vec<usize> = (0..6).collect();
        order.sort_by(|&a, &c| svd.singular_values[c].partial_cmp(&svd.singular_values[a]).unwrap());
        let u = svd.u.unwrap();
        let uk = DMatrix::from_fn(30, 3, |i, j| u[(i, order[j])]);
        let proj_oracle = &uk * uk.transpose();
        let phi = DMatrix::from_row_slice(30, 3, b.phi().values());
        let proj = &phi * phi.transpose();
        assert!((proj - proj_oracle).amax() <= 1e-10);
        for k in 0..6 {
            assert!((b.singular_values()[k] - svd.singular_values[order[k]]).abs() <= 1e-10);
        }
    }

    #[test]
    fn energy_and_monotone_error() {
        let s = random_set(40, 8, 9);
        let b = pod(&s, 8, 1).unwrap();
        let energy: f64 = b.singular_values().iter().map(|v| v * v).sum();
        let frob: f64 = s.columns().iter().map(|c| dot(c, c)).sum();
        assert!((energy - frob).abs() / frob <= 1e-10);
        let mut prev = f64::INFINITY;
        for r in 1..=8 {
            let e = projection_error(&b, &s, r).unwrap();
            assert!(e <= prev + 1e-12);
            prev = e;
        }
        assert!(prev <= 1e-10 * frob.sqrt());
    }

    #[test]
    fn blocked_gram_matches_direct_dots() {
        let s = random_set(37, 11, 3);
        let g = gram_matrix(&s);
        for i in 0..11 {
            for j in 0..11 {
                let d = dot(s.column(i), s.column(j));
                assert!((g.get(i, j) - d).abs() <= 1e-12);
            }
        }
        let part = gram_rows(s.columns(), 5, 11);
        let filled = symmetric_fill(11, 5, &part);
        assert_eq!(filled[7 * 11 + 9], g.get(7, 9));
    }

    #[test]
    fn rank_checks() {
        let s = random_set(10, 3, 1);
        assert!(matches!(pod(&s, 4, 1), Err(Error::RankTooLarge { .. })));
        assert!(matches!(pod(&s, 0, 1), Err(Error::RankTooLarge { .. })));
    }
}
