//! Envelope (variable-band) sparse Cholesky factorization.
//!
//! The matrix is symmetrically permuted with a fill-reducing ordering and
//! factored as `P A P^T = L L^T`. Fill is confined to the row envelope, so
//! each row of `L` is stored contiguously from its first nonzero column to
//! the diagonal. The factor is immutable and can be shared across threads;
//! every solve owns its own buffers.

use rayon::prelude::*;

use super::ordering::{reverse_cuthill_mckee, Permutation};
use super::CsrMatrix;
use crate::error::{Error, Result};

/// Pivots at or below this fraction of the largest diagonal entry are
/// rejected.
pub const PIVOT_TOLERANCE: f64 = 1e-13;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Ordering {
    Natural,
    #[default]
    ReverseCuthillMcKee,
}

#[derive(Clone, Debug)]
pub struct SpdFactorization {
    n: usize,
    permutation: Permutation,
    /// First stored column of each row of `L`.
    first: Vec<usize>,
    /// Offset of each row in `values`; `row_start[n]` is the total length.
    row_start: Vec<usize>,
    values: Vec<f64>,
}

pub fn factorize_spd(a: &CsrMatrix) -> Result<SpdFactorization> {
    SpdFactorization::new(a, Ordering::ReverseCuthillMcKee)
}

impl SpdFactorization {
    pub fn new(a: &CsrMatrix, ordering: Ordering) -> Result<Self> {
        let (nr, nc) = a.shape();
        if nr != nc {
            return Err(Error::ShapeMismatch {
                left: (nr, nc),
                right: (nc, nr),
            });
        }
        let n = nr;
        let permutation = match ordering {
            Ordering::Natural => Permutation::identity(n),
            Ordering::ReverseCuthillMcKee => reverse_cuthill_mckee(a),
        };

        // envelope of the permuted lower triangle
        let mut first = vec![0usize; n];
        for (i, f) in first.iter_mut().enumerate() {
            let old = permutation.perm[i];
            *f = a
                .row(old)
                .filter(|&(_, v)| v != 0.0)
                .map(|(j, _)| permutation.inverse[j])
                .filter(|&j| j <= i)
                .min()
                .unwrap_or(i);
        }
        let mut row_start = Vec::with_capacity(n + 1);
        row_start.push(0);
        for i in 0..n {
            row_start.push(row_start[i] + (i - first[i] + 1));
        }
        let mut values = vec![0.0; row_start[n]];
        let mut max_diag: f64 = 0.0;
        for i in 0..n {
            let old = permutation.perm[i];
            for (j, v) in a.row(old) {
                let jn = permutation.inverse[j];
                if jn <= i {
                    values[row_start[i] + jn - first[i]] = v;
                }
                if jn == i {
                    max_diag = max_diag.max(v.abs());
                }
            }
        }
        let tol = PIVOT_TOLERANCE * max_diag;

        for i in 0..n {
            let fi = first[i];
            let (done, rest) = values.split_at_mut(row_start[i]);
            let row_i = &mut rest[..i - fi + 1];
            for j in fi..i {
                let fj = first[j];
                let k0 = fi.max(fj);
                let row_j = &done[row_start[j]..row_start[j + 1]];
                let dot: f64 = row_i[k0 - fi..j - fi]
                    .iter()
                    .zip(&row_j[k0 - fj..j - fj])
                    .map(|(a, b)| a * b)
                    .sum();
                let diag_j = row_j[j - fj];
                row_i[j - fi] = (row_i[j - fi] - dot) / diag_j;
            }
            let sq: f64 = row_i[..i - fi].iter().map(|v| v * v).sum();
            let d = row_i[i - fi] - sq;
            if !(d > tol) {
                return Err(Error::NotSpd {
                    index: permutation.perm[i],
                    value: d,
                });
            }
            row_i[i - fi] = d.sqrt();
        }

        Ok(SpdFactorization {
            n,
            permutation,
            first,
            row_start,
            values,
        })
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    /// Stored entries of `L`, including the diagonal.
    pub fn factor_len(&self) -> usize {
        self.values.len()
    }

    pub fn permutation(&self) -> &Permutation {
        &self.permutation
    }

    /// Dense `L` in permuted numbering.
    pub fn lower_dense(&self) -> Vec<Vec<f64>> {
        let mut l = vec![vec![0.0; self.n]; self.n];
        for (i, row) in l.iter_mut().enumerate() {
            for k in self.first[i]..=i {
                row[k] = self.values[self.row_start[i] + k - self.first[i]];
            }
        }
        l
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                actual: len,
            });
        }
        Ok(())
    }

    /// Overwrites `b` with `A^{-1} b`; `work` is resized as needed.
    pub fn solve_in_place(&self, b: &mut [f64], work: &mut Vec<f64>) -> Result<()> {
        self.check_len(b.len())?;
        let n = self.n;
        work.clear();
        work.extend(self.permutation.perm.iter().map(|&old| b[old]));
        let y = work.as_mut_slice();
        for i in 0..n {
            let fi = self.first[i];
            let row = &self.values[self.row_start[i]..self.row_start[i + 1]];
            let dot: f64 = row[..i - fi]
                .iter()
                .zip(&y[fi..i])
                .map(|(a, b)| a * b)
                .sum();
            y[i] = (y[i] - dot) / row[i - fi];
        }
        for i in (0..n).rev() {
            let fi = self.first[i];
            let row = &self.values[self.row_start[i]..self.row_start[i + 1]];
            let xi = y[i] / row[i - fi];
            y[i] = xi;
            for (yk, l) in y[fi..i].iter_mut().zip(&row[..i - fi]) {
                *yk -= l * xi;
            }
        }
        for (new, &old) in self.permutation.perm.iter().enumerate() {
            b[old] = y[new];
        }
        Ok(())
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x, &mut Vec::with_capacity(self.n))?;
        Ok(x)
    }

    /// Solves every column through this factorization. Each column runs the
    /// same kernel as [`solve`](Self::solve), so results are bit-identical to
    /// separate single-column solves.
    pub fn solve_many(&self, rhs: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        let mut work = Vec::with_capacity(self.n);
        rhs.iter()
            .map(|b| {
                let mut x = b.clone();
                self.solve_in_place(&mut x, &mut work)?;
                Ok(x)
            })
            .collect()
    }

    /// Column-parallel variant of [`solve_many`](Self::solve_many), solving
    /// in place.
    pub fn solve_many_par(&self, rhs: &mut [Vec<f64>]) -> Result<()> {
        rhs.par_iter_mut().try_for_each_init(
            || Vec::with_capacity(self.n),
            |work, b| self.solve_in_place(b, work),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_factor_is_identity() {
        let f = factorize_spd(&CsrMatrix::identity(5)).unwrap();
        let l = f.lower_dense();
        for (i, row) in l.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                assert_eq!(v, if i == j { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn two_by_two_by_hand() {
        let a = CsrMatrix::from_dense(&[vec![4.0, 2.0], vec![2.0, 3.0]]);
        let f = SpdFactorization::new(&a, Ordering::Natural).unwrap();
        let l = f.lower_dense();
        assert!((l[0][0] - 2.0).abs() < 1e-15);
        assert!((l[1][0] - 1.0).abs() < 1e-15);
        assert!((l[1][1] - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(l[0][1], 0.0);
    }

    #[test]
    fn negative_diagonal_is_not_spd() {
        let a = CsrMatrix::from_dense(&[vec![1.0, 0.0], vec![0.0, -1.0]]);
        match factorize_spd(&a) {
            Err(Error::NotSpd { index, .. }) => assert_eq!(index, 1),
            other => panic!("expected NotSpd, got {other:?}"),
        }
    }

    #[test]
    fn solve_ones() {
        let a = CsrMatrix::from_dense(&[
            vec![4.0, -1.0, 0.0, -1.0],
            vec![-1.0, 4.0, -1.0, 0.0],
            vec![0.0, -1.0, 4.0, -1.0],
            vec![-1.0, 0.0, -1.0, 4.0],
        ]);
        let b = a.matvec(&[1.0; 4]).unwrap();
        let x = factorize_spd(&a).unwrap().solve(&b).unwrap();
        assert!(x.iter().all(|v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn dimension_mismatch() {
        let f = factorize_spd(&CsrMatrix::identity(3)).unwrap();
        assert!(matches!(
            f.solve(&[1.0, 2.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
