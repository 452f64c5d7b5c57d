use std::io::Write;
use std::ops::{AddAssign, Mul};

use num_complex::Complex64 as C64;
use num_traits::Zero;

/// Scalar types stored in sparse matrices.
pub trait Scalar: Copy + Zero + AddAssign + Mul<Output = Self> + Send + Sync + 'static {}
impl Scalar for f64 {}
impl Scalar for C64 {}

/// Compressed sparse row matrix with sorted, duplicate-free column indices.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix<T> {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    data: Vec<T>,
}

pub type CsrComplex = CsrMatrix<C64>;
pub type CsrReal = CsrMatrix<f64>;

/// Accumulates `(row, col, value)` entries; duplicates are summed in insertion order.
#[derive(Clone, Debug)]
pub struct TripletBuilder<T> {
    nrows: usize,
    ncols: usize,
    rows: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<T>,
}

impl<T: Scalar> TripletBuilder<T> {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        Self { nrows, ncols, rows: Vec::new(), cols: Vec::new(), vals: Vec::new() }
    }

    pub fn with_capacity(nrows: usize, ncols: usize, cap: usize) -> Self {
        Self {
            nrows,
            ncols,
            rows: Vec::with_capacity(cap),
            cols: Vec::with_capacity(cap),
            vals: Vec::with_capacity(cap),
        }
    }

    pub fn push(&mut self, row: usize, col: usize, val: T) {
        assert!(row < self.nrows && col < self.ncols, "triplet ({row},{col}) out of bounds");
        self.rows.push(row);
        self.cols.push(col);
        self.vals.push(val);
    }

    pub fn len(&self) -> usize {
        self.vals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vals.is_empty()
    }

    pub fn build(self) -> CsrMatrix<T> {
        let n = self.nrows;
        let mut count = vec![0usize; n + 1];
        for &r in &self.rows {
            count[r + 1] += 1;
        }
        for i in 0..n {
            count[i + 1] += count[i];
        }
        let mut next = count.clone();
        let mut order = vec![0usize; self.rows.len()];
        for (t, &r) in self.rows.iter().enumerate() {
            order[next[r]] = t;
            next[r] += 1;
        }
        let mut indptr = Vec::with_capacity(n + 1);
        let mut indices = Vec::with_capacity(self.rows.len());
        let mut data = Vec::with_capacity(self.rows.len());
        indptr.push(0);
        let mut scratch: Vec<(usize, usize)> = Vec::new();
        for r in 0..n {
            scratch.clear();
            scratch.extend(order[count[r]..count[r + 1]].iter().map(|&t| (self.cols[t], t)));
            // stable: equal columns keep insertion order
            scratch.sort_by_key(|&(c, t)| (c, t));
            let mut last = usize::MAX;
            for &(c, t) in &scratch {
                if c == last {
                    *data.last_mut().unwrap() += self.vals[t];
                } else {
                    indices.push(c);
                    data.push(self.vals[t]);
                    last = c;
                }
            }
            indptr.push(indices.len());
        }
        CsrMatrix { nrows: n, ncols: self.ncols, indptr, indices, data }
    }
}

impl<T: Scalar> CsrMatrix<T> {
    /// Builds a matrix from raw CSR arrays, validating sortedness.
    pub fn from_raw(
        nrows: usize,
        ncols: usize,
        indptr: Vec<usize>,
        indices: Vec<usize>,
        data: Vec<T>,
    ) -> Self {
        assert_eq!(indptr.len(), nrows + 1);
        assert_eq!(indices.len(), data.len());
        assert_eq!(*indptr.last().unwrap(), indices.len());
        for r in 0..nrows {
            let row = &indices[indptr[r]..indptr[r + 1]];
            assert!(row.windows(2).all(|w| w[0] < w[1]), "row {r} not strictly sorted");
            assert!(row.iter().all(|&c| c < ncols));
        }
        Self { nrows, ncols, indptr, indices, data }
    }

    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, T)]) -> Self {
        let mut b = TripletBuilder::with_capacity(nrows, ncols, triplets.len());
        for &(r, c, v) in triplets {
            b.push(r, c, v);
        }
        b.build()
    }

    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self { nrows, ncols, indptr: vec![0; nrows + 1], indices: Vec::new(), data: Vec::new() }
    }

    pub fn identity(n: usize) -> Self
    where
        T: num_traits::One,
    {
        Self {
            nrows: n,
            ncols: n,
            indptr: (0..=n).collect(),
            indices: (0..n).collect(),
            data: vec![T::one(); n],
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.data.len()
    }

    pub fn indptr(&self) -> &[usize] {
        &self.indptr
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[T]) {
        let (a, b) = (self.indptr[i], self.indptr[i + 1]);
        (&self.indices[a..b], &self.data[a..b])
    }

    /// Entry `(i, j)`, zero if not stored.
    pub fn get(&self, i: usize, j: usize) -> T {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(p) => vals[p],
            Err(_) => T::zero(),
        }
    }

    /// `y = A x`.
    pub fn mul_vec_into<X>(&self, x: &[X], y: &mut [X])
    where
        X: Scalar,
        T: Mul<X, Output = X>,
    {
        assert_eq!(x.len(), self.ncols);
        assert_eq!(y.len(), self.nrows);
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = X::zero();
            for p in self.indptr[i]..self.indptr[i + 1] {
                acc += self.data[p] * x[self.indices[p]];
            }
            *yi = acc;
        }
    }

    pub fn mul_vec<X>(&self, x: &[X]) -> Vec<X>
    where
        X: Scalar,
        T: Mul<X, Output = X>,
    {
        let mut y = vec![X::zero(); self.nrows];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn transpose(&self) -> Self {
        let mut count = vec![0usize; self.ncols + 1];
        for &c in &self.indices {
            count[c + 1] += 1;
        }
        for j in 0..self.ncols {
            count[j + 1] += count[j];
        }
        let mut next = count.clone();
        let mut indices = vec![0usize; self.nnz()];
        let mut data = vec![T::zero(); self.nnz()];
        for i in 0..self.nrows {
            for p in self.indptr[i]..self.indptr[i + 1] {
                let c = self.indices[p];
                indices[next[c]] = i;
                data[next[c]] = self.data[p];
                next[c] += 1;
            }
        }
        Self { nrows: self.ncols, ncols: self.nrows, indptr: count, indices, data }
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(T) -> U) -> CsrMatrix<U> {
        CsrMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            indptr: self.indptr.clone(),
            indices: self.indices.clone(),
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Submatrix keeping the listed rows (in the given order) and all columns.
    pub fn select_rows(&self, rows: &[usize]) -> Self {
        let mut indptr = Vec::with_capacity(rows.len() + 1);
        let mut indices = Vec::new();
        let mut data = Vec::new();
        indptr.push(0);
        for &r in rows {
            let (c, v) = self.row(r);
            indices.extend_from_slice(c);
            data.extend_from_slice(v);
            indptr.push(indices.len());
        }
        Self { nrows: rows.len(), ncols: self.ncols, indptr, indices, data }
    }

    /// Dense row-major copy, for small matrices and tests.
    pub fn to_dense(&self) -> Vec<Vec<T>> {
        let mut out = vec![vec![T::zero(); self.ncols]; self.nrows];
        for (i, row) in out.iter_mut().enumerate() {
            let (c, v) = self.row(i);
            for (&j, &x) in c.iter().zip(v) {
                row[j] = x;
            }
        }
        out
    }
}

impl CsrReal {
    /// `Σ_t α_t X_t` for real matrices of equal shape, merged row by row.
    pub fn combine(terms: &[(C64, &CsrReal)]) -> CsrComplex {
        assert!(!terms.is_empty());
        let (nrows, ncols) = (terms[0].1.nrows, terms[0].1.ncols);
        for (_, m) in terms {
            assert_eq!((m.nrows, m.ncols), (nrows, ncols), "shape mismatch in combine");
        }
        let mut indptr = Vec::with_capacity(nrows + 1);
        let mut indices = Vec::new();
        let mut data: Vec<C64> = Vec::new();
        indptr.push(0);
        let mut acc: Vec<(usize, C64)> = Vec::new();
        for i in 0..nrows {
            acc.clear();
            for (alpha, m) in terms {
                let (c, v) = m.row(i);
                for (&j, &x) in c.iter().zip(v) {
                    acc.push((j, *alpha * x));
                }
            }
            acc.sort_by_key(|&(j, _)| j);
            let mut last = usize::MAX;
            for &(j, v) in &acc {
                if j == last {
                    *data.last_mut().unwrap() += v;
                } else {
                    indices.push(j);
                    data.push(v);
                    last = j;
                }
            }
            indptr.push(indices.len());
        }
        CsrMatrix { nrows, ncols, indptr, indices, data }
    }
}

impl CsrComplex {
    /// Writes the matrix as `row col re im` lines, 0-based.
    pub fn write_triplets<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for i in 0..self.nrows {
            let (c, v) = self.row(i);
            for (&j, x) in c.iter().zip(v) {
                writeln!(out, "{} {} {:.17e} {:.17e}", i, j, x.re, x.im)?;
            }
        }
        Ok(())
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.norm()))
    }
}

/// Euclidean norm of a complex vector.
pub fn norm2(x: &[C64]) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

/// `Σ conj(x_i) y_i`.
pub fn dot_c(x: &[C64], y: &[C64]) -> C64 {
    x.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplets_sum_duplicates_and_sort() {
        let m = CsrReal::from_triplets(2, 3, &[(0, 2, 1.0), (0, 0, 2.0), (0, 2, 3.0), (1, 1, 4.0)]);
        assert_eq!(m.indices(), &[0, 2, 1]);
        assert_eq!(m.data(), &[2.0, 4.0, 4.0]);
        assert_eq!(m.get(0, 1), 0.0);
    }

    #[test]
    fn transpose_roundtrip() {
        let m = CsrReal::from_triplets(3, 2, &[(0, 1, 1.0), (2, 0, 5.0), (1, 1, -2.0)]);
        let t = m.transpose();
        assert_eq!(t.get(1, 0), 1.0);
        assert_eq!(t.get(0, 2), 5.0);
        assert_eq!(t.transpose(), m);
    }

    #[test]
    fn combine_matches_dense() {
        let a = CsrReal::from_triplets(2, 2, &[(0, 0, 1.0), (1, 0, 2.0)]);
        let b = CsrReal::from_triplets(2, 2, &[(0, 0, 3.0), (1, 1, 1.0)]);
        let c = CsrReal::combine(&[(C64::new(1.0, 0.0), &a), (C64::new(0.0, -2.0), &b)]);
        assert_eq!(c.get(0, 0), C64::new(1.0, -6.0));
        assert_eq!(c.get(1, 0), C64::new(2.0, 0.0));
        assert_eq!(c.get(1, 1), C64::new(0.0, -2.0));
    }

    #[test]
    fn complex_matvec() {
        let a = CsrComplex::from_triplets(2, 2, &[(0, 0, C64::new(0.0, 1.0)), (1, 0, C64::new(2.0, 0.0))]);
        let y = a.mul_vec(&[C64::new(1.0, 1.0), C64::new(5.0, 0.0)]);
        assert_eq!(y, vec![C64::new(-1.0, 1.0), C64::new(2.0, 2.0)]);
    }

    #[test]
    fn triplet_export_format() {
        let a = CsrComplex::from_triplets(1, 1, &[(0, 0, C64::new(1.5, -2.0))]);
        let mut buf = Vec::new();
        a.write_triplets(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        let parts: Vec<f64> = s.split_whitespace().map(|t| t.parse().unwrap()).collect();
        assert_eq!(parts, vec![0.0, 0.0, 1.5, -2.0]);
    }
}
