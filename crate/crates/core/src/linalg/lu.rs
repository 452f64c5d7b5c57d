//! Sparse LU factorisation (left-looking, Gilbert–Peierls) with threshold
//! partial pivoting and a nested-dissection column ordering.

use num_complex::Complex64 as C64;
use num_traits::Zero;

use super::ordering::{nested_dissection, Graph};
use super::sparse::CsrComplex;
use crate::error::{Error, Result};

/// Column ordering used before factorising.
#[derive(Clone, Debug, Default)]
pub enum Ordering {
    /// Identity ordering.
    Natural,
    /// Nested dissection on the symmetrised pattern.
    #[default]
    NestedDissection,
    /// Caller-provided elimination order (`perm[k]` = column eliminated at step `k`).
    Given(Vec<usize>),
}

#[derive(Clone, Debug)]
pub struct LuOptions {
    pub ordering: Ordering,
    /// Diagonal pivot accepted when `|a_jj| ≥ pivot_tol · max_i |a_ij|`.
    pub pivot_tol: f64,
}

impl Default for LuOptions {
    fn default() -> Self {
        Self { ordering: Ordering::NestedDissection, pivot_tol: 0.1 }
    }
}

/// Compressed-column triangular factor with `u32` row indices.
#[derive(Clone, Debug, Default)]
struct Factor {
    colptr: Vec<usize>,
    rows: Vec<u32>,
    vals: Vec<C64>,
}

/// `P A Q = L U`, reusable for any number of solves.
#[derive(Clone, Debug)]
pub struct SparseLu {
    n: usize,
    /// Unit lower factor, diagonal stored first in each column.
    l: Factor,
    /// Upper factor, diagonal stored last in each column.
    u: Factor,
    /// Row permutation: original row `i` becomes pivot row `pinv[i]`.
    pinv: Vec<usize>,
    /// Column order.
    q: Vec<usize>,
    condition_estimate: f64,
}

/// Factorises `a` with default options.
pub fn lu_factor(a: &CsrComplex) -> Result<SparseLu> {
    lu_factor_with(a, &LuOptions::default())
}

pub fn lu_factor_with(a: &CsrComplex, opts: &LuOptions) -> Result<SparseLu> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::InvalidArgument(format!("lu_factor needs a square matrix, got {}x{}", n, a.ncols())));
    }
    let q: Vec<usize> = match &opts.ordering {
        Ordering::Natural => (0..n).collect(),
        Ordering::NestedDissection => nested_dissection(&Graph::from_pattern(n, a.indptr(), a.indices())),
        Ordering::Given(p) => {
            if p.len() != n {
                return Err(Error::InvalidArgument("ordering length mismatch".into()));
            }
            p.clone()
        }
    };
    // columns of A are the rows of Aᵀ
    let at = a.transpose();
    let (ap, ai, ax) = (at.indptr(), at.indices(), at.data());
    let anorm = a.max_abs();
    let tiny = anorm * f64::EPSILON * (n.max(1) as f64);

    let mut l = Factor { colptr: Vec::with_capacity(n + 1), ..Default::default() };
    let mut u = Factor { colptr: Vec::with_capacity(n + 1), ..Default::default() };
    let cap = 4 * a.nnz() + n;
    l.rows.reserve(cap);
    l.vals.reserve(cap);
    u.rows.reserve(cap);
    u.vals.reserve(cap);

    const NONE: usize = usize::MAX;
    let mut pinv = vec![NONE; n];
    let mut x = vec![C64::zero(); n];
    let mut xi = vec![0usize; n];
    let mut stack = vec![0usize; n];
    let mut pstack = vec![0usize; n];
    let mut mark = vec![usize::MAX; n];
    let mut umax: f64 = 0.0;
    let mut umin = f64::INFINITY;

    for k in 0..n {
        l.colptr.push(l.rows.len());
        u.colptr.push(u.rows.len());
        let col = q[k];

        // symbolic: reach of A(:,col) in the graph of L
        let mut top = n;
        for &i0 in &ai[ap[col]..ap[col + 1]] {
            if mark[i0] == k {
                continue;
            }
            // iterative depth-first search
            let mut head = 0usize;
            stack[0] = i0;
            loop {
                let j = stack[head];
                let jnew = pinv[j];
                if mark[j] != k {
                    mark[j] = k;
                    pstack[head] = if jnew == NONE { 0 } else { l.colptr[jnew] + 1 };
                }
                let end = if jnew == NONE { 0 } else { l.colptr[jnew + 1] };
                let mut descended = false;
                let mut p = pstack[head];
                while p < end {
                    let i = l.rows[p] as usize;
                    p += 1;
                    if mark[i] == k {
                        continue;
                    }
                    pstack[head] = p;
                    head += 1;
                    stack[head] = i;
                    descended = true;
                    break;
                }
                if !descended {
                    top -= 1;
                    xi[top] = j;
                    if head == 0 {
                        break;
                    }
                    head -= 1;
                }
            }
        }

        // numeric: sparse triangular solve x = L \ A(:,col)
        for &i in &xi[top..n] {
            x[i] = C64::zero();
        }
        for p in ap[col]..ap[col + 1] {
            x[ai[p]] = ax[p];
        }
        for px in top..n {
            let j = xi[px];
            let jnew = pinv[j];
            if jnew == NONE {
                continue;
            }
            let xj = x[j];
            if xj.is_zero() {
                continue;
            }
            for p in l.colptr[jnew] + 1..l.colptr[jnew + 1] {
                let r = l.rows[p] as usize;
                x[r] -= l.vals[p] * xj;
            }
        }

        // pivot choice
        let mut ipiv = NONE;
        let mut best = -1.0f64;
        for &i in &xi[top..n] {
            if pinv[i] == NONE {
                let t = x[i].norm();
                if t > best {
                    best = t;
                    ipiv = i;
                }
            } else {
                u.rows.push(pinv[i] as u32);
                u.vals.push(x[i]);
            }
        }
        if ipiv == NONE || best <= tiny {
            return Err(Error::SingularMatrix { column: col, pivot: best.max(0.0) });
        }
        if pinv[col] == NONE && x[col].norm() >= opts.pivot_tol * best {
            ipiv = col;
        }
        let pivot = x[ipiv];
        let pabs = pivot.norm();
        umax = umax.max(pabs);
        umin = umin.min(pabs);
        u.rows.push(k as u32);
        u.vals.push(pivot);
        pinv[ipiv] = k;
        l.rows.push(ipiv as u32);
        l.vals.push(C64::new(1.0, 0.0));
        let inv = pivot.inv();
        for &i in &xi[top..n] {
            if pinv[i] == NONE {
                l.rows.push(i as u32);
                l.vals.push(x[i] * inv);
            }
            x[i] = C64::zero();
        }
    }
    l.colptr.push(l.rows.len());
    u.colptr.push(u.rows.len());
    for r in l.rows.iter_mut() {
        *r = pinv[*r as usize] as u32;
    }
    l.rows.shrink_to_fit();
    l.vals.shrink_to_fit();
    u.rows.shrink_to_fit();
    u.vals.shrink_to_fit();
    let condition_estimate = if n == 0 { 1.0 } else { umax / umin };
    Ok(SparseLu { n, l, u, pinv, q, condition_estimate })
}

impl SparseLu {
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Ratio of the largest to the smallest pivot modulus; a cheap lower bound
    /// on the condition number.
    pub fn condition_estimate(&self) -> f64 {
        self.condition_estimate
    }

    /// Stored entries in `L` and `U`.
    pub fn factor_nnz(&self) -> usize {
        self.l.vals.len() + self.u.vals.len()
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[C64]) -> Vec<C64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    /// Overwrites `b` with `A⁻¹ b`.
    pub fn solve_in_place(&self, b: &mut [C64]) {
        assert_eq!(b.len(), self.n);
        let n = self.n;
        let mut x = vec![C64::zero(); n];
        for i in 0..n {
            x[self.pinv[i]] = b[i];
        }
        for j in 0..n {
            let xj = x[j];
            if xj.is_zero() {
                continue;
            }
            for p in self.l.colptr[j] + 1..self.l.colptr[j + 1] {
                x[self.l.rows[p] as usize] -= self.l.vals[p] * xj;
            }
        }
        for j in (0..n).rev() {
            let end = self.u.colptr[j + 1] - 1;
            x[j] /= self.u.vals[end];
            let xj = x[j];
            if xj.is_zero() {
                continue;
            }
            for p in self.u.colptr[j]..end {
                x[self.u.rows[p] as usize] -= self.u.vals[p] * xj;
            }
        }
        for k in 0..n {
            b[self.q[k]] = x[k];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::sparse::norm2;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn identity_solve_returns_rhs() {
        let a = CsrComplex::identity(7);
        let f = lu_factor(&a).unwrap();
        let b: Vec<C64> = (0..7).map(|i| C64::new(i as f64, -1.0)).collect();
        assert_eq!(f.solve(&b), b);
    }

    #[test]
    fn laplacian_inverse_column() {
        let n = 5;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, c(2.0)));
            if i + 1 < n {
                t.push((i, i + 1, c(-1.0)));
                t.push((i + 1, i, c(-1.0)));
            }
        }
        let a = CsrComplex::from_triplets(n, n, &t);
        let mut e1 = vec![C64::zero(); n];
        e1[0] = c(1.0);
        for ord in [Ordering::Natural, Ordering::NestedDissection] {
            let f = lu_factor_with(&a, &LuOptions { ordering: ord, pivot_tol: 0.1 }).unwrap();
            let x = f.solve(&e1);
            // (T⁻¹)_{i1} = (n+1−i)·1/(n+1), 1-based
            for (i, xi) in x.iter().enumerate() {
                let want = (n - i) as f64 / (n + 1) as f64;
                assert!((xi - c(want)).norm() < 1e-14, "{i}: {xi} vs {want}");
            }
        }
    }

    #[test]
    fn random_sparse_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 200;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, c(10.0)));
            for _ in 0..5 {
                let j = rng.random_range(0..n);
                t.push((i, j, C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))));
            }
        }
        let a = CsrComplex::from_triplets(n, n, &t);
        let b: Vec<C64> = (0..n).map(|_| C64::new(rng.random(), rng.random())).collect();
        let f = lu_factor(&a).unwrap();
        let x = f.solve(&b);
        let r: Vec<C64> = a.mul_vec(&x).iter().zip(&b).map(|(p, q)| p - q).collect();
        assert!(norm2(&r) / norm2(&b) < 1e-10);
    }

    #[test]
    fn zero_diagonal_needs_pivoting() {
        let a = CsrComplex::from_triplets(2, 2, &[(0, 1, c(1.0)), (1, 0, c(1.0))]);
        let f = lu_factor_with(&a, &LuOptions { ordering: Ordering::Natural, pivot_tol: 0.1 }).unwrap();
        let x = f.solve(&[c(3.0), c(4.0)]);
        assert_eq!(x, vec![c(4.0), c(3.0)]);
    }

    #[test]
    fn singular_matrix_reports_column() {
        let a = CsrComplex::from_triplets(3, 3, &[(0, 0, c(1.0)), (1, 1, c(1.0)), (2, 1, c(2.0))]);
        let e = lu_factor_with(&a, &LuOptions { ordering: Ordering::Natural, pivot_tol: 0.1 }).unwrap_err();
        match e {
            Error::SingularMatrix { column, .. } => assert_eq!(column, 2),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn repeated_solves_are_bitwise_identical() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 60;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, C64::new(4.0, 1.0)));
            t.push((i, (i * 7 + 3) % n, C64::new(rng.random(), 0.0)));
        }
        let a = CsrComplex::from_triplets(n, n, &t);
        let b: Vec<C64> = (0..n).map(|_| C64::new(rng.random(), rng.random())).collect();
        let f = lu_factor(&a).unwrap();
        let first = f.solve(&b);
        for _ in 0..100 {
            assert_eq!(f.solve(&b), first);
        }
        assert_eq!(lu_factor(&a).unwrap().solve(&b), first);
    }
}
