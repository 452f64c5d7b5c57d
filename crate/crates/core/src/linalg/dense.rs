//! Dense Hermitian kernels: Cholesky, generalised largest eigenvalue.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use num_traits::Zero;

use crate::error::{Error, Result};

/// Row-major square working copy.
struct Square {
    n: usize,
    a: Vec<C64>,
}

impl Square {
    fn from_matrix(m: &DMatrix<C64>) -> Self {
        let n = m.nrows();
        let mut a = vec![C64::zero(); n * n];
        for i in 0..n {
            for j in 0..n {
                a[i * n + j] = m[(i, j)];
            }
        }
        Self { n, a }
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> C64 {
        self.a[i * self.n + j]
    }
}

/// Lower Cholesky factor `L` with `B = L Lᴴ`.
pub fn cholesky(b: &DMatrix<C64>) -> Result<DMatrix<C64>> {
    let n = b.nrows();
    if b.ncols() != n {
        return Err(Error::InvalidArgument("cholesky needs a square matrix".into()));
    }
    let s = Square::from_matrix(b);
    let mut l = vec![C64::zero(); n * n];
    for j in 0..n {
        let mut d = s.at(j, j).re;
        for k in 0..j {
            d -= l[j * n + k].norm_sqr();
        }
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::NotPositiveDefinite(j));
        }
        let djj = d.sqrt();
        l[j * n + j] = C64::new(djj, 0.0);
        for i in j + 1..n {
            let mut v = s.at(i, j);
            for k in 0..j {
                v -= l[i * n + k] * l[j * n + k].conj();
            }
            l[i * n + j] = v / djj;
        }
    }
    Ok(DMatrix::from_fn(n, n, |i, j| l[i * n + j]))
}

/// Largest eigenvalue of the Hermitian pencil `A x = λ B x`, `B` positive definite.
///
/// `B = L Lᴴ` reduces the pencil to `C = L⁻¹ A L⁻ᴴ`; `C` is brought to real
/// tridiagonal form by Householder reflections and the top eigenvalue is
/// located by Sturm-sequence bisection.
pub fn herm_gen_eig_max(a: &DMatrix<C64>, b: &DMatrix<C64>) -> Result<f64> {
    let n = a.nrows();
    if a.ncols() != n || b.nrows() != n || b.ncols() != n {
        return Err(Error::InvalidArgument("pencil dimensions differ".into()));
    }
    if n == 0 {
        return Ok(0.0);
    }
    let l = cholesky(b)?;
    let lr = Square::from_matrix(&l);
    let ar = Square::from_matrix(a);
    // X = L⁻¹ A   (column by column forward substitution, stored row-major)
    let mut x = ar.a.clone();
    forward_rows(&lr, &mut x, n);
    // C = L⁻¹ Xᴴ
    let mut c = vec![C64::zero(); n * n];
    for i in 0..n {
        for j in 0..n {
            c[i * n + j] = x[j * n + i].conj();
        }
    }
    forward_rows(&lr, &mut c, n);
    // symmetrise against rounding
    for i in 0..n {
        c[i * n + i] = C64::new(c[i * n + i].re, 0.0);
        for j in 0..i {
            let v = 0.5 * (c[i * n + j] + c[j * n + i].conj());
            c[i * n + j] = v;
            c[j * n + i] = v.conj();
        }
    }
    Ok(hermitian_eig_max(Square { n, a: c }))
}

/// Solves `L Y = X` in place for all columns of the row-major `x`.
fn forward_rows(l: &Square, x: &mut [C64], ncols: usize) {
    let n = l.n;
    for i in 0..n {
        let lii = l.at(i, i);
        for k in 0..i {
            let lik = l.at(i, k);
            if lik.is_zero() {
                continue;
            }
            let (head, tail) = x.split_at_mut(i * ncols);
            let src = &head[k * ncols..(k + 1) * ncols];
            let dst = &mut tail[..ncols];
            for (d, s) in dst.iter_mut().zip(src) {
                *d -= lik * s;
            }
        }
        for v in &mut x[i * ncols..(i + 1) * ncols] {
            *v /= lii;
        }
    }
}

/// Largest eigenvalue of a Hermitian matrix.
fn hermitian_eig_max(mut c: Square) -> f64 {
    let (d, e) = tridiagonalize(&mut c);
    tridiagonal_max_eig(&d, &e)
}

/// Householder reduction; returns the diagonal and the moduli of the
/// off-diagonal of the similar real symmetric tridiagonal matrix.
fn tridiagonalize(c: &mut Square) -> (Vec<f64>, Vec<f64>) {
    let n = c.n;
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n.saturating_sub(1)];
    let mut v = vec![C64::zero(); n];
    let mut w = vec![C64::zero(); n];
    for k in 0..n.saturating_sub(1) {
        // column k below the diagonal
        let m = n - k - 1;
        let mut xnorm2 = 0.0;
        for i in k + 1..n {
            xnorm2 += c.at(i, k).norm_sqr();
        }
        let xnorm = xnorm2.sqrt();
        let x0 = c.at(k + 1, k);
        if xnorm == 0.0 {
            e[k] = 0.0;
            continue;
        }
        let phase = if x0.norm() > 0.0 { x0 / x0.norm() } else { C64::new(1.0, 0.0) };
        let alpha = -phase * xnorm;
        // v = x − α e₁, normalised
        for i in 0..m {
            v[i] = c.at(k + 1 + i, k);
        }
        v[0] -= alpha;
        let vn = v[..m].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if vn == 0.0 {
            e[k] = alpha.norm();
            continue;
        }
        for z in &mut v[..m] {
            *z /= vn;
        }
        // w = C₂₂ v over the trailing block
        for i in 0..m {
            let row = (k + 1 + i) * n + k + 1;
            let mut acc = C64::zero();
            for j in 0..m {
                acc += c.a[row + j] * v[j];
            }
            w[i] = acc;
        }
        let vw: C64 = v[..m].iter().zip(&w[..m]).map(|(a, b)| a.conj() * b).sum();
        let kk = vw.re;
        for i in 0..m {
            w[i] -= kk * v[i];
        }
        // C₂₂ ← C₂₂ − 2 (v qᴴ + q vᴴ)
        for i in 0..m {
            let row = (k + 1 + i) * n + k + 1;
            let vi2 = 2.0 * v[i];
            let wi2 = 2.0 * w[i];
            for j in 0..m {
                c.a[row + j] -= vi2 * w[j].conj() + wi2 * v[j].conj();
            }
        }
        e[k] = alpha.norm();
        for i in k + 1..n {
            c.a[i * n + k] = C64::zero();
            c.a[k * n + i] = C64::zero();
        }
    }
    for (i, di) in d.iter_mut().enumerate() {
        *di = c.at(i, i).re;
    }
    (d, e)
}

/// Number of eigenvalues of the symmetric tridiagonal `(d, e)` smaller than `x`.
fn sturm_count(d: &[f64], e: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut q = 1.0f64;
    let pivmin = f64::MIN_POSITIVE.sqrt();
    for i in 0..d.len() {
        let off = if i == 0 { 0.0 } else { e[i - 1] * e[i - 1] / q };
        q = d[i] - x - off;
        if q.abs() < pivmin {
            q = -pivmin;
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

fn tridiagonal_max_eig(d: &[f64], e: &[f64]) -> f64 {
    let n = d.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let r = if i > 0 { e[i - 1] } else { 0.0 } + if i + 1 < n { e[i] } else { 0.0 };
        lo = lo.min(d[i] - r);
        hi = hi.max(d[i] + r);
    }
    let scale = lo.abs().max(hi.abs()).max(f64::MIN_POSITIVE);
    lo -= 1e-12 * scale;
    hi += 1e-12 * scale;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if sturm_count(d, e, mid) == n {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 2.0 * f64::EPSILON * lo.abs().max(hi.abs()) {
            break;
        }
    }
    0.5 * (lo + hi)
}
