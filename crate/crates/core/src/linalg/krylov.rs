//! Preconditioned Richardson iteration and left-preconditioned GMRES.

use num_complex::Complex64 as C64;
use num_traits::Zero;
use serde::Serialize;

use super::lu::SparseLu;
use super::sparse::{dot_c, norm2, CsrComplex};

/// A fixed linear map on `C^n`.
pub trait LinearOperator {
    fn dim(&self) -> usize;
    /// `y = Op x`.
    fn apply(&self, x: &[C64], y: &mut [C64]);

    fn apply_vec(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![C64::zero(); self.dim()];
        self.apply(x, &mut y);
        y
    }
}

impl LinearOperator for CsrComplex {
    fn dim(&self) -> usize {
        self.nrows()
    }
    fn apply(&self, x: &[C64], y: &mut [C64]) {
        self.mul_vec_into(x, y);
    }
}

impl LinearOperator for SparseLu {
    fn dim(&self) -> usize {
        SparseLu::dim(self)
    }
    fn apply(&self, x: &[C64], y: &mut [C64]) {
        y.copy_from_slice(x);
        self.solve_in_place(y);
    }
}

/// The identity on `C^n`.
pub struct Identity(pub usize);

impl LinearOperator for Identity {
    fn dim(&self) -> usize {
        self.0
    }
    fn apply(&self, x: &[C64], y: &mut [C64]) {
        y.copy_from_slice(x);
    }
}

/// Wraps a closure as an operator.
pub struct FnOperator<F> {
    pub n: usize,
    pub f: F,
}

impl<F: Fn(&[C64], &mut [C64])> LinearOperator for FnOperator<F> {
    fn dim(&self) -> usize {
        self.n
    }
    fn apply(&self, x: &[C64], y: &mut [C64]) {
        (self.f)(x, y)
    }
}

/// Outcome of an iterative solve.
#[derive(Clone, Debug, Serialize)]
pub struct IterativeResult {
    #[serde(skip)]
    pub solution: Vec<C64>,
    pub iterations: usize,
    pub converged: bool,
    pub diverged: bool,
    /// True residual norms `‖F − A u^n‖`, starting with the initial residual.
    pub residual_history: Vec<f64>,
    /// Norms of the preconditioned residual `M(F − A u^n)`; for GMRES these
    /// are the minimised quantities and never increase.
    pub preconditioned_history: Vec<f64>,
}

fn residual(a: &dyn LinearOperator, rhs: &[C64], u: &[C64], r: &mut [C64]) {
    a.apply(u, r);
    for (ri, fi) in r.iter_mut().zip(rhs) {
        *ri = fi - *ri;
    }
}

/// `u^{n+1} = u^n + M(F − A u^n)` until `‖F − A u^n‖ ≤ rtol ‖F − A u^0‖`.
///
/// Stops early and flags divergence once the residual exceeds `1e6` times its
/// initial value.
pub fn richardson(
    a: &dyn LinearOperator,
    m: &dyn LinearOperator,
    rhs: &[C64],
    u0: &[C64],
    rtol: f64,
    maxit: usize,
) -> IterativeResult {
    let n = a.dim();
    let mut u = u0.to_vec();
    let mut r = vec![C64::zero(); n];
    let mut z = vec![C64::zero(); n];
    residual(a, rhs, &u, &mut r);
    let r0 = norm2(&r);
    let mut hist = vec![r0];
    let mut phist = Vec::new();
    let mut out = IterativeResult {
        solution: Vec::new(),
        iterations: 0,
        converged: r0 <= rtol * r0,
        diverged: false,
        residual_history: Vec::new(),
        preconditioned_history: Vec::new(),
    };
    while !out.converged && out.iterations < maxit {
        m.apply(&r, &mut z);
        phist.push(norm2(&z));
        for (ui, zi) in u.iter_mut().zip(&z) {
            *ui += zi;
        }
        residual(a, rhs, &u, &mut r);
        let rn = norm2(&r);
        hist.push(rn);
        out.iterations += 1;
        if rn <= rtol * r0 {
            out.converged = true;
        } else if !rn.is_finite() || rn > 1e6 * r0 {
            out.diverged = true;
            break;
        }
    }
    out.solution = u;
    out.residual_history = hist;
    out.preconditioned_history = phist;
    out
}

/// Left-preconditioned GMRES without restart.
///
/// Arnoldi on `M A` with modified Gram–Schmidt and one reorthogonalisation
/// pass. After every step the iterate is formed and the true residual
/// `‖F − A u‖` is checked against `rtol ‖F − A u^0‖`.
pub fn gmres(
    a: &dyn LinearOperator,
    m: &dyn LinearOperator,
    rhs: &[C64],
    u0: &[C64],
    rtol: f64,
    maxit: usize,
) -> IterativeResult {
    let n = a.dim();
    let mut r = vec![C64::zero(); n];
    residual(a, rhs, u0, &mut r);
    let r0 = norm2(&r);
    let mut out = IterativeResult {
        solution: u0.to_vec(),
        iterations: 0,
        converged: r0 <= rtol * r0,
        diverged: false,
        residual_history: vec![r0],
        preconditioned_history: Vec::new(),
    };
    if out.converged {
        out.preconditioned_history.push(0.0);
        return out;
    }
    let z = m.apply_vec(&r);
    let beta = norm2(&z);
    out.preconditioned_history.push(beta);
    if beta == 0.0 {
        return out;
    }
    let mut basis: Vec<Vec<C64>> = vec![z.iter().map(|v| v / beta).collect()];
    // Hessenberg columns after rotation (upper triangular part)
    let mut rcols: Vec<Vec<C64>> = Vec::new();
    let mut cs: Vec<f64> = Vec::new();
    let mut sn: Vec<C64> = Vec::new();
    let mut g = vec![C64::new(beta, 0.0)];
    let mut av = vec![C64::zero(); n];
    let mut u = u0.to_vec();

    for k in 0..maxit {
        a.apply(&basis[k], &mut av);
        let mut w = m.apply_vec(&av);
        let mut h = vec![C64::zero(); k + 2];
        for _pass in 0..2 {
            for (i, v) in basis.iter().enumerate() {
                let c = dot_c(v, &w);
                h[i] += c;
                for (wj, vj) in w.iter_mut().zip(v) {
                    *wj -= c * vj;
                }
            }
        }
        let hnext = norm2(&w);
        h[k + 1] = C64::new(hnext, 0.0);
        // previous rotations
        for i in 0..k {
            let t = cs[i] * h[i] + sn[i] * h[i + 1];
            h[i + 1] = -sn[i].conj() * h[i] + cs[i] * h[i + 1];
            h[i] = t;
        }
        // new rotation annihilating h[k+1]
        let (c, s, rr) = givens(h[k], h[k + 1]);
        cs.push(c);
        sn.push(s);
        h[k] = rr;
        h[k + 1] = C64::zero();
        let gk = g[k];
        g[k] = c * gk;
        g.push(-s.conj() * gk);
        h.truncate(k + 1);
        rcols.push(h);

        // iterate from the triangular least-squares system
        let y = back_substitute(&rcols, &g[..=k]);
        u.copy_from_slice(u0);
        for (v, yi) in basis.iter().zip(&y) {
            for (uj, vj) in u.iter_mut().zip(v) {
                *uj += yi * vj;
            }
        }
        residual(a, rhs, &u, &mut r);
        let rn = norm2(&r);
        out.iterations = k + 1;
        out.residual_history.push(rn);
        out.preconditioned_history.push(g[k + 1].norm());
        if rn <= rtol * r0 {
            out.converged = true;
            break;
        }
        if hnext <= 1e-14 * beta {
            // invariant subspace reached: the iterate is final
            break;
        }
        basis.push(w.iter().map(|v| v / hnext).collect());
    }
    out.solution = u;
    out
}

/// Complex Givens rotation with real cosine: `[c s; −s̄ c] [a; b] = [r; 0]`.
fn givens(a: C64, b: C64) -> (f64, C64, C64) {
    let bn = b.norm();
    if bn == 0.0 {
        return (1.0, C64::zero(), a);
    }
    let an = a.norm();
    if an == 0.0 {
        return (0.0, b.conj() / bn, C64::new(bn, 0.0));
    }
    let t = an.hypot(bn);
    let phase = a / an;
    let c = an / t;
    let s = phase * b.conj() / t;
    (c, s, phase * t)
}

fn back_substitute(rcols: &[Vec<C64>], g: &[C64]) -> Vec<C64> {
    let m = g.len();
    let mut y = g.to_vec();
    for i in (0..m).rev() {
        for j in i + 1..m {
            let rij = rcols[j][i];
            y[i] = y[i] - rij * y[j];
        }
        y[i] /= rcols[i][i];
    }
    y
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::lu::lu_factor;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_system(n: usize, seed: u64) -> (CsrComplex, Vec<C64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, C64::new(n as f64 / 4.0, 1.0)));
            for j in 0..n {
                if rng.random::<f64>() < 0.2 {
                    t.push((i, j, C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))));
                }
            }
        }
        let b = (0..n).map(|_| C64::new(rng.random(), rng.random())).collect();
        (CsrComplex::from_triplets(n, n, &t), b)
    }

    #[test]
    fn gmres_identity_one_step() {
        let b = vec![C64::new(1.0, 2.0), C64::new(-3.0, 0.5)];
        let id = Identity(2);
        let res = gmres(&id, &id, &b, &[C64::zero(); 2], 1e-12, 10);
        assert!(res.converged);
        assert_eq!(res.iterations, 1);
    }

    #[test]
    fn gmres_perfect_preconditioner() {
        let (a, b) = random_system(40, 1);
        let lu = lu_factor(&a).unwrap();
        let res = gmres(&a, &lu, &b, &vec![C64::zero(); 40], 1e-12, 10);
        assert!(res.converged && res.iterations <= 2);
    }

    #[test]
    fn gmres_matches_direct_solve() {
        let (a, b) = random_system(50, 2);
        let x = lu_factor(&a).unwrap().solve(&b);
        let res = gmres(&a, &Identity(50), &b, &vec![C64::zero(); 50], 1e-12, 50);
        assert!(res.converged);
        let err: f64 = norm2(&res.solution.iter().zip(&x).map(|(p, q)| p - q).collect::<Vec<_>>());
        assert!(err / norm2(&x) < 1e-8);
        assert!(res.preconditioned_history.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
    }

    #[test]
    fn richardson_perfect_preconditioner() {
        let (a, b) = random_system(30, 3);
        let lu = lu_factor(&a).unwrap();
        let res = richardson(&a, &lu, &b, &vec![C64::zero(); 30], 1e-10, 5);
        assert!(res.converged);
        assert_eq!(res.iterations, 1);
    }

    #[test]
    fn richardson_scalar_contraction() {
        let a = FnOperator { n: 1, f: |x: &[C64], y: &mut [C64]| y[0] = 2.0 * x[0] };
        let m = FnOperator { n: 1, f: |x: &[C64], y: &mut [C64]| y[0] = 0.25 * x[0] };
        let res = richardson(&a, &m, &[C64::new(1.0, 0.0)], &[C64::zero()], 1e-6, 100);
        for w in res.residual_history.windows(2) {
            assert_eq!(w[1] / w[0], 0.5);
        }
        assert_eq!(res.iterations, 20);
    }

    #[test]
    fn richardson_flags_divergence() {
        let a = FnOperator { n: 1, f: |x: &[C64], y: &mut [C64]| y[0] = 2.0 * x[0] };
        let m = FnOperator { n: 1, f: |x: &[C64], y: &mut [C64]| y[0] = 2.0 * x[0] };
        let res = richardson(&a, &m, &[C64::new(1.0, 0.0)], &[C64::zero()], 1e-6, 100);
        assert!(res.diverged && !res.converged);
    }

    #[test]
    fn zero_initial_residual_needs_no_iterations() {
        let (a, b) = random_system(10, 4);
        let x = lu_factor(&a).unwrap().solve(&b);
        let f = a.mul_vec(&x);
        let res = richardson(&a, &Identity(10), &f, &x, 1e-6, 10);
        assert_eq!(res.iterations, 0);
    }
}
