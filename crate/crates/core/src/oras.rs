//! The optimised restricted additive Schwarz preconditioner
//! `B⁻¹ = Σ_j R̃ᵀ_j A_j⁻¹ R_j`, the Schwarz stepper, the error-propagation
//! blocks and the preconditioned global solvers.

use std::time::Instant;

use num_complex::Complex64 as C64;
use num_traits::Zero;
use serde::Serialize;

use crate::assembly::{assemble_local, b_functional, HelmholtzProblem, LocalProblem};
use crate::decomp::{weighted_prolong, weighted_prolong_add, Decomposition, PartitionOfUnity};
use crate::error::Result;
use crate::linalg::{gmres, richardson, IterativeResult, LinearOperator};

pub struct OrasPreconditioner {
    pub decomp: Decomposition,
    pub pou: PartitionOfUnity,
    pub locals: Vec<LocalProblem>,
}

/// Assembles and factors every local problem.
pub fn build_preconditioner(
    problem: &HelmholtzProblem,
    decomp: Decomposition,
    pou: PartitionOfUnity,
) -> Result<OrasPreconditioner> {
    let locals = decomp
        .subdomains
        .iter()
        .map(|s| assemble_local(problem, s.id, &s.elements))
        .collect::<Result<Vec<_>>>()?;
    Ok(OrasPreconditioner { decomp, pou, locals })
}

impl OrasPreconditioner {
    pub fn num_subdomains(&self) -> usize {
        self.locals.len()
    }

    /// `R̃ᵀ_j w_j`.
    pub fn prolong(&self, j: usize, w_j: &[C64]) -> Vec<C64> {
        weighted_prolong(&self.decomp, &self.pou, j, w_j)
    }

    /// `T_{j,ℓ} w_ℓ = A_j⁻¹ b_{h,j}(R̃ᵀ_ℓ w_ℓ)`.
    pub fn t_block_apply(&self, problem: &HelmholtzProblem, j: usize, l: usize, w_l: &[C64]) -> Vec<C64> {
        if !self.decomp.adjacent(j, l) {
            return vec![C64::zero(); self.locals[j].len()];
        }
        let ext = self.prolong(l, w_l);
        self.locals[j].solve(&b_functional(problem, &self.locals[j], &ext))
    }

    /// Componentwise `(T e)_j = Σ_{ℓ ≠ j} T_{j,ℓ} e_ℓ`.
    pub fn t_apply(&self, problem: &HelmholtzProblem, e: &ErrorVector) -> ErrorVector {
        let n = self.num_subdomains();
        let components = (0..n)
            .map(|j| {
                let mut out = vec![C64::zero(); self.locals[j].len()];
                for l in (0..n).filter(|&l| l != j && self.decomp.adjacent(j, l)) {
                    for (o, v) in out.iter_mut().zip(self.t_block_apply(problem, j, l, &e.components[l])) {
                        *o += v;
                    }
                }
                out
            })
            .collect();
        ErrorVector { components }
    }
}

impl LinearOperator for OrasPreconditioner {
    fn dim(&self) -> usize {
        self.decomp.ndof
    }

    fn apply(&self, r: &[C64], y: &mut [C64]) {
        y.iter_mut().for_each(|v| *v = C64::zero());
        for (j, local) in self.locals.iter().enumerate() {
            let uj = local.solve(&local.numbering.restrict(r));
            weighted_prolong_add(&self.decomp, &self.pou, j, &uj, y);
        }
    }
}

/// An element `(e_1, …, e_N)` of the product of the local spaces.
#[derive(Clone, Debug, PartialEq)]
pub struct ErrorVector {
    pub components: Vec<Vec<C64>>,
}

impl ErrorVector {
    pub fn zeros(prec: &OrasPreconditioner) -> Self {
        Self { components: prec.locals.iter().map(|l| vec![C64::zero(); l.len()]).collect() }
    }

    /// `e_j = u|_{Ω_j} − u_j`.
    pub fn from_difference(prec: &OrasPreconditioner, u: &[C64], locals: &[Vec<C64>]) -> Self {
        let components = prec
            .locals
            .iter()
            .zip(locals)
            .map(|(l, uj)| l.numbering.restrict(u).iter().zip(uj).map(|(a, b)| a - b).collect())
            .collect();
        Self { components }
    }

    pub fn norm2(&self) -> f64 {
        self.components.iter().flatten().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// One parallel Schwarz step: `A_j u_j = R_j F + b_{h,j}(u_n)`, then
/// `u_{n+1} = Σ_j R̃ᵀ_j u_j`. Also returns the local solutions.
pub fn schwarz_step(
    problem: &HelmholtzProblem,
    prec: &OrasPreconditioner,
    rhs: &[C64],
    u_n: &[C64],
) -> (Vec<C64>, Vec<Vec<C64>>) {
    let mut next = vec![C64::zero(); problem.ndof()];
    let mut locals = Vec::with_capacity(prec.num_subdomains());
    for (j, local) in prec.locals.iter().enumerate() {
        let mut r = local.numbering.restrict(rhs);
        for (ri, bi) in r.iter_mut().zip(b_functional(problem, local, u_n)) {
            *ri += bi;
        }
        let uj = local.solve(&r);
        weighted_prolong_add(&prec.decomp, &prec.pou, j, &uj, &mut next);
        locals.push(uj);
    }
    (next, locals)
}

/// JSON solve report.
#[derive(Clone, Debug, Serialize)]
pub struct SolveReport {
    pub method: &'static str,
    #[serde(flatten)]
    pub result: IterativeResult,
    pub seconds: f64,
}

pub fn oras_richardson(
    problem: &HelmholtzProblem,
    prec: &OrasPreconditioner,
    rhs: &[C64],
    u0: &[C64],
    rtol: f64,
    maxit: usize,
) -> SolveReport {
    let t = Instant::now();
    let result = richardson(&problem.a, prec, rhs, u0, rtol, maxit);
    SolveReport { method: "richardson", result, seconds: t.elapsed().as_secs_f64() }
}

pub fn oras_gmres(
    problem: &HelmholtzProblem,
    prec: &OrasPreconditioner,
    rhs: &[C64],
    u0: &[C64],
    rtol: f64,
    maxit: usize,
) -> SolveReport {
    let t = Instant::now();
    let result = gmres(&problem.a, prec, rhs, u0, rtol, maxit);
    SolveReport { method: "gmres", result, seconds: t.elapsed().as_secs_f64() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{assemble_global, plane_wave_load};
    use crate::decomp::{build_pou, strips};
    use crate::fespace::build_space;
    use crate::linalg::{lu_factor, norm2};
    use crate::mesh::{build_uniform_mesh, RectDomain};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn setup(l: f64, nx: usize, ny: usize, p: usize, k: f64, n: usize, ov: f64) -> (HelmholtzProblem, OrasPreconditioner) {
        let mesh = build_uniform_mesh(RectDomain::new(l, 1.0).unwrap(), nx, ny).unwrap();
        let pr = assemble_global(k, build_space(mesh, p).unwrap()).unwrap();
        let d = strips(&pr.space, n, ov).unwrap();
        let pou = build_pou(&pr.space, &d).unwrap();
        let prec = build_preconditioner(&pr, d, pou).unwrap();
        (pr, prec)
    }

    fn rand_vec(n: usize, rng: &mut ChaCha8Rng) -> Vec<C64> {
        (0..n).map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect()
    }

    #[test]
    fn single_subdomain_is_exact_inverse() {
        let (pr, prec) = setup(1.0, 6, 6, 2, 5.0, 1, 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let w = rand_vec(pr.ndof(), &mut rng);
        let back = prec.apply_vec(&pr.a.mul_vec(&w));
        let err: Vec<C64> = back.iter().zip(&w).map(|(a, b)| a - b).collect();
        assert!(norm2(&err) < 1e-10 * norm2(&w));
        let f = plane_wave_load(&pr.space, 5.0);
        let rep = oras_gmres(&pr, &prec, &f, &vec![C64::zero(); pr.ndof()], 1e-10, 10);
        assert!(rep.result.converged && rep.result.iterations <= 2);
        let (u1, _) = schwarz_step(&pr, &prec, &f, &vec![C64::zero(); pr.ndof()]);
        let direct = lu_factor(&pr.a).unwrap().solve(&f);
        let d: Vec<C64> = u1.iter().zip(&direct).map(|(a, b)| a - b).collect();
        assert!(norm2(&d) < 1e-10 * norm2(&direct));
    }

    #[test]
    fn preconditioner_is_linear_and_repeatable() {
        let (pr, prec) = setup(1.5, 18, 12, 1, 10.0, 3, 0.25);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (r, s) = (rand_vec(pr.ndof(), &mut rng), rand_vec(pr.ndof(), &mut rng));
        let al = C64::new(0.4, -2.0);
        let comb: Vec<C64> = r.iter().zip(&s).map(|(a, b)| al * a + b).collect();
        let lhs = prec.apply_vec(&comb);
        let (br, bs) = (prec.apply_vec(&r), prec.apply_vec(&s));
        let d: Vec<C64> = lhs.iter().zip(br.iter().zip(&bs)).map(|(l, (a, b))| l - (al * a + b)).collect();
        assert!(norm2(&d) < 1e-12 * norm2(&lhs));
        assert_eq!(prec.apply_vec(&r), br);
    }

    #[test]
    fn exact_solution_is_a_fixed_point() {
        let (pr, prec) = setup(1.5, 18, 12, 2, 10.0, 3, 0.25);
        let f = plane_wave_load(&pr.space, 10.0);
        let uh = lu_factor(&pr.a).unwrap().solve(&f);
        let (next, _) = schwarz_step(&pr, &prec, &f, &uh);
        let d: Vec<C64> = next.iter().zip(&uh).map(|(a, b)| a - b).collect();
        assert!(norm2(&d) < 1e-10 * norm2(&uh));
        let rep = oras_richardson(&pr, &prec, &pr.a.mul_vec(&uh), &uh, 1e-6, 10);
        assert_eq!(rep.result.iterations, 0);
    }

    #[test]
    fn t_blocks_vanish_on_diagonal_and_beyond_neighbours() {
        let (pr, prec) = setup(1.5, 18, 12, 1, 10.0, 3, 0.25);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for l in 0..3 {
            let w = rand_vec(prec.locals[l].len(), &mut rng);
            let own = prec.t_block_apply(&pr, l, l, &w);
            let scale = norm2(&prec.t_block_apply(&pr, (l + 1) % 3, l, &w)).max(1.0);
            assert!(norm2(&own) < 1e-10 * scale, "{}", norm2(&own));
        }
        let w = rand_vec(prec.locals[0].len(), &mut rng);
        assert!(prec.t_block_apply(&pr, 2, 0, &w).iter().all(|v| v.is_zero()));
        let z = ErrorVector::zeros(&prec);
        assert_eq!(prec.t_apply(&pr, &z), z);
    }
}
