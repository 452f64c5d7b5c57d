//! Structural self-checks on small fixed configurations. Each check compares
//! two independently computed quantities and reports the discrepancy.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::assembly::{assemble_global, b_functional, plane_wave_load, HelmholtzProblem};
use crate::decomp::{build_pou, checkerboard_with, strips, Decomposition, Face, PartitionOfUnity};
use crate::error::Result;
use crate::fespace::{build_space, LagrangeSpace};
use crate::impmaps::StripImpedance;
use crate::linalg::{lu_factor, norm2, LinearOperator};
use crate::mesh::{build_uniform_mesh, RectDomain};
use crate::oras::{build_preconditioner, schwarz_step, ErrorVector, OrasPreconditioner};

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    pub fn new(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self { name: name.into(), value, tolerance, passed: value <= tolerance }
    }

    pub fn line(&self) -> String {
        format!(
            "{} {}: {:.3e} (tolerance {:.1e})",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.value,
            self.tolerance
        )
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn find(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// A strip toy with its factored preconditioner.
pub struct Toy {
    pub problem: HelmholtzProblem,
    pub prec: OrasPreconditioner,
}

/// `n` strips (2 or 3) at `k = 10`, `p = 1`, overlap `1/4` on a 12-row grid.
pub fn strip_toy(n: usize) -> Result<Toy> {
    let (length, nx) = if n == 3 { (1.5, 18) } else { (1.0, 16) };
    let mesh = build_uniform_mesh(RectDomain::new(length, 1.0)?, nx, 12)?;
    let problem = assemble_global(10.0, build_space(mesh, 1)?)?;
    let decomp = strips(&problem.space, n, 0.25)?;
    let pou = build_pou(&problem.space, &decomp)?;
    let prec = build_preconditioner(&problem, decomp, pou)?;
    Ok(Toy { problem, prec })
}

fn rand_vec(n: usize, rng: &mut ChaCha8Rng) -> Vec<C64> {
    (0..n).map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect()
}

fn diff(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt()
}

fn rel(a: &[C64], b: &[C64]) -> f64 {
    diff(a, b) / norm2(b).max(f64::MIN_POSITIVE)
}

/// Local indices of the dofs on `Γ_j`.
pub fn interface_dofs(space: &LagrangeSpace, decomp: &Decomposition, j: usize) -> Vec<usize> {
    let sub = &decomp.subdomains[j];
    let mut out: Vec<usize> =
        sub.interface_edges.iter().flat_map(|&e| space.edge_dofs(e)).filter_map(|g| sub.numbering.local(g)).collect();
    out.sort_unstable();
    out.dedup();
    out
}

fn pou_sum_defect(decomp: &Decomposition, pou: &PartitionOfUnity) -> f64 {
    let mut sum = vec![0.0; decomp.ndof];
    for (s, w) in decomp.subdomains.iter().zip(&pou.weights) {
        for (&g, &c) in s.numbering.dofs.iter().zip(w) {
            sum[g] += c;
        }
    }
    sum.iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max)
}

fn pou_interface_max(space: &LagrangeSpace, decomp: &Decomposition, pou: &PartitionOfUnity) -> f64 {
    (0..decomp.len())
        .flat_map(|j| interface_dofs(space, decomp, j).into_iter().map(move |i| pou.weights[j][i]))
        .fold(0.0, f64::max)
}

fn partition_checks(toy: &Toy, out: &mut Vec<Check>) -> Result<()> {
    let space = &toy.problem.space;
    let (d, pou) = (&toy.prec.decomp, &toy.prec.pou);
    let mesh = build_uniform_mesh(RectDomain::unit_square(), 12, 12)?;
    let cspace = build_space(mesh, 2)?;
    let cd = checkerboard_with(&cspace, 3, 1.0 / 12.0)?;
    let cpou = build_pou(&cspace, &cd)?;
    out.push(Check::new(
        "partition of unity sums to one",
        pou_sum_defect(d, pou).max(pou_sum_defect(&cd, &cpou)),
        0.0,
    ));
    out.push(Check::new(
        "partition of unity vanishes on interfaces",
        pou_interface_max(space, d, pou).max(pou_interface_max(&cspace, &cd, &cpou)),
        0.0,
    ));
    Ok(())
}

fn prolongation_check(toy: &Toy, rng: &mut ChaCha8Rng) -> Check {
    let w = rand_vec(toy.problem.ndof(), rng);
    let mut back = vec![C64::zero(); w.len()];
    for j in 0..toy.prec.num_subdomains() {
        for (b, v) in back.iter_mut().zip(toy.prec.prolong(j, &toy.prec.decomp.restrict(j, &w))) {
            *b += v;
        }
    }
    let worst = back.iter().zip(&w).map(|(a, b)| (a - b).norm() / b.norm()).fold(0.0, f64::max);
    Check::new("weighted prolongations of restrictions sum to the input", worst, 4.0 * f64::EPSILON)
}

fn b_functional_check(toy: &Toy, rng: &mut ChaCha8Rng) -> Check {
    let w = rand_vec(toy.problem.ndof(), rng);
    let scale = toy.problem.a.max_abs() * w.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let mut worst: f64 = 0.0;
    for (j, local) in toy.prec.locals.iter().enumerate() {
        let b = b_functional(&toy.problem, local, &w);
        let mut on_gamma = vec![false; local.len()];
        for i in interface_dofs(&toy.problem.space, &toy.prec.decomp, j) {
            on_gamma[i] = true;
        }
        for (v, g) in b.iter().zip(on_gamma) {
            if !g {
                worst = worst.max(v.norm() / scale);
            }
        }
    }
    Check::new("transmission functional vanishes away from interfaces", worst, 1e-12)
}

fn stepper_checks(toys: &[&Toy], rng: &mut ChaCha8Rng, out: &mut Vec<Check>) -> Result<()> {
    let (mut equiv, mut fixed, mut recursion): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for toy in toys {
        let (pr, prec) = (&toy.problem, &toy.prec);
        let f = plane_wave_load(&pr.space, pr.k);
        let uh = lu_factor(&pr.a)?.solve(&f);
        let scale = norm2(&uh);
        for _ in 0..5 {
            let mut a = rand_vec(pr.ndof(), rng);
            let mut b = a.clone();
            for _ in 0..5 {
                let z = prec.apply_vec(&pr.residual(&f, &a));
                a.iter_mut().zip(z).for_each(|(u, d)| *u += d);
                b = schwarz_step(pr, prec, &f, &b).0;
                equiv = equiv.max(diff(&a, &b) / scale);
            }
        }
        let (next, _) = schwarz_step(pr, prec, &f, &uh);
        let mut rich = uh.clone();
        let z = prec.apply_vec(&pr.residual(&f, &uh));
        rich.iter_mut().zip(z).for_each(|(u, d)| *u += d);
        fixed = fixed.max(rel(&next, &uh)).max(rel(&rich, &uh));
        // e^{n+1} = T e^n along a Schwarz run
        let u0 = rand_vec(pr.ndof(), rng);
        let (u1, l1) = schwarz_step(pr, prec, &f, &u0);
        let (_, l2) = schwarz_step(pr, prec, &f, &u1);
        let e1 = ErrorVector::from_difference(prec, &uh, &l1);
        let e2 = ErrorVector::from_difference(prec, &uh, &l2);
        let te1 = prec.t_apply(pr, &e1);
        let num: f64 = e2.components.iter().zip(&te1.components).map(|(a, b)| diff(a, b).powi(2)).sum::<f64>().sqrt();
        recursion = recursion.max(num / e2.norm2());
    }
    out.push(Check::new("Richardson and Schwarz iterates coincide", equiv, 1e-10));
    out.push(Check::new("discrete solution is a fixed point of both steppers", fixed, 1e-10));
    out.push(Check::new("Schwarz errors follow the error propagation operator", recursion, 1e-10));
    Ok(())
}

fn t_structure_checks(toy: &Toy, rng: &mut ChaCha8Rng, out: &mut Vec<Check>) {
    let (pr, prec) = (&toy.problem, &toy.prec);
    let n = prec.num_subdomains();
    let (mut zero_ratio, mut harmonic): (f64, f64) = (0.0, 0.0);
    for l in 0..n {
        let w = rand_vec(prec.locals[l].len(), rng);
        let scale = (0..n).map(|j| norm2(&prec.t_block_apply(pr, j, l, &w))).fold(0.0, f64::max);
        for j in 0..n {
            // computed without the adjacency shortcut of `t_block_apply`
            let v = prec.locals[j].solve(&b_functional(pr, &prec.locals[j], &prec.prolong(l, &w)));
            if j == l || j.abs_diff(l) >= 2 {
                zero_ratio = zero_ratio.max(norm2(&v) / scale);
                continue;
            }
            let local = &prec.locals[j];
            let r = local.a.mul_vec(&v);
            let on_gamma = interface_dofs(&pr.space, &prec.decomp, j);
            let s = local.a.max_abs() * v.iter().map(|x| x.norm()).fold(0.0, f64::max);
            for (i, ri) in r.iter().enumerate() {
                if on_gamma.binary_search(&i).is_err() {
                    harmonic = harmonic.max(ri.norm() / s);
                }
            }
        }
    }
    out.push(Check::new("error propagation blocks vanish off the tridiagonal", zero_ratio, 1e-10));
    out.push(Check::new("error propagation output is discrete Helmholtz-harmonic", harmonic, 1e-10));
}

fn impedance_checks(si: &StripImpedance, rng: &mut ChaCha8Rng, out: &mut Vec<Check>) -> Result<()> {
    let n = si.num_subdomains();
    let (pr, prec) = (si.problem, si.prec);
    let (mut roundtrip, mut vanish, mut split, mut pyth, mut resplit, mut t20): (f64, f64, f64, f64, f64, f64) =
        (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    for l in 0..n {
        let gm = rand_vec(si.face(l, Face::Minus).dim(), rng);
        let gp = rand_vec(si.face(l, Face::Plus).dim(), rng);
        let wm = si.harmonic_lift(l, Face::Minus, &gm);
        let wp = si.harmonic_lift(l, Face::Plus, &gp);
        let w: Vec<C64> = wm.iter().zip(&wp).map(|(a, b)| a + b).collect();
        let g = si.discrete_impedance_data(l, &w)?;
        let gnorm = norm2(&gm).hypot(norm2(&gp));
        roundtrip = roundtrip.max(diff(&g.minus, &gm).hypot(diff(&g.plus, &gp)) / gnorm);
        for (part, data, other) in [(&wm, &gm, Face::Plus), (&wp, &gp, Face::Minus)] {
            if data.is_empty() {
                continue;
            }
            let d = si.discrete_impedance_data(l, part)?;
            vanish = vanish.max(norm2(d.face(other)) / norm2(data));
        }
        let (sm, sp) = si.split(l, &w)?;
        let sum: Vec<C64> = sm.iter().zip(&sp).map(|(a, b)| a + b).collect();
        split = split.max(rel(&sum, &w));
        let (a, b, c) = (si.v0_norm(l, &w)?, si.v0_norm(l, &sm)?, si.v0_norm(l, &sp)?);
        pyth = pyth.max((a * a - b * b - c * c).abs() / (a * a));
        if !gm.is_empty() {
            let (mm, mp) = si.split(l, &sm)?;
            resplit = resplit.max(rel(&mm, &sm)).max(norm2(&mp) / norm2(&sm));
        }
        for s in Face::BOTH {
            let src = si.face(l, s).dim();
            if src == 0 {
                continue;
            }
            for (j, t) in [(l.wrapping_sub(1), Face::Plus), (l + 1, Face::Minus)] {
                if j >= n || si.face(j, t).dim() == 0 {
                    continue;
                }
                let map = si.imp_to_imp(l, s, j, t)?;
                let gs = rand_vec(src, rng);
                let w = si.harmonic_lift(l, s, &gs);
                let lhs = si.discrete_impedance_data(j, &prec.t_block_apply(pr, j, l, &w))?;
                t20 = t20.max(rel(lhs.face(t), &map.apply(&gs)));
            }
        }
    }
    out.push(Check::new("impedance data of a harmonic lift returns the data", roundtrip, 1e-10));
    out.push(Check::new("one-sided functions carry no data on the other face", vanish, 1e-10));
    out.push(Check::new("one-sided split reproduces the function", split, 1e-10));
    out.push(Check::new("one-sided split satisfies Pythagoras", pyth, 1e-10));
    out.push(Check::new("re-splitting a one-sided function is the identity", resplit, 1e-10));
    out.push(Check::new("impedance maps intertwine single error propagation blocks", t20, 1e-9));
    Ok(())
}

/// Lower (`ℓ = j−1`) or upper (`ℓ = j+1`) part of the error propagation.
fn t_part(si: &StripImpedance, v: &ErrorVector, lower: bool) -> ErrorVector {
    let n = si.num_subdomains();
    let components = (0..n)
        .map(|j| {
            let l = if lower { j.wrapping_sub(1) } else { j + 1 };
            if l < n {
                si.prec.t_block_apply(si.problem, j, l, &v.components[l])
            } else {
                vec![C64::zero(); si.prec.locals[j].len()]
            }
        })
        .collect();
    ErrorVector { components }
}

fn block_checks(si: &StripImpedance, rng: &mut ChaCha8Rng, out: &mut Vec<Check>) -> Result<()> {
    let block = si.block_operator()?;
    let off = si.block_offsets();
    let n = si.num_subdomains();
    let dim = block.dim();
    let (mut inter, mut corr_eq, mut corr_zero): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for _ in 0..10 {
        let c = rand_vec(dim, rng);
        let v = si.lift(&c);
        let ic: Vec<C64> = (0..dim).map(|i| (0..dim).map(|j| block.matrix[(i, j)] * c[j]).sum()).collect();
        let tv = si.impedance_coords(&si.prec.t_apply(si.problem, &v))?;
        inter = inter.max(rel(&tv, &ic));
        // lower part lands on − faces only, upper part on + faces only
        let (minus, plus) = (0..off[n], off[n]..dim);
        let lc = si.impedance_coords(&t_part(si, &v, true))?;
        let uc = si.impedance_coords(&t_part(si, &v, false))?;
        corr_eq = corr_eq.max(rel(&lc[minus.clone()], &ic[minus.clone()])).max(rel(&uc[plus.clone()], &ic[plus.clone()]));
        let scale = norm2(&ic);
        corr_zero = corr_zero.max(norm2(&lc[plus]) / scale).max(norm2(&uc[minus]) / scale);
    }
    out.push(Check::new("block impedance operator intertwines error propagation", inter, 1e-9));
    out.push(Check::new("lower and upper parts reproduce their block rows", corr_eq, 1e-9));
    out.push(Check::new("lower and upper parts vanish on the opposite faces", corr_zero, 1e-9));

    // second route: columns from the error propagation operator itself,
    // norm by power iteration in the trace-mass inner product
    let mass = block.mass.map(|v| C64::new(v, 0.0));
    let chol = block.mass.clone().cholesky().expect("trace mass is positive definite");
    let mut x = DMatrix::<C64>::identity(dim, dim);
    let mut worst: f64 = 0.0;
    let basis: Vec<ErrorVector> = (0..dim)
        .map(|m| {
            let mut e = vec![C64::zero(); dim];
            e[m] = C64::new(1.0, 0.0);
            si.lift(&e)
        })
        .collect();
    let mut powers = basis.clone();
    for nn in 1..=3 {
        powers = powers.iter().map(|v| si.prec.t_apply(si.problem, v)).collect();
        for (m, v) in powers.iter().enumerate() {
            x.set_column(m, &nalgebra::DVector::from_vec(si.impedance_coords(v)?));
        }
        let est = power_iteration_norm(&x, &mass, &chol, rng);
        let exact = block.power_norm(nn)?;
        worst = worst.max((est - exact).abs() / exact);
    }
    out.push(Check::new("power norms agree with power iteration on the error propagation", worst, 1e-6));
    Ok(())
}

fn power_iteration_norm(
    x: &DMatrix<C64>,
    mass: &DMatrix<C64>,
    chol: &nalgebra::Cholesky<f64, nalgebra::Dyn>,
    rng: &mut ChaCha8Rng,
) -> f64 {
    let dim = x.nrows();
    let msolve = |r: &DMatrix<C64>| {
        let re = chol.solve(&r.map(|v| v.re));
        let im = chol.solve(&r.map(|v| v.im));
        DMatrix::from_fn(dim, 1, |i, _| C64::new(re[(i, 0)], im[(i, 0)]))
    };
    let mnorm = |c: &DMatrix<C64>| (c.adjoint() * mass * c)[(0, 0)].re.sqrt();
    let mut c = DMatrix::from_column_slice(dim, 1, &rand_vec(dim, rng));
    let mut est = 0.0;
    for _ in 0..20_000 {
        let nc = mnorm(&c);
        c /= C64::new(nc, 0.0);
        let y = x * &c;
        let next = mnorm(&y);
        let z = msolve(&(x.adjoint() * (mass * &y)));
        if (next - est).abs() <= 1e-13 * next {
            return next;
        }
        est = next;
        c = z;
    }
    est
}

/// Explicit dense matrices of `B⁻¹` and `E = I − B⁻¹A` against the operators.
pub fn dense_oracle_check(toy: &Toy) -> Result<Check> {
    let (pr, prec) = (&toy.problem, &toy.prec);
    let n = pr.ndof();
    let mut binv = DMatrix::<C64>::zeros(n, n);
    for (j, local) in prec.locals.iter().enumerate() {
        let m = local.len();
        let aj = DMatrix::from_fn(m, m, |r, c| local.a.get(r, c));
        let aj_inv = aj.try_inverse().ok_or(crate::Error::SingularMatrix { column: 0, pivot: 0.0 })?;
        let dofs = &local.numbering.dofs;
        let chi = &prec.pou.weights[j];
        for r in 0..m {
            for c in 0..m {
                binv[(dofs[r], dofs[c])] += aj_inv[(r, c)] * chi[r];
            }
        }
    }
    let a = DMatrix::from_fn(n, n, |r, c| pr.a.get(r, c));
    let e = DMatrix::<C64>::identity(n, n) - &binv * &a;
    let zero = vec![C64::zero(); n];
    let (mut worst, bmax, emax) = (0.0f64, binv.camax(), e.camax());
    for m in 0..n {
        let mut u = vec![C64::zero(); n];
        u[m] = C64::new(1.0, 0.0);
        let bcol = prec.apply_vec(&u);
        let ecol = schwarz_step(pr, prec, &zero, &u).0;
        for i in 0..n {
            worst = worst.max((bcol[i] - binv[(i, m)]).norm() / bmax).max((ecol[i] - e[(i, m)]).norm() / emax);
        }
    }
    Ok(Check::new("explicit dense preconditioner and propagation matrices match", worst, 1e-12))
}

/// Runs every check. Random vectors come from a ChaCha8 stream seeded with `seed`.
pub fn run_verify(seed: u64) -> Result<VerifyReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let toy2 = strip_toy(2)?;
    let toy3 = strip_toy(3)?;
    let mut checks = Vec::new();
    partition_checks(&toy3, &mut checks)?;
    checks.push(prolongation_check(&toy3, &mut rng));
    checks.push(b_functional_check(&toy3, &mut rng));
    stepper_checks(&[&toy2, &toy3], &mut rng, &mut checks)?;
    t_structure_checks(&toy3, &mut rng, &mut checks);
    let si = StripImpedance::new(&toy3.problem, &toy3.prec)?;
    impedance_checks(&si, &mut rng, &mut checks)?;
    block_checks(&si, &mut rng, &mut checks)?;
    checks.push(dense_oracle_check(&toy2)?);
    Ok(VerifyReport { seed, checks })
}
