//! Sesquilinear Helmholtz forms on element subsets, impedance loads and the
//! interface functional.
//!
//! Vector convention: the form `a(u, v)` is `conj(v)ᵀ A u`, linear in the
//! trial function `u` and conjugate-linear in the test function `v`. Since
//! the basis is real, `A = K − k² M − i k B` with real symmetric `K`, `M`, `B`.

use num_complex::Complex64 as C64;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::fespace::{lagrange_1d, reference_mass_1d, LagrangeSpace, Segment, TraceSpace};
use crate::linalg::{lu_factor, CsrComplex, CsrReal, SparseLu, TripletBuilder};
use crate::quadrature::gauss_legendre;

/// Local numbering of a subset of the global dofs, sorted by global index.
#[derive(Clone, Debug)]
pub struct LocalNumbering {
    pub dofs: Vec<usize>,
    index: Vec<u32>,
}

impl LocalNumbering {
    const NONE: u32 = u32::MAX;

    pub fn new(ndof: usize, mut dofs: Vec<usize>) -> Self {
        dofs.sort_unstable();
        dofs.dedup();
        let mut index = vec![Self::NONE; ndof];
        for (i, &d) in dofs.iter().enumerate() {
            index[d] = i as u32;
        }
        Self { dofs, index }
    }

    /// All dofs of the listed elements.
    pub fn from_elements(space: &LagrangeSpace, elements: &[usize]) -> Self {
        let mut mark = vec![false; space.ndof];
        for &t in elements {
            for &d in space.element_dofs(t) {
                mark[d] = true;
            }
        }
        let dofs = (0..space.ndof).filter(|&d| mark[d]).collect();
        Self::new(space.ndof, dofs)
    }

    pub fn len(&self) -> usize {
        self.dofs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dofs.is_empty()
    }

    pub fn global_len(&self) -> usize {
        self.index.len()
    }

    pub fn local(&self, global: usize) -> Option<usize> {
        let i = self.index[global];
        (i != Self::NONE).then_some(i as usize)
    }

    /// Boolean restriction `R w`.
    pub fn restrict<T: Copy>(&self, w: &[T]) -> Vec<T> {
        self.dofs.iter().map(|&d| w[d]).collect()
    }

    /// Nodewise zero extension `Rᵀ w_loc`.
    pub fn extend(&self, w_loc: &[C64]) -> Vec<C64> {
        let mut out = vec![C64::zero(); self.global_len()];
        for (&d, &v) in self.dofs.iter().zip(w_loc) {
            out[d] = v;
        }
        out
    }
}

/// Real matrices of one region `D`: `K_D`, `M_D` and the mass `B_{∂D}` on its
/// whole boundary.
#[derive(Clone, Debug)]
pub struct RegionMatrices {
    pub stiffness: CsrReal,
    pub mass: CsrReal,
    pub boundary_mass: CsrReal,
}

impl RegionMatrices {
    /// `K − k² M − i k B`.
    pub fn helmholtz(&self, k: f64) -> CsrComplex {
        CsrReal::combine(&[
            (C64::new(1.0, 0.0), &self.stiffness),
            (C64::new(-k * k, 0.0), &self.mass),
            (C64::new(0.0, -k), &self.boundary_mass),
        ])
    }
}

/// Mesh edges on the boundary of the union of `elements`, i.e. edges with
/// exactly one adjacent triangle in the set.
pub fn region_boundary_edges(space: &LagrangeSpace, elements: &[usize]) -> Vec<usize> {
    let mesh = &space.mesh;
    let mut inside = vec![false; mesh.num_triangles()];
    for &t in elements {
        inside[t] = true;
    }
    let mut edges = Vec::new();
    for &t in elements {
        for &e in &mesh.triangle_edges[t] {
            let n = mesh.edge_triangles[e].iter().flatten().filter(|&&s| inside[s]).count();
            if n == 1 {
                edges.push(e);
            }
        }
    }
    edges.sort_unstable();
    edges
}

/// Assembles `K`, `M` over `elements` and `B` over the region boundary, in the
/// numbering `numbering` (which must contain every dof of the elements).
pub fn assemble_region(space: &LagrangeSpace, elements: &[usize], numbering: &LocalNumbering) -> RegionMatrices {
    let n = numbering.len();
    let nloc = space.nloc;
    // all triangles of one orientation are translates of each other
    let cache = [space.element_matrices(0), space.element_matrices(1)];
    let cap = elements.len() * nloc * nloc;
    let mut kb = TripletBuilder::with_capacity(n, n, cap);
    let mut mb = TripletBuilder::with_capacity(n, n, cap);
    let mut loc = vec![0usize; nloc];
    for &t in elements {
        let (ke, me) = &cache[t % 2];
        for (l, &d) in loc.iter_mut().zip(space.element_dofs(t)) {
            *l = numbering.local(d).expect("element dof outside the local numbering");
        }
        for a in 0..nloc {
            for b in 0..nloc {
                kb.push(loc[a], loc[b], ke[a * nloc + b]);
                mb.push(loc[a], loc[b], me[a * nloc + b]);
            }
        }
    }
    let p = space.degree;
    let mref = reference_mass_1d(p);
    let mut bb = TripletBuilder::new(n, n);
    for e in region_boundary_edges(space, elements) {
        let [a, b] = space.mesh.edges[e].map(|v| space.mesh.vertices[v]);
        let len = (b[0] - a[0]).hypot(b[1] - a[1]);
        let dofs: Vec<usize> = space.edge_dofs(e).iter().map(|&d| numbering.local(d).unwrap()).collect();
        for i in 0..=p {
            for j in 0..=p {
                bb.push(dofs[i], dofs[j], len * mref[i][j]);
            }
        }
    }
    RegionMatrices { stiffness: kb.build(), mass: mb.build(), boundary_mass: bb.build() }
}

/// The global discrete Helmholtz problem with impedance condition on `∂Ω`.
#[derive(Clone, Debug)]
pub struct HelmholtzProblem {
    pub k: f64,
    pub space: LagrangeSpace,
    pub a: CsrComplex,
    pub stiffness: CsrReal,
    pub mass: CsrReal,
    pub boundary_mass: CsrReal,
}

impl HelmholtzProblem {
    pub fn ndof(&self) -> usize {
        self.space.ndof
    }

    /// `a(u, v) = conj(v)ᵀ A u`.
    pub fn form(&self, u: &[C64], v: &[C64]) -> C64 {
        sesquilinear(&self.a, u, v)
    }

    /// `F − A u`.
    pub fn residual(&self, rhs: &[C64], u: &[C64]) -> Vec<C64> {
        let au = self.a.mul_vec(u);
        rhs.iter().zip(&au).map(|(f, a)| f - a).collect()
    }
}

/// `conj(v)ᵀ A u`.
pub fn sesquilinear(a: &CsrComplex, u: &[C64], v: &[C64]) -> C64 {
    a.mul_vec(u).iter().zip(v).map(|(x, y)| y.conj() * x).sum()
}

pub fn assemble_global(k: f64, space: LagrangeSpace) -> Result<HelmholtzProblem> {
    if !(k > 0.0) {
        return Err(Error::InvalidArgument(format!("wavenumber must be positive, got {k}")));
    }
    let all: Vec<usize> = (0..space.mesh.num_triangles()).collect();
    let numbering = LocalNumbering::new(space.ndof, (0..space.ndof).collect());
    let m = assemble_region(&space, &all, &numbering);
    Ok(HelmholtzProblem {
        k,
        a: m.helmholtz(k),
        stiffness: m.stiffness,
        mass: m.mass,
        boundary_mass: m.boundary_mass,
        space,
    })
}

/// Factored local problem `A_j = K_j − k² M_j − i k B_{∂Ω_j}` on one subdomain.
#[derive(Debug)]
pub struct LocalProblem {
    pub id: usize,
    pub elements: Vec<usize>,
    pub numbering: LocalNumbering,
    pub a: CsrComplex,
    pub factor: SparseLu,
}

impl LocalProblem {
    pub fn len(&self) -> usize {
        self.numbering.len()
    }

    pub fn is_empty(&self) -> bool {
        self.numbering.is_empty()
    }

    pub fn solve(&self, rhs: &[C64]) -> Vec<C64> {
        self.factor.solve(rhs)
    }
}

/// Assembles and factors the local problem on the union of `elements`.
pub fn assemble_local(problem: &HelmholtzProblem, id: usize, elements: &[usize]) -> Result<LocalProblem> {
    let numbering = LocalNumbering::from_elements(&problem.space, elements);
    let a = assemble_region(&problem.space, elements, &numbering).helmholtz(problem.k);
    let factor =
        lu_factor(&a).map_err(|e| Error::LocalProblemSingular { subdomain: id, source: Box::new(e) })?;
    Ok(LocalProblem { id, elements: elements.to_vec(), numbering, a, factor })
}

/// `r_i = ∫_Γ g φ_i` for a function `g` on a resolved segment, as a global vector.
pub fn load_impedance_fn(
    space: &LagrangeSpace,
    trace: &TraceSpace,
    g: impl Fn([f64; 2]) -> C64,
) -> Vec<C64> {
    let r = trace.load_function(space, g);
    embed_trace(trace, &r, space.ndof, None)
}

/// `r = Ê M_Γ c` for trace coefficients `c`, in the numbering `numbering` (or
/// globally when `None`).
pub fn load_impedance_coeffs(
    trace: &TraceSpace,
    c: &[C64],
    n: usize,
    numbering: Option<&LocalNumbering>,
) -> Vec<C64> {
    embed_trace(trace, &trace.apply_mass(c), n, numbering)
}

/// Scatters trace-indexed values into a vector of length `n`.
pub fn embed_trace(trace: &TraceSpace, values: &[C64], n: usize, numbering: Option<&LocalNumbering>) -> Vec<C64> {
    let mut out = vec![C64::zero(); n];
    for (&d, &v) in trace.dofs.iter().zip(values) {
        let i = match numbering {
            Some(num) => num.local(d).expect("trace dof outside the local numbering"),
            None => d,
        };
        out[i] += v;
    }
    out
}

/// `r_i = ∫_{∂Ω} g(x, n) φ_i` with `n` the outward unit normal.
pub fn boundary_load(space: &LagrangeSpace, g: impl Fn([f64; 2], [f64; 2]) -> C64) -> Vec<C64> {
    let p = space.degree;
    let (xs, ws) = gauss_legendre(p + 4);
    let basis: Vec<Vec<f64>> = xs.iter().map(|&t| lagrange_1d(p, t)).collect();
    let mut r = vec![C64::zero(); space.ndof];
    for &(e, side) in &space.mesh.boundary_edges {
        let [a, b] = space.mesh.edges[e].map(|v| space.mesh.vertices[v]);
        let len = (b[0] - a[0]).hypot(b[1] - a[1]);
        let dofs = space.edge_dofs(e);
        let normal = side.normal();
        for (q, (&t, &w)) in xs.iter().zip(&ws).enumerate() {
            let x = [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
            let gv = g(x, normal) * (w * len);
            for (d, phi) in dofs.iter().zip(&basis[q]) {
                r[*d] += gv * *phi;
            }
        }
    }
    r
}

/// Load for the impedance datum `g = (∂_n − i k) e^{i k x}` on `∂Ω`, for which
/// the plane wave `e^{i k x}` is the exact solution.
pub fn plane_wave_load(space: &LagrangeSpace, k: f64) -> Vec<C64> {
    boundary_load(space, |x, n| {
        let u = C64::new(0.0, k * x[0]).exp();
        C64::new(0.0, k) * (n[0] - 1.0) * u
    })
}

/// Riesz vector of `b_{h,j}(w, ·)` on `V_j`: `A_j (R_j w) − R_j (A w)`.
pub fn b_functional(problem: &HelmholtzProblem, local: &LocalProblem, w: &[C64]) -> Vec<C64> {
    let wl = local.numbering.restrict(w);
    let mut out = local.a.mul_vec(&wl);
    for (i, &d) in local.numbering.dofs.iter().enumerate() {
        let (cols, vals) = problem.a.row(d);
        let s: C64 = cols.iter().zip(vals).map(|(&c, &v)| v * w[c]).sum();
        out[i] -= s;
    }
    out
}

/// Trace space on `segment` built from `problem`'s space.
pub fn segment_trace(problem: &HelmholtzProblem, segment: Option<&Segment>) -> Result<TraceSpace> {
    crate::fespace::trace_space(&problem.space, segment)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fespace::{build_space, nodal_interpolate, trace_space};
    use crate::mesh::{build_uniform_mesh, RectDomain, Side};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn problem(l: f64, nx: usize, ny: usize, p: usize, k: f64) -> HelmholtzProblem {
        let mesh = build_uniform_mesh(RectDomain::new(l, 1.0).unwrap(), nx, ny).unwrap();
        assemble_global(k, build_space(mesh, p).unwrap()).unwrap()
    }

    fn random_vec(n: usize, rng: &mut ChaCha8Rng) -> Vec<C64> {
        (0..n).map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect()
    }

    #[test]
    fn cached_element_matrices_match_direct() {
        let mesh = build_uniform_mesh(RectDomain::new(1.5, 1.0).unwrap(), 3, 2).unwrap();
        let s = build_space(mesh, 3).unwrap();
        for t in 0..s.mesh.num_triangles() {
            let (k, m) = s.element_matrices(t);
            let (k0, m0) = s.element_matrices(t % 2);
            for i in 0..k.len() {
                assert!((k[i] - k0[i]).abs() < 1e-13 && (m[i] - m0[i]).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn basic_matrix_identities() {
        for p in 1..=4 {
            let pr = problem(2.0, 4, 3, p, 5.0);
            for i in 0..pr.ndof() {
                let (_, v) = pr.stiffness.row(i);
                assert!(v.iter().sum::<f64>().abs() < 1e-12);
            }
            assert!((pr.mass.data().iter().sum::<f64>() - 2.0).abs() < 1e-12);
            assert!((pr.boundary_mass.data().iter().sum::<f64>() - 6.0).abs() < 1e-12);
            for m in [&pr.stiffness, &pr.mass, &pr.boundary_mass] {
                let t = m.transpose();
                for i in 0..m.nrows() {
                    let (c, v) = m.row(i);
                    for (&j, &x) in c.iter().zip(v) {
                        assert!((t.get(i, j) - x).abs() < 1e-14);
                    }
                }
            }
            for i in 0..pr.ndof() {
                let (c, v) = pr.a.row(i);
                for (&j, &x) in c.iter().zip(v) {
                    let want = C64::new(pr.stiffness.get(i, j) - 25.0 * pr.mass.get(i, j), -5.0 * pr.boundary_mass.get(i, j));
                    assert!((x - want).norm() <= 1e-14 * want.norm().max(1.0));
                }
            }
        }
    }

    #[test]
    fn sesquilinearity_convention() {
        let pr = problem(1.0, 3, 3, 2, 4.0);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (u, v) = (random_vec(pr.ndof(), &mut rng), random_vec(pr.ndof(), &mut rng));
        let (al, be) = (C64::new(0.3, -1.2), C64::new(-0.7, 0.4));
        let au: Vec<C64> = u.iter().map(|x| al * x).collect();
        let bv: Vec<C64> = v.iter().map(|x| be * x).collect();
        let lhs = pr.form(&au, &bv);
        let rhs = al * be.conj() * pr.form(&u, &v);
        assert!((lhs - rhs).norm() < 1e-12 * rhs.norm());
    }

    #[test]
    fn plane_wave_is_reproduced() {
        let k = 10.0;
        let pr = problem(1.0, 40, 40, 1, k);
        let f = plane_wave_load(&pr.space, k);
        let u = lu_factor(&pr.a).unwrap().solve(&f);
        let (err, nrm) = pr.space.l2_error(&u, |x| C64::new(0.0, k * x[0]).exp());
        assert!(err / nrm < 0.03, "relative error {}", err / nrm);
        // Galerkin orthogonality of the residual
        let r = pr.residual(&f, &u);
        assert!(crate::linalg::norm2(&r) < 1e-10 * crate::linalg::norm2(&f));
    }

    #[test]
    fn whole_domain_local_problem_equals_global() {
        let pr = problem(1.0, 4, 4, 2, 3.0);
        let all: Vec<usize> = (0..pr.space.mesh.num_triangles()).collect();
        let lp = assemble_local(&pr, 0, &all).unwrap();
        assert_eq!(lp.a.indptr(), pr.a.indptr());
        assert_eq!(lp.a.indices(), pr.a.indices());
        assert_eq!(lp.a.data(), pr.a.data());
    }

    #[test]
    fn disjoint_halves_sum_to_global_stiffness() {
        let pr = problem(2.0, 6, 3, 2, 3.0);
        let mesh = &pr.space.mesh;
        let (left, right): (Vec<usize>, Vec<usize>) =
            (0..mesh.num_triangles()).partition(|&t| mesh.cell_of(t).0 < 3);
        let n = pr.ndof();
        let mut sum = vec![vec![0.0; n]; n];
        for part in [&left, &right] {
            let num = LocalNumbering::from_elements(&pr.space, part);
            let m = assemble_region(&pr.space, part, &num);
            for i in 0..num.len() {
                let (c, v) = m.stiffness.row(i);
                for (&j, &x) in c.iter().zip(v) {
                    sum[num.dofs[i]][num.dofs[j]] += x;
                }
            }
        }
        let full = pr.stiffness.to_dense();
        for i in 0..n {
            for j in 0..n {
                assert!((sum[i][j] - full[i][j]).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn local_minus_restricted_global_is_interface_term() {
        // A_j − R A Rᵀ = −ik B_{Γ_j} at dofs not coupled to the outside
        let k = 3.0;
        let pr = problem(2.0, 8, 4, 1, k);
        let mesh = &pr.space.mesh;
        let elems: Vec<usize> = (0..mesh.num_triangles()).filter(|&t| mesh.cell_of(t).0 < 5).collect();
        let lp = assemble_local(&pr, 0, &elems).unwrap();
        let gamma = trace_space(&pr.space, Some(&Segment::vertical(1.25, 0.0, 1.0))).unwrap();
        let on_gamma = |g: usize| gamma.dofs.contains(&g);
        for i in 0..lp.len() {
            for j in 0..lp.len() {
                let (gi, gj) = (lp.numbering.dofs[i], lp.numbering.dofs[j]);
                let diff = lp.a.get(i, j) - pr.a.get(gi, gj);
                if on_gamma(gi) && on_gamma(gj) {
                    // outside elements and the bottom/top corners also differ here
                    let corner = |g: usize| {
                        let y = pr.space.dof_coords[g][1];
                        y == 0.0 || y == 1.0
                    };
                    if corner(gi) || corner(gj) {
                        continue;
                    }
                    let pos = |g| gamma.dofs.iter().position(|&d| d == g).unwrap();
                    let want = -k * gamma.mass[(pos(gi), pos(gj))];
                    assert!((diff.im - want).abs() < 1e-13);
                } else {
                    assert!(diff.norm() < 1e-13, "({gi},{gj}) {diff}");
                }
            }
        }
    }

    #[test]
    fn impedance_loads() {
        let pr = problem(1.0, 2, 2, 1, 1.0);
        let tr = trace_space(&pr.space, Some(&Segment::side(pr.space.domain(), Side::Left))).unwrap();
        let zero = load_impedance_fn(&pr.space, &tr, |_| C64::zero());
        assert!(zero.iter().all(|v| v.is_zero()));
        let one = load_impedance_fn(&pr.space, &tr, |_| C64::new(1.0, 0.0));
        assert!((one.iter().sum::<C64>() - 1.0).norm() < 1e-14);
        for m in 0..tr.dim() {
            let mut e = vec![C64::zero(); tr.dim()];
            e[m] = C64::new(1.0, 0.0);
            let r = load_impedance_coeffs(&tr, &e, pr.ndof(), None);
            let via_fn = load_impedance_fn(&pr.space, &tr, |x| {
                let c: Vec<C64> = nodal_interpolate(&pr.space, |_| C64::zero());
                let mut c = c;
                c[tr.dofs[m]] = C64::new(1.0, 0.0);
                pr.space.evaluate(&c, x)
            });
            for (i, &d) in tr.dofs.iter().enumerate() {
                assert!((r[d] - tr.mass[(i, m)]).norm() < 1e-15);
                assert!((via_fn[d] - r[d]).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn b_functional_properties() {
        let pr = problem(2.0, 8, 4, 2, 4.0);
        let mesh = &pr.space.mesh;
        let elems: Vec<usize> = (0..mesh.num_triangles()).filter(|&t| mesh.cell_of(t).0 < 5).collect();
        let lp = assemble_local(&pr, 0, &elems).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let w = random_vec(pr.ndof(), &mut rng);
        let b = b_functional(&pr, &lp, &w);
        // vanishes against tests that are zero on Γ_j (x = 1.25)
        let gamma = trace_space(&pr.space, Some(&Segment::vertical(1.25, 0.0, 1.0))).unwrap();
        let scale = crate::linalg::norm2(&w) * pr.a.max_abs();
        for (i, &d) in lp.numbering.dofs.iter().enumerate() {
            if !gamma.dofs.contains(&d) {
                assert!(b[i].norm() < 1e-12 * scale);
            }
        }
        // supported away from Ω_j
        let mut far = w.clone();
        for (d, x) in pr.space.dof_coords.iter().enumerate() {
            if x[0] < 1.5 + 1e-12 {
                far[d] = C64::zero();
            }
        }
        assert!(b_functional(&pr, &lp, &far).iter().all(|v| v.norm() < 1e-12 * scale));
    }
}
