//! Continuous Lagrange spaces of degree `1 ≤ p ≤ 4` and their traces on
//! straight segments.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::mesh::{RectDomain, Side, TriMesh};
use crate::quadrature::{gauss_legendre, triangle_rule, TriangleRule};

/// Degree-`p` Lagrange element on the reference triangle with equispaced
/// nodes `(i/p, j/p)`, listed with `j` outer and `i` inner.
#[derive(Clone, Debug)]
pub struct ReferenceElement {
    pub degree: usize,
    /// Lattice indices `(i, j)` of the local nodes.
    pub lattice: Vec<(usize, usize)>,
    /// Monomial exponents `(a, b)` of the expansion basis.
    monomials: Vec<(usize, usize)>,
    /// `coeffs[(m, r)]`: coefficient of monomial `m` in basis function `r`.
    coeffs: DMatrix<f64>,
    pub rule: TriangleRule,
    /// `phi[q][r]` at the quadrature points.
    pub phi: Vec<Vec<f64>>,
    /// `dphi[q][r]` reference gradients at the quadrature points.
    pub dphi: Vec<Vec<[f64; 2]>>,
}

impl ReferenceElement {
    pub fn new(p: usize) -> Result<Self> {
        if !(1..=4).contains(&p) {
            return Err(Error::UnsupportedDegree(p));
        }
        let mut lattice = Vec::new();
        for j in 0..=p {
            for i in 0..=p - j {
                lattice.push((i, j));
            }
        }
        let monomials: Vec<(usize, usize)> = lattice.clone();
        let n = lattice.len();
        let vand = DMatrix::from_fn(n, n, |r, m| {
            let (x, y) = (lattice[r].0 as f64 / p as f64, lattice[r].1 as f64 / p as f64);
            x.powi(monomials[m].0 as i32) * y.powi(monomials[m].1 as i32)
        });
        let coeffs = vand.try_inverse().expect("Lagrange Vandermonde matrix is invertible");
        let rule = triangle_rule(2 * p);
        let mut el = Self { degree: p, lattice, monomials, coeffs, rule, phi: Vec::new(), dphi: Vec::new() };
        let pts = el.rule.points.clone();
        for q in pts {
            let (v, g) = el.eval(q);
            el.phi.push(v);
            el.dphi.push(g);
        }
        Ok(el)
    }

    pub fn num_nodes(&self) -> usize {
        self.lattice.len()
    }

    /// Values and reference gradients of all basis functions at `xi`.
    pub fn eval(&self, xi: [f64; 2]) -> (Vec<f64>, Vec<[f64; 2]>) {
        let n = self.num_nodes();
        let mut mv = vec![0.0; n];
        let mut mg = vec![[0.0; 2]; n];
        for (m, &(a, b)) in self.monomials.iter().enumerate() {
            let (x, y) = (xi[0], xi[1]);
            mv[m] = x.powi(a as i32) * y.powi(b as i32);
            let dx = if a > 0 { a as f64 * x.powi(a as i32 - 1) * y.powi(b as i32) } else { 0.0 };
            let dy = if b > 0 { b as f64 * x.powi(a as i32) * y.powi(b as i32 - 1) } else { 0.0 };
            mg[m] = [dx, dy];
        }
        let mut v = vec![0.0; n];
        let mut g = vec![[0.0; 2]; n];
        for r in 0..n {
            for m in 0..n {
                let c = self.coeffs[(m, r)];
                v[r] += c * mv[m];
                g[r][0] += c * mg[m][0];
                g[r][1] += c * mg[m][1];
            }
        }
        (v, g)
    }
}

/// Values of the 1-D equispaced Lagrange basis of degree `p` on `[0, 1]` at `t`.
pub fn lagrange_1d(p: usize, t: f64) -> Vec<f64> {
    (0..=p)
        .map(|a| {
            let ta = a as f64 / p as f64;
            (0..=p).filter(|&b| b != a).fold(1.0, |acc, b| {
                let tb = b as f64 / p as f64;
                acc * (t - tb) / (ta - tb)
            })
        })
        .collect()
}

/// Mass matrix of the 1-D degree-`p` basis on `[0, 1]` (unit length).
pub fn reference_mass_1d(p: usize) -> Vec<Vec<f64>> {
    let (x, w) = gauss_legendre(p + 1);
    let mut m = vec![vec![0.0; p + 1]; p + 1];
    for (t, wt) in x.iter().zip(&w) {
        let v = lagrange_1d(p, *t);
        for a in 0..=p {
            for b in 0..=p {
                m[a][b] += wt * v[a] * v[b];
            }
        }
    }
    m
}

/// Global degree-`p` continuous Lagrange space on a uniform mesh.
///
/// Dofs are numbered vertices first, then `p − 1` per edge (ordered from the
/// lower to the higher vertex index), then element interiors.
#[derive(Clone, Debug)]
pub struct LagrangeSpace {
    pub mesh: TriMesh,
    pub degree: usize,
    pub reference: ReferenceElement,
    pub dof_coords: Vec<[f64; 2]>,
    /// Row-major `num_triangles × nloc` local-to-global map in lattice order.
    elem_dofs: Vec<usize>,
    pub nloc: usize,
    pub ndof: usize,
}

impl LagrangeSpace {
    pub fn domain(&self) -> RectDomain {
        self.mesh.domain
    }

    /// Global dofs of triangle `t` in reference lattice order.
    pub fn element_dofs(&self, t: usize) -> &[usize] {
        &self.elem_dofs[t * self.nloc..(t + 1) * self.nloc]
    }

    /// Dofs on edge `e`, from its lower-index vertex to its higher one.
    pub fn edge_dofs(&self, e: usize) -> Vec<usize> {
        let p = self.degree;
        let [a, b] = self.mesh.edges[e];
        let base = self.mesh.num_vertices() + e * (p - 1);
        let mut out = Vec::with_capacity(p + 1);
        out.push(a);
        out.extend(base..base + p - 1);
        out.push(b);
        out
    }

    /// Affine map data of triangle `t`: origin, Jacobian columns, |det J|.
    pub fn geometry(&self, t: usize) -> ([f64; 2], [[f64; 2]; 2], f64) {
        let [a, b, c] = self.mesh.triangles[t].map(|v| self.mesh.vertices[v]);
        let j = [[b[0] - a[0], c[0] - a[0]], [b[1] - a[1], c[1] - a[1]]];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        (a, j, det.abs())
    }

    /// Element stiffness and mass matrices (row-major `nloc × nloc`).
    pub fn element_matrices(&self, t: usize) -> (Vec<f64>, Vec<f64>) {
        let (_, j, det) = self.geometry(t);
        let d = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        // J⁻ᵀ
        let jit = [[j[1][1] / d, -j[1][0] / d], [-j[0][1] / d, j[0][0] / d]];
        let n = self.nloc;
        let r = &self.reference;
        let mut k = vec![0.0; n * n];
        let mut m = vec![0.0; n * n];
        let mut grads = vec![[0.0; 2]; n];
        for (q, w) in r.rule.weights.iter().enumerate() {
            let wq = w * det;
            for (a, g) in grads.iter_mut().enumerate() {
                let gr = r.dphi[q][a];
                *g = [jit[0][0] * gr[0] + jit[0][1] * gr[1], jit[1][0] * gr[0] + jit[1][1] * gr[1]];
            }
            let phi = &r.phi[q];
            for a in 0..n {
                for b in 0..n {
                    k[a * n + b] += wq * (grads[a][0] * grads[b][0] + grads[a][1] * grads[b][1]);
                    m[a * n + b] += wq * phi[a] * phi[b];
                }
            }
        }
        (k, m)
    }

    /// Triangle containing `x` and the reference coordinates of `x` in it.
    pub fn locate(&self, x: [f64; 2]) -> (usize, [f64; 2]) {
        let m = &self.mesh;
        let (dx, dy) = (m.dx(), m.dy());
        let i = ((x[0] / dx).floor() as isize).clamp(0, m.nx as isize - 1) as usize;
        let j = ((x[1] / dy).floor() as isize).clamp(0, m.ny as isize - 1) as usize;
        let (sx, sy) = ((x[0] - i as f64 * dx) / dx, (x[1] - j as f64 * dy) / dy);
        let cell = j * m.nx + i;
        let t = if sy <= sx { 2 * cell } else { 2 * cell + 1 };
        let (a, jac, _) = self.geometry(t);
        let d = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        let (rx, ry) = (x[0] - a[0], x[1] - a[1]);
        let xi = [(jac[1][1] * rx - jac[0][1] * ry) / d, (-jac[1][0] * rx + jac[0][0] * ry) / d];
        (t, xi)
    }

    /// Evaluates the finite-element function with coefficients `c` at `x`.
    pub fn evaluate(&self, c: &[C64], x: [f64; 2]) -> C64 {
        let (t, xi) = self.locate(x);
        let (v, _) = self.reference.eval(xi);
        self.element_dofs(t).iter().zip(&v).map(|(&d, &phi)| c[d] * phi).sum()
    }

    /// `(‖u_h − u‖_{L²}, ‖u‖_{L²})` by element quadrature of degree `2p + 4`.
    pub fn l2_error(&self, c: &[C64], exact: impl Fn([f64; 2]) -> C64) -> (f64, f64) {
        let rule = triangle_rule(2 * self.degree + 4);
        let vals: Vec<Vec<f64>> = rule.points.iter().map(|&q| self.reference.eval(q).0).collect();
        let (mut err, mut nrm) = (0.0, 0.0);
        for t in 0..self.mesh.num_triangles() {
            let (a, j, det) = self.geometry(t);
            let dofs = self.element_dofs(t);
            for (q, w) in rule.weights.iter().enumerate() {
                let xi = rule.points[q];
                let x = [a[0] + j[0][0] * xi[0] + j[0][1] * xi[1], a[1] + j[1][0] * xi[0] + j[1][1] * xi[1]];
                let uh: C64 = dofs.iter().zip(&vals[q]).map(|(&d, &phi)| c[d] * phi).sum();
                let u = exact(x);
                err += w * det * (uh - u).norm_sqr();
                nrm += w * det * u.norm_sqr();
            }
        }
        (err.sqrt(), nrm.sqrt())
    }
}

/// Builds the degree-`p` space on `mesh`.
pub fn build_space(mesh: TriMesh, p: usize) -> Result<LagrangeSpace> {
    let reference = ReferenceElement::new(p)?;
    let nv = mesh.num_vertices();
    let ne = mesh.num_edges();
    let nt = mesh.num_triangles();
    let nint = (p.saturating_sub(1)) * (p.saturating_sub(2)) / 2;
    let ndof = nv + (p - 1) * ne + nint * nt;
    let nloc = reference.num_nodes();
    let mut dof_coords = vec![[0.0; 2]; ndof];
    for (v, x) in mesh.vertices.iter().enumerate() {
        dof_coords[v] = *x;
    }
    for (e, &[a, b]) in mesh.edges.iter().enumerate() {
        let (xa, xb) = (mesh.vertices[a], mesh.vertices[b]);
        for t in 1..p {
            let s = t as f64 / p as f64;
            dof_coords[nv + e * (p - 1) + t - 1] = [xa[0] + s * (xb[0] - xa[0]), xa[1] + s * (xb[1] - xa[1])];
        }
    }
    let mut elem_dofs = vec![0usize; nt * nloc];
    for t in 0..nt {
        let tri = mesh.triangles[t];
        let te = mesh.triangle_edges[t];
        let xs = tri.map(|v| mesh.vertices[v]);
        let mut interior = 0;
        for (r, &(i, j)) in reference.lattice.iter().enumerate() {
            // position along a local edge (from, to, steps from `from`)
            let on_edge = if j == 0 && i > 0 && i < p {
                Some((0, i))
            } else if i + j == p && j > 0 && i > 0 {
                Some((1, j))
            } else if i == 0 && j > 0 && j < p {
                Some((2, p - j))
            } else {
                None
            };
            let dof = if (i, j) == (0, 0) {
                tri[0]
            } else if (i, j) == (p, 0) {
                tri[1]
            } else if (i, j) == (0, p) {
                tri[2]
            } else if let Some((le, s)) = on_edge {
                let from = tri[le];
                let e = te[le];
                let steps = if mesh.edges[e][0] == from { s } else { p - s };
                nv + e * (p - 1) + steps - 1
            } else {
                let d = nv + (p - 1) * ne + t * nint + interior;
                interior += 1;
                let (x, y) = (i as f64 / p as f64, j as f64 / p as f64);
                dof_coords[d] = [
                    xs[0][0] + x * (xs[1][0] - xs[0][0]) + y * (xs[2][0] - xs[0][0]),
                    xs[0][1] + x * (xs[1][1] - xs[0][1]) + y * (xs[2][1] - xs[0][1]),
                ];
                d
            };
            elem_dofs[t * nloc + r] = dof;
        }
    }
    Ok(LagrangeSpace { mesh, degree: p, reference, dof_coords, elem_dofs, nloc, ndof })
}

/// Coefficients `c_i = f(x_i)`.
pub fn nodal_interpolate<T>(space: &LagrangeSpace, f: impl Fn([f64; 2]) -> T) -> Vec<T> {
    space.dof_coords.iter().map(|&x| f(x)).collect()
}

/// Vector of length `n` equal to `values` on `source_dofs` and zero elsewhere.
pub fn zero_nodal_extension(n: usize, source_dofs: &[usize], values: &[C64]) -> Vec<C64> {
    assert_eq!(source_dofs.len(), values.len());
    let mut out = vec![C64::zero(); n];
    for (&d, &v) in source_dofs.iter().zip(values) {
        out[d] = v;
    }
    out
}

/// Oriented straight segment from `a` to `b`.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct Segment {
    pub a: [f64; 2],
    pub b: [f64; 2],
}

impl Segment {
    pub fn new(a: [f64; 2], b: [f64; 2]) -> Self {
        Self { a, b }
    }

    /// The vertical segment `{x} × [y0, y1]`.
    pub fn vertical(x: f64, y0: f64, y1: f64) -> Self {
        Self { a: [x, y0], b: [x, y1] }
    }

    /// One whole side of the domain, oriented counter-clockwise.
    pub fn side(domain: RectDomain, side: Side) -> Self {
        let (l, h) = (domain.length, domain.height);
        match side {
            Side::Bottom => Self::new([0.0, 0.0], [l, 0.0]),
            Side::Right => Self::new([l, 0.0], [l, h]),
            Side::Top => Self::new([l, h], [0.0, h]),
            Side::Left => Self::new([0.0, h], [0.0, 0.0]),
        }
    }

    pub fn length(&self) -> f64 {
        (self.b[0] - self.a[0]).hypot(self.b[1] - self.a[1])
    }

    /// Arclength coordinate of the projection of `x`, and its distance to the line.
    fn project(&self, x: [f64; 2]) -> (f64, f64) {
        let l = self.length();
        let d = [(self.b[0] - self.a[0]) / l, (self.b[1] - self.a[1]) / l];
        let r = [x[0] - self.a[0], x[1] - self.a[1]];
        let s = r[0] * d[0] + r[1] * d[1];
        let off = (r[0] * d[1] - r[1] * d[0]).abs();
        (s, off)
    }

    fn contains(&self, x: [f64; 2], tol: f64) -> bool {
        let (s, off) = self.project(x);
        off <= tol && s >= -tol && s <= self.length() + tol
    }
}

/// Restriction of a [`LagrangeSpace`] to a segment made of mesh edges.
#[derive(Clone, Debug)]
pub struct TraceSpace {
    pub segment: Option<Segment>,
    pub degree: usize,
    /// Parent dofs on the segment, by increasing arclength.
    pub dofs: Vec<usize>,
    pub arclength: Vec<f64>,
    /// `∫ φ_i φ_j` over the segment.
    pub mass: DMatrix<f64>,
    /// Mesh edges composing the segment.
    pub edges: Vec<usize>,
}

impl TraceSpace {
    pub fn empty(degree: usize) -> Self {
        Self { segment: None, degree, dofs: Vec::new(), arclength: Vec::new(), mass: DMatrix::zeros(0, 0), edges: Vec::new() }
    }

    pub fn dim(&self) -> usize {
        self.dofs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dofs.is_empty()
    }

    pub fn mass_complex(&self) -> DMatrix<C64> {
        self.mass.map(|v| C64::new(v, 0.0))
    }

    /// `M c` for trace coefficients `c`.
    pub fn apply_mass(&self, c: &[C64]) -> Vec<C64> {
        let n = self.dim();
        (0..n).map(|i| (0..n).map(|j| c[j] * self.mass[(i, j)]).sum()).collect()
    }

    /// `(cᴴ M c)^{1/2}`.
    pub fn l2_norm(&self, c: &[C64]) -> f64 {
        let mc = self.apply_mass(c);
        c.iter().zip(&mc).map(|(a, b)| (a.conj() * b).re).sum::<f64>().max(0.0).sqrt()
    }

    /// Solves `M g = r`.
    pub fn solve_mass(&self, r: &[C64]) -> Vec<C64> {
        if self.is_empty() {
            return Vec::new();
        }
        let chol = self.mass.clone().cholesky().expect("trace mass matrix is positive definite");
        let re = chol.solve(&DVector::from_iterator(r.len(), r.iter().map(|v| v.re)));
        let im = chol.solve(&DVector::from_iterator(r.len(), r.iter().map(|v| v.im)));
        re.iter().zip(im.iter()).map(|(a, b)| C64::new(*a, *b)).collect()
    }

    /// `r_i = ∫ g φ_i` over the segment, with a Gauss rule of `p + 4` points per edge.
    pub fn load_function(&self, space: &LagrangeSpace, g: impl Fn([f64; 2]) -> C64) -> Vec<C64> {
        let p = self.degree;
        let pos: HashMap<usize, usize> = self.dofs.iter().enumerate().map(|(i, &d)| (d, i)).collect();
        let (x, w) = gauss_legendre(p + 4);
        let mut r = vec![C64::zero(); self.dim()];
        for &e in &self.edges {
            let [va, vb] = space.mesh.edges[e].map(|v| space.mesh.vertices[v]);
            let len = (vb[0] - va[0]).hypot(vb[1] - va[1]);
            let dofs = space.edge_dofs(e);
            for (t, wt) in x.iter().zip(&w) {
                let pt = [va[0] + t * (vb[0] - va[0]), va[1] + t * (vb[1] - va[1])];
                let gv = g(pt) * (wt * len);
                for (a, phi) in lagrange_1d(p, *t).iter().enumerate() {
                    r[pos[&dofs[a]]] += gv * *phi;
                }
            }
        }
        r
    }

    /// L² projection onto the trace space.
    pub fn project(&self, space: &LagrangeSpace, g: impl Fn([f64; 2]) -> C64) -> Vec<C64> {
        self.solve_mass(&self.load_function(space, g))
    }
}

/// Trace space on `segment`; `None` gives the 0-dimensional trace space.
pub fn trace_space(space: &LagrangeSpace, segment: Option<&Segment>) -> Result<TraceSpace> {
    let p = space.degree;
    let seg = match segment {
        None => return Ok(TraceSpace::empty(p)),
        Some(s) if s.length() == 0.0 => return Ok(TraceSpace::empty(p)),
        Some(s) => *s,
    };
    let mesh = &space.mesh;
    let tol = 1e-9 * mesh.h;
    let edges: Vec<usize> = (0..mesh.num_edges())
        .filter(|&e| mesh.edges[e].iter().all(|&v| seg.contains(mesh.vertices[v], tol)))
        .collect();
    let covered: f64 = edges
        .iter()
        .map(|&e| {
            let [a, b] = mesh.edges[e].map(|v| mesh.vertices[v]);
            (b[0] - a[0]).hypot(b[1] - a[1])
        })
        .sum();
    if (covered - seg.length()).abs() > 1e-9 * seg.length().max(1.0) {
        return Err(Error::SegmentNotResolved(format!("{:?} → {:?}", seg.a, seg.b)));
    }
    let mut dofs: Vec<(f64, usize)> = Vec::new();
    let mut seen = HashMap::new();
    for &e in &edges {
        for d in space.edge_dofs(e) {
            if seen.insert(d, ()).is_none() {
                dofs.push((seg.project(space.dof_coords[d]).0, d));
            }
        }
    }
    dofs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let pos: HashMap<usize, usize> = dofs.iter().enumerate().map(|(i, &(_, d))| (d, i)).collect();
    let n = dofs.len();
    let mref = reference_mass_1d(p);
    let mut mass = DMatrix::zeros(n, n);
    for &e in &edges {
        let [a, b] = mesh.edges[e].map(|v| mesh.vertices[v]);
        let len = (b[0] - a[0]).hypot(b[1] - a[1]);
        let ed = space.edge_dofs(e);
        for (i, di) in ed.iter().enumerate() {
            for (j, dj) in ed.iter().enumerate() {
                mass[(pos[di], pos[dj])] += len * mref[i][j];
            }
        }
    }
    Ok(TraceSpace {
        segment: Some(seg),
        degree: p,
        arclength: dofs.iter().map(|x| x.0).collect(),
        dofs: dofs.into_iter().map(|x| x.1).collect(),
        mass,
        edges,
    })
}
