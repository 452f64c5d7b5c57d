//! Discrete impedance data, impedance-to-impedance maps between strip
//! interfaces and on a canonical rectangle, their L² operator norms, and the
//! block operator whose powers carry the norms of the error propagation.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use num_traits::Zero;
use serde::Serialize;

use crate::assembly::{
    assemble_global, assemble_region, embed_trace, load_impedance_coeffs, HelmholtzProblem, LocalNumbering,
};
use crate::decomp::{DecompositionKind, Face};
use crate::error::{Error, Result};
use crate::fespace::{build_space, trace_space, Segment, TraceSpace};
use crate::linalg::{herm_gen_eig_max, lu_factor, CsrComplex};
use crate::mesh::{build_uniform_mesh, snap_resolution, RectDomain};
use crate::oras::{ErrorVector, OrasPreconditioner};

/// A trace space on one strip interface with its dofs in the strip's numbering.
#[derive(Clone, Debug)]
pub struct FaceTrace {
    pub trace: TraceSpace,
    pub local: Vec<usize>,
}

impl FaceTrace {
    fn new(trace: TraceSpace, numbering: &LocalNumbering) -> Result<Self> {
        let local = trace
            .dofs
            .iter()
            .map(|&d| {
                numbering.local(d).ok_or_else(|| Error::Decomposition(format!("interface dof {d} outside the subdomain")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { trace, local })
    }

    pub fn dim(&self) -> usize {
        self.local.len()
    }
}

/// Impedance data of a local function on `Γ_ℓ = Γ_ℓ⁻ ∪ Γ_ℓ⁺`.
#[derive(Clone, Debug, PartialEq)]
pub struct ImpedanceData {
    pub minus: Vec<C64>,
    pub plus: Vec<C64>,
}

impl ImpedanceData {
    pub fn face(&self, s: Face) -> &[C64] {
        match s {
            Face::Minus => &self.minus,
            Face::Plus => &self.plus,
        }
    }
}

/// Dense map between trace spaces: target coefficients `= g ·` source coefficients.
#[derive(Clone, Debug)]
pub struct ImpMap {
    pub g: DMatrix<C64>,
    pub source_mass: DMatrix<f64>,
    pub target_mass: DMatrix<f64>,
}

impl ImpMap {
    pub fn source_dim(&self) -> usize {
        self.g.ncols()
    }

    pub fn target_dim(&self) -> usize {
        self.g.nrows()
    }

    pub fn apply(&self, c: &[C64]) -> Vec<C64> {
        (0..self.target_dim()).map(|i| (0..self.source_dim()).map(|j| self.g[(i, j)] * c[j]).sum()).collect()
    }
}

/// `sup_c ‖G c‖_{M_t} / ‖c‖_{M_s}`, from the pencil `(Gᴴ M_t G, M_s)`.
pub fn imp_map_norm(map: &ImpMap) -> Result<f64> {
    if map.source_dim() == 0 || map.target_dim() == 0 {
        return Ok(0.0);
    }
    let mt = map.target_mass.map(|v| C64::new(v, 0.0));
    let ms = map.source_mass.map(|v| C64::new(v, 0.0));
    let a = map.g.adjoint() * mt * &map.g;
    Ok(herm_gen_eig_max(&a, &ms)?.max(0.0).sqrt())
}

fn solve_mass_columns(mass: &DMatrix<f64>, r: DMatrix<C64>) -> DMatrix<C64> {
    if mass.nrows() == 0 || r.ncols() == 0 {
        return r;
    }
    let chol = mass.clone().cholesky().expect("trace mass matrix is positive definite");
    let re = chol.solve(&r.map(|v| v.re));
    let im = chol.solve(&r.map(|v| v.im));
    DMatrix::from_fn(r.nrows(), r.ncols(), |i, j| C64::new(re[(i, j)], im[(i, j)]))
}

/// Impedance machinery on a strip decomposition with factored local problems.
pub struct StripImpedance<'a> {
    pub problem: &'a HelmholtzProblem,
    pub prec: &'a OrasPreconditioner,
    faces: Vec<[FaceTrace; 2]>,
}

impl<'a> StripImpedance<'a> {
    pub fn new(problem: &'a HelmholtzProblem, prec: &'a OrasPreconditioner) -> Result<Self> {
        if prec.decomp.kind != DecompositionKind::Strips {
            return Err(Error::Decomposition("impedance maps need a strip decomposition".into()));
        }
        let faces = prec
            .decomp
            .subdomains
            .iter()
            .map(|s| {
                let f = |seg: Option<&Segment>| FaceTrace::new(trace_space(&problem.space, seg)?, &s.numbering);
                Ok([f(s.gamma_minus.as_ref())?, f(s.gamma_plus.as_ref())?])
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { problem, prec, faces })
    }

    pub fn num_subdomains(&self) -> usize {
        self.faces.len()
    }

    pub fn face(&self, l: usize, s: Face) -> &FaceTrace {
        &self.faces[l][s.index()]
    }

    /// Impedance data of `w ∈ V_{0,ℓ}`: `M_Γ g = (A_ℓ w)|_Γ`.
    pub fn discrete_impedance_data(&self, l: usize, w: &[C64]) -> Result<ImpedanceData> {
        let local = &self.prec.locals[l];
        let r = local.a.mul_vec(w);
        let mut on_gamma = vec![false; local.len()];
        for s in Face::BOTH {
            for &i in &self.face(l, s).local {
                on_gamma[i] = true;
            }
        }
        let wmax = w.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let scale = local.a.max_abs() * wmax;
        let residual = r.iter().zip(&on_gamma).filter(|(_, &g)| !g).map(|(v, _)| v.norm()).fold(0.0, f64::max);
        if residual > 1e-10 * scale {
            return Err(Error::NotHarmonic { subdomain: l, residual: residual / scale.max(f64::MIN_POSITIVE) });
        }
        let data = |s: Face| {
            let f = self.face(l, s);
            f.trace.solve_mass(&f.local.iter().map(|&i| r[i]).collect::<Vec<_>>())
        };
        Ok(ImpedanceData { minus: data(Face::Minus), plus: data(Face::Plus) })
    }

    /// `‖imp w‖_{L²(Γ_ℓ)}`.
    pub fn data_norm(&self, l: usize, g: &ImpedanceData) -> f64 {
        let a = self.face(l, Face::Minus).trace.l2_norm(&g.minus);
        let b = self.face(l, Face::Plus).trace.l2_norm(&g.plus);
        a.hypot(b)
    }

    pub fn v0_norm(&self, l: usize, w: &[C64]) -> Result<f64> {
        Ok(self.data_norm(l, &self.discrete_impedance_data(l, w)?))
    }

    /// Solves `a_{Ω_ℓ}(w, v) = ⟨g, v⟩_{Γ_ℓ^s}`.
    pub fn harmonic_lift(&self, l: usize, s: Face, g: &[C64]) -> Vec<C64> {
        let local = &self.prec.locals[l];
        let f = self.face(l, s);
        if f.dim() == 0 {
            return vec![C64::zero(); local.len()];
        }
        let rhs = load_impedance_coeffs(&f.trace, g, local.len(), Some(&local.numbering));
        local.solve(&rhs)
    }

    /// `w = w⁻ + w⁺` with `w^s` carrying the impedance data of `w` on `Γ_ℓ^s` only.
    pub fn split(&self, l: usize, w: &[C64]) -> Result<(Vec<C64>, Vec<C64>)> {
        let g = self.discrete_impedance_data(l, w)?;
        Ok((self.harmonic_lift(l, Face::Minus, &g.minus), self.harmonic_lift(l, Face::Plus, &g.plus)))
    }

    /// The map from impedance data on `Γ_ℓ^s` to impedance data on `Γ_j^t`,
    /// `(j, t) ∈ {(ℓ−1, +), (ℓ+1, −)}`.
    pub fn imp_to_imp(&self, l: usize, s: Face, j: usize, t: Face) -> Result<ImpMap> {
        let n = self.num_subdomains();
        let valid = (t == Face::Plus && l >= 1 && j == l - 1) || (t == Face::Minus && j == l + 1 && j < n);
        if !valid {
            return Err(Error::InvalidArgument(format!("no impedance map from Γ_{l}^{} to Γ_{j}^{}", s.symbol(), t.symbol())));
        }
        let src = self.face(l, s);
        let tgt_global = &self.face(j, t).trace;
        let local = &self.prec.locals[l];
        let tgt = FaceTrace::new(tgt_global.clone(), &local.numbering)?;
        let (ns, nt) = (src.dim(), tgt.dim());
        let mut map = ImpMap {
            g: DMatrix::zeros(nt, ns),
            source_mass: src.trace.mass.clone(),
            target_mass: tgt.trace.mass.clone(),
        };
        if ns == 0 || nt == 0 {
            return Ok(map);
        }
        // overlap Ω_ℓ ∩ Ω_j, assembled in Ω_ℓ's numbering with its own boundary term
        let other = &self.prec.decomp.subdomains[j];
        let mut in_other = vec![false; self.problem.space.mesh.num_triangles()];
        for &e in &other.elements {
            in_other[e] = true;
        }
        let overlap: Vec<usize> = local.elements.iter().copied().filter(|&e| in_other[e]).collect();
        let a_ov = assemble_region(&self.problem.space, &overlap, &local.numbering).helmholtz(self.problem.k);
        let rows_ov = a_ov.select_rows(&tgt.local);
        let rows_l = local.a.select_rows(&tgt.local);
        let mut r = DMatrix::zeros(nt, ns);
        let mut e = vec![C64::zero(); ns];
        for m in 0..ns {
            e.iter_mut().for_each(|v| *v = C64::zero());
            e[m] = C64::new(1.0, 0.0);
            let w = self.harmonic_lift(l, s, &e);
            let (x, y) = (rows_ov.mul_vec(&w), rows_l.mul_vec(&w));
            for i in 0..nt {
                r[(i, m)] = x[i] - y[i];
            }
        }
        map.g = solve_mass_columns(&map.target_mass, r);
        Ok(map)
    }

    /// Offsets of the blocks `(ℓ, s)` in impedance coordinates: all `−` faces
    /// in strip order, then all `+` faces.
    pub fn block_offsets(&self) -> Vec<usize> {
        let n = self.num_subdomains();
        let mut off = Vec::with_capacity(2 * n + 1);
        off.push(0);
        for s in Face::BOTH {
            for l in 0..n {
                off.push(off.last().unwrap() + self.face(l, s).dim());
            }
        }
        off
    }

    fn block_index(&self, l: usize, s: Face) -> usize {
        s.index() * self.num_subdomains() + l
    }

    /// Lifts impedance coordinates to an element of the product space.
    pub fn lift(&self, coords: &[C64]) -> ErrorVector {
        let off = self.block_offsets();
        let components = (0..self.num_subdomains())
            .map(|l| {
                let mut w = vec![C64::zero(); self.prec.locals[l].len()];
                for s in Face::BOTH {
                    let b = self.block_index(l, s);
                    let part = self.harmonic_lift(l, s, &coords[off[b]..off[b + 1]]);
                    w.iter_mut().zip(part).for_each(|(a, b)| *a += b);
                }
                w
            })
            .collect();
        ErrorVector { components }
    }

    /// Impedance coordinates of an element of `𝕍₀`.
    pub fn impedance_coords(&self, e: &ErrorVector) -> Result<Vec<C64>> {
        let off = self.block_offsets();
        let mut out = vec![C64::zero(); *off.last().unwrap()];
        for (l, w) in e.components.iter().enumerate() {
            let g = self.discrete_impedance_data(l, w)?;
            for s in Face::BOTH {
                let b = self.block_index(l, s);
                out[off[b]..off[b + 1]].copy_from_slice(g.face(s));
            }
        }
        Ok(out)
    }

    /// Assembles `𝕀 = [[𝕀_{−→−}, 𝕀_{+→−}], [𝕀_{−→+}, 𝕀_{+→+}]]` and the block
    /// diagonal trace mass `𝕄`.
    pub fn block_operator(&self) -> Result<BlockImpOperator> {
        let n = self.num_subdomains();
        let off = self.block_offsets();
        let dim = *off.last().unwrap();
        let mut matrix = DMatrix::zeros(dim, dim);
        let mut mass = DMatrix::zeros(dim, dim);
        for s in Face::BOTH {
            for l in 0..n {
                let b = self.block_index(l, s);
                let m = &self.face(l, s).trace.mass;
                mass.view_mut((off[b], off[b]), (m.nrows(), m.ncols())).copy_from(m);
            }
        }
        let mut blocks = Vec::new();
        for l in 0..n {
            for s in Face::BOTH {
                let targets = [(l.checked_sub(1), Face::Plus), (Some(l + 1).filter(|&j| j < n), Face::Minus)];
                for (j, t) in targets {
                    let Some(j) = j else { continue };
                    let map = self.imp_to_imp(l, s, j, t)?;
                    let (row, col) = (self.block_index(j, t), self.block_index(l, s));
                    if map.source_dim() > 0 && map.target_dim() > 0 {
                        matrix.view_mut((off[row], off[col]), (map.target_dim(), map.source_dim())).copy_from(&map.g);
                        blocks.push(BlockEntry { source: (l, s), target: (j, t) });
                    }
                }
            }
        }
        Ok(BlockImpOperator { num_subdomains: n, offsets: off, matrix, mass, blocks })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct BlockEntry {
    pub source: (usize, Face),
    pub target: (usize, Face),
}

/// Dense block impedance operator in impedance coordinates.
#[derive(Clone, Debug)]
pub struct BlockImpOperator {
    pub num_subdomains: usize,
    pub offsets: Vec<usize>,
    pub matrix: DMatrix<C64>,
    pub mass: DMatrix<f64>,
    /// Structurally nonzero blocks.
    pub blocks: Vec<BlockEntry>,
}

impl BlockImpOperator {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// `‖𝕀ⁿ‖` on `L²(𝚪)`; equals `‖Tⁿ‖` in the impedance norm.
    pub fn power_norm(&self, n: usize) -> Result<f64> {
        if n == 0 {
            return Ok(1.0);
        }
        let mut x = self.matrix.clone();
        for _ in 1..n {
            x = &self.matrix * &x;
        }
        let m = self.mass.map(|v| C64::new(v, 0.0));
        let a = x.adjoint() * &m * &x;
        Ok(herm_gen_eig_max(&a, &m)?.max(0.0).sqrt())
    }

    /// `‖𝕀ⁿ‖` for `n = 1..=max_n`, reusing each power for the next.
    pub fn power_norms(&self, max_n: usize) -> Result<Vec<f64>> {
        let m = self.mass.map(|v| C64::new(v, 0.0));
        let mut x = self.matrix.clone();
        let mut out = Vec::with_capacity(max_n);
        for n in 1..=max_n {
            if n > 1 {
                x = &self.matrix * &x;
            }
            let a = x.adjoint() * &m * &x;
            out.push(herm_gen_eig_max(&a, &m)?.max(0.0).sqrt());
        }
        Ok(out)
    }
}

/// `‖Tⁿ‖_{𝕍₀}` for a strip decomposition.
pub fn t_power_norm(block: &BlockImpOperator, n: usize) -> Result<f64> {
    block.power_norm(n)
}

/// Which canonical impedance map: data on the left edge (`MinusToMinus`) or
/// the right edge (`PlusToMinus`), output left-facing on an interior line.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum MapDirection {
    MinusToMinus,
    PlusToMinus,
}

impl MapDirection {
    pub const BOTH: [MapDirection; 2] = [MapDirection::MinusToMinus, MapDirection::PlusToMinus];

    pub fn label(self) -> &'static str {
        match self {
            MapDirection::MinusToMinus => "minus_to_minus",
            MapDirection::PlusToMinus => "plus_to_minus",
        }
    }

    /// Abscissa of the output line at distance `delta` from the data edge.
    pub fn target_x(self, length: f64, delta: f64) -> f64 {
        match self {
            MapDirection::MinusToMinus => delta,
            MapDirection::PlusToMinus => length - delta,
        }
    }
}

/// Discretisation of the canonical rectangle `[0, L] × [0, 1]`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct CanonicalSetup {
    pub k: f64,
    pub p: usize,
    pub length: f64,
    pub nx: usize,
    pub ny: usize,
}

impl CanonicalSetup {
    /// Coarsest grid with cell side `≤ target_h` resolving every output line.
    pub fn snapped(k: f64, p: usize, length: f64, target_h: f64, deltas: &[f64]) -> Result<Self> {
        let domain = RectDomain::new(length, 1.0)?;
        let mut lines: Vec<f64> = Vec::new();
        for dir in MapDirection::BOTH {
            for &d in deltas {
                if !(d > 0.0 && d < length) {
                    return Err(Error::InvalidArgument(format!("δ = {d} outside (0, {length})")));
                }
                lines.push(dir.target_x(length, d));
            }
        }
        let (nx, ny) = snap_resolution(domain, target_h, &lines)?;
        Ok(Self { k, p, length, nx, ny })
    }

    pub fn cell_width(&self) -> f64 {
        self.length / self.nx as f64
    }
}

/// Canonical maps for every `δ` in `deltas`, in both directions, from one
/// factorisation of the full-rectangle matrix. Returns `maps[dir][δ]`.
pub fn canonical_imp_maps(setup: &CanonicalSetup, deltas: &[f64]) -> Result<[Vec<ImpMap>; 2]> {
    let domain = RectDomain::new(setup.length, 1.0)?;
    let space = build_space(build_uniform_mesh(domain, setup.nx, setup.ny)?, setup.p)?;
    let problem = assemble_global(setup.k, space)?;
    let lu = lu_factor(&problem.a)?;
    let sp = &problem.space;
    let mesh = &sp.mesh;
    let centroid_x = |t: usize| mesh.triangles[t].iter().map(|&v| mesh.vertices[v][0]).sum::<f64>() / 3.0;

    struct Target {
        trace: TraceSpace,
        numbering: LocalNumbering,
        rows_d: CsrComplex,
        rows_a: CsrComplex,
    }
    let mut out: [Vec<ImpMap>; 2] = [Vec::new(), Vec::new()];
    for (di, dir) in MapDirection::BOTH.into_iter().enumerate() {
        let source = trace_space(
            sp,
            Some(&match dir {
                MapDirection::MinusToMinus => Segment::vertical(0.0, 0.0, 1.0),
                MapDirection::PlusToMinus => Segment::vertical(setup.length, 0.0, 1.0),
            }),
        )?;
        let targets = deltas
            .iter()
            .map(|&d| {
                let x = dir.target_x(setup.length, d);
                if mesh.grid_line_x(x).is_none() {
                    return Err(Error::InvalidArgument(format!("output line x = {x} is not a grid line")));
                }
                let trace = trace_space(sp, Some(&Segment::vertical(x, 0.0, 1.0)))?;
                let region: Vec<usize> = (0..mesh.num_triangles()).filter(|&t| centroid_x(t) > x).collect();
                let numbering = LocalNumbering::from_elements(sp, &region);
                let a_d = assemble_region(sp, &region, &numbering).helmholtz(setup.k);
                let loc: Vec<usize> = trace.dofs.iter().map(|&g| numbering.local(g).unwrap()).collect();
                let rows_d = a_d.select_rows(&loc);
                let rows_a = problem.a.select_rows(&trace.dofs);
                Ok(Target { trace, numbering, rows_d, rows_a })
            })
            .collect::<Result<Vec<_>>>()?;
        let ns = source.dim();
        let mut r: Vec<DMatrix<C64>> = targets.iter().map(|t| DMatrix::zeros(t.trace.dim(), ns)).collect();
        let mut e = vec![C64::zero(); ns];
        for m in 0..ns {
            e.iter_mut().for_each(|v| *v = C64::zero());
            e[m] = C64::new(1.0, 0.0);
            let rhs = embed_trace(&source, &source.apply_mass(&e), sp.ndof, None);
            let u = lu.solve(&rhs);
            for (t, rm) in targets.iter().zip(r.iter_mut()) {
                let x = t.rows_d.mul_vec(&t.numbering.restrict(&u));
                let y = t.rows_a.mul_vec(&u);
                for i in 0..x.len() {
                    rm[(i, m)] = x[i] - y[i];
                }
            }
        }
        out[di] = targets
            .into_iter()
            .zip(r)
            .map(|(t, rm)| ImpMap {
                g: solve_mass_columns(&t.trace.mass, rm),
                source_mass: source.mass.clone(),
                target_mass: t.trace.mass,
            })
            .collect();
    }
    Ok(out)
}

/// One canonical map at one `δ`.
pub fn canonical_imp_map(setup: &CanonicalSetup, delta: f64, dir: MapDirection) -> Result<ImpMap> {
    let [mm, pm] = canonical_imp_maps(setup, &[delta])?;
    Ok(match dir {
        MapDirection::MinusToMinus => mm.into_iter().next().unwrap(),
        MapDirection::PlusToMinus => pm.into_iter().next().unwrap(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomp::{build_pou, strips};
    use crate::linalg::norm2;
    use crate::oras::build_preconditioner;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn toy(n: usize) -> (HelmholtzProblem, OrasPreconditioner) {
        let (l, nx) = if n == 3 { (1.5, 18) } else { (1.0, 16) };
        let mesh = build_uniform_mesh(RectDomain::new(l, 1.0).unwrap(), nx, 12).unwrap();
        let pr = assemble_global(10.0, build_space(mesh, 1).unwrap()).unwrap();
        let d = strips(&pr.space, n, 0.25).unwrap();
        let pou = build_pou(&pr.space, &d).unwrap();
        let prec = build_preconditioner(&pr, d, pou).unwrap();
        (pr, prec)
    }

    fn rand_vec(n: usize, rng: &mut ChaCha8Rng) -> Vec<C64> {
        (0..n).map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect()
    }

    fn rel(a: &[C64], b: &[C64]) -> f64 {
        let d: Vec<C64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
        norm2(&d) / norm2(b).max(f64::MIN_POSITIVE)
    }

    #[test]
    fn impedance_data_roundtrip_and_harmonic_check() {
        let (pr, prec) = toy(3);
        let ctx = StripImpedance::new(&pr, &prec).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let g = rand_vec(ctx.face(1, Face::Minus).dim(), &mut rng);
        let w = ctx.harmonic_lift(1, Face::Minus, &g);
        let data = ctx.discrete_impedance_data(1, &w).unwrap();
        assert!(rel(&data.minus, &g) < 1e-10);
        assert!(norm2(&data.plus) < 1e-10 * norm2(&g));
        let zero = vec![C64::zero(); prec.locals[1].len()];
        assert_eq!(ctx.v0_norm(1, &zero).unwrap(), 0.0);
        let noise = rand_vec(prec.locals[1].len(), &mut rng);
        assert!(matches!(ctx.discrete_impedance_data(1, &noise), Err(Error::NotHarmonic { subdomain: 1, .. })));
        assert_eq!(ctx.face(0, Face::Minus).dim(), 0);
    }

    #[test]
    fn split_is_orthogonal_and_unique() {
        let (pr, prec) = toy(3);
        let ctx = StripImpedance::new(&pr, &prec).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let gm = rand_vec(ctx.face(1, Face::Minus).dim(), &mut rng);
        let gp = rand_vec(ctx.face(1, Face::Plus).dim(), &mut rng);
        let w: Vec<C64> = ctx
            .harmonic_lift(1, Face::Minus, &gm)
            .iter()
            .zip(ctx.harmonic_lift(1, Face::Plus, &gp))
            .map(|(a, b)| a + b)
            .collect();
        let (wm, wp) = ctx.split(1, &w).unwrap();
        let sum: Vec<C64> = wm.iter().zip(&wp).map(|(a, b)| a + b).collect();
        assert!(rel(&sum, &w) < 1e-10);
        let (n, nm, np) = (ctx.v0_norm(1, &w).unwrap(), ctx.v0_norm(1, &wm).unwrap(), ctx.v0_norm(1, &wp).unwrap());
        assert!((n * n - nm * nm - np * np).abs() < 1e-10 * n * n);
        let (wmm, wmp) = ctx.split(1, &wm).unwrap();
        assert!(rel(&wmm, &wm) < 1e-10 && norm2(&wmp) < 1e-10 * norm2(&wm));
    }

    #[test]
    fn maps_intertwine_error_propagation() {
        let (pr, prec) = toy(3);
        let ctx = StripImpedance::new(&pr, &prec).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for l in 0..3usize {
            for s in Face::BOTH {
                for (j, t) in [(l.wrapping_sub(1), Face::Plus), (l + 1, Face::Minus)] {
                    if j >= 3 || ctx.face(l, s).dim() == 0 {
                        continue;
                    }
                    let map = ctx.imp_to_imp(l, s, j, t).unwrap();
                    for _ in 0..3 {
                        let g = rand_vec(ctx.face(l, s).dim(), &mut rng);
                        let w = ctx.harmonic_lift(l, s, &g);
                        let tw = prec.t_block_apply(&pr, j, l, &w);
                        let data = ctx.discrete_impedance_data(j, &tw).unwrap();
                        assert!(rel(data.face(t), &map.apply(&g)) < 1e-9);
                        let other = match t {
                            Face::Minus => &data.plus,
                            Face::Plus => &data.minus,
                        };
                        assert!(norm2(other) < 1e-9 * norm2(data.face(t)));
                    }
                }
            }
        }
        assert!(ctx.imp_to_imp(0, Face::Plus, 2, Face::Minus).is_err());
        let empty = ctx.imp_to_imp(0, Face::Minus, 1, Face::Minus).unwrap();
        assert_eq!(empty.source_dim(), 0);
        assert_eq!(imp_map_norm(&empty).unwrap(), 0.0);
    }

    #[test]
    fn block_operator_pattern_and_power_norms() {
        let (pr, prec) = toy(2);
        let ctx = StripImpedance::new(&pr, &prec).unwrap();
        let b = ctx.block_operator().unwrap();
        assert_eq!(b.blocks.len(), 2);
        assert_eq!(b.power_norm(0).unwrap(), 1.0);
        let (pr3, prec3) = toy(3);
        let ctx3 = StripImpedance::new(&pr3, &prec3).unwrap();
        let b3 = ctx3.block_operator().unwrap();
        assert_eq!(b3.blocks.len(), 6);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let c = rand_vec(b3.dim(), &mut rng);
        let v = ctx3.lift(&c);
        let lhs = ctx3.impedance_coords(&prec3.t_apply(&pr3, &v)).unwrap();
        let rhs: Vec<C64> = (&b3.matrix * nalgebra::DVector::from_vec(c)).iter().copied().collect();
        assert!(rel(&lhs, &rhs) < 1e-9);
    }

    #[test]
    fn identity_map_has_unit_norm() {
        let m = DMatrix::from_fn(3, 3, |i, j| if i == j { 2.0 } else if i.abs_diff(j) == 1 { 0.5 } else { 0.0 });
        let map = ImpMap { g: DMatrix::identity(3, 3), source_mass: m.clone(), target_mass: m };
        assert!((imp_map_norm(&map).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn canonical_maps_on_coarse_grid() {
        let setup = CanonicalSetup { k: 10.0, p: 1, length: 1.0, nx: 8, ny: 8 };
        let [mm, pm] = canonical_imp_maps(&setup, &[0.25, 0.5]).unwrap();
        for m in mm.iter().chain(&pm) {
            assert_eq!((m.target_dim(), m.source_dim()), (9, 9));
            let zero = m.apply(&[C64::zero(); 9]);
            assert!(zero.iter().all(|v| v.is_zero()));
        }
        let single = canonical_imp_map(&setup, 0.5, MapDirection::PlusToMinus).unwrap();
        assert_eq!(single.g, pm[1].g);
        assert!(imp_map_norm(&pm[0]).unwrap() > 0.0);
    }
}
