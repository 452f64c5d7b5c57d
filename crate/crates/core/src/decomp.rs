//! Overlapping strip and checkerboard decompositions, partitions of unity,
//! restrictions and weighted prolongations.

use num_complex::Complex64 as C64;
use num_traits::Zero;
use serde::Serialize;

use crate::assembly::{region_boundary_edges, LocalNumbering};
use crate::error::{Error, Result};
use crate::fespace::{LagrangeSpace, Segment};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DecompositionKind {
    Strips,
    Checkerboard,
}

#[derive(Clone, Debug)]
pub struct Subdomain {
    pub id: usize,
    pub elements: Vec<usize>,
    pub numbering: LocalNumbering,
    /// Bounding box `[x0, x1, y0, y1]`.
    pub bbox: [f64; 4],
    /// Mesh edges of `Γ_j = ∂Ω_j \ ∂Ω`.
    pub interface_edges: Vec<usize>,
    /// Strips only: the left and right interfaces (`None` on `∂Ω`).
    pub gamma_minus: Option<Segment>,
    pub gamma_plus: Option<Segment>,
}

impl Subdomain {
    pub fn ndof(&self) -> usize {
        self.numbering.len()
    }

    pub fn gamma(&self, face: Face) -> Option<&Segment> {
        match face {
            Face::Minus => self.gamma_minus.as_ref(),
            Face::Plus => self.gamma_plus.as_ref(),
        }
    }
}

/// Side of a strip interface: `Minus` is the left one, `Plus` the right one.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Face {
    Minus,
    Plus,
}

impl Face {
    pub const BOTH: [Face; 2] = [Face::Minus, Face::Plus];

    pub fn index(self) -> usize {
        match self {
            Face::Minus => 0,
            Face::Plus => 1,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Face::Minus => "-",
            Face::Plus => "+",
        }
    }
}

#[derive(Clone, Debug)]
pub struct Decomposition {
    pub kind: DecompositionKind,
    pub subdomains: Vec<Subdomain>,
    /// Overlap width (strips) or extension radius (checkerboard).
    pub overlap: f64,
    pub ndof: usize,
}

impl Decomposition {
    pub fn len(&self) -> usize {
        self.subdomains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subdomains.is_empty()
    }

    /// Whether the closures of subdomains `i` and `j` share a dof.
    pub fn adjacent(&self, i: usize, j: usize) -> bool {
        let (a, b) = (&self.subdomains[i].numbering, &self.subdomains[j].numbering);
        a.dofs.iter().any(|&d| b.local(d).is_some())
    }

    /// `R_j w`.
    pub fn restrict(&self, j: usize, w: &[C64]) -> Vec<C64> {
        self.subdomains[j].numbering.restrict(w)
    }

    pub fn summary(&self) -> DecompositionSummary {
        DecompositionSummary {
            kind: self.kind,
            overlap: self.overlap,
            ndof: self.ndof,
            subdomains: self
                .subdomains
                .iter()
                .map(|s| SubdomainSummary { id: s.id, bbox: s.bbox, ndof: s.ndof(), elements: s.elements.len() })
                .collect(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SubdomainSummary {
    pub id: usize,
    pub bbox: [f64; 4],
    pub ndof: usize,
    pub elements: usize,
}

/// JSON-serialisable description of a decomposition.
#[derive(Clone, Debug, Serialize)]
pub struct DecompositionSummary {
    pub kind: DecompositionKind,
    pub overlap: f64,
    pub ndof: usize,
    pub subdomains: Vec<SubdomainSummary>,
}

fn make_subdomain(space: &LagrangeSpace, id: usize, elements: Vec<usize>) -> Subdomain {
    let mesh = &space.mesh;
    let numbering = LocalNumbering::from_elements(space, &elements);
    let mut bbox = [f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY];
    for &t in &elements {
        for &v in &mesh.triangles[t] {
            let x = mesh.vertices[v];
            bbox = [bbox[0].min(x[0]), bbox[1].max(x[0]), bbox[2].min(x[1]), bbox[3].max(x[1])];
        }
    }
    let interface_edges =
        region_boundary_edges(space, &elements).into_iter().filter(|&e| mesh.edge_triangles[e][1].is_some()).collect();
    Subdomain { id, elements, numbering, bbox, interface_edges, gamma_minus: None, gamma_plus: None }
}

/// Left and right ends `(a_ℓ, b_ℓ)` of `n` equal-width strips on `[0, length]`
/// with consecutive overlaps `overlap`.
pub fn strip_bounds(length: f64, n: usize, overlap: f64) -> Vec<(f64, f64)> {
    let w = (length + (n as f64 - 1.0) * overlap) / n as f64;
    (0..n)
        .map(|l| {
            let a = if l == 0 { 0.0 } else { l as f64 * (w - overlap) };
            let b = if l + 1 == n { length } else { a + w };
            (a, b)
        })
        .collect()
}

/// Interface abscissae of the strip layout (for mesh snapping).
pub fn strip_interfaces(length: f64, n: usize, overlap: f64) -> Vec<f64> {
    let mut xs: Vec<f64> = Vec::new();
    for (l, (a, b)) in strip_bounds(length, n, overlap).into_iter().enumerate() {
        if l > 0 {
            xs.push(a);
        }
        if l + 1 < n {
            xs.push(b);
        }
    }
    xs
}

/// `n` full-height strips of equal width, consecutive ones overlapping by `overlap`.
pub fn strips(space: &LagrangeSpace, n: usize, overlap: f64) -> Result<Decomposition> {
    let mesh = &space.mesh;
    let dom = mesh.domain;
    if n == 0 {
        return Err(Error::Decomposition("need at least one strip".into()));
    }
    if n > 1 && !(overlap > 0.0) {
        return Err(Error::Decomposition(format!("overlap must be positive, got {overlap}")));
    }
    let bounds = strip_bounds(dom.length, n, overlap);
    let width = bounds[0].1 - bounds[0].0;
    if n > 2 && width - 2.0 * overlap < mesh.dx() * (1.0 - 1e-9) {
        return Err(Error::Decomposition(format!(
            "overlap {overlap} too large: strips of width {width} would meet their second neighbours"
        )));
    }
    if n > 1 && width <= overlap {
        return Err(Error::Decomposition(format!("overlap {overlap} not smaller than the strip width {width}")));
    }
    strips_from_bounds(space, &bounds, overlap)
}

/// Full-height strips `[a_ℓ, b_ℓ] × [0, H]` with given ends, each meeting only
/// its neighbours. `overlap` is recorded for reporting.
pub fn strips_from_bounds(space: &LagrangeSpace, bounds: &[(f64, f64)], overlap: f64) -> Result<Decomposition> {
    let mesh = &space.mesh;
    let dom = mesh.domain;
    let n = bounds.len();
    if n == 0 || bounds[0].0 != 0.0 || bounds[n - 1].1 != dom.length {
        return Err(Error::Decomposition("strips must start at 0 and end at the domain length".into()));
    }
    for l in 0..n.saturating_sub(1) {
        let (cur, next) = (bounds[l], bounds[l + 1]);
        if !(next.0 > cur.0 && next.0 < cur.1 && next.1 > cur.1) {
            return Err(Error::Decomposition(format!("strips {l} and {} do not overlap properly", l + 1)));
        }
        if l + 2 < n && bounds[l + 2].0 <= cur.1 {
            return Err(Error::Decomposition(format!("strips {l} and {} meet", l + 2)));
        }
    }
    let snap = |x: f64| -> Result<f64> {
        let i = mesh.grid_line_x(x).ok_or_else(|| Error::Decomposition(format!("interface x = {x} is not a grid line")))?;
        Ok(mesh.vertices[mesh.vertex_index(i, 0)][0])
    };
    let bounds = bounds.iter().map(|&(a, b)| Ok((snap(a)?, snap(b)?))).collect::<Result<Vec<_>>>()?;
    let centroid_x = |t: usize| mesh.triangles[t].iter().map(|&v| mesh.vertices[v][0]).sum::<f64>() / 3.0;
    let subdomains = bounds
        .iter()
        .enumerate()
        .map(|(l, &(a, b))| {
            let elems: Vec<usize> = (0..mesh.num_triangles()).filter(|&t| (a..=b).contains(&centroid_x(t))).collect();
            let mut s = make_subdomain(space, l, elems);
            if l > 0 {
                s.gamma_minus = Some(Segment::vertical(a, 0.0, dom.height));
            }
            if l + 1 < n {
                s.gamma_plus = Some(Segment::vertical(b, 0.0, dom.height));
            }
            s
        })
        .collect();
    Ok(Decomposition { kind: DecompositionKind::Strips, subdomains, overlap, ndof: space.ndof })
}

/// Number of checkerboard parts per side for wavenumber `k`: `⌈k^{0.4}⌉`.
pub fn checkerboard_parts(k: f64) -> usize {
    (k.powf(0.4) - 1e-12).ceil().max(1.0) as usize
}

/// Checkerboard on a square with `⌈k^{0.4}⌉` parts per side, each extended by
/// the elements closer than a quarter of the part size.
pub fn checkerboard(space: &LagrangeSpace, k: f64) -> Result<Decomposition> {
    let parts = checkerboard_parts(k);
    let h = space.mesh.domain.length / parts as f64;
    checkerboard_with(space, parts, h / 4.0)
}

fn point_box_distance(x: [f64; 2], b: [f64; 4]) -> f64 {
    let dx = (b[0] - x[0]).max(x[0] - b[1]).max(0.0);
    let dy = (b[2] - x[1]).max(x[1] - b[3]).max(0.0);
    dx.hypot(dy)
}

fn point_segment_distance(x: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let d = [b[0] - a[0], b[1] - a[1]];
    let l2 = d[0] * d[0] + d[1] * d[1];
    let t = if l2 > 0.0 { (((x[0] - a[0]) * d[0] + (x[1] - a[1]) * d[1]) / l2).clamp(0.0, 1.0) } else { 0.0 };
    (x[0] - a[0] - t * d[0]).hypot(x[1] - a[1] - t * d[1])
}

fn point_triangle_distance(x: [f64; 2], t: [[f64; 2]; 3]) -> f64 {
    let side = |a: [f64; 2], b: [f64; 2]| (b[0] - a[0]) * (x[1] - a[1]) - (b[1] - a[1]) * (x[0] - a[0]);
    let s = [side(t[0], t[1]), side(t[1], t[2]), side(t[2], t[0])];
    if s.iter().all(|&v| v >= 0.0) || s.iter().all(|&v| v <= 0.0) {
        return 0.0;
    }
    (0..3).map(|i| point_segment_distance(x, t[i], t[(i + 1) % 3])).fold(f64::INFINITY, f64::min)
}

/// Distance between a triangle and an axis-aligned box.
fn triangle_box_distance(t: [[f64; 2]; 3], b: [f64; 4]) -> f64 {
    let from_vertices = t.iter().map(|&v| point_box_distance(v, b)).fold(f64::INFINITY, f64::min);
    let corners = [[b[0], b[2]], [b[1], b[2]], [b[1], b[3]], [b[0], b[3]]];
    let from_corners = corners.iter().map(|&c| point_triangle_distance(c, t)).fold(f64::INFINITY, f64::min);
    from_vertices.min(from_corners)
}

/// `parts × parts` checkerboard; part `(i, j)` is subdomain `j·parts + i` and
/// contains every element at distance `< radius` from its core square.
pub fn checkerboard_with(space: &LagrangeSpace, parts: usize, radius: f64) -> Result<Decomposition> {
    let mesh = &space.mesh;
    let dom = mesh.domain;
    if (dom.length - dom.height).abs() > 1e-12 * dom.length {
        return Err(Error::Decomposition("checkerboard needs a square domain".into()));
    }
    if parts < 2 {
        return Err(Error::Decomposition(format!("checkerboard with {parts} part per side is degenerate")));
    }
    let hsize = dom.length / parts as f64;
    for i in 1..parts {
        let c = i as f64 * hsize;
        if mesh.grid_line_x(c).is_none() || mesh.grid_line_y(c).is_none() {
            return Err(Error::Decomposition(format!("part boundary {c} is not a grid line")));
        }
    }
    let tol = 1e-12 * dom.length;
    let mut subdomains = Vec::with_capacity(parts * parts);
    for j in 0..parts {
        for i in 0..parts {
            let core = [i as f64 * hsize, (i + 1) as f64 * hsize, j as f64 * hsize, (j + 1) as f64 * hsize];
            let elems: Vec<usize> = (0..mesh.num_triangles())
                .filter(|&t| {
                    let tri = mesh.triangles[t].map(|v| mesh.vertices[v]);
                    let c = [(tri[0][0] + tri[1][0] + tri[2][0]) / 3.0, (tri[0][1] + tri[1][1] + tri[2][1]) / 3.0];
                    point_box_distance(c, core) == 0.0 || triangle_box_distance(tri, core) < radius - tol
                })
                .collect();
            subdomains.push(make_subdomain(space, j * parts + i, elems));
        }
    }
    Ok(Decomposition { kind: DecompositionKind::Checkerboard, subdomains, overlap: radius, ndof: space.ndof })
}

/// Nodal weights `χ_j(x_i)` stored per subdomain in local numbering.
#[derive(Clone, Debug)]
pub struct PartitionOfUnity {
    pub weights: Vec<Vec<f64>>,
}

/// Linear ramps across strip overlaps; normalised interface distances on a
/// checkerboard.
pub fn build_pou(space: &LagrangeSpace, decomp: &Decomposition) -> Result<PartitionOfUnity> {
    match decomp.kind {
        DecompositionKind::Strips => Ok(strip_pou(space, decomp)),
        DecompositionKind::Checkerboard => distance_pou(space, decomp),
    }
}

fn strip_pou(space: &LagrangeSpace, decomp: &Decomposition) -> PartitionOfUnity {
    let subs = &decomp.subdomains;
    let mut weights: Vec<Vec<f64>> = subs.iter().map(|s| vec![0.0; s.ndof()]).collect();
    for (d, x) in space.dof_coords.iter().enumerate() {
        let l = (0..subs.len()).find(|&l| subs[l].numbering.local(d).is_some()).expect("dof not covered");
        let i = subs[l].numbering.local(d).unwrap();
        match subs.get(l + 1).and_then(|s| s.numbering.local(d)) {
            // overlap of strips l and l + 1: ramp down from a_{l+1} to b_l
            Some(i1) => {
                let a = subs[l + 1].gamma_minus.unwrap().a[0];
                let b = subs[l].gamma_plus.unwrap().a[0];
                let chi = (b - x[0]) / (b - a);
                weights[l][i] = chi;
                weights[l + 1][i1] = 1.0 - chi;
            }
            None => weights[l][i] = 1.0,
        }
    }
    PartitionOfUnity { weights }
}

fn distance_pou(space: &LagrangeSpace, decomp: &Decomposition) -> Result<PartitionOfUnity> {
    let mesh = &space.mesh;
    let tol = 1e-12 * mesh.domain.diameter();
    let mut dist: Vec<Vec<f64>> = Vec::with_capacity(decomp.len());
    for s in &decomp.subdomains {
        let segs: Vec<([f64; 2], [f64; 2])> =
            s.interface_edges.iter().map(|&e| (mesh.vertices[mesh.edges[e][0]], mesh.vertices[mesh.edges[e][1]])).collect();
        dist.push(
            s.numbering
                .dofs
                .iter()
                .map(|&d| {
                    let x = space.dof_coords[d];
                    segs.iter().map(|&(a, b)| point_segment_distance(x, a, b)).fold(f64::INFINITY, f64::min)
                })
                .map(|v| if !v.is_finite() { 1.0 } else if v < tol { 0.0 } else { v })
                .collect(),
        );
    }
    let mut weights: Vec<Vec<f64>> = decomp.subdomains.iter().map(|s| vec![0.0; s.ndof()]).collect();
    let mut holders: Vec<(usize, usize, f64)> = Vec::new();
    for d in 0..space.ndof {
        holders.clear();
        for (j, s) in decomp.subdomains.iter().enumerate() {
            if let Some(i) = s.numbering.local(d) {
                if dist[j][i] > 0.0 {
                    holders.push((j, i, dist[j][i]));
                }
            }
        }
        let total: f64 = holders.iter().map(|h| h.2).sum();
        if holders.is_empty() || !(total > 0.0) {
            return Err(Error::Decomposition(format!("dof {d} lies on the interfaces of every subdomain containing it")));
        }
        let mut acc = 0.0;
        let last = holders.len() - 1;
        for (m, &(j, i, v)) in holders.iter().enumerate() {
            let chi = if m == last { 1.0 - acc } else { v / total };
            weights[j][i] = chi;
            acc += chi;
        }
    }
    Ok(PartitionOfUnity { weights })
}

/// `R̃ᵀ_j w_j`: nodal multiplication by `χ_j`, then zero extension.
pub fn weighted_prolong(decomp: &Decomposition, pou: &PartitionOfUnity, j: usize, w_j: &[C64]) -> Vec<C64> {
    let mut out = vec![C64::zero(); decomp.ndof];
    weighted_prolong_add(decomp, pou, j, w_j, &mut out);
    out
}

/// `out += R̃ᵀ_j w_j`.
pub fn weighted_prolong_add(decomp: &Decomposition, pou: &PartitionOfUnity, j: usize, w_j: &[C64], out: &mut [C64]) {
    let s = &decomp.subdomains[j];
    for ((&d, &chi), &v) in s.numbering.dofs.iter().zip(&pou.weights[j]).zip(w_j) {
        if chi != 0.0 {
            out[d] += v * chi;
        }
    }
}
