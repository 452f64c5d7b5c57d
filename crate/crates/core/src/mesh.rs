//! Uniform triangulations of axis-aligned rectangles.

use std::collections::HashMap;
use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};

/// The rectangle `[0, length] × [0, height]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RectDomain {
    pub length: f64,
    pub height: f64,
}

impl RectDomain {
    pub fn new(length: f64, height: f64) -> Result<Self> {
        if !(length > 0.0 && height > 0.0) {
            return Err(Error::InvalidArgument(format!("domain extents must be positive, got {length}×{height}")));
        }
        Ok(Self { length, height })
    }

    pub fn unit_square() -> Self {
        Self { length: 1.0, height: 1.0 }
    }

    pub fn diameter(&self) -> f64 {
        self.length.hypot(self.height)
    }
}

/// Which side of the rectangle a boundary edge lies on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Side {
    Left,
    Right,
    Bottom,
    Top,
}

impl Side {
    pub const ALL: [Side; 4] = [Side::Left, Side::Right, Side::Bottom, Side::Top];

    /// Outward unit normal.
    pub fn normal(self) -> [f64; 2] {
        match self {
            Side::Left => [-1.0, 0.0],
            Side::Right => [1.0, 0.0],
            Side::Bottom => [0.0, -1.0],
            Side::Top => [0.0, 1.0],
        }
    }
}

/// Uniform mesh: every grid cell is split along its lower-left to upper-right
/// diagonal into two counter-clockwise triangles.
#[derive(Clone, Debug)]
pub struct TriMesh {
    pub domain: RectDomain,
    pub nx: usize,
    pub ny: usize,
    pub vertices: Vec<[f64; 2]>,
    pub triangles: Vec<[usize; 3]>,
    /// Edges as sorted vertex pairs.
    pub edges: Vec<[usize; 2]>,
    /// Edge `i` of a triangle joins its local vertices `i` and `i + 1 (mod 3)`.
    pub triangle_edges: Vec<[usize; 3]>,
    /// Adjacent triangles of each edge; the second is `None` on the boundary.
    pub edge_triangles: Vec<[Option<usize>; 2]>,
    /// Boundary edges with the side they lie on.
    pub boundary_edges: Vec<(usize, Side)>,
    /// Maximum element diameter (the cell diagonal).
    pub h: f64,
}

impl TriMesh {
    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Grid spacing in x.
    pub fn dx(&self) -> f64 {
        self.domain.length / self.nx as f64
    }

    /// Grid spacing in y.
    pub fn dy(&self) -> f64 {
        self.domain.height / self.ny as f64
    }

    pub fn vertex_index(&self, i: usize, j: usize) -> usize {
        j * (self.nx + 1) + i
    }

    /// Grid cell `(i, j)` containing triangle `t`.
    pub fn cell_of(&self, t: usize) -> (usize, usize) {
        let c = t / 2;
        (c % self.nx, c / self.nx)
    }

    /// Signed area (positive for counter-clockwise triangles).
    pub fn signed_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t].map(|v| self.vertices[v]);
        0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
    }

    /// Index of the vertical grid line at `x`, if `x` lies on one.
    pub fn grid_line_x(&self, x: f64) -> Option<usize> {
        let s = x / self.domain.length * self.nx as f64;
        let i = s.round();
        ((s - i).abs() <= 1e-9 && i >= 0.0 && i <= self.nx as f64).then_some(i as usize)
    }

    /// Index of the horizontal grid line at `y`, if `y` lies on one.
    pub fn grid_line_y(&self, y: f64) -> Option<usize> {
        let s = y / self.domain.height * self.ny as f64;
        let j = s.round();
        ((s - j).abs() <= 1e-9 && j >= 0.0 && j <= self.ny as f64).then_some(j as usize)
    }

    /// Writes `x y` per vertex then `i j k` per triangle (0-based).
    pub fn write_dump<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for v in &self.vertices {
            writeln!(out, "{:.17e} {:.17e}", v[0], v[1])?;
        }
        for t in &self.triangles {
            writeln!(out, "{} {} {}", t[0], t[1], t[2])?;
        }
        Ok(())
    }
}

/// Uniform `nx × ny` mesh of `domain`.
pub fn build_uniform_mesh(domain: RectDomain, nx: usize, ny: usize) -> Result<TriMesh> {
    if nx == 0 || ny == 0 {
        return Err(Error::InvalidArgument(format!("mesh needs nx, ny ≥ 1, got {nx}×{ny}")));
    }
    let (dx, dy) = (domain.length / nx as f64, domain.height / ny as f64);
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            let x = if i == nx { domain.length } else { i as f64 * domain.length / nx as f64 };
            let y = if j == ny { domain.height } else { j as f64 * domain.height / ny as f64 };
            vertices.push([x, y]);
        }
    }
    let vid = |i: usize, j: usize| j * (nx + 1) + i;
    let mut triangles = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let (v00, v10, v01, v11) = (vid(i, j), vid(i + 1, j), vid(i, j + 1), vid(i + 1, j + 1));
            triangles.push([v00, v10, v11]);
            triangles.push([v00, v11, v01]);
        }
    }
    let mut edge_id: HashMap<[usize; 2], usize> = HashMap::with_capacity(3 * nx * ny + nx + ny);
    let mut edges = Vec::new();
    let mut edge_triangles: Vec<[Option<usize>; 2]> = Vec::new();
    let mut triangle_edges = Vec::with_capacity(triangles.len());
    for (t, tri) in triangles.iter().enumerate() {
        let mut te = [0usize; 3];
        for (k, slot) in te.iter_mut().enumerate() {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            let key = [a.min(b), a.max(b)];
            let e = *edge_id.entry(key).or_insert_with(|| {
                edges.push(key);
                edge_triangles.push([None, None]);
                edges.len() - 1
            });
            if edge_triangles[e][0].is_none() {
                edge_triangles[e][0] = Some(t);
            } else {
                edge_triangles[e][1] = Some(t);
            }
            *slot = e;
        }
        triangle_edges.push(te);
    }
    let mut boundary_edges = Vec::new();
    for (e, adj) in edge_triangles.iter().enumerate() {
        if adj[1].is_some() {
            continue;
        }
        let [a, b] = edges[e].map(|v| vertices[v]);
        let side = if a[0] == 0.0 && b[0] == 0.0 {
            Side::Left
        } else if a[0] == domain.length && b[0] == domain.length {
            Side::Right
        } else if a[1] == 0.0 && b[1] == 0.0 {
            Side::Bottom
        } else {
            Side::Top
        };
        boundary_edges.push((e, side));
    }
    Ok(TriMesh {
        domain,
        nx,
        ny,
        vertices,
        triangles,
        edges,
        triangle_edges,
        edge_triangles,
        boundary_edges,
        h: dx.hypot(dy),
    })
}

/// Default cap on the number of grid lines considered by [`snap_resolution`].
pub const DEFAULT_GRID_CAP: usize = 100_000;

/// Coarsest `(nx, ny)` with cell width `≤ target_h` whose vertical grid lines
/// contain every interface abscissa. `ny` makes cells as square as possible.
pub fn snap_resolution(domain: RectDomain, target_h: f64, interfaces: &[f64]) -> Result<(usize, usize)> {
    snap_resolution_capped(domain, target_h, interfaces, DEFAULT_GRID_CAP)
}

pub fn snap_resolution_capped(
    domain: RectDomain,
    target_h: f64,
    interfaces: &[f64],
    cap: usize,
) -> Result<(usize, usize)> {
    if !(target_h > 0.0) {
        return Err(Error::InvalidArgument(format!("target h must be positive, got {target_h}")));
    }
    for &c in interfaces {
        if !(c > 0.0 && c < domain.length) {
            return Err(Error::InvalidArgument(format!("interface x = {c} outside (0, {})", domain.length)));
        }
    }
    let start = ((domain.length / target_h) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    for nx in start..=cap {
        let resolved = interfaces.iter().all(|&c| {
            let s = c / domain.length * nx as f64;
            (s - s.round()).abs() <= 1e-9 * s.max(1.0)
        });
        if resolved {
            let ny = ((domain.height * nx as f64 / domain.length).round() as usize).max(1);
            let ny = if domain.height / ny as f64 > target_h * (1.0 + 1e-12) {
                (domain.height / target_h * (1.0 - 1e-12)).ceil() as usize
            } else {
                ny
            };
            return Ok((nx, ny));
        }
    }
    Err(Error::ResolutionCap { cap, target_h })
}
