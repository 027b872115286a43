use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Boundary condition of the 1D finite element operators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    #[default]
    Neumann,
    Dirichlet,
}

/// Interval mesh with strictly increasing nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mesh1D {
    nodes: Vec<f64>,
    boundary: Boundary,
}

impl Mesh1D {
    pub fn new(nodes: Vec<f64>, boundary: Boundary) -> Result<Self> {
        if nodes.len() < 3 {
            return Err(Error::InvalidMesh(format!("1D mesh needs at least 3 nodes, got {}", nodes.len())));
        }
        if let Some(k) = nodes.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidMesh(format!(
                "nodes must be strictly increasing: node {} = {} is followed by {}",
                k,
                nodes[k],
                nodes[k + 1]
            )));
        }
        if nodes.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidMesh("nodes must be finite".into()));
        }
        Ok(Self { nodes, boundary })
    }

    /// `n` equally spaced nodes on `[a, b]`.
    pub fn uniform(a: f64, b: f64, n: usize, boundary: Boundary) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidMesh(format!("1D mesh needs at least 3 nodes, got {n}")));
        }
        let step = (b - a) / (n - 1) as f64;
        Self::new((0..n).map(|i| a + step * i as f64).collect(), boundary)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Interval lengths `Δ_i = s_{i+1} − s_i`.
    pub fn spacings(&self) -> Vec<f64> {
        self.nodes.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Integrals of the hat functions: `(Δ_{i−1} + Δ_i)/2`.
    pub fn lumped_mass(&self) -> Vec<f64> {
        let d = self.spacings();
        let n = self.nodes.len();
        (0..n)
            .map(|i| {
                let left = if i > 0 { d[i - 1] } else { 0.0 };
                let right = if i + 1 < n { d[i] } else { 0.0 };
                0.5 * (left + right)
            })
            .collect()
    }
}

/// Conforming triangulation of a planar domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mesh2D {
    vertices: Vec<[f64; 2]>,
    triangles: Vec<[usize; 3]>,
}

pub(crate) fn signed_area(p: [f64; 2], q: [f64; 2], r: [f64; 2]) -> f64 {
    0.5 * ((q[0] - p[0]) * (r[1] - p[1]) - (r[0] - p[0]) * (q[1] - p[1]))
}

impl Mesh2D {
    /// Validates the mesh and orients every triangle counter-clockwise.
    pub fn new(vertices: Vec<[f64; 2]>, mut triangles: Vec<[usize; 3]>) -> Result<Self> {
        let nv = vertices.len();
        if triangles.is_empty() {
            return Err(Error::InvalidMesh("mesh has no triangles".into()));
        }
        if vertices.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidMesh("vertex coordinates must be finite".into()));
        }
        let mut used = vec![false; nv];
        let mut areas = Vec::with_capacity(triangles.len());
        for (t, tri) in triangles.iter_mut().enumerate() {
            if let Some(&bad) = tri.iter().find(|&&i| i >= nv) {
                return Err(Error::InvalidMesh(format!("triangle {t} references vertex {bad}, mesh has {nv}")));
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(Error::InvalidMesh(format!("triangle {t} repeats a vertex: {tri:?}")));
            }
            let a = signed_area(vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]);
            if a < 0.0 {
                tri.swap(1, 2);
            }
            areas.push(a.abs());
            for &i in tri.iter() {
                used[i] = true;
            }
        }
        let total: f64 = areas.iter().sum();
        if let Some(t) = areas.iter().position(|&a| !(a > 1e-14 * total)) {
            return Err(Error::InvalidMesh(format!(
                "triangle {t} is degenerate (area {:.3e}, domain area {:.3e})",
                areas[t], total
            )));
        }
        if let Some(v) = used.iter().position(|u| !u) {
            return Err(Error::InvalidMesh(format!("vertex {v} is not referenced by any triangle")));
        }
        // With consistent orientation, each directed edge appears at most once
        // and an interior edge is shared with the reverse direction.
        let mut directed: HashMap<(usize, usize), usize> = HashMap::new();
        for (t, tri) in triangles.iter().enumerate() {
            for k in 0..3 {
                let e = (tri[k], tri[(k + 1) % 3]);
                if let Some(other) = directed.insert(e, t) {
                    return Err(Error::InvalidMesh(format!(
                        "edge ({}, {}) is shared by triangles {other} and {t} with the same orientation (overlap or non-conforming mesh)",
                        e.0, e.1
                    )));
                }
            }
        }
        let mut undirected: HashMap<(usize, usize), usize> = HashMap::new();
        for &(a, b) in directed.keys() {
            *undirected.entry((a.min(b), a.max(b))).or_default() += 1;
        }
        if let Some((e, c)) = undirected.iter().find(|(_, &c)| c > 2) {
            return Err(Error::InvalidMesh(format!("edge {e:?} is shared by {c} triangles")));
        }
        Ok(Self { vertices, triangles })
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        signed_area(self.vertices[a], self.vertices[b], self.vertices[c])
    }

    pub fn area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.triangle_area(t)).sum()
    }

    /// Vertices that lie on a boundary edge.
    pub fn boundary_vertices(&self) -> Vec<bool> {
        let mut count: HashMap<(usize, usize), usize> = HashMap::new();
        for tri in &self.triangles {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                *count.entry((a.min(b), a.max(b))).or_default() += 1;
            }
        }
        let mut on = vec![false; self.vertices.len()];
        for ((a, b), c) in count {
            if c == 1 {
                on[a] = true;
                on[b] = true;
            }
        }
        on
    }
}

/// Structured triangulation of `[x0, x1] × [y0, y1]` with `nx × ny`
/// vertices, each cell split into two right triangles.
pub fn regular_triangulation(bounds: [f64; 4], nx: usize, ny: usize) -> Result<Mesh2D> {
    let [x0, x1, y0, y1] = bounds;
    if nx < 2 || ny < 2 {
        return Err(Error::InvalidMesh(format!("grid needs nx, ny >= 2, got {nx} x {ny}")));
    }
    if !(x1 > x0 && y1 > y0) {
        return Err(Error::InvalidMesh(format!("empty rectangle {bounds:?}")));
    }
    let dx = (x1 - x0) / (nx - 1) as f64;
    let dy = (y1 - y0) / (ny - 1) as f64;
    let mut vertices = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            vertices.push([x0 + dx * i as f64, y0 + dy * j as f64]);
        }
    }
    let id = |i: usize, j: usize| j * nx + i;
    let mut triangles = Vec::with_capacity(2 * (nx - 1) * (ny - 1));
    for j in 0..ny - 1 {
        for i in 0..nx - 1 {
            triangles.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            triangles.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    Mesh2D::new(vertices, triangles)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mesh1d_validation_and_mass() {
        assert!(Mesh1D::new(vec![0.0, 1.0], Boundary::Neumann).is_err());
        assert!(Mesh1D::new(vec![0.0, 1.0, 1.0], Boundary::Neumann).is_err());
        let m = Mesh1D::uniform(0.0, 2.0, 5, Boundary::Neumann).unwrap();
        assert_eq!(m.lumped_mass(), vec![0.25, 0.5, 0.5, 0.5, 0.25]);
    }

    #[test]
    fn regular_grid_counts() {
        let m = regular_triangulation([0.0, 1.0, 0.0, 1.0], 2, 2).unwrap();
        assert_eq!(m.triangles().len(), 2);
        let m = regular_triangulation([0.0, 3.0, -1.0, 1.0], 4, 5).unwrap();
        assert_eq!(m.len(), 20);
        assert_eq!(m.triangles().len(), 2 * 3 * 4);
        let expect = 6.0 / 24.0;
        for t in 0..m.triangles().len() {
            assert!((m.triangle_area(t) - expect).abs() < 1e-14);
        }
        let on = m.boundary_vertices();
        assert_eq!(on.iter().filter(|&&b| b).count(), 20 - 6);
    }

    #[test]
    fn rejects_bad_meshes() {
        let v = vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]];
        // collinear
        assert!(Mesh2D::new(vec![[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]], vec![[0, 1, 2]]).is_err());
        // overlapping copies of one triangle
        assert!(Mesh2D::new(v.clone(), vec![[0, 1, 2], [0, 2, 1], [1, 3, 2]]).is_err());
        // unreferenced vertex
        assert!(Mesh2D::new(v.clone(), vec![[0, 1, 2]]).is_err());
        // orientation is normalized
        let m = Mesh2D::new(v, vec![[0, 2, 1], [1, 3, 2]]).unwrap();
        assert!(m.triangle_area(0) > 0.0 && m.triangle_area(1) > 0.0);
    }
}
