//! Sparse model operators `D` and weights `h` with `D x = Λ`.

mod io;
mod mesh;
mod projector;

pub use io::{MeshDocument, MeshSpec, OperatorDocument, MESH_SCHEMA};
pub use mesh::{regular_triangulation, Boundary, Mesh1D, Mesh2D};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{CsrMatrix, SparseLu, Triplets};

/// Model family and its structural parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelKind {
    Ar1 { rho: f64 },
    Sar { rho: f64 },
    Crw1,
    Ou { kappa: f64 },
    Crw2,
    Matern1d { kappa: f64 },
    Matern2d { kappa: f64, alpha: u32 },
    Custom,
}

impl ModelKind {
    /// `ρ` or `κ`, when the family has one.
    pub fn parameter(&self) -> Option<f64> {
        match *self {
            ModelKind::Ar1 { rho } | ModelKind::Sar { rho } => Some(rho),
            ModelKind::Ou { kappa } | ModelKind::Matern1d { kappa } | ModelKind::Matern2d { kappa, .. } => Some(kappa),
            _ => None,
        }
    }
}

/// One-dimensional differential operators discretized on a [`Mesh1D`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DiffKind {
    #[serde(rename = "CRW1", alias = "crw1")]
    Crw1,
    #[serde(rename = "OU", alias = "ou")]
    Ou,
    #[serde(rename = "CRW2", alias = "crw2")]
    Crw2,
    #[serde(rename = "Matern2", alias = "matern2")]
    Matern2,
}

impl std::str::FromStr for DiffKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "crw1" => Ok(DiffKind::Crw1),
            "ou" => Ok(DiffKind::Ou),
            "crw2" => Ok(DiffKind::Crw2),
            "matern2" | "matern" => Ok(DiffKind::Matern2),
            _ => Err(invalid(format!("unknown 1D operator '{s}' (expected CRW1, OU, CRW2 or Matern2)"))),
        }
    }
}

/// What is needed to rebuild the operator for another `ρ` or `κ`.
#[derive(Debug, Clone, PartialEq)]
enum Template {
    Fixed,
    Ar1 { n: usize },
    Sar { w: CsrMatrix },
    Diff1d { kind: DiffKind, mesh: Mesh1D },
    Matern2d { stiffness: CsrMatrix, alpha: u32 },
}

/// `D` together with the noise weights `h`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelOperator {
    d: CsrMatrix,
    h: Vec<f64>,
    kind: ModelKind,
    mesh_id: Option<String>,
    template: Template,
}

impl ModelOperator {
    /// Operator from an explicit matrix; `h` must be positive.
    pub fn custom(d: CsrMatrix, h: Vec<f64>) -> Result<Self> {
        if !d.is_square() || d.nrows() != h.len() {
            return Err(invalid(format!(
                "operator must be square with one weight per row: {}x{} with {} weights",
                d.nrows(),
                d.ncols(),
                h.len()
            )));
        }
        if let Some(i) = h.iter().position(|&v| !(v > 0.0) || !v.is_finite()) {
            return Err(invalid(format!("weight h[{i}] = {} must be positive", h[i])));
        }
        Ok(Self {
            d,
            h,
            kind: ModelKind::Custom,
            mesh_id: None,
            template: Template::Fixed,
        })
    }

    pub fn d(&self) -> &CsrMatrix {
        &self.d
    }

    pub fn h(&self) -> &[f64] {
        &self.h
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.h.len()
    }

    pub fn mesh_id(&self) -> Option<&str> {
        self.mesh_id.as_deref()
    }

    pub fn with_mesh_id(mut self, id: impl Into<String>) -> Self {
        self.mesh_id = Some(id.into());
        self
    }

    /// Same family with a new `ρ` (AR1, SAR) or `κ` (OU, Matérn).
    pub fn with_parameter(&self, value: f64) -> Result<Self> {
        let rebuilt = match &self.template {
            Template::Fixed => return Err(invalid("operator has no structural parameter")),
            Template::Ar1 { n } => ar1_operator(value, *n)?,
            Template::Sar { w } => sar_operator(w, value)?,
            Template::Diff1d { kind, mesh } => diff_operator_1d(*kind, value, mesh)?,
            Template::Matern2d { stiffness, alpha } => matern_2d_from_parts(value, *alpha, &self.h, stiffness)?,
        };
        Ok(Self {
            mesh_id: self.mesh_id.clone(),
            ..rebuilt
        })
    }

    pub fn has_parameter(&self) -> bool {
        self.kind.parameter().is_some() && self.template != Template::Fixed
    }

    /// `Q = σ⁻² Dᵀ diag(h)⁻¹ D`.
    pub fn precision(&self, sigma: f64) -> CsrMatrix {
        let w: Vec<f64> = self.h.iter().map(|&hi| 1.0 / (sigma * sigma * hi)).collect();
        self.d.gram_weighted(&w)
    }

    pub fn lu(&self) -> Result<SparseLu> {
        SparseLu::new(&self.d)
    }

    /// Checks invertibility of `D` (all LU pivots above 1e-12 in magnitude).
    pub fn validate(&self) -> Result<()> {
        let lu = self.lu()?;
        let p = lu.min_abs_pivot();
        if !(p > 1e-12) {
            return Err(Error::Singular { row: 0, pivot: p });
        }
        Ok(())
    }
}

/// Stationary AR1: `x_0 √(1−ρ²) = Λ_0`, `x_i − ρ x_{i−1} = Λ_i`.
pub fn ar1_operator(rho: f64, n: usize) -> Result<ModelOperator> {
    if !(rho.abs() < 1.0) {
        return Err(invalid(format!("AR1 needs |rho| < 1, got {rho}")));
    }
    if n == 0 {
        return Err(invalid("AR1 needs n >= 1"));
    }
    let mut t = Triplets::new(n, n);
    t.push(0, 0, (1.0 - rho * rho).sqrt());
    for i in 1..n {
        t.push(i, i, 1.0);
        if rho != 0.0 {
            t.push(i, i - 1, -rho);
        }
    }
    Ok(ModelOperator {
        d: t.build(),
        h: vec![1.0; n],
        kind: ModelKind::Ar1 { rho },
        mesh_id: None,
        template: Template::Ar1 { n },
    })
}

/// Simultaneous autoregression `D = I − ρ W` for a row-standardized `W`.
pub fn sar_operator(w: &CsrMatrix, rho: f64) -> Result<ModelOperator> {
    if !w.is_square() {
        return Err(invalid(format!("SAR weight matrix must be square, got {}x{}", w.nrows(), w.ncols())));
    }
    if !(rho.abs() < 1.0) {
        return Err(invalid(format!("SAR needs |rho| < 1, got {rho}")));
    }
    let n = w.nrows();
    for i in 0..n {
        if w.get(i, i) != 0.0 {
            return Err(invalid(format!("SAR weight matrix has nonzero diagonal at row {i}")));
        }
        let s: f64 = w.row(i).map(|(_, v)| v).sum();
        if w.row(i).any(|(_, v)| v < 0.0) || !(s >= 0.0 && s <= 1.0 + 1e-12) {
            return Err(invalid(format!("SAR weight row {i} sums to {s}, expected a value in [0, 1]")));
        }
    }
    let d = CsrMatrix::identity(n).add_scaled(w, -rho);
    Ok(ModelOperator {
        d,
        h: vec![1.0; n],
        kind: ModelKind::Sar { rho },
        mesh_id: None,
        template: Template::Sar { w: w.clone() },
    })
}

/// Row-standardized rook adjacency of an `nx × ny` lattice (index `j·nx + i`).
pub fn lattice_weights(nx: usize, ny: usize) -> CsrMatrix {
    let n = nx * ny;
    let mut t = Triplets::new(n, n);
    for j in 0..ny {
        for i in 0..nx {
            let mut nb = Vec::with_capacity(4);
            if i > 0 {
                nb.push(j * nx + i - 1);
            }
            if i + 1 < nx {
                nb.push(j * nx + i + 1);
            }
            if j > 0 {
                nb.push((j - 1) * nx + i);
            }
            if j + 1 < ny {
                nb.push((j + 1) * nx + i);
            }
            let wgt = 1.0 / nb.len().max(1) as f64;
            for k in nb {
                t.push(j * nx + i, k, wgt);
            }
        }
    }
    t.build()
}

/// Piecewise linear stiffness matrix `G_ij = ∫ ψ_i' ψ_j'` on a 1D mesh.
pub fn stiffness_1d(mesh: &Mesh1D) -> CsrMatrix {
    let n = mesh.len();
    let mut t = Triplets::new(n, n);
    for (k, d) in mesh.spacings().into_iter().enumerate() {
        let g = 1.0 / d;
        t.push(k, k, g);
        t.push(k + 1, k + 1, g);
        t.push(k, k + 1, -g);
        t.push(k + 1, k, -g);
    }
    t.build()
}

/// Finite element / finite difference discretization of the 1D operators.
///
/// All kinds use the lumped mass `h_i = (Δ_{i−1} + Δ_i)/2`, and each row is
/// scaled so that `Λ_i` has variance `σ² h_i`:
///
/// * `Matern2`: `D = κ² diag(h) + G`. Neumann boundaries are natural; for
///   Dirichlet, couplings to the two end nodes are removed and the end rows
///   keep only their diagonal.
/// * `CRW1`: `x_0 = Λ_0`, `(x_i − x_{i−1}) √(h_i/Δ_{i−1}) = Λ_i`.
/// * `OU`: exact transition `x_i = e^{−κΔ} x_{i−1} + ε_i` with the first node
///   at the stationary variance `σ²/(2κ)`.
/// * `CRW2`: `x_0 = Λ_0`, slope row `(x_1 − x_0)/Δ_0 = Λ_1`, then scaled
///   differences of consecutive slopes.
pub fn diff_operator_1d(kind: DiffKind, kappa: f64, mesh: &Mesh1D) -> Result<ModelOperator> {
    let n = mesh.len();
    if n < 3 {
        return Err(Error::InvalidMesh(format!("1D operators need at least 3 nodes, got {n}")));
    }
    let needs_kappa = matches!(kind, DiffKind::Ou | DiffKind::Matern2);
    if needs_kappa && !(kappa > 0.0 && kappa.is_finite()) {
        return Err(invalid(format!("kappa must be positive, got {kappa}")));
    }
    let h = mesh.lumped_mass();
    let dl = mesh.spacings();
    let mut t = Triplets::new(n, n);
    let model = match kind {
        DiffKind::Matern2 => {
            let g = stiffness_1d(mesh);
            let dirichlet = mesh.boundary() == Boundary::Dirichlet;
            let is_end = |i: usize| i == 0 || i == n - 1;
            for (i, j, v) in g.triplets() {
                if dirichlet && i != j && (is_end(i) || is_end(j)) {
                    continue;
                }
                t.push(i, j, v);
            }
            for (i, &hi) in h.iter().enumerate() {
                t.push(i, i, kappa * kappa * hi);
            }
            ModelKind::Matern1d { kappa }
        }
        DiffKind::Crw1 => {
            t.push(0, 0, 1.0);
            for i in 1..n {
                let c = (h[i] / dl[i - 1]).sqrt();
                t.push(i, i, c);
                t.push(i, i - 1, -c);
            }
            ModelKind::Crw1
        }
        DiffKind::Ou => {
            t.push(0, 0, (2.0 * kappa * h[0]).sqrt());
            for i in 1..n {
                let rho = (-kappa * dl[i - 1]).exp();
                let c = (2.0 * kappa * h[i] / (-(-2.0 * kappa * dl[i - 1]).exp_m1())).sqrt();
                t.push(i, i, c);
                t.push(i, i - 1, -c * rho);
            }
            ModelKind::Ou { kappa }
        }
        DiffKind::Crw2 => {
            t.push(0, 0, 1.0);
            t.push(1, 1, 1.0 / dl[0]);
            t.push(1, 0, -1.0 / dl[0]);
            for i in 2..n {
                let (a, b) = (dl[i - 2], dl[i - 1]);
                let c = (h[i] / (0.5 * (a + b))).sqrt();
                t.push(i, i, c / b);
                t.push(i, i - 1, -c * (1.0 / b + 1.0 / a));
                t.push(i, i - 2, c / a);
            }
            ModelKind::Crw2
        }
    };
    Ok(ModelOperator {
        d: t.build(),
        h,
        kind: model,
        mesh_id: None,
        template: Template::Diff1d { kind, mesh: mesh.clone() },
    })
}

/// Lumped masses and P1 stiffness matrix of a triangulation.
pub fn fem_matrices_2d(mesh: &Mesh2D) -> (Vec<f64>, CsrMatrix) {
    let n = mesh.len();
    let verts = mesh.vertices();
    let mut h = vec![0.0; n];
    let mut t = Triplets::new(n, n);
    for (k, tri) in mesh.triangles().iter().enumerate() {
        let area = mesh.triangle_area(k);
        let p = tri.map(|i| verts[i]);
        // edge opposite vertex i
        let e: [[f64; 2]; 3] = std::array::from_fn(|i| {
            let (a, b) = (p[(i + 1) % 3], p[(i + 2) % 3]);
            [b[0] - a[0], b[1] - a[1]]
        });
        for i in 0..3 {
            h[tri[i]] += area / 3.0;
            for j in 0..3 {
                t.push(tri[i], tri[j], (e[i][0] * e[j][0] + e[i][1] * e[j][1]) / (4.0 * area));
            }
        }
    }
    (h, t.build())
}

fn matern_2d_from_parts(kappa: f64, alpha: u32, h: &[f64], g: &CsrMatrix) -> Result<ModelOperator> {
    if !(kappa > 0.0 && kappa.is_finite()) {
        return Err(invalid(format!("kappa must be positive, got {kappa}")));
    }
    if alpha < 2 || alpha % 2 != 0 {
        return Err(invalid(format!("alpha must be an even integer >= 2, got {alpha}")));
    }
    let k2h: Vec<f64> = h.iter().map(|&v| kappa * kappa * v).collect();
    let d2 = g.add_scaled(&CsrMatrix::diagonal(&k2h), 1.0);
    let inv_h: Vec<f64> = h.iter().map(|&v| 1.0 / v).collect();
    let mut d = d2.clone();
    for _ in 1..alpha / 2 {
        d = d2.matmul(&d.scale_rows(&inv_h));
    }
    Ok(ModelOperator {
        d,
        h: h.to_vec(),
        kind: ModelKind::Matern2d { kappa, alpha },
        mesh_id: None,
        template: Template::Matern2d {
            stiffness: g.clone(),
            alpha,
        },
    })
}

/// SPDE Matérn operator on a triangulation: `D₂ = κ² C + G` with lumped
/// `C = diag(h)`, and `D_α = D₂ C⁻¹ D_{α−2}` for even `α > 2`. Boundaries are
/// Neumann.
pub fn fem_matern_2d(kappa: f64, alpha: u32, mesh: &Mesh2D) -> Result<ModelOperator> {
    let (h, g) = fem_matrices_2d(mesh);
    matern_2d_from_parts(kappa, alpha, &h, &g)
}
