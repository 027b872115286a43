//! JSON interchange for meshes and assembled operators (schema
//! `ngflex-mesh-1`).
//!
//! ```json
//! {
//!   "schema": "ngflex-mesh-1",
//!   "id": "optional mesh name",
//!   "mesh": { "type": "interval", "nodes": [0, 1, 2], "boundary": "neumann" },
//!   "operator": { "model": { "kind": "matern1d", "kappa": 0.2 },
//!                 "n": 3, "rows": [...], "cols": [...], "vals": [...], "h": [...] }
//! }
//! ```
//!
//! A triangulation uses `{ "type": "triangulation", "vertices": [[x, y], ...],
//! "triangles": [[i, j, k], ...] }`. Both `mesh` and `operator` are optional.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Boundary, Mesh1D, Mesh2D, ModelKind, ModelOperator};
use crate::error::{Error, Result};
use crate::linalg::CsrMatrix;

pub const MESH_SCHEMA: &str = "ngflex-mesh-1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum MeshSpec {
    Interval {
        nodes: Vec<f64>,
        #[serde(default)]
        boundary: Boundary,
    },
    Triangulation {
        vertices: Vec<[f64; 2]>,
        triangles: Vec<[usize; 3]>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorDocument {
    pub model: ModelKind,
    pub n: usize,
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
    pub vals: Vec<f64>,
    pub h: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshDocument {
    pub schema: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mesh: Option<MeshSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub operator: Option<OperatorDocument>,
}

impl MeshSpec {
    pub fn from_1d(mesh: &Mesh1D) -> Self {
        MeshSpec::Interval {
            nodes: mesh.nodes().to_vec(),
            boundary: mesh.boundary(),
        }
    }

    pub fn from_2d(mesh: &Mesh2D) -> Self {
        MeshSpec::Triangulation {
            vertices: mesh.vertices().to_vec(),
            triangles: mesh.triangles().to_vec(),
        }
    }

    pub fn to_1d(&self) -> Result<Mesh1D> {
        match self {
            MeshSpec::Interval { nodes, boundary } => Mesh1D::new(nodes.clone(), *boundary),
            _ => Err(Error::InvalidMesh("expected an interval mesh".into())),
        }
    }

    pub fn to_2d(&self) -> Result<Mesh2D> {
        match self {
            MeshSpec::Triangulation { vertices, triangles } => Mesh2D::new(vertices.clone(), triangles.clone()),
            _ => Err(Error::InvalidMesh("expected a triangulation".into())),
        }
    }
}

impl OperatorDocument {
    pub fn from_operator(op: &ModelOperator) -> Self {
        let (mut rows, mut cols, mut vals) = (Vec::new(), Vec::new(), Vec::new());
        for (i, j, v) in op.d().triplets() {
            rows.push(i);
            cols.push(j);
            vals.push(v);
        }
        Self {
            model: op.kind(),
            n: op.dim(),
            rows,
            cols,
            vals,
            h: op.h().to_vec(),
        }
    }

    /// Rebuilds a fixed operator (no structural-parameter updates).
    pub fn to_operator(&self) -> Result<ModelOperator> {
        if self.rows.len() != self.cols.len() || self.rows.len() != self.vals.len() {
            return Err(crate::error::invalid("operator triplet arrays have different lengths"));
        }
        if let Some(&bad) = self.rows.iter().chain(&self.cols).find(|&&i| i >= self.n) {
            return Err(crate::error::invalid(format!("operator index {bad} out of range for n = {}", self.n)));
        }
        let d = CsrMatrix::from_triplets(self.n, self.n, &self.rows, &self.cols, &self.vals);
        let mut op = ModelOperator::custom(d, self.h.clone())?;
        op.kind = self.model;
        Ok(op)
    }
}

impl MeshDocument {
    pub fn new(mesh: Option<MeshSpec>, operator: Option<&ModelOperator>) -> Self {
        Self {
            schema: MESH_SCHEMA.to_string(),
            id: operator.and_then(|o| o.mesh_id().map(str::to_string)),
            mesh,
            operator: operator.map(OperatorDocument::from_operator),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: Self = serde_json::from_str(text)?;
        if doc.schema != MESH_SCHEMA {
            return Err(Error::Schema {
                expected: MESH_SCHEMA.into(),
                found: doc.schema,
            });
        }
        Ok(doc)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }
}
