use super::mesh::{signed_area, Mesh1D, Mesh2D};
use crate::error::{Error, Result};
use crate::linalg::{CsrMatrix, Triplets};

const HULL_TOL: f64 = 1e-12;

impl Mesh1D {
    /// Projector `A` with `A_{ji} = ψ_i(s_j)` for hat functions `ψ_i`.
    pub fn projector(&self, locations: &[f64]) -> Result<CsrMatrix> {
        let nodes = self.nodes();
        let n = nodes.len();
        let (lo, hi) = (nodes[0], nodes[n - 1]);
        let tol = HULL_TOL * (hi - lo);
        let mut t = Triplets::new(locations.len(), n);
        for (j, &s) in locations.iter().enumerate() {
            if !(s >= lo - tol && s <= hi + tol) {
                return Err(Error::OutsideMesh { point: vec![s] });
            }
            let s = s.clamp(lo, hi);
            // interval k with nodes[k] <= s <= nodes[k+1]
            let k = nodes.partition_point(|&v| v <= s).saturating_sub(1).min(n - 2);
            let w = (s - nodes[k]) / (nodes[k + 1] - nodes[k]);
            if w < 1.0 {
                t.push(j, k, 1.0 - w);
            }
            if w > 0.0 {
                t.push(j, k + 1, w);
            }
        }
        Ok(t.build())
    }
}

impl Mesh2D {
    /// Barycentric projector onto the piecewise linear basis.
    pub fn projector(&self, locations: &[[f64; 2]]) -> Result<CsrMatrix> {
        let verts = self.vertices();
        let mut t = Triplets::new(locations.len(), verts.len());
        for (j, &p) in locations.iter().enumerate() {
            let (tri, bary) = self.locate(p).ok_or(Error::OutsideMesh { point: p.to_vec() })?;
            for (k, &b) in tri.iter().zip(&bary) {
                if b > 0.0 {
                    t.push(j, *k, b);
                }
            }
        }
        Ok(t.build())
    }

    /// Triangle containing `p` and the barycentric coordinates of `p` in it.
    pub fn locate(&self, p: [f64; 2]) -> Option<([usize; 3], [f64; 3])> {
        let verts = self.vertices();
        let mut best: Option<([usize; 3], [f64; 3], f64)> = None;
        for tri in self.triangles() {
            let [a, b, c] = tri.map(|i| verts[i]);
            let area = signed_area(a, b, c);
            let l0 = signed_area(p, b, c) / area;
            let l1 = signed_area(a, p, c) / area;
            let l2 = 1.0 - l0 - l1;
            let worst = l0.min(l1).min(l2);
            if worst >= 0.0 {
                return Some((*tri, [l0, l1, l2]));
            }
            if worst > -HULL_TOL && best.as_ref().is_none_or(|b| worst > b.2) {
                best = Some((*tri, [l0, l1, l2], worst));
            }
        }
        best.map(|(tri, l, _)| {
            let clipped = l.map(|v| v.max(0.0));
            let s: f64 = clipped.iter().sum();
            (tri, clipped.map(|v| v / s))
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{regular_triangulation, Boundary};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn projector_1d_rows() {
        let m = Mesh1D::new(vec![0.0, 1.0, 3.0, 4.0], Boundary::Neumann).unwrap();
        let a = m.projector(&[1.0, 0.5, 2.0, 4.0]).unwrap();
        assert_eq!(a.to_dense()[0], vec![0.0, 1.0, 0.0, 0.0]);
        assert_eq!(a.to_dense()[1], vec![0.5, 0.5, 0.0, 0.0]);
        assert_eq!(a.to_dense()[2], vec![0.0, 0.5, 0.5, 0.0]);
        assert_eq!(a.to_dense()[3], vec![0.0, 0.0, 0.0, 1.0]);
        match m.projector(&[4.5]) {
            Err(Error::OutsideMesh { point }) => assert_eq!(point, vec![4.5]),
            other => panic!("expected OutsideMesh, got {other:?}"),
        }
    }

    #[test]
    fn projector_2d_rows() {
        let m = regular_triangulation([0.0, 2.0, 0.0, 1.0], 5, 3).unwrap();
        let a = m.projector(&[m.vertices()[7]]).unwrap();
        assert_eq!(a.row(0).collect::<Vec<_>>(), vec![(7, 1.0)]);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pts: Vec<[f64; 2]> = (0..100).map(|_| [2.0 * rng.random::<f64>(), rng.random::<f64>()]).collect();
        let a = m.projector(&pts).unwrap();
        for (j, p) in pts.iter().enumerate() {
            let row: Vec<(usize, f64)> = a.row(j).collect();
            assert!(row.len() <= 3);
            assert!((row.iter().map(|r| r.1).sum::<f64>() - 1.0).abs() < 1e-12);
            // linear functions are reproduced exactly
            let x: f64 = row.iter().map(|&(i, w)| w * m.vertices()[i][0]).sum();
            let y: f64 = row.iter().map(|&(i, w)| w * m.vertices()[i][1]).sum();
            assert!((x - p[0]).abs() < 1e-12 && (y - p[1]).abs() < 1e-12);
        }
        assert!(matches!(m.projector(&[[2.5, 0.5]]), Err(Error::OutsideMesh { .. })));
    }
}
