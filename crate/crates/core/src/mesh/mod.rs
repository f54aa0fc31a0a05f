//! Triangle-mesh data model and geometric queries.

mod distance;
mod io;
mod topology;

pub use distance::{signed_distance, winding_number, DistanceIndex, DistanceResult};
pub use io::{load_mesh, mesh_bytes, parse_mesh, save_mesh, write_mesh};
pub use topology::{Edge, Topology};

use crate::error::{Error, Result};
use crate::geom::{Aabb, Vec2, Vec3};

/// Face area below this (in squared model units) is treated as degenerate.
pub const DEGENERATE_AREA: f64 = 1e-12;

/// Indexed triangle mesh with optional per-face-corner UVs and per-vertex
/// colors. Immutable after construction; all edits go through builders that
/// re-validate.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TriMesh {
    pub vertices: Vec<Vec3>,
    pub faces: Vec<[usize; 3]>,
    /// Exactly 3 entries per face when present, in corner order.
    pub uvs: Option<Vec<[Vec2; 3]>>,
    /// One RGB triple in [0,1] per vertex when present.
    pub vertex_colors: Option<Vec<[f64; 3]>>,
}

impl TriMesh {
    pub fn new(vertices: Vec<Vec3>, faces: Vec<[usize; 3]>) -> Result<Self> {
        let mesh = TriMesh {
            vertices,
            faces,
            uvs: None,
            vertex_colors: None,
        };
        mesh.validate()?;
        Ok(mesh)
    }

    pub fn with_uvs(mut self, uvs: Vec<[Vec2; 3]>) -> Result<Self> {
        self.uvs = Some(uvs);
        self.validate()?;
        Ok(self)
    }

    pub fn with_vertex_colors(mut self, colors: Vec<[f64; 3]>) -> Result<Self> {
        self.vertex_colors = Some(colors);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.vertices.len();
        for (fi, f) in self.faces.iter().enumerate() {
            for &v in f {
                if v >= n {
                    return Err(Error::Validation(format!(
                        "face {fi} references vertex {v}, but only {n} vertices exist"
                    )));
                }
            }
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                return Err(Error::Validation(format!(
                    "face {fi} repeats a vertex index: {f:?}"
                )));
            }
        }
        if let Some(uvs) = &self.uvs {
            if uvs.len() != self.faces.len() {
                return Err(Error::Validation(format!(
                    "uv count {} does not match face count {}",
                    uvs.len(),
                    self.faces.len()
                )));
            }
        }
        if let Some(colors) = &self.vertex_colors {
            if colors.len() != n {
                return Err(Error::Validation(format!(
                    "vertex color count {} does not match vertex count {n}",
                    colors.len()
                )));
            }
        }
        for v in &self.vertices {
            if !v.iter().all(|c| c.is_finite()) {
                return Err(Error::Validation("non-finite vertex coordinate".into()));
            }
        }
        Ok(())
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn face_vertices(&self, face: usize) -> [Vec3; 3] {
        let [a, b, c] = self.faces[face];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    /// Twice the face area (cross-product magnitude is deferred to callers
    /// that need it); here the plain area in squared model units.
    pub fn face_area(&self, face: usize) -> f64 {
        let [a, b, c] = self.face_vertices(face);
        (b - a).cross(&(c - a)).norm() * 0.5
    }

    pub fn bounding_box(&self) -> Aabb {
        Aabb::from_points(self.vertices.iter())
    }

    /// Centroid of a face.
    pub fn face_centroid(&self, face: usize) -> Vec3 {
        let [a, b, c] = self.face_vertices(face);
        (a + b + c) / 3.0
    }
}

/// Unit outward normal of a face, following counter-clockwise orientation.
pub fn face_normal(mesh: &TriMesh, face: usize) -> Result<Vec3> {
    if face >= mesh.face_count() {
        return Err(Error::Validation(format!(
            "face index {face} out of range ({} faces)",
            mesh.face_count()
        )));
    }
    let [a, b, c] = mesh.face_vertices(face);
    let cross = (b - a).cross(&(c - a));
    let area = cross.norm() * 0.5;
    if area <= DEGENERATE_AREA {
        return Err(Error::DegenerateFace { face, area });
    }
    Ok(cross / (2.0 * area))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tri(vertices: Vec<Vec3>) -> TriMesh {
        TriMesh::new(vertices, vec![[0, 1, 2]]).unwrap()
    }

    #[test]
    fn rejects_out_of_range_index() {
        let err = TriMesh::new(vec![Vec3::zeros(); 3], vec![[0, 1, 99]]).unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
    }

    #[test]
    fn rejects_repeated_index() {
        let err = TriMesh::new(vec![Vec3::zeros(); 3], vec![[0, 1, 1]]).unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
    }

    #[test]
    fn face_normal_axis_aligned() {
        let m = tri(vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
        ]);
        let n = face_normal(&m, 0).unwrap();
        assert!((n - Vec3::new(0.0, 0.0, 1.0)).norm() < 1e-12);
    }

    #[test]
    fn face_normal_reversed_winding() {
        let m = tri(vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
        ]);
        let n = face_normal(&m, 0).unwrap();
        assert!((n - Vec3::new(0.0, 0.0, -1.0)).norm() < 1e-12);
    }

    #[test]
    fn face_normal_matches_cross_product_oracle() {
        let a = Vec3::new(0.0, 0.0, 0.0);
        let b = Vec3::new(1.0, 0.0, 0.0);
        let c = Vec3::new(0.0, 1.0, 1.0);
        let m = tri(vec![a, b, c]);
        let n = face_normal(&m, 0).unwrap();
        let expected = (b - a).cross(&(c - a)).normalize();
        assert!((n - expected).norm() < 1e-12);
        assert!((n.norm() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn face_normal_translation_invariant() {
        let a = Vec3::new(0.3, -0.2, 0.9);
        let b = Vec3::new(1.1, 0.4, 0.2);
        let c = Vec3::new(-0.5, 1.0, 1.4);
        let t = Vec3::new(13.7, -4.2, 101.0);
        let m1 = tri(vec![a, b, c]);
        let m2 = tri(vec![a + t, b + t, c + t]);
        let n1 = face_normal(&m1, 0).unwrap();
        let n2 = face_normal(&m2, 0).unwrap();
        assert!((n1 - n2).norm() < 1e-9);
    }

    #[test]
    fn degenerate_face_rejected() {
        let m = tri(vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1e-9, 0.0, 0.0),
            Vec3::new(2e-9, 1e-9, 0.0),
        ]);
        assert!(matches!(
            face_normal(&m, 0),
            Err(Error::DegenerateFace { .. })
        ));
    }
}
