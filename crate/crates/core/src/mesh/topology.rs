//! Incidence and adjacency derived from the face list.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::mesh::TriMesh;

/// An undirected edge with its adjacent faces.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edge {
    /// Endpoint vertex indices, `a < b`.
    pub a: usize,
    pub b: usize,
    /// Faces incident to this edge (1 or 2).
    pub faces: Vec<usize>,
}

impl Edge {
    pub fn is_boundary(&self) -> bool {
        self.faces.len() == 1
    }
}

#[derive(Debug, Clone)]
pub struct Topology {
    /// For each vertex, the faces incident to it (ascending).
    pub vertex_faces: Vec<Vec<usize>>,
    /// For each vertex, its one-ring neighbor vertices (ascending).
    pub vertex_neighbors: Vec<Vec<usize>>,
    pub edges: Vec<Edge>,
    /// Lookup from (min, max) endpoint pair to edge index.
    pub edge_index: HashMap<(usize, usize), usize>,
}

impl Topology {
    /// Builds incidence structures. Fails on non-manifold edges (more than
    /// two adjacent faces).
    pub fn build(mesh: &TriMesh) -> Result<Self> {
        let n = mesh.vertex_count();
        let mut vertex_faces = vec![Vec::new(); n];
        let mut vertex_neighbors: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut edges: Vec<Edge> = Vec::new();
        let mut edge_index: HashMap<(usize, usize), usize> = HashMap::new();

        for (fi, f) in mesh.faces.iter().enumerate() {
            for corner in 0..3 {
                let v0 = f[corner];
                let v1 = f[(corner + 1) % 3];
                vertex_faces[v0].push(fi);
                let key = (v0.min(v1), v0.max(v1));
                match edge_index.get(&key) {
                    Some(&ei) => {
                        edges[ei].faces.push(fi);
                        if edges[ei].faces.len() > 2 {
                            return Err(Error::NonManifoldEdge {
                                a: key.0,
                                b: key.1,
                                count: edges[ei].faces.len(),
                            });
                        }
                    }
                    None => {
                        edge_index.insert(key, edges.len());
                        edges.push(Edge {
                            a: key.0,
                            b: key.1,
                            faces: vec![fi],
                        });
                    }
                }
            }
        }

        for e in &edges {
            vertex_neighbors[e.a].push(e.b);
            vertex_neighbors[e.b].push(e.a);
        }
        for list in vertex_neighbors.iter_mut().chain(vertex_faces.iter_mut()) {
            list.sort_unstable();
            list.dedup();
        }

        Ok(Topology {
            vertex_faces,
            vertex_neighbors,
            edges,
            edge_index,
        })
    }

    pub fn boundary_edge_count(&self) -> usize {
        self.edges.iter().filter(|e| e.is_boundary()).count()
    }

    /// A mesh is closed when every edge has exactly two adjacent faces.
    pub fn is_closed(&self) -> bool {
        !self.edges.is_empty() && self.boundary_edge_count() == 0
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Consistency check against the originating face list: every face is
    /// present in each of its corners' incidence lists and vice versa.
    pub fn consistent_with(&self, mesh: &TriMesh) -> bool {
        if self.vertex_faces.len() != mesh.vertex_count() {
            return false;
        }
        for (fi, f) in mesh.faces.iter().enumerate() {
            for &v in f {
                if !self.vertex_faces[v].contains(&fi) {
                    return false;
                }
            }
        }
        for (v, faces) in self.vertex_faces.iter().enumerate() {
            for &fi in faces {
                if !mesh.faces[fi].contains(&v) {
                    return false;
                }
            }
        }
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Vec3;

    fn quad() -> TriMesh {
        // two triangles sharing the diagonal (1,2)
        TriMesh::new(
            vec![
                Vec3::new(0.0, 0.0, 0.0),
                Vec3::new(1.0, 0.0, 0.0),
                Vec3::new(0.0, 1.0, 0.0),
                Vec3::new(1.0, 1.0, 0.0),
            ],
            vec![[0, 1, 2], [1, 3, 2]],
        )
        .unwrap()
    }

    #[test]
    fn edge_adjacency_and_boundary_flags() {
        let m = quad();
        let t = Topology::build(&m).unwrap();
        assert_eq!(t.edge_count(), 5);
        let shared = t.edge_index[&(1, 2)];
        assert_eq!(t.edges[shared].faces.len(), 2);
        assert!(!t.edges[shared].is_boundary());
        assert_eq!(t.boundary_edge_count(), 4);
        assert!(!t.is_closed());
    }

    #[test]
    fn incidence_round_trip() {
        let m = quad();
        let t = Topology::build(&m).unwrap();
        assert!(t.consistent_with(&m));
        assert_eq!(t.vertex_neighbors[1], vec![0, 2, 3]);
    }

    #[test]
    fn non_manifold_edge_rejected() {
        let m = TriMesh::new(
            vec![
                Vec3::new(0.0, 0.0, 0.0),
                Vec3::new(1.0, 0.0, 0.0),
                Vec3::new(0.0, 1.0, 0.0),
                Vec3::new(0.0, 0.0, 1.0),
                Vec3::new(0.0, -1.0, 0.0),
            ],
            vec![[0, 1, 2], [0, 1, 3], [0, 1, 4]],
        )
        .unwrap();
        assert!(matches!(
            Topology::build(&m),
            Err(Error::NonManifoldEdge { .. })
        ));
    }
}
