//! Point-to-mesh distance queries with sign from the generalized winding
//! number.

use crate::error::{Error, Result};
use crate::geom::{closest_point_on_triangle, solid_angle, Aabb, Vec3};
use crate::mesh::{Topology, TriMesh};

const LEAF_SIZE: usize = 8;

#[derive(Debug, Clone)]
struct Node {
    bounds: Aabb,
    /// Leaf: range into `face_order`. Inner: child node indices.
    kind: NodeKind,
}

#[derive(Debug, Clone)]
enum NodeKind {
    Leaf { start: usize, end: usize },
    Inner { left: usize, right: usize },
}

/// Bounding-volume hierarchy over mesh faces for exact nearest-face queries,
/// plus the closedness flag governing sign validity.
#[derive(Debug, Clone)]
pub struct DistanceIndex {
    nodes: Vec<Node>,
    face_order: Vec<usize>,
    closed: bool,
}

/// Result of a signed-distance query. `signed` is false for open meshes,
/// in which case `distance` is the unsigned distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistanceResult {
    pub distance: f64,
    pub signed: bool,
}

impl DistanceIndex {
    pub fn build(mesh: &TriMesh) -> Result<Self> {
        if mesh.faces.is_empty() {
            return Err(Error::EmptyMesh);
        }
        let closed = Topology::build(mesh).map(|t| t.is_closed()).unwrap_or(false);

        let mut face_order: Vec<usize> = (0..mesh.face_count()).collect();
        let centroids: Vec<Vec3> = face_order.iter().map(|&f| mesh.face_centroid(f)).collect();
        let boxes: Vec<Aabb> = face_order
            .iter()
            .map(|&f| Aabb::from_points(mesh.face_vertices(f).iter()))
            .collect();

        let mut nodes = Vec::new();
        build_node(&mut nodes, &mut face_order, &centroids, &boxes, 0, mesh.face_count());
        Ok(DistanceIndex {
            nodes,
            face_order,
            closed,
        })
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    /// Exact unsigned distance and the nearest face index.
    pub fn unsigned_distance(&self, mesh: &TriMesh, point: &Vec3) -> (f64, usize) {
        let mut best = f64::INFINITY;
        let mut best_face = usize::MAX;
        self.query_node(mesh, point, 0, &mut best, &mut best_face);
        (best.sqrt(), best_face)
    }

    fn query_node(
        &self,
        mesh: &TriMesh,
        point: &Vec3,
        node: usize,
        best: &mut f64,
        best_face: &mut usize,
    ) {
        match &self.nodes[node].kind {
            NodeKind::Leaf { start, end } => {
                for &f in &self.face_order[*start..*end] {
                    let [a, b, c] = mesh.face_vertices(f);
                    let q = closest_point_on_triangle(point, &a, &b, &c);
                    let d2 = (q - point).norm_squared();
                    if d2 < *best || (d2 == *best && f < *best_face) {
                        *best = d2;
                        *best_face = f;
                    }
                }
            }
            NodeKind::Inner { left, right } => {
                let dl = self.nodes[*left].bounds.distance_sq(point);
                let dr = self.nodes[*right].bounds.distance_sq(point);
                let (first, second, d_first, d_second) = if dl <= dr {
                    (*left, *right, dl, dr)
                } else {
                    (*right, *left, dr, dl)
                };
                if d_first < *best {
                    self.query_node(mesh, point, first, best, best_face);
                }
                if d_second < *best {
                    self.query_node(mesh, point, second, best, best_face);
                }
            }
        }
    }
}

fn build_node(
    nodes: &mut Vec<Node>,
    order: &mut [usize],
    centroids: &[Vec3],
    boxes: &[Aabb],
    offset: usize,
    total: usize,
) -> usize {
    let _ = total;
    let mut bounds = Aabb::empty();
    for &f in order.iter() {
        bounds = bounds.merge(&boxes[f]);
    }
    let idx = nodes.len();
    if order.len() <= LEAF_SIZE {
        nodes.push(Node {
            bounds,
            kind: NodeKind::Leaf {
                start: offset,
                end: offset + order.len(),
            },
        });
        return idx;
    }

    // split at the median centroid along the widest axis
    let extent = bounds.max - bounds.min;
    let axis = if extent.x >= extent.y && extent.x >= extent.z {
        0
    } else if extent.y >= extent.z {
        1
    } else {
        2
    };
    let mid = order.len() / 2;
    order.select_nth_unstable_by(mid, |&a, &b| {
        centroids[a][axis]
            .partial_cmp(&centroids[b][axis])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });

    nodes.push(Node {
        bounds,
        kind: NodeKind::Leaf { start: 0, end: 0 }, // patched below
    });
    let (lo, hi) = order.split_at_mut(mid);
    let left = build_node(nodes, lo, centroids, boxes, offset, total);
    let right = build_node(nodes, hi, centroids, boxes, offset + mid, total);
    nodes[idx].kind = NodeKind::Inner { left, right };
    idx
}

/// Generalized winding number of the mesh surface around `point`.
///
/// Exact sum of per-face solid angles over 4*pi; per-vertex offsets and norms
/// are shared across faces.
pub fn winding_number(mesh: &TriMesh, point: &Vec3) -> f64 {
    let mut offsets = Vec::with_capacity(mesh.vertex_count());
    let mut norms = Vec::with_capacity(mesh.vertex_count());
    for v in &mesh.vertices {
        let r = v - point;
        norms.push(r.norm());
        offsets.push(r);
    }
    let mut total = 0.0;
    for f in &mesh.faces {
        total += solid_angle(
            &offsets[f[0]],
            &offsets[f[1]],
            &offsets[f[2]],
            norms[f[0]],
            norms[f[1]],
            norms[f[2]],
        );
    }
    total / (4.0 * std::f64::consts::PI)
}

/// Signed distance from `point` to the mesh surface: negative inside, with
/// inside decided by winding number > 0.5. Open meshes yield the unsigned
/// distance flagged `signed: false`.
pub fn signed_distance(mesh: &TriMesh, index: &DistanceIndex, point: &Vec3) -> Result<DistanceResult> {
    if mesh.faces.is_empty() {
        return Err(Error::EmptyMesh);
    }
    let (d, _) = index.unsigned_distance(mesh, point);
    if !index.is_closed() {
        return Ok(DistanceResult {
            distance: d,
            signed: false,
        });
    }
    let w = winding_number(mesh, point);
    Ok(DistanceResult {
        distance: if w > 0.5 { -d } else { d },
        signed: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn brute_force_distance(mesh: &TriMesh, p: &Vec3) -> f64 {
        mesh.faces
            .iter()
            .map(|f| {
                let q = closest_point_on_triangle(
                    p,
                    &mesh.vertices[f[0]],
                    &mesh.vertices[f[1]],
                    &mesh.vertices[f[2]],
                );
                (q - p).norm()
            })
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn bvh_matches_brute_force() {
        let sphere = fixtures::icosphere(2); // 320 faces... use subdiv 1 for <=200
        let small = fixtures::icosphere(1);
        assert!(small.face_count() <= 200);
        let index = DistanceIndex::build(&small).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let p = Vec3::new(
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
            );
            let (d, _) = index.unsigned_distance(&small, &p);
            let bf = brute_force_distance(&small, &p);
            assert!((d - bf).abs() <= 1e-12, "{d} vs {bf}");
        }
        // larger mesh sanity
        let index = DistanceIndex::build(&sphere).unwrap();
        let (d, _) = index.unsigned_distance(&sphere, &Vec3::new(3.0, 0.0, 0.0));
        assert!((d - 2.0).abs() < 2e-2);
    }

    #[test]
    fn icosphere_signed_distance_analytic() {
        let sphere = fixtures::icosphere(3);
        let index = DistanceIndex::build(&sphere).unwrap();
        let at_origin = signed_distance(&sphere, &index, &Vec3::zeros()).unwrap();
        assert!(at_origin.signed);
        assert!((at_origin.distance - (-1.0)).abs() < 5e-3, "{at_origin:?}");

        let outside = signed_distance(&sphere, &index, &Vec3::new(2.0, 0.0, 0.0)).unwrap();
        assert!((outside.distance - 1.0).abs() < 5e-3, "{outside:?}");

        // a vertex position is on the surface
        let v = sphere.vertices[17];
        let on = signed_distance(&sphere, &index, &v).unwrap();
        assert!(on.distance.abs() < 1e-9);
    }

    #[test]
    fn winding_sign_rejection_sampling() {
        let sphere = fixtures::icosphere(2);
        let index = DistanceIndex::build(&sphere).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut tested_in = 0;
        let mut tested_out = 0;
        while tested_in < 25 || tested_out < 25 {
            let p = Vec3::new(
                rng.gen_range(-1.5..1.5),
                rng.gen_range(-1.5..1.5),
                rng.gen_range(-1.5..1.5),
            );
            let r = p.norm();
            // keep clear of the surface so chord error cannot flip the class
            if r < 0.9 && tested_in < 25 {
                let d = signed_distance(&sphere, &index, &p).unwrap();
                assert!(d.distance < 0.0, "interior point {p:?} got {d:?}");
                tested_in += 1;
            } else if r > 1.1 && r < 1.5 && tested_out < 25 {
                let d = signed_distance(&sphere, &index, &p).unwrap();
                assert!(d.distance > 0.0, "exterior point {p:?} got {d:?}");
                tested_out += 1;
            }
        }
    }

    #[test]
    fn open_mesh_reports_unsigned() {
        let m = TriMesh::new(
            vec![
                Vec3::new(0.0, 0.0, 0.0),
                Vec3::new(1.0, 0.0, 0.0),
                Vec3::new(0.0, 1.0, 0.0),
            ],
            vec![[0, 1, 2]],
        )
        .unwrap();
        let index = DistanceIndex::build(&m).unwrap();
        let d = signed_distance(&m, &index, &Vec3::new(0.2, 0.2, -0.7)).unwrap();
        assert!(!d.signed);
        assert!((d.distance - 0.7).abs() < 1e-12);
    }

    #[test]
    fn empty_mesh_is_error() {
        let m = TriMesh::default();
        assert!(matches!(DistanceIndex::build(&m), Err(Error::EmptyMesh)));
    }
}
