//! Harmonic (Tutte) parameterization of the newly synthesized region onto
//! unit circles, one disjoint circle per connected component.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::geom::Vec2;
use crate::linalg::{cg_solve, SystemBuilder};
use crate::mesh::TriMesh;

/// Spacing between component circles in the parameter plane.
pub const COMPONENT_PITCH: f64 = 3.0;

/// Per-vertex 2D coordinates of the region submesh; `None` for vertices not
/// on any region face.
#[derive(Debug, Clone)]
pub struct Parameterization {
    pub coords: Vec<Option<Vec2>>,
    pub component: Vec<Option<usize>>,
    pub component_count: usize,
}

/// Maps each connected component of the `region_faces` submesh to the unit
/// circle (boundary by arc length, interior harmonic with uniform weights).
/// Component k is centered at (k * COMPONENT_PITCH, 0). Every component must
/// be a topological disk.
pub fn parameterize_new_region(mesh: &TriMesh, region_faces: &[usize]) -> Result<Parameterization> {
    let n = mesh.vertex_count();
    let mut coords: Vec<Option<Vec2>> = vec![None; n];
    let mut component: Vec<Option<usize>> = vec![None; n];
    if region_faces.is_empty() {
        return Ok(Parameterization {
            coords,
            component,
            component_count: 0,
        });
    }
    for &f in region_faces {
        if f >= mesh.face_count() {
            return Err(Error::Validation(format!("region face {f} out of range")));
        }
    }

    // connected components over shared vertices (union-find)
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut Vec<usize>, i: usize) -> usize {
        if parent[i] != i {
            let r = find(parent, parent[i]);
            parent[i] = r;
        }
        parent[i]
    }
    for &f in region_faces {
        let [a, b, c] = mesh.faces[f];
        let ra = find(&mut parent, a);
        let rb = find(&mut parent, b);
        parent[rb] = ra;
        let rc = find(&mut parent, c);
        let ra = find(&mut parent, a);
        parent[rc] = ra;
    }
    let mut comp_of_root: HashMap<usize, usize> = HashMap::new();
    let mut comp_faces: Vec<Vec<usize>> = Vec::new();
    for &f in region_faces {
        let root = find(&mut parent, mesh.faces[f][0]);
        let c = match comp_of_root.get(&root) {
            Some(&c) => c,
            None => {
                comp_of_root.insert(root, comp_faces.len());
                comp_faces.push(Vec::new());
                comp_faces.len() - 1
            }
        };
        comp_faces[c].push(f);
    }

    for (ci, faces) in comp_faces.iter().enumerate() {
        embed_component(mesh, faces, ci, &mut coords, &mut component)?;
    }

    Ok(Parameterization {
        coords,
        component,
        component_count: comp_faces.len(),
    })
}

fn embed_component(
    mesh: &TriMesh,
    faces: &[usize],
    component_id: usize,
    coords: &mut [Option<Vec2>],
    component: &mut [Option<usize>],
) -> Result<()> {
    // local vertex indexing
    let mut local_of: HashMap<usize, usize> = HashMap::new();
    let mut global_of: Vec<usize> = Vec::new();
    for &f in faces {
        for &v in &mesh.faces[f] {
            local_of.entry(v).or_insert_with(|| {
                global_of.push(v);
                global_of.len() - 1
            });
        }
    }
    let nv = global_of.len();

    // edges with incident-face counts and the directed boundary successor
    let mut edge_count: HashMap<(usize, usize), usize> = HashMap::new();
    for &f in faces {
        let t = mesh.faces[f];
        for k in 0..3 {
            let (a, b) = (local_of[&t[k]], local_of[&t[(k + 1) % 3]]);
            *edge_count.entry((a.min(b), a.max(b))).or_insert(0) += 1;
        }
    }
    for (&(a, b), &c) in &edge_count {
        if c > 2 {
            return Err(Error::NonManifoldEdge {
                a: global_of[a],
                b: global_of[b],
                count: c,
            });
        }
    }
    let edge_total = edge_count.len();
    let boundary_edges: usize = edge_count.values().filter(|&&c| c == 1).count();

    // directed boundary edges follow the face orientation
    let mut next_on_boundary: HashMap<usize, usize> = HashMap::new();
    for &f in faces {
        let t = mesh.faces[f];
        for k in 0..3 {
            let (a, b) = (local_of[&t[k]], local_of[&t[(k + 1) % 3]]);
            if edge_count[&(a.min(b), a.max(b))] == 1 {
                next_on_boundary.insert(a, b);
            }
        }
    }

    // disk check: Euler characteristic 1 and exactly one boundary loop
    let euler = nv as i64 - edge_total as i64 + faces.len() as i64;
    let loops = count_boundary_loops(&next_on_boundary);
    if euler != 1 || loops != 1 || boundary_edges == 0 {
        let genus = (2 - loops as i64 - euler) / 2;
        return Err(Error::NonDiskTopology {
            component: component_id,
            boundary_loops: loops,
            genus,
        });
    }

    // boundary loop in face order, starting at the smallest global index
    let start = *next_on_boundary
        .keys()
        .min_by_key(|&&v| global_of[v])
        .expect("boundary exists");
    let mut loop_order = vec![start];
    let mut cur = next_on_boundary[&start];
    while cur != start {
        loop_order.push(cur);
        cur = next_on_boundary[&cur];
    }

    // arc-length positions on the unit circle
    let circle_center = Vec2::new(component_id as f64 * COMPONENT_PITCH, 0.0);
    let mut lengths = Vec::with_capacity(loop_order.len());
    let mut total = 0.0;
    for i in 0..loop_order.len() {
        let a = global_of[loop_order[i]];
        let b = global_of[loop_order[(i + 1) % loop_order.len()]];
        let len = (mesh.vertices[a] - mesh.vertices[b]).norm().max(1e-12);
        lengths.push(len);
        total += len;
    }
    let mut boundary_pos: HashMap<usize, Vec2> = HashMap::new();
    let mut acc = 0.0;
    for (i, &v) in loop_order.iter().enumerate() {
        let angle = 2.0 * std::f64::consts::PI * acc / total;
        boundary_pos.insert(v, circle_center + Vec2::new(angle.cos(), angle.sin()));
        acc += lengths[i];
    }

    // uniform-weight harmonic interior
    let mut neighbors: Vec<Vec<usize>> = vec![Vec::new(); nv];
    for &(a, b) in edge_count.keys() {
        neighbors[a].push(b);
        neighbors[b].push(a);
    }
    let mut builder = SystemBuilder::new(nv, 2);
    for v in 0..nv {
        builder.add(v, v, neighbors[v].len() as f64);
        for &u in &neighbors[v] {
            builder.add(v, u, -1.0);
        }
    }
    for (&v, pos) in &boundary_pos {
        builder.dirichlet(v, &[pos.x, pos.y]);
    }
    let system = builder.build()?;
    let (solution, reports) = cg_solve(&system, 1e-12, 20 * nv.max(10), false)?;
    if !reports.iter().all(|r| r.converged) {
        return Err(Error::Numeric(format!(
            "harmonic embedding did not converge (residuals {:?})",
            reports.iter().map(|r| r.final_residual).collect::<Vec<_>>()
        )));
    }

    let mut local_coords: Vec<Vec2> = (0..nv)
        .map(|v| Vec2::new(solution[0][v], solution[1][v]))
        .collect();

    // enforce positive 2D orientation: mirror if the embedding came out
    // clockwise (depends on which side of the surface faces the plane)
    let mut signed_area = 0.0;
    for &f in faces {
        let t = mesh.faces[f];
        let (a, b, c) = (
            local_coords[local_of[&t[0]]],
            local_coords[local_of[&t[1]]],
            local_coords[local_of[&t[2]]],
        );
        signed_area += (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
    }
    if signed_area < 0.0 {
        for p in &mut local_coords {
            p.y = 2.0 * circle_center.y - p.y;
        }
    }

    // no flipped triangles (Tutte guarantees injectivity on disks)
    for &f in faces {
        let t = mesh.faces[f];
        let (a, b, c) = (
            local_coords[local_of[&t[0]]],
            local_coords[local_of[&t[1]]],
            local_coords[local_of[&t[2]]],
        );
        let area2 = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
        if area2 <= 0.0 {
            return Err(Error::Numeric(format!(
                "flipped 2D triangle in component {component_id} (face {f})"
            )));
        }
    }

    for (v, &g) in global_of.iter().enumerate() {
        coords[g] = Some(local_coords[v]);
        component[g] = Some(component_id);
    }
    Ok(())
}

fn count_boundary_loops(next: &HashMap<usize, usize>) -> usize {
    let mut seen: std::collections::HashSet<usize> = std::collections::HashSet::new();
    let mut loops = 0;
    let mut starts: Vec<usize> = next.keys().copied().collect();
    starts.sort_unstable();
    for s in starts {
        if seen.contains(&s) {
            continue;
        }
        loops += 1;
        let mut cur = s;
        loop {
            seen.insert(cur);
            cur = next[&cur];
            if cur == s {
                break;
            }
            if seen.contains(&cur) {
                break; // malformed chain; counted conservatively
            }
        }
    }
    loops
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::geom::Vec3;

    #[test]
    fn single_triangle_all_on_circle() {
        let mesh = TriMesh::new(
            vec![
                Vec3::new(0.0, 0.0, 0.0),
                Vec3::new(1.0, 0.0, 0.0),
                Vec3::new(0.0, 1.0, 0.0),
            ],
            vec![[0, 1, 2]],
        )
        .unwrap();
        let p = parameterize_new_region(&mesh, &[0]).unwrap();
        assert_eq!(p.component_count, 1);
        for v in 0..3 {
            let c = p.coords[v].unwrap();
            assert!((c.norm() - 1.0).abs() < 1e-9, "{c:?}");
        }
    }

    #[test]
    fn fan_interior_vertex_lands_at_boundary_centroid() {
        // pentagon fan around one interior vertex
        let k = 5;
        let mut vertices = vec![Vec3::zeros()];
        for i in 0..k {
            let a = 2.0 * std::f64::consts::PI * (i as f64) / k as f64;
            vertices.push(Vec3::new(a.cos(), a.sin(), 0.0));
        }
        let faces: Vec<[usize; 3]> = (0..k)
            .map(|i| [0, 1 + i, 1 + (i + 1) % k])
            .collect();
        let mesh = TriMesh::new(vertices, faces).unwrap();
        let region: Vec<usize> = (0..k).collect();
        let p = parameterize_new_region(&mesh, &region).unwrap();
        let interior = p.coords[0].unwrap();
        let centroid = (1..=k)
            .map(|v| p.coords[v].unwrap())
            .fold(Vec2::zeros(), |a, b| a + b)
            / k as f64;
        assert!((interior - centroid).norm() < 1e-8);
    }

    #[test]
    fn disk_patch_has_no_flips() {
        // 200-face patch: a plane grid is a disk
        let mesh = fixtures::plane_grid(10);
        let region: Vec<usize> = (0..mesh.face_count()).collect();
        assert_eq!(region.len(), 200);
        let p = parameterize_new_region(&mesh, &region).unwrap();
        // flips are rejected internally; verify all faces positive again
        for f in &mesh.faces {
            let (a, b, c) = (
                p.coords[f[0]].unwrap(),
                p.coords[f[1]].unwrap(),
                p.coords[f[2]].unwrap(),
            );
            let area2 = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
            assert!(area2 > 0.0);
        }
    }

    #[test]
    fn closed_surface_is_not_a_disk() {
        let sphere = fixtures::icosphere(1);
        let region: Vec<usize> = (0..sphere.face_count()).collect();
        match parameterize_new_region(&sphere, &region) {
            Err(Error::NonDiskTopology { boundary_loops, .. }) => {
                assert_eq!(boundary_loops, 0)
            }
            other => panic!("expected topology error, got {other:?}"),
        }
    }

    #[test]
    fn two_components_on_disjoint_circles() {
        // two separate triangles
        let mesh = TriMesh::new(
            vec![
                Vec3::new(0.0, 0.0, 0.0),
                Vec3::new(1.0, 0.0, 0.0),
                Vec3::new(0.0, 1.0, 0.0),
                Vec3::new(5.0, 0.0, 0.0),
                Vec3::new(6.0, 0.0, 0.0),
                Vec3::new(5.0, 1.0, 0.0),
            ],
            vec![[0, 1, 2], [3, 4, 5]],
        )
        .unwrap();
        let p = parameterize_new_region(&mesh, &[0, 1]).unwrap();
        assert_eq!(p.component_count, 2);
        let c0 = p.component[0].unwrap();
        let c1 = p.component[3].unwrap();
        assert_ne!(c0, c1);
        let d = (p.coords[0].unwrap() - p.coords[3].unwrap()).norm();
        assert!(d > COMPONENT_PITCH - 2.0 - 1e-9);
    }
}
