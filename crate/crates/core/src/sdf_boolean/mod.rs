//! Boolean merge of meshes on a signed-distance grid, isosurface extraction,
//! and the epsilon-ball region extraction around the seam.

mod tables;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geom::{Aabb, Vec3};
use crate::mesh::{signed_distance, DistanceIndex, Topology, TriMesh};

/// Regular 3D grid of signed distances. `dims` counts grid points per axis;
/// point (i, j, k) sits at `origin + spacing * (i, j, k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SdfGrid {
    pub origin: Vec3,
    pub spacing: f64,
    pub dims: [usize; 3],
    /// Row-major: x fastest, then y, then z.
    pub values: Vec<f64>,
}

impl SdfGrid {
    pub fn new(origin: Vec3, spacing: f64, dims: [usize; 3], values: Vec<f64>) -> Result<Self> {
        if dims.iter().any(|&d| d < 2) {
            return Err(Error::Parameter(format!("grid dims must be >= 2, got {dims:?}")));
        }
        if spacing <= 0.0 {
            return Err(Error::Parameter(format!("spacing must be > 0, got {spacing}")));
        }
        if values.len() != dims[0] * dims[1] * dims[2] {
            return Err(Error::Parameter(format!(
                "value count {} does not match dims {dims:?}",
                values.len()
            )));
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(Error::Numeric("non-finite grid value".into()));
        }
        Ok(SdfGrid {
            origin,
            spacing,
            dims,
            values,
        })
    }

    /// Fills a grid by evaluating `f` at every grid point.
    pub fn from_fn(
        origin: Vec3,
        spacing: f64,
        dims: [usize; 3],
        f: impl Fn(&Vec3) -> f64 + Sync,
    ) -> Result<Self> {
        let [nx, ny, nz] = dims;
        let values: Vec<f64> = (0..nz)
            .into_par_iter()
            .flat_map_iter(|k| {
                let f = &f;
                (0..ny).flat_map(move |j| {
                    (0..nx).map(move |i| {
                        let p = origin
                            + Vec3::new(i as f64, j as f64, k as f64) * spacing;
                        f(&p)
                    })
                })
            })
            .collect();
        SdfGrid::new(origin, spacing, dims, values)
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (k * self.dims[1] + j) * self.dims[0] + i
    }

    #[inline]
    pub fn value(&self, i: usize, j: usize, k: usize) -> f64 {
        self.values[self.index(i, j, k)]
    }

    pub fn point(&self, i: usize, j: usize, k: usize) -> Vec3 {
        self.origin + Vec3::new(i as f64, j as f64, k as f64) * self.spacing
    }

    pub fn same_layout(&self, other: &SdfGrid) -> bool {
        self.dims == other.dims
            && (self.origin - other.origin).norm() <= 1e-12
            && (self.spacing - other.spacing).abs() <= 1e-12
    }

    /// Trilinear interpolation; queries outside the grid clamp to the border.
    pub fn sample(&self, p: &Vec3) -> f64 {
        let local = (p - self.origin) / self.spacing;
        let mut cell = [0usize; 3];
        let mut frac = [0.0f64; 3];
        for a in 0..3 {
            let max_cell = self.dims[a] - 2;
            let x = local[a].clamp(0.0, (self.dims[a] - 1) as f64);
            let c = (x.floor() as usize).min(max_cell);
            cell[a] = c;
            frac[a] = x - c as f64;
        }
        let (i, j, k) = (cell[0], cell[1], cell[2]);
        let (fx, fy, fz) = (frac[0], frac[1], frac[2]);
        let c000 = self.value(i, j, k);
        let c100 = self.value(i + 1, j, k);
        let c010 = self.value(i, j + 1, k);
        let c110 = self.value(i + 1, j + 1, k);
        let c001 = self.value(i, j, k + 1);
        let c101 = self.value(i + 1, j, k + 1);
        let c011 = self.value(i, j + 1, k + 1);
        let c111 = self.value(i + 1, j + 1, k + 1);
        let c00 = c000 + (c100 - c000) * fx;
        let c10 = c010 + (c110 - c010) * fx;
        let c01 = c001 + (c101 - c001) * fx;
        let c11 = c011 + (c111 - c011) * fx;
        let c0 = c00 + (c10 - c00) * fy;
        let c1 = c01 + (c11 - c01) * fy;
        c0 + (c1 - c0) * fz
    }
}

/// Boolean operation on signed-distance grids.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BooleanOp {
    Union,
    Difference,
}

impl std::str::FromStr for BooleanOp {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "union" => Ok(BooleanOp::Union),
            "difference" => Ok(BooleanOp::Difference),
            other => Err(Error::Parameter(format!(
                "unknown boolean op `{other}` (expected union|difference)"
            ))),
        }
    }
}

/// Vertex and face index sets around the fusion seam.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RegionSelection {
    /// Seam vertex positions, ordered by originating vertex index.
    pub seam_vertices: Vec<Vec3>,
    /// Vertices of the merged mesh within `eps0` of the seam (sorted).
    pub t_in: Vec<usize>,
    /// Vertices of the reference mesh within `eps0` of the seam (sorted).
    pub e_in: Vec<usize>,
    /// Vertices of the merged mesh within `eps1` of the seam (sorted).
    pub t_opt: Vec<usize>,
    pub eps0: f64,
    pub eps1: f64,
    /// Face partition of the merged mesh (filled by classification).
    pub new_faces: Vec<usize>,
    pub preserved_faces: Vec<usize>,
}

impl RegionSelection {
    /// Installs the new/preserved face partition, checking that it is total
    /// and disjoint over `face_count` faces.
    pub fn with_face_partition(
        mut self,
        new_faces: Vec<usize>,
        preserved_faces: Vec<usize>,
        face_count: usize,
    ) -> Result<Self> {
        let mut seen = vec![false; face_count];
        for &f in new_faces.iter().chain(&preserved_faces) {
            if f >= face_count {
                return Err(Error::Validation(format!("face {f} out of range")));
            }
            if seen[f] {
                return Err(Error::Validation(format!(
                    "face {f} appears in both partitions"
                )));
            }
            seen[f] = true;
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::Validation(
                "face partition does not cover all faces".into(),
            ));
        }
        self.new_faces = new_faces;
        self.preserved_faces = preserved_faces;
        Ok(self)
    }
}

/// Samples the exact mesh signed distance onto a grid covering `bounds` with
/// `resolution` cells along the longest axis. The mesh must be closed and
/// strictly inside `bounds` with at least a two-cell margin.
pub fn sample_sdf(
    mesh: &TriMesh,
    index: &DistanceIndex,
    bounds: &Aabb,
    resolution: usize,
) -> Result<SdfGrid> {
    if resolution < 2 {
        return Err(Error::Parameter(format!(
            "resolution must be >= 2 cells, got {resolution}"
        )));
    }
    if !index.is_closed() {
        let topo = Topology::build(mesh)?;
        return Err(Error::OpenMesh {
            boundary_edges: topo.boundary_edge_count(),
        });
    }
    let extent = bounds.max - bounds.min;
    let longest = extent.x.max(extent.y).max(extent.z);
    if longest <= 0.0 {
        return Err(Error::Parameter("empty bounds".into()));
    }
    let spacing = longest / resolution as f64;
    let dims = [
        (extent.x / spacing).ceil() as usize + 1,
        (extent.y / spacing).ceil() as usize + 1,
        (extent.z / spacing).ceil() as usize + 1,
    ];

    let mesh_bb = mesh.bounding_box();
    let margin = 2.0 * spacing;
    for a in 0..3 {
        if mesh_bb.min[a] - bounds.min[a] < margin - 1e-12
            || bounds.max[a] - mesh_bb.max[a] < margin - 1e-12
        {
            return Err(Error::Parameter(format!(
                "bounds must contain the mesh with a >= 2-cell margin (axis {a})"
            )));
        }
    }

    SdfGrid::from_fn(bounds.min, spacing, dims, |p| {
        signed_distance(mesh, index, p)
            .expect("non-empty closed mesh")
            .distance
    })
}

/// Pointwise Boolean of two grids sharing the same layout.
pub fn combine(a: &SdfGrid, b: &SdfGrid, op: BooleanOp) -> Result<SdfGrid> {
    if !a.same_layout(b) {
        return Err(Error::GridMismatch(format!(
            "dims {:?} vs {:?}, origin {:?} vs {:?}, spacing {} vs {}",
            a.dims, b.dims, a.origin, b.origin, a.spacing, b.spacing
        )));
    }
    let values = a
        .values
        .iter()
        .zip(&b.values)
        .map(|(&va, &vb)| match op {
            BooleanOp::Union => va.min(vb),
            BooleanOp::Difference => va.max(-vb),
        })
        .collect();
    SdfGrid::new(a.origin, a.spacing, a.dims, values)
}

/// Marching-cubes extraction result.
#[derive(Debug, Clone)]
pub struct McResult {
    pub mesh: TriMesh,
    /// Set when the zero level set touches the grid boundary, leaving the
    /// extracted surface open.
    pub open_boundary: bool,
}

/// Extracts the zero level set as a triangle mesh. Shared edge-crossing
/// vertices are welded, so the output is closed and consistently oriented
/// whenever the level set stays inside the grid.
pub fn marching_cubes(grid: &SdfGrid) -> Result<McResult> {
    use std::collections::HashMap;
    use tables::{CORNER_OFFSETS, EDGE_ENDPOINTS, TRIANGLE_TABLE};

    let [nx, ny, nz] = grid.dims;
    let mut vertices: Vec<Vec3> = Vec::new();
    let mut faces: Vec<[usize; 3]> = Vec::new();
    // grid edge (point index, axis) -> welded vertex id
    let mut edge_vertex: HashMap<(usize, usize, usize, usize), usize> = HashMap::new();

    for k in 0..nz - 1 {
        for j in 0..ny - 1 {
            for i in 0..nx - 1 {
                let mut corner_vals = [0.0f64; 8];
                let mut cube_index = 0usize;
                for (c, off) in CORNER_OFFSETS.iter().enumerate() {
                    let v = grid.value(i + off[0], j + off[1], k + off[2]);
                    corner_vals[c] = v;
                    if v < 0.0 {
                        cube_index |= 1 << c;
                    }
                }
                if cube_index == 0 || cube_index == 255 {
                    continue;
                }

                let mut cell_edge_vertex = [usize::MAX; 12];
                let row = &TRIANGLE_TABLE[cube_index];
                let mut t = 0;
                while row[t] >= 0 {
                    let tri = [row[t] as usize, row[t + 1] as usize, row[t + 2] as usize];
                    let mut ids = [0usize; 3];
                    for (slot, &e) in tri.iter().enumerate() {
                        if cell_edge_vertex[e] == usize::MAX {
                            let [c0, c1] = EDGE_ENDPOINTS[e];
                            let p0 = [
                                i + CORNER_OFFSETS[c0][0],
                                j + CORNER_OFFSETS[c0][1],
                                k + CORNER_OFFSETS[c0][2],
                            ];
                            let p1 = [
                                i + CORNER_OFFSETS[c1][0],
                                j + CORNER_OFFSETS[c1][1],
                                k + CORNER_OFFSETS[c1][2],
                            ];
                            // canonical key: lower endpoint + axis
                            let (lo, axis) = if p0 <= p1 {
                                (p0, axis_of(&p0, &p1))
                            } else {
                                (p1, axis_of(&p1, &p0))
                            };
                            let key = (lo[0], lo[1], lo[2], axis);
                            let id = *edge_vertex.entry(key).or_insert_with(|| {
                                let v0 = corner_vals[c0];
                                let v1 = corner_vals[c1];
                                let t = if (v1 - v0).abs() < 1e-300 {
                                    0.5
                                } else {
                                    v0 / (v0 - v1)
                                };
                                let a = grid.point(p0[0], p0[1], p0[2]);
                                let b = grid.point(p1[0], p1[1], p1[2]);
                                vertices.push(a + (b - a) * t);
                                vertices.len() - 1
                            });
                            cell_edge_vertex[e] = id;
                        }
                        ids[slot] = cell_edge_vertex[e];
                    }
                    // cocircular crossings can collapse a triangle onto a
                    // shared welded vertex; drop those
                    if ids[0] != ids[1] && ids[1] != ids[2] && ids[0] != ids[2] {
                        faces.push([ids[0], ids[2], ids[1]]);
                    }
                    t += 3;
                }
            }
        }
    }

    let mesh = TriMesh::new(vertices, faces)?;
    let open_boundary = if mesh.faces.is_empty() {
        false
    } else {
        match Topology::build(&mesh) {
            Ok(t) => !t.is_closed(),
            Err(_) => true,
        }
    };
    Ok(McResult {
        mesh,
        open_boundary,
    })
}

fn axis_of(lo: &[usize; 3], hi: &[usize; 3]) -> usize {
    if hi[0] > lo[0] {
        0
    } else if hi[1] > lo[1] {
        1
    } else {
        2
    }
}

/// Vertices of the merged mesh within `tau` of both input surfaces
/// (trilinear interpolation of the grids), ordered by vertex index.
pub fn extract_seam(a: &SdfGrid, b: &SdfGrid, merged: &TriMesh, tau: f64) -> Vec<Vec3> {
    merged
        .vertices
        .iter()
        .filter(|v| a.sample(v).abs() < tau && b.sample(v).abs() < tau)
        .copied()
        .collect()
}

/// Epsilon-ball region selection around the seam: `t_in`/`e_in` collect
/// vertices whose distance to the nearest seam vertex is below `eps0`;
/// `t_opt` uses the tighter `eps1` on the merged mesh.
pub fn extract_regions(
    mesh_t: &TriMesh,
    mesh_e: &TriMesh,
    seam: &[Vec3],
    eps0: f64,
    eps1: f64,
) -> Result<RegionSelection> {
    if eps1 >= eps0 {
        return Err(Error::Parameter(format!(
            "eps1 ({eps1}) must be < eps0 ({eps0})"
        )));
    }
    let min_dist = |v: &Vec3| -> f64 {
        seam.iter()
            .map(|u| (u - v).norm())
            .fold(f64::INFINITY, f64::min)
    };
    let dist_t: Vec<f64> = mesh_t.vertices.par_iter().map(&min_dist).collect();
    let dist_e: Vec<f64> = mesh_e.vertices.par_iter().map(&min_dist).collect();

    let collect = |d: &[f64], eps: f64| -> Vec<usize> {
        d.iter()
            .enumerate()
            .filter(|(_, &x)| x < eps)
            .map(|(i, _)| i)
            .collect()
    };
    Ok(RegionSelection {
        seam_vertices: seam.to_vec(),
        t_in: collect(&dist_t, eps0),
        e_in: collect(&dist_e, eps0),
        t_opt: collect(&dist_t, eps1),
        eps0,
        eps1,
        new_faces: Vec::new(),
        preserved_faces: Vec::new(),
    })
}

/// Splits merged faces into preserved (all three vertices within `delta` of
/// the original surface) and new (the rest).
pub fn classify_new_vs_preserved(
    merged: &TriMesh,
    original: &TriMesh,
    delta: f64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    let index = DistanceIndex::build(original)?;
    let near: Vec<bool> = merged
        .vertices
        .par_iter()
        .map(|v| index.unsigned_distance(original, v).0 <= delta)
        .collect();
    let mut new_faces = Vec::new();
    let mut preserved = Vec::new();
    for (fi, f) in merged.faces.iter().enumerate() {
        if f.iter().all(|&v| near[v]) {
            preserved.push(fi);
        } else {
            new_faces.push(fi);
        }
    }
    Ok((new_faces, preserved))
}
