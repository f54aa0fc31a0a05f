//! Geometric fusion: optimize the seam-band vertices of the merged mesh so
//! its rendered normals match Poisson-blended targets built from the
//! reference mesh, with local remeshing of the optimized region.

use std::collections::{HashMap, HashSet};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geom::{Vec2, Vec3};
use crate::mesh::{Topology, TriMesh, DEGENERATE_AREA};
use crate::poisson2d::{poisson_blend_opts, BlendOptions, PixelMask};
use crate::raster::{decode_normal, encode_normal_image, render, sample_viewpoints, Camera, NO_FACE};
use crate::sdf_boolean::RegionSelection;

/// Knobs for [`fuse_geometry`]. Lengths are in model units of the input
/// frame; the learning rate is relative to the bounding-box diagonal.
#[derive(Debug, Clone)]
pub struct FusionConfig {
    pub view_count: usize,
    /// Square render resolution per view.
    pub resolution: u32,
    pub iterations: usize,
    /// Step size as a fraction of the bounding-box diagonal.
    pub learning_rate: f64,
    pub momentum: f64,
    /// Weight of the uniform-Laplacian smoothness term.
    pub lambda_smooth: f64,
    /// Remesh the optimized region every this many iterations (0 disables).
    pub remesh_interval: usize,
    pub edge_min: f64,
    pub edge_max: f64,
    /// Recompute blended targets every this many iterations.
    pub reblend_interval: usize,
}

impl Default for FusionConfig {
    fn default() -> Self {
        FusionConfig {
            view_count: 24,
            resolution: 512,
            iterations: 1000,
            learning_rate: 1e-3,
            momentum: 0.9,
            lambda_smooth: 0.1,
            remesh_interval: 100,
            edge_min: 0.02,
            edge_max: 0.08,
            reblend_interval: 50,
        }
    }
}

impl FusionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.lambda_smooth < 0.0 {
            return Err(Error::Parameter("lambda_smooth must be >= 0".into()));
        }
        if self.edge_min >= self.edge_max {
            return Err(Error::Parameter(format!(
                "edge_min ({}) must be < edge_max ({})",
                self.edge_min, self.edge_max
            )));
        }
        if self.view_count == 0 || self.resolution < 8 {
            return Err(Error::Parameter("need >= 1 view at >= 8x8".into()));
        }
        if self.reblend_interval == 0 {
            return Err(Error::Parameter("reblend_interval must be >= 1".into()));
        }
        Ok(())
    }
}

/// Per-face aggregated normal targets: weighted sums of decoded blended
/// normals, where the weight is the number of contributing pixels.
#[derive(Debug, Clone)]
pub struct FaceTargets {
    pub sums: Vec<Vec3>,
    pub weights: Vec<f64>,
    /// Pixels contributed per view (provenance).
    pub view_pixels: Vec<usize>,
}

impl FaceTargets {
    pub fn zeros(face_count: usize) -> Self {
        FaceTargets {
            sums: vec![Vec3::zeros(); face_count],
            weights: vec![0.0; face_count],
            view_pixels: Vec::new(),
        }
    }

    /// Unit target direction for a face, when it accumulated any weight.
    pub fn direction(&self, face: usize) -> Option<Vec3> {
        if self.weights[face] <= 0.0 {
            return None;
        }
        let n = self.sums[face].norm();
        (n > 1e-12).then(|| self.sums[face] / n)
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// Faces with at least one vertex in the given set.
pub fn faces_touching(mesh: &TriMesh, vertices: &[usize]) -> HashSet<usize> {
    let set: HashSet<usize> = vertices.iter().copied().collect();
    mesh.faces
        .iter()
        .enumerate()
        .filter(|(_, f)| f.iter().any(|v| set.contains(v)))
        .map(|(fi, _)| fi)
        .collect()
}

/// Renders the merged and reference meshes from every camera, Poisson-blends
/// their encoded normal maps under the optimization-region mask, and
/// back-projects the decoded targets onto faces of the merged mesh.
///
/// An empty optimization region yields all-zero targets; a non-empty region
/// that is invisible from every view is an error.
pub fn compute_blended_targets(
    mesh_t: &TriMesh,
    mesh_e: &TriMesh,
    regions: &RegionSelection,
    cameras: &[Camera],
) -> Result<FaceTargets> {
    let mut targets = FaceTargets::zeros(mesh_t.face_count());
    if regions.t_opt.is_empty() {
        targets.view_pixels = vec![0; cameras.len()];
        return Ok(targets);
    }

    let t_in_faces = faces_touching(mesh_t, &regions.t_in);
    let t_opt_faces = faces_touching(mesh_t, &regions.t_opt);
    let e_in_faces = faces_touching(mesh_e, &regions.e_in);

    struct ViewContribution {
        pixels: Vec<(usize, Vec3)>,
    }

    let views: Vec<Result<ViewContribution>> = cameras
        .par_iter()
        .map(|cam| {
            let rt_t = render(mesh_t, cam, Some(&t_in_faces))?;
            let rt_e = render(mesh_e, cam, Some(&e_in_faces))?;

            let mut mask = PixelMask::empty(cam.width, cam.height);
            let mut any = false;
            for y in 0..cam.height {
                for x in 0..cam.width {
                    let o = rt_t.offset(x, y);
                    let fid = rt_t.face_id[o];
                    if fid != NO_FACE && t_opt_faces.contains(&fid) {
                        mask.set(x, y, true);
                        any = true;
                    }
                }
            }
            if !any {
                return Ok(ViewContribution { pixels: Vec::new() });
            }

            let img_t = encode_normal_image(&rt_t);
            let img_e = encode_normal_image(&rt_e);
            let opts = BlendOptions {
                erode_border: true,
                ..Default::default()
            };
            let blended = poisson_blend_opts(&img_t, &img_e, &mask, &opts)?;

            let mut pixels = Vec::new();
            for y in 0..cam.height {
                for x in 0..cam.width {
                    if !mask.get(x, y) {
                        continue;
                    }
                    let o = rt_t.offset(x, y);
                    let fid = rt_t.face_id[o];
                    if fid == NO_FACE {
                        continue;
                    }
                    if let Some(n) = decode_normal(&blended, x, y) {
                        pixels.push((fid, n));
                    }
                }
            }
            Ok(ViewContribution { pixels })
        })
        .collect();

    // fixed-order reduction keeps the accumulation deterministic
    for view in views {
        let view = view?;
        targets.view_pixels.push(view.pixels.len());
        for (fid, n) in view.pixels {
            targets.sums[fid] += n;
            targets.weights[fid] += 1.0;
        }
    }
    if targets.total_weight() == 0.0 {
        return Err(Error::EmptyTargets);
    }
    Ok(targets)
}

/// Weighted normal-matching loss L = sum_f w_f ||n_f - t_f||^2 and its
/// analytic gradient with respect to the free vertices. Returns the number
/// of degenerate weighted faces skipped.
pub fn normal_loss_and_grad(
    mesh: &TriMesh,
    targets: &FaceTargets,
    free: &[usize],
) -> (f64, Vec<Vec3>, usize) {
    let free_index: HashMap<usize, usize> =
        free.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let mut grad = vec![Vec3::zeros(); free.len()];
    let mut loss = 0.0;
    let mut skipped = 0;

    for (fi, f) in mesh.faces.iter().enumerate() {
        let w = targets.weights[fi];
        if w <= 0.0 {
            continue;
        }
        let Some(t) = targets.direction(fi) else {
            continue;
        };
        let [a, b, c] = mesh.face_vertices(fi);
        let e1 = b - a;
        let e2 = c - a;
        let cross = e1.cross(&e2);
        let len = cross.norm();
        if len * 0.5 <= DEGENERATE_AREA {
            skipped += 1;
            continue;
        }
        let n = cross / len;
        let diff = n - t;
        loss += w * diff.norm_squared();

        if f.iter().all(|v| !free_index.contains_key(v)) {
            continue;
        }
        // dL/d(cross) = 2 w (I - n n^T)(n - t) / |cross|
        let g = (diff - n * n.dot(&diff)) * (2.0 * w / len);
        let g1 = e2.cross(&g); // dL/d(e1)
        let g2 = g.cross(&e1); // dL/d(e2)
        if let Some(&i) = free_index.get(&f[1]) {
            grad[i] += g1;
        }
        if let Some(&i) = free_index.get(&f[2]) {
            grad[i] += g2;
        }
        if let Some(&i) = free_index.get(&f[0]) {
            grad[i] -= g1 + g2;
        }
    }
    (loss, grad, skipped)
}

/// Uniform-Laplacian smoothness L = sum_{v in free} ||v - mean(N(v))||^2
/// with the analytic gradient, including neighbor coupling between free
/// vertices. Isolated free vertices are excluded (counted).
pub fn smoothness_loss_and_grad(
    mesh: &TriMesh,
    topo: &Topology,
    free: &[usize],
) -> (f64, Vec<Vec3>, usize) {
    let free_index: HashMap<usize, usize> =
        free.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let mut grad = vec![Vec3::zeros(); free.len()];
    let mut loss = 0.0;
    let mut isolated = 0;

    for (i, &v) in free.iter().enumerate() {
        let neighbors = &topo.vertex_neighbors[v];
        if neighbors.is_empty() {
            isolated += 1;
            continue;
        }
        let inv_deg = 1.0 / neighbors.len() as f64;
        let mut mean = Vec3::zeros();
        for &u in neighbors {
            mean += mesh.vertices[u];
        }
        mean *= inv_deg;
        let d = mesh.vertices[v] - mean;
        loss += d.norm_squared();

        let g = d * 2.0;
        grad[i] += g;
        for &u in neighbors {
            if let Some(&ui) = free_index.get(&u) {
                grad[ui] -= g * inv_deg;
            }
        }
    }
    (loss, grad, isolated)
}

/// Result of a local remesh: new mesh, updated region vertex set, and a map
/// from old vertex indices to their surviving counterparts.
#[derive(Debug, Clone)]
pub struct RemeshOutcome {
    pub mesh: TriMesh,
    pub region: Vec<usize>,
    pub vertex_remap: Vec<Option<usize>>,
    pub splits: usize,
    pub collapses: usize,
}

struct Working {
    vertices: Vec<Vec3>,
    faces: Vec<[usize; 3]>,
    uvs: Option<Vec<[Vec2; 3]>>,
    colors: Option<Vec<[f64; 3]>>,
    in_region: Vec<bool>,
    /// original index -> current index (before compaction)
    remap: Vec<usize>,
}

/// Splits region edges longer than `edge_max` at midpoints and collapses
/// region edges shorter than `edge_min` when the collapse keeps the mesh
/// manifold and flips no incident face normal past 90 degrees. Unsafe
/// operations are skipped.
pub fn remesh_region(
    mesh: &TriMesh,
    region: &[usize],
    edge_min: f64,
    edge_max: f64,
) -> Result<RemeshOutcome> {
    if edge_min >= edge_max {
        return Err(Error::Parameter(format!(
            "edge_min ({edge_min}) must be < edge_max ({edge_max})"
        )));
    }
    for &v in region {
        if v >= mesh.vertex_count() {
            return Err(Error::Validation(format!("region vertex {v} out of range")));
        }
    }
    let mut in_region = vec![false; mesh.vertex_count()];
    for &v in region {
        in_region[v] = true;
    }
    let mut w = Working {
        vertices: mesh.vertices.clone(),
        faces: mesh.faces.clone(),
        uvs: mesh.uvs.clone(),
        colors: mesh.vertex_colors.clone(),
        in_region,
        remap: (0..mesh.vertex_count()).collect(),
    };

    let mut splits = 0;
    for _ in 0..10 {
        let n = split_pass(&mut w, edge_max);
        splits += n;
        if n == 0 {
            break;
        }
    }
    let mut collapses = 0;
    for _ in 0..10 {
        let n = collapse_pass(&mut w, edge_min, edge_max);
        collapses += n;
        if n == 0 {
            break;
        }
    }

    // compact: drop unreferenced vertices
    let mut used = vec![false; w.vertices.len()];
    for f in &w.faces {
        for &v in f {
            used[v] = true;
        }
    }
    let mut new_id = vec![usize::MAX; w.vertices.len()];
    let mut vertices = Vec::new();
    let mut colors = w.colors.as_ref().map(|_| Vec::new());
    for (i, &u) in used.iter().enumerate() {
        if u {
            new_id[i] = vertices.len();
            vertices.push(w.vertices[i]);
            if let (Some(out), Some(src)) = (colors.as_mut(), w.colors.as_ref()) {
                out.push(src[i]);
            }
        }
    }
    let faces: Vec<[usize; 3]> = w
        .faces
        .iter()
        .map(|f| [new_id[f[0]], new_id[f[1]], new_id[f[2]]])
        .collect();

    let mut out = TriMesh::new(vertices, faces)?;
    if let Some(uvs) = w.uvs {
        out = out.with_uvs(uvs)?;
    }
    if let Some(c) = colors {
        out = out.with_vertex_colors(c)?;
    }

    let vertex_remap: Vec<Option<usize>> = (0..mesh.vertex_count())
        .map(|i| {
            let cur = w.remap[i];
            (new_id[cur] != usize::MAX).then(|| new_id[cur])
        })
        .collect();
    let mut region_out: Vec<usize> = (0..w.vertices.len())
        .filter(|&i| w.in_region[i] && new_id[i] != usize::MAX)
        .map(|i| new_id[i])
        .collect();
    region_out.sort_unstable();
    region_out.dedup();

    Ok(RemeshOutcome {
        mesh: out,
        region: region_out,
        vertex_remap,
        splits,
        collapses,
    })
}

fn split_pass(w: &mut Working, edge_max: f64) -> usize {
    let max_sq = edge_max * edge_max;
    // long region edges -> midpoint vertex
    let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();
    let mut long_edges: Vec<(usize, usize)> = Vec::new();
    let mut seen: HashSet<(usize, usize)> = HashSet::new();
    for f in &w.faces {
        for c in 0..3 {
            let (a, b) = (f[c], f[(c + 1) % 3]);
            let key = (a.min(b), a.max(b));
            if !seen.insert(key) {
                continue;
            }
            if w.in_region[key.0]
                && w.in_region[key.1]
                && (w.vertices[key.0] - w.vertices[key.1]).norm_squared() > max_sq
            {
                long_edges.push(key);
            }
        }
    }
    if long_edges.is_empty() {
        return 0;
    }
    for &(a, b) in &long_edges {
        let mid = (w.vertices[a] + w.vertices[b]) * 0.5;
        let id = w.vertices.len();
        w.vertices.push(mid);
        w.in_region.push(true);
        if let Some(colors) = w.colors.as_mut() {
            let blend = [
                (colors[a][0] + colors[b][0]) * 0.5,
                (colors[a][1] + colors[b][1]) * 0.5,
                (colors[a][2] + colors[b][2]) * 0.5,
            ];
            colors.push(blend);
        }
        midpoints.insert((a, b), id);
    }

    // corner slots: 0..3 are face corners, 3 + k is the midpoint of edge k
    // (edge k joins corners k and (k + 1) % 3)
    const SUBDIV: [&[[usize; 3]]; 8] = [
        &[[0, 1, 2]],
        &[[0, 3, 2], [3, 1, 2]],
        &[[0, 1, 4], [0, 4, 2]],
        &[[0, 3, 2], [3, 4, 2], [3, 1, 4]],
        &[[0, 1, 5], [1, 2, 5]],
        &[[0, 3, 5], [3, 1, 5], [1, 2, 5]],
        &[[0, 1, 4], [0, 4, 5], [4, 2, 5]],
        &[[0, 3, 5], [3, 4, 5], [3, 1, 4], [5, 4, 2]],
    ];

    let old_faces = std::mem::take(&mut w.faces);
    let old_uvs = w.uvs.take();
    let mut new_faces = Vec::with_capacity(old_faces.len());
    let mut new_uvs = old_uvs.as_ref().map(|_| Vec::with_capacity(old_faces.len()));

    for (fi, f) in old_faces.iter().enumerate() {
        let mut mask = 0usize;
        let mut mids = [usize::MAX; 3];
        for c in 0..3 {
            let (a, b) = (f[c], f[(c + 1) % 3]);
            if let Some(&m) = midpoints.get(&(a.min(b), a.max(b))) {
                mask |= 1 << c;
                mids[c] = m;
            }
        }
        let slot_vertex = |s: usize| -> usize {
            if s < 3 {
                f[s]
            } else {
                mids[s - 3]
            }
        };
        for tri in SUBDIV[mask] {
            new_faces.push([
                slot_vertex(tri[0]),
                slot_vertex(tri[1]),
                slot_vertex(tri[2]),
            ]);
            if let (Some(out), Some(uvs)) = (new_uvs.as_mut(), old_uvs.as_ref()) {
                let corner_uv = |s: usize| -> Vec2 {
                    if s < 3 {
                        uvs[fi][s]
                    } else {
                        let k = s - 3;
                        (uvs[fi][k] + uvs[fi][(k + 1) % 3]) * 0.5
                    }
                };
                out.push([corner_uv(tri[0]), corner_uv(tri[1]), corner_uv(tri[2])]);
            }
        }
    }
    w.faces = new_faces;
    w.uvs = new_uvs;
    long_edges.len()
}

fn collapse_pass(w: &mut Working, edge_min: f64, edge_max: f64) -> usize {
    let min_sq = edge_min * edge_min;
    let max_sq = edge_max * edge_max;

    // adjacency snapshots
    let mut edge_faces: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
    let mut neighbors: HashMap<usize, HashSet<usize>> = HashMap::new();
    let mut vertex_faces: HashMap<usize, Vec<usize>> = HashMap::new();
    for (fi, f) in w.faces.iter().enumerate() {
        for c in 0..3 {
            let (a, b) = (f[c], f[(c + 1) % 3]);
            edge_faces.entry((a.min(b), a.max(b))).or_default().push(fi);
            neighbors.entry(a).or_default().insert(b);
            neighbors.entry(b).or_default().insert(a);
            vertex_faces.entry(a).or_default().push(fi);
        }
    }

    let mut candidates: Vec<((usize, usize), f64)> = edge_faces
        .keys()
        .filter(|&&(a, b)| {
            w.in_region[a]
                && w.in_region[b]
                && (w.vertices[a] - w.vertices[b]).norm_squared() < min_sq
        })
        .map(|&(a, b)| ((a, b), (w.vertices[a] - w.vertices[b]).norm_squared()))
        .collect();
    candidates.sort_by(|x, y| x.1.partial_cmp(&y.1).unwrap().then(x.0.cmp(&y.0)));

    let mut taken: HashSet<usize> = HashSet::new();
    let mut collapses: Vec<(usize, usize)> = Vec::new();
    'next: for ((a, b), _) in candidates {
        if taken.contains(&a) || taken.contains(&b) {
            continue;
        }
        let incident = edge_faces[&(a, b)].len();
        let common: Vec<usize> = neighbors[&a]
            .intersection(&neighbors[&b])
            .copied()
            .collect();
        // link condition: interior edge needs exactly 2 shared neighbors,
        // boundary edge exactly 1
        let expected = if incident == 2 { 2 } else { 1 };
        if common.len() != expected {
            continue;
        }
        let mid = (w.vertices[a] + w.vertices[b]) * 0.5;
        // survivors must not flip, degenerate, or grow past edge_max
        let mut surviving = vertex_faces.get(&a).cloned().unwrap_or_default();
        surviving.extend(vertex_faces.get(&b).cloned().unwrap_or_default());
        for fi in surviving {
            let f = w.faces[fi];
            if f.contains(&a) && f.contains(&b) {
                continue; // face dies with the edge
            }
            let before = triangle_normal(&w.vertices[f[0]], &w.vertices[f[1]], &w.vertices[f[2]]);
            let pos = |v: usize| -> Vec3 {
                if v == a || v == b {
                    mid
                } else {
                    w.vertices[v]
                }
            };
            let (p0, p1, p2) = (pos(f[0]), pos(f[1]), pos(f[2]));
            let after_cross = (p1 - p0).cross(&(p2 - p0));
            if after_cross.norm() * 0.5 <= DEGENERATE_AREA {
                continue 'next;
            }
            for c in 0..3 {
                let (u, v) = (f[c], f[(c + 1) % 3]);
                let (qu, qv) = (pos(u), pos(v));
                if (qu - qv).norm_squared() > max_sq {
                    continue 'next;
                }
            }
            if let (Some(nb), na) = (before, after_cross.normalize()) {
                if nb.dot(&na) <= 0.0 {
                    continue 'next;
                }
            }
        }
        taken.insert(a);
        taken.insert(b);
        collapses.push((a, b));
    }

    if collapses.is_empty() {
        return 0;
    }

    let mut alias: Vec<usize> = (0..w.vertices.len()).collect();
    for &(a, b) in &collapses {
        let mid = (w.vertices[a] + w.vertices[b]) * 0.5;
        w.vertices[a] = mid;
        if let Some(colors) = w.colors.as_mut() {
            for c in 0..3 {
                colors[a][c] = (colors[a][c] + colors[b][c]) * 0.5;
            }
        }
        alias[b] = a;
    }
    for r in w.remap.iter_mut() {
        *r = alias[*r];
    }

    let old_faces = std::mem::take(&mut w.faces);
    let old_uvs = w.uvs.take();
    let mut new_faces = Vec::with_capacity(old_faces.len());
    let mut new_uvs = old_uvs.as_ref().map(|_| Vec::new());
    for (fi, f) in old_faces.iter().enumerate() {
        let g = [alias[f[0]], alias[f[1]], alias[f[2]]];
        if g[0] == g[1] || g[1] == g[2] || g[0] == g[2] {
            continue;
        }
        new_faces.push(g);
        if let (Some(out), Some(uvs)) = (new_uvs.as_mut(), old_uvs.as_ref()) {
            out.push(uvs[fi]);
        }
    }
    w.faces = new_faces;
    w.uvs = new_uvs;
    collapses.len()
}

fn triangle_normal(a: &Vec3, b: &Vec3, c: &Vec3) -> Option<Vec3> {
    let cross = (b - a).cross(&(c - a));
    let n = cross.norm();
    (n * 0.5 > DEGENERATE_AREA).then(|| cross / n)
}

/// Rigid alignment of `source` onto `target` by point-to-point iterative
/// closest point (Kabsch solve per sweep). Optional preprocessing for a
/// reference mesh that arrives slightly off the merged frame; both meshes
/// are expected to be roughly overlapping already.
pub fn rigid_align(source: &TriMesh, target: &TriMesh, sweeps: usize) -> Result<TriMesh> {
    use nalgebra::Matrix3;

    if source.vertices.is_empty() || target.faces.is_empty() {
        return Ok(source.clone());
    }
    let index = crate::mesh::DistanceIndex::build(target)?;
    let mut moved = source.clone();
    for _ in 0..sweeps {
        // correspondences: each source vertex to its closest surface point
        let pairs: Vec<(Vec3, Vec3)> = moved
            .vertices
            .par_iter()
            .map(|v| {
                let (_, face) = index.unsigned_distance(target, v);
                let [a, b, c] = target.face_vertices(face);
                (*v, crate::geom::closest_point_on_triangle(v, &a, &b, &c))
            })
            .collect();
        let n = pairs.len() as f64;
        let centroid_s: Vec3 = pairs.iter().map(|(s, _)| s).sum::<Vec3>() / n;
        let centroid_t: Vec3 = pairs.iter().map(|(_, t)| t).sum::<Vec3>() / n;
        let mut cov = Matrix3::<f64>::zeros();
        for (s, t) in &pairs {
            cov += (t - centroid_t) * (s - centroid_s).transpose();
        }
        let svd = cov.svd(true, true);
        let (u, v_t) = (svd.u.unwrap(), svd.v_t.unwrap());
        let d = (u * v_t).determinant().signum();
        let flip = Matrix3::from_diagonal(&Vec3::new(1.0, 1.0, d));
        let rotation = u * flip * v_t;
        let translation = centroid_t - rotation * centroid_s;

        let mut largest_step = 0.0f64;
        for v in &mut moved.vertices {
            let next = rotation * *v + translation;
            largest_step = largest_step.max((next - *v).norm());
            *v = next;
        }
        if largest_step < 1e-12 {
            break;
        }
    }
    Ok(moved)
}

/// Output of the fusion loop.
#[derive(Debug, Clone)]
pub struct FusionResult {
    pub mesh: TriMesh,
    /// Total loss per iteration.
    pub loss_trace: Vec<f64>,
    /// Original merged-mesh vertex index -> final index.
    pub vertex_remap: Vec<Option<usize>>,
    /// Final optimized-region vertex indices (on the output mesh).
    pub region: Vec<usize>,
    pub degenerate_skips: usize,
}

/// Gradient descent with momentum over the optimization-region vertices:
/// rendered flat normals are pulled toward the Poisson-blended targets,
/// regularized by the smoothness term. Targets are refreshed every
/// `reblend_interval` iterations from freshly sampled viewpoints, and the
/// region is remeshed every `remesh_interval`. Vertices outside the region
/// never move.
pub fn fuse_geometry(
    mesh_t: &TriMesh,
    mesh_e: &TriMesh,
    regions: &RegionSelection,
    config: &FusionConfig,
    seed: u64,
) -> Result<FusionResult> {
    config.validate()?;
    mesh_t.validate()?;
    mesh_e.validate()?;

    let identity_remap: Vec<Option<usize>> = (0..mesh_t.vertex_count()).map(Some).collect();
    if config.iterations == 0 || regions.t_opt.is_empty() {
        return Ok(FusionResult {
            mesh: mesh_t.clone(),
            loss_trace: Vec::new(),
            vertex_remap: identity_remap,
            region: regions.t_opt.clone(),
            degenerate_skips: 0,
        });
    }

    let bbox = mesh_t.bounding_box();
    let diag = bbox.diagonal();
    let center = bbox.center();
    let radius = 2.5 * diag * 0.5;
    let lr_abs = config.learning_rate * diag;

    let mut mesh = mesh_t.clone();
    let mut t_opt = regions.t_opt.clone();
    let mut t_in = regions.t_in.clone();
    let mut remap = identity_remap;
    let mut topo = Topology::build(&mesh)?;

    let mut velocity: Vec<Vec3> = vec![Vec3::zeros(); t_opt.len()];
    let mut targets: Option<FaceTargets> = None;
    let mut blend_round = 0u64;
    let mut trace = Vec::with_capacity(config.iterations);
    let mut degenerate_skips = 0usize;

    for it in 0..config.iterations {
        if config.remesh_interval > 0 && it > 0 && it % config.remesh_interval == 0 {
            let outcome = remesh_region(&mesh, &t_opt, config.edge_min, config.edge_max)?;
            if outcome.splits + outcome.collapses > 0 {
                t_in = t_in
                    .iter()
                    .filter_map(|&v| outcome.vertex_remap[v])
                    .chain(outcome.region.iter().copied())
                    .collect();
                t_in.sort_unstable();
                t_in.dedup();
                t_opt = outcome.region.clone();
                remap = remap
                    .iter()
                    .map(|m| m.and_then(|v| outcome.vertex_remap[v]))
                    .collect();
                mesh = outcome.mesh;
                topo = Topology::build(&mesh)?;
                velocity = vec![Vec3::zeros(); t_opt.len()];
                targets = None; // face ids changed
            }
        }

        if targets.is_none() || it % config.reblend_interval == 0 {
            let cameras: Vec<Camera> =
                sample_viewpoints(config.view_count, center, radius, seed ^ blend_round)
                    .into_iter()
                    .map(|c| c.with_resolution(config.resolution, config.resolution))
                    .collect();
            blend_round += 1;
            let current_regions = RegionSelection {
                t_in: t_in.clone(),
                t_opt: t_opt.clone(),
                ..regions.clone()
            };
            targets = Some(compute_blended_targets(
                &mesh,
                mesh_e,
                &current_regions,
                &cameras,
            )?);
        }
        let t = targets.as_ref().unwrap();

        let (l_n, g_n, skipped) = normal_loss_and_grad(&mesh, t, &t_opt);
        degenerate_skips += skipped;
        let (l_s, g_s, _) = smoothness_loss_and_grad(&mesh, &topo, &t_opt);
        let weight = t.total_weight().max(1.0);
        let loss = l_n / weight + config.lambda_smooth * l_s;
        if !loss.is_finite() {
            return Err(Error::Numeric(format!(
                "loss became non-finite at iteration {it} (normal {l_n}, smooth {l_s})"
            )));
        }
        trace.push(loss);

        let decay = 0.5 * (1.0 + (std::f64::consts::PI * it as f64 / config.iterations as f64).cos());
        let lr = lr_abs * decay;
        for (i, &v) in t_opt.iter().enumerate() {
            let g = g_n[i] / weight + g_s[i] * config.lambda_smooth;
            velocity[i] = velocity[i] * config.momentum - g * lr;
            mesh.vertices[v] += velocity[i];
            if !mesh.vertices[v].iter().all(|c| c.is_finite()) {
                return Err(Error::Numeric(format!(
                    "vertex {v} became non-finite at iteration {it}"
                )));
            }
        }
    }

    Ok(FusionResult {
        mesh,
        loss_trace: trace,
        vertex_remap: remap,
        region: t_opt,
        degenerate_skips,
    })
}
