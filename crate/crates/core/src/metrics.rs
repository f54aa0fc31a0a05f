//! Seam-quality metrics: dihedral discontinuity across the fusion band,
//! cross-seam texel color difference, and sampled Hausdorff distance.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::geom::Vec3;
use crate::mesh::{face_normal, DistanceIndex, Topology, TriMesh};
use crate::tex_harmon::TextureAtlas;

/// Vertices within `eps` of any seam point (the geometric band rule; stable
/// across remeshing because it depends only on positions).
pub fn seam_band_vertices(mesh: &TriMesh, seam: &[Vec3], eps: f64) -> Vec<usize> {
    mesh.vertices
        .iter()
        .enumerate()
        .filter(|(_, v)| {
            seam.iter()
                .map(|u| (u - *v).norm())
                .fold(f64::INFINITY, f64::min)
                < eps
        })
        .map(|(i, _)| i)
        .collect()
}

/// Largest angle (radians) between the normals of the two faces adjacent to
/// any interior edge whose endpoints both lie in `band`.
pub fn max_seam_dihedral(mesh: &TriMesh, band: &[usize]) -> Result<f64> {
    let topo = Topology::build(mesh)?;
    let in_band = {
        let mut b = vec![false; mesh.vertex_count()];
        for &v in band {
            b[v] = true;
        }
        b
    };
    let mut worst: f64 = 0.0;
    for e in &topo.edges {
        if e.faces.len() != 2 || !in_band[e.a] || !in_band[e.b] {
            continue;
        }
        let (Ok(n0), Ok(n1)) = (face_normal(mesh, e.faces[0]), face_normal(mesh, e.faces[1]))
        else {
            continue;
        };
        let angle = n0.dot(&n1).clamp(-1.0, 1.0).acos();
        worst = worst.max(angle);
    }
    Ok(worst)
}

/// Mean absolute color difference across the label boundary: 4-adjacent
/// valid texel pairs where exactly one side is labeled new. `label` returns
/// `Some(true)` for new texels, `Some(false)` for preserved, `None` for
/// invalid.
pub fn cross_seam_color_difference(
    atlas: &TextureAtlas,
    label: &dyn Fn(u32, u32) -> Option<bool>,
) -> f64 {
    let mut total = 0.0;
    let mut count = 0usize;
    let mut pair = |ax: u32, ay: u32, bx: u32, by: u32| {
        if let (Some(la), Some(lb)) = (label(ax, ay), label(bx, by)) {
            if la != lb {
                let ta = atlas.texel(ax, ay);
                let tb = atlas.texel(bx, by);
                let d: f64 = ta
                    .iter()
                    .zip(tb)
                    .map(|(a, b)| (a - b).abs())
                    .sum::<f64>()
                    / ta.len() as f64;
                total += d;
                count += 1;
            }
        }
    };
    for y in 0..atlas.height {
        for x in 0..atlas.width {
            if x + 1 < atlas.width {
                pair(x, y, x + 1, y);
            }
            if y + 1 < atlas.height {
                pair(x, y, x, y + 1);
            }
        }
    }
    if count == 0 {
        0.0
    } else {
        total / count as f64
    }
}

/// Mean absolute color difference across the new/preserved seam measured on
/// the mesh: for every interior edge whose two faces carry different labels,
/// sample the atlas at each face's UV centroid and average the channel
/// differences. Requires per-corner UVs.
pub fn mesh_seam_color_difference(
    mesh: &TriMesh,
    atlas: &TextureAtlas,
    new_faces: &[usize],
) -> Result<f64> {
    let uvs = mesh
        .uvs
        .as_ref()
        .ok_or_else(|| crate::error::Error::Validation("mesh has no UVs".into()))?;
    let is_new = {
        let mut v = vec![false; mesh.face_count()];
        for &f in new_faces {
            v[f] = true;
        }
        v
    };
    let sample = |face: usize| -> Vec<f64> {
        let uv = (uvs[face][0] + uvs[face][1] + uvs[face][2]) / 3.0;
        let tx = ((uv.x * atlas.width as f64).floor()).clamp(0.0, (atlas.width - 1) as f64) as u32;
        let ty =
            ((uv.y * atlas.height as f64).floor()).clamp(0.0, (atlas.height - 1) as f64) as u32;
        atlas.texel(tx, ty).to_vec()
    };
    let topo = Topology::build(mesh)?;
    let mut total = 0.0;
    let mut count = 0usize;
    for e in &topo.edges {
        if e.faces.len() != 2 || is_new[e.faces[0]] == is_new[e.faces[1]] {
            continue;
        }
        let ca = sample(e.faces[0]);
        let cb = sample(e.faces[1]);
        total += ca
            .iter()
            .zip(&cb)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
            / ca.len() as f64;
        count += 1;
    }
    Ok(if count == 0 { 0.0 } else { total / count as f64 })
}

/// Symmetric Hausdorff distance estimated from `samples` area-weighted
/// random surface points per direction.
pub fn sampled_hausdorff(a: &TriMesh, b: &TriMesh, samples: usize, seed: u64) -> Result<f64> {
    let d_ab = one_sided(a, b, samples, seed)?;
    let d_ba = one_sided(b, a, samples, seed ^ 0x9E37)?;
    Ok(d_ab.max(d_ba))
}

fn one_sided(from: &TriMesh, to: &TriMesh, samples: usize, seed: u64) -> Result<f64> {
    let index = DistanceIndex::build(to)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // cumulative face areas for area-weighted sampling
    let mut cumulative = Vec::with_capacity(from.face_count());
    let mut total = 0.0;
    for fi in 0..from.face_count() {
        total += from.face_area(fi);
        cumulative.push(total);
    }
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let pick = rng.gen_range(0.0..total);
        let fi = cumulative.partition_point(|&c| c < pick).min(from.face_count() - 1);
        let [va, vb, vc] = from.face_vertices(fi);
        let (mut r1, r2): (f64, f64) = (rng.gen(), rng.gen());
        r1 = r1.sqrt();
        let p = va * (1.0 - r1) + vb * (r1 * (1.0 - r2)) + vc * (r1 * r2);
        worst = worst.max(index.unsigned_distance(to, &p).0);
    }
    Ok(worst)
}
