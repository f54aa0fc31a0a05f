//! Poisson texture harmonization: texel-to-surface correspondence, a dense
//! 2D texel mesh over the newly synthesized region, the mesh Poisson solve,
//! and baking the harmonized colors back into the atlas.

mod atlas;
pub mod delaunay;
pub mod operators;
pub mod param;

pub use atlas::TextureAtlas;
pub use operators::{harmonize, Operators};
pub use param::{parameterize_new_region, Parameterization};

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::geom::{Vec2, Vec3};
use crate::mesh::TriMesh;
use crate::sdf_boolean::RegionSelection;

/// Whether a texel's owning face is newly synthesized or preserved.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegionLabel {
    New,
    Preserved,
}

/// A valid texel's link to the surface.
#[derive(Debug, Clone)]
pub struct TexelEntry {
    pub face: usize,
    pub bary: [f64; 3],
    pub point: Vec3,
    pub label: RegionLabel,
}

/// Per-texel surface correspondence; `None` for texels outside every chart.
#[derive(Debug, Clone)]
pub struct TexelCorrespondence {
    pub width: u32,
    pub height: u32,
    pub entries: Vec<Option<TexelEntry>>,
}

impl TexelCorrespondence {
    #[inline]
    pub fn get(&self, x: u32, y: u32) -> Option<&TexelEntry> {
        self.entries[(y * self.width + x) as usize].as_ref()
    }

    pub fn label(&self, x: u32, y: u32) -> Option<RegionLabel> {
        self.get(x, y).map(|e| e.label)
    }
}

/// Maps every texel whose center lies inside a face's UV triangle to that
/// face with barycentric coordinates and the reproduced 3D point. Texels
/// strictly interior to two or more UV triangles mean overlapping charts
/// and are an error; centers exactly on a shared chart edge go to the lower
/// face index.
pub fn build_correspondence(
    mesh: &TriMesh,
    atlas: &TextureAtlas,
    regions: &RegionSelection,
) -> Result<TexelCorrespondence> {
    let uvs = mesh
        .uvs
        .as_ref()
        .ok_or_else(|| Error::Validation("mesh has no UVs".into()))?;
    if atlas.width == 0 || atlas.height == 0 {
        return Err(Error::Parameter("empty atlas".into()));
    }
    let new_set: std::collections::HashSet<usize> = regions.new_faces.iter().copied().collect();

    let w = atlas.width;
    let h = atlas.height;
    let mut entries: Vec<Option<TexelEntry>> = vec![None; (w * h) as usize];
    // strictly-interior claims per texel, to detect genuine chart overlap
    let mut strict_claims: Vec<u8> = vec![0; (w * h) as usize];
    let mut first_overlap: Option<(u32, u32)> = None;
    let mut overlap_count = 0usize;

    const EDGE_TOL: f64 = 1e-9;
    let texel_center = |tx: u32, ty: u32| -> Vec2 {
        Vec2::new((tx as f64 + 0.5) / w as f64, (ty as f64 + 0.5) / h as f64)
    };

    for (fi, corner_uv) in uvs.iter().enumerate() {
        let [a, b, c] = corner_uv;
        let det = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
        if det.abs() < 1e-14 {
            continue; // zero-area UV triangle covers nothing
        }
        let min_u = a.x.min(b.x).min(c.x);
        let max_u = a.x.max(b.x).max(c.x);
        let min_v = a.y.min(b.y).min(c.y);
        let max_v = a.y.max(b.y).max(c.y);
        let tx0 = ((min_u * w as f64) - 1.0).floor().max(0.0) as u32;
        let tx1 = (((max_u * w as f64) + 1.0).ceil()).min(w as f64) as u32;
        let ty0 = ((min_v * h as f64) - 1.0).floor().max(0.0) as u32;
        let ty1 = (((max_v * h as f64) + 1.0).ceil()).min(h as f64) as u32;

        for ty in ty0..ty1 {
            for tx in tx0..tx1 {
                let p = texel_center(tx, ty);
                let l1 = ((p.x - a.x) * (c.y - a.y) - (p.y - a.y) * (c.x - a.x)) / det;
                let l2 = ((b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x)) / det;
                let l0 = 1.0 - l1 - l2;
                if l0 < -EDGE_TOL || l1 < -EDGE_TOL || l2 < -EDGE_TOL {
                    continue;
                }
                let strict = l0 > EDGE_TOL && l1 > EDGE_TOL && l2 > EDGE_TOL;
                let o = (ty * w + tx) as usize;
                if strict {
                    strict_claims[o] += 1;
                    if strict_claims[o] == 2 {
                        overlap_count += 1;
                        first_overlap.get_or_insert((tx, ty));
                    }
                }
                if entries[o].is_none() {
                    let verts = mesh.face_vertices(fi);
                    let point = verts[0] * l0 + verts[1] * l1 + verts[2] * l2;
                    entries[o] = Some(TexelEntry {
                        face: fi,
                        bary: [l0, l1, l2],
                        point,
                        label: if new_set.contains(&fi) {
                            RegionLabel::New
                        } else {
                            RegionLabel::Preserved
                        },
                    });
                }
            }
        }
    }

    if overlap_count > 0 {
        return Err(Error::OverlappingCharts {
            count: overlap_count,
            first: first_overlap.unwrap(),
        });
    }
    Ok(TexelCorrespondence {
        width: w,
        height: h,
        entries,
    })
}

/// Dense 2D mesh over the new-region texels: one vertex per texel at its
/// parameter-space position, Delaunay triangles per connected component,
/// colors initialized from the atlas.
#[derive(Debug, Clone)]
pub struct TexelMesh {
    pub positions: Vec<Vec2>,
    /// CCW triangles; components never share triangles.
    pub triangles: Vec<[usize; 3]>,
    /// Per-vertex colors (atlas channel count).
    pub colors: Vec<Vec<f64>>,
    /// Boundary flag: outer triangulation boundary, or 4-adjacent in the
    /// atlas to a preserved texel.
    pub boundary: Vec<bool>,
    /// Originating texel per vertex.
    pub texel: Vec<(u32, u32)>,
    /// Parameterization component per vertex.
    pub component: Vec<usize>,
    /// Components dropped for having fewer than 3 texels (untriangulable);
    /// their texels keep the incoming colors.
    pub skipped_components: usize,
}

impl TexelMesh {
    pub fn vertex_count(&self) -> usize {
        self.positions.len()
    }
}

pub fn build_texel_mesh(
    corr: &TexelCorrespondence,
    param: &Parameterization,
    mesh: &TriMesh,
    atlas: &TextureAtlas,
) -> Result<TexelMesh> {
    // gather new texels per component
    let mut per_component: Vec<Vec<(u32, u32)>> = vec![Vec::new(); param.component_count];
    for ty in 0..corr.height {
        for tx in 0..corr.width {
            let Some(entry) = corr.get(tx, ty) else {
                continue;
            };
            if entry.label != RegionLabel::New {
                continue;
            }
            let f = mesh.faces[entry.face];
            let comp = param.component[f[0]].ok_or_else(|| {
                Error::Validation(format!("face {} not parameterized", entry.face))
            })?;
            per_component[comp].push((tx, ty));
        }
    }
    let total: usize = per_component.iter().map(Vec::len).sum();
    if total < 3 {
        return Err(Error::DegenerateInput(format!(
            "need at least 3 new-region texels, found {total}"
        )));
    }

    let mut positions = Vec::with_capacity(total);
    let mut colors = Vec::with_capacity(total);
    let mut texel = Vec::with_capacity(total);
    let mut component = Vec::with_capacity(total);
    let mut triangles: Vec<[usize; 3]> = Vec::new();
    let mut boundary = Vec::with_capacity(total);

    let mut skipped_components = 0usize;
    for (ci, texels) in per_component.iter().enumerate() {
        if texels.is_empty() {
            continue;
        }
        if texels.len() < 3 {
            skipped_components += 1;
            continue;
        }
        let base = positions.len();
        let mut local_pts = Vec::with_capacity(texels.len());
        for &(tx, ty) in texels {
            let entry = corr.get(tx, ty).expect("collected above");
            let f = mesh.faces[entry.face];
            let p = param.coords[f[0]].expect("parameterized") * entry.bary[0]
                + param.coords[f[1]].expect("parameterized") * entry.bary[1]
                + param.coords[f[2]].expect("parameterized") * entry.bary[2];
            local_pts.push(p);
            positions.push(p);
            colors.push(atlas.texel(tx, ty).to_vec());
            texel.push((tx, ty));
            component.push(ci);
        }
        let local_tris = delaunay::triangulate(&local_pts)?;

        // outer boundary of this component's triangulation
        let mut edge_count: HashMap<(usize, usize), usize> = HashMap::new();
        for t in &local_tris {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                *edge_count.entry((a.min(b), a.max(b))).or_insert(0) += 1;
            }
        }
        let mut on_outer = vec![false; texels.len()];
        for (&(a, b), &count) in &edge_count {
            if count == 1 {
                on_outer[a] = true;
                on_outer[b] = true;
            }
        }
        for (li, &(tx, ty)) in texels.iter().enumerate() {
            let adjacent_preserved = [
                (tx.wrapping_sub(1), ty),
                (tx + 1, ty),
                (tx, ty.wrapping_sub(1)),
                (tx, ty + 1),
            ]
            .into_iter()
            .filter(|&(x, y)| x < corr.width && y < corr.height)
            .any(|(x, y)| corr.label(x, y) == Some(RegionLabel::Preserved));
            boundary.push(on_outer[li] || adjacent_preserved);
        }
        for t in local_tris {
            triangles.push([base + t[0], base + t[1], base + t[2]]);
        }
    }

    if positions.len() < 3 {
        return Err(Error::DegenerateInput(
            "no triangulable new-region component".into(),
        ));
    }
    Ok(TexelMesh {
        positions,
        triangles,
        colors,
        boundary,
        texel,
        component,
        skipped_components,
    })
}

/// Writes per-vertex colors back to their originating texels. Preserved and
/// invalid texels are untouched, bit for bit.
pub fn bake_back(
    tm: &TexelMesh,
    colors: &[Vec<f64>],
    atlas: &TextureAtlas,
) -> Result<TextureAtlas> {
    if colors.len() != tm.vertex_count() {
        return Err(Error::DimensionMismatch(format!(
            "{} colors for {} vertices",
            colors.len(),
            tm.vertex_count()
        )));
    }
    let mut out = atlas.clone();
    for (v, &(tx, ty)) in tm.texel.iter().enumerate() {
        if colors[v].len() != atlas.channels {
            return Err(Error::DimensionMismatch(format!(
                "vertex {v} color has {} channels, atlas has {}",
                colors[v].len(),
                atlas.channels
            )));
        }
        if colors[v].iter().any(|c| !c.is_finite()) {
            return Err(Error::Numeric(format!("non-finite color at vertex {v}")));
        }
        out.set_texel(tx, ty, &colors[v]);
    }
    Ok(out)
}

/// Dirichlet colors for the texel-mesh boundary: the average of preserved
/// texels in the 4-neighborhood when any exist, otherwise the vertex's own
/// guidance color (which pins outer-boundary vertices of charts that have
/// no preserved neighbors in the atlas).
pub fn default_boundary_colors(
    tm: &TexelMesh,
    corr: &TexelCorrespondence,
    atlas: &TextureAtlas,
) -> Vec<(usize, Vec<f64>)> {
    let mut out = Vec::new();
    for v in 0..tm.vertex_count() {
        if !tm.boundary[v] {
            continue;
        }
        let (tx, ty) = tm.texel[v];
        let mut acc = vec![0.0; atlas.channels];
        let mut count = 0usize;
        for (x, y) in [
            (tx.wrapping_sub(1), ty),
            (tx + 1, ty),
            (tx, ty.wrapping_sub(1)),
            (tx, ty + 1),
        ] {
            if x < corr.width && y < corr.height && corr.label(x, y) == Some(RegionLabel::Preserved)
            {
                for (ch, a) in acc.iter_mut().enumerate() {
                    *a += atlas.get(x, y, ch);
                }
                count += 1;
            }
        }
        let color = if count > 0 {
            acc.iter().map(|a| a / count as f64).collect()
        } else {
            tm.colors[v].clone()
        };
        out.push((v, color));
    }
    out
}

/// End-to-end harmonization of the new-region texels of `atlas` against the
/// preserved surroundings: correspondence, parameterization, texel mesh,
/// Poisson solve, bake.
pub fn harmonize_atlas(
    mesh: &TriMesh,
    atlas: &TextureAtlas,
    regions: &RegionSelection,
) -> Result<TextureAtlas> {
    let corr = build_correspondence(mesh, atlas, regions)?;
    let param = parameterize_new_region(mesh, &regions.new_faces)?;
    let tm = build_texel_mesh(&corr, &param, mesh, atlas)?;
    let boundary = default_boundary_colors(&tm, &corr, atlas);
    let solved = harmonize(&tm, &tm.colors, &boundary)?;
    bake_back(&tm, &solved, atlas)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::metrics::cross_seam_color_difference;

    fn full_atlas_triangle() -> (TriMesh, TextureAtlas) {
        let mesh = TriMesh::new(
            vec![
                Vec3::new(0.0, 0.0, 0.0),
                Vec3::new(1.0, 0.0, 0.0),
                Vec3::new(0.0, 1.0, 0.0),
            ],
            vec![[0, 1, 2]],
        )
        .unwrap()
        .with_uvs(vec![[
            Vec2::new(0.0, 0.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(0.0, 1.0),
        ]])
        .unwrap();
        let mut atlas = TextureAtlas::new(32, 32, 3);
        for y in 0..32 {
            for x in 0..32 {
                atlas.set_valid(x, y, true);
            }
        }
        (mesh, atlas)
    }

    fn partitioned(mesh: &TriMesh, new: Vec<usize>) -> RegionSelection {
        let all: Vec<usize> = (0..mesh.face_count()).collect();
        let preserved: Vec<usize> = all.iter().copied().filter(|f| !new.contains(f)).collect();
        RegionSelection::default()
            .with_face_partition(new, preserved, mesh.face_count())
            .unwrap()
    }

    #[test]
    fn correspondence_single_triangle() {
        let (mesh, atlas) = full_atlas_triangle();
        let regions = partitioned(&mesh, vec![0]);
        let corr = build_correspondence(&mesh, &atlas, &regions).unwrap();
        let mut covered = 0;
        for ty in 0..32 {
            for tx in 0..32 {
                if let Some(e) = corr.get(tx, ty) {
                    covered += 1;
                    assert_eq!(e.face, 0);
                    // barycentrics reproduce the UV center
                    let u = e.bary[1];
                    let v = e.bary[2];
                    let cu = (tx as f64 + 0.5) / 32.0;
                    let cv = (ty as f64 + 0.5) / 32.0;
                    assert!((u - cu).abs() < 1e-9 && (v - cv).abs() < 1e-9);
                    assert_eq!(e.label, RegionLabel::New);
                }
            }
        }
        // half the square, give or take the diagonal
        assert!(covered > 450 && covered < 570, "{covered}");
        // a texel in the empty half is invalid
        assert!(corr.get(31, 31).is_none());
    }

    #[test]
    fn correspondence_two_triangle_quad_splits_by_area() {
        let scene_mesh = fixtures::plane_grid(1); // one quad = 2 faces
        let mut atlas = TextureAtlas::new(64, 64, 3);
        for y in 0..64 {
            for x in 0..64 {
                atlas.set_valid(x, y, true);
            }
        }
        let regions = partitioned(&scene_mesh, vec![0]);
        let corr = build_correspondence(&scene_mesh, &atlas, &regions).unwrap();
        let mut counts = [0usize; 2];
        for e in corr.entries.iter().flatten() {
            counts[e.face] += 1;
        }
        let total = counts[0] + counts[1];
        assert_eq!(total, 64 * 64);
        // equal-area faces: each within 2% of half
        for c in counts {
            let frac = c as f64 / total as f64;
            assert!((frac - 0.5).abs() <= 0.02, "{counts:?}");
        }
    }

    #[test]
    fn correspondence_detects_overlapping_charts() {
        // two faces whose UV triangles genuinely overlap
        let mesh = TriMesh::new(
            vec![
                Vec3::new(0.0, 0.0, 0.0),
                Vec3::new(1.0, 0.0, 0.0),
                Vec3::new(0.0, 1.0, 0.0),
                Vec3::new(1.0, 1.0, 0.0),
            ],
            vec![[0, 1, 2], [1, 3, 2]],
        )
        .unwrap()
        .with_uvs(vec![
            [
                Vec2::new(0.0, 0.0),
                Vec2::new(1.0, 0.0),
                Vec2::new(0.0, 1.0),
            ],
            [
                Vec2::new(0.1, 0.1),
                Vec2::new(0.9, 0.1),
                Vec2::new(0.1, 0.9),
            ],
        ])
        .unwrap();
        let mut atlas = TextureAtlas::new(32, 32, 3);
        for y in 0..32 {
            for x in 0..32 {
                atlas.set_valid(x, y, true);
            }
        }
        let regions = partitioned(&mesh, vec![0]);
        assert!(matches!(
            build_correspondence(&mesh, &atlas, &regions),
            Err(Error::OverlappingCharts { .. })
        ));
    }

    #[test]
    fn bake_back_identity_and_single_vertex() {
        let scene = fixtures::two_tone_patch(8, 32);
        let regions = partitioned(&scene.mesh, scene.new_faces.clone());
        let corr = build_correspondence(&scene.mesh, &scene.atlas, &regions).unwrap();
        let param = parameterize_new_region(&scene.mesh, &regions.new_faces).unwrap();
        let tm = build_texel_mesh(&corr, &param, &scene.mesh, &scene.atlas).unwrap();

        let same = bake_back(&tm, &tm.colors, &scene.atlas).unwrap();
        assert_eq!(same, scene.atlas);

        let mut recolored = tm.colors.clone();
        recolored[0] = vec![0.0, 1.0, 0.0];
        let out = bake_back(&tm, &recolored, &scene.atlas).unwrap();
        let mut diffs = 0;
        for ty in 0..32 {
            for tx in 0..32 {
                if out.texel(tx, ty) != scene.atlas.texel(tx, ty) {
                    diffs += 1;
                }
            }
        }
        assert_eq!(diffs, 1);
    }

    #[test]
    fn two_tone_harmonization_closes_the_seam() {
        let scene = fixtures::two_tone_patch(12, 64);
        let regions = partitioned(&scene.mesh, scene.new_faces.clone());
        let corr = build_correspondence(&scene.mesh, &scene.atlas, &regions).unwrap();
        let label = |x: u32, y: u32| corr.label(x, y).map(|l| l == RegionLabel::New);

        let before = cross_seam_color_difference(&scene.atlas, &label);
        let harmonized = harmonize_atlas(&scene.mesh, &scene.atlas, &regions).unwrap();
        let after = cross_seam_color_difference(&harmonized, &label);
        assert!(
            after <= 0.10 * before,
            "seam difference {after} vs before {before}"
        );

        // preserved texels are bit-identical
        for ty in 0..64 {
            for tx in 0..64 {
                if corr.label(tx, ty) == Some(RegionLabel::Preserved) {
                    assert_eq!(harmonized.texel(tx, ty), scene.atlas.texel(tx, ty));
                }
            }
        }
    }
}
