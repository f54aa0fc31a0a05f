//! Deterministic synthetic scenes used by tests, the acceptance suite, and
//! the demo assets generator.

use std::collections::HashMap;

use crate::geom::{Vec2, Vec3};
use crate::mesh::TriMesh;
use crate::tex_harmon::TextureAtlas;

/// Unit-radius icosphere. Subdivision 0 is the icosahedron (20 faces);
/// each level quadruples the face count.
pub fn icosphere(subdivisions: u32) -> TriMesh {
    let phi = (1.0 + 5.0f64.sqrt()) / 2.0;
    let mut vertices: Vec<Vec3> = vec![
        Vec3::new(-1.0, phi, 0.0),
        Vec3::new(1.0, phi, 0.0),
        Vec3::new(-1.0, -phi, 0.0),
        Vec3::new(1.0, -phi, 0.0),
        Vec3::new(0.0, -1.0, phi),
        Vec3::new(0.0, 1.0, phi),
        Vec3::new(0.0, -1.0, -phi),
        Vec3::new(0.0, 1.0, -phi),
        Vec3::new(phi, 0.0, -1.0),
        Vec3::new(phi, 0.0, 1.0),
        Vec3::new(-phi, 0.0, -1.0),
        Vec3::new(-phi, 0.0, 1.0),
    ]
    .into_iter()
    .map(|v| v.normalize())
    .collect();

    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];

    for _ in 0..subdivisions {
        let mut midpoint: HashMap<(usize, usize), usize> = HashMap::new();
        let mut next = Vec::with_capacity(faces.len() * 4);
        for f in &faces {
            let mut mids = [0usize; 3];
            for (i, m) in mids.iter_mut().enumerate() {
                let (a, b) = (f[i], f[(i + 1) % 3]);
                let key = (a.min(b), a.max(b));
                *m = *midpoint.entry(key).or_insert_with(|| {
                    let p = ((vertices[a] + vertices[b]) * 0.5).normalize();
                    vertices.push(p);
                    vertices.len() - 1
                });
            }
            next.push([f[0], mids[0], mids[2]]);
            next.push([f[1], mids[1], mids[0]]);
            next.push([f[2], mids[2], mids[1]]);
            next.push([mids[0], mids[1], mids[2]]);
        }
        faces = next;
    }

    TriMesh::new(vertices, faces).expect("icosphere is valid by construction")
}

pub fn translated(mesh: &TriMesh, offset: Vec3) -> TriMesh {
    let mut m = mesh.clone();
    for v in &mut m.vertices {
        *v += offset;
    }
    m
}

pub fn scaled(mesh: &TriMesh, factor: f64) -> TriMesh {
    let mut m = mesh.clone();
    for v in &mut m.vertices {
        *v *= factor;
    }
    m
}

/// Flat square grid in the z=0 plane over [-1,1]^2 with `n`+1 vertices per
/// side, CCW faces facing +z, and UVs spanning the unit square.
pub fn plane_grid(n: usize) -> TriMesh {
    let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            let x = -1.0 + 2.0 * i as f64 / n as f64;
            let y = -1.0 + 2.0 * j as f64 / n as f64;
            vertices.push(Vec3::new(x, y, 0.0));
        }
    }
    let at = |i: usize, j: usize| j * (n + 1) + i;
    let uv = |i: usize, j: usize| Vec2::new(i as f64 / n as f64, j as f64 / n as f64);
    let mut faces = Vec::with_capacity(2 * n * n);
    let mut uvs = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            faces.push([at(i, j), at(i + 1, j), at(i + 1, j + 1)]);
            uvs.push([uv(i, j), uv(i + 1, j), uv(i + 1, j + 1)]);
            faces.push([at(i, j), at(i + 1, j + 1), at(i, j + 1)]);
            uvs.push([uv(i, j), uv(i + 1, j + 1), uv(i, j + 1)]);
        }
    }
    TriMesh::new(vertices, faces)
        .and_then(|m| m.with_uvs(uvs))
        .expect("plane grid is valid by construction")
}

/// Closed slab over [0,1]^2 x [0,height] whose top face is an n-by-n grid
/// carrying UVs over the whole atlas. Bottom and side faces get collapsed
/// (point) UVs aimed at texel (0,0), so they read a single uniform color.
pub fn slab_with_top_grid(n: usize, height: f64) -> TriMesh {
    let ring = n + 1;
    let at = |i: usize, j: usize| j * ring + i;
    let mut vertices = Vec::with_capacity(2 * ring * ring);
    // top grid then bottom grid
    for j in 0..ring {
        for i in 0..ring {
            vertices.push(Vec3::new(i as f64 / n as f64, j as f64 / n as f64, height));
        }
    }
    let bottom = ring * ring;
    for j in 0..ring {
        for i in 0..ring {
            vertices.push(Vec3::new(i as f64 / n as f64, j as f64 / n as f64, 0.0));
        }
    }

    let mut faces = Vec::new();
    let mut uvs = Vec::new();
    let uv = |i: usize, j: usize| Vec2::new(i as f64 / n as f64, j as f64 / n as f64);
    let corner_uv = Vec2::new(0.004, 0.004);
    for j in 0..n {
        for i in 0..n {
            // top: CCW seen from +z
            faces.push([at(i, j), at(i + 1, j), at(i + 1, j + 1)]);
            uvs.push([uv(i, j), uv(i + 1, j), uv(i + 1, j + 1)]);
            faces.push([at(i, j), at(i + 1, j + 1), at(i, j + 1)]);
            uvs.push([uv(i, j), uv(i + 1, j + 1), uv(i, j + 1)]);
            // bottom: reversed winding, collapsed UVs
            faces.push([bottom + at(i, j), bottom + at(i + 1, j + 1), bottom + at(i + 1, j)]);
            uvs.push([corner_uv; 3]);
            faces.push([bottom + at(i, j), bottom + at(i, j + 1), bottom + at(i + 1, j + 1)]);
            uvs.push([corner_uv; 3]);
        }
    }
    // sides: walk the top boundary counter-clockwise (seen from above)
    let mut boundary = Vec::new();
    for i in 0..n {
        boundary.push((at(i, 0), at(i + 1, 0)));
    }
    for j in 0..n {
        boundary.push((at(n, j), at(n, j + 1)));
    }
    for i in (0..n).rev() {
        boundary.push((at(i + 1, n), at(i, n)));
    }
    for j in (0..n).rev() {
        boundary.push((at(0, j + 1), at(0, j)));
    }
    for (a, b) in boundary {
        faces.push([a, bottom + a, bottom + b]);
        uvs.push([corner_uv; 3]);
        faces.push([a, bottom + b, b]);
        uvs.push([corner_uv; 3]);
    }

    TriMesh::new(vertices, faces)
        .and_then(|m| m.with_uvs(uvs))
        .expect("slab is valid by construction")
}

/// Open grid over [0,1]^2 at base height `z0` with a smooth gaussian bump;
/// the reference surface the fusion pulls the harsh boolean ridge toward.
pub fn smooth_bump_grid(n: usize, z0: f64, bump_height: f64, sigma: f64) -> TriMesh {
    let mut mesh = plane_grid(n);
    for v in &mut mesh.vertices {
        // plane_grid spans [-1,1]; remap to [0,1]
        let x = (v.x + 1.0) * 0.5;
        let y = (v.y + 1.0) * 0.5;
        let r2 = (x - 0.5) * (x - 0.5) + (y - 0.5) * (y - 0.5);
        *v = Vec3::new(x, y, z0 + bump_height * (-r2 / (sigma * sigma)).exp());
    }
    mesh
}

/// Axis-aligned closed box.
pub fn boxmesh(center: Vec3, half: Vec3) -> TriMesh {
    let signs = [
        [-1.0, -1.0, -1.0],
        [1.0, -1.0, -1.0],
        [1.0, 1.0, -1.0],
        [-1.0, 1.0, -1.0],
        [-1.0, -1.0, 1.0],
        [1.0, -1.0, 1.0],
        [1.0, 1.0, 1.0],
        [-1.0, 1.0, 1.0],
    ];
    let vertices: Vec<Vec3> = signs
        .iter()
        .map(|s| center + Vec3::new(s[0] * half.x, s[1] * half.y, s[2] * half.z))
        .collect();
    // outward CCW faces
    let faces = vec![
        [0, 2, 1],
        [0, 3, 2], // -z
        [4, 5, 6],
        [4, 6, 7], // +z
        [0, 1, 5],
        [0, 5, 4], // -y
        [2, 3, 7],
        [2, 7, 6], // +y
        [1, 2, 6],
        [1, 6, 5], // +x
        [3, 0, 4],
        [3, 4, 7], // -x
    ];
    TriMesh::new(vertices, faces).expect("box is valid by construction")
}

/// The geometric-fusion smoke scene: a plane grid with a sharp tent ridge
/// along the y axis (the stand-in for a harsh Boolean transition), plus the
/// smooth reference plane the fusion should pull the ridge toward.
pub struct RidgeScene {
    /// Plane with the ridge (plays the merged mesh M_t).
    pub ridged: TriMesh,
    /// Flat plane of identical topology (plays the reference mesh M_e).
    pub reference: TriMesh,
    /// Crest vertex positions (the seam stand-in V_in).
    pub seam: Vec<Vec3>,
    pub ridge_half_width: f64,
    pub ridge_height: f64,
    /// Band radii used for region extraction on this scene.
    pub eps0: f64,
    pub eps1: f64,
}

/// Fusion settings the ridge scene ships with; tuned so 200 iterations at
/// 8 views of 128 squared flatten the ridge decisively.
pub fn ridge_fusion_config() -> crate::geo_fusion::FusionConfig {
    crate::geo_fusion::FusionConfig {
        view_count: 8,
        resolution: 128,
        iterations: 200,
        learning_rate: 2e-3,
        momentum: 0.9,
        lambda_smooth: 20.0,
        remesh_interval: 100,
        edge_min: 0.042,
        edge_max: 0.167,
        reblend_interval: 50,
    }
}

pub fn plane_with_ridge(n: usize, half_width: f64, height: f64) -> RidgeScene {
    let reference = plane_grid(n);
    let mut ridged = reference.clone();
    let mut seam = Vec::new();
    for v in &mut ridged.vertices {
        if v.x.abs() < half_width {
            v.z = height * (1.0 - v.x.abs() / half_width);
        }
        if v.x.abs() < 1e-12 {
            seam.push(*v);
        }
    }
    RidgeScene {
        ridged,
        reference,
        seam,
        ridge_half_width: half_width,
        ridge_height: height,
        eps0: 0.55,
        eps1: 0.40,
    }
}

/// The texture-harmonization smoke scene: a UV-mapped grid whose central
/// circular patch ("new" region) carries a fine checkerboard in a gray tone
/// that clashes with the brighter surrounding ("preserved") texels.
pub struct TwoToneScene {
    pub mesh: TriMesh,
    pub atlas: TextureAtlas,
    /// Face indices of the central patch.
    pub new_faces: Vec<usize>,
    pub preserved_faces: Vec<usize>,
    pub patch_radius: f64,
}

pub fn two_tone_patch(grid: usize, atlas_size: u32) -> TwoToneScene {
    let mesh = plane_grid(grid);
    let patch_radius = 0.55;
    let mut is_new = vec![false; mesh.face_count()];
    let mut new_faces = Vec::new();
    let mut preserved_faces = Vec::new();
    for fi in 0..mesh.face_count() {
        let c = mesh.face_centroid(fi);
        if (c.x * c.x + c.y * c.y).sqrt() < patch_radius {
            is_new[fi] = true;
            new_faces.push(fi);
        } else {
            preserved_faces.push(fi);
        }
    }

    // texel -> owning face, replicating the plane_grid UV layout (cell
    // (i, j), upper triangle when the fractional v exceeds the fractional u)
    let face_of_texel = |u: f64, v: f64| -> usize {
        let n = grid as f64;
        let i = ((u * n).floor() as usize).min(grid - 1);
        let j = ((v * n).floor() as usize).min(grid - 1);
        let fu = u * n - i as f64;
        let fv = v * n - j as f64;
        2 * (j * grid + i) + usize::from(fv > fu)
    };

    // colors follow the face labels exactly, so the tone boundary and the
    // region boundary coincide
    let mut atlas = TextureAtlas::new(atlas_size, atlas_size, 3);
    for ty in 0..atlas_size {
        for tx in 0..atlas_size {
            let u = (tx as f64 + 0.5) / atlas_size as f64;
            let v = (ty as f64 + 0.5) / atlas_size as f64;
            let color = if is_new[face_of_texel(u, v)] {
                // generated look: mid-gray checkerboard detail in [0.4, 0.6]
                let check = ((tx / 2) + (ty / 2)) % 2;
                let base = if check == 0 { 0.4 } else { 0.6 };
                [base, base, base]
            } else {
                // original look: warm bright tone
                [0.85, 0.80, 0.70]
            };
            for (ch, val) in color.iter().enumerate() {
                atlas.set(tx, ty, ch, *val);
            }
            atlas.set_valid(tx, ty, true);
        }
    }

    TwoToneScene {
        mesh,
        atlas,
        new_faces,
        preserved_faces,
        patch_radius,
    }
}
