//! Text mesh I/O: `v`/`vt`/`f` records, 1-based indices, LF line endings.
//!
//! Vertex colors ride on extended `v x y z r g b` records. UVs are written
//! per face corner and deduplicated by exact bit pattern on save.

use std::collections::HashMap;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::geom::{Vec2, Vec3};
use crate::mesh::TriMesh;

pub fn load_mesh(path: impl AsRef<Path>) -> Result<TriMesh> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::io(path.display().to_string(), e))?;
    parse_mesh(&text, &path.display().to_string())
}

pub fn parse_mesh(text: &str, path: &str) -> Result<TriMesh> {
    let mut vertices: Vec<Vec3> = Vec::new();
    let mut colors: Vec<[f64; 3]> = Vec::new();
    let mut any_color = false;
    let mut uv_pool: Vec<Vec2> = Vec::new();
    let mut faces: Vec<[usize; 3]> = Vec::new();
    let mut face_uvs: Vec<[usize; 3]> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        let tag = parts.next().unwrap();
        let fields: Vec<&str> = parts.collect();
        match tag {
            "v" => {
                if fields.len() != 3 && fields.len() != 6 {
                    return Err(Error::format(
                        path,
                        lineno,
                        format!("`v` expects 3 or 6 fields, got {}", fields.len()),
                    ));
                }
                let mut vals = [0.0f64; 6];
                for (i, f) in fields.iter().enumerate() {
                    vals[i] = parse_float(f, path, lineno)?;
                }
                vertices.push(Vec3::new(vals[0], vals[1], vals[2]));
                if fields.len() == 6 {
                    any_color = true;
                    colors.push([vals[3], vals[4], vals[5]]);
                } else {
                    colors.push([0.0; 3]);
                }
            }
            "vt" => {
                if fields.len() < 2 {
                    return Err(Error::format(path, lineno, "`vt` expects 2 fields"));
                }
                let u = parse_float(fields[0], path, lineno)?;
                let v = parse_float(fields[1], path, lineno)?;
                uv_pool.push(Vec2::new(u, v));
            }
            "f" => {
                if fields.len() != 3 {
                    return Err(Error::format(
                        path,
                        lineno,
                        format!("only triangles are supported, got {} corners", fields.len()),
                    ));
                }
                let mut vi = [0usize; 3];
                let mut ti = [usize::MAX; 3];
                for (i, f) in fields.iter().enumerate() {
                    let mut it = f.split('/');
                    let v = it.next().unwrap();
                    vi[i] = parse_index(v, vertices.len(), path, lineno)?;
                    if let Some(t) = it.next() {
                        if !t.is_empty() {
                            ti[i] = parse_index(t, uv_pool.len(), path, lineno)?;
                        }
                    }
                }
                faces.push(vi);
                face_uvs.push(ti);
            }
            // unrecognized records (normals, objects, materials) are skipped
            _ => {}
        }
    }

    let has_uvs = face_uvs.iter().any(|t| t[0] != usize::MAX);
    if has_uvs {
        for (fi, t) in face_uvs.iter().enumerate() {
            if t.contains(&usize::MAX) {
                return Err(Error::Validation(format!(
                    "face {fi} mixes corners with and without UV indices"
                )));
            }
        }
    }

    let mut mesh = TriMesh {
        vertices,
        faces,
        uvs: None,
        vertex_colors: if any_color { Some(colors) } else { None },
    };
    if has_uvs {
        mesh.uvs = Some(
            face_uvs
                .iter()
                .map(|t| [uv_pool[t[0]], uv_pool[t[1]], uv_pool[t[2]]])
                .collect(),
        );
    }
    mesh.validate()?;
    Ok(mesh)
}

fn parse_float(s: &str, path: &str, line: usize) -> Result<f64> {
    s.parse::<f64>()
        .map_err(|_| Error::format(path, line, format!("invalid number `{s}`")))
}

fn parse_index(s: &str, count: usize, path: &str, line: usize) -> Result<usize> {
    let i: i64 = s
        .parse()
        .map_err(|_| Error::format(path, line, format!("invalid index `{s}`")))?;
    if i < 1 {
        return Err(Error::format(path, line, format!("index `{s}` must be >= 1")));
    }
    let idx = (i - 1) as usize;
    if idx >= count {
        return Err(Error::Validation(format!(
            "{path}:{line}: index {i} out of range (have {count})"
        )));
    }
    Ok(idx)
}

pub fn save_mesh(mesh: &TriMesh, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    mesh.validate()?;
    let file = std::fs::File::create(path)
        .map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut w = BufWriter::new(file);
    write_mesh(mesh, &mut w).map_err(|e| Error::io(path.display().to_string(), e))
}

/// Serialize to the text format. Deterministic: fixed 9-decimal formatting,
/// UV dedup by bit pattern in first-seen order.
pub fn write_mesh(mesh: &TriMesh, w: &mut impl Write) -> std::io::Result<()> {
    match &mesh.vertex_colors {
        Some(colors) => {
            for (v, c) in mesh.vertices.iter().zip(colors) {
                writeln!(
                    w,
                    "v {:.9} {:.9} {:.9} {:.9} {:.9} {:.9}",
                    v.x, v.y, v.z, c[0], c[1], c[2]
                )?;
            }
        }
        None => {
            for v in &mesh.vertices {
                writeln!(w, "v {:.9} {:.9} {:.9}", v.x, v.y, v.z)?;
            }
        }
    }
    if let Some(uvs) = &mesh.uvs {
        let mut pool: Vec<Vec2> = Vec::new();
        let mut seen: HashMap<(u64, u64), usize> = HashMap::new();
        let mut corner_ids: Vec<[usize; 3]> = Vec::with_capacity(uvs.len());
        for face_uv in uvs {
            let mut ids = [0usize; 3];
            for (i, uv) in face_uv.iter().enumerate() {
                let key = (uv.x.to_bits(), uv.y.to_bits());
                let id = *seen.entry(key).or_insert_with(|| {
                    pool.push(*uv);
                    pool.len() - 1
                });
                ids[i] = id;
            }
            corner_ids.push(ids);
        }
        for uv in &pool {
            writeln!(w, "vt {:.9} {:.9}", uv.x, uv.y)?;
        }
        for (f, t) in mesh.faces.iter().zip(&corner_ids) {
            writeln!(
                w,
                "f {}/{} {}/{} {}/{}",
                f[0] + 1,
                t[0] + 1,
                f[1] + 1,
                t[1] + 1,
                f[2] + 1,
                t[2] + 1
            )?;
        }
    } else {
        for f in &mesh.faces {
            writeln!(w, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1)?;
        }
    }
    Ok(())
}

/// Canonical serialized bytes, used for content hashing by the backends.
pub fn mesh_bytes(mesh: &TriMesh) -> Vec<u8> {
    let mut buf = Vec::new();
    write_mesh(mesh, &mut buf).expect("in-memory write cannot fail");
    buf
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_mesh_parses() {
        let m = parse_mesh("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n", "mem").unwrap();
        assert_eq!(m.vertex_count(), 3);
        assert_eq!(m.face_count(), 1);
    }

    #[test]
    fn out_of_range_index_is_validation_error() {
        let err = parse_mesh("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 100\n", "mem").unwrap_err();
        assert!(matches!(err, Error::Validation(_)), "{err}");
    }

    #[test]
    fn bad_number_reports_line() {
        let err = parse_mesh("v 0 0 0\nv 1 oops 0\n", "mem").unwrap_err();
        match err {
            Error::Format { line, .. } => assert_eq!(line, 2),
            other => panic!("expected format error, got {other}"),
        }
    }

    #[test]
    fn empty_mesh_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("empty.obj");
        let m = TriMesh::default();
        save_mesh(&m, &p).unwrap();
        let back = load_mesh(&p).unwrap();
        assert!(back.is_empty());
        assert_eq!(back.face_count(), 0);
    }

    #[test]
    fn uvs_survive_round_trip() {
        let m = TriMesh::new(
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
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("tri.obj");
        save_mesh(&m, &p).unwrap();
        let back = load_mesh(&p).unwrap();
        let uvs = back.uvs.as_ref().unwrap();
        assert_eq!(uvs.len(), 1);
        for i in 0..3 {
            assert!((uvs[0][i] - m.uvs.as_ref().unwrap()[0][i]).norm() < 1e-9);
        }
    }

    #[test]
    fn large_mesh_round_trip_error_bound() {
        // ~20k faces; coordinates survive the text format to 1e-6
        let m = crate::fixtures::icosphere(5);
        assert!(m.face_count() >= 10_000);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("big.obj");
        save_mesh(&m, &p).unwrap();
        let back = load_mesh(&p).unwrap();
        assert_eq!(back.vertex_count(), m.vertex_count());
        assert_eq!(back.faces, m.faces);
        let max_err = m
            .vertices
            .iter()
            .zip(&back.vertices)
            .flat_map(|(a, b)| (0..3).map(move |c| (a[c] - b[c]).abs()))
            .fold(0.0f64, f64::max);
        assert!(max_err <= 1e-6, "{max_err}");
    }

    #[test]
    fn colors_survive_round_trip() {
        let m = TriMesh::new(
            vec![
                Vec3::new(0.0, 0.0, 0.0),
                Vec3::new(1.0, 0.0, 0.0),
                Vec3::new(0.0, 1.0, 0.0),
            ],
            vec![[0, 1, 2]],
        )
        .unwrap()
        .with_vertex_colors(vec![[0.25, 0.5, 0.75]; 3])
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("col.obj");
        save_mesh(&m, &p).unwrap();
        let back = load_mesh(&p).unwrap();
        let colors = back.vertex_colors.unwrap();
        assert!((colors[0][2] - 0.75).abs() < 1e-9);
    }
}
