//! Text serialization of [`RegionSelection`] so single stages can be re-run
//! from retained intermediates.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::sdf_boolean::RegionSelection;

pub fn save_regions(regions: &RegionSelection, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path)
        .map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut w = std::io::BufWriter::new(file);
    let io_err = |e: std::io::Error| Error::io(path.display().to_string(), e);

    writeln!(w, "eps0 = {}", regions.eps0).map_err(io_err)?;
    writeln!(w, "eps1 = {}", regions.eps1).map_err(io_err)?;
    for v in &regions.seam_vertices {
        writeln!(w, "seam {:.12} {:.12} {:.12}", v.x, v.y, v.z).map_err(io_err)?;
    }
    for (tag, list) in [
        ("t_in", &regions.t_in),
        ("e_in", &regions.e_in),
        ("t_opt", &regions.t_opt),
        ("new_face", &regions.new_faces),
        ("preserved_face", &regions.preserved_faces),
    ] {
        for &i in list {
            writeln!(w, "{tag} {i}").map_err(io_err)?;
        }
    }
    Ok(())
}

pub fn load_regions(path: impl AsRef<Path>) -> Result<RegionSelection> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut regions = RegionSelection {
        eps0: 0.08,
        eps1: 0.05,
        ..Default::default()
    };
    let display = path.display().to_string();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = || Error::format(&display, idx + 1, format!("cannot parse `{line}`"));
        if let Some((key, value)) = line.split_once('=') {
            let value = value.trim();
            match key.trim() {
                "eps0" => regions.eps0 = value.parse().map_err(|_| bad())?,
                "eps1" => regions.eps1 = value.parse().map_err(|_| bad())?,
                _ => return Err(bad()),
            }
            continue;
        }
        let mut parts = line.split_whitespace();
        let tag = parts.next().unwrap();
        match tag {
            "seam" => {
                let mut coord = [0.0f64; 3];
                for c in coord.iter_mut() {
                    *c = parts
                        .next()
                        .ok_or_else(bad)?
                        .parse()
                        .map_err(|_| bad())?;
                }
                regions
                    .seam_vertices
                    .push(Vec3::new(coord[0], coord[1], coord[2]));
            }
            "t_in" | "e_in" | "t_opt" | "new_face" | "preserved_face" => {
                let i: usize = parts
                    .next()
                    .ok_or_else(bad)?
                    .parse()
                    .map_err(|_| bad())?;
                match tag {
                    "t_in" => regions.t_in.push(i),
                    "e_in" => regions.e_in.push(i),
                    "t_opt" => regions.t_opt.push(i),
                    "new_face" => regions.new_faces.push(i),
                    _ => regions.preserved_faces.push(i),
                }
            }
            _ => return Err(bad()),
        }
    }
    Ok(regions)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn regions_round_trip() {
        let regions = RegionSelection {
            seam_vertices: vec![Vec3::new(0.1, -0.2, 0.3), Vec3::new(1.0, 2.0, 3.0)],
            t_in: vec![1, 2, 5],
            e_in: vec![0, 7],
            t_opt: vec![2],
            eps0: 0.08,
            eps1: 0.05,
            new_faces: vec![3, 4],
            preserved_faces: vec![0, 1, 2],
        };
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("regions.txt");
        save_regions(&regions, &p).unwrap();
        let back = load_regions(&p).unwrap();
        assert_eq!(back.t_in, regions.t_in);
        assert_eq!(back.e_in, regions.e_in);
        assert_eq!(back.t_opt, regions.t_opt);
        assert_eq!(back.new_faces, regions.new_faces);
        assert_eq!(back.preserved_faces, regions.preserved_faces);
        assert_eq!(back.eps0, regions.eps0);
        assert!((back.seam_vertices[0] - regions.seam_vertices[0]).norm() < 1e-11);
    }
}
