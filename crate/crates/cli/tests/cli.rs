//! Black-box tests of the command-line surface.

use std::path::Path;
use std::process::Command;

use craftmesh_core::fixtures;
use craftmesh_core::geom::Vec3;
use craftmesh_core::mesh::{load_mesh, save_mesh};
use craftmesh_core::pipeline::regions_io::save_regions;
use craftmesh_core::sdf_boolean::RegionSelection;

fn craftmesh() -> Command {
    Command::new(env!("CARGO_BIN_EXE_craftmesh"))
}

fn run_ok(cmd: &mut Command) -> String {
    let output = cmd.output().expect("spawn craftmesh");
    assert!(
        output.status.success(),
        "command failed\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr)
    );
    String::from_utf8_lossy(&output.stdout).into_owned()
}

#[test]
fn pie_blends_and_preserves_target_outside_mask() {
    let dir = tempfile::tempdir().unwrap();
    let w = 24u32;
    let save_gray = |path: &Path, f: &dyn Fn(u32, u32) -> u8| {
        let mut img = image::RgbImage::new(w, w);
        for y in 0..w {
            for x in 0..w {
                let v = f(x, y);
                img.put_pixel(x, y, image::Rgb([v, v, v]));
            }
        }
        img.save(path).unwrap();
    };
    let target = dir.path().join("target.png");
    let source = dir.path().join("source.png");
    let mask = dir.path().join("mask.png");
    let out = dir.path().join("out.png");
    save_gray(&target, &|x, _| (x * 10).min(255) as u8);
    save_gray(&source, &|_, y| if (y / 2) % 2 == 0 { 90 } else { 160 });
    save_gray(&mask, &|x, y| {
        if (6..18).contains(&x) && (6..18).contains(&y) {
            255
        } else {
            0
        }
    });

    run_ok(craftmesh()
        .arg("pie")
        .args(["--target"]).arg(&target)
        .args(["--source"]).arg(&source)
        .args(["--mask"]).arg(&mask)
        .args(["--out"]).arg(&out));

    let result = image::open(&out).unwrap().to_rgb8();
    let original = image::open(&target).unwrap().to_rgb8();
    // outside the mask the target survives exactly
    assert_eq!(result.get_pixel(2, 2), original.get_pixel(2, 2));
    assert_eq!(result.get_pixel(20, 20), original.get_pixel(20, 20));
    // inside, the source's banding shows through
    let inside_a = result.get_pixel(12, 12)[0] as i32;
    let inside_b = result.get_pixel(12, 14)[0] as i32;
    assert!((inside_a - inside_b).abs() > 20, "no banding: {inside_a} vs {inside_b}");
}

#[test]
fn boolean_merges_two_spheres() {
    let dir = tempfile::tempdir().unwrap();
    let a_path = dir.path().join("a.obj");
    let b_path = dir.path().join("b.obj");
    let out = dir.path().join("merged.obj");
    save_mesh(&fixtures::icosphere(2), &a_path).unwrap();
    save_mesh(
        &fixtures::translated(&fixtures::icosphere(2), Vec3::new(0.8, 0.0, 0.0)),
        &b_path,
    )
    .unwrap();

    let stdout = run_ok(craftmesh()
        .arg("boolean")
        .args(["--mesh-a"]).arg(&a_path)
        .args(["--mesh-b"]).arg(&b_path)
        .args(["--op", "union", "--resolution", "48"])
        .args(["--out"]).arg(&out));
    assert!(stdout.contains("merged:"));

    let merged = load_mesh(&out).unwrap();
    assert!(merged.face_count() > 100);
    let topo = craftmesh_core::mesh::Topology::build(&merged).unwrap();
    assert!(topo.is_closed());
}

#[test]
fn fuse_geom_runs_from_files() {
    let dir = tempfile::tempdir().unwrap();
    let scene = fixtures::plane_with_ridge(16, 0.25, 0.25);
    let t_path = dir.path().join("t.obj");
    let e_path = dir.path().join("e.obj");
    let regions_path = dir.path().join("regions.txt");
    let out = dir.path().join("fused.obj");
    let trace = dir.path().join("trace.csv");
    save_mesh(&scene.ridged, &t_path).unwrap();
    save_mesh(&scene.reference, &e_path).unwrap();
    let regions = craftmesh_core::sdf_boolean::extract_regions(
        &scene.ridged,
        &scene.reference,
        &scene.seam,
        scene.eps0,
        scene.eps1,
    )
    .unwrap();
    save_regions(&regions, &regions_path).unwrap();

    run_ok(craftmesh()
        .arg("fuse-geom")
        .args(["--mesh-t"]).arg(&t_path)
        .args(["--mesh-e"]).arg(&e_path)
        .args(["--regions"]).arg(&regions_path)
        .args(["--out"]).arg(&out)
        .args(["--trace"]).arg(&trace)
        .args([
            "--views", "4", "--resolution", "64", "--iterations", "20",
            "--learning-rate", "0.002", "--lambda-smooth", "20",
            "--remesh-interval", "0", "--reblend-interval", "10",
            "--edge-min", "0.04", "--edge-max", "0.17", "--seed", "3",
        ]));

    let fused = load_mesh(&out).unwrap();
    assert_eq!(fused.vertex_count(), scene.ridged.vertex_count());
    let csv = std::fs::read_to_string(&trace).unwrap();
    assert!(csv.lines().count() > 20);
}

#[test]
fn harmonize_tex_closes_two_tone_seam() {
    let dir = tempfile::tempdir().unwrap();
    let scene = fixtures::two_tone_patch(10, 48);
    let mesh_path = dir.path().join("mesh.obj");
    let atlas_path = dir.path().join("atlas.png");
    let regions_path = dir.path().join("regions.txt");
    let out = dir.path().join("harmonized.png");
    let tri_path = dir.path().join("texel_mesh.obj");
    save_mesh(&scene.mesh, &mesh_path).unwrap();
    scene.atlas.save(&atlas_path).unwrap();
    let preserved: Vec<usize> = (0..scene.mesh.face_count())
        .filter(|f| !scene.new_faces.contains(f))
        .collect();
    let regions = RegionSelection::default()
        .with_face_partition(scene.new_faces.clone(), preserved, scene.mesh.face_count())
        .unwrap();
    save_regions(&regions, &regions_path).unwrap();

    let stdout = run_ok(craftmesh()
        .arg("harmonize-tex")
        .args(["--mesh"]).arg(&mesh_path)
        .args(["--atlas"]).arg(&atlas_path)
        .args(["--regions"]).arg(&regions_path)
        .args(["--out"]).arg(&out)
        .args(["--debug-triangulation"]).arg(&tri_path));
    assert!(stdout.contains("harmonized:"));

    // preserved corner texel untouched; patch center brightened toward the
    // warm surroundings
    let before = image::open(&atlas_path).unwrap().to_rgb8();
    let after = image::open(&out).unwrap().to_rgb8();
    assert_eq!(before.get_pixel(1, 1), after.get_pixel(1, 1));
    assert!(after.get_pixel(24, 24)[0] > before.get_pixel(24, 24)[0] + 20);

    let texel_mesh = load_mesh(&tri_path).unwrap();
    assert!(texel_mesh.face_count() > 50);
}

#[test]
fn gen_fixtures_then_run_identity() {
    let dir = tempfile::tempdir().unwrap();
    let ws = dir.path().join("demo");
    run_ok(craftmesh()
        .arg("gen-fixtures")
        .args(["--dir"]).arg(&ws)
        .args(["--scenario", "identity-insert"]));

    let stdout = run_ok(craftmesh()
        .arg("run")
        .args(["--config"]).arg(ws.join("config.txt")));
    assert!(stdout.contains("identity edit"));
    assert!(ws.join("out/report.txt").exists());
}
