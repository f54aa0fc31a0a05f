//! Property tests for cross-cutting invariants.

use proptest::prelude::*;

use craftmesh_core::geom::{Vec2, Vec3};
use craftmesh_core::linalg::{cg_solve, SystemBuilder};
use craftmesh_core::mesh::{load_mesh, save_mesh, TriMesh};
use craftmesh_core::poisson2d::{assemble_system, BlendOptions, Image, PixelMask};
use craftmesh_core::sdf_boolean::{combine, extract_regions, BooleanOp, SdfGrid};

fn arb_mesh() -> impl Strategy<Value = TriMesh> {
    // a deformed grid patch: always valid, occasionally colored
    (2usize..6, any::<u64>(), any::<bool>()).prop_map(|(n, seed, colored)| {
        use rand::prelude::*;
        use rand_chacha::ChaCha8Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut mesh = craftmesh_core::fixtures::plane_grid(n);
        for v in &mut mesh.vertices {
            v.z += rng.gen_range(-0.3..0.3);
            v.x += rng.gen_range(-0.1..0.1) / n as f64;
            v.y += rng.gen_range(-0.1..0.1) / n as f64;
        }
        if colored {
            let colors = (0..mesh.vertex_count())
                .map(|_| {
                    [
                        rng.gen_range(0.0..1.0),
                        rng.gen_range(0.0..1.0),
                        rng.gen_range(0.0..1.0),
                    ]
                })
                .collect();
            mesh = mesh.with_vertex_colors(colors).unwrap();
        }
        mesh
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// Save/load keeps counts and connectivity exactly and coordinates to
    /// the text round-off bound.
    #[test]
    fn mesh_round_trip(mesh in arb_mesh()) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.obj");
        save_mesh(&mesh, &path).unwrap();
        let back = load_mesh(&path).unwrap();
        prop_assert_eq!(back.vertex_count(), mesh.vertex_count());
        prop_assert_eq!(back.face_count(), mesh.face_count());
        prop_assert_eq!(&back.faces, &mesh.faces);
        for (a, b) in back.vertices.iter().zip(&mesh.vertices) {
            for c in 0..3 {
                prop_assert!((a[c] - b[c]).abs() <= 1e-6);
            }
        }
    }

    /// Union is the exact pointwise minimum of its inputs.
    #[test]
    fn union_is_pointwise_min(seed in any::<u64>()) {
        use rand::prelude::*;
        use rand_chacha::ChaCha8Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 6;
        let values_a: Vec<f64> = (0..n * n * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let values_b: Vec<f64> = (0..n * n * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let a = SdfGrid::new(Vec3::zeros(), 0.25, [n, n, n], values_a).unwrap();
        let b = SdfGrid::new(Vec3::zeros(), 0.25, [n, n, n], values_b).unwrap();
        let u = combine(&a, &b, BooleanOp::Union).unwrap();
        for i in 0..u.values.len() {
            prop_assert!(u.values[i] <= a.values[i]);
            prop_assert!(u.values[i] <= b.values[i]);
            prop_assert!(u.values[i] == a.values[i] || u.values[i] == b.values[i]);
        }
    }

    /// Region extraction is invariant under permutation of the seam list
    /// and always keeps the tight band inside the wide one.
    #[test]
    fn region_extraction_permutation_invariant(seed in any::<u64>()) {
        use rand::prelude::*;
        use rand_chacha::ChaCha8Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mesh = craftmesh_core::fixtures::icosphere(1);
        let mut seam: Vec<Vec3> = (0..8)
            .map(|_| Vec3::new(
                rng.gen_range(-1.2..1.2),
                rng.gen_range(-1.2..1.2),
                rng.gen_range(-1.2..1.2),
            ))
            .collect();
        let r1 = extract_regions(&mesh, &mesh, &seam, 0.6, 0.35).unwrap();
        seam.shuffle(&mut rng);
        let r2 = extract_regions(&mesh, &mesh, &seam, 0.6, 0.35).unwrap();
        prop_assert_eq!(&r1.t_in, &r2.t_in);
        prop_assert_eq!(&r1.t_opt, &r2.t_opt);
        for v in &r1.t_opt {
            prop_assert!(r1.t_in.contains(v));
        }
    }

    /// The conjugate-gradient recurrence residual never increases on the
    /// Laplacian-type systems the other modules assemble.
    #[test]
    fn cg_residual_monotone_on_blend_systems(seed in any::<u64>()) {
        use rand::prelude::*;
        use rand_chacha::ChaCha8Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut target = Image::new(12, 12, 1);
        let mut source = Image::new(12, 12, 1);
        for v in target.values.iter_mut().chain(source.values.iter_mut()) {
            *v = rng.gen_range(0.0..1.0);
        }
        let mut mask = PixelMask::empty(12, 12);
        for y in 2..10 {
            for x in 2..10 {
                if rng.gen_bool(0.7) {
                    mask.set(x, y, true);
                }
            }
        }
        if mask.count() == 0 {
            return Ok(());
        }
        let (system, _) = assemble_system(&target, &source, &mask, &BlendOptions::default()).unwrap();
        let (_, reports) = cg_solve(&system, 1e-12, 2000, false).unwrap();
        for report in &reports {
            for w in report.residual_history.windows(2) {
                prop_assert!(
                    w[1] <= w[0] * (1.0 + 1e-12),
                    "residual rose: {} -> {}", w[0], w[1]
                );
            }
        }
    }

    /// Dirichlet substitution keeps the path-graph solution harmonic for
    /// arbitrary end values.
    #[test]
    fn path_harmonic_between_arbitrary_ends(a in -5.0f64..5.0, b in -5.0f64..5.0) {
        let n = 6;
        let mut builder = SystemBuilder::new(n, 1);
        for i in 0..n - 1 {
            builder.add(i, i, 1.0);
            builder.add(i + 1, i + 1, 1.0);
            builder.add(i, i + 1, -1.0);
            builder.add(i + 1, i, -1.0);
        }
        builder.dirichlet(0, &[a]);
        builder.dirichlet(n - 1, &[b]);
        let system = builder.build().unwrap();
        let (x, reports) = cg_solve(&system, 1e-12, 200, false).unwrap();
        prop_assert!(reports[0].converged);
        for i in 0..n {
            let expected = a + (b - a) * i as f64 / (n - 1) as f64;
            prop_assert!((x[0][i] - expected).abs() < 1e-8);
        }
    }

    /// Texture charts: every texel center the correspondence claims
    /// reproduces its own UV from the stored barycentrics.
    #[test]
    fn correspondence_barycentrics_reproduce_uv(seed in any::<u64>()) {
        use craftmesh_core::sdf_boolean::RegionSelection;
        use craftmesh_core::tex_harmon::{build_correspondence, TextureAtlas};
        use rand::prelude::*;
        use rand_chacha::ChaCha8Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(2..5usize);
        let mesh = craftmesh_core::fixtures::plane_grid(n);
        let mut atlas = TextureAtlas::new(24, 24, 3);
        for y in 0..24 {
            for x in 0..24 {
                atlas.set_valid(x, y, true);
            }
        }
        let all: Vec<usize> = (0..mesh.face_count()).collect();
        let regions = RegionSelection::default()
            .with_face_partition(all, Vec::new(), mesh.face_count())
            .unwrap();
        let corr = build_correspondence(&mesh, &atlas, &regions).unwrap();
        let uvs = mesh.uvs.as_ref().unwrap();
        for ty in 0..24 {
            for tx in 0..24 {
                if let Some(e) = corr.get(tx, ty) {
                    let uv: Vec2 = uvs[e.face][0] * e.bary[0]
                        + uvs[e.face][1] * e.bary[1]
                        + uvs[e.face][2] * e.bary[2];
                    let cu = (tx as f64 + 0.5) / 24.0;
                    let cv = (ty as f64 + 0.5) / 24.0;
                    prop_assert!((uv.x - cu).abs() < 1e-9 && (uv.y - cv).abs() < 1e-9);
                    prop_assert!(e.bary.iter().all(|&l| l >= -1e-9));
                    prop_assert!((e.bary.iter().sum::<f64>() - 1.0).abs() < 1e-9);
                }
            }
        }
    }
}
