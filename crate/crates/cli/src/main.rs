//! Command-line driver: the full editing workflow plus per-stage
//! subcommands for running pieces in isolation.

use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use craftmesh_core::geo_fusion::{fuse_geometry, FusionConfig};
use craftmesh_core::mesh::{load_mesh, save_mesh, DistanceIndex};
use craftmesh_core::pipeline::regions_io::{load_regions, save_regions};
use craftmesh_core::pipeline::staging::{stage_scenario, Scenario};
use craftmesh_core::pipeline::{filesystem_backend, load_config, padded_joint_bounds, run_workflow};
use craftmesh_core::poisson2d::{poisson_blend_opts, BlendOptions, Image, PixelMask};
use craftmesh_core::sdf_boolean::{combine, extract_seam, marching_cubes, sample_sdf, BooleanOp};
use craftmesh_core::tex_harmon::{
    bake_back, build_correspondence, build_texel_mesh, default_boundary_colors, harmonize,
    parameterize_new_region, TextureAtlas,
};

#[derive(Parser)]
#[command(name = "craftmesh", about = "Seamless mesh editing toolkit", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a configured editing workflow end to end.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// SDF boolean merge of two closed meshes via marching cubes.
    Boolean(BooleanArgs),
    /// Optimize the seam band of a merged mesh toward a reference mesh.
    FuseGeom(FuseArgs),
    /// Harmonize the new-region texels of an atlas against the preserved
    /// surroundings.
    HarmonizeTex(HarmonizeArgs),
    /// Poisson image editing on plain images.
    Pie(PieArgs),
    /// Materialize a runnable demo scenario (inputs, config, staged
    /// backends).
    GenFixtures {
        #[arg(long)]
        dir: PathBuf,
        #[arg(long, default_value = "bump-insert")]
        scenario: String,
    },
}

#[derive(Args)]
struct BooleanArgs {
    #[arg(long)]
    mesh_a: PathBuf,
    #[arg(long)]
    mesh_b: PathBuf,
    #[arg(long)]
    op: String,
    #[arg(long, default_value_t = 128)]
    resolution: usize,
    #[arg(long)]
    out: PathBuf,
    /// Also extract seam vertices within this many cells of both surfaces.
    #[arg(long)]
    seam_out: Option<PathBuf>,
    #[arg(long, default_value_t = 2.0)]
    seam_tau_cells: f64,
}

#[derive(Args)]
struct FuseArgs {
    #[arg(long)]
    mesh_t: PathBuf,
    #[arg(long)]
    mesh_e: PathBuf,
    #[arg(long)]
    regions: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long, default_value_t = 24)]
    views: usize,
    #[arg(long, default_value_t = 512)]
    resolution: u32,
    #[arg(long, default_value_t = 1000)]
    iterations: usize,
    #[arg(long, default_value_t = 1e-3)]
    learning_rate: f64,
    #[arg(long, default_value_t = 0.9)]
    momentum: f64,
    #[arg(long, default_value_t = 0.1)]
    lambda_smooth: f64,
    #[arg(long, default_value_t = 100)]
    remesh_interval: usize,
    #[arg(long, default_value_t = 0.02)]
    edge_min: f64,
    #[arg(long, default_value_t = 0.08)]
    edge_max: f64,
    #[arg(long, default_value_t = 50)]
    reblend_interval: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Dump raster channels of the first viewpoint into this directory.
    #[arg(long)]
    debug_renders: Option<PathBuf>,
}

#[derive(Args)]
struct HarmonizeArgs {
    #[arg(long)]
    mesh: PathBuf,
    #[arg(long)]
    atlas: PathBuf,
    /// Region file carrying the new/preserved face partition.
    #[arg(long)]
    regions: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Write the 2D texel triangulation as a mesh file for inspection.
    #[arg(long)]
    debug_triangulation: Option<PathBuf>,
}

#[derive(Args)]
struct PieArgs {
    #[arg(long)]
    target: PathBuf,
    #[arg(long)]
    source: PathBuf,
    #[arg(long)]
    mask: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Keep the stronger of source and target gradients per neighbor.
    #[arg(long)]
    mixed: bool,
    /// Erode a border-touching mask by one pixel instead of erroring.
    #[arg(long)]
    erode_border: bool,
}

fn main() -> anyhow::Result<()> {
    match Cli::parse().command {
        Command::Run { config } => cmd_run(config),
        Command::Boolean(args) => cmd_boolean(args),
        Command::FuseGeom(args) => cmd_fuse(args),
        Command::HarmonizeTex(args) => cmd_harmonize(args),
        Command::Pie(args) => cmd_pie(args),
        Command::GenFixtures { dir, scenario } => cmd_gen_fixtures(dir, &scenario),
    }
}

fn cmd_run(config_path: PathBuf) -> anyhow::Result<()> {
    let config = load_config(&config_path)
        .with_context(|| format!("loading {}", config_path.display()))?;
    for w in &config.warnings {
        eprintln!("warning: {w}");
    }
    let (backends, fs) = filesystem_backend(&config.backend_root)?;
    let outcome = run_workflow(&config, &backends, Some(&fs))?;
    println!("mesh: {}", outcome.result_mesh.display());
    if let Some(atlas) = &outcome.result_atlas {
        println!("atlas: {}", atlas.display());
    }
    println!("report: {}", outcome.report.display());
    if outcome.identity {
        println!("identity edit: inputs passed through unchanged");
    }
    Ok(())
}

fn cmd_boolean(args: BooleanArgs) -> anyhow::Result<()> {
    let op: BooleanOp = args.op.parse()?;
    let a = load_mesh(&args.mesh_a)?;
    let b = load_mesh(&args.mesh_b)?;
    let index_a = DistanceIndex::build(&a)?;
    let index_b = DistanceIndex::build(&b)?;
    let bounds = padded_joint_bounds(&a, &b, args.resolution);
    let grid_a = sample_sdf(&a, &index_a, &bounds, args.resolution)?;
    let grid_b = sample_sdf(&b, &index_b, &bounds, args.resolution)?;
    let result = marching_cubes(&combine(&grid_a, &grid_b, op)?)?;
    if result.open_boundary {
        eprintln!("warning: level set touches the grid boundary; surface is open");
    }
    save_mesh(&result.mesh, &args.out)?;
    println!(
        "merged: {} ({} vertices, {} faces)",
        args.out.display(),
        result.mesh.vertex_count(),
        result.mesh.face_count()
    );
    if let Some(seam_path) = args.seam_out {
        let tau = args.seam_tau_cells * grid_a.spacing;
        let seam = extract_seam(&grid_a, &grid_b, &result.mesh, tau);
        let regions = craftmesh_core::sdf_boolean::RegionSelection {
            seam_vertices: seam,
            eps0: 0.08,
            eps1: 0.05,
            ..Default::default()
        };
        save_regions(&regions, &seam_path)?;
        println!(
            "seam: {} ({} vertices)",
            seam_path.display(),
            regions.seam_vertices.len()
        );
    }
    Ok(())
}

fn cmd_fuse(args: FuseArgs) -> anyhow::Result<()> {
    let mesh_t = load_mesh(&args.mesh_t)?;
    let mesh_e = load_mesh(&args.mesh_e)?;
    let regions = load_regions(&args.regions)?;
    let config = FusionConfig {
        view_count: args.views,
        resolution: args.resolution,
        iterations: args.iterations,
        learning_rate: args.learning_rate,
        momentum: args.momentum,
        lambda_smooth: args.lambda_smooth,
        remesh_interval: args.remesh_interval,
        edge_min: args.edge_min,
        edge_max: args.edge_max,
        reblend_interval: args.reblend_interval,
    };

    if let Some(dir) = &args.debug_renders {
        let bb = mesh_t.bounding_box();
        let cams = craftmesh_core::raster::sample_viewpoints(
            args.views.max(1),
            bb.center(),
            1.25 * bb.diagonal(),
            args.seed,
        );
        let cam = cams[0].clone().with_resolution(args.resolution, args.resolution);
        let target = craftmesh_core::raster::render(&mesh_t, &cam, None)?;
        craftmesh_core::raster::dump_channels(&target, dir, "view0")?;
    }

    let outcome = fuse_geometry(&mesh_t, &mesh_e, &regions, &config, args.seed)?;
    save_mesh(&outcome.mesh, &args.out)?;
    if let Some(trace_path) = &args.trace {
        let mut csv = String::from("iteration,loss\n");
        for (i, l) in outcome.loss_trace.iter().enumerate() {
            csv.push_str(&format!("{i},{l:.9}\n"));
        }
        std::fs::write(trace_path, csv)?;
    }
    println!(
        "fused: {} (loss {} -> {})",
        args.out.display(),
        outcome.loss_trace.first().map_or(0.0, |v| *v),
        outcome.loss_trace.last().map_or(0.0, |v| *v)
    );
    Ok(())
}

fn cmd_harmonize(args: HarmonizeArgs) -> anyhow::Result<()> {
    let mesh = load_mesh(&args.mesh)?;
    let atlas = TextureAtlas::load(&args.atlas)?;
    let regions = load_regions(&args.regions)?;
    if regions.new_faces.is_empty() {
        bail!("region file has no new faces to harmonize");
    }

    let corr = build_correspondence(&mesh, &atlas, &regions).map_err(|e| {
        if matches!(e, craftmesh_core::Error::OverlappingCharts { .. }) {
            anyhow::anyhow!(
                "{e}\nhint: harmonize-tex needs non-overlapping UV charts; meshes written by \
                 `craftmesh run` carry projected preserved-region UVs that may overlap near the \
                 seam (the run pipeline harmonizes those internally)"
            )
        } else {
            e.into()
        }
    })?;
    let param = parameterize_new_region(&mesh, &regions.new_faces)?;
    let tm = build_texel_mesh(&corr, &param, &mesh, &atlas)?;
    if let Some(path) = &args.debug_triangulation {
        let mesh2d = craftmesh_core::mesh::TriMesh::new(
            tm.positions
                .iter()
                .map(|p| craftmesh_core::geom::Vec3::new(p.x, p.y, 0.0))
                .collect(),
            tm.triangles.clone(),
        )?;
        save_mesh(&mesh2d, path)?;
    }
    let boundary = default_boundary_colors(&tm, &corr, &atlas);
    let solved = harmonize(&tm, &tm.colors, &boundary)?;
    let out = bake_back(&tm, &solved, &atlas)?;
    out.save(&args.out)?;
    println!(
        "harmonized: {} ({} texel vertices, {} boundary)",
        args.out.display(),
        tm.vertex_count(),
        boundary.len()
    );
    Ok(())
}

fn cmd_pie(args: PieArgs) -> anyhow::Result<()> {
    let target = load_image(&args.target)?;
    let source = load_image(&args.source)?;
    let mask = load_mask(&args.mask)?;
    let opts = BlendOptions {
        mixed_gradients: args.mixed,
        erode_border: args.erode_border,
    };
    let blended = poisson_blend_opts(&target, &source, &mask, &opts)?;
    save_image(&blended, &args.out)?;
    println!("blended: {}", args.out.display());
    Ok(())
}

fn cmd_gen_fixtures(dir: PathBuf, scenario: &str) -> anyhow::Result<()> {
    let scenario = match scenario {
        "bump-insert" => Scenario::BumpInsert,
        "identity-insert" => Scenario::IdentityInsert,
        "identity-delete" => Scenario::IdentityDelete,
        other => bail!("unknown scenario `{other}` (bump-insert|identity-insert|identity-delete)"),
    };
    let staged = stage_scenario(&dir, scenario)?;
    println!("staged workspace: {}", staged.workspace.display());
    println!("config: {}", staged.config_path.display());
    println!("run it with: craftmesh run --config {}", staged.config_path.display());
    Ok(())
}

fn load_image(path: &PathBuf) -> anyhow::Result<Image> {
    let img = image::open(path)
        .with_context(|| format!("opening {}", path.display()))?
        .to_rgb8();
    let (w, h) = img.dimensions();
    let mut out = Image::new(w, h, 3);
    for y in 0..h {
        for x in 0..w {
            let p = img.get_pixel(x, y);
            for c in 0..3 {
                out.set(x, y, c, p[c] as f64 / 255.0);
            }
        }
    }
    Ok(out)
}

fn load_mask(path: &PathBuf) -> anyhow::Result<PixelMask> {
    let img = image::open(path)
        .with_context(|| format!("opening {}", path.display()))?
        .to_luma8();
    let (w, h) = img.dimensions();
    let inside: Vec<bool> = img.pixels().map(|p| p[0] > 127).collect();
    Ok(PixelMask::new(w, h, inside)?)
}

fn save_image(img: &Image, path: &PathBuf) -> anyhow::Result<()> {
    let mut out = image::RgbImage::new(img.width, img.height);
    for y in 0..img.height {
        for x in 0..img.width {
            let mut px = [0u8; 3];
            for (c, slot) in px.iter_mut().enumerate() {
                let v = if c < img.channels { img.get(x, y, c) } else { 0.0 };
                *slot = (v.clamp(0.0, 1.0) * 255.0).round() as u8;
            }
            out.put_pixel(x, y, image::Rgb(px));
        }
    }
    out.save(path)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}
