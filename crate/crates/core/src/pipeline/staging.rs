//! Demo/fixture scenario staging: builds a complete runnable workspace
//! (input mesh, atlas, config, backend root) by repeatedly running the
//! workflow and staging whichever backend asset it reports as missing.
//! Deterministic: every staged asset is a pure function of its request key
//! and the scenario.

use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::fixtures;
use crate::geom::Vec3;
use crate::mesh::{save_mesh, TriMesh};
use crate::pipeline::{backend, config, run_workflow};
use crate::tex_harmon::TextureAtlas;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    /// Insert a square bump into the slab: the full geometry + texture path.
    BumpInsert,
    /// Insert with an empty region mesh: a pure pass-through.
    IdentityInsert,
    /// Delete with a region solid so small every grid sample misses it:
    /// an everywhere-positive SDF, also a pass-through.
    IdentityDelete,
    /// Replace = delete then insert; the delete leg is an identity here.
    ReplaceBump,
    /// Drag: drag-edit the image, delete the source region, insert the
    /// regenerated region. The delete leg is an identity here.
    DragBump,
}

#[derive(Debug, Clone)]
pub struct StagedScenario {
    pub workspace: PathBuf,
    pub config_path: PathBuf,
    pub input_mesh: PathBuf,
    pub input_atlas: PathBuf,
}

/// Grid resolution baked into the staged configs; the identity-delete box
/// placement depends on it.
pub const SCENARIO_GRID_RES: usize = 48;

pub fn stage_scenario(workspace: impl Into<PathBuf>, scenario: Scenario) -> Result<StagedScenario> {
    let workspace = workspace.into();
    let input_dir = workspace.join("input");
    let backend_root = workspace.join("backends");
    for d in [&input_dir, &backend_root] {
        std::fs::create_dir_all(d).map_err(|e| Error::io(d.display().to_string(), e))?;
    }

    // input model: a closed slab with the texture chart on its top face
    let slab = fixtures::slab_with_top_grid(24, 0.15);
    let input_mesh = input_dir.join("model.obj");
    save_mesh(&slab, &input_mesh)?;

    let input_atlas = input_dir.join("atlas.png");
    original_atlas(64).save(&input_atlas)?;

    let manifest = backend_root.join("manifest.txt");
    if !manifest.exists() {
        std::fs::write(&manifest, "# staged assets\n")
            .map_err(|e| Error::io(manifest.display().to_string(), e))?;
    }

    let task = match scenario {
        Scenario::BumpInsert | Scenario::IdentityInsert => "insert",
        Scenario::IdentityDelete => "delete",
        Scenario::ReplaceBump => "replace",
        Scenario::DragBump => "drag",
    };
    let instruction = match scenario {
        Scenario::BumpInsert => "add a square bump",
        Scenario::IdentityInsert => "change nothing",
        Scenario::IdentityDelete => "remove nothing",
        Scenario::ReplaceBump => "replace the center with a square bump",
        Scenario::DragBump => "drag the bump upward",
    };
    let mut extra = String::new();
    if scenario == Scenario::ReplaceBump {
        extra.push_str("instruction_delete = clear the center\n");
    }
    if scenario == Scenario::DragBump {
        let annotation = input_dir.join("drag.txt");
        std::fs::write(&annotation, "arrow 0.5 0.5 -> 0.5 0.6\n")
            .map_err(|e| Error::io(annotation.display().to_string(), e))?;
        extra.push_str("drag_annotation = input/drag.txt\n");
    }
    let config_path = workspace.join("config.txt");
    let config_text = format!(
        "task = {task}\n\
         mesh = input/model.obj\n\
         atlas = input/atlas.png\n\
         instruction = {instruction}\n\
         texture_prompt = match the surroundings\n\
         backend_root = backends\n\
         output_dir = out\n\
         grid_resolution = {SCENARIO_GRID_RES}\n\
         eps0 = 0.16\n\
         eps1 = 0.12\n\
         atlas_size = 64\n\
         seed = 1\n\
         views = 6\n\
         view_resolution = 96\n\
         iterations = 100\n\
         learning_rate = 0.002\n\
         lambda_smooth = 20\n\
         remesh_interval = 30\n\
         edge_min = 0.004\n\
         edge_max = 0.09\n\
         reblend_interval = 20\n{extra}"
    );
    std::fs::write(&config_path, config_text)
        .map_err(|e| Error::io(config_path.display().to_string(), e))?;

    // stage on demand until a run goes through
    for _round in 0..24 {
        let cfg = config::load_config(&config_path)?;
        let (backends, fs) = backend::filesystem_backend(&cfg.backend_root)?;
        match run_workflow(&cfg, &backends, Some(&fs)) {
            Ok(_) => {
                return Ok(StagedScenario {
                    workspace,
                    config_path,
                    input_mesh,
                    input_atlas,
                });
            }
            Err(e) => match find_miss(&e) {
                Some(key) => stage_asset(&backend_root, &key, scenario)?,
                None => return Err(e),
            },
        }
    }
    Err(Error::Validation(
        "scenario staging did not converge in 24 rounds".into(),
    ))
}

fn find_miss(e: &Error) -> Option<String> {
    match e {
        Error::BackendMiss { key } => Some(key.clone()),
        Error::Stage { source, .. } | Error::BackendAsset { source, .. } => find_miss(source),
        _ => None,
    }
}

fn stage_asset(root: &Path, key: &str, scenario: Scenario) -> Result<()> {
    let mut parts = key.splitn(3, ':');
    let kind = parts.next().unwrap_or_default();
    let role = parts.next().unwrap_or_default();
    // image-edit lookups carry an :edited / :region sub-entry suffix
    let hash = parts
        .next()
        .unwrap_or_default()
        .trim_end_matches(":edited")
        .trim_end_matches(":region");
    let key = format!("{kind}:{role}:{hash}");
    let short = &hash[..hash.len().min(16)];

    let mut manifest_lines = Vec::new();
    match kind {
        "image-edit" => {
            let edited = format!("edited_{short}.png");
            let region = format!("region_{short}.png");
            write_pattern_png(&root.join(&edited), &key, 0)?;
            write_pattern_png(&root.join(&region), &key, 1)?;
            manifest_lines.push(format!("{key}:edited = {edited}"));
            manifest_lines.push(format!("{key}:region = {region}"));
        }
        "mesh-gen" => {
            let mesh = scenario_mesh(role, scenario)?;
            let name = format!("mesh_{role}_{short}.obj");
            save_mesh(&mesh, root.join(&name))?;
            manifest_lines.push(format!("{key} = {name}"));
        }
        "texture-gen" => {
            let size: u32 = role
                .strip_prefix("new-chart-")
                .and_then(|s| s.split('x').next())
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| {
                    Error::Validation(format!("cannot stage texture role `{role}`"))
                })?;
            let name = format!("chart_{short}.png");
            generated_chart(size).save(root.join(&name))?;
            manifest_lines.push(format!("{key} = {name}"));
        }
        other => {
            return Err(Error::Validation(format!(
                "cannot stage unknown backend kind `{other}`"
            )))
        }
    }

    let manifest = root.join("manifest.txt");
    let mut file = std::fs::OpenOptions::new()
        .append(true)
        .open(&manifest)
        .map_err(|e| Error::io(manifest.display().to_string(), e))?;
    for line in manifest_lines {
        writeln!(file, "{line}").map_err(|e| Error::io(manifest.display().to_string(), e))?;
    }
    Ok(())
}

fn scenario_mesh(role: &str, scenario: Scenario) -> Result<TriMesh> {
    // roles are `<phase>-reference` / `<phase>-region`
    let Some((phase, kind)) = role.rsplit_once('-') else {
        return Err(Error::Validation(format!("cannot stage mesh role `{role}`")));
    };
    let inserting = !phase.contains("delete");
    let bump_box = || {
        fixtures::boxmesh(Vec3::new(0.5, 0.5, 0.15), Vec3::new(0.1, 0.1, 0.08))
    };
    match kind {
        "reference" => {
            if inserting && scenario != Scenario::IdentityInsert {
                Ok(fixtures::smooth_bump_grid(32, 0.15, 0.1, 0.12))
            } else {
                Ok(fixtures::smooth_bump_grid(16, 0.15, 0.0, 0.2))
            }
        }
        "region" => match scenario {
            Scenario::BumpInsert => Ok(bump_box()),
            Scenario::IdentityInsert => Ok(TriMesh::default()),
            Scenario::IdentityDelete => Ok(identity_delete_box()),
            Scenario::ReplaceBump | Scenario::DragBump => {
                if inserting {
                    Ok(bump_box())
                } else {
                    Ok(identity_delete_box())
                }
            }
        },
        other => Err(Error::Validation(format!(
            "cannot stage mesh kind `{other}`"
        ))),
    }
}

/// A region solid so small that every SDF grid sample lands outside it:
/// centered on a grid-cell center with half-extent 0.45 cells, mirroring
/// the sampling arithmetic of the boolean stage for the staged config
/// (slab bounding box [0,1]x[0,1]x[0,0.15], SCENARIO_GRID_RES cells).
fn identity_delete_box() -> TriMesh {
    let res = SCENARIO_GRID_RES as f64;
    let longest = 1.0;
    let pad = 4.0 * longest / res;
    let min = -pad;
    let padded_longest = 1.0 + 2.0 * pad;
    let spacing = padded_longest / res;
    let center = Vec3::new(
        min + 24.5 * spacing,
        min + 24.5 * spacing,
        min + 4.5 * spacing,
    );
    fixtures::boxmesh(center, Vec3::repeat(0.45 * spacing))
}

fn original_atlas(size: u32) -> TextureAtlas {
    let mut atlas = TextureAtlas::new(size, size, 3);
    for y in 0..size {
        for x in 0..size {
            let u = x as f64 / (size - 1) as f64;
            let v = y as f64 / (size - 1) as f64;
            atlas.set(x, y, 0, 0.80 + 0.08 * u);
            atlas.set(x, y, 1, 0.76 + 0.04 * v);
            atlas.set(x, y, 2, 0.64);
            atlas.set_valid(x, y, true);
        }
    }
    atlas
}

/// The "generated" look for the new region: a mid-gray checkerboard that
/// clashes with the warm original, so harmonization has real work to do.
fn generated_chart(size: u32) -> TextureAtlas {
    let mut atlas = TextureAtlas::new(size, size, 3);
    for y in 0..size {
        for x in 0..size {
            let check = ((x / 4) + (y / 4)) % 2;
            let base = if check == 0 { 0.35 } else { 0.55 };
            atlas.set(x, y, 0, base);
            atlas.set(x, y, 1, base + 0.03);
            atlas.set(x, y, 2, base + 0.06);
            atlas.set_valid(x, y, true);
        }
    }
    atlas
}

/// Deterministic marker image derived from the request key; backends only
/// need the bytes to be stable and distinct.
fn write_pattern_png(path: &Path, key: &str, salt: u8) -> Result<()> {
    use sha2::{Digest, Sha256};
    let digest = Sha256::digest([key.as_bytes(), &[salt]].concat());
    let mut img = image::RgbImage::new(8, 8);
    for (i, px) in img.pixels_mut().enumerate() {
        let b = digest[i % digest.len()];
        *px = image::Rgb([b, b.wrapping_add(salt), b.wrapping_mul(31)]);
    }
    img.save(path).map_err(|e| Error::Image {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}
