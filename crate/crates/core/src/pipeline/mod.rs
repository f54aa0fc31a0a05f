//! Workflow orchestration: insert / delete / replace / drag editing flows
//! over file-backed generative backends, with per-stage artifact retention
//! and a diffable run report.

pub mod backend;
pub mod config;
pub mod regions_io;
pub mod report;
pub mod staging;

pub use backend::{filesystem_backend, Backends, FilesystemBackend};
pub use config::{load_config, PipelineConfig, Task};
pub use report::RunReport;

use std::collections::HashSet;
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::error::{Error, Result};
use crate::geom::{Aabb, Vec2, Vec3};
use crate::geo_fusion::fuse_geometry;
use crate::mesh::{
    load_mesh, mesh_bytes, save_mesh, DistanceIndex, TriMesh,
};
use crate::metrics::mesh_seam_color_difference;
use crate::raster::{encode_normal_image, render, Camera};
use crate::sdf_boolean::{
    classify_new_vs_preserved, combine, extract_regions, extract_seam, marching_cubes,
    sample_sdf, BooleanOp, RegionSelection,
};
use crate::tex_harmon::{
    bake_back, build_correspondence, build_texel_mesh, default_boundary_colors, harmonize,
    parameterize_new_region, TextureAtlas,
};

/// Margin (as a fraction of the chart) kept clear around the new-region
/// chart inside the composite atlas.
const CHART_MARGIN: f64 = 0.04;

/// Final artifacts of a run.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub result_mesh: PathBuf,
    pub result_atlas: Option<PathBuf>,
    pub report: PathBuf,
    /// True when the edit was detected as an identity and inputs were
    /// passed through untouched.
    pub identity: bool,
}

/// Uniform scale-and-offset mapping a mesh into the unit cube.
#[derive(Debug, Clone, Copy)]
struct Normalization {
    offset: Vec3,
    scale: f64,
}

impl Normalization {
    fn fit(mesh: &TriMesh) -> Result<Self> {
        let bb = mesh.bounding_box();
        let extent = bb.max - bb.min;
        let scale = extent.x.max(extent.y).max(extent.z);
        if scale <= 0.0 || !scale.is_finite() {
            return Err(Error::Validation("mesh has zero extent".into()));
        }
        Ok(Normalization {
            offset: bb.min,
            scale,
        })
    }

    fn apply(&self, mesh: &TriMesh) -> TriMesh {
        let mut m = mesh.clone();
        for v in &mut m.vertices {
            *v = (*v - self.offset) / self.scale;
        }
        m
    }

    fn invert(&self, mesh: &TriMesh) -> TriMesh {
        let mut m = mesh.clone();
        for v in &mut m.vertices {
            *v = *v * self.scale + self.offset;
        }
        m
    }
}

/// Runs the configured workflow. Stage failures abort with the stage name;
/// everything produced so far stays in the output directory, and the report
/// records the aborted stage.
pub fn run_workflow(
    config: &PipelineConfig,
    backends: &Backends,
    fs_audit: Option<&FilesystemBackend>,
) -> Result<RunOutcome> {
    config.validate()?;
    std::fs::create_dir_all(&config.output_dir)
        .map_err(|e| Error::io(config.output_dir.display().to_string(), e))?;

    let mut report = RunReport::new();
    for (k, v) in config.echo() {
        report.put(format!("config_{k}"), v);
    }
    for (i, w) in config.warnings.iter().enumerate() {
        report.put(format!("config_warning_{i}"), w.clone());
    }

    let started = Instant::now();
    let run = execute(config, backends, &mut report);
    report.put_timing("total", started.elapsed().as_secs_f64());

    if let Some(fs) = fs_audit {
        for (i, call) in fs.audit_log().iter().enumerate() {
            report.put(format!("backend_call_{i}"), call.clone());
        }
        report.put("backend_kind", "filesystem");
    }

    let report_path = config.output_dir.join("report.txt");
    match run {
        Ok(mut outcome) => {
            report.put("status", "ok");
            report.write(&report_path)?;
            outcome.report = report_path;
            Ok(outcome)
        }
        Err(e) => {
            let stage = match &e {
                Error::Stage { stage, .. } => stage.clone(),
                _ => "setup".into(),
            };
            report.put("status", "aborted");
            report.put("aborted_at_stage", stage);
            let _ = report.write(&report_path);
            Err(e)
        }
    }
}

fn execute(
    config: &PipelineConfig,
    backends: &Backends,
    report: &mut RunReport,
) -> Result<RunOutcome> {
    let out = &config.output_dir;
    match config.task {
        Task::Insert => {
            let phase = EditPhase {
                config,
                backends,
                name: "insert",
                op: BooleanOp::Union,
                instruction: config.instruction.clone(),
                dir: out.clone(),
            };
            phase.run(report, &config.mesh, config.atlas.as_deref())
        }
        Task::Delete => {
            let phase = EditPhase {
                config,
                backends,
                name: "delete",
                op: BooleanOp::Difference,
                instruction: config.instruction.clone(),
                dir: out.clone(),
            };
            phase.run(report, &config.mesh, config.atlas.as_deref())
        }
        Task::Replace => {
            // delete then insert on the intermediate result
            let delete_dir = out.join("phase1_delete");
            let phase1 = EditPhase {
                config,
                backends,
                name: "replace_delete",
                op: BooleanOp::Difference,
                instruction: if config.instruction_delete.is_empty() {
                    config.instruction.clone()
                } else {
                    config.instruction_delete.clone()
                },
                dir: delete_dir,
            };
            let mid = phase1.run(report, &config.mesh, config.atlas.as_deref())?;

            let insert_dir = out.join("phase2_insert");
            let phase2 = EditPhase {
                config,
                backends,
                name: "replace_insert",
                op: BooleanOp::Union,
                instruction: config.instruction.clone(),
                dir: insert_dir,
            };
            let fin = phase2.run(report, &mid.result_mesh, mid.result_atlas.as_deref())?;
            promote(out, &fin)
        }
        Task::Drag => {
            // the paper's three steps: drag-edit the image, delete the
            // source region, insert the regenerated region
            let annotation_path = config
                .drag_annotation
                .as_ref()
                .expect("validated");
            let annotation = std::fs::read_to_string(annotation_path)
                .map_err(|e| Error::io(annotation_path.display().to_string(), e))?;

            let delete_dir = out.join("phase1_delete");
            let phase1 = EditPhase {
                config,
                backends,
                name: "drag_delete",
                op: BooleanOp::Difference,
                instruction: annotation.clone(),
                dir: delete_dir,
            };
            let mid = phase1.run(report, &config.mesh, config.atlas.as_deref())?;

            let insert_dir = out.join("phase2_insert");
            let phase2 = EditPhase {
                config,
                backends,
                name: "drag_insert",
                op: BooleanOp::Union,
                instruction: annotation,
                dir: insert_dir,
            };
            let fin = phase2.run(report, &mid.result_mesh, mid.result_atlas.as_deref())?;
            promote(out, &fin)
        }
    }
}

/// Copies a nested phase's final artifacts to the run root.
fn promote(out: &Path, fin: &RunOutcome) -> Result<RunOutcome> {
    let mesh = out.join("result.obj");
    std::fs::copy(&fin.result_mesh, &mesh)
        .map_err(|e| Error::io(mesh.display().to_string(), e))?;
    let atlas = match &fin.result_atlas {
        Some(a) => {
            let dst = out.join("result_atlas.png");
            std::fs::copy(a, &dst).map_err(|e| Error::io(dst.display().to_string(), e))?;
            Some(dst)
        }
        None => None,
    };
    Ok(RunOutcome {
        result_mesh: mesh,
        result_atlas: atlas,
        report: PathBuf::new(),
        identity: fin.identity,
    })
}

struct EditPhase<'a> {
    config: &'a PipelineConfig,
    backends: &'a Backends,
    /// Report key prefix and backend role.
    name: &'a str,
    op: BooleanOp,
    instruction: String,
    dir: PathBuf,
}

impl EditPhase<'_> {
    fn stage<T>(
        &self,
        report: &mut RunReport,
        stage: &str,
        f: impl FnOnce(&mut RunReport) -> Result<T>,
    ) -> Result<T> {
        let t0 = Instant::now();
        let result = f(report);
        report.put_timing(&format!("{}_{stage}", self.name), t0.elapsed().as_secs_f64());
        result.map_err(|e| e.in_stage(format!("{}/{stage}", self.name)))
    }

    fn run(
        &self,
        report: &mut RunReport,
        mesh_path: &Path,
        atlas_path: Option<&Path>,
    ) -> Result<RunOutcome> {
        std::fs::create_dir_all(&self.dir)
            .map_err(|e| Error::io(self.dir.display().to_string(), e))?;
        let prefix = self.name;

        // ingest and normalize
        let (mesh_o, atlas_o, norm) = self.stage(report, "load", |report| {
            let raw = std::fs::read(mesh_path)
                .map_err(|e| Error::io(mesh_path.display().to_string(), e))?;
            report.put_hash(&format!("{prefix}_input_mesh"), &raw);
            let mesh = load_mesh(mesh_path)?;
            let atlas = match atlas_path {
                Some(p) => {
                    let bytes = std::fs::read(p)
                        .map_err(|e| Error::io(p.display().to_string(), e))?;
                    report.put_hash(&format!("{prefix}_input_atlas"), &bytes);
                    Some(TextureAtlas::load(p)?)
                }
                None => None,
            };
            let norm = Normalization::fit(&mesh)?;
            report.put(
                format!("{prefix}_normalize_scale"),
                format!("{:.12}", norm.scale),
            );
            let normalized = norm.apply(&mesh);
            save_mesh(&normalized, self.dir.join("mesh_o_norm.obj"))?;
            Ok((normalized, atlas, norm))
        })?;

        // reference render from a fixed deterministic viewpoint
        let reference_png = self.stage(report, "reference_render", |_| {
            let bb = mesh_o.bounding_box();
            let dir = Vec3::new(0.3, 0.4, 1.0).normalize();
            let cam = Camera::new(bb.center() + dir * (1.25 * bb.diagonal()), bb.center());
            let target = render(&mesh_o, &cam, None)?;
            let img = encode_normal_image(&target);
            let png = encode_png(&img)?;
            write_bytes(self.dir.join("reference.png"), &png)?;
            Ok(png)
        })?;

        // 2D edit through the backend
        let (edited_png, region_png) = self.stage(report, "image_edit", |report| {
            let (edited, region) =
                self.backends
                    .image_edit
                    .edit(&reference_png, &self.instruction, self.name)?;
            report.put_hash(&format!("{prefix}_edited_image"), &edited);
            report.put_hash(&format!("{prefix}_region_image"), &region);
            write_bytes(self.dir.join("edited.png"), &edited)?;
            write_bytes(self.dir.join("region.png"), &region)?;
            Ok((edited, region))
        })?;

        // region and reference meshes (normalized frame by contract)
        let (mesh_e, mesh_r) = self.stage(report, "mesh_gen", |_| {
            let e = self
                .backends
                .mesh_gen
                .generate(&edited_png, &format!("{}-reference", self.name))?;
            let r = self
                .backends
                .mesh_gen
                .generate(&region_png, &format!("{}-region", self.name))?;
            save_mesh(&e, self.dir.join("mesh_e.obj"))?;
            save_mesh(&r, self.dir.join("mesh_r.obj"))?;
            Ok((e, r))
        })?;

        if mesh_r.faces.is_empty() {
            return self.identity_passthrough(report, mesh_path, atlas_path);
        }

        // SDF boolean merge
        let boolean = self.stage(report, "boolean", |report| {
            let index_o = DistanceIndex::build(&mesh_o)?;
            let index_r = DistanceIndex::build(&mesh_r)?;
            let joint = mesh_o.bounding_box().merge(&mesh_r.bounding_box());
            let extent = joint.max - joint.min;
            let longest = extent.x.max(extent.y).max(extent.z);
            let pad = 4.0 * longest / self.config.grid_resolution as f64;
            let bounds = joint.padded(pad);
            let grid_o = sample_sdf(&mesh_o, &index_o, &bounds, self.config.grid_resolution)?;
            let grid_r = sample_sdf(&mesh_r, &index_r, &bounds, self.config.grid_resolution)?;

            if self.op == BooleanOp::Difference && grid_r.values.iter().all(|&v| v > 0.0) {
                return Ok(None); // empty solid: boolean identity
            }

            let merged = match &self.config.boolean_import {
                Some(path) => {
                    report.put(format!("{prefix}_boolean_import"), path.display().to_string());
                    load_mesh(path)?
                }
                None => {
                    let mc = marching_cubes(&combine(&grid_o, &grid_r, self.op)?)?;
                    report.put(
                        format!("{prefix}_mc_open_boundary"),
                        format!("{}", mc.open_boundary),
                    );
                    mc.mesh
                }
            };
            save_mesh(&merged, self.dir.join("merged.obj"))?;
            Ok(Some((grid_o, grid_r, merged)))
        })?;

        let Some((grid_o, grid_r, merged)) = boolean else {
            return self.identity_passthrough(report, mesh_path, atlas_path);
        };
        let spacing = grid_o.spacing;

        let mesh_e = if self.config.align_reference {
            self.stage(report, "align_reference", |_| {
                let aligned = crate::geo_fusion::rigid_align(&mesh_e, &merged, 50)?;
                save_mesh(&aligned, self.dir.join("mesh_e_aligned.obj"))?;
                Ok(aligned)
            })?
        } else {
            mesh_e
        };

        // seam and epsilon-ball regions
        let regions = self.stage(report, "regions", |report| {
            let tau = self.config.seam_tau_cells * spacing;
            let seam = extract_seam(&grid_o, &grid_r, &merged, tau);
            report.put(format!("{prefix}_seam_vertices"), format!("{}", seam.len()));
            let regions = extract_regions(
                &merged,
                &mesh_e,
                &seam,
                self.config.eps0,
                self.config.eps1,
            )?;
            regions_io::save_regions(&regions, self.dir.join("regions.txt"))?;
            Ok(regions)
        })?;

        // geometric fusion
        let fused = self.stage(report, "fuse", |report| {
            let outcome = fuse_geometry(
                &merged,
                &mesh_e,
                &regions,
                &self.config.fusion,
                self.config.seed,
            )?;
            save_mesh(&outcome.mesh, self.dir.join("fused.obj"))?;
            let mut csv = String::from("iteration,loss\n");
            for (i, l) in outcome.loss_trace.iter().enumerate() {
                csv.push_str(&format!("{i},{l:.9}\n"));
            }
            write_bytes(self.dir.join("loss_trace.csv"), csv.as_bytes())?;
            if let (Some(first), Some(last)) =
                (outcome.loss_trace.first(), outcome.loss_trace.last())
            {
                report.put(format!("{prefix}_fuse_loss_first"), format!("{first:.6}"));
                report.put(format!("{prefix}_fuse_loss_last"), format!("{last:.6}"));
            }
            Ok(outcome)
        })?;

        // new vs preserved classification on the fused mesh
        let (regions_final, new_faces, preserved_faces) =
            self.stage(report, "classify", |report| {
                let delta = self.config.classify_delta_cells * spacing;
                let (new_faces, preserved) =
                    classify_new_vs_preserved(&fused.mesh, &mesh_o, delta)?;
                report.put(format!("{prefix}_new_faces"), format!("{}", new_faces.len()));
                report.put(
                    format!("{prefix}_preserved_faces"),
                    format!("{}", preserved.len()),
                );
                let remapped_t_in: Vec<usize> = regions
                    .t_in
                    .iter()
                    .filter_map(|&v| fused.vertex_remap.get(v).copied().flatten())
                    .collect();
                let regions_final = RegionSelection {
                    t_in: remapped_t_in,
                    t_opt: fused.region.clone(),
                    ..regions.clone()
                }
                .with_face_partition(
                    new_faces.clone(),
                    preserved.clone(),
                    fused.mesh.face_count(),
                )?;
                regions_io::save_regions(&regions_final, self.dir.join("regions_final.txt"))?;
                Ok((regions_final, new_faces, preserved))
            })?;
        let _ = preserved_faces;

        // texture synthesis and harmonization
        let (result_mesh_norm, result_atlas) = match (&atlas_o, new_faces.is_empty()) {
            (Some(atlas), false) => self.stage(report, "texture", |report| {
                texture_stage(
                    self.config,
                    self.backends,
                    report,
                    prefix,
                    &self.dir,
                    &fused.mesh,
                    &mesh_o,
                    atlas,
                    &regions_final,
                )
            })?,
            _ => {
                report.put(
                    format!("{prefix}_texture"),
                    if atlas_o.is_none() {
                        "skipped: no input atlas"
                    } else {
                        "skipped: no new faces"
                    },
                );
                (fused.mesh.clone(), None)
            }
        };

        // de-normalize and write final artifacts
        self.stage(report, "finalize", |report| {
            let result = norm.invert(&result_mesh_norm);
            let mesh_out = self.dir.join("result.obj");
            save_mesh(&result, &mesh_out)?;
            report.put_hash(
                &format!("{prefix}_result_mesh"),
                &std::fs::read(&mesh_out).map_err(|e| Error::io(mesh_out.display().to_string(), e))?,
            );
            let atlas_out = match &result_atlas {
                Some(atlas) => {
                    let p = self.dir.join("result_atlas.png");
                    atlas.save(&p)?;
                    report.put_hash(
                        &format!("{prefix}_result_atlas"),
                        &std::fs::read(&p).map_err(|e| Error::io(p.display().to_string(), e))?,
                    );
                    Some(p)
                }
                None => None,
            };
            Ok(RunOutcome {
                result_mesh: mesh_out,
                result_atlas: atlas_out,
                report: PathBuf::new(),
                identity: false,
            })
        })
    }

    /// Identity edit: the inputs pass through byte-for-byte.
    fn identity_passthrough(
        &self,
        report: &mut RunReport,
        mesh_path: &Path,
        atlas_path: Option<&Path>,
    ) -> Result<RunOutcome> {
        report.put(format!("{}_identity", self.name), "true");
        let mesh_out = self.dir.join("result.obj");
        std::fs::copy(mesh_path, &mesh_out)
            .map_err(|e| Error::io(mesh_out.display().to_string(), e))?;
        let atlas_out = match atlas_path {
            Some(p) => {
                let dst = self.dir.join("result_atlas.png");
                std::fs::copy(p, &dst).map_err(|e| Error::io(dst.display().to_string(), e))?;
                Some(dst)
            }
            None => None,
        };
        Ok(RunOutcome {
            result_mesh: mesh_out,
            result_atlas: atlas_out,
            report: PathBuf::new(),
            identity: true,
        })
    }
}

/// Builds the composite atlas (original texels below, the new-region chart
/// above), fills the chart from the texture backend, harmonizes the new
/// texels against the preserved surroundings, and returns the fused mesh
/// with composite UVs plus the harmonized atlas.
#[allow(clippy::too_many_arguments)]
fn texture_stage(
    config: &PipelineConfig,
    backends: &Backends,
    report: &mut RunReport,
    prefix: &str,
    dir: &Path,
    fused: &TriMesh,
    mesh_o: &TriMesh,
    atlas_o: &TextureAtlas,
    regions: &RegionSelection,
) -> Result<(TriMesh, Option<TextureAtlas>)> {
    let chart = config.atlas_size;
    let (w_orig, h_orig) = (atlas_o.width, atlas_o.height);
    let w_comp = w_orig.max(chart);
    let h_comp = h_orig + chart;

    // new-region submesh, compacted
    let new_set: HashSet<usize> = regions.new_faces.iter().copied().collect();
    let mut vmap: Vec<Option<usize>> = vec![None; fused.vertex_count()];
    let submesh = {
        let mut vertices = Vec::new();
        let mut faces = Vec::new();
        for &fi in &regions.new_faces {
            let f = fused.faces[fi];
            let mut g = [0usize; 3];
            for (slot, &v) in f.iter().enumerate() {
                g[slot] = match vmap[v] {
                    Some(i) => i,
                    None => {
                        vertices.push(fused.vertices[v]);
                        vmap[v] = Some(vertices.len() - 1);
                        vertices.len() - 1
                    }
                };
            }
            faces.push(g);
        }
        TriMesh::new(vertices, faces)?
    };

    // parameterize the new region and scale it into the chart square
    let sub_faces: Vec<usize> = (0..submesh.face_count()).collect();
    let param = parameterize_new_region(&submesh, &sub_faces)?;
    let mut pmin = Vec2::new(f64::INFINITY, f64::INFINITY);
    let mut pmax = Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for c in param.coords.iter().flatten() {
        pmin = pmin.inf(c);
        pmax = pmax.sup(c);
    }
    let p_extent = (pmax.x - pmin.x).max(pmax.y - pmin.y).max(1e-12);
    let chart_uv = |p: Vec2| -> Vec2 {
        let s = (1.0 - 2.0 * CHART_MARGIN) / p_extent;
        Vec2::new(
            CHART_MARGIN + (p.x - pmin.x) * s,
            CHART_MARGIN + (p.y - pmin.y) * s,
        )
    };
    let sub_uv = |v: usize| chart_uv(param.coords[v].expect("new-region vertex parameterized"));

    // chart-local UVs drive the texture backend
    let submesh_chart = submesh.clone().with_uvs(
        submesh
            .faces
            .iter()
            .map(|f| [sub_uv(f[0]), sub_uv(f[1]), sub_uv(f[2])])
            .collect(),
    )?;
    save_mesh(&submesh_chart, dir.join("new_region.obj"))?;

    let chart_atlas = backends.texture_gen.texture(
        &mesh_bytes(&submesh_chart),
        &config.texture_prompt,
        &format!("new-chart-{chart}x{chart}"),
    )?;
    if chart_atlas.width != chart || chart_atlas.height != chart {
        return Err(Error::Validation(format!(
            "texture backend returned {}x{}, expected {chart}x{chart}",
            chart_atlas.width, chart_atlas.height
        )));
    }

    // composite: original texels in the bottom rows, chart above
    let channels = atlas_o.channels.max(chart_atlas.channels);
    let mut composite = TextureAtlas::new(w_comp, h_comp, channels);
    for y in 0..h_orig {
        for x in 0..w_orig {
            for ch in 0..atlas_o.channels {
                composite.set(x, y, ch, atlas_o.get(x, y, ch));
            }
            composite.set_valid(x, y, atlas_o.is_valid(x, y));
        }
    }
    for y in 0..chart {
        for x in 0..chart {
            for ch in 0..chart_atlas.channels {
                composite.set(x, h_orig + y, ch, chart_atlas.get(x, y, ch));
            }
            composite.set_valid(x, h_orig + y, true);
        }
    }

    // fused mesh with composite UVs: preserved corners project onto the
    // original surface and reuse its chart, new corners use the new chart
    let index_o = DistanceIndex::build(mesh_o)?;
    let uvs_o = mesh_o
        .uvs
        .as_ref()
        .ok_or_else(|| Error::Validation("original mesh has no UVs".into()))?;
    let scale_u = w_orig as f64 / w_comp as f64;
    let scale_v = h_orig as f64 / h_comp as f64;
    let project = |p: &Vec3| -> Vec2 {
        let (_, face) = index_o.unsigned_distance(mesh_o, p);
        let [a, b, c] = mesh_o.face_vertices(face);
        let q = crate::geom::closest_point_on_triangle(p, &a, &b, &c);
        let bary = barycentric_3d(&q, &a, &b, &c);
        let uv = uvs_o[face][0] * bary[0] + uvs_o[face][1] * bary[1] + uvs_o[face][2] * bary[2];
        Vec2::new(uv.x * scale_u, uv.y * scale_v)
    };
    let chart_to_comp = |p: Vec2| -> Vec2 {
        Vec2::new(
            p.x * chart as f64 / w_comp as f64,
            (h_orig as f64 + p.y * chart as f64) / h_comp as f64,
        )
    };
    let mut uvs_comp = Vec::with_capacity(fused.face_count());
    for (fi, f) in fused.faces.iter().enumerate() {
        if new_set.contains(&fi) {
            uvs_comp.push([
                chart_to_comp(sub_uv(vmap[f[0]].expect("on a new face"))),
                chart_to_comp(sub_uv(vmap[f[1]].expect("on a new face"))),
                chart_to_comp(sub_uv(vmap[f[2]].expect("on a new face"))),
            ]);
        } else {
            uvs_comp.push([
                project(&fused.vertices[f[0]]),
                project(&fused.vertices[f[1]]),
                project(&fused.vertices[f[2]]),
            ]);
        }
    }
    let fused_uv = fused.clone().with_uvs(uvs_comp)?;

    let seam_before = mesh_seam_color_difference(&fused_uv, &composite, &regions.new_faces)?;
    report.put(format!("{prefix}_seam_color_before"), format!("{seam_before:.6}"));

    // correspondence over the chart only (preserved projections may overlap
    // legitimately; they never carry unknowns)
    let submesh_comp = submesh.clone().with_uvs(
        submesh
            .faces
            .iter()
            .map(|f| {
                [
                    chart_to_comp(sub_uv(f[0])),
                    chart_to_comp(sub_uv(f[1])),
                    chart_to_comp(sub_uv(f[2])),
                ]
            })
            .collect(),
    )?;
    let regions_sub = RegionSelection::default().with_face_partition(
        sub_faces.clone(),
        Vec::new(),
        submesh.face_count(),
    )?;
    let corr = build_correspondence(&submesh_comp, &composite, &regions_sub)?;
    let tm = build_texel_mesh(&corr, &param, &submesh_comp, &composite)?;
    if tm.skipped_components > 0 {
        report.put(
            format!("{prefix}_texel_components_skipped"),
            format!("{}", tm.skipped_components),
        );
    }

    // the chart sits apart from the original texels, so every Dirichlet
    // value comes from sampling the original atlas at the nearest original
    // surface point
    let mut boundary = default_boundary_colors(&tm, &corr, &composite);
    for (v, color) in boundary.iter_mut() {
        let (tx, ty) = tm.texel[*v];
        let p = corr
            .get(tx, ty)
            .expect("texel-mesh vertices correspond")
            .point;
        let uv = project(&p);
        let sx = ((uv.x / scale_u) * w_orig as f64)
            .floor()
            .clamp(0.0, (w_orig - 1) as f64) as u32;
        let sy = ((uv.y / scale_v) * h_orig as f64)
            .floor()
            .clamp(0.0, (h_orig - 1) as f64) as u32;
        for (ch, c) in color.iter_mut().enumerate() {
            *c = if ch < atlas_o.channels {
                atlas_o.get(sx, sy, ch)
            } else {
                0.0
            };
        }
    }
    let solved = harmonize(&tm, &tm.colors, &boundary)?;
    let harmonized = bake_back(&tm, &solved, &composite)?;

    let seam_after = mesh_seam_color_difference(&fused_uv, &harmonized, &regions.new_faces)?;
    report.put(format!("{prefix}_seam_color_after"), format!("{seam_after:.6}"));

    Ok((fused_uv, Some(harmonized)))
}

fn barycentric_3d(q: &Vec3, a: &Vec3, b: &Vec3, c: &Vec3) -> [f64; 3] {
    let v0 = b - a;
    let v1 = c - a;
    let v2 = q - a;
    let d00 = v0.dot(&v0);
    let d01 = v0.dot(&v1);
    let d11 = v1.dot(&v1);
    let d20 = v2.dot(&v0);
    let d21 = v2.dot(&v1);
    let denom = d00 * d11 - d01 * d01;
    if denom.abs() < 1e-300 {
        return [1.0, 0.0, 0.0];
    }
    let l1 = (d11 * d20 - d01 * d21) / denom;
    let l2 = (d00 * d21 - d01 * d20) / denom;
    [
        (1.0 - l1 - l2).clamp(0.0, 1.0),
        l1.clamp(0.0, 1.0),
        l2.clamp(0.0, 1.0),
    ]
}

fn encode_png(img: &crate::poisson2d::Image) -> Result<Vec<u8>> {
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
    let mut bytes = Vec::new();
    out.write_to(&mut std::io::Cursor::new(&mut bytes), image::ImageFormat::Png)
        .map_err(|e| Error::Image {
            path: "<memory>".into(),
            message: e.to_string(),
        })?;
    Ok(bytes)
}

fn write_bytes(path: PathBuf, bytes: &[u8]) -> Result<()> {
    std::fs::write(&path, bytes).map_err(|e| Error::io(path.display().to_string(), e))
}

// bounds helper shared with the CLI boolean subcommand
pub fn padded_joint_bounds(a: &TriMesh, b: &TriMesh, resolution: usize) -> Aabb {
    let joint = a.bounding_box().merge(&b.bounding_box());
    let extent = joint.max - joint.min;
    let longest = extent.x.max(extent.y).max(extent.z);
    joint.padded(4.0 * longest / resolution as f64)
}
