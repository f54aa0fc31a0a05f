//! Pipeline configuration: a plain `key = value` text format with `#`
//! comments. Unknown keys warn; missing or invalid required keys are
//! aggregated into one error.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::geo_fusion::FusionConfig;

/// Editing task selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    Insert,
    Delete,
    Replace,
    Drag,
}

impl std::str::FromStr for Task {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "insert" => Ok(Task::Insert),
            "delete" => Ok(Task::Delete),
            "replace" => Ok(Task::Replace),
            "drag" => Ok(Task::Drag),
            other => Err(format!(
                "unknown task `{other}` (expected insert|delete|replace|drag)"
            )),
        }
    }
}

impl std::fmt::Display for Task {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Task::Insert => "insert",
            Task::Delete => "delete",
            Task::Replace => "replace",
            Task::Drag => "drag",
        };
        f.write_str(s)
    }
}

/// Everything a workflow run needs. Distances are in the normalized
/// unit-cube frame that meshes are mapped to on ingest.
#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub task: Task,
    pub mesh: PathBuf,
    /// Optional texture atlas alongside the mesh.
    pub atlas: Option<PathBuf>,
    pub instruction: String,
    /// Second instruction for the delete phase of `replace`.
    pub instruction_delete: String,
    /// Drag-arrow annotation file (drag task).
    pub drag_annotation: Option<PathBuf>,
    pub texture_prompt: String,
    pub backend_root: PathBuf,
    pub output_dir: PathBuf,
    pub eps0: f64,
    pub eps1: f64,
    pub grid_resolution: usize,
    /// Seam band in grid cells (tau = cells * spacing).
    pub seam_tau_cells: f64,
    /// New/preserved classification threshold in grid cells.
    pub classify_delta_cells: f64,
    /// Resolution of the new-region texture chart.
    pub atlas_size: u32,
    pub seed: u64,
    pub fusion: FusionConfig,
    /// Import an externally produced Boolean mesh instead of the SDF path.
    pub boolean_import: Option<PathBuf>,
    /// Rigidly align the reference mesh onto the merged mesh (ICP) before
    /// fusion. Off by default: backends emit meshes in a shared frame.
    pub align_reference: bool,
    /// Warnings accumulated while loading (unknown keys).
    pub warnings: Vec<String>,
}

impl PipelineConfig {
    pub fn new(task: Task, mesh: impl Into<PathBuf>) -> Self {
        PipelineConfig {
            task,
            mesh: mesh.into(),
            atlas: None,
            instruction: String::new(),
            instruction_delete: String::new(),
            drag_annotation: None,
            texture_prompt: String::new(),
            backend_root: PathBuf::from("backends"),
            output_dir: PathBuf::from("out"),
            eps0: 0.08,
            eps1: 0.05,
            grid_resolution: 128,
            seam_tau_cells: 2.0,
            classify_delta_cells: 2.0,
            atlas_size: 256,
            seed: 0,
            fusion: FusionConfig::default(),
            boolean_import: None,
            align_reference: false,
            warnings: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.eps1 >= self.eps0 {
            problems.push(format!(
                "eps1 ({}) must be < eps0 ({})",
                self.eps1, self.eps0
            ));
        }
        if self.grid_resolution < 8 {
            problems.push(format!(
                "grid_resolution must be >= 8, got {}",
                self.grid_resolution
            ));
        }
        if let Err(e) = self.fusion.validate() {
            problems.push(e.to_string());
        }
        if self.task == Task::Drag && self.drag_annotation.is_none() {
            problems.push("drag task requires drag_annotation".into());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems))
        }
    }

    /// Echo of every setting for the run report, in a fixed order.
    pub fn echo(&self) -> Vec<(String, String)> {
        let mut out = vec![
            ("task".into(), self.task.to_string()),
            ("mesh".into(), self.mesh.display().to_string()),
            (
                "atlas".into(),
                self.atlas
                    .as_ref()
                    .map_or("none".into(), |p| p.display().to_string()),
            ),
            ("instruction".into(), self.instruction.clone()),
            ("backend_root".into(), self.backend_root.display().to_string()),
            ("output_dir".into(), self.output_dir.display().to_string()),
            ("eps0".into(), format!("{}", self.eps0)),
            ("eps1".into(), format!("{}", self.eps1)),
            ("grid_resolution".into(), format!("{}", self.grid_resolution)),
            ("seam_tau_cells".into(), format!("{}", self.seam_tau_cells)),
            (
                "classify_delta_cells".into(),
                format!("{}", self.classify_delta_cells),
            ),
            ("atlas_size".into(), format!("{}", self.atlas_size)),
            ("seed".into(), format!("{}", self.seed)),
            ("views".into(), format!("{}", self.fusion.view_count)),
            ("view_resolution".into(), format!("{}", self.fusion.resolution)),
            ("iterations".into(), format!("{}", self.fusion.iterations)),
            ("learning_rate".into(), format!("{}", self.fusion.learning_rate)),
            ("momentum".into(), format!("{}", self.fusion.momentum)),
            ("lambda_smooth".into(), format!("{}", self.fusion.lambda_smooth)),
            (
                "remesh_interval".into(),
                format!("{}", self.fusion.remesh_interval),
            ),
            (
                "reblend_interval".into(),
                format!("{}", self.fusion.reblend_interval),
            ),
            ("edge_min".into(), format!("{}", self.fusion.edge_min)),
            ("edge_max".into(), format!("{}", self.fusion.edge_max)),
        ];
        if let Some(p) = &self.boolean_import {
            out.push(("boolean_import".into(), p.display().to_string()));
        }
        if self.align_reference {
            out.push(("align_reference".into(), "true".into()));
        }
        out
    }
}

/// Loads a config file, applying defaults for every absent optional key.
/// All problems are reported together.
pub fn load_config(path: impl AsRef<Path>) -> Result<PipelineConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::io(path.display().to_string(), e))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut config = parse_config(&text, base)?;
    // the backend root is overridable for CI fixture swapping
    if let Ok(root) = std::env::var("CRAFTMESH_BACKEND_ROOT") {
        config.backend_root = PathBuf::from(root);
    }
    Ok(config)
}

fn set_num<T: std::str::FromStr>(
    value: &str,
    line: usize,
    problems: &mut Vec<String>,
    slot: &mut T,
) {
    match value.parse() {
        Ok(v) => *slot = v,
        Err(_) => problems.push(format!("line {line}: bad numeric value `{value}`")),
    }
}

pub fn parse_config(text: &str, base_dir: &Path) -> Result<PipelineConfig> {
    let mut problems: Vec<String> = Vec::new();
    let mut warnings: Vec<String> = Vec::new();

    let mut task: Option<Task> = None;
    let mut mesh: Option<PathBuf> = None;
    let mut config = PipelineConfig::new(Task::Insert, "");

    let resolve = |base: &Path, v: &str| -> PathBuf {
        let p = PathBuf::from(v);
        if p.is_absolute() {
            p
        } else {
            base.join(p)
        }
    };

    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            problems.push(format!("line {}: expected `key = value`", idx + 1));
            continue;
        };
        let key = key.trim();
        let value = value.trim();
        match key {
            "task" => match value.parse() {
                Ok(t) => task = Some(t),
                Err(e) => problems.push(format!("line {}: {e}", idx + 1)),
            },
            "mesh" => mesh = Some(resolve(base_dir, value)),
            "atlas" => config.atlas = Some(resolve(base_dir, value)),
            "instruction" => config.instruction = value.to_string(),
            "instruction_delete" => config.instruction_delete = value.to_string(),
            "drag_annotation" => config.drag_annotation = Some(resolve(base_dir, value)),
            "texture_prompt" => config.texture_prompt = value.to_string(),
            "backend_root" => config.backend_root = resolve(base_dir, value),
            "output_dir" => config.output_dir = resolve(base_dir, value),
            "boolean_import" => config.boolean_import = Some(resolve(base_dir, value)),
            "align_reference" => match value.parse() {
                Ok(v) => config.align_reference = v,
                Err(_) => problems.push(format!("line {}: bad boolean `{value}`", idx + 1)),
            },
            "eps0" => set_num(value, idx + 1, &mut problems, &mut config.eps0),
            "eps1" => set_num(value, idx + 1, &mut problems, &mut config.eps1),
            "grid_resolution" => set_num(value, idx + 1, &mut problems, &mut config.grid_resolution),
            "seam_tau_cells" => set_num(value, idx + 1, &mut problems, &mut config.seam_tau_cells),
            "classify_delta_cells" => {
                set_num(value, idx + 1, &mut problems, &mut config.classify_delta_cells)
            }
            "atlas_size" => set_num(value, idx + 1, &mut problems, &mut config.atlas_size),
            "seed" => set_num(value, idx + 1, &mut problems, &mut config.seed),
            "views" => set_num(value, idx + 1, &mut problems, &mut config.fusion.view_count),
            "view_resolution" => set_num(value, idx + 1, &mut problems, &mut config.fusion.resolution),
            "iterations" => set_num(value, idx + 1, &mut problems, &mut config.fusion.iterations),
            "learning_rate" => set_num(value, idx + 1, &mut problems, &mut config.fusion.learning_rate),
            "momentum" => set_num(value, idx + 1, &mut problems, &mut config.fusion.momentum),
            "lambda_smooth" => set_num(value, idx + 1, &mut problems, &mut config.fusion.lambda_smooth),
            "remesh_interval" => {
                set_num(value, idx + 1, &mut problems, &mut config.fusion.remesh_interval)
            }
            "reblend_interval" => {
                set_num(value, idx + 1, &mut problems, &mut config.fusion.reblend_interval)
            }
            "edge_min" => set_num(value, idx + 1, &mut problems, &mut config.fusion.edge_min),
            "edge_max" => set_num(value, idx + 1, &mut problems, &mut config.fusion.edge_max),
            other => warnings.push(format!("line {}: unknown key `{other}` ignored", idx + 1)),
        }
    }

    match task {
        Some(t) => config.task = t,
        None => problems.push("missing required key `task`".into()),
    }
    match mesh {
        Some(m) => config.mesh = m,
        None => problems.push("missing required key `mesh`".into()),
    }
    if !problems.is_empty() {
        return Err(Error::Config(problems));
    }
    config.warnings = warnings;
    config.validate()?;
    Ok(config)
}
