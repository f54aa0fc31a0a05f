//! Backend interfaces standing in for the generative models, plus the
//! deterministic filesystem stub that serves pre-staged assets.
//!
//! Every request is content-addressed: the manifest key is
//! `<kind>:<role>:<hex sha256 of the request material>`, where the material
//! concatenates the input bytes and instruction separated by NUL. The stub
//! never fabricates output; an unstaged key is a hard miss naming the exact
//! manifest entry that would satisfy it.
//!
//! Manifest format (`manifest.txt` in the backend root): one
//! `key = relative/path` per line, `#` comments. Image-edit requests take
//! two entries, `<key>:edited` and `<key>:region`.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::mesh::{load_mesh, TriMesh};
use crate::tex_harmon::TextureAtlas;

/// 2D editor contract: an edited full image plus the edited-region image.
pub trait ImageEditBackend {
    fn edit(&self, reference: &[u8], instruction: &str, role: &str) -> Result<(Vec<u8>, Vec<u8>)>;
}

/// Image-to-mesh contract. Meshes must arrive in the pipeline's normalized
/// unit-cube frame.
pub trait MeshGenBackend {
    fn generate(&self, image: &[u8], role: &str) -> Result<TriMesh>;
}

/// Mesh-to-texture contract: colors for the given mesh's UV layout.
pub trait TextureGenBackend {
    fn texture(&self, mesh_bytes: &[u8], prompt: &str, role: &str) -> Result<TextureAtlas>;
}

pub struct Backends {
    pub image_edit: Box<dyn ImageEditBackend>,
    pub mesh_gen: Box<dyn MeshGenBackend>,
    pub texture_gen: Box<dyn TextureGenBackend>,
}

pub fn request_key(kind: &str, role: &str, parts: &[&[u8]]) -> String {
    let mut hasher = Sha256::new();
    for (i, part) in parts.iter().enumerate() {
        if i > 0 {
            hasher.update([0u8]);
        }
        hasher.update(part);
    }
    format!("{kind}:{role}:{:x}", hasher.finalize())
}

/// Filesystem-backed stub shared by all three interfaces. Deterministic by
/// construction; every served request lands in the audit log.
pub struct FilesystemBackend {
    root: PathBuf,
    manifest: HashMap<String, PathBuf>,
    audit: Mutex<Vec<String>>,
}

impl FilesystemBackend {
    pub fn open(root: impl Into<PathBuf>) -> Result<std::sync::Arc<Self>> {
        let root = root.into();
        let manifest_path = root.join("manifest.txt");
        let text = std::fs::read_to_string(&manifest_path)
            .map_err(|e| Error::io(manifest_path.display().to_string(), e))?;
        let mut manifest = HashMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, path)) = line.split_once('=') else {
                return Err(Error::format(
                    manifest_path.display().to_string(),
                    idx + 1,
                    "expected `key = path`",
                ));
            };
            manifest.insert(key.trim().to_string(), root.join(path.trim()));
        }
        Ok(std::sync::Arc::new(FilesystemBackend {
            root,
            manifest,
            audit: Mutex::new(Vec::new()),
        }))
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Chronological log of every request served.
    pub fn audit_log(&self) -> Vec<String> {
        self.audit.lock().unwrap().clone()
    }

    fn lookup(&self, key: &str) -> Result<&PathBuf> {
        self.manifest
            .get(key)
            .ok_or_else(|| Error::BackendMiss { key: key.into() })
    }

    fn record(&self, key: &str) {
        self.audit.lock().unwrap().push(key.to_string());
    }

    fn read_bytes(&self, key: &str) -> Result<Vec<u8>> {
        let path = self.lookup(key)?;
        std::fs::read(path).map_err(|e| Error::io(path.display().to_string(), e))
    }
}

impl ImageEditBackend for std::sync::Arc<FilesystemBackend> {
    fn edit(&self, reference: &[u8], instruction: &str, role: &str) -> Result<(Vec<u8>, Vec<u8>)> {
        let ref_hash = Sha256::digest(reference);
        let key = request_key("image-edit", role, &[&ref_hash, instruction.as_bytes()]);
        self.record(&key);
        let edited = self.read_bytes(&format!("{key}:edited"))?;
        let region = self.read_bytes(&format!("{key}:region"))?;
        Ok((edited, region))
    }
}

impl MeshGenBackend for std::sync::Arc<FilesystemBackend> {
    fn generate(&self, image: &[u8], role: &str) -> Result<TriMesh> {
        let img_hash = Sha256::digest(image);
        let key = request_key("mesh-gen", role, &[&img_hash]);
        self.record(&key);
        let path = self.lookup(&key)?.clone();
        load_mesh(&path).map_err(|e| Error::BackendAsset {
            context: format!("mesh-gen asset {}", path.display()),
            source: Box::new(e),
        })
    }
}

impl TextureGenBackend for std::sync::Arc<FilesystemBackend> {
    fn texture(&self, mesh_bytes: &[u8], prompt: &str, role: &str) -> Result<TextureAtlas> {
        let mesh_hash = Sha256::digest(mesh_bytes);
        let key = request_key("texture-gen", role, &[&mesh_hash, prompt.as_bytes()]);
        self.record(&key);
        let path = self.lookup(&key)?.clone();
        TextureAtlas::load(&path).map_err(|e| Error::BackendAsset {
            context: format!("texture-gen asset {}", path.display()),
            source: Box::new(e),
        })
    }
}

/// Bundles one filesystem backend behind all three interfaces.
pub fn filesystem_backend(root: impl Into<PathBuf>) -> Result<(Backends, std::sync::Arc<FilesystemBackend>)> {
    let fs = FilesystemBackend::open(root)?;
    Ok((
        Backends {
            image_edit: Box::new(fs.clone()),
            mesh_gen: Box::new(fs.clone()),
            texture_gen: Box::new(fs.clone()),
        },
        fs,
    ))
}
