//! Geometry-processing toolkit for seamless mesh editing: signed-distance
//! Boolean merging, Poisson-guided geometric fusion of an edited region into
//! an original mesh, and Poisson texture harmonization in the atlas domain.
//! Generative steps are isolated behind file-backed backend interfaces.

pub mod error;
pub mod fixtures;
pub mod geo_fusion;
pub mod geom;
pub mod linalg;
pub mod mesh;
pub mod metrics;
pub mod pipeline;
pub mod poisson2d;
pub mod raster;
pub mod sdf_boolean;
pub mod tex_harmon;

pub use error::{Error, Result};
