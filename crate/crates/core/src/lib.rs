//! Full-reference objective quality assessment for static triangle meshes
//! with texture maps.
//!
//! The pipeline cleans both meshes, samples keypoints on the distorted one,
//! builds and crops 1-hop geodesic patches on each side, texture-maps them
//! into per-face pixel clusters, extracts color-smoothness, mean-curvature,
//! and color-statistics features, and pools per-keypoint feature
//! similarities into a quality score in `(0, 1]`. An evaluation harness
//! correlates batch scores against subjective MOS via the standard monotone
//! logistic mapping and PLCC/SRCC/RMSE indicators.

pub mod clean;
pub mod error;
pub mod eval;
pub mod features;
pub mod fixtures;
pub mod manifest;
pub mod mesh;
pub mod obj;
pub mod patch;
pub mod sampling;
pub mod scoring;
pub mod texture;
pub mod texturing;

pub use error::{Error, Result};
pub use mesh::{Mesh, RawMesh};
pub use scoring::{score_files, score_meshes, score_pair, MetricConfig, QualityScore};
pub use texture::TextureImage;
