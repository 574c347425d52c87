//! Core mesh representations.
//!
//! Two layers: [`RawMesh`] mirrors the Wavefront OBJ data model (positions
//! and texture coordinates indexed independently per face corner), while
//! [`Mesh`] is the internal per-vertex-UV form the metric operates on. The
//! conversion between the two is the wedge split in [`crate::obj`].

use nalgebra::{Point3, Vector2};

/// One corner of a raw polygonal face: indices into the position and UV
/// pools, already resolved to 0-based absolute values.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Corner {
    pub position: usize,
    pub uv: usize,
}

/// Mesh as parsed from an OBJ file: corner-indexed UVs, arbitrary polygons.
#[derive(Debug, Clone, Default)]
pub struct RawMesh {
    pub positions: Vec<Point3<f64>>,
    pub uv_pool: Vec<Vector2<f64>>,
    /// Polygonal faces; each has at least three corners.
    pub faces: Vec<Vec<Corner>>,
}

/// Triangle mesh with exactly one texture coordinate per vertex.
///
/// Invariant: `uv.len() == vertices.len()`, and every face index is
/// `< vertices.len()`. Faces may still contain repeated indices or
/// duplicates until [`crate::clean::clean`] has run.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub vertices: Vec<Point3<f64>>,
    pub uv: Vec<Vector2<f64>>,
    pub faces: Vec<[usize; 3]>,
}

impl Mesh {
    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    /// Largest axis extent of the bounding box, or 0.0 for an empty mesh.
    pub fn bbox_max_extent(&self) -> f64 {
        if self.vertices.is_empty() {
            return 0.0;
        }
        let mut min = self.vertices[0];
        let mut max = self.vertices[0];
        for v in &self.vertices[1..] {
            for a in 0..3 {
                min[a] = min[a].min(v[a]);
                max[a] = max[a].max(v[a]);
            }
        }
        (0..3).map(|a| max[a] - min[a]).fold(0.0, f64::max)
    }

    /// Debug-time consistency check of the structural invariants.
    pub fn validate(&self) -> bool {
        self.uv.len() == self.vertices.len()
            && self
                .faces
                .iter()
                .all(|f| f.iter().all(|&i| i < self.vertices.len()))
    }
}
