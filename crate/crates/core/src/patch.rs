//! 1-hop geodesic patches and the two-step pair cropping.
//!
//! A patch is the fan of faces incident to a keypoint vertex together with
//! the vertex's edge-connected neighbors. Cropping rescales neighbor
//! offsets about the center (a similarity transform, so angles and unit
//! directions are preserved): step 1 shrinks the distorted patch down to
//! the reference patch's mean radius, step 2 caps both patches at the
//! threshold `tau`. Texture coordinates shrink by the same factors so the
//! pseudo-neighbors keep an affine-consistent parameterization.

use nalgebra::{Point3, Vector2};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::mesh::Mesh;

/// Which cropping formula to apply.
///
/// `Shrink` moves every neighbor to `center + (v - center)/ratio`, a
/// uniform contraction toward the center. `Printed` applies
/// `(v - center)/ratio + v`, which expands the patch instead; it exists
/// only for side-by-side comparison and is not the default.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CropFormula {
    #[default]
    Shrink,
    Printed,
}

/// Measurements taken while cropping a patch pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CropDiagnostics {
    /// Mean neighbor-to-center distance of the reference patch (pre-crop).
    pub ref_mean_distance: f64,
    /// Mean neighbor-to-center distance of the distorted patch (pre-crop).
    pub dist_mean_distance: f64,
    /// `dist_mean_distance / ref_mean_distance` (pre-crop).
    pub size_ratio: f64,
    /// This patch's mean distance over `tau`, measured after step 1.
    pub tau_ratio: f64,
    pub step1_applied: bool,
    pub step2_applied: bool,
}

/// 1-hop geodesic patch: local index 0 is the center, indices `1..` are the
/// neighbors in ascending order of their source-mesh vertex index.
#[derive(Debug, Clone, PartialEq)]
pub struct GeodesicPatch {
    pub positions: Vec<Point3<f64>>,
    pub uv: Vec<Vector2<f64>>,
    /// Local-index triangles; every face contains local vertex 0.
    pub faces: Vec<[usize; 3]>,
    pub crop: Option<CropDiagnostics>,
}

impl GeodesicPatch {
    pub fn center(&self) -> Point3<f64> {
        self.positions[0]
    }

    pub fn center_uv(&self) -> Vector2<f64> {
        self.uv[0]
    }

    pub fn neighbor_count(&self) -> usize {
        self.positions.len() - 1
    }

    /// Mean Euclidean distance from the neighbors to the center.
    pub fn mean_neighbor_distance(&self) -> f64 {
        let center = self.center();
        let sum: f64 = self.positions[1..]
            .iter()
            .map(|p| (p - center).norm())
            .sum();
        sum / self.neighbor_count() as f64
    }
}

/// Vertex-to-incident-face adjacency in CSR layout, built once per mesh so
/// patches for many keypoints can be assembled without rescanning faces.
pub struct FaceIncidence {
    offsets: Vec<usize>,
    face_ids: Vec<usize>,
}

impl FaceIncidence {
    pub fn build(mesh: &Mesh) -> Self {
        let mut counts = vec![0usize; mesh.vertex_count()];
        for face in &mesh.faces {
            for &v in face {
                counts[v] += 1;
            }
        }
        let mut offsets = Vec::with_capacity(counts.len() + 1);
        let mut acc = 0;
        offsets.push(0);
        for &c in &counts {
            acc += c;
            offsets.push(acc);
        }
        let mut cursor = offsets.clone();
        let mut face_ids = vec![0usize; acc];
        for (f, face) in mesh.faces.iter().enumerate() {
            for &v in face {
                face_ids[cursor[v]] = f;
                cursor[v] += 1;
            }
        }
        FaceIncidence { offsets, face_ids }
    }

    pub fn faces_of(&self, vertex: usize) -> &[usize] {
        &self.face_ids[self.offsets[vertex]..self.offsets[vertex + 1]]
    }
}

/// Build the 1-hop geodesic patch around `center`.
pub fn build_patch(mesh: &Mesh, incidence: &FaceIncidence, center: usize) -> Result<GeodesicPatch> {
    let incident = incidence.faces_of(center);
    if incident.is_empty() {
        return Err(Error::Patch(format!(
            "vertex {center} has no incident faces"
        )));
    }

    let mut neighbor_ids: Vec<usize> = incident
        .iter()
        .flat_map(|&f| mesh.faces[f])
        .filter(|&v| v != center)
        .collect();
    neighbor_ids.sort_unstable();
    neighbor_ids.dedup();

    let mut positions = Vec::with_capacity(neighbor_ids.len() + 1);
    let mut uv = Vec::with_capacity(neighbor_ids.len() + 1);
    positions.push(mesh.vertices[center]);
    uv.push(mesh.uv[center]);
    for &v in &neighbor_ids {
        positions.push(mesh.vertices[v]);
        uv.push(mesh.uv[v]);
    }

    let local_of = |v: usize| -> usize {
        if v == center {
            0
        } else {
            1 + neighbor_ids.binary_search(&v).unwrap()
        }
    };
    let faces: Vec<[usize; 3]> = incident
        .iter()
        .map(|&f| {
            let [a, b, c] = mesh.faces[f];
            [local_of(a), local_of(b), local_of(c)]
        })
        .collect();

    Ok(GeodesicPatch {
        positions,
        uv,
        faces,
        crop: None,
    })
}

fn rescale(patch: &mut GeodesicPatch, ratio: f64, formula: CropFormula) {
    let center = patch.center();
    let center_uv = patch.center_uv();
    for i in 1..patch.positions.len() {
        match formula {
            CropFormula::Shrink => {
                patch.positions[i] = center + (patch.positions[i] - center) / ratio;
                patch.uv[i] = center_uv + (patch.uv[i] - center_uv) / ratio;
            }
            CropFormula::Printed => {
                let p = patch.positions[i];
                let t = patch.uv[i];
                patch.positions[i] = p + (p - center) / ratio;
                patch.uv[i] = t + (t - center_uv) / ratio;
            }
        }
    }
}

/// Apply the two-step cropping to a reference/distorted patch pair.
pub fn crop_pair(
    reference: &GeodesicPatch,
    distorted: &GeodesicPatch,
    tau: f64,
    formula: CropFormula,
) -> Result<(GeodesicPatch, GeodesicPatch)> {
    if tau <= 0.0 || !tau.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "cropping threshold must be positive and finite, got {tau}"
        )));
    }

    let mut reference = reference.clone();
    let mut distorted = distorted.clone();
    let ref_mean = reference.mean_neighbor_distance();
    let dist_mean = distorted.mean_neighbor_distance();

    // Step 1: the distorted patch may not be larger than the reference one.
    // Fully collapsed patches (zero mean) cannot be rescaled meaningfully.
    let size_ratio = if ref_mean > 0.0 && dist_mean > 0.0 {
        dist_mean / ref_mean
    } else {
        1.0
    };
    let step1 = size_ratio > 1.0;
    if step1 {
        rescale(&mut distorted, size_ratio, formula);
    }

    // Step 2: cap each patch's (recomputed) mean distance at tau.
    let step2 = |patch: &mut GeodesicPatch| -> (f64, bool) {
        let mean = patch.mean_neighbor_distance();
        let ratio = mean / tau;
        let applied = ratio > 1.0;
        if applied {
            rescale(patch, ratio, formula);
        }
        (ratio, applied)
    };
    let (ref_tau_ratio, ref_step2) = step2(&mut reference);
    let (dist_tau_ratio, dist_step2) = step2(&mut distorted);

    reference.crop = Some(CropDiagnostics {
        ref_mean_distance: ref_mean,
        dist_mean_distance: dist_mean,
        size_ratio,
        tau_ratio: ref_tau_ratio,
        step1_applied: false,
        step2_applied: ref_step2,
    });
    distorted.crop = Some(CropDiagnostics {
        ref_mean_distance: ref_mean,
        dist_mean_distance: dist_mean,
        size_ratio,
        tau_ratio: dist_tau_ratio,
        step1_applied: step1,
        step2_applied: dist_step2,
    });

    Ok((reference, distorted))
}
