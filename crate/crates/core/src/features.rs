//! The three per-patch feature families: color smoothness over the patch
//! graph, discrete mean curvature at the patch center, and per-face pixel
//! color statistics.
//!
//! Smoothness uses a Gaussian edge-weight kernel `exp(-len^2 / (2 sigma^2))`
//! with `sigma` the mean length of the patch's face edges, and the
//! symmetric normalized Laplacian `D^{-1/2} (D - W) D^{-1/2}`, whose
//! quadratic form is guaranteed nonnegative. Curvature is the cotangent
//! Laplace-Beltrami operator applied to vertex positions, projected onto
//! the angle-weighted vertex normal, with the mixed Voronoi area as the
//! local averaging region.

use nalgebra::{DMatrix, DVector, Point3, Vector3};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::patch::GeodesicPatch;
use crate::texturing::{ColorConversion, TexturedGeodesicPatch};

/// Edge-weight kernel variants. `Printed` divides the squared length by
/// `2 sigma` (a dimensionally odd form kept only for comparison).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelVariant {
    #[default]
    Gaussian,
    Printed,
}

/// Laplacian normalization variants. `Printed` is the non-symmetric
/// `D^{-1/2} L D^{1/2}` form, kept only for comparison; its quadratic form
/// is not sign-guaranteed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LaplacianVariant {
    #[default]
    Symmetric,
    Printed,
}

/// Cotangent magnitude clamp: bounds needle-triangle blow-ups while leaving
/// every realistic triangle untouched.
const COT_CLAMP: f64 = 1e6;

/// Weighted graph over a patch's vertices (center first), with its
/// normalized Laplacian.
#[derive(Debug, Clone)]
pub struct PatchGraph {
    pub weights: DMatrix<f64>,
    pub degrees: DVector<f64>,
    pub normalized: DMatrix<f64>,
    pub sigma: f64,
    /// Unique undirected face edges as local index pairs, `i < j`.
    pub edges: Vec<(usize, usize)>,
}

/// The ten scalars extracted from one textured patch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PatchFeatures {
    pub pcs: [f64; 3],
    pub dmc: f64,
    pub pca: [f64; 3],
    pub pcv: [f64; 3],
}

pub fn gaussian_weight(dist2: f64, sigma: f64, kernel: KernelVariant) -> f64 {
    match kernel {
        KernelVariant::Gaussian => (-dist2 / (2.0 * sigma * sigma)).exp(),
        KernelVariant::Printed => (-dist2 / (2.0 * sigma)).exp(),
    }
}

/// Unique undirected edges of the patch's faces (spokes and rim alike).
fn face_edges(patch: &GeodesicPatch) -> Vec<(usize, usize)> {
    let mut edges: Vec<(usize, usize)> = patch
        .faces
        .iter()
        .flat_map(|f| {
            [(f[0], f[1]), (f[1], f[2]), (f[2], f[0])]
                .into_iter()
                .filter(|(a, b)| a != b)
                .map(|(a, b)| (a.min(b), a.max(b)))
        })
        .collect();
    edges.sort_unstable();
    edges.dedup();
    edges
}

/// Build the patch graph: Gaussian weights on face edges, degree-normalized
/// Laplacian.
pub fn build_patch_graph(
    patch: &GeodesicPatch,
    kernel: KernelVariant,
    laplacian: LaplacianVariant,
) -> PatchGraph {
    let n = patch.positions.len();
    let edges = face_edges(patch);

    let mean_len: f64 = edges
        .iter()
        .map(|&(a, b)| (patch.positions[a] - patch.positions[b]).norm())
        .sum::<f64>()
        / edges.len() as f64;
    // A fully collapsed patch has zero mean edge length; unit weights keep
    // the graph well-defined.
    let sigma = if mean_len > 0.0 { mean_len } else { 1.0 };

    let mut weights = DMatrix::zeros(n, n);
    for &(a, b) in &edges {
        let d2 = (patch.positions[a] - patch.positions[b]).norm_squared();
        let w = gaussian_weight(d2, sigma, kernel);
        weights[(a, b)] = w;
        weights[(b, a)] = w;
    }

    let degrees = DVector::from_iterator(n, weights.row_iter().map(|r| r.sum()));
    let mut normalized = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let lap = if i == j { degrees[i] } else { 0.0 } - weights[(i, j)];
            normalized[(i, j)] = match laplacian {
                LaplacianVariant::Symmetric => lap / (degrees[i].sqrt() * degrees[j].sqrt()),
                LaplacianVariant::Printed => lap * (degrees[j] / degrees[i]).sqrt(),
            };
        }
    }

    PatchGraph {
        weights,
        degrees,
        normalized,
        sigma,
        edges,
    }
}

/// `f' L' f` for a per-vertex signal.
pub fn quadratic_form(graph: &PatchGraph, signal: &[f64]) -> f64 {
    let f = DVector::from_column_slice(signal);
    f.dot(&(&graph.normalized * &f))
}

/// Patch color smoothness per YUV channel: the normalized-Laplacian
/// quadratic form of the vertex colors over the effective pixel count.
pub fn patch_color_smoothness(graph: &PatchGraph, tp: &TexturedGeodesicPatch) -> [f64; 3] {
    let mut out = [0.0; 3];
    let mut channel = vec![0.0; tp.vertex_colors.len()];
    for (c, slot) in out.iter_mut().enumerate() {
        for (i, yuv) in tp.vertex_colors.iter().enumerate() {
            channel[i] = yuv[c];
        }
        *slot = quadratic_form(graph, &channel) / tp.total_pixels as f64;
    }
    out
}

fn clamped_cot(a: Vector3<f64>, b: Vector3<f64>) -> f64 {
    let cross = a.cross(&b).norm();
    let dot = a.dot(&b);
    if cross <= 0.0 {
        if dot == 0.0 {
            0.0
        } else {
            dot.signum() * COT_CLAMP
        }
    } else {
        (dot / cross).clamp(-COT_CLAMP, COT_CLAMP)
    }
}

/// Per-face mixed Voronoi area contribution at the face's center corner
/// (Meyer et al. discrete differential-geometry operators).
fn mixed_area_contribution(c: Point3<f64>, p: Point3<f64>, q: Point3<f64>) -> f64 {
    let ep = p - c;
    let eq = q - c;
    let area = ep.cross(&eq).norm() / 2.0;
    if area <= 0.0 {
        return 0.0;
    }
    let cos_c = ep.dot(&eq);
    let cos_p = (c - p).dot(&(q - p));
    let cos_q = (c - q).dot(&(p - q));
    if cos_c >= 0.0 && cos_p >= 0.0 && cos_q >= 0.0 {
        // Voronoi region of the non-obtuse triangle.
        let cot_p = clamped_cot(c - p, q - p);
        let cot_q = clamped_cot(c - q, p - q);
        (eq.norm_squared() * cot_p + ep.norm_squared() * cot_q) / 8.0
    } else if cos_c < 0.0 {
        area / 2.0
    } else {
        area / 4.0
    }
}

/// Discrete mean curvature at the patch center.
///
/// Cot-LBO of the position signal, projected on the angle-weighted vertex
/// normal; boundary edges use their single available cotangent. Errors on
/// vanishing Voronoi area or undefined normal so the caller can skip the
/// keypoint.
pub fn patch_mean_curvature(patch: &GeodesicPatch) -> Result<f64> {
    let center = patch.positions[0];
    let n_vertices = patch.positions.len();

    let mut cot_sums = vec![0.0; n_vertices];
    let mut area = 0.0;
    let mut normal_sum = Vector3::zeros();

    for face in &patch.faces {
        // Rotate so the center is first, preserving winding.
        let pivot = face.iter().position(|&v| v == 0).expect("fan face");
        let a = face[(pivot + 1) % 3];
        let b = face[(pivot + 2) % 3];
        let pa = patch.positions[a];
        let pb = patch.positions[b];

        // Opposite angles: the angle at b faces edge (center, a) and the
        // angle at a faces edge (center, b).
        cot_sums[a] += clamped_cot(center - pb, pa - pb);
        cot_sums[b] += clamped_cot(center - pa, pb - pa);

        area += mixed_area_contribution(center, pa, pb);

        let cross = (pa - center).cross(&(pb - center));
        let cross_norm = cross.norm();
        if cross_norm > 0.0 {
            let ea = pa - center;
            let eb = pb - center;
            let cos = (ea.dot(&eb) / (ea.norm() * eb.norm())).clamp(-1.0, 1.0);
            normal_sum += (cross / cross_norm) * cos.acos();
        }
    }

    if area <= 1e-30 {
        return Err(Error::DegenerateFeature(
            "patch center has vanishing Voronoi area".into(),
        ));
    }
    let normal_norm = normal_sum.norm();
    if normal_norm <= 0.0 {
        return Err(Error::DegenerateFeature(
            "patch center normal is undefined".into(),
        ));
    }
    let normal = normal_sum / normal_norm;

    let mut lbo = Vector3::zeros();
    for (j, &w) in cot_sums.iter().enumerate().skip(1) {
        lbo += w * (center - patch.positions[j]);
    }
    lbo /= 2.0 * area;

    Ok(lbo.dot(&normal).abs() / 2.0)
}

/// Pixel-count-weighted per-face color means and population variances,
/// pooled over the patch.
pub fn patch_color_stats(
    tp: &TexturedGeodesicPatch,
    conversion: &ColorConversion,
) -> ([f64; 3], [f64; 3]) {
    let mut mean_acc = [0.0; 3];
    let mut var_acc = [0.0; 3];
    let mut weight_sum = 0.0;

    for face in &tp.face_pixels {
        // Canonical accumulation order: stats are exactly invariant to how
        // the caller happened to order each face's pixels.
        let mut pixels = face.clone();
        pixels.sort_unstable_by_key(|p| (p.y, p.x));
        let pixels = &pixels;
        let m = pixels.len() as f64;
        let mut mean = [0.0; 3];
        for p in pixels {
            let yuv = conversion.apply(p.rgb);
            for c in 0..3 {
                mean[c] += yuv[c];
            }
        }
        for c in &mut mean {
            *c /= m;
        }
        let mut var = [0.0; 3];
        for p in pixels {
            let yuv = conversion.apply(p.rgb);
            for c in 0..3 {
                let d = yuv[c] - mean[c];
                var[c] += d * d;
            }
        }
        for c in 0..3 {
            mean_acc[c] += mean[c] * m;
            var_acc[c] += var[c]; // already m * (variance)
        }
        weight_sum += m;
    }

    let mut pca = [0.0; 3];
    let mut pcv = [0.0; 3];
    for c in 0..3 {
        pca[c] = mean_acc[c] / weight_sum;
        pcv[c] = var_acc[c] / weight_sum;
    }
    (pca, pcv)
}

/// Extract all three feature families from one textured patch.
pub fn extract_features(
    tp: &TexturedGeodesicPatch,
    kernel: KernelVariant,
    laplacian: LaplacianVariant,
    conversion: &ColorConversion,
) -> Result<PatchFeatures> {
    let graph = build_patch_graph(&tp.patch, kernel, laplacian);
    let pcs = patch_color_smoothness(&graph, tp);
    let dmc = patch_mean_curvature(&tp.patch)?;
    let (pca, pcv) = patch_color_stats(tp, conversion);
    Ok(PatchFeatures { pcs, dmc, pca, pcv })
}
