//! Per-keypoint feature similarity, pooling, and the end-to-end pipeline:
//! clean, sample keypoints, build and crop patches, texture-map, extract
//! features, and pool into the final quality score.
//!
//! Determinism is a hard contract: the keypoint loop runs in parallel but
//! results land in index order and are reduced sequentially, so the score
//! is bit-identical for any thread count.

use rayon::prelude::*;
use serde::Serialize;

use crate::clean::clean;
use crate::error::{Error, Result};
use crate::features::{extract_features, KernelVariant, LaplacianVariant, PatchFeatures};
use crate::mesh::Mesh;
use crate::obj::{parse_obj, wedge_split};
use crate::patch::{build_patch, crop_pair, CropFormula, FaceIncidence};
use crate::sampling::{pair_keypoints, sample_fps, sample_random};
use crate::texture::{decode_texture, TextureImage};
use crate::texturing::{texture_patch, ColorConversion, ColorSpace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Sampler {
    Rs,
    #[default]
    Fps,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum KeypointSource {
    #[default]
    Dist,
    Ref,
}

/// All metric hyperparameters. The defaults reproduce the published
/// configuration: 500 FPS keypoints, tau at 0.5e-3 of the reference
/// bounding box, BT.601 color, and luma-weighted channel pooling.
#[derive(Debug, Clone, Serialize)]
pub struct MetricConfig {
    pub keypoints: usize,
    pub sampler: Sampler,
    pub seed: u64,
    /// Cropping threshold as a fraction of the reference mesh's largest
    /// bounding-box extent.
    pub tau_scale: f64,
    /// Stability constant of the similarity formula.
    pub stability_t: f64,
    /// Channel pooling weights for Y, U, V.
    pub gamma: [f64; 3],
    pub color_space: ColorSpace,
    pub crop_formula: CropFormula,
    pub kernel: KernelVariant,
    pub laplacian: LaplacianVariant,
    pub keypoint_source: KeypointSource,
    /// Worker threads for the keypoint loop; 0 uses the rayon default.
    #[serde(skip)]
    pub threads: usize,
}

impl Default for MetricConfig {
    fn default() -> Self {
        MetricConfig {
            keypoints: 500,
            sampler: Sampler::Fps,
            seed: 0,
            tau_scale: 0.5e-3,
            stability_t: 2.22e-16,
            gamma: [6.0, 1.0, 1.0],
            color_space: ColorSpace::Bt601,
            crop_formula: CropFormula::Shrink,
            kernel: KernelVariant::Gaussian,
            laplacian: LaplacianVariant::Symmetric,
            keypoint_source: KeypointSource::Dist,
            threads: 0,
        }
    }
}

impl MetricConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if self.keypoints == 0 {
            return Err(Error::InvalidParameter("keypoints must be >= 1".into()));
        }
        if !positive(self.tau_scale) {
            return Err(Error::InvalidParameter("tau-scale must be > 0".into()));
        }
        if !positive(self.stability_t) {
            return Err(Error::InvalidParameter("stability constant must be > 0".into()));
        }
        if !self.gamma.into_iter().all(positive) {
            return Err(Error::InvalidParameter("gamma weights must be > 0".into()));
        }
        Ok(())
    }
}

/// Final score and its per-feature components.
#[derive(Debug, Clone, Serialize)]
pub struct QualityScore {
    pub q: f64,
    pub sim_pcs: f64,
    pub sim_dmc: f64,
    pub sim_pca: f64,
    pub sim_pcv: f64,
    pub keypoints_used: usize,
    pub keypoints_skipped: usize,
    pub config_echo: MetricConfig,
}

/// Per-keypoint diagnostics, emitted on request for debugging.
#[derive(Debug, Clone, Serialize)]
pub struct KeypointDetail {
    pub keypoint: usize,
    pub ref_vertex: usize,
    pub dist_vertex: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub skipped: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference: Option<PatchFeatures>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub distorted: Option<PatchFeatures>,
}

/// Similarity of one reference/distorted feature value, in `(0, 1]`.
pub fn feature_similarity(fr: f64, fd: f64, t: f64) -> f64 {
    ((2.0 * fr * fd).abs() + t) / (fr * fr + fd * fd + t)
}

/// Average per-keypoint similarities, summed in keypoint order.
pub fn pool_keypoints(sims: &[f64]) -> Result<f64> {
    if sims.is_empty() {
        return Err(Error::NoUsableKeypoints(0));
    }
    Ok(sims.iter().sum::<f64>() / sims.len() as f64)
}

/// Weighted channel pooling.
pub fn pool_channels(sims: [f64; 3], gamma: [f64; 3]) -> f64 {
    let total: f64 = gamma.iter().sum();
    sims.iter().zip(gamma).map(|(s, g)| s * g).sum::<f64>() / total
}

/// Streams of the ten per-keypoint similarities, in a fixed order.
const N_STREAMS: usize = 10;
const PCS0: usize = 0;
const DMC: usize = 3;
const PCA0: usize = 4;
const PCV0: usize = 7;

fn similarities(fr: &PatchFeatures, fd: &PatchFeatures, t: f64) -> [f64; N_STREAMS] {
    let mut sims = [0.0; N_STREAMS];
    for c in 0..3 {
        sims[PCS0 + c] = feature_similarity(fr.pcs[c], fd.pcs[c], t);
        sims[PCA0 + c] = feature_similarity(fr.pca[c], fd.pca[c], t);
        sims[PCV0 + c] = feature_similarity(fr.pcv[c], fd.pcv[c], t);
    }
    sims[DMC] = feature_similarity(fr.dmc, fd.dmc, t);
    sims
}

/// Score a cleaned reference/distorted pair.
pub fn score_cleaned(
    reference: &Mesh,
    ref_tex: &TextureImage,
    distorted: &Mesh,
    dist_tex: &TextureImage,
    config: &MetricConfig,
) -> Result<QualityScore> {
    score_cleaned_detailed(reference, ref_tex, distorted, dist_tex, config, false)
        .map(|(score, _)| score)
}

/// As [`score_cleaned`], optionally collecting per-keypoint diagnostics.
pub fn score_cleaned_detailed(
    reference: &Mesh,
    ref_tex: &TextureImage,
    distorted: &Mesh,
    dist_tex: &TextureImage,
    config: &MetricConfig,
    collect_details: bool,
) -> Result<(QualityScore, Vec<KeypointDetail>)> {
    config.validate()?;

    let tau = config.tau_scale * reference.bbox_max_extent();
    if !(tau.is_finite() && tau > 0.0) {
        return Err(Error::InvalidParameter(
            "reference mesh has zero spatial extent".into(),
        ));
    }

    let source = match config.keypoint_source {
        KeypointSource::Dist => distorted,
        KeypointSource::Ref => reference,
    };
    let keypoints = match config.sampler {
        Sampler::Rs => sample_random(source, config.keypoints, config.seed)?,
        Sampler::Fps => sample_fps(source, config.keypoints)?,
    };
    let paired = pair_keypoints(&keypoints, reference, distorted)?;

    let ref_incidence = FaceIncidence::build(reference);
    let dist_incidence = FaceIncidence::build(distorted);
    let conversion = ColorConversion::for_space(config.color_space);

    let per_keypoint = |idx: usize| -> KeypointDetail {
        let (ref_vertex, dist_vertex) = paired.pairs[idx];
        let mut detail = KeypointDetail {
            keypoint: idx,
            ref_vertex,
            dist_vertex,
            skipped: None,
            reference: None,
            distorted: None,
        };
        let run = || -> Result<(PatchFeatures, PatchFeatures)> {
            let ref_patch = build_patch(reference, &ref_incidence, ref_vertex)?;
            let dist_patch = build_patch(distorted, &dist_incidence, dist_vertex)?;
            let (ref_patch, dist_patch) =
                crop_pair(&ref_patch, &dist_patch, tau, config.crop_formula)?;
            let ref_tp = texture_patch(ref_patch, ref_tex, &conversion);
            let dist_tp = texture_patch(dist_patch, dist_tex, &conversion);
            let fr = extract_features(&ref_tp, config.kernel, config.laplacian, &conversion)?;
            let fd = extract_features(&dist_tp, config.kernel, config.laplacian, &conversion)?;
            Ok((fr, fd))
        };
        match run() {
            Ok((fr, fd)) => {
                detail.reference = Some(fr);
                detail.distorted = Some(fd);
            }
            Err(e) => detail.skipped = Some(e.to_string()),
        }
        detail
    };

    let details: Vec<KeypointDetail> = if config.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(config.threads)
            .build()
            .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?
            .install(|| (0..paired.pairs.len()).into_par_iter().map(per_keypoint).collect())
    } else {
        (0..paired.pairs.len()).into_par_iter().map(per_keypoint).collect()
    };

    // Sequential, keypoint-ordered reduction: bit-deterministic.
    let mut sums = [0.0; N_STREAMS];
    let mut used = 0usize;
    for detail in &details {
        if let (Some(fr), Some(fd)) = (&detail.reference, &detail.distorted) {
            let sims = similarities(fr, fd, config.stability_t);
            for (acc, s) in sums.iter_mut().zip(sims) {
                *acc += s;
            }
            used += 1;
        }
    }
    if used == 0 {
        return Err(Error::NoUsableKeypoints(details.len()));
    }
    let mut means = [0.0; N_STREAMS];
    for (m, s) in means.iter_mut().zip(sums) {
        *m = s / used as f64;
    }

    let sim_pcs = pool_channels(
        [means[PCS0], means[PCS0 + 1], means[PCS0 + 2]],
        config.gamma,
    );
    let sim_pca = pool_channels(
        [means[PCA0], means[PCA0 + 1], means[PCA0 + 2]],
        config.gamma,
    );
    let sim_pcv = pool_channels(
        [means[PCV0], means[PCV0 + 1], means[PCV0 + 2]],
        config.gamma,
    );
    let sim_dmc = means[DMC];
    let q = (sim_pcs + sim_dmc + sim_pca + sim_pcv) / 4.0;

    let score = QualityScore {
        q,
        sim_pcs,
        sim_dmc,
        sim_pca,
        sim_pcv,
        keypoints_used: used,
        keypoints_skipped: details.len() - used,
        config_echo: config.clone(),
    };
    Ok((score, if collect_details { details } else { Vec::new() }))
}

/// Score two uncleaned meshes: cleans both, then runs the pipeline.
pub fn score_meshes(
    reference: &Mesh,
    ref_tex: &TextureImage,
    distorted: &Mesh,
    dist_tex: &TextureImage,
    config: &MetricConfig,
) -> Result<QualityScore> {
    let (ref_clean, _) = clean(reference)?;
    let (dist_clean, _) = clean(distorted)?;
    score_cleaned(&ref_clean, ref_tex, &dist_clean, dist_tex, config)
}

/// Score a pair straight from OBJ text and texture bytes.
pub fn score_pair(
    ref_obj: &str,
    ref_tex_bytes: &[u8],
    dist_obj: &str,
    dist_tex_bytes: &[u8],
    config: &MetricConfig,
) -> Result<QualityScore> {
    let reference = wedge_split(&parse_obj(ref_obj)?);
    let distorted = wedge_split(&parse_obj(dist_obj)?);
    let ref_tex = decode_texture(ref_tex_bytes)?;
    let dist_tex = decode_texture(dist_tex_bytes)?;
    score_meshes(&reference, &ref_tex, &distorted, &dist_tex, config)
}

/// Score a pair of mesh/texture files from disk.
pub fn score_files(
    ref_mesh: &std::path::Path,
    ref_tex: &std::path::Path,
    dist_mesh: &std::path::Path,
    dist_tex: &std::path::Path,
    config: &MetricConfig,
) -> Result<QualityScore> {
    score_files_detailed(ref_mesh, ref_tex, dist_mesh, dist_tex, config, false)
        .map(|(score, _)| score)
}

/// As [`score_files`], optionally collecting per-keypoint diagnostics.
pub fn score_files_detailed(
    ref_mesh: &std::path::Path,
    ref_tex: &std::path::Path,
    dist_mesh: &std::path::Path,
    dist_tex: &std::path::Path,
    config: &MetricConfig,
    collect_details: bool,
) -> Result<(QualityScore, Vec<KeypointDetail>)> {
    let read = |p: &std::path::Path| std::fs::read(p).map_err(|e| Error::io(p, e));
    let ref_obj = String::from_utf8_lossy(&read(ref_mesh)?).into_owned();
    let dist_obj = String::from_utf8_lossy(&read(dist_mesh)?).into_owned();
    let reference = wedge_split(&parse_obj(&ref_obj)?);
    let distorted = wedge_split(&parse_obj(&dist_obj)?);
    let ref_tex = decode_texture(&read(ref_tex)?)?;
    let dist_tex = decode_texture(&read(dist_tex)?)?;
    let (ref_clean, _) = clean(&reference)?;
    let (dist_clean, _) = clean(&distorted)?;
    score_cleaned_detailed(
        &ref_clean,
        &ref_tex,
        &dist_clean,
        &dist_tex,
        config,
        collect_details,
    )
}
