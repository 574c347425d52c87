//! Benchmark harness: batch scoring against a manifest, the monotone
//! logistic mapping between objective scores and MOS, and the PLCC, SRCC,
//! and RMSE indicators.

use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::manifest::Manifest;
use crate::scoring::{score_files, MetricConfig};

/// Monotone 4-parameter logistic `m(x) = (a - b)/(1 + exp(-(x - c)/d)) + b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogisticParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl LogisticParams {
    pub fn map(&self, x: f64) -> f64 {
        (self.a - self.b) / (1.0 + (-(x - self.c) / self.d).exp()) + self.b
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.a, self.b, self.c, self.d]
    }
}

fn sse(params: &[f64; 4], scores: &[f64], mos: &[f64]) -> f64 {
    let p = LogisticParams {
        a: params[0],
        b: params[1],
        c: params[2],
        d: params[3],
    };
    scores
        .iter()
        .zip(mos)
        .map(|(&x, &y)| {
            let e = p.map(x) - y;
            e * e
        })
        .sum()
}

/// Derivative-free Nelder-Mead minimization: at most `max_iter` iterations
/// or until the simplex function values agree to `rel_tol`.
fn nelder_mead<F: Fn(&[f64; 4]) -> f64>(
    objective: F,
    init: [f64; 4],
    max_iter: usize,
    rel_tol: f64,
) -> [f64; 4] {
    const DIM: usize = 4;
    let mut simplex: Vec<[f64; 4]> = Vec::with_capacity(DIM + 1);
    simplex.push(init);
    for i in 0..DIM {
        let mut v = init;
        v[i] += if v[i].abs() > 1e-12 { 0.05 * v[i].abs() } else { 0.00025 };
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(&objective).collect();

    for _ in 0..max_iter {
        let mut order: Vec<usize> = (0..=DIM).collect();
        order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
        let best = order[0];
        let worst = order[DIM];
        let second_worst = order[DIM - 1];
        if (values[worst] - values[best]).abs()
            <= rel_tol * (values[best].abs() + rel_tol)
        {
            break;
        }

        let mut centroid = [0.0; 4];
        for &i in &order[..DIM] {
            for k in 0..DIM {
                centroid[k] += simplex[i][k] / DIM as f64;
            }
        }
        let blend = |alpha: f64| {
            let mut p = [0.0; 4];
            for k in 0..DIM {
                p[k] = centroid[k] + alpha * (simplex[worst][k] - centroid[k]);
            }
            p
        };

        let reflected = blend(-1.0);
        let f_reflected = objective(&reflected);
        if f_reflected < values[best] {
            let expanded = blend(-2.0);
            let f_expanded = objective(&expanded);
            if f_expanded < f_reflected {
                simplex[worst] = expanded;
                values[worst] = f_expanded;
            } else {
                simplex[worst] = reflected;
                values[worst] = f_reflected;
            }
        } else if f_reflected < values[second_worst] {
            simplex[worst] = reflected;
            values[worst] = f_reflected;
        } else {
            let contracted = if f_reflected < values[worst] {
                blend(-0.5)
            } else {
                blend(0.5)
            };
            let f_contracted = objective(&contracted);
            if f_contracted < values[worst].min(f_reflected) {
                simplex[worst] = contracted;
                values[worst] = f_contracted;
            } else {
                // Shrink toward the best vertex.
                let anchor = simplex[best];
                for i in 0..=DIM {
                    if i == best {
                        continue;
                    }
                    for k in 0..DIM {
                        simplex[i][k] = anchor[k] + 0.5 * (simplex[i][k] - anchor[k]);
                    }
                    values[i] = objective(&simplex[i]);
                }
            }
        }
    }

    let best = (0..=DIM)
        .min_by(|&i, &j| values[i].total_cmp(&values[j]))
        .unwrap();
    simplex[best]
}

/// Fit the monotone logistic mapping from scores to MOS by least squares.
///
/// Initial parameters are data driven (`a` = max MOS, `b` = min MOS,
/// `c` = median score, `d` = score range / 4), refined by Nelder-Mead for
/// up to 500 iterations or a relative tolerance of 1e-10.
pub fn fit_logistic(scores: &[f64], mos: &[f64]) -> Result<LogisticParams> {
    if scores.len() != mos.len() {
        return Err(Error::FitFailed("score/MOS length mismatch".into()));
    }
    if scores.len() < 3 {
        return Err(Error::FitFailed(format!(
            "need at least 3 samples, got {}",
            scores.len()
        )));
    }
    let s_min = scores.iter().cloned().fold(f64::INFINITY, f64::min);
    let s_max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if s_max <= s_min {
        return Err(Error::FitFailed("scores are all equal".into()));
    }
    let mut sorted = scores.to_vec();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    let mos_max = mos.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mos_min = mos.iter().cloned().fold(f64::INFINITY, f64::min);

    let init = [mos_max, mos_min, median, (s_max - s_min) / 4.0];
    let best = nelder_mead(|p| sse(p, scores, mos), init, 500, 1e-10);
    Ok(LogisticParams {
        a: best[0],
        b: best[1],
        c: best[2],
        d: best[3],
    })
}

/// Average ranks (1-based), ties averaged.
fn average_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = avg;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (&a, &b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::CorrelationUndefined(
            "zero variance in a score or MOS vector".into(),
        ));
    }
    // sqrt of the product: exact 1.0 for identical vectors (rank vectors
    // in particular), where separate square roots lose an ulp.
    Ok(sxy / (sxx * syy).sqrt())
}

/// PLCC, SRCC, and RMSE of mapped scores against MOS.
pub fn correlations(mapped: &[f64], mos: &[f64]) -> Result<(f64, f64, f64)> {
    if mapped.len() != mos.len() || mapped.len() < 2 {
        return Err(Error::CorrelationUndefined(
            "need at least 2 paired samples".into(),
        ));
    }
    let plcc = pearson(mapped, mos)?;
    let srcc = pearson(&average_ranks(mapped), &average_ranks(mos))?;
    let rmse = (mapped
        .iter()
        .zip(mos)
        .map(|(&m, &y)| (m - y) * (m - y))
        .sum::<f64>()
        / mapped.len() as f64)
        .sqrt();
    Ok((plcc, srcc, rmse))
}

#[derive(Debug, Clone, Serialize)]
pub struct EvalRow {
    pub score: f64,
    pub mos: f64,
    pub mapped_score: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub class: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FailedRow {
    pub row: usize,
    pub error: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassReport {
    pub class: String,
    pub n: usize,
    pub plcc: f64,
    pub srcc: f64,
    pub rmse: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EvalReport {
    pub plcc: f64,
    pub srcc: f64,
    pub rmse: f64,
    pub logistic_params: [f64; 4],
    pub n: usize,
    pub per_row: Vec<EvalRow>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub failed_rows: Vec<FailedRow>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub per_class: Vec<ClassReport>,
}

impl EvalReport {
    /// Per-row table as CSV text.
    pub fn per_row_csv(&self) -> String {
        let mut out = String::from("score,mos,mapped_score,class\n");
        for row in &self.per_row {
            out.push_str(&format!(
                "{},{},{},{}\n",
                row.score,
                row.mos,
                row.mapped_score,
                row.class.as_deref().unwrap_or("")
            ));
        }
        out
    }
}

/// Correlate already-computed scores against MOS: fit the logistic
/// mapping, compute indicators, and break down per class where labeled.
pub fn evaluate_scores(
    scores: &[f64],
    mos: &[f64],
    classes: &[Option<String>],
    failed_rows: Vec<FailedRow>,
) -> Result<EvalReport> {
    if scores.len() < 3 {
        return Err(Error::Eval(format!(
            "need at least 3 scored rows with MOS, got {}",
            scores.len()
        )));
    }
    let s_min = scores.iter().cloned().fold(f64::INFINITY, f64::min);
    let s_max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if s_max <= s_min {
        return Err(Error::CorrelationUndefined(
            "scores have zero variance".into(),
        ));
    }

    let params = fit_logistic(scores, mos)?;
    let mapped: Vec<f64> = scores.iter().map(|&s| params.map(s)).collect();
    let (plcc, srcc, rmse) = correlations(&mapped, mos)?;

    let per_row: Vec<EvalRow> = scores
        .iter()
        .zip(mos)
        .zip(&mapped)
        .zip(classes)
        .map(|(((&score, &mos), &mapped_score), class)| EvalRow {
            score,
            mos,
            mapped_score,
            class: class.clone(),
        })
        .collect();

    // Per-class breakdown with its own fit, mirroring how per-class
    // correlation columns are usually produced. Classes that cannot be
    // fitted (too few rows, degenerate scores) are skipped.
    let mut labels: Vec<String> = classes.iter().flatten().cloned().collect();
    labels.sort();
    labels.dedup();
    let mut per_class = Vec::new();
    for label in labels {
        let idx: Vec<usize> = (0..scores.len())
            .filter(|&i| classes[i].as_deref() == Some(label.as_str()))
            .collect();
        let cs: Vec<f64> = idx.iter().map(|&i| scores[i]).collect();
        let cm: Vec<f64> = idx.iter().map(|&i| mos[i]).collect();
        let result = fit_logistic(&cs, &cm).and_then(|p| {
            let mapped: Vec<f64> = cs.iter().map(|&s| p.map(s)).collect();
            correlations(&mapped, &cm)
        });
        if let Ok((plcc, srcc, rmse)) = result {
            per_class.push(ClassReport {
                class: label,
                n: idx.len(),
                plcc,
                srcc,
                rmse,
            });
        }
    }

    Ok(EvalReport {
        plcc,
        srcc,
        rmse,
        logistic_params: params.as_array(),
        n: scores.len(),
        per_row,
        failed_rows,
        per_class,
    })
}

/// Resolve a manifest path against the manifest's own directory.
fn resolve(base: &Path, p: &str) -> std::path::PathBuf {
    let path = Path::new(p);
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        base.join(path)
    }
}

/// Score one manifest row; `base` anchors relative paths.
pub fn score_manifest_row(
    row: &crate::manifest::ManifestRow,
    base: &Path,
    config: &MetricConfig,
) -> Result<crate::scoring::QualityScore> {
    score_files(
        &resolve(base, &row.ref_mesh),
        &resolve(base, &row.ref_tex),
        &resolve(base, &row.dist_mesh),
        &resolve(base, &row.dist_tex),
        config,
    )
}

/// Score every manifest row in parallel without correlating; failures are
/// recorded per row instead of aborting.
pub fn batch_score(
    manifest: &Manifest,
    base: &Path,
    config: &MetricConfig,
) -> Vec<crate::manifest::ScoredRow> {
    manifest
        .rows
        .par_iter()
        .map(|row| {
            let (score, error) = match score_manifest_row(row, base, config) {
                Ok(s) => (Some(s.q), None),
                Err(e) => (None, Some(e.to_string())),
            };
            crate::manifest::ScoredRow {
                ref_mesh: row.ref_mesh.clone(),
                ref_tex: row.ref_tex.clone(),
                dist_mesh: row.dist_mesh.clone(),
                dist_tex: row.dist_tex.clone(),
                mos: row.mos,
                score,
                error,
            }
        })
        .collect()
}

/// Batch-score each manifest row, fit the logistic mapping, and report the
/// correlation indicators. Rows that fail to score are excluded and
/// reported; more than 50% failures aborts the run.
pub fn run_benchmark(
    manifest: &Manifest,
    base: &Path,
    config: &MetricConfig,
) -> Result<EvalReport> {
    if manifest.rows.is_empty() {
        return Err(Error::Eval("manifest has no rows".into()));
    }

    let outcomes: Vec<std::result::Result<f64, String>> = manifest
        .rows
        .par_iter()
        .map(|row| {
            if row.mos.is_none() {
                return Err("row has no MOS".to_string());
            }
            score_manifest_row(row, base, config)
                .map(|s| s.q)
                .map_err(|e| e.to_string())
        })
        .collect();

    let mut scores = Vec::new();
    let mut mos = Vec::new();
    let mut classes = Vec::new();
    let mut failed_rows = Vec::new();
    for (i, outcome) in outcomes.iter().enumerate() {
        match outcome {
            Ok(q) => {
                scores.push(*q);
                mos.push(manifest.rows[i].mos.unwrap());
                classes.push(manifest.rows[i].class.clone());
            }
            Err(e) => failed_rows.push(FailedRow {
                row: i + 1,
                error: e.clone(),
            }),
        }
    }
    if failed_rows.len() * 2 > manifest.rows.len() {
        return Err(Error::Eval(format!(
            "{} of {} rows failed to score",
            failed_rows.len(),
            manifest.rows.len()
        )));
    }

    evaluate_scores(&scores, &mos, &classes, failed_rows)
}

/// Parsed columns of a precomputed-score CSV: scores, MOS, class labels.
pub type ScoreColumns = (Vec<f64>, Vec<f64>, Vec<Option<String>>);

/// Parse a precomputed-score CSV with header `score,mos[,class]`.
pub fn read_scores_csv(text: &str) -> Result<ScoreColumns> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| Error::Manifest(format!("unreadable header: {e}")))?
        .clone();
    let score_col = headers
        .iter()
        .position(|h| h == "score")
        .ok_or_else(|| Error::Manifest("missing column `score`".into()))?;
    let mos_col = headers
        .iter()
        .position(|h| h == "mos")
        .ok_or_else(|| Error::Manifest("missing column `mos`".into()))?;
    let class_col = headers.iter().position(|h| h == "class");

    let mut scores = Vec::new();
    let mut mos = Vec::new();
    let mut classes = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| Error::ManifestRow {
            row,
            msg: e.to_string(),
        })?;
        let parse = |col: usize, what: &str| -> Result<f64> {
            record
                .get(col)
                .unwrap_or("")
                .parse()
                .map_err(|_| Error::ManifestRow {
                    row,
                    msg: format!("non-numeric {what}"),
                })
        };
        scores.push(parse(score_col, "score")?);
        mos.push(parse(mos_col, "mos")?);
        classes.push(
            class_col
                .and_then(|c| record.get(c))
                .filter(|s| !s.is_empty())
                .map(String::from),
        );
    }
    Ok((scores, mos, classes))
}
