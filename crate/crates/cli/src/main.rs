//! Command-line frontend: score mesh pairs, clean meshes, batch-score
//! manifests, run the correlation benchmark, and generate the synthetic
//! fixture corpus.
//!
//! Exit codes: 0 success, 2 input error, 3 scoring/metric error, 64 usage.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use geodesic_psim::clean::clean;
use geodesic_psim::error::Error;
use geodesic_psim::eval::{batch_score, evaluate_scores, read_scores_csv, run_benchmark};
use geodesic_psim::features::{KernelVariant, LaplacianVariant};
use geodesic_psim::manifest::{read_manifest_file, write_scores_csv, write_scores_json};
use geodesic_psim::obj::{parse_obj, serialize_obj, wedge_split};
use geodesic_psim::patch::CropFormula;
use geodesic_psim::scoring::{score_files_detailed, KeypointSource, MetricConfig, Sampler};
use geodesic_psim::texturing::ColorSpace;

const EXIT_INPUT: u8 = 2;
const EXIT_SCORING: u8 = 3;
const EXIT_USAGE: u8 = 64;

#[derive(Parser)]
#[command(
    name = "geodesic-psim",
    about = "Full-reference quality metric for textured triangle meshes",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Score a distorted mesh against its reference.
    Score(ScoreArgs),
    /// Clean a mesh: remove duplicated/unreferenced vertices and
    /// duplicated/null faces until a fixed point.
    Clean(CleanArgs),
    /// Score every pair in a manifest, writing a CSV and JSON score table.
    Batch(BatchArgs),
    /// Batch-score a manifest with MOS and report PLCC/SRCC/RMSE.
    Eval(EvalArgs),
    /// Generate the deterministic synthetic fixture corpus.
    Fixtures(FixturesArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum SamplerArg {
    Rs,
    Fps,
}

#[derive(Clone, Copy, ValueEnum)]
enum KeypointSourceArg {
    Dist,
    Ref,
}

#[derive(Clone, Copy, ValueEnum)]
enum ColorSpaceArg {
    Bt601,
    Bt709,
}

#[derive(Clone, Copy, ValueEnum)]
enum CropFormulaArg {
    Shrink,
    Printed,
}

#[derive(Clone, Copy, ValueEnum)]
enum KernelArg {
    Gaussian,
    Printed,
}

#[derive(Clone, Copy, ValueEnum)]
enum LaplacianArg {
    Symmetric,
    Printed,
}

/// Metric hyperparameter flags shared by `score`, `batch`, and `eval`.
#[derive(Args)]
struct MetricFlags {
    /// Number of keypoints to sample.
    #[arg(long, default_value_t = 500)]
    keypoints: usize,

    /// Keypoint sampling method.
    #[arg(long, value_enum, default_value = "fps")]
    sampler: SamplerArg,

    /// Seed for random sampling and any seeded randomness.
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Cropping threshold as a fraction of the reference bounding box.
    #[arg(long, default_value_t = 0.5e-3)]
    tau_scale: f64,

    /// Mesh the keypoints are sampled from.
    #[arg(long, value_enum, default_value = "dist")]
    keypoint_source: KeypointSourceArg,

    /// RGB-to-YUV convention.
    #[arg(long, value_enum, default_value = "bt601")]
    color_space: ColorSpaceArg,

    /// Worker threads for the keypoint loop (0 = automatic).
    #[arg(long, env = "GEODESICPSIM_THREADS", default_value_t = 0)]
    threads: usize,

    /// Patch cropping formula (comparison switch).
    #[arg(long, value_enum, default_value = "shrink", hide = true)]
    crop_formula: CropFormulaArg,

    /// Edge-weight kernel (comparison switch).
    #[arg(long, value_enum, default_value = "gaussian", hide = true)]
    kernel: KernelArg,

    /// Laplacian normalization (comparison switch).
    #[arg(long, value_enum, default_value = "symmetric", hide = true)]
    laplacian: LaplacianArg,
}

impl MetricFlags {
    fn to_config(&self) -> MetricConfig {
        MetricConfig {
            keypoints: self.keypoints,
            sampler: match self.sampler {
                SamplerArg::Rs => Sampler::Rs,
                SamplerArg::Fps => Sampler::Fps,
            },
            seed: self.seed,
            tau_scale: self.tau_scale,
            keypoint_source: match self.keypoint_source {
                KeypointSourceArg::Dist => KeypointSource::Dist,
                KeypointSourceArg::Ref => KeypointSource::Ref,
            },
            color_space: match self.color_space {
                ColorSpaceArg::Bt601 => ColorSpace::Bt601,
                ColorSpaceArg::Bt709 => ColorSpace::Bt709,
            },
            crop_formula: match self.crop_formula {
                CropFormulaArg::Shrink => CropFormula::Shrink,
                CropFormulaArg::Printed => CropFormula::Printed,
            },
            kernel: match self.kernel {
                KernelArg::Gaussian => KernelVariant::Gaussian,
                KernelArg::Printed => KernelVariant::Printed,
            },
            laplacian: match self.laplacian {
                LaplacianArg::Symmetric => LaplacianVariant::Symmetric,
                LaplacianArg::Printed => LaplacianVariant::Printed,
            },
            threads: self.threads,
            ..Default::default()
        }
    }
}

#[derive(Args)]
struct ScoreArgs {
    /// Reference mesh (OBJ).
    #[arg(long = "ref")]
    ref_mesh: PathBuf,

    /// Reference texture map (PNG/JPEG).
    #[arg(long = "ref-tex")]
    ref_tex: PathBuf,

    /// Distorted mesh (OBJ).
    #[arg(long = "dist")]
    dist_mesh: PathBuf,

    /// Distorted texture map (PNG/JPEG).
    #[arg(long = "dist-tex")]
    dist_tex: PathBuf,

    #[command(flatten)]
    metric: MetricFlags,

    /// Print the full QualityScore as JSON.
    #[arg(long, conflicts_with = "plain")]
    json: bool,

    /// Print only the quality score.
    #[arg(long)]
    plain: bool,

    /// Write per-keypoint feature diagnostics to this JSON file.
    #[arg(long)]
    dump_features: Option<PathBuf>,
}

#[derive(Args)]
struct CleanArgs {
    /// Input mesh (OBJ).
    #[arg(long = "in")]
    input: PathBuf,

    /// Cleaned output mesh (OBJ).
    #[arg(long = "out")]
    output: PathBuf,

    /// Also write the cleaning report to this JSON file.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct BatchArgs {
    /// Manifest CSV (`ref_mesh,ref_tex,dist_mesh,dist_tex[,mos]`).
    #[arg(long)]
    manifest: PathBuf,

    /// Output CSV path; a JSON array is written next to it.
    #[arg(long)]
    out: PathBuf,

    #[command(flatten)]
    metric: MetricFlags,
}

#[derive(Args)]
struct EvalArgs {
    /// Manifest CSV with a `mos` column.
    #[arg(long, required_unless_present = "scores_only", conflicts_with = "scores_only")]
    manifest: Option<PathBuf>,

    /// Correlate precomputed scores from a `score,mos[,class]` CSV instead
    /// of scoring meshes.
    #[arg(long)]
    scores_only: Option<PathBuf>,

    /// Report JSON path; the per-row CSV is written next to it.
    #[arg(long)]
    out: Option<PathBuf>,

    #[command(flatten)]
    metric: MetricFlags,
}

#[derive(Args)]
struct FixturesArgs {
    /// Directory the corpus is written into.
    #[arg(long)]
    out: PathBuf,

    /// Seed for the noise textures.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn read_to_string(path: &Path) -> Result<String, Error> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), Error> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn cmd_score(args: &ScoreArgs) -> Result<(), Error> {
    let config = args.metric.to_config();
    let (score, details) = score_files_detailed(
        &args.ref_mesh,
        &args.ref_tex,
        &args.dist_mesh,
        &args.dist_tex,
        &config,
        args.dump_features.is_some(),
    )?;

    if let Some(path) = &args.dump_features {
        write_bytes(path, serde_json::to_string_pretty(&details).unwrap().as_bytes())?;
    }

    if args.json {
        println!("{}", serde_json::to_string_pretty(&score).unwrap());
    } else if args.plain {
        println!("{}", score.q);
    } else {
        println!("Q        = {:.4}  ({})", score.q, score.q);
        println!("sim_pcs  = {:.4}", score.sim_pcs);
        println!("sim_dmc  = {:.4}", score.sim_dmc);
        println!("sim_pca  = {:.4}", score.sim_pca);
        println!("sim_pcv  = {:.4}", score.sim_pcv);
        println!(
            "keypoints: {} used, {} skipped",
            score.keypoints_used, score.keypoints_skipped
        );
    }
    Ok(())
}

fn cmd_clean(args: &CleanArgs) -> Result<(), Error> {
    let text = read_to_string(&args.input)?;
    let mesh = wedge_split(&parse_obj(&text)?);
    let (cleaned, report) = clean(&mesh)?;
    write_bytes(&args.output, serialize_obj(&cleaned).as_bytes())?;
    let report_json = serde_json::to_string_pretty(&report).unwrap();
    if let Some(path) = &args.report {
        write_bytes(path, report_json.as_bytes())?;
    }
    println!("{report_json}");
    Ok(())
}

fn cmd_batch(args: &BatchArgs) -> Result<(), Error> {
    let manifest = read_manifest_file(&args.manifest)?;
    let base = args
        .manifest
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_default();
    let config = args.metric.to_config();
    let rows = batch_score(&manifest, &base, &config);
    write_bytes(&args.out, write_scores_csv(&rows).as_bytes())?;
    let json_path = args.out.with_extension("json");
    write_bytes(&json_path, write_scores_json(&rows).as_bytes())?;
    let failed = rows.iter().filter(|r| r.error.is_some()).count();
    println!(
        "scored {}/{} rows -> {} and {}",
        rows.len() - failed,
        rows.len(),
        args.out.display(),
        json_path.display()
    );
    for row in rows.iter().filter(|r| r.error.is_some()) {
        eprintln!(
            "failed: {} vs {}: {}",
            row.ref_mesh,
            row.dist_mesh,
            row.error.as_deref().unwrap_or("")
        );
    }
    Ok(())
}

fn cmd_eval(args: &EvalArgs) -> Result<(), Error> {
    let report = if let Some(scores_path) = &args.scores_only {
        let (scores, mos, classes) = read_scores_csv(&read_to_string(scores_path)?)?;
        evaluate_scores(&scores, &mos, &classes, Vec::new())?
    } else {
        let manifest_path = args.manifest.as_ref().expect("clap enforces presence");
        let manifest = read_manifest_file(manifest_path)?;
        let base = manifest_path
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_default();
        run_benchmark(&manifest, &base, &args.metric.to_config())?
    };

    println!(
        "n = {}   PLCC = {:.4}   SRCC = {:.4}   RMSE = {:.4}",
        report.n, report.plcc, report.srcc, report.rmse
    );
    for class in &report.per_class {
        println!(
            "  class {}: n = {}  PLCC = {:.4}  SRCC = {:.4}  RMSE = {:.4}",
            class.class, class.n, class.plcc, class.srcc, class.rmse
        );
    }
    for failed in &report.failed_rows {
        eprintln!("failed row {}: {}", failed.row, failed.error);
    }
    if let Some(out) = &args.out {
        write_bytes(out, serde_json::to_string_pretty(&report).unwrap().as_bytes())?;
        write_bytes(&out.with_extension("csv"), report.per_row_csv().as_bytes())?;
    }
    Ok(())
}

fn cmd_fixtures(args: &FixturesArgs) -> Result<(), Error> {
    let files = geodesic_psim::fixtures::generate(&args.out, args.seed)?;
    for file in &files {
        println!("{}", args.out.join(file).display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    let _ = e.print();
                    return ExitCode::SUCCESS;
                }
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };

    let result = match &cli.command {
        Command::Score(args) => cmd_score(args),
        Command::Clean(args) => cmd_clean(args),
        Command::Batch(args) => cmd_batch(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Fixtures(args) => cmd_fixtures(args),
    };

    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_input_error() { EXIT_INPUT } else { EXIT_SCORING })
        }
    }
}
