use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use posefair::ingestion::{parse_detections, parse_ground_truth, serialize_detections, FilterConfig};
use posefair::pose::AngleThresholds;
use posefair::report::{emit, emit_significance_csv, summary_markdown, Format};
use posefair::sweep::{annotate_dataset, dataset_summary, run_sweep, SweepConfig};
use posefair::synth::{generate_scene, plant_detections, SynthSpec};
use posefair::Error;

#[derive(Parser)]
#[command(name = "posefair", version, about = "Pose- and occlusion-aware fairness evaluation for pedestrian detectors")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate one or more detectors against ground truth.
    Evaluate(EvaluateArgs),
    /// Print the attribute distribution of a ground-truth file.
    Summarize(SummarizeArgs),
    /// Generate a synthetic scene with planted detections.
    Synth(SynthArgs),
}

#[derive(Args)]
struct LabelArgs {
    /// Instances must be strictly taller than this (px).
    #[arg(long, default_value_t = 60.0)]
    min_height: f64,
    /// Instances at least this tall are "large" (px).
    #[arg(long, default_value_t = 110.0)]
    size_split: f64,
    /// Knee flexion threshold (degrees).
    #[arg(long, default_value_t = 12.0)]
    gamma: f64,
    /// Hip-ankle separation threshold (degrees).
    #[arg(long, default_value_t = 10.0)]
    alpha: f64,
    /// Elbow bend threshold (degrees).
    #[arg(long, default_value_t = 90.0)]
    elbow: f64,
}

impl LabelArgs {
    fn angles(&self) -> AngleThresholds {
        AngleThresholds {
            knee_flexion_deg: self.gamma,
            hip_ankle_sep_deg: self.alpha,
            elbow_bend_deg: self.elbow,
        }
    }

    fn filter(&self) -> FilterConfig {
        FilterConfig {
            min_height_px: self.min_height,
            size_split_px: self.size_split,
        }
    }
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    gt: PathBuf,
    /// Detection files, comma separated; each file stem names a detector.
    #[arg(long, value_delimiter = ',', required = true)]
    det: Vec<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// csv, md or json.
    #[arg(long, default_value = "csv")]
    format: String,
    /// Confidence thresholds, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = [0.0, 0.25, 0.5, 0.75])]
    thresholds: Vec<f64>,
    #[arg(long, default_value_t = 0.5)]
    iou: f64,
    #[command(flatten)]
    labels: LabelArgs,
    /// Run sequentially instead of on the thread pool.
    #[arg(long)]
    sequential: bool,
}

#[derive(Args)]
struct SummarizeArgs {
    #[arg(long)]
    gt: PathBuf,
    /// md or json.
    #[arg(long, default_value = "md")]
    format: String,
    #[command(flatten)]
    labels: LabelArgs,
}

#[derive(Args)]
struct SynthArgs {
    /// Scene specification (JSON).
    #[arg(long)]
    spec: PathBuf,
    /// Overrides the seed in the spec.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
    /// Generate near-threshold templates.
    #[arg(long)]
    edge: bool,
}

fn read(path: &Path) -> Result<Vec<u8>, Error> {
    fs::read(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), Error> {
    fs::write(path, bytes).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn create_dir(path: &Path) -> Result<(), Error> {
    fs::create_dir_all(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn evaluate(args: EvaluateArgs) -> Result<(), Error> {
    let format: Format = args.format.parse()?;
    let gt = parse_ground_truth(&read(&args.gt)?)?;
    let mut reports = Vec::new();
    for (i, path) in args.det.iter().enumerate() {
        let dets = parse_detections(&read(path)?)?;
        let mut name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| format!("detector{i}"));
        if reports.iter().any(|r: &posefair::sweep::FairnessReport| r.detector_name == name) {
            name = format!("{name}_{i}");
        }
        let cfg = SweepConfig {
            thresholds: args.thresholds.clone(),
            iou_threshold: args.iou,
            angles: args.labels.angles(),
            filter: args.labels.filter(),
            detector_name: name,
            parallel: !args.sequential,
        };
        reports.push(run_sweep(&gt, &dets, &cfg)?);
    }

    create_dir(&args.out)?;
    write(&args.out.join(format!("report.{}", format.extension())), &emit(&reports, format))?;
    if format == Format::Csv {
        write(&args.out.join("report_significance.csv"), &emit_significance_csv(&reports))?;
    }
    Ok(())
}

fn summarize(args: SummarizeArgs) -> Result<(), Error> {
    let gt = parse_ground_truth(&read(&args.gt)?)?;
    let filter = args.labels.filter();
    filter.validate()?;
    let angles = args.labels.angles();
    angles.validate()?;
    let summary = dataset_summary(&annotate_dataset(&gt, &angles, &filter)?);
    match args.format.parse()? {
        Format::Json => println!("{}", serde_json::to_string_pretty(&summary).expect("summary serializes")),
        _ => print!("{}", summary_markdown(&summary)),
    }
    Ok(())
}

fn synth(args: SynthArgs) -> Result<(), Error> {
    let raw = read(&args.spec)?;
    let mut spec: SynthSpec = serde_json::from_slice(&raw).map_err(|e| Error::Parse {
        source_name: args.spec.display().to_string(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    spec.edge |= args.edge;
    let scene = generate_scene(&spec)?;
    let dets = plant_detections(&scene, &spec)?;

    create_dir(&args.out)?;
    write(&args.out.join("gt.json"), &scene.gt_json())?;
    write(&args.out.join("det.json"), &serialize_detections(&dets))?;
    write(&args.out.join("manifest.json"), &scene.manifest_json())?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Evaluate(a) => evaluate(a),
        Command::Summarize(a) => summarize(a),
        Command::Synth(a) => synth(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_input_error() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
