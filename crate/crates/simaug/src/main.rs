use std::collections::HashSet;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use simaug::config::read_config;
use simaug::core::genmodel::{Domain, VideoRecord};
use simaug::core::harness::{build_disjoint_split, build_loso_split, evaluate, HeldOut, SplitSpec};
use simaug::core::learn::{train, FeatureConfig, Strategy, TrainConfig};
use simaug::core::motion::{positions_to_local_rotations, write_bvh, Skeleton};
use simaug::core::randomize::Range;
use simaug::dataset::{class_list, generate, load_domain, regenerate, MANIFEST};
use simaug::formats::{
    parse_positions, read_manifest, read_weights, write_confusion_csv, write_loss_csv,
    write_report_csv, write_weights,
};
use simaug::images::{frame_file_name, write_frame, ImageFormat};
use simaug::run::RunRecord;

#[derive(Parser)]
#[command(
    name = "simaug",
    version,
    about = "Randomized action-video simulation, training and evaluation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render a dataset described by a config file.
    Generate(GenerateArgs),
    /// Re-render one manifest entry.
    Regenerate(RegenerateArgs),
    /// Turn captured joint positions into a BVH clip.
    ConvertMotion(ConvertArgs),
    /// Build a train/test split over a manifest.
    Split(SplitArgs),
    /// Train a classifier with one of the transfer strategies.
    Train(TrainArgs),
    /// Score trained weights on the test side of a split.
    Eval(EvalArgs),
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Overrides the config's master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// synthetic | pseudo-real | real
    #[arg(long)]
    domain: Option<String>,
    /// Write PPM frames instead of PNG.
    #[arg(long)]
    ppm: bool,
}

#[derive(Args)]
struct RegenerateArgs {
    /// Dataset root holding manifest.jsonl and dataset.json.
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    video: String,
    /// Directory for the re-rendered frames.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ConvertArgs {
    #[arg(long)]
    positions: PathBuf,
    /// Built-in topology name (kinect25).
    #[arg(long)]
    topology: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SplitArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Scene id to leave out.
    #[arg(long, conflicts_with_all = ["hold_azimuth", "hold_texture", "hold_humanoid"])]
    loso: Option<String>,
    /// Held-out azimuth band `min:max` in degrees; repeatable.
    #[arg(long, value_parser = parse_band)]
    hold_azimuth: Vec<Range>,
    /// Comma-separated texture ids.
    #[arg(long, value_delimiter = ',')]
    hold_texture: Vec<String>,
    /// Comma-separated humanoid ids.
    #[arg(long, value_delimiter = ',')]
    hold_humanoid: Vec<String>,
    /// Output JSON; defaults to split.json next to the manifest.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    /// real-only | synthetic-only | joint | finetune | adversarial
    #[arg(long)]
    strategy: String,
    #[arg(long)]
    synthetic: Option<PathBuf>,
    #[arg(long)]
    real: Option<PathBuf>,
    #[arg(long)]
    split: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    batch: Option<usize>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    weights: PathBuf,
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    split: PathBuf,
    #[arg(long)]
    report: PathBuf,
    /// Confusion matrix CSV; defaults to the report path with a
    /// `.confusion.csv` suffix.
    #[arg(long)]
    confusion: Option<PathBuf>,
}

fn parse_band(s: &str) -> Result<Range, String> {
    let (a, b) = s
        .split_once(':')
        .or_else(|| s.split_once(".."))
        .ok_or_else(|| format!("expected min:max, got {s:?}"))?;
    let num = |t: &str| {
        t.trim()
            .parse::<f64>()
            .map_err(|_| format!("{t:?} is not a number"))
    };
    let (lo, hi) = (num(a)?, num(b)?);
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(format!("band {s:?} must satisfy min < max"));
    }
    Ok(Range::new(lo, hi))
}

fn root_of(manifest: &Path) -> &Path {
    manifest
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."))
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(suffix);
    path.with_file_name(name)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn cmd_generate(a: GenerateArgs) -> Result<()> {
    let mut config = read_config(&a.config)?;
    if let Some(seed) = a.seed {
        config.generation.master_seed = seed;
    }
    if let Some(d) = &a.domain {
        config.generation.domain = Domain::parse(d)
            .with_context(|| format!("unknown domain {d:?}; use synthetic, pseudo-real or real"))?;
    }
    if a.ppm {
        config.image_format = ImageFormat::Ppm;
    }
    let records = generate(&config, &a.out)?;
    let mut run = RunRecord::new("generate", &config, config.generation.master_seed)?;
    run.outputs.push(a.out.join(MANIFEST).display().to_string());
    run.write(&a.out)?;
    println!("wrote {} videos to {}", records.len(), a.out.display());
    Ok(())
}

fn cmd_regenerate(a: RegenerateArgs) -> Result<()> {
    let (record, clip) = regenerate(&a.dataset, &a.video)?;
    std::fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    for (&i, fb) in clip.indices.iter().zip(&clip.frames) {
        write_frame(
            &a.out.join(frame_file_name(i, ImageFormat::Png)),
            fb,
            ImageFormat::Png,
        )?;
    }
    println!(
        "re-rendered {} ({} frames) into {}",
        record.video_id,
        clip.frames.len(),
        a.out.display()
    );
    Ok(())
}

fn cmd_convert(a: ConvertArgs) -> Result<()> {
    let topology = Skeleton::builtin(&a.topology)
        .with_context(|| format!("unknown topology {:?}; available: kinect25", a.topology))?;
    let text = std::fs::read_to_string(&a.positions)
        .with_context(|| format!("reading {}", a.positions.display()))?;
    let seq = parse_positions(&text, topology.len())
        .with_context(|| format!("parsing {}", a.positions.display()))?;
    let clip = positions_to_local_rotations(&topology, &seq.frames, seq.frame_time)?;
    write_text(&a.out, &write_bvh(&clip)?)?;
    #[derive(Serialize)]
    struct Conf<'a> {
        positions: &'a Path,
        topology: &'a str,
    }
    RunRecord::new(
        "convert-motion",
        &Conf {
            positions: &a.positions,
            topology: &a.topology,
        },
        0,
    )?
    .write(&a.out)?;
    println!("wrote {} frames to {}", clip.len(), a.out.display());
    Ok(())
}

fn cmd_split(a: SplitArgs) -> Result<()> {
    let records =
        read_manifest(&a.manifest).with_context(|| format!("reading {}", a.manifest.display()))?;
    let split = match &a.loso {
        Some(scene) => build_loso_split(&records, scene)?,
        None => {
            let held = HeldOut {
                azimuth_bands: a.hold_azimuth.clone(),
                texture_ids: a.hold_texture.clone(),
                humanoid_ids: a.hold_humanoid.clone(),
            };
            if held == HeldOut::default() {
                bail!("give --loso <scene> or at least one of --hold-azimuth, --hold-texture, --hold-humanoid");
            }
            build_disjoint_split(&records, &held)?
        }
    };
    let out = a
        .out
        .unwrap_or_else(|| root_of(&a.manifest).join("split.json"));
    write_text(&out, &serde_json::to_string_pretty(&split)?)?;
    RunRecord::new("split", &split.criterion, 0)?.write(&out)?;
    println!(
        "train {} / test {} / excluded {} -> {}",
        split.train.len(),
        split.test.len(),
        split.excluded.len(),
        out.display()
    );
    Ok(())
}

fn read_split(path: &Path) -> Result<SplitSpec> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing split {}", path.display()))
}

fn select(records: &[VideoRecord], keep: impl Fn(&str) -> bool) -> Vec<&VideoRecord> {
    records.iter().filter(|r| keep(&r.video_id)).collect()
}

fn cmd_train(a: TrainArgs) -> Result<()> {
    let strategy = Strategy::parse(&a.strategy).with_context(|| {
        let names: Vec<&str> = Strategy::ALL.iter().map(|s| s.as_str()).collect();
        format!(
            "unknown strategy {:?}; available: {}",
            a.strategy,
            names.join(", ")
        )
    })?;
    let split = read_split(&a.split)?;
    let train_ids: HashSet<&str> = split.train.iter().map(String::as_str).collect();
    let test_ids: HashSet<&str> = split.test.iter().map(String::as_str).collect();
    let load = |p: &Option<PathBuf>| -> Result<Option<Vec<VideoRecord>>> {
        p.as_ref()
            .map(|p| read_manifest(p).with_context(|| format!("reading {}", p.display())))
            .transpose()
    };
    let (real_records, syn_records) = (load(&a.real)?, load(&a.synthetic)?);
    let real_sel = real_records
        .as_deref()
        .map(|r| select(r, |id| train_ids.contains(id)));
    // a synthetic manifest never contributes test videos, even when it is the real one
    let syn_sel = syn_records
        .as_deref()
        .map(|r| select(r, |id| !test_ids.contains(id)));
    let classes = class_list(real_sel.iter().chain(&syn_sel).flatten().copied());
    let features = FeatureConfig::default();
    let real = match (&a.real, &real_sel) {
        (Some(p), Some(sel)) if !sel.is_empty() => {
            Some(load_domain(root_of(p), sel, &classes, &features)?)
        }
        (Some(p), _) => bail!(
            "no training videos of split {} in {}",
            a.split.display(),
            p.display()
        ),
        _ => None,
    };
    let syn = match (&a.synthetic, &syn_sel) {
        (Some(p), Some(sel)) if !sel.is_empty() => {
            Some(load_domain(root_of(p), sel, &classes, &features)?)
        }
        (Some(p), _) => bail!("no usable videos in {}", p.display()),
        _ => None,
    };
    let defaults = TrainConfig::default();
    let config = TrainConfig {
        strategy,
        epochs: a.epochs.unwrap_or(defaults.epochs),
        finetune_epochs: a.epochs.unwrap_or(defaults.finetune_epochs),
        seed: a.seed.unwrap_or(defaults.seed),
        lr: a.lr.unwrap_or(defaults.lr),
        lr_finetune: a.lr.map_or(defaults.lr_finetune, |lr| lr / 10.0),
        lambda_adv: a.lambda.unwrap_or(defaults.lambda_adv),
        batch_size: a.batch.unwrap_or(defaults.batch_size),
        ..defaults
    };
    let outcome = train(syn.as_ref(), real.as_ref(), &config)?;
    write_weights(&a.out, &outcome.model)
        .with_context(|| format!("writing {}", a.out.display()))?;
    let loss = with_suffix(&a.out, ".loss.csv");
    write_text(&loss, &write_loss_csv(&outcome.curve))?;
    let mut run = RunRecord::new("train", &config, config.seed)?;
    run.outputs = vec![a.out.display().to_string(), loss.display().to_string()];
    run.write(&a.out)?;
    let last = outcome.curve.last().map_or(f64::NAN, |r| r.l_cls);
    println!(
        "{}: {} classes, {} steps, final L_cls {last:.4} -> {}",
        strategy.as_str(),
        classes.len(),
        outcome.curve.len(),
        a.out.display()
    );
    Ok(())
}

fn cmd_eval(a: EvalArgs) -> Result<()> {
    let model =
        read_weights(&a.weights).with_context(|| format!("reading {}", a.weights.display()))?;
    let split = read_split(&a.split)?;
    let test_ids: HashSet<&str> = split.test.iter().map(String::as_str).collect();
    let records =
        read_manifest(&a.manifest).with_context(|| format!("reading {}", a.manifest.display()))?;
    let sel = select(&records, |id| test_ids.contains(id));
    if sel.is_empty() {
        bail!(
            "no test videos of split {} in {}",
            a.split.display(),
            a.manifest.display()
        );
    }
    let data = load_domain(
        root_of(&a.manifest),
        &sel,
        &model.classes,
        &FeatureConfig::default(),
    )?;
    let metrics = evaluate(&model, &data)?;
    write_text(&a.report, &write_report_csv(&model.classes, &metrics))?;
    let confusion = a
        .confusion
        .unwrap_or_else(|| with_suffix(&a.report, ".confusion.csv"));
    write_text(&confusion, &write_confusion_csv(&model.classes, &metrics))?;
    #[derive(Serialize)]
    struct Conf<'a> {
        weights: &'a Path,
        manifest: &'a Path,
        split: &'a SplitSpec,
        undefined_f1: Vec<&'a str>,
    }
    let undefined = model
        .classes
        .iter()
        .zip(&metrics.per_class)
        .filter(|(_, c)| c.f1_undefined)
        .map(|(n, _)| n.as_str())
        .collect();
    let mut run = RunRecord::new(
        "eval",
        &Conf {
            weights: &a.weights,
            manifest: &a.manifest,
            split: &split,
            undefined_f1: undefined,
        },
        0,
    )?;
    run.outputs = vec![
        a.report.display().to_string(),
        confusion.display().to_string(),
    ];
    run.write(&a.report)?;
    println!(
        "accuracy {:.4}, macro F1 {:.4} over {} videos -> {}",
        metrics.accuracy,
        metrics.macro_f1(),
        metrics.total(),
        a.report.display()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate(a) => cmd_generate(a),
        Command::Regenerate(a) => cmd_regenerate(a),
        Command::ConvertMotion(a) => cmd_convert(a),
        Command::Split(a) => cmd_split(a),
        Command::Train(a) => cmd_train(a),
        Command::Eval(a) => cmd_eval(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
