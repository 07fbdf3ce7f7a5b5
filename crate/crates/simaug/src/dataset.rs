//! Dataset generation on disk, single-video regeneration and feature
//! loading from manifests.
//!
//! Layout under the output root:
//!
//! ```text
//! dataset.json                 generation settings
//! manifest.jsonl               one record per video
//! videos/<id>/frames/frame_00000.png
//! videos/<id>/masks/frame_00000.png
//! videos/<id>/joints.txt       lines `frame joint u v visible`
//! ```

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use simaug_core::genmodel::{
    plan_video, procedural_library, MotionLibrary, NamedClip, VideoPaths, VideoRecord,
};
use simaug_core::learn::{
    extract_features, subsample_indices, DomainDataset, Example, FeatureConfig, FrameView,
};
use simaug_core::motion::{parse_bvh_bytes, rescale_to_topology};
use simaug_core::randomize::humanoid_topology;
use simaug_core::render::{render_clip, render_frames, RenderedClip, SceneDescription};

use crate::config::{DatasetConfig, LibrarySource};
use crate::formats::{read_manifest, write_manifest};
use crate::images::{
    frame_file_name, read_frame, write_frame, write_mask, ImageFormat, TextureCache,
};

pub const MANIFEST: &str = "manifest.jsonl";
pub const PARTIAL_MANIFEST: &str = "manifest.partial.jsonl";
pub const DATASET_CONFIG: &str = "dataset.json";

/// Reads `<dir>/<action>/<clip>.bvh`; clip ids are file stems.
pub fn read_library_dir(dir: &Path) -> Result<MotionLibrary> {
    let mut library = MotionLibrary::default();
    let mut actions: Vec<PathBuf> = std::fs::read_dir(dir)
        .with_context(|| format!("reading motion library {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    actions.sort();
    for action_dir in actions {
        let action = action_dir
            .file_name()
            .unwrap_or_default()
            .to_string_lossy()
            .into_owned();
        let mut files: Vec<PathBuf> = std::fs::read_dir(&action_dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("bvh")))
            .collect();
        files.sort();
        for f in files {
            let bytes = std::fs::read(&f).with_context(|| format!("reading {}", f.display()))?;
            let clip =
                parse_bvh_bytes(&bytes).with_context(|| format!("parsing {}", f.display()))?;
            let id = f
                .file_stem()
                .unwrap_or_default()
                .to_string_lossy()
                .into_owned();
            library.insert(&action, NamedClip { id, clip })?;
        }
    }
    if library.actions().next().is_none() {
        bail!(
            "motion library {} has no <action>/<clip>.bvh files",
            dir.display()
        );
    }
    Ok(library)
}

pub fn load_library(source: &LibrarySource) -> Result<MotionLibrary> {
    match source {
        LibrarySource::Builtin { variants, seed } => {
            if *variants == 0 {
                bail!("library_variants must be at least 1");
            }
            Ok(procedural_library(*variants, *seed))
        }
        LibrarySource::Directory { path } => read_library_dir(Path::new(path)),
    }
}

/// Rebuild the scene a manifest record was rendered from.
pub fn scene_for_record(record: &VideoRecord, library: &MotionLibrary) -> Result<SceneDescription> {
    let clips = library
        .clips(&record.action)
        .with_context(|| format!("action {:?} missing from the motion library", record.action))?;
    let named = clips
        .iter()
        .find(|c| c.id == record.motion_id)
        .with_context(|| {
            format!(
                "motion {:?} missing from the motion library",
                record.motion_id
            )
        })?;
    let motion = rescale_to_topology(&named.clip, &humanoid_topology(&record.nuisance.humanoid))?;
    Ok(SceneDescription {
        action: record.action.clone(),
        motion,
        nuisance: record.nuisance.clone(),
        frame_count: record.frame_count,
        frame_rate: record.frame_rate,
        sensor: record.sensor.clone(),
    })
}

fn video_paths(video_id: &str) -> VideoPaths {
    VideoPaths {
        frames: format!("videos/{video_id}/frames"),
        masks: format!("videos/{video_id}/masks"),
        joints: format!("videos/{video_id}/joints.txt"),
    }
}

pub fn joints_text(clip: &RenderedClip) -> String {
    let mut out = String::new();
    for (&frame, gt) in clip.indices.iter().zip(&clip.groundtruth.frames) {
        for (j, o) in gt.joints.iter().enumerate() {
            let _ = writeln!(
                out,
                "{frame} {j} {:.4} {:.4} {}",
                o.u,
                o.v,
                u8::from(o.visible)
            );
        }
    }
    out
}

fn write_clip(
    root: &Path,
    paths: &VideoPaths,
    clip: &RenderedClip,
    format: ImageFormat,
) -> Result<()> {
    let (frames, masks) = (root.join(&paths.frames), root.join(&paths.masks));
    std::fs::create_dir_all(&frames).with_context(|| format!("creating {}", frames.display()))?;
    std::fs::create_dir_all(&masks).with_context(|| format!("creating {}", masks.display()))?;
    for ((&i, fb), gt) in clip
        .indices
        .iter()
        .zip(&clip.frames)
        .zip(&clip.groundtruth.frames)
    {
        write_frame(&frames.join(frame_file_name(i, format)), fb, format)?;
        write_mask(
            &masks.join(frame_file_name(i, format)),
            &gt.mask,
            fb.width,
            fb.height,
            format,
        )?;
    }
    let joints = root.join(&paths.joints);
    std::fs::write(&joints, joints_text(clip))
        .with_context(|| format!("writing {}", joints.display()))
}

/// Render every video of the configured dataset under `out`. On failure the
/// records written so far go to `manifest.partial.jsonl` and no
/// `manifest.jsonl` is produced.
pub fn generate(config: &DatasetConfig, out: &Path) -> Result<Vec<VideoRecord>> {
    let library = load_library(&config.library)?;
    let g = &config.generation;
    g.validate(&library)?;
    std::fs::create_dir_all(out)
        .with_context(|| format!("creating output directory {}", out.display()))?;
    std::fs::write(
        out.join(DATASET_CONFIG),
        serde_json::to_string_pretty(config)?,
    )
    .with_context(|| format!("writing into {}", out.display()))?;
    let _ = std::fs::remove_file(out.join(PARTIAL_MANIFEST));
    let mut cache = TextureCache::default();
    let mut records = Vec::with_capacity(g.total_videos());
    for i in 0..g.total_videos() {
        let step = (|| -> Result<VideoRecord> {
            let plan = plan_video(g, &library, i)?;
            let textures = cache.scene(&plan.scene.nuisance.textures)?;
            let clip = render_clip(&plan.scene, &textures)?;
            let paths = video_paths(&plan.video_id);
            write_clip(out, &paths, &clip, config.image_format)?;
            Ok(plan.record(g, paths))
        })();
        match step {
            Ok(r) => records.push(r),
            Err(e) => {
                write_manifest(&out.join(PARTIAL_MANIFEST), &records)?;
                return Err(e.context(format!(
                    "video {} failed; partial manifest written to {PARTIAL_MANIFEST}",
                    g.video_id(i)
                )));
            }
        }
    }
    write_manifest(&out.join(MANIFEST), &records)?;
    Ok(records)
}

pub fn read_dataset_config(root: &Path) -> Result<DatasetConfig> {
    let path = root.join(DATASET_CONFIG);
    let text =
        std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

/// Re-render one manifest entry from its record alone.
pub fn regenerate(root: &Path, video_id: &str) -> Result<(VideoRecord, RenderedClip)> {
    let config = read_dataset_config(root)?;
    let library = load_library(&config.library)?;
    let records = read_manifest(&root.join(MANIFEST))?;
    let record = records
        .into_iter()
        .find(|r| r.video_id == video_id)
        .with_context(|| format!("video {video_id} not in the manifest"))?;
    let scene = scene_for_record(&record, &library)?;
    let textures = TextureCache::default().scene(&scene.nuisance.textures)?;
    let clip = render_clip(&scene, &textures)?;
    Ok((record, clip))
}

/// Render only the frames the feature extractor reads.
pub fn render_feature_frames(
    scene: &SceneDescription,
    cache: &mut TextureCache,
    features: &FeatureConfig,
) -> Result<RenderedClip> {
    let textures = cache.scene(&scene.nuisance.textures)?;
    let indices = subsample_indices(scene.frame_count, features.frames);
    Ok(render_frames(scene, &textures, &indices)?)
}

pub fn clip_features(clip: &RenderedClip, features: &FeatureConfig) -> Result<Vec<f64>> {
    let views: Vec<FrameView> = clip
        .frames
        .iter()
        .map(|f| FrameView {
            width: f.width,
            height: f.height,
            rgb: &f.rgb,
        })
        .collect();
    Ok(extract_features(&views, features)?)
}

/// Features of one video read back from its frame files.
pub fn record_features(
    root: &Path,
    record: &VideoRecord,
    features: &FeatureConfig,
) -> Result<Vec<f64>> {
    let dir = root.join(&record.paths.frames);
    let format = [ImageFormat::Png, ImageFormat::Ppm]
        .into_iter()
        .find(|&f| dir.join(frame_file_name(0, f)).exists())
        .with_context(|| format!("no frames in {}", dir.display()))?;
    let images = subsample_indices(record.frame_count, features.frames)
        .into_iter()
        .map(|i| read_frame(&dir.join(frame_file_name(i, format))))
        .collect::<Result<Vec<_>>>()?;
    let views: Vec<FrameView> = images
        .iter()
        .map(|im| FrameView {
            width: im.width() as usize,
            height: im.height() as usize,
            rgb: im.as_raw(),
        })
        .collect();
    Ok(extract_features(&views, features)?)
}

/// Sorted action labels across manifests.
pub fn class_list<'a>(records: impl IntoIterator<Item = &'a VideoRecord>) -> Vec<String> {
    records
        .into_iter()
        .map(|r| r.action.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect()
}

/// Labeled feature vectors for the selected records, in manifest order.
pub fn load_domain(
    root: &Path,
    records: &[&VideoRecord],
    classes: &[String],
    features: &FeatureConfig,
) -> Result<DomainDataset> {
    let domain = records.first().context("no videos selected")?.domain;
    let mut examples = Vec::with_capacity(records.len());
    for r in records {
        let label = classes
            .iter()
            .position(|c| *c == r.action)
            .with_context(|| {
                format!(
                    "video {} has action {:?} outside {:?}",
                    r.video_id, r.action, classes
                )
            })?;
        let x = record_features(root, r, features)
            .with_context(|| format!("features of {}", r.video_id))?;
        examples.push(Example { x, label });
    }
    Ok(DomainDataset {
        domain,
        classes: classes.to_vec(),
        examples,
    })
}
