//! Line-oriented `key = value` dataset configuration.
//!
//! ```text
//! # comments run to the end of the line
//! seed = 7
//! domain = synthetic            # synthetic | pseudo-real | real
//! classes = wave, kick
//! videos_per_class = 5
//! frame_count = 32
//! frame_rate = 30
//! distance = 2 6                # "min max", or one value for a point range
//! azimuth = 0 360
//! elevation = 0 60
//! height = 1.5 1.9
//! arm_ratio = 0.85 1.15         # also leg_ratio, torso_ratio
//! limb_radius = 0.035 0.06
//! torso_scale = 1.6 2.4
//! texture_dir = textures        # PNG/PPM files, relative to this file
//! procedural_textures = 16      # procedural textures added to the pool
//! procedural_seed = 1000
//! library = library             # library/<action>/<clip>.bvh; omitted: built-in motions
//! library_variants = 4          # built-in motions per action
//! library_seed = 0
//! sensor_gamma = 1.2            # any sensor_* key enables the sensor model
//! sensor_tint = 1.05 1 0.9
//! sensor_noise = 6
//! sensor_blur = 1
//! image_format = png            # png | ppm
//! ```
//!
//! Keys may appear in any order, each at most once. Without `texture_dir`
//! the pool is 16 procedural textures.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use simaug_core::genmodel::{Domain, GenerationConfig};
use simaug_core::randomize::{NuisanceConfig, Range};
use simaug_core::render::SensorModel;
use simaug_core::texture::TextureRef;
use thiserror::Error;

use crate::images::ImageFormat;

#[derive(Debug, Error)]
pub enum ConfigFileError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("missing required key {0:?}")]
    Missing(&'static str),
    #[error("texture directory {path}: {source}")]
    TextureDir {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("texture directory {0} holds no PNG or PPM images")]
    NoTextures(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LibrarySource {
    Builtin { variants: usize, seed: u64 },
    Directory { path: String },
}

/// Everything `generate` needs, persisted as `dataset.json` next to the manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetConfig {
    pub generation: GenerationConfig,
    pub library: LibrarySource,
    pub image_format: ImageFormat,
}

const KEYS: [&str; 25] = [
    "seed",
    "domain",
    "classes",
    "videos_per_class",
    "frame_count",
    "frame_rate",
    "distance",
    "azimuth",
    "elevation",
    "height",
    "arm_ratio",
    "leg_ratio",
    "torso_ratio",
    "limb_radius",
    "torso_scale",
    "texture_dir",
    "procedural_textures",
    "procedural_seed",
    "library",
    "library_variants",
    "library_seed",
    "sensor_gamma",
    "sensor_tint",
    "sensor_noise",
    "sensor_blur",
];

struct Entry<'a> {
    line: usize,
    value: &'a str,
}

fn err(line: usize, message: impl Into<String>) -> ConfigFileError {
    ConfigFileError::Syntax {
        line,
        message: message.into(),
    }
}

fn numbers(e: &Entry, n: usize) -> Result<Vec<f64>, ConfigFileError> {
    let vals: Vec<f64> = e
        .value
        .split_whitespace()
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| err(e.line, format!("{t:?} is not a number")))
        })
        .collect::<Result<_, _>>()?;
    if vals.len() != n || vals.iter().any(|v| !v.is_finite()) {
        return Err(err(
            e.line,
            format!("expected {n} finite numbers, found {:?}", e.value),
        ));
    }
    Ok(vals)
}

fn range(e: &Entry) -> Result<Range, ConfigFileError> {
    let vals: Vec<&str> = e.value.split_whitespace().collect();
    let v = numbers(e, vals.len().clamp(1, 2))?;
    let r = if v.len() == 1 {
        Range::point(v[0])
    } else {
        Range::new(v[0], v[1])
    };
    if r.min > r.max {
        return Err(err(e.line, format!("range {} > {}", r.min, r.max)));
    }
    Ok(r)
}

fn integer<T: std::str::FromStr>(e: &Entry) -> Result<T, ConfigFileError> {
    e.value.parse().map_err(|_| {
        err(
            e.line,
            format!("{:?} is not a nonnegative integer", e.value),
        )
    })
}

/// Parse config text; relative paths resolve against `base`.
pub fn parse_config(text: &str, base: &Path) -> Result<DatasetConfig, ConfigFileError> {
    let mut entries: std::collections::BTreeMap<&str, Entry> = Default::default();
    let mut image_format = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| err(line, format!("expected `key = value`, found {content:?}")))?;
        let (key, value) = (key.trim(), value.trim());
        if key == "image_format" {
            image_format = Some(match value {
                "png" => ImageFormat::Png,
                "ppm" => ImageFormat::Ppm,
                _ => {
                    return Err(err(
                        line,
                        format!("image_format must be png or ppm, found {value:?}"),
                    ))
                }
            });
            continue;
        }
        let Some(&known) = KEYS.iter().find(|k| **k == key) else {
            return Err(err(line, format!("unknown key {key:?}")));
        };
        if entries.insert(known, Entry { line, value }).is_some() {
            return Err(err(line, format!("duplicate key {key:?}")));
        }
    }

    let mut nuisance = NuisanceConfig::default();
    for (key, slot) in [
        ("distance", &mut nuisance.distance),
        ("azimuth", &mut nuisance.azimuth),
        ("elevation", &mut nuisance.elevation),
        ("height", &mut nuisance.humanoid.height),
        ("arm_ratio", &mut nuisance.humanoid.arm_ratio),
        ("leg_ratio", &mut nuisance.humanoid.leg_ratio),
        ("torso_ratio", &mut nuisance.humanoid.torso_ratio),
        ("limb_radius", &mut nuisance.humanoid.limb_radius),
        ("torso_scale", &mut nuisance.humanoid.torso_scale),
    ] {
        if let Some(e) = entries.get(key) {
            *slot = range(e)?;
        }
    }

    let sensor = if entries.keys().any(|k| k.starts_with("sensor_")) {
        let mut s = SensorModel {
            gamma: 1.0,
            tint: [1.0; 3],
            noise: 0.0,
            blur: 0,
            seed: 0,
        };
        if let Some(e) = entries.get("sensor_gamma") {
            s.gamma = numbers(e, 1)?[0];
        }
        if let Some(e) = entries.get("sensor_tint") {
            let t = numbers(e, 3)?;
            s.tint = [t[0], t[1], t[2]];
        }
        if let Some(e) = entries.get("sensor_noise") {
            s.noise = numbers(e, 1)?[0];
        }
        if let Some(e) = entries.get("sensor_blur") {
            s.blur = integer(e)?;
        }
        Some(s)
    } else {
        None
    };

    let classes: Vec<String> = entries
        .get("classes")
        .ok_or(ConfigFileError::Missing("classes"))?
        .value
        .split(',')
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .collect();
    let videos_per_class = integer(
        entries
            .get("videos_per_class")
            .ok_or(ConfigFileError::Missing("videos_per_class"))?,
    )?;
    let seed = entries.get("seed").map(integer).transpose()?.unwrap_or(0);

    let mut pool = Vec::new();
    if let Some(e) = entries.get("texture_dir") {
        pool = texture_dir(&base.join(e.value))?;
    }
    let procedural: usize = match entries.get("procedural_textures") {
        Some(e) => integer(e)?,
        None if pool.is_empty() => 16,
        None => 0,
    };
    let procedural_seed = entries
        .get("procedural_seed")
        .map(integer)
        .transpose()?
        .unwrap_or(1000);
    pool.extend(TextureRef::procedural_pool(procedural_seed, procedural));
    nuisance.texture_pool = pool;

    let mut generation = GenerationConfig::new(seed, videos_per_class, classes, nuisance);
    if let Some(e) = entries.get("domain") {
        generation.domain = Domain::parse(e.value).ok_or_else(|| {
            err(
                e.line,
                format!(
                    "domain must be synthetic, real or pseudo-real, found {:?}",
                    e.value
                ),
            )
        })?;
    }
    if let Some(e) = entries.get("frame_count") {
        generation.frame_count = integer(e)?;
    }
    if let Some(e) = entries.get("frame_rate") {
        generation.frame_rate = numbers(e, 1)?[0];
    }
    generation.sensor = sensor;

    let library = match entries.get("library") {
        Some(e) => LibrarySource::Directory {
            path: base.join(e.value).to_string_lossy().into_owned(),
        },
        None => LibrarySource::Builtin {
            variants: entries
                .get("library_variants")
                .map(integer)
                .transpose()?
                .unwrap_or(4),
            seed: entries
                .get("library_seed")
                .map(integer)
                .transpose()?
                .unwrap_or(0),
        },
    };
    Ok(DatasetConfig {
        generation,
        library,
        image_format: image_format.unwrap_or(ImageFormat::Png),
    })
}

pub fn read_config(path: &Path) -> anyhow::Result<DatasetConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| anyhow::anyhow!("reading {}: {e}", path.display()))?;
    let base = path.parent().unwrap_or(Path::new("."));
    parse_config(&text, base).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))
}

/// Image textures in a directory, sorted by file name; ids are file stems.
fn texture_dir(dir: &Path) -> Result<Vec<TextureRef>, ConfigFileError> {
    let io = |source| ConfigFileError::TextureDir {
        path: dir.to_path_buf(),
        source,
    };
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(io)?
        .map(|e| e.map(|e| e.path()))
        .collect::<Result<_, _>>()
        .map_err(io)?;
    files.retain(|p| ImageFormat::from_path(p).is_some());
    files.sort();
    if files.is_empty() {
        return Err(ConfigFileError::NoTextures(dir.to_path_buf()));
    }
    Ok(files
        .iter()
        .map(|p| {
            let stem = p
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            TextureRef::image(&stem, &p.to_string_lossy())
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_example_parses() {
        let text = "seed = 7\ndomain = pseudo-real\nclasses = wave, kick\nvideos_per_class = 5 # five\n\
                    distance = 3\nazimuth = 10 40\nsensor_noise = 4\nimage_format = ppm\nlibrary_variants = 2\n";
        let c = parse_config(text, Path::new(".")).unwrap();
        let g = &c.generation;
        assert_eq!(g.master_seed, 7);
        assert_eq!(g.domain, Domain::PseudoReal);
        assert_eq!(g.classes, vec!["wave", "kick"]);
        assert_eq!(g.nuisance.distance, Range::point(3.0));
        assert_eq!(g.nuisance.azimuth, Range::new(10.0, 40.0));
        assert_eq!(g.nuisance.texture_pool.len(), 16);
        assert_eq!(g.sensor.as_ref().unwrap().noise, 4.0);
        assert_eq!(c.image_format, ImageFormat::Ppm);
        assert_eq!(
            c.library,
            LibrarySource::Builtin {
                variants: 2,
                seed: 0
            }
        );
    }

    #[test]
    fn errors_carry_line_numbers() {
        let cases = [
            ("classes = a\nvideos_per_class = 1\nbogus = 1\n", 3),
            ("classes = a\nclasses = b\n", 2),
            ("# c\nazimuth = 9 1\n", 2),
            ("distance = x\n", 1),
            ("just text\n", 1),
            ("sensor_tint = 1 1\n", 1),
        ];
        for (text, line) in cases {
            match parse_config(text, Path::new(".")) {
                Err(ConfigFileError::Syntax { line: l, .. }) => assert_eq!(l, line, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
        assert!(matches!(
            parse_config("videos_per_class = 1", Path::new(".")),
            Err(ConfigFileError::Missing("classes"))
        ));
    }

    #[test]
    fn texture_dir_lists_images() {
        let dir = tempfile::tempdir().unwrap();
        let t = dir.path().join("tex");
        std::fs::create_dir(&t).unwrap();
        image::RgbImage::new(4, 4).save(t.join("b.png")).unwrap();
        image::RgbImage::new(4, 4).save(t.join("a.ppm")).unwrap();
        std::fs::write(t.join("notes.txt"), "x").unwrap();
        let c = parse_config(
            "classes = wave\nvideos_per_class = 1\ntexture_dir = tex\n",
            dir.path(),
        )
        .unwrap();
        let ids: Vec<&str> = c
            .generation
            .nuisance
            .texture_pool
            .iter()
            .map(|t| t.id.as_str())
            .collect();
        assert_eq!(ids, ["a", "b"]);
    }
}
