//! Dataset-level sampling of (action, motion, nuisances) per video, and an
//! exactly solvable discrete generative model for checking classifiers
//! against the Bayes posterior.

mod library;
mod toy;

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::motion::{rescale_to_topology, MotionError};
use crate::randomize::{
    humanoid_topology, sample_nuisances, ConfigError, NuisanceConfig, NuisanceSample,
};
use crate::render::{
    RenderError, SceneDescription, SensorModel, DEFAULT_CLIP_FRAMES, DEFAULT_FRAME_RATE,
};
use crate::rng::{derive_stream, RNG_ALGORITHM};

pub use library::{
    procedural_library, sample_motion, MotionLibrary, NamedClip, PROCEDURAL_ACTIONS,
};
pub use toy::{exact_posterior, ToyGenerativeModel};

/// Synthetic videos generated per pseudo-real video by default.
pub const SYNTHETIC_PER_REAL: usize = 4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GenError {
    #[error("unknown action {action:?}; available: {available}")]
    UnknownAction { action: String, available: String },
    #[error("action {0:?} has no clips")]
    EmptyAction(String),
    #[error(transparent)]
    Motion(#[from] MotionError),
    #[error(transparent)]
    Render(#[from] RenderError),
    #[error(transparent)]
    Nuisance(#[from] ConfigError),
    #[error("invalid toy model: {0}")]
    InvalidToy(String),
    #[error("observation {0} has zero probability under the model")]
    ImpossibleObservation(usize),
    #[error("invalid generation config: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Domain {
    Synthetic,
    Real,
    PseudoReal,
}

impl Domain {
    pub fn as_str(self) -> &'static str {
        match self {
            Domain::Synthetic => "synthetic",
            Domain::Real => "real",
            Domain::PseudoReal => "pseudo-real",
        }
    }

    pub fn parse(s: &str) -> Option<Domain> {
        match s {
            "synthetic" => Some(Domain::Synthetic),
            "real" => Some(Domain::Real),
            "pseudo-real" => Some(Domain::PseudoReal),
            _ => None,
        }
    }

    fn id_prefix(self) -> &'static str {
        match self {
            Domain::Synthetic => "syn",
            Domain::Real => "real",
            Domain::PseudoReal => "pr",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationConfig {
    pub master_seed: u64,
    pub videos_per_class: usize,
    pub classes: Vec<String>,
    pub nuisance: NuisanceConfig,
    pub frame_count: usize,
    pub frame_rate: f64,
    pub domain: Domain,
    /// Camera post-processing; each video gets its own noise seed.
    pub sensor: Option<SensorModel>,
}

impl GenerationConfig {
    pub fn new(
        master_seed: u64,
        videos_per_class: usize,
        classes: Vec<String>,
        nuisance: NuisanceConfig,
    ) -> Self {
        GenerationConfig {
            master_seed,
            videos_per_class,
            classes,
            nuisance,
            frame_count: DEFAULT_CLIP_FRAMES,
            frame_rate: DEFAULT_FRAME_RATE,
            domain: Domain::Synthetic,
            sensor: None,
        }
    }

    pub fn validate(&self, library: &MotionLibrary) -> Result<(), GenError> {
        if self.videos_per_class == 0 {
            return Err(GenError::Config(
                "videos per class must be at least 1".into(),
            ));
        }
        if self.classes.is_empty() {
            return Err(GenError::Config("class list is empty".into()));
        }
        for c in &self.classes {
            if !library.contains(c) {
                return Err(library.unknown(c));
            }
        }
        if self.frame_count == 0 {
            return Err(GenError::Config("frame count must be at least 1".into()));
        }
        if !(self.frame_rate > 0.0 && self.frame_rate.is_finite()) {
            return Err(GenError::Config(format!(
                "invalid frame rate {}",
                self.frame_rate
            )));
        }
        self.nuisance.validate()?;
        Ok(())
    }

    pub fn total_videos(&self) -> usize {
        self.classes.len() * self.videos_per_class
    }

    pub fn video_id(&self, video_index: usize) -> String {
        format!("{}{:05}", self.domain.id_prefix(), video_index)
    }
}

/// Everything needed to render one video, plus its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct VideoPlan {
    pub video_index: usize,
    pub video_id: String,
    pub motion_id: String,
    pub stream_id: u64,
    pub scene: SceneDescription,
}

/// Sample video `video_index` of the dataset. Videos are numbered class by
/// class. The per-video stream is consumed in a fixed order: motion, then
/// nuisances, then the sensor noise seed.
pub fn plan_video(
    config: &GenerationConfig,
    library: &MotionLibrary,
    video_index: usize,
) -> Result<VideoPlan, GenError> {
    if video_index >= config.total_videos() {
        return Err(GenError::Config(format!(
            "video index {video_index} is outside 0..{}",
            config.total_videos()
        )));
    }
    let action = &config.classes[video_index / config.videos_per_class];
    let mut stream = derive_stream(config.master_seed, video_index as u64);
    let stream_id = stream.stream_id();
    let named = sample_motion(library, action, &mut stream)?;
    let nuisance = sample_nuisances(&config.nuisance, &mut stream);
    let topology = humanoid_topology(&nuisance.humanoid);
    let motion = rescale_to_topology(&named.clip, &topology)?;
    let sensor = config.sensor.clone().map(|mut s| {
        s.seed = stream.next_u64();
        s
    });
    Ok(VideoPlan {
        video_index,
        video_id: config.video_id(video_index),
        motion_id: named.id.clone(),
        stream_id,
        scene: SceneDescription {
            action: action.clone(),
            motion,
            nuisance,
            frame_count: config.frame_count,
            frame_rate: config.frame_rate,
            sensor,
        },
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct VideoPaths {
    /// Directory holding `frame_%05d` images, relative to the dataset root.
    pub frames: String,
    pub masks: String,
    /// Per-clip joint file.
    pub joints: String,
}

/// One manifest line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoRecord {
    pub video_id: String,
    pub action: String,
    pub domain: Domain,
    /// LOSO grouping key: the floor texture id.
    pub scene_id: String,
    pub humanoid_id: String,
    pub motion_id: String,
    pub master_seed: u64,
    pub video_index: usize,
    pub stream_id: u64,
    pub rng: String,
    pub nuisance: NuisanceSample,
    pub frame_count: usize,
    pub frame_rate: f64,
    pub sensor: Option<SensorModel>,
    pub paths: VideoPaths,
}

impl VideoPlan {
    pub fn record(&self, config: &GenerationConfig, paths: VideoPaths) -> VideoRecord {
        let n = &self.scene.nuisance;
        VideoRecord {
            video_id: self.video_id.clone(),
            action: self.scene.action.clone(),
            domain: config.domain,
            scene_id: n.textures.floor.texture.id.clone(),
            humanoid_id: n.humanoid.id(),
            motion_id: self.motion_id.clone(),
            master_seed: config.master_seed,
            video_index: self.video_index,
            stream_id: self.stream_id,
            rng: RNG_ALGORITHM.into(),
            nuisance: n.clone(),
            frame_count: self.scene.frame_count,
            frame_rate: self.scene.frame_rate,
            sensor: self.scene.sensor.clone(),
            paths,
        }
    }
}
