//! Transfer experiment comparing training strategies on a pseudo-real
//! domain (narrow, entangled nuisances plus a camera sensor model) with help
//! from a randomized synthetic domain.
//!
//! The pseudo-real domain is drawn as two pools: training videos seen from
//! a narrow azimuth band with a small texture set, and candidate test videos
//! seen from a wider band with disjoint textures. Test sets come from
//! factor-disjoint splits over the union, one per held-out azimuth band.

use anyhow::{ensure, Context, Result};
use serde::{Deserialize, Serialize};
use simaug_core::genmodel::{
    plan_video, procedural_library, Domain, GenerationConfig, MotionLibrary, VideoPaths,
    VideoRecord, PROCEDURAL_ACTIONS, SYNTHETIC_PER_REAL,
};
use simaug_core::harness::{build_disjoint_split, evaluate, HeldOut};
use simaug_core::learn::{train, DomainDataset, Example, FeatureConfig, Strategy, TrainConfig};
use simaug_core::randomize::{HumanoidRanges, NuisanceConfig, Range};
use simaug_core::render::SensorModel;
use simaug_core::rng::splitmix64;
use simaug_core::texture::TextureRef;

use crate::dataset::{clip_features, render_feature_frames};
use crate::images::TextureCache;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferConfig {
    pub classes: Vec<String>,
    pub real_per_class: usize,
    pub test_per_class: usize,
    pub synthetic_per_real: usize,
    /// Both domains draw motions from one procedural library.
    pub library_variants: usize,
    pub library_seed: u64,
    pub real_train: NuisanceConfig,
    /// Candidate test pool; its textures are the held-out ones.
    pub real_test: NuisanceConfig,
    /// Held-out azimuth bands, narrowest first; the last defines the main test set.
    pub held_bands: Vec<Range>,
    pub synthetic: NuisanceConfig,
    pub real_sensor: Option<SensorModel>,
    pub features: FeatureConfig,
    pub train: TrainConfig,
    /// The reduced-data variant keeps `1 / reduced_divisor` of the
    /// pseudo-real training videos of each class.
    pub reduced_divisor: usize,
}

impl Default for TransferConfig {
    fn default() -> Self {
        let real = NuisanceConfig {
            distance: Range::new(1.7, 1.9),
            azimuth: Range::new(0.0, 40.0),
            elevation: Range::new(5.0, 15.0),
            texture_pool: TextureRef::procedural_pool(100, 4),
            // one performer, bulkier than any randomized body
            humanoid: HumanoidRanges::fixed(1.75, 0.09, 3.0),
        };
        TransferConfig {
            classes: PROCEDURAL_ACTIONS.iter().map(|s| s.to_string()).collect(),
            real_per_class: 40,
            test_per_class: 40,
            synthetic_per_real: SYNTHETIC_PER_REAL,
            library_variants: 4,
            library_seed: 11,
            real_test: NuisanceConfig {
                azimuth: Range::new(40.0, 160.0),
                texture_pool: TextureRef::procedural_pool(200, 4),
                ..real.clone()
            },
            real_train: real,
            held_bands: vec![
                Range::new(40.0, 70.0),
                Range::new(40.0, 100.0),
                Range::new(40.0, 160.0),
            ],
            synthetic: NuisanceConfig {
                distance: Range::new(1.5, 3.0),
                // every action varies its leading side, so half a turn
                // covers all views up to mirroring
                azimuth: Range::new(0.0, 180.0),
                elevation: Range::new(0.0, 30.0),
                texture_pool: TextureRef::procedural_pool(1000, 32),
                humanoid: HumanoidRanges::default(),
            },
            real_sensor: Some(SensorModel {
                gamma: 1.4,
                tint: [1.1, 1.0, 0.85],
                noise: 8.0,
                blur: 1,
                seed: 0,
            }),
            features: FeatureConfig::default(),
            train: TrainConfig {
                lr_finetune: 0.04,
                finetune_epochs: 150,
                lambda_adv: 1.0,
                ..TrainConfig::default()
            },
            reduced_divisor: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedOutcome {
    pub seed: u64,
    pub real_train: usize,
    pub synthetic: usize,
    /// Test videos per held-out band, and the candidates excluded by each split.
    pub test_sizes: Vec<usize>,
    pub excluded: Vec<usize>,
    /// Main-test-set accuracy of every strategy.
    pub accuracy: Vec<(Strategy, f64)>,
    /// Real-only accuracy on each held-out band.
    pub real_only_by_band: Vec<f64>,
    pub reduced_real_only: f64,
    pub reduced_finetune: f64,
}

impl SeedOutcome {
    pub fn accuracy_of(&self, s: Strategy) -> f64 {
        self.accuracy
            .iter()
            .find(|(k, _)| *k == s)
            .map_or(f64::NAN, |(_, a)| *a)
    }
}

struct Rendered {
    records: Vec<VideoRecord>,
    examples: Vec<Example>,
}

fn render_domain(
    config: &GenerationConfig,
    library: &MotionLibrary,
    features: &FeatureConfig,
) -> Result<Rendered> {
    config.validate(library)?;
    let mut cache = TextureCache::default();
    let mut out = Rendered {
        records: Vec::with_capacity(config.total_videos()),
        examples: Vec::with_capacity(config.total_videos()),
    };
    for i in 0..config.total_videos() {
        let plan = plan_video(config, library, i)?;
        let clip = render_feature_frames(&plan.scene, &mut cache, features)?;
        let label = i / config.videos_per_class;
        out.examples.push(Example {
            x: clip_features(&clip, features)?,
            label,
        });
        out.records.push(plan.record(config, VideoPaths::default()));
    }
    Ok(out)
}

fn dataset(domain: Domain, classes: &[String], examples: Vec<Example>) -> DomainDataset {
    DomainDataset {
        domain,
        classes: classes.to_vec(),
        examples,
    }
}

/// Features of both domains for one seed, with one test set per held-out band.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedData {
    pub real: DomainDataset,
    pub synthetic: DomainDataset,
    pub tests: Vec<DomainDataset>,
    pub excluded: Vec<usize>,
}

/// Render both domains for `seed` and build the factor-disjoint test sets.
pub fn render_seed(config: &TransferConfig, seed: u64) -> Result<SeedData> {
    ensure!(!config.held_bands.is_empty(), "no held-out azimuth band");
    ensure!(
        config.reduced_divisor >= 1,
        "reduced divisor must be positive"
    );
    let data_seed = |k: u64| splitmix64(seed.wrapping_mul(0x1000).wrapping_add(k));
    let library = procedural_library(config.library_variants, config.library_seed);

    let pseudo_real = |nuisance: &NuisanceConfig, per_class: usize, k: u64| {
        let mut g = GenerationConfig::new(
            data_seed(k),
            per_class,
            config.classes.clone(),
            nuisance.clone(),
        );
        g.domain = Domain::PseudoReal;
        g.sensor = config.real_sensor.clone();
        g
    };
    let real_train = render_domain(
        &pseudo_real(&config.real_train, config.real_per_class, 1),
        &library,
        &config.features,
    )?;
    let mut real_test = render_domain(
        &pseudo_real(&config.real_test, config.test_per_class, 2),
        &library,
        &config.features,
    )?;
    // the candidate pool is numbered after the training pool
    let offset = real_train.records.len();
    for (k, r) in real_test.records.iter_mut().enumerate() {
        r.video_index = offset + k;
        r.video_id = format!("pr{:05}", offset + k);
    }
    let mut syn_config = GenerationConfig::new(
        data_seed(3),
        config.real_per_class * config.synthetic_per_real,
        config.classes.clone(),
        config.synthetic.clone(),
    );
    syn_config.domain = Domain::Synthetic;
    let synthetic = render_domain(&syn_config, &library, &config.features)?;

    let all: Vec<VideoRecord> = real_train
        .records
        .iter()
        .chain(&real_test.records)
        .cloned()
        .collect();
    let held_textures: Vec<String> = config
        .real_test
        .texture_pool
        .iter()
        .map(|t| t.id.clone())
        .collect();
    let mut tests = Vec::new();
    let mut excluded = Vec::new();
    for band in &config.held_bands {
        let held = HeldOut {
            azimuth_bands: vec![*band],
            texture_ids: held_textures.clone(),
            humanoid_ids: Vec::new(),
        };
        let split = build_disjoint_split(&all, &held)?;
        ensure!(
            split.train.len() == real_train.records.len(),
            "held-out factors overlap the training pool"
        );
        let examples = real_test
            .records
            .iter()
            .zip(&real_test.examples)
            .filter(|(r, _)| split.test.contains(&r.video_id))
            .map(|(_, e)| e.clone())
            .collect();
        tests.push(dataset(Domain::PseudoReal, &config.classes, examples));
        excluded.push(split.excluded.len());
    }

    Ok(SeedData {
        real: dataset(Domain::PseudoReal, &config.classes, real_train.examples),
        synthetic: dataset(Domain::Synthetic, &config.classes, synthetic.examples),
        tests,
        excluded,
    })
}

/// Train every strategy on rendered data and score it.
pub fn score_seed(config: &TransferConfig, data: &SeedData, seed: u64) -> Result<SeedOutcome> {
    ensure!(
        config.reduced_divisor >= 1,
        "reduced divisor must be positive"
    );
    let (real, syn, tests) = (&data.real, &data.synthetic, &data.tests);
    let main_test = tests.last().context("no test sets")?;
    let fit = |strategy: Strategy, real: &DomainDataset| {
        let tc = TrainConfig {
            strategy,
            seed,
            ..config.train.clone()
        };
        train(Some(syn), Some(real), &tc)
    };
    let mut accuracy = Vec::new();
    let mut real_only_by_band = Vec::new();
    for s in Strategy::ALL {
        let model = fit(s, real)?.model;
        accuracy.push((s, evaluate(&model, main_test)?.accuracy));
        if s == Strategy::RealOnly {
            for t in tests {
                real_only_by_band.push(evaluate(&model, t)?.accuracy);
            }
        }
    }

    let keep = (config.real_per_class / config.reduced_divisor).max(1);
    let reduced = dataset(
        Domain::PseudoReal,
        &config.classes,
        real.examples
            .iter()
            .enumerate()
            .filter(|(i, _)| i % config.real_per_class < keep)
            .map(|(_, e)| e.clone())
            .collect(),
    );
    let reduced_real_only =
        evaluate(&fit(Strategy::RealOnly, &reduced)?.model, main_test)?.accuracy;
    let reduced_finetune = evaluate(&fit(Strategy::Finetune, &reduced)?.model, main_test)?.accuracy;

    Ok(SeedOutcome {
        seed,
        real_train: real.examples.len(),
        synthetic: syn.examples.len(),
        test_sizes: tests.iter().map(|t| t.examples.len()).collect(),
        excluded: data.excluded.clone(),
        accuracy,
        real_only_by_band,
        reduced_real_only,
        reduced_finetune,
    })
}

/// Render and score one seed.
pub fn run_seed(config: &TransferConfig, seed: u64) -> Result<SeedOutcome> {
    score_seed(config, &render_seed(config, seed)?, seed)
}
