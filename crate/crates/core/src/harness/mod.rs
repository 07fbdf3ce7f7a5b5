//! Train/test splits over a manifest and classification metrics.

mod metrics;
mod split;

use alloc::string::String;
use alloc::vec::Vec;

use thiserror::Error;

use crate::learn::{argmax, DomainDataset, TrainedModel};

pub use metrics::{ClassMetrics, Metrics};
pub use split::{
    build_disjoint_split, build_loso_split, in_azimuth_band, HeldOut, SplitCriterion, SplitSpec,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HarnessError {
    #[error("unknown scene {scene:?}; known scenes: {known}")]
    UnknownScene { scene: String, known: String },
    #[error("no held-out factor value occurs in the manifest")]
    NothingHeldOut,
    #[error("split leaves {train} training and {test} test videos ({excluded} excluded)")]
    EmptySide {
        train: usize,
        test: usize,
        excluded: usize,
    },
    #[error("dataset classes {found:?} do not match the model's {expected:?}")]
    LabelSpace {
        expected: Vec<String>,
        found: Vec<String>,
    },
    #[error("evaluation dataset is empty")]
    EmptyDataset,
    #[error(transparent)]
    Learn(#[from] crate::learn::LearnError),
}

/// Argmax predictions (ties to the lowest class index) scored against the
/// dataset labels.
pub fn evaluate(model: &TrainedModel, dataset: &DomainDataset) -> Result<Metrics, HarnessError> {
    if dataset.classes != model.classes {
        return Err(HarnessError::LabelSpace {
            expected: model.classes.clone(),
            found: dataset.classes.clone(),
        });
    }
    if dataset.examples.is_empty() {
        return Err(HarnessError::EmptyDataset);
    }
    let mut predicted = Vec::with_capacity(dataset.examples.len());
    for e in &dataset.examples {
        let (_, p) = model.classifier.forward(&e.x)?;
        predicted.push(argmax(&p));
    }
    let actual: Vec<usize> = dataset.examples.iter().map(|e| e.label).collect();
    Ok(Metrics::from_predictions(
        model.classes.len(),
        &actual,
        &predicted,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genmodel::{procedural_library, Domain, GenerationConfig, VideoPaths, VideoRecord};
    use crate::randomize::{NuisanceConfig, Range};
    use crate::texture::TextureRef;
    use alloc::string::ToString;
    use alloc::vec;
    use proptest::prelude::*;

    fn records(n: usize, scenes: &[&str], seed: u64) -> Vec<VideoRecord> {
        let lib = procedural_library(1, 0);
        let nuisance = NuisanceConfig {
            texture_pool: scenes.iter().map(|s| TextureRef::image(s, s)).collect(),
            ..NuisanceConfig::default()
        };
        let config = GenerationConfig::new(seed, n, vec!["wave".to_string()], nuisance);
        (0..n)
            .map(|i| {
                let plan = crate::genmodel::plan_video(&config, &lib, i).unwrap();
                plan.record(
                    &config,
                    VideoPaths {
                        frames: String::new(),
                        masks: String::new(),
                        joints: String::new(),
                    },
                )
            })
            .collect()
    }

    #[test]
    fn loso_partitions_by_scene() {
        let recs = records(30, &["a", "b", "c"], 1);
        let s = build_loso_split(&recs, "c").unwrap();
        for r in &recs {
            assert_eq!(s.test.contains(&r.video_id), r.scene_id == "c");
            assert_eq!(s.train.contains(&r.video_id), r.scene_id != "c");
        }
        let ids: Vec<&str> = recs.iter().map(|r| r.video_id.as_str()).collect();
        assert!(s.check(&ids) && s.excluded.is_empty());
    }

    #[test]
    fn loso_on_named_scene() {
        let recs = records(20, &["0000", "0401", "0503"], 2);
        let s = build_loso_split(&recs, "0401").unwrap();
        assert!(!s.test.is_empty());
        assert!(recs
            .iter()
            .filter(|r| s.test.contains(&r.video_id))
            .all(|r| r.scene_id == "0401"));
    }

    #[test]
    fn loso_unknown_scene_lists_known() {
        let recs = records(5, &["a", "b"], 3);
        let err = build_loso_split(&recs, "z").unwrap_err();
        assert!(matches!(err, HarnessError::UnknownScene { ref known, .. } if known == "a, b"));
    }

    #[test]
    fn azimuth_band_holds_out_a_quarter() {
        let recs = records(400, &["a"], 4);
        let band = Range::new(90.0, 180.0);
        let held = HeldOut {
            azimuth_bands: vec![band],
            ..HeldOut::default()
        };
        let s = build_disjoint_split(&recs, &held).unwrap();
        let frac = s.test.len() as f64 / recs.len() as f64;
        assert!((frac - 0.25).abs() < 0.07, "{frac}");
        for r in &recs {
            let inside = (90.0..180.0).contains(&r.nuisance.camera.azimuth);
            assert_eq!(s.test.contains(&r.video_id), inside);
        }
    }

    #[test]
    fn held_out_values_absent_from_manifest_is_an_error() {
        let recs = records(10, &["a"], 5);
        let held = HeldOut {
            texture_ids: vec!["nope".into()],
            ..HeldOut::default()
        };
        assert_eq!(
            build_disjoint_split(&recs, &held),
            Err(HarnessError::NothingHeldOut)
        );
        assert_eq!(
            build_disjoint_split(&recs, &HeldOut::default()),
            Err(HarnessError::NothingHeldOut)
        );
    }

    #[test]
    fn wrapped_band() {
        let b = Range::new(330.0, 390.0);
        assert!(
            in_azimuth_band(&b, 10.0) && in_azimuth_band(&b, 340.0) && !in_azimuth_band(&b, 40.0)
        );
        assert!(!in_azimuth_band(&Range::new(0.0, 30.0), 30.0));
    }

    #[test]
    fn hand_counted_f1() {
        // class 0: TP 3, FN 1 (predicted 1), FP 1 (actual 1 predicted 0)
        let m = Metrics::from_confusion(vec![vec![3, 1], vec![1, 5]]);
        assert_eq!(m.per_class[0].precision, 0.75);
        assert_eq!(m.per_class[0].recall, 0.75);
        assert_eq!(m.per_class[0].f1, 0.75);
        assert_eq!(m.accuracy, 0.8);
    }

    #[test]
    fn perfect_and_absent_classes() {
        let m = Metrics::from_predictions(3, &[0, 1, 1], &[0, 1, 1]);
        assert_eq!(m.accuracy, 1.0);
        assert_eq!(m.per_class[0].f1, 1.0);
        assert_eq!(m.per_class[1].f1, 1.0);
        assert_eq!(m.per_class[2].f1, 0.0);
        assert!(m.per_class[2].f1_undefined);
    }

    #[test]
    fn evaluate_rejects_other_label_space() {
        let mut rng = crate::rng::RngStream::new(0, 0);
        let model = TrainedModel {
            classes: vec!["a".into(), "b".into()],
            classifier: crate::learn::Classifier::new(2, 2, 2, 2, &mut rng),
            discriminator: None,
        };
        let data = DomainDataset {
            domain: Domain::Real,
            classes: vec!["a".into()],
            examples: vec![crate::learn::Example {
                x: vec![0.0, 0.0],
                label: 0,
            }],
        };
        assert!(matches!(
            evaluate(&model, &data),
            Err(HarnessError::LabelSpace { .. })
        ));
    }

    proptest! {
        #[test]
        fn splits_are_disjoint_and_cover(seed in any::<u64>(), n in 4usize..40, lo in 0.0f64..360.0, width in 10.0f64..200.0) {
            let recs = records(n, &["a", "b", "c"], seed);
            let ids: Vec<&str> = recs.iter().map(|r| r.video_id.as_str()).collect();
            let scene = recs[0].scene_id.clone();
            let s = build_loso_split(&recs, &scene).unwrap();
            prop_assert!(s.check(&ids));
            let held = HeldOut {
                azimuth_bands: vec![Range::new(lo, lo + width)],
                texture_ids: vec!["a".into()],
                ..HeldOut::default()
            };
            if let Ok(s) = build_disjoint_split(&recs, &held) {
                prop_assert!(s.check(&ids));
                for r in &recs {
                    if s.test.contains(&r.video_id) {
                        prop_assert!(in_azimuth_band(&held.azimuth_bands[0], r.nuisance.camera.azimuth));
                    }
                    if s.train.contains(&r.video_id) {
                        prop_assert!(!in_azimuth_band(&held.azimuth_bands[0], r.nuisance.camera.azimuth));
                        prop_assert!(r.nuisance.textures.floor.texture.id != "a");
                    }
                }
            }
        }

        #[test]
        fn metrics_are_internally_consistent(cells in proptest::collection::vec(0usize..20, 16)) {
            let confusion: Vec<Vec<usize>> = cells.chunks(4).map(|c| c.to_vec()).collect();
            let m = Metrics::from_confusion(confusion.clone());
            let total: usize = cells.iter().sum();
            let trace: usize = (0..4).map(|i| confusion[i][i]).sum();
            if total > 0 {
                prop_assert_eq!(m.accuracy, trace as f64 / total as f64);
            }
            for (c, cm) in m.per_class.iter().enumerate() {
                prop_assert_eq!(cm.support, confusion[c].iter().sum::<usize>());
                let tp = confusion[c][c] as f64;
                let col: usize = (0..4).map(|r| confusion[r][c]).sum();
                let p = if col == 0 { 0.0 } else { tp / col as f64 };
                let r = if cm.support == 0 { 0.0 } else { tp / cm.support as f64 };
                if p + r > 0.0 {
                    prop_assert!((cm.f1 - 2.0 * p * r / (p + r)).abs() < 1e-15);
                } else {
                    prop_assert!(cm.f1 == 0.0 && cm.f1_undefined);
                }
                prop_assert!((0.0..=1.0).contains(&cm.f1));
            }
        }
    }
}
