//! Small fully connected classifier and domain discriminator trained by
//! plain SGD, with real-only, synthetic-only, joint, finetune and
//! domain-adversarial strategies.

mod features;
mod nn;
mod train;

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use crate::genmodel::Domain;
pub use features::{extract_features, standardize, subsample_indices, FeatureConfig, FrameView};
pub use nn::{argmax, softmax, Classifier, ClassifierTrace, Dense, Discriminator, D_CLAMP};
pub use train::{
    adversarial_losses, alternating_step, classification_loss, classifier_gradient,
    discriminator_gradient, train, train_with_trajectory, LossRecord, LossValues, Phase, Strategy,
    TrainConfig, TrainOutcome, TrainedModel, TrainingStepLog,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LearnError {
    #[error("clip has {frames} frames, {needed} needed")]
    ShortClip { frames: usize, needed: usize },
    #[error("frame of {width}x{height} does not fit the feature grid")]
    FrameSize { width: usize, height: usize },
    #[error("expected dimension {expected}, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("strategy {strategy} needs a {domain} dataset")]
    MissingDataset {
        strategy: &'static str,
        domain: &'static str,
    },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("label {label} outside the {classes} configured classes")]
    Label { label: usize, classes: usize },
    #[error("datasets disagree on the class list")]
    LabelSpace,
    #[error("non-finite feature value")]
    NonFinite,
    #[error("invalid training config: {0}")]
    Config(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Example {
    pub x: Vec<f64>,
    pub label: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainDataset {
    pub domain: Domain,
    pub classes: Vec<String>,
    pub examples: Vec<Example>,
}

impl DomainDataset {
    pub fn dim(&self) -> usize {
        self.examples.first().map_or(0, |e| e.x.len())
    }

    pub fn validate(&self) -> Result<(), LearnError> {
        let dim = self.dim();
        if self.examples.is_empty() {
            return Err(LearnError::EmptyDataset);
        }
        for e in &self.examples {
            if e.label >= self.classes.len() {
                return Err(LearnError::Label {
                    label: e.label,
                    classes: self.classes.len(),
                });
            }
            if e.x.len() != dim {
                return Err(LearnError::Dimension {
                    expected: dim,
                    found: e.x.len(),
                });
            }
            if e.x.iter().any(|v| !v.is_finite()) {
                return Err(LearnError::NonFinite);
            }
        }
        Ok(())
    }
}
