use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::nn::{Classifier, Discriminator};
use super::{DomainDataset, Example, LearnError};
use crate::math::ln;
use crate::rng::{derive_stream, RngStream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    RealOnly,
    SyntheticOnly,
    Joint,
    Finetune,
    Adversarial,
}

impl Strategy {
    pub const ALL: [Strategy; 5] = [
        Strategy::RealOnly,
        Strategy::SyntheticOnly,
        Strategy::Joint,
        Strategy::Finetune,
        Strategy::Adversarial,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::RealOnly => "real-only",
            Strategy::SyntheticOnly => "synthetic-only",
            Strategy::Joint => "joint",
            Strategy::Finetune => "finetune",
            Strategy::Adversarial => "adversarial",
        }
    }

    pub fn parse(s: &str) -> Option<Strategy> {
        Strategy::ALL.into_iter().find(|k| k.as_str() == s)
    }

    fn needs_synthetic(self) -> bool {
        self != Strategy::RealOnly
    }

    fn needs_real(self) -> bool {
        self != Strategy::SyntheticOnly
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub strategy: Strategy,
    /// Rate for training from scratch (and for pretraining).
    pub lr: f64,
    /// Rate for the second stage of `finetune`.
    pub lr_finetune: f64,
    /// Ascent rate of the discriminator.
    pub lr_disc: f64,
    pub lambda_adv: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub finetune_epochs: usize,
    pub hidden: usize,
    pub latent: usize,
    pub disc_hidden: usize,
    /// Discriminator updates per classifier update.
    pub disc_steps: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            strategy: Strategy::Joint,
            lr: 0.05,
            lr_finetune: 0.005,
            lr_disc: 0.05,
            lambda_adv: 0.1,
            batch_size: 32,
            epochs: 30,
            finetune_epochs: 30,
            hidden: 64,
            latent: 32,
            disc_hidden: 32,
            disc_steps: 1,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), LearnError> {
        let bad = |m: &str| Err(LearnError::Config(m.into()));
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad("learning rate must be positive");
        }
        if !(self.lr_finetune > 0.0 && self.lr_finetune < self.lr) {
            return bad("finetune rate must be positive and below the pretraining rate");
        }
        if !(self.lr_disc > 0.0 && self.lr_disc.is_finite()) {
            return bad("discriminator rate must be positive");
        }
        if !(self.lambda_adv >= 0.0 && self.lambda_adv.is_finite()) {
            return bad("lambda_adv must be nonnegative");
        }
        if self.batch_size < 2 {
            return bad("batch size must be at least 2");
        }
        if self.epochs == 0 || self.hidden == 0 || self.latent == 0 || self.disc_hidden == 0 {
            return bad("epochs and layer widths must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossValues {
    pub l_cls: f64,
    pub l_adv: f64,
}

/// Latents of both batches under a fixed classifier, with their summed
/// cross-entropy.
struct Encoded {
    source: Vec<Vec<f64>>,
    target: Vec<Vec<f64>>,
    ce_sum: f64,
}

fn encode(f: &Classifier, source: &[&Example], target: &[&Example]) -> Encoded {
    let mut ce_sum = 0.0;
    let mut run = |batch: &[&Example]| -> Vec<Vec<f64>> {
        batch
            .iter()
            .map(|e| {
                let t = f.trace(&e.x);
                ce_sum -= ln(t.probs[e.label].max(f64::MIN_POSITIVE));
                t.latent
            })
            .collect()
    };
    let target_z = run(target);
    let source_z = run(source);
    Encoded {
        source: source_z,
        target: target_z,
        ce_sum,
    }
}

impl Encoded {
    fn losses(&self, d: &Discriminator) -> LossValues {
        let lt: f64 = self.target.iter().map(|z| ln(d.output(z))).sum();
        let ls: f64 = self.source.iter().map(|z| ln(1.0 - d.output(z))).sum();
        LossValues {
            l_cls: self.ce_sum / (self.source.len() + self.target.len()) as f64,
            l_adv: lt / self.target.len() as f64 + ls / self.source.len() as f64,
        }
    }

    fn discriminator_gradient(&self, d: &Discriminator) -> (f64, Discriminator) {
        let mut grad = d.zeros_like();
        let mut l_adv = 0.0;
        for (is_target, batch) in [(false, &self.source), (true, &self.target)] {
            let m = batch.len() as f64;
            for z in batch.iter() {
                let dt = d.trace(z);
                let dd = if is_target {
                    l_adv += ln(dt.d) / m;
                    1.0 / (m * dt.d)
                } else {
                    l_adv += ln(1.0 - dt.d) / m;
                    -1.0 / (m * (1.0 - dt.d))
                };
                d.backward(z, &dt, dd, Some(&mut grad), false);
            }
        }
        (l_adv, grad)
    }
}

/// `L_cls`: mean cross-entropy over both batches. `L_adv`: mean log D on
/// target plus mean log(1 - D) on source.
pub fn adversarial_losses(
    f: &Classifier,
    d: &Discriminator,
    source: &[&Example],
    target: &[&Example],
) -> LossValues {
    encode(f, source, target).losses(d)
}

/// Mean cross-entropy over `examples`.
pub fn classification_loss(f: &Classifier, examples: &[&Example]) -> f64 {
    let ce: f64 = examples
        .iter()
        .map(|e| -ln(f.trace(&e.x).probs[e.label].max(f64::MIN_POSITIVE)))
        .sum();
    ce / examples.len() as f64
}

/// Gradient of `L_cls + lambda * L_adv` with respect to the classifier.
/// Source examples come first in the cross-entropy mean. With
/// `lambda == 0` (or no discriminator) the adversarial path is skipped
/// entirely, so the result equals the plain cross-entropy gradient bit for
/// bit.
pub fn classifier_gradient(
    f: &Classifier,
    d: Option<&Discriminator>,
    source: &[&Example],
    target: &[&Example],
    lambda: f64,
) -> (f64, Classifier) {
    let mut grad = f.zeros_like();
    let n = (source.len() + target.len()) as f64;
    let adversary = d.filter(|_| lambda != 0.0);
    let mut ce = 0.0;
    let mut dlogits = vec![0.0; f.classes()];
    for (is_target, batch) in [(false, source), (true, target)] {
        for e in batch.iter() {
            let t = f.trace(&e.x);
            ce -= ln(t.probs[e.label].max(f64::MIN_POSITIVE));
            for (k, (g, p)) in dlogits.iter_mut().zip(&t.probs).enumerate() {
                *g = (p - if k == e.label { 1.0 } else { 0.0 }) / n;
            }
            let extra = adversary.map(|d| {
                let dt = d.trace(&t.latent);
                // d/dD of (1/n_t) log D or (1/n_s) log(1 - D)
                let dd = if is_target {
                    1.0 / (target.len() as f64 * dt.d)
                } else {
                    -1.0 / (source.len() as f64 * (1.0 - dt.d))
                };
                let mut dz = d
                    .backward(&t.latent, &dt, dd, None, true)
                    .expect("requested");
                dz.iter_mut().for_each(|v| *v *= lambda);
                dz
            });
            f.backward(&e.x, &t, &dlogits, extra.as_deref(), &mut grad);
        }
    }
    (ce / n, grad)
}

/// Gradient of `L_adv` with respect to the discriminator, classifier fixed.
pub fn discriminator_gradient(
    f: &Classifier,
    d: &Discriminator,
    source: &[&Example],
    target: &[&Example],
) -> (f64, Discriminator) {
    encode(f, source, target).discriminator_gradient(d)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainingStepLog {
    pub before: LossValues,
    /// After the discriminator phase, before the classifier phase.
    pub after_disc: LossValues,
    pub after: LossValues,
}

/// One round of the minimax game: the discriminator ascends `L_adv` with
/// the classifier frozen, then the classifier descends
/// `L_cls + lambda * L_adv` with the discriminator frozen.
pub fn alternating_step(
    f: &mut Classifier,
    d: &mut Discriminator,
    source: &[&Example],
    target: &[&Example],
    config: &TrainConfig,
) -> TrainingStepLog {
    // the classifier is frozen through the discriminator phase
    let encoded = encode(f, source, target);
    let before = encoded.losses(d);
    for _ in 0..config.disc_steps {
        let (_, gd) = encoded.discriminator_gradient(d);
        d.axpy(config.lr_disc, &gd);
    }
    let after_disc = encoded.losses(d);
    let (_, gf) = classifier_gradient(f, Some(d), source, target, config.lambda_adv);
    f.axpy(-config.lr, &gf);
    let after = adversarial_losses(f, d, source, target);
    TrainingStepLog {
        before,
        after_disc,
        after,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Phase {
    Train,
    Pretrain,
    Finetune,
    Discriminator,
    Classifier,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Train => "train",
            Phase::Pretrain => "pretrain",
            Phase::Finetune => "finetune",
            Phase::Discriminator => "disc",
            Phase::Classifier => "model",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossRecord {
    pub step: usize,
    pub phase: Phase,
    pub l_cls: f64,
    /// Present only where a discriminator is trained.
    pub l_adv: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub classes: Vec<alloc::string::String>,
    pub classifier: Classifier,
    pub discriminator: Option<Discriminator>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub model: TrainedModel,
    pub curve: Vec<LossRecord>,
    /// Classifier parameters after every update, when requested.
    pub trajectory: Vec<Vec<f64>>,
}

/// Shuffled pass over `0..n`, reshuffled every time it wraps.
struct Cycle {
    order: Vec<usize>,
    pos: usize,
}

impl Cycle {
    fn new(n: usize, rng: &mut RngStream) -> Cycle {
        let mut order: Vec<usize> = (0..n).collect();
        rng.shuffle(&mut order);
        Cycle { order, pos: 0 }
    }

    fn take(&mut self, k: usize, rng: &mut RngStream) -> Vec<usize> {
        let mut out = Vec::with_capacity(k);
        for _ in 0..k {
            if self.pos == self.order.len() {
                rng.shuffle(&mut self.order);
                self.pos = 0;
            }
            out.push(self.order[self.pos]);
            self.pos += 1;
        }
        out
    }
}

fn refs<'a>(data: &'a DomainDataset, idx: &[usize]) -> Vec<&'a Example> {
    idx.iter().map(|&i| &data.examples[i]).collect()
}

struct Run<'a> {
    config: &'a TrainConfig,
    rng: RngStream,
    curve: Vec<LossRecord>,
    trajectory: Option<Vec<Vec<f64>>>,
    step: usize,
}

impl Run<'_> {
    fn record(&mut self, phase: Phase, l_cls: f64, l_adv: Option<f64>, f: &Classifier) {
        self.curve.push(LossRecord {
            step: self.step,
            phase,
            l_cls,
            l_adv,
        });
        if let Some(t) = self.trajectory.as_mut() {
            if phase != Phase::Discriminator {
                t.push(f.flat());
            }
        }
    }

    /// Plain minibatch SGD over one domain; the last batch of an epoch may
    /// be short.
    fn single(
        &mut self,
        f: &mut Classifier,
        data: &DomainDataset,
        epochs: usize,
        lr: f64,
        phase: Phase,
    ) {
        let b = self.config.batch_size;
        for _ in 0..epochs {
            let mut order: Vec<usize> = (0..data.examples.len()).collect();
            self.rng.shuffle(&mut order);
            for chunk in order.chunks(b) {
                let batch = refs(data, chunk);
                let (l, g) = classifier_gradient(f, None, &batch, &[], 0.0);
                f.axpy(-lr, &g);
                self.record(phase, l, None, f);
                self.step += 1;
            }
        }
    }

    /// Batches drawn half from each domain (the odd example goes to the
    /// source). An epoch is enough steps to cover the larger domain once.
    fn mixed(
        &mut self,
        f: &mut Classifier,
        mut d: Option<&mut Discriminator>,
        source: &DomainDataset,
        target: &DomainDataset,
    ) {
        let bt = self.config.batch_size / 2;
        let bs = self.config.batch_size - bt;
        let steps = (source.examples.len().div_ceil(bs)).max(target.examples.len().div_ceil(bt));
        let mut cs = Cycle::new(source.examples.len(), &mut self.rng);
        let mut ct = Cycle::new(target.examples.len(), &mut self.rng);
        for _ in 0..self.config.epochs {
            for _ in 0..steps {
                let si = cs.take(bs, &mut self.rng);
                let ti = ct.take(bt, &mut self.rng);
                let (sb, tb) = (refs(source, &si), refs(target, &ti));
                match d.as_deref_mut() {
                    Some(d) => {
                        let log = alternating_step(f, d, &sb, &tb, self.config);
                        self.record(
                            Phase::Discriminator,
                            log.after_disc.l_cls,
                            Some(log.after_disc.l_adv),
                            f,
                        );
                        self.record(Phase::Classifier, log.after.l_cls, Some(log.after.l_adv), f);
                    }
                    None => {
                        let (l, g) = classifier_gradient(f, None, &sb, &tb, 0.0);
                        f.axpy(-self.config.lr, &g);
                        self.record(Phase::Train, l, None, f);
                    }
                }
                self.step += 1;
            }
        }
    }
}

fn check_dataset(
    data: &DomainDataset,
    classes: &[alloc::string::String],
    dim: usize,
) -> Result<(), LearnError> {
    data.validate()?;
    if data.classes != classes {
        return Err(LearnError::LabelSpace);
    }
    if data.dim() != dim {
        return Err(LearnError::Dimension {
            expected: dim,
            found: data.dim(),
        });
    }
    Ok(())
}

/// Train with `config.strategy`. Initial weights, discriminator weights and
/// the batch schedule each come from their own stream derived from
/// `config.seed`.
pub fn train(
    synthetic: Option<&DomainDataset>,
    real: Option<&DomainDataset>,
    config: &TrainConfig,
) -> Result<TrainOutcome, LearnError> {
    train_impl(synthetic, real, config, false)
}

/// As [`train`], also recording the classifier parameters after each update.
pub fn train_with_trajectory(
    synthetic: Option<&DomainDataset>,
    real: Option<&DomainDataset>,
    config: &TrainConfig,
) -> Result<TrainOutcome, LearnError> {
    train_impl(synthetic, real, config, true)
}

fn train_impl(
    synthetic: Option<&DomainDataset>,
    real: Option<&DomainDataset>,
    config: &TrainConfig,
    keep_trajectory: bool,
) -> Result<TrainOutcome, LearnError> {
    config.validate()?;
    let s = config.strategy;
    let syn = if s.needs_synthetic() {
        Some(synthetic.ok_or(LearnError::MissingDataset {
            strategy: s.as_str(),
            domain: "synthetic",
        })?)
    } else {
        None
    };
    let rl = if s.needs_real() {
        Some(real.ok_or(LearnError::MissingDataset {
            strategy: s.as_str(),
            domain: "real",
        })?)
    } else {
        None
    };
    let first = syn.or(rl).expect("every strategy uses a dataset");
    let classes = first.classes.clone();
    let dim = first.dim();
    for d in [syn, rl].into_iter().flatten() {
        check_dataset(d, &classes, dim)?;
    }
    let mut f = Classifier::new(
        dim,
        config.hidden,
        config.latent,
        classes.len(),
        &mut derive_stream(config.seed, 1),
    );
    let mut disc = (s == Strategy::Adversarial).then(|| {
        Discriminator::new(
            config.latent,
            config.disc_hidden,
            &mut derive_stream(config.seed, 2),
        )
    });
    let mut run = Run {
        config,
        rng: derive_stream(config.seed, 3),
        curve: Vec::new(),
        trajectory: keep_trajectory.then(Vec::new),
        step: 0,
    };
    match s {
        Strategy::RealOnly => run.single(
            &mut f,
            rl.expect("checked"),
            config.epochs,
            config.lr,
            Phase::Train,
        ),
        Strategy::SyntheticOnly => run.single(
            &mut f,
            syn.expect("checked"),
            config.epochs,
            config.lr,
            Phase::Train,
        ),
        Strategy::Finetune => {
            run.single(
                &mut f,
                syn.expect("checked"),
                config.epochs,
                config.lr,
                Phase::Pretrain,
            );
            run.single(
                &mut f,
                rl.expect("checked"),
                config.finetune_epochs,
                config.lr_finetune,
                Phase::Finetune,
            );
        }
        Strategy::Joint => run.mixed(&mut f, None, syn.expect("checked"), rl.expect("checked")),
        Strategy::Adversarial => run.mixed(
            &mut f,
            disc.as_mut(),
            syn.expect("checked"),
            rl.expect("checked"),
        ),
    }
    Ok(TrainOutcome {
        model: TrainedModel {
            classes,
            classifier: f,
            discriminator: disc,
        },
        curve: run.curve,
        trajectory: run.trajectory.unwrap_or_default(),
    })
}
