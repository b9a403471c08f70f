//! Siamese ranking trainer: each sample scores a query against one positive
//! and five hard negatives, the loss is softmax cross-entropy over the six
//! logits, and parameters follow Adam with early stopping on validation
//! accuracy.

use std::collections::HashMap;
use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::{backward, Objective, Real};
use crate::error::{Error, Result};
use crate::model::{CachedScorer, Embedded, HeadKind, Model, ModelShape, DEFAULT_TEMPERATURE};
use crate::store::{write_atomic, EmbeddingStore};

pub const NUM_NEGATIVES: usize = 5;

/// Stream id separating the shuffle RNG from parameter initialisation.
const SHUFFLE_STREAM: u64 = 0x5eed_5bff;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingSample {
    pub query: String,
    pub pos: String,
    pub negs: Vec<String>,
}

impl TrainingSample {
    pub fn new(query: impl Into<String>, pos: impl Into<String>, negs: Vec<String>) -> Result<Self> {
        let s = Self {
            query: query.into(),
            pos: pos.into(),
            negs,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.negs.len() != NUM_NEGATIVES {
            return Err(Error::Domain(format!(
                "sample for {:?} has {} negatives, expected {NUM_NEGATIVES}",
                self.query,
                self.negs.len()
            )));
        }
        if self.negs.contains(&self.pos) {
            return Err(Error::Domain(format!("negative equals positive {:?}", self.pos)));
        }
        Ok(())
    }

    /// Positive first, then the negatives.
    pub fn candidates(&self) -> impl Iterator<Item = &str> {
        std::iter::once(self.pos.as_str()).chain(self.negs.iter().map(String::as_str))
    }

    pub fn check_ids(&self, store: &EmbeddingStore) -> Result<()> {
        for id in std::iter::once(self.query.as_str()).chain(self.candidates()) {
            store.require(id)?;
        }
        Ok(())
    }
}

pub fn load_samples(path: &Path) -> Result<Vec<TrainingSample>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(format!("read {}", path.display()), e))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let s: TrainingSample = serde_json::from_str(line).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            msg: e.to_string(),
        })?;
        s.validate().map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            msg: e.to_string(),
        })?;
        out.push(s);
    }
    Ok(out)
}

pub fn save_samples(path: &Path, samples: &[TrainingSample]) -> Result<()> {
    write_atomic(path, |w| {
        for s in samples {
            serde_json::to_writer(&mut *w, s)?;
            w.write_all(b"\n").map_err(|e| Error::io("write samples", e))?;
        }
        Ok(())
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub lr: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub seed: u64,
    /// Initial temperature; trained together with the other parameters.
    pub temperature: f64,
    pub head_kind: HeadKind,
    /// Output width of the head (ignored for [`HeadKind::None`]).
    pub d_out: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr: 0.02,
            batch_size: 16,
            max_epochs: 20,
            seed: 42,
            temperature: DEFAULT_TEMPERATURE,
            head_kind: HeadKind::Quantum,
            d_out: 8,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0 && self.lr < 1.0) {
            return Err(Error::Config(format!("learning rate {} outside (0, 1)", self.lr)));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be at least 1".into()));
        }
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return Err(Error::Config(format!(
                "temperature {} must be positive",
                self.temperature
            )));
        }
        Ok(())
    }

    pub fn shape(&self, d_in: usize) -> Result<ModelShape> {
        let d_out = match self.head_kind {
            HeadKind::None => d_in,
            _ => self.d_out,
        };
        ModelShape::new(self.head_kind, d_in, d_out)
    }
}

/// `−log softmax(logits)[pos_index]`, computed stably.
pub fn ranking_loss<R: Real>(logits: &[R], pos_index: usize) -> Result<R> {
    if pos_index >= logits.len() {
        return Err(Error::Domain(format!(
            "positive index {pos_index} out of range for {} logits",
            logits.len()
        )));
    }
    if let Some(l) = logits.iter().find(|l| !l.value().is_finite()) {
        return Err(Error::Domain(format!("non-finite logit {:?}", l.value())));
    }
    let m = logits.iter().map(|l| l.value()).fold(f64::NEG_INFINITY, f64::max);
    let mut sum = (logits[0] - m).exp();
    for &l in &logits[1..] {
        sum = sum + (l - m).exp();
    }
    Ok(sum.ln() + m - logits[pos_index])
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub step: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamState {
    pub fn new(n: usize) -> Self {
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
            step: 0,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// One bias-corrected Adam update in place.
pub fn adam_step(params: &mut [f64], grads: &[f64], state: &mut AdamState, lr: f64) -> Result<()> {
    if params.len() != grads.len() || params.len() != state.m.len() {
        return Err(Error::Dimension {
            expected: params.len(),
            got: grads.len().min(state.m.len()),
        });
    }
    if let Some(index) = grads.iter().position(|g| !g.is_finite()) {
        return Err(Error::NonFiniteGradient { index });
    }
    state.step += 1;
    let t = state.step as i32;
    let c1 = 1.0 - state.beta1.powi(t);
    let c2 = 1.0 - state.beta2.powi(t);
    for i in 0..params.len() {
        let g = grads[i];
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g;
        state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g * g;
        let m_hat = state.m[i] / c1;
        let v_hat = state.v[i] / c2;
        params[i] -= lr * m_hat / (v_hat.sqrt() + state.eps);
    }
    Ok(())
}

/// Mean ranking loss of a batch as a function of the flat model parameters.
pub struct BatchObjective<'a> {
    pub shape: ModelShape,
    pub store: &'a EmbeddingStore,
    pub samples: &'a [TrainingSample],
    pub eps: f64,
}

impl Objective for BatchObjective<'_> {
    fn eval<R: Real>(&self, params: &[R]) -> Result<R> {
        if self.samples.is_empty() {
            return Err(Error::Domain("empty batch".into()));
        }
        let view = self.shape.view(params)?;
        let mut cache: HashMap<String, Embedded<R>> = HashMap::new();
        let mut embed = |id: &str| -> Result<Embedded<R>> {
            if let Some(e) = cache.get(id) {
                return Ok(e.clone());
            }
            let e = view.embed(self.store.require(id)?)?;
            cache.insert(id.to_string(), e.clone());
            Ok(e)
        };
        let mut total: Option<R> = None;
        for s in self.samples {
            let q = embed(&s.query)?;
            let mut logits = Vec::with_capacity(1 + NUM_NEGATIVES);
            for id in s.candidates() {
                let d = embed(id)?;
                logits.push(view.score(&q, &d, self.eps)?);
            }
            let l = ranking_loss(&logits, 0)?;
            total = Some(match total {
                Some(t) => t + l,
                None => l,
            });
        }
        Ok(total.expect("nonempty batch") / self.samples.len() as f64)
    }
}

/// Fraction of samples whose positive gets the strictly highest score of
/// its candidates; ties count as failures.
pub fn validation_accuracy_with<F>(samples: &[TrainingSample], mut score: F) -> Result<f64>
where
    F: FnMut(&str, &str) -> Result<f64>,
{
    if samples.is_empty() {
        return Err(Error::Domain("validation set is empty".into()));
    }
    let mut hits = 0usize;
    for s in samples {
        let pos = score(&s.query, &s.pos)?;
        let mut best_neg = f64::NEG_INFINITY;
        for n in &s.negs {
            best_neg = best_neg.max(score(&s.query, n)?);
        }
        if pos > best_neg {
            hits += 1;
        }
    }
    Ok(hits as f64 / samples.len() as f64)
}

pub fn validation_accuracy(model: &Model, store: &EmbeddingStore, samples: &[TrainingSample]) -> Result<f64> {
    let mut scorer = CachedScorer::new(model, store)?;
    validation_accuracy_with(samples, |a, b| scorer.score(a, b))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_acc: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Snapshot with the best validation accuracy (earliest on ties).
    pub model: Model,
    pub history: Vec<EpochRecord>,
    pub best_epoch: Option<usize>,
}

pub fn history_jsonl(history: &[EpochRecord]) -> Result<String> {
    let mut out = String::new();
    for r in history {
        out.push_str(&serde_json::to_string(r)?);
        out.push('\n');
    }
    Ok(out)
}

pub fn train(
    store: &EmbeddingStore,
    train_samples: &[TrainingSample],
    val_samples: &[TrainingSample],
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if train_samples.is_empty() || val_samples.is_empty() {
        return Err(Error::Domain("training and validation sets must be nonempty".into()));
    }
    for s in train_samples.iter().chain(val_samples) {
        s.validate()?;
        s.check_ids(store)?;
    }
    let shape = cfg.shape(store.dim())?;
    let mut model = Model::init(shape, cfg.seed, cfg.temperature)?;
    let mut adam = AdamState::new(shape.num_params());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(SHUFFLE_STREAM);

    let mut history = Vec::with_capacity(cfg.max_epochs);
    let mut best: Option<(f64, usize, Vec<f64>)> = None;
    let mut order: Vec<usize> = (0..train_samples.len()).collect();

    for epoch in 1..=cfg.max_epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut batches = 0usize;
        for (b, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let batch: Vec<TrainingSample> = chunk.iter().map(|&i| train_samples[i].clone()).collect();
            let objective = BatchObjective {
                shape,
                store,
                samples: &batch,
                eps: model.eps,
            };
            let diverged = |loss: f64| Error::Divergence { epoch, batch: b, loss };
            let report = backward(&objective, &model.params).map_err(|e| match e {
                Error::NonFinite { .. } | Error::Domain(_) => diverged(f64::NAN),
                other => other,
            })?;
            if !report.value.is_finite() {
                return Err(diverged(report.value));
            }
            adam_step(&mut model.params, &report.grads, &mut adam, cfg.lr).map_err(|_| diverged(report.value))?;
            Model::project(&mut model.params, &shape);
            loss_sum += report.value;
            batches += 1;
        }
        let val_acc = validation_accuracy(&model, store, val_samples)?;
        history.push(EpochRecord {
            epoch,
            train_loss: loss_sum / batches as f64,
            val_acc,
        });
        if best.as_ref().is_none_or(|(acc, _, _)| val_acc > *acc) {
            best = Some((val_acc, epoch, model.params.clone()));
        }
    }

    let best_epoch = best.as_ref().map(|(_, e, _)| *e);
    if let Some((_, _, params)) = best {
        model.params = params;
    }
    Ok(TrainOutcome {
        model,
        history,
        best_epoch,
    })
}
