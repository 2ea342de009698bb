use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::net::{softmax, Cnn, ForwardMode, GradStore, TrainCache};
use super::tensor::Tensor;
use super::weights::ModelWeights;
use crate::error::{Error, Result};
use crate::seeds;

/// Optimizer and schedule. `Default` is the reference recipe: SGD with
/// learning rate 0.001, momentum 0.9, batches of 256, patience 5.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub momentum: f64,
    pub batch_size: usize,
    pub early_stop_patience: usize,
    pub max_epochs: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.001,
            momentum: 0.9,
            batch_size: 256,
            early_stop_patience: 5,
            max_epochs: 50,
            seed: 0,
        }
    }
}

impl TrainConfig {
    /// Reference recipe with batches of 64, for single-machine runs.
    pub fn desk() -> Self {
        Self {
            batch_size: 64,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) || !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::param("learning rate must be positive and momentum in [0, 1)"));
        }
        if self.batch_size == 0 || self.max_epochs == 0 || self.early_stop_patience == 0 {
            return Err(Error::param("batch size, epochs and patience must be positive"));
        }
        Ok(())
    }
}

/// One labelled classifier input `[3 × F × T]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub input: Tensor,
    pub label: usize,
}

/// Indexed collection of examples produced on demand.
pub trait ExampleSet {
    fn len(&self) -> usize;
    fn example(&self, index: usize) -> Result<Example>;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Examples for several indices, in order. Implementations may compute
    /// them in parallel as long as each result depends only on its index.
    fn examples(&self, indices: &[usize]) -> Result<Vec<Example>> {
        indices.iter().map(|&i| self.example(i)).collect()
    }
}

impl ExampleSet for [Example] {
    fn len(&self) -> usize {
        <[Example]>::len(self)
    }

    fn example(&self, index: usize) -> Result<Example> {
        self.get(index)
            .cloned()
            .ok_or_else(|| Error::param(format!("example {index} out of range")))
    }
}

impl ExampleSet for Vec<Example> {
    fn len(&self) -> usize {
        self.as_slice().len()
    }

    fn example(&self, index: usize) -> Result<Example> {
        self.as_slice().example(index)
    }
}

/// Training data that is re-drawn every epoch, so augmentation can be
/// re-sampled. After `begin_epoch`, the source acts as that epoch's set.
pub trait EpochSource: ExampleSet {
    fn begin_epoch(&mut self, epoch: usize, epoch_seed: u64) -> Result<()>;
}

/// Epoch source backed by a closure that materializes each epoch's examples.
pub struct FnSource<F> {
    make: F,
    current: Vec<Example>,
}

impl<F> FnSource<F>
where
    F: FnMut(usize, u64) -> Result<Vec<Example>>,
{
    pub fn new(make: F) -> Self {
        Self {
            make,
            current: Vec::new(),
        }
    }
}

impl<F> ExampleSet for FnSource<F> {
    fn len(&self) -> usize {
        self.current.len()
    }

    fn example(&self, index: usize) -> Result<Example> {
        self.current.example(index)
    }
}

impl<F> EpochSource for FnSource<F>
where
    F: FnMut(usize, u64) -> Result<Vec<Example>>,
{
    fn begin_epoch(&mut self, epoch: usize, epoch_seed: u64) -> Result<()> {
        self.current = (self.make)(epoch, epoch_seed)?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub epoch_seed: u64,
    pub train_loss: f64,
    pub train_accuracy: f64,
    pub val_loss: f64,
    pub val_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub best: ModelWeights,
    pub best_epoch: usize,
    pub history: Vec<EpochRecord>,
    pub stopped_early: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StopDecision {
    pub improved: bool,
    pub stop: bool,
}

/// Patience-based early stopping on a metric where larger is better. Only a
/// strict improvement resets the counter.
#[derive(Debug, Clone, PartialEq)]
pub struct EarlyStopping {
    patience: usize,
    best: Option<f64>,
    best_epoch: usize,
    since_best: usize,
}

impl EarlyStopping {
    pub fn new(patience: usize) -> Self {
        Self {
            patience,
            best: None,
            best_epoch: 0,
            since_best: 0,
        }
    }

    pub fn update(&mut self, epoch: usize, metric: f64) -> StopDecision {
        let improved = self.best.is_none_or(|b| metric > b);
        if improved {
            self.best = Some(metric);
            self.best_epoch = epoch;
            self.since_best = 0;
        } else {
            self.since_best += 1;
        }
        StopDecision {
            improved,
            stop: self.since_best >= self.patience,
        }
    }

    pub fn best_epoch(&self) -> usize {
        self.best_epoch
    }
}

/// Velocity buffers for classic momentum.
#[derive(Debug, Clone, PartialEq)]
pub struct Momentum {
    velocity: Vec<(String, Vec<f64>)>,
}

impl Momentum {
    pub fn new(model: &Cnn) -> Self {
        Self {
            velocity: model
                .params
                .iter()
                .filter(|p| p.trainable)
                .map(|p| (p.name.clone(), vec![0.0; p.data.len()]))
                .collect(),
        }
    }
}

/// Classic momentum: `v ← μ·v + g; p ← p − lr·v`.
pub fn sgd_step(model: &mut Cnn, grads: &GradStore, state: &mut Momentum, lr: f64, momentum: f64) -> Result<()> {
    let trainable: Vec<_> = model.params.iter_mut().filter(|p| p.trainable).collect();
    if trainable.len() != grads.entries.len() || trainable.len() != state.velocity.len() {
        return Err(Error::Internal("parameter, gradient and velocity counts differ".into()));
    }
    for ((p, (gn, g)), (vn, v)) in trainable.into_iter().zip(&grads.entries).zip(&mut state.velocity) {
        if &p.name != gn || &p.name != vn || g.len() != p.data.len() || v.len() != p.data.len() {
            return Err(Error::Internal(format!("key mismatch at {} / {gn} / {vn}", p.name)));
        }
        for ((w, &gi), vi) in p.data.iter_mut().zip(g).zip(v.iter_mut()) {
            *vi = momentum * *vi + gi;
            *w -= lr * *vi;
        }
    }
    Ok(())
}

fn check_labels(model: &Cnn, batch: &Tensor, labels: &[usize]) -> Result<()> {
    if batch.shape().first() != Some(&labels.len()) {
        return Err(Error::param(format!(
            "{} labels for batch of shape {:?}",
            labels.len(),
            batch.shape()
        )));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= model.num_classes()) {
        return Err(Error::param(format!(
            "label {bad} outside [0, {})",
            model.num_classes()
        )));
    }
    Ok(())
}

// Mean cross-entropy and its logit gradient.
fn cross_entropy(logits: &[f64], k: usize, labels: &[usize]) -> (f64, Vec<f64>, usize) {
    let n = labels.len();
    let mut loss = 0.0;
    let mut correct = 0;
    let mut d = vec![0.0; n * k];
    for (i, &y) in labels.iter().enumerate() {
        let row = &logits[i * k..(i + 1) * k];
        let p = softmax(row);
        loss -= p[y].max(f64::MIN_POSITIVE).ln();
        if argmax_lowest(row) == y {
            correct += 1;
        }
        for j in 0..k {
            d[i * k + j] = (p[j] - if j == y { 1.0 } else { 0.0 }) / n as f64;
        }
    }
    (loss / n as f64, d, correct)
}

fn loss_grad_cache(model: &Cnn, batch: &Tensor, labels: &[usize]) -> Result<(f64, GradStore, TrainCache, usize)> {
    check_labels(model, batch, labels)?;
    let (logits, cache) = model.forward_train(batch)?;
    let (loss, d, correct) = cross_entropy(logits.data(), model.num_classes(), labels);
    let grads = model.backward(&cache, &d);
    Ok((loss, grads, cache, correct))
}

/// Mean cross-entropy of a batch in training mode (batch statistics) and the
/// gradient of every trainable parameter. Running statistics are untouched.
pub fn loss_and_grad(model: &Cnn, batch: &Tensor, labels: &[usize]) -> Result<(f64, GradStore)> {
    let (loss, grads, _, _) = loss_grad_cache(model, batch, labels)?;
    Ok((loss, grads))
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax_lowest(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub label: usize,
    pub probabilities: Vec<f64>,
}

impl Prediction {
    fn from_logits(logits: &[f64]) -> Self {
        let probabilities = softmax(logits);
        Self {
            label: argmax_lowest(&probabilities),
            probabilities,
        }
    }
}

/// Eval-mode prediction for one `[3 × F × T]` input.
pub fn predict(model: &Cnn, input: &Tensor) -> Result<Prediction> {
    Ok(Prediction::from_logits(&model.forward_one(input)?))
}

/// Eval-mode predictions for equally shaped inputs; identical to calling
/// [`predict`] on each.
pub fn predict_batch(model: &Cnn, inputs: &[&Tensor]) -> Result<Vec<Prediction>> {
    if inputs.is_empty() {
        return Ok(Vec::new());
    }
    let logits = model.forward(&Tensor::stack(inputs)?, ForwardMode::Eval)?;
    let k = model.num_classes();
    Ok(logits.data().chunks(k).map(Prediction::from_logits).collect())
}

const EVAL_CHUNK: usize = 64;

fn evaluate(model: &Cnn, set: &dyn ExampleSet) -> Result<(f64, f64)> {
    let mut loss = 0.0;
    let mut correct = 0usize;
    let all: Vec<usize> = (0..set.len()).collect();
    for idx in all.chunks(EVAL_CHUNK) {
        let chunk = set.examples(idx)?;
        let inputs: Vec<&Tensor> = chunk.iter().map(|e| &e.input).collect();
        for (p, e) in predict_batch(model, &inputs)?.iter().zip(&chunk) {
            loss -= p.probabilities[e.label].max(f64::MIN_POSITIVE).ln();
            correct += usize::from(p.label == e.label);
        }
    }
    let n = set.len() as f64;
    Ok((loss / n, correct as f64 / n))
}

/// Trains with mini-batch SGD, re-drawing the training set from `source`
/// every epoch, and stops after `early_stop_patience` epochs without a strict
/// validation-accuracy improvement. Weights are rounded to f32 at the end of
/// every epoch so the returned best weights are exactly the evaluated ones.
pub fn train(
    model: &mut Cnn,
    source: &mut dyn EpochSource,
    val: &dyn ExampleSet,
    cfg: &TrainConfig,
    observer: &mut dyn FnMut(&EpochRecord),
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if val.is_empty() {
        return Err(Error::param("validation set is empty"));
    }
    let mut state = Momentum::new(model);
    let mut stopper = EarlyStopping::new(cfg.early_stop_patience);
    let mut history = Vec::new();
    let mut best = model.to_weights();
    let mut stopped_early = false;
    for epoch in 1..=cfg.max_epochs {
        let epoch_seed = seeds::derive(&[cfg.seed, epoch as u64]);
        source.begin_epoch(epoch, epoch_seed)?;
        let n_items = source.len();
        if n_items == 0 {
            return Err(Error::param("training set is empty"));
        }
        let mut order: Vec<usize> = (0..n_items).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seeds::derive(&[epoch_seed, 1])));
        let mut loss_sum = 0.0;
        let mut correct = 0usize;
        for idx in order.chunks(cfg.batch_size) {
            let chunk = source.examples(idx)?;
            let inputs: Vec<&Tensor> = chunk.iter().map(|e| &e.input).collect();
            let labels: Vec<usize> = chunk.iter().map(|e| e.label).collect();
            let batch = Tensor::stack(&inputs)?;
            let (loss, grads, cache, ok) = loss_grad_cache(model, &batch, &labels)?;
            model.update_running_stats(&cache);
            sgd_step(model, &grads, &mut state, cfg.learning_rate, cfg.momentum)?;
            loss_sum += loss * chunk.len() as f64;
            correct += ok;
        }
        model.quantize();
        let (val_loss, val_accuracy) = evaluate(model, val)?;
        let record = EpochRecord {
            epoch,
            epoch_seed,
            train_loss: loss_sum / n_items as f64,
            train_accuracy: correct as f64 / n_items as f64,
            val_loss,
            val_accuracy,
        };
        observer(&record);
        history.push(record);
        let d = stopper.update(epoch, val_accuracy);
        if d.improved {
            best = model.to_weights();
        }
        if d.stop {
            stopped_early = true;
            break;
        }
    }
    Ok(TrainOutcome {
        best,
        best_epoch: stopper.best_epoch(),
        history,
        stopped_early,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::config::{BlockConfig, CompactCnnConfig};

    fn tiny(classes: usize) -> Cnn {
        let cfg = CompactCnnConfig {
            blocks: vec![BlockConfig::new(4), BlockConfig::new(6)],
            ..CompactCnnConfig::with_classes(classes)
        };
        Cnn::new(cfg, 3).unwrap()
    }

    fn batch(n: usize, h: usize, w: usize, seed: u64) -> Tensor {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Tensor::new(vec![n, 3, h, w], (0..n * 3 * h * w).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
    }

    #[test]
    fn defaults_are_reference_recipe() {
        let c = TrainConfig::default();
        assert_eq!((c.learning_rate, c.momentum, c.batch_size, c.early_stop_patience), (0.001, 0.9, 256, 5));
        assert_eq!(TrainConfig::desk().batch_size, 64);
    }

    #[test]
    fn uniform_logits_loss() {
        let logits = vec![0.25; 98 * 2];
        let (loss, _, _) = cross_entropy(&logits, 98, &[3, 97]);
        assert!((loss - 98f64.ln()).abs() < 1e-12);
        assert!((loss - 4.5850).abs() < 1e-3);
        let mut sharp = vec![0.0; 4];
        sharp[2] = 800.0;
        let (loss, _, _) = cross_entropy(&sharp, 4, &[2]);
        assert!(loss < 1e-300);
    }

    #[test]
    fn bad_labels_rejected() {
        let net = tiny(3);
        let x = batch(2, 8, 8, 1);
        assert!(loss_and_grad(&net, &x, &[0, 3]).is_err());
        assert!(loss_and_grad(&net, &x, &[0]).is_err());
    }

    #[test]
    fn sgd_rules() {
        let mut net = tiny(2);
        let name = "head.bias";
        let grads = |v: f64, net: &Cnn| GradStore {
            entries: net
                .params
                .iter()
                .filter(|p| p.trainable)
                .map(|p| (p.name.clone(), vec![v; p.data.len()]))
                .collect(),
        };
        let p0 = net.param(name).unwrap()[0];
        let mut st = Momentum::new(&net);
        let g = grads(2.0, &net);
        sgd_step(&mut net, &g, &mut st, 0.001, 0.0).unwrap();
        assert!((net.param(name).unwrap()[0] - (p0 - 0.002)).abs() < 1e-15);

        // constant gradient, two steps: Δp = −lr·g·(1 + 1.9)
        let mut net = tiny(2);
        let mut st = Momentum::new(&net);
        let p0 = net.param(name).unwrap()[0];
        for _ in 0..2 {
            let g = grads(1.0, &net);
            sgd_step(&mut net, &g, &mut st, 0.001, 0.9).unwrap();
        }
        assert!((net.param(name).unwrap()[0] - (p0 - 0.001 * 2.9)).abs() < 1e-15);
        // zero gradient still moves by momentum·v
        let before = net.param(name).unwrap()[0];
        let g = grads(0.0, &net);
        sgd_step(&mut net, &g, &mut st, 0.001, 0.9).unwrap();
        let moved = before - net.param(name).unwrap()[0];
        assert!((moved - 0.001 * 0.9 * 1.9).abs() < 1e-15);
        let mut wrong = grads(0.0, &net);
        wrong.entries.pop();
        assert!(matches!(sgd_step(&mut net, &wrong, &mut st, 0.001, 0.9), Err(Error::Internal(_))));
    }

    #[test]
    fn early_stopping_semantics() {
        let mut es = EarlyStopping::new(5);
        let mut stopped_at = None;
        for epoch in 1..=20 {
            if es.update(epoch, 1.0 - epoch as f64 * 0.01).stop {
                stopped_at = Some(epoch);
                break;
            }
        }
        assert_eq!(stopped_at, Some(6));
        assert_eq!(es.best_epoch(), 1);
        let mut es = EarlyStopping::new(2);
        assert!(es.update(1, 0.5).improved);
        assert!(!es.update(2, 0.5).improved);
        assert!(es.update(3, 0.6).improved);
    }

    #[test]
    fn argmax_ties_lowest() {
        let mut v = vec![0.0; 10];
        v[3] = 1.0;
        v[7] = 1.0;
        assert_eq!(argmax_lowest(&v), 3);
    }

    #[test]
    fn batch_predict_matches_single() {
        let net = tiny(3);
        let x = batch(4, 9, 11, 5);
        let items: Vec<Tensor> = (0..4).map(|i| x.item(i).unwrap()).collect();
        let refs: Vec<&Tensor> = items.iter().collect();
        let b = predict_batch(&net, &refs).unwrap();
        for (t, p) in items.iter().zip(&b) {
            assert_eq!(&predict(&net, t).unwrap(), p);
        }
        let p = &b[0];
        let mut sorted = p.probabilities.clone();
        sorted.sort_by(|a, b| b.total_cmp(a));
        assert_eq!(sorted[0], p.probabilities[p.label]);
    }

    #[test]
    fn gradient_check_every_layer_type() {
        // Oracle: central finite differences, ε = 1e-4.
        let net = tiny(4);
        let x = batch(3, 8, 10, 9);
        let labels = [0, 3, 1];
        let (_, grads) = loss_and_grad(&net, &x, &labels).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mut probed = 0;
        let mut kinds = std::collections::BTreeSet::new();
        for (name, g) in &grads.entries {
            use rand::Rng;
            for _ in 0..4 {
                let i = rng.random_range(0..g.len());
                let eps = 1e-4;
                let mut plus = net.clone();
                plus.param_mut(name).unwrap()[i] += eps;
                let mut minus = net.clone();
                minus.param_mut(name).unwrap()[i] -= eps;
                let lp = loss_and_grad(&plus, &x, &labels).unwrap().0;
                let lm = loss_and_grad(&minus, &x, &labels).unwrap().0;
                let fd = (lp - lm) / (2.0 * eps);
                let rel = (fd - g[i]).abs() / fd.abs().max(g[i].abs()).max(1e-8);
                assert!(rel <= 1e-4, "{name}[{i}]: analytic {} vs fd {fd} (rel {rel:e})", g[i]);
                probed += 1;
                kinds.insert(name.rsplit('.').nth(1).unwrap().to_string());
            }
        }
        assert!(probed >= 25);
        assert_eq!(kinds.into_iter().collect::<Vec<_>>(), ["bn", "conv", "head"]);
    }

    #[test]
    fn memorizes_sixteen_samples() {
        let mut net = tiny(4);
        let x = batch(16, 8, 8, 21);
        let labels: Vec<usize> = (0..16).map(|i| i % 4).collect();
        let mut st = Momentum::new(&net);
        let mut last = f64::INFINITY;
        for _ in 0..200 {
            let (loss, g, cache, _) = loss_grad_cache(&net, &x, &labels).unwrap();
            net.update_running_stats(&cache);
            sgd_step(&mut net, &g, &mut st, 0.05, 0.9).unwrap();
            last = loss;
            if loss < 0.01 {
                break;
            }
        }
        assert!(last < 0.01, "loss {last}");
    }

    #[test]
    fn train_is_deterministic_and_keeps_best() {
        let run = || {
            let mut net = tiny(2);
            let make = |_e: usize, seed: u64| -> Result<Vec<Example>> {
                let x = batch(8, 8, 8, seed);
                Ok((0..8)
                    .map(|i| {
                        let mut t = x.item(i).unwrap();
                        if i % 2 == 1 {
                            t.data_mut().iter_mut().for_each(|v| *v += 1.0);
                        }
                        Example { input: t, label: i % 2 }
                    })
                    .collect())
            };
            let val: Vec<Example> = make(0, 99).unwrap();
            let mut src = FnSource::new(make);
            let cfg = TrainConfig {
                batch_size: 4,
                max_epochs: 8,
                early_stop_patience: 3,
                ..TrainConfig::default()
            };
            train(&mut net, &mut src, &val, &cfg, &mut |_| {}).unwrap()
        };
        let a = run();
        let b = run();
        assert_eq!(a.history, b.history);
        assert_eq!(a.best, b.best);
        let best = a.history.iter().map(|r| r.val_accuracy).fold(0.0, f64::max);
        let first_best = a.history.iter().find(|r| r.val_accuracy == best).unwrap().epoch;
        assert_eq!(a.best_epoch, first_best);
        assert!(a.history.len() <= 8);
    }
}
