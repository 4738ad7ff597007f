//! Feed-forward classifier: ReLU hidden layers of 128, 64 and 32 units and a
//! softmax output over the three classes, trained with seeded mini-batch Adam
//! and early stopping on a held-out validation slice.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{check_rows, class_indices, NUM_CLASSES};
use crate::math::{log_sum_exp, softmax_in_place, sqrt};
use crate::{Error, Level, Result};

pub const HIDDEN: [usize; 3] = [128, 64, 32];

/// Parameter count of the `D -> 128 -> 64 -> 32 -> 3` network.
pub const fn parameter_count(input: usize) -> usize {
    128 * input + 128 + 128 * 64 + 64 + 64 * 32 + 32 + 32 * NUM_CLASSES + NUM_CLASSES
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainerConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub epochs: usize,
    pub batch_size: usize,
    /// Share of training rows held out for early stopping; 0 disables it.
    pub validation_fraction: f64,
    pub patience: usize,
    pub seed: u64,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        TrainerConfig {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            epochs: 200,
            batch_size: 32,
            validation_fraction: 0.1,
            patience: 20,
            seed: 42,
        }
    }
}

/// Dense layers over one flat parameter buffer. Layer `l` stores its
/// `out x in` weights row-major followed by its `out` biases.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub sizes: Vec<usize>,
    pub params: Vec<f64>,
}

struct Cache {
    /// Post-activation output of every layer, input first.
    acts: Vec<Vec<f64>>,
}

impl Mlp {
    pub fn topology(input: usize) -> Vec<usize> {
        let mut s = vec![input];
        s.extend(HIDDEN);
        s.push(NUM_CLASSES);
        s
    }

    /// He-uniform weights, zero biases.
    pub fn init(sizes: Vec<usize>, rng: &mut impl Rng) -> Self {
        let total = sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum();
        let mut params = Vec::with_capacity(total);
        for w in sizes.windows(2) {
            let limit = sqrt(6.0 / w[0] as f64);
            params.extend((0..w[0] * w[1]).map(|_| rng.random_range(-limit..limit)));
            params.extend(core::iter::repeat(0.0).take(w[1]));
        }
        Mlp { sizes, params }
    }

    pub fn input_width(&self) -> usize {
        self.sizes[0]
    }

    pub fn parameter_count(&self) -> usize {
        self.params.len()
    }

    fn layers(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        let mut offset = 0;
        self.sizes.windows(2).map(move |w| {
            let at = offset;
            offset += w[0] * w[1] + w[1];
            (at, w[0], w[1])
        })
    }

    fn forward_cached(&self, x: &[f64]) -> (Cache, Vec<f64>) {
        let last = self.sizes.len() - 2;
        let mut acts = vec![x.to_vec()];
        for (l, (off, n_in, n_out)) in self.layers().enumerate() {
            let input = acts.last().expect("input");
            let w = &self.params[off..off + n_in * n_out];
            let b = &self.params[off + n_in * n_out..off + n_in * n_out + n_out];
            let mut z: Vec<f64> = (0..n_out).map(|o| b[o] + crate::math::dot(&w[o * n_in..(o + 1) * n_in], input)).collect();
            if l < last {
                z.iter_mut().for_each(|v| *v = v.max(0.0));
            }
            acts.push(z);
        }
        let logits = acts.pop().expect("output");
        (Cache { acts }, logits)
    }

    pub fn logits(&self, x: &[f64]) -> Vec<f64> {
        self.forward_cached(x).1
    }

    pub fn predict_proba_row(&self, x: &[f64]) -> [f64; NUM_CLASSES] {
        let mut z = self.logits(x);
        softmax_in_place(&mut z);
        [z[0], z[1], z[2]]
    }

    /// Mean cross-entropy over the batch.
    pub fn loss(&self, x: &[&[f64]], y: &[usize]) -> f64 {
        let total: f64 = x.iter().zip(y).map(|(r, &c)| {
            let z = self.logits(r);
            log_sum_exp(&z) - z[c]
        }).sum();
        total / x.len() as f64
    }

    /// Mean cross-entropy over the batch and its gradient.
    pub fn loss_and_grad(&self, x: &[&[f64]], y: &[usize]) -> (f64, Vec<f64>) {
        let mut grad = vec![0.0; self.params.len()];
        let mut loss = 0.0;
        let layers: Vec<(usize, usize, usize)> = self.layers().collect();
        let inv_n = 1.0 / x.len() as f64;
        for (row, &class) in x.iter().zip(y) {
            let (cache, mut delta) = self.forward_cached(row);
            loss += log_sum_exp(&delta) - delta[class];
            softmax_in_place(&mut delta);
            delta[class] -= 1.0;
            for (l, &(off, n_in, n_out)) in layers.iter().enumerate().rev() {
                let input = &cache.acts[l];
                let (gw, gb) = grad[off..off + n_in * n_out + n_out].split_at_mut(n_in * n_out);
                for o in 0..n_out {
                    let d = delta[o] * inv_n;
                    if d == 0.0 {
                        continue;
                    }
                    gb[o] += d;
                    for (g, a) in gw[o * n_in..(o + 1) * n_in].iter_mut().zip(input) {
                        *g += d * a;
                    }
                }
                if l == 0 {
                    break;
                }
                let w = &self.params[off..off + n_in * n_out];
                let mut prev = vec![0.0; n_in];
                for o in 0..n_out {
                    let d = delta[o];
                    if d == 0.0 {
                        continue;
                    }
                    for (p, wv) in prev.iter_mut().zip(&w[o * n_in..(o + 1) * n_in]) {
                        *p += d * wv;
                    }
                }
                // ReLU derivative on the hidden layer feeding this one.
                for (p, a) in prev.iter_mut().zip(input) {
                    if *a <= 0.0 {
                        *p = 0.0;
                    }
                }
                delta = prev;
            }
        }
        (loss * inv_n, grad)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub train_loss: Vec<f64>,
    pub validation_loss: Vec<f64>,
    /// Epoch (0-based) whose parameters were kept.
    pub best_epoch: usize,
    pub epochs_run: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NnModel {
    pub net: Mlp,
    pub trainer: TrainerConfig,
    pub history: TrainHistory,
}

impl NnModel {
    pub fn predict_proba_row(&self, x: &[f64]) -> [f64; NUM_CLASSES] {
        self.net.predict_proba_row(x)
    }
}

/// Feed-forward head over `[basic, dynamic, transformer]` rows (646 wide),
/// tagged with the embedding table it was trained on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AugHeadModel {
    pub nn: NnModel,
    pub provenance: String,
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    fn step(&mut self, params: &mut [f64], grad: &[f64], cfg: &TrainerConfig) {
        self.t += 1;
        let bc1 = 1.0 - libm::pow(cfg.beta1, self.t as f64);
        let bc2 = 1.0 - libm::pow(cfg.beta2, self.t as f64);
        for i in 0..params.len() {
            self.m[i] = cfg.beta1 * self.m[i] + (1.0 - cfg.beta1) * grad[i];
            self.v[i] = cfg.beta2 * self.v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
            let mh = self.m[i] / bc1;
            let vh = self.v[i] / bc2;
            params[i] -= cfg.learning_rate * mh / (sqrt(vh) + cfg.epsilon);
        }
    }
}

pub fn train_nn(x: &[Vec<f64>], labels: &[Level], cfg: &TrainerConfig) -> Result<NnModel> {
    let dim = check_rows(x, labels)?;
    let y = class_indices(labels)?;
    if cfg.batch_size == 0 || cfg.epochs == 0 || !(cfg.learning_rate > 0.0) {
        return Err(Error::InvalidParameter("trainer needs batch_size, epochs and learning_rate > 0".into()));
    }
    if !(0.0..1.0).contains(&cfg.validation_fraction) {
        return Err(Error::InvalidParameter("validation_fraction must be in [0, 1)".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut net = Mlp::init(Mlp::topology(dim), &mut rng);

    let mut order: Vec<usize> = (0..x.len()).collect();
    order.shuffle(&mut rng);
    let n_val = libm::ceil(cfg.validation_fraction * x.len() as f64) as usize;
    let n_val = if n_val >= x.len() { 0 } else { n_val };
    let (val, mut train) = (order[..n_val].to_vec(), order[n_val..].to_vec());
    let val_x: Vec<&[f64]> = val.iter().map(|&i| x[i].as_slice()).collect();
    let val_y: Vec<usize> = val.iter().map(|&i| y[i]).collect();

    let mut adam = Adam { m: vec![0.0; net.params.len()], v: vec![0.0; net.params.len()], t: 0 };
    let mut history = TrainHistory::default();
    let mut best = (f64::INFINITY, net.params.clone());
    let mut since_best = 0;

    for epoch in 0..cfg.epochs {
        train.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in train.chunks(cfg.batch_size) {
            let bx: Vec<&[f64]> = batch.iter().map(|&i| x[i].as_slice()).collect();
            let by: Vec<usize> = batch.iter().map(|&i| y[i]).collect();
            let (loss, grad) = net.loss_and_grad(&bx, &by);
            if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::NonFinite { context: "neural network", iteration: epoch, checkpoint: Some(best.1) });
            }
            adam.step(&mut net.params, &grad, cfg);
            epoch_loss += loss * batch.len() as f64;
        }
        history.train_loss.push(epoch_loss / train.len() as f64);
        history.epochs_run = epoch + 1;
        if val_x.is_empty() {
            history.best_epoch = epoch;
            continue;
        }
        let vl = net.loss(&val_x, &val_y);
        history.validation_loss.push(vl);
        if vl < best.0 {
            best = (vl, net.params.clone());
            history.best_epoch = epoch;
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= cfg.patience {
                break;
            }
        }
    }
    if !val_x.is_empty() {
        net.params = best.1;
    }
    Ok(NnModel { net, trainer: *cfg, history })
}
