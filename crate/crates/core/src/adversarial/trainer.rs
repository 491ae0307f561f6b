use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::alignment::{alignment_matrix, alignment_rows};
use super::losses::{composite_generator_loss, discriminator_loss, generator_adv_loss, mse_loss};
use crate::error::{Error, Result};
use crate::metrics::{concordance_index_fast, pearson_r2, rmse};
use crate::nn::{discriminator_forward, DtiModel, EncodedSet};
use crate::tensor::{Adam, AdamConfig, Graph, Tensor, Var, DEFAULT_LOG_EPS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    /// Weight of the adversarial term in the generator objective.
    pub lambda: f64,
    /// Neighbors per alignment row; `None` means `min(5, batch - 1)`.
    pub k: Option<usize>,
    /// Whether each value counts as its own nearest neighbor.
    pub include_self: bool,
    pub batch_size: usize,
    pub epochs: usize,
    pub generator_lr: f64,
    pub discriminator_lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
    /// Lower bound applied inside every logarithm of the adversarial losses.
    pub log_eps: f64,
    pub seed: u64,
    /// Share of each training fold held out for early stopping; 0 disables.
    pub inner_val_fraction: f64,
    /// Epochs without improvement on the held-out share before stopping.
    pub patience: usize,
    /// Start the generator's output bias at the mean training label.
    pub init_output_bias: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lambda: 0.1,
            k: None,
            include_self: true,
            batch_size: 32,
            epochs: 100,
            generator_lr: 1e-4,
            discriminator_lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            adam_eps: 1e-8,
            log_eps: DEFAULT_LOG_EPS,
            seed: 0,
            inner_val_fraction: 0.1,
            patience: 10,
            init_output_bias: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return bad(format!("lambda must be finite and non-negative, got {}", self.lambda));
        }
        if self.k == Some(0) {
            return bad("k must be at least 1".into());
        }
        if self.batch_size < 2 {
            return bad(format!("batch size must be at least 2, got {}", self.batch_size));
        }
        if let Some(k) = self.k {
            if self.batch_size < k {
                return bad(format!("batch size {} is smaller than k={k}", self.batch_size));
            }
        }
        for (name, lr) in [
            ("generator_lr", self.generator_lr),
            ("discriminator_lr", self.discriminator_lr),
        ] {
            if !(lr > 0.0 && lr.is_finite()) {
                return bad(format!("{name} must be positive, got {lr}"));
            }
        }
        if !(self.log_eps > 0.0 && self.log_eps < 1.0) {
            return bad(format!("log_eps must lie in (0, 1), got {}", self.log_eps));
        }
        if !(0.0..1.0).contains(&self.inner_val_fraction) {
            return bad(format!(
                "inner_val_fraction must lie in [0, 1), got {}",
                self.inner_val_fraction
            ));
        }
        if self.epochs == 0 {
            return bad("epochs must be at least 1".into());
        }
        Ok(())
    }

    /// Neighbor count for a training set of `n` samples.
    pub fn resolved_k(&self, n: usize) -> usize {
        let batch = self.batch_size.min(n);
        self.k.unwrap_or_else(|| 5.min(batch.saturating_sub(1)).max(1))
    }

    /// Smallest batch an alignment matrix with `k` neighbors can be built on.
    pub fn min_batch(&self, k: usize) -> usize {
        2.max(k + usize::from(!self.include_self))
    }

    fn adam(&self, lr: f64) -> AdamConfig {
        AdamConfig {
            lr,
            beta1: self.beta1,
            beta2: self.beta2,
            eps: self.adam_eps,
        }
    }
}

/// Optimizer state for the generator side and the discriminator.
#[derive(Debug, Clone)]
pub struct Optimizers {
    pub generator: Adam,
    pub discriminator: Adam,
}

impl Optimizers {
    pub fn new(cfg: &TrainConfig) -> Self {
        Self {
            generator: Adam::new(cfg.adam(cfg.generator_lr)),
            discriminator: Adam::new(cfg.adam(cfg.discriminator_lr)),
        }
    }
}

/// Loss components of one step. Adversarial entries are `None` for variants
/// trained on the regression loss alone.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LossRecord {
    pub epoch: usize,
    pub step: usize,
    pub mse: f64,
    pub adv: Option<f64>,
    pub disc: Option<f64>,
    pub composite: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub mse: f64,
    pub adv: Option<f64>,
    pub disc: Option<f64>,
    pub composite: f64,
    pub val_rmse: Option<f64>,
    pub val_ci: Option<f64>,
    pub val_r2: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub history: Vec<EpochRecord>,
    pub steps: Vec<LossRecord>,
    /// Epoch whose parameters the model holds after training.
    pub best_epoch: usize,
}

fn grads_for<'a>(grads: &'a crate::tensor::Gradients, vars: &[Var]) -> Result<Vec<&'a Tensor>> {
    vars.iter()
        .map(|&v| {
            grads
                .get(v)
                .ok_or_else(|| Error::Tensor("trainable parameter has no gradient slot".into()))
        })
        .collect()
}

fn discriminator_update(
    model: &mut DtiModel,
    opt: &mut Optimizers,
    real: Tensor,
    fake: Tensor,
    cfg: &TrainConfig,
) -> Result<f64> {
    let mut g = Graph::new();
    let bound = model.discriminator.bind(&mut g, true);
    let r = g.constant(real);
    let f = g.constant(fake);
    let dr = discriminator_forward(&mut g, r, &bound, model.k)?;
    let df = discriminator_forward(&mut g, f, &bound, model.k)?;
    let loss = discriminator_loss(&mut g, dr, df, cfg.log_eps)?;
    let value = scalar(&g, loss)?;
    if !value.is_finite() {
        return Ok(value);
    }
    let grads = g.backward(loss)?;
    let grads = grads_for(&grads, &bound.vars())?;
    opt.discriminator.step(&mut model.discriminator.tensors_mut(), &grads);
    Ok(value)
}

fn scalar(g: &Graph, v: Var) -> Result<f64> {
    g.value(v)
        .item()
        .ok_or_else(|| Error::Tensor(format!("expected a scalar, got shape {:?}", g.value(v).shape())))
}

fn summary(values: &[f64]) -> String {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    format!("n={} min={lo} max={hi}", values.len())
}

/// One alternating update on `batch` (indices into `set.samples`).
///
/// For adversarial variants: the generator predicts the batch, the
/// discriminator takes one step separating label alignment rows from
/// (detached) prediction rows, then the generator takes one step on
/// `mse + lambda * adv` where `adv` flows through the prediction rows.
/// Other variants take a plain regression step.
#[allow(clippy::too_many_arguments)]
pub fn train_step(
    model: &mut DtiModel,
    set: &EncodedSet<'_>,
    batch: &[usize],
    cfg: &TrainConfig,
    opt: &mut Optimizers,
    epoch: usize,
    step: usize,
) -> Result<LossRecord> {
    let k = model.k;
    let n = batch.len();
    if n < cfg.min_batch(k) {
        return Err(Error::Config(format!(
            "batch of {n} is too small for k={k} (need {})",
            cfg.min_batch(k)
        )));
    }
    let mut g = Graph::new();
    let bound = model.bind(&mut g, true);
    let pred = model.forward(&mut g, &bound, set, batch)?;
    let labels_v: Vec<f64> = batch.iter().map(|&i| set.samples[i].affinity).collect();
    let labels = g.constant(Tensor::matrix(n, 1, labels_v.clone())?);
    let mse = mse_loss(&mut g, pred, labels)?;

    let (adv, disc) = if model.config.variant.adversarial() {
        let pred_v = g.value(pred).data().to_vec();
        let real = alignment_matrix(&labels_v, k, cfg.include_self)?.to_tensor();
        let fake = if pred_v.iter().all(|v| v.is_finite()) {
            alignment_matrix(&pred_v, k, cfg.include_self)?.to_tensor()
        } else {
            return Err(Error::NonFinite {
                epoch,
                step,
                snapshot: format!("predictions {}", summary(&pred_v)),
            });
        };
        let disc = discriminator_update(model, opt, real, fake, cfg)?;
        let rows = alignment_rows(&mut g, pred, k, cfg.include_self)?;
        let d_bound = model.discriminator.bind(&mut g, false);
        let d_fake = discriminator_forward(&mut g, rows, &d_bound, k)?;
        (Some(generator_adv_loss(&mut g, d_fake, cfg.log_eps)?), Some(disc))
    } else {
        (None, None)
    };
    let composite = match adv {
        Some(a) => composite_generator_loss(&mut g, mse, a, cfg.lambda)?,
        None => mse,
    };
    let record = LossRecord {
        epoch,
        step,
        mse: scalar(&g, mse)?,
        adv: adv.map(|a| scalar(&g, a)).transpose()?,
        disc,
        composite: scalar(&g, composite)?,
    };
    let finite = [Some(record.mse), record.adv, record.disc, Some(record.composite)]
        .into_iter()
        .flatten()
        .all(f64::is_finite);
    if !finite {
        return Err(Error::NonFinite {
            epoch,
            step,
            snapshot: format!(
                "mse={} adv={:?} disc={:?} composite={}; predictions {}; labels {}",
                record.mse,
                record.adv,
                record.disc,
                record.composite,
                summary(g.value(pred).data()),
                summary(&labels_v)
            ),
        });
    }
    let grads = g.backward(composite)?;
    let grads = grads_for(&grads, &bound.vars())?;
    opt.generator.step(&mut model.generator_tensors_mut(), &grads);
    Ok(record)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SetMetrics {
    pub rmse: f64,
    /// `None` when every label ties.
    pub ci: Option<f64>,
    /// `None` when either side has zero variance.
    pub r2: Option<f64>,
}

pub fn evaluate_set(model: &DtiModel, set: &EncodedSet<'_>) -> Result<SetMetrics> {
    let pred = model.predict(set)?;
    let labels = set.labels();
    Ok(SetMetrics {
        rmse: rmse(&pred, &labels)?,
        ci: concordance_index_fast(&pred, &labels).ok(),
        r2: pearson_r2(&pred, &labels).ok(),
    })
}

/// Splits a shuffled order into batches of `size`, folding a short tail into
/// the previous batch.
fn batches(order: &[usize], size: usize, min: usize) -> Vec<&[usize]> {
    let mut out: Vec<&[usize]> = order.chunks(size).collect();
    if out.len() > 1 && out.last().is_some_and(|b| b.len() < min) {
        out.pop();
        let start = (out.len() - 1) * size;
        *out.last_mut().expect("non-empty") = &order[start..];
    }
    out
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    s / n as f64
}

/// Runs `cfg.epochs` epochs over `train_set`. When `monitor` is given, each
/// epoch is scored on it; training stops after `cfg.patience` epochs without
/// an RMSE improvement (0 never stops early) and the model is left holding the
/// best-scoring parameters.
pub fn train(
    model: &mut DtiModel,
    train_set: &EncodedSet<'_>,
    monitor: Option<&EncodedSet<'_>>,
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    let n = train_set.len();
    if n == 0 {
        return Err(Error::Data("training set is empty".into()));
    }
    let min = cfg.min_batch(model.k);
    if n < min {
        return Err(Error::Data(format!(
            "training set has {n} samples; at least {min} are needed for k={}",
            model.k
        )));
    }
    if cfg.init_output_bias {
        let labels = train_set.labels();
        model.set_output_bias(mean(labels.iter().copied()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut opt = Optimizers::new(cfg);
    let mut order: Vec<usize> = (0..n).collect();
    let mut outcome = TrainOutcome {
        history: Vec::new(),
        steps: Vec::new(),
        best_epoch: 0,
    };
    let mut best: Option<(f64, DtiModel)> = None;
    let mut stale = 0;
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let start = outcome.steps.len();
        for (step, batch) in batches(&order, cfg.batch_size, min).into_iter().enumerate() {
            outcome
                .steps
                .push(train_step(model, train_set, batch, cfg, &mut opt, epoch, step)?);
        }
        let steps = &outcome.steps[start..];
        let opt_mean = |f: fn(&LossRecord) -> Option<f64>| {
            let vals: Option<Vec<f64>> = steps.iter().map(f).collect();
            vals.map(|v| mean(v.into_iter()))
        };
        let mut record = EpochRecord {
            epoch,
            mse: mean(steps.iter().map(|s| s.mse)),
            adv: opt_mean(|s| s.adv),
            disc: opt_mean(|s| s.disc),
            composite: mean(steps.iter().map(|s| s.composite)),
            val_rmse: None,
            val_ci: None,
            val_r2: None,
        };
        outcome.best_epoch = epoch;
        let mut stop = false;
        if let Some(m) = monitor.filter(|m| !m.is_empty()) {
            let metrics = evaluate_set(model, m)?;
            record.val_rmse = Some(metrics.rmse);
            record.val_ci = metrics.ci;
            record.val_r2 = metrics.r2;
            if best.as_ref().is_none_or(|(r, _)| metrics.rmse < *r) {
                best = Some((metrics.rmse, model.clone()));
                stale = 0;
            } else {
                stale += 1;
                stop = cfg.patience > 0 && stale >= cfg.patience;
            }
        }
        log::debug!("epoch {epoch}: {record:?}");
        outcome.history.push(record);
        if stop {
            break;
        }
    }
    if let Some((_, m)) = best {
        outcome.best_epoch = outcome
            .history
            .iter()
            .filter_map(|r| r.val_rmse.map(|v| (v, r.epoch)))
            .fold((f64::INFINITY, 0), |acc, x| if x.0 < acc.0 { x } else { acc })
            .1;
        *model = m;
    }
    Ok(outcome)
}
