//! Minibatch first-order training of a [`ParamMap`] against an
//! [`AggregateLoss`].

use std::time::Instant;

use crate::aggregate::{AggregateDataset, AggregateExample};
use crate::error::{ensure_len, ensure_positive, Error, Result};
use crate::likelihood::AggregateLoss;
use crate::model::{batch_loss_and_grad, ParamMap};
use crate::rng;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Optimizer {
    Sgd {
        lr: f64,
    },
    /// Adam with weight decay applied outside the adaptive step.
    AdamW {
        lr: f64,
        beta1: f64,
        beta2: f64,
        eps: f64,
        weight_decay: f64,
    },
}

impl Optimizer {
    pub const DEFAULT_WEIGHT_DECAY: f64 = 0.01;

    pub fn adamw(lr: f64, weight_decay: f64) -> Self {
        Optimizer::AdamW {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay,
        }
    }

    pub fn lr(&self) -> f64 {
        match self {
            Optimizer::Sgd { lr } | Optimizer::AdamW { lr, .. } => *lr,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Optimizer::Sgd { .. } => "sgd",
            Optimizer::AdamW { .. } => "adamw",
        }
    }

    fn validate(&self) -> Result<()> {
        ensure_positive("learning rate", self.lr())?;
        if let Optimizer::AdamW {
            beta1,
            beta2,
            eps,
            weight_decay,
            ..
        } = *self
        {
            for (name, b) in [("beta1", beta1), ("beta2", beta2)] {
                if !(0.0..1.0).contains(&b) {
                    return Err(Error::Config(format!("{name} must lie in [0, 1), got {b}")));
                }
            }
            ensure_positive("adam epsilon", eps)?;
            if !(weight_decay >= 0.0 && weight_decay.is_finite()) {
                return Err(Error::Config(format!(
                    "weight decay must be nonnegative, got {weight_decay}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub optimizer: Optimizer,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    /// Print `epoch <i> loss <value>` to stderr after each epoch.
    pub verbose: bool,
}

impl TrainConfig {
    /// SGD, lr 0.1, batch 256, 20 epochs.
    pub fn linear_default(seed: u64) -> Self {
        TrainConfig {
            optimizer: Optimizer::Sgd { lr: 0.1 },
            epochs: 20,
            batch_size: 256,
            seed,
            verbose: false,
        }
    }

    /// AdamW, lr 1e-3, batch 128, 10 epochs.
    pub fn neural_default(seed: u64) -> Self {
        TrainConfig {
            optimizer: Optimizer::adamw(1e-3, Optimizer::DEFAULT_WEIGHT_DECAY),
            epochs: 10,
            batch_size: 128,
            seed,
            verbose: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.optimizer.validate()?;
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainReport {
    /// Example-weighted mean training nll of each epoch's minibatches.
    pub loss_per_epoch: Vec<f64>,
    pub final_weights: Vec<f64>,
    pub wall_time: f64,
}

pub fn sgd_step(weights: &mut [f64], grad: &[f64], lr: f64) -> Result<()> {
    ensure_len("gradient", weights.len(), grad.len())?;
    for (w, g) in weights.iter_mut().zip(grad) {
        *w -= lr * g;
    }
    Ok(())
}

/// First and second moment estimates plus the step counter.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
}

impl AdamState {
    pub fn new(len: usize) -> Self {
        AdamState {
            m: vec![0.0; len],
            v: vec![0.0; len],
            t: 0,
        }
    }
}

pub fn adamw_step(
    state: &mut AdamState,
    weights: &mut [f64],
    grad: &[f64],
    optimizer: &Optimizer,
) -> Result<()> {
    let Optimizer::AdamW {
        lr,
        beta1,
        beta2,
        eps,
        weight_decay,
    } = *optimizer
    else {
        return Err(Error::Config("adamw_step needs an AdamW optimizer".into()));
    };
    ensure_len("gradient", weights.len(), grad.len())?;
    ensure_len("adam first moment", weights.len(), state.m.len())?;
    ensure_len("adam second moment", weights.len(), state.v.len())?;
    state.t += 1;
    let c1 = 1.0 - beta1.powi(state.t as i32);
    let c2 = 1.0 - beta2.powi(state.t as i32);
    for i in 0..weights.len() {
        let g = grad[i];
        state.m[i] = beta1 * state.m[i] + (1.0 - beta1) * g;
        state.v[i] = beta2 * state.v[i] + (1.0 - beta2) * g * g;
        let m_hat = state.m[i] / c1;
        let v_hat = state.v[i] / c2;
        weights[i] -= lr * weight_decay * weights[i];
        weights[i] -= lr * m_hat / (v_hat.sqrt() + eps);
    }
    Ok(())
}

/// Runs `config.epochs` shuffled passes over `data`, updating `map` in place.
///
/// Epoch `e` visits examples in the order `rng::permutation` draws from
/// `rng::substream(config.seed, e)`.
pub fn fit(
    map: &mut ParamMap,
    loss: &AggregateLoss,
    data: &AggregateDataset,
    config: &TrainConfig,
) -> Result<TrainReport> {
    config.validate()?;
    if data.kind != *loss.kind() {
        return Err(Error::Mismatch(format!(
            "dataset holds {} observations but the loss expects {}",
            data.kind.tag(),
            loss.kind().tag()
        )));
    }
    if data.is_empty() && config.epochs > 0 {
        return Err(Error::Empty("training set"));
    }
    let start = Instant::now();
    let mut adam = AdamState::new(map.weights().len());
    let mut loss_per_epoch = Vec::with_capacity(config.epochs);
    let mut batch: Vec<AggregateExample> = Vec::with_capacity(config.batch_size);
    for epoch in 0..config.epochs {
        let order = rng::permutation(&mut rng::substream(config.seed, epoch as u64), data.len());
        let mut total = 0.0;
        for chunk in order.chunks(config.batch_size) {
            batch.clear();
            batch.extend(chunk.iter().map(|&i| data.examples[i].clone()));
            let (nll, grad) = batch_loss_and_grad(map, loss, &batch)?;
            if !nll.is_finite() || grad.values.iter().any(|g| !g.is_finite()) {
                return Err(Error::NonFinite("training loss"));
            }
            total += nll * chunk.len() as f64;
            match config.optimizer {
                Optimizer::Sgd { lr } => sgd_step(map.weights_mut(), &grad.values, lr)?,
                ref adamw => adamw_step(&mut adam, map.weights_mut(), &grad.values, adamw)?,
            }
        }
        let mean = total / data.len() as f64;
        if config.verbose {
            eprintln!("epoch {epoch} loss {mean}");
        }
        loss_per_epoch.push(mean);
    }
    Ok(TrainReport {
        loss_per_epoch,
        final_weights: map.weights().to_vec(),
        wall_time: start.elapsed().as_secs_f64(),
    })
}
