use log::{debug, warn};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::config::{LossScope, Optimizer, TrainConfig};
use super::params::NgmParams;
use super::vocab::SEP_ID;
use super::NoiseGenerator;
use crate::confusion::CleanNoisyPair;
use crate::error::{Error, Result};
use crate::rng::{derive_seed, seeded};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub step: usize,
    pub heldout_perplexity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// Mean minibatch loss after each step.
    pub losses: Vec<f64>,
    /// Step 0 (the initial model) plus one entry per checkpoint.
    pub checkpoints: Vec<Checkpoint>,
    pub best_step: usize,
    pub train_sequences: usize,
    pub heldout_sequences: usize,
    /// Pairs dropped because they did not fit the context window.
    pub skipped_too_long: usize,
}

impl TrainReport {
    pub fn best_perplexity(&self) -> f64 {
        self.checkpoints
            .iter()
            .find(|c| c.step == self.best_step)
            .map(|c| c.heldout_perplexity)
            .unwrap_or(f64::INFINITY)
    }
}

struct Sequence {
    ids: Vec<usize>,
    first_target: usize,
}

fn first_target(ids: &[usize], scope: LossScope) -> usize {
    match scope {
        LossScope::FullSequence => 1,
        LossScope::NoisySuffix => ids.iter().position(|&t| t == SEP_ID).map_or(1, |p| p + 1),
    }
}

enum OptState {
    Momentum { velocity: Vec<Vec<f64>> },
    Adam { m: Vec<Vec<f64>>, v: Vec<Vec<f64>>, t: i32 },
}

impl OptState {
    fn new(kind: Optimizer, params: &NgmParams) -> Self {
        let zeros = || {
            params
                .named_slices()
                .iter()
                .map(|(_, s)| vec![0.0; s.len()])
                .collect::<Vec<_>>()
        };
        match kind {
            Optimizer::Momentum { .. } => OptState::Momentum { velocity: zeros() },
            Optimizer::Adam { .. } => OptState::Adam {
                m: zeros(),
                v: zeros(),
                t: 0,
            },
        }
    }

    fn apply(&mut self, kind: Optimizer, params: &mut NgmParams, grad: &NgmParams, lr: f64) {
        let grads = grad.named_slices();
        match (self, kind) {
            (OptState::Momentum { velocity }, Optimizer::Momentum { momentum }) => {
                for ((p, (_, g)), vel) in params.slices_mut().into_iter().zip(grads).zip(velocity) {
                    for ((p, g), v) in p.iter_mut().zip(g).zip(vel.iter_mut()) {
                        *v = momentum * *v + g;
                        *p -= lr * *v;
                    }
                }
            }
            (OptState::Adam { m, v, t }, Optimizer::Adam { beta1, beta2, eps }) => {
                *t += 1;
                let c1 = 1.0 - beta1.powi(*t);
                let c2 = 1.0 - beta2.powi(*t);
                for (((p, (_, g)), m), v) in params
                    .slices_mut()
                    .into_iter()
                    .zip(grads)
                    .zip(m.iter_mut())
                    .zip(v.iter_mut())
                {
                    for (((p, g), m), v) in p.iter_mut().zip(g).zip(m.iter_mut()).zip(v.iter_mut()) {
                        *m = beta1 * *m + (1.0 - beta1) * g;
                        *v = beta2 * *v + (1.0 - beta2) * g * g;
                        *p -= lr * (*m / c1) / ((*v / c2).sqrt() + eps);
                    }
                }
            }
            _ => unreachable!("optimizer state matches its kind"),
        }
    }
}

/// Linear warmup to the peak rate, then linear decay towards zero.
pub fn learning_rate(cfg: &TrainConfig, step: usize) -> f64 {
    if cfg.warmup_steps > 0 && step <= cfg.warmup_steps {
        return cfg.learning_rate * step as f64 / cfg.warmup_steps as f64;
    }
    let span = (cfg.steps - cfg.warmup_steps.min(cfg.steps)) as f64 + 1.0;
    let left = (cfg.steps + 1).saturating_sub(step) as f64;
    cfg.learning_rate * left / span
}

impl NoiseGenerator {
    fn encode_for_training(&self, pairs: &[CleanNoisyPair], scope: LossScope) -> (Vec<Sequence>, usize) {
        let max = self.model.config.context_window;
        let mut skipped = 0;
        let mut out = Vec::with_capacity(pairs.len());
        for pair in pairs {
            let ids = self.encode_pair(pair);
            if ids.len() > max {
                skipped += 1;
                continue;
            }
            let first_target = first_target(&ids, scope);
            out.push(Sequence { ids, first_target });
        }
        (out, skipped)
    }

    fn mean_nll(&self, seqs: &[Sequence]) -> Result<f64> {
        let mut total = 0.0;
        let mut count = 0usize;
        for s in seqs {
            let n = s.ids.len() - s.first_target;
            total += self.model.nll(&s.ids, s.first_target)? * n as f64;
            count += n;
        }
        Ok(total / count.max(1) as f64)
    }

    /// Held-out perplexity over `clean [SEP] noisy [EOS]` sequences.
    pub fn perplexity(&self, pairs: &[CleanNoisyPair], scope: LossScope) -> Result<f64> {
        let (seqs, _) = self.encode_for_training(pairs, scope);
        if seqs.is_empty() {
            return Err(Error::InvalidData("no pair fits the context window".into()));
        }
        Ok(self.mean_nll(&seqs)?.exp())
    }

    /// Fits the model to `pairs` by minibatch descent on the next-token loss.
    ///
    /// The model is evaluated on a held-out split before training and every
    /// `checkpoint_every` steps; the parameters with the lowest held-out
    /// perplexity are kept.
    pub fn train(&mut self, pairs: &[CleanNoisyPair], cfg: &TrainConfig) -> Result<TrainReport> {
        if pairs.is_empty() {
            return Err(Error::InvalidData("no training pairs".into()));
        }
        if cfg.batch_size == 0 || cfg.checkpoint_every == 0 {
            return Err(Error::InvalidConfig(
                "batch_size and checkpoint_every must be at least 1".into(),
            ));
        }
        let mut rng = seeded(derive_seed(cfg.seed, "ngm-train"));
        let mut order: Vec<usize> = (0..pairs.len()).collect();
        order.shuffle(&mut rng);
        let n_holdout = ((pairs.len() as f64) * cfg.holdout_fraction).floor() as usize;
        let n_holdout = n_holdout.min(pairs.len() - 1);
        let (held_idx, train_idx) = order.split_at(n_holdout);
        let pick = |idx: &[usize]| idx.iter().map(|&i| pairs[i].clone()).collect::<Vec<_>>();

        let (train, skipped_train) = self.encode_for_training(&pick(train_idx), cfg.loss_scope);
        let (held, skipped_held) = self.encode_for_training(&pick(held_idx), cfg.loss_scope);
        let skipped = skipped_train + skipped_held;
        if skipped > 0 {
            warn!("skipped {skipped} pairs longer than the context window");
        }
        if train.is_empty() {
            return Err(Error::InvalidData("no pair fits the context window".into()));
        }
        let held = if held.is_empty() { &train } else { &held };

        let mut report = TrainReport {
            losses: Vec::with_capacity(cfg.steps),
            checkpoints: Vec::new(),
            best_step: 0,
            train_sequences: train.len(),
            heldout_sequences: held.len(),
            skipped_too_long: skipped,
        };
        let initial = self.mean_nll(held)?.exp();
        report.checkpoints.push(Checkpoint {
            step: 0,
            heldout_perplexity: initial,
        });
        let mut best = (initial, self.model.params.clone());

        let mut opt = OptState::new(cfg.optimizer, &self.model.params);
        let mut cursor = train.len();
        let mut epoch_order: Vec<usize> = (0..train.len()).collect();
        for step in 1..=cfg.steps {
            let mut grad = NgmParams::zeros(&self.model.config);
            let mut loss = 0.0;
            let weight = 1.0 / cfg.batch_size as f64;
            for _ in 0..cfg.batch_size {
                if cursor == train.len() {
                    epoch_order.shuffle(&mut rng);
                    cursor = 0;
                }
                let seq = &train[epoch_order[cursor]];
                cursor += 1;
                loss += weight
                    * self
                        .model
                        .accumulate_grad(&seq.ids, seq.first_target, weight, &mut grad)?;
            }
            if !loss.is_finite() {
                return Err(Error::Diverged { step, loss });
            }
            if let Some(max_norm) = cfg.grad_clip {
                let norm = grad.squared_norm().sqrt();
                if norm > max_norm {
                    grad.scale(max_norm / norm);
                }
            }
            let lr = learning_rate(cfg, step);
            opt.apply(cfg.optimizer, &mut self.model.params, &grad, lr);
            if !self.model.params.is_finite() {
                return Err(Error::Diverged { step, loss: f64::NAN });
            }
            report.losses.push(loss);

            if step % cfg.checkpoint_every == 0 || step == cfg.steps {
                let ppl = self.mean_nll(held)?.exp();
                debug!("step {step}: loss {loss:.4}, held-out perplexity {ppl:.3}");
                report.checkpoints.push(Checkpoint {
                    step,
                    heldout_perplexity: ppl,
                });
                if ppl < best.0 {
                    best = (ppl, self.model.params.clone());
                    report.best_step = step;
                }
            }
        }
        self.model.params = best.1;
        Ok(report)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_warms_up_then_decays() {
        let cfg = TrainConfig {
            steps: 100,
            warmup_steps: 10,
            learning_rate: 1.0,
            ..TrainConfig::default()
        };
        assert!((learning_rate(&cfg, 5) - 0.5).abs() < 1e-12);
        assert!((learning_rate(&cfg, 10) - 1.0).abs() < 1e-12);
        let late = learning_rate(&cfg, 90);
        let later = learning_rate(&cfg, 95);
        assert!(later < late && later > 0.0);
        assert!(learning_rate(&cfg, 100) > 0.0);
    }

    #[test]
    fn suffix_scope_starts_after_separator() {
        assert_eq!(first_target(&[5, 6, SEP_ID, 7, 3], LossScope::NoisySuffix), 3);
        assert_eq!(first_target(&[5, 6, SEP_ID, 7, 3], LossScope::FullSequence), 1);
    }
}
