use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Shape of the noise generation model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NgmConfig {
    pub n_layers: usize,
    pub d_model: usize,
    pub n_heads: usize,
    pub d_ff: usize,
    pub context_window: usize,
    pub vocab_size: usize,
}

impl NgmConfig {
    pub fn with_vocab(vocab_size: usize) -> Self {
        Self {
            n_layers: 2,
            d_model: 64,
            n_heads: 4,
            d_ff: 256,
            context_window: 128,
            vocab_size,
        }
    }

    pub fn d_head(&self) -> usize {
        self.d_model / self.n_heads
    }

    pub fn validate(&self) -> Result<()> {
        let dims = [
            ("n_layers", self.n_layers),
            ("d_model", self.d_model),
            ("n_heads", self.n_heads),
            ("d_ff", self.d_ff),
            ("vocab_size", self.vocab_size),
        ];
        if let Some((name, _)) = dims.iter().find(|(_, v)| *v == 0) {
            return Err(Error::InvalidConfig(format!("{name} must be at least 1")));
        }
        if !self.d_model.is_multiple_of(self.n_heads) {
            return Err(Error::InvalidConfig(format!(
                "d_model {} is not divisible by n_heads {}",
                self.d_model, self.n_heads
            )));
        }
        if self.context_window < 2 {
            return Err(Error::InvalidConfig("context_window must be at least 2".into()));
        }
        Ok(())
    }
}

/// Decoding knobs for nucleus sampling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenerationConfig {
    pub top_p: f64,
    pub temperature: f64,
    pub max_new_tokens: usize,
    pub seed: u64,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        Self {
            top_p: 0.9,
            temperature: 1.0,
            max_new_tokens: 48,
            seed: 0,
        }
    }
}

impl GenerationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.top_p > 0.0 && self.top_p <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "top_p must lie in (0, 1], got {}",
                self.top_p
            )));
        }
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "temperature must be positive, got {}",
                self.temperature
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Optimizer {
    /// Heavy-ball momentum SGD.
    Momentum { momentum: f64 },
    Adam { beta1: f64, beta2: f64, eps: f64 },
}

impl Optimizer {
    /// Adam with the usual transformer settings; pair with a rate near 3e-3.
    pub fn adam() -> Self {
        Optimizer::Adam {
            beta1: 0.9,
            beta2: 0.98,
            eps: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LossScope {
    /// Every next-token prediction, clean prefix included.
    FullSequence,
    /// Only predictions after the separator.
    NoisySuffix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub steps: usize,
    pub batch_size: usize,
    /// Peak learning rate; decays linearly to zero after warmup.
    pub learning_rate: f64,
    pub warmup_steps: usize,
    pub optimizer: Optimizer,
    /// Global gradient-norm clip; `None` disables clipping.
    pub grad_clip: Option<f64>,
    pub checkpoint_every: usize,
    /// Fraction of pairs held out for checkpoint selection. When this leaves no
    /// pairs, the training pairs themselves are scored.
    pub holdout_fraction: f64,
    pub loss_scope: LossScope,
    pub init_std: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            steps: 1000,
            batch_size: 16,
            learning_rate: 0.1,
            warmup_steps: 50,
            optimizer: Optimizer::Momentum { momentum: 0.9 },
            grad_clip: Some(1.0),
            checkpoint_every: 100,
            holdout_fraction: 0.05,
            loss_scope: LossScope::FullSequence,
            init_std: 0.02,
            seed: 0,
        }
    }
}
