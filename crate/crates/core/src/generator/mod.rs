//! Noise generation model: a small decoder-only transformer trained on
//! `clean [SEP] noisy [EOS]` sequences and decoded with nucleus sampling.

mod checkpoint;
mod config;
mod model;
pub mod nucleus;
mod params;
mod train;
mod vocab;

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use checkpoint::{CHECKPOINT_FORMAT, CHECKPOINT_VERSION};
pub use config::{GenerationConfig, LossScope, NgmConfig, Optimizer, TrainConfig};
pub use model::{gelu, IncrementalDecoder, NgmModel};
pub use params::{LayerParams, NgmParams};
pub use train::{learning_rate, Checkpoint, TrainReport};
pub use vocab::{Vocab, EOS, EOS_ID, PAD, PAD_ID, SEP, SEP_ID, UNK, UNK_ID};

use crate::confusion::CleanNoisyPair;
use crate::error::{Error, Result};
use crate::text::tokenize;

/// Result of decoding one noisy rendition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Generation {
    pub text: String,
    pub token_ids: Vec<usize>,
    /// Decoding stopped at `max_new_tokens` or the context edge before an
    /// end-of-sequence token was drawn.
    pub truncated: bool,
}

/// Vocabulary plus model: the text-level noise generator.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseGenerator {
    pub vocab: Vocab,
    pub model: NgmModel,
}

impl NoiseGenerator {
    pub fn new(vocab: Vocab, model: NgmModel) -> Result<Self> {
        if vocab.len() != model.config.vocab_size {
            return Err(Error::Dimension(format!(
                "vocabulary has {} tokens but the model expects {}",
                vocab.len(),
                model.config.vocab_size
            )));
        }
        Ok(Self { vocab, model })
    }

    /// Builds a word vocabulary from both sides of `pairs` and a freshly
    /// initialized model shaped like `shape` (its `vocab_size` is replaced).
    pub fn for_pairs<R: Rng + ?Sized>(
        pairs: &[CleanNoisyPair],
        shape: NgmConfig,
        max_vocab: usize,
        min_count: usize,
        init_std: f64,
        rng: &mut R,
    ) -> Result<Self> {
        let texts: Vec<Vec<String>> = pairs
            .iter()
            .flat_map(|p| [tokenize(&p.clean), tokenize(&p.noisy)])
            .collect();
        let vocab = Vocab::build(texts.iter().map(Vec::as_slice), max_vocab, min_count);
        let config = NgmConfig {
            vocab_size: vocab.len(),
            ..shape
        };
        let model = NgmModel::init(config, init_std, rng)?;
        Self::new(vocab, model)
    }

    /// `clean [SEP] noisy [EOS]` as token ids.
    pub fn encode_pair(&self, pair: &CleanNoisyPair) -> Vec<usize> {
        let mut ids = self.vocab.encode(&tokenize(&pair.clean));
        ids.push(SEP_ID);
        ids.extend(self.vocab.encode(&tokenize(&pair.noisy)));
        ids.push(EOS_ID);
        ids
    }

    /// Mean next-token loss of one encoded pair, clean prefix included.
    pub fn nll_loss(&self, pair: &CleanNoisyPair) -> Result<f64> {
        self.model.nll(&self.encode_pair(pair), 1)
    }

    /// Samples a noisy rendition of `clean`: the prompt `clean [SEP]` is fed
    /// to the model, then tokens are drawn from the temperature-scaled
    /// nucleus until `[EOS]`, `max_new_tokens` or the end of the context.
    pub fn generate<R: Rng + ?Sized>(
        &self,
        clean: &str,
        cfg: &GenerationConfig,
        rng: &mut R,
    ) -> Result<Generation> {
        cfg.validate()?;
        let window = self.model.config.context_window;
        let mut prompt = self.vocab.encode(&tokenize(clean));
        if prompt.len() + 2 >= window {
            return Err(Error::SequenceTooLong {
                len: prompt.len() + 2,
                max: window - 1,
            });
        }
        prompt.push(SEP_ID);

        let mut decoder = self.model.decoder();
        let mut logits = None;
        for &tok in &prompt {
            logits = Some(decoder.step(tok)?);
        }
        let mut logits = logits.expect("prompt holds at least the separator");
        let mut out = Vec::new();
        let mut truncated = true;
        while out.len() < cfg.max_new_tokens {
            // Padding and a second separator are never valid continuations.
            logits[PAD_ID] = f64::NEG_INFINITY;
            logits[SEP_ID] = f64::NEG_INFINITY;
            let logits_slice = logits.as_slice().expect("contiguous logits");
            let probs = nucleus::tempered_probabilities(logits_slice, cfg.temperature);
            let next = nucleus::sample_nucleus(&probs, cfg.top_p, rng);
            if next == EOS_ID {
                truncated = false;
                break;
            }
            out.push(next);
            if decoder.position() >= window {
                break;
            }
            logits = decoder.step(next)?;
        }
        Ok(Generation {
            text: self.vocab.decode(&out),
            token_ids: out,
            truncated,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    fn toy() -> NoiseGenerator {
        let pairs = vec![
            CleanNoisyPair::new("turn on the lights", "turn an the lights"),
            CleanNoisyPair::new("stop the music", "top the music"),
        ];
        let shape = NgmConfig {
            n_layers: 1,
            d_model: 16,
            n_heads: 2,
            d_ff: 32,
            context_window: 16,
            vocab_size: 0,
        };
        NoiseGenerator::for_pairs(&pairs, shape, 100, 1, 0.1, &mut seeded(1)).unwrap()
    }

    #[test]
    fn figure_format_encoding() {
        let g = toy();
        let ids = g.encode_pair(&CleanNoisyPair::new("stop the music", "top the music"));
        assert_eq!(ids.len(), 3 + 1 + 3 + 1);
        assert_eq!(ids[3], SEP_ID);
        assert_eq!(*ids.last().unwrap(), EOS_ID);
    }

    #[test]
    fn seeded_generation_is_reproducible() {
        let g = toy();
        let cfg = GenerationConfig {
            max_new_tokens: 8,
            ..GenerationConfig::default()
        };
        let a = g.generate("turn on the music", &cfg, &mut seeded(5)).unwrap();
        let b = g.generate("turn on the music", &cfg, &mut seeded(5)).unwrap();
        assert_eq!(a, b);
        assert!(a.token_ids.len() <= 8);
        assert!(a.token_ids.iter().all(|&t| t != PAD_ID && t != SEP_ID && t != EOS_ID));
    }

    #[test]
    fn untrained_generation_may_truncate() {
        let g = toy();
        let cfg = GenerationConfig {
            max_new_tokens: 3,
            top_p: 1.0,
            ..GenerationConfig::default()
        };
        let out = g.generate("stop", &cfg, &mut seeded(9)).unwrap();
        assert_eq!(out.truncated, out.token_ids.len() == 3);
    }

    #[test]
    fn long_prompts_are_rejected() {
        let g = toy();
        let long = vec!["the"; 14].join(" ");
        assert!(matches!(
            g.generate(&long, &GenerationConfig::default(), &mut seeded(0)),
            Err(Error::SequenceTooLong { .. })
        ));
        let ok = vec!["the"; 13].join(" ");
        assert!(g.generate(&ok, &GenerationConfig::default(), &mut seeded(0)).is_ok());
    }

    #[test]
    fn invalid_generation_config() {
        let g = toy();
        let bad = GenerationConfig {
            top_p: 0.0,
            ..GenerationConfig::default()
        };
        assert!(g.generate("stop", &bad, &mut seeded(0)).is_err());
    }
}
