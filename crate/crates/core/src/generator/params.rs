use ndarray::{Array1, Array2};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::config::NgmConfig;

/// Weights of one pre-norm transformer block.
///
/// Each attention head owns four `d_model x d_head` matrices. The head output
/// projects back to `d_model` through the transpose of `w_out[h]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerParams {
    pub ln1_gain: Array1<f64>,
    pub ln1_bias: Array1<f64>,
    pub w_query: Vec<Array2<f64>>,
    pub w_key: Vec<Array2<f64>>,
    pub w_value: Vec<Array2<f64>>,
    pub w_out: Vec<Array2<f64>>,
    pub ln2_gain: Array1<f64>,
    pub ln2_bias: Array1<f64>,
    pub w_ff1: Array2<f64>,
    pub b_ff1: Array1<f64>,
    pub w_ff2: Array2<f64>,
    pub b_ff2: Array1<f64>,
}

/// Every trainable tensor of the model. The output projection is tied to
/// `token_embedding`, so it has no tensor of its own.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NgmParams {
    pub token_embedding: Array2<f64>,
    pub position_embedding: Array2<f64>,
    pub layers: Vec<LayerParams>,
    pub final_gain: Array1<f64>,
    pub final_bias: Array1<f64>,
}

impl LayerParams {
    fn zeros(cfg: &NgmConfig) -> Self {
        let d = cfg.d_model;
        let dh = cfg.d_head();
        let heads = || (0..cfg.n_heads).map(|_| Array2::zeros((d, dh))).collect();
        Self {
            ln1_gain: Array1::zeros(d),
            ln1_bias: Array1::zeros(d),
            w_query: heads(),
            w_key: heads(),
            w_value: heads(),
            w_out: heads(),
            ln2_gain: Array1::zeros(d),
            ln2_bias: Array1::zeros(d),
            w_ff1: Array2::zeros((d, cfg.d_ff)),
            b_ff1: Array1::zeros(cfg.d_ff),
            w_ff2: Array2::zeros((cfg.d_ff, d)),
            b_ff2: Array1::zeros(d),
        }
    }

    fn slices(&self) -> Vec<(String, &[f64])> {
        let mut out: Vec<(String, &[f64])> = vec![
            ("ln1_gain".into(), self.ln1_gain.as_slice().unwrap()),
            ("ln1_bias".into(), self.ln1_bias.as_slice().unwrap()),
        ];
        for (name, mats) in [
            ("w_query", &self.w_query),
            ("w_key", &self.w_key),
            ("w_value", &self.w_value),
            ("w_out", &self.w_out),
        ] {
            for (h, m) in mats.iter().enumerate() {
                out.push((format!("{name}[{h}]"), m.as_slice().unwrap()));
            }
        }
        out.extend([
            ("ln2_gain".into(), self.ln2_gain.as_slice().unwrap()),
            ("ln2_bias".into(), self.ln2_bias.as_slice().unwrap()),
            ("w_ff1".into(), self.w_ff1.as_slice().unwrap()),
            ("b_ff1".into(), self.b_ff1.as_slice().unwrap()),
            ("w_ff2".into(), self.w_ff2.as_slice().unwrap()),
            ("b_ff2".into(), self.b_ff2.as_slice().unwrap()),
        ]);
        out
    }

    fn slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = vec![
            self.ln1_gain.as_slice_mut().unwrap(),
            self.ln1_bias.as_slice_mut().unwrap(),
        ];
        for mats in [
            &mut self.w_query,
            &mut self.w_key,
            &mut self.w_value,
            &mut self.w_out,
        ] {
            for m in mats.iter_mut() {
                out.push(m.as_slice_mut().unwrap());
            }
        }
        out.extend([
            self.ln2_gain.as_slice_mut().unwrap(),
            self.ln2_bias.as_slice_mut().unwrap(),
            self.w_ff1.as_slice_mut().unwrap(),
            self.b_ff1.as_slice_mut().unwrap(),
            self.w_ff2.as_slice_mut().unwrap(),
            self.b_ff2.as_slice_mut().unwrap(),
        ]);
        out
    }
}

impl NgmParams {
    /// All-zero tensors of the right shapes; the gradient accumulator layout.
    pub fn zeros(cfg: &NgmConfig) -> Self {
        let d = cfg.d_model;
        Self {
            token_embedding: Array2::zeros((cfg.vocab_size, d)),
            position_embedding: Array2::zeros((cfg.context_window, d)),
            layers: (0..cfg.n_layers).map(|_| LayerParams::zeros(cfg)).collect(),
            final_gain: Array1::zeros(d),
            final_bias: Array1::zeros(d),
        }
    }

    /// Small-scale initialization: normal weights with standard deviation
    /// `std`, unit layer-norm gains, zero biases. Residual output projections
    /// are scaled down by `sqrt(2 * n_layers)`.
    pub fn init<R: Rng + ?Sized>(cfg: &NgmConfig, std: f64, rng: &mut R) -> Self {
        let mut p = Self::zeros(cfg);
        let normal = Normal::new(0.0, std).expect("std is finite and non-negative");
        let resid = Normal::new(0.0, std / (2.0 * cfg.n_layers as f64).sqrt())
            .expect("std is finite and non-negative");
        let mut fill = |a: &mut [f64], dist: &Normal<f64>| {
            for x in a {
                *x = dist.sample(rng);
            }
        };
        fill(p.token_embedding.as_slice_mut().unwrap(), &normal);
        fill(p.position_embedding.as_slice_mut().unwrap(), &normal);
        for layer in &mut p.layers {
            for m in layer
                .w_query
                .iter_mut()
                .chain(layer.w_key.iter_mut())
                .chain(layer.w_value.iter_mut())
            {
                fill(m.as_slice_mut().unwrap(), &normal);
            }
            for m in &mut layer.w_out {
                fill(m.as_slice_mut().unwrap(), &resid);
            }
            fill(layer.w_ff1.as_slice_mut().unwrap(), &normal);
            fill(layer.w_ff2.as_slice_mut().unwrap(), &resid);
            layer.ln1_gain.fill(1.0);
            layer.ln2_gain.fill(1.0);
        }
        p.final_gain.fill(1.0);
        p
    }

    /// Named flat views of every tensor, in a fixed order.
    pub fn named_slices(&self) -> Vec<(String, &[f64])> {
        let mut out: Vec<(String, &[f64])> = vec![
            (
                "token_embedding".into(),
                self.token_embedding.as_slice().unwrap(),
            ),
            (
                "position_embedding".into(),
                self.position_embedding.as_slice().unwrap(),
            ),
        ];
        for (l, layer) in self.layers.iter().enumerate() {
            out.extend(
                layer
                    .slices()
                    .into_iter()
                    .map(|(n, s)| (format!("layers[{l}].{n}"), s)),
            );
        }
        out.push(("final_gain".into(), self.final_gain.as_slice().unwrap()));
        out.push(("final_bias".into(), self.final_bias.as_slice().unwrap()));
        out
    }

    /// Mutable flat views in the same order as [`NgmParams::named_slices`].
    pub fn slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = vec![
            self.token_embedding.as_slice_mut().unwrap(),
            self.position_embedding.as_slice_mut().unwrap(),
        ];
        for layer in &mut self.layers {
            out.extend(layer.slices_mut());
        }
        out.push(self.final_gain.as_slice_mut().unwrap());
        out.push(self.final_bias.as_slice_mut().unwrap());
        out
    }

    pub fn num_params(&self) -> usize {
        self.named_slices().iter().map(|(_, s)| s.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.named_slices()
            .iter()
            .all(|(_, s)| s.iter().all(|x| x.is_finite()))
    }

    pub fn squared_norm(&self) -> f64 {
        self.named_slices()
            .iter()
            .flat_map(|(_, s)| s.iter())
            .map(|x| x * x)
            .sum()
    }

    /// `self += scale * other`, tensor by tensor.
    pub fn add_scaled(&mut self, other: &NgmParams, scale: f64) {
        let src = other.named_slices();
        for (dst, (_, src)) in self.slices_mut().into_iter().zip(src) {
            for (d, s) in dst.iter_mut().zip(src) {
                *d += scale * s;
            }
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for s in self.slices_mut() {
            for x in s {
                *x *= factor;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    #[test]
    fn parameter_count() {
        let cfg = NgmConfig {
            n_layers: 1,
            d_model: 8,
            n_heads: 2,
            d_ff: 16,
            context_window: 6,
            vocab_size: 12,
        };
        let p = NgmParams::init(&cfg, 0.02, &mut seeded(0));
        let per_layer = 2 * 8 + 4 * 2 * 8 * 4 + 2 * 8 + 8 * 16 + 16 + 16 * 8 + 8;
        assert_eq!(p.num_params(), 12 * 8 + 6 * 8 + per_layer + 2 * 8);
        assert_eq!(p.named_slices().len(), p.clone().slices_mut().len());
        assert!(p.is_finite());
    }
}
