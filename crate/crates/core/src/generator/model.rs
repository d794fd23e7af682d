//! Decoder-only transformer: forward pass, exact backward pass, and an
//! incremental decoder with a key/value cache.
//!
//! Blocks are pre-norm: `x + MHA(LN(x))`, then `+ FFN(LN(.))`. Multi-head
//! attention is the sum of per-head outputs, each head projecting back to the
//! model width through its own output matrix. Logits come from the final
//! hidden states times the transposed token embedding.

use ndarray::{s, Array1, Array2, ArrayView1, Axis, Zip};
use serde::{Deserialize, Serialize};

use super::config::NgmConfig;
use super::params::{LayerParams, NgmParams};
use crate::error::{Error, Result};

const LN_EPS: f64 = 1e-5;
const GELU_C: f64 = 0.797_884_560_802_865_4; // sqrt(2 / pi)
const GELU_K: f64 = 0.044_715;

pub fn gelu(x: f64) -> f64 {
    0.5 * x * (1.0 + (GELU_C * (x + GELU_K * x * x * x)).tanh())
}

fn gelu_grad(x: f64) -> f64 {
    let t = (GELU_C * (x + GELU_K * x * x * x)).tanh();
    0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * GELU_C * (1.0 + 3.0 * GELU_K * x * x)
}

/// Row-wise softmax in place.
pub fn softmax_in_place(row: &mut [f64]) {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for x in row.iter_mut() {
        *x = (*x - max).exp();
        sum += *x;
    }
    for x in row.iter_mut() {
        *x /= sum;
    }
}

struct LnCache {
    xhat: Array2<f64>,
    inv_std: Array1<f64>,
}

fn layer_norm(x: &Array2<f64>, gain: &Array1<f64>, bias: &Array1<f64>) -> (Array2<f64>, LnCache) {
    let d = x.ncols() as f64;
    let mut xhat = x.clone();
    let mut inv_std = Array1::zeros(x.nrows());
    for (mut row, is) in xhat.rows_mut().into_iter().zip(inv_std.iter_mut()) {
        let mean = row.sum() / d;
        row.mapv_inplace(|v| v - mean);
        let var = row.iter().map(|v| v * v).sum::<f64>() / d;
        *is = 1.0 / (var + LN_EPS).sqrt();
        let s = *is;
        row.mapv_inplace(|v| v * s);
    }
    let y = &xhat * gain + bias;
    (y, LnCache { xhat, inv_std })
}

fn layer_norm_backward(
    dy: &Array2<f64>,
    cache: &LnCache,
    gain: &Array1<f64>,
    dgain: &mut Array1<f64>,
    dbias: &mut Array1<f64>,
) -> Array2<f64> {
    *dgain += &(dy * &cache.xhat).sum_axis(Axis(0));
    *dbias += &dy.sum_axis(Axis(0));
    let d = dy.ncols() as f64;
    let dxhat = dy * gain;
    let mut dx = Array2::zeros(dy.raw_dim());
    for (((mut out, g), xh), is) in dx
        .rows_mut()
        .into_iter()
        .zip(dxhat.rows())
        .zip(cache.xhat.rows())
        .zip(cache.inv_std.iter())
    {
        let sum_g = g.sum();
        let sum_gx = g.dot(&xh);
        Zip::from(&mut out)
            .and(&g)
            .and(&xh)
            .for_each(|o, &gi, &xi| *o = is / d * (d * gi - sum_g - xi * sum_gx));
    }
    dx
}

struct HeadCache {
    q: Array2<f64>,
    k: Array2<f64>,
    v: Array2<f64>,
    /// Causal attention weights, zero above the diagonal.
    probs: Array2<f64>,
    ctx: Array2<f64>,
}

fn head_forward(x: &Array2<f64>, layer: &LayerParams, h: usize) -> (Array2<f64>, HeadCache) {
    let q = x.dot(&layer.w_query[h]);
    let k = x.dot(&layer.w_key[h]);
    let v = x.dot(&layer.w_value[h]);
    let scale = 1.0 / (q.ncols() as f64).sqrt();
    let n = x.nrows();
    let mut probs = q.dot(&k.t()) * scale;
    for i in 0..n {
        let mut row = probs.row_mut(i);
        let row = row.as_slice_mut().expect("fresh matrix is contiguous");
        softmax_in_place(&mut row[..=i]);
        row[i + 1..].fill(0.0);
    }
    let ctx = probs.dot(&v);
    let out = ctx.dot(&layer.w_out[h].t());
    (
        out,
        HeadCache {
            q,
            k,
            v,
            probs,
            ctx,
        },
    )
}

struct LayerCache {
    ln1: LnCache,
    a: Array2<f64>,
    heads: Vec<HeadCache>,
    ln2: LnCache,
    b: Array2<f64>,
    pre_act: Array2<f64>,
    act: Array2<f64>,
}

fn ffn_forward(x: &Array2<f64>, layer: &LayerParams) -> (Array2<f64>, Array2<f64>, Array2<f64>) {
    let pre = x.dot(&layer.w_ff1) + &layer.b_ff1;
    let act = pre.mapv(gelu);
    let out = act.dot(&layer.w_ff2) + &layer.b_ff2;
    (out, pre, act)
}

fn block_forward(x: &Array2<f64>, layer: &LayerParams) -> (Array2<f64>, LayerCache) {
    let (a, ln1) = layer_norm(x, &layer.ln1_gain, &layer.ln1_bias);
    let mut x1 = x.clone();
    let mut heads = Vec::with_capacity(layer.w_query.len());
    for h in 0..layer.w_query.len() {
        let (out, cache) = head_forward(&a, layer, h);
        x1 += &out;
        heads.push(cache);
    }
    let (b, ln2) = layer_norm(&x1, &layer.ln2_gain, &layer.ln2_bias);
    let (ff, pre_act, act) = ffn_forward(&b, layer);
    let y = x1 + ff;
    (
        y,
        LayerCache {
            ln1,
            a,
            heads,
            ln2,
            b,
            pre_act,
            act,
        },
    )
}

fn block_backward(
    dy: &Array2<f64>,
    layer: &LayerParams,
    cache: &LayerCache,
    grad: &mut LayerParams,
) -> Array2<f64> {
    // Feed-forward sub-layer.
    grad.w_ff2 += &cache.act.t().dot(dy);
    grad.b_ff2 += &dy.sum_axis(Axis(0));
    let mut dpre = dy.dot(&layer.w_ff2.t());
    Zip::from(&mut dpre)
        .and(&cache.pre_act)
        .for_each(|g, &p| *g *= gelu_grad(p));
    grad.w_ff1 += &cache.b.t().dot(&dpre);
    grad.b_ff1 += &dpre.sum_axis(Axis(0));
    let db = dpre.dot(&layer.w_ff1.t());
    let dx1 = dy
        + &layer_norm_backward(
            &db,
            &cache.ln2,
            &layer.ln2_gain,
            &mut grad.ln2_gain,
            &mut grad.ln2_bias,
        );

    // Attention sub-layer.
    let mut da = Array2::zeros(cache.a.raw_dim());
    for (h, hc) in cache.heads.iter().enumerate() {
        let scale = 1.0 / (hc.q.ncols() as f64).sqrt();
        grad.w_out[h] += &dx1.t().dot(&hc.ctx);
        let dctx = dx1.dot(&layer.w_out[h]);
        let dprobs = dctx.dot(&hc.v.t());
        let dv = hc.probs.t().dot(&dctx);
        let mut dscores = Array2::zeros(hc.probs.raw_dim());
        for ((mut ds, p), dp) in dscores
            .rows_mut()
            .into_iter()
            .zip(hc.probs.rows())
            .zip(dprobs.rows())
        {
            let inner = p.dot(&dp);
            Zip::from(&mut ds)
                .and(&p)
                .and(&dp)
                .for_each(|o, &pi, &dpi| *o = pi * (dpi - inner) * scale);
        }
        let dq = dscores.dot(&hc.k);
        let dk = dscores.t().dot(&hc.q);
        grad.w_query[h] += &cache.a.t().dot(&dq);
        grad.w_key[h] += &cache.a.t().dot(&dk);
        grad.w_value[h] += &cache.a.t().dot(&dv);
        da += &dq.dot(&layer.w_query[h].t());
        da += &dk.dot(&layer.w_key[h].t());
        da += &dv.dot(&layer.w_value[h].t());
    }
    dx1 + layer_norm_backward(
        &da,
        &cache.ln1,
        &layer.ln1_gain,
        &mut grad.ln1_gain,
        &mut grad.ln1_bias,
    )
}

fn check_width(x: &Array2<f64>, d: usize) -> Result<()> {
    if x.ncols() != d {
        return Err(Error::Dimension(format!(
            "expected {d} columns, got {}",
            x.ncols()
        )));
    }
    Ok(())
}

/// Parameters plus shape: the noise generation model proper.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NgmModel {
    pub config: NgmConfig,
    pub params: NgmParams,
}

struct ForwardCache {
    layers: Vec<LayerCache>,
    final_ln: LnCache,
    hidden: Array2<f64>,
}

impl NgmModel {
    pub fn new(config: NgmConfig, params: NgmParams) -> Result<Self> {
        config.validate()?;
        Ok(Self { config, params })
    }

    pub fn init<R: rand::Rng + ?Sized>(config: NgmConfig, std: f64, rng: &mut R) -> Result<Self> {
        config.validate()?;
        let params = NgmParams::init(&config, std, rng);
        Ok(Self { config, params })
    }

    fn check_len(&self, n: usize) -> Result<()> {
        if n > self.config.context_window {
            return Err(Error::SequenceTooLong {
                len: n,
                max: self.config.context_window,
            });
        }
        Ok(())
    }

    /// A single causal attention head applied to `x` (`n x d_model`).
    pub fn attention_head(&self, x: &Array2<f64>, layer: usize, head: usize) -> Result<Array2<f64>> {
        check_width(x, self.config.d_model)?;
        self.check_len(x.nrows())?;
        Ok(head_forward(x, &self.params.layers[layer], head).0)
    }

    /// Sum of all heads of `layer`.
    pub fn mha(&self, x: &Array2<f64>, layer: usize) -> Result<Array2<f64>> {
        check_width(x, self.config.d_model)?;
        self.check_len(x.nrows())?;
        let lp = &self.params.layers[layer];
        let mut out = Array2::zeros(x.raw_dim());
        for h in 0..lp.w_query.len() {
            out += &head_forward(x, lp, h).0;
        }
        Ok(out)
    }

    /// `GeLU(x W1 + b1) W2 + b2`.
    pub fn ffn(&self, x: &Array2<f64>, layer: usize) -> Result<Array2<f64>> {
        check_width(x, self.config.d_model)?;
        Ok(ffn_forward(x, &self.params.layers[layer]).0)
    }

    pub fn transformer_block(&self, x: &Array2<f64>, layer: usize) -> Result<Array2<f64>> {
        check_width(x, self.config.d_model)?;
        self.check_len(x.nrows())?;
        Ok(block_forward(x, &self.params.layers[layer]).0)
    }

    fn embed(&self, tokens: &[usize]) -> Result<Array2<f64>> {
        let d = self.config.d_model;
        let mut h = Array2::zeros((tokens.len(), d));
        for (t, &tok) in tokens.iter().enumerate() {
            if tok >= self.config.vocab_size {
                return Err(Error::Dimension(format!(
                    "token id {tok} outside vocabulary of {}",
                    self.config.vocab_size
                )));
            }
            let mut row = h.row_mut(t);
            row += &self.params.token_embedding.row(tok);
            row += &self.params.position_embedding.row(t);
        }
        Ok(h)
    }

    fn forward_cached(&self, tokens: &[usize]) -> Result<(Array2<f64>, ForwardCache)> {
        self.check_len(tokens.len())?;
        let mut h = self.embed(tokens)?;
        let mut layers = Vec::with_capacity(self.params.layers.len());
        for lp in &self.params.layers {
            let (next, cache) = block_forward(&h, lp);
            layers.push(cache);
            h = next;
        }
        let (hidden, final_ln) =
            layer_norm(&h, &self.params.final_gain, &self.params.final_bias);
        let logits = hidden.dot(&self.params.token_embedding.t());
        Ok((
            logits,
            ForwardCache {
                layers,
                final_ln,
                hidden,
            },
        ))
    }

    /// Next-token logits at every position (`n x vocab`).
    pub fn logits(&self, tokens: &[usize]) -> Result<Array2<f64>> {
        Ok(self.forward_cached(tokens)?.0)
    }

    /// Next-token distributions at every position; each row sums to one.
    pub fn probabilities(&self, tokens: &[usize]) -> Result<Array2<f64>> {
        let mut p = self.logits(tokens)?;
        for mut row in p.rows_mut() {
            softmax_in_place(row.as_slice_mut().expect("contiguous"));
        }
        Ok(p)
    }

    fn check_targets(&self, tokens: &[usize], first_target: usize) -> Result<()> {
        if tokens.len() < 2 {
            return Err(Error::InvalidData(
                "a loss needs at least two tokens".into(),
            ));
        }
        self.check_len(tokens.len())?;
        if first_target == 0 || first_target >= tokens.len() {
            return Err(Error::InvalidData(format!(
                "first target {first_target} outside 1..{}",
                tokens.len()
            )));
        }
        Ok(())
    }

    /// Mean negative log-likelihood of `tokens[first_target..]`, each given
    /// its prefix. `first_target = 1` scores the whole sequence.
    pub fn nll(&self, tokens: &[usize], first_target: usize) -> Result<f64> {
        self.check_targets(tokens, first_target)?;
        let logits = self.logits(tokens)?;
        let mut total = 0.0;
        for (t, &target) in tokens.iter().enumerate().skip(first_target) {
            total += neg_log_softmax(logits.row(t - 1), target);
        }
        Ok(total / (tokens.len() - first_target) as f64)
    }

    /// Loss and its exact gradient with respect to every parameter.
    pub fn loss_and_grad(&self, tokens: &[usize], first_target: usize) -> Result<(f64, NgmParams)> {
        let mut grad = NgmParams::zeros(&self.config);
        let loss = self.accumulate_grad(tokens, first_target, 1.0, &mut grad)?;
        Ok((loss, grad))
    }

    /// Adds `weight * d(loss)/d(params)` into `grad` and returns the loss.
    pub fn accumulate_grad(
        &self,
        tokens: &[usize],
        first_target: usize,
        weight: f64,
        grad: &mut NgmParams,
    ) -> Result<f64> {
        self.check_targets(tokens, first_target)?;
        let (logits, cache) = self.forward_cached(tokens)?;
        let count = (tokens.len() - first_target) as f64;
        let mut dlogits = Array2::zeros(logits.raw_dim());
        let mut loss = 0.0;
        for (t, &target) in tokens.iter().enumerate().skip(first_target) {
            let mut row = dlogits.row_mut(t - 1);
            row.assign(&logits.row(t - 1));
            let r = row.as_slice_mut().expect("contiguous");
            softmax_in_place(r);
            loss -= r[target].max(f64::MIN_POSITIVE).ln();
            r[target] -= 1.0;
            for x in r.iter_mut() {
                *x *= weight / count;
            }
        }
        loss /= count;

        let p = &self.params;
        grad.token_embedding += &dlogits.t().dot(&cache.hidden);
        let dhidden = dlogits.dot(&p.token_embedding);
        let mut dh = layer_norm_backward(
            &dhidden,
            &cache.final_ln,
            &p.final_gain,
            &mut grad.final_gain,
            &mut grad.final_bias,
        );
        for (l, lc) in cache.layers.iter().enumerate().rev() {
            dh = block_backward(&dh, &p.layers[l], lc, &mut grad.layers[l]);
        }
        for (t, &tok) in tokens.iter().enumerate() {
            let row = dh.row(t);
            let mut e = grad.token_embedding.row_mut(tok);
            e += &row;
            let mut pe = grad.position_embedding.row_mut(t);
            pe += &row;
        }
        Ok(loss)
    }

    pub fn decoder(&self) -> IncrementalDecoder<'_> {
        IncrementalDecoder::new(self)
    }
}

fn neg_log_softmax(row: ArrayView1<f64>, target: usize) -> f64 {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + row.iter().map(|x| (x - max).exp()).sum::<f64>().ln();
    lse - row[target]
}

/// Token-at-a-time decoding that caches per-head keys and values, so each
/// step costs one row of work per layer instead of a full re-encode.
pub struct IncrementalDecoder<'m> {
    model: &'m NgmModel,
    keys: Vec<Vec<Array2<f64>>>,
    values: Vec<Vec<Array2<f64>>>,
    position: usize,
}

impl<'m> IncrementalDecoder<'m> {
    fn new(model: &'m NgmModel) -> Self {
        let dh = model.config.d_head();
        let empty = || {
            (0..model.config.n_heads)
                .map(|_| Array2::zeros((0, dh)))
                .collect::<Vec<_>>()
        };
        Self {
            model,
            keys: (0..model.config.n_layers).map(|_| empty()).collect(),
            values: (0..model.config.n_layers).map(|_| empty()).collect(),
            position: 0,
        }
    }

    pub fn position(&self) -> usize {
        self.position
    }

    /// Feeds one token and returns the logits for the token after it.
    pub fn step(&mut self, token: usize) -> Result<Array1<f64>> {
        let model = self.model;
        model.check_len(self.position + 1)?;
        let p = &model.params;
        let mut x = model.embed(&[token])?;
        // `embed` used position 0; shift to the real position.
        x.row_mut(0).scaled_add(-1.0, &p.position_embedding.row(0));
        x.row_mut(0)
            .scaled_add(1.0, &p.position_embedding.row(self.position));

        for (l, lp) in p.layers.iter().enumerate() {
            let (a, _) = layer_norm(&x, &lp.ln1_gain, &lp.ln1_bias);
            let mut x1 = x.clone();
            for h in 0..lp.w_query.len() {
                let q = a.dot(&lp.w_query[h]);
                let k = a.dot(&lp.w_key[h]);
                let v = a.dot(&lp.w_value[h]);
                self.keys[l][h]
                    .push_row(k.row(0))
                    .expect("row width matches");
                self.values[l][h]
                    .push_row(v.row(0))
                    .expect("row width matches");
                let scale = 1.0 / (q.ncols() as f64).sqrt();
                let mut scores = self.keys[l][h].dot(&q.row(0)) * scale;
                softmax_in_place(scores.as_slice_mut().expect("contiguous"));
                let ctx = scores.dot(&self.values[l][h]);
                let out = lp.w_out[h].dot(&ctx);
                let mut row = x1.row_mut(0);
                row += &out;
            }
            let (b, _) = layer_norm(&x1, &lp.ln2_gain, &lp.ln2_bias);
            let (ff, _, _) = ffn_forward(&b, lp);
            x = x1 + ff;
        }
        let (hidden, _) = layer_norm(&x, &p.final_gain, &p.final_bias);
        self.position += 1;
        Ok(p.token_embedding.dot(&hidden.slice(s![0, ..])))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use rand::Rng;

    fn tiny(n_heads: usize) -> NgmModel {
        let cfg = NgmConfig {
            n_layers: 2,
            d_model: 8,
            n_heads,
            d_ff: 12,
            context_window: 10,
            vocab_size: 12,
        };
        NgmModel::init(cfg, 0.3, &mut seeded(3)).unwrap()
    }

    fn random_input(rng: &mut impl Rng, n: usize, d: usize) -> Array2<f64> {
        Array2::from_shape_fn((n, d), |_| rng.random_range(-1.0..1.0))
    }

    /// Dense reference attention written with explicit loops.
    fn reference_head(x: &Array2<f64>, lp: &LayerParams, h: usize) -> Array2<f64> {
        let (n, d) = x.dim();
        let dh = lp.w_query[h].ncols();
        let proj = |w: &Array2<f64>| {
            let mut out = vec![vec![0.0; dh]; n];
            for i in 0..n {
                for c in 0..dh {
                    out[i][c] = (0..d).map(|j| x[[i, j]] * w[[j, c]]).sum();
                }
            }
            out
        };
        let (q, k, v) = (proj(&lp.w_query[h]), proj(&lp.w_key[h]), proj(&lp.w_value[h]));
        let mut out = Array2::zeros((n, d));
        for i in 0..n {
            let scores: Vec<f64> = (0..=i)
                .map(|j| (0..dh).map(|c| q[i][c] * k[j][c]).sum::<f64>() / (dh as f64).sqrt())
                .collect();
            let max = scores.iter().cloned().fold(f64::MIN, f64::max);
            let z: f64 = scores.iter().map(|s| (s - max).exp()).sum();
            let mut ctx = vec![0.0; dh];
            for (j, s) in scores.iter().enumerate() {
                let w = (s - max).exp() / z;
                for c in 0..dh {
                    ctx[c] += w * v[j][c];
                }
            }
            for a in 0..d {
                out[[i, a]] = (0..dh).map(|c| ctx[c] * lp.w_out[h][[a, c]]).sum();
            }
        }
        out
    }

    #[test]
    fn single_position_is_a_projection() {
        let m = tiny(1);
        let x = random_input(&mut seeded(1), 1, 8);
        let lp = &m.params.layers[0];
        let expected = x.dot(&lp.w_value[0]).dot(&lp.w_out[0].t());
        let got = m.attention_head(&x, 0, 0).unwrap();
        assert!((got - expected).iter().all(|e| e.abs() < 1e-12));
    }

    #[test]
    fn zero_input_gives_zero_output() {
        let m = tiny(2);
        let x = Array2::zeros((4, 8));
        assert!(m.attention_head(&x, 0, 1).unwrap().iter().all(|&v| v == 0.0));
        assert!(m.ffn(&x, 0).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn head_matches_dense_reference() {
        let m = tiny(2);
        let x = random_input(&mut seeded(2), 3, 8);
        for h in 0..2 {
            let got = m.attention_head(&x, 1, h).unwrap();
            let want = reference_head(&x, &m.params.layers[1], h);
            assert!((got - want).iter().all(|e| e.abs() < 1e-12));
        }
    }

    #[test]
    fn single_head_mha_is_the_head() {
        let m = tiny(1);
        let x = random_input(&mut seeded(4), 5, 8);
        let diff = m.mha(&x, 0).unwrap() - m.attention_head(&x, 0, 0).unwrap();
        assert!(diff.iter().all(|e| e.abs() < 1e-15));
    }

    #[test]
    fn block_preserves_shape() {
        let m = tiny(2);
        let mut rng = seeded(5);
        for n in 1..=8 {
            let x = random_input(&mut rng, n, 8);
            assert_eq!(m.transformer_block(&x, 0).unwrap().dim(), (n, 8));
        }
    }

    #[test]
    fn dimension_errors() {
        let m = tiny(2);
        assert!(matches!(
            m.attention_head(&Array2::zeros((11, 8)), 0, 0),
            Err(Error::SequenceTooLong { len: 11, max: 10 })
        ));
        assert!(matches!(
            m.mha(&Array2::zeros((2, 7)), 0),
            Err(Error::Dimension(_))
        ));
        assert!(m.logits(&[12]).is_err());
    }

    #[test]
    fn probabilities_are_distributions() {
        let m = tiny(2);
        let p = m.probabilities(&[4, 5, 6, 7, 1]).unwrap();
        for row in p.rows() {
            assert!(row.iter().all(|&v| v >= 0.0));
            assert!((row.sum() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn uniform_logits_give_log_vocab_loss() {
        let mut m = tiny(2);
        m.params.token_embedding.fill(0.0);
        let loss = m.nll(&[0, 3, 5, 7], 1).unwrap();
        assert!((loss - (12f64).ln()).abs() < 1e-12);
    }

    #[test]
    fn loss_requires_two_tokens() {
        let m = tiny(2);
        assert!(m.nll(&[4], 1).is_err());
        assert!(m.nll(&[4; 11], 1).is_err());
    }

    #[test]
    fn gradient_of_suffix_loss_matches_finite_differences() {
        let m = tiny(2);
        let tokens = [4, 5, 2, 6, 3];
        let (_, grad) = m.loss_and_grad(&tokens, 3).unwrap();
        let g = grad.named_slices();
        let h = 1e-5;
        let mut worst: f64 = 0.0;
        for (ti, (_, gs)) in g.iter().enumerate() {
            for idx in (0..gs.len()).step_by(7) {
                let mut plus = m.clone();
                plus.params.slices_mut()[ti][idx] += h;
                let mut minus = m.clone();
                minus.params.slices_mut()[ti][idx] -= h;
                let num = (plus.nll(&tokens, 3).unwrap() - minus.nll(&tokens, 3).unwrap()) / (2.0 * h);
                let a = gs[idx];
                let denom = a.abs().max(num.abs());
                if denom > 1e-10 {
                    worst = worst.max((a - num).abs() / denom);
                }
            }
        }
        assert!(worst < 1e-4, "max relative error {worst}");
    }

    #[test]
    fn incremental_decoder_matches_full_forward() {
        let m = tiny(2);
        let tokens = [4, 9, 2, 7, 7, 3];
        let full = m.logits(&tokens).unwrap();
        let mut dec = m.decoder();
        for (t, &tok) in tokens.iter().enumerate() {
            let step = dec.step(tok).unwrap();
            let diff = &step - &full.row(t);
            assert!(diff.iter().all(|e| e.abs() < 1e-10), "position {t}");
        }
    }
}
