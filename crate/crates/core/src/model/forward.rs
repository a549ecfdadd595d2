use super::params::{DenseIdx, ModelParams};
use crate::data::FeatureMatrix;
use crate::error::{Error, Result};
use crate::math::sigmoid;
use crate::tokenize::BLANK_ID;

const NORM_EPSILON: f64 = 1e-5;

/// `out = W x + b` for a row-major `rows x cols` matrix.
pub(crate) fn affine(params: &ModelParams, d: DenseIdx, x: &[f64], out: &mut [f64]) {
    let w = params.slice(d.w);
    out.copy_from_slice(params.slice(d.b));
    for (r, o) in out.iter_mut().enumerate() {
        let row = &w[r * d.cols..(r + 1) * d.cols];
        *o += row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
    }
}

/// Encoder activations for one utterance: `frames x dim` plus the per-layer
/// values kept for back-propagation.
#[derive(Debug, Clone)]
pub struct EncoderOutput {
    pub frames: usize,
    pub dim: usize,
    pub data: Vec<f64>,
    /// Input to layer `l` (stacked features for `l = 0`), `frames` rows each.
    pub(crate) layer_inputs: Vec<Vec<f64>>,
}

impl EncoderOutput {
    pub fn row(&self, t: usize) -> &[f64] {
        &self.data[t * self.dim..(t + 1) * self.dim]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.frames).map(|t| self.row(t).to_vec()).collect()
    }
}

impl ModelParams {
    /// Stacks `subsample_factor` consecutive frames (zero-padding the tail) and
    /// runs the feed-forward encoder, giving `ceil(T0 / s)` output frames.
    pub fn encode(&self, features: &FeatureMatrix) -> Result<EncoderOutput> {
        let cfg = self.config();
        if features.dim() != cfg.feature_dim {
            return Err(Error::Shape(format!(
                "feature dim {} but model expects {}",
                features.dim(),
                cfg.feature_dim
            )));
        }
        let s = cfg.subsample_factor;
        if features.frames() < s {
            return Err(Error::Shape(format!(
                "{} input frames is fewer than the subsampling factor {s}",
                features.frames()
            )));
        }
        let frames = features.frames().div_ceil(s);
        let width = s * cfg.feature_dim;
        let mut input = vec![0.0; frames * width];
        for (i, &v) in features.data().iter().enumerate() {
            input[i] = f64::from(v);
        }

        let mut layer_inputs = Vec::with_capacity(self.layout.encoder.len());
        let last = self.layout.encoder.len() - 1;
        for (l, &d) in self.layout.encoder.iter().enumerate() {
            let mut out = vec![0.0; frames * d.rows];
            for t in 0..frames {
                let o = &mut out[t * d.rows..(t + 1) * d.rows];
                affine(self, d, &input[t * d.cols..(t + 1) * d.cols], o);
                if l < last {
                    o.iter_mut().for_each(|x| *x = x.tanh());
                }
            }
            layer_inputs.push(std::mem::replace(&mut input, out));
        }
        Ok(EncoderOutput { frames, dim: cfg.encoder_dim, data: input, layer_inputs })
    }
}

/// Values of one LSTM step kept for back-propagation.
#[derive(Debug, Clone)]
pub(crate) struct LstmCache {
    pub token: u32,
    pub x: Vec<f64>,
    pub h_prev: Vec<f64>,
    pub c_prev: Vec<f64>,
    /// Normalised pre-activation, `4H`.
    pub xhat: Vec<f64>,
    pub inv_sigma: f64,
    /// Post-activation gates `[i, f, g, o]`, `4H`.
    pub gates: Vec<f64>,
    pub tanh_c: Vec<f64>,
}

/// Predictor outputs for positions `0..=U`.
#[derive(Debug, Clone)]
pub struct PredictorOutput {
    pub positions: usize,
    pub dim: usize,
    pub data: Vec<f64>,
    pub(crate) steps: Vec<LstmCache>,
}

impl PredictorOutput {
    pub fn row(&self, u: usize) -> &[f64] {
        &self.data[u * self.dim..(u + 1) * self.dim]
    }
}

impl ModelParams {
    /// One layer-normalised LSTM step on the embedding of `token` in `head`.
    /// Returns `(h, c)` and the cache.
    pub(crate) fn lstm_step(&self, head: usize, token: u32, h_prev: &[f64], c_prev: &[f64]) -> (Vec<f64>, Vec<f64>, LstmCache) {
        let hd = self.layout.heads[head];
        let e = self.config().embed_dim;
        let p = self.config().predictor_dim;
        let lstm = self.layout.lstm;
        let x = self.slice(hd.embed)[token as usize * e..(token as usize + 1) * e].to_vec();

        let wx = self.slice(lstm.wx);
        let wh = self.slice(lstm.wh);
        let mut pre = self.slice(lstm.b).to_vec();
        for (r, z) in pre.iter_mut().enumerate() {
            *z += wx[r * e..(r + 1) * e].iter().zip(&x).map(|(a, b)| a * b).sum::<f64>();
            *z += wh[r * p..(r + 1) * p].iter().zip(h_prev).map(|(a, b)| a * b).sum::<f64>();
        }

        let n = pre.len() as f64;
        let mean = pre.iter().sum::<f64>() / n;
        let var = pre.iter().map(|z| (z - mean).powi(2)).sum::<f64>() / n;
        let inv_sigma = 1.0 / (var + NORM_EPSILON).sqrt();
        let xhat: Vec<f64> = pre.iter().map(|z| (z - mean) * inv_sigma).collect();
        let gain = self.slice(lstm.gain);
        let shift = self.slice(lstm.shift);
        let mut gates = vec![0.0; 4 * p];
        for k in 0..4 * p {
            let v = gain[k] * xhat[k] + shift[k];
            gates[k] = if (2 * p..3 * p).contains(&k) { v.tanh() } else { sigmoid(v) };
        }

        let mut c = vec![0.0; p];
        let mut h = vec![0.0; p];
        let mut tanh_c = vec![0.0; p];
        for j in 0..p {
            let (i, f, g, o) = (gates[j], gates[p + j], gates[2 * p + j], gates[3 * p + j]);
            c[j] = f * c_prev[j] + i * g;
            tanh_c[j] = c[j].tanh();
            h[j] = o * tanh_c[j];
        }
        let cache = LstmCache {
            token,
            x,
            h_prev: h_prev.to_vec(),
            c_prev: c_prev.to_vec(),
            xhat,
            inv_sigma,
            gates,
            tanh_c,
        };
        (h, c, cache)
    }

    /// Runs the predictor over `[blank, y_1, ..., y_U]`; row `u` depends only
    /// on the first `u` targets.
    pub fn predict(&self, head: usize, targets: &[u32]) -> Result<PredictorOutput> {
        let vocab = self.head_vocab(head);
        if let Some(&bad) = targets.iter().find(|&&y| y as usize >= vocab || y == BLANK_ID) {
            return Err(if bad == BLANK_ID {
                Error::BlankInTargets { blank: BLANK_ID, position: targets.iter().position(|&y| y == BLANK_ID).unwrap_or(0) }
            } else {
                Error::TargetOutOfRange { id: bad, vocab }
            });
        }
        let p = self.config().predictor_dim;
        let mut h = vec![0.0; p];
        let mut c = vec![0.0; p];
        let mut data = Vec::with_capacity((targets.len() + 1) * p);
        let mut steps = Vec::with_capacity(targets.len() + 1);
        for &token in std::iter::once(&BLANK_ID).chain(targets) {
            let (h2, c2, cache) = self.lstm_step(head, token, &h, &c);
            data.extend_from_slice(&h2);
            steps.push(cache);
            h = h2;
            c = c2;
        }
        Ok(PredictorOutput { positions: targets.len() + 1, dim: p, data, steps })
    }

    /// Joint logits `W tanh(enc + pred) + b`; `hidden` receives the tanh
    /// activation.
    pub(crate) fn joint_into(&self, head: usize, enc: &[f64], pred: &[f64], hidden: &mut [f64], logits: &mut [f64]) {
        for ((a, e), p) in hidden.iter_mut().zip(enc).zip(pred) {
            *a = (e + p).tanh();
        }
        affine(self, self.layout.heads[head].out, hidden, logits);
    }

    /// Logits over `head`'s vocabulary for one encoder frame and predictor
    /// output.
    pub fn joint_logits(&self, head: usize, enc: &[f64], pred: &[f64]) -> Vec<f64> {
        let mut hidden = vec![0.0; enc.len()];
        let mut logits = vec![0.0; self.head_vocab(head)];
        self.joint_into(head, enc, pred, &mut hidden, &mut logits);
        logits
    }
}
