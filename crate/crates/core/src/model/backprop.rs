use super::forward::{EncoderOutput, PredictorOutput};
use super::params::{DenseIdx, ModelParams};
use crate::error::Result;
use crate::tokenize::BLANK_ID;
use crate::transducer::{rnnt_grad, JointLogGrid};

/// `grad_w += scale * dy x^T`, `grad_b += scale * dy`, and returns `W^T dy`
/// when `dx` is requested.
fn dense_backward(params: &ModelParams, grad: &mut [f64], d: DenseIdx, x: &[f64], dy: &[f64], dx: Option<&mut [f64]>) {
    let w_off = params.layout.tensors[d.w].offset;
    let b_off = params.layout.tensors[d.b].offset;
    for (r, &g) in dy.iter().enumerate() {
        if g == 0.0 {
            continue;
        }
        grad[b_off + r] += g;
        let row = &mut grad[w_off + r * d.cols..w_off + (r + 1) * d.cols];
        for (gw, xv) in row.iter_mut().zip(x) {
            *gw += g * xv;
        }
    }
    if let Some(dx) = dx {
        let w = params.slice(d.w);
        dx.fill(0.0);
        for (r, &g) in dy.iter().enumerate() {
            if g == 0.0 {
                continue;
            }
            for (o, wv) in dx.iter_mut().zip(&w[r * d.cols..(r + 1) * d.cols]) {
                *o += g * wv;
            }
        }
    }
}

/// Forward and backward pass for one utterance. Adds `scale * d nll / d theta`
/// into `grad` and returns the unscaled negative log-likelihood.
pub(crate) fn accumulate_utterance(
    params: &ModelParams,
    enc: &EncoderOutput,
    pred: &PredictorOutput,
    head: usize,
    targets: &[u32],
    scale: f64,
    grad: &mut [f64],
) -> Result<f64> {
    let (frames, positions, h) = (enc.frames, pred.positions, enc.dim);
    let vocab = params.head_vocab(head);
    let out = params.layout.heads[head].out;

    let cells = frames * positions;
    let w = params.slice(out.w);
    let bias = params.slice(out.b);
    // Transposed output weights turn the per-cell matrix-vector product into
    // contiguous axpy updates.
    let mut wt = vec![0.0; h * vocab];
    for k in 0..vocab {
        for j in 0..h {
            wt[j * vocab + k] = w[k * h + j];
        }
    }
    let mut hidden = vec![0.0; cells * h];
    let mut logits = vec![0.0; cells * vocab];
    for t in 0..frames {
        for u in 0..positions {
            let c = t * positions + u;
            let a = &mut hidden[c * h..(c + 1) * h];
            for ((a, e), p) in a.iter_mut().zip(enc.row(t)).zip(pred.row(u)) {
                *a = (e + p).tanh();
            }
            let z = &mut logits[c * vocab..(c + 1) * vocab];
            z.copy_from_slice(bias);
            for (j, &aj) in a.iter().enumerate() {
                for (zk, wk) in z.iter_mut().zip(&wt[j * vocab..(j + 1) * vocab]) {
                    *zk += aj * wk;
                }
            }
        }
    }
    let grid = JointLogGrid::from_logits(frames, targets.len(), vocab, logits)?;
    let loss = rnnt_grad(&grid, targets, BLANK_ID)?;

    let mut d_enc = vec![0.0; frames * h];
    let mut d_pred = vec![0.0; positions * h];
    let w_off = params.layout.tensors[out.w].offset;
    let b_off = params.layout.tensors[out.b].offset;
    let mut d_hidden = vec![0.0; h];
    for t in 0..frames {
        for u in 0..positions {
            let c = t * positions + u;
            let a = &hidden[c * h..(c + 1) * h];
            d_hidden.fill(0.0);
            for (k, &g) in loss.grad[c * vocab..(c + 1) * vocab].iter().enumerate() {
                let g = g * scale;
                grad[b_off + k] += g;
                let gw = &mut grad[w_off + k * h..w_off + (k + 1) * h];
                for ((gw, &aj), (dh, &wj)) in gw.iter_mut().zip(a).zip(d_hidden.iter_mut().zip(&w[k * h..(k + 1) * h])) {
                    *gw += g * aj;
                    *dh += g * wj;
                }
            }
            for j in 0..h {
                let ds = d_hidden[j] * (1.0 - a[j] * a[j]);
                d_enc[t * h + j] += ds;
                d_pred[u * h + j] += ds;
            }
        }
    }

    predictor_backward(params, head, pred, &d_pred, grad);
    encoder_backward(params, enc, d_enc, grad);
    Ok(loss.nll)
}

fn predictor_backward(params: &ModelParams, head: usize, pred: &PredictorOutput, d_out: &[f64], grad: &mut [f64]) {
    let p = params.config().predictor_dim;
    let e = params.config().embed_dim;
    let lstm = params.layout.lstm;
    let off = |i: usize| params.layout.tensors[i].offset;
    let (wx_off, wh_off, b_off, gain_off, shift_off) = (off(lstm.wx), off(lstm.wh), off(lstm.b), off(lstm.gain), off(lstm.shift));
    let embed_off = off(params.layout.heads[head].embed);
    let wx = params.slice(lstm.wx);
    let wh = params.slice(lstm.wh);
    let gain = params.slice(lstm.gain);

    let mut dh_next = vec![0.0; p];
    let mut dc_next = vec![0.0; p];
    let mut dn = vec![0.0; 4 * p];
    let mut dpre = vec![0.0; 4 * p];
    for (u, step) in pred.steps.iter().enumerate().rev() {
        let g = &step.gates;
        for j in 0..p {
            let dh = d_out[u * p + j] + dh_next[j];
            let (i, f, gg, o) = (g[j], g[p + j], g[2 * p + j], g[3 * p + j]);
            let tc = step.tanh_c[j];
            let dc = dc_next[j] + dh * o * (1.0 - tc * tc);
            dn[j] = dc * gg * i * (1.0 - i);
            dn[p + j] = dc * step.c_prev[j] * f * (1.0 - f);
            dn[2 * p + j] = dc * i * (1.0 - gg * gg);
            dn[3 * p + j] = dh * tc * o * (1.0 - o);
            dc_next[j] = dc * f;
        }

        let n = (4 * p) as f64;
        let mut mean_dx = 0.0;
        let mut mean_dx_xhat = 0.0;
        for k in 0..4 * p {
            grad[gain_off + k] += dn[k] * step.xhat[k];
            grad[shift_off + k] += dn[k];
            let dxhat = dn[k] * gain[k];
            mean_dx += dxhat;
            mean_dx_xhat += dxhat * step.xhat[k];
        }
        mean_dx /= n;
        mean_dx_xhat /= n;
        for k in 0..4 * p {
            dpre[k] = step.inv_sigma * (dn[k] * gain[k] - mean_dx - step.xhat[k] * mean_dx_xhat);
        }

        dh_next.fill(0.0);
        let tok = step.token as usize;
        for (r, &d) in dpre.iter().enumerate() {
            grad[b_off + r] += d;
            for c in 0..e {
                grad[wx_off + r * e + c] += d * step.x[c];
                grad[embed_off + tok * e + c] += d * wx[r * e + c];
            }
            for c in 0..p {
                grad[wh_off + r * p + c] += d * step.h_prev[c];
                dh_next[c] += d * wh[r * p + c];
            }
        }
    }
}

fn encoder_backward(params: &ModelParams, enc: &EncoderOutput, mut d_out: Vec<f64>, grad: &mut [f64]) {
    let layers = &params.layout.encoder;
    for (l, &d) in layers.iter().enumerate().rev() {
        let input = &enc.layer_inputs[l];
        let mut d_in = vec![0.0; enc.frames * d.cols];
        for t in 0..enc.frames {
            let x = &input[t * d.cols..(t + 1) * d.cols];
            let dy = &d_out[t * d.rows..(t + 1) * d.rows];
            let dx = if l > 0 { Some(&mut d_in[t * d.cols..(t + 1) * d.cols]) } else { None };
            dense_backward(params, grad, d, x, dy, dx);
            if l > 0 {
                // The input of layer l is tanh of the previous layer.
                for (g, a) in d_in[t * d.cols..(t + 1) * d.cols].iter_mut().zip(x) {
                    *g *= 1.0 - a * a;
                }
            }
        }
        d_out = d_in;
    }
}
