//! Scalar reference implementations used as test oracles. Everything here is
//! plain loops over the raw parameter tensors, with no tape involved.

use alloc::vec;
use alloc::vec::Vec;

use crate::diff::Tensor;
use crate::model::{AttentionStrategy, LstmWeights, ModelParams, Point, StrategyParams};

pub fn oracle_affine(w: &Tensor, b: &Tensor, x: &[f64]) -> Vec<f64> {
    let (inp, out) = (w.shape()[0], w.shape()[1]);
    assert_eq!(x.len(), inp);
    (0..out)
        .map(|o| {
            let mut s = b.values()[o];
            for i in 0..inp {
                s += x[i] * w.values()[i * out + o];
            }
            s
        })
        .collect()
}

pub fn oracle_relu(v: Vec<f64>) -> Vec<f64> {
    v.into_iter().map(|x| x.max(0.0)).collect()
}

pub fn oracle_lstm(l: &LstmWeights, x: &[f64], h: &[f64], c: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let hid = h.len();
    let mut joined = x.to_vec();
    joined.extend_from_slice(h);
    let z = oracle_affine(&l.weight, &l.bias, &joined);
    let sig = |v: f64| 1.0 / (1.0 + (-v).exp());
    let mut h_new = vec![0.0; hid];
    let mut c_new = vec![0.0; hid];
    for k in 0..hid {
        let i = sig(z[k]);
        let f = sig(z[hid + k]);
        let g = z[2 * hid + k].tanh();
        let o = sig(z[3 * hid + k]);
        c_new[k] = f * c[k] + i * g;
        h_new[k] = o * c_new[k].tanh();
    }
    (h_new, c_new)
}

pub fn close(a: &[f64], b: &[f64], tol: f64) {
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(b) {
        assert!((x - y).abs() <= tol, "{a:?} vs {b:?}");
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Whole-scene reference: every pedestrian present at every step.
pub struct ReferenceScene<'a> {
    pub params: &'a ModelParams,
    pub h: Vec<Vec<f64>>,
    pub c: Vec<Vec<f64>>,
    pub r: Vec<Vec<Vec<f64>>>,
    pub cr: Vec<Vec<Vec<f64>>>,
}

impl<'a> ReferenceScene<'a> {
    pub fn new(params: &'a ModelParams, n: usize) -> Self {
        let hid = params.config().hidden_dim;
        Self {
            params,
            h: vec![vec![0.0; hid]; n],
            c: vec![vec![0.0; hid]; n],
            r: vec![vec![vec![0.0; hid]; n]; n],
            cr: vec![vec![vec![0.0; hid]; n]; n],
        }
    }

    /// One step; returns the predicted offsets and the attention rows.
    pub fn step(&mut self, pos: &[Point], nabs: &[Point]) -> (Vec<Point>, Option<Vec<Vec<f64>>>) {
        let p = self.params;
        let n = pos.len();
        let hid = p.config().hidden_dim;
        let strategy = p.config().strategy;
        let mut context = vec![vec![0.0; hid]; n];
        let mut alpha_out = None;
        if strategy != AttentionStrategy::None && n >= 2 {
            let mut alpha = vec![vec![0.0; n]; n];
            for i in 0..n {
                let mut logits = vec![f64::NEG_INFINITY; n];
                for j in 0..n {
                    if i == j {
                        continue;
                    }
                    let d = [pos[j][0] - pos[i][0], pos[j][1] - pos[i][1]];
                    let mut feat = Vec::new();
                    let w = match (&p.extra, strategy) {
                        (_, AttentionStrategy::SocialRelationship) => {
                            let e = oracle_relu(oracle_affine(
                                &p.rel_embed.weight,
                                &p.rel_embed.bias,
                                &d,
                            ));
                            let (r, cr) =
                                oracle_lstm(&p.rel_lstm, &e, &self.r[i][j], &self.cr[i][j]);
                            self.r[i][j] = r;
                            self.cr[i][j] = cr;
                            feat.extend_from_slice(&self.r[i][j]);
                            &p.attention
                        }
                        (StrategyParams::Soft { attention }, _) => attention,
                        (StrategyParams::Relative { attention, embed }, _) => {
                            feat = oracle_relu(oracle_affine(&embed.weight, &embed.bias, &d));
                            attention
                        }
                        _ => unreachable!("strategy parameters match the config"),
                    };
                    feat.extend_from_slice(&self.h[i]);
                    feat.extend_from_slice(&self.h[j]);
                    logits[j] = dot(&feat, w.values());
                }
                let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
                let total: f64 = exps.iter().sum();
                for j in 0..n {
                    alpha[i][j] = exps[j] / total;
                    for k in 0..hid {
                        context[i][k] += alpha[i][j] * self.h[j][k];
                    }
                }
            }
            alpha_out = Some(alpha);
        }
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let mut x = oracle_relu(oracle_affine(
                &p.pos_embed.weight,
                &p.pos_embed.bias,
                &nabs[i],
            ));
            x.extend_from_slice(&context[i]);
            let (h, c) = oracle_lstm(&p.motion_lstm, &x, &self.h[i], &self.c[i]);
            self.h[i] = h;
            self.c[i] = c;
            let y = oracle_affine(&p.output.weight, &p.output.bias, &self.h[i]);
            out.push([y[0], y[1]]);
        }
        (out, alpha_out)
    }
}
