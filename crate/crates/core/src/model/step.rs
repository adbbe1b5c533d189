//! Single-time-step model operations over a scene.
//!
//! All ops are batched by rows: a `[P×2]` displacement input yields a
//! `[P×embed]` embedding, and so on. A single pedestrian or pair is the
//! one-row case.

use alloc::vec;
use alloc::vec::Vec;

use super::{AttentionStrategy, BoundParams, ModelError};
use crate::diff::{Tape, Var};

/// Per-pedestrian motion states and per-ordered-pair relationship states.
///
/// Pair `(i, j)` lives in row `i·N + j` of the relationship matrices and is
/// distinct from `(j, i)`. Diagonal rows are never updated. Rows of absent
/// pedestrians, and of pairs with an absent member, are carried over
/// unchanged.
#[derive(Debug, Clone)]
pub struct SceneState {
    ped_ids: Vec<u64>,
    present: Vec<bool>,
    hidden: usize,
    pub h: Var,
    pub c: Var,
    pub r: Var,
    pub cr: Var,
}

impl SceneState {
    /// Zero states for `ped_ids`, all marked present.
    pub fn new(tape: &mut Tape, ped_ids: Vec<u64>, hidden: usize) -> Result<Self, ModelError> {
        let n = ped_ids.len();
        if n == 0 {
            return Err(ModelError::EmptyScene);
        }
        let h = tape.zeros(vec![n, hidden])?;
        let r = tape.zeros(vec![n * n, hidden])?;
        Ok(Self {
            present: vec![true; n],
            ped_ids,
            hidden,
            h,
            c: h,
            r,
            cr: r,
        })
    }

    pub fn ped_ids(&self) -> &[u64] {
        &self.ped_ids
    }

    pub fn len(&self) -> usize {
        self.ped_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ped_ids.is_empty()
    }

    pub fn present(&self) -> &[bool] {
        &self.present
    }

    pub fn set_present(&mut self, present: Vec<bool>) -> Result<(), ModelError> {
        if present.len() != self.ped_ids.len() {
            return Err(ModelError::PresenceLength {
                expected: self.ped_ids.len(),
                found: present.len(),
            });
        }
        self.present = present;
        Ok(())
    }

    pub fn present_indices(&self) -> Vec<usize> {
        (0..self.present.len())
            .filter(|&i| self.present[i])
            .collect()
    }

    pub fn pair_row(&self, i: usize, j: usize) -> Result<usize, ModelError> {
        let n = self.ped_ids.len();
        if i >= n || j >= n || i == j {
            return Err(ModelError::UnknownPair { i, j });
        }
        Ok(i * n + j)
    }

    /// Current relationship hidden state of ordered pair `(i, j)`.
    pub fn relation<'t>(
        &self,
        tape: &'t Tape,
        i: usize,
        j: usize,
    ) -> Result<&'t [f64], ModelError> {
        let row = self.pair_row(i, j)?;
        Ok(&tape.value(self.r)[row * self.hidden..(row + 1) * self.hidden])
    }

    /// Current motion hidden state of pedestrian `i`.
    pub fn motion<'t>(&self, tape: &'t Tape, i: usize) -> &'t [f64] {
        &tape.value(self.h)[i * self.hidden..(i + 1) * self.hidden]
    }
}

/// Replaces `rows` of `old` by the rows of `new`, in order.
fn merge_rows(tape: &mut Tape, old: Var, new: Var, rows: &[usize]) -> Result<Var, ModelError> {
    let total = tape.shape(old)[0];
    let mut map: Vec<usize> = (0..total).collect();
    for (k, &r) in rows.iter().enumerate() {
        map[r] = total + k;
    }
    let joined = tape.concat(&[old, new], 0)?;
    Ok(tape.gather_rows(joined, &map)?)
}

/// Ordered pairs `(a, b)`, `a ≠ b`, over `m` local indices, row-major.
fn local_pairs(m: usize) -> (Vec<usize>, Vec<usize>) {
    let mut from = Vec::with_capacity(m * m.saturating_sub(1));
    let mut to = Vec::with_capacity(m * m.saturating_sub(1));
    for a in 0..m {
        for b in 0..m {
            if a != b {
                from.push(a);
                to.push(b);
            }
        }
    }
    (from, to)
}

/// Output of one scene step.
#[derive(Debug, Clone)]
pub struct StepOutput {
    /// Scene indices of the pedestrians that took part, in row order.
    pub present: Vec<usize>,
    /// `[m×2]` predicted Nabs position for the next frame.
    pub offsets: Var,
    /// `[m×m]` attention weights (row `i` over neighbors `j`), when the
    /// strategy attends and at least two pedestrians are present.
    pub attention: Option<Var>,
    /// `[m×hidden]` social context.
    pub context: Var,
}

impl BoundParams {
    fn affine(&self, tape: &mut Tape, (w, b): (Var, Var), x: Var) -> Result<Var, ModelError> {
        let rows = tape.shape(x)[0];
        let xw = tape.matmul(x, w)?;
        let bias = tape.repeat_rows(b, rows)?;
        Ok(tape.add(xw, bias)?)
    }

    /// LSTM cell over `x: [P×in]` with states `h, c: [P×hidden]`.
    pub fn lstm_cell(
        &self,
        tape: &mut Tape,
        weights: (Var, Var),
        x: Var,
        h: Var,
        c: Var,
    ) -> Result<(Var, Var), ModelError> {
        let hid = self.config.hidden_dim;
        let joined = tape.concat(&[x, h], 1)?;
        let z = self.affine(tape, weights, joined)?;
        let zi = tape.narrow(z, 1, 0, hid)?;
        let zf = tape.narrow(z, 1, hid, hid)?;
        let zg = tape.narrow(z, 1, 2 * hid, hid)?;
        let zo = tape.narrow(z, 1, 3 * hid, hid)?;
        let i = tape.sigmoid(zi)?;
        let f = tape.sigmoid(zf)?;
        let g = tape.tanh(zg)?;
        let o = tape.sigmoid(zo)?;
        let keep = tape.mul(f, c)?;
        let write = tape.mul(i, g)?;
        let c_new = tape.add(keep, write)?;
        let squashed = tape.tanh(c_new)?;
        let h_new = tape.mul(o, squashed)?;
        Ok((h_new, c_new))
    }

    /// `ReLU(W_re · (p_j − p_i) + b)` for displacements `[P×2]`.
    pub fn embed_relative(&self, tape: &mut Tape, displacement: Var) -> Result<Var, ModelError> {
        let a = self.affine(tape, self.rel_embed, displacement)?;
        Ok(tape.relu(a)?)
    }

    /// One relationship-LSTM step for a batch of pairs.
    pub fn relation_step(
        &self,
        tape: &mut Tape,
        r: Var,
        cr: Var,
        e: Var,
    ) -> Result<(Var, Var), ModelError> {
        self.lstm_cell(tape, self.rel_lstm, e, r, cr)
    }

    /// Relative-position embedding used only by the RA strategy.
    pub fn embed_relative_ra(&self, tape: &mut Tape, displacement: Var) -> Result<Var, ModelError> {
        let (_, embed) = self.relative.ok_or(ModelError::MissingStrategyParams(
            AttentionStrategy::Relative,
        ))?;
        let a = self.affine(tape, embed, displacement)?;
        Ok(tape.relu(a)?)
    }

    /// Unnormalized attention score per pair, `[P×1]`; `None` for the
    /// no-attention strategy.
    pub fn attention_logits(
        &self,
        tape: &mut Tape,
        strategy: AttentionStrategy,
        r: Option<Var>,
        h_i: Var,
        h_j: Var,
        e_rel: Option<Var>,
    ) -> Result<Option<Var>, ModelError> {
        let (features, weight) = match strategy {
            AttentionStrategy::None => return Ok(None),
            AttentionStrategy::SocialRelationship => {
                let r = r.ok_or(ModelError::MissingInput("relationship state"))?;
                (tape.concat(&[r, h_i, h_j], 1)?, self.attention)
            }
            AttentionStrategy::Soft => {
                let w = self
                    .soft_attention
                    .ok_or(ModelError::MissingStrategyParams(strategy))?;
                (tape.concat(&[h_i, h_j], 1)?, w)
            }
            AttentionStrategy::Relative => {
                let (w, _) = self
                    .relative
                    .ok_or(ModelError::MissingStrategyParams(strategy))?;
                let e = e_rel.ok_or(ModelError::MissingInput("relative embedding"))?;
                (tape.concat(&[e, h_i, h_j], 1)?, w)
            }
        };
        Ok(Some(tape.matmul(features, weight)?))
    }

    /// Softmax of `[m×m]` logits over each row's neighbor set.
    pub fn attention_weights(
        &self,
        tape: &mut Tape,
        logits: Var,
        neighbors: &[bool],
    ) -> Result<Var, ModelError> {
        Ok(tape.masked_softmax(logits, neighbors)?)
    }

    /// `H_i = Σ_j α_ij h_j` for `weights: [m×m]`, `h: [m×hidden]`; zeros
    /// when there are no weights.
    pub fn social_context(
        &self,
        tape: &mut Tape,
        weights: Option<Var>,
        h: Var,
    ) -> Result<Var, ModelError> {
        match weights {
            Some(w) => Ok(tape.aggregate(w, h)?),
            None => {
                let rows = tape.shape(h)[0];
                Ok(tape.zeros(vec![rows, self.config.hidden_dim])?)
            }
        }
    }

    /// `ReLU(W_e · (Δx, Δy) + b)` for Nabs positions `[m×2]`.
    pub fn embed_position(&self, tape: &mut Tape, nabs: Var) -> Result<Var, ModelError> {
        let a = self.affine(tape, self.pos_embed, nabs)?;
        Ok(tape.relu(a)?)
    }

    /// Motion LSTM over the joined input `[e_i; H_i]`.
    pub fn motion_step(
        &self,
        tape: &mut Tape,
        h: Var,
        c: Var,
        e: Var,
        context: Var,
    ) -> Result<(Var, Var), ModelError> {
        let x = tape.concat(&[e, context], 1)?;
        self.lstm_cell(tape, self.motion_lstm, x, h, c)
    }

    /// Next-frame Nabs position, `W_p · h + b`.
    pub fn predict_offset(&self, tape: &mut Tape, h: Var) -> Result<Var, ModelError> {
        self.affine(tape, self.output, h)
    }

    /// Advances `state` by one frame. `positions` and `nabs` are `[m×2]`
    /// rows for the present pedestrians, in scene order.
    ///
    /// Order within the step: relationship update for every ordered pair,
    /// attention, social context, motion update, output.
    pub fn advance(
        &self,
        tape: &mut Tape,
        state: &mut SceneState,
        positions: Var,
        nabs: Var,
    ) -> Result<StepOutput, ModelError> {
        let strategy = self.config.strategy;
        let hid = self.config.hidden_dim;
        let present = state.present_indices();
        let m = present.len();
        if m == 0 {
            return Err(ModelError::EmptyScene);
        }
        for v in [positions, nabs] {
            if tape.shape(v) != [m, 2] {
                return Err(ModelError::InputShape {
                    expected: vec![m, 2],
                    found: tape.shape(v).to_vec(),
                });
            }
        }
        let n = state.len();
        let h_prev = tape.gather_rows(state.h, &present)?;
        let c_prev = tape.gather_rows(state.c, &present)?;

        let social = strategy != AttentionStrategy::None && m >= 2;
        let (attention, context) = if social {
            let (from, to) = local_pairs(m);
            let pi = tape.gather_rows(positions, &from)?;
            let pj = tape.gather_rows(positions, &to)?;
            let displacement = tape.sub(pj, pi)?;

            let mut r_now = None;
            if strategy.uses_relationship() {
                let rows: Vec<usize> = from
                    .iter()
                    .zip(&to)
                    .map(|(&a, &b)| present[a] * n + present[b])
                    .collect();
                let r_prev = tape.gather_rows(state.r, &rows)?;
                let cr_prev = tape.gather_rows(state.cr, &rows)?;
                let e = self.embed_relative(tape, displacement)?;
                let (r, cr) = self.relation_step(tape, r_prev, cr_prev, e)?;
                state.r = merge_rows(tape, state.r, r, &rows)?;
                state.cr = merge_rows(tape, state.cr, cr, &rows)?;
                r_now = Some(r);
            }
            let e_rel = if strategy == AttentionStrategy::Relative {
                Some(self.embed_relative_ra(tape, displacement)?)
            } else {
                None
            };
            let h_i = tape.gather_rows(h_prev, &from)?;
            let h_j = tape.gather_rows(h_prev, &to)?;
            let logits = self
                .attention_logits(tape, strategy, r_now, h_i, h_j, e_rel)?
                .expect("attending strategy");

            // Lay the pair logits out as an [m×m] matrix; the diagonal
            // points at a masked zero.
            let pairs = from.len();
            let pad = tape.zeros(vec![1, 1])?;
            let padded = tape.concat(&[logits, pad], 0)?;
            let mut layout = Vec::with_capacity(m * m);
            let mut mask = Vec::with_capacity(m * m);
            let mut k = 0;
            for a in 0..m {
                for b in 0..m {
                    if a == b {
                        layout.push(pairs);
                        mask.push(false);
                    } else {
                        layout.push(k);
                        mask.push(true);
                        k += 1;
                    }
                }
            }
            let flat = tape.gather_rows(padded, &layout)?;
            let square = tape.reshape(flat, vec![m, m])?;
            let alpha = self.attention_weights(tape, square, &mask)?;
            let context = self.social_context(tape, Some(alpha), h_prev)?;
            (Some(alpha), context)
        } else {
            (None, self.social_context(tape, None, h_prev)?)
        };

        let e = self.embed_position(tape, nabs)?;
        let (h, c) = self.motion_step(tape, h_prev, c_prev, e, context)?;
        state.h = merge_rows(tape, state.h, h, &present)?;
        state.c = merge_rows(tape, state.c, c, &present)?;
        debug_assert_eq!(tape.shape(h), [m, hid]);
        let offsets = self.predict_offset(tape, h)?;
        Ok(StepOutput {
            present,
            offsets,
            attention,
            context,
        })
    }
}
