use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{AttentionStrategy, ConfigError, ModelConfig};
use crate::diff::{DiffError, Parameters, Tape, Tensor, Var};

/// `x · weight + bias` with `weight: [in×out]`, `bias: [1×out]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Affine {
    pub weight: Tensor,
    pub bias: Tensor,
}

impl Affine {
    fn zeros(input: usize, output: usize) -> Self {
        Self {
            weight: Tensor::zeros(vec![input, output]),
            bias: Tensor::zeros(vec![1, output]),
        }
    }

    fn count(input: usize, output: usize) -> usize {
        input * output + output
    }
}

/// Single-layer LSTM cell weights over the joined input `[x; h]`.
///
/// `weight: [(input+hidden) × 4·hidden]`, `bias: [1 × 4·hidden]`; gate
/// blocks along the columns are input, forget, candidate, output.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmWeights {
    pub weight: Tensor,
    pub bias: Tensor,
}

impl LstmWeights {
    fn zeros(input: usize, hidden: usize) -> Self {
        Self {
            weight: Tensor::zeros(vec![input + hidden, 4 * hidden]),
            bias: Tensor::zeros(vec![1, 4 * hidden]),
        }
    }

    fn count(input: usize, hidden: usize) -> usize {
        (input + hidden) * 4 * hidden + 4 * hidden
    }
}

/// Parameters that exist only for the ablation strategies.
#[derive(Debug, Clone, PartialEq)]
pub enum StrategyParams {
    Shared,
    Soft { attention: Tensor },
    Relative { attention: Tensor, embed: Affine },
}

/// Every learnable weight of the model.
///
/// | field         | role                                           |
/// |---------------|------------------------------------------------|
/// | `rel_embed`   | relative-position embedding, 2 → embed         |
/// | `rel_lstm`    | pairwise relationship LSTM                     |
/// | `pos_embed`   | Nabs position embedding, 2 → embed             |
/// | `motion_lstm` | per-pedestrian LSTM over `[e_i; H_i]`          |
/// | `attention`   | relationship attention row, 3·hidden → 1       |
/// | `output`      | hidden → next Nabs offset                      |
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    config: ModelConfig,
    pub rel_embed: Affine,
    pub rel_lstm: LstmWeights,
    pub pos_embed: Affine,
    pub motion_lstm: LstmWeights,
    pub attention: Tensor,
    pub output: Affine,
    pub extra: StrategyParams,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ParamsError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("tensor `{name}` has shape {found:?}, expected {expected:?}")]
    ShapeMismatch {
        name: String,
        expected: Vec<usize>,
        found: Vec<usize>,
    },
    #[error("tensor `{0}` is missing")]
    Missing(String),
    #[error("tensor `{0}` is not part of this configuration")]
    Unexpected(String),
    #[error(transparent)]
    Diff(#[from] DiffError),
}

/// Exact number of scalar parameters for `config`.
pub fn param_count(config: &ModelConfig) -> Result<usize, ConfigError> {
    config.validate()?;
    let (e, h) = (config.embed_dim, config.hidden_dim);
    let base = Affine::count(2, e)
        + LstmWeights::count(e, h)
        + Affine::count(2, e)
        + LstmWeights::count(e + h, h)
        + 3 * h
        + Affine::count(h, 2);
    let extra = match config.strategy {
        AttentionStrategy::None | AttentionStrategy::SocialRelationship => 0,
        AttentionStrategy::Soft => 2 * h,
        AttentionStrategy::Relative => e + 2 * h + Affine::count(2, e),
    };
    Ok(base + extra)
}

fn fill_uniform(t: &mut Tensor, bound: f64, rng: &mut ChaCha8Rng) {
    for v in t.values_mut() {
        *v = rng.random_range(-bound..bound);
    }
}

impl ModelParams {
    pub fn zeros(config: ModelConfig) -> Result<Self, ConfigError> {
        config.validate()?;
        let (e, h) = (config.embed_dim, config.hidden_dim);
        let extra = match config.strategy {
            AttentionStrategy::None | AttentionStrategy::SocialRelationship => {
                StrategyParams::Shared
            }
            AttentionStrategy::Soft => StrategyParams::Soft {
                attention: Tensor::zeros(vec![2 * h, 1]),
            },
            AttentionStrategy::Relative => StrategyParams::Relative {
                attention: Tensor::zeros(vec![e + 2 * h, 1]),
                embed: Affine::zeros(2, e),
            },
        };
        Ok(Self {
            config,
            rel_embed: Affine::zeros(2, e),
            rel_lstm: LstmWeights::zeros(e, h),
            pos_embed: Affine::zeros(2, e),
            motion_lstm: LstmWeights::zeros(e + h, h),
            attention: Tensor::zeros(vec![3 * h, 1]),
            output: Affine::zeros(h, 2),
            extra,
        })
    }

    /// Uniform `±1/√fan_in` initialization. Shared tensors are drawn from
    /// one stream and strategy-specific tensors from another, so models
    /// of different strategies built from the same seed agree on every
    /// shared weight.
    pub fn init(config: ModelConfig, seed: u64) -> Result<Self, ConfigError> {
        let mut p = Self::zeros(config)?;
        let (e, h) = (config.embed_dim as f64, config.hidden_dim as f64);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let affine = |a: &mut Affine, fan_in: f64, rng: &mut ChaCha8Rng| {
            let b = 1.0 / libm::sqrt(fan_in);
            fill_uniform(&mut a.weight, b, rng);
            fill_uniform(&mut a.bias, b, rng);
        };
        let lstm = |l: &mut LstmWeights, rng: &mut ChaCha8Rng| {
            let b = 1.0 / libm::sqrt(h);
            fill_uniform(&mut l.weight, b, rng);
            fill_uniform(&mut l.bias, b, rng);
        };
        affine(&mut p.rel_embed, 2.0, &mut rng);
        lstm(&mut p.rel_lstm, &mut rng);
        affine(&mut p.pos_embed, 2.0, &mut rng);
        lstm(&mut p.motion_lstm, &mut rng);
        fill_uniform(&mut p.attention, 1.0 / libm::sqrt(3.0 * h), &mut rng);
        affine(&mut p.output, h, &mut rng);

        let mut extra_rng = ChaCha8Rng::seed_from_u64(seed);
        extra_rng.set_stream(1);
        match &mut p.extra {
            StrategyParams::Shared => {}
            StrategyParams::Soft { attention } => {
                fill_uniform(attention, 1.0 / libm::sqrt(2.0 * h), &mut extra_rng)
            }
            StrategyParams::Relative { attention, embed } => {
                fill_uniform(attention, 1.0 / libm::sqrt(e + 2.0 * h), &mut extra_rng);
                affine(embed, 2.0, &mut extra_rng);
            }
        }
        Ok(p)
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn len(&self) -> usize {
        let mut n = 0;
        self.visit(&mut |_, t| n += t.len());
        n
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn names(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        self.visit_static(&mut |name, _| out.push(name));
        out
    }

    /// Rebuilds parameters from named tensors, checking every shape.
    pub fn from_named<'a, I>(config: ModelConfig, tensors: I) -> Result<Self, ParamsError>
    where
        I: IntoIterator<Item = (&'a str, &'a Tensor)>,
    {
        let mut p = Self::zeros(config)?;
        let supplied: Vec<(&str, &Tensor)> = tensors.into_iter().collect();
        let names = p.names();
        if let Some((extra, _)) = supplied.iter().find(|(n, _)| !names.contains(n)) {
            return Err(ParamsError::Unexpected((*extra).into()));
        }
        let mut failure = None;
        p.visit_mut(&mut |name, slot| {
            if failure.is_some() {
                return;
            }
            match supplied.iter().find(|(n, _)| *n == name) {
                None => failure = Some(ParamsError::Missing(name.into())),
                Some((_, t)) if t.shape() != slot.shape() => {
                    failure = Some(ParamsError::ShapeMismatch {
                        name: name.into(),
                        expected: slot.shape().to_vec(),
                        found: t.shape().to_vec(),
                    })
                }
                Some((_, t)) => {
                    *slot = Tensor::new(t.shape().to_vec(), t.values().to_vec())
                        .expect("validated tensor")
                }
            }
        });
        match failure {
            Some(e) => Err(e),
            None => Ok(p),
        }
    }

    fn visit_static(&self, f: &mut dyn FnMut(&'static str, &Tensor)) {
        f("rel_embed.weight", &self.rel_embed.weight);
        f("rel_embed.bias", &self.rel_embed.bias);
        f("rel_lstm.weight", &self.rel_lstm.weight);
        f("rel_lstm.bias", &self.rel_lstm.bias);
        f("pos_embed.weight", &self.pos_embed.weight);
        f("pos_embed.bias", &self.pos_embed.bias);
        f("motion_lstm.weight", &self.motion_lstm.weight);
        f("motion_lstm.bias", &self.motion_lstm.bias);
        f("attention.weight", &self.attention);
        f("output.weight", &self.output.weight);
        f("output.bias", &self.output.bias);
        match &self.extra {
            StrategyParams::Shared => {}
            StrategyParams::Soft { attention } => f("sa_attention.weight", attention),
            StrategyParams::Relative { attention, embed } => {
                f("ra_attention.weight", attention);
                f("ra_embed.weight", &embed.weight);
                f("ra_embed.bias", &embed.bias);
            }
        }
    }

    /// Records every tensor on `tape`, as trainable leaves or constants.
    pub fn bind(&self, tape: &mut Tape, trainable: bool) -> BoundParams {
        let mut rec = |t: &Tensor| {
            if trainable {
                tape.leaf(t)
            } else {
                tape.constant(t)
            }
        };
        let rel_embed = (rec(&self.rel_embed.weight), rec(&self.rel_embed.bias));
        let rel_lstm = (rec(&self.rel_lstm.weight), rec(&self.rel_lstm.bias));
        let pos_embed = (rec(&self.pos_embed.weight), rec(&self.pos_embed.bias));
        let motion_lstm = (rec(&self.motion_lstm.weight), rec(&self.motion_lstm.bias));
        let attention = rec(&self.attention);
        let output = (rec(&self.output.weight), rec(&self.output.bias));
        let (soft_attention, relative) = match &self.extra {
            StrategyParams::Shared => (None, None),
            StrategyParams::Soft { attention } => (Some(rec(attention)), None),
            StrategyParams::Relative { attention, embed } => (
                None,
                Some((rec(attention), (rec(&embed.weight), rec(&embed.bias)))),
            ),
        };
        BoundParams {
            config: self.config,
            rel_embed,
            rel_lstm,
            pos_embed,
            motion_lstm,
            attention,
            output,
            soft_attention,
            relative,
        }
    }

    /// Adds the tape gradients of a trainable binding into each tensor's
    /// gradient slot. Tensors the loss never reached get a zero gradient.
    pub fn collect_grads(&mut self, tape: &Tape, bound: &BoundParams) -> Result<(), DiffError> {
        let vars = bound.vars();
        let mut idx = 0;
        let mut result = Ok(());
        self.visit_mut(&mut |_, t| {
            let v = vars[idx];
            idx += 1;
            if t.grad().is_none() {
                t.zero_grad();
            }
            if let Some(g) = tape.grad(v) {
                if let Err(e) = t.accumulate_grad(g) {
                    result = Err(e);
                }
            }
        });
        result
    }
}

impl Parameters for ModelParams {
    fn visit(&self, f: &mut dyn FnMut(&str, &Tensor)) {
        self.visit_static(&mut |n, t| f(n, t));
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&str, &mut Tensor)) {
        f("rel_embed.weight", &mut self.rel_embed.weight);
        f("rel_embed.bias", &mut self.rel_embed.bias);
        f("rel_lstm.weight", &mut self.rel_lstm.weight);
        f("rel_lstm.bias", &mut self.rel_lstm.bias);
        f("pos_embed.weight", &mut self.pos_embed.weight);
        f("pos_embed.bias", &mut self.pos_embed.bias);
        f("motion_lstm.weight", &mut self.motion_lstm.weight);
        f("motion_lstm.bias", &mut self.motion_lstm.bias);
        f("attention.weight", &mut self.attention);
        f("output.weight", &mut self.output.weight);
        f("output.bias", &mut self.output.bias);
        match &mut self.extra {
            StrategyParams::Shared => {}
            StrategyParams::Soft { attention } => f("sa_attention.weight", attention),
            StrategyParams::Relative { attention, embed } => {
                f("ra_attention.weight", attention);
                f("ra_embed.weight", &mut embed.weight);
                f("ra_embed.bias", &mut embed.bias);
            }
        }
    }
}

/// Tape handles for one forward pass; `(weight, bias)` pairs.
#[derive(Debug, Clone)]
pub struct BoundParams {
    pub config: ModelConfig,
    pub rel_embed: (Var, Var),
    pub rel_lstm: (Var, Var),
    pub pos_embed: (Var, Var),
    pub motion_lstm: (Var, Var),
    pub attention: Var,
    pub output: (Var, Var),
    pub soft_attention: Option<Var>,
    pub relative: Option<(Var, (Var, Var))>,
}

impl BoundParams {
    /// Handles in the same order as [`Parameters::visit`].
    pub fn vars(&self) -> Vec<Var> {
        let mut v = vec![
            self.rel_embed.0,
            self.rel_embed.1,
            self.rel_lstm.0,
            self.rel_lstm.1,
            self.pos_embed.0,
            self.pos_embed.1,
            self.motion_lstm.0,
            self.motion_lstm.1,
            self.attention,
            self.output.0,
            self.output.1,
        ];
        if let Some(a) = self.soft_attention {
            v.push(a);
        }
        if let Some((a, (w, b))) = self.relative {
            v.extend([a, w, b]);
        }
        v
    }
}
