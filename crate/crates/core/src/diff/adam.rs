use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use super::{DiffError, Tensor};

/// A fixed, ordered collection of named parameter tensors.
pub trait Parameters {
    fn visit(&self, f: &mut dyn FnMut(&str, &Tensor));
    fn visit_mut(&mut self, f: &mut dyn FnMut(&str, &mut Tensor));

    fn zero_grads(&mut self) {
        self.visit_mut(&mut |_, t| t.zero_grad());
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn with_learning_rate(learning_rate: f64) -> Self {
        Self {
            learning_rate,
            ..Self::default()
        }
    }
}

/// Adam with bias correction. Moments are created as zeros on the first
/// step, one pair per visited parameter, in visiting order.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub config: AdamConfig,
    step: u64,
    first: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(config: AdamConfig) -> Self {
        Self {
            config,
            step: 0,
            first: Vec::new(),
            second: Vec::new(),
        }
    }

    /// Restores a saved optimizer. `first` and `second` must be parallel.
    pub fn from_parts(
        config: AdamConfig,
        step: u64,
        first: Vec<Vec<f64>>,
        second: Vec<Vec<f64>>,
    ) -> Self {
        assert_eq!(first.len(), second.len());
        Self {
            config,
            step,
            first,
            second,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn first_moments(&self) -> &[Vec<f64>] {
        &self.first
    }

    pub fn second_moments(&self) -> &[Vec<f64>] {
        &self.second
    }

    /// Applies one update in place. Gradients are left untouched. Fails
    /// without mutating anything if a parameter lacks a gradient.
    pub fn step<P: Parameters + ?Sized>(&mut self, params: &mut P) -> Result<(), DiffError> {
        let mut missing: Option<String> = None;
        let mut sizes = Vec::new();
        params.visit(&mut |name, t| {
            if t.grad().is_none() && missing.is_none() {
                missing = Some(name.to_string());
            }
            sizes.push(t.len());
        });
        if let Some(name) = missing {
            return Err(DiffError::MissingGradient { name });
        }
        if self.first.is_empty() {
            self.first = sizes.iter().map(|&n| vec![0.0; n]).collect();
            self.second = sizes.iter().map(|&n| vec![0.0; n]).collect();
        }
        let layout_ok = self.first.len() == sizes.len()
            && self.first.iter().zip(&sizes).all(|(m, &n)| m.len() == n);
        if !layout_ok {
            return Err(DiffError::ShapeMismatch {
                op: "adam",
                left: self.first.iter().map(Vec::len).collect(),
                right: sizes,
            });
        }

        self.step += 1;
        let AdamConfig {
            learning_rate,
            beta1,
            beta2,
            epsilon,
        } = self.config;
        let t = self.step as i32;
        let correct1 = 1.0 - libm::pow(beta1, t as f64);
        let correct2 = 1.0 - libm::pow(beta2, t as f64);
        let mut idx = 0;
        let (first, second) = (&mut self.first, &mut self.second);
        params.visit_mut(&mut |_, tensor| {
            let grad = tensor.grad().expect("checked above").to_vec();
            let m = &mut first[idx];
            let v = &mut second[idx];
            for (k, w) in tensor.values_mut().iter_mut().enumerate() {
                let g = grad[k];
                m[k] = beta1 * m[k] + (1.0 - beta1) * g;
                v[k] = beta2 * v[k] + (1.0 - beta2) * g * g;
                let m_hat = m[k] / correct1;
                let v_hat = v[k] / correct2;
                *w -= learning_rate * m_hat / (libm::sqrt(v_hat) + epsilon);
            }
            idx += 1;
        });
        Ok(())
    }
}

/// Rescales all gradients so their global L2 norm is at most `max_norm`.
/// Returns the norm before clipping.
pub fn clip_grad_norm<P: Parameters + ?Sized>(params: &mut P, max_norm: f64) -> f64 {
    let mut sq = 0.0;
    params.visit(&mut |_, t| {
        if let Some(g) = t.grad() {
            sq += g.iter().map(|v| v * v).sum::<f64>();
        }
    });
    let norm = libm::sqrt(sq);
    if norm > max_norm && norm > 0.0 {
        let factor = max_norm / norm;
        params.visit_mut(&mut |_, t| {
            if let Some(g) = t.grad_mut() {
                g.iter_mut().for_each(|v| *v *= factor);
            }
        });
    }
    norm
}
