use alloc::format;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{shape_err, Error, Result};
use crate::math;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 3e-4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Adam optimizer state over an ordered list of flat parameter tensors.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    step: u64,
    first: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
}

impl AdamState {
    pub fn new(config: AdamConfig, sizes: &[usize]) -> Self {
        Self {
            config,
            step: 0,
            first: sizes.iter().map(|&n| vec![0.0; n]).collect(),
            second: sizes.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// One bias-corrected Adam update.
    ///
    /// Tensors with `trainable[i] == false` are left untouched, moments included.
    /// Gradients are validated before anything is modified, so a non-finite
    /// gradient leaves both parameters and state unchanged.
    pub fn step(
        &mut self,
        params: &mut [&mut [f64]],
        grads: &[&[f64]],
        names: &[&str],
        trainable: &[bool],
    ) -> Result<()> {
        let n = self.first.len();
        if params.len() != n || grads.len() != n || names.len() != n || trainable.len() != n {
            return Err(shape_err("adam_step", format!("{n} tensors"), format!("{}", params.len())));
        }
        for i in 0..n {
            if params[i].len() != self.first[i].len() || grads[i].len() != self.first[i].len() {
                return Err(shape_err(
                    "adam_step",
                    format!("{} values in `{}`", self.first[i].len(), names[i]),
                    format!("{}/{}", params[i].len(), grads[i].len()),
                ));
            }
            if trainable[i] && grads[i].iter().any(|g| !g.is_finite()) {
                return Err(Error::NonFinite {
                    param: names[i].to_string(),
                });
            }
        }
        self.step += 1;
        let AdamConfig { lr, beta1, beta2, eps } = self.config;
        let c1 = 1.0 - math::powi(beta1, self.step as i32);
        let c2 = 1.0 - math::powi(beta2, self.step as i32);
        for i in 0..n {
            if !trainable[i] {
                continue;
            }
            let (m, v) = (&mut self.first[i], &mut self.second[i]);
            for (((p, &g), m), v) in params[i].iter_mut().zip(grads[i]).zip(m.iter_mut()).zip(v.iter_mut()) {
                *m = beta1 * *m + (1.0 - beta1) * g;
                *v = beta2 * *v + (1.0 - beta2) * g * g;
                let m_hat = *m / c1;
                let v_hat = *v / c2;
                *p -= lr * m_hat / (math::sqrt(v_hat) + eps);
            }
        }
        Ok(())
    }
}
