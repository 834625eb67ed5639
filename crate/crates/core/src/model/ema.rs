use super::ModelParams;
use crate::error::{shape_err, Error, Result};

/// Exponential moving average of student parameters (the teacher).
#[derive(Debug, Clone, PartialEq)]
pub struct EmaShadow {
    pub params: ModelParams,
    pub decay: f64,
}

impl EmaShadow {
    /// Starts the shadow as an exact copy of `student`.
    pub fn new(student: &ModelParams, decay: f64) -> Result<Self> {
        if !(decay > 0.0 && decay < 1.0) {
            return Err(Error::Config(alloc::format!("EMA decay {decay} outside (0, 1)")));
        }
        Ok(Self {
            params: student.clone(),
            decay,
        })
    }

    /// `ξ ← α·ξ + (1−α)·θ` for every parameter.
    pub fn update(&mut self, student: &ModelParams) -> Result<()> {
        if !self.params.same_shape(student) {
            return Err(shape_err("ema_update", "student shaped like shadow", "different shapes"));
        }
        let a = self.decay;
        for (xi, theta) in self.params.tensors_mut().into_iter().zip(student.tensors()) {
            for (x, t) in xi.iter_mut().zip(theta) {
                *x = a * *x + (1.0 - a) * t;
            }
        }
        Ok(())
    }
}

/// Functional form of [`EmaShadow::update`].
pub fn ema_update(shadow: &EmaShadow, student: &ModelParams) -> Result<EmaShadow> {
    let mut s = shadow.clone();
    s.update(student)?;
    Ok(s)
}
