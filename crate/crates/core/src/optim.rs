//! Adam optimizer with bias correction.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};

use crate::error::{CoreError, Result};
use crate::fmath;
use crate::matrix::Matrix;
use crate::params::{GradMap, ParamStore};

/// Per-parameter moment accumulators plus the shared step counter.
#[derive(Clone, Debug)]
pub struct AdamState {
    learning_rate: f64,
    beta1: f64,
    beta2: f64,
    epsilon: f64,
    step: u64,
    first_moment: BTreeMap<String, Matrix>,
    second_moment: BTreeMap<String, Matrix>,
}

impl AdamState {
    /// Standard defaults: beta1 = 0.9, beta2 = 0.999, epsilon = 1e-8.
    pub fn new(learning_rate: f64) -> Self {
        AdamState {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            step: 0,
            first_moment: BTreeMap::new(),
            second_moment: BTreeMap::new(),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn learning_rate(&self) -> f64 {
        self.learning_rate
    }
}

/// One Adam update over every parameter in the store.
///
/// The gradient map must cover every parameter with a matching shape;
/// missing names are an error rather than a silent skip. Deterministic:
/// parameters are visited in name order and no randomness is involved.
pub fn adam_step(params: &mut ParamStore, grads: &GradMap, state: &mut AdamState) -> Result<()> {
    for name in params.names() {
        let grad = grads
            .get(name)
            .ok_or_else(|| CoreError::MissingGradient {
                name: name.to_string(),
            })?;
        let shape = params.get(name)?.shape();
        if grad.shape() != shape {
            return Err(CoreError::ShapeMismatch {
                op: "adam_step",
                lhs: shape,
                rhs: grad.shape(),
            });
        }
        if !grad.is_finite() {
            return Err(CoreError::NonFinite { op: "adam_step" });
        }
    }

    state.step += 1;
    let t = state.step as f64;
    let bias1 = 1.0 - fmath::powf(state.beta1, t);
    let bias2 = 1.0 - fmath::powf(state.beta2, t);
    let (b1, b2, lr, eps) = (state.beta1, state.beta2, state.learning_rate, state.epsilon);

    let mut failed = false;
    params.apply(|name, value| {
        let grad = &grads[name];
        let m = state
            .first_moment
            .entry(name.to_string())
            .or_insert_with(|| Matrix::zeros(value.rows(), value.cols()));
        let v = state
            .second_moment
            .entry(name.to_string())
            .or_insert_with(|| Matrix::zeros(value.rows(), value.cols()));
        let (ms, vs, ps, gs) = (
            m.as_mut_slice(),
            v.as_mut_slice(),
            value.as_mut_slice(),
            grad.as_slice(),
        );
        for i in 0..ps.len() {
            ms[i] = b1 * ms[i] + (1.0 - b1) * gs[i];
            vs[i] = b2 * vs[i] + (1.0 - b2) * gs[i] * gs[i];
            let m_hat = ms[i] / bias1;
            let v_hat = vs[i] / bias2;
            ps[i] -= lr * m_hat / (fmath::sqrt(v_hat) + eps);
            if !ps[i].is_finite() {
                failed = true;
            }
        }
    });
    if failed {
        return Err(CoreError::NonFinite { op: "adam_step" });
    }
    Ok(())
}
