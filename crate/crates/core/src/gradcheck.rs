//! Central finite-difference verification of analytic gradients.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{CoreError, Result};
use crate::fmath;
use crate::graph::{Graph, NodeId};
use crate::params::ParamStore;

#[derive(Clone, Debug)]
pub struct GradCheckConfig {
    /// Central difference step.
    pub step: f64,
    /// A parameter passes when its max relative error is strictly below this.
    pub tolerance: f64,
    /// Coordinates sampled per parameter (all of them if the parameter is
    /// smaller).
    pub coords_per_param: usize,
    pub seed: u64,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        GradCheckConfig {
            step: 1e-5,
            tolerance: 1e-4,
            coords_per_param: 20,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ParamCheck {
    pub name: String,
    pub coords_checked: usize,
    pub max_rel_err: f64,
    pub pass: bool,
}

#[derive(Clone, Debug)]
pub struct GradCheckReport {
    pub checks: Vec<ParamCheck>,
}

impl GradCheckReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn worst(&self) -> f64 {
        self.checks.iter().map(|c| c.max_rel_err).fold(0.0, f64::max)
    }
}

/// Relative error with a unit floor, so near-zero gradients are compared
/// absolutely: |a - b| / max(1, |a|, |b|).
fn rel_err(a: f64, b: f64) -> f64 {
    fmath::abs(a - b) / fmath::abs(a).max(fmath::abs(b)).max(1.0)
}

/// Compare the analytic gradient of `build`'s scalar output against central
/// finite differences on a random subsample of coordinates per parameter.
///
/// `build` must construct the complete forward graph from the given store so
/// that perturbed evaluations see the perturbed values.
pub fn finite_diff_check<F>(
    build: F,
    params: &ParamStore,
    config: &GradCheckConfig,
) -> Result<GradCheckReport>
where
    F: Fn(&ParamStore) -> Result<(Graph, NodeId)>,
{
    if !(config.step > 0.0) {
        return Err(CoreError::InvalidConfig {
            what: String::from("finite difference step must be > 0"),
        });
    }
    if config.coords_per_param == 0 {
        return Err(CoreError::InvalidConfig {
            what: String::from("coords_per_param must be >= 1"),
        });
    }

    let (mut graph, root) = build(params)?;
    graph.scalar_value(root)?;
    let analytic = graph.backward(root)?;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut checks = Vec::new();

    for (name, value) in params.iter() {
        let grad = analytic
            .get(name)
            .ok_or_else(|| CoreError::MissingGradient {
                name: name.to_string(),
            })?;
        let total = value.as_slice().len();
        let mut coords: Vec<usize> = (0..total).collect();
        coords.shuffle(&mut rng);
        coords.truncate(config.coords_per_param.min(total));

        let cols = value.cols();
        let mut max_err = 0.0f64;
        for &flat in &coords {
            let (row, col) = (flat / cols, flat % cols);
            let probe = |delta: f64| -> Result<f64> {
                let mut perturbed = params.clone();
                let mut v = value.clone();
                v.set(row, col, v.get(row, col) + delta);
                perturbed.set(name, v)?;
                let (g, r) = build(&perturbed)?;
                g.scalar_value(r)
            };
            let plus = probe(config.step).map_err(|e| match e {
                CoreError::NonFinite { .. } => CoreError::NonFiniteProbe {
                    name: name.to_string(),
                    row,
                    col,
                },
                other => other,
            })?;
            let minus = probe(-config.step).map_err(|e| match e {
                CoreError::NonFinite { .. } => CoreError::NonFiniteProbe {
                    name: name.to_string(),
                    row,
                    col,
                },
                other => other,
            })?;
            let fd = (plus - minus) / (2.0 * config.step);
            if !fd.is_finite() {
                return Err(CoreError::NonFiniteProbe {
                    name: name.to_string(),
                    row,
                    col,
                });
            }
            max_err = max_err.max(rel_err(grad.get(row, col), fd));
        }

        checks.push(ParamCheck {
            name: name.to_string(),
            coords_checked: coords.len(),
            max_rel_err: max_err,
            pass: max_err < config.tolerance,
        });
    }

    Ok(GradCheckReport { checks })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::Matrix;

    fn quadratic_store() -> ParamStore {
        let mut s = ParamStore::new();
        s.register("p", Matrix::from_vec(1, 2, alloc::vec![1.0, 2.0]).unwrap())
            .unwrap();
        s
    }

    fn quadratic(params: &ParamStore) -> Result<(Graph, NodeId)> {
        let mut g = Graph::new();
        let p = g.param("p", params.get("p")?.clone());
        let sq = g.mul(p, p)?;
        let loss = g.sum_all(sq)?;
        Ok((g, loss))
    }

    #[test]
    fn quadratic_is_exact_up_to_rounding() {
        let params = quadratic_store();
        let config = GradCheckConfig {
            tolerance: 1e-8,
            ..GradCheckConfig::default()
        };
        let report = finite_diff_check(quadratic, &params, &config).unwrap();
        assert!(report.all_pass(), "worst error {}", report.worst());
    }

    #[test]
    fn zero_step_is_rejected() {
        let params = quadratic_store();
        let config = GradCheckConfig {
            step: 0.0,
            ..GradCheckConfig::default()
        };
        assert!(finite_diff_check(quadratic, &params, &config).is_err());
    }

    #[test]
    fn impossible_tolerance_fails() {
        let params = quadratic_store();
        let config = GradCheckConfig {
            tolerance: 0.0,
            ..GradCheckConfig::default()
        };
        let report = finite_diff_check(quadratic, &params, &config).unwrap();
        assert!(!report.all_pass());
    }
}
