//! The network: per-view encoder/decoder MLPs, indicator-weighted fusion of
//! view-specific representations, and a single sigmoid classification layer.
//!
//! Encoders map `m_v -> hidden... -> d` with ReLU on hidden layers and a
//! linear output (the representation stays unbounded so cosine contrast keeps
//! its full range); decoders mirror the encoder widths back to `m_v`.
//! Weights use uniform Kaiming-style fan-in init, biases start at zero, and
//! the whole initialization is a pure function of the seed.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{CoreError, Result};
use crate::fmath;
use crate::graph::{Graph, NodeId};
use crate::matrix::Matrix;
use crate::params::ParamStore;

pub const DEFAULT_HIDDEN_DIMS: [usize; 2] = [512, 512];
pub const DEFAULT_LATENT_DIM: usize = 128;

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ModelConfig {
    /// Input dimensionality of each view (`m_v`); the length is the view count.
    pub view_dims: Vec<usize>,
    /// Encoder hidden widths; the decoder mirrors them.
    pub hidden_dims: Vec<usize>,
    /// Representation dimensionality `d`.
    pub latent_dim: usize,
    /// Number of labels `c`.
    pub label_count: usize,
    pub seed: u64,
}

impl ModelConfig {
    pub fn new(view_dims: Vec<usize>, label_count: usize, seed: u64) -> Self {
        ModelConfig {
            view_dims,
            hidden_dims: DEFAULT_HIDDEN_DIMS.to_vec(),
            latent_dim: DEFAULT_LATENT_DIM,
            label_count,
            seed,
        }
    }

    pub fn view_count(&self) -> usize {
        self.view_dims.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.view_dims.is_empty() {
            return Err(CoreError::EmptyInput { what: "view dims" });
        }
        if self.view_dims.iter().any(|&d| d == 0) || self.hidden_dims.iter().any(|&d| d == 0) {
            return Err(CoreError::InvalidConfig {
                what: String::from("layer widths must be >= 1"),
            });
        }
        if self.latent_dim == 0 {
            return Err(CoreError::InvalidConfig {
                what: String::from("latent dim must be >= 1"),
            });
        }
        if self.label_count == 0 {
            return Err(CoreError::InvalidConfig {
                what: String::from("label count must be >= 1"),
            });
        }
        Ok(())
    }

    fn encoder_widths(&self, v: usize) -> Vec<usize> {
        let mut w = Vec::with_capacity(self.hidden_dims.len() + 2);
        w.push(self.view_dims[v]);
        w.extend_from_slice(&self.hidden_dims);
        w.push(self.latent_dim);
        w
    }

    fn decoder_widths(&self, v: usize) -> Vec<usize> {
        let mut w: Vec<usize> = self.encoder_widths(v);
        w.reverse();
        w
    }
}

/// Parameter name of one layer's weight or bias. The scheme is stable; the
/// checkpoint format relies on it.
fn weight_name(prefix: &str, v: usize, layer: usize) -> String {
    format!("{prefix}{v}.w{layer}")
}

fn bias_name(prefix: &str, v: usize, layer: usize) -> String {
    format!("{prefix}{v}.b{layer}")
}

#[derive(Clone, Debug)]
pub struct DicNetModel {
    config: ModelConfig,
    params: ParamStore,
}

impl DicNetModel {
    /// Initialize all encoder, decoder, and classifier parameters from the
    /// config seed. Same seed, same parameters.
    pub fn init(config: ModelConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut params = ParamStore::new();

        let mut register_chain = |prefix: &str, v: usize, widths: &[usize], rng: &mut ChaCha8Rng| -> Result<()> {
            for layer in 0..widths.len() - 1 {
                let (fan_in, fan_out) = (widths[layer], widths[layer + 1]);
                let bound = fmath::sqrt(6.0 / fan_in as f64);
                let w = Matrix::from_fn(fan_in, fan_out, |_, _| rng.gen_range(-bound..bound));
                params.register(&weight_name(prefix, v, layer), w)?;
                params.register(&bias_name(prefix, v, layer), Matrix::zeros(1, fan_out))?;
            }
            Ok(())
        };

        for v in 0..config.view_count() {
            register_chain("enc", v, &config.encoder_widths(v), &mut rng)?;
            register_chain("dec", v, &config.decoder_widths(v), &mut rng)?;
        }
        let bound = fmath::sqrt(6.0 / config.latent_dim as f64);
        let w = Matrix::from_fn(config.latent_dim, config.label_count, |_, _| {
            rng.gen_range(-bound..bound)
        });
        params.register("cls.w", w)?;
        params.register("cls.b", Matrix::zeros(1, config.label_count))?;

        Ok(DicNetModel { config, params })
    }

    /// Rebuild a model around existing parameter values (checkpoint load).
    pub fn from_parts(config: ModelConfig, params: ParamStore) -> Result<Self> {
        config.validate()?;
        let expected = DicNetModel::init(config.clone())?;
        if expected.params.len() != params.len() {
            return Err(CoreError::InvalidConfig {
                what: format!(
                    "checkpoint has {} parameters, config requires {}",
                    params.len(),
                    expected.params.len()
                ),
            });
        }
        for (name, value) in expected.params.iter() {
            let loaded = params.get(name)?;
            if loaded.shape() != value.shape() {
                return Err(CoreError::ShapeMismatch {
                    op: "checkpoint parameter",
                    lhs: value.shape(),
                    rhs: loaded.shape(),
                });
            }
        }
        Ok(DicNetModel { config, params })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn params(&self) -> &ParamStore {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamStore {
        &mut self.params
    }

    fn mlp(
        &self,
        graph: &mut Graph,
        params: &ParamStore,
        prefix: &str,
        v: usize,
        widths: &[usize],
        input: NodeId,
    ) -> Result<NodeId> {
        let mut x = input;
        let layers = widths.len() - 1;
        for layer in 0..layers {
            let w = graph.param(
                &weight_name(prefix, v, layer),
                params.get(&weight_name(prefix, v, layer))?.clone(),
            );
            let b = graph.param(
                &bias_name(prefix, v, layer),
                params.get(&bias_name(prefix, v, layer))?.clone(),
            );
            let lin = graph.matmul(x, w)?;
            x = graph.add_row_vec(lin, b)?;
            if layer + 1 < layers {
                x = graph.relu(x)?;
            }
        }
        Ok(x)
    }

    /// View-specific representation: `Z^(v)` (n x d) from `X^(v)` (n x m_v).
    pub fn encode(
        &self,
        graph: &mut Graph,
        params: &ParamStore,
        v: usize,
        input: NodeId,
    ) -> Result<NodeId> {
        self.check_view(v)?;
        let got = graph.value(input).shape();
        if got.1 != self.config.view_dims[v] {
            return Err(CoreError::ShapeMismatch {
                op: "encode input",
                lhs: (got.0, self.config.view_dims[v]),
                rhs: got,
            });
        }
        self.mlp(graph, params, "enc", v, &self.config.encoder_widths(v), input)
    }

    /// Reconstruction: `X-hat^(v)` (n x m_v) from `Z^(v)` (n x d).
    pub fn decode(
        &self,
        graph: &mut Graph,
        params: &ParamStore,
        v: usize,
        latent: NodeId,
    ) -> Result<NodeId> {
        self.check_view(v)?;
        let got = graph.value(latent).shape();
        if got.1 != self.config.latent_dim {
            return Err(CoreError::ShapeMismatch {
                op: "decode input",
                lhs: (got.0, self.config.latent_dim),
                rhs: got,
            });
        }
        self.mlp(graph, params, "dec", v, &self.config.decoder_widths(v), latent)
    }

    /// Label scores in (0, 1): sigmoid of one fully connected layer over the
    /// fused representation.
    pub fn classify(
        &self,
        graph: &mut Graph,
        params: &ParamStore,
        fused: NodeId,
    ) -> Result<NodeId> {
        let got = graph.value(fused).shape();
        if got.1 != self.config.latent_dim {
            return Err(CoreError::ShapeMismatch {
                op: "classify input",
                lhs: (got.0, self.config.latent_dim),
                rhs: got,
            });
        }
        let w = graph.param("cls.w", params.get("cls.w")?.clone());
        let b = graph.param("cls.b", params.get("cls.b")?.clone());
        let lin = graph.matmul(fused, w)?;
        let biased = graph.add_row_vec(lin, b)?;
        graph.sigmoid(biased)
    }

    fn check_view(&self, v: usize) -> Result<()> {
        if v >= self.config.view_count() {
            return Err(CoreError::InvalidConfig {
                what: format!("view index {v} out of range (l = {})", self.config.view_count()),
            });
        }
        Ok(())
    }
}

/// Indicator-weighted fusion: each sample's representation is the mean of its
/// available views' representations; missing views contribute nothing.
pub fn fuse(graph: &mut Graph, latents: &[NodeId], view_mask: &Matrix) -> Result<NodeId> {
    if latents.is_empty() {
        return Err(CoreError::EmptyInput { what: "latent list" });
    }
    if !view_mask.is_binary() {
        return Err(CoreError::NonBinary { what: "view mask" });
    }
    let (n, d) = graph.value(latents[0]).shape();
    for &z in latents {
        if graph.value(z).shape() != (n, d) {
            return Err(CoreError::ShapeMismatch {
                op: "fuse",
                lhs: (n, d),
                rhs: graph.value(z).shape(),
            });
        }
    }
    if view_mask.shape() != (n, latents.len()) {
        return Err(CoreError::ShapeMismatch {
            op: "fuse mask",
            lhs: (n, latents.len()),
            rhs: view_mask.shape(),
        });
    }
    let counts = view_mask.row_sums();
    for (i, &cnt) in counts.iter().enumerate() {
        if cnt == 0.0 {
            return Err(CoreError::UncoveredSample { row: i });
        }
    }

    let mut acc: Option<NodeId> = None;
    for (v, &z) in latents.iter().enumerate() {
        let col = graph.constant(Matrix::from_fn(n, 1, |i, _| view_mask.get(i, v)));
        let gated = graph.mul_col_vec(z, col)?;
        acc = Some(match acc {
            Some(a) => graph.add(a, gated)?,
            None => gated,
        });
    }
    let inv = graph.constant(Matrix::from_fn(n, 1, |i, _| 1.0 / counts[i]));
    graph.mul_col_vec(acc.expect("at least one view"), inv)
}
