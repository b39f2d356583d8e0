//! Run configuration: defaults, optional TOML config file, command-line
//! flags. Precedence is defaults < file < flags, and every resolved value is
//! validated against its precondition before any work starts. The resolved
//! settings are written into the run directory as `config.toml`, which can be
//! fed back via `--config` to reproduce a run exactly.

use std::fs;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use clap::Args;
use serde::{Deserialize, Serialize};

use dicnet_core::losses::LossWeights;
use dicnet_core::model::{ModelConfig, DEFAULT_HIDDEN_DIMS, DEFAULT_LATENT_DIM};
use dicnet_core::trainer::{TrainConfig, TrainMode};

/// Training knobs as they appear on the command line and in config files;
/// every field optional so the merge can distinguish "set" from "default".
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainKnobs {
    /// Batch size B
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Epoch budget T
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Loss-plateau stopping threshold sigma
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Contrastive loss weight beta
    #[arg(long)]
    pub beta: Option<f64>,
    /// Reconstruction loss weight gamma
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Contrastive temperature tau
    #[arg(long)]
    pub tau: Option<f64>,
    /// Adam learning rate
    #[arg(long)]
    pub learning_rate: Option<f64>,
    /// Training mode: semi-supervised or supervised
    #[arg(long)]
    pub mode: Option<String>,
    /// Binarization threshold for predictions (>= counts as positive)
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Encoder hidden widths, comma separated (decoder mirrors them)
    #[arg(long, value_delimiter = ',')]
    pub hidden: Option<Vec<usize>>,
    /// Representation dimensionality d
    #[arg(long)]
    pub latent_dim: Option<usize>,
    /// Seed for init, shuffling, and reporting
    #[arg(long)]
    pub seed: Option<u64>,
    /// Write a checkpoint every N epochs (0 = final checkpoint only)
    #[arg(long)]
    pub checkpoint_every: Option<usize>,
}

impl TrainKnobs {
    /// Field-wise precedence: `self` (flags) wins over `file`.
    pub fn over(self, file: TrainKnobs) -> TrainKnobs {
        TrainKnobs {
            batch_size: self.batch_size.or(file.batch_size),
            epochs: self.epochs.or(file.epochs),
            sigma: self.sigma.or(file.sigma),
            beta: self.beta.or(file.beta),
            gamma: self.gamma.or(file.gamma),
            tau: self.tau.or(file.tau),
            learning_rate: self.learning_rate.or(file.learning_rate),
            mode: self.mode.or(file.mode),
            threshold: self.threshold.or(file.threshold),
            hidden: self.hidden.or(file.hidden),
            latent_dim: self.latent_dim.or(file.latent_dim),
            seed: self.seed.or(file.seed),
            checkpoint_every: self.checkpoint_every.or(file.checkpoint_every),
        }
    }
}

/// Fully resolved training settings; this is what `config.toml` records.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainSettings {
    pub batch_size: usize,
    pub epochs: usize,
    pub sigma: f64,
    pub beta: f64,
    pub gamma: f64,
    pub tau: f64,
    pub learning_rate: f64,
    pub mode: String,
    pub threshold: f64,
    pub hidden: Vec<usize>,
    pub latent_dim: usize,
    pub seed: u64,
    pub checkpoint_every: usize,
}

impl TrainSettings {
    pub fn resolve(knobs: TrainKnobs) -> Result<Self> {
        let settings = TrainSettings {
            batch_size: knobs.batch_size.unwrap_or(128),
            epochs: knobs.epochs.unwrap_or(100),
            sigma: knobs.sigma.unwrap_or(1e-5),
            beta: knobs.beta.unwrap_or(2e-3),
            gamma: knobs.gamma.unwrap_or(8e-2),
            tau: knobs.tau.unwrap_or(0.5),
            learning_rate: knobs.learning_rate.unwrap_or(1e-3),
            mode: knobs.mode.unwrap_or_else(|| "semi-supervised".into()),
            threshold: knobs.threshold.unwrap_or(0.5),
            hidden: knobs.hidden.unwrap_or_else(|| DEFAULT_HIDDEN_DIMS.to_vec()),
            latent_dim: knobs.latent_dim.unwrap_or(DEFAULT_LATENT_DIM),
            seed: knobs.seed.unwrap_or(0),
            checkpoint_every: knobs.checkpoint_every.unwrap_or(0),
        };
        settings.validate()?;
        Ok(settings)
    }

    pub fn validate(&self) -> Result<()> {
        self.train_mode()?;
        self.train_config()?
            .validate()
            .map_err(|e| anyhow!("invalid training settings: {e}"))?;
        if self.hidden.iter().any(|&h| h == 0) {
            bail!("--hidden widths must be >= 1");
        }
        if self.latent_dim == 0 {
            bail!("--latent-dim must be >= 1");
        }
        Ok(())
    }

    pub fn train_mode(&self) -> Result<TrainMode> {
        match self.mode.as_str() {
            "supervised" => Ok(TrainMode::Supervised),
            "semi-supervised" => Ok(TrainMode::SemiSupervised),
            other => bail!("--mode must be 'supervised' or 'semi-supervised', got '{other}'"),
        }
    }

    pub fn weights(&self) -> LossWeights {
        LossWeights {
            contrastive: self.beta,
            reconstruction: self.gamma,
            temperature: self.tau,
        }
    }

    pub fn train_config(&self) -> Result<TrainConfig> {
        Ok(TrainConfig {
            batch_size: self.batch_size,
            max_epochs: self.epochs,
            stop_threshold: self.sigma,
            weights: self.weights(),
            learning_rate: self.learning_rate,
            seed: self.seed,
            mode: self.train_mode()?,
            prediction_threshold: self.threshold,
        })
    }

    pub fn model_config(&self, view_dims: Vec<usize>, label_count: usize) -> ModelConfig {
        ModelConfig {
            view_dims,
            hidden_dims: self.hidden.clone(),
            latent_dim: self.latent_dim,
            label_count,
            seed: self.seed,
        }
    }
}

/// Parse a `--config` TOML file into any partial-knobs type.
pub fn load_config_file<T: serde::de::DeserializeOwned + Default>(
    path: Option<&Path>,
) -> Result<T> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let text =
                fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            toml::from_str(&text).with_context(|| format!("parsing {}", p.display()))
        }
    }
}
