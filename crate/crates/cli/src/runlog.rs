//! Run directory layout and epoch logging.
//!
//! A training run writes into a fresh directory:
//!
//! ```text
//! run/
//!   config.toml        # effective merged configuration
//!   epochs.log         # one JSON record per epoch (deterministic fields)
//!   timings.log        # per-epoch wall-clock seconds (non-deterministic)
//!   checkpoint_final.txt
//!   checkpoint_epoch_N.txt   # when periodic checkpointing is on
//!   eval.json          # final test-set evaluation report
//! ```
//!
//! `epochs.log` deliberately excludes wall-clock durations so that two runs
//! with the same config and seed are byte-identical; timings go to their own
//! file.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use serde::Serialize;

use dicnet_core::trainer::{Clock, EpochReport};

/// Real monotonic clock for the trainer.
pub struct SystemClock {
    start: Instant,
}

impl SystemClock {
    pub fn new() -> Self {
        SystemClock {
            start: Instant::now(),
        }
    }
}

impl Default for SystemClock {
    fn default() -> Self {
        Self::new()
    }
}

impl Clock for SystemClock {
    fn now_secs(&self) -> f64 {
        self.start.elapsed().as_secs_f64()
    }
}

/// Deterministic per-epoch record; everything except wall-clock time.
#[derive(Serialize)]
struct EpochRecord {
    epoch: usize,
    classification: f64,
    contrastive: f64,
    reconstruction: f64,
    total: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    prediction_change_rate: Option<f64>,
    stopped: bool,
    stop_loss_plateau: bool,
    stop_predictions_converged: bool,
}

impl EpochRecord {
    fn from_report(report: &EpochReport) -> Self {
        EpochRecord {
            epoch: report.epoch,
            classification: report.losses.classification,
            contrastive: report.losses.contrastive,
            reconstruction: report.losses.reconstruction,
            total: report.losses.total,
            prediction_change_rate: report.prediction_change_rate,
            stopped: report.stopped,
            stop_loss_plateau: report.stop_reason.map(|r| r.loss_plateau).unwrap_or(false),
            stop_predictions_converged: report
                .stop_reason
                .map(|r| r.predictions_converged)
                .unwrap_or(false),
        }
    }
}

/// Handle to a freshly created run directory.
pub struct RunDir {
    root: PathBuf,
}

impl RunDir {
    /// Create `path`; refuses to reuse a non-empty directory so no run ever
    /// overwrites another.
    pub fn create(path: &Path) -> Result<Self> {
        if path.exists() {
            let non_empty = fs::read_dir(path)
                .with_context(|| format!("reading {}", path.display()))?
                .next()
                .is_some();
            if non_empty {
                bail!("run directory {} already exists and is not empty", path.display());
            }
        } else {
            fs::create_dir_all(path).with_context(|| format!("creating {}", path.display()))?;
        }
        Ok(RunDir {
            root: path.to_path_buf(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn write_config<T: Serialize>(&self, config: &T) -> Result<()> {
        let text = toml::to_string(config).context("serializing effective config")?;
        fs::write(self.path("config.toml"), text).context("writing config.toml")
    }

    /// Open the epoch and timing logs for appending.
    pub fn epoch_logger(&self) -> Result<EpochLogger> {
        let epochs = fs::File::create(self.path("epochs.log")).context("creating epochs.log")?;
        let timings = fs::File::create(self.path("timings.log")).context("creating timings.log")?;
        Ok(EpochLogger { epochs, timings })
    }

    pub fn write_eval<T: Serialize>(&self, report: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(report).context("serializing eval report")?;
        text.push('\n');
        fs::write(self.path("eval.json"), text).context("writing eval.json")
    }
}

pub struct EpochLogger {
    epochs: fs::File,
    timings: fs::File,
}

impl EpochLogger {
    pub fn log(&mut self, report: &EpochReport) -> std::result::Result<(), String> {
        let record = EpochRecord::from_report(report);
        let line = serde_json::to_string(&record).map_err(|e| e.to_string())?;
        writeln!(self.epochs, "{line}").map_err(|e| e.to_string())?;
        self.epochs.flush().map_err(|e| e.to_string())?;
        writeln!(self.timings, "epoch {} {:.6}", report.epoch, report.duration_secs)
            .map_err(|e| e.to_string())?;
        Ok(())
    }
}
