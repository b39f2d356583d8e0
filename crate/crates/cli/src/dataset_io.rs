//! Dataset directory format.
//!
//! A dataset lives in one directory: a `manifest.toml` plus one text file per
//! matrix (one row per line, space-separated decimal values, shortest
//! round-trip float formatting, so save -> load is bit-exact). Split files
//! hold one sample index per line. The manifest declares every shape; the
//! loader verifies files against the declaration and rejects mismatches,
//! warns on unknown manifest fields, and re-validates all dataset invariants
//! on assembly.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};

use dicnet_core::data::{MaskSpec, MultiViewDataset};
use dicnet_core::matrix::Matrix;

pub const MANIFEST_NAME: &str = "manifest.toml";

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Manifest {
    /// Sample count n.
    pub samples: usize,
    /// Label count c.
    pub labels: usize,
    /// Per-view dimensionality; the length is the view count l.
    pub view_dims: Vec<usize>,
    /// Seed the dataset was generated with (informational).
    pub seed: u64,
    pub files: ManifestFiles,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub corruption: Option<MaskSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<SplitFiles>,
    #[serde(flatten)]
    pub unknown: BTreeMap<String, toml::Value>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ManifestFiles {
    pub views: Vec<String>,
    pub labels: String,
    pub view_mask: String,
    pub label_mask: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SplitFiles {
    pub train: String,
    pub test: String,
}

/// A dataset loaded from disk together with its manifest and optional split.
pub struct LoadedDataset {
    pub dataset: MultiViewDataset,
    pub manifest: Manifest,
    pub split: Option<(Vec<usize>, Vec<usize>)>,
}

pub fn write_matrix(path: &Path, matrix: &Matrix) -> Result<()> {
    let mut out = String::new();
    for i in 0..matrix.rows() {
        let row = matrix.row(i);
        for (j, v) in row.iter().enumerate() {
            if j > 0 {
                out.push(' ');
            }
            write!(out, "{v}").expect("write to string");
        }
        out.push('\n');
    }
    fs::write(path, out).with_context(|| format!("writing {}", path.display()))
}

pub fn read_matrix(path: &Path) -> Result<Matrix> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row: Vec<f64> = line
            .split_whitespace()
            .map(|tok| {
                tok.parse::<f64>().map_err(|_| {
                    anyhow!(
                        "{}:{}: malformed value '{tok}'",
                        path.display(),
                        lineno + 1
                    )
                })
            })
            .collect::<Result<_>>()?;
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                bail!(
                    "{}:{}: row has {} values, expected {}",
                    path.display(),
                    lineno + 1,
                    row.len(),
                    first.len()
                );
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        bail!("{}: no rows", path.display());
    }
    let (r, c) = (rows.len(), rows[0].len());
    Ok(Matrix::from_fn(r, c, |i, j| rows[i][j]))
}

pub fn write_indices(path: &Path, indices: &[usize]) -> Result<()> {
    let mut out = String::new();
    for i in indices {
        writeln!(out, "{i}").expect("write to string");
    }
    fs::write(path, out).with_context(|| format!("writing {}", path.display()))
}

pub fn read_indices(path: &Path) -> Result<Vec<usize>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(lineno, line)| {
            line.trim()
                .parse::<usize>()
                .map_err(|_| anyhow!("{}:{}: malformed index '{line}'", path.display(), lineno + 1))
        })
        .collect()
}

/// Write a dataset (plus optional corruption record and split) into `dir`,
/// creating it if needed. Returns the manifest that was written.
pub fn save_dataset(
    dataset: &MultiViewDataset,
    dir: &Path,
    seed: u64,
    corruption: Option<MaskSpec>,
    split: Option<(&[usize], &[usize])>,
) -> Result<Manifest> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;

    let view_files: Vec<String> = (0..dataset.view_count())
        .map(|v| format!("view_{v}.txt"))
        .collect();
    for (v, name) in view_files.iter().enumerate() {
        write_matrix(&dir.join(name), dataset.view(v))?;
    }
    write_matrix(&dir.join("labels.txt"), dataset.labels())?;
    write_matrix(&dir.join("view_mask.txt"), dataset.view_mask())?;
    write_matrix(&dir.join("label_mask.txt"), dataset.label_mask())?;

    let split_files = match split {
        Some((train, test)) => {
            write_indices(&dir.join("train_indices.txt"), train)?;
            write_indices(&dir.join("test_indices.txt"), test)?;
            Some(SplitFiles {
                train: "train_indices.txt".into(),
                test: "test_indices.txt".into(),
            })
        }
        None => None,
    };

    let manifest = Manifest {
        samples: dataset.n(),
        labels: dataset.label_count(),
        view_dims: dataset.view_dims(),
        seed,
        files: ManifestFiles {
            views: view_files,
            labels: "labels.txt".into(),
            view_mask: "view_mask.txt".into(),
            label_mask: "label_mask.txt".into(),
        },
        corruption,
        split: split_files,
        unknown: BTreeMap::new(),
    };
    let text = toml::to_string(&manifest).context("serializing manifest")?;
    fs::write(dir.join(MANIFEST_NAME), text)
        .with_context(|| format!("writing {}", dir.join(MANIFEST_NAME).display()))?;
    Ok(manifest)
}

/// Accepts either the manifest file itself or its directory.
pub fn resolve_manifest_path(path: &Path) -> PathBuf {
    if path.is_dir() {
        path.join(MANIFEST_NAME)
    } else {
        path.to_path_buf()
    }
}

pub fn load_dataset(path: &Path) -> Result<LoadedDataset> {
    let manifest_path = resolve_manifest_path(path);
    let dir = manifest_path
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));
    let text = fs::read_to_string(&manifest_path)
        .with_context(|| format!("reading {}", manifest_path.display()))?;
    let manifest: Manifest = toml::from_str(&text)
        .with_context(|| format!("parsing {}", manifest_path.display()))?;
    if !manifest.unknown.is_empty() {
        let keys: Vec<&str> = manifest.unknown.keys().map(String::as_str).collect();
        eprintln!(
            "warning: {} contains unknown fields (ignored): {}",
            manifest_path.display(),
            keys.join(", ")
        );
    }

    let l = manifest.view_dims.len();
    if manifest.files.views.len() != l {
        bail!(
            "manifest declares {} view dims but lists {} view files",
            l,
            manifest.files.views.len()
        );
    }

    let mut views = Vec::with_capacity(l);
    for (v, name) in manifest.files.views.iter().enumerate() {
        let m = read_matrix(&dir.join(name))?;
        if m.shape() != (manifest.samples, manifest.view_dims[v]) {
            bail!(
                "view {v}: file {} is {}x{}, manifest declares {}x{}",
                name,
                m.shape().0,
                m.shape().1,
                manifest.samples,
                manifest.view_dims[v]
            );
        }
        views.push(m);
    }
    let expect_shape = |name: &str, m: &Matrix, rows: usize, cols: usize| -> Result<()> {
        if m.shape() != (rows, cols) {
            bail!(
                "{name}: file is {}x{}, manifest declares {rows}x{cols}",
                m.shape().0,
                m.shape().1
            );
        }
        Ok(())
    };
    let labels = read_matrix(&dir.join(&manifest.files.labels))?;
    expect_shape("labels", &labels, manifest.samples, manifest.labels)?;
    let view_mask = read_matrix(&dir.join(&manifest.files.view_mask))?;
    expect_shape("view mask", &view_mask, manifest.samples, l)?;
    let label_mask = read_matrix(&dir.join(&manifest.files.label_mask))?;
    expect_shape("label mask", &label_mask, manifest.samples, manifest.labels)?;

    let dataset = MultiViewDataset::assemble(views, labels, view_mask, label_mask)
        .map_err(|e| anyhow!("invalid dataset: {e}"))?;

    let split = match &manifest.split {
        Some(files) => {
            let train = read_indices(&dir.join(&files.train))?;
            let test = read_indices(&dir.join(&files.test))?;
            validate_split(dataset.n(), &train, &test)?;
            Some((train, test))
        }
        None => None,
    };

    Ok(LoadedDataset {
        dataset,
        manifest,
        split,
    })
}

fn validate_split(n: usize, train: &[usize], test: &[usize]) -> Result<()> {
    let mut seen = vec![false; n];
    for &i in train.iter().chain(test) {
        if i >= n {
            bail!("split index {i} out of range (n = {n})");
        }
        if seen[i] {
            bail!("split index {i} listed twice");
        }
        seen[i] = true;
    }
    if seen.iter().any(|&s| !s) {
        bail!("split does not cover every sample");
    }
    Ok(())
}
