//! Double-incomplete multi-view multi-label datasets.
//!
//! A dataset bundles the per-view feature matrices `X^(v)`, the label matrix
//! `Y`, and the two availability indicators: `W` (n x l, which view instances
//! exist) and `G` (n x c, which labels are observed). The corruption protocol
//! follows three seeded steps: disable view cells under a global quota while
//! keeping every sample covered by at least one view, split train/test, and
//! remove equal fractions of positive and negative label cells.
//!
//! Missing entries are canonically stored as zero; [`MultiViewDataset::assemble`]
//! zero-fills and then rejects any remaining non-finite value. All generation
//! here is a pure function of its seed.

use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{CoreError, Result};
use crate::fmath;
use crate::matrix::Matrix;

/// Corruption parameters: view missing rate `p`, label missing rate `q`,
/// train fraction `m`, and the seed the masks derive from.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MaskSpec {
    pub view_missing_rate: f64,
    pub label_missing_rate: f64,
    pub train_fraction: f64,
    pub seed: u64,
}

impl MaskSpec {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.view_missing_rate) {
            return Err(CoreError::InvalidRate {
                what: "view missing rate p (need 0 <= p < 1)",
                value: self.view_missing_rate,
            });
        }
        if !(0.0..1.0).contains(&self.label_missing_rate) {
            return Err(CoreError::InvalidRate {
                what: "label missing rate q (need 0 <= q < 1)",
                value: self.label_missing_rate,
            });
        }
        if !(self.train_fraction > 0.0 && self.train_fraction <= 1.0) {
            return Err(CoreError::InvalidRate {
                what: "train fraction m (need 0 < m <= 1)",
                value: self.train_fraction,
            });
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MultiViewDataset {
    views: Vec<Matrix>,
    labels: Matrix,
    view_mask: Matrix,
    label_mask: Matrix,
    view_names: Option<Vec<String>>,
    label_names: Option<Vec<String>>,
}

impl MultiViewDataset {
    /// Validate shapes and mask invariants, zero-fill missing entries, and
    /// reject non-finite data. This is the only way to construct a dataset.
    pub fn assemble(
        views: Vec<Matrix>,
        labels: Matrix,
        view_mask: Matrix,
        label_mask: Matrix,
    ) -> Result<Self> {
        if views.is_empty() {
            return Err(CoreError::EmptyInput { what: "view list" });
        }
        let n = views[0].rows();
        if n == 0 {
            return Err(CoreError::EmptyInput { what: "dataset" });
        }
        for v in &views {
            if v.rows() != n {
                return Err(CoreError::ShapeMismatch {
                    op: "dataset views",
                    lhs: (n, views[0].cols()),
                    rhs: v.shape(),
                });
            }
        }
        let l = views.len();
        if view_mask.shape() != (n, l) {
            return Err(CoreError::ShapeMismatch {
                op: "view mask",
                lhs: (n, l),
                rhs: view_mask.shape(),
            });
        }
        if labels.rows() != n {
            return Err(CoreError::ShapeMismatch {
                op: "labels",
                lhs: (n, labels.cols()),
                rhs: labels.shape(),
            });
        }
        if label_mask.shape() != labels.shape() {
            return Err(CoreError::ShapeMismatch {
                op: "label mask",
                lhs: labels.shape(),
                rhs: label_mask.shape(),
            });
        }
        if !view_mask.is_binary() {
            return Err(CoreError::NonBinary { what: "view mask" });
        }
        if !label_mask.is_binary() {
            return Err(CoreError::NonBinary { what: "label mask" });
        }
        if !labels.is_binary() {
            return Err(CoreError::NonBinary { what: "label matrix" });
        }
        for i in 0..n {
            if view_mask.row(i).iter().sum::<f64>() == 0.0 {
                return Err(CoreError::UncoveredSample { row: i });
            }
        }

        let mut ds = MultiViewDataset {
            views,
            labels,
            view_mask,
            label_mask,
            view_names: None,
            label_names: None,
        };
        ds.zero_fill();
        for (v, x) in ds.views.iter().enumerate() {
            if !x.is_finite() {
                let _ = v;
                return Err(CoreError::NonFinite { op: "dataset view" });
            }
        }
        Ok(ds)
    }

    pub fn with_names(
        mut self,
        view_names: Option<Vec<String>>,
        label_names: Option<Vec<String>>,
    ) -> Self {
        self.view_names = view_names;
        self.label_names = label_names;
        self
    }

    /// Zero out view rows with `W = 0` and label cells with `G = 0`.
    /// Idempotent; `assemble` has already applied it.
    pub fn zero_fill(&mut self) {
        for v in 0..self.views.len() {
            for i in 0..self.n() {
                if self.view_mask.get(i, v) == 0.0 {
                    self.views[v].row_mut(i).fill(0.0);
                }
            }
        }
        for i in 0..self.labels.rows() {
            for j in 0..self.labels.cols() {
                if self.label_mask.get(i, j) == 0.0 {
                    self.labels.set(i, j, 0.0);
                }
            }
        }
    }

    pub fn n(&self) -> usize {
        self.views[0].rows()
    }

    pub fn view_count(&self) -> usize {
        self.views.len()
    }

    pub fn label_count(&self) -> usize {
        self.labels.cols()
    }

    pub fn view_dim(&self, v: usize) -> usize {
        self.views[v].cols()
    }

    pub fn view_dims(&self) -> Vec<usize> {
        self.views.iter().map(|m| m.cols()).collect()
    }

    pub fn view(&self, v: usize) -> &Matrix {
        &self.views[v]
    }

    pub fn views(&self) -> &[Matrix] {
        &self.views
    }

    pub fn labels(&self) -> &Matrix {
        &self.labels
    }

    pub fn view_mask(&self) -> &Matrix {
        &self.view_mask
    }

    pub fn label_mask(&self) -> &Matrix {
        &self.label_mask
    }

    pub fn view_names(&self) -> Option<&[String]> {
        self.view_names.as_deref()
    }

    pub fn label_names(&self) -> Option<&[String]> {
        self.label_names.as_deref()
    }

    /// Replace the masks after external corruption. Re-validates and re-fills.
    pub fn with_masks(self, view_mask: Matrix, label_mask: Matrix) -> Result<Self> {
        let names = (self.view_names.clone(), self.label_names.clone());
        let ds = MultiViewDataset::assemble(self.views, self.labels, view_mask, label_mask)?;
        Ok(ds.with_names(names.0, names.1))
    }

    /// Row-subset across every matrix; indices may repeat.
    pub fn subset(&self, indices: &[usize]) -> MultiViewDataset {
        MultiViewDataset {
            views: self.views.iter().map(|v| v.select_rows(indices)).collect(),
            labels: self.labels.select_rows(indices),
            view_mask: self.view_mask.select_rows(indices),
            label_mask: self.label_mask.select_rows(indices),
            view_names: self.view_names.clone(),
            label_names: self.label_names.clone(),
        }
    }
}

fn quota(rate: f64, count: usize) -> usize {
    fmath::round_half_up(rate * count as f64) as usize
}

/// Generate the n x l view indicator with exactly `round(p*n*l)` zeros placed
/// uniformly at random, subject to every row keeping at least one available
/// view. Walks a shuffled list of cells, disabling any cell whose row still
/// has two or more available views; a single walk always reaches the quota
/// when it is feasible at all.
pub fn generate_view_mask(n: usize, l: usize, p: f64, seed: u64) -> Result<Matrix> {
    if n == 0 || l == 0 {
        return Err(CoreError::EmptyInput { what: "view mask shape" });
    }
    if !(0.0..1.0).contains(&p) {
        return Err(CoreError::InvalidRate {
            what: "view missing rate p (need 0 <= p < 1)",
            value: p,
        });
    }
    let target = quota(p, n * l);
    let max = n * (l - 1);
    if target > max {
        return Err(CoreError::MaskQuotaUnreachable {
            requested: target,
            max,
            max_rate: (l - 1) as f64 / l as f64,
        });
    }

    let mut mask = Matrix::ones(n, l);
    if target == 0 {
        return Ok(mask);
    }
    let mut cells: Vec<(usize, usize)> = (0..n).flat_map(|i| (0..l).map(move |v| (i, v))).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    cells.shuffle(&mut rng);

    let mut available = alloc::vec![l; n];
    let mut placed = 0;
    for (i, v) in cells {
        if placed == target {
            break;
        }
        if available[i] >= 2 {
            mask.set(i, v, 0.0);
            available[i] -= 1;
            placed += 1;
        }
    }
    debug_assert_eq!(placed, target);
    Ok(mask)
}

/// Generate the n x c label indicator by removing `round(q * #positives)`
/// positive cells and `round(q * #negatives)` negative cells, each uniformly
/// at random within its class.
pub fn generate_label_mask(labels: &Matrix, q: f64, seed: u64) -> Result<Matrix> {
    if !labels.is_binary() {
        return Err(CoreError::NonBinary { what: "label matrix" });
    }
    if !(0.0..1.0).contains(&q) {
        return Err(CoreError::InvalidRate {
            what: "label missing rate q (need 0 <= q < 1)",
            value: q,
        });
    }

    let mut positives = Vec::new();
    let mut negatives = Vec::new();
    for i in 0..labels.rows() {
        for j in 0..labels.cols() {
            if labels.get(i, j) == 1.0 {
                positives.push((i, j));
            } else {
                negatives.push((i, j));
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    positives.shuffle(&mut rng);
    negatives.shuffle(&mut rng);

    let mut mask = Matrix::ones(labels.rows(), labels.cols());
    for &(i, j) in positives.iter().take(quota(q, positives.len())) {
        mask.set(i, j, 0.0);
    }
    for &(i, j) in negatives.iter().take(quota(q, negatives.len())) {
        mask.set(i, j, 0.0);
    }
    Ok(mask)
}

/// Seeded uniform split: the first `round(m*n)` samples of a random
/// permutation are the training set. Both index lists come back sorted.
pub fn split_train_test(n: usize, m: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if n == 0 {
        return Err(CoreError::EmptyInput { what: "dataset" });
    }
    if !(m > 0.0 && m <= 1.0) {
        return Err(CoreError::InvalidRate {
            what: "train fraction m (need 0 < m <= 1)",
            value: m,
        });
    }
    let mut perm: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    perm.shuffle(&mut rng);
    let k = quota(m, n).min(n);
    let mut train = perm[..k].to_vec();
    let mut test = perm[k..].to_vec();
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

/// Parameters for desk-scale synthetic datasets: views are noisy random
/// projections of a shared latent matrix, labels are thresholded sigmoids of
/// random linear maps of the latent (redrawn per label until the positive
/// rate lands in [0.1, 0.9]).
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SyntheticConfig {
    pub samples: usize,
    pub view_dims: Vec<usize>,
    pub label_count: usize,
    pub latent_dim: usize,
    pub noise: f64,
    pub seed: u64,
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(CoreError::EmptyInput { what: "sample count" });
        }
        if self.view_dims.is_empty() {
            return Err(CoreError::EmptyInput { what: "view dims" });
        }
        if self.view_dims.iter().any(|&d| d == 0) {
            return Err(CoreError::InvalidConfig {
                what: String::from("every view dimensionality must be >= 1"),
            });
        }
        if self.label_count == 0 {
            return Err(CoreError::EmptyInput { what: "label count" });
        }
        if self.latent_dim == 0 {
            return Err(CoreError::EmptyInput { what: "latent dim" });
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return Err(CoreError::InvalidRate {
                what: "noise level (need >= 0)",
                value: self.noise,
            });
        }
        Ok(())
    }
}

const LABEL_REDRAW_BUDGET: usize = 100;

fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller; u1 is kept away from zero so the log is finite.
    let mut u1: f64 = rng.gen();
    while u1 <= 0.0 {
        u1 = rng.gen();
    }
    let u2: f64 = rng.gen();
    fmath::sqrt(-2.0 * fmath::ln(u1)) * fmath::cos(2.0 * core::f64::consts::PI * u2)
}

fn normal_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| standard_normal(rng))
}

/// Project a latent matrix through per-view maps, adding entrywise Gaussian
/// noise scaled by `noise`.
pub(crate) fn views_from_latent(
    latent: &Matrix,
    projections: &[Matrix],
    noise: f64,
    rng: &mut ChaCha8Rng,
) -> Vec<Matrix> {
    projections
        .iter()
        .map(|a| {
            let mut x = latent.matmul(a);
            if noise > 0.0 {
                for v in x.as_mut_slice() {
                    *v += noise * standard_normal(rng);
                }
            }
            x
        })
        .collect()
}

/// Fully-observed synthetic dataset (`W` and `G` all ones); corruption is a
/// separate step.
pub fn generate_synthetic(config: &SyntheticConfig) -> Result<MultiViewDataset> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let n = config.samples;
    let latent = normal_matrix(&mut rng, n, config.latent_dim);

    let scale = 1.0 / fmath::sqrt(config.latent_dim as f64);
    let projections: Vec<Matrix> = config
        .view_dims
        .iter()
        .map(|&d| normal_matrix(&mut rng, config.latent_dim, d).scale(scale))
        .collect();
    let views = views_from_latent(&latent, &projections, config.noise, &mut rng);

    let mut labels = Matrix::zeros(n, config.label_count);
    for j in 0..config.label_count {
        let mut accepted = false;
        for _ in 0..LABEL_REDRAW_BUDGET {
            let w = normal_matrix(&mut rng, config.latent_dim, 1);
            let bias = standard_normal(&mut rng);
            let scores = latent.matmul(&w);
            let mut positives = 0usize;
            for i in 0..n {
                if fmath::sigmoid(scores.get(i, 0) + bias) >= 0.5 {
                    positives += 1;
                }
            }
            let rate = positives as f64 / n as f64;
            if (0.1..=0.9).contains(&rate) {
                for i in 0..n {
                    let y = if fmath::sigmoid(scores.get(i, 0) + bias) >= 0.5 {
                        1.0
                    } else {
                        0.0
                    };
                    labels.set(i, j, y);
                }
                accepted = true;
                break;
            }
        }
        if !accepted {
            return Err(CoreError::LabelBalanceExhausted {
                label: j,
                retries: LABEL_REDRAW_BUDGET,
            });
        }
    }

    let c = config.label_count;
    MultiViewDataset::assemble(
        views,
        labels,
        Matrix::ones(n, config.view_dims.len()),
        Matrix::ones(n, c),
    )
}
