//! The four training objectives, all differentiable through the graph.
//!
//! - masked reconstruction: per-view squared error, gated by the view
//!   indicator and normalized by the view's feature dimension, averaged over
//!   views;
//! - incomplete instance-level contrast: for each ordered view pair (v, u),
//!   anchors are instances of view v, the positive is the same sample's
//!   instance in view u, and negatives are every other sample's instance in
//!   either view, each gated by its availability — a positive pair only
//!   counts when both instances exist, and an unavailable negative drops out
//!   of the denominator entirely;
//! - masked multi-label BCE: cross-entropy over observed label cells only,
//!   normalized by the full n*c cell count;
//! - the weighted total `L = L_MC + beta * L_IC + gamma * L_FR`.
//!
//! Normalizers are kept verbatim: the contrastive 1/n and the BCE 1/(n*c) use
//! the row count of the matrices passed in, regardless of how many terms the
//! masks remove. `reconstruction_loss` is the verbatim sum over rows; the
//! `_mean` variant divides by the row count so mini-batch magnitudes do not
//! scale with the batch size.

use alloc::vec::Vec;

use crate::error::{CoreError, Result};
use crate::fmath;
use crate::graph::{Graph, NodeId};
use crate::matrix::Matrix;

/// Clamp bound for every log argument (contrastive ratio and both BCE terms).
pub const LOG_CLAMP: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LossWeights {
    /// Contrastive weight (beta).
    pub contrastive: f64,
    /// Reconstruction weight (gamma).
    pub reconstruction: f64,
    /// Softmax temperature (tau), strictly positive.
    pub temperature: f64,
}

impl Default for LossWeights {
    /// Midpoints of the stable ranges: beta 2e-3, gamma 8e-2, tau 0.5.
    fn default() -> Self {
        LossWeights {
            contrastive: 2e-3,
            reconstruction: 8e-2,
            temperature: 0.5,
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        if !(self.temperature > 0.0) {
            return Err(CoreError::InvalidRate {
                what: "temperature tau (need > 0)",
                value: self.temperature,
            });
        }
        if self.contrastive < 0.0 {
            return Err(CoreError::InvalidRate {
                what: "contrastive weight beta (need >= 0)",
                value: self.contrastive,
            });
        }
        if self.reconstruction < 0.0 {
            return Err(CoreError::InvalidRate {
                what: "reconstruction weight gamma (need >= 0)",
                value: self.reconstruction,
            });
        }
        Ok(())
    }
}

/// The three component losses and their weighted total.
///
/// `total` is always computed as `classification + (beta * contrastive +
/// gamma * reconstruction)` in exactly that association, so the identity
/// `total == classification + (beta * contrastive + gamma * reconstruction)`
/// holds bitwise.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LossBreakdown {
    pub classification: f64,
    pub contrastive: f64,
    pub reconstruction: f64,
    pub total: f64,
}

impl LossBreakdown {
    pub fn new(
        classification: f64,
        contrastive: f64,
        reconstruction: f64,
        weights: &LossWeights,
    ) -> Self {
        LossBreakdown {
            classification,
            contrastive,
            reconstruction,
            total: classification
                + (weights.contrastive * contrastive + weights.reconstruction * reconstruction),
        }
    }
}

/// Cosine similarity of two vectors; zero-norm inputs yield 0 rather than NaN
/// (degenerate embeddings must not abort training).
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = fmath::sqrt(a.iter().map(|x| x * x).sum());
    let nb = fmath::sqrt(b.iter().map(|x| x * x).sum());
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    dot / (na * nb)
}

fn mask_column(mask: &Matrix, v: usize) -> Matrix {
    Matrix::from_fn(mask.rows(), 1, |i, _| mask.get(i, v))
}

fn check_view_mask(mask: &Matrix, rows: usize, views: usize, op: &'static str) -> Result<()> {
    if mask.shape() != (rows, views) {
        return Err(CoreError::ShapeMismatch {
            op,
            lhs: (rows, views),
            rhs: mask.shape(),
        });
    }
    if !mask.is_binary() {
        return Err(CoreError::NonBinary { what: "view mask" });
    }
    Ok(())
}

/// Verbatim weighted reconstruction loss: mean over views of the
/// dimension-normalized squared error of available instances.
pub fn reconstruction_loss(
    graph: &mut Graph,
    inputs: &[NodeId],
    reconstructions: &[NodeId],
    view_mask: &Matrix,
) -> Result<NodeId> {
    if inputs.is_empty() {
        return Err(CoreError::EmptyInput { what: "view list" });
    }
    if inputs.len() != reconstructions.len() {
        return Err(CoreError::ShapeMismatch {
            op: "reconstruction_loss",
            lhs: (inputs.len(), 0),
            rhs: (reconstructions.len(), 0),
        });
    }
    let n = graph.value(inputs[0]).rows();
    let l = inputs.len();
    check_view_mask(view_mask, n, l, "reconstruction_loss mask")?;

    let mut acc: Option<NodeId> = None;
    for v in 0..l {
        let (sx, sr) = (
            graph.value(inputs[v]).shape(),
            graph.value(reconstructions[v]).shape(),
        );
        if sx != sr || sx.0 != n {
            return Err(CoreError::ShapeMismatch {
                op: "reconstruction_loss view",
                lhs: sx,
                rhs: sr,
            });
        }
        let diff = graph.sub(reconstructions[v], inputs[v])?;
        let sq = graph.mul(diff, diff)?;
        let per_row = graph.sum_rows(sq)?;
        let gate = graph.constant(mask_column(view_mask, v));
        let gated = graph.mul(per_row, gate)?;
        let summed = graph.sum_all(gated)?;
        let term = graph.scalar_mul(summed, 1.0 / sx.1 as f64)?;
        acc = Some(match acc {
            Some(a) => graph.add(a, term)?,
            None => term,
        });
    }
    graph.scalar_mul(acc.expect("at least one view"), 1.0 / l as f64)
}

/// Batch variant: the verbatim loss additionally divided by the row count, so
/// the magnitude is independent of batch size.
pub fn reconstruction_loss_mean(
    graph: &mut Graph,
    inputs: &[NodeId],
    reconstructions: &[NodeId],
    view_mask: &Matrix,
) -> Result<NodeId> {
    let n = if inputs.is_empty() {
        return Err(CoreError::EmptyInput { what: "view list" });
    } else {
        graph.value(inputs[0]).rows()
    };
    let verbatim = reconstruction_loss(graph, inputs, reconstructions, view_mask)?;
    graph.scalar_mul(verbatim, 1.0 / n as f64)
}

/// Availability-gated off-diagonal mask for negatives drawn from view `r`:
/// entry (i, j) is `W[j, r]` for j != i and 0 on the diagonal.
fn negative_mask(view_mask: &Matrix, r: usize) -> Matrix {
    let n = view_mask.rows();
    Matrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { view_mask.get(j, r) })
}

/// Pairwise similarity exponentials between anchors of one view and all
/// instances of another: `exp(S(z_i, z_j) / tau)` over unit-normalized rows.
fn similarity_exp(
    graph: &mut Graph,
    normalized_a: NodeId,
    normalized_b: NodeId,
    temperature: f64,
) -> Result<NodeId> {
    let bt = graph.transpose(normalized_b)?;
    let sim = graph.matmul(normalized_a, bt)?;
    let scaled = graph.scalar_mul(sim, 1.0 / temperature)?;
    graph.exp(scaled)
}

struct PairLossParts {
    anchor_view: usize,
    other_view: usize,
}

/// Shared body of the pairwise loss, over pre-normalized representations and
/// a pre-computed same-view exponential matrix for the anchor view.
fn pair_loss_inner(
    graph: &mut Graph,
    normalized: (NodeId, NodeId),
    anchor_self_exp: NodeId,
    view_mask: &Matrix,
    parts: PairLossParts,
    temperature: f64,
) -> Result<NodeId> {
    let (zv, zu) = normalized;
    let n = graph.value(zv).rows();
    let cross = similarity_exp(graph, zv, zu, temperature)?;

    let eye = graph.constant(Matrix::identity(n));
    let diag_only = graph.mul(cross, eye)?;
    let positive = graph.sum_rows(diag_only)?;

    let neg_cross_mask = graph.constant(negative_mask(view_mask, parts.other_view));
    let neg_cross = graph.mul(cross, neg_cross_mask)?;
    let neg_cross_sum = graph.sum_rows(neg_cross)?;

    let neg_self_mask = graph.constant(negative_mask(view_mask, parts.anchor_view));
    let neg_self = graph.mul(anchor_self_exp, neg_self_mask)?;
    let neg_self_sum = graph.sum_rows(neg_self)?;

    let negatives = graph.add(neg_cross_sum, neg_self_sum)?;
    let denom = graph.add(positive, negatives)?;
    let ratio = graph.div(positive, denom)?;
    let clamped = graph.clamp(ratio, LOG_CLAMP, 1.0 - LOG_CLAMP)?;
    let log_ratio = graph.log(clamped)?;

    let pair_gate = graph.constant(Matrix::from_fn(n, 1, |i, _| {
        view_mask.get(i, parts.anchor_view) * view_mask.get(i, parts.other_view)
    }));
    let gated = graph.mul(log_ratio, pair_gate)?;
    let summed = graph.sum_all(gated)?;
    graph.scalar_mul(summed, -1.0 / n as f64)
}

/// Contrastive loss of one ordered view pair (anchor view v, positive view u).
pub fn contrastive_pair_loss(
    graph: &mut Graph,
    z_anchor: NodeId,
    z_other: NodeId,
    view_mask: &Matrix,
    anchor_view: usize,
    other_view: usize,
    temperature: f64,
) -> Result<NodeId> {
    if !(temperature > 0.0) {
        return Err(CoreError::InvalidRate {
            what: "temperature tau (need > 0)",
            value: temperature,
        });
    }
    if anchor_view == other_view {
        return Err(CoreError::InvalidConfig {
            what: alloc::format!("contrastive pair needs two distinct views, got {anchor_view}"),
        });
    }
    let (n, d) = graph.value(z_anchor).shape();
    if graph.value(z_other).shape() != (n, d) {
        return Err(CoreError::ShapeMismatch {
            op: "contrastive_pair_loss",
            lhs: (n, d),
            rhs: graph.value(z_other).shape(),
        });
    }
    let views = view_mask.cols();
    check_view_mask(view_mask, n, views, "contrastive_pair_loss mask")?;
    if anchor_view >= views || other_view >= views {
        return Err(CoreError::InvalidConfig {
            what: alloc::format!(
                "view pair ({anchor_view}, {other_view}) out of range (l = {views})"
            ),
        });
    }

    let zv = graph.row_normalize(z_anchor)?;
    let zu = graph.row_normalize(z_other)?;
    let self_exp = similarity_exp(graph, zv, zv, temperature)?;
    pair_loss_inner(
        graph,
        (zv, zu),
        self_exp,
        view_mask,
        PairLossParts {
            anchor_view,
            other_view,
        },
        temperature,
    )
}

/// Total incomplete instance-level contrastive loss: half the sum of the
/// pairwise losses over all ordered view pairs. A single view yields 0.
pub fn contrastive_loss(
    graph: &mut Graph,
    latents: &[NodeId],
    view_mask: &Matrix,
    temperature: f64,
) -> Result<NodeId> {
    if !(temperature > 0.0) {
        return Err(CoreError::InvalidRate {
            what: "temperature tau (need > 0)",
            value: temperature,
        });
    }
    if latents.is_empty() {
        return Err(CoreError::EmptyInput { what: "latent list" });
    }
    let (n, d) = graph.value(latents[0]).shape();
    for &z in latents {
        if graph.value(z).shape() != (n, d) {
            return Err(CoreError::ShapeMismatch {
                op: "contrastive_loss",
                lhs: (n, d),
                rhs: graph.value(z).shape(),
            });
        }
    }
    let l = latents.len();
    check_view_mask(view_mask, n, l, "contrastive_loss mask")?;
    if l == 1 {
        return Ok(graph.constant_scalar(0.0));
    }

    let normalized: Vec<NodeId> = latents
        .iter()
        .map(|&z| graph.row_normalize(z))
        .collect::<Result<_>>()?;
    let self_exps: Vec<NodeId> = normalized
        .iter()
        .map(|&z| similarity_exp(graph, z, z, temperature))
        .collect::<Result<_>>()?;

    let mut acc: Option<NodeId> = None;
    for v in 0..l {
        for u in 0..l {
            if u == v {
                continue;
            }
            let pair = pair_loss_inner(
                graph,
                (normalized[v], normalized[u]),
                self_exps[v],
                view_mask,
                PairLossParts {
                    anchor_view: v,
                    other_view: u,
                },
                temperature,
            )?;
            acc = Some(match acc {
                Some(a) => graph.add(a, pair)?,
                None => pair,
            });
        }
    }
    graph.scalar_mul(acc.expect("at least one ordered pair"), 0.5)
}

/// Masked multi-label binary cross-entropy, normalized by the full n*c cell
/// count; unobserved label cells (G = 0) contribute nothing.
pub fn classification_loss(
    graph: &mut Graph,
    predictions: NodeId,
    labels: &Matrix,
    label_mask: &Matrix,
) -> Result<NodeId> {
    let (n, c) = graph.value(predictions).shape();
    if labels.shape() != (n, c) {
        return Err(CoreError::ShapeMismatch {
            op: "classification_loss labels",
            lhs: (n, c),
            rhs: labels.shape(),
        });
    }
    if label_mask.shape() != (n, c) {
        return Err(CoreError::ShapeMismatch {
            op: "classification_loss mask",
            lhs: (n, c),
            rhs: label_mask.shape(),
        });
    }
    if !labels.is_binary() {
        return Err(CoreError::NonBinary { what: "label matrix" });
    }
    if !label_mask.is_binary() {
        return Err(CoreError::NonBinary { what: "label mask" });
    }

    let clamped = graph.clamp(predictions, LOG_CLAMP, 1.0 - LOG_CLAMP)?;
    let y = graph.constant(labels.clone());
    let y_complement = graph.constant(labels.map(|v| 1.0 - v));
    let log_p = graph.log(clamped)?;
    let ones = graph.constant(Matrix::ones(n, c));
    let one_minus_p = graph.sub(ones, clamped)?;
    let log_not_p = graph.log(one_minus_p)?;
    let pos = graph.mul(y, log_p)?;
    let neg = graph.mul(y_complement, log_not_p)?;
    let both = graph.add(pos, neg)?;
    let gate = graph.constant(label_mask.clone());
    let gated = graph.mul(both, gate)?;
    let summed = graph.sum_all(gated)?;
    graph.scalar_mul(summed, -1.0 / (n * c) as f64)
}

/// Weighted total `L = L_MC + beta * L_IC + gamma * L_FR`, plus the recorded
/// breakdown. The returned breakdown's `total` is bitwise equal to the node's
/// value.
pub fn total_loss(
    graph: &mut Graph,
    classification: NodeId,
    contrastive: NodeId,
    reconstruction: NodeId,
    weights: &LossWeights,
) -> Result<(NodeId, LossBreakdown)> {
    weights.validate()?;
    let mc = graph.scalar_value(classification)?;
    let ic = graph.scalar_value(contrastive)?;
    let fr = graph.scalar_value(reconstruction)?;

    let weighted_ic = graph.scalar_mul(contrastive, weights.contrastive)?;
    let weighted_fr = graph.scalar_mul(reconstruction, weights.reconstruction)?;
    let aux = graph.add(weighted_ic, weighted_fr)?;
    let total = graph.add(classification, aux)?;

    let breakdown = LossBreakdown::new(mc, ic, fr, weights);
    debug_assert_eq!(
        graph.scalar_value(total)?.to_bits(),
        breakdown.total.to_bits()
    );
    Ok((total, breakdown))
}
