//! Model-level loss behavior: indicator gating is exact (values and every
//! parameter gradient), the full weighted objective passes finite-difference
//! checks end to end, and a toy identity autoencoder actually trains.

use dicnet_core::data::{generate_synthetic, MultiViewDataset, SyntheticConfig};
use dicnet_core::gradcheck::{finite_diff_check, GradCheckConfig};
use dicnet_core::graph::{Graph, NodeId};
use dicnet_core::losses::{
    classification_loss, contrastive_loss, reconstruction_loss_mean, LossWeights,
};
use dicnet_core::matrix::Matrix;
use dicnet_core::model::{fuse, DicNetModel, ModelConfig};
use dicnet_core::params::{GradMap, ParamStore};
use dicnet_core::trainer::{self, NullClock, TrainConfig, TrainMode};
use dicnet_core::Result;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Instance {
    model: DicNetModel,
    views: Vec<Matrix>,
    view_mask: Matrix,
    labels: Matrix,
    label_mask: Matrix,
}

/// Random instance with deliberately junk-filled masked cells: masked view
/// rows hold garbage instead of zeros, so gating has to do the work.
fn random_instance(rng: &mut ChaCha8Rng) -> Instance {
    let n = rng.gen_range(4..=8usize);
    let l = rng.gen_range(2..=3usize);
    let c = rng.gen_range(2..=4usize);
    let dims: Vec<usize> = (0..l).map(|_| rng.gen_range(3..=6usize)).collect();
    let model = DicNetModel::init(ModelConfig {
        view_dims: dims.clone(),
        hidden_dims: vec![6],
        latent_dim: rng.gen_range(2..=5),
        label_count: c,
        seed: rng.gen(),
    })
    .unwrap();

    let view_mask = loop {
        let m = Matrix::from_fn(n, l, |_, _| if rng.gen_bool(0.7) { 1.0 } else { 0.0 });
        if (0..n).all(|i| m.row(i).iter().sum::<f64>() >= 1.0)
            && m.as_slice().iter().any(|&v| v == 0.0)
        {
            break m;
        }
    };
    let views: Vec<Matrix> = dims
        .iter()
        .map(|&d| Matrix::from_fn(n, d, |_, _| rng.gen_range(-2.0..2.0)))
        .collect();
    let labels = Matrix::from_fn(n, c, |_, _| if rng.gen_bool(0.5) { 1.0 } else { 0.0 });
    let label_mask = loop {
        let m = Matrix::from_fn(n, c, |_, _| if rng.gen_bool(0.7) { 1.0 } else { 0.0 });
        if m.as_slice().iter().any(|&v| v == 0.0) {
            break m;
        }
    };
    Instance {
        model,
        views,
        view_mask,
        labels,
        label_mask,
    }
}

enum Term {
    Reconstruction,
    Contrastive,
    Classification,
}

/// Forward the model over raw (possibly junk-masked) matrices and return one
/// loss term's value plus all parameter gradients.
fn term_value_and_grads(instance: &Instance, term: &Term) -> (f64, GradMap) {
    let mut graph = Graph::new();
    let params = instance.model.params();
    let mut inputs = Vec::new();
    let mut latents = Vec::new();
    let mut reconstructions = Vec::new();
    for (v, x) in instance.views.iter().enumerate() {
        let xn = graph.constant(x.clone());
        let z = instance.model.encode(&mut graph, params, v, xn).unwrap();
        let xhat = instance.model.decode(&mut graph, params, v, z).unwrap();
        inputs.push(xn);
        latents.push(z);
        reconstructions.push(xhat);
    }
    let loss = match term {
        Term::Reconstruction => {
            reconstruction_loss_mean(&mut graph, &inputs, &reconstructions, &instance.view_mask)
                .unwrap()
        }
        Term::Contrastive => {
            contrastive_loss(&mut graph, &latents, &instance.view_mask, 0.5).unwrap()
        }
        Term::Classification => {
            let fused = fuse(&mut graph, &latents, &instance.view_mask).unwrap();
            let scores = instance.model.classify(&mut graph, params, fused).unwrap();
            classification_loss(&mut graph, scores, &instance.labels, &instance.label_mask)
                .unwrap()
        }
    };
    let value = graph.scalar_value(loss).unwrap();
    let grads = graph.backward(loss).unwrap();
    (value, grads)
}

fn assert_identical(a: &(f64, GradMap), b: &(f64, GradMap), what: &str) {
    assert_eq!(a.0, b.0, "{what}: loss value changed");
    for (name, ga) in &a.1 {
        let gb = &b.1[name];
        for (x, y) in ga.as_slice().iter().zip(gb.as_slice()) {
            assert_eq!(x, y, "{what}: gradient of {name} changed");
        }
    }
}

/// Masked view cells are invisible to the reconstruction loss, the
/// contrastive loss (as anchors, positives, and negatives), and the fused
/// classification path; masked label cells are invisible to the BCE.
#[test]
fn indicator_gating_is_exact_for_every_loss() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let mut mutations = (0usize, 0usize, 0usize, 0usize);
    while mutations.0 < 30 || mutations.1 < 30 || mutations.2 < 30 || mutations.3 < 30 {
        let mut instance = random_instance(&mut rng);

        // Pick a masked view cell and a masked label cell, if any.
        let masked_view: Vec<(usize, usize)> = (0..instance.view_mask.rows())
            .flat_map(|i| (0..instance.view_mask.cols()).map(move |v| (i, v)))
            .filter(|&(i, v)| instance.view_mask.get(i, v) == 0.0)
            .collect();
        let masked_label: Vec<(usize, usize)> = (0..instance.label_mask.rows())
            .flat_map(|i| (0..instance.label_mask.cols()).map(move |j| (i, j)))
            .filter(|&(i, j)| instance.label_mask.get(i, j) == 0.0)
            .collect();
        if masked_view.is_empty() || masked_label.is_empty() {
            continue;
        }

        let fr = term_value_and_grads(&instance, &Term::Reconstruction);
        let ic = term_value_and_grads(&instance, &Term::Contrastive);
        let mc = term_value_and_grads(&instance, &Term::Classification);

        // Mutate one masked view instance's stored features.
        let &(i, v) = &masked_view[rng.gen_range(0..masked_view.len())];
        let col = rng.gen_range(0..instance.views[v].cols());
        instance.views[v].set(i, col, rng.gen_range(-50.0..50.0));

        assert_identical(&fr, &term_value_and_grads(&instance, &Term::Reconstruction), "reconstruction");
        mutations.0 += 1;
        assert_identical(&ic, &term_value_and_grads(&instance, &Term::Contrastive), "contrast");
        mutations.1 += 1;
        assert_identical(&mc, &term_value_and_grads(&instance, &Term::Classification), "fusion/classification");
        mutations.2 += 1;

        // Flip one unobserved label cell.
        let &(i, j) = &masked_label[rng.gen_range(0..masked_label.len())];
        instance.labels.set(i, j, 1.0 - instance.labels.get(i, j));
        assert_identical(&mc, &term_value_and_grads(&instance, &Term::Classification), "label mask");
        mutations.3 += 1;
    }
}

/// Zero-filling masked cells is loss-neutral: the junk-stored and zero-filled
/// variants produce identical values for every term.
#[test]
fn zero_fill_is_loss_neutral() {
    let mut rng = ChaCha8Rng::seed_from_u64(57);
    for _ in 0..20 {
        let instance = random_instance(&mut rng);
        let mut filled_views = instance.views.clone();
        for v in 0..filled_views.len() {
            for i in 0..filled_views[v].rows() {
                if instance.view_mask.get(i, v) == 0.0 {
                    filled_views[v].row_mut(i).fill(0.0);
                }
            }
        }
        let mut filled_labels = instance.labels.clone();
        for i in 0..filled_labels.rows() {
            for j in 0..filled_labels.cols() {
                if instance.label_mask.get(i, j) == 0.0 {
                    filled_labels.set(i, j, 0.0);
                }
            }
        }
        let filled = Instance {
            model: instance.model.clone(),
            views: filled_views,
            view_mask: instance.view_mask.clone(),
            labels: filled_labels,
            label_mask: instance.label_mask.clone(),
        };
        for term in [Term::Reconstruction, Term::Contrastive, Term::Classification] {
            let a = term_value_and_grads(&instance, &term);
            let b = term_value_and_grads(&filled, &term);
            assert_identical(&a, &b, "zero_fill equivalence");
        }
    }
}

fn six_sample_batch() -> (DicNetModel, MultiViewDataset) {
    let data = generate_synthetic(&SyntheticConfig {
        samples: 6,
        view_dims: vec![5, 4, 6],
        label_count: 3,
        latent_dim: 3,
        noise: 0.3,
        seed: 12,
    })
    .unwrap();
    // Knock out some instances and labels so the masked paths are exercised.
    let mut w = Matrix::ones(6, 3);
    w.set(0, 1, 0.0);
    w.set(2, 0, 0.0);
    w.set(2, 2, 0.0);
    w.set(5, 2, 0.0);
    let mut g = Matrix::ones(6, 3);
    g.set(1, 1, 0.0);
    g.set(3, 0, 0.0);
    let data = data.with_masks(w, g).unwrap();
    let model = DicNetModel::init(ModelConfig {
        view_dims: data.view_dims(),
        hidden_dims: vec![6],
        latent_dim: 4,
        label_count: 3,
        seed: 21,
    })
    .unwrap();
    (model, data)
}

/// The full weighted objective on a six-sample masked batch passes central
/// finite differences for every parameter.
#[test]
fn full_objective_passes_finite_difference_check() {
    let (model, data) = six_sample_batch();
    let weights = LossWeights::default();
    let batch: Vec<usize> = (0..6).collect();
    let build = |store: &ParamStore| -> Result<(Graph, NodeId)> {
        let (graph, nodes, _) = trainer::batch_loss_graph(
            &model,
            store,
            &data,
            data.labels(),
            data.label_mask(),
            &batch,
            &weights,
        )?;
        Ok((graph, nodes.total))
    };
    let report = finite_diff_check(build, model.params(), &GradCheckConfig::default()).unwrap();
    assert!(report.all_pass(), "worst relative error {}", report.worst());
}

/// Each individual term also passes on its own.
#[test]
fn individual_terms_pass_finite_difference_check() {
    let (model, data) = six_sample_batch();
    let weights = LossWeights::default();
    let batch: Vec<usize> = (0..6).collect();
    for pick in 0..3usize {
        let build = |store: &ParamStore| -> Result<(Graph, NodeId)> {
            let (graph, nodes, _) = trainer::batch_loss_graph(
                &model,
                store,
                &data,
                data.labels(),
                data.label_mask(),
                &batch,
                &weights,
            )?;
            let node = match pick {
                0 => nodes.reconstruction,
                1 => nodes.contrastive,
                _ => nodes.classification,
            };
            Ok((graph, node))
        };
        let report =
            finite_diff_check(build, model.params(), &GradCheckConfig::default()).unwrap();
        assert!(report.all_pass(), "term {pick}: worst {}", report.worst());
    }
}

/// A bottleneck-free single-view autoencoder trained on the reconstruction
/// term alone drives the loss below 1e-3.
#[test]
fn identity_task_autoencoder_converges() {
    let n = 32;
    let dim = 4;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let views = vec![Matrix::from_fn(n, dim, |_, _| rng.gen_range(-1.0..1.0))];
    let data = MultiViewDataset::assemble(
        views,
        Matrix::zeros(n, 2),
        Matrix::ones(n, 1),
        Matrix::zeros(n, 2),
    )
    .unwrap();
    let mut model = DicNetModel::init(ModelConfig {
        view_dims: vec![dim],
        hidden_dims: vec![32],
        latent_dim: dim,
        label_count: 2,
        seed: 4,
    })
    .unwrap();
    let config = TrainConfig {
        batch_size: 8,
        max_epochs: 800,
        stop_threshold: 1e-13,
        weights: LossWeights {
            contrastive: 0.0,
            reconstruction: 1.0,
            temperature: 0.5,
        },
        learning_rate: 3e-3,
        seed: 6,
        mode: TrainMode::Supervised,
        prediction_threshold: 0.5,
    };
    let train_idx: Vec<usize> = (0..n).collect();
    let reports = trainer::train(
        &mut model,
        &data,
        &train_idx,
        &[],
        &config,
        &NullClock,
        None,
    )
    .unwrap();
    let last = reports.last().unwrap();
    assert!(
        last.losses.reconstruction < 1e-3,
        "reconstruction stalled at {} after {} epochs",
        last.losses.reconstruction,
        reports.len()
    );
}
