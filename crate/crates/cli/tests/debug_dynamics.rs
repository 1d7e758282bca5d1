//! Trajectory instrumentation for the shaping recipe. Ignored by default.

use srcgeo_core::data::{l2_normalize, LabeledEmbeddingSet};
use srcgeo_core::metrics::cohesion_max;
use srcgeo_lab::{union_of_subspaces_dataset, DatasetParams};
use srcgeo_shaping::{train_linear_encoder, GeometryConfig, TrainConfig};
use srcgeo_sparse::evaluate;

fn embed(
    encoder: &srcgeo_shaping::LinearEncoder,
    set: &LabeledEmbeddingSet,
) -> LabeledEmbeddingSet {
    let z = encoder.forward_batch(set.embeddings()).unwrap();
    let labels: Vec<i64> = set.labels().iter().map(|&l| set.original_label(l)).collect();
    l2_normalize(&LabeledEmbeddingSet::from_raw_labels(z, &labels).unwrap()).unwrap()
}

fn probe(encoder: &srcgeo_shaping::LinearEncoder, train: &LabeledEmbeddingSet, test: &LabeledEmbeddingSet, tag: &str) {
    let dict = embed(encoder, train);
    let test_e = embed(encoder, test);
    let report = evaluate(&dict, &test_e, 5).unwrap();
    let train_report = evaluate(&dict, &dict, 5).unwrap();
    let d = 2;
    let bases: Vec<_> = (1..=dict.class_count())
        .map(|k| {
            srcgeo_core::span::span_basis(
                &dict.class_matrix(k),
                srcgeo_core::span::BasisMode::Centered { dim: Some(d), drop_top: false },
                k,
            )
            .unwrap()
        })
        .collect();
    let coh = cohesion_max(&bases).unwrap_or(f64::NAN);
    let effrank = (1..=dict.class_count())
        .map(|k| srcgeo_core::metrics::effective_rank(&dict.class_matrix(k)).unwrap())
        .sum::<f64>()
        / dict.class_count() as f64;
    println!(
        "{tag}: TRAIN acc {:.3} | test acc {:.3} margin {:.4} effrank {:.3} cohesion {:.4}",
        train_report.accuracy, report.accuracy, report.margin_mean, effrank, coh
    );
}

#[test]
#[ignore]
fn trajectory() {
    for &(noise, train_n) in &[(0.42, 200usize), (0.5, 200)] {
        let params = DatasetParams {
            ambient_dim: 48,
            class_count: 3,
            span_dim: 3,
            pairwise_angle: 0.15,
            train_per_class: train_n,
            test_per_class: 60,
            noise,
            seed: 4,
        };
        let (train, test) = union_of_subspaces_dataset(&params).unwrap();
        let raw_dict = l2_normalize(&train).unwrap();
        let raw_report = evaluate(&raw_dict, &test, 5).unwrap();
        println!(
            "== noise {noise} train {train_n}: raw acc {:.3} margin {:.4}",
            raw_report.accuracy, raw_report.margin_mean
        );

        // isolate the repulsion path: can it optimize at all?
        for &(lse, beta, lrep) in &[(0.0, 0.0, 1.0), (0.0, 1.0, 1.0), (1.0, 20.0, 30.0)] {
            for &lr in &[0.01, 0.03] {
                let config = TrainConfig {
                    epochs: 10,
                    steps_per_epoch: 50,
                    per_class_batch: 12,
                    learning_rate: lr,
                    seed: 0,
                    embed_dim: Some(12),
                    geometry: GeometryConfig {
                        lambda_se: lse,
                        beta_anchor: beta,
                        lambda_rep: lrep,
                        inner_lambda: 0.3,
                        inner_mu: 10.0,
                        anchor_c: 0.5,
                        rep_dim: 2,
                        rep_drop_top: false,
                    },
                    ..TrainConfig::default()
                };
                let outcome = train_linear_encoder(&train, &config).unwrap();
                let first = &outcome.trace[0];
                let last = outcome.trace.last().unwrap();
                println!(
                    "weights ({lse},{beta},{lrep}) lr {lr}: rep {:.4} -> {:.4} (se {:.4} anchor {:.4})",
                    first.repulsion_loss, last.repulsion_loss, last.se_loss, last.anchor_loss
                );
                probe(&outcome.encoder, &train, &test, "  eval");
            }
        }
    }
}
