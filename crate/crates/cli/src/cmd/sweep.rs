//! `sweep`: the response-surface harness. Trains one geometry-shaped
//! encoder per (mu, lambda, seed) cell, evaluates it under the fixed
//! residual rule, and appends geometry diagnostics.
//!
//! Cells are independent; they run on a worker pool and the rows are merged
//! in sorted order, so the output is byte-identical regardless of schedule.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;

use srcgeo_core::data::{l2_normalize, load_embedding_csv, LabeledEmbeddingSet};
use srcgeo_core::metrics::cohesion_max;
use srcgeo_shaping::{train_linear_encoder, TrainConfig};
use srcgeo_sparse::evaluate;

use crate::cmd::{centered_bases, default_diag_dim, mean_effective_rank};
use crate::fmt::sig9;

pub const SWEEP_HEADER: &str =
    "mu,lambda,seed,accuracy,balanced_accuracy,margin_mean,margin_median,effrank_mean,cohesion_max";

struct CellRow {
    mu: f64,
    lambda: f64,
    seed: u64,
    fields: [f64; 6],
}

fn run_cell(
    train_set: &LabeledEmbeddingSet,
    test_set: &LabeledEmbeddingSet,
    base: &TrainConfig,
    mu: f64,
    lambda: f64,
    seed: u64,
    sparsity: usize,
    diag_dim: Option<usize>,
) -> Result<CellRow, String> {
    let mut config = base.clone();
    config.geometry.inner_mu = mu;
    config.geometry.inner_lambda = lambda;
    config.seed = seed;

    let outcome = train_linear_encoder(train_set, &config).map_err(|e| e.to_string())?;
    let embed = |set: &LabeledEmbeddingSet| -> Result<LabeledEmbeddingSet, String> {
        let z = outcome
            .encoder
            .forward_batch(set.embeddings())
            .map_err(|e| e.to_string())?;
        let embedded = LabeledEmbeddingSet::from_raw_labels(
            z,
            &set
                .labels()
                .iter()
                .map(|&l| set.original_label(l))
                .collect::<Vec<_>>(),
        )
        .map_err(|e| e.to_string())?;
        l2_normalize(&embedded).map_err(|e| e.to_string())
    };
    let dictionary = embed(train_set)?;
    let test = embed(test_set)?;

    let report = evaluate(&dictionary, &test, sparsity).map_err(|e| e.to_string())?;
    let effrank = mean_effective_rank(&dictionary)?;
    let d_used = match diag_dim {
        Some(d) => d,
        None => default_diag_dim(&dictionary)?,
    };
    let bases = centered_bases(&dictionary, d_used)?;
    let cohesion = cohesion_max(&bases).map_err(|e| e.to_string())?;

    Ok(CellRow {
        mu,
        lambda,
        seed,
        fields: [
            report.accuracy,
            report.balanced_accuracy,
            report.margin_mean,
            report.margin_median,
            effrank,
            cohesion,
        ],
    })
}

#[allow(clippy::too_many_arguments)]
pub fn run(
    train_path: &Path,
    test_path: &Path,
    mu_grid: &[f64],
    lambda_grid: &[f64],
    seeds: &[u64],
    sparsity: usize,
    diag_dim: Option<usize>,
    base_config: &TrainConfig,
    output_path: &Path,
) -> Result<(), String> {
    if mu_grid.is_empty() || lambda_grid.is_empty() || seeds.is_empty() {
        return Err("mu, lambda, and seed grids must be non-empty".to_string());
    }
    let train_set = load_embedding_csv(train_path).map_err(|e| e.to_string())?;
    let test_set = load_embedding_csv(test_path).map_err(|e| e.to_string())?;

    let mut cells = Vec::new();
    for &mu in mu_grid {
        for &lambda in lambda_grid {
            for &seed in seeds {
                cells.push((mu, lambda, seed));
            }
        }
    }

    let mut rows: Vec<CellRow> = cells
        .par_iter()
        .map(|&(mu, lambda, seed)| {
            run_cell(
                &train_set, &test_set, base_config, mu, lambda, seed, sparsity, diag_dim,
            )
            .map_err(|e| format!("cell (mu={mu}, lambda={lambda}, seed={seed}): {e}"))
        })
        .collect::<Result<Vec<_>, String>>()?;

    rows.sort_by(|a, b| {
        a.mu.partial_cmp(&b.mu)
            .unwrap()
            .then(a.lambda.partial_cmp(&b.lambda).unwrap())
            .then(a.seed.cmp(&b.seed))
    });

    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for row in &rows {
        let _ = write!(out, "{},{},{}", sig9(row.mu), sig9(row.lambda), row.seed);
        for field in &row.fields {
            let _ = write!(out, ",{}", sig9(*field));
        }
        out.push('\n');
    }
    std::fs::write(output_path, out).map_err(|e| e.to_string())?;
    eprintln!("{} sweep rows written to {}", rows.len(), output_path.display());
    Ok(())
}
