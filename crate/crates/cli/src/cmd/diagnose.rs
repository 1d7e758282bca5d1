//! `diagnose`: span-utilization and inter-class alignment diagnostics of a
//! labeled embedding set.

use std::path::Path;

use serde_json::json;

use srcgeo_core::data::{l2_normalize, load_embedding_csv};
use srcgeo_core::metrics::{cohesion_max, effective_rank};
use srcgeo_core::span::principal_angles;

use crate::cmd::{centered_bases, default_diag_dim};
use crate::fmt::sig9_round;

pub fn run(
    embeddings_path: &Path,
    dim: Option<usize>,
    output_path: &Path,
) -> Result<(), String> {
    let set = load_embedding_csv(embeddings_path).map_err(|e| e.to_string())?;
    let set = l2_normalize(&set).map_err(|e| e.to_string())?;

    let d_used = match dim {
        Some(d) => d,
        None => default_diag_dim(&set)?,
    };
    let bases = centered_bases(&set, d_used)?;
    if bases.len() < 2 {
        return Err("need at least two classes with two or more samples".to_string());
    }

    let mut per_class_effrank = Vec::new();
    for class in 1..=set.class_count() {
        let matrix = set.class_matrix(class);
        let value = if matrix.ncols() >= 2 {
            Some(sig9_round(effective_rank(&matrix).map_err(|e| e.to_string())?))
        } else {
            None
        };
        per_class_effrank.push(json!({
            "label": set.original_label(class),
            "effective_rank": value,
        }));
    }
    let effrank_mean = crate::cmd::mean_effective_rank(&set)?;

    let k = bases.len();
    let mut theta_min = vec![vec![0.0; k]; k];
    for a in 0..k {
        for b in (a + 1)..k {
            let theta = principal_angles(&bases[a], &bases[b])
                .map_err(|e| e.to_string())?
                .theta_min()
                .ok_or("trivial basis")?;
            theta_min[a][b] = sig9_round(theta);
            theta_min[b][a] = theta_min[a][b];
        }
    }
    let cohesion = cohesion_max(&bases).map_err(|e| e.to_string())?;

    let report = json!({
        "diag_dim": d_used,
        "class_count": set.class_count(),
        "samples": set.len(),
        "embedding_dim": set.dim(),
        "per_class": per_class_effrank,
        "effective_rank_mean": sig9_round(effrank_mean),
        "cohesion_max": sig9_round(cohesion),
        "basis_labels": bases.iter().map(|b| set.original_label(b.class_id)).collect::<Vec<_>>(),
        "pairwise_theta_min": theta_min,
    });
    let text = serde_json::to_string_pretty(&report).map_err(|e| e.to_string())?;
    std::fs::write(output_path, text + "\n").map_err(|e| e.to_string())?;
    Ok(())
}
