//! `generate`: labeled union-of-subspaces train/test CSV pair with exact
//! pairwise span separation.

use std::path::Path;

use srcgeo_core::data::save_embedding_csv;
use srcgeo_lab::{union_of_subspaces_dataset, DatasetParams};

#[allow(clippy::too_many_arguments)]
pub fn run(
    ambient_dim: usize,
    class_count: usize,
    span_dim: usize,
    angle: f64,
    train_per_class: usize,
    test_per_class: usize,
    noise: f64,
    seed: u64,
    output_prefix: &Path,
) -> Result<(), String> {
    let params = DatasetParams {
        ambient_dim,
        class_count,
        span_dim,
        pairwise_angle: angle,
        train_per_class,
        test_per_class,
        noise,
        seed,
    };
    let (train, test) = union_of_subspaces_dataset(&params).map_err(|e| e.to_string())?;

    let train_path = suffixed(output_prefix, "_train.csv");
    let test_path = suffixed(output_prefix, "_test.csv");
    save_embedding_csv(&train_path, &train).map_err(|e| e.to_string())?;
    save_embedding_csv(&test_path, &test).map_err(|e| e.to_string())?;
    println!(
        "wrote {} ({} samples) and {} ({} samples)",
        train_path.display(),
        train.len(),
        test_path.display(),
        test.len()
    );
    Ok(())
}

fn suffixed(prefix: &Path, suffix: &str) -> std::path::PathBuf {
    let mut name = prefix.as_os_str().to_os_string();
    name.push(suffix);
    std::path::PathBuf::from(name)
}
