//! `classify`: fixed residual-rule predictions for every test point.

use std::fmt::Write as _;
use std::path::Path;

use srcgeo_core::data::{l2_normalize, load_embedding_csv, partition_by_class};
use srcgeo_sparse::classify_point;

use crate::fmt::sig9;

pub fn run(
    dictionary_path: &Path,
    test_path: &Path,
    sparsity: usize,
    output_path: &Path,
) -> Result<(), String> {
    let dictionary = load_embedding_csv(dictionary_path).map_err(|e| e.to_string())?;
    let dictionary = l2_normalize(&dictionary).map_err(|e| e.to_string())?;
    let test = load_embedding_csv(test_path).map_err(|e| e.to_string())?;
    if test.dim() != dictionary.dim() {
        return Err(format!(
            "dictionary dimension {} does not match test dimension {}",
            dictionary.dim(),
            test.dim()
        ));
    }
    let partition = partition_by_class(&dictionary);

    let mut out = String::from("index,predicted,margin");
    for class in 1..=dictionary.class_count() {
        let _ = write!(out, ",residual_{}", dictionary.original_label(class));
    }
    out.push('\n');

    for j in 0..test.len() {
        let target = test.column(j);
        let (_code, profile) =
            classify_point(&dictionary, &partition, &target, sparsity).map_err(|e| {
                format!("test point {j}: {e}")
            })?;
        let predicted = dictionary.original_label(profile.predicted_label);
        let _ = write!(out, "{j},{predicted},{}", sig9(profile.margin_top2));
        for r in &profile.residuals {
            let _ = write!(out, ",{}", sig9(*r));
        }
        out.push('\n');
    }

    std::fs::write(output_path, out).map_err(|e| e.to_string())?;
    Ok(())
}
