//! `train`: desk-scale geometry-shaped (or cross-entropy reference) encoder
//! training, emitting a checkpoint and a loss trace.

use std::fmt::Write as _;
use std::path::Path;

use srcgeo_core::data::load_embedding_csv;
use srcgeo_shaping::{train_ce_reference, train_linear_encoder, Checkpoint, TrainConfig};

use crate::fmt::sig9;

/// Flag-level overrides applied on top of the config file (or defaults).
#[derive(Debug, Default, Clone)]
pub struct TrainOverrides {
    pub epochs: Option<usize>,
    pub steps_per_epoch: Option<usize>,
    pub per_class_batch: Option<usize>,
    pub learning_rate: Option<f64>,
    pub seed: Option<u64>,
    pub embed_dim: Option<usize>,
    pub inner_mu: Option<f64>,
    pub inner_lambda: Option<f64>,
}

pub fn load_config(
    config_path: Option<&Path>,
    overrides: &TrainOverrides,
) -> Result<TrainConfig, String> {
    let mut config = match config_path {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| format!("{}: {e}", path.display()))?;
            serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?
        }
        None => TrainConfig::default(),
    };
    if let Some(v) = overrides.epochs {
        config.epochs = v;
    }
    if let Some(v) = overrides.steps_per_epoch {
        config.steps_per_epoch = v;
    }
    if let Some(v) = overrides.per_class_batch {
        config.per_class_batch = v;
    }
    if let Some(v) = overrides.learning_rate {
        config.learning_rate = v;
    }
    if let Some(v) = overrides.seed {
        config.seed = v;
    }
    if let Some(v) = overrides.embed_dim {
        config.embed_dim = Some(v);
    }
    if let Some(v) = overrides.inner_mu {
        config.geometry.inner_mu = v;
    }
    if let Some(v) = overrides.inner_lambda {
        config.geometry.inner_lambda = v;
    }
    Ok(config)
}

pub fn run(
    data_path: &Path,
    config_path: Option<&Path>,
    overrides: &TrainOverrides,
    objective: &str,
    checkpoint_path: &Path,
    trace_path: Option<&Path>,
) -> Result<(), String> {
    let dataset = load_embedding_csv(data_path).map_err(|e| e.to_string())?;
    let config = load_config(config_path, overrides)?;
    let config_echo = serde_json::to_value(&config).map_err(|e| e.to_string())?;

    let (encoder, final_loss, trace_csv) = match objective {
        "geometry" => {
            let outcome = train_linear_encoder(&dataset, &config).map_err(|e| e.to_string())?;
            let final_loss = outcome.trace.last().map_or(0.0, |r| r.total);
            let mut csv = String::from("step,se_loss,anchor_loss,repulsion_loss,total\n");
            for (step, report) in outcome.trace.iter().enumerate() {
                let _ = writeln!(
                    csv,
                    "{step},{},{},{},{}",
                    sig9(report.se_loss),
                    sig9(report.anchor_loss),
                    sig9(report.repulsion_loss),
                    sig9(report.total)
                );
            }
            (outcome.encoder, final_loss, csv)
        }
        "ce" => {
            let outcome = train_ce_reference(&dataset, &config).map_err(|e| e.to_string())?;
            let final_loss = outcome.trace.last().copied().unwrap_or(0.0);
            let mut csv = String::from("step,cross_entropy\n");
            for (step, loss) in outcome.trace.iter().enumerate() {
                let _ = writeln!(csv, "{step},{}", sig9(*loss));
            }
            eprintln!(
                "discarded head training accuracy: {}",
                sig9(outcome.head_train_accuracy)
            );
            (outcome.encoder, final_loss, csv)
        }
        other => return Err(format!("unknown objective {other:?} (use geometry or ce)")),
    };

    let checkpoint = Checkpoint::from_encoder(&encoder, config_echo, final_loss);
    let text = serde_json::to_string_pretty(&checkpoint).map_err(|e| e.to_string())? + "\n";
    std::fs::write(checkpoint_path, text).map_err(|e| e.to_string())?;
    if let Some(path) = trace_path {
        std::fs::write(path, trace_csv).map_err(|e| e.to_string())?;
    }
    eprintln!("final loss: {}", sig9(final_loss));
    Ok(())
}
