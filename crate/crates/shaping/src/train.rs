//! Gradient training of the affine encoder on the geometry objective, plus
//! the cross-entropy reference encoder trained under the same protocol.
//!
//! Gradient convention: the self-expression coefficients and the per-class
//! repulsion extractors are computed from the current batch and then frozen;
//! the gradient of the resulting objective flows through the embeddings and
//! the normalization map only. A finite-difference mode differentiates the
//! identical frozen objective and serves as the oracle for the analytic path.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use srcgeo_core::data::LabeledEmbeddingSet;
use srcgeo_core::span::{center_columns, numerical_rank};
use srcgeo_core::svd::thin_svd;

use crate::encoder::{EncoderError, LinearEncoder};
use crate::losses::{
    masked_ridge_solve, repulsion_loss, se_loss, variance_anchor_loss, GeometryConfig,
    GeometryLossReport, LossError, MaskedRidgeProblem,
};

/// Central-difference step of the finite-difference gradient oracle.
pub const FD_STEP: f64 = 1e-5;

/// Training aborts when the batch loss exceeds this.
pub const DIVERGENCE_LIMIT: f64 = 1e6;

// Adam moment constants. The raw gradient scales of the three loss terms
// differ by orders of magnitude (the frozen repulsion extractors carry
// inverse singular values), so a fixed-step update cannot track all of
// them; moment-normalized steps with fixed seeds stay fully deterministic.
const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

/// Adam state for one parameter block.
struct AdamState {
    first: DMatrix<f64>,
    second: DMatrix<f64>,
    step: usize,
}

impl AdamState {
    fn new(rows: usize, cols: usize) -> Self {
        AdamState {
            first: DMatrix::zeros(rows, cols),
            second: DMatrix::zeros(rows, cols),
            step: 0,
        }
    }

    fn update(&mut self, gradient: &DMatrix<f64>, learning_rate: f64) -> DMatrix<f64> {
        self.step += 1;
        self.first = &self.first * ADAM_BETA1 + gradient * (1.0 - ADAM_BETA1);
        let squared = gradient.component_mul(gradient);
        self.second = &self.second * ADAM_BETA2 + squared * (1.0 - ADAM_BETA2);
        let bias1 = 1.0 - ADAM_BETA1.powi(self.step as i32);
        let bias2 = 1.0 - ADAM_BETA2.powi(self.step as i32);
        DMatrix::from_fn(gradient.nrows(), gradient.ncols(), |i, j| {
            let m_hat = self.first[(i, j)] / bias1;
            let v_hat = self.second[(i, j)] / bias2;
            learning_rate * m_hat / (v_hat.sqrt() + ADAM_EPS)
        })
    }
}

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("class {0} has no samples")]
    EmptyClass(usize),
    #[error(transparent)]
    Loss(#[from] LossError),
    #[error(transparent)]
    Encoder(#[from] EncoderError),
    #[error("numerical failure in {component} at step {step}")]
    NumericalFailure { component: String, step: usize },
    #[error("training diverged at step {step}: loss {loss:.3e}")]
    Diverged { step: usize, loss: f64 },
}

/// How the parameter gradient is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GradientMode {
    /// Closed-form gradient of the frozen objective.
    AnalyticStopGrad,
    /// Central differences on every parameter; oracle, desk scale only.
    FiniteDifference,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub steps_per_epoch: usize,
    /// Samples per class in every balanced batch; at least 2.
    pub per_class_batch: usize,
    pub learning_rate: f64,
    /// Decoupled weight decay on the encoder weight matrix.
    #[serde(default)]
    pub weight_decay: f64,
    pub seed: u64,
    /// Output dimension; defaults to the input dimension.
    pub embed_dim: Option<usize>,
    pub geometry: GeometryConfig,
    pub gradient_mode: GradientMode,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 10,
            steps_per_epoch: 50,
            per_class_batch: 12,
            learning_rate: 0.01,
            weight_decay: 0.0,
            seed: 0,
            embed_dim: None,
            geometry: GeometryConfig::default(),
            gradient_mode: GradientMode::AnalyticStopGrad,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<(), TrainError> {
        if self.per_class_batch < 2 {
            return Err(TrainError::InvalidConfig(format!(
                "per_class_batch must be at least 2, got {}",
                self.per_class_batch
            )));
        }
        if self.learning_rate < 0.0 || !self.learning_rate.is_finite() {
            return Err(TrainError::InvalidConfig(format!(
                "learning_rate must be finite and non-negative, got {}",
                self.learning_rate
            )));
        }
        Ok(())
    }
}

/// Class-balanced batch index sequence: every batch holds exactly `m`
/// indices per class, sampling with replacement when a class is smaller
/// than `m`. Deterministic given the seed.
pub fn balanced_batches(
    labels: &[usize],
    per_class: usize,
    steps: usize,
    seed: u64,
) -> Result<Vec<Vec<usize>>, TrainError> {
    let class_count = labels.iter().copied().max().unwrap_or(0);
    let mut index_sets: Vec<Vec<usize>> = vec![Vec::new(); class_count];
    for (i, &l) in labels.iter().enumerate() {
        index_sets[l - 1].push(i);
    }
    for (k, set) in index_sets.iter().enumerate() {
        if set.is_empty() {
            return Err(TrainError::EmptyClass(k + 1));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut batches = Vec::with_capacity(steps);
    for _ in 0..steps {
        let mut batch = Vec::with_capacity(per_class * class_count);
        for set in &index_sets {
            let mut drawn = Vec::with_capacity(per_class);
            if set.len() >= per_class {
                // partial Fisher-Yates draw without replacement
                let mut pool = set.clone();
                for slot in 0..per_class {
                    let pick = rng.gen_range(slot..pool.len());
                    pool.swap(slot, pick);
                    drawn.push(pool[slot]);
                }
            } else {
                for _ in 0..per_class {
                    drawn.push(set[rng.gen_range(0..set.len())]);
                }
            }
            // canonical order inside the class: only the drawn multiset matters
            drawn.sort_unstable();
            batch.extend(drawn);
        }
        batches.push(batch);
    }
    Ok(batches)
}

/// Per-class frozen repulsion extractor: batch columns of the class and the
/// matrix `W_k` with `Z_k_centered * W_k = U_k` at the linearization point.
struct RepExtractor {
    columns: Vec<usize>,
    map: DMatrix<f64>,
}

/// Quantities frozen before differentiation: the self-expression
/// coefficients and the repulsion extractors.
struct FrozenParts {
    coefficients: DMatrix<f64>,
    extractors: Vec<RepExtractor>,
    pair_count: usize,
}

fn frozen_parts(
    embeddings: &DMatrix<f64>,
    labels: &[usize],
    config: &GeometryConfig,
) -> Result<FrozenParts, TrainError> {
    let problem = MaskedRidgeProblem::new(
        embeddings.clone(),
        labels.to_vec(),
        config.inner_lambda,
        config.inner_mu,
    )?;
    let coefficients = masked_ridge_solve(&problem);

    let mut classes: Vec<usize> = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    let mut extractors = Vec::new();
    for &class in &classes {
        let columns: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if columns.len() < 2 {
            continue;
        }
        let mut block = DMatrix::zeros(embeddings.nrows(), columns.len());
        for (j, &i) in columns.iter().enumerate() {
            block.set_column(j, &embeddings.column(i));
        }
        let centered = center_columns(&block);
        let svd = thin_svd(&centered);
        let rank = numerical_rank(&svd.singular_values);
        let start = if config.rep_drop_top { 1.min(rank) } else { 0 };
        let take = config.rep_dim.min(rank - start);
        if take == 0 {
            continue;
        }
        let mut map = DMatrix::zeros(columns.len(), take);
        for d in 0..take {
            let sigma = svd.singular_values[start + d];
            map.set_column(d, &(svd.v.column(start + d) / sigma));
        }
        extractors.push(RepExtractor { columns, map });
    }
    let defined = extractors.len();
    let pair_count = defined * defined.saturating_sub(1) / 2;
    Ok(FrozenParts {
        coefficients,
        extractors,
        pair_count,
    })
}

fn centered_block(embeddings: &DMatrix<f64>, columns: &[usize]) -> DMatrix<f64> {
    let mut block = DMatrix::zeros(embeddings.nrows(), columns.len());
    for (j, &i) in columns.iter().enumerate() {
        block.set_column(j, &embeddings.column(i));
    }
    center_columns(&block)
}

/// Value of the objective with the frozen coefficients and extractors, as a
/// function of fresh embeddings.
fn frozen_objective(
    embeddings: &DMatrix<f64>,
    frozen: &FrozenParts,
    config: &GeometryConfig,
) -> f64 {
    let se = se_loss(embeddings, &frozen.coefficients);
    let anchor = variance_anchor_loss(embeddings, config.anchor_c);
    let mut rep = 0.0;
    if frozen.pair_count > 0 {
        let projected: Vec<DMatrix<f64>> = frozen
            .extractors
            .iter()
            .map(|e| centered_block(embeddings, &e.columns) * &e.map)
            .collect();
        for k in 0..projected.len() {
            for l in (k + 1)..projected.len() {
                rep += (projected[k].transpose() * &projected[l]).norm_squared();
            }
        }
        rep /= frozen.pair_count as f64;
    }
    config.lambda_se * se + config.beta_anchor * anchor + config.lambda_rep * rep
}

/// Analytic gradient of the frozen objective with respect to the embedding
/// matrix.
fn frozen_objective_grad_z(
    embeddings: &DMatrix<f64>,
    frozen: &FrozenParts,
    config: &GeometryConfig,
) -> DMatrix<f64> {
    let (p, n) = embeddings.shape();
    let mut grad = DMatrix::zeros(p, n);

    // self-expression: d/dZ ||Z (I - C)||_F^2 = 2 Z (I - C)(I - C)^T
    if config.lambda_se != 0.0 {
        let a = DMatrix::<f64>::identity(n, n) - &frozen.coefficients;
        grad += embeddings * (&a * a.transpose()) * (2.0 * config.lambda_se);
    }

    // variance anchor: hinge on per-coordinate stds
    if config.beta_anchor != 0.0 {
        let floor = config.anchor_c / (p as f64).sqrt();
        for row in 0..p {
            let mut mean = 0.0;
            for j in 0..n {
                mean += embeddings[(row, j)];
            }
            mean /= n as f64;
            let mut var = 0.0;
            for j in 0..n {
                let d = embeddings[(row, j)] - mean;
                var += d * d;
            }
            let std = (var / n as f64).sqrt();
            if std >= floor || std == 0.0 {
                // inactive hinge, or the non-differentiable collapsed point
                // where we take the zero subgradient
                continue;
            }
            let scale = -config.beta_anchor / (p as f64 * n as f64 * std);
            for j in 0..n {
                grad[(row, j)] += scale * (embeddings[(row, j)] - mean);
            }
        }
    }

    // repulsion with frozen extractors
    if config.lambda_rep != 0.0 && frozen.pair_count > 0 {
        let scale = 2.0 * config.lambda_rep / frozen.pair_count as f64;
        let projected: Vec<DMatrix<f64>> = frozen
            .extractors
            .iter()
            .map(|e| centered_block(embeddings, &e.columns) * &e.map)
            .collect();
        for k in 0..projected.len() {
            for l in (k + 1)..projected.len() {
                let cross = projected[k].transpose() * &projected[l];
                // d/dZt_k ||(Zt_k W_k)^T (Zt_l W_l)||^2
                let gk = &projected[l] * cross.transpose() * frozen.extractors[k].map.transpose();
                let gl = &projected[k] * &cross * frozen.extractors[l].map.transpose();
                accumulate_centered_grad(&mut grad, &frozen.extractors[k].columns, &gk, scale);
                accumulate_centered_grad(&mut grad, &frozen.extractors[l].columns, &gl, scale);
            }
        }
    }

    grad
}

/// Adjoint of per-class centering: multiply by `I - (1/n_k) 1 1^T` and
/// scatter back into the batch gradient.
fn accumulate_centered_grad(
    grad: &mut DMatrix<f64>,
    columns: &[usize],
    block_grad: &DMatrix<f64>,
    scale: f64,
) {
    let nk = columns.len() as f64;
    let mean = block_grad.column_sum() / nk;
    for (j, &col) in columns.iter().enumerate() {
        let adjusted = block_grad.column(j) - &mean;
        let mut target = grad.column_mut(col);
        target += adjusted * scale;
    }
}

/// Backpropagates an embedding-space gradient through normalization and the
/// affine map: `dL/dv = (g - (z . g) z) / ||v||`, then `dL/dW = dL/dv x^T`.
fn backprop_affine(
    grad_z: &DMatrix<f64>,
    embeddings: &DMatrix<f64>,
    affine: &DMatrix<f64>,
    inputs: &DMatrix<f64>,
) -> (DMatrix<f64>, DVector<f64>) {
    let (p, n) = embeddings.shape();
    let mut grad_v = DMatrix::zeros(p, n);
    for j in 0..n {
        let z = embeddings.column(j);
        let g = grad_z.column(j);
        let vnorm = affine.column(j).norm();
        let tangent = (&g - &z * z.dot(&g)) / vnorm;
        grad_v.set_column(j, &tangent);
    }
    let grad_w = &grad_v * inputs.transpose();
    let grad_b = grad_v.column_sum();
    (grad_w, grad_b)
}

/// Parameter gradient of the frozen geometry objective on one raw batch,
/// by the analytic path or by central finite differences on the identical
/// frozen objective.
pub fn objective_gradient(
    encoder: &LinearEncoder,
    raw_batch: &DMatrix<f64>,
    labels: &[usize],
    config: &GeometryConfig,
    mode: GradientMode,
) -> Result<(DMatrix<f64>, DVector<f64>, GeometryLossReport), TrainError> {
    let affine = encoder.affine_batch(raw_batch)?;
    let embeddings = encoder.forward_batch(raw_batch)?;
    let frozen = frozen_parts(&embeddings, labels, config)?;

    let se = se_loss(&embeddings, &frozen.coefficients);
    let anchor = variance_anchor_loss(&embeddings, config.anchor_c);
    let (rep, undefined) = repulsion_loss(&embeddings, labels, config.rep_dim, config.rep_drop_top)?;
    let report = GeometryLossReport {
        se_loss: se,
        anchor_loss: anchor,
        repulsion_loss: rep,
        total: config.lambda_se * se + config.beta_anchor * anchor + config.lambda_rep * rep,
        lambda_se: config.lambda_se,
        beta_anchor: config.beta_anchor,
        lambda_rep: config.lambda_rep,
        anchor_c: config.anchor_c,
        rep_dim: config.rep_dim,
        repulsion_undefined: undefined,
    };

    let (grad_w, grad_b) = match mode {
        GradientMode::AnalyticStopGrad => {
            let grad_z = frozen_objective_grad_z(&embeddings, &frozen, config);
            backprop_affine(&grad_z, &embeddings, &affine, raw_batch)
        }
        GradientMode::FiniteDifference => {
            let eval = |enc: &LinearEncoder| -> Result<f64, TrainError> {
                let z = enc.forward_batch(raw_batch)?;
                Ok(frozen_objective(&z, &frozen, config))
            };
            let (p, d) = (encoder.embed_dim(), encoder.input_dim());
            let mut grad_w = DMatrix::zeros(p, d);
            for i in 0..p {
                for j in 0..d {
                    let mut plus = encoder.clone();
                    let mut minus = encoder.clone();
                    let mut wp = plus.weight().clone();
                    let mut wm = minus.weight().clone();
                    wp[(i, j)] += FD_STEP;
                    wm[(i, j)] -= FD_STEP;
                    plus = LinearEncoder::new(wp, plus.bias().clone())?;
                    minus = LinearEncoder::new(wm, minus.bias().clone())?;
                    grad_w[(i, j)] = (eval(&plus)? - eval(&minus)?) / (2.0 * FD_STEP);
                }
            }
            let mut grad_b = DVector::zeros(p);
            for i in 0..p {
                let mut bp = encoder.bias().clone();
                let mut bm = encoder.bias().clone();
                bp[i] += FD_STEP;
                bm[i] -= FD_STEP;
                let plus = LinearEncoder::new(encoder.weight().clone(), bp)?;
                let minus = LinearEncoder::new(encoder.weight().clone(), bm)?;
                grad_b[i] = (eval(&plus)? - eval(&minus)?) / (2.0 * FD_STEP);
            }
            (grad_w, grad_b)
        }
    };

    if grad_w.iter().any(|v| !v.is_finite()) {
        return Err(TrainError::NumericalFailure {
            component: "weight gradient".into(),
            step: 0,
        });
    }
    if grad_b.iter().any(|v| !v.is_finite()) {
        return Err(TrainError::NumericalFailure {
            component: "bias gradient".into(),
            step: 0,
        });
    }
    Ok((grad_w, grad_b, report))
}

/// Trained encoder plus the per-step loss trace.
#[derive(Debug)]
pub struct TrainOutcome {
    pub encoder: LinearEncoder,
    pub trace: Vec<GeometryLossReport>,
}

fn init_encoder(input_dim: usize, embed_dim: usize, rng: &mut ChaCha8Rng) -> LinearEncoder {
    let scale = 1.0 / (input_dim as f64).sqrt();
    let weight = DMatrix::from_fn(embed_dim, input_dim, |_, _| rng.gen_range(-scale..scale));
    let bias = DVector::zeros(embed_dim);
    LinearEncoder::new(weight, bias).expect("finite init")
}

/// Fixed-budget gradient descent on the geometry objective over
/// class-balanced batches. The returned encoder is frozen; inference never
/// updates it.
pub fn train_linear_encoder(
    dataset: &LabeledEmbeddingSet,
    config: &TrainConfig,
) -> Result<TrainOutcome, TrainError> {
    config.validate()?;
    let features = dataset.embeddings();
    let input_dim = features.nrows();
    let embed_dim = config.embed_dim.unwrap_or(input_dim);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut encoder = init_encoder(input_dim, embed_dim, &mut rng);

    let steps = config.epochs * config.steps_per_epoch;
    let batches = balanced_batches(
        dataset.labels(),
        config.per_class_batch,
        steps,
        rng.gen::<u64>(),
    )?;

    let mut trace = Vec::with_capacity(steps);
    let mut adam_w = AdamState::new(embed_dim, input_dim);
    let mut adam_b = AdamState::new(embed_dim, 1);
    for (step, batch) in batches.iter().enumerate() {
        let mut raw = DMatrix::zeros(input_dim, batch.len());
        let mut labels = Vec::with_capacity(batch.len());
        for (j, &i) in batch.iter().enumerate() {
            raw.set_column(j, &features.column(i));
            labels.push(dataset.label(i));
        }
        let (grad_w, grad_b, report) =
            objective_gradient(&encoder, &raw, &labels, &config.geometry, config.gradient_mode)
                .map_err(|e| match e {
                    TrainError::NumericalFailure { component, .. } => {
                        TrainError::NumericalFailure { component, step }
                    }
                    other => other,
                })?;
        if !report.total.is_finite() || report.total > DIVERGENCE_LIMIT {
            return Err(TrainError::Diverged {
                step,
                loss: report.total,
            });
        }
        trace.push(report);
        let decay = 1.0 - config.learning_rate * config.weight_decay;
        let weight = encoder.weight() * decay - adam_w.update(&grad_w, config.learning_rate);
        let bias_step = adam_b.update(&DMatrix::from_column_slice(embed_dim, 1, grad_b.as_slice()), config.learning_rate);
        let bias = encoder.bias() - DVector::from_column_slice(bias_step.as_slice());
        encoder = LinearEncoder::new(weight, bias)?;
    }
    Ok(TrainOutcome { encoder, trace })
}

/// Reference encoder trained with a linear softmax head by cross-entropy;
/// the head is discarded and only the embedding map is returned.
#[derive(Debug)]
pub struct CeOutcome {
    pub encoder: LinearEncoder,
    /// Training accuracy of the discarded head on the full dataset.
    pub head_train_accuracy: f64,
    pub trace: Vec<f64>,
}

pub fn train_ce_reference(
    dataset: &LabeledEmbeddingSet,
    config: &TrainConfig,
) -> Result<CeOutcome, TrainError> {
    config.validate()?;
    let class_count = dataset.class_count();
    if class_count < 2 {
        return Err(TrainError::InvalidConfig(
            "cross-entropy reference needs at least 2 classes".into(),
        ));
    }
    let features = dataset.embeddings();
    let input_dim = features.nrows();
    let embed_dim = config.embed_dim.unwrap_or(input_dim);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut encoder = init_encoder(input_dim, embed_dim, &mut rng);
    let head_scale = 1.0 / (embed_dim as f64).sqrt();
    let mut head = DMatrix::from_fn(class_count, embed_dim, |_, _| {
        rng.gen_range(-head_scale..head_scale)
    });
    let mut head_bias = DVector::zeros(class_count);

    let steps = config.epochs * config.steps_per_epoch;
    let batches = balanced_batches(
        dataset.labels(),
        config.per_class_batch,
        steps,
        rng.gen::<u64>(),
    )?;

    let mut trace = Vec::with_capacity(steps);
    let mut adam_w = AdamState::new(embed_dim, input_dim);
    let mut adam_b = AdamState::new(embed_dim, 1);
    let mut adam_head = AdamState::new(class_count, embed_dim);
    let mut adam_head_bias = AdamState::new(class_count, 1);
    for (step, batch) in batches.iter().enumerate() {
        let n = batch.len();
        let mut raw = DMatrix::zeros(input_dim, n);
        let mut labels = Vec::with_capacity(n);
        for (j, &i) in batch.iter().enumerate() {
            raw.set_column(j, &features.column(i));
            labels.push(dataset.label(i));
        }
        let affine = encoder.affine_batch(&raw)?;
        let embeddings = encoder.forward_batch(&raw)?;
        let logits = &head * &embeddings + broadcast(&head_bias, n);

        let mut loss = 0.0;
        let mut dlogits = DMatrix::zeros(class_count, n);
        for j in 0..n {
            let col = logits.column(j);
            let max = col.max();
            let exps: Vec<f64> = col.iter().map(|&v| (v - max).exp()).collect();
            let sum: f64 = exps.iter().sum();
            let y = labels[j] - 1;
            loss += -(exps[y] / sum).ln();
            for k in 0..class_count {
                let softmax = exps[k] / sum;
                dlogits[(k, j)] = (softmax - if k == y { 1.0 } else { 0.0 }) / n as f64;
            }
        }
        loss /= n as f64;
        if !loss.is_finite() || loss > DIVERGENCE_LIMIT {
            return Err(TrainError::Diverged { step, loss });
        }
        trace.push(loss);

        let grad_head = &dlogits * embeddings.transpose();
        let grad_head_bias = dlogits.column_sum();
        let grad_z = head.transpose() * &dlogits;
        let (grad_w, grad_b) = backprop_affine(&grad_z, &embeddings, &affine, &raw);

        head -= adam_head.update(&grad_head, config.learning_rate);
        let head_bias_step = adam_head_bias.update(
            &DMatrix::from_column_slice(class_count, 1, grad_head_bias.as_slice()),
            config.learning_rate,
        );
        head_bias -= DVector::from_column_slice(head_bias_step.as_slice());
        let decay = 1.0 - config.learning_rate * config.weight_decay;
        let weight = encoder.weight() * decay - adam_w.update(&grad_w, config.learning_rate);
        let bias_step = adam_b.update(
            &DMatrix::from_column_slice(embed_dim, 1, grad_b.as_slice()),
            config.learning_rate,
        );
        let bias = encoder.bias() - DVector::from_column_slice(bias_step.as_slice());
        encoder = LinearEncoder::new(weight, bias)?;
    }

    // training accuracy of the head before it is discarded
    let embeddings = encoder.forward_batch(features)?;
    let logits = &head * &embeddings + broadcast(&head_bias, dataset.len());
    let mut correct = 0usize;
    for j in 0..dataset.len() {
        let col = logits.column(j);
        let mut best = 0;
        for k in 1..class_count {
            if col[k] > col[best] {
                best = k;
            }
        }
        if best + 1 == dataset.label(j) {
            correct += 1;
        }
    }
    Ok(CeOutcome {
        encoder,
        head_train_accuracy: correct as f64 / dataset.len() as f64,
        trace,
    })
}

fn broadcast(v: &DVector<f64>, n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(v.len(), n, |i, _| v[i])
}
