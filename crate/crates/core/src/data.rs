//! Labeled embedding sets: CSV ingestion, normalization, class partitioning.
//!
//! The embedding matrix is stored column-wise (one sample per column) and is
//! the dictionary consumed by the sparse coder and the span-geometry module.
//! Input labels may be arbitrary integers; they are remapped to contiguous
//! class ids `1..=K` and the original values are kept for reporting.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

/// Guard below which a column is considered degenerate (the zero vector).
pub const ZERO_NORM_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("io error reading {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("parse error at data row {row}: {message}")]
    Parse { row: usize, message: String },
    #[error("empty input: no data rows")]
    EmptyInput,
    #[error("column {column} is degenerate: norm {norm:.3e} below {ZERO_NORM_TOL:.0e}")]
    ZeroColumn { column: usize, norm: f64 },
    #[error("invalid labels: {0}")]
    InvalidLabels(String),
    #[error("dimension error: {0}")]
    Dimension(String),
}

/// Unit-norm embedding dictionary with per-column class labels.
///
/// Invariants enforced at construction: `p >= 1`, `n >= 1`, labels cover
/// exactly `1..=class_count` with no gaps. Column norms are only guaranteed
/// after [`l2_normalize`].
#[derive(Debug, Clone)]
pub struct LabeledEmbeddingSet {
    embeddings: DMatrix<f64>,
    labels: Vec<usize>,
    class_count: usize,
    /// Original integer label for each contiguous class id (index `k - 1`).
    original_labels: Vec<i64>,
}

impl LabeledEmbeddingSet {
    /// Builds a set from a column matrix and raw integer labels, remapping
    /// labels to contiguous ids `1..=K` in ascending original order.
    pub fn from_raw_labels(
        embeddings: DMatrix<f64>,
        raw_labels: &[i64],
    ) -> Result<Self, DataError> {
        if embeddings.ncols() == 0 || embeddings.nrows() == 0 {
            return Err(DataError::EmptyInput);
        }
        if raw_labels.len() != embeddings.ncols() {
            return Err(DataError::InvalidLabels(format!(
                "{} labels for {} columns",
                raw_labels.len(),
                embeddings.ncols()
            )));
        }
        let mut uniq: Vec<i64> = raw_labels.to_vec();
        uniq.sort_unstable();
        uniq.dedup();
        let labels = raw_labels
            .iter()
            .map(|l| uniq.binary_search(l).expect("label present") + 1)
            .collect();
        Ok(Self {
            embeddings,
            labels,
            class_count: uniq.len(),
            original_labels: uniq,
        })
    }

    /// Builds a set whose labels are already contiguous `1..=class_count`.
    pub fn from_contiguous(
        embeddings: DMatrix<f64>,
        labels: Vec<usize>,
        class_count: usize,
    ) -> Result<Self, DataError> {
        if embeddings.ncols() == 0 || embeddings.nrows() == 0 {
            return Err(DataError::EmptyInput);
        }
        if labels.len() != embeddings.ncols() {
            return Err(DataError::InvalidLabels(format!(
                "{} labels for {} columns",
                labels.len(),
                embeddings.ncols()
            )));
        }
        let mut seen = vec![false; class_count];
        for &l in &labels {
            if l == 0 || l > class_count {
                return Err(DataError::InvalidLabels(format!(
                    "label {l} outside 1..={class_count}"
                )));
            }
            seen[l - 1] = true;
        }
        if let Some(k) = seen.iter().position(|s| !s) {
            return Err(DataError::InvalidLabels(format!("class {} has no samples", k + 1)));
        }
        let original_labels = (1..=class_count as i64).collect();
        Ok(Self {
            embeddings,
            labels,
            class_count,
            original_labels,
        })
    }

    pub fn embeddings(&self) -> &DMatrix<f64> {
        &self.embeddings
    }

    /// Contiguous class id (`1..=K`) of column `i`.
    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    /// Embedding dimension `p`.
    pub fn dim(&self) -> usize {
        self.embeddings.nrows()
    }

    /// Number of samples `n`.
    pub fn len(&self) -> usize {
        self.embeddings.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.embeddings.ncols() == 0
    }

    /// Original integer label for contiguous class id `k`.
    pub fn original_label(&self, k: usize) -> i64 {
        self.original_labels[k - 1]
    }

    pub fn original_labels(&self) -> &[i64] {
        &self.original_labels
    }

    pub fn column(&self, i: usize) -> DVector<f64> {
        self.embeddings.column(i).into_owned()
    }

    /// Columns of class `k` as a `p x n_k` matrix, in dictionary order.
    pub fn class_matrix(&self, k: usize) -> DMatrix<f64> {
        let idx: Vec<usize> = (0..self.len()).filter(|&i| self.labels[i] == k).collect();
        let mut m = DMatrix::zeros(self.dim(), idx.len());
        for (j, &i) in idx.iter().enumerate() {
            m.set_column(j, &self.embeddings.column(i));
        }
        m
    }
}

/// Disjoint, order-preserving index sets `I_k` over the dictionary columns.
#[derive(Debug, Clone)]
pub struct ClassPartition {
    index_sets: Vec<Vec<usize>>,
}

impl ClassPartition {
    /// Zero-based column indices of class `k` (contiguous id, `1..=K`).
    pub fn class(&self, k: usize) -> &[usize] {
        &self.index_sets[k - 1]
    }

    pub fn class_count(&self) -> usize {
        self.index_sets.len()
    }

    pub fn sets(&self) -> &[Vec<usize>] {
        &self.index_sets
    }
}

/// Groups dictionary columns by class, preserving column order within each set.
pub fn partition_by_class(set: &LabeledEmbeddingSet) -> ClassPartition {
    let mut index_sets = vec![Vec::new(); set.class_count()];
    for i in 0..set.len() {
        index_sets[set.label(i) - 1].push(i);
    }
    ClassPartition { index_sets }
}

/// Scales every column to unit Euclidean norm. Labels are unchanged.
///
/// Columns with norm at or below [`ZERO_NORM_TOL`] are rejected rather than
/// silently rescaled.
pub fn l2_normalize(set: &LabeledEmbeddingSet) -> Result<LabeledEmbeddingSet, DataError> {
    let mut m = set.embeddings.clone();
    for j in 0..m.ncols() {
        let norm = m.column(j).norm();
        if norm <= ZERO_NORM_TOL {
            return Err(DataError::ZeroColumn { column: j, norm });
        }
        let mut col = m.column_mut(j);
        col /= norm;
    }
    Ok(LabeledEmbeddingSet {
        embeddings: m,
        labels: set.labels.clone(),
        class_count: set.class_count,
        original_labels: set.original_labels.clone(),
    })
}

/// Loads a labeled vector set from CSV: header row, then `label,v_1,...,v_p`.
///
/// Does not normalize; callers decide whether the vectors are raw features
/// or embeddings. Scientific notation is accepted.
pub fn load_embedding_csv<P: AsRef<Path>>(path: P) -> Result<LabeledEmbeddingSet, DataError> {
    let path_str = path.as_ref().display().to_string();
    let file = std::fs::File::open(path.as_ref()).map_err(|source| DataError::Io {
        path: path_str,
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file);

    let mut raw_labels: Vec<i64> = Vec::new();
    let mut values: Vec<Vec<f64>> = Vec::new();
    let mut width: Option<usize> = None;

    for (idx, record) in reader.records().enumerate() {
        let row = idx + 1; // 1-based data row, header excluded
        let record = record?;
        if record.len() < 2 {
            return Err(DataError::Parse {
                row,
                message: format!("expected label plus at least one value, got {} fields", record.len()),
            });
        }
        match width {
            None => width = Some(record.len()),
            Some(w) if w != record.len() => {
                return Err(DataError::Parse {
                    row,
                    message: format!("row width {} differs from first row width {w}", record.len()),
                });
            }
            _ => {}
        }
        let label: i64 = record[0].parse().map_err(|_| DataError::Parse {
            row,
            message: format!("non-integer label {:?}", &record[0]),
        })?;
        let mut vals = Vec::with_capacity(record.len() - 1);
        for field in record.iter().skip(1) {
            let v: f64 = field.parse().map_err(|_| DataError::Parse {
                row,
                message: format!("invalid numeric value {field:?}"),
            })?;
            vals.push(v);
        }
        raw_labels.push(label);
        values.push(vals);
    }

    if values.is_empty() {
        return Err(DataError::EmptyInput);
    }
    let p = values[0].len();
    let n = values.len();
    let mut m = DMatrix::zeros(p, n);
    for (j, vals) in values.iter().enumerate() {
        for (i, &v) in vals.iter().enumerate() {
            m[(i, j)] = v;
        }
    }
    LabeledEmbeddingSet::from_raw_labels(m, &raw_labels)
}

/// Writes a labeled vector set in the CSV layout accepted by
/// [`load_embedding_csv`]. Values use Rust's shortest round-trip float
/// formatting, so a save/load cycle is bit-identical.
pub fn save_embedding_csv<P: AsRef<Path>>(
    path: P,
    set: &LabeledEmbeddingSet,
) -> Result<(), DataError> {
    let p = set.dim();
    let mut out = String::new();
    out.push_str("label");
    for i in 1..=p {
        let _ = write!(out, ",v{i}");
    }
    out.push('\n');
    for j in 0..set.len() {
        let _ = write!(out, "{}", set.original_label(set.label(j)));
        for i in 0..p {
            let _ = write!(out, ",{}", set.embeddings()[(i, j)]);
        }
        out.push('\n');
    }
    std::fs::write(path.as_ref(), out).map_err(|source| DataError::Io {
        path: path.as_ref().display().to_string(),
        source,
    })
}
