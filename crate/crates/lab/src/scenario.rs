//! Synthetic generators with controlled subspace geometry: seeded random
//! subspaces, pairs with prescribed principal angles, coverage/separation
//! scenarios, and labeled union-of-subspaces datasets.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use srcgeo_core::data::LabeledEmbeddingSet;
use srcgeo_core::span::{principal_angles, BasisMode, SpanError, SubspaceBasis};

#[derive(Debug, Error)]
pub enum LabError {
    #[error("subspace dimension {d} exceeds ambient dimension {p}")]
    DimensionTooLarge { d: usize, p: usize },
    #[error("prescribed angles need 2d <= p, got d = {d}, p = {p}")]
    InsufficientAmbient { d: usize, p: usize },
    #[error("angles must be ascending within [0, pi/2]: {0}")]
    BadAngles(String),
    #[error("infeasible construction: requires ambient dimension {required}, got {got}")]
    Infeasible { required: usize, got: usize },
    #[error("subspaces do not overlap: smallest principal angle {theta_min:.3e} above the overlap gate")]
    NoOverlap { theta_min: f64 },
    #[error(transparent)]
    Span(#[from] SpanError),
    #[error("invalid parameter: {0}")]
    BadParameter(String),
}

fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// Haar-ish random orthogonal matrix from the QR of a Gaussian draw.
pub fn random_rotation(p: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let gauss = DMatrix::from_fn(p, p, |_, _| standard_normal(rng));
    gauss.qr().q()
}

/// Random unit vector, uniform on the sphere.
pub fn random_unit_vector(p: usize, rng: &mut ChaCha8Rng) -> DVector<f64> {
    loop {
        let v = DVector::from_fn(p, |_, _| standard_normal(rng));
        let norm = v.norm();
        if norm > 1e-12 {
            return v / norm;
        }
    }
}

/// Seeded random `d`-dimensional subspace of `R^p`.
pub fn random_subspace(p: usize, d: usize, seed: u64) -> Result<SubspaceBasis, LabError> {
    if d > p {
        return Err(LabError::DimensionTooLarge { d, p });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(random_subspace_with(p, d, &mut rng))
}

pub(crate) fn random_subspace_with(p: usize, d: usize, rng: &mut ChaCha8Rng) -> SubspaceBasis {
    let gauss = DMatrix::from_fn(p, d, |_, _| standard_normal(rng));
    let q = gauss.qr().q().columns(0, d).into_owned();
    SubspaceBasis::from_orthonormal(q, 0, BasisMode::Uncentered)
}

/// Canonical pair with a prescribed principal-angle spectrum, hidden behind
/// a seeded random rotation.
///
/// The first span covers coordinates `e_1..e_d`; the second span's `i`-th
/// direction is `cos(theta_i) e_i + sin(theta_i) e_{d+i}`; both are then
/// rotated by a common random orthogonal map.
pub fn subspace_pair_with_angles(
    p: usize,
    angles: &[f64],
    seed: u64,
) -> Result<(SubspaceBasis, SubspaceBasis), LabError> {
    let d = angles.len();
    if d == 0 {
        return Err(LabError::BadAngles("empty spectrum".into()));
    }
    if 2 * d > p {
        return Err(LabError::InsufficientAmbient { d, p });
    }
    for window in angles.windows(2) {
        if window[0] > window[1] {
            return Err(LabError::BadAngles(format!("{angles:?} is not ascending")));
        }
    }
    if angles[0] < 0.0 || *angles.last().expect("non-empty") > std::f64::consts::FRAC_PI_2 + 1e-15 {
        return Err(LabError::BadAngles(format!("{angles:?} outside [0, pi/2]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rotation = random_rotation(p, &mut rng);

    let mut u = DMatrix::zeros(p, d);
    let mut v = DMatrix::zeros(p, d);
    for (i, &theta) in angles.iter().enumerate() {
        u[(i, i)] = 1.0;
        v[(i, i)] = theta.cos();
        v[(d + i, i)] = theta.sin();
    }
    let u = &rotation * u;
    let v = &rotation * v;
    Ok((
        SubspaceBasis::from_orthonormal(u, 1, BasisMode::Uncentered),
        SubspaceBasis::from_orthonormal(v, 2, BasisMode::Uncentered),
    ))
}

/// Parameters of a coverage/separation scenario.
#[derive(Debug, Clone)]
pub struct ScenarioParams {
    pub ambient_dim: usize,
    /// Subspace dimension per class, `dims[k - 1]` for class `k`.
    pub dims: Vec<usize>,
    pub true_class: usize,
    /// Smallest principal angle between the true span and every other span.
    pub alpha: f64,
    /// Signal norm.
    pub gamma: f64,
    /// Noise norm (exact, unless `noise_le`).
    pub epsilon: f64,
    /// Sample the noise norm uniformly inside the epsilon ball instead of on
    /// its surface.
    pub noise_le: bool,
    pub seed: u64,
}

/// A constructed test point `z = s + e` with its class spans and the
/// realized separation/scale parameters.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub bases: Vec<SubspaceBasis>,
    pub true_class: usize,
    pub signal: DVector<f64>,
    pub noise: DVector<f64>,
    pub point: DVector<f64>,
    pub gamma: f64,
    pub epsilon: f64,
    /// Noise norm actually drawn (`epsilon` unless `noise_le`).
    pub noise_norm: f64,
    /// Separation recomputed from the constructed bases.
    pub alpha: f64,
}

/// Builds class spans with `theta_min(S_y, S_j) >= alpha` (equality attained
/// by at least one competitor), a signal of norm `gamma` inside the true
/// span, and noise of norm `epsilon`.
pub fn sample_scenario(params: &ScenarioParams) -> Result<Scenario, LabError> {
    let p = params.ambient_dim;
    let k = params.dims.len();
    if k < 2 {
        return Err(LabError::BadParameter("need at least 2 classes".into()));
    }
    if params.true_class == 0 || params.true_class > k {
        return Err(LabError::BadParameter(format!(
            "true_class {} outside 1..={k}",
            params.true_class
        )));
    }
    if !(0.0..=std::f64::consts::FRAC_PI_2).contains(&params.alpha) {
        return Err(LabError::BadParameter(format!(
            "alpha {} outside [0, pi/2]",
            params.alpha
        )));
    }
    if params.gamma <= 0.0 {
        return Err(LabError::BadParameter(format!(
            "gamma must be positive, got {}",
            params.gamma
        )));
    }
    if params.epsilon < 0.0 {
        return Err(LabError::BadParameter(format!(
            "epsilon must be non-negative, got {}",
            params.epsilon
        )));
    }
    let y = params.true_class;
    let d_y = params.dims[y - 1];
    let required: usize = d_y + params.dims.iter().enumerate().filter(|(i, _)| i + 1 != y).map(|(_, &d)| d).sum::<usize>();
    if required > p {
        return Err(LabError::Infeasible { required, got: p });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let rotation = random_rotation(p, &mut rng);

    // coordinate layout: true span first, then one dedicated block per
    // competitor; mixing directions pair the competitor block with the
    // leading true-span coordinates
    let mut bases: Vec<Option<SubspaceBasis>> = vec![None; k];
    let mut u_y = DMatrix::zeros(p, d_y);
    for i in 0..d_y {
        u_y[(i, i)] = 1.0;
    }
    bases[y - 1] = Some(SubspaceBasis::from_orthonormal(
        &rotation * u_y,
        y,
        BasisMode::Uncentered,
    ));

    let mut offset = d_y;
    for class in 1..=k {
        if class == y {
            continue;
        }
        let d_j = params.dims[class - 1];
        let mixed = d_j.min(d_y);
        let mut basis = DMatrix::zeros(p, d_j);
        for i in 0..d_j {
            if i < mixed {
                // the first mixture sits exactly at alpha; the rest anywhere
                // at or above it
                let theta = if i == 0 {
                    params.alpha
                } else {
                    rng.gen_range(params.alpha..=std::f64::consts::FRAC_PI_2)
                };
                basis[(i, i)] = theta.cos();
                basis[(offset + i, i)] = theta.sin();
            } else {
                basis[(offset + i, i)] = 1.0;
            }
        }
        bases[class - 1] = Some(SubspaceBasis::from_orthonormal(
            &rotation * basis,
            class,
            BasisMode::Uncentered,
        ));
        offset += d_j;
    }
    let bases: Vec<SubspaceBasis> = bases.into_iter().map(|b| b.expect("filled")).collect();

    // signal: random unit direction of the true span, scaled to gamma
    let coeff = random_unit_vector(d_y, &mut rng);
    let signal = bases[y - 1].matrix() * coeff * params.gamma;

    let noise_norm = if params.noise_le {
        params.epsilon * rng.gen_range(0.0..=1.0_f64).powf(1.0 / p as f64)
    } else {
        params.epsilon
    };
    let noise = if noise_norm > 0.0 {
        random_unit_vector(p, &mut rng) * noise_norm
    } else {
        DVector::zeros(p)
    };
    let point = &signal + &noise;

    let alpha = (1..=k)
        .filter(|&j| j != y)
        .map(|j| {
            principal_angles(&bases[y - 1], &bases[j - 1])
                .expect("same ambient dim")
                .theta_min()
                .expect("non-trivial spans")
        })
        .fold(f64::INFINITY, f64::min);

    Ok(Scenario {
        bases,
        true_class: y,
        signal,
        noise,
        point,
        gamma: params.gamma,
        epsilon: params.epsilon,
        noise_norm,
        alpha,
    })
}

/// Parameters of a labeled union-of-subspaces dataset.
#[derive(Debug, Clone)]
pub struct DatasetParams {
    pub ambient_dim: usize,
    pub class_count: usize,
    /// Dimension of every class span.
    pub span_dim: usize,
    /// Smallest principal angle between every pair of class spans.
    pub pairwise_angle: f64,
    pub train_per_class: usize,
    pub test_per_class: usize,
    /// Norm of the additive noise on every sample.
    pub noise: f64,
    pub seed: u64,
}

/// Labeled train/test pair sampled from `K` spans whose pairwise smallest
/// principal angle equals `pairwise_angle` exactly.
///
/// Every class span mixes a shared coordinate block with its own dedicated
/// block at a common inclination, so for any two classes the principal
/// angles are all `arccos(cos^2 a)`; choosing `a` accordingly pins the
/// pairwise separation. Samples are span points of unit norm plus noise of
/// exact norm `noise`; they are not normalized here.
pub fn union_of_subspaces_dataset(
    params: &DatasetParams,
) -> Result<(LabeledEmbeddingSet, LabeledEmbeddingSet), LabError> {
    let p = params.ambient_dim;
    let k = params.class_count;
    let d = params.span_dim;
    if k < 2 || d == 0 {
        return Err(LabError::BadParameter(
            "need at least 2 classes and span_dim >= 1".into(),
        ));
    }
    if !(0.0 < params.pairwise_angle && params.pairwise_angle <= std::f64::consts::FRAC_PI_2) {
        return Err(LabError::BadParameter(format!(
            "pairwise_angle {} outside (0, pi/2]",
            params.pairwise_angle
        )));
    }
    let required = d + k * d;
    if required > p {
        return Err(LabError::Infeasible { required, got: p });
    }
    if params.train_per_class == 0 || params.test_per_class == 0 {
        return Err(LabError::BadParameter("per-class counts must be positive".into()));
    }

    // cos(theta_pair) = cos^2(a)
    let inclination = params.pairwise_angle.cos().max(0.0).sqrt().acos();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let rotation = random_rotation(p, &mut rng);

    let mut bases = Vec::with_capacity(k);
    for class in 0..k {
        let mut basis = DMatrix::zeros(p, d);
        for i in 0..d {
            basis[(i, i)] = inclination.cos();
            basis[(d + class * d + i, i)] = inclination.sin();
        }
        bases.push(&rotation * basis);
    }

    let mut draw = |per_class: usize| -> (DMatrix<f64>, Vec<i64>) {
        let n = per_class * k;
        let mut m = DMatrix::zeros(p, n);
        let mut labels = Vec::with_capacity(n);
        let mut col = 0;
        for (class, basis) in bases.iter().enumerate() {
            for _ in 0..per_class {
                let coeff = random_unit_vector(d, &mut rng);
                let mut sample = basis * coeff;
                if params.noise > 0.0 {
                    sample += random_unit_vector(p, &mut rng) * params.noise;
                }
                m.set_column(col, &sample);
                labels.push(class as i64 + 1);
                col += 1;
            }
        }
        (m, labels)
    };

    let (train_m, train_l) = draw(params.train_per_class);
    let (test_m, test_l) = draw(params.test_per_class);
    let train = LabeledEmbeddingSet::from_raw_labels(train_m, &train_l)
        .expect("non-empty by construction");
    let test =
        LabeledEmbeddingSet::from_raw_labels(test_m, &test_l).expect("non-empty by construction");
    Ok((train, test))
}
