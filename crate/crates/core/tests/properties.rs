//! Property tests for the data and span invariants.

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use srcgeo_core::data::{l2_normalize, partition_by_class, LabeledEmbeddingSet};
use srcgeo_core::span::{
    principal_angles, projector_distance, span_basis, spectral_norm, subspace_residual, BasisMode,
    SubspaceBasis,
};

fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..1.0))
}

fn random_basis(rng: &mut ChaCha8Rng, p: usize, d: usize) -> SubspaceBasis {
    loop {
        let m = random_matrix(rng, p, d);
        let b = span_basis(&m, BasisMode::Uncentered, 0).unwrap();
        if b.dim() == d {
            return b;
        }
    }
}

proptest! {
    #[test]
    fn normalize_is_idempotent_on_random_sets(seed in 0u64..500, p in 1usize..8, n in 1usize..10) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = DMatrix::from_fn(p, n, |_, _| rng.gen_range(-2.0..2.0) + 2.5);
        let labels: Vec<i64> = (0..n).map(|_| rng.gen_range(0..3)).collect();
        let set = LabeledEmbeddingSet::from_raw_labels(m, &labels).unwrap();
        let once = l2_normalize(&set).unwrap();
        let twice = l2_normalize(&once).unwrap();
        prop_assert!((once.embeddings() - twice.embeddings()).norm() <= 1e-14);
    }

    #[test]
    fn partition_is_exact_on_random_labels(seed in 0u64..500, n in 1usize..40) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let labels: Vec<i64> = (0..n).map(|_| rng.gen_range(-5..5)).collect();
        let m = DMatrix::from_element(3, n, 1.0);
        let set = LabeledEmbeddingSet::from_raw_labels(m, &labels).unwrap();
        let part = partition_by_class(&set);
        let mut seen = vec![false; n];
        for k in 1..=set.class_count() {
            let idx = part.class(k);
            prop_assert!(idx.windows(2).all(|w| w[0] < w[1]), "ordering broken");
            for &i in idx {
                prop_assert!(!seen[i], "index {i} in two sets");
                seen[i] = true;
                prop_assert_eq!(set.label(i), k);
            }
        }
        prop_assert!(seen.iter().all(|&s| s), "partition misses an index");
    }

    #[test]
    fn distance_to_span_is_one_lipschitz(seed in 0u64..300) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = rng.gen_range(2usize..10);
        let d = rng.gen_range(1usize..p);
        let basis = random_basis(&mut rng, p, d);
        let z = DVector::from_fn(p, |_, _| rng.gen_range(-1.0..1.0));
        let z2 = DVector::from_fn(p, |_, _| rng.gen_range(-1.0..1.0));
        let lhs = (subspace_residual(&z, &basis) - subspace_residual(&z2, &basis)).abs();
        prop_assert!(lhs <= (&z - &z2).norm() + 1e-10);
    }

    #[test]
    fn residual_shift_bounded_by_projector_distance(seed in 0u64..300) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = rng.gen_range(2usize..10);
        let d1 = rng.gen_range(1usize..p);
        let d2 = rng.gen_range(1usize..p);
        let b1 = random_basis(&mut rng, p, d1);
        let b2 = random_basis(&mut rng, p, d2);
        let z = DVector::from_fn(p, |_, _| rng.gen_range(-1.0..1.0));
        let lhs = (subspace_residual(&z, &b1) - subspace_residual(&z, &b2)).abs();
        let rhs = projector_distance(&b1, &b2).unwrap() * z.norm();
        prop_assert!(lhs <= rhs + 1e-10, "{lhs} > {rhs}");
    }

    #[test]
    fn frobenius_dominates_spectral_on_basis_products(seed in 0u64..300) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = rng.gen_range(2usize..12);
        let d1 = rng.gen_range(1usize..=p.min(4));
        let d2 = rng.gen_range(1usize..=p.min(4));
        let b1 = random_basis(&mut rng, p, d1);
        let b2 = random_basis(&mut rng, p, d2);
        let product = b1.matrix().transpose() * b2.matrix();
        prop_assert!(spectral_norm(&product) <= product.norm() + 1e-12);
    }

    #[test]
    fn some_direction_attains_sin_theta_min(seed in 0u64..200) {
        // for any basis pair there is a unit u in the first span whose
        // distance to the second equals sin(theta_min)
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = rng.gen_range(4usize..12);
        let d = rng.gen_range(1usize..=p / 2);
        let b1 = random_basis(&mut rng, p, d);
        let b2 = random_basis(&mut rng, p, d);
        let product = b1.matrix().transpose() * b2.matrix();
        let svd = srcgeo_core::svd::thin_svd(&product);
        let a1 = svd.u.column(0).into_owned();
        let u = b1.matrix() * a1;
        let theta_min = principal_angles(&b1, &b2).unwrap().theta_min().unwrap();
        prop_assert!((u.norm() - 1.0).abs() <= 1e-10);
        prop_assert!((subspace_residual(&u, &b2) - theta_min.sin()).abs() <= 1e-9);
    }

    #[test]
    fn angle_separation_lower_bounds_distance(seed in 0u64..200) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = rng.gen_range(4usize..12);
        let d = rng.gen_range(1usize..=p / 2);
        let b1 = random_basis(&mut rng, p, d);
        let b2 = random_basis(&mut rng, p, d);
        let theta_min = principal_angles(&b1, &b2).unwrap().theta_min().unwrap();
        // random point of the first span
        let coeff = DVector::from_fn(d, |_, _| rng.gen_range(-1.0..1.0));
        let s = b1.matrix() * coeff;
        prop_assert!(subspace_residual(&s, &b2) >= s.norm() * theta_min.sin() - 1e-10);
    }
}
