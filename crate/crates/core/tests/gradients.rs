mod oracles;

use inae_core::diffusion::{grad_phi_wrt_params, phi_feature_gradient};
use inae_core::graph::SimilarityMatrix;
use inae_core::model::grad_recon;
use inae_core::trainer::{batch_gradient, evaluate_objective, PhiRegularizer, TrainingProblem};
use inae_core::{encode, phi, LossKind, ModelParams};
use ndarray::Array2;
use oracles::{central_difference, laplacian, random_similarity, relative_error, rng, uniform};

const H: f64 = 1e-6;

fn instance(seed: u64, d: usize, k: usize, n: usize) -> (ModelParams, Array2<f64>, Array2<f64>, Vec<usize>) {
    let mut r = rng(seed);
    let mut p = ModelParams::init(d, k, &mut r);
    // Non-zero biases so every parameter block is exercised.
    p.b1 = oracles::uniform(1, k, -0.5, 0.5, &mut r).row(0).to_owned();
    p.b2 = oracles::uniform(1, d, -0.5, 0.5, &mut r).row(0).to_owned();
    let clean = uniform(d, n, 0.0, 1.0, &mut r);
    let m = 2;
    let origin: Vec<usize> = (0..n * m).map(|c| c / m).collect();
    let noise = uniform(d, n * m, -0.1, 0.1, &mut r);
    let corrupted = clean.select(ndarray::Axis(1), &origin) + noise;
    (p, clean, corrupted, origin)
}

#[test]
fn reconstruction_gradients_match_finite_differences() {
    for kind in [LossKind::Squared, LossKind::CrossEntropy] {
        for seed in 0..20 {
            let (p, clean, noisy, origin) = instance(seed, 7, 4, 6);
            let (_, g) = grad_recon(&p, kind, noisy.view(), clean.view(), &origin).unwrap();
            let fd = central_difference(&p.to_vec(), H, |v| {
                grad_recon(&p.with_values(v), kind, noisy.view(), clean.view(), &origin)
                    .unwrap()
                    .0
            });
            let err = relative_error(&g.to_vec(), &fd);
            assert!(err < 1e-6, "{kind:?} seed {seed}: {err:e}");
        }
    }
}

#[test]
fn phi_feature_gradient_matches_finite_differences() {
    for seed in 0..20 {
        let mut r = rng(100 + seed);
        let (k, n) = (3, 8);
        let l = laplacian(&random_similarity(n, 0.4, &mut r));
        let prev = uniform(k, n, 0.0, 1.0, &mut r);
        let h = uniform(k, n, 0.0, 1.0, &mut r);
        let dt = 0.7;
        let g = phi_feature_gradient(h.view(), prev.view(), &l, dt).unwrap();
        let fd = central_difference(h.as_slice().unwrap(), H, |v| {
            let hv = Array2::from_shape_vec((k, n), v.to_vec()).unwrap();
            phi(hv.view(), prev.view(), &l, dt).unwrap()
        });
        let err = relative_error(g.as_slice().unwrap(), &fd);
        assert!(err < 1e-6, "seed {seed}: {err:e}");
    }
}

#[test]
fn phi_encoder_gradient_matches_finite_differences() {
    for seed in 0..20 {
        let (p, x, _, _) = instance(200 + seed, 5, 3, 7);
        let mut r = rng(300 + seed);
        let l = laplacian(&random_similarity(7, 0.5, &mut r));
        let prev = uniform(3, 7, 0.0, 1.0, &mut r);
        let g = grad_phi_wrt_params(&p, x.view(), prev.view(), &l, 1.3).unwrap();
        let analytic: Vec<f64> = g.w1.iter().chain(g.b1.iter()).copied().collect();
        let n_enc = analytic.len();
        let theta = p.to_vec();
        let fd = central_difference(&theta[..n_enc], H, |v| {
            let mut full = theta.clone();
            full[..n_enc].copy_from_slice(v);
            let h = encode(&p.with_values(&full), x.view()).unwrap();
            phi(h.view(), prev.view(), &l, 1.3).unwrap()
        });
        let err = relative_error(&analytic, &fd);
        assert!(err < 1e-6, "seed {seed}: {err:e}");
    }
}

#[test]
fn full_batch_training_gradient_matches_objective() {
    for seed in 0..5 {
        let (p, clean, noisy, origin) = instance(400 + seed, 6, 4, 5);
        let problem = TrainingProblem::new(noisy.view(), clean.view(), &origin, LossKind::Squared).unwrap();
        let n = problem.len();
        let mut r = rng(500 + seed);
        let s = SimilarityMatrix::from_dense(random_similarity(n, 0.3, &mut r).view()).unwrap();
        let anchor = uniform(4, n, 0.0, 1.0, &mut r);
        let (alpha, dt) = (0.3, 0.8);

        let mut reg = PhiRegularizer::new(&s, &anchor, alpha, dt);
        let all: Vec<usize> = (0..n).collect();
        let (_, g) = batch_gradient(&p, &problem, &all, Some(&mut reg)).unwrap();
        let fd = central_difference(&p.to_vec(), H, |v| {
            evaluate_objective(&p.with_values(v), &problem, Some((&s, anchor.view(), alpha, dt)))
                .unwrap()
                .0
                .total
        });
        let err = relative_error(&g.to_vec(), &fd);
        assert!(err < 1e-6, "seed {seed}: {err:e}");
    }
}
