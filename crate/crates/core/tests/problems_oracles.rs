mod common;

use ndarray::Array1;
use rand::Rng;
use rbpdn::problems::{generate_dataset, BlockProblem, LogisticProblem, ScaleMode};
use rbpdn::sc::{omega, omega_star};

fn instance(m: usize, n: usize, mu: f64, gamma: f64, blocks: usize, seed: u64) -> LogisticProblem {
    LogisticProblem::new(generate_dataset(m, n, seed).unwrap(), mu, gamma, blocks).unwrap()
}

#[test]
fn gradient_matches_finite_differences() {
    let mut rng = common::rng(21);
    for seed in 0..5 {
        let p = instance(40, 20, 1e-2, 0.0, 4, seed);
        let x = common::random_vector(&mut rng, 20, 2.0);
        let grad = p.f_grad(x.view(), None);
        for j in 0..20 {
            let mut e = Array1::zeros(20);
            e[j] = 1.0;
            let fd = common::directional_fd(|z| p.f_value(z.view()), &x, &e, 1e-6);
            let rel = (fd - grad[j]).abs() / grad[j].abs().max(1e-3);
            assert!(rel < 1e-6, "coordinate {j}: {fd} vs {}", grad[j]);
        }
    }
}

#[test]
fn block_gradient_is_restriction_of_full_gradient() {
    let p = instance(30, 17, 1e-3, 0.0, 4, 2);
    let x = common::random_vector(&mut common::rng(1), 17, 1.0);
    let full = p.f_grad(x.view(), None);
    for b in 0..4 {
        let range = p.partition().range(b);
        let block = p.f_grad(x.view(), Some(b));
        for (k, j) in range.enumerate() {
            assert!((block[k] - full[j]).abs() < 1e-15);
        }
    }
}

#[test]
fn block_hessian_matches_directional_finite_differences() {
    let mut rng = common::rng(22);
    let p = instance(50, 45, 1e-2, 0.0, 3, 7);
    for _ in 0..5 {
        let x = common::random_vector(&mut rng, 45, 1.5);
        for b in 0..3 {
            let range = p.partition().range(b);
            assert_eq!(range.len(), 15);
            let h = p.block_hessian(x.view(), b);
            let u = common::random_vector(&mut rng, 15, 1.0);
            let hu = h.apply(u.view());
            let mut dir = Array1::zeros(45);
            dir.slice_mut(ndarray::s![range.clone()]).assign(&u);
            let step = 1e-5;
            let gp = p.f_grad((&x + &(&dir * step)).view(), Some(b));
            let gm = p.f_grad((&x - &(&dir * step)).view(), Some(b));
            let fd = (gp - gm) / (2.0 * step);
            let err = (&fd - &hu).mapv(f64::abs).fold(0.0, |a: f64, &v| a.max(v));
            let scale = hu.mapv(f64::abs).fold(0.0, |a: f64, &v| a.max(v));
            assert!(err <= 1e-6 * scale.max(1.0), "{err}");
        }
    }
}

#[test]
fn hessian_is_bounded_below_by_mu() {
    let mut rng = common::rng(23);
    let mu = 1e-3;
    let p = instance(20, 12, mu, 0.0, 1, 4);
    for _ in 0..20 {
        let x = common::random_vector(&mut rng, 12, 5.0);
        let h = p.block_hessian(x.view(), 0).to_dense();
        let eig = common::symmetric_eigenvalues(&h);
        assert!(eig[0] >= mu * (1.0 - 1e-9), "{}", eig[0]);
    }
}

#[test]
fn objective_is_convex_along_segments() {
    let mut rng = common::rng(24);
    let p = instance(30, 10, 1e-3, 1e-2, 2, 5);
    for _ in 0..200 {
        let x = common::random_vector(&mut rng, 10, 3.0);
        let y = common::random_vector(&mut rng, 10, 3.0);
        let t: f64 = rng.random();
        let mid = &x * (1.0 - t) + &y * t;
        let lhs = p.F_value(mid.view());
        let rhs = (1.0 - t) * p.F_value(x.view()) + t * p.F_value(y.view());
        assert!(lhs <= rhs + 1e-12);
    }
}

/// `M_f²/4 · f` is standard self-concordant, so its Bregman divergence is
/// sandwiched between `ω` and `ω★` of the local distance.
#[test]
fn standardized_logistic_self_concordance_sandwich() {
    let mut rng = common::rng(25);
    for seed in 0..4 {
        let n = 8 + 4 * seed as usize;
        let p = instance(40, n, 1e-2, 0.0, 1, seed).with_scale_mode(ScaleMode::Auto);
        let scale = p.standardize_scale();
        for _ in 0..50 {
            let x = common::random_vector(&mut rng, n, 2.0);
            let u = common::random_vector(&mut rng, n, 1.0);
            let image = p.image(x.view());
            let hu = p.hessian_on(image.view(), 0..n).apply(u.view());
            let unit = (scale * u.dot(&hu)).sqrt();
            let r: f64 = 0.98 * rng.random::<f64>();
            let d = &u * (r / unit);
            let y = &x + &d;
            let grad = p.f_grad(x.view(), None);
            let bregman = scale * (p.f_value(y.view()) - p.f_value(x.view()) - grad.dot(&d));
            assert!(bregman >= omega(r).unwrap() - 1e-8, "r = {r}");
            assert!(bregman <= omega_star(r).unwrap() + 1e-8, "r = {r}");
        }
    }
}
