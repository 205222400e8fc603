//! Independent oracles shared by the integration tests. Nothing here calls
//! into the solver paths under test.

#![allow(dead_code)]

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_vector(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Array1<f64> {
    Array1::from_shape_fn(n, |_| scale * (2.0 * rng.random::<f64>() - 1.0))
}

/// `A Aᵀ / n + shift·I` with `A` uniform in [−1, 1].
pub fn random_spd(rng: &mut ChaCha8Rng, n: usize, shift: f64) -> Array2<f64> {
    let a = Array2::from_shape_fn((n, n), |_| 2.0 * rng.random::<f64>() - 1.0);
    let mut h = a.dot(&a.t()) / n as f64;
    for i in 0..n {
        h[[i, i]] += shift;
    }
    h
}

/// Gaussian elimination with partial pivoting.
pub fn dense_solve(h: &Array2<f64>, b: &Array1<f64>) -> Array1<f64> {
    let n = b.len();
    let mut a = h.clone();
    let mut x = b.clone();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[[i, col]].abs().total_cmp(&a[[j, col]].abs()))
            .unwrap();
        if pivot != col {
            for k in 0..n {
                a.swap([col, k], [pivot, k]);
            }
            x.swap(col, pivot);
        }
        for row in col + 1..n {
            let factor = a[[row, col]] / a[[col, col]];
            for k in col..n {
                a[[row, k]] -= factor * a[[col, k]];
            }
            x[row] -= factor * x[col];
        }
    }
    for row in (0..n).rev() {
        let mut v = x[row];
        for k in row + 1..n {
            v -= a[[row, k]] * x[k];
        }
        x[row] = v / a[[row, row]];
    }
    x
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.
pub fn symmetric_eigenvalues(h: &Array2<f64>) -> Vec<f64> {
    let n = h.nrows();
    let mut a = h.clone();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[[i, j]] * a[[i, j]])
            .sum();
        if off < 1e-26 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[[p, q]].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[[q, q]] - a[[p, p]]) / (2.0 * a[[p, q]]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[[k, p]];
                    let akq = a[[k, q]];
                    a[[k, p]] = c * akp - s * akq;
                    a[[k, q]] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[[p, k]];
                    let aqk = a[[q, k]];
                    a[[p, k]] = c * apk - s * aqk;
                    a[[q, k]] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| a[[i, i]]).collect();
    eig.sort_by(f64::total_cmp);
    eig
}

/// Objective of `½⟨d,Hd⟩ + ⟨g,d⟩ + γ‖x + d‖₁`.
pub fn block_model(
    h: &Array2<f64>,
    g: &Array1<f64>,
    x: &Array1<f64>,
    gamma: f64,
    d: &Array1<f64>,
) -> f64 {
    0.5 * d.dot(&h.dot(d)) + g.dot(d) + gamma * (x + d).iter().map(|v| v.abs()).sum::<f64>()
}

/// Plain (unaccelerated) proximal gradient on the block model, run for a
/// fixed large number of iterations with step `1/L`, `L` from Gershgorin.
pub fn long_prox_gradient(
    h: &Array2<f64>,
    g: &Array1<f64>,
    x: &Array1<f64>,
    gamma: f64,
    iterations: usize,
) -> Array1<f64> {
    let n = g.len();
    let lip = (0..n)
        .map(|i| (0..n).map(|j| h[[i, j]].abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let step = 1.0 / lip;
    let mut u = x.clone();
    for _ in 0..iterations {
        let d = &u - x;
        let grad = h.dot(&d) + g;
        u = (&u - &(grad * step)).mapv(|z| {
            let tau = gamma * step;
            if z > tau {
                z - tau
            } else if z < -tau {
                z + tau
            } else {
                0.0
            }
        });
    }
    u - x
}

/// Central finite difference of a scalar function along `direction`.
pub fn directional_fd(
    f: impl Fn(&Array1<f64>) -> f64,
    x: &Array1<f64>,
    direction: &Array1<f64>,
    h: f64,
) -> f64 {
    (f(&(x + &(direction * h))) - f(&(x - &(direction * h)))) / (2.0 * h)
}
