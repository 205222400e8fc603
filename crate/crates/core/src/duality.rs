//! Dual objectives of the regularized logistic problems and the duality gap
//! used as the stopping certificate.

use ndarray::{Array1, ArrayView1};

use crate::error::{Error, Result};
use crate::problems::{l1_norm, logistic_loss, sigmoid, BlockProblem, LogisticProblem};
use crate::subsolvers::soft_threshold;

/// Smallest dual weight; underflowing weights are clamped here, and weights
/// that round to `1/m` are pulled just inside it.
pub const DUAL_WEIGHT_FLOOR: f64 = 1e-300;

/// A dual point `s ∈ (0, 1/m)^m`, stored with its log-odds
/// `aᵢ = log(m sᵢ / (1 − m sᵢ))` so extreme weights stay accurate.
#[derive(Debug, Clone)]
pub struct DualPoint {
    s: Array1<f64>,
    log_odds: Array1<f64>,
}

impl DualPoint {
    /// Validates `0 < m sᵢ < 1` for every `i`.
    pub fn from_weights(s: Array1<f64>) -> Result<Self> {
        let m = s.len() as f64;
        for (index, &si) in s.iter().enumerate() {
            let ms = m * si;
            if !(ms > 0.0 && ms < 1.0) {
                return Err(Error::InvalidDualPoint { index, value: ms });
            }
        }
        let log_odds = s.mapv(|si| {
            let ms = m * si;
            ms.ln() - (-ms).ln_1p()
        });
        Ok(DualPoint { s, log_odds })
    }

    pub fn weights(&self) -> &Array1<f64> {
        &self.s
    }

    pub fn log_odds(&self) -> &Array1<f64> {
        &self.log_odds
    }
}

/// `sᵢ = σ(−yᵢ⟨wⁱ,x⟩)/m`.
pub fn dual_point(problem: &LogisticProblem, x: ArrayView1<'_, f64>) -> DualPoint {
    let image = problem.image(x);
    dual_point_from_image(problem, image.view())
}

fn dual_point_from_image(problem: &LogisticProblem, image: ArrayView1<'_, f64>) -> DualPoint {
    let m = problem.dataset().samples() as f64;
    let margins = problem.margins(image);
    let s = margins.mapv(|z| (sigmoid(-z).min(1.0 - f64::EPSILON) / m).max(DUAL_WEIGHT_FLOOR));
    DualPoint {
        s,
        log_odds: -margins,
    }
}

/// The two entropy-like terms shared by both duals:
/// `−(1/m) Σ log(1 − m sᵢ) − Σ sᵢ log(m sᵢ / (1 − m sᵢ))`.
fn entropy_terms(s: &DualPoint) -> f64 {
    let m = s.s.len() as f64;
    // −log(1 − m s) = log(1 + e^{a})
    let first = s.log_odds.iter().map(|&a| logistic_loss(-a)).sum::<f64>() / m;
    let second =
        s.s.iter()
            .zip(&s.log_odds)
            .map(|(si, a)| si * a)
            .sum::<f64>();
    first - second
}

fn check_samples(problem: &LogisticProblem, s: &DualPoint) -> Result<()> {
    let m = problem.dataset().samples();
    if s.s.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: s.s.len(),
        });
    }
    Ok(())
}

/// `D_μ(s) = −(1/m)Σlog(1−msᵢ) − ‖Σ sᵢyᵢwⁱ‖²/(2μ) − Σ sᵢ log(msᵢ/(1−msᵢ))`.
pub fn dual_value_rlr(problem: &LogisticProblem, s: &DualPoint) -> Result<f64> {
    check_samples(problem, s)?;
    let u = problem.weighted_label_sum(s.s.view());
    Ok(entropy_terms(s) - u.dot(&u) / (2.0 * problem.mu()))
}

/// `h(s) = argmin_h (μ/2)‖h‖² − ⟨u, h⟩ + γ‖h‖₁ = soft_threshold(u, γ)/μ`.
pub fn dual_h(u: ArrayView1<'_, f64>, mu: f64, gamma: f64) -> Array1<f64> {
    soft_threshold(u, gamma) / mu
}

/// `D_{γ,μ}(s)`, the ℓ1 analogue of [`dual_value_rlr`] with `h(s)` in closed
/// form.
pub fn dual_value_srlr(problem: &LogisticProblem, s: &DualPoint) -> Result<f64> {
    check_samples(problem, s)?;
    let mu = problem.mu();
    let gamma = problem.gamma();
    let u = problem.weighted_label_sum(s.s.view());
    let h = dual_h(u.view(), mu, gamma);
    Ok(entropy_terms(s) + 0.5 * mu * h.dot(&h) + gamma * l1_norm(h.view()) - u.dot(&h))
}

/// Picks the dual matching the problem's `γ`.
pub fn dual_value(problem: &LogisticProblem, s: &DualPoint) -> Result<f64> {
    if problem.gamma() > 0.0 {
        dual_value_srlr(problem, s)
    } else {
        dual_value_rlr(problem, s)
    }
}

/// `F(x) − D(s(x))`.
pub fn duality_gap(problem: &LogisticProblem, x: ArrayView1<'_, f64>) -> f64 {
    let image = problem.image(x);
    gap_from_image(problem, x, image.view())
}

pub(crate) fn gap_from_image(
    problem: &LogisticProblem,
    x: ArrayView1<'_, f64>,
    image: ArrayView1<'_, f64>,
) -> f64 {
    let s = dual_point_from_image(problem, image);
    let dual = dual_value(problem, &s).expect("dual point sized from the same dataset");
    problem.objective_at(x, image) - dual
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{generate_dataset, Dataset};
    use ndarray::{arr1, arr2};

    fn single(mu: f64, gamma: f64) -> LogisticProblem {
        let data = Dataset::new(arr2(&[[1.0, 0.0]]), arr1(&[1.0])).unwrap();
        LogisticProblem::new(data, mu, gamma, 1).unwrap()
    }

    #[test]
    fn dual_point_values() {
        let p = LogisticProblem::new(generate_dataset(4, 3, 2).unwrap(), 0.1, 0.0, 1).unwrap();
        let s = dual_point(&p, Array1::zeros(3).view());
        assert!(s.weights().iter().all(|&v| (v - 1.0 / 8.0).abs() < 1e-16));

        let p = single(0.1, 0.0);
        let s = dual_point(&p, arr1(&[3f64.ln(), 0.0]).view());
        assert!((s.weights()[0] - 0.25).abs() < 1e-15);
        let s = dual_point(&p, arr1(&[-(3f64.ln()), 0.0]).view());
        assert!((s.weights()[0] - 0.75).abs() < 1e-15);
    }

    #[test]
    fn extreme_margins_stay_feasible() {
        let p = single(0.1, 0.0);
        for &t in &[-800.0, -40.0, 40.0, 800.0] {
            let s = dual_point(&p, arr1(&[t, 0.0]).view());
            let ms = s.weights()[0];
            assert!(ms > 0.0 && ms < 1.0, "{t}: {ms}");
            assert!(duality_gap(&p, arr1(&[t, 0.0]).view()).is_finite());
        }
    }

    #[test]
    fn rlr_dual_by_hand() {
        let p = single(1.0, 0.0);
        let s = DualPoint::from_weights(arr1(&[0.5])).unwrap();
        let d = dual_value_rlr(&p, &s).unwrap();
        assert!((d - 0.568_147_180_559_945_3).abs() < 1e-15);
    }

    #[test]
    fn srlr_dual_by_hand() {
        let p = single(1.0, 1.0);
        let s = DualPoint::from_weights(arr1(&[0.5])).unwrap();
        let d = dual_value_srlr(&p, &s).unwrap();
        assert!((d - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn rejects_infeasible_weights() {
        assert!(DualPoint::from_weights(arr1(&[0.5, 0.0])).is_err());
        assert!(DualPoint::from_weights(arr1(&[0.5, 0.5])).is_err());
        assert!(DualPoint::from_weights(arr1(&[-0.1, 0.2])).is_err());
        let p = single(1.0, 0.0);
        let s = DualPoint::from_weights(arr1(&[0.2, 0.3])).unwrap();
        assert!(dual_value(&p, &s).is_err());
    }

    #[test]
    fn large_gamma_kills_h() {
        let p = LogisticProblem::new(generate_dataset(6, 4, 9).unwrap(), 0.2, 1e6, 1).unwrap();
        let s = DualPoint::from_weights(arr1(&[0.01, 0.1, 0.05, 0.12, 0.02, 0.08])).unwrap();
        let expected = s
            .weights()
            .iter()
            .map(|&si| {
                let ms = 6.0 * si;
                -(1.0 - ms).ln() / 6.0 - si * (ms / (1.0 - ms)).ln()
            })
            .sum::<f64>();
        assert!((dual_value_srlr(&p, &s).unwrap() - expected).abs() < 1e-14);
    }
}
