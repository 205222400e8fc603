//! The conjugate pair `ω(t) = t − ln(1+t)` and `ω★(t) = −t − ln(1−t)` that
//! governs damped Newton descent on self-concordant functions, together with
//! the weighted norms induced by a Hessian.

use crate::error::{Error, Result};
use crate::linalg::WeightedNormContext;
use ndarray::ArrayView1;

/// `ω(t) = t − ln(1+t)`, defined for `t > −1`.
pub fn omega(t: f64) -> Result<f64> {
    if !(t > -1.0) {
        return Err(Error::Domain {
            function: "omega",
            value: t,
        });
    }
    Ok(omega_unchecked(t))
}

#[inline]
pub(crate) fn omega_unchecked(t: f64) -> f64 {
    if t.abs() < 1e-4 {
        // series t²/2 − t³/3 + t⁴/4 avoids cancellation near the origin
        let t2 = t * t;
        t2 * (0.5 - t / 3.0 + t2 / 4.0 - t2 * t / 5.0)
    } else {
        t - t.ln_1p()
    }
}

/// Derivative `ω'(t) = t / (1+t)`.
pub fn omega_prime(t: f64) -> f64 {
    t / (1.0 + t)
}

/// `ω★(t) = −t − ln(1−t)`, defined on `[0, 1)`.
pub fn omega_star(t: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&t) {
        return Err(Error::Domain {
            function: "omega_star",
            value: t,
        });
    }
    Ok(omega_star_unchecked(t))
}

#[inline]
fn omega_star_unchecked(t: f64) -> f64 {
    if t < 1e-4 {
        let t2 = t * t;
        t2 * (0.5 + t / 3.0 + t2 / 4.0 + t2 * t / 5.0)
    } else {
        -t - (-t).ln_1p()
    }
}

/// Inverse of `ω★` on `[0, 1)`: the unique `t` with `ω★(t) = s`.
///
/// Safeguarded Newton from `min(0.99, √(2s))`; a step that leaves the current
/// bracket is replaced by bisection.
pub fn omega_star_inv(s: f64) -> Result<f64> {
    if !(s >= 0.0) || !s.is_finite() {
        return Err(Error::Domain {
            function: "omega_star_inv",
            value: s,
        });
    }
    if s == 0.0 {
        return Ok(0.0);
    }
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    let mut t = (2.0 * s).sqrt().min(0.99);
    for _ in 0..200 {
        let residual = omega_star_unchecked(t) - s;
        if residual > 0.0 {
            hi = t;
        } else {
            lo = t;
        }
        if residual == 0.0 || hi - lo <= f64::EPSILON * hi {
            break;
        }
        // ω★'(t) = t / (1 − t)
        let slope = t / (1.0 - t);
        let newton = t - residual / slope;
        let next = if slope > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - t).abs() <= 1e-17 {
            t = next;
            break;
        }
        t = next;
    }
    Ok(polish_ulp(t, s))
}

/// Walks to the neighbouring float with the smallest `|ω★(t) − s|`.
fn polish_ulp(mut t: f64, s: f64) -> f64 {
    let err = |t: f64| (omega_star_unchecked(t) - s).abs();
    let mut best = err(t);
    for _ in 0..8 {
        let candidates = [t.next_down().max(0.0), t.next_up()];
        let Some((cand, e)) = candidates
            .into_iter()
            .filter(|&c| c < 1.0)
            .map(|c| (c, err(c)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
        else {
            break;
        };
        if e >= best {
            break;
        }
        t = cand;
        best = e;
    }
    t
}

/// `‖u‖_H = √⟨u, Hu⟩`.
pub fn weighted_norm(ctx: &WeightedNormContext<'_>, u: ArrayView1<'_, f64>) -> Result<f64> {
    check_dim(ctx.dim(), u.len())?;
    Ok(ctx.quadratic_form(u).max(0.0).sqrt())
}

/// `‖v‖*_H = √⟨v, H⁻¹v⟩`, computed with a Cholesky solve on materialized
/// matrices and a tight conjugate gradient solve on operators.
pub fn dual_weighted_norm(ctx: &WeightedNormContext<'_>, v: ArrayView1<'_, f64>) -> Result<f64> {
    check_dim(ctx.dim(), v.len())?;
    let solved = ctx.solve(v)?;
    Ok(v.dot(&solved).max(0.0).sqrt())
}

fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{arr1, arr2, Array2};

    #[test]
    fn omega_values() {
        assert_eq!(omega(0.0).unwrap(), 0.0);
        assert!((omega(1.0).unwrap() - (1.0 - 2f64.ln())).abs() < 1e-15);
        assert!((omega(0.2).unwrap() - (0.2 - 1.2f64.ln())).abs() < 1e-15);
        assert!(omega(-1.0).is_err());
        assert!(omega(-2.0).is_err());
    }

    #[test]
    fn omega_star_values() {
        assert_eq!(omega_star(0.0).unwrap(), 0.0);
        assert!((omega_star(0.5).unwrap() - 0.193_147_180_559_945_3).abs() < 1e-15);
        assert!((omega_star(0.9).unwrap() - 1.402_585_092_994_045_7).abs() < 1e-14);
        assert!(omega_star(1.0).is_err());
        assert!(omega_star(-0.1).is_err());
    }

    #[test]
    fn series_branches_are_continuous() {
        for &t in &[9.99e-5, 1.0001e-4] {
            assert!((omega_unchecked(t) - (t - t.ln_1p())).abs() < 1e-16);
            assert!((omega_star_unchecked(t) - (-t - (-t).ln_1p())).abs() < 1e-16);
        }
    }

    fn bisection_inverse(s: f64) -> f64 {
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if -mid - (-mid).ln_1p() > s {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn omega_star_inv_matches_bisection() {
        assert_eq!(omega_star_inv(0.0).unwrap(), 0.0);
        assert!((omega_star_inv(0.193_147_180_5).unwrap() - 0.5).abs() < 1e-9);
        assert!((omega_star_inv(1.402_585_092_9).unwrap() - 0.9).abs() < 1e-9);
        for i in 0..=400 {
            let s = i as f64 * 0.05;
            let t = omega_star_inv(s).unwrap();
            assert!((t - bisection_inverse(s)).abs() <= 1e-12, "s = {s}");
        }
        assert!(omega_star_inv(-1e-3).is_err());
    }

    #[test]
    fn norms_by_hand() {
        let id = WeightedNormContext::dense(Array2::eye(2));
        assert_eq!(weighted_norm(&id, arr1(&[3.0, 4.0]).view()).unwrap(), 5.0);
        assert!((dual_weighted_norm(&id, arr1(&[3.0, 4.0]).view()).unwrap() - 5.0).abs() < 1e-14);

        let d = WeightedNormContext::dense(arr2(&[[4.0, 0.0], [0.0, 1.0]]));
        let u = arr1(&[1.0, 1.0]);
        assert!((weighted_norm(&d, u.view()).unwrap() - 5f64.sqrt()).abs() < 1e-14);
        assert!((dual_weighted_norm(&d, u.view()).unwrap() - 1.25f64.sqrt()).abs() < 1e-14);
        assert_eq!(weighted_norm(&d, arr1(&[0.0, 0.0]).view()).unwrap(), 0.0);
        assert!(weighted_norm(&d, arr1(&[1.0]).view()).is_err());
    }
}
