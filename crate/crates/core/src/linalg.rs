//! Symmetric positive definite operators and the small dense kernels used on
//! them.

use crate::error::{Error, Result};
use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};

/// A symmetric positive definite operator `H` of dimension `d`, held either as
/// a dense matrix or in the structured form `Aᵀ diag(c) A + shift·I`.
#[derive(Debug, Clone)]
pub enum WeightedNormContext<'a> {
    Dense(Array2<f64>),
    Gram {
        /// `A`, an `m × d` view.
        factor: ArrayView2<'a, f64>,
        /// Nonnegative per-row weights `c`.
        weights: Array1<f64>,
        shift: f64,
    },
}

impl<'a> WeightedNormContext<'a> {
    pub fn dense(matrix: Array2<f64>) -> Self {
        debug_assert_eq!(matrix.nrows(), matrix.ncols());
        WeightedNormContext::Dense(matrix)
    }

    pub fn dim(&self) -> usize {
        match self {
            WeightedNormContext::Dense(h) => h.nrows(),
            WeightedNormContext::Gram { factor, .. } => factor.ncols(),
        }
    }

    pub fn is_materialized(&self) -> bool {
        matches!(self, WeightedNormContext::Dense(_))
    }

    /// `H u`.
    pub fn apply(&self, u: ArrayView1<'_, f64>) -> Array1<f64> {
        match self {
            WeightedNormContext::Dense(h) => h.dot(&u),
            WeightedNormContext::Gram {
                factor,
                weights,
                shift,
            } => {
                let mut t = factor.dot(&u);
                t *= weights;
                let mut out = factor.t().dot(&t);
                out.scaled_add(*shift, &u);
                out
            }
        }
    }

    /// `⟨u, H u⟩`, clamped at zero.
    pub fn quadratic_form(&self, u: ArrayView1<'_, f64>) -> f64 {
        let value = match self {
            WeightedNormContext::Dense(h) => u.dot(&h.dot(&u)),
            WeightedNormContext::Gram {
                factor,
                weights,
                shift,
            } => {
                let t = factor.dot(&u);
                t.iter().zip(weights).map(|(a, w)| w * a * a).sum::<f64>() + shift * u.dot(&u)
            }
        };
        value.max(0.0)
    }

    /// Dense copy of `H`.
    pub fn to_dense(&self) -> Array2<f64> {
        match self {
            WeightedNormContext::Dense(h) => h.clone(),
            WeightedNormContext::Gram {
                factor,
                weights,
                shift,
            } => {
                let mut scaled = factor.to_owned();
                for (mut row, w) in scaled.axis_iter_mut(Axis(0)).zip(weights) {
                    row *= *w;
                }
                let mut h = factor.t().dot(&scaled);
                for i in 0..h.nrows() {
                    h[[i, i]] += shift;
                }
                h
            }
        }
    }

    /// Returns the dense form, converting the structured form.
    pub fn materialize(self) -> WeightedNormContext<'a> {
        match self {
            WeightedNormContext::Dense(_) => self,
            other => WeightedNormContext::Dense(other.to_dense()),
        }
    }

    /// Solves `H x = b`: Cholesky on dense matrices, conjugate gradient to
    /// relative residual 1e−13 on the structured form.
    pub fn solve(&self, b: ArrayView1<'_, f64>) -> Result<Array1<f64>> {
        match self {
            WeightedNormContext::Dense(h) => Cholesky::factor(h.view())?.solve(b),
            _ => {
                let tol = 1e-13 * b.dot(&b).sqrt();
                conjugate_gradient(|u| self.apply(u), b, tol, 10 * self.dim() + 100)
            }
        }
    }
}

/// Conjugate gradient iterates for `H x = b` from `x = 0`. Each item is the
/// iterate after one more step together with its residual `b − Hx`; the
/// iterator ends after an exact zero residual.
pub struct ConjugateGradient<F> {
    apply: F,
    x: Array1<f64>,
    r: Array1<f64>,
    p: Array1<f64>,
    rr: f64,
}

impl<F> ConjugateGradient<F>
where
    F: Fn(ArrayView1<'_, f64>) -> Array1<f64>,
{
    pub fn new(apply: F, b: ArrayView1<'_, f64>) -> Self {
        let r = b.to_owned();
        ConjugateGradient {
            apply,
            x: Array1::zeros(b.len()),
            rr: r.dot(&r),
            p: r.clone(),
            r,
        }
    }
}

impl<F> Iterator for ConjugateGradient<F>
where
    F: Fn(ArrayView1<'_, f64>) -> Array1<f64>,
{
    type Item = Result<(Array1<f64>, Array1<f64>)>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.rr == 0.0 {
            return None;
        }
        let hp = (self.apply)(self.p.view());
        let curvature = self.p.dot(&hp);
        if !(curvature > 0.0) {
            self.rr = 0.0;
            return Some(Err(Error::NotPositiveDefinite));
        }
        let alpha = self.rr / curvature;
        self.x.scaled_add(alpha, &self.p);
        self.r.scaled_add(-alpha, &hp);
        let rr_next = self.r.dot(&self.r);
        self.p *= rr_next / self.rr;
        self.p += &self.r;
        self.rr = rr_next;
        Some(Ok((self.x.clone(), self.r.clone())))
    }
}

/// Plain conjugate gradient for `H x = b` from `x = 0`, stopping when
/// `‖b − Hx‖ ≤ tol`.
pub fn conjugate_gradient(
    apply: impl Fn(ArrayView1<'_, f64>) -> Array1<f64>,
    b: ArrayView1<'_, f64>,
    tol: f64,
    max_iter: usize,
) -> Result<Array1<f64>> {
    if b.dot(&b).sqrt() <= tol {
        return Ok(Array1::zeros(b.len()));
    }
    for step in ConjugateGradient::new(apply, b).take(max_iter) {
        let (x, r) = step?;
        if r.dot(&r).sqrt() <= tol {
            return Ok(x);
        }
    }
    Err(Error::NoConvergence {
        solver: "conjugate gradient",
        iterations: max_iter,
    })
}

/// Lower-triangular Cholesky factor `H = L Lᵀ` of a dense SPD matrix.
#[derive(Debug, Clone)]
pub struct Cholesky {
    lower: Array2<f64>,
}

impl Cholesky {
    pub fn factor(h: ArrayView2<'_, f64>) -> Result<Self> {
        let n = h.nrows();
        if h.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: h.ncols(),
            });
        }
        let mut l = Array2::<f64>::zeros((n, n));
        for j in 0..n {
            let mut diag = h[[j, j]];
            for k in 0..j {
                diag -= l[[j, k]] * l[[j, k]];
            }
            if !(diag > 0.0) {
                return Err(Error::NotPositiveDefinite);
            }
            let pivot = diag.sqrt();
            l[[j, j]] = pivot;
            for i in j + 1..n {
                let mut v = h[[i, j]];
                for k in 0..j {
                    v -= l[[i, k]] * l[[j, k]];
                }
                l[[i, j]] = v / pivot;
            }
        }
        Ok(Cholesky { lower: l })
    }

    pub fn solve(&self, b: ArrayView1<'_, f64>) -> Result<Array1<f64>> {
        let n = self.lower.nrows();
        if b.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: b.len(),
            });
        }
        let l = &self.lower;
        let mut y = b.to_owned();
        for i in 0..n {
            let mut v = y[i];
            for k in 0..i {
                v -= l[[i, k]] * y[k];
            }
            y[i] = v / l[[i, i]];
        }
        for i in (0..n).rev() {
            let mut v = y[i];
            for k in i + 1..n {
                v -= l[[k, i]] * y[k];
            }
            y[i] = v / l[[i, i]];
        }
        Ok(y)
    }
}
