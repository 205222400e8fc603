//! Problem instances: ℓ2-regularized logistic loss with an optional ℓ1 term,
//! and a separable quadratic used as a closed-form test problem.

use std::ops::Range;

use ndarray::{s, Array1, Array2, ArrayView1, Axis};
use rand::distr::{Distribution, Open01};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::WeightedNormContext;
use crate::subsolvers::power_iteration_lmax;

/// Blocks wider than this are handed to subsolvers in operator form only.
pub const DEFAULT_MATERIALIZE_THRESHOLD: usize = 4000;

/// Samples `(wⁱ, yᵢ)`: row `i` of `features` is `wⁱ`, labels are ±1.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Array2<f64>,
    labels: Array1<f64>,
}

impl Dataset {
    pub fn new(features: Array2<f64>, labels: Array1<f64>) -> Result<Self> {
        if features.nrows() != labels.len() {
            return Err(Error::InvalidDataset(format!(
                "{} feature rows but {} labels",
                features.nrows(),
                labels.len()
            )));
        }
        if features.nrows() == 0 || features.ncols() == 0 {
            return Err(Error::InvalidDataset("empty dataset".into()));
        }
        if let Some(bad) = labels.iter().find(|&&y| y != 1.0 && y != -1.0) {
            return Err(Error::InvalidDataset(format!("label {bad} is not ±1")));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidDataset("non-finite feature".into()));
        }
        Ok(Dataset { features, labels })
    }

    pub fn features(&self) -> &Array2<f64> {
        &self.features
    }

    pub fn labels(&self) -> &Array1<f64> {
        &self.labels
    }

    /// Number of samples `m`.
    pub fn samples(&self) -> usize {
        self.features.nrows()
    }

    /// Number of features `N`.
    pub fn features_dim(&self) -> usize {
        self.features.ncols()
    }

    pub fn max_row_norm(&self) -> f64 {
        self.features
            .axis_iter(Axis(0))
            .map(|row| row.dot(&row).sqrt())
            .fold(0.0, f64::max)
    }

    /// Scales every nonzero row to unit Euclidean norm.
    pub fn normalize_rows(&mut self) {
        for mut row in self.features.axis_iter_mut(Axis(0)) {
            let norm = row.dot(&row).sqrt();
            if norm > 0.0 {
                row /= norm;
            }
        }
    }
}

/// Uniform `(0,1)` features normalized to unit rows, labels ±1 with equal
/// probability. Deterministic for a fixed seed.
pub fn generate_dataset(m: usize, n: usize, seed: u64) -> Result<Dataset> {
    if m == 0 || n == 0 {
        return Err(Error::InvalidDataset("m and N must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut features = Array2::<f64>::zeros((m, n));
    for v in features.iter_mut() {
        *v = Open01.sample(&mut rng);
    }
    let labels = Array1::from_shape_fn(m, |_| if rng.random_bool(0.5) { 1.0 } else { -1.0 });
    let mut data = Dataset::new(features, labels)?;
    data.normalize_rows();
    Ok(data)
}

/// Contiguous partition of `0..N` into `n` nonempty blocks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockPartition {
    offsets: Vec<usize>,
}

impl BlockPartition {
    /// `n` blocks of near-equal size; the remainder goes to the first blocks.
    pub fn contiguous(dim: usize, n: usize) -> Result<Self> {
        if n == 0 || n > dim {
            return Err(Error::InvalidConfig(format!(
                "cannot split {dim} coordinates into {n} nonempty blocks"
            )));
        }
        let (base, extra) = (dim / n, dim % n);
        let sizes = (0..n)
            .map(|i| base + usize::from(i < extra))
            .collect::<Vec<_>>();
        Self::from_sizes(&sizes)
    }

    pub fn from_sizes(sizes: &[usize]) -> Result<Self> {
        if sizes.is_empty() || sizes.contains(&0) {
            return Err(Error::InvalidConfig("block sizes must be positive".into()));
        }
        let mut offsets = Vec::with_capacity(sizes.len() + 1);
        offsets.push(0);
        for s in sizes {
            offsets.push(offsets.last().unwrap() + s);
        }
        Ok(BlockPartition { offsets })
    }

    pub fn single(dim: usize) -> Result<Self> {
        Self::from_sizes(&[dim])
    }

    pub fn len(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn range(&self, block: usize) -> Range<usize> {
        self.offsets[block]..self.offsets[block + 1]
    }

    pub fn size(&self, block: usize) -> usize {
        self.offsets[block + 1] - self.offsets[block]
    }
}

/// Whether the smooth part is rescaled to a standard self-concordant function
/// before taking damped steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ScaleMode {
    #[default]
    None,
    Auto,
}

impl std::str::FromStr for ScaleMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(ScaleMode::None),
            "auto" => Ok(ScaleMode::Auto),
            other => Err(Error::InvalidConfig(format!(
                "unknown scale mode {other:?}"
            ))),
        }
    }
}

/// Composite objective `F = f + g` with `g` block separable, as seen by the
/// block solvers.
///
/// Every iterate `x` travels with a cached linear image `A x` (for the
/// logistic loss, `A = W`) so block updates cost `O(m·Nᵢ)` rather than a
/// full pass over the data.
pub trait BlockProblem {
    fn dim(&self) -> usize;
    fn partition(&self) -> &BlockPartition;
    /// Weight of the ℓ1 term.
    fn gamma(&self) -> f64;
    /// Lower bound on the smallest Hessian eigenvalue of `f`.
    fn sigma_lower(&self) -> f64;
    /// Factor applied to `F` before damped steps (1 when not rescaling).
    fn step_scale(&self) -> f64;

    fn image(&self, x: ArrayView1<'_, f64>) -> Array1<f64>;
    /// `image += A_block · delta`.
    fn update_image(&self, image: &mut Array1<f64>, block: usize, delta: ArrayView1<'_, f64>);

    fn smooth_value_at(&self, x: ArrayView1<'_, f64>, image: ArrayView1<'_, f64>) -> f64;
    fn block_gradient_at(
        &self,
        x: ArrayView1<'_, f64>,
        image: ArrayView1<'_, f64>,
        block: usize,
    ) -> Array1<f64>;
    fn block_hessian_at(
        &self,
        x: ArrayView1<'_, f64>,
        image: ArrayView1<'_, f64>,
        block: usize,
    ) -> WeightedNormContext<'_>;
    /// Global upper bounds on `λ_max(∇²_ii f)`.
    fn block_lipschitz(&self) -> Vec<f64>;
    fn duality_gap_at(&self, x: ArrayView1<'_, f64>, image: ArrayView1<'_, f64>) -> f64;

    fn objective_at(&self, x: ArrayView1<'_, f64>, image: ArrayView1<'_, f64>) -> f64 {
        self.smooth_value_at(x, image) + self.gamma() * l1_norm(x)
    }
}

pub(crate) fn l1_norm(x: ArrayView1<'_, f64>) -> f64 {
    x.iter().map(|v| v.abs()).sum()
}

/// `log(1 + e^{−z})` without overflow.
#[inline]
pub fn logistic_loss(z: f64) -> f64 {
    if z >= 0.0 {
        (-z).exp().ln_1p()
    } else {
        -z + z.exp().ln_1p()
    }
}

/// `1 / (1 + e^{−z})` without overflow.
#[inline]
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `L(x) = (1/m) Σ log(1 + exp(−yᵢ⟨wⁱ,x⟩)) + (μ/2)‖x‖² + γ‖x‖₁`.
///
/// `γ = 0` gives the ridge-regularized problem, `γ > 0` the sparse variant.
#[derive(Debug, Clone)]
pub struct LogisticProblem {
    dataset: Dataset,
    mu: f64,
    gamma: f64,
    partition: BlockPartition,
    sigma_lower: f64,
    sc_parameter: f64,
    scale_mode: ScaleMode,
    materialize_threshold: usize,
}

impl LogisticProblem {
    /// Splits the features into `blocks` contiguous blocks; `σ` defaults to μ
    /// and the self-concordance parameter to `R/√μ`.
    pub fn new(dataset: Dataset, mu: f64, gamma: f64, blocks: usize) -> Result<Self> {
        if !(mu > 0.0) || !mu.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "mu must be positive, got {mu}"
            )));
        }
        if !(gamma >= 0.0) || !gamma.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "gamma must be nonnegative, got {gamma}"
            )));
        }
        let partition = BlockPartition::contiguous(dataset.features_dim(), blocks)?;
        let sc_parameter = dataset.max_row_norm() / mu.sqrt();
        Ok(LogisticProblem {
            dataset,
            mu,
            gamma,
            partition,
            sigma_lower: mu,
            sc_parameter,
            scale_mode: ScaleMode::None,
            materialize_threshold: DEFAULT_MATERIALIZE_THRESHOLD,
        })
    }

    pub fn with_partition(mut self, partition: BlockPartition) -> Result<Self> {
        if partition.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: partition.dim(),
            });
        }
        self.partition = partition;
        Ok(self)
    }

    pub fn with_scale_mode(mut self, mode: ScaleMode) -> Self {
        self.scale_mode = mode;
        self
    }

    pub fn with_materialize_threshold(mut self, threshold: usize) -> Self {
        self.materialize_threshold = threshold;
        self
    }

    /// Must lie in `(0, μ]`, since `∇²f ⪰ μI` is the only bound known a priori.
    pub fn with_sigma_lower(mut self, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma <= self.mu) {
            return Err(Error::InvalidConfig(format!(
                "sigma_lower must lie in (0, mu], got {sigma}"
            )));
        }
        self.sigma_lower = sigma;
        Ok(self)
    }

    pub fn dataset(&self) -> &Dataset {
        &self.dataset
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn sc_parameter(&self) -> f64 {
        self.sc_parameter
    }

    pub fn scale_mode(&self) -> ScaleMode {
        self.scale_mode
    }

    /// `M_f² / 4`, the factor turning `f` into a standard self-concordant
    /// function; 1 when `M_f = 0`.
    pub fn standardize_scale(&self) -> f64 {
        standardize_scale(self.sc_parameter)
    }

    /// Margins `zᵢ = yᵢ⟨wⁱ, x⟩` from the cached image `W x`.
    pub fn margins(&self, image: ArrayView1<'_, f64>) -> Array1<f64> {
        &image * self.dataset.labels()
    }

    pub fn f_value(&self, x: ArrayView1<'_, f64>) -> f64 {
        let image = self.image(x);
        self.smooth_value_at(x, image.view())
    }

    /// Full gradient, or its restriction to `block`.
    pub fn f_grad(&self, x: ArrayView1<'_, f64>, block: Option<usize>) -> Array1<f64> {
        let image = self.image(x);
        match block {
            Some(b) => self.block_gradient_at(x, image.view(), b),
            None => self.gradient_on(x, image.view(), 0..self.dim()),
        }
    }

    pub fn block_hessian(&self, x: ArrayView1<'_, f64>, block: usize) -> WeightedNormContext<'_> {
        let image = self.image(x);
        self.block_hessian_at(x, image.view(), block)
    }

    /// Hessian restricted to an arbitrary coordinate range, always in
    /// operator form.
    pub fn hessian_on(
        &self,
        image: ArrayView1<'_, f64>,
        range: Range<usize>,
    ) -> WeightedNormContext<'_> {
        let m = self.dataset.samples() as f64;
        let weights = self.margins(image).mapv(|z| {
            let p = sigmoid(z);
            p * (1.0 - p) / m
        });
        WeightedNormContext::Gram {
            factor: self.dataset.features().slice(s![.., range]),
            weights,
            shift: self.mu,
        }
    }

    #[allow(non_snake_case)]
    pub fn F_value(&self, x: ArrayView1<'_, f64>) -> f64 {
        self.f_value(x) + self.gamma * l1_norm(x)
    }

    /// `u = Σ sᵢ yᵢ wⁱ` for per-sample weights `s`.
    pub(crate) fn weighted_label_sum(&self, s: ArrayView1<'_, f64>) -> Array1<f64> {
        let coef = &s * self.dataset.labels();
        self.dataset.features().t().dot(&coef)
    }

    fn gradient_on(
        &self,
        x: ArrayView1<'_, f64>,
        image: ArrayView1<'_, f64>,
        range: Range<usize>,
    ) -> Array1<f64> {
        let m = self.dataset.samples() as f64;
        let coef = ndarray::Zip::from(image)
            .and(self.dataset.labels())
            .map_collect(|&a, &y| -y * sigmoid(-y * a) / m);
        let cols = self.dataset.features().slice(s![.., range.clone()]);
        let mut g = cols.t().dot(&coef);
        g.scaled_add(self.mu, &x.slice(s![range]));
        g
    }
}

/// `M_f² / 4`, or 1 for `M_f = 0` (any positive multiple of a quadratic is
/// already admissible).
pub fn standardize_scale(sc_parameter: f64) -> f64 {
    if sc_parameter == 0.0 {
        1.0
    } else {
        sc_parameter * sc_parameter / 4.0
    }
}

impl BlockProblem for LogisticProblem {
    fn dim(&self) -> usize {
        self.dataset.features_dim()
    }

    fn partition(&self) -> &BlockPartition {
        &self.partition
    }

    fn gamma(&self) -> f64 {
        self.gamma
    }

    fn sigma_lower(&self) -> f64 {
        self.sigma_lower
    }

    fn step_scale(&self) -> f64 {
        match self.scale_mode {
            ScaleMode::None => 1.0,
            ScaleMode::Auto => self.standardize_scale(),
        }
    }

    fn image(&self, x: ArrayView1<'_, f64>) -> Array1<f64> {
        self.dataset.features().dot(&x)
    }

    fn update_image(&self, image: &mut Array1<f64>, block: usize, delta: ArrayView1<'_, f64>) {
        let cols = self
            .dataset
            .features()
            .slice(s![.., self.partition.range(block)]);
        ndarray::linalg::general_mat_vec_mul(1.0, &cols, &delta, 1.0, image);
    }

    fn smooth_value_at(&self, x: ArrayView1<'_, f64>, image: ArrayView1<'_, f64>) -> f64 {
        let m = self.dataset.samples() as f64;
        let loss = image
            .iter()
            .zip(self.dataset.labels())
            .map(|(a, y)| logistic_loss(y * a))
            .sum::<f64>()
            / m;
        loss + 0.5 * self.mu * x.dot(&x)
    }

    fn block_gradient_at(
        &self,
        x: ArrayView1<'_, f64>,
        image: ArrayView1<'_, f64>,
        block: usize,
    ) -> Array1<f64> {
        self.gradient_on(x, image, self.partition.range(block))
    }

    fn block_hessian_at(
        &self,
        _x: ArrayView1<'_, f64>,
        image: ArrayView1<'_, f64>,
        block: usize,
    ) -> WeightedNormContext<'_> {
        let ctx = self.hessian_on(image, self.partition.range(block));
        if self.partition.size(block) <= self.materialize_threshold {
            ctx.materialize()
        } else {
            ctx
        }
    }

    fn block_lipschitz(&self) -> Vec<f64> {
        let m = self.dataset.samples() as f64;
        (0..self.partition.len())
            .map(|b| {
                let cols = self
                    .dataset
                    .features()
                    .slice(s![.., self.partition.range(b)]);
                let gram = |u: ArrayView1<'_, f64>| cols.t().dot(&cols.dot(&u));
                power_iteration_lmax(gram, cols.ncols()) / (4.0 * m) + self.mu
            })
            .collect()
    }

    fn duality_gap_at(&self, x: ArrayView1<'_, f64>, image: ArrayView1<'_, f64>) -> f64 {
        crate::duality::gap_from_image(self, x, image)
    }
}

/// `f(x) = ½ Σ qⱼ xⱼ² + ⟨c, x⟩` plus `γ‖x‖₁`, with `q > 0`. The minimizer is
/// available in closed form, which makes it a convenient reference problem.
#[derive(Debug, Clone)]
pub struct QuadraticProblem {
    curvature: Array1<f64>,
    linear: Array1<f64>,
    gamma: f64,
    partition: BlockPartition,
}

impl QuadraticProblem {
    pub fn new(
        curvature: Array1<f64>,
        linear: Array1<f64>,
        gamma: f64,
        partition: BlockPartition,
    ) -> Result<Self> {
        if curvature.len() != linear.len() || partition.dim() != curvature.len() {
            return Err(Error::DimensionMismatch {
                expected: curvature.len(),
                got: linear.len().max(partition.dim()),
            });
        }
        if curvature.iter().any(|&q| !(q > 0.0)) {
            return Err(Error::InvalidConfig("curvature must be positive".into()));
        }
        if !(gamma >= 0.0) {
            return Err(Error::InvalidConfig("gamma must be nonnegative".into()));
        }
        Ok(QuadraticProblem {
            curvature,
            linear,
            gamma,
            partition,
        })
    }

    /// `½‖x‖²` on a single block.
    pub fn half_squared_norm(dim: usize) -> Self {
        QuadraticProblem {
            curvature: Array1::ones(dim),
            linear: Array1::zeros(dim),
            gamma: 0.0,
            partition: BlockPartition::single(dim).expect("dim > 0"),
        }
    }

    pub fn minimizer(&self) -> Array1<f64> {
        ndarray::Zip::from(&self.curvature)
            .and(&self.linear)
            .map_collect(|&q, &c| soft(-c, self.gamma) / q)
    }

    pub fn optimal_value(&self) -> f64 {
        let x = self.minimizer();
        self.objective_at(x.view(), ndarray::ArrayView1::from(&[]))
    }
}

fn soft(z: f64, tau: f64) -> f64 {
    z.signum() * (z.abs() - tau).max(0.0)
}

impl BlockProblem for QuadraticProblem {
    fn dim(&self) -> usize {
        self.curvature.len()
    }

    fn partition(&self) -> &BlockPartition {
        &self.partition
    }

    fn gamma(&self) -> f64 {
        self.gamma
    }

    fn sigma_lower(&self) -> f64 {
        self.curvature.iter().copied().fold(f64::INFINITY, f64::min)
    }

    fn step_scale(&self) -> f64 {
        1.0
    }

    fn image(&self, _x: ArrayView1<'_, f64>) -> Array1<f64> {
        Array1::zeros(0)
    }

    fn update_image(&self, _image: &mut Array1<f64>, _block: usize, _delta: ArrayView1<'_, f64>) {}

    fn smooth_value_at(&self, x: ArrayView1<'_, f64>, _image: ArrayView1<'_, f64>) -> f64 {
        x.iter()
            .zip(&self.curvature)
            .zip(&self.linear)
            .map(|((x, q), c)| 0.5 * q * x * x + c * x)
            .sum()
    }

    fn block_gradient_at(
        &self,
        x: ArrayView1<'_, f64>,
        _image: ArrayView1<'_, f64>,
        block: usize,
    ) -> Array1<f64> {
        let r = self.partition.range(block);
        &x.slice(s![r.clone()]) * &self.curvature.slice(s![r.clone()]) + self.linear.slice(s![r])
    }

    fn block_hessian_at(
        &self,
        _x: ArrayView1<'_, f64>,
        _image: ArrayView1<'_, f64>,
        block: usize,
    ) -> WeightedNormContext<'_> {
        let q = self.curvature.slice(s![self.partition.range(block)]);
        WeightedNormContext::dense(Array2::from_diag(&q))
    }

    fn block_lipschitz(&self) -> Vec<f64> {
        (0..self.partition.len())
            .map(|b| {
                self.curvature
                    .slice(s![self.partition.range(b)])
                    .iter()
                    .copied()
                    .fold(0.0, f64::max)
            })
            .collect()
    }

    fn duality_gap_at(&self, x: ArrayView1<'_, f64>, image: ArrayView1<'_, f64>) -> f64 {
        self.objective_at(x, image) - self.optimal_value()
    }
}
