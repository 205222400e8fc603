//! Randomized block accelerated proximal gradient baseline.
//!
//! Accelerated randomized proximal coordinate gradient for strongly convex
//! objectives, with constant parameters:
//!
//! * `Lᵢ` from [`block_lipschitz`], `μ_L = σ / maxᵢ Lᵢ`, `α = √μ_L / n`;
//! * `y = (x + α z)/(1 + α)`;
//! * `z⁺ = (1 − α) z + α y` off block `i`, and on block `i`
//!   `z⁺ᵢ = prox_{γ/(nαLᵢ)}(wᵢ − ∇ᵢf(y)/(nαLᵢ))` with `w = (1 − α) z + α y`;
//! * `x⁺ = y + nα(z⁺ − z) + nα²(z − y)`.
//!
//! Every update is affine, so the cached images `W x`, `W z` follow the same
//! recurrences and a step costs `O(N + m·Nᵢ)`. Blocks are sampled uniformly
//! and termination matches the RBPDN driver.

use std::time::Instant;

use ndarray::{s, Array1};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::problems::BlockProblem;
use crate::solver::{
    finish, BlockSampler, Iterate, IterationRecord, SolveResult, SolveStatus, SolverConfig,
};
use crate::subsolvers::soft_threshold;

/// Per-block gradient Lipschitz bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockLipschitz {
    pub values: Vec<f64>,
}

/// For the logistic loss, `Lᵢ = λ_max(WᵢᵀWᵢ)/(4m) + μ`, a global bound since
/// the logistic curvature never exceeds ¼.
pub fn block_lipschitz<P: BlockProblem + ?Sized>(problem: &P) -> BlockLipschitz {
    BlockLipschitz {
        values: problem.block_lipschitz(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Momentum {
    #[default]
    On,
    /// Plain randomized block proximal gradient.
    Off,
}

pub fn rbapg_solve<P: BlockProblem + ?Sized>(
    problem: &P,
    x0: Option<Array1<f64>>,
    config: &SolverConfig,
) -> Result<SolveResult> {
    rbapg_solve_with(problem, x0, config, Momentum::On)
}

pub fn rbapg_solve_with<P: BlockProblem + ?Sized>(
    problem: &P,
    x0: Option<Array1<f64>>,
    config: &SolverConfig,
    momentum: Momentum,
) -> Result<SolveResult> {
    let partition = problem.partition().clone();
    let n = partition.len();
    if config.probabilities.is_some() {
        return Err(Error::InvalidConfig(
            "the accelerated baseline samples blocks uniformly".into(),
        ));
    }
    config.validate(n)?;
    let lips = block_lipschitz(problem).values;
    let sampler = BlockSampler::new(None, n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let gamma = problem.gamma();
    let x0 = x0.unwrap_or_else(|| Array1::zeros(problem.dim()));

    let l_max = lips.iter().copied().fold(0.0, f64::max);
    let strong = (problem.sigma_lower() / l_max).min(1.0);
    let alpha = match momentum {
        Momentum::On => strong.sqrt() / n as f64,
        Momentum::Off => 0.0,
    };
    let na = n as f64 * alpha;

    let mut x = Iterate::new(problem, x0.clone())?;
    let mut z = Iterate::new(problem, x0)?;
    let start = Instant::now();
    let mut trace = Vec::new();
    let mut status = SolveStatus::MaxIter;
    let mut last_gap = None;

    for k in 1..=config.max_iter {
        let block = sampler.sample_block(&mut rng);
        let range = partition.range(block);
        let lambda;
        if momentum == Momentum::Off {
            let g = problem.block_gradient_at(x.x().view(), x.image().view(), block);
            let xb = x.x().slice(s![range.clone()]);
            let target = &xb - &(g / lips[block]);
            let delta = soft_threshold(target.view(), gamma / lips[block]) - xb;
            lambda = delta.dot(&delta).sqrt();
            x.update_block(problem, block, delta.view());
        } else {
            let y = affine(&x, 1.0 / (1.0 + alpha), &z, alpha / (1.0 + alpha));
            let g = problem.block_gradient_at(y.x().view(), y.image().view(), block);
            let mut z_next = affine(&z, 1.0 - alpha, &y, alpha);
            let step = 1.0 / (na * lips[block]);
            let wb = z_next.x().slice(s![range.clone()]);
            let target = &wb - &(g * step);
            let delta = soft_threshold(target.view(), gamma * step) - wb;
            z_next.update_block(problem, block, delta.view());
            // x⁺ = (1 − nα²) y + nα z⁺ + (nα² − nα) z
            let c_y = 1.0 - na * alpha;
            let c_z = na * alpha - na;
            let mut x_next = affine(&y, c_y, &z_next, na);
            x_next.axpy(c_z, &z);
            let change = &x_next.x().slice(s![range.clone()]) - &x.x().slice(s![range]);
            lambda = change.dot(&change).sqrt();
            x = x_next;
            z = z_next;
            if k % crate::solver::IMAGE_REFRESH_INTERVAL == 0 {
                x = Iterate::new(problem, x.into_x())?;
                z = Iterate::new(problem, z.into_x())?;
            }
        }
        let gap = (k % config.gap_check_interval == 0).then(|| x.gap(problem));
        trace.push(IterationRecord {
            k,
            block,
            lambda,
            residual_norm: 0.0,
            objective: x.objective(problem),
            gap,
            elapsed_seconds: start.elapsed().as_secs_f64(),
        });
        last_gap = gap.map(|g| (k, g));
        if matches!(gap, Some(g) if g <= config.tol) {
            status = SolveStatus::Converged;
            break;
        }
    }
    Ok(finish(problem, x, status, trace, last_gap, start))
}

/// `a·p + b·q` for iterate and image alike.
fn affine(p: &Iterate, a: f64, q: &Iterate, b: f64) -> Iterate {
    let mut out = p.clone();
    out.scale(a);
    out.axpy(b, q);
    out
}
