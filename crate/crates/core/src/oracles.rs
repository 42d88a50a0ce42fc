//! Stochastic first-order oracle: mini-batch averaged block gradients.
//!
//! Samples are drawn uniformly with replacement. Once a batch is more than
//! [`MULTINOMIAL_FACTOR`] times the dataset size, the per-sample multiplicities
//! are drawn from the equivalent multinomial law instead of index by index,
//! which keeps the cost at `O(N)` per call for very large batches.

use rand::Rng;
use rand_distr::{Binomial, Distribution};

use crate::error::{Error, Result};
use crate::linalg::norm_sq;
use crate::problems::Problem;

pub const MULTINOMIAL_FACTOR: u64 = 2;

/// Batch-averaged block gradient together with the number of SFO calls.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientSample {
    pub grad: Vec<f64>,
    pub draws: u64,
}

/// Averages `batch` per-sample gradients of block `i` at `x` into `out`.
pub fn sample_gradient_block_into<R: Rng + ?Sized>(
    problem: &Problem,
    x: &[f64],
    i: usize,
    batch: u64,
    rng: &mut R,
    out: &mut [f64],
) -> Result<u64> {
    if batch < 1 {
        return Err(Error::InvalidBatch(batch));
    }
    let partition = problem.partition();
    partition.check_len(x.len())?;
    let block = partition.range(i)?;
    if out.len() != block.len() {
        return Err(Error::DimensionMismatch { expected: block.len(), got: out.len() });
    }
    out.iter_mut().for_each(|v| *v = 0.0);
    let n = problem.samples() as u64;
    if batch > MULTINOMIAL_FACTOR * n {
        let mut remaining = batch;
        for j in 0..n {
            if remaining == 0 {
                break;
            }
            let count = if j + 1 == n {
                remaining
            } else {
                Binomial::new(remaining, 1.0 / (n - j) as f64).expect("valid binomial parameters").sample(rng)
            };
            if count > 0 {
                problem.accumulate_sample_gradient(x, block.clone(), j as usize, count as f64, out);
                remaining -= count;
            }
        }
    } else {
        for _ in 0..batch {
            let j = rng.random_range(0..n) as usize;
            problem.accumulate_sample_gradient(x, block.clone(), j, 1.0, out);
        }
    }
    let scale = 1.0 / batch as f64;
    out.iter_mut().for_each(|v| *v *= scale);
    Ok(batch)
}

pub fn sample_gradient_block<R: Rng + ?Sized>(problem: &Problem, x: &[f64], i: usize, batch: u64, rng: &mut R) -> Result<GradientSample> {
    let mut grad = vec![0.0; problem.partition().block_dim(i)?];
    let draws = sample_gradient_block_into(problem, x, i, batch, rng, &mut grad)?;
    Ok(GradientSample { grad, draws })
}

/// Exact block gradient over all samples.
pub fn full_gradient_block(problem: &Problem, x: &[f64], i: usize) -> Result<Vec<f64>> {
    let mut g = vec![0.0; problem.partition().block_dim(i)?];
    problem.full_gradient_into(x, i, &mut g)?;
    Ok(g)
}

/// Empirical `E|g_i - grad_i fbar(x)|^2` for single-sample gradients, per block.
pub fn estimate_block_noise<R: Rng + ?Sized>(problem: &Problem, x: &[f64], draws: usize, rng: &mut R) -> Result<Vec<f64>> {
    if draws == 0 {
        return Err(Error::InvalidBatch(0));
    }
    (0..problem.num_blocks())
        .map(|i| {
            let mean = full_gradient_block(problem, x, i)?;
            let mut g = vec![0.0; mean.len()];
            let mut acc = 0.0;
            for _ in 0..draws {
                sample_gradient_block_into(problem, x, i, 1, rng, &mut g)?;
                g.iter_mut().zip(&mean).for_each(|(a, m)| *a -= m);
                acc += norm_sq(&g);
            }
            Ok(acc / draws as f64)
        })
        .collect()
}

/// Noise level `sigma^2` bounding every block's single-sample variance,
/// estimated from 1000 draws per block at `x`.
pub fn estimate_sigma_sq<R: Rng + ?Sized>(problem: &Problem, x: &[f64], rng: &mut R) -> Result<f64> {
    Ok(estimate_block_noise(problem, x, 1000, rng)?.into_iter().fold(0.0, f64::max))
}
