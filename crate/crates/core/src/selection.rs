//! Block selection distributions.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Exp};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SelectionKind {
    #[default]
    Uniform,
    /// `p_i = L_i / sum_j L_j`.
    Lipschitz,
}

impl FromStr for SelectionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(Self::Uniform),
            "lipschitz" => Ok(Self::Lipschitz),
            other => Err(Error::InvalidDistribution(format!("unknown selection `{other}` (expected uniform|lipschitz)"))),
        }
    }
}

impl fmt::Display for SelectionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Uniform => "uniform",
            Self::Lipschitz => "lipschitz",
        })
    }
}

/// Categorical distribution over blocks, sampled by inverse CDF.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionDist {
    p: Vec<f64>,
    cdf: Vec<f64>,
}

impl SelectionDist {
    pub fn build(kind: SelectionKind, lipschitz: &[f64]) -> Result<Self> {
        let n = lipschitz.len();
        if n == 0 {
            return Err(Error::InvalidDistribution("no blocks".into()));
        }
        match kind {
            SelectionKind::Uniform => Self::from_weights(&vec![1.0; n]),
            SelectionKind::Lipschitz => Self::from_weights(lipschitz),
        }
    }

    /// Normalises positive weights into probabilities.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidDistribution("no blocks".into()));
        }
        if let Some(i) = weights.iter().position(|&w| !(w > 0.0 && w.is_finite())) {
            return Err(Error::InvalidDistribution(format!("weight {} of block {i} is not positive", weights[i])));
        }
        let total: f64 = weights.iter().sum();
        let p: Vec<f64> = weights.iter().map(|w| w / total).collect();
        let mut cdf = Vec::with_capacity(p.len());
        let mut acc = 0.0;
        for &pi in &p {
            acc += pi;
            cdf.push(acc);
        }
        *cdf.last_mut().expect("nonempty") = 1.0;
        Ok(Self { p, cdf })
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.p
    }

    pub fn num_blocks(&self) -> usize {
        self.p.len()
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        if self.p.len() == 1 {
            return 0;
        }
        let u: f64 = rng.random();
        self.cdf.partition_point(|&c| c <= u).min(self.p.len() - 1)
    }
}

/// Simulates independent Poisson clocks with the given rates up to
/// `horizon` and returns how often each clock produced the global tick.
/// Simultaneous firings go to the lowest index.
pub fn poisson_clock_counts<R: Rng + ?Sized>(rates: &[f64], horizon: f64, rng: &mut R) -> Result<Vec<u64>> {
    if rates.is_empty() {
        return Err(Error::InvalidDistribution("no clocks".into()));
    }
    if rates.iter().any(|&r| !(r > 0.0 && r.is_finite())) || !(horizon > 0.0) {
        return Err(Error::InvalidDistribution("rates and horizon must be positive".into()));
    }
    let clocks: Vec<Exp<f64>> = rates.iter().map(|&r| Exp::new(r).expect("positive rate")).collect();
    let mut next: Vec<f64> = clocks.iter().map(|c| c.sample(rng)).collect();
    let mut counts = vec![0u64; rates.len()];
    loop {
        let (i, t) = next.iter().enumerate().fold((0, f64::INFINITY), |best, (i, &t)| if t < best.1 { (i, t) } else { best });
        if t > horizon {
            break;
        }
        counts[i] += 1;
        next[i] = t + clocks[i].sample(rng);
    }
    Ok(counts)
}

/// Empirical selection frequencies of the Poisson-clock model.
pub fn poisson_clock_frequencies<R: Rng + ?Sized>(rates: &[f64], horizon: f64, rng: &mut R) -> Result<Vec<f64>> {
    let counts = poisson_clock_counts(rates, horizon, rng)?;
    if counts.len() == 1 {
        return Ok(vec![1.0]);
    }
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return Ok(vec![0.0; counts.len()]);
    }
    Ok(counts.iter().map(|&c| c as f64 / total as f64).collect())
}
