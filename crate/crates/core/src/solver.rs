//! Asynchronous variance-reduced block proximal stochastic gradient method.
//!
//! One iteration picks a block `i ~ p`, averages `N_i` sampled block
//! gradients at a (possibly delayed) base point, and applies a single block
//! proximal step with the block's own steplength. All other blocks keep
//! their values. Asynchrony is modelled by a single virtual global clock.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::metrics::gradient_mapping;
use crate::oracles::sample_gradient_block_into;
use crate::problems::{ObjectiveTracker, Problem, ProblemKind};
use crate::schedules::{BatchPolicy, BlockClocks, ClockMode, ScheduleSpec, BATCH_SATURATION, PL_STEP_FACTOR};
use crate::selection::{SelectionDist, SelectionKind};

/// Iteration cap of the reference solver.
pub const REFERENCE_MAX_ITER: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SteplengthRule {
    /// `alpha_i = 1 / (4 L_i)`.
    QuarterInverse,
    /// `alpha_i = (2 - sqrt 3) / L_i`.
    PlOptimal,
    /// `alpha_i = 1 / L_i`.
    Inverse,
    /// One shared value.
    Fixed(f64),
    /// Shared `alpha = c / L` with `L` the global Lipschitz constant.
    GlobalScaled(f64),
}

impl SteplengthRule {
    pub fn steps(&self, problem: &Problem) -> Result<Vec<f64>> {
        let l = problem.lipschitz();
        let steps: Vec<f64> = match *self {
            Self::QuarterInverse => l.iter().map(|li| 1.0 / (4.0 * li)).collect(),
            Self::PlOptimal => l.iter().map(|li| PL_STEP_FACTOR / li).collect(),
            Self::Inverse => l.iter().map(|li| 1.0 / li).collect(),
            Self::Fixed(a) => vec![a; l.len()],
            Self::GlobalScaled(c) => vec![c / problem.global_lipschitz(); l.len()],
        };
        if let Some(&bad) = steps.iter().find(|a| !(**a > 0.0 && a.is_finite())) {
            return Err(Error::InvalidStep(bad));
        }
        Ok(steps)
    }

    pub fn is_shared(&self) -> bool {
        matches!(self, Self::Fixed(_) | Self::GlobalScaled(_))
    }
}

impl FromStr for SteplengthRule {
    type Err = Error;

    /// `quarter_inverse`, `pl_optimal`, `inverse`, `fixed:a` or `global:c`.
    fn from_str(s: &str) -> Result<Self> {
        let value = |arg: &str| -> Result<f64> {
            match arg.trim().parse::<f64>() {
                Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
                _ => Err(Error::InvalidConfig(format!("steplength value `{arg}` must be positive"))),
            }
        };
        match s.split_once(':') {
            Some(("fixed", arg)) => Ok(Self::Fixed(value(arg)?)),
            Some(("global", arg)) => Ok(Self::GlobalScaled(value(arg)?)),
            None if s == "quarter_inverse" => Ok(Self::QuarterInverse),
            None if s == "pl_optimal" => Ok(Self::PlOptimal),
            None if s == "inverse" => Ok(Self::Inverse),
            _ => Err(Error::InvalidConfig(format!("unknown steplength rule `{s}`"))),
        }
    }
}

impl fmt::Display for SteplengthRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::QuarterInverse => f.write_str("quarter_inverse"),
            Self::PlOptimal => f.write_str("pl_optimal"),
            Self::Inverse => f.write_str("inverse"),
            Self::Fixed(a) => write!(f, "fixed:{a}"),
            Self::GlobalScaled(c) => write!(f, "global:{c}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Budget {
    Iterations(u64),
    /// Stop once cumulative SFO draws reach `epochs * N`.
    Epochs(u64),
}

/// Upper limit on per-iteration batches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BatchCap {
    #[default]
    None,
    /// Requests of at least `N` samples use one exact pass over the data.
    Dataset,
}

impl FromStr for BatchCap {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Self::None),
            "dataset" => Ok(Self::Dataset),
            other => Err(Error::InvalidConfig(format!("unknown batch cap `{other}` (expected none|dataset)"))),
        }
    }
}

impl fmt::Display for BatchCap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::None => "none",
            Self::Dataset => "dataset",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub steplength: SteplengthRule,
    pub schedule: ScheduleSpec,
    pub clock: ClockMode,
    pub batch_cap: BatchCap,
    pub selection: SelectionKind,
    /// Largest gradient staleness `D`.
    pub delay_max: usize,
    pub budget: Budget,
    pub seed: u64,
    /// Evaluate `|G|^2` every this many iterations; 0 disables it.
    pub metrics_stride: u64,
    /// Noise level for the constant-eps schedules.
    pub sigma_sq: Option<f64>,
    /// Starting point; zero when absent.
    pub x0: Option<Vec<f64>>,
}

impl SolverConfig {
    pub fn new(budget: Budget) -> Self {
        Self {
            steplength: SteplengthRule::Inverse,
            schedule: ScheduleSpec::Uniform(BatchPolicy::Constant(1)),
            clock: ClockMode::Block,
            batch_cap: BatchCap::None,
            selection: SelectionKind::Uniform,
            delay_max: 0,
            budget,
            seed: 0,
            metrics_stride: 0,
            sigma_sq: None,
            x0: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.budget {
            Budget::Epochs(0) => return Err(Error::InvalidConfig("epoch budget must be positive".into())),
            Budget::Iterations(_) | Budget::Epochs(_) => {}
        }
        if self.schedule.needs_sigma() && !self.sigma_sq.is_some_and(|s| s >= 0.0) {
            return Err(Error::InvalidConfig(format!("schedule `{}` needs sigma_sq", self.schedule)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRow {
    pub k: u64,
    /// Block updated to reach this row; `None` for the initial row.
    pub block: Option<usize>,
    pub batch: u64,
    pub po_calls: u64,
    pub sfo_calls: u64,
    pub objective: f64,
    pub gmap_sq: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub rows: Vec<RunRow>,
    pub x_final: Vec<f64>,
}

impl RunRecord {
    pub fn final_row(&self) -> &RunRow {
        self.rows.last().expect("record has an initial row")
    }
}

/// Outcome of one iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepInfo {
    pub block: usize,
    pub batch: u64,
    pub delay: usize,
}

/// Mutable state of a single trajectory.
pub struct SolverState<'p> {
    problem: &'p Problem,
    steps: Vec<f64>,
    policies: Vec<BatchPolicy>,
    dist: SelectionDist,
    clock: ClockMode,
    cap: BatchCap,
    delay_max: usize,
    x: Vec<f64>,
    clocks: BlockClocks,
    /// `history[d - 1]` holds `x(k - d)`.
    history: VecDeque<Vec<f64>>,
    po_calls: u64,
    sfo_calls: u64,
    tracker: ObjectiveTracker,
    rng: ChaCha8Rng,
    grad: Vec<f64>,
    shifted: Vec<f64>,
    updated: Vec<f64>,
}

impl<'p> SolverState<'p> {
    pub fn new(problem: &'p Problem, config: &SolverConfig) -> Result<Self> {
        config.validate()?;
        let steps = config.steplength.steps(problem)?;
        let policies = config.schedule.resolve(problem.lipschitz(), problem.pl_mu(), config.sigma_sq)?;
        let dist = SelectionDist::build(config.selection, problem.lipschitz())?;
        let x = match &config.x0 {
            Some(x0) => {
                problem.partition().check_len(x0.len())?;
                x0.clone()
            }
            None => vec![0.0; problem.dim()],
        };
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("starting point is not finite".into()));
        }
        let widest = problem.partition().dims().iter().copied().max().unwrap_or(0);
        Ok(Self {
            problem,
            steps,
            policies,
            dist,
            clock: config.clock,
            cap: config.batch_cap,
            delay_max: config.delay_max,
            tracker: ObjectiveTracker::new(problem, &x),
            x,
            clocks: BlockClocks::new(problem.num_blocks()),
            history: VecDeque::with_capacity(config.delay_max),
            po_calls: 0,
            sfo_calls: 0,
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            grad: vec![0.0; widest],
            shifted: vec![0.0; widest],
            updated: vec![0.0; widest],
        })
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn clocks(&self) -> &BlockClocks {
        &self.clocks
    }

    pub fn steps(&self) -> &[f64] {
        &self.steps
    }

    pub fn po_calls(&self) -> u64 {
        self.po_calls
    }

    pub fn sfo_calls(&self) -> u64 {
        self.sfo_calls
    }

    pub fn objective(&self) -> Result<f64> {
        self.tracker.objective(self.problem, &self.x)
    }

    /// Batch the next selection of block `i` would use.
    pub fn batch_for(&self, i: usize) -> u64 {
        let counter = match self.clock {
            ClockMode::Block => self.clocks.gamma()[i],
            ClockMode::Global => self.clocks.k(),
        };
        self.policies[i].batch_size(counter)
    }

    /// One iteration of the method.
    pub fn step(&mut self) -> Result<StepInfo> {
        let k = self.clocks.k();
        let i = self.dist.draw(&mut self.rng);
        let mut batch = self.batch_for(i);
        let n = self.problem.samples() as u64;
        let exact = self.cap == BatchCap::Dataset && batch >= n;
        if exact {
            batch = n;
        } else if batch >= BATCH_SATURATION {
            return Err(Error::BudgetExceeded { iteration: k });
        }
        let delay = if self.delay_max == 0 { 0 } else { self.rng.random_range(0..=self.delay_max.min(k as usize)) };

        let range = self.problem.partition().range(i)?;
        let di = range.len();
        let base: &[f64] = if delay == 0 { &self.x } else { &self.history[delay - 1] };
        let grad = &mut self.grad[..di];
        if exact {
            self.problem.full_gradient_into(base, i, grad)?;
        } else {
            sample_gradient_block_into(self.problem, base, i, batch, &mut self.rng, grad)?;
        }

        let alpha = self.steps[i];
        let shifted = &mut self.shifted[..di];
        for ((s, &xv), &g) in shifted.iter_mut().zip(&self.x[range.clone()]).zip(grad.iter()) {
            *s = xv - alpha * g;
        }
        let updated = &mut self.updated[..di];
        self.problem.regularizers()[i].prox_into(shifted, alpha, updated)?;
        if let Some(pos) = updated.iter().position(|v| !v.is_finite()) {
            return Err(Error::Diverged {
                iteration: k,
                detail: format!("coordinate {} of block {i} became {} (batch {batch}, step {alpha})", range.start + pos, updated[pos]),
            });
        }

        if self.delay_max > 0 {
            let snapshot = if self.history.len() == self.delay_max {
                let mut old = self.history.pop_back().expect("full history");
                old.copy_from_slice(&self.x);
                old
            } else {
                self.x.clone()
            };
            self.history.push_front(snapshot);
        }

        let block = &mut self.x[range.clone()];
        for ((s, old), &new) in shifted.iter_mut().zip(block.iter()).zip(updated.iter()) {
            *s = new - old;
        }
        block.copy_from_slice(updated);
        self.tracker.apply_block_delta(self.problem, range, shifted);

        self.clocks.record_selection(i)?;
        self.po_calls += 1;
        self.sfo_calls += batch;
        Ok(StepInfo { block: i, batch, delay })
    }

    fn row(&self, k: u64, info: Option<StepInfo>, stride: u64) -> Result<RunRow> {
        let gmap_sq =
            if stride > 0 && k % stride == 0 { Some(gradient_mapping(self.problem, &self.x, &self.steps)?.norm_sq) } else { None };
        Ok(RunRow {
            k,
            block: info.map(|s| s.block),
            batch: info.map_or(0, |s| s.batch),
            po_calls: self.po_calls,
            sfo_calls: self.sfo_calls,
            objective: self.objective()?,
            gmap_sq,
        })
    }
}

/// Runs the method until the budget is spent, recording every iteration.
pub fn run(problem: &Problem, config: &SolverConfig) -> Result<RunRecord> {
    let mut state = SolverState::new(problem, config)?;
    let stride = config.metrics_stride;
    let mut rows = vec![state.row(0, None, stride)?];
    let sample_budget = match config.budget {
        Budget::Epochs(e) => e.saturating_mul(problem.samples() as u64),
        Budget::Iterations(_) => u64::MAX,
    };
    loop {
        let k = state.clocks.k();
        let done = match config.budget {
            Budget::Iterations(limit) => k >= limit,
            Budget::Epochs(_) => state.sfo_calls >= sample_budget,
        };
        if done {
            break;
        }
        let info = state.step()?;
        rows.push(state.row(k + 1, Some(info), stride)?);
    }
    Ok(RunRecord { rows, x_final: state.x })
}

/// Mini-batch block stochastic gradient baseline: constant batch `m`,
/// uniform block selection and one shared steplength.
pub fn run_bsg(problem: &Problem, minibatch: u64, alpha: f64, budget: Budget, seed: u64) -> Result<RunRecord> {
    run(problem, &bsg_config(minibatch, alpha, budget, seed)?)
}

pub fn bsg_config(minibatch: u64, alpha: f64, budget: Budget, seed: u64) -> Result<SolverConfig> {
    let mut config = SolverConfig::new(budget);
    config.steplength = SteplengthRule::Fixed(alpha);
    config.schedule = ScheduleSpec::Uniform(BatchPolicy::constant(minibatch)?);
    config.seed = seed;
    Ok(config)
}

/// Result of the deterministic reference solve.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceOptimum {
    pub x: Vec<f64>,
    /// Smallest objective value over all iterates.
    pub value: f64,
    pub gmap_norm: f64,
    pub iterations: u64,
    pub converged: bool,
    /// True for converged runs on convex problems.
    pub certified: bool,
}

/// Full-gradient proximal gradient with `alpha = 1/L` until the gradient
/// mapping norm drops to `tol`.
pub fn reference_optimum(problem: &Problem, tol: f64) -> Result<ReferenceOptimum> {
    reference_optimum_capped(problem, tol, REFERENCE_MAX_ITER)
}

pub fn reference_optimum_capped(problem: &Problem, tol: f64, max_iter: u64) -> Result<ReferenceOptimum> {
    if !(tol > 0.0) {
        return Err(Error::InvalidConfig(format!("tolerance {tol} must be positive")));
    }
    let partition = problem.partition();
    let alpha = 1.0 / problem.global_lipschitz();
    let mut x = vec![0.0; problem.dim()];
    let mut best = (problem.objective(&x)?, x.clone());
    let mut next = vec![0.0; x.len()];
    let mut iterations = 0;
    let mut gmap_norm;
    loop {
        let grad = problem.full_gradient(&x)?;
        let shifted: Vec<f64> = x.iter().zip(&grad).map(|(v, g)| v - alpha * g).collect();
        for (i, reg) in problem.regularizers().iter().enumerate() {
            let r = partition.range(i)?;
            reg.prox_into(&shifted[r.clone()], alpha, &mut next[r])?;
        }
        gmap_norm = x.iter().zip(&next).map(|(a, b)| ((a - b) / alpha).powi(2)).sum::<f64>().sqrt();
        if gmap_norm <= tol || iterations >= max_iter {
            break;
        }
        std::mem::swap(&mut x, &mut next);
        iterations += 1;
        let f = problem.objective(&x)?;
        if !f.is_finite() {
            return Err(Error::Diverged { iteration: iterations, detail: "reference solve diverged".into() });
        }
        if f < best.0 {
            best = (f, x.clone());
        }
    }
    let converged = gmap_norm <= tol;
    let convex = matches!(problem.kind(), ProblemKind::Lasso | ProblemKind::PlQuadratic);
    let f = problem.objective(&x)?;
    let (value, xbest) = if f <= best.0 { (f, x) } else { best };
    Ok(ReferenceOptimum { x: xbest, value, gmap_norm, iterations, converged, certified: converged && convex })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DenseMatrix;
    use crate::partition::BlockPartition;
    use crate::problems::{gen_lasso, gen_pl_quadratic, pl_quadratic_from_parts, LassoSpec, PlQuadraticSpec};

    fn scalar_half_square() -> Problem {
        pl_quadratic_from_parts(vec![1.0], vec![0.0], DenseMatrix::zeros(1, 1), 0.0, BlockPartition::new(&[1]).unwrap(), 1.0).unwrap()
    }

    fn full_batch(problem: &Problem, k: u64) -> SolverConfig {
        let mut c = SolverConfig::new(Budget::Iterations(k));
        c.schedule = ScheduleSpec::Uniform(BatchPolicy::Constant(problem.samples() as u64));
        c.batch_cap = BatchCap::Dataset;
        c
    }

    #[test]
    fn deterministic_contraction() {
        let p = scalar_half_square();
        let mut c = full_batch(&p, 2);
        c.steplength = SteplengthRule::QuarterInverse;
        c.x0 = Some(vec![1.0]);
        let rec = run(&p, &c).unwrap();
        assert_eq!(rec.rows.len(), 3);
        assert_eq!(rec.rows[1].objective, 0.5 * 0.75 * 0.75);
        assert_eq!(rec.x_final, vec![0.5625]);
    }

    #[test]
    fn soft_threshold_annihilates_block() {
        let p =
            pl_quadratic_from_parts(vec![1.0, 1.0], vec![0.0, 0.0], DenseMatrix::zeros(1, 2), 0.5, BlockPartition::new(&[2]).unwrap(), 1.0)
                .unwrap();
        // Gradient at x is x itself; with alpha = 1 the shifted point is 0.
        let mut c = full_batch(&p, 1);
        c.x0 = Some(vec![0.3, -0.4]);
        let rec = run(&p, &c).unwrap();
        assert_eq!(rec.x_final, vec![0.0, 0.0]);
    }

    #[test]
    fn zero_budget_keeps_start() {
        let p = gen_lasso(&LassoSpec::new(20, 4, 2), &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        let rec = run(&p, &SolverConfig::new(Budget::Iterations(0))).unwrap();
        assert_eq!(rec.rows.len(), 1);
        assert_eq!(rec.x_final, vec![0.0; 4]);
        assert_eq!(rec.rows[0].po_calls, 0);
    }

    #[test]
    fn one_epoch_full_batch_is_one_iteration() {
        let p = gen_lasso(&LassoSpec::new(20, 4, 1), &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        let mut c = SolverConfig::new(Budget::Epochs(1));
        c.schedule = ScheduleSpec::Uniform(BatchPolicy::Constant(20));
        let rec = run(&p, &c).unwrap();
        assert_eq!(rec.final_row().po_calls, 1);
        assert_eq!(rec.final_row().sfo_calls, 20);
    }

    #[test]
    fn full_batch_descent_is_monotone() {
        let p = gen_lasso(&LassoSpec::new(20, 4, 2), &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let rec = run(&p, &full_batch(&p, 200)).unwrap();
        for w in rec.rows.windows(2) {
            assert!(w[1].objective <= w[0].objective + 1e-10 * w[0].objective.abs());
        }
    }

    #[test]
    fn counters_and_unselected_blocks() {
        let p = gen_pl_quadratic(&PlQuadraticSpec::new(6, 3, 1.0, 2.0, 0.1), &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        let mut c = SolverConfig::new(Budget::Iterations(40));
        c.schedule = "geometric:0.9".parse().unwrap();
        c.x0 = Some(vec![0.7; 6]);
        c.seed = 3;
        let rec = run(&p, &c).unwrap();
        let mut sfo = 0;
        for (k, row) in rec.rows.iter().enumerate() {
            assert_eq!(row.po_calls, k as u64);
            sfo += row.batch;
            assert_eq!(row.sfo_calls, sfo);
        }
        let touched: std::collections::HashSet<usize> = rec.rows.iter().filter_map(|r| r.block).collect();
        for i in 0..3 {
            if !touched.contains(&i) {
                assert_eq!(p.partition().slice(&rec.x_final, i).unwrap(), &[0.7, 0.7]);
            }
        }
    }

    #[test]
    fn untouched_block_is_exact() {
        let p = gen_lasso(&LassoSpec::new(30, 6, 3), &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        let mut c = SolverConfig::new(Budget::Iterations(25));
        c.x0 = Some(vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6]);
        for seed in 0..50 {
            c.seed = seed;
            let rec = run(&p, &c).unwrap();
            for i in 0..3 {
                if !rec.rows.iter().any(|r| r.block == Some(i)) {
                    assert_eq!(p.partition().slice(&rec.x_final, i).unwrap(), p.partition().slice(c.x0.as_ref().unwrap(), i).unwrap());
                }
            }
        }
    }

    #[test]
    fn zero_delay_bound_is_undelayed() {
        let p = gen_lasso(&LassoSpec::new(30, 6, 3), &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        let mut c = SolverConfig::new(Budget::Iterations(60));
        c.schedule = "geometric:0.9".parse().unwrap();
        c.seed = 8;
        let a = run(&p, &c).unwrap();
        c.delay_max = 0;
        assert_eq!(run(&p, &c).unwrap(), a);
        c.delay_max = 5;
        assert_ne!(run(&p, &c).unwrap(), a);
    }

    #[test]
    fn bsg_counts() {
        let p = gen_lasso(&LassoSpec::new(40, 6, 3), &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let rec = run_bsg(&p, 4, 0.1, Budget::Iterations(30), 1).unwrap();
        assert!(rec.rows.iter().all(|r| r.sfo_calls == 4 * r.k));
        let epochs = run_bsg(&p, 16, 0.1, Budget::Epochs(50), 1).unwrap();
        assert_eq!(epochs.final_row().po_calls, 125);
        assert!(run_bsg(&p, 0, 0.1, Budget::Iterations(3), 1).is_err());
    }

    #[test]
    fn bsg_full_batch_descends() {
        let p = gen_lasso(&LassoSpec::new(25, 6, 3), &mut ChaCha8Rng::seed_from_u64(6)).unwrap();
        let alpha = 1.0 / p.global_lipschitz();
        let mut c = bsg_config(25, alpha, Budget::Iterations(100), 2).unwrap();
        c.batch_cap = BatchCap::Dataset;
        let rec = run(&p, &c).unwrap();
        for w in rec.rows.windows(2) {
            assert!(w[1].objective <= w[0].objective + 1e-10 * w[0].objective.abs());
        }
    }

    #[test]
    fn saturation_aborts() {
        let p = scalar_half_square();
        let mut c = SolverConfig::new(Budget::Iterations(100));
        c.schedule = "geometric:0.5".parse().unwrap();
        assert!(matches!(run(&p, &c), Err(Error::BudgetExceeded { iteration: 62 })));
    }

    #[test]
    fn divergence_is_reported() {
        let p = scalar_half_square();
        let mut c = full_batch(&p, 5000);
        c.steplength = SteplengthRule::Fixed(10.0);
        c.x0 = Some(vec![1.0]);
        assert!(matches!(run(&p, &c), Err(Error::Diverged { .. })));
    }

    #[test]
    fn reference_scalar_lasso() {
        let noise = DenseMatrix::zeros(1, 1);
        let p = pl_quadratic_from_parts(vec![1.0], vec![1.0], noise, 0.3, BlockPartition::new(&[1]).unwrap(), 1.0).unwrap();
        let r = reference_optimum(&p, 1e-12).unwrap();
        assert!((r.x[0] - 0.7).abs() < 1e-12);
        assert!((r.value - 0.255).abs() < 1e-12);
        assert!(r.certified);
    }

    #[test]
    fn reference_diagonal_quadratic() {
        let p = pl_quadratic_from_parts(
            vec![1.0, 3.0, 5.0],
            vec![0.0; 3],
            DenseMatrix::zeros(1, 3),
            0.0,
            BlockPartition::new(&[3]).unwrap(),
            1.0,
        )
        .unwrap();
        let r = reference_optimum(&p, 1e-10).unwrap();
        assert_eq!(r.value, 0.0);
        assert!(r.x.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn reference_recovers_planted_vector() {
        let mut spec = LassoSpec::new(60, 8, 2);
        spec.noise_sd = 0.0;
        spec.lambda = 0.0;
        spec.density = 0.5;
        let p = gen_lasso(&spec, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
        let r = reference_optimum(&p, 1e-10).unwrap();
        assert!(r.converged && r.gmap_norm <= 1e-10);
        for (a, b) in r.x.iter().zip(p.planted().unwrap()) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn steplength_rules() {
        let p = pl_quadratic_from_parts(
            vec![1.0, 4.0],
            vec![0.0; 2],
            DenseMatrix::zeros(1, 2),
            0.0,
            BlockPartition::new(&[1, 1]).unwrap(),
            1.0,
        )
        .unwrap();
        assert_eq!(SteplengthRule::QuarterInverse.steps(&p).unwrap(), vec![0.25, 0.0625]);
        assert_eq!(SteplengthRule::Inverse.steps(&p).unwrap(), vec![1.0, 0.25]);
        assert_eq!(SteplengthRule::GlobalScaled(2.0).steps(&p).unwrap(), vec![0.5, 0.5]);
        let pl = SteplengthRule::PlOptimal.steps(&p).unwrap();
        assert!((pl[0] - (2.0 - 3f64.sqrt())).abs() < 1e-15);
        for s in ["quarter_inverse", "pl_optimal", "inverse", "fixed:0.01", "global:1.28"] {
            assert_eq!(s.parse::<SteplengthRule>().unwrap().to_string(), s);
        }
        assert!("fixed:-1".parse::<SteplengthRule>().is_err());
        assert!("half".parse::<SteplengthRule>().is_err());
    }
}
