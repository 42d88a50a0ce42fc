//! Composite test problems: sparse least squares, sigmoid nonlinear least
//! squares and separable quadratics with a certified PL constant.
//!
//! Every problem is a finite sum `fbar(x) = (1/N) sum_j f_j(x)` plus one
//! regularizer per block. Per-sample block gradients are the unit of work
//! of the stochastic oracle.

use std::ops::Range;
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, DenseMatrix};
use crate::partition::BlockPartition;
use crate::regularizers::Regularizer;

/// Lower bound applied to every block Lipschitz estimate.
pub const LIPSCHITZ_FLOOR: f64 = 1e-12;

/// Bound on `|d/dz [(phi(z) - y) phi'(z)]|` for the logistic sigmoid and
/// `y` in `{0, 1}`. The true supremum is about 0.077; see the grid check in
/// the tests.
pub const SIGMOID_CURVATURE_BOUND: f64 = 0.2;

const POWER_ITERATIONS: usize = 200;
const POWER_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemKind {
    Lasso,
    SigmoidLs,
    PlQuadratic,
}

impl ProblemKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Lasso => "lasso",
            Self::SigmoidLs => "sigmoid_ls",
            Self::PlQuadratic => "pl_quadratic",
        }
    }
}

/// Smooth finite-sum part of the objective.
#[derive(Debug, Clone)]
pub enum Loss {
    /// `f_j(x) = (a_j^T x - b_j)^2 / 2`.
    LeastSquares { design: DenseMatrix, targets: Vec<f64> },
    /// `f_j(theta) = (y_j - phi(a_j^T theta))^2 / 2`; the design carries a
    /// trailing column of ones for the bias.
    Sigmoid { design: DenseMatrix, labels: Vec<f64> },
    /// `f_j(x) = sum_k c_k (x_k - s_k)^2 / 2 + z_j^T x` with centered rows `z_j`.
    Quadratic { curvature: Vec<f64>, center: Vec<f64>, noise: DenseMatrix, noise_mean: Vec<f64> },
}

#[inline]
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl Loss {
    pub fn samples(&self) -> usize {
        match self {
            Self::LeastSquares { targets, .. } => targets.len(),
            Self::Sigmoid { labels, .. } => labels.len(),
            Self::Quadratic { noise, .. } => noise.rows(),
        }
    }

    fn design(&self) -> Option<(&DenseMatrix, &[f64])> {
        match self {
            Self::LeastSquares { design, targets } => Some((design, targets)),
            Self::Sigmoid { design, labels } => Some((design, labels)),
            Self::Quadratic { .. } => None,
        }
    }

    /// Value of the per-sample loss as a function of its margin.
    #[inline]
    fn margin_loss(&self, z: f64, y: f64) -> f64 {
        match self {
            Self::Sigmoid { .. } => 0.5 * (y - sigmoid(z)).powi(2),
            _ => 0.5 * (z - y).powi(2),
        }
    }

    /// Derivative of the per-sample loss with respect to the margin.
    #[inline]
    fn margin_slope(&self, z: f64, y: f64) -> f64 {
        match self {
            Self::Sigmoid { .. } => {
                let p = sigmoid(z);
                (p - y) * p * (1.0 - p)
            }
            _ => z - y,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Problem {
    kind: ProblemKind,
    loss: Loss,
    partition: BlockPartition,
    regularizers: Vec<Regularizer>,
    lipschitz: Vec<f64>,
    pl_mu: Option<f64>,
    planted: Option<Vec<f64>>,
}

impl Problem {
    /// Assembles a problem and estimates its block Lipschitz constants.
    pub fn new(kind: ProblemKind, loss: Loss, partition: BlockPartition, regularizers: Vec<Regularizer>) -> Result<Self> {
        if regularizers.len() != partition.num_blocks() {
            return Err(Error::InvalidProblem(format!("{} regularizers for {} blocks", regularizers.len(), partition.num_blocks())));
        }
        let dim = match &loss {
            Loss::LeastSquares { design, targets } | Loss::Sigmoid { design, labels: targets } => {
                if design.rows() != targets.len() {
                    return Err(Error::InvalidProblem("design rows and targets differ".into()));
                }
                design.cols()
            }
            Loss::Quadratic { curvature, center, noise, noise_mean } => {
                if center.len() != curvature.len() || noise.cols() != curvature.len() || noise_mean.len() != curvature.len() {
                    return Err(Error::InvalidProblem("quadratic components have mismatched lengths".into()));
                }
                curvature.len()
            }
        };
        if loss.samples() == 0 {
            return Err(Error::InvalidProblem("problem has no samples".into()));
        }
        partition.check_len(dim)?;
        for (i, reg) in regularizers.iter().enumerate() {
            if let Regularizer::Box { lower, .. } = reg {
                if lower.len() != partition.dims()[i] {
                    return Err(Error::DimensionMismatch { expected: partition.dims()[i], got: lower.len() });
                }
            }
        }
        let lipschitz = lipschitz_blocks(&loss, &partition);
        Ok(Self { kind, loss, partition, regularizers, lipschitz, pl_mu: None, planted: None })
    }

    pub fn with_pl_mu(mut self, mu: f64) -> Self {
        self.pl_mu = Some(mu);
        self
    }

    pub fn with_planted(mut self, x: Vec<f64>) -> Self {
        self.planted = Some(x);
        self
    }

    pub fn kind(&self) -> ProblemKind {
        self.kind
    }

    pub fn loss(&self) -> &Loss {
        &self.loss
    }

    pub fn partition(&self) -> &BlockPartition {
        &self.partition
    }

    pub fn regularizers(&self) -> &[Regularizer] {
        &self.regularizers
    }

    pub fn lipschitz(&self) -> &[f64] {
        &self.lipschitz
    }

    pub fn pl_mu(&self) -> Option<f64> {
        self.pl_mu
    }

    /// Generating vector for synthetic regression data.
    pub fn planted(&self) -> Option<&[f64]> {
        self.planted.as_deref()
    }

    pub fn dim(&self) -> usize {
        self.partition.dim()
    }

    pub fn num_blocks(&self) -> usize {
        self.partition.num_blocks()
    }

    pub fn samples(&self) -> usize {
        self.loss.samples()
    }

    /// Ratio `L_max / L_ave` of the block Lipschitz constants.
    pub fn lipschitz_ratio(&self) -> f64 {
        let max = self.lipschitz.iter().cloned().fold(0.0, f64::max);
        let ave = self.lipschitz.iter().sum::<f64>() / self.lipschitz.len() as f64;
        max / ave
    }

    /// Upper estimate of the Lipschitz constant of the full gradient.
    pub fn global_lipschitz(&self) -> f64 {
        let d = self.dim();
        let l = match &self.loss {
            Loss::LeastSquares { design, .. } => design.gram_top_eigenvalue(0..d, 2000, 1e-13),
            Loss::Sigmoid { design, .. } => SIGMOID_CURVATURE_BOUND * design.gram_top_eigenvalue(0..d, 2000, 1e-13),
            Loss::Quadratic { curvature, .. } => curvature.iter().cloned().fold(0.0, f64::max),
        };
        l.max(LIPSCHITZ_FLOOR)
    }

    /// Adds `weight * grad_{x_i} f_j(x)` to `out`.
    #[inline]
    pub fn accumulate_sample_gradient(&self, x: &[f64], block: Range<usize>, j: usize, weight: f64, out: &mut [f64]) {
        match &self.loss {
            Loss::Quadratic { curvature, center, noise, .. } => {
                let z = &noise.row(j)[block.clone()];
                for (t, k) in block.enumerate() {
                    out[t] += weight * (curvature[k] * (x[k] - center[k]) + z[t]);
                }
            }
            loss => {
                let (design, y) = loss.design().expect("design-based loss");
                let row = design.row(j);
                let slope = loss.margin_slope(dot(row, x), y[j]);
                axpy(weight * slope, &row[block], out);
            }
        }
    }

    /// Exact block gradient of `fbar` at `x`, written to `out`.
    pub fn full_gradient_into(&self, x: &[f64], i: usize, out: &mut [f64]) -> Result<()> {
        self.partition.check_len(x.len())?;
        let block = self.partition.range(i)?;
        if out.len() != block.len() {
            return Err(Error::DimensionMismatch { expected: block.len(), got: out.len() });
        }
        out.iter_mut().for_each(|v| *v = 0.0);
        match &self.loss {
            Loss::Quadratic { curvature, center, noise_mean, .. } => {
                for (t, k) in block.enumerate() {
                    out[t] = curvature[k] * (x[k] - center[k]) + noise_mean[k];
                }
            }
            _ => {
                let n = self.samples();
                let w = 1.0 / n as f64;
                for j in 0..n {
                    self.accumulate_sample_gradient(x, block.clone(), j, w, out);
                }
            }
        }
        Ok(())
    }

    /// Exact gradient of `fbar` at `x`.
    pub fn full_gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.partition.check_len(x.len())?;
        let mut g = vec![0.0; x.len()];
        match &self.loss {
            Loss::Quadratic { .. } => {
                for i in 0..self.num_blocks() {
                    let r = self.partition.range(i)?;
                    self.full_gradient_into(x, i, &mut g[r])?;
                }
            }
            loss => {
                let (design, y) = loss.design().expect("design-based loss");
                let w = 1.0 / self.samples() as f64;
                for j in 0..design.rows() {
                    let row = design.row(j);
                    axpy(w * loss.margin_slope(dot(row, x), y[j]), row, &mut g);
                }
            }
        }
        Ok(g)
    }

    /// `fbar(x)`.
    pub fn smooth_value(&self, x: &[f64]) -> Result<f64> {
        self.partition.check_len(x.len())?;
        Ok(match &self.loss {
            Loss::Quadratic { curvature, center, noise_mean, .. } => {
                x.iter().enumerate().map(|(k, &v)| 0.5 * curvature[k] * (v - center[k]).powi(2) + noise_mean[k] * v).sum()
            }
            loss => {
                let (design, y) = loss.design().expect("design-based loss");
                let total: f64 = (0..design.rows()).map(|j| loss.margin_loss(dot(design.row(j), x), y[j])).sum();
                total / design.rows() as f64
            }
        })
    }

    pub fn regularizer_value(&self, x: &[f64]) -> Result<f64> {
        self.partition.check_len(x.len())?;
        let mut total = 0.0;
        for (i, reg) in self.regularizers.iter().enumerate() {
            total += reg.value(self.partition.slice(x, i)?)?;
        }
        Ok(total)
    }

    /// Composite objective `F(x) = fbar(x) + sum_i r_i(x_i)`.
    pub fn objective(&self, x: &[f64]) -> Result<f64> {
        Ok(self.smooth_value(x)? + self.regularizer_value(x)?)
    }
}

/// Incrementally maintained objective value for an iterate that changes one
/// block at a time. Design-based losses cache the margins `A x`.
#[derive(Debug, Clone)]
pub struct ObjectiveTracker {
    margins: Option<Vec<f64>>,
}

impl ObjectiveTracker {
    pub fn new(problem: &Problem, x: &[f64]) -> Self {
        let margins = problem.loss.design().map(|(design, _)| (0..design.rows()).map(|j| dot(design.row(j), x)).collect());
        Self { margins }
    }

    /// Records that block `i` changed by `delta`.
    pub fn apply_block_delta(&mut self, problem: &Problem, block: Range<usize>, delta: &[f64]) {
        if let (Some(m), Some((design, _))) = (self.margins.as_mut(), problem.loss.design()) {
            for (j, mj) in m.iter_mut().enumerate() {
                *mj += dot(&design.row(j)[block.clone()], delta);
            }
        }
    }

    pub fn objective(&self, problem: &Problem, x: &[f64]) -> Result<f64> {
        let smooth = match (&self.margins, problem.loss.design()) {
            (Some(m), Some((_, y))) => m.iter().zip(y).map(|(&z, &t)| problem.loss.margin_loss(z, t)).sum::<f64>() / m.len() as f64,
            _ => problem.smooth_value(x)?,
        };
        Ok(smooth + problem.regularizer_value(x)?)
    }
}

/// Per-block Lipschitz constants of the block gradients.
pub fn lipschitz_blocks(loss: &Loss, partition: &BlockPartition) -> Vec<f64> {
    (0..partition.num_blocks())
        .map(|i| {
            let r = partition.range(i).expect("block in range");
            let l = match loss {
                Loss::LeastSquares { design, .. } => design.gram_top_eigenvalue(r, POWER_ITERATIONS, POWER_TOL),
                Loss::Sigmoid { design, .. } => {
                    let n = design.rows() as f64;
                    let mass: f64 = (0..design.rows()).map(|j| crate::linalg::norm_sq(&design.row(j)[r.clone()])).sum();
                    SIGMOID_CURVATURE_BOUND * mass / n
                }
                Loss::Quadratic { curvature, .. } => curvature[r].iter().cloned().fold(0.0, f64::max),
            };
            l.max(LIPSCHITZ_FLOOR)
        })
        .collect()
}

fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// Parameters for synthetic sparse least squares.
#[derive(Debug, Clone, PartialEq)]
pub struct LassoSpec {
    pub samples: usize,
    pub dim: usize,
    pub blocks: usize,
    pub density: f64,
    pub noise_sd: f64,
    pub lambda: f64,
    /// Per-block column variances; `None` means unit variance everywhere.
    pub block_variances: Option<Vec<f64>>,
}

impl LassoSpec {
    pub fn new(samples: usize, dim: usize, blocks: usize) -> Self {
        Self { samples, dim, blocks, density: 0.1, noise_sd: 0.01, lambda: 0.1, block_variances: None }
    }

    fn validate(&self) -> Result<()> {
        if self.samples == 0 || self.dim == 0 {
            return Err(Error::InvalidProblem("samples and dim must be positive".into()));
        }
        if !(self.density > 0.0 && self.density <= 1.0) {
            return Err(Error::InvalidProblem(format!("density {} outside (0, 1]", self.density)));
        }
        if !(self.noise_sd >= 0.0) || !(self.lambda >= 0.0) {
            return Err(Error::InvalidProblem("noise_sd and lambda must be nonnegative".into()));
        }
        if let Some(v) = &self.block_variances {
            if v.len() != self.blocks {
                return Err(Error::InvalidProblem(format!("{} block variances for {} blocks", v.len(), self.blocks)));
            }
            if v.iter().any(|&s| !(s > 0.0)) {
                return Err(Error::InvalidProblem("block variances must be positive".into()));
            }
        }
        Ok(())
    }
}

/// Sparse least squares: planted `x*` with `ceil(density * d)` standard
/// normal nonzeros, Gaussian design, `b = A x* + noise`, and `l1(lambda)`
/// on every block.
pub fn gen_lasso<R: Rng + ?Sized>(spec: &LassoSpec, rng: &mut R) -> Result<Problem> {
    spec.validate()?;
    let partition = BlockPartition::even(spec.dim, spec.blocks)?;
    let planted = planted_sparse(spec.dim, spec.density, rng);
    let mut design = gaussian_design(spec.samples, spec.dim, rng);
    if let Some(v) = &spec.block_variances {
        scale_block_columns(&mut design, &partition, v);
    }
    lasso_from_design(design, planted, partition, spec.noise_sd, spec.lambda, rng)
}

/// Heterogeneous sparse least squares whose block Lipschitz constants have
/// `L_max / L_ave` close to `target_ratio`.
///
/// Block variances follow a geometric ramp `exp(s * t_i)`, `t_i` evenly
/// spaced in `[-1, 1]`, normalised so that `L_ave` matches the unit-variance
/// design; `s` is found by bisection. Returns the problem and the variances.
pub fn gen_lasso_with_ratio<R: Rng + ?Sized>(spec: &LassoSpec, target_ratio: f64, rng: &mut R) -> Result<(Problem, Vec<f64>)> {
    spec.validate()?;
    let n = spec.blocks;
    if !(target_ratio >= 1.0 && target_ratio < n as f64) {
        return Err(Error::InvalidProblem(format!("ratio {target_ratio} not reachable with {n} blocks")));
    }
    let partition = BlockPartition::even(spec.dim, n)?;
    let planted = planted_sparse(spec.dim, spec.density, rng);
    let base = gaussian_design(spec.samples, spec.dim, rng);
    let base_l = lipschitz_blocks(&Loss::LeastSquares { design: base.clone(), targets: vec![0.0; spec.samples] }, &partition);
    let base_ave = base_l.iter().sum::<f64>() / n as f64;

    let variances_for = |s: f64| -> Vec<f64> {
        let raw: Vec<f64> = (0..n)
            .map(|i| {
                let t = if n == 1 { 0.0 } else { 2.0 * i as f64 / (n - 1) as f64 - 1.0 };
                (s * t).exp()
            })
            .collect();
        let ave = raw.iter().zip(&base_l).map(|(v, l)| v * l).sum::<f64>() / n as f64;
        raw.iter().map(|v| v * base_ave / ave).collect()
    };
    let ratio_for = |s: f64| -> f64 {
        let l: Vec<f64> = variances_for(s).iter().zip(&base_l).map(|(v, l)| v * l).collect();
        l.iter().cloned().fold(0.0, f64::max) / (l.iter().sum::<f64>() / n as f64)
    };
    let (mut lo, mut hi) = (0.0, 1.0);
    while ratio_for(hi) < target_ratio {
        hi *= 2.0;
        if hi > 64.0 {
            return Err(Error::InvalidProblem(format!("cannot reach ratio {target_ratio}")));
        }
    }
    if ratio_for(lo) >= target_ratio {
        hi = lo;
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if ratio_for(mid) < target_ratio {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let variances = variances_for(hi);
    let mut design = base;
    scale_block_columns(&mut design, &partition, &variances);
    let problem = lasso_from_design(design, planted, partition, spec.noise_sd, spec.lambda, rng)?;
    Ok((problem, variances))
}

fn planted_sparse<R: Rng + ?Sized>(dim: usize, density: f64, rng: &mut R) -> Vec<f64> {
    let nonzeros = ((density * dim as f64).ceil() as usize).min(dim);
    let support = rand::seq::index::sample(rng, dim, nonzeros);
    let mut x = vec![0.0; dim];
    for j in support.iter() {
        x[j] = standard_normal(rng);
    }
    x
}

fn gaussian_design<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> DenseMatrix {
    let data = (0..rows * cols).map(|_| standard_normal(rng)).collect();
    DenseMatrix::from_row_major(rows, cols, data)
}

fn scale_block_columns(design: &mut DenseMatrix, partition: &BlockPartition, variances: &[f64]) {
    let scales: Vec<f64> = variances.iter().map(|v| v.sqrt()).collect();
    for j in 0..design.rows() {
        let row = design.row_mut(j);
        for (i, s) in scales.iter().enumerate() {
            row[partition.range(i).expect("block")].iter_mut().for_each(|a| *a *= s);
        }
    }
}

fn lasso_from_design<R: Rng + ?Sized>(
    design: DenseMatrix,
    planted: Vec<f64>,
    partition: BlockPartition,
    noise_sd: f64,
    lambda: f64,
    rng: &mut R,
) -> Result<Problem> {
    let targets = (0..design.rows()).map(|j| dot(design.row(j), &planted) + noise_sd * standard_normal(rng)).collect();
    let regs = vec![Regularizer::l1(lambda)?; partition.num_blocks()];
    Ok(Problem::new(ProblemKind::Lasso, Loss::LeastSquares { design, targets }, partition, regs)?.with_planted(planted))
}

/// Parameters for the separable PL quadratic.
#[derive(Debug, Clone, PartialEq)]
pub struct PlQuadraticSpec {
    pub dim: usize,
    pub blocks: usize,
    pub mu: f64,
    pub l_spread: f64,
    pub lambda: f64,
    /// Number of samples in the finite sum.
    pub samples: usize,
    /// Standard deviation of the per-sample linear perturbations.
    pub noise_sd: f64,
    /// Standard deviation of the random centers `s`.
    pub center_sd: f64,
}

impl PlQuadraticSpec {
    pub fn new(dim: usize, blocks: usize, mu: f64, l_spread: f64, lambda: f64) -> Self {
        Self { dim, blocks, mu, l_spread, lambda, samples: 200, noise_sd: 0.003, center_sd: 1.0 }
    }
}

/// Separable strongly convex quadratic `sum_k c_k (x_k - s_k)^2 / 2` with
/// curvatures in `[mu, l_spread * mu]` (both endpoints attained), optional
/// `l1(lambda)`, and zero-mean per-sample linear noise.
pub fn gen_pl_quadratic<R: Rng + ?Sized>(spec: &PlQuadraticSpec, rng: &mut R) -> Result<Problem> {
    if spec.dim == 0 || spec.samples == 0 {
        return Err(Error::InvalidProblem("dim and samples must be positive".into()));
    }
    if !(spec.mu > 0.0 && spec.mu.is_finite()) || !(spec.l_spread >= 1.0) {
        return Err(Error::InvalidProblem("need mu > 0 and l_spread >= 1".into()));
    }
    if !(spec.lambda >= 0.0) || !(spec.noise_sd >= 0.0) || !(spec.center_sd >= 0.0) {
        return Err(Error::InvalidProblem("lambda, noise_sd and center_sd must be nonnegative".into()));
    }
    let partition = BlockPartition::even(spec.dim, spec.blocks)?;
    let hi = spec.l_spread * spec.mu;
    let mut curvature: Vec<f64> = (0..spec.dim).map(|_| rng.random_range(spec.mu..=hi)).collect();
    curvature[0] = spec.mu;
    if spec.dim > 1 {
        curvature[spec.dim - 1] = hi;
    }
    let center: Vec<f64> = (0..spec.dim).map(|_| spec.center_sd * standard_normal(rng)).collect();
    let mut noise = gaussian_design(spec.samples, spec.dim, rng);
    let mut mean = vec![0.0; spec.dim];
    for j in 0..spec.samples {
        axpy(1.0 / spec.samples as f64, noise.row(j), &mut mean);
    }
    for j in 0..spec.samples {
        noise.row_mut(j).iter_mut().zip(&mean).for_each(|(z, m)| *z = spec.noise_sd * (*z - m));
    }
    pl_quadratic_from_parts(curvature, center, noise, spec.lambda, partition, spec.mu)
}

/// Quadratic built from explicit components; `noise` rows are used as given.
pub fn pl_quadratic_from_parts(
    curvature: Vec<f64>,
    center: Vec<f64>,
    noise: DenseMatrix,
    lambda: f64,
    partition: BlockPartition,
    mu: f64,
) -> Result<Problem> {
    if curvature.iter().any(|&c| !(c >= mu)) {
        return Err(Error::InvalidProblem(format!("curvatures must be >= mu = {mu}")));
    }
    let mut noise_mean = vec![0.0; curvature.len()];
    for j in 0..noise.rows() {
        axpy(1.0 / noise.rows() as f64, noise.row(j), &mut noise_mean);
    }
    let reg = if lambda > 0.0 { Regularizer::l1(lambda)? } else { Regularizer::Zero };
    let regs = vec![reg; partition.num_blocks()];
    let loss = Loss::Quadratic { curvature, center, noise, noise_mean };
    Ok(Problem::new(ProblemKind::PlQuadratic, loss, partition, regs)?.with_pl_mu(mu))
}

/// Labelled feature matrix read from LIBSVM text.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledData {
    pub features: DenseMatrix,
    /// Labels in `{0, 1}`.
    pub labels: Vec<f64>,
}

/// Parses `label idx:val idx:val ...` lines with 1-based indices. Labels
/// `+1`/`1` map to 1 and `-1`/`0` to 0. Blank lines and `#` comments are
/// skipped.
pub fn parse_libsvm(text: &str) -> Result<LabeledData> {
    let mut labels = Vec::new();
    let mut entries: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut width = 0usize;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |message: String| Error::Parse { line: lineno + 1, message };
        let mut tokens = line.split_whitespace();
        let label_tok = tokens.next().expect("nonempty line");
        let label: f64 = label_tok.parse().map_err(|_| err(format!("bad label `{label_tok}`")))?;
        let y = if label == 1.0 {
            1.0
        } else if label == -1.0 || label == 0.0 {
            0.0
        } else {
            return Err(err(format!("label {label} is not one of -1, 0, +1")));
        };
        let mut row = Vec::new();
        for tok in tokens {
            let (idx, val) = tok.split_once(':').ok_or_else(|| err(format!("feature `{tok}` lacks `:`")))?;
            let idx: usize = idx.parse().map_err(|_| err(format!("bad feature index `{idx}`")))?;
            if idx == 0 {
                return Err(err("feature indices are 1-based".into()));
            }
            let val: f64 = val.parse().map_err(|_| err(format!("bad feature value `{val}`")))?;
            if !val.is_finite() {
                return Err(err(format!("non-finite feature value `{val}`")));
            }
            if row.iter().any(|&(k, _)| k == idx - 1) {
                return Err(err(format!("feature {idx} given twice")));
            }
            width = width.max(idx);
            row.push((idx - 1, val));
        }
        labels.push(y);
        entries.push(row);
    }
    if labels.is_empty() {
        return Err(Error::Parse { line: 0, message: "no data rows".into() });
    }
    if width == 0 {
        return Err(Error::Parse { line: 0, message: "no features".into() });
    }
    let mut features = DenseMatrix::zeros(labels.len(), width);
    for (j, row) in entries.into_iter().enumerate() {
        let dst = features.row_mut(j);
        for (k, v) in row {
            dst[k] = v;
        }
    }
    Ok(LabeledData { features, labels })
}

pub fn load_libsvm(path: impl AsRef<Path>) -> Result<LabeledData> {
    parse_libsvm(&std::fs::read_to_string(path)?)
}

/// Sigmoid least squares over `(w, b)`: `w` split into `blocks` near-equal
/// blocks with the bias appended to the last one; no regularizer.
pub fn gen_sigmoid_ls(data: &LabeledData, blocks: usize) -> Result<Problem> {
    let (rows, feats) = (data.features.rows(), data.features.cols());
    let mut dims = BlockPartition::even(feats, blocks)?.dims().to_vec();
    *dims.last_mut().expect("nonempty") += 1;
    let partition = BlockPartition::new(&dims)?;
    let mut design = DenseMatrix::zeros(rows, feats + 1);
    for j in 0..rows {
        let dst = design.row_mut(j);
        dst[..feats].copy_from_slice(data.features.row(j));
        dst[feats] = 1.0;
    }
    let loss = Loss::Sigmoid { design, labels: data.labels.clone() };
    Problem::new(ProblemKind::SigmoidLs, loss, partition, vec![Regularizer::Zero; blocks])
}

/// Synthetic binary classification data: Gaussian features, labels drawn
/// from a logistic model with a random separating direction.
pub fn gen_classification<R: Rng + ?Sized>(samples: usize, dim: usize, rng: &mut R) -> Result<LabeledData> {
    if samples == 0 || dim == 0 {
        return Err(Error::InvalidProblem("samples and dim must be positive".into()));
    }
    let features = gaussian_design(samples, dim, rng);
    let w: Vec<f64> = (0..dim).map(|_| standard_normal(rng) / (dim as f64).sqrt()).collect();
    let labels = (0..samples)
        .map(|j| {
            let p = sigmoid(3.0 * dot(features.row(j), &w));
            if rng.random::<f64>() < p {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    Ok(LabeledData { features, labels })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn enumerated_gradient(p: &Problem, x: &[f64], i: usize) -> Vec<f64> {
        let r = p.partition().range(i).unwrap();
        let mut g = vec![0.0; r.len()];
        for j in 0..p.samples() {
            p.accumulate_sample_gradient(x, r.clone(), j, 1.0, &mut g);
        }
        g.iter_mut().for_each(|v| *v /= p.samples() as f64);
        g
    }

    fn sample_problems() -> Vec<Problem> {
        let mut r = rng(3);
        let lasso = gen_lasso(&LassoSpec::new(30, 12, 3), &mut r).unwrap();
        let quad = gen_pl_quadratic(&PlQuadraticSpec::new(9, 3, 0.5, 4.0, 0.1), &mut r).unwrap();
        let data = gen_classification(40, 7, &mut r).unwrap();
        let sig = gen_sigmoid_ls(&data, 3).unwrap();
        vec![lasso, quad, sig]
    }

    #[test]
    fn planted_sparsity() {
        let p = gen_lasso(&LassoSpec::new(50, 400, 10), &mut rng(1)).unwrap();
        assert_eq!(p.planted().unwrap().iter().filter(|v| **v != 0.0).count(), 40);
    }

    #[test]
    fn lasso_rejects_bad_sizes() {
        assert!(gen_lasso(&LassoSpec::new(0, 4, 1), &mut rng(0)).is_err());
        let mut s = LassoSpec::new(10, 4, 2);
        s.density = 0.0;
        assert!(gen_lasso(&s, &mut rng(0)).is_err());
        s.density = 0.5;
        s.block_variances = Some(vec![1.0]);
        assert!(gen_lasso(&s, &mut rng(0)).is_err());
    }

    #[test]
    fn enumeration_matches_analytic_gradient() {
        let mut r = rng(11);
        for p in sample_problems() {
            let x: Vec<f64> = (0..p.dim()).map(|_| r.random_range(-1.0..1.0)).collect();
            let full = p.full_gradient(&x).unwrap();
            for i in 0..p.num_blocks() {
                let mut g = vec![0.0; p.partition().dims()[i]];
                p.full_gradient_into(&x, i, &mut g).unwrap();
                let e = enumerated_gradient(&p, &x, i);
                let blk = p.partition().slice(&full, i).unwrap();
                for t in 0..g.len() {
                    assert!((g[t] - e[t]).abs() <= 1e-12, "{:?}", p.kind());
                    assert!((g[t] - blk[t]).abs() <= 1e-12, "{:?}", p.kind());
                }
            }
        }
    }

    #[test]
    fn block_steps_with_inverse_lipschitz_descend() {
        let mut r = rng(5);
        for p in sample_problems() {
            for _ in 0..20 {
                let x: Vec<f64> = (0..p.dim()).map(|_| r.random_range(-2.0..2.0)).collect();
                let f0 = p.smooth_value(&x).unwrap();
                for i in 0..p.num_blocks() {
                    let mut g = vec![0.0; p.partition().dims()[i]];
                    p.full_gradient_into(&x, i, &mut g).unwrap();
                    let mut y = x.clone();
                    let step = 1.0 / p.lipschitz()[i];
                    p.partition().slice_mut(&mut y, i).unwrap().iter_mut().zip(&g).for_each(|(v, gv)| *v -= step * gv);
                    assert!(p.smooth_value(&y).unwrap() <= f0 + 1e-12 * f0.abs().max(1.0), "{:?}", p.kind());
                }
            }
        }
    }

    #[test]
    fn single_column_lipschitz_is_mean_square() {
        let a = vec![1.0, -2.0, 0.5, 3.0];
        let design = DenseMatrix::from_row_major(4, 1, a.clone());
        let loss = Loss::LeastSquares { design, targets: vec![0.0; 4] };
        let l = lipschitz_blocks(&loss, &BlockPartition::new(&[1]).unwrap());
        let exact = a.iter().map(|v| v * v).sum::<f64>() / 4.0;
        assert!((l[0] - exact).abs() < 1e-12);
    }

    #[test]
    fn zero_block_is_floored() {
        let design = DenseMatrix::from_row_major(2, 2, vec![1.0, 0.0, 2.0, 0.0]);
        let loss = Loss::LeastSquares { design, targets: vec![0.0; 2] };
        let l = lipschitz_blocks(&loss, &BlockPartition::new(&[1, 1]).unwrap());
        assert_eq!(l[1], LIPSCHITZ_FLOOR);
        assert!((l[0] - 2.5).abs() < 1e-12);
    }

    #[test]
    fn quadratic_parts() {
        let p =
            pl_quadratic_from_parts(vec![1.0, 4.0], vec![0.0, 0.0], DenseMatrix::zeros(1, 2), 0.0, BlockPartition::new(&[2]).unwrap(), 1.0)
                .unwrap();
        assert_eq!(p.lipschitz(), &[4.0]);
        assert_eq!(p.objective(&[0.0, 0.0]).unwrap(), 0.0);
        assert_eq!(p.pl_mu(), Some(1.0));
        assert_eq!(p.full_gradient(&[1.0, 2.0]).unwrap(), vec![1.0, 8.0]);
    }

    #[test]
    fn pl_generator_attains_curvature_range() {
        let p = gen_pl_quadratic(&PlQuadraticSpec::new(20, 4, 1.0, 4.0, 0.05), &mut rng(2)).unwrap();
        let Loss::Quadratic { curvature, .. } = p.loss() else { panic!() };
        let min = curvature.iter().cloned().fold(f64::INFINITY, f64::min);
        assert_eq!(min, 1.0);
        assert_eq!(p.lipschitz().iter().cloned().fold(0.0, f64::max), 4.0);
        let flat = gen_pl_quadratic(&PlQuadraticSpec::new(6, 2, 2.0, 1.0, 0.0), &mut rng(2)).unwrap();
        assert_eq!(flat.lipschitz(), &[2.0, 2.0]);
        assert!(gen_pl_quadratic(&PlQuadraticSpec::new(6, 2, 0.0, 1.0, 0.0), &mut rng(2)).is_err());
    }

    #[test]
    fn sigmoid_two_point_loss() {
        let data = parse_libsvm("1 1:1\n-1 1:-1\n").unwrap();
        assert_eq!(data.labels, vec![1.0, 0.0]);
        let p = gen_sigmoid_ls(&data, 1).unwrap();
        assert_eq!(p.dim(), 2);
        assert!((p.objective(&[0.0, 0.0]).unwrap() - 0.125).abs() < 1e-15);
    }

    #[test]
    fn sigmoid_gradient_matches_finite_differences() {
        let mut r = rng(8);
        let data = gen_classification(60, 5, &mut r).unwrap();
        let p = gen_sigmoid_ls(&data, 2).unwrap();
        for x in [vec![0.0; p.dim()], (0..p.dim()).map(|_| r.random_range(-1.0..1.0)).collect()] {
            let g = p.full_gradient(&x).unwrap();
            let h = 1e-5;
            let fd: Vec<f64> = (0..p.dim())
                .map(|k| {
                    let mut a = x.clone();
                    let mut b = x.clone();
                    a[k] += h;
                    b[k] -= h;
                    (p.smooth_value(&a).unwrap() - p.smooth_value(&b).unwrap()) / (2.0 * h)
                })
                .collect();
            let diff: f64 = g.iter().zip(&fd).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            let norm: f64 = fd.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!(diff <= 1e-6 * norm, "relative error {}", diff / norm);
        }
    }

    #[test]
    fn sigmoid_curvature_bound_holds_on_grid() {
        let mut worst: f64 = 0.0;
        for s in 0..=200_000 {
            let z = -40.0 + s as f64 * 4e-4;
            let p = sigmoid(z);
            let dp = p * (1.0 - p);
            let ddp = dp * (1.0 - 2.0 * p);
            for y in [0.0, 1.0] {
                worst = worst.max((dp * dp + (p - y) * ddp).abs());
            }
        }
        assert!(worst <= SIGMOID_CURVATURE_BOUND, "{worst}");
        assert!(worst > 0.07);
    }

    #[test]
    fn libsvm_errors_carry_line_numbers() {
        assert!(matches!(parse_libsvm(""), Err(Error::Parse { .. })));
        assert!(matches!(parse_libsvm("# only a comment\n\n"), Err(Error::Parse { .. })));
        match parse_libsvm("1 1:0.5\n1 2-0.3\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_libsvm("2 1:1\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_libsvm("1 0:1\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_libsvm("1 1:1 1:2\n"), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn libsvm_sparse_layout() {
        let d = parse_libsvm("+1 1:7 2:3 4:-1 # instance zero\n-1 2:1 3:14\n0 1:2\n").unwrap();
        assert_eq!(d.features.cols(), 4);
        assert_eq!(d.features.row(0), &[7.0, 3.0, 0.0, -1.0]);
        assert_eq!(d.features.row(1), &[0.0, 1.0, 14.0, 0.0]);
        assert_eq!(d.labels, vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn sigmoid_bias_joins_last_block() {
        let data = gen_classification(10, 7, &mut rng(1)).unwrap();
        let p = gen_sigmoid_ls(&data, 3).unwrap();
        assert_eq!(p.partition().dims(), &[3, 2, 3]);
    }

    #[test]
    fn ratio_search_hits_target() {
        let spec = LassoSpec::new(300, 60, 6);
        for target in [1.15, 1.34, 1.47] {
            let (p, v) = gen_lasso_with_ratio(&spec, target, &mut rng(4)).unwrap();
            assert!((p.lipschitz_ratio() - target).abs() < 1e-3, "{} vs {target}", p.lipschitz_ratio());
            assert!(v.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn block_variances_order_lipschitz_estimates() {
        let mut spec = LassoSpec::new(200, 40, 4);
        spec.block_variances = Some(vec![0.5, 1.0, 2.0, 4.0]);
        let mut ordered = 0;
        for seed in 0..20 {
            let p = gen_lasso(&spec, &mut rng(seed)).unwrap();
            if p.lipschitz().windows(2).all(|w| w[0] < w[1]) {
                ordered += 1;
            }
        }
        assert!(ordered >= 19, "{ordered}/20");
    }

    #[test]
    fn tracker_matches_direct_objective() {
        let mut r = rng(9);
        for p in sample_problems() {
            let mut x: Vec<f64> = (0..p.dim()).map(|_| r.random_range(-1.0..1.0)).collect();
            let mut t = ObjectiveTracker::new(&p, &x);
            for i in 0..p.num_blocks() {
                let range = p.partition().range(i).unwrap();
                let delta: Vec<f64> = range.clone().map(|_| r.random_range(-0.5..0.5)).collect();
                for (k, d) in range.clone().zip(&delta) {
                    x[k] += d;
                }
                t.apply_block_delta(&p, range, &delta);
                let direct = p.objective(&x).unwrap();
                assert!((t.objective(&p, &x).unwrap() - direct).abs() <= 1e-12 * direct.abs().max(1.0));
            }
        }
    }
}
