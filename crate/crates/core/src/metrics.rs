//! Stationarity and suboptimality measurement.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::linalg::norm_sq;
use crate::problems::Problem;
use crate::solver::RunRecord;

/// Proximal gradient mapping `G_i = (x_i - prox_{a_i r_i}(x_i - a_i grad_i fbar(x))) / a_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientMapping {
    pub blocks: Vec<Vec<f64>>,
    pub norm_sq: f64,
}

pub fn gradient_mapping(problem: &Problem, x: &[f64], alphas: &[f64]) -> Result<GradientMapping> {
    let partition = problem.partition();
    partition.check_len(x.len())?;
    if alphas.len() != partition.num_blocks() {
        return Err(Error::DimensionMismatch { expected: partition.num_blocks(), got: alphas.len() });
    }
    let grad = problem.full_gradient(x)?;
    let mut blocks = Vec::with_capacity(alphas.len());
    let mut total = 0.0;
    for (i, (&alpha, reg)) in alphas.iter().zip(problem.regularizers()).enumerate() {
        let xi = partition.slice(x, i)?;
        let gi = partition.slice(&grad, i)?;
        let shifted: Vec<f64> = xi.iter().zip(gi).map(|(v, g)| v - alpha * g).collect();
        let p = reg.prox(&shifted, alpha)?;
        let g: Vec<f64> = xi.iter().zip(&p).map(|(v, q)| (v - q) / alpha).collect();
        total += norm_sq(&g);
        blocks.push(g);
    }
    Ok(GradientMapping { blocks, norm_sq: total })
}

/// Running ergodic average `(1/(K+1)) sum_{k<=K} |G(x(k))|^2`, averaged over
/// trajectories. Series length is the shortest trajectory.
pub fn ergodic_gap(records: &[RunRecord]) -> Result<Vec<(u64, f64)>> {
    if records.is_empty() {
        return Err(Error::MissingMetric("no trajectories".into()));
    }
    let len = records.iter().map(|r| r.rows.len()).min().unwrap_or(0);
    let mut sums = vec![0.0; len];
    for rec in records {
        let mut running = 0.0;
        for (k, row) in rec.rows[..len].iter().enumerate() {
            let g = row.gmap_sq.ok_or_else(|| Error::MissingMetric(format!("gradient mapping missing at k = {}", row.k)))?;
            running += g;
            sums[k] += running / (k + 1) as f64;
        }
    }
    let t = records.len() as f64;
    Ok(sums.into_iter().enumerate().map(|(k, s)| (k as u64, s / t)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateScale {
    /// `log(value)` against `log(k)`.
    LogLog,
    /// `log(value)` against `k`.
    SemiLog,
}

impl FromStr for RateScale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "loglog" => Ok(Self::LogLog),
            "semilog" => Ok(Self::SemiLog),
            other => Err(Error::RateFit(format!("unknown scale `{other}` (expected loglog|semilog)"))),
        }
    }
}

impl fmt::Display for RateScale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::LogLog => "loglog",
            Self::SemiLog => "semilog",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: usize,
}

/// Least-squares line through the transformed points with `from <= k <= to`.
pub fn fit_rate(series: &[(u64, f64)], from: u64, to: u64, scale: RateScale) -> Result<RateFit> {
    let pts: Vec<(f64, f64)> = series
        .iter()
        .filter(|(k, _)| *k >= from && *k <= to)
        .map(|&(k, v)| {
            if !(v > 0.0) {
                return Err(Error::RateFit(format!("nonpositive value {v} at k = {k}")));
            }
            let x = match scale {
                RateScale::LogLog if k == 0 => return Err(Error::RateFit("loglog fit needs k >= 1".into())),
                RateScale::LogLog => (k as f64).ln(),
                RateScale::SemiLog => k as f64,
            };
            Ok((x, v.ln()))
        })
        .collect::<Result<_>>()?;
    if pts.len() < 10 {
        return Err(Error::RateFit(format!("need at least 10 points, window has {}", pts.len())));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::RateFit("window has a single abscissa".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    Ok(RateFit { slope, intercept, r_squared, points: pts.len() })
}

/// How suboptimality is reported.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GapMode {
    /// `(F - F*) / F*`.
    Relative,
    /// `F - F*`, used when `F* = 0` or negative.
    Absolute,
}

impl GapMode {
    pub fn for_optimum(f_star: f64) -> Self {
        if f_star > 0.0 {
            Self::Relative
        } else {
            Self::Absolute
        }
    }

    pub fn gap(self, value: f64, f_star: f64) -> f64 {
        match self {
            Self::Relative => (value - f_star) / f_star,
            Self::Absolute => value - f_star,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Relative => "relative",
            Self::Absolute => "absolute",
        }
    }
}

/// Cross-trajectory statistics at one iteration index.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub k: u64,
    pub po_calls: u64,
    pub sfo_calls_mean: f64,
    pub gap_mean: f64,
    pub gap_std: f64,
    pub gmap_sq_mean: Option<f64>,
    pub gmap_sq_std: Option<f64>,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Aggregates trajectories row by row. A trajectory that stopped early
/// contributes its final row to all later indices, so the last aggregate
/// row describes every trajectory's final state.
pub fn aggregate(records: &[RunRecord], f_star: f64, mode: GapMode) -> Result<Vec<AggregateRow>> {
    if records.is_empty() {
        return Err(Error::MissingMetric("no trajectories".into()));
    }
    let len = records.iter().map(|r| r.rows.len()).max().unwrap_or(0);
    let mut out = Vec::with_capacity(len);
    let mut gaps = Vec::with_capacity(records.len());
    let mut sfo = Vec::with_capacity(records.len());
    let mut gmaps = Vec::with_capacity(records.len());
    for idx in 0..len {
        gaps.clear();
        sfo.clear();
        gmaps.clear();
        let mut k = 0;
        let mut po = 0;
        for rec in records {
            let row = rec.rows.get(idx).or_else(|| rec.rows.last()).expect("nonempty record");
            if idx < rec.rows.len() {
                k = row.k;
                po = row.po_calls;
            }
            gaps.push(mode.gap(row.objective, f_star));
            sfo.push(row.sfo_calls as f64);
            if let Some(g) = row.gmap_sq {
                gmaps.push(g);
            }
        }
        let (gap_mean, gap_std) = mean_std(&gaps);
        let (gm, gs) = if gmaps.len() == records.len() {
            let (m, s) = mean_std(&gmaps);
            (Some(m), Some(s))
        } else {
            (None, None)
        };
        out.push(AggregateRow {
            k,
            po_calls: po,
            sfo_calls_mean: sfo.iter().sum::<f64>() / sfo.len() as f64,
            gap_mean,
            gap_std,
            gmap_sq_mean: gm,
            gmap_sq_std: gs,
        });
    }
    Ok(out)
}
