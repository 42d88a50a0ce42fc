//! Flat `key = value` experiment configuration.
//!
//! A document is a list of lines. Blank lines and lines starting with `#` are
//! ignored, a `#` preceded by whitespace starts a trailing comment, and values
//! may be wrapped in double quotes. Every key applies to
//! exactly one field, keys that do not apply to the chosen problem kind are
//! rejected, and [`ExperimentConfig::to_text`] writes every applicable key so
//! that parsing the output reproduces the configuration exactly.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::problems::ProblemKind;
use crate::schedules::{BatchPolicy, ClockMode, ScheduleSpec};
use crate::selection::SelectionKind;
use crate::solver::{BatchCap, Budget, SolverConfig, SteplengthRule};

/// How per-block column variances of a LASSO design are chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum Variances {
    /// Unit variance everywhere.
    Unit,
    Explicit(Vec<f64>),
    /// Search for variances hitting this `L_max / L_ave`.
    TargetRatio(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProblemSpec {
    Lasso {
        samples: usize,
        dim: usize,
        density: f64,
        noise_sd: f64,
        lambda: f64,
        variances: Variances,
    },
    /// Sigmoid least squares on a LIBSVM file or on a synthetic two-class set.
    SigmoidLs {
        data: Option<PathBuf>,
        samples: usize,
        dim: usize,
    },
    PlQuadratic {
        dim: usize,
        mu: f64,
        l_spread: f64,
        lambda: f64,
        samples: usize,
        noise_sd: f64,
        center_sd: f64,
    },
}

impl ProblemSpec {
    pub fn default_for(kind: ProblemKind) -> Self {
        match kind {
            ProblemKind::Lasso => {
                Self::Lasso { samples: 1000, dim: 400, density: 0.1, noise_sd: 0.01, lambda: 0.1, variances: Variances::Unit }
            }
            ProblemKind::SigmoidLs => Self::SigmoidLs { data: None, samples: 1000, dim: 100 },
            ProblemKind::PlQuadratic => {
                Self::PlQuadratic { dim: 20, mu: 1.0, l_spread: 4.0, lambda: 0.05, samples: 200, noise_sd: 0.003, center_sd: 1.0 }
            }
        }
    }

    pub fn kind(&self) -> ProblemKind {
        match self {
            Self::Lasso { .. } => ProblemKind::Lasso,
            Self::SigmoidLs { .. } => ProblemKind::SigmoidLs,
            Self::PlQuadratic { .. } => ProblemKind::PlQuadratic,
        }
    }
}

/// Which algorithm a run uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// The variance-reduced method with the configured schedule.
    Vr,
    /// Mini-batch block stochastic gradient with constant batch `m`.
    Bsg(u64),
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "vr" {
            return Ok(Self::Vr);
        }
        match s.strip_prefix("bsg:").map(str::parse::<u64>) {
            Some(Ok(m)) if m >= 1 => Ok(Self::Bsg(m)),
            _ => Err(Error::InvalidConfig(format!("unknown method `{s}` (expected vr or bsg:m)"))),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Vr => f.write_str("vr"),
            Self::Bsg(m) => write!(f, "bsg:{m}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub problem: ProblemSpec,
    pub blocks: usize,
    pub method: Method,
    pub steplength: SteplengthRule,
    pub schedule: ScheduleSpec,
    pub clock: ClockMode,
    pub batch_cap: BatchCap,
    pub selection: SelectionKind,
    pub delay_max: usize,
    pub budget: Budget,
    pub metrics_stride: u64,
    /// Noise level for constant-eps schedules; estimated when absent.
    pub sigma_sq: Option<f64>,
    /// Base seed; trajectory `t` uses `seed + t`.
    pub seed: u64,
    /// Seed of the problem generator.
    pub problem_seed: u64,
    pub trajectories: usize,
    /// Gradient mapping tolerance of the reference solve.
    pub optimum_tol: f64,
    pub out: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            problem: ProblemSpec::default_for(ProblemKind::Lasso),
            blocks: 10,
            method: Method::Vr,
            steplength: SteplengthRule::Inverse,
            schedule: ScheduleSpec::Uniform(BatchPolicy::Geometric { base: 0.95 }),
            clock: ClockMode::Block,
            batch_cap: BatchCap::None,
            selection: SelectionKind::Uniform,
            delay_max: 0,
            budget: Budget::Epochs(50),
            metrics_stride: 0,
            sigma_sq: None,
            seed: 0,
            problem_seed: 0,
            trajectories: 50,
            optimum_tol: 1e-9,
            out: None,
        }
    }
}

fn config_err(key: &str, message: impl Into<String>) -> Error {
    Error::Config { key: key.to_string(), message: message.into() }
}

fn parse_value<T: FromStr>(key: &str, value: &str, what: &str) -> Result<T> {
    value.parse().map_err(|_| config_err(key, format!("`{value}` is not {what}")))
}

fn positive_f64(key: &str, value: &str) -> Result<f64> {
    let v: f64 = parse_value(key, value, "a number")?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(config_err(key, format!("{v} must be positive")))
    }
}

fn nonnegative_f64(key: &str, value: &str) -> Result<f64> {
    let v: f64 = parse_value(key, value, "a number")?;
    if v >= 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(config_err(key, format!("{v} must be nonnegative")))
    }
}

fn positive_usize(key: &str, value: &str) -> Result<usize> {
    let v: usize = parse_value(key, value, "a nonnegative integer")?;
    if v == 0 {
        return Err(config_err(key, "must be at least 1"));
    }
    Ok(v)
}

fn with_key<T>(key: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| config_err(key, e.to_string()))
}

fn join(values: &[f64]) -> String {
    values.iter().map(f64::to_string).collect::<Vec<_>>().join(",")
}

/// Splits a document into `(line, key, value)` triples.
/// Removes surrounding quotes or a trailing ` # comment` from a value.
fn strip_value(value: &str) -> std::result::Result<&str, String> {
    if let Some(rest) = value.strip_prefix('"') {
        let end = rest.find('"').ok_or_else(|| format!("unterminated quote in `{value}`"))?;
        let tail = rest[end + 1..].trim_start();
        if !(tail.is_empty() || tail.starts_with('#')) {
            return Err(format!("unexpected text after quoted value `{value}`"));
        }
        return Ok(&rest[..end]);
    }
    let cut = value.char_indices().find(|&(i, c)| c == '#' && i > 0 && value[..i].ends_with(char::is_whitespace));
    Ok(cut.map_or(value, |(i, _)| value[..i].trim_end()))
}

pub fn parse_pairs(text: &str) -> Result<Vec<(usize, String, String)>> {
    let mut out: Vec<(usize, String, String)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Parse { line: idx + 1, message: format!("expected `key = value`, found `{line}`") })?;
        let key = key.trim();
        let value = strip_value(value.trim()).map_err(|message| Error::Parse { line: idx + 1, message })?;
        if key.is_empty() {
            return Err(Error::Parse { line: idx + 1, message: "empty key".into() });
        }
        if let Some((first, _, _)) = out.iter().find(|(_, k, _)| k == key) {
            return Err(Error::Parse { line: idx + 1, message: format!("key `{key}` repeated (first set on line {first})") });
        }
        out.push((idx + 1, key.to_string(), value.to_string()));
    }
    Ok(out)
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let pairs = parse_pairs(text)?;
        Self::from_pairs(pairs.iter().map(|(_, k, v)| (k.as_str(), v.as_str())))
    }

    /// Builds a configuration from key/value pairs; missing keys take their
    /// defaults and the problem kind is read first.
    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> Result<Self> {
        let pairs: Vec<(&str, &str)> = pairs.into_iter().collect();
        let kind = match pairs.iter().find(|(k, _)| *k == "problem") {
            Some((_, v)) => match *v {
                "lasso" => ProblemKind::Lasso,
                "sigmoid_ls" => ProblemKind::SigmoidLs,
                "pl_quadratic" => ProblemKind::PlQuadratic,
                other => return Err(config_err("problem", format!("unknown problem `{other}`"))),
            },
            None => ProblemKind::Lasso,
        };
        let mut config = Self { problem: ProblemSpec::default_for(kind), ..Self::default() };
        let mut budget_key: Option<&str> = None;
        for &(key, value) in &pairs {
            if key == "iterations" || key == "epochs" {
                if let Some(prev) = budget_key {
                    return Err(config_err(key, format!("conflicts with `{prev}`; give one budget")));
                }
                budget_key = Some(key);
            }
            config.set(key, value)?;
        }
        config.validate()?;
        Ok(config)
    }

    /// Sets one key. Problem-specific keys must match the current problem kind.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let kind = self.problem.kind();
        match key {
            "problem" => {
                if value != kind.name() {
                    self.problem = ProblemSpec::default_for(match value {
                        "lasso" => ProblemKind::Lasso,
                        "sigmoid_ls" => ProblemKind::SigmoidLs,
                        "pl_quadratic" => ProblemKind::PlQuadratic,
                        other => return Err(config_err(key, format!("unknown problem `{other}`"))),
                    });
                }
            }
            "blocks" => self.blocks = positive_usize(key, value)?,
            "method" => self.method = with_key(key, value.parse())?,
            "steplength" => self.steplength = with_key(key, value.parse())?,
            "schedule" => self.schedule = with_key(key, value.parse())?,
            "clock" => self.clock = with_key(key, value.parse())?,
            "batch_cap" => self.batch_cap = with_key(key, value.parse())?,
            "selection" => self.selection = with_key(key, value.parse())?,
            "delay_max" => self.delay_max = parse_value(key, value, "a nonnegative integer")?,
            "iterations" => self.budget = Budget::Iterations(parse_value(key, value, "a nonnegative integer")?),
            "epochs" => self.budget = Budget::Epochs(positive_usize(key, value)? as u64),
            "metrics_stride" => self.metrics_stride = parse_value(key, value, "a nonnegative integer")?,
            "sigma_sq" => {
                self.sigma_sq = match value {
                    "auto" => None,
                    v => Some(nonnegative_f64(key, v)?),
                }
            }
            "seed" => self.seed = parse_value(key, value, "an unsigned integer")?,
            "problem_seed" => self.problem_seed = parse_value(key, value, "an unsigned integer")?,
            "trajectories" => self.trajectories = positive_usize(key, value)?,
            "optimum_tol" => self.optimum_tol = positive_f64(key, value)?,
            "out" => self.out = (!value.is_empty()).then(|| PathBuf::from(value)),
            _ => return self.set_problem_key(key, value),
        }
        Ok(())
    }

    fn set_problem_key(&mut self, key: &str, value: &str) -> Result<()> {
        let known = [
            "samples",
            "dim",
            "density",
            "noise_sd",
            "lambda",
            "block_variances",
            "lipschitz_ratio",
            "data",
            "mu",
            "l_spread",
            "center_sd",
        ];
        if !known.contains(&key) {
            return Err(config_err(key, "unknown key"));
        }
        let kind = self.problem.kind();
        let wrong_kind = || config_err(key, format!("does not apply to problem `{}`", kind.name()));
        match &mut self.problem {
            ProblemSpec::Lasso { samples, dim, density, noise_sd, lambda, variances } => match key {
                "samples" => *samples = positive_usize(key, value)?,
                "dim" => *dim = positive_usize(key, value)?,
                "density" => {
                    let v = positive_f64(key, value)?;
                    if v > 1.0 {
                        return Err(config_err(key, "must lie in (0, 1]"));
                    }
                    *density = v;
                }
                "noise_sd" => *noise_sd = nonnegative_f64(key, value)?,
                "lambda" => *lambda = nonnegative_f64(key, value)?,
                "block_variances" => {
                    if matches!(variances, Variances::TargetRatio(_)) {
                        return Err(config_err(key, "conflicts with `lipschitz_ratio`"));
                    }
                    let list = value.split(',').map(|v| positive_f64(key, v.trim())).collect::<Result<Vec<_>>>()?;
                    *variances = Variances::Explicit(list);
                }
                "lipschitz_ratio" => {
                    if matches!(variances, Variances::Explicit(_)) {
                        return Err(config_err(key, "conflicts with `block_variances`"));
                    }
                    let r = positive_f64(key, value)?;
                    if r < 1.0 {
                        return Err(config_err(key, "L_max / L_ave is at least 1"));
                    }
                    *variances = Variances::TargetRatio(r);
                }
                _ => return Err(wrong_kind()),
            },
            ProblemSpec::SigmoidLs { data, samples, dim } => match key {
                "data" => *data = (!value.is_empty()).then(|| PathBuf::from(value)),
                "samples" => *samples = positive_usize(key, value)?,
                "dim" => *dim = positive_usize(key, value)?,
                _ => return Err(wrong_kind()),
            },
            ProblemSpec::PlQuadratic { dim, mu, l_spread, lambda, samples, noise_sd, center_sd } => match key {
                "dim" => *dim = positive_usize(key, value)?,
                "mu" => *mu = positive_f64(key, value)?,
                "l_spread" => {
                    let v = positive_f64(key, value)?;
                    if v < 1.0 {
                        return Err(config_err(key, "must be at least 1"));
                    }
                    *l_spread = v;
                }
                "lambda" => *lambda = nonnegative_f64(key, value)?,
                "samples" => *samples = positive_usize(key, value)?,
                "noise_sd" => *noise_sd = nonnegative_f64(key, value)?,
                "center_sd" => *center_sd = nonnegative_f64(key, value)?,
                _ => return Err(wrong_kind()),
            },
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let dim = match &self.problem {
            ProblemSpec::Lasso { dim, variances, .. } => {
                if let Variances::Explicit(v) = variances {
                    if v.len() != self.blocks {
                        return Err(config_err("block_variances", format!("{} values for {} blocks", v.len(), self.blocks)));
                    }
                }
                *dim
            }
            ProblemSpec::SigmoidLs { data: Some(_), .. } => usize::MAX,
            ProblemSpec::SigmoidLs { dim, .. } | ProblemSpec::PlQuadratic { dim, .. } => *dim,
        };
        if self.blocks > dim {
            return Err(config_err("blocks", format!("{} blocks exceed dimension {dim}", self.blocks)));
        }
        if let Method::Bsg(_) = self.method {
            if !self.steplength.is_shared() {
                return Err(config_err("steplength", "bsg needs a shared steplength (fixed:a or global:c)"));
            }
        }
        Ok(())
    }

    /// Every applicable key with its value, in a fixed order.
    pub fn to_pairs(&self) -> Vec<(&'static str, String)> {
        let mut out: Vec<(&'static str, String)> = vec![("problem", self.problem.kind().name().to_string())];
        match &self.problem {
            ProblemSpec::Lasso { samples, dim, density, noise_sd, lambda, variances } => {
                out.push(("samples", samples.to_string()));
                out.push(("dim", dim.to_string()));
                out.push(("density", density.to_string()));
                out.push(("noise_sd", noise_sd.to_string()));
                out.push(("lambda", lambda.to_string()));
                match variances {
                    Variances::Unit => {}
                    Variances::Explicit(v) => out.push(("block_variances", join(v))),
                    Variances::TargetRatio(r) => out.push(("lipschitz_ratio", r.to_string())),
                }
            }
            ProblemSpec::SigmoidLs { data, samples, dim } => match data {
                Some(path) => out.push(("data", path.display().to_string())),
                None => {
                    out.push(("samples", samples.to_string()));
                    out.push(("dim", dim.to_string()));
                }
            },
            ProblemSpec::PlQuadratic { dim, mu, l_spread, lambda, samples, noise_sd, center_sd } => {
                out.push(("dim", dim.to_string()));
                out.push(("mu", mu.to_string()));
                out.push(("l_spread", l_spread.to_string()));
                out.push(("lambda", lambda.to_string()));
                out.push(("samples", samples.to_string()));
                out.push(("noise_sd", noise_sd.to_string()));
                out.push(("center_sd", center_sd.to_string()));
            }
        }
        out.push(("blocks", self.blocks.to_string()));
        out.push(("method", self.method.to_string()));
        out.push(("steplength", self.steplength.to_string()));
        out.push(("schedule", self.schedule.to_string()));
        out.push(("clock", self.clock.to_string()));
        out.push(("batch_cap", self.batch_cap.to_string()));
        out.push(("selection", self.selection.to_string()));
        out.push(("delay_max", self.delay_max.to_string()));
        match self.budget {
            Budget::Iterations(k) => out.push(("iterations", k.to_string())),
            Budget::Epochs(e) => out.push(("epochs", e.to_string())),
        }
        out.push(("metrics_stride", self.metrics_stride.to_string()));
        out.push(("sigma_sq", self.sigma_sq.map_or_else(|| "auto".to_string(), |s| s.to_string())));
        out.push(("seed", self.seed.to_string()));
        out.push(("problem_seed", self.problem_seed.to_string()));
        out.push(("trajectories", self.trajectories.to_string()));
        out.push(("optimum_tol", self.optimum_tol.to_string()));
        if let Some(out_path) = &self.out {
            out.push(("out", out_path.display().to_string()));
        }
        out
    }

    pub fn to_text(&self) -> String {
        self.to_pairs()
            .into_iter()
            .map(
                |(k, v)| {
                    if v.contains('#') || v.starts_with('"') || v.trim() != v {
                        format!("{k} = \"{v}\"\n")
                    } else {
                        format!("{k} = {v}\n")
                    }
                },
            )
            .collect()
    }

    /// Applies `key=value` overrides on top of this configuration.
    pub fn with_overrides(&self, overrides: &[(String, String)]) -> Result<Self> {
        let mut pairs: Vec<(&str, String)> = self.to_pairs();
        if let Some((_, kind)) = overrides.iter().find(|(k, _)| k == "problem") {
            if kind != self.problem.kind().name() {
                pairs.retain(|(k, _)| !is_problem_key(k));
            }
        }
        for (key, value) in overrides {
            if matches!(key.as_str(), "iterations" | "epochs") {
                pairs.retain(|(k, _)| !matches!(*k, "iterations" | "epochs"));
            }
            if key == "lipschitz_ratio" || key == "block_variances" {
                pairs.retain(|(k, _)| !matches!(*k, "lipschitz_ratio" | "block_variances"));
            }
            match pairs.iter_mut().find(|(k, _)| *k == key.as_str()) {
                Some(slot) => slot.1 = value.clone(),
                None => pairs.push((leak_key(key)?, value.clone())),
            }
        }
        Self::from_pairs(pairs.iter().map(|(k, v)| (*k, v.as_str())))
    }

    /// Solver settings for trajectory `index`.
    pub fn solver_config(&self, index: usize) -> SolverConfig {
        let mut c = SolverConfig::new(self.budget);
        c.steplength = self.steplength;
        c.schedule = match self.method {
            Method::Vr => self.schedule,
            Method::Bsg(m) => ScheduleSpec::Uniform(BatchPolicy::Constant(m)),
        };
        c.clock = self.clock;
        c.batch_cap = self.batch_cap;
        c.selection = self.selection;
        c.delay_max = self.delay_max;
        c.seed = self.seed.wrapping_add(index as u64);
        c.metrics_stride = self.metrics_stride;
        c.sigma_sq = self.sigma_sq;
        c
    }
}

fn is_problem_key(key: &str) -> bool {
    matches!(
        key,
        "samples"
            | "dim"
            | "density"
            | "noise_sd"
            | "lambda"
            | "block_variances"
            | "lipschitz_ratio"
            | "data"
            | "mu"
            | "l_spread"
            | "center_sd"
    )
}

const ALL_KEYS: &[&str] = &[
    "problem",
    "samples",
    "dim",
    "density",
    "noise_sd",
    "lambda",
    "block_variances",
    "lipschitz_ratio",
    "data",
    "mu",
    "l_spread",
    "center_sd",
    "blocks",
    "method",
    "steplength",
    "schedule",
    "clock",
    "batch_cap",
    "selection",
    "delay_max",
    "iterations",
    "epochs",
    "metrics_stride",
    "sigma_sq",
    "seed",
    "problem_seed",
    "trajectories",
    "optimum_tol",
    "out",
];

fn leak_key(key: &str) -> Result<&'static str> {
    ALL_KEYS.iter().copied().find(|k| *k == key).ok_or_else(|| config_err(key, "unknown key"))
}

/// Parses `key=value` command-line overrides.
pub fn parse_overrides(args: &[String]) -> Result<Vec<(String, String)>> {
    args.iter()
        .map(|arg| {
            arg.split_once('=')
                .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
                .ok_or_else(|| config_err(arg, "override must look like key=value"))
        })
        .collect()
}
