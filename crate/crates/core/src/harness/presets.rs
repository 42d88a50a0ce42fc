//! Named experiment presets reproducing the LASSO, PL and classification studies.

use super::config::{ExperimentConfig, Method, ProblemSpec, Variances};
use crate::error::{Error, Result};
use crate::problems::ProblemKind;
use crate::schedules::{BatchPolicy, ClockMode, ScheduleSpec};
use crate::selection::SelectionKind;
use crate::solver::{BatchCap, Budget, SteplengthRule};

pub const PRESET_NAMES: &[&str] = &["table2", "table3", "table5", "pl_geometric", "pl_polynomial", "delay", "classification"];

/// One configuration of a preset sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct Variant {
    pub label: String,
    pub config: ExperimentConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Preset {
    pub name: &'static str,
    pub description: &'static str,
    pub variants: Vec<Variant>,
}

fn lasso(samples: usize, dim: usize) -> ExperimentConfig {
    let mut c = ExperimentConfig::default();
    c.problem = ProblemSpec::Lasso { samples, dim, density: 0.1, noise_sd: 0.01, lambda: 0.1, variances: Variances::Unit };
    c.blocks = 10;
    c
}

fn geometric(base: f64) -> ScheduleSpec {
    ScheduleSpec::Uniform(BatchPolicy::Geometric { base })
}

fn variant(label: impl Into<String>, config: ExperimentConfig) -> Variant {
    Variant { label: label.into(), config }
}

/// Growth-rate sweep on `N = 1000, d = 400`.
pub fn table2() -> Vec<Variant> {
    let mut base = lasso(1000, 400);
    base.steplength = SteplengthRule::Fixed(0.01);
    base.clock = ClockMode::Global;
    base.batch_cap = BatchCap::Dataset;
    base.budget = Budget::Epochs(50);
    [0.85, 0.9, 0.95]
        .into_iter()
        .map(|b| {
            let mut c = base.clone();
            c.schedule = geometric(b);
            variant(format!("b{b}"), c)
        })
        .collect()
}

fn table3_base() -> ExperimentConfig {
    let mut base = lasso(2000, 200);
    base.steplength = SteplengthRule::Fixed(TABLE3_STEP);
    base.clock = ClockMode::Block;
    base.batch_cap = BatchCap::None;
    base.budget = Budget::Epochs(50);
    base
}

/// Steplength shared by every method in the `N = 2000` comparison.
pub const TABLE3_STEP: f64 = 0.03;

/// Geometric growth against constant mini-batches on `N = 2000, d = 200`.
pub fn table3() -> Vec<Variant> {
    let base = table3_base();
    let mut out = Vec::new();
    for b in [0.95, 0.98] {
        let mut c = base.clone();
        c.schedule = geometric(b);
        out.push(variant(format!("b{b}"), c));
    }
    for m in [16, 64] {
        let mut c = base.clone();
        c.method = Method::Bsg(m);
        c.selection = SelectionKind::Uniform;
        out.push(variant(format!("bsg{m}"), c));
    }
    out
}

/// Identical `1.28 / L` against block-specific `1 / L_i` steps at several
/// Lipschitz heterogeneity levels.
pub fn table5() -> Vec<Variant> {
    let mut out = Vec::new();
    for ratio in [1.15, 1.27, 1.34, 1.47] {
        let mut base = lasso(1000, 200);
        if let ProblemSpec::Lasso { variances, .. } = &mut base.problem {
            *variances = Variances::TargetRatio(ratio);
        }
        base.selection = SelectionKind::Lipschitz;
        base.schedule = ScheduleSpec::Uniform(BatchPolicy::Polynomial { degree: 5 });
        base.clock = ClockMode::Block;
        base.batch_cap = BatchCap::Dataset;
        base.budget = Budget::Epochs(100);
        for (tag, rule) in [("identical", SteplengthRule::GlobalScaled(1.28)), ("block", SteplengthRule::Inverse)] {
            let mut c = base.clone();
            c.steplength = rule;
            out.push(variant(format!("r{ratio}_{tag}"), c));
        }
    }
    out
}

fn pl_base() -> ExperimentConfig {
    let mut c = ExperimentConfig::default();
    c.problem = ProblemSpec::default_for(ProblemKind::PlQuadratic);
    c.blocks = 4;
    c.steplength = SteplengthRule::PlOptimal;
    c.trajectories = 30;
    c
}

/// Per-block geometric growth inside the linear-rate regime.
pub fn pl_geometric() -> Vec<Variant> {
    let mut c = pl_base();
    c.schedule = ScheduleSpec::PlGeometric { fraction: 0.5 };
    c.budget = Budget::Iterations(400);
    vec![variant("q_half", c)]
}

/// Polynomial batch growth of degree one and two.
pub fn pl_polynomial() -> Vec<Variant> {
    [1, 2]
        .into_iter()
        .map(|v| {
            let mut c = pl_base();
            c.schedule = ScheduleSpec::Uniform(BatchPolicy::Polynomial { degree: v });
            c.budget = Budget::Iterations(5000);
            variant(format!("v{v}"), c)
        })
        .collect()
}

/// Bounded-delay sweep on the `N = 2000, d = 200` instance.
pub fn delay() -> Vec<Variant> {
    [0, 5, 20]
        .into_iter()
        .map(|d| {
            let mut c = table3_base();
            c.steplength = SteplengthRule::Inverse;
            c.schedule = ScheduleSpec::Uniform(BatchPolicy::Polynomial { degree: 5 });
            c.batch_cap = BatchCap::Dataset;
            c.delay_max = d;
            variant(format!("delay{d}"), c)
        })
        .collect()
}

/// Sigmoid least squares with constant and growing batches.
pub fn classification() -> Vec<Variant> {
    let mut base = ExperimentConfig::default();
    base.problem = ProblemSpec::SigmoidLs { data: None, samples: 2000, dim: 100 };
    base.blocks = 10;
    base.steplength = SteplengthRule::Fixed(0.2);
    base.budget = Budget::Epochs(20);
    base.trajectories = 20;
    let schedules = [
        ("const_2pct", BatchPolicy::Constant(40)),
        ("const_5pct", BatchPolicy::Constant(100)),
        ("linear", BatchPolicy::Polynomial { degree: 1 }),
        ("quadratic", BatchPolicy::Power { delta: 1.0 }),
    ];
    schedules
        .into_iter()
        .map(|(label, p)| {
            let mut c = base.clone();
            c.schedule = ScheduleSpec::Uniform(p);
            variant(label, c)
        })
        .collect()
}

pub fn preset(name: &str) -> Result<Preset> {
    let (name, description, variants) = match name {
        "table2" => ("table2", "geometric growth rates 0.85, 0.9, 0.95 on LASSO N=1000 d=400", table2()),
        "table3" => ("table3", "geometric 0.95 and 0.98 against BSG-16 and BSG-64 on LASSO N=2000 d=200", table3()),
        "table5" => ("table5", "identical against block-specific steplengths at four Lipschitz ratios", table5()),
        "pl_geometric" => ("pl_geometric", "PL quadratic with per-block geometric batches", pl_geometric()),
        "pl_polynomial" => ("pl_polynomial", "PL quadratic with polynomial batches of degree 1 and 2", pl_polynomial()),
        "delay" => ("delay", "delay bounds 0, 5, 20 on the table3 instance", delay()),
        "classification" => ("classification", "sigmoid least squares with constant and growing batches", classification()),
        other => {
            return Err(Error::InvalidConfig(format!("unknown preset `{other}` (known: {})", PRESET_NAMES.join(", "))));
        }
    };
    Ok(Preset { name, description, variants })
}
