use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand};

use vrblock::harness::{self, parse_overrides, ExperimentConfig};
use vrblock::metrics::{fit_rate, RateScale};
use vrblock::par::Execution;

#[derive(Parser)]
#[command(name = "vrblock", version, about = "Variance-reduced block proximal stochastic gradient experiments")]
struct Cli {
    /// Run trajectories one after another instead of on the thread pool.
    #[arg(long, global = true)]
    sequential: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment described by a key=value config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Override the base seed.
        #[arg(long)]
        seed: Option<u64>,
        /// CSV destination; defaults to the config's `out` key or FILE.csv.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every variant of a named preset.
    Preset {
        name: String,
        /// key=value overrides applied to every variant.
        overrides: Vec<String>,
        /// Directory receiving one CSV per variant.
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        /// Print the variant configs instead of running them.
        #[arg(long)]
        print: bool,
    },
    /// Fit a rate to one CSV column against k.
    RateFit {
        file: PathBuf,
        #[arg(long)]
        column: String,
        #[arg(long, value_parser = parse_scale)]
        scale: RateScale,
        #[arg(long)]
        from: u64,
        #[arg(long)]
        to: u64,
    },
    /// Solve the configured problem deterministically and report F*.
    Optimum {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        tol: f64,
    },
}

fn parse_scale(s: &str) -> Result<RateScale, String> {
    s.parse().map_err(|e: vrblock::Error| e.to_string())
}

fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    ExperimentConfig::parse(&text).with_context(|| format!("parsing {}", path.display()))
}

fn execution(cli: &Cli) -> Execution {
    if cli.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    }
}

fn run(config: &Path, seed: Option<u64>, out: Option<PathBuf>, exec: Execution) -> Result<()> {
    let mut cfg = load_config(config)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let out = out.or_else(|| cfg.out.clone()).unwrap_or_else(|| config.with_extension("csv"));
    let experiment = harness::run_experiment(&cfg, exec)?;
    let script = experiment.write_outputs(&out)?;
    println!("{}", experiment.summary_line());
    println!("wrote {} and {}", out.display(), script.display());
    Ok(())
}

fn preset(name: &str, overrides: &[String], out_dir: &Path, print: bool, exec: Execution) -> Result<()> {
    let preset = harness::preset(name)?;
    let overrides = parse_overrides(overrides)?;
    if !print {
        std::fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    }
    for v in &preset.variants {
        let cfg = v.config.with_overrides(&overrides).with_context(|| format!("variant {}", v.label))?;
        if print {
            println!("# {} / {}", preset.name, v.label);
            print!("{}", cfg.to_text());
            println!();
            continue;
        }
        let out = cfg.out.clone().unwrap_or_else(|| out_dir.join(format!("{}_{}.csv", preset.name, v.label)));
        let experiment = harness::run_experiment(&cfg, exec).with_context(|| format!("variant {}", v.label))?;
        experiment.write_outputs(&out)?;
        println!("{:<16} {}", v.label, experiment.summary_line());
    }
    Ok(())
}

fn rate_fit(file: &Path, column: &str, scale: RateScale, from: u64, to: u64) -> Result<()> {
    let text = std::fs::read_to_string(file).with_context(|| format!("reading {}", file.display()))?;
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header = lines.next().ok_or_else(|| anyhow!("{} has no header", file.display()))?;
    let names: Vec<&str> = header.split(',').collect();
    let kcol = names.iter().position(|n| *n == "k").ok_or_else(|| anyhow!("no `k` column"))?;
    let ycol = names.iter().position(|n| *n == column).ok_or_else(|| anyhow!("no column `{column}` (have {})", names.join(", ")))?;
    let mut series = Vec::new();
    for (i, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != names.len() {
            bail!("data row {} has {} fields, expected {}", i + 1, fields.len(), names.len());
        }
        if fields[ycol].is_empty() {
            continue;
        }
        let k: u64 = fields[kcol].parse().with_context(|| format!("data row {}", i + 1))?;
        let y: f64 = fields[ycol].parse().with_context(|| format!("data row {}", i + 1))?;
        series.push((k, y));
    }
    let fit = fit_rate(&series, from, to, scale)?;
    println!("slope {} intercept {} r_squared {} points {}", fit.slope, fit.intercept, fit.r_squared, fit.points);
    if scale == RateScale::SemiLog {
        println!("contraction factor {}", fit.slope.exp());
    }
    Ok(())
}

fn optimum(config: &Path, tol: f64) -> Result<()> {
    let cfg = load_config(config)?;
    let built = harness::build_problem(&cfg)?;
    let r = vrblock::solver::reference_optimum(&built.problem, tol)?;
    println!("f_star {}", r.value);
    println!("gradient_mapping_norm {}", r.gmap_norm);
    println!("iterations {}", r.iterations);
    println!("converged {}", r.converged);
    println!("certified {}", r.certified);
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let exec = execution(&cli);
    match &cli.command {
        Command::Run { config, seed, out } => run(config, *seed, out.clone(), exec),
        Command::Preset { name, overrides, out_dir, print } => preset(name, overrides, out_dir, *print, exec),
        Command::RateFit { file, column, scale, from, to } => rate_fit(file, column, *scale, *from, *to),
        Command::Optimum { config, tol } => optimum(config, *tol),
    }
}
