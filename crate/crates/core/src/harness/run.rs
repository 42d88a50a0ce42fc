//! Multi-trajectory experiment execution and CSV output.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::{ExperimentConfig, ProblemSpec, Variances};
use crate::error::{Error, Result};
use crate::metrics::{aggregate, AggregateRow, GapMode};
use crate::oracles::estimate_sigma_sq;
use crate::par::{map_indices, Execution};
use crate::problems::{gen_classification, gen_lasso, gen_lasso_with_ratio, gen_pl_quadratic, gen_sigmoid_ls, load_libsvm};
use crate::problems::{LassoSpec, PlQuadraticSpec, Problem};
use crate::solver::{reference_optimum, run, RunRecord};

pub const CSV_HEADER: &str = "k,po_calls,sfo_calls_mean,gap_mean,gap_std,gmap_sq_mean,gmap_sq_std";

/// A generated problem plus facts about it worth recording.
#[derive(Debug, Clone)]
pub struct BuiltProblem {
    pub problem: Problem,
    pub notes: Vec<(String, String)>,
}

pub fn build_problem(config: &ExperimentConfig) -> Result<BuiltProblem> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.problem_seed);
    let mut notes = Vec::new();
    let problem = match &config.problem {
        ProblemSpec::Lasso { samples, dim, density, noise_sd, lambda, variances } => {
            let mut spec = LassoSpec::new(*samples, *dim, config.blocks);
            spec.density = *density;
            spec.noise_sd = *noise_sd;
            spec.lambda = *lambda;
            match variances {
                Variances::Unit => gen_lasso(&spec, &mut rng)?,
                Variances::Explicit(v) => {
                    spec.block_variances = Some(v.clone());
                    gen_lasso(&spec, &mut rng)?
                }
                Variances::TargetRatio(target) => {
                    let (problem, found) = gen_lasso_with_ratio(&spec, *target, &mut rng)?;
                    let list: Vec<String> = found.iter().map(f64::to_string).collect();
                    notes.push(("block_variances_found".to_string(), list.join(",")));
                    problem
                }
            }
        }
        ProblemSpec::SigmoidLs { data, samples, dim } => {
            let data = match data {
                Some(path) => load_libsvm(path)?,
                None => gen_classification(*samples, *dim, &mut rng)?,
            };
            gen_sigmoid_ls(&data, config.blocks)?
        }
        ProblemSpec::PlQuadratic { dim, mu, l_spread, lambda, samples, noise_sd, center_sd } => {
            let mut spec = PlQuadraticSpec::new(*dim, config.blocks, *mu, *l_spread, *lambda);
            spec.samples = *samples;
            spec.noise_sd = *noise_sd;
            spec.center_sd = *center_sd;
            gen_pl_quadratic(&spec, &mut rng)?
        }
    };
    notes.push(("lipschitz_ratio_found".to_string(), problem.lipschitz_ratio().to_string()));
    notes.push(("global_lipschitz".to_string(), problem.global_lipschitz().to_string()));
    Ok(BuiltProblem { problem, notes })
}

/// Reference optimal value used for the gap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Optimum {
    pub value: f64,
    pub converged: bool,
    pub certified: bool,
}

pub fn solve_optimum(problem: &Problem, tol: f64) -> Result<Optimum> {
    let r = reference_optimum(problem, tol)?;
    Ok(Optimum { value: r.value, converged: r.converged, certified: r.certified })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub final_gap_mean: f64,
    pub po_calls_mean: f64,
    pub sfo_calls_mean: f64,
    pub wall_time: Duration,
}

#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub notes: Vec<(String, String)>,
    pub optimum: Optimum,
    pub mode: GapMode,
    pub rows: Vec<AggregateRow>,
    pub records: Vec<RunRecord>,
    pub summary: Summary,
}

/// Runs `config.trajectories` independent trajectories with seeds
/// `seed + t`. Errors carry the failing trajectory's index.
pub fn run_trajectories(
    config: &ExperimentConfig,
    problem: &Problem,
    sigma_sq: Option<f64>,
    execution: Execution,
) -> Result<Vec<RunRecord>> {
    let results = map_indices(config.trajectories, execution, |t| {
        let mut solver = config.solver_config(t);
        solver.sigma_sq = sigma_sq;
        run(problem, &solver).map_err(|e| Error::Trajectory { index: t, source: Box::new(e) })
    });
    results.into_iter().collect()
}

pub fn run_experiment(config: &ExperimentConfig, execution: Execution) -> Result<Experiment> {
    let built = build_problem(config)?;
    let optimum = solve_optimum(&built.problem, config.optimum_tol)?;
    run_on_problem(config, &built, optimum, execution)
}

/// Runs an experiment on an already generated problem with a known optimum,
/// so several variants can share one instance.
pub fn run_on_problem(config: &ExperimentConfig, built: &BuiltProblem, optimum: Optimum, execution: Execution) -> Result<Experiment> {
    config.validate()?;
    let start = Instant::now();
    let mut notes = built.notes.clone();
    let sigma_sq = match config.sigma_sq {
        Some(s) => Some(s),
        None if config.schedule.needs_sigma() => {
            let mut rng = ChaCha8Rng::seed_from_u64(config.problem_seed ^ 0x5157_4d41);
            let x0 = vec![0.0; built.problem.dim()];
            let s = estimate_sigma_sq(&built.problem, &x0, &mut rng)?;
            notes.push(("sigma_sq_estimated".to_string(), s.to_string()));
            Some(s)
        }
        None => None,
    };
    let records = run_trajectories(config, &built.problem, sigma_sq, execution)?;
    let mode = GapMode::for_optimum(optimum.value);
    let rows = aggregate(&records, optimum.value, mode)?;
    let t = records.len() as f64;
    let last = rows.last().expect("aggregate has an initial row");
    let summary = Summary {
        final_gap_mean: last.gap_mean,
        po_calls_mean: records.iter().map(|r| r.final_row().po_calls as f64).sum::<f64>() / t,
        sfo_calls_mean: last.sfo_calls_mean,
        wall_time: start.elapsed(),
    };
    Ok(Experiment { config: config.clone(), notes, optimum, mode, rows, records, summary })
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

impl Experiment {
    /// Final gap of each trajectory.
    pub fn final_gaps(&self) -> Vec<f64> {
        self.records.iter().map(|r| self.mode.gap(r.final_row().objective, self.optimum.value)).collect()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        for (k, v) in self.config.to_pairs() {
            writeln!(w, "# {k} = {v}")?;
        }
        for (k, v) in &self.notes {
            writeln!(w, "# {k} = {v}")?;
        }
        writeln!(w, "# f_star = {}", self.optimum.value)?;
        writeln!(w, "# f_star_certified = {}", self.optimum.certified)?;
        writeln!(w, "# gap = {}", self.mode.name())?;
        writeln!(w, "{CSV_HEADER}")?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                r.k,
                r.po_calls,
                r.sfo_calls_mean,
                r.gap_mean,
                r.gap_std,
                opt(r.gmap_sq_mean),
                opt(r.gmap_sq_std)
            )?;
        }
        Ok(())
    }

    pub fn csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }

    /// Gnuplot script plotting the gap against PO calls and SFO calls.
    pub fn gnuplot_script(&self, csv: &Path) -> String {
        let name = csv.display();
        let ylabel = match self.mode {
            GapMode::Relative => "(F - F*) / F*",
            GapMode::Absolute => "F - F*",
        };
        let mut s = String::new();
        let _ = writeln!(s, "set datafile separator ','");
        let _ = writeln!(s, "set datafile commentschars '#'");
        let _ = writeln!(s, "set key autotitle columnhead");
        let _ = writeln!(s, "set logscale y");
        let _ = writeln!(s, "set ylabel '{ylabel}'");
        let _ = writeln!(s, "set terminal pngcairo size 1200,480");
        let _ = writeln!(s, "set output '{}'", csv.with_extension("png").display());
        let _ = writeln!(s, "set multiplot layout 1,2");
        let _ = writeln!(s, "set xlabel 'proximal evaluations'");
        let _ = writeln!(s, "plot '{name}' using 2:4 with lines title 'mean gap'");
        let _ = writeln!(s, "set xlabel 'sampled gradients'");
        let _ = writeln!(s, "plot '{name}' using 3:4 with lines title 'mean gap'");
        let _ = writeln!(s, "unset multiplot");
        s
    }

    /// Writes the CSV and a `.gp` script next to it; returns the script path.
    pub fn write_outputs(&self, csv: &Path) -> Result<PathBuf> {
        let file = std::fs::File::create(csv)?;
        let mut w = std::io::BufWriter::new(file);
        self.write_csv(&mut w)?;
        w.flush()?;
        let script = csv.with_extension("gp");
        std::fs::write(&script, self.gnuplot_script(csv))?;
        Ok(script)
    }

    pub fn summary_line(&self) -> String {
        let s = &self.summary;
        format!(
            "final mean {} gap {:.4e} | PO calls {:.1} | mean SFO calls {:.1} | trajectories {} | wall time {:.3}s",
            self.mode.name(),
            s.final_gap_mean,
            s.po_calls_mean,
            s.sfo_calls_mean,
            self.records.len(),
            s.wall_time.as_secs_f64()
        )
    }
}
