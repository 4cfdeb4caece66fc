//! Monte Carlo experiments: strong-error tables, efficiency timings, and
//! backstop-trigger probabilities.
//!
//! Every Monte Carlo sample `k` is driven by one [`WienerPath`] with seed
//! `base_seed ^ k`. The reference solution (tamed Milstein at step
//! `T 2^-reference_exponent`) and every candidate scheme read their iterated
//! integrals from that same path, so errors are pathwise couplings. Samples run
//! through rayon and are reduced in seed order, so tables do not depend on the
//! thread count. Timings cover path generation plus integration.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use nalgebra::DVector;
use rayon::prelude::*;

use crate::adaptive::{summarize_adaptive, summarize_fixed, AdaptiveOptions, PathSummary, StrategyConfig};
use crate::adaptive::{integrate_adaptive, StepKind};
use crate::error::{Error, Result};
use crate::model::{BuiltinKind, SdeProblem};
use crate::stats::{binomial_std_error, fit_log2_slope, rms_with_error, MeanVar};
use crate::steppers::Scheme;
use crate::wiener::{generate_path, moment_constant, WienerPath};

/// Default base seed of all experiments.
pub const DEFAULT_SEED: u64 = 0x2019_0a0d_5eed;

/// Header of the error-table CSV.
pub const ERROR_TABLE_HEADER: &str =
    "scheme,h_max,rms_error,rms_std_error,h_mean,cpu_seconds,backstop_rate,divergent_count";

/// Header of the backstop-probability CSV.
pub const BACKSTOP_HEADER: &str = "rho,prob,prob_std_error";

/// Header of the per-step statistics emitted alongside the backstop curve.
pub const STEP_STATS_HEADER: &str = "rho,step_index,count,h_mean,h_variance,backstop_count";

/// Seed of Monte Carlo sample `index`.
pub fn path_seed(base: u64, index: usize) -> u64 {
    base ^ index as u64
}

/// A method in an experiment: the adaptive scheme or a fixed-step scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Adaptive,
    Fixed(Scheme),
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Adaptive => "adaptive",
            Method::Fixed(s) => s.name(),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "adaptive" {
            Ok(Method::Adaptive)
        } else {
            s.parse().map(Method::Fixed)
        }
    }
}

fn format_float(x: f64) -> String {
    if x.is_nan() {
        "NaN".to_string()
    } else {
        format!("{x:.16e}")
    }
}

/// Configuration of a strong-error experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub methods: Vec<Method>,
    pub h_max: Vec<f64>,
    pub rho: f64,
    /// Monte Carlo sample count `M`.
    pub paths: usize,
    /// Reference step is `T 2^-reference_exponent`.
    pub reference_exponent: u32,
    /// Path resolution is `T 2^-fine_exponent`; at least `reference_exponent + 4`.
    pub fine_exponent: u32,
    pub base_seed: u64,
    /// Run fixed-step methods at the grid-rounded `h_mean` of the adaptive
    /// run with the same `h_max` (when the adaptive method is present).
    pub match_h_mean: bool,
}

impl Default for ExperimentConfig {
    /// One-dimensional settings at desk scale: `h_max = 2^-12..2^-8`,
    /// `rho = 16`, 100 paths, reference `2^-16`, path `2^-20`.
    fn default() -> Self {
        ExperimentConfig {
            methods: vec![Method::Adaptive],
            h_max: dyadic_range(-12, -8),
            rho: 16.0,
            paths: 100,
            reference_exponent: 16,
            fine_exponent: 20,
            base_seed: DEFAULT_SEED,
            match_h_mean: true,
        }
    }
}

/// `[2^lo, ..., 2^hi]`.
pub fn dyadic_range(lo: i32, hi: i32) -> Vec<f64> {
    (lo.min(hi)..=hi.max(lo)).map(|k| 2f64.powi(k)).collect()
}

impl ExperimentConfig {
    pub fn validate(&self, horizon: f64) -> Result<()> {
        if self.methods.is_empty() {
            return Err(Error::Config("no methods given".into()));
        }
        if self.h_max.is_empty() {
            return Err(Error::Config("no h_max values given".into()));
        }
        if self.paths == 0 {
            return Err(Error::Config("paths must be positive".into()));
        }
        if self.fine_exponent < self.reference_exponent + 4 {
            return Err(Error::Config(format!(
                "fine_exponent {} must be at least reference_exponent + 4 = {}",
                self.fine_exponent,
                self.reference_exponent + 4
            )));
        }
        let reference_step = self.reference_step(horizon);
        for &h in &self.h_max {
            let config = StrategyConfig::new(h, self.rho)?;
            config.validate_for_horizon(horizon)?;
            let ratio = h / reference_step;
            if (ratio - ratio.round()).abs() > 1e-9 * ratio.max(1.0) || ratio.round() < 1.0 {
                return Err(Error::Config(format!(
                    "h_max = {h} is not a multiple of the reference step {reference_step}"
                )));
            }
            if config.h_min() < self.resolution(horizon) {
                return Err(Error::Config(format!(
                    "h_min = {} is finer than the path resolution {}",
                    config.h_min(),
                    self.resolution(horizon)
                )));
            }
        }
        Ok(())
    }

    pub fn reference_step(&self, horizon: f64) -> f64 {
        horizon * 2f64.powi(-(self.reference_exponent as i32))
    }

    pub fn resolution(&self, horizon: f64) -> f64 {
        horizon * 2f64.powi(-(self.fine_exponent as i32))
    }

    fn path(&self, problem: &dyn SdeProblem, index: usize) -> Result<WienerPath> {
        generate_path(
            path_seed(self.base_seed, index),
            self.fine_exponent,
            problem.dim_noise(),
            problem.horizon(),
        )
    }
}

/// One row of an error table.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorRow {
    pub scheme: String,
    /// `h_max` for adaptive rows; the step actually used for fixed rows.
    pub h_max: f64,
    pub rms_error: f64,
    pub rms_std_error: f64,
    /// Mean step per path, averaged over paths; equals the step for fixed rows.
    pub h_mean: f64,
    pub cpu_seconds: f64,
    /// Fraction of all steps that used the backstop.
    pub backstop_rate: f64,
    pub divergent_count: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ErrorTable {
    pub rows: Vec<ErrorRow>,
}

impl ErrorTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(ERROR_TABLE_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                r.scheme,
                format_float(r.h_max),
                format_float(r.rms_error),
                format_float(r.rms_std_error),
                format_float(r.h_mean),
                format_float(r.cpu_seconds),
                format_float(r.backstop_rate),
                r.divergent_count
            ));
        }
        out
    }

    pub fn rows_for<'a>(&'a self, scheme: &'a str) -> impl Iterator<Item = &'a ErrorRow> + 'a {
        self.rows.iter().filter(move |r| r.scheme == scheme)
    }

    /// Fitted `log2(rms)` against `log2(h_max)` slope for one scheme.
    pub fn slope(&self, scheme: &str) -> Option<f64> {
        let pts: Vec<(f64, f64)> = self.rows_for(scheme).map(|r| (r.h_max, r.rms_error)).collect();
        fit_log2_slope(&pts)
    }

    /// The same table with every timing set to zero.
    pub fn without_timings(&self) -> ErrorTable {
        let mut t = self.clone();
        for r in &mut t.rows {
            r.cpu_seconds = 0.0;
        }
        t
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub table: ErrorTable,
    /// `(scheme, slope)` in order of first appearance.
    pub slopes: Vec<(String, Option<f64>)>,
}

/// Terminal reference states, one per Monte Carlo sample.
pub fn reference_terminals(problem: &dyn SdeProblem, config: &ExperimentConfig) -> Result<Vec<DVector<f64>>> {
    let h = config.reference_step(problem.horizon());
    let results: Vec<Result<DVector<f64>>> = (0..config.paths)
        .into_par_iter()
        .map(|k| {
            let path = config.path(problem, k)?;
            let s = summarize_fixed(problem, Scheme::Tamed, h, &path)?;
            if s.divergent {
                return Err(Error::Experiment(format!(
                    "reference solution diverged on path {k} (seed {})",
                    path.seed()
                )));
            }
            Ok(s.final_state)
        })
        .collect();
    results.into_iter().collect()
}

/// Raw outcome of one method at one step setting.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodRun {
    /// `||Y_ref(T) - Y(T)||` for non-divergent paths, in seed order.
    pub errors: Vec<f64>,
    pub divergent: usize,
    pub h_mean: f64,
    pub backstop_steps: usize,
    pub total_steps: usize,
    pub seconds: f64,
}

impl MethodRun {
    pub fn rms(&self) -> (f64, f64) {
        if self.errors.is_empty() {
            (f64::NAN, f64::NAN)
        } else {
            rms_with_error(&self.errors)
        }
    }
}

fn summarize(
    problem: &dyn SdeProblem,
    method: Method,
    h: f64,
    rho: f64,
    path: &WienerPath,
) -> Result<PathSummary> {
    match method {
        Method::Adaptive => {
            let config = StrategyConfig::new(h, rho)?;
            summarize_adaptive(problem, &config, path, &AdaptiveOptions::default())
        }
        Method::Fixed(scheme) => summarize_fixed(problem, scheme, h, path),
    }
}

/// Runs `method` (at `h_max` for the adaptive method, at step `h` otherwise)
/// on every sample and compares with `references`.
pub fn run_method(
    problem: &dyn SdeProblem,
    config: &ExperimentConfig,
    method: Method,
    h: f64,
    references: &[DVector<f64>],
) -> Result<MethodRun> {
    let start = Instant::now();
    let results: Vec<Result<PathSummary>> = (0..config.paths)
        .into_par_iter()
        .map(|k| {
            let path = config.path(problem, k)?;
            summarize(problem, method, h, config.rho, &path)
        })
        .collect();
    let seconds = start.elapsed().as_secs_f64();
    let mut run = MethodRun {
        errors: Vec::with_capacity(config.paths),
        divergent: 0,
        h_mean: 0.0,
        backstop_steps: 0,
        total_steps: 0,
        seconds,
    };
    let mut mean_steps = MeanVar::new();
    for (summary, reference) in results.into_iter().zip(references) {
        let s = summary?;
        run.total_steps += s.step_count;
        run.backstop_steps += s.backstop_steps;
        if s.divergent {
            run.divergent += 1;
            continue;
        }
        mean_steps.push(s.mean_step());
        run.errors.push((reference - &s.final_state).norm());
    }
    run.h_mean = if mean_steps.count() > 0 { mean_steps.mean() } else { f64::NAN };
    Ok(run)
}

/// RMS strong error at `T` and its standard error for one method.
pub fn rms_error(
    problem: &dyn SdeProblem,
    config: &ExperimentConfig,
    method: Method,
    h: f64,
) -> Result<(f64, f64)> {
    config.validate(problem.horizon())?;
    let references = reference_terminals(problem, config)?;
    Ok(run_method(problem, config, method, h, &references)?.rms())
}

fn row(method: Method, h: f64, run: &MethodRun) -> ErrorRow {
    let (rms, se) = run.rms();
    let h_mean = match method {
        Method::Adaptive => run.h_mean,
        Method::Fixed(_) => h,
    };
    ErrorRow {
        scheme: method.name().to_string(),
        h_max: h,
        rms_error: rms,
        rms_std_error: se,
        h_mean,
        cpu_seconds: run.seconds,
        backstop_rate: if run.total_steps == 0 {
            0.0
        } else {
            run.backstop_steps as f64 / run.total_steps as f64
        },
        divergent_count: run.divergent,
    }
}

/// Error table over the `h_max` list plus a fitted order per method.
pub fn convergence_table(problem: &dyn SdeProblem, config: &ExperimentConfig) -> Result<ConvergenceReport> {
    if config.h_max.len() < 3 {
        return Err(Error::Config(format!(
            "a convergence table needs at least 3 h_max values, got {}",
            config.h_max.len()
        )));
    }
    config.validate(problem.horizon())?;
    let resolution = config.resolution(problem.horizon());
    let references = reference_terminals(problem, config)?;
    let mut table = ErrorTable::default();
    for &h_max in &config.h_max {
        let mut adaptive_mean = None;
        if config.methods.contains(&Method::Adaptive) {
            let run = run_method(problem, config, Method::Adaptive, h_max, &references)?;
            if run.h_mean.is_finite() {
                adaptive_mean = Some(run.h_mean);
            }
            table.rows.push(row(Method::Adaptive, h_max, &run));
        }
        for &method in config.methods.iter().filter(|m| **m != Method::Adaptive) {
            let h = match adaptive_mean {
                Some(mean) if config.match_h_mean => (mean / resolution).round().max(1.0) * resolution,
                _ => h_max,
            };
            let run = run_method(problem, config, method, h, &references)?;
            table.rows.push(row(method, h, &run));
        }
    }
    let mut slopes = Vec::new();
    for m in &config.methods {
        slopes.push((m.name().to_string(), table.slope(m.name())));
    }
    Ok(ConvergenceReport { table, slopes })
}

/// One point of the efficiency frontier.
#[derive(Debug, Clone, PartialEq)]
pub struct EfficiencyRow {
    pub scheme: String,
    pub h_max: f64,
    pub rms_error: f64,
    pub cpu_seconds: f64,
}

/// `(scheme, rms, seconds)` per method and step setting.
pub fn efficiency_table(problem: &dyn SdeProblem, config: &ExperimentConfig) -> Result<Vec<EfficiencyRow>> {
    let report = convergence_table(problem, config)?;
    Ok(report
        .table
        .rows
        .into_iter()
        .map(|r| EfficiencyRow {
            scheme: r.scheme,
            h_max: r.h_max,
            rms_error: r.rms_error,
            cpu_seconds: r.cpu_seconds,
        })
        .collect())
}

/// Statistics of the `n`-th step across paths.
#[derive(Debug, Clone, PartialEq)]
pub struct StepStat {
    pub index: usize,
    /// Paths that have an `n`-th step.
    pub count: usize,
    pub h_mean: f64,
    pub h_variance: f64,
    pub backstop_count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BackstopPoint {
    pub rho: f64,
    /// Fraction of paths on which any step used the backstop.
    pub prob: f64,
    pub prob_std_error: f64,
    pub triggered_paths: usize,
    pub paths: usize,
    pub step_stats: Vec<StepStat>,
}

/// Settings of the backstop-probability experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct BackstopConfig {
    pub rhos: Vec<f64>,
    pub h_max: f64,
    pub paths: usize,
    pub fine_exponent: u32,
    pub base_seed: u64,
}

impl Default for BackstopConfig {
    fn default() -> Self {
        BackstopConfig {
            rhos: vec![2.0, 3.0, 4.0, 5.0, 6.0],
            h_max: 2f64.powi(-8),
            paths: 100,
            fine_exponent: 16,
            base_seed: DEFAULT_SEED,
        }
    }
}

/// Estimated probability, per `rho`, that a path ever triggers the backstop.
/// All `rho` values share the same Wiener paths.
pub fn backstop_probability(problem: &dyn SdeProblem, config: &BackstopConfig) -> Result<Vec<BackstopPoint>> {
    if config.paths == 0 {
        return Err(Error::Config("paths must be positive".into()));
    }
    let mut out = Vec::with_capacity(config.rhos.len());
    for &rho in &config.rhos {
        let strategy = StrategyConfig::new(config.h_max, rho)?;
        let runs: Vec<Result<(Vec<f64>, Vec<bool>)>> = (0..config.paths)
            .into_par_iter()
            .map(|k| {
                let path = generate_path(
                    path_seed(config.base_seed, k),
                    config.fine_exponent,
                    problem.dim_noise(),
                    problem.horizon(),
                )?;
                let sol = integrate_adaptive(problem, &strategy, &path)?;
                Ok((sol.step_sizes(), sol.backstop_flags()))
            })
            .collect();
        let mut triggered = 0usize;
        let mut per_step: Vec<(MeanVar, usize)> = Vec::new();
        for r in runs {
            let (steps, flags) = r?;
            if flags.iter().any(|&f| f) {
                triggered += 1;
            }
            if per_step.len() < steps.len() {
                per_step.resize(steps.len(), (MeanVar::new(), 0));
            }
            for (n, (h, f)) in steps.iter().zip(&flags).enumerate() {
                per_step[n].0.push(*h);
                per_step[n].1 += usize::from(*f);
            }
        }
        let prob = triggered as f64 / config.paths as f64;
        out.push(BackstopPoint {
            rho,
            prob,
            prob_std_error: binomial_std_error(prob, config.paths),
            triggered_paths: triggered,
            paths: config.paths,
            step_stats: per_step
                .into_iter()
                .enumerate()
                .map(|(index, (mv, b))| StepStat {
                    index,
                    count: mv.count(),
                    h_mean: mv.mean(),
                    h_variance: mv.variance(),
                    backstop_count: b,
                })
                .collect(),
        });
    }
    Ok(out)
}

pub fn backstop_csv(points: &[BackstopPoint]) -> String {
    let mut out = String::from(BACKSTOP_HEADER);
    out.push('\n');
    for p in points {
        out.push_str(&format!(
            "{},{},{}\n",
            format_float(p.rho),
            format_float(p.prob),
            format_float(p.prob_std_error)
        ));
    }
    out
}

pub fn step_stats_csv(points: &[BackstopPoint]) -> String {
    let mut out = String::from(STEP_STATS_HEADER);
    out.push('\n');
    for p in points {
        for s in &p.step_stats {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                format_float(p.rho),
                s.index,
                s.count,
                format_float(s.h_mean),
                format_float(s.h_variance),
                s.backstop_count
            ));
        }
    }
    out
}

/// Outcome of the Levy-area moment check for one order.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentCheck {
    pub order: u32,
    /// Sample mean of `A^b / h^b`.
    pub estimate: f64,
    pub std_error: f64,
    /// `I_b`.
    pub expected: f64,
    /// Sample mean of `|A|^b / h^b`.
    pub abs_estimate: f64,
    /// `Ihat_b`.
    pub abs_bound: f64,
    pub pass: bool,
}

/// Number of standard errors allowed in the moment check.
pub const MOMENT_SIGMAS: f64 = 4.0;

/// Samples the Levy area `A_{12}` over `samples` independent unit windows
/// (each resolved with `2^fine_exponent` fine steps).
pub fn sample_levy_areas(samples: usize, fine_exponent: u32, base_seed: u64) -> Result<Vec<f64>> {
    let results: Vec<Result<f64>> = (0..samples)
        .into_par_iter()
        .map(|k| {
            let path = generate_path(path_seed(base_seed, k), fine_exponent, 2, 1.0)?;
            Ok(path.integrals_over(0, path.num_steps())?.levy[(0, 1)])
        })
        .collect();
    results.into_iter().collect()
}

/// Compares sampled Levy-area moments of orders `1..=max_order` with the
/// analytic constants: `|mean - I_b| <= 4 se`, and for odd `b` also
/// `mean |A|^b <= Ihat_b`.
pub fn levy_moment_check(areas: &[f64], max_order: u32) -> Result<Vec<MomentCheck>> {
    (1..=max_order)
        .map(|b| {
            let constant = moment_constant(b)?;
            let signed: MeanVar = areas.iter().map(|a| a.powi(b as i32)).collect();
            let absolute: MeanVar = areas.iter().map(|a| a.abs().powi(b as i32)).collect();
            let expected = constant.signed_f64();
            let mut pass = (signed.mean() - expected).abs() <= MOMENT_SIGMAS * signed.std_error();
            if b % 2 == 1 {
                pass &= absolute.mean() <= constant.abs_bound;
            }
            Ok(MomentCheck {
                order: b,
                estimate: signed.mean(),
                std_error: signed.std_error(),
                expected,
                abs_estimate: absolute.mean(),
                abs_bound: constant.abs_bound,
                pass,
            })
        })
        .collect()
}

/// `mean over paths of max_n ||Y_n||^p` along adaptive paths.
pub fn adaptive_moment_bound(
    problem: &dyn SdeProblem,
    strategy: &StrategyConfig,
    paths: usize,
    fine_exponent: u32,
    base_seed: u64,
    p: i32,
) -> Result<f64> {
    let results: Vec<Result<f64>> = (0..paths)
        .into_par_iter()
        .map(|k| {
            let path = generate_path(
                path_seed(base_seed, k),
                fine_exponent,
                problem.dim_noise(),
                problem.horizon(),
            )?;
            let s = summarize_adaptive(problem, strategy, &path, &AdaptiveOptions::default())?;
            Ok(s.max_norm.powi(p))
        })
        .collect();
    let mv: MeanVar = results.into_iter().collect::<Result<Vec<_>>>()?.into_iter().collect();
    Ok(mv.mean())
}

/// Whether every interior step of `sol` started inside the path bound.
pub fn interior_steps_bounded(sol: &crate::adaptive::SolutionPath, strategy: &StrategyConfig) -> bool {
    sol.records
        .iter()
        .zip(&sol.states)
        .filter(|(r, _)| r.kind == StepKind::Interior)
        .all(|(_, y)| y.norm() <= strategy.state_bound())
}

/// Looks up a built-in problem by kind; convenience for the CLI.
pub fn builtin(kind: BuiltinKind) -> crate::model::BuiltinProblem {
    crate::model::make_builtin(kind)
}
