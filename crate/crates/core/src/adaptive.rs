//! Path-bounded timestep control and the adaptive integration loop.
//!
//! The strategy proposes `h = max(h_min, min(h_max, delta / ||Y_n||))` with
//! `h_min = h_max / rho`. A proposal at or below `h_min` switches the step to
//! the backstop map with step `h_min`. Any step taken strictly between the two
//! bounds therefore started from `||Y_n|| < rho delta / h_max`.
//!
//! Steps are realised on the fine grid of the driving [`WienerPath`]: interior
//! proposals are rounded down to a multiple of `h_ref`, never below the
//! quantised `h_min` (which is rounded up), and the last step is shortened so
//! the mesh ends exactly at `T`.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::model::SdeProblem;
use crate::steppers::{step, Scheme, StepInput};
use crate::wiener::{IteratedIntegrals, WienerPath};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrategyConfig {
    h_max: f64,
    rho: f64,
    delta: f64,
}

impl StrategyConfig {
    /// Strategy with `delta = h_max`.
    pub fn new(h_max: f64, rho: f64) -> Result<Self> {
        if !(h_max > 0.0 && h_max.is_finite()) {
            return Err(Error::Config(format!("h_max must be positive, got {h_max}")));
        }
        if !(rho > 1.0 && rho.is_finite()) {
            return Err(Error::Config(format!("rho must exceed 1, got {rho}")));
        }
        Ok(StrategyConfig {
            h_max,
            rho,
            delta: h_max,
        })
    }

    pub fn with_delta(mut self, delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta <= self.h_max) {
            return Err(Error::Config(format!(
                "delta must lie in (0, h_max = {}], got {delta}",
                self.h_max
            )));
        }
        self.delta = delta;
        Ok(self)
    }

    pub fn h_max(&self) -> f64 {
        self.h_max
    }

    pub fn h_min(&self) -> f64 {
        self.h_max / self.rho
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Bound on `||Y||` before any interior step: `rho delta / h_max`.
    pub fn state_bound(&self) -> f64 {
        self.rho * self.delta / self.h_max
    }

    pub fn validate_for_horizon(&self, horizon: f64) -> Result<()> {
        if self.h_max > horizon {
            return Err(Error::Config(format!(
                "h_max = {} exceeds the horizon {horizon}",
                self.h_max
            )));
        }
        Ok(())
    }
}

/// Which branch of the strategy a proposal fell in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StepKind {
    /// `delta / ||Y|| >= h_max`; clamped high.
    Maximal,
    /// Strictly between the bounds.
    Interior,
    /// `delta / ||Y|| <= h_min`; backstop step.
    Backstop,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Proposal {
    /// Clamped step `max(h_min, min(h_max, raw))`.
    pub h: f64,
    /// Unclamped `delta / ||Y||`; infinite at the origin.
    pub raw: f64,
    pub kind: StepKind,
}

impl Proposal {
    pub fn backstop(&self) -> bool {
        self.kind == StepKind::Backstop
    }
}

pub fn propose_step(config: &StrategyConfig, state: &DVector<f64>) -> Result<Proposal> {
    let norm = state.norm();
    if !norm.is_finite() {
        return Err(Error::Controller(format!("state norm is {norm}")));
    }
    let raw = if norm == 0.0 { f64::INFINITY } else { config.delta / norm };
    let h_min = config.h_min();
    let h_max = config.h_max;
    let kind = if raw <= h_min {
        StepKind::Backstop
    } else if raw >= h_max {
        StepKind::Maximal
    } else {
        StepKind::Interior
    };
    Ok(Proposal {
        h: h_min.max(h_max.min(raw)),
        raw,
        kind,
    })
}

/// Whether the iterated integrals carry their Levy areas.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LevyMode {
    #[default]
    Full,
    /// Levy areas replaced by zero, symmetric parts untouched.
    Zeroed,
}

impl LevyMode {
    fn apply(self, integrals: IteratedIntegrals) -> IteratedIntegrals {
        match self {
            LevyMode::Full => integrals,
            LevyMode::Zeroed => integrals.without_levy_area(),
        }
    }
}

/// Maps used by the adaptive loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AdaptiveOptions {
    pub interior: Scheme,
    pub backstop: Scheme,
    pub levy: LevyMode,
}

impl Default for AdaptiveOptions {
    fn default() -> Self {
        AdaptiveOptions {
            interior: Scheme::Milstein,
            backstop: Scheme::Tamed,
            levy: LevyMode::Full,
        }
    }
}

impl AdaptiveOptions {
    /// Adaptive Euler-Maruyama with tamed Euler backstop.
    pub fn euler() -> Self {
        AdaptiveOptions {
            interior: Scheme::Euler,
            backstop: Scheme::TamedEuler,
            levy: LevyMode::Full,
        }
    }
}

/// One recorded step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub kind: StepKind,
    /// Length in fine-grid units.
    pub units: usize,
    /// Shortened to land on `T`.
    pub terminal_clamp: bool,
}

/// A computed trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionPath {
    /// `t_0 = 0, ..., t_N`.
    pub times: Vec<f64>,
    /// `Y_0, ..., Y_N`.
    pub states: Vec<DVector<f64>>,
    /// Step `n` goes from `times[n]` to `times[n + 1]`.
    pub records: Vec<StepRecord>,
    /// Fine grid spacing the mesh lives on.
    pub resolution: f64,
    /// A step overflowed; the path stops at the last finite state.
    pub divergent: bool,
}

impl SolutionPath {
    pub fn step_count(&self) -> usize {
        self.records.len()
    }

    pub fn step_sizes(&self) -> Vec<f64> {
        self.records
            .iter()
            .map(|r| r.units as f64 * self.resolution)
            .collect()
    }

    pub fn backstop_flags(&self) -> Vec<bool> {
        self.records.iter().map(|r| r.kind == StepKind::Backstop).collect()
    }

    pub fn final_state(&self) -> &DVector<f64> {
        self.states.last().expect("a solution path holds at least the initial state")
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("a solution path holds at least t_0")
    }

    /// `(1 / N) sum_n h_n` for this path.
    pub fn mean_step(&self) -> f64 {
        if self.records.is_empty() {
            0.0
        } else {
            self.final_time() / self.records.len() as f64
        }
    }

    /// CSV rows `t,y1..yd,h,backstop`; the first row is the initial state with
    /// empty step columns.
    pub fn to_csv(&self) -> String {
        let d = self.states.first().map_or(0, |s| s.len());
        let mut out = String::from("t");
        for k in 1..=d {
            out.push_str(&format!(",y{k}"));
        }
        out.push_str(",h,backstop\n");
        let steps = self.step_sizes();
        for (n, (t, y)) in self.times.iter().zip(&self.states).enumerate() {
            out.push_str(&format!("{t:.16e}"));
            for v in y.iter() {
                out.push_str(&format!(",{v:.16e}"));
            }
            if n == 0 {
                out.push_str(",,\n");
            } else {
                let rec = &self.records[n - 1];
                let flag = u8::from(rec.kind == StepKind::Backstop);
                out.push_str(&format!(",{:.16e},{flag}\n", steps[n - 1]));
            }
        }
        out
    }
}

/// Receives the steps of an integration.
trait Recorder {
    fn start(&mut self, state: &DVector<f64>);
    fn push(&mut self, fine_index: usize, record: StepRecord, state: &DVector<f64>);
}

struct FullRecorder {
    path: SolutionPath,
}

impl Recorder for FullRecorder {
    fn start(&mut self, state: &DVector<f64>) {
        self.path.times.push(0.0);
        self.path.states.push(state.clone());
    }

    fn push(&mut self, fine_index: usize, record: StepRecord, state: &DVector<f64>) {
        self.path.times.push(fine_index as f64 * self.path.resolution);
        self.path.states.push(state.clone());
        self.path.records.push(record);
    }
}

/// Terminal information of an integration without the stored trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSummary {
    pub final_state: DVector<f64>,
    pub final_time: f64,
    pub step_count: usize,
    pub backstop_steps: usize,
    /// `max_n ||Y_n||` over the computed states, including `Y_0`.
    pub max_norm: f64,
    pub divergent: bool,
}

impl PathSummary {
    pub fn mean_step(&self) -> f64 {
        if self.step_count == 0 {
            0.0
        } else {
            self.final_time / self.step_count as f64
        }
    }
}

struct SummaryRecorder {
    resolution: f64,
    summary: PathSummary,
}

impl Recorder for SummaryRecorder {
    fn start(&mut self, state: &DVector<f64>) {
        self.summary.final_state = state.clone();
        self.summary.max_norm = state.norm();
    }

    fn push(&mut self, fine_index: usize, record: StepRecord, state: &DVector<f64>) {
        self.summary.final_state.copy_from(state);
        self.summary.final_time = fine_index as f64 * self.resolution;
        self.summary.step_count += 1;
        if record.kind == StepKind::Backstop {
            self.summary.backstop_steps += 1;
        }
        self.summary.max_norm = self.summary.max_norm.max(state.norm());
    }
}

fn check_path<P: SdeProblem + ?Sized>(problem: &P, path: &WienerPath) -> Result<()> {
    if path.dim_noise() != problem.dim_noise() {
        return Err(Error::Usage(format!(
            "path has {} noise components, problem needs {}",
            path.dim_noise(),
            problem.dim_noise()
        )));
    }
    if path.horizon() != problem.horizon() {
        return Err(Error::Usage(format!(
            "path horizon {} differs from problem horizon {}",
            path.horizon(),
            problem.horizon()
        )));
    }
    Ok(())
}

/// `x / h_ref` snapped to the nearest integer when within rounding noise.
fn grid_ratio(x: f64, resolution: f64) -> f64 {
    let r = x / resolution;
    let nearest = r.round();
    if (r - nearest).abs() <= 1e-9 * nearest.max(1.0) {
        nearest
    } else {
        r
    }
}

/// Step bounds in fine units: `(ceil(h_min / h_ref), floor(h_max / h_ref))`.
pub fn quantized_bounds(config: &StrategyConfig, resolution: f64) -> Result<(usize, usize)> {
    let min_units = grid_ratio(config.h_min(), resolution).ceil();
    let max_units = grid_ratio(config.h_max(), resolution).floor();
    if min_units < 1.0 {
        return Err(Error::Config(format!(
            "h_min = {} is finer than the path resolution {resolution}",
            config.h_min()
        )));
    }
    if min_units > max_units {
        return Err(Error::Config(format!(
            "no fine-grid step fits in [h_min, h_max] = [{}, {}] at resolution {resolution}",
            config.h_min(),
            config.h_max()
        )));
    }
    Ok((min_units as usize, max_units as usize))
}

fn run_adaptive<P, R>(
    problem: &P,
    config: &StrategyConfig,
    path: &WienerPath,
    options: &AdaptiveOptions,
    recorder: &mut R,
) -> Result<bool>
where
    P: SdeProblem + ?Sized,
    R: Recorder,
{
    check_path(problem, path)?;
    config.validate_for_horizon(problem.horizon())?;
    let resolution = path.resolution();
    let (min_units, max_units) = quantized_bounds(config, resolution)?;
    let total = path.num_steps();
    let mut y = problem.initial_state();
    recorder.start(&y);
    let mut k = 0usize;
    while k < total {
        let proposal = propose_step(config, &y)?;
        let mut units = match proposal.kind {
            StepKind::Backstop => min_units,
            StepKind::Maximal => max_units,
            StepKind::Interior => {
                let u = grid_ratio(proposal.h, resolution).floor() as usize;
                u.clamp(min_units, max_units)
            }
        };
        let terminal_clamp = k + units > total;
        if terminal_clamp {
            units = total - k;
        }
        let integrals = options.levy.apply(path.integrals_over(k, k + units)?);
        let scheme = if proposal.backstop() {
            options.backstop
        } else {
            options.interior
        };
        match step(scheme, problem, StepInput::new(&y, &integrals)) {
            Ok(next) => y = next,
            Err(Error::Overflow { .. }) => return Ok(true),
            Err(e) => return Err(e),
        }
        k += units;
        recorder.push(
            k,
            StepRecord {
                kind: proposal.kind,
                units,
                terminal_clamp,
            },
            &y,
        );
    }
    Ok(false)
}

fn run_fixed<P, R>(
    problem: &P,
    scheme: Scheme,
    h: f64,
    path: &WienerPath,
    levy: LevyMode,
    recorder: &mut R,
) -> Result<bool>
where
    P: SdeProblem + ?Sized,
    R: Recorder,
{
    check_path(problem, path)?;
    let resolution = path.resolution();
    let ratio = grid_ratio(h, resolution);
    if !(ratio >= 1.0 && ratio.fract() == 0.0) {
        return Err(Error::Usage(format!(
            "fixed step {h} is not a positive multiple of the path resolution {resolution}"
        )));
    }
    let step_units = ratio as usize;
    let total = path.num_steps();
    let mut y = problem.initial_state();
    recorder.start(&y);
    let mut k = 0usize;
    while k < total {
        let terminal_clamp = k + step_units > total;
        let units = if terminal_clamp { total - k } else { step_units };
        let integrals = levy.apply(path.integrals_over(k, k + units)?);
        match step(scheme, problem, StepInput::new(&y, &integrals)) {
            Ok(next) => y = next,
            Err(Error::Overflow { .. }) => return Ok(true),
            Err(e) => return Err(e),
        }
        k += units;
        recorder.push(
            k,
            StepRecord {
                kind: StepKind::Maximal,
                units,
                terminal_clamp,
            },
            &y,
        );
    }
    Ok(false)
}

fn full_recorder(path: &WienerPath) -> FullRecorder {
    FullRecorder {
        path: SolutionPath {
            times: Vec::new(),
            states: Vec::new(),
            records: Vec::new(),
            resolution: path.resolution(),
            divergent: false,
        },
    }
}

fn summary_recorder(path: &WienerPath) -> SummaryRecorder {
    SummaryRecorder {
        resolution: path.resolution(),
        summary: PathSummary {
            final_state: DVector::zeros(0),
            final_time: 0.0,
            step_count: 0,
            backstop_steps: 0,
            max_norm: 0.0,
            divergent: false,
        },
    }
}

/// Adaptive Milstein with tamed Milstein backstop.
pub fn integrate_adaptive<P: SdeProblem + ?Sized>(
    problem: &P,
    config: &StrategyConfig,
    path: &WienerPath,
) -> Result<SolutionPath> {
    integrate_adaptive_with(problem, config, path, &AdaptiveOptions::default())
}

pub fn integrate_adaptive_with<P: SdeProblem + ?Sized>(
    problem: &P,
    config: &StrategyConfig,
    path: &WienerPath,
    options: &AdaptiveOptions,
) -> Result<SolutionPath> {
    let mut rec = full_recorder(path);
    rec.path.divergent = run_adaptive(problem, config, path, options, &mut rec)?;
    Ok(rec.path)
}

/// Adaptive integration keeping only terminal statistics.
pub fn summarize_adaptive<P: SdeProblem + ?Sized>(
    problem: &P,
    config: &StrategyConfig,
    path: &WienerPath,
    options: &AdaptiveOptions,
) -> Result<PathSummary> {
    let mut rec = summary_recorder(path);
    rec.summary.divergent = run_adaptive(problem, config, path, options, &mut rec)?;
    Ok(rec.summary)
}

/// Uniform mesh of step `h` (a multiple of the path resolution). When `h`
/// does not divide `T` the last step is shortened.
pub fn integrate_fixed<P: SdeProblem + ?Sized>(
    problem: &P,
    scheme: Scheme,
    h: f64,
    path: &WienerPath,
) -> Result<SolutionPath> {
    integrate_fixed_with(problem, scheme, h, path, LevyMode::Full)
}

pub fn integrate_fixed_with<P: SdeProblem + ?Sized>(
    problem: &P,
    scheme: Scheme,
    h: f64,
    path: &WienerPath,
    levy: LevyMode,
) -> Result<SolutionPath> {
    let mut rec = full_recorder(path);
    rec.path.divergent = run_fixed(problem, scheme, h, path, levy, &mut rec)?;
    Ok(rec.path)
}

pub fn summarize_fixed<P: SdeProblem + ?Sized>(
    problem: &P,
    scheme: Scheme,
    h: f64,
    path: &WienerPath,
) -> Result<PathSummary> {
    let mut rec = summary_recorder(path);
    rec.summary.divergent = run_fixed(problem, scheme, h, path, LevyMode::Full, &mut rec)?;
    Ok(rec.summary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{make_builtin, BuiltinKind};
    use crate::wiener::generate_path;

    fn two(p: i32) -> f64 {
        2f64.powi(p)
    }

    #[test]
    fn strategy_examples() {
        let c = StrategyConfig::new(two(-8), 16.0).unwrap();
        let zero = propose_step(&c, &DVector::zeros(2)).unwrap();
        assert_eq!((zero.h, zero.kind), (two(-8), StepKind::Maximal));
        let p = propose_step(&c, &DVector::from_element(1, 2.0)).unwrap();
        assert_eq!((p.h, p.kind), (two(-9), StepKind::Interior));
        let b = propose_step(&c, &DVector::from_element(1, 17.0)).unwrap();
        assert_eq!((b.h, b.kind), (c.h_min(), StepKind::Backstop));
        assert!(b.raw < c.h_min());
        let nan = propose_step(&c, &DVector::from_element(1, f64::NAN));
        assert!(matches!(nan, Err(Error::Controller(_))));
    }

    #[test]
    fn proposal_at_exactly_h_min_is_backstop() {
        let c = StrategyConfig::new(two(-8), 2.0).unwrap();
        let p = propose_step(&c, &DVector::from_element(1, 2.0)).unwrap();
        assert_eq!(p.raw, c.h_min());
        assert!(p.backstop());
    }

    #[test]
    fn config_validation() {
        assert!(StrategyConfig::new(0.0, 2.0).is_err());
        assert!(StrategyConfig::new(0.1, 1.0).is_err());
        let c = StrategyConfig::new(0.1, 4.0).unwrap();
        assert!(c.with_delta(0.2).is_err());
        assert_eq!(c.with_delta(0.05).unwrap().state_bound(), 2.0);
        assert!(StrategyConfig::new(2.0, 4.0).unwrap().validate_for_horizon(1.0).is_err());
    }

    #[test]
    fn quantisation_bounds() {
        let c = StrategyConfig::new(two(-8), 6.0).unwrap();
        let (lo, hi) = quantized_bounds(&c, two(-16)).unwrap();
        assert_eq!(hi, 256);
        assert_eq!(lo, (256.0f64 / 6.0).ceil() as usize);
        assert!(lo as f64 * two(-16) >= c.h_min());
        assert!(quantized_bounds(&c, two(-7)).is_err());
    }

    #[test]
    fn small_states_take_full_steps() {
        let p = make_builtin(BuiltinKind::ScalarAdd)
            .with_parameters(&[("x0".to_string(), 0.0), ("noise_scale".to_string(), 0.0)].into_iter().collect())
            .unwrap();
        let path = generate_path(1, 10, 1, 1.0).unwrap();
        let c = StrategyConfig::new(two(-4), 4.0).unwrap();
        let sol = integrate_adaptive(&p, &c, &path).unwrap();
        assert_eq!(sol.step_count(), 16);
        assert!(sol.records.iter().all(|r| r.kind == StepKind::Maximal && r.units == 64));
        assert!(sol.backstop_flags().iter().all(|f| !f));
    }

    #[test]
    fn first_step_from_two_is_half_h_max() {
        let p = make_builtin(BuiltinKind::ScalarMult);
        let path = generate_path(3, 16, 1, 1.0).unwrap();
        let c = StrategyConfig::new(two(-8), 16.0).unwrap();
        let sol = integrate_adaptive(&p, &c, &path).unwrap();
        assert_eq!(sol.step_sizes()[0], two(-9));
        assert_eq!(sol.records[0].kind, StepKind::Interior);
    }

    #[test]
    fn mesh_ends_at_horizon() {
        let p = make_builtin(BuiltinKind::ScalarMult);
        let c = StrategyConfig::new(two(-6), 16.0).unwrap();
        for seed in 0..100 {
            let path = generate_path(seed, 12, 1, 1.0).unwrap();
            let sol = integrate_adaptive(&p, &c, &path).unwrap();
            assert_eq!(sol.final_time(), 1.0);
            assert_eq!(sol.step_sizes().iter().sum::<f64>(), 1.0);
            assert!(sol.step_count() <= (1.0 / c.h_min()).ceil() as usize + 1);
            assert!(sol.times.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn fixed_step_requires_grid_multiple() {
        let p = make_builtin(BuiltinKind::ScalarMult);
        let path = generate_path(3, 8, 1, 1.0).unwrap();
        assert!(integrate_fixed(&p, Scheme::Milstein, 1.5 * two(-8), &path).is_err());
        let sol = integrate_fixed(&p, Scheme::Milstein, 3.0 * two(-8), &path).unwrap();
        assert_eq!(sol.step_count(), 86);
        assert!(sol.records.last().unwrap().terminal_clamp);
        assert_eq!(sol.final_time(), 1.0);
    }

    #[test]
    fn single_step_null_problem() {
        let p = make_builtin(BuiltinKind::ScalarAdd)
            .with_parameters(&[("x0".to_string(), 0.0), ("noise_scale".to_string(), 0.0)].into_iter().collect())
            .unwrap();
        let path = generate_path(3, 4, 1, 1.0).unwrap();
        let sol = integrate_fixed(&p, Scheme::Milstein, 1.0, &path).unwrap();
        assert_eq!(sol.step_count(), 1);
        assert_eq!(sol.final_state(), &p.initial_state());
    }

    #[test]
    fn mismatched_path_rejected() {
        let p = make_builtin(BuiltinKind::TwodNoncommutative);
        let path = generate_path(3, 8, 1, 1.0).unwrap();
        let c = StrategyConfig::new(two(-4), 4.0).unwrap();
        assert!(matches!(integrate_adaptive(&p, &c, &path), Err(Error::Usage(_))));
    }

    #[test]
    fn divergence_is_recorded_not_fatal() {
        // explicit Milstein at a coarse fixed step blows up on the cubic drift
        let p = make_builtin(BuiltinKind::ScalarMult)
            .with_parameters(&[("x0".to_string(), 20.0)].into_iter().collect())
            .unwrap();
        let path = generate_path(3, 8, 1, 1.0).unwrap();
        let sol = integrate_fixed(&p, Scheme::Milstein, two(-4), &path).unwrap();
        assert!(sol.divergent);
        assert!(sol.final_state().iter().all(|v| v.is_finite()));
        let tamed = integrate_fixed(&p, Scheme::Tamed, two(-4), &path).unwrap();
        assert!(!tamed.divergent);
    }

    #[test]
    fn summary_matches_full_path() {
        let p = make_builtin(BuiltinKind::TwodNoncommutative);
        let path = generate_path(8, 12, 2, 1.0).unwrap();
        let c = StrategyConfig::new(two(-5), 4.0).unwrap();
        let full = integrate_adaptive(&p, &c, &path).unwrap();
        let sum = summarize_adaptive(&p, &c, &path, &AdaptiveOptions::default()).unwrap();
        assert_eq!(&sum.final_state, full.final_state());
        assert_eq!(sum.step_count, full.step_count());
        assert_eq!(sum.backstop_steps, full.backstop_flags().iter().filter(|&&b| b).count());
        assert_eq!(sum.mean_step(), full.mean_step());
    }

    #[test]
    fn csv_layout() {
        let p = make_builtin(BuiltinKind::TwodDiagonal);
        let path = generate_path(8, 8, 2, 1.0).unwrap();
        let sol = integrate_fixed(&p, Scheme::Tamed, two(-2), &path).unwrap();
        let csv = sol.to_csv();
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines[0], "t,y1,y2,h,backstop");
        assert_eq!(lines.len(), 6);
        assert!(lines[1].ends_with(",,"));
        assert!(lines[5].starts_with("1.0000000000000000e0,"));
    }
}
