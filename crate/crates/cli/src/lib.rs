//! Configuration and command dispatch for the `admil` binary.
//!
//! Settings are plain `key = value` pairs. Every key has a default; a config
//! file overrides defaults and command-line flags override the file. The fully
//! resolved settings are written next to every output so a run can be repeated
//! with `--config <command>.config`.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use adaptive_milstein::adaptive::{integrate_adaptive, StrategyConfig};
use adaptive_milstein::harness::{
    backstop_csv, backstop_probability, convergence_table, efficiency_table, levy_moment_check,
    sample_levy_areas, step_stats_csv, BackstopConfig, ExperimentConfig, Method, DEFAULT_SEED,
};
use adaptive_milstein::model::{make_builtin_named, BuiltinProblem, SdeProblem};
use adaptive_milstein::wiener::generate_path;
use adaptive_milstein::{Error, Result};

/// Marker for "use the problem's own value".
pub const PROBLEM_DEFAULT: &str = "default";

/// Every accepted key with its default value.
pub fn default_entries() -> Vec<(&'static str, String)> {
    vec![
        ("problem", "scalar_mult".into()),
        ("noise_scale", PROBLEM_DEFAULT.into()),
        ("x0", PROBLEM_DEFAULT.into()),
        ("x0_2", PROBLEM_DEFAULT.into()),
        ("horizon", PROBLEM_DEFAULT.into()),
        ("methods", "adaptive".into()),
        ("h_max", "2^-12..2^-8".into()),
        ("rho", "16".into()),
        ("paths", "100".into()),
        ("reference_exponent", "16".into()),
        ("fine_exponent", "20".into()),
        ("seed", DEFAULT_SEED.to_string()),
        ("match_h_mean", "true".into()),
        ("rhos", "2,3,4,5,6".into()),
        ("order", "4".into()),
        ("samples", "10000".into()),
        ("moment_exponent", "14".into()),
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Convergence,
    Efficiency,
    BackstopProb,
    SinglePath,
    MomentsCheck,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Convergence => "convergence",
            Command::Efficiency => "efficiency",
            Command::BackstopProb => "backstop-prob",
            Command::SinglePath => "single-path",
            Command::MomentsCheck => "moments-check",
        }
    }

    fn stem(self) -> String {
        self.name().replace('-', "_")
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Resolved settings, kept as the raw strings so they can be echoed verbatim.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            values: default_entries()
                .into_iter()
                .map(|(k, v)| (k.to_string(), v))
                .collect(),
        }
    }
}

/// Splits `key = value` text into pairs. Blank lines and `#` comments are skipped.
pub fn parse_config_text(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected 'key = value', got '{raw}'", n + 1)))?;
        out.push((key.trim().to_string(), value.trim().to_string()));
    }
    Ok(out)
}

impl Settings {
    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    /// Sets one key; unknown keys are rejected.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim().replace('-', "_");
        match self.values.get_mut(&key) {
            Some(slot) => {
                *slot = value.trim().to_string();
                Ok(())
            }
            None => Err(Error::Config(format!("unknown key '{key}'"))),
        }
    }

    /// Applies a `key=value` override as given on the command line.
    pub fn set_pair(&mut self, pair: &str) -> Result<()> {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("expected key=value, got '{pair}'")))?;
        self.set(k, v)
    }

    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (k, v) in parse_config_text(text)? {
            self.set(&k, &v)?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        self.apply_text(&text)
    }

    /// The settings as a re-loadable config file.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.values {
            out.push_str(&format!("{k} = {v}\n"));
        }
        out
    }

    fn raw(&self, key: &str) -> &str {
        self.get(key).unwrap_or_default()
    }

    fn parsed<T: std::str::FromStr>(&self, key: &str) -> Result<T>
    where
        T::Err: fmt::Display,
    {
        self.raw(key)
            .parse()
            .map_err(|e| Error::Config(format!("key '{key}': cannot parse '{}': {e}", self.raw(key))))
    }

    pub fn problem(&self) -> Result<BuiltinProblem> {
        let mut params = BTreeMap::new();
        for key in ["noise_scale", "x0", "x0_2", "horizon"] {
            if self.raw(key) != PROBLEM_DEFAULT {
                params.insert(key.to_string(), self.parsed::<f64>(key)?);
            }
        }
        make_builtin_named(self.raw("problem"))?.with_parameters(&params)
    }

    pub fn h_max(&self) -> Result<Vec<f64>> {
        parse_h_max(self.raw("h_max")).map_err(|e| Error::Config(format!("key 'h_max': {e}")))
    }

    pub fn methods(&self) -> Result<Vec<Method>> {
        self.raw("methods")
            .split(',')
            .map(|s| s.trim().parse::<Method>())
            .collect::<Result<Vec<_>>>()
            .map_err(|e| Error::Config(format!("key 'methods': {e}")))
    }

    pub fn experiment(&self) -> Result<ExperimentConfig> {
        Ok(ExperimentConfig {
            methods: self.methods()?,
            h_max: self.h_max()?,
            rho: self.parsed("rho")?,
            paths: self.parsed("paths")?,
            reference_exponent: self.parsed("reference_exponent")?,
            fine_exponent: self.parsed("fine_exponent")?,
            base_seed: self.parsed("seed")?,
            match_h_mean: self.parsed("match_h_mean")?,
        })
    }

    pub fn backstop(&self) -> Result<BackstopConfig> {
        let rhos = self
            .raw("rhos")
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Config(format!("key 'rhos': {e}")))?;
        let h_max = self.h_max()?;
        Ok(BackstopConfig {
            rhos,
            h_max: largest(&h_max),
            paths: self.parsed("paths")?,
            fine_exponent: self.parsed("fine_exponent")?,
            base_seed: self.parsed("seed")?,
        })
    }
}

fn largest(values: &[f64]) -> f64 {
    values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

fn parse_power(term: &str) -> Result<f64> {
    let term = term.trim();
    if let Some(exp) = term.strip_prefix("2^") {
        let k: i32 = exp
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("bad exponent in '{term}'")))?;
        return Ok(2f64.powi(k));
    }
    term.parse::<f64>()
        .map_err(|_| Error::Config(format!("cannot parse step '{term}'")))
}

fn power_exponent(term: &str) -> Result<i32> {
    term.trim()
        .strip_prefix("2^")
        .and_then(|e| e.trim().parse().ok())
        .ok_or_else(|| Error::Config(format!("range ends must look like 2^k, got '{term}'")))
}

/// Parses `2^-a..2^-b` (every power of two in between), a comma list of
/// `2^k` terms or decimals, or a single value. Results are sorted ascending.
pub fn parse_h_max(text: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for item in text.split(',') {
        if let Some((lo, hi)) = item.split_once("..") {
            let (a, b) = (power_exponent(lo)?, power_exponent(hi)?);
            out.extend((a.min(b)..=a.max(b)).map(|k| 2f64.powi(k)));
        } else {
            out.push(parse_power(item)?);
        }
    }
    if out.iter().any(|h| !(*h > 0.0 && h.is_finite())) {
        return Err(Error::Config(format!("step sizes must be positive: '{text}'")));
    }
    out.sort_by(f64::total_cmp);
    out.dedup();
    Ok(out)
}

/// What a run produced.
#[derive(Debug, Default)]
pub struct RunReport {
    pub files: Vec<PathBuf>,
    /// Lines for standard output.
    pub lines: Vec<String>,
    /// Lines for standard error.
    pub warnings: Vec<String>,
    /// False when a validation command found a failing check.
    pub passed: bool,
}

fn write(report: &mut RunReport, dir: &Path, name: &str, contents: &str) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| Error::Resource(format!("cannot write {}: {e}", path.display())))?;
    report.files.push(path);
    Ok(())
}

/// Runs `command` with `settings`, writing outputs into `out_dir`.
pub fn run(command: Command, settings: &Settings, out_dir: &Path) -> Result<RunReport> {
    fs::create_dir_all(out_dir)
        .map_err(|e| Error::Resource(format!("cannot create {}: {e}", out_dir.display())))?;
    let mut report = RunReport {
        passed: true,
        ..RunReport::default()
    };
    let stem = command.stem();
    write(&mut report, out_dir, &format!("{stem}.config"), &settings.render())?;
    match command {
        Command::Convergence => {
            let problem = settings.problem()?;
            let result = convergence_table(&problem, &settings.experiment()?)?;
            for r in &result.table.rows {
                if r.divergent_count > 0 {
                    report.warnings.push(format!(
                        "warning: {} of the paths diverged for {} at h = {:e}; excluded from rms",
                        r.divergent_count, r.scheme, r.h_max
                    ));
                }
            }
            write(&mut report, out_dir, &format!("{stem}.csv"), &result.table.to_csv())?;
            let mut slopes = String::from("scheme,slope\n");
            for (scheme, slope) in &result.slopes {
                let shown = slope.map_or("absent".to_string(), |s| format!("{s:.16e}"));
                slopes.push_str(&format!("{scheme},{shown}\n"));
                report.lines.push(format!("{scheme}: fitted order {shown}"));
            }
            write(&mut report, out_dir, &format!("{stem}_slopes.csv"), &slopes)?;
        }
        Command::Efficiency => {
            let problem = settings.problem()?;
            let rows = efficiency_table(&problem, &settings.experiment()?)?;
            let mut csv = String::from("scheme,h_max,rms_error,cpu_seconds\n");
            for r in &rows {
                csv.push_str(&format!(
                    "{},{:.16e},{:.16e},{:.16e}\n",
                    r.scheme, r.h_max, r.rms_error, r.cpu_seconds
                ));
                report
                    .lines
                    .push(format!("{} h={:e}: rms {:.3e} in {:.3}s", r.scheme, r.h_max, r.rms_error, r.cpu_seconds));
            }
            write(&mut report, out_dir, &format!("{stem}.csv"), &csv)?;
        }
        Command::BackstopProb => {
            let problem = settings.problem()?;
            let points = backstop_probability(&problem, &settings.backstop()?)?;
            for p in &points {
                report.lines.push(format!(
                    "rho {}: {} of {} paths used the backstop",
                    p.rho, p.triggered_paths, p.paths
                ));
            }
            write(&mut report, out_dir, &format!("{stem}.csv"), &backstop_csv(&points))?;
            write(&mut report, out_dir, &format!("{stem}_steps.csv"), &step_stats_csv(&points))?;
        }
        Command::SinglePath => {
            let problem = settings.problem()?;
            let experiment = settings.experiment()?;
            let strategy = StrategyConfig::new(largest(&experiment.h_max), experiment.rho)?;
            let path = generate_path(
                experiment.base_seed,
                experiment.fine_exponent,
                problem.dim_noise(),
                problem.horizon(),
            )?;
            let sol = integrate_adaptive(&problem, &strategy, &path)?;
            if sol.divergent {
                report.warnings.push("warning: the path diverged; output is partial".into());
            }
            let backstops = sol.backstop_flags().iter().filter(|f| **f).count();
            report.lines.push(format!(
                "{} steps, {backstops} backstop steps, Y(T) = {:?}",
                sol.step_count(),
                sol.final_state().as_slice()
            ));
            write(&mut report, out_dir, &format!("{stem}.csv"), &sol.to_csv())?;
        }
        Command::MomentsCheck => {
            let order: u32 = settings.parsed("order")?;
            let samples: usize = settings.parsed("samples")?;
            let areas = sample_levy_areas(samples, settings.parsed("moment_exponent")?, settings.parsed("seed")?)?;
            let checks = levy_moment_check(&areas, order)?;
            let mut csv = String::from("order,estimate,std_error,expected,abs_estimate,abs_bound,pass\n");
            for c in &checks {
                csv.push_str(&format!(
                    "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{}\n",
                    c.order, c.estimate, c.std_error, c.expected, c.abs_estimate, c.abs_bound, c.pass
                ));
                report.lines.push(format!(
                    "order {}: {} (estimate {:.5} +- {:.5}, expected {:.5}; |A|^b mean {:.5} vs bound {:.5})",
                    c.order,
                    if c.pass { "pass" } else { "FAIL" },
                    c.estimate,
                    c.std_error,
                    c.expected,
                    c.abs_estimate,
                    c.abs_bound
                ));
                report.passed &= c.pass;
            }
            write(&mut report, out_dir, &format!("{stem}.csv"), &csv)?;
        }
    }
    Ok(report)
}
