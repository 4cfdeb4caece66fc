//! One-step maps.
//!
//! Every map takes the current state and the iterated integrals of the step
//! and returns the next state. The Milstein correction is assembled as
//!
//! ```text
//! sum_{i,j} Dg_i(x) g_j(x) I[j][i]
//! ```
//!
//! with `I[j][i] = int int dW_j dW_i` (inner index `j`). Non-finite results are
//! reported as [`Error::Overflow`]; callers decide whether that is fatal.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::SdeProblem;
use crate::wiener::IteratedIntegrals;

/// Projection exponent of the projected Milstein comparator: states are pulled
/// back onto the ball of radius `h^-PMIL_EXPONENT`. The value matches drifts of
/// cubic growth.
pub const PMIL_EXPONENT: f64 = 0.25;

/// Newton settings for the split-step backward comparator.
pub const SSBM_MAX_ITERATIONS: usize = 50;
pub const SSBM_TOLERANCE: f64 = 1e-13;

#[derive(Debug, Clone, Copy)]
pub struct StepInput<'a> {
    pub state: &'a DVector<f64>,
    pub integrals: &'a IteratedIntegrals,
}

impl<'a> StepInput<'a> {
    pub fn new(state: &'a DVector<f64>, integrals: &'a IteratedIntegrals) -> Self {
        StepInput { state, integrals }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutput {
    pub state: DVector<f64>,
    pub used_backstop: bool,
}

/// Fixed-step schemes. The string forms are CLI identifiers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    Milstein,
    Tamed,
    /// Milstein without any double-integral term.
    Euler,
    /// Tamed drift, no double-integral term.
    TamedEuler,
    /// Projected Milstein.
    Pmil,
    /// Split-step backward Milstein.
    Ssbm,
}

impl Scheme {
    pub const ALL: [Scheme; 6] = [
        Scheme::Milstein,
        Scheme::Tamed,
        Scheme::Euler,
        Scheme::TamedEuler,
        Scheme::Pmil,
        Scheme::Ssbm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Milstein => "milstein",
            Scheme::Tamed => "tamed",
            Scheme::Euler => "euler",
            Scheme::TamedEuler => "tamed_euler",
            Scheme::Pmil => "pmil",
            Scheme::Ssbm => "ssbm",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .iter()
            .copied()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown scheme '{s}'")))
    }
}

fn finite_or_overflow(next: DVector<f64>, from: &DVector<f64>) -> Result<DVector<f64>> {
    if next.iter().all(|v| v.is_finite()) {
        Ok(next)
    } else {
        Err(Error::Overflow {
            state: from.clone(),
        })
    }
}

fn check_dims<P: SdeProblem + ?Sized>(problem: &P, input: &StepInput<'_>) -> Result<()> {
    if input.integrals.dim_noise() != problem.dim_noise() || input.state.len() != problem.dim_state() {
        return Err(Error::Usage(format!(
            "step input has state dim {} / noise dim {}, problem expects {} / {}",
            input.state.len(),
            input.integrals.dim_noise(),
            problem.dim_state(),
            problem.dim_noise()
        )));
    }
    Ok(())
}

/// `x + drift_increment + sum_i g_i dW_i [+ sum_{i,j} Dg_i g_j I[j][i]]`,
/// with all coefficients evaluated at `x`.
fn assemble<P: SdeProblem + ?Sized>(
    problem: &P,
    x: &DVector<f64>,
    drift_increment: DVector<f64>,
    integrals: &IteratedIntegrals,
    with_correction: bool,
) -> DVector<f64> {
    let m = problem.dim_noise();
    let cols: Vec<DVector<f64>> = (0..m).map(|i| problem.diffusion_column(x, i)).collect();
    let mut y = x + drift_increment;
    for (i, g) in cols.iter().enumerate() {
        y += g * integrals.dw[i];
    }
    if with_correction {
        y += milstein_correction(problem, x, &cols, &integrals.iterated);
    }
    y
}

/// `sum_i Dg_i(x) (sum_j g_j(x) I[j][i])`.
pub fn milstein_correction<P: SdeProblem + ?Sized>(
    problem: &P,
    x: &DVector<f64>,
    cols: &[DVector<f64>],
    iterated: &DMatrix<f64>,
) -> DVector<f64> {
    let d = problem.dim_state();
    let mut out = DVector::zeros(d);
    for i in 0..cols.len() {
        let mut weighted = DVector::zeros(d);
        for (j, g) in cols.iter().enumerate() {
            weighted += g * iterated[(j, i)];
        }
        out += problem.diffusion_jacobian(x, i) * weighted;
    }
    out
}

/// The explicit Milstein map.
pub fn milstein_step<P: SdeProblem + ?Sized>(problem: &P, input: StepInput<'_>) -> Result<DVector<f64>> {
    check_dims(problem, &input)?;
    let x = input.state;
    let drift = problem.drift(x) * input.integrals.h;
    finite_or_overflow(assemble(problem, x, drift, input.integrals, true), x)
}

/// Euler-Maruyama: the Milstein map without double integrals.
pub fn euler_step<P: SdeProblem + ?Sized>(problem: &P, input: StepInput<'_>) -> Result<DVector<f64>> {
    check_dims(problem, &input)?;
    let x = input.state;
    let drift = problem.drift(x) * input.integrals.h;
    finite_or_overflow(assemble(problem, x, drift, input.integrals, false), x)
}

/// `h f(x) / (1 + h ||f(x)||)`; its norm is below one.
pub fn tamed_drift_increment<P: SdeProblem + ?Sized>(problem: &P, x: &DVector<f64>, h: f64) -> DVector<f64> {
    let f = problem.drift(x);
    let scale = h / (1.0 + h * f.norm());
    f * scale
}

/// Tamed Milstein, including the full double-integral (Levy-area) correction.
pub fn tamed_milstein_step<P: SdeProblem + ?Sized>(problem: &P, input: StepInput<'_>) -> Result<DVector<f64>> {
    check_dims(problem, &input)?;
    let x = input.state;
    let drift = tamed_drift_increment(problem, x, input.integrals.h);
    finite_or_overflow(assemble(problem, x, drift, input.integrals, true), x)
}

pub fn tamed_euler_step<P: SdeProblem + ?Sized>(problem: &P, input: StepInput<'_>) -> Result<DVector<f64>> {
    check_dims(problem, &input)?;
    let x = input.state;
    let drift = tamed_drift_increment(problem, x, input.integrals.h);
    finite_or_overflow(assemble(problem, x, drift, input.integrals, false), x)
}

/// The backstop map used when the strategy asks for `h_min`: tamed Milstein.
pub fn backstop_step<P: SdeProblem + ?Sized>(problem: &P, input: StepInput<'_>) -> Result<DVector<f64>> {
    tamed_milstein_step(problem, input)
}

/// Radial projection onto the ball of radius `h^-PMIL_EXPONENT`.
pub fn pmil_projection(x: &DVector<f64>, h: f64) -> DVector<f64> {
    let radius = h.powf(-PMIL_EXPONENT);
    let norm = x.norm();
    if norm <= radius {
        x.clone()
    } else {
        x * (radius / norm)
    }
}

/// Projected Milstein: project, then take an explicit Milstein step.
pub fn pmil_step<P: SdeProblem + ?Sized>(problem: &P, input: StepInput<'_>) -> Result<DVector<f64>> {
    let projected = pmil_projection(input.state, input.integrals.h);
    milstein_step(problem, StepInput::new(&projected, input.integrals))
}

/// Solves `z = x + h f(z)` by Newton's method. Returns the root and the number
/// of Newton updates taken.
pub fn solve_implicit_drift<P: SdeProblem + ?Sized>(
    problem: &P,
    x: &DVector<f64>,
    h: f64,
) -> Result<(DVector<f64>, usize)> {
    let d = problem.dim_state();
    let mut z = x.clone();
    let mut trace = Vec::new();
    for iteration in 0..=SSBM_MAX_ITERATIONS {
        let residual = &z - x - problem.drift(&z) * h;
        let rnorm = residual.norm();
        trace.push(rnorm);
        if !rnorm.is_finite() {
            break;
        }
        if rnorm <= SSBM_TOLERANCE * (1.0 + z.norm()) {
            return Ok((z, iteration));
        }
        if iteration == SSBM_MAX_ITERATIONS {
            break;
        }
        let jac = DMatrix::identity(d, d) - problem.drift_jacobian(&z) * h;
        match jac.lu().solve(&residual) {
            Some(delta) => z -= delta,
            None => break,
        }
    }
    Err(Error::Solver {
        iterations: trace.len().saturating_sub(1),
        trace,
    })
}

/// Split-step backward Milstein: implicit drift stage, then the explicit
/// diffusion and correction terms evaluated at the stage value.
pub fn ssbm_step<P: SdeProblem + ?Sized>(problem: &P, input: StepInput<'_>) -> Result<DVector<f64>> {
    check_dims(problem, &input)?;
    let (stage, _) = solve_implicit_drift(problem, input.state, input.integrals.h)?;
    let zero = DVector::zeros(problem.dim_state());
    finite_or_overflow(assemble(problem, &stage, zero, input.integrals, true), input.state)
}

/// Dispatches to the map named by `scheme`.
pub fn step<P: SdeProblem + ?Sized>(scheme: Scheme, problem: &P, input: StepInput<'_>) -> Result<DVector<f64>> {
    match scheme {
        Scheme::Milstein => milstein_step(problem, input),
        Scheme::Tamed => tamed_milstein_step(problem, input),
        Scheme::Euler => euler_step(problem, input),
        Scheme::TamedEuler => tamed_euler_step(problem, input),
        Scheme::Pmil => pmil_step(problem, input),
        Scheme::Ssbm => ssbm_step(problem, input),
    }
}

/// Comparator schemes of the fixed-step experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Comparator {
    Tamed,
    Pmil,
    Ssbm,
}

pub fn comparator_step<P: SdeProblem + ?Sized>(
    kind: Comparator,
    problem: &P,
    input: StepInput<'_>,
) -> Result<DVector<f64>> {
    let scheme = match kind {
        Comparator::Tamed => Scheme::Tamed,
        Comparator::Pmil => Scheme::Pmil,
        Comparator::Ssbm => Scheme::Ssbm,
    };
    step(scheme, problem, input)
}
