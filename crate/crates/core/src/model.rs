//! SDE problem abstraction and the built-in test problems.
//!
//! A problem describes the Ito system
//!
//! ```text
//! dX = f(X) dt + sum_i g_i(X) dW_i,   X(0) = x0,   t in [0, T]
//! ```
//!
//! Diffusion is exposed column by column (`g_i`) together with the analytic
//! Jacobians `Dg_i`, since every one-step map consumes exactly those.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Seed used for the random state samples of the property checks.
pub const PROPERTY_POINT_SEED: u64 = 0x005e_ed0f_9017;

/// Structural class of the diffusion coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NoiseStructure {
    /// `g` is constant, every `Dg_i` vanishes.
    Additive,
    Diagonal,
    /// `Dg_i g_j = Dg_j g_i` for all `i, j`.
    Commutative,
    General,
}

impl NoiseStructure {
    /// True when the Levy-area contribution of the Milstein correction vanishes.
    pub fn is_commutative(self) -> bool {
        !matches!(self, NoiseStructure::General)
    }
}

/// Coefficients of an Ito SDE. Implementations must be pure.
pub trait SdeProblem: Send + Sync {
    fn dim_state(&self) -> usize;
    fn dim_noise(&self) -> usize;
    fn drift(&self, x: &DVector<f64>) -> DVector<f64>;
    /// `g_i(x)`, the `i`-th column of the diffusion matrix.
    fn diffusion_column(&self, x: &DVector<f64>, i: usize) -> DVector<f64>;
    /// `Dg_i(x)`, a `d x d` matrix.
    fn diffusion_jacobian(&self, x: &DVector<f64>, i: usize) -> DMatrix<f64>;
    fn structure(&self) -> NoiseStructure;
    fn initial_state(&self) -> DVector<f64>;
    fn horizon(&self) -> f64;

    /// Drift Jacobian, only needed by implicit comparator schemes. The default
    /// is a central finite difference.
    fn drift_jacobian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        central_difference(x, 1e-6, |y| self.drift(y))
    }

    /// The `d x m` diffusion matrix assembled from its columns.
    fn diffusion_matrix(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let mut g = DMatrix::zeros(self.dim_state(), self.dim_noise());
        for i in 0..self.dim_noise() {
            g.set_column(i, &self.diffusion_column(x, i));
        }
        g
    }
}

/// Central finite-difference Jacobian of `map` at `x`.
pub fn central_difference<F>(x: &DVector<f64>, step: f64, map: F) -> DMatrix<f64>
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
{
    let d = x.len();
    let rows = map(x).len();
    let mut jac = DMatrix::zeros(rows, d);
    for k in 0..d {
        let mut plus = x.clone();
        let mut minus = x.clone();
        plus[k] += step;
        minus[k] -= step;
        let col = (map(&plus) - map(&minus)) / (2.0 * step);
        jac.set_column(k, &col);
    }
    jac
}

/// Names of the built-in problems. The string forms are CLI identifiers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BuiltinKind {
    ScalarMult,
    ScalarAdd,
    ScalarProbe,
    TwodDiagonal,
    TwodCommutative,
    TwodNoncommutative,
}

impl BuiltinKind {
    pub const ALL: [BuiltinKind; 6] = [
        BuiltinKind::ScalarMult,
        BuiltinKind::ScalarAdd,
        BuiltinKind::ScalarProbe,
        BuiltinKind::TwodDiagonal,
        BuiltinKind::TwodCommutative,
        BuiltinKind::TwodNoncommutative,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BuiltinKind::ScalarMult => "scalar_mult",
            BuiltinKind::ScalarAdd => "scalar_add",
            BuiltinKind::ScalarProbe => "scalar_probe",
            BuiltinKind::TwodDiagonal => "twod_diagonal",
            BuiltinKind::TwodCommutative => "twod_commutative",
            BuiltinKind::TwodNoncommutative => "twod_noncommutative",
        }
    }
}

impl fmt::Display for BuiltinKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BuiltinKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BuiltinKind::ALL
            .iter()
            .copied()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown problem '{s}'")))
    }
}

/// One of the built-in test problems, with tunable named parameters.
///
/// The scalar problems use `f(x) = x - x^3`, `X(0) = 2`; the planar ones use
/// `F(x) = [x1 - 3 x1^3, x2 - 3 x2^3]`, `X(0) = [2, 3]`. All run on `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BuiltinProblem {
    kind: BuiltinKind,
    noise_scale: f64,
    x0: DVector<f64>,
    horizon: f64,
}

/// Builds a built-in problem with default parameters.
pub fn make_builtin(kind: BuiltinKind) -> BuiltinProblem {
    BuiltinProblem::new(kind)
}

/// Builds a built-in problem by its CLI name.
pub fn make_builtin_named(name: &str) -> Result<BuiltinProblem> {
    Ok(make_builtin(name.parse()?))
}

impl BuiltinProblem {
    pub fn new(kind: BuiltinKind) -> Self {
        let x0 = match kind {
            BuiltinKind::ScalarMult | BuiltinKind::ScalarAdd | BuiltinKind::ScalarProbe => {
                DVector::from_element(1, 2.0)
            }
            _ => DVector::from_vec(vec![2.0, 3.0]),
        };
        BuiltinProblem {
            kind,
            noise_scale: 0.2,
            x0,
            horizon: 1.0,
        }
    }

    /// Applies named parameters. Recognised keys: `noise_scale`, `horizon`,
    /// and `x0` / `x0_1`, `x0_2` for the initial state components.
    pub fn with_parameters(mut self, params: &BTreeMap<String, f64>) -> Result<Self> {
        for (key, &value) in params {
            match key.as_str() {
                "noise_scale" => self.noise_scale = value,
                "horizon" => {
                    if !(value > 0.0 && value.is_finite()) {
                        return Err(Error::Config(format!("horizon must be positive, got {value}")));
                    }
                    self.horizon = value
                }
                "x0" | "x0_1" => self.x0[0] = value,
                "x0_2" if self.x0.len() > 1 => self.x0[1] = value,
                other => {
                    return Err(Error::Config(format!(
                        "unknown parameter '{other}' for problem {}",
                        self.kind
                    )))
                }
            }
        }
        Ok(self)
    }

    pub fn kind(&self) -> BuiltinKind {
        self.kind
    }

    pub fn noise_scale(&self) -> f64 {
        self.noise_scale
    }

    fn is_scalar(&self) -> bool {
        matches!(
            self.kind,
            BuiltinKind::ScalarMult | BuiltinKind::ScalarAdd | BuiltinKind::ScalarProbe
        )
    }
}

impl SdeProblem for BuiltinProblem {
    fn dim_state(&self) -> usize {
        if self.is_scalar() {
            1
        } else {
            2
        }
    }

    fn dim_noise(&self) -> usize {
        self.dim_state()
    }

    fn drift(&self, x: &DVector<f64>) -> DVector<f64> {
        if self.is_scalar() {
            x.map(|v| v - v * v * v)
        } else {
            x.map(|v| v - 3.0 * v * v * v)
        }
    }

    fn drift_jacobian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let diag = if self.is_scalar() {
            x.map(|v| 1.0 - 3.0 * v * v)
        } else {
            x.map(|v| 1.0 - 9.0 * v * v)
        };
        DMatrix::from_diagonal(&diag)
    }

    fn diffusion_column(&self, x: &DVector<f64>, i: usize) -> DVector<f64> {
        let s = self.noise_scale;
        match self.kind {
            BuiltinKind::ScalarMult => DVector::from_element(1, s * (1.0 - x[0])),
            BuiltinKind::ScalarAdd => DVector::from_element(1, s),
            BuiltinKind::ScalarProbe => DVector::from_element(1, s * x[0]),
            BuiltinKind::TwodDiagonal => {
                let mut col = DVector::zeros(2);
                col[i] = s * x[i];
                col
            }
            BuiltinKind::TwodCommutative => match i {
                0 => DVector::from_vec(vec![s * x[0], s * x[1]]),
                _ => DVector::from_vec(vec![s * x[1], s * x[0]]),
            },
            BuiltinKind::TwodNoncommutative => match i {
                0 => DVector::from_vec(vec![s * 1.5 * x[0], s * x[1]]),
                _ => DVector::from_vec(vec![s * x[1], s * 1.5 * x[0]]),
            },
        }
    }

    fn diffusion_jacobian(&self, _x: &DVector<f64>, i: usize) -> DMatrix<f64> {
        let s = self.noise_scale;
        match self.kind {
            BuiltinKind::ScalarMult => DMatrix::from_element(1, 1, -s),
            BuiltinKind::ScalarAdd => DMatrix::zeros(1, 1),
            BuiltinKind::ScalarProbe => DMatrix::from_element(1, 1, s),
            BuiltinKind::TwodDiagonal => {
                let mut m = DMatrix::zeros(2, 2);
                m[(i, i)] = s;
                m
            }
            BuiltinKind::TwodCommutative => match i {
                0 => DMatrix::from_row_slice(2, 2, &[s, 0.0, 0.0, s]),
                _ => DMatrix::from_row_slice(2, 2, &[0.0, s, s, 0.0]),
            },
            BuiltinKind::TwodNoncommutative => match i {
                0 => DMatrix::from_row_slice(2, 2, &[1.5 * s, 0.0, 0.0, s]),
                _ => DMatrix::from_row_slice(2, 2, &[0.0, s, 1.5 * s, 0.0]),
            },
        }
    }

    fn structure(&self) -> NoiseStructure {
        match self.kind {
            BuiltinKind::ScalarAdd => NoiseStructure::Additive,
            BuiltinKind::ScalarMult | BuiltinKind::ScalarProbe | BuiltinKind::TwodDiagonal => {
                NoiseStructure::Diagonal
            }
            BuiltinKind::TwodCommutative => NoiseStructure::Commutative,
            BuiltinKind::TwodNoncommutative => NoiseStructure::General,
        }
    }

    fn initial_state(&self) -> DVector<f64> {
        self.x0.clone()
    }

    fn horizon(&self) -> f64 {
        self.horizon
    }
}

/// Result of [`check_jacobian`].
#[derive(Debug, Clone, PartialEq)]
pub struct JacobianReport {
    /// Largest elementwise deviation over all points and columns.
    pub max_deviation: f64,
    /// `(point index, column index, deviation)` per evaluation.
    pub entries: Vec<(usize, usize, f64)>,
}

impl JacobianReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.max_deviation < tol
    }
}

/// Compares every analytic `Dg_i` with a central finite difference of `g_i`.
pub fn check_jacobian<P: SdeProblem + ?Sized>(
    problem: &P,
    points: &[DVector<f64>],
    step: f64,
) -> JacobianReport {
    let mut entries = Vec::with_capacity(points.len() * problem.dim_noise());
    let mut max_deviation = 0.0f64;
    for (p, x) in points.iter().enumerate() {
        for i in 0..problem.dim_noise() {
            let fd = central_difference(x, step, |y| problem.diffusion_column(y, i));
            let dev = (fd - problem.diffusion_jacobian(x, i)).amax();
            max_deviation = max_deviation.max(dev);
            entries.push((p, i, dev));
        }
    }
    JacobianReport {
        max_deviation,
        entries,
    }
}

/// `max_{i,j} || Dg_i g_j - Dg_j g_i ||_inf` at `x`.
pub fn commutator_norm<P: SdeProblem + ?Sized>(problem: &P, x: &DVector<f64>) -> f64 {
    let m = problem.dim_noise();
    let cols: Vec<_> = (0..m).map(|i| problem.diffusion_column(x, i)).collect();
    let jacs: Vec<_> = (0..m).map(|i| problem.diffusion_jacobian(x, i)).collect();
    let mut worst = 0.0f64;
    for i in 0..m {
        for j in (i + 1)..m {
            let diff = &jacs[i] * &cols[j] - &jacs[j] * &cols[i];
            worst = worst.max(diff.amax());
        }
    }
    worst
}

/// Uniform points in `[-radius, radius]^d` from a seeded generator.
pub fn sample_points(dim: usize, count: usize, radius: f64, seed: u64) -> Vec<DVector<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| DVector::from_fn(dim, |_, _| rng.random_range(-radius..=radius)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_mult_drift_at_two() {
        let p = make_builtin(BuiltinKind::ScalarMult);
        assert_eq!(p.drift(&DVector::from_element(1, 2.0))[0], -6.0);
    }

    #[test]
    fn scalar_add_has_zero_jacobian() {
        let p = make_builtin(BuiltinKind::ScalarAdd);
        for x in [-3.0, 0.0, 2.0, 10.0] {
            assert_eq!(p.diffusion_jacobian(&DVector::from_element(1, x), 0)[(0, 0)], 0.0);
        }
    }

    #[test]
    fn noncommutative_products_differ_at_initial_state() {
        // At x = [2, 3]: g_1 = g_2 = 0.2 * [3, 3],
        //   Dg_1 g_2 = 0.04 * [1.5 * 3, 3] = [0.18, 0.12]
        //   Dg_2 g_1 = 0.04 * [3, 1.5 * 3] = [0.12, 0.18]
        let p = make_builtin(BuiltinKind::TwodNoncommutative);
        let x = p.initial_state();
        let a = p.diffusion_jacobian(&x, 0) * p.diffusion_column(&x, 1);
        let b = p.diffusion_jacobian(&x, 1) * p.diffusion_column(&x, 0);
        approx::assert_relative_eq!(a[0], 0.18, epsilon = 1e-14);
        approx::assert_relative_eq!(a[1], 0.12, epsilon = 1e-14);
        approx::assert_relative_eq!(b[0], 0.12, epsilon = 1e-14);
        approx::assert_relative_eq!(b[1], 0.18, epsilon = 1e-14);
        assert!(commutator_norm(&p, &x) > 0.05);
    }

    #[test]
    fn structure_flags() {
        use BuiltinKind::*;
        assert_eq!(make_builtin(TwodDiagonal).structure(), NoiseStructure::Diagonal);
        assert_eq!(make_builtin(TwodCommutative).structure(), NoiseStructure::Commutative);
        assert_eq!(make_builtin(TwodNoncommutative).structure(), NoiseStructure::General);
        assert_eq!(make_builtin(ScalarAdd).structure(), NoiseStructure::Additive);
    }

    #[test]
    fn unknown_name_is_config_error() {
        assert!(matches!(make_builtin_named("scalar_nope"), Err(Error::Config(_))));
        for k in BuiltinKind::ALL {
            assert_eq!(make_builtin_named(k.name()).unwrap().kind(), k);
        }
    }

    #[test]
    fn jacobian_examples() {
        let two = vec![DVector::from_element(1, 2.0)];
        let add = check_jacobian(&make_builtin(BuiltinKind::ScalarAdd), &two, 1e-5);
        assert_eq!(add.max_deviation, 0.0);
        let mult = check_jacobian(&make_builtin(BuiltinKind::ScalarMult), &two, 1e-5);
        assert!(mult.max_deviation < 1e-8, "{}", mult.max_deviation);
        let c = make_builtin(BuiltinKind::TwodCommutative);
        let rep = check_jacobian(&c, &[c.initial_state()], 1e-5);
        assert!(rep.max_deviation < 1e-6);
    }

    #[test]
    fn jacobians_consistent_on_random_points() {
        for kind in BuiltinKind::ALL {
            let p = make_builtin(kind);
            let pts = sample_points(p.dim_state(), 100, 5.0, PROPERTY_POINT_SEED);
            let rep = check_jacobian(&p, &pts, 1e-5);
            assert!(rep.passes(1e-6), "{kind}: {}", rep.max_deviation);
            let drift_fd = pts
                .iter()
                .map(|x| (central_difference(x, 1e-5, |y| p.drift(y)) - p.drift_jacobian(x)).amax())
                .fold(0.0, f64::max);
            assert!(drift_fd < 1e-6, "{kind}: drift jacobian {drift_fd}");
        }
    }

    #[test]
    fn commutativity_flag_soundness() {
        for kind in BuiltinKind::ALL {
            let p = make_builtin(kind);
            let pts = sample_points(p.dim_state(), 100, 5.0, PROPERTY_POINT_SEED);
            let worst = pts.iter().map(|x| commutator_norm(&p, x)).fold(0.0, f64::max);
            if p.structure().is_commutative() {
                assert!(worst <= 1e-14, "{kind}: {worst}");
            } else {
                assert!(commutator_norm(&p, &p.initial_state()) > 1e-3);
            }
        }
    }

    #[test]
    fn parameters_override() {
        let mut params = BTreeMap::new();
        params.insert("noise_scale".to_string(), 0.5);
        params.insert("x0".to_string(), 1.5);
        let p = make_builtin(BuiltinKind::ScalarAdd).with_parameters(&params).unwrap();
        assert_eq!(p.diffusion_column(&p.initial_state(), 0)[0], 0.5);
        assert_eq!(p.initial_state()[0], 1.5);
        params.insert("bogus".to_string(), 1.0);
        assert!(make_builtin(BuiltinKind::ScalarAdd).with_parameters(&params).is_err());
    }
}
