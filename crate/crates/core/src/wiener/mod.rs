//! Fine-resolution Wiener paths and the iterated integrals over coarse windows.
//!
//! A path stores every component on a dyadic grid `h_ref = T 2^-L`. Values are
//! held in fixed point: each fine increment is a Gaussian draw rounded to an
//! integer multiple of a quantum `q = 2^(b - 26)`, where `2^b >= 32 sqrt(T)`.
//! Prefix sums of `W` and of the pairwise Ito sums `W_i dW_j - W_j dW_i` are
//! then exact integers, so for any window
//!
//! * `dW` over `[a, c]` equals `dW[a, b] + dW[b, c]` exactly,
//! * `I[i][j] + I[j][i] == dW_i * dW_j` exactly, and `A` is exactly antisymmetric,
//!
//! and a window query costs `O(m^2)` regardless of its length. The quantum is
//! roughly `2^-11` of the fine standard deviation at `L = 20`, `T = 1`.
//! Memory is `m 2^L 8` bytes for the components plus `m(m-1)/2 2^L 16` bytes
//! for the area prefixes.

mod moments;

use std::io::{self, Read, Write};

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

pub use moments::{euler_number, euler_numbers, moment_constant, LevyMoment, MAX_MOMENT_ORDER};

/// Largest supported resolution exponent.
pub const MAX_LEVEL: u32 = 34;

/// Number of significant bits given to one window increment.
const INCREMENT_BITS: i32 = 26;

const DUMP_MAGIC: &[u8; 4] = b"WPTH";
const DUMP_VERSION: u32 = 1;

/// Stream tag offsets; one ChaCha stream per `(seed, purpose, component)`.
const STREAM_BASE: u64 = 0;
const STREAM_REFINE: u64 = 1 << 32;

/// Integer unit of a path with horizon `horizon`.
pub fn quantum_for_horizon(horizon: f64) -> f64 {
    let b = (32.0 * horizon.sqrt()).log2().ceil() as i32;
    2f64.powi(b - INCREMENT_BITS)
}

/// A sampled Brownian path on a dyadic fine grid.
#[derive(Debug, Clone, PartialEq)]
pub struct WienerPath {
    dim_noise: usize,
    level: u32,
    horizon: f64,
    resolution: f64,
    quantum: f64,
    seed: u64,
    /// `W_c(k)` in units of `quantum`, `num_steps + 1` entries per component.
    cumulative: Vec<Vec<i64>>,
    /// Per pair `i < j`: `sum_{l < k} W_i(l) dW_j(l) - W_j(l) dW_i(l)` in units of `quantum^2`.
    area_prefix: Vec<Vec<i128>>,
}

/// Increment, double integrals and Levy areas over one window.
///
/// `iterated[(j, i)]` holds `int int dW_j dW_i` with `j` the inner index, which
/// is the factor multiplying `Dg_i g_j` in the Milstein correction.
#[derive(Debug, Clone, PartialEq)]
pub struct IteratedIntegrals {
    pub h: f64,
    pub dw: DVector<f64>,
    pub iterated: DMatrix<f64>,
    pub levy: DMatrix<f64>,
}

impl IteratedIntegrals {
    /// Builds the integrals from an increment and a Levy-area matrix.
    ///
    /// Uses the same reconstruction as the path queries; identities hold to
    /// rounding only unless the inputs are on a common dyadic grid.
    pub fn from_parts(h: f64, dw: DVector<f64>, levy: DMatrix<f64>) -> Self {
        let m = dw.len();
        let mut iterated = DMatrix::zeros(m, m);
        for i in 0..m {
            iterated[(i, i)] = (dw[i] * dw[i] - h) / 2.0;
            for j in 0..m {
                if i != j {
                    iterated[(i, j)] = dw[i] * dw[j] / 2.0 + levy[(i, j)];
                }
            }
        }
        IteratedIntegrals {
            h,
            dw,
            iterated,
            levy,
        }
    }

    /// Integrals for a step with no noise.
    pub fn deterministic(h: f64, dim_noise: usize) -> Self {
        let mut out = Self::from_parts(
            h,
            DVector::zeros(dim_noise),
            DMatrix::zeros(dim_noise, dim_noise),
        );
        out.iterated.fill(0.0);
        out
    }

    pub fn dim_noise(&self) -> usize {
        self.dw.len()
    }

    /// The same window with the Levy areas replaced by zero; the symmetric part
    /// of `iterated` is kept bit for bit.
    pub fn without_levy_area(&self) -> Self {
        let m = self.dim_noise();
        let mut out = self.clone();
        for i in 0..m {
            for j in 0..m {
                if i != j {
                    out.iterated[(i, j)] = (self.iterated[(i, j)] + self.iterated[(j, i)]) / 2.0;
                }
            }
        }
        out.levy.fill(0.0);
        out
    }

    /// The same window with the diagonal and off-diagonal double integrals
    /// removed; a Milstein map then reduces to Euler-Maruyama.
    pub fn without_double_integrals(&self) -> Self {
        let mut out = self.clone();
        out.iterated.fill(0.0);
        out.levy.fill(0.0);
        out
    }
}

/// Generates a path. `level` is `L` with `h_ref = horizon 2^-L`.
pub fn generate_path(seed: u64, level: u32, dim_noise: usize, horizon: f64) -> Result<WienerPath> {
    WienerPath::generate(seed, level, dim_noise, horizon)
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn check_shape(level: u32, dim_noise: usize, horizon: f64) -> Result<usize> {
    if level < 1 {
        return Err(Error::Usage("resolution exponent must be at least 1".into()));
    }
    if dim_noise < 1 {
        return Err(Error::Usage("noise dimension must be at least 1".into()));
    }
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::Usage(format!("horizon must be positive, got {horizon}")));
    }
    if level > MAX_LEVEL {
        return Err(Error::Resource(format!(
            "resolution exponent {level} exceeds {MAX_LEVEL}; a path needs {} bytes per component",
            8u128 << level
        )));
    }
    Ok(1usize << level)
}

fn try_alloc<T: Clone>(len: usize, fill: T) -> Result<Vec<T>> {
    let mut v = Vec::new();
    v.try_reserve_exact(len).map_err(|_| {
        Error::Resource(format!(
            "cannot allocate {} bytes for a Wiener path; lower the resolution exponent",
            len.saturating_mul(std::mem::size_of::<T>())
        ))
    })?;
    v.resize(len, fill);
    Ok(v)
}

impl WienerPath {
    pub fn generate(seed: u64, level: u32, dim_noise: usize, horizon: f64) -> Result<Self> {
        let n = check_shape(level, dim_noise, horizon)?;
        let resolution = horizon / n as f64;
        let quantum = quantum_for_horizon(horizon);
        let scale = resolution.sqrt() / quantum;
        let mut cumulative = Vec::with_capacity(dim_noise);
        for c in 0..dim_noise {
            let mut rng = stream_rng(seed, STREAM_BASE + c as u64);
            let mut w = try_alloc(n + 1, 0i64)?;
            let mut acc = 0i64;
            for slot in w.iter_mut().skip(1) {
                let z: f64 = StandardNormal.sample(&mut rng);
                acc += (z * scale).round() as i64;
                *slot = acc;
            }
            cumulative.push(w);
        }
        Self::from_cumulative(seed, level, horizon, cumulative)
    }

    fn from_cumulative(seed: u64, level: u32, horizon: f64, cumulative: Vec<Vec<i64>>) -> Result<Self> {
        let dim_noise = cumulative.len();
        let n = 1usize << level;
        let mut area_prefix = Vec::with_capacity(dim_noise * dim_noise.saturating_sub(1) / 2);
        for i in 0..dim_noise {
            for j in (i + 1)..dim_noise {
                let (wi, wj) = (&cumulative[i], &cumulative[j]);
                let mut d = try_alloc(n + 1, 0i128)?;
                let mut acc = 0i128;
                for k in 0..n {
                    let dwi = (wi[k + 1] - wi[k]) as i128;
                    let dwj = (wj[k + 1] - wj[k]) as i128;
                    acc += wi[k] as i128 * dwj - wj[k] as i128 * dwi;
                    d[k + 1] = acc;
                }
                area_prefix.push(d);
            }
        }
        Ok(WienerPath {
            dim_noise,
            level,
            horizon,
            resolution: horizon / n as f64,
            quantum: quantum_for_horizon(horizon),
            seed,
            cumulative,
            area_prefix,
        })
    }

    pub fn dim_noise(&self) -> usize {
        self.dim_noise
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Fine grid spacing `h_ref`.
    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn quantum(&self) -> f64 {
        self.quantum
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn num_steps(&self) -> usize {
        1usize << self.level
    }

    /// Fine increment `k` of component `c`.
    pub fn increment(&self, c: usize, k: usize) -> f64 {
        let w = &self.cumulative[c];
        (w[k + 1] - w[k]) as f64 * self.quantum
    }

    /// `W_c` at fine index `k`.
    pub fn value(&self, c: usize, k: usize) -> f64 {
        self.cumulative[c][k] as f64 * self.quantum
    }

    /// All fine increments of component `c`.
    pub fn increments(&self, c: usize) -> Vec<f64> {
        (0..self.num_steps()).map(|k| self.increment(c, k)).collect()
    }

    fn pair_index(&self, i: usize, j: usize) -> usize {
        // row-major enumeration of i < j
        i * self.dim_noise - i * (i + 1) / 2 + (j - i - 1)
    }

    /// Increment, iterated integrals and Levy areas over fine steps `[start, end)`.
    pub fn integrals_over(&self, start: usize, end: usize) -> Result<IteratedIntegrals> {
        if start >= end || end > self.num_steps() {
            return Err(Error::Usage(format!(
                "window [{start}, {end}) outside path of {} fine steps",
                self.num_steps()
            )));
        }
        let m = self.dim_noise;
        let q = self.quantum;
        let half_q2 = q * q / 2.0;
        let h = (end - start) as f64 * self.resolution;
        let units: Vec<i64> = (0..m)
            .map(|c| self.cumulative[c][end] - self.cumulative[c][start])
            .collect();
        let dw = DVector::from_iterator(m, units.iter().map(|&u| u as f64 * q));
        let mut iterated = DMatrix::zeros(m, m);
        let mut levy = DMatrix::zeros(m, m);
        for i in 0..m {
            iterated[(i, i)] = (dw[i] * dw[i] - h) / 2.0;
            for j in (i + 1)..m {
                let d = &self.area_prefix[self.pair_index(i, j)];
                let wi0 = self.cumulative[i][start] as i128;
                let wj0 = self.cumulative[j][start] as i128;
                let (ui, uj) = (units[i] as i128, units[j] as i128);
                // twice the Levy area, in units of q^2, with W measured from the window start
                let twice_area = d[end] - d[start] - wi0 * uj + wj0 * ui;
                let product = ui * uj;
                levy[(i, j)] = twice_area as f64 * half_q2;
                levy[(j, i)] = -levy[(i, j)];
                iterated[(i, j)] = (product + twice_area) as f64 * half_q2;
                iterated[(j, i)] = (product - twice_area) as f64 * half_q2;
            }
        }
        Ok(IteratedIntegrals {
            h,
            dw,
            iterated,
            levy,
        })
    }

    /// Inserts `extra_levels` rounds of Brownian-bridge midpoints. Every coarse
    /// increment is preserved exactly.
    pub fn refine(&self, extra_levels: u32) -> Result<WienerPath> {
        let new_level = self.level + extra_levels;
        check_shape(new_level, self.dim_noise, self.horizon)?;
        let mut cumulative = Vec::with_capacity(self.dim_noise);
        for c in 0..self.dim_noise {
            let mut incs: Vec<i64> = self.cumulative[c].windows(2).map(|w| w[1] - w[0]).collect();
            let mut spacing = self.resolution;
            for round in 0..extra_levels {
                let stream = STREAM_REFINE + ((self.level + round) as u64) * 1024 + c as u64;
                let mut rng = stream_rng(self.seed, stream);
                let sd = spacing.sqrt() / 2.0 / self.quantum;
                let mut next = try_alloc(incs.len() * 2, 0i64)?;
                for (k, &total) in incs.iter().enumerate() {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    let first = (total as f64 / 2.0 + z * sd).round() as i64;
                    next[2 * k] = first;
                    next[2 * k + 1] = total - first;
                }
                incs = next;
                spacing /= 2.0;
            }
            let mut w = try_alloc(incs.len() + 1, 0i64)?;
            let mut acc = 0i64;
            for (slot, inc) in w.iter_mut().skip(1).zip(&incs) {
                acc += inc;
                *slot = acc;
            }
            cumulative.push(w);
        }
        Self::from_cumulative(self.seed, new_level, self.horizon, cumulative)
    }

    /// Writes the debug dump: magic, version, `m`, `L`, `T`, seed, then the
    /// increments as little-endian `f64`, component-major.
    pub fn write_dump<W: Write>(&self, mut out: W) -> io::Result<()> {
        out.write_all(DUMP_MAGIC)?;
        out.write_all(&DUMP_VERSION.to_le_bytes())?;
        out.write_all(&(self.dim_noise as u32).to_le_bytes())?;
        out.write_all(&self.level.to_le_bytes())?;
        out.write_all(&self.horizon.to_le_bytes())?;
        out.write_all(&self.seed.to_le_bytes())?;
        for c in 0..self.dim_noise {
            for k in 0..self.num_steps() {
                out.write_all(&self.increment(c, k).to_le_bytes())?;
            }
        }
        Ok(())
    }

    /// Reads a dump written by [`WienerPath::write_dump`].
    pub fn read_dump<R: Read>(mut input: R) -> Result<WienerPath> {
        let bad = |e: io::Error| Error::Usage(format!("malformed path dump: {e}"));
        let mut magic = [0u8; 4];
        input.read_exact(&mut magic).map_err(bad)?;
        if &magic != DUMP_MAGIC {
            return Err(Error::Usage("not a path dump (bad magic)".into()));
        }
        let mut b4 = [0u8; 4];
        let mut b8 = [0u8; 8];
        input.read_exact(&mut b4).map_err(bad)?;
        let version = u32::from_le_bytes(b4);
        if version != DUMP_VERSION {
            return Err(Error::Usage(format!("unsupported dump version {version}")));
        }
        input.read_exact(&mut b4).map_err(bad)?;
        let m = u32::from_le_bytes(b4) as usize;
        input.read_exact(&mut b4).map_err(bad)?;
        let level = u32::from_le_bytes(b4);
        input.read_exact(&mut b8).map_err(bad)?;
        let horizon = f64::from_le_bytes(b8);
        input.read_exact(&mut b8).map_err(bad)?;
        let seed = u64::from_le_bytes(b8);
        let n = check_shape(level, m, horizon)?;
        let q = quantum_for_horizon(horizon);
        let mut cumulative = Vec::with_capacity(m);
        for _ in 0..m {
            let mut w = try_alloc(n + 1, 0i64)?;
            let mut acc = 0i64;
            for slot in w.iter_mut().skip(1) {
                input.read_exact(&mut b8).map_err(bad)?;
                let units = f64::from_le_bytes(b8) / q;
                if units.fract() != 0.0 {
                    return Err(Error::Usage("dump increment is off the path quantum".into()));
                }
                acc += units as i64;
                *slot = acc;
            }
            cumulative.push(w);
        }
        Self::from_cumulative(seed, level, horizon, cumulative)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantum_for_unit_horizon() {
        assert_eq!(quantum_for_horizon(1.0), 2f64.powi(-21));
        assert_eq!(quantum_for_horizon(4.0), 2f64.powi(-20));
    }

    #[test]
    fn deterministic_in_seed() {
        let a = generate_path(7, 8, 2, 1.0).unwrap();
        let b = generate_path(7, 8, 2, 1.0).unwrap();
        let c = generate_path(8, 8, 2, 1.0).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.increments(0), c.increments(0));
        assert_ne!(a.increments(0), a.increments(1));
    }

    #[test]
    fn shape_and_resolution() {
        let p = generate_path(1, 10, 2, 1.0).unwrap();
        assert_eq!(p.num_steps(), 1024);
        assert_eq!(p.resolution(), 2f64.powi(-10));
        assert_eq!(p.num_steps() as f64 * p.resolution(), 1.0);
    }

    #[test]
    fn bad_shapes() {
        assert!(matches!(generate_path(1, 0, 1, 1.0), Err(Error::Usage(_))));
        assert!(matches!(generate_path(1, 4, 0, 1.0), Err(Error::Usage(_))));
        assert!(matches!(generate_path(1, 60, 1, 1.0), Err(Error::Resource(_))));
    }

    #[test]
    fn window_bounds() {
        let p = generate_path(3, 6, 2, 1.0).unwrap();
        assert!(matches!(p.integrals_over(5, 5), Err(Error::Usage(_))));
        assert!(matches!(p.integrals_over(0, 65), Err(Error::Usage(_))));
        assert!(p.integrals_over(0, 64).is_ok());
    }

    #[test]
    fn single_fine_step_has_no_area() {
        let p = generate_path(11, 6, 3, 1.0).unwrap();
        for k in 0..p.num_steps() {
            let w = p.integrals_over(k, k + 1).unwrap();
            assert!(w.levy.iter().all(|&a| a == 0.0));
        }
    }

    #[test]
    fn area_matches_direct_left_point_sum() {
        let p = generate_path(5, 8, 2, 1.0).unwrap();
        let (s, e) = (37, 201);
        let w = p.integrals_over(s, e).unwrap();
        let mut direct = 0.0;
        for k in s..e {
            let w0 = p.value(0, k) - p.value(0, s);
            let w1 = p.value(1, k) - p.value(1, s);
            direct += 0.5 * (w0 * p.increment(1, k) - w1 * p.increment(0, k));
        }
        approx::assert_relative_eq!(w.levy[(0, 1)], direct, max_relative = 1e-12);
    }

    #[test]
    fn refinement_preserves_coarse_increments() {
        let p = generate_path(9, 6, 2, 1.0).unwrap();
        let r = p.refine(3).unwrap();
        assert_eq!(r.level(), 9);
        for k in 0..p.num_steps() {
            let coarse = p.integrals_over(k, k + 1).unwrap();
            let fine = r.integrals_over(8 * k, 8 * k + 8).unwrap();
            assert_eq!(coarse.dw, fine.dw);
        }
    }

    #[test]
    fn dump_round_trip() {
        let p = generate_path(21, 7, 2, 1.0).unwrap();
        let mut buf = Vec::new();
        p.write_dump(&mut buf).unwrap();
        assert_eq!(buf.len(), 4 + 4 + 4 + 4 + 8 + 8 + 2 * 128 * 8);
        let back = WienerPath::read_dump(buf.as_slice()).unwrap();
        assert_eq!(back, p);
        buf[0] = b'X';
        assert!(WienerPath::read_dump(buf.as_slice()).is_err());
    }

    #[test]
    fn zeroed_area_keeps_symmetric_part() {
        let p = generate_path(2, 8, 2, 1.0).unwrap();
        let w = p.integrals_over(10, 90).unwrap();
        let z = w.without_levy_area();
        assert_eq!(z.iterated[(0, 1)], z.iterated[(1, 0)]);
        assert_eq!(z.iterated[(0, 1)], w.dw[0] * w.dw[1] / 2.0);
        assert_eq!(z.iterated[(0, 0)], w.iterated[(0, 0)]);
    }
}
