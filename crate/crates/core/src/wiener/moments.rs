//! Moment constants of the Levy area.
//!
//! The Levy area over a window of length `h` has characteristic function
//! `sech(h lambda / 2)`, so its even moments are `E[A^b] = I_b h^b` with
//! `I_b = (-1)^(b/2) E_b / 2^b`, `E_b` the Euler numbers (Taylor coefficients
//! of `sech`). Odd moments vanish; absolute odd moments are bounded through
//! Cauchy-Schwarz by `sqrt(I_2)` and `sqrt(I_{2b-2} I_2)`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Largest order accepted by [`moment_constant`].
pub const MAX_MOMENT_ORDER: u32 = 32;

/// Euler numbers `E_0, ..., E_n` from the recurrence
/// `sum_{k=0}^{n/2} C(n, 2k) E_{2k} = 0` (n even, n > 0), which is `cosh * sech = 1`.
pub fn euler_numbers(n: usize) -> Vec<BigInt> {
    let mut e = vec![BigInt::zero(); n + 1];
    e[0] = BigInt::one();
    // binomial row C(2k, .) rebuilt per even index
    for even in (2..=n).step_by(2) {
        let mut binom = BigInt::one();
        let mut acc = BigInt::zero();
        for (k, ek) in e.iter().enumerate().take(even) {
            if k % 2 == 0 {
                acc += &binom * ek;
            }
            binom = binom * BigInt::from(even - k) / BigInt::from(k + 1);
        }
        e[even] = -acc;
    }
    e
}

pub fn euler_number(n: usize) -> BigInt {
    euler_numbers(n).pop().unwrap_or_else(BigInt::one)
}

/// Moment constants for one order `b`.
#[derive(Debug, Clone, PartialEq)]
pub struct LevyMoment {
    pub order: u32,
    /// `I_b` exactly: `E[A^b] = I_b h^b`.
    pub signed: BigRational,
    /// `Ihat_b`: `E[|A|^b] <= Ihat_b h^b`.
    pub abs_bound: f64,
}

impl LevyMoment {
    pub fn signed_f64(&self) -> f64 {
        self.signed.to_f64().unwrap_or(f64::NAN)
    }
}

fn signed_constant(b: usize, euler: &[BigInt]) -> BigRational {
    if b % 2 == 1 {
        return BigRational::zero();
    }
    let sign = if (b / 2).is_multiple_of(2) { 1 } else { -1 };
    let numer = &euler[b] * BigInt::from(sign);
    BigRational::new(numer, BigInt::one() << b)
}

/// `(I_b, Ihat_b)` for `1 <= b <= 32`.
pub fn moment_constant(b: u32) -> Result<LevyMoment> {
    if b == 0 || b > MAX_MOMENT_ORDER {
        return Err(Error::Usage(format!(
            "moment order {b} outside supported range 1..={MAX_MOMENT_ORDER}"
        )));
    }
    let b = b as usize;
    let euler = euler_numbers(2 * b);
    let signed = signed_constant(b, &euler);
    let i2 = signed_constant(2, &euler).to_f64().unwrap_or(f64::NAN);
    let abs_bound = match b {
        1 => i2.sqrt(),
        _ if b % 2 == 1 => {
            let higher = signed_constant(2 * b - 2, &euler);
            (higher.abs().to_f64().unwrap_or(f64::INFINITY) * i2).sqrt()
        }
        _ => signed.to_f64().unwrap_or(f64::INFINITY),
    };
    Ok(LevyMoment {
        order: b as u32,
        signed,
        abs_bound,
    })
}
