//! Scalar abstraction shared by the double- and extended-precision paths.
//!
//! The integrator, the collinear central-configuration refinement and the
//! scenario constructors are generic over [`Real`]. `f64` is the default; the
//! 237-bit [`f256`] type is used for runs near exponentially unstable orbits,
//! where double-precision roundoff alone destroys collinearity within a couple
//! of periods.

use std::fmt::Debug;
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Sub, SubAssign};

pub use f256::f256;

pub trait Real:
    Copy
    + Debug
    + PartialOrd
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
{
    /// Exact for every finite `f64`.
    fn from_f64(x: f64) -> Self;
    /// Nearest (or truncated, within one ulp) double.
    fn to_f64(self) -> f64;
    fn sqrt(self) -> Self;
    fn abs(self) -> Self;
    fn powi(self, n: i32) -> Self;
    fn powf(self, e: Self) -> Self;
    fn is_finite(self) -> bool;
    /// Unit roundoff of the representation.
    fn epsilon() -> Self;

    fn zero() -> Self {
        Self::from_f64(0.0)
    }

    fn one() -> Self {
        Self::from_f64(1.0)
    }

    fn from_usize(n: usize) -> Self {
        Self::from_f64(n as f64)
    }

    fn max(self, other: Self) -> Self {
        if other > self { other } else { self }
    }

    fn min(self, other: Self) -> Self {
        if other < self { other } else { self }
    }

    fn inv_sqrt(self) -> Self {
        Self::one() / self.sqrt()
    }

    /// `self^(k/2)` for an integer `k`, using one square root at most.
    fn pow_half(self, k: i32) -> Self {
        if k % 2 == 0 {
            self.powi(k / 2)
        } else if k < 0 {
            self.inv_sqrt().powi(-k)
        } else {
            self.powi((k - 1) / 2) * self.sqrt()
        }
    }
}

impl Real for f64 {
    #[inline]
    fn from_f64(x: f64) -> Self {
        x
    }
    #[inline]
    fn to_f64(self) -> f64 {
        self
    }
    #[inline]
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    #[inline]
    fn abs(self) -> Self {
        f64::abs(self)
    }
    #[inline]
    fn powi(self, n: i32) -> Self {
        f64::powi(self, n)
    }
    #[inline]
    fn powf(self, e: Self) -> Self {
        f64::powf(self, e)
    }
    #[inline]
    fn is_finite(self) -> bool {
        f64::is_finite(self)
    }
    #[inline]
    fn epsilon() -> Self {
        f64::EPSILON
    }
}

// binary256 layout: 1 sign bit, 19 exponent bits, 236 fraction bits.
const F256_EXP_BIAS: i32 = 262_143;
const F256_HI_FRACTION_BITS: u32 = 108;

impl Real for f256 {
    #[inline]
    fn from_f64(x: f64) -> Self {
        f256::from(x)
    }

    fn to_f64(self) -> f64 {
        if self.is_nan() {
            return f64::NAN;
        }
        if self.is_infinite() {
            return if self.is_sign_negative() { f64::NEG_INFINITY } else { f64::INFINITY };
        }
        let (hi, _) = self.to_bits();
        let sign = if hi >> 127 == 1 { -1.0 } else { 1.0 };
        let biased = ((hi >> F256_HI_FRACTION_BITS) & 0x7_FFFF) as i32;
        if biased == 0 {
            // zero or far below the f64 subnormal range
            return 0.0 * sign;
        }
        let frac = hi & ((1u128 << F256_HI_FRACTION_BITS) - 1);
        // top 53 significant bits, rounded half-up on the next bit
        let shift = F256_HI_FRACTION_BITS - 52;
        let mut mant = (frac >> shift) | (1u128 << 52);
        if (frac >> (shift - 1)) & 1 == 1 {
            mant += 1;
        }
        let exp = biased - F256_EXP_BIAS - 52;
        sign * scale_by_pow2(mant as f64, exp)
    }

    #[inline]
    fn sqrt(self) -> Self {
        f256::sqrt(self)
    }
    #[inline]
    fn abs(self) -> Self {
        f256::abs(&self)
    }
    fn powi(self, n: i32) -> Self {
        let mut base = self;
        let mut e = n.unsigned_abs();
        let mut acc = f256::ONE;
        while e > 0 {
            if e & 1 == 1 {
                acc *= base;
            }
            e >>= 1;
            if e > 0 {
                base *= base;
            }
        }
        if n < 0 { f256::ONE / acc } else { acc }
    }

    /// Newton iteration seeded from the double-precision value; each step
    /// doubles the correct bits, so three steps cover the 237-bit mantissa.
    fn inv_sqrt(self) -> Self {
        let seed = 1.0 / self.to_f64().sqrt();
        if !(seed.is_finite() && seed > 0.0) {
            return f256::ONE / f256::sqrt(self);
        }
        let half = f256::from(0.5);
        let three_halves = f256::from(1.5);
        let mut y = f256::from(seed);
        for _ in 0..3 {
            y = y * (three_halves - half * self * y * y);
        }
        y
    }
    #[inline]
    fn powf(self, e: Self) -> Self {
        f256::powf(&self, &e)
    }
    #[inline]
    fn is_finite(self) -> bool {
        f256::is_finite(self)
    }
    #[inline]
    fn epsilon() -> Self {
        f256::EPSILON
    }
}

fn scale_by_pow2(mut x: f64, mut exp: i32) -> f64 {
    while exp > 1000 {
        x *= 2f64.powi(1000);
        exp -= 1000;
    }
    while exp < -1000 {
        x *= 2f64.powi(-1000);
        exp += 1000;
    }
    x * 2f64.powi(exp)
}

/// Converts a slice of doubles into another representation.
pub fn lift<R: Real>(xs: &[f64]) -> Vec<R> {
    xs.iter().map(|&x| R::from_f64(x)).collect()
}
