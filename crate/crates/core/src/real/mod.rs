//! Scalar types used by every engine.
//!
//! All numerical code in this crate is generic over [`Real`]. Three tiers are
//! provided:
//!
//! * `f64`: hardware double precision (about 15 digits),
//! * [`DoubleDouble`]: unevaluated sum of two doubles (about 31 digits),
//! * [`BigReal`]: MPFR-backed floating point with a precision chosen at run
//!   time in decimal digits.
//!
//! Values of the arbitrary-precision tier carry their own precision, so
//! constants are created through a context (`Real::Ctx`) rather than from
//! literals. For the two fixed tiers the context is `()`.

mod big;
mod dd;

use std::fmt;
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Sub, SubAssign};

pub use big::{BigReal, Precision};
pub use dd::DoubleDouble;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("cannot parse `{input}` as a real number")]
pub struct ParseRealError {
    pub input: String,
}

pub trait Real:
    Clone
    + fmt::Debug
    + fmt::Display
    + PartialOrd
    + Send
    + Sync
    + 'static
    + Neg<Output = Self>
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + for<'a> Add<&'a Self, Output = Self>
    + for<'a> Sub<&'a Self, Output = Self>
    + for<'a> Mul<&'a Self, Output = Self>
    + for<'a> Div<&'a Self, Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + for<'a> AddAssign<&'a Self>
    + for<'a> SubAssign<&'a Self>
    + for<'a> MulAssign<&'a Self>
    + for<'a> DivAssign<&'a Self>
{
    type Ctx: Clone + fmt::Debug + Send + Sync;

    /// Context able to hold at least `digits` significant decimal digits
    /// (fixed tiers ignore the request).
    fn ctx_for_digits(digits: u32) -> Self::Ctx;
    fn ctx(&self) -> Self::Ctx;
    /// Significant decimal digits carried by values of this context.
    fn digits(ctx: &Self::Ctx) -> u32;

    fn from_int(n: i64, ctx: &Self::Ctx) -> Self;
    fn from_f64(x: f64, ctx: &Self::Ctx) -> Self;
    fn parse_decimal(s: &str, ctx: &Self::Ctx) -> Result<Self, ParseRealError>;

    fn to_f64(&self) -> f64;
    /// Decimal string carrying the full working precision.
    fn to_decimal(&self) -> String;

    fn sqrt(&self) -> Self;
    fn exp(&self) -> Self;
    fn ln(&self) -> Self;
    fn abs(&self) -> Self;
    fn is_finite(&self) -> bool;

    fn zero(ctx: &Self::Ctx) -> Self {
        Self::from_int(0, ctx)
    }

    fn one(ctx: &Self::Ctx) -> Self {
        Self::from_int(1, ctx)
    }

    fn ratio(p: i64, q: i64, ctx: &Self::Ctx) -> Self {
        Self::from_int(p, ctx) / Self::from_int(q, ctx)
    }

    /// `10^e`, computed by repeated multiplication so that it is exact for
    /// non-negative `e` and correctly rounded-ish otherwise.
    fn pow10(e: i32, ctx: &Self::Ctx) -> Self {
        let ten = Self::from_int(10, ctx);
        let mut acc = Self::one(ctx);
        for _ in 0..e.unsigned_abs() {
            acc *= &ten;
        }
        if e < 0 {
            Self::one(ctx) / acc
        } else {
            acc
        }
    }

    /// Integer constant in the same context as `self`.
    fn int(&self, n: i64) -> Self {
        Self::from_int(n, &self.ctx())
    }

    fn mul_int(self, n: i64) -> Self {
        let c = self.int(n);
        self * c
    }

    fn div_int(self, n: i64) -> Self {
        let c = self.int(n);
        self / c
    }

    fn square(&self) -> Self {
        self.clone() * self
    }

    fn powi(&self, n: u32) -> Self {
        let mut acc = self.int(1);
        for _ in 0..n {
            acc *= self;
        }
        acc
    }

    fn is_zero(&self) -> bool {
        *self == self.int(0)
    }

    /// -1, 0 or 1.
    fn sign(&self) -> i8 {
        let z = self.int(0);
        if *self > z {
            1
        } else if *self < z {
            -1
        } else {
            0
        }
    }

    fn max_of(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    fn min_of(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }
}

impl Real for f64 {
    type Ctx = ();

    fn ctx_for_digits(_digits: u32) {}
    fn ctx(&self) {}
    fn digits(_ctx: &()) -> u32 {
        15
    }

    fn from_int(n: i64, _ctx: &()) -> Self {
        n as f64
    }
    fn from_f64(x: f64, _ctx: &()) -> Self {
        x
    }
    fn parse_decimal(s: &str, _ctx: &()) -> Result<Self, ParseRealError> {
        s.trim().parse().map_err(|_| ParseRealError {
            input: s.to_string(),
        })
    }

    fn to_f64(&self) -> f64 {
        *self
    }
    fn to_decimal(&self) -> String {
        // shortest representation that round-trips
        format!("{self:e}")
    }

    fn sqrt(&self) -> Self {
        f64::sqrt(*self)
    }
    fn exp(&self) -> Self {
        f64::exp(*self)
    }
    fn ln(&self) -> Self {
        f64::ln(*self)
    }
    fn abs(&self) -> Self {
        f64::abs(*self)
    }
    fn is_finite(&self) -> bool {
        f64::is_finite(*self)
    }
}

/// Precision tier selected from a requested number of decimal digits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tier {
    Double,
    DoubleDouble,
    Multi(u32),
}

impl Tier {
    pub fn for_digits(digits: u32) -> Self {
        match digits {
            0..=15 => Tier::Double,
            16..=31 => Tier::DoubleDouble,
            d => Tier::Multi(d),
        }
    }
}

/// Something generic over the scalar type, run by [`with_digits`] at the tier
/// matching a requested precision.
pub trait RealTask {
    type Output;
    fn run<R: Real>(self, ctx: R::Ctx) -> Self::Output;
}

pub fn with_digits<T: RealTask>(digits: u32, task: T) -> T::Output {
    match Tier::for_digits(digits) {
        Tier::Double => task.run::<f64>(()),
        Tier::DoubleDouble => task.run::<DoubleDouble>(()),
        Tier::Multi(d) => task.run::<BigReal>(BigReal::ctx_for_digits(d)),
    }
}

/// Serde helpers that write reals as decimal strings.
pub mod decimal {
    use super::Real;
    use serde::Serializer;

    pub fn serialize<R: Real, S: Serializer>(x: &R, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&x.to_decimal())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn third<R: Real>(ctx: &R::Ctx) -> R {
        R::ratio(1, 3, ctx)
    }

    #[test]
    fn tiers_agree_to_their_precision() {
        let big = third::<BigReal>(&BigReal::ctx_for_digits(60));
        let dd = third::<DoubleDouble>(&());
        let f = third::<f64>(&());
        let dd_as_big = BigReal::parse_decimal(&dd.to_decimal(), &big.ctx()).unwrap();
        let err_dd = (dd_as_big - &big).abs().to_f64();
        assert!(err_dd < 1e-31, "{err_dd}");
        assert!((f - 1.0 / 3.0).abs() == 0.0);
    }

    #[test]
    fn pow10_and_sign() {
        let ctx = BigReal::ctx_for_digits(40);
        let x = BigReal::pow10(-20, &ctx);
        assert!((x.to_f64() - 1e-20).abs() < 1e-35);
        assert_eq!(x.sign(), 1);
        assert_eq!((-x).sign(), -1);
        assert_eq!(BigReal::zero(&ctx).sign(), 0);
    }

    #[test]
    fn tier_selection() {
        assert_eq!(Tier::for_digits(15), Tier::Double);
        assert_eq!(Tier::for_digits(30), Tier::DoubleDouble);
        assert_eq!(Tier::for_digits(64), Tier::Multi(64));
    }

    struct Digits;
    impl RealTask for Digits {
        type Output = u32;
        fn run<R: Real>(self, ctx: R::Ctx) -> u32 {
            R::digits(&ctx)
        }
    }

    #[test]
    fn dispatch_by_digits() {
        assert_eq!(with_digits(10, Digits), 15);
        assert_eq!(with_digits(25, Digits), 31);
        assert!(with_digits(64, Digits) >= 64);
    }
}
