use std::fmt;
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Sub, SubAssign};

use rug::Float;

use super::{ParseRealError, Real};

/// Working precision of a [`BigReal`] in bits.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Precision {
    pub bits: u32,
}

/// Extra bits kept beyond the requested decimal digits.
const GUARD_BITS: u32 = 16;

impl Precision {
    pub fn from_digits(digits: u32) -> Self {
        let bits = (f64::from(digits) * std::f64::consts::LOG2_10).ceil() as u32;
        Precision {
            bits: bits.max(53) + GUARD_BITS,
        }
    }

    pub fn digits(&self) -> u32 {
        (f64::from(self.bits.saturating_sub(GUARD_BITS)) / std::f64::consts::LOG2_10).floor() as u32
    }
}

/// MPFR float with run-time precision. Binary operations produce the larger
/// of the two operand precisions.
#[derive(Clone, Debug, PartialEq, PartialOrd)]
pub struct BigReal(Float);

impl BigReal {
    pub fn from_float(f: Float) -> Self {
        BigReal(f)
    }

    pub fn as_float(&self) -> &Float {
        &self.0
    }
}

impl fmt::Display for BigReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_decimal())
    }
}

macro_rules! binop {
    ($tr:ident, $m:ident, $atr:ident, $am:ident, $op:tt) => {
        impl<'a> $tr<&'a BigReal> for BigReal {
            type Output = BigReal;
            fn $m(self, rhs: &'a BigReal) -> BigReal {
                let prec = self.0.prec().max(rhs.0.prec());
                BigReal(Float::with_val(prec, &self.0 $op &rhs.0))
            }
        }
        impl $tr for BigReal {
            type Output = BigReal;
            fn $m(self, rhs: BigReal) -> BigReal {
                self $op &rhs
            }
        }
        impl<'a> $atr<&'a BigReal> for BigReal {
            fn $am(&mut self, rhs: &'a BigReal) {
                if rhs.0.prec() > self.0.prec() {
                    self.0.set_prec(rhs.0.prec());
                }
                self.0 = Float::with_val(self.0.prec(), &self.0 $op &rhs.0);
            }
        }
        impl $atr for BigReal {
            fn $am(&mut self, rhs: BigReal) {
                $atr::$am(self, &rhs);
            }
        }
    };
}

binop!(Add, add, AddAssign, add_assign, +);
binop!(Sub, sub, SubAssign, sub_assign, -);
binop!(Mul, mul, MulAssign, mul_assign, *);
binop!(Div, div, DivAssign, div_assign, /);

impl Neg for BigReal {
    type Output = BigReal;
    fn neg(self) -> BigReal {
        BigReal(-self.0)
    }
}

impl Real for BigReal {
    type Ctx = Precision;

    fn ctx_for_digits(digits: u32) -> Precision {
        Precision::from_digits(digits)
    }

    fn ctx(&self) -> Precision {
        Precision { bits: self.0.prec() }
    }

    fn digits(ctx: &Precision) -> u32 {
        ctx.digits()
    }

    fn from_int(n: i64, ctx: &Precision) -> Self {
        BigReal(Float::with_val(ctx.bits, n))
    }

    fn from_f64(x: f64, ctx: &Precision) -> Self {
        BigReal(Float::with_val(ctx.bits, x))
    }

    fn parse_decimal(s: &str, ctx: &Precision) -> Result<Self, ParseRealError> {
        let parsed = Float::parse(s.trim()).map_err(|_| ParseRealError {
            input: s.to_string(),
        })?;
        Ok(BigReal(Float::with_val(ctx.bits, parsed)))
    }

    fn to_f64(&self) -> f64 {
        self.0.to_f64()
    }

    fn to_decimal(&self) -> String {
        let digits = self.ctx().digits().max(1) as usize;
        self.0.to_string_radix(10, Some(digits))
    }

    fn sqrt(&self) -> Self {
        BigReal(self.0.clone().sqrt())
    }

    fn exp(&self) -> Self {
        BigReal(self.0.clone().exp())
    }

    fn ln(&self) -> Self {
        BigReal(self.0.clone().ln())
    }

    fn abs(&self) -> Self {
        BigReal(self.0.clone().abs())
    }

    fn is_finite(&self) -> bool {
        self.0.is_finite()
    }

    fn is_zero(&self) -> bool {
        self.0.is_zero()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precision_round_trip() {
        for d in [16, 40, 100, 300] {
            assert!(Precision::from_digits(d).digits() >= d);
        }
    }

    #[test]
    fn mixed_precision_promotes() {
        let lo = BigReal::from_int(1, &Precision { bits: 64 });
        let hi = BigReal::ratio(1, 3, &Precision { bits: 256 });
        assert_eq!((lo.clone() + &hi).ctx().bits, 256);
        let mut acc = lo;
        acc += &hi;
        assert_eq!(acc.ctx().bits, 256);
    }

    #[test]
    fn decimal_string_has_requested_digits() {
        let ctx = BigReal::ctx_for_digits(50);
        let third = BigReal::ratio(1, 3, &ctx);
        let s = third.to_decimal();
        assert!(s.contains(&"3".repeat(45)), "{s}");
        let back = BigReal::parse_decimal(&s, &ctx).unwrap();
        assert!((back - &third).abs().to_f64() < 1e-49);
    }
}
