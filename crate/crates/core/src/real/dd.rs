use std::fmt;
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Sub, SubAssign};

use rug::Float;
use twofloat::TwoFloat;

use super::{ParseRealError, Real};

/// Bits used when a double-double is routed through MPFR.
const BRIDGE_BITS: u32 = 128;

/// Double-double number (about 31 significant digits).
///
/// Arithmetic is done by `twofloat`; transcendental functions and decimal
/// conversion go through MPFR, since the error-free sum of two doubles is
/// exactly representable there.
#[derive(Clone, Copy, Debug, Default, PartialEq, PartialOrd)]
pub struct DoubleDouble(TwoFloat);

impl DoubleDouble {
    pub fn hi(&self) -> f64 {
        self.0.hi()
    }

    pub fn lo(&self) -> f64 {
        self.0.lo()
    }

    fn to_float(self) -> Float {
        let mut f = Float::with_val(BRIDGE_BITS, self.0.hi());
        f += self.0.lo();
        f
    }

    fn from_float(f: &Float) -> Self {
        let hi = f.to_f64();
        if !hi.is_finite() {
            return DoubleDouble(TwoFloat::from(hi));
        }
        let rest = Float::with_val(BRIDGE_BITS, f - hi);
        DoubleDouble(TwoFloat::new_add(hi, rest.to_f64()))
    }
}

impl From<f64> for DoubleDouble {
    fn from(x: f64) -> Self {
        DoubleDouble(TwoFloat::from(x))
    }
}

impl fmt::Display for DoubleDouble {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_decimal())
    }
}

macro_rules! binop {
    ($tr:ident, $m:ident, $atr:ident, $am:ident, $f:ident) => {
        impl $tr for DoubleDouble {
            type Output = DoubleDouble;
            fn $m(self, rhs: DoubleDouble) -> DoubleDouble {
                DoubleDouble($f(self.0, rhs.0))
            }
        }
        impl<'a> $tr<&'a DoubleDouble> for DoubleDouble {
            type Output = DoubleDouble;
            fn $m(self, rhs: &'a DoubleDouble) -> DoubleDouble {
                DoubleDouble($f(self.0, rhs.0))
            }
        }
        impl $atr for DoubleDouble {
            fn $am(&mut self, rhs: DoubleDouble) {
                self.0 = $f(self.0, rhs.0);
            }
        }
        impl<'a> $atr<&'a DoubleDouble> for DoubleDouble {
            fn $am(&mut self, rhs: &'a DoubleDouble) {
                self.0 = $f(self.0, rhs.0);
            }
        }
    };
}

fn dd_add(x: TwoFloat, y: TwoFloat) -> TwoFloat {
    x + y
}

fn dd_sub(x: TwoFloat, y: TwoFloat) -> TwoFloat {
    x - y
}

/// Exact product of two doubles as (p, e) with p + e = a·b.
#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    #[cfg(target_feature = "fma")]
    let e = a.mul_add(b, -p);
    #[cfg(not(target_feature = "fma"))]
    let e = {
        // Veltkamp splitting; avoids a software fma call
        const SPLIT: f64 = 134_217_729.0;
        let split = |x: f64| {
            let c = SPLIT * x;
            let h = c - (c - x);
            (h, x - h)
        };
        let (ah, al) = split(a);
        let (bh, bl) = split(b);
        ((ah * bh - p) + ah * bl + al * bh) + al * bl
    };
    (p, e)
}

#[inline]
fn dd_mul(x: TwoFloat, y: TwoFloat) -> TwoFloat {
    let (p, e) = two_prod(x.hi(), y.hi());
    let e = e + (x.hi() * y.lo() + x.lo() * y.hi());
    TwoFloat::new_add(p, e)
}

binop!(Add, add, AddAssign, add_assign, dd_add);
binop!(Sub, sub, SubAssign, sub_assign, dd_sub);
binop!(Mul, mul, MulAssign, mul_assign, dd_mul);

// twofloat's own TwoFloat/TwoFloat division drops the low word on targets
// without a fused multiply-add, so quotients are formed here by long division
// with two correction terms.
fn dd_div(x: TwoFloat, y: TwoFloat) -> TwoFloat {
    let q1 = x.hi() / y.hi();
    let r = x - dd_mul(y, TwoFloat::from(q1));
    let q2 = r.hi() / y.hi();
    let r = r - dd_mul(y, TwoFloat::from(q2));
    let q3 = r.hi() / y.hi();
    TwoFloat::new_add(q1, q2) + q3
}

impl Div for DoubleDouble {
    type Output = DoubleDouble;
    fn div(self, rhs: DoubleDouble) -> DoubleDouble {
        DoubleDouble(dd_div(self.0, rhs.0))
    }
}
impl<'a> Div<&'a DoubleDouble> for DoubleDouble {
    type Output = DoubleDouble;
    fn div(self, rhs: &'a DoubleDouble) -> DoubleDouble {
        DoubleDouble(dd_div(self.0, rhs.0))
    }
}
impl DivAssign for DoubleDouble {
    fn div_assign(&mut self, rhs: DoubleDouble) {
        self.0 = dd_div(self.0, rhs.0);
    }
}
impl<'a> DivAssign<&'a DoubleDouble> for DoubleDouble {
    fn div_assign(&mut self, rhs: &'a DoubleDouble) {
        self.0 = dd_div(self.0, rhs.0);
    }
}

impl Neg for DoubleDouble {
    type Output = DoubleDouble;
    fn neg(self) -> DoubleDouble {
        DoubleDouble(-self.0)
    }
}

impl Real for DoubleDouble {
    type Ctx = ();

    fn ctx_for_digits(_digits: u32) {}
    fn ctx(&self) {}
    fn digits(_ctx: &()) -> u32 {
        31
    }

    fn from_int(n: i64, _ctx: &()) -> Self {
        // exact for all i64: split into two doubles
        let hi = n as f64;
        let lo = (n - hi as i64) as f64;
        DoubleDouble(TwoFloat::new_add(hi, lo))
    }

    fn from_f64(x: f64, _ctx: &()) -> Self {
        DoubleDouble::from(x)
    }

    fn parse_decimal(s: &str, _ctx: &()) -> Result<Self, ParseRealError> {
        let parsed = Float::parse(s.trim()).map_err(|_| ParseRealError {
            input: s.to_string(),
        })?;
        Ok(Self::from_float(&Float::with_val(BRIDGE_BITS, parsed)))
    }

    fn to_f64(&self) -> f64 {
        self.0.hi() + self.0.lo()
    }

    fn to_decimal(&self) -> String {
        if !self.0.hi().is_finite() {
            return format!("{}", self.0.hi());
        }
        self.to_float().to_string_radix(10, Some(33))
    }

    fn sqrt(&self) -> Self {
        let x = self.0;
        if x.hi() <= 0.0 {
            return DoubleDouble::from(x.hi().sqrt());
        }
        // one Newton correction of the hardware root
        let s = x.hi().sqrt();
        let r = (x - TwoFloat::new_mul(s, s)) / (2.0 * s);
        DoubleDouble(TwoFloat::from(s) + r)
    }

    fn exp(&self) -> Self {
        Self::from_float(&self.to_float().exp())
    }

    fn ln(&self) -> Self {
        Self::from_float(&self.to_float().ln())
    }

    fn abs(&self) -> Self {
        if self.0.hi() < 0.0 {
            -*self
        } else {
            *self
        }
    }

    fn is_finite(&self) -> bool {
        self.0.hi().is_finite() && self.0.lo().is_finite()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::real::BigReal;

    fn big(x: DoubleDouble) -> Float {
        x.to_float()
    }

    #[test]
    fn sqrt_two_squared() {
        let two = DoubleDouble::from_int(2, &());
        let r = two.sqrt();
        let err = Float::with_val(256, big(r * r) - 2.0).abs();
        assert!(err.to_f64() < 1e-30);
    }

    #[test]
    fn exp_ln_round_trip() {
        let x = DoubleDouble::ratio(7, 3, &());
        let y = x.exp().ln();
        assert!((y - x).abs().to_f64() < 1e-30);
    }

    #[test]
    fn quotients_carry_the_low_word() {
        let ctx = BigReal::ctx_for_digits(60);
        for (p, q) in [(1, 3), (22, 7), (-5, 49), (1_000_003, 977)] {
            let x = DoubleDouble::ratio(p, q, &());
            let exact = BigReal::ratio(p, q, &ctx);
            let got = BigReal::parse_decimal(&x.to_decimal(), &ctx).unwrap();
            let rel = ((got - &exact) / exact).abs().to_f64();
            assert!(rel < 1e-31, "{p}/{q}: {rel}");
        }
    }

    #[test]
    fn products_are_double_double_accurate() {
        let x = DoubleDouble::ratio(1, 3, &()) * DoubleDouble::from_int(3, &());
        assert!((x - DoubleDouble::from_int(1, &())).abs().to_f64() < 1e-31);
    }

    #[test]
    fn large_integers_are_exact() {
        let n = (1i64 << 62) + 1;
        let x = DoubleDouble::from_int(n, &());
        assert_eq!(big(x), Float::with_val(128, n));
    }

    #[test]
    fn parse_carries_extra_digits() {
        let x = DoubleDouble::parse_decimal("0.1234567890123456789012345678901", &()).unwrap();
        let y = DoubleDouble::from_f64(0.1234567890123456789012345678901, &());
        let diff = (x - y).abs().to_f64();
        assert!(diff > 0.0 && diff < 1e-16);
    }
}
