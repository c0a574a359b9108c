//! Local power-series solutions of linear second-order ODEs with polynomial
//! coefficients, p₂(x)·y″ + p₁(x)·y′ + p₀(x)·y = 0.
//!
//! Series are expanded in t = x − c. At a regular singular point (p₂(c) = 0)
//! a Frobenius solution t^r·Σ aₙtⁿ with integer exponent r is generated from
//! a₀ = 1; at an ordinary point the two initial coefficients are supplied.
//! With coefficients of degree ≤ 3 the recurrences have at most four terms.

use serde::Serialize;

use crate::real::Real;

#[derive(Debug, Clone, PartialEq, thiserror::Error, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SeriesError {
    #[error("zero pivot in the recurrence at index {index}")]
    ZeroPivot { index: usize },
    #[error("truncation order {n} too small")]
    Truncation { n: usize },
    #[error("center is a singular point; use a Frobenius expansion")]
    SingularCenter,
    #[error("center is an ordinary point; supply two initial coefficients")]
    OrdinaryCenter,
}

/// Polynomial with coefficients in ascending powers.
pub type Poly<R> = Vec<R>;

pub fn poly_eval<R: Real>(p: &[R], x: &R) -> R {
    let mut acc = x.int(0);
    for c in p.iter().rev() {
        acc = acc * x + c;
    }
    acc
}

/// Coefficients of p(c + t) in powers of t.
pub fn poly_shift<R: Real>(p: &[R], c: &R) -> Poly<R> {
    let mut q: Vec<R> = p.to_vec();
    let n = q.len();
    // repeated synthetic division by (x − c)
    for i in 0..n {
        for j in (i..n - 1).rev() {
            let add = q[j + 1].clone() * c;
            q[j] += add;
        }
    }
    q
}

fn coeff<R: Real>(p: &[R], k: usize, zero: &R) -> R {
    p.get(k).cloned().unwrap_or_else(|| zero.clone())
}

#[derive(Debug, Clone)]
pub struct PolyOde<R> {
    pub p2: Poly<R>,
    pub p1: Poly<R>,
    pub p0: Poly<R>,
}

impl<R: Real> PolyOde<R> {
    pub fn shifted(&self, c: &R) -> PolyOde<R> {
        PolyOde {
            p2: poly_shift(&self.p2, c),
            p1: poly_shift(&self.p1, c),
            p0: poly_shift(&self.p0, c),
        }
    }

    fn degree(&self) -> usize {
        self.p2.len().max(self.p1.len()).max(self.p0.len())
    }
}

/// Sum of all contributions to the coefficient of t^(m+r) in the residual of
/// t^r·Σ aⱼtʲ, restricted to indices j < `limit`. The ODE must already be
/// shifted to the expansion center.
fn power_coefficient<R: Real>(ode: &PolyOde<R>, r: u32, a: &[R], m: i64, limit: usize) -> R {
    let zero = a[0].int(0);
    let mut acc = zero.clone();
    let r = r as i64;
    for k in 0..ode.degree() {
        let k_i = k as i64;
        let j2 = m - k_i + 2;
        if j2 >= 0 && (j2 as usize) < limit && k < ode.p2.len() {
            let e = j2 + r;
            if e * (e - 1) != 0 {
                acc += coeff(&ode.p2, k, &zero).mul_int(e * (e - 1)) * &a[j2 as usize];
            }
        }
        let j1 = m - k_i + 1;
        if j1 >= 0 && (j1 as usize) < limit && k < ode.p1.len() {
            let e = j1 + r;
            if e != 0 {
                acc += coeff(&ode.p1, k, &zero).mul_int(e) * &a[j1 as usize];
            }
        }
        let j0 = m - k_i;
        if j0 >= 0 && (j0 as usize) < limit && k < ode.p0.len() {
            acc += coeff(&ode.p0, k, &zero) * &a[j0 as usize];
        }
    }
    acc
}

/// Coefficient multiplying aₙ in the singular-point recurrence,
/// (n+r)·(α₁(n+r−1) + β₀).
pub fn frobenius_pivot<R: Real>(ode: &PolyOde<R>, r: u32, n: usize) -> R {
    let e = n as i64 + r as i64;
    let zero = ode.p1[0].int(0);
    (coeff(&ode.p2, 1, &zero).mul_int(e - 1) + coeff(&ode.p1, 0, &zero)).mul_int(e)
}

/// Outcome of running the index-r recurrence up to a vanishing pivot.
#[derive(Debug, Clone)]
pub enum Frobenius<R> {
    /// All coefficients a₀..=a_N.
    Complete(Vec<R>),
    /// The pivot vanished at `index`; `rhs` is what would have had to be
    /// divided by it. Zero `rhs` means the index-r solution is free of
    /// logarithms and a_index may be chosen freely.
    Resonant { index: usize, rhs: R, scale: R, partial: Vec<R> },
}

/// Frobenius coefficients with exponent `r` about a regular singular point
/// (the ODE already shifted there), normalized to a₀ = 1. Pivots with
/// magnitude at most `pivot_tol` are treated as zero.
pub fn frobenius<R: Real>(
    ode: &PolyOde<R>,
    r: u32,
    n: usize,
    pivot_tol: &R,
    ctx: &R::Ctx,
) -> Result<Frobenius<R>, SeriesError> {
    if !ode.p2.first().map_or(true, |c| c.is_zero()) {
        return Err(SeriesError::OrdinaryCenter);
    }
    let mut a = Vec::with_capacity(n + 1);
    a.push(R::one(ctx));
    for i in 1..=n {
        let rhs = power_coefficient(ode, r, &a, i as i64 - 1, i);
        let pivot = frobenius_pivot(ode, r, i);
        if pivot.abs() <= *pivot_tol {
            let scale = magnitude_scale(ode, r, &a, i as i64 - 1, i);
            return Ok(Frobenius::Resonant {
                index: i,
                rhs,
                scale,
                partial: a,
            });
        }
        a.push(-(rhs / pivot));
    }
    Ok(Frobenius::Complete(a))
}

/// Same sum as `power_coefficient` with every contribution replaced by its
/// absolute value; sets the scale against which a cancellation is judged.
fn magnitude_scale<R: Real>(ode: &PolyOde<R>, r: u32, a: &[R], m: i64, limit: usize) -> R {
    let abs_ode = PolyOde {
        p2: ode.p2.iter().map(|c| c.abs()).collect(),
        p1: ode.p1.iter().map(|c| c.abs()).collect(),
        p0: ode.p0.iter().map(|c| c.abs()).collect(),
    };
    let abs_a: Vec<R> = a.iter().map(|c| c.abs()).collect();
    // signs of the integer factors do not matter for a scale estimate
    power_coefficient(&abs_ode, r, &abs_a, m, limit).abs()
}

/// Taylor coefficients about an ordinary point (ODE already shifted there)
/// with a₀ = y(c) and a₁ = y′(c).
pub fn taylor<R: Real>(ode: &PolyOde<R>, y: R, dy: R, n: usize) -> Result<Vec<R>, SeriesError> {
    let alpha0 = ode.p2.first().cloned().ok_or(SeriesError::SingularCenter)?;
    if alpha0.is_zero() {
        return Err(SeriesError::SingularCenter);
    }
    if n < 2 {
        return Err(SeriesError::Truncation { n });
    }
    let mut a = Vec::with_capacity(n + 1);
    a.push(y);
    a.push(dy);
    for i in 2..=n {
        let rhs = power_coefficient(ode, 0, &a, i as i64 - 2, i);
        let pivot = alpha0.clone().mul_int((i * (i - 1)) as i64);
        a.push(-(rhs / pivot));
    }
    Ok(a)
}

/// Residual coefficients of the truncated series t^r·Σ aⱼtʲ: entry k is
/// the coefficient of t^(k − 2 + r) for k = 0..=upto+2 (powers below the
/// lowest possible one are included and vanish).
pub fn residual_coefficients<R: Real>(ode: &PolyOde<R>, r: u32, a: &[R], upto: i64) -> Vec<R> {
    (-2..=upto)
        .map(|m| power_coefficient(ode, r, a, m, a.len()))
        .collect()
}

/// A truncated local solution t^r·Σ aₙtⁿ, t = x − center.
#[derive(Debug, Clone, Serialize)]
pub struct LocalSeries<R: Real> {
    #[serde(with = "crate::real::decimal")]
    pub center: R,
    pub exponent: u32,
    #[serde(serialize_with = "serialize_coeffs")]
    pub coeffs: Vec<R>,
}

fn serialize_coeffs<R: Real, S: serde::Serializer>(c: &[R], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(c.iter().map(|x| x.to_decimal()))
}

/// Value and derivative of a truncated series, with a flag raised when the
/// last tenth of the terms is not decreasing (evaluation point outside the
/// convergence disk, or too few terms).
#[derive(Debug, Clone)]
pub struct SeriesValue<R> {
    pub y: R,
    pub dy: R,
    pub diverging: bool,
}

impl<R: Real> LocalSeries<R> {
    pub fn truncation(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn eval(&self, x: &R) -> SeriesValue<R> {
        let t = x.clone() - &self.center;
        let zero = t.int(0);
        let mut s = zero.clone();
        let mut ds = zero.clone();
        for (n, c) in self.coeffs.iter().enumerate().rev() {
            s = s * &t + c;
            if n > 0 {
                ds = ds * &t + c.clone().mul_int(n as i64);
            }
        }
        let (y, dy) = if self.exponent == 0 {
            (s, ds)
        } else {
            let r = self.exponent;
            let tr = t.powi(r);
            let tr1 = t.powi(r - 1);
            (tr.clone() * &s, tr1.mul_int(r as i64) * &s + tr * &ds)
        };
        SeriesValue {
            y,
            dy,
            diverging: self.tail_not_decreasing(&t),
        }
    }

    fn tail_not_decreasing(&self, t: &R) -> bool {
        let n = self.coeffs.len();
        let window = (n / 10).max(2);
        if n < window + 1 {
            return false;
        }
        let at = t.abs();
        let terms: Vec<f64> = (n - window..n)
            .map(|k| {
                let c = self.coeffs[k].abs().to_f64();
                if c == 0.0 {
                    f64::NEG_INFINITY
                } else {
                    c.ln() + k as f64 * at.to_f64().ln()
                }
            })
            .collect();
        let all_zero = terms.iter().all(|v| *v == f64::NEG_INFINITY);
        !all_zero && terms.windows(2).all(|w| w[1] >= w[0])
    }
}

/// Continues a solution known at `from` (value, derivative) to `to` through
/// ordinary points, each step staying inside `fraction` of the distance to
/// the nearest of `singular` points. Returns (y, y′) at `to` and whether any
/// step reported divergence.
pub fn continue_solution<R: Real>(
    ode: &PolyOde<R>,
    singular: &[R],
    from: &R,
    value: (R, R),
    to: &R,
    n: usize,
    fraction: &R,
) -> Result<(R, R, bool), SeriesError> {
    let mut x = from.clone();
    let (mut y, mut dy) = value;
    let mut diverging = false;
    let dir = (to.clone() - from).sign();
    while (to.clone() - &x).sign() == dir && !(to.clone() - &x).is_zero() {
        let radius = singular
            .iter()
            .map(|s| (s.clone() - &x).abs())
            .reduce(|a, b| a.min_of(b))
            .expect("at least one singular point");
        let max_step = radius * fraction;
        let remaining = (to.clone() - &x).abs();
        let step = remaining.clone().min_of(max_step);
        let next = if dir > 0 {
            x.clone() + &step
        } else {
            x.clone() - &step
        };
        let local = ode.shifted(&x);
        let coeffs = taylor(&local, y, dy, n)?;
        let series = LocalSeries {
            center: x.clone(),
            exponent: 0,
            coeffs,
        };
        let v = series.eval(&next);
        diverging |= v.diverging;
        y = v.y;
        dy = v.dy;
        x = if step == remaining { to.clone() } else { next };
    }
    Ok((y, dy, diverging))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::real::BigReal;

    fn ints<R: Real>(v: &[i64], ctx: &R::Ctx) -> Vec<R> {
        v.iter().map(|&n| R::from_int(n, ctx)).collect()
    }

    #[test]
    fn shift_matches_evaluation() {
        let p: Vec<f64> = vec![1.0, -2.0, 0.5, 3.0];
        let q = poly_shift(&p, &0.75);
        for t in [-1.0, 0.0, 0.3, 2.0] {
            assert!((poly_eval(&q, &t) - poly_eval(&p, &(0.75 + t))).abs() < 1e-12);
        }
    }

    // Airy equation y'' − x·y = 0 about 0: a_{n+2} = a_{n−1}/((n+2)(n+1)).
    #[test]
    fn taylor_reproduces_airy_recurrence() {
        let ode = PolyOde {
            p2: vec![1.0],
            p1: vec![0.0],
            p0: vec![0.0, -1.0],
        };
        let a = taylor(&ode, 1.0, 0.0, 12).unwrap();
        assert_eq!(a[0], 1.0);
        assert_eq!(a[1], 0.0);
        assert_eq!(a[2], 0.0);
        assert!((a[3] - 1.0 / 6.0).abs() < 1e-16);
        assert!((a[6] - 1.0 / 180.0).abs() < 1e-16);
        assert_eq!(a[4], 0.0);
    }

    // x(1−x)y'' + (c − (a+b+1)x)y' − ab·y = 0 is Gauss' equation; its
    // regular solution at 0 has aₙ₊₁/aₙ = (a+n)(b+n)/((n+1)(c+n)).
    #[test]
    fn frobenius_reproduces_hypergeometric_ratio() {
        let ctx = BigReal::ctx_for_digits(40);
        let (a, b, c) = (
            BigReal::ratio(1, 3, &ctx),
            BigReal::ratio(5, 4, &ctx),
            BigReal::ratio(7, 2, &ctx),
        );
        let one = BigReal::one(&ctx);
        let ode = PolyOde {
            p2: vec![BigReal::zero(&ctx), one.clone(), -one.clone()],
            p1: vec![c.clone(), -(a.clone() + &b + &one)],
            p0: vec![-(a.clone() * &b)],
        };
        let tol = BigReal::pow10(-30, &ctx);
        let Frobenius::Complete(coeffs) = frobenius(&ode, 0, 30, &tol, &ctx).unwrap() else {
            panic!("unexpected resonance");
        };
        for n in 0..30 {
            let nn = BigReal::from_int(n as i64, &ctx);
            let expect = (a.clone() + &nn) * (b.clone() + &nn) / ((nn.clone() + &one) * (c.clone() + &nn));
            let got = coeffs[n + 1].clone() / &coeffs[n];
            assert!((got - expect).abs() < BigReal::pow10(-35, &ctx));
        }
        let res = residual_coefficients(&ode, 0, &coeffs, 28);
        assert!(res.iter().all(|r| r.abs() < BigReal::pow10(-35, &ctx)));
    }

    // y'' + y = 0 continued from 0 to 3 through many steps recovers cos.
    #[test]
    fn continuation_follows_cosine() {
        let ctx = BigReal::ctx_for_digits(40);
        let ode: PolyOde<BigReal> = PolyOde {
            p2: ints(&[1], &ctx),
            p1: ints(&[0], &ctx),
            p0: ints(&[1], &ctx),
        };
        // a fictitious singular point at −1/2 forces small steps
        let sing = vec![BigReal::ratio(-1, 2, &ctx)];
        let (y, dy, div) = continue_solution(
            &ode,
            &sing,
            &BigReal::zero(&ctx),
            (BigReal::one(&ctx), BigReal::zero(&ctx)),
            &BigReal::from_int(3, &ctx),
            60,
            &BigReal::ratio(1, 2, &ctx),
        )
        .unwrap();
        assert!(!div);
        assert!((y.to_f64() - 3f64.cos()).abs() < 1e-15);
        assert!((dy.to_f64() + 3f64.sin()).abs() < 1e-15);
    }

    #[test]
    fn divergence_flag_outside_disk() {
        // 1/(1−x) has coefficients 1, beyond radius 1 the terms grow
        let s = LocalSeries {
            center: 0.0,
            exponent: 0,
            coeffs: vec![1.0; 50],
        };
        assert!(s.eval(&1.5).diverging);
        assert!(!s.eval(&0.5).diverging);
    }

    #[test]
    fn exponent_shifts_value_and_derivative() {
        let s = LocalSeries {
            center: 1.0,
            exponent: 2,
            coeffs: vec![1.0, 1.0],
        };
        // (x−1)²·(1 + (x−1)) at x = 3: value 12, derivative 2·2·3 + 4 = 16
        let v = s.eval(&3.0);
        assert_eq!(v.y, 12.0);
        assert_eq!(v.dy, 16.0);
    }
}
