//! Closed-form solutions, modes and potentials.
//!
//! Every evaluator is generic over [`Real`] and works with rational
//! expressions in ρ², so exact zeros (such as the gauge mode at ρ = 1 in
//! seven dimensions) stay exact.

use std::ops::{Add, Div, Mul, Sub};

use serde::Serialize;

use crate::real::Real;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProfileError {
    #[error("dimension d = {d} is not supercritical (need d >= 5)")]
    Dimension { d: i64 },
    #[error("radius must be non-negative")]
    NegativeRadius,
    #[error("time t must precede the blowup time T")]
    PastBlowup,
}

/// Spatial dimension, d ≥ 5.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct Dimension(i64);

impl Dimension {
    pub fn new(d: i64) -> Result<Self, ProfileError> {
        if d < 5 {
            Err(ProfileError::Dimension { d })
        } else {
            Ok(Dimension(d))
        }
    }

    pub fn get(self) -> i64 {
        self.0
    }
}

fn check_rho<R: Real>(rho: &R) -> Result<(), ProfileError> {
    if rho.sign() < 0 {
        Err(ProfileError::NegativeRadius)
    } else {
        Ok(())
    }
}

/// d − 4 + 3ρ².
fn denom<R: Real>(d: Dimension, rho: &R) -> R {
    rho.square().mul_int(3) + rho.int(d.0 - 4)
}

/// 2·sqrt(2(d−1)(d−4)).
pub fn u_star_numerator<R: Real>(d: Dimension, ctx: &R::Ctx) -> R {
    R::from_int(2 * (d.0 - 1) * (d.0 - 4), ctx).sqrt().mul_int(2)
}

/// The explicit self-similar profile U*(ρ).
pub fn u_star<R: Real>(d: Dimension, rho: &R) -> Result<R, ProfileError> {
    check_rho(rho)?;
    Ok(u_star_numerator::<R>(d, &rho.ctx()) / denom(d, rho))
}

/// U*(0) = 2·sqrt(2(d−1)/(d−4)).
pub fn u_star_origin<R: Real>(d: Dimension, ctx: &R::Ctx) -> R {
    u_star_numerator::<R>(d, ctx).div_int(d.0 - 4)
}

/// The spatially homogeneous blowup solution sqrt(2)/(T − t).
pub fn ode_blowup<R: Real>(big_t: &R, t: &R) -> Result<R, ProfileError> {
    if t >= big_t {
        return Err(ProfileError::PastBlowup);
    }
    Ok(t.int(2).sqrt() / (big_t.clone() - t))
}

/// Gauge mode (eigenvalue 1): (d−4−3ρ²)/(d−4+3ρ²)².
pub fn gauge_mode_f0<R: Real>(d: Dimension, rho: &R) -> Result<R, ProfileError> {
    check_rho(rho)?;
    let num = rho.int(d.0 - 4) - rho.square().mul_int(3);
    Ok(num / denom(d, rho).square())
}

/// The d = 7 unstable direction: f₁ = (1+ρ²)⁻² and g₁ = 4(1+ρ²)⁻³.
pub fn unstable_pair_d7<R: Real>(rho: &R) -> Result<(R, R), ProfileError> {
    check_rho(rho)?;
    let q = rho.int(1) + rho.square();
    let f1 = rho.int(1) / q.square();
    let g1 = rho.int(4) / (q.square() * &q);
    Ok((f1, g1))
}

/// Potential of the linearized operator, 3·U*(ρ)².
pub fn potential<R: Real>(d: Dimension, rho: &R) -> Result<R, ProfileError> {
    check_rho(rho)?;
    Ok(rho.int(24 * (d.0 - 1) * (d.0 - 4)) / denom(d, rho).square())
}

/// (ρ, f) ↦ (x, y) with x = ρ², y = f·(d−4+3x)².
pub fn heun_variable_map<R: Real>(d: Dimension, rho: &R, f: &R) -> Result<(R, R), ProfileError> {
    check_rho(rho)?;
    let x = rho.square();
    let y = f.clone() * denom(d, rho).square();
    Ok((x, y))
}

/// Inverse of [`heun_variable_map`]: (x, y) ↦ (ρ, f).
pub fn heun_variable_unmap<R: Real>(d: Dimension, x: &R, y: &R) -> Result<(R, R), ProfileError> {
    if x.sign() < 0 {
        return Err(ProfileError::NegativeRadius);
    }
    let w = x.clone().mul_int(3) + x.int(d.0 - 4);
    Ok((x.sqrt(), y.clone() / w.square()))
}

/// Value with first and second derivative, enough to evaluate second-order
/// ODE residuals of the closed-form expressions exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet<R> {
    pub v: R,
    pub d1: R,
    pub d2: R,
}

impl<R: Real> Jet<R> {
    pub fn constant(v: R) -> Self {
        let z = v.int(0);
        Jet {
            v,
            d1: z.clone(),
            d2: z,
        }
    }

    pub fn variable(x: R) -> Self {
        Jet {
            d1: x.int(1),
            d2: x.int(0),
            v: x,
        }
    }

    fn int(&self, n: i64) -> Self {
        Jet::constant(self.v.int(n))
    }
}

impl<R: Real> Add for Jet<R> {
    type Output = Jet<R>;
    fn add(self, o: Jet<R>) -> Jet<R> {
        Jet {
            v: self.v + o.v,
            d1: self.d1 + o.d1,
            d2: self.d2 + o.d2,
        }
    }
}

impl<R: Real> Sub for Jet<R> {
    type Output = Jet<R>;
    fn sub(self, o: Jet<R>) -> Jet<R> {
        Jet {
            v: self.v - o.v,
            d1: self.d1 - o.d1,
            d2: self.d2 - o.d2,
        }
    }
}

impl<R: Real> Mul for Jet<R> {
    type Output = Jet<R>;
    fn mul(self, o: Jet<R>) -> Jet<R> {
        let d2 = self.d2.clone() * &o.v + (self.d1.clone() * &o.d1).mul_int(2) + self.v.clone() * &o.d2;
        let d1 = self.d1 * &o.v + self.v.clone() * &o.d1;
        Jet {
            v: self.v * o.v,
            d1,
            d2,
        }
    }
}

impl<R: Real> Div for Jet<R> {
    type Output = Jet<R>;
    fn div(self, o: Jet<R>) -> Jet<R> {
        let q = self.v / &o.v;
        let q1 = (self.d1 - q.clone() * &o.d1) / &o.v;
        let q2 = (self.d2 - (q1.clone() * &o.d1).mul_int(2) - q.clone() * &o.d2) / &o.v;
        Jet {
            v: q,
            d1: q1,
            d2: q2,
        }
    }
}

fn denom_jet<R: Real>(d: Dimension, r: &Jet<R>) -> Jet<R> {
    r.clone() * r.clone() * r.int(3) + r.int(d.0 - 4)
}

/// U* as a jet in ρ.
pub fn u_star_jet<R: Real>(d: Dimension, rho: &R) -> Jet<R> {
    let r = Jet::variable(rho.clone());
    Jet::constant(u_star_numerator::<R>(d, &rho.ctx())) / denom_jet(d, &r)
}

/// f₀ as a jet in ρ.
pub fn gauge_mode_jet<R: Real>(d: Dimension, rho: &R) -> Jet<R> {
    let r = Jet::variable(rho.clone());
    let num = r.int(d.0 - 4) - r.clone() * r.clone() * r.int(3);
    let den = denom_jet(d, &r);
    num / (den.clone() * den)
}

/// f₁ as a jet in ρ.
pub fn unstable_mode_d7_jet<R: Real>(rho: &R) -> Jet<R> {
    let r = Jet::variable(rho.clone());
    let q = r.int(1) + r.clone() * r;
    q.int(1) / (q.clone() * q)
}

/// (d−1)/ρ · f′, continued to ρ = 0 by its limit (d−1)·f″(0).
fn radial_term<R: Real>(d: Dimension, rho: &R, j: &Jet<R>) -> R {
    if rho.is_zero() {
        j.d2.clone().mul_int(d.0 - 1)
    } else {
        j.d1.clone().mul_int(d.0 - 1) / rho
    }
}

/// Residual of the static self-similar profile equation
/// (1−ρ²)U″ + ((d−1)/ρ − 4ρ)U′ − 2U + U³ for a jet U.
pub fn profile_residual<R: Real>(d: Dimension, rho: &R, u: &Jet<R>) -> R {
    let one = rho.int(1);
    (one - rho.square()) * &u.d2 + radial_term(d, rho, u) - (rho.clone() * &u.d1).mul_int(4)
        - u.v.clone().mul_int(2)
        + u.v.powi(3)
}

/// Residual of the mode equation
/// (1−ρ²)f″ + ((d−1)/ρ − 2(λ+2)ρ)f′ − ((λ+1)(λ+2) − 3U*²)f for a jet f.
pub fn mode_residual<R: Real>(d: Dimension, lambda: &R, rho: &R, f: &Jet<R>) -> R {
    let one = rho.int(1);
    let two = rho.int(2);
    let pot = potential(d, rho).expect("rho checked by caller");
    let drift = (lambda.clone() + &two).mul_int(2) * rho * &f.d1;
    let mass = (lambda.clone() + &one) * (lambda.clone() + &two) - pot;
    (one - rho.square()) * &f.d2 + radial_term(d, rho, f) - drift - mass * &f.v
}
