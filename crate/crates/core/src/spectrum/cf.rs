//! Continued-fraction eigenvalue solver.
//!
//! Both recurrences handled here have the form
//! aₙ₊₂ = Aₙ·aₙ₊₁ + Bₙ·aₙ with a₁ = A₋₁·a₀, and λ is an eigenvalue exactly
//! when that seed selects the minimal solution. With tₙ = −aₙ₊₁/aₙ for the
//! minimal solution, tₙ = Bₙ/(Aₙ + tₙ₊₁), so eigenvalues are the zeros of
//!
//! ```text
//! F(λ) = A₋₁ + B₀/(A₀ + B₁/(A₁ + B₂/(A₂ + …)))
//! ```
//!
//! **Limiting equation (d → ∞).**
//! Aₙ = (λ² + (4n+7)λ + 4n² + 8n − 6)/(2(n+2)),
//! Bₙ = 3(λ+2n−2)(λ+2n−3)/(2(n+2)), A₋₁ = (λ² + 3λ − 10)/2.
//!
//! **Finite d.** A direct expansion of the Heun form about x = 0 has
//! characteristic ratios of equal modulus when d = 7 (singular points ±1),
//! so the minimal solution is not separated. The series is taken instead in
//! w = x(1−a)/(x−a), a = (4−d)/3, which sends x = 0, 1, ∞, a to
//! w = 0, 1, b, ∞ with b = (d−1)/3, after stripping the behavior at w = b
//! through y = (1 − w/b)^((λ−3)/2)·Y(w). Y then solves
//! q₂Y″ + q₁Y′ + q₀Y = 0 with
//!
//! ```text
//! q₂ = −4(d−1)w + 4(d+2)w² − 12w³
//! q₁ = −2d(d−1) + 4(dλ + 4d − λ − 1)w − 12(λ+3)w²
//! q₀ = dλ² + 6dλ − 19d − 4λ² − 12λ + 16 − 3(λ−3)(λ+7)w
//! ```
//!
//! whose coefficient ratios tend to 1 (singular at w = 1) or 1/b (analytic
//! up to w = b). The minimal solution is therefore the one analytic at
//! x = 1.

use std::sync::Mutex;

use serde::Serialize;

use super::shoot::decimal;
use super::{lattice, scan_and_bisect, DimLabel, EigenvalueEntry, EigenvalueReport, Method, Probe};
use crate::profiles::{Dimension, ProfileError};
use crate::real::{with_digits, Real, RealTask};
use crate::series::{poly_eval, PolyOde};

#[derive(Debug, Clone, PartialEq, thiserror::Error, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CfError {
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error("zero convergent at depth {depth}")]
    ZeroConvergent { depth: usize },
    #[error("the finite-d continued fraction needs d >= 7 (got {d}); use series shooting")]
    DimensionTooLow { d: i64 },
    #[error("invalid parameter: {0}")]
    Parameter(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Tail {
    Zero,
    Asymptotic,
}

/// Coefficients of a three-term recurrence aₙ₊₂ = Aₙaₙ₊₁ + Bₙaₙ.
pub trait ThreeTermRecurrence<R: Real>: Sync {
    /// Aₙ for n ≥ −1.
    fn a(&self, n: i64) -> R;
    /// Bₙ for n ≥ 0.
    fn b(&self, n: i64) -> R;
}

/// The d → ∞ recurrence at fixed λ.
#[derive(Debug, Clone)]
pub struct Limiting<R> {
    pub lambda: R,
}

/// Aₙ and Bₙ of the limiting recurrence (B is not defined for n = −1 and is
/// returned as zero there).
pub fn limiting_coeffs<R: Real>(n: i64, lambda: &R) -> (R, R) {
    let l = lambda;
    if n == -1 {
        let a = (l.square() + l.clone().mul_int(3) - l.int(10)).div_int(2);
        return (a, l.int(0));
    }
    let a = (l.square() + l.clone().mul_int(4 * n + 7) + l.int(4 * n * n + 8 * n - 6))
        .div_int(2 * (n + 2));
    let b = ((l.clone() + l.int(2 * n - 2)) * (l.clone() + l.int(2 * n - 3)))
        .mul_int(3)
        .div_int(2 * (n + 2));
    (a, b)
}

impl<R: Real> ThreeTermRecurrence<R> for Limiting<R> {
    fn a(&self, n: i64) -> R {
        limiting_coeffs(n, &self.lambda).0
    }
    fn b(&self, n: i64) -> R {
        limiting_coeffs(n, &self.lambda).1
    }
}

/// Finite-d recurrence in the Möbius variable (see module docs).
#[derive(Debug, Clone)]
pub struct HeunMobius<R> {
    pub d: Dimension,
    pub lambda: R,
    ode: PolyOde<R>,
}

impl<R: Real> HeunMobius<R> {
    pub fn new(d: Dimension, lambda: R) -> Self {
        let ode = mobius_ode(d, &lambda);
        HeunMobius { d, lambda, ode }
    }

    /// b = (d−1)/3, the image of x = ∞.
    pub fn b_point(&self) -> R {
        self.lambda.int(self.d.get() - 1).div_int(3)
    }

    /// Coefficients (P, Q, R) of Pₙaₙ + Qₙaₙ₋₁ + Rₙaₙ₋₂ = 0 for n ≥ 1.
    fn pqr(&self, n: i64) -> (R, R, R) {
        let (q2, q1, q0) = (&self.ode.p2, &self.ode.p1, &self.ode.p0);
        let p = (q2[1].clone().mul_int(n - 1) + &q1[0]).mul_int(n);
        let q = q2[2].clone().mul_int((n - 1) * (n - 2)) + q1[1].clone().mul_int(n - 1) + &q0[0];
        let r = q2[3].clone().mul_int((n - 2) * (n - 3)) + q1[2].clone().mul_int(n - 2) + &q0[1];
        (p, q, r)
    }

    /// Y(w) and Y′(w) from the first `n` + 1 recurrence coefficients.
    pub fn y_series(&self, n: usize) -> Vec<R> {
        let mut a = vec![self.lambda.int(1)];
        a.push(self.a(-1));
        for k in 0..n.saturating_sub(1) as i64 {
            let next = self.a(k) * &a[k as usize + 1] + self.b(k) * &a[k as usize];
            a.push(next);
        }
        a
    }
}

/// q₂, q₁, q₀ of the transformed equation, ascending powers of w.
pub fn mobius_ode<R: Real>(d: Dimension, lambda: &R) -> PolyOde<R> {
    let l = lambda;
    let d = d.get();
    let c = |n: i64| l.int(n);
    let p2 = vec![c(0), c(-4 * (d - 1)), c(4 * (d + 2)), c(-12)];
    let p1 = vec![
        c(-2 * d * (d - 1)),
        (l.clone().mul_int(d - 1) + c(4 * d - 1)).mul_int(4),
        (l.clone() + c(3)).mul_int(-12),
    ];
    let p0 = vec![
        l.square().mul_int(d - 4) + l.clone().mul_int(6 * d - 12) - c(19 * d - 16),
        ((l.clone() - c(3)) * (l.clone() + c(7))).mul_int(-3),
    ];
    PolyOde { p2, p1, p0 }
}

impl<R: Real> ThreeTermRecurrence<R> for HeunMobius<R> {
    fn a(&self, n: i64) -> R {
        let (p, q, _) = self.pqr(n + 2);
        -(q / p)
    }
    fn b(&self, n: i64) -> R {
        let (p, _, r) = self.pqr(n + 2);
        -(r / p)
    }
}

#[derive(Debug, Clone)]
pub struct CfEvaluation<R> {
    pub lambda: R,
    pub depth: usize,
    /// F(λ); infinite at anomalous λ.
    pub value: R,
    pub scale: R,
    /// F·v₀ = A₋₁v₀ + B₀v₁ after positive rescaling; an entire function of
    /// λ with the same zeros as F, used for root finding.
    pub numerator: R,
    pub numerator_scale: R,
    /// v₀ = A₀v₁ + B₁v₂ after the same rescaling; its zeros are the
    /// anomalous λ (the poles of F).
    pub denominator: R,
    pub denominator_scale: R,
    pub tail: Tail,
}

/// Bottom-up evaluation of F(λ) truncated after B_depth.
///
/// The truncated fraction is evaluated as a continuant ratio,
/// vₙ = Aₙvₙ₊₁ + Bₙ₊₁vₙ₊₂ with F = A₋₁ + B₀v₁/v₀, rescaling the pair at
/// every step by |vₙ| + |vₙ₊₁|. The scale factor is positive and continuous
/// in λ, so signs of the numerator and denominator are exact and neither
/// has poles.
pub fn cf_eval<R: Real, T: ThreeTermRecurrence<R>>(
    rec: &T,
    lambda: &R,
    depth: usize,
    tail: Tail,
) -> Result<CfEvaluation<R>, CfError> {
    let depth_i = depth as i64;
    let t = match tail {
        Tail::Zero => lambda.int(0),
        Tail::Asymptotic => {
            // fixed point t = B/(A + t) of the coefficients just past the cut
            let (a, b) = (rec.a(depth_i + 1), rec.b(depth_i + 1));
            let disc = (a.square() + b.mul_int(4)).sqrt();
            (disc - a).div_int(2)
        }
    };
    // (v_n, v_{n+1}) starting from (A_D + t, 1)
    let mut hi = lambda.int(1);
    let mut lo = rec.a(depth_i) + &t;
    for n in (0..depth_i).rev() {
        let next = rec.a(n) * &lo + rec.b(n + 1) * &hi;
        let norm = next.abs() + lo.abs();
        if norm.is_zero() {
            return Err(CfError::ZeroConvergent { depth: n as usize });
        }
        hi = lo / &norm;
        lo = next / norm;
    }
    let (v0, v1) = (lo, hi);
    let am1 = rec.a(-1);
    let b0 = rec.b(0);
    let a0v1 = rec.a(0) * &v1;
    let numerator = am1.clone() * &v0 + b0.clone() * &v1;
    let numerator_scale = (am1.clone() * &v0).abs() + (b0.clone() * &v1).abs();
    let denominator_scale = v0.abs().max_of(a0v1.abs());
    let (value, scale) = if v0.is_zero() {
        (lambda.int(0), lambda.int(0))
    } else {
        let t0 = b0 * &v1 / &v0;
        (am1.clone() + &t0, am1.abs() + t0.abs())
    };
    Ok(CfEvaluation {
        lambda: lambda.clone(),
        depth,
        value,
        scale,
        numerator,
        numerator_scale,
        denominator: v0,
        denominator_scale,
        tail,
    })
}

/// F(λ) for the limiting equation.
pub fn cf_value<R: Real>(lambda: &R, depth: usize, tail: Tail) -> Result<CfEvaluation<R>, CfError> {
    if depth < 8 {
        return Err(CfError::Parameter("depth must be at least 8".into()));
    }
    let e = cf_eval(&Limiting { lambda: lambda.clone() }, lambda, depth, tail)?;
    if e.denominator.is_zero() {
        return Err(CfError::ZeroConvergent { depth: 0 });
    }
    Ok(e)
}

/// Evaluation with the retry rule for an accidental zero convergent.
fn eval_retrying<R: Real, T: ThreeTermRecurrence<R>>(
    rec: &T,
    lambda: &R,
    depth: usize,
    tail: Tail,
) -> Result<CfEvaluation<R>, CfError> {
    match cf_eval(rec, lambda, depth, tail) {
        Err(CfError::ZeroConvergent { .. }) => cf_eval(rec, lambda, depth + 1, tail),
        other => other,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CfParams {
    pub window: (f64, f64),
    pub depth: usize,
    pub digits: u32,
    pub grid_step: f64,
    pub tail: Tail,
}

impl CfParams {
    pub fn new(window: (f64, f64)) -> Self {
        CfParams {
            window,
            depth: 512,
            digits: 50,
            grid_step: 0.01,
            tail: Tail::Zero,
        }
    }
}

fn check_params(p: &CfParams) -> Result<(), CfError> {
    let (lo, hi) = p.window;
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(CfError::Parameter("window must satisfy lo < hi".into()));
    }
    if !(p.grid_step > 0.0) {
        return Err(CfError::Parameter("grid step must be positive".into()));
    }
    if p.depth < 8 {
        return Err(CfError::Parameter("depth must be at least 8".into()));
    }
    Ok(())
}

/// Scan points: the lattice plus every integer in the window, so that the
/// terminating cases are probed exactly. Lattice points within step/10 of an
/// integer are dropped; their values sit at rounding level and would add
/// spurious sign changes next to the exact root.
fn scan_points<R: Real>(lo: &R, hi: &R, step: &R) -> Vec<R> {
    let first = lo.to_f64().ceil() as i64;
    let last = hi.to_f64().floor() as i64;
    let guard = step.clone().div_int(10);
    let mut pts: Vec<R> = lattice(lo, hi, step)
        .into_iter()
        .filter(|p| (first..=last).all(|k| (p.clone() - p.int(k)).abs() >= guard))
        .collect();
    for k in first..=last {
        pts.push(lo.int(k));
    }
    pts.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    pts.dedup();
    pts
}

struct Found<R> {
    roots: Vec<(R, R)>,
    warnings: Vec<String>,
}

/// Roots of F at `depth`, each confirmed by re-bisecting at 2·depth.
fn cf_roots<R: Real, T, M>(make: &M, p: &CfParams, ctx: &R::Ctx, reciprocal: bool) -> Result<Found<R>, CfError>
where
    T: ThreeTermRecurrence<R>,
    M: Fn(&R) -> T + Sync,
{
    check_params(p)?;
    let lo: R = decimal(p.window.0, ctx);
    let hi: R = decimal(p.window.1, ctx);
    let step: R = decimal(p.grid_step, ctx);
    let tol = R::pow10(-(p.digits as i32 / 2), ctx);
    let points = scan_points(&lo, &hi, &step);
    let link = vec![true; points.len().saturating_sub(1)];
    let probe = |depth: usize| {
        move |lam: &R| -> Result<Probe<R>, CfError> {
            let e = eval_retrying(&make(lam), lam, depth, p.tail)?;
            Ok(if reciprocal {
                Probe {
                    value: e.denominator,
                    scale: e.denominator_scale,
                }
            } else {
                Probe {
                    value: e.numerator,
                    scale: e.numerator_scale,
                }
            })
        }
    };
    let coarse = scan_and_bisect(&probe(p.depth), &points, &link, &tol)?;
    let warnings = Mutex::new(Vec::new());
    let fine_f = probe(2 * p.depth);
    let mut roots = Vec::new();
    for r in coarse {
        // depth doubling: the root must persist within a tight bracket
        let h = tol.clone().mul_int(1000).max_of(R::pow10(-12, ctx));
        let pts = vec![r.lambda.clone() - &h, r.lambda.clone(), r.lambda.clone() + &h];
        let fine = scan_and_bisect(&fine_f, &pts, &[true, true], &tol)?;
        match fine.into_iter().next() {
            Some(f) if (f.lambda.clone() - &r.lambda).abs() <= h => {
                roots.push((f.lambda, f.residual));
            }
            _ => warnings.lock().expect("no poisoning").push(format!(
                "root near {} dropped: not stable under depth doubling",
                r.lambda.to_f64()
            )),
        }
    }
    Ok(Found {
        roots,
        warnings: warnings.into_inner().expect("no poisoning"),
    })
}

fn report<R: Real>(
    d: DimLabel,
    p: &CfParams,
    ctx: &R::Ctx,
    found: Found<R>,
    poles: Vec<R>,
) -> EigenvalueReport {
    let lo: R = decimal(p.window.0, ctx);
    let hi: R = decimal(p.window.1, ctx);
    let mut warnings = found.warnings;
    let merge = R::pow10(-6, ctx);
    for (l, _) in &found.roots {
        if poles.iter().any(|q| (q.clone() - l).abs() < merge) {
            warnings.push(format!("eigenvalue {} coincides with an anomalous λ", l.to_f64()));
        }
    }
    EigenvalueReport {
        d,
        method: Method::ContinuedFraction,
        digits: p.digits,
        truncation: p.depth,
        window: [lo.to_decimal(), hi.to_decimal()],
        eigenvalues: found
            .roots
            .into_iter()
            .map(|(l, r)| EigenvalueEntry {
                lambda: l.to_decimal(),
                residual: format!("{:e}", r.to_f64()),
                method: Method::ContinuedFraction,
            })
            .collect(),
        poles: Some(poles.iter().map(|q| q.to_decimal()).collect()),
        warnings,
    }
}

/// Anomalous λ of the limiting equation: zeros of A₀ + B₁/(A₁ + …).
pub fn find_anomalous_in<R: Real>(p: &CfParams, ctx: &R::Ctx) -> Result<Vec<R>, CfError> {
    let make = |l: &R| Limiting { lambda: l.clone() };
    Ok(cf_roots(&make, p, ctx, true)?
        .roots
        .into_iter()
        .map(|(l, _)| l)
        .collect())
}

/// Eigenvalues of the limiting (d → ∞) equation, with its anomalous λ.
pub fn find_cf_eigenvalues(p: &CfParams) -> Result<EigenvalueReport, CfError> {
    struct Task<'a>(&'a CfParams);
    impl RealTask for Task<'_> {
        type Output = Result<EigenvalueReport, CfError>;
        fn run<R: Real>(self, ctx: R::Ctx) -> Self::Output {
            find_cf_eigenvalues_in::<R>(self.0, &ctx)
        }
    }
    with_digits(p.digits, Task(p))
}

pub fn find_cf_eigenvalues_in<R: Real>(p: &CfParams, ctx: &R::Ctx) -> Result<EigenvalueReport, CfError> {
    let make = |l: &R| Limiting { lambda: l.clone() };
    let found = cf_roots(&make, p, ctx, false)?;
    let poles = find_anomalous_in::<R>(p, ctx)?;
    Ok(report(DimLabel::Infinite, p, ctx, found, poles))
}

pub fn find_anomalous(p: &CfParams) -> Result<Vec<f64>, CfError> {
    struct Task<'a>(&'a CfParams);
    impl RealTask for Task<'_> {
        type Output = Result<Vec<f64>, CfError>;
        fn run<R: Real>(self, ctx: R::Ctx) -> Self::Output {
            Ok(find_anomalous_in::<R>(self.0, &ctx)?
                .iter()
                .map(|x| x.to_f64())
                .collect())
        }
    }
    with_digits(p.digits, Task(p))
}

/// Eigenvalues of the finite-d problem via the Möbius-variable recurrence.
pub fn heun_cf_eigenvalues(d: i64, p: &CfParams) -> Result<EigenvalueReport, CfError> {
    struct Task<'a>(i64, &'a CfParams);
    impl RealTask for Task<'_> {
        type Output = Result<EigenvalueReport, CfError>;
        fn run<R: Real>(self, ctx: R::Ctx) -> Self::Output {
            heun_cf_eigenvalues_in::<R>(self.0, self.1, &ctx)
        }
    }
    with_digits(p.digits, Task(d, p))
}

pub fn heun_cf_eigenvalues_in<R: Real>(
    d: i64,
    p: &CfParams,
    ctx: &R::Ctx,
) -> Result<EigenvalueReport, CfError> {
    let dim = Dimension::new(d)?;
    if d < 7 {
        return Err(CfError::DimensionTooLow { d });
    }
    let make = |l: &R| HeunMobius::new(dim, l.clone());
    let found = cf_roots(&make, p, ctx, false)?;
    let poles = cf_roots(&make, p, ctx, true)?
        .roots
        .into_iter()
        .map(|(l, _)| l)
        .collect();
    Ok(report(DimLabel::Finite(d), p, ctx, found, poles))
}

/// y(x) from the Möbius-variable series: (1 − w/b)^((λ−3)/2)·Y(w).
pub fn mobius_solution<R: Real>(rec: &HeunMobius<R>, coeffs: &[R], x: &R) -> R {
    let d = rec.d.get();
    let a = x.int(4 - d).div_int(3);
    let b = rec.b_point();
    let w = x.clone() * (x.int(1) - &a) / (x.clone() - &a);
    let y = poly_eval(coeffs, &w);
    let base = x.int(1) - w / &b;
    let expo = (rec.lambda.clone() - x.int(3)).div_int(2);
    (base.ln() * expo).exp() * y
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::real::BigReal;
    use crate::spectrum::shoot::{series_coeffs, Center};
    use crate::spectrum::HeunProblem;

    fn ctx() -> crate::real::Precision {
        BigReal::ctx_for_digits(50)
    }

    #[test]
    fn limiting_coefficient_examples() {
        let two = BigReal::from_int(2, &ctx());
        assert!(limiting_coeffs(-1, &two).0.is_zero());
        assert!(limiting_coeffs(0, &two).1.is_zero());
        assert_eq!(limiting_coeffs(-1, &1.0).0, -3.0);
    }

    #[test]
    fn terminating_values() {
        let c = ctx();
        let v2 = cf_value(&BigReal::from_int(2, &c), 64, Tail::Zero).unwrap();
        assert!(v2.value.is_zero());
        // the continuant rescaling rounds, so λ = 1 vanishes only to working precision
        let v1 = cf_value(&BigReal::from_int(1, &c), 64, Tail::Zero).unwrap();
        assert!(v1.value.abs().to_f64() < 1e-48 * v1.scale.to_f64());
        for depth in [64, 128, 256] {
            let v0 = cf_value(&BigReal::zero(&c), depth, Tail::Zero).unwrap();
            assert!((v0.value.to_f64() + 8.0).abs() < 1e-30);
        }
    }

    // forward recurrence from a₀ = 1 at λ = 1 must give 1 − 3z
    #[test]
    fn gauge_eigenfunction_is_one_minus_three_z() {
        let c = ctx();
        let lam = BigReal::from_int(1, &c);
        let rec = Limiting { lambda: lam };
        let mut a = vec![BigReal::one(&c), rec.a(-1)];
        for n in 0..10 {
            let next = rec.a(n) * &a[n as usize + 1] + rec.b(n) * &a[n as usize];
            a.push(next);
        }
        assert_eq!(a[1].to_f64(), -3.0);
        assert!(a[2..].iter().all(|x| x.is_zero()));
    }

    #[test]
    fn tails_agree_at_depth() {
        let c = ctx();
        let lam = BigReal::parse_decimal("-0.7", &c).unwrap();
        let z = cf_value(&lam, 512, Tail::Zero).unwrap().value;
        let a = cf_value(&lam, 512, Tail::Asymptotic).unwrap().value;
        assert!((z - a).abs().to_f64() < 1e-40);
    }

    #[test]
    fn mobius_series_reproduces_the_heun_solution() {
        let c = ctx();
        for (d, lam) in [(7, "0.37"), (9, "-1.3"), (12, "2.2")] {
            let l = BigReal::parse_decimal(lam, &c).unwrap();
            let dim = Dimension::new(d).unwrap();
            let rec = HeunMobius::new(dim, l.clone());
            let ycoef = rec.y_series(300);
            let s0 = series_coeffs(&HeunProblem::new(dim, l), Center::Zero, 300).unwrap();
            for x in ["0.1", "0.25"] {
                let x = BigReal::parse_decimal(x, &c).unwrap();
                let via_w = mobius_solution(&rec, &ycoef, &x);
                let direct = s0.eval(&x).y;
                assert!((via_w - direct).abs().to_f64() < 1e-25, "d={d} λ={lam}");
            }
        }
    }

    #[test]
    fn known_eigenfunctions_in_mobius_variable() {
        // d = 7: λ = 3 gives Y constant, λ = 1 gives Y = 1 − w
        let c = ctx();
        let d7 = Dimension::new(7).unwrap();
        let y3 = HeunMobius::new(d7, BigReal::from_int(3, &c)).y_series(10);
        assert!(y3[1..].iter().all(|x| x.abs().to_f64() < 1e-40));
        let y1 = HeunMobius::new(d7, BigReal::from_int(1, &c)).y_series(10);
        assert!((y1[1].to_f64() + 1.0).abs() < 1e-40);
        assert!(y1[2..].iter().all(|x| x.abs().to_f64() < 1e-40));
    }

    #[test]
    fn integer_roots_are_reported_once() {
        // −3.6 + 460·0.01 lands within rounding of 1
        let r = heun_cf_eigenvalues(7, &CfParams::new((-3.6, 1.5))).unwrap();
        let ones = r.lambdas().iter().filter(|l| (*l - 1.0).abs() < 1e-9).count();
        assert_eq!(ones, 1, "{:?}", r.lambdas());
    }

    #[test]
    fn low_dimensions_rejected() {
        let p = CfParams::new((0.0, 1.0));
        assert_eq!(
            heun_cf_eigenvalues(6, &p).unwrap_err(),
            CfError::DimensionTooLow { d: 6 }
        );
    }
}
