//! Two-sided series shooting on the Heun form.
//!
//! y₀ is the solution analytic at x = 0 and y₁ the one analytic at x = 1; λ
//! is an eigenvalue exactly when they are linearly dependent, i.e. when the
//! Wronskian y₀′y₁ − y₀y₁′ vanishes at x = 1/2. For d = 5, 6 the singular
//! point (4−d)/3 lies inside the unit disk around 0, so y₀ is carried to
//! x = 1/2 by Taylor re-expansion through ordinary points.
//!
//! When σ = (d−3)/2 − λ is a positive integer m the indices at x = 1 differ
//! by m. Either the index-0 recurrence is consistent at step m (then every
//! solution is analytic at x = 1 and λ is an eigenvalue outright) or only the
//! index-m solution is analytic and is used for y₁.

use std::sync::atomic::{AtomicBool, Ordering};

use serde::Serialize;

use super::{
    lattice, resonant_points, scan_and_bisect, DimLabel, EigenvalueEntry, EigenvalueReport,
    HeunProblem, Method, Probe,
};
use crate::profiles::{Dimension, ProfileError};
use crate::real::{with_digits, Real, RealTask};
use crate::series::{continue_solution, frobenius, Frobenius, LocalSeries, SeriesError};

#[derive(Debug, Clone, PartialEq, thiserror::Error, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ShootError {
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error("resonant case at x = 1 (sigma = {m}); use resonant_series")]
    Resonant { m: u32 },
    #[error("sigma = {sigma} is not a positive integer")]
    NotResonant { sigma: f64 },
    #[error("invalid parameter: {0}")]
    Parameter(String),
}

/// Tolerance for recognizing σ as an integer.
pub const RESONANCE_TOL_DIGITS: i32 = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Center {
    Zero,
    One,
}

/// σ rounded to a positive integer if it is one within tolerance.
pub fn resonance<R: Real>(problem: &HeunProblem<R>) -> Option<u32> {
    let sigma = problem.sigma();
    let ctx = sigma.ctx();
    let m = sigma.to_f64().round();
    if m < 1.0 {
        return None;
    }
    let dist = (sigma - R::from_int(m as i64, &ctx)).abs();
    (dist < R::pow10(-RESONANCE_TOL_DIGITS, &ctx)).then_some(m as u32)
}

/// Normalized analytic series (a₀ = 1) about x = 0 or x = 1.
pub fn series_coeffs<R: Real>(
    problem: &HeunProblem<R>,
    center: Center,
    n: usize,
) -> Result<LocalSeries<R>, ShootError> {
    if n < 4 {
        return Err(SeriesError::Truncation { n }.into());
    }
    let ctx = problem.lambda.ctx();
    let zero = R::zero(&ctx);
    let (c, ode) = match center {
        Center::Zero => (zero.clone(), problem.ode()),
        Center::One => {
            if let Some(m) = resonance(problem) {
                return Err(ShootError::Resonant { m });
            }
            let one = R::one(&ctx);
            let ode = problem.ode().shifted(&one);
            (one, ode)
        }
    };
    match frobenius(&ode, 0, n, &zero, &ctx)? {
        Frobenius::Complete(coeffs) => Ok(LocalSeries {
            center: c,
            exponent: 0,
            coeffs,
        }),
        Frobenius::Resonant { index, .. } => Err(SeriesError::ZeroPivot { index }.into()),
    }
}

/// Result of the resonant analysis at x = 1.
#[derive(Debug, Clone)]
pub enum ResonantSeries<R: Real> {
    /// No logarithm: every solution is analytic at x = 1, so λ is an
    /// eigenvalue. `residual` is the relative size of the consistency
    /// condition at step m; `series` is the index-0 solution with aₘ = 0.
    BothAnalytic { residual: R, series: LocalSeries<R> },
    /// Only the index-m solution (x−1)^m·w(x) is analytic; `log_coefficient`
    /// is the relative size of the obstruction.
    SubdominantOnly {
        log_coefficient: R,
        series: LocalSeries<R>,
    },
}

/// Resonant-case series at x = 1. λ is snapped to the exact resonant value
/// (d−3)/2 − m before the recurrences are run.
pub fn resonant_series<R: Real>(
    problem: &HeunProblem<R>,
    n: usize,
) -> Result<ResonantSeries<R>, ShootError> {
    let Some(m) = resonance(problem) else {
        return Err(ShootError::NotResonant {
            sigma: problem.sigma().to_f64(),
        });
    };
    if n < 4 || (m as usize) >= n {
        return Err(SeriesError::Truncation { n }.into());
    }
    let ctx = problem.lambda.ctx();
    let d = problem.d.get();
    let exact = HeunProblem::new(
        problem.d,
        R::ratio(d - 3 - 2 * m as i64, 2, &ctx),
    );
    let one = R::one(&ctx);
    let ode = exact.ode().shifted(&one);
    let zero = R::zero(&ctx);
    let digits = R::digits(&ctx) as i32;
    let consistency_tol = R::pow10(-(digits - 10).max(1), &ctx);
    match frobenius(&ode, 0, n, &zero, &ctx)? {
        Frobenius::Complete(_) => unreachable!("pivot vanishes at the resonant index"),
        Frobenius::Resonant {
            index,
            rhs,
            scale,
            partial,
        } => {
            debug_assert_eq!(index, m as usize);
            let rel = if scale.is_zero() {
                rhs.abs()
            } else {
                rhs.abs() / &scale
            };
            if rel <= consistency_tol {
                let coeffs = complete_after_resonance(&ode, partial, n);
                Ok(ResonantSeries::BothAnalytic {
                    residual: rel,
                    series: LocalSeries {
                        center: one,
                        exponent: 0,
                        coeffs,
                    },
                })
            } else {
                match frobenius(&ode, m, n, &zero, &ctx)? {
                    Frobenius::Complete(coeffs) => Ok(ResonantSeries::SubdominantOnly {
                        log_coefficient: rel,
                        series: LocalSeries {
                            center: one,
                            exponent: m,
                            coeffs,
                        },
                    }),
                    Frobenius::Resonant { index, .. } => {
                        Err(SeriesError::ZeroPivot { index }.into())
                    }
                }
            }
        }
    }
}

/// Continues the index-0 recurrence past a consistent resonance with the
/// free coefficient set to zero.
fn complete_after_resonance<R: Real>(
    ode: &crate::series::PolyOde<R>,
    mut a: Vec<R>,
    n: usize,
) -> Vec<R> {
    let ctx = a[0].ctx();
    a.push(R::zero(&ctx));
    // run the generic recurrence on a copy seeded with the known prefix
    while a.len() <= n {
        let i = a.len();
        let rhs = crate::series::residual_coefficients(ode, 0, &a, i as i64 - 1)
            .pop()
            .expect("non-empty");
        let pivot = crate::series::frobenius_pivot(ode, 0, i);
        a.push(-(rhs / pivot));
    }
    a
}

/// Wronskian at the matching point together with the scale |y₀′y₁| + |y₀y₁′|.
#[derive(Debug, Clone)]
pub struct Wronskian<R: Real> {
    pub value: R,
    pub scale: R,
    pub route: Method,
    /// Set when the resonant analysis found both solutions analytic; then
    /// `value` is zero and this holds the consistency residual.
    pub log_free_residual: Option<R>,
    pub diverging: bool,
}

impl<R: Real> Wronskian<R> {
    pub fn relative(&self) -> R {
        if let Some(r) = &self.log_free_residual {
            return r.clone();
        }
        Probe {
            value: self.value.clone(),
            scale: self.scale.clone(),
        }
        .relative()
    }
}

/// The two analytic branches for one (d, λ).
#[derive(Debug, Clone)]
pub struct Branches<R: Real> {
    problem: HeunProblem<R>,
    n: usize,
    s0: LocalSeries<R>,
    s1: Option<LocalSeries<R>>,
    route: Method,
    log_free_residual: Option<R>,
}

impl<R: Real> Branches<R> {
    pub fn new(problem: HeunProblem<R>, n: usize) -> Result<Self, ShootError> {
        let s0 = series_coeffs(&problem, Center::Zero, n)?;
        let (s1, route, log_free_residual) = match resonance(&problem) {
            None => (
                Some(series_coeffs(&problem, Center::One, n)?),
                Method::Shooting,
                None,
            ),
            Some(_) => match resonant_series(&problem, n)? {
                ResonantSeries::BothAnalytic { residual, series } => {
                    (Some(series), Method::ResonantShooting, Some(residual))
                }
                ResonantSeries::SubdominantOnly { series, .. } => {
                    (Some(series), Method::ResonantShooting, None)
                }
            },
        };
        Ok(Branches {
            problem,
            n,
            s0,
            s1,
            route,
            log_free_residual,
        })
    }

    /// y₀ and y₀′ at x ∈ (0, 1), with a divergence flag.
    pub fn y0(&self, x: &R) -> Result<(R, R, bool), ShootError> {
        let ctx = x.ctx();
        let s = self.problem.third_singular_point();
        let radius0 = s.abs().min_of(R::one(&ctx));
        let half = R::ratio(1, 2, &ctx);
        let first = x.clone().min_of(radius0.clone() * &half);
        let v = self.s0.eval(&first);
        if first == *x {
            return Ok((v.y, v.dy, v.diverging));
        }
        let singular = [R::zero(&ctx), R::one(&ctx), s];
        let (y, dy, div) = continue_solution(
            &self.problem.ode(),
            &singular,
            &first,
            (v.y, v.dy),
            x,
            self.n,
            &half,
        )?;
        Ok((y, dy, div || v.diverging))
    }

    /// y₁ and y₁′ at x ∈ (0, 1), with a divergence flag.
    pub fn y1(&self, x: &R) -> (R, R, bool) {
        let s = self.s1.as_ref().expect("branch at x = 1");
        let v = s.eval(x);
        (v.y, v.dy, v.diverging)
    }

    pub fn wronskian(&self, x: &R) -> Result<Wronskian<R>, ShootError> {
        let (y0, dy0, div0) = self.y0(x)?;
        let (y1, dy1, div1) = self.y1(x);
        let a = dy0.clone() * &y1;
        let b = y0 * &dy1;
        let scale = a.abs() + b.abs();
        let value = if self.log_free_residual.is_some() {
            x.int(0)
        } else {
            a - b
        };
        Ok(Wronskian {
            value,
            scale,
            route: self.route,
            log_free_residual: self.log_free_residual.clone(),
            diverging: div0 || div1,
        })
    }
}

/// W[y₀, y₁](1/2).
pub fn wronskian_mid<R: Real>(
    problem: &HeunProblem<R>,
    n: usize,
) -> Result<Wronskian<R>, ShootError> {
    let half = R::ratio(1, 2, &problem.lambda.ctx());
    Branches::new(problem.clone(), n)?.wronskian(&half)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShootParams {
    pub d: i64,
    pub window: (f64, f64),
    pub n: usize,
    pub digits: u32,
    pub grid_step: f64,
}

impl ShootParams {
    pub fn new(d: i64, window: (f64, f64)) -> Self {
        ShootParams {
            d,
            window,
            n: 200,
            digits: 50,
            grid_step: 0.01,
        }
    }
}

pub(crate) fn decimal<R: Real>(x: f64, ctx: &R::Ctx) -> R {
    R::parse_decimal(&format!("{x}"), ctx).expect("finite f64 prints as decimal")
}

/// Scan, bisect and resonance-check the window; eigenvalues in descending
/// order.
pub fn find_eigenvalues(params: &ShootParams) -> Result<EigenvalueReport, ShootError> {
    struct Task<'a>(&'a ShootParams);
    impl RealTask for Task<'_> {
        type Output = Result<EigenvalueReport, ShootError>;
        fn run<R: Real>(self, ctx: R::Ctx) -> Self::Output {
            find_eigenvalues_in::<R>(self.0, &ctx)
        }
    }
    with_digits(params.digits, Task(params))
}

pub fn find_eigenvalues_in<R: Real>(
    params: &ShootParams,
    ctx: &R::Ctx,
) -> Result<EigenvalueReport, ShootError> {
    let d = Dimension::new(params.d)?;
    let (lo_f, hi_f) = params.window;
    if !(lo_f < hi_f) || !lo_f.is_finite() || !hi_f.is_finite() {
        return Err(ShootError::Parameter("window must satisfy lo < hi".into()));
    }
    if !(params.grid_step > 0.0) {
        return Err(ShootError::Parameter("grid step must be positive".into()));
    }
    let lo: R = decimal(lo_f, ctx);
    let hi: R = decimal(hi_f, ctx);
    let step: R = decimal(params.grid_step, ctx);
    let tol = R::pow10(-(params.digits as i32 / 2), ctx);
    let n = params.n;

    let resonant = resonant_points(d, &lo, &hi);
    // keep resonant points out of the scan; brackets never straddle them
    let guard = step.clone().div_int(10);
    let mut points = lattice(&lo, &hi, &step);
    let mut cuts: Vec<R> = Vec::new();
    for (_, r) in &resonant {
        points.retain(|p| (p.clone() - r).abs() >= guard);
        points.push(r.clone() - &guard);
        points.push(r.clone() + &guard);
        cuts.push(r.clone());
    }
    points.retain(|p| *p >= lo && *p <= hi);
    points.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    points.dedup();
    let link: Vec<bool> = points
        .windows(2)
        .map(|w| !cuts.iter().any(|c| w[0] < *c && *c < w[1]))
        .collect();

    let diverging = AtomicBool::new(false);
    let f = |lam: &R| -> Result<Probe<R>, ShootError> {
        let w = wronskian_mid(&HeunProblem::new(d, lam.clone()), n)?;
        if w.diverging {
            diverging.store(true, Ordering::Relaxed);
        }
        Ok(Probe {
            value: w.value,
            scale: w.scale,
        })
    };
    let roots = scan_and_bisect(&f, &points, &link, &tol)?;

    let mut entries: Vec<(R, R, Method)> = roots
        .into_iter()
        .map(|r| (r.lambda, r.residual, Method::Shooting))
        .collect();
    let accept = R::pow10(-(params.digits as i32 / 2), ctx);
    let merge = R::pow10(-6, ctx);
    for (_, r) in &resonant {
        let w = wronskian_mid(&HeunProblem::new(d, r.clone()), n)?;
        if w.diverging {
            diverging.store(true, Ordering::Relaxed);
        }
        let rel = w.relative();
        if rel <= accept {
            entries.retain(|(l, _, _)| (l.clone() - r).abs() > merge);
            entries.push((r.clone(), rel, Method::ResonantShooting));
        }
    }
    entries.sort_by(|a, b| b.0.partial_cmp(&a.0).expect("finite"));

    let mut warnings = Vec::new();
    if diverging.load(Ordering::Relaxed) {
        warnings.push("series terms not decreasing at the evaluation point".to_string());
    }
    Ok(EigenvalueReport {
        d: DimLabel::Finite(d.get()),
        method: Method::Shooting,
        digits: params.digits,
        truncation: n,
        window: [lo.to_decimal(), hi.to_decimal()],
        eigenvalues: entries
            .into_iter()
            .map(|(l, r, m)| EigenvalueEntry {
                lambda: l.to_decimal(),
                residual: format!("{:e}", r.to_f64()),
                method: m,
            })
            .collect(),
        poles: None,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::real::BigReal;
    use crate::series::residual_coefficients;

    fn dim(n: i64) -> Dimension {
        Dimension::new(n).unwrap()
    }

    fn prob(d: i64, lam: i64, digits: u32) -> HeunProblem<BigReal> {
        let ctx = BigReal::ctx_for_digits(digits);
        HeunProblem::new(dim(d), BigReal::from_int(lam, &ctx))
    }

    #[test]
    fn gauge_mode_series_terminates() {
        // Heun image of f₀ is (d−4) − 3x, normalized 1 − 3x/(d−4)
        for d in [5, 6, 8, 10] {
            let s = series_coeffs(&prob(d, 1, 40), Center::Zero, 30).unwrap();
            let a1 = -3.0 / (d - 4) as f64;
            assert!((s.coeffs[1].to_f64() - a1).abs() < 1e-30);
            assert!(s.coeffs[2..].iter().all(|c| c.abs().to_f64() < 1e-30));
        }
    }

    #[test]
    fn unstable_mode_d7_series_is_constant() {
        // f₁·(3+3x)² = 9: the Heun image is constant
        let s = series_coeffs(&prob(7, 3, 40), Center::Zero, 30).unwrap();
        assert!(s.coeffs[1..].iter().all(|c| c.abs().to_f64() < 1e-30));
    }

    #[test]
    fn recurrence_residual_vanishes_for_generic_lambda() {
        let ctx = BigReal::ctx_for_digits(60);
        for (d, lam) in [(5, "0.37"), (8, "-2.9"), (11, "4.123")] {
            let p = HeunProblem::new(dim(d), BigReal::parse_decimal(lam, &ctx).unwrap());
            for center in [Center::Zero, Center::One] {
                let s = series_coeffs(&p, center, 40).unwrap();
                let ode = match center {
                    Center::Zero => p.ode(),
                    Center::One => p.ode().shifted(&BigReal::one(&ctx)),
                };
                let res = residual_coefficients(&ode, 0, &s.coeffs, 38);
                let big = s.coeffs.iter().map(|c| c.abs().to_f64()).fold(1.0, f64::max);
                for r in res {
                    assert!(r.abs().to_f64() < 1e-50 * big);
                }
            }
        }
    }

    #[test]
    fn resonant_center_one_is_routed() {
        let p = prob(7, 1, 40);
        assert_eq!(
            series_coeffs(&p, Center::One, 20).unwrap_err(),
            ShootError::Resonant { m: 1 }
        );
        assert!(matches!(
            resonant_series(&prob(7, 2, 40), 20),
            Err(ShootError::NotResonant { .. })
        ));
    }

    #[test]
    fn gauge_mode_at_d7_is_the_subdominant_branch() {
        // y₀ = 1 − x vanishes to first order at x = 1: index m = 1
        let r = resonant_series(&prob(7, 1, 50), 60).unwrap();
        match r {
            ResonantSeries::SubdominantOnly { series, .. } => {
                assert_eq!(series.exponent, 1);
                assert!(series.coeffs[1..].iter().all(|c| c.is_zero()));
            }
            other => panic!("expected the subdominant branch, got {other:?}"),
        }
    }

    #[test]
    fn exact_eigenvalues_have_tiny_wronskian() {
        for (d, lam) in [(7, 1), (7, 3), (6, 1), (8, 1)] {
            let w = wronskian_mid(&prob(d, lam, 50), 200).unwrap();
            assert!(w.relative().to_f64() < 1e-30, "d={d} λ={lam}: {}", w.relative());
        }
        let w = wronskian_mid(&prob(7, 0, 50), 200).unwrap();
        assert!(w.relative().to_f64() > 1e-3);
    }

    #[test]
    fn branches_proportional_at_an_eigenvalue() {
        let b = Branches::new(prob(5, 1, 40), 150).unwrap();
        let ratio = |x: f64| {
            let x = BigReal::from_f64(x, &BigReal::ctx_for_digits(40));
            let (y0, _, _) = b.y0(&x).unwrap();
            let (y1, _, _) = b.y1(&x);
            (y0 / y1).to_f64()
        };
        let r = ratio(0.5);
        for x in [0.3, 0.7] {
            assert!((ratio(x) - r).abs() < 1e-8);
        }
    }
}
