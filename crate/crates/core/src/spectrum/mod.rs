//! Eigenvalues of the linearized operator around U*.
//!
//! Mode solutions e^(λτ)f(ρ) satisfy a second-order ODE in ρ which, with
//! x = ρ² and y = f·(d−4+3x)², becomes a Heun equation with singular points
//! 0, 1, (4−d)/3 and ∞. After multiplication by 4x(x−1)(3x+d−4) it reads
//! p₂y″ + p₁y′ + p₀y = 0 with
//!
//! ```text
//! p₂ = 12x³ + 4(d−7)x² − 4(d−4)x
//! p₁ = (12λ−18)x² + (4dλ + 4d − 16λ + 8)x − 2d(d−4)
//! p₀ = 3(λ−3)(λ−2)x + λ(λ+3)(d−4) − 10d + 16
//! ```
//!
//! Two solvers are provided: two-sided series shooting ([`shoot`]) and the
//! continued-fraction method ([`cf`]), the latter also for the d → ∞ limit.

pub mod cf;
pub mod shoot;

use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::profiles::Dimension;
use crate::real::Real;
use crate::series::PolyOde;

#[derive(Debug, Clone)]
pub struct HeunProblem<R> {
    pub d: Dimension,
    pub lambda: R,
}

impl<R: Real> HeunProblem<R> {
    pub fn new(d: Dimension, lambda: R) -> Self {
        HeunProblem { d, lambda }
    }

    /// Polynomial coefficients in ascending powers of x.
    pub fn ode(&self) -> PolyOde<R> {
        let l = &self.lambda;
        let d = self.d.get();
        let c = |n: i64| l.int(n);
        let p2 = vec![c(0), c(-4 * (d - 4)), c(4 * (d - 7)), c(12)];
        let p1 = vec![
            c(-2 * d * (d - 4)),
            l.clone().mul_int(4 * d - 16) + c(4 * d + 8),
            l.clone().mul_int(12) - c(18),
        ];
        let p0 = vec![
            (l.clone() * (l.clone() + c(3))).mul_int(d - 4) - c(10 * d - 16),
            ((l.clone() - c(3)) * (l.clone() - c(2))).mul_int(3),
        ];
        PolyOde { p2, p1, p0 }
    }

    /// Nontrivial Frobenius index at x = 1, σ = (d−3)/2 − λ.
    pub fn sigma(&self) -> R {
        self.lambda.int(self.d.get() - 3).div_int(2) - &self.lambda
    }

    /// The singular point (4−d)/3.
    pub fn third_singular_point(&self) -> R {
        self.lambda.int(4 - self.d.get()).div_int(3)
    }
}

/// Resonant spectral parameters λ = (d−3)/2 − m (m a positive integer) in
/// [lo, hi], with their m, in descending order of λ.
pub fn resonant_points<R: Real>(d: Dimension, lo: &R, hi: &R) -> Vec<(u32, R)> {
    let mut out = Vec::new();
    let half = lo.int(d.get() - 3).div_int(2);
    let mut m = 1u32;
    loop {
        let lam = half.clone() - lo.int(m as i64);
        if lam < *lo {
            break;
        }
        if lam <= *hi {
            out.push((m, lam));
        }
        m += 1;
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Shooting,
    ResonantShooting,
    ContinuedFraction,
}

/// Dimension label of a report: an integer, or "inf" for the limiting
/// equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DimLabel {
    Finite(i64),
    Infinite,
}

impl Serialize for DimLabel {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            DimLabel::Finite(d) => s.serialize_i64(*d),
            DimLabel::Infinite => s.serialize_str("inf"),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EigenvalueEntry {
    pub lambda: String,
    pub residual: String,
    pub method: Method,
}

impl EigenvalueEntry {
    pub fn lambda_f64(&self) -> f64 {
        self.lambda.parse().unwrap_or(f64::NAN)
    }

    pub fn residual_f64(&self) -> f64 {
        self.residual.parse().unwrap_or(f64::NAN)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EigenvalueReport {
    pub d: DimLabel,
    pub method: Method,
    pub digits: u32,
    pub truncation: usize,
    pub window: [String; 2],
    pub eigenvalues: Vec<EigenvalueEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub poles: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl EigenvalueReport {
    /// Eigenvalues as doubles, in the report's (descending) order.
    pub fn lambdas(&self) -> Vec<f64> {
        self.eigenvalues.iter().map(|e| e.lambda_f64()).collect()
    }
}

/// A function value with the magnitude scale it should be compared with.
#[derive(Debug, Clone)]
pub struct Probe<R> {
    pub value: R,
    pub scale: R,
}

impl<R: Real> Probe<R> {
    pub fn relative(&self) -> R {
        if self.scale.is_zero() {
            self.value.abs()
        } else {
            self.value.abs() / &self.scale
        }
    }
}

#[derive(Debug, Clone)]
pub struct Root<R> {
    pub lambda: R,
    pub residual: R,
}

/// Sign-change scan over `points` (ascending) followed by bisection down to
/// `tol`. Brackets (points[i], points[i+1]) are formed only where `link[i]`
/// is true. A refined bracket whose final |value| exceeds both initial
/// endpoint magnitudes is a pole and is dropped.
pub(crate) fn scan_and_bisect<R, E, F>(
    f: &F,
    points: &[R],
    link: &[bool],
    tol: &R,
) -> Result<Vec<Root<R>>, E>
where
    R: Real,
    E: Send,
    F: Fn(&R) -> Result<Probe<R>, E> + Sync,
{
    let values: Vec<Probe<R>> = points
        .par_iter()
        .map(f)
        .collect::<Result<Vec<_>, E>>()?;
    let mut roots = Vec::new();
    for (i, v) in values.iter().enumerate() {
        if v.value.is_zero() {
            roots.push(Root {
                lambda: points[i].clone(),
                residual: v.relative(),
            });
        }
    }
    let brackets: Vec<usize> = (0..points.len().saturating_sub(1))
        .filter(|&i| link[i])
        .filter(|&i| {
            let (a, b) = (values[i].value.sign(), values[i + 1].value.sign());
            a * b < 0
        })
        .collect();
    let refined: Vec<Option<Root<R>>> = brackets
        .par_iter()
        .map(|&i| {
            bisect_bracket(
                f,
                points[i].clone(),
                points[i + 1].clone(),
                &values[i],
                &values[i + 1],
                tol,
            )
        })
        .collect::<Result<Vec<_>, E>>()?;
    roots.extend(refined.into_iter().flatten());
    roots.sort_by(|a, b| b.lambda.partial_cmp(&a.lambda).expect("finite roots"));
    Ok(roots)
}

fn bisect_bracket<R, E, F>(
    f: &F,
    mut lo: R,
    mut hi: R,
    f_lo: &Probe<R>,
    f_hi: &Probe<R>,
    tol: &R,
) -> Result<Option<Root<R>>, E>
where
    R: Real,
    F: Fn(&R) -> Result<Probe<R>, E>,
{
    let bound = f_lo.value.abs().min_of(f_hi.value.abs());
    let s_lo = f_lo.value.sign();
    let mut best_lo = f_lo.clone();
    let mut best_hi = f_hi.clone();
    while hi.clone() - &lo > *tol {
        let mid = (lo.clone() + &hi).div_int(2);
        if mid <= lo || mid >= hi {
            break;
        }
        let v = f(&mid)?;
        let s = v.value.sign();
        if s == 0 {
            let residual = v.relative();
            return Ok(Some(Root {
                lambda: mid,
                residual,
            }));
        }
        if s == s_lo {
            lo = mid;
            best_lo = v;
        } else {
            hi = mid;
            best_hi = v;
        }
    }
    let (lambda, probe) = if best_lo.value.abs() <= best_hi.value.abs() {
        (lo, best_lo)
    } else {
        (hi, best_hi)
    };
    if probe.value.abs() > bound {
        return Ok(None);
    }
    Ok(Some(Root {
        lambda,
        residual: probe.relative(),
    }))
}

/// Scan lattice lo, lo+step, …, hi (hi included).
pub(crate) fn lattice<R: Real>(lo: &R, hi: &R, step: &R) -> Vec<R> {
    let mut pts = Vec::new();
    let mut k = 0i64;
    loop {
        let x = lo.clone() + step.clone().mul_int(k);
        if x >= *hi {
            pts.push(hi.clone());
            break;
        }
        pts.push(x);
        k += 1;
    }
    pts
}
