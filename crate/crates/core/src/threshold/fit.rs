//! Least-squares fit of the late-time central amplitude
//!
//! ψ(τ) ≈ c + a₁e^(λ₁τ) + a₀e^τ + a₋₁e^(λ₋₁τ)
//!
//! with λ₁ held fixed. Each exponential is evaluated relative to the end of
//! the window where it is largest, so the Jacobian columns stay O(1).

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, thiserror::Error, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FitError {
    #[error("only {found} samples in the fit window, need at least {needed}")]
    TooFewSamples { found: usize, needed: usize },
    #[error("no samples within {tol} of the plateau value")]
    NoPlateau { tol: f64 },
    #[error("fit is rank deficient (condition number {condition:e})")]
    RankDeficient { condition: f64 },
    #[error("Levenberg-Marquardt did not converge in {iterations} iterations")]
    NoConvergence { iterations: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeFit {
    pub c: f64,
    pub a1: f64,
    pub a0: f64,
    pub a_minus1: f64,
    pub lambda1: f64,
    pub lambda_minus1: f64,
    pub window: [f64; 2],
    pub samples: usize,
    pub rms_residual: f64,
    pub condition: f64,
    pub iterations: usize,
}

impl ModeFit {
    pub fn eval(&self, tau: f64) -> f64 {
        self.c
            + self.a1 * (self.lambda1 * tau).exp()
            + self.a0 * tau.exp()
            + self.a_minus1 * (self.lambda_minus1 * tau).exp()
    }
}

#[derive(Debug, Clone)]
pub struct FitOptions {
    /// Starting value for c, also the centre of the default window.
    pub c_init: f64,
    pub lambda_minus1_init: f64,
    /// Explicit (τ_lo, τ_hi); otherwise the longest run of samples with
    /// |ψ − c_init| < plateau_tol.
    pub window: Option<(f64, f64)>,
    pub plateau_tol: f64,
    pub max_iterations: usize,
    /// Largest acceptable condition number of the scaled Jacobian.
    pub max_condition: f64,
}

impl FitOptions {
    pub fn new(c_init: f64, lambda_minus1_init: f64) -> Self {
        FitOptions {
            c_init,
            lambda_minus1_init,
            window: None,
            plateau_tol: 1e-2,
            max_iterations: 200,
            max_condition: 1e6,
        }
    }
}

/// Longest contiguous stretch of samples with |ψ − c| < tol.
pub fn fit_window(samples: &[(f64, f64)], c: f64, tol: f64) -> Option<(f64, f64)> {
    let mut best: Option<(usize, usize)> = None;
    let mut start = None;
    for (i, &(_, psi)) in samples.iter().enumerate() {
        let inside = (psi - c).abs() < tol;
        match (inside, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                if best.map_or(true, |(a, b)| i - s > b - a) {
                    best = Some((s, i));
                }
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        let n = samples.len();
        if best.map_or(true, |(a, b)| n - s > b - a) {
            best = Some((s, n));
        }
    }
    best.filter(|(a, b)| b - a >= 2)
        .map(|(a, b)| (samples[a].0, samples[b - 1].0))
}

const NPAR: usize = 5;

struct Problem<'a> {
    tau: &'a [f64],
    psi: &'a [f64],
    lambda1: f64,
    lo: f64,
    hi: f64,
}

impl Problem<'_> {
    /// Parameters: c, A₁, A₀, A₋₁, λ₋₁ with
    /// ψ = c + A₁e^(λ₁(τ−hi)) + A₀e^(τ−hi) + A₋₁e^(λ₋₁(τ−lo)).
    fn basis(&self, tau: f64, lm: f64) -> [f64; 3] {
        [
            (self.lambda1 * (tau - self.hi)).exp(),
            (tau - self.hi).exp(),
            (lm * (tau - self.lo)).exp(),
        ]
    }

    fn residual(&self, p: &[f64; NPAR]) -> DVector<f64> {
        DVector::from_iterator(
            self.tau.len(),
            self.tau.iter().zip(self.psi).map(|(&t, &y)| {
                let b = self.basis(t, p[4]);
                p[0] + p[1] * b[0] + p[2] * b[1] + p[3] * b[2] - y
            }),
        )
    }

    fn jacobian(&self, p: &[f64; NPAR]) -> DMatrix<f64> {
        let mut j = DMatrix::zeros(self.tau.len(), NPAR);
        for (i, &t) in self.tau.iter().enumerate() {
            let b = self.basis(t, p[4]);
            j[(i, 0)] = 1.0;
            j[(i, 1)] = b[0];
            j[(i, 2)] = b[1];
            j[(i, 3)] = b[2];
            j[(i, 4)] = p[3] * (t - self.lo) * b[2];
        }
        j
    }

    /// Amplitudes by linear least squares at fixed λ₋₁.
    fn linear(&self, lm: f64) -> Option<[f64; 4]> {
        let mut m = DMatrix::zeros(self.tau.len(), 4);
        for (i, &t) in self.tau.iter().enumerate() {
            let b = self.basis(t, lm);
            m[(i, 0)] = 1.0;
            m[(i, 1)] = b[0];
            m[(i, 2)] = b[1];
            m[(i, 3)] = b[2];
        }
        let rhs = DVector::from_column_slice(self.psi);
        let x = m.svd(true, true).solve(&rhs, 1e-14).ok()?;
        Some([x[0], x[1], x[2], x[3]])
    }
}

fn condition(j: &DMatrix<f64>) -> f64 {
    let mut scaled = j.clone();
    for mut col in scaled.column_iter_mut() {
        let n = col.norm();
        if n > 0.0 {
            col /= n;
        }
    }
    let sv = scaled.singular_values();
    let max = sv.max();
    let min = sv.min();
    if min > 0.0 {
        max / min
    } else {
        f64::INFINITY
    }
}

/// Fit the four-mode model to (τ, ψ) samples sorted by τ.
pub fn fit_modes(samples: &[(f64, f64)], lambda1: f64, opts: &FitOptions) -> Result<ModeFit, FitError> {
    let (lo, hi) = match opts.window {
        Some(w) => w,
        None => fit_window(samples, opts.c_init, opts.plateau_tol).ok_or(FitError::NoPlateau {
            tol: opts.plateau_tol,
        })?,
    };
    let (tau, psi): (Vec<f64>, Vec<f64>) = samples
        .iter()
        .filter(|(t, _)| *t >= lo && *t <= hi)
        .copied()
        .unzip();
    if tau.len() < 2 * NPAR {
        return Err(FitError::TooFewSamples {
            found: tau.len(),
            needed: 2 * NPAR,
        });
    }
    let prob = Problem {
        tau: &tau,
        psi: &psi,
        lambda1,
        lo,
        hi,
    };

    let lin = prob.linear(opts.lambda_minus1_init).ok_or(FitError::RankDeficient {
        condition: f64::INFINITY,
    })?;
    let mut p = [lin[0], lin[1], lin[2], lin[3], opts.lambda_minus1_init];
    let mut r = prob.residual(&p);
    let mut cost = r.norm_squared();
    let mut mu = 1e-3;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < opts.max_iterations {
        iterations += 1;
        let j = prob.jacobian(&p);
        let jtj = j.transpose() * &j;
        let g = j.transpose() * &r;
        let mut improved = false;
        for _ in 0..30 {
            let mut a = jtj.clone();
            for k in 0..NPAR {
                a[(k, k)] += mu * jtj[(k, k)].max(1e-300);
            }
            let Some(step) = a.svd(true, true).solve(&(-&g), 1e-300).ok() else {
                break;
            };
            let mut trial = p;
            for k in 0..NPAR {
                trial[k] += step[k];
            }
            let rt = prob.residual(&trial);
            let ct = rt.norm_squared();
            if ct.is_finite() && ct <= cost {
                let small = (0..NPAR).all(|k| step[k].abs() <= 1e-12 * (1.0 + trial[k].abs()));
                let flat = cost - ct <= 1e-15 * cost;
                p = trial;
                r = rt;
                cost = ct;
                mu = (mu / 3.0).max(1e-12);
                improved = true;
                converged = small || flat;
                break;
            }
            mu *= 4.0;
        }
        if !improved {
            // no descent direction left: already at the minimum
            converged = true;
        }
        if converged {
            break;
        }
    }
    if !converged {
        return Err(FitError::NoConvergence { iterations });
    }

    let cond = condition(&prob.jacobian(&p));
    if !(cond <= opts.max_condition) {
        return Err(FitError::RankDeficient { condition: cond });
    }
    Ok(ModeFit {
        c: p[0],
        a1: p[1] * (-lambda1 * hi).exp(),
        a0: p[2] * (-hi).exp(),
        a_minus1: p[3] * (-p[4] * lo).exp(),
        lambda1,
        lambda_minus1: p[4],
        window: [lo, hi],
        samples: tau.len(),
        rms_residual: (cost / tau.len() as f64).sqrt(),
        condition: cond,
        iterations,
    })
}
