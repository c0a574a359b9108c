//! Critical amplitude search, blowup time and the late-time mode fit.

pub mod fit;

use rayon::prelude::*;
use serde::Serialize;

use crate::evolution::ss::{evolve, h_drift, Classification, Outcome, SsParams, TrajectoryPoint};
use crate::profiles::Dimension;
use crate::real::Real;

pub use fit::{fit_modes, fit_window, FitError, FitOptions, ModeFit};

#[derive(Debug, Clone, PartialEq, thiserror::Error, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BisectError {
    #[error("endpoint a = {a} classified {found:?}, expected {expected:?}")]
    Endpoint {
        a: String,
        found: Classification,
        expected: Classification,
    },
    #[error("classification is not monotone across the probes of round {round}")]
    NonMonotone { round: usize, probes: Vec<ProbeRecord> },
    #[error("a = {a} stayed undecided after a retry: {diagnostics}")]
    Undecided { a: String, diagnostics: String },
    #[error("evolution failed at a = {a}: {message}")]
    Evolution { a: String, message: String },
    #[error("invalid search: {0}")]
    Parameter(String),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeRecord {
    pub a: String,
    pub class: Classification,
    pub s_end: String,
    pub round: usize,
}

/// What a classifier reports for one amplitude.
#[derive(Debug, Clone)]
pub struct Probe<O> {
    pub class: Classification,
    pub s_end: String,
    pub diagnostics: Option<String>,
    pub detail: O,
}

#[derive(Debug, Clone)]
pub struct Bisection<R, O> {
    pub lo: R,
    pub hi: R,
    pub lo_probe: Probe<O>,
    pub hi_probe: Probe<O>,
    pub probes: Vec<ProbeRecord>,
    pub rounds: usize,
}

/// Number of halvings that bring `width` down to at most `eps`.
fn depth<R: Real>(width: &R, eps: &R) -> usize {
    let mut w = width.clone();
    let mut k = 0;
    while w > *eps {
        w = w.div_int(2);
        k += 1;
    }
    k
}

fn midpoint<R: Real>(lo: &R, hi: &R) -> R {
    (lo.clone() + hi).div_int(2)
}

/// Interior points of `levels` successive bisections of (lo, hi), in
/// ascending order. Every point is the midpoint of its two dyadic
/// neighbours, so the values do not depend on how the levels are grouped
/// into rounds.
fn dyadic_points<R: Real>(lo: &R, hi: &R, levels: usize) -> Vec<R> {
    if levels == 0 {
        return Vec::new();
    }
    let m = midpoint(lo, hi);
    let mut out = dyadic_points(lo, &m, levels - 1);
    out.push(m.clone());
    out.extend(dyadic_points(&m, hi, levels - 1));
    out
}

/// Bisection levels per round for a given number of concurrent probes:
/// the largest m with 2^m − 1 ≤ max_parallel.
pub fn levels_per_round(max_parallel: usize) -> usize {
    let mut m = 1;
    while (1usize << (m + 1)) - 1 <= max_parallel {
        m += 1;
    }
    m
}

/// Shrink (lo, hi) until hi − lo ≤ eps. `classify(a, attempt)` is called
/// with attempt 0, and once more with attempt 1 if the first answer is
/// undecided. Endpoints must classify as subcritical (lo) and
/// supercritical (hi).
pub fn bisect<R, O, E, F>(
    lo: R,
    hi: R,
    eps: &R,
    max_parallel: usize,
    classify: F,
) -> Result<Bisection<R, O>, BisectError>
where
    R: Real,
    O: Send,
    E: std::fmt::Display + Send,
    F: Fn(&R, u32) -> Result<Probe<O>, E> + Sync,
{
    if !(lo < hi) || !(eps.sign() > 0) {
        return Err(BisectError::Parameter("need lo < hi and eps > 0".into()));
    }
    let ctx = lo.ctx();
    let floor = hi.abs().max_of(lo.abs()) * R::pow10(-(R::digits(&ctx) as i32), &ctx);
    if *eps < floor {
        return Err(BisectError::Parameter(format!(
            "eps below what {} digits resolve",
            R::digits(&ctx)
        )));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(max_parallel.max(1))
        .build()
        .map_err(|e| BisectError::Parameter(e.to_string()))?;

    let run = |a: &R| -> Result<Probe<O>, BisectError> {
        let wrap = |e: E| BisectError::Evolution {
            a: a.to_decimal(),
            message: e.to_string(),
        };
        let first = classify(a, 0).map_err(wrap)?;
        if first.class != Classification::Undecided {
            return Ok(first);
        }
        let second = classify(a, 1).map_err(wrap)?;
        if second.class == Classification::Undecided {
            return Err(BisectError::Undecided {
                a: a.to_decimal(),
                diagnostics: second.diagnostics.unwrap_or_default(),
            });
        }
        Ok(second)
    };
    let record = |a: &R, p: &Probe<O>, round| ProbeRecord {
        a: a.to_decimal(),
        class: p.class,
        s_end: p.s_end.clone(),
        round,
    };

    let (lo_probe, hi_probe) = pool.install(|| rayon::join(|| run(&lo), || run(&hi)));
    let (lo_probe, hi_probe) = (lo_probe?, hi_probe?);
    let mut probes = vec![record(&lo, &lo_probe, 0), record(&hi, &hi_probe, 0)];
    for (a, p, expected) in [
        (&lo, &lo_probe, Classification::Subcritical),
        (&hi, &hi_probe, Classification::Supercritical),
    ] {
        if p.class != expected {
            return Err(BisectError::Endpoint {
                a: a.to_decimal(),
                found: p.class,
                expected,
            });
        }
    }

    let per_round = levels_per_round(max_parallel);
    let mut remaining = depth(&(hi.clone() - &lo), eps);
    let mut state = Bisection {
        lo,
        hi,
        lo_probe,
        hi_probe,
        probes: Vec::new(),
        rounds: 0,
    };
    while remaining > 0 {
        let levels = per_round.min(remaining);
        let round = state.rounds + 1;
        let points = dyadic_points(&state.lo, &state.hi, levels);
        let results: Vec<Probe<O>> = pool.install(|| {
            points
                .par_iter()
                .map(|a| run(a))
                .collect::<Result<Vec<_>, BisectError>>()
        })?;
        let table: Vec<ProbeRecord> = points.iter().zip(&results).map(|(a, p)| record(a, p, round)).collect();
        // all subcritical probes must precede all supercritical ones
        let first_super = results
            .iter()
            .position(|p| p.class == Classification::Supercritical)
            .unwrap_or(results.len());
        if results[first_super..].iter().any(|p| p.class != Classification::Supercritical) {
            return Err(BisectError::NonMonotone { round, probes: table });
        }
        probes.extend(table);
        let mut results: Vec<Option<Probe<O>>> = results.into_iter().map(Some).collect();
        if first_super > 0 {
            state.lo = points[first_super - 1].clone();
            state.lo_probe = results[first_super - 1].take().expect("present");
        }
        if first_super < points.len() {
            state.hi = points[first_super].clone();
            state.hi_probe = results[first_super].take().expect("present");
        }
        remaining -= levels;
        state.rounds = round;
    }
    probes.append(&mut state.probes);
    state.probes = probes;
    Ok(state)
}

#[derive(Debug, Clone, Serialize)]
pub struct ThresholdRecord {
    pub d: i64,
    pub family: String,
    pub bracket: [String; 2],
    pub epsilon: String,
    pub probes: Vec<ProbeRecord>,
    pub params: SsParams,
    pub max_parallel: usize,
}

/// Undecided runs are retried with this factor on s_max.
pub const RETRY_S_MAX_FACTOR: f64 = 2.0;

/// Bisection over the a/cosh(y) family with the self-similar engine.
pub fn bisect_ss<R: Real>(
    d: Dimension,
    lo: R,
    hi: R,
    eps: &R,
    params: &SsParams,
    max_parallel: usize,
) -> Result<(ThresholdRecord, Bisection<R, Outcome<R>>), BisectError> {
    params
        .validate()
        .map_err(|e| BisectError::Parameter(e.to_string()))?;
    let classify = |a: &R, attempt: u32| {
        let mut p = params.clone();
        if attempt > 0 {
            p.s_max *= RETRY_S_MAX_FACTOR;
        }
        evolve(d, a, &p).map(|o| Probe {
            class: o.classification,
            s_end: o.s_end.to_decimal(),
            diagnostics: o.diagnostics.clone(),
            detail: o,
        })
    };
    let b = bisect(lo, hi, eps, max_parallel, classify)?;
    let rec = ThresholdRecord {
        d: d.get(),
        family: "sech".into(),
        bracket: [b.lo.to_decimal(), b.hi.to_decimal()],
        epsilon: (b.hi.clone() - &b.lo).to_decimal(),
        probes: b.probes.clone(),
        params: params.clone(),
        max_parallel,
    };
    Ok((rec, b))
}

#[derive(Debug, Clone, PartialEq, thiserror::Error, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BlowupTimeError {
    #[error("h has not settled (relative drift {drift:e} per unit s); run longer")]
    NotSettled { drift: f64 },
    #[error("trajectory shorter than the settling window")]
    TooShort,
}

/// T = t(s_end) + h(s_end)·e^(−s_end), provided h drifted by less than
/// `tol` (relative, per unit s) over the last `window` in s.
pub fn estimate_blowup_time<R: Real>(
    trajectory: &[TrajectoryPoint<R>],
    window: f64,
    tol: f64,
) -> Result<R, BlowupTimeError> {
    let drift = h_drift(trajectory, window).ok_or(BlowupTimeError::TooShort)?;
    if !(drift < tol) {
        return Err(BlowupTimeError::NotSettled { drift });
    }
    let last = trajectory.last().ok_or(BlowupTimeError::TooShort)?;
    Ok(last.t.clone() + last.h.clone() * (-last.s.clone()).exp())
}

/// (τ, ψ(τ,0)) along a run, with τ = −ln(T − t) and ψ = (T − t)·e^s·V(s,0).
/// Samples with t ≥ T are dropped.
pub fn psi_samples<R: Real>(trajectory: &[TrajectoryPoint<R>], big_t: &R) -> Vec<(f64, f64)> {
    trajectory
        .iter()
        .filter(|p| p.t < *big_t)
        .map(|p| {
            let gap = big_t.clone() - &p.t;
            let psi = gap.clone() * p.s.exp() * &p.v0;
            (-gap.ln().to_f64(), psi.to_f64())
        })
        .collect()
}

/// Refit with T ← T − a₀/c until the gauge term is negligible across the
/// window. A blowup time taken from one side of the threshold is off by
/// roughly e^(−τ) at departure for the other side, and the resulting e^τ
/// term otherwise closes the plateau window early.
pub fn fit_with_refined_time<R: Real>(
    trajectory: &[TrajectoryPoint<R>],
    big_t: &R,
    lambda1: f64,
    opts: &FitOptions,
    max_iterations: usize,
) -> Result<(R, ModeFit), FitError> {
    let mut t = big_t.clone();
    let mut fit = fit_modes(&psi_samples(trajectory, &t), lambda1, opts)?;
    for _ in 0..max_iterations {
        let shift = fit.a0 / fit.c;
        if (shift * fit.window[1].exp()).abs() < 1e-10 {
            break;
        }
        t -= R::from_f64(shift, &t.ctx());
        fit = fit_modes(&psi_samples(trajectory, &t), lambda1, opts)?;
    }
    Ok((t, fit))
}

#[derive(Debug, Clone, Serialize)]
pub struct SignReport {
    pub a1_sub: f64,
    pub a1_super: f64,
    pub opposite: bool,
    /// max |a1| of the pair.
    pub magnitude: f64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SignCheckError {
    #[error("the two fits are identical")]
    Degenerate,
}

/// a₁ should carry opposite signs on the two sides of the threshold.
pub fn sign_check(sub: &ModeFit, sup: &ModeFit) -> Result<SignReport, SignCheckError> {
    if sub == sup {
        return Err(SignCheckError::Degenerate);
    }
    Ok(SignReport {
        a1_sub: sub.a1,
        a1_super: sup.a1,
        opposite: sub.a1 * sup.a1 < 0.0,
        magnitude: sub.a1.abs().max(sup.a1.abs()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn step_classifier(threshold: f64) -> impl Fn(&f64, u32) -> Result<Probe<()>, String> + Sync {
        move |a: &f64, _| {
            Ok(Probe {
                class: if *a < threshold {
                    Classification::Subcritical
                } else {
                    Classification::Supercritical
                },
                s_end: "0".into(),
                diagnostics: None,
                detail: (),
            })
        }
    }

    #[test]
    fn bisection_brackets_a_step() {
        let b = bisect(1.0, 3.0, &1e-10, 1, step_classifier(1.7105726)).unwrap();
        assert!(b.lo < 1.7105726 && b.hi >= 1.7105726);
        assert!(b.hi - b.lo <= 1e-10);
        assert_eq!(b.lo_probe.class, Classification::Subcritical);
    }

    #[test]
    fn final_bracket_does_not_depend_on_parallelism() {
        let reference = bisect(1.5, 3.5, &1e-12, 1, step_classifier(2.335609125)).unwrap();
        for p in [2, 3, 7, 8, 64] {
            let b = bisect(1.5, 3.5, &1e-12, p, step_classifier(2.335609125)).unwrap();
            assert_eq!(b.lo.to_bits(), reference.lo.to_bits(), "{p}");
            assert_eq!(b.hi.to_bits(), reference.hi.to_bits(), "{p}");
        }
        assert_eq!(levels_per_round(1), 1);
        assert_eq!(levels_per_round(3), 2);
        assert_eq!(levels_per_round(64), 6);
    }

    #[test]
    fn wrong_endpoints_are_rejected() {
        let err = bisect(2.0, 3.0, &1e-6, 1, step_classifier(1.0)).unwrap_err();
        assert!(matches!(err, BisectError::Endpoint { .. }));
    }

    #[test]
    fn non_monotone_probes_carry_the_table() {
        let f = |a: &f64, _| -> Result<Probe<()>, String> {
            let sub = *a < 1.2 || (*a > 1.5 && *a < 1.8);
            Ok(Probe {
                class: if sub {
                    Classification::Subcritical
                } else {
                    Classification::Supercritical
                },
                s_end: "0".into(),
                diagnostics: None,
                detail: (),
            })
        };
        match bisect(1.0, 2.0, &1e-3, 7, f).unwrap_err() {
            BisectError::NonMonotone { probes, .. } => assert_eq!(probes.len(), 7),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn undecided_probes_are_retried_once() {
        let f = |a: &f64, attempt: u32| -> Result<Probe<()>, String> {
            let class = if attempt == 0 && (*a - 2.0).abs() < 1e-12 {
                Classification::Undecided
            } else if *a < 2.2 {
                Classification::Subcritical
            } else {
                Classification::Supercritical
            };
            Ok(Probe {
                class,
                s_end: "0".into(),
                diagnostics: None,
                detail: (),
            })
        };
        assert!(bisect(1.0, 3.0, &1e-6, 1, f).is_ok());
        let never = |_: &f64, _| -> Result<Probe<()>, String> {
            Ok(Probe {
                class: Classification::Undecided,
                s_end: "0".into(),
                diagnostics: Some("stuck".into()),
                detail: (),
            })
        };
        assert!(matches!(bisect(1.0, 3.0, &1e-6, 1, never), Err(BisectError::Undecided { .. })));
    }

    #[test]
    fn eps_below_resolution_is_rejected() {
        assert!(matches!(
            bisect(1.0, 3.0, &1e-20, 1, step_classifier(2.0)),
            Err(BisectError::Parameter(_))
        ));
    }

    #[test]
    fn blowup_time_closes_the_clock_integral() {
        use crate::evolution::ss::{Stepper, SsSystem, EvolutionState, StopReason};
        use crate::evolution::Grid;
        // h ≡ √2 from s = 0: T = t(s₀) + √2·e^(−s₀) = √2
        let g = Grid::new(32, 0.25f64);
        let stepper = Stepper::new(SsSystem::new(Dimension::new(7).unwrap(), g.clone(), &0.01), 0.01);
        let mut st = EvolutionState {
            v: vec![1.0; 32],
            p: vec![std::f64::consts::FRAC_1_SQRT_2; 32],
            s: 0.0,
            t: 0.0,
            h: std::f64::consts::SQRT_2,
            grid: g,
        };
        let mut trajectory = Vec::new();
        for n in 0..300 {
            st = stepper.step(&st, n).unwrap();
            trajectory.push(crate::evolution::ss::TrajectoryPoint {
                s: st.s,
                t: st.t,
                h: st.h,
                v0: st.v0(),
                p0: st.p0(),
            });
        }
        let out = Outcome {
            classification: Classification::Supercritical,
            reason: StopReason::OdeBlowupSettled,
            s_end: st.s,
            steps: 300,
            trajectory,
            snapshots: Vec::new(),
            final_state: st,
            diagnostics: None,
        };
        let t = estimate_blowup_time(&out.trajectory, 2.0, 1e-6).unwrap();
        assert!((t - std::f64::consts::SQRT_2).abs() < 1e-13);
        assert!(matches!(estimate_blowup_time(&out.trajectory, 5.0, 1e-6), Err(BlowupTimeError::TooShort)));
    }
}
