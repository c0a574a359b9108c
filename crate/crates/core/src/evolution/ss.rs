//! Evolution in self-adapting coordinates.
//!
//! With t = ∫₀ˢ e^(−σ)h(σ)dσ, r = e^(−s)y, V = e^(−s)u and P = e^(−2s)∂ₜu
//! the cubic wave equation becomes
//!
//! ```text
//! ∂ₛV = hP − V − y∂ᵧV
//! ∂ₛP = h(∂ᵧ²V + (d−1)/y ∂ᵧV + V³) − 2P − y∂ᵧP
//! ```
//!
//! and the gauge h = 1/P(s,0) freezes ∂ₜu at the origin in these units. ODE
//! blowup shows up as P(s,0) → 1/√2, self-similar blowup through U* as a
//! plateau at 1/U*(0), dispersion as P(s,0) falling towards zero.

use serde::{Deserialize, Serialize};

use super::{Grid, Operators, OuterBoundary, Rk6, Row};
use crate::profiles::Dimension;
use crate::real::{self, Real};

#[derive(Debug, Clone, PartialEq, thiserror::Error, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EvolutionError {
    #[error("gauge breakdown at s = {s}: P(s,0) = {p0}")]
    GaugeBreakdown { s: f64, p0: String },
    #[error("non-finite value at s = {s}, node {node}")]
    Instability { s: f64, node: usize },
    #[error("invalid parameter: {0}")]
    Parameter(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Supercritical,
    Subcritical,
    Undecided,
}

/// Why a run stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// P(s,0) stayed near 1/√2 for the sustain window.
    OdeBlowup,
    /// Same, then h(s) settled.
    OdeBlowupSettled,
    /// P(s,0) fell below p_min.
    BelowPmin,
    /// The gauge outran the time step while P(s,0) was falling steadily.
    GaugeBreakdown,
    /// Breakdown without a monotone fall of P(s,0).
    Breakdown,
    SMax,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SsParams {
    pub n_cells: usize,
    pub dy: f64,
    /// Fixed step; `None` picks cfl·dy/(y_max + h_design).
    pub ds: Option<f64>,
    pub cfl: f64,
    /// Largest gauge value the default step must accommodate.
    pub h_design: f64,
    pub eps_diss: f64,
    pub p_min: f64,
    pub tol_sup: f64,
    /// Length in s of the window over which P(s,0) must stay near 1/√2.
    pub sustain: f64,
    pub s_max: f64,
    pub snapshot_times: Vec<f64>,
    pub record_stride: usize,
    /// After classifying as supercritical, keep going until h(s) settles.
    pub settle: bool,
    /// Relative drift of h per unit s counted as settled.
    pub settle_tol: f64,
}

impl Default for SsParams {
    fn default() -> Self {
        SsParams {
            n_cells: 2048,
            dy: 1.0 / 64.0,
            ds: None,
            cfl: 0.5,
            h_design: 16.0,
            eps_diss: 0.01,
            p_min: 1e-3,
            tol_sup: 1e-3,
            sustain: 2.0,
            s_max: 40.0,
            snapshot_times: Vec::new(),
            record_stride: 1,
            settle: false,
            settle_tol: 1e-6,
        }
    }
}

impl SsParams {
    pub fn y_max(&self) -> f64 {
        self.n_cells as f64 * self.dy
    }

    pub fn step_size(&self) -> f64 {
        self.ds
            .unwrap_or(self.cfl * self.dy / (self.y_max() + self.h_design))
    }

    /// Largest h for which the step still satisfies the CFL bound.
    pub fn h_limit(&self) -> f64 {
        self.cfl * self.dy / self.step_size() - self.y_max()
    }

    pub fn validate(&self) -> Result<(), EvolutionError> {
        let bad = |m: &str| Err(EvolutionError::Parameter(m.to_string()));
        if self.n_cells < 16 {
            return bad("n_cells must be at least 16");
        }
        if !(self.dy > 0.0) || !self.dy.is_finite() {
            return bad("dy must be positive");
        }
        if !(self.step_size() > 0.0) {
            return bad("ds must be positive");
        }
        if self.h_limit() <= 0.0 {
            return bad("ds violates the CFL bound for every gauge value");
        }
        if !(self.eps_diss >= 0.0) || !(self.p_min > 0.0) || !(self.tol_sup > 0.0) {
            return bad("eps_diss, p_min and tol_sup must be non-negative/positive");
        }
        if !(self.s_max > 0.0) || !(self.sustain > 0.0) || self.record_stride == 0 {
            return bad("s_max, sustain and record_stride must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TrajectoryPoint<R: Real> {
    #[serde(with = "real::decimal")]
    pub s: R,
    #[serde(with = "real::decimal")]
    pub t: R,
    #[serde(with = "real::decimal")]
    pub h: R,
    #[serde(with = "real::decimal")]
    pub v0: R,
    #[serde(with = "real::decimal")]
    pub p0: R,
}

#[derive(Debug, Clone)]
pub struct Snapshot<R> {
    pub s: R,
    pub t: R,
    pub h: R,
    pub y: Vec<R>,
    pub v: Vec<R>,
    pub p: Vec<R>,
}

#[derive(Debug, Clone)]
pub struct EvolutionState<R: Real> {
    pub grid: Grid<R>,
    pub v: Vec<R>,
    pub p: Vec<R>,
    pub s: R,
    pub t: R,
    pub h: R,
}

impl<R: Real> EvolutionState<R> {
    pub fn v0(&self) -> R {
        self.grid.origin_value(&self.v)
    }

    pub fn p0(&self) -> R {
        self.grid.origin_value(&self.p)
    }
}

#[derive(Debug, Clone)]
pub struct Outcome<R: Real> {
    pub classification: Classification,
    pub reason: StopReason,
    pub s_end: R,
    pub steps: usize,
    pub trajectory: Vec<TrajectoryPoint<R>>,
    pub snapshots: Vec<Snapshot<R>>,
    pub final_state: EvolutionState<R>,
    pub diagnostics: Option<String>,
}

impl<R: Real> Outcome<R> {
    /// Relative drift of h per unit s over the trailing window of length
    /// `window`, if the trajectory covers it.
    pub fn h_drift(&self, window: f64) -> Option<f64> {
        h_drift(&self.trajectory, window)
    }
}

/// Relative drift of h per unit s over the trailing window of length
/// `window`, if the trajectory covers it.
pub fn h_drift<R: Real>(trajectory: &[TrajectoryPoint<R>], window: f64) -> Option<f64> {
    let last = trajectory.last()?;
    let s_end = last.s.to_f64();
    let earlier = trajectory.iter().rev().find(|p| s_end - p.s.to_f64() >= window)?;
    let dh = (last.h.clone() - &earlier.h).abs() / &last.h;
    Some(dh.to_f64() / (s_end - earlier.s.to_f64()))
}

/// V = P = a/cosh(y) at every node.
pub fn initial_data<R: Real>(a: &R, grid: Grid<R>) -> Result<EvolutionState<R>, EvolutionError> {
    if !(a.sign() > 0) {
        return Err(EvolutionError::Parameter("amplitude must be positive".into()));
    }
    let field: Vec<R> = grid
        .nodes
        .iter()
        .map(|y| {
            let e = (-y.clone()).exp();
            a.clone().mul_int(2) * &e / (R::one(&a.ctx()) + e.square())
        })
        .collect();
    let p0 = grid.origin_value(&field);
    Ok(EvolutionState {
        h: R::one(&a.ctx()) / p0,
        v: field.clone(),
        p: field,
        s: a.int(0),
        t: a.int(0),
        grid,
    })
}

/// Right-hand side for a fixed dimension and grid. Per node, the parts
/// linear in V and P are merged into single rows.
pub struct SsSystem<R: Real> {
    d: i64,
    grid: Grid<R>,
    /// −V − y∂ᵧV − dissipation
    lin_v: Vec<Row<R>>,
    /// ∂ᵧ² + (d−1)/y ∂ᵧ
    wave: Vec<Row<R>>,
    /// −2P − y∂ᵧP − dissipation
    lin_p: Vec<Row<R>>,
}

impl<R: Real> SsSystem<R> {
    pub fn new(d: Dimension, grid: Grid<R>, eps_diss: &R) -> Self {
        let ops = Operators::new(grid.n, &grid.dy, OuterBoundary::OneSided, eps_diss);
        let one = R::one(&grid.dy.ctx());
        let mut lin_v = Vec::with_capacity(grid.n);
        let mut wave = Vec::with_capacity(grid.n);
        let mut lin_p = Vec::with_capacity(grid.n);
        for (j, y) in grid.nodes.iter().enumerate() {
            let unit = Row::unit(j, one.clone());
            lin_v.push(Row::combine(&[
                (-one.clone(), &unit),
                (-y.clone(), &ops.d1[j]),
                (-one.clone(), &ops.diss[j]),
            ]));
            lin_p.push(Row::combine(&[
                (one.int(-2), &unit),
                (-y.clone(), &ops.d1[j]),
                (-one.clone(), &ops.diss[j]),
            ]));
            wave.push(Row::combine(&[
                (one.clone(), &ops.d2[j]),
                (y.int(d.get() - 1) / y, &ops.d1[j]),
            ]));
        }
        SsSystem {
            d: d.get(),
            grid,
            lin_v,
            wave,
            lin_p,
        }
    }

    pub fn grid(&self) -> &Grid<R> {
        &self.grid
    }

    pub fn dimension(&self) -> i64 {
        self.d
    }

    /// Gauge value for the given P field.
    pub fn gauge(&self, s: &R, p: &[R]) -> Result<R, EvolutionError> {
        let p0 = self.grid.origin_value(p);
        if !(p0.sign() > 0) || !p0.is_finite() {
            return Err(EvolutionError::GaugeBreakdown {
                s: s.to_f64(),
                p0: p0.to_decimal(),
            });
        }
        Ok(R::one(&p0.ctx()) / p0)
    }

    /// (∂ₛV, ∂ₛP) into `dv`, `dp`; returns h.
    pub fn rhs(&self, s: &R, v: &[R], p: &[R], dv: &mut [R], dp: &mut [R]) -> Result<R, EvolutionError> {
        let h = self.gauge(s, p)?;
        for j in 0..self.grid.n {
            let vj = &v[j];
            let cube = vj.clone() * vj * vj;
            dv[j] = h.clone() * &p[j] + self.lin_v[j].apply(v);
            dp[j] = h.clone() * (self.wave[j].apply(v) + cube) + self.lin_p[j].apply(p);
        }
        Ok(h)
    }
}

/// Fixed-step integrator for one run.
pub struct Stepper<R: Real> {
    system: SsSystem<R>,
    rk: Rk6<R>,
    ds: R,
}

impl<R: Real> Stepper<R> {
    pub fn new(system: SsSystem<R>, ds: R) -> Self {
        let rk = Rk6::new(&ds.ctx());
        Stepper { system, rk, ds }
    }

    pub fn system(&self) -> &SsSystem<R> {
        &self.system
    }

    /// Advance by one step from s = n·ds.
    pub fn step(&self, state: &EvolutionState<R>, n: u64) -> Result<EvolutionState<R>, EvolutionError> {
        let m = self.system.grid.n;
        let s = self.ds.clone().mul_int(n as i64);
        let mut y = Vec::with_capacity(2 * m + 1);
        y.extend_from_slice(&state.v);
        y.extend_from_slice(&state.p);
        y.push(state.t.clone());
        let sys = &self.system;
        let out = self.rk.step(&s, &y, &self.ds, |si, yi, ki| {
            let (v, rest) = yi.split_at(m);
            let p = &rest[..m];
            let (dv, rest) = ki.split_at_mut(m);
            let (dp, dt) = rest.split_at_mut(m);
            let h = sys.rhs(si, v, p, dv, dp)?;
            dt[0] = (-si.clone()).exp() * h;
            Ok(())
        })?;
        let s_next = self.ds.clone().mul_int(n as i64 + 1);
        if let Some(node) = out.iter().position(|x| !x.is_finite()) {
            return Err(EvolutionError::Instability {
                s: s_next.to_f64(),
                node: node % m,
            });
        }
        let v = out[..m].to_vec();
        let p = out[m..2 * m].to_vec();
        let t = out[2 * m].clone();
        let h = sys.gauge(&s_next, &p)?;
        Ok(EvolutionState {
            grid: state.grid.clone(),
            v,
            p,
            s: s_next,
            t,
            h,
        })
    }
}

/// Value of P(s,0) where its current uninterrupted fall began.
struct FallTracker {
    prev: f64,
    start: f64,
    from_outset: bool,
}

impl FallTracker {
    fn update(&mut self, p0: f64) {
        if !(p0 < self.prev) {
            self.start = p0;
            self.from_outset = false;
        }
        self.prev = p0;
    }

    /// P(s,0) has fallen at every step since s = 0, or has at least halved
    /// without interruption.
    fn falling(&self) -> bool {
        self.from_outset || self.prev <= 0.5 * self.start
    }
}

/// Run the evolution for dimension `d` from the family a/cosh(y).
pub fn evolve<R: Real>(d: Dimension, a: &R, params: &SsParams) -> Result<Outcome<R>, EvolutionError> {
    params.validate()?;
    let ctx = a.ctx();
    let dy = R::from_f64(params.dy, &ctx);
    let grid = Grid::new(params.n_cells, dy);
    let state = initial_data(a, grid.clone())?;
    let eps = R::from_f64(params.eps_diss, &ctx);
    let ds_f = params.step_size();
    let stepper = Stepper::new(SsSystem::new(d, grid, &eps), R::from_f64(ds_f, &ctx));
    run(&stepper, state, params)
}

fn record<R: Real>(state: &EvolutionState<R>) -> TrajectoryPoint<R> {
    TrajectoryPoint {
        s: state.s.clone(),
        t: state.t.clone(),
        h: state.h.clone(),
        v0: state.v0(),
        p0: state.p0(),
    }
}

fn snapshot<R: Real>(state: &EvolutionState<R>) -> Snapshot<R> {
    Snapshot {
        s: state.s.clone(),
        t: state.t.clone(),
        h: state.h.clone(),
        y: state.grid.nodes.clone(),
        v: state.v.clone(),
        p: state.p.clone(),
    }
}

fn run<R: Real>(stepper: &Stepper<R>, mut state: EvolutionState<R>, params: &SsParams) -> Result<Outcome<R>, EvolutionError> {
    let ds = params.step_size();
    let h_limit = params.h_limit();
    let target = std::f64::consts::FRAC_1_SQRT_2;
    let max_steps = (params.s_max / ds).ceil() as u64;
    let mut snap_times: Vec<f64> = params.snapshot_times.clone();
    snap_times.sort_by(|a, b| a.partial_cmp(b).expect("finite snapshot times"));
    let mut snap_idx = 0;
    let mut snapshots = Vec::new();
    let mut trajectory = vec![record(&state)];
    let mut fall = FallTracker {
        prev: state.p0().to_f64(),
        start: state.p0().to_f64(),
        from_outset: true,
    };
    if state.h.to_f64() > h_limit {
        return Err(EvolutionError::Parameter(format!(
            "initial gauge h = {} exceeds the CFL limit {h_limit}; reduce ds",
            state.h.to_f64()
        )));
    }
    let mut near_since: Option<f64> = None;
    let mut classified = false;
    let mut n = 0u64;

    let finish = |classification, reason, state: EvolutionState<R>, mut trajectory: Vec<TrajectoryPoint<R>>, snapshots, n: u64, diagnostics: Option<String>| {
        let last = record(&state);
        if trajectory.last().map(|p: &TrajectoryPoint<R>| p.s != last.s).unwrap_or(true) {
            trajectory.push(last);
        }
        Ok(Outcome {
            classification,
            reason,
            s_end: state.s.clone(),
            steps: n as usize,
            trajectory,
            snapshots,
            final_state: state,
            diagnostics,
        })
    };

    while n < max_steps {
        while snap_idx < snap_times.len() && snap_times[snap_idx] <= n as f64 * ds + 1e-12 {
            snapshots.push(snapshot(&state));
            snap_idx += 1;
        }
        let next = match stepper.step(&state, n) {
            Ok(s) => s,
            Err(EvolutionError::Parameter(m)) => return Err(EvolutionError::Parameter(m)),
            Err(e) => {
                let (class, reason) = if fall.falling() {
                    (Classification::Subcritical, StopReason::GaugeBreakdown)
                } else {
                    (Classification::Undecided, StopReason::Breakdown)
                };
                return finish(class, reason, state, trajectory, snapshots, n, Some(e.to_string()));
            }
        };
        n += 1;
        state = next;
        let s_f = n as f64 * ds;
        let p0 = state.p0().to_f64();
        fall.update(p0);
        if n % params.record_stride as u64 == 0 {
            trajectory.push(record(&state));
        }

        if !classified {
            if p0 < params.p_min {
                return finish(Classification::Subcritical, StopReason::BelowPmin, state, trajectory, snapshots, n, None);
            }
            if state.h.to_f64() > h_limit {
                let (class, reason) = if fall.falling() {
                    (Classification::Subcritical, StopReason::GaugeBreakdown)
                } else {
                    (Classification::Undecided, StopReason::Breakdown)
                };
                let diag = format!("h = {} exceeds the CFL limit {h_limit} at s = {s_f}", state.h.to_f64());
                return finish(class, reason, state, trajectory, snapshots, n, Some(diag));
            }
            if (p0 - target).abs() < params.tol_sup {
                let since = *near_since.get_or_insert(s_f);
                if s_f - since >= params.sustain - 1e-12 {
                    if !params.settle {
                        return finish(Classification::Supercritical, StopReason::OdeBlowup, state, trajectory, snapshots, n, None);
                    }
                    classified = true;
                }
            } else {
                near_since = None;
            }
        } else if n % params.record_stride as u64 == 0 {
            if settled(&trajectory, params) {
                return finish(Classification::Supercritical, StopReason::OdeBlowupSettled, state, trajectory, snapshots, n, None);
            }
        }
    }
    let class = if classified {
        Classification::Supercritical
    } else {
        Classification::Undecided
    };
    let reason = if classified { StopReason::OdeBlowup } else { StopReason::SMax };
    finish(class, reason, state, trajectory, snapshots, n, None)
}

fn settled<R: Real>(trajectory: &[TrajectoryPoint<R>], params: &SsParams) -> bool {
    h_drift(trajectory, params.sustain).is_some_and(|d| d < params.settle_tol)
}
