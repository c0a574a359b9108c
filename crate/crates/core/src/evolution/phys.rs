//! Evolution of ∂ₜ²u = ∂ᵣ²u + (d−1)/r ∂ᵣu + u³ in physical coordinates.
//!
//! Same discretization as the self-similar engine. Instead of a boundary
//! condition the domain is made large enough that nothing reaches its edge
//! before `t_end`; values beyond the last node are taken as zero.

use serde::{Deserialize, Serialize};

use super::ss::EvolutionError;
use super::{Grid, Operators, OuterBoundary, Rk6, Row};
use crate::profiles::Dimension;
use crate::real::{self, Real};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhysParams {
    pub n_cells: usize,
    pub dr: f64,
    /// Fixed step; `None` picks cfl·dr.
    pub dt: Option<f64>,
    pub cfl: f64,
    pub eps_diss: f64,
    pub t_end: f64,
    /// |u(t,0)| above this halts the run with the blowup flag.
    pub ceiling: f64,
    pub snapshot_times: Vec<f64>,
    pub record_stride: usize,
}

impl Default for PhysParams {
    fn default() -> Self {
        PhysParams::sized(100.0, 1.0 / 16.0, 40.0)
    }
}

impl PhysParams {
    /// Grid reaching r_max = t_end + support + 5.
    pub fn sized(t_end: f64, dr: f64, support: f64) -> Self {
        PhysParams {
            n_cells: ((t_end + support + 5.0) / dr).ceil() as usize,
            dr,
            dt: None,
            cfl: 0.5,
            eps_diss: 0.01,
            t_end,
            ceiling: 1e6,
            snapshot_times: Vec::new(),
            record_stride: 1,
        }
    }

    pub fn r_max(&self) -> f64 {
        self.n_cells as f64 * self.dr
    }

    pub fn step_size(&self) -> f64 {
        self.dt.unwrap_or(self.cfl * self.dr)
    }

    pub fn validate(&self) -> Result<(), EvolutionError> {
        let bad = |m: &str| Err(EvolutionError::Parameter(m.to_string()));
        if self.n_cells < 16 || !(self.dr > 0.0) {
            return bad("need at least 16 cells of positive width");
        }
        if !(self.step_size() > 0.0) || self.step_size() > self.dr {
            return bad("dt must be positive and at most dr");
        }
        if !(self.t_end >= 0.0) || self.t_end >= self.r_max() {
            return bad("t_end must be non-negative and below r_max");
        }
        if !(self.eps_diss >= 0.0) || !(self.ceiling > 0.0) || self.record_stride == 0 {
            return bad("eps_diss, ceiling and record_stride out of range");
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct PhysState<R: Real> {
    pub grid: Grid<R>,
    pub u: Vec<R>,
    pub ut: Vec<R>,
    pub t: R,
}

impl<R: Real> PhysState<R> {
    pub fn r_max(&self) -> R {
        self.grid.y_max()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PhysPoint<R: Real> {
    #[serde(with = "real::decimal")]
    pub t: R,
    #[serde(with = "real::decimal")]
    pub u0: R,
    #[serde(with = "real::decimal")]
    pub ut0: R,
}

#[derive(Debug, Clone)]
pub struct PhysSnapshot<R> {
    pub t: R,
    pub r: Vec<R>,
    pub u: Vec<R>,
    pub ut: Vec<R>,
}

#[derive(Debug, Clone)]
pub struct PhysRun<R: Real> {
    pub trajectory: Vec<PhysPoint<R>>,
    pub snapshots: Vec<PhysSnapshot<R>>,
    pub blowup: bool,
    pub final_state: PhysState<R>,
}

/// u = ∂ₜu = a/cosh(r): the self-similar engine's data at s = t = 0, where
/// r = y.
pub fn from_computational<R: Real>(a: &R, grid: Grid<R>) -> PhysState<R> {
    let one = R::one(&a.ctx());
    let u: Vec<R> = grid
        .nodes
        .iter()
        .map(|r| {
            let e = (-r.clone()).exp();
            a.clone().mul_int(2) * &e / (one.clone() + e.square())
        })
        .collect();
    PhysState {
        ut: u.clone(),
        u,
        t: a.int(0),
        grid,
    }
}

pub struct PhysSystem<R: Real> {
    grid: Grid<R>,
    /// ∂ᵣ² + (d−1)/r ∂ᵣ
    wave: Vec<Row<R>>,
    diss: Vec<Row<R>>,
}

impl<R: Real> PhysSystem<R> {
    pub fn new(d: Dimension, grid: Grid<R>, eps_diss: &R) -> Self {
        let ops = Operators::new(grid.n, &grid.dy, OuterBoundary::ZeroGhost, eps_diss);
        let one = R::one(&grid.dy.ctx());
        let wave = grid
            .nodes
            .iter()
            .enumerate()
            .map(|(j, r)| Row::combine(&[(one.clone(), &ops.d2[j]), (r.int(d.get() - 1) / r, &ops.d1[j])]))
            .collect();
        PhysSystem {
            grid,
            wave,
            diss: ops.diss,
        }
    }

    pub fn rhs(&self, u: &[R], ut: &[R], du: &mut [R], dut: &mut [R]) {
        for j in 0..self.grid.n {
            let uj = &u[j];
            du[j] = ut[j].clone() - self.diss[j].apply(u);
            dut[j] = self.wave[j].apply(u) + uj.clone() * uj * uj - self.diss[j].apply(ut);
        }
    }

    /// Energy of the free equation, Σ (∂ₜu² + ∂ᵣu²)/2 · r^(d−1) dr.
    pub fn linear_energy(&self, d: Dimension, u: &[R], ut: &[R]) -> R {
        let ops = Operators::new(self.grid.n, &self.grid.dy, OuterBoundary::ZeroGhost, &self.grid.dy.int(0));
        let mut acc = self.grid.dy.int(0);
        for (j, r) in self.grid.nodes.iter().enumerate() {
            let ur = ops.d1[j].apply(u);
            acc += (ut[j].square() + ur.square()) * r.powi((d.get() - 1) as u32);
        }
        acc * &self.grid.dy / self.grid.dy.int(2)
    }
}

pub fn evolve_phys<R: Real>(
    d: Dimension,
    state: PhysState<R>,
    params: &PhysParams,
) -> Result<PhysRun<R>, EvolutionError> {
    params.validate()?;
    let ctx = state.t.ctx();
    let system = PhysSystem::new(d, state.grid.clone(), &R::from_f64(params.eps_diss, &ctx));
    let rk = Rk6::new(&ctx);
    let dt_f = params.step_size();
    let dt = R::from_f64(dt_f, &ctx);
    let n = state.grid.n;
    let steps = (params.t_end / dt_f).round() as u64;
    let mut snap_times = params.snapshot_times.clone();
    snap_times.sort_by(|a, b| a.partial_cmp(b).expect("finite snapshot times"));
    let mut snap_idx = 0;

    let point = |st: &PhysState<R>| PhysPoint {
        t: st.t.clone(),
        u0: st.grid.origin_value(&st.u),
        ut0: st.grid.origin_value(&st.ut),
    };
    let snap = |st: &PhysState<R>| PhysSnapshot {
        t: st.t.clone(),
        r: st.grid.nodes.clone(),
        u: st.u.clone(),
        ut: st.ut.clone(),
    };
    let mut trajectory = vec![point(&state)];
    let mut snapshots = Vec::new();
    let mut st = state;
    let mut blowup = false;
    let mut y: Vec<R> = Vec::with_capacity(2 * n);
    for k in 0..steps {
        while snap_idx < snap_times.len() && snap_times[snap_idx] <= k as f64 * dt_f + 1e-12 {
            snapshots.push(snap(&st));
            snap_idx += 1;
        }
        y.clear();
        y.extend_from_slice(&st.u);
        y.extend_from_slice(&st.ut);
        let t0 = dt.clone().mul_int(k as i64);
        let out = rk.step(&t0, &y, &dt, |_, yi, ki| -> Result<(), EvolutionError> {
            let (u, ut) = yi.split_at(n);
            let (du, dut) = ki.split_at_mut(n);
            system.rhs(u, ut, du, dut);
            Ok(())
        })?;
        let t1 = dt.clone().mul_int(k as i64 + 1);
        if let Some(node) = out.iter().position(|x| !x.is_finite()) {
            return Err(EvolutionError::Instability {
                s: t1.to_f64(),
                node: node % n,
            });
        }
        st.u = out[..n].to_vec();
        st.ut = out[n..].to_vec();
        st.t = t1;
        let p = point(&st);
        let high = p.u0.abs().to_f64() > params.ceiling;
        if (k + 1) % params.record_stride as u64 == 0 || high || k + 1 == steps {
            trajectory.push(p);
        }
        if high {
            blowup = true;
            break;
        }
    }
    while !blowup && snap_idx < snap_times.len() && snap_times[snap_idx] <= params.t_end + 1e-12 {
        snapshots.push(snap(&st));
        snap_idx += 1;
    }
    Ok(PhysRun {
        trajectory,
        snapshots,
        blowup,
        final_state: st,
    })
}

/// Upper envelope of |u(t,0)| on [t_lo, t_hi]: the samples whose |u|
/// exceeds every later one. On an oscillating tail these sit at and just
/// after the successive maxima; on a monotone one they are all samples. Zero
/// crossings never qualify.
pub fn envelope<R: Real>(trajectory: &[PhysPoint<R>], t_lo: f64, t_hi: f64) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64)> = Vec::new();
    let mut running = 0.0f64;
    for p in trajectory.iter().rev() {
        let t = p.t.to_f64();
        if t > t_hi {
            continue;
        }
        if t < t_lo {
            break;
        }
        let a = p.u0.abs().to_f64();
        if a > running {
            running = a;
            out.push((t, a));
        }
    }
    out.reverse();
    out
}

/// Least-squares slope of log envelope against log t on [t_lo, t_hi],
/// sampled at `samples` points equally spaced in log t. `None` if the
/// window holds fewer than three usable samples.
pub fn decay_exponent<R: Real>(trajectory: &[PhysPoint<R>], t_lo: f64, t_hi: f64) -> Option<f64> {
    const SAMPLES: usize = 64;
    let env = envelope(trajectory, t_lo, t_hi);
    if env.len() < 3 || !(t_lo > 0.0) {
        return None;
    }
    let (l0, l1) = (t_lo.ln(), t_hi.ln());
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut k = 0;
    for i in 0..SAMPLES {
        let target = l0 + (l1 - l0) * i as f64 / (SAMPLES - 1) as f64;
        while k + 1 < env.len() && env[k].0.ln() < target {
            k += 1;
        }
        let (t, a) = env[k];
        if a > 0.0 && xs.last().map_or(true, |&x| t.ln() > x) {
            xs.push(t.ln());
            ys.push(a.ln());
        }
    }
    if xs.len() < 3 {
        return None;
    }
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    Some(sxy / sxx)
}

#[derive(Debug, Clone, Serialize)]
pub struct SelfSimilarFrame<R: Real> {
    #[serde(rename = "T", with = "real::decimal")]
    pub big_t: R,
    pub tau: Vec<R>,
    pub rho: Vec<R>,
    /// psi[i][k] at (tau[i], rho[k]).
    pub psi: Vec<Vec<R>>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FrameError {
    #[error("T must exceed every sampled time")]
    BlowupTimeTooEarly,
    #[error("tau = {tau} lies outside the run")]
    TauOutOfRange { tau: f64 },
    #[error("rho must lie in [0, 1]")]
    RhoOutOfRange,
    #[error("need at least 7 snapshots")]
    TooFewSnapshots,
}

/// Start of the 7-point window of ascending `xs` centred on `x`.
fn window7<R: Real>(xs: &[R], x: &R) -> usize {
    let below = xs.partition_point(|p| p < x);
    below.saturating_sub(3).min(xs.len().saturating_sub(7))
}

fn lagrange<R: Real>(px: &[R], py: &[R], x: &R) -> R {
    let mut acc = x.int(0);
    for i in 0..px.len() {
        let mut w = x.int(1);
        for k in 0..px.len() {
            if k != i {
                w *= (x.clone() - &px[k]) / (px[i].clone() - &px[k]);
            }
        }
        acc += w * &py[i];
    }
    acc
}

/// Lagrange interpolation at `x` through the 7 points of (xs, ys) nearest
/// to it; xs ascending. With `even`, mirror images of the leading points
/// join the table (even functions sampled on x > 0).
pub fn lagrange7<R: Real>(xs: &[R], ys: &[R], x: &R, even: bool) -> R {
    if even {
        let k = xs.len().min(7);
        let mut px: Vec<R> = xs[..k].iter().rev().map(|v| -v.clone()).collect();
        let mut py: Vec<R> = ys[..k].iter().rev().cloned().collect();
        let lo = window7(xs, x);
        if lo < 7 {
            px.extend_from_slice(&xs[..(lo + 7).min(xs.len())]);
            py.extend_from_slice(&ys[..(lo + 7).min(ys.len())]);
            let l = window7(&px, x);
            let h = (l + 7).min(px.len());
            return lagrange(&px[l..h], &py[l..h], x);
        }
    }
    let l = window7(xs, x);
    let h = (l + 7).min(xs.len());
    lagrange(&xs[l..h], &ys[l..h], x)
}

/// ψ(τ,ρ) = e^(−τ)·u(T − e^(−τ), e^(−τ)ρ) from the run's snapshots, by
/// 7-point Lagrange interpolation in t and r.
pub fn to_self_similar<R: Real>(
    snapshots: &[PhysSnapshot<R>],
    big_t: &R,
    tau: &[R],
    rho: &[R],
) -> Result<SelfSimilarFrame<R>, FrameError> {
    if snapshots.len() < 7 {
        return Err(FrameError::TooFewSnapshots);
    }
    if snapshots.iter().any(|s| s.t >= *big_t) {
        return Err(FrameError::BlowupTimeTooEarly);
    }
    let one = R::one(&big_t.ctx());
    if rho.iter().any(|r| r.sign() < 0 || *r > one) {
        return Err(FrameError::RhoOutOfRange);
    }
    let times: Vec<R> = snapshots.iter().map(|s| s.t.clone()).collect();
    let mut psi = Vec::with_capacity(tau.len());
    for ta in tau {
        let scale = (-ta.clone()).exp();
        let t = big_t.clone() - &scale;
        if t < times[0] || t > *times.last().expect("non-empty") {
            return Err(FrameError::TauOutOfRange { tau: ta.to_f64() });
        }
        let l = window7(&times, &t);
        let h = (l + 7).min(times.len());
        let mut row = Vec::with_capacity(rho.len());
        for r in rho {
            let x = scale.clone() * r;
            let at_times: Vec<R> = snapshots[l..h].iter().map(|s| lagrange7(&s.r, &s.u, &x, true)).collect();
            row.push(scale.clone() * lagrange(&times[l..h], &at_times, &t));
        }
        psi.push(row);
    }
    Ok(SelfSimilarFrame {
        big_t: big_t.clone(),
        tau: tau.to_vec(),
        rho: rho.to_vec(),
        psi,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolution::ss;
    use crate::profiles::u_star;

    fn dim(d: i64) -> Dimension {
        Dimension::new(d).unwrap()
    }

    #[test]
    fn data_match_the_self_similar_engine() {
        let g = Grid::new(200, 0.1f64);
        let p = from_computational(&2.3, g.clone());
        let s = ss::initial_data(&2.3, g).unwrap();
        assert_eq!(p.u, s.v);
        assert_eq!(p.ut, s.p);
    }

    #[test]
    fn zero_data_stay_zero() {
        let params = PhysParams::sized(2.0, 0.125, 5.0);
        let st = from_computational(&1.0f64, Grid::new(params.n_cells, 0.125));
        let zero = PhysState {
            u: vec![0.0; st.u.len()],
            ut: vec![0.0; st.u.len()],
            ..st
        };
        let run = evolve_phys(dim(7), zero, &params).unwrap();
        assert!(run.final_state.u.iter().chain(&run.final_state.ut).all(|x| *x == 0.0));
    }

    #[test]
    fn free_energy_is_conserved_in_the_linear_regime() {
        let dr = 1.0 / 16.0;
        let params = PhysParams::sized(5.0, dr, 40.0);
        let st = from_computational(&1e-6f64, Grid::new(params.n_cells, dr));
        let sys = PhysSystem::new(dim(7), st.grid.clone(), &0.0);
        let e0 = sys.linear_energy(dim(7), &st.u, &st.ut);
        let run = evolve_phys(dim(7), st, &params).unwrap();
        let f = &run.final_state;
        let e1 = sys.linear_energy(dim(7), &f.u, &f.ut);
        assert!(((e1 - e0) / e0).abs() < 1e-8, "{}", (e1 - e0) / e0);
    }

    // u = e^(−r²), u_t = cos(r)e^(−r²)
    fn manufactured_error(dr: f64) -> f64 {
        let n = (8.0 / dr) as usize;
        let g = Grid::new(n, dr);
        let u: Vec<f64> = g.nodes.iter().map(|r| (-r * r).exp()).collect();
        let ut: Vec<f64> = g.nodes.iter().map(|r| r.cos() * (-r * r).exp()).collect();
        let sys = PhysSystem::new(dim(5), g.clone(), &0.01);
        let (mut du, mut dut) = (vec![0.0; n], vec![0.0; n]);
        sys.rhs(&u, &ut, &mut du, &mut dut);
        let mut err: f64 = 0.0;
        for (j, r) in g.nodes.iter().enumerate() {
            let e = (-r * r).exp();
            let lap = (4.0 * r * r - 2.0) * e - 2.0 * 4.0 * e;
            err = err.max((du[j] - r.cos() * e).abs()).max((dut[j] - lap - e * e * e).abs());
        }
        err
    }

    #[test]
    fn right_hand_side_is_sixth_order() {
        let e: Vec<f64> = [0.125, 0.0625, 0.03125].iter().map(|&h| manufactured_error(h)).collect();
        for w in e.windows(2) {
            assert!((48.0..=80.0).contains(&(w[0] / w[1])), "{e:?}");
        }
    }

    fn u0_after(dt: f64) -> f64 {
        let mut params = PhysParams::sized(1.0, 0.25, 10.0);
        params.dt = Some(dt);
        let st = from_computational(&1.0f64, Grid::new(params.n_cells, 0.25));
        let run = evolve_phys(dim(5), st, &params).unwrap();
        run.trajectory.last().unwrap().u0
    }

    #[test]
    fn time_stepping_is_sixth_order() {
        let reference = u0_after(0.2 / 16.0);
        let e: Vec<f64> = [0.2, 0.1, 0.05].iter().map(|&dt| (u0_after(dt) - reference).abs()).collect();
        for w in e.windows(2) {
            assert!((48.0..=80.0).contains(&(w[0] / w[1])), "{e:?}");
        }
    }

    #[test]
    fn self_similar_solution_maps_to_its_profile() {
        let d = dim(7);
        let r: Vec<f64> = (0..400).map(|j| (j as f64 + 0.5) / 64.0).collect();
        let snapshots: Vec<PhysSnapshot<f64>> = (0..40)
            .map(|k| {
                let t = 0.5 + k as f64 * 0.01;
                let u = r.iter().map(|x| u_star(d, &(x / (1.0 - t))).unwrap() / (1.0 - t)).collect();
                PhysSnapshot {
                    t,
                    r: r.clone(),
                    u,
                    ut: vec![0.0; r.len()],
                }
            })
            .collect();
        let tau = vec![0.8, 1.0, 1.2];
        let rho = vec![0.0, 0.25, 0.5, 1.0];
        let frame = to_self_similar(&snapshots, &1.0, &tau, &rho).unwrap();
        for row in &frame.psi {
            for (k, v) in row.iter().enumerate() {
                assert!((v - u_star(d, &rho[k]).unwrap()).abs() < 1e-7, "{v}");
            }
        }
        assert_eq!(
            to_self_similar(&snapshots, &0.6, &tau, &rho).unwrap_err(),
            FrameError::BlowupTimeTooEarly
        );
        assert!(matches!(
            to_self_similar(&snapshots, &1.0, &[5.0], &rho),
            Err(FrameError::TauOutOfRange { .. })
        ));
    }

    #[test]
    fn envelope_fit_recovers_a_power_law() {
        let trajectory: Vec<PhysPoint<f64>> = (1..20000)
            .map(|k| {
                let t = k as f64 * 0.01;
                PhysPoint {
                    t,
                    u0: t.powf(-8.0) * (1.0 + 0.5 * (3.0 * t).cos()),
                    ut0: 0.0,
                }
            })
            .collect();
        let p = decay_exponent(&trajectory, 20.0, 199.0).unwrap();
        assert!((p + 8.0).abs() < 0.05, "{p}");
    }

    #[test]
    fn nothing_outruns_the_light_cone() {
        let dr = 0.125;
        let params = PhysParams::sized(3.0, dr, 80.0);
        let st = from_computational(&1.0f64, Grid::new(params.n_cells, dr));
        let run = evolve_phys(dim(7), st, &params).unwrap();
        let f = &run.final_state;
        // a/cosh(r) < 1e-30 beyond R = 70
        for (r, u) in f.grid.nodes.iter().zip(&f.u) {
            if *r > 70.0 + 3.0 {
                assert!(u.abs() < 1e-20);
            }
        }
    }

    #[test]
    fn supercritical_data_trip_the_ceiling() {
        let dr = 1.0 / 16.0;
        let params = PhysParams::sized(3.0, dr, 40.0);
        let st = from_computational(&3.0f64, Grid::new(params.n_cells, dr));
        let run = evolve_phys(dim(7), st, &params).unwrap();
        assert!(run.blowup);
    }
}
