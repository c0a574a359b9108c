use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use critlab_core::evolution::phys::{self, decay_exponent, envelope, evolve_phys, from_computational, PhysParams};
use critlab_core::evolution::ss::{evolve, Classification, SsParams, StopReason, TrajectoryPoint};
use critlab_core::evolution::Grid;
use critlab_core::profiles::{u_star, u_star_origin, Dimension};
use critlab_core::real::{with_digits, Real, RealTask};
use critlab_core::spectrum::cf::{find_cf_eigenvalues, heun_cf_eigenvalues, CfParams, Tail};
use critlab_core::spectrum::shoot::{find_eigenvalues, ShootParams};
use critlab_core::threshold::{
    bisect_ss, estimate_blowup_time, fit_modes, fit_with_refined_time, psi_samples, sign_check, FitOptions, ModeFit,
    SignReport, ThresholdRecord,
};

use crate::config::*;
use crate::output::{downsample, read_csv, read_manifest, RunDir};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{message}")]
    Engine { message: String, payload: Value },
    /// The engine ran but could not decide: an undecided probe, an
    /// unsettled gauge or a fit without a usable plateau.
    #[error("{message}")]
    Inconclusive { message: String, payload: Value },
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Engine { .. } => 3,
            CliError::Inconclusive { .. } => 4,
            CliError::Io(_) => 1,
        }
    }
}

const INCONCLUSIVE: &[&str] = &["undecided", "not_settled", "too_short", "no_plateau", "rank_deficient", "no_convergence"];

fn engine<E: std::fmt::Display + Serialize>(e: E) -> CliError {
    let message = e.to_string();
    let payload = serde_json::to_value(&e).unwrap_or(Value::Null);
    let kind = payload["kind"].as_str().unwrap_or_default();
    if INCONCLUSIVE.contains(&kind) {
        CliError::Inconclusive { message, payload }
    } else {
        CliError::Engine { message, payload }
    }
}

fn dimension(d: i64) -> Result<Dimension, CliError> {
    Dimension::new(d).map_err(|e| field("d", e.to_string()).into())
}

fn parse<R: Real>(name: &str, s: &str, ctx: &R::Ctx) -> Result<R, CliError> {
    R::parse_decimal(s, ctx).map_err(|e| field(name, e.to_string()).into())
}

fn dec<R: Real>(x: &R) -> String {
    x.to_decimal()
}

// ---- spectrum ----

pub fn spectrum_shoot(cfg: &ShootConfig, dir: &mut RunDir) -> Result<(), CliError> {
    dimension(cfg.d)?;
    let p = ShootParams {
        d: cfg.d,
        window: (cfg.window[0], cfg.window[1]),
        n: cfg.nterms,
        digits: cfg.digits,
        grid_step: cfg.grid_step,
    };
    let report = find_eigenvalues(&p).map_err(engine)?;
    dir.json("eigenvalues.json", &report)?;
    Ok(())
}

pub fn spectrum_cf(cfg: &CfConfig, dir: &mut RunDir) -> Result<(), CliError> {
    let p = CfParams {
        window: (cfg.window[0], cfg.window[1]),
        depth: cfg.depth,
        digits: cfg.digits,
        grid_step: cfg.grid_step,
        tail: match cfg.tail {
            TailArg::Zero => Tail::Zero,
            TailArg::Asymptotic => Tail::Asymptotic,
        },
    };
    let report = match cfg.d {
        DimArg::Inf => find_cf_eigenvalues(&p),
        DimArg::Finite(d) => {
            dimension(d)?;
            heun_cf_eigenvalues(d, &p)
        }
    }
    .map_err(engine)?;
    dir.json("eigenvalues.json", &report)?;
    Ok(())
}

// ---- self-similar evolution ----

fn trajectory_rows<R: Real>(traj: &[TrajectoryPoint<R>]) -> impl Iterator<Item = Vec<String>> + '_ {
    traj.iter()
        .map(|p| vec![dec(&p.s), dec(&p.t), dec(&p.h), dec(&p.v0), dec(&p.p0)])
}

const TRAJECTORY_HEADER: &[&str] = &["s", "t", "h", "V0", "P0"];

/// Trajectory written by evolve-ss or bisect, read back at full precision.
fn read_trajectory<R: Real>(path: &Path, ctx: &R::Ctx) -> Result<Vec<TrajectoryPoint<R>>, CliError> {
    let (header, rows) = read_csv(path)?;
    if header != TRAJECTORY_HEADER {
        return Err(field("run", format!("{} is not a trajectory file", path.display())).into());
    }
    let num = |s: &str| parse::<R>("run", s, ctx);
    rows.iter()
        .map(|r| {
            Ok(TrajectoryPoint {
                s: num(&r[0])?,
                t: num(&r[1])?,
                h: num(&r[2])?,
                v0: num(&r[3])?,
                p0: num(&r[4])?,
            })
        })
        .collect()
}

#[derive(Serialize)]
struct SsSummary {
    d: i64,
    a: String,
    digits: u32,
    classification: Classification,
    reason: StopReason,
    s_end: String,
    t_end: String,
    h_end: String,
    v0_end: String,
    p0_end: String,
    steps: usize,
    /// max over recorded steps of |h·P(s,0) − 1|
    gauge_identity: f64,
    blowup_time: Option<String>,
    diagnostics: Option<String>,
}

struct EvolveSs<'a> {
    cfg: &'a SsConfig,
    params: SsParams,
    dir: &'a mut RunDir,
}

impl RealTask for EvolveSs<'_> {
    type Output = Result<(), CliError>;

    fn run<R: Real>(self, ctx: R::Ctx) -> Self::Output {
        let d = dimension(self.cfg.d)?;
        let a: R = parse("amp", &self.cfg.amp, &ctx)?;
        let out = evolve(d, &a, &self.params).map_err(engine)?;
        let last = out.trajectory.last().expect("initial point recorded");
        let gauge = out
            .trajectory
            .iter()
            .map(|p| (p.h.clone() * &p.p0 - R::one(&ctx)).abs().to_f64())
            .fold(0.0, f64::max);
        let blowup_time = match out.reason {
            StopReason::OdeBlowupSettled => estimate_blowup_time(&out.trajectory, self.params.sustain, self.params.settle_tol)
                .ok()
                .map(|t| dec(&t)),
            _ => None,
        };
        let summary = SsSummary {
            d: d.get(),
            a: dec(&a),
            digits: self.cfg.digits,
            classification: out.classification,
            reason: out.reason,
            s_end: dec(&out.s_end),
            t_end: dec(&last.t),
            h_end: dec(&last.h),
            v0_end: dec(&last.v0),
            p0_end: dec(&last.p0),
            steps: out.steps,
            gauge_identity: gauge,
            blowup_time,
            diagnostics: out.diagnostics.clone(),
        };
        self.dir.json("outcome.json", &summary)?;
        self.dir
            .csv("trajectory.csv", None, TRAJECTORY_HEADER, trajectory_rows(&out.trajectory))?;
        let mut index = Vec::new();
        for (k, snap) in out.snapshots.iter().enumerate() {
            let name = format!("snapshot_{k:03}.csv");
            let rows = (0..snap.y.len()).map(|j| vec![dec(&snap.y[j]), dec(&snap.v[j]), dec(&snap.p[j])]);
            self.dir.csv(&name, None, &["y", "V", "P"], rows)?;
            index.push(json!({"file": name, "s": dec(&snap.s), "t": dec(&snap.t), "h": dec(&snap.h)}));
        }
        if !index.is_empty() {
            self.dir.json("snapshots.json", &index)?;
        }
        Ok(())
    }
}

pub fn evolve_ss(cfg: &SsConfig, dir: &mut RunDir) -> Result<(), CliError> {
    let params = cfg.grid.params(cfg.snapshots.clone())?;
    with_digits(cfg.digits, EvolveSs { cfg, params, dir })
}

// ---- physical evolution ----

#[derive(Serialize)]
struct PhysSummary {
    d: i64,
    a: String,
    digits: u32,
    blowup: bool,
    t_final: String,
    u0_final: String,
    decay_window: [f64; 2],
    decay_exponent: Option<f64>,
}

struct EvolvePhys<'a> {
    cfg: &'a PhysConfig,
    params: PhysParams,
    dir: &'a mut RunDir,
}

impl RealTask for EvolvePhys<'_> {
    type Output = Result<(), CliError>;

    fn run<R: Real>(self, ctx: R::Ctx) -> Self::Output {
        let d = dimension(self.cfg.d)?;
        let a: R = parse("amp", &self.cfg.amp, &ctx)?;
        let grid = Grid::new(self.params.n_cells, R::from_f64(self.params.dr, &ctx));
        let run = evolve_phys(d, from_computational(&a, grid), &self.params).map_err(engine)?;
        let window = self
            .cfg
            .decay_window
            .unwrap_or([self.params.t_end / 10.0, self.params.t_end]);
        let summary = PhysSummary {
            d: d.get(),
            a: dec(&a),
            digits: self.cfg.digits,
            blowup: run.blowup,
            t_final: dec(&run.final_state.t),
            u0_final: dec(&run.trajectory.last().expect("initial point recorded").u0),
            decay_window: window,
            decay_exponent: if run.blowup {
                None
            } else {
                decay_exponent(&run.trajectory, window[0], window[1])
            },
        };
        self.dir.json("run.json", &summary)?;
        let rows = run
            .trajectory
            .iter()
            .map(|p| vec![dec(&p.t), dec(&p.u0), dec(&p.ut0)]);
        self.dir.csv("trajectory.csv", None, &["t", "u0", "ut0"], rows)?;
        let mut index = Vec::new();
        for (k, snap) in run.snapshots.iter().enumerate() {
            let name = format!("snapshot_{k:03}.csv");
            let rows = (0..snap.r.len()).map(|j| vec![dec(&snap.r[j]), dec(&snap.u[j]), dec(&snap.ut[j])]);
            self.dir.csv(&name, None, &["r", "u", "ut"], rows)?;
            index.push(json!({"file": name, "t": dec(&snap.t)}));
        }
        if !index.is_empty() {
            self.dir.json("snapshots.json", &index)?;
        }
        Ok(())
    }
}

pub fn evolve_phys_cmd(cfg: &PhysConfig, dir: &mut RunDir) -> Result<(), CliError> {
    let params = cfg.params()?;
    with_digits(cfg.digits, EvolvePhys { cfg, params, dir })
}

// ---- bisection ----

#[derive(Serialize)]
struct ThresholdOut<'a> {
    #[serde(flatten)]
    record: &'a ThresholdRecord,
    digits: u32,
    /// From the supercritical endpoint, when it settled.
    blowup_time: Option<String>,
    endpoints: Value,
}

struct Bisect<'a> {
    cfg: &'a BisectConfig,
    params: SsParams,
    dir: &'a mut RunDir,
}

impl RealTask for Bisect<'_> {
    type Output = Result<(), CliError>;

    fn run<R: Real>(self, ctx: R::Ctx) -> Self::Output {
        let d = dimension(self.cfg.d)?;
        let lo: R = parse("lo", &self.cfg.lo, &ctx)?;
        let hi: R = parse("hi", &self.cfg.hi, &ctx)?;
        let eps: R = parse("eps", &self.cfg.eps, &ctx)?;
        if self.cfg.max_parallel == 0 {
            return Err(field("max_parallel", "must be at least 1").into());
        }
        let (record, b) = bisect_ss(d, lo, hi, &eps, &self.params, self.cfg.max_parallel).map_err(engine)?;
        let sub = &b.lo_probe.detail;
        let sup = &b.hi_probe.detail;
        let blowup_time = estimate_blowup_time(&sup.trajectory, self.params.sustain, self.params.settle_tol)
            .ok()
            .map(|t| dec(&t));
        let out = ThresholdOut {
            record: &record,
            digits: self.cfg.digits,
            blowup_time,
            endpoints: json!({
                "sub": {"reason": sub.reason, "s_end": dec(&sub.s_end), "trajectory": "sub_trajectory.csv"},
                "super": {"reason": sup.reason, "s_end": dec(&sup.s_end), "trajectory": "super_trajectory.csv"},
            }),
        };
        self.dir.json("threshold.json", &out)?;
        self.dir
            .csv("sub_trajectory.csv", None, TRAJECTORY_HEADER, trajectory_rows(&sub.trajectory))?;
        self.dir
            .csv("super_trajectory.csv", None, TRAJECTORY_HEADER, trajectory_rows(&sup.trajectory))?;
        Ok(())
    }
}

pub fn bisect(cfg: &BisectConfig, dir: &mut RunDir) -> Result<(), CliError> {
    let params = cfg.grid.params(Vec::new())?;
    with_digits(cfg.digits, Bisect { cfg, params, dir })
}

// ---- reading earlier runs ----

/// What fit and export need to know about an evolve-ss or bisect run.
struct SsRun {
    d: i64,
    digits: u32,
    /// (side label, trajectory file)
    trajectories: Vec<(String, PathBuf)>,
    blowup_time: Option<String>,
}

fn read_json(path: &Path) -> Result<Value, CliError> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e).into())
}

fn load_ss_run(run: &Path) -> Result<SsRun, CliError> {
    let (cmd, cfg) = read_manifest(run)?;
    let d = cfg["d"].as_i64().unwrap_or(7);
    let digits = cfg["digits"].as_u64().unwrap_or(15) as u32;
    match cmd.as_str() {
        "evolve-ss" => {
            let outcome = read_json(&run.join("outcome.json"))?;
            Ok(SsRun {
                d,
                digits,
                trajectories: vec![(
                    outcome["classification"].as_str().unwrap_or("run").to_string(),
                    run.join("trajectory.csv"),
                )],
                blowup_time: outcome["blowup_time"].as_str().map(String::from),
            })
        }
        "bisect" => {
            let rec = read_json(&run.join("threshold.json"))?;
            Ok(SsRun {
                d,
                digits,
                trajectories: vec![
                    ("subcritical".into(), run.join("sub_trajectory.csv")),
                    ("supercritical".into(), run.join("super_trajectory.csv")),
                ],
                blowup_time: rec["blowup_time"].as_str().map(String::from),
            })
        }
        other => Err(field("run", format!("expected an evolve-ss or bisect run, found {other:?}")).into()),
    }
}

// ---- fit ----

/// λ₁ (largest eigenvalue other than the gauge value 1) and the largest
/// negative eigenvalue from a spectrum report.
fn spectrum_lambdas(path: &Path) -> Result<(f64, Option<f64>), CliError> {
    let rep = read_json(path)?;
    let mut lambdas: Vec<f64> = rep["eigenvalues"]
        .as_array()
        .map(|a| a.iter().filter_map(|e| e["lambda"].as_str()?.parse().ok()).collect())
        .unwrap_or_default();
    lambdas.sort_by(|a, b| b.partial_cmp(a).expect("finite"));
    let l1 = lambdas
        .iter()
        .copied()
        .find(|l| (l - 1.0).abs() > 1e-6 && *l > 0.0)
        .ok_or_else(|| field("spectrum", "no positive eigenvalue other than 1 in the report"))?;
    let lm = lambdas.iter().copied().find(|l| *l < 0.0);
    Ok((l1, lm))
}

#[derive(Serialize)]
struct SideFit {
    side: String,
    blowup_time: String,
    fit: ModeFit,
}

#[derive(Serialize)]
struct FitOut {
    d: i64,
    run: PathBuf,
    lambda1: f64,
    lambda1_source: String,
    blowup_time: String,
    refine_time: bool,
    fits: Vec<SideFit>,
    sign_check: Option<SignReport>,
}

struct Fit<'a> {
    cfg: &'a FitConfig,
    run: SsRun,
    lambda1: f64,
    lambda1_source: String,
    lambda_m1: f64,
    dir: &'a mut RunDir,
}

impl RealTask for Fit<'_> {
    type Output = Result<(), CliError>;

    fn run<R: Real>(self, ctx: R::Ctx) -> Self::Output {
        let d = dimension(self.run.d)?;
        let t_str = self
            .cfg
            .blowup_time
            .clone()
            .or(self.run.blowup_time.clone())
            .ok_or_else(|| field("blowup_time", "the run has no settled blowup time; pass one"))?;
        let big_t: R = parse("blowup_time", &t_str, &ctx)?;
        let mut opts = FitOptions::new(u_star_origin::<f64>(d, &()), self.lambda_m1);
        opts.plateau_tol = self.cfg.plateau_tol;
        opts.window = self.cfg.window.map(|w| (w[0], w[1]));
        let mut fits = Vec::new();
        for (side, path) in &self.run.trajectories {
            let traj: Vec<TrajectoryPoint<R>> = read_trajectory(path, &ctx)?;
            let (t, fit) = if self.cfg.refine_time {
                fit_with_refined_time(&traj, &big_t, self.lambda1, &opts, 8).map_err(engine)?
            } else {
                let f = fit_modes(&psi_samples(&traj, &big_t), self.lambda1, &opts).map_err(engine)?;
                (big_t.clone(), f)
            };
            fits.push(SideFit {
                side: side.clone(),
                blowup_time: dec(&t),
                fit,
            });
        }
        let sign = if fits.len() == 2 {
            Some(sign_check(&fits[0].fit, &fits[1].fit).map_err(engine)?)
        } else {
            None
        };
        let out = FitOut {
            d: d.get(),
            run: self.cfg.run.clone(),
            lambda1: self.lambda1,
            lambda1_source: self.lambda1_source,
            blowup_time: t_str,
            refine_time: self.cfg.refine_time,
            fits,
            sign_check: sign,
        };
        self.dir.json("fit.json", &out)?;
        Ok(())
    }
}

pub fn fit(cfg: &FitConfig, dir: &mut RunDir) -> Result<(), CliError> {
    let run = load_ss_run(&cfg.run)?;
    let (from_report, source) = match &cfg.spectrum {
        Some(p) => (Some(spectrum_lambdas(p)?), p.display().to_string()),
        None => (None, "command line".to_string()),
    };
    let lambda1 = cfg
        .lambda1
        .or(from_report.map(|r| r.0))
        .ok_or_else(|| field("lambda1", "give --lambda1 or --spectrum"))?;
    let lambda_m1 = cfg
        .lambda_m1
        .or(from_report.and_then(|r| r.1))
        .ok_or_else(|| field("lambda_m1", "give --lambda-m1 or a spectrum with a negative eigenvalue"))?;
    let digits = run.digits;
    with_digits(
        digits,
        Fit {
            cfg,
            run,
            lambda1,
            lambda1_source: source,
            lambda_m1,
            dir,
        },
    )
}

// ---- export-plot-data ----

struct PsiRows<'a> {
    run: &'a SsRun,
    big_t: &'a str,
    max_rows: usize,
}

impl RealTask for PsiRows<'_> {
    type Output = Result<Vec<Vec<String>>, CliError>;

    fn run<R: Real>(self, ctx: R::Ctx) -> Self::Output {
        let big_t: R = parse("blowup_time", self.big_t, &ctx)?;
        let c = u_star_origin::<f64>(dimension(self.run.d)?, &());
        let mut rows = Vec::new();
        for (side, path) in &self.run.trajectories {
            let samples = psi_samples(&read_trajectory::<R>(path, &ctx)?, &big_t);
            for i in downsample(samples.len(), self.max_rows) {
                let (tau, psi) = samples[i];
                rows.push(vec![side.clone(), tau.to_string(), psi.to_string(), c.to_string()]);
            }
        }
        Ok(rows)
    }
}

fn f64_col(rows: &[Vec<String>], col: usize) -> Result<Vec<f64>, CliError> {
    rows.iter()
        .map(|r| {
            r[col]
                .parse::<f64>()
                .map_err(|e| field("run", format!("bad number {}: {e}", r[col])).into())
        })
        .collect()
}

pub fn export_plot_data(cfg: &ExportConfig, dir: &mut RunDir) -> Result<(), CliError> {
    let (cmd, run_cfg) = read_manifest(&cfg.run).map_err(|e| {
        CliError::from(field("run", format!("{}: {e}", cfg.run.display())))
    })?;
    match cfg.view {
        View::P0VsS => {
            let run = load_ss_run(&cfg.run)?;
            let mut rows = Vec::new();
            for (side, path) in &run.trajectories {
                let (_, data) = read_csv(path)?;
                let s = f64_col(&data, 0)?;
                let p = f64_col(&data, 4)?;
                for i in downsample(s.len(), cfg.max_rows) {
                    rows.push(vec![side.clone(), s[i].to_string(), p[i].to_string()]);
                }
            }
            dir.csv(
                "P0-vs-s.csv",
                Some("side: run classification; s: slow time; P0: P(s,0) in computational variables"),
                &["side", "s", "P0"],
                rows,
            )?;
        }
        View::PsiVsTau => {
            let run = load_ss_run(&cfg.run)?;
            let big_t = cfg
                .blowup_time
                .clone()
                .or(run.blowup_time.clone())
                .ok_or_else(|| field("blowup_time", "the run has no settled blowup time; pass one"))?;
            let rows = with_digits(
                run.digits,
                PsiRows {
                    run: &run,
                    big_t: &big_t,
                    max_rows: cfg.max_rows,
                },
            )?;
            dir.csv(
                "psi-vs-tau.csv",
                Some("tau = -ln(T - t); psi = (T - t) u(t,0); U_star0 = U*(0) reference line"),
                &["side", "tau", "psi", "U_star0"],
                rows,
            )?;
        }
        View::ProfileVsRho => profile_vs_rho(cfg, &cmd, &run_cfg, dir)?,
        View::DecayLoglog => {
            if cmd != "evolve-phys" {
                return Err(field("run", "decay-loglog needs an evolve-phys run").into());
            }
            let (_, data) = read_csv(&cfg.run.join("trajectory.csv"))?;
            let t = f64_col(&data, 0)?;
            let u = f64_col(&data, 1)?;
            let traj: Vec<phys::PhysPoint<f64>> = t
                .iter()
                .zip(&u)
                .map(|(&t, &u0)| phys::PhysPoint { t, u0, ut0: 0.0 })
                .collect();
            let t_end = t.last().copied().unwrap_or(0.0);
            let env: std::collections::HashSet<u64> =
                envelope(&traj, 0.0, t_end).iter().map(|(t, _)| t.to_bits()).collect();
            let keep: Vec<usize> = (0..t.len()).filter(|&i| t[i] > 0.0 && u[i] != 0.0).collect();
            let rows = downsample(keep.len(), cfg.max_rows).into_iter().map(|k| {
                let i = keep[k];
                vec![
                    t[i].ln().to_string(),
                    u[i].abs().ln().to_string(),
                    u8::from(env.contains(&t[i].to_bits())).to_string(),
                ]
            });
            dir.csv(
                "decay-loglog.csv",
                Some("log_t: ln t; log_abs_u0: ln|u(t,0)|; envelope: 1 on the upper envelope used for the decay fit"),
                &["log_t", "log_abs_u0", "envelope"],
                rows,
            )?;
        }
    }
    Ok(())
}

fn profile_vs_rho(cfg: &ExportConfig, cmd: &str, run_cfg: &Value, dir: &mut RunDir) -> Result<(), CliError> {
    let d = dimension(run_cfg["d"].as_i64().unwrap_or(7))?;
    let index = read_json(&cfg.run.join("snapshots.json"))
        .map_err(|_| field("run", "the run has no snapshots"))?;
    let entries = index.as_array().cloned().unwrap_or_default();
    let num = |v: &Value| -> Result<f64, CliError> {
        v.as_str()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| field("run", "bad snapshot index").into())
    };
    match cmd {
        "evolve-ss" => {
            let run = load_ss_run(&cfg.run)?;
            let big_t: f64 = match cfg.blowup_time.clone().or(run.blowup_time) {
                Some(s) => s.parse().map_err(|_| field("blowup_time", "not a number"))?,
                None => return Err(field("blowup_time", "the run has no settled blowup time; pass one").into()),
            };
            let mut rows = Vec::new();
            for e in &entries {
                let (s, t) = (num(&e["s"])?, num(&e["t"])?);
                let gap = big_t - t;
                if !(gap > 0.0) {
                    continue;
                }
                let (_, data) = read_csv(&cfg.run.join(e["file"].as_str().unwrap_or_default()))?;
                let y = f64_col(&data, 0)?;
                let v = f64_col(&data, 1)?;
                for j in 0..y.len() {
                    // r = e^(−s)·y and u = e^s·V
                    let rho = (-s).exp() * y[j] / gap;
                    if rho > 1.0 {
                        break;
                    }
                    let psi = gap * s.exp() * v[j];
                    let reference = u_star::<f64>(d, &rho).unwrap_or(f64::NAN);
                    rows.push(vec![s.to_string(), rho.to_string(), psi.to_string(), reference.to_string()]);
                }
            }
            dir.csv(
                "profile-vs-rho.csv",
                Some("s: slow time of the snapshot; rho = r/(T - t); psi = (T - t) u; U_star: U*(rho)"),
                &["s", "rho", "psi", "U_star"],
                rows,
            )?;
        }
        "evolve-phys" => {
            let big_t: f64 = cfg
                .blowup_time
                .as_deref()
                .ok_or_else(|| field("blowup_time", "required for physical runs"))?
                .parse()
                .map_err(|_| field("blowup_time", "not a number"))?;
            let mut snaps = Vec::new();
            for e in &entries {
                let (_, data) = read_csv(&cfg.run.join(e["file"].as_str().unwrap_or_default()))?;
                snaps.push(phys::PhysSnapshot {
                    t: num(&e["t"])?,
                    r: f64_col(&data, 0)?,
                    u: f64_col(&data, 1)?,
                    ut: f64_col(&data, 2)?,
                });
            }
            let rho: Vec<f64> = (0..=50).map(|k| k as f64 / 50.0).collect();
            let tau: Vec<f64> = snaps[3.min(snaps.len())..snaps.len().saturating_sub(3)]
                .iter()
                .filter(|s| s.t < big_t)
                .map(|s| -(big_t - s.t).ln())
                .collect();
            let frame = phys::to_self_similar(&snaps, &big_t, &tau, &rho).map_err(engine)?;
            let mut rows = Vec::new();
            for (i, ta) in frame.tau.iter().enumerate() {
                for (k, r) in frame.rho.iter().enumerate() {
                    let reference = u_star::<f64>(d, r).unwrap_or(f64::NAN);
                    rows.push(vec![ta.to_string(), r.to_string(), frame.psi[i][k].to_string(), reference.to_string()]);
                }
            }
            dir.csv(
                "profile-vs-rho.csv",
                Some("tau = -ln(T - t); rho = r/(T - t); psi = (T - t) u; U_star: U*(rho)"),
                &["tau", "rho", "psi", "U_star"],
                rows,
            )?;
        }
        other => return Err(field("run", format!("profile-vs-rho needs an evolution run, found {other:?}")).into()),
    }
    Ok(())
}
