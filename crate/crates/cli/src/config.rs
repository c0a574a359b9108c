//! Option sets for every subcommand.
//!
//! Each command has a clap struct of optional flags and a resolved config
//! with defaults filled in. A JSON config file (or an earlier run's
//! manifest) is overlaid by the flags given on the command line, then
//! deserialized into the resolved form with unknown keys rejected.

use std::path::{Path, PathBuf};

use clap::Args;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use critlab_core::evolution::phys::PhysParams;
use critlab_core::evolution::ss::SsParams;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: {message}")]
    Field { path: String, message: String },
    #[error("cannot read config {file}: {message}")]
    Read { file: String, message: String },
}

pub fn field(path: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Field {
        path: path.to_string(),
        message: message.into(),
    }
}

/// Load `--config`, unwrapping a manifest if that is what was given.
pub fn load_file(path: &Path, command: &str) -> Result<Map<String, Value>, ConfigError> {
    let read_err = |m: String| ConfigError::Read {
        file: path.display().to_string(),
        message: m,
    };
    let text = std::fs::read_to_string(path).map_err(|e| read_err(e.to_string()))?;
    let value: Value = serde_json::from_str(&text).map_err(|e| read_err(e.to_string()))?;
    let Value::Object(mut obj) = value else {
        return Err(read_err("top level must be an object".into()));
    };
    if let Some(Value::Object(inner)) = obj.get("config") {
        let inner = inner.clone();
        if let Some(cmd) = obj.get("command") {
            check_command(cmd, command)?;
        }
        return Ok(inner);
    }
    if let Some(cmd) = obj.remove("command") {
        check_command(&cmd, command)?;
    }
    Ok(obj)
}

fn check_command(found: &Value, expected: &str) -> Result<(), ConfigError> {
    if found.as_str() != Some(expected) {
        return Err(field("command", format!("config is for {found}, not {expected}")));
    }
    Ok(())
}

const GRID_KEYS: &[&str] = &[
    "grid_n", "dy", "ymax", "ds", "cfl", "eps_diss", "smax", "p_min", "tol_sup", "settle", "record_stride",
];
pub const SS_KEYS: &[&str] = &["d", "amp", "digits", "snapshots"];
pub const BISECT_KEYS: &[&str] = &["d", "lo", "hi", "eps", "digits", "max_parallel"];

/// Unknown-key check for configs that flatten the grid settings (serde
/// cannot combine the two).
pub fn check_keys(map: &Map<String, Value>, own: &[&str]) -> Result<(), ConfigError> {
    for k in map.keys() {
        if !own.contains(&k.as_str()) && !GRID_KEYS.contains(&k.as_str()) {
            return Err(field(k, "unknown field"));
        }
    }
    Ok(())
}

/// Defaults, then file values, then every flag that was actually given;
/// the result is checked against the resolved schema.
pub fn resolve<F: Serialize, C: DeserializeOwned>(
    defaults: Map<String, Value>,
    file: Map<String, Value>,
    flags: &F,
    own_keys: Option<&[&str]>,
) -> Result<C, ConfigError> {
    let mut merged = defaults;
    merged.extend(file);
    if let Value::Object(given) = serde_json::to_value(flags).expect("flags serialize") {
        for (k, v) in given {
            if !v.is_null() {
                merged.insert(k, v);
            }
        }
    }
    if let Some(own) = own_keys {
        check_keys(&merged, own)?;
    }
    let de = Value::Object(merged);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        ConfigError::Field {
            path: if path == "." { "config".into() } else { path },
            message: e.into_inner().to_string(),
        }
    })
}

/// Dimension argument of spectrum-cf: an integer or "inf".
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DimArg {
    Finite(i64),
    Inf,
}

impl std::str::FromStr for DimArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s.eq_ignore_ascii_case("inf") {
            return Ok(DimArg::Inf);
        }
        s.parse().map(DimArg::Finite).map_err(|_| format!("expected an integer or \"inf\", got {s}"))
    }
}

impl Serialize for DimArg {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            DimArg::Finite(d) => s.serialize_i64(*d),
            DimArg::Inf => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for DimArg {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(i64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Int(n) => Ok(DimArg::Finite(n)),
            Raw::Str(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

fn default_d() -> i64 {
    7
}

// ---- spectrum-shoot ----

#[derive(Args, Debug, Clone, Serialize)]
pub struct ShootFlags {
    #[arg(long)]
    pub d: Option<i64>,
    /// Search window in λ.
    #[arg(long, num_args = 2, value_names = ["LO", "HI"], allow_negative_numbers = true)]
    pub window: Option<Vec<f64>>,
    #[arg(long)]
    pub digits: Option<u32>,
    /// Series truncation order.
    #[arg(long)]
    pub nterms: Option<usize>,
    #[arg(long)]
    pub grid_step: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ShootConfig {
    pub d: i64,
    pub window: [f64; 2],
    pub digits: u32,
    pub nterms: usize,
    pub grid_step: f64,
}

impl Default for ShootConfig {
    fn default() -> Self {
        ShootConfig {
            d: default_d(),
            window: [-4.0, 5.0],
            digits: 50,
            nterms: 200,
            grid_step: 0.01,
        }
    }
}

// ---- spectrum-cf ----

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum TailArg {
    Zero,
    Asymptotic,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct CfFlags {
    /// Dimension, or "inf" for the limiting equation.
    #[arg(long)]
    pub d: Option<DimArg>,
    #[arg(long, num_args = 2, value_names = ["LO", "HI"], allow_negative_numbers = true)]
    pub window: Option<Vec<f64>>,
    #[arg(long)]
    pub digits: Option<u32>,
    /// Continued-fraction depth.
    #[arg(long)]
    pub depth: Option<usize>,
    #[arg(long)]
    pub grid_step: Option<f64>,
    #[arg(long, value_enum)]
    pub tail: Option<TailArg>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CfConfig {
    pub d: DimArg,
    pub window: [f64; 2],
    pub digits: u32,
    pub depth: usize,
    pub grid_step: f64,
    pub tail: TailArg,
}

impl Default for CfConfig {
    fn default() -> Self {
        CfConfig {
            d: DimArg::Inf,
            window: [-4.0, 3.0],
            digits: 50,
            depth: 512,
            grid_step: 0.01,
            tail: TailArg::Zero,
        }
    }
}

// ---- evolve-ss and bisect share the grid flags ----

#[derive(Args, Debug, Clone, Serialize)]
pub struct GridFlags {
    /// Number of grid cells.
    #[arg(long)]
    pub grid_n: Option<usize>,
    #[arg(long)]
    pub dy: Option<f64>,
    /// Outer radius; sets the cell count from dy.
    #[arg(long)]
    pub ymax: Option<f64>,
    #[arg(long)]
    pub ds: Option<f64>,
    #[arg(long)]
    pub cfl: Option<f64>,
    #[arg(long)]
    pub eps_diss: Option<f64>,
    #[arg(long)]
    pub smax: Option<f64>,
    #[arg(long)]
    pub p_min: Option<f64>,
    #[arg(long)]
    pub tol_sup: Option<f64>,
    /// Keep going after the supercritical verdict until h settles.
    #[arg(long)]
    pub settle: Option<bool>,
    #[arg(long)]
    pub record_stride: Option<usize>,
}

/// Self-similar engine settings as they appear in configs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridConfig {
    pub grid_n: usize,
    pub dy: f64,
    #[serde(default)]
    pub ymax: Option<f64>,
    #[serde(default)]
    pub ds: Option<f64>,
    pub cfl: f64,
    pub eps_diss: f64,
    pub smax: f64,
    pub p_min: f64,
    pub tol_sup: f64,
    pub settle: bool,
    pub record_stride: usize,
}

impl GridConfig {
    fn defaults(settle: bool) -> Self {
        let p = SsParams::default();
        GridConfig {
            grid_n: p.n_cells,
            dy: p.dy,
            ymax: None,
            ds: p.ds,
            cfl: p.cfl,
            eps_diss: p.eps_diss,
            smax: p.s_max,
            p_min: p.p_min,
            tol_sup: p.tol_sup,
            settle,
            record_stride: p.record_stride,
        }
    }

    pub fn params(&self, snapshot_times: Vec<f64>) -> Result<SsParams, ConfigError> {
        if !(self.dy > 0.0) {
            return Err(field("dy", "must be positive"));
        }
        let n_cells = match self.ymax {
            Some(y) if !(y > 0.0) => return Err(field("ymax", "must be positive")),
            Some(y) => (y / self.dy).round() as usize,
            None => self.grid_n,
        };
        let p = SsParams {
            n_cells,
            dy: self.dy,
            ds: self.ds,
            cfl: self.cfl,
            eps_diss: self.eps_diss,
            p_min: self.p_min,
            tol_sup: self.tol_sup,
            s_max: self.smax,
            snapshot_times,
            record_stride: self.record_stride,
            settle: self.settle,
            ..SsParams::default()
        };
        p.validate().map_err(|e| field("grid", e.to_string()))?;
        Ok(p)
    }
}

// ---- evolve-ss ----

#[derive(Args, Debug, Clone, Serialize)]
pub struct SsFlags {
    #[arg(long)]
    pub d: Option<i64>,
    /// Amplitude a of the data a/cosh(y), as a decimal string.
    #[arg(long)]
    pub amp: Option<String>,
    #[arg(long)]
    pub digits: Option<u32>,
    /// Slow times at which full profiles are written.
    #[arg(long, num_args = 1.., value_name = "S")]
    pub snapshots: Option<Vec<f64>>,
    #[command(flatten)]
    #[serde(flatten)]
    pub grid: GridFlags,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SsConfig {
    #[serde(default = "default_d")]
    pub d: i64,
    pub amp: String,
    #[serde(default = "f64_digits")]
    pub digits: u32,
    #[serde(default)]
    pub snapshots: Vec<f64>,
    #[serde(flatten)]
    pub grid: GridConfig,
}

fn f64_digits() -> u32 {
    15
}

pub fn ss_defaults() -> Map<String, Value> {
    let Value::Object(m) = serde_json::to_value(GridConfig::defaults(false)).expect("serializable") else {
        unreachable!()
    };
    m
}

// ---- evolve-phys ----

#[derive(Args, Debug, Clone, Serialize)]
pub struct PhysFlags {
    #[arg(long)]
    pub d: Option<i64>,
    #[arg(long)]
    pub amp: Option<String>,
    #[arg(long)]
    pub digits: Option<u32>,
    /// Radial mesh size.
    #[arg(long)]
    pub dy: Option<f64>,
    #[arg(long)]
    pub grid_n: Option<usize>,
    #[arg(long)]
    pub ymax: Option<f64>,
    #[arg(long)]
    pub ds: Option<f64>,
    #[arg(long)]
    pub cfl: Option<f64>,
    #[arg(long)]
    pub eps_diss: Option<f64>,
    #[arg(long)]
    pub tend: Option<f64>,
    #[arg(long, num_args = 1.., value_name = "T")]
    pub snapshots: Option<Vec<f64>>,
    #[arg(long)]
    pub record_stride: Option<usize>,
    /// Interval of t for the envelope decay fit.
    #[arg(long, num_args = 2, value_names = ["LO", "HI"])]
    pub decay_window: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysConfig {
    #[serde(default = "default_d")]
    pub d: i64,
    pub amp: String,
    #[serde(default = "f64_digits")]
    pub digits: u32,
    pub dy: f64,
    #[serde(default)]
    pub grid_n: Option<usize>,
    #[serde(default)]
    pub ymax: Option<f64>,
    #[serde(default)]
    pub ds: Option<f64>,
    pub cfl: f64,
    pub eps_diss: f64,
    pub tend: f64,
    #[serde(default)]
    pub snapshots: Vec<f64>,
    pub record_stride: usize,
    #[serde(default)]
    pub decay_window: Option<[f64; 2]>,
}

pub fn phys_defaults() -> Map<String, Value> {
    let p = PhysParams::default();
    let mut m = Map::new();
    m.insert("dy".into(), p.dr.into());
    m.insert("cfl".into(), p.cfl.into());
    m.insert("eps_diss".into(), p.eps_diss.into());
    m.insert("tend".into(), p.t_end.into());
    m.insert("record_stride".into(), p.record_stride.into());
    m
}

/// Support of the initial data counted into the default grid size.
pub const PHYS_SUPPORT: f64 = 40.0;

impl PhysConfig {
    pub fn params(&self) -> Result<PhysParams, ConfigError> {
        if !(self.dy > 0.0) {
            return Err(field("dy", "must be positive"));
        }
        let mut p = PhysParams::sized(self.tend, self.dy, PHYS_SUPPORT);
        match (self.grid_n, self.ymax) {
            (Some(_), Some(_)) => return Err(field("ymax", "give either grid_n or ymax")),
            (Some(n), None) => p.n_cells = n,
            (None, Some(y)) => p.n_cells = (y / self.dy).round() as usize,
            (None, None) => {}
        }
        p.dt = self.ds;
        p.cfl = self.cfl;
        p.eps_diss = self.eps_diss;
        p.snapshot_times = self.snapshots.clone();
        p.record_stride = self.record_stride;
        p.validate().map_err(|e| field("grid", e.to_string()))?;
        Ok(p)
    }
}

// ---- bisect ----

#[derive(Args, Debug, Clone, Serialize)]
pub struct BisectFlags {
    #[arg(long)]
    pub d: Option<i64>,
    #[arg(long)]
    pub lo: Option<String>,
    #[arg(long)]
    pub hi: Option<String>,
    /// Target bracket width.
    #[arg(long)]
    pub eps: Option<String>,
    #[arg(long)]
    pub digits: Option<u32>,
    #[arg(long)]
    pub max_parallel: Option<usize>,
    #[command(flatten)]
    #[serde(flatten)]
    pub grid: GridFlags,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BisectConfig {
    #[serde(default = "default_d")]
    pub d: i64,
    pub lo: String,
    pub hi: String,
    pub eps: String,
    #[serde(default = "bisect_digits")]
    pub digits: u32,
    #[serde(default = "available_cores")]
    pub max_parallel: usize,
    #[serde(flatten)]
    pub grid: GridConfig,
}

fn bisect_digits() -> u32 {
    64
}

pub fn available_cores() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

pub fn bisect_defaults() -> Map<String, Value> {
    let Value::Object(m) = serde_json::to_value(GridConfig::defaults(true)).expect("serializable") else {
        unreachable!()
    };
    m
}

// ---- fit ----

#[derive(Args, Debug, Clone, Serialize)]
pub struct FitFlags {
    /// A bisect or evolve-ss run directory.
    #[arg(long)]
    pub run: Option<PathBuf>,
    /// Spectrum report supplying λ₁ and the starting λ₋₁.
    #[arg(long)]
    pub spectrum: Option<PathBuf>,
    #[arg(long, allow_negative_numbers = true)]
    pub lambda1: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub lambda_m1: Option<f64>,
    /// Blowup time; by default taken from the settled supercritical run.
    #[arg(long)]
    pub blowup_time: Option<String>,
    #[arg(long, num_args = 2, value_names = ["LO", "HI"])]
    pub window: Option<Vec<f64>>,
    #[arg(long)]
    pub plateau_tol: Option<f64>,
    /// Correct T per run until the gauge term vanishes from the window.
    #[arg(long)]
    pub refine_time: Option<bool>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    pub run: PathBuf,
    #[serde(default)]
    pub spectrum: Option<PathBuf>,
    #[serde(default)]
    pub lambda1: Option<f64>,
    #[serde(default)]
    pub lambda_m1: Option<f64>,
    #[serde(default)]
    pub blowup_time: Option<String>,
    #[serde(default)]
    pub window: Option<[f64; 2]>,
    #[serde(default = "plateau_tol")]
    pub plateau_tol: f64,
    #[serde(default = "yes")]
    pub refine_time: bool,
}

fn plateau_tol() -> f64 {
    1e-2
}

fn yes() -> bool {
    true
}

// ---- export-plot-data ----

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
#[value(rename_all = "kebab-case")]
pub enum View {
    #[value(name = "P0-vs-s", alias = "p0-vs-s")]
    #[serde(rename = "P0-vs-s", alias = "p0-vs-s")]
    P0VsS,
    PsiVsTau,
    ProfileVsRho,
    DecayLoglog,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct ExportFlags {
    #[arg(long)]
    pub run: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub view: Option<View>,
    #[arg(long)]
    pub blowup_time: Option<String>,
    #[arg(long)]
    pub max_rows: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExportConfig {
    pub run: PathBuf,
    pub view: View,
    #[serde(default)]
    pub blowup_time: Option<String>,
    #[serde(default = "max_rows")]
    pub max_rows: usize,
}

fn max_rows() -> usize {
    5000
}
