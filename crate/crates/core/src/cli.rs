//! Command-line front end: config loading, the subcommands and their CSV/JSON
//! output.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::duality::{
    gauge_equivalence_defect, gauge_equivalence_defect_unchecked, map_coefficients_b_to_a,
};
use crate::error::{Error, Result};
use crate::floquet::{matching_defects, solve_floquet, FloquetRoot};
use crate::observables::nondecay_probability;
use crate::potential::{default_sidebands, zone_reduce, DriveSpec, Model, WellGeometry};
use crate::rootfind::{BranchStatus, ContinuationConfig, Parameter, RootConfig};
use crate::spectra::{classify_crossing, critical_amplitude_scan, linear_grid, sweep, SweepSpec};
use crate::static_solver::{static_resonances, StaticResonance};
use crate::tdse::{fit_decay_rate, gamow_shape, propagate, record_stride, FitOptions, GridSpec, Hamiltonian};

pub const SWEEP_HEADER: &str =
    "param_name,param_value,branch_id,model,n_sidebands,re_eps,im_eps,re_eps_zone,zone_index,residual_norm";
pub const STATIC_HEADER: &str = "index,re_e_over_v0,im_e_over_v0,gamma,residual";
pub const NONDECAY_HEADER: &str = "t,p,pbar,h";
pub const CRITICAL_HEADER: &str = "v1,kind,omega_star,min_gap,stability_exchanged,zone_shift";

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_NO_SOLUTION: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

/// Tolerances of the oracle comparison in `tdse-validate`.
pub const TDSE_STATIC_TOLERANCE: f64 = 0.10;
pub const TDSE_DRIVEN_TOLERANCE: f64 = 0.15;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeometryBlock {
    pub v0: f64,
    pub a: f64,
    pub b: f64,
    pub mass: f64,
    pub hbar: f64,
}

impl Default for GeometryBlock {
    fn default() -> Self {
        GeometryBlock { v0: 10.0, a: 1.0, b: 2.0, mass: 1.0, hbar: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DriveBlock {
    pub v1: f64,
    pub omega: f64,
    pub model: Model,
    /// Defaults to `ceil(V1 / hbar w) + 1`.
    pub sidebands: Option<usize>,
    /// Skips the `V1 < V0` bound and the truncation floor.
    pub allow_strong: bool,
}

impl Default for DriveBlock {
    fn default() -> Self {
        DriveBlock { v1: 1.0, omega: 2.0, model: Model::A, sidebands: None, allow_strong: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepBlock {
    pub parameter: Parameter,
    pub from: f64,
    pub to: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SearchBlock {
    /// Explicit seeds as `[re, im]` pairs; static resonances otherwise.
    pub seeds: Vec<[f64; 2]>,
    /// Upper end of the static seed scan, in units of `v0`.
    pub e_max_over_v0: f64,
}

impl Default for SearchBlock {
    fn default() -> Self {
        SearchBlock { seeds: Vec::new(), e_max_over_v0: 1.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverBlock {
    pub max_iter: usize,
    pub step_tol: f64,
    pub residual_tol: f64,
    /// Spread of the starting triple, in units of `v0`.
    pub bracket_over_v0: f64,
    pub jump_over_v0: f64,
    pub predictor_over_v0: f64,
    pub max_halvings: usize,
    pub gap_tolerance_over_v0: f64,
}

impl Default for SolverBlock {
    fn default() -> Self {
        let root = RootConfig::default();
        SolverBlock {
            max_iter: root.max_iter,
            step_tol: root.step_tol,
            residual_tol: root.residual_tol,
            bracket_over_v0: 1e-4,
            jump_over_v0: 0.05,
            predictor_over_v0: 1e-3,
            max_halvings: 6,
            gap_tolerance_over_v0: 1e-4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputBlock {
    /// Files go here when set; stdout otherwise.
    pub directory: Option<PathBuf>,
    pub format: Option<Format>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CriticalBlock {
    pub v1_from: f64,
    pub v1_to: f64,
    pub v1_step: f64,
}

impl Default for CriticalBlock {
    fn default() -> Self {
        CriticalBlock { v1_from: 1.0, v1_to: 5.0, v1_step: 0.05 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NondecayBlock {
    pub periods: usize,
    pub samples_per_period: usize,
}

impl Default for NondecayBlock {
    fn default() -> Self {
        NondecayBlock { periods: 10, samples_per_period: 32 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TdseBlock {
    pub dx: f64,
    pub dt: f64,
    pub x_max: f64,
    pub cap_start: f64,
    pub cap_strength: f64,
    /// Run length in units of the expected lifetime `1/Gamma`.
    pub lifetimes: f64,
    pub samples_per_period: usize,
}

impl Default for TdseBlock {
    fn default() -> Self {
        let g = GridSpec::default();
        TdseBlock {
            dx: g.dx,
            dt: g.dt,
            x_max: g.x_max,
            cap_start: g.cap_start,
            cap_strength: g.cap_strength,
            lifetimes: 3.0,
            samples_per_period: 32,
        }
    }
}

impl TdseBlock {
    pub fn grid(&self) -> GridSpec {
        GridSpec {
            dx: self.dx,
            x_max: self.x_max,
            dt: self.dt,
            cap_start: self.cap_start,
            cap_strength: self.cap_strength,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub geometry: GeometryBlock,
    pub drive: DriveBlock,
    pub sweep: Option<SweepBlock>,
    pub search: SearchBlock,
    pub solver: SolverBlock,
    pub output: OutputBlock,
    pub critical: CriticalBlock,
    pub nondecay: NondecayBlock,
    pub tdse: TdseBlock,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let g = self.geometry()?;
        self.drive_spec(&g)?.validate(&g, self.drive.allow_strong)?;
        if let Some(s) = &self.sweep {
            if !(s.from.is_finite() && s.to.is_finite()) {
                return Err(Error::Config("sweep bounds must be finite".into()));
            }
        }
        let c = &self.critical;
        if !(c.v1_step > 0.0 && c.v1_to >= c.v1_from) {
            return Err(Error::Config("critical amplitude grid needs v1_step > 0 and v1_to >= v1_from".into()));
        }
        if self.nondecay.periods == 0 || self.nondecay.samples_per_period == 0 {
            return Err(Error::Config("nondecay periods and samples_per_period must be positive".into()));
        }
        self.tdse.grid().validate().map_err(|e| Error::Config(e.to_string()))?;
        if !(self.tdse.lifetimes > 0.0) || self.tdse.samples_per_period == 0 {
            return Err(Error::Config("tdse lifetimes and samples_per_period must be positive".into()));
        }
        if !(self.search.e_max_over_v0 > 0.0) {
            return Err(Error::Config("search.e_max_over_v0 must be positive".into()));
        }
        Ok(())
    }

    pub fn geometry(&self) -> Result<WellGeometry> {
        let g = &self.geometry;
        WellGeometry::with_units(g.v0, g.a, g.b, g.mass, g.hbar)
    }

    pub fn drive_spec(&self, geom: &WellGeometry) -> Result<DriveSpec> {
        let d = &self.drive;
        if !(d.omega > 0.0) {
            return Err(Error::InvalidDrive(format!("omega must be > 0, got {}", d.omega)));
        }
        let n = d.sidebands.unwrap_or_else(|| default_sidebands(d.v1 / (geom.hbar * d.omega)));
        Ok(DriveSpec::new(d.v1, d.omega, d.model, n))
    }

    pub fn root_config(&self) -> RootConfig {
        let s = &self.solver;
        RootConfig {
            max_iter: s.max_iter,
            step_tol: s.step_tol,
            residual_tol: s.residual_tol,
            bracket_scale: s.bracket_over_v0 * self.geometry.v0,
        }
    }

    pub fn continuation(&self) -> ContinuationConfig {
        let s = &self.solver;
        let v0 = self.geometry.v0;
        ContinuationConfig {
            root: self.root_config(),
            jump_threshold: s.jump_over_v0 * v0,
            predictor_tolerance: s.predictor_over_v0 * v0,
            max_halvings: s.max_halvings,
        }
    }

    /// Hex SHA-256 of the effective configuration.
    pub fn digest(&self) -> String {
        let text = toml::to_string(self).unwrap_or_default();
        Sha256::digest(text.as_bytes()).iter().fold(String::new(), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
    }
}

#[derive(Debug, Parser)]
#[command(name = "floquet", version, about = "Floquet spectra and decay of a driven metastable well")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Comma-separated complex seeds, e.g. `3.22-0.0011i,11.12-0.25i`.
    #[arg(long, global = true)]
    pub seeds: Option<String>,
    #[arg(long, global = true)]
    pub sidebands: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Resonances of the undriven well.
    Static,
    /// A single Floquet root.
    Floquet,
    /// Branches along the configured sweep.
    Sweep,
    /// Classifies the closest approach of two branches.
    Crossing,
    /// Scans the amplitude for the direct-to-avoided transition.
    CriticalAmplitude,
    /// Compares the two models and checks the gauge identity.
    DualityCheck,
    /// Nondecay probability of a Floquet state.
    Nondecay,
    /// Compares Floquet decay rates with a direct time integration.
    TdseValidate,
}

impl Command {
    fn stem(self) -> &'static str {
        match self {
            Command::Static => "static",
            Command::Floquet => "floquet",
            Command::Sweep => "sweep",
            Command::Crossing => "crossing",
            Command::CriticalAmplitude => "critical-amplitude",
            Command::DualityCheck => "duality-check",
            Command::Nondecay => "nondecay",
            Command::TdseValidate => "tdse-validate",
        }
    }
}

/// Parses `a+bi`, `a-bi`, `a` or `bi` (also `j` for the imaginary unit).
pub fn parse_complex(text: &str) -> Result<Complex64> {
    let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || Error::Config(format!("cannot parse complex seed '{text}'"));
    if let Some(body) = s.strip_suffix('i').or_else(|| s.strip_suffix('j')) {
        let split = body
            .char_indices()
            .skip(1)
            .filter(|&(i, c)| (c == '+' || c == '-') && !matches!(body.as_bytes()[i - 1], b'e' | b'E'))
            .map(|(i, _)| i)
            .last();
        let (re, im) = match split {
            Some(i) => (&body[..i], &body[i..]),
            None => ("0", body),
        };
        let im = match im {
            "" | "+" => "1",
            "-" => "-1",
            other => other,
        };
        Ok(Complex64::new(re.parse().map_err(|_| bad())?, im.parse().map_err(|_| bad())?))
    } else {
        Ok(Complex64::new(s.parse().map_err(|_| bad())?, 0.0))
    }
}

pub fn parse_seed_list(text: &str) -> Result<Vec<Complex64>> {
    text.split(',').filter(|s| !s.trim().is_empty()).map(parse_complex).collect()
}

/// Maps a library error to the process exit code.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::InvalidGeometry(_) | Error::InvalidDrive(_) => EXIT_CONFIG,
        Error::NotFound(_) | Error::NoConvergence { .. } | Error::NonPhysical { .. } => EXIT_NO_SOLUTION,
        _ => EXIT_NUMERICAL,
    }
}

/// A finished command: the main artifact plus an optional sidecar report.
struct Output {
    format: Format,
    body: String,
    sidecar: Option<String>,
    code: i32,
}

struct Context {
    cfg: RunConfig,
    command: Command,
    format: Option<Format>,
    seeds: Option<Vec<Complex64>>,
}

impl Context {
    fn header(&self) -> String {
        format!("# floquet-well {} config={}\n", env!("CARGO_PKG_VERSION"), self.cfg.digest())
    }

    fn csv(&self, columns: &str, rows: &[String]) -> String {
        let mut s = self.header();
        s.push_str(columns);
        s.push('\n');
        for r in rows {
            s.push_str(r);
            s.push('\n');
        }
        s
    }

    fn geometry(&self) -> Result<WellGeometry> {
        self.cfg.geometry()
    }

    fn drive(&self, geom: &WellGeometry) -> Result<DriveSpec> {
        self.cfg.drive_spec(geom)
    }

    fn static_table(&self, geom: &WellGeometry) -> Vec<StaticResonance> {
        static_resonances(geom, self.cfg.search.e_max_over_v0 * geom.v0)
    }

    /// Explicit seeds, or the lowest `count` static resonances.
    fn seeds(&self, geom: &WellGeometry, count: usize) -> Result<Vec<Complex64>> {
        if let Some(s) = &self.seeds {
            if !s.is_empty() {
                return Ok(s.clone());
            }
        }
        if !self.cfg.search.seeds.is_empty() {
            return Ok(self.cfg.search.seeds.iter().map(|[re, im]| Complex64::new(*re, *im)).collect());
        }
        let found: Vec<Complex64> = self.static_table(geom).iter().take(count).map(|r| r.energy).collect();
        if found.len() < count {
            return Err(Error::NotFound(format!("needed {count} static seeds, found {}", found.len())));
        }
        Ok(found)
    }

    fn solve_root(&self, geom: &WellGeometry, drive: &DriveSpec) -> Result<FloquetRoot> {
        let seed = self.seeds(geom, 1)?[0];
        solve_floquet(geom, drive, seed, &self.cfg.root_config())
    }

    fn omega_window(&self, fallback: (f64, f64, usize)) -> Result<Vec<f64>> {
        match &self.cfg.sweep {
            Some(s) if s.parameter == Parameter::Omega => Ok(linear_grid(s.from, s.to, s.steps)),
            Some(_) => Err(Error::Config("this command needs an omega sweep block".into())),
            None => Ok(linear_grid(fallback.0, fallback.1, fallback.2)),
        }
    }
}

fn branch_row(param: Parameter, value: f64, id: usize, drive: &DriveSpec, eps: Complex64, reduced: Complex64, zone: i64, residual: f64) -> String {
    format!(
        "{param},{value},{id},{},{},{},{},{},{zone},{residual:e}",
        drive.model, drive.n_sidebands, eps.re, eps.im, reduced.re
    )
}

fn cmd_static(ctx: &Context) -> Result<Output> {
    let geom = ctx.geometry()?;
    let found = ctx.static_table(&geom);
    if found.is_empty() {
        return Err(Error::NotFound("no static resonance below the scan limit".into()));
    }
    let format = ctx.format.unwrap_or(Format::Csv);
    let body = match format {
        Format::Csv => {
            let rows: Vec<String> = found
                .iter()
                .enumerate()
                .map(|(i, r)| {
                    let s = r.scaled(&geom);
                    format!("{i},{},{},{},{:e}", s.re, s.im, r.width, r.residual)
                })
                .collect();
            ctx.csv(STATIC_HEADER, &rows)
        }
        Format::Json => to_json(&json!({
            "v0": geom.v0,
            "resonances": found.iter().map(|r| json!({
                "energy": [r.energy.re, r.energy.im],
                "scaled": [r.scaled(&geom).re, r.scaled(&geom).im],
                "width": r.width,
                "residual": r.residual,
            })).collect::<Vec<_>>(),
        })),
    };
    Ok(Output { format, body, sidecar: None, code: EXIT_OK })
}

fn cmd_floquet(ctx: &Context) -> Result<Output> {
    let geom = ctx.geometry()?;
    let drive = ctx.drive(&geom)?;
    let root = ctx.solve_root(&geom, &drive)?;
    let (reduced, zone) = zone_reduce(root.epsilon, drive.quantum(&geom));
    let format = ctx.format.unwrap_or(Format::Csv);
    let body = match format {
        Format::Csv => {
            let row = branch_row(Parameter::Omega, drive.omega, 0, &drive, root.epsilon, reduced, zone, root.residual_norm);
            ctx.csv(SWEEP_HEADER, &[row])
        }
        Format::Json => to_json(&json!({
            "param_name": Parameter::Omega,
            "param_value": drive.omega,
            "root": root,
            "reduced": [reduced.re, reduced.im],
            "zone_index": zone,
        })),
    };
    Ok(Output { format, body, sidecar: None, code: EXIT_OK })
}

fn cmd_sweep(ctx: &Context) -> Result<Output> {
    let geom = ctx.geometry()?;
    let base = ctx.drive(&geom)?;
    let block = ctx.cfg.sweep.as_ref().ok_or_else(|| Error::Config("sweep block missing".into()))?;
    let grid = linear_grid(block.from, block.to, block.steps);
    let spec = match block.parameter {
        Parameter::Omega => SweepSpec::omega(base.model, base.v1, base.n_sidebands, grid),
        Parameter::V1 => SweepSpec::v1(base.model, base.omega, base.n_sidebands, grid),
    };
    let seeds = ctx.seeds(&geom, 1)?;
    let branches = sweep(&geom, &spec, &seeds, &ctx.cfg.continuation())?;

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (id, b) in branches.iter().enumerate() {
        for p in b.grid_points() {
            let drive = spec.drive_at(p.param);
            rows.push((id, p.param, drive, p.epsilon, p.reduced, p.zone, p.residual_norm));
        }
        if b.status != BranchStatus::Complete {
            failures.push(json!({
                "branch_id": id,
                "seed": [b.seed.re, b.seed.im],
                "status": b.status,
                "failure": b.failure,
                "last_param": b.grid_points().last().map(|p| p.param),
            }));
        }
    }
    let all_failed = branches.iter().all(|b| b.grid_points().next().is_none());
    let format = ctx.format.unwrap_or(Format::Csv);
    let body = match format {
        Format::Csv => {
            let lines: Vec<String> = rows
                .iter()
                .map(|(id, v, d, e, r, z, res)| branch_row(spec.parameter, *v, *id, d, *e, *r, *z, *res))
                .collect();
            ctx.csv(SWEEP_HEADER, &lines)
        }
        Format::Json => to_json(&json!({
            "param_name": spec.parameter,
            "rows": rows.iter().map(|(id, v, d, e, r, z, res)| json!({
                "param_value": v, "branch_id": id, "model": d.model, "n_sidebands": d.n_sidebands,
                "re_eps": e.re, "im_eps": e.im, "re_eps_zone": r.re, "zone_index": z, "residual_norm": res,
            })).collect::<Vec<_>>(),
        })),
    };
    let sidecar = (!failures.is_empty()).then(|| to_json(&json!({ "failures": failures })));
    let code = if all_failed { EXIT_NO_SOLUTION } else { EXIT_OK };
    Ok(Output { format, body, sidecar, code })
}

fn two_seeds(ctx: &Context, geom: &WellGeometry) -> Result<[Complex64; 2]> {
    let s = ctx.seeds(geom, 2)?;
    if s.len() < 2 {
        return Err(Error::Config("crossing analysis needs two seeds".into()));
    }
    Ok([s[0], s[1]])
}

fn report_format(ctx: &Context) -> Result<Format> {
    match ctx.format {
        Some(Format::Csv) if ctx.command != Command::CriticalAmplitude => {
            Err(Error::Config(format!("{} writes JSON reports only", ctx.command.stem())))
        }
        Some(f) => Ok(f),
        None => Ok(Format::Json),
    }
}

fn cmd_crossing(ctx: &Context) -> Result<Output> {
    let format = report_format(ctx)?;
    let geom = ctx.geometry()?;
    let drive = ctx.drive(&geom)?;
    let window = ctx.omega_window((6.5, 9.5, 300))?;
    let seeds = two_seeds(ctx, &geom)?;
    let spec = SweepSpec::omega(drive.model, drive.v1, drive.n_sidebands, window);
    let branches = sweep(&geom, &spec, &seeds, &ctx.cfg.continuation())?;
    let tol = ctx.cfg.solver.gap_tolerance_over_v0 * geom.v0;
    let report = classify_crossing(&branches[0], &branches[1], tol)?;
    Ok(Output { format, body: to_json(&report), sidecar: None, code: EXIT_OK })
}

fn cmd_critical(ctx: &Context) -> Result<Output> {
    let format = report_format(ctx)?;
    let geom = ctx.geometry()?;
    let drive = ctx.drive(&geom)?;
    let window = ctx.omega_window((6.5, 9.5, 60))?;
    let seeds = two_seeds(ctx, &geom)?;
    let c = &ctx.cfg.critical;
    let steps = ((c.v1_to - c.v1_from) / c.v1_step).round() as usize;
    let v1_grid = linear_grid(c.v1_from, c.v1_to, steps);
    let tol = ctx.cfg.solver.gap_tolerance_over_v0 * geom.v0;
    let scan = critical_amplitude_scan(&geom, drive.model, drive.n_sidebands, &v1_grid, &window, seeds, tol)?;
    let body = match format {
        Format::Json => to_json(&scan),
        Format::Csv => {
            let rows: Vec<String> = scan
                .reports
                .iter()
                .map(|(v, r)| {
                    let kind = serde_json::to_value(r.kind).ok().and_then(|k| k.as_str().map(str::to_owned)).unwrap_or_default();
                    format!("{v},{kind},{},{},{},{}", r.omega_star, r.min_gap, r.stability_exchanged, r.zone_shift)
                })
                .collect();
            ctx.csv(CRITICAL_HEADER, &rows)
        }
    };
    Ok(Output { format, body, sidecar: None, code: EXIT_OK })
}

fn cmd_duality(ctx: &Context) -> Result<Output> {
    let format = report_format(ctx)?;
    let geom = ctx.geometry()?;
    let base = ctx.drive(&geom)?;
    let a = ctx.solve_root(&geom, &DriveSpec { model: Model::A, ..base })?;
    let b = ctx.solve_root(&geom, &DriveSpec { model: Model::B, ..base })?;
    let xs = linear_grid(0.0, geom.b, 49);
    let ts = linear_grid(0.0, 2.0 * std::f64::consts::PI / base.omega, 15);
    let gap = (a.epsilon - b.epsilon).norm() / geom.v0;
    let checked = gauge_equivalence_defect(&a, &b, &xs, &ts);
    let mapped = map_coefficients_b_to_a(&b)?;
    let report = json!({
        "v1": base.v1,
        "omega": base.omega,
        "n_sidebands": base.n_sidebands,
        "eps_a": [a.epsilon.re, a.epsilon.im],
        "eps_b": [b.epsilon.re, b.epsilon.im],
        "gap_over_v0": gap,
        "spectra_agree": gap < 1e-9,
        "gauge_defect": checked.as_ref().ok(),
        "gauge_error": checked.as_ref().err().map(|e| e.to_string()),
        "gauge_defect_unchecked": gauge_equivalence_defect_unchecked(&a, &b, &xs, &ts)?,
        "mapped_gauge_defect": gauge_equivalence_defect(&mapped, &b, &xs, &ts)?,
        "mapped_matching_defects": matching_defects(&mapped)?,
    });
    Ok(Output { format, body: to_json(&report), sidecar: None, code: EXIT_OK })
}

fn cmd_nondecay(ctx: &Context) -> Result<Output> {
    let geom = ctx.geometry()?;
    let drive = ctx.drive(&geom)?;
    let root = ctx.solve_root(&geom, &drive)?;
    let n = &ctx.cfg.nondecay;
    let period = 2.0 * std::f64::consts::PI / drive.omega;
    let times = linear_grid(0.0, n.periods as f64 * period, n.periods * n.samples_per_period);
    let curve = nondecay_probability(&root, &times)?;
    let format = ctx.format.unwrap_or(Format::Csv);
    let body = match format {
        Format::Csv => {
            let rows: Vec<String> = (0..times.len())
                .map(|i| format!("{},{},{},{}", curve.times[i], curve.p[i], curve.pbar[i], curve.h[i]))
                .collect();
            ctx.csv(NONDECAY_HEADER, &rows)
        }
        Format::Json => to_json(&curve),
    };
    Ok(Output { format, body, sidecar: None, code: EXIT_OK })
}

/// One oracle comparison: fitted survival rate against `2 |Im eps| / hbar`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OracleComparison {
    pub expected_rate: f64,
    pub fitted_rate: f64,
    pub relative_error: f64,
    pub tolerance: f64,
    pub r_squared: f64,
    pub pass: bool,
}

/// Propagates the Gamow-shaped state and fits the survival decay rate.
pub fn tdse_compare(
    geom: &WellGeometry,
    drive: Option<&DriveSpec>,
    epsilon: Complex64,
    block: &TdseBlock,
    tolerance: f64,
) -> Result<OracleComparison> {
    let grid = block.grid();
    let expected = -2.0 * epsilon.im / geom.hbar;
    let ham = Hamiltonian::well(geom, drive, grid)?;
    let psi0 = gamow_shape(geom, &grid, epsilon.re.clamp(1e-6 * geom.v0, (1.0 - 1e-6) * geom.v0))?;
    let omega = drive.map_or(0.0, |d| d.omega);
    let stride = record_stride(&grid, omega, block.samples_per_period, 250);
    let (series, _) = propagate(&ham, &psi0, block.lifetimes / expected, stride)?;
    let opts = FitOptions {
        average_period: drive.map(|d| 2.0 * std::f64::consts::PI / d.omega),
        ..FitOptions::default()
    };
    let fit = fit_decay_rate(&series.times, &series.survival, &opts)?;
    let relative_error = (fit.rate - expected).abs() / expected;
    Ok(OracleComparison {
        expected_rate: expected,
        fitted_rate: fit.rate,
        relative_error,
        tolerance,
        r_squared: fit.r_squared,
        pass: relative_error <= tolerance,
    })
}

fn cmd_tdse(ctx: &Context) -> Result<Output> {
    let format = report_format(ctx)?;
    let geom = ctx.geometry()?;
    let drive = ctx.drive(&geom)?;
    let seed = ctx.seeds(&geom, 1)?[0];
    let undriven = DriveSpec { v1: 0.0, n_sidebands: 0, ..drive };
    let e0 = solve_floquet(&geom, &undriven, seed, &ctx.cfg.root_config())?.epsilon;
    let root = solve_floquet(&geom, &drive, e0, &ctx.cfg.root_config())?;
    let block = &ctx.cfg.tdse;
    let (stat, driven) = rayon::join(
        || tdse_compare(&geom, None, e0, block, TDSE_STATIC_TOLERANCE),
        || tdse_compare(&geom, Some(&drive), root.epsilon, block, TDSE_DRIVEN_TOLERANCE),
    );
    let (stat, driven) = (stat?, driven?);
    let code = if stat.pass && driven.pass { EXIT_OK } else { EXIT_NUMERICAL };
    let report = json!({
        "grid": block.grid(),
        "accuracy_warning": block.grid().exceeds_accuracy_bound(),
        "static": stat,
        "driven": driven,
        "eps_static": [e0.re, e0.im],
        "eps_driven": [root.epsilon.re, root.epsilon.im],
    });
    Ok(Output { format, body: to_json(&report), sidecar: None, code })
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).unwrap_or_else(|e| format!("{{\"error\": \"{e}\"}}"));
    s.push('\n');
    s
}

fn dispatch(ctx: &Context) -> Result<Output> {
    match ctx.command {
        Command::Static => cmd_static(ctx),
        Command::Floquet => cmd_floquet(ctx),
        Command::Sweep => cmd_sweep(ctx),
        Command::Crossing => cmd_crossing(ctx),
        Command::CriticalAmplitude => cmd_critical(ctx),
        Command::DualityCheck => cmd_duality(ctx),
        Command::Nondecay => cmd_nondecay(ctx),
        Command::TdseValidate => cmd_tdse(ctx),
    }
}

fn configure_threads() -> Result<()> {
    let Ok(value) = std::env::var("FLOQUET_THREADS") else { return Ok(()) };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| Error::Config(format!("FLOQUET_THREADS must be a positive integer, got '{value}'")))?;
    // a pool that already exists keeps its size
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

fn build_context(cli: &Cli) -> Result<Context> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(n) = cli.sidebands {
        cfg.drive.sidebands = Some(n);
    }
    if let Some(dir) = &cli.out {
        cfg.output.directory = Some(dir.clone());
    }
    if let Some(f) = cli.format {
        cfg.output.format = Some(f);
    }
    let seeds = cli.seeds.as_deref().map(parse_seed_list).transpose()?;
    if let Some(s) = &seeds {
        cfg.search.seeds = s.iter().map(|z| [z.re, z.im]).collect();
    }
    cfg.validate()?;
    Ok(Context { format: cfg.output.format, cfg, command: cli.command, seeds })
}

fn emit(ctx: &Context, out: &Output) -> Result<()> {
    let ext = match out.format {
        Format::Csv => "csv",
        Format::Json => "json",
    };
    match &ctx.cfg.output.directory {
        Some(dir) => {
            let io = |e: std::io::Error| Error::Config(format!("cannot write to {}: {e}", dir.display()));
            std::fs::create_dir_all(dir).map_err(io)?;
            let main = dir.join(format!("{}.{ext}", ctx.command.stem()));
            std::fs::write(&main, &out.body).map_err(io)?;
            if let Some(side) = &out.sidecar {
                std::fs::write(dir.join(format!("{}.failures.json", ctx.command.stem())), side).map_err(io)?;
            }
            println!("{}", main.display());
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            let _ = stdout.write_all(out.body.as_bytes());
            if let Some(side) = &out.sidecar {
                eprint!("{side}");
            }
        }
    }
    Ok(())
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let result = configure_threads().and_then(|_| build_context(&cli)).and_then(|ctx| {
        let out = dispatch(&ctx)?;
        emit(&ctx, &out)?;
        Ok(out.code)
    });
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_complex_seeds() {
        assert_eq!(parse_complex("3.22-0.0011i").unwrap(), Complex64::new(3.22, -0.0011));
        assert_eq!(parse_complex("1e-3+2e-4i").unwrap(), Complex64::new(1e-3, 2e-4));
        assert_eq!(parse_complex("-2.5").unwrap(), Complex64::new(-2.5, 0.0));
        assert_eq!(parse_complex("-0.5i").unwrap(), Complex64::new(0.0, -0.5));
        assert_eq!(parse_complex("1-i").unwrap(), Complex64::new(1.0, -1.0));
        assert!(parse_complex("abc").is_err());
        assert_eq!(parse_seed_list("3.2-0.001i, 11.1-0.25i").unwrap().len(), 2);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_physics() {
        assert!(matches!(RunConfig::from_toml("[geometry]\nv0 = 10.0\nwidth = 3.0\n"), Err(Error::Config(_))));
        assert!(matches!(RunConfig::from_toml("[geometry]\nv0 = -1.0\n"), Err(Error::InvalidGeometry(_))));
        assert!(matches!(RunConfig::from_toml("[drive]\nv1 = 20.0\n"), Err(Error::InvalidDrive(_))));
        assert!(RunConfig::from_toml("[drive]\nv1 = 20.0\nallow_strong = true\n").is_ok());
        assert!(matches!(RunConfig::from_toml("bogus = 1\n"), Err(Error::Config(_))));
    }

    #[test]
    fn full_config_round_trips() {
        let text = r#"
[geometry]
v0 = 10.0
a = 1.0
b = 2.0
mass = 1.0
hbar = 1.0

[drive]
v1 = 0.5
omega = 1.0
model = "B"
sidebands = 3

[sweep]
parameter = "omega"
from = 0.5
to = 2.0
steps = 10

[search]
seeds = [[3.22, -0.0011]]

[output]
format = "json"
"#;
        let cfg = RunConfig::from_toml(text).unwrap();
        assert_eq!(cfg.drive.model, Model::B);
        assert_eq!(cfg.sweep.as_ref().unwrap().parameter, Parameter::Omega);
        let again = RunConfig::from_toml(&toml::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(again, cfg);
        assert_eq!(again.digest(), cfg.digest());
        assert_eq!(cfg.digest().len(), 64);
    }

    #[test]
    fn exit_codes_by_error_kind() {
        assert_eq!(exit_code(&Error::Config("x".into())), EXIT_CONFIG);
        assert_eq!(exit_code(&Error::NotFound("x".into())), EXIT_NO_SOLUTION);
        assert_eq!(exit_code(&Error::GridTooCoarse), EXIT_NUMERICAL);
    }
}
