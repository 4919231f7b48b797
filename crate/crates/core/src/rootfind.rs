//! Derivative-free complex root finding (Muller's method with a secant
//! fallback) and predictor-corrector continuation of roots along a parameter.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potential::zone_reduce;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RootConfig {
    pub max_iter: usize,
    pub step_tol: f64,
    pub residual_tol: f64,
    /// Spread of the three starting points around the guess.
    pub bracket_scale: f64,
}

impl Default for RootConfig {
    fn default() -> Self {
        RootConfig { max_iter: 200, step_tol: 1e-13, residual_tol: 1e-12, bracket_scale: 1e-3 }
    }
}

impl RootConfig {
    /// Defaults with `bracket_scale = 1e-4 * v0`.
    pub fn for_barrier(v0: f64) -> Self {
        RootConfig { bracket_scale: 1e-4 * v0, ..Default::default() }
    }

    fn validate(&self) -> Result<()> {
        let ok = self.max_iter > 0
            && self.step_tol > 0.0
            && self.residual_tol > 0.0
            && self.bracket_scale > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Domain("root finder tolerances must be positive".into()))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootInfo {
    pub root: Complex64,
    pub residual: f64,
    pub iterations: usize,
    /// Set when convergence was visibly sub-superlinear, typically a
    /// multiple root.
    pub slow_convergence: bool,
}

const SLOW_ITERATIONS: usize = 20;
const STALL_LIMIT: usize = 4;

/// Finds a zero of `f` near `guess`.
///
/// Converges when both `|f| < residual_tol * max(1, |f'|)` and the last step
/// is below `step_tol * max(1, |z|)`, with `|f'|` the slope across the
/// starting bracket. Errors are `NoConvergence` on the iteration cap
/// and `PoleCaptured` when the iterates settle while `|f|` has grown.
pub fn find_root<F>(mut f: F, guess: Complex64, cfg: &RootConfig) -> Result<RootInfo>
where
    F: FnMut(Complex64) -> Result<Complex64>,
{
    cfg.validate()?;
    let h = Complex64::new(cfg.bracket_scale, 0.0);

    let mut eval = |z: Complex64| -> Result<Complex64> {
        match f(z) {
            Err(Error::Pole { at }) => Err(Error::PoleCaptured { at, residual: f64::INFINITY }),
            other => other,
        }
    };

    // A start point sitting on a pole is nudged off it.
    let mut start = |z: Complex64| -> Result<(Complex64, Complex64)> {
        match eval(z) {
            Ok(v) => Ok((z, v)),
            Err(Error::PoleCaptured { .. }) => {
                let z2 = z + h * Complex64::new(0.31, 0.17);
                eval(z2).map(|v| (z2, v))
            }
            Err(e) => Err(e),
        }
    };

    let (mut x0, mut f0) = start(guess - h)?;
    let (mut x1, mut f1) = start(guess + h)?;
    let (mut x2, mut f2) = start(guess)?;
    let f_start = f2.norm();
    let slope = ((f1 - f0) / (x1 - x0)).norm();
    let residual_tol = cfg.residual_tol * if slope.is_finite() { slope.max(1.0) } else { 1.0 };

    if f2.norm() == 0.0 {
        return Ok(RootInfo { root: x2, residual: 0.0, iterations: 0, slow_convergence: false });
    }

    let mut stalled = 0;
    for iter in 1..=cfg.max_iter {
        let step = muller_step(x0, x1, x2, f0, f1, f2)
            .or_else(|| secant_step(x1, x2, f1, f2))
            .unwrap_or(h * Complex64::new(0.5, 0.5));

        let x3 = x2 + step;
        let f3 = eval(x3)?;
        if !(f3.re.is_finite() && f3.im.is_finite()) {
            return Err(Error::PoleCaptured { at: x3, residual: f64::INFINITY });
        }

        x0 = x1;
        f0 = f1;
        x1 = x2;
        f1 = f2;
        x2 = x3;
        f2 = f3;

        let step_small = step.norm() <= cfg.step_tol * x2.norm().max(1.0);
        let residual = f2.norm();
        if residual == 0.0 || (step_small && residual < residual_tol) {
            return Ok(RootInfo {
                root: x2,
                residual,
                iterations: iter,
                slow_convergence: iter > SLOW_ITERATIONS,
            });
        }

        if step_small {
            stalled += 1;
            if stalled >= STALL_LIMIT {
                return Err(stall_error(x2, residual, f_start));
            }
        } else {
            stalled = 0;
        }
    }
    Err(stall_error(x2, f2.norm(), f_start).into_no_convergence(cfg.max_iter))
}

fn stall_error(at: Complex64, residual: f64, f_start: f64) -> Error {
    if residual > f_start {
        Error::PoleCaptured { at, residual }
    } else {
        Error::NoConvergence { last: at, iterations: 0 }
    }
}

trait IntoNoConvergence {
    fn into_no_convergence(self, iterations: usize) -> Error;
}

impl IntoNoConvergence for Error {
    fn into_no_convergence(self, iterations: usize) -> Error {
        match self {
            Error::NoConvergence { last, .. } => Error::NoConvergence { last, iterations },
            other => other,
        }
    }
}

fn muller_step(
    x0: Complex64,
    x1: Complex64,
    x2: Complex64,
    f0: Complex64,
    f1: Complex64,
    f2: Complex64,
) -> Option<Complex64> {
    let h1 = x1 - x0;
    let h2 = x2 - x1;
    if h1.norm() == 0.0 || h2.norm() == 0.0 || (h1 + h2).norm() == 0.0 {
        return None;
    }
    let d1 = (f1 - f0) / h1;
    let d2 = (f2 - f1) / h2;
    let a = (d2 - d1) / (h2 + h1);
    let b = a * h2 + d2;
    let disc = (b * b - 4.0 * a * f2).sqrt();
    let den = if (b + disc).norm() >= (b - disc).norm() { b + disc } else { b - disc };
    if den.norm() == 0.0 {
        return None;
    }
    let step = -2.0 * f2 / den;
    (step.re.is_finite() && step.im.is_finite()).then_some(step)
}

fn secant_step(x1: Complex64, x2: Complex64, f1: Complex64, f2: Complex64) -> Option<Complex64> {
    let df = f2 - f1;
    if df.norm() == 0.0 {
        return None;
    }
    let step = -f2 * (x2 - x1) / df;
    (step.re.is_finite() && step.im.is_finite()).then_some(step)
}

/// Swept parameter of a branch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parameter {
    Omega,
    V1,
}

impl std::fmt::Display for Parameter {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Parameter::Omega => f.write_str("omega"),
            Parameter::V1 => f.write_str("v1"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BranchStatus {
    Complete,
    Lost,
    PoleTerminated,
}

/// How to read the photon energy `hbar w` off a branch point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchFrame {
    pub parameter: Parameter,
    pub hbar: f64,
    /// Drive frequency when it is not the swept parameter.
    pub fixed_omega: Option<f64>,
}

impl BranchFrame {
    pub fn omega_sweep(hbar: f64) -> Self {
        BranchFrame { parameter: Parameter::Omega, hbar, fixed_omega: None }
    }

    pub fn v1_sweep(hbar: f64, omega: f64) -> Self {
        BranchFrame { parameter: Parameter::V1, hbar, fixed_omega: Some(omega) }
    }

    pub fn omega_at(&self, param: f64) -> f64 {
        match self.parameter {
            Parameter::Omega => param,
            Parameter::V1 => self.fixed_omega.unwrap_or(1.0),
        }
    }

    pub fn quantum_at(&self, param: f64) -> f64 {
        self.hbar * self.omega_at(param)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchPoint {
    pub param: f64,
    pub epsilon: Complex64,
    /// Image of `epsilon` in the first Floquet zone.
    pub reduced: Complex64,
    pub zone: i64,
    pub residual_norm: f64,
    pub iterations: usize,
    /// False for points inserted by step refinement.
    pub on_grid: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub frame: BranchFrame,
    pub seed: Complex64,
    pub points: Vec<BranchPoint>,
    pub status: BranchStatus,
    /// Why continuation stopped early, if it did.
    pub failure: Option<String>,
}

impl Branch {
    pub fn parameter(&self) -> Parameter {
        self.frame.parameter
    }

    pub fn grid_points(&self) -> impl Iterator<Item = &BranchPoint> {
        self.points.iter().filter(|p| p.on_grid)
    }

    pub fn point_at(&self, param: f64) -> Option<&BranchPoint> {
        self.grid_points().find(|p| p.param == param)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContinuationConfig {
    pub root: RootConfig,
    /// Largest accepted change of the root between consecutive points.
    pub jump_threshold: f64,
    /// Refine the step when the corrector moves this far from the linear
    /// predictor.
    pub predictor_tolerance: f64,
    pub max_halvings: usize,
}

impl ContinuationConfig {
    /// Jump threshold `0.05 v0`, predictor tolerance `1e-3 v0`, six halvings.
    pub fn for_barrier(v0: f64) -> Self {
        ContinuationConfig {
            root: RootConfig::for_barrier(v0),
            jump_threshold: 0.05 * v0,
            predictor_tolerance: 1e-3 * v0,
            max_halvings: 6,
        }
    }
}

enum StepOutcome {
    Accepted,
    Failed(BranchStatus, String),
}

/// Follows a root of `family(param, eps)` across `grid`, starting from `seed`
/// at `grid[0]`.
pub fn continue_branch<F>(
    family: F,
    seed: Complex64,
    grid: &[f64],
    frame: BranchFrame,
    cfg: &ContinuationConfig,
) -> Result<Branch>
where
    F: Fn(f64, Complex64) -> Result<Complex64>,
{
    if grid.is_empty() {
        return Err(Error::Domain("empty continuation grid".into()));
    }
    let increasing = grid.windows(2).all(|w| w[1] > w[0]);
    let decreasing = grid.windows(2).all(|w| w[1] < w[0]);
    if !(increasing || decreasing) {
        return Err(Error::Domain("continuation grid must be strictly monotone".into()));
    }

    let mut branch = Branch {
        frame,
        seed,
        points: Vec::with_capacity(grid.len()),
        status: BranchStatus::Complete,
        failure: None,
    };

    match find_root(|z| family(grid[0], z), seed, &cfg.root) {
        Ok(info) => push_point(&mut branch, grid[0], info, true),
        Err(e) => {
            branch.status = status_for(&e);
            branch.failure = Some(format!("{} = {}: {e}", frame.parameter, grid[0]));
            return Ok(branch);
        }
    }

    for &target in &grid[1..] {
        let from = branch.points.last().map(|p| p.param).unwrap_or(grid[0]);
        if let StepOutcome::Failed(status, msg) = advance(&family, &mut branch, from, target, 0, cfg) {
            branch.status = status;
            branch.failure = Some(msg);
            break;
        }
    }
    Ok(branch)
}

fn advance<F>(
    family: &F,
    branch: &mut Branch,
    from: f64,
    to: f64,
    depth: usize,
    cfg: &ContinuationConfig,
) -> StepOutcome
where
    F: Fn(f64, Complex64) -> Result<Complex64>,
{
    let on_grid = depth == 0;
    let (guess, have_slope) = predict(branch, to);
    let last = branch.points.last().map(|p| p.epsilon).unwrap_or(branch.seed);
    let attempt = find_root(|z| family(to, z), guess, &cfg.root);

    let verdict = match &attempt {
        Ok(info) => {
            let jump = (info.root - last).norm();
            let miss = (info.root - guess).norm();
            if jump > cfg.jump_threshold {
                Err(format!("jump of {jump:.3e} exceeds threshold"))
            } else if have_slope && miss > cfg.predictor_tolerance && depth < cfg.max_halvings {
                Err(String::new())
            } else {
                Ok(*info)
            }
        }
        Err(e) => Err(e.to_string()),
    };

    match verdict {
        Ok(info) => {
            push_point(branch, to, info, on_grid);
            StepOutcome::Accepted
        }
        Err(reason) if depth >= cfg.max_halvings => {
            let status = match &attempt {
                Err(e) => status_for(e),
                Ok(_) => BranchStatus::Lost,
            };
            StepOutcome::Failed(status, format!("{} = {to}: {reason}", branch.frame.parameter))
        }
        Err(_) => {
            let mid = 0.5 * (from + to);
            if let StepOutcome::Failed(s, m) = advance(family, branch, from, mid, depth + 1, cfg) {
                return StepOutcome::Failed(s, m);
            }
            // the far half keeps this call's grid flag
            let outcome = advance(family, branch, mid, to, depth + 1, cfg);
            if let (StepOutcome::Accepted, Some(p)) = (&outcome, branch.points.last_mut()) {
                p.on_grid = on_grid;
            }
            outcome
        }
    }
}

fn predict(branch: &Branch, to: f64) -> (Complex64, bool) {
    match branch.points.as_slice() {
        [.., p0, p1] => {
            let t = (to - p1.param) / (p1.param - p0.param);
            (p1.epsilon + (p1.epsilon - p0.epsilon) * t, true)
        }
        [p1] => (p1.epsilon, false),
        [] => (branch.seed, false),
    }
}

fn push_point(branch: &mut Branch, param: f64, info: RootInfo, on_grid: bool) {
    let (reduced, zone) = zone_reduce(info.root, branch.frame.quantum_at(param));
    branch.points.push(BranchPoint {
        param,
        epsilon: info.root,
        reduced,
        zone,
        residual_norm: info.residual,
        iterations: info.iterations,
        on_grid,
    });
}

fn status_for(e: &Error) -> BranchStatus {
    match e {
        Error::PoleCaptured { .. } | Error::Pole { .. } => BranchStatus::PoleTerminated,
        _ => BranchStatus::Lost,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn quadratic_root() {
        let info = find_root(|z| Ok(z * z + 1.0), c(0.5, 0.8), &RootConfig::default()).unwrap();
        assert!((info.root - c(0.0, 1.0)).norm() < 1e-12);
        assert!(!info.slow_convergence);
    }

    #[test]
    fn triple_root_is_slow_but_found() {
        let cfg = RootConfig { bracket_scale: 1e-2, ..Default::default() };
        let info = find_root(|z| Ok((z - 1.0).powi(3)), c(1.2, 0.0), &cfg).unwrap();
        assert!((info.root - c(1.0, 0.0)).norm() < 1e-4);
        assert!(info.slow_convergence);
    }

    #[test]
    fn polish_is_idempotent() {
        let f = |z: Complex64| Ok(z.exp() - 2.0 + z * c(0.0, 0.3));
        let cfg = RootConfig::default();
        let r1 = find_root(f, c(0.5, 0.1), &cfg).unwrap().root;
        let r2 = find_root(f, r1, &cfg).unwrap().root;
        assert!((r1 - r2).norm() <= 1e-13);
    }

    #[test]
    fn iteration_cap_reports_no_convergence() {
        let cfg = RootConfig { max_iter: 2, ..Default::default() };
        let err = find_root(|z| Ok(z.exp() - 3.0), c(5.0, 2.0), &cfg).unwrap_err();
        assert!(matches!(err, Error::NoConvergence { iterations: 2, .. }), "{err:?}");
    }

    #[test]
    fn pole_is_not_reported_as_root() {
        // no zero at all, only a pole at z = 1
        let f = |z: Complex64| Ok(1.0 / (z - 1.0));
        let res = find_root(f, c(1.05, 0.01), &RootConfig::default());
        assert!(res.is_err());
    }

    #[test]
    fn constant_family_gives_identical_roots() {
        let grid: Vec<f64> = (0..20).map(|i| 1.0 + 0.1 * i as f64).collect();
        let b = continue_branch(
            |_p, z| Ok(z * z - c(4.0, -0.4)),
            c(2.0, 0.0),
            &grid,
            BranchFrame::omega_sweep(1.0),
            &ContinuationConfig::for_barrier(10.0),
        )
        .unwrap();
        assert_eq!(b.status, BranchStatus::Complete);
        assert_eq!(b.points.len(), grid.len());
        let r0 = b.points[0].epsilon;
        assert!(b.points.iter().all(|p| (p.epsilon - r0).norm() < 1e-13));
    }

    #[test]
    fn refinement_inserts_points_where_root_moves_fast() {
        // root follows tanh, steep near p = 5
        let family = |p: f64, z: Complex64| Ok(z - c(3.0 * (4.0 * (p - 5.0)).tanh(), -0.1));
        let grid: Vec<f64> = (0..=20).map(|i| 0.5 * i as f64).collect();
        let b = continue_branch(
            family,
            c(-3.0, -0.1),
            &grid,
            BranchFrame::omega_sweep(1.0),
            &ContinuationConfig::for_barrier(100.0),
        )
        .unwrap();
        assert_eq!(b.status, BranchStatus::Complete);
        assert_eq!(b.grid_points().count(), grid.len());
        let extra: Vec<f64> = b.points.iter().filter(|p| !p.on_grid).map(|p| p.param).collect();
        assert!(!extra.is_empty());
        assert!(extra.iter().all(|p| (p - 5.0).abs() < 1.5), "{extra:?}");
        assert!(b.points.windows(2).all(|w| w[1].param > w[0].param));
    }

    #[test]
    fn jump_beyond_threshold_marks_branch_lost() {
        // root jumps discontinuously at p = 2
        let family = |p: f64, z: Complex64| {
            let target = if p < 2.0 { c(1.0, 0.0) } else { c(9.0, 0.0) };
            Ok(z - target)
        };
        let grid = [1.0, 1.5, 2.5, 3.0];
        let b = continue_branch(
            family,
            c(1.0, 0.0),
            &grid,
            BranchFrame::omega_sweep(1.0),
            &ContinuationConfig::for_barrier(10.0),
        )
        .unwrap();
        assert_eq!(b.status, BranchStatus::Lost);
        assert!(b.points.iter().all(|p| p.param < 2.0));
        assert!(b.failure.is_some());
    }

    #[test]
    fn non_monotone_grid_rejected() {
        let r = continue_branch(
            |_p, z| Ok(z),
            c(0.0, 0.0),
            &[1.0, 2.0, 1.5],
            BranchFrame::omega_sweep(1.0),
            &ContinuationConfig::for_barrier(10.0),
        );
        assert!(r.is_err());
    }
}
