//! Parameter sweeps, crossing classification and the scan for the amplitude at
//! which a direct crossing turns into an avoided one.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::floquet::residual;
use crate::potential::{DriveSpec, Model, WellGeometry};
use crate::rootfind::{continue_branch, Branch, BranchFrame, ContinuationConfig, Parameter};

/// A one-parameter family of drives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub model: Model,
    pub n_sidebands: usize,
    pub parameter: Parameter,
    /// The drive quantity that is held fixed: `v1` for frequency sweeps,
    /// `omega` for amplitude sweeps.
    pub fixed: f64,
    pub grid: Vec<f64>,
}

impl SweepSpec {
    pub fn omega(model: Model, v1: f64, n_sidebands: usize, grid: Vec<f64>) -> Self {
        SweepSpec { model, n_sidebands, parameter: Parameter::Omega, fixed: v1, grid }
    }

    pub fn v1(model: Model, omega: f64, n_sidebands: usize, grid: Vec<f64>) -> Self {
        SweepSpec { model, n_sidebands, parameter: Parameter::V1, fixed: omega, grid }
    }

    pub fn drive_at(&self, param: f64) -> DriveSpec {
        match self.parameter {
            Parameter::Omega => DriveSpec::new(self.fixed, param, self.model, self.n_sidebands),
            Parameter::V1 => DriveSpec::new(param, self.fixed, self.model, self.n_sidebands),
        }
    }

    pub fn frame(&self, geom: &WellGeometry) -> BranchFrame {
        match self.parameter {
            Parameter::Omega => BranchFrame::omega_sweep(geom.hbar),
            Parameter::V1 => BranchFrame::v1_sweep(geom.hbar, self.fixed),
        }
    }
}

/// Evenly spaced grid with `steps` intervals; `steps = 0` gives `[from]`.
pub fn linear_grid(from: f64, to: f64, steps: usize) -> Vec<f64> {
    if steps == 0 {
        return vec![from];
    }
    (0..=steps).map(|i| from + (to - from) * i as f64 / steps as f64).collect()
}

/// Continues one branch per seed across the sweep grid, in parallel over seeds.
pub fn sweep(
    geom: &WellGeometry,
    spec: &SweepSpec,
    seeds: &[Complex64],
    cfg: &ContinuationConfig,
) -> Result<Vec<Branch>> {
    geom.validate()?;
    for &p in &spec.grid {
        spec.drive_at(p).validate(geom, true)?;
    }
    let frame = spec.frame(geom);
    seeds
        .par_iter()
        .map(|&seed| {
            continue_branch(
                |p, z| residual(geom, &spec.drive_at(p), z),
                seed,
                &spec.grid,
                frame,
                cfg,
            )
        })
        .collect()
}

/// Frequency sweep at fixed amplitude.
pub fn sweep_omega(
    geom: &WellGeometry,
    model: Model,
    v1: f64,
    n_sidebands: usize,
    omega_grid: &[f64],
    seeds: &[Complex64],
) -> Result<Vec<Branch>> {
    let spec = SweepSpec::omega(model, v1, n_sidebands, omega_grid.to_vec());
    sweep(geom, &spec, seeds, &ContinuationConfig::for_barrier(geom.v0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CrossingKind {
    Direct,
    Avoided,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossingReport {
    pub kind: CrossingKind,
    /// Parameter value of the smallest zone-aligned gap.
    pub omega_star: f64,
    pub min_gap: f64,
    pub gap_tolerance: f64,
    pub stability_exchanged: bool,
    /// Seeds of the two branches, used as their identifiers.
    pub branches: [Complex64; 2],
    /// Integer `z` in `Re(eps_1) - (Re(eps_2) - z hbar w)`.
    pub zone_shift: i64,
}

/// Grid offset on either side of the gap minimum used for the stability test.
const STABILITY_OFFSET: usize = 5;

/// Classifies the closest approach of two branches over their shared grid.
pub fn classify_crossing(b1: &Branch, b2: &Branch, gap_tolerance: f64) -> Result<CrossingReport> {
    let p1: Vec<_> = b1.grid_points().collect();
    let p2: Vec<_> = b2.grid_points().collect();
    if p1.len() != p2.len() || p1.iter().zip(&p2).any(|(a, b)| a.param != b.param) {
        return Err(Error::MismatchedParameters("branches do not share a parameter grid".into()));
    }
    if b1.frame != b2.frame {
        return Err(Error::MismatchedParameters("branches belong to different sweeps".into()));
    }
    if p1.len() < 3 {
        return Err(Error::GridTooCoarse);
    }
    let quantum: Vec<f64> = p1.iter().map(|p| b1.frame.quantum_at(p.param)).collect();
    let raw: Vec<f64> = p1.iter().zip(&p2).map(|(a, b)| a.epsilon.re - b.epsilon.re).collect();

    // one zone shift for the whole window
    let mut candidates: Vec<i64> = raw.iter().zip(&quantum).map(|(d, q)| (-d / q).round() as i64).collect();
    candidates.sort_unstable();
    candidates.dedup();
    let best_for = |z: i64| {
        raw.iter().zip(&quantum).map(|(d, q)| (d + z as f64 * q).abs()).fold(f64::INFINITY, f64::min)
    };
    let zone_shift = candidates
        .into_iter()
        .min_by(|&x, &y| best_for(x).total_cmp(&best_for(y)).then(x.abs().cmp(&y.abs())))
        .unwrap_or(0);
    let gap: Vec<f64> = raw.iter().zip(&quantum).map(|(d, q)| d + zone_shift as f64 * q).collect();
    let params: Vec<f64> = p1.iter().map(|p| p.param).collect();

    let sign_change = (0..gap.len() - 1)
        .filter(|&i| gap[i] == 0.0 || gap[i] * gap[i + 1] < 0.0)
        .min_by(|&i, &j| {
            let wi = gap[i].abs().min(gap[i + 1].abs());
            let wj = gap[j].abs().min(gap[j + 1].abs());
            wi.total_cmp(&wj)
        });

    let (centre, omega_star, min_gap) = match sign_change {
        Some(i) => {
            let t = gap[i] / (gap[i] - gap[i + 1]);
            let star = params[i] + t * (params[i + 1] - params[i]);
            let centre = if t <= 0.5 { i } else { i + 1 };
            (centre, star, 0.0)
        }
        None => {
            let i = (0..gap.len()).min_by(|&x, &y| gap[x].abs().total_cmp(&gap[y].abs())).unwrap_or(0);
            if i == 0 || i == gap.len() - 1 {
                return Err(Error::GridTooCoarse);
            }
            let (x0, x1, x2) = (params[i - 1], params[i], params[i + 1]);
            let (y0, y1, y2) = (gap[i - 1].abs(), gap[i].abs(), gap[i + 1].abs());
            let (star, value) = parabola_vertex(x0, x1, x2, y0, y1, y2).unwrap_or((x1, y1));
            (i, star, value.clamp(0.0, y1))
        }
    };

    let before = centre.saturating_sub(STABILITY_OFFSET);
    let after = (centre + STABILITY_OFFSET).min(gap.len() - 1);
    let order = |i: usize| (p1[i].epsilon.im - p2[i].epsilon.im).signum();
    let stability_exchanged = before != after && order(before) * order(after) < 0.0;

    let kind = if min_gap < gap_tolerance { CrossingKind::Direct } else { CrossingKind::Avoided };
    Ok(CrossingReport {
        kind,
        omega_star,
        min_gap,
        gap_tolerance,
        stability_exchanged,
        branches: [b1.seed, b2.seed],
        zone_shift,
    })
}

fn parabola_vertex(x0: f64, x1: f64, x2: f64, y0: f64, y1: f64, y2: f64) -> Option<(f64, f64)> {
    let d01 = (y1 - y0) / (x1 - x0);
    let d12 = (y2 - y1) / (x2 - x1);
    let curv = (d12 - d01) / (x2 - x0);
    if curv <= 0.0 {
        return None;
    }
    let slope = d01 - curv * (x0 + x1);
    let xv = -slope / (2.0 * curv);
    if !(x0..=x2).contains(&xv) {
        return None;
    }
    let yv = y0 + d01 * (xv - x0) + curv * (xv - x0) * (xv - x1);
    Some((xv, yv))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalScan {
    /// Amplitude at which the minimum gap reaches the tolerance, interpolated
    /// between the last direct and first avoided grid values.
    pub v1_critical: f64,
    /// First grid amplitude classified as avoided.
    pub first_avoided: f64,
    /// Whether `min_gap` never decreases beyond `first_avoided`.
    pub monotone_beyond: bool,
    pub reports: Vec<(f64, CrossingReport)>,
    /// Amplitudes where classification failed, with the reason.
    pub failures: Vec<(f64, String)>,
}

/// Runs `report` at every amplitude (in parallel) and locates the transition.
pub fn critical_scan<F>(v1_grid: &[f64], report: F) -> Result<CriticalScan>
where
    F: Fn(f64) -> Result<CrossingReport> + Sync,
{
    if v1_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain("amplitude grid must be increasing".into()));
    }
    let results: Vec<(f64, Result<CrossingReport>)> = v1_grid.par_iter().map(|&v| (v, report(v))).collect();
    let mut reports = Vec::new();
    let mut failures = Vec::new();
    for (v, r) in results {
        match r {
            Ok(rep) => reports.push((v, rep)),
            Err(e) => failures.push((v, e.to_string())),
        }
    }
    let first = reports
        .iter()
        .position(|(_, r)| r.kind == CrossingKind::Avoided)
        .ok_or_else(|| Error::NotFound("no avoided crossing over the amplitude grid".into()))?;
    let (v_hi, r_hi) = &reports[first];
    let v1_critical = match first.checked_sub(1).map(|i| &reports[i]) {
        Some((v_lo, r_lo)) if r_hi.min_gap > r_lo.min_gap => {
            let t = (r_hi.gap_tolerance - r_lo.min_gap) / (r_hi.min_gap - r_lo.min_gap);
            v_lo + t.clamp(0.0, 1.0) * (v_hi - v_lo)
        }
        _ => *v_hi,
    };
    let monotone_beyond = reports[first..].windows(2).all(|w| w[1].1.min_gap >= w[0].1.min_gap);
    Ok(CriticalScan { v1_critical, first_avoided: *v_hi, monotone_beyond, reports, failures })
}

/// Amplitude scan for a pair of seeds over a frequency window.
pub fn critical_amplitude_scan(
    geom: &WellGeometry,
    model: Model,
    n_sidebands: usize,
    v1_grid: &[f64],
    omega_window: &[f64],
    seeds: [Complex64; 2],
    gap_tolerance: f64,
) -> Result<CriticalScan> {
    let cfg = ContinuationConfig::for_barrier(geom.v0);
    critical_scan(v1_grid, |v1| {
        let spec = SweepSpec::omega(model, v1, n_sidebands, omega_window.to_vec());
        let branches = sweep(geom, &spec, &seeds, &cfg)?;
        classify_crossing(&branches[0], &branches[1], gap_tolerance)
    })
}
