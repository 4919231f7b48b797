//! Crank-Nicolson integration of the driven Schrödinger equation on a grid,
//! used as an independent check of Floquet decay rates.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potential::{DriveSpec, Model, WellGeometry};

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub dx: f64,
    pub x_max: f64,
    pub dt: f64,
    pub cap_start: f64,
    pub cap_strength: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { dx: 0.005, x_max: 30.0, dt: 0.002, cap_start: 18.0, cap_strength: 5.0 }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.dx > 0.0 && self.dt > 0.0) {
            return Err(Error::Domain("dx and dt must be positive".into()));
        }
        if !(self.cap_start < self.x_max) || self.cap_strength < 0.0 {
            return Err(Error::Domain("absorber must start inside the grid with non-negative strength".into()));
        }
        Ok(())
    }

    /// Same box and absorber at half the spacing and half the step.
    pub fn refined(&self) -> Self {
        GridSpec { dx: 0.5 * self.dx, dt: 0.5 * self.dt, ..*self }
    }

    /// Number of nodes including both walls.
    pub fn nodes(&self) -> usize {
        (self.x_max / self.dx).round() as usize + 1
    }

    pub fn x(&self, j: usize) -> f64 {
        j as f64 * self.dx
    }

    /// Crank-Nicolson is stable for any step, but loses accuracy once
    /// `dt > dx^2`.
    pub fn exceeds_accuracy_bound(&self) -> bool {
        self.dt > self.dx * self.dx
    }

    fn absorber(&self, x: f64) -> f64 {
        if x <= self.cap_start {
            0.0
        } else {
            self.cap_strength * ((x - self.cap_start) / (self.x_max - self.cap_start)).powi(4)
        }
    }
}

/// Grid Hamiltonian `-hbar^2/2m d^2/dx^2 + V(x) + cos(wt) U(x) - i W(x)`.
#[derive(Debug, Clone)]
pub struct Hamiltonian {
    pub grid: GridSpec,
    pub mass: f64,
    pub hbar: f64,
    pub omega: f64,
    static_part: Vec<f64>,
    driven_part: Vec<f64>,
    absorber: Vec<f64>,
    /// Survival is measured on `[0, survival_edge]`.
    pub survival_edge: f64,
}

/// Fraction of the cell `[x - dx/2, x + dx/2]` lying inside `[lo, hi]`.
fn overlap(x: f64, dx: f64, lo: f64, hi: f64) -> f64 {
    let left = (x - 0.5 * dx).max(lo);
    let right = (x + 0.5 * dx).min(hi);
    ((right - left) / dx).max(0.0)
}

impl Hamiltonian {
    pub fn free(grid: GridSpec) -> Result<Self> {
        grid.validate()?;
        let m = grid.nodes();
        Ok(Hamiltonian {
            grid,
            mass: 1.0,
            hbar: 1.0,
            omega: 0.0,
            static_part: vec![0.0; m],
            driven_part: vec![0.0; m],
            absorber: (0..m).map(|j| grid.absorber(grid.x(j))).collect(),
            survival_edge: grid.cap_start,
        })
    }

    /// Well potential with cell-averaged steps, optionally driven.
    pub fn well(geom: &WellGeometry, drive: Option<&DriveSpec>, grid: GridSpec) -> Result<Self> {
        geom.validate()?;
        grid.validate()?;
        if !(geom.b < grid.cap_start) {
            return Err(Error::Domain("absorber must start beyond the barrier".into()));
        }
        let mut h = Self::free(grid)?;
        h.mass = geom.mass;
        h.hbar = geom.hbar;
        h.survival_edge = geom.b;
        for j in 0..grid.nodes() {
            let x = grid.x(j);
            let barrier = overlap(x, grid.dx, geom.a, geom.b);
            h.static_part[j] = geom.v0 * barrier;
            if let Some(d) = drive {
                h.driven_part[j] = match d.model {
                    Model::A => d.v1 * barrier,
                    Model::B => d.v1 * overlap(x, grid.dx, f64::NEG_INFINITY, geom.a),
                };
            }
        }
        if let Some(d) = drive {
            d.validate(geom, true)?;
            h.omega = d.omega;
        }
        Ok(h)
    }

    fn kinetic(&self) -> f64 {
        self.hbar * self.hbar / (2.0 * self.mass * self.grid.dx * self.grid.dx)
    }
}

/// Normalized Gaussian packet `exp(-(x-x0)^2/4 sigma^2 + i k0 x)`.
pub fn gaussian_packet(grid: &GridSpec, x0: f64, sigma: f64, k0: f64) -> Vec<Complex64> {
    let mut psi: Vec<Complex64> = (0..grid.nodes())
        .map(|j| {
            let x = grid.x(j);
            (-(x - x0).powi(2) / (4.0 * sigma * sigma)).exp() * (I * k0 * x).exp()
        })
        .collect();
    clamp_walls(&mut psi);
    normalize(grid, &mut psi);
    psi
}

/// `sin(kx)` in the well joined smoothly to the barrier solution at the real
/// part of `energy`, cut off at `x = b` and normalized.
pub fn gamow_shape(geom: &WellGeometry, grid: &GridSpec, energy: f64) -> Result<Vec<Complex64>> {
    if !(energy > 0.0 && energy < geom.v0) {
        return Err(Error::Domain("initial-state energy must lie in (0, V0)".into()));
    }
    let k = (2.0 * geom.mass * energy).sqrt() / geom.hbar;
    let q = (2.0 * geom.mass * (geom.v0 - energy)).sqrt() / geom.hbar;
    let (s, c) = ((k * geom.a).sin(), k * (k * geom.a).cos());
    let ja = (geom.a / grid.dx - 1e-9).ceil() as usize;
    let jb = (geom.b / grid.dx + 1e-9).floor() as usize;
    let mut psi: Vec<Complex64> = (0..grid.nodes())
        .map(|j| {
            let x = grid.x(j);
            let v = if j < ja {
                (k * x).sin()
            } else if j <= jb {
                let y = q * (x - geom.a);
                s * y.cosh() + c / q * y.sinh()
            } else {
                0.0
            };
            Complex64::new(v, 0.0)
        })
        .collect();
    clamp_walls(&mut psi);
    normalize(grid, &mut psi);
    Ok(psi)
}

fn clamp_walls(psi: &mut [Complex64]) {
    let last = psi.len() - 1;
    psi[0] = Complex64::new(0.0, 0.0);
    psi[last] = Complex64::new(0.0, 0.0);
}

/// `sum |psi|^2 dx` over nodes with `x <= edge`, trapezoidal weights.
pub fn probability_below(grid: &GridSpec, psi: &[Complex64], edge: f64) -> f64 {
    let last = ((edge / grid.dx + 1e-9).floor() as usize).min(psi.len() - 1);
    let mut sum: f64 = psi[1..last].iter().map(|p| p.norm_sqr()).sum();
    sum += 0.5 * (psi[0].norm_sqr() + psi[last].norm_sqr());
    let tail = (edge - grid.x(last)).max(0.0);
    if tail > 1e-12 * grid.dx && last + 1 < psi.len() {
        // partial cell, linear density
        let f = tail / grid.dx;
        let (p0, p1) = (psi[last].norm_sqr(), psi[last + 1].norm_sqr());
        sum += f * (p0 + 0.5 * f * (p1 - p0));
    }
    sum * grid.dx
}

pub fn total_probability(grid: &GridSpec, psi: &[Complex64]) -> f64 {
    probability_below(grid, psi, grid.x_max)
}

fn normalize(grid: &GridSpec, psi: &mut [Complex64]) {
    let n = total_probability(grid, psi).sqrt();
    if n > 0.0 {
        psi.iter_mut().for_each(|p| *p /= n);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurvivalSeries {
    pub times: Vec<f64>,
    /// Probability on `[0, survival_edge]`.
    pub survival: Vec<f64>,
    /// Probability on the whole grid.
    pub norm: Vec<f64>,
    /// Set when `dt > dx^2`.
    pub accuracy_warning: bool,
}

/// Steps `psi0` to `t_final`, recording every `record_every` steps.
pub fn propagate(
    ham: &Hamiltonian,
    psi0: &[Complex64],
    t_final: f64,
    record_every: usize,
) -> Result<(SurvivalSeries, Vec<Complex64>)> {
    let grid = &ham.grid;
    let m = grid.nodes();
    if psi0.len() != m {
        return Err(Error::Domain(format!("initial state has {} nodes, grid has {m}", psi0.len())));
    }
    if psi0[0].norm() != 0.0 {
        return Err(Error::Domain("initial state must vanish at x = 0".into()));
    }
    if total_probability(grid, psi0) - probability_below(grid, psi0, grid.cap_start) > 1e-10 {
        return Err(Error::Domain("initial state must vanish inside the absorber".into()));
    }
    if (total_probability(grid, psi0) - 1.0).abs() > 1e-8 {
        return Err(Error::Domain("initial state must be normalized".into()));
    }
    let record_every = record_every.max(1);
    let steps = (t_final / grid.dt).round() as usize;

    let tau = grid.dt / (2.0 * ham.hbar);
    let kin = ham.kinetic();
    // constant off-diagonal of 1 + i tau H
    let off = I * tau * (-kin);
    let n = m - 2;
    let zero = Complex64::new(0.0, 0.0);
    let lhs_static: Vec<Complex64> = (1..m - 1)
        .map(|j| 1.0 + I * tau * Complex64::new(2.0 * kin + ham.static_part[j], -ham.absorber[j]))
        .collect();
    let rhs_static: Vec<Complex64> = lhs_static.iter().map(|d| 2.0 - d).collect();
    let coupling: Vec<Complex64> = (1..m - 1).map(|j| I * tau * ham.driven_part[j]).collect();
    // rows at and beyond `moving` never change, so their factors are reused
    let moving = coupling.iter().rposition(|c| c.norm() != 0.0).map_or(0, |i| i + 1);

    let mut gain = vec![zero; n];
    let mut inv_pivot = vec![zero; n];
    let factor = |lhs: &dyn Fn(usize) -> Complex64, upto: usize, gain: &mut [Complex64], inv_pivot: &mut [Complex64]| {
        for i in (0..upto).rev() {
            let pivot = if i + 1 < n {
                gain[i] = off * inv_pivot[i + 1];
                lhs(i) - off * gain[i]
            } else {
                lhs(i)
            };
            inv_pivot[i] = 1.0 / pivot;
        }
    };
    factor(&|i| lhs_static[i], n, &mut gain, &mut inv_pivot);

    let mut psi = psi0.to_vec();
    let mut work = vec![zero; n];
    let mut series = SurvivalSeries {
        times: vec![0.0],
        survival: vec![probability_below(grid, &psi, ham.survival_edge)],
        norm: vec![total_probability(grid, &psi)],
        accuracy_warning: grid.exceeds_accuracy_bound(),
    };

    for step in 0..steps {
        let t_mid = (step as f64 + 0.5) * grid.dt;
        let drive = (ham.omega * t_mid).cos();
        if moving > 0 {
            factor(&|i| lhs_static[i] + drive * coupling[i], moving, &mut gain, &mut inv_pivot);
        }
        // (1 - i tau H) psi, eliminated from the far wall inwards
        for i in (0..n).rev() {
            let j = i + 1;
            let diag = if i < moving { rhs_static[i] - drive * coupling[i] } else { rhs_static[i] };
            let mut r = diag * psi[j] - off * (psi[j - 1] + psi[j + 1]);
            if i + 1 < n {
                r -= gain[i] * work[i + 1];
            }
            work[i] = r;
        }
        let mut prev = zero;
        for i in 0..n {
            prev = (work[i] - off * prev) * inv_pivot[i];
            psi[i + 1] = prev;
        }

        if (step + 1) % record_every == 0 {
            series.times.push((step + 1) as f64 * grid.dt);
            series.survival.push(probability_below(grid, &psi, ham.survival_edge));
            series.norm.push(total_probability(grid, &psi));
        }
    }
    Ok((series, psi))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    /// Leading fraction of the series discarded as transient.
    pub drop_fraction: f64,
    /// Averages the series over this period before fitting.
    pub average_period: Option<f64>,
    pub min_r_squared: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions { drop_fraction: 0.1, average_period: None, min_r_squared: 0.99 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    /// `gamma` in `P ~ e^{-gamma t}`.
    pub rate: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub samples: usize,
}

/// Least-squares slope of `ln P(t)` on uniformly spaced samples.
pub fn fit_decay_rate(times: &[f64], values: &[f64], opts: &FitOptions) -> Result<DecayFit> {
    if times.len() != values.len() || times.len() < 3 {
        return Err(Error::Domain("need at least three matching samples".into()));
    }
    let (mut t, mut v) = (times.to_vec(), values.to_vec());
    if let Some(period) = opts.average_period {
        let spacing = t[1] - t[0];
        let width = (period / spacing).round() as usize;
        if width < 2 || width >= t.len() {
            return Err(Error::Domain("averaging period must span between 2 and len-1 samples".into()));
        }
        let count = t.len() - width + 1;
        let mut sum: f64 = v[..width].iter().sum();
        let mut averaged = Vec::with_capacity(count);
        for i in 0..count {
            if i > 0 {
                sum += v[i + width - 1] - v[i - 1];
            }
            averaged.push(sum / width as f64);
        }
        t = (0..count).map(|i| t[i] + 0.5 * (width - 1) as f64 * spacing).collect();
        v = averaged;
    }
    let skip = (opts.drop_fraction * t.len() as f64).floor() as usize;
    let pairs: Vec<(f64, f64)> = t[skip..].iter().zip(&v[skip..]).filter(|(_, p)| **p > 0.0).map(|(t, p)| (*t, p.ln())).collect();
    if pairs.len() < 3 {
        return Err(Error::Domain("too few positive samples in the fit window".into()));
    }
    let n = pairs.len() as f64;
    let mean_t = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let stt: f64 = pairs.iter().map(|p| (p.0 - mean_t).powi(2)).sum();
    let sty: f64 = pairs.iter().map(|p| (p.0 - mean_t) * (p.1 - mean_y)).sum();
    let syy: f64 = pairs.iter().map(|p| (p.1 - mean_y).powi(2)).sum();
    let slope = sty / stt;
    let intercept = mean_y - slope * mean_t;
    let ss_res: f64 = pairs.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let r_squared = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    if r_squared < opts.min_r_squared {
        return Err(Error::PoorFit { r_squared });
    }
    Ok(DecayFit { rate: -slope, intercept, r_squared, samples: pairs.len() })
}

/// Recording stride giving `per_period` samples per drive period, or a
/// stride of `fallback` steps when undriven.
pub fn record_stride(grid: &GridSpec, omega: f64, per_period: usize, fallback: usize) -> usize {
    if omega > 0.0 {
        let period = 2.0 * PI / omega;
        ((period / per_period as f64) / grid.dt).round().max(1.0) as usize
    } else {
        fallback
    }
}
