//! Region-wise Floquet wavefunctions and the nondecay probability.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::floquet::FloquetRoot;
use crate::potential::Model;
use crate::quad::integrate;
use crate::special::BesselTable;

const I: Complex64 = Complex64::new(0.0, 1.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Samples per drive period for the time average of `h`.
pub const PERIOD_SAMPLES: usize = 256;
const QUAD_TOL: f64 = 1e-11;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Region {
    I,
    II,
    III,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WavefunctionSample {
    pub x: f64,
    pub t: f64,
    pub psi: Complex64,
    pub region: Region,
}

pub fn region_of(root: &FloquetRoot, x: f64) -> Region {
    let g = &root.geometry;
    if x < g.a {
        Region::I
    } else if x <= g.b {
        Region::II
    } else {
        Region::III
    }
}

/// How the drive's Bessel dressing enters the dressed region (the barrier for
/// model A, the well for model B).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Dressing {
    /// Double sum over the retained side-bands `|n|, |l| <= N`, matching the
    /// truncated boundary equations.
    #[default]
    Truncated,
    /// Closed-form factor `e^{-i alpha sin(wt)}`, i.e. the Bessel sum over all orders.
    Resummed,
}

/// `Psi(x, t)` and `dPsi/dx` for `x >= 0`; zero behind the wall.
pub fn evaluate_with_derivative(root: &FloquetRoot, x: f64, t: f64) -> (Complex64, Complex64) {
    evaluate_dressed(root, x, t, Dressing::Truncated)
}

pub fn evaluate_dressed(root: &FloquetRoot, x: f64, t: f64, dressing: Dressing) -> (Complex64, Complex64) {
    if x < 0.0 {
        return (ZERO, ZERO);
    }
    let g = &root.geometry;
    let d = &root.drive;
    let kin = root.kinematics();
    let c = &root.coefficients;
    let n = d.n_sidebands as i64;
    let w = d.omega;
    let base = (-I * root.epsilon * t / g.hbar).exp();
    let band = |m: i64| base * (-I * (m as f64 * w * t)).exp();
    let bessel = BesselTable::for_sidebands(d.alpha(g), d.n_sidebands).ok();
    let j = |m: i64| bessel.as_ref().map_or(if m == 0 { 1.0 } else { 0.0 }, |b| b.get(m));

    let region = region_of(root, x);
    let dressed = matches!((region, d.model), (Region::I, Model::B) | (Region::II, Model::A));
    if dressed && dressing == Dressing::Resummed {
        let phase = (-I * d.alpha(g) * (w * t).sin()).exp();
        let (mut psi, mut dpsi) = (ZERO, ZERO);
        for m in -n..=n {
            let (f, df) = if region == Region::I {
                let k = kin.k(m);
                (c.well(m) * (k * x).sin(), c.well(m) * k * (k * x).cos())
            } else {
                let q = kin.q(m);
                let up = c.barrier_up(m) * (q * (x - g.b)).exp();
                let down = c.barrier_down(m) * (-q * (x - g.a)).exp();
                (up + down, q * (up - down))
            };
            psi += f * band(m);
            dpsi += df * band(m);
        }
        return (psi * phase, dpsi * phase);
    }

    let (mut psi, mut dpsi) = (ZERO, ZERO);
    match (region, d.model) {
        (Region::I, Model::A) => {
            for m in -n..=n {
                let k = kin.k(m);
                let f = c.well(m) * band(m);
                psi += f * (k * x).sin();
                dpsi += f * k * (k * x).cos();
            }
        }
        (Region::I, Model::B) => {
            let modes: Vec<(Complex64, Complex64)> = (-n..=n)
                .map(|m| {
                    let k = kin.k(m);
                    (c.well(m) * (k * x).sin(), c.well(m) * k * (k * x).cos())
                })
                .collect();
            for l in -n..=n {
                let (mut v, mut dv) = (ZERO, ZERO);
                for m in -n..=n {
                    let (f, df) = modes[(m + n) as usize];
                    v += f * j(l - m);
                    dv += df * j(l - m);
                }
                psi += v * band(l);
                dpsi += dv * band(l);
            }
        }
        (Region::II, model) => {
            let modes: Vec<(Complex64, Complex64)> = (-n..=n)
                .map(|l| {
                    let q = kin.q(l);
                    let up = c.barrier_up(l) * (q * (x - g.b)).exp();
                    let down = c.barrier_down(l) * (-q * (x - g.a)).exp();
                    (up + down, q * (up - down))
                })
                .collect();
            match model {
                Model::A => {
                    for m in -n..=n {
                        let (mut v, mut dv) = (ZERO, ZERO);
                        for l in -n..=n {
                            let (f, df) = modes[(l + n) as usize];
                            v += f * j(m - l);
                            dv += df * j(m - l);
                        }
                        psi += v * band(m);
                        dpsi += dv * band(m);
                    }
                }
                Model::B => {
                    for l in -n..=n {
                        let (f, df) = modes[(l + n) as usize];
                        psi += f * band(l);
                        dpsi += df * band(l);
                    }
                }
            }
        }
        (Region::III, _) => {
            for m in -n..=n {
                let k = kin.k(m);
                let f = c.transmitted(m) * (I * k * x).exp() * band(m);
                psi += f;
                dpsi += I * k * f;
            }
        }
    }
    (psi, dpsi)
}

pub fn evaluate_wavefunction(root: &FloquetRoot, x: f64, t: f64) -> Complex64 {
    evaluate_with_derivative(root, x, t).0
}

pub fn sample_wavefunction(root: &FloquetRoot, x: f64, t: f64) -> WavefunctionSample {
    WavefunctionSample { x, t, psi: evaluate_wavefunction(root, x, t), region: region_of(root, x) }
}

/// Periodic part `Phi = e^{i eps t / hbar} Psi`.
pub fn floquet_mode(root: &FloquetRoot, x: f64, t: f64) -> Complex64 {
    evaluate_wavefunction(root, x, t) * (I * root.epsilon * t / root.geometry.hbar).exp()
}

/// `int_0^b |Psi(x, t)|^2 dx`.
pub fn interior_norm(root: &FloquetRoot, t: f64) -> f64 {
    let g = &root.geometry;
    let density = |x: f64| evaluate_wavefunction(root, x, t).norm_sqr();
    integrate(density, 0.0, g.a, QUAD_TOL) + integrate(density, g.a, g.b, QUAD_TOL)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayCurve {
    pub times: Vec<f64>,
    pub p: Vec<f64>,
    pub pbar: Vec<f64>,
    /// `h(t) = P(t) e^{-2 Im(eps) t / hbar}`
    pub h: Vec<f64>,
    pub im_eps: f64,
    pub mean_h: f64,
    pub hbar: f64,
}

impl DecayCurve {
    /// Decay exponent `2 Im(eps) / hbar` shared by `P` and `Pbar`.
    pub fn exponent(&self) -> f64 {
        2.0 * self.im_eps / self.hbar
    }
}

/// `P(t)`, `h(t)` and the coarse-grained `Pbar(t)` at the given times.
pub fn nondecay_probability(root: &FloquetRoot, times: &[f64]) -> Result<DecayCurve> {
    if times.first() != Some(&0.0) {
        return Err(Error::Domain("times must start at t = 0".into()));
    }
    let hbar = root.geometry.hbar;
    let rate = 2.0 * root.epsilon.im / hbar;
    let norm0 = interior_norm(root, 0.0);
    if !(norm0 > 0.0 && norm0.is_finite()) {
        return Err(Error::Domain("Floquet state has no weight inside the well".into()));
    }
    let p: Vec<f64> = times
        .par_iter()
        .enumerate()
        .map(|(i, &t)| if i == 0 { 1.0 } else { interior_norm(root, t) / norm0 })
        .collect();
    let h: Vec<f64> = p.iter().zip(times).map(|(p, t)| p * (-rate * t).exp()).collect();

    let period = 2.0 * PI / root.drive.omega;
    let mean_h = (0..PERIOD_SAMPLES)
        .into_par_iter()
        .map(|j| {
            let t = period * j as f64 / PERIOD_SAMPLES as f64;
            let pj = if j == 0 { 1.0 } else { interior_norm(root, t) / norm0 };
            pj * (-rate * t).exp()
        })
        .sum::<f64>()
        / PERIOD_SAMPLES as f64;
    let pbar = times.iter().map(|t| (rate * t).exp() * mean_h).collect();

    Ok(DecayCurve { times: times.to_vec(), p, pbar, h, im_eps: root.epsilon.im, mean_h, hbar })
}
