//! Gamow resonances of the undriven well.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potential::WellGeometry;
use crate::rootfind::{find_root, RootConfig};

/// A decaying resonance `E = E0 - i Gamma / 2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StaticResonance {
    pub energy: Complex64,
    pub width: f64,
    pub residual: f64,
}

impl StaticResonance {
    /// Energy in units of the barrier height.
    pub fn scaled(&self, geom: &WellGeometry) -> Complex64 {
        self.energy / geom.v0
    }
}

/// Outgoing-wave matching condition of the static well.
///
/// `(q/k) tan(ka) + 1 - [(q + ik)/(q - ik)] ((q/k) tan(ka) - 1) e^{-2q(b-a)}`
pub fn static_residual(geom: &WellGeometry, energy: Complex64) -> Result<Complex64> {
    if energy.norm() == 0.0 {
        return Err(Error::Domain("static residual undefined at E = 0".into()));
    }
    let k = geom.wavenumber(energy);
    let q = geom.decay_constant(energy);
    let i = Complex64::i();
    let cos = (k * geom.a).cos();
    let den = q - i * k;
    if cos.norm() == 0.0 || den.norm() == 0.0 {
        return Err(Error::Pole { at: energy });
    }
    let qt = q / k * (k * geom.a).sin() / cos;
    let value = qt + 1.0 - (q + i * k) / den * (qt - 1.0) * (-2.0 * q * geom.barrier_width()).exp();
    if value.re.is_finite() && value.im.is_finite() {
        Ok(value)
    } else {
        Err(Error::Pole { at: energy })
    }
}

/// Polishes a resonance from `guess` with the default tolerances.
pub fn static_solve(geom: &WellGeometry, guess: Complex64) -> Result<StaticResonance> {
    static_solve_with(geom, guess, &RootConfig::for_barrier(geom.v0))
}

pub fn static_solve_with(
    geom: &WellGeometry,
    guess: Complex64,
    cfg: &RootConfig,
) -> Result<StaticResonance> {
    geom.validate()?;
    let info = find_root(|e| static_residual(geom, e), guess, cfg)?;
    let energy = info.root;
    if energy.im > 0.0 {
        return Err(Error::NonPhysical { energy });
    }
    Ok(StaticResonance { energy, width: -2.0 * energy.im, residual: info.residual })
}

/// Closed-well level condition with a hard wall moved to `x = b`.
fn closed_well(geom: &WellGeometry, e: f64) -> f64 {
    let k = (2.0 * geom.mass * e).sqrt() / geom.hbar;
    let l = geom.barrier_width();
    let (s, c) = if e < geom.v0 {
        let q = (2.0 * geom.mass * (geom.v0 - e)).sqrt() / geom.hbar;
        if q * l < 1e-12 {
            (l, 1.0)
        } else {
            // scaled by e^{-qL} to stay finite
            let decay = (-2.0 * q * l).exp();
            ((1.0 - decay) / (2.0 * q), (1.0 + decay) / 2.0)
        }
    } else {
        let kappa = (2.0 * geom.mass * (e - geom.v0)).sqrt() / geom.hbar;
        if kappa * l < 1e-12 {
            (l, 1.0)
        } else {
            ((kappa * l).sin() / kappa, (kappa * l).cos())
        }
    };
    k * (k * geom.a).cos() * s + (k * geom.a).sin() * c
}

/// Real levels of the closed well in `(0, e_max)`, used as resonance seeds.
pub fn closed_well_levels(geom: &WellGeometry, e_max: f64) -> Vec<f64> {
    let samples = 4000;
    let h = e_max / samples as f64;
    let mut levels = Vec::new();
    let mut lo = h * 1e-3;
    let mut g_lo = closed_well(geom, lo);
    for i in 1..=samples {
        let hi = i as f64 * h;
        let g_hi = closed_well(geom, hi);
        if g_lo == 0.0 {
            levels.push(lo);
        } else if g_lo * g_hi < 0.0 {
            let (mut a, mut b, mut ga) = (lo, hi, g_lo);
            for _ in 0..200 {
                let m = 0.5 * (a + b);
                let gm = closed_well(geom, m);
                if ga * gm <= 0.0 {
                    b = m;
                } else {
                    a = m;
                    ga = gm;
                }
                if b - a <= 1e-14 * b {
                    break;
                }
            }
            levels.push(0.5 * (a + b));
        }
        lo = hi;
        g_lo = g_hi;
    }
    levels
}

/// Every resonance reachable from the closed-well seeds below `e_max`,
/// sorted by real part and deduplicated.
pub fn static_resonances(geom: &WellGeometry, e_max: f64) -> Vec<StaticResonance> {
    let cfg = RootConfig::for_barrier(geom.v0);
    let mut found: Vec<StaticResonance> = Vec::new();
    for level in closed_well_levels(geom, e_max) {
        let guess = Complex64::new(level, -1e-4 * geom.v0);
        let Ok(r) = static_solve_with(geom, guess, &cfg) else { continue };
        if r.energy.re <= 0.0 {
            continue;
        }
        let duplicate = found.iter().any(|f| (f.energy - r.energy).norm() < 1e-8 * geom.v0);
        if !duplicate {
            found.push(r);
        }
    }
    found.sort_by(|a, b| a.energy.re.total_cmp(&b.energy.re));
    found
}
