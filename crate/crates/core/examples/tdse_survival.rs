//! Propagates a resonance-shaped packet out of the static well and fits
//! the survival decay rate.

use floquet_well::potential::WellGeometry;
use floquet_well::static_solver::static_solve;
use floquet_well::tdse::{fit_decay_rate, gamow_shape, propagate, FitOptions, GridSpec, Hamiltonian};
use num_complex::Complex64;

fn main() -> floquet_well::Result<()> {
    let geom = WellGeometry::reference();
    let e0 = static_solve(&geom, Complex64::new(3.2, -0.001))?.energy;
    let gamma = -2.0 * e0.im;
    let grid = GridSpec::default();
    let ham = Hamiltonian::well(&geom, None, grid)?;
    let psi = gamow_shape(&geom, &grid, e0.re)?;
    let (series, _) = propagate(&ham, &psi, 0.5 / gamma, 250)?;
    let fit = fit_decay_rate(&series.times, &series.survival, &FitOptions::default())?;
    println!("fitted rate {:.6e}, expected {:.6e}, R^2 {:.6}", fit.rate, gamma, fit.r_squared);
    println!("final norm {:.6}", series.norm.last().copied().unwrap_or(f64::NAN));
    Ok(())
}
