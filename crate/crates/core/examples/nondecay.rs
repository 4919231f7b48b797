//! Nondecay probability of a driven resonance and its periodic modulation.

use floquet_well::floquet::solve_floquet;
use floquet_well::observables::nondecay_probability;
use floquet_well::potential::{DriveSpec, Model, WellGeometry};
use floquet_well::rootfind::RootConfig;
use floquet_well::spectra::linear_grid;
use floquet_well::static_solver::static_solve;
use num_complex::Complex64;

fn main() -> floquet_well::Result<()> {
    let geom = WellGeometry::reference();
    let e0 = static_solve(&geom, Complex64::new(3.2, -0.001))?.energy;
    let drive = DriveSpec::with_default_sidebands(&geom, 1.0, 2.0, Model::A);
    let root = solve_floquet(&geom, &drive, e0, &RootConfig::for_barrier(geom.v0))?;
    let period = 2.0 * std::f64::consts::PI / drive.omega;
    let times = linear_grid(0.0, 2.0 * period, 16);
    let curve = nondecay_probability(&root, &times)?;
    println!("<h> = {:.6}, exponent {:.6e}", curve.mean_h, curve.exponent());
    for i in 0..times.len() {
        println!("t {:7.4}  P {:.8}  Pbar {:.8}  h {:.6}", curve.times[i], curve.p[i], curve.pbar[i], curve.h[i]);
    }
    Ok(())
}
