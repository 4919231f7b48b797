//! Scans the drive amplitude for the change from direct to avoided crossing.

use floquet_well::potential::{Model, WellGeometry};
use floquet_well::spectra::{critical_amplitude_scan, linear_grid};
use floquet_well::static_solver::static_resonances;

fn main() -> floquet_well::Result<()> {
    let geom = WellGeometry::reference();
    let r = static_resonances(&geom, 1.5 * geom.v0);
    let seeds = [r[0].energy, r[1].energy];
    let scan = critical_amplitude_scan(
        &geom,
        Model::A,
        2,
        &linear_grid(1.0, 2.5, 15),
        &linear_grid(6.5, 9.5, 60),
        seeds,
        1e-4 * geom.v0,
    )?;
    for (v1, rep) in &scan.reports {
        println!("V1 {v1:.2}: {:?} gap {:.3e}", rep.kind, rep.min_gap);
    }
    println!("critical amplitude ~ {:.4} (first avoided at {:.2})", scan.v1_critical, scan.first_avoided);
    Ok(())
}
