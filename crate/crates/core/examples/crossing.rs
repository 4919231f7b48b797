//! Classifies the crossing of the two lowest branches near the
//! one-photon resonance.

use floquet_well::potential::{Model, WellGeometry};
use floquet_well::rootfind::ContinuationConfig;
use floquet_well::spectra::{classify_crossing, linear_grid, sweep, SweepSpec};
use floquet_well::static_solver::static_resonances;

fn main() -> floquet_well::Result<()> {
    let geom = WellGeometry::reference();
    let seeds: Vec<_> = static_resonances(&geom, 1.5 * geom.v0).iter().map(|r| r.energy).collect();
    let cfg = ContinuationConfig::for_barrier(geom.v0);
    for v1 in [1.0, 3.0] {
        let spec = SweepSpec::omega(Model::A, v1, 2, linear_grid(7.0, 9.0, 100));
        let branches = sweep(&geom, &spec, &seeds, &cfg)?;
        let report = classify_crossing(&branches[0], &branches[1], 1e-4 * geom.v0)?;
        println!(
            "V1 = {v1}: {:?} at omega* = {:.4}, min gap {:.3e}, stability exchanged: {}",
            report.kind, report.omega_star, report.min_gap, report.stability_exchanged
        );
    }
    Ok(())
}
