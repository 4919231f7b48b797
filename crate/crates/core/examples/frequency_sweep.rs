//! Continues the two lowest branches across a range of drive frequencies.

use floquet_well::potential::{Model, WellGeometry};
use floquet_well::rootfind::ContinuationConfig;
use floquet_well::spectra::{linear_grid, sweep, SweepSpec};
use floquet_well::static_solver::static_resonances;

fn main() -> floquet_well::Result<()> {
    let geom = WellGeometry::reference();
    let seeds: Vec<_> = static_resonances(&geom, 1.5 * geom.v0).iter().map(|r| r.energy).collect();
    let spec = SweepSpec::omega(Model::A, 1.0, 2, linear_grid(2.0, 4.0, 20));
    let branches = sweep(&geom, &spec, &seeds, &ContinuationConfig::for_barrier(geom.v0))?;
    for (id, branch) in branches.iter().enumerate() {
        println!("branch {id} ({:?})", branch.status);
        for p in branch.grid_points().step_by(4) {
            println!("  omega {:.2}: eps {:.8} {:+.8}i zone {}", p.param, p.epsilon.re, p.epsilon.im, p.zone);
        }
    }
    Ok(())
}
