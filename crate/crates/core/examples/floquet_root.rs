//! Solves one Floquet quasienergy in both driving models and compares them.

use floquet_well::floquet::{matching_defects, solve_floquet};
use floquet_well::potential::{zone_reduce, DriveSpec, Model, WellGeometry};
use floquet_well::rootfind::RootConfig;
use floquet_well::static_solver::static_solve;
use num_complex::Complex64;

fn main() -> floquet_well::Result<()> {
    let geom = WellGeometry::reference();
    let e0 = static_solve(&geom, Complex64::new(3.2, -0.001))?.energy;
    let cfg = RootConfig::for_barrier(geom.v0);
    for model in [Model::A, Model::B] {
        let drive = DriveSpec::new(0.5, 2.0, model, 4);
        let root = solve_floquet(&geom, &drive, e0, &cfg)?;
        let (reduced, zone) = zone_reduce(root.epsilon, drive.quantum(&geom));
        println!(
            "model {model}: eps = {:.10} {:+.10}i  (zone {zone}, reduced {:.6})  iterations {}",
            root.epsilon.re, root.epsilon.im, reduced.re, root.iterations
        );
        if model == Model::A {
            println!("  matching defects {:?}", matching_defects(&root)?);
        }
    }
    Ok(())
}
