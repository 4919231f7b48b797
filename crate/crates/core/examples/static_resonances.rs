//! Locates the Gamow resonances of the undriven well.

use floquet_well::potential::WellGeometry;
use floquet_well::static_solver::{closed_well_levels, static_resonances};

fn main() {
    let geom = WellGeometry::reference();
    println!("closed-well seeds: {:?}", closed_well_levels(&geom, 1.5 * geom.v0));
    for r in static_resonances(&geom, 1.5 * geom.v0) {
        let s = r.scaled(&geom);
        println!("E/V0 = {:.8} {:+.8}i  width {:.6e}  residual {:.1e}", s.re, s.im, r.width, r.residual);
    }
}
