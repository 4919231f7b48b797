//! Bessel tables, the addition identity and the H-transform round trip.

use floquet_well::duality::{h_round_trip, h_transform, required_support, CoefficientSequence};
use floquet_well::special::{bessel_identity_defect, bessel_j, BesselTable};

fn main() -> floquet_well::Result<()> {
    let alpha = 2.0;
    let table = BesselTable::new(alpha, 8)?;
    for n in -3..=3 {
        println!("J_{n}({alpha}) = {:+.15}", table.get(n));
    }
    println!("J_40(2) = {:e}", bessel_j(40, alpha)?);
    println!("sum J_n^2 = {:.15}", table.norm_squared());
    println!("identity defect (m=2, n=-3): {:e}", bessel_identity_defect(2, -3, alpha, 60)?);

    let seq = CoefficientSequence::delta(5);
    let k = required_support(seq.support(), alpha);
    let image = h_transform(&seq, alpha, k)?;
    println!("H(delta) support {} -> {}; centre {:.6}", seq.support(), image.support(), image.get(0));
    println!("round-trip error {:e}", h_round_trip(&seq, alpha)?.max_difference(&seq));
    Ok(())
}
