//! The discrete H-transform linking the two drive models, coefficient maps
//! and the numerical gauge-equivalence check.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::floquet::{FloquetRoot, SidebandCoefficients};
use crate::observables::{evaluate_dressed, Dressing};
use crate::potential::Model;
use crate::special::BesselTable;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Extra orders kept beyond `support + ceil(alpha)` when transforming.
pub const TRANSFORM_PADDING: usize = 20;

/// A finite window `[-K, K]` of an infinite sequence `g_n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientSequence {
    pub values: Vec<Complex64>,
    /// Argument of the transform that produced the sequence (zero if none).
    pub alpha: f64,
}

impl CoefficientSequence {
    pub fn new(values: Vec<Complex64>) -> Result<Self> {
        if values.len() % 2 == 0 {
            return Err(Error::Domain("a symmetric window needs an odd number of entries".into()));
        }
        if values.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::Domain("sequence entries must be finite".into()));
        }
        Ok(CoefficientSequence { values, alpha: 0.0 })
    }

    pub fn zeros(support: usize) -> Self {
        CoefficientSequence { values: vec![Complex64::new(0.0, 0.0); 2 * support + 1], alpha: 0.0 }
    }

    pub fn delta(support: usize) -> Self {
        let mut s = Self::zeros(support);
        s.values[support] = Complex64::new(1.0, 0.0);
        s
    }

    pub fn support(&self) -> usize {
        self.values.len() / 2
    }

    /// `g_n`, zero outside the window.
    pub fn get(&self, n: i64) -> Complex64 {
        let k = self.support() as i64;
        if n.abs() > k {
            Complex64::new(0.0, 0.0)
        } else {
            self.values[(n + k) as usize]
        }
    }

    /// Largest entrywise difference over the union of both windows.
    pub fn max_difference(&self, other: &Self) -> f64 {
        let k = self.support().max(other.support()) as i64;
        (-k..=k).map(|n| (self.get(n) - other.get(n)).norm()).fold(0.0, f64::max)
    }
}

/// Smallest output window accepted by [`h_transform`].
pub fn required_support(input_support: usize, alpha: f64) -> usize {
    input_support + alpha.abs().ceil() as usize + TRANSFORM_PADDING
}

/// `g'_l = sum_n (-1)^n g_n J_{l-n}(alpha)` on `[-k_out, k_out]`.
pub fn h_transform(seq: &CoefficientSequence, alpha: f64, k_out: usize) -> Result<CoefficientSequence> {
    let needed = required_support(seq.support(), alpha);
    if k_out < needed {
        return Err(Error::Domain(format!("output support {k_out} below the required {needed}")));
    }
    let k_in = seq.support() as i64;
    let table = BesselTable::new(alpha, k_out + seq.support())?;
    let k = k_out as i64;
    let values = (-k..=k)
        .map(|l| {
            (-k_in..=k_in)
                .map(|n| {
                    let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
                    seq.get(n) * (sign * table.get(l - n))
                })
                .sum()
        })
        .collect();
    Ok(CoefficientSequence { values, alpha })
}

/// Applies the transform twice with minimal padding; the result should
/// reproduce the input.
pub fn h_round_trip(seq: &CoefficientSequence, alpha: f64) -> Result<CoefficientSequence> {
    let first = h_transform(seq, alpha, required_support(seq.support(), alpha))?;
    h_transform(&first, alpha, required_support(first.support(), alpha))
}

fn alternate(v: &[Complex64]) -> Vec<Complex64> {
    let n = (v.len() / 2) as i64;
    v.iter().enumerate().map(|(i, c)| if (i as i64 - n) % 2 == 0 { *c } else { -*c }).collect()
}

fn map_root(root: &FloquetRoot, from: Model, to: Model) -> Result<FloquetRoot> {
    if root.model() != from {
        return Err(Error::MismatchedParameters(format!("expected a model {from} root, got model {}", root.model())));
    }
    let g = &root.geometry;
    let d = &root.drive;
    let kin = root.kinematics();
    let n = d.n_sidebands as i64;
    let c = &root.coefficients;
    let outgoing: Vec<Complex64> = (-n..=n).map(|m| c.transmitted(m) * (I * kin.k(m) * g.b).exp()).collect();
    let mut seq = CoefficientSequence::new(outgoing)?;
    seq.alpha = d.alpha(g);
    let mapped = h_transform(&seq, seq.alpha, required_support(seq.support(), seq.alpha))?;
    let transmitted = (-n..=n).map(|m| mapped.get(m) * (-I * kin.k(m) * g.b).exp()).collect();

    let coefficients = SidebandCoefficients {
        well: alternate(&c.well),
        barrier_up: alternate(&c.barrier_up),
        barrier_down: alternate(&c.barrier_down),
        transmitted,
    };
    let mut drive = *d;
    drive.model = to;
    Ok(FloquetRoot {
        epsilon: root.epsilon,
        geometry: *g,
        drive,
        coefficients,
        residual_norm: f64::NAN,
        iterations: 0,
    })
}

/// Model-A coefficients predicted from a model-B state at the same
/// quasienergy: `A_n = (-1)^n A'_n`, `a_n = (-1)^n a'_n`, `b_n = (-1)^n b'_n`,
/// and `t_n e^{i k_n b} = sum_l (-1)^l t'_l e^{i k_l b} J_{n-l}`.
pub fn map_coefficients_b_to_a(root_b: &FloquetRoot) -> Result<FloquetRoot> {
    map_root(root_b, Model::B, Model::A)
}

/// Inverse of [`map_coefficients_b_to_a`].
pub fn map_coefficients_a_to_b(root_a: &FloquetRoot) -> Result<FloquetRoot> {
    map_root(root_a, Model::A, Model::B)
}

fn check_pair(root_a: &FloquetRoot, root_b: &FloquetRoot, xs: &[f64]) -> Result<()> {
    if root_a.model() != Model::A || root_b.model() != Model::B {
        return Err(Error::MismatchedParameters("expected a model A root and a model B root".into()));
    }
    let (da, db) = (&root_a.drive, &root_b.drive);
    if root_a.geometry != root_b.geometry
        || da.v1 != db.v1
        || da.omega != db.omega
        || da.n_sidebands != db.n_sidebands
    {
        return Err(Error::MismatchedParameters("roots differ in geometry, V1, omega or N".into()));
    }
    let b = root_a.geometry.b;
    if let Some(x) = xs.iter().find(|x| !(0.0..=b).contains(*x)) {
        return Err(Error::Domain(format!("sample x = {x} outside [0, b]")));
    }
    Ok(())
}

/// Largest modulus of `Psi_A(x, t + pi/w) e^{i alpha sin(w t + pi)} - e^{-i pi eps/hbar w} Psi_B(x, t)`
/// over the sample grid, relative to the largest sampled `|Psi_B|`.
pub fn gauge_equivalence_defect(root_a: &FloquetRoot, root_b: &FloquetRoot, xs: &[f64], ts: &[f64]) -> Result<f64> {
    check_pair(root_a, root_b, xs)?;
    let gap = (root_a.epsilon - root_b.epsilon).norm();
    let v0 = root_a.geometry.v0;
    if gap > 1e-9 * v0 {
        return Err(Error::MismatchedParameters(format!(
            "quasienergies differ by {:.3e} V0",
            gap / v0
        )));
    }
    Ok(gauge_defect_unchecked(root_a, root_b, xs, ts))
}

/// [`gauge_equivalence_defect`] without the quasienergy agreement check; both
/// sides carry their own `eps`.
pub fn gauge_equivalence_defect_unchecked(
    root_a: &FloquetRoot,
    root_b: &FloquetRoot,
    xs: &[f64],
    ts: &[f64],
) -> Result<f64> {
    check_pair(root_a, root_b, xs)?;
    Ok(gauge_defect_unchecked(root_a, root_b, xs, ts))
}

fn gauge_defect_unchecked(root_a: &FloquetRoot, root_b: &FloquetRoot, xs: &[f64], ts: &[f64]) -> f64 {
    let g = &root_a.geometry;
    let w = root_a.drive.omega;
    let alpha = root_a.drive.alpha(g);
    let shift = PI / w;
    let phase_b = (-I * PI * root_b.epsilon / (g.hbar * w)).exp();
    let (mut worst, mut scale) = (0.0f64, 0.0f64);
    for &t in ts {
        let gauge = (I * alpha * (w * t + PI).sin()).exp();
        for &x in xs {
            let lhs = evaluate_dressed(root_a, x, t + shift, Dressing::Resummed).0 * gauge;
            let rhs = evaluate_dressed(root_b, x, t, Dressing::Resummed).0 * phase_b;
            worst = worst.max((lhs - rhs).norm());
            scale = scale.max(rhs.norm());
        }
    }
    if scale > 0.0 {
        worst / scale
    } else {
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::floquet::{matching_defects, solve_floquet};
    use crate::potential::{DriveSpec, WellGeometry};
    use crate::rootfind::RootConfig;
    use crate::special::bessel_j;
    use crate::static_solver::static_solve;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_sequence(rng: &mut ChaCha8Rng, support: usize) -> CoefficientSequence {
        let values = (0..2 * support + 1)
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        CoefficientSequence::new(values).unwrap()
    }

    fn grid(from: f64, to: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| from + (to - from) * i as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn zero_argument_alternates_signs() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = random_sequence(&mut rng, 4);
        let out = h_transform(&s, 0.0, required_support(4, 0.0)).unwrap();
        for l in -4..=4i64 {
            let sign = if l % 2 == 0 { 1.0 } else { -1.0 };
            assert_eq!(out.get(l), s.get(l) * sign);
        }
        assert!(out.values.iter().enumerate().all(|(i, v)| (i as i64 - 24).abs() <= 4 || v.norm() == 0.0));
    }

    #[test]
    fn delta_maps_to_bessel_row() {
        let out = h_transform(&CoefficientSequence::delta(0), 1.5, 30).unwrap();
        for l in -30..=30 {
            assert!((out.get(l) - bessel_j(l, 1.5).unwrap()).norm() < 1e-15);
        }
    }

    #[test]
    fn round_trip_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for alpha in [0.5, 2.0, -1.3] {
            for _ in 0..20 {
                let s = random_sequence(&mut rng, 5);
                let back = h_round_trip(&s, alpha).unwrap();
                assert!(back.max_difference(&s) < 1e-12, "{alpha}");
            }
        }
    }

    #[test]
    fn transform_is_linear() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (u, v) = (random_sequence(&mut rng, 6), random_sequence(&mut rng, 6));
        let (p, q) = (Complex64::new(0.3, -1.2), Complex64::new(-2.0, 0.5));
        let mix = CoefficientSequence::new(u.values.iter().zip(&v.values).map(|(a, b)| p * a + q * b).collect()).unwrap();
        let k = required_support(6, 2.0);
        let (tu, tv, tm) =
            (h_transform(&u, 2.0, k).unwrap(), h_transform(&v, 2.0, k).unwrap(), h_transform(&mix, 2.0, k).unwrap());
        for l in -(k as i64)..=k as i64 {
            assert!((tm.get(l) - p * tu.get(l) - q * tv.get(l)).norm() < 1e-13);
        }
    }

    #[test]
    fn insufficient_padding_is_rejected() {
        assert!(matches!(h_transform(&CoefficientSequence::delta(5), 2.0, 20), Err(Error::Domain(_))));
    }

    fn pair(v1: f64, omega: f64, n: usize) -> (FloquetRoot, FloquetRoot) {
        let g = WellGeometry::reference();
        let e0 = static_solve(&g, Complex64::new(3.2, -0.001)).unwrap().energy;
        let cfg = RootConfig::for_barrier(g.v0);
        let a = solve_floquet(&g, &DriveSpec::new(v1, omega, Model::A, n), e0, &cfg).unwrap();
        let b = solve_floquet(&g, &DriveSpec::new(v1, omega, Model::B, n), e0, &cfg).unwrap();
        (a, b)
    }

    #[test]
    fn undriven_mapping_is_identity() {
        let (a, b) = pair(0.0, 1.0, 2);
        let mapped = map_coefficients_b_to_a(&b).unwrap();
        assert!((mapped.coefficients.well(0) - a.coefficients.well(0)).norm() < 1e-12);
        let t = (mapped.coefficients.transmitted(0) - a.coefficients.transmitted(0)).norm();
        assert!(t < 1e-10 * a.coefficients.transmitted(0).norm(), "{t}");
    }

    #[test]
    fn undriven_gauge_defect_vanishes() {
        let (a, b) = pair(0.0, 1.0, 2);
        let xs = grid(0.0, 2.0, 20);
        let ts = grid(0.0, 5.0, 6);
        let d = gauge_equivalence_defect(&a, &b, &xs, &ts).unwrap();
        assert!(d < 1e-12, "{d}");
    }

    #[test]
    fn mapped_state_is_gauge_equivalent() {
        let (_, b) = pair(0.5, 1.0, 3);
        let a = map_coefficients_b_to_a(&b).unwrap();
        let xs = grid(0.0, 2.0, 50);
        let ts = grid(0.0, 2.0 * PI, 16);
        let d = gauge_equivalence_defect(&a, &b, &xs, &ts).unwrap();
        assert!(d < 1e-12, "{d}");
        let barrier_only = grid(1.0, 2.0, 25);
        assert!(gauge_equivalence_defect(&a, &b, &barrier_only, &ts).unwrap() < 1e-12);
    }

    #[test]
    fn mapping_round_trips() {
        let (_, b) = pair(0.5, 1.0, 3);
        let back = map_coefficients_a_to_b(&map_coefficients_b_to_a(&b).unwrap()).unwrap();
        for n in -3..=3 {
            assert!((back.coefficients.well(n) - b.coefficients.well(n)).norm() < 1e-15);
        }
        assert!(back.drive.model == Model::B);
    }

    #[test]
    fn mapped_coefficients_meet_interior_conditions() {
        let (_, b) = pair(0.5, 1.0, 3);
        let a = map_coefficients_b_to_a(&b).unwrap();
        let d = matching_defects(&a).unwrap();
        // value and slope at x = a hold up to the band-edge Bessel tail
        assert!(d[0] < 1e-4 && d[1] < 1e-4, "{d:?}");
    }

    #[test]
    fn mismatched_roots_are_rejected() {
        let (a, b) = pair(0.5, 1.0, 3);
        let xs = [0.5];
        let r = gauge_equivalence_defect(&a, &b, &xs, &[0.0]);
        assert!(matches!(r, Err(Error::MismatchedParameters(_))), "{r:?}");
        assert!(gauge_equivalence_defect_unchecked(&a, &b, &xs, &[0.0]).unwrap().is_finite());
        let (_, other) = pair(0.5, 2.0, 3);
        assert!(matches!(gauge_equivalence_defect_unchecked(&a, &other, &xs, &[0.0]), Err(Error::MismatchedParameters(_))));
        assert!(matches!(gauge_equivalence_defect_unchecked(&a, &b, &[2.5], &[0.0]), Err(Error::Domain(_))));
    }
}
