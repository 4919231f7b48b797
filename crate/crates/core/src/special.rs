//! Integer-order Bessel functions of real argument and the square-root branch
//! convention used for every side-band wavenumber.
//!
//! Values are produced by Miller's downward recurrence normalized with
//! `J_0 + 2 * sum_k J_2k = 1`. The recurrence is started far enough above
//! `max(n, |x|)` that the truncation error is below double precision for
//! `|x| <= 50`.

use num_complex::Complex64;

use crate::error::{Error, Result};

const MAX_ARGUMENT: f64 = 1.0e4;
const MAX_ORDER: i64 = 1000;
const RESCALE_THRESHOLD: f64 = 1.0e250;

/// `J_n(x)` for integer `n`.
pub fn bessel_j(n: i64, x: f64) -> Result<f64> {
    check_domain(n, x)?;
    let order = n.unsigned_abs() as usize;
    let values = bessel_sequence(x.abs(), order);
    let mut v = values[order];
    // J_{-n}(x) = (-1)^n J_n(x) and J_n(-x) = (-1)^n J_n(x)
    if (n < 0) != (x < 0.0) && order % 2 == 1 {
        v = -v;
    }
    Ok(v)
}

fn check_domain(n: i64, x: f64) -> Result<()> {
    if !x.is_finite() || x.abs() >= MAX_ARGUMENT {
        return Err(Error::Domain(format!("|alpha| must be < {MAX_ARGUMENT}, got {x}")));
    }
    if n.abs() >= MAX_ORDER {
        return Err(Error::Domain(format!("|n| must be < {MAX_ORDER}, got {n}")));
    }
    Ok(())
}

/// `J_0(x) ..= J_{n_max}(x)` for `x >= 0`.
fn bessel_sequence(x: f64, n_max: usize) -> Vec<f64> {
    let mut out = vec![0.0; n_max + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }

    let mut top = n_max.max(x.ceil() as usize) + 30 + (10.0 * x.cbrt()).ceil() as usize;
    if top % 2 == 1 {
        top += 1;
    }

    let mut f = vec![0.0; top + 2];
    f[top] = 1.0e-30;
    for k in (1..=top).rev() {
        f[k - 1] = (2.0 * k as f64 / x) * f[k] - f[k + 1];
        if f[k - 1].abs() > RESCALE_THRESHOLD {
            for v in &mut f[k - 1..] {
                *v /= RESCALE_THRESHOLD;
            }
        }
    }

    let norm = f[0] + 2.0 * f.iter().skip(2).step_by(2).sum::<f64>();
    for (o, v) in out.iter_mut().zip(&f) {
        *o = v / norm;
    }
    out
}

/// `J_n(alpha)` tabulated for every order in `[-K, K]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BesselTable {
    alpha: f64,
    max_order: usize,
    values: Vec<f64>,
}

impl BesselTable {
    pub fn new(alpha: f64, max_order: usize) -> Result<Self> {
        check_domain(max_order as i64, alpha)?;
        let positive = bessel_sequence(alpha.abs(), max_order);
        let k = max_order as i64;
        let values = (-k..=k)
            .map(|n| {
                let order = n.unsigned_abs() as usize;
                let odd = order % 2 == 1;
                let flip = odd && ((n < 0) != (alpha < 0.0));
                if flip {
                    -positive[order]
                } else {
                    positive[order]
                }
            })
            .collect();
        Ok(BesselTable { alpha, max_order, values })
    }

    /// Table sized for side-band order `n_sidebands`: `K = ceil(alpha) + N + 20`.
    pub fn for_sidebands(alpha: f64, n_sidebands: usize) -> Result<Self> {
        let k = alpha.abs().ceil() as usize + n_sidebands + 20;
        // sums over l in [-N, N] need orders up to 2N
        Self::new(alpha, k.max(2 * n_sidebands + 20))
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    /// `J_n(alpha)`; orders beyond the table are treated as zero.
    #[inline]
    pub fn get(&self, n: i64) -> f64 {
        let k = self.max_order as i64;
        if n.abs() > k {
            0.0
        } else {
            self.values[(n + k) as usize]
        }
    }

    /// `sum_n J_n(alpha)^2`, which tends to one as the table grows.
    pub fn norm_squared(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }
}

/// `|sum_{l=-K}^{K} J_{l-m}(alpha) J_{l-n}(alpha) - delta_mn|`.
pub fn bessel_identity_defect(m: i64, n: i64, alpha: f64, k: usize) -> Result<f64> {
    let needed = m.unsigned_abs() + n.unsigned_abs() + 10;
    if (k as u64) < needed {
        return Err(Error::Domain(format!("K = {k} must be >= |m| + |n| + 10 = {needed}")));
    }
    let span = k + m.unsigned_abs().max(n.unsigned_abs()) as usize;
    let table = BesselTable::new(alpha, span)?;
    let k = k as i64;
    let sum: f64 = (-k..=k).map(|l| table.get(l - m) * table.get(l - n)).sum();
    let delta = if m == n { 1.0 } else { 0.0 };
    Ok((sum - delta).abs())
}

/// Principal square root: `Re(w) >= 0`, and `Im(w) >= 0` on the imaginary axis.
///
/// Any label for the two exponentials in the barrier can be flipped
/// (`q -> -q` together with `a_l <-> b_l`) without changing the wavefunction;
/// this function only fixes which one is called `q`.
pub fn principal_complex_sqrt(z: Complex64) -> Complex64 {
    let w = z.sqrt();
    if w.re < 0.0 || (w.re == 0.0 && w.im < 0.0) {
        -w
    } else {
        w
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    /// `J_n(x) = (1/pi) int_0^pi cos(n t - x sin t) dt`; the integrand is smooth
    /// and periodic so the trapezoid rule converges geometrically.
    fn integral_oracle(n: i64, x: f64) -> f64 {
        let m = 4000;
        let h = PI / m as f64;
        let mut s = 0.5 * ((0.0f64).cos() + (n as f64 * PI).cos());
        for j in 1..m {
            let t = j as f64 * h;
            s += (n as f64 * t - x * t.sin()).cos();
        }
        s * h / PI
    }

    fn series_oracle(n: u32, x: f64) -> f64 {
        let mut term = (x / 2.0).powi(n as i32) / (1..=n).map(f64::from).product::<f64>();
        let mut sum = term;
        for k in 1..200 {
            term *= -(x * x / 4.0) / (k as f64 * (k + n) as f64);
            sum += term;
            if term.abs() < 1e-300 {
                break;
            }
        }
        sum
    }

    #[test]
    fn j0_at_origin_is_one() {
        assert_eq!(bessel_j(0, 0.0).unwrap(), 1.0);
        assert_eq!(bessel_j(3, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn parity_in_order() {
        let p = bessel_j(3, 1.5).unwrap();
        let m = bessel_j(-3, 1.5).unwrap();
        assert_eq!(m, -p);
    }

    #[test]
    fn j1_matches_power_series() {
        let got = bessel_j(1, 1.0).unwrap();
        let want = series_oracle(1, 1.0);
        assert!((got - want).abs() < 1e-15, "{got} vs {want}");
    }

    #[test]
    fn matches_integral_representation() {
        for &x in &[1e-8, 0.3, 1.0, 2.5, 7.9, 15.0, 33.3, 50.0] {
            for n in -60..=60 {
                let got = bessel_j(n, x).unwrap();
                let want = integral_oracle(n, x);
                assert!((got - want).abs() < 1e-13, "J_{n}({x}): {got} vs {want}");
            }
        }
    }

    #[test]
    fn small_argument_series() {
        for n in 0..8 {
            let got = bessel_j(n as i64, 0.37).unwrap();
            let want = series_oracle(n, 0.37);
            assert!((got - want).abs() <= 1e-16 + 1e-14 * want.abs());
        }
    }

    #[test]
    fn domain_errors() {
        assert!(matches!(bessel_j(0, 2.0e4), Err(Error::Domain(_))));
        assert!(matches!(bessel_j(1500, 1.0), Err(Error::Domain(_))));
        assert!(bessel_j(0, f64::NAN).is_err());
    }

    #[test]
    fn table_agrees_with_pointwise() {
        let t = BesselTable::new(-2.7, 30).unwrap();
        for n in -30..=30 {
            let want = bessel_j(n, -2.7).unwrap();
            assert!((t.get(n) - want).abs() <= 1e-15 * want.abs().max(1e-300) + 1e-300);
        }
        assert!((t.norm_squared() - 1.0).abs() < 1e-14);
        assert_eq!(t.get(31), 0.0);
    }

    #[test]
    fn identity_defect_examples() {
        assert_eq!(bessel_identity_defect(0, 0, 0.0, 10).unwrap(), 0.0);
        assert!(bessel_identity_defect(2, 2, 1.0, 40).unwrap() < 1e-12);
        assert!(bessel_identity_defect(1, 4, 2.5, 60).unwrap() < 1e-12);
        assert!(bessel_identity_defect(3, 4, 1.0, 12).is_err());
    }

    #[test]
    fn identity_defect_shrinks_with_k() {
        let alpha = 6.0;
        let mut prev = f64::INFINITY;
        for k in [13, 15, 17, 19, 21] {
            let d = bessel_identity_defect(2, 1, alpha, k).unwrap();
            assert!(d <= prev, "K={k}: {d} > {prev}");
            prev = d;
        }
        assert!(prev < 1e-6);
    }

    #[test]
    fn sqrt_branch() {
        assert_eq!(principal_complex_sqrt(Complex64::new(4.0, 0.0)), Complex64::new(2.0, 0.0));
        assert_eq!(principal_complex_sqrt(Complex64::new(-1.0, 0.0)), Complex64::new(0.0, 1.0));
        assert_eq!(principal_complex_sqrt(Complex64::new(-1.0, -0.0)), Complex64::new(0.0, 1.0));
        let w = principal_complex_sqrt(Complex64::new(0.322052, -0.000110412) * 20.0);
        assert!(w.re > 0.0 && w.im < 0.0);
    }

    proptest! {
        #[test]
        fn parity_and_sign_flip(n in -40i64..40, x in 0.0f64..50.0) {
            let p = bessel_j(n, x).unwrap();
            let sign = if n.rem_euclid(2) == 1 { -1.0 } else { 1.0 };
            prop_assert_eq!(bessel_j(-n, x).unwrap(), sign * p);
            prop_assert_eq!(bessel_j(n, -x).unwrap(), sign * p);
        }

        #[test]
        fn sqrt_squares_back(re in -1e3f64..1e3, im in -1e3f64..1e3) {
            let z = Complex64::new(re, im);
            let w = principal_complex_sqrt(z);
            prop_assert!((w * w - z).norm() <= 4.0 * f64::EPSILON * z.norm().max(1e-300));
            prop_assert!(w.re >= 0.0);
            if w.re == 0.0 { prop_assert!(w.im >= 0.0); }
        }
    }
}
