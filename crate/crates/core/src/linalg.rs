use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

/// LU solve of `m x = rhs` for every right-hand side.
///
/// Returns `None` when the factorization hits an exactly zero pivot or the
/// solution is not finite. With `want_condition` the 1-norm condition number
/// is estimated from the explicit inverse; otherwise it is reported as NaN.
pub(crate) fn solve_dense(
    m: DMatrix<Complex64>,
    rhs: &[DVector<Complex64>],
    want_condition: bool,
) -> Option<(Vec<DVector<Complex64>>, f64)> {
    if m.nrows() == 0 {
        return Some((rhs.to_vec(), 1.0));
    }
    let norm = if want_condition { one_norm(&m) } else { f64::NAN };
    let lu = m.lu();
    let mut out = Vec::with_capacity(rhs.len());
    for r in rhs {
        let x = lu.solve(r)?;
        if !x.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return None;
        }
        out.push(x);
    }
    let cond = if want_condition {
        let inv = lu.try_inverse()?;
        norm * one_norm(&inv)
    } else {
        f64::NAN
    };
    Some((out, cond))
}

fn one_norm(m: &DMatrix<Complex64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}
