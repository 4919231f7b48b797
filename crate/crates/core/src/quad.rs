//! Adaptive Gauss-Legendre quadrature for smooth real integrands.

use std::f64::consts::PI;
use std::sync::OnceLock;

const ORDER: usize = 20;
const MAX_DEPTH: u32 = 30;

/// Nodes and weights of the `n`-point rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// `P_n(x)` and `P_n'(x)`.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let n = n as f64;
    (p1, n * (x * p1 - p0) / (x * x - 1.0))
}

fn rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(ORDER))
}

fn fixed<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    let (x, w) = rule();
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    half * x.iter().zip(w).map(|(xi, wi)| wi * f(mid + half * xi)).sum::<f64>()
}

/// Integrates `f` over `[a, b]` to relative tolerance `rel_tol` by recursive
/// bisection of a 20-point rule.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64) -> f64 {
    let whole = fixed(&f, a, b);
    refine(&f, a, b, whole, rel_tol, whole.abs(), 0)
}

fn refine<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, whole: f64, tol: f64, scale: f64, depth: u32) -> f64 {
    let mid = 0.5 * (a + b);
    let left = fixed(f, a, mid);
    let right = fixed(f, mid, b);
    let sum = left + right;
    let scale = scale.max(sum.abs());
    if (sum - whole).abs() <= tol * scale || depth >= MAX_DEPTH {
        return sum;
    }
    refine(f, a, mid, left, tol, scale, depth + 1) + refine(f, mid, b, right, tol, scale, depth + 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_two_and_nodes_symmetric() {
        for n in [1, 2, 5, 20, 33] {
            let (x, w) = gauss_legendre(n);
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
            for i in 0..n {
                assert!((x[i] + x[n - 1 - i]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn exact_for_polynomials() {
        let (x, w) = gauss_legendre(5);
        // degree 9 is integrated exactly by five points
        let got: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(8)).sum();
        assert!((got - 2.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn adaptive_integrals() {
        let v = integrate(|x| x.sin(), 0.0, PI, 1e-12);
        assert!((v - 2.0).abs() < 1e-13);
        let v = integrate(|x| (-30.0 * x).exp(), 0.0, 2.0, 1e-12);
        assert!((v - (1.0 - (-60.0f64).exp()) / 30.0).abs() < 1e-14);
        let v = integrate(|x| (40.0 * x).cos().powi(2), 0.0, 1.0, 1e-12);
        let want = 0.5 + (80.0f64).sin() / 160.0;
        assert!((v - want).abs() < 1e-12);
    }
}
