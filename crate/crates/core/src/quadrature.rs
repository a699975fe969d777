//! Gauss–Legendre rules and polynomial extrapolation.

use crate::scalar::Real;

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre<T: Real>(n: usize) -> (Vec<T>, Vec<T>) {
    assert!(n >= 1);
    let mut nodes = vec![T::zero(); n];
    let mut weights = vec![T::zero(); n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess, then Newton on P_n
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 1.0;
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
        nodes[i] = T::lit(-x);
        nodes[n - 1 - i] = T::lit(x);
        weights[i] = T::lit(w);
        weights[n - 1 - i] = T::lit(w);
    }
    (nodes, weights)
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// `∫_a^b f` by the `n`-point Gauss–Legendre rule.
pub fn integrate<T: Real>(f: impl Fn(T) -> T, a: T, b: T, n: usize) -> T {
    let (x, w) = gauss_legendre::<T>(n);
    let half = (b - a) / T::lit(2.0);
    let mid = (a + b) / T::lit(2.0);
    x.iter().zip(&w).map(|(xi, wi)| *wi * f(mid + half * *xi)).sum::<T>() * half
}

/// Value at `x = 0` of the interpolating polynomial through `(x_i, y_i)`
/// (Neville's scheme).
pub fn extrapolate_to_zero<T: Real>(x: &[T], y: &[T]) -> T {
    assert_eq!(x.len(), y.len());
    assert!(!x.is_empty());
    let mut p = y.to_vec();
    let n = x.len();
    for m in 1..n {
        for i in 0..n - m {
            p[i] = (x[i + m] * p[i] - x[i] * p[i + 1]) / (x[i + m] - x[i]);
        }
    }
    p[0]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_two_and_nodes_symmetric() {
        for n in [1, 2, 5, 32, 64] {
            let (x, w) = gauss_legendre::<f64>(n);
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13, "n={n}");
            for i in 0..n {
                assert!((x[i] + x[n - 1 - i]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn exact_for_high_degree_polynomials() {
        // 5 points integrate degree 9 exactly
        let v = integrate(|x: f64| x.powi(8) + x.powi(3), 0.0, 1.0, 5);
        assert!((v - (1.0 / 9.0 + 0.25)).abs() < 1e-14);
        let s = integrate(|x: f64| x.sin(), 0.0, std::f64::consts::PI, 32);
        assert!((s - 2.0).abs() < 1e-14);
    }

    #[test]
    fn neville_recovers_polynomial_intercept() {
        let x = [0.4, 0.2, 0.1, 0.05];
        let y: Vec<f64> = x.iter().map(|t| 3.0 - 2.0 * t + t * t * t).collect();
        assert!((extrapolate_to_zero(&x, &y) - 3.0).abs() < 1e-13);
    }
}
