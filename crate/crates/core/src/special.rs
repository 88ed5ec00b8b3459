//! Special functions and small quadrature helpers.

use std::f64::consts::PI;

/// Exact factorial for n ≤ 20.
pub fn factorial_u64(n: usize) -> u64 {
    assert!(n <= 20, "factorial overflow for n = {n}");
    (1..=n as u64).product()
}

pub fn factorial(n: usize) -> f64 {
    if n <= 20 {
        factorial_u64(n) as f64
    } else {
        (1..=n).fold(1.0, |acc, k| acc * k as f64)
    }
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut r: u128 = 1;
    for i in 0..k {
        r = r * (n - i) as u128 / (i + 1) as u128;
    }
    r as usize
}

pub fn gamma(x: f64) -> f64 {
    statrs::function::gamma::gamma(x)
}

pub fn ln_gamma(x: f64) -> f64 {
    statrs::function::gamma::ln_gamma(x)
}

/// Bessel function of the first kind, order 0 or 1.
pub fn bessel_j(order: u32, x: f64) -> f64 {
    match order {
        0 => bessel_j0(x),
        1 => bessel_j1(x),
        n => bessel_jn(n, x),
    }
}

pub fn bessel_j0(x: f64) -> f64 {
    let ax = x.abs();
    if ax < 12.0 {
        bessel_series(0, ax)
    } else if ax < 30.0 {
        bessel_integral(0, ax)
    } else {
        bessel_asymptotic(0, ax)
    }
}

pub fn bessel_j1(x: f64) -> f64 {
    let ax = x.abs();
    let v = if ax < 12.0 {
        bessel_series(1, ax)
    } else if ax < 30.0 {
        bessel_integral(1, ax)
    } else {
        bessel_asymptotic(1, ax)
    };
    if x < 0.0 {
        -v
    } else {
        v
    }
}

/// Integer order via the trapezoid rule on Bessel's integral, exact up to rounding
/// once the node count exceeds |x| + n by a margin.
pub fn bessel_jn(n: u32, x: f64) -> f64 {
    bessel_integral(n, x)
}

fn bessel_series(n: u32, x: f64) -> f64 {
    let h = 0.5 * x;
    let mut term = h.powi(n as i32) / factorial(n as usize);
    let mut sum = term;
    let h2 = h * h;
    for k in 1..200 {
        term *= -h2 / (k as f64 * (k + n as usize) as f64);
        sum += term;
        if term.abs() < 1e-17 * sum.abs().max(1e-300) {
            break;
        }
    }
    sum
}

fn bessel_integral(n: u32, x: f64) -> f64 {
    // J_n(x) = (1/2π) ∫_0^{2π} cos(nτ − x sin τ) dτ, periodic trapezoid.
    let m = (x.abs() + n as f64 + 40.0).ceil() as usize;
    let h = 2.0 * PI / m as f64;
    let mut s = 0.0;
    for i in 0..m {
        let tau = i as f64 * h;
        s += (n as f64 * tau - x * tau.sin()).cos();
    }
    s / m as f64
}

/// Hankel amplitudes (P, Q) with J_n(x) = √(2/πx)(P cos χ − Q sin χ), χ = x − (n/2 + 1/4)π.
/// Accurate to rounding for x ≥ 30.
pub fn bessel_pq(n: u32, x: f64) -> (f64, f64) {
    let mu = 4.0 * (n as f64) * (n as f64);
    let mut p = 0.0;
    let mut q = 0.0;
    let mut a = 1.0;
    let eight_x = 8.0 * x;
    let mut last = f64::INFINITY;
    for k in 0..60 {
        if k > 0 {
            let odd = (2 * k - 1) as f64;
            a *= (mu - odd * odd) / (k as f64 * eight_x);
        }
        if a.abs() > last {
            break;
        }
        last = a.abs();
        match k % 4 {
            0 => p += a,
            1 => q += a,
            2 => p -= a,
            _ => q -= a,
        }
        if a.abs() < 1e-17 {
            break;
        }
    }
    (p, q)
}

fn bessel_asymptotic(n: u32, x: f64) -> f64 {
    let (p, q) = bessel_pq(n, x);
    let chi = x - (0.5 * n as f64 + 0.25) * PI;
    (2.0 / (PI * x)).sqrt() * (p * chi.cos() - q * chi.sin())
}

/// Gauss–Legendre nodes and weights on [−1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let mut p1 = 1.0;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                p1 = ((2 * j + 1) as f64 * z * p2 - j as f64 * p3) / (j + 1) as f64;
            }
            dp = n as f64 * (z * p1 - p2) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// Composite Gauss–Legendre rule over the listed panel edges.
#[derive(Debug, Clone)]
pub struct CompositeRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl CompositeRule {
    pub fn new(edges: &[f64], order: usize) -> Self {
        let (gx, gw) = gauss_legendre(order);
        let mut nodes = Vec::with_capacity(edges.len() * order);
        let mut weights = Vec::with_capacity(edges.len() * order);
        for pair in edges.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            let c = 0.5 * (a + b);
            let h = 0.5 * (b - a);
            for (xi, wi) in gx.iter().zip(&gw) {
                nodes.push(c + h * xi);
                weights.push(h * wi);
            }
        }
        CompositeRule { nodes, weights }
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_reflection_branch() {
        assert!((gamma(-0.5) + 2.0 * PI.sqrt()).abs() < 1e-12);
        assert!((gamma(0.5) - PI.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn bessel_reference_values() {
        // Abramowitz & Stegun tables.
        assert!((bessel_j0(1.0) - 0.765_197_686_557_966_6).abs() < 1e-14);
        assert!((bessel_j1(1.0) - 0.440_050_585_744_933_5).abs() < 1e-14);
        assert!((bessel_j0(10.0) + 0.245_935_764_451_348_3).abs() < 1e-13);
        // Continuity across the branch switches.
        for n in 0..2 {
            let (a, b) = (bessel_series(n, 12.0), bessel_integral(n, 12.0));
            assert!((a - b).abs() < 1e-12, "n={n} x=12: {a} vs {b}");
            let (a, b) = (bessel_integral(n, 30.0), bessel_asymptotic(n, 30.0));
            assert!((a - b).abs() < 1e-12, "n={n} x=30: {a} vs {b}");
        }
        assert!((bessel_j0(100.0) - 0.019_985_850_304_223_12).abs() < 1e-13);
        assert!((bessel_jn(2, 3.0) - 0.486_091_260_585_891_1).abs() < 1e-13);
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(8);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(14)).sum();
        assert!((s - 2.0 / 15.0).abs() < 1e-14);
    }

    #[test]
    fn binomial_small() {
        assert_eq!(binomial(3, 2), 3);
        assert_eq!(binomial(6, 2), 15);
        assert_eq!(binomial(2, 3), 0);
    }
}
