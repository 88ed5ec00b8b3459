//! Uniform-grid cubic interpolation.

use serde::{Deserialize, Serialize};

/// Keys cubic convolution weights (a = −1/2) for fractional offset s ∈ [0, 1).
#[inline]
pub fn keys_weights(s: f64) -> [f64; 4] {
    let s2 = s * s;
    let s3 = s2 * s;
    [
        -0.5 * s3 + s2 - 0.5 * s,
        1.5 * s3 - 2.5 * s2 + 1.0,
        -1.5 * s3 + 2.0 * s2 + 0.5 * s,
        0.5 * s3 - 0.5 * s2,
    ]
}

/// Samples v_i = f(x0 + i·h), i = 0..n.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct UniformTable {
    pub x0: f64,
    pub h: f64,
    pub values: Vec<f64>,
}

impl UniformTable {
    pub fn x_max(&self) -> f64 {
        self.x0 + self.h * (self.values.len() - 1) as f64
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.x0 && x <= self.x_max()
    }

    /// Cubic interpolation inside the table, edge samples replicated at the ends.
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.values.len();
        let u = (x - self.x0) / self.h;
        if u <= 0.0 {
            return self.values[0];
        }
        if u >= (n - 1) as f64 {
            return self.values[n - 1];
        }
        let i = u.floor() as usize;
        let s = u - i as f64;
        let w = keys_weights(s);
        let at = |k: isize| -> f64 {
            let idx = (i as isize + k).clamp(0, n as isize - 1) as usize;
            self.values[idx]
        };
        w[0] * at(-1) + w[1] * at(0) + w[2] * at(1) + w[3] * at(2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_quadratics() {
        let t = UniformTable { x0: -1.0, h: 0.1, values: (0..=20).map(|i| (-1.0 + 0.1 * i as f64).powi(2)).collect() };
        for &x in &[-0.55, 0.0, 0.33, 0.71] {
            assert!((t.eval(x) - x * x).abs() < 1e-12);
        }
    }

    #[test]
    fn weights_partition_unity() {
        for &s in &[0.0, 0.25, 0.5, 0.9] {
            let w = keys_weights(s);
            assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        }
    }
}
