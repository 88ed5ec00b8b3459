//! Regularized inverse Fourier transforms of 1/L̂ and related spectra.
//!
//! Forward transform f̂(ω) = ∫ f(t) e^{−jωt} dt, inverse (1/2π)∫ f̂(ω) e^{jωt} dω.
//! Poles at ω = 0 are removed by subtracting the κ̂-windowed Taylor part of e^{jωt},
//! which changes the result by a polynomial of degree ≤ n0 only.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::nullspace::{kappa_hat, WINDOW_STOP};
use crate::special::{factorial, gauss_legendre};

/// Parity of a 1D spectral multiplier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Parity {
    Even,
    Odd,
}

/// e^{ju} − Σ_{n ≤ order} (ju)^n / n!, accurate for small |u|.
pub fn exp_remainder(u: f64, order: i32) -> Complex64 {
    if order < 0 {
        return Complex64::from_polar(1.0, u);
    }
    let j = Complex64::i();
    if u.abs() < 2.0 {
        let mut term = Complex64::new(1.0, 0.0);
        for n in 1..=(order as usize + 1) {
            term *= j * u / n as f64;
        }
        let mut sum = Complex64::new(0.0, 0.0);
        let mut n = order as usize + 1;
        loop {
            sum += term;
            n += 1;
            term *= j * u / n as f64;
            if term.norm() <= 1e-18 * sum.norm() || n > order as usize + 60 {
                break;
            }
        }
        sum
    } else {
        let mut poly = Complex64::new(0.0, 0.0);
        let mut term = Complex64::new(1.0, 0.0);
        for n in 0..=order as usize {
            if n > 0 {
                term *= j * u / n as f64;
            }
            poly += term;
        }
        Complex64::from_polar(1.0, u) - poly
    }
}

/// Σ_{n ≤ order} (ju)^n / n!.
pub fn exp_taylor(u: f64, order: i32) -> Complex64 {
    let j = Complex64::i();
    let mut poly = Complex64::new(0.0, 0.0);
    let mut term = Complex64::new(1.0, 0.0);
    for n in 0..=order.max(-1) {
        if n > 0 {
            term *= j * u / n as f64;
        }
        poly += term;
    }
    poly
}

/// ∫_{−1}^{1} s^k e^{jθs} ds for k = 0, 1, 2.
pub(crate) fn filon_moments(theta: f64) -> [Complex64; 3] {
    let j = Complex64::i();
    if theta.abs() < 1.0 {
        let mut m = [Complex64::new(0.0, 0.0); 3];
        for (k, mk) in m.iter_mut().enumerate() {
            let mut pw = Complex64::new(1.0, 0.0);
            for n in 0..30 {
                if n > 0 {
                    pw *= j * theta / n as f64;
                }
                if (k + n) % 2 == 0 {
                    *mk += pw * (2.0 / (k + n + 1) as f64);
                }
            }
        }
        m
    } else {
        let (s, c) = theta.sin_cos();
        let t2 = theta * theta;
        [
            Complex64::new(2.0 * s / theta, 0.0),
            Complex64::new(0.0, 2.0 * (s - theta * c) / t2),
            Complex64::new(2.0 * ((t2 - 2.0) * s + 2.0 * theta * c) / (t2 * theta), 0.0),
        ]
    }
}

/// Quadratic fit of H on one panel for Filon integration.
#[derive(Debug, Clone, Copy)]
struct FilonPanel {
    c: f64,
    h: f64,
    p: [f64; 3],
}

/// Tail ∫_Ω^∞ H(ω) e^{jωτ} dω from the local behaviour at Ω.
#[derive(Debug, Clone, Copy)]
struct Tail {
    omega: f64,
    h: f64,
    dh: f64,
    beta: f64,
}

impl Tail {
    fn eval(&self, tau: f64) -> Complex64 {
        if self.h == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let j = Complex64::i();
        if (self.omega * tau).abs() > 10.0 {
            let jt = j * tau;
            Complex64::from_polar(1.0, self.omega * tau) * (-self.h / jt + self.dh / (jt * jt))
        } else if self.beta > 1.0 {
            Complex64::new(self.h * self.omega / (self.beta - 1.0), 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    }
}

/// Low band [0, 1] node with cached spectrum values.
#[derive(Debug, Clone, Copy)]
struct LowNode {
    omega: f64,
    weight: f64,
    h: f64,
    kappa: f64,
}

/// Quadrature layout for transforms of one spectrum H(ω) = G(|ω|) on ω ≥ 0.
#[derive(Clone)]
pub struct SpectralInverse {
    n0: i32,
    low: Vec<LowNode>,
    panels: Vec<FilonPanel>,
    tail: Tail,
    spectrum: std::sync::Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl std::fmt::Debug for SpectralInverse {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpectralInverse")
            .field("n0", &self.n0)
            .field("low_nodes", &self.low.len())
            .field("panels", &self.panels.len())
            .finish()
    }
}

/// Upper cut-off of the high band.
const OMEGA_MAX: f64 = 1e12;
/// Geometric ratio of the Filon panels.
const PANEL_RATIO: f64 = 1.02;

impl SpectralInverse {
    /// `spectrum` is G(ω) for ω > 0 (even extension implied); `n0` is the Taylor
    /// order subtracted at the origin; `t_max` bounds |t| for full accuracy.
    pub fn new(
        spectrum: std::sync::Arc<dyn Fn(f64) -> f64 + Send + Sync>,
        n0: i32,
        t_max: f64,
    ) -> Result<Self> {
        let (gx, gw) = gauss_legendre(8);
        let width = (1.0 / 128.0f64).min(0.5 / t_max.max(1.0));
        let mut edges: Vec<f64> = (0..30).rev().map(|k| 2f64.powi(-(k as i32)) * width).collect();
        edges.insert(0, 0.0);
        edges.pop();
        let mut x = width;
        while x < 1.0 - 1e-12 {
            edges.push(x);
            x += width;
        }
        edges.push(1.0);
        // Make the window breakpoints panel edges so the smooth step is resolved.
        for b in [0.5, WINDOW_STOP] {
            if !edges.iter().any(|e| (e - b).abs() < 1e-12) {
                edges.push(b);
            }
        }
        edges.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut low = Vec::with_capacity(edges.len() * 8);
        for pair in edges.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            let (c, hw) = (0.5 * (a + b), 0.5 * (b - a));
            for (xi, wi) in gx.iter().zip(&gw) {
                let omega = c + hw * xi;
                let h = spectrum(omega);
                if !h.is_finite() {
                    return Err(Error::ProfileEval { omega, msg: "non-finite spectrum".into() });
                }
                low.push(LowNode { omega, weight: hw * wi, h, kappa: kappa_hat(omega) });
            }
        }

        let mut panels = Vec::new();
        let mut a = 1.0f64;
        let mut ha = spectrum(a);
        let mut tail = Tail { omega: a, h: 0.0, dh: 0.0, beta: 0.0 };
        while a < OMEGA_MAX {
            let b = a * PANEL_RATIO;
            let c = 0.5 * (a + b);
            let hm = spectrum(c);
            let hb = spectrum(b);
            if !(hm.is_finite() && hb.is_finite()) {
                return Err(Error::ProfileEval { omega: b, msg: "non-finite spectrum".into() });
            }
            panels.push(FilonPanel {
                c,
                h: 0.5 * (b - a),
                p: [hm, 0.5 * (hb - ha), 0.5 * (hb + ha) - hm],
            });
            a = b;
            ha = hb;
            tail = Tail {
                omega: b,
                h: hb,
                dh: (hb - hm) / (b - c),
                beta: -((hb.abs() / hm.abs()).ln() / (b / c).ln()),
            };
            if hb.abs() * b < 1e-18 {
                tail.h = 0.0;
                break;
            }
        }
        Ok(SpectralInverse { n0, low, panels, tail, spectrum })
    }

    pub fn n0(&self) -> i32 {
        self.n0
    }

    pub fn spectrum(&self, omega: f64) -> f64 {
        (self.spectrum)(omega.abs())
    }

    /// ∫_1^∞ G(ω) e^{jωτ} dω.
    fn high_band(&self, tau: f64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for p in &self.panels {
            let m = filon_moments(p.h * tau);
            let inner = m[0] * p.p[0] + m[1] * p.p[1] + m[2] * p.p[2];
            acc += Complex64::from_polar(p.h, p.c * tau) * inner;
        }
        acc + self.tail.eval(tau)
    }

    /// Regularized inverse transform of G (even) or j·sign(ω)·G (odd) at t.
    pub fn inverse(&self, t: f64, parity: Parity) -> f64 {
        if t < 0.0 {
            let v = self.inverse(-t, parity);
            return if parity == Parity::Even { v } else { -v };
        }
        let mut low = Complex64::new(0.0, 0.0);
        for nd in &self.low {
            let u = nd.omega * t;
            let num = if nd.kappa == 1.0 {
                exp_remainder(u, self.n0)
            } else {
                Complex64::from_polar(1.0, u) - exp_taylor(u, self.n0) * nd.kappa
            };
            low += num * (nd.weight * nd.h);
        }
        let total = low + self.high_band(t);
        match parity {
            Parity::Even => total.re / PI,
            Parity::Odd => -total.im / PI,
        }
    }

    /// (κ_rad ∗ ∂^n ρ)(t) for the representative of ρ returned by `inverse(·, Even)`.
    pub fn window_term(&self, n: usize, t: f64) -> f64 {
        let j = Complex64::i();
        let mut acc = Complex64::new(0.0, 0.0);
        for nd in &self.low {
            if nd.kappa == 0.0 {
                continue;
            }
            let u = nd.omega * t;
            let rem = if nd.kappa == 1.0 || (self.n0 - n as i32) < 0 {
                exp_remainder(u, self.n0 - n as i32)
            } else {
                Complex64::from_polar(1.0, u) - exp_taylor(u, self.n0 - n as i32)
            };
            acc += (j * nd.omega).powu(n as u32) * rem * (nd.weight * nd.h * nd.kappa);
        }
        acc.re / PI
    }

    /// ν̂(ω) = [e^{−jωt0} − κ̂(ω) Σ_{n ≤ n0} ((−t0)^n/n!) (jω)^n] G(ω).
    pub fn nu_hat(&self, omega: f64, t0: f64) -> Complex64 {
        let g = self.spectrum(omega);
        let k = kappa_hat(omega);
        let u = -omega * t0;
        let num = if k == 1.0 {
            exp_remainder(u, self.n0)
        } else {
            Complex64::from_polar(1.0, u) - exp_taylor(u, self.n0) * k
        };
        num * g
    }

    /// Inverse transform of ν̂ for the offset t0 = ξᵀx0, evaluated at t.
    pub fn nu_spectral(&self, t: f64, t0: f64) -> f64 {
        let mut low = Complex64::new(0.0, 0.0);
        for nd in &self.low {
            let u = -nd.omega * t0;
            let num = if nd.kappa == 1.0 {
                exp_remainder(u, self.n0)
            } else {
                Complex64::from_polar(1.0, u) - exp_taylor(u, self.n0) * nd.kappa
            };
            low += num * Complex64::from_polar(nd.weight * nd.h, nd.omega * t);
        }
        let total = low + self.high_band(t - t0);
        total.re / PI
    }
}

/// r_N(ω) = (e^{−jω} − Σ_{n ≤ N} (−jω)^n/n!) / ((−jω)^N/N!).
pub fn remainder_r(n: u32, omega: f64) -> Complex64 {
    let j = Complex64::i();
    if omega == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let nn = n as f64;
    if omega.abs() < nn + 1.0 {
        // Σ_{m ≥ 1} Π_{i=1..m} (−jω)/(N+i); terms shrink geometrically here.
        let z = -j * omega;
        let mut term = Complex64::new(1.0, 0.0);
        let mut sum = Complex64::new(0.0, 0.0);
        for m in 1..400 {
            term *= z / (nn + m as f64);
            sum += term;
            if term.norm() < 1e-18 * sum.norm() {
                break;
            }
        }
        sum
    } else {
        let z = -j * omega;
        let taylor = exp_taylor(-omega, n as i32);
        let lead = z.powu(n) / factorial(n as usize);
        (Complex64::from_polar(1.0, -omega) - taylor) / lead
    }
}
