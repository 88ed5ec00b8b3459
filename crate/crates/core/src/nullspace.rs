//! Polynomial null space, the isotropic band-limited window and its dual basis,
//! and the projectors onto the null space and its dual.

use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fftutil::{fft1, fft2, signed_bin};
use crate::par;
use crate::special::{bessel_j0, bessel_j1, binomial, factorial, factorial_u64, CompositeRule};

/// κ̂ equals one below this radius.
pub const WINDOW_FLAT: f64 = 0.5;
/// κ̂ vanishes from this radius on (the band edge required by the construction is 1).
pub const WINDOW_STOP: f64 = 0.65;
/// Largest derivative order supported by the dual basis.
pub const MAX_DUAL_ORDER: usize = 4;
/// Largest multi-index order with exact integer factorials.
pub const MAX_FACTORIAL_ORDER: usize = 12;

fn flat_exp(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        (-1.0 / x).exp()
    }
}

/// C^∞ step rising from 0 at s ≤ 0 to 1 at s ≥ 1, flat to all orders at both ends.
pub fn smooth_step(s: f64) -> f64 {
    if s <= 0.0 {
        return 0.0;
    }
    if s >= 1.0 {
        return 1.0;
    }
    let a = flat_exp(s);
    a / (a + flat_exp(1.0 - s))
}

/// Radial spectral profile of the isotropic window.
pub fn kappa_hat(rho: f64) -> f64 {
    let r = rho.abs();
    if r < WINDOW_FLAT {
        1.0
    } else if r >= WINDOW_STOP {
        0.0
    } else {
        1.0 - smooth_step((r - WINDOW_FLAT) / (WINDOW_STOP - WINDOW_FLAT))
    }
}

/// Panel edges on [0, WINDOW_STOP] fine enough for oscillation e^{jωt}.
fn window_edges(t: f64) -> Vec<f64> {
    let width = (1.0 / 64.0_f64).min(0.5 / t.abs().max(1e-300));
    let mut edges = vec![0.0];
    for (a, b) in [(0.0, WINDOW_FLAT), (WINDOW_FLAT, WINDOW_STOP)] {
        let n = ((b - a) / width).ceil().max(1.0) as usize;
        for i in 1..=n {
            edges.push(a + (b - a) * i as f64 / n as f64);
        }
    }
    edges
}

/// n-th derivative of κ_rad = F^{-1}{κ̂} in one dimension.
pub fn kappa_rad_deriv(n: usize, t: f64) -> f64 {
    let rule = CompositeRule::new(&window_edges(t), 8);
    let phase = n as f64 * PI / 2.0;
    rule.integrate(|w| kappa_hat(w) * w.powi(n as i32) * (w * t + phase).cos()) / PI
}

// ---------------------------------------------------------------------------
// Multi-indices and polynomials
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MultiIndex(pub Vec<u32>);

impl MultiIndex {
    pub fn new(k: &[u32]) -> Self {
        MultiIndex(k.to_vec())
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn order(&self) -> usize {
        self.0.iter().map(|&k| k as usize).sum()
    }

    /// k! = Π k_i!, exact for |k| ≤ 12.
    pub fn factorial(&self) -> u64 {
        assert!(self.order() <= MAX_FACTORIAL_ORDER, "multi-index order above 12");
        self.0.iter().map(|&k| factorial_u64(k as usize)).product()
    }

    /// All multi-indices of dimension d with |k| ≤ n0, graded, lexicographically
    /// descending within a degree.
    pub fn all(d: usize, n0: i32) -> Vec<MultiIndex> {
        let mut out = Vec::new();
        if n0 < 0 {
            return out;
        }
        for deg in 0..=(n0 as u32) {
            let mut cur = vec![0u32; d];
            push_degree(&mut out, &mut cur, 0, deg);
        }
        out
    }
}

fn push_degree(out: &mut Vec<MultiIndex>, cur: &mut Vec<u32>, pos: usize, remaining: u32) {
    let d = cur.len();
    if pos == d - 1 {
        cur[pos] = remaining;
        out.push(MultiIndex(cur.clone()));
        return;
    }
    for v in (0..=remaining).rev() {
        cur[pos] = v;
        push_degree(out, cur, pos + 1, remaining - v);
    }
    cur[pos] = 0;
}

/// dim P_{n0} in dimension d.
pub fn poly_dim(d: usize, n0: i32) -> usize {
    if n0 < 0 {
        0
    } else {
        binomial(n0 as usize + d, d)
    }
}

/// x^k / k!
pub fn monomial_eval(k: &MultiIndex, x: &[f64]) -> f64 {
    assert_eq!(k.dim(), x.len(), "dimension mismatch");
    let num: f64 = k.0.iter().zip(x).map(|(&ki, &xi)| xi.powi(ki as i32)).product();
    num / k.factorial() as f64
}

/// ξ^k = Π ξ_i^{k_i} (no factorial).
pub fn power_product(k: &MultiIndex, xi: &[f64]) -> f64 {
    k.0.iter().zip(xi).map(|(&ki, &v)| v.powi(ki as i32)).product()
}

/// Element of P_{n0} in the Taylor basis m_k = x^k/k!.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polynomial {
    pub d: usize,
    pub n0: i32,
    pub coeffs: Vec<f64>,
}

impl Polynomial {
    pub fn zero(d: usize, n0: i32) -> Self {
        Polynomial { d, n0, coeffs: vec![0.0; poly_dim(d, n0)] }
    }

    pub fn from_coeffs(d: usize, n0: i32, coeffs: Vec<f64>) -> Result<Self> {
        let dim = poly_dim(d, n0);
        if coeffs.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: coeffs.len() });
        }
        Ok(Polynomial { d, n0, coeffs })
    }

    pub fn basis(&self) -> Vec<MultiIndex> {
        MultiIndex::all(self.d, self.n0)
    }

    pub fn coeff(&self, k: &MultiIndex) -> f64 {
        self.basis().iter().position(|b| b == k).map(|i| self.coeffs[i]).unwrap_or(0.0)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.basis().iter().zip(&self.coeffs).map(|(k, b)| b * monomial_eval(k, x)).sum()
    }

    /// ℓ2 norm of the Taylor coefficients.
    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|b| b * b).sum::<f64>().sqrt()
    }
}

/// Rows m_k(x_m) of the polynomial design matrix.
pub fn poly_design(points: &[Vec<f64>], d: usize, n0: i32) -> Vec<Vec<f64>> {
    let basis = MultiIndex::all(d, n0);
    points.iter().map(|x| basis.iter().map(|k| monomial_eval(k, x)).collect()).collect()
}

// ---------------------------------------------------------------------------
// Window
// ---------------------------------------------------------------------------

/// Uniform radial frequency grid on [0, 1].
#[derive(Debug, Clone, Copy)]
pub struct RadialFreqGrid {
    pub samples: usize,
}

impl Default for RadialFreqGrid {
    fn default() -> Self {
        RadialFreqGrid { samples: 1024 }
    }
}

#[derive(Debug, Clone)]
pub struct IsoWindow {
    pub d: usize,
    /// (ρ, κ̂(ρ)) on the frequency grid.
    pub spectral: Vec<(f64, f64)>,
    /// Radial grid and samples of κ_iso.
    pub radii: Vec<f64>,
    pub kappa_iso: Vec<f64>,
    /// 1D grid and samples of κ_rad.
    pub t: Vec<f64>,
    pub kappa_rad: Vec<f64>,
    /// Radius beyond which the envelope of κ_iso stays below 1e-10 of its peak.
    pub truncation_radius: f64,
}

pub fn build_iso_window(d: usize, grid: RadialFreqGrid) -> Result<IsoWindow> {
    if grid.samples < 256 {
        return Err(Error::GridTooCoarse(format!(
            "{} frequency samples on [0,1], need at least 256",
            grid.samples
        )));
    }
    if d == 0 || d > 2 {
        return Err(Error::Unsupported(format!("window dimension {d} (supported: 1, 2)")));
    }
    let spectral = (0..grid.samples)
        .map(|i| {
            let rho = i as f64 / (grid.samples - 1) as f64;
            (rho, kappa_hat(rho))
        })
        .collect();
    let radii: Vec<f64> = (0..=512).map(|i| i as f64 / 8.0).collect();
    let kappa_iso = par::map(&radii, |&r| kappa_iso_radial(d, r));
    let t: Vec<f64> = (0..=1024).map(|i| -64.0 + i as f64 / 8.0).collect();
    let kappa_rad = par::map(&t, |&s| kappa_rad_deriv(0, s));
    Ok(IsoWindow {
        d,
        spectral,
        radii,
        kappa_iso,
        t,
        kappa_rad,
        truncation_radius: truncation_radius(d),
    })
}

impl IsoWindow {
    pub fn kappa_hat(&self, rho: f64) -> f64 {
        kappa_hat(rho)
    }

    pub fn kappa_iso(&self, r: f64) -> f64 {
        kappa_iso_radial(self.d, r)
    }

    pub fn kappa_rad(&self, t: f64) -> f64 {
        kappa_rad_deriv(0, t)
    }

    pub fn kappa_rad_deriv(&self, n: usize, t: f64) -> f64 {
        kappa_rad_deriv(n, t)
    }

    /// CSV with columns r,kappa_iso.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("r,kappa_iso\n");
        for (r, k) in self.radii.iter().zip(&self.kappa_iso) {
            s.push_str(&format!("{r},{k}\n"));
        }
        s
    }
}

/// κ_iso at radius r: the d-dimensional inverse transform of κ̂(‖ω‖).
pub fn kappa_iso_radial(d: usize, r: f64) -> f64 {
    match d {
        1 => kappa_rad_deriv(0, r),
        2 => {
            let rule = CompositeRule::new(&window_edges(r), 8);
            rule.integrate(|rho| kappa_hat(rho) * bessel_j0(rho * r) * rho) / (2.0 * PI)
        }
        _ => f64::NAN,
    }
}

fn truncation_radius(d: usize) -> f64 {
    static CACHE: [OnceLock<f64>; 3] = [OnceLock::new(), OnceLock::new(), OnceLock::new()];
    *CACHE[d.min(2)].get_or_init(|| {
        let peak = kappa_iso_radial(d, 0.0).abs();
        let mut r = 64.0;
        while r < 16384.0 {
            let block: Vec<f64> = (0..48).map(|i| r * (1.0 + 0.25 * i as f64 / 48.0)).collect();
            let env = par::map(&block, |&x| kappa_iso_radial(d, x).abs())
                .into_iter()
                .fold(0.0, f64::max);
            if env < 1e-10 * peak {
                return r;
            }
            r *= 1.25;
        }
        r
    })
}

/// Values J_0..J_4 at x.
fn bessel_j_upto4(x: f64) -> [f64; 5] {
    let mut out = [0.0; 5];
    if x.abs() < 12.0 {
        let h = 0.5 * x;
        for (n, o) in out.iter_mut().enumerate() {
            let mut term = h.powi(n as i32) / factorial(n);
            let mut sum = term;
            for k in 1..80 {
                term *= -h * h / (k as f64 * (k + n) as f64);
                sum += term;
                if term.abs() < 1e-18 * sum.abs().max(1e-300) {
                    break;
                }
            }
            *o = sum;
        }
    } else {
        out[0] = bessel_j0(x);
        out[1] = bessel_j1(x);
        for n in 1..4 {
            out[n + 1] = 2.0 * n as f64 / x * out[n] - out[n - 1];
        }
    }
    out
}

/// Dual basis function m*_k(x) = (−1)^{|k|} ∂^k κ_iso(x).
pub fn dual_basis_eval(window: &IsoWindow, k: &MultiIndex, x: &[f64]) -> Result<f64> {
    let order = k.order();
    if order > MAX_DUAL_ORDER {
        return Err(Error::DerivativeBudget { order, max: MAX_DUAL_ORDER });
    }
    if k.dim() != window.d || x.len() != window.d {
        return Err(Error::DimensionMismatch { expected: window.d, got: x.len() });
    }
    let sign = if order % 2 == 0 { 1.0 } else { -1.0 };
    match window.d {
        1 => Ok(sign * kappa_rad_deriv(order, x[0])),
        2 => Ok(sign * dual_2d(k, x)),
        d => Err(Error::Unsupported(format!("dual basis in dimension {d}"))),
    }
}

/// ∂^k κ_iso in two dimensions through the angular Fourier expansion of the symbol.
fn dual_2d(k: &MultiIndex, x: &[f64]) -> f64 {
    let (k1, k2) = (k.0[0] as i32, k.0[1] as i32);
    let order = (k1 + k2) as usize;
    // cos^{k1}ψ sin^{k2}ψ = Σ_m c_m e^{jmψ}, |m| ≤ order.
    let npts = 16;
    let mut c = vec![Complex64::new(0.0, 0.0); 2 * MAX_DUAL_ORDER + 1];
    for i in 0..npts {
        let psi = 2.0 * PI * i as f64 / npts as f64;
        let g = psi.cos().powi(k1) * psi.sin().powi(k2);
        for m in -(MAX_DUAL_ORDER as i32)..=(MAX_DUAL_ORDER as i32) {
            c[(m + MAX_DUAL_ORDER as i32) as usize] +=
                g * Complex64::from_polar(1.0 / npts as f64, -(m as f64) * psi);
        }
    }
    let r = x[0].hypot(x[1]);
    let phi = x[1].atan2(x[0]);
    let rule = CompositeRule::new(&window_edges(r), 8);
    let mut hankel = [0.0; 5];
    for (&rho, &w) in rule.nodes.iter().zip(&rule.weights) {
        let kh = kappa_hat(rho);
        if kh == 0.0 {
            continue;
        }
        let js = bessel_j_upto4(rho * r);
        let base = w * kh * rho.powi(order as i32 + 1);
        for m in 0..=order {
            hankel[m] += base * js[m];
        }
    }
    let jpow = |n: usize| Complex64::i().powu(n as u32);
    let mut acc = Complex64::new(0.0, 0.0);
    for m in -(order as i32)..=(order as i32) {
        let cm = c[(m + MAX_DUAL_ORDER as i32) as usize];
        if cm.norm() < 1e-14 {
            continue;
        }
        let am = m.unsigned_abs() as usize;
        acc += cm * jpow(am) * Complex64::from_polar(1.0, m as f64 * phi) * hankel[am];
    }
    (jpow(order) * acc).re / (2.0 * PI)
}

// ---------------------------------------------------------------------------
// Lattice quadrature
// ---------------------------------------------------------------------------

/// Samples on the centered lattice x_i = (i − n/2)·h in each coordinate (row-major for d = 2,
/// first coordinate varying slowest).
#[derive(Debug, Clone)]
pub struct LatticeField {
    pub d: usize,
    pub n: usize,
    pub h: f64,
    pub values: Vec<f64>,
}

impl LatticeField {
    pub fn coord(&self, i: usize) -> f64 {
        (i as f64 - (self.n / 2) as f64) * self.h
    }

    pub fn point(&self, idx: usize) -> Vec<f64> {
        match self.d {
            1 => vec![self.coord(idx)],
            _ => vec![self.coord(idx / self.n), self.coord(idx % self.n)],
        }
    }

    pub fn sample(d: usize, n: usize, h: f64, f: &(dyn Fn(&[f64]) -> f64 + Sync)) -> Self {
        let len = if d == 1 { n } else { n * n };
        let proto = LatticeField { d, n, h, values: Vec::new() };
        let idx: Vec<usize> = (0..len).collect();
        let values = par::map(&idx, |&i| f(&proto.point(i)));
        LatticeField { d, n, h, values }
    }
}

/// Lattice quadrature settings; `n` must be even.
#[derive(Debug, Clone, Copy)]
pub struct LatticeQuad {
    pub h: f64,
    pub n: usize,
}

impl LatticeQuad {
    /// Exact for band-limited integrands times polynomials (Poisson summation).
    pub fn biorthogonality(d: usize) -> Self {
        match d {
            1 => LatticeQuad { h: 3.0, n: 8192 },
            _ => LatticeQuad { h: 3.0, n: 2048 },
        }
    }

    /// Default for generic smooth fields.
    pub fn generic(d: usize) -> Self {
        match d {
            1 => LatticeQuad { h: 0.25, n: 1 << 15 },
            _ => LatticeQuad { h: 1.0, n: 2048 },
        }
    }
}

/// Samples of m*_k on the lattice, computed exactly (up to periodization far
/// beyond the truncation radius) by an inverse DFT of κ̂(ω)(jω)^k.
pub fn dual_lattice(d: usize, k: &MultiIndex, quad: LatticeQuad) -> Result<LatticeField> {
    let order = k.order();
    if order > MAX_DUAL_ORDER {
        return Err(Error::DerivativeBudget { order, max: MAX_DUAL_ORDER });
    }
    if quad.h >= PI / WINDOW_STOP {
        return Err(Error::GridTooCoarse(format!("lattice step {} aliases the window band", quad.h)));
    }
    let n = quad.n;
    let dw = 2.0 * PI / (n as f64 * quad.h);
    let sign = if order % 2 == 0 { 1.0 } else { -1.0 };
    let j = Complex64::i();
    let values = match d {
        1 => {
            let mut buf: Vec<Complex64> = (0..n)
                .map(|p| {
                    let w = signed_bin(p, n) as f64 * dw;
                    (j * w).powu(k.0[0]) * kappa_hat(w)
                })
                .collect();
            fft1(&mut buf, true);
            let scale = sign / (n as f64 * quad.h);
            (0..n).map(|i| buf[(i + n - n / 2) % n].re * scale).collect()
        }
        2 => {
            let rows = par::map_range(n, |p| {
                let w1 = signed_bin(p, n) as f64 * dw;
                let mut row = vec![Complex64::new(0.0, 0.0); n];
                if w1.abs() < WINDOW_STOP {
                    for (q, slot) in row.iter_mut().enumerate() {
                        let w2 = signed_bin(q, n) as f64 * dw;
                        let kh = kappa_hat(w1.hypot(w2));
                        if kh != 0.0 {
                            *slot = (j * w1).powu(k.0[0]) * (j * w2).powu(k.0[1]) * kh;
                        }
                    }
                }
                row
            });
            let mut buf: Vec<Complex64> = rows.into_iter().flatten().collect();
            fft2(&mut buf, n, true);
            let scale = sign / (n as f64 * quad.h).powi(2);
            let mut out = vec![0.0; n * n];
            for i in 0..n {
                let si = (i + n - n / 2) % n;
                for jx in 0..n {
                    let sj = (jx + n - n / 2) % n;
                    out[i * n + jx] = buf[si * n + sj].re * scale;
                }
            }
            out
        }
        _ => return Err(Error::Unsupported(format!("lattice dual basis in dimension {d}"))),
    };
    Ok(LatticeField { d, n, h: quad.h, values })
}

/// Moments ⟨m_k, field⟩ for every |k| ≤ n0 by lattice quadrature.
fn lattice_moments(field: &LatticeField, n0: i32) -> Vec<f64> {
    let basis = MultiIndex::all(field.d, n0);
    let cell = field.h.powi(field.d as i32);
    let n = field.n;
    let nb = basis.len();
    let rows = if field.d == 1 { 1 } else { n };
    let partial = par::map_range(rows, |i| {
        let mut acc = vec![0.0; nb];
        let mut x = vec![0.0; field.d];
        if field.d == 1 {
            for (p, &v) in field.values.iter().enumerate() {
                if v != 0.0 {
                    x[0] = field.coord(p);
                    for (a, k) in acc.iter_mut().zip(&basis) {
                        *a += v * monomial_eval(k, &x);
                    }
                }
            }
        } else {
            x[0] = field.coord(i);
            for q in 0..n {
                let v = field.values[i * n + q];
                if v != 0.0 {
                    x[1] = field.coord(q);
                    for (a, k) in acc.iter_mut().zip(&basis) {
                        *a += v * monomial_eval(k, &x);
                    }
                }
            }
        }
        acc
    });
    let mut out = vec![0.0; nb];
    for acc in partial {
        for (o, a) in out.iter_mut().zip(acc) {
            *o += a;
        }
    }
    out.iter().map(|v| v * cell).collect()
}

/// Matrix [⟨m_k, m*_n⟩] for |k|, |n| ≤ n0, rows indexed by k.
pub fn biorthogonality_matrix(d: usize, n0: i32) -> Result<Vec<Vec<f64>>> {
    let basis = MultiIndex::all(d, n0);
    let quad = LatticeQuad::biorthogonality(d);
    let mut m = vec![vec![0.0; basis.len()]; basis.len()];
    for (col, nidx) in basis.iter().enumerate() {
        let dual = dual_lattice(d, nidx, quad)?;
        let moments = lattice_moments(&dual, n0);
        for (row, v) in moments.into_iter().enumerate() {
            m[row][col] = v;
        }
    }
    Ok(m)
}

/// Result of a null-space projection with the quadrature tail estimate.
#[derive(Debug, Clone)]
pub struct Projection {
    pub poly: Polynomial,
    /// Largest relative contribution of the outermost lattice shell.
    pub tail_estimate: f64,
}

/// Proj_P{f} = Σ ⟨f, m*_k⟩ m_k by lattice quadrature.
pub fn project_to_nullspace(
    f: &(dyn Fn(&[f64]) -> f64 + Sync),
    window: &IsoWindow,
    n0: i32,
    quad: LatticeQuad,
) -> Result<Projection> {
    let d = window.d;
    let basis = MultiIndex::all(d, n0);
    if basis.is_empty() {
        return Ok(Projection { poly: Polynomial::zero(d, n0), tail_estimate: 0.0 });
    }
    let samples = LatticeField::sample(d, quad.n, quad.h, f);
    let cell = quad.h.powi(d as i32);
    let half = (quad.n / 2) as f64 * quad.h;
    let shell = 0.9 * half;
    let mut coeffs = Vec::with_capacity(basis.len());
    let mut tail: f64 = 0.0;
    for k in &basis {
        let dual = dual_lattice(d, k, quad)?;
        let idx: Vec<usize> = (0..samples.values.len()).collect();
        let (total, outer, abs_total) = par::fold3(&idx, |&i| {
            let v = samples.values[i] * dual.values[i] * cell;
            let p = samples.point(i);
            let r = p.iter().map(|c| c.abs()).fold(0.0, f64::max);
            (v, if r > shell { v.abs() } else { 0.0 }, v.abs())
        });
        coeffs.push(total);
        if abs_total > 0.0 {
            tail = tail.max(outer / abs_total);
        }
    }
    if !coeffs.iter().all(|c| c.is_finite()) {
        return Err(Error::Quadrature { residual: f64::NAN });
    }
    if tail > 1e-3 {
        return Err(Error::Quadrature { residual: tail });
    }
    Ok(Projection { poly: Polynomial { d, n0, coeffs }, tail_estimate: tail })
}

/// Proj_P for a ridge f(x) = ρ(ξᵀx − τ) through its Radon profile:
/// b_k = (−1)^{|k|} ξ^k ∫ ρ(s − τ) κ_rad^{(|k|)}(s) ds.
pub fn project_ridge_to_nullspace(
    rho: &(dyn Fn(f64) -> f64 + Sync),
    xi: &[f64],
    tau: f64,
    n0: i32,
) -> Polynomial {
    let d = xi.len();
    let basis = MultiIndex::all(d, n0);
    let max_order = basis.iter().map(|k| k.order()).max().unwrap_or(0);
    let table = kappa_rad_table(max_order, 0.02, 1 << 18);
    let moments: Vec<f64> = (0..=max_order)
        .map(|n| {
            let vals = &table[n];
            let idx: Vec<usize> = (0..vals.len()).collect();
            par::sum(&idx, |&i| {
                let s = (i as f64 - (vals.len() / 2) as f64) * 0.02;
                vals[i] * rho(s - tau)
            }) * 0.02
        })
        .collect();
    let coeffs = basis
        .iter()
        .map(|k| {
            let sign = if k.order() % 2 == 0 { 1.0 } else { -1.0 };
            sign * power_product(k, xi) * moments[k.order()]
        })
        .collect();
    Polynomial { d, n0, coeffs }
}

/// Exact samples of κ_rad^{(n)} for n ≤ max_order on the centered grid of step h and length n.
pub fn kappa_rad_table(max_order: usize, h: f64, len: usize) -> Vec<Vec<f64>> {
    let dw = 2.0 * PI / (len as f64 * h);
    let j = Complex64::i();
    (0..=max_order)
        .map(|order| {
            let mut buf: Vec<Complex64> = (0..len)
                .map(|p| {
                    let w = signed_bin(p, len) as f64 * dw;
                    (j * w).powu(order as u32) * kappa_hat(w)
                })
                .collect();
            fft1(&mut buf, true);
            let scale = 1.0 / (len as f64 * h);
            (0..len).map(|i| buf[(i + len - len / 2) % len].re * scale).collect()
        })
        .collect()
}

/// Moments ⟨m_k, ν⟩ for |k| ≤ n0 of a sampled field; warns when the outer shell
/// carries more than 1e-4 of the weighted mass.
pub fn project_dual(nu: &LatticeField, n0: i32) -> Vec<f64> {
    let cell = nu.h.powi(nu.d as i32);
    let half = (nu.n / 2) as f64 * nu.h;
    let idx: Vec<usize> = (0..nu.values.len()).collect();
    let weight = |i: usize| {
        let p = nu.point(i);
        let r = p.iter().map(|c| c * c).sum::<f64>().sqrt();
        (1.0 + r).powi(n0.max(0)) * nu.values[i].abs() * cell
    };
    let total = par::sum(&idx, |&i| weight(i));
    let outer = par::sum(&idx, |&i| {
        let p = nu.point(i);
        if p.iter().any(|c| c.abs() > 0.9 * half) {
            weight(i)
        } else {
            0.0
        }
    });
    if total > 0.0 && outer > 1e-4 * total {
        log::warn!("project_dual: truncated tail carries {:.2e} of the weighted mass", outer / total);
    }
    lattice_moments(nu, n0)
}

/// Proj_{P'}{ν} = Σ ⟨m_k, ν⟩ m*_k evaluated at x.
pub fn dual_projection_eval(window: &IsoWindow, moments: &[f64], n0: i32, x: &[f64]) -> Result<f64> {
    let basis = MultiIndex::all(window.d, n0);
    let mut s = 0.0;
    for (k, m) in basis.iter().zip(moments) {
        s += m * dual_basis_eval(window, k, x)?;
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn monomial_examples() {
        assert_eq!(monomial_eval(&MultiIndex::new(&[0, 0]), &[7.0, -3.0]), 1.0);
        assert_eq!(monomial_eval(&MultiIndex::new(&[2, 0]), &[2.0, 5.0]), 2.0);
        assert_eq!(monomial_eval(&MultiIndex::new(&[1, 1]), &[3.0, 2.0]), 6.0);
    }

    #[test]
    fn enumeration_sizes() {
        assert_eq!(MultiIndex::all(2, 1).len(), 3);
        assert_eq!(MultiIndex::all(2, 2).len(), 6);
        assert_eq!(MultiIndex::all(1, 3).len(), 4);
        assert!(MultiIndex::all(2, -1).is_empty());
        assert_eq!(poly_dim(3, 2), 10);
    }

    #[test]
    fn window_values() {
        assert_eq!(kappa_hat(0.25), 1.0);
        assert_eq!(kappa_hat(1.5), 0.0);
        assert_eq!(kappa_hat(0.9), 0.0);
        let mut prev = 1.0;
        for i in 0..=100 {
            let v = kappa_hat(0.5 + 0.15 * i as f64 / 100.0);
            assert!((0.0..=1.0).contains(&v) && v <= prev);
            prev = v;
        }
    }

    #[test]
    fn kappa_integrates_to_one() {
        // κ̂(0) = 1 under the unnormalized forward transform.
        let table = kappa_rad_table(0, 0.5, 1 << 14);
        let s: f64 = table[0].iter().sum::<f64>() * 0.5;
        assert!((s - 1.0).abs() < 1e-12);
        assert!((kappa_rad_deriv(0, 3.0) - table[0][(1 << 13) + 6]).abs() < 1e-12);
    }

    #[test]
    fn dual_2d_matches_lattice() {
        let quad = LatticeQuad { h: 1.0, n: 512 };
        let w = build_iso_window(2, RadialFreqGrid::default()).unwrap();
        for k in MultiIndex::all(2, 2) {
            let lat = dual_lattice(2, &k, quad).unwrap();
            for &(i, j) in &[(256usize, 256usize), (259, 250), (270, 240)] {
                let x = [lat.coord(i), lat.coord(j)];
                let direct = dual_basis_eval(&w, &k, &x).unwrap();
                let sampled = lat.values[i * 512 + j];
                // The coarse lattice carries a ~1e-9 frequency-sampling error.
                assert!((direct - sampled).abs() < 1e-8, "k={k:?} x={x:?}: {direct} vs {sampled}");
            }
        }
    }

    #[test]
    fn odd_dual_is_antisymmetric() {
        let w = build_iso_window(2, RadialFreqGrid::default()).unwrap();
        let k = MultiIndex::new(&[1, 0]);
        let a = dual_basis_eval(&w, &k, &[1.3, -0.4]).unwrap();
        let b = dual_basis_eval(&w, &k, &[-1.3, 0.4]).unwrap();
        assert!((a + b).abs() < 1e-14);
    }
}
