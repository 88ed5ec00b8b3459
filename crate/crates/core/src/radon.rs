//! Discrete Radon machinery in two dimensions, analytic Radon transforms of isotropic
//! functions and the Radon-domain basis ν_x.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::activations::{green_kernel, ClosedForm};
use crate::catalog::OperatorProfile;
use crate::error::{Error, Result};
use crate::fftutil::{fft1, signed_bin};
use crate::interp::{keys_weights, UniformTable};
use crate::par;
use crate::spectral::{Parity, SpectralInverse};

pub use crate::spectral::remainder_r;

/// Square image on [−L, L]² sampled at cell centres x_i = −L + (i + ½)h, h = 2L/n.
/// `values[i * n + j]` holds f(x_i, y_j).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Image {
    pub n: usize,
    pub half_width: f64,
    pub values: Vec<f64>,
}

impl Image {
    pub fn h(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }

    pub fn coord(&self, i: usize) -> f64 {
        -self.half_width + (i as f64 + 0.5) * self.h()
    }

    pub fn from_fn(n: usize, half_width: f64, f: impl Fn(f64, f64) -> f64 + Sync) -> Self {
        let h = 2.0 * half_width / n as f64;
        let rows = par::map_range(n, |i| {
            let x = -half_width + (i as f64 + 0.5) * h;
            (0..n).map(|j| f(x, -half_width + (j as f64 + 0.5) * h)).collect::<Vec<_>>()
        });
        Image { n, half_width, values: rows.into_iter().flatten().collect() }
    }

    /// Keys bicubic interpolation, zero outside the grid.
    pub fn sample(&self, x: f64, y: f64) -> f64 {
        let h = self.h();
        let u = (x + self.half_width) / h - 0.5;
        let v = (y + self.half_width) / h - 0.5;
        let n = self.n as isize;
        if u < -2.0 || v < -2.0 || u > n as f64 + 1.0 || v > n as f64 + 1.0 {
            return 0.0;
        }
        let (iu, iv) = (u.floor() as isize, v.floor() as isize);
        let wu = keys_weights(u - iu as f64);
        let wv = keys_weights(v - iv as f64);
        if iu >= 1 && iv >= 1 && iu + 2 < n && iv + 2 < n {
            let mut acc = 0.0;
            for (a, wa) in wu.iter().enumerate() {
                let base = (iu as usize - 1 + a) * self.n + iv as usize - 1;
                let row = &self.values[base..base + 4];
                acc += wa * (wv[0] * row[0] + wv[1] * row[1] + wv[2] * row[2] + wv[3] * row[3]);
            }
            return acc;
        }
        let mut acc = 0.0;
        for (a, wa) in wu.iter().enumerate() {
            let i = iu - 1 + a as isize;
            if i < 0 || i >= n {
                continue;
            }
            let row = &self.values[i as usize * self.n..(i as usize + 1) * self.n];
            let mut s = 0.0;
            for (b, wb) in wv.iter().enumerate() {
                let j = iv - 1 + b as isize;
                if j >= 0 && j < n {
                    s += wb * row[j as usize];
                }
            }
            acc += wa * s;
        }
        acc
    }

    pub fn l2_norm(&self) -> f64 {
        (self.values.iter().map(|v| v * v).sum::<f64>() * self.h() * self.h()).sqrt()
    }

    /// Fraction of |f| carried by the outermost ring of pixels.
    pub fn boundary_fraction(&self) -> f64 {
        let n = self.n;
        let total: f64 = self.values.iter().map(|v| v.abs()).sum();
        if total == 0.0 {
            return 0.0;
        }
        let mut edge = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i == 0 || j == 0 || i == n - 1 || j == n - 1 {
                    edge += self.values[i * n + j].abs();
                }
            }
        }
        edge / total
    }
}

/// Sampling of ℝ × [0, π): t_i = −T + i·2T/n_t, θ_k = kπ/n_θ.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct SinoSpec {
    pub n_t: usize,
    pub n_theta: usize,
    pub t_max: f64,
}

impl SinoSpec {
    pub fn dt(&self) -> f64 {
        2.0 * self.t_max / self.n_t as f64
    }

    pub fn t(&self, i: usize) -> f64 {
        -self.t_max + i as f64 * self.dt()
    }

    pub fn theta(&self, k: usize) -> f64 {
        PI * k as f64 / self.n_theta as f64
    }

    pub fn xi(&self, k: usize) -> [f64; 2] {
        let th = self.theta(k);
        [th.cos(), th.sin()]
    }
}

/// Grid function on ℝ × S¹, stored for θ ∈ [0, π); the other half follows from parity:
/// g(t, θ+π) = ±g(−t, θ). `values[k * n_t + i]` holds g(t_i, θ_k).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Sinogram {
    pub spec: SinoSpec,
    pub parity: Parity,
    pub values: Vec<f64>,
}

impl Sinogram {
    pub fn zeros(spec: SinoSpec, parity: Parity) -> Self {
        Sinogram { spec, parity, values: vec![0.0; spec.n_t * spec.n_theta] }
    }

    pub fn from_fn(spec: SinoSpec, parity: Parity, f: impl Fn(f64, [f64; 2]) -> f64 + Sync) -> Self {
        let cols = par::map_range(spec.n_theta, |k| {
            let xi = spec.xi(k);
            (0..spec.n_t).map(|i| f(spec.t(i), xi)).collect::<Vec<_>>()
        });
        Sinogram { spec, parity, values: cols.into_iter().flatten().collect() }
    }

    pub fn column(&self, k: usize) -> &[f64] {
        &self.values[k * self.spec.n_t..(k + 1) * self.spec.n_t]
    }

    pub fn get(&self, i: usize, k: usize) -> f64 {
        self.values[k * self.spec.n_t + i]
    }

    /// Linear interpolation in t within column k; zero outside the grid.
    pub fn interp(&self, k: usize, t: f64) -> f64 {
        let u = (t + self.spec.t_max) / self.spec.dt();
        if u < 0.0 || u > (self.spec.n_t - 1) as f64 {
            return 0.0;
        }
        let i = (u.floor() as usize).min(self.spec.n_t - 2);
        let s = u - i as f64;
        let c = self.column(k);
        (1.0 - s) * c[i] + s * c[i + 1]
    }

    /// Quadrature of ∫_{S¹}∫ |g|^q dt dξ over the full circle (uniform angles, total 2π).
    pub fn lq_norm(&self, q: f64) -> f64 {
        let w = self.spec.dt() * 2.0 * PI / self.spec.n_theta as f64;
        (par::sum(&self.values, |v| v.abs().powf(q)) * w).powf(1.0 / q)
    }

    /// Full-circle inner product.
    pub fn inner(&self, other: &Sinogram) -> f64 {
        let w = self.spec.dt() * 2.0 * PI / self.spec.n_theta as f64;
        self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum::<f64>() * w
    }

    pub fn scale(&mut self, c: f64) {
        self.values.iter_mut().for_each(|v| *v *= c);
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t");
        for k in 0..self.spec.n_theta {
            out.push_str(&format!(",theta_{:.6}", self.spec.theta(k)));
        }
        out.push('\n');
        for i in 0..self.spec.n_t {
            out.push_str(&format!("{}", self.spec.t(i)));
            for k in 0..self.spec.n_theta {
                out.push_str(&format!(",{}", self.get(i, k)));
            }
            out.push('\n');
        }
        out
    }
}

/// Line integrals by bicubic sampling along each line and the trapezoid rule.
pub fn radon_forward(image: &Image, spec: SinoSpec) -> Sinogram {
    let frac = image.boundary_fraction();
    if frac > 1e-6 {
        log::warn!("image carries {frac:.2e} of its mass on the boundary; support may be truncated");
    }
    let h = image.h();
    if spec.t_max < image.half_width * 2f64.sqrt() {
        log::warn!("t range {} does not cover the image diagonal", spec.t_max);
    }
    // Samples beyond this box see only zero taps.
    let edge = image.half_width + 1.5 * h;
    Sinogram::from_fn(spec, Parity::Even, |t, xi| {
        let (px, py) = (-xi[1], xi[0]);
        let (x0, y0) = (t * xi[0], t * xi[1]);
        // Parameter interval of the line inside [−edge, edge]².
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        for (p, d) in [(x0, px), (y0, py)] {
            if d.abs() < 1e-15 {
                if p.abs() > edge {
                    return 0.0;
                }
            } else {
                let (a, b) = ((-edge - p) / d, (edge - p) / d);
                lo = lo.max(a.min(b));
                hi = hi.min(a.max(b));
            }
        }
        if lo >= hi {
            return 0.0;
        }
        let (k0, k1) = ((lo / h).floor() as i64, (hi / h).ceil() as i64);
        let mut acc = 0.0;
        for k in k0..=k1 {
            let s = k as f64 * h;
            acc += image.sample(x0 + s * px, y0 + s * py);
        }
        acc * h
    })
}

/// Variant of the filtering operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FilterVariant {
    Symmetric,
    Antisymmetric,
}

/// c_d = 1 / (2 (2π)^{d−1}).
pub fn filter_constant(d: usize) -> f64 {
    1.0 / (2.0 * (2.0 * PI).powi(d as i32 - 1))
}

/// Applies a t-spectrum multiplier to every column. With `pad` the column is extended
/// to twice its length by repeating its edge values; otherwise it is treated as periodic.
pub fn apply_multiplier(g: &Sinogram, pad: bool, m: impl Fn(f64) -> Complex64 + Sync) -> Vec<f64> {
    let n = g.spec.n_t;
    let np = if pad { 2 * n } else { n };
    let off = if pad { n / 2 } else { 0 };
    let dw = 2.0 * PI / (np as f64 * g.spec.dt());
    let mult: Vec<Complex64> = (0..np)
        .map(|p| {
            if p == np / 2 {
                // The Nyquist bin has no sign; keep the output real.
                Complex64::new(m(PI / g.spec.dt()).re, 0.0)
            } else {
                m(signed_bin(p, np) as f64 * dw)
            }
        })
        .collect();
    let cols = par::map_range(g.spec.n_theta, |k| {
        let col = g.column(k);
        let mut buf: Vec<Complex64> = (0..np)
            .map(|p| {
                let i = (p as isize - off as isize).clamp(0, n as isize - 1) as usize;
                Complex64::new(col[i], 0.0)
            })
            .collect();
        fft1(&mut buf, false);
        for (b, w) in buf.iter_mut().zip(&mult) {
            *b *= w;
        }
        fft1(&mut buf, true);
        (0..n).map(|i| buf[i + off].re / np as f64).collect::<Vec<_>>()
    });
    cols.into_iter().flatten().collect()
}

/// Taps h_k of the band-limited (|ω| < π/Δt) kernel of c|ω|^e or −j·sign(ω)·c|ω|^e,
/// scaled by Δt, for |k| < n. Only e ∈ {0, 1} are available in closed form.
fn band_limited_taps(e: i32, odd: bool, c: f64, dt: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| {
            let kf = k as f64;
            let sgn = if k % 2 == 0 { 1.0 } else { -1.0 };
            match (e, odd, k) {
                (0, false, 0) => c,
                (0, false, _) => 0.0,
                (0, true, 0) => 0.0,
                (0, true, _) => c * (1.0 - sgn) / (PI * kf),
                (1, false, 0) => c * PI / (2.0 * dt),
                (1, false, _) => c * (sgn - 1.0) / (PI * kf * kf * dt),
                (1, true, 0) => 0.0,
                (1, true, _) => -c * sgn / (kf * dt),
                _ => unreachable!(),
            }
        })
        .collect()
}

/// Linear convolution of every column with the taps h_{−k} = ±h_k (zero extension).
fn convolve_columns(g: &Sinogram, taps: &[f64], odd: bool) -> Vec<f64> {
    let n = g.spec.n_t;
    let l = 2 * n;
    let mut kernel = vec![Complex64::new(0.0, 0.0); l];
    for (k, h) in taps.iter().enumerate() {
        kernel[k] = Complex64::new(*h, 0.0);
        if k > 0 {
            kernel[l - k] = Complex64::new(if odd { -h } else { *h }, 0.0);
        }
    }
    fft1(&mut kernel, false);
    let cols = par::map_range(g.spec.n_theta, |k| {
        let mut buf = vec![Complex64::new(0.0, 0.0); l];
        for (b, v) in buf.iter_mut().zip(g.column(k)) {
            *b = Complex64::new(*v, 0.0);
        }
        fft1(&mut buf, false);
        for (b, w) in buf.iter_mut().zip(&kernel) {
            *b *= w;
        }
        fft1(&mut buf, true);
        buf[..n].iter().map(|c| c.re / l as f64).collect::<Vec<_>>()
    });
    cols.into_iter().flatten().collect()
}

/// Filtering operator K_rad along t: c_d|ω|^{d−1}, or −j·sign(ω)·c_d|ω|^{d−1}.
/// Columns are extended by zero; for d ≤ 2 the exact band-limited kernel is used.
pub fn kfilter(g: &Sinogram, d: usize, variant: FilterVariant) -> Sinogram {
    let c = filter_constant(d);
    let e = d as i32 - 1;
    let odd = variant == FilterVariant::Antisymmetric;
    let values = if e <= 1 {
        convolve_columns(g, &band_limited_taps(e, odd, c, g.spec.dt(), g.spec.n_t), odd)
    } else if odd {
        apply_multiplier(g, true, |w| Complex64::new(0.0, -w.signum() * c * w.abs().powi(e)))
    } else {
        apply_multiplier(g, true, |w| Complex64::new(c * w.abs().powi(e), 0.0))
    };
    let parity = match (odd, g.parity) {
        (false, p) => p,
        (true, Parity::Even) => Parity::Odd,
        (true, Parity::Odd) => Parity::Even,
    };
    Sinogram { spec: g.spec, parity, values }
}

/// Periodic version of the symmetric filter: the sampled multiplier c_d|ω|^{d−1} on the DFT grid.
pub fn kfilter_periodic(g: &Sinogram, d: usize) -> Sinogram {
    let c = filter_constant(d);
    let e = d as i32 - 1;
    Sinogram { spec: g.spec, parity: g.parity, values: apply_multiplier(g, false, |w| Complex64::new(c * w.abs().powi(e), 0.0)) }
}

/// Sign-flip part −j·sign(ω) of the antisymmetric filter (periodic Hilbert transform along t).
pub fn hilbert(g: &Sinogram) -> Sinogram {
    let values = apply_multiplier(g, false, |w| Complex64::new(0.0, -w.signum()));
    let parity = if g.parity == Parity::Even { Parity::Odd } else { Parity::Even };
    Sinogram { spec: g.spec, parity, values }
}

/// R*{g}(x) = ∫_{S¹} g(ξᵀx, ξ) dξ on an n×n grid over [−L, L]².
pub fn backproject(g: &Sinogram, n: usize, half_width: f64) -> Image {
    let spec = g.spec;
    let dtheta = PI / spec.n_theta as f64;
    // The half-circle θ+π contributes g(−t, θ+π) = ±g(t, θ).
    let factor = match g.parity {
        Parity::Even => 2.0,
        Parity::Odd => 0.0,
    };
    let xis: Vec<[f64; 2]> = (0..spec.n_theta).map(|k| spec.xi(k)).collect();
    Image::from_fn(n, half_width, |x, y| {
        if factor == 0.0 {
            return 0.0;
        }
        let mut acc = 0.0;
        for (k, xi) in xis.iter().enumerate() {
            acc += g.interp(k, xi[0] * x + xi[1] * y);
        }
        factor * dtheta * acc
    })
}

/// Comparison of a 2D spectrum slice with the 1D transform of a sinogram column.
#[derive(Debug, Clone, Serialize)]
pub struct SliceComparison {
    pub theta: f64,
    pub omega: Vec<f64>,
    pub image_slice: Vec<Complex64>,
    pub column_spectrum: Vec<Complex64>,
    pub relative_error: f64,
}

/// f̂(ωξ0) by direct quadrature over the image.
pub fn image_spectrum_slice(image: &Image, xi: [f64; 2], omegas: &[f64]) -> Vec<Complex64> {
    let h = image.h();
    let n = image.n;
    par::map(omegas, |&w| {
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..n {
            let x = image.coord(i);
            for j in 0..n {
                let v = image.values[i * n + j];
                if v != 0.0 {
                    let y = image.coord(j);
                    acc += Complex64::from_polar(v, -w * (xi[0] * x + xi[1] * y));
                }
            }
        }
        acc * (h * h)
    })
}

/// 1D transform of column k at the given frequencies.
pub fn column_spectrum(g: &Sinogram, k: usize, omegas: &[f64]) -> Vec<Complex64> {
    let dt = g.spec.dt();
    let col = g.column(k);
    par::map(omegas, |&w| {
        let mut acc = Complex64::new(0.0, 0.0);
        for (i, v) in col.iter().enumerate() {
            acc += Complex64::from_polar(*v, -w * g.spec.t(i));
        }
        acc * dt
    })
}

/// Fourier-slice check at angle index k of a sinogram computed from `image`.
pub fn fourier_slice(image: &Image, sino: &Sinogram, k: usize, omegas: &[f64]) -> SliceComparison {
    let xi = sino.spec.xi(k);
    let image_slice = image_spectrum_slice(image, xi, omegas);
    let column = column_spectrum(sino, k, omegas);
    let scale = image_slice.iter().map(|c| c.norm()).fold(0.0, f64::max).max(1e-300);
    let err = image_slice.iter().zip(&column).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    SliceComparison { theta: sino.spec.theta(k), omega: omegas.to_vec(), image_slice, column_spectrum: column, relative_error: err / scale }
}

/// (t, ξ) ↦ p(t − ξᵀx0) for the 1D inverse transform p of a radial spectrum.
#[derive(Clone)]
pub struct IsoRadon {
    pub x0: Vec<f64>,
    profile: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl IsoRadon {
    pub fn eval(&self, t: f64, xi: &[f64]) -> f64 {
        let t0: f64 = xi.iter().zip(&self.x0).map(|(a, b)| a * b).sum();
        (self.profile)(t - t0)
    }

    pub fn sample(&self, spec: SinoSpec) -> Sinogram {
        Sinogram::from_fn(spec, Parity::Even, |t, xi| self.eval(t, &xi))
    }
}

/// Radon transform of an isotropic function with radial spectrum ρ̂ (a function of |ω|),
/// or of its filtered version ν̂_rad = c_d|ω|^{d−1}ρ̂ when `filtered`.
/// `pole_order` is the Taylor order removed at ω = 0 (−1 for integrable spectra).
pub fn radon_of_isotropic(
    spectrum: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    d: usize,
    x0: &[f64],
    filtered: bool,
    pole_order: i32,
    t_max: f64,
) -> Result<IsoRadon> {
    if x0.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: x0.len() });
    }
    let spec: Arc<dyn Fn(f64) -> f64 + Send + Sync> = if filtered {
        let c = filter_constant(d);
        let e = d as i32 - 1;
        Arc::new(move |w: f64| c * w.abs().powi(e) * spectrum(w))
    } else {
        spectrum
    };
    let engine = SpectralInverse::new(spec, pole_order, t_max)?;
    let h = t_max / 4096.0;
    let values = par::map_range(2 * 4096 + 1, |i| engine.inverse(-t_max + i as f64 * h, Parity::Even));
    let table = UniformTable { x0: -t_max, h, values };
    Ok(IsoRadon { x0: x0.to_vec(), profile: Arc::new(move |t| table.eval(t)) })
}

// ---------------------------------------------------------------------------
// ν_x basis
// ---------------------------------------------------------------------------

/// Representative of ρ_rad consistent with the window terms of the spectral engine.
#[derive(Clone)]
enum RhoRep {
    /// Closed form plus the polynomial offset to the engine's representative.
    Closed { form: ClosedForm, offset: Vec<f64> },
    Engine,
}

/// Shared machinery for ν_{x0}(t, ξ) = ρ(t − t0) − Σ_{n ≤ n0} ((−t0)^n/n!) (κ_rad ∗ ∂^nρ)(t),
/// t0 = ξᵀx0, tabulated on [−t_max, t_max].
#[derive(Clone)]
pub struct NuKernel {
    pub profile: OperatorProfile,
    pub n0: i32,
    pub t_max: f64,
    engine: Arc<SpectralInverse>,
    rho: RhoRep,
    window_terms: Vec<UniformTable>,
}

impl std::fmt::Debug for NuKernel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("NuKernel").field("profile", &self.profile.name).field("n0", &self.n0).field("t_max", &self.t_max).finish()
    }
}

fn poly_eval(c: &[f64], t: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, v| acc * t + v)
}

impl NuKernel {
    /// `t_max` bounds |t| and |t − ξᵀx0| for all evaluations; `h` is the table step.
    pub fn new(profile: &OperatorProfile, t_max: f64, h: f64) -> Result<Self> {
        if profile.gamma0 > profile.n0 as f64 + 1.0 + 1e-12 {
            return Err(Error::PoleOrder { gamma0: profile.gamma0, limit: (profile.n0 + 1) as f64 });
        }
        let p = profile.clone();
        let engine = Arc::new(SpectralInverse::new(Arc::new(move |w: f64| p.inv(w)), profile.n0, 2.0 * t_max)?);
        let rho = match profile.power_exponent() {
            Some(beta) => {
                let g = green_kernel(beta, 1)?;
                let form = ClosedForm::Green(g);
                let deg = profile.n0.max(0) as usize;
                let ts: Vec<f64> = (0..(deg + 4)).map(|i| 0.5 + 0.75 * i as f64).collect();
                let resid: Vec<f64> = ts.iter().map(|&t| engine.inverse(t, Parity::Even) - form.eval(t)).collect();
                let a = nalgebra::DMatrix::from_fn(ts.len(), deg + 1, |i, j| ts[i].powi(j as i32));
                let b = nalgebra::DVector::from_column_slice(&resid);
                let x = a.svd(true, true).solve(&b, 1e-14).map_err(|_| Error::Singular)?;
                RhoRep::Closed { form, offset: x.iter().cloned().collect() }
            }
            None => RhoRep::Engine,
        };
        let n = (2.0 * t_max / h).ceil() as usize;
        let h = 2.0 * t_max / n as f64;
        let mut window_terms = Vec::new();
        for order in 0..=profile.n0.max(-1) {
            let e = engine.clone();
            let values = par::map_range(n + 1, |i| e.window_term(order as usize, -t_max + i as f64 * h));
            window_terms.push(UniformTable { x0: -t_max, h, values });
        }
        let rho = match rho {
            RhoRep::Engine => {
                // Tabulate ρ on the doubled range covering t − t0.
                let m = 2 * n;
                let hh = 4.0 * t_max / m as f64;
                let e = engine.clone();
                let values = par::map_range(m + 1, |i| e.inverse(-2.0 * t_max + i as f64 * hh, Parity::Even));
                window_terms.push(UniformTable { x0: -2.0 * t_max, h: hh, values });
                RhoRep::Engine
            }
            other => other,
        };
        Ok(NuKernel { profile: profile.clone(), n0: profile.n0, t_max, engine, rho, window_terms })
    }

    /// ρ_rad representative matching the window terms.
    pub fn rho(&self, t: f64) -> f64 {
        match &self.rho {
            RhoRep::Closed { form, offset } => form.eval(t) + poly_eval(offset, t),
            RhoRep::Engine => self.window_terms.last().expect("rho table").eval(t),
        }
    }

    /// (κ_rad ∗ ∂^n ρ)(t).
    pub fn window_term(&self, n: usize, t: f64) -> f64 {
        self.window_terms[n].eval(t)
    }

    /// ν_{x0}(t, ξ) given t0 = ξᵀx0.
    pub fn eval_offset(&self, t: f64, t0: f64) -> f64 {
        let mut v = self.rho(t - t0);
        let mut c = 1.0;
        for n in 0..=self.n0.max(-1) {
            if n > 0 {
                c *= -t0 / n as f64;
            }
            v -= c * self.window_term(n as usize, t);
        }
        v
    }

    /// Direct (untabulated) spatial evaluation.
    pub fn eval_offset_direct(&self, t: f64, t0: f64) -> f64 {
        let mut v = self.engine.inverse(t - t0, Parity::Even);
        let mut c = 1.0;
        for n in 0..=self.n0.max(-1) {
            if n > 0 {
                c *= -t0 / n as f64;
            }
            v -= c * self.engine.window_term(n as usize, t);
        }
        v
    }

    /// Inverse transform of the spectral form ν̂_{x0}(·, ξ).
    pub fn eval_offset_spectral(&self, t: f64, t0: f64) -> f64 {
        self.engine.nu_spectral(t, t0)
    }

    pub fn nu_hat(&self, omega: f64, t0: f64) -> Complex64 {
        self.engine.nu_hat(omega, t0)
    }

    pub fn basis(&self, x0: &[f64]) -> NuBasis<'_> {
        NuBasis { kernel: self, x0: x0.to_vec() }
    }
}

/// ν_{x0} for one centre.
#[derive(Debug, Clone)]
pub struct NuBasis<'a> {
    pub kernel: &'a NuKernel,
    pub x0: Vec<f64>,
}

impl NuBasis<'_> {
    fn offset(&self, xi: &[f64]) -> f64 {
        xi.iter().zip(&self.x0).map(|(a, b)| a * b).sum()
    }

    pub fn spatial_eval(&self, t: f64, xi: &[f64]) -> f64 {
        self.kernel.eval_offset(t, self.offset(xi))
    }

    pub fn spectral_eval(&self, omega: f64, xi: &[f64]) -> Complex64 {
        self.kernel.nu_hat(omega, self.offset(xi))
    }

    pub fn spectral_inverse(&self, t: f64, xi: &[f64]) -> f64 {
        self.kernel.eval_offset_spectral(t, self.offset(xi))
    }

    pub fn sample(&self, spec: SinoSpec) -> Sinogram {
        Sinogram::from_fn(spec, Parity::Even, |t, xi| self.spatial_eval(t, &xi))
    }
}

/// Builds the ν basis at x0 with a table range suited to |x0|.
pub fn nu_basis(profile: &OperatorProfile, x0: &[f64]) -> Result<(NuKernel, Vec<f64>)> {
    let r: f64 = x0.iter().map(|v| v * v).sum::<f64>().sqrt();
    let kernel = NuKernel::new(profile, r + 40.0, 0.01)?;
    Ok((kernel, x0.to_vec()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::catalog_profile;

    #[test]
    fn kfilter_constant_d2() {
        assert!((filter_constant(2) - 1.0 / (4.0 * PI)).abs() < 1e-16);
    }

    #[test]
    fn constant_column_filtered_to_zero() {
        let spec = SinoSpec { n_t: 256, n_theta: 2, t_max: 4.0 };
        let g = Sinogram::from_fn(spec, Parity::Even, |_, _| 3.0);
        let f = kfilter_periodic(&g, 2);
        assert!(f.values.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn ramp_filter_of_gaussian() {
        let spec = SinoSpec { n_t: 1024, n_theta: 1, t_max: 16.0 };
        let g = Sinogram::from_fn(spec, Parity::Even, |t, _| (-0.5 * t * t).exp());
        let f = kfilter(&g, 2, FilterVariant::Symmetric);
        // At t = 0: (1/2π)∫|ω|√(2π)e^{−ω²/2}dω / (4π).
        let expect = (2.0 * PI).sqrt() * 2.0 / (2.0 * PI * 4.0 * PI);
        assert!((f.get(512, 0) - expect).abs() < 1e-3 * expect, "{} vs {expect}", f.get(512, 0));
    }

    #[test]
    fn antisymmetric_filter_is_scaled_derivative_in_2d() {
        // −j·sign(ω)|ω| = −jω, so the filter is −(1/4π) d/dt.
        let spec = SinoSpec { n_t: 1024, n_theta: 1, t_max: 16.0 };
        let g = Sinogram::from_fn(spec, Parity::Even, |t, _| (-0.5 * t * t).exp());
        let f = kfilter(&g, 2, FilterVariant::Antisymmetric);
        assert_eq!(f.parity, Parity::Odd);
        for i in (300..700).step_by(37) {
            let t = spec.t(i);
            let expect = t * (-0.5 * t * t).exp() / (4.0 * PI);
            assert!((f.get(i, 0) - expect).abs() < 1e-8, "{t}: {} vs {expect}", f.get(i, 0));
        }
    }

    #[test]
    fn hilbert_twice_is_minus_identity() {
        let spec = SinoSpec { n_t: 512, n_theta: 1, t_max: 8.0 };
        let g = Sinogram::from_fn(spec, Parity::Even, |t, _| (t * (-t * t).exp()).sin());
        let hh = hilbert(&hilbert(&g));
        let err = g.values.iter().zip(&hh.values).map(|(a, b)| (a + b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-12, "{err}");
    }

    #[test]
    fn odd_sinogram_backprojects_to_zero() {
        let spec = SinoSpec { n_t: 64, n_theta: 16, t_max: 2.0 };
        let g = Sinogram::from_fn(spec, Parity::Odd, |t, _| t);
        let img = backproject(&g, 16, 1.0);
        assert!(img.values.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn nu_at_origin_is_direction_free() {
        let p = catalog_profile("fractional_laplacian_alpha", &[2.0]).unwrap();
        let k = NuKernel::new(&p, 12.0, 0.01).unwrap();
        let b = k.basis(&[0.0, 0.0]);
        for &t in &[-3.0, 0.0, 1.7] {
            let a = b.spatial_eval(t, &[1.0, 0.0]);
            let c = b.spatial_eval(t, &[0.6, 0.8]);
            assert!((a - c).abs() < 1e-15);
        }
    }

    #[test]
    fn nu_spatial_matches_spectral() {
        let p = catalog_profile("fractional_laplacian_alpha", &[2.0]).unwrap();
        let k = NuKernel::new(&p, 16.0, 0.005).unwrap();
        for &t0 in &[0.0, 1.3, -4.0] {
            for &t in &[-7.0, -1.0, 0.2, 3.3, 9.0] {
                let a = k.eval_offset(t, t0);
                let b = k.eval_offset_spectral(t, t0);
                assert!((a - b).abs() < 1e-6, "t0={t0} t={t}: {a} vs {b}");
            }
        }
    }
}
