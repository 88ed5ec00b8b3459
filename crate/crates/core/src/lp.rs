//! L_p branch: duality maps, the forward map f = p0 + L_R†J_q{Σ a_m ν_{x_m}} on the
//! d = 2 Radon grid, and direct minimization over (a, p0).

use std::f64::consts::PI;
use std::sync::Arc;

use argmin::core::{CostFunction, Executor, Gradient, State};
use argmin::solver::linesearch::MoreThuenteLineSearch;
use argmin::solver::quasinewton::BFGS;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::activations::{synth_rbf_kernel, KernelMode};
use crate::catalog::OperatorProfile;
use crate::error::{Error, Result};
use crate::fftutil::fft1;
use crate::nullspace::{monomial_eval, poly_design, poly_dim, MultiIndex, Polynomial};
use crate::par;
use crate::radon::{Image, NuKernel, SinoSpec, Sinogram};

/// Conjugate exponent p/(p − 1).
pub fn conjugate(p: f64) -> f64 {
    if p == 1.0 {
        f64::INFINITY
    } else {
        p / (p - 1.0)
    }
}

fn lq_norm_weighted(v: &[f64], w: f64, q: f64) -> f64 {
    (par::sum(v, |x| x.abs().powf(q)) * w).powf(1.0 / q)
}

/// J_q{ν} = |ν|^{q−1} sign(ν) / ‖ν‖_{L_q}^{q−2} with the full-circle quadrature norm.
pub fn duality_map(nu: &Sinogram, q: f64) -> Result<Sinogram> {
    if !(q > 1.0 && q.is_finite()) {
        return Err(Error::Unsupported(format!("duality map exponent {q}")));
    }
    let norm = nu.lq_norm(q);
    if norm == 0.0 || !norm.is_finite() {
        return Err(Error::ZeroField);
    }
    let denom = norm.powf(q - 2.0);
    let values = nu.values.iter().map(|v| v.abs().powf(q - 1.0) * v.signum() / denom).collect();
    Ok(Sinogram { spec: nu.spec, parity: nu.parity, values })
}

/// Regularizer shape ψ applied to ‖s‖_{L_q}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Psi {
    /// ψ(t) = λt.
    #[default]
    Linear,
    /// ψ(t) = λt².
    Square,
}

impl std::str::FromStr for Psi {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(Psi::Linear),
            "square" => Ok(Psi::Square),
            _ => Err(Error::Unsupported(format!("psi '{s}'"))),
        }
    }
}

/// Discretization of the Radon domain and of the output image.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LpGrid {
    pub n_theta: usize,
    pub dt: f64,
    /// Extra t range beyond the largest |x_m|.
    pub margin: f64,
    pub image_n: usize,
    pub half_width: f64,
}

impl Default for LpGrid {
    fn default() -> Self {
        LpGrid { n_theta: 90, dt: 0.04, margin: 20.0, image_n: 64, half_width: 2.0 }
    }
}

impl LpGrid {
    /// Halves every step.
    pub fn refined(&self) -> Self {
        LpGrid { n_theta: 2 * self.n_theta, dt: 0.5 * self.dt, image_n: 2 * self.image_n, ..*self }
    }

    /// Grid with `n` as the image size and the other steps scaled with it.
    pub fn with_size(n: usize) -> Self {
        let base = LpGrid::default();
        let s = n as f64 / base.image_n as f64;
        LpGrid { n_theta: ((base.n_theta as f64 * s).round() as usize).max(8), dt: base.dt / s, image_n: n, ..base }
    }
}

/// Precomputed Radon-domain atoms ν_{x_m} for one data set.
pub struct LpSystem {
    pub profile: OperatorProfile,
    pub kernel: Arc<NuKernel>,
    pub spec: SinoSpec,
    pub grid: LpGrid,
    pub centers: Vec<Vec<f64>>,
    pub p: f64,
    pub q: f64,
    pub n0: i32,
    /// Quadrature weight of one sample (full circle).
    pub weight: f64,
    atoms: Vec<Vec<f64>>,
    design: Vec<Vec<f64>>,
    xis: Vec<[f64; 2]>,
}

impl std::fmt::Debug for LpSystem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LpSystem").field("spec", &self.spec).field("p", &self.p).field("m", &self.centers.len()).finish()
    }
}

impl LpSystem {
    pub fn new(profile: &OperatorProfile, centers: &[Vec<f64>], p: f64, grid: LpGrid) -> Result<Self> {
        if !(p > 1.0 && p <= 2.0) {
            return Err(Error::Unsupported(format!("p = {p}; the L_p branch needs p in (1, 2]")));
        }
        for c in centers {
            if c.len() != 2 {
                return Err(Error::DimensionMismatch { expected: 2, got: c.len() });
            }
        }
        let rmax = centers.iter().map(|c| c[0].hypot(c[1])).fold(0.0, f64::max).max(grid.half_width * 2f64.sqrt());
        let t_max = rmax + grid.margin;
        let n_t = ((2.0 * t_max / grid.dt).ceil() as usize).next_power_of_two();
        let spec = SinoSpec { n_t, n_theta: grid.n_theta, t_max: 0.5 * n_t as f64 * grid.dt };
        let kernel = Arc::new(NuKernel::new(profile, spec.t_max + grid.dt, 0.01)?);
        let xis: Vec<[f64; 2]> = (0..spec.n_theta).map(|k| spec.xi(k)).collect();
        let mut sys = LpSystem {
            profile: profile.clone(),
            kernel,
            spec,
            grid,
            centers: centers.to_vec(),
            p,
            q: conjugate(p),
            n0: profile.n0,
            weight: spec.dt() * 2.0 * PI / spec.n_theta as f64,
            atoms: Vec::new(),
            design: poly_design(centers, 2, profile.n0),
            xis,
        };
        sys.atoms = centers.iter().map(|c| sys.atom(c)).collect();
        Ok(sys)
    }

    /// ν_x sampled on the grid, angle-major.
    pub fn atom(&self, x: &[f64]) -> Vec<f64> {
        let n_t = self.spec.n_t;
        let cols = par::map_range(self.spec.n_theta, |k| {
            let xi = self.xis[k];
            let t0 = xi[0] * x[0] + xi[1] * x[1];
            (0..n_t).map(|i| self.kernel.eval_offset(self.spec.t(i), t0)).collect::<Vec<_>>()
        });
        cols.into_iter().flatten().collect()
    }

    pub fn n_poly(&self) -> usize {
        poly_dim(2, self.n0)
    }

    /// s = Σ a_m ν_{x_m}.
    pub fn field(&self, a: &[f64]) -> Vec<f64> {
        let mut s = vec![0.0; self.atoms[0].len()];
        for (am, atom) in a.iter().zip(&self.atoms) {
            if *am != 0.0 {
                s.iter_mut().zip(atom).for_each(|(si, v)| *si += am * v);
            }
        }
        s
    }

    /// J_q{s} and ‖s‖_{L_q}; a zero field maps to zero.
    pub fn dual_field(&self, s: &[f64]) -> (Vec<f64>, f64) {
        let norm = lq_norm_weighted(s, self.weight, self.q);
        if norm == 0.0 {
            return (vec![0.0; s.len()], 0.0);
        }
        let denom = norm.powf(self.q - 2.0);
        (s.iter().map(|v| v.abs().powf(self.q - 1.0) * v.signum() / denom).collect(), norm)
    }

    fn dot(&self, u: &[f64], v: &[f64]) -> f64 {
        u.iter().zip(v).map(|(a, b)| a * b).sum::<f64>() * self.weight
    }

    /// Data fit Σ (f(x_m) − y_m)² + ψ(‖s‖_q) and its gradient in θ = (a, b).
    pub fn objective(&self, theta: &[f64], y: &[f64], lambda: f64, psi: Psi) -> (f64, Vec<f64>) {
        let m = self.centers.len();
        let (a, b) = theta.split_at(m);
        let s = self.field(a);
        let (j, norm) = self.dual_field(&s);
        let resid: Vec<f64> = (0..m)
            .map(|i| {
                let p0: f64 = self.design[i].iter().zip(b).map(|(r, c)| r * c).sum();
                p0 + self.dot(&self.atoms[i], &j) - y[i]
            })
            .collect();
        let loss: f64 = resid.iter().map(|r| r * r).sum();
        let (reg, dreg) = match psi {
            Psi::Linear => (lambda * norm, lambda),
            Psi::Square => (lambda * norm * norm, 2.0 * lambda * norm),
        };
        let mut grad = vec![0.0; theta.len()];
        if norm > 0.0 {
            // v = Σ 2 r_m ν_m; e = (∂J/∂s)ᵀ (w ⊙ v), with the weight folded into the final dot.
            let mut v = vec![0.0; s.len()];
            for (r, atom) in resid.iter().zip(&self.atoms) {
                v.iter_mut().zip(atom).for_each(|(vi, x)| *vi += 2.0 * r * x);
            }
            let q = self.q;
            let u: Vec<f64> = s.iter().map(|x| x.abs().powf(q - 1.0) * x.signum()).collect();
            let vu = self.dot(&v, &u);
            let c1 = (q - 1.0) * norm.powf(2.0 - q);
            let c2 = (q - 2.0) * vu * norm.powf(2.0 - 2.0 * q);
            let c3 = dreg * norm.powf(1.0 - q);
            let e: Vec<f64> = (0..s.len())
                .map(|i| {
                    let abs_pow = if q == 2.0 { 1.0 } else { s[i].abs().powf(q - 2.0) };
                    c1 * v[i] * abs_pow - c2 * u[i] + c3 * u[i]
                })
                .collect();
            for (g, atom) in grad.iter_mut().zip(&self.atoms) {
                *g = self.dot(&e, atom);
            }
        }
        for (k, g) in grad[m..].iter_mut().enumerate() {
            *g = resid.iter().zip(&self.design).map(|(r, row)| 2.0 * r * row[k]).sum();
        }
        (loss + reg, grad)
    }

    /// f(x) = p0(x) + ⟨ν_x, J⟩.
    pub fn evaluate(&self, x: &[f64], poly: &Polynomial, j: &[f64]) -> f64 {
        poly.eval(x) + self.dot(&self.atom(x), j)
    }

    /// Field p0 + L_R†{u} on the image grid: R*(ρ_rad ∗ u) minus the
    /// polynomial Σ_n ∫ ((−ξᵀx)^n/n!) ⟨κ_rad ∗ ∂^nρ_rad, u(·, ξ)⟩ dξ.
    pub fn forward_field(&self, u: &[f64], poly: &Polynomial) -> Image {
        let n_t = self.spec.n_t;
        let dt = self.spec.dt();
        let l = 2 * n_t;
        let mut kern = vec![Complex64::new(0.0, 0.0); l];
        for k in 0..n_t {
            let t = k as f64 * dt;
            kern[k] = Complex64::new(self.kernel.rho(t) * dt, 0.0);
            if k > 0 {
                kern[l - k] = Complex64::new(self.kernel.rho(-t) * dt, 0.0);
            }
        }
        fft1(&mut kern, false);
        let orders = (self.n0 + 1).max(0) as usize;
        let window: Vec<Vec<f64>> =
            (0..orders).map(|n| (0..n_t).map(|i| self.kernel.window_term(n, self.spec.t(i))).collect()).collect();
        let cols = par::map_range(self.spec.n_theta, |k| {
            let col = &u[k * n_t..(k + 1) * n_t];
            let mut buf: Vec<Complex64> = (0..l).map(|i| Complex64::new(if i < n_t { col[i] } else { 0.0 }, 0.0)).collect();
            fft1(&mut buf, false);
            buf.iter_mut().zip(&kern).for_each(|(b, w)| *b *= w);
            fft1(&mut buf, true);
            let conv: Vec<f64> = (0..n_t).map(|i| buf[i].re / l as f64).collect();
            let moments: Vec<f64> = window.iter().map(|c| c.iter().zip(col).map(|(a, b)| a * b).sum::<f64>() * dt).collect();
            (conv, moments)
        });
        let dtheta = PI / self.spec.n_theta as f64;
        let spec = self.spec;
        Image::from_fn(self.grid.image_n, self.grid.half_width, |x, y| {
            let mut acc = 0.0;
            for (k, (conv, moments)) in cols.iter().enumerate() {
                let xi = self.xis[k];
                let t = xi[0] * x + xi[1] * y;
                let uu = (t + spec.t_max) / dt;
                let i = (uu.floor() as usize).min(n_t - 2);
                let s = uu - i as f64;
                let mut v = (1.0 - s) * conv[i] + s * conv[i + 1];
                let mut c = 1.0;
                for (n, mo) in moments.iter().enumerate() {
                    if n > 0 {
                        c *= -t / n as f64;
                    }
                    v -= c * mo;
                }
                acc += v;
            }
            2.0 * dtheta * acc + poly.eval(&[x, y])
        })
    }
}

/// Fitted L_p model.
#[derive(Debug, Clone)]
pub struct LpModel {
    pub centers: Vec<Vec<f64>>,
    pub coeffs: Vec<f64>,
    pub poly: Polynomial,
    pub p: f64,
    pub q: f64,
    pub lambda: f64,
    pub psi: Psi,
    pub grid: LpGrid,
    pub iterations: u64,
    pub objective: f64,
    pub system: Arc<LpSystem>,
    dual: Arc<Vec<f64>>,
}

impl LpModel {
    pub fn from_parts(system: Arc<LpSystem>, coeffs: Vec<f64>, poly: Polynomial, lambda: f64, psi: Psi) -> Self {
        let s = system.field(&coeffs);
        let (j, _) = system.dual_field(&s);
        LpModel {
            centers: system.centers.clone(),
            coeffs,
            poly,
            p: system.p,
            q: system.q,
            lambda,
            psi,
            grid: system.grid,
            iterations: 0,
            objective: f64::NAN,
            dual: Arc::new(j),
            system,
        }
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        if x.len() != 2 {
            return Err(Error::DimensionMismatch { expected: 2, got: x.len() });
        }
        Ok(self.system.evaluate(x, &self.poly, &self.dual))
    }

    pub fn predict_batch(&self, xs: &[Vec<f64>]) -> Result<Vec<f64>> {
        xs.iter().map(|x| self.predict(x)).collect()
    }

    /// ‖Σ a_m ν_{x_m}‖_{L_q}.
    pub fn reg_norm(&self) -> f64 {
        lq_norm_weighted(&self.system.field(&self.coeffs), self.system.weight, self.q)
    }

    /// ‖J_q{s}‖_{L_p}, equal to `reg_norm` by the isometry.
    pub fn dual_norm(&self) -> f64 {
        lq_norm_weighted(&self.dual, self.system.weight, self.p)
    }

    pub fn forward_solution(&self) -> Image {
        self.system.forward_field(&self.dual, &self.poly)
    }
}

struct LpProblem<'a> {
    system: &'a LpSystem,
    y: &'a [f64],
    lambda: f64,
    psi: Psi,
}

impl CostFunction for LpProblem<'_> {
    type Param = Vec<f64>;
    type Output = f64;
    fn cost(&self, theta: &Vec<f64>) -> std::result::Result<f64, argmin::core::Error> {
        Ok(self.system.objective(theta, self.y, self.lambda, self.psi).0)
    }
}

impl Gradient for LpProblem<'_> {
    type Param = Vec<f64>;
    type Gradient = Vec<f64>;
    fn gradient(&self, theta: &Vec<f64>) -> std::result::Result<Vec<f64>, argmin::core::Error> {
        Ok(self.system.objective(theta, self.y, self.lambda, self.psi).1)
    }
}

/// Minimizes Σ (y_m − f(x_m))² + ψ(‖Σ a_m ν_{x_m}‖_{L_q}) over (a, p0) by BFGS.
pub fn fit_lp(
    xs: &[Vec<f64>],
    y: &[f64],
    profile: &OperatorProfile,
    p: f64,
    lambda: f64,
    psi: Psi,
    grid: LpGrid,
) -> Result<LpModel> {
    if xs.len() != y.len() {
        return Err(Error::DimensionMismatch { expected: xs.len(), got: y.len() });
    }
    if !(lambda >= 0.0) {
        return Err(Error::InvalidParameter { profile: profile.name.clone(), msg: format!("lambda {lambda} must be ≥ 0") });
    }
    let dim = poly_dim(2, profile.n0);
    if xs.len() < dim {
        return Err(Error::TooFewPoints { m: xs.len(), dim });
    }
    let system = Arc::new(LpSystem::new(profile, xs, p, grid)?);
    let m = xs.len();
    // Start from the least-squares polynomial and a small multiple of its residual.
    let pm = DMatrix::from_fn(m, dim, |i, j| system.design[i][j]);
    let yv = DVector::from_column_slice(y);
    let b0 = if dim > 0 {
        pm.clone().svd(true, true).solve(&yv, 1e-12).map_err(|_| Error::Singular)?
    } else {
        DVector::zeros(0)
    };
    let r0 = &yv - &pm * &b0;
    let mut theta: Vec<f64> = r0.iter().map(|r| 1e-2 * r + 1e-6).collect();
    theta.extend(b0.iter());

    let problem = LpProblem { system: &system, y, lambda, psi };
    let n = theta.len();
    let h0: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| if i == j { 1e-2 } else { 0.0 }).collect()).collect();
    let solver = BFGS::new(MoreThuenteLineSearch::new())
        .with_tolerance_grad(1e-10)
        .map_err(|e| Error::Unsupported(e.to_string()))?
        .with_tolerance_cost(1e-15)
        .map_err(|e| Error::Unsupported(e.to_string()))?;
    let res = Executor::new(problem, solver)
        .configure(|state| state.param(theta.clone()).inv_hessian(h0).max_iters(400))
        .run();
    let (best, iters, cost) = match res {
        Ok(r) => {
            let st = r.state();
            (st.get_best_param().cloned().unwrap_or(theta), st.get_iter(), st.get_best_cost())
        }
        Err(e) => {
            log::warn!("optimizer stopped: {e}");
            let c = system.objective(&theta, y, lambda, psi).0;
            (theta, 0, c)
        }
    };
    let (a, b) = best.split_at(m);
    let poly = Polynomial::from_coeffs(2, profile.n0, b.to_vec())?;
    let mut model = LpModel::from_parts(system.clone(), a.to_vec(), poly, lambda, psi);
    model.iterations = iters;
    model.objective = cost;
    let (rn, dn) = (model.reg_norm(), model.dual_norm());
    if rn > 0.0 && ((rn - dn) / rn).abs() > 1e-8 {
        log::warn!("isometry check failed: ‖s‖_q = {rn:e}, ‖J s‖_p = {dn:e}");
    }
    Ok(model)
}

/// p = 2 forward map against Σ a_m ρ_iso(· − x_m), both taken modulo P_{n0}.
#[derive(Debug, Clone, Serialize)]
pub struct P2Report {
    pub rms_relative: f64,
    pub orthogonality_residual: f64,
    /// False when Σ a_m q(x_m) ≠ 0 for some q ∈ P_{n0}; a mismatch is then expected.
    pub orthogonal: bool,
    pub image_n: usize,
}

/// Removes the least-squares polynomial of degree ≤ n0 from a grid field.
fn strip_polynomial(img: &Image, values: &[f64], n0: i32) -> Vec<f64> {
    if n0 < 0 {
        return values.to_vec();
    }
    let basis = MultiIndex::all(2, n0);
    let n = img.n;
    let pts: Vec<[f64; 2]> = (0..n * n).map(|i| [img.coord(i / n), img.coord(i % n)]).collect();
    let a = DMatrix::from_fn(pts.len(), basis.len(), |i, k| monomial_eval(&basis[k], &pts[i]));
    let b = DVector::from_column_slice(values);
    let c = a.clone().svd(true, true).solve(&b, 1e-12).expect("least squares");
    (b - a * c).iter().cloned().collect()
}

pub fn p2_consistency(a: &[f64], xs: &[Vec<f64>], profile: &OperatorProfile, grid: LpGrid) -> Result<P2Report> {
    let system = Arc::new(LpSystem::new(profile, xs, 2.0, grid)?);
    let n0 = profile.n0;
    let design = poly_design(xs, 2, n0);
    let orth = (0..poly_dim(2, n0))
        .map(|k| design.iter().zip(a).map(|(row, am)| row[k] * am).sum::<f64>().abs())
        .fold(0.0, f64::max);
    let scale = a.iter().map(|v| v.abs()).sum::<f64>().max(1e-300);
    let model = LpModel::from_parts(system, a.to_vec(), Polynomial::zero(2, n0), 0.0, Psi::Square);
    let field = model.forward_solution();
    let iso = synth_rbf_kernel(profile, 2, KernelMode::Radon)?;
    let n = field.n;
    let oracle: Vec<f64> = (0..n * n)
        .map(|i| {
            let x = [field.coord(i / n), field.coord(i % n)];
            xs.iter().zip(a).map(|(c, am)| am * iso.eval_diff(&x, c)).sum()
        })
        .collect();
    let diff: Vec<f64> = field.values.iter().zip(&oracle).map(|(f, o)| f - o).collect();
    let d = strip_polynomial(&field, &diff, n0);
    let o = strip_polynomial(&field, &oracle, n0);
    let num: f64 = d.iter().map(|v| v * v).sum();
    let den: f64 = o.iter().map(|v| v * v).sum();
    Ok(P2Report {
        rms_relative: (num / den).sqrt(),
        orthogonality_residual: orth / scale,
        orthogonal: orth <= 1e-8 * scale,
        image_n: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn random_sino(seed: u64) -> Sinogram {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let spec = SinoSpec { n_t: 64, n_theta: 12, t_max: 3.0 };
        let mut g = Sinogram::zeros(spec, crate::spectral::Parity::Even);
        g.values.iter_mut().for_each(|v| *v = rng.gen_range(-1.0..1.0));
        g
    }

    #[test]
    fn q2_is_identity() {
        let g = random_sino(1);
        let j = duality_map(&g, 2.0).unwrap();
        assert_eq!(g.values, j.values);
    }

    #[test]
    fn zero_field_rejected() {
        let g = Sinogram::zeros(SinoSpec { n_t: 8, n_theta: 2, t_max: 1.0 }, crate::spectral::Parity::Even);
        assert!(matches!(duality_map(&g, 3.0), Err(Error::ZeroField)));
    }

    #[test]
    fn positively_homogeneous() {
        let g = random_sino(2);
        let mut g3 = g.clone();
        g3.scale(3.0);
        let (a, b) = (duality_map(&g, 3.0).unwrap(), duality_map(&g3, 3.0).unwrap());
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!((3.0 * x - y).abs() < 1e-12);
        }
    }
}
