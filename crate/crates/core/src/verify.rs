//! Verification suites: each check reports a metric against a tolerance.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::activations::{closed_form_for, green_kernel, synth_numeric, synth_rbf_kernel, IsotropicKernel, KernelMode, TGrid};
use crate::lp::{duality_map, fit_lp, p2_consistency, LpGrid, P2Report, Psi};
use crate::rbf::{constraint_basis, fit_rbf, gram_matrix};
use crate::catalog::{catalog_profile, OperatorProfile};
use crate::par;
use crate::error::Result;
use crate::radon::{backproject, fourier_slice, kfilter, radon_forward, FilterVariant, Image, NuKernel, SinoSpec, Sinogram};
use crate::spectral::{remainder_r, Parity};

/// One verification check.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub metric: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    /// Passes when metric < tolerance.
    pub fn below(name: impl Into<String>, metric: f64, tolerance: f64, detail: impl Into<String>) -> Self {
        Check { name: name.into(), metric, tolerance, passed: metric < tolerance, detail: detail.into() }
    }

    pub fn flag(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Check { name: name.into(), metric: if passed { 0.0 } else { 1.0 }, tolerance: 0.5, passed, detail: detail.into() }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub checks: Vec<Check>,
    pub seconds: f64,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("suite {} ({:.2} s)\n", self.suite, self.seconds);
        for c in &self.checks {
            out.push_str(&format!(
                "  [{}] {}: metric={:.3e} tol={:.1e} {}\n",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                c.metric,
                c.tolerance,
                c.detail
            ));
        }
        out.push_str(&format!("  result: {}\n", if self.passed() { "PASS" } else { "FAIL" }));
        out
    }
}

fn timed(suite: &str, f: impl FnOnce() -> Result<Vec<Check>>) -> Result<SuiteReport> {
    let start = Instant::now();
    let checks = f()?;
    Ok(SuiteReport { suite: suite.to_string(), checks, seconds: start.elapsed().as_secs_f64() })
}

/// Least-squares fit target ≈ s·basis + Σ c_i t^i (i ≤ degree); returns (max residual, s).
pub fn scale_poly_fit(ts: &[f64], target: &[f64], basis: &[f64], degree: i32) -> (f64, f64) {
    let cols = 1 + (degree + 1).max(0) as usize;
    // Scale columns by powers of the half-width for conditioning.
    let w = ts.iter().fold(1.0f64, |m, t| m.max(t.abs()));
    let a = DMatrix::from_fn(ts.len(), cols, |i, j| if j == 0 { basis[i] } else { (ts[i] / w).powi(j as i32 - 1) });
    let b = DVector::from_column_slice(target);
    let svd = a.clone().svd(true, true);
    let x = svd.solve(&b, 1e-14).expect("svd solve");
    let r = &b - &a * &x;
    (r.amax(), x[0])
}

/// Row of the closed-form comparison.
#[derive(Debug, Clone, Serialize)]
pub struct ClosedFormRow {
    pub profile: String,
    pub params: Vec<f64>,
    pub parity: Parity,
    pub formula: String,
    pub max_error: f64,
    pub scale: f64,
}

/// Numerical synthesis vs every printed closed form on [−5, 5].
pub fn closed_form_rows() -> Result<Vec<ClosedFormRow>> {
    let cases: Vec<(&str, Vec<f64>, Parity)> = vec![
        ("exponential", vec![], Parity::Even),
        ("tanh_sigmoid", vec![], Parity::Odd),
        ("arctan_sigmoid", vec![], Parity::Odd),
        ("ridge_spline_m", vec![2.0], Parity::Even),
        ("ridge_spline_m", vec![2.0], Parity::Odd),
        ("ridge_spline_m", vec![3.0], Parity::Even),
        ("ridge_spline_m", vec![3.0], Parity::Odd),
        ("ridge_spline_m", vec![4.0], Parity::Even),
        ("ridge_spline_m", vec![4.0], Parity::Odd),
        ("fractional_spline_alpha", vec![0.5], Parity::Even),
        ("fractional_spline_alpha", vec![0.5], Parity::Odd),
        ("fractional_spline_alpha", vec![1.5], Parity::Even),
        ("fractional_spline_alpha", vec![1.5], Parity::Odd),
    ];
    let grid = TGrid { t_max: 5.0, samples: 1000 };
    let ts = grid.points();
    let mut rows = Vec::new();
    for (name, params, parity) in cases {
        let profile = catalog_profile(name, &params)?;
        let cf = closed_form_for(&profile, parity).expect("catalog closed form");
        let act = synth_numeric(&profile, parity, &grid)?;
        let num: Vec<f64> = ts.iter().map(|&t| act.eval(t)).collect();
        let printed: Vec<f64> = ts.iter().map(|&t| cf.eval(t)).collect();
        let (max_error, scale) = scale_poly_fit(&ts, &printed, &num, profile.n0);
        rows.push(ClosedFormRow { profile: name.into(), params, parity, formula: cf.tag(), max_error, scale });
    }
    Ok(rows)
}

pub fn suite_closed_forms() -> Result<SuiteReport> {
    timed("closed-forms", || {
        Ok(closed_form_rows()?
            .into_iter()
            .map(|r| {
                Check::below(
                    format!("{}{:?} {:?}", r.profile, r.params, r.parity),
                    r.max_error,
                    1e-3,
                    format!("{} (fitted scale {:.6})", r.formula, r.scale),
                )
            })
            .collect())
    })
}

/// Statistics of the r_N checks.
#[derive(Debug, Clone, Serialize)]
pub struct RemainderStats {
    pub violations: usize,
    pub samples: usize,
    pub max_small_omega_error: f64,
    pub large_omega_modulus: f64,
}

pub fn remainder_stats(samples: usize) -> RemainderStats {
    let mut violations = 0;
    for n in 1..=10u32 {
        for i in 0..samples {
            let w = -100.0 + 200.0 * i as f64 / (samples - 1) as f64;
            let r = remainder_r(n, w).norm();
            if r > (w.abs() / 2.0).min(1.27) * (1.0 + 1e-12) + 1e-300 {
                violations += 1;
            }
        }
    }
    let mut max_small: f64 = 0.0;
    for n in 1..=10u32 {
        let w = 1e-6;
        let r = remainder_r(n, w) * ((n + 1) as f64 / w);
        max_small = max_small.max((r + num_complex::Complex64::i()).norm());
    }
    RemainderStats {
        violations,
        samples: samples * 10,
        max_small_omega_error: max_small,
        large_omega_modulus: remainder_r(5, 1e4).norm(),
    }
}

pub fn suite_bounds() -> Result<SuiteReport> {
    timed("bounds", || {
        let s = remainder_stats(100_000);
        Ok(vec![
            Check::below(
                "r_N bound min(|w|/2, 1.27), N=1..10",
                s.violations as f64,
                0.5,
                format!("{} violations over {} samples", s.violations, s.samples),
            ),
            Check::below("r_N small-w limit -jw/(N+1)", s.max_small_omega_error, 1e-4, "at w = 1e-6"),
            Check::below(
                "|r_5(1e4)| near 1",
                (s.large_omega_modulus - 1.0).abs(),
                0.01,
                format!("|r_5(1e4)| = {:.8}", s.large_omega_modulus),
            ),
        ])
    })
}

/// Gaussian phantom of width σ = 0.15 centred at (0.12, −0.08).
pub fn gaussian_phantom(x: f64, y: f64) -> f64 {
    let s2 = 0.15f64 * 0.15;
    let (dx, dy) = (x - 0.12, y + 0.08);
    (-(dx * dx + dy * dy) / (2.0 * s2)).exp() / (2.0 * std::f64::consts::PI * s2)
}

/// Relative L2 error of R*KR on the phantom with an n×n image and n_θ angles.
pub fn fbp_roundtrip_error(n: usize, n_theta: usize) -> f64 {
    let img = Image::from_fn(n, 1.0, gaussian_phantom);
    let spec = SinoSpec { n_t: 4 * n, n_theta, t_max: 1.5 };
    let sino = radon_forward(&img, spec);
    let filtered = kfilter(&sino, 2, FilterVariant::Symmetric);
    let back = backproject(&filtered, n, 1.0);
    let diff: f64 = img.values.iter().zip(&back.values).map(|(a, b)| (a - b).powi(2)).sum();
    let norm: f64 = img.values.iter().map(|a| a * a).sum();
    (diff / norm).sqrt()
}

pub fn suite_radon(quick: bool) -> Result<SuiteReport> {
    timed("radon", || {
        let (n, m) = if quick { (128, 180) } else { (256, 360) };
        let coarse = fbp_roundtrip_error(n, m);
        let fine = fbp_roundtrip_error(2 * n, 2 * m);
        Ok(vec![
            Check::below(format!("R*KR identity {n}x{n}, {m} angles"), coarse, 0.02, "relative L2 error"),
            Check::flag(
                format!("error decreases at {}x{}, {} angles", 2 * n, 2 * n, 2 * m),
                fine < coarse,
                format!("{coarse:.3e} -> {fine:.3e}"),
            ),
        ])
    })
}

/// Worst relative Fourier-slice error over `angles` directions.
pub fn slice_error(n: usize, angles: usize) -> f64 {
    let img = Image::from_fn(n, 1.0, gaussian_phantom);
    let spec = SinoSpec { n_t: 4 * n, n_theta: angles, t_max: 1.5 };
    let sino = radon_forward(&img, spec);
    let omegas: Vec<f64> = (0..48).map(|i| i as f64 * 0.75).collect();
    (0..angles).map(|k| fourier_slice(&img, &sino, k, &omegas).relative_error).fold(0.0, f64::max)
}

pub fn suite_slice() -> Result<SuiteReport> {
    timed("slice", || {
        let err = slice_error(256, 8);
        Ok(vec![Check::below("Fourier slice, 8 angles, 256x256", err, 1e-3, "max relative spectrum error")])
    })
}

/// Spatial vs spectral ν and the boundedness sweep for one profile.
#[derive(Debug, Clone, Serialize)]
pub struct NuStats {
    pub max_form_difference: f64,
    /// (‖x0‖, max over ξ of (1+|ξᵀx0|)^{−n0}‖ν(·,ξ)‖_∞).
    pub sweep: Vec<(f64, f64)>,
    pub ratio: f64,
}

pub fn nu_stats(profile: &OperatorProfile) -> Result<NuStats> {
    let radii = [0.0, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0];
    let kernel = NuKernel::new(profile, 140.0, 0.01)?;
    let dirs: Vec<[f64; 2]> = (0..32)
        .map(|k| {
            let th = std::f64::consts::PI * k as f64 / 32.0;
            [th.cos(), th.sin()]
        })
        .collect();
    let u = [0.3f64.cos(), 0.3f64.sin()];

    let mut worst: f64 = 0.0;
    for &r in &[0.0, 1.0, 2.5, 5.0] {
        let x0 = [r * u[0], r * u[1]];
        let b = kernel.basis(&x0);
        let diffs = par::map_range(8 * 201, |i| {
            let xi = dirs[4 * (i / 201)];
            let t = -10.0 + 0.1 * (i % 201) as f64;
            (b.spatial_eval(t, &xi) - b.spectral_inverse(t, &xi)).abs()
        });
        worst = diffs.into_iter().fold(worst, f64::max);
    }

    let n0 = profile.n0.max(0);
    let mut sweep = Vec::new();
    for &r in &radii {
        let x0 = [r * u[0], r * u[1]];
        let b = kernel.basis(&x0);
        let per_dir = par::map(&dirs, |xi| {
            let t0 = xi[0] * x0[0] + xi[1] * x0[1];
            let (lo, hi) = (t0.min(0.0) - 30.0, t0.max(0.0) + 30.0);
            let steps = ((hi - lo) / 0.02) as usize;
            let sup = (0..=steps).map(|i| b.spatial_eval(lo + 0.02 * i as f64, xi).abs()).fold(0.0, f64::max);
            sup / (1.0 + t0.abs()).powi(n0)
        });
        sweep.push((r, per_dir.into_iter().fold(0.0, f64::max)));
    }
    let max = sweep.iter().map(|s| s.1).fold(0.0, f64::max);
    let min = sweep.iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
    Ok(NuStats { max_form_difference: worst, sweep, ratio: max / min })
}

pub fn suite_nu() -> Result<SuiteReport> {
    timed("nu", || {
        let p = catalog_profile("fractional_laplacian_alpha", &[2.0])?;
        let s = nu_stats(&p)?;
        let sweep: Vec<String> = s.sweep.iter().map(|(r, v)| format!("{r}:{v:.4}")).collect();
        Ok(vec![
            Check::below("spatial vs spectral nu, |x0| <= 5, t in [-10, 10]", s.max_form_difference, 1e-3, "max abs difference"),
            Check::below("boundedness ratio over |x0| in [0, 100]", s.ratio, 2.0, sweep.join(" ")),
        ])
    })
}

/// Radon-domain norm ∫_{S¹}∫ |Σ_m a_m q(t − ξᵀx_m)|² dt dξ by the midpoint rule on
/// |t| ≤ t_max with n_t samples and n_θ angles on [0, π) (the field is even).
pub fn radon_ridge_norm2(q: &(dyn Fn(f64) -> f64 + Sync), centers: &[[f64; 2]], a: &[f64], t_max: f64, n_t: usize, n_theta: usize) -> f64 {
    let dt = 2.0 * t_max / n_t as f64;
    let per_angle = par::map_range(n_theta, |k| {
        let th = std::f64::consts::PI * (k as f64 + 0.5) / n_theta as f64;
        let xi = [th.cos(), th.sin()];
        let offs: Vec<f64> = centers.iter().map(|c| xi[0] * c[0] + xi[1] * c[1]).collect();
        let mut acc = 0.0;
        for i in 0..n_t {
            let t = -t_max + (i as f64 + 0.5) * dt;
            let v: f64 = offs.iter().zip(a).map(|(o, am)| am * q(t - o)).sum();
            acc += v * v;
        }
        acc * dt
    });
    per_angle.iter().sum::<f64>() * 2.0 * std::f64::consts::PI / n_theta as f64
}

/// Gram entries from Radon-domain norms by polarization, against ρ_iso(x_m − x_n).
#[derive(Debug, Clone, Serialize)]
pub struct GramCheck {
    pub grid: Vec<Vec<f64>>,
    pub kernel: Vec<Vec<f64>>,
    pub max_relative_error: f64,
}

/// (−Δ)^{1/2}, d = 2: L_R ρ_iso(· − x_m) = q(t − ξᵀx_m) with q = F⁻¹{1/|ω|} = −log|t|/π,
/// and ρ_iso(x) = 4π·F⁻¹{‖ω‖⁻³}. Off-diagonal entries follow from
/// G_mn = ½(G_mm + G_nn − ‖L_R(ρ_m − ρ_n)‖²) with the diagonal ρ_iso(0).
pub fn gram_radon_check(centers: &[[f64; 2]]) -> Result<GramCheck> {
    let q_kernel = green_kernel(1.0, 1)?;
    let q = move |t: f64| q_kernel.eval(t);
    let iso = IsotropicKernel::from_green(green_kernel(3.0, 2)?, 4.0 * std::f64::consts::PI, KernelMode::Radon, "sqrt_laplacian");
    let m = centers.len();
    let diag = iso.eval(0.0);
    let mut grid = vec![vec![diag; m]; m];
    let mut kern = vec![vec![diag; m]; m];
    let mut worst: f64 = 0.0;
    for i in 0..m {
        for j in 0..i {
            let n2 = radon_ridge_norm2(&q, &[centers[i], centers[j]], &[1.0, -1.0], 100.0, 1 << 17, 180);
            let g = diag - 0.5 * n2;
            let k = iso.eval_diff(&centers[i], &centers[j]);
            grid[i][j] = g;
            grid[j][i] = g;
            kern[i][j] = k;
            kern[j][i] = k;
            worst = worst.max((g - k).abs() / k.abs());
        }
    }
    Ok(GramCheck { grid, kernel: kern, max_relative_error: worst })
}

/// aᵀGa for the Laplacian radon kernel in d = 2 against the grid norm of
/// L_R f = Σ a_m ρ_rad(t − ξᵀx_m), ρ_rad = −|t|/2, for a with Pᵀa = 0 (P affine).
pub fn reg_cost_radon_check(centers: &[[f64; 2]], seed: u64) -> Result<(f64, f64)> {
    use rand::{Rng, SeedableRng};
    let profile = catalog_profile("fractional_laplacian_alpha", &[2.0])?;
    let kernel = synth_rbf_kernel(&profile, 2, KernelMode::Radon)?;
    let pts: Vec<Vec<f64>> = centers.iter().map(|c| c.to_vec()).collect();
    let p = DMatrix::from_fn(pts.len(), 3, |i, j| if j == 0 { 1.0 } else { pts[i][j - 1] });
    let z = constraint_basis(&p, 1)?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let c = DVector::from_fn(z.ncols(), |_, _| rng.gen_range(-1.0..1.0));
    let a = &z * c;
    let g = gram_matrix(&pts, &kernel)?;
    let cost = a.dot(&(&g * &a));
    let a: Vec<f64> = a.iter().cloned().collect();
    let q = |t: f64| -0.5 * t.abs();
    let n2 = radon_ridge_norm2(&q, centers, &a, 4.0, 1 << 14, 180);
    Ok((cost, n2))
}

/// Worst errors of the duality maps for one (p, q) pair.
#[derive(Debug, Clone, Serialize)]
pub struct DualityStats {
    pub p: f64,
    pub q: f64,
    /// max |‖J_q ν‖_p − ‖ν‖_q| / ‖ν‖_q
    pub isometry: f64,
    /// max ‖J_p J_q ν − ν‖_∞ / ‖ν‖_∞
    pub inverse: f64,
}

/// Duality-map identities on `fields` random sinograms with log-uniform amplitudes.
pub fn duality_stats(pairs: &[(f64, f64)], fields: usize, seed: u64) -> Result<Vec<DualityStats>> {
    use rand::{Rng, SeedableRng};
    let spec = SinoSpec { n_t: 128, n_theta: 24, t_max: 4.0 };
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let sinos: Vec<Sinogram> = (0..fields)
        .map(|_| {
            let amp = 10f64.powf(rng.gen_range(-3.0..3.0));
            let mut g = Sinogram::zeros(spec, Parity::Even);
            g.values.iter_mut().for_each(|v| *v = amp * rng.gen_range(-1.0..1.0));
            g
        })
        .collect();
    let mut out = Vec::new();
    for &(p, q) in pairs {
        let (mut iso, mut inv) = (0.0f64, 0.0f64);
        for g in &sinos {
            let jq = duality_map(g, q)?;
            let back = duality_map(&jq, p)?;
            let nq = g.lq_norm(q);
            iso = iso.max((jq.lq_norm(p) - nq).abs() / nq);
            let scale = g.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let err = g.values.iter().zip(&back.values).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            inv = inv.max(err / scale);
        }
        out.push(DualityStats { p, q, isometry: iso, inverse: inv });
    }
    Ok(out)
}

pub const DUALITY_PAIRS: [(f64, f64); 3] = [(1.5, 3.0), (2.0, 2.0), (1.25, 5.0)];

pub fn suite_duality() -> Result<SuiteReport> {
    timed("duality", || {
        let stats = duality_stats(&DUALITY_PAIRS, 100, 7)?;
        let mut checks = Vec::new();
        for s in stats {
            checks.push(Check::below(format!("isometry p={} q={}", s.p, s.q), s.isometry, 1e-10, "relative, 100 fields"));
            checks.push(Check::below(format!("J_p J_q = id p={} q={}", s.p, s.q), s.inverse, 1e-10, "relative sup, 100 fields"));
        }
        Ok(checks)
    })
}

/// Five points in the plane and a coefficient vector orthogonal to affine functions.
pub fn equivalence_centers() -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    let xs: Vec<Vec<f64>> = vec![vec![0.0, 0.0], vec![0.7, -0.2], vec![-0.3, 0.9], vec![0.5, 0.6], vec![-0.8, -0.4]];
    let p = DMatrix::from_fn(xs.len(), 3, |i, j| if j == 0 { 1.0 } else { xs[i][j - 1] });
    let z = constraint_basis(&p, 1)?;
    let a = &z * DVector::from_vec(vec![1.0, -0.5]);
    Ok((xs, a.iter().cloned().collect()))
}

/// Ten scattered points with a smooth target.
pub fn equivalence_dataset() -> (Vec<Vec<f64>>, Vec<f64>) {
    let xs: Vec<Vec<f64>> = (0..10)
        .map(|i| {
            let a = 2.4 * i as f64;
            let r = 0.2 + 0.09 * i as f64;
            vec![r * a.cos(), r * a.sin()]
        })
        .collect();
    let y = xs.iter().map(|x| (2.0 * x[0]).sin() + x[1] * x[1]).collect();
    (xs, y)
}

#[derive(Debug, Clone, Serialize)]
pub struct EquivalenceStats {
    pub p2: Vec<P2Report>,
    /// Successive error ratios under refinement.
    pub refinement_ratios: Vec<f64>,
    pub fit_rms_relative: f64,
}

/// p = 2 forward map against the RBF superposition on `levels` grids, and fit_lp
/// (p = 2, ψ = λt²) against fit_rbf with the same λ.
pub fn equivalence_stats(levels: usize) -> Result<EquivalenceStats> {
    let profile = catalog_profile("fractional_laplacian_alpha", &[2.0])?;
    let (xs, a) = equivalence_centers()?;
    let mut grid = LpGrid::default();
    let mut p2 = Vec::new();
    for _ in 0..levels {
        p2.push(p2_consistency(&a, &xs, &profile, grid)?);
        grid = grid.refined();
    }
    let refinement_ratios = p2.windows(2).map(|w| w[0].rms_relative / w[1].rms_relative).collect();

    let (xs, y) = equivalence_dataset();
    let lambda = 1e-3;
    let lp = fit_lp(&xs, &y, &profile, 2.0, lambda, Psi::Square, LpGrid::default())?;
    let kernel = synth_rbf_kernel(&profile, 2, KernelMode::Radon)?;
    let rbf = fit_rbf(&xs, &y, &kernel, profile.n0, lambda)?;
    let test: Vec<Vec<f64>> = (0..40)
        .map(|i| {
            let a = 1.1 * i as f64;
            let r = 0.9 * i as f64 / 40.0;
            vec![r * a.cos(), r * a.sin()]
        })
        .collect();
    let u = lp.predict_batch(&test)?;
    let v = rbf.predict_batch(&test)?;
    let num: f64 = u.iter().zip(&v).map(|(a, b)| (a - b).powi(2)).sum();
    let den: f64 = v.iter().map(|b| b * b).sum();
    Ok(EquivalenceStats { p2, refinement_ratios, fit_rms_relative: (num / den).sqrt() })
}

pub fn suite_equivalence(quick: bool) -> Result<SuiteReport> {
    timed("equivalence", || {
        let s = equivalence_stats(if quick { 2 } else { 3 })?;
        let errs: Vec<String> = s.p2.iter().map(|r| format!("{}:{:.2e}", r.image_n, r.rms_relative)).collect();
        let decreasing = s.p2.windows(2).all(|w| w[1].rms_relative < w[0].rms_relative);
        let ratios: Vec<String> = s.refinement_ratios.iter().map(|r| format!("{r:.2}")).collect();
        Ok(vec![
            Check::below("p=2 forward map vs RBF superposition", s.p2[0].rms_relative, 0.05, errs.join(" ")),
            Check::flag("error decreases under refinement", decreasing, format!("ratios {}", ratios.join(" "))),
            Check::below("fit_lp(p=2) vs fit_rbf predictions", s.fit_rms_relative, 0.05, "RMS relative, 10 points"),
        ])
    })
}
