//! Acceptance checks; each prints one PASS/FAIL line with its metric and runtime.

use std::sync::{Mutex, MutexGuard};
use std::time::{Duration, Instant};

use radonreg::nullspace::biorthogonality_matrix;

static SERIAL: Mutex<()> = Mutex::new(());

/// Criteria run one at a time so that runtimes are not inflated by each other.
fn serial() -> MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(|e| e.into_inner())
}

fn report(id: u32, name: &str, ok: bool, metric: &str, elapsed: Duration, budget_s: f64) {
    let within = elapsed.as_secs_f64() < budget_s;
    let status = if ok && within { "PASS" } else { "FAIL" };
    println!(
        "[{status}] {id:>2} {name}: {metric} ({:.2} s, budget {budget_s} s)",
        elapsed.as_secs_f64()
    );
    assert!(ok, "criterion {id} ({name}) failed: {metric}");
    assert!(within, "criterion {id} ({name}) exceeded its time budget");
}

#[test]
fn c01_biorthogonality() {
    let _guard = serial();
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for d in [1, 2] {
        let g = biorthogonality_matrix(d, 2).unwrap();
        for (i, row) in g.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((v - target).abs());
            }
        }
    }
    report(1, "biorthogonality", worst < 1e-6, &format!("max |G - I| = {worst:.2e}"), start.elapsed(), 10.0);
}

#[test]
fn c04_remainder() {
    let _guard = serial();
    let start = Instant::now();
    let s = radonreg::verify::remainder_stats(100_000);
    let ok = s.violations == 0 && s.max_small_omega_error < 1e-4;
    let metric = format!(
        "{} violations / {} samples, small-w error {:.1e}, |r_5(1e4)| = {:.6}",
        s.violations, s.samples, s.max_small_omega_error, s.large_omega_modulus
    );
    report(4, "r_N properties", ok, &metric, start.elapsed(), 5.0);
}

#[test]
fn c06_closed_forms() {
    let _guard = serial();
    let start = Instant::now();
    let rows = radonreg::verify::closed_form_rows().unwrap();
    let worst = rows.iter().map(|r| r.max_error).fold(0.0, f64::max);
    for r in &rows {
        println!("     {}{:?} {:?}: max err {:.2e}, scale {:.6}", r.profile, r.params, r.parity, r.max_error, r.scale);
    }
    report(6, "closed forms", worst < 1e-3, &format!("worst max error {worst:.2e} over {} forms", rows.len()), start.elapsed(), 30.0);
}

#[test]
fn c02_radon_inversion() {
    let _guard = serial();
    let start = Instant::now();
    let coarse = radonreg::verify::fbp_roundtrip_error(256, 360);
    let fine = radonreg::verify::fbp_roundtrip_error(512, 720);
    let ok = coarse < 0.02 && fine < coarse;
    let metric = format!("relative L2 error {coarse:.2e} at 256/360, {fine:.2e} at 512/720");
    report(2, "Radon inversion", ok, &metric, start.elapsed(), 60.0);
}

#[test]
fn c03_fourier_slice() {
    let _guard = serial();
    let start = Instant::now();
    let err = radonreg::verify::slice_error(256, 8);
    report(3, "Fourier slice", err < 1e-3, &format!("worst relative slice error {err:.2e} over 8 angles"), start.elapsed(), 10.0);
}

#[test]
fn c05_nu_consistency() {
    let _guard = serial();
    let start = Instant::now();
    let p = radonreg::catalog::catalog_profile("fractional_laplacian_alpha", &[2.0]).unwrap();
    let s = radonreg::verify::nu_stats(&p).unwrap();
    for (r, v) in &s.sweep {
        println!("     |x0| = {r:>5}: max over xi of (1+|t0|)^-n0 sup|nu| = {v:.4}");
    }
    let ok = s.max_form_difference < 1e-3 && s.ratio < 2.0;
    let metric = format!("spatial vs spectral {:.2e}, boundedness ratio {:.3}", s.max_form_difference, s.ratio);
    report(5, "nu consistency", ok, &metric, start.elapsed(), 30.0);
}

#[test]
fn c07_gram_radon() {
    let _guard = serial();
    let start = Instant::now();
    let centers = [[0.0, 0.0], [0.7, -0.2], [-0.3, 0.9]];
    let g = radonreg::verify::gram_radon_check(&centers).unwrap();
    for (row_g, row_k) in g.grid.iter().zip(&g.kernel) {
        println!("     grid {row_g:>8.4?}  kernel {row_k:>8.4?}");
    }
    let five = [[0.0, 0.0], [0.7, -0.2], [-0.3, 0.9], [0.5, 0.6], [-0.8, -0.4]];
    let (cost, norm2) = radonreg::verify::reg_cost_radon_check(&five, 7).unwrap();
    let cost_err = (cost - norm2).abs() / norm2;
    let ok = g.max_relative_error < 0.05 && cost_err < 0.05;
    let metric = format!("max entrywise error {:.2e}; Laplacian a'Ga vs grid norm {:.2e}", g.max_relative_error, cost_err);
    report(7, "Gram/Radon agreement", ok, &metric, start.elapsed(), 60.0);
}

/// Natural cubic spline through (x_i, y_i), evaluated at t.
fn natural_spline(x: &[f64], y: &[f64], t: f64) -> f64 {
    let n = x.len() - 1;
    let h: Vec<f64> = (0..n).map(|i| x[i + 1] - x[i]).collect();
    // Tridiagonal system for the interior second derivatives.
    let mut diag = vec![0.0; n + 1];
    let mut rhs = vec![0.0; n + 1];
    let mut sub = vec![0.0; n + 1];
    for i in 1..n {
        sub[i] = h[i - 1];
        diag[i] = 2.0 * (h[i - 1] + h[i]);
        rhs[i] = 6.0 * ((y[i + 1] - y[i]) / h[i] - (y[i] - y[i - 1]) / h[i - 1]);
    }
    let mut mom = vec![0.0; n + 1];
    let mut c = vec![0.0; n + 1];
    let mut d = vec![0.0; n + 1];
    for i in 1..n {
        let denom = diag[i] - sub[i] * c[i - 1];
        c[i] = h[i] / denom;
        d[i] = (rhs[i] - sub[i] * d[i - 1]) / denom;
    }
    for i in (1..n).rev() {
        mom[i] = d[i] - c[i] * mom[i + 1];
    }
    let i = if t <= x[0] { 0 } else if t >= x[n] { n - 1 } else { (0..n).find(|&i| t <= x[i + 1]).unwrap() };
    let (a, b) = (x[i + 1] - t, t - x[i]);
    if t < x[0] || t > x[n] {
        // Linear continuation beyond the end knots.
        let (xe, ye, slope) = if t < x[0] {
            (x[0], y[0], (y[1] - y[0]) / h[0] - h[0] * (2.0 * mom[0] + mom[1]) / 6.0)
        } else {
            (x[n], y[n], (y[n] - y[n - 1]) / h[n - 1] + h[n - 1] * (mom[n - 1] + 2.0 * mom[n]) / 6.0)
        };
        return ye + slope * (t - xe);
    }
    mom[i] * a.powi(3) / (6.0 * h[i])
        + mom[i + 1] * b.powi(3) / (6.0 * h[i])
        + (y[i] / h[i] - mom[i] * h[i] / 6.0) * a
        + (y[i + 1] / h[i] - mom[i + 1] * h[i] / 6.0) * b
}

#[test]
fn c08_rbf_fitter() {
    use radonreg::activations::{synth_rbf_kernel, KernelMode};
    use radonreg::catalog::catalog_profile;
    use radonreg::rbf::fit_rbf;
    let _guard = serial();
    let start = Instant::now();

    // λ = 0 interpolation with the d = 2 Laplacian radon kernel.
    let lap = catalog_profile("fractional_laplacian_alpha", &[2.0]).unwrap();
    let k2 = synth_rbf_kernel(&lap, 2, KernelMode::Radon).unwrap();
    let xs: Vec<Vec<f64>> = (0..12).map(|i| {
        let a = i as f64 * 2.399;
        let r = 0.2 + 0.07 * i as f64;
        vec![r * a.cos(), r * a.sin()]
    }).collect();
    let y: Vec<f64> = xs.iter().map(|x| (2.0 * x[0]).sin() + x[1] * x[1]).collect();
    let model = fit_rbf(&xs, &y, &k2, 1, 0.0).unwrap();
    let scale = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let interp = xs.iter().zip(&y).map(|(x, v)| (model.predict(x).unwrap() - v).abs()).fold(0.0, f64::max) / scale;

    // Affine data is reproduced by the polynomial part alone.
    let ya: Vec<f64> = xs.iter().map(|x| 1.5 - 2.0 * x[0] + 0.25 * x[1]).collect();
    let affine = fit_rbf(&xs, &ya, &k2, 1, 0.3).unwrap();
    let a_inf = affine.coeffs.iter().fold(0.0f64, |m, a| m.max(a.abs()));

    // d = 1: |t|³ kernel with affine part is the natural cubic spline.
    let k1 = synth_rbf_kernel(&lap, 1, KernelMode::Radon).unwrap();
    let knots = [-1.3, -0.4, 0.2, 0.9, 2.0];
    let vals = [0.5, -1.0, 0.3, 2.2, 1.1];
    let xs1: Vec<Vec<f64>> = knots.iter().map(|k| vec![*k]).collect();
    let m1 = fit_rbf(&xs1, &vals, &k1, 1, 0.0).unwrap();
    let spline = (0..50)
        .map(|i| {
            let t = -2.0 + 4.5 * (i as f64 + 0.37) / 50.0;
            (m1.predict(&[t]).unwrap() - natural_spline(&knots, &vals, t)).abs()
        })
        .fold(0.0, f64::max);

    let ok = interp < 1e-8 && a_inf < 1e-8 && spline < 1e-6;
    let metric = format!("interpolation {interp:.2e}, |a|_inf on affine data {a_inf:.2e}, natural spline {spline:.2e}");
    report(8, "RBF fitter", ok, &metric, start.elapsed(), 10.0);
}

#[test]
fn c09_duality_maps() {
    use radonreg::verify::{duality_stats, DUALITY_PAIRS};
    let _guard = serial();
    let start = Instant::now();
    let stats = duality_stats(&DUALITY_PAIRS, 100, 7).unwrap();
    let iso = stats.iter().map(|s| s.isometry).fold(0.0, f64::max);
    let inv = stats.iter().map(|s| s.inverse).fold(0.0, f64::max);
    let ok = iso < 1e-10 && inv < 1e-10;
    let metric = format!("isometry {iso:.2e}, J_p J_q - id {inv:.2e} over 100 fields x 3 pairs");
    report(9, "duality maps", ok, &metric, start.elapsed(), 5.0);
}

#[test]
fn c10_p2_equivalence() {
    let _guard = serial();
    let start = Instant::now();
    let s = radonreg::verify::equivalence_stats(3).unwrap();
    let errs: Vec<String> = s.p2.iter().map(|r| format!("{}: {:.2e}", r.image_n, r.rms_relative)).collect();
    let decreasing = s.p2.windows(2).all(|w| w[1].rms_relative < w[0].rms_relative);
    let ok = s.p2[0].rms_relative < 0.05 && decreasing && s.fit_rms_relative < 0.05;
    let ratios: Vec<String> = s.refinement_ratios.iter().map(|r| format!("{r:.2}")).collect();
    let metric = format!(
        "forward vs RBF [{}] (ratios {}), fit_lp vs fit_rbf {:.2e}",
        errs.join(", "),
        ratios.join(", "),
        s.fit_rms_relative
    );
    report(10, "p=2 equivalence", ok, &metric, start.elapsed(), 120.0);
}

#[test]
fn c11_mnorm_fitter() {
    use radonreg::activations::{synth_symmetric, TGrid};
    use radonreg::catalog::catalog_profile;
    use radonreg::sparse::{build_dictionary, fit_mnorm, MnormOptions};
    let _guard = serial();
    let start = Instant::now();
    let profile = catalog_profile("ridge_spline", &[2.0]).unwrap();
    let act = synth_symmetric(&profile, &TGrid::default()).unwrap();
    let xs: Vec<Vec<f64>> = (0..5).map(|i| vec![i as f64]).collect();
    let y = [0.0, 1.0, 0.0, 1.0, 0.0];
    // Knots at 1, 2, 3 with slopes +1 outside [0, 4] on the left and −1 on the right.
    let truth = |x: f64| if x < 0.0 { x } else if x > 4.0 { 4.0 - x } else { 1.0 - (x.rem_euclid(2.0) - 1.0).abs() };
    let dict = build_dictionary(&xs, 1).unwrap();
    let mut costs = Vec::new();
    let (mut err, mut k0, mut mono, mut bound) = (0.0f64, 0, true, 0);
    for seed in [None, Some(11), Some(12), Some(13), Some(14), Some(15)] {
        let opts = MnormOptions { seed, ..Default::default() };
        let m = fit_mnorm(&xs, &y, &act, 1, 1e-6, &dict, &opts).unwrap();
        for i in 0..60 {
            let x = -1.0 + 6.0 * (i as f64 + 0.5) / 60.0;
            err = err.max((m.predict(&[x]).unwrap() - truth(x)).abs());
        }
        k0 = k0.max(m.k0());
        bound = m.k0_bound;
        mono &= m.history.windows(2).all(|w| w[1] <= w[0]);
        costs.push(m.reg_cost());
    }
    let spread = costs.iter().fold(f64::MIN, |a, b| a.max(*b)) - costs.iter().fold(f64::MAX, |a, b| a.min(*b));
    let ok = err < 1e-3 && k0 <= 3 && bound == 3 && mono && spread < 1e-6;
    let metric = format!("off-data error {err:.2e}, K0 {k0} <= {bound}, monotone {mono}, sum|a| spread {spread:.2e} over 5 restarts");
    report(11, "M-norm fitter", ok, &metric, start.elapsed(), 30.0);
}

#[test]
fn c12_gradient_check() {
    use radonreg::catalog::catalog_profile;
    use radonreg::lp::{LpGrid, LpSystem, Psi};
    use rand::{Rng, SeedableRng};
    let _guard = serial();
    let start = Instant::now();
    let profile = catalog_profile("fractional_laplacian_alpha", &[2.0]).unwrap();
    let (xs, y) = radonreg::verify::equivalence_dataset();
    let sys = LpSystem::new(&profile, &xs, 1.5, LpGrid::default()).unwrap();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
    let n = xs.len() + sys.n_poly();
    let mut worst: f64 = 0.0;
    for point in 0..10 {
        let psi = if point % 2 == 0 { Psi::Linear } else { Psi::Square };
        let theta: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let (_, g) = sys.objective(&theta, &y, 0.1, psi);
        let mut num = 0.0;
        for k in 0..n {
            let h = 1e-5;
            let mut up = theta.clone();
            up[k] += h;
            let mut dn = theta.clone();
            dn[k] -= h;
            let fd = (sys.objective(&up, &y, 0.1, psi).0 - sys.objective(&dn, &y, 0.1, psi).0) / (2.0 * h);
            num += (fd - g[k]).powi(2);
        }
        let den: f64 = g.iter().map(|v| v * v).sum();
        worst = worst.max((num / den).sqrt());
    }
    report(12, "gradient check", worst < 1e-4, &format!("worst relative error {worst:.2e} at 10 points"), start.elapsed(), 30.0);
}
