//! wasm-bindgen entry points for the static demo page. Each returns a JSON string.

use radonreg::activations::{synth_antisymmetric, synth_symmetric, TGrid};
use radonreg::catalog::catalog_profile;
use radonreg::sparse::{build_dictionary, fit_mnorm, MnormOptions};
use radonreg::spectral::remainder_r;
use serde::Serialize;
use wasm_bindgen::prelude::*;

#[derive(Serialize)]
struct Curve {
    x: Vec<f64>,
    y: Vec<f64>,
    label: String,
}

#[derive(Serialize)]
struct RemainderCurve {
    omega: Vec<f64>,
    re: Vec<f64>,
    im: Vec<f64>,
    modulus: Vec<f64>,
    bound: Vec<f64>,
}

#[derive(Serialize)]
struct FitComparison {
    grid: Vec<f64>,
    rbf: Vec<f64>,
    mnorm: Vec<f64>,
    k0: usize,
    knots: Vec<f64>,
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let n = n.max(2);
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("plain data serializes")
}

/// Activation samples on [−range, range]; `param` is ignored by profiles without one.
pub fn activation_json(name: &str, param: f64, antisymmetric: bool, range: f64, points: usize) -> Result<String, String> {
    let params = if radonreg::catalog::default_params(name).is_empty() { vec![] } else { vec![param] };
    let profile = catalog_profile(name, &params).map_err(|e| e.to_string())?;
    // A coarser table keeps synthesis interactive for profiles without a closed form.
    let grid = TGrid { t_max: 32.0, samples: 1 << 14 };
    let act = if antisymmetric { synth_antisymmetric(&profile, &grid) } else { synth_symmetric(&profile, &grid) }
        .map_err(|e| e.to_string())?;
    let x = linspace(-range, range, points);
    let y = x.iter().map(|t| act.eval(*t)).collect();
    Ok(to_json(&Curve { x, y, label: act.formula() }))
}

/// r_N on [−omega_max, omega_max] with the bound min(|ω|/2, 1.27).
pub fn remainder_json(n: u32, omega_max: f64, points: usize) -> Result<String, String> {
    if n == 0 || n > 30 {
        return Err(format!("N = {n} must be in 1..=30"));
    }
    let omega = linspace(-omega_max, omega_max, points);
    let vals: Vec<_> = omega.iter().map(|w| remainder_r(n, *w)).collect();
    Ok(to_json(&RemainderCurve {
        re: vals.iter().map(|v| v.re).collect(),
        im: vals.iter().map(|v| v.im).collect(),
        modulus: vals.iter().map(|v| v.norm()).collect(),
        bound: omega.iter().map(|w| (w.abs() / 2.0).min(1.27)).collect(),
        omega,
    }))
}

/// 1D cubic-spline RBF fit and sparse |t|/2 ridge fit of the same points.
pub fn compare_json(xs: &[f64], ys: &[f64], lambda: f64, points: usize) -> Result<String, String> {
    use radonreg::activations::{synth_rbf_kernel, KernelMode};
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err("need at least two (x, y) pairs of equal length".into());
    }
    let x: Vec<Vec<f64>> = xs.iter().map(|v| vec![*v]).collect();
    let lap = catalog_profile("fractional_laplacian_alpha", &[2.0]).map_err(|e| e.to_string())?;
    let kernel = synth_rbf_kernel(&lap, 1, KernelMode::Radon).map_err(|e| e.to_string())?;
    let rbf = radonreg::rbf::fit_rbf(&x, ys, &kernel, 1, lambda).map_err(|e| e.to_string())?;
    let ridge = catalog_profile("ridge_spline_m", &[2.0]).map_err(|e| e.to_string())?;
    let act = synth_symmetric(&ridge, &TGrid::default()).map_err(|e| e.to_string())?;
    let dict = build_dictionary(&x, 1).map_err(|e| e.to_string())?;
    let opts = MnormOptions { max_iter: 50_000, tol: 1e-10, ..Default::default() };
    let mn = fit_mnorm(&x, ys, &act, 1, lambda.max(1e-8), &dict, &opts).map_err(|e| e.to_string())?;
    let lo = xs.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let pad = 0.15 * (hi - lo).max(1e-3);
    let grid = linspace(lo - pad, hi + pad, points);
    let g: Vec<Vec<f64>> = grid.iter().map(|v| vec![*v]).collect();
    Ok(to_json(&FitComparison {
        rbf: rbf.predict_batch(&g).map_err(|e| e.to_string())?,
        mnorm: mn.predict_batch(&g).map_err(|e| e.to_string())?,
        k0: mn.k0(),
        knots: mn.atoms.iter().map(|a| a.tau * a.xi[0]).collect(),
        grid,
    }))
}

#[wasm_bindgen]
pub fn activation_curve(name: &str, param: f64, antisymmetric: bool, range: f64, points: usize) -> Result<String, JsError> {
    activation_json(name, param, antisymmetric, range, points).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn remainder_curve(n: u32, omega_max: f64, points: usize) -> Result<String, JsError> {
    remainder_json(n, omega_max, points).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn compare_fits(xs: Vec<f64>, ys: Vec<f64>, lambda: f64, points: usize) -> Result<String, JsError> {
    compare_json(&xs, &ys, lambda, points).map_err(|e| JsError::new(&e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn activation_curve_has_requested_points() {
        let v: serde_json::Value = serde_json::from_str(&activation_json("tanh", 0.0, true, 3.0, 7).unwrap()).unwrap();
        assert_eq!(v["x"].as_array().unwrap().len(), 7);
        assert_eq!(v["label"], "tanh(t/2)/2");
    }

    #[test]
    fn remainder_respects_bound() {
        let v: serde_json::Value = serde_json::from_str(&remainder_json(4, 50.0, 301).unwrap()).unwrap();
        let m = v["modulus"].as_array().unwrap();
        let b = v["bound"].as_array().unwrap();
        assert!(m.iter().zip(b).all(|(m, b)| m.as_f64().unwrap() <= b.as_f64().unwrap() + 1e-12));
        assert!(remainder_json(0, 1.0, 3).is_err());
    }

    #[test]
    fn fits_agree_on_data() {
        let xs = [0.0, 1.0, 2.0, 3.0, 4.0];
        let ys = [0.0, 1.0, 0.0, 1.0, 0.0];
        let v: serde_json::Value = serde_json::from_str(&compare_json(&xs, &ys, 1e-6, 9).unwrap()).unwrap();
        assert_eq!(v["k0"], 3);
        assert!(compare_json(&[1.0], &[1.0], 0.1, 5).is_err());
    }
}
