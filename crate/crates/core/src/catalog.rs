//! Operator frequency profiles, the built-in catalog and numerical admissibility checks.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Closed-form or sampled radial frequency profile.
#[derive(Clone)]
pub enum ProfileKind {
    Exponential,
    TanhSigmoid,
    ArctanSigmoid,
    RidgeSpline { m: u32 },
    FractionalSpline { alpha: f64 },
    FractionalLaplacian { alpha: f64 },
    /// Samples (ω_i > 0, L̂(ω_i)) interpolated log-linearly in |ω|.
    Sampled { omega: Vec<f64>, values: Vec<f64> },
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for ProfileKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProfileKind::Exponential => write!(f, "Exponential"),
            ProfileKind::TanhSigmoid => write!(f, "TanhSigmoid"),
            ProfileKind::ArctanSigmoid => write!(f, "ArctanSigmoid"),
            ProfileKind::RidgeSpline { m } => write!(f, "RidgeSpline {{ m: {m} }}"),
            ProfileKind::FractionalSpline { alpha } => write!(f, "FractionalSpline {{ alpha: {alpha} }}"),
            ProfileKind::FractionalLaplacian { alpha } => {
                write!(f, "FractionalLaplacian {{ alpha: {alpha} }}")
            }
            ProfileKind::Sampled { omega, .. } => write!(f, "Sampled({} points)", omega.len()),
            ProfileKind::Custom(_) => write!(f, "Custom"),
        }
    }
}

/// Symmetric radial profile L̂_rad with admissibility metadata.
#[derive(Clone, Debug)]
pub struct OperatorProfile {
    pub name: String,
    pub params: Vec<f64>,
    pub kind: ProfileKind,
    pub formula: String,
    pub gamma0: f64,
    pub gamma1: f64,
    pub n0: i32,
    pub c0: f64,
    pub c1: f64,
    pub r1: f64,
    pub antisymmetric_variant: bool,
    /// Declared decay condition on L*φ (checked analytically per family, not numerically).
    pub satisfies_decay: bool,
}

/// Null-space degree from the order of the zero at the origin.
pub fn n0_from_gamma0(gamma0: f64) -> i32 {
    let r = gamma0.round();
    if (gamma0 - r).abs() < 1e-9 {
        r as i32 - 1
    } else {
        (gamma0 - 1.0).ceil() as i32
    }
}

impl OperatorProfile {
    /// L̂_rad(ω), evaluated on |ω| so symmetry holds exactly.
    pub fn eval(&self, omega: f64) -> f64 {
        let w = omega.abs();
        match &self.kind {
            ProfileKind::Exponential => 1.0 + w * w,
            ProfileKind::TanhSigmoid => (PI * w).sinh() / PI,
            ProfileKind::ArctanSigmoid => w * w.exp(),
            ProfileKind::RidgeSpline { m } => w.powi(*m as i32),
            ProfileKind::FractionalSpline { alpha } => w.powf(alpha + 1.0),
            ProfileKind::FractionalLaplacian { alpha } => w.powf(*alpha),
            ProfileKind::Sampled { omega, values } => sampled_eval(omega, values, w),
            ProfileKind::Custom(f) => f(w),
        }
    }

    /// 1/L̂_rad(ω); zero where the profile overflows.
    pub fn inv(&self, omega: f64) -> f64 {
        let v = self.eval(omega);
        if v.is_infinite() {
            0.0
        } else {
            1.0 / v
        }
    }

    /// Exponent of a pure power law |ω|^β, if the profile is one.
    pub fn power_exponent(&self) -> Option<f64> {
        match &self.kind {
            ProfileKind::RidgeSpline { m } => Some(*m as f64),
            ProfileKind::FractionalSpline { alpha } => Some(alpha + 1.0),
            ProfileKind::FractionalLaplacian { alpha } => Some(*alpha),
            _ => None,
        }
    }

    /// Sampled user profile; metadata estimated from the samples.
    pub fn from_samples(name: &str, omega: Vec<f64>, values: Vec<f64>, satisfies_decay: bool) -> Result<Self> {
        if omega.len() != values.len() || omega.len() < 4 {
            return Err(Error::Data("sampled profile needs ≥ 4 matching (ω, value) pairs".into()));
        }
        if omega.windows(2).any(|w| !(w[0] > 0.0 && w[1] > w[0])) {
            return Err(Error::Data("sampled profile frequencies must be positive and increasing".into()));
        }
        let n = omega.len();
        let slope = |i: usize, j: usize| {
            (values[j].abs().ln() - values[i].abs().ln()) / (omega[j].ln() - omega[i].ln())
        };
        let gamma0 = slope(0, 1).max(0.0);
        let gamma1 = slope(n - 2, n - 1);
        let kind = ProfileKind::Sampled { omega, values };
        Ok(OperatorProfile {
            name: name.to_string(),
            params: vec![],
            kind,
            formula: "sampled".into(),
            gamma0,
            gamma1,
            n0: n0_from_gamma0(gamma0),
            c0: 1.0,
            c1: 0.0,
            r1: 1.0,
            antisymmetric_variant: false,
            satisfies_decay,
        })
    }

    /// User profile given as a closure of |ω| with declared orders.
    pub fn custom(
        name: &str,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        gamma0: f64,
        gamma1: f64,
    ) -> Self {
        OperatorProfile {
            name: name.to_string(),
            params: vec![],
            kind: ProfileKind::Custom(Arc::new(f)),
            formula: "custom".into(),
            gamma0,
            gamma1,
            n0: n0_from_gamma0(gamma0),
            c0: 1.0,
            c1: 0.0,
            r1: 1.0,
            antisymmetric_variant: false,
            satisfies_decay: true,
        }
    }

    pub fn with_antisymmetric(mut self, flag: bool) -> Self {
        self.antisymmetric_variant = flag;
        self
    }
}

fn sampled_eval(omega: &[f64], values: &[f64], w: f64) -> f64 {
    let n = omega.len();
    let lw = w.max(1e-300).ln();
    let (i, j) = if w <= omega[0] {
        (0, 1)
    } else if w >= omega[n - 1] {
        (n - 2, n - 1)
    } else {
        let j = omega.partition_point(|&o| o < w);
        (j - 1, j)
    };
    let (la, lb) = (omega[i].ln(), omega[j].ln());
    let (va, vb) = (values[i], values[j]);
    let s = (lw - la) / (lb - la);
    if va > 0.0 && vb > 0.0 {
        (va.ln() + s * (vb.ln() - va.ln())).exp()
    } else {
        va + s * (vb - va)
    }
}

pub const CATALOG_NAMES: [&str; 6] = [
    "exponential",
    "tanh_sigmoid",
    "arctan_sigmoid",
    "ridge_spline_m",
    "fractional_spline_alpha",
    "fractional_laplacian_alpha",
];

fn canonical_name(name: &str) -> Option<&'static str> {
    match name {
        "exponential" => Some("exponential"),
        "tanh_sigmoid" | "tanh" => Some("tanh_sigmoid"),
        "arctan_sigmoid" | "arctan" => Some("arctan_sigmoid"),
        "ridge_spline_m" | "ridge_spline" => Some("ridge_spline_m"),
        "fractional_spline_alpha" | "fractional_spline" => Some("fractional_spline_alpha"),
        "fractional_laplacian_alpha" | "fractional_laplacian" => Some("fractional_laplacian_alpha"),
        _ => None,
    }
}

/// Default parameter list for a catalog entry.
pub fn default_params(name: &str) -> Vec<f64> {
    match canonical_name(name) {
        Some("ridge_spline_m") => vec![2.0],
        Some("fractional_spline_alpha") => vec![0.5],
        Some("fractional_laplacian_alpha") => vec![2.0],
        _ => vec![],
    }
}

fn invalid(profile: &str, msg: impl Into<String>) -> Error {
    Error::InvalidParameter { profile: profile.to_string(), msg: msg.into() }
}

/// Profile from the built-in catalog; `params` gives m or α where required
/// (defaults when empty).
pub fn catalog_profile(name: &str, params: &[f64]) -> Result<OperatorProfile> {
    let canon = canonical_name(name).ok_or_else(|| Error::UnknownProfile(name.to_string()))?;
    let params: Vec<f64> = if params.is_empty() { default_params(canon) } else { params.to_vec() };
    let needs = !default_params(canon).is_empty();
    if needs && params.len() != 1 {
        return Err(invalid(canon, format!("expected 1 parameter, got {}", params.len())));
    }
    if !needs && !params.is_empty() {
        return Err(invalid(canon, "takes no parameters"));
    }
    if params.iter().any(|p| !p.is_finite()) {
        return Err(invalid(canon, "parameter must be finite"));
    }
    let base = |kind, formula: String, gamma0: f64, gamma1: f64, n0: i32| OperatorProfile {
        name: canon.to_string(),
        params: params.clone(),
        kind,
        formula,
        gamma0,
        gamma1,
        n0,
        c0: 1.0,
        c1: 1.0,
        r1: 1.0,
        antisymmetric_variant: false,
        satisfies_decay: true,
    };
    let profile = match canon {
        "exponential" => base(ProfileKind::Exponential, "1+w^2".into(), 0.0, 2.0, -1),
        "tanh_sigmoid" => base(ProfileKind::TanhSigmoid, "sinh(pi|w|)/pi".into(), 1.0, 2.0, 0),
        "arctan_sigmoid" => base(ProfileKind::ArctanSigmoid, "|w| exp(|w|)".into(), 1.0, 2.0, 0),
        "ridge_spline_m" => {
            let m = params[0];
            if m.fract() != 0.0 || !(2.0..=10.0).contains(&m) {
                return Err(invalid(canon, format!("m must be an integer in [2, 10], got {m}")));
            }
            let m = m as u32;
            base(ProfileKind::RidgeSpline { m }, format!("|w|^{m}"), m as f64, m as f64, m as i32 - 1)
        }
        "fractional_spline_alpha" => {
            let a = params[0];
            if a <= 0.0 || a > 8.0 {
                return Err(invalid(canon, format!("alpha must lie in (0, 8], got {a}")));
            }
            if a.fract() == 0.0 {
                return Err(invalid(
                    canon,
                    format!("alpha = {a} is an integer; use ridge_spline_m with m = {}", a as u32 + 1),
                ));
            }
            base(
                ProfileKind::FractionalSpline { alpha: a },
                format!("|w|^{}", a + 1.0),
                a + 1.0,
                a + 1.0,
                a.ceil() as i32,
            )
        }
        _ => {
            let a = params[0];
            if a <= 0.0 || a > 10.0 {
                return Err(invalid(canon, format!("alpha must lie in (0, 10], got {a}")));
            }
            base(ProfileKind::FractionalLaplacian { alpha: a }, format!("|w|^{a}"), a, a, n0_from_gamma0(a))
        }
    };
    Ok(profile)
}

/// Catalog row for listings.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CatalogEntry {
    pub name: String,
    pub params: Vec<f64>,
    pub formula: String,
    pub gamma0: f64,
    pub gamma1: f64,
    pub n0: i32,
}

pub fn catalog_list() -> Vec<CatalogEntry> {
    CATALOG_NAMES
        .iter()
        .map(|n| {
            let p = catalog_profile(n, &[]).expect("catalog defaults are valid");
            CatalogEntry {
                name: p.name,
                params: p.params,
                formula: p.formula,
                gamma0: p.gamma0,
                gamma1: p.gamma1,
                n0: p.n0,
            }
        })
        .collect()
}

/// Log-spaced frequency grid on [omega_min, omega_max].
#[derive(Debug, Clone)]
pub struct FrequencyGrid {
    pub omega: Vec<f64>,
}

impl FrequencyGrid {
    pub fn log_spaced(omega_min: f64, omega_max: f64, per_decade: usize) -> Self {
        let decades = (omega_max / omega_min).log10();
        let n = (decades * per_decade as f64).round() as usize + 1;
        let omega = (0..n)
            .map(|i| omega_min * 10f64.powf(decades * i as f64 / (n - 1) as f64))
            .collect();
        FrequencyGrid { omega }
    }
}

impl Default for FrequencyGrid {
    fn default() -> Self {
        FrequencyGrid::log_spaced(1e-5, 1e4, 50)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdmissibilityReport {
    pub is_admissible: bool,
    pub estimated_gamma0: f64,
    pub estimated_gamma1: f64,
    pub n0: i32,
    pub violations: Vec<String>,
}

fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let slope = sxy / sxx;
    let ss_res: f64 = x.iter().zip(y).map(|(a, b)| (b - my - slope * (a - mx)).powi(2)).sum();
    let spread = y.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - y.iter().cloned().fold(f64::INFINITY, f64::min);
    // A flat log-profile is a perfect order-zero fit.
    let r2 = if spread < 1e-6 { 1.0 } else { 1.0 - ss_res / syy };
    (slope, r2)
}

/// Numerical check of the admissibility conditions on a log-spaced grid.
pub fn check_admissibility(profile: &OperatorProfile, grid: &FrequencyGrid) -> Result<AdmissibilityReport> {
    let om = &grid.omega;
    let (lo, hi) = match (om.first(), om.last()) {
        (Some(&a), Some(&b)) => (a, b),
        _ => return Err(Error::GridTooShort("empty grid".into())),
    };
    if lo > 1e-4 || hi < 1e3 {
        return Err(Error::GridTooShort(format!("[{lo:e}, {hi:e}] must cover [1e-4, 1e3]")));
    }
    let lowest: Vec<usize> = (0..om.len()).filter(|&i| om[i] <= 10.0 * lo * (1.0 + 1e-12)).collect();
    let highest: Vec<usize> = (0..om.len()).filter(|&i| om[i] >= hi / 10.0 * (1.0 - 1e-12)).collect();
    if lowest.len() < 5 || highest.len() < 5 {
        return Err(Error::GridTooShort("fewer than 5 samples in the extreme decades".into()));
    }
    let vals: Vec<f64> = om.iter().map(|&w| profile.eval(w)).collect();
    if let Some((i, _)) = vals.iter().enumerate().find(|(_, v)| v.is_nan()) {
        return Err(Error::ProfileEval { omega: om[i], msg: "NaN".into() });
    }
    let mut violations = Vec::new();

    if om.iter().any(|&w| profile.eval(-w) != profile.eval(w)) {
        violations.push("profile is not symmetric: L(w) != L(-w)".to_string());
    }
    let zero_at = (0..om.len()).find(|&i| vals[i] == 0.0).map(|i| om[i]).or_else(|| {
        (1..om.len()).find(|&i| vals[i - 1] * vals[i] < 0.0).map(|i| om[i])
    });
    if let Some(w) = zero_at {
        violations.push(format!("zero away from origin near w = {w:.6}"));
    }

    let lx: Vec<f64> = lowest.iter().map(|&i| om[i].ln()).collect();
    let ly: Vec<f64> = lowest.iter().map(|&i| vals[i].abs().ln()).collect();
    let (g0, r2) = if ly.iter().all(|v| v.is_finite()) { linear_fit(&lx, &ly) } else { (f64::NAN, 0.0) };
    if r2 < 0.999 {
        violations.push(format!("indeterminate order at the origin (R^2 = {r2:.5})"));
    }

    let mut g1 = f64::INFINITY;
    for w in highest.windows(2) {
        let (a, b) = (vals[w[0]].abs(), vals[w[1]].abs());
        let s = if b.is_infinite() {
            f64::INFINITY
        } else {
            (b.ln() - a.ln()) / (om[w[1]].ln() - om[w[0]].ln())
        };
        g1 = g1.min(s);
    }

    let snapped = if (g0 - g0.round()).abs() < 0.02 { g0.round() } else { g0 };
    let n0 = if g0.is_finite() { n0_from_gamma0(snapped.max(0.0)) } else { profile.n0 };

    if !(g1 > 1.0) {
        violations.push(format!("insufficient ellipticity: gamma1 = {g1:.4} <= 1"));
    }
    if g0.is_finite() && (g0 - profile.gamma0).abs() > 0.05 {
        violations.push(format!(
            "estimated gamma0 = {g0:.4} disagrees with the declared {}",
            profile.gamma0
        ));
    }
    if profile.c1 > 0.0 {
        let bad = om
            .iter()
            .zip(&vals)
            .find(|(&w, &v)| w > profile.r1 && v.abs() < profile.c1 * w.powf(profile.gamma1) * (1.0 - 1e-12));
        if let Some((w, _)) = bad {
            violations.push(format!("ellipticity bound |L(w)| >= C1 |w|^gamma1 fails at w = {w:.4}"));
        }
    }
    if !profile.satisfies_decay {
        violations.push("decay condition on L*phi not declared".to_string());
    }

    Ok(AdmissibilityReport {
        is_admissible: violations.is_empty(),
        estimated_gamma0: g0,
        estimated_gamma1: g1,
        n0,
        violations,
    })
}

/// n0 of an admissible profile from its declared γ0.
pub fn null_space_degree(profile: &OperatorProfile) -> i32 {
    n0_from_gamma0(profile.gamma0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_examples() {
        let e = catalog_profile("exponential", &[]).unwrap();
        assert_eq!(e.eval(1.0), 2.0);
        assert_eq!(e.n0, -1);
        let r = catalog_profile("ridge_spline_m", &[2.0]).unwrap();
        assert_eq!(r.eval(3.0), 9.0);
        assert_eq!(r.n0, 1);
        let f = catalog_profile("fractional_spline_alpha", &[1.5]).unwrap();
        assert!((f.eval(2.0) - 2f64.powf(2.5)).abs() < 1e-14);
        assert_eq!(f.n0, 2);
    }

    #[test]
    fn catalog_errors() {
        assert!(matches!(catalog_profile("nope", &[]), Err(Error::UnknownProfile(_))));
        assert!(catalog_profile("fractional_spline_alpha", &[0.0]).is_err());
        assert!(catalog_profile("fractional_spline_alpha", &[-1.0]).is_err());
        assert!(catalog_profile("fractional_spline_alpha", &[2.0]).is_err());
        assert!(catalog_profile("ridge_spline_m", &[1.0]).is_err());
    }

    #[test]
    fn n0_rule() {
        assert_eq!(n0_from_gamma0(1.0), 0);
        assert_eq!(n0_from_gamma0(2.0), 1);
        assert_eq!(n0_from_gamma0(2.5), 2);
        assert_eq!(n0_from_gamma0(0.0), -1);
        assert_eq!(n0_from_gamma0(0.3), 0);
    }

    #[test]
    fn laplacian_order_estimate() {
        let p = catalog_profile("fractional_laplacian_alpha", &[2.0]).unwrap();
        let rep = check_admissibility(&p, &FrequencyGrid::default()).unwrap();
        assert!((rep.estimated_gamma0 - 2.0).abs() < 0.05);
        assert_eq!(rep.n0, 1);
        assert!(rep.is_admissible, "{:?}", rep.violations);
    }

    #[test]
    fn catalog_defaults_admissible() {
        for e in catalog_list() {
            let p = catalog_profile(&e.name, &e.params).unwrap();
            let rep = check_admissibility(&p, &FrequencyGrid::default()).unwrap();
            assert!(rep.is_admissible, "{}: {:?}", e.name, rep.violations);
            assert!((rep.estimated_gamma0 - p.gamma0).abs() < 0.05, "{}", e.name);
            assert_eq!(rep.n0, p.n0, "{}", e.name);
        }
        for (name, prm) in [("ridge_spline_m", 3.0), ("ridge_spline_m", 4.0), ("fractional_spline_alpha", 1.5)] {
            let p = catalog_profile(name, &[prm]).unwrap();
            assert!(check_admissibility(&p, &FrequencyGrid::default()).unwrap().is_admissible);
        }
    }

    #[test]
    fn sine_profile_flagged() {
        let p = OperatorProfile::custom("sine", |w| w.sin(), 1.0, 2.0);
        let rep = check_admissibility(&p, &FrequencyGrid::default()).unwrap();
        assert!(!rep.is_admissible);
        assert!(rep.violations.iter().any(|v| v.contains("zero away from origin")));
    }

    #[test]
    fn short_grid_rejected() {
        let p = catalog_profile("exponential", &[]).unwrap();
        let g = FrequencyGrid::log_spaced(1e-3, 1e4, 50);
        assert!(matches!(check_admissibility(&p, &g), Err(Error::GridTooShort(_))));
    }

    #[test]
    fn square_root_laplacian_not_elliptic_enough() {
        let p = catalog_profile("fractional_laplacian_alpha", &[1.0]).unwrap();
        let rep = check_admissibility(&p, &FrequencyGrid::default()).unwrap();
        assert!(!rep.is_admissible);
        assert_eq!(rep.n0, 0);
    }
}
