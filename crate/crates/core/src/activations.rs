//! Activations ρ_rad = F⁻¹{1/L̂_rad}, their antisymmetric variants, Green kernels of
//! fractional Laplacians and isotropic RBF kernels.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::catalog::{check_admissibility, n0_from_gamma0, FrequencyGrid, OperatorProfile, ProfileKind};
use crate::error::{Error, Result};
use crate::interp::UniformTable;
use crate::nullspace::kappa_hat;
use crate::par;
use crate::special::{bessel_j0, bessel_pq, factorial, gamma, gauss_legendre};
use crate::spectral::{filon_moments, Parity, SpectralInverse};

/// Largest Taylor correction degree supported by the pole regularization.
pub const MAX_CORRECTION_DEGREE: i32 = 12;

/// Uniform sampling of [−t_max, t_max] with `samples` intervals.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TGrid {
    pub t_max: f64,
    pub samples: usize,
}

impl Default for TGrid {
    fn default() -> Self {
        TGrid { t_max: 32.0, samples: 1 << 16 }
    }
}

impl TGrid {
    pub fn points(&self) -> Vec<f64> {
        let h = 2.0 * self.t_max / self.samples as f64;
        (0..=self.samples).map(|i| -self.t_max + i as f64 * h).collect()
    }
}

// ---------------------------------------------------------------------------
// Green kernels
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub enum GreenLaw {
    /// coef · r^exponent
    Power { coef: f64, exponent: f64 },
    /// coef · r^{2n} log r
    Log { coef: f64, n: u32 },
}

/// Radial impulse response of (−Δ)^{α/2} in dimension d.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct GreenKernel {
    pub alpha: f64,
    pub d: usize,
    pub law: GreenLaw,
}

impl GreenKernel {
    pub fn eval(&self, r: f64) -> f64 {
        let r = r.abs();
        match self.law {
            GreenLaw::Power { coef, exponent } => {
                if r == 0.0 {
                    if exponent > 0.0 {
                        0.0
                    } else {
                        f64::INFINITY * coef.signum()
                    }
                } else {
                    coef * r.powf(exponent)
                }
            }
            GreenLaw::Log { coef, n } => {
                if r == 0.0 {
                    if n > 0 {
                        0.0
                    } else {
                        -f64::INFINITY * coef.signum()
                    }
                } else {
                    coef * r.powi(2 * n as i32) * r.ln()
                }
            }
        }
    }

    pub fn tag(&self) -> String {
        match self.law {
            GreenLaw::Power { coef, exponent } => format!("{coef:.6e} r^{exponent}"),
            GreenLaw::Log { coef, n } => format!("{coef:.6e} r^{} log r", 2 * n),
        }
    }
}

/// A_{α,d} = Γ((d−α)/2) / (2^α π^{d/2} Γ(α/2)).
pub fn green_constant_a(alpha: f64, d: usize) -> f64 {
    let df = d as f64;
    gamma((df - alpha) / 2.0) / (2f64.powf(alpha) * PI.powf(df / 2.0) * gamma(alpha / 2.0))
}

/// B_{n,d} = (−1)^{1+n} / (2^{2n+d−1} π^{d/2} Γ(n+d/2) n!).
pub fn green_constant_b(n: u32, d: usize) -> f64 {
    let df = d as f64;
    let sign = if n % 2 == 0 { -1.0 } else { 1.0 };
    sign / (2f64.powi(2 * n as i32 + d as i32 - 1) * PI.powf(df / 2.0) * gamma(n as f64 + df / 2.0) * factorial(n as usize))
}

fn near_integer(x: f64) -> Option<i64> {
    let r = x.round();
    if (x - r).abs() < 1e-12 {
        Some(r as i64)
    } else {
        None
    }
}

/// Green kernel of the fractional Laplacian (−Δ)^{α/2} in dimension d.
pub fn green_kernel(alpha: f64, d: usize) -> Result<GreenKernel> {
    if d == 0 {
        return Err(Error::InvalidParameter { profile: "green".into(), msg: "dimension must be ≥ 1".into() });
    }
    if !alpha.is_finite() {
        return Err(Error::InvalidParameter { profile: "green".into(), msg: "alpha must be finite".into() });
    }
    if alpha <= 0.0 {
        return match near_integer(-alpha / 2.0) {
            Some(_) => Err(Error::DistributionalKernel { alpha }),
            None => Err(Error::InvalidParameter { profile: "green".into(), msg: format!("alpha = {alpha} must be positive") }),
        };
    }
    let half_gap = (alpha - d as f64) / 2.0;
    let law = match near_integer(half_gap) {
        Some(n) if n >= 0 => GreenLaw::Log { coef: green_constant_b(n as u32, d), n: n as u32 },
        _ => GreenLaw::Power { coef: green_constant_a(alpha, d), exponent: alpha - d as f64 },
    };
    Ok(GreenKernel { alpha, d, law })
}

// ---------------------------------------------------------------------------
// Activations
// ---------------------------------------------------------------------------

/// Closed-form activation in the printed normalization (global scales are absorbed
/// by output weights).
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub enum ClosedForm {
    /// e^{−|t|}
    Exponential,
    /// tanh(t/2)/2 = 1/(1+e^{−t}) − 1/2
    HalfTanh,
    /// arctan(t)/π
    ArctanOverPi,
    /// |t|^k / (2·k!)
    HalfAbsPower { k: u32 },
    /// sign(t)|t|^k / k!
    SignPower { k: u32 },
    /// coef · t^k log|t|
    LogPower { k: u32, coef: f64 },
    /// |t|^α sin(απ/2) / (π Γ(α))
    FractionalSymmetric { alpha: f64 },
    /// sign(t)|t|^α cos(απ/2) / (π Γ(α))
    FractionalAntisymmetric { alpha: f64 },
    /// Green kernel of (−Δ)^{α/2} in one dimension.
    Green(GreenKernel),
}

impl ClosedForm {
    pub fn eval(&self, t: f64) -> f64 {
        let a = t.abs();
        let sg = if t > 0.0 {
            1.0
        } else if t < 0.0 {
            -1.0
        } else {
            0.0
        };
        match self {
            ClosedForm::Exponential => (-a).exp(),
            ClosedForm::HalfTanh => 0.5 * (0.5 * t).tanh(),
            ClosedForm::ArctanOverPi => t.atan() / PI,
            ClosedForm::HalfAbsPower { k } => a.powi(*k as i32) / (2.0 * factorial(*k as usize)),
            ClosedForm::SignPower { k } => sg * a.powi(*k as i32) / factorial(*k as usize),
            ClosedForm::LogPower { k, coef } => {
                if a == 0.0 {
                    0.0
                } else {
                    coef * t.powi(*k as i32) * a.ln()
                }
            }
            ClosedForm::FractionalSymmetric { alpha } => {
                a.powf(*alpha) * (alpha * PI / 2.0).sin() / (PI * gamma(*alpha))
            }
            ClosedForm::FractionalAntisymmetric { alpha } => {
                sg * a.powf(*alpha) * (alpha * PI / 2.0).cos() / (PI * gamma(*alpha))
            }
            ClosedForm::Green(g) => g.eval(a),
        }
    }

    pub fn tag(&self) -> String {
        match self {
            ClosedForm::Exponential => "exp(-|t|)".into(),
            ClosedForm::HalfTanh => "tanh(t/2)/2".into(),
            ClosedForm::ArctanOverPi => "arctan(t)/pi".into(),
            ClosedForm::HalfAbsPower { k } => format!("|t|^{k}/(2*{k}!)"),
            ClosedForm::SignPower { k } => format!("sign(t)|t|^{k}/{k}!"),
            ClosedForm::LogPower { k, coef } => format!("{coef:.6e} t^{k} log|t|"),
            ClosedForm::FractionalSymmetric { alpha } => format!("|t|^{alpha} sin({alpha}pi/2)/(pi Gamma({alpha}))"),
            ClosedForm::FractionalAntisymmetric { alpha } => {
                format!("sign(t)|t|^{alpha} cos({alpha}pi/2)/(pi Gamma({alpha}))")
            }
            ClosedForm::Green(g) => g.tag(),
        }
    }
}

fn ridge_closed_form(m: u32, parity: Parity) -> ClosedForm {
    let k = m - 1;
    match (parity, m % 2) {
        (Parity::Even, 0) => ClosedForm::HalfAbsPower { k },
        (Parity::Even, _) => ClosedForm::LogPower { k, coef: green_constant_b(k / 2, 1) },
        (Parity::Odd, 1) => ClosedForm::SignPower { k },
        (Parity::Odd, _) => {
            // t log|t| is printed without a constant; higher orders use the exact one.
            let coef = if m == 2 {
                1.0
            } else {
                let s = if (m / 2) % 2 == 1 { 1.0 } else { -1.0 };
                s / (PI * factorial(k as usize))
            };
            ClosedForm::LogPower { k, coef }
        }
    }
}

/// Closed form for catalog profiles, when one exists.
pub fn closed_form_for(profile: &OperatorProfile, parity: Parity) -> Option<ClosedForm> {
    match (&profile.kind, parity) {
        (ProfileKind::Exponential, Parity::Even) => Some(ClosedForm::Exponential),
        (ProfileKind::TanhSigmoid, Parity::Odd) => Some(ClosedForm::HalfTanh),
        (ProfileKind::ArctanSigmoid, Parity::Odd) => Some(ClosedForm::ArctanOverPi),
        (ProfileKind::RidgeSpline { m }, p) => Some(ridge_closed_form(*m, p)),
        (ProfileKind::FractionalSpline { alpha }, Parity::Even) => {
            Some(ClosedForm::FractionalSymmetric { alpha: *alpha })
        }
        (ProfileKind::FractionalSpline { alpha }, Parity::Odd) => {
            Some(ClosedForm::FractionalAntisymmetric { alpha: *alpha })
        }
        (ProfileKind::FractionalLaplacian { alpha }, Parity::Even) => green_kernel(*alpha, 1).ok().map(ClosedForm::Green),
        (ProfileKind::FractionalLaplacian { alpha }, Parity::Odd) => match near_integer(*alpha) {
            Some(m) if m >= 2 => Some(ridge_closed_form(m as u32, Parity::Odd)),
            Some(_) => None,
            None if *alpha > 1.0 => Some(ClosedForm::FractionalAntisymmetric { alpha: alpha - 1.0 }),
            None => None,
        },
        _ => None,
    }
}

/// 1D activation, closed-form or tabulated.
#[derive(Debug, Clone)]
pub struct Activation {
    pub profile: OperatorProfile,
    pub parity: Parity,
    pub n0: i32,
    pub closed_form: Option<ClosedForm>,
    pub table: Option<UniformTable>,
}

impl Activation {
    pub fn eval(&self, t: f64) -> f64 {
        if let Some(cf) = &self.closed_form {
            return cf.eval(t);
        }
        let table = self.table.as_ref().expect("activation has a closed form or a table");
        if table.contains(t) {
            return table.eval(t);
        }
        // Extrapolate by the dominant power law |t|^{γ0−1}.
        let edge = if t > 0.0 { table.x_max() } else { table.x0 };
        let v = table.eval(edge);
        v * (t / edge).abs().powf(self.profile.gamma0 - 1.0)
    }

    /// Name of the closed form used for evaluation, or "tabulated".
    pub fn formula(&self) -> String {
        self.closed_form.as_ref().map(|c| c.tag()).unwrap_or_else(|| "tabulated".into())
    }

    /// k-th derivative of the canonical representative F⁻¹{(jω)^k m(ω)/L̂} by spectral
    /// differentiation, where m = 1 (even) or j·sign(ω) (odd).
    pub fn derivative(&self, k: usize, ts: &[f64]) -> Result<Vec<f64>> {
        if k as i32 > self.n0 + 1 {
            return Err(Error::DerivativeBudget { order: k, max: (self.n0 + 1).max(0) as usize });
        }
        if self.profile.gamma1 - k as f64 <= 1.0 {
            return Err(Error::Unsupported(format!("derivative of order {k} is not a function")));
        }
        let (parity, sign) = match (self.parity, k % 2) {
            (Parity::Even, 0) => (Parity::Even, if (k / 2) % 2 == 0 { 1.0 } else { -1.0 }),
            (Parity::Even, _) => (Parity::Odd, if ((k - 1) / 2) % 2 == 0 { 1.0 } else { -1.0 }),
            (Parity::Odd, 0) => (Parity::Odd, if (k / 2) % 2 == 0 { 1.0 } else { -1.0 }),
            (Parity::Odd, _) => (Parity::Even, if ((k + 1) / 2) % 2 == 0 { 1.0 } else { -1.0 }),
        };
        let p = self.profile.clone();
        let kk = k as i32;
        let t_max = ts.iter().fold(1.0f64, |m, t| m.max(t.abs()));
        let engine = SpectralInverse::new(Arc::new(move |w: f64| sign * w.powi(kk) * p.inv(w)), self.n0 - kk, t_max)?;
        Ok(par::map(ts, |&t| engine.inverse(t, parity)))
    }
}

/// Admissibility and pole-order checks shared by all synthesis paths.
pub fn ensure_admissible(profile: &OperatorProfile) -> Result<()> {
    let rep = check_admissibility(profile, &FrequencyGrid::default())?;
    if !rep.is_admissible {
        return Err(Error::NotAdmissible { name: profile.name.clone(), violations: rep.violations });
    }
    if profile.gamma0 > profile.n0 as f64 + 1.0 + 1e-12 {
        return Err(Error::PoleOrder { gamma0: profile.gamma0, limit: (profile.n0 + 1) as f64 });
    }
    Ok(())
}

/// Spectral engine for F⁻¹{1/L̂} with the profile's own correction order.
pub fn activation_engine(profile: &OperatorProfile, t_max: f64) -> Result<SpectralInverse> {
    let p = profile.clone();
    SpectralInverse::new(Arc::new(move |w: f64| p.inv(w)), profile.n0, t_max)
}

fn tabulate(engine: &SpectralInverse, parity: Parity, grid: &TGrid) -> UniformTable {
    let n = grid.samples;
    let h = 2.0 * grid.t_max / n as f64;
    let half = n / 2;
    let right: Vec<f64> = par::map_range(n - half + 1, |i| engine.inverse((half + i) as f64 * h - grid.t_max, parity));
    let mut values = vec![0.0; n + 1];
    for (i, v) in right.iter().enumerate() {
        values[half + i] = *v;
    }
    // Mirror so parity holds exactly on the grid.
    for i in 0..half {
        let src = values[n - i];
        values[i] = if parity == Parity::Even { src } else { -src };
    }
    if parity == Parity::Odd && n % 2 == 0 {
        values[half] = 0.0;
    }
    UniformTable { x0: -grid.t_max, h, values }
}

/// Numerical synthesis on the grid, ignoring any closed form.
pub fn synth_numeric(profile: &OperatorProfile, parity: Parity, grid: &TGrid) -> Result<Activation> {
    ensure_admissible(profile)?;
    if parity == Parity::Odd && profile.n0 < 0 {
        return Err(Error::Unsupported("antisymmetric activation requires n0 ≥ 0".into()));
    }
    if grid.samples < 2 || grid.samples % 2 != 0 || grid.t_max <= 0.0 {
        return Err(Error::GridTooCoarse("t-grid needs an even sample count and t_max > 0".into()));
    }
    let engine = activation_engine(profile, grid.t_max)?;
    Ok(Activation {
        profile: profile.clone(),
        parity,
        n0: profile.n0,
        closed_form: None,
        table: Some(tabulate(&engine, parity, grid)),
    })
}

fn synth(profile: &OperatorProfile, parity: Parity, grid: &TGrid) -> Result<Activation> {
    ensure_admissible(profile)?;
    if parity == Parity::Odd && profile.n0 < 0 {
        return Err(Error::Unsupported("antisymmetric activation requires n0 ≥ 0".into()));
    }
    match closed_form_for(profile, parity) {
        Some(cf) => Ok(Activation { profile: profile.clone(), parity, n0: profile.n0, closed_form: Some(cf), table: None }),
        None => synth_numeric(profile, parity, grid),
    }
}

/// ρ_rad = F⁻¹{1/L̂_rad}.
pub fn synth_symmetric(profile: &OperatorProfile, grid: &TGrid) -> Result<Activation> {
    synth(profile, Parity::Even, grid)
}

/// ρ̃_rad = F⁻¹{j·sign(ω)/L̂_rad}.
pub fn synth_antisymmetric(profile: &OperatorProfile, grid: &TGrid) -> Result<Activation> {
    synth(profile, Parity::Odd, grid)
}

// ---------------------------------------------------------------------------
// Isotropic kernels
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelMode {
    Radon,
    Classical,
}

impl std::str::FromStr for KernelMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "radon" => Ok(KernelMode::Radon),
            "classical" => Ok(KernelMode::Classical),
            _ => Err(Error::Unsupported(format!("kernel mode '{s}'"))),
        }
    }
}

#[derive(Debug, Clone)]
pub enum RadialLaw {
    Green { kernel: GreenKernel, scale: f64 },
    Table { table: UniformTable, tail_exponent: f64 },
}

/// Radial kernel ρ_iso(x) = φ(‖x‖).
#[derive(Debug, Clone)]
pub struct IsotropicKernel {
    pub d: usize,
    pub mode: KernelMode,
    pub profile_name: String,
    pub law: RadialLaw,
    /// Order β of the spectral pole ‖ω‖^{−β} at the origin.
    pub pole_order: f64,
    /// Polynomial degree needed for conditional positive-definiteness (−1 if none).
    pub poly_degree: i32,
}

impl IsotropicKernel {
    /// Pure power or log law with an explicit scale; used for hand-built kernels.
    pub fn from_green(kernel: GreenKernel, scale: f64, mode: KernelMode, name: &str) -> Self {
        let pole = kernel.alpha;
        IsotropicKernel {
            d: kernel.d,
            mode,
            profile_name: name.to_string(),
            law: RadialLaw::Green { kernel, scale },
            pole_order: pole,
            poly_degree: kernel_poly_degree(pole, kernel.d),
        }
    }

    pub fn eval(&self, r: f64) -> f64 {
        let r = r.abs();
        match &self.law {
            RadialLaw::Green { kernel, scale } => scale * kernel.eval(r),
            RadialLaw::Table { table, tail_exponent } => {
                if r <= table.x_max() {
                    table.eval(r)
                } else {
                    table.eval(table.x_max()) * (r / table.x_max()).powf(*tail_exponent)
                }
            }
        }
    }

    pub fn eval_diff(&self, x: &[f64], y: &[f64]) -> f64 {
        let r2: f64 = x.iter().zip(y).map(|(a, b)| (a - b).powi(2)).sum();
        self.eval(r2.sqrt())
    }

    pub fn conditionally_pd_order(&self) -> i32 {
        self.poly_degree + 1
    }

    pub fn closed_form(&self) -> Option<String> {
        match &self.law {
            RadialLaw::Green { kernel, scale } => Some(format!("{scale:.6e} * ({})", kernel.tag())),
            RadialLaw::Table { .. } => None,
        }
    }
}

/// Polynomial degree ⌊(β − d)/2⌋ that makes a kernel with spectral pole ‖ω‖^{−β}
/// conditionally positive-definite; −1 when β < d.
pub fn kernel_poly_degree(beta: f64, d: usize) -> i32 {
    let g = (beta - d as f64) / 2.0;
    if g < 0.0 {
        -1
    } else {
        (g + 1e-12).floor() as i32
    }
}

/// Radial kernel for the p = 2 problem (radon mode) or the L2 isometry variant
/// (classical mode).
pub fn synth_rbf_kernel(profile: &OperatorProfile, d: usize, mode: KernelMode) -> Result<IsotropicKernel> {
    ensure_admissible(profile)?;
    if d == 0 {
        return Err(Error::Unsupported("dimension 0".into()));
    }
    let df = d as f64;
    let (scale, beta) = match mode {
        KernelMode::Radon => (2.0 * (2.0 * PI).powi(d as i32 - 1), 2.0 * profile.gamma0 + df - 1.0),
        KernelMode::Classical => (1.0, 2.0 * profile.gamma0),
    };
    if let Some(b) = profile.power_exponent() {
        let alpha = match mode {
            KernelMode::Radon => 2.0 * b + df - 1.0,
            KernelMode::Classical => 2.0 * b,
        };
        let kernel = green_kernel(alpha, d)?;
        return Ok(IsotropicKernel {
            d,
            mode,
            profile_name: profile.name.clone(),
            law: RadialLaw::Green { kernel, scale },
            pole_order: alpha,
            poly_degree: kernel_poly_degree(alpha, d),
        });
    }
    let p = profile.clone();
    let spectrum: Arc<dyn Fn(f64) -> f64 + Send + Sync> = Arc::new(move |w: f64| {
        let v = p.inv(w);
        let radial = match mode {
            KernelMode::Radon => w.powi(d as i32 - 1),
            KernelMode::Classical => 1.0,
        };
        scale * v * v / radial
    });
    let r_max = 32.0;
    let n = 1024;
    let h = r_max / n as f64;
    let values = match d {
        1 => {
            let order = n0_from_gamma0(beta);
            if order > MAX_CORRECTION_DEGREE {
                return Err(Error::PoleOrder { gamma0: beta, limit: MAX_CORRECTION_DEGREE as f64 });
            }
            let engine = SpectralInverse::new(spectrum, order, r_max)?;
            par::map_range(n + 1, |i| engine.inverse(i as f64 * h, Parity::Even))
        }
        2 => {
            let kmax = ((beta - 2.0) / 2.0 + 1e-12).floor() as i32;
            if 2 * kmax > MAX_CORRECTION_DEGREE {
                return Err(Error::PoleOrder { gamma0: beta, limit: MAX_CORRECTION_DEGREE as f64 });
            }
            par::map_range(n + 1, |i| hankel0_regularized(&*spectrum, kmax, i as f64 * h))
        }
        _ => return Err(Error::Unsupported(format!("numerical kernels in dimension {d}"))),
    };
    Ok(IsotropicKernel {
        d,
        mode,
        profile_name: profile.name.clone(),
        law: RadialLaw::Table { table: UniformTable { x0: 0.0, h, values }, tail_exponent: beta - df },
        pole_order: beta,
        poly_degree: kernel_poly_degree(beta, d),
    })
}

/// J0(x) − Σ_{i ≤ kmax} (−1)^i (x/2)^{2i}/(i!)².
fn j0_remainder(x: f64, kmax: i32) -> f64 {
    if kmax < 0 {
        return bessel_j0(x);
    }
    let q = -0.25 * x * x;
    if x.abs() < 2.0 {
        let mut term = 1.0;
        for i in 1..=(kmax + 1) {
            term *= q / (i as f64 * i as f64);
        }
        let mut sum = 0.0;
        let mut i = kmax + 1;
        loop {
            sum += term;
            i += 1;
            term *= q / (i as f64 * i as f64);
            if term.abs() <= 1e-18 * sum.abs() || i > kmax + 60 {
                break;
            }
        }
        sum
    } else {
        bessel_j0(x) - j0_taylor(x, kmax)
    }
}

fn j0_taylor(x: f64, kmax: i32) -> f64 {
    let q = -0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 0.0;
    for i in 0..=kmax {
        if i > 0 {
            term *= q / (i as f64 * i as f64);
        }
        sum += term;
    }
    sum
}

/// (1/2π) ∫_0^∞ [J0(ρr) − κ̂(ρ) T_kmax(ρr)] G(ρ) ρ dρ.
pub fn hankel0_regularized(g: &dyn Fn(f64) -> f64, kmax: i32, r: f64) -> f64 {
    let (gx, gw) = gauss_legendre(8);
    let mut acc = 0.0;
    let panel = |a: f64, b: f64, acc: &mut f64| {
        let (c, hw) = (0.5 * (a + b), 0.5 * (b - a));
        for (xi, wi) in gx.iter().zip(&gw) {
            let rho = c + hw * xi;
            let k = kappa_hat(rho);
            let x = rho * r;
            let num = if k == 1.0 {
                j0_remainder(x, kmax)
            } else if k == 0.0 {
                bessel_j0(x)
            } else {
                bessel_j0(x) - k * j0_taylor(x, kmax)
            };
            *acc += hw * wi * num * g(rho) * rho;
        }
    };
    // Low band [0, 1] with geometric refinement at the origin.
    let width = (1.0 / 128.0f64).min(0.5 / r.max(1e-300));
    let mut edges: Vec<f64> = (0..30).rev().map(|k| 2f64.powi(-(k as i32)) * width).collect();
    edges.insert(0, 0.0);
    let mut x = width;
    while x < 1.0 - 1e-12 {
        x += width;
        edges.push(x.min(1.0));
    }
    for b in [0.5, crate::nullspace::WINDOW_STOP] {
        if !edges.iter().any(|e| (e - b).abs() < 1e-12) {
            edges.push(b);
        }
    }
    edges.sort_by(|a, b| a.partial_cmp(b).unwrap());
    edges.dedup();
    for w in edges.windows(2) {
        panel(w[0], w[1], &mut acc);
    }
    // Middle band up to where the Bessel asymptotics take over.
    let split = if r > 0.0 { (30.0 / r).max(1.0) } else { f64::INFINITY };
    let mut a = 1.0f64;
    while a < split && a < 1e12 {
        let step = (0.1 * a).min(if r > 0.0 { 0.5 / r } else { f64::INFINITY });
        let b = (a + step).min(split);
        panel(a, b, &mut acc);
        a = b;
        if g(a) * a * a < 1e-18 {
            return acc / (2.0 * PI);
        }
    }
    if r == 0.0 || a >= 1e12 {
        return acc / (2.0 * PI);
    }
    // High band: J0(ρr) = Re[B(ρr) e^{jρr}] with a slowly varying amplitude B.
    let amp = |rho: f64| -> Complex64 {
        let x = rho * r;
        let (p, q) = bessel_pq(0, x);
        Complex64::new(p, q) * Complex64::from_polar((2.0 / (PI * x)).sqrt(), -0.25 * PI) * (g(rho) * rho)
    };
    let mut hi = Complex64::new(0.0, 0.0);
    let mut aa = amp(a);
    while a < 1e12 {
        let b = a * 1.02;
        let c = 0.5 * (a + b);
        let hw = 0.5 * (b - a);
        let (am, bb) = (amp(c), amp(b));
        let p = [am, 0.5 * (bb - aa), 0.5 * (bb + aa) - am];
        let m = filon_moments(hw * r);
        hi += Complex64::from_polar(hw, c * r) * (m[0] * p[0] + m[1] * p[1] + m[2] * p[2]);
        a = b;
        aa = bb;
        if bb.norm() * b < 1e-18 {
            break;
        }
    }
    // Leading integration-by-parts term of the remaining tail.
    hi += -aa * Complex64::from_polar(1.0, a * r) / Complex64::new(0.0, r);
    (acc + hi.re) / (2.0 * PI)
}
