//! CSV datasets and JSON model files.

use std::io::Read;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::activations::{synth_antisymmetric, synth_rbf_kernel, synth_symmetric, KernelMode, TGrid};
use crate::catalog::{catalog_profile, OperatorProfile};
use crate::error::{Error, Result};
use crate::lp::{LpGrid, LpModel, LpSystem, Psi};
use crate::nullspace::Polynomial;
use crate::rbf::RbfModel;
use crate::sparse::{NeuralModel, RidgeAtom};
use crate::spectral::Parity;

pub const SCHEMA_VERSION: u32 = 1;

/// Samples (x_m, y_m) with x_m ∈ ℝ^d.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub d: usize,
    pub x: Vec<Vec<f64>>,
    pub y: Vec<f64>,
    pub source: String,
}

/// Feature columns must be x1..xd; the target column y is optional when `need_y` is false.
fn check_header(header: &csv::StringRecord, need_y: bool) -> Result<(usize, bool)> {
    let cols: Vec<&str> = header.iter().map(|c| c.trim()).collect();
    let has_y = cols.last() == Some(&"y");
    let d = if has_y { cols.len() - 1 } else { cols.len() };
    if need_y && !has_y {
        return Err(Error::Data("header must end with a `y` column".into()));
    }
    if d == 0 {
        return Err(Error::Data("header has no feature columns".into()));
    }
    for (i, c) in cols[..d].iter().enumerate() {
        if *c != format!("x{}", i + 1) {
            return Err(Error::Data(format!("header column {} is `{c}`, expected `x{}`", i + 1, i + 1)));
        }
    }
    Ok((d, has_y))
}

/// Parses CSV text with header x1..xd[,y]. Without a y column, `y` is empty.
pub fn parse_dataset(reader: impl Read, source: &str, need_y: bool) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let header = rdr.headers().map_err(|e| Error::Data(format!("{source}: {e}")))?.clone();
    if header.is_empty() {
        return Err(Error::Data(format!("{source}: empty file")));
    }
    let (d, has_y) = check_header(&header, need_y).map_err(|e| Error::Data(format!("{source}: {e}")))?;
    let mut x = Vec::new();
    let mut y = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Data(format!("{source}: {e}")))?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        if rec.len() != header.len() {
            return Err(Error::Data(format!("{source}: line {line}: expected {} fields, found {}", header.len(), rec.len())));
        }
        let mut row = Vec::with_capacity(rec.len());
        for (j, cell) in rec.iter().enumerate() {
            let v: f64 = cell
                .parse()
                .map_err(|_| Error::Data(format!("{source}: line {line}, column `{}`: `{cell}` is not a number", &header[j])))?;
            if !v.is_finite() {
                return Err(Error::Data(format!("{source}: line {line}, column `{}`: non-finite value `{cell}`", &header[j])));
            }
            row.push(v);
        }
        if has_y {
            y.push(row.pop().expect("row has a y cell"));
        }
        x.push(row);
    }
    if x.is_empty() {
        return Err(Error::Data(format!("{source}: no data rows")));
    }
    if !need_y && !has_y {
        y.clear();
    }
    Ok(Dataset { d, x, y, source: source.to_string() })
}

pub fn load_dataset(path: &Path, need_y: bool) -> Result<Dataset> {
    let file = std::fs::File::open(path)?;
    parse_dataset(file, &path.display().to_string(), need_y)
}

/// CSV text with header x1..xd,y.
pub fn dataset_to_csv(x: &[Vec<f64>], y: &[f64]) -> String {
    let d = x.first().map(|r| r.len()).unwrap_or(0);
    let mut out: Vec<String> = (1..=d).map(|i| format!("x{i}")).collect();
    out.push("y".into());
    let mut s = out.join(",") + "\n";
    for (row, v) in x.iter().zip(y) {
        let cells: Vec<String> = row.iter().chain(std::iter::once(v)).map(|c| format!("{c:?}")).collect();
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    s
}

/// Mode-specific contents of a model file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum Payload {
    Rbf {
        kernel_mode: KernelMode,
        lambda: f64,
        kernel_sign: f64,
        centers: Vec<Vec<f64>>,
        coeffs: Vec<f64>,
        poly: Vec<f64>,
    },
    Mnorm {
        parity: Parity,
        lambda: f64,
        atoms: Vec<RidgeAtom>,
        poly: Vec<f64>,
    },
    Lp {
        p: f64,
        psi: Psi,
        lambda: f64,
        grid: LpGrid,
        centers: Vec<Vec<f64>>,
        coeffs: Vec<f64>,
        poly: Vec<f64>,
    },
}

/// Serialized model; the kernel or activation is rebuilt from the profile on load.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub schema_version: u32,
    pub profile: String,
    pub params: Vec<f64>,
    pub antisymmetric: bool,
    pub n0: i32,
    pub d: usize,
    #[serde(flatten)]
    pub payload: Payload,
}

/// A loaded model ready for prediction.
#[derive(Debug, Clone)]
pub enum Model {
    Rbf(RbfModel),
    Mnorm(NeuralModel),
    Lp(LpModel),
}

impl Model {
    pub fn d(&self) -> usize {
        match self {
            Model::Rbf(m) => m.d(),
            Model::Mnorm(m) => m.poly.d,
            Model::Lp(_) => 2,
        }
    }

    pub fn predict_batch(&self, xs: &[Vec<f64>]) -> Result<Vec<f64>> {
        match self {
            Model::Rbf(m) => m.predict_batch(xs),
            Model::Mnorm(m) => m.predict_batch(xs),
            Model::Lp(m) => m.predict_batch(xs),
        }
    }
}

fn header(profile: &OperatorProfile, n0: i32, d: usize, payload: Payload) -> ModelFile {
    ModelFile {
        schema_version: SCHEMA_VERSION,
        profile: profile.name.clone(),
        params: profile.params.clone(),
        antisymmetric: profile.antisymmetric_variant,
        n0,
        d,
        payload,
    }
}

impl ModelFile {
    pub fn from_rbf(profile: &OperatorProfile, m: &RbfModel) -> Self {
        let payload = Payload::Rbf {
            kernel_mode: m.kernel.mode,
            lambda: m.lambda,
            kernel_sign: m.kernel_sign,
            centers: m.centers.clone(),
            coeffs: m.coeffs.clone(),
            poly: m.poly.coeffs.clone(),
        };
        header(profile, m.n0(), m.d(), payload)
    }

    pub fn from_mnorm(profile: &OperatorProfile, m: &NeuralModel) -> Self {
        let payload = Payload::Mnorm {
            parity: m.activation.parity,
            lambda: m.lambda,
            atoms: m.atoms.clone(),
            poly: m.poly.coeffs.clone(),
        };
        header(profile, m.poly.n0, m.poly.d, payload)
    }

    pub fn from_lp(profile: &OperatorProfile, m: &LpModel) -> Self {
        let payload = Payload::Lp {
            p: m.p,
            psi: m.psi,
            lambda: m.lambda,
            grid: m.grid,
            centers: m.centers.clone(),
            coeffs: m.coeffs.clone(),
            poly: m.poly.coeffs.clone(),
        };
        header(profile, m.poly.n0, 2, payload)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let v: serde_json::Value = serde_json::from_str(text)?;
        match v.get("schema_version").and_then(|s| s.as_u64()) {
            Some(s) if s == SCHEMA_VERSION as u64 => {}
            Some(s) => return Err(Error::Data(format!("schema_version {s} is not supported (expected {SCHEMA_VERSION})"))),
            None => return Err(Error::Data("model file has no schema_version".into())),
        }
        Ok(serde_json::from_value(v)?)
    }

    pub fn profile(&self) -> Result<OperatorProfile> {
        Ok(catalog_profile(&self.profile, &self.params)?.with_antisymmetric(self.antisymmetric))
    }

    /// Rebuilds the kernel, activation or Radon system and checks stored sizes.
    pub fn into_model(self) -> Result<Model> {
        let profile = self.profile()?;
        let n0_matches = || -> Result<()> {
            if profile.n0 != self.n0 {
                return Err(Error::Data(format!("stored n0 = {} but the profile gives {}", self.n0, profile.n0)));
            }
            Ok(())
        };
        let check_centers = |centers: &[Vec<f64>], coeffs: &[f64]| -> Result<()> {
            if centers.len() != coeffs.len() {
                return Err(Error::DimensionMismatch { expected: centers.len(), got: coeffs.len() });
            }
            match centers.iter().find(|c| c.len() != self.d) {
                Some(c) => Err(Error::DimensionMismatch { expected: self.d, got: c.len() }),
                None => Ok(()),
            }
        };
        match self.payload {
            Payload::Rbf { kernel_mode, lambda, kernel_sign, centers, coeffs, poly } => {
                check_centers(&centers, &coeffs)?;
                let kernel = synth_rbf_kernel(&profile, self.d, kernel_mode)?;
                let poly = Polynomial::from_coeffs(self.d, self.n0, poly)?;
                Ok(Model::Rbf(RbfModel { centers, coeffs, poly, kernel, kernel_sign, lambda }))
            }
            Payload::Mnorm { parity, lambda, atoms, poly } => {
                n0_matches()?;
                if let Some(a) = atoms.iter().find(|a| a.xi.len() != self.d) {
                    return Err(Error::DimensionMismatch { expected: self.d, got: a.xi.len() });
                }
                let activation = match parity {
                    Parity::Even => synth_symmetric(&profile, &TGrid::default())?,
                    Parity::Odd => synth_antisymmetric(&profile, &TGrid::default())?,
                };
                let poly = Polynomial::from_coeffs(self.d, self.n0, poly)?;
                let k0_bound = atoms.len();
                Ok(Model::Mnorm(NeuralModel {
                    atoms,
                    poly,
                    activation,
                    lambda,
                    history: Vec::new(),
                    duality_gap: f64::NAN,
                    iterations: 0,
                    k0_bound,
                }))
            }
            Payload::Lp { p, psi, lambda, grid, centers, coeffs, poly } => {
                if self.d != 2 {
                    return Err(Error::DimensionMismatch { expected: 2, got: self.d });
                }
                n0_matches()?;
                check_centers(&centers, &coeffs)?;
                let system = Arc::new(LpSystem::new(&profile, &centers, p, grid)?);
                let poly = Polynomial::from_coeffs(2, self.n0, poly)?;
                Ok(Model::Lp(LpModel::from_parts(system, coeffs, poly, lambda, psi)))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_two_column_file() {
        let ds = parse_dataset("x1,y\n0,1\n2.5,-3\n".as_bytes(), "mem", true).unwrap();
        assert_eq!(ds.d, 1);
        assert_eq!(ds.x, vec![vec![0.0], vec![2.5]]);
        assert_eq!(ds.y, vec![1.0, -3.0]);
    }

    #[test]
    fn three_rows_in_two_dims() {
        let ds = parse_dataset("x1,x2,y\n0,1,2\n1,1,1\n2,0,0\n".as_bytes(), "mem", true).unwrap();
        assert_eq!((ds.d, ds.x.len()), (2, 3));
    }

    #[test]
    fn inf_cell_is_named() {
        let err = parse_dataset("x1,y\n0,1\ninf,2\n".as_bytes(), "mem", true).unwrap_err().to_string();
        assert!(err.contains("line 3") && err.contains("x1") && err.contains("inf"), "{err}");
    }

    #[test]
    fn rejects_bad_input() {
        assert!(parse_dataset("".as_bytes(), "mem", true).is_err());
        assert!(parse_dataset("x1,y\n".as_bytes(), "mem", true).is_err());
        assert!(parse_dataset("a,y\n1,2\n".as_bytes(), "mem", true).is_err());
        assert!(parse_dataset("x1,y\n1,zz\n".as_bytes(), "mem", true).is_err());
        assert!(parse_dataset("x1,y\n1\n".as_bytes(), "mem", true).is_err());
    }

    #[test]
    fn features_only() {
        let ds = parse_dataset("x1,x2\n1,2\n".as_bytes(), "mem", false).unwrap();
        assert!(ds.y.is_empty());
        assert_eq!(ds.d, 2);
    }

    #[test]
    fn schema_version_is_checked() {
        let err = ModelFile::from_json(r#"{"schema_version": 99}"#).unwrap_err().to_string();
        assert!(err.contains("99"));
    }

    #[test]
    fn model_json_round_trips_exactly() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let mut r = || rng.gen_range(-1.0..1.0) * 10f64.powi(rng.gen_range(-300..300));
        let mf = ModelFile {
            schema_version: SCHEMA_VERSION,
            profile: "ridge_spline_m".into(),
            params: vec![2.0],
            antisymmetric: false,
            n0: 1,
            d: 2,
            payload: Payload::Rbf {
                kernel_mode: KernelMode::Radon,
                lambda: r(),
                kernel_sign: -1.0,
                centers: (0..50).map(|_| vec![r(), r()]).collect(),
                coeffs: (0..50).map(|_| r()).collect(),
                poly: vec![r(), r(), r()],
            },
        };
        let back = ModelFile::from_json(&mf.to_json().unwrap()).unwrap();
        assert_eq!(mf, back);
    }
}
