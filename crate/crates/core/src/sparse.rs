//! ℓ1-regularized ridge-atom expansions f(x) = p0(x) + Σ a_k ρ_rad(ξ_kᵀx − τ_k).

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::activations::Activation;
use crate::error::{Error, Result};
use crate::nullspace::{poly_design, poly_dim, Polynomial};
use crate::par;
use crate::spectral::Parity;

/// Weighted ridge atom a·ρ(ξᵀx − τ).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RidgeAtom {
    pub xi: Vec<f64>,
    pub tau: f64,
    pub weight: f64,
}

impl RidgeAtom {
    pub fn eval(&self, activation: &Activation, x: &[f64]) -> f64 {
        let t: f64 = self.xi.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() - self.tau;
        self.weight * activation.eval(t)
    }

    /// The equivalent atom at (−ξ, −τ): same weight for even activations, negated for odd ones.
    pub fn flipped(&self, parity: Parity) -> Self {
        let s = if parity == Parity::Even { 1.0 } else { -1.0 };
        RidgeAtom { xi: self.xi.iter().map(|v| -v).collect(), tau: -self.tau, weight: s * self.weight }
    }
}

/// Candidate (ξ, τ) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DictionaryEntry {
    pub xi: Vec<f64>,
    pub tau: f64,
}

/// Half-sphere directions: {+1} for d = 1, uniform angles on [0, π) for d = 2,
/// a Fibonacci lattice on the upper half-sphere otherwise.
pub fn directions(d: usize, n_dirs: usize) -> Vec<Vec<f64>> {
    match d {
        1 => vec![vec![1.0]],
        2 => (0..n_dirs)
            .map(|k| {
                let th = std::f64::consts::PI * k as f64 / n_dirs as f64;
                vec![th.cos(), th.sin()]
            })
            .collect(),
        _ => {
            let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
            (0..n_dirs)
                .map(|k| {
                    // z in (0, 1]: the upper half of the sphere.
                    let z = 1.0 - (k as f64 + 0.5) / n_dirs as f64;
                    let r = (1.0 - z * z).sqrt();
                    let th = golden * k as f64;
                    let mut v = vec![0.0; d];
                    v[0] = r * th.cos();
                    v[1] = r * th.sin();
                    v[d - 1] = z;
                    if d > 3 {
                        // Spread the remaining weight over the middle axes.
                        let w = r / ((d - 2) as f64).sqrt();
                        v[0] = w * th.cos();
                        v[1] = w * th.sin();
                        for (i, vi) in v.iter_mut().enumerate().take(d - 1).skip(2) {
                            *vi = w * (th * (i as f64)).cos();
                        }
                    }
                    let n = v.iter().map(|c| c * c).sum::<f64>().sqrt();
                    v.iter().map(|c| c / n).collect()
                })
                .collect()
        }
    }
}

/// Atoms at every direction and every data projection ξᵀx_m (deduplicated within 1e−9).
pub fn build_dictionary(xs: &[Vec<f64>], n_dirs: usize) -> Result<Vec<DictionaryEntry>> {
    let d = xs.first().map(|x| x.len()).ok_or_else(|| Error::Data("empty data set".into()))?;
    if n_dirs == 0 {
        return Err(Error::Data("need at least one direction".into()));
    }
    let mut out = Vec::new();
    for xi in directions(d, n_dirs) {
        let mut taus: Vec<f64> = xs.iter().map(|x| xi.iter().zip(x).map(|(a, b)| a * b).sum()).collect();
        taus.sort_by(|a, b| a.partial_cmp(b).unwrap());
        taus.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
        out.extend(taus.into_iter().map(|tau| DictionaryEntry { xi: xi.clone(), tau }));
    }
    Ok(out)
}

/// (ξ, τ, s) with ξ = w/‖w‖, τ = b/‖w‖ and s = ‖w‖^{γ0−1}.
pub fn homogeneity_normalize(w: &[f64], b: f64, gamma0: f64) -> Result<(Vec<f64>, f64, f64)> {
    let n = w.iter().map(|v| v * v).sum::<f64>().sqrt();
    if n == 0.0 {
        return Err(Error::Data("zero direction".into()));
    }
    Ok((w.iter().map(|v| v / n).collect(), b / n, n.powf(gamma0 - 1.0)))
}

/// Fitted ridge-atom expansion.
#[derive(Debug, Clone)]
pub struct NeuralModel {
    pub atoms: Vec<RidgeAtom>,
    pub poly: Polynomial,
    pub activation: Activation,
    pub lambda: f64,
    /// Objective after every iteration.
    pub history: Vec<f64>,
    pub duality_gap: f64,
    pub iterations: usize,
    /// Data-point count minus dim P_{n0}.
    pub k0_bound: usize,
}

impl NeuralModel {
    pub fn k0(&self) -> usize {
        self.atoms.len()
    }

    /// Σ|a_k|.
    pub fn reg_cost(&self) -> f64 {
        self.atoms.iter().map(|a| a.weight.abs()).sum()
    }

    pub fn certificate_ok(&self) -> bool {
        self.k0() <= self.k0_bound
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.poly.d {
            return Err(Error::DimensionMismatch { expected: self.poly.d, got: x.len() });
        }
        Ok(self.poly.eval(x) + self.atoms.iter().map(|a| a.eval(&self.activation, x)).sum::<f64>())
    }

    pub fn predict_batch(&self, xs: &[Vec<f64>]) -> Result<Vec<f64>> {
        xs.iter().map(|x| self.predict(x)).collect()
    }
}

/// Solver settings.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MnormOptions {
    pub max_iter: usize,
    /// Stop when the duality gap is below tol·max(1, objective).
    pub tol: f64,
    /// Random initial weights from this seed; zeros when absent.
    pub seed: Option<u64>,
    /// Least-squares re-solve on the surviving support.
    pub resolve: bool,
    pub prune: f64,
}

impl Default for MnormOptions {
    fn default() -> Self {
        MnormOptions { max_iter: 200_000, tol: 1e-13, seed: None, resolve: false, prune: 1e-10 }
    }
}

fn design_matrix(xs: &[Vec<f64>], dict: &[DictionaryEntry], activation: &Activation) -> DMatrix<f64> {
    let cols = par::map(dict, |e| {
        xs.iter()
            .map(|x| activation.eval(e.xi.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() - e.tau))
            .collect::<Vec<_>>()
    });
    DMatrix::from_fn(xs.len(), dict.len(), |i, k| cols[k][i])
}

fn soft(v: f64, t: f64) -> f64 {
    v.signum() * (v.abs() - t).max(0.0)
}

/// Minimizes Σ_m (y_m − f(x_m))² + λ Σ_k |a_k| with the polynomial part solved exactly.
pub fn fit_mnorm(
    xs: &[Vec<f64>],
    y: &[f64],
    activation: &Activation,
    n0: i32,
    lambda: f64,
    dict: &[DictionaryEntry],
    opts: &MnormOptions,
) -> Result<NeuralModel> {
    if xs.len() != y.len() {
        return Err(Error::DimensionMismatch { expected: xs.len(), got: y.len() });
    }
    let d = xs.first().map(|x| x.len()).ok_or_else(|| Error::Data("empty data set".into()))?;
    let m = xs.len();
    let dim = poly_dim(d, n0);
    if m < dim {
        return Err(Error::TooFewPoints { m, dim });
    }
    if !(lambda > 0.0) {
        return Err(Error::InvalidParameter { profile: "mnorm".into(), msg: format!("lambda {lambda} must be > 0") });
    }
    let phi = design_matrix(xs, dict, activation);
    let rows = poly_design(xs, d, n0);
    let p = DMatrix::from_fn(m, dim, |i, k| rows[i][k]);
    // Q spans range(P); eliminating b leaves (I − QQᵀ).
    let q = if dim > 0 {
        let svd = p.clone().svd(true, false);
        let smax = svd.singular_values.max();
        let rank = svd.singular_values.iter().filter(|s| **s > 1e-10 * smax.max(1.0)).count();
        if rank < dim {
            return Err(Error::NotUnisolvent { n0, rank, dim });
        }
        svd.u.unwrap().columns(0, dim).into_owned()
    } else {
        DMatrix::zeros(m, 0)
    };
    let project = |v: &DVector<f64>| -> DVector<f64> { v - &q * (q.transpose() * v) };
    let psi = DMatrix::from_columns(&phi.column_iter().map(|c| project(&c.into_owned())).collect::<Vec<_>>());
    let z = project(&DVector::from_column_slice(y));
    let n = dict.len();
    let lip = 2.0 * psi.clone().singular_values().max().powi(2).max(1e-300);

    let objective = |a: &DVector<f64>| -> f64 { (&z - &psi * a).norm_squared() + lambda * a.iter().map(|v| v.abs()).sum::<f64>() };
    let gap = |a: &DVector<f64>, obj: f64| -> f64 {
        let r = &z - &psi * a;
        let corr = (psi.transpose() * &r * 2.0).amax();
        let s = if corr > lambda { lambda / corr } else { 1.0 };
        let theta = &r * (2.0 * s);
        let dual = theta.dot(&z) - theta.norm_squared() / 4.0;
        obj - dual
    };

    let mut a = match opts.seed {
        Some(seed) => {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0))
        }
        None => DVector::zeros(n),
    };
    let mut obj = objective(&a);
    let mut history = vec![obj];
    let mut yk = a.clone();
    let mut tk = 1.0f64;
    let mut g = gap(&a, obj);
    let mut iters = 0;
    while iters < opts.max_iter && g > opts.tol * obj.max(1.0) {
        iters += 1;
        let grad = psi.transpose() * (&psi * &yk - &z) * 2.0;
        let zk = (&yk - grad / lip).map(|v| soft(v, lambda / lip));
        let oz = objective(&zk);
        let prev = a.clone();
        if oz <= obj {
            a = zk.clone();
            obj = oz;
        }
        let tn = 0.5 * (1.0 + (1.0 + 4.0 * tk * tk).sqrt());
        yk = &a + (&zk - &a) * (tk / tn) + (&a - &prev) * ((tk - 1.0) / tn);
        tk = tn;
        history.push(obj);
        if iters % 20 == 0 {
            g = gap(&a, obj);
        }
    }
    g = gap(&a, obj);
    if g > opts.tol * obj.max(1.0) * 1e3 {
        return Err(Error::NotConverged { iters, gap: g });
    }

    let support: Vec<usize> = (0..n).filter(|&k| a[k].abs() >= opts.prune).collect();
    let mut weights: Vec<f64> = support.iter().map(|&k| a[k]).collect();
    if opts.resolve && !support.is_empty() {
        let sub = DMatrix::from_columns(&support.iter().map(|&k| psi.column(k).into_owned()).collect::<Vec<_>>());
        if let Ok(sol) = sub.svd(true, true).solve(&z, 1e-12) {
            weights = sol.iter().cloned().collect();
        }
    }
    // Exact least squares for the polynomial on the residual.
    let fitted: DVector<f64> = support.iter().zip(&weights).fold(DVector::zeros(m), |acc, (&k, w)| acc + phi.column(k) * *w);
    let b = if dim > 0 {
        p.clone().svd(true, true).solve(&(DVector::from_column_slice(y) - fitted), 1e-12).map_err(|_| Error::Singular)?
    } else {
        DVector::zeros(0)
    };
    let atoms: Vec<RidgeAtom> = support
        .iter()
        .zip(&weights)
        .map(|(&k, &w)| RidgeAtom { xi: dict[k].xi.clone(), tau: dict[k].tau, weight: w })
        .collect();
    let model = NeuralModel {
        atoms,
        poly: Polynomial::from_coeffs(d, n0, b.iter().cloned().collect())?,
        activation: activation.clone(),
        lambda,
        history,
        duality_gap: g,
        iterations: iters,
        k0_bound: m - dim,
    };
    if !model.certificate_ok() {
        log::warn!("K0 = {} exceeds M − dim P = {}; the finite-dictionary solution is not extreme", model.k0(), model.k0_bound);
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_d_dictionary_uses_data_projections() {
        let xs = vec![vec![0.0], vec![1.0], vec![2.0], vec![1.0 + 1e-12]];
        let dict = build_dictionary(&xs, 7).unwrap();
        let taus: Vec<f64> = dict.iter().map(|e| e.tau).collect();
        assert_eq!(taus, vec![0.0, 1.0, 2.0]);
        assert!(dict.iter().all(|e| e.xi == vec![1.0]));
    }

    #[test]
    fn two_d_directions() {
        let dirs = directions(2, 4);
        let angles: Vec<f64> = dirs.iter().map(|v| v[1].atan2(v[0])).collect();
        for (a, e) in angles.iter().zip([0.0, 0.25, 0.5, 0.75]) {
            assert!((a - e * std::f64::consts::PI).abs() < 1e-12);
        }
    }

    #[test]
    fn fibonacci_directions_are_unit_and_upper() {
        for d in [3, 5] {
            for v in directions(d, 40) {
                assert!((v.iter().map(|c| c * c).sum::<f64>() - 1.0).abs() < 1e-12);
                assert!(v[d - 1] > 0.0);
            }
        }
    }

    #[test]
    fn homogeneity_example() {
        let (xi, tau, s) = homogeneity_normalize(&[3.0, 4.0], 5.0, 2.0).unwrap();
        assert!((xi[0] - 0.6).abs() < 1e-15 && (xi[1] - 0.8).abs() < 1e-15);
        assert!((tau - 1.0).abs() < 1e-15 && (s - 5.0).abs() < 1e-15);
        assert!(homogeneity_normalize(&[0.0, 0.0], 1.0, 2.0).is_err());
    }
}
