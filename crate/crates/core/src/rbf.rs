//! Kernel expansions f(x) = p0(x) + Σ a_m ρ_iso(x − x_m) with the side constraint Pᵀa = 0.

use nalgebra::{DMatrix, DVector};

use crate::activations::IsotropicKernel;
use crate::error::{Error, Result};
use crate::nullspace::{poly_design, poly_dim, Polynomial};

/// Fitted kernel expansion.
#[derive(Debug, Clone)]
pub struct RbfModel {
    pub centers: Vec<Vec<f64>>,
    pub coeffs: Vec<f64>,
    pub poly: Polynomial,
    pub kernel: IsotropicKernel,
    /// +1 when the kernel is used as given, −1 when it was negated to make it
    /// conditionally positive-definite.
    pub kernel_sign: f64,
    pub lambda: f64,
}

impl RbfModel {
    pub fn d(&self) -> usize {
        self.kernel.d
    }

    pub fn n0(&self) -> i32 {
        self.poly.n0
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.d() {
            return Err(Error::DimensionMismatch { expected: self.d(), got: x.len() });
        }
        let s: f64 = self.centers.iter().zip(&self.coeffs).map(|(c, a)| a * self.kernel.eval_diff(x, c)).sum();
        Ok(self.poly.eval(x) + self.kernel_sign * s)
    }

    pub fn predict_batch(&self, xs: &[Vec<f64>]) -> Result<Vec<f64>> {
        xs.iter().map(|x| self.predict(x)).collect()
    }

    /// Quadratic regularization cost aᵀGa.
    pub fn reg_cost(&self) -> f64 {
        let g = gram_unchecked(&self.centers, &self.kernel) * self.kernel_sign;
        let a = DVector::from_column_slice(&self.coeffs);
        a.dot(&(&g * &a))
    }

    /// Σ (f(x_m) − y_m)².
    pub fn training_loss(&self, xs: &[Vec<f64>], y: &[f64]) -> Result<f64> {
        Ok(self.predict_batch(xs)?.iter().zip(y).map(|(f, v)| (f - v).powi(2)).sum())
    }

    /// max_q |Σ a_m q(x_m)| over the Taylor basis of P_{n0}.
    pub fn constraint_residual(&self) -> f64 {
        let p = poly_design(&self.centers, self.d(), self.n0());
        (0..poly_dim(self.d(), self.n0()))
            .map(|k| p.iter().zip(&self.coeffs).map(|(row, a)| row[k] * a).sum::<f64>().abs())
            .fold(0.0, f64::max)
    }
}

fn gram_unchecked(centers: &[Vec<f64>], kernel: &IsotropicKernel) -> DMatrix<f64> {
    let m = centers.len();
    let mut g = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in 0..=i {
            let v = kernel.eval_diff(&centers[i], &centers[j]);
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
    g
}

fn check_distinct(centers: &[Vec<f64>]) -> Result<()> {
    for i in 0..centers.len() {
        for j in 0..i {
            if centers[i] == centers[j] {
                return Err(Error::DuplicateCenters(j, i));
            }
        }
    }
    Ok(())
}

/// G_mn = ρ_iso(x_m − x_n), exactly symmetric.
pub fn gram_matrix(centers: &[Vec<f64>], kernel: &IsotropicKernel) -> Result<DMatrix<f64>> {
    check_distinct(centers)?;
    for c in centers {
        if c.len() != kernel.d {
            return Err(Error::DimensionMismatch { expected: kernel.d, got: c.len() });
        }
    }
    Ok(gram_unchecked(centers, kernel))
}

/// Orthonormal basis Z of {a : Pᵀa = 0}; errors when P is rank deficient.
pub fn constraint_basis(p: &DMatrix<f64>, n0: i32) -> Result<DMatrix<f64>> {
    let (m, k) = p.shape();
    if k == 0 {
        return Ok(DMatrix::identity(m, m));
    }
    if m < k {
        return Err(Error::TooFewPoints { m, dim: k });
    }
    let svd = p.clone().svd(true, false);
    let smax = svd.singular_values.max();
    let rank = svd.singular_values.iter().filter(|s| **s > 1e-10 * smax.max(1.0)).count();
    if rank < k {
        return Err(Error::NotUnisolvent { n0, rank, dim: k });
    }
    // QR of [P | I]: the first k columns of Q span range(P), the rest its complement.
    let mut basis = p.clone().insert_columns(k, m, 0.0);
    for i in 0..m {
        basis[(i, k + i)] = 1.0;
    }
    let q = basis.qr().q();
    Ok(q.columns(k, m - k).into_owned())
}

fn poly_matrix(centers: &[Vec<f64>], d: usize, n0: i32) -> DMatrix<f64> {
    let rows = poly_design(centers, d, n0);
    let k = poly_dim(d, n0);
    DMatrix::from_fn(centers.len(), k, |i, j| rows[i][j])
}

/// Sign making ZᵀGZ positive semi-definite; errors are logged when it is indefinite.
fn kernel_sign(g: &DMatrix<f64>, z: &DMatrix<f64>) -> f64 {
    if z.ncols() == 0 {
        return 1.0;
    }
    let r = z.transpose() * g * z;
    let r = (&r + r.transpose()) * 0.5;
    let eig = r.symmetric_eigenvalues();
    let (lo, hi) = (eig.min(), eig.max());
    let scale = lo.abs().max(hi.abs()).max(1e-300);
    if lo >= -1e-9 * scale {
        1.0
    } else if hi <= 1e-9 * scale {
        log::info!("kernel is conditionally negative-definite on the constraint space; using its negative");
        -1.0
    } else {
        log::warn!("kernel is indefinite on the constraint space (eigenvalues {lo:.3e}..{hi:.3e})");
        1.0
    }
}

/// Solves A x = b by LU with a few steps of iterative refinement.
fn solve_refined(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let lu = a.clone().full_piv_lu();
    let mut x = lu.solve(b).ok_or(Error::Singular)?;
    for _ in 0..3 {
        let r = b - a * &x;
        match lu.solve(&r) {
            Some(dx) => x += dx,
            None => break,
        }
    }
    if !x.iter().all(|v| v.is_finite()) {
        return Err(Error::Singular);
    }
    Ok(x)
}

/// Reciprocal condition estimate from the singular values (small systems only).
fn condition_number(a: &DMatrix<f64>) -> Option<f64> {
    if a.nrows() > 600 {
        return None;
    }
    let s = a.clone().singular_values();
    let (lo, hi) = (s.min(), s.max());
    Some(if lo > 0.0 { hi / lo } else { f64::INFINITY })
}

fn validate(xs: &[Vec<f64>], y: &[f64], kernel: &IsotropicKernel, n0: i32, lambda: f64) -> Result<()> {
    if xs.len() != y.len() {
        return Err(Error::DimensionMismatch { expected: xs.len(), got: y.len() });
    }
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter { profile: kernel.profile_name.clone(), msg: format!("lambda {lambda} must be ≥ 0") });
    }
    let dim = poly_dim(kernel.d, n0);
    if xs.len() < dim.max(1) {
        return Err(Error::TooFewPoints { m: xs.len(), dim });
    }
    for x in xs {
        if x.len() != kernel.d {
            return Err(Error::DimensionMismatch { expected: kernel.d, got: x.len() });
        }
    }
    check_distinct(xs)
}

/// Solves (G + λI)a + Pb = y, Pᵀa = 0 with centres at the data sites.
pub fn fit_rbf(xs: &[Vec<f64>], y: &[f64], kernel: &IsotropicKernel, n0: i32, lambda: f64) -> Result<RbfModel> {
    validate(xs, y, kernel, n0, lambda)?;
    let d = kernel.d;
    let m = xs.len();
    let p = poly_matrix(xs, d, n0);
    let z = constraint_basis(&p, n0)?;
    let g0 = gram_unchecked(xs, kernel);
    let sign = kernel_sign(&g0, &z);
    let g = g0 * sign;
    let k = p.ncols();

    let mut a_mat = DMatrix::zeros(m + k, m + k);
    a_mat.view_mut((0, 0), (m, m)).copy_from(&g);
    for i in 0..m {
        a_mat[(i, i)] += lambda;
    }
    a_mat.view_mut((0, m), (m, k)).copy_from(&p);
    a_mat.view_mut((m, 0), (k, m)).copy_from(&p.transpose());
    if let Some(c) = condition_number(&a_mat) {
        if c > 1e12 {
            log::warn!("saddle system condition number {c:.2e}");
        }
    }
    let mut rhs = DVector::zeros(m + k);
    rhs.rows_mut(0, m).copy_from_slice(y);
    let sol = solve_refined(&a_mat, &rhs)?;
    let coeffs: Vec<f64> = sol.rows(0, m).iter().cloned().collect();
    let b: Vec<f64> = sol.rows(m, k).iter().cloned().collect();
    Ok(RbfModel {
        centers: xs.to_vec(),
        coeffs,
        poly: Polynomial::from_coeffs(d, n0, b)?,
        kernel: kernel.clone(),
        kernel_sign: sign,
        lambda,
    })
}

/// Logistic-loss variant: labels in {−1, +1}, objective Σ log(1 + e^{−y f(x_m)}) + λ aᵀGa,
/// solved by damped Newton steps on a = Zc and b.
pub fn fit_rbf_logistic(xs: &[Vec<f64>], y: &[f64], kernel: &IsotropicKernel, n0: i32, lambda: f64) -> Result<RbfModel> {
    validate(xs, y, kernel, n0, lambda)?;
    if y.iter().any(|v| *v != 1.0 && *v != -1.0) {
        return Err(Error::Data("logistic labels must be -1 or +1".into()));
    }
    let d = kernel.d;
    let p = poly_matrix(xs, d, n0);
    let z = constraint_basis(&p, n0)?;
    let g0 = gram_unchecked(xs, kernel);
    let sign = kernel_sign(&g0, &z);
    let g = g0 * sign;
    // f = B θ with θ = (c, b), B = [GZ, P]; penalty λ cᵀ(ZᵀGZ)c.
    let gz = &g * &z;
    let nc = z.ncols();
    let k = p.ncols();
    let bmat = {
        let mut b = DMatrix::zeros(xs.len(), nc + k);
        b.view_mut((0, 0), (xs.len(), nc)).copy_from(&gz);
        b.view_mut((0, nc), (xs.len(), k)).copy_from(&p);
        b
    };
    let mut pen = DMatrix::zeros(nc + k, nc + k);
    pen.view_mut((0, 0), (nc, nc)).copy_from(&(z.transpose() * &gz * lambda));
    let yv = DVector::from_column_slice(y);
    let objective = |th: &DVector<f64>| -> f64 {
        let f = &bmat * th;
        let loss: f64 = f.iter().zip(y).map(|(fi, yi)| softplus(-yi * fi)).sum();
        loss + th.dot(&(&pen * th))
    };
    let mut theta = DVector::zeros(nc + k);
    let mut obj = objective(&theta);
    for _ in 0..100 {
        let f = &bmat * &theta;
        let s: DVector<f64> = f.zip_map(&yv, |fi, yi| sigmoid(-yi * fi));
        let grad = bmat.transpose() * s.zip_map(&yv, |si, yi| -yi * si) + &pen * &theta * 2.0;
        let w: DVector<f64> = s.map(|si| si * (1.0 - si));
        let mut h = bmat.transpose() * DMatrix::from_diagonal(&w) * &bmat + &pen * 2.0;
        for i in 0..h.nrows() {
            h[(i, i)] += 1e-10;
        }
        let step = solve_refined(&h, &(-&grad))?;
        let mut t = 1.0;
        let mut accepted = false;
        while t > 1e-10 {
            let cand = &theta + &step * t;
            let o = objective(&cand);
            if o <= obj + 1e-4 * t * grad.dot(&step) {
                theta = cand;
                obj = o;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted || grad.norm() < 1e-10 {
            break;
        }
    }
    let a = &z * theta.rows(0, nc);
    Ok(RbfModel {
        centers: xs.to_vec(),
        coeffs: a.iter().cloned().collect(),
        poly: Polynomial::from_coeffs(d, n0, theta.rows(nc, k).iter().cloned().collect())?,
        kernel: kernel.clone(),
        kernel_sign: sign,
        lambda,
    })
}

fn softplus(u: f64) -> f64 {
    if u > 30.0 {
        u
    } else {
        u.exp().ln_1p()
    }
}

fn sigmoid(u: f64) -> f64 {
    1.0 / (1.0 + (-u).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::activations::{green_kernel, KernelMode};

    fn linear_kernel(d: usize) -> IsotropicKernel {
        // ρ(r) = r: Green kernel of |ω|^{d+1} up to scale.
        let g = green_kernel(d as f64 + 1.0, d).unwrap();
        let s = 1.0 / g.eval(1.0);
        IsotropicKernel::from_green(g, s, KernelMode::Classical, "linear")
    }

    #[test]
    fn linear_gram_two_points() {
        let k = linear_kernel(1);
        let g = gram_matrix(&[vec![0.0], vec![1.0]], &k).unwrap();
        assert!((g[(0, 0)]).abs() < 1e-15 && (g[(0, 1)] - 1.0).abs() < 1e-12 && (g[(1, 0)] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn duplicate_centres_rejected() {
        let k = linear_kernel(1);
        assert!(matches!(gram_matrix(&[vec![0.0], vec![0.0]], &k), Err(Error::DuplicateCenters(0, 1))));
    }

    #[test]
    fn non_unisolvent_points_rejected() {
        let k = linear_kernel(2);
        let xs = vec![vec![0.0, 0.0], vec![1.0, 1.0], vec![2.0, 2.0], vec![3.0, 3.0]];
        let r = fit_rbf(&xs, &[0.0, 1.0, 0.0, 1.0], &k, 1, 0.0);
        assert!(matches!(r, Err(Error::NotUnisolvent { .. })));
    }

    #[test]
    fn linear_kernel_negated_for_n0_zero() {
        // r is conditionally negative-definite of order 1.
        let k = linear_kernel(1);
        let xs: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64 * 0.7]).collect();
        let y = [0.1, 0.5, -0.3, 0.2, 0.9, 0.0];
        let m = fit_rbf(&xs, &y, &k, 0, 0.1).unwrap();
        assert_eq!(m.kernel_sign, -1.0);
        assert!(m.reg_cost() > 0.0);
    }

    #[test]
    fn logistic_separates_two_clusters() {
        let k = linear_kernel(1);
        let xs: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64]).collect();
        let y: Vec<f64> = (0..10).map(|i| if i < 5 { -1.0 } else { 1.0 }).collect();
        let m = fit_rbf_logistic(&xs, &y, &k, 1, 1e-2).unwrap();
        for (x, yi) in xs.iter().zip(&y) {
            assert!(m.predict(x).unwrap() * yi > 0.0);
        }
        assert!(m.constraint_residual() < 1e-8);
    }
}
