//! Invariants checked on random inputs.

use proptest::prelude::*;
use radonreg::activations::{synth_antisymmetric, synth_rbf_kernel, synth_symmetric, KernelMode, TGrid};
use radonreg::catalog::catalog_profile;
use radonreg::lp::{duality_map, fit_lp, LpGrid, Psi};
use radonreg::nullspace::kappa_hat;
use radonreg::radon::{radon_forward, Image, SinoSpec, Sinogram};
use radonreg::rbf::fit_rbf;
use radonreg::sparse::{build_dictionary, fit_mnorm, homogeneity_normalize, MnormOptions, RidgeAtom};
use radonreg::spectral::{remainder_r, Parity};

fn sino(values: Vec<f64>) -> Sinogram {
    let spec = SinoSpec { n_t: 16, n_theta: 4, t_max: 2.0 };
    let mut g = Sinogram::zeros(spec, Parity::Even);
    g.values = values;
    g
}

fn nonzero_field() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0f64..10.0, 64).prop_filter("nonzero", |v| v.iter().any(|x| x.abs() > 1e-3))
}

fn points_2d(n: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 2), n).prop_filter("separated", |xs| {
        xs.iter().enumerate().all(|(i, a)| xs[..i].iter().all(|b| (a[0] - b[0]).hypot(a[1] - b[1]) > 0.05))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn duality_maps_invert_and_preserve_norm(v in nonzero_field(), pi in 0usize..3) {
        let (p, q) = [(1.5, 3.0), (2.0, 2.0), (1.25, 5.0)][pi];
        let g = sino(v);
        let j = duality_map(&g, q).unwrap();
        let back = duality_map(&j, p).unwrap();
        let scale = g.values.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        for (a, b) in g.values.iter().zip(&back.values) {
            prop_assert!((a - b).abs() <= 1e-10 * scale);
        }
        prop_assert!((j.lq_norm(p) - g.lq_norm(q)).abs() <= 1e-10 * g.lq_norm(q));
    }

    #[test]
    fn duality_map_is_positively_homogeneous(v in nonzero_field(), c in 0.01f64..100.0) {
        let g = sino(v.clone());
        let h = sino(v.iter().map(|x| c * x).collect());
        let (a, b) = (duality_map(&g, 3.0).unwrap(), duality_map(&h, 3.0).unwrap());
        for (x, y) in a.values.iter().zip(&b.values) {
            prop_assert!((c * x - y).abs() <= 1e-10 * (1.0 + y.abs()));
        }
    }

    #[test]
    fn remainder_bound(n in 1u32..=10, w in -100.0f64..100.0) {
        let r = remainder_r(n, w).norm();
        prop_assert!(r <= (w.abs() / 2.0).min(1.27) + 1e-12);
    }

    #[test]
    fn window_is_between_zero_and_one(r in -2.0f64..2.0) {
        let k = kappa_hat(r);
        prop_assert!((0.0..=1.0).contains(&k));
        prop_assert!(k == kappa_hat(-r));
    }

    #[test]
    fn homogeneity_normalization(w in prop::collection::vec(-3.0f64..3.0, 1..4), b in -2.0f64..2.0,
                                 x in prop::collection::vec(-2.0f64..2.0, 3), m in 2u32..4) {
        prop_assume!(w.iter().map(|v| v * v).sum::<f64>() > 1e-4);
        let profile = catalog_profile("ridge_spline", &[m as f64]).unwrap();
        let act = if m % 2 == 0 {
            synth_symmetric(&profile, &TGrid::default()).unwrap()
        } else {
            synth_antisymmetric(&profile, &TGrid::default()).unwrap()
        };
        let (xi, tau, s) = homogeneity_normalize(&w, b, profile.gamma0).unwrap();
        let x = &x[..w.len()];
        let lhs = act.eval(w.iter().zip(x).map(|(a, c)| a * c).sum::<f64>() - b);
        let rhs = s * act.eval(xi.iter().zip(x).map(|(a, c)| a * c).sum::<f64>() - tau);
        prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + lhs.abs()));
    }

    #[test]
    fn parity_flip_preserves_atoms(xi in -1.0f64..1.0, tau in -1.0f64..1.0, wgt in -2.0f64..2.0, x in -3.0f64..3.0) {
        let profile = catalog_profile("ridge_spline", &[3.0]).unwrap();
        for (parity, act) in [
            (Parity::Even, synth_symmetric(&profile, &TGrid::default()).unwrap()),
            (Parity::Odd, synth_antisymmetric(&profile, &TGrid::default()).unwrap()),
        ] {
            let atom = RidgeAtom { xi: vec![xi], tau, weight: wgt };
            let flip = atom.flipped(parity);
            prop_assert!((atom.eval(&act, &[x]) - flip.eval(&act, &[x])).abs() <= 1e-12 * (1.0 + x.abs().powi(2)));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn rbf_fit_is_permutation_invariant(xs in points_2d(8), seed in 0u64..1000, lambda in 0.0f64..0.5) {
        let profile = catalog_profile("fractional_laplacian", &[2.0]).unwrap();
        let k = synth_rbf_kernel(&profile, 2, KernelMode::Radon).unwrap();
        let y: Vec<f64> = xs.iter().map(|x| (3.0 * x[0]).cos() + x[1]).collect();
        let mut order: Vec<usize> = (0..xs.len()).collect();
        let rot = (seed as usize) % xs.len();
        order.rotate_left(rot);
        order.reverse();
        let xs2: Vec<Vec<f64>> = order.iter().map(|&i| xs[i].clone()).collect();
        let y2: Vec<f64> = order.iter().map(|&i| y[i]).collect();
        let m1 = fit_rbf(&xs, &y, &k, 1, lambda).unwrap();
        let m2 = fit_rbf(&xs2, &y2, &k, 1, lambda).unwrap();
        for t in [[0.1, 0.2], [-0.5, 0.7], [0.9, -0.9]] {
            prop_assert!((m1.predict(&t).unwrap() - m2.predict(&t).unwrap()).abs() < 1e-8);
        }
    }

    #[test]
    fn rbf_reproduces_null_space(xs in points_2d(7), c in prop::collection::vec(-2.0f64..2.0, 3), lambda in 0.0f64..1.0) {
        let profile = catalog_profile("fractional_laplacian", &[2.0]).unwrap();
        let k = synth_rbf_kernel(&profile, 2, KernelMode::Radon).unwrap();
        let f = |x: &[f64]| c[0] + c[1] * x[0] + c[2] * x[1];
        let y: Vec<f64> = xs.iter().map(|x| f(x)).collect();
        let m = fit_rbf(&xs, &y, &k, 1, lambda).unwrap();
        prop_assert!(m.coeffs.iter().all(|a| a.abs() < 1e-8));
        prop_assert!((m.predict(&[0.3, -0.4]).unwrap() - f(&[0.3, -0.4])).abs() < 1e-8);
    }

    #[test]
    fn rbf_lambda_path_is_monotone(xs in points_2d(8), l1 in 1e-3f64..1.0, factor in 1.5f64..10.0) {
        let profile = catalog_profile("fractional_laplacian", &[2.0]).unwrap();
        let k = synth_rbf_kernel(&profile, 2, KernelMode::Radon).unwrap();
        let y: Vec<f64> = xs.iter().map(|x| (3.0 * x[0]).sin() * x[1]).collect();
        let a = fit_rbf(&xs, &y, &k, 1, l1).unwrap();
        let b = fit_rbf(&xs, &y, &k, 1, l1 * factor).unwrap();
        let tol = 1e-9 * (1.0 + a.reg_cost().abs());
        prop_assert!(b.reg_cost() <= a.reg_cost() + tol);
        prop_assert!(b.training_loss(&xs, &y).unwrap() >= a.training_loss(&xs, &y).unwrap() - 1e-12);
    }

    #[test]
    fn mnorm_lambda_path_is_monotone(y in prop::collection::vec(-1.0f64..1.0, 6), l1 in 1e-3f64..0.5, factor in 1.5f64..5.0) {
        let profile = catalog_profile("ridge_spline", &[2.0]).unwrap();
        let act = synth_symmetric(&profile, &TGrid::default()).unwrap();
        let xs: Vec<Vec<f64>> = (0..6).map(|i| vec![0.7 * i as f64]).collect();
        let dict = build_dictionary(&xs, 1).unwrap();
        let opts = MnormOptions::default();
        let a = fit_mnorm(&xs, &y, &act, 1, l1, &dict, &opts).unwrap();
        let b = fit_mnorm(&xs, &y, &act, 1, l1 * factor, &dict, &opts).unwrap();
        prop_assert!(b.reg_cost() <= a.reg_cost() + 1e-6);
        prop_assert!(a.k0() <= a.k0_bound && b.k0() <= b.k0_bound);
    }

    #[test]
    fn radon_transform_is_linear(a in -2.0f64..2.0, b in -2.0f64..2.0, cx in -0.3f64..0.3, cy in -0.3f64..0.3) {
        let f = |x: f64, y: f64| (-((x - cx).powi(2) + (y - cy).powi(2)) / 0.05).exp();
        let g = |x: f64, y: f64| (-(x * x + 4.0 * y * y) / 0.08).exp();
        let spec = SinoSpec { n_t: 64, n_theta: 8, t_max: 1.5 };
        let rf = radon_forward(&Image::from_fn(32, 1.0, f), spec);
        let rg = radon_forward(&Image::from_fn(32, 1.0, g), spec);
        let rh = radon_forward(&Image::from_fn(32, 1.0, |x, y| a * f(x, y) + b * g(x, y)), spec);
        for i in 0..rh.values.len() {
            prop_assert!((rh.values[i] - a * rf.values[i] - b * rg.values[i]).abs() < 1e-10);
        }
    }
}

#[test]
fn lp_fit_at_p2_reproduces_affine_data() {
    let profile = catalog_profile("fractional_laplacian", &[2.0]).unwrap();
    let xs: Vec<Vec<f64>> = vec![vec![0.0, 0.0], vec![0.5, 0.1], vec![-0.4, 0.6], vec![0.2, -0.7]];
    let y: Vec<f64> = xs.iter().map(|x| 1.0 + 2.0 * x[0] - x[1]).collect();
    let grid = LpGrid { n_theta: 24, dt: 0.08, margin: 6.0, image_n: 16, half_width: 1.0 };
    let m = fit_lp(&xs, &y, &profile, 1.5, 1e-2, Psi::Linear, grid).unwrap();
    for (x, v) in xs.iter().zip(&y) {
        assert!((m.predict(x).unwrap() - v).abs() < 1e-4);
    }
}
