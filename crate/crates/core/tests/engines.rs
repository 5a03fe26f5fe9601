use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use std::sync::Arc;

use torus_dissipation::fourier::{FourierVector, TruncatedGrid};
use torus_dissipation::maps::{koopman_assembly, LinearToralMap, PerturbedCatMap, SampledMap, TranslationMap};
use torus_dissipation::noise::NoiseKernel;
use torus_dissipation::propagation::{DenseEngine, LatticeOrbitEngine, NormMode, Propagator};

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn doubling_noisy(eps: f64, alpha: f64, n: u64) -> f64 {
    -eps.powf(alpha) * (2f64.powf(n as f64 * alpha) - 1.0) / (1.0 - 2f64.powf(-alpha))
}

fn doubling_coarse(eps: f64, alpha: f64, n: u64) -> f64 {
    -eps.powf(alpha) * (2f64.powf(n as f64 * alpha) + 1.0)
}

#[test]
fn doubling_closed_forms() {
    for &alpha in &[1.0, 2.0] {
        let kernel = NoiseKernel::isotropic(1, alpha).unwrap();
        for &eps in &[0.1, 0.01] {
            let e = LatticeOrbitEngine::new(LinearToralMap::doubling(), kernel.clone(), eps).unwrap();
            let noisy = e.norm_curve(20, NormMode::Noisy).unwrap();
            let coarse = e.norm_curve(20, NormMode::Coarse).unwrap();
            for n in 1..=20u64 {
                let a = noisy.entries[n as usize - 1].norm;
                let b = doubling_noisy(eps, alpha, n).exp();
                assert!(rel(a, b) <= 1e-10 || (a == 0.0 && b == 0.0), "noisy {alpha} {eps} {n}: {a} {b}");
                let a = coarse.entries[n as usize - 1].norm;
                let b = doubling_coarse(eps, alpha, n).exp();
                assert!(rel(a, b) <= 1e-10 || (a == 0.0 && b == 0.0), "coarse {alpha} {eps} {n}: {a} {b}");
            }
        }
    }
}

#[test]
fn doubling_first_step_value() {
    let kernel = NoiseKernel::isotropic(1, 2.0).unwrap();
    let e = LatticeOrbitEngine::new(LinearToralMap::doubling(), kernel, 0.01).unwrap();
    let v = e.noisy_norm(1).unwrap().value();
    assert!((v - (-0.0004f64).exp()).abs() < 1e-15);
    assert!((v - 0.9996001).abs() < 1e-7);
}

#[test]
fn translation_norms() {
    let kernel = NoiseKernel::isotropic(2, 2.0).unwrap();
    let t = TranslationMap::new(vec![2f64.sqrt() - 1.0, 3f64.sqrt() - 1.0]).unwrap();
    let e = LatticeOrbitEngine::new(t, kernel, 0.1).unwrap();
    for n in 1..=10u64 {
        let v = e.noisy_norm(n).unwrap().value();
        assert!(rel(v, (-(n as f64) * 0.01).exp()) < 1e-13);
        let c = e.coarse_norm(n).unwrap().value();
        assert!(rel(c, (-0.02f64).exp()) < 1e-13);
    }
    assert!(e.coarse_norm_is_constant());
    assert!(e.non_weakly_mixing());
}

#[test]
fn identity_coarse_constant() {
    let kernel = NoiseKernel::isotropic(2, 2.0).unwrap();
    let e = LatticeOrbitEngine::new(LinearToralMap::identity(2), kernel, 0.2).unwrap();
    assert!(e.coarse_norm_is_constant());
    for n in [1, 5, 50] {
        assert!(rel(e.coarse_norm(n).unwrap().value(), (-0.08f64).exp()) < 1e-13);
    }
}

#[test]
fn cat_first_step() {
    // min |Ak|^2 over k != 0 is 1, reached at k = (1,-1) -> (1,0)
    let kernel = NoiseKernel::isotropic(2, 2.0).unwrap();
    let e = LatticeOrbitEngine::new(LinearToralMap::cat(), kernel, 0.1).unwrap();
    let v = e.noisy_norm(1).unwrap().value();
    assert!(rel(v, (-0.01f64).exp()) < 1e-14);
    // brute force over a box
    let mut best = f64::INFINITY;
    for a in -10i64..=10 {
        for b in -10i64..=10 {
            if a == 0 && b == 0 {
                continue;
            }
            let (x, y) = (2 * a + b, a + b);
            best = best.min((x * x + y * y) as f64);
        }
    }
    assert_eq!(best, 1.0);
}

#[test]
fn cat_brute_force_agreement() {
    let kernel = NoiseKernel::isotropic(2, 2.0).unwrap();
    let eps = 0.05;
    let e = LatticeOrbitEngine::new(LinearToralMap::cat(), kernel, eps).unwrap();
    for n in 1..=4u64 {
        let mut best_noisy = f64::INFINITY;
        let mut best_coarse = f64::INFINITY;
        for a in -30i64..=30 {
            for b in -30i64..=30 {
                if a == 0 && b == 0 {
                    continue;
                }
                let (mut x, mut y) = (a, b);
                let mut s = 0.0;
                for _ in 0..n {
                    let nx = 2 * x + y;
                    let ny = x + y;
                    x = nx;
                    y = ny;
                    s += (x * x + y * y) as f64;
                }
                best_noisy = best_noisy.min(s);
                best_coarse = best_coarse.min((a * a + b * b + x * x + y * y) as f64);
            }
        }
        let v = e.noisy_norm(n).unwrap().log_norm;
        assert!(rel(v, -eps * eps * best_noisy) < 1e-12, "n={n}");
        let c = e.coarse_norm(n).unwrap().log_norm;
        assert!(rel(c, -eps * eps * best_coarse) < 1e-12, "n={n}");
    }
}

#[test]
fn time_reversal_symmetry() {
    let kernel = NoiseKernel::isotropic(2, 2.0).unwrap();
    let a = LinearToralMap::cat();
    let ai = a.inverse().unwrap();
    for &eps in &[0.1, 0.01] {
        let e1 = LatticeOrbitEngine::new(a.clone(), kernel.clone(), eps).unwrap();
        let e2 = LatticeOrbitEngine::new(ai.clone(), kernel.clone(), eps).unwrap();
        for n in 1..=12 {
            assert_eq!(e1.coarse_norm(n).unwrap().log_norm, e2.coarse_norm(n).unwrap().log_norm);
        }
    }
}

#[test]
fn custom_kernel_without_envelope_is_config_error() {
    use torus_dissipation::noise::RadialTable;
    let table = RadialTable::new(vec![0.0, 1.0, 2.0], vec![1.0, 0.5, 0.1]).unwrap();
    let kernel = NoiseKernel::custom(2, 2.0, DMatrix::identity(2, 2), table, None).unwrap();
    let err = LatticeOrbitEngine::new(LinearToralMap::cat(), kernel, 0.1).unwrap_err();
    assert!(matches!(err, torus_dissipation::Error::Config { .. }), "{err}");
}

#[test]
fn custom_gaussian_table_matches_alpha_stable() {
    use torus_dissipation::noise::RadialTable;
    let radii: Vec<f64> = (0..=4000).map(|i| i as f64 * 0.005).collect();
    let values: Vec<f64> = radii.iter().map(|r| (-r * r).exp()).collect();
    let table = RadialTable::new(radii.clone(), values.clone()).unwrap();
    let env = RadialTable::new(radii, values).unwrap();
    let custom = NoiseKernel::custom(2, 2.0, DMatrix::identity(2, 2), table, Some(env)).unwrap();
    let stable = NoiseKernel::isotropic(2, 2.0).unwrap();
    let eps = 0.1;
    let a = LatticeOrbitEngine::new(LinearToralMap::cat(), custom, eps).unwrap();
    let b = LatticeOrbitEngine::new(LinearToralMap::cat(), stable, eps).unwrap();
    for n in 1..=3 {
        let x = a.noisy_norm(n).unwrap().value();
        let y = b.noisy_norm(n).unwrap().value();
        assert!((x - y).abs() < 1e-4, "n={n}: {x} {y}");
    }
}

#[test]
fn noisy_curves_strictly_decrease_and_respect_noise_power() {
    let kernel = NoiseKernel::isotropic(2, 2.0).unwrap();
    let e = LatticeOrbitEngine::new(LinearToralMap::cat(), kernel, 0.01).unwrap();
    let g = e.noise_norm().log_value;
    let curve = e.norm_curve(25, NormMode::Noisy).unwrap();
    for w in curve.entries.windows(2) {
        assert!(w[1].log_norm < w[0].log_norm);
    }
    for en in &curve.entries {
        assert!(en.log_norm <= en.n as f64 * g + 1e-15);
    }
    for en in &e.norm_curve(25, NormMode::Coarse).unwrap().entries {
        assert!(en.log_norm <= 2.0 * g + 1e-15);
    }
}

#[test]
fn dense_matches_lattice_on_cat() {
    let kernel = NoiseKernel::isotropic(2, 2.0).unwrap();
    let grid = TruncatedGrid::new(2, 24).unwrap();
    let cat = LinearToralMap::cat();
    let dense = DenseEngine::from_linear(&cat, &kernel, 0.1, &grid).unwrap();
    let lat = LatticeOrbitEngine::new(cat, kernel, 0.1).unwrap();
    for n in 1..=3 {
        let d = dense.noisy_norm(n).unwrap();
        let l = lat.noisy_norm(n).unwrap();
        assert!((d.value() - l.value()).abs() < 1e-8, "n={n}: {} {}", d.value(), l.value());
        assert!(d.leakage < 1e-6);
        let d = dense.coarse_norm(n).unwrap();
        let l = lat.coarse_norm(n).unwrap();
        assert!((d.value() - l.value()).abs() < 1e-8);
    }
    let curve = dense.norm_curve(3, NormMode::Noisy).unwrap();
    for en in &curve.entries {
        assert!((en.norm - dense.noisy_norm(en.n).unwrap().value()).abs() < 1e-12);
    }
}

#[test]
fn dense_single_step_bounded_by_noise_norm() {
    let kernel = NoiseKernel::isotropic(2, 1.0).unwrap();
    let grid = TruncatedGrid::new(2, 8).unwrap();
    for &eps in &[0.3, 0.05] {
        let dense = DenseEngine::from_linear(&LinearToralMap::cat(), &kernel, eps, &grid).unwrap();
        let v = dense.noisy_norm(1).unwrap().value();
        assert!(v <= dense.noise_norm().value * (1.0 + 1e-12));
    }
}

#[test]
fn dense_leakage_is_reported() {
    let kernel = NoiseKernel::isotropic(2, 2.0).unwrap();
    let grid = TruncatedGrid::new(2, 4).unwrap();
    let dense = DenseEngine::from_linear(&LinearToralMap::cat(), &kernel, 0.01, &grid).unwrap();
    let v = dense.noisy_norm(4).unwrap();
    assert!(v.leakage > 1e-6);
    assert!(v.warning.is_some());
}

#[test]
fn zero_operator_resolvent() {
    // with eps huge the symbol vanishes numerically on every grid mode
    let kernel = NoiseKernel::isotropic(1, 2.0).unwrap();
    let grid = TruncatedGrid::new(1, 4).unwrap();
    let dense = DenseEngine::from_linear(&LinearToralMap::doubling(), &kernel, 100.0, &grid).unwrap();
    let s = dense.resolvent_sigma_min(Complex64::new(0.0, 1.0)).unwrap();
    assert!((s - 1.0).abs() < 1e-12);
}

#[test]
fn translation_resolvent_distance() {
    let eps = 0.1;
    let kernel = NoiseKernel::isotropic(1, 2.0).unwrap();
    let theta = 2f64.sqrt() - 1.0;
    let t = TranslationMap::new(vec![theta]).unwrap();
    let grid = TruncatedGrid::new(1, 6).unwrap();
    let dense = DenseEngine::from_translation(&t, &kernel, eps, &grid).unwrap();
    // aligned with the eigenvalue of mode 1
    let lambda = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * theta);
    let s = dense.resolvent_sigma_min(lambda).unwrap();
    assert!((s - (1.0 - (-eps * eps).exp())).abs() < 1e-12);
}

#[test]
fn cat_resolvent_stable_in_cutoff() {
    let kernel = NoiseKernel::isotropic(2, 2.0).unwrap();
    let cat = LinearToralMap::cat();
    let lambda = Complex64::from_polar(1.0, 0.3);
    let eps = 0.2;
    let a = DenseEngine::from_linear(&cat, &kernel, eps, &TruncatedGrid::new(2, 24).unwrap()).unwrap();
    let b = DenseEngine::from_linear(&cat, &kernel, eps, &TruncatedGrid::new(2, 48).unwrap()).unwrap();
    let sa = a.resolvent_sigma_min(lambda).unwrap();
    let sb = b.resolvent_sigma_min(lambda).unwrap();
    assert!((sa - sb).abs() < 1e-6, "{sa} {sb}");
}

#[test]
fn galerkin_cat_engine_matches_exact() {
    let kernel = NoiseKernel::isotropic(2, 2.0).unwrap();
    let grid = TruncatedGrid::new(2, 6).unwrap();
    let cat = LinearToralMap::cat();
    let sampled = SampledMap::sample(Arc::new(cat.clone()), 32).unwrap();
    let gk = koopman_assembly(&sampled, &grid).unwrap();
    let g = DenseEngine::from_galerkin(&gk, &kernel, 0.3).unwrap();
    let x = DenseEngine::from_linear(&cat, &kernel, 0.3, &grid).unwrap();
    for n in 1..=3 {
        let a = g.noisy_norm(n).unwrap();
        let b = x.noisy_norm(n).unwrap();
        assert!((a.value() - b.value()).abs() < 1e-9);
    }
}

#[test]
fn galerkin_perturbed_engine_runs() {
    let kernel = NoiseKernel::isotropic(2, 2.0).unwrap();
    let grid = TruncatedGrid::new(2, 6).unwrap();
    let map = PerturbedCatMap::new(LinearToralMap::cat(), 0.01).unwrap();
    let sampled = SampledMap::sample(Arc::new(map), 32).unwrap();
    let gk = koopman_assembly(&sampled, &grid).unwrap();
    let g = DenseEngine::from_galerkin(&gk, &kernel, 0.3).unwrap();
    let c = g.norm_curve(4, NormMode::Noisy).unwrap();
    for w in c.entries.windows(2) {
        assert!(w[1].norm < w[0].norm);
    }
}

#[test]
fn correlations_on_lattice() {
    let c1 = Complex64::new(1.0, 0.0);
    // doubling, f = h = e_1 + e_-1
    let f = FourierVector::from_terms(1, &[(vec![1], c1), (vec![-1], c1)]).unwrap();
    let kernel = NoiseKernel::isotropic(1, 2.0).unwrap();
    let e = LatticeOrbitEngine::new(LinearToralMap::doubling(), kernel, 0.1).unwrap();
    assert_eq!(e.correlation(&f, &f, 0, false).unwrap(), Complex64::new(2.0, 0.0));
    for n in 1..6 {
        assert_eq!(e.correlation(&f, &f, n, false).unwrap(), Complex64::new(0.0, 0.0));
    }
    // cat: h = e_(1,0), f picks up e_{-A^2 (1,0)} = e_{(-5,-3)}
    let kernel = NoiseKernel::isotropic(2, 2.0).unwrap();
    let h = FourierVector::from_terms(2, &[(vec![1, 0], c1)]).unwrap();
    let f = FourierVector::from_terms(2, &[(vec![-5, -3], Complex64::new(0.0, 2.0))]).unwrap();
    let e = LatticeOrbitEngine::new(LinearToralMap::cat(), kernel.clone(), 0.1).unwrap();
    assert_eq!(e.correlation(&f, &h, 2, false).unwrap(), Complex64::new(0.0, 2.0));
    let w = (-0.01f64 * (5.0 + 34.0)).exp();
    let c = e.correlation(&f, &h, 2, true).unwrap();
    assert!((c - Complex64::new(0.0, 2.0 * w)).norm() < 1e-14);
    // the dense engine agrees
    let d = DenseEngine::from_linear(&LinearToralMap::cat(), &kernel, 0.1, &TruncatedGrid::new(2, 8).unwrap()).unwrap();
    assert!((d.correlation(&f, &h, 2, true).unwrap() - c).norm() < 1e-14);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn lattice_bounded_by_noise_power(eps in 0.005f64..0.3, n in 1u64..8, alpha in 0.5f64..2.0) {
        let kernel = NoiseKernel::isotropic(2, alpha).unwrap();
        let e = LatticeOrbitEngine::new(LinearToralMap::cat(), kernel, eps).unwrap();
        let g = e.noise_norm().log_value;
        prop_assert!(e.noisy_norm(n).unwrap().log_norm <= n as f64 * g * (1.0 - 1e-12));
        prop_assert!(e.coarse_norm(n).unwrap().log_norm <= 2.0 * g * (1.0 - 1e-12));
        prop_assert!(e.noisy_norm(n + 1).unwrap().log_norm < e.noisy_norm(n).unwrap().log_norm);
    }
}
