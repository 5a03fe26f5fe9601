// Correlations of trigonometric observables under the cat map, with and
// without noise, and the super-exponential bound for Gaussian noise.
//
// `cargo run --example correlations`

use num_complex::Complex64;
use torus_dissipation::analysis::{correlation_series, supexp_bound_check};
use torus_dissipation::fourier::FourierVector;
use torus_dissipation::maps::LinearToralMap;
use torus_dissipation::noise::NoiseKernel;
use torus_dissipation::propagation::LatticeOrbitEngine;

pub fn main() -> Result<(), Box<dyn std::error::Error>> {
    let one = Complex64::new(1.0, 0.0);
    // f = cos 2 pi x, h = e_{(1,1)} + e_{(1,0)}
    let f = FourierVector::from_terms(2, &[(vec![1, 0], one * 0.5), (vec![-1, 0], one * 0.5)])?;
    let h = FourierVector::from_terms(2, &[(vec![1, 1], one), (vec![1, 0], one)])?;
    let cat = LinearToralMap::cat();
    let kernel = NoiseKernel::isotropic(2, 2.0)?;
    let eps = 0.05;
    let engine = LatticeOrbitEngine::new(cat.clone(), kernel.clone(), eps)?;
    let series = correlation_series(&engine, &f, &h, 8, true)?;
    for e in &series.entries {
        println!(
            "n = {}: C(n) = {:.4}, noisy {:.4e}, bound {:.4e}",
            e.n,
            e.value,
            e.noisy.unwrap().norm(),
            e.norm_bound.unwrap()
        );
    }
    println!("decay model {:?}, Cauchy-Schwarz {}", series.fit.model, series.cauchy_schwarz_holds);
    let rep = supexp_bound_check(&cat, &kernel, eps, 0.5, &f, &h, 1..=8)?;
    println!("super-exponential bound (h_hat = {:.4}) holds: {}", rep.h_hat, rep.holds);
    Ok(())
}
