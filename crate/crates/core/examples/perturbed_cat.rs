// Galerkin truncation of a nonlinear perturbation of the cat map and its
// noisy norm curve next to the unperturbed one.
//
// `cargo run --release --example perturbed_cat`

use std::sync::Arc;

use torus_dissipation::analysis::{dissipation_time, DissipationOptions};
use torus_dissipation::fourier::TruncatedGrid;
use torus_dissipation::maps::{koopman_assembly, LinearToralMap, PerturbedCatMap, SampledMap};
use torus_dissipation::noise::NoiseKernel;
use torus_dissipation::propagation::{DenseEngine, LatticeOrbitEngine, NormMode, Propagator};

pub fn main() -> Result<(), Box<dyn std::error::Error>> {
    let eps = 0.15;
    let kernel = NoiseKernel::isotropic(2, 2.0)?;
    let map = PerturbedCatMap::new(LinearToralMap::cat(), 0.02)?;
    let sampled = SampledMap::sample(Arc::new(map), 48)?;
    let grid = TruncatedGrid::new(2, 10)?;
    let assembly = koopman_assembly(&sampled, &grid)?;
    let dense = DenseEngine::from_galerkin(&assembly, &kernel, eps)?;
    let exact = LatticeOrbitEngine::new(LinearToralMap::cat(), kernel, eps)?;
    println!("{} modes, ||DF|| >= {:.4}", grid.len(), sampled.expansion_profile().df_norm);
    for n in 1..=5 {
        let p = dense.noisy_norm(n)?;
        println!(
            "n = {n}: perturbed {:.6e} (leakage {:.1e}), linear {:.6e}",
            p.value(),
            p.leakage,
            exact.noisy_norm(n)?.value()
        );
    }
    let tau = dissipation_time(&dense, NormMode::Noisy, &DissipationOptions::default().with_cap(100))?;
    println!("tau* = {tau}");
    Ok(())
}
