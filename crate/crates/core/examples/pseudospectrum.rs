// Distance from the pseudospectrum to the unit circle for the noisy cat
// map, and the lower and upper bounds it gives on the dissipation time.
//
// `cargo run --release --example pseudospectrum`

use torus_dissipation::analysis::{
    bound_entry, dissipation_time, pseudospectrum_distance, BoundOptions, DissipationOptions,
};
use torus_dissipation::fourier::TruncatedGrid;
use torus_dissipation::maps::LinearToralMap;
use torus_dissipation::noise::NoiseKernel;
use torus_dissipation::propagation::{DenseEngine, LatticeOrbitEngine, NormMode, Propagator};

pub fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cat = LinearToralMap::cat();
    let kernel = NoiseKernel::isotropic(2, 2.0)?;
    let grid = TruncatedGrid::new(2, 12)?;
    let mut opts = BoundOptions::new(2.0);
    opts.radius_points = 4;
    for eps in [0.2, 0.1] {
        let dense = DenseEngine::from_linear(&cat, &kernel, eps, &grid)?;
        let lattice = LatticeOrbitEngine::new(cat.clone(), kernel.clone(), eps)?;
        let tau = dissipation_time(&lattice, NormMode::Noisy, &DissipationOptions::default())?;
        for r in [0.5, 0.8, 1.0] {
            let p = pseudospectrum_distance(&dense, r, 128)?;
            println!("eps = {eps}: d({r}) = {:.5} at angle {:.4}", p.distance, p.angle);
        }
        let b = bound_entry(eps, tau, lattice.noise_norm().log_value, Some(&dense), None, &opts)?;
        println!(
            "eps = {eps}: {:.3} <= tau* = {tau} <= {:.3}, second upper bound {:?}, sandwich {}",
            b.gb_lower.unwrap_or(f64::NAN),
            b.gb_upper1,
            b.gb_upper2,
            b.sandwich_holds
        );
    }
    Ok(())
}
