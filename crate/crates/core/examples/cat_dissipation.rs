// Dissipation times of the noisy cat map over a geometric eps grid and the
// logarithmic rate fit.
//
// `cargo run --release --example cat_dissipation`

use torus_dissipation::analysis::{dissipation_time, rate_fit, DissipationOptions};
use torus_dissipation::maps::LinearToralMap;
use torus_dissipation::noise::NoiseKernel;
use torus_dissipation::propagation::{LatticeOrbitEngine, NormMode};

pub fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cat = LinearToralMap::cat();
    let kernel = NoiseKernel::isotropic(2, 2.0)?;
    let opts = DissipationOptions::default();
    let mut noisy = Vec::new();
    let mut coarse = Vec::new();
    for i in 0..9 {
        let eps = 10f64.powf(-2.0 - 0.5 * i as f64);
        let e = LatticeOrbitEngine::new(cat.clone(), kernel.clone(), eps)?;
        let t = dissipation_time(&e, NormMode::Noisy, &opts)?;
        let tc = dissipation_time(&e, NormMode::Coarse, &opts)?;
        println!("eps = {eps:.3e}  tau* = {t:>3}  coarse = {tc:>3}");
        noisy.push((eps, t));
        coarse.push((eps, tc));
    }
    let lam = (3.0 + 5f64.sqrt()) / 2.0;
    for (label, pts) in [("noisy", &noisy), ("coarse", &coarse)] {
        let fit = rate_fit(pts)?;
        println!(
            "{label}: model {:?}, slope {:.4} (2 / ln lambda = {:.4})",
            fit.model,
            fit.rate().unwrap_or(f64::NAN),
            2.0 / lam.ln()
        );
    }
    Ok(())
}
