// An irrational rotation: power-law dissipation and an infinite coarse time.
//
// `cargo run --example translation`

use torus_dissipation::analysis::{dissipation_time, rate_fit, DissipationOptions, DissipationTime};
use torus_dissipation::maps::TranslationMap;
use torus_dissipation::noise::NoiseKernel;
use torus_dissipation::propagation::{LatticeOrbitEngine, NormMode};

pub fn main() -> Result<(), Box<dyn std::error::Error>> {
    let alpha = 1.0;
    let rotation = TranslationMap::new(vec![2f64.sqrt() - 1.0])?;
    let kernel = NoiseKernel::isotropic(1, alpha)?;
    let opts = DissipationOptions::default().with_cap(1 << 40);
    let mut pts = Vec::new();
    for i in 0..9 {
        let eps = 10f64.powf(-2.0 - 0.5 * i as f64);
        let e = LatticeOrbitEngine::new(rotation.clone(), kernel.clone(), eps)?;
        let t = dissipation_time(&e, NormMode::Noisy, &opts)?;
        let tc = dissipation_time(&e, NormMode::Coarse, &opts)?;
        assert_eq!(tc, DissipationTime::Infinite);
        println!("eps = {eps:.3e}  tau* = {t:>10}  coarse = {tc}");
        pts.push((eps, t));
    }
    let fit = rate_fit(&pts)?;
    let p = fit.power.expect("enough points");
    println!("model {:?}: tau* ~ {:.3} eps^-{:.4} (alpha = {alpha})", fit.model, p.c, p.beta);
    Ok(())
}
