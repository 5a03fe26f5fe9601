// Norm curves of the noisy doubling map against their closed forms.
//
// `cargo run --example doubling_norms`

use torus_dissipation::maps::LinearToralMap;
use torus_dissipation::noise::NoiseKernel;
use torus_dissipation::propagation::{LatticeOrbitEngine, NormMode, Propagator};

pub fn main() -> Result<(), Box<dyn std::error::Error>> {
    let eps = 0.01;
    let kernel = NoiseKernel::isotropic(1, 2.0)?;
    let engine = LatticeOrbitEngine::new(LinearToralMap::doubling(), kernel, eps)?;
    let noisy = engine.norm_curve(8, NormMode::Noisy)?;
    let coarse = engine.norm_curve(8, NormMode::Coarse)?;
    println!("{:>3} {:>14} {:>14} {:>14}", "n", "||T^n||", "closed form", "coarse");
    for (a, b) in noisy.entries.iter().zip(&coarse.entries) {
        // sum_{l=1..n} 4^l = (4^{n+1} - 4) / 3
        let exact = (-(eps * eps) * (4f64.powi(a.n as i32 + 1) - 4.0) / 3.0).exp();
        println!("{:>3} {:>14.8e} {:>14.8e} {:>14.8e}", a.n, a.norm, exact, b.norm);
        assert!((a.norm - exact).abs() <= 1e-14 * exact);
    }
    print!("{}", noisy.to_csv());
    Ok(())
}
