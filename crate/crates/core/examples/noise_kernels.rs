// Symbols, norms and moments of alpha-stable kernels, and a kernel given
// by a radial table.
//
// `cargo run --example noise_kernels`

use nalgebra::DMatrix;
use torus_dissipation::noise::{NoiseKernel, RadialTable, SearchPolicy};

pub fn main() -> Result<(), Box<dyn std::error::Error>> {
    let q = DMatrix::from_row_slice(2, 2, &[1.0, 0.4, 0.4, 2.0]);
    for alpha in [0.5, 1.0, 1.5, 2.0] {
        let k = NoiseKernel::alpha_stable(2, alpha, q.clone())?;
        let n = k.noise_norm(0.1, SearchPolicy::default())?;
        // moments of order p < alpha, on the line
        let m = NoiseKernel::isotropic(1, alpha)?.moment(alpha / 2.0)?;
        println!(
            "alpha = {alpha}: g(0.3, 0.2) = {:.6}, ||G_0.1|| = {:.6} at k = {:?}; on the line E|x|^{:.2} = {:.4} ({:?})",
            k.symbol_at(&[0.3, 0.2]),
            n.value,
            n.argmax,
            m.alpha,
            m.value,
            m.method
        );
    }
    // a Cauchy-like kernel given only through a table
    let radii: Vec<f64> = (0..=10000).map(|i| i as f64 * 0.005).collect();
    let values: Vec<f64> = radii.iter().map(|r| (-r).exp()).collect();
    let mut env = values.clone();
    *env.last_mut().unwrap() = 0.0;
    let k = NoiseKernel::custom(1, 1.0, DMatrix::identity(1, 1), RadialTable::new(radii.clone(), values)?, Some(RadialTable::new(radii, env)?))?;
    for eps in [0.5, 0.1, 0.01] {
        let n = k.noise_norm(eps, SearchPolicy::default())?;
        println!("table kernel: ||G_{eps}|| = {:.6} (exp(-eps) = {:.6})", n.value, (-eps).exp());
    }
    let report = NoiseKernel::isotropic(1, 2.0)?.poisson_sum_check(&[0.5, 0.2, 0.1, 0.05])?;
    println!("Poisson sum check: integral {:.6}, monotone {}", report.integral, report.monotone);
    Ok(())
}
