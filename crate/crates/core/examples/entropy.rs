// Entropy, irreducible factors and ergodicity of toral automorphisms.
//
// `cargo run --example entropy`

use torus_dissipation::maps::LinearToralMap;

pub fn main() -> Result<(), Box<dyn std::error::Error>> {
    let maps = [
        ("cat", LinearToralMap::cat()),
        ("doubling", LinearToralMap::doubling()),
        ("3x3 companion", LinearToralMap::new(vec![vec![0, 0, 1], vec![1, 0, -1], vec![0, 1, 1]])?),
        ("cat x cat", LinearToralMap::new(vec![vec![2, 1, 0, 0], vec![1, 1, 0, 0], vec![0, 0, 2, 1], vec![0, 0, 1, 1]])?),
        ("rotation block", LinearToralMap::new(vec![vec![0, -1], vec![1, 0]])?),
    ];
    for (name, m) in maps {
        let r = m.entropy_report(None)?;
        let factors: Vec<String> = r
            .factors
            .iter()
            .map(|f| format!("{:?}^{}", f.coefficients, f.multiplicity))
            .collect();
        println!(
            "{name}: h = {:.4}, h_hat = {:.4}, ergodic {}, factors {}",
            r.h,
            r.h_hat,
            r.ergodic,
            factors.join(" ")
        );
    }
    // degree 8 needs a hint: (x^2 - 3x + 1)^4
    let block = [[2i64, 1], [1, 1]];
    let mut rows = vec![vec![0i64; 8]; 8];
    for b in 0..4 {
        for i in 0..2 {
            for j in 0..2 {
                rows[2 * b + i][2 * b + j] = block[i][j];
            }
        }
    }
    let big = LinearToralMap::new(rows)?;
    let hint = vec![vec![1, -3, 1]; 4];
    let r = big.entropy_report(Some(&hint))?;
    println!("cat^4: h = {:.4}, h_hat = {:.4}", r.h, r.h_hat);
    Ok(())
}
