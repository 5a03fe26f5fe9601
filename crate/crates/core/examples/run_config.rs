// Drives the configuration runner from code: parse a config, run the
// dissipation pipeline, read back the artifacts.
//
// `cargo run --example run_config`

use std::path::Path;

use torus_dissipation::cli::{run, Command, ExperimentConfig, RunOptions};

const CONFIG: &str = r#"
tag = "example"

[map]
kind = "linear"
matrix = [[3, 1], [2, 1]]

[epsilon]
start = 1e-2
stop = 1e-5
count = 7

[run]
modes = "both"
"#;

pub fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = ExperimentConfig::parse(CONFIG, Path::new("."), "example")?;
    let out = std::env::temp_dir().join("tdiss-example");
    let outcome = run(Command::Dissipation, &cfg, &RunOptions { out: out.clone(), ..Default::default() })?;
    print!("{}", outcome.summary);
    for f in &outcome.files {
        println!("wrote {}", f.display());
    }
    let csv = std::fs::read_to_string(out.join("dissipation_example.csv"))?;
    println!("{}", csv.lines().take(4).collect::<Vec<_>>().join("\n"));
    Ok(())
}
