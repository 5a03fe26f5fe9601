use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn tdiss(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tdiss")).args(args).output().expect("binary runs")
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run_shipped(sub: &str, name: &str, out: &Path, extra: &[&str]) -> Output {
    let cfg = configs().join(format!("{name}.cfg"));
    let mut args = vec![sub, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    tdiss(&args)
}

fn report(out: &Path, tag: &str) -> Value {
    serde_json::from_str(&std::fs::read_to_string(out.join(format!("report_{tag}.json"))).unwrap()).unwrap()
}

/// Data rows of a CSV artifact (header comment and column line dropped).
fn rows(path: &Path) -> Vec<Vec<String>> {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# torus-dissipation "));
    lines.next().unwrap();
    lines.map(|l| l.split(',').map(str::to_string).collect()).collect()
}

fn write_cfg(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn selftest_passes() {
    let o = tdiss(&["selftest"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.lines().count() >= 8 && !text.contains("FAIL"));
}

#[test]
fn doubling_rate_within_five_percent() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_shipped("dissipation", "doubling", dir.path(), &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(dir.path(), "doubling");
    let fit = &r["rate_fits"]["noisy"];
    assert_eq!(fit["model"], "logarithmic");
    let rstar = fit["logarithmic"]["r_star"].as_f64().unwrap();
    let target = 1.0 / 2f64.ln();
    assert!((rstar - target).abs() / target <= 0.05, "R* = {rstar}");
    let summary = String::from_utf8(o.stdout).unwrap();
    assert!(summary.contains("tau*") && summary.contains("gb_upper1") && summary.contains("logarithmic"));
}

#[test]
fn catmap_rate_within_ten_percent() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_shipped("dissipation", "catmap", dir.path(), &[]);
    assert_eq!(o.status.code(), Some(0));
    let r = report(dir.path(), "catmap");
    let lam = (3.0 + 5f64.sqrt()) / 2.0;
    let target = 2.0 / lam.ln();
    for mode in ["noisy", "coarse"] {
        let rstar = r["rate_fits"][mode]["logarithmic"]["r_star"].as_f64().unwrap();
        assert!((rstar - target).abs() / target <= 0.10, "{mode}: R* = {rstar}");
    }
}

#[test]
fn translation_power_law_and_infinite_coarse() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_shipped("dissipation", "translation", dir.path(), &[]);
    assert_eq!(o.status.code(), Some(0));
    let r = report(dir.path(), "translation");
    let fit = &r["rate_fits"]["noisy"];
    assert_eq!(fit["model"], "power");
    let beta = fit["power"]["beta"].as_f64().unwrap();
    assert!((beta - 1.5).abs() < 0.01, "beta = {beta}");
    let table = rows(&dir.path().join("dissipation_translation.csv"));
    let coarse: Vec<_> = table.iter().filter(|r| r[1] == "coarse").collect();
    assert_eq!(coarse.len(), 9);
    assert!(coarse.iter().all(|r| r[3] == "infinite"));
    assert!(String::from_utf8(o.stdout).unwrap().contains("INFINITE"));
}

#[test]
fn translation_pseudospectrum_matches_normal_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_shipped("pseudospectrum", "translation", dir.path(), &[]);
    assert_eq!(o.status.code(), Some(0));
    let table = rows(&dir.path().join("pseudospectrum_translation.csv"));
    assert_eq!(table.len(), 9);
    for r in table {
        let eps: f64 = r[0].parse().unwrap();
        let d: f64 = r[2].parse().unwrap();
        let want = -(-eps.powf(1.5)).exp_m1();
        assert!((d - want).abs() / want < 1e-6, "eps {eps}: {d} vs {want}");
    }
}

#[test]
fn translation_bounds_hold() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_shipped("bounds", "translation", dir.path(), &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let table = rows(&dir.path().join("bounds_translation.csv"));
    assert_eq!(table.len(), 9);
    assert!(table.iter().all(|r| r[10] == "true"));
}

#[test]
fn sweep_emits_one_row_per_eps_and_mode() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_shipped("sweep", "doubling", dir.path(), &[]);
    assert_eq!(o.status.code(), Some(0));
    let table = rows(&dir.path().join("dissipation_doubling.csv"));
    assert_eq!(table.len(), 9 * 2);
    let mut keys: Vec<(String, String)> = table.iter().map(|r| (r[0].clone(), r[1].clone())).collect();
    keys.dedup();
    assert_eq!(keys.len(), 18);
    for name in ["norms", "correlations"] {
        assert!(dir.path().join(format!("{name}_doubling.csv")).exists());
    }
    // 9 eps, one observable, n = 0..=20
    assert_eq!(rows(&dir.path().join("correlations_doubling.csv")).len(), 9 * 21);
}

#[test]
fn output_is_byte_identical_across_runs_and_thread_counts() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert!(run_shipped("sweep", "catmap", a.path(), &["--jobs", "1"]).status.success());
    assert!(run_shipped("sweep", "catmap", b.path(), &["--jobs", "3"]).status.success());
    for name in ["norms", "dissipation", "pseudospectrum", "correlations"] {
        let file = format!("{name}_catmap.csv");
        let x = std::fs::read(a.path().join(&file)).unwrap();
        let y = std::fs::read(b.path().join(&file)).unwrap();
        assert_eq!(x, y, "{file} differs");
    }
    assert_eq!(
        std::fs::read(a.path().join("report_catmap.json")).unwrap(),
        std::fs::read(b.path().join("report_catmap.json")).unwrap()
    );
}

#[test]
fn every_tau_reproduces_from_a_single_point_run() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run_shipped("dissipation", "catmap", dir.path(), &[]).status.success());
    let table = rows(&dir.path().join("dissipation_catmap.csv"));
    for pick in [0usize, 9, 17] {
        let row = &table[pick];
        let single = tempfile::tempdir().unwrap();
        let o = run_shipped("dissipation", "catmap", single.path(), &["--eps", &row[0]]);
        assert!(o.status.success());
        let again = rows(&single.path().join("dissipation_catmap.csv"));
        let hit = again.iter().find(|r| r[1] == row[1]).unwrap();
        assert_eq!(hit, row);
    }
}

#[test]
fn config_errors_exit_two_with_field_path() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("[map]\nkind = \"linear\"\nmatrix = [[2]]\n[epsilon]\nstart = 1e-3\nstop = 1e-2\ncount = 4\n", "`epsilon`"),
        ("[map]\nkind = \"linear\"\nmatrix = [[2, 1]]\n[epsilon]\nstart = 1e-2\nstop = 1e-3\ncount = 4\n", "`map.matrix`"),
        (
            "[map]\nkind = \"linear\"\nmatrix = [[2]]\n[epsilon]\nstart = 1e-2\nstop = 1e-3\ncount = 4\n[run]\neta = 1.5\n",
            "`run.eta`",
        ),
        (
            "[map]\nkind = \"perturbed_cat\"\ndelta = 0.01\n[epsilon]\nstart = 0.1\nstop = 0.05\ncount = 2\n[dense]\ncutoff = 8\nsamples = 16\n",
            "`dense.samples`",
        ),
        ("[map]\nkind = \"linear\"\nmatrix = [[2]]\nsurprise = 1\n[epsilon]\nstart = 1\nstop = 0.1\ncount = 2\n", "line"),
    ];
    for (i, (text, field)) in cases.iter().enumerate() {
        let p = write_cfg(dir.path(), &format!("bad{i}.cfg"), text);
        let o = tdiss(&["norms", "--config", p.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(2), "case {i}");
        let err = String::from_utf8(o.stderr).unwrap();
        assert!(err.contains(field), "case {i}: {err}");
    }
    let o = tdiss(&["norms", "--config", "/nonexistent/x.cfg"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn correlations_need_observables() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_cfg(
        dir.path(),
        "c.cfg",
        "[map]\nkind = \"linear\"\nmatrix = [[2]]\n[epsilon]\nstart = 1e-2\nstop = 1e-3\ncount = 2\n",
    );
    let o = tdiss(&["correlations", "--config", p.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8(o.stderr).unwrap().contains("observables"));
}

#[test]
fn galerkin_cache_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let text = "tag = \"pc\"\n[map]\nkind = \"perturbed_cat\"\ndelta = 0.02\n[epsilon]\nstart = 0.3\nstop = 0.2\ncount = 2\n\
                [run]\nmodes = \"noisy\"\nn_cap = 50\ncurve_length = 4\n[dense]\ncutoff = 4\nsamples = 16\ncache = \"cache\"\n";
    let p = write_cfg(dir.path(), "pc.cfg", text);
    let out1 = dir.path().join("o1");
    let out2 = dir.path().join("o2");
    let args = |out: &Path| {
        tdiss(&["dissipation", "--config", p.to_str().unwrap(), "--out", out.to_str().unwrap()])
    };
    assert!(args(&out1).status.success());
    let cached: Vec<_> = std::fs::read_dir(dir.path().join("cache")).unwrap().collect();
    assert_eq!(cached.len(), 2);
    assert!(args(&out2).status.success());
    assert_eq!(
        std::fs::read(out1.join("dissipation_pc.csv")).unwrap(),
        std::fs::read(out2.join("dissipation_pc.csv")).unwrap()
    );
}

#[test]
fn custom_kernel_from_tables() {
    let dir = tempfile::tempdir().unwrap();
    let mut table = String::from("radius,value\n");
    for i in 0..=4000 {
        let r = i as f64 * 0.005;
        table.push_str(&format!("{r},{}\n", (-r * r).exp()));
    }
    std::fs::write(dir.path().join("gauss.csv"), &table).unwrap();
    // an envelope that reaches zero certifies arbitrarily small norms
    table.push_str("30,0\n");
    std::fs::write(dir.path().join("gauss_env.csv"), &table).unwrap();
    let base = "[map]\nkind = \"linear\"\nmatrix = [[2]]\n[epsilon]\nstart = 1e-2\nstop = 1e-3\ncount = 3\n[run]\nmodes = \"noisy\"\n";
    let custom = format!("tag = \"custom\"\n{base}[noise]\nkind = \"custom\"\ntable = \"gauss.csv\"\nenvelope = \"gauss_env.csv\"\n");
    let stable = format!("tag = \"stable\"\n{base}");
    for (name, text) in [("custom.cfg", custom), ("stable.cfg", stable)] {
        let p = write_cfg(dir.path(), name, &text);
        let o = tdiss(&["dissipation", "--config", p.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let a = rows(&dir.path().join("dissipation_custom.csv"));
    let b = rows(&dir.path().join("dissipation_stable.csv"));
    let taus = |t: &[Vec<String>]| t.iter().map(|r| r[4].clone()).collect::<Vec<_>>();
    assert_eq!(taus(&a), taus(&b));
}

#[test]
fn uncertifiable_tail_exits_three() {
    // the envelope stops at exp(-400), far above the norms the search reaches
    let dir = tempfile::tempdir().unwrap();
    let mut table = String::new();
    for i in 0..=400 {
        let r = i as f64 * 0.05;
        table.push_str(&format!("{r},{}\n", (-r * r).exp()));
    }
    std::fs::write(dir.path().join("g.csv"), &table).unwrap();
    let text = "[map]\nkind = \"linear\"\nmatrix = [[2]]\n[epsilon]\nstart = 1e-3\nstop = 1e-4\ncount = 2\n\
                [noise]\nkind = \"custom\"\ntable = \"g.csv\"\nenvelope = \"g.csv\"\n";
    let p = write_cfg(dir.path(), "g.cfg", text);
    let o = tdiss(&["dissipation", "--config", p.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8(o.stderr).unwrap().contains("certification"));
}
