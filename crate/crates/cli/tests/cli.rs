use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn semiclass(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_semiclass")).args(args).env_remove("SEMICLASS_CACHE_DIR").output().expect("spawn semiclass")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

#[test]
fn oracle_prints_the_ground_state_sup_norm() {
    let o = semiclass(&["oracle", "--alpha", "0,0", "--h", "0.01", "--p", "inf"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let row = text.lines().nth(1).unwrap();
    assert_eq!(row.rsplit(',').next(), Some("5.6419"), "{text}");
}

#[test]
fn oracle_table_has_one_row_per_pair() {
    let o = semiclass(&["oracle", "--alpha", "1", "--h", "0.1,0.01", "--p", "2,inf", "--precision", "6"]);
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 5);
    // L^2 norms are 1 for every h.
    assert!(text.lines().filter(|l| l.contains(",2,")).all(|l| l.ends_with(",1.000000")), "{text}");
}

#[test]
fn moyal_position_momentum() {
    let o = semiclass(&["moyal", "--a", "x1", "--b", "xi1"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), "x1*xi1 + (i/2)h");
    let c = semiclass(&["moyal", "--a", "x1", "--b", "xi1", "--commutator"]);
    assert_eq!(stdout(&c).trim(), "i*h");
}

#[test]
fn moyal_json_output() {
    let o = semiclass(&["moyal", "--a", "x1^2 + xi1^2", "--b", "x1", "--json", "--poisson"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["operation"], "star_product");
    assert!(v["poisson_bracket"].is_string());
}

#[test]
fn spectrum_of_the_two_dimensional_oscillator() {
    let cfg = config("oscillator_n2.json");
    let o = semiclass(&["spectrum", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let lams: Vec<f64> = text.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(lams.len(), 3, "{text}");
    for (got, want) in lams.iter().zip([0.1, 0.2, 0.2]) {
        assert!((got - want).abs() < 1e-6);
    }
    let mult: Vec<&str> = text.lines().skip(1).map(|l| l.rsplit(',').next().unwrap()).collect();
    assert_eq!(mult, ["1", "2", "2"]);
}

#[test]
fn schema_violation_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(config("oscillator_n2.json")).unwrap().replace("\"seed\"", "\"sede\"");
    let path = dir.path().join("bad.json");
    std::fs::write(&path, text).unwrap();
    let o = semiclass(&["run", path.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert!(!o.status.success());
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("sede"), "{err}");
}

#[test]
fn inverted_potential_stops_at_the_gate() {
    let dir = tempfile::tempdir().unwrap();
    let o = semiclass(&["run", config("inverted_n2.json").to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert!(!o.status.success());
    let run_dir = std::fs::read_dir(dir.path()).unwrap().next().unwrap().unwrap().path();
    let mut files: Vec<String> = std::fs::read_dir(&run_dir).unwrap().map(|e| e.unwrap().file_name().to_string_lossy().into_owned()).collect();
    files.sort();
    assert_eq!(files, ["assumptions.json", "config.json", "summary.json"]);
    assert!(stdout(&o).contains("SKIP  scaling"));
}

#[test]
fn assumptions_subcommand_exit_status() {
    assert!(semiclass(&["assumptions", "--family", "oscillator", "--n", "1"]).status.success());
    assert!(!semiclass(&["assumptions", "--family", "inverted", "--n", "1"]).status.success());
}

#[test]
fn quantize_writes_a_readable_operator() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("op.bin");
    let o = semiclass(&[
        "quantize", "--expression", "xi1^2 + x1^2", "--n", "1", "--half-width", "6", "--points", "64", "--h", "0.1", "--out",
        path.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("dimension: 64"));
    let op = semiclass::io::read_operator(&path).unwrap();
    assert_eq!(op.dim(), 64);
}

#[test]
fn garding_subcommand() {
    let o = semiclass(&["garding", "--config", config("garding_sin.json").to_str().unwrap(), "--h", "0.2,0.1"]);
    assert!(o.status.success(), "{}", stdout(&o));
    assert_eq!(stdout(&o).lines().count(), 4);
}

#[test]
fn every_subcommand_has_help() {
    for sub in ["run", "assumptions", "quantize", "spectrum", "scaling", "garding", "moyal", "oracle"] {
        let o = semiclass(&[sub, "--help"]);
        assert!(o.status.success(), "{sub}");
        assert!(stdout(&o).contains("Usage"), "{sub}");
    }
}
