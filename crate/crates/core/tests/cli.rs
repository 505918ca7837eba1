//! End-to-end runs of the command-line front-end.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const HEAT: &str = r#"
seed = 5

[operator]
family = "constant"
a = [[1.0]]
b = [0.0]

[domain]
kind = "interval"
lo = 0.0
hi = 3.141592653589793

[initial]
kind = "sine"
coefficients = [1.0]

[plan]
total_time = 0.1
n_list = [8, 16]
t_ladder = [0.1, 0.01]

[mc]
paths = 10000
dt = 1e-3
"#;

fn run(dir: &Path, config: &str, args: &[&str]) -> Output {
    let path = dir.join("config.toml");
    fs::write(&path, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_feynman-dirichlet"))
        .args(args)
        .arg("--config")
        .arg(&path)
        .env("RUST_LOG", "error")
        .output()
        .unwrap()
}

#[test]
fn validate_passes_on_heat_sine() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = run(dir.path(), HEAT, &["validate", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("validate.csv")).unwrap();
    assert!(csv.starts_with("# feynman-dirichlet "));
    assert!(csv.contains("config_sha256=") && csv.contains("seed=5"));
}

#[test]
fn asymmetric_matrix_is_an_invariant_failure() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = HEAT
        .replace("a = [[1.0]]\nb = [0.0]", "a = [[1.0, 0.2], [0.0, 1.0]]\nb = [0.0, 0.0]")
        .replace(
            "kind = \"interval\"\nlo = 0.0\nhi = 3.141592653589793",
            "kind = \"disc\"\ncenter = [0.0, 0.0]\nradius = 1.0",
        )
        .replace("kind = \"sine\"\ncoefficients = [1.0]", "kind = \"zero\"");
    let out = dir.path().join("out");
    let o = run(dir.path(), &cfg, &["validate", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("not symmetric"));
}

#[test]
fn missing_domain_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = HEAT.replace("[domain]\nkind = \"interval\"\nlo = 0.0\nhi = 3.141592653589793\n", "");
    let o = run(dir.path(), &cfg, &["validate", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("domain"));
    let o = Command::new(env!("CARGO_BIN_EXE_feynman-dirichlet")).arg("validate").output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for (out, threads) in [(&a, "1"), (&b, "2")] {
        for cmd in ["consistency", "converge", "mc-compare"] {
            let o = run(dir.path(), HEAT, &[cmd, "--out", out.to_str().unwrap(), "--threads", threads]);
            assert_eq!(o.status.code(), Some(0), "{cmd}: {}", String::from_utf8_lossy(&o.stderr));
        }
    }
    for name in ["consistency_beta0.5.csv", "converge_beta0.5.csv", "mc_compare.csv"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }
    let c = dir.path().join("c");
    run(dir.path(), HEAT, &["mc-compare", "--out", c.to_str().unwrap(), "--seed", "6"]);
    assert_ne!(fs::read(a.join("mc_compare.csv")).unwrap(), fs::read(c.join("mc_compare.csv")).unwrap());
}

#[test]
fn zero_datum_and_single_step() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let zero = HEAT.replace("kind = \"sine\"\ncoefficients = [1.0]", "kind = \"zero\"");
    let o = run(dir.path(), &zero, &["consistency", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let csv = fs::read_to_string(out.join("consistency_beta0.5.csv")).unwrap();
    for line in csv.lines().skip(2) {
        assert!(line.ends_with(",0e0"), "{line}");
    }
    let single = HEAT.replace("n_list = [8, 16]", "n_list = [1]");
    let o = run(dir.path(), &single, &["converge", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let csv = fs::read_to_string(out.join("converge_beta0.5.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
}

#[test]
fn extend_demo_drift_profile() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = HEAT
        .replace("b = [0.0]", "b = [2.0]")
        .replace("kind = \"sine\"\ncoefficients = [1.0]", "kind = \"member\"\nalphas = [0.05]");
    let o = run(dir.path(), &cfg, &["extend-demo", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("extend_demo.csv")).unwrap();
    assert!(csv.lines().nth(1).unwrap() == "x0,value,region");
    let regions: Vec<&str> = csv.lines().skip(2).map(|l| l.rsplit(',').next().unwrap()).collect();
    for r in ["inside", "collar", "outside"] {
        assert!(regions.contains(&r));
    }
}
