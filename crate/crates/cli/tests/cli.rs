use std::path::Path;
use std::process::{Command, Output};

fn ivpcert(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ivpcert")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn certs_in(dir: &Path) -> Vec<String> {
    let mut v: Vec<String> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path().to_string_lossy().into_owned())
        .collect();
    v.sort();
    v
}

#[test]
fn prove_writes_dependencies_and_check_accepts_them() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = ivpcert(&["prove", "builtin:agp", "--param", "n=3", "--out", out]);
    assert!(o.status.success(), "{}", stdout(&o));
    let text = stdout(&o);
    assert!(text.contains("agp[n=3]: Certified"));
    assert!(text.contains("geometric_sum[n=3] (dependency): Certified"));
    assert!(text.contains("annihilation       ok"));

    let files = certs_in(dir.path());
    assert_eq!(files.len(), 3);
    let mut args = vec!["check"];
    args.extend(files.iter().map(String::as_str));
    let o = ivpcert(&args);
    assert!(o.status.success(), "{}", stdout(&o));
    assert_eq!(stdout(&o).matches("accepted").count(), 3);

    // Without its dependencies the agp certificate cannot be replayed.
    let agp = files.iter().find(|f| f.ends_with("agp_n3.ivpcert.json")).unwrap();
    let o = ivpcert(&["check", agp]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("REJECTED"));
}

#[test]
fn check_rejects_edited_certificate() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert!(ivpcert(&["prove", "builtin:binomial", "--param", "n=4", "--out", out]).status.success());
    let path = dir.path().join("binomial_n4.ivpcert.json");
    let text = std::fs::read_to_string(&path).unwrap();
    std::fs::write(&path, text.replacen("\"seed\": 1", "\"seed\": 2", 1)).unwrap();
    let o = ivpcert(&["check", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn prove_reports_failure_for_a_false_identity() {
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("wrong.ivp");
    std::fs::write(
        &src,
        "identity wrong {\n  var t;\n  lhs: sin(t)^2;\n  rhs: 1 - cos(t)^2 + t/3;\n  mode: residual;\n  ivp { order: 1; coeff: 0; force: 0; at: 0; values: 0; interval: (-inf, inf); }\n}\n",
    )
    .unwrap();
    let o = ivpcert(&["prove", src.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1), "{}", stdout(&o));
    assert!(stdout(&o).contains("NotAnnihilated"));

    let o = ivpcert(&["falsify", src.to_str().unwrap(), "--quiet"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("verdict=falsified"));
}

#[test]
fn falsify_accepts_fixed_constants_and_intervals() {
    let o = ivpcert(&["falsify", "builtin:agp", "--param", "n=3", "--set", "a=1.25", "--interval", "-3,-1", "--quiet"]);
    assert!(o.status.success(), "{}", stdout(&o));
    assert!(stdout(&o).contains("verdict=consistent"));
    let o = ivpcert(&["falsify", "builtin:agp", "--set", "nosuch=1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn corpus_filter_and_config_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.toml");
    std::fs::write(&cfg, "[sweep]\nbinomial = \"2..4\"\n").unwrap();
    let o = ivpcert(&["corpus", "--filter", "binomial", "--config", cfg.to_str().unwrap(), "--no-timings"]);
    assert!(o.status.success(), "{}", stdout(&o));
    let text = stdout(&o);
    assert!(text.contains("binomial[n=4]"));
    assert!(!text.contains("binomial[n=5]"));
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(ivpcert(&["prove"]).status.code(), Some(2));
    assert_eq!(ivpcert(&["prove", "builtin:nosuch"]).status.code(), Some(2));
    assert_eq!(ivpcert(&["prove", "builtin:binomial", "--param", "n=x"]).status.code(), Some(2));
    assert_eq!(ivpcert(&["prove", "builtin:binomial", "--param", "m=3"]).status.code(), Some(2));
}
