use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

const SMALL: &str = "\
[market]
spot = 100
rate = 0.01
vol = 0.25

[deal]
position = short
strike = 80
maturity = 3

[funding]
borrow = 0.03
lend = 0.01

[engine]
steps_per_year = 12
replications = 2

[run]
paths = 200
seed = 4
";

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("nlxva-{}-{name}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn nlxva(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nlxva")).args(args).output().unwrap()
}

#[test]
fn single_run_writes_identical_csv_twice() {
    let dir = scratch("single");
    let cfg = dir.join("small.cfg");
    fs::write(&cfg, SMALL).unwrap();
    let mut outputs = Vec::new();
    for k in 0..2 {
        let out_dir = dir.join(format!("run{k}"));
        let out = nlxva(&["--config", cfg.to_str().unwrap(), "--format", "csv", "--out", out_dir.to_str().unwrap()]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        outputs.push(fs::read(out_dir.join("single.csv")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    let text = String::from_utf8(outputs.remove(0)).unwrap();
    assert!(text.starts_with("quantity,value,std_error\n"));
    for q in ["v_bar", "v_clean", "cva", "dva", "lva", "fva", "nva"] {
        assert!(text.lines().any(|l| l.starts_with(&format!("{q},"))), "{q} missing");
    }
}

#[test]
fn flags_override_the_file() {
    let dir = scratch("flags");
    let cfg = dir.join("small.cfg");
    fs::write(&cfg, SMALL).unwrap();
    let a = nlxva(&["--config", cfg.to_str().unwrap(), "--format", "csv"]);
    let b = nlxva(&["--config", cfg.to_str().unwrap(), "--format", "csv", "--seed", "5", "--paths", "150"]);
    assert!(a.status.success() && b.status.success());
    assert_ne!(a.stdout, b.stdout);
    let text = nlxva(&["--config", cfg.to_str().unwrap(), "--experiment", "fig3", "--replications", "2"]);
    assert!(text.status.success());
    assert!(String::from_utf8_lossy(&text.stdout).contains("f+"));
}

#[test]
fn empty_config_is_a_configuration_error() {
    let dir = scratch("empty");
    let cfg = dir.join("empty.cfg");
    fs::write(&cfg, "").unwrap();
    let out = nlxva(&["--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("missing required keys") && err.contains("market.spot"), "{err}");
    assert!(out.stdout.is_empty());
}

#[test]
fn bad_arguments_are_rejected() {
    assert_eq!(nlxva(&["--experiment", "table9"]).status.code(), Some(2));
    assert_eq!(nlxva(&["--paths", "1"]).status.code(), Some(2));
    assert_eq!(nlxva(&["--config", "/nonexistent/x.cfg"]).status.code(), Some(2));
}
