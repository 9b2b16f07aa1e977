use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn coupler(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_coupler")).args(args).output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const EVOLVE: &str = "\
[scenario]
command = evolve
[device]
kappa_S = 1+0i
kappa_I = 1+0i
xi_P1 = 0.5+0i
xi_P2 = 0.5+0i
[grid]
z_min = 0
z_max = 1
z_steps = 5
[observe]
modes = S1I1
quantities = mean_w, lambda
";

#[test]
fn success_writes_output_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "a.conf", EVOLVE);
    let out = dir.path().join("a.csv");
    let o = coupler(&["evolve", "--config", cfg.to_str().unwrap(), "--output", out.to_str().unwrap(), "--threads", "2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 6);
}

#[test]
fn stdout_when_no_output_given() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "a.conf", EVOLVE);
    let o = coupler(&["evolve", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("z[L],mean_w_S1I1[photons],lambda_S1I1[1]"));
}

#[test]
fn unknown_key_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.conf", "command = evolve\nkappa_X = 3\n");
    let o = coupler(&["evolve", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let e = stderr(&o);
    assert!(e.contains("line 2") && e.contains("unknown key kappa_X"), "{e}");
}

#[test]
fn validation_failure_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "neg.conf", &EVOLVE.replace("[device]\n", "[device]\ngamma_S1 = -0.1\n"));
    let o = coupler(&["evolve", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
}

#[test]
fn command_must_match_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "a.conf", EVOLVE);
    let o = coupler(&["sweep", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("not sweep"));
}

#[test]
fn missing_file_exits_with_one() {
    let o = coupler(&["evolve", "--config", "/nonexistent/x.conf"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn oversized_squeeze_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let text = EVOLVE.replace("[grid]\n", "[input]\nr_S1 = 800\n[grid]\n");
    let cfg = write(dir.path(), "big.conf", &text);
    let o = coupler(&["evolve", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    assert!(stderr(&o).contains("overflows"));
}

#[test]
fn overflowing_gain_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let text = EVOLVE.replace("xi_P1 = 0.5+0i", "xi_P1 = 400+0i").replace("z_max = 1", "z_max = 10");
    let cfg = write(dir.path(), "gain.conf", &text);
    let o = coupler(&["evolve", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("numerical failure"));
}
