//! Exit codes and file handling of the `ucdf` binary.

use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

use ucdf_testkit::fixtures_dir;

fn ucdf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ucdf"))
        .args(args)
        .env_remove("UCDF_STYLE")
        .output()
        .unwrap()
}

fn fixture(rel: &str) -> String {
    fixtures_dir().join(rel).to_string_lossy().into_owned()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

#[test]
fn check_clean_is_silent() {
    let o = ucdf(&["check", &fixture("notation/process.ucdf")]);
    assert_eq!(code(&o), 0);
    assert!(o.stdout.is_empty());
}

#[test]
fn check_reports_one_line_per_violation() {
    let o = ucdf(&["check", &fixture("rules/R-CTL-01.bad.ucdf")]);
    assert_eq!(code(&o), 1);
    let out = String::from_utf8(o.stdout).unwrap();
    assert_eq!(out.lines().count(), 1);
    assert!(out.starts_with("R-CTL-01 ") && out.contains("[t1:1, a]"), "{out}");
}

#[test]
fn parse_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("bad.ucdf");
    fs::write(&f, "ucdf 1\nprocess\n").unwrap();
    let o = ucdf(&["check", f.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
    assert_eq!(code(&ucdf(&["check", "/no/such/file.ucdf"])), 2);
}

#[test]
fn usage_errors_exit_3() {
    assert_eq!(code(&ucdf(&[])), 3);
    assert_eq!(code(&ucdf(&["check"])), 3);
    assert_eq!(code(&ucdf(&["check", "x", "--bogus"])), 3);
    assert_eq!(code(&ucdf(&["render", "x", "--format", "png"])), 3);
    assert_eq!(code(&ucdf(&["extract", "x", "--alias-threshold", "1"])), 3);
    assert_eq!(code(&ucdf(&["--help"])), 0);
}

#[test]
fn fmt_rewrites_in_place() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("d.ucdf");
    fs::write(&f, "ucdf 1\n  holder stack a\nprocess   main\nmain w> a\n").unwrap();
    let o = ucdf(&["fmt", f.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let printed = String::from_utf8(o.stdout).unwrap();
    assert_eq!(printed, "ucdf 1\nholder stack a\nprocess main\nmain w> a\n");
    assert_eq!(code(&ucdf(&["fmt", "-w", f.to_str().unwrap()])), 0);
    assert_eq!(fs::read_to_string(&f).unwrap(), printed);
}

#[test]
fn render_refuses_invalid_unless_forced() {
    let bad = fixture("rules/R-DAT-01.bad.ucdf");
    assert_eq!(code(&ucdf(&["render", &bad, "--format", "dot"])), 1);
    let o = ucdf(&["render", &bad, "--format", "dot", "--force"]);
    assert_eq!(code(&o), 0);
    assert!(o.stdout.starts_with(b"digraph"));
}

#[test]
fn style_comes_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let style = dir.path().join("style.txt");
    fs::write(&style, "# bold processes\nnode.process.fill = #ffeecc\n").unwrap();
    let input = fixture("notation/process.ucdf");
    let run = |style: &PathBuf| {
        Command::new(env!("CARGO_BIN_EXE_ucdf"))
            .args(["render", &input, "--format", "svg"])
            .env("UCDF_STYLE", style)
            .output()
            .unwrap()
    };
    let o = run(&style);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8(o.stdout).unwrap().contains("fill=\"#ffeecc\""));
    fs::write(&style, "node.process.shape = hexagon\n").unwrap();
    assert_eq!(code(&run(&style)), 2);
}

#[test]
fn extract_trace_conform_compact() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("cb.ucdf");
    let src = fixture("programs/callback.fc");
    let o = ucdf(&["extract", &src, "--granularity", "block", "-o", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(fs::read_to_string(&out).unwrap(), fs::read_to_string(fixture("programs/callback.ucdf")).unwrap());

    let o = ucdf(&["conform", &src]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));

    let o = ucdf(&["trace", &src]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.starts_with("# fingerprint "));
    assert!(text.lines().any(|l| l.contains("IndirectCall")));

    let o = ucdf(&["compact", out.to_str().unwrap(), "--process", "B"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(code(&ucdf(&["compact", out.to_str().unwrap(), "--process", "nope"])), 2);
}

#[test]
fn runtime_errors_exit_2_with_partial_trace() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("t.fc");
    fs::write(&f, "void main() { throw 1; }").unwrap();
    let o = ucdf(&["trace", f.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8(o.stdout).unwrap().lines().count() > 1);
    assert_eq!(code(&ucdf(&["conform", f.to_str().unwrap()])), 2);
    fs::write(&f, "void main() { x = ; }").unwrap();
    assert_eq!(code(&ucdf(&["extract", f.to_str().unwrap()])), 2);
}
