use std::process::Command;

fn snmono(args: &[&str]) -> (String, i32) {
    let out = Command::new(env!("CARGO_BIN_EXE_snmono")).args(args).output().expect("binary runs");
    (String::from_utf8(out.stdout).unwrap(), out.status.code().unwrap_or(-1))
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(snmono(&["--help"]).1, 0);
    assert_eq!(snmono(&["--version"]).1, 0);
}

#[test]
fn unknown_subcommand_is_usage_error() {
    assert_eq!(snmono(&["frobnicate"]).1, 2);
    assert_eq!(snmono(&["validate"]).1, 2);
}

#[test]
fn heads_and_tails_demo_as_csv() {
    let (text, code) = snmono(&["demo", "heads-and-tails", "--format", "csv"]);
    assert_eq!(code, 0);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("name,anchor,verdict,value"));
    assert!(lines.all(|l| l.contains(",pass,")));
}

#[test]
fn report_goes_to_out_file() {
    let path = std::env::temp_dir().join(format!("snmono-cli-out-{}.json", std::process::id()));
    let (text, code) = snmono(&["demo", "gossez", "--no-timestamp", "--out", path.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(text.is_empty());
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["command"], "demo");
    assert!(v.get("timestamp").is_none());
}

#[test]
fn sweep_theta_over_grid() {
    let path = std::env::temp_dir().join(format!("snmono-cli-set-{}.json", std::process::id()));
    std::fs::write(
        &path,
        r#"{"space":{"dim":2,"norm":{"product":["euclidean","euclidean"]},"L":[0,1,1,0]},"kind":"linear_subspace","vectors":[[1,1]]}"#,
    )
    .unwrap();
    let (text, code) = snmono(&["sweep", "--set", path.to_str().unwrap(), "--grid", "-1:1:1", "--field", "theta", "--format", "csv"]);
    assert_eq!(code, 0, "{text}");
    assert_eq!(text.lines().count(), 10);
}
