use std::process::{Command, Output};

fn a2lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_a2lab")).args(args).output().expect("the binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn single_pair_summary_has_the_documented_schema() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.json");
    let out = a2lab(&["char", "--pair", "lacunary:a=3", "--depth", "20", "--json", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));

    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let obj = v.as_object().unwrap();
    let mut keys: Vec<&str> = obj.keys().map(String::as_str).collect();
    keys.sort_unstable();
    assert_eq!(keys, ["budget", "converged", "dyadic_log2", "interval", "value_log2"]);
    let value = v["value_log2"].as_f64().unwrap();
    assert!(value >= v["dyadic_log2"].as_f64().unwrap());
    assert!(value > 0.0);
    let interval = v["interval"].as_array().unwrap();
    assert_eq!(interval.len(), 2);
    assert!(interval[0].as_f64().unwrap() < interval[1].as_f64().unwrap());

    // The same summary goes to stdout.
    let printed: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(printed, v);
}

#[test]
fn power_pair_prints_json() {
    let out = a2lab(&["char", "--pair", "power:alpha=0.25"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let value = v["value_log2"].as_f64().unwrap();
    // Within a factor 2 of 1 / (alpha (2 - alpha)).
    assert!((value - (1.0f64 / (0.25 * 1.75)).log2()).abs() <= 1.0, "{value}");
}

#[test]
fn passing_sweep_writes_the_requested_formats() {
    let dir = tempfile::tempdir().unwrap();
    let out = a2lab(&["weak-lower", "--a-list", "5,6,7", "--out", dir.path().to_str().unwrap(), "--format", "csv,json"]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    assert!(stdout(&out).contains("[PASS]"));

    let csv = std::fs::read_to_string(dir.path().join("weak-lower.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("a,alpha,a2_log2,quantity_log2,oracle_log2,cpu_ms"));
    let firsts: Vec<&str> = lines.map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(firsts, ["5", "6", "7"]);

    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("weak-lower.json")).unwrap()).unwrap();
    assert_eq!(json["config"]["a_list"], serde_json::json!([5, 6, 7]));
    assert!(!dir.path().join("weak-lower.svg").exists());
}

#[test]
fn failed_assertion_exits_with_one() {
    // Over a = 4, 5, 6 the growth of [w]_A2 is still far from 1 / alpha.
    let out = a2lab(&["char", "--a-list", "4,5,6"]);
    assert_eq!(out.status.code(), Some(1), "{}", stdout(&out));
    assert!(stdout(&out).contains("[FAIL]"));
}

#[test]
fn invariant_suite_passes() {
    let out = a2lab(&["check", "--seed", "7"]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    assert!(!stdout(&out).contains("[FAIL]"));
}

#[test]
fn bad_input_exits_with_two() {
    for args in [
        &["char", "--pair", "lacunary:b=3"][..],
        &["char", "--pair", "power:alpha=1.5"],
        &["weak-lower", "--a-list", "5,6,7", "--out", ".", "--format", "csv,pdf"],
        &["strong-lower", "--a-list", "0"],
    ] {
        let out = a2lab(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", stdout(&out));
        assert!(String::from_utf8_lossy(&out.stderr).starts_with("error"), "{args:?}");
    }
}
