use serde_json::Value;
use snpkit::logic::parse_sentence;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../snpkit/fixtures").join(name)
}

fn snpkit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_snpkit"))
        .args(args)
        .env_remove("SNPKIT_BUDGET")
        .output()
        .expect("run snpkit")
}

fn f(name: &str) -> String {
    fixture(name).display().to_string()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json_line(bytes: &[u8]) -> Value {
    serde_json::from_slice(bytes).unwrap_or_else(|e| panic!("not JSON ({e}): {}", String::from_utf8_lossy(bytes)))
}

/// Parses `v` against `schemas/<kind>.schema.json`, panicking with every error.
fn validate(kind: &str, v: &Value) {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("schemas").join(format!("{kind}.schema.json"));
    let schema: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let validator = jsonschema::validator_for(&schema).expect("valid schema");
    let errors: Vec<String> = validator.iter_errors(v).map(|e| format!("{} at {}", e, e.instance_path)).collect();
    assert!(errors.is_empty(), "{kind}: {errors:?}\n{v}");
    assert_eq!(v["schema"], format!("snpkit.{kind}/1"));
}

/// Copies fixtures into a fresh directory so written outputs land there.
fn workdir(names: &[&str]) -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    for n in names {
        std::fs::copy(fixture(n), dir.path().join(n)).unwrap();
    }
    dir
}

#[test]
fn stats_of_the_triangle_sentence() {
    let o = snpkit(&["stats", &f("eq11.snp")]);
    assert_eq!(code(&o), 0);
    let v = json_line(&o.stdout);
    validate("stats", &v);
    assert_eq!((v["ht"].as_u64(), v["lh"].as_u64(), v["wd"].as_u64(), v["ar"].as_u64()), (Some(3), Some(4), Some(3), Some(2)));
}

#[test]
fn check_syntax_reports_the_class() {
    let o = snpkit(&["check-syntax", "--json", &f("eq12.snp")]);
    assert_eq!(code(&o), 0);
    let v = json_line(&o.stdout);
    validate("check-syntax", &v);
    assert_eq!(v["mmsnp"], true);
    assert_eq!(v["guarded"], false);
}

#[test]
fn modelcheck_prints_a_witness_for_k5() {
    let o = snpkit(&["modelcheck", "--sentence", &f("eq11.snp"), "--structure", &f("k5.str")]);
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    assert!(out.starts_with("model\nstructure { domain 5"), "{out}");

    let o = snpkit(&["modelcheck", "--json", "--sentence", &f("eq11.snp"), "--structure", &f("k5.str")]);
    validate("modelcheck", &json_line(&o.stdout));
}

#[test]
fn modelcheck_without_a_model_exits_one() {
    // A loop matches the 2-cycle pattern with x = y.
    let dir = workdir(&["two_cycle.snp"]);
    let s = dir.path().join("loop.str");
    std::fs::write(&s, "structure { domain 1 E { (1,1) } }\n").unwrap();
    let o = snpkit(&["modelcheck", "--json", "--sentence", &dir.path().join("two_cycle.snp").display().to_string(), "--structure", &s.display().to_string()]);
    assert_eq!(code(&o), 1);
    let v = json_line(&o.stdout);
    validate("modelcheck", &v);
    assert_eq!(v["witness"], Value::Null);
}

#[test]
fn contain_identity_exits_zero() {
    let a = f("two_cycle.snp");
    let o = snpkit(&["contain", "--phi1", &a, "--phi2", &a]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let o = snpkit(&["contain", "--json", "--phi1", &a, "--phi2", &a]);
    let v = json_line(&o.stdout);
    validate("contain", &v);
    assert_eq!(v["outcome"], "contained");
    assert_eq!(v["method"], "recolouring");
}

#[test]
fn contain_reports_a_counterexample() {
    let o = snpkit(&["contain", "--json", "--phi1", &f("empty.snp"), "--phi2", &f("two_cycle.snp")]);
    assert_eq!(code(&o), 1);
    let v = json_line(&o.stdout);
    validate("contain", &v);
    assert_eq!(v["outcome"], "not_contained");
    assert_eq!(v["counterexample"]["size"], 1);
}

#[test]
fn contain_out_of_budget_is_unknown() {
    let args = ["contain", "--json", "--budget", "5", "--method", "recolouring", "--phi1", &f("path.snp"), "--phi2", &f("two_colouring.snp")];
    let o = snpkit(&args);
    assert_eq!(code(&o), 2, "{}", stdout(&o));
    let v = json_line(&o.stdout);
    validate("contain", &v);
    assert_eq!(v["outcome"], "unknown");

    let o = Command::new(env!("CARGO_BIN_EXE_snpkit"))
        .args(["contain", "--method", "recolouring", "--phi1", &f("path.snp"), "--phi2", &f("two_colouring.snp")])
        .env("SNPKIT_BUDGET", "5")
        .output()
        .unwrap();
    assert_eq!(code(&o), 2);
}

#[test]
fn raw_mode_never_says_not_contained() {
    let o = snpkit(&["contain", "--raw", "--method", "recolouring", "--json", "--phi1", &f("path.snp"), "--phi2", &f("two_colouring.snp")]);
    let v = json_line(&o.stdout);
    validate("contain", &v);
    assert_ne!(v["outcome"], "not_contained");
}

#[test]
fn falsify_finds_the_loop() {
    let o = snpkit(&["falsify", "--json", "--phi1", &f("empty.snp"), "--phi2", &f("two_cycle.snp")]);
    assert_eq!(code(&o), 1);
    let v = json_line(&o.stdout);
    validate("falsify", &v);
    assert_eq!(v["counterexample"]["structure"], "structure { domain 1\n  E { (1,1) }\n}\n");

    let a = f("two_cycle.snp");
    let o = snpkit(&["falsify", "--json", "--max-size", "3", "--phi1", &a, "--phi2", &a]);
    assert_eq!(code(&o), 2);
    validate("falsify", &json_line(&o.stdout));
}

#[test]
fn decompose_writes_connected_disjuncts_and_a_manifest() {
    let dir = workdir(&["split.snp"]);
    let input = dir.path().join("split.snp").display().to_string();
    let o = snpkit(&["decompose", "--json", &input]);
    assert_eq!(code(&o), 0);
    let v = json_line(&o.stdout);
    validate("decompose", &v);
    let files = v["files"].as_array().unwrap();
    assert_eq!(files.len(), 2);
    for file in files {
        let phi = parse_sentence(&std::fs::read_to_string(file.as_str().unwrap()).unwrap()).unwrap();
        assert!(phi.classify().is_connected);
    }
    let manifest = std::fs::read_to_string(v["manifest"].as_str().unwrap()).unwrap();
    let lines: Vec<Value> = manifest.lines().map(|l| json_line(l.as_bytes())).collect();
    assert!(!lines.is_empty());
    for l in &lines {
        validate("decompose-manifest", l);
    }
}

#[test]
fn delta_writes_a_sentence_and_a_report() {
    let dir = workdir(&["two_cycle.snp"]);
    let input = dir.path().join("two_cycle.snp").display().to_string();
    let o = snpkit(&["delta", "--json", &input]);
    assert_eq!(code(&o), 0);
    let v = json_line(&o.stdout);
    validate("delta", &v);
    let out = dir.path().join("two_cycle.delta.snp");
    assert_eq!(v["output"], out.display().to_string());
    let phi = parse_sentence(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(phi.clauses().len() as u64, v["counters"]["total"].as_u64().unwrap());

    let o = snpkit(&["delta", "--max-clauses", "1", &input]);
    assert_eq!(code(&o), 2);
    validate("error", &json_line(o.stderr.trim_ascii()));
}

#[test]
fn recolour_emits_the_map() {
    let dir = workdir(&[]);
    let map = dir.path().join("map.json");
    let a = f("two_cycle.snp");
    let o = snpkit(&["recolour", "--json", "--naive-iii", "--phi1", &a, "--phi2", &a, "--emit-map", &map.display().to_string()]);
    assert_eq!(code(&o), 0);
    let v = json_line(&o.stdout);
    validate("recolour", &v);
    assert_eq!(v["naive_iii"], "passed");
    let doc = json_line(&std::fs::read(&map).unwrap());
    validate("recolouring", &doc);
    assert_eq!(doc["pairs"].as_array().unwrap().len() as u64, v["colours1"].as_u64().unwrap());

    let o = snpkit(&["recolour", "--json", "--phi1", &f("path.snp"), "--phi2", &f("two_colouring.snp")]);
    assert_eq!(code(&o), 1);
    validate("recolour", &json_line(&o.stdout));
}

#[test]
fn omega_commands_write_sentences() {
    let dir = workdir(&["path.snp", "two_colouring.snp"]);
    let path = dir.path().join("path.snp").display().to_string();
    let o = snpkit(&["omega", "--json", &path]);
    assert_eq!(code(&o), 0);
    let v = json_line(&o.stdout);
    validate("omega", &v);
    let omega = parse_sentence(&std::fs::read_to_string(dir.path().join("path.omega.snp")).unwrap()).unwrap();
    assert!(omega.classify().is_gmsnp());

    let tc = dir.path().join("two_colouring.snp").display().to_string();
    let o = snpkit(&["omega-prime", "--json", "--n", "2", &tc]);
    assert_eq!(code(&o), 0);
    validate("omega-prime", &json_line(&o.stdout));
    assert!(dir.path().join("two_colouring.omega-prime.snp").exists());

    let o = snpkit(&["omega-prime", "--n", "1", &tc]);
    assert_eq!(code(&o), 3);
}

#[test]
fn grecolour_identity_is_found() {
    let a = f("two_cycle.snp");
    let o = snpkit(&["grecolour", "--json", "--phi1", &a, "--phi2", &a]);
    assert_eq!(code(&o), 0);
    let v = json_line(&o.stdout);
    validate("grecolour", &v);
    assert_eq!(v["outcome"], "found");
}

#[test]
fn input_errors_have_their_own_exit_codes() {
    let o = snpkit(&["stats", "/nonexistent/x.snp"]);
    assert_eq!(code(&o), 66);
    let v = json_line(o.stderr.trim_ascii());
    validate("error", &v);
    assert_eq!(v["error"]["code"], "input");

    let o = snpkit(&["stats", &f("k5.str")]);
    assert_eq!(code(&o), 65);
    validate("error", &json_line(o.stderr.trim_ascii()));

    assert_eq!(code(&snpkit(&["stats", "--frobnicate", &f("eq11.snp")])), 64);
    assert_eq!(code(&snpkit(&["no-such-command"])), 64);
    assert_eq!(code(&snpkit(&["stats", "--budget", "nodes=x", &f("eq11.snp")])), 64);

    // Different input signatures.
    let o = snpkit(&["contain", "--phi1", &f("marked_edge.snp"), "--phi2", &f("two_cycle.snp")]);
    assert_eq!(code(&o), 3);
    assert_eq!(json_line(o.stderr.trim_ascii())["error"]["code"], "signature");
}

#[test]
fn paper_scale_warns() {
    let o = snpkit(&["stats", "--paper-scale", &f("eq11.snp")]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stderr).contains("warning"));
}

#[test]
fn single_threaded_runs_are_byte_identical() {
    let runs: Vec<Vec<String>> = vec![
        vec!["contain".into(), "--json".into(), "--phi1".into(), f("path.snp"), "--phi2".into(), f("two_colouring.snp")],
        vec!["contain".into(), "--json".into(), "--phi1".into(), f("empty.snp"), "--phi2".into(), f("two_cycle.snp")],
        vec!["recolour".into(), "--json".into(), "--phi1".into(), f("two_colouring.snp"), "--phi2".into(), f("two_colouring.snp")],
        vec!["falsify".into(), "--json".into(), "--phi1".into(), f("orientation.snp"), "--phi2".into(), f("two_cycle.snp")],
        vec!["grecolour".into(), "--json".into(), "--phi1".into(), f("path.snp"), "--phi2".into(), f("path.snp")],
        vec!["modelcheck".into(), "--sentence".into(), f("eq11.snp"), "--structure".into(), f("k5.str")],
        vec!["check-syntax".into(), f("pentagons.snp")],
    ];
    for args in runs {
        let mut args: Vec<&str> = args.iter().map(String::as_str).collect();
        args.extend(["--jobs", "1"]);
        let (a, b) = (snpkit(&args), snpkit(&args));
        assert_eq!(a.stdout, b.stdout, "{args:?}");
        assert_eq!(code(&a), code(&b));
    }
    // Transforms write files; compare those too.
    for (cmd, file, out) in [("delta", "two_colouring.snp", "two_colouring.delta.snp"), ("omega", "path.snp", "path.omega.snp")] {
        let texts: Vec<(String, String)> = (0..2)
            .map(|_| {
                let dir = workdir(&[file]);
                let input = dir.path().join(file).display().to_string();
                let o = snpkit(&[cmd, "--jobs", "1", &input]);
                assert_eq!(code(&o), 0);
                let text = std::fs::read_to_string(dir.path().join(out)).unwrap();
                // Paths differ between temporary directories.
                (stdout(&o).replace(&dir.path().display().to_string(), "DIR"), text)
            })
            .collect();
        assert_eq!(texts[0], texts[1], "{cmd}");
    }
}

#[test]
fn verdicts_do_not_depend_on_threads() {
    for (a, b) in [("path.snp", "two_colouring.snp"), ("empty.snp", "two_cycle.snp"), ("two_cycle.snp", "empty.snp")] {
        let run = |jobs: &str| {
            let o = snpkit(&["contain", "--json", "--jobs", jobs, "--phi1", &f(a), "--phi2", &f(b)]);
            (code(&o), json_line(&o.stdout)["outcome"].clone())
        };
        assert_eq!(run("1"), run("4"), "{a} vs {b}");
    }
}
