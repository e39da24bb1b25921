use std::io::Write;
use std::process::{Command, Output, Stdio};

use serde_json::{json, Value};

fn ncb(args: &[&str], stdin: Option<&str>) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_ncb"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("spawn ncb");
    if let Some(text) = stdin {
        child.stdin.take().unwrap().write_all(text.as_bytes()).unwrap();
    }
    drop(child.stdin.take());
    child.wait_with_output().expect("ncb runs")
}

fn run(args: &[&str], stdin: &str) -> (i32, Value) {
    let out = ncb(args, Some(stdin));
    let doc: Value = serde_json::from_slice(&out.stdout)
        .unwrap_or_else(|e| panic!("stdout is not JSON ({e}): {}", String::from_utf8_lossy(&out.stdout)));
    (out.status.code().unwrap(), doc)
}

fn cx(re: f64) -> Value {
    json!([re, 0.0])
}

fn real_matrix(rows: &[&[f64]]) -> Value {
    Value::Array(rows.iter().map(|r| Value::Array(r.iter().map(|&v| cx(v)).collect())).collect())
}

fn opsys(n: usize, span: Vec<Value>) -> String {
    json!({ "version": "ncb-1", "kind": "opsys", "payload": { "n": n, "span": span } }).to_string()
}

fn three_point() -> String {
    opsys(
        3,
        vec![
            real_matrix(&[&[1., 0., 0.], &[0., 1., 0.], &[0., 0., 1.]]),
            real_matrix(&[&[0., 0., 0.], &[0., 1., 0.], &[0., 0., 2.]]),
        ],
    )
}

fn identity_and(x: &[&[f64]]) -> String {
    opsys(2, vec![real_matrix(&[&[1., 0.], &[0., 1.]]), real_matrix(x)])
}

fn full_matrices(n: usize) -> String {
    let units = (0..n * n)
        .map(|k| {
            let rows: Vec<Vec<f64>> = (0..n)
                .map(|i| (0..n).map(|j| if i * n + j == k { 1.0 } else { 0.0 }).collect())
                .collect();
            let refs: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
            real_matrix(&refs)
        })
        .collect();
    opsys(n, units)
}

#[test]
fn analyze_three_point_system() {
    let (code, doc) = run(&["analyze", "-"], &three_point());
    assert_eq!(code, 0);
    assert_eq!(doc["kind"], "report");
    let p = &doc["payload"];
    assert_eq!(p["decomposition"]["num_blocks"], 3);
    let boundary: Vec<bool> = p["blocks"].as_array().unwrap().iter().map(|b| b["boundary"].as_bool().unwrap()).collect();
    assert_eq!(boundary, vec![true, false, true]);
    assert_eq!(p["boundary_ideal"]["blocks"], json!([1]));
    assert_eq!(p["envelope"]["block_dims"], json!([1, 1]));
    assert_eq!(p["reduced"], false);
    assert_eq!(p["errors"], json!([]));
}

#[test]
fn analyze_pauli_span_is_reduced() {
    let input = opsys(
        2,
        vec![
            real_matrix(&[&[1., 0.], &[0., 1.]]),
            real_matrix(&[&[0., 1.], &[1., 0.]]),
            real_matrix(&[&[1., 0.], &[0., -1.]]),
        ],
    );
    let (code, doc) = run(&["analyze", "-"], &input);
    assert_eq!(code, 0);
    let p = &doc["payload"];
    assert_eq!(p["decomposition"]["block_dims"], json!([2]));
    assert_eq!(p["blocks"][0]["boundary"], true);
    assert_eq!(p["reduced"], true);
    assert_eq!(p["invariants"]["d"], 3);
}

#[test]
fn malformed_input_exits_2() {
    let cases = [
        "{not json".to_string(),
        json!({ "version": "ncb-0", "kind": "opsys", "payload": { "n": 1, "span": [] } }).to_string(),
        json!({ "version": "ncb-1", "kind": "witness", "payload": {} }).to_string(),
        json!({ "version": "ncb-1", "kind": "opsys", "payload": { "n": 2, "span": [[[[1, 0]], [[0, 0], [1, 0]]]] } })
            .to_string(),
        json!({ "version": "ncb-1", "kind": "opsys", "payload": { "n": 2, "span": [], "extra": 1 } }).to_string(),
        identity_and(&[&[0., 1.], &[0., 0.]]),
    ];
    for input in &cases {
        let out = ncb(&["analyze", "-"], Some(input));
        assert_eq!(out.status.code(), Some(2), "input {input}");
        assert!(!out.stderr.is_empty());
        let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
        assert_eq!(doc["payload"]["errors"][0]["exit_code"], 2);
    }
}

#[test]
fn missing_file_exits_2() {
    let out = ncb(&["analyze", "/nonexistent/input.json"], None);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn equivalence_decisions() {
    let dir = tempfile::tempdir().unwrap();
    let write = |name: &str, text: &str| {
        let p = dir.path().join(name);
        std::fs::write(&p, text).unwrap();
        p.to_str().unwrap().to_string()
    };
    let x = write("x.json", &identity_and(&[&[0., 1.], &[1., 0.]]));
    let z = write("z.json", &identity_and(&[&[1., 0.], &[0., -1.]]));
    let m2 = write("m2.json", &full_matrices(2));
    let m3 = write("m3.json", &full_matrices(3));

    let (code, doc) = run(&["equiv", &x, &x], "");
    assert_eq!(code, 0);
    assert_eq!(doc["kind"], "witness");

    let (code, doc) = run(&["equiv", &x, &z], "");
    assert_eq!(code, 0);
    assert_eq!(doc["kind"], "witness");
    assert!(doc["payload"]["residual"].as_f64().unwrap() < 1e-8);

    let (code, doc) = run(&["equiv", &m2, &m3], "");
    assert_eq!(code, 1);
    assert_eq!(doc["payload"]["decision"], "certified-negative");

    let three = write("three.json", &three_point());
    let (code, _) = run(&["equiv", &three, &three], "");
    assert_eq!(code, 2);
}

#[test]
fn random_instances_are_seeded() {
    let a = ncb(&["--seed", "7", "random", "--kind", "reduced", "--n", "2", "--d", "3"], None);
    let b = ncb(&["--seed", "7", "random", "--kind", "reduced", "--n", "2", "--d", "3"], None);
    let c = ncb(&["--seed", "8", "random", "--kind", "reduced", "--n", "2", "--d", "3"], None);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
    let doc: Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(doc["kind"], "params");
    assert_eq!(doc["payload"]["d"], 3);

    let bad = ncb(&["random", "--kind", "reduced", "--n", "2", "--d", "9"], None);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn random_params_build_and_analyze() {
    let dir = tempfile::tempdir().unwrap();
    let params = dir.path().join("params.json");
    let sys = dir.path().join("sys.json");
    let p = params.to_str().unwrap();
    let s = sys.to_str().unwrap();
    let out = ncb(&["--seed", "3", "random", "--kind", "reduced", "--n", "1,2", "-o", p], None);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    assert_eq!(ncb(&["build", p, "-o", s], None).status.code(), Some(0));
    let (code, doc) = run(&["analyze", s], "");
    assert_eq!(code, 0);
    assert_eq!(doc["payload"]["decomposition"]["block_dims"], json!([1, 2]));
    assert_eq!(doc["payload"]["reduced"], true);
    let (code, direct) = run(&["analyze", p], "");
    assert_eq!(code, 0);
    assert_eq!(direct["payload"]["reduced"], true);
}

#[test]
fn nonreduced_random_instance_verifies() {
    let spec = ncb(&["--seed", "1", "random", "--kind", "nonreduced", "--n", "1,1", "--m", "1"], None);
    assert_eq!(spec.status.code(), Some(0));
    let text = String::from_utf8(spec.stdout).unwrap();
    let (code, doc) = run(&["nonreduced", "-"], &text);
    assert_eq!(code, 0, "{doc}");
    let p = &doc["payload"];
    assert_eq!(p["ideal_summands"], json!([2]));
    assert_eq!(p["boundary_summands"], json!([0, 1]));
    assert_eq!(p["gamma_part_reduced"], true);
    assert_eq!(p["checks"]["strong_separation"], "verified");
}

#[test]
fn nonreduced_rejects_unsubordinate_omega() {
    let scalar = |v: &[f64]| json!({ "generators": v.iter().map(|&x| json!([[cx(x)]])).collect::<Vec<_>>() });
    let spec = json!({
        "version": "ncb-1",
        "kind": "nonreduced-spec",
        "payload": { "d": 2, "gamma": [scalar(&[1., 0.]), scalar(&[0., 1.])], "omega": [scalar(&[2., -1.])] },
    });
    let (code, doc) = run(&["--level-cap", "1", "--budget", "20", "nonreduced", "-"], &spec.to_string());
    assert_eq!(code, 2);
    assert_eq!(doc["payload"]["checks"]["subordination"][0]["holds"], false);
}

#[test]
fn paulsen_doubles_the_ambient_size() {
    let space = opsys(2, vec![real_matrix(&[&[0., 1.], &[0., 0.]])]);
    let (code, doc) = run(&["paulsen", "-"], &space);
    assert_eq!(code, 0);
    assert_eq!(doc["kind"], "opsys");
    assert_eq!(doc["payload"]["n"], 4);
    assert_eq!(doc["payload"]["span"].as_array().unwrap().len(), 4);
}

#[test]
fn envelope_of_three_point_system() {
    let (code, doc) = run(&["envelope", "-"], &three_point());
    assert_eq!(code, 0);
    assert_eq!(doc["payload"]["envelope"]["boundary_blocks"], json!([0, 2]));
    assert_eq!(doc["payload"]["tolerances"]["seed"], 0);
}
