use std::path::PathBuf;
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn submax(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_submax"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn field(csv: &str, name: &str) -> String {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    let i = header.iter().position(|h| *h == name).unwrap();
    row[i].to_string()
}

#[test]
fn greedy_on_fixture_costs_seven_queries() {
    let path = fixture("coverage4.json");
    let csv = stdout(&submax(&["run", "--alg", "greedy", path.to_str().unwrap()]));
    assert_eq!(field(&csv, "value_queries"), "7");
    assert_eq!(field(&csv, "value"), "5");
    assert_eq!(field(&csv, "solution"), "0 3");
    assert_eq!(field(&csv, "opt"), "");
}

#[test]
fn adt_with_exact_has_ratio_column() {
    let path = fixture("coverage4.json");
    let csv = stdout(&submax(&["run", "--alg", "adt", "--eps", "0.1", "--exact", path.to_str().unwrap()]));
    assert_eq!(field(&csv, "opt"), "5");
    let ratio: f64 = field(&csv, "ratio").parse().unwrap();
    assert!(ratio >= 0.532);
}

#[test]
fn column_order_is_fixed() {
    let path = fixture("coverage4.json");
    let csv = stdout(&submax(&["run", "--alg", "lazy", path.to_str().unwrap()]));
    assert_eq!(
        csv.lines().next().unwrap(),
        "instance_id,alg,eps,n,k_or_rank,value,opt,ratio,value_queries,independence_queries,wall_ms,seed,solution"
    );
}

#[test]
fn exit_codes() {
    let cov = fixture("coverage4.json");
    let cov = cov.to_str().unwrap();
    assert_eq!(submax(&["run", "--alg", "nope", cov]).status.code(), Some(2));
    assert_eq!(submax(&["run", "--alg", "knap", cov]).status.code(), Some(2));
    assert_eq!(submax(&["run", "--alg", "greedy", "--alg", "lazy", cov]).status.code(), Some(2));
    assert_eq!(submax(&["compare", "--alg", "greedy", cov]).status.code(), Some(2));
    let bad = fixture("malformed.json");
    assert_eq!(submax(&["run", "--alg", "adt", bad.to_str().unwrap()]).status.code(), Some(3));
    let knap = fixture("knapsack3.json");
    assert_eq!(submax(&["run", "--alg", "adt", knap.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn exact_subcommand_json() {
    let path = fixture("coverage4.json");
    let out = stdout(&submax(&["exact", path.to_str().unwrap()]));
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["opt_value"], 5.0);
    assert_eq!(v["opt_set"], serde_json::json!([0, 3]));
    assert_eq!(v["enumerated_count"], 11);
}

#[test]
fn selfcheck_passes_on_fixture() {
    let path = fixture("coverage4.json");
    let out = stdout(&submax(&["selfcheck", path.to_str().unwrap()]));
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["passed"], true);
}

#[test]
fn gen_then_run_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("inst.json");
    let gen = ["gen", "--family", "modular", "--n", "5", "--k", "2", "--seed", "1"];
    let a = stdout(&submax(&gen));
    assert_eq!(a, stdout(&submax(&gen)));
    let mut with_out = gen.to_vec();
    with_out.extend(["--out", inst.to_str().unwrap()]);
    stdout(&submax(&with_out));
    assert_eq!(std::fs::read_to_string(&inst).unwrap(), a);

    let csv = stdout(&submax(&["run", "--alg", "greedy", "--exact", inst.to_str().unwrap()]));
    assert_eq!(field(&csv, "ratio"), "1");
    assert_eq!(field(&csv, "instance_id"), "modular-n5-s1");
}

#[test]
fn compare_greedy_and_lazy_agree_on_values() {
    let out = stdout(&submax(&[
        "compare", "--alg", "greedy", "--alg", "lazy", "--family", "coverage", "--n", "10,20",
        "--k", "3", "--count", "4", "--rows",
    ]));
    let mut reader = csv::Reader::from_reader(out.as_bytes());
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 16);
    for pair in rows.chunks(2) {
        assert_eq!(pair[0][0], pair[1][0]);
        assert_eq!((&pair[0][1], &pair[1][1]), ("greedy", "lazy"));
        assert_eq!(pair[0][5], pair[1][5]);
    }
}

#[test]
fn curv_cg_json_report() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("mix.json");
    stdout(&submax(&[
        "gen", "--family", "curvature-mix", "--n", "8", "--kappa", "0.5", "--uniform", "3",
        "--seed", "2", "--out", inst.to_str().unwrap(),
    ]));
    let out = stdout(&submax(&[
        "run", "--alg", "curv-cg", "--samples", "8", "--format", "json", "--seed", "5",
        inst.to_str().unwrap(),
    ]));
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["seed"], 5);
    assert_eq!(v["k_or_rank"], 3);
    assert!(v["params"]["kappa"].as_f64().unwrap() > 0.4);
}
