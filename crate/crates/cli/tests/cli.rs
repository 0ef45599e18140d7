use std::io::Write;
use std::process::{Command, Output, Stdio};

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_sandpile");

fn fixture(name: &str) -> String {
    format!("{}/tests/fixtures/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn sandpile(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn sandpile_with_stdin(args: &[&str], stdin: &str) -> Output {
    let mut child = Command::new(BIN)
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("binary runs");
    child.stdin.take().unwrap().write_all(stdin.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn lines(o: &Output) -> Vec<Value> {
    stdout(o).lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

fn built(args: &[&str]) -> String {
    let o = sandpile(args);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    stdout(&o)
}

#[test]
fn build_regular_tree() {
    let g: Value = serde_json::from_str(&built(&["build", "regular-tree", "--degree", "3", "--height", "4"])).unwrap();
    assert_eq!(g["vertices"], 8);
    assert_eq!(g["sink"], 7);
    assert_eq!(g["labels"][3], "11");
}

#[test]
fn build_ball_has_no_root_sink_edge() {
    let g: Value = serde_json::from_str(&built(&["build", "ball", "--degree", "3", "--n", "2"])).unwrap();
    let sink = g["sink"].as_u64().unwrap();
    let edges = g["edges"].as_array().unwrap();
    assert!(!edges.iter().any(|e| e[0] == 0 && e[1] == sink));
    assert_eq!(edges.iter().filter(|e| e[0] == 0).count(), 3);
}

#[test]
fn build_tree_file() {
    let s = built(&["build", "tree-file", &fixture("two_by_three.json")]);
    assert_eq!(
        s.trim(),
        r#"{"vertices":4,"sink":3,"edges":[[0,1,1],[0,2,1],[0,3,1],[1,3,3],[2,3,3]]}"#
    );
}

#[test]
fn group_outputs() {
    let fig = fixture("two_by_three.json");
    let cases = [
        (vec!["build", "tree-file", fig.as_str()], r#"{"invariant_factors":[40],"order":"40"}"#),
        (vec!["build", "regular-tree", "--degree", "3", "--height", "4"], r#"{"invariant_factors":[3,3,105],"order":"945"}"#),
        (vec!["build", "regular-tree", "--degree", "3", "--height", "2"], r#"{"invariant_factors":[3],"order":"3"}"#),
    ];
    for (build, expected) in cases {
        let graph = built(&build);
        let o = sandpile_with_stdin(&["group", "--graph", "-"], &graph);
        assert_eq!(o.status.code(), Some(0));
        assert_eq!(stdout(&o).trim(), expected);
    }
}

fn t4() -> String {
    built(&["build", "regular-tree", "--degree", "3", "--height", "4"])
}

#[test]
fn stabilize_examples() {
    let t2 = built(&["build", "regular-tree", "--degree", "3", "--height", "2"]);
    let v = lines(&sandpile_with_stdin(&["stabilize", "--graph", "-", "--chips", "[5]"], &t2));
    assert_eq!(v[0]["stable"]["chips"], serde_json::json!([2]));
    assert_eq!(v[0]["odometer"], serde_json::json!([1]));

    let g = t4();
    let v = lines(&sandpile_with_stdin(&["stabilize", "--graph", "-", "--chips", "[0,0,0,0,0,0,0]"], &g));
    assert_eq!(v[0]["stable"]["chips"], serde_json::json!([0, 0, 0, 0, 0, 0, 0]));

    // one extra chip at the root of the full configuration (2,2,2)
    let v = lines(&sandpile_with_stdin(&["stabilize", "--graph", "-", "--chips", "[3,2,2,2,2,2,2]"], &g));
    assert_eq!(v[0]["stable"]["chips"], serde_json::json!([2, 2, 2, 0, 0, 0, 0]));
    assert_eq!(v[0]["odometer"], serde_json::json!([1, 1, 1, 1, 1, 1, 1]));
}

#[test]
fn big_chip_counts_survive_json() {
    let t2 = built(&["build", "regular-tree", "--degree", "3", "--height", "2"]);
    let chips = "[100000000000000000000000000000001]";
    let o = sandpile_with_stdin(&["stabilize", "--graph", "-", "--chips", chips], &t2);
    let out = stdout(&o);
    assert!(out.contains(r#""odometer":[33333333333333333333333333333333]"#), "{out}");
    assert!(out.contains(r#""chips":[2]"#));
}

#[test]
fn recurrence_identity_and_orders() {
    let g = t4();
    let v = lines(&sandpile_with_stdin(&["identity", "--graph", "-"], &g));
    assert_eq!(v[0]["chips"], serde_json::json!([2, 2, 2, 1, 1, 1, 1]));

    let v = lines(&sandpile_with_stdin(&["recurrent", "--graph", "-", "--chips", "[2,2,2,1,1,1,1]"], &g));
    assert_eq!((v[0]["burning"].as_bool(), v[0]["critical"].as_bool()), (Some(true), Some(true)));
    let v = lines(&sandpile_with_stdin(&["recurrent", "--graph", "-", "--chips", "[1,0,0,2,2,2,2]"], &g));
    assert_eq!((v[0]["burning"].as_bool(), v[0]["critical"].as_bool()), (Some(false), Some(false)));

    let v = lines(&sandpile_with_stdin(&["order", "--graph", "-", "--vertex", "0"], &g));
    assert_eq!(v[0]["order"], "15");

    let fig = built(&["build", "tree-file", &fixture("two_by_three.json")]);
    let v = lines(&sandpile_with_stdin(&["order", "--graph", "-", "--vertex", "0"], &fig));
    assert_eq!(v[0]["order"], "10");
    let v = lines(&sandpile_with_stdin(&["order", "--graph", "-", "--chips", "[2,0,3]"], &fig));
    assert_eq!(v[0]["order"], "40");
}

#[test]
fn lex_orbit_and_spanning_trees() {
    let o = sandpile(&["lex-orbit", "--degree", "3", "--height", "4"]);
    assert_eq!(o.status.code(), Some(0));
    let v = lines(&o);
    assert_eq!(v.len(), 16);
    assert_eq!(v[0]["successor"], "(2,0,2)");
    assert_eq!(v[14]["chip_firing"], "(2,2,1)");

    let v = lines(&sandpile(&["spanning-trees", "--degree", "3", "--height", "4"]));
    assert_eq!(v[0]["spanning_trees"], "945");
    assert_eq!(v[0]["recurrence"], "945");
}

#[test]
fn verify_suites() {
    let o = sandpile(&["verify", "tree-group", "--degree", "3", "--max-height", "6"]);
    assert_eq!(o.status.code(), Some(0));
    let v = lines(&o);
    assert_eq!(v.len(), 6);
    assert_eq!(v[5]["summary"], true);

    let o = sandpile(&["verify", "root-lex-order", "--degree", "3", "--height", "4"]);
    assert_eq!(o.status.code(), Some(0));
    let v = lines(&o);
    assert_eq!(v[0]["computed"]["chip_firing"].as_array().unwrap().len(), 15);

    let o = sandpile(&["verify", "splitting-counterexample"]);
    assert_eq!(o.status.code(), Some(0));
    let v = lines(&o);
    assert_eq!(v[0]["computed"]["root_order"], "10");
    assert_eq!(v[0]["computed"]["witness_order"], "40");
    assert_eq!(v[0]["computed"]["invariant_factors"], serde_json::json!(["40"]));

    let o = sandpile(&["verify", "ball-sylow-ranks", "--degree", "3", "--height", "2", "--prime", "7"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(lines(&o)[0]["computed"]["7"], "2");
}

#[test]
fn failed_check_exits_one() {
    // on a regular tree the root subgroup is a summand, so no obstruction exists
    let o = sandpile(&["verify", "splitting-counterexample", "--tree", &fixture("binary_height_three.json")]);
    assert_eq!(o.status.code(), Some(1));
    let v = lines(&o);
    assert_eq!(v.last().unwrap()["pass"], false);
}

#[test]
fn usage_errors_exit_two() {
    for args in [
        vec!["build", "regular-tree", "--degree", "2", "--height", "3"],
        vec!["verify", "no-such-claim"],
        vec!["verify", "ball-sylow-ranks", "--degree", "3", "--prime", "3"],
        vec!["verify", "ball-sylow-ranks", "--prime", "4"],
        vec!["group", "--graph", "/nonexistent/graph.json"],
    ] {
        let o = sandpile(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
    }
    let o = sandpile_with_stdin(&["stabilize", "--graph", "-", "--chips", "[1]"], &t4());
    assert_eq!(o.status.code(), Some(2));
    let o = sandpile_with_stdin(&["stabilize", "--graph", "-", "--chips", "[-1,0,0,0,0,0,0]"], &t4());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn output_is_deterministic_across_thread_counts() {
    let run = |threads: &str| {
        Command::new(BIN)
            .args(["verify", "branch-quotient", "--seed", "7"])
            .env("SANDPILE_THREADS", threads)
            .output()
            .unwrap()
    };
    let one = run("1");
    let four = run("4");
    assert_eq!(one.status.code(), Some(0));
    assert_eq!(one.stdout, four.stdout);
    assert_eq!(run("zero").status.code(), Some(2));
}
