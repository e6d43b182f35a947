use std::path::Path;
use std::process::{Command, Output};

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_euclid-sr")).current_dir(dir).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn reduction_pipeline_roundtrips() {
    let t = tempfile::tempdir().unwrap();
    let d = t.path();
    assert_eq!(code(&run(d, &["gen", "prism", "--x3c", "x.json", "--layout", "l.json"])), 0);
    assert_eq!(code(&run(d, &["x3c", "validate", "x.json"])), 0);
    assert_eq!(code(&run(d, &["layout", "validate", "x.json", "l.json"])), 0);
    assert_eq!(code(&run(d, &["layout", "scale", "--L", "40", "x.json", "l.json", "-o", "ls.json"])), 0);
    assert_eq!(code(&run(d, &["x3c", "solve", "x.json", "-o", "c.json"])), 0);
    let o = run(d, &["reduce", "--d", "3", "--scale", "40", "x.json", "l.json", "-o", "i.json", "--cert", "cert.json"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(code(&run(d, &["synthesize-solution", "cert.json", "c.json", "-o", "m.json"])), 0);
    assert_eq!(code(&run(d, &["verify", "i.json", "m.json"])), 0);
    let o = run(d, &["extract-cover", "cert.json", "m.json", "--instance", "i.json", "-o", "back.json"]);
    assert_eq!(code(&o), 0);
    let a = std::fs::read(d.join("c.json")).unwrap();
    let b = std::fs::read(d.join("back.json")).unwrap();
    assert_eq!(a, b);
    assert_eq!(code(&run(d, &["render", "i.json", "m.json", "-o", "out.svg"])), 0);
    assert!(std::fs::read_to_string(d.join("out.svg")).unwrap().contains("<svg"));
}

#[test]
fn verify_reports_split_star3() {
    let t = tempfile::tempdir().unwrap();
    let d = t.path();
    assert_eq!(code(&run(d, &["gen", "star3", "--standalone", "-o", "s.json"])), 0);
    std::fs::write(d.join("split.json"), r#"{"coalitions": [["0","4","6"],["1","2","7"],["3","9","10"],["5","8","11"]]}"#)
        .unwrap();
    let o = run(d, &["verify", "s.json", "split.json"]);
    assert_eq!(code(&o), 3);
    assert!(stdout(&o).starts_with("UNSTABLE"));
    let o = run(d, &["verify", "s.json", "split.json", "--containing", "10,11"]);
    assert_eq!(code(&o), 3);
    let line = stdout(&o).lines().nth(1).unwrap().to_string();
    let ids: Vec<&str> = line.trim_start_matches("blocking coalition: ").split(' ').collect();
    assert!(ids.contains(&"10") && ids.contains(&"11"), "{line}");

    std::fs::write(d.join("good.json"), r#"{"coalitions": [["5","10","11"],["1","6","8"],["2","3","7"],["0","4","9"]]}"#)
        .unwrap();
    assert_eq!(code(&run(d, &["verify", "s.json", "good.json"])), 0);
    std::fs::write(d.join("bad.json"), r#"{"coalitions": [["5","10","x"]]}"#).unwrap();
    let o = run(d, &["verify", "s.json", "bad.json"]);
    assert_eq!(code(&o), 4);
    assert!(String::from_utf8_lossy(&o.stderr).contains("coalitions[0][2]"));
}

#[test]
fn lemma_drivers() {
    let t = tempfile::tempdir().unwrap();
    let d = t.path();
    let o = run(d, &["lemma", "check-star3"]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o).lines().next().unwrap(), "15400 partitions, all stable matchings contain {5,10,11}");
    assert_eq!(code(&run(d, &["lemma", "check-chain-dichotomy"])), 0);
    let a = run(d, &["--seed", "9", "--jobs", "1", "lemma", "sample-starD", "--d", "5", "--samples", "300", "-o", "a.json"]);
    let b = run(d, &["--seed", "9", "--jobs", "3", "lemma", "sample-starD", "--d", "5", "--samples", "300", "-o", "b.json"]);
    assert_eq!(code(&a), 0);
    assert_eq!(stdout(&a), stdout(&b));
    assert!(stdout(&a).starts_with("# seed: 9"));
    assert_eq!(std::fs::read(d.join("a.json")).unwrap(), std::fs::read(d.join("b.json")).unwrap());
}

#[test]
fn exit_codes() {
    let t = tempfile::tempdir().unwrap();
    let d = t.path();
    assert_eq!(code(&run(d, &["no-such-command"])), 2);
    assert_eq!(code(&run(d, &["gen", "star", "--d", "2"])), 2);
    assert_eq!(code(&run(d, &["gen", "star3", "--standalone", "-o", "s.json"])), 0);
    assert_eq!(code(&run(d, &["solve", "--budget", "5", "s.json"])), 5);
    let o = run(d, &["solve", "--method", "enumerate", "--limit", "1", "s.json"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("\"hit_limit\": true"));
    std::fs::write(d.join("x.json"), r#"{"n": 1, "sets": [[1, 2, 3], [1, 2, 3], [1, 2, 4]]}"#).unwrap();
    assert_eq!(code(&run(d, &["x3c", "validate", "x.json"])), 4);
    std::fs::write(d.join("p.json"), r#"{"d": 2, "tolerance": 0.0, "agents": [{"id": "a", "x": 0.0, "y": 0.0}, {"id": "b", "x": 1.0, "y": 0.0}, {"id": "c", "x": 5.0, "y": 0.0}, {"id": "e", "x": 6.0, "y": 0.0}]}"#).unwrap();
    let o = run(d, &["solve", "--method", "greedy2", "p.json"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("[\"a\", \"b\"]"));
}

#[test]
fn gen_outputs_are_byte_stable() {
    let t = tempfile::tempdir().unwrap();
    let d = t.path();
    for args in [["gen", "star", "--d", "5"], ["gen", "star", "--d", "4"]] {
        let a = run(d, &args);
        let b = run(d, &args);
        assert_eq!(code(&a), 0);
        assert_eq!(a.stdout, b.stdout);
    }
}
