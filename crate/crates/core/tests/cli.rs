use std::path::Path;
use std::process::{Command, Output};

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_torus-tutte")).args(args).output().unwrap()
}

fn path(dir: &Path, name: &str) -> String {
    dir.join(name).to_str().unwrap().to_string()
}

fn stdout_json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

fn gen(dir: &Path, m: &str, perturb: Option<&str>, seed: &str, tag: &str) -> (String, String) {
    let (mesh, placement) = (path(dir, &format!("{tag}_mesh.json")), path(dir, &format!("{tag}_p.json")));
    let mut args = vec!["gen", "-m", m, "--mesh-out", &mesh, "--placement-out", &placement, "--seed", seed];
    if let Some(mag) = perturb {
        args.extend(["--perturb", mag]);
    }
    let out = bin(&args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    (mesh, placement)
}

#[test]
fn gen_validate_and_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let (mesh, p) = gen(dir.path(), "3", None, "0", "g");
    let out = bin(&["validate", "--mesh", &mesh, "--placement", &p]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert_eq!((v["vertices"].as_u64(), v["edges"].as_u64(), v["faces"].as_u64()), (Some(9), Some(27), Some(18)));
    assert_eq!((v["k"].as_u64(), v["k_prime"].as_u64()), (Some(3), Some(3)));
    assert_eq!(v["embedding"]["is_embedding"], true);

    let (pmesh, pp) = gen(dir.path(), "5", Some("0.05"), "9", "p");
    let w = path(dir.path(), "w.json");
    let q = path(dir.path(), "q.json");
    assert!(bin(&["mvc", "--mesh", &pmesh, "--placement", &pp, "--out", &w]).status.success());
    assert!(bin(&["embed", "--mesh", &pmesh, "--weights", &w, "--out", &q]).status.success());
    let a: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&pp).unwrap()).unwrap();
    let b: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&q).unwrap()).unwrap();
    for (x, y) in a["coords"].as_array().unwrap().iter().zip(b["coords"].as_array().unwrap()) {
        for k in 0..2 {
            assert!((x[k].as_f64().unwrap() - y[k].as_f64().unwrap()).abs() < 1e-8);
        }
    }
    let e = stdout_json(&bin(&["energy", "--mesh", &pmesh, "--weights", &w]));
    assert_eq!(e["admissible"], true);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = path(dir.path(), "bad.json");
    std::fs::write(&bad, r#"{"vertex_count": 3, "faces": [[0, 1, 2]]}"#).unwrap();
    assert_eq!(bin(&["validate", "--mesh", &bad]).status.code(), Some(2));
    assert_eq!(bin(&["validate", "--mesh", &path(dir.path(), "nope.json")]).status.code(), Some(2));
    assert_eq!(bin(&["gen", "-m", "2", "--mesh-out", &bad, "--placement-out", &bad]).status.code(), Some(2));
    assert_eq!(bin(&["frobnicate"]).status.code(), Some(2));

    // weights that are far from admissible cannot be embedded directly
    let (mesh, _) = gen(dir.path(), "3", None, "0", "g");
    let w = path(dir.path(), "w.json");
    let text = std::fs::read_to_string(&mesh).unwrap();
    let file: serde_json::Value = serde_json::from_str(&text).unwrap();
    let faces = file["faces"].as_array().unwrap();
    let mut triples = Vec::new();
    for f in faces {
        let f: Vec<u64> = f.as_array().unwrap().iter().map(|v| v.as_u64().unwrap()).collect();
        for (a, b) in [(f[0], f[1]), (f[1], f[2]), (f[2], f[0])] {
            let weight = if (a, b) == (0, 1) { 4.0 } else { 1.0 };
            triples.push(serde_json::json!([a, b, weight]));
        }
    }
    std::fs::write(&w, serde_json::json!({ "weights": triples }).to_string()).unwrap();
    assert_eq!(bin(&["embed", "--mesh", &mesh, "--weights", &w]).status.code(), Some(3));

    // a tiny step budget fails numerically
    let out = bin(&["retract", "--mesh", &mesh, "--weights", &w, "--max-steps", "1"]);
    assert_eq!(out.status.code(), Some(3));

    let trace = path(dir.path(), "trace.jsonl");
    let fixed = path(dir.path(), "fixed.json");
    let out = bin(&["retract", "--mesh", &mesh, "--weights", &w, "--trace", &trace, "--out", &fixed]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout_json(&out)["status"], "Converged");
    let lines = std::fs::read_to_string(&trace).unwrap();
    let energies: Vec<f64> = lines
        .lines()
        .filter_map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap()["energy"].as_f64())
        .collect();
    assert!(energies.windows(2).all(|p| p[1] < p[0]));
    assert!(bin(&["embed", "--mesh", &mesh, "--weights", &fixed, "--quiet"]).status.success());
}

#[test]
fn morph_index_render() {
    let dir = tempfile::tempdir().unwrap();
    let (mesh, a) = gen(dir.path(), "4", Some("0.05"), "1", "a");
    let (_, b) = gen(dir.path(), "4", Some("0.05"), "2", "b");
    let frames = dir.path().join("frames");
    let out = bin(&[
        "morph",
        "--mesh",
        &mesh,
        "--from",
        &a,
        "--to",
        &b,
        "--steps",
        "4",
        "--out-dir",
        frames.to_str().unwrap(),
        "--svg",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(stdout_json(&out)["verification"]["passed"], true);
    for k in 0..4 {
        assert!(frames.join(format!("frame_{k:03}.json")).exists());
        let svg = std::fs::read_to_string(frames.join(format!("frame_{k:03}.svg"))).unwrap();
        roxmltree::Document::parse(&svg).unwrap();
    }

    let idx = stdout_json(&bin(&["index", "--mesh", &mesh, "--placement", &a, "--dir", "0.3"]));
    assert_eq!(idx["theorem_holds"], true);
    assert_eq!(idx["report"]["total"], 0.0);
    let generic = stdout_json(&bin(&["index", "--mesh", &mesh, "--placement", &a]));
    assert_eq!(generic["angle"], 0.1);

    let svg = path(dir.path(), "a.svg");
    assert!(bin(&["render", "--mesh", &mesh, "--placement", &a, "--out", &svg, "--labels", "--size", "400"])
        .status
        .success());
    let text = std::fs::read_to_string(&svg).unwrap();
    let doc = roxmltree::Document::parse(&text).unwrap();
    assert_eq!(doc.root_element().attribute("width"), Some("400"));
}

#[test]
fn outputs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let run = |tag: &str| {
        let (mesh, p) = gen(dir.path(), "4", Some("0.06"), "17", tag);
        let w = path(dir.path(), &format!("{tag}_w.json"));
        assert!(bin(&["mvc", "--mesh", &mesh, "--placement", &p, "--out", &w]).status.success());
        [mesh, p, w].map(|f| std::fs::read(f).unwrap())
    };
    assert_eq!(run("x"), run("y"));
}
