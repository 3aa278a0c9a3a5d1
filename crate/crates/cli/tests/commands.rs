use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::Value;
use shallow_relu::io;
use shallow_relu::reduce::{build_gadget, forward_construct, HardSortWitness, Side};
use shallow_relu::synth;
use tempfile::TempDir;

struct Out {
    code: i32,
    stdout: String,
    stderr: String,
}

fn cli(args: &[&str]) -> Out {
    let out = Command::new(env!("CARGO_BIN_EXE_shallow-relu")).args(args).output().unwrap();
    Out {
        code: out.status.code().unwrap(),
        stdout: String::from_utf8(out.stdout).unwrap(),
        stderr: String::from_utf8(out.stderr).unwrap(),
    }
}

fn path(dir: &TempDir, name: &str) -> PathBuf {
    dir.path().join(name)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn report(p: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

fn unseparable_instance(dir: &TempDir) -> PathBuf {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let inst = synth::unseparable(&mut rng, 6, 2, 10_000).unwrap().expect("found one");
    let p = path(dir, "unsep.json");
    io::save_json(&p, &inst).unwrap();
    p
}

#[test]
fn gadget_only_writes_thirteen_points() {
    let dir = TempDir::new().unwrap();
    let (plain, headed) = (path(&dir, "g.csv"), path(&dir, "h.csv"));
    assert_eq!(cli(&["generate", "gadget-only", "--out", s(&plain)]).code, 0);
    assert_eq!(cli(&["generate", "gadget-only", "--header", "--out", s(&headed)]).code, 0);
    let rows = fs::read_to_string(&plain).unwrap();
    assert_eq!(rows.lines().count(), 13);
    let headed = fs::read_to_string(&headed).unwrap();
    assert_eq!(headed.lines().next(), Some("x_1,x_2,y"));
    assert_eq!(headed.lines().count(), 14);
    let data = io::load_dataset(&plain, io::Header::Auto).unwrap();
    assert_eq!(data.s1().len(), 5);
}

#[test]
fn planted_net_without_points_is_an_error() {
    let dir = TempDir::new().unwrap();
    let r = path(&dir, "r.json");
    let out = cli(&["generate", "planted-net", "--n", "0", "--out", s(&path(&dir, "p.csv")), "--report", s(&r)]);
    assert_eq!(out.code, 1);
    assert!(out.stderr.contains("error"));
    assert!(report(&r)["outcome"]["error"].is_string());
}

#[test]
fn pipeline_on_planted_separable_instance_agrees_true() {
    let dir = TempDir::new().unwrap();
    let (inst, r) = (path(&dir, "s.json"), path(&dir, "r.json"));
    assert_eq!(cli(&["generate", "separable", "--n", "6", "--d", "2", "--seed", "7", "--out", s(&inst)]).code, 0);
    let out = cli(&["pipeline", s(&inst), "--report", s(&r)]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let o = &report(&r)["outcome"];
    assert_eq!(o["decision"], true);
    assert_eq!(o["witness_valid"], true);
    assert_eq!(o["exhaustive_separable"], true);
    assert_eq!(o["agree"], true);
}

#[test]
fn pipeline_on_unseparable_instance_agrees_false() {
    let dir = TempDir::new().unwrap();
    let inst = unseparable_instance(&dir);
    let r = path(&dir, "r.json");
    let out = cli(&["pipeline", s(&inst), "--report", s(&r)]);
    assert_eq!(out.code, 2, "{}", out.stderr);
    let o = &report(&r)["outcome"];
    assert_eq!(o["decision"], false);
    assert_eq!(o["witness_valid"], false);
    assert_eq!(o["exhaustive_separable"], false);
    assert_eq!(o["agree"], true);
}

#[test]
fn pipeline_on_gadget_only_instance_decides_true() {
    let dir = TempDir::new().unwrap();
    let inst = path(&dir, "g.json");
    assert_eq!(cli(&["generate", "gadget-only", "--out", s(&path(&dir, "g.csv")), "--instance", s(&inst)]).code, 0);
    let out = cli(&["pipeline", s(&inst)]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    assert!(out.stdout.starts_with("decision true"));
}

#[test]
fn outcomes_are_reproducible() {
    let dir = TempDir::new().unwrap();
    let run = |seed: &str, tag: &str| {
        let data = path(&dir, &format!("{tag}.csv"));
        let (g, t) = (path(&dir, &format!("{tag}-g.json")), path(&dir, &format!("{tag}-t.json")));
        let gen = ["generate", "planted-net", "--n", "6", "--d", "2", "--seed", seed, "--out", s(&data), "--report", s(&g)];
        assert_eq!(cli(&gen).code, 0);
        assert_eq!(cli(&["train-exact", s(&data), "--seed", seed, "--report", s(&t)]).code, 0);
        (report(&g), report(&t))
    };
    let (g1, t1) = run("5", "a");
    let (g2, t2) = run("5", "b");
    let (g3, _) = run("6", "c");
    assert_eq!(g1["outcome"], g2["outcome"]);
    assert_eq!(t1["outcome"], t2["outcome"]);
    assert_eq!(t1["inputs"][0]["sha256"], t2["inputs"][0]["sha256"]);
    assert_eq!(t1["seed"], 5);
    assert_eq!(t1["command"], "train-exact");
    assert!(t1["wall_time"].as_f64().unwrap() >= 0.0);
    assert_ne!(g1["outcome"], g3["outcome"]);
    assert!(t1["outcome"]["loss"].as_f64().unwrap() <= 1e-8);
    assert_eq!(t1["outcome"]["certificate"], true);
}

#[test]
fn train_exact_exit_codes() {
    let dir = TempDir::new().unwrap();
    let inst = unseparable_instance(&dir);
    let data = path(&dir, "d.csv");
    assert_eq!(cli(&["reduce", s(&inst), "--out", s(&data)]).code, 0);
    assert_eq!(cli(&["train-exact", s(&data), "--decision"]).code, 2);
    let r = path(&dir, "r.json");
    let out = cli(&["train-exact", s(&data), "--budget", "5", "--report", s(&r)]);
    assert_eq!(out.code, 3);
    assert!(report(&r)["outcome"]["error"].as_str().unwrap().contains("budget"));
    assert_eq!(cli(&["train-exact", s(&path(&dir, "missing.csv"))]).code, 1);
    assert_eq!(cli(&["train-exact", s(&data), "--threads", "0"]).code, 1);
    assert_eq!(cli(&["no-such-command"]).code, 1);
}

#[test]
fn reduce_train_extract_round_trip() {
    let dir = TempDir::new().unwrap();
    let (inst, data, net, w) = (path(&dir, "s.json"), path(&dir, "d.csv"), path(&dir, "n.json"), path(&dir, "w.json"));
    assert_eq!(cli(&["generate", "separable", "--n", "5", "--d", "1", "--seed", "2", "--out", s(&inst)]).code, 0);
    assert_eq!(cli(&["reduce", s(&inst), "--out", s(&data)]).code, 0);
    assert_eq!(cli(&["train-exact", s(&data), "--decision", "--out", s(&net)]).code, 0);
    assert_eq!(cli(&["verify", s(&net), s(&data)]).code, 0);
    let out = cli(&["extract-witness", s(&net), s(&inst), "--out", s(&w)]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    assert!(out.stdout.contains("valid: true"));
    assert!(w.exists());
}

#[test]
fn hard_sort_witness_from_forward_construction() {
    let dir = TempDir::new().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (inst, planted) = synth::planted_separable(&mut rng, 8, 2, 0.05).unwrap();
    let norm = inst.normalized();
    let net = forward_construct(&inst, &planted).unwrap();
    let gadget = build_gadget(&norm).unwrap();
    let origin = vec![0.0; 4];
    let data = path(&dir, "d.csv");
    io::save_dataset(&data, &gadget, false).unwrap();
    let mut codes = Vec::new();
    for side in [Side::Above, Side::Below] {
        let w = path(&dir, "w.json");
        io::save_json(&w, &HardSortWitness::from_net(&net, &origin, side)).unwrap();
        codes.push(cli(&["check-hardsort", s(&data), s(&w)]).code);
    }
    codes.sort();
    assert_eq!(codes, [0, 2]);
}

#[test]
fn fit_nrelu_then_verify() {
    let dir = TempDir::new().unwrap();
    let (data, net, r) = (path(&dir, "d.csv"), path(&dir, "n.json"), path(&dir, "r.json"));
    let gen = ["generate", "random-labels", "--n", "40", "--d", "3", "--seed", "9", "--out", s(&data)];
    assert_eq!(cli(&gen).code, 0);
    assert_eq!(cli(&["fit-nrelu", s(&data), "--seed", "1", "--out", s(&net), "--report", s(&r)]).code, 0);
    let o = &report(&r)["outcome"];
    assert!(o["nodes"].as_u64().unwrap() <= 40);
    assert!(o["max_error"].as_f64().unwrap() <= 1e-9);
    assert_eq!(cli(&["verify", s(&net), s(&data)]).code, 0);

    let mut shifted = io::load_dataset(&data, io::Header::Auto).unwrap().into_points();
    shifted[0].y += 0.5;
    let bad = path(&dir, "bad.csv");
    io::save_dataset(&bad, &shallow_relu::Dataset::new(shifted).unwrap(), true).unwrap();
    assert_eq!(cli(&["verify", s(&net), s(&bad)]).code, 2);
}

#[test]
fn enum_dichotomies_prints_count_and_signs() {
    let dir = TempDir::new().unwrap();
    let data = path(&dir, "d.csv");
    fs::write(&data, "x_1,y\n0.5,1\n-1,0\n2,0\n3.25,1\n").unwrap();
    let out = cli(&["enum-dichotomies", s(&data)]);
    assert_eq!(out.code, 0);
    assert_eq!(out.stdout.trim(), "8");
    let out = cli(&["enum-dichotomies", s(&data), "--signs"]);
    let lines: Vec<&str> = out.stdout.lines().collect();
    assert_eq!(lines.len(), 9);
    assert!(lines[1..].iter().all(|l| l.split(',').count() == 4));
    let mut rows = lines[1..].to_vec();
    rows.sort();
    rows.dedup();
    assert_eq!(rows.len(), 8);
}

#[test]
fn planted_files_round_trip_exactly() {
    let dir = TempDir::new().unwrap();
    let (data, net, r) = (path(&dir, "d.csv"), path(&dir, "n.json"), path(&dir, "r.json"));
    let gen = ["generate", "planted-net", "--n", "12", "--d", "3", "--seed", "21", "--out", s(&data), "--net", s(&net)];
    assert_eq!(cli(&gen).code, 0);
    assert_eq!(cli(&["verify", s(&net), s(&data), "--tol", "0", "--report", s(&r)]).code, 0);
    assert_eq!(report(&r)["outcome"]["max_error"].as_f64(), Some(0.0));
}
