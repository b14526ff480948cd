use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use polysparse::generators::er_laplacian;
use polysparse::io::{read_matrix, write_matrix};
use polysparse::mdbd::{induce_gamma, Mdbd};
use serde_json::Value;
use tempfile::TempDir;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_polysparse"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "bad report ({e}): {}\n{}",
            String::from_utf8_lossy(&out.stdout),
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

fn write_mdbd(dir: &Path, name: &str, mix: &Mdbd) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, serde_json::to_string(mix).unwrap()).unwrap();
    path
}

fn setup() -> TempDir {
    let dir = TempDir::new().unwrap();
    write_matrix(dir.path().join("g.txt"), &er_laplacian(40, 0.3, 7).unwrap()).unwrap();
    let third = 1.0 / 3.0;
    let mix = Mdbd::new(4, vec![0.25, 0.5, 0.75], vec![third, third, third]).unwrap();
    write_mdbd(dir.path(), "mix.json", &mix);
    dir
}

#[test]
fn missing_input_exits_2() {
    let dir = setup();
    let out = run(
        dir.path(),
        &[
            "sparsify", "--graph", "nope.txt", "--mdbd", "mix.json", "--eps", "0.5", "--out", "o.txt",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nope.txt"));
}

#[test]
fn non_power_of_two_needs_flag() {
    let dir = setup();
    write_mdbd(dir.path(), "six.json", &Mdbd::new(6, vec![0.5], vec![1.0]).unwrap());
    let args = [
        "sparsify", "--graph", "g.txt", "--mdbd", "six.json", "--eps", "0.5", "--out", "o.txt",
    ];
    assert_eq!(run(dir.path(), &args).status.code(), Some(2));

    let mut args = args.to_vec();
    args.push("--round-up-N");
    let out = run(dir.path(), &args);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert!(r["warnings"][0].as_str().unwrap().contains("8"));
}

#[test]
fn sparsify_with_verification() {
    let dir = setup();
    let out = run(
        dir.path(),
        &[
            "sparsify", "--graph", "g.txt", "--mdbd", "mix.json", "--eps", "0.5", "--out", "o.txt", "--verify",
        ],
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(&out);
    let v = &r["verification"];
    assert_eq!(v["passed"], true);
    let lo = v["bounds"]["lambda_min"].as_f64().unwrap();
    let hi = v["bounds"]["lambda_max"].as_f64().unwrap();
    assert!(lo >= 0.5 && hi <= 1.5, "{lo} {hi}");
    assert_eq!(r["seed"], 0);

    let b = read_matrix(dir.path().join("o.txt")).unwrap();
    assert_eq!(b.d(), read_matrix(dir.path().join("g.txt")).unwrap().d());

    let out = run(dir.path(), &["verify", "--x", "o.txt", "--y", "o.txt", "--eps", "0.01"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert!((r["verification"]["bounds"]["lambda_min"].as_f64().unwrap() - 1.0).abs() < 1e-9);
    assert_eq!(r["result"]["same_text"], true);
}

#[test]
fn verify_rejects_distant_matrices() {
    let dir = setup();
    write_matrix(dir.path().join("h.txt"), &er_laplacian(40, 0.3, 8).unwrap()).unwrap();
    let out = run(dir.path(), &["verify", "--x", "g.txt", "--y", "h.txt", "--eps", "0.1"]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(report(&out)["verification"]["passed"], false);
}

#[test]
fn outputs_are_reproducible() {
    let dir = setup();
    for (seed, name) in [("3", "a.txt"), ("3", "b.txt"), ("4", "c.txt")] {
        let out = run(
            dir.path(),
            &[
                "sparsify", "--graph", "g.txt", "--mdbd", "mix.json", "--eps", "0.5", "--out", name, "--seed", seed,
            ],
        );
        assert_eq!(out.status.code(), Some(0));
    }
    let read = |n: &str| std::fs::read(dir.path().join(n)).unwrap();
    assert_eq!(read("a.txt"), read("b.txt"));
    read_matrix(dir.path().join("c.txt")).unwrap();
}

#[test]
fn fit_pdf_then_recover() {
    let dir = setup();
    let out = run(
        dir.path(),
        &[
            "fit-pdf", "--pdf", "uniform", "--N", "16", "--eps-i", "0.25", "--out", "u.json",
        ],
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(report(&out)["result"]["T"], 32);
    let text = std::fs::read_to_string(dir.path().join("u.json")).unwrap();
    let mix: Mdbd = serde_json::from_str(&text).unwrap();
    assert_eq!(mix.degree(), 16);

    let small = Mdbd::new(2, vec![0.2, 0.5, 0.8], vec![0.5, 0.3, 0.2]).unwrap();
    let gamma = induce_gamma(&small);
    let vec_text = |v: &[f64]| v.iter().map(|x| format!("{x:?}\n")).collect::<String>();
    std::fs::write(dir.path().join("p.txt"), vec_text(&[0.2, 0.5, 0.8])).unwrap();
    std::fs::write(dir.path().join("gamma.txt"), vec_text(&gamma)).unwrap();
    let out = run(
        dir.path(),
        &["recover", "--p", "p.txt", "--gamma", "gamma.txt", "--out", "alpha.json"],
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rec: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("alpha.json")).unwrap()).unwrap();
    for (got, want) in rec["alpha"].as_array().unwrap().iter().zip([0.5, 0.3, 0.2]) {
        assert!((got.as_f64().unwrap() - want).abs() < 1e-8);
    }
    assert_eq!(rec["valid"], true);
}

#[test]
fn escape_and_solve() {
    let dir = setup();
    std::fs::write(dir.path().join("s.txt"), "[0, 1, 2, 3]\n").unwrap();
    let out = run(
        dir.path(),
        &[
            "escape", "--graph", "g.txt", "--mdbd", "mix.json", "--subset", "s.txt", "--exact",
        ],
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let ratio = report(&out)["result"]["ratio"].as_f64().unwrap();
    assert!((0.5..=1.5).contains(&ratio), "{ratio}");

    let n = 40;
    let diag: String = (0..n).map(|_| "20\n").collect();
    std::fs::write(dir.path().join("d.txt"), diag).unwrap();
    let rhs: String = (0..n).map(|i| format!("{}\n", (i % 5) as f64 - 2.0)).collect();
    std::fs::write(dir.path().join("b.txt"), rhs).unwrap();
    let out = run(
        dir.path(),
        &[
            "solve", "--graph", "g.txt", "--diag", "d.txt", "--b", "b.txt", "--eps", "1e-6", "--out", "x.json",
        ],
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(&out);
    assert!(r["result"]["residual"].as_f64().unwrap() <= 1e-6);
    let x: Vec<f64> = serde_json::from_str(&std::fs::read_to_string(dir.path().join("x.json")).unwrap()).unwrap();
    assert_eq!(x.len(), n);
}

#[test]
fn report_can_go_to_a_file() {
    let dir = setup();
    let out = run(
        dir.path(),
        &[
            "--report", "r.json", "fit-pdf", "--pdf", "exp:2", "--N", "8", "--eps-i", "0.25", "--out", "e.json",
        ],
    );
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let r: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("r.json")).unwrap()).unwrap();
    assert_eq!(r["command"], "fit-pdf");
}
