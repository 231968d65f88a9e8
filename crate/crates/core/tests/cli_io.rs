//! End-to-end checks of the installed binary: flag parsing, file formats,
//! and the exit-code contract.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use edp::encoder::{reference_protocol_442, EncodingClass, ProtocolSpec};
use edp::pauli::Stabilizer;
use edp::symplectic::{
    complete_hyperbolic, for_each_hyperbolic_basis, quotient_form, GfVector, QuotientSpace,
    Subspace,
};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_edp"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn write_reference_spec(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("reference.json");
    fs::write(&path, reference_protocol_442().to_canonical_json() + "\n").unwrap();
    path
}

/// A minimal [[2,1]] protocol: stabilizer Z.Z with its first encoding class.
fn small_21_spec() -> ProtocolSpec {
    let c = Subspace::from_span(2, 4, &[GfVector::from_halves(2, &[0, 0], &[1, 1]).unwrap()])
        .unwrap();
    let quot = QuotientSpace::new(&c).unwrap();
    let mut first: Option<EncodingClass> = None;
    for_each_hyperbolic_basis(2, 2, |x, y| quotient_form(2, x, y), |pairs| {
        if first.is_none() {
            let xi_high = vec![quot.lift(&pairs[0].0)];
            let eta_high = vec![quot.lift(&pairs[0].1)];
            first = Some(EncodingClass::build(&c, &xi_high, &eta_high).unwrap());
        }
    })
    .unwrap();
    let stab = Stabilizer::from_subspace(&c).unwrap();
    ProtocolSpec::with_zero_t(stab, first.unwrap()).unwrap()
}

#[test]
fn count_prints_the_search_space_sizes() {
    let out = run(&["count", "-n", "4", "-k", "2", "-p", "2"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("stabilizers (self-orthogonal subspaces): 5355"));
    assert!(text.contains("encoding classes per stabilizer: 720"));
    assert!(text.contains("candidates: 3855600"));
    assert!(text.contains("reduction factor: 12288"));

    let out = run(&["count", "-n", "1", "-k", "1"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("stabilizers (self-orthogonal subspaces): 1"));
    assert!(text.contains("encoding classes per stabilizer: 6"));
    assert!(text.contains("candidates: 6"));
}

#[test]
fn enumerate_round_trips_bit_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("all21.jsonl");
    let out = run(&["enumerate", "-n", "2", "-k", "1", "-p", "2", "--out", path.to_str().unwrap()]);
    assert!(out.status.success());
    let body = fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = body.lines().collect();
    assert_eq!(lines.len(), 90);
    for line in &lines {
        let spec = ProtocolSpec::from_json(line).unwrap();
        assert_eq!(&spec.to_canonical_json(), line);
    }
    // No two candidates serialize identically.
    let distinct: std::collections::BTreeSet<&&str> = lines.iter().collect();
    assert_eq!(distinct.len(), 90);
}

#[test]
fn verify_accepts_the_reference_and_rejects_corruption() {
    let dir = tempfile::tempdir().unwrap();
    let good = write_reference_spec(dir.path());
    let out = run(&["verify", "--spec", good.to_str().unwrap(), "--samples", "3"]);
    assert!(out.status.success(), "verify failed: {}", stdout(&out));
    assert!(stdout(&out).contains("all checks passed"));

    // A class row moved off the commutant must not verify.
    let tampered = reference_protocol_442()
        .to_canonical_json()
        .replace("\"eta_high\":[[0,0,0,0,0,1,0,1],", "\"eta_high\":[[0,0,0,0,1,1,1,0],");
    let bad = dir.path().join("tampered.json");
    fs::write(&bad, tampered).unwrap();
    let out = run(&["verify", "--spec", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn simulate_traces_branches_and_rounds() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_reference_spec(dir.path());
    let out = run(&[
        "simulate",
        "--spec",
        spec.to_str().unwrap(),
        "--fidelity",
        "0.85",
        "--rounds",
        "3",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("first-round branches:"));
    assert!(text.contains("iterated zero branch:"));
    assert!(text.contains("yield per round"));
}

#[test]
fn curve_writes_an_inclusive_csv_grid() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_reference_spec(dir.path());
    let csv = dir.path().join("curve.csv");
    let out = run(&[
        "curve",
        "--spec",
        spec.to_str().unwrap(),
        "--f-min",
        "0.7",
        "--f-max",
        "0.9",
        "--f-step",
        "0.1",
        "--rounds",
        "2",
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let body = fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = body.lines().collect();
    assert_eq!(lines[0], "F,rounds,accept_prob_product,entropy_bits,yield");
    // Three grid points, rounds 0..=2 each.
    assert_eq!(lines.len(), 1 + 3 * 3);
    assert!(lines[1].starts_with("0.7,0,"));
    assert!(lines.iter().any(|l| l.starts_with("0.9,2,")));
}

#[test]
fn search_respects_budget_and_writes_a_ranked_report() {
    let out = run(&["search", "-n", "2", "-k", "1", "-p", "2", "--budget", "10"]);
    assert_eq!(out.status.code(), Some(3));

    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.md");
    let out = run(&[
        "search",
        "-n",
        "2",
        "-k",
        "1",
        "-p",
        "2",
        "--workers",
        "2",
        "--top",
        "2",
        "--out",
        report.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "search failed: {}", stdout(&out));
    let text = stdout(&out);
    assert!(text.contains("evaluated: 90 candidates in 15 stabilizer chunks"));
    assert!(text.contains("rank 1: objective"));
    assert!(text.contains("best yield per fidelity:"));
    let body = fs::read_to_string(&report).unwrap();
    assert!(body.starts_with("# protocol search results"));
    assert!(body.contains("## rank 1 objective"));
    assert!(body.contains("F,rounds,accept_prob_product,entropy_bits,yield"));
}

#[test]
fn compare_emits_one_yield_column_per_spec() {
    let dir = tempfile::tempdir().unwrap();
    let reference = write_reference_spec(dir.path());
    let small = dir.path().join("small.json");
    fs::write(&small, small_21_spec().to_canonical_json() + "\n").unwrap();
    let csv = dir.path().join("cmp.csv");
    let out = run(&[
        "compare",
        "--spec",
        reference.to_str().unwrap(),
        "--spec",
        small.to_str().unwrap(),
        "--f-min",
        "0.8",
        "--f-max",
        "1.0",
        "--f-step",
        "0.1",
        "--rounds",
        "2",
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let body = fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = body.lines().collect();
    assert_eq!(lines[0], "F,yield_reference,yield_small");
    assert_eq!(lines.len(), 4);
    // Perfect input needs no distillation: both protocols report yield 1.
    assert_eq!(lines[3], "1,1,1");
    for line in &lines[1..] {
        let cells: Vec<&str> = line.split(',').collect();
        assert_eq!(cells.len(), 3);
        for cell in &cells[1..] {
            let y: f64 = cell.parse().unwrap();
            assert!((0.0..=1.0).contains(&y));
        }
    }
}

#[test]
fn compare_shows_the_class_choice_matters_on_one_stabilizer() {
    // Same stabilizer, two encoding classes: the tuned class is never worse
    // and strictly better at low fidelity; at high fidelity the best play
    // for both is no distillation at all, so the columns tie exactly.
    let dir = tempfile::tempdir().unwrap();
    let tuned = write_reference_spec(dir.path());
    let reference = reference_protocol_442();
    let c = reference.stab().c().clone();
    let ext = complete_hyperbolic(2, 8, c.rows()).unwrap();
    let class =
        EncodingClass::build(&c, &ext.xi()[2..].to_vec(), &ext.eta()[2..].to_vec()).unwrap();
    let plain_spec = ProtocolSpec::with_zero_t(reference.stab().clone(), class).unwrap();
    let plain = dir.path().join("plain.json");
    fs::write(&plain, plain_spec.to_canonical_json() + "\n").unwrap();

    let csv = dir.path().join("classes.csv");
    let out = run(&[
        "compare",
        "--spec",
        tuned.to_str().unwrap(),
        "--spec",
        plain.to_str().unwrap(),
        "--f-min",
        "0.6",
        "--f-max",
        "1.0",
        "--f-step",
        "0.05",
        "--rounds",
        "4",
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let body = fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = body.lines().collect();
    assert_eq!(lines[0], "F,yield_reference,yield_plain");
    let mut strictly_better = 0usize;
    for line in &lines[1..] {
        let cells: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        assert!(cells[1] >= cells[2], "tuned class below plain class at F={}", cells[0]);
        if cells[1] > cells[2] {
            strictly_better += 1;
        }
    }
    assert!(strictly_better >= 2);
}

#[test]
fn usage_and_domain_errors_use_the_reserved_exit_codes() {
    // Missing required flag: usage error from the parser.
    let out = run(&["simulate"]);
    assert_eq!(out.status.code(), Some(2));

    // Out-of-range fidelity: domain error, same exit class.
    let dir = tempfile::tempdir().unwrap();
    let spec = write_reference_spec(dir.path());
    let out = run(&["simulate", "--spec", spec.to_str().unwrap(), "--fidelity", "1.5"]);
    assert_eq!(out.status.code(), Some(2));

    // Unknown subcommand.
    let out = run(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
}
