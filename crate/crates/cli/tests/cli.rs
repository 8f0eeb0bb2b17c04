use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use ggalg_cli::{run, Output};

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn mt() -> String {
    root().join("crates/core/data/mt.ggml.json").display().to_string()
}

fn rxn() -> String {
    root().join("crates/core/data/dimer.rxn.json").display().to_string()
}

fn data(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name).display().to_string()
}

fn golden_dir() -> PathBuf {
    std::env::var_os("GGALG_GOLDEN_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden"))
}

/// Compares stdout with a golden file; `GGALG_BLESS=1` rewrites it instead.
fn golden(name: &str, args: &[&str]) -> Output {
    let mut argv = vec!["ggalg"];
    argv.extend_from_slice(args);
    let out = run(argv);
    let path = golden_dir().join(name);
    if std::env::var_os("GGALG_BLESS").is_some() {
        fs::write(&path, &out.stdout).unwrap();
    }
    let want = fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert_eq!(out.stdout, want, "output of {args:?} differs from {}", path.display());
    out
}

fn ggalg(args: &[&str]) -> Output {
    let mut argv = vec!["ggalg"];
    argv.extend_from_slice(args);
    run(argv)
}

#[test]
fn retract_grow_product_has_empty_and_shared_terms() {
    let out = golden("product_retract_grow.txt", &["product", &mt(), "retract", "grow"]);
    assert_eq!(out.code, 0);
    assert_eq!(out.stdout.lines().count(), 2);
}

#[test]
fn grow_grow_product_includes_the_chained_growth() {
    // The freshly created tip can be grown again, so besides the disjoint
    // term there is a second overlap.
    let out = golden("product_grow_grow.txt", &["product", &mt(), "grow", "grow"]);
    assert_eq!(out.stdout.lines().count(), 2);
}

#[test]
fn retract_grow_commutator_is_single_shift() {
    let out = golden("commutator_retract_grow.txt", &["commutator", &mt(), "retract", "grow"]);
    assert_eq!(out.code, 0);
    assert_eq!(out.stdout.lines().count(), 1);
    assert!(out.stdout.starts_with("1 · "));
}

#[test]
fn self_commutator_prints_zero() {
    let out = golden("commutator_grow_grow.txt", &["commutator", &mt(), "grow", "grow"]);
    assert_eq!(out.stdout, "0\n");
}

#[test]
fn full_commutator_has_signed_integer_weights() {
    let out = golden("commutator_full_sever_grow.txt", &["commutator", "--kind", "full", &mt(), "sever", "grow"]);
    assert!(out.stdout.lines().any(|l| l.starts_with('-')));
    assert!(out.stdout.lines().all(|l| l.split(' ').next().unwrap().parse::<i64>().is_ok()));
}

#[test]
fn json_and_dot_renderings_are_stable() {
    golden("product_retract_grow.json", &["product", "--format", "json", &mt(), "retract", "grow"]);
    golden("product_retract_grow.dot", &["product", "--format", "dot", &mt(), "retract", "grow"]);
    golden("product_clean_sever_retract.txt", &["product", "--semantics", "clean", &mt(), "sever", "retract"]);
}

#[test]
fn identity_rule_echoes_the_other_factor() {
    let a = ggalg(&["product", &data("identity.ggml.json"), "flip", "id"]);
    let b = ggalg(&["product", &data("identity.ggml.json"), "id", "flip"]);
    assert_eq!(a.stdout, "1 · k :: 0:A => 0:B\n");
    assert_eq!(a, b);
}

#[test]
fn reaction_commands_match_goldens() {
    let p = golden("reactions_product_fuse_split.txt", &["reactions", "product", &rxn(), "fuse", "split"]);
    assert_eq!(p.stdout.lines().count(), 3);
    let c = golden("reactions_commutator_decay_inflow.txt", &["reactions", "commutator", &rxn(), "decay", "inflow"]);
    assert_eq!(c.stdout, "1 · k_decay*k_in :: ∅ -> ∅\n");
    golden("reactions_product_fuse_split.json", &["reactions", "product", "--format", "json", &rxn(), "fuse", "split"]);
}

#[test]
fn reaction_file_verifies() {
    let out = ggalg(&["reactions", "verify", &rxn()]);
    assert_eq!(out.code, 0, "{}", out.stdout);
    assert_eq!(out.stdout.lines().filter(|l| l.contains(": pass")).count(), 16);
}

#[test]
fn reaction_sweep_small() {
    let out = ggalg(&["reactions", "verify", "--max-degree", "2", "--nmax", "8"]);
    assert_eq!(out.code, 0, "{}", out.stdout);
}

#[test]
fn examples_report_matches_golden() {
    // Two overlap counts disagree with their hand-derived pins, so the
    // command reports them and exits 1.
    let out = golden("paper_examples.txt", &["paper-examples"]);
    assert_eq!(out.code, 1);
    assert_eq!(out.stdout.lines().filter(|l| l.starts_with("FAIL")).count(), 2);
}

#[test]
fn small_mt_verification_passes_in_both_modes() {
    let out = ggalg(&["verify", &mt(), "--max-host-nodes", "3", "--max-edges", "2", "--universe", "8"]);
    assert_eq!(out.code, 0, "{}", out.stdout);
    assert_eq!(out.stdout.lines().filter(|l| l.contains(" pass: ")).count(), 32);
}

#[test]
fn full_kind_verification_passes() {
    let out = ggalg(&[
        "verify", &mt(), "--kind", "full", "--semantics", "clean", "--max-host-nodes", "3", "--max-edges", "2",
        "--universe", "8",
    ]);
    assert_eq!(out.code, 0, "{}", out.stdout);
}

#[test]
fn random_corpus_verification_passes() {
    let out = ggalg(&[
        "verify", "--seed", "7", "--random-rules", "50", "--max-host-nodes", "4", "--max-edges", "3", "--universe", "10",
    ]);
    assert_eq!(out.code, 0, "{}", out.stdout);
}

#[test]
fn wrong_compound_is_caught_with_a_counterexample() {
    let sum = ggalg(&["product", "--format", "json", &mt(), "retract", "grow"]).stdout;
    // Drop the overlap term: what is left only covers disjoint matches.
    let mut doc: serde_json::Value = serde_json::from_str(&sum).unwrap();
    doc["terms"].as_array_mut().unwrap().pop();
    let dir = std::env::temp_dir().join(format!("ggalg-mutant-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    let path = dir.join("mutant.json");
    fs::write(&path, doc.to_string()).unwrap();
    let out = ggalg(&[
        "verify", &mt(), "--pair", "retract", "grow", "--sum", path.to_str().unwrap(), "--semantics", "keep",
        "--max-host-nodes", "3", "--max-edges", "2", "--universe", "8",
    ]);
    fs::remove_dir_all(&dir).ok();
    assert_eq!(out.code, 1, "{}", out.stdout);
    assert!(out.stdout.contains("FAIL"));
    assert!(out.stdout.contains("state:"));
}

#[test]
fn exit_codes() {
    assert_eq!(ggalg(&["product", &mt(), "nope", "grow"]).code, 3);
    assert_eq!(ggalg(&["product", &data("broken.ggml.json"), "a", "b"]).code, 2);
    assert_eq!(ggalg(&["product", "/nonexistent/grammar.json", "a", "b"]).code, 2);
    let small = ggalg(&["verify", &mt(), "--universe", "6"]);
    assert_eq!(small.code, 4);
    assert!(small.stderr.contains("--universe 11"), "{}", small.stderr);
    assert_eq!(ggalg(&["reactions", "product", &rxn(), "fuse", "missing"]).code, 3);
}

#[test]
fn binary_reports_exit_codes_and_is_deterministic() {
    let bin = env!("CARGO_BIN_EXE_ggalg");
    let once = Command::new(bin).args(["commutator", "--kind", "full", &mt(), "bundle", "grow"]).output().unwrap();
    let twice = Command::new(bin).args(["commutator", "--kind", "full", &mt(), "bundle", "grow"]).output().unwrap();
    assert!(once.status.success());
    assert_eq!(once.stdout, twice.stdout);
    let bad = Command::new(bin).args(["product", &mt(), "grow", "missing"]).output().unwrap();
    assert_eq!(bad.status.code(), Some(3));
}
