//! Acceptance suite: one line per criterion, nonzero exit if any fails.
//!
//! Runs without the libtest harness so the report is always printed.

use std::panic::{self, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

use ggalg_core::corpus::{cyclic_pairs, edge_free_pairs, random_rules, CorpusShape};
use ggalg_core::io::{emit_grammar, emit_rulesum, parse_grammar, parse_rulesum_json, Format, MT_GRAMMAR};
use ggalg_core::reaction::sweep;
use ggalg_core::{
    build_generator, builtin_mt_grammar, check_equivalence, commutator, commutator_with, edge_free_crosscheck,
    enumerate_host_states, full_product, mt_pins, product_hat, reaction_commutator, reaction_product, HostState,
    Label, OperatorKind, RateMonomial, Reaction, Rule, RuleSum, Semantics,
};
use num_traits::Zero;

const SEED: u64 = 7;
const RANDOM_RULES: usize = 200;
const UNIVERSE: usize = 12;
const MAX_NODES: usize = 5;
const MAX_EDGES: usize = 4;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

fn corpus() -> Vec<Rule> {
    random_rules(SEED, RANDOM_RULES, &CorpusShape::default())
}

fn ab() -> Vec<Label> {
    vec![Label::new("A").unwrap(), Label::new("B").unwrap()]
}

fn family(labels: &[Label], mode: Semantics) -> Vec<HostState> {
    enumerate_host_states(UNIVERSE, MAX_NODES, labels, MAX_EDGES, mode).expect("family enumerates")
}

/// Criteria 1 and 2: product_hat against sequential application.
fn oracle_equivalence(mode: Semantics) -> Verdict {
    let start = Instant::now();
    let mt = builtin_mt_grammar();
    let mut failures = Vec::new();
    let mt_family = family(&mt.labels, mode);
    let mut pairs = 0;
    for r1 in &mt.rules {
        for r2 in &mt.rules {
            let rep = check_equivalence(r2, r1, mode, &mt_family).expect("oracle runs");
            pairs += 1;
            if !rep.pass {
                failures.push(format!("{} after {}", r2.name(), r1.name()));
            }
        }
    }
    drop(mt_family);
    let random_family = family(&ab(), mode);
    for (r2, r1) in cyclic_pairs(&corpus()) {
        let rep = check_equivalence(&r2, &r1, mode, &random_family).expect("oracle runs");
        pairs += 1;
        if !rep.pass {
            failures.push(format!("{} after {}", r2.name(), r1.name()));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        failures.is_empty(),
        format!("{pairs} pairs, {} failing {:?}, {secs:.0}s", failures.len(), failures),
    )
}

fn enumeration_pins() -> Verdict {
    let pins = mt_pins().expect("pins compute");
    let overlaps: Vec<_> = pins.iter().filter(|p| p.name.contains("overlaps")).collect();
    let bad: Vec<String> = overlaps.iter().filter(|p| !p.pass()).map(|p| format!("{} = {} (want {})", p.name, p.actual, p.expected)).collect();
    verdict(bad.is_empty(), format!("{} overlap pins, mismatches: {bad:?}", overlaps.len()))
}

fn commutator_pins() -> Verdict {
    let pins = mt_pins().expect("pins compute");
    let mut bad: Vec<String> = pins
        .iter()
        .filter(|p| p.name.starts_with('[') && !p.pass())
        .map(|p| p.name.clone())
        .collect();
    let mt = builtin_mt_grammar();
    for mode in Semantics::ALL {
        for kind in [OperatorKind::Hat, OperatorKind::Full] {
            for r in &mt.rules {
                if !commutator(r, r, mode, kind).unwrap().is_empty() {
                    bad.push(format!("[{0},{0}] != 0 ({1})", r.name(), mode.name()));
                }
            }
            for r1 in &mt.rules {
                for r2 in &mt.rules {
                    let with = commutator_with(r2, r1, mode, kind, true).unwrap();
                    let without = commutator_with(r2, r1, mode, kind, false).unwrap();
                    if with != without {
                        bad.push(format!("empty overlap survives in [{},{}] ({})", r2.name(), r1.name(), mode.name()));
                    }
                }
            }
        }
    }
    verdict(bad.is_empty(), format!("displayed terms, self-commutators, empty-overlap cancellation; problems: {bad:?}"))
}

fn reaction_formulas() -> Verdict {
    let start = Instant::now();
    let report = sweep(3, 2, 12).expect("sweep runs");
    let split = Reaction::new(vec![1], vec![2], RateMonomial::one()).unwrap();
    let fuse = Reaction::new(vec![2], vec![1], RateMonomial::one()).unwrap();
    let p = reaction_product(&fuse, &split).unwrap();
    let coeffs: Vec<i64> = [1u32, 2, 3].iter().map(|&k| p.coefficient(&[k], &[k]).to_integer()).collect();
    let c = reaction_commutator(&fuse, &split).unwrap();
    let worked = coeffs == [2, 4, 1]
        && p.len() == 3
        && c.len() == 2
        && c.coefficient(&[2], &[2]) == 3.into()
        && c.coefficient(&[1], &[1]) == 2.into();
    let secs = start.elapsed().as_secs_f64();
    verdict(
        report.failures.is_empty() && worked && secs < 60.0,
        format!("{} ordered pairs, {} failures, worked case {coeffs:?}, {secs:.0}s", report.pairs, report.failures.len()),
    )
}

fn edge_free() -> Verdict {
    let pairs = edge_free_pairs(SEED, 50, &["A", "B"], 3);
    let bad = pairs
        .iter()
        .filter(|(r2, r1)| !edge_free_crosscheck(r1, r2).expect("edge-free pair").pass)
        .count();
    verdict(bad == 0, format!("{} pairs, {bad} mismatches", pairs.len()))
}

fn conservation() -> Verdict {
    let mt = builtin_mt_grammar();
    let basis = enumerate_host_states(UNIVERSE, 4, &mt.labels, MAX_EDGES, Semantics::CleanHanging).unwrap();
    let g = build_generator(&mt.rules, &basis, Semantics::CleanHanging, OperatorKind::Full).unwrap();
    let valid: Vec<_> = g.valid_columns().collect();
    let leaking = valid.iter().filter(|(_, c)| !c.sum().is_zero()).count();
    verdict(
        !valid.is_empty() && leaking == 0,
        format!("{} basis states, {} complete columns, {leaking} with nonzero sum", basis.len(), valid.len()),
    )
}

fn integer_weights(s: &RuleSum, positive: bool) -> bool {
    s.terms().iter().all(|t| t.scalar().is_integer() && (!positive || t.scalar() > Zero::zero()))
}

fn sign_property() -> Verdict {
    let mut bad = Vec::new();
    for (r2, r1) in cyclic_pairs(&corpus()) {
        for mode in Semantics::ALL {
            if !integer_weights(&product_hat(&r2, &r1, mode).unwrap(), true) {
                bad.push(format!("hat {} {}", r2.name(), r1.name()));
            }
            if !integer_weights(&full_product(&r2, &r1, mode).unwrap(), false) {
                bad.push(format!("full {} {}", r2.name(), r1.name()));
            }
            if !integer_weights(&commutator(&r2, &r1, mode, OperatorKind::Full).unwrap(), false) {
                bad.push(format!("commutator {} {}", r2.name(), r1.name()));
            }
        }
    }
    verdict(bad.is_empty(), format!("{RANDOM_RULES} pairs x 2 modes, problems: {bad:?}"))
}

fn io_and_examples() -> Verdict {
    let mut bad = Vec::new();
    let mt = builtin_mt_grammar();
    let text = emit_grammar(&mt);
    if text != MT_GRAMMAR || emit_grammar(&parse_grammar(&text).unwrap()) != text {
        bad.push("grammar round trip".to_string());
    }
    let mut sums = Vec::new();
    for r1 in &mt.rules {
        for r2 in &mt.rules {
            sums.push(product_hat(r2, r1, Semantics::KeepHanging).unwrap());
            sums.push(commutator(r2, r1, Semantics::CleanHanging, OperatorKind::Full).unwrap());
        }
    }
    for (r2, r1) in cyclic_pairs(&corpus()).into_iter().take(20) {
        sums.push(full_product(&r2, &r1, Semantics::KeepHanging).unwrap());
    }
    let unstable = sums
        .iter()
        .filter(|s| {
            let json = emit_rulesum(s, Format::Json);
            emit_rulesum(&parse_rulesum_json(&json).unwrap(), Format::Json) != json
        })
        .count();
    if unstable > 0 {
        bad.push(format!("{unstable} rule sums not byte-stable"));
    }
    let out = ggalg_cli::run(["ggalg", "paper-examples"]);
    if out.code != 0 {
        bad.push(format!("paper-examples exit {}", out.code));
    }
    verdict(bad.is_empty(), format!("{} rule sums round-tripped; problems: {bad:?}", sums.len()))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Verdict); 9] = [
        ("oracle equivalence, keep-hanging", || oracle_equivalence(Semantics::KeepHanging)),
        ("oracle equivalence, clean-hanging", || oracle_equivalence(Semantics::CleanHanging)),
        ("overlap enumeration pins", enumeration_pins),
        ("commutator pins", commutator_pins),
        ("reaction formulas vs matrices", reaction_formulas),
        ("edge-free cross-check", edge_free),
        ("conservation of full generator", conservation),
        ("integer and sign property", sign_property),
        ("io round trips and example pins", io_and_examples),
    ];
    let quiet = panic::take_hook();
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let v = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            verdict(false, format!("panicked: {}", msg.unwrap_or_default()))
        });
        if !v.pass {
            failed += 1;
        }
        println!("criterion {}: {} {name}: {}", i + 1, if v.pass { "PASS" } else { "FAIL" }, v.detail);
    }
    panic::set_hook(quiet);
    println!("{} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
