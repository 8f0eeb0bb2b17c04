//! Pinned worked examples on the built-in microtubule grammar.
//!
//! Each [`Pin`] compares a computed quantity with a hand-derived expectation.

use std::fmt;

use crate::algebra::{commutator, overlap_classes, ComposeError, OperatorKind, RuleSum, Semantics};
use crate::graph::{LabelledGraph, NodeId};
use crate::io::builtin_mt_grammar;
use crate::rate::RateMonomial;
use crate::rule::{rules_isomorphic, Rule};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pin {
    pub name: String,
    pub expected: i64,
    pub actual: i64,
    pub note: Option<String>,
}

impl Pin {
    pub fn pass(&self) -> bool {
        self.expected == self.actual
    }
}

impl fmt::Display for Pin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.pass() { "ok" } else { "FAIL" };
        write!(f, "{status:<4} {:<40} expected {:>3}  got {:>3}", self.name, self.expected, self.actual)?;
        if let Some(n) = &self.note {
            write!(f, "  ({n})")?;
        }
        Ok(())
    }
}

fn mt(name: &str) -> Rule {
    builtin_mt_grammar().rule(name).cloned().unwrap_or_else(|| panic!("built-in rule {name}"))
}

fn rule(lhs: (&[(NodeId, &str)], &[(NodeId, NodeId)]), rhs: (&[(NodeId, &str)], &[(NodeId, NodeId)]), rate: &[&str]) -> Rule {
    let side = |(nodes, edges): (&[(NodeId, &str)], &[(NodeId, NodeId)])| {
        LabelledGraph::build(nodes.iter().copied(), edges.iter().copied()).expect("well-formed pattern")
    };
    Rule::new("", side(lhs), side(rhs), RateMonomial::of(rate)).expect("well-formed pattern")
}

/// `[retract, grow]` should be the single relabel shift.
pub fn retract_grow_shift() -> Rule {
    rule(
        (&[(0, "retract_end"), (1, "grow_end")], &[(0, 1)]),
        (&[(1, "retract_end"), (2, "grow_end")], &[(1, 2)]),
        &["rho_grow", "rho_retract"],
    )
}

/// Sever just below a tip that has grown: the `+1` term of `[sever, grow]`.
pub fn sever_grow_plus() -> Rule {
    rule(
        (&[(1, "internal"), (2, "internal"), (3, "grow_end")], &[(1, 2), (2, 3)]),
        (
            &[(1, "internal"), (2, "grow_end"), (3, "internal"), (4, "retract_end"), (5, "grow_end")],
            &[(1, 2), (4, 3), (3, 5)],
        ),
        &["rho_grow", "rho_sever"],
    )
}

/// Growth from the fresh tip left by a sever: the `-1` term of `[sever, grow]`.
pub fn sever_grow_minus() -> Rule {
    rule(
        (&[(1, "internal"), (2, "internal"), (3, "internal")], &[(1, 2), (2, 3)]),
        (
            &[(1, "internal"), (2, "internal"), (3, "internal"), (4, "retract_end"), (5, "grow_end")],
            &[(1, 2), (2, 5), (4, 3)],
        ),
        &["rho_grow", "rho_sever"],
    )
}

fn weight_of(sum: &RuleSum, target: &Rule) -> i64 {
    sum.terms()
        .iter()
        .filter(|t| rules_isomorphic(&t.rule, target) && t.rate.symbols() == target.rate().symbols())
        .map(|t| t.weight)
        .sum()
}

fn overlaps(second: &str, first: &str) -> i64 {
    overlap_classes(&mt(first), &mt(second)).len() as i64
}

fn pin(name: &str, expected: i64, actual: i64) -> Pin {
    Pin { name: name.to_string(), expected, actual, note: None }
}

/// All pins, in a fixed order. Overlap counts include the empty overlap
/// exactly once unless the name says "non-empty".
pub fn mt_pins() -> Result<Vec<Pin>, ComposeError> {
    let mode = Semantics::KeepHanging;
    let mut pins = vec![
        pin("overlaps retract.grow", 2, overlaps("retract", "grow")),
        pin("overlaps grow.grow", 1, overlaps("grow", "grow")),
        pin("overlaps bundle.grow", 7, overlaps("bundle", "grow")),
        pin("overlaps sever.grow", 4, overlaps("sever", "grow")),
        pin("overlaps grow.sever", 2, overlaps("grow", "sever")),
        pin("non-empty overlaps sever.bundle", 33, overlaps("sever", "bundle") - 1),
    ];
    pins.push(Pin {
        name: "non-empty overlaps bundle.sever".into(),
        expected: 25,
        actual: overlaps("bundle", "sever") - 1,
        note: Some("differs from an alternative hand count of 24".into()),
    });

    let rg = commutator(&mt("retract"), &mt("grow"), mode, OperatorKind::Hat)?;
    pins.push(pin("[retract,grow] term count", 1, rg.len() as i64));
    pins.push(pin("[retract,grow] relabel-shift weight", 1, weight_of(&rg, &retract_grow_shift())));

    let sg = commutator(&mt("sever"), &mt("grow"), mode, OperatorKind::Hat)?;
    pins.push(pin("[sever,grow] sever-after-growth weight", 1, weight_of(&sg, &sever_grow_plus())));
    pins.push(pin("[sever,grow] growth-after-sever weight", -1, weight_of(&sg, &sever_grow_minus())));
    Ok(pins)
}
