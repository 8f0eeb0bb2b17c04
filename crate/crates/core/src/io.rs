//! Grammar, rule-sum and reaction documents.
//!
//! Grammars (`.ggml.json`) and reactions (`.rxn.json`) are JSON. Emission
//! sorts object keys and uses a fixed layout so output is byte-stable.

use std::cell::RefCell;
use std::collections::{BTreeSet, HashSet};
use std::fmt::{self, Write as _};

use num_rational::Rational64;
use serde::de::{self, DeserializeSeed, Deserializer, IgnoredAny, MapAccess, SeqAccess, Visitor};
use serde::Deserialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::algebra::{RuleSum, RuleTerm};
use crate::graph::{Label, LabelledGraph, NodeId};
use crate::rate::RateMonomial;
use crate::reaction::{Reaction, ReactionSum};
use crate::rule::{validate_rule, NodeSpec, Rule, RuleSpec, SideSpec};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    Syntax,
    UnknownLabel(String),
    DuplicateNode(NodeId),
    UndeclaredNode { src: NodeId, dst: NodeId },
    DuplicateRule(String),
    UndeclaredRate(String),
    Invalid,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}, column {column}: {message}")]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl ParseError {
    fn from_json(e: serde_json::Error, kind: Option<ParseErrorKind>) -> Self {
        let message = e.to_string();
        let message = match message.rfind(" at line ") {
            Some(i) => message[..i].to_string(),
            None => message,
        };
        ParseError { kind: kind.unwrap_or(ParseErrorKind::Syntax), line: e.line(), column: e.column(), message }
    }

    fn invalid(message: impl Into<String>) -> Self {
        ParseError { kind: ParseErrorKind::Invalid, line: 0, column: 0, message: message.into() }
    }
}

/// A named set of rules over a declared label alphabet and rate symbols.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GrammarDocument {
    pub labels: Vec<Label>,
    pub rate_symbols: Vec<String>,
    pub rules: Vec<Rule>,
}

impl GrammarDocument {
    pub fn rule(&self, name: &str) -> Option<&Rule> {
        self.rules.iter().find(|r| r.name() == name)
    }
}

/// Shared state of the validating deserializer: what is declared, and the
/// kind of the first semantic error raised.
struct Ctx {
    labels: Option<HashSet<String>>,
    symbols: HashSet<String>,
    failure: RefCell<Option<ParseErrorKind>>,
}

impl Ctx {
    fn fail<E: de::Error>(&self, kind: ParseErrorKind, msg: String) -> E {
        self.failure.borrow_mut().get_or_insert(kind);
        E::custom(msg)
    }
}

struct DocSeed<'c>(&'c Ctx);

impl<'de> DeserializeSeed<'de> for DocSeed<'_> {
    type Value = Vec<Rule>;

    fn deserialize<D: Deserializer<'de>>(self, d: D) -> Result<Self::Value, D::Error> {
        d.deserialize_map(self)
    }
}

impl<'de> Visitor<'de> for DocSeed<'_> {
    type Value = Vec<Rule>;

    fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.write_str("a grammar object")
    }

    fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<Self::Value, A::Error> {
        let mut rules = None;
        while let Some(key) = map.next_key::<String>()? {
            match key.as_str() {
                "labels" | "rate_symbols" => {
                    map.next_value::<IgnoredAny>()?;
                }
                "rules" => rules = Some(map.next_value_seed(RulesSeed(self.0))?),
                other => return Err(de::Error::unknown_field(other, &["labels", "rate_symbols", "rules"])),
            }
        }
        rules.ok_or_else(|| de::Error::missing_field("rules"))
    }
}

struct RulesSeed<'c>(&'c Ctx);

impl<'de> DeserializeSeed<'de> for RulesSeed<'_> {
    type Value = Vec<Rule>;

    fn deserialize<D: Deserializer<'de>>(self, d: D) -> Result<Self::Value, D::Error> {
        d.deserialize_seq(self)
    }
}

impl<'de> Visitor<'de> for RulesSeed<'_> {
    type Value = Vec<Rule>;

    fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.write_str("a list of rules")
    }

    fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> Result<Self::Value, A::Error> {
        let mut names = HashSet::new();
        let mut rules = Vec::new();
        while let Some(r) = seq.next_element_seed(RuleSeed(self.0))? {
            if !names.insert(r.name().to_string()) {
                let msg = format!("duplicate rule name `{}`", r.name());
                return Err(self.0.fail(ParseErrorKind::DuplicateRule(r.name().into()), msg));
            }
            rules.push(r);
        }
        Ok(rules)
    }
}

struct RuleSeed<'c>(&'c Ctx);

impl<'de> DeserializeSeed<'de> for RuleSeed<'_> {
    type Value = Rule;

    fn deserialize<D: Deserializer<'de>>(self, d: D) -> Result<Self::Value, D::Error> {
        d.deserialize_map(self)
    }
}

impl<'de> Visitor<'de> for RuleSeed<'_> {
    type Value = Rule;

    fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.write_str("a rule object")
    }

    fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<Rule, A::Error> {
        let mut spec = RuleSpec::default();
        let (mut name, mut lhs, mut rhs) = (None, None, None);
        while let Some(key) = map.next_key::<String>()? {
            match key.as_str() {
                "name" => name = Some(map.next_value::<String>()?),
                "rate" => {
                    let symbols: Vec<String> = map.next_value()?;
                    if let Some(s) = symbols.iter().find(|s| !self.0.symbols.contains(*s)) {
                        let msg = format!("undeclared rate symbol `{s}`");
                        return Err(self.0.fail(ParseErrorKind::UndeclaredRate(s.clone()), msg));
                    }
                    spec.rate = RateMonomial::new(Rational64::from_integer(1), symbols);
                }
                "lhs" => lhs = Some(map.next_value_seed(SideSeed(self.0))?),
                "rhs" => rhs = Some(map.next_value_seed(SideSeed(self.0))?),
                "forbidden" => spec.forbidden = map.next_value()?,
                other => {
                    return Err(de::Error::unknown_field(other, &["name", "rate", "lhs", "rhs", "forbidden"]));
                }
            }
        }
        spec.name = name.ok_or_else(|| de::Error::missing_field("name"))?;
        spec.lhs = lhs.ok_or_else(|| de::Error::missing_field("lhs"))?;
        spec.rhs = rhs.ok_or_else(|| de::Error::missing_field("rhs"))?;
        validate_rule(&spec).map_err(|e| self.0.fail(ParseErrorKind::Invalid, e.to_string()))
    }
}

struct SideSeed<'c>(&'c Ctx);

impl<'de> DeserializeSeed<'de> for SideSeed<'_> {
    type Value = SideSpec;

    fn deserialize<D: Deserializer<'de>>(self, d: D) -> Result<Self::Value, D::Error> {
        d.deserialize_map(self)
    }
}

impl<'de> Visitor<'de> for SideSeed<'_> {
    type Value = SideSpec;

    fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.write_str("a graph object with nodes and edges")
    }

    fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<SideSpec, A::Error> {
        let mut side = SideSpec::default();
        let mut seen_nodes = false;
        while let Some(key) = map.next_key::<String>()? {
            match key.as_str() {
                "nodes" => {
                    side.nodes = map.next_value_seed(NodesSeed(self.0))?;
                    seen_nodes = true;
                }
                "edges" => side.edges = map.next_value()?,
                "phantoms" => side.phantoms = map.next_value()?,
                other => return Err(de::Error::unknown_field(other, &["nodes", "edges", "phantoms"])),
            }
        }
        if !seen_nodes {
            return Err(de::Error::missing_field("nodes"));
        }
        let declared: BTreeSet<NodeId> = side.nodes.iter().map(|n| n.id).chain(side.phantoms.iter().copied()).collect();
        if let Some(&[src, dst]) = side.edges.iter().find(|[s, t]| !declared.contains(s) || !declared.contains(t)) {
            let msg = format!("edge [{src}, {dst}] refers to an undeclared node");
            return Err(self.0.fail(ParseErrorKind::UndeclaredNode { src, dst }, msg));
        }
        Ok(side)
    }
}

struct NodesSeed<'c>(&'c Ctx);

impl<'de> DeserializeSeed<'de> for NodesSeed<'_> {
    type Value = Vec<NodeSpec>;

    fn deserialize<D: Deserializer<'de>>(self, d: D) -> Result<Self::Value, D::Error> {
        d.deserialize_seq(self)
    }
}

impl<'de> Visitor<'de> for NodesSeed<'_> {
    type Value = Vec<NodeSpec>;

    fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.write_str("a list of {id, label} nodes")
    }

    fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> Result<Self::Value, A::Error> {
        let mut out: Vec<NodeSpec> = Vec::new();
        while let Some(n) = seq.next_element::<NodeSpec>()? {
            if let Some(labels) = &self.0.labels {
                if !labels.contains(&n.label) {
                    let msg = format!("unknown label `{}` on node {}", n.label, n.id);
                    return Err(self.0.fail(ParseErrorKind::UnknownLabel(n.label), msg));
                }
            }
            if out.iter().any(|m| m.id == n.id) {
                let msg = format!("node id {} declared twice", n.id);
                return Err(self.0.fail(ParseErrorKind::DuplicateNode(n.id), msg));
            }
            out.push(n);
        }
        Ok(out)
    }
}

#[derive(Deserialize)]
struct Header {
    labels: Vec<String>,
    rate_symbols: Vec<String>,
}

pub fn parse_grammar(text: &str) -> Result<GrammarDocument, ParseError> {
    let value: Value = serde_json::from_str(text).map_err(|e| ParseError::from_json(e, None))?;
    let header: Header = serde_json::from_value(value).map_err(|e| ParseError::invalid(e.to_string()))?;
    let labels = header
        .labels
        .iter()
        .map(|l| Label::new(l))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| ParseError::invalid(e.to_string()))?;
    let ctx = Ctx {
        labels: Some(header.labels.iter().cloned().collect()),
        symbols: header.rate_symbols.iter().cloned().collect(),
        failure: RefCell::new(None),
    };
    let mut de = serde_json::Deserializer::from_str(text);
    let rules = DocSeed(&ctx)
        .deserialize(&mut de)
        .map_err(|e| ParseError::from_json(e, ctx.failure.borrow().clone()))?;
    Ok(GrammarDocument { labels, rate_symbols: header.rate_symbols, rules })
}

fn graph_json(g: &LabelledGraph) -> Value {
    let mut m = serde_json::Map::new();
    m.insert("nodes".into(), g.nodes().iter().map(|(id, l)| json!({"id": id, "label": l.as_str()})).collect());
    m.insert("edges".into(), g.edges().iter().map(|(s, t)| json!([s, t])).collect());
    if !g.phantoms().is_empty() {
        m.insert("phantoms".into(), g.phantoms().iter().map(|p| json!(p)).collect());
    }
    Value::Object(m)
}

fn rule_body_json(r: &Rule) -> serde_json::Map<String, Value> {
    let mut m = serde_json::Map::new();
    m.insert("lhs".into(), graph_json(r.lhs()));
    m.insert("rhs".into(), graph_json(r.rhs()));
    if !r.forbidden().is_empty() {
        m.insert("forbidden".into(), r.forbidden().iter().map(|(s, t)| json!([s, t])).collect());
    }
    m
}

pub fn emit_grammar(doc: &GrammarDocument) -> String {
    let rules: Vec<Value> = doc
        .rules
        .iter()
        .map(|r| {
            let mut m = rule_body_json(r);
            m.insert("name".into(), json!(r.name()));
            m.insert("rate".into(), json!(r.rate().symbols()));
            Value::Object(m)
        })
        .collect();
    let labels: Vec<&str> = doc.labels.iter().map(|l| l.as_str()).collect();
    let v = json!({"labels": labels, "rate_symbols": doc.rate_symbols, "rules": rules});
    let mut out = String::new();
    write_json(&v, 0, &mut out);
    out.push('\n');
    out
}

/// The built-in microtubule grammar: growth, retraction, bundling, severing.
pub fn builtin_mt_grammar() -> GrammarDocument {
    parse_grammar(MT_GRAMMAR).expect("built-in grammar parses")
}

pub const MT_GRAMMAR: &str = include_str!("../data/mt.ggml.json");

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Text,
    Json,
    Dot,
}

pub fn emit_rulesum(sum: &RuleSum, format: Format) -> String {
    match format {
        Format::Text => rulesum_text(sum),
        Format::Json => {
            let mut out = String::new();
            write_json(&rulesum_json(sum), 0, &mut out);
            out.push('\n');
            out
        }
        Format::Dot => rulesum_dot(sum),
    }
}

fn rulesum_text(sum: &RuleSum) -> String {
    if sum.is_empty() {
        return "0\n".into();
    }
    let mut out = String::new();
    for t in sum.terms() {
        writeln!(out, "{} · {} :: {}", t.weight, t.rate, t.rule).unwrap();
    }
    out
}

fn rulesum_json(sum: &RuleSum) -> Value {
    let terms: Vec<Value> = sum
        .terms()
        .iter()
        .map(|t| {
            let mut m = rule_body_json(&t.rule);
            m.insert("weight".into(), json!(t.weight));
            m.insert(
                "rate".into(),
                json!({"coefficient": t.rate.coefficient().to_string(), "symbols": t.rate.symbols()}),
            );
            Value::Object(m)
        })
        .collect();
    json!({ "terms": terms })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TermDoc {
    weight: i64,
    rate: RateDoc,
    lhs: SideSpec,
    rhs: SideSpec,
    #[serde(default)]
    forbidden: Vec<[NodeId; 2]>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RateDoc {
    coefficient: String,
    symbols: Vec<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SumDoc {
    terms: Vec<TermDoc>,
}

/// Reads back the json rendering of a rule sum, term by term as written.
pub fn parse_rulesum_json(text: &str) -> Result<RuleSum, ParseError> {
    let doc: SumDoc = serde_json::from_str(text).map_err(|e| ParseError::from_json(e, None))?;
    let mut terms = Vec::with_capacity(doc.terms.len());
    for (i, t) in doc.terms.into_iter().enumerate() {
        let coefficient: Rational64 = t
            .rate
            .coefficient
            .parse()
            .map_err(|_| ParseError::invalid(format!("term {i}: bad coefficient `{}`", t.rate.coefficient)))?;
        let rate = RateMonomial::new(coefficient, t.rate.symbols);
        let spec = RuleSpec { name: String::new(), lhs: t.lhs, rhs: t.rhs, forbidden: t.forbidden, rate: rate.clone() };
        let rule = validate_rule(&spec).map_err(|e| ParseError::invalid(format!("term {i}: {e}")))?;
        terms.push(RuleTerm { weight: t.weight, rate, rule });
    }
    Ok(RuleSum::from_raw_terms(terms))
}

fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

fn rulesum_dot(sum: &RuleSum) -> String {
    let mut out = String::from("digraph rulesum {\n  compound=true;\n");
    for (k, t) in sum.terms().iter().enumerate() {
        writeln!(out, "  subgraph cluster_t{k} {{").unwrap();
        writeln!(out, "    label=\"{}\";", dot_escape(&format!("{} · {}", t.weight, t.rate))).unwrap();
        for (side, g) in [("lhs", t.rule.lhs()), ("rhs", t.rule.rhs())] {
            writeln!(out, "    subgraph cluster_t{k}_{side} {{").unwrap();
            writeln!(out, "      label=\"{side}\";").unwrap();
            for (id, l) in g.nodes() {
                writeln!(out, "      t{k}_{side}_{id} [label=\"{id}:{}\"];", dot_escape(l.as_str())).unwrap();
            }
            for id in g.phantoms() {
                writeln!(out, "      t{k}_{side}_{id} [label=\"{id}:_\", style=dashed];").unwrap();
            }
            for (s, d) in g.edges() {
                writeln!(out, "      t{k}_{side}_{s} -> t{k}_{side}_{d};").unwrap();
            }
            if side == "lhs" {
                for (s, d) in t.rule.forbidden() {
                    writeln!(out, "      t{k}_{side}_{s} -> t{k}_{side}_{d} [style=dotted, arrowhead=tee];").unwrap();
                }
            }
            out.push_str("    }\n");
        }
        out.push_str("  }\n");
    }
    out.push_str("}\n");
    out
}

/// A reaction set over named species.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReactionDocument {
    pub species: Vec<String>,
    pub reactions: Vec<(String, Reaction)>,
}

impl ReactionDocument {
    pub fn reaction(&self, name: &str) -> Option<&Reaction> {
        self.reactions.iter().find(|(n, _)| n == name).map(|(_, r)| r)
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ReactionDocRaw {
    species: Vec<String>,
    reactions: Vec<ReactionRaw>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ReactionRaw {
    name: String,
    m: Vec<u32>,
    n: Vec<u32>,
    #[serde(default)]
    rate: Vec<String>,
}

/// Position of the first occurrence of `needle`, as 1-based line and column.
fn locate(text: &str, needle: &str) -> (usize, usize) {
    match text.find(needle) {
        Some(i) => {
            let before = &text[..i];
            let line = before.matches('\n').count() + 1;
            let column = before.len() - before.rfind('\n').map_or(0, |p| p + 1) + 1;
            (line, column)
        }
        None => (0, 0),
    }
}

pub fn parse_reactions(text: &str) -> Result<ReactionDocument, ParseError> {
    let raw: ReactionDocRaw = serde_json::from_str(text).map_err(|e| ParseError::from_json(e, None))?;
    let mut names = HashSet::new();
    let mut reactions = Vec::with_capacity(raw.reactions.len());
    for r in raw.reactions {
        let (line, column) = locate(text, &serde_json::to_string(&r.name).unwrap());
        let at = |kind, message: String| ParseError { kind, line, column, message };
        if !names.insert(r.name.clone()) {
            return Err(at(ParseErrorKind::DuplicateRule(r.name.clone()), format!("duplicate reaction name `{}`", r.name)));
        }
        if r.m.len() != raw.species.len() || r.n.len() != raw.species.len() {
            return Err(at(
                ParseErrorKind::Invalid,
                format!("reaction `{}` needs {} entries in m and n", r.name, raw.species.len()),
            ));
        }
        let rate = RateMonomial::new(Rational64::from_integer(1), r.rate);
        let x = Reaction::new(r.m, r.n, rate).map_err(|e| at(ParseErrorKind::Invalid, e.to_string()))?;
        reactions.push((r.name, x));
    }
    Ok(ReactionDocument { species: raw.species, reactions })
}

pub fn emit_reactionsum(sum: &ReactionSum, species: &[String], format: Format) -> String {
    match format {
        Format::Json => {
            let terms: Vec<Value> = sum
                .iter()
                .map(|(m, n, s, c)| json!({"coefficient": c.to_string(), "m": m, "n": n, "rate": s}))
                .collect();
            let mut out = String::new();
            write_json(&json!({"species": species, "terms": terms}), 0, &mut out);
            out.push('\n');
            out
        }
        _ => sum.render(species),
    }
}

fn depth(v: &Value) -> usize {
    match v {
        Value::Array(a) => 1 + a.iter().map(depth).max().unwrap_or(0),
        Value::Object(m) => 1 + m.values().map(depth).max().unwrap_or(0),
        _ => 0,
    }
}

fn sorted(m: &serde_json::Map<String, Value>) -> Vec<(&String, &Value)> {
    let mut kv: Vec<_> = m.iter().collect();
    kv.sort_by(|a, b| a.0.cmp(b.0));
    kv
}

fn write_compact(v: &Value, out: &mut String) {
    match v {
        Value::Array(a) => {
            out.push('[');
            for (i, x) in a.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_compact(x, out);
            }
            out.push(']');
        }
        Value::Object(m) => {
            out.push('{');
            for (i, (k, x)) in sorted(m).into_iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                out.push_str(&Value::String(k.clone()).to_string());
                out.push_str(": ");
                write_compact(x, out);
            }
            out.push('}');
        }
        scalar => out.push_str(&scalar.to_string()),
    }
}

/// Pretty layout: containers nested at most two deep go on one line when
/// they fit in 100 columns; everything else breaks one entry per line.
fn write_json(v: &Value, indent: usize, out: &mut String) {
    let mut flat = String::new();
    write_compact(v, &mut flat);
    if depth(v) <= 2 && indent + flat.chars().count() <= 100 {
        out.push_str(&flat);
        return;
    }
    let pad = " ".repeat(indent + 2);
    match v {
        Value::Array(a) => {
            out.push_str("[\n");
            for (i, x) in a.iter().enumerate() {
                out.push_str(&pad);
                write_json(x, indent + 2, out);
                out.push_str(if i + 1 < a.len() { ",\n" } else { "\n" });
            }
            out.push_str(&" ".repeat(indent));
            out.push(']');
        }
        Value::Object(m) => {
            out.push_str("{\n");
            let kv = sorted(m);
            let last = kv.len();
            for (i, (k, x)) in kv.into_iter().enumerate() {
                out.push_str(&pad);
                out.push_str(&Value::String(k.clone()).to_string());
                out.push_str(": ");
                write_json(x, indent + 2, out);
                out.push_str(if i + 1 < last { ",\n" } else { "\n" });
            }
            out.push_str(&" ".repeat(indent));
            out.push('}');
        }
        _ => out.push_str(&flat),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_grammar_shape() {
        let g = builtin_mt_grammar();
        assert_eq!(g.rules.len(), 4);
        assert_eq!(g.labels.len(), 4);
        let grow = g.rule("grow").unwrap();
        assert_eq!(grow.lhs().nodes().len(), 1);
        assert_eq!(grow.rhs().edges(), &BTreeSet::from([(1, 2)]));
        let sever = g.rule("sever").unwrap();
        assert_eq!(sever.rhs().edges(), &BTreeSet::from([(1, 2), (4, 3)]));
        assert_eq!(sever.rhs().label(4).unwrap().as_str(), "retract_end");
    }

    #[test]
    fn builtin_grammar_is_emitted_verbatim() {
        assert_eq!(emit_grammar(&builtin_mt_grammar()), MT_GRAMMAR);
    }

    fn grammar_with(rule: &str) -> String {
        format!(
            "{{\n  \"labels\": [\"A\", \"B\"],\n  \"rate_symbols\": [\"k\"],\n  \"rules\": [\n    {rule}\n  ]\n}}\n"
        )
    }

    #[test]
    fn diagnostics_are_distinct_and_located() {
        let undeclared = grammar_with(
            r#"{"name": "r", "rate": ["k"], "lhs": {"nodes": [{"id": 1, "label": "A"}, {"id": 2, "label": "A"}], "edges": [[1, 3]]}, "rhs": {"nodes": [], "edges": []}}"#,
        );
        let e = parse_grammar(&undeclared).unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::UndeclaredNode { src: 1, dst: 3 });
        assert_eq!(e.line, 5);

        let unknown = grammar_with(r#"{"name": "r", "rate": [], "lhs": {"nodes": [{"id": 1, "label": "Z"}], "edges": []}, "rhs": {"nodes": [], "edges": []}}"#);
        assert_eq!(parse_grammar(&unknown).unwrap_err().kind, ParseErrorKind::UnknownLabel("Z".into()));

        let dup = grammar_with(r#"{"name": "r", "rate": [], "lhs": {"nodes": [{"id": 1, "label": "A"}, {"id": 1, "label": "B"}], "edges": []}, "rhs": {"nodes": [], "edges": []}}"#);
        assert_eq!(parse_grammar(&dup).unwrap_err().kind, ParseErrorKind::DuplicateNode(1));

        let rate = grammar_with(r#"{"name": "r", "rate": ["q"], "lhs": {"nodes": [], "edges": []}, "rhs": {"nodes": [], "edges": []}}"#);
        assert_eq!(parse_grammar(&rate).unwrap_err().kind, ParseErrorKind::UndeclaredRate("q".into()));

        let one = r#"{"name": "r", "rate": [], "lhs": {"nodes": [], "edges": []}, "rhs": {"nodes": [], "edges": []}}"#;
        let twice = grammar_with(&format!("{one},\n    {one}"));
        assert_eq!(parse_grammar(&twice).unwrap_err().kind, ParseErrorKind::DuplicateRule("r".into()));

        let e = parse_grammar("{\"labels\": [").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::Syntax);
        assert_eq!(e.line, 1);
    }

    #[test]
    fn empty_sum_emits_zero() {
        assert_eq!(emit_rulesum(&RuleSum::zero(), Format::Text), "0\n");
    }

    #[test]
    fn reaction_document() {
        let text = r#"{"species": ["A"], "reactions": [{"name": "dup", "m": [1], "n": [2], "rate": ["k"]}]}"#;
        let d = parse_reactions(text).unwrap();
        assert_eq!(d.reaction("dup").unwrap().n(), &[2]);
        let bad = r#"{"species": ["A"], "reactions": [{"name": "x", "m": [1, 0], "n": [2]}]}"#;
        assert_eq!(parse_reactions(bad).unwrap_err().kind, ParseErrorKind::Invalid);
    }
}
