//! Mass-action reaction operators `k Π_i â_i^{n_i} a_i^{m_i}` and their
//! normal-ordered products, plus a truncated number-basis matrix oracle.

use std::collections::BTreeMap;
use std::fmt;

use num_rational::Rational64;
use num_traits::Zero;
use thiserror::Error;

use crate::algebra::{product_hat, Semantics};
use crate::rate::RateMonomial;
use crate::rule::Rule;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReactionError {
    #[error("reactions have {0} and {1} species")]
    SpeciesMismatch(usize, usize),
    #[error("input vector has {m} entries but output vector has {n}")]
    ArityMismatch { m: usize, n: usize },
    #[error("coefficient {num} is not divisible by {den}")]
    Indivisible { num: i64, den: i64 },
    #[error("rule `{0}` is not edge-free with disjoint sides")]
    NotEdgeFree(String),
    #[error("truncation {nmax} is below the degree {degree} of the operator")]
    TruncationTooSmall { nmax: u32, degree: u32 },
    #[error(transparent)]
    Compose(#[from] crate::algebra::ComposeError),
}

/// `m → n` with rate `k`: consumes `m_i` and produces `n_i` copies of species `i`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Reaction {
    m: Vec<u32>,
    n: Vec<u32>,
    rate: RateMonomial,
}

impl Reaction {
    pub fn new(m: Vec<u32>, n: Vec<u32>, rate: RateMonomial) -> Result<Self, ReactionError> {
        if m.len() != n.len() {
            return Err(ReactionError::ArityMismatch { m: m.len(), n: n.len() });
        }
        Ok(Reaction { m, n, rate })
    }

    pub fn m(&self) -> &[u32] {
        &self.m
    }

    pub fn n(&self) -> &[u32] {
        &self.n
    }

    pub fn rate(&self) -> &RateMonomial {
        &self.rate
    }

    pub fn species(&self) -> usize {
        self.m.len()
    }
}

fn fmt_side(f: &mut fmt::Formatter<'_>, v: &[u32], names: Option<&[String]>) -> fmt::Result {
    let parts: Vec<String> = v
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(i, &c)| {
            let name = names.and_then(|n| n.get(i).cloned()).unwrap_or_else(|| species_name(i));
            if c == 1 {
                name
            } else {
                format!("{c}{name}")
            }
        })
        .collect();
    if parts.is_empty() {
        f.write_str("∅")
    } else {
        f.write_str(&parts.join("+"))
    }
}

fn species_name(i: usize) -> String {
    if i < 26 {
        ((b'A' + i as u8) as char).to_string()
    } else {
        format!("S{i}")
    }
}

impl fmt::Display for Reaction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_side(f, &self.m, None)?;
        f.write_str("→")?;
        fmt_side(f, &self.n, None)
    }
}

type ReactionKey = (Vec<u32>, Vec<u32>, Vec<String>);

/// Collected combination of reactions keyed by `(m, n, rate symbols)`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ReactionSum {
    terms: BTreeMap<ReactionKey, Rational64>,
}

impl ReactionSum {
    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn add(&mut self, m: Vec<u32>, n: Vec<u32>, rate: &RateMonomial, k: Rational64) {
        let key = (m, n, rate.symbols().to_vec());
        let e = self.terms.entry(key.clone()).or_insert_with(Rational64::zero);
        *e += k * rate.coefficient();
        if e.is_zero() {
            self.terms.remove(&key);
        }
    }

    /// `(m, n, symbols, coefficient)` in canonical order.
    pub fn iter(&self) -> impl Iterator<Item = (&[u32], &[u32], &[String], Rational64)> {
        self.terms.iter().map(|((m, n, s), c)| (m.as_slice(), n.as_slice(), s.as_slice(), *c))
    }

    pub fn coefficient(&self, m: &[u32], n: &[u32]) -> Rational64 {
        self.terms
            .iter()
            .filter(|((tm, tn, _), _)| tm == m && tn == n)
            .map(|(_, c)| *c)
            .sum()
    }

    pub fn minus(&self, other: &ReactionSum) -> ReactionSum {
        let mut out = self.clone();
        for ((m, n, s), c) in &other.terms {
            out.add(m.clone(), n.clone(), &RateMonomial::new(Rational64::from_integer(1), s.iter().cloned()), -*c);
        }
        out
    }

    pub fn render(&self, species: &[String]) -> String {
        struct Term<'a>(&'a [u32], &'a [u32], &'a [String]);
        impl fmt::Display for Term<'_> {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                fmt_side(f, self.0, Some(self.2))?;
                f.write_str(" -> ")?;
                fmt_side(f, self.1, Some(self.2))
            }
        }
        if self.terms.is_empty() {
            return "0\n".into();
        }
        let mut out = String::new();
        for ((m, n, s), c) in &self.terms {
            let rate = RateMonomial::new(Rational64::from_integer(1), s.iter().cloned());
            out.push_str(&format!("{c} · {rate} :: {}\n", Term(m, n, species)));
        }
        out
    }
}

/// `(n)_l = n (n−1) … (n−l+1)`, zero when `l > n`.
pub fn falling(n: u32, l: u32) -> i64 {
    if l > n {
        return 0;
    }
    (0..l).map(|j| (n - j) as i64).product()
}

fn factorial(l: u32) -> i64 {
    (1..=l as i64).product()
}

fn exact_div(num: i64, den: i64) -> Result<i64, ReactionError> {
    if num % den != 0 {
        return Err(ReactionError::Indivisible { num, den });
    }
    Ok(num / den)
}

fn same_species(r2: &Reaction, r1: &Reaction) -> Result<usize, ReactionError> {
    if r2.species() != r1.species() {
        return Err(ReactionError::SpeciesMismatch(r2.species(), r1.species()));
    }
    Ok(r1.species())
}

/// Every vector `l` with `0 ≤ l_i ≤ bound_i`, in lexicographic order.
fn profiles(bound: &[u32]) -> Vec<Vec<u32>> {
    let mut out = vec![Vec::new()];
    for &b in bound {
        out = out
            .into_iter()
            .flat_map(|p: Vec<u32>| {
                (0..=b).map(move |x| {
                    let mut q = p.clone();
                    q.push(x);
                    q
                })
            })
            .collect();
    }
    out
}

/// `Π_i (a_i)_{l_i} (b_i)_{l_i} / l_i!`
fn pairing_count(a: &[u32], b: &[u32], l: &[u32]) -> Result<i64, ReactionError> {
    let mut total = 1;
    for i in 0..l.len() {
        total *= exact_div(falling(a[i], l[i]) * falling(b[i], l[i]), factorial(l[i]))?;
    }
    Ok(total)
}

fn shifted(a: &[u32], b: &[u32], l: &[u32]) -> Vec<u32> {
    (0..l.len()).map(|i| a[i] + b[i] - l[i]).collect()
}

/// Normal-ordered `W2 W1` (`r1` acts first).
pub fn reaction_product(r2: &Reaction, r1: &Reaction) -> Result<ReactionSum, ReactionError> {
    let s = same_species(r2, r1)?;
    let bound: Vec<u32> = (0..s).map(|i| r2.m[i].min(r1.n[i])).collect();
    let rate = &r2.rate * &r1.rate;
    let mut out = ReactionSum::default();
    for l in profiles(&bound) {
        let c = pairing_count(&r2.m, &r1.n, &l)?;
        out.add(shifted(&r1.m, &r2.m, &l), shifted(&r1.n, &r2.n, &l), &rate, Rational64::from_integer(c));
    }
    Ok(out)
}

/// `[W2, W1]` from the difference of pairing counts over nonzero `l`.
pub fn reaction_commutator(r2: &Reaction, r1: &Reaction) -> Result<ReactionSum, ReactionError> {
    let s = same_species(r2, r1)?;
    let bound: Vec<u32> = (0..s).map(|i| r2.m[i].min(r1.n[i]).max(r1.m[i].min(r2.n[i]))).collect();
    let rate = &r2.rate * &r1.rate;
    let mut out = ReactionSum::default();
    for l in profiles(&bound) {
        if l.iter().all(|&x| x == 0) {
            continue;
        }
        let c = pairing_count(&r2.m, &r1.n, &l)? - pairing_count(&r1.m, &r2.n, &l)?;
        if c == 0 {
            continue;
        }
        out.add(shifted(&r1.m, &r2.m, &l), shifted(&r1.n, &r2.n, &l), &rate, Rational64::from_integer(c));
    }
    Ok(out)
}

/// Sparse matrix over the number basis `0..=nmax_i` per species.
/// Rate symbols are treated as formal unit factors; coefficients are kept.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FockMatrix {
    nmax: Vec<u32>,
    /// `cols[j]` maps row index to entry.
    cols: Vec<BTreeMap<usize, Rational64>>,
}

impl FockMatrix {
    fn zero(nmax: &[u32]) -> Self {
        let dim = nmax.iter().map(|&x| x as usize + 1).product();
        FockMatrix { nmax: nmax.to_vec(), cols: vec![BTreeMap::new(); dim] }
    }

    pub fn dim(&self) -> usize {
        self.cols.len()
    }

    pub fn nmax(&self) -> &[u32] {
        &self.nmax
    }

    pub fn index(&self, state: &[u32]) -> usize {
        state
            .iter()
            .zip(&self.nmax)
            .fold(0, |acc, (&k, &n)| acc * (n as usize + 1) + k as usize)
    }

    pub fn state(&self, mut idx: usize) -> Vec<u32> {
        let mut out = vec![0; self.nmax.len()];
        for i in (0..self.nmax.len()).rev() {
            let base = self.nmax[i] as usize + 1;
            out[i] = (idx % base) as u32;
            idx /= base;
        }
        out
    }

    pub fn get(&self, row: usize, col: usize) -> Rational64 {
        self.cols[col].get(&row).copied().unwrap_or_else(Rational64::zero)
    }

    pub fn column(&self, col: usize) -> &BTreeMap<usize, Rational64> {
        &self.cols[col]
    }

    fn add_to(&mut self, row: usize, col: usize, v: Rational64) {
        if v.is_zero() {
            return;
        }
        let e = self.cols[col].entry(row).or_insert_with(Rational64::zero);
        *e += v;
        if e.is_zero() {
            self.cols[col].remove(&row);
        }
    }

    /// `self · rhs`
    pub fn mul(&self, rhs: &FockMatrix) -> FockMatrix {
        let mut out = FockMatrix::zero(&self.nmax);
        for (j, col) in rhs.cols.iter().enumerate() {
            for (&k, &b) in col {
                for (&i, &a) in &self.cols[k] {
                    out.add_to(i, j, a * b);
                }
            }
        }
        out
    }

    pub fn minus(&self, rhs: &FockMatrix) -> FockMatrix {
        let mut out = self.clone();
        for (j, col) in rhs.cols.iter().enumerate() {
            for (&i, &v) in col {
                out.add_to(i, j, -v);
            }
        }
        out
    }

    fn add_reaction(&mut self, m: &[u32], n: &[u32], k: Rational64) {
        for j in 0..self.dim() {
            let from = self.state(j);
            let mut to = Vec::with_capacity(from.len());
            let mut amp = k;
            for i in 0..from.len() {
                let f = falling(from[i], m[i]);
                let after = from[i] + n[i] - m[i].min(from[i]);
                if f == 0 || after > self.nmax[i] {
                    amp = Rational64::zero();
                    break;
                }
                amp *= Rational64::from_integer(f);
                to.push(after);
            }
            if !amp.is_zero() {
                let row = self.index(&to);
                self.add_to(row, j, amp);
            }
        }
    }
}

pub fn fock_matrix(r: &Reaction, nmax: &[u32]) -> Result<FockMatrix, ReactionError> {
    check_truncation(r.m.iter().chain(&r.n).copied(), nmax)?;
    let mut out = FockMatrix::zero(nmax);
    out.add_reaction(&r.m, &r.n, r.rate.coefficient());
    Ok(out)
}

pub fn fock_matrix_of_sum(sum: &ReactionSum, nmax: &[u32]) -> Result<FockMatrix, ReactionError> {
    let mut out = FockMatrix::zero(nmax);
    for (m, n, _, c) in sum.iter() {
        check_truncation(m.iter().chain(n).copied(), nmax)?;
        out.add_reaction(m, n, c);
    }
    Ok(out)
}

fn check_truncation(degrees: impl Iterator<Item = u32>, nmax: &[u32]) -> Result<(), ReactionError> {
    let degree = degrees.max().unwrap_or(0);
    match nmax.iter().min() {
        Some(&lo) if lo < degree => Err(ReactionError::TruncationTooSmall { nmax: lo, degree }),
        _ => Ok(()),
    }
}

/// Columns `k` with `k_i + n1_i + n2_i ≤ nmax_i`, where truncation cannot
/// interfere with either ordering of the product.
pub fn headroom_columns(matrix: &FockMatrix, r2: &Reaction, r1: &Reaction) -> Vec<usize> {
    (0..matrix.dim())
        .filter(|&j| {
            let k = matrix.state(j);
            (0..k.len()).all(|i| k[i] + r1.n[i] + r2.n[i] <= matrix.nmax[i])
        })
        .collect()
}

fn columns_agree(a: &FockMatrix, b: &FockMatrix, cols: &[usize]) -> bool {
    cols.iter().all(|&j| a.cols[j] == b.cols[j])
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairCheck {
    pub product_ok: bool,
    pub commutator_ok: bool,
    /// Commutator formula agrees with the difference of the two product formulas.
    pub formulas_consistent: bool,
    pub columns_checked: usize,
}

impl PairCheck {
    pub fn pass(&self) -> bool {
        self.product_ok && self.commutator_ok && self.formulas_consistent
    }
}

/// Compares both formulas against truncated matrices built independently.
pub fn verify_pair_with(r2: &Reaction, r1: &Reaction, m2: &FockMatrix, m1: &FockMatrix) -> Result<PairCheck, ReactionError> {
    let nmax = m1.nmax.clone();
    let p21 = reaction_product(r2, r1)?;
    let p12 = reaction_product(r1, r2)?;
    let comm = reaction_commutator(r2, r1)?;
    let direct21 = m2.mul(m1);
    let direct12 = m1.mul(m2);
    let cols = headroom_columns(m1, r2, r1);
    let product_ok = columns_agree(&fock_matrix_of_sum(&p21, &nmax)?, &direct21, &cols);
    let commutator_ok = columns_agree(&fock_matrix_of_sum(&comm, &nmax)?, &direct21.minus(&direct12), &cols);
    Ok(PairCheck { product_ok, commutator_ok, formulas_consistent: comm == p21.minus(&p12), columns_checked: cols.len() })
}

pub fn verify_pair(r2: &Reaction, r1: &Reaction, nmax: &[u32]) -> Result<PairCheck, ReactionError> {
    verify_pair_with(r2, r1, &fock_matrix(r2, nmax)?, &fock_matrix(r1, nmax)?)
}

/// Every rate-free reaction over `species` species with entries `≤ max_degree`.
pub fn all_reactions(species: usize, max_degree: u32) -> Vec<Reaction> {
    let vecs = profiles(&vec![max_degree; species]);
    let mut out = Vec::with_capacity(vecs.len() * vecs.len());
    for m in &vecs {
        for n in &vecs {
            out.push(Reaction { m: m.clone(), n: n.clone(), rate: RateMonomial::one() });
        }
    }
    out
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SweepReport {
    pub pairs: usize,
    pub failures: Vec<(Reaction, Reaction, PairCheck)>,
}

/// All ordered pairs of reactions with entries `≤ max_degree` over 1 and 2
/// species, checked at truncation `nmax`.
pub fn sweep(max_degree: u32, max_species: usize, nmax: u32) -> Result<SweepReport, ReactionError> {
    let mut report = SweepReport::default();
    for s in 1..=max_species {
        let rs = all_reactions(s, max_degree);
        let bound = vec![nmax; s];
        let mats: Vec<FockMatrix> = rs.iter().map(|r| fock_matrix(r, &bound)).collect::<Result<_, _>>()?;
        for (i2, r2) in rs.iter().enumerate() {
            for (i1, r1) in rs.iter().enumerate() {
                let c = verify_pair_with(r2, r1, &mats[i2], &mats[i1])?;
                report.pairs += 1;
                if !c.pass() {
                    report.failures.push((r2.clone(), r1.clone(), c));
                }
            }
        }
    }
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CrosscheckReport {
    pub pass: bool,
    pub species: Vec<String>,
    /// `(m, n) → weight` from the graph-rule product.
    pub graph: BTreeMap<(Vec<u32>, Vec<u32>), Rational64>,
    /// `(m, n) → coefficient` from the reaction formula.
    pub reaction: BTreeMap<(Vec<u32>, Vec<u32>), Rational64>,
}

fn counts(g: &crate::graph::LabelledGraph, species: &[String]) -> Vec<u32> {
    species
        .iter()
        .map(|s| g.nodes().values().filter(|l| l.as_str() == s).count() as u32)
        .collect()
}

fn edge_free_disjoint(r: &Rule) -> bool {
    !r.has_edges() && r.conserved().is_empty() && r.rhs().phantoms().is_empty() && r.forbidden().is_empty()
}

pub fn rule_to_reaction(r: &Rule, species: &[String]) -> Result<Reaction, ReactionError> {
    if !edge_free_disjoint(r) {
        return Err(ReactionError::NotEdgeFree(r.name().into()));
    }
    Reaction::new(counts(r.lhs(), species), counts(r.rhs(), species), r.rate().clone())
}

/// Compares the graph-rule product of two edge-free rules with disjoint sides
/// against the reaction formula, species being labels.
pub fn edge_free_crosscheck(r1: &Rule, r2: &Rule) -> Result<CrosscheckReport, ReactionError> {
    let mut species: Vec<String> = [r1, r2]
        .iter()
        .flat_map(|r| r.lhs().nodes().values().chain(r.rhs().nodes().values()))
        .map(|l| l.as_str().to_string())
        .collect();
    species.sort();
    species.dedup();
    let x1 = rule_to_reaction(r1, &species)?;
    let x2 = rule_to_reaction(r2, &species)?;

    let mut graph = BTreeMap::new();
    for t in product_hat(r2, r1, Semantics::KeepHanging)?.terms() {
        if !edge_free_disjoint(&t.rule) {
            return Err(ReactionError::NotEdgeFree(t.rule.to_string()));
        }
        let key = (counts(t.rule.lhs(), &species), counts(t.rule.rhs(), &species));
        *graph.entry(key).or_insert_with(Rational64::zero) += t.scalar();
    }
    let reaction: BTreeMap<_, _> = reaction_product(&x2, &x1)?
        .iter()
        .map(|(m, n, _, c)| ((m.to_vec(), n.to_vec()), c))
        .collect();
    Ok(CrosscheckReport { pass: graph == reaction, species, graph, reaction })
}
