//! Mod-p Steenrod operations: monomials, admissible normal form, text syntax.

pub mod adem;
pub mod oracle;

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fp::PrimeField;
pub use adem::{admissible_sequences, sequence_excess, sequence_is_admissible, Word, BETA};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OpSymbol {
    Sq(u32),
    P(u32),
    /// d_m, the m-th Bockstein.
    Bockstein(u32),
    /// Reduction of an integral class mod p.
    Reduction(u32),
}

impl OpSymbol {
    pub fn degree(self, f: PrimeField) -> u32 {
        match self {
            OpSymbol::Sq(i) => i,
            OpSymbol::P(s) => 2 * s * (f.p() - 1),
            OpSymbol::Bockstein(_) => 1,
            OpSymbol::Reduction(_) => 0,
        }
    }
}

/// Rightmost source tag of a monomial.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Tail {
    None,
    /// rho_p applied to an integral class.
    Reduction,
    /// d_m with m >= 2, applied to a Z/p^m class.
    Bockstein(u32),
}

impl Tail {
    /// The primary Bockstein vanishes directly to the left of these tags.
    pub fn kills_beta(self) -> bool {
        !matches!(self, Tail::None)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Monomial {
    prime: PrimeField,
    word: Word,
    tail: Tail,
}

impl Monomial {
    pub fn identity(prime: PrimeField) -> Self {
        Monomial { prime, word: Vec::new(), tail: Tail::None }
    }

    pub fn from_word(prime: PrimeField, word: Word, tail: Tail) -> Result<Self> {
        if prime.is_two() && word.iter().any(|&i| i == 0) {
            return Err(Error::IllFormed("Sq0 in a word".into()));
        }
        if let Tail::Bockstein(m) = tail {
            if m < 2 {
                return Err(Error::IllFormed("d_1 is not a tail".into()));
            }
        }
        Ok(Monomial { prime, word, tail })
    }

    pub fn from_symbols(prime: PrimeField, symbols: &[OpSymbol]) -> Result<Self> {
        let mut word = Vec::new();
        let mut tail = Tail::None;
        let n = symbols.len();
        for (k, s) in symbols.iter().enumerate() {
            let last = k + 1 == n;
            match *s {
                OpSymbol::Sq(i) => {
                    if !prime.is_two() {
                        return Err(Error::MixedPrimes(2, prime.p()));
                    }
                    if i > 0 {
                        word.push(i);
                    }
                }
                OpSymbol::P(s) => {
                    if prime.is_two() {
                        return Err(Error::IllFormed("P at p = 2".into()));
                    }
                    if s > 0 {
                        word.push(s);
                    }
                }
                OpSymbol::Bockstein(1) => word.push(if prime.is_two() { 1 } else { BETA }),
                OpSymbol::Bockstein(m) => {
                    if !last || m == 0 {
                        return Err(Error::IllFormed(format!("b{m} must be the rightmost symbol")));
                    }
                    tail = Tail::Bockstein(m);
                }
                OpSymbol::Reduction(n) => {
                    if n != prime.p() {
                        return Err(Error::MixedPrimes(n, prime.p()));
                    }
                    if !last {
                        return Err(Error::IllFormed("reduction must be the rightmost symbol".into()));
                    }
                    tail = Tail::Reduction;
                }
            }
        }
        Ok(Monomial { prime, word, tail })
    }

    pub fn prime(&self) -> PrimeField {
        self.prime
    }

    pub fn word(&self) -> &[u32] {
        &self.word
    }

    pub fn tail(&self) -> Tail {
        self.tail
    }

    pub fn symbols(&self) -> Vec<OpSymbol> {
        let mut out: Vec<OpSymbol> = self
            .word
            .iter()
            .map(|&t| {
                if self.prime.is_two() {
                    OpSymbol::Sq(t)
                } else if t == BETA {
                    OpSymbol::Bockstein(1)
                } else {
                    OpSymbol::P(t)
                }
            })
            .collect();
        match self.tail {
            Tail::None => {}
            Tail::Reduction => out.push(OpSymbol::Reduction(self.prime.p())),
            Tail::Bockstein(m) => out.push(OpSymbol::Bockstein(m)),
        }
        out
    }

    pub fn degree(&self) -> u32 {
        adem::word_degree(self.prime, &self.word) + u32::from(matches!(self.tail, Tail::Bockstein(_)))
    }

    /// Degree-indexed sequence; a d_m tail contributes a final entry 1.
    pub fn sequence(&self) -> Vec<u32> {
        let mut s = adem::word_to_sequence(self.prime, &self.word);
        if matches!(self.tail, Tail::Bockstein(_)) {
            s.push(1);
        }
        s
    }

    pub fn is_admissible(&self) -> bool {
        sequence_is_admissible(self.prime, &self.sequence())
    }

    pub fn excess(&self) -> i64 {
        sequence_excess(self.prime, &self.sequence())
    }

    pub fn is_identity(&self) -> bool {
        self.word.is_empty() && self.tail == Tail::None
    }

    fn sort_key(&self) -> (bool, Vec<u32>, Tail) {
        (matches!(self.tail, Tail::Bockstein(_)), self.sequence(), self.tail)
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.prime.cmp(&other.prime).then_with(|| self.sort_key().cmp(&other.sort_key()))
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_identity() {
            return write!(f, "1");
        }
        let parts: Vec<String> = self.symbols().iter().map(|s| symbol_text(*s, self.prime)).collect();
        write!(f, "{}", parts.join(" "))
    }
}

pub fn symbol_text(s: OpSymbol, prime: PrimeField) -> String {
    match s {
        OpSymbol::Sq(i) => format!("Sq{i}"),
        OpSymbol::P(s) => format!("P{s}"),
        OpSymbol::Bockstein(1) if prime.is_two() => "Sq1".to_string(),
        OpSymbol::Bockstein(m) => format!("b{m}"),
        OpSymbol::Reduction(n) => format!("r{n}"),
    }
}

/// Homogeneous F_p-combination of admissible monomials.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SteenrodElement {
    prime: PrimeField,
    terms: BTreeMap<Monomial, u32>,
}

impl SteenrodElement {
    pub fn zero(prime: PrimeField) -> Self {
        SteenrodElement { prime, terms: BTreeMap::new() }
    }

    pub fn one(prime: PrimeField) -> Self {
        SteenrodElement::from_monomial(Monomial::identity(prime))
    }

    /// Normal form of an arbitrary composite.
    pub fn from_monomial(m: Monomial) -> Self {
        adem_normalize(&m)
    }

    pub fn prime(&self) -> PrimeField {
        self.prime
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, u32)> {
        self.terms.iter().map(|(m, c)| (m, *c))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// None for the zero element.
    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().next().map(Monomial::degree)
    }

    pub fn add(&self, other: &SteenrodElement) -> Result<SteenrodElement> {
        if self.prime != other.prime {
            return Err(Error::MixedPrimes(self.prime.p(), other.prime.p()));
        }
        if let (Some(a), Some(b)) = (self.degree(), other.degree()) {
            if a != b {
                return Err(Error::DegreeMismatch { expected: a as i64, found: b as i64 });
            }
        }
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), *c);
        }
        Ok(out)
    }

    pub fn scale(&self, c: u32) -> SteenrodElement {
        let mut out = SteenrodElement::zero(self.prime);
        for (m, k) in &self.terms {
            out.add_term(m.clone(), self.prime.mul(*k, c));
        }
        out
    }

    fn add_term(&mut self, m: Monomial, c: u32) {
        let f = self.prime;
        let c = c % f.p();
        if c == 0 {
            return;
        }
        let e = self.terms.entry(m).or_insert(0);
        *e = f.add(*e, c);
        if *e == 0 {
            let key = self.terms.iter().find(|(_, v)| **v == 0).map(|(k, _)| k.clone());
            if let Some(k) = key {
                self.terms.remove(&k);
            }
        }
    }

    /// Composite a∘b, normalized.
    pub fn multiply(&self, other: &SteenrodElement) -> Result<SteenrodElement> {
        multiply(self, other)
    }

    pub fn parse(text: &str, prime: Option<PrimeField>) -> Result<SteenrodElement> {
        parse_element(text, prime)
    }
}

impl fmt::Display for SteenrodElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(m, c)| if *c == 1 { m.to_string() } else { format!("{c} {m}") })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

/// Admissible normal form of a composite. Terms ending in a Bockstein directly left of a
/// source tag are dropped.
pub fn adem_normalize(m: &Monomial) -> SteenrodElement {
    let f = m.prime;
    let mut out = SteenrodElement::zero(f);
    for (w, c) in adem::normalize_word(f, &m.word).iter() {
        let last_is_beta = w.last().is_some_and(|&t| if f.is_two() { t == 1 } else { t == BETA });
        if last_is_beta && m.tail.kills_beta() {
            continue;
        }
        out.add_term(Monomial { prime: f, word: w.clone(), tail: m.tail }, *c);
    }
    out
}

pub fn normalize_element(e: &SteenrodElement) -> SteenrodElement {
    let mut out = SteenrodElement::zero(e.prime);
    for (m, c) in &e.terms {
        for (n, k) in adem_normalize(m).terms {
            out.add_term(n, e.prime.mul(*c, k));
        }
    }
    out
}

pub fn multiply(a: &SteenrodElement, b: &SteenrodElement) -> Result<SteenrodElement> {
    if a.prime != b.prime {
        return Err(Error::MixedPrimes(a.prime.p(), b.prime.p()));
    }
    let f = a.prime;
    let mut out = SteenrodElement::zero(f);
    for (ma, ca) in &a.terms {
        if ma.tail != Tail::None {
            return Err(Error::IllFormed(format!("cannot compose after the source tag in {ma}")));
        }
        for (mb, cb) in &b.terms {
            let mut w = ma.word.clone();
            w.extend_from_slice(&mb.word);
            let comp = Monomial { prime: f, word: w, tail: mb.tail };
            for (n, k) in adem_normalize(&comp).terms {
                out.add_term(n, f.mul(f.mul(*ca, *cb), k));
            }
        }
    }
    Ok(out)
}

/// Admissible monomials of degree d. `max_excess` is a strict upper bound.
pub fn enumerate_admissible(
    prime: PrimeField,
    d: u32,
    max_excess: Option<i64>,
    tail: TailRule,
) -> Vec<Monomial> {
    let mut plain = Vec::new();
    let mut tailed = Vec::new();
    for seq in admissible_sequences(prime, d) {
        if let Some(b) = max_excess {
            if sequence_excess(prime, &seq) >= b {
                continue;
            }
        }
        let ends_in_one = seq.last() == Some(&1);
        let word = |s: &[u32]| adem::sequence_to_word(prime, s).expect("admissible sequences convert");
        match tail {
            TailRule::Any => plain.push(Monomial { prime, word: word(&seq), tail: Tail::None }),
            TailRule::NotOne => {
                if !ends_in_one {
                    plain.push(Monomial { prime, word: word(&seq), tail: Tail::Reduction });
                }
            }
            TailRule::Bockstein(m) if m <= 1 => {
                plain.push(Monomial { prime, word: word(&seq), tail: Tail::None })
            }
            TailRule::Bockstein(m) => {
                if ends_in_one {
                    let head = &seq[..seq.len() - 1];
                    tailed.push(Monomial { prime, word: word(head), tail: Tail::Bockstein(m) });
                } else {
                    plain.push(Monomial { prime, word: word(&seq), tail: Tail::None });
                }
            }
        }
    }
    plain.extend(tailed);
    plain
}

/// Constraint on the last entry of a sequence.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TailRule {
    Any,
    /// i_r != 1; monomials carry the reduction tag.
    NotOne,
    /// A final entry 1 becomes d_m.
    Bockstein(u32),
}

fn parse_symbol(tok: &str) -> Option<OpSymbol> {
    let num = |s: &str| -> Option<u32> {
        if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
            None
        } else {
            s.parse().ok()
        }
    };
    if let Some(r) = tok.strip_prefix("Sq") {
        return num(r).map(OpSymbol::Sq);
    }
    if let Some(r) = tok.strip_prefix('P') {
        return num(r).map(OpSymbol::P);
    }
    if let Some(r) = tok.strip_prefix('b') {
        return num(r).filter(|&m| m >= 1).map(OpSymbol::Bockstein);
    }
    if let Some(r) = tok.strip_prefix('r') {
        return num(r).filter(|&n| n >= 2).map(OpSymbol::Reduction);
    }
    None
}

/// Parses one monomial: whitespace-separated symbols, or `1`.
pub fn parse_monomial(text: &str, prime: Option<PrimeField>) -> Result<Monomial> {
    let e = parse_element(text, prime)?;
    let toks: Vec<&str> = text.split_whitespace().collect();
    if toks.first().is_some_and(|t| t.bytes().all(|b| b.is_ascii_digit()) && *t != "1") || text.contains('+') {
        return Err(Error::parse(text, 0, "expected a single monomial"));
    }
    let f = e.prime;
    let symbols = symbols_of(text)?;
    Monomial::from_symbols(f, &symbols)
}

fn symbols_of(text: &str) -> Result<Vec<OpSymbol>> {
    let mut out = Vec::new();
    for (i, tok) in text.split_whitespace().enumerate() {
        if tok == "1" {
            continue;
        }
        out.push(parse_symbol(tok).ok_or_else(|| Error::parse(text, i, format!("unknown symbol {tok:?}")))?);
    }
    Ok(out)
}

fn infer_prime(text: &str, symbols: &[OpSymbol], given: Option<PrimeField>) -> Result<PrimeField> {
    let mut found: Option<u32> = None;
    let mut note = |p: u32| -> Result<()> {
        match found {
            Some(q) if q != p => Err(Error::MixedPrimes(q, p)),
            _ => {
                found = Some(p);
                Ok(())
            }
        }
    };
    for s in symbols {
        match *s {
            OpSymbol::Sq(_) => note(2)?,
            OpSymbol::Reduction(n) => note(n)?,
            _ => {}
        }
    }
    if let (Some(q), Some(g)) = (found, given) {
        if q != g.p() {
            return Err(Error::MixedPrimes(g.p(), q));
        }
    }
    if let Some(g) = given {
        if g.is_two() && symbols.iter().any(|s| matches!(s, OpSymbol::P(_))) {
            return Err(Error::MixedPrimes(2, 0));
        }
        return Ok(g);
    }
    match found {
        Some(p) => PrimeField::new(p),
        None if symbols.iter().all(|s| matches!(s, OpSymbol::Bockstein(_))) && symbols.is_empty() => {
            Err(Error::parse(text, 0, "cannot infer the prime"))
        }
        None => Err(Error::parse(text, 0, "cannot infer the prime; pass it explicitly")),
    }
}

/// Parses `+`-separated terms with optional leading integer coefficients, then normalizes.
pub fn parse_element(text: &str, prime: Option<PrimeField>) -> Result<SteenrodElement> {
    let trimmed = text.trim();
    if trimmed.is_empty() {
        return Err(Error::parse(text, 0, "empty input"));
    }
    let mut terms: Vec<(i64, Vec<OpSymbol>)> = Vec::new();
    let mut all_symbols = Vec::new();
    let mut pos = 0;
    for chunk in trimmed.split('+') {
        let toks: Vec<&str> = chunk.split_whitespace().collect();
        if toks.is_empty() {
            return Err(Error::parse(text, pos, "empty term"));
        }
        let mut coeff = 1i64;
        let mut start = 0;
        if toks[0].bytes().all(|b| b.is_ascii_digit()) {
            coeff = toks[0].parse().map_err(|_| Error::parse(text, pos, "bad coefficient"))?;
            start = 1;
        }
        let mut syms = Vec::new();
        for (k, tok) in toks[start..].iter().enumerate() {
            if *tok == "1" {
                continue;
            }
            let s = parse_symbol(tok)
                .ok_or_else(|| Error::parse(text, pos + start + k, format!("unknown symbol {tok:?}")))?;
            syms.push(s);
        }
        pos += toks.len();
        all_symbols.extend(syms.iter().copied());
        terms.push((coeff, syms));
    }
    if trimmed == "0" {
        let f = prime.ok_or_else(|| Error::parse(text, 0, "cannot infer the prime"))?;
        return Ok(SteenrodElement::zero(f));
    }
    let f = infer_prime(text, &all_symbols, prime)?;
    let mut out = SteenrodElement::zero(f);
    let mut degree: Option<u32> = None;
    for (c, syms) in terms {
        let m = Monomial::from_symbols(f, &syms)?;
        match degree {
            Some(d) if d != m.degree() => {
                return Err(Error::DegreeMismatch { expected: d as i64, found: m.degree() as i64 })
            }
            _ => degree = Some(m.degree()),
        }
        let n = adem_normalize(&m).scale(f.reduce(c));
        out = out.add(&n)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two() -> PrimeField {
        PrimeField::new(2).unwrap()
    }
    fn three() -> PrimeField {
        PrimeField::new(3).unwrap()
    }

    #[test]
    fn degrees() {
        assert_eq!(parse_monomial("Sq5 Sq2 r2", None).unwrap().degree(), 7);
        assert_eq!(Monomial::identity(two()).degree(), 0);
        assert_eq!(parse_monomial("b1 P1 r3", None).unwrap().degree(), 5);
    }

    #[test]
    fn admissibility() {
        assert!(parse_monomial("Sq4 Sq2", None).unwrap().is_admissible());
        assert!(!parse_monomial("Sq1 Sq2", None).unwrap().is_admissible());
        assert!(parse_monomial("Sq9", None).unwrap().is_admissible());
        assert!(parse_monomial("P1 b1", Some(three())).unwrap().is_admissible());
        assert!(!parse_monomial("P1 P1", Some(three())).unwrap().is_admissible());
    }

    #[test]
    fn normal_forms() {
        let n = |s: &str| parse_element(s, None).unwrap().to_string();
        assert_eq!(n("Sq1 Sq2"), "Sq3");
        assert_eq!(n("Sq3 Sq3"), "Sq5 Sq1");
        assert_eq!(n("Sq2 Sq3"), "Sq4 Sq1 + Sq5");
        assert_eq!(n("Sq2 Sq2"), "Sq3 Sq1");
        assert_eq!(n("Sq1 Sq1"), "0");
        assert_eq!(n("Sq2 Sq2 r2"), "0");
        assert_eq!(n("Sq4 Sq3 r2"), "Sq5 Sq2 r2");
        assert_eq!(parse_element("P1 P1", Some(three())).unwrap().to_string(), "2 P2");
        assert_eq!(parse_element("b1 r3", None).unwrap().to_string(), "0");
    }

    #[test]
    fn multiply_examples() {
        let sq = |s: &str| parse_element(s, None).unwrap();
        assert_eq!(sq("Sq1").multiply(&sq("Sq2")).unwrap().to_string(), "Sq3");
        assert_eq!(sq("Sq1").multiply(&sq("Sq1")).unwrap().to_string(), "0");
        let x = sq("Sq4 Sq2 + Sq6");
        assert_eq!(SteenrodElement::one(two()).multiply(&x).unwrap(), x);
        let p3 = parse_element("P1", Some(three())).unwrap();
        assert!(sq("Sq1").multiply(&p3).is_err());
    }

    #[test]
    fn enumeration_examples() {
        let show = |v: Vec<Monomial>| v.iter().map(|m| format!("{:?}", m.sequence())).collect::<Vec<_>>();
        assert_eq!(show(enumerate_admissible(two(), 7, None, TailRule::NotOne)), ["[5, 2]", "[7]"]);
        assert_eq!(show(enumerate_admissible(two(), 6, Some(4), TailRule::NotOne)), ["[4, 2]"]);
        assert_eq!(show(enumerate_admissible(three(), 6, None, TailRule::Bockstein(1))), ["[5, 1]"]);
        let z8 = enumerate_admissible(two(), 1, None, TailRule::Bockstein(3));
        assert_eq!(z8.len(), 1);
        assert_eq!(z8[0].to_string(), "b3");
        let z8_3 = enumerate_admissible(two(), 3, None, TailRule::Bockstein(3));
        let txt: Vec<String> = z8_3.iter().map(|m| m.to_string()).collect();
        assert_eq!(txt, ["Sq3", "Sq2 b3"]);
    }

    #[test]
    fn parse_errors() {
        assert!(parse_element("Sq2 + P1", Some(three())).is_err());
        assert!(parse_element("Sq2 r3", None).is_err());
        assert!(parse_element("Sq2 + Sq3", None).is_err());
        assert!(parse_element("Qx", None).is_err());
        assert!(parse_element("P1", None).is_err());
        assert!(parse_element("r2 Sq2", None).is_err());
    }

    #[test]
    fn text_round_trip() {
        for s in ["Sq5 Sq2 r2", "b1 P1 r3", "Sq4 Sq1 + Sq5", "2 P2", "Sq2 b3", "1"] {
            let p = if s.contains('P') { Some(three()) } else { Some(two()) };
            let e = parse_element(s, p).unwrap();
            assert_eq!(e.to_string(), s);
        }
    }
}
