//! Brute-force evaluation of Steenrod operations on a product of low-dimensional classes.
//!
//! At p = 2 the test class is x_1 ⋯ x_n in F_2[x_1, …, x_n] with |x_i| = 1. At odd p it is
//! e_1 ⋯ e_k y_{k+1} ⋯ y_n in Λ(e_1, …, e_n) ⊗ F_p[y_1, …, y_n] with |e_i| = 1, |y_i| = 2,
//! βe_i = y_i and P(y) = y + y^p. Both sides are expanded with the Cartan formula.

use std::collections::{BTreeMap, HashMap};

use super::{Monomial, OpSymbol, SteenrodElement, Tail, BETA};
use crate::error::{Error, Result};
use crate::fp::PrimeField;

/// Exterior part as a bit mask over e_1..e_n, then exponents of the polynomial generators.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OracleMonomial {
    pub exterior: u64,
    pub exponents: Vec<u32>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OraclePolynomial {
    prime: PrimeField,
    terms: BTreeMap<OracleMonomial, u32>,
}

impl OraclePolynomial {
    pub fn prime(&self) -> PrimeField {
        self.prime
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&OracleMonomial, u32)> {
        self.terms.iter().map(|(m, c)| (m, *c))
    }

    fn add_term(&mut self, m: OracleMonomial, c: u32) {
        let f = self.prime;
        if c % f.p() == 0 {
            return;
        }
        let e = self.terms.entry(m.clone()).or_insert(0);
        *e = f.add(*e, c % f.p());
        if *e == 0 {
            self.terms.remove(&m);
        }
    }

    fn add_scaled(&mut self, other: &OraclePolynomial, c: u32) {
        for (m, k) in &other.terms {
            self.add_term(m.clone(), self.prime.mul(*k, c));
        }
    }
}

/// The test class used at arity n.
pub fn test_class(prime: PrimeField, n: usize) -> OraclePolynomial {
    let mut terms = BTreeMap::new();
    let m = if prime.is_two() {
        OracleMonomial { exterior: 0, exponents: vec![1; n] }
    } else {
        let k = n.div_ceil(2);
        let mut exps = vec![0; n];
        for e in exps.iter_mut().skip(k) {
            *e = 1;
        }
        OracleMonomial { exterior: (1u64 << k) - 1, exponents: exps }
    };
    terms.insert(m, 1);
    OraclePolynomial { prime, terms }
}

/// Unordered accumulator for one operation step.
struct Acc {
    prime: PrimeField,
    terms: HashMap<OracleMonomial, u32>,
}

impl Acc {
    fn add_term(&mut self, m: OracleMonomial, c: u32) {
        let f = self.prime;
        let e = self.terms.entry(m).or_insert(0);
        *e = f.add(*e, c % f.p());
    }

    fn finish(self) -> OraclePolynomial {
        let terms = self.terms.into_iter().filter(|(_, c)| *c != 0).collect();
        OraclePolynomial { prime: self.prime, terms }
    }
}

/// Distributes `k` over the variables: each variable of exponent a takes j <= a with weight C(a, j)
/// and its exponent becomes a + step·j. Sq^j at p = 2 has step 1, P^j at odd p has step p - 1.
fn distribute(f: PrimeField, step: u32, k: u32, m: &OracleMonomial, out: &mut Acc, coeff: u32) {
    struct Walk<'a> {
        f: PrimeField,
        step: u32,
        exps: &'a [u32],
        // room[i] = sum of exps[i..], the most the remaining variables can absorb
        room: Vec<u32>,
        exterior: u64,
        cur: Vec<u32>,
    }
    fn choose(f: PrimeField, a: u32, j: u32) -> u32 {
        if f.is_two() {
            u32::from(j & !a == 0)
        } else {
            f.binomial(a as i64, j as i64)
        }
    }
    fn go(w: &mut Walk, idx: usize, rest: u32, c: u32, out: &mut Acc) {
        if rest > w.room[idx] {
            return;
        }
        if idx == w.exps.len() {
            out.add_term(OracleMonomial { exterior: w.exterior, exponents: w.cur.clone() }, c);
            return;
        }
        let a = w.exps[idx];
        for j in 0..=rest.min(a) {
            let b = choose(w.f, a, j);
            if b == 0 {
                continue;
            }
            w.cur.push(a + w.step * j);
            go(w, idx + 1, rest - j, w.f.mul(c, b), out);
            w.cur.pop();
        }
    }
    let n = m.exponents.len();
    let mut room = vec![0; n + 1];
    for i in (0..n).rev() {
        room[i] = room[i + 1] + m.exponents[i];
    }
    let mut w = Walk { f, step, exps: &m.exponents, room, exterior: m.exterior, cur: Vec::with_capacity(n) };
    go(&mut w, 0, k, coeff, out);
}

fn beta_monomial(f: PrimeField, m: &OracleMonomial, out: &mut Acc, coeff: u32) {
    let mut before = 0u32;
    for i in 0..64 {
        let bit = 1u64 << i;
        if m.exterior & bit == 0 {
            continue;
        }
        let mut exps = m.exponents.clone();
        exps[i] += 1;
        let c = f.mul(coeff, f.sign(before as i64));
        out.add_term(OracleMonomial { exterior: m.exterior & !bit, exponents: exps }, c);
        before += 1;
    }
}

fn apply_token(f: PrimeField, token: u32, x: &OraclePolynomial) -> OraclePolynomial {
    let mut out = Acc { prime: f, terms: HashMap::with_capacity(x.terms.len()) };
    for (m, c) in &x.terms {
        if f.is_two() {
            distribute(f, 1, token, m, &mut out, *c);
        } else if token == BETA {
            beta_monomial(f, m, &mut out, *c);
        } else {
            // P^j(y^a) = C(a, j) y^{a+(p-1)j}; P^j vanishes on e_i for j > 0
            distribute(f, f.p() - 1, token, m, &mut out, *c);
        }
    }
    out.finish()
}

pub fn apply_monomial(m: &Monomial, x: &OraclePolynomial) -> Result<OraclePolynomial> {
    if m.tail() != Tail::None {
        return Err(Error::IllFormed(format!("oracle cannot evaluate source tags ({m})")));
    }
    let f = m.prime();
    let mut v = x.clone();
    for &t in m.word().iter().rev() {
        v = apply_token(f, t, &v);
        if v.is_zero() {
            break;
        }
    }
    Ok(v)
}

/// Evaluates an element on the arity-n test class.
pub fn oracle_evaluate(e: &SteenrodElement, n: usize) -> Result<OraclePolynomial> {
    if n > 64 {
        return Err(Error::IllFormed("oracle arity above 64".into()));
    }
    let d = e.degree().unwrap_or(0);
    if (n as u32) < d {
        return Err(Error::OracleArity { needed: d, given: n });
    }
    let f = e.prime();
    let x = test_class(f, n);
    let mut out = OraclePolynomial { prime: f, terms: BTreeMap::new() };
    for (m, c) in e.terms() {
        out.add_scaled(&apply_monomial(m, &x)?, c);
    }
    Ok(out)
}

/// Evaluates a raw composite without normalizing it first.
pub fn oracle_evaluate_composite(m: &Monomial, n: usize) -> Result<OraclePolynomial> {
    if (n as u32) < m.degree() {
        return Err(Error::OracleArity { needed: m.degree(), given: n });
    }
    apply_monomial(m, &test_class(m.prime(), n))
}

/// True if the admissible monomials of degree d have linearly independent oracle images.
pub fn is_faithful(prime: PrimeField, d: u32, n: usize) -> Result<bool> {
    let basis = super::enumerate_admissible(prime, d, None, super::TailRule::Any);
    let images: Vec<OraclePolynomial> =
        basis.iter().map(|m| oracle_evaluate(&SteenrodElement::from_monomial(m.clone()), n)).collect::<Result<_>>()?;
    let mut index: BTreeMap<OracleMonomial, usize> = BTreeMap::new();
    for im in &images {
        for (m, _) in im.terms() {
            let k = index.len();
            index.entry(m.clone()).or_insert(k);
        }
    }
    let vecs: Vec<Vec<u32>> = images
        .iter()
        .map(|im| {
            let mut v = vec![0; index.len()];
            for (m, c) in im.terms() {
                v[index[m]] = c;
            }
            v
        })
        .collect();
    Ok(crate::fp::rank(prime, &vecs, index.len()) == basis.len())
}

/// Every composite g·h of two algebra generators (Sq^i at p = 2; β and P^i at odd p) of degree <= max.
pub fn two_generator_composites(prime: PrimeField, max: u32) -> Vec<Monomial> {
    let gens: Vec<OpSymbol> = if prime.is_two() {
        (1..=max).map(OpSymbol::Sq).collect()
    } else {
        std::iter::once(OpSymbol::Bockstein(1))
            .chain((1..).map(OpSymbol::P).take_while(|s| s.degree(prime) <= max))
            .collect()
    };
    let mut out = Vec::new();
    for &a in &gens {
        for &b in &gens {
            if a.degree(prime) + b.degree(prime) <= max {
                out.push(Monomial::from_symbols(prime, &[a, b]).expect("generators"));
            }
        }
    }
    out
}

/// Normal form and raw composite agree on the arity-n test class.
pub fn agrees_with_normal_form(m: &Monomial, n: usize) -> Result<bool> {
    let normal = super::adem_normalize(m);
    Ok(oracle_evaluate(&normal, n)? == oracle_evaluate_composite(m, n)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::steenrod::parse_element;

    fn two() -> PrimeField {
        PrimeField::new(2).unwrap()
    }

    #[test]
    fn sq1_on_one_class() {
        let e = parse_element("Sq1", None).unwrap();
        let r = oracle_evaluate(&e, 1).unwrap();
        let v: Vec<_> = r.terms().map(|(m, c)| (m.exponents.clone(), c)).collect();
        assert_eq!(v, vec![(vec![2], 1)]);
    }

    #[test]
    fn sq3_matches_composite() {
        let m = crate::steenrod::parse_monomial("Sq1 Sq2", Some(two())).unwrap();
        let raw = oracle_evaluate_composite(&m, 3).unwrap();
        let sq3 = oracle_evaluate(&parse_element("Sq3", None).unwrap(), 3).unwrap();
        assert_eq!(raw, sq3);
    }

    #[test]
    fn arity_guard() {
        let e = parse_element("Sq4", None).unwrap();
        assert!(matches!(oracle_evaluate(&e, 3), Err(Error::OracleArity { .. })));
        let t = parse_element("Sq2 r2", None).unwrap();
        assert!(oracle_evaluate(&t, 4).is_err());
    }

    #[test]
    fn faithful_small_degrees() {
        for d in 0..=8 {
            assert!(is_faithful(two(), d, 8).unwrap(), "p=2 d={d}");
        }
        let three = PrimeField::new(3).unwrap();
        for d in 0..=10 {
            assert!(is_faithful(three, d, 10).unwrap(), "p=3 d={d}");
        }
    }
}
