//! Free graded-commutative monomials over F_p on an indexed generator set.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::fp::PrimeField;

/// Sorted by generator index, exponents positive.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RingMonomial(pub Vec<(usize, u32)>);

impl RingMonomial {
    pub fn one() -> Self {
        RingMonomial(Vec::new())
    }

    pub fn generator(i: usize) -> Self {
        RingMonomial(vec![(i, 1)])
    }

    pub fn power(i: usize, e: u32) -> Self {
        if e == 0 {
            RingMonomial::one()
        } else {
            RingMonomial(vec![(i, e)])
        }
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn factor_count(&self) -> u32 {
        self.0.iter().map(|(_, e)| e).sum()
    }

    pub fn as_generator(&self) -> Option<usize> {
        match self.0.as_slice() {
            [(i, 1)] => Some(*i),
            _ => None,
        }
    }

    pub fn degree(&self, deg: impl Fn(usize) -> u32) -> u32 {
        self.0.iter().map(|&(i, e)| deg(i) * e).sum()
    }

    /// Factor indices with multiplicity, largest first.
    pub fn descending_indices(&self) -> Vec<usize> {
        let mut v = Vec::new();
        for &(i, e) in self.0.iter().rev() {
            for _ in 0..e {
                v.push(i);
            }
        }
        v
    }

    /// Display order: generators first, then by descending index vector.
    pub fn display_key(&self) -> (bool, Vec<usize>) {
        (self.factor_count() > 1, self.descending_indices())
    }

    /// Splits off the factor with the smallest index: (index, rest).
    pub fn split_first(&self) -> Option<(usize, RingMonomial)> {
        let (&(i, e), tail) = self.0.split_first()?;
        let mut rest = Vec::with_capacity(self.0.len());
        if e > 1 {
            rest.push((i, e - 1));
        }
        rest.extend_from_slice(tail);
        Some((i, RingMonomial(rest)))
    }

    pub fn render(&self, label: impl Fn(usize) -> String) -> String {
        if self.0.is_empty() {
            return "1".into();
        }
        self.0
            .iter()
            .rev()
            .map(|&(i, e)| if e == 1 { label(i) } else { format!("({})^{e}", label(i)) })
            .collect::<Vec<_>>()
            .join(" * ")
    }
}

/// Product of monomials with the graded-commutativity sign; None if it vanishes
/// (an odd generator squared at odd p).
pub fn multiply_monomials(
    f: PrimeField,
    a: &RingMonomial,
    b: &RingMonomial,
    deg: impl Fn(usize) -> u32,
) -> Option<(RingMonomial, u32)> {
    let odd = |i: usize| !f.is_two() && deg(i) % 2 == 1;
    let mut swaps = 0u64;
    if !f.is_two() {
        // sign of moving each odd factor of b past the larger-index odd factors of a
        for &(j, ej) in &b.0 {
            if !odd(j) {
                continue;
            }
            for &(i, ei) in &a.0 {
                if odd(i) && i > j {
                    swaps += (ei * ej) as u64;
                }
            }
        }
    }
    let mut merged: BTreeMap<usize, u32> = BTreeMap::new();
    for &(i, e) in a.0.iter().chain(&b.0) {
        *merged.entry(i).or_insert(0) += e;
    }
    if merged.iter().any(|(&i, &e)| e > 1 && odd(i)) {
        return None;
    }
    Some((RingMonomial(merged.into_iter().collect()), f.sign(swaps as i64)))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RingElement {
    pub terms: BTreeMap<RingMonomial, u32>,
}

impl RingElement {
    pub fn zero() -> Self {
        RingElement { terms: BTreeMap::new() }
    }

    pub fn from_monomial(m: RingMonomial, c: u32) -> Self {
        let mut e = RingElement::zero();
        if c != 0 {
            e.terms.insert(m, c);
        }
        e
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_term(&mut self, f: PrimeField, m: RingMonomial, c: u32) {
        let c = c % f.p();
        if c == 0 {
            return;
        }
        match self.terms.get_mut(&m) {
            Some(v) => {
                *v = f.add(*v, c);
                if *v == 0 {
                    self.terms.remove(&m);
                }
            }
            None => {
                self.terms.insert(m, c);
            }
        }
    }

    pub fn add_scaled(&mut self, f: PrimeField, other: &RingElement, c: u32) {
        for (m, k) in &other.terms {
            self.add_term(f, m.clone(), f.mul(*k, c));
        }
    }

    pub fn multiply(&self, f: PrimeField, other: &RingElement, deg: impl Fn(usize) -> u32 + Copy) -> RingElement {
        let mut out = RingElement::zero();
        for (a, ca) in &self.terms {
            for (b, cb) in &other.terms {
                if let Some((m, s)) = multiply_monomials(f, a, b, deg) {
                    out.add_term(f, m, f.mul(f.mul(*ca, *cb), s));
                }
            }
        }
        out
    }
}

/// All monomials of degree d in generators with the given degrees (all positive), at odd p
/// with exterior odd generators. Returned in display order.
pub fn monomials_in_degree(f: PrimeField, degrees: &[u32], d: u32) -> Vec<RingMonomial> {
    fn go(f: PrimeField, degrees: &[u32], idx: usize, rest: u32, cur: &mut Vec<(usize, u32)>, out: &mut Vec<RingMonomial>) {
        if rest == 0 {
            out.push(RingMonomial(cur.iter().rev().copied().collect()));
            return;
        }
        if idx == 0 {
            return;
        }
        let i = idx - 1;
        let g = degrees[i];
        let max_e = if g == 0 {
            0
        } else if !f.is_two() && g % 2 == 1 {
            1
        } else {
            rest / g
        };
        for e in (0..=max_e).rev() {
            if e * g > rest {
                continue;
            }
            if e > 0 {
                cur.push((i, e));
            }
            go(f, degrees, i, rest - e * g, cur, out);
            if e > 0 {
                cur.pop();
            }
        }
    }
    let mut out = Vec::new();
    go(f, degrees, degrees.len(), d, &mut Vec::new(), &mut out);
    out.sort_by_key(|m| m.display_key());
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exterior_squares_vanish() {
        let f = PrimeField::new(3).unwrap();
        let deg = |i: usize| [7, 8][i];
        let x = RingMonomial::generator(0);
        assert!(multiply_monomials(f, &x, &x, deg).is_none());
        let y = RingMonomial::generator(1);
        assert_eq!(multiply_monomials(f, &y, &y, deg).unwrap().0, RingMonomial::power(1, 2));
    }

    #[test]
    fn graded_sign() {
        let f = PrimeField::new(3).unwrap();
        let deg = |i: usize| [1, 3][i];
        let a = RingMonomial::generator(0);
        let b = RingMonomial::generator(1);
        assert_eq!(multiply_monomials(f, &a, &b, deg).unwrap().1, 1);
        assert_eq!(multiply_monomials(f, &b, &a, deg).unwrap().1, 2);
    }

    #[test]
    fn enumeration_order() {
        let f = PrimeField::new(2).unwrap();
        // degrees 4, 6, 7: degree 12 has x^3 and y^2
        let ms = monomials_in_degree(f, &[4, 6, 7], 12);
        let r: Vec<String> = ms.iter().map(|m| m.render(|i| ["a", "b", "c"][i].to_string())).collect();
        assert_eq!(r, ["(a)^3", "(b)^2"]);
        assert_eq!(monomials_in_degree(f, &[4], 0), vec![RingMonomial::one()]);
    }
}
