//! Polynomials over F_p in unknowns taking values in F_p, so x^p = x.
//!
//! Used for Steenrod actions that are not forced by the data available when a stage is built.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::fp::PrimeField;

/// Sorted (variable, exponent) pairs, exponents in 1..p.
pub type PolyMonomial = Vec<(u32, u32)>;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Poly {
    terms: BTreeMap<PolyMonomial, u32>,
}

fn reduce_exp(f: PrimeField, e: u32) -> u32 {
    let p = f.p();
    if e < p {
        e
    } else {
        (e - 1) % (p - 1) + 1
    }
}

fn mul_monomials(f: PrimeField, a: &PolyMonomial, b: &PolyMonomial) -> PolyMonomial {
    let mut m: BTreeMap<u32, u32> = a.iter().copied().collect();
    for &(v, e) in b {
        *m.entry(v).or_insert(0) += e;
    }
    m.into_iter().map(|(v, e)| (v, reduce_exp(f, e))).collect()
}

impl Poly {
    pub fn zero() -> Self {
        Poly { terms: BTreeMap::new() }
    }

    pub fn constant(f: PrimeField, c: u32) -> Self {
        let mut p = Poly::zero();
        p.add_term(f, Vec::new(), c);
        p
    }

    pub fn var(v: u32) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(vec![(v, 1)], 1);
        Poly { terms }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn as_constant(&self) -> Option<u32> {
        match self.terms.len() {
            0 => Some(0),
            1 => self.terms.get(&Vec::new()).copied(),
            _ => None,
        }
    }

    pub fn vars(&self) -> Vec<u32> {
        let mut v: Vec<u32> = self.terms.keys().flat_map(|m| m.iter().map(|&(x, _)| x)).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(|m| m.iter().map(|&(_, e)| e).sum()).max().unwrap_or(0)
    }

    fn add_term(&mut self, f: PrimeField, m: PolyMonomial, c: u32) {
        let c = c % f.p();
        if c == 0 {
            return;
        }
        let e = self.terms.entry(m.clone()).or_insert(0);
        *e = f.add(*e, c);
        if *e == 0 {
            self.terms.remove(&m);
        }
    }

    pub fn add_scaled(&mut self, f: PrimeField, other: &Poly, c: u32) {
        if c % f.p() == 0 {
            return;
        }
        for (m, k) in &other.terms {
            self.add_term(f, m.clone(), f.mul(*k, c));
        }
    }

    pub fn scaled(&self, f: PrimeField, c: u32) -> Poly {
        let mut out = Poly::zero();
        out.add_scaled(f, self, c);
        out
    }

    pub fn mul(&self, f: PrimeField, other: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (a, ca) in &self.terms {
            for (b, cb) in &other.terms {
                out.add_term(f, mul_monomials(f, a, b), f.mul(*ca, *cb));
            }
        }
        out
    }

    /// Replaces every variable in `sub` by its image.
    pub fn substitute(&self, f: PrimeField, sub: &BTreeMap<u32, Poly>) -> Poly {
        if sub.is_empty() || self.vars().iter().all(|v| !sub.contains_key(v)) {
            return self.clone();
        }
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            let mut t = Poly::constant(f, *c);
            for &(v, e) in m {
                let base = sub.get(&v).cloned().unwrap_or_else(|| Poly::var(v));
                for _ in 0..e {
                    t = t.mul(f, &base);
                }
            }
            out.add_scaled(f, &t, 1);
        }
        out
    }

    /// For a polynomial of degree at most one: constant term and variable coefficients.
    pub fn as_linear(&self) -> Option<(u32, Vec<(u32, u32)>)> {
        let mut c0 = 0;
        let mut lin = Vec::new();
        for (m, c) in &self.terms {
            match m.as_slice() {
                [] => c0 = *c,
                [(v, 1)] => lin.push((*v, *c)),
                _ => return None,
            }
        }
        Some((c0, lin))
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(m, c)| {
                let vars: Vec<String> = m
                    .iter()
                    .map(|&(v, e)| if e == 1 { format!("x{v}") } else { format!("x{v}^{e}") })
                    .collect();
                match (vars.is_empty(), *c) {
                    (true, c) => c.to_string(),
                    (false, 1) => vars.join("*"),
                    (false, c) => format!("{c}*{}", vars.join("*")),
                }
            })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

/// Result of eliminating the linear part of a polynomial system.
#[derive(Clone, Debug, Default)]
pub struct Solution {
    pub substitution: BTreeMap<u32, Poly>,
    /// Equations that stayed nonlinear after elimination.
    pub residual: Vec<Poly>,
}

/// Repeatedly solves linear equations for their largest variable and substitutes.
/// A nonzero constant equation means the system has no solution.
pub fn eliminate(f: PrimeField, equations: Vec<Poly>, mut sub: BTreeMap<u32, Poly>) -> Result<Solution> {
    let mut pending = equations;
    loop {
        let mut progress = false;
        let mut next = Vec::new();
        for eq in pending {
            let e = eq.substitute(f, &sub);
            if e.is_zero() {
                continue;
            }
            let Some((c0, lin)) = e.as_linear() else {
                next.push(e);
                continue;
            };
            let Some(&(v, cv)) = lin.iter().max_by_key(|(v, _)| *v) else {
                return Err(Error::Inconsistent(format!("constraint reduces to {c0} = 0")));
            };
            // v = -(c0 + sum_{w != v} c_w w) / c_v
            let k = f.neg(f.inv(cv));
            let mut expr = Poly::constant(f, f.mul(c0, k));
            for &(w, cw) in &lin {
                if w != v {
                    expr.add_scaled(f, &Poly::var(w), f.mul(cw, k));
                }
            }
            let one: BTreeMap<u32, Poly> = [(v, expr.clone())].into_iter().collect();
            for p in sub.values_mut() {
                *p = p.substitute(f, &one);
            }
            sub.insert(v, expr);
            progress = true;
        }
        pending = next;
        if !progress {
            break;
        }
    }
    Ok(Solution { substitution: sub, residual: pending })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frobenius_is_identity_on_values() {
        let f = PrimeField::new(3).unwrap();
        let x = Poly::var(0);
        let x3 = x.mul(f, &x).mul(f, &x);
        assert_eq!(x3, x);
    }

    #[test]
    fn linear_elimination() {
        let f = PrimeField::new(2).unwrap();
        // x0 + x1 + 1 = 0, x1 = 0
        let mut e1 = Poly::var(0);
        e1.add_scaled(f, &Poly::var(1), 1);
        e1.add_scaled(f, &Poly::constant(f, 1), 1);
        let s = eliminate(f, vec![e1, Poly::var(1)], BTreeMap::new()).unwrap();
        assert_eq!(Poly::var(0).substitute(f, &s.substitution).as_constant(), Some(1));
        assert!(eliminate(f, vec![Poly::constant(f, 1)], BTreeMap::new()).is_err());
    }

    #[test]
    fn products_become_linear_after_substitution() {
        let f = PrimeField::new(2).unwrap();
        let xy = Poly::var(0).mul(f, &Poly::var(1));
        let mut e = xy.clone();
        e.add_scaled(f, &Poly::constant(f, 1), 1);
        let s = eliminate(f, vec![Poly::var(0).scaled(f, 1), e.clone()], BTreeMap::new());
        // x0 = 0 forces x0 x1 + 1 = 1 = 0
        assert!(s.is_err());
    }
}
