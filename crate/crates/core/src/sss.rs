//! Serre spectral sequences of principal fibrations K(A,q) -> E -> B, computed in a window.
//!
//! The E_2 page is modelled by the filtered complex H*(B) ⊗ Λ, where Λ is a simple system for
//! the fiber cohomology: exterior on x^{2^k} at p = 2, and exterior on odd / truncated
//! polynomial (height p) on even generators at odd p. The differential is the H*(B)-linear
//! derivation determined by the transgressions. Pages come from exact linear algebra on the
//! filtration, so each differential d_r is read off rather than assumed.
//!
//! When the base is itself the result of an earlier run, Steenrod operations on its classes are
//! only known modulo positive filtration. Those gaps become free parameters, every assignment is
//! run, and a degree is reported as determined only if all assignments agree.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::algebra::{RingElement, RingMonomial};
use crate::em::{CoefficientGroup, EmSpace, Target};
use crate::error::{Error, Result};
use crate::fp::{is_zero, kernel, solve, unit, PrimeField, Subspace};
use crate::par::Schedule;
use crate::stage::{pullback_label, token_degree};
use crate::steenrod::{Monomial, SteenrodElement, Tail, BETA};
use crate::table::Table;

/// Upper bound on the number of parameter assignments explored per base variant.
pub const MAX_ASSIGNMENTS: u64 = 1 << 12;

/// A class known up to an affine family: `constant + span(free)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Param {
    pub degree: u32,
    pub constant: Vec<u32>,
    pub free: Vec<Vec<u32>>,
}

impl Param {
    pub fn exact(degree: u32, constant: Vec<u32>) -> Self {
        Param { degree, constant, free: Vec::new() }
    }

    pub fn is_exact(&self) -> bool {
        self.free.is_empty()
    }

    /// Replaces the free directions by a reduced basis of their span.
    fn normalized(mut self, f: PrimeField) -> Self {
        let s = Subspace::spanned_by(f, self.constant.len(), self.free.iter());
        self.free = s.basis().to_vec();
        self
    }

    fn evaluate(&self, f: PrimeField, values: &[u32]) -> Vec<u32> {
        let mut v = self.constant.clone();
        for (dir, &c) in self.free.iter().zip(values) {
            f.add_assign_scaled(&mut v, dir, c);
        }
        v
    }

    /// True if some member of the family is zero.
    fn admits_zero(&self, f: PrimeField) -> bool {
        Subspace::spanned_by(f, self.constant.len(), self.free.iter()).contains(&self.constant)
    }
}

/// Graded-commutative F_p-algebra with a partial Steenrod action, finite in each degree.
pub trait BaseAlgebra: Send + Sync {
    fn prime(&self) -> PrimeField;
    /// Highest degree in which the cohomology is known.
    fn top(&self) -> u32;
    fn dim(&self, d: u32) -> usize;
    fn label(&self, d: u32, i: usize) -> String;
    fn multiply(&self, da: u32, a: &[u32], db: u32, b: &[u32]) -> Result<Vec<u32>>;
    /// Composite operation given as a word, applied right to left.
    fn steenrod(&self, word: &[u32], d: u32, v: &[u32]) -> Result<Param>;
    /// Class named by an expression; see the configuration notes for the grammar.
    fn class(&self, expr: &str) -> Result<Param>;
    fn name(&self) -> String;

    fn labels(&self, d: u32) -> Vec<String> {
        (0..self.dim(d)).map(|i| self.label(d, i)).collect()
    }
}

fn word_degree(f: PrimeField, w: &[u32]) -> u32 {
    w.iter().map(|&t| token_degree(f, t)).sum()
}

fn steenrod_of_word(f: PrimeField, w: &[u32]) -> Result<SteenrodElement> {
    Ok(SteenrodElement::from_monomial(Monomial::from_word(f, w.to_vec(), Tail::None)?))
}

fn bockstein_word(f: PrimeField) -> Vec<u32> {
    if f.is_two() {
        vec![1]
    } else {
        vec![BETA]
    }
}

/// Applies a word to every member of a family; the result family contains all images.
pub fn steenrod_param(base: &dyn BaseAlgebra, word: &[u32], x: &Param) -> Result<Param> {
    let f = base.prime();
    let mut out = base.steenrod(word, x.degree, &x.constant)?;
    for dir in &x.free {
        let img = base.steenrod(word, x.degree, dir)?;
        out.free.push(img.constant);
        out.free.extend(img.free);
    }
    Ok(out.normalized(f))
}

/// Parses `label + 2 label + ...` against a labelled basis.
fn parse_label_sum(
    f: PrimeField,
    expr: &str,
    top: u32,
    dim: impl Fn(u32) -> usize,
    labels: impl Fn(u32) -> Vec<String>,
) -> Result<(u32, Vec<u32>)> {
    let find = |text: &str| -> Option<(u32, usize)> {
        (0..=top).find_map(|d| labels(d).iter().position(|l| l == text).map(|i| (d, i)))
    };
    // a whole-string match wins, so labels may themselves contain " + "
    if let Some((d, i)) = find(expr.trim()) {
        return Ok((d, unit(dim(d), i)));
    }
    let mut degree = None;
    let mut acc: Vec<u32> = Vec::new();
    for (k, term) in expr.split(" + ").enumerate() {
        let term = term.trim();
        let (c, rest) = match term.split_once(' ') {
            Some((head, rest)) if head.bytes().all(|b| b.is_ascii_digit()) => {
                (head.parse::<i64>().map_err(|_| Error::parse(expr, k, "bad coefficient"))?, rest.trim())
            }
            _ => (1, term),
        };
        let (d, i) = find(rest).ok_or_else(|| Error::parse(expr, k, format!("no class labelled {rest:?}")))?;
        match degree {
            None => {
                degree = Some(d);
                acc = vec![0; dim(d)];
            }
            Some(d0) if d0 != d => return Err(Error::DegreeMismatch { expected: d0 as i64, found: d as i64 }),
            _ => {}
        }
        acc[i] = f.add(acc[i], f.reduce(c));
    }
    let d = degree.ok_or_else(|| Error::parse(expr, 0, "empty class expression"))?;
    Ok((d, acc))
}

/// H*(K(A,q); F_p) as a base, known exactly.
pub struct EmBase {
    space: EmSpace,
    basis: Vec<Vec<RingMonomial>>,
    labels: Vec<Vec<String>>,
    index: HashMap<RingMonomial, usize>,
}

impl EmBase {
    pub fn new(coeff: CoefficientGroup, q: u32, p: PrimeField, top: u32) -> Result<Self> {
        let space = EmSpace::new(coeff, q, p, top)?;
        let basis: Vec<Vec<RingMonomial>> = (0..=top).map(|d| space.basis(d)).collect();
        let labels = basis.iter().map(|b| b.iter().map(|m| space.label(m)).collect()).collect();
        let mut index = HashMap::new();
        for b in &basis {
            for (i, m) in b.iter().enumerate() {
                index.insert(m.clone(), i);
            }
        }
        Ok(EmBase { space, basis, labels, index })
    }

    pub fn space(&self) -> &EmSpace {
        &self.space
    }

    fn element(&self, d: u32, v: &[u32]) -> RingElement {
        let mut e = RingElement::zero();
        for (i, &c) in v.iter().enumerate() {
            e.add_term(self.space.prime(), self.basis[d as usize][i].clone(), c);
        }
        e
    }

    fn vector(&self, d: u32, e: &RingElement) -> Result<Vec<u32>> {
        self.check(d)?;
        let mut v = vec![0; self.dim(d)];
        for (m, &c) in &e.terms {
            if self.space.monomial_degree(m) != d {
                return Err(Error::DegreeMismatch { expected: d as i64, found: self.space.monomial_degree(m) as i64 });
            }
            v[self.index[m]] = c;
        }
        Ok(v)
    }

    fn check(&self, d: u32) -> Result<()> {
        if d > self.top() {
            Err(Error::Window { requested: d, available: self.top() })
        } else {
            Ok(())
        }
    }
}

impl BaseAlgebra for EmBase {
    fn prime(&self) -> PrimeField {
        self.space.prime()
    }

    fn top(&self) -> u32 {
        self.space.d_max()
    }

    fn dim(&self, d: u32) -> usize {
        self.basis.get(d as usize).map_or(0, Vec::len)
    }

    fn label(&self, d: u32, i: usize) -> String {
        self.labels[d as usize][i].clone()
    }

    fn multiply(&self, da: u32, a: &[u32], db: u32, b: &[u32]) -> Result<Vec<u32>> {
        self.check(da + db)?;
        let prod = self.space.multiply(&self.element(da, a), &self.element(db, b));
        self.vector(da + db, &prod)
    }

    fn steenrod(&self, word: &[u32], d: u32, v: &[u32]) -> Result<Param> {
        let f = self.prime();
        let target = d + word_degree(f, word);
        self.check(target)?;
        let out = self.space.act(&steenrod_of_word(f, word)?, &self.element(d, v))?;
        Ok(Param::exact(target, self.vector(target, &out)?))
    }

    fn class(&self, expr: &str) -> Result<Param> {
        let (d, v) = parse_label_sum(self.prime(), expr, self.top(), |d| self.dim(d), |d| self.labels(d))?;
        Ok(Param::exact(d, v))
    }

    fn name(&self) -> String {
        Target::Space { coeff: self.space.coeff(), q: self.space.q() }.to_string()
    }
}

/// One variable of the simple system: `gen^power` in factor `factor`.
#[derive(Clone, Debug)]
struct Var {
    factor: usize,
    gen: usize,
    power: u32,
    degree: u32,
    /// Largest exponent in the model.
    cap: u32,
}

/// Fiber cohomology as a product of Eilenberg-MacLane spaces, in simple-system coordinates.
pub struct Fiber {
    prime: PrimeField,
    top: u32,
    factors: Vec<EmSpace>,
    vars: Vec<Var>,
    basis: Vec<Vec<Vec<u32>>>,
    index: HashMap<Vec<u32>, usize>,
    labels: Vec<Vec<String>>,
}

impl Fiber {
    pub fn new(prime: PrimeField, factors: &[(CoefficientGroup, u32)], top: u32) -> Result<Self> {
        let spaces: Vec<EmSpace> =
            factors.iter().map(|&(c, q)| EmSpace::new(c, q, prime, top)).collect::<Result<_>>()?;
        let mut vars = Vec::new();
        for (fi, space) in spaces.iter().enumerate() {
            for g in space.generators() {
                if prime.is_two() {
                    let mut power = 1;
                    while g.degree * power <= top {
                        vars.push(Var { factor: fi, gen: g.index, power, degree: g.degree * power, cap: 1 });
                        power *= 2;
                    }
                } else if g.is_odd() {
                    vars.push(Var { factor: fi, gen: g.index, power: 1, degree: g.degree, cap: 1 });
                } else {
                    // z^p would need its transpotence element, which the model leaves out
                    if prime.p() * g.degree <= top {
                        return Err(Error::Window { requested: top, available: prime.p() * g.degree - 1 });
                    }
                    vars.push(Var { factor: fi, gen: g.index, power: 1, degree: g.degree, cap: prime.p() - 1 });
                }
            }
        }
        let mut basis = vec![Vec::new(); top as usize + 1];
        let mut cur = vec![0u32; vars.len()];
        enumerate_exponents(&vars, 0, 0, top, &mut cur, &mut basis);
        let mut index = HashMap::new();
        for b in &basis {
            for (i, e) in b.iter().enumerate() {
                index.insert(e.clone(), i);
            }
        }
        let mut fiber = Fiber { prime, top, factors: spaces, vars, basis, index, labels: Vec::new() };
        fiber.labels = fiber.basis.iter().map(|b| b.iter().map(|e| fiber.render_monomial(e)).collect()).collect();
        Ok(fiber)
    }

    pub fn dim(&self, d: u32) -> usize {
        self.basis.get(d as usize).map_or(0, Vec::len)
    }

    pub fn label(&self, d: u32, i: usize) -> &str {
        &self.labels[d as usize][i]
    }

    pub fn top(&self) -> u32 {
        self.top
    }

    pub fn factor(&self, i: usize) -> &EmSpace {
        &self.factors[i]
    }

    /// Ring monomial of each factor; the simple-system product matches the ring basis.
    fn ring_monomials(&self, exps: &[u32]) -> Vec<RingMonomial> {
        let mut per: Vec<BTreeMap<usize, u32>> = vec![BTreeMap::new(); self.factors.len()];
        for (v, &e) in self.vars.iter().zip(exps) {
            if e > 0 {
                *per[v.factor].entry(v.gen).or_insert(0) += e * v.power;
            }
        }
        per.into_iter().map(|m| RingMonomial(m.into_iter().collect())).collect()
    }

    fn render_monomial(&self, exps: &[u32]) -> String {
        let parts: Vec<String> = self
            .ring_monomials(exps)
            .iter()
            .enumerate()
            .filter(|(_, m)| !m.is_one())
            .map(|(i, m)| self.factors[i].label(m))
            .collect();
        if parts.is_empty() {
            "1".into()
        } else {
            parts.join(" * ")
        }
    }

    pub fn render(&self, d: u32, v: &[u32]) -> String {
        render_sum(v.iter().enumerate().map(|(i, &c)| (c, self.label(d, i).to_string())))
    }

    /// Λ coordinates of a ring element living in one factor.
    fn from_ring(&self, factor: usize, d: u32, e: &RingElement) -> Result<Vec<u32>> {
        let mut v = vec![0; self.dim(d)];
        for (m, &c) in &e.terms {
            let mut exps = vec![0u32; self.vars.len()];
            for &(g, mut power) in &m.0 {
                let mut place = 1;
                while power > 0 {
                    let digit = power % self.prime.p();
                    if digit > 0 {
                        let vi = self
                            .vars
                            .iter()
                            .position(|x| x.factor == factor && x.gen == g && x.power == place)
                            .ok_or(Error::Window { requested: d, available: self.top })?;
                        exps[vi] = digit;
                    }
                    power /= self.prime.p();
                    place *= self.prime.p();
                }
            }
            let i = *self.index.get(&exps).ok_or(Error::Window { requested: d, available: self.top })?;
            v[i] = self.prime.add(v[i], c);
        }
        Ok(v)
    }

    /// Steenrod action on Λ coordinates; terms mixing factors are not supported.
    pub fn steenrod(&self, word: &[u32], d: u32, v: &[u32]) -> Result<Vec<u32>> {
        let f = self.prime;
        let target = d + word_degree(f, word);
        if target > self.top {
            return Err(Error::Window { requested: target, available: self.top });
        }
        let op = steenrod_of_word(f, word)?;
        let mut out = vec![0; self.dim(target)];
        for (i, &c) in v.iter().enumerate() {
            if c == 0 {
                continue;
            }
            let monos = self.ring_monomials(&self.basis[d as usize][i]);
            let active: Vec<usize> = (0..monos.len()).filter(|&k| !monos[k].is_one()).collect();
            let image = match active.as_slice() {
                [] => {
                    if word.is_empty() {
                        out[0] = f.add(out[0], c);
                    }
                    continue;
                }
                [k] => {
                    let e = self.factors[*k].act(&op, &RingElement::from_monomial(monos[*k].clone(), 1))?;
                    self.from_ring(*k, target, &e)?
                }
                _ => {
                    return Err(Error::UnknownAction {
                        op: format!("{op}"),
                        class: self.label(d, i).to_string(),
                    })
                }
            };
            f.add_assign_scaled(&mut out, &image, c);
        }
        Ok(out)
    }

    /// Parses a sum of fiber basis labels.
    pub fn parse(&self, expr: &str) -> Result<(u32, Vec<u32>)> {
        parse_label_sum(self.prime, expr, self.top, |d| self.dim(d), |d| self.labels[d as usize].clone())
    }
}

fn enumerate_exponents(vars: &[Var], at: usize, deg: u32, top: u32, cur: &mut Vec<u32>, out: &mut [Vec<Vec<u32>>]) {
    if at == vars.len() {
        out[deg as usize].push(cur.clone());
        return;
    }
    let v = &vars[at];
    for e in 0..=v.cap {
        let d = deg + e * v.degree;
        if d > top {
            break;
        }
        cur[at] = e;
        enumerate_exponents(vars, at + 1, d, top, cur, out);
    }
    cur[at] = 0;
}

fn render_sum(terms: impl Iterator<Item = (u32, String)>) -> String {
    let parts: Vec<String> = terms
        .filter(|(c, _)| *c != 0)
        .map(|(c, l)| if c == 1 { l } else { format!("{c} {l}") })
        .collect();
    if parts.is_empty() {
        "0".into()
    } else {
        parts.join(" + ")
    }
}

/// Basis cell b ⊗ m of the model: base degree s, base index b, fiber monomial m of degree n - s.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
struct Cell {
    s: u32,
    b: usize,
    m: usize,
}

/// The filtered complex H*(B) ⊗ Λ up to total degree `top`, with d known below `top`.
struct Complex {
    f: PrimeField,
    cells: Vec<Vec<Cell>>,
    d: Vec<Vec<Vec<u32>>>,
}

impl Complex {
    fn build(base: &dyn BaseAlgebra, fiber: &Fiber, tau: &[Option<Vec<u32>>], top: u32) -> Result<Self> {
        let f = base.prime();
        let mut cells = Vec::new();
        let mut lookup: Vec<HashMap<Cell, usize>> = Vec::new();
        for n in 0..=top {
            let mut cs = Vec::new();
            for s in 0..=n {
                for b in 0..base.dim(s) {
                    for m in 0..fiber.dim(n - s) {
                        cs.push(Cell { s, b, m });
                    }
                }
            }
            lookup.push(cs.iter().enumerate().map(|(i, c)| (*c, i)).collect());
            cells.push(cs);
        }
        let mut products: HashMap<(u32, usize, usize), Vec<u32>> = HashMap::new();
        let mut d = Vec::new();
        for n in 0..top {
            let mut images = Vec::with_capacity(cells[n as usize].len());
            for cell in &cells[n as usize] {
                let t = n - cell.s;
                let exps = &fiber.basis[t as usize][cell.m];
                let mut img = vec![0; cells[n as usize + 1].len()];
                let mut before = 0u64;
                for (g, var) in fiber.vars.iter().enumerate() {
                    let e = exps[g];
                    if e == 0 {
                        continue;
                    }
                    let sign = f.sign((var.degree as u64 * before + cell.s as u64) as i64);
                    before += (e * var.degree) as u64;
                    let tg = tau[g].as_ref().ok_or(Error::Window { requested: var.degree + 1, available: top })?;
                    let key = (cell.s, cell.b, g);
                    if !products.contains_key(&key) {
                        let p = base.multiply(cell.s, &unit(base.dim(cell.s), cell.b), var.degree + 1, tg)?;
                        products.insert(key, p);
                    }
                    let prod = &products[&key];
                    let mut rest = exps.clone();
                    rest[g] -= 1;
                    let m = fiber.index[&rest];
                    let s2 = cell.s + var.degree + 1;
                    let coef = f.mul(sign, e % f.p());
                    for (b2, &c) in prod.iter().enumerate() {
                        if c != 0 {
                            let j = lookup[n as usize + 1][&Cell { s: s2, b: b2, m }];
                            img[j] = f.add(img[j], f.mul(c, coef));
                        }
                    }
                }
                images.push(img);
            }
            d.push(images);
        }
        Ok(Complex { f, cells, d })
    }

    fn dim(&self, n: u32) -> usize {
        self.cells.get(n as usize).map_or(0, Vec::len)
    }

    fn apply(&self, n: u32, x: &[u32]) -> Vec<u32> {
        let mut out = vec![0; self.dim(n + 1)];
        for (i, &c) in x.iter().enumerate() {
            if c != 0 {
                self.f.add_assign_scaled(&mut out, &self.d[n as usize][i], c);
            }
        }
        out
    }

    /// {x ∈ F^s C^n : dx ∈ F^hi}; `hi = None` means dx = 0.
    fn z(&self, n: u32, s: u32, hi: Option<u32>) -> Vec<Vec<u32>> {
        let dom: Vec<usize> = (0..self.dim(n)).filter(|&i| self.cells[n as usize][i].s >= s).collect();
        let cod: Vec<usize> = (0..self.dim(n + 1))
            .filter(|&j| hi.map_or(true, |h| self.cells[n as usize + 1][j].s < h))
            .collect();
        let images: Vec<Vec<u32>> =
            dom.iter().map(|&i| cod.iter().map(|&j| self.d[n as usize][i][j]).collect()).collect();
        kernel(self.f, &images, cod.len())
            .into_iter()
            .map(|k| {
                let mut x = vec![0; self.dim(n)];
                for (c, &i) in k.iter().zip(&dom) {
                    x[i] = *c;
                }
                x
            })
            .collect()
    }

    /// d{y ∈ F^s C^{n-1} : dy ∈ F^hi}; empty for n = 0.
    fn dz(&self, n: u32, s: i64, hi: Option<u32>) -> Vec<Vec<u32>> {
        if n == 0 {
            return Vec::new();
        }
        self.z(n - 1, s.max(0) as u32, hi).iter().map(|x| self.apply(n - 1, x)).collect()
    }

    fn rank(&self, n: u32, vs: &[Vec<u32>]) -> usize {
        Subspace::spanned_by(self.f, self.dim(n), vs.iter()).dim()
    }

    /// Denominator of E_r^s in total degree n: Z_{r-1}^{s+1} + d Z_{r-1}^{s-r+1}.
    fn denominator(&self, n: u32, s: u32, r: u32) -> Vec<Vec<u32>> {
        let mut v = self.z(n, s + 1, Some(s + r));
        v.extend(self.dz(n, s as i64 - r as i64 + 1, Some(s)));
        v
    }

    fn page_dim(&self, n: u32, s: u32, r: u32) -> usize {
        self.rank(n, &self.z(n, s, Some(s + r))) - self.rank(n, &self.denominator(n, s, r))
    }

    fn infinity_dim(&self, n: u32, s: u32) -> usize {
        let z = self.z(n, s, None);
        let mut den = self.z(n, s + 1, None);
        den.extend(self.dz(n, 0, Some(s)));
        self.rank(n, &z) - self.rank(n, &den)
    }

    /// Rank of d_r leaving E_r^{s, n-s}.
    fn rank_out(&self, n: u32, s: u32, r: u32) -> usize {
        let mut den = self.denominator(n + 1, s + r, r);
        let base = self.rank(n + 1, &den);
        den.extend(self.z(n, s, Some(s + r)).iter().map(|x| self.apply(n, x)));
        self.rank(n + 1, &den) - base
    }

    fn leading(&self, n: u32, s: u32, x: &[u32]) -> Vec<u32> {
        x.iter()
            .enumerate()
            .map(|(i, &c)| if self.cells[n as usize][i].s == s { c } else { 0 })
            .collect()
    }

    /// Largest |d∘d| coordinate count; zero for a complex.
    fn square_defect(&self) -> usize {
        let mut bad = 0;
        for n in 0..self.d.len().saturating_sub(1) as u32 {
            for i in 0..self.dim(n) {
                let dd = self.apply(n + 1, &self.d[n as usize][i]);
                bad += dd.iter().filter(|&&c| c != 0).count();
            }
        }
        bad
    }
}

/// How a logged differential is accounted for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Rule {
    /// The fundamental class of a fiber factor hits its k-invariant.
    Transgression,
    /// Sq^I ι hits Sq^I θ.
    SteenrodCommutation,
    /// x^{2^k} hits the iterated square of τ(x).
    Kudo,
    /// A declared input fact.
    Imported,
    /// Products and everything else, by the derivation rule on the model.
    Leibniz,
}

impl std::fmt::Display for Rule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Rule::Transgression => "transgression",
            Rule::SteenrodCommutation => "Steenrod-commutation",
            Rule::Kudo => "Kudo",
            Rule::Imported => "imported",
            Rule::Leibniz => "Leibniz",
        };
        f.write_str(s)
    }
}

/// One independent nonzero differential d_r: (s, t) -> (s + r, t - r + 1).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogEntry {
    pub r: u32,
    pub source: (u32, u32),
    pub target: (u32, u32),
    pub source_label: String,
    pub target_label: String,
    pub rule: Rule,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DifferentialLog {
    /// Bidegrees of total degree at or above the window are not tracked.
    pub window: u32,
    pub entries: Vec<LogEntry>,
}

impl DifferentialLog {
    /// E_∞ dimensions obtained by removing every logged differential from both ends.
    pub fn replay(&self, e2: &BTreeMap<(u32, u32), usize>) -> Result<BTreeMap<(u32, u32), usize>> {
        let mut e = e2.clone();
        for x in &self.entries {
            for key in [x.source, x.target] {
                if key.0 + key.1 >= self.window {
                    continue;
                }
                let slot = e.entry(key).or_insert(0);
                *slot = slot.checked_sub(1).ok_or_else(|| {
                    Error::Inconsistent(format!("d{} on {} exceeds E at {:?}", x.r, x.source_label, key))
                })?;
            }
        }
        e.retain(|_, v| *v > 0);
        Ok(e)
    }

    /// Number of independent d_r leaving (s, t).
    pub fn rank_out(&self, r: u32, source: (u32, u32)) -> usize {
        self.entries.iter().filter(|e| e.r == r && e.source == source).count()
    }
}

/// One page in the window, with a label per basis element.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BigradedPage {
    /// None for E_∞.
    pub r: Option<u32>,
    pub window: u32,
    pub entries: BTreeMap<(u32, u32), Vec<String>>,
}

impl BigradedPage {
    pub fn dims(&self) -> BTreeMap<(u32, u32), usize> {
        self.entries.iter().map(|(k, v)| (*k, v.len())).collect()
    }

    /// Fixed-width grid, one dot per basis element, t upwards and s to the right.
    pub fn chart(&self) -> String {
        let top_t = self.entries.keys().map(|k| k.1).max().unwrap_or(0);
        let top_s = self.entries.keys().map(|k| k.0).max().unwrap_or(0);
        let width = self.entries.values().map(Vec::len).max().unwrap_or(1).max(2);
        let mut out = String::new();
        for t in (0..=top_t).rev() {
            out.push_str(&format!("{t:>3} |"));
            for s in 0..=top_s {
                let n = self.entries.get(&(s, t)).map_or(0, Vec::len);
                let cell = if n == 0 { ".".to_string() } else { "o".repeat(n) };
                out.push_str(&format!(" {cell:<width$}"));
            }
            out.truncate(out.trim_end().len());
            out.push('\n');
        }
        out.push_str(&format!("    +{}\n", "-".repeat((top_s as usize + 1) * (width + 1))));
        out.push_str("     ");
        for s in 0..=top_s {
            out.push_str(&format!(" {s:<width$}"));
        }
        out.truncate(out.trim_end().len());
        out.push('\n');
        out
    }
}

/// Representative of a basis class of H^n: a cycle whose leading term sits in filtration s.
#[derive(Clone, Debug)]
struct Rep {
    s: u32,
    cycle: Vec<u32>,
    label: String,
}

/// The spectral sequence of one fibration for one choice of the undetermined parameters.
pub struct SssVariant {
    name: String,
    window: u32,
    base: Arc<dyn BaseAlgebra>,
    fiber: Arc<Fiber>,
    complex: Complex,
    reps: Vec<Vec<Rep>>,
    boundaries: Vec<Vec<Vec<u32>>>,
    /// Transgression of each simple-system variable, where defined.
    tau: Vec<Option<Vec<u32>>>,
    pub e2: BTreeMap<(u32, u32), usize>,
    pub e_inf: BTreeMap<(u32, u32), usize>,
    pub log: DifferentialLog,
}

impl SssVariant {
    fn build(
        name: &str,
        window: u32,
        base: Arc<dyn BaseAlgebra>,
        fiber: Arc<Fiber>,
        tau: Vec<Option<Vec<u32>>>,
    ) -> Result<Self> {
        let complex = Complex::build(base.as_ref(), &fiber, &tau, window + 1)?;
        let mut v = SssVariant {
            name: name.to_string(),
            window,
            base,
            fiber,
            complex,
            reps: Vec::new(),
            boundaries: Vec::new(),
            tau,
            e2: BTreeMap::new(),
            e_inf: BTreeMap::new(),
            log: DifferentialLog { window, entries: Vec::new() },
        };
        v.compute_pages();
        v.compute_reps();
        Ok(v)
    }

    fn compute_pages(&mut self) {
        let c = &self.complex;
        let f = c.f;
        let mut entries = Vec::new();
        for n in 0..self.window {
            for s in 0..=n {
                let e2 = c.page_dim(n, s, 2);
                if e2 > 0 {
                    self.e2.insert((s, n - s), e2);
                }
                let einf = c.infinity_dim(n, s);
                if einf > 0 {
                    self.e_inf.insert((s, n - s), einf);
                }
                for r in 2..=n + 1 - s {
                    let rank = c.rank_out(n, s, r);
                    if rank == 0 {
                        continue;
                    }
                    let mut src = Subspace::spanned_by(f, c.dim(n), c.denominator(n, s, r).iter());
                    let mut tgt = Subspace::spanned_by(f, c.dim(n + 1), c.denominator(n + 1, s + r, r).iter());
                    let mut found = 0;
                    for x in c.z(n, s, Some(s + r)) {
                        if found == rank {
                            break;
                        }
                        if !src.add(x.clone()) {
                            continue;
                        }
                        let dx = c.apply(n, &x);
                        if !tgt.add(dx.clone()) {
                            continue;
                        }
                        found += 1;
                        let t = n - s;
                        let lt = c.leading(n, s, &x);
                        entries.push(LogEntry {
                            r,
                            source: (s, t),
                            target: (s + r, t + 1 - r),
                            source_label: self.render_leading(n, s, &lt),
                            target_label: self.render_leading(n + 1, s + r, &c.leading(n + 1, s + r, &dx)),
                            rule: self.rule_for(n, s, r, &lt),
                        });
                    }
                    debug_assert_eq!(found, rank);
                }
            }
        }
        entries.sort_by_key(|e| (e.r, e.source.0 + e.source.1, e.source.0));
        self.log.entries = entries;
    }

    fn rule_for(&self, n: u32, s: u32, r: u32, lt: &[u32]) -> Rule {
        if s != 0 || r != n + 1 {
            return Rule::Leibniz;
        }
        let cells = &self.complex.cells[n as usize];
        let mut rules = lt.iter().enumerate().filter(|(_, &c)| c != 0).map(|(i, _)| {
            let exps = &self.fiber.basis[n as usize][cells[i].m];
            let mut vars = exps.iter().enumerate().filter(|(_, &e)| e > 0);
            match (vars.next(), vars.next()) {
                (Some((g, &1)), None) => {
                    let var = &self.fiber.vars[g];
                    let op = &self.fiber.factor(var.factor).generators()[var.gen].op;
                    if var.power > 1 {
                        Rule::Kudo
                    } else if !op.word().is_empty() {
                        Rule::SteenrodCommutation
                    } else if matches!(op.tail(), Tail::Bockstein(_)) {
                        Rule::Imported
                    } else {
                        Rule::Transgression
                    }
                }
                _ => Rule::Leibniz,
            }
        });
        let first = rules.next().unwrap_or(Rule::Leibniz);
        if rules.all(|x| x == first) {
            first
        } else {
            Rule::Leibniz
        }
    }

    /// Filtration-compatible basis of H^n for n <= window.
    fn compute_reps(&mut self) {
        let f = self.complex.f;
        for n in 0..=self.window {
            let c = &self.complex;
            let bounds = c.dz(n, 0, Some(0));
            let mut reps = Vec::new();
            for s in 0..=n {
                let cycles = c.z(n, s, None);
                let in_fs: Vec<Vec<u32>> = c.dz(n, 0, Some(s));
                let lt_b = Subspace::spanned_by(f, c.dim(n), in_fs.iter().map(|x| c.leading(n, s, x)).collect::<Vec<_>>().iter());
                let mut combined = lt_b.clone();
                for z in &cycles {
                    combined.add(c.leading(n, s, z));
                }
                let mut lifts: Vec<Vec<u32>> = cycles.iter().map(|z| c.leading(n, s, z)).collect();
                lifts.extend(in_fs.iter().map(|x| c.leading(n, s, x)));
                let fulls: Vec<&Vec<u32>> = cycles.iter().chain(in_fs.iter()).collect();
                for (row, &pc) in combined.basis().iter().zip(combined.pivots()) {
                    if lt_b.pivots().contains(&pc) {
                        continue;
                    }
                    let mut w = row.clone();
                    lt_b.reduce(&mut w);
                    if is_zero(&w) {
                        continue;
                    }
                    let coeffs = solve(f, &lifts, &w).expect("leading term lies in the span of cycles");
                    let mut cycle = vec![0; c.dim(n)];
                    for (k, &a) in coeffs.iter().enumerate() {
                        if a != 0 {
                            f.add_assign_scaled(&mut cycle, fulls[k], a);
                        }
                    }
                    let label = self.render_leading(n, s, &w);
                    reps.push(Rep { s, cycle, label });
                }
            }
            let bspace = Subspace::spanned_by(f, self.complex.dim(n), bounds.iter());
            self.boundaries.push(bspace.basis().to_vec());
            self.reps.push(reps);
        }
    }

    fn render_leading(&self, n: u32, s: u32, w: &[u32]) -> String {
        let cells = &self.complex.cells[n as usize];
        let t = n - s;
        let mut by_base: BTreeMap<usize, Vec<u32>> = BTreeMap::new();
        for (i, &c) in w.iter().enumerate() {
            if c != 0 {
                let cell = cells[i];
                by_base.entry(cell.b).or_insert_with(|| vec![0; self.fiber.dim(t)])[cell.m] = c;
            }
        }
        if s == 0 {
            let fv = by_base.remove(&0).unwrap_or_default();
            return format!("[{}]", self.fiber.render(t, &fv));
        }
        if t == 0 {
            let mut bv = vec![0; self.base.dim(s)];
            for (b, fv) in by_base {
                bv[b] = fv[0];
            }
            let text = render_sum(bv.iter().enumerate().map(|(b, &c)| (c, self.base.label(s, b))));
            return if text.contains(" + ") { format!("p*({text})") } else { pullback_label(&text) };
        }
        let terms: Vec<String> = by_base
            .into_iter()
            .map(|(b, fv)| {
                let fr = self.fiber.render(t, &fv);
                let fr = if fr.contains(" + ") { format!("({fr})") } else { fr };
                format!("{} (x) {}", self.base.label(s, b), fr)
            })
            .collect();
        terms.join(" + ")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn window(&self) -> u32 {
        self.window
    }

    /// Dimension of H^n read off E_∞.
    pub fn total_dim(&self, n: u32) -> usize {
        self.e_inf.iter().filter(|((s, t), _)| s + t == n).map(|(_, v)| v).sum()
    }

    pub fn total_labels(&self, n: u32) -> Vec<String> {
        self.reps.get(n as usize).map_or(Vec::new(), |r| r.iter().map(|x| x.label.clone()).collect())
    }

    /// Dimensions of E_r for every r >= 2 up to stabilisation, by bidegree.
    pub fn page(&self, r: u32) -> BTreeMap<(u32, u32), usize> {
        let mut out = BTreeMap::new();
        for n in 0..self.window {
            for s in 0..=n {
                let d = self.complex.page_dim(n, s, r);
                if d > 0 {
                    out.insert((s, n - s), d);
                }
            }
        }
        out
    }

    /// d_r∘d_r = 0 on every page: d maps Z_r^s into the d_r-cycles Z_r^{s+r}, and d∘d vanishes
    /// on the model itself.
    pub fn check_square_zero(&self) -> Result<()> {
        let c = &self.complex;
        if c.square_defect() != 0 {
            return Err(Error::Inconsistent(format!("{}: d∘d is nonzero on the model", self.name)));
        }
        for n in 0..self.window {
            for s in 0..=n {
                for r in 2..=n + 1 - s {
                    let cycles = Subspace::spanned_by(c.f, c.dim(n + 1), c.z(n + 1, s + r, Some(s + 2 * r)).iter());
                    for x in c.z(n, s, Some(s + r)) {
                        if !cycles.contains(&c.apply(n, &x)) {
                            return Err(Error::Inconsistent(format!(
                                "{}: d{r}∘d{r} is nonzero from ({s},{})",
                                self.name,
                                n - s
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// dim E_{r+1} = dim E_r - (d_r out) - (d_r in) at every entry, with ranks from the log.
    pub fn check_accounting(&self) -> Result<()> {
        let c = &self.complex;
        for n in 0..self.window {
            for s in 0..=n {
                let t = n - s;
                for r in 2..=n + 2 {
                    let out = self.log.rank_out(r, (s, t));
                    let inc = if s >= r { self.log.rank_out(r, (s - r, t + r - 1)) } else { 0 };
                    let (now, next) = (c.page_dim(n, s, r), c.page_dim(n, s, r + 1));
                    if now != next + out + inc {
                        return Err(Error::Inconsistent(format!(
                            "{}: E_{r}({s},{t}) = {now} but E_{}({s},{t}) = {next} with {out} out and {inc} in",
                            self.name,
                            r + 1
                        )));
                    }
                }
                if c.page_dim(n, s, n + 3) != c.infinity_dim(n, s) {
                    return Err(Error::Inconsistent(format!("{}: pages do not stabilise at ({s},{t})", self.name)));
                }
            }
        }
        Ok(())
    }

    /// Replaying the log on E_2 gives E_∞.
    pub fn check_replay(&self) -> Result<()> {
        let replayed = self.log.replay(&self.e2)?;
        if replayed != self.e_inf {
            return Err(Error::Inconsistent(format!("{}: log replay differs from E_∞", self.name)));
        }
        Ok(())
    }

    /// E_2 with labels b (x) f.
    pub fn e2_page(&self) -> BigradedPage {
        let mut entries = BTreeMap::new();
        for n in 0..self.window {
            for s in 0..=n {
                let t = n - s;
                let mut labels = Vec::new();
                for i in 0..self.base.dim(s) {
                    for j in 0..self.fiber.dim(t) {
                        let (b, fl) = (self.base.label(s, i), self.fiber.label(t, j));
                        labels.push(match (s, t) {
                            (0, _) => fl.to_string(),
                            (_, 0) => b,
                            _ => format!("{b} (x) {fl}"),
                        });
                    }
                }
                if !labels.is_empty() {
                    entries.insert((s, t), labels);
                }
            }
        }
        BigradedPage { r: Some(2), window: self.window, entries }
    }

    /// E_∞ with the labels of the chosen representatives.
    pub fn e_inf_page(&self) -> BigradedPage {
        let mut entries: BTreeMap<(u32, u32), Vec<String>> = BTreeMap::new();
        for n in 0..self.window {
            for rep in &self.reps[n as usize] {
                entries.entry((rep.s, n - rep.s)).or_default().push(rep.label.clone());
            }
        }
        BigradedPage { r: None, window: self.window, entries }
    }

    /// Nonzero coordinates of d∘d on the model; zero for a well-formed run.
    pub fn square_defect(&self) -> usize {
        self.complex.square_defect()
    }

    /// Transgression of a simple-system variable, named by its fiber label.
    pub fn transgression(&self, label: &str) -> Option<(u32, Vec<u32>)> {
        let g = (0..self.fiber.vars.len()).find(|&g| {
            let mut e = vec![0; self.fiber.vars.len()];
            e[g] = 1;
            self.fiber.render_monomial(&e) == label
        })?;
        self.tau[g].clone().map(|t| (self.fiber.vars[g].degree + 1, t))
    }

    fn check(&self, d: u32) -> Result<()> {
        if d > self.window {
            Err(Error::Window { requested: d, available: self.window })
        } else {
            Ok(())
        }
    }

    fn cycle_of(&self, n: u32, v: &[u32]) -> Vec<u32> {
        let mut out = vec![0; self.complex.dim(n)];
        for (i, &c) in v.iter().enumerate() {
            if c != 0 {
                self.complex.f.add_assign_scaled(&mut out, &self.reps[n as usize][i].cycle, c);
            }
        }
        out
    }

    /// Coordinates of a cycle in the class basis.
    fn express(&self, n: u32, cycle: &[u32]) -> Result<Vec<u32>> {
        let k = self.reps[n as usize].len();
        let mut gens: Vec<Vec<u32>> = self.reps[n as usize].iter().map(|r| r.cycle.clone()).collect();
        gens.extend(self.boundaries[n as usize].iter().cloned());
        let c = solve(self.complex.f, &gens, cycle)
            .ok_or_else(|| Error::Inconsistent(format!("not a cycle of the {} model in degree {n}", self.name)))?;
        Ok(c[..k].to_vec())
    }

    fn pullback_cycle(&self, d: u32, b: &[u32]) -> Vec<u32> {
        let mut out = vec![0; self.complex.dim(d)];
        for (i, cell) in self.complex.cells[d as usize].iter().enumerate() {
            if cell.s == d && cell.m == 0 {
                out[i] = b[cell.b];
            }
        }
        out
    }

    /// p^* on a base vector.
    pub fn pullback(&self, d: u32, b: &[u32]) -> Result<Vec<u32>> {
        self.check(d)?;
        self.express(d, &self.pullback_cycle(d, b))
    }

    /// Some β with p^*β equal to the class, if one exists.
    fn as_pullback(&self, d: u32, v: &[u32]) -> Result<Option<Vec<u32>>> {
        let images: Vec<Vec<u32>> =
            (0..self.base.dim(d)).map(|i| self.pullback(d, &unit(self.base.dim(d), i))).collect::<Result<_>>()?;
        if images.is_empty() {
            return Ok(if is_zero(v) { Some(Vec::new()) } else { None });
        }
        Ok(solve(self.complex.f, &images, v))
    }

    /// Restriction to the fiber, in Λ coordinates.
    pub fn restriction(&self, d: u32, v: &[u32]) -> Vec<u32> {
        let cycle = self.cycle_of(d, v);
        let mut out = vec![0; self.fiber.dim(d)];
        for (i, cell) in self.complex.cells[d as usize].iter().enumerate() {
            if cell.s == 0 {
                out[cell.m] = self.complex.f.add(out[cell.m], cycle[i]);
            }
        }
        out
    }

    /// Classes restricting to `rho`, as a family over the positive-filtration part.
    fn with_restriction(&self, d: u32, rho: &[u32]) -> Result<Param> {
        let f = self.complex.f;
        let reps = &self.reps[d as usize];
        let fiber_reps: Vec<usize> = (0..reps.len()).filter(|&i| reps[i].s == 0).collect();
        let images: Vec<Vec<u32>> =
            fiber_reps.iter().map(|&i| self.restriction(d, &unit(reps.len(), i))).collect();
        let coeffs = if is_zero(rho) {
            Some(vec![0; images.len()])
        } else {
            solve(f, &images, rho)
        };
        let coeffs = coeffs.ok_or_else(|| {
            Error::Inconsistent(format!("{} is not the restriction of a class of {}", self.fiber.render(d, rho), self.name))
        })?;
        let mut constant = vec![0; reps.len()];
        for (&i, &c) in fiber_reps.iter().zip(&coeffs) {
            constant[i] = c;
        }
        let free = (0..reps.len()).filter(|&i| reps[i].s > 0).map(|i| unit(reps.len(), i)).collect();
        Ok(Param { degree: d, constant, free }.normalized(f))
    }
}

impl BaseAlgebra for SssVariant {
    fn prime(&self) -> PrimeField {
        self.complex.f
    }

    fn top(&self) -> u32 {
        self.window
    }

    fn dim(&self, d: u32) -> usize {
        self.reps.get(d as usize).map_or(0, Vec::len)
    }

    fn label(&self, d: u32, i: usize) -> String {
        self.reps[d as usize][i].label.clone()
    }

    fn multiply(&self, da: u32, a: &[u32], db: u32, b: &[u32]) -> Result<Vec<u32>> {
        let f = self.complex.f;
        self.check(da + db)?;
        let (beta, dbeta, other, dother, swap) = if let Some(beta) = self.as_pullback(da, a)? {
            (beta, da, b, db, false)
        } else if let Some(beta) = self.as_pullback(db, b)? {
            (beta, db, a, da, true)
        } else {
            return Err(Error::UnknownAction {
                op: "product".into(),
                class: format!("{} and {} in {}", render_class(self, da, a), render_class(self, db, b), self.name),
            });
        };
        let cycle = self.cycle_of(dother, other);
        let n = dbeta + dother;
        let mut out = vec![0; self.complex.dim(n)];
        let target: HashMap<Cell, usize> =
            self.complex.cells[n as usize].iter().enumerate().map(|(i, c)| (*c, i)).collect();
        for (i, &c) in cycle.iter().enumerate() {
            if c == 0 {
                continue;
            }
            let cell = self.complex.cells[dother as usize][i];
            let prod = self.base.multiply(dbeta, &beta, cell.s, &unit(self.base.dim(cell.s), cell.b))?;
            for (b2, &x) in prod.iter().enumerate() {
                if x != 0 {
                    let j = target[&Cell { s: dbeta + cell.s, b: b2, m: cell.m }];
                    out[j] = f.add(out[j], f.mul(x, c));
                }
            }
        }
        let mut v = self.express(n, &out)?;
        if swap {
            f.scale(&mut v, f.sign((dbeta * dother) as i64));
        }
        Ok(v)
    }

    fn steenrod(&self, word: &[u32], d: u32, v: &[u32]) -> Result<Param> {
        let f = self.complex.f;
        if word.is_empty() {
            return Ok(Param::exact(d, v.to_vec()));
        }
        let target = d + word_degree(f, word);
        self.check(target)?;
        if let Some(beta) = self.as_pullback(d, v)? {
            let img = self.base.steenrod(word, d, &beta)?;
            let constant = self.pullback(target, &img.constant)?;
            let free = img.free.iter().map(|x| self.pullback(target, x)).collect::<Result<_>>()?;
            return Ok(Param { degree: target, constant, free }.normalized(f));
        }
        let rho = self.fiber.steenrod(word, d, &self.restriction(d, v))?;
        self.with_restriction(target, &rho)
    }

    fn class(&self, expr: &str) -> Result<Param> {
        let f = self.complex.f;
        let e = expr.trim();
        if let Some(rest) = e.strip_prefix("fiber:") {
            let (d, rho) = self.fiber.parse(rest.trim())?;
            self.check(d)?;
            return self.with_restriction(d, &rho);
        }
        if let Ok((d, v)) = parse_label_sum(f, e, self.window, |d| self.dim(d), |d| self.labels(d)) {
            return Ok(Param::exact(d, v));
        }
        if let Some(rest) = e.strip_prefix("p*") {
            let b = self.base.class(rest)?;
            self.check(b.degree)?;
            let constant = self.pullback(b.degree, &b.constant)?;
            let free = b.free.iter().map(|x| self.pullback(b.degree, x)).collect::<Result<_>>()?;
            return Ok(Param { degree: b.degree, constant, free }.normalized(f));
        }
        Err(Error::parse(expr, 0, format!("no class of {} matches", self.name)))
    }

    fn name(&self) -> String {
        self.name.clone()
    }
}

fn render_class(b: &dyn BaseAlgebra, d: u32, v: &[u32]) -> String {
    render_sum(v.iter().enumerate().map(|(i, &c)| (c, b.label(d, i))))
}

fn default_true() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiberSpec {
    pub coefficients: String,
    pub degree: u32,
    /// Class of the base hit by the fundamental class (its mod-p reduction for Z fibers).
    pub transgression: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImportedDifferential {
    #[serde(default)]
    pub fiber: usize,
    /// Label of a generator of the fiber factor, e.g. `b2 i7`.
    pub source: String,
    pub target: String,
    pub provenance: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FibrationSpec {
    pub name: String,
    /// `K(A,q)` or the name of an earlier fibration in the same file.
    pub base: String,
    /// Degrees below the window are reported.
    pub window: u32,
    #[serde(default = "default_true")]
    pub transgress_squares: bool,
    #[serde(rename = "fiber")]
    pub fibers: Vec<FiberSpec>,
    #[serde(default, rename = "imported_differential")]
    pub imported: Vec<ImportedDifferential>,
    #[serde(default)]
    pub note: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UnstableSpec {
    pub prime: u32,
    #[serde(rename = "fibration")]
    pub fibrations: Vec<FibrationSpec>,
}

impl UnstableSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: UnstableSpec = toml::from_str(text).map_err(|e| Error::Spec(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn field(&self) -> Result<PrimeField> {
        PrimeField::new(self.prime)
    }

    pub fn validate(&self) -> Result<()> {
        self.field()?;
        let mut seen: Vec<&str> = Vec::new();
        for fib in &self.fibrations {
            if seen.contains(&fib.name.as_str()) {
                return Err(Error::Spec(format!("fibration {} is defined twice", fib.name)));
            }
            if fib.base.parse::<Target>().is_err() && !seen.contains(&fib.base.as_str()) {
                return Err(Error::Spec(format!("{}: base {} is neither K(A,q) nor an earlier fibration", fib.name, fib.base)));
            }
            if fib.window < 2 {
                return Err(Error::Spec(format!("{}: window must be at least 2", fib.name)));
            }
            if fib.fibers.is_empty() {
                return Err(Error::Spec(format!("{}: no fiber factors", fib.name)));
            }
            for fs in &fib.fibers {
                fs.coefficients.parse::<CoefficientGroup>()?;
                if fs.degree < 2 {
                    return Err(Error::Spec(format!("{}: fiber degree must be at least 2", fib.name)));
                }
            }
            for imp in &fib.imported {
                if imp.fiber >= fib.fibers.len() {
                    return Err(Error::Spec(format!("{}: imported differential names fiber {}", fib.name, imp.fiber)));
                }
                if !imp.provenance.trim_start().starts_with("external:") {
                    return Err(Error::Spec(format!(
                        "{}: imported differential on {} needs a provenance starting with \"external:\"",
                        fib.name, imp.source
                    )));
                }
            }
            seen.push(&fib.name);
        }
        Ok(())
    }
}

/// Per-degree outcome across all parameter assignments.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DegreeSummary {
    pub n: u32,
    /// None if assignments disagree.
    pub dim: Option<usize>,
    pub dims_seen: Vec<usize>,
    pub labels: Vec<String>,
    pub labels_vary: bool,
}

pub struct SssRun {
    pub name: String,
    pub window: u32,
    pub variants: Vec<Arc<SssVariant>>,
    pub degrees: Vec<DegreeSummary>,
    /// Number of free parameters per base variant.
    pub unknowns: Vec<usize>,
}

impl SssRun {
    pub fn representative(&self) -> &SssVariant {
        &self.variants[0]
    }

    pub fn degree(&self, n: u32) -> Option<&DegreeSummary> {
        self.degrees.iter().find(|d| d.n == n)
    }

    pub fn is_determined(&self, n: u32) -> bool {
        self.degree(n).is_some_and(|d| d.dim.is_some())
    }

    /// `deg | dim | total` for degrees `from..window`.
    pub fn table(&self, id: &str, from: u32) -> Table {
        let mut t = Table::new(id, &["deg", "dim", "total"]);
        for d in self.degrees.iter().filter(|d| d.n >= from) {
            let dim = d.dim.map_or("?".to_string(), |x| x.to_string());
            t.push(vec![d.n.to_string(), dim, d.labels.join(", ")]);
        }
        t
    }

    /// Differential log of the representative assignment, one row per independent d_r.
    pub fn log_table(&self, id: &str) -> Table {
        let mut t = Table::new(id, &["r", "source", "target", "from", "to", "rule"]);
        for e in &self.representative().log.entries {
            t.push(vec![
                e.r.to_string(),
                format!("({},{})", e.source.0, e.source.1),
                format!("({},{})", e.target.0, e.target.1),
                e.source_label.clone(),
                e.target_label.clone(),
                e.rule.to_string(),
            ]);
        }
        t
    }
}

/// Runs every fibration of a spec in order.
pub fn run_unstable(spec: &UnstableSpec) -> Result<Vec<SssRun>> {
    run_unstable_with(spec, Schedule::Auto)
}

pub fn run_unstable_with(spec: &UnstableSpec, schedule: Schedule) -> Result<Vec<SssRun>> {
    spec.validate()?;
    let f = spec.field()?;
    let mut runs: Vec<SssRun> = Vec::new();
    for fib in &spec.fibrations {
        let bases: Vec<Arc<dyn BaseAlgebra>> = match fib.base.parse::<Target>() {
            Ok(Target::Space { coeff, q }) => vec![Arc::new(EmBase::new(coeff, q, f, fib.window + 1)?)],
            Ok(_) => return Err(Error::Spec(format!("{}: the base must be a space", fib.name))),
            Err(_) => {
                let prev = runs.iter().find(|r| r.name == fib.base).expect("validated");
                prev.variants.iter().map(|v| v.clone() as Arc<dyn BaseAlgebra>).collect()
            }
        };
        runs.push(run_fibration(fib, f, &bases, schedule)?);
    }
    Ok(runs)
}

/// Runs one fibration over every base variant and every assignment of the free parameters.
pub fn run_fibration(
    spec: &FibrationSpec,
    f: PrimeField,
    bases: &[Arc<dyn BaseAlgebra>],
    schedule: Schedule,
) -> Result<SssRun> {
    let window = spec.window;
    let factors: Vec<(CoefficientGroup, u32)> =
        spec.fibers.iter().map(|fs| Ok((fs.coefficients.parse()?, fs.degree))).collect::<Result<_>>()?;
    let fiber = Arc::new(Fiber::new(f, &factors, window + 1)?);
    let mut variants = Vec::new();
    let mut unknowns = Vec::new();
    for base in bases {
        if base.top() < window + 1 {
            return Err(Error::Window { requested: window + 1, available: base.top() });
        }
        let params = transgression_params(spec, base.as_ref(), &fiber, window)?;
        let n: usize = params.iter().flatten().map(|p| p.free.len()).sum();
        let total = (f.p() as u64).checked_pow(n as u32).filter(|&t| t <= MAX_ASSIGNMENTS).ok_or_else(|| {
            Error::Undetermined(format!("{}: {n} free parameters exceed the enumeration limit", spec.name))
        })?;
        unknowns.push(n);
        let built = schedule.map_range(0..total, |a| {
            let mut digits = Vec::with_capacity(n);
            let mut x = a;
            for _ in 0..n {
                digits.push((x % f.p() as u64) as u32);
                x /= f.p() as u64;
            }
            let mut at = 0;
            let tau: Vec<Option<Vec<u32>>> = params
                .iter()
                .map(|p| {
                    p.as_ref().map(|p| {
                        let v = p.evaluate(f, &digits[at..at + p.free.len()]);
                        at += p.free.len();
                        v
                    })
                })
                .collect();
            SssVariant::build(&spec.name, window, base.clone(), fiber.clone(), tau)
        });
        for v in built {
            variants.push(Arc::new(v?));
        }
    }
    let degrees = (0..window)
        .map(|n| {
            let mut dims: Vec<usize> = variants.iter().map(|v| v.total_dim(n)).collect();
            dims.sort_unstable();
            dims.dedup();
            let labels = variants[0].total_labels(n);
            let labels_vary = variants.iter().any(|v| v.total_labels(n) != labels);
            DegreeSummary { n, dim: (dims.len() == 1).then(|| dims[0]), dims_seen: dims, labels, labels_vary }
        })
        .collect();
    Ok(SssRun { name: spec.name.clone(), window, variants, degrees, unknowns })
}

/// Transgression family of every simple-system variable below the window.
fn transgression_params(
    spec: &FibrationSpec,
    base: &dyn BaseAlgebra,
    fiber: &Fiber,
    window: u32,
) -> Result<Vec<Option<Param>>> {
    let f = base.prime();
    let mut thetas = Vec::new();
    for (i, fs) in spec.fibers.iter().enumerate() {
        let theta = base.class(&fs.transgression)?;
        if theta.degree != fs.degree + 1 {
            return Err(Error::Spec(format!(
                "{}: transgression of fiber {i} has degree {}, expected {}",
                spec.name,
                theta.degree,
                fs.degree + 1
            )));
        }
        thetas.push(theta);
    }
    let mut imported: HashMap<(usize, usize), Param> = HashMap::new();
    for imp in &spec.imported {
        let space = fiber.factor(imp.fiber);
        let g = space
            .generators()
            .iter()
            .find(|g| g.label == imp.source)
            .ok_or_else(|| Error::Spec(format!("{}: no fiber generator {}", spec.name, imp.source)))?;
        if !matches!(g.op.tail(), Tail::Bockstein(_)) || !g.op.word().is_empty() {
            return Err(Error::Spec(format!(
                "{}: {} is already determined by the transgression of the fundamental class",
                spec.name, imp.source
            )));
        }
        let target = base.class(&imp.target)?;
        if target.degree != g.degree + 1 {
            return Err(Error::DegreeMismatch { expected: g.degree as i64 + 1, found: target.degree as i64 });
        }
        // the source is a reduction of an integral lift, so its Bockstein vanishes
        if target.degree < base.top() && !steenrod_param(base, &bockstein_word(f), &target)?.admits_zero(f) {
            return Err(Error::Inconsistent(format!(
                "{}: imported differential on {} contradicts d∘d = 0 (its target has nonzero Bockstein)",
                spec.name, imp.source
            )));
        }
        imported.insert((imp.fiber, g.index), target);
    }
    let mut out = Vec::with_capacity(fiber.vars.len());
    for var in &fiber.vars {
        if var.degree >= window + 1 {
            out.push(None);
            continue;
        }
        let space = fiber.factor(var.factor);
        let g = &space.generators()[var.gen];
        let first = match g.op.tail() {
            Tail::Bockstein(_) => {
                let key = (var.factor, imported_root(space, var.gen));
                let root = imported.get(&key).ok_or_else(|| {
                    Error::Undetermined(format!(
                        "{}: the transgression of {} needs an imported differential",
                        spec.name,
                        space.generators()[key.1].label
                    ))
                })?;
                steenrod_param(base, g.op.word(), root)?
            }
            _ => steenrod_param(base, g.op.word(), &thetas[var.factor])?,
        };
        let p = if var.power == 1 {
            first
        } else if spec.transgress_squares {
            // τ(x^{2^k}) = Sq^{2^{k-1}|x|} ... Sq^{|x|} τ(x)
            let mut word = Vec::new();
            let mut k = var.power / 2;
            while k >= 1 {
                word.push(k * g.degree);
                k /= 2;
            }
            steenrod_param(base, &word, &first)?
        } else {
            let d = var.degree + 1;
            let n = base.dim(d);
            Param { degree: d, constant: vec![0; n], free: (0..n).map(|i| unit(n, i)).collect() }
        };
        out.push(Some(p));
    }
    Ok(out)
}

/// Index of the `b_m ι` generator underlying a Bockstein-tailed generator.
fn imported_root(space: &EmSpace, gen: usize) -> usize {
    let tail = space.generators()[gen].op.tail();
    space
        .generators()
        .iter()
        .find(|g| g.op.word().is_empty() && g.op.tail() == tail)
        .map_or(gen, |g| g.index)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(text: &str) -> UnstableSpec {
        UnstableSpec::from_toml(text).unwrap()
    }

    const PATH_P2: &str = r#"
prime = 2
[[fibration]]
name = "E"
base = "K(Z2,2)"
window = 9
[[fibration.fiber]]
coefficients = "Z2"
degree = 1
transgression = "i2"
"#;

    #[test]
    fn contractible_total_space() {
        // K(Z2,2) -> * -> K(Z2,3)
        let text = PATH_P2.replace("K(Z2,2)", "K(Z2,3)").replace("degree = 1", "degree = 2").replace("\"i2\"", "\"i3\"");
        let runs = run_unstable(&spec(&text)).unwrap();
        let run = &runs[0];
        for n in 1..9 {
            assert_eq!(run.degree(n).unwrap().dim, Some(0), "degree {n}");
        }
        let v = run.representative();
        assert_eq!(v.square_defect(), 0);
        assert_eq!(v.log.replay(&v.e2).unwrap(), v.e_inf);
    }

    #[test]
    fn squares_without_kudo_are_undetermined() {
        let text = PATH_P2
            .replace("K(Z2,2)", "K(Z2,3)")
            .replace("degree = 1", "degree = 2")
            .replace("\"i2\"", "\"i3\"")
            .replace("window = 9", "window = 9\ntransgress_squares = false");
        let runs = run_unstable(&spec(&text)).unwrap();
        assert!((1..9).any(|n| !runs[0].is_determined(n)));
        assert!(runs[0].unknowns[0] > 0);
    }

    #[test]
    fn odd_prime_path_fibration() {
        // K(Z3,2) -> * -> K(Z3,3), below the first transpotence degree
        let text = r#"
prime = 3
[[fibration]]
name = "E"
base = "K(Z3,3)"
window = 4
[[fibration.fiber]]
coefficients = "Z3"
degree = 2
transgression = "i3"
"#;
        let runs = run_unstable(&spec(text)).unwrap();
        let v = runs[0].representative();
        assert_eq!(v.square_defect(), 0);
        for n in 1..4 {
            assert_eq!(runs[0].degree(n).unwrap().dim, Some(0), "degree {n}");
        }
    }

    #[test]
    fn transpotence_range_is_refused() {
        let text = r#"
prime = 3
[[fibration]]
name = "E"
base = "K(Z3,3)"
window = 8
[[fibration.fiber]]
coefficients = "Z3"
degree = 2
transgression = "i3"
"#;
        assert!(matches!(run_unstable(&spec(text)), Err(Error::Window { .. })));
    }

    #[test]
    fn page_invariants_hold() {
        let text = PATH_P2.replace("K(Z2,2)", "K(Z,4)").replace("degree = 1", "degree = 5").replace("\"i2\"", "\"Sq2 r2 i4\"");
        let runs = run_unstable(&spec(&text)).unwrap();
        let v = runs[0].representative();
        v.check_square_zero().unwrap();
        v.check_accounting().unwrap();
        v.check_replay().unwrap();
        assert_eq!(v.e2_page().dims(), v.e2);
        assert_eq!(v.e_inf_page().dims(), v.e_inf);
    }

    #[test]
    fn first_differential_is_the_transgression() {
        let text = PATH_P2.replace("K(Z2,2)", "K(Z,4)").replace("degree = 1", "degree = 5").replace("\"i2\"", "\"Sq2 r2 i4\"");
        let runs = run_unstable(&spec(&text)).unwrap();
        let first = &runs[0].representative().log.entries[0];
        assert_eq!((first.r, first.source, first.target), (6, (0, 5), (6, 0)));
        assert_eq!(first.source_label, "[i5]");
        assert_eq!(first.target_label, "p*Sq2 r2 i4");
        assert_eq!(first.rule, Rule::Transgression);
    }

    #[test]
    fn chart_has_one_row_per_fiber_degree() {
        let page = BigradedPage {
            r: Some(2),
            window: 3,
            entries: BTreeMap::from([((0, 0), vec!["1".into()]), ((2, 0), vec!["a".into(), "b".into()]), ((0, 1), vec!["x".into()])]),
        };
        let chart = page.chart();
        assert!(chart.starts_with("  1 | o "));
        assert!(chart.contains("  0 | o  .  oo"));
    }

    #[test]
    fn provenance_is_required() {
        let text = format!(
            "{PATH_P2}\n[[fibration.imported_differential]]\nsource = \"i1\"\ntarget = \"i2\"\nprovenance = \"folklore\"\n"
        );
        assert!(matches!(UnstableSpec::from_toml(&text), Err(Error::Spec(_))));
    }
}
