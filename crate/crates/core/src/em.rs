//! Mod-p cohomology of Eilenberg–MacLane spectra and spaces in a degree window.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::algebra::{monomials_in_degree, RingElement, RingMonomial};
use crate::error::{Error, Result};
use crate::fp::PrimeField;
use crate::steenrod::{adem_normalize, enumerate_admissible, Monomial, SteenrodElement, Tail, TailRule, BETA};
use crate::table::Table;

pub const DEFAULT_MAX_DEGREE: u32 = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CoefficientGroup {
    Integers,
    /// Z/n, n > 1.
    Cyclic(u64),
}

impl CoefficientGroup {
    pub fn cyclic(n: u64) -> Result<Self> {
        if n < 2 {
            return Err(Error::Spec(format!("Z/{n} is not a valid coefficient group")));
        }
        Ok(CoefficientGroup::Cyclic(n))
    }

    /// Exponent of p in the order, None for Z.
    pub fn p_valuation(self, p: u32) -> Option<u32> {
        match self {
            CoefficientGroup::Integers => None,
            CoefficientGroup::Cyclic(mut n) => {
                let mut m = 0;
                while n % p as u64 == 0 {
                    n /= p as u64;
                    m += 1;
                }
                Some(m)
            }
        }
    }

    pub fn order(self) -> Option<u64> {
        match self {
            CoefficientGroup::Integers => None,
            CoefficientGroup::Cyclic(n) => Some(n),
        }
    }

    /// Tail rule and the tag carried by the fundamental class; None if the mod-p cohomology
    /// is that of a point.
    pub fn root(self, p: PrimeField) -> Option<(TailRule, Tail)> {
        match self.p_valuation(p.p()) {
            None => Some((TailRule::NotOne, Tail::Reduction)),
            Some(0) => None,
            Some(1) => Some((TailRule::Any, Tail::None)),
            Some(m) => Some((TailRule::Bockstein(m), Tail::None)),
        }
    }
}

impl fmt::Display for CoefficientGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoefficientGroup::Integers => write!(f, "Z"),
            CoefficientGroup::Cyclic(n) => write!(f, "Z{n}"),
        }
    }
}

impl FromStr for CoefficientGroup {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        if t == "Z" {
            return Ok(CoefficientGroup::Integers);
        }
        let digits = t.strip_prefix("Z/").or_else(|| t.strip_prefix('Z')).unwrap_or("");
        let n: u64 = digits.parse().map_err(|_| Error::parse(s, 0, "expected Z, Zn or Z/n"))?;
        CoefficientGroup::cyclic(n)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Target {
    /// Σ^n HA
    Spectrum { coeff: CoefficientGroup, shift: u32 },
    /// K(A, q)
    Space { coeff: CoefficientGroup, q: u32 },
}

impl Target {
    pub fn coeff(self) -> CoefficientGroup {
        match self {
            Target::Spectrum { coeff, .. } | Target::Space { coeff, .. } => coeff,
        }
    }

    pub fn bottom(self) -> u32 {
        match self {
            Target::Spectrum { shift, .. } => shift,
            Target::Space { q, .. } => q,
        }
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Target::Spectrum { coeff, shift: 0 } => write!(f, "H{coeff}"),
            Target::Spectrum { coeff, shift } => write!(f, "S{shift}H{coeff}"),
            Target::Space { coeff, q } => write!(f, "K({coeff},{q})"),
        }
    }
}

impl FromStr for Target {
    type Err = Error;
    /// Accepts `K(Z,4)`, `K(Z/2,5)`, `HZ`, `HZ2`, `S4HZ`.
    fn from_str(s: &str) -> Result<Self> {
        let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if let Some(inner) = t.strip_prefix("K(").and_then(|r| r.strip_suffix(')')) {
            let (a, q) = inner.rsplit_once(',').ok_or_else(|| Error::parse(s, 0, "expected K(A,q)"))?;
            let q: u32 = q.parse().map_err(|_| Error::parse(s, 0, "bad degree"))?;
            if q < 2 {
                return Err(Error::Spec(format!("{s}: spaces need q >= 2")));
            }
            return Ok(Target::Space { coeff: a.parse()?, q });
        }
        let (shift, rest) = match t.strip_prefix('S') {
            Some(r) => {
                let n: String = r.chars().take_while(|c| c.is_ascii_digit()).collect();
                let shift = n.parse().map_err(|_| Error::parse(s, 0, "bad shift"))?;
                (shift, &r[n.len()..])
            }
            None => (0, t.as_str()),
        };
        let a = rest.strip_prefix('H').ok_or_else(|| Error::parse(s, 0, "expected K(A,q) or [S<n>]H<A>"))?;
        Ok(Target::Spectrum { coeff: a.parse()?, shift })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratorRecord {
    pub index: usize,
    pub op: Monomial,
    pub degree: u32,
    pub label: String,
}

impl GeneratorRecord {
    pub fn is_odd(&self) -> bool {
        self.degree % 2 == 1
    }
}

/// Label of a stable basis element: `i` for the fundamental class, else the operation text.
pub fn stable_label(m: &Monomial) -> String {
    if m.word().is_empty() && !matches!(m.tail(), Tail::Bockstein(_)) {
        "i".into()
    } else {
        m.to_string()
    }
}

/// Module basis of H^{n+d}(Σ^n HA; F_p) for d in 0..=max_offset.
pub fn stable_basis(coeff: CoefficientGroup, p: PrimeField, offset: u32) -> Vec<Monomial> {
    match coeff.root(p) {
        None => Vec::new(),
        Some((rule, _)) => enumerate_admissible(p, offset, None, rule),
    }
}

/// Unstable excess bound: e(I) < q at p = 2, e(I) < (p-1)q at odd p.
pub fn excess_bound(p: PrimeField, q: u32) -> i64 {
    (p.p() as i64 - 1) * q as i64
}

pub fn unstable_ring_generators(coeff: CoefficientGroup, q: u32, p: PrimeField, d_max: u32) -> Vec<GeneratorRecord> {
    let Some((rule, _)) = coeff.root(p) else {
        return Vec::new();
    };
    let bound = excess_bound(p, q);
    let mut out = Vec::new();
    for d in q..=d_max {
        for op in enumerate_admissible(p, d - q, Some(bound), rule) {
            let label = unstable_label(&op, q);
            out.push(GeneratorRecord { index: out.len(), op, degree: d, label });
        }
    }
    out
}

fn unstable_label(op: &Monomial, q: u32) -> String {
    if op.word().is_empty() && op.tail() == Tail::None {
        format!("i{q}")
    } else {
        format!("{op} i{q}")
    }
}

/// H^*(K(A,q); F_p) as a free graded-commutative algebra, truncated at `d_max`.
#[derive(Debug)]
pub struct EmSpace {
    prime: PrimeField,
    coeff: CoefficientGroup,
    q: u32,
    d_max: u32,
    generators: Vec<GeneratorRecord>,
    by_op: HashMap<Monomial, usize>,
    cache: Mutex<HashMap<(u32, usize), Arc<RingElement>>>,
}

impl EmSpace {
    pub fn new(coeff: CoefficientGroup, q: u32, p: PrimeField, d_max: u32) -> Result<Self> {
        if q < 2 {
            return Err(Error::Spec("Eilenberg-MacLane spaces need q >= 2".into()));
        }
        let generators = unstable_ring_generators(coeff, q, p, d_max);
        let by_op = generators.iter().map(|g| (g.op.clone(), g.index)).collect();
        Ok(EmSpace {
            prime: p,
            coeff,
            q,
            d_max,
            generators,
            by_op,
            cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn prime(&self) -> PrimeField {
        self.prime
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    pub fn coeff(&self) -> CoefficientGroup {
        self.coeff
    }

    pub fn d_max(&self) -> u32 {
        self.d_max
    }

    pub fn generators(&self) -> &[GeneratorRecord] {
        &self.generators
    }

    pub fn generator_degree(&self, i: usize) -> u32 {
        self.generators[i].degree
    }

    pub fn generator_index(&self, op: &Monomial) -> Option<usize> {
        self.by_op.get(op).copied()
    }

    pub fn fundamental(&self) -> Option<usize> {
        self.generators.first().filter(|g| g.degree == self.q).map(|g| g.index)
    }

    pub fn degrees(&self) -> Vec<u32> {
        self.generators.iter().map(|g| g.degree).collect()
    }

    pub fn basis(&self, d: u32) -> Vec<RingMonomial> {
        if d > self.d_max {
            return Vec::new();
        }
        monomials_in_degree(self.prime, &self.degrees(), d)
    }

    pub fn label(&self, m: &RingMonomial) -> String {
        m.render(|i| self.generators[i].label.clone())
    }

    pub fn monomial_degree(&self, m: &RingMonomial) -> u32 {
        m.degree(|i| self.generators[i].degree)
    }

    pub fn multiply(&self, a: &RingElement, b: &RingElement) -> RingElement {
        let degs: Vec<u32> = self.degrees();
        a.multiply(self.prime, b, |i| degs[i])
    }

    fn check_window(&self, d: u32) -> Result<()> {
        if d > self.d_max {
            Err(Error::Window { requested: d, available: self.d_max })
        } else {
            Ok(())
        }
    }

    /// Value of an admissible composite applied to the fundamental class.
    fn eval_admissible(&self, m: &Monomial) -> Result<RingElement> {
        self.check_window(self.q + m.degree())?;
        if let Some(i) = self.generator_index(m) {
            return Ok(RingElement::from_monomial(RingMonomial::generator(i), 1));
        }
        let w = m.word();
        if w.is_empty() {
            return Err(Error::IllFormed(format!("{m} is not a class of {}", self.describe())));
        }
        // excess too large: peel off the leading entry and use the unstable rules
        let take = if !self.prime.is_two() && w[0] == BETA && w.len() > 1 { 2 } else { 1 };
        let rest = Monomial::from_word(self.prime, w[take..].to_vec(), m.tail())?;
        let mut v = self.eval_admissible(&rest)?;
        for &t in w[..take].iter().rev() {
            v = self.apply_token(t, &v)?;
        }
        Ok(v)
    }

    fn describe(&self) -> String {
        Target::Space { coeff: self.coeff, q: self.q }.to_string()
    }

    /// One Sq^t, P^t or β applied to a generator.
    fn token_on_generator(&self, t: u32, g: usize) -> Result<Arc<RingElement>> {
        if let Some(hit) = self.cache.lock().expect("em cache poisoned").get(&(t, g)) {
            return Ok(hit.clone());
        }
        let f = self.prime;
        let gen = &self.generators[g];
        let x = gen.degree;
        let result = if f.is_two() || t != BETA {
            let op_deg = if f.is_two() { t } else { 2 * t };
            if op_deg > x {
                RingElement::zero()
            } else if op_deg == x {
                RingElement::from_monomial(RingMonomial::power(g, f.p()), 1)
            } else {
                self.compose(t, gen)?
            }
        } else {
            self.compose(t, gen)?
        };
        let result = Arc::new(result);
        self.cache.lock().expect("em cache poisoned").insert((t, g), result.clone());
        Ok(result)
    }

    fn compose(&self, t: u32, gen: &GeneratorRecord) -> Result<RingElement> {
        let mut w = vec![t];
        w.extend_from_slice(gen.op.word());
        let comp = Monomial::from_word(self.prime, w, gen.op.tail())?;
        let mut out = RingElement::zero();
        for (j, c) in adem_normalize(&comp).terms() {
            out.add_scaled(self.prime, &self.eval_admissible(j)?, c);
        }
        Ok(out)
    }

    fn token_on_monomial(&self, t: u32, m: &RingMonomial) -> Result<RingElement> {
        let f = self.prime;
        let Some((g, rest)) = m.split_first() else {
            return Ok(RingElement::zero());
        };
        let gm = RingElement::from_monomial(RingMonomial::generator(g), 1);
        let rm = RingElement::from_monomial(rest.clone(), 1);
        if rest.is_one() {
            return Ok((*self.token_on_generator(t, g)?).clone());
        }
        let mut out = RingElement::zero();
        if !f.is_two() && t == BETA {
            // β(xy) = βx·y + (-1)^{|x|} x·βy
            let bx = self.token_on_generator(BETA, g)?;
            out.add_scaled(f, &self.multiply(&bx, &rm), 1);
            let by = self.token_on_monomial(BETA, &rest)?;
            out.add_scaled(f, &self.multiply(&gm, &by), f.sign(self.generators[g].degree as i64));
            return Ok(out);
        }
        // Cartan formula
        for i in 0..=t {
            let a = if i == 0 { gm.clone() } else { (*self.token_on_generator(i, g)?).clone() };
            if a.is_zero() {
                continue;
            }
            let b = if i == t { rm.clone() } else { self.token_on_monomial(t - i, &rest)? };
            out.add_scaled(f, &self.multiply(&a, &b), 1);
        }
        Ok(out)
    }

    fn apply_token(&self, t: u32, v: &RingElement) -> Result<RingElement> {
        let mut out = RingElement::zero();
        for (m, c) in &v.terms {
            let tok_deg = if self.prime.is_two() { t } else if t == BETA { 1 } else { 2 * (self.prime.p() - 1) * t };
            self.check_window(self.monomial_degree(m) + tok_deg)?;
            out.add_scaled(self.prime, &self.token_on_monomial(t, m)?, *c);
        }
        Ok(out)
    }

    /// Action of a Steenrod element on a ring element.
    pub fn act(&self, op: &SteenrodElement, v: &RingElement) -> Result<RingElement> {
        if op.prime() != self.prime {
            return Err(Error::MixedPrimes(op.prime().p(), self.prime.p()));
        }
        let mut out = RingElement::zero();
        for (m, c) in op.terms() {
            if m.tail() != Tail::None {
                return Err(Error::IllFormed(format!("{m} carries a source tag")));
            }
            let mut x = v.clone();
            for &t in m.word().iter().rev() {
                x = self.apply_token(t, &x)?;
            }
            out.add_scaled(self.prime, &x, c);
        }
        Ok(out)
    }

    pub fn steenrod_act(&self, op: &SteenrodElement, class: &RingMonomial) -> Result<RingElement> {
        self.act(op, &RingElement::from_monomial(class.clone(), 1))
    }

    /// Class named by an operation on the fundamental class, e.g. `Sq2 r2` on K(Z,4).
    pub fn class_of(&self, op: &Monomial) -> Result<RingElement> {
        let normal = adem_normalize(op);
        let mut out = RingElement::zero();
        for (j, c) in normal.terms() {
            out.add_scaled(self.prime, &self.eval_admissible(j)?, c);
        }
        Ok(out)
    }

    pub fn render(&self, v: &RingElement) -> String {
        render_element(self.prime, v, |m| self.label(m))
    }

    /// The appendix-style table for offsets 0..=max_offset (rows indexed by |I|).
    pub fn table(&self, id: &str, max_offset: u32) -> Table {
        let mut t = Table::new(id, &["deg", "sequences", "generators"]);
        for k in 0..=max_offset {
            let d = self.q + k;
            let gens: Vec<&GeneratorRecord> = self.generators.iter().filter(|g| g.degree == d).collect();
            let seqs = sequences_cell(gens.iter().map(|g| &g.op));
            let labels: Vec<String> = self.basis(d).iter().map(|m| self.label(m)).collect();
            t.push(vec![k.to_string(), seqs, labels.join(", ")]);
        }
        t
    }
}

pub fn render_element(f: PrimeField, v: &RingElement, label: impl Fn(&RingMonomial) -> String) -> String {
    if v.is_zero() {
        return "0".into();
    }
    let mut terms: Vec<(&RingMonomial, u32)> = v.terms.iter().map(|(m, c)| (m, *c)).collect();
    terms.sort_by_key(|(m, _)| m.display_key());
    let _ = f.p();
    terms
        .iter()
        .map(|(m, c)| if *c == 1 { label(m) } else { format!("{c} {}", label(m)) })
        .collect::<Vec<_>>()
        .join(" + ")
}

fn sequence_text(s: &[u32]) -> String {
    if s.is_empty() {
        "(0)".into()
    } else {
        format!("({})", s.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(","))
    }
}

/// Sequences sorted lexicographically, `-` for none.
fn sequences_cell<'a>(ops: impl Iterator<Item = &'a Monomial>) -> String {
    let mut seqs: Vec<Vec<u32>> = ops.map(|m| m.sequence()).collect();
    if seqs.is_empty() {
        return "-".into();
    }
    seqs.sort();
    seqs.iter().map(|s| sequence_text(s)).collect::<Vec<_>>().join(", ")
}

/// Stable appendix table: rows |I| = 0..=max_offset.
pub fn stable_table(id: &str, coeff: CoefficientGroup, p: PrimeField, max_offset: u32) -> Table {
    let mut t = Table::new(id, &["deg", "sequences", "generators"]);
    for k in 0..=max_offset {
        let basis = stable_basis(coeff, p, k);
        let labels: Vec<String> = basis.iter().map(stable_label).collect();
        t.push(vec![k.to_string(), sequences_cell(basis.iter()), labels.join(", ")]);
    }
    t
}

/// Human-readable listing, one line per row: `5: (none)` for empty rows.
pub fn plain_listing(t: &Table) -> String {
    let mut out = String::new();
    for r in &t.rows {
        let gens = if r[2].is_empty() { "(none)".to_string() } else { r[2].clone() };
        out.push_str(&format!("{}: {}\n", r[0], gens));
    }
    out
}

/// Identifiers of the appendix tables with their (target, prime, last printed |I|).
pub fn appendix_tables() -> Vec<(&'static str, Target, u32, u32)> {
    use CoefficientGroup::*;
    vec![
        ("hz-p2", Target::Spectrum { coeff: Integers, shift: 0 }, 2, 10),
        ("hz2-p2", Target::Spectrum { coeff: Cyclic(2), shift: 0 }, 2, 7),
        ("kz4-p2", Target::Space { coeff: Integers, q: 4 }, 2, 10),
        ("kz2-5-p2", Target::Space { coeff: Cyclic(2), q: 5 }, 2, 7),
        ("kz2-6-p2", Target::Space { coeff: Cyclic(2), q: 6 }, 2, 7),
        ("hz-p3", Target::Spectrum { coeff: Integers, shift: 0 }, 3, 10),
        ("hz3-p3", Target::Spectrum { coeff: Cyclic(3), shift: 0 }, 3, 7),
        ("kz4-p3", Target::Space { coeff: Integers, q: 4 }, 3, 10),
        ("kz3-7-p3", Target::Space { coeff: Cyclic(3), q: 7 }, 3, 7),
    ]
}

/// Builds the table for a target with rows |I| = 0..=max_offset.
pub fn em_table(id: &str, target: Target, p: PrimeField, max_offset: u32) -> Result<Table> {
    match target {
        Target::Spectrum { coeff, .. } => Ok(stable_table(id, coeff, p, max_offset)),
        Target::Space { coeff, q } => Ok(EmSpace::new(coeff, q, p, q + max_offset)?.table(id, max_offset)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::steenrod::parse_element;

    fn two() -> PrimeField {
        PrimeField::new(2).unwrap()
    }
    fn three() -> PrimeField {
        PrimeField::new(3).unwrap()
    }

    #[test]
    fn parse_targets() {
        assert_eq!("K(Z,4)".parse::<Target>().unwrap(), Target::Space { coeff: CoefficientGroup::Integers, q: 4 });
        assert_eq!("K(Z/2, 5)".parse::<Target>().unwrap(), Target::Space { coeff: CoefficientGroup::Cyclic(2), q: 5 });
        assert_eq!("S4HZ".parse::<Target>().unwrap(), Target::Spectrum { coeff: CoefficientGroup::Integers, shift: 4 });
        assert_eq!("HZ8".parse::<Target>().unwrap(), Target::Spectrum { coeff: CoefficientGroup::Cyclic(8), shift: 0 });
        assert!("K(Z,1)".parse::<Target>().is_err());
        assert!("K(Z1,4)".parse::<Target>().is_err());
    }

    #[test]
    fn stable_examples() {
        let l = |c, p, d| stable_basis(c, p, d).iter().map(stable_label).collect::<Vec<_>>();
        assert_eq!(l(CoefficientGroup::Integers, two(), 2), ["Sq2 r2"]);
        assert!(l(CoefficientGroup::Integers, two(), 1).is_empty());
        assert_eq!(l(CoefficientGroup::Integers, three(), 8), ["P2 r3"]);
        assert_eq!(l(CoefficientGroup::Cyclic(8), two(), 1), ["b3"]);
        assert!(l(CoefficientGroup::Cyclic(3), two(), 0).is_empty());
    }

    #[test]
    fn generator_examples() {
        let g = |c, q, p: PrimeField, k: u32| {
            unstable_ring_generators(c, q, p, q + k)
                .into_iter()
                .filter(|r| r.degree == q + k)
                .map(|r| r.label)
                .collect::<Vec<_>>()
        };
        assert_eq!(g(CoefficientGroup::Integers, 4, two(), 6), ["Sq4 Sq2 r2 i4"]);
        assert_eq!(g(CoefficientGroup::Cyclic(2), 5, two(), 3), ["Sq2 Sq1 i5", "Sq3 i5"]);
        assert_eq!(g(CoefficientGroup::Cyclic(3), 7, three(), 5), ["P1 b1 i7", "b1 P1 i7"]);
        assert_eq!(g(CoefficientGroup::Cyclic(4), 7, two(), 1), ["b2 i7"]);
    }

    #[test]
    fn ring_basis_examples() {
        let k = EmSpace::new(CoefficientGroup::Integers, 4, two(), 16).unwrap();
        let b: Vec<String> = k.basis(12).iter().map(|m| k.label(m)).collect();
        assert_eq!(b, ["(r2 i4)^3", "(Sq2 r2 i4)^2"]);
        assert_eq!(k.basis(0), vec![RingMonomial::one()]);
        let k3 = EmSpace::new(CoefficientGroup::Integers, 4, three(), 16).unwrap();
        let b3: Vec<String> = k3.basis(8).iter().map(|m| k3.label(m)).collect();
        assert_eq!(b3, ["P1 r3 i4", "(r3 i4)^2"]);
    }

    #[test]
    fn top_rule_and_powers() {
        let k = EmSpace::new(CoefficientGroup::Integers, 4, two(), 16).unwrap();
        let i4 = RingMonomial::generator(0);
        let sq4 = parse_element("Sq4", None).unwrap();
        assert_eq!(k.render(&k.steenrod_act(&sq4, &i4).unwrap()), "(r2 i4)^2");
        let k5 = EmSpace::new(CoefficientGroup::Cyclic(2), 5, two(), 16).unwrap();
        let sq5 = parse_element("Sq5", None).unwrap();
        assert_eq!(k5.render(&k5.steenrod_act(&sq5, &RingMonomial::generator(0)).unwrap()), "(i5)^2");
        let k3 = EmSpace::new(CoefficientGroup::Integers, 4, three(), 16).unwrap();
        let p2 = parse_element("P2", Some(three())).unwrap();
        assert_eq!(k3.render(&k3.steenrod_act(&p2, &RingMonomial::generator(0)).unwrap()), "(r3 i4)^3");
    }

    #[test]
    fn relations_through_fundamental_class() {
        let k = EmSpace::new(CoefficientGroup::Integers, 4, two(), 16).unwrap();
        let op = crate::steenrod::parse_monomial("Sq4 Sq3 r2", None).unwrap();
        assert_eq!(k.render(&k.class_of(&op).unwrap()), "Sq5 Sq2 r2 i4");
        let z = crate::steenrod::parse_monomial("Sq3 Sq3 r2", None).unwrap();
        assert!(k.class_of(&z).unwrap().is_zero());
    }

    #[test]
    fn cartan_on_square() {
        // Sq1 (i5^2) = 0, Sq2 (i5^2) = (Sq1 i5)^2
        let k5 = EmSpace::new(CoefficientGroup::Cyclic(2), 5, two(), 16).unwrap();
        let sq = RingMonomial::power(0, 2);
        let a = |s: &str| k5.render(&k5.steenrod_act(&parse_element(s, None).unwrap(), &sq).unwrap());
        assert_eq!(a("Sq1"), "0");
        assert_eq!(a("Sq2"), "(Sq1 i5)^2");
    }
}
