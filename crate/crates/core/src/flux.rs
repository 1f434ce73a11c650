//! Integer cohomology rings with monomial truncations, and the cube-pairing checks on degree-4 classes.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::par::Schedule;

/// Reported verbatim by every check: the congruences are consequences of a lift, not a criterion for one.
pub const SCOPE: &str = "necessary-condition check";

/// Exponent vector over the ring generators.
pub type Exponents = Vec<u32>;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSpec {
    pub name: String,
    pub degree: u32,
}

/// Text form of a ring presentation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RingSpec {
    #[serde(default)]
    pub name: String,
    #[serde(rename = "generator")]
    pub generators: Vec<GeneratorSpec>,
    /// Monomials declared zero, e.g. "u^2".
    #[serde(default)]
    pub relations: Vec<String>,
    pub fundamental_degree: u32,
    /// Monomial whose coefficient is the pairing with the fundamental class.
    pub pairing: String,
    /// Defaults to the fundamental degree.
    pub window: Option<u32>,
}

/// Z[generators] modulo monomial relations, truncated above `window`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiniteGradedRing {
    pub name: String,
    pub generators: Vec<GeneratorSpec>,
    pub relations: Vec<Exponents>,
    pub window: u32,
    pub fundamental_degree: u32,
    pub pairing: Exponents,
}

/// Homogeneous or not; zero coefficients are never stored.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Element {
    pub terms: BTreeMap<Exponents, BigInt>,
}

impl Element {
    pub fn zero() -> Self {
        Element::default()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn add_term(&mut self, m: Exponents, c: BigInt) {
        if c.is_zero() {
            return;
        }
        let e = self.terms.entry(m.clone()).or_insert_with(BigInt::zero);
        *e += c;
        if e.is_zero() {
            self.terms.remove(&m);
        }
    }

    pub fn scale(&self, c: &BigInt) -> Element {
        let mut out = Element::zero();
        for (m, a) in &self.terms {
            out.add_term(m.clone(), a * c);
        }
        out
    }

    /// True if every coefficient is divisible by `n`.
    pub fn divisible_by(&self, n: u32) -> bool {
        let n = BigInt::from(n);
        self.terms.values().all(|c| (c % &n).is_zero())
    }

    /// Gcd of the coefficients; zero for the zero element.
    pub fn content(&self) -> BigInt {
        self.terms.values().fold(BigInt::zero(), |g, c| gcd(&g, c))
    }
}

fn gcd(a: &BigInt, b: &BigInt) -> BigInt {
    let (mut a, mut b) = (a.abs(), b.abs());
    while !b.is_zero() {
        let r = &a % &b;
        a = b;
        b = r;
    }
    a
}

fn lcm(a: u32, b: u32) -> u32 {
    let (mut x, mut y) = (a, b);
    while y != 0 {
        (x, y) = (y, x % y);
    }
    a / x * b
}

impl FiniteGradedRing {
    pub fn from_spec(spec: &RingSpec) -> Result<Self> {
        if spec.generators.is_empty() {
            return Err(Error::Spec("a ring needs at least one generator".into()));
        }
        let mut seen = std::collections::BTreeSet::new();
        for g in &spec.generators {
            if g.degree == 0 || g.degree % 2 == 1 {
                return Err(Error::Spec(format!("generator {} has degree {}; only positive even degrees", g.name, g.degree)));
            }
            if g.name.is_empty() || !g.name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                return Err(Error::Spec(format!("bad generator name {:?}", g.name)));
            }
            if g.name.chars().next().is_some_and(|c| c.is_ascii_digit()) {
                return Err(Error::Spec(format!("generator name {:?} starts with a digit", g.name)));
            }
            if !seen.insert(g.name.clone()) {
                return Err(Error::Spec(format!("duplicate generator {}", g.name)));
            }
        }
        let mut ring = FiniteGradedRing {
            name: spec.name.clone(),
            generators: spec.generators.clone(),
            relations: Vec::new(),
            window: spec.window.unwrap_or(spec.fundamental_degree),
            fundamental_degree: spec.fundamental_degree,
            pairing: Vec::new(),
        };
        if ring.window < ring.fundamental_degree {
            return Err(Error::Spec("the window must reach the fundamental degree".into()));
        }
        for r in &spec.relations {
            let m = ring.parse_monomial(r)?;
            if m.iter().all(|&e| e == 0) {
                return Err(Error::Spec("the relation 1 = 0 kills the ring".into()));
            }
            ring.relations.push(m);
        }
        ring.pairing = ring.parse_monomial(&spec.pairing)?;
        let pd = ring.degree(&ring.pairing);
        if pd != ring.fundamental_degree {
            return Err(Error::DegreeMismatch { expected: ring.fundamental_degree.into(), found: pd.into() });
        }
        if ring.is_truncated(&ring.pairing) {
            return Err(Error::Spec(format!("the pairing monomial {} is zero in the ring", spec.pairing)));
        }
        Ok(ring)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: RingSpec = toml::from_str(text).map_err(|e| Error::Spec(e.to_string()))?;
        FiniteGradedRing::from_spec(&spec)
    }

    pub fn degree(&self, m: &[u32]) -> u32 {
        m.iter().zip(&self.generators).map(|(e, g)| e * g.degree).sum()
    }

    fn is_truncated(&self, m: &[u32]) -> bool {
        self.relations.iter().any(|r| r.iter().zip(m).all(|(a, b)| a <= b))
    }

    /// Surviving monomials of degree `d`, in lexicographic order of exponents, highest first.
    pub fn basis(&self, d: u32) -> Vec<Exponents> {
        fn go(ring: &FiniteGradedRing, i: usize, left: u32, cur: &mut Exponents, out: &mut Vec<Exponents>) {
            if i == ring.generators.len() {
                if left == 0 && !ring.is_truncated(cur) {
                    out.push(cur.clone());
                }
                return;
            }
            let g = ring.generators[i].degree;
            for e in (0..=left / g).rev() {
                cur[i] = e;
                go(ring, i + 1, left - e * g, cur, out);
            }
            cur[i] = 0;
        }
        let mut out = Vec::new();
        if d <= self.window {
            go(self, 0, d, &mut vec![0; self.generators.len()], &mut out);
        }
        out
    }

    pub fn rank(&self, d: u32) -> usize {
        self.basis(d).len()
    }

    pub fn multiply(&self, a: &Element, b: &Element) -> Element {
        let mut out = Element::zero();
        for (ma, ca) in &a.terms {
            for (mb, cb) in &b.terms {
                let m: Exponents = ma.iter().zip(mb).map(|(x, y)| x + y).collect();
                if self.degree(&m) <= self.window && !self.is_truncated(&m) {
                    out.add_term(m, ca * cb);
                }
            }
        }
        out
    }

    pub fn power(&self, x: &Element, k: u32) -> Element {
        let mut out = Element::zero();
        out.add_term(vec![0; self.generators.len()], BigInt::one());
        for _ in 0..k {
            out = self.multiply(&out, x);
        }
        out
    }

    /// Degree of a nonzero homogeneous element; None for zero or mixed degrees.
    pub fn homogeneous_degree(&self, x: &Element) -> Option<u32> {
        let mut ds = x.terms.keys().map(|m| self.degree(m));
        let d = ds.next()?;
        ds.all(|e| e == d).then_some(d)
    }

    /// Monomial text such as "u v w", "u*v" or "u^2".
    pub fn parse_monomial(&self, text: &str) -> Result<Exponents> {
        let mut m = vec![0; self.generators.len()];
        let t = text.trim();
        if t == "1" {
            return Ok(m);
        }
        for (pos, tok) in t.split(|c: char| c.is_whitespace() || c == '*').filter(|s| !s.is_empty()).enumerate() {
            let (name, exp) = match tok.split_once('^') {
                Some((n, e)) => (n, e.parse::<u32>().map_err(|_| Error::parse(text, pos, "bad exponent"))?),
                None => (tok, 1),
            };
            let i = self
                .generators
                .iter()
                .position(|g| g.name == name)
                .ok_or_else(|| Error::parse(text, pos, format!("unknown generator {name}")))?;
            m[i] += exp;
        }
        if m.iter().all(|&e| e == 0) {
            return Err(Error::parse(text, 0, "empty monomial"));
        }
        Ok(m)
    }

    /// Integer combination such as "2u + v - 3 w" or "u*v + 2 v w".
    pub fn parse_element(&self, text: &str) -> Result<Element> {
        let mut out = Element::zero();
        if text.trim() == "0" {
            return Ok(out);
        }
        let mut terms: Vec<(bool, String)> = vec![(false, String::new())];
        for c in text.chars() {
            if c == '+' || c == '-' {
                let first = terms.len() == 1 && terms[0].1.trim().is_empty();
                if first {
                    terms[0].0 = c == '-';
                    continue;
                }
                terms.push((c == '-', String::new()));
            } else {
                terms.last_mut().expect("nonempty").1.push(c);
            }
        }
        for (pos, (neg, term)) in terms.into_iter().enumerate() {
            let term = term.trim();
            if term.is_empty() {
                return Err(Error::parse(text, pos, "empty term"));
            }
            let digits: String = term.chars().take_while(|c| c.is_ascii_digit()).collect();
            let rest = term[digits.len()..].trim_start_matches(['*', ' ']);
            let mut c: BigInt = if digits.is_empty() { BigInt::one() } else { digits.parse().expect("digits") };
            if neg {
                c = -c;
            }
            let m = if rest.is_empty() {
                vec![0; self.generators.len()]
            } else {
                self.parse_monomial(rest).map_err(|_| Error::parse(text, pos, format!("bad monomial {rest:?}")))?
            };
            if self.is_truncated(&m) || self.degree(&m) > self.window {
                continue;
            }
            out.add_term(m, c);
        }
        Ok(out)
    }

    pub fn render_monomial(&self, m: &[u32]) -> String {
        let parts: Vec<String> = m
            .iter()
            .zip(&self.generators)
            .filter(|(e, _)| **e > 0)
            .map(|(e, g)| if *e == 1 { g.name.clone() } else { format!("{}^{e}", g.name) })
            .collect();
        if parts.is_empty() {
            "1".into()
        } else {
            parts.join(" ")
        }
    }

    pub fn render(&self, x: &Element) -> String {
        if x.is_zero() {
            return "0".into();
        }
        let mut out = String::new();
        for (i, (m, c)) in x.terms.iter().rev().enumerate() {
            let mono = self.render_monomial(m);
            let mag = c.abs();
            let body = match (mag.is_one(), mono.as_str()) {
                (_, "1") => mag.to_string(),
                (true, _) => mono,
                (false, _) => format!("{mag}{mono}"),
            };
            match (i, c.is_negative()) {
                (0, true) => out.push_str(&format!("-{body}")),
                (0, false) => out.push_str(&body),
                (_, true) => out.push_str(&format!(" - {body}")),
                (_, false) => out.push_str(&format!(" + {body}")),
            }
        }
        out
    }

    /// Element with the given coefficients over `basis(d)`.
    pub fn from_coordinates(&self, d: u32, coeffs: &[BigInt]) -> Result<Element> {
        let basis = self.basis(d);
        if basis.len() != coeffs.len() {
            return Err(Error::Spec(format!("degree {d} has rank {}, got {} coefficients", basis.len(), coeffs.len())));
        }
        let mut out = Element::zero();
        for (m, c) in basis.into_iter().zip(coeffs) {
            out.add_term(m, c.clone());
        }
        Ok(out)
    }
}

/// Z[u,v,w]/(u², v², w²) with |u| = |v| = |w| = 4: the cohomology of (HP¹)³.
pub fn hp1_cubed_ring() -> FiniteGradedRing {
    let spec = RingSpec {
        name: "HP1^3".into(),
        generators: ["u", "v", "w"].iter().map(|n| GeneratorSpec { name: n.to_string(), degree: 4 }).collect(),
        relations: vec!["u^2".into(), "v^2".into(), "w^2".into()],
        fundamental_degree: 12,
        pairing: "u v w".into(),
        window: None,
    };
    FiniteGradedRing::from_spec(&spec).expect("fixed presentation")
}

/// H*(HP¹) = Z[u]/(u²).
pub fn hp1_ring() -> FiniteGradedRing {
    let spec = RingSpec {
        name: "HP1".into(),
        generators: vec![GeneratorSpec { name: "u".into(), degree: 4 }],
        relations: vec!["u^2".into()],
        fundamental_degree: 4,
        pairing: "u".into(),
        window: Some(12),
    };
    FiniteGradedRing::from_spec(&spec).expect("fixed presentation")
}

/// Coefficient of the pairing monomial in x³.
pub fn cube_pairing(ring: &FiniteGradedRing, x: &Element) -> Result<BigInt> {
    if let Some(d) = ring.homogeneous_degree(x) {
        if 3 * d != ring.fundamental_degree {
            return Err(Error::DegreeMismatch { expected: (ring.fundamental_degree / 3).into(), found: d.into() });
        }
    } else if !x.is_zero() {
        return Err(Error::Spec("the class is not homogeneous".into()));
    } else if ring.fundamental_degree % 3 != 0 {
        return Err(Error::DegreeMismatch { expected: (ring.fundamental_degree / 3).into(), found: 0 });
    }
    Ok(pairing(ring, &ring.power(x, 3)))
}

fn pairing(ring: &FiniteGradedRing, top: &Element) -> BigInt {
    top.terms.get(&ring.pairing).cloned().unwrap_or_default()
}

fn require_degree_four(ring: &FiniteGradedRing, x: &Element) -> Result<()> {
    match ring.homogeneous_degree(x) {
        Some(4) => Ok(()),
        None if x.is_zero() => Ok(()),
        Some(d) => Err(Error::DegreeMismatch { expected: 4, found: d.into() }),
        None => Err(Error::Spec("the class is not homogeneous".into())),
    }
}

fn display<T: fmt::Display, S: Serializer>(v: &T, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_string())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Verdict {
    pub condition: String,
    pub holds: bool,
    pub detail: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckKind {
    Stable,
    Unstable,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ObstructionReport {
    pub kind: CheckKind,
    pub ring: String,
    pub class: String,
    pub verdicts: Vec<Verdict>,
    /// Established divisor of every coefficient of x³; 1 when nothing is claimed, 0 when x³ = 0 is established.
    pub divisibility: u32,
    #[serde(serialize_with = "display")]
    pub pairing: BigInt,
    pub cube: String,
    pub notes: Vec<String>,
    pub scope: &'static str,
}

impl ObstructionReport {
    pub fn to_markdown(&self) -> String {
        let mut out = format!("## {} check: x = {} in {}\n\n", match self.kind {
            CheckKind::Stable => "Stable",
            CheckKind::Unstable => "Unstable",
        }, self.class, self.ring);
        out.push_str("| condition | holds | detail |\n|---|---|---|\n");
        for v in &self.verdicts {
            out.push_str(&format!("| {} | {} | {} |\n", v.condition, if v.holds { "yes" } else { "no" }, v.detail));
        }
        let div = match self.divisibility {
            0 => "x³ = 0".to_string(),
            1 => "no divisibility claim".to_string(),
            d => format!("{d} divides every coefficient of x³"),
        };
        out.push_str(&format!("\nx³ = {}\n\npairing: {}\n\ndivisibility: {}\n", self.cube, self.pairing, div));
        for n in &self.notes {
            out.push_str(&format!("\n- {n}"));
        }
        out.push_str(&format!("\n\nScope: {}.\n", self.scope));
        out
    }
}

/// The mod-2 and mod-3 consequences of a stable lift: Sq⁴x = x² ≡ 0 (2) and P²x = x³ ≡ 0 (3).
pub fn stable_divisibility_check(ring: &FiniteGradedRing, x: &Element) -> Result<ObstructionReport> {
    require_degree_four(ring, x)?;
    let sq = ring.power(x, 2);
    let cube = ring.power(x, 3);
    let mod2 = sq.divisible_by(2);
    let mod3 = cube.divisible_by(3);
    let mut divisibility = 1;
    let mut notes = Vec::new();
    if mod2 {
        // x³ = x·x² and x² ≡ 0 (2)
        if !cube.divisible_by(2) {
            return Err(Error::Inconsistent("x² ≡ 0 mod 2 but x³ is not".into()));
        }
        divisibility = lcm(divisibility, 2);
    }
    if mod3 {
        divisibility = lcm(divisibility, 3);
    }
    let p = pairing(ring, &cube);
    if !(&p % BigInt::from(divisibility)).is_zero() {
        return Err(Error::Inconsistent(format!("pairing {p} is not divisible by {divisibility}")));
    }
    if !mod2 {
        notes.push("mod-2 hypothesis fails: x admits no lift through the Sq⁴ stage".into());
    }
    if !mod3 {
        notes.push("mod-3 hypothesis fails: x admits no lift through the P² stage".into());
    }
    if mod2 && mod3 {
        notes.push(format!("6 divides every coefficient of x³ and the pairing {p}"));
    }
    Ok(ObstructionReport {
        kind: CheckKind::Stable,
        ring: ring.name.clone(),
        class: ring.render(x),
        verdicts: vec![
            Verdict {
                condition: "Sq⁴-condition mod 2 (x² ≡ 0)".into(),
                holds: mod2,
                detail: format!("x² = {}", ring.render(&sq)),
            },
            Verdict {
                condition: "P²-condition mod 3 (x³ ≡ 0)".into(),
                holds: mod3,
                detail: format!("x³ = {}", ring.render(&cube)),
            },
        ],
        divisibility,
        pairing: p,
        cube: ring.render(&cube),
        notes,
        scope: SCOPE,
    })
}

/// The consequence of an unstable lift to S⁴: the ι² invariant forces x² = 0, hence x³ = 0.
pub fn unstable_vanishing_check(ring: &FiniteGradedRing, x: &Element) -> Result<ObstructionReport> {
    require_degree_four(ring, x)?;
    let sq = ring.power(x, 2);
    let cube = ring.power(x, 3);
    let holds = sq.is_zero();
    let mut notes = Vec::new();
    let divisibility = if holds {
        if !cube.is_zero() {
            return Err(Error::Inconsistent("x² = 0 but x³ ≠ 0".into()));
        }
        notes.push("x² = 0, so x³ = x·x² = 0 and the pairing vanishes".into());
        0
    } else {
        notes.push("unstable lift obstructed at the ι₄² invariant".into());
        1
    };
    Ok(ObstructionReport {
        kind: CheckKind::Unstable,
        ring: ring.name.clone(),
        class: ring.render(x),
        verdicts: vec![Verdict {
            condition: "unstable ι²-condition (x² = 0)".into(),
            holds,
            detail: format!("x² = {}", ring.render(&sq)),
        }],
        divisibility,
        pairing: pairing(ring, &cube),
        cube: ring.render(&cube),
        notes,
        scope: SCOPE,
    })
}

/// A stable operation applied to a degree-4 class.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Operation {
    pub name: &'static str,
    pub target_degree: u32,
}

pub const STABLE_OPERATIONS: [Operation; 6] = [
    Operation { name: "alpha7", target_degree: 7 },
    Operation { name: "Sq4 (integral lift)", target_degree: 8 },
    Operation { name: "p11", target_degree: 11 },
    Operation { name: "Sq8 (integral lift)", target_degree: 12 },
    Operation { name: "beta12", target_degree: 12 },
    Operation { name: "P1 mod 5", target_degree: 12 },
];

/// Degrees where indeterminacies of the operations live.
pub const INDETERMINACY_DEGREES: [u32; 5] = [5, 6, 7, 10, 11];

pub const ADDITIVITY_PROVENANCE: &str =
    "external: additivity of higher operations, Φ(x + y) = Φ(x) + Φ(y) modulo the indeterminacy of Φ";

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Checkpoint {
    pub id: char,
    pub claim: String,
    pub passed: bool,
    pub steps: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct WitnessTrace {
    pub class: String,
    pub checkpoints: Vec<Checkpoint>,
    #[serde(serialize_with = "display")]
    pub pairing: BigInt,
    pub scope: &'static str,
}

impl WitnessTrace {
    pub fn passed(&self) -> bool {
        self.checkpoints.iter().all(|c| c.passed)
    }

    pub fn to_markdown(&self) -> String {
        let mut out = format!("## Witness: x = {} on (HP¹)³\n", self.class);
        for c in &self.checkpoints {
            out.push_str(&format!("\n### ({}) {} [{}]\n\n", c.id, c.claim, if c.passed { "pass" } else { "FAIL" }));
            for s in &c.steps {
                out.push_str(&format!("- {s}\n"));
            }
        }
        out.push_str(&format!("\npairing: {}\n\nScope: {}.\n", self.pairing, self.scope));
        out
    }
}

/// The lift argument for x = u + v + w on (HP¹)³, with every arithmetic step checked.
pub fn witness_lift_argument() -> WitnessTrace {
    let ring = hp1_cubed_ring();
    let single = hp1_ring();
    let x = ring.parse_element("u + v + w").expect("fixed class");
    let mut checkpoints = Vec::new();

    let mut steps = Vec::new();
    let mut ok = true;
    for d in (1..=ring.fundamental_degree).filter(|d| d % 2 == 1) {
        ok &= ring.rank(d) == 0;
    }
    steps.push(format!("odd-degree ranks in 1..={}: all zero = {ok}", ring.fundamental_degree));
    for d in INDETERMINACY_DEGREES {
        let r = ring.rank(d);
        ok &= r == 0;
        steps.push(format!("rank H^{d} = {r}"));
    }
    checkpoints.push(Checkpoint {
        id: 'a',
        claim: "odd-degree and degree-6 cohomology vanish, so every indeterminacy is zero".into(),
        passed: ok,
        steps,
    });

    let mut steps = Vec::new();
    let mut ok = true;
    for op in &STABLE_OPERATIONS {
        let r = single.rank(op.target_degree);
        ok &= r == 0;
        steps.push(format!("{} lands in H^{}(HP¹) of rank {r}", op.name, op.target_degree));
    }
    steps.push("u, v, w are pulled back from HP¹ along the projections, so each operation vanishes on them".into());
    checkpoints.push(Checkpoint {
        id: 'b',
        claim: "each stable operation vanishes on u, v and w".into(),
        passed: ok,
        steps,
    });

    let a_ok = checkpoints[0].passed;
    let b_ok = checkpoints[1].passed;
    checkpoints.push(Checkpoint {
        id: 'c',
        claim: "additivity extends the vanishing to u + v + w".into(),
        passed: a_ok && b_ok,
        steps: vec![
            format!("axiom ({ADDITIVITY_PROVENANCE})"),
            "Φ(u + v + w) = Φ(u) + Φ(v) + Φ(w) = 0 modulo an indeterminacy that is zero by (a)".into(),
        ],
    });

    let p = cube_pairing(&ring, &x).expect("degree 4");
    let cube = ring.power(&x, 3);
    checkpoints.push(Checkpoint {
        id: 'd',
        claim: "⟨x³, [W]⟩ = 6".into(),
        passed: p == BigInt::from(6),
        steps: vec![format!("x³ = {}", ring.render(&cube)), format!("pairing = {p}")],
    });
    WitnessTrace { class: ring.render(&x), checkpoints, pairing: p, scope: SCOPE }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SweepReport {
    pub ring: String,
    pub bound: i64,
    pub checked: usize,
    /// Classes with x² ≡ 0 (2) and x³ ≡ 0 (3).
    pub admissible: usize,
    /// Admissible classes whose pairing is not divisible by 6.
    pub counterexamples: Vec<Vec<i64>>,
    /// Smallest nonzero |pairing| over admissible classes.
    #[serde(serialize_with = "display_opt")]
    pub min_nonzero: Option<BigInt>,
    pub attains_six: bool,
    pub scope: &'static str,
}

fn display_opt<S: Serializer>(v: &Option<BigInt>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match v {
        Some(x) => s.serialize_str(&x.to_string()),
        None => s.serialize_none(),
    }
}

impl SweepReport {
    pub fn passed(&self) -> bool {
        self.counterexamples.is_empty() && self.attains_six
    }

    pub fn to_markdown(&self) -> String {
        let min = self.min_nonzero.as_ref().map_or("none".to_string(), |m| m.to_string());
        format!(
            "## Divisibility sweep over [-{b},{b}]^n in {}\n\n| checked | admissible | counterexamples | min nonzero |pairing| | attains 6 |\n|---|---|---|---|---|\n| {} | {} | {} | {} | {} |\n\nScope: {}.\n",
            self.ring,
            self.checked,
            self.admissible,
            self.counterexamples.len(),
            min,
            self.attains_six,
            self.scope,
            b = self.bound,
        )
    }
}

/// Every degree-4 class with coefficients in [-bound, bound].
pub fn divisibility_sweep(ring: &FiniteGradedRing, bound: i64, schedule: Schedule) -> Result<SweepReport> {
    if bound < 0 {
        return Err(Error::Spec("the sweep bound must be nonnegative".into()));
    }
    let basis = ring.basis(4);
    let side = (2 * bound + 1) as u64;
    let total = side
        .checked_pow(basis.len() as u32)
        .filter(|&t| t <= 1 << 24)
        .ok_or_else(|| Error::Spec("sweep too large".into()))?;
    let results = schedule.map_range(0..total, |idx| {
        let mut k = idx;
        let coeffs: Vec<i64> = (0..basis.len())
            .map(|_| {
                let c = (k % side) as i64 - bound;
                k /= side;
                c
            })
            .collect();
        let big: Vec<BigInt> = coeffs.iter().map(|&c| BigInt::from(c)).collect();
        let x = ring.from_coordinates(4, &big).expect("rank matches");
        let sq = ring.power(&x, 2);
        let cube = ring.power(&x, 3);
        let admissible = sq.divisible_by(2) && cube.divisible_by(3);
        (coeffs, admissible, pairing(ring, &cube))
    });
    let mut report = SweepReport {
        ring: ring.name.clone(),
        bound,
        checked: results.len(),
        admissible: 0,
        counterexamples: Vec::new(),
        min_nonzero: None,
        attains_six: false,
        scope: SCOPE,
    };
    let six = BigInt::from(6);
    for (coeffs, admissible, p) in results {
        if !admissible {
            continue;
        }
        report.admissible += 1;
        if !(&p % &six).is_zero() {
            report.counterexamples.push(coeffs);
        }
        if !p.is_zero() {
            let a = p.abs();
            if report.min_nonzero.as_ref().map_or(true, |m| a < *m) {
                report.min_nonzero = Some(a.clone());
            }
            report.attains_six |= a == six;
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ring() -> FiniteGradedRing {
        hp1_cubed_ring()
    }

    #[test]
    fn ranks() {
        let r = ring();
        assert_eq!((r.rank(0), r.rank(4), r.rank(8), r.rank(12), r.rank(5)), (1, 3, 3, 1, 0));
        assert_eq!(r.rank(16), 0);
    }

    #[test]
    fn pairings() {
        let r = ring();
        let p = |s: &str| cube_pairing(&r, &r.parse_element(s).unwrap()).unwrap();
        assert_eq!(p("u + v + w"), BigInt::from(6));
        assert_eq!(p("u"), BigInt::from(0));
        assert_eq!(p("2u + v + w"), BigInt::from(12));
        assert_eq!(p("0"), BigInt::from(0));
        assert_eq!(p("-u - v - w"), BigInt::from(-6));
    }

    #[test]
    fn pairing_needs_degree_four() {
        let r = ring();
        let x = r.parse_element("u v").unwrap();
        assert!(matches!(cube_pairing(&r, &x), Err(Error::DegreeMismatch { .. })));
    }

    #[test]
    fn element_text_round_trips() {
        let r = ring();
        for s in ["u + v + w", "2u - 3v", "-u", "u v + 2v w"] {
            let x = r.parse_element(s).unwrap();
            assert_eq!(r.parse_element(&r.render(&x)).unwrap(), x, "{s}");
        }
        assert!(r.parse_element("u +").is_err());
        assert!(r.parse_element("q").is_err());
        assert_eq!(r.parse_element("u^2 + v").unwrap(), r.parse_element("v").unwrap());
    }

    #[test]
    fn stable_check_on_witness() {
        let r = ring();
        let rep = stable_divisibility_check(&r, &r.parse_element("u + v + w").unwrap()).unwrap();
        assert!(rep.verdicts.iter().all(|v| v.holds));
        assert_eq!((rep.divisibility, rep.pairing.clone()), (6, BigInt::from(6)));
        assert_eq!(rep.cube, "6u v w");
        assert!(rep.to_markdown().contains(SCOPE));
    }

    #[test]
    fn stable_check_without_hypotheses() {
        let r = FiniteGradedRing::from_toml(
            "name = \"Z[t]/t^4\"\nrelations = [\"t^4\"]\nfundamental_degree = 12\npairing = \"t^3\"\n[[generator]]\nname = \"t\"\ndegree = 4\n",
        )
        .unwrap();
        let rep = stable_divisibility_check(&r, &r.parse_element("t").unwrap()).unwrap();
        assert!(!rep.verdicts[0].holds);
        assert!(!rep.verdicts[1].holds);
        assert_eq!(rep.divisibility, 1);
        assert_eq!(rep.pairing, BigInt::one());
        // 3t passes mod 3 only
        let rep = stable_divisibility_check(&r, &r.parse_element("3t").unwrap()).unwrap();
        assert_eq!(rep.divisibility, 3);
    }

    #[test]
    fn unstable_checks() {
        let r = ring();
        let rep = unstable_vanishing_check(&r, &r.parse_element("u + v + w").unwrap()).unwrap();
        assert!(!rep.verdicts[0].holds);
        assert!(rep.notes[0].contains("ι₄²"));
        let rep = unstable_vanishing_check(&r, &Element::zero()).unwrap();
        assert_eq!((rep.divisibility, rep.pairing.clone()), (0, BigInt::zero()));
        let single = hp1_ring();
        let rep = unstable_vanishing_check(&single, &single.parse_element("u").unwrap()).unwrap();
        assert!(rep.verdicts[0].holds);
        assert_eq!(rep.cube, "0");
    }

    #[test]
    fn witness_trace() {
        let t = witness_lift_argument();
        assert!(t.passed(), "{}", t.to_markdown());
        assert_eq!(t.checkpoints.iter().map(|c| c.id).collect::<String>(), "abcd");
        assert_eq!(t.pairing, BigInt::from(6));
    }

    #[test]
    fn presentation_errors() {
        let bad = [
            "fundamental_degree = 12\npairing = \"u\"\n[[generator]]\nname = \"u\"\ndegree = 4\n",
            "fundamental_degree = 4\npairing = \"u\"\n[[generator]]\nname = \"u\"\ndegree = 3\n",
            "fundamental_degree = 4\npairing = \"u\"\nrelations = [\"u\"]\n[[generator]]\nname = \"u\"\ndegree = 4\n",
            "fundamental_degree = 4\npairing = \"u\"\nextra = 1\n[[generator]]\nname = \"u\"\ndegree = 4\n",
        ];
        for b in bad {
            assert!(FiniteGradedRing::from_toml(b).is_err(), "{b}");
        }
    }

    #[test]
    fn small_sweep() {
        let rep = divisibility_sweep(&ring(), 1, Schedule::Sequential).unwrap();
        assert_eq!(rep.checked, 27);
        assert!(rep.passed());
    }
}
