//! Finite windows of modules over the Steenrod algebra whose action may involve unknowns.
//!
//! A free module is built from the admissible basis. A stage is built from a base module and
//! a fiber module through the long exact sequence of a fibration of spectra.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::em::CoefficientGroup;
use crate::error::{Error, Result};
use crate::fp::{self, PrimeField, Subspace};
use crate::poly::Poly;
use crate::steenrod::adem::{normalize_word, sequence_to_word, word_degree};
use crate::steenrod::{admissible_sequences, Monomial, Tail, Word, BETA};

pub type ClassId = usize;
pub type Vector = BTreeMap<ClassId, Poly>;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Origin {
    /// Admissible word on a generator of a free module.
    Free { gen: usize, word: Word },
    /// Pulled back from the base.
    Pullback { base: ClassId },
    /// Detected on the fiber; coordinates of the restriction over the fiber basis in this degree.
    Kernel { restriction: Vec<u32> },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ClassInfo {
    pub label: String,
    pub degree: u32,
    pub origin: Origin,
}

#[derive(Clone, Debug)]
pub struct FreeGenerator {
    /// Label of the generator itself.
    pub label: String,
    pub degree: u32,
    /// Words ending in the primary Bockstein vanish on this generator.
    pub kills_beta: bool,
    pub tail: Tail,
}

#[derive(Clone, Debug)]
struct Cokernel {
    image: Subspace,
    to_class: Vec<Option<ClassId>>,
}

#[derive(Clone, Debug)]
pub struct StageModule {
    pub name: String,
    prime: PrimeField,
    top: u32,
    classes: Vec<ClassInfo>,
    by_degree: BTreeMap<u32, Vec<ClassId>>,
    action: HashMap<(u32, ClassId), Vector>,
    generators: Vec<FreeGenerator>,
    free_index: HashMap<(usize, Word), ClassId>,
    cokernels: BTreeMap<u32, Cokernel>,
}

pub fn token_degree(f: PrimeField, t: u32) -> u32 {
    word_degree(f, &[t])
}

pub fn token_label(f: PrimeField, t: u32) -> String {
    if f.is_two() {
        format!("Sq{t}")
    } else if t == BETA {
        "b1".into()
    } else {
        format!("P{t}")
    }
}

/// Algebra generators of degree 1..=max, by degree.
pub fn tokens_up_to(f: PrimeField, max: u32) -> Vec<u32> {
    if f.is_two() {
        return (1..=max).collect();
    }
    let mut out = Vec::new();
    if max >= 1 {
        out.push(BETA);
    }
    let q = 2 * (f.p() - 1);
    out.extend((1..).take_while(|s| s * q <= max));
    out
}

fn ends_in_beta(f: PrimeField, w: &[u32]) -> bool {
    w.last().is_some_and(|&t| if f.is_two() { t == 1 } else { t == BETA })
}

pub fn pullback_label(l: &str) -> String {
    if l.starts_with("p*") {
        l.to_string()
    } else {
        format!("p*{l}")
    }
}

/// Generators of the mod-p cohomology of Σ^shift HA as a module over the Steenrod algebra.
pub fn em_generators(coeff: CoefficientGroup, shift: u32, f: PrimeField) -> Vec<FreeGenerator> {
    let p = f.p();
    match coeff.p_valuation(p) {
        None => vec![FreeGenerator { label: format!("r{p} i"), degree: shift, kills_beta: true, tail: Tail::Reduction }],
        Some(0) => Vec::new(),
        Some(1) => vec![FreeGenerator { label: "i".into(), degree: shift, kills_beta: false, tail: Tail::None }],
        Some(m) => vec![
            FreeGenerator { label: "i".into(), degree: shift, kills_beta: true, tail: Tail::None },
            FreeGenerator { label: format!("b{m}"), degree: shift + 1, kills_beta: true, tail: Tail::Bockstein(m) },
        ],
    }
}

impl StageModule {
    fn empty(name: &str, prime: PrimeField, top: u32) -> Self {
        StageModule {
            name: name.to_string(),
            prime,
            top,
            classes: Vec::new(),
            by_degree: BTreeMap::new(),
            action: HashMap::new(),
            generators: Vec::new(),
            free_index: HashMap::new(),
            cokernels: BTreeMap::new(),
        }
    }

    /// Free module on the given generators, truncated above `top`.
    pub fn free(name: &str, prime: PrimeField, top: u32, generators: Vec<FreeGenerator>) -> Self {
        let mut m = StageModule::empty(name, prime, top);
        for d in 0..=top {
            for (g, gen) in generators.iter().enumerate() {
                if gen.degree > d {
                    continue;
                }
                for seq in admissible_sequences(prime, d - gen.degree) {
                    let word = sequence_to_word(prime, &seq).expect("admissible sequences convert");
                    if gen.kills_beta && ends_in_beta(prime, &word) {
                        continue;
                    }
                    let label = if word.is_empty() {
                        gen.label.clone()
                    } else {
                        Monomial::from_word(prime, word.clone(), gen.tail).expect("valid word").to_string()
                    };
                    let id = m.push_class(label, d, Origin::Free { gen: g, word: word.clone() });
                    m.free_index.insert((g, word), id);
                }
            }
        }
        for id in 0..m.classes.len() {
            let Origin::Free { gen, word } = m.classes[id].origin.clone() else { unreachable!() };
            let d = m.classes[id].degree;
            for t in tokens_up_to(prime, top - d) {
                let v = m.free_word_vector(gen, &[&[t][..], &word].concat(), generators[gen].kills_beta);
                m.action.insert((t, id), v);
            }
        }
        m.generators = generators;
        m
    }

    fn free_word_vector(&self, gen: usize, w: &[u32], kills_beta: bool) -> Vector {
        let f = self.prime;
        let mut v = Vector::new();
        for (nw, c) in normalize_word(f, w).iter() {
            if kills_beta && ends_in_beta(f, nw) {
                continue;
            }
            let id = self.free_index[&(gen, nw.clone())];
            add_to(f, &mut v, id, &Poly::constant(f, *c));
        }
        v
    }

    /// The class of `w` applied to generator `gen` of a free module.
    pub fn free_element(&self, gen: usize, w: &[u32]) -> Result<Vector> {
        let g = self
            .generators
            .get(gen)
            .ok_or_else(|| Error::Spec(format!("{} has no generator {gen}", self.name)))?;
        let d = g.degree + word_degree(self.prime, w);
        if d > self.top {
            return Err(Error::Window { requested: d, available: self.top });
        }
        Ok(self.free_word_vector(gen, w, g.kills_beta))
    }

    pub fn generators(&self) -> &[FreeGenerator] {
        &self.generators
    }

    fn push_class(&mut self, label: String, degree: u32, origin: Origin) -> ClassId {
        let id = self.classes.len();
        self.classes.push(ClassInfo { label, degree, origin });
        self.by_degree.entry(degree).or_default().push(id);
        id
    }

    pub fn prime(&self) -> PrimeField {
        self.prime
    }

    pub fn top(&self) -> u32 {
        self.top
    }

    pub fn class(&self, id: ClassId) -> &ClassInfo {
        &self.classes[id]
    }

    pub fn classes(&self) -> &[ClassInfo] {
        &self.classes
    }

    pub fn basis(&self, d: u32) -> &[ClassId] {
        self.by_degree.get(&d).map_or(&[], |v| v.as_slice())
    }

    pub fn dim(&self, d: u32) -> usize {
        self.basis(d).len()
    }

    pub fn position(&self, id: ClassId) -> usize {
        self.basis(self.classes[id].degree).iter().position(|&c| c == id).expect("class in its degree")
    }

    pub fn act(&self, t: u32, id: ClassId) -> Result<Vector> {
        let d = self.classes[id].degree + token_degree(self.prime, t);
        if d > self.top {
            return Err(Error::Window { requested: d, available: self.top });
        }
        self.action.get(&(t, id)).cloned().ok_or_else(|| Error::UnknownAction {
            op: token_label(self.prime, t),
            class: format!("{} in {}", self.classes[id].label, self.name),
        })
    }

    pub fn act_vector(&self, t: u32, v: &Vector) -> Result<Vector> {
        let f = self.prime;
        let mut out = Vector::new();
        for (id, c) in v {
            for (k, a) in self.act(t, *id)? {
                add_to(f, &mut out, k, &a.mul(f, c));
            }
        }
        Ok(out)
    }

    /// Applies a word right to left.
    pub fn act_word(&self, w: &[u32], v: &Vector) -> Result<Vector> {
        let mut cur = v.clone();
        for &t in w.iter().rev() {
            if cur.is_empty() {
                break;
            }
            cur = self.act_vector(t, &cur)?;
        }
        Ok(cur)
    }

    /// Dense coordinates over the basis in degree d; symbolic entries are an error.
    pub fn numeric(&self, v: &Vector, d: u32) -> Result<Vec<u32>> {
        let mut out = vec![0; self.dim(d)];
        for (id, c) in v {
            let k = c.as_constant().ok_or_else(|| Error::UnknownAction {
                op: format!("coefficient {c}"),
                class: format!("{} in {}", self.classes[*id].label, self.name),
            })?;
            if self.classes[*id].degree != d {
                return Err(Error::DegreeMismatch { expected: d as i64, found: self.classes[*id].degree as i64 });
            }
            out[self.position(*id)] = k;
        }
        Ok(out)
    }

    pub fn from_dense(&self, d: u32, x: &[u32]) -> Vector {
        let f = self.prime;
        let mut v = Vector::new();
        for (j, &c) in x.iter().enumerate() {
            if c != 0 {
                add_to(f, &mut v, self.basis(d)[j], &Poly::constant(f, c));
            }
        }
        v
    }

    pub fn render(&self, v: &Vector) -> String {
        render_with(v, |id| self.classes[id].label.clone())
    }

    /// Pulls a vector of the base back to this stage, reducing modulo the image of the transgression.
    pub fn pullback(&self, base: &StageModule, v: &Vector) -> Result<Vector> {
        let f = self.prime;
        let mut by_deg: BTreeMap<u32, Vec<Poly>> = BTreeMap::new();
        for (id, c) in v {
            let d = base.classes[*id].degree;
            let dense = by_deg.entry(d).or_insert_with(|| vec![Poly::zero(); base.dim(d)]);
            dense[base.position(*id)].add_scaled(f, c, 1);
        }
        let mut out = Vector::new();
        for (d, mut dense) in by_deg {
            let ck = self
                .cokernels
                .get(&d)
                .ok_or(Error::Window { requested: d, available: self.top })?;
            for (row, &pc) in ck.image.basis().iter().zip(ck.image.pivots()) {
                let c = dense[pc].clone();
                if c.is_zero() {
                    continue;
                }
                for (j, &r) in row.iter().enumerate() {
                    if r != 0 {
                        dense[j].add_scaled(f, &c, f.neg(r));
                    }
                }
            }
            for (j, c) in dense.iter().enumerate() {
                if let Some(id) = ck.to_class[j] {
                    add_to(f, &mut out, id, c);
                } else {
                    debug_assert!(c.is_zero());
                }
            }
        }
        Ok(out)
    }

    pub fn substitute(&mut self, sub: &BTreeMap<u32, Poly>) {
        let f = self.prime;
        for v in self.action.values_mut() {
            let mut nv = Vector::new();
            for (k, c) in v.iter() {
                let c = c.substitute(f, sub);
                if !c.is_zero() {
                    nv.insert(*k, c);
                }
            }
            *v = nv;
        }
    }

    /// True if every recorded action is free of unknowns.
    pub fn is_determined(&self) -> bool {
        self.action.values().all(|v| v.values().all(|c| c.as_constant().is_some()))
    }

    pub fn undetermined_actions(&self) -> Vec<String> {
        let mut out: Vec<(u32, ClassId, String)> = self
            .action
            .iter()
            .filter(|(_, v)| v.values().any(|c| c.as_constant().is_none()))
            .map(|((t, id), v)| {
                (
                    self.classes[*id].degree,
                    *id,
                    format!("{} {} = {}", token_label(self.prime, *t), self.classes[*id].label, self.render(v)),
                )
            })
            .collect();
        out.sort();
        out.into_iter().map(|x| x.2).collect()
    }

    /// Restriction of a class to the fiber, None for pullbacks.
    pub fn restriction(&self, id: ClassId) -> Option<&[u32]> {
        match &self.classes[id].origin {
            Origin::Kernel { restriction } => Some(restriction),
            _ => None,
        }
    }
}

pub fn add_to(f: PrimeField, v: &mut Vector, id: ClassId, c: &Poly) {
    if c.is_zero() {
        return;
    }
    let e = v.entry(id).or_insert_with(Poly::zero);
    e.add_scaled(f, c, 1);
    if e.is_zero() {
        v.remove(&id);
    }
}

pub fn render_with(v: &Vector, label: impl Fn(ClassId) -> String) -> String {
    if v.is_empty() {
        return "0".into();
    }
    v.iter()
        .map(|(id, c)| match c.as_constant() {
            Some(1) => label(*id),
            Some(k) => format!("{k} {}", label(*id)),
            None => format!("({c}) {}", label(*id)),
        })
        .collect::<Vec<_>>()
        .join(" + ")
}

/// Fresh unknowns, shared by all stages of a tower.
#[derive(Clone, Debug, Default)]
pub struct Unknowns {
    pub descriptions: Vec<String>,
}

impl Unknowns {
    pub fn fresh(&mut self, description: String) -> Poly {
        self.descriptions.push(description);
        Poly::var(self.descriptions.len() as u32 - 1)
    }
}

/// Per-degree accounting of one step of the long exact sequence.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExactnessRecord {
    pub degree: u32,
    pub base_dim: usize,
    /// Rank of the transgression F^{n-1} -> B^n.
    pub image_rank: usize,
    pub fiber_dim: usize,
    /// dim ker(F^n -> B^{n+1}).
    pub kernel_dim: usize,
    pub stage_dim: usize,
}

/// The next stage of a tower: H(X) = coker(F[-1] -> B) + ker(F -> B[1]).
/// `tau` gives the image in the base of each fiber generator.
pub fn les_next_stage(
    base: &StageModule,
    fiber: &StageModule,
    tau: &[Vector],
    name: &str,
    unknowns: &mut Unknowns,
) -> Result<(StageModule, Vec<ExactnessRecord>)> {
    let f = base.prime;
    if base.top == 0 {
        return Err(Error::Window { requested: 1, available: 0 });
    }
    let top = base.top - 1;
    if fiber.top < top {
        return Err(Error::Window { requested: top, available: fiber.top });
    }
    if tau.len() != fiber.generators.len() {
        return Err(Error::Spec(format!("{name}: {} transgression targets for {} fiber generators", tau.len(), fiber.generators.len())));
    }
    // A-linearity forces the Bockstein of the target to vanish where the fiber relation holds.
    for (g, gen) in fiber.generators.iter().enumerate() {
        if gen.kills_beta && gen.degree + 2 <= base.top {
            let b = base.act_word(&[if f.is_two() { 1 } else { BETA }], &tau[g])?;
            if !base.numeric(&b, gen.degree + 2)?.iter().all(|&x| x == 0) {
                return Err(Error::Inconsistent(format!(
                    "{name}: the Bockstein of the transgression of {} is {}",
                    gen.label,
                    base.render(&b)
                )));
            }
        }
    }
    let transgress = |id: ClassId| -> Result<Vec<u32>> {
        let Origin::Free { gen, word } = &fiber.classes[id].origin else {
            return Err(Error::Spec("fiber must be a free module".into()));
        };
        let d = fiber.classes[id].degree + 1;
        let v = base.act_word(word, &tau[*gen])?;
        base.numeric(&v, d)
    };

    let mut x = StageModule::empty(name, f, top);
    let mut log = Vec::new();
    for n in 0..=top {
        // cokernel part
        let bn = base.dim(n);
        let mut image = Subspace::new(f, bn);
        if n >= 1 {
            for &c in fiber.basis(n - 1) {
                image.add(transgress(c)?);
            }
        }
        let mut to_class = vec![None; bn];
        for j in image.complement_indices() {
            let b = base.basis(n)[j];
            to_class[j] = Some(x.push_class(pullback_label(&base.classes[b].label), n, Origin::Pullback { base: b }));
        }
        let image_rank = image.dim();
        x.cokernels.insert(n, Cokernel { image, to_class });

        // kernel part
        let fiber_basis = fiber.basis(n).to_vec();
        let cols: Vec<Vec<u32>> = fiber_basis.iter().map(|&c| transgress(c)).collect::<Result<_>>()?;
        let ker = fp::kernel(f, &cols, base.dim(n + 1));
        let ker_space = Subspace::spanned_by(f, fiber_basis.len(), ker.iter());
        let mut span = Subspace::new(f, fiber_basis.len());
        let mut chosen: Vec<(ClassId, Vec<u32>)> = Vec::new();
        let mut candidates: Vec<(u32, ClassId, Vec<u32>)> = Vec::new();
        for t in tokens_up_to(f, n) {
            let td = token_degree(f, t);
            for &y in x.basis(n - td).to_vec().iter() {
                let Origin::Kernel { restriction } = &x.classes[y].origin else { continue };
                let r = fiber.from_dense(n - td, restriction);
                let image = fiber.act_vector(t, &r)?;
                candidates.push((t, y, fiber.numeric(&image, n)?));
            }
        }
        for (t, y, v) in &candidates {
            if !ker_space.contains(v) {
                return Err(Error::Inconsistent(format!(
                    "{name}: {} {} restricts outside the kernel of the transgression",
                    token_label(f, *t),
                    x.classes[*y].label
                )));
            }
            if span.add(v.clone()) {
                let label = format!("{} {}", token_label(f, *t), x.classes[*y].label);
                let id = x.push_class(label, n, Origin::Kernel { restriction: v.clone() });
                chosen.push((id, v.clone()));
                x.action.insert((*t, *y), [(id, Poly::constant(f, 1))].into_iter().collect());
            }
        }
        let fresh: Vec<Vec<u32>> = ker.iter().filter(|k| span.add((*k).clone())).cloned().collect();
        for (i, k) in fresh.iter().enumerate() {
            let suffix = if fresh.len() > 1 { ((b'a' + i as u8) as char).to_string() } else { String::new() };
            let id = x.push_class(format!("{name}_{n}{suffix}"), n, Origin::Kernel { restriction: k.clone() });
            chosen.push((id, k.clone()));
        }
        if chosen.len() != ker.len() {
            return Err(Error::Inconsistent(format!("{name}: kernel in degree {n} has dimension {} but {} classes were found", ker.len(), chosen.len())));
        }
        let coker_classes: Vec<ClassId> =
            x.basis(n).iter().copied().filter(|&c| matches!(x.classes[c].origin, Origin::Pullback { .. })).collect();
        let images: Vec<Vec<u32>> = chosen.iter().map(|(_, v)| v.clone()).collect();
        for (t, y, v) in candidates {
            if x.action.contains_key(&(t, y)) {
                continue;
            }
            let comb = fp::solve(f, &images, &v).ok_or_else(|| Error::Inconsistent(format!("{name}: restriction not in the kernel span")))?;
            let mut out = Vector::new();
            for (j, c) in comb.iter().enumerate() {
                add_to(f, &mut out, chosen[j].0, &Poly::constant(f, *c));
            }
            for &c in &coker_classes {
                let desc = format!("{} {} -> {}", token_label(f, t), x.classes[y].label, x.classes[c].label);
                add_to(f, &mut out, c, &unknowns.fresh(desc));
            }
            x.action.insert((t, y), out);
        }
        log.push(ExactnessRecord {
            degree: n,
            base_dim: bn,
            image_rank,
            fiber_dim: fiber_basis.len(),
            kernel_dim: ker.len(),
            stage_dim: x.dim(n),
        });
    }
    // pulled-back classes act through the base
    for id in 0..x.classes.len() {
        let Origin::Pullback { base: b } = x.classes[id].origin else { continue };
        let d = x.classes[id].degree;
        for t in tokens_up_to(f, top - d) {
            let v = base.act(t, b)?;
            let w = x.pullback(base, &v)?;
            x.action.insert((t, id), w);
        }
    }
    Ok((x, log))
}

/// Non-admissible words whose Adem expansions generate all relations.
pub fn relation_words(f: PrimeField, max_degree: u32) -> Vec<(Word, Vec<(Word, u32)>)> {
    let toks = tokens_up_to(f, max_degree);
    let mut words: Vec<Word> = Vec::new();
    for &a in &toks {
        for &b in &toks {
            words.push(vec![a, b]);
            if !f.is_two() && b == BETA {
                for &c in &toks {
                    if a != BETA && c != BETA {
                        words.push(vec![a, b, c]);
                    }
                }
            }
        }
    }
    words
        .into_iter()
        .filter(|w| word_degree(f, w) <= max_degree)
        .filter_map(|w| {
            let n = normalize_word(f, &w);
            if n.len() == 1 && n[0].0 == w && n[0].1 == 1 {
                None
            } else {
                Some((w, n.iter().cloned().collect()))
            }
        })
        .collect()
}

/// Polynomial constraints that the Adem relations impose on the action of `m` on `classes`.
pub fn adem_constraints(m: &StageModule, classes: &[ClassId]) -> Result<Vec<Poly>> {
    let f = m.prime;
    let min = classes.iter().map(|&c| m.classes[c].degree).min().unwrap_or(0);
    let rels = relation_words(f, m.top.saturating_sub(min));
    let per_class = crate::par::map_par(classes, |&y| -> Result<Vec<Poly>> {
        let mut eqs = Vec::new();
        let d = m.classes[y].degree;
        let unit: Vector = [(y, Poly::constant(f, 1))].into_iter().collect();
        for (w, expansion) in &rels {
            if d + word_degree(f, w) > m.top {
                continue;
            }
            let mut diff = m.act_word(w, &unit)?;
            for (nw, c) in expansion {
                let v = m.act_word(nw, &unit)?;
                for (k, a) in v {
                    add_to(f, &mut diff, k, &a.scaled(f, f.neg(*c)));
                }
            }
            eqs.extend(diff.into_values());
        }
        Ok(eqs)
    });
    let mut out = Vec::new();
    for r in per_class {
        out.extend(r?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two() -> PrimeField {
        PrimeField::new(2).unwrap()
    }

    #[test]
    fn free_module_matches_admissible_counts() {
        let f = two();
        let m = StageModule::free("HZ", f, 12, em_generators(CoefficientGroup::Integers, 0, f));
        for d in 0..=12 {
            assert_eq!(m.dim(d), crate::em::stable_basis(CoefficientGroup::Integers, f, d).len());
        }
        let i = m.basis(0)[0];
        let sq2 = m.act(2, i).unwrap();
        assert_eq!(m.render(&sq2), "Sq2 r2");
        assert!(m.act(1, i).unwrap().is_empty());
    }

    #[test]
    fn first_stage_at_two() {
        let f = two();
        let base = StageModule::free("B", f, 14, em_generators(CoefficientGroup::Integers, 4, f));
        let fiber = StageModule::free("F", f, 13, em_generators(CoefficientGroup::Cyclic(2), 5, f));
        let theta = base.free_element(0, &[2]).unwrap();
        let mut u = Unknowns::default();
        let (x, log) = les_next_stage(&base, &fiber, &[theta], "X1", &mut u).unwrap();
        assert_eq!(x.dim(5), 0);
        assert_eq!(x.dim(6), 0);
        assert_eq!(x.dim(7), 1);
        let a7 = x.basis(7)[0];
        assert_eq!(x.class(a7).label, "X1_7");
        for r in &log {
            assert_eq!(r.stage_dim, r.base_dim - r.image_rank + r.kernel_dim);
        }
    }

    #[test]
    fn relation_words_cover_adem_pairs() {
        let f = two();
        let rels = relation_words(f, 4);
        let words: Vec<Word> = rels.iter().map(|(w, _)| w.clone()).collect();
        assert!(words.contains(&vec![1, 1]));
        assert!(words.contains(&vec![1, 2]));
        assert!(!words.contains(&vec![2, 1]));
    }
}
