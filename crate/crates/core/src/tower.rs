//! Prime-local stable Postnikov towers over Σ^n HZ.

use std::collections::BTreeMap;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::em::{CoefficientGroup, Target};
use crate::error::{Error, Result};
use crate::fp::PrimeField;
use crate::poly::{eliminate, Poly};
use crate::stage::{
    adem_constraints, em_generators, les_next_stage, ExactnessRecord, StageModule, Unknowns, Vector,
};
use crate::steenrod::{parse_element, parse_monomial, Tail, BETA};
use crate::table::Table;

pub const DEFAULT_WINDOW: u32 = 12;
/// Largest cohomology group searched exhaustively for an unknown Bockstein target.
const MAX_BRANCH_DIM: usize = 6;

fn default_base() -> String {
    "S4HZ".into()
}

fn default_window() -> u32 {
    DEFAULT_WINDOW
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TowerSpec {
    pub prime: u32,
    #[serde(default = "default_base")]
    pub base: String,
    /// Highest degree reported.
    #[serde(default = "default_window")]
    pub window: u32,
    #[serde(default, rename = "stage")]
    pub stages: Vec<StageSpec>,
    #[serde(default, rename = "relation")]
    pub relations: Vec<RelationSpec>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageSpec {
    /// Name of the stage this k-invariant produces.
    pub name: String,
    pub degree: u32,
    pub coefficients: String,
    /// `<ops> r<p>` on the base class, or `fiber:<ops>` for the class restricting to that
    /// operation on the previous fiber.
    pub k_invariant: String,
    /// Name printed in reports.
    pub label: String,
    #[serde(default)]
    pub lift: Option<LiftSpec>,
    #[serde(default)]
    pub note: Option<String>,
}

/// Coefficient lift taken as input rather than derived.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LiftSpec {
    pub order: u64,
    pub provenance: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelationSpec {
    pub stage: String,
    pub class: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum KExpr {
    Base { word: Vec<u32> },
    /// Sum of (generator, word, coefficient) on the previous fiber.
    Fiber { terms: Vec<(usize, Vec<u32>, u32)> },
}

impl KExpr {
    pub fn parse(text: &str, f: PrimeField) -> Result<KExpr> {
        let text = text.trim();
        if let Some(op) = text.strip_prefix("fiber:") {
            let op = op.trim();
            if op == "i" {
                return Ok(KExpr::Fiber { terms: vec![(0, Vec::new(), 1)] });
            }
            let e = parse_element(op, Some(f))?;
            let mut terms = Vec::new();
            for (m, c) in e.terms() {
                let gen = match m.tail() {
                    Tail::None => 0,
                    Tail::Bockstein(_) => 1,
                    Tail::Reduction => return Err(Error::Spec(format!("fiber expression {op:?} carries a reduction"))),
                };
                terms.push((gen, m.word().to_vec(), c));
            }
            if terms.is_empty() {
                return Err(Error::Spec(format!("fiber expression {op:?} is zero")));
            }
            return Ok(KExpr::Fiber { terms });
        }
        let m = parse_monomial(text, Some(f))?;
        if m.tail() != Tail::Reduction {
            return Err(Error::Spec(format!("base expression {text:?} must end in r{}", f.p())));
        }
        Ok(KExpr::Base { word: m.word().to_vec() })
    }
}

impl TowerSpec {
    pub fn field(&self) -> Result<PrimeField> {
        PrimeField::new(self.prime)
    }

    fn base_target(&self) -> Result<(CoefficientGroup, u32)> {
        match Target::from_str(&self.base)? {
            Target::Spectrum { coeff: CoefficientGroup::Integers, shift } => Ok((CoefficientGroup::Integers, shift)),
            _ => Err(Error::Spec(format!("base {:?} must be an integral Eilenberg-MacLane spectrum", self.base))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let f = self.field()?;
        let (_, shift) = self.base_target()?;
        let mut last = 0;
        let mut names: Vec<&str> = vec!["base"];
        for s in &self.stages {
            if names.contains(&s.name.as_str()) {
                return Err(Error::Spec(format!("duplicate stage name {:?}", s.name)));
            }
            names.push(&s.name);
            if s.degree <= shift || s.degree < last {
                return Err(Error::Spec(format!("stage {}: degree {} out of order", s.name, s.degree)));
            }
            last = s.degree;
            let coeff = CoefficientGroup::from_str(&s.coefficients)?;
            let m = coeff.p_valuation(f.p()).unwrap_or(0);
            if m == 0 || coeff.order() != Some((f.p() as u64).pow(m)) {
                return Err(Error::Spec(format!("stage {}: {} is not a nontrivial {}-group", s.name, coeff, f.p())));
            }
            match (&s.lift, m) {
                (None, 1) => {}
                (Some(l), m) if m >= 2 => {
                    if Some(l.order) != coeff.order() {
                        return Err(Error::Spec(format!("stage {}: lift order {} does not match {}", s.name, l.order, coeff)));
                    }
                    if !l.provenance.starts_with("external:") || l.provenance.len() <= "external:".len() {
                        return Err(Error::Spec(format!("stage {}: lift provenance must read \"external: ...\"", s.name)));
                    }
                }
                (None, _) => return Err(Error::Spec(format!("stage {}: {} needs declared lift metadata", s.name, coeff))),
                (Some(_), _) => return Err(Error::Spec(format!("stage {}: lift metadata on a mod-p stage", s.name))),
            }
            KExpr::parse(&s.k_invariant, f)?;
        }
        for r in &self.relations {
            if !names.contains(&r.stage.as_str()) {
                return Err(Error::Spec(format!("relation on unknown stage {:?}", r.stage)));
            }
            KExpr::parse(&r.class, f)?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
struct TowerState {
    stages: Vec<StageModule>,
    fibers: Vec<Option<StageModule>>,
    exactness: Vec<Vec<ExactnessRecord>>,
    echoes: Vec<KInvariantEcho>,
    unknowns: Unknowns,
    substitution: BTreeMap<u32, Poly>,
    residual: Vec<Poly>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KInvariantEcho {
    /// Stage the class lives on.
    pub stage: String,
    /// Stage it produces.
    pub produces: String,
    pub label: String,
    pub expression: String,
    pub degree: u32,
    pub coefficients: String,
    pub class: String,
    pub lift: Option<LiftSpec>,
    /// Facts verified about the class, in words.
    pub checks: Vec<String>,
    /// Candidates for the transgression of the higher Bockstein class, when one is needed.
    pub branches: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageSummary {
    pub name: String,
    pub top: u32,
    pub dims: Vec<usize>,
    pub labels: Vec<Vec<String>>,
    /// Fiber restriction of each detected class, as `label -> restriction`.
    pub restrictions: Vec<(String, String)>,
    /// First degree above the base degree with nonzero cohomology, within the window.
    pub deviation: Option<u32>,
    pub fiber: Option<String>,
    pub undetermined: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationResult {
    pub stage: String,
    pub class: String,
    pub value: String,
    pub vanishes: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TowerReport {
    pub prime: u32,
    pub base: String,
    pub window: u32,
    pub stages: Vec<StageSummary>,
    pub k_invariants: Vec<KInvariantEcho>,
    pub relations: Vec<RelationResult>,
    pub exactness: Vec<Vec<ExactnessRecord>>,
    /// Number of consistent branches that were run and agreed.
    pub branches: usize,
}

fn resolve(state: &TowerState, i: usize, expr: &KExpr) -> Result<Vector> {
    match expr {
        KExpr::Base { word } => {
            let mut v = state.stages[0].free_element(0, word)?;
            for k in 1..=i {
                v = state.stages[k].pullback(&state.stages[k - 1], &v)?;
            }
            Ok(v)
        }
        KExpr::Fiber { terms } => {
            let fiber = state.fibers[i]
                .as_ref()
                .ok_or_else(|| Error::Spec("fiber expression on the base".into()))?;
            let x = &state.stages[i];
            let mut fv = Vector::new();
            for (gen, word, c) in terms {
                for (id, k) in fiber.free_element(*gen, word)? {
                    crate::stage::add_to(x.prime(), &mut fv, id, &k.scaled(x.prime(), *c));
                }
            }
            let Some((&first, _)) = fv.iter().next() else {
                return Err(Error::Spec("fiber expression is zero".into()));
            };
            let d = fiber.class(first).degree;
            let target = fiber.numeric(&fv, d)?;
            let kernel: Vec<usize> = x.basis(d).iter().copied().filter(|&c| x.restriction(c).is_some()).collect();
            let images: Vec<Vec<u32>> = kernel.iter().map(|&c| x.restriction(c).expect("kernel class").to_vec()).collect();
            let comb = crate::fp::solve(x.prime(), &images, &target).ok_or_else(|| {
                Error::Spec(format!("{} is not the restriction of a class of {}", fiber.render(&fv), x.name))
            })?;
            let mut v = Vector::new();
            for (j, c) in comb.iter().enumerate() {
                if *c != 0 {
                    v.insert(kernel[j], Poly::constant(x.prime(), *c));
                }
            }
            Ok(v)
        }
    }
}

fn degree_of(m: &StageModule, v: &Vector) -> Option<u32> {
    v.keys().next().map(|&c| m.class(c).degree)
}

fn beta_token(f: PrimeField) -> u32 {
    if f.is_two() {
        1
    } else {
        BETA
    }
}

fn nonzero_vectors(f: PrimeField, dim: usize) -> Vec<Vec<u32>> {
    // first nonzero coordinate normalized to 1
    let p = f.p() as u64;
    let total = p.pow(dim as u32);
    (1..total)
        .map(|mut k| {
            let mut v = vec![0; dim];
            for x in v.iter_mut() {
                *x = (k % p) as u32;
                k /= p;
            }
            v
        })
        .filter(|v| v.iter().find(|&&x| x != 0) == Some(&1))
        .collect()
}

fn step(spec: &TowerSpec, mut state: TowerState, i: usize, tau: Vec<Vector>, coeff: CoefficientGroup) -> Result<TowerState> {
    let s = &spec.stages[i];
    let f = spec.field()?;
    let x = &state.stages[i];
    let fiber = StageModule::free(&format!("F{}", s.name), f, x.top() - 1, em_generators(coeff, s.degree - 1, f));
    let (next, log) = les_next_stage(x, &fiber, &tau, &s.name, &mut state.unknowns)?;
    let all: Vec<usize> = (0..next.classes().len()).collect();
    let mut eqs = adem_constraints(&next, &all)?;
    eqs.append(&mut state.residual);
    let sol = eliminate(f, eqs, state.substitution.clone())?;
    state.substitution = sol.substitution;
    state.residual = sol.residual;
    state.stages.push(next);
    state.fibers.push(Some(fiber));
    state.exactness.push(log);
    for m in state.stages.iter_mut() {
        m.substitute(&state.substitution);
    }
    Ok(state)
}

fn run_from(spec: &TowerSpec, state: TowerState, i: usize) -> Result<Vec<TowerState>> {
    if i == spec.stages.len() {
        return Ok(vec![state]);
    }
    let f = spec.field()?;
    let s = &spec.stages[i];
    let x = &state.stages[i];
    let expr = KExpr::parse(&s.k_invariant, f)?;
    let theta = resolve(&state, i, &expr)?;
    if theta.is_empty() {
        return Err(Error::Spec(format!("k-invariant {} ({}) is zero on {}", s.label, s.k_invariant, x.name)));
    }
    let d = degree_of(x, &theta).expect("nonzero");
    if d != s.degree {
        return Err(Error::DegreeMismatch { expected: s.degree as i64, found: d as i64 });
    }
    x.numeric(&theta, d)?;
    let coeff = CoefficientGroup::from_str(&s.coefficients)?;
    let m = coeff.p_valuation(f.p()).unwrap_or(0);
    let mut echo = KInvariantEcho {
        stage: x.name.clone(),
        produces: s.name.clone(),
        label: s.label.clone(),
        expression: s.k_invariant.clone(),
        degree: d,
        coefficients: coeff.to_string(),
        class: x.render(&theta),
        lift: s.lift.clone(),
        checks: vec![format!("{} = {} is nonzero in degree {d}", s.label, x.render(&theta))],
        branches: 1,
    };
    let mut branches: Vec<Vec<Vector>> = Vec::new();
    if m == 1 {
        branches.push(vec![theta]);
    } else {
        let b = x.act_vector(beta_token(f), &theta)?;
        if !b.is_empty() {
            return Err(Error::Spec(format!("{}: the Bockstein of {} is {}, so it has no {} lift", s.name, x.render(&theta), x.render(&b), coeff)));
        }
        echo.checks.push(format!("{} of {} is zero", crate::stage::token_label(f, beta_token(f)), x.render(&theta)));
        let dim = x.dim(d + 1);
        if dim > MAX_BRANCH_DIM {
            return Err(Error::Undetermined(format!("{}: {dim} candidates for the higher Bockstein target", s.name)));
        }
        for psi in nonzero_vectors(f, dim) {
            let pv = x.from_dense(d + 1, &psi);
            let bp = x.act_vector(beta_token(f), &pv)?;
            if x.numeric(&bp, d + 2)?.iter().all(|&c| c == 0) {
                branches.push(vec![theta.clone(), pv]);
            }
        }
        if branches.is_empty() {
            return Err(Error::Inconsistent(format!("{}: no class can receive the higher Bockstein", s.name)));
        }
        echo.branches = branches.len();
    }
    let mut state = state;
    state.echoes.push(echo);
    let results = crate::par::map_par(&branches, |tau| -> Result<Vec<TowerState>> {
        match step(spec, state.clone(), i, tau.clone(), coeff) {
            Ok(st) => run_from(spec, st, i + 1),
            Err(Error::Inconsistent(_)) => Ok(Vec::new()),
            Err(e) => Err(e),
        }
    });
    let mut out = Vec::new();
    for r in results {
        out.extend(r?);
    }
    Ok(out)
}

fn summarize(spec: &TowerSpec, state: &TowerState) -> Result<TowerReport> {
    let (_, shift) = spec.base_target()?;
    let f = spec.field()?;
    let mut stages = Vec::new();
    for (k, m) in state.stages.iter().enumerate() {
        let rows = spec.window.min(m.top());
        let dims: Vec<usize> = (0..=rows).map(|d| m.dim(d)).collect();
        let labels: Vec<Vec<String>> =
            (0..=rows).map(|d| m.basis(d).iter().map(|&c| m.class(c).label.clone()).collect()).collect();
        let mut restrictions = Vec::new();
        if let Some(fib) = &state.fibers[k] {
            for d in 0..=rows {
                for &c in m.basis(d) {
                    if let Some(r) = m.restriction(c) {
                        restrictions.push((m.class(c).label.clone(), fib.render(&fib.from_dense(d, r))));
                    }
                }
            }
        }
        let deviation = (shift + 1..=rows).find(|&d| m.dim(d) > 0);
        let fiber = (k > 0).then(|| {
            let s = &spec.stages[k - 1];
            format!("S{}H{}", s.degree - 1, s.coefficients)
        });
        stages.push(StageSummary {
            name: if k == 0 { spec.base.clone() } else { m.name.clone() },
            top: m.top(),
            dims,
            labels,
            restrictions,
            deviation,
            fiber,
            undetermined: m.undetermined_actions(),
        });
    }
    let mut relations = Vec::new();
    for r in &spec.relations {
        let i = if r.stage == "base" {
            0
        } else {
            spec.stages.iter().position(|s| s.name == r.stage).expect("validated") + 1
        };
        let v = resolve(state, i, &KExpr::parse(&r.class, f)?)?;
        let determined = v.values().all(|c| c.as_constant().is_some());
        if !determined {
            return Err(Error::Undetermined(format!("relation {} on {}", r.class, r.stage)));
        }
        relations.push(RelationResult {
            stage: r.stage.clone(),
            class: r.class.clone(),
            value: state.stages[i].render(&v),
            vanishes: v.is_empty(),
        });
    }
    Ok(TowerReport {
        prime: f.p(),
        base: spec.base.clone(),
        window: spec.window,
        stages,
        k_invariants: state.echoes.clone(),
        relations,
        exactness: state.exactness.clone(),
        branches: 1,
    })
}

/// Matrix of the transgression F^d -> B^{d+1}: one row per fiber basis class, coordinates over
/// the basis of `base` in degree d + 1. `tau` holds the image of each fiber generator.
pub fn transgression_map(base: &StageModule, fiber: &StageModule, tau: &[Vector], d: u32) -> Result<Vec<Vec<u32>>> {
    let mut rows = Vec::new();
    for &c in fiber.basis(d) {
        let crate::stage::Origin::Free { gen, word } = &fiber.class(c).origin else {
            return Err(Error::Spec(format!("{} is not a free fiber class", fiber.class(c).label)));
        };
        let theta = tau.get(*gen).ok_or_else(|| Error::Spec(format!("no transgression given for generator {gen}")))?;
        let img = base.act_word(word, theta)?;
        rows.push(base.numeric(&img, d + 1)?);
    }
    Ok(rows)
}

/// Runs every stage of the spec. Unknown Bockstein targets are enumerated; all consistent
/// choices must give the same report.
pub fn run_stable_tower(spec: &TowerSpec) -> Result<TowerReport> {
    spec.validate()?;
    let f = spec.field()?;
    let (coeff, shift) = spec.base_target()?;
    let base_top = spec.window + 1 + spec.stages.len() as u32;
    let base = StageModule::free(&spec.base, f, base_top, em_generators(coeff, shift, f));
    let state = TowerState {
        stages: vec![base],
        fibers: vec![None],
        exactness: Vec::new(),
        echoes: Vec::new(),
        unknowns: Unknowns::default(),
        substitution: BTreeMap::new(),
        residual: Vec::new(),
    };
    let outcomes = run_from(spec, state, 0)?;
    let reports: Vec<TowerReport> = outcomes.iter().map(|s| summarize(spec, s)).collect::<Result<_>>()?;
    let Some(first) = reports.first() else {
        return Err(Error::Inconsistent("no consistent choice of higher Bockstein targets".into()));
    };
    let key = |r: &TowerReport| (r.stages.iter().map(|s| (s.dims.clone(), s.labels.clone())).collect::<Vec<_>>(), r.relations.clone());
    if let Some(other) = reports.iter().find(|r| key(r) != key(first)) {
        let at = first
            .stages
            .iter()
            .zip(&other.stages)
            .find(|(a, b)| a.dims != b.dims || a.labels != b.labels)
            .map_or("relations".to_string(), |(a, _)| a.name.clone());
        return Err(Error::Undetermined(format!("branches for the higher Bockstein targets disagree at {at}")));
    }
    let mut report = first.clone();
    report.branches = reports.len();
    Ok(report)
}

impl TowerReport {
    /// Report cells by degree for each stage: the base-degree classes, the next k-invariant at
    /// the first deviating degree and `*` above it.
    pub fn columns(&self) -> Vec<(String, Vec<String>)> {
        let mut out = Vec::new();
        for (k, s) in self.stages.iter().enumerate() {
            let mut cells = vec![String::new(); self.window as usize + 1];
            let base_degree = self.stages[0].dims.iter().position(|&d| d > 0).unwrap_or(0);
            if let Some(ls) = s.labels.get(base_degree) {
                cells[base_degree] = ls.join(", ");
            }
            if let Some(dev) = s.deviation {
                let echo = self.k_invariants.get(k).filter(|e| e.degree == dev);
                cells[dev as usize] = match echo {
                    Some(e) => e.label.clone(),
                    None => s.labels[dev as usize].join(", "),
                };
                for c in cells.iter_mut().skip(dev as usize + 1) {
                    *c = "*".into();
                }
            }
            out.push((s.name.clone(), cells));
        }
        out
    }
}

/// Side-by-side table of several tower reports, one row per degree.
pub fn postnikov_table(id: &str, parts: &[(&TowerReport, Option<&str>)]) -> Table {
    let mut header = vec!["n".to_string()];
    let mut cols: Vec<Vec<String>> = Vec::new();
    let rows = parts.iter().map(|(r, _)| r.window).max().unwrap_or(0);
    for (report, base_name) in parts {
        for (k, (name, cells)) in report.columns().into_iter().enumerate() {
            header.push(if k == 0 { base_name.map_or(name.clone(), str::to_string) } else { name });
            cols.push(cells);
        }
    }
    let mut t = Table { id: id.to_string(), header, rows: Vec::new() };
    for n in 0..=rows as usize {
        let mut row = vec![n.to_string()];
        for c in &cols {
            row.push(c.get(n).cloned().unwrap_or_default());
        }
        t.rows.push(row);
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(prime: u32, stages: &[(&str, u32, &str, &str)]) -> TowerSpec {
        TowerSpec {
            prime,
            base: "S4HZ".into(),
            window: 12,
            stages: stages
                .iter()
                .map(|(n, d, c, k)| StageSpec {
                    name: n.to_string(),
                    degree: *d,
                    coefficients: c.to_string(),
                    k_invariant: k.to_string(),
                    label: k.to_string(),
                    lift: None,
                    note: None,
                })
                .collect(),
            relations: Vec::new(),
        }
    }

    #[test]
    fn empty_spec_is_the_base() {
        let r = run_stable_tower(&spec(2, &[])).unwrap();
        assert_eq!(r.stages.len(), 1);
        assert_eq!(r.stages[0].deviation, Some(6));
        assert_eq!(r.stages[0].labels[6], vec!["Sq2 r2"]);
    }

    #[test]
    fn first_stage_detects_alpha7() {
        let r = run_stable_tower(&spec(2, &[("X1", 6, "Z2", "Sq2 r2")])).unwrap();
        let x1 = &r.stages[1];
        assert_eq!(x1.dims[5], 0);
        assert_eq!(x1.dims[6], 0);
        assert_eq!(x1.dims[7], 1);
        assert_eq!(x1.restrictions[0], ("X1_7".to_string(), "Sq2".to_string()));
    }

    #[test]
    fn zero_k_invariant_is_a_spec_error() {
        let e = run_stable_tower(&spec(2, &[("X1", 5, "Z2", "Sq1 r2")])).unwrap_err();
        assert!(matches!(e, Error::Spec(_) | Error::Parse { .. }), "{e}");
    }

    #[test]
    fn transgression_of_the_first_fiber() {
        let f = PrimeField::new(2).unwrap();
        let base = StageModule::free("B", f, 10, em_generators(CoefficientGroup::Integers, 4, f));
        let fiber = StageModule::free("F", f, 9, em_generators(CoefficientGroup::Cyclic(2), 5, f));
        let theta = base.free_element(0, &[2]).unwrap();
        // F^6 = {Sq1}, B^7 = {Sq3 r2}
        assert_eq!(transgression_map(&base, &fiber, &[theta.clone()], 6).unwrap(), vec![vec![1]]);
        // F^7 = {Sq2}
        assert_eq!(transgression_map(&base, &fiber, &[theta], 7).unwrap(), vec![vec![0]]);
    }

    #[test]
    fn exactness_accounting() {
        let s = spec(2, &[("X1", 6, "Z2", "Sq2 r2"), ("X2", 7, "Z2", "fiber:Sq2")]);
        let r = run_stable_tower(&s).unwrap();
        for log in &r.exactness {
            for e in log {
                assert_eq!(e.stage_dim, e.base_dim - e.image_rank + e.kernel_dim, "degree {}", e.degree);
                assert!(e.kernel_dim <= e.fiber_dim);
            }
        }
    }

    #[test]
    fn lift_metadata_required() {
        let s = spec(2, &[("X1", 6, "Z4", "Sq2 r2")]);
        assert!(s.validate().is_err());
    }
}
