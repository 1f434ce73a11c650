//! Integral towers from prime-local ones, checked against the homotopy-group table.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tower::TowerReport;

/// Finitely generated abelian group: Z^free_rank x Z/t1 x Z/t2 x ...
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AbelianGroup {
    pub free_rank: u32,
    pub torsion: Vec<u64>,
}

impl AbelianGroup {
    pub fn trivial() -> Self {
        AbelianGroup { free_rank: 0, torsion: Vec::new() }
    }

    pub fn is_trivial(&self) -> bool {
        self.free_rank == 0 && self.torsion.is_empty()
    }

    pub fn torsion_order(&self) -> u64 {
        self.torsion.iter().product()
    }

    /// Prime-power cyclic factors, sorted.
    pub fn primary_parts(&self) -> Vec<u64> {
        let mut out = Vec::new();
        for &t in &self.torsion {
            let mut n = t;
            let mut q = 2;
            while n > 1 {
                if n % q == 0 {
                    let mut pp = 1;
                    while n % q == 0 {
                        n /= q;
                        pp *= q;
                    }
                    out.push(pp);
                }
                q += 1;
            }
        }
        out.sort_unstable();
        out
    }

    pub fn isomorphic(&self, other: &AbelianGroup) -> bool {
        self.free_rank == other.free_rank && self.primary_parts() == other.primary_parts()
    }

    pub fn product(parts: &[AbelianGroup]) -> AbelianGroup {
        AbelianGroup {
            free_rank: parts.iter().map(|g| g.free_rank).sum(),
            torsion: parts.iter().flat_map(|g| g.torsion.iter().copied()).collect(),
        }
    }
}

impl FromStr for AbelianGroup {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        let bad = |why: &str| Error::parse(s, 0, why.to_string());
        if t == "0" {
            return Ok(AbelianGroup::trivial());
        }
        let mut g = AbelianGroup::trivial();
        for factor in t.split(['x', '×']) {
            let factor = factor.trim();
            let (base, times) = match factor.split_once('^') {
                Some((b, e)) => (b.trim(), e.trim().parse::<u32>().map_err(|_| bad("bad exponent"))?),
                None => (factor, 1),
            };
            let rest = base.strip_prefix('Z').ok_or_else(|| bad("factors must be Z or Zn"))?;
            for _ in 0..times {
                if rest.is_empty() {
                    g.free_rank += 1;
                } else {
                    let n: u64 = rest.parse().map_err(|_| bad("bad cyclic order"))?;
                    if n < 2 {
                        return Err(bad("cyclic order must exceed 1"));
                    }
                    g.torsion.push(n);
                }
            }
        }
        Ok(g)
    }
}

impl fmt::Display for AbelianGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_trivial() {
            return write!(f, "0");
        }
        let mut parts: Vec<String> = (0..self.free_rank).map(|_| "Z".to_string()).collect();
        parts.extend(self.torsion.iter().map(|t| format!("Z{t}")));
        write!(f, "{}", parts.join(" x "))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HomotopyTable {
    pub stable: BTreeMap<u32, AbelianGroup>,
    pub unstable: BTreeMap<u32, AbelianGroup>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTable {
    stable: BTreeMap<String, String>,
    unstable: BTreeMap<String, String>,
}

pub const DEFAULT_HOMOTOPY_TABLE: &str = include_str!("../../../data/homotopy.toml");

impl HomotopyTable {
    pub fn from_toml(text: &str) -> Result<Self> {
        let raw: RawTable = toml::from_str(text).map_err(|e| Error::Spec(format!("homotopy table: {e}")))?;
        let conv = |m: BTreeMap<String, String>| -> Result<BTreeMap<u32, AbelianGroup>> {
            m.into_iter()
                .map(|(k, v)| {
                    let n = k.parse().map_err(|_| Error::Spec(format!("homotopy table: degree {k:?}")))?;
                    Ok((n, v.parse()?))
                })
                .collect()
        };
        Ok(HomotopyTable { stable: conv(raw.stable)?, unstable: conv(raw.unstable)? })
    }

    pub fn builtin() -> Self {
        Self::from_toml(DEFAULT_HOMOTOPY_TABLE).expect("bundled table parses")
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrimePart {
    pub prime: u32,
    pub stage: String,
    pub label: String,
    pub coefficients: String,
    pub order: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntegralStage {
    pub name: String,
    /// Degree of the k-invariant; the fiber is Σ^(degree-1) H(Z/order).
    pub degree: u32,
    pub fiber_order: u64,
    pub parts: Vec<PrimePart>,
    /// k-invariant tuple on the previous integral stage.
    pub k_invariant: String,
    pub relations: Vec<String>,
}

impl IntegralStage {
    pub fn fiber(&self) -> String {
        format!("S{}HZ{}", self.degree - 1, self.fiber_order)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntegralSummary {
    pub base: String,
    pub stages: Vec<IntegralStage>,
}

impl IntegralSummary {
    pub fn orders(&self) -> Vec<u64> {
        self.stages.iter().map(|s| s.fiber_order).collect()
    }
}

/// Groups prime-local stages by k-invariant degree into integral stages W1, W2, ...
pub fn assemble_primes(towers: &[&TowerReport]) -> Result<IntegralSummary> {
    let Some(first) = towers.first() else {
        return Ok(IntegralSummary { base: String::new(), stages: Vec::new() });
    };
    if let Some(t) = towers.iter().find(|t| t.base != first.base) {
        return Err(Error::Spec(format!("towers over different bases: {} and {}", first.base, t.base)));
    }
    let mut by_degree: BTreeMap<u32, Vec<(PrimePart, bool)>> = BTreeMap::new();
    for t in towers {
        for k in &t.k_invariants {
            let coeff: crate::em::CoefficientGroup = k.coefficients.parse()?;
            let order = coeff.order().ok_or_else(|| Error::Spec(format!("integral fiber at {}", k.produces)))?;
            let on_base = k.stage == t.stages[0].name;
            by_degree.entry(k.degree).or_default().push((
                PrimePart { prime: t.prime, stage: k.produces.clone(), label: k.label.clone(), coefficients: k.coefficients.clone(), order },
                on_base,
            ));
        }
    }
    let mut stages = Vec::new();
    for (j, (degree, parts)) in by_degree.into_iter().enumerate() {
        let labels: Vec<String> = parts
            .iter()
            .map(|(p, on_base)| if *on_base && j > 0 { format!("p*{}", p.label) } else { p.label.clone() })
            .collect();
        let k_invariant = if labels.len() == 1 { labels[0].clone() } else { format!("({})", labels.join(", ")) };
        let parts: Vec<PrimePart> = parts.into_iter().map(|(p, _)| p).collect();
        stages.push(IntegralStage {
            name: format!("W{}", j + 1),
            degree,
            fiber_order: parts.iter().map(|p| p.order).product(),
            parts,
            k_invariant,
            relations: Vec::new(),
        });
    }
    for t in towers {
        for r in &t.relations {
            let Some(w) = stages.iter_mut().find(|w| w.parts.iter().any(|p| p.stage == r.stage && p.prime == t.prime)) else {
                continue;
            };
            w.relations.push(format!("p*{} = {}", r.class, r.value));
        }
    }
    Ok(IntegralSummary { base: first.base.clone(), stages })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Finding {
    pub degree: u32,
    pub message: String,
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n = {}: {}", self.degree, self.message)
    }
}

/// Compares each stage fiber Σ^n HA with π_n of the stable row. Mismatches are reported, not
/// corrected.
pub fn pi_consistency_check(summary: &IntegralSummary, table: &HomotopyTable) -> Vec<Finding> {
    let mut out = Vec::new();
    let base_degree = table.stable.iter().find(|(_, g)| g.free_rank > 0).map(|(&n, _)| n);
    for s in &summary.stages {
        let n = s.degree - 1;
        let Some(g) = table.stable.get(&n) else { continue };
        let implied = AbelianGroup { free_rank: 0, torsion: vec![s.fiber_order] };
        if !g.isomorphic(&implied) {
            out.push(Finding {
                degree: n,
                message: format!("table prints {g}, tower {} has fiber {} (order {})", s.name, s.fiber(), s.fiber_order),
            });
        }
    }
    for (&n, g) in &table.stable {
        if Some(n) == base_degree || g.is_trivial() {
            continue;
        }
        if !summary.stages.iter().any(|s| s.degree - 1 == n) {
            out.push(Finding { degree: n, message: format!("table prints {g} but no stage has a fiber in this degree") });
        }
    }
    out.sort_by_key(|f| f.degree);
    out
}

/// Fiber of one layer of an unstable tower: a product of K(A, n) with a common n.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnstableLayer {
    pub name: String,
    pub factors: Vec<(AbelianGroup, u32)>,
}

impl UnstableLayer {
    pub fn describe(&self) -> String {
        self.factors.iter().map(|(a, n)| format!("K({a},{n})")).collect::<Vec<_>>().join(" x ")
    }
}

/// A layer is consistent when each factor sits in one degree n and the product is π_n.
pub fn check_unstable_layer(layer: &UnstableLayer, table: &HomotopyTable) -> Vec<Finding> {
    let mut out = Vec::new();
    let mut degrees: Vec<u32> = layer.factors.iter().map(|f| f.1).collect();
    degrees.sort_unstable();
    degrees.dedup();
    for &n in &degrees {
        let g = AbelianGroup::product(&layer.factors.iter().filter(|f| f.1 == n).map(|f| f.0.clone()).collect::<Vec<_>>());
        match table.unstable.get(&n) {
            Some(t) if t.isomorphic(&g) && degrees.len() == 1 => {}
            Some(t) => out.push(Finding {
                degree: n,
                message: format!("{}: fiber {} gives {g} in degree {n}, table prints {t}", layer.name, layer.describe()),
            }),
            None => out.push(Finding { degree: n, message: format!("{}: degree {n} outside the table", layer.name) }),
        }
    }
    if degrees.len() > 1 {
        out.push(Finding {
            degree: degrees[0],
            message: format!("{}: fiber {} spans degrees {degrees:?}", layer.name, layer.describe()),
        });
    }
    out
}

/// W3 of the unstable tower: the k-invariant (Γ8, p*P1 r3, i4^2) on W2 has coefficients Z4, Z3, Z.
pub fn unstable_w3_from_k_invariants() -> UnstableLayer {
    UnstableLayer {
        name: "W3".into(),
        factors: vec![
            (AbelianGroup { free_rank: 0, torsion: vec![4] }, 7),
            (AbelianGroup { free_rank: 0, torsion: vec![3] }, 7),
            (AbelianGroup { free_rank: 1, torsion: vec![] }, 7),
        ],
    }
}

/// W3 as displayed in the unstable assembly diagram.
pub fn unstable_w3_as_displayed() -> UnstableLayer {
    UnstableLayer {
        name: "W3".into(),
        factors: vec![
            (AbelianGroup { free_rank: 0, torsion: vec![11] }, 8),
            (AbelianGroup { free_rank: 1, torsion: vec![] }, 7),
        ],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn group_parsing_round_trips() {
        for s in ["0", "Z", "Z2", "Z x Z12", "Z24 x Z3", "Z15"] {
            assert_eq!(s.parse::<AbelianGroup>().unwrap().to_string(), s);
        }
        assert_eq!("Z2^2".parse::<AbelianGroup>().unwrap().torsion, vec![2, 2]);
        assert!("Q".parse::<AbelianGroup>().is_err());
        assert!("Z1".parse::<AbelianGroup>().is_err());
    }

    #[test]
    fn isomorphism_uses_primary_parts() {
        let a: AbelianGroup = "Z24 x Z3".parse().unwrap();
        let b: AbelianGroup = "Z8 x Z3 x Z3".parse().unwrap();
        assert!(a.isomorphic(&b));
        assert!(!a.isomorphic(&"Z72".parse().unwrap()));
    }

    #[test]
    fn builtin_table() {
        let t = HomotopyTable::builtin();
        assert_eq!(t.stable[&11].torsion_order(), 240);
        assert_eq!(t.unstable[&7].to_string(), "Z x Z12");
        assert_eq!(t.stable.len(), 8);
    }

    #[test]
    fn unstable_w3() {
        let t = HomotopyTable::builtin();
        assert!(check_unstable_layer(&unstable_w3_from_k_invariants(), &t).is_empty());
        assert!(!check_unstable_layer(&unstable_w3_as_displayed(), &t).is_empty());
    }

    #[test]
    fn empty_assembly() {
        let s = assemble_primes(&[]).unwrap();
        assert!(s.stages.is_empty());
        let t = HomotopyTable { stable: BTreeMap::new(), unstable: BTreeMap::new() };
        assert!(pi_consistency_check(&s, &t).is_empty());
    }
}
