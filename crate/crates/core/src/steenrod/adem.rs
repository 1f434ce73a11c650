//! Adem relations on words and enumeration of admissible sequences.
//!
//! A word is a composite read left to right, applied right to left. At p = 2 its entries
//! are the indices of squares. At odd p the entry 0 stands for the Bockstein and s > 0
//! for the reduced power P^s.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, OnceLock, RwLock};

use crate::fp::PrimeField;

pub type Word = Vec<u32>;
pub type Combination = Arc<Vec<(Word, u32)>>;

type Cache = RwLock<HashMap<(u32, Word), Combination>>;

fn cache() -> &'static Cache {
    static CACHE: OnceLock<Cache> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

pub const BETA: u32 = 0;

pub fn word_degree(f: PrimeField, w: &[u32]) -> u32 {
    let p = f.p();
    if p == 2 {
        w.iter().sum()
    } else {
        w.iter().map(|&t| if t == BETA { 1 } else { 2 * (p - 1) * t }).sum()
    }
}

/// Degree-indexed form: at odd p a Bockstein is merged with the power to its right.
pub fn word_to_sequence(f: PrimeField, w: &[u32]) -> Vec<u32> {
    let p = f.p();
    if p == 2 {
        return w.to_vec();
    }
    let mut out = Vec::with_capacity(w.len());
    let mut i = 0;
    while i < w.len() {
        if w[i] == BETA {
            if i + 1 < w.len() && w[i + 1] != BETA {
                out.push(2 * (p - 1) * w[i + 1] + 1);
                i += 2;
            } else {
                out.push(1);
                i += 1;
            }
        } else {
            out.push(2 * (p - 1) * w[i]);
            i += 1;
        }
    }
    out
}

/// Inverse of [`word_to_sequence`]; None if an entry is not of the form 2(p-1)s + e, e in {0,1}.
pub fn sequence_to_word(f: PrimeField, seq: &[u32]) -> Option<Word> {
    let p = f.p();
    if seq.iter().any(|&i| i == 0) {
        return None;
    }
    if p == 2 {
        return Some(seq.to_vec());
    }
    let q = 2 * (p - 1);
    let mut w = Vec::new();
    for &i in seq {
        let e = i % q;
        if e > 1 {
            return None;
        }
        if e == 1 {
            w.push(BETA);
        }
        if i / q > 0 {
            w.push(i / q);
        }
    }
    Some(w)
}

pub fn sequence_is_admissible(f: PrimeField, seq: &[u32]) -> bool {
    let p = f.p();
    let q = 2 * (p - 1);
    if p != 2 && seq.iter().any(|&i| i % q > 1) {
        return false;
    }
    seq.windows(2).all(|w| w[0] >= p * w[1])
}

pub fn sequence_excess(f: PrimeField, seq: &[u32]) -> i64 {
    match seq.first() {
        None => 0,
        Some(&i1) => {
            let p = f.p() as i64;
            let total: i64 = seq.iter().map(|&i| i as i64).sum();
            p * i1 as i64 - (p - 1) * total
        }
    }
}

/// Position of the first relation to apply, with the relation kind.
enum Redex {
    Admissible,
    Zero,
    PowerPower(usize),
    PowerBetaPower(usize),
}

fn find_redex(f: PrimeField, w: &[u32]) -> Redex {
    let p = f.p();
    if p == 2 {
        for j in 0..w.len().saturating_sub(1) {
            if w[j] < 2 * w[j + 1] {
                return Redex::PowerPower(j);
            }
        }
        return Redex::Admissible;
    }
    for j in 0..w.len().saturating_sub(1) {
        let (a, b) = (w[j], w[j + 1]);
        if a == BETA && b == BETA {
            return Redex::Zero;
        }
        if a != BETA && b != BETA && a < p * b {
            return Redex::PowerPower(j);
        }
        if a != BETA && b == BETA && j + 2 < w.len() && w[j + 2] != BETA && a <= p * w[j + 2] {
            return Redex::PowerBetaPower(j);
        }
    }
    Redex::Admissible
}

fn splice(w: &[u32], at: usize, len: usize, mid: &[u32]) -> Word {
    let mut out = Vec::with_capacity(w.len() + 1);
    out.extend_from_slice(&w[..at]);
    out.extend(mid.iter().copied().filter(|&t| t != u32::MAX));
    out.extend_from_slice(&w[at + len..]);
    out
}

/// One rewriting step: the words (with coefficients) replacing the redex.
fn rewrite(f: PrimeField, w: &[u32], redex: &Redex) -> Vec<(Word, u32)> {
    let p = f.p() as i64;
    let mut out = Vec::new();
    // u32::MAX marks a dropped P^0
    let pw = |s: i64| if s == 0 { u32::MAX } else { s as u32 };
    match *redex {
        Redex::Admissible | Redex::Zero => {}
        Redex::PowerPower(j) if p == 2 => {
            let (a, b) = (w[j] as i64, w[j + 1] as i64);
            for c in 0..=a / 2 {
                if f.binomial(b - c - 1, a - 2 * c) == 1 {
                    out.push((splice(w, j, 2, &[(a + b - c) as u32, pw(c)]), 1));
                }
            }
        }
        Redex::PowerPower(j) => {
            let (a, b) = (w[j] as i64, w[j + 1] as i64);
            for i in 0..=a / p {
                let c = f.mul(f.sign(a + i), f.binomial((p - 1) * (b - i) - 1, a - p * i));
                if c != 0 {
                    out.push((splice(w, j, 2, &[(a + b - i) as u32, pw(i)]), c));
                }
            }
        }
        Redex::PowerBetaPower(j) => {
            let (a, b) = (w[j] as i64, w[j + 2] as i64);
            for i in 0..=a / p {
                let c = f.mul(f.sign(a + i), f.binomial((p - 1) * (b - i), a - p * i));
                if c != 0 {
                    out.push((splice(w, j, 3, &[BETA, (a + b - i) as u32, pw(i)]), c));
                }
            }
            if a >= 1 {
                for i in 0..=(a - 1) / p {
                    let c = f.mul(f.sign(a + i - 1), f.binomial((p - 1) * (b - i) - 1, a - p * i - 1));
                    if c != 0 {
                        out.push((splice(w, j, 3, &[(a + b - i) as u32, BETA, pw(i)]), c));
                    }
                }
            }
        }
    }
    out
}

/// Admissible expansion of a word, sorted by degree-indexed sequence.
pub fn normalize_word(f: PrimeField, w: &[u32]) -> Combination {
    let key = (f.p(), w.to_vec());
    if let Some(hit) = cache().read().expect("adem cache poisoned").get(&key) {
        return hit.clone();
    }
    let redex = find_redex(f, w);
    let result: Vec<(Word, u32)> = match redex {
        Redex::Admissible => vec![(w.to_vec(), 1)],
        Redex::Zero => Vec::new(),
        _ => {
            let mut acc: BTreeMap<Vec<u32>, (Word, u32)> = BTreeMap::new();
            for (nw, c) in rewrite(f, w, &redex) {
                for (aw, ac) in normalize_word(f, &nw).iter() {
                    let entry = acc
                        .entry(word_to_sequence(f, aw))
                        .or_insert_with(|| (aw.clone(), 0));
                    entry.1 = f.add(entry.1, f.mul(c, *ac));
                }
            }
            acc.into_values().filter(|(_, c)| *c != 0).collect()
        }
    };
    let result = Arc::new(result);
    cache().write().expect("adem cache poisoned").insert(key, result.clone());
    result
}

/// All admissible degree-indexed sequences of total degree d, in lexicographic order.
pub fn admissible_sequences(f: PrimeField, d: u32) -> Vec<Vec<u32>> {
    fn go(f: PrimeField, rest: u32, cap: Option<u32>, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if rest == 0 {
            out.push(prefix.clone());
            return;
        }
        let p = f.p();
        let q = 2 * (p - 1);
        let hi = cap.map_or(rest, |c| c.min(rest));
        for i in 1..=hi {
            if p != 2 && i % q > 1 {
                continue;
            }
            prefix.push(i);
            go(f, rest - i, Some(i / p), prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    go(f, d, None, &mut Vec::new(), &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(p: u32) -> PrimeField {
        PrimeField::new(p).unwrap()
    }

    #[test]
    fn classic_relations_mod2() {
        let two = f(2);
        assert_eq!(*normalize_word(two, &[1, 2]), vec![(vec![3], 1)]);
        assert_eq!(*normalize_word(two, &[1, 1]), vec![]);
        assert_eq!(*normalize_word(two, &[3, 3]), vec![(vec![5, 1], 1)]);
        assert_eq!(*normalize_word(two, &[2, 2]), vec![(vec![3, 1], 1)]);
        assert_eq!(*normalize_word(two, &[2, 3]), vec![(vec![4, 1], 1), (vec![5], 1)]);
        assert_eq!(*normalize_word(two, &[4, 3]), vec![(vec![5, 2], 1)]);
    }

    #[test]
    fn odd_prime_relations() {
        let three = f(3);
        // P1 P1 = 2 P2
        assert_eq!(*normalize_word(three, &[1, 1]), vec![(vec![2], 2)]);
        assert_eq!(*normalize_word(three, &[BETA, BETA]), vec![]);
        // P1 b P1 = b P2 + P2 b
        let r = normalize_word(three, &[1, BETA, 1]);
        let seqs: Vec<_> = r.iter().map(|(w, c)| (word_to_sequence(three, w), *c)).collect();
        assert_eq!(seqs, vec![(vec![8, 1], 1), (vec![9], 1)]);
    }

    #[test]
    fn sequence_round_trip() {
        let three = f(3);
        for w in [vec![BETA, 1, BETA], vec![1, 1], vec![BETA, BETA], vec![2, BETA, 1]] {
            let s = word_to_sequence(three, &w);
            assert_eq!(sequence_to_word(three, &s).unwrap(), w);
        }
        assert!(sequence_to_word(three, &[2]).is_none());
    }

    #[test]
    fn enumeration_counts() {
        let two = f(2);
        assert_eq!(admissible_sequences(two, 7), vec![vec![4, 2, 1], vec![5, 2], vec![6, 1], vec![7]]);
        let three = f(3);
        assert_eq!(admissible_sequences(three, 5), vec![vec![4, 1], vec![5]]);
        assert_eq!(admissible_sequences(three, 6), vec![vec![5, 1]]);
        assert_eq!(admissible_sequences(two, 0), vec![Vec::<u32>::new()]);
    }

    #[test]
    fn excess_values() {
        let two = f(2);
        assert_eq!(sequence_excess(two, &[5, 2]), 3);
        assert_eq!(sequence_excess(two, &[6]), 6);
        assert_eq!(sequence_excess(two, &[]), 0);
        assert_eq!(sequence_excess(f(3), &[4, 1]), 2);
    }
}
