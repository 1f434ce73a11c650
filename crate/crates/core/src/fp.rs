//! Arithmetic and dense linear algebra over a prime field.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct PrimeField {
    p: u32,
}

impl TryFrom<u32> for PrimeField {
    type Error = Error;
    fn try_from(p: u32) -> Result<Self> {
        PrimeField::new(p)
    }
}

impl From<PrimeField> for u32 {
    fn from(f: PrimeField) -> u32 {
        f.p
    }
}

pub fn is_prime(n: u32) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u32;
    while d.saturating_mul(d) <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

impl PrimeField {
    pub fn new(p: u32) -> Result<Self> {
        // products of two residues must fit in u64 comfortably
        if !is_prime(p) || p > 1 << 16 {
            return Err(Error::InvalidPrime(p));
        }
        Ok(PrimeField { p })
    }

    #[inline]
    pub fn p(self) -> u32 {
        self.p
    }

    #[inline]
    pub fn is_two(self) -> bool {
        self.p == 2
    }

    #[inline]
    pub fn add(self, a: u32, b: u32) -> u32 {
        (a + b) % self.p
    }

    #[inline]
    pub fn sub(self, a: u32, b: u32) -> u32 {
        (a + self.p - b) % self.p
    }

    #[inline]
    pub fn neg(self, a: u32) -> u32 {
        (self.p - a % self.p) % self.p
    }

    #[inline]
    pub fn mul(self, a: u32, b: u32) -> u32 {
        ((a as u64 * b as u64) % self.p as u64) as u32
    }

    pub fn pow(self, mut a: u32, mut e: u64) -> u32 {
        let mut r = 1 % self.p;
        a %= self.p;
        while e > 0 {
            if e & 1 == 1 {
                r = self.mul(r, a);
            }
            a = self.mul(a, a);
            e >>= 1;
        }
        r
    }

    pub fn inv(self, a: u32) -> u32 {
        assert!(a % self.p != 0, "inverse of zero in F_{}", self.p);
        self.pow(a, (self.p - 2) as u64)
    }

    pub fn reduce(self, v: i64) -> u32 {
        v.rem_euclid(self.p as i64) as u32
    }

    /// Sign (-1)^k as a residue.
    pub fn sign(self, k: i64) -> u32 {
        if k.rem_euclid(2) == 0 {
            1 % self.p
        } else {
            self.p - 1
        }
    }

    /// Binomial coefficient mod p by Lucas' theorem. Negative or out of range k gives 0.
    pub fn binomial(self, n: i64, k: i64) -> u32 {
        if n < 0 || k < 0 || k > n {
            return 0;
        }
        let p = self.p as i64;
        let (mut n, mut k) = (n, k);
        let mut r = 1u32;
        while n > 0 || k > 0 {
            let (nd, kd) = (n % p, k % p);
            if kd > nd {
                return 0;
            }
            r = self.mul(r, small_binomial(nd as u64, kd as u64, self));
            n /= p;
            k /= p;
        }
        r
    }

    pub fn add_assign_scaled(self, dst: &mut [u32], src: &[u32], c: u32) {
        if c == 0 {
            return;
        }
        for (d, s) in dst.iter_mut().zip(src) {
            if *s != 0 {
                *d = (*d + self.mul(*s, c)) % self.p;
            }
        }
    }

    pub fn scale(self, v: &mut [u32], c: u32) {
        for x in v.iter_mut() {
            *x = self.mul(*x, c);
        }
    }
}

fn small_binomial(n: u64, k: u64, f: PrimeField) -> u32 {
    let mut num = 1u32;
    let mut den = 1u32;
    for i in 0..k {
        num = f.mul(num, ((n - i) % f.p as u64) as u32);
        den = f.mul(den, ((i + 1) % f.p as u64) as u32);
    }
    f.mul(num, f.inv(den))
}

pub fn is_zero(v: &[u32]) -> bool {
    v.iter().all(|&x| x == 0)
}

/// Row-reduced subspace of F_p^n. Pivot of a row is its first nonzero coordinate.
#[derive(Clone, Debug)]
pub struct Subspace {
    field: PrimeField,
    ambient: usize,
    rows: Vec<Vec<u32>>,
    pivots: Vec<usize>,
}

impl Subspace {
    pub fn new(field: PrimeField, ambient: usize) -> Self {
        Subspace { field, ambient, rows: Vec::new(), pivots: Vec::new() }
    }

    pub fn spanned_by<'a, I: IntoIterator<Item = &'a Vec<u32>>>(
        field: PrimeField,
        ambient: usize,
        vectors: I,
    ) -> Self {
        let mut s = Subspace::new(field, ambient);
        for v in vectors {
            s.add(v.clone());
        }
        s
    }

    pub fn full(field: PrimeField, ambient: usize) -> Self {
        let mut s = Subspace::new(field, ambient);
        for i in 0..ambient {
            s.add(unit(ambient, i));
        }
        s
    }

    pub fn ambient(&self) -> usize {
        self.ambient
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn basis(&self) -> &[Vec<u32>] {
        &self.rows
    }

    pub fn pivots(&self) -> &[usize] {
        &self.pivots
    }

    /// Reduces `v` in place against the rows; the result is zero iff v was in the span.
    pub fn reduce(&self, v: &mut [u32]) {
        for (row, &pc) in self.rows.iter().zip(&self.pivots) {
            let c = v[pc];
            if c != 0 {
                self.field.add_assign_scaled(v, row, self.field.neg(c));
            }
        }
    }

    pub fn contains(&self, v: &[u32]) -> bool {
        let mut w = v.to_vec();
        self.reduce(&mut w);
        is_zero(&w)
    }

    /// Adds a vector; returns true if the dimension grew.
    pub fn add(&mut self, mut v: Vec<u32>) -> bool {
        debug_assert_eq!(v.len(), self.ambient);
        self.reduce(&mut v);
        let Some(pc) = v.iter().position(|&x| x != 0) else {
            return false;
        };
        let inv = self.field.inv(v[pc]);
        self.field.scale(&mut v, inv);
        for row in self.rows.iter_mut() {
            let c = row[pc];
            if c != 0 {
                self.field.add_assign_scaled(row, &v, self.field.neg(c));
            }
        }
        let at = self.pivots.partition_point(|&q| q < pc);
        self.rows.insert(at, v);
        self.pivots.insert(at, pc);
        true
    }

    pub fn sum(&self, other: &Subspace) -> Subspace {
        let mut s = self.clone();
        for v in &other.rows {
            s.add(v.clone());
        }
        s
    }

    /// Indices of standard basis vectors spanning a complement.
    pub fn complement_indices(&self) -> Vec<usize> {
        (0..self.ambient).filter(|i| !self.pivots.contains(i)).collect()
    }

    pub fn is_subspace_of(&self, other: &Subspace) -> bool {
        self.rows.iter().all(|r| other.contains(r))
    }
}

pub fn unit(n: usize, i: usize) -> Vec<u32> {
    let mut v = vec![0; n];
    v[i] = 1;
    v
}

/// Kernel of the linear map sending the i-th source basis vector to `images[i]`.
/// Returns a basis of the kernel in source coordinates.
pub fn kernel(field: PrimeField, images: &[Vec<u32>], target_dim: usize) -> Vec<Vec<u32>> {
    let n = images.len();
    let mut rows: Vec<Vec<u32>> = images
        .iter()
        .enumerate()
        .map(|(i, im)| {
            debug_assert_eq!(im.len(), target_dim);
            let mut r = im.clone();
            r.extend(unit(n, i));
            r
        })
        .collect();
    let mut rank = 0;
    for col in 0..target_dim {
        let Some(piv) = (rank..rows.len()).find(|&r| rows[r][col] != 0) else {
            continue;
        };
        rows.swap(rank, piv);
        let inv = field.inv(rows[rank][col]);
        field.scale(&mut rows[rank], inv);
        let prow = rows[rank].clone();
        for (r, row) in rows.iter_mut().enumerate() {
            if r != rank && row[col] != 0 {
                let c = field.neg(row[col]);
                field.add_assign_scaled(row, &prow, c);
            }
        }
        rank += 1;
    }
    let mut out: Vec<Vec<u32>> = rows[rank..].iter().map(|r| r[target_dim..].to_vec()).collect();
    // canonical form so callers see a deterministic basis
    let s = Subspace::spanned_by(field, n, out.iter());
    out = s.basis().to_vec();
    out
}

pub fn rank(field: PrimeField, vectors: &[Vec<u32>], ambient: usize) -> usize {
    Subspace::spanned_by(field, ambient, vectors.iter()).dim()
}

/// Finds c with sum c_i images[i] = target, if one exists.
pub fn solve(field: PrimeField, images: &[Vec<u32>], target: &[u32]) -> Option<Vec<u32>> {
    let n = images.len();
    let m = target.len();
    // track combinations alongside the echelon rows
    let mut rows: Vec<(Vec<u32>, Vec<u32>)> = Vec::new();
    let mut pivots: Vec<usize> = Vec::new();
    for (i, im) in images.iter().enumerate() {
        let mut v = im.clone();
        let mut comb = unit(n, i);
        for ((row, rc), &pc) in rows.iter().zip(&pivots) {
            let c = v[pc];
            if c != 0 {
                let nc = field.neg(c);
                field.add_assign_scaled(&mut v, row, nc);
                field.add_assign_scaled(&mut comb, rc, nc);
            }
        }
        if let Some(pc) = v.iter().position(|&x| x != 0) {
            let inv = field.inv(v[pc]);
            field.scale(&mut v, inv);
            field.scale(&mut comb, inv);
            rows.push((v, comb));
            pivots.push(pc);
        }
    }
    let mut t = target.to_vec();
    let mut result = vec![0u32; n];
    for ((row, rc), &pc) in rows.iter().zip(&pivots) {
        let c = t[pc];
        if c != 0 {
            field.add_assign_scaled(&mut t, row, field.neg(c));
            field.add_assign_scaled(&mut result, rc, c);
        }
    }
    debug_assert_eq!(t.len(), m);
    if is_zero(&t) {
        Some(result)
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lucas_binomials() {
        let f = PrimeField::new(3).unwrap();
        assert_eq!(f.binomial(4, 1), 1);
        assert_eq!(f.binomial(6, 3), 2); // 20
        assert_eq!(f.binomial(9, 3), 0);
        let f2 = PrimeField::new(2).unwrap();
        assert_eq!(f2.binomial(5, 2), 0);
        assert_eq!(f2.binomial(3, 2), 1);
        assert_eq!(f2.binomial(-1, 0), 0);
    }

    #[test]
    fn kernel_and_solve() {
        let f = PrimeField::new(3).unwrap();
        let images = vec![vec![1, 2], vec![2, 1], vec![0, 0]];
        let k = kernel(f, &images, 2);
        assert_eq!(k.len(), 2);
        for v in &k {
            let mut s = vec![0, 0];
            for (c, im) in v.iter().zip(&images) {
                f.add_assign_scaled(&mut s, im, *c);
            }
            assert!(is_zero(&s));
        }
        let c = solve(f, &images, &[2, 1]).unwrap();
        let mut s = vec![0, 0];
        for (k, im) in c.iter().zip(&images) {
            f.add_assign_scaled(&mut s, im, *k);
        }
        assert_eq!(s, vec![2, 1]);
        assert!(solve(f, &[vec![1, 1]], &[1, 0]).is_none());
    }

    #[test]
    fn subspace_complement() {
        let f = PrimeField::new(2).unwrap();
        let s = Subspace::spanned_by(f, 3, [vec![0, 1, 1]].iter());
        assert_eq!(s.complement_indices(), vec![0, 2]);
        assert!(s.contains(&[0, 1, 1]));
        assert!(!s.contains(&[0, 1, 0]));
    }

    #[test]
    fn rejects_composite() {
        assert!(PrimeField::new(4).is_err());
        assert!(PrimeField::new(5).is_ok());
    }
}
