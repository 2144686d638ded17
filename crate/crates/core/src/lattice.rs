//! Integer boxes and `|j|_∞` shells of `Z^d`.

use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// A product of inclusive integer ranges, traversed row-major (last axis
/// fastest).
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IndexBox {
    pub lo: Vec<i64>,
    pub hi: Vec<i64>,
}

impl IndexBox {
    pub fn new(lo: Vec<i64>, hi: Vec<i64>) -> Result<Self> {
        if lo.is_empty() || lo.len() != hi.len() {
            return Err(Error::InvalidParams("index box bounds must have equal, nonzero length"));
        }
        if lo.iter().zip(&hi).any(|(l, h)| l > h) {
            return Err(Error::InvalidParams("index box has an empty axis"));
        }
        Ok(Self { lo, hi })
    }

    /// `[-r, r]^dim`.
    pub fn symmetric(dim: usize, r: i64) -> Self {
        Self { lo: vec![-r; dim], hi: vec![r; dim] }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn extent(&self, axis: usize) -> usize {
        (self.hi[axis] - self.lo[axis] + 1) as usize
    }

    pub fn len(&self) -> usize {
        (0..self.dim()).map(|a| self.extent(a)).product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, j: &[i64]) -> bool {
        j.len() == self.dim() && j.iter().zip(self.lo.iter().zip(&self.hi)).all(|(x, (l, h))| l <= x && x <= h)
    }

    pub fn linear(&self, j: &[i64]) -> Option<usize> {
        if !self.contains(j) {
            return None;
        }
        let mut idx = 0usize;
        for a in 0..self.dim() {
            idx = idx * self.extent(a) + (j[a] - self.lo[a]) as usize;
        }
        Some(idx)
    }

    pub fn point(&self, mut idx: usize) -> Vec<i64> {
        let d = self.dim();
        let mut j = vec![0i64; d];
        for a in (0..d).rev() {
            let e = self.extent(a);
            j[a] = self.lo[a] + (idx % e) as i64;
            idx /= e;
        }
        j
    }

    /// Visit every point in row-major order.
    pub fn for_each(&self, mut f: impl FnMut(&[i64])) {
        let mut j = self.lo.clone();
        loop {
            f(&j);
            if !advance(&mut j, &self.lo, &self.hi) {
                return;
            }
        }
    }

    /// Smallest box containing every `a + b` with `a ∈ self`, `b ∈ other`.
    pub fn minkowski(&self, other: &IndexBox) -> IndexBox {
        IndexBox {
            lo: self.lo.iter().zip(&other.lo).map(|(a, b)| a + b).collect(),
            hi: self.hi.iter().zip(&other.hi).map(|(a, b)| a + b).collect(),
        }
    }
}

fn advance(j: &mut [i64], lo: &[i64], hi: &[i64]) -> bool {
    for a in (0..j.len()).rev() {
        if j[a] < hi[a] {
            j[a] += 1;
            return true;
        }
        j[a] = lo[a];
    }
    false
}

/// Number of points with `|j|_∞ = n` in `Z^dim`.
pub fn shell_count(dim: usize, n: usize) -> usize {
    if n == 0 {
        return 1;
    }
    let outer = (2 * n + 1).pow(dim as u32);
    let inner = (2 * n - 1).pow(dim as u32);
    outer - inner
}

/// Visit the points with `|j|_∞ = n`, in row-major order of `[-n, n]^dim`.
pub fn for_each_in_shell(dim: usize, n: i64, mut f: impl FnMut(&[i64])) {
    if n == 0 {
        f(&vec![0; dim]);
        return;
    }
    let lo = vec![-n; dim];
    let hi = vec![n; dim];
    let mut j = lo.clone();
    loop {
        if j.iter().any(|&x| x == n || x == -n) {
            f(&j);
        }
        // Skip the interior of a row once the other coordinates are interior.
        let last = dim - 1;
        if dim > 1 && j[..last].iter().all(|&x| x.abs() < n) && j[last] == -n {
            j[last] = n;
            continue;
        }
        if !advance(&mut j, &lo, &hi) {
            return;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shell_counts_match_enumeration() {
        for dim in 1..=3 {
            for n in 0..5 {
                let mut c = 0;
                for_each_in_shell(dim, n as i64, |j| {
                    assert_eq!(j.iter().map(|x| x.abs()).max().unwrap(), n as i64);
                    c += 1;
                });
                assert_eq!(c, shell_count(dim, n), "dim={dim} n={n}");
            }
        }
    }

    #[test]
    fn linear_index_roundtrip() {
        let b = IndexBox::new(vec![-2, 3], vec![1, 5]).unwrap();
        assert_eq!(b.len(), 12);
        let mut k = 0;
        b.for_each(|j| {
            assert_eq!(b.linear(j), Some(k));
            assert_eq!(b.point(k), j);
            k += 1;
        });
        assert_eq!(b.linear(&[2, 3]), None);
    }
}
