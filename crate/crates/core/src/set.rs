//! Element sets over a dense ground set `0..n`.
//!
//! A set is a bitmask: one inline `u64` word when every member is below 64,
//! spilling to additional words above that. Trailing zero words are always
//! trimmed so that equal sets compare and hash equal. Iteration is in
//! ascending index order, which fixes tie-breaking everywhere downstream.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use smallvec::SmallVec;

const WORD: usize = 64;

#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct ElementSet {
    words: SmallVec<[u64; 1]>,
}

impl ElementSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// The full ground set `{0, .., n-1}`.
    pub fn full(n: usize) -> Self {
        let mut words: SmallVec<[u64; 1]> = SmallVec::from_elem(u64::MAX, n / WORD);
        if !n.is_multiple_of(WORD) {
            words.push((1u64 << (n % WORD)) - 1);
        }
        let mut s = Self { words };
        s.trim();
        s
    }

    pub fn singleton(e: usize) -> Self {
        let mut s = Self::new();
        s.insert(e);
        s
    }

    /// Builds the set whose members are the set bits of `mask`.
    pub fn from_mask(mask: u64) -> Self {
        let mut s = Self {
            words: SmallVec::from_elem(mask, 1),
        };
        s.trim();
        s
    }

    /// The low 64 bits as a mask. Only meaningful when every member is below 64.
    pub fn to_mask(&self) -> u64 {
        self.words.first().copied().unwrap_or(0)
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn insert(&mut self, e: usize) -> bool {
        let (w, b) = (e / WORD, e % WORD);
        if self.words.len() <= w {
            self.words.resize(w + 1, 0);
        }
        let had = self.words[w] & (1 << b) != 0;
        self.words[w] |= 1 << b;
        !had
    }

    pub fn remove(&mut self, e: usize) -> bool {
        let (w, b) = (e / WORD, e % WORD);
        if w >= self.words.len() {
            return false;
        }
        let had = self.words[w] & (1 << b) != 0;
        self.words[w] &= !(1 << b);
        self.trim();
        had
    }

    pub fn contains(&self, e: usize) -> bool {
        let (w, b) = (e / WORD, e % WORD);
        w < self.words.len() && self.words[w] & (1 << b) != 0
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Largest member, if any.
    pub fn max_element(&self) -> Option<usize> {
        let last = *self.words.last()?;
        Some((self.words.len() - 1) * WORD + (WORD - 1 - last.leading_zeros() as usize))
    }

    pub fn iter(&self) -> Iter<'_> {
        Iter {
            words: &self.words,
            idx: 0,
            cur: self.words.first().copied().unwrap_or(0),
        }
    }

    /// A copy of `self` with `e` added.
    pub fn with(&self, e: usize) -> Self {
        let mut s = self.clone();
        s.insert(e);
        s
    }

    /// A copy of `self` with `e` removed.
    pub fn without(&self, e: usize) -> Self {
        let mut s = self.clone();
        s.remove(e);
        s
    }

    pub fn union(&self, other: &Self) -> Self {
        let (long, short) = if self.words.len() >= other.words.len() {
            (self, other)
        } else {
            (other, self)
        };
        let mut words = long.words.clone();
        for (a, b) in words.iter_mut().zip(short.words.iter()) {
            *a |= b;
        }
        Self { words }
    }

    pub fn intersection(&self, other: &Self) -> Self {
        let words = self
            .words
            .iter()
            .zip(other.words.iter())
            .map(|(a, b)| a & b)
            .collect();
        let mut s = Self { words };
        s.trim();
        s
    }

    pub fn difference(&self, other: &Self) -> Self {
        let mut words = self.words.clone();
        for (a, b) in words.iter_mut().zip(other.words.iter()) {
            *a &= !b;
        }
        let mut s = Self { words };
        s.trim();
        s
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.words.iter().enumerate().all(|(i, &a)| {
            let b = other.words.get(i).copied().unwrap_or(0);
            a & !b == 0
        })
    }

    pub fn to_vec(&self) -> Vec<usize> {
        self.iter().collect()
    }

    fn trim(&mut self) {
        while self.words.last() == Some(&0) {
            self.words.pop();
        }
    }
}

pub struct Iter<'a> {
    words: &'a [u64],
    idx: usize,
    cur: u64,
}

impl Iterator for Iter<'_> {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        loop {
            if self.cur != 0 {
                let b = self.cur.trailing_zeros() as usize;
                self.cur &= self.cur - 1;
                return Some(self.idx * WORD + b);
            }
            self.idx += 1;
            if self.idx >= self.words.len() {
                return None;
            }
            self.cur = self.words[self.idx];
        }
    }
}

impl<'a> IntoIterator for &'a ElementSet {
    type Item = usize;
    type IntoIter = Iter<'a>;

    fn into_iter(self) -> Iter<'a> {
        self.iter()
    }
}

impl FromIterator<usize> for ElementSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        let mut s = Self::new();
        for e in iter {
            s.insert(e);
        }
        s
    }
}

impl Extend<usize> for ElementSet {
    fn extend<I: IntoIterator<Item = usize>>(&mut self, iter: I) {
        for e in iter {
            self.insert(e);
        }
    }
}

impl From<&[usize]> for ElementSet {
    fn from(v: &[usize]) -> Self {
        v.iter().copied().collect()
    }
}

impl<const N: usize> From<[usize; N]> for ElementSet {
    fn from(v: [usize; N]) -> Self {
        v.into_iter().collect()
    }
}

/// Sorted, space-separated indices.
impl fmt::Display for ElementSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for e in self {
            if !first {
                f.write_str(" ")?;
            }
            write!(f, "{e}")?;
            first = false;
        }
        Ok(())
    }
}

impl fmt::Debug for ElementSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

impl Serialize for ElementSet {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(self.iter())
    }
}

impl<'de> Deserialize<'de> for ElementSet {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = Vec::<usize>::deserialize(d)?;
        Ok(v.into_iter().collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn full_and_len() {
        assert_eq!(ElementSet::full(0), ElementSet::new());
        assert_eq!(ElementSet::full(5).to_vec(), vec![0, 1, 2, 3, 4]);
        assert_eq!(ElementSet::full(64).len(), 64);
        assert_eq!(ElementSet::full(130).len(), 130);
        assert_eq!(ElementSet::full(130).max_element(), Some(129));
    }

    #[test]
    fn remove_trims_so_equality_is_structural() {
        let mut a = ElementSet::from([3, 200]);
        a.remove(200);
        assert_eq!(a, ElementSet::singleton(3));
        assert_eq!(a.words().len(), 1);
    }

    #[test]
    fn display_is_sorted_space_separated() {
        let s: ElementSet = [9, 1, 70, 4].into();
        assert_eq!(s.to_string(), "1 4 9 70");
        assert_eq!(ElementSet::new().to_string(), "");
    }

    proptest! {
        #[test]
        fn matches_btreeset(xs in proptest::collection::vec(0usize..300, 0..40),
                            ys in proptest::collection::vec(0usize..300, 0..40)) {
            use std::collections::BTreeSet;
            let a: ElementSet = xs.iter().copied().collect();
            let b: ElementSet = ys.iter().copied().collect();
            let ra: BTreeSet<usize> = xs.iter().copied().collect();
            let rb: BTreeSet<usize> = ys.iter().copied().collect();
            prop_assert_eq!(a.to_vec(), ra.iter().copied().collect::<Vec<_>>());
            prop_assert_eq!(a.union(&b).to_vec(), ra.union(&rb).copied().collect::<Vec<_>>());
            prop_assert_eq!(a.intersection(&b).to_vec(), ra.intersection(&rb).copied().collect::<Vec<_>>());
            prop_assert_eq!(a.difference(&b).to_vec(), ra.difference(&rb).copied().collect::<Vec<_>>());
            prop_assert_eq!(a.is_subset(&b), ra.is_subset(&rb));
            prop_assert_eq!(a.len(), ra.len());
            let back: ElementSet = serde_json::from_str(&serde_json::to_string(&a).unwrap()).unwrap();
            prop_assert_eq!(back, a);
        }
    }
}
