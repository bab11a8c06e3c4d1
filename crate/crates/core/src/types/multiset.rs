use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("multiset difference requires the subtrahend to be contained in the minuend")]
pub struct NotSubset;

/// Finite multiset with strictly positive counts. Absent keys have count 0.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Multiset<T: Ord> {
    entries: BTreeMap<T, usize>,
}

impl<T: Ord> Default for Multiset<T> {
    fn default() -> Self {
        Multiset { entries: BTreeMap::new() }
    }
}

impl<T: Ord + fmt::Debug> fmt::Debug for Multiset<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map().entries(self.entries.iter()).finish()
    }
}

impl<T: Ord + Clone> Multiset<T> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn singleton(item: T) -> Self {
        let mut m = Self::new();
        m.add(item, 1);
        m
    }

    /// `S(a)`.
    pub fn count(&self, item: &T) -> usize {
        self.entries.get(item).copied().unwrap_or(0)
    }

    pub fn add(&mut self, item: T, n: usize) {
        if n > 0 {
            *self.entries.entry(item).or_insert(0) += n;
        }
    }

    /// Removes up to `n` copies; returns how many were actually removed.
    pub fn remove(&mut self, item: &T, n: usize) -> usize {
        let Some(c) = self.entries.get_mut(item) else { return 0 };
        let taken = n.min(*c);
        *c -= taken;
        if *c == 0 {
            self.entries.remove(item);
        }
        taken
    }

    /// `S1 ⊆ S2`: pointwise `≤` on counts.
    pub fn is_subset(&self, other: &Multiset<T>) -> bool {
        self.entries.iter().all(|(k, &n)| other.count(k) >= n)
    }

    /// `S1 + S2`.
    pub fn sum(&self, other: &Multiset<T>) -> Multiset<T> {
        let mut out = self.clone();
        for (k, &n) in &other.entries {
            out.add(k.clone(), n);
        }
        out
    }

    /// `self − other`, defined only when `other ⊆ self`.
    pub fn diff(&self, other: &Multiset<T>) -> Result<Multiset<T>, NotSubset> {
        if !other.is_subset(self) {
            return Err(NotSubset);
        }
        let mut out = self.clone();
        for (k, &n) in &other.entries {
            out.remove(k, n);
        }
        Ok(out)
    }

    /// `k · S`.
    pub fn scale(&self, k: usize) -> Multiset<T> {
        Multiset {
            entries: if k == 0 {
                BTreeMap::new()
            } else {
                self.entries.iter().map(|(t, &n)| (t.clone(), n * k)).collect()
            },
        }
    }

    /// `|S|`.
    pub fn size(&self) -> usize {
        self.entries.values().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Distinct elements with their counts, in ascending order.
    pub fn iter(&self) -> impl Iterator<Item = (&T, usize)> {
        self.entries.iter().map(|(k, &n)| (k, n))
    }

    pub fn distinct(&self) -> impl Iterator<Item = &T> {
        self.entries.keys()
    }
}

impl<T: Ord + Clone> FromIterator<T> for Multiset<T> {
    fn from_iter<I: IntoIterator<Item = T>>(iter: I) -> Self {
        let mut m = Multiset::new();
        for item in iter {
            m.add(item, 1);
        }
        m
    }
}
