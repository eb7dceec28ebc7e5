/// Index of an atom in its instance's universe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AtomId(u32);

impl AtomId {
    pub(crate) fn new(index: usize) -> Self {
        AtomId(u32::try_from(index).expect("atom universe exceeds u32"))
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Fixed-width bitset over an atom universe.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AtomSet {
    words: Box<[u64]>,
}

impl AtomSet {
    pub fn empty(universe: usize) -> Self {
        AtomSet {
            words: vec![0; universe.div_ceil(64)].into_boxed_slice(),
        }
    }

    pub fn insert(&mut self, id: AtomId) {
        let i = id.index();
        self.words[i / 64] |= 1 << (i % 64);
    }

    pub fn remove(&mut self, id: AtomId) {
        let i = id.index();
        self.words[i / 64] &= !(1 << (i % 64));
    }

    pub fn contains(&self, id: AtomId) -> bool {
        let i = id.index();
        self.words
            .get(i / 64)
            .is_some_and(|w| w & (1 << (i % 64)) != 0)
    }

    pub fn is_subset(&self, other: &AtomSet) -> bool {
        self.words.iter().enumerate().all(|(i, w)| {
            let o = other.words.get(i).copied().unwrap_or(0);
            w & !o == 0
        })
    }

    pub fn is_disjoint(&self, other: &AtomSet) -> bool {
        self.words
            .iter()
            .zip(other.words.iter())
            .all(|(a, b)| a & b == 0)
    }

    pub fn union_with(&mut self, other: &AtomSet) {
        for (a, b) in self.words.iter_mut().zip(other.words.iter()) {
            *a |= b;
        }
    }

    pub fn difference_with(&mut self, other: &AtomSet) {
        for (a, b) in self.words.iter_mut().zip(other.words.iter()) {
            *a &= !b;
        }
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn iter(&self) -> impl Iterator<Item = AtomId> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &word)| {
            let mut w = word;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let bit = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(AtomId::new(wi * 64 + bit))
            })
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn iter_returns_exactly_inserted(ids in proptest::collection::btree_set(0usize..200, 0..40)) {
            let mut set = AtomSet::empty(200);
            for &i in &ids {
                set.insert(AtomId::new(i));
            }
            let back: Vec<usize> = set.iter().map(AtomId::index).collect();
            prop_assert_eq!(back, ids.iter().copied().collect::<Vec<_>>());
            prop_assert_eq!(set.len(), ids.len());
        }
    }
}
