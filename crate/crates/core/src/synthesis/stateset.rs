use rayon::prelude::*;

/// Fixed-size bit set over state indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StateSet {
    len: usize,
    words: Vec<u64>,
}

impl StateSet {
    pub fn empty(len: usize) -> Self {
        Self { len, words: vec![0; len.div_ceil(64)] }
    }

    pub fn full(len: usize) -> Self {
        let mut s = Self { len, words: vec![u64::MAX; len.div_ceil(64)] };
        s.clear_tail();
        s
    }

    pub fn from_words(len: usize, words: Vec<u64>) -> Option<Self> {
        if words.len() != len.div_ceil(64) {
            return None;
        }
        let mut s = Self { len, words };
        s.clear_tail();
        Some(s)
    }

    /// Builds the set in parallel, one 64-state word per task.
    pub fn from_fn_par<S: Default + Send>(len: usize, f: impl Fn(usize, &mut S) -> bool + Sync) -> Self {
        let words = (0..len.div_ceil(64))
            .into_par_iter()
            .map_init(S::default, |scratch, w| {
                let mut word = 0u64;
                for b in 0..64 {
                    let s = w * 64 + b;
                    if s < len && f(s, scratch) {
                        word |= 1 << b;
                    }
                }
                word
            })
            .collect();
        Self { len, words }
    }

    fn clear_tail(&mut self) {
        let rem = self.len % 64;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn contains(&self, s: usize) -> bool {
        s < self.len && self.words[s / 64] >> (s % 64) & 1 == 1
    }

    pub fn insert(&mut self, s: usize) {
        self.words[s / 64] |= 1 << (s % 64);
    }

    pub fn remove(&mut self, s: usize) {
        self.words[s / 64] &= !(1 << (s % 64));
    }

    pub fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(i, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let b = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(i * 64 + b)
            })
        })
    }

    pub fn to_vec(&self) -> Vec<usize> {
        self.iter().collect()
    }

    pub fn intersect(&self, other: &StateSet) -> StateSet {
        let words = self.words.iter().zip(&other.words).map(|(a, b)| a & b).collect();
        StateSet { len: self.len, words }
    }

    pub fn union(&self, other: &StateSet) -> StateSet {
        let words = self.words.iter().zip(&other.words).map(|(a, b)| a | b).collect();
        StateSet { len: self.len, words }
    }

    pub fn is_subset(&self, other: &StateSet) -> bool {
        self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn iter_matches_membership(len in 0usize..300, bits in proptest::collection::vec(any::<bool>(), 300)) {
            let mut s = StateSet::empty(len);
            for (i, &b) in bits.iter().take(len).enumerate() {
                if b { s.insert(i); }
            }
            let expected: Vec<usize> = (0..len).filter(|&i| bits[i]).collect();
            prop_assert_eq!(s.to_vec(), expected.clone());
            prop_assert_eq!(s.count(), expected.len());
            let par = StateSet::from_fn_par(len, |i, _: &mut ()| bits[i]);
            prop_assert_eq!(par, s);
        }
    }

    #[test]
    fn full_has_no_tail_bits() {
        let s = StateSet::full(70);
        assert_eq!(s.count(), 70);
        assert!(!s.contains(70));
    }
}
