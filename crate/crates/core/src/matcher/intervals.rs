/// A set of half-open intervals `[s, e)` with `0 <= s <= e <= len`, stored
/// as one bit row per start position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntervalSet {
    len: usize,
    words: usize,
    bits: Vec<u64>,
}

impl IntervalSet {
    pub fn new(len: usize) -> Self {
        let words = (len + 1).div_ceil(64);
        IntervalSet { len, words, bits: vec![0; words * (len + 1)] }
    }

    /// Every empty interval `[s, s)`.
    pub fn identity(len: usize) -> Self {
        let mut r = Self::new(len);
        for s in 0..=len {
            r.insert(s, s);
        }
        r
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn contains(&self, s: usize, e: usize) -> bool {
        s <= e && e <= self.len && self.bits[s * self.words + e / 64] >> (e % 64) & 1 == 1
    }

    pub fn insert(&mut self, s: usize, e: usize) {
        debug_assert!(s <= e && e <= self.len);
        self.bits[s * self.words + e / 64] |= 1 << (e % 64);
    }

    pub fn is_empty(&self) -> bool {
        self.bits.iter().all(|&w| w == 0)
    }

    fn row(&self, s: usize) -> &[u64] {
        &self.bits[s * self.words..(s + 1) * self.words]
    }

    /// Ends `e` with `[s, e)` in the set, ascending.
    pub fn ends(&self, s: usize) -> impl Iterator<Item = usize> + '_ {
        self.row(s).iter().enumerate().flat_map(|(w, &word)| {
            (0..64).filter(move |b| word >> b & 1 == 1).map(move |b| w * 64 + b)
        })
    }

    /// All intervals, ordered by start then end.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..=self.len).flat_map(move |s| self.ends(s).map(move |e| (s, e)))
    }

    pub fn union_with(&mut self, other: &IntervalSet) {
        for (a, b) in self.bits.iter_mut().zip(&other.bits) {
            *a |= b;
        }
    }

    /// Relational composition: `[s, e)` such that `[s, m)` is in `self` and
    /// `[m, e)` is in `other` for some `m`.
    pub fn compose(&self, other: &IntervalSet) -> IntervalSet {
        let mut out = IntervalSet::new(self.len);
        for s in 0..=self.len {
            for m in self.ends(s) {
                let src = other.row(m).to_vec();
                for (d, w) in out.bits[s * self.words..(s + 1) * self.words].iter_mut().zip(src) {
                    *d |= w;
                }
            }
        }
        out
    }

    /// Reflexive-transitive closure under composition.
    pub fn star(&self) -> IntervalSet {
        let mut acc = IntervalSet::identity(self.len);
        loop {
            let mut next = acc.compose(self);
            next.union_with(&acc);
            if next == acc {
                return acc;
            }
            acc = next;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn insert_and_iterate() {
        let mut r = IntervalSet::new(70);
        r.insert(0, 65);
        r.insert(3, 3);
        r.insert(70, 70);
        assert_eq!(r.iter().collect::<Vec<_>>(), vec![(0, 65), (3, 3), (70, 70)]);
        assert!(r.contains(0, 65) && !r.contains(0, 64) && !r.contains(5, 4));
    }

    #[test]
    fn star_of_single_steps_is_everything() {
        let mut step = IntervalSet::new(4);
        for s in 0..4 {
            step.insert(s, s + 1);
        }
        let all = step.star();
        assert_eq!(all.iter().count(), 15);
    }
}
