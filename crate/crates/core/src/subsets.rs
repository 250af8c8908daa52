//! Cache index sets as bitmasks, plus the subset enumeration and ordering
//! conventions shared by the whole crate.
//!
//! A set is stored with bit `j - 1` for cache `j`. Orderings that must be
//! stable across the crate use the *indicator value*: the integer value of
//! the length-`c` indicator vector whose most significant bit belongs to
//! cache 1. For `c = 4`, `{1,2}` has indicator `1100₂ = 12` and therefore
//! sorts before `{1,3}` (`1010₂ = 10`).

use std::fmt;

/// A subset of the caches `{1, ..., c}`.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CacheSet(pub u32);

impl CacheSet {
    pub const EMPTY: Self = CacheSet(0);

    /// Set containing the given 1-based cache indices.
    pub fn from_members(members: &[u32]) -> Self {
        let mut mask = 0u32;
        for &j in members {
            assert!(j >= 1 && j <= 32, "cache indices are 1-based");
            mask |= 1 << (j - 1);
        }
        CacheSet(mask)
    }

    /// The full set `{1, ..., c}`.
    pub fn full(c: u32) -> Self {
        debug_assert!(c <= 31);
        CacheSet(((1u64 << c) - 1) as u32)
    }

    pub fn contains(self, cache: u32) -> bool {
        cache >= 1 && cache <= 32 && (self.0 >> (cache - 1)) & 1 == 1
    }

    pub fn len(self) -> u32 {
        self.0.count_ones()
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn union(self, other: Self) -> Self {
        CacheSet(self.0 | other.0)
    }

    pub fn intersection(self, other: Self) -> Self {
        CacheSet(self.0 & other.0)
    }

    pub fn difference(self, other: Self) -> Self {
        CacheSet(self.0 & !other.0)
    }

    pub fn is_subset_of(self, other: Self) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn intersects(self, other: Self) -> bool {
        self.0 & other.0 != 0
    }

    /// 1-based members in ascending order.
    pub fn members(self) -> impl Iterator<Item = u32> {
        let mask = self.0;
        (1..=32u32).filter(move |j| (mask >> (j - 1)) & 1 == 1)
    }

    /// Decimal value of the length-`c` indicator vector, cache 1 in the
    /// most significant position.
    pub fn indicator_value(self, c: u32) -> u32 {
        debug_assert!(self.is_subset_of(CacheSet::full(c)));
        let mut v = 0u32;
        for j in self.members() {
            v |= 1 << (c - j);
        }
        v
    }

    /// Indicator vector rendered like `(1, 1, 0, 0)`.
    pub fn indicator_string(self, c: u32) -> String {
        let bits: Vec<String> = (1..=c)
            .map(|j| if self.contains(j) { "1" } else { "0" }.to_string())
            .collect();
        format!("({})", bits.join(", "))
    }

    /// Indicator value in hex, e.g. `0xc` for `{1,2}` with `c = 4`.
    pub fn hex(self, c: u32) -> String {
        format!("{:#x}", self.indicator_value(c))
    }
}

impl fmt::Display for CacheSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let members: Vec<String> = self.members().map(|j| j.to_string()).collect();
        write!(f, "{{{}}}", members.join(","))
    }
}

impl fmt::Debug for CacheSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// All subsets of `[c]` with exactly `k` members, ascending mask order.
pub fn k_subsets(c: u32, k: u32) -> Vec<CacheSet> {
    assert!(c <= 31 && k <= c);
    if k == 0 {
        return vec![CacheSet::EMPTY];
    }
    // Gosper's hack walks same-popcount masks in ascending order.
    let mut out = Vec::new();
    let limit = 1u64 << c;
    let mut bits = (1u64 << k) - 1;
    while bits < limit {
        out.push(CacheSet(bits as u32));
        let low = bits & bits.wrapping_neg();
        let ripple = bits + low;
        bits = (((bits ^ ripple) >> 2) / low) | ripple;
    }
    out
}

/// All subsets of `set`, including the empty set and `set` itself.
pub fn subsets_of(set: CacheSet) -> SubsetsOf {
    SubsetsOf {
        set: set.0,
        next: Some(0),
    }
}

/// Carry-rippler subset walk.
pub struct SubsetsOf {
    set: u32,
    next: Option<u32>,
}

impl Iterator for SubsetsOf {
    type Item = CacheSet;

    fn next(&mut self) -> Option<CacheSet> {
        let current = self.next?;
        let following = current.wrapping_sub(self.set) & self.set;
        self.next = if following == 0 { None } else { Some(following) };
        Some(CacheSet(current))
    }
}

/// Sort into the canonical enumeration order: descending indicator value.
pub fn sort_descending_indicator(sets: &mut [CacheSet], c: u32) {
    sets.sort_by(|x, y| y.indicator_value(c).cmp(&x.indicator_value(c)));
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indicator_puts_cache_one_in_the_high_bit() {
        let c = 4;
        assert_eq!(CacheSet::from_members(&[1, 2]).indicator_value(c), 12);
        assert_eq!(CacheSet::from_members(&[1, 3]).indicator_value(c), 10);
        assert_eq!(CacheSet::from_members(&[1, 4]).indicator_value(c), 9);
        assert_eq!(CacheSet::from_members(&[2, 3]).indicator_value(c), 6);
        assert_eq!(CacheSet::from_members(&[2, 4]).indicator_value(c), 5);
        assert_eq!(CacheSet::from_members(&[3, 4]).indicator_value(c), 3);
    }

    #[test]
    fn k_subsets_enumerates_binomial_many() {
        assert_eq!(k_subsets(4, 2).len(), 6);
        assert_eq!(k_subsets(6, 3).len(), 20);
        assert_eq!(k_subsets(5, 0), vec![CacheSet::EMPTY]);
        assert_eq!(k_subsets(3, 3), vec![CacheSet::full(3)]);
    }

    #[test]
    fn subsets_of_walks_the_full_power_set() {
        let set = CacheSet::from_members(&[2, 4]);
        let all: Vec<CacheSet> = subsets_of(set).collect();
        assert_eq!(all.len(), 4);
        assert!(all.contains(&CacheSet::EMPTY));
        assert!(all.contains(&set));
        for s in &all {
            assert!(s.is_subset_of(set));
        }
    }

    #[test]
    fn display_renders_members() {
        assert_eq!(CacheSet::from_members(&[1, 3]).to_string(), "{1,3}");
        assert_eq!(CacheSet::EMPTY.to_string(), "{}");
    }
}
