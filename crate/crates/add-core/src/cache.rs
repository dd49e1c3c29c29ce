use rustc_hash::FxHashMap;

use crate::manager::AddRef;

/// Key of a memoized recursive operation.
///
/// Binary keys for commutative operators are normalized by the caller so
/// that `(f, g)` and `(g, f)` hit the same entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub(crate) enum CacheKey {
    /// (operator tag, lhs, rhs)
    Bin(u8, u32, u32),
    /// (variable * 2 + bit, node)
    Restrict(u32, u32),
}

#[derive(Debug, Default, Clone, Copy)]
pub struct CacheStats {
    pub lookups: u64,
    pub hits: u64,
    pub insertions: u64,
    pub evictions: u64,
}

/// Operation cache: unbounded by default, optionally bounded.
///
/// When a capacity is set and exceeded, the least-recently-used half of the
/// entries is evicted in one batch (entries carry a last-use stamp).
pub(crate) struct OpCache {
    map: FxHashMap<CacheKey, (AddRef, u64)>,
    capacity: Option<usize>,
    tick: u64,
    stats: CacheStats,
}

impl OpCache {
    pub fn new() -> Self {
        OpCache { map: FxHashMap::default(), capacity: None, tick: 0, stats: CacheStats::default() }
    }

    pub fn get(&mut self, key: &CacheKey) -> Option<AddRef> {
        self.stats.lookups += 1;
        self.tick += 1;
        let tick = self.tick;
        match self.map.get_mut(key) {
            Some(entry) => {
                entry.1 = tick;
                self.stats.hits += 1;
                Some(entry.0)
            }
            None => None,
        }
    }

    pub fn insert(&mut self, key: CacheKey, value: AddRef) {
        self.tick += 1;
        self.map.insert(key, (value, self.tick));
        self.stats.insertions += 1;
        if let Some(cap) = self.capacity {
            if self.map.len() > cap {
                self.evict(cap / 2 + 1);
            }
        }
    }

    /// Drop all but the `keep` most recently used entries.
    fn evict(&mut self, keep: usize) {
        if self.map.len() <= keep {
            return;
        }
        let mut stamps: Vec<u64> = self.map.values().map(|&(_, t)| t).collect();
        stamps.sort_unstable_by(|a, b| b.cmp(a));
        let cutoff = stamps[keep - 1];
        let before = self.map.len();
        self.map.retain(|_, &mut (_, t)| t >= cutoff);
        self.stats.evictions += (before - self.map.len()) as u64;
    }

    pub fn set_capacity(&mut self, capacity: Option<usize>) {
        self.capacity = capacity;
        if let Some(cap) = capacity {
            if self.map.len() > cap {
                self.evict(cap / 2 + 1);
            }
        }
    }

    pub fn clear(&mut self) {
        self.map.clear();
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn stats(&self) -> CacheStats {
        self.stats
    }
}
