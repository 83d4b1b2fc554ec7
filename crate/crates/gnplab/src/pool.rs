//! The set of not-yet-visited vertices during graph exploration.
//!
//! Supports uniform sampling without replacement and removal of named
//! vertices, both O(1), by keeping a lazily materialized permutation:
//! slots that were never touched still hold their identity value, so a
//! reset between replicates is a single epoch bump rather than an O(n)
//! rebuild. That matters when thousands of explorations each touch a tiny
//! corner of a large vertex set.

use crate::rng::Substream;

pub struct UnvisitedPool {
    n: u32,
    remaining: u32,
    epoch: u32,
    value_at: Vec<u32>,
    value_stamp: Vec<u32>,
    slot_of: Vec<u32>,
    slot_stamp: Vec<u32>,
}

impl UnvisitedPool {
    pub fn new(n: u32) -> Self {
        UnvisitedPool {
            n,
            remaining: n,
            epoch: 1,
            value_at: vec![0; n as usize],
            value_stamp: vec![0; n as usize],
            slot_of: vec![0; n as usize],
            slot_stamp: vec![0; n as usize],
        }
    }

    /// Marks every vertex unvisited again. O(1) except when the epoch
    /// counter wraps, which forces a full clear.
    pub fn reset(&mut self) {
        if self.epoch == u32::MAX {
            self.value_stamp.fill(0);
            self.slot_stamp.fill(0);
            self.epoch = 0;
        }
        self.epoch += 1;
        self.remaining = self.n;
    }

    pub fn len(&self) -> u32 {
        self.remaining
    }

    pub fn is_empty(&self) -> bool {
        self.remaining == 0
    }

    pub fn capacity(&self) -> u32 {
        self.n
    }

    fn value_at(&self, slot: u32) -> u32 {
        if self.value_stamp[slot as usize] == self.epoch {
            self.value_at[slot as usize]
        } else {
            slot
        }
    }

    fn slot_of(&self, value: u32) -> u32 {
        if self.slot_stamp[value as usize] == self.epoch {
            self.slot_of[value as usize]
        } else {
            value
        }
    }

    fn place(&mut self, slot: u32, value: u32) {
        self.value_at[slot as usize] = value;
        self.value_stamp[slot as usize] = self.epoch;
        self.slot_of[value as usize] = slot;
        self.slot_stamp[value as usize] = self.epoch;
    }

    pub fn contains(&self, v: u32) -> bool {
        v < self.n && self.slot_of(v) < self.remaining
    }

    /// Removes vertex with a slot swap; false if it was already gone.
    pub fn remove(&mut self, v: u32) -> bool {
        if v >= self.n {
            return false;
        }
        let slot = self.slot_of(v);
        if slot >= self.remaining {
            return false;
        }
        let last = self.remaining - 1;
        let moved = self.value_at(last);
        self.place(slot, moved);
        self.place(last, v);
        self.remaining = last;
        true
    }

    /// Draws one unvisited vertex uniformly and removes it.
    pub fn sample_remove(&mut self, rng: &mut Substream) -> Option<u32> {
        if self.remaining == 0 {
            return None;
        }
        let slot = rng.below(u64::from(self.remaining)) as u32;
        let v = self.value_at(slot);
        let removed = self.remove(v);
        debug_assert!(removed);
        Some(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn remove_and_contains() {
        let mut pool = UnvisitedPool::new(5);
        assert_eq!(pool.len(), 5);
        assert!(pool.contains(3));
        assert!(pool.remove(3));
        assert!(!pool.contains(3));
        assert!(!pool.remove(3));
        assert!(!pool.remove(99));
        assert_eq!(pool.len(), 4);
    }

    #[test]
    fn sampling_exhausts_without_repeats() {
        let mut pool = UnvisitedPool::new(64);
        let mut rng = Substream::new(1, 0, "pool");
        let mut seen = vec![false; 64];
        while let Some(v) = pool.sample_remove(&mut rng) {
            assert!(!seen[v as usize], "vertex {v} drawn twice");
            seen[v as usize] = true;
        }
        assert!(seen.iter().all(|&s| s));
        assert!(pool.is_empty());
    }

    #[test]
    fn reset_restores_everything() {
        let mut pool = UnvisitedPool::new(10);
        let mut rng = Substream::new(2, 0, "pool");
        for _ in 0..10 {
            pool.sample_remove(&mut rng);
        }
        assert!(pool.is_empty());
        pool.reset();
        assert_eq!(pool.len(), 10);
        for v in 0..10 {
            assert!(pool.contains(v));
        }
    }

    #[test]
    fn sampling_is_roughly_uniform() {
        // First draw from a fresh pool of 4, many epochs: each vertex should
        // appear about a quarter of the time.
        let mut pool = UnvisitedPool::new(4);
        let mut rng = Substream::new(3, 0, "pool-uniform");
        let mut counts = [0u32; 4];
        let reps = 40_000;
        for _ in 0..reps {
            pool.reset();
            counts[pool.sample_remove(&mut rng).unwrap() as usize] += 1;
        }
        for c in counts {
            let freq = f64::from(c) / f64::from(reps);
            assert!((freq - 0.25).abs() < 0.01, "frequency {freq}");
        }
    }
}
