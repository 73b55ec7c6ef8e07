use alloc::vec::Vec;

use rand::Rng;

/// One stored transition in learner form.
#[derive(Debug, Clone, PartialEq)]
pub struct Experience {
    pub state: Vec<f64>,
    pub action: Vec<usize>,
    pub reward: f64,
    pub next_state: Vec<f64>,
    pub done: bool,
}

/// A sampled minibatch, flattened row-major.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Batch {
    pub size: usize,
    pub feature_dim: usize,
    pub head_count: usize,
    pub states: Vec<f64>,
    pub actions: Vec<usize>,
    pub rewards: Vec<f64>,
    pub next_states: Vec<f64>,
    pub dones: Vec<bool>,
}

impl Batch {
    pub fn from_experiences<'a, I: IntoIterator<Item = &'a Experience>>(items: I) -> Batch {
        let mut b = Batch::default();
        for e in items {
            if b.size == 0 {
                b.feature_dim = e.state.len();
                b.head_count = e.action.len();
            }
            b.states.extend_from_slice(&e.state);
            b.actions.extend_from_slice(&e.action);
            b.rewards.push(e.reward);
            b.next_states.extend_from_slice(&e.next_state);
            b.dones.push(e.done);
            b.size += 1;
        }
        b
    }

    pub fn action(&self, r: usize) -> &[usize] {
        &self.actions[r * self.head_count..(r + 1) * self.head_count]
    }
}

/// Fixed-capacity ring buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplayBuffer {
    capacity: usize,
    items: Vec<Experience>,
    next: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        Self { capacity, items: Vec::new(), next: 0 }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Inserts, overwriting the oldest entry when full.
    pub fn push(&mut self, e: Experience) {
        if self.items.len() < self.capacity {
            self.items.push(e);
        } else {
            self.items[self.next] = e;
        }
        self.next = (self.next + 1) % self.capacity;
    }

    /// Distinct indices drawn uniformly; `None` when fewer than `n` items.
    pub fn sample_indices<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Option<Vec<usize>> {
        let len = self.items.len();
        if n > len || n == 0 {
            return None;
        }
        let mut out: Vec<usize> = Vec::with_capacity(n);
        if 4 * n <= len {
            while out.len() < n {
                let i = rng.random_range(0..len);
                if !out.contains(&i) {
                    out.push(i);
                }
            }
        } else {
            let mut all: Vec<usize> = (0..len).collect();
            for i in 0..n {
                let j = rng.random_range(i..len);
                all.swap(i, j);
            }
            out.extend_from_slice(&all[..n]);
        }
        Some(out)
    }

    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Option<Batch> {
        let idx = self.sample_indices(n, rng)?;
        Some(Batch::from_experiences(idx.iter().map(|&i| &self.items[i])))
    }

    pub fn get(&self, i: usize) -> Option<&Experience> {
        self.items.get(i)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use alloc::vec;

    fn exp(r: f64) -> Experience {
        Experience { state: vec![r], action: vec![0], reward: r, next_state: vec![r + 1.0], done: false }
    }

    #[test]
    fn ring_overwrites_oldest() {
        let mut b = ReplayBuffer::new(3);
        for i in 0..5 {
            b.push(exp(i as f64));
        }
        assert_eq!(b.len(), 3);
        let rewards: Vec<f64> = (0..3).map(|i| b.get(i).unwrap().reward).collect();
        assert_eq!(rewards, vec![3.0, 4.0, 2.0]);
    }

    #[test]
    fn sampling_is_without_replacement() {
        let mut b = ReplayBuffer::new(100);
        for i in 0..10 {
            b.push(exp(i as f64));
        }
        let mut r = rng::stream(1, 6);
        assert!(b.sample(11, &mut r).is_none());
        for n in [1, 2, 5, 10] {
            let mut idx = b.sample_indices(n, &mut r).unwrap();
            idx.sort_unstable();
            idx.dedup();
            assert_eq!(idx.len(), n);
        }
        let batch = b.sample(4, &mut r).unwrap();
        assert_eq!(batch.size, 4);
        assert_eq!(batch.states.len(), 4);
    }

    #[test]
    fn sampling_is_uniform() {
        let mut b = ReplayBuffer::new(50);
        for i in 0..50 {
            b.push(exp(i as f64));
        }
        let mut r = rng::stream(2, 6);
        let mut counts = [0usize; 50];
        for _ in 0..20_000 {
            for i in b.sample_indices(5, &mut r).unwrap() {
                counts[i] += 1;
            }
        }
        for c in counts {
            assert!((c as f64 / 2000.0 - 1.0).abs() < 0.1);
        }
    }
}
