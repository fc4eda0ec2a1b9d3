use rand::seq::index::sample;

use crate::agent::TransitionTuple;
use crate::error::{Error, Result};
use crate::rng::SimRng;
use crate::tpp::EventSequence;

/// Fixed-capacity FIFO of transitions.
#[derive(Debug, Clone)]
pub struct StepBuffer {
    capacity: usize,
    items: Vec<TransitionTuple>,
    next: usize,
}

impl StepBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "capacity must be positive");
        Self {
            capacity,
            items: Vec::new(),
            next: 0,
        }
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

    /// Appends, evicting the oldest entry when full.
    pub fn push(&mut self, t: TransitionTuple) {
        if self.items.len() < self.capacity {
            self.items.push(t);
        } else {
            self.items[self.next] = t;
        }
        self.next = (self.next + 1) % self.capacity;
    }

    /// Entries from oldest to newest.
    pub fn iter(&self) -> impl Iterator<Item = &TransitionTuple> {
        let split = if self.items.len() < self.capacity { 0 } else { self.next };
        self.items[split..].iter().chain(&self.items[..split])
    }

    /// `n` distinct indices drawn uniformly.
    pub fn sample_indices(&self, n: usize, rng: &mut SimRng) -> Result<Vec<usize>> {
        if n > self.items.len() || n == 0 {
            return Err(Error::Empty(format!("cannot draw {n} of {} transitions", self.items.len())));
        }
        Ok(sample(rng, self.items.len(), n).into_vec())
    }

    pub fn sample(&self, n: usize, rng: &mut SimRng) -> Result<Vec<TransitionTuple>> {
        Ok(self.sample_indices(n, rng)?.into_iter().map(|i| self.items[i].clone()).collect())
    }
}

/// Finished trajectories, oldest evicted first.
#[derive(Debug, Clone)]
pub struct TrajectoryBuffer {
    capacity: usize,
    items: std::collections::VecDeque<EventSequence>,
}

impl TrajectoryBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "capacity must be positive");
        Self {
            capacity,
            items: Default::default(),
        }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Admits a trajectory only once its episode is over.
    pub fn push(&mut self, seq: EventSequence, finished: bool) -> Result<()> {
        if !finished {
            return Err(Error::InvalidSequence("only finished episodes are stored".into()));
        }
        seq.validate()?;
        if self.items.len() == self.capacity {
            self.items.pop_front();
        }
        self.items.push_back(seq);
        Ok(())
    }

    pub fn get(&self, i: usize) -> &EventSequence {
        &self.items[i]
    }

    pub fn iter(&self) -> impl Iterator<Item = &EventSequence> {
        self.items.iter()
    }

    /// Up to `n` distinct trajectories drawn uniformly.
    pub fn sample(&self, n: usize, rng: &mut SimRng) -> Vec<&EventSequence> {
        let n = n.min(self.items.len());
        sample(rng, self.items.len(), n).into_iter().map(|i| &self.items[i]).collect()
    }
}
