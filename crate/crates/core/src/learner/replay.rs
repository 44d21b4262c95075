//! Fixed-capacity FIFO replay memory with uniform sampling.

use ndarray::{Array1, Array2};
use rand::Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: Vec<f64>,
    pub action: Vec<f64>,
    pub reward: f64,
    pub next_state: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Batch {
    pub state: Array2<f64>,
    pub action: Array2<f64>,
    pub reward: Array1<f64>,
    pub next_state: Array2<f64>,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.reward.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reward.is_empty()
    }

    pub fn from_transitions(items: &[&Transition]) -> Self {
        let n = items.len();
        let (sd, ad) = items.first().map_or((0, 0), |t| (t.state.len(), t.action.len()));
        let mut state = Array2::zeros((n, sd));
        let mut action = Array2::zeros((n, ad));
        let mut next_state = Array2::zeros((n, sd));
        let mut reward = Array1::zeros(n);
        for (i, t) in items.iter().enumerate() {
            state.row_mut(i).assign(&ndarray::ArrayView1::from(&t.state[..]));
            action.row_mut(i).assign(&ndarray::ArrayView1::from(&t.action[..]));
            next_state.row_mut(i).assign(&ndarray::ArrayView1::from(&t.next_state[..]));
            reward[i] = t.reward;
        }
        Self { state, action, reward, next_state }
    }
}

#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    state_dim: usize,
    action_dim: usize,
    items: Vec<Transition>,
    /// Slot the next push overwrites once full.
    head: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize, state_dim: usize, action_dim: usize) -> Self {
        Self { capacity: capacity.max(1), state_dim, action_dim, items: Vec::new(), head: 0 }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn push(&mut self, t: Transition) -> Result<()> {
        for (expected, got) in [
            (self.state_dim, t.state.len()),
            (self.action_dim, t.action.len()),
            (self.state_dim, t.next_state.len()),
        ] {
            if expected != got {
                return Err(Error::DimensionMismatch { expected, got });
            }
        }
        if self.items.len() < self.capacity {
            self.items.push(t);
        } else {
            self.items[self.head] = t;
            self.head = (self.head + 1) % self.capacity;
        }
        Ok(())
    }

    /// Oldest first.
    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        let (a, b) = self.items.split_at(self.head);
        b.iter().chain(a)
    }

    /// Uniform indices with replacement.
    pub fn sample_indices<R: Rng>(&self, n: usize, rng: &mut R) -> Result<Vec<usize>> {
        if self.items.len() < n || self.items.is_empty() {
            return Err(Error::BufferUnderflow { have: self.items.len(), need: n });
        }
        Ok((0..n).map(|_| rng.random_range(0..self.items.len())).collect())
    }

    pub fn sample<R: Rng>(&self, n: usize, rng: &mut R) -> Result<Batch> {
        let idx = self.sample_indices(n, rng)?;
        let items: Vec<&Transition> = idx.iter().map(|&i| &self.items[i]).collect();
        Ok(Batch::from_transitions(&items))
    }
}
