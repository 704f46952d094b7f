//! Majority-vote smoothing over the last ten class predictions.

use std::collections::BTreeMap;

/// Ring capacity: decisions consider the last ten predictions.
pub const VOTE_WINDOW: usize = 10;
/// Minimum count ("more than 6") for a class to win a full window.
pub const VOTE_THRESHOLD: usize = 7;

/// Sliding vote window. A decision is emitted only when the ring is
/// full and one class holds at least [`VOTE_THRESHOLD`] of the ten
/// slots; the ring is then cleared, so consecutive decisions are at
/// least ten predictions apart.
#[derive(Debug, Clone, Default)]
pub struct DecisionWindow {
    ring: Vec<u32>,
    counts: BTreeMap<u32, usize>,
}

impl DecisionWindow {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.ring.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ring.is_empty()
    }

    pub fn count(&self, class: u32) -> usize {
        self.counts.get(&class).copied().unwrap_or(0)
    }

    pub fn clear(&mut self) {
        self.ring.clear();
        self.counts.clear();
    }

    /// Pushes one prediction; returns the winning class and its vote
    /// count if this push completes a decisive window.
    pub fn update(&mut self, pred: u32) -> Option<(u32, usize)> {
        self.ring.push(pred);
        *self.counts.entry(pred).or_insert(0) += 1;
        if self.ring.len() > VOTE_WINDOW {
            let old = self.ring.remove(0);
            let c = self.counts.get_mut(&old).expect("ring/count sync");
            *c -= 1;
            if *c == 0 {
                self.counts.remove(&old);
            }
        }
        if self.ring.len() == VOTE_WINDOW {
            if let Some((&class, &votes)) =
                self.counts.iter().find(|(_, &v)| v >= VOTE_THRESHOLD)
            {
                self.clear();
                return Some((class, votes));
            }
        }
        None
    }
}

/// Free-function form of [`DecisionWindow::update`].
pub fn voting_update(w: &mut DecisionWindow, pred: u32) -> Option<(u32, usize)> {
    w.update(pred)
}
