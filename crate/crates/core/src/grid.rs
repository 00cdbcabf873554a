//! Uniform-grid accelerator for the neighborhood query.
//!
//! Returns exactly the slots the naive scan returns, in the same ascending
//! order, so heading sums are accumulated identically either way.

use std::collections::HashMap;

use crate::model::{within_radius, SwarmState};

// Cells are a hair wider than `r` so a pair at distance exactly `r` never
// straddles more than one cell boundary after rounding.
const CELL_SLACK: f64 = 1.0 + 1e-9;

pub struct NeighborGrid {
    cell: f64,
    cells: HashMap<(i64, i64), Vec<usize>>,
}

impl NeighborGrid {
    /// `None` when `r` is zero or not finite; callers fall back to the scan.
    pub fn build(state: &SwarmState, r: f64) -> Option<Self> {
        if !(r.is_finite() && r > 0.0) {
            return None;
        }
        let cell = r * CELL_SLACK;
        let mut cells: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
        let slots = state.shill.iter().map(|s| (0, s)).chain(state.agents.iter().enumerate().map(|(i, a)| (i + 1, a)));
        for (slot, agent) in slots {
            cells.entry(key(&agent.position, cell)).or_default().push(slot);
        }
        Some(Self { cell, cells })
    }

    pub fn neighbors(&self, state: &SwarmState, i: usize, r: f64) -> Vec<usize> {
        let center = &state.agents[i - 1].position;
        let (cx, cy) = key(center, self.cell);
        let mut out = Vec::new();
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(bucket) = self.cells.get(&(cx + dx, cy + dy)) {
                    out.extend(bucket.iter().copied().filter(|&j| {
                        state.slot(j).is_some_and(|a| within_radius(&a.position, center, r))
                    }));
                }
            }
        }
        out.sort_unstable();
        out
    }
}

fn key(p: &[f64; 2], cell: f64) -> (i64, i64) {
    ((p[0] / cell).floor() as i64, (p[1] / cell).floor() as i64)
}
