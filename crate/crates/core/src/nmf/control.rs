use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterControl {
    pub max_iter: usize,
    /// Stop once `|c_prev - c| <= rel_tol * |c_prev|`.
    pub rel_tol: f64,
}

impl Default for IterControl {
    fn default() -> Self {
        IterControl {
            max_iter: 500,
            rel_tol: 1e-6,
        }
    }
}

impl IterControl {
    pub fn new(max_iter: usize, rel_tol: f64) -> Self {
        IterControl { max_iter, rel_tol }
    }

    pub(crate) fn converged<T: Scalar>(&self, prev: T, current: T) -> bool {
        let (prev, current) = (prev.as_f64(), current.as_f64());
        (prev - current).abs() <= self.rel_tol * prev.abs()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    MaxIter,
    Converged,
}

impl std::fmt::Display for StopReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            StopReason::MaxIter => "max_iter",
            StopReason::Converged => "converged",
        })
    }
}

/// Cost recorded after every outer iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct FitTrace<T> {
    pub initial_cost: T,
    pub costs: Vec<T>,
    pub stop: StopReason,
}

impl<T: Scalar> FitTrace<T> {
    pub(crate) fn start(initial_cost: T) -> Self {
        FitTrace {
            initial_cost,
            costs: Vec::new(),
            stop: StopReason::MaxIter,
        }
    }

    pub fn iterations(&self) -> usize {
        self.costs.len()
    }

    pub fn last_cost(&self) -> T {
        self.costs.last().copied().unwrap_or(self.initial_cost)
    }

    /// Appends `cost` and reports whether the relative-change test fired.
    pub(crate) fn push(&mut self, cost: T, ctrl: &IterControl) -> bool {
        let prev = self.last_cost();
        self.costs.push(cost);
        if ctrl.converged(prev, cost) {
            self.stop = StopReason::Converged;
            true
        } else {
            false
        }
    }

    /// Largest single-step increase over the trace, including the initial cost.
    pub fn max_increase(&self) -> T {
        let mut prev = self.initial_cost;
        let mut worst = T::zero();
        for &c in &self.costs {
            worst = worst.max(c - prev);
            prev = c;
        }
        worst
    }
}
