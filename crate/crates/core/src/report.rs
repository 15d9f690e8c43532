use std::fmt::Write as _;
use std::time::Duration;

use crate::grid::{fmt_f64, GridFunction};

/// One outer iteration: successive-iterate L∞ difference and the discrete
/// objective of the current iterate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistoryEntry {
    pub iter: usize,
    pub diff: f64,
    pub energy: f64,
}

/// Result of an outer split-Bregman loop.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub u: GridFunction,
    pub outer_iters: usize,
    pub history: Vec<HistoryEntry>,
    pub converged: bool,
    /// `max (φ - u)₊` for obstacle problems, zero where no lower obstacle exists.
    pub feasibility_violation: f64,
    /// Problem-specific complementarity diagnostic (min-form KKT residual for
    /// obstacle problems, Euler–Lagrange residual for the two-phase problem).
    pub complementarity: f64,
    /// Total inner iterations (CG or Nesterov) over the whole solve.
    pub inner_iters: usize,
    pub elapsed: Duration,
    /// Interior nodes where the final shrink step returned exactly zero:
    /// the contact set for obstacle problems, the zero phase for the
    /// two-phase problem. Stored as a 0/1 field.
    pub active_set: Option<GridFunction>,
}

impl SolveReport {
    pub fn final_diff(&self) -> Option<f64> {
        self.history.last().map(|e| e.diff)
    }
}

/// `iter,diff,energy` CSV of an iteration history.
pub fn history_csv(history: &[HistoryEntry]) -> String {
    let mut out = String::from("iter,diff,energy\n");
    for e in history {
        let _ = writeln!(out, "{},{},{}", e.iter, fmt_f64(e.diff), fmt_f64(e.energy));
    }
    out
}
