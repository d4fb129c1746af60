use serde::{Deserialize, Serialize};

use super::events::PhaseCounts;
use super::SolverVariant;
use crate::error::BreakdownKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "status")]
pub enum TerminalStatus {
    Running,
    Converged,
    MaxIter,
    Breakdown { kind: BreakdownKind, iteration: usize },
}

impl TerminalStatus {
    pub fn label(&self) -> String {
        match self {
            TerminalStatus::Running => "running".into(),
            TerminalStatus::Converged => "converged".into(),
            TerminalStatus::MaxIter => "max_iter".into(),
            TerminalStatus::Breakdown { kind, .. } => format!("breakdown({kind})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub recursive_residual: f64,
    pub true_residual: Option<f64>,
    pub replaced: bool,
    pub alpha: Option<f64>,
    pub omega: Option<f64>,
    pub beta: Option<f64>,
    /// Phases of the regular iteration.
    pub phases: PhaseCounts,
    /// Extra phases spent by residual replacement.
    pub replacement_phases: PhaseCounts,
}

/// Per-iteration residual norms and phase counts of one solve. Record 0
/// describes the initial guess.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceHistory {
    pub variant: SolverVariant,
    pub initial_residual: f64,
    pub records: Vec<IterationRecord>,
    pub status: TerminalStatus,
    pub setup: PhaseCounts,
}

impl ConvergenceHistory {
    pub fn new(variant: SolverVariant, initial_residual: f64) -> Self {
        ConvergenceHistory {
            variant,
            initial_residual,
            records: Vec::new(),
            status: TerminalStatus::Running,
            setup: PhaseCounts::default(),
        }
    }

    pub fn push(&mut self, rec: IterationRecord) {
        self.records.push(rec);
    }

    /// Number of iterations executed.
    pub fn iterations(&self) -> usize {
        self.records.last().map_or(0, |r| r.iteration)
    }

    pub fn converged(&self) -> bool {
        self.status == TerminalStatus::Converged
    }

    pub fn final_recursive_residual(&self) -> f64 {
        self.records.last().map_or(f64::NAN, |r| r.recursive_residual)
    }

    /// Last recorded true residual norm.
    pub fn final_true_residual(&self) -> Option<f64> {
        self.records.iter().rev().find_map(|r| r.true_residual)
    }

    /// `(iteration, norm)` of the smallest recorded true residual.
    pub fn min_true_residual(&self) -> Option<(usize, f64)> {
        self.records
            .iter()
            .filter_map(|r| r.true_residual.map(|t| (r.iteration, t)))
            .fold(None, |best, cur| match best {
                Some((_, b)) if b <= cur.1 => best,
                _ => Some(cur),
            })
    }

    pub fn replacement_iterations(&self) -> Vec<usize> {
        self.records
            .iter()
            .filter(|r| r.replaced)
            .map(|r| r.iteration)
            .collect()
    }

    /// Total phases, including setup and replacements.
    pub fn total_phases(&self) -> PhaseCounts {
        let mut total = self.setup;
        for r in &self.records {
            total.add(&r.phases);
            total.add(&r.replacement_phases);
        }
        total
    }

    /// Phase counts of a regular iteration, if every iteration had the same.
    /// A final converged iteration may skip trailing updates and is ignored.
    pub fn per_iteration_phases(&self) -> Option<PhaseCounts> {
        let mut end = self.records.len();
        if self.converged() && end > 2 {
            end -= 1;
        }
        let mut it = self.records.get(1..end)?.iter().map(|r| r.phases);
        let first = it.next()?;
        it.all(|p| p == first).then_some(first)
    }
}
