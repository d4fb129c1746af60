//! History CSV and JSON summary artifacts.
//!
//! CSV columns are `iter,rec_res,true_res,replaced`; norms are written with
//! 17 significant digits so they round-trip exactly. An iteration without a
//! recorded true residual leaves that field empty.

use std::io::Write;

use anyhow::Result;
use pipekrylov::solvers::{ConvergenceHistory, PhaseCounts, TerminalStatus};
use serde::Serialize;

pub const CSV_HEADER: &str = "iter,rec_res,true_res,replaced";

pub fn write_history_csv<W: Write>(h: &ConvergenceHistory, mut out: W) -> Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in &h.records {
        let true_res = r.true_residual.map(|t| format!("{t:.16e}")).unwrap_or_default();
        writeln!(
            out,
            "{},{:.16e},{},{}",
            r.iteration,
            r.recursive_residual,
            true_res,
            u8::from(r.replaced)
        )?;
    }
    Ok(())
}

pub fn history_csv(h: &ConvergenceHistory) -> String {
    let mut buf = Vec::new();
    write_history_csv(h, &mut buf).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("CSV is ASCII")
}

#[derive(Debug, Clone, Serialize)]
pub struct PhaseSummary {
    pub setup: PhaseCounts,
    /// Counts shared by every regular iteration; absent if they differ.
    pub per_iteration: Option<PhaseCounts>,
    /// Counts of all replacement work.
    pub replacement: PhaseCounts,
    /// Everything, including setup and replacements.
    pub total: PhaseCounts,
}

#[derive(Debug, Clone, Serialize)]
pub struct MinResidual {
    pub iteration: usize,
    pub value: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub variant: String,
    pub preconditioned: bool,
    pub status: String,
    pub iterations: usize,
    pub initial_residual: f64,
    pub final_recursive_residual: f64,
    pub final_true_residual: Option<f64>,
    pub min_true_residual: Option<MinResidual>,
    pub replacements: usize,
    pub phase_counts: PhaseSummary,
}

impl RunSummary {
    pub fn from_history(h: &ConvergenceHistory) -> Self {
        let mut replacement = PhaseCounts::default();
        for r in &h.records {
            replacement.add(&r.replacement_phases);
        }
        RunSummary {
            variant: h.variant.name().to_string(),
            preconditioned: h.variant.preconditioned,
            status: h.status.label(),
            iterations: h.iterations(),
            initial_residual: h.initial_residual,
            final_recursive_residual: h.final_recursive_residual(),
            final_true_residual: h.final_true_residual(),
            min_true_residual: h
                .min_true_residual()
                .map(|(iteration, value)| MinResidual { iteration, value }),
            replacements: h.replacement_iterations().len(),
            phase_counts: PhaseSummary {
                setup: h.setup,
                per_iteration: h.per_iteration_phases(),
                replacement,
                total: h.total_phases(),
            },
        }
    }

    pub fn converged(&self) -> bool {
        self.status == TerminalStatus::Converged.label()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveSummary {
    pub problem: String,
    pub n: usize,
    pub nnz: usize,
    pub precond: String,
    pub rtol: f64,
    pub runs: Vec<RunSummary>,
}
