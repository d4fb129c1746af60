use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::thread;

use anyhow::{bail, Context, Result};
use pipekrylov::costmodel::{self, CostSpec, MachineModel, Method};
use pipekrylov::problems::{stencil_ptp1, stencil_ptp2, write_matrix_market, LinearProblem};
use pipekrylov::solvers::{solve, ConvergenceHistory, Form, SolveConfig, SolverVariant};

use crate::output::{history_csv, RunSummary, SolveSummary};
use crate::spec::{ProblemSource, RunSpec};

/// Result of a `solve` run.
#[derive(Debug)]
pub struct SolveOutcome {
    pub summary: SolveSummary,
    pub histories: Vec<ConvergenceHistory>,
}

impl SolveOutcome {
    pub fn all_converged(&self) -> bool {
        self.summary.runs.iter().all(RunSummary::converged)
    }
}

fn precond_label(spec: &RunSpec) -> String {
    format!("{:?}", spec.precond).to_lowercase()
}

/// Solves the problem with every variant. Variants run on separate threads;
/// they share only the immutable problem data.
fn run_variants(
    spec: &RunSpec,
    p: &LinearProblem,
    cfg: &SolveConfig,
) -> Result<Vec<ConvergenceHistory>> {
    let m = spec.precond.build(&p.a)?;
    let x0 = vec![0.0; p.n()];
    let variants = spec.resolved_variants();
    thread::scope(|scope| {
        let handles: Vec<_> = variants
            .iter()
            .map(|&v| {
                let (m, x0) = (m.as_ref(), &x0);
                scope.spawn(move || solve(&p.a, &p.b, x0, m, v, cfg).map(|(_, h)| h))
            })
            .collect();
        handles
            .into_iter()
            .zip(&variants)
            .map(|(h, v)| {
                h.join()
                    .expect("solver thread panicked")
                    .with_context(|| format!("{v} on {}", p.label))
            })
            .collect()
    })
}

pub fn history_path(dir: &Path, label: &str, v: SolverVariant) -> PathBuf {
    dir.join(format!("{label}_{}.csv", v.name()))
}

pub fn cmd_solve(spec: &RunSpec) -> Result<SolveOutcome> {
    spec.validate()?;
    let Some(source) = &spec.problem else {
        bail!("no problem given (--problem ptp1:N | ptp2:N | PATH.mtx)");
    };
    let p = spec.build_problem(source)?;
    let histories = run_variants(spec, &p, &spec.solve)?;
    let summary = SolveSummary {
        problem: p.label.clone(),
        n: p.n(),
        nnz: p.a.nnz(),
        precond: precond_label(spec),
        rtol: spec.solve.rtol,
        runs: histories.iter().map(RunSummary::from_history).collect(),
    };
    if let Some(dir) = &spec.out_dir {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        for h in &histories {
            let path = history_path(dir, &p.label, h.variant);
            fs::write(&path, history_csv(h)).with_context(|| format!("writing {}", path.display()))?;
        }
        let path = dir.join("summary.json");
        fs::write(&path, serde_json::to_string_pretty(&summary)? + "\n")
            .with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(SolveOutcome { summary, histories })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum CompareMode {
    /// Iterations and final true residual at the requested tolerance.
    Table2,
    /// Run to stagnation and report the smallest true residual.
    Table3,
}

#[derive(Debug, Clone)]
pub struct CompareCell {
    pub iterations: usize,
    pub true_residual: f64,
    pub status: String,
    pub replacements: usize,
}

#[derive(Debug, Clone)]
pub struct CompareRow {
    pub problem: String,
    pub n: usize,
    pub nnz: usize,
    pub initial_residual: f64,
    pub cells: Vec<CompareCell>,
}

#[derive(Debug, Clone)]
pub struct CompareReport {
    pub mode: CompareMode,
    pub variants: Vec<SolverVariant>,
    pub replacement_period: Option<usize>,
    pub rows: Vec<CompareRow>,
}

/// One comparison cell from a finished run. In stagnation mode this is the
/// iteration of the smallest true residual and the replacements before it.
pub fn compare_cell(h: &ConvergenceHistory, mode: CompareMode) -> CompareCell {
    let last = (h.iterations(), h.final_true_residual().unwrap_or(f64::NAN));
    let (iterations, true_residual) = match mode {
        CompareMode::Table2 => last,
        CompareMode::Table3 => h.min_true_residual().unwrap_or(last),
    };
    CompareCell {
        iterations,
        true_residual,
        status: h.status.label(),
        replacements: h
            .replacement_iterations()
            .iter()
            .filter(|&&i| i <= iterations)
            .count(),
    }
}

/// Stagnation runs ignore the tolerance: they stop only at `max_iter` or
/// breakdown.
pub fn compare_config(spec: &RunSpec, mode: CompareMode) -> SolveConfig {
    let mut cfg = spec.solve.clone();
    if mode == CompareMode::Table3 {
        cfg.rtol = f64::MIN_POSITIVE;
        cfg.record_true_residual_every = 1;
    }
    cfg
}

pub fn cmd_compare(spec: &RunSpec, sources: &[ProblemSource], mode: CompareMode) -> Result<CompareReport> {
    if sources.is_empty() {
        bail!("no problems to compare");
    }
    spec.validate()?;
    let cfg = compare_config(spec, mode);
    let mut rows = Vec::with_capacity(sources.len());
    for source in sources {
        let p = spec.build_problem(source)?;
        let hs = run_variants(spec, &p, &cfg)?;
        rows.push(CompareRow {
            problem: p.label.clone(),
            n: p.n(),
            nnz: p.a.nnz(),
            initial_residual: hs[0].initial_residual,
            cells: hs.iter().map(|h| compare_cell(h, mode)).collect(),
        });
    }
    Ok(CompareReport {
        mode,
        variants: spec.resolved_variants(),
        replacement_period: spec.solve.replacement_period,
        rows,
    })
}

impl CompareReport {
    /// Mean relative iteration deviation of each variant from the first.
    pub fn average_deviation(&self) -> Vec<f64> {
        (0..self.variants.len())
            .map(|j| {
                let devs: Vec<f64> = self
                    .rows
                    .iter()
                    .filter(|r| r.cells[0].iterations > 0)
                    .map(|r| {
                        let base = r.cells[0].iterations as f64;
                        (r.cells[j].iterations as f64 - base) / base * 100.0
                    })
                    .collect();
                if devs.is_empty() {
                    0.0
                } else {
                    devs.iter().sum::<f64>() / devs.len() as f64
                }
            })
            .collect()
    }

    pub fn all_converged(&self) -> bool {
        self.rows
            .iter()
            .flat_map(|r| &r.cells)
            .all(|c| c.status == "converged")
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = write!(s, "{:<16} {:>8} {:>9} {:>9}", "matrix", "N", "nnz", "|r0|");
        for v in &self.variants {
            let _ = write!(s, " | {:>6} {:>9}", "iter", v.name());
        }
        let rr = self.variants.iter().any(|v| v.form == Form::PipelinedRr);
        if self.mode == CompareMode::Table3 && rr {
            let _ = write!(s, " | {:>5} {:>5}", "k", "#nrr");
        }
        s.push('\n');
        for r in &self.rows {
            let _ = write!(
                s,
                "{:<16} {:>8} {:>9} {:>9.1e}",
                r.problem, r.n, r.nnz, r.initial_residual
            );
            for c in &r.cells {
                let _ = write!(s, " | {:>6} {:>9.1e}", c.iterations, c.true_residual);
            }
            if self.mode == CompareMode::Table3 && rr {
                let k = self.replacement_period.map_or("-".into(), |k| k.to_string());
                let nrr = self
                    .variants
                    .iter()
                    .zip(&r.cells)
                    .find(|(v, _)| v.form == Form::PipelinedRr)
                    .map_or(0, |(_, c)| c.replacements);
                let _ = write!(s, " | {k:>5} {nrr:>5}");
            }
            s.push('\n');
        }
        let dev = self.average_deviation();
        let _ = write!(s, "average iteration deviation wrt {}:", self.variants[0]);
        for (v, d) in self.variants.iter().zip(&dev).skip(1) {
            let _ = write!(s, " {v} {d:+.1}%");
        }
        s.push('\n');
        s
    }

    pub fn csv(&self) -> String {
        let mut s = String::from("problem,variant,iter,true_res,status,replacements\n");
        for r in &self.rows {
            for (v, c) in self.variants.iter().zip(&r.cells) {
                let _ = writeln!(
                    s,
                    "{},{},{},{:.16e},{},{}",
                    r.problem, v, c.iterations, c.true_residual, c.status, c.replacements
                );
            }
        }
        s
    }
}

#[derive(Debug, Clone)]
pub struct CostOptions {
    pub table1: bool,
    pub t_glred: f64,
    pub t_spmv: f64,
    pub nnz: u64,
    pub p_equal: u32,
    pub c_lat: f64,
    pub p_list: Vec<u32>,
    pub n_iters: u64,
}

impl Default for CostOptions {
    fn default() -> Self {
        CostOptions {
            table1: false,
            t_glred: 1.0,
            t_spmv: 1.0,
            nnz: 4_996_000,
            p_equal: 20,
            c_lat: 1.0,
            p_list: (1..=20).collect(),
            n_iters: 1,
        }
    }
}

pub fn table1() -> Result<String> {
    let mut s = format!(
        "{:<20} {:>6} {:>6} {:>7} {:>7}  {}\n",
        "method", "GLRED", "SPMV", "flops", "memory", "time"
    );
    for m in Method::table(1) {
        let c = CostSpec::of(m)?;
        let _ = writeln!(
            s,
            "{:<20} {:>6} {:>6} {:>7} {:>7}  {}",
            m.label(),
            c.glred_cell(),
            c.spmv_cell(),
            c.flops.to_string(),
            c.memory.to_string(),
            c.time
        );
    }
    s.push_str("* overlapped with a global reduction\n");
    Ok(s)
}

pub fn speedup_summary(t_glred: f64, t_spmv: f64) -> Result<String> {
    let base = costmodel::iteration_time(Method::Bicgstab, t_glred, t_spmv)?;
    let mut s = String::new();
    for m in [Method::PBicgstab, Method::Ibicgstab] {
        let t = costmodel::iteration_time(m, t_glred, t_spmv)?;
        let _ = writeln!(s, "{} speedup {:.2}", m.label(), base / t);
    }
    Ok(s)
}

/// Text report and scaling CSV (`P,bicgstab_time,p_bicgstab_time,speedup`).
pub fn cmd_costmodel(o: &CostOptions) -> Result<(String, String)> {
    let mut report = String::new();
    if o.table1 {
        report += &table1()?;
        report.push('\n');
    }
    report += &speedup_summary(o.t_glred, o.t_spmv)?;

    let machine = MachineModel::calibrated(o.nnz, o.p_equal, o.c_lat)?;
    let base = costmodel::scaling_curve(Method::Bicgstab, &machine, &o.p_list, o.n_iters)?;
    let pipe = costmodel::scaling_curve(Method::PBicgstab, &machine, &o.p_list, o.n_iters)?;
    match base.crossover {
        Some(p) => {
            let _ = writeln!(report, "BiCGStab stops scaling at P = {p}");
        }
        None => report.push_str("BiCGStab keeps scaling over the given process counts\n"),
    }
    let mut csv = String::from("P,bicgstab_time,p_bicgstab_time,speedup\n");
    for (b, p) in base.points.iter().zip(&pipe.points) {
        let _ = writeln!(csv, "{},{:.16e},{:.16e},{:.16e}", b.p, b.time, p.time, b.time / p.time);
    }
    Ok((report, csv))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum StencilKind {
    Ptp1,
    Ptp2,
}

pub fn cmd_generate(kind: StencilKind, n: usize, out: &Path) -> Result<()> {
    let a = match kind {
        StencilKind::Ptp1 => stencil_ptp1(n, n)?,
        StencilKind::Ptp2 => stencil_ptp2(n, n)?,
    };
    let mut f = fs::File::create(out).with_context(|| format!("creating {}", out.display()))?;
    write_matrix_market(&a, &mut f)?;
    f.flush()?;
    Ok(())
}

/// `.mtx` files of a directory in name order.
pub fn fixture_sources(dir: &Path) -> Result<Vec<ProblemSource>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "mtx"))
        .collect();
    files.sort();
    Ok(files.into_iter().map(ProblemSource::Mtx).collect())
}
