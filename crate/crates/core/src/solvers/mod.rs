//! BiCGStab and CG solver family.
//!
//! Each algorithm is a state machine implementing [`KrylovSolver`]: the
//! constructor performs the setup phase and every [`KrylovSolver::step`]
//! executes exactly one iteration, returning the ordered list of phases it
//! ran. [`solve`] drives a state machine to convergence and records a
//! [`ConvergenceHistory`].
//!
//! Available forms:
//!
//! | family   | form          | reductions / iter | SPMV / iter |
//! |----------|---------------|-------------------|-------------|
//! | BiCGStab | standard      | 3                 | 2           |
//! | BiCGStab | ca            | 2                 | 2           |
//! | BiCGStab | pipelined(_rr)| 2, overlapped     | 2           |
//! | CG       | standard      | 2                 | 1           |
//! | CG       | chrono_gear   | 1                 | 1           |
//! | CG       | pipelined     | 1, overlapped     | 1           |
//!
//! Preconditioned forms add one preconditioner application per SPMV.
//! The recursive residual norm needed for the stopping test is folded into
//! the last reduction of every iteration, so it never costs an extra phase.

mod bicgstab;
mod cg;
mod events;
mod executor;
mod history;
mod merged;

pub use bicgstab::StandardBicgstab;
pub use cg::{ChronoGearCg, PipelinedCg, StandardCg};
pub use events::{Event, PhaseCounts};
pub use executor::Executor;
pub use history::{ConvergenceHistory, IterationRecord, TerminalStatus};
pub use merged::MergedBicgstab;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{check_len, BreakdownKind, Error, Result};
use crate::kernels::{self, CsrMatrix, ReductionOrder};
use crate::precond::Preconditioner;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Cg,
    Bicgstab,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Form {
    Standard,
    ChronoGear,
    Ca,
    Pipelined,
    PipelinedRr,
}

/// How the merged-reduction BiCGStab forms compute `alpha_{i+1}`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaFormula {
    /// `(r0,r) / ((r0,w) + beta (r0,s) - beta omega (r0,z))`.
    #[default]
    FourDot,
    /// `(1/omega + (r0,w)/(r0,r) - beta omega (r0,z)/(r0,r))^{-1}`.
    ThreeDot,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SolverVariant {
    pub family: Family,
    pub form: Form,
    pub preconditioned: bool,
    pub alpha_formula: AlphaFormula,
}

impl SolverVariant {
    pub const fn new(family: Family, form: Form, preconditioned: bool) -> Self {
        SolverVariant {
            family,
            form,
            preconditioned,
            alpha_formula: AlphaFormula::FourDot,
        }
    }

    pub const fn bicgstab(preconditioned: bool) -> Self {
        Self::new(Family::Bicgstab, Form::Standard, preconditioned)
    }

    pub const fn ca_bicgstab(preconditioned: bool) -> Self {
        Self::new(Family::Bicgstab, Form::Ca, preconditioned)
    }

    pub const fn p_bicgstab(preconditioned: bool) -> Self {
        Self::new(Family::Bicgstab, Form::Pipelined, preconditioned)
    }

    pub const fn p_bicgstab_rr(preconditioned: bool) -> Self {
        Self::new(Family::Bicgstab, Form::PipelinedRr, preconditioned)
    }

    pub const fn cg(preconditioned: bool) -> Self {
        Self::new(Family::Cg, Form::Standard, preconditioned)
    }

    pub const fn cg_cg(preconditioned: bool) -> Self {
        Self::new(Family::Cg, Form::ChronoGear, preconditioned)
    }

    pub const fn p_cg(preconditioned: bool) -> Self {
        Self::new(Family::Cg, Form::Pipelined, preconditioned)
    }

    pub const fn with_alpha(mut self, alpha_formula: AlphaFormula) -> Self {
        self.alpha_formula = alpha_formula;
        self
    }

    pub fn validate(&self) -> Result<()> {
        match (self.family, self.form) {
            (Family::Cg, Form::Ca | Form::PipelinedRr) => Err(Error::Incompatible(format!(
                "form {:?} is only defined for BiCGStab",
                self.form
            ))),
            (Family::Bicgstab, Form::ChronoGear) => Err(Error::Incompatible(
                "the Chronopoulos-Gear form is only defined for CG".into(),
            )),
            _ => Ok(()),
        }
    }

    /// Short name, e.g. `p-bicgstab-rr`.
    pub fn name(&self) -> &'static str {
        match (self.family, self.form) {
            (Family::Bicgstab, Form::Standard) => "bicgstab",
            (Family::Bicgstab, Form::Ca) => "ca-bicgstab",
            (Family::Bicgstab, Form::Pipelined) => "p-bicgstab",
            (Family::Bicgstab, Form::PipelinedRr) => "p-bicgstab-rr",
            (Family::Cg, Form::Standard) => "cg",
            (Family::Cg, Form::ChronoGear) => "cg-cg",
            (Family::Cg, Form::Pipelined) => "p-cg",
            _ => "invalid",
        }
    }
}

impl fmt::Display for SolverVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Parses a variant name; `preconditioned` defaults to `false`.
impl FromStr for SolverVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let v = match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "bicgstab" => Self::bicgstab(false),
            "ca-bicgstab" => Self::ca_bicgstab(false),
            "p-bicgstab" => Self::p_bicgstab(false),
            "p-bicgstab-rr" => Self::p_bicgstab_rr(false),
            "cg" => Self::cg(false),
            "cg-cg" => Self::cg_cg(false),
            "p-cg" => Self::p_cg(false),
            other => {
                return Err(Error::InvalidArgument(format!(
                    "unknown solver variant '{other}'"
                )))
            }
        };
        Ok(v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveConfig {
    /// Stop once `|r_i|_2 / |r_0|_2 <= rtol` (recursive residual).
    pub rtol: f64,
    pub max_iter: usize,
    /// Residual replacement period `k` for `pipelined_rr`.
    pub replacement_period: Option<usize>,
    /// A denominator `d` is treated as zero when `|d| <= breakdown_eps * |r_0|_2^2`.
    pub breakdown_eps: f64,
    /// Compute `|b - A x_i|_2` every this many iterations (0 = never).
    pub record_true_residual_every: usize,
    pub executor: Executor,
    pub reduction: ReductionOrder,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            rtol: 1e-6,
            max_iter: 10_000,
            replacement_period: None,
            breakdown_eps: 1e-30,
            record_true_residual_every: 1,
            executor: Executor::Sequential,
            reduction: ReductionOrder::Sequential,
        }
    }
}

impl SolveConfig {
    pub fn validate(&self, variant: &SolverVariant) -> Result<()> {
        if !(self.rtol > 0.0) {
            return Err(Error::InvalidArgument(format!("rtol must be positive, got {}", self.rtol)));
        }
        if !(self.breakdown_eps >= 0.0) {
            return Err(Error::InvalidArgument("breakdown_eps must be non-negative".into()));
        }
        if variant.form == Form::PipelinedRr {
            match self.replacement_period {
                Some(k) if k >= 1 => {}
                _ => {
                    return Err(Error::InvalidArgument(
                        "pipelined_rr needs a replacement period k >= 1".into(),
                    ))
                }
            }
        }
        Ok(())
    }
}

/// `alpha`, `omega`, `beta` of one BiCGStab iteration (`beta` is absent when
/// the iteration converged before it was formed). CG reports `alpha`/`beta`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepScalars<T> {
    pub alpha: T,
    pub omega: Option<T>,
    pub beta: Option<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepOutcome {
    /// Iteration executed; not yet converged.
    Advanced,
    /// Iteration executed and the stopping test is now satisfied.
    Converged,
    /// The state had already converged; nothing was executed.
    AlreadyConverged,
    /// Iteration executed, but the next one cannot be formed.
    Breakdown(BreakdownKind),
}

#[derive(Debug, Clone)]
pub struct StepReport<T> {
    /// Index `i` of the iteration; afterwards the iterate is `x_{i+1}`.
    pub iteration: usize,
    pub events: Vec<Event>,
    /// Extra phases spent on residual replacement in this iteration.
    pub replacement_events: Vec<Event>,
    pub replaced: bool,
    /// Recursive residual norm after the step.
    pub residual_norm: f64,
    pub scalars: Option<StepScalars<T>>,
    pub outcome: StepOutcome,
}

/// Points inside an iteration where an inspection hook is invoked.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Checkpoint {
    /// Right after the six replacement assignments.
    AfterReplacement,
}

/// Read access to the named vectors of a solver state (`"x"`, `"r"`,
/// `"w"`, `"r_hat"`, ...). Names follow the algorithm symbols; hatted
/// vectors carry a `_hat` suffix and the shadow residual is `"r0"`.
pub trait VectorAccess<T> {
    fn vector(&self, name: &str) -> Option<&[T]>;
}

pub trait KrylovSolver<T: Scalar>: VectorAccess<T> + Send {
    fn variant(&self) -> SolverVariant;

    /// Number of iterations executed so far.
    fn iteration(&self) -> usize;

    fn x(&self) -> &[T];

    fn initial_residual_norm(&self) -> f64;

    /// Recursive residual norm of the current iterate.
    fn residual_norm(&self) -> f64;

    fn is_converged(&self) -> bool;

    /// Breakdown recorded during setup or a previous step.
    fn breakdown(&self) -> Option<(BreakdownKind, usize)>;

    /// Phases executed by the setup phase.
    fn setup_events(&self) -> &[Event];

    /// Executes one iteration; `hook` sees the state at each [`Checkpoint`].
    fn step_with(
        &mut self,
        hook: &mut dyn FnMut(Checkpoint, &dyn VectorAccess<T>),
    ) -> Result<StepReport<T>>;

    fn step(&mut self) -> Result<StepReport<T>> {
        self.step_with(&mut |_, _| {})
    }
}

/// Operator, preconditioner and configuration shared by all forms, plus the
/// event-emitting wrappers around the kernels.
pub(crate) struct Engine<'a, T: Scalar> {
    pub a: &'a CsrMatrix<T>,
    pub b: &'a [T],
    pub m: &'a dyn Preconditioner<T>,
    pub cfg: SolveConfig,
    pub variant: SolverVariant,
    /// Absolute breakdown threshold.
    pub threshold: f64,
    pub r0_norm: f64,
    /// `rtol * |r0|`.
    pub target: f64,
}

impl<'a, T: Scalar> Engine<'a, T> {
    fn new(
        a: &'a CsrMatrix<T>,
        b: &'a [T],
        x0: &[T],
        m: &'a dyn Preconditioner<T>,
        variant: SolverVariant,
        cfg: SolveConfig,
    ) -> Result<Self> {
        variant.validate()?;
        cfg.validate(&variant)?;
        if !a.is_square() {
            return Err(Error::NotSquare {
                rows: a.n_rows(),
                cols: a.n_cols(),
            });
        }
        let n = a.n_rows();
        check_len("solve (b)", n, b.len())?;
        check_len("solve (x0)", n, x0.len())?;
        check_len("solve (preconditioner)", n, m.dim())?;
        if !variant.preconditioned && !m.is_identity() {
            return Err(Error::Incompatible(format!(
                "unpreconditioned {} was given a {:?} preconditioner",
                variant.name(),
                m.kind()
            )));
        }
        Ok(Engine {
            a,
            b,
            m,
            cfg,
            variant,
            threshold: 0.0,
            r0_norm: 0.0,
            target: 0.0,
        })
    }

    /// Computes `r0 = b - A x0`, fixes the breakdown threshold and target.
    fn initial_residual(&mut self, x0: &[T], ev: &mut Vec<Event>) -> Result<Vec<T>> {
        let mut r = vec![T::zero(); self.n()];
        self.spmv(x0, &mut r, ev)?;
        kernels::update2(&mut r, self.b, |ri, bi| *ri = bi.clone() - ri.clone());
        ev.push(Event::Axpy);
        Ok(r)
    }

    /// Records `|r0|` and derives the breakdown threshold and target from it.
    fn set_reference(&mut self, r0_dot: &T) {
        let rr = r0_dot.to_f64();
        self.r0_norm = rr.sqrt();
        self.threshold = self.cfg.breakdown_eps * rr;
        self.target = self.cfg.rtol * self.r0_norm;
    }

    pub fn n(&self) -> usize {
        self.a.n_rows()
    }

    pub fn spmv(&self, x: &[T], y: &mut [T], ev: &mut Vec<Event>) -> Result<()> {
        kernels::spmv_into(self.a, x, y)?;
        ev.push(Event::Spmv);
        Ok(())
    }

    /// `y = M^{-1} x`. For unpreconditioned forms this is a plain copy and
    /// emits no event.
    pub fn precond(&self, x: &[T], y: &mut [T], ev: &mut Vec<Event>) -> Result<()> {
        if self.variant.preconditioned {
            self.m.apply_into(x, y)?;
            ev.push(Event::Precond);
        } else {
            y.clone_from_slice(x);
        }
        Ok(())
    }

    pub fn dot(&self, x: &[T], y: &[T]) -> T {
        kernels::dot_unchecked(x, y, self.cfg.reduction)
    }

    /// Whether `v` is indistinguishable from zero as a denominator.
    pub fn tiny(&self, v: &T) -> bool {
        !(v.magnitude().to_f64() > self.threshold)
    }

    /// Runs a reduction window: `dots` on the reduction lane and `compute`
    /// on the compute lane. Records the GLRED event followed by the compute
    /// lane's events.
    pub fn window<R, D, C>(&self, ndots: usize, dots: D, compute: C, ev: &mut Vec<Event>) -> Result<R>
    where
        R: Send,
        D: FnOnce() -> R + Send,
        C: FnOnce(&mut Vec<Event>) -> Result<()> + Send,
    {
        let (r, (res, cev)) = self.cfg.executor.window(dots, || {
            let mut cev = Vec::new();
            let res = compute(&mut cev);
            (res, cev)
        });
        ev.push(Event::Glred {
            dots: ndots,
            overlapped: true,
        });
        ev.extend(cev);
        res?;
        Ok(r)
    }

    pub fn converged(&self, norm: f64) -> bool {
        norm <= self.target
    }

    pub fn breakdown(&self, kind: BreakdownKind, iteration: usize) -> Error {
        Error::Breakdown { kind, iteration }
    }
}

/// Operands of the merged `alpha_{i+1}` formula.
#[derive(Debug, Clone, PartialEq)]
pub struct MergedDots<T> {
    /// `(r0, r_{i+1})`
    pub r0_r: T,
    /// `(r0, w_{i+1})`
    pub r0_w: T,
    /// `(r0, s_i)`
    pub r0_s: T,
    /// `(r0, z_i)`
    pub r0_z: T,
}

/// `alpha_{i+1}` from the merged reduction, by the four- or three-dot
/// formula. Returns [`BreakdownKind::Alpha`] when a denominator has
/// magnitude `<= threshold`.
pub fn compute_alpha_merged<T: Scalar>(
    dots: &MergedDots<T>,
    beta: &T,
    omega: &T,
    formula: AlphaFormula,
    threshold: f64,
) -> std::result::Result<T, BreakdownKind> {
    let tiny = |v: &T| !(v.magnitude().to_f64() > threshold);
    match formula {
        AlphaFormula::FourDot => {
            let denom = dots.r0_w.clone() + beta.clone() * dots.r0_s.clone()
                - beta.clone() * omega.clone() * dots.r0_z.clone();
            if tiny(&denom) {
                return Err(BreakdownKind::Alpha);
            }
            Ok(dots.r0_r.clone() / denom)
        }
        AlphaFormula::ThreeDot => {
            if tiny(omega) || tiny(&dots.r0_r) {
                return Err(BreakdownKind::Alpha);
            }
            let inv = T::one() / omega.clone() + dots.r0_w.clone() / dots.r0_r.clone()
                - beta.clone() * omega.clone() * dots.r0_z.clone() / dots.r0_r.clone();
            if tiny(&inv) {
                return Err(BreakdownKind::Alpha);
            }
            Ok(T::one() / inv)
        }
    }
}

/// `|b - A x|_2` via an explicit SPMV.
pub fn true_residual<T: Scalar>(a: &CsrMatrix<T>, b: &[T], x: &[T]) -> Result<f64> {
    Ok(kernels::norm2(&kernels::residual(a, b, x)?))
}

/// Creates the state machine for `variant`, running its setup phase.
pub fn new_solver<'a, T: Scalar>(
    a: &'a CsrMatrix<T>,
    b: &'a [T],
    x0: &[T],
    m: &'a dyn Preconditioner<T>,
    variant: SolverVariant,
    cfg: SolveConfig,
) -> Result<Box<dyn KrylovSolver<T> + 'a>> {
    let engine = Engine::new(a, b, x0, m, variant, cfg)?;
    Ok(match (variant.family, variant.form) {
        (Family::Bicgstab, Form::Standard) => Box::new(StandardBicgstab::new(engine, x0)?),
        (Family::Bicgstab, Form::Ca | Form::Pipelined | Form::PipelinedRr) => {
            Box::new(MergedBicgstab::new(engine, x0)?)
        }
        (Family::Cg, Form::Standard) => Box::new(StandardCg::new(engine, x0)?),
        (Family::Cg, Form::ChronoGear) => Box::new(ChronoGearCg::new(engine, x0)?),
        (Family::Cg, Form::Pipelined) => Box::new(PipelinedCg::new(engine, x0)?),
        _ => unreachable!("variant validated by Engine::new"),
    })
}

/// Solves `A x = b` from `x0` and returns the last iterate with its history.
///
/// Breakdown is not an error here: it ends the run and is reported through
/// [`ConvergenceHistory::status`].
pub fn solve<T: Scalar>(
    a: &CsrMatrix<T>,
    b: &[T],
    x0: &[T],
    m: &dyn Preconditioner<T>,
    variant: SolverVariant,
    cfg: &SolveConfig,
) -> Result<(Vec<T>, ConvergenceHistory)> {
    let mut solver = new_solver(a, b, x0, m, variant, cfg.clone())?;
    let history = run(solver.as_mut(), a, b, cfg)?;
    Ok((solver.x().to_vec(), history))
}

/// Drives an already constructed solver until it stops.
pub fn run<T: Scalar>(
    solver: &mut dyn KrylovSolver<T>,
    a: &CsrMatrix<T>,
    b: &[T],
    cfg: &SolveConfig,
) -> Result<ConvergenceHistory> {
    let every = cfg.record_true_residual_every;
    let true_res = |x: &[T], it: usize| -> Result<Option<f64>> {
        if every > 0 && it.is_multiple_of(every) {
            Ok(Some(true_residual(a, b, x)?))
        } else {
            Ok(None)
        }
    };

    let mut history = ConvergenceHistory::new(solver.variant(), solver.initial_residual_norm());
    history.setup = PhaseCounts::from_events(solver.setup_events());
    history.push(IterationRecord {
        iteration: solver.iteration(),
        recursive_residual: solver.residual_norm(),
        true_residual: true_res(solver.x(), 0)?,
        replaced: false,
        alpha: None,
        omega: None,
        beta: None,
        phases: PhaseCounts::default(),
        replacement_phases: PhaseCounts::default(),
    });

    if let Some((kind, iteration)) = solver.breakdown() {
        history.status = TerminalStatus::Breakdown { kind, iteration };
        return Ok(history);
    }
    if solver.is_converged() {
        history.status = TerminalStatus::Converged;
        return Ok(history);
    }

    while solver.iteration() < cfg.max_iter {
        let report = match solver.step() {
            Ok(r) => r,
            Err(Error::Breakdown { kind, iteration }) => {
                history.status = TerminalStatus::Breakdown { kind, iteration };
                return Ok(history);
            }
            Err(e) => return Err(e),
        };
        let it = report.iteration + 1;
        let scalars = report.scalars.as_ref();
        history.push(IterationRecord {
            iteration: it,
            recursive_residual: report.residual_norm,
            true_residual: true_res(solver.x(), it)?,
            replaced: report.replaced,
            alpha: scalars.map(|s| s.alpha.to_f64()),
            omega: scalars.and_then(|s| s.omega.as_ref().map(Scalar::to_f64)),
            beta: scalars.and_then(|s| s.beta.as_ref().map(Scalar::to_f64)),
            phases: PhaseCounts::from_events(&report.events),
            replacement_phases: PhaseCounts::from_events(&report.replacement_events),
        });
        match report.outcome {
            StepOutcome::Advanced => {}
            StepOutcome::Converged | StepOutcome::AlreadyConverged => {
                history.status = TerminalStatus::Converged;
                return Ok(history);
            }
            StepOutcome::Breakdown(kind) => {
                history.status = TerminalStatus::Breakdown {
                    kind,
                    iteration: report.iteration,
                };
                return Ok(history);
            }
        }
    }
    history.status = TerminalStatus::MaxIter;
    Ok(history)
}

/// Returns `Some(report)` for the no-op step on an already finished state.
pub(crate) fn finished_step<T: Scalar>(
    engine: &Engine<'_, T>,
    iteration: usize,
    converged: bool,
    breakdown: Option<(BreakdownKind, usize)>,
    residual_norm: f64,
) -> Option<Result<StepReport<T>>> {
    if let Some((kind, it)) = breakdown {
        return Some(Err(engine.breakdown(kind, it)));
    }
    if converged {
        return Some(Ok(StepReport {
            iteration,
            events: Vec::new(),
            replacement_events: Vec::new(),
            replaced: false,
            residual_norm,
            scalars: None,
            outcome: StepOutcome::AlreadyConverged,
        }));
    }
    None
}
