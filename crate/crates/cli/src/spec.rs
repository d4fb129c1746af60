//! Run specification: everything that determines a reproducible run.
//!
//! A spec is built from `key = value` pairs. The config file holds such
//! pairs one per line and command-line flags map onto the same keys, so
//! flags are applied after the file and override it.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use pipekrylov::precond::{self, Identity, Preconditioner};
use pipekrylov::problems::{make_problem, read_matrix_market, stencil_ptp1, stencil_ptp2, LinearProblem, RhsMode};
use pipekrylov::solvers::{AlphaFormula, Executor, SolveConfig, SolverVariant};
use pipekrylov::{CsrMatrix, ReductionOrder};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, PartialEq)]
pub enum ProblemSource {
    Mtx(PathBuf),
    /// `n` x `n` grid.
    Ptp1(usize),
    Ptp2(usize),
}

impl FromStr for ProblemSource {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        let grid = |n: &str| -> Result<usize> {
            n.parse().with_context(|| format!("bad grid size '{n}'"))
        };
        Ok(match s.split_once(':') {
            Some(("ptp1", n)) => ProblemSource::Ptp1(grid(n)?),
            Some(("ptp2", n)) => ProblemSource::Ptp2(grid(n)?),
            Some(("mtx", path)) => ProblemSource::Mtx(path.into()),
            _ => ProblemSource::Mtx(s.into()),
        })
    }
}

impl fmt::Display for ProblemSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProblemSource::Mtx(p) => write!(f, "{}", p.display()),
            ProblemSource::Ptp1(n) => write!(f, "ptp1:{n}"),
            ProblemSource::Ptp2(n) => write!(f, "ptp2:{n}"),
        }
    }
}

impl ProblemSource {
    pub fn label(&self) -> String {
        match self {
            ProblemSource::Mtx(p) => p
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| p.display().to_string()),
            other => other.to_string().replace(':', "_"),
        }
    }

    pub fn matrix(&self) -> Result<CsrMatrix> {
        Ok(match self {
            ProblemSource::Mtx(p) => {
                read_matrix_market(p).with_context(|| format!("reading {}", p.display()))?
            }
            ProblemSource::Ptp1(n) => stencil_ptp1(*n, *n)?,
            ProblemSource::Ptp2(n) => stencil_ptp2(*n, *n)?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RhsChoice {
    Ones,
    InvSqrtN,
    /// Uniform entries in `[-1, 1)` drawn from the run seed.
    Random,
}

impl FromStr for RhsChoice {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "ones" => RhsChoice::Ones,
            "inv-sqrt-n" | "inv_sqrt_n" => RhsChoice::InvSqrtN,
            "random" => RhsChoice::Random,
            _ => bail!("unknown rhs mode '{s}' (ones, inv-sqrt-n, random)"),
        })
    }
}

/// `none` runs the unpreconditioned forms; every other choice runs the
/// preconditioned forms with that operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PrecondChoice {
    None,
    Identity,
    Ilu0,
    BlockJacobi(usize),
}

impl FromStr for PrecondChoice {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "none" => PrecondChoice::None,
            "identity" => PrecondChoice::Identity,
            "ilu0" => PrecondChoice::Ilu0,
            _ => match s.split_once(':') {
                Some(("block-jacobi", b)) => PrecondChoice::BlockJacobi(
                    b.parse().with_context(|| format!("bad block size '{b}'"))?,
                ),
                _ => bail!("unknown preconditioner '{s}' (none, identity, ilu0, block-jacobi:B)"),
            },
        })
    }
}

impl PrecondChoice {
    pub fn build(&self, a: &CsrMatrix) -> Result<Box<dyn Preconditioner<f64>>> {
        Ok(match self {
            PrecondChoice::None | PrecondChoice::Identity => Box::new(Identity::new(a.n_rows())),
            PrecondChoice::Ilu0 => precond::build(a, precond::PrecondKind::Ilu0)?,
            PrecondChoice::BlockJacobi(b) => {
                precond::build(a, precond::PrecondKind::BlockJacobi { block_size: *b })?
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub problem: Option<ProblemSource>,
    pub rhs: RhsChoice,
    pub precond: PrecondChoice,
    pub variants: Vec<SolverVariant>,
    pub solve: SolveConfig,
    pub out_dir: Option<PathBuf>,
    pub seed: u64,
}

impl Default for RunSpec {
    fn default() -> Self {
        RunSpec {
            problem: None,
            rhs: RhsChoice::InvSqrtN,
            precond: PrecondChoice::None,
            variants: vec![SolverVariant::bicgstab(false), SolverVariant::p_bicgstab(false)],
            solve: SolveConfig::default(),
            out_dir: None,
            seed: 0,
        }
    }
}

fn num<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::error::Error + Send + Sync + 'static,
{
    value
        .parse()
        .with_context(|| format!("invalid value '{value}' for '{key}'"))
}

impl RunSpec {
    /// Applies one `key = value` setting. Keys are the long flag names.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key.trim() {
            "problem" => self.problem = Some(value.parse()?),
            "rhs" => self.rhs = value.parse()?,
            "precond" => self.precond = value.parse()?,
            "variants" => {
                self.variants = value
                    .split(',')
                    .map(|v| v.parse::<SolverVariant>().map_err(|e| anyhow!(e)))
                    .collect::<Result<_>>()?
            }
            "alpha-formula" => {
                let f = match value {
                    "four-dot" => AlphaFormula::FourDot,
                    "three-dot" => AlphaFormula::ThreeDot,
                    _ => bail!("unknown alpha formula '{value}' (four-dot, three-dot)"),
                };
                self.variants = self.variants.iter().map(|v| v.with_alpha(f)).collect();
            }
            "rtol" => self.solve.rtol = num(key, value)?,
            "max-iter" => self.solve.max_iter = num(key, value)?,
            "replacement-period" => self.solve.replacement_period = Some(num(key, value)?),
            "breakdown-eps" => self.solve.breakdown_eps = num(key, value)?,
            "record-every" => self.solve.record_true_residual_every = num(key, value)?,
            "executor" => {
                self.solve.executor = match value {
                    "sequential" => Executor::Sequential,
                    "overlapped" => Executor::Overlapped,
                    _ => bail!("unknown executor '{value}' (sequential, overlapped)"),
                }
            }
            "reduction" => {
                self.solve.reduction = match value.split_once(':') {
                    None if value == "sequential" => ReductionOrder::Sequential,
                    Some(("tree", c)) => ReductionOrder::Tree { chunk: num(key, c)? },
                    _ => bail!("unknown reduction order '{value}' (sequential, tree:CHUNK)"),
                }
            }
            "out-dir" => self.out_dir = Some(value.into()),
            "seed" => self.seed = num(key, value)?,
            other => bail!("unknown setting '{other}'"),
        }
        Ok(())
    }

    /// Parses a flat config text: `key = value` lines, `#` comments.
    pub fn apply_config_text(&mut self, text: &str) -> Result<()> {
        for (no, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("line {}: expected 'key = value'", no + 1))?;
            self.set(k, v).with_context(|| format!("line {}", no + 1))?;
        }
        Ok(())
    }

    pub fn apply_config_file(&mut self, path: &Path) -> Result<()> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        self.apply_config_text(&text)
            .with_context(|| format!("in {}", path.display()))
    }

    /// Variants with the preconditioned flag implied by `precond`.
    pub fn resolved_variants(&self) -> Vec<SolverVariant> {
        let pre = self.precond != PrecondChoice::None;
        self.variants
            .iter()
            .map(|v| SolverVariant { preconditioned: pre, ..*v })
            .collect()
    }

    pub fn build_problem(&self, source: &ProblemSource) -> Result<LinearProblem> {
        let a = source.matrix()?;
        let mode = match self.rhs {
            RhsChoice::Ones => RhsMode::Ones,
            RhsChoice::InvSqrtN => RhsMode::InvSqrtN,
            RhsChoice::Random => {
                let mut g = ChaCha8Rng::seed_from_u64(self.seed);
                RhsMode::Given((0..a.n_cols()).map(|_| g.random_range(-1.0..1.0)).collect())
            }
        };
        Ok(make_problem(a, mode, source.label())?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.variants.is_empty() {
            bail!("no solver variants requested");
        }
        for v in self.resolved_variants() {
            v.validate()?;
            self.solve.validate(&v)?;
        }
        Ok(())
    }
}
