use std::fmt;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Which inner product vanished when an iteration broke down.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BreakdownKind {
    /// `(r0, r_i)` vanished; `beta` cannot be formed.
    Rho,
    /// Denominator of `alpha` (`(r0, s_i)` or its merged equivalent).
    Alpha,
    /// `(y_i, y_i)` vanished with a non-zero residual.
    Omega,
    /// `omega_i = 0` while the residual is still non-zero.
    Stagnation,
    /// CG: `(r_i, u_i)` vanished.
    Gamma,
    /// CG: `(s_i, p_i)` or the merged curvature term vanished.
    Curvature,
}

impl fmt::Display for BreakdownKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            BreakdownKind::Rho => "rho",
            BreakdownKind::Alpha => "alpha",
            BreakdownKind::Omega => "omega",
            BreakdownKind::Stagnation => "stagnation",
            BreakdownKind::Gamma => "gamma",
            BreakdownKind::Curvature => "curvature",
        };
        f.write_str(s)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch in {op}: expected {expected}, got {found}")]
    DimensionMismatch {
        op: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("invalid CSR structure: {0}")]
    InvalidCsr(String),
    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix market line {line}: {msg}")]
    MatrixMarket { line: usize, msg: String },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("ILU(0) breakdown: zero or missing pivot in row {row}")]
    ZeroPivot { row: usize },
    #[error("singular diagonal block {block} (rows {start}..{end})")]
    SingularBlock {
        block: usize,
        start: usize,
        end: usize,
    },
    #[error("{kind} breakdown at iteration {iteration}")]
    Breakdown {
        kind: BreakdownKind,
        iteration: usize,
    },
    #[error("incompatible solver configuration: {0}")]
    Incompatible(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub(crate) fn check_len(op: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch {
            op,
            expected,
            found,
        });
    }
    Ok(())
}
