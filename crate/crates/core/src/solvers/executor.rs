use serde::{Deserialize, Serialize};

/// Schedules a reduction window: the inner products (reduction lane) and
/// the SPMV/preconditioner work that does not depend on them (compute lane).
///
/// The reduction lane only borrows its operands immutably and the compute
/// lane never writes them, so both schedules see identical operand values
/// and produce identical bits.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Executor {
    /// Reduction lane, then compute lane, on the calling thread.
    #[default]
    Sequential,
    /// Both lanes concurrently (`rayon::join`). Without the `parallel`
    /// feature this degrades to the sequential schedule.
    Overlapped,
}

impl Executor {
    pub fn window<R, C, FR, FC>(self, reduce: FR, compute: FC) -> (R, C)
    where
        FR: FnOnce() -> R + Send,
        FC: FnOnce() -> C + Send,
        R: Send,
        C: Send,
    {
        match self {
            Executor::Sequential => {
                let r = reduce();
                let c = compute();
                (r, c)
            }
            Executor::Overlapped => {
                #[cfg(feature = "parallel")]
                {
                    rayon::join(reduce, compute)
                }
                #[cfg(not(feature = "parallel"))]
                {
                    let r = reduce();
                    let c = compute();
                    (r, c)
                }
            }
        }
    }
}
