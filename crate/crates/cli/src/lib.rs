//! Command-line front end for the `pipekrylov` solvers: run specifications,
//! convergence artifacts and the subcommand implementations.

pub mod commands;
pub mod output;
pub mod spec;

pub use spec::RunSpec;
