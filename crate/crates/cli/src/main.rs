use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use pipekrylov_cli::commands::{
    cmd_compare, cmd_costmodel, cmd_generate, cmd_solve, fixture_sources, CompareMode, CostOptions,
    StencilKind,
};
use pipekrylov_cli::spec::ProblemSource;
use pipekrylov_cli::RunSpec;

#[derive(Parser)]
#[command(name = "pipekrylov", version, about = "Pipelined Krylov solver experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one problem with a list of variants and write convergence histories.
    Solve(RunArgs),
    /// Compare variants over a set of matrices.
    Compare {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_enum, default_value = "table2")]
        mode: CompareMode,
        /// Directory whose .mtx files are compared (in name order).
        #[arg(long)]
        fixtures: Option<PathBuf>,
        /// Additional problems (ptp1:N, ptp2:N or a .mtx path).
        problems: Vec<String>,
    },
    /// Per-iteration cost table and predicted strong scaling.
    Costmodel(CostArgs),
    /// Write a stencil matrix in Matrix Market format.
    Generate {
        #[arg(long, value_enum)]
        kind: StencilKind,
        /// Grid points per direction.
        #[arg(long)]
        n: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Flags mirror the config-file keys; flags override the file.
#[derive(Args)]
struct RunArgs {
    /// Flat `key = value` file with any of the settings below.
    #[arg(long)]
    config: Option<PathBuf>,
    /// ptp1:N, ptp2:N, or a Matrix Market path.
    #[arg(long)]
    problem: Option<String>,
    /// ones, inv-sqrt-n or random.
    #[arg(long)]
    rhs: Option<String>,
    /// none, identity, ilu0 or block-jacobi:B.
    #[arg(long)]
    precond: Option<String>,
    /// Comma-separated: bicgstab, ca-bicgstab, p-bicgstab, p-bicgstab-rr, cg, cg-cg, p-cg.
    #[arg(long)]
    variants: Option<String>,
    /// four-dot or three-dot.
    #[arg(long)]
    alpha_formula: Option<String>,
    #[arg(long)]
    rtol: Option<String>,
    #[arg(long)]
    max_iter: Option<String>,
    /// Residual replacement period k.
    #[arg(long)]
    replacement_period: Option<String>,
    #[arg(long)]
    breakdown_eps: Option<String>,
    /// Record the true residual every N iterations (0 = never).
    #[arg(long)]
    record_every: Option<String>,
    /// sequential or overlapped.
    #[arg(long)]
    executor: Option<String>,
    /// sequential or tree:CHUNK.
    #[arg(long)]
    reduction: Option<String>,
    #[arg(long)]
    out_dir: Option<String>,
    /// Seed for randomized right-hand sides.
    #[arg(long)]
    seed: Option<String>,
}

impl RunArgs {
    fn spec(&self) -> Result<RunSpec> {
        let mut spec = RunSpec::default();
        if let Some(path) = &self.config {
            spec.apply_config_file(path)?;
        }
        let flags = [
            ("problem", &self.problem),
            ("rhs", &self.rhs),
            ("precond", &self.precond),
            ("variants", &self.variants),
            ("alpha-formula", &self.alpha_formula),
            ("rtol", &self.rtol),
            ("max-iter", &self.max_iter),
            ("replacement-period", &self.replacement_period),
            ("breakdown-eps", &self.breakdown_eps),
            ("record-every", &self.record_every),
            ("executor", &self.executor),
            ("reduction", &self.reduction),
            ("out-dir", &self.out_dir),
            ("seed", &self.seed),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                spec.set(key, v).with_context(|| format!("--{key}"))?;
            }
        }
        Ok(spec)
    }
}

#[derive(Args)]
struct CostArgs {
    /// Print the per-iteration cost table.
    #[arg(long)]
    table1: bool,
    /// GLRED duration for the speedup summary.
    #[arg(long, default_value_t = 1.0)]
    tg: f64,
    /// SPMV duration for the speedup summary.
    #[arg(long, default_value_t = 1.0)]
    ts: f64,
    /// Nonzeros of the modelled operator.
    #[arg(long, default_value_t = 4_996_000)]
    nnz: u64,
    /// Process count at which GLRED and SPMV take equally long.
    #[arg(long, default_value_t = 20)]
    p_equal: u32,
    /// Latency constant per reduction tree level.
    #[arg(long, default_value_t = 1.0)]
    c_lat: f64,
    /// Comma-separated process counts (default 1..20).
    #[arg(long, value_delimiter = ',')]
    p_list: Option<Vec<u32>>,
    /// Write the scaling CSV here instead of stdout.
    #[arg(long)]
    csv: Option<PathBuf>,
}

/// Writes to stdout, reporting a closed pipe as an error instead of panicking.
fn emit(text: &str) -> Result<()> {
    let mut out = io::stdout().lock();
    out.write_all(text.as_bytes())?;
    out.flush()?;
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Solve(args) => {
            let spec = args.spec()?;
            let outcome = cmd_solve(&spec)?;
            emit(&(serde_json::to_string_pretty(&outcome.summary)? + "\n"))?;
            Ok(outcome.all_converged())
        }
        Command::Compare {
            run,
            mode,
            fixtures,
            problems,
        } => {
            let spec = run.spec()?;
            let mut sources = match &fixtures {
                Some(dir) => fixture_sources(dir)?,
                None => Vec::new(),
            };
            for p in &problems {
                sources.push(p.parse::<ProblemSource>()?);
            }
            let report = cmd_compare(&spec, &sources, mode)?;
            emit(&report.render())?;
            if let Some(dir) = &spec.out_dir {
                fs::create_dir_all(dir)?;
                fs::write(dir.join("compare.csv"), report.csv())?;
            }
            Ok(mode == CompareMode::Table3 || report.all_converged())
        }
        Command::Costmodel(a) => {
            let mut o = CostOptions {
                table1: a.table1,
                t_glred: a.tg,
                t_spmv: a.ts,
                nnz: a.nnz,
                p_equal: a.p_equal,
                c_lat: a.c_lat,
                ..CostOptions::default()
            };
            if let Some(p) = a.p_list {
                o.p_list = p;
            }
            let (report, csv) = cmd_costmodel(&o)?;
            emit(&report)?;
            match &a.csv {
                Some(path) => fs::write(path, csv).with_context(|| format!("writing {}", path.display()))?,
                None => emit(&format!("\n{csv}"))?,
            }
            Ok(true)
        }
        Command::Generate { kind, n, out } => {
            cmd_generate(kind, n, &out)?;
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
