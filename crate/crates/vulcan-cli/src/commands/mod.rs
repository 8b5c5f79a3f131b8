//! Subcommand implementations.

pub mod convergence;
pub mod counterexample;
pub mod run;
pub mod sweep;
pub mod verify;

/// Successful command outcomes that still map to distinct exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmdOutcome {
    Ok,
    NoSolution,
    VerificationFailure,
}

/// Errors split by exit code: configuration problems (exit 2) versus
/// internal failures (exit 1).
#[derive(Debug)]
pub enum CliError {
    Config(anyhow::Error),
    Internal(anyhow::Error),
}

impl CliError {
    pub fn internal(e: impl Into<anyhow::Error>) -> Self {
        CliError::Internal(e.into())
    }
}

/// Ordered parallel map over replicate indices; sequential without the
/// `parallel` feature. Output order always matches the index order.
pub fn map_replicates<T: Send>(n: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}
