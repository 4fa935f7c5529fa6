//! Config-driven experiment runner writing CSV artifacts.

pub mod config;
pub mod experiments;

use std::fmt;

use needleseek_core::Error as CoreError;

pub use config::{ExperimentConfig, ExperimentKind, ExperimentParams, ObjectiveSpec, SignalChoice};
pub use experiments::{gradient_flow_baseline, run_experiment, ExperimentOutput};

/// Samples above which a run prints a memory warning.
pub const SAMPLE_WARNING: f64 = 1e7;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Numeric(String),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io { .. } => 2,
            CliError::Numeric(_) => 3,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Numeric(_) => "numeric",
            CliError::Io { .. } => "io",
        }
    }

    /// Single-line `key=value` form for stderr.
    pub fn machine_line(&self) -> String {
        let message = self.to_string().replace('\\', "\\\\").replace('"', "\\\"").replace('\n', " ");
        format!("error kind={} code={} message=\"{}\"", self.kind(), self.exit_code(), message)
    }

    pub(crate) fn from_core(context: impl fmt::Display, e: CoreError) -> Self {
        match e {
            CoreError::InvalidParameter(_) | CoreError::Misaligned { .. } => {
                CliError::Config(format!("{context}: {e}"))
            }
            _ => CliError::Numeric(format!("{context}: {e}")),
        }
    }
}

/// Worker count from `NEEDLESEEK_THREADS` (default 1).
pub fn thread_count() -> Result<usize, CliError> {
    match std::env::var("NEEDLESEEK_THREADS") {
        Err(_) => Ok(1),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(n),
            _ => Err(CliError::Config(format!(
                "NEEDLESEEK_THREADS must be a positive integer (got `{v}`)"
            ))),
        },
    }
}

/// Applies `f` to every item on up to `threads` workers; results keep input order.
pub fn parallel_map<T, R, F>(items: &[T], threads: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync,
{
    let threads = threads.clamp(1, items.len().max(1));
    if threads == 1 {
        return items.iter().map(&f).collect();
    }
    let chunk = items.len().div_ceil(threads);
    std::thread::scope(|scope| {
        let handles: Vec<_> = items
            .chunks(chunk)
            .map(|part| {
                let f = &f;
                scope.spawn(move || part.iter().map(f).collect::<Vec<R>>())
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("worker thread panicked"))
            .collect()
    })
}
