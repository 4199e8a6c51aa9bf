use clap::{Parser, Subcommand};

/// Compute all complex critical points of an objective on an algebraic
/// variety by monodromy, with an optional trace-test certificate.
#[derive(Debug, Parser)]
#[command(name = "edml", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Data point u as comma-separated components (e.g. "0.75,-0.29" or
    /// "1+2i,3"). A random real point is drawn and reported when omitted.
    #[arg(long, global = true)]
    pub u: Option<String>,

    /// RNG seed; fixed seeds give identical output.
    #[arg(long, global = true, default_value_t = 1729)]
    pub seed: u64,

    /// Stop monodromy once this many critical points are found.
    #[arg(long, global = true)]
    pub bound: Option<usize>,

    /// Run the trace test after monodromy.
    #[arg(long, global = true)]
    pub certify: bool,

    /// Emit the report as JSON on stdout.
    #[arg(long, global = true)]
    pub json: bool,

    /// Cap on tracker worker threads (paths are currently tracked on a
    /// single worker; values > 1 are accepted as an upper bound).
    #[arg(long, global = true, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    pub threads: u32,

    /// Endpoint residual tolerance override.
    #[arg(long = "tol-endpoint", global = true)]
    pub tol_endpoint: Option<f64>,

    /// Deduplication tolerance override.
    #[arg(long = "tol-dedup", global = true)]
    pub tol_dedup: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute all critical points over u.
    Solve {
        /// Problem file (vars/objective/model sections).
        problem: String,
    },
    /// Compute only the number of critical points (the ED- or ML-degree).
    Degree {
        /// Problem file (vars/objective/model sections).
        problem: String,
    },
    /// Run the trace test against a fiber from a previous `solve --json` run.
    TraceCheck {
        /// Problem file (vars/objective/model sections).
        problem: String,
        /// JSON report containing the fiber points.
        #[arg(long)]
        fiber: String,
    },
}
