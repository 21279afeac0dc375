use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use coherence_core::OperationClass;

/// Default master seed of the self-test corpus.
pub const SELFTEST_SEED: u64 = 0x00c0_4e7e_2024;

#[derive(Debug, Parser)]
#[command(name = "coherence", version, about = "Coherence monotones and one-shot coherence distillation")]
pub struct Cli {
    /// Emit a single JSON document on stdout instead of text or CSV.
    #[arg(long, global = true)]
    pub json: bool,
    /// Write the primary output to this file instead of stdout.
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Master seed for sampling commands.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate a coherence monotone of a state.
    Monotone(MonotoneArgs),
    /// One-shot distillable coherence of a state.
    Distill(DistillArgs),
    /// Haar-random pure states and their zero-error distillation statistics.
    ///
    /// CSV columns: sample_index, max_prob (largest |ψ_i|²), zero_error_bits
    /// (log₂⌊1/max_prob⌋), fidelity_at_2 (best fidelity with the two-level
    /// maximally coherent state). The summary (fraction with at least one
    /// zero-error bit, its Haar expectation 1 − d·2^(1−d), and the Monte Carlo
    /// standard error) goes to stderr, or into the document with --json.
    SampleHaar(SampleHaarArgs),
    /// Per-copy one-shot rate of ψ^⊗n for n = 1..n_max.
    ///
    /// CSV columns: n, rate_per_copy (log₂ m / n), C_r_reference (the
    /// relative entropy of coherence of ψ, repeated on every row).
    RateScan(RateScanArgs),
    /// Cross-check every route on a seeded corpus of Haar states.
    Selftest(SelftestArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Variant {
    /// Θ_m (requires --m).
    Theta,
    /// Θ̂_m (requires --m).
    ThetaHat,
    /// Robustness of coherence.
    Robustness,
    /// Modified trace distance of coherence.
    ModTrace,
    /// Trace distance of coherence.
    Trace,
    /// Relative entropy of coherence, in bits.
    RelEnt,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Self::Theta => "theta",
            Self::ThetaHat => "theta-hat",
            Self::Robustness => "robustness",
            Self::ModTrace => "mod-trace",
            Self::Trace => "trace",
            Self::RelEnt => "rel-ent",
        }
    }
}

#[derive(Debug, Args)]
pub struct MonotoneArgs {
    /// JSON state file.
    pub state_file: PathBuf,
    /// Monotone to evaluate.
    #[arg(long, value_enum)]
    pub variant: Variant,
    /// Target dimension parameter of theta and theta-hat (any real m ≥ 0).
    #[arg(long)]
    pub m: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ClassArg {
    Mio,
    Dio,
    Sio,
    Io,
}

impl From<ClassArg> for OperationClass {
    fn from(c: ClassArg) -> Self {
        match c {
            ClassArg::Mio => Self::Mio,
            ClassArg::Dio => Self::Dio,
            ClassArg::Sio => Self::Sio,
            ClassArg::Io => Self::Io,
        }
    }
}

#[derive(Debug, Args)]
pub struct DistillArgs {
    /// JSON state file.
    pub state_file: PathBuf,
    /// Allowed infidelity, in [0, 1).
    #[arg(long, default_value_t = 0.0)]
    pub epsilon: f64,
    /// Class of free operations. SIO and IO accept pure states only.
    #[arg(long, value_enum, default_value_t = ClassArg::Mio)]
    pub class: ClassArg,
}

#[derive(Debug, Args)]
pub struct SampleHaarArgs {
    /// Hilbert space dimension.
    #[arg(long, required_unless_present = "spec", conflicts_with = "spec")]
    pub dim: Option<usize>,
    /// Number of samples.
    #[arg(long, required_unless_present = "spec", conflicts_with = "spec")]
    pub samples: Option<u64>,
    /// JSON experiment spec with dimension, sample_count, seed and optional output.
    #[arg(long, value_name = "PATH")]
    pub spec: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RateScanArgs {
    /// JSON file holding a pure state.
    pub state_file: PathBuf,
    /// Allowed infidelity, in [0, 1).
    #[arg(long, default_value_t = 0.0)]
    pub epsilon: f64,
    /// Largest number of copies.
    #[arg(long, default_value_t = 8)]
    pub n_max: u32,
}

#[derive(Debug, Args)]
pub struct SelftestArgs {
    /// Largest accepted discrepancy between routes. Zero turns the run into a
    /// negative control that must fail.
    #[arg(long, default_value_t = 1e-6)]
    pub tolerance: f64,
    /// Haar states per dimension d = 2..8.
    #[arg(long, default_value_t = 50)]
    pub states_per_dim: usize,
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn parses_global_flags_after_subcommand() {
        let cli = Cli::try_parse_from(["coherence", "sample-haar", "--dim", "4", "--samples", "3", "--json"]).unwrap();
        assert!(cli.json);
        assert!(Cli::try_parse_from(["coherence", "sample-haar", "--dim", "4"]).is_err());
    }
}
