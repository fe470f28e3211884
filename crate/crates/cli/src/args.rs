use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "qctrl", version, about = "Control synthesis for bilinear Schrödinger systems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Certify that a chain is connected and non-resonant.
    Check(CheckArgs),
    /// Synthesize a transfer `--from j --to k` or a permutation `--perm`.
    Synth(SynthArgs),
    /// Propagate a control from an initial state or density matrix.
    Simulate(SimulateArgs),
    /// L¹ upper and lower bounds for permuting the first `m` levels.
    Bounds(BoundsArgs),
    /// Dimension of the Lie algebra generated by the drift and the coupling.
    LieRank(LieRankArgs),
    /// Emit a built-in system as spec JSON.
    Model(ModelArgs),
    /// Synthesize and simulate a transfer over a grid of `eta` and `N`.
    Sweep(SweepArgs),
}

#[derive(Args, Debug, Clone)]
pub struct ChainArgs {
    /// Chain edges as `1-2,2-3,...`; a spanning tree of the coupling graph by default.
    #[arg(long)]
    pub edges: Option<String>,
}

#[derive(Args, Debug)]
pub struct CheckArgs {
    #[arg(long)]
    pub spec: PathBuf,
    #[command(flatten)]
    pub chain: ChainArgs,
    /// Check only the leading `N` levels.
    #[arg(long = "N")]
    pub n: Option<usize>,
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    #[arg(long)]
    pub spec: PathBuf,
    #[arg(long, requires = "to", conflicts_with = "perm")]
    pub from: Option<usize>,
    #[arg(long, requires = "from")]
    pub to: Option<usize>,
    /// Images `σ(1),...,σ(m)` of a permutation of the first `m` levels.
    #[arg(long)]
    pub perm: Option<String>,
    #[arg(long, default_value_t = 0.05)]
    pub eta: f64,
    /// Truncation used for tracking and simulation; all levels by default.
    #[arg(long = "N")]
    pub n: Option<usize>,
    /// Slope floor of the reparametrized control; `1.25/δ` by default.
    #[arg(long)]
    pub delta_bar: Option<f64>,
    #[command(flatten)]
    pub chain: ChainArgs,
    /// Control output, CSV (`value,duration`) or `.json`.
    #[arg(long)]
    pub control: Option<PathBuf>,
    /// Report output; printed to stdout as well.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[arg(long)]
    pub spec: PathBuf,
    /// Control, CSV (`value,duration`) or `.json`.
    #[arg(long)]
    pub control: PathBuf,
    /// A level `k` for `φ_k`, or comma-separated amplitudes `re` or `re:im`.
    #[arg(long, default_value = "1")]
    pub psi0: String,
    /// Level whose overlap with the final state is reported.
    #[arg(long)]
    pub target: Option<usize>,
    /// Initial density matrix JSON, evolved instead of `psi0`.
    #[arg(long)]
    pub density: Option<PathBuf>,
    /// Density matrix the evolved one is compared with.
    #[arg(long, requires = "density")]
    pub density_target: Option<PathBuf>,
    #[arg(long = "N")]
    pub n: Option<usize>,
    /// Trajectory CSV output.
    #[arg(long)]
    pub trajectory: Option<PathBuf>,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct BoundsArgs {
    #[arg(long)]
    pub spec: PathBuf,
    #[arg(long)]
    pub m: usize,
    /// Permutation target for the lower bound; the reversal of `1..=m` by default.
    #[arg(long)]
    pub perm: Option<String>,
    #[arg(long, default_value_t = 0.0)]
    pub eps: f64,
    #[command(flatten)]
    pub chain: ChainArgs,
}

#[derive(Args, Debug)]
pub struct LieRankArgs {
    #[arg(long)]
    pub spec: PathBuf,
    #[arg(long = "N")]
    pub n: Option<usize>,
    /// Largest matrix size accepted.
    #[arg(long, default_value_t = qctrl_core::liealg::DEFAULT_MAX_DIM)]
    pub max_dim: usize,
    /// Rank matrices whose degenerate levels are coupled.
    #[arg(long)]
    pub skip_decoupling_check: bool,
}

#[derive(Args, Debug)]
pub struct ModelArgs {
    #[command(subcommand)]
    pub model: Model,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum Model {
    /// Infinite square well with dipole coupling.
    Well {
        #[arg(long = "N")]
        n: usize,
        #[arg(long, default_value_t = 0.0)]
        eta: f64,
        /// Diagonalize the truncated perturbed Hamiltonian.
        #[arg(long)]
        exact: bool,
    },
    /// Planar rotor in a field along `alpha`, restricted to one parity.
    Molecule {
        #[arg(long = "N")]
        n: usize,
        #[arg(long, default_value_t = 0.0)]
        alpha: f64,
        #[arg(long, value_enum, default_value_t = ParityArg::Even)]
        parity: ParityArg,
    },
    /// Four-level example with degenerate decoupled top levels.
    Ex4,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
pub enum ParityArg {
    Even,
    Odd,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[arg(long)]
    pub spec: PathBuf,
    #[arg(long)]
    pub from: usize,
    #[arg(long)]
    pub to: usize,
    /// Comma-separated values.
    #[arg(long, default_value = "0.2,0.1,0.05")]
    pub eta: String,
    /// Comma-separated truncations; all levels by default.
    #[arg(long = "N")]
    pub n: Option<String>,
    #[command(flatten)]
    pub chain: ChainArgs,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// CSV output; stdout by default.
    #[arg(long)]
    pub out: Option<PathBuf>,
}
