//! Command-line options for each experiment; these double as the
//! library-level configuration structs.

use std::path::PathBuf;

use clap::{Args, ValueEnum};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
pub enum ModeArg {
    Coal,
    Frag,
    Dynperc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
pub enum FormatArg {
    Jsonl,
    Csv,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SampleConfig {
    /// Vertex count.
    #[arg(long)]
    pub n: u32,
    /// Critical-window parameter.
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
    pub lambda: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Snapshot file to write.
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SimulateConfig {
    #[arg(long)]
    pub n: u32,
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
    pub lambda: f64,
    #[arg(long, value_enum)]
    pub mode: ModeArg,
    /// Clock intensity override; defaults to the critical intensity of the
    /// mode (n^-4/3 for coal, n^-1/3 for frag and dynperc).
    #[arg(long)]
    pub rate: Option<f64>,
    /// Refresh probability override for dynperc; defaults to p(lambda, n).
    #[arg(long)]
    pub p_refresh: Option<f64>,
    /// Horizon T.
    #[arg(long, default_value_t = 1.0)]
    pub t_max: f64,
    /// Comma-separated snapshot times.
    #[arg(long, value_delimiter = ',')]
    pub snapshots: Vec<f64>,
    #[arg(long, default_value_t = 1)]
    pub replicas: u32,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory.
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
    /// Aggregate summary format.
    #[arg(long, value_enum, default_value = "csv")]
    pub format: FormatArg,
    /// Record full edge lists in every snapshot.
    #[arg(long, default_value_t = false)]
    pub full_state: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct StructureConfig {
    #[arg(long)]
    pub n: u32,
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
    pub lambda: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Trimming scale in units of n^-1/3 (emitted per component when set).
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DualityConfig {
    #[arg(long, default_value_t = 50)]
    pub n: u32,
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
    pub lambda: f64,
    /// Window shift s: compares coalescence from lambda with fragmentation
    /// from lambda + s.
    #[arg(long, default_value_t = 1.0)]
    pub shift: f64,
    #[arg(long, default_value_t = 10_000)]
    pub replicas: u32,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct McStructureConfig {
    /// Graph size whose component sizes seed the mass vector.
    #[arg(long, default_value_t = 2000)]
    pub n: u32,
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
    pub lambda: f64,
    /// Significance scale.
    #[arg(long, default_value_t = 0.2)]
    pub epsilon: f64,
    /// Horizon the thresholds are built for; classification runs at this
    /// time unless --snapshots overrides the grid.
    #[arg(long, default_value_t = 1.0)]
    pub t_max: f64,
    /// Optional classification time grid.
    #[arg(long, value_delimiter = ',')]
    pub snapshots: Vec<f64>,
    #[arg(long, default_value_t = 2000)]
    pub replicas: u32,
    /// Monte-Carlo sample count for the K quantile.
    #[arg(long, default_value_t = 10_000)]
    pub k_samples: u32,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
pub enum LemmaArg {
    TailBound,
    Bipartite,
    SizePerturbation,
    MonotoneDifference,
    All,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct LemmaCheckConfig {
    #[arg(long, value_enum, default_value = "all")]
    pub lemma: LemmaArg,
    /// Random instances per exhaustive check.
    #[arg(long, default_value_t = 500)]
    pub instances: u32,
    /// Monte-Carlo replicas per probabilistic check.
    #[arg(long, default_value_t = 10_000)]
    pub replicas: u32,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
pub enum GhpModeArg {
    Exact,
    Bounds,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GhpConfig {
    /// Space or collection JSON file.
    #[arg(long)]
    pub file_a: PathBuf,
    #[arg(long)]
    pub file_b: PathBuf,
    #[arg(long, value_enum, default_value = "exact")]
    pub mode: GhpModeArg,
    /// Optional report destination; stdout otherwise.
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ConvergenceConfig {
    /// Ascending vertex counts, at least three.
    #[arg(long, value_delimiter = ',')]
    pub n_list: Vec<u32>,
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
    pub lambda: f64,
    #[arg(long, default_value_t = 500)]
    pub replicas: u32,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}
