mod commands;
mod report;
mod setup;
mod validate;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "onetwo", version, about = "Exact and Monte Carlo experiments for the 1-2 model on hexagonal lattices")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct Global {
    /// Region: box:k,n | square:n | cylinder:n,h
    #[arg(long, global = true, default_value = "box:1,1")]
    pub lattice: String,
    /// Edge weights a,b,c (Horizontal, NWSE, NESW)
    #[arg(long, global = true, default_value = "1,1,1")]
    pub weights: String,
    /// `random` (seeded admissible boundary) or a JSON file with `states` or `present`
    #[arg(long, global = true, default_value = "random")]
    pub boundary: String,
    /// Root seed; every random stream derives from it
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = ModeArg::Float)]
    pub mode: ModeArg,
    /// Directory for JSON reports and CSV files
    #[arg(long, global = true)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    /// Largest enumerated state space
    #[arg(long, global = true, default_value_t = 2_000_000)]
    pub max_states: usize,
    /// Largest state space for dense matrix analysis
    #[arg(long, global = true, default_value_t = 2000)]
    pub max_dense: usize,
    #[arg(long, global = true, value_enum, default_value_t = ExecArg::Parallel)]
    #[serde(skip)]
    pub exec: ExecArg,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeArg {
    Float,
    Rational,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExecArg {
    Sequential,
    Parallel,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ChainArg {
    /// Single edge-flip / face-rotation chain
    Single,
    /// Block heat-bath dynamics
    Block,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BlocksArg {
    Strip,
    Square,
    Whole,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CouplingArg {
    Sequential,
    Whole,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RouteArg {
    Direct,
    Pfaffian,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct BlockArgs {
    #[arg(long, value_enum, default_value_t = BlocksArg::Strip)]
    pub blocks: BlocksArg,
    /// Block width
    #[arg(long, default_value_t = 2)]
    pub l: u32,
}

#[derive(Subcommand, Debug, Clone, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Enumerate the state space, partition function and measure
    Enumerate {
        /// Include every state with its probability
        #[arg(long)]
        list: bool,
    },
    /// Run the chain and emit a trajectory
    Sample {
        #[arg(long, default_value_t = 10_000)]
        steps: usize,
        #[arg(long, value_enum, default_value_t = ChainArg::Single)]
        chain: ChainArg,
        #[command(flatten)]
        block: BlockArgs,
        /// Record every `every`-th step
        #[arg(long, default_value_t = 1)]
        every: usize,
    },
    /// Exact mixing time, d(t) curve and relaxation sandwich
    Tmix {
        #[arg(long, default_value_t = 0.25)]
        eps: f64,
        #[arg(long, value_enum, default_value_t = ChainArg::Single)]
        chain: ChainArg,
        #[command(flatten)]
        block: BlockArgs,
        /// Longest emitted d(t) prefix
        #[arg(long, default_value_t = 1000)]
        curve: usize,
    },
    /// Spectral gap and relaxation time
    Gap {
        #[arg(long, value_enum, default_value_t = ChainArg::Single)]
        chain: ChainArg,
        #[command(flatten)]
        block: BlockArgs,
    },
    /// Comparison of block dynamics with the single-move chain
    Compare {
        #[command(flatten)]
        block: BlockArgs,
    },
    /// Coupled block dynamics and contraction estimate
    Couple {
        #[command(flatten)]
        block: BlockArgs,
        #[arg(long, value_enum, default_value_t = CouplingArg::Sequential)]
        coupling: CouplingArg,
        #[arg(long, default_value_t = 20)]
        pairs: usize,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
    },
    /// Spatial mixing condition F(n, eps)
    CheckF {
        #[arg(long, default_value_t = 1)]
        n: u32,
        #[arg(long)]
        a: Option<f64>,
        #[arg(long)]
        b: Option<f64>,
        #[arg(long)]
        c: Option<f64>,
        #[arg(long, default_value_t = onetwo::spatial::EPSILON_PRESET)]
        epsilon: f64,
        #[arg(long, value_enum, default_value_t = RouteArg::Direct)]
        route: RouteArg,
        /// Largest accepted n
        #[arg(long, default_value_t = 1)]
        max_n: u32,
    },
    /// Self-avoiding walk counts and connective-constant anchors
    Saw {
        #[arg(long, default_value_t = 8)]
        kmax: usize,
        #[arg(long, default_value_t = onetwo::spatial::SAW_GUARD)]
        guard: usize,
    },
    /// Weighted perfect matchings of a plane graph by Pfaffian
    Pfaffian {
        /// JSON file {vertices:[[x,y]], edges:[{u,v,w}]}
        #[arg(long)]
        graph: PathBuf,
        /// Cross-check against brute force (at most 24 vertices)
        #[arg(long)]
        brute: bool,
    },
    /// Property checks on the single hexagon and box(2,2)
    Validate,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Enumerate { .. } => "enumerate",
            Command::Sample { .. } => "sample",
            Command::Tmix { .. } => "tmix",
            Command::Gap { .. } => "gap",
            Command::Compare { .. } => "compare",
            Command::Couple { .. } => "couple",
            Command::CheckF { .. } => "check-f",
            Command::Saw { .. } => "saw",
            Command::Pfaffian { .. } => "pfaffian",
            Command::Validate => "validate",
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
