mod commands;
mod config;
mod jsonfmt;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::{BackendKind, SandboxKind};

#[derive(Parser)]
#[command(name = "layerflow", version, about = "Layered multi-agent topology tooling")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classify a topology: prints {"class": "ok"} or the error class.
    Validate(ValidateArgs),
    /// Print density scores of a valid topology.
    Score(ScoreArgs),
    /// Compose per-turn rewards and the return from a JSON description.
    Reward(RewardArgs),
    /// Run episodes and append trajectories as JSONL.
    Run(RunArgs),
    /// Filter or summarize topology corpora.
    #[command(subcommand)]
    Corpus(CorpusCommand),
    /// Group-relative advantages and the clipped surrogate.
    #[command(subcommand)]
    Grpo(GrpoCommand),
}

#[derive(Clone, Copy, ValueEnum)]
pub enum InputKind {
    /// Bare YAML.
    Yaml,
    /// Free text holding a fenced YAML block.
    Text,
}

#[derive(Args)]
pub struct TopologyInput {
    /// Topology file, or `-` for standard input.
    pub file: PathBuf,
    /// How to read the input. Defaults to `yaml` for .yaml/.yml files and
    /// `text` otherwise.
    #[arg(long = "as", value_enum)]
    pub kind: Option<InputKind>,
    /// Previous turn's topology, whose agent ids later refs may name.
    #[arg(long)]
    pub prior: Option<PathBuf>,
    /// Difficulty assumed when the topology omits it.
    #[arg(long)]
    pub fallback_difficulty: Option<u8>,
}

#[derive(Args)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub input: TopologyInput,
}

#[derive(Args)]
pub struct ScoreArgs {
    #[command(flatten)]
    pub input: TopologyInput,
    /// Difficulty level used for N_max; defaults to the topology's own.
    #[arg(long)]
    pub difficulty: Option<u8>,
    /// Per-message token budget; adds a token-cost estimate.
    #[arg(long)]
    pub message_tokens: Option<u64>,
    /// Node count of the previous turn, for the cost estimate.
    #[arg(long, default_value_t = 0)]
    pub prev_nodes: usize,
}

#[derive(Args)]
pub struct RewardArgs {
    /// JSON description file, or `-` for standard input.
    pub input: PathBuf,
}

#[derive(Args)]
pub struct RunArgs {
    /// Problem file: one problem object or an array of them.
    #[arg(long)]
    pub problem: PathBuf,
    /// TOML run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// `scripted:FILE` (JSON array of completions) or `remote`.
    #[arg(long)]
    pub policy: Option<String>,
    #[arg(long, value_enum)]
    pub roles: Option<BackendKind>,
    #[arg(long, value_enum)]
    pub sandbox: Option<SandboxKind>,
    /// Append trajectories here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Episodes run at once.
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    #[arg(long)]
    pub max_turns: Option<usize>,
    #[arg(long)]
    pub gamma: Option<f64>,
}

#[derive(Subcommand)]
enum CorpusCommand {
    /// Keep records that pass every quality check.
    Filter(FilterArgs),
    /// Per-difficulty distributions of |V|, |E|, s and s_complex.
    Stats(StatsArgs),
}

#[derive(Args)]
pub struct FilterArgs {
    pub input: PathBuf,
    /// Accepted records are written here as JSONL.
    pub output: PathBuf,
    /// Also write the report here.
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long, requires = "s_complex_max")]
    pub s_complex_min: Option<f64>,
    #[arg(long, requires = "s_complex_min")]
    pub s_complex_max: Option<f64>,
    /// External validator command; receives each record as JSON on stdin.
    #[arg(long, num_args = 1.., allow_hyphen_values = true)]
    pub validator: Option<Vec<String>>,
}

#[derive(Args)]
pub struct StatsArgs {
    pub input: PathBuf,
}

#[derive(Subcommand)]
enum GrpoCommand {
    /// Standardize a group of returns.
    Adv(AdvArgs),
    /// Evaluate the clipped surrogate objective on a batch.
    Surrogate(SurrogateArgs),
}

#[derive(Args)]
pub struct AdvArgs {
    /// JSON array of returns.
    #[arg(long, allow_hyphen_values = true)]
    pub returns: String,
    #[arg(long, default_value_t = layerflow_core::reward::DEFAULT_EPS_STD)]
    pub eps_std: f64,
}

#[derive(Args)]
pub struct SurrogateArgs {
    /// JSON file `{batch, eps_clip?, beta?, kl?}`, or `-` for standard input.
    pub input: PathBuf,
    /// Run configuration supplying `eps_clip`, `beta` and `kl` when the
    /// input omits them.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// A failure mapped to a process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad arguments, inputs or configuration (exit 2).
    Usage(String),
    /// An adapter or the sandbox failed (exit 3).
    Adapter(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Adapter(_) => 3,
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Validate(a) => commands::validate(&a),
        Command::Score(a) => commands::score(&a),
        Command::Reward(a) => commands::reward(&a),
        Command::Run(a) => commands::run(&a),
        Command::Corpus(CorpusCommand::Filter(a)) => commands::corpus_filter(&a),
        Command::Corpus(CorpusCommand::Stats(a)) => commands::corpus_stats(&a),
        Command::Grpo(GrpoCommand::Adv(a)) => commands::grpo_adv(&a),
        Command::Grpo(GrpoCommand::Surrogate(a)) => commands::grpo_surrogate(&a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            match &e {
                CliError::Usage(m) | CliError::Adapter(m) => eprintln!("error: {m}"),
            }
            ExitCode::from(e.code())
        }
    }
}
