mod pipeline;
mod report;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pipeline::{Failure, NArg};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "hnncert", version, about = "Certified complexity bounds for words in HNN extensions of finite groups")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Rewrite the word and certify a lower bound on -χ/deg.
    Certify(CertifyArgs),
    /// Enumerate admissible surfaces within a budget and compare with the certificate.
    Search(SearchArgs),
    /// Relative freeness of an element with respect to a subgroup.
    RfCheck(RfArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Md,
}

#[derive(Args, Clone)]
pub struct WordArgs {
    /// Group JSON document (vertex group plus optional edge pair).
    #[arg(long)]
    pub group: PathBuf,
    /// Word such as "a t^-1 b t e t".
    #[arg(long)]
    pub word: String,
    /// Hypothesis level for the table cost: `auto` or an integer ≥ 2.
    #[arg(long, default_value = "auto", value_parser = NArg::parse)]
    pub n: NArg,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Seeds a random starting cost for the cutting-plane search.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Cutting-plane rounds before giving up.
    #[arg(long, default_value_t = 400)]
    pub max_rounds: usize,
    /// Include wall-clock stage timings (makes the report nondeterministic).
    #[arg(long)]
    pub timings: bool,
}

#[derive(Args)]
struct CertifyArgs {
    #[command(flatten)]
    word: WordArgs,
}

#[derive(Args)]
pub struct SearchArgs {
    #[command(flatten)]
    pub word: WordArgs,
    #[arg(long, default_value_t = 2)]
    pub max_degree: usize,
    #[arg(long, default_value_t = 6)]
    pub max_piece_turns: usize,
    #[arg(long, default_value_t = 12)]
    pub max_pieces: usize,
    /// Seconds before the enumeration stops with a partial result.
    #[arg(long)]
    pub time_limit: Option<f64>,
}

#[derive(Args)]
pub struct RfArgs {
    #[arg(long)]
    pub group: PathBuf,
    /// Element name.
    #[arg(long)]
    pub element: String,
    /// `trivial`, `P`, `N` (edge images from the group file) or comma-separated element names.
    #[arg(long, default_value = "trivial")]
    pub subgroup: String,
    #[arg(long, default_value_t = 2)]
    pub n: usize,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.cmd {
        Cmd::Certify(a) => pipeline::cmd_certify(&a.word),
        Cmd::Search(a) => pipeline::cmd_search(&a),
        Cmd::RfCheck(a) => pipeline::cmd_rf(&a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(Failure { stage, error }) => {
            eprintln!("error [{stage}]: {error:#}");
            ExitCode::from(pipeline::EXIT_INPUT)
        }
    }
}
