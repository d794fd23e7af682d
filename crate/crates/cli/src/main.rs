use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod settings;

use settings::{Settings, UsageError};

#[derive(Parser)]
#[command(name = "asrnoise", version, about = "Inject ASR-plausible noise into text corpora")]
#[command(arg_required_else_help = true)]
struct Cli {
    /// Seed for every random choice (default 0).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Flat `key = value` file; flags override its values.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Worker threads for parallel stages (default 1).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// More log output; repeat for debug.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Join references and recognizer output by id and keep differing pairs.
    CollectPairs(CollectPairsArgs),
    /// Count n-gram confusions from aligned clean-noisy pairs.
    ExtractConfusions(ExtractArgs),
    /// Build a phonetic-neighbour substitution table.
    BuildRsTable(RsArgs),
    /// Phone edit rate of one pair or of a JSONL file of pairs.
    Per(PerArgs),
    /// Train the noise generation model on clean-noisy pairs.
    TrainNgm(TrainNgmArgs),
    /// Sample noisy renditions of clean text.
    Generate(GenerateArgs),
    /// Augment a JSONL corpus with noisy copies.
    Augment(AugmentArgs),
    /// Train an intent classifier.
    TrainSlu(TrainSluArgs),
    /// Score an intent classifier on a labeled set.
    EvalSlu(EvalSluArgs),
    /// Run the full augmentation comparison on the synthetic benchmark.
    Benchmark(BenchmarkArgs),
    /// Write the synthetic command benchmark to a directory.
    MakeSynth(MakeSynthArgs),
}

#[derive(Args)]
pub struct CollectPairsArgs {
    /// JSONL of {"id", "text"} reference transcriptions.
    #[arg(long)]
    pub refs: Option<PathBuf>,
    /// JSONL of {"id", "text"} recognizer outputs.
    #[arg(long)]
    pub hyps: Option<PathBuf>,
    /// Output JSONL of {"clean", "noisy"} pairs (stdout if omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Compare case-sensitively.
    #[arg(long)]
    pub keep_case: bool,
    /// Treat punctuation as significant.
    #[arg(long)]
    pub keep_punctuation: bool,
}

#[derive(Args)]
pub struct ExtractArgs {
    /// JSONL of {"clean", "noisy"} pairs.
    #[arg(long)]
    pub pairs: Option<PathBuf>,
    /// Output TSV (stdout if omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub max_ngram: Option<usize>,
    /// Drop entries seen fewer times than this.
    #[arg(long)]
    pub min_count: Option<f64>,
}

#[derive(Args)]
pub struct RsArgs {
    #[arg(long)]
    pub dict: Option<PathBuf>,
    /// `word<TAB>count` term frequencies (bundled list if omitted).
    #[arg(long)]
    pub vocab: Option<PathBuf>,
    /// Neighbours must be strictly closer than this many phone edits.
    #[arg(long)]
    pub max_phone_edit: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct PerArgs {
    #[arg(long)]
    pub dict: Option<PathBuf>,
    #[arg(long, requires = "gen")]
    pub orig: Option<String>,
    #[arg(long, requires = "orig")]
    pub gen: Option<String>,
    /// JSONL of {"original", "generated"} objects.
    #[arg(long, conflicts_with = "orig")]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also print both phone sequences and the alignment.
    #[arg(long)]
    pub explain: bool,
}

#[derive(Args)]
pub struct TrainNgmArgs {
    #[arg(long)]
    pub pairs: Option<PathBuf>,
    /// Checkpoint file to write.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Optional JSON training report.
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub warmup: Option<usize>,
    /// `momentum` or `adam`.
    #[arg(long)]
    pub optimizer: Option<String>,
    /// `full` or `suffix`.
    #[arg(long)]
    pub loss_scope: Option<String>,
    #[arg(long)]
    pub layers: Option<usize>,
    #[arg(long)]
    pub d_model: Option<usize>,
    #[arg(long)]
    pub heads: Option<usize>,
    #[arg(long)]
    pub d_ff: Option<usize>,
    #[arg(long)]
    pub context: Option<usize>,
    #[arg(long)]
    pub max_vocab: Option<usize>,
    #[arg(long)]
    pub checkpoint_every: Option<usize>,
    #[arg(long)]
    pub holdout: Option<f64>,
}

#[derive(Args)]
pub struct GenerationArgs {
    #[arg(long)]
    pub top_p: Option<f64>,
    #[arg(long)]
    pub temperature: Option<f64>,
    #[arg(long)]
    pub max_new_tokens: Option<usize>,
}

#[derive(Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long, conflicts_with = "input")]
    pub text: Option<String>,
    /// JSONL of {"text"} records; one output line per sample.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Samples per input.
    #[arg(short, long)]
    pub n: Option<usize>,
    #[command(flatten)]
    pub generation: GenerationArgs,
}

#[derive(Args)]
pub struct AugmentArgs {
    /// rs, ss, eda or ngm.
    #[arg(long)]
    pub method: Option<String>,
    /// Substitution table for rs/ss.
    #[arg(long)]
    pub table: Option<PathBuf>,
    /// Generator checkpoint for ngm.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub dict: Option<PathBuf>,
    /// Per-position substitution probability for rs/ss.
    #[arg(long = "prop")]
    pub proportion: Option<f64>,
    #[arg(long)]
    pub n_aug: Option<usize>,
    #[arg(long)]
    pub n_candidates: Option<usize>,
    /// Keep candidates with PER at most this; `inf` disables the filter.
    #[arg(long)]
    pub per_threshold: Option<String>,
    /// Also write every scored candidate as JSONL.
    #[arg(long)]
    pub samples: Option<PathBuf>,
    #[command(flatten)]
    pub generation: GenerationArgs,
    pub input: PathBuf,
    pub output: PathBuf,
}

#[derive(Args)]
pub struct ClassifierArgs {
    /// `softmax` or `one-vs-all`.
    #[arg(long)]
    pub mode: Option<String>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub buckets: Option<usize>,
}

#[derive(Args)]
pub struct TrainSluArgs {
    #[arg(long)]
    pub train: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub classifier: ClassifierArgs,
}

#[derive(Args)]
pub struct EvalSluArgs {
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub test: Option<PathBuf>,
    /// Metrics JSON (stdout if omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct SizeArgs {
    #[arg(long)]
    pub pair_sentences: Option<usize>,
    #[arg(long)]
    pub train_size: Option<usize>,
    #[arg(long)]
    pub dev_size: Option<usize>,
    #[arg(long)]
    pub test_size: Option<usize>,
}

#[derive(Args)]
pub struct BenchmarkArgs {
    /// Directory for report.json and table.txt; the table is always printed.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[arg(long)]
    pub repeats: Option<usize>,
    /// Noise model training steps.
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub n_aug: Option<usize>,
    #[arg(long)]
    pub per_threshold: Option<String>,
    #[command(flatten)]
    pub sizes: SizeArgs,
}

#[derive(Args)]
pub struct MakeSynthArgs {
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Channel JSON to use instead of the default command channel.
    #[arg(long)]
    pub channel: Option<PathBuf>,
    #[command(flatten)]
    pub sizes: SizeArgs,
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let settings = Settings::new(cli.config.as_deref(), cli.seed, cli.jobs)?;
    let result = match cli.command {
        Command::CollectPairs(a) => commands::pairs::collect(&settings, a),
        Command::ExtractConfusions(a) => commands::pairs::extract(&settings, a),
        Command::BuildRsTable(a) => commands::pairs::rs_table(&settings, a),
        Command::Per(a) => commands::pairs::per(&settings, a),
        Command::TrainNgm(a) => commands::ngm::train(&settings, a),
        Command::Generate(a) => commands::ngm::generate(&settings, a),
        Command::Augment(a) => commands::augment::run(&settings, a),
        Command::TrainSlu(a) => commands::slu::train(&settings, a),
        Command::EvalSlu(a) => commands::slu::eval(&settings, a),
        Command::Benchmark(a) => commands::bench::benchmark(&settings, a),
        Command::MakeSynth(a) => commands::bench::make_synth(&settings, a),
    };
    for key in settings.unused_keys() {
        log::warn!("config key `{key}` is not used by this command");
    }
    result
}

/// The error chain, skipping causes whose text the outer message already
/// repeats.
fn describe(err: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in err.chain() {
        let text = cause.to_string();
        if out.contains(&text) {
            continue;
        }
        if !out.is_empty() {
            out.push_str(": ");
        }
        out.push_str(&text);
    }
    out
}

fn exit_code(err: &anyhow::Error) -> u8 {
    let is_usage = err.chain().any(|e| {
        e.is::<UsageError>()
            || matches!(e.downcast_ref::<asr_noise::Error>(), Some(asr_noise::Error::InvalidConfig(_)))
    });
    if is_usage {
        1
    } else {
        2
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", describe(&e));
            ExitCode::from(exit_code(&e))
        }
    }
}
