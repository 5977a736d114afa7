use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser, Serialize)]
#[command(
    name = "linkcoref",
    version,
    about = "Event coreference corpora from MediaWiki dumps: extraction, statistics, clustering, scoring and validation"
)]
pub struct Cli {
    /// Worker threads for parallel stages; 1 runs everything sequentially,
    /// 0 uses every core. Outputs do not depend on this value.
    #[arg(long, global = true, env = "LINKCOREF_WORKERS", default_value_t = 0)]
    pub workers: usize,

    /// Log filter for the structured logs written to standard error.
    #[arg(long, global = true, env = "LINKCOREF_LOG", default_value = "info")]
    pub log: String,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    /// Build the train/dev/test dataset from an uncompressed XML dump.
    Extract(ExtractArgs),
    /// Corpus statistics per split.
    Stats(StatsArgs),
    /// Cluster mentions with the head-lemma baseline or average-link
    /// clustering over pairwise scores.
    Resolve(ResolveArgs),
    /// Score a response clustering against a key (MUC, B3, CEAF-e, CoNLL F1).
    Eval(EvalArgs),
    /// Run the validation service.
    Serve(ServeArgs),
    /// Convert between file formats.
    #[command(subcommand)]
    Convert(ConvertCommand),
}

#[derive(Debug, Args, Serialize)]
pub struct ExtractArgs {
    /// Uncompressed pages-articles XML dump (read twice).
    #[arg(long)]
    pub dump: PathBuf,
    /// Event infobox types, one per line.
    #[arg(long)]
    pub allowlist: PathBuf,
    /// Standoff named-entity annotations (JSONL).
    #[arg(long)]
    pub ner: Option<PathBuf>,
    /// Entity labels that disqualify a mention, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = linkcoref::pipeline::DEFAULT_BLOCKED_LABELS.iter().map(|s| s.to_string()))]
    pub blocked_labels: Vec<String>,
    /// Minimum paragraph tokens outside the mention span.
    #[arg(long, default_value_t = linkcoref::pipeline::DEFAULT_MIN_CONTEXT_TOKENS)]
    pub min_context: usize,
    /// Most mentions with the same normalized string kept per cluster.
    #[arg(long, default_value_t = linkcoref::pipeline::DEFAULT_MAX_IDENTICAL)]
    pub max_identical: usize,
    /// Clusters held out for dev and test together.
    #[arg(long, default_value_t = 0)]
    pub eval_clusters: usize,
    /// Share of held-out mentions that go to dev.
    #[arg(long, default_value_t = 0.4)]
    pub dev_fraction: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also write the dataset without the diversity cap under `uncontrolled/`.
    #[arg(long)]
    pub keep_uncontrolled: bool,
    /// Count only links that name a pivot page directly, not through a
    /// redirect.
    #[arg(long)]
    pub no_follow_redirects: bool,
    /// Write every parsed page (paragraphs and links) to this JSONL file.
    #[arg(long)]
    pub parsed_out: Option<PathBuf>,
    #[arg(long, default_value = "https://en.wikipedia.org/wiki/")]
    pub url_base: String,
    /// Namespaces read from the dump, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "0")]
    pub namespaces: Vec<i32>,
    #[arg(long, default_value_t = 256)]
    pub batch_size: usize,
    /// Output directory.
    #[arg(long, env = "LINKCOREF_OUT")]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct StatsArgs {
    /// Split files (JSONL mention records) or dataset directories.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    /// Token to lemma table (TSV).
    #[arg(long)]
    pub lemmas: Option<PathBuf>,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct ResolveArgs {
    /// Mentions to cluster (JSONL mention records).
    #[arg(long)]
    pub mentions: Option<PathBuf>,
    /// Group mentions by head lemma.
    #[arg(long, conflicts_with = "scores", required_unless_present = "scores")]
    pub lemma_baseline: bool,
    #[arg(long)]
    pub lemmas: Option<PathBuf>,
    /// Pairwise scores for average-link clustering.
    #[arg(long)]
    pub scores: Option<PathBuf>,
    /// Score of pairs missing from the score file.
    #[arg(long, default_value_t = 0.0)]
    pub default_score: f64,
    #[arg(long, default_value_t = linkcoref::resolver::DEFAULT_THRESHOLD)]
    pub threshold: f64,
    /// Dev key used to pick the threshold (overrides --threshold).
    #[arg(long, requires = "tune_scores")]
    pub tune_key: Option<PathBuf>,
    /// Pairwise scores over the dev key's mentions.
    #[arg(long, requires = "tune_key")]
    pub tune_scores: Option<PathBuf>,
    /// Threshold grid for tuning, comma separated (default 0.00 to 1.00 by 0.05).
    #[arg(long, value_delimiter = ',')]
    pub grid: Vec<f64>,
    /// Source title to group JSONL; clusters never cross groups.
    #[arg(long, requires = "mentions")]
    pub documents: Option<PathBuf>,
    /// Output clustering (JSONL of mention_id and cluster_id).
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the clustering as a CoNLL meta-document.
    #[arg(long)]
    pub conll: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    /// `.conll` and `.txt` are CoNLL; anything else JSONL.
    Auto,
    Conll,
    Jsonl,
}

#[derive(Debug, Args, Serialize)]
pub struct EvalArgs {
    #[arg(long)]
    pub key: PathBuf,
    #[arg(long)]
    pub response: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Auto)]
    pub format: Format,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct ServeArgs {
    /// Candidate records (JSONL); see `convert candidates`.
    #[arg(long)]
    pub candidates: PathBuf,
    /// Directory holding the judgment log and snapshot.
    #[arg(long, env = "LINKCOREF_STORE")]
    pub store: PathBuf,
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    /// Annotator id whose judgments are final.
    #[arg(long, default_value = linkcoref::validation::DEFAULT_CONSOLIDATOR)]
    pub consolidator: String,
    /// Train split purged of leaked source articles on every export.
    #[arg(long)]
    pub train: Option<PathBuf>,
    /// Export directory (default: `<store>/export`).
    #[arg(long)]
    pub export_dir: Option<PathBuf>,
    #[arg(long, default_value_t = 1000)]
    pub compact_after: usize,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ConvertCommand {
    /// Clustering or split JSONL to a CoNLL meta-document.
    ToConll {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[arg(long, default_value = "meta")]
        name: String,
    },
    /// CoNLL to clustering JSONL. Token columns holding mention ids are kept
    /// as ids; otherwise mentions are numbered in file order.
    FromConll {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Validation candidates from a dataset directory's dev and test splits.
    Candidates {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// Mention ids marked as practice tasks, comma separated.
        #[arg(long, value_delimiter = ',')]
        practice: Vec<u64>,
    },
}
