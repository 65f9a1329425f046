//! `colloc`: extract collocation candidates from a corpus, or evaluate the
//! pipeline on a synthetic corpus with planted collocations.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use colloc_core::config::ConfigErrors;
use colloc_core::pipeline::{run_extract, run_synth, PipelineError};
use colloc_core::{validate_config, PipelineConfig, RawFlags, Summary, SynthSpec};

const EXIT_FAILURE: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_MISSING_INPUT: u8 = 3;
const EXIT_EMPTY_CORPUS: u8 = 4;

#[derive(Parser)]
#[command(
    name = "colloc",
    version,
    about = "Cluster-based collocation candidate extraction"
)]
struct Cli {
    /// Worker threads (0 = one per core). Output does not depend on it.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Score, cluster and prune the bigrams of a corpus.
    Extract(ExtractArgs),
    /// Generate a synthetic corpus with planted pairs, extract and grade.
    SynthEval(SynthArgs),
}

#[derive(Args)]
struct PipelineFlags {
    /// Joint count a distinct bigram needs to become a point [default: 1]
    #[arg(long)]
    min_count: Option<String>,
    /// Number of clusters, or `auto` to cross-validate k in 2..=15 [default: auto]
    #[arg(long)]
    clusters: Option<String>,
    /// Centroid threshold: a cluster is kept when any coordinate reaches it [default: 0.30]
    #[arg(long)]
    threshold: Option<String>,
    /// Points whose log-density falls below median - X*MAD are noise; `inf` disables [default: 3.0]
    #[arg(long)]
    noise_mad_factor: Option<String>,
    /// Relative log-likelihood gain at which EM stops [default: 1e-6]
    #[arg(long)]
    tol: Option<String>,
    /// EM iteration limit [default: 500]
    #[arg(long)]
    max_iter: Option<String>,
    /// Seed for every random choice [default: 42]
    #[arg(long)]
    seed: Option<String>,
    /// Variance in the t statistic: `full` p(1-p) or `simplified` p [default: full]
    #[arg(long)]
    variance: Option<String>,
}

#[derive(Args)]
struct ExtractArgs {
    /// UTF-8 corpus file
    #[arg(long)]
    corpus: PathBuf,
    /// Stop list, one word per line, `#` comments
    #[arg(long)]
    stoplist: PathBuf,
    /// Output directory for candidates.tsv, excluded.tsv, summary.tsv, points.csv and model.json
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    pipeline: PipelineFlags,
}

#[derive(Args)]
struct SynthArgs {
    /// Vocabulary size
    #[arg(long, default_value_t = 2000)]
    vocab: usize,
    /// Corpus length in tokens
    #[arg(long, default_value_t = 100_000)]
    tokens: usize,
    /// Zipf exponent of the unigram distribution
    #[arg(long, default_value_t = 1.0)]
    zipf: f64,
    /// Number of planted pairs
    #[arg(long, default_value_t = 50)]
    planted: usize,
    /// Multiplier on the joint probability of each planted pair
    #[arg(long, default_value_t = 30.0)]
    boost: f64,
    /// Fraction of the vocabulary put on the stop list
    #[arg(long, default_value_t = 0.05)]
    stop_fraction: f64,
    /// Output directory (corpus, stop list, gold set, artifacts, metrics.json)
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    pipeline: PipelineFlags,
}

impl PipelineFlags {
    fn into_raw(
        self,
        corpus: Option<PathBuf>,
        stoplist: Option<PathBuf>,
        out: PathBuf,
    ) -> RawFlags {
        RawFlags {
            corpus,
            stoplist,
            out: Some(out),
            min_count: self.min_count,
            clusters: self.clusters,
            threshold: self.threshold,
            noise_mad_factor: self.noise_mad_factor,
            tol: self.tol,
            max_iter: self.max_iter,
            seed: self.seed,
            variance: self.variance,
        }
    }
}

fn print_summary(summary: &Summary, k: usize) {
    let ids = |v: &[usize]| v.iter().map(usize::to_string).collect::<Vec<_>>().join(",");
    println!("bigrams\t{}", summary.total_bigrams);
    println!("clusters\t{k}");
    println!(
        "candidates\t{}\t{:.2}%\tclusters {}\tnoise {}",
        summary.candidate_count,
        summary.candidate_pct,
        ids(&summary.retained_clusters),
        summary.noise_count
    );
    println!(
        "excluded\t{}\t{:.2}%\tclusters {}",
        summary.excluded_count,
        summary.excluded_pct,
        ids(&summary.excluded_clusters)
    );
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<ConfigErrors>().is_some() {
        return EXIT_CONFIG;
    }
    match err.downcast_ref::<PipelineError>() {
        Some(PipelineError::MissingInput(_)) => EXIT_MISSING_INPUT,
        Some(PipelineError::EmptyAfterFiltering) => EXIT_EMPTY_CORPUS,
        _ => EXIT_FAILURE,
    }
}

fn extract(args: ExtractArgs) -> anyhow::Result<()> {
    let raw = args
        .pipeline
        .into_raw(Some(args.corpus), Some(args.stoplist), args.out);
    let cfg = validate_config(&raw)?;
    eprintln!("extracting from {}", cfg.corpus.display());
    let analysis = run_extract(&cfg)?;
    for (bigram, err) in &analysis.features.diagnostics {
        eprintln!("skipped ({}, {}): {err}", bigram.0, bigram.1);
    }
    eprintln!("wrote artifacts to {}", cfg.out.display());
    print_summary(&analysis.summary, analysis.model.k);
    Ok(())
}

fn synth_eval(args: SynthArgs) -> anyhow::Result<()> {
    let raw = args.pipeline.into_raw(None, None, args.out);
    let cfg: PipelineConfig = validate_config(&raw)?;
    let spec = SynthSpec::plan(
        args.vocab,
        args.tokens,
        args.zipf,
        args.planted,
        args.boost,
        args.stop_fraction,
        cfg.seed,
    )?;
    eprintln!(
        "generating {} tokens over {} words with {} planted pairs",
        spec.corpus_tokens,
        spec.vocab_size,
        spec.planted.len()
    );
    let outcome = run_synth(&spec, &cfg)?;
    print_summary(&outcome.analysis.summary, outcome.analysis.model.k);
    println!("recall\t{:.4}", outcome.metrics.recall);
    println!("reduction\t{:.4}", outcome.metrics.reduction);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build_global()
        .context("configuring worker threads")
        .and_then(|_| match cli.command {
            Command::Extract(args) => extract(args),
            Command::SynthEval(args) => synth_eval(args),
        });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
