//! End-to-end extraction: corpus and stop list in, pruned cluster reports
//! out.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::cluster::{
    assign, em_fit, select_k, Assignment, ClusterError, EmConfig, MixtureModel, Point, SelectConfig,
};
use crate::config::{ClusterChoice, PipelineConfig};
use crate::corpus::{
    extract_bigrams, tokenize, BigramTable, CorpusError, StopList, TokenizerConfig,
};
use crate::features::{build_points, FeatureError, FeatureSet, PointOptions};
use crate::prune::{
    emit_candidates, emit_excluded, prune, summarize, tally_members, write_rows_tsv,
    write_scatter_csv, write_summary_tsv, ClusterVerdict, PruneError, ReportRow, Summary,
};
use crate::synth::{generate, grade, Metrics, SynthError, SynthSpec};

pub const ARTIFACTS: [&str; 5] = [
    "candidates.tsv",
    "excluded.tsv",
    "summary.tsv",
    "points.csv",
    "model.json",
];

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("input file not found: {}", .0.display())]
    MissingInput(PathBuf),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    Decode {
        path: PathBuf,
        #[source]
        source: CorpusError,
    },
    #[error("corpus is empty after stop-list filtering (no bigrams)")]
    EmptyAfterFiltering,
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Cluster(#[from] ClusterError),
    #[error(transparent)]
    Prune(#[from] PruneError),
    #[error(transparent)]
    Synth(#[from] SynthError),
}

/// Everything the extraction computes, before anything is written.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub table: BigramTable,
    pub features: FeatureSet,
    pub model: MixtureModel,
    pub assignment: Assignment,
    pub verdicts: Vec<ClusterVerdict>,
    pub summary: Summary,
    pub candidates: Vec<ReportRow>,
    pub excluded: Vec<ReportRow>,
}

fn choose_k(points: &[Point], cfg: &PipelineConfig) -> Result<usize, ClusterError> {
    match cfg.clusters {
        ClusterChoice::Fixed(k) => Ok(k),
        ClusterChoice::Auto { k_min, k_max } => {
            let n = points.len().min(cfg.cv_max_points);
            // Largest k every training split can still support.
            let feasible = n.saturating_sub(n.div_ceil(cfg.folds.max(1)));
            let select = SelectConfig {
                k_min,
                k_max: k_max.min(feasible).max(k_min),
                folds: cfg.folds,
                seed: cfg.seed,
                tol: cfg.tol,
                max_iter: cfg.max_iter,
                variance_floor: cfg.variance_floor,
                max_points: cfg.cv_max_points,
            };
            select_k(points, &select)
        }
    }
}

pub fn analyze(
    corpus: &str,
    stoplist: &StopList,
    cfg: &PipelineConfig,
) -> Result<Analysis, PipelineError> {
    let tokens = tokenize(corpus, &TokenizerConfig::default());
    let table = extract_bigrams(&tokens, stoplist);
    if table.is_empty() {
        return Err(PipelineError::EmptyAfterFiltering);
    }
    let features = build_points(
        &table,
        &PointOptions {
            variance: cfg.variance,
            min_count: cfg.min_count,
        },
    )?;
    let coords = features.coords();
    let k = choose_k(&coords, cfg)?;
    let model = em_fit(
        &coords,
        &EmConfig {
            k,
            seed: cfg.seed,
            tol: cfg.tol,
            max_iter: cfg.max_iter,
            variance_floor: cfg.variance_floor,
        },
    )?;
    let assignment = assign(&model, &coords, cfg.noise_mad_factor);
    let mut verdicts = prune(&model, cfg.threshold);
    tally_members(&mut verdicts, &assignment);
    let summary = summarize(&verdicts, &assignment, features.points.len())?;
    let candidates = emit_candidates(&features.points, &assignment, &verdicts);
    let excluded = emit_excluded(&features.points, &assignment, &verdicts);
    Ok(Analysis {
        table,
        features,
        model,
        assignment,
        verdicts,
        summary,
        candidates,
        excluded,
    })
}

fn read_input(path: &Path) -> Result<String, PipelineError> {
    let bytes = fs::read(path).map_err(|source| {
        if source.kind() == std::io::ErrorKind::NotFound {
            PipelineError::MissingInput(path.to_owned())
        } else {
            PipelineError::Io {
                path: path.to_owned(),
                source,
            }
        }
    })?;
    String::from_utf8(bytes).map_err(|e| PipelineError::Decode {
        path: path.to_owned(),
        source: CorpusError::Decode {
            offset: e.utf8_error().valid_up_to(),
        },
    })
}

fn write_file<F>(dir: &Path, name: &str, body: F) -> Result<(), PipelineError>
where
    F: FnOnce(&mut BufWriter<File>) -> Result<(), PipelineError>,
{
    let path = dir.join(name);
    let io_err = |source| PipelineError::Io {
        path: path.clone(),
        source,
    };
    let mut out = BufWriter::new(File::create(&path).map_err(io_err)?);
    body(&mut out)?;
    out.flush().map_err(io_err)
}

pub fn write_artifacts(analysis: &Analysis, dir: &Path) -> Result<(), PipelineError> {
    fs::create_dir_all(dir).map_err(|source| PipelineError::Io {
        path: dir.to_owned(),
        source,
    })?;
    write_file(dir, "candidates.tsv", |w| {
        Ok(write_rows_tsv(&analysis.candidates, w)?)
    })?;
    write_file(dir, "excluded.tsv", |w| {
        Ok(write_rows_tsv(&analysis.excluded, w)?)
    })?;
    write_file(dir, "summary.tsv", |w| {
        Ok(write_summary_tsv(&analysis.summary, w)?)
    })?;
    write_file(dir, "points.csv", |w| {
        Ok(write_scatter_csv(
            &analysis.features.points,
            &analysis.assignment,
            w,
        )?)
    })?;
    write_file(dir, "model.json", |w| {
        analysis.model.write_json(&mut *w)?;
        writeln!(w).map_err(|source| PipelineError::Io {
            path: dir.join("model.json"),
            source,
        })
    })
}

/// Reads the configured corpus and stop list, analyzes and writes all five
/// artifacts to `cfg.out`.
pub fn run_extract(cfg: &PipelineConfig) -> Result<Analysis, PipelineError> {
    let corpus = read_input(&cfg.corpus)?;
    let stoplist = StopList::parse(&read_input(&cfg.stoplist)?, &TokenizerConfig::default());
    let analysis = analyze(&corpus, &stoplist, cfg)?;
    write_artifacts(&analysis, &cfg.out)?;
    Ok(analysis)
}

#[derive(Debug, Clone)]
pub struct SynthOutcome {
    pub analysis: Analysis,
    pub metrics: Metrics,
}

/// Generates a corpus into `cfg.out`, extracts from it, grades against the
/// planted pairs and writes `metrics.json`. The corpus and stop-list paths
/// in `cfg` are replaced by the generated files.
pub fn run_synth(spec: &SynthSpec, cfg: &PipelineConfig) -> Result<SynthOutcome, PipelineError> {
    let synth = generate(spec)?;
    let dir = cfg.out.as_path();
    fs::create_dir_all(dir).map_err(|source| PipelineError::Io {
        path: dir.to_owned(),
        source,
    })?;
    write_file(dir, "corpus.txt", |w| {
        w.write_all(synth.text.as_bytes())
            .map_err(|source| PipelineError::Io {
                path: dir.join("corpus.txt"),
                source,
            })
    })?;
    write_file(dir, "stoplist.txt", |w| {
        w.write_all(synth.stoplist_text().as_bytes())
            .map_err(|source| PipelineError::Io {
                path: dir.join("stoplist.txt"),
                source,
            })
    })?;
    write_file(dir, "gold.tsv", |w| Ok(synth.gold.write_tsv(w)?))?;

    let cfg = PipelineConfig {
        corpus: dir.join("corpus.txt"),
        stoplist: dir.join("stoplist.txt"),
        ..cfg.clone()
    };
    let analysis = run_extract(&cfg)?;
    let metrics = grade(&analysis.candidates, &analysis.excluded, &synth.gold)?;
    write_file(dir, "metrics.json", |w| {
        serde_json::to_writer_pretty(&mut *w, &metrics)
            .map_err(std::io::Error::from)
            .and_then(|_| writeln!(w))
            .map_err(|source| PipelineError::Io {
                path: dir.join("metrics.json"),
                source,
            })
    })?;
    Ok(SynthOutcome { analysis, metrics })
}
