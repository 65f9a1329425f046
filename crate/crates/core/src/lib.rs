//! Collocation candidate extraction by clustering bigrams in association
//! measure space.
//!
//! Every adjacent bigram of a corpus is scored with pointwise mutual
//! information, the t statistic and the log-likelihood ratio. The scores are
//! min-max normalized into `[0,1]^3`, clustered with a Gaussian mixture fitted
//! by EM, and clusters whose centroid stays below a threshold on every axis
//! are pruned from the candidate set.

pub mod cluster;
pub mod config;
pub mod corpus;
pub mod features;
pub mod measures;
pub mod pipeline;
pub mod prune;
pub mod synth;

pub use cluster::{
    assign, em_fit, select_k, Assignment, EmConfig, Label, MixtureModel, SelectConfig,
};
pub use config::{validate_config, ClusterChoice, PipelineConfig, RawFlags};
pub use corpus::{extract_bigrams, tokenize, BigramTable, StopList, Token, TokenizerConfig};
pub use features::{build_points, FeaturePoint, FeatureSet, NormalizationParams};
pub use measures::{
    log_likelihood_ratio, measure_all, pmi, t_stat, BigramStats, MeasureVector, VarianceMode,
};
pub use pipeline::{analyze, run_extract, run_synth, Analysis, PipelineError};
pub use prune::{
    emit_candidates, emit_excluded, prune, summarize, ClusterVerdict, ReportRow, Summary,
};
pub use synth::{generate, grade, GoldSet, Metrics, SynthSpec};
