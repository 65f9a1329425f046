//! Synthetic corpora with planted collocations, and grading of pipeline
//! output against them.
//!
//! Tokens are drawn from a Zipfian unigram distribution over words named
//! `w0001`, `w0002`, ... (rank order). After a planted first word `w1` the
//! next token is its partner `w2` with probability `boost * P(w2)`; any
//! other word keeps its unigram share, rescaled. All randomness comes from
//! `ChaCha8Rng::seed_from_u64(seed)`.
//!
//! The stop list is a seeded random `stop_fraction` of the vocabulary;
//! planted words are never on it.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{BufRead, Write};

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::StopList;
use crate::prune::ReportRow;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid synthetic spec: {0}")]
    Invalid(String),
    #[error("pair ({w1}, {w2}) is infeasible: boosted probability {prob} exceeds 1")]
    Infeasible { w1: String, w2: String, prob: f64 },
    #[error("gold set is empty")]
    EmptyGold,
    #[error("gold file line {line}: {msg}")]
    GoldFormat { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedPair {
    pub w1: String,
    pub w2: String,
    pub boost: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub vocab_size: usize,
    pub corpus_tokens: usize,
    pub zipf_exponent: f64,
    pub planted: Vec<PlantedPair>,
    /// Fraction of the vocabulary placed on the stop list.
    pub stop_fraction: f64,
    pub seed: u64,
}

/// Largest share of a first word's successors that automatic planning
/// gives to its partner.
const MAX_PLANNED_BOOSTED_PROB: f64 = 0.25;

pub fn word_name(rank: usize, vocab_size: usize) -> String {
    let width = vocab_size.to_string().len().max(4);
    format!("w{rank:0width$}")
}

fn zipf_probs(vocab_size: usize, exponent: f64) -> Vec<f64> {
    let weights: Vec<f64> = (1..=vocab_size)
        .map(|r| (r as f64).powf(-exponent))
        .collect();
    let total: f64 = weights.iter().sum();
    weights.into_iter().map(|w| w / total).collect()
}

impl SynthSpec {
    /// Plants `n_planted` pairs among the most frequent words whose boosted
    /// probability stays at or below 0.25, pairing them at random.
    pub fn plan(
        vocab_size: usize,
        corpus_tokens: usize,
        zipf_exponent: f64,
        n_planted: usize,
        boost: f64,
        stop_fraction: f64,
        seed: u64,
    ) -> Result<Self, SynthError> {
        let mut spec = SynthSpec {
            vocab_size,
            corpus_tokens,
            zipf_exponent,
            planted: Vec::new(),
            stop_fraction,
            seed,
        };
        spec.check_scalars()?;
        if boost.is_nan() || boost < 1.0 {
            return Err(SynthError::Invalid(format!(
                "boost must be >= 1, got {boost}"
            )));
        }
        let probs = zipf_probs(vocab_size, zipf_exponent);
        let mut pool: Vec<usize> = (0..vocab_size)
            .filter(|&i| boost * probs[i] <= MAX_PLANNED_BOOSTED_PROB)
            .take(2 * n_planted)
            .collect();
        if pool.len() < 2 * n_planted {
            return Err(SynthError::Invalid(format!(
                "vocabulary of {vocab_size} cannot host {n_planted} planted pairs at boost {boost}"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x706c_616e);
        pool.shuffle(&mut rng);
        spec.planted = pool
            .chunks(2)
            .map(|pair| PlantedPair {
                w1: word_name(pair[0] + 1, vocab_size),
                w2: word_name(pair[1] + 1, vocab_size),
                boost,
            })
            .collect();
        Ok(spec)
    }

    /// vocab 2000, 100k tokens, zipf 1.0, 50 pairs at boost 30, 5% stop
    /// words.
    pub fn acceptance_default(seed: u64) -> Self {
        Self::plan(2000, 100_000, 1.0, 50, 30.0, 0.05, seed).expect("default spec is feasible")
    }

    pub fn stop_count(&self) -> usize {
        (self.stop_fraction * self.vocab_size as f64).round() as usize
    }

    fn check_scalars(&self) -> Result<(), SynthError> {
        let mut problems = Vec::new();
        if self.vocab_size < 2 {
            problems.push(format!("vocab_size must be >= 2, got {}", self.vocab_size));
        }
        if self.corpus_tokens < 2 {
            problems.push(format!(
                "corpus_tokens must be >= 2, got {}",
                self.corpus_tokens
            ));
        }
        if !(self.zipf_exponent.is_finite() && self.zipf_exponent >= 0.0) {
            problems.push(format!(
                "zipf exponent must be finite and >= 0, got {}",
                self.zipf_exponent
            ));
        }
        if !(0.0..1.0).contains(&self.stop_fraction) {
            problems.push(format!(
                "stop_fraction must be in [0,1), got {}",
                self.stop_fraction
            ));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(SynthError::Invalid(problems.join("; ")))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct GoldSet {
    pub pairs: Vec<PlantedPair>,
}

impl GoldSet {
    pub fn write_tsv<W: Write>(&self, mut out: W) -> Result<(), SynthError> {
        for p in &self.pairs {
            writeln!(out, "{}\t{}\t{}", p.w1, p.w2, p.boost)?;
        }
        Ok(())
    }

    pub fn read_tsv<R: BufRead>(input: R) -> Result<Self, SynthError> {
        let mut pairs = Vec::new();
        for (i, line) in input.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            let bad = |msg: &str| SynthError::GoldFormat {
                line: i + 1,
                msg: msg.to_owned(),
            };
            if fields.len() != 3 {
                return Err(bad("expected w1<TAB>w2<TAB>boost"));
            }
            let boost = fields[2]
                .parse()
                .map_err(|_| bad("boost is not a number"))?;
            pairs.push(PlantedPair {
                w1: fields[0].to_owned(),
                w2: fields[1].to_owned(),
                boost,
            });
        }
        Ok(GoldSet { pairs })
    }
}

#[derive(Debug, Clone)]
pub struct SynthCorpus {
    pub text: String,
    pub stoplist: StopList,
    pub gold: GoldSet,
}

impl SynthCorpus {
    pub fn stoplist_text(&self) -> String {
        self.stoplist.iter().map(|w| format!("{w}\n")).collect()
    }
}

/// Successor choices after a planted first word: (partner, probability).
type Boosts = HashMap<usize, Vec<(usize, f64)>>;

fn planted_boosts(spec: &SynthSpec, probs: &[f64]) -> Result<Boosts, SynthError> {
    let index: HashMap<String, usize> = (0..spec.vocab_size)
        .map(|i| (word_name(i + 1, spec.vocab_size), i))
        .collect();
    let mut boosts: Boosts = HashMap::new();
    for p in &spec.planted {
        if p.boost.is_nan() || p.boost < 1.0 {
            return Err(SynthError::Invalid(format!(
                "boost must be >= 1, got {}",
                p.boost
            )));
        }
        let lookup = |w: &str| {
            index.get(w).copied().ok_or_else(|| {
                SynthError::Invalid(format!("planted word {w:?} is not in the vocabulary"))
            })
        };
        let (i1, i2) = (lookup(&p.w1)?, lookup(&p.w2)?);
        let prob = p.boost * probs[i2];
        if prob > 1.0 {
            return Err(SynthError::Infeasible {
                w1: p.w1.clone(),
                w2: p.w2.clone(),
                prob,
            });
        }
        boosts.entry(i1).or_default().push((i2, prob));
    }
    for (&i1, succ) in &boosts {
        let total: f64 = succ.iter().map(|s| s.1).sum();
        if total > 1.0 {
            return Err(SynthError::Infeasible {
                w1: word_name(i1 + 1, spec.vocab_size),
                w2: "(all partners)".to_owned(),
                prob: total,
            });
        }
    }
    Ok(boosts)
}

pub fn generate(spec: &SynthSpec) -> Result<SynthCorpus, SynthError> {
    spec.check_scalars()?;
    let probs = zipf_probs(spec.vocab_size, spec.zipf_exponent);
    let boosts = planted_boosts(spec, &probs)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let planted_words: BTreeSet<&str> = spec
        .planted
        .iter()
        .flat_map(|p| [p.w1.as_str(), p.w2.as_str()])
        .collect();
    let mut eligible: Vec<usize> = (0..spec.vocab_size)
        .filter(|&i| !planted_words.contains(word_name(i + 1, spec.vocab_size).as_str()))
        .collect();
    eligible.shuffle(&mut rng);
    let stoplist: StopList = eligible
        .iter()
        .take(spec.stop_count())
        .map(|&i| word_name(i + 1, spec.vocab_size))
        .collect();

    let unigram = WeightedIndex::new(&probs).map_err(|e| SynthError::Invalid(e.to_string()))?;
    let mut stream = Vec::with_capacity(spec.corpus_tokens);
    let mut prev: Option<usize> = None;
    for _ in 0..spec.corpus_tokens {
        let next = match prev.and_then(|w| boosts.get(&w)) {
            Some(succ) => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                let mut picked = None;
                for &(w2, q) in succ {
                    acc += q;
                    if u < acc {
                        picked = Some(w2);
                        break;
                    }
                }
                // Otherwise draw from the unigram law restricted to the
                // remaining words.
                picked.unwrap_or_else(|| loop {
                    let w = unigram.sample(&mut rng);
                    if succ.iter().all(|s| s.0 != w) {
                        break w;
                    }
                })
            }
            None => unigram.sample(&mut rng),
        };
        stream.push(next);
        prev = Some(next);
    }

    let mut text = String::with_capacity(spec.corpus_tokens * 6);
    for (i, &w) in stream.iter().enumerate() {
        if i > 0 {
            text.push(if i % 20 == 0 { '\n' } else { ' ' });
        }
        text.push_str(&word_name(w + 1, spec.vocab_size));
    }
    text.push('\n');

    Ok(SynthCorpus {
        text,
        stoplist,
        gold: GoldSet {
            pairs: spec.planted.clone(),
        },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub recall: f64,
    pub reduction: f64,
    pub candidate_count: usize,
    pub excluded_count: usize,
}

pub fn grade(
    candidates: &[ReportRow],
    excluded: &[ReportRow],
    gold: &GoldSet,
) -> Result<Metrics, SynthError> {
    if gold.pairs.is_empty() {
        return Err(SynthError::EmptyGold);
    }
    let found: BTreeSet<(&str, &str)> = candidates
        .iter()
        .map(|r| (r.w1.as_str(), r.w2.as_str()))
        .collect();
    let planted: BTreeMap<(&str, &str), ()> = gold
        .pairs
        .iter()
        .map(|p| ((p.w1.as_str(), p.w2.as_str()), ()))
        .collect();
    let hits = planted.keys().filter(|k| found.contains(*k)).count();
    let total = candidates.len() + excluded.len();
    Ok(Metrics {
        recall: hits as f64 / planted.len() as f64,
        reduction: if total == 0 {
            0.0
        } else {
            excluded.len() as f64 / total as f64
        },
        candidate_count: candidates.len(),
        excluded_count: excluded.len(),
    })
}
