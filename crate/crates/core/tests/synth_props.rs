use std::collections::HashMap;

use colloc_core::synth::{word_name, PlantedPair, SynthError};
use colloc_core::{
    extract_bigrams, generate, grade, measure_all, pmi, tokenize, GoldSet, Label, ReportRow,
    StopList, SynthSpec, TokenizerConfig, VarianceMode,
};
use proptest::prelude::*;

fn spec(planted: Vec<PlantedPair>, stop_fraction: f64, seed: u64) -> SynthSpec {
    SynthSpec {
        vocab_size: 2000,
        corpus_tokens: 100_000,
        zipf_exponent: 1.0,
        planted,
        stop_fraction,
        seed,
    }
}

fn pair(r1: usize, r2: usize, boost: f64) -> PlantedPair {
    PlantedPair {
        w1: word_name(r1, 2000),
        w2: word_name(r2, 2000),
        boost,
    }
}

fn words(text: &str) -> Vec<String> {
    tokenize(text, &TokenizerConfig::default())
        .into_iter()
        .map(|t| t.text)
        .collect()
}

#[test]
fn same_seed_same_corpus() {
    let s = SynthSpec::acceptance_default(42);
    let a = generate(&s).unwrap();
    let b = generate(&s).unwrap();
    assert_eq!(a.text, b.text);
    assert_eq!(a.stoplist, b.stoplist);
    assert_ne!(
        a.text,
        generate(&SynthSpec::acceptance_default(43)).unwrap().text
    );
}

#[test]
fn unit_boost_leaves_successors_unigram_distributed() {
    let pairs: Vec<_> = [(2, 5), (4, 9), (10, 3), (7, 30), (1, 12)]
        .iter()
        .map(|&(a, b)| pair(a, b, 1.0))
        .collect();
    let corpus = generate(&spec(pairs.clone(), 0.0, 3)).unwrap();
    let ws = words(&corpus.text);
    let h: f64 = (1..=2000).map(|r| 1.0 / r as f64).sum();
    for p in &pairs {
        let after: Vec<&String> = ws
            .windows(2)
            .filter(|w| w[0] == p.w1)
            .map(|w| &w[1])
            .collect();
        let n = after.len() as f64;
        let hits = after.iter().filter(|w| ***w == p.w2).count() as f64;
        let rank: usize = p.w2[1..].parse().unwrap();
        let expected = 1.0 / (rank as f64 * h);
        let se = (expected * (1.0 - expected) / n).sqrt();
        assert!(
            (hits / n - expected).abs() <= 3.0 * se,
            "{p:?}: {} vs {expected}",
            hits / n
        );
    }
}

#[test]
fn strong_boost_lifts_pmi_above_median() {
    let p = pair(20, 30, 50.0);
    let corpus = generate(&spec(vec![p.clone()], 0.05, 11)).unwrap();
    let tokens = tokenize(&corpus.text, &TokenizerConfig::default());
    let table = extract_bigrams(&tokens, &corpus.stoplist);
    let mut all: Vec<f64> = table
        .pairs()
        .keys()
        .map(|(a, b)| pmi(&table.stats(a, b)).unwrap())
        .collect();
    all.sort_by(f64::total_cmp);
    let median = all[all.len() / 2];
    let planted = table.stats(&p.w1, &p.w2);
    assert!(planted.c12 > 0);
    assert!(pmi(&planted).unwrap() > median);
    let m = measure_all(&planted, VarianceMode::Full).unwrap();
    assert!(m.llr > 0.0 && m.t > 0.0);
}

/// Least-squares slope of ln(frequency) on ln(rank), ranks by observed frequency.
fn zipf_slope(text: &str) -> f64 {
    let mut counts: HashMap<String, usize> = HashMap::new();
    for w in words(text) {
        *counts.entry(w).or_insert(0) += 1;
    }
    let mut freqs: Vec<usize> = counts.into_values().collect();
    freqs.sort_unstable_by(|a, b| b.cmp(a));
    let xy: Vec<(f64, f64)> = freqs
        .iter()
        .enumerate()
        .map(|(i, &f)| (((i + 1) as f64).ln(), (f as f64).ln()))
        .collect();
    let n = xy.len() as f64;
    let mx = xy.iter().map(|p| p.0).sum::<f64>() / n;
    let my = xy.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = xy.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = xy.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

#[test]
fn rank_frequency_follows_exponent() {
    for (exponent, seed) in [(1.0, 1), (0.8, 2), (1.2, 3)] {
        let s = SynthSpec {
            zipf_exponent: exponent,
            ..spec(Vec::new(), 0.0, seed)
        };
        let slope = zipf_slope(&generate(&s).unwrap().text);
        assert!(
            (slope + exponent).abs() <= 0.15,
            "exponent {exponent}: slope {slope}"
        );
    }
}

#[test]
fn planted_words_stay_off_the_stop_list() {
    let s = SynthSpec::acceptance_default(42);
    assert_eq!(s.planted.len(), 50);
    let corpus = generate(&s).unwrap();
    assert_eq!(corpus.stoplist.len(), 100);
    for p in &s.planted {
        assert!(!corpus.stoplist.contains(&p.w1) && !corpus.stoplist.contains(&p.w2));
        assert!(p.boost >= 1.0);
    }
}

#[test]
fn infeasible_boost_is_an_error() {
    let err = generate(&spec(vec![pair(3, 1, 30.0)], 0.0, 0)).unwrap_err();
    assert!(matches!(err, SynthError::Infeasible { .. }));
    assert!(generate(&spec(vec![pair(3, 1, 0.5)], 0.0, 0)).is_err());
    let bad = SynthSpec {
        vocab_size: 1,
        ..spec(Vec::new(), 0.0, 0)
    };
    assert!(generate(&bad).is_err());
}

#[test]
fn gold_tsv_roundtrip() {
    let gold = GoldSet {
        pairs: vec![pair(5, 9, 30.0), pair(11, 2, 1.5)],
    };
    let mut buf = Vec::new();
    gold.write_tsv(&mut buf).unwrap();
    assert_eq!(GoldSet::read_tsv(buf.as_slice()).unwrap(), gold);
    assert!(GoldSet::read_tsv("a\tb\n".as_bytes()).is_err());
}

fn row(w1: &str, w2: &str) -> ReportRow {
    ReportRow {
        label: Label::Cluster(1),
        w1: w1.to_owned(),
        w2: w2.to_owned(),
        coords: [0.0; 3],
        raw_llr: 0.0,
    }
}

#[test]
fn grade_edge_cases() {
    let gold = GoldSet {
        pairs: vec![pair(1, 2, 30.0)],
    };
    let hit = vec![row(&gold.pairs[0].w1, &gold.pairs[0].w2)];
    let m = grade(&hit, &[], &gold).unwrap();
    assert_eq!((m.recall, m.reduction), (1.0, 0.0));
    let m = grade(&[], &hit, &gold).unwrap();
    assert_eq!((m.recall, m.reduction), (0.0, 1.0));
    assert!(matches!(
        grade(&hit, &[], &GoldSet::default()),
        Err(SynthError::EmptyGold)
    ));
}

proptest! {
    #[test]
    fn grade_ignores_row_order(
        cands in prop::collection::vec((0usize..20, 0usize..20), 0..40),
        excl in prop::collection::vec((0usize..20, 0usize..20), 0..40),
        seed in any::<u64>(),
    ) {
        let gold = GoldSet { pairs: (0..10).map(|i| pair(i + 1, i + 2, 2.0)).collect() };
        let to_rows = |v: &[(usize, usize)]| -> Vec<ReportRow> {
            v.iter().map(|&(a, b)| row(&word_name(a, 2000), &word_name(b, 2000))).collect()
        };
        let (c, e) = (to_rows(&cands), to_rows(&excl));
        let base = grade(&c, &e, &gold).unwrap();
        let mut c2 = c.clone();
        let mut e2 = e.clone();
        let n = c2.len().max(1);
        c2.rotate_left((seed as usize) % n);
        c2.reverse();
        e2.reverse();
        prop_assert_eq!(grade(&c2, &e2, &gold).unwrap(), base);
    }
}

#[test]
fn stop_list_is_planted_free_for_small_vocab() {
    let s = SynthSpec::plan(200, 2000, 1.0, 10, 5.0, 0.5, 9).unwrap();
    let corpus = generate(&s).unwrap();
    let stops: &StopList = &corpus.stoplist;
    assert_eq!(stops.len(), 100);
    assert!(s
        .planted
        .iter()
        .all(|p| !stops.contains(&p.w1) && !stops.contains(&p.w2)));
    let tokens = tokenize(&corpus.text, &TokenizerConfig::default());
    assert_eq!(tokens.len(), 2000);
}
