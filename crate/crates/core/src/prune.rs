//! Centroid-threshold cluster exclusion and the report tables.
//!
//! A cluster is kept when at least one coordinate of its centroid reaches
//! the threshold. Noise points are always kept as candidates.

use std::cmp::Ordering;
use std::io::Write;

use serde::Serialize;
use thiserror::Error;

use crate::cluster::{Assignment, Label, MixtureModel, Point};
use crate::features::{Coords, FeaturePoint};

pub const DEFAULT_THRESHOLD: f64 = 0.30;

#[derive(Debug, Error)]
pub enum PruneError {
    #[error("cannot summarize an empty bigram population")]
    EmptyTotal,
    #[error("counts ({counted}) do not add up to the total ({total})")]
    Inconsistent { counted: usize, total: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterVerdict {
    pub id: usize,
    pub centroid: Point,
    pub retained: bool,
    pub member_count: usize,
}

pub fn is_retained(centroid: &Point, threshold: f64) -> bool {
    centroid.iter().copied().fold(f64::NEG_INFINITY, f64::max) >= threshold
}

/// One verdict per mixture component, ids 1-based. Member counts start at
/// zero; see [`tally_members`].
pub fn prune(model: &MixtureModel, threshold: f64) -> Vec<ClusterVerdict> {
    model
        .centroids
        .iter()
        .enumerate()
        .map(|(j, c)| ClusterVerdict {
            id: j + 1,
            centroid: *c,
            retained: is_retained(c, threshold),
            member_count: 0,
        })
        .collect()
}

pub fn tally_members(verdicts: &mut [ClusterVerdict], assignment: &Assignment) {
    for v in verdicts.iter_mut() {
        v.member_count = 0;
    }
    for label in &assignment.labels {
        if let Label::Cluster(id) = label {
            if let Some(v) = verdicts.iter_mut().find(|v| v.id == *id) {
                v.member_count += 1;
            }
        }
    }
}

/// `100 * count / total` rounded half-up to two decimals.
pub fn percent(count: usize, total: usize) -> f64 {
    let hundredths = (20_000 * count as u128 + total as u128) / (2 * total as u128);
    hundredths as f64 / 100.0
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub total_bigrams: usize,
    pub retained_clusters: Vec<usize>,
    pub excluded_clusters: Vec<usize>,
    /// Members of retained clusters (noise not included).
    pub retained_count: usize,
    pub excluded_count: usize,
    pub noise_count: usize,
    pub retained_pct: f64,
    pub excluded_pct: f64,
    pub noise_pct: f64,
    /// Candidates are retained-cluster members plus noise points.
    pub candidate_count: usize,
    pub candidate_pct: f64,
}

impl Summary {
    pub fn from_counts(
        total: usize,
        retained_count: usize,
        excluded_count: usize,
        noise_count: usize,
    ) -> Result<Self, PruneError> {
        if total == 0 {
            return Err(PruneError::EmptyTotal);
        }
        let counted = retained_count + excluded_count + noise_count;
        if counted != total {
            return Err(PruneError::Inconsistent { counted, total });
        }
        let candidate_count = retained_count + noise_count;
        Ok(Summary {
            total_bigrams: total,
            retained_clusters: Vec::new(),
            excluded_clusters: Vec::new(),
            retained_count,
            excluded_count,
            noise_count,
            retained_pct: percent(retained_count, total),
            excluded_pct: percent(excluded_count, total),
            noise_pct: percent(noise_count, total),
            candidate_count,
            candidate_pct: percent(candidate_count, total),
        })
    }
}

pub fn summarize(
    verdicts: &[ClusterVerdict],
    assignment: &Assignment,
    total: usize,
) -> Result<Summary, PruneError> {
    let mut retained = 0;
    let mut excluded = 0;
    let mut noise = 0;
    for label in &assignment.labels {
        match label {
            Label::Noise => noise += 1,
            Label::Cluster(id) => match verdicts.iter().find(|v| v.id == *id) {
                Some(v) if !v.retained => excluded += 1,
                _ => retained += 1,
            },
        }
    }
    let mut summary = Summary::from_counts(total, retained, excluded, noise)?;
    summary.retained_clusters = verdicts
        .iter()
        .filter(|v| v.retained)
        .map(|v| v.id)
        .collect();
    summary.excluded_clusters = verdicts
        .iter()
        .filter(|v| !v.retained)
        .map(|v| v.id)
        .collect();
    Ok(summary)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub label: Label,
    pub w1: String,
    pub w2: String,
    pub coords: Coords,
    pub raw_llr: f64,
}

fn row_order(a: &ReportRow, b: &ReportRow) -> Ordering {
    a.label
        .cmp(&b.label)
        .then_with(|| b.raw_llr.total_cmp(&a.raw_llr))
        .then_with(|| (&a.w1, &a.w2).cmp(&(&b.w1, &b.w2)))
}

fn collect_rows<F>(points: &[FeaturePoint], assignment: &Assignment, keep: F) -> Vec<ReportRow>
where
    F: Fn(Label) -> bool,
{
    let mut rows: Vec<ReportRow> = points
        .iter()
        .zip(&assignment.labels)
        .filter(|(_, &label)| keep(label))
        .map(|(p, &label)| ReportRow {
            label,
            w1: p.bigram.0.clone(),
            w2: p.bigram.1.clone(),
            coords: p.coords,
            raw_llr: p.raw.llr,
        })
        .collect();
    rows.sort_by(row_order);
    rows
}

fn cluster_retained(verdicts: &[ClusterVerdict], id: usize) -> bool {
    verdicts
        .iter()
        .find(|v| v.id == id)
        .is_none_or(|v| v.retained)
}

/// Members of retained clusters and noise points, ordered by cluster id
/// (noise last), then by descending raw LLR, then by bigram.
pub fn emit_candidates(
    points: &[FeaturePoint],
    assignment: &Assignment,
    verdicts: &[ClusterVerdict],
) -> Vec<ReportRow> {
    collect_rows(points, assignment, |label| match label {
        Label::Noise => true,
        Label::Cluster(id) => cluster_retained(verdicts, id),
    })
}

pub fn emit_excluded(
    points: &[FeaturePoint],
    assignment: &Assignment,
    verdicts: &[ClusterVerdict],
) -> Vec<ReportRow> {
    collect_rows(points, assignment, |label| match label {
        Label::Noise => false,
        Label::Cluster(id) => !cluster_retained(verdicts, id),
    })
}

/// `cluster\tw1\tw2\tmi\tt\tllr` with normalized measures.
pub fn write_rows_tsv<W: Write>(rows: &[ReportRow], mut out: W) -> Result<(), PruneError> {
    writeln!(out, "cluster\tw1\tw2\tmi\tt\tllr")?;
    for r in rows {
        let [x, y, z] = r.coords;
        writeln!(
            out,
            "{}\t{}\t{}\t{x:.6}\t{y:.6}\t{z:.6}",
            r.label, r.w1, r.w2
        )?;
    }
    Ok(())
}

fn id_list(ids: &[usize]) -> String {
    ids.iter()
        .map(usize::to_string)
        .collect::<Vec<_>>()
        .join(",")
}

/// Two rows, candidates then excluded. Noise is listed as `NOISE` among the
/// candidate clusters when present.
pub fn write_summary_tsv<W: Write>(summary: &Summary, mut out: W) -> Result<(), PruneError> {
    let mut yes = id_list(&summary.retained_clusters);
    if summary.noise_count > 0 {
        if !yes.is_empty() {
            yes.push(',');
        }
        yes.push_str("NOISE");
    }
    writeln!(out, "total\tcandidate\tclusters\tcount\tpct")?;
    writeln!(
        out,
        "{}\tyes\t{}\t{}\t{:.2}",
        summary.total_bigrams, yes, summary.candidate_count, summary.candidate_pct
    )?;
    writeln!(
        out,
        "{}\tno\t{}\t{}\t{:.2}",
        summary.total_bigrams,
        id_list(&summary.excluded_clusters),
        summary.excluded_count,
        summary.excluded_pct
    )?;
    Ok(())
}

/// `x,y,z,cluster` with noise encoded as cluster 0.
pub fn write_scatter_csv<W: Write>(
    points: &[FeaturePoint],
    assignment: &Assignment,
    mut out: W,
) -> Result<(), PruneError> {
    writeln!(out, "x,y,z,cluster")?;
    for (p, label) in points.iter().zip(&assignment.labels) {
        let [x, y, z] = p.coords;
        writeln!(out, "{x:.6},{y:.6},{z:.6},{}", label.code())?;
    }
    Ok(())
}
