//! Min-max normalization of the measures and assembly of the 3D points
//! that the clustering step consumes.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Bigram, BigramTable};
use crate::measures::{measure_all, MeasureError, MeasureVector, VarianceMode};

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("cannot fit a normalizer on an empty population")]
    EmptyPopulation,
    #[error("bigram table has no pairs at or above the minimum count")]
    EmptyTable,
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Normalized (mi, t, llr) coordinates.
pub type Coords = [f64; 3];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Range {
    pub min: f64,
    pub max: f64,
}

impl Range {
    fn empty() -> Self {
        Range {
            min: f64::INFINITY,
            max: f64::NEG_INFINITY,
        }
    }

    fn include(&mut self, v: f64) {
        self.min = self.min.min(v);
        self.max = self.max.max(v);
    }

    /// Zero-range (or never-populated) dimensions map to 0.
    pub fn scale(&self, v: f64) -> f64 {
        if !(self.max > self.min) {
            return 0.0;
        }
        ((v - self.min) / (self.max - self.min)).clamp(0.0, 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizationParams {
    pub mi: Range,
    pub t: Range,
    pub llr: Range,
}

pub fn fit_normalizer<'a, I>(raws: I) -> Result<NormalizationParams, FeatureError>
where
    I: IntoIterator<Item = &'a MeasureVector>,
{
    let mut params = NormalizationParams {
        mi: Range::empty(),
        t: Range::empty(),
        llr: Range::empty(),
    };
    let mut seen = false;
    for raw in raws {
        seen = true;
        params.mi.include(raw.mi);
        params.llr.include(raw.llr);
        if !raw.t_degenerate {
            params.t.include(raw.t);
        }
    }
    if !seen {
        return Err(FeatureError::EmptyPopulation);
    }
    if params.t.min > params.t.max {
        // Only degenerate t values: collapse to a zero-range dimension.
        params.t = Range { min: 0.0, max: 0.0 };
    }
    Ok(params)
}

/// A degenerate t is treated as the population maximum.
pub fn normalize(raw: &MeasureVector, p: &NormalizationParams) -> Coords {
    let t = if raw.t_degenerate {
        p.t.scale(p.t.max)
    } else {
        p.t.scale(raw.t)
    };
    [p.mi.scale(raw.mi), t, p.llr.scale(raw.llr)]
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeaturePoint {
    pub bigram: Bigram,
    pub count: u64,
    pub raw: MeasureVector,
    pub coords: Coords,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PointOptions {
    pub variance: VarianceMode,
    /// Distinct bigrams below this joint count get no point.
    pub min_count: u64,
}

impl Default for PointOptions {
    fn default() -> Self {
        PointOptions {
            variance: VarianceMode::Full,
            min_count: 1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FeatureSet {
    /// Sorted by bigram.
    pub points: Vec<FeaturePoint>,
    pub params: NormalizationParams,
    /// Bigrams whose measures could not be computed.
    pub diagnostics: Vec<(Bigram, MeasureError)>,
}

impl FeatureSet {
    pub fn coords(&self) -> Vec<Coords> {
        self.points.iter().map(|p| p.coords).collect()
    }
}

pub fn build_points(table: &BigramTable, opts: &PointOptions) -> Result<FeatureSet, FeatureError> {
    let pairs: Vec<(&Bigram, u64)> = table
        .pairs()
        .iter()
        .filter(|(_, &c)| c >= opts.min_count)
        .map(|(b, &c)| (b, c))
        .collect();
    if pairs.is_empty() {
        return Err(FeatureError::EmptyTable);
    }

    let measured: Vec<(&Bigram, u64, Result<MeasureVector, MeasureError>)> = pairs
        .par_iter()
        .map(|&(b, c)| (b, c, measure_all(&table.stats(&b.0, &b.1), opts.variance)))
        .collect();

    let mut raws = Vec::with_capacity(measured.len());
    let mut diagnostics = Vec::new();
    for (bigram, count, result) in measured {
        match result {
            Ok(raw) => raws.push((bigram.clone(), count, raw)),
            Err(e) => diagnostics.push((bigram.clone(), e)),
        }
    }
    let params = fit_normalizer(raws.iter().map(|(_, _, r)| r))?;
    let points = raws
        .into_iter()
        .map(|(bigram, count, raw)| FeaturePoint {
            coords: normalize(&raw, &params),
            bigram,
            count,
            raw,
        })
        .collect();
    Ok(FeatureSet {
        points,
        params,
        diagnostics,
    })
}

/// Writes `w1,w2,mi,t,llr,x,y,z` rows.
pub fn write_points_csv<W: Write>(points: &[FeaturePoint], out: W) -> Result<(), FeatureError> {
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(["w1", "w2", "mi", "t", "llr", "x", "y", "z"])?;
    for p in points {
        let [x, y, z] = p.coords;
        writer.write_record([
            p.bigram.0.clone(),
            p.bigram.1.clone(),
            format!("{:.6}", p.raw.mi),
            format!("{:.6}", p.raw.t),
            format!("{:.6}", p.raw.llr),
            format!("{x:.6}"),
            format!("{y:.6}"),
            format!("{z:.6}"),
        ])?;
    }
    writer.flush()?;
    Ok(())
}
