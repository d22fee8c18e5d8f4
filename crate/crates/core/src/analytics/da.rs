use std::collections::BTreeMap;
use std::io::Read;

use serde::{Deserialize, Serialize};

use super::StatsError;

/// A crowd adequacy rating on the 0-100 scale.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DaRecord {
    pub translation_id: String,
    pub crowd_annotator_id: String,
    pub raw: i64,
}

impl DaRecord {
    pub fn validate(&self) -> Result<(), StatsError> {
        if !(0..=100).contains(&self.raw) {
            return Err(StatsError::RatingOutOfRange {
                translation: self.translation_id.clone(),
                raw: self.raw,
            });
        }
        Ok(())
    }
}

/// Read `translation_id,crowd_annotator_id,raw` CSV (with header).
pub fn read_da_csv<R: Read>(reader: R) -> Result<Vec<DaRecord>, StatsError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut out = Vec::new();
    for row in rdr.deserialize::<DaRecord>() {
        let rec = row.map_err(|e| StatsError::DaInput(e.to_string()))?;
        rec.validate()?;
        out.push(rec);
    }
    Ok(out)
}

/// Per-rater z-scores with the sample (n - 1) standard deviation.
///
/// Each squared z-score is formed as an exact fraction of integer moments,
/// `z^2 = (n x - S)^2 (n - 1) / sum_j (n x_j - S)^2`, reduced to lowest terms
/// before the one square root. Any positive affine map of a rater's scale
/// that keeps ratings integral leaves those fractions, and hence the output
/// bits, unchanged. Returns `None` for fewer than 2 ratings or zero spread.
pub fn zscores(ratings: &[i64]) -> Option<Vec<f64>> {
    let n = ratings.len() as i128;
    if n < 2 {
        return None;
    }
    let sum: i128 = ratings.iter().map(|&x| x as i128).sum();
    let deviations: Vec<i128> = ratings.iter().map(|&x| n * x as i128 - sum).collect();
    let spread: u128 = deviations.iter().map(|d| (d * d) as u128).sum();
    if spread == 0 {
        return None;
    }
    Some(
        deviations
            .iter()
            .map(|&d| {
                let num = (d * d) as u128 * (n - 1) as u128;
                let g = gcd(num, spread);
                let z = ((num / g) as f64 / (spread / g) as f64).sqrt();
                if d < 0 {
                    -z
                } else {
                    z
                }
            })
            .collect(),
    )
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DaOptions {
    /// Keep only translations rated by exactly this many crowd annotators.
    pub required_raters: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DaScore {
    pub score: f64,
    pub raters: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExcludedRater {
    pub crowd_annotator_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DaStandardization {
    pub scores: BTreeMap<String, DaScore>,
    pub excluded_raters: Vec<ExcludedRater>,
    /// Translations dropped by the rater-count filter, with their rater count.
    pub dropped_translations: BTreeMap<String, usize>,
}

impl DaStandardization {
    pub fn score_map(&self) -> BTreeMap<String, f64> {
        self.scores
            .iter()
            .map(|(k, v)| (k.clone(), v.score))
            .collect()
    }
}

/// Standardize each rater's ratings, then average per translation.
pub fn standardize_da(
    records: &[DaRecord],
    options: &DaOptions,
) -> Result<DaStandardization, StatsError> {
    let mut by_rater: BTreeMap<&str, Vec<&DaRecord>> = BTreeMap::new();
    for r in records {
        r.validate()?;
        by_rater.entry(r.crowd_annotator_id.as_str()).or_default().push(r);
    }

    let mut excluded_raters = Vec::new();
    // translation -> rater -> z-scores
    let mut per_translation: BTreeMap<&str, BTreeMap<&str, Vec<f64>>> = BTreeMap::new();
    for (rater, recs) in &by_rater {
        if recs.len() < 2 {
            excluded_raters.push(ExcludedRater {
                crowd_annotator_id: rater.to_string(),
                reason: format!("only {} rating", recs.len()),
            });
            continue;
        }
        let raw: Vec<i64> = recs.iter().map(|r| r.raw).collect();
        let Some(z) = zscores(&raw) else {
            excluded_raters.push(ExcludedRater {
                crowd_annotator_id: rater.to_string(),
                reason: "zero variance".to_string(),
            });
            continue;
        };
        for (rec, z) in recs.iter().zip(z) {
            per_translation
                .entry(rec.translation_id.as_str())
                .or_default()
                .entry(rater)
                .or_default()
                .push(z);
        }
    }

    let mut scores = BTreeMap::new();
    let mut dropped_translations = BTreeMap::new();
    for (translation, raters) in per_translation {
        if let Some(n) = options.required_raters {
            if raters.len() != n {
                dropped_translations.insert(translation.to_string(), raters.len());
                continue;
            }
        }
        let all: Vec<f64> = raters.values().flatten().copied().collect();
        scores.insert(
            translation.to_string(),
            DaScore {
                score: all.iter().sum::<f64>() / all.len() as f64,
                raters: raters.len(),
            },
        );
    }
    Ok(DaStandardization {
        scores,
        excluded_raters,
        dropped_translations,
    })
}

/// Pearson product-moment correlation.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(StatsError::TooFewValues(x.len()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(StatsError::ZeroVariance);
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}
