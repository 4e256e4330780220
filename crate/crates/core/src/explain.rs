//! Shapley-value attributions for anomaly scores.
//!
//! Attributions are model-agnostic: a coalition's value is the score of
//! the row with the features outside the coalition replaced by background
//! column means. The exact mode enumerates every coalition (feasible up to
//! twelve features); the sampled mode averages marginal contributions over
//! random feature permutations. In both modes the attributions add up:
//! baseline + sum of attributions = prediction.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::encoding::FeatureMatrix;
use crate::error::{Error, Result};
use crate::exec::map_indices;
use crate::seeding::derive_seed;

/// Exact enumeration is limited to 2^12 coalitions.
pub const EXACT_MAX_FEATURES: usize = 12;

pub const DEFAULT_PERMUTATIONS: usize = 200;

/// Tolerance on `baseline + sum(attributions) - prediction`.
pub const EFFICIENCY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum AttributionMode {
    Exact,
    Sampled { n_permutations: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributionVector {
    pub row_id: usize,
    pub feature_names: Vec<String>,
    pub attributions: Vec<f64>,
    /// Value of the empty coalition: the score of a fully background-mean
    /// imputed row.
    pub baseline: f64,
    /// Score of the unmodified row.
    pub prediction: f64,
    /// `baseline + sum(attributions)`; equals the prediction up to
    /// [`EFFICIENCY_TOLERANCE`].
    pub reconstructed: f64,
}

impl AttributionVector {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Features ranked by absolute attribution (descending, ties towards the
/// earlier feature), truncated to `n`.
pub fn top_contributors(a: &AttributionVector, n: usize) -> Vec<(String, f64)> {
    let mut idx: Vec<usize> = (0..a.attributions.len()).collect();
    idx.sort_by(|&i, &j| {
        a.attributions[j]
            .abs()
            .total_cmp(&a.attributions[i].abs())
            .then(i.cmp(&j))
    });
    idx.into_iter()
        .take(n)
        .map(|i| (a.feature_names[i].clone(), a.attributions[i]))
        .collect()
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

fn exact_attributions<F>(score: &F, row: &[f64], bg_means: &[f64]) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let d = row.len();
    if d > EXACT_MAX_FEATURES {
        return Err(Error::TooManyFeatures {
            max: EXACT_MAX_FEATURES,
            got: d,
        });
    }
    let values = map_indices(1usize << d, |mask| {
        let mut buffer = bg_means.to_vec();
        for (f, b) in buffer.iter_mut().enumerate() {
            if mask & (1 << f) != 0 {
                *b = row[f];
            }
        }
        score(&buffer)
    });

    // w(s) = s! (d-1-s)! / d! for a coalition of size s not containing the
    // feature.
    let d_fact = factorial(d);
    let weights: Vec<f64> = (0..d)
        .map(|s| factorial(s) * factorial(d - 1 - s) / d_fact)
        .collect();

    let mut attributions = vec![0.0; d];
    for (f, attr) in attributions.iter_mut().enumerate() {
        let bit = 1usize << f;
        for mask in 0..(1usize << d) {
            if mask & bit == 0 {
                let s = mask.count_ones() as usize;
                *attr += weights[s] * (values[mask | bit] - values[mask]);
            }
        }
    }
    Ok(attributions)
}

fn sampled_attributions<F>(
    score: &F,
    row: &[f64],
    bg_means: &[f64],
    baseline: f64,
    n_permutations: usize,
    seed: u64,
) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if n_permutations == 0 {
        return Err(Error::InvalidConfig(
            "n_permutations must be at least 1".into(),
        ));
    }
    let d = row.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sums = vec![0.0; d];
    let mut perm: Vec<usize> = (0..d).collect();
    let mut buffer = vec![0.0; d];
    for _ in 0..n_permutations {
        perm.shuffle(&mut rng);
        buffer.copy_from_slice(bg_means);
        let mut prev = baseline;
        for &f in &perm {
            buffer[f] = row[f];
            let cur = score(&buffer);
            sums[f] += cur - prev;
            prev = cur;
        }
    }
    Ok(sums
        .into_iter()
        .map(|s| s / n_permutations as f64)
        .collect())
}

/// Shapley attributions of `score` at `row` against the column means of
/// `background`.
///
/// The coalition value v(S) is the score of the row with every feature
/// outside S replaced by its background mean; the reported baseline is
/// v(∅). Sampled permutation walks telescope per permutation, so both
/// modes reconstruct the prediction from baseline plus attributions within
/// [`EFFICIENCY_TOLERANCE`].
pub fn shapley_attributions<F>(
    score: &F,
    row: &[f64],
    row_id: usize,
    background: &FeatureMatrix,
    mode: AttributionMode,
) -> Result<AttributionVector>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if background.n_rows() == 0 {
        return Err(Error::EmptyBackground);
    }
    if row.len() != background.n_features() {
        return Err(Error::LengthMismatch {
            context: "attribution row width",
            expected: background.n_features(),
            got: row.len(),
        });
    }
    let bg_means = background.column_means();
    let baseline = score(&bg_means);
    let prediction = score(row);
    let attributions = match mode {
        AttributionMode::Exact => exact_attributions(score, row, &bg_means)?,
        AttributionMode::Sampled {
            n_permutations,
            seed,
        } => sampled_attributions(score, row, &bg_means, baseline, n_permutations, seed)?,
    };
    let reconstructed = baseline + attributions.iter().sum::<f64>();
    debug_assert!(
        (reconstructed - prediction).abs() <= EFFICIENCY_TOLERANCE * prediction.abs().max(1.0),
        "attribution efficiency violated: {reconstructed} vs {prediction}"
    );
    Ok(AttributionVector {
        row_id,
        feature_names: background.feature_names().to_vec(),
        attributions,
        baseline,
        prediction,
        reconstructed,
    })
}

/// Mean absolute attribution per feature over a set of target rows, ranked
/// descending (ties towards the earlier feature).
///
/// In sampled mode each target row runs with its own stream derived from
/// the mode seed and the row id, so the summary does not depend on the
/// order in which rows are processed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalAttributionSummary {
    /// `(feature, mean |attribution|)`, descending.
    pub features: Vec<(String, f64)>,
    pub n_rows: usize,
}

impl GlobalAttributionSummary {
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["feature", "mean_abs_attribution"])?;
        for (name, value) in &self.features {
            wtr.write_record([name.clone(), format!("{value}")])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

pub fn global_attribution_summary<F>(
    score: &F,
    targets: &FeatureMatrix,
    background: &FeatureMatrix,
    mode: AttributionMode,
) -> Result<GlobalAttributionSummary>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if targets.n_rows() == 0 {
        return Err(Error::EmptyDataset("no attribution targets".into()));
    }
    let vectors = map_indices(targets.n_rows(), |i| {
        let row_id = targets.row_ids()[i];
        let row_mode = match mode {
            AttributionMode::Exact => AttributionMode::Exact,
            AttributionMode::Sampled {
                n_permutations,
                seed,
            } => AttributionMode::Sampled {
                n_permutations,
                seed: derive_seed(seed, "row", row_id as u64),
            },
        };
        shapley_attributions(score, targets.row(i), row_id, background, row_mode)
    });
    let vectors: Vec<AttributionVector> = vectors.into_iter().collect::<Result<_>>()?;

    let d = background.n_features();
    let mut means = vec![0.0; d];
    for v in &vectors {
        for (m, a) in means.iter_mut().zip(&v.attributions) {
            *m += a.abs();
        }
    }
    for m in means.iter_mut() {
        *m /= vectors.len() as f64;
    }
    let mut idx: Vec<usize> = (0..d).collect();
    idx.sort_by(|&i, &j| means[j].total_cmp(&means[i]).then(i.cmp(&j)));
    Ok(GlobalAttributionSummary {
        features: idx
            .into_iter()
            .map(|i| (background.feature_names()[i].clone(), means[i]))
            .collect(),
        n_rows: targets.n_rows(),
    })
}
