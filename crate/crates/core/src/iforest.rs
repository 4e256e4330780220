//! Isolation forest scoring.
//!
//! Trees are grown on small subsamples by splitting a random non-constant
//! feature at a random point until rows isolate or the height limit is
//! reached. Short mean path lengths mean easy isolation; predictions
//! rescale mean path lengths so the most isolated row scores 1 and the
//! least isolated scores 0.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::encoding::FeatureMatrix;
use crate::error::{Error, Result};
use crate::exec::map_indices;
use crate::seeding::derive_seed;

pub const DEFAULT_N_TREES: usize = 100;
pub const DEFAULT_SAMPLE_SIZE: usize = 256;
pub const DEFAULT_QUANTILE: f64 = 0.99;
pub const DEFAULT_CAP: usize = 500;

const EULER_MASCHERONI: f64 = 0.577_215_664_901_532_9;

/// Harmonic number H(i). Below 64 terms the sum is computed directly;
/// beyond that an asymptotic expansion matches the direct sum to well
/// under 1e-9 across the supported range.
fn harmonic(i: usize) -> f64 {
    if i == 0 {
        return 0.0;
    }
    if i < 64 {
        (1..=i).map(|j| 1.0 / j as f64).sum()
    } else {
        let x = i as f64;
        x.ln() + EULER_MASCHERONI + 1.0 / (2.0 * x) - 1.0 / (12.0 * x * x)
            + 1.0 / (120.0 * x.powi(4))
    }
}

/// Expected path length c(m) of an unsuccessful BST search among m rows:
/// `2 H(m-1) - 2 (m-1) / m`, with c(0) = c(1) = 0.
pub fn average_path_length(m: usize) -> f64 {
    if m <= 1 {
        0.0
    } else {
        2.0 * harmonic(m - 1) - 2.0 * (m as f64 - 1.0) / m as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TreeNode {
    Internal {
        feature: usize,
        split: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
    Leaf {
        size: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct IsolationTree {
    pub root: TreeNode,
}

impl IsolationTree {
    /// Edges walked to reach the row's leaf, plus c(leaf size) for leaves
    /// that still hold several rows.
    pub fn path_length(&self, row: &[f64]) -> f64 {
        let mut node = &self.root;
        let mut depth = 0usize;
        loop {
            match node {
                TreeNode::Leaf { size } => return depth as f64 + average_path_length(*size),
                TreeNode::Internal {
                    feature,
                    split,
                    left,
                    right,
                } => {
                    depth += 1;
                    node = if row[*feature] < *split { left } else { right };
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForestModel {
    pub trees: Vec<IsolationTree>,
    /// Configured subsample size.
    pub sample_size: usize,
    /// Actually used per tree: `min(sample_size, n_rows)`.
    pub effective_sample_size: usize,
    pub height_limit: usize,
    pub n_features: usize,
    pub seed: u64,
}

fn build_node(
    x: &FeatureMatrix,
    rows: &[usize],
    depth: usize,
    limit: usize,
    rng: &mut ChaCha8Rng,
) -> TreeNode {
    if depth >= limit || rows.len() <= 1 {
        return TreeNode::Leaf { size: rows.len() };
    }
    let width = x.n_features();
    let mut mins = vec![f64::INFINITY; width];
    let mut maxs = vec![f64::NEG_INFINITY; width];
    for &r in rows {
        for f in 0..width {
            let v = x.get(r, f);
            mins[f] = mins[f].min(v);
            maxs[f] = maxs[f].max(v);
        }
    }
    let candidates: Vec<usize> = (0..width).filter(|&f| mins[f] < maxs[f]).collect();
    if candidates.is_empty() {
        return TreeNode::Leaf { size: rows.len() };
    }
    let feature = candidates[rng.gen_range(0..candidates.len())];
    // u in (0,1): resample the open lower bound so the split stays strictly
    // inside (min, max).
    let u = loop {
        let u: f64 = rng.gen();
        if u > 0.0 {
            break u;
        }
    };
    let split = mins[feature] + u * (maxs[feature] - mins[feature]);
    let left_rows: Vec<usize> = rows
        .iter()
        .copied()
        .filter(|&r| x.get(r, feature) < split)
        .collect();
    if left_rows.is_empty() || left_rows.len() == rows.len() {
        // Rounding pushed the split onto a bound; treat as unsplittable.
        return TreeNode::Leaf { size: rows.len() };
    }
    let right_rows: Vec<usize> = rows
        .iter()
        .copied()
        .filter(|&r| x.get(r, feature) >= split)
        .collect();
    TreeNode::Internal {
        feature,
        split,
        left: Box::new(build_node(x, &left_rows, depth + 1, limit, rng)),
        right: Box::new(build_node(x, &right_rows, depth + 1, limit, rng)),
    }
}

/// Trains `n_trees` isolation trees, each on its own subsample drawn
/// without replacement (clamped to the dataset size). The height limit is
/// ⌈log2(effective sample size)⌉. Tree t uses a seed derived from the
/// forest seed and t.
pub fn iforest_train(
    x: &FeatureMatrix,
    n_trees: usize,
    sample_size: usize,
    seed: u64,
) -> Result<ForestModel> {
    if x.n_rows() == 0 {
        return Err(Error::EmptyDataset(
            "cannot train an isolation forest".into(),
        ));
    }
    if x.n_rows() < 2 {
        return Err(Error::InvalidConfig(
            "isolation forest needs at least 2 rows".into(),
        ));
    }
    if n_trees == 0 {
        return Err(Error::InvalidConfig("n_trees must be at least 1".into()));
    }
    if sample_size == 0 {
        return Err(Error::InvalidConfig(
            "sample_size must be at least 1".into(),
        ));
    }
    let effective = sample_size.min(x.n_rows());
    let height_limit = (effective as f64).log2().ceil() as usize;

    let trees = map_indices(n_trees, |t| {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "tree", t as u64));
        let rows: Vec<usize> = rand::seq::index::sample(&mut rng, x.n_rows(), effective).into_vec();
        IsolationTree {
            root: build_node(x, &rows, 0, height_limit, &mut rng),
        }
    });

    Ok(ForestModel {
        trees,
        sample_size,
        effective_sample_size: effective,
        height_limit,
        n_features: x.n_features(),
        seed,
    })
}

/// Per-row forest outputs. Predictions rescale mean path lengths:
/// `(max - mean_i) / (max - min)` over the scored rows, so the shortest
/// mean path scores 1. When every row shares the same mean path length the
/// predictions are all zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreTable {
    pub total_path_lengths: Vec<f64>,
    pub mean_path_lengths: Vec<f64>,
    pub predictions: Vec<f64>,
    pub max_mean_path: f64,
    pub min_mean_path: f64,
    pub n_trees: usize,
}

impl ScoreTable {
    /// Builds the table from per-row path length totals. Exposed so score
    /// fidelity can be checked against hand-built path tables.
    pub fn from_totals(total_path_lengths: Vec<f64>, n_trees: usize) -> Result<ScoreTable> {
        if n_trees == 0 {
            return Err(Error::InvalidConfig("n_trees must be at least 1".into()));
        }
        if total_path_lengths.is_empty() {
            return Err(Error::EmptyDataset("no rows to score".into()));
        }
        if total_path_lengths.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig(
                "path length totals must be finite".into(),
            ));
        }
        let mean_path_lengths: Vec<f64> = total_path_lengths
            .iter()
            .map(|t| t / n_trees as f64)
            .collect();
        let mut max_mean = f64::NEG_INFINITY;
        let mut min_mean = f64::INFINITY;
        for &m in &mean_path_lengths {
            max_mean = max_mean.max(m);
            min_mean = min_mean.min(m);
        }
        let range = max_mean - min_mean;
        let predictions = mean_path_lengths
            .iter()
            .map(|&m| {
                if range == 0.0 {
                    0.0
                } else {
                    (max_mean - m) / range
                }
            })
            .collect();
        Ok(ScoreTable {
            total_path_lengths,
            mean_path_lengths,
            predictions,
            max_mean_path: max_mean,
            min_mean_path: min_mean,
            n_trees,
        })
    }

    pub fn len(&self) -> usize {
        self.predictions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.predictions.is_empty()
    }

    pub fn write_csv<W: Write>(&self, row_ids: &[usize], flags: &[bool], w: W) -> Result<()> {
        if row_ids.len() != self.len() || flags.len() != self.len() {
            return Err(Error::LengthMismatch {
                context: "score table rows",
                expected: self.len(),
                got: row_ids.len().min(flags.len()),
            });
        }
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["row_id", "mean_path_length", "prediction", "flagged"])?;
        for i in 0..self.len() {
            wtr.write_record([
                row_ids[i].to_string(),
                format!("{}", self.mean_path_lengths[i]),
                format!("{}", self.predictions[i]),
                flags[i].to_string(),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Scores every row of `x` under the forest.
pub fn predict_scores(forest: &ForestModel, x: &FeatureMatrix) -> Result<ScoreTable> {
    if x.n_features() != forest.n_features {
        return Err(Error::LengthMismatch {
            context: "scoring feature count",
            expected: forest.n_features,
            got: x.n_features(),
        });
    }
    if x.n_rows() == 0 {
        return Err(Error::EmptyDataset("no rows to score".into()));
    }
    let totals = map_indices(x.n_rows(), |i| {
        let row = x.row(i);
        forest.trees.iter().map(|t| t.path_length(row)).sum::<f64>()
    });
    ScoreTable::from_totals(totals, forest.trees.len())
}

/// Quantile thresholding with a review cap.
///
/// Flags the rows whose prediction reaches the `quantile`-th largest value
/// (at least one row always qualifies). If more than `cap` rows qualify,
/// only the `cap` highest predictions stay flagged, breaking ties at the
/// cut towards lower row positions.
pub fn iforest_threshold(table: &ScoreTable, quantile: f64, cap: usize) -> Result<Vec<bool>> {
    if !(quantile > 0.0 && quantile < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "quantile must be in (0, 1), got {quantile}"
        )));
    }
    if cap == 0 {
        return Err(Error::InvalidConfig("cap must be at least 1".into()));
    }
    let n = table.len();
    let preds = &table.predictions;
    // The epsilon keeps the count exact when (1-q)*n rounds just below an
    // integer (e.g. 0.01 * 10000).
    let m = ((((1.0 - quantile) * n as f64) + 1e-9).floor() as usize)
        .max(1)
        .min(n);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| preds[b].total_cmp(&preds[a]).then(a.cmp(&b)));
    let threshold = preds[order[m - 1]];
    if n > 1 && preds[order[0]] == preds[order[n - 1]] {
        log::warn!(
            "degenerate prediction distribution (all scores equal); \
             flagging the first {} rows",
            cap.min(n)
        );
    }
    let qualifying = preds.iter().filter(|&&p| p >= threshold).count();
    let mut flags = vec![false; n];
    if qualifying > cap {
        for &i in order.iter().take(cap) {
            flags[i] = true;
        }
    } else {
        for i in 0..n {
            flags[i] = preds[i] >= threshold;
        }
    }
    Ok(flags)
}

/// Scores arbitrary feature vectors on the frozen prediction scale of an
/// existing score table. Rows isolating faster than anything in the table
/// score above 1.
pub struct ForestScorer<'a> {
    forest: &'a ForestModel,
    max_mean: f64,
    min_mean: f64,
}

impl<'a> ForestScorer<'a> {
    pub fn new(forest: &'a ForestModel, table: &ScoreTable) -> Self {
        ForestScorer {
            forest,
            max_mean: table.max_mean_path,
            min_mean: table.min_mean_path,
        }
    }

    pub fn score(&self, row: &[f64]) -> f64 {
        let total: f64 = self.forest.trees.iter().map(|t| t.path_length(row)).sum();
        let mean = total / self.forest.trees.len() as f64;
        let range = self.max_mean - self.min_mean;
        if range == 0.0 {
            0.0
        } else {
            (self.max_mean - mean) / range
        }
    }
}
