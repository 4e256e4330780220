//! Target encoding of categorical columns and Gaussian normalization.
//!
//! Each categorical column is replaced by a per-group statistic of the
//! purchase amount (count, mean, median or mode), so the feature space
//! keeps one feature per input column instead of one per category level.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::map_indices;
use crate::ingest::Dataset;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EncodingStrategy {
    Count,
    Mean,
    Median,
    Mode,
}

impl EncodingStrategy {
    pub const ALL: [EncodingStrategy; 4] = [
        EncodingStrategy::Count,
        EncodingStrategy::Mean,
        EncodingStrategy::Median,
        EncodingStrategy::Mode,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            EncodingStrategy::Count => "count",
            EncodingStrategy::Mean => "mean",
            EncodingStrategy::Median => "median",
            EncodingStrategy::Mode => "mode",
        }
    }
}

impl std::fmt::Display for EncodingStrategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for EncodingStrategy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "count" => Ok(EncodingStrategy::Count),
            "mean" => Ok(EncodingStrategy::Mean),
            "median" => Ok(EncodingStrategy::Median),
            "mode" => Ok(EncodingStrategy::Mode),
            other => Err(Error::InvalidConfig(format!(
                "unknown encoding strategy {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnEncoder {
    pub column: String,
    pub map: BTreeMap<String, f64>,
}

/// Fitted group → statistic tables for every categorical column, plus the
/// global fallback used for values unseen at fit time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderMap {
    pub strategy: EncodingStrategy,
    pub target: String,
    pub columns: Vec<ColumnEncoder>,
    pub fallback: f64,
}

impl EncoderMap {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

fn median_sorted(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

/// Most frequent exact value; ties resolve to the smallest value.
fn mode_sorted(sorted: &[f64]) -> f64 {
    let mut best = sorted[0];
    let mut best_count = 0usize;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i + 1;
        while j < sorted.len() && sorted[j] == sorted[i] {
            j += 1;
        }
        if j - i > best_count {
            best_count = j - i;
            best = sorted[i];
        }
        i = j;
    }
    best
}

fn statistic(strategy: EncodingStrategy, sorted: &[f64]) -> f64 {
    match strategy {
        EncodingStrategy::Count => sorted.len() as f64,
        EncodingStrategy::Mean => sorted.iter().sum::<f64>() / sorted.len() as f64,
        EncodingStrategy::Median => median_sorted(sorted),
        EncodingStrategy::Mode => mode_sorted(sorted),
    }
}

/// Fits one encoder per categorical column against the amount column.
/// The dataset must be complete (cleaned).
pub fn fit_target_encoding(dataset: &Dataset, strategy: EncodingStrategy) -> Result<EncoderMap> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset("cannot fit encoders".into()));
    }
    let mut amounts = Vec::with_capacity(dataset.len());
    for rec in &dataset.records {
        match rec.amount {
            Some(a) => amounts.push(a),
            None => {
                return Err(Error::MissingValue {
                    row: rec.row_id,
                    column: "amount".into(),
                })
            }
        }
    }
    let mut sorted_all = amounts.clone();
    sorted_all.sort_by(f64::total_cmp);
    let fallback = match strategy {
        EncodingStrategy::Count => 0.0,
        _ => statistic(strategy, &sorted_all),
    };

    let cat_cols = dataset.schema.categorical_indices();
    let columns = map_indices(cat_cols.len(), |ci| {
        let col = cat_cols[ci];
        let mut groups: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
        for (row, rec) in dataset.records.iter().enumerate() {
            groups
                .entry(rec.field(dataset.schema.column_ref(col)))
                .or_default()
                .push(amounts[row]);
        }
        let map = groups
            .into_iter()
            .map(|(value, mut vs)| {
                vs.sort_by(f64::total_cmp);
                (value.to_string(), statistic(strategy, &vs))
            })
            .collect();
        ColumnEncoder {
            column: dataset.schema.columns()[col].name.clone(),
            map,
        }
    });

    Ok(EncoderMap {
        strategy,
        target: "amount".into(),
        columns,
        fallback,
    })
}

/// A categorical value seen at apply time but not at fit time.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnseenValue {
    pub column: String,
    pub value: String,
    pub count: usize,
}

/// Dense row-major numeric matrix with named features and source row ids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    n_rows: usize,
    n_features: usize,
    feature_names: Vec<String>,
    row_ids: Vec<usize>,
    data: Vec<f64>,
}

impl FeatureMatrix {
    pub fn new(feature_names: Vec<String>, row_ids: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let n_features = feature_names.len();
        let n_rows = row_ids.len();
        if data.len() != n_rows * n_features {
            return Err(Error::LengthMismatch {
                context: "feature matrix data",
                expected: n_rows * n_features,
                got: data.len(),
            });
        }
        if let Some(bad) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "feature matrix contains a non-finite value at row {} feature {}",
                bad / n_features.max(1),
                bad % n_features.max(1)
            )));
        }
        Ok(FeatureMatrix {
            n_rows,
            n_features,
            feature_names,
            row_ids,
            data,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn row_ids(&self) -> &[usize] {
        &self.row_ids
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n_features..(i + 1) * self.n_features]
    }

    pub fn get(&self, row: usize, feature: usize) -> f64 {
        self.data[row * self.n_features + feature]
    }

    pub fn column(&self, feature: usize) -> Vec<f64> {
        (0..self.n_rows).map(|r| self.get(r, feature)).collect()
    }

    /// Column means, accumulated in row order.
    pub fn column_means(&self) -> Vec<f64> {
        let mut means = vec![0.0; self.n_features];
        for r in 0..self.n_rows {
            for (m, v) in means.iter_mut().zip(self.row(r)) {
                *m += v;
            }
        }
        for m in means.iter_mut() {
            *m /= self.n_rows as f64;
        }
        means
    }

    /// New matrix with the given row positions, preserving their row ids.
    pub fn select_rows(&self, rows: &[usize]) -> FeatureMatrix {
        let mut data = Vec::with_capacity(rows.len() * self.n_features);
        let mut row_ids = Vec::with_capacity(rows.len());
        for &r in rows {
            data.extend_from_slice(self.row(r));
            row_ids.push(self.row_ids[r]);
        }
        FeatureMatrix {
            n_rows: rows.len(),
            n_features: self.n_features,
            feature_names: self.feature_names.clone(),
            row_ids,
            data,
        }
    }
}

/// Applies fitted encoders; amount passes through unchanged. Unseen
/// categorical values encode as the fallback and are reported.
pub fn apply_encoding(
    dataset: &Dataset,
    encoders: &EncoderMap,
) -> Result<(FeatureMatrix, Vec<UnseenValue>)> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset("cannot encode zero records".into()));
    }
    let schema = &dataset.schema;
    let cat_cols = schema.categorical_indices();
    if cat_cols.len() != encoders.columns.len() {
        return Err(Error::LengthMismatch {
            context: "encoder column count",
            expected: cat_cols.len(),
            got: encoders.columns.len(),
        });
    }
    for (&col, enc) in cat_cols.iter().zip(&encoders.columns) {
        if schema.columns()[col].name != enc.column {
            return Err(Error::UnknownColumn(enc.column.clone()));
        }
    }

    let n = dataset.len();
    let width = schema.len();
    let mut data = vec![0.0; n * width];
    let mut unseen: BTreeMap<(usize, &str), usize> = BTreeMap::new();

    for (row, rec) in dataset.records.iter().enumerate() {
        let mut enc_iter = encoders.columns.iter();
        for col in 0..width {
            let value = if col == schema.amount_index() {
                match rec.amount {
                    Some(a) => a,
                    None => {
                        return Err(Error::MissingValue {
                            row: rec.row_id,
                            column: "amount".into(),
                        })
                    }
                }
            } else {
                let enc = enc_iter.next().expect("one encoder per categorical");
                let cell = rec.field(schema.column_ref(col));
                match enc.map.get(cell) {
                    Some(&v) => v,
                    None => {
                        *unseen.entry((col, cell)).or_default() += 1;
                        encoders.fallback
                    }
                }
            };
            data[row * width + col] = value;
        }
    }

    let unseen = unseen
        .into_iter()
        .map(|((col, value), count)| UnseenValue {
            column: schema.columns()[col].name.clone(),
            value: value.to_string(),
            count,
        })
        .collect();

    let names = schema.names().iter().map(|s| s.to_string()).collect();
    let row_ids = dataset.records.iter().map(|r| r.row_id).collect();
    Ok((FeatureMatrix::new(names, row_ids, data)?, unseen))
}

/// Per-feature normalization parameters (population standard deviation).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureNorm {
    pub name: String,
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormParams {
    pub features: Vec<FeatureNorm>,
}

impl NormParams {
    pub fn write_json<W: Write>(&self, mut w: W) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        w.write_all(text.as_bytes())?;
        Ok(())
    }
}

/// Centers every feature and scales it to unit population variance.
/// Zero-variance features map to all zeros.
pub fn gaussian_normalize(x: &FeatureMatrix) -> Result<(FeatureMatrix, NormParams)> {
    if x.n_rows() == 0 {
        return Err(Error::EmptyDataset("cannot normalize zero rows".into()));
    }
    let n = x.n_rows() as f64;
    let mut features = Vec::with_capacity(x.n_features());
    for f in 0..x.n_features() {
        let mut sum = 0.0;
        for r in 0..x.n_rows() {
            sum += x.get(r, f);
        }
        let mean = sum / n;
        let mut ss = 0.0;
        for r in 0..x.n_rows() {
            let d = x.get(r, f) - mean;
            ss += d * d;
        }
        features.push(FeatureNorm {
            name: x.feature_names()[f].clone(),
            mean,
            std: (ss / n).sqrt(),
        });
    }

    let width = x.n_features();
    let rows = map_indices(x.n_rows(), |r| {
        let mut out = Vec::with_capacity(width);
        for (f, norm) in features.iter().enumerate() {
            out.push(if norm.std == 0.0 {
                0.0
            } else {
                (x.get(r, f) - norm.mean) / norm.std
            });
        }
        out
    });
    let data: Vec<f64> = rows.into_iter().flatten().collect();
    let normalized = FeatureMatrix::new(x.feature_names().to_vec(), x.row_ids().to_vec(), data)?;
    Ok((normalized, NormParams { features }))
}

pub fn write_encoder_file(encoders: &EncoderMap, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|source| Error::FileAccess {
        path: path.to_path_buf(),
        source,
    })?;
    let mut w = std::io::BufWriter::new(file);
    w.write_all(encoders.to_json()?.as_bytes())?;
    Ok(())
}
