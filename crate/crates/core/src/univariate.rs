//! Univariate outlier detectors: IQR fences, z-score and 1-D DBSCAN.
//!
//! All three run per feature column. The union flag combines z-score and
//! DBSCAN; IQR is computed and reported alongside but kept out of the
//! union because the fences fire too eagerly on heavy-tailed amounts.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::encoding::FeatureMatrix;
use crate::error::{Error, Result};
use crate::exec::map_indices;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnivariateParams {
    pub z_threshold: f64,
    pub dbscan_eps: f64,
    pub dbscan_min_neighbors: usize,
}

impl Default for UnivariateParams {
    fn default() -> Self {
        UnivariateParams {
            z_threshold: 2.5,
            dbscan_eps: 1.0,
            dbscan_min_neighbors: 3,
        }
    }
}

/// Linear-interpolation quantile (type 7): position `p * (n - 1)` on the
/// sorted values.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    debug_assert!((0.0..=1.0).contains(&p));
    let h = p * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Tukey fences: flags values strictly outside
/// `[Q1 - 1.5 IQR, Q3 + 1.5 IQR]`. Fewer than four values cannot support
/// the quartiles, so everything passes (with a warning).
pub fn iqr_flags(values: &[f64]) -> Vec<bool> {
    if values.len() < 4 {
        log::warn!(
            "IQR detector needs at least 4 values, got {}; flagging nothing",
            values.len()
        );
        return vec![false; values.len()];
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let q1 = quantile_sorted(&sorted, 0.25);
    let q3 = quantile_sorted(&sorted, 0.75);
    let iqr = q3 - q1;
    let lower = q1 - 1.5 * iqr;
    let upper = q3 + 1.5 * iqr;
    values.iter().map(|&v| v < lower || v > upper).collect()
}

/// Flags values whose distance from the mean exceeds `threshold`
/// population standard deviations. A constant column flags nothing.
pub fn zscore_flags(values: &[f64], threshold: f64) -> Vec<bool> {
    let n = values.len();
    if n == 0 {
        return Vec::new();
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
    let std = var.sqrt();
    if std == 0.0 {
        return vec![false; n];
    }
    values
        .iter()
        .map(|&v| ((v - mean) / std).abs() > threshold)
        .collect()
}

/// One-dimensional DBSCAN noise detection.
///
/// A point is a core point when at least `min_neighbors` *other* points lie
/// within `eps` (inclusive). A non-core point within `eps` of a core point
/// is a border point. Everything else is noise and gets flagged.
pub fn dbscan1d_flags(values: &[f64], eps: f64, min_neighbors: usize) -> Vec<bool> {
    let n = values.len();
    if n == 0 {
        return Vec::new();
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let sorted: Vec<f64> = order.iter().map(|&i| values[i]).collect();

    // Two-pointer window: for each position, [lo, hi) covers values within
    // eps of sorted[p].
    let mut core = vec![false; n];
    let mut windows = Vec::with_capacity(n);
    let mut lo = 0usize;
    let mut hi = 0usize;
    for p in 0..n {
        while sorted[p] - sorted[lo] > eps {
            lo += 1;
        }
        if hi < p + 1 {
            hi = p + 1;
        }
        while hi < n && sorted[hi] - sorted[p] <= eps {
            hi += 1;
        }
        windows.push((lo, hi));
        let neighbors = hi - lo - 1; // window counts the point itself
        core[p] = neighbors >= min_neighbors;
    }

    let mut core_prefix = vec![0usize; n + 1];
    for p in 0..n {
        core_prefix[p + 1] = core_prefix[p] + core[p] as usize;
    }

    let mut flags = vec![false; n];
    for p in 0..n {
        if core[p] {
            continue;
        }
        let (lo, hi) = windows[p];
        let cores_in_reach = core_prefix[hi] - core_prefix[lo];
        if cores_in_reach == 0 {
            flags[order[p]] = true;
        }
    }
    flags
}

/// Per-feature flags from all three detectors, row-major over
/// `(row, feature)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnivariateFlagTable {
    pub n_rows: usize,
    pub feature_names: Vec<String>,
    pub iqr: Vec<bool>,
    pub zscore: Vec<bool>,
    pub dbscan: Vec<bool>,
    /// Row is flagged when z-score or DBSCAN fires on any feature.
    pub union: Vec<bool>,
}

impl UnivariateFlagTable {
    fn idx(&self, row: usize, feature: usize) -> usize {
        row * self.feature_names.len() + feature
    }

    pub fn iqr_at(&self, row: usize, feature: usize) -> bool {
        self.iqr[self.idx(row, feature)]
    }

    pub fn zscore_at(&self, row: usize, feature: usize) -> bool {
        self.zscore[self.idx(row, feature)]
    }

    pub fn dbscan_at(&self, row: usize, feature: usize) -> bool {
        self.dbscan[self.idx(row, feature)]
    }

    pub fn union_count(&self) -> usize {
        self.union.iter().filter(|&&f| f).count()
    }

    /// Long-format CSV of flagged cells: `row_id,feature,detector,flagged`.
    pub fn write_flagged_csv<W: Write>(&self, row_ids: &[usize], w: W) -> Result<()> {
        if row_ids.len() != self.n_rows {
            return Err(Error::LengthMismatch {
                context: "flag table row ids",
                expected: self.n_rows,
                got: row_ids.len(),
            });
        }
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["row_id", "feature", "detector", "flagged"])?;
        for row in 0..self.n_rows {
            for (f, name) in self.feature_names.iter().enumerate() {
                for (detector, table) in [
                    ("iqr", &self.iqr),
                    ("zscore", &self.zscore),
                    ("dbscan", &self.dbscan),
                ] {
                    if table[self.idx(row, f)] {
                        wtr.write_record([
                            row_ids[row].to_string(),
                            name.clone(),
                            detector.to_string(),
                            "true".to_string(),
                        ])?;
                    }
                }
            }
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Row-level union of the z-score and DBSCAN tables.
pub fn univariate_union(table: &UnivariateFlagTable) -> Vec<bool> {
    let width = table.feature_names.len();
    (0..table.n_rows)
        .map(|row| {
            (0..width).any(|f| table.zscore[row * width + f] || table.dbscan[row * width + f])
        })
        .collect()
}

/// Runs all three detectors on every feature column.
pub fn detect(x: &FeatureMatrix, params: &UnivariateParams) -> Result<UnivariateFlagTable> {
    if x.n_rows() == 0 {
        return Err(Error::EmptyDataset(
            "cannot run univariate detectors".into(),
        ));
    }
    if params.dbscan_eps <= 0.0 || !params.dbscan_eps.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "dbscan_eps must be positive, got {}",
            params.dbscan_eps
        )));
    }
    if params.z_threshold <= 0.0 || !params.z_threshold.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "z_threshold must be positive, got {}",
            params.z_threshold
        )));
    }

    let width = x.n_features();
    let per_feature = map_indices(width, |f| {
        let col = x.column(f);
        (
            iqr_flags(&col),
            zscore_flags(&col, params.z_threshold),
            dbscan1d_flags(&col, params.dbscan_eps, params.dbscan_min_neighbors),
        )
    });

    let n = x.n_rows();
    let mut table = UnivariateFlagTable {
        n_rows: n,
        feature_names: x.feature_names().to_vec(),
        iqr: vec![false; n * width],
        zscore: vec![false; n * width],
        dbscan: vec![false; n * width],
        union: Vec::new(),
    };
    for (f, (iqr, z, db)) in per_feature.iter().enumerate() {
        for row in 0..n {
            table.iqr[row * width + f] = iqr[row];
            table.zscore[row * width + f] = z[row];
            table.dbscan[row * width + f] = db[row];
        }
    }
    table.union = univariate_union(&table);
    Ok(table)
}
